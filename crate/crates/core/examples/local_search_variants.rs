//! All variants from the same seeded centers on a weighted synthetic grid.

use lokmeans::data_io::synth_uniform_grid;
use lokmeans::{init_centers, run_from_centers, seeded_rng, Divergence, EngineConfig, Init, Variant};

fn main() -> lokmeans::Result<()> {
    let data = synth_uniform_grid(200, 2, 5)?;
    println!("{} unique points, total weight {}", data.len(), data.total_weight());

    let div = Divergence::SquaredEuclidean;
    for seed in 0..5 {
        let init = init_centers(&data, 12, Init::KMeansPlusPlus, &div, &mut seeded_rng(seed, 0))?;
        print!("seed {seed}:");
        for v in Variant::ALL {
            let cfg = EngineConfig::new(12, div.clone()).with_variant(v);
            let r = run_from_centers(&data, &cfg, init.clone())?;
            print!("  {v} {:.3} ({} it)", r.final_loss, r.iterations);
        }
        println!();
    }
    Ok(())
}
