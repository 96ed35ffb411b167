//! Clustering the same positive data under each supported divergence.

use lokmeans::{run, Dataset, Divergence, EngineConfig, SpdMatrix, Variant};

fn main() -> lokmeans::Result<()> {
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|i| {
            let t = f64::from(i);
            vec![1.0 + (t * 0.37).sin().abs() * 5.0, 1.0 + (t * 0.11).cos().abs() * 3.0]
        })
        .collect();
    let data = Dataset::unweighted(rows)?;

    let stretch = SpdMatrix::new(2, vec![4.0, 1.0, 1.0, 2.0])?;
    let divergences = [
        Divergence::SquaredEuclidean,
        Divergence::SquaredMahalanobis(stretch),
        Divergence::Kl,
        Divergence::ItakuraSaito,
    ];
    for div in divergences {
        let x = data.point(0);
        let y = data.point(1);
        println!("{:<14} D(x0, x1) = {:.6}", div.kind().name(), div.evaluate(x, y)?);
        let cfg = EngineConfig::new(4, div).with_variant(Variant::DLo).with_seed(11);
        let r = run(&data, &cfg)?;
        println!(
            "{:<14} loss {:.6} after {} iterations, {} new steps",
            "",
            r.final_loss,
            r.iterations,
            r.new_step_invocations
        );
    }
    Ok(())
}
