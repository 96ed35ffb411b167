//! Replicated comparison of every variant against plain K-means on fresh
//! synthetic samples.

use lokmeans::harness::{bench, format_bench, BenchConfig, DataSource, SynthSpec};
use lokmeans::{Divergence, Init, Variant};

fn main() -> lokmeans::Result<()> {
    let mut cfg = BenchConfig::new(15, Divergence::SquaredEuclidean);
    cfg.variants = vec![Variant::CLo, Variant::DLo, Variant::MinDLo, Variant::Pnx];
    cfg.inits = vec![Init::Uniform, Init::KMeansPlusPlus];
    cfg.replicates = 100;
    cfg.seed = 2024;
    let outcome = bench(&DataSource::Synth(SynthSpec { n: 50, d: 2 }), &cfg)?;
    print!("{}", format_bench(&outcome.summaries));
    Ok(())
}
