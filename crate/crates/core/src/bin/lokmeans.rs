use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lokmeans::data_io::{load_matrix_csv, CsvOptions};
use lokmeans::harness::{self, BenchConfig, DataSource, SweepConfig, SynthSpec};
use lokmeans::{Divergence, DivergenceKind, EngineConfig, Error, Init, Result, Variant};

#[derive(Parser)]
#[command(name = "lokmeans", version, about = "Weighted Bregman K-means with locally optimal refinements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One seeded run with certificates of the final assignment.
    Run(RunArgs),
    /// Replicated comparison of variants against plain K-means.
    Bench(BenchArgs),
    /// Improvement heatmaps over a grid of N and K on synthetic data.
    Sweep(SweepArgs),
    /// The five-point instance where K-means stops at a non-local solution.
    Counterexample(OutputArgs),
    /// Certificates (and the global gap, when small) for a labels file.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with one point per row.
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    data: Option<PathBuf>,
    /// Synthetic integer grid, e.g. `n=50,d=1`.
    #[arg(long)]
    synth: Option<SynthSpec>,
    /// Zero-based column holding point weights.
    #[arg(long)]
    weights_col: Option<usize>,
    #[arg(long)]
    skip_header: bool,
    /// Keep dimensions outside the divergence domain.
    #[arg(long)]
    no_filter: bool,
}

#[derive(Args)]
struct DivergenceArgs {
    #[arg(long, default_value = "sq-euclidean")]
    divergence: DivergenceKind,
    /// Square SPD matrix as CSV (squared Mahalanobis only).
    #[arg(long)]
    mahalanobis_matrix: Option<PathBuf>,
}

impl DivergenceArgs {
    fn build(&self) -> Result<Divergence> {
        let matrix = self.mahalanobis_matrix.as_deref().map(load_matrix_csv).transpose()?;
        Divergence::from_kind(self.divergence, matrix)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Also write CSV output here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = EngineConfig::DEFAULT_MAX_ITERATIONS)]
    max_iters: usize,
    #[arg(long, default_value_t = EngineConfig::DEFAULT_TIE_TOLERANCE)]
    tie_tol: f64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    divergence: DivergenceArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "none")]
    variant: Variant,
    #[arg(long, default_value = "uniform")]
    init: Init,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    divergence: DivergenceArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Variants to compare; plain K-means always runs as the baseline.
    #[arg(long, value_delimiter = ',', default_value = "c-lo")]
    variant: Vec<Variant>,
    #[arg(long, value_delimiter = ',', default_value = "uniform")]
    init: Vec<Init>,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    replicates: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Sample sizes, one matrix row each.
    #[arg(long, value_delimiter = ',', required = true)]
    n_grid: Vec<usize>,
    /// Cluster counts, one matrix column each.
    #[arg(long, value_delimiter = ',', required = true)]
    k_grid: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[command(flatten)]
    divergence: DivergenceArgs,
    #[arg(long, value_delimiter = ',', default_value = "c-lo")]
    variant: Vec<Variant>,
    #[arg(long, value_delimiter = ',', default_value = "uniform")]
    init: Vec<Init>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    replicates: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = EngineConfig::DEFAULT_MAX_ITERATIONS)]
    max_iters: usize,
    #[arg(long, default_value_t = EngineConfig::DEFAULT_TIE_TOLERANCE)]
    tie_tol: f64,
    #[arg(long)]
    no_filter: bool,
    /// Directory receiving one CSV per metric.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    divergence: DivergenceArgs,
    /// Zero-based labels, one per point (commas or whitespace also work).
    #[arg(long)]
    labels: PathBuf,
    /// Number of clusters; defaults to the largest label plus one.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

fn csv_options(data: &DataArgs) -> CsvOptions {
    CsvOptions {
        skip_header: data.skip_header,
        weight_column: data.weights_col,
    }
}

fn source(data: &DataArgs, divergence: &Divergence) -> Result<(DataSource, Vec<usize>)> {
    match (&data.data, data.synth) {
        (Some(path), _) => {
            let (ds, dropped) = harness::load_dataset(path, &csv_options(data), divergence, !data.no_filter)?;
            Ok((DataSource::Fixed(ds), dropped))
        }
        (None, Some(spec)) => Ok((DataSource::Synth(spec), Vec::new())),
        (None, None) => Err(Error::Config("one of --data or --synth is required".into())),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let div = args.divergence.build()?;
    let (src, dropped) = source(&args.data, &div)?;
    let ds = src.dataset_for(args.solver.seed, 0, &div, !args.data.no_filter)?;
    let mut cfg = EngineConfig::new(args.solver.k as usize, div)
        .with_variant(args.variant)
        .with_init(args.init)
        .with_seed(args.solver.seed);
    cfg.max_iterations = args.solver.max_iters;
    cfg.tie_tolerance = args.solver.tie_tol;
    let out = harness::run_with_certificates(&ds, &cfg, dropped)?;
    if let Some(path) = &args.output.out {
        write_file(path, &harness::run_csv(&out))?;
    }
    if args.output.json {
        print_json(&out)
    } else {
        print!("{}", harness::format_run(&out));
        Ok(())
    }
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let div = args.divergence.build()?;
    let (src, _) = source(&args.data, &div)?;
    let mut cfg = BenchConfig::new(args.solver.k as usize, div);
    cfg.variants = args.variant;
    cfg.inits = args.init;
    cfg.seed = args.solver.seed;
    cfg.replicates = args.replicates as usize;
    cfg.max_iterations = args.solver.max_iters;
    cfg.tie_tolerance = args.solver.tie_tol;
    cfg.filter = !args.data.no_filter;
    let outcome = harness::bench(&src, &cfg)?;
    if let Some(path) = &args.output.out {
        write_file(path, &harness::bench_csv(&outcome.summaries))?;
    }
    if args.output.json {
        print_json(&outcome)
    } else {
        print!("{}", harness::format_bench(&outcome.summaries));
        Ok(())
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let mut bench = BenchConfig::new(1, args.divergence.build()?);
    bench.variants = args.variant;
    bench.inits = args.init;
    bench.seed = args.seed;
    bench.replicates = args.replicates as usize;
    bench.max_iterations = args.max_iters;
    bench.tie_tolerance = args.tie_tol;
    bench.filter = !args.no_filter;
    let cfg = SweepConfig {
        ns: args.n_grid,
        ks: args.k_grid,
        d: args.d,
        bench,
    };
    let matrices = harness::sweep(&cfg)?;
    if let Some(dir) = &args.out {
        for path in harness::write_sweep(dir, &matrices)? {
            eprintln!("wrote {}", path.display());
        }
    }
    if args.json {
        print_json(&matrices)
    } else {
        print!("{}", harness::format_sweep(&matrices));
        Ok(())
    }
}

fn cmd_counterexample(args: OutputArgs) -> Result<()> {
    let report = harness::counterexample_report(&Variant::ALL)?;
    if let Some(path) = &args.out {
        let mut csv = String::from("variant,iteration,loss,percent_of_kmeans\n");
        for e in &report.entries {
            for (i, pct) in e.normalized_trajectory.iter().enumerate() {
                csv.push_str(&format!("{},{},{},{}\n", e.variant, i + 1, pct * report.kmeans_final_loss / 100.0, pct));
            }
        }
        write_file(path, &csv)?;
    }
    if args.json {
        print_json(&report)
    } else {
        print!("{}", harness::format_counterexample(&report));
        Ok(())
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let div = args.divergence.build()?;
    let (src, _) = source(&args.data, &div)?;
    let ds = src.dataset_for(0, 0, &div, !args.data.no_filter)?;
    let k = match args.k {
        Some(k) => k as usize,
        None => {
            let probe = lokmeans::data_io::load_labels(&args.labels, usize::MAX)?;
            probe.labels().iter().max().map_or(1, |m| m + 1)
        }
    };
    let p = harness::load_assignment(&args.labels, &ds, k)?;
    let report = harness::verify_assignment(&ds, &p, &div)?;
    if let Some(path) = &args.output.out {
        let c = &report.certificates;
        let csv = format!(
            "loss,c_local,d_local,global_loss,global_gap\n{},{},{},{},{}\n",
            report.loss,
            c.c_local.is_local(),
            c.d_local.is_local(),
            report.global_loss.map_or(String::new(), |g| g.to_string()),
            report.global_gap.map_or(String::new(), |g| g.to_string()),
        );
        write_file(path, &csv)?;
    }
    if args.output.json {
        print_json(&report)
    } else {
        print!("{}", harness::format_verify(&report));
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Counterexample(a) => cmd_counterexample(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::InvalidK { .. } => 2,
                _ => 1,
            })
        }
    }
}
