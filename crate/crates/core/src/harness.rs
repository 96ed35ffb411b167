//! Experiment plumbing behind the `lokmeans` binary: data sources, seeded
//! replicates, aggregate metrics and report formatting.
//!
//! Within a replicate every variant starts from bit-identical centers drawn
//! from the replicate's own RNG stream. The plain K-means run of the same
//! replicate is the baseline for every improvement metric.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::{dedup_merge, filter_domain, load_csv, load_labels, synth_uniform_grid, CsvOptions};
use crate::divergence::Divergence;
use crate::engine::{init_centers, run, run_from_centers, seeded_rng, EngineConfig, Init, RunReport, Termination, Variant};
use crate::error::{Error, Result};
use crate::model::{assignment_loss, optimal_centers, Assignment, Centers, Dataset};
use crate::verify::{
    brute_force_best, certify_c_local, certify_d_local, Certificate, CertificateKind, Tolerances, BRUTE_FORCE_LIMIT,
};

/// Environment variable bounding the replicate worker pool.
pub const THREADS_ENV: &str = "LOKMEANS_THREADS";

/// `n=<N>,d=<D>` synthetic grid request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
}

impl FromStr for SynthSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (mut n, mut d) = (None, None);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("synth spec part '{part}' is not key=value")))?;
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("synth spec value '{value}' is not a positive integer")))?;
            match key.trim() {
                "n" => n = Some(value),
                "d" => d = Some(value),
                other => return Err(Error::Config(format!("unknown synth spec key '{other}'"))),
            }
        }
        match (n, d) {
            (Some(n), Some(d)) if n >= 1 && d >= 1 => Ok(SynthSpec { n, d }),
            _ => Err(Error::Config(format!("synth spec '{s}' needs n>=1 and d>=1"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// One dataset shared by every replicate.
    Fixed(Dataset),
    /// A fresh grid sample per replicate.
    Synth(SynthSpec),
}

/// Reads a CSV, merges duplicates and (unless `filter` is off) drops
/// dimensions outside the divergence domain. Returns the dropped indices.
pub fn load_dataset(
    path: &Path,
    options: &CsvOptions,
    divergence: &Divergence,
    filter: bool,
) -> Result<(Dataset, Vec<usize>)> {
    let raw = load_csv(path, options)?;
    let dataset = dedup_merge(&raw)?;
    if filter {
        filter_domain(&dataset, divergence)
    } else {
        Ok((dataset, Vec::new()))
    }
}

/// Seed of the synthetic dataset used by replicate `r`.
pub fn data_seed(master: u64, replicate: u64) -> u64 {
    // splitmix64 finalizer keeps neighbouring replicates decorrelated
    let mut z = master ^ replicate.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl DataSource {
    pub fn dataset_for(&self, master_seed: u64, replicate: u64, divergence: &Divergence, filter: bool) -> Result<Dataset> {
        match self {
            DataSource::Fixed(ds) => Ok(ds.clone()),
            DataSource::Synth(spec) => {
                let ds = synth_uniform_grid(spec.n, spec.d, data_seed(master_seed, replicate))?;
                if filter {
                    Ok(filter_domain(&ds, divergence)?.0)
                } else {
                    Ok(ds)
                }
            }
        }
    }
}

/// Thread pool sized from `LOKMEANS_THREADS` (all cores when unset).
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("{THREADS_ENV}='{v}' is not a thread count")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))
}

/// The five-point instance on the line and its K-means starting centers.
pub fn counterexample_dataset() -> Dataset {
    Dataset::unweighted(vec![vec![-4.0], vec![-2.0], vec![0.0], vec![1.5], vec![2.5]])
        .expect("counterexample is valid")
}

pub fn counterexample_init() -> Centers {
    Centers::from_rows(&[vec![0.0], vec![2.5]]).expect("counterexample centers are valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub k: usize,
    pub divergence: Divergence,
    pub variants: Vec<Variant>,
    pub inits: Vec<Init>,
    pub seed: u64,
    pub replicates: usize,
    pub max_iterations: usize,
    pub tie_tolerance: f64,
    /// Drop out-of-domain dimensions of synthetic data.
    pub filter: bool,
}

impl BenchConfig {
    pub fn new(k: usize, divergence: Divergence) -> Self {
        Self {
            k,
            divergence,
            variants: vec![Variant::CLo],
            inits: vec![Init::Uniform],
            seed: 0,
            replicates: 20,
            max_iterations: EngineConfig::DEFAULT_MAX_ITERATIONS,
            tie_tolerance: EngineConfig::DEFAULT_TIE_TOLERANCE,
            filter: true,
        }
    }

    fn engine(&self, k: usize, variant: Variant, init: Init) -> EngineConfig {
        let mut cfg = EngineConfig::new(k, self.divergence.clone())
            .with_variant(variant)
            .with_init(init)
            .with_seed(self.seed);
        cfg.max_iterations = self.max_iterations;
        cfg.tie_tolerance = self.tie_tolerance;
        cfg
    }

    /// Requested variants with the `none` baseline first and no repeats.
    fn variant_list(&self) -> Vec<Variant> {
        let mut out = vec![Variant::None];
        for &v in &self.variants {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}

/// One run inside a bench.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub replicate: usize,
    pub variant: Variant,
    pub init: Init,
    pub k: usize,
    pub n: usize,
    pub final_loss: f64,
    pub iterations: usize,
    pub new_step_invocations: usize,
    pub wall_time_secs: f64,
    pub termination: Termination,
    pub initial_centers: Centers,
    pub final_labels: Vec<usize>,
}

impl RunRecord {
    fn from_report(replicate: usize, init: Init, n: usize, report: RunReport) -> Self {
        Self {
            replicate,
            variant: report.variant,
            init,
            k: report.final_assignment.k(),
            n,
            final_loss: report.final_loss,
            iterations: report.iterations,
            new_step_invocations: report.new_step_invocations,
            wall_time_secs: report.wall_time_secs,
            termination: report.termination,
            initial_centers: report.initial_centers,
            final_labels: report.final_assignment.labels().to_vec(),
        }
    }
}

/// Aggregates for one `(variant, init, K)` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub variant: Variant,
    pub init: Init,
    pub k: usize,
    pub replicates: usize,
    pub loss_mean: f64,
    /// Sample variance (divisor R - 1); 0 for a single replicate.
    pub loss_variance: f64,
    pub loss_min: f64,
    pub time_mean_seconds: f64,
    pub iterations_mean: f64,
    /// Share of replicates where the variant beat plain K-means.
    pub improvement_proportion: f64,
    /// Mean of `(F_kmeans - F_variant) / F_kmeans`, counting 0 when not improved.
    pub improvement_ratio_mean: f64,
    /// Mean of `(I_variant - I_kmeans) / I_kmeans`, counting 0 when not improved.
    pub iteration_increase_ratio_mean: f64,
    pub new_step_invocations_mean: f64,
    pub iteration_cap_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutcome {
    pub config: BenchConfig,
    pub records: Vec<RunRecord>,
    pub summaries: Vec<BenchSummary>,
}

/// Strict improvement over the baseline, ignoring rounding-level gaps.
pub fn improves(baseline: f64, loss: f64) -> bool {
    loss < baseline - 1e-12 * baseline.abs().max(1.0)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs.iter().copied());
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Runs every variant on one replicate from shared initial centers.
fn replicate_runs(
    dataset: &Dataset,
    cfg: &BenchConfig,
    k: usize,
    init: Init,
    replicate: usize,
    variants: &[Variant],
) -> Result<Vec<RunRecord>> {
    dataset.validate_for(k, &cfg.divergence)?;
    let mut rng = seeded_rng(cfg.seed, replicate as u64);
    let initial = init_centers(dataset, k, init, &cfg.divergence, &mut rng)?;
    variants
        .iter()
        .map(|&v| {
            let report = run_from_centers(dataset, &cfg.engine(k, v, init), initial.clone())?;
            Ok(RunRecord::from_report(replicate, init, dataset.len(), report))
        })
        .collect()
}

/// Aggregates per-run records. Records are sorted first, so the result does
/// not depend on the order in which runs finished.
pub fn summarize(records: &[RunRecord]) -> Vec<BenchSummary> {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.variant, r.init as u8, r.k, r.replicate));
    let mut groups: Vec<((Variant, Init, usize), Vec<&RunRecord>)> = Vec::new();
    for r in sorted {
        match groups.last_mut() {
            Some((key, group)) if *key == (r.variant, r.init, r.k) => group.push(r),
            _ => groups.push(((r.variant, r.init, r.k), vec![r])),
        }
    }
    let baseline = |init: Init, k: usize, replicate: usize| {
        records
            .iter()
            .find(|r| r.variant == Variant::None && r.init == init && r.k == k && r.replicate == replicate)
    };

    groups
        .into_iter()
        .map(|((variant, init, k), group)| {
            let losses: Vec<f64> = group.iter().map(|r| r.final_loss).collect();
            let mut improved = 0usize;
            let mut ratio_sum = 0.0;
            let mut iter_sum = 0.0;
            for r in &group {
                let Some(base) = baseline(init, k, r.replicate) else { continue };
                if improves(base.final_loss, r.final_loss) {
                    improved += 1;
                    if base.final_loss > 0.0 {
                        ratio_sum += (base.final_loss - r.final_loss) / base.final_loss;
                    }
                    iter_sum += (r.iterations as f64 - base.iterations as f64) / base.iterations as f64;
                }
            }
            let count = group.len() as f64;
            BenchSummary {
                variant,
                init,
                k,
                replicates: group.len(),
                loss_mean: mean(losses.iter().copied()),
                loss_variance: sample_variance(&losses),
                loss_min: losses.iter().copied().fold(f64::INFINITY, f64::min),
                time_mean_seconds: mean(group.iter().map(|r| r.wall_time_secs)),
                iterations_mean: mean(group.iter().map(|r| r.iterations as f64)),
                improvement_proportion: improved as f64 / count,
                improvement_ratio_mean: ratio_sum / count,
                iteration_increase_ratio_mean: iter_sum / count,
                new_step_invocations_mean: mean(group.iter().map(|r| r.new_step_invocations as f64)),
                iteration_cap_hits: group.iter().filter(|r| r.termination == Termination::IterationCap).count(),
            }
        })
        .collect()
}

/// `R` replicates of every variant and init on the given data.
pub fn bench(source: &DataSource, cfg: &BenchConfig) -> Result<BenchOutcome> {
    if cfg.replicates == 0 {
        return Err(Error::Config("replicates must be at least 1".into()));
    }
    let variants = cfg.variant_list();
    let pool = worker_pool()?;
    let per_replicate: Vec<Result<Vec<RunRecord>>> = pool.install(|| {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|r| {
                let ds = source.dataset_for(cfg.seed, r as u64, &cfg.divergence, cfg.filter)?;
                let mut out = Vec::new();
                for &init in &cfg.inits {
                    out.extend(replicate_runs(&ds, cfg, cfg.k, init, r, &variants)?);
                }
                Ok(out)
            })
            .collect()
    });
    let mut records = Vec::new();
    for chunk in per_replicate {
        records.extend(chunk?);
    }
    Ok(BenchOutcome {
        config: cfg.clone(),
        summaries: summarize(&records),
        records,
    })
}

/// One `N × K` grid per metric, rows following `ns`, columns following `ks`.
/// Ratio cells are `NaN` where no replicate improved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMatrices {
    pub variant: Variant,
    pub init: Init,
    pub ns: Vec<usize>,
    pub ks: Vec<usize>,
    pub improvement_proportion: Vec<Vec<f64>>,
    pub improvement_ratio_mean: Vec<Vec<f64>>,
    pub iteration_increase_ratio_mean: Vec<Vec<f64>>,
    pub new_step_invocations_mean: Vec<Vec<f64>>,
    /// Replicates dropped because the merged sample had no more than K points.
    pub skipped_replicates: Vec<Vec<usize>>,
}

impl SweepMatrices {
    pub const METRICS: [&'static str; 4] = [
        "improvement_proportion",
        "improvement_ratio_mean",
        "iteration_increase_ratio_mean",
        "new_step_invocations_mean",
    ];

    pub fn metric(&self, name: &str) -> Option<&Vec<Vec<f64>>> {
        match name {
            "improvement_proportion" => Some(&self.improvement_proportion),
            "improvement_ratio_mean" => Some(&self.improvement_ratio_mean),
            "iteration_increase_ratio_mean" => Some(&self.iteration_increase_ratio_mean),
            "new_step_invocations_mean" => Some(&self.new_step_invocations_mean),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub ns: Vec<usize>,
    pub ks: Vec<usize>,
    pub d: usize,
    pub bench: BenchConfig,
}

/// Synthetic `N × K` sweep comparing each requested variant with K-means.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepMatrices>> {
    let b = &cfg.bench;
    if b.replicates == 0 || cfg.ns.is_empty() || cfg.ks.is_empty() {
        return Err(Error::Config("sweep needs replicates >= 1 and non-empty N and K grids".into()));
    }
    let variants = b.variant_list();
    let pool = worker_pool()?;
    let cells: Vec<(usize, usize)> = (0..cfg.ns.len())
        .flat_map(|i| (0..cfg.ks.len()).map(move |j| (i, j)))
        .collect();
    let jobs: Vec<(usize, usize, usize)> = cells
        .iter()
        .flat_map(|&(i, j)| (0..b.replicates).map(move |r| (i, j, r)))
        .collect();

    let results: Vec<Result<Option<Vec<RunRecord>>>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, j, r)| {
                let (n, k) = (cfg.ns[i], cfg.ks[j]);
                let source = DataSource::Synth(SynthSpec { n, d: cfg.d });
                let ds = source.dataset_for(b.seed ^ ((n as u64) << 32), r as u64, &b.divergence, b.filter)?;
                if k == 0 {
                    return Err(Error::InvalidK { k, n: ds.len() });
                }
                if k >= ds.len() {
                    return Ok(None);
                }
                let mut out = Vec::new();
                for &init in &b.inits {
                    out.extend(replicate_runs(&ds, b, k, init, r, &variants)?);
                }
                Ok(Some(out))
            })
            .collect()
    });

    let mut by_cell: Vec<Vec<RunRecord>> = vec![Vec::new(); cells.len()];
    let mut skipped = vec![vec![0usize; cfg.ks.len()]; cfg.ns.len()];
    for (&(i, j, _), result) in jobs.iter().zip(results) {
        match result? {
            Some(records) => by_cell[i * cfg.ks.len() + j].extend(records),
            None => skipped[i][j] += 1,
        }
    }

    let mut out = Vec::new();
    for &variant in variants.iter().filter(|&&v| v != Variant::None || b.variants.contains(&Variant::None)) {
        for &init in &b.inits {
            let grid = || vec![vec![f64::NAN; cfg.ks.len()]; cfg.ns.len()];
            let mut m = SweepMatrices {
                variant,
                init,
                ns: cfg.ns.clone(),
                ks: cfg.ks.clone(),
                improvement_proportion: grid(),
                improvement_ratio_mean: grid(),
                iteration_increase_ratio_mean: grid(),
                new_step_invocations_mean: grid(),
                skipped_replicates: skipped.clone(),
            };
            for &(i, j) in &cells {
                let records = &by_cell[i * cfg.ks.len() + j];
                let pairs: Vec<(&RunRecord, &RunRecord)> = records
                    .iter()
                    .filter(|r| r.variant == variant && r.init == init)
                    .filter_map(|r| {
                        records
                            .iter()
                            .find(|b| b.variant == Variant::None && b.init == init && b.replicate == r.replicate)
                            .map(|b| (r, b))
                    })
                    .collect();
                if pairs.is_empty() {
                    continue;
                }
                let improved: Vec<&(&RunRecord, &RunRecord)> =
                    pairs.iter().filter(|(r, b)| improves(b.final_loss, r.final_loss)).collect();
                m.improvement_proportion[i][j] = improved.len() as f64 / pairs.len() as f64;
                m.improvement_ratio_mean[i][j] = mean(improved.iter().map(|(r, b)| (b.final_loss - r.final_loss) / b.final_loss));
                m.iteration_increase_ratio_mean[i][j] =
                    mean(improved.iter().map(|(r, b)| (r.iterations as f64 - b.iterations as f64) / b.iterations as f64));
                m.new_step_invocations_mean[i][j] = mean(improved.iter().map(|(r, _)| r.new_step_invocations as f64));
            }
            out.push(m);
        }
    }
    Ok(out)
}

/// Certificates for a final assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub c_local: Certificate,
    pub d_local: Certificate,
}

pub fn certify(dataset: &Dataset, assignment: &Assignment, divergence: &Divergence) -> Result<Certificates> {
    let centers = optimal_centers(dataset, assignment)?;
    let loss = assignment_loss(dataset, assignment, divergence);
    Ok(Certificates {
        c_local: certify_c_local(dataset, assignment, &centers, divergence, &Tolerances::default())?,
        d_local: certify_d_local(dataset, assignment, divergence, d_local_threshold(loss))?,
    })
}

/// Slack for D-local checks by full recomputation: differences of two
/// losses of size `F` carry rounding error of order `F · ε`.
pub fn d_local_threshold(loss: f64) -> f64 {
    1e-9 * loss.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub config: EngineConfig,
    pub n: usize,
    pub dim: usize,
    pub dropped_dimensions: Vec<usize>,
    pub report: RunReport,
    pub certificates: Option<Certificates>,
}

/// One seeded run plus certificates of its final assignment. Certification
/// is skipped when the final assignment still has an empty cluster.
pub fn run_with_certificates(dataset: &Dataset, config: &EngineConfig, dropped: Vec<usize>) -> Result<RunOutput> {
    let report = run(dataset, config)?;
    let certificates = certify(dataset, &report.final_assignment, &config.divergence).ok();
    Ok(RunOutput {
        config: config.clone(),
        n: dataset.len(),
        dim: dataset.dim(),
        dropped_dimensions: dropped,
        report,
        certificates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleEntry {
    pub variant: Variant,
    pub final_centers: Vec<f64>,
    pub final_labels: Vec<usize>,
    pub final_loss: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub certificates: Certificates,
    /// Loss per iteration as a percentage of the K-means final loss.
    pub normalized_trajectory: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub points: Vec<f64>,
    pub initial_centers: Vec<f64>,
    pub kmeans_final_loss: f64,
    pub entries: Vec<CounterexampleEntry>,
}

/// Runs every variant on the five-point line instance from its fixed
/// starting centers.
pub fn counterexample_report(variants: &[Variant]) -> Result<CounterexampleReport> {
    let ds = counterexample_dataset();
    let init = counterexample_init();
    let div = Divergence::SquaredEuclidean;
    let baseline = run_from_centers(&ds, &EngineConfig::new(2, div.clone()), init.clone())?;
    let scale = baseline.final_loss;
    let mut entries = Vec::new();
    for &variant in variants {
        let cfg = EngineConfig::new(2, div.clone()).with_variant(variant);
        let r = run_from_centers(&ds, &cfg, init.clone())?;
        entries.push(CounterexampleEntry {
            variant,
            final_centers: r.final_centers.rows().into_iter().map(|c| c[0]).collect(),
            final_labels: r.final_assignment.labels().to_vec(),
            final_loss: r.final_loss,
            iterations: r.iterations,
            termination: r.termination,
            certificates: certify(&ds, &r.final_assignment, &div)?,
            normalized_trajectory: r.loss_trajectory.iter().map(|l| 100.0 * l / scale).collect(),
        });
    }
    Ok(CounterexampleReport {
        points: ds.points().map(|x| x[0]).collect(),
        initial_centers: init.rows().into_iter().map(|c| c[0]).collect(),
        kmeans_final_loss: scale,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub n: usize,
    pub k: usize,
    pub loss: f64,
    pub centers: Centers,
    pub certificates: Certificates,
    /// Loss minus the global optimum, when the instance is small enough.
    pub global_gap: Option<f64>,
    pub global_loss: Option<f64>,
}

/// Certificates plus, for `K^N` within the enumeration limit, the gap to
/// the global optimum.
pub fn verify_assignment(dataset: &Dataset, assignment: &Assignment, divergence: &Divergence) -> Result<VerifyReport> {
    if assignment.len() != dataset.len() {
        return Err(Error::DimensionMismatch {
            expected: dataset.len(),
            got: assignment.len(),
        });
    }
    let centers = optimal_centers(dataset, assignment)?;
    let loss = assignment_loss(dataset, assignment, divergence);
    let small = u32::try_from(dataset.len())
        .ok()
        .and_then(|e| (assignment.k() as u64).checked_pow(e))
        .is_some_and(|t| t <= BRUTE_FORCE_LIMIT);
    let global_loss = if small {
        Some(brute_force_best(dataset, assignment.k(), divergence)?.1)
    } else {
        None
    };
    Ok(VerifyReport {
        n: dataset.len(),
        k: assignment.k(),
        loss,
        certificates: certify(dataset, assignment, divergence)?,
        centers,
        global_gap: global_loss.map(|g| loss - g),
        global_loss,
    })
}

pub fn load_assignment(path: &Path, dataset: &Dataset, k: usize) -> Result<Assignment> {
    let p = load_labels(path, k)?;
    if p.len() != dataset.len() {
        return Err(Error::Config(format!(
            "{}: {} labels for {} points",
            path.display(),
            p.len(),
            dataset.len()
        )));
    }
    Ok(p)
}

fn kind_name(kind: CertificateKind) -> &'static str {
    match kind {
        CertificateKind::CLocal => "c-local",
        CertificateKind::DLocal => "d-local",
        CertificateKind::NotLocal => "not-local",
    }
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

pub fn format_run(out: &RunOutput) -> String {
    let r = &out.report;
    let mut s = String::new();
    let _ = writeln!(s, "variant      {}", r.variant);
    let _ = writeln!(s, "points       {} (d = {})", out.n, out.dim);
    if !out.dropped_dimensions.is_empty() {
        let _ = writeln!(s, "dropped dims {:?}", out.dropped_dimensions);
    }
    let _ = writeln!(s, "termination  {:?}", r.termination);
    let _ = writeln!(s, "iterations   {}", r.iterations);
    let _ = writeln!(s, "new steps    {}", r.new_step_invocations);
    let _ = writeln!(s, "repairs      {}", r.empty_cluster_repairs);
    let _ = writeln!(s, "final loss   {:.10}", r.final_loss);
    if let Some(c) = &out.certificates {
        let _ = writeln!(s, "c-local      {}", kind_name(c.c_local.kind));
        let _ = writeln!(s, "d-local      {}", kind_name(c.d_local.kind));
    }
    let _ = writeln!(s, "labels       {:?}", r.final_assignment.labels());
    s
}

pub fn run_csv(out: &RunOutput) -> String {
    let mut s = String::from("point,label\n");
    for (n, l) in out.report.final_assignment.labels().iter().enumerate() {
        let _ = writeln!(s, "{n},{l}");
    }
    s
}

const SUMMARY_HEADER: &str = "variant,init,k,replicates,loss_mean,loss_variance_sample,loss_min,time_mean_seconds,iterations_mean,improvement_proportion,improvement_ratio_mean,iteration_increase_ratio_mean,new_step_invocations_mean,iteration_cap_hits";

pub fn bench_csv(summaries: &[BenchSummary]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for b in summaries {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            b.variant,
            b.init,
            b.k,
            b.replicates,
            b.loss_mean,
            b.loss_variance,
            b.loss_min,
            b.time_mean_seconds,
            b.iterations_mean,
            b.improvement_proportion,
            b.improvement_ratio_mean,
            b.iteration_increase_ratio_mean,
            b.new_step_invocations_mean,
            b.iteration_cap_hits
        );
    }
    s
}

pub fn format_bench(summaries: &[BenchSummary]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<9} {:<9} {:>4} {:>14} {:>12} {:>14} {:>10} {:>9} {:>8} {:>9} {:>9} {:>8}",
        "variant", "init", "k", "loss mean", "loss var*", "loss min", "time (s)", "iters", "improved", "imp ratio", "iter inc", "steps"
    );
    for b in summaries {
        let _ = writeln!(
            s,
            "{:<9} {:<9} {:>4} {:>14.6} {:>12.4e} {:>14.6} {:>10.2e} {:>9.1} {:>8.3} {:>9.4} {:>9.3} {:>8.2}",
            b.variant.name(),
            b.init.name(),
            b.k,
            b.loss_mean,
            b.loss_variance,
            b.loss_min,
            b.time_mean_seconds,
            b.iterations_mean,
            b.improvement_proportion,
            b.improvement_ratio_mean,
            b.iteration_increase_ratio_mean,
            b.new_step_invocations_mean
        );
    }
    let _ = writeln!(s, "* sample variance, divisor R - 1");
    s
}

/// CSV of one metric: header row of K values, one row per N.
pub fn matrix_csv(m: &SweepMatrices, metric: &str) -> Option<String> {
    let grid = m.metric(metric)?;
    let mut s = String::from("n\\k");
    for k in &m.ks {
        let _ = write!(s, ",{k}");
    }
    s.push('\n');
    for (row, n) in grid.iter().zip(&m.ns) {
        let _ = write!(s, "{n}");
        for v in row {
            let _ = write!(s, ",{}", fmt_num(*v));
        }
        s.push('\n');
    }
    Some(s)
}

pub fn format_sweep(matrices: &[SweepMatrices]) -> String {
    let mut s = String::new();
    for m in matrices {
        for metric in SweepMatrices::METRICS {
            let _ = writeln!(s, "# {} / {} / {}", m.variant, m.init, metric);
            s.push_str(&matrix_csv(m, metric).expect("known metric"));
        }
    }
    s
}

/// Writes each metric matrix to `<dir>/<variant>_<init>_<metric>.csv`.
pub fn write_sweep(dir: &Path, matrices: &[SweepMatrices]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for m in matrices {
        for metric in SweepMatrices::METRICS {
            let path = dir.join(format!("{}_{}_{}.csv", m.variant, m.init, metric).replace('+', "p"));
            std::fs::write(&path, matrix_csv(m, metric).expect("known metric"))
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn format_counterexample(report: &CounterexampleReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "points          {:?}", report.points);
    let _ = writeln!(s, "initial centers {:?}", report.initial_centers);
    let _ = writeln!(
        s,
        "{:<9} {:>12} {:>22} {:>5} {:>10} {:>10}  trajectory (% of K-means)",
        "variant", "final loss", "centers", "iters", "c-local", "d-local"
    );
    for e in &report.entries {
        let centers = e.final_centers.iter().map(|c| format!("{c:.4}")).collect::<Vec<_>>().join(", ");
        let traj = e.normalized_trajectory.iter().map(|t| format!("{t:.2}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(
            s,
            "{:<9} {:>12.8} {:>22} {:>5} {:>10} {:>10}  {}",
            e.variant.name(),
            e.final_loss,
            format!("({centers})"),
            e.iterations,
            kind_name(e.certificates.c_local.kind),
            kind_name(e.certificates.d_local.kind),
            traj
        );
    }
    s
}

pub fn format_verify(report: &VerifyReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "points     {}", report.n);
    let _ = writeln!(s, "clusters   {}", report.k);
    let _ = writeln!(s, "loss       {:.10}", report.loss);
    for (name, cert) in [("c-local", &report.certificates.c_local), ("d-local", &report.certificates.d_local)] {
        let _ = write!(s, "{name:<10} {}", kind_name(cert.kind));
        if let Some(reason) = &cert.reason {
            let _ = write!(s, " ({reason})");
        }
        s.push('\n');
    }
    match (report.global_loss, report.global_gap) {
        (Some(g), Some(gap)) => {
            let _ = writeln!(s, "global     {g:.10} (gap {gap:.3e})");
        }
        _ => {
            let _ = writeln!(s, "global     not computed (instance too large)");
        }
    }
    s
}
