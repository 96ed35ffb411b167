//! The LO-K-means outer loop.
//!
//! Each outer iteration reassigns every point to its nearest center
//! (smallest index on ties), repairs empty clusters, and recomputes the
//! centers as weighted means. Once an iteration leaves the assignment
//! unchanged, the configured new step gets one chance to move a single point;
//! the run ends when it declines.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::divergence::Divergence;
use crate::error::{Error, Result};
use crate::localopt;
use crate::model::{
    assignment_loss, centers_from_stats, cluster_stats, loss_unchecked, write_mean, Assignment,
    Centers, ClusterStats, Dataset,
};

/// Which new step runs after the Lloyd iterations reach a fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Plain K-means, no new step.
    None,
    /// Tie resolution; converges to a C-local solution.
    CLo,
    /// First-improvement adjacent move; converges to a D-local solution.
    DLo,
    /// Best-improvement adjacent move; converges to a D-local solution.
    MinDLo,
    /// Adjacent-vertex descent without Lloyd steps.
    Pnx,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::None,
        Variant::CLo,
        Variant::DLo,
        Variant::MinDLo,
        Variant::Pnx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::None => "none",
            Variant::CLo => "c-lo",
            Variant::DLo => "d-lo",
            Variant::MinDLo => "min-d-lo",
            Variant::Pnx => "pnx",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Init {
    /// `k` distinct points uniformly without replacement, ignoring weights.
    #[serde(rename = "uniform")]
    Uniform,
    /// D²-weighted seeding under the configured divergence.
    #[serde(rename = "kmeans++")]
    KMeansPlusPlus,
}

impl Init {
    pub fn name(self) -> &'static str {
        match self {
            Init::Uniform => "uniform",
            Init::KMeansPlusPlus => "kmeans++",
        }
    }
}

impl fmt::Display for Init {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Init::Uniform),
            "kmeans++" | "kmeans-plus-plus" => Ok(Init::KMeansPlusPlus),
            other => Err(Error::Config(format!("unknown init '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub k: usize,
    pub divergence: Divergence,
    pub variant: Variant,
    pub init: Init,
    pub seed: u64,
    pub max_iterations: usize,
    /// Relative band for distance ties: `D_k <= min + tol * (1 + |min|)`.
    pub tie_tolerance: f64,
    /// A move is improving when its loss change is below `-decrease_threshold`.
    pub decrease_threshold: f64,
}

impl EngineConfig {
    pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;
    pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;

    pub fn new(k: usize, divergence: Divergence) -> Self {
        Self {
            k,
            divergence,
            variant: Variant::None,
            init: Init::Uniform,
            seed: 0,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            tie_tolerance: Self::DEFAULT_TIE_TOLERANCE,
            decrease_threshold: 0.0,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn check(&self, dataset: &Dataset) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        if !(self.tie_tolerance >= 0.0) || !(self.decrease_threshold >= 0.0) {
            return Err(Error::Config("tolerances must be non-negative".into()));
        }
        dataset.validate_for(self.k, &self.divergence)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub variant: Variant,
    pub initial_centers: Centers,
    pub final_assignment: Assignment,
    pub final_centers: Centers,
    pub final_loss: f64,
    /// Loss at the end of every outer iteration.
    pub loss_trajectory: Vec<f64>,
    /// Whether the assignment at the end of each iteration differs from the
    /// one before it. The first entry is always `true`.
    pub assignment_changed: Vec<bool>,
    pub iterations: usize,
    pub new_step_invocations: usize,
    pub empty_cluster_repairs: usize,
    pub wall_time_secs: f64,
    pub termination: Termination,
}

impl RunReport {
    /// Equality ignoring wall-clock time.
    pub fn same_outcome(&self, other: &RunReport) -> bool {
        let mut a = self.clone();
        a.wall_time_secs = other.wall_time_secs;
        a == *other
    }
}

/// Seeded RNG for a run; `stream` separates replicates sharing a master seed.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Picks `k` initial centers among the data points.
pub fn init_centers<R: Rng + ?Sized>(
    dataset: &Dataset,
    k: usize,
    init: Init,
    divergence: &Divergence,
    rng: &mut R,
) -> Result<Centers> {
    let n = dataset.len();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let chosen: Vec<usize> = match init {
        Init::Uniform => index::sample(rng, n, k).into_vec(),
        Init::KMeansPlusPlus => plus_plus(dataset, k, divergence, rng),
    };
    let rows: Vec<Vec<f64>> = chosen.iter().map(|&i| dataset.point(i).to_vec()).collect();
    Centers::from_rows(&rows)
}

/// Index `i` with probability `mass[i] / Σ mass`.
fn sample_mass<R: Rng + ?Sized>(mass: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    let mut r = rng.random::<f64>() * total;
    let mut last = None;
    for (i, &m) in mass.iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        last = Some(i);
        if r < m {
            return Some(i);
        }
        r -= m;
    }
    last
}

fn plus_plus<R: Rng + ?Sized>(
    dataset: &Dataset,
    k: usize,
    divergence: &Divergence,
    rng: &mut R,
) -> Vec<usize> {
    let n = dataset.len();
    let first = sample_mass(dataset.weights(), rng).expect("weights are positive");
    let mut chosen = vec![first];
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| divergence.eval(dataset.point(i), dataset.point(first)))
        .collect();
    let mut mass = vec![0.0; n];
    while chosen.len() < k {
        for i in 0..n {
            mass[i] = dataset.weight(i) * nearest[i];
        }
        for &c in &chosen {
            mass[c] = 0.0;
        }
        let next = match sample_mass(&mass, rng) {
            Some(i) => i,
            // every remaining mass underflowed; fall back to uniform over the rest
            None => {
                let rest: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
                rest[rng.random_range(0..rest.len())]
            }
        };
        chosen.push(next);
        let c = dataset.point(next);
        for (i, best) in nearest.iter_mut().enumerate() {
            let d = divergence.eval(dataset.point(i), c);
            if d < *best {
                *best = d;
            }
        }
    }
    chosen
}

/// Smallest index whose divergence is within the tie band of the minimum.
#[inline]
pub(crate) fn nearest_center(
    x: &[f64],
    centers: &Centers,
    divergence: &Divergence,
    tie_tolerance: f64,
    scratch: &mut [f64],
) -> usize {
    let mut best = f64::INFINITY;
    for (k, slot) in scratch.iter_mut().enumerate() {
        *slot = divergence.eval(x, centers.center(k));
        if *slot < best {
            best = *slot;
        }
    }
    let band = best + tie_tolerance * (1.0 + best.abs());
    scratch.iter().position(|&v| v <= band).unwrap_or(0)
}

/// Assigns each point to its nearest center, ties broken toward the smallest
/// index.
pub fn assign_step(
    dataset: &Dataset,
    centers: &Centers,
    divergence: &Divergence,
    tie_tolerance: f64,
) -> Assignment {
    let mut out = Assignment::filled(dataset.len(), centers.k());
    assign_into(dataset, centers, divergence, tie_tolerance, &mut out);
    out
}

fn assign_into(
    dataset: &Dataset,
    centers: &Centers,
    divergence: &Divergence,
    tie_tolerance: f64,
    out: &mut Assignment,
) {
    let mut scratch = vec![0.0; centers.k()];
    for n in 0..dataset.len() {
        let k = nearest_center(dataset.point(n), centers, divergence, tie_tolerance, &mut scratch);
        out.set(n, k);
    }
}

/// Fills every empty cluster by moving a point `g` out of a cluster `b` with
/// `s_b > w_g` and `x_g` different from the current mean of `b`.
///
/// Clusters are repaired in ascending order and candidates are scanned in
/// point order; no randomness is used. Returns the number of repairs.
pub fn repair_empty_clusters(
    dataset: &Dataset,
    assignment: &mut Assignment,
    stats: &mut ClusterStats,
) -> Result<usize> {
    let mut repaired = 0;
    let mut mean = vec![0.0; dataset.dim()];
    for a in 0..assignment.k() {
        if !stats.is_empty_cluster(a) {
            continue;
        }
        let mut found = None;
        for g in 0..dataset.len() {
            let b = assignment.label(g);
            let w = dataset.weight(g);
            if stats.member_count[b] < 2 || !(stats.weight_sum[b] > w) {
                continue;
            }
            write_mean(stats, b, &mut mean);
            if dataset.point(g).iter().zip(&mean).any(|(x, c)| x != c) {
                found = Some((g, b));
                break;
            }
        }
        let (g, b) = found.ok_or_else(|| {
            Error::InconsistentStats(format!("no point can be moved into empty cluster {a}"))
        })?;
        stats.apply_move(dataset, g, b, a);
        assignment.set(g, a);
        repaired += 1;
    }
    Ok(repaired)
}

/// Mutable state of one run.
pub(crate) struct RunState<'a> {
    pub dataset: &'a Dataset,
    pub divergence: &'a Divergence,
    pub assignment: Assignment,
    pub stats: ClusterStats,
    pub centers: Centers,
}

impl RunState<'_> {
    /// Centers recomputed from the sums; empty clusters keep their old center.
    fn refresh_centers(&mut self) {
        for k in 0..self.assignment.k() {
            if !self.stats.is_empty_cluster(k) {
                write_mean(&self.stats, k, self.centers.center_mut(k));
            }
        }
    }

    pub fn loss(&self) -> f64 {
        loss_unchecked(self.dataset, &self.assignment, &self.centers, self.divergence)
    }
}

/// Seeds centers from `config` and runs to convergence.
pub fn run(dataset: &Dataset, config: &EngineConfig) -> Result<RunReport> {
    config.check(dataset)?;
    let mut rng = seeded_rng(config.seed, 0);
    let initial = init_centers(dataset, config.k, config.init, &config.divergence, &mut rng)?;
    run_from_centers(dataset, config, initial)
}

/// Runs from explicit initial centers. `config.init` and `config.seed` are
/// ignored.
pub fn run_from_centers(
    dataset: &Dataset,
    config: &EngineConfig,
    initial: Centers,
) -> Result<RunReport> {
    config.check(dataset)?;
    if initial.k() != config.k || initial.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: config.k * dataset.dim(),
            got: initial.k() * initial.dim(),
        });
    }
    if let Some(k) = (0..initial.k()).find(|&k| !config.divergence.domain_contains(initial.center(k), true)) {
        return Err(Error::Config(format!("initial center {k} lies outside the divergence domain")));
    }
    if config.variant == Variant::Pnx {
        return localopt::pnx_run_from_centers(dataset, config, initial);
    }

    let started = Instant::now();
    let mut state = RunState {
        dataset,
        divergence: &config.divergence,
        assignment: Assignment::filled(dataset.len(), config.k),
        stats: cluster_stats(dataset, &Assignment::filled(dataset.len(), config.k)),
        centers: initial.clone(),
    };
    let mut previous: Option<Assignment> = None;
    let mut trajectory = Vec::new();
    let mut changed_flags = Vec::new();
    let mut iterations = 0;
    let mut new_steps = 0;
    let mut repairs = 0;
    let mut termination = Termination::IterationCap;

    while iterations < config.max_iterations {
        iterations += 1;
        assign_into(
            dataset,
            &state.centers,
            &config.divergence,
            config.tie_tolerance,
            &mut state.assignment,
        );
        state.stats = cluster_stats(dataset, &state.assignment);
        repairs += repair_empty_clusters(dataset, &mut state.assignment, &mut state.stats)?;
        state.centers = centers_from_stats(&state.stats)?;
        let mut loss = state.loss();

        let fixed_point = previous.as_ref() == Some(&state.assignment);
        if fixed_point {
            let moved = match config.variant {
                Variant::None | Variant::Pnx => None,
                Variant::CLo => localopt::c_lo_apply(&mut state, config.tie_tolerance),
                Variant::DLo => localopt::d_lo_apply(&mut state, config.decrease_threshold),
                Variant::MinDLo => localopt::min_d_lo_apply(&mut state, config.decrease_threshold),
            };
            if moved.is_none() {
                trajectory.push(loss);
                changed_flags.push(false);
                termination = Termination::Converged;
                break;
            }
            new_steps += 1;
            loss = assignment_loss(dataset, &state.assignment, &config.divergence);
            state.refresh_centers();
        }
        changed_flags.push(previous.as_ref() != Some(&state.assignment));
        trajectory.push(loss);
        previous = Some(state.assignment.clone());
    }

    Ok(RunReport {
        variant: config.variant,
        initial_centers: initial,
        final_loss: *trajectory.last().expect("at least one iteration"),
        final_assignment: state.assignment,
        final_centers: state.centers,
        loss_trajectory: trajectory,
        assignment_changed: changed_flags,
        iterations,
        new_step_invocations: new_steps,
        empty_cluster_repairs: repairs,
        wall_time_secs: started.elapsed().as_secs_f64(),
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::counterexample;
    use crate::model::optimal_centers;

    fn counterexample_init() -> Centers {
        Centers::from_rows(&[vec![0.0], vec![2.5]]).unwrap()
    }

    #[test]
    fn parse_names() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("kmeans++".parse::<Init>().unwrap(), Init::KMeansPlusPlus);
        assert!("lloyd".parse::<Variant>().is_err());
    }

    #[test]
    fn uniform_init_with_k_equal_n_is_a_permutation() {
        let ds = counterexample();
        let mut rng = seeded_rng(3, 0);
        let c = init_centers(&ds, 5, Init::Uniform, &Divergence::SquaredEuclidean, &mut rng).unwrap();
        let mut got: Vec<f64> = c.rows().into_iter().map(|r| r[0]).collect();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, vec![-4.0, -2.0, 0.0, 1.5, 2.5]);
        assert!(init_centers(&ds, 6, Init::Uniform, &Divergence::SquaredEuclidean, &mut rng).is_err());
    }

    #[test]
    fn init_is_deterministic() {
        let ds = counterexample();
        for init in [Init::Uniform, Init::KMeansPlusPlus] {
            let a = init_centers(&ds, 3, init, &Divergence::SquaredEuclidean, &mut seeded_rng(9, 2)).unwrap();
            let b = init_centers(&ds, 3, init, &Divergence::SquaredEuclidean, &mut seeded_rng(9, 2)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn plus_plus_prefers_heavy_point() {
        let ds = Dataset::new(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![1e6, 1.0, 1.0, 1.0],
        )
        .unwrap();
        let hits = (0..1000u64)
            .filter(|&s| {
                let c = init_centers(&ds, 2, Init::KMeansPlusPlus, &Divergence::SquaredEuclidean, &mut seeded_rng(s, 0))
                    .unwrap();
                c.center(0)[0] == 0.0
            })
            .count();
        assert!(hits as f64 / 1000.0 > 0.99, "heavy point first in {hits}/1000 runs");
    }

    #[test]
    fn plus_plus_never_repeats_a_point() {
        let ds = Dataset::unweighted((0..6).map(|i| vec![f64::from(i)]).collect()).unwrap();
        for s in 0..200 {
            let c = init_centers(&ds, 6, Init::KMeansPlusPlus, &Divergence::SquaredEuclidean, &mut seeded_rng(s, 0))
                .unwrap();
            let mut v: Vec<f64> = c.rows().into_iter().map(|r| r[0]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            assert_eq!(v.len(), 6);
        }
    }

    #[test]
    fn assign_step_examples() {
        let ds = counterexample();
        let p = assign_step(&ds, &counterexample_init(), &Divergence::SquaredEuclidean, 1e-9);
        assert_eq!(p.labels(), &[0, 0, 0, 1, 1]);

        // x = 0 is equidistant from -2 and 2
        let c = Centers::from_rows(&[vec![-2.0], vec![2.0]]).unwrap();
        assert_eq!(assign_step(&ds, &c, &Divergence::SquaredEuclidean, 0.0).label(2), 0);

        let one = Centers::from_rows(&[vec![0.3]]).unwrap();
        assert!(assign_step(&ds, &one, &Divergence::SquaredEuclidean, 1e-9).labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn repair_fills_single_empty_cluster() {
        let ds = counterexample();
        let mut p = Assignment::new(vec![0; 5], 2).unwrap();
        let mut s = cluster_stats(&ds, &p);
        assert_eq!(repair_empty_clusters(&ds, &mut p, &mut s).unwrap(), 1);
        assert!(s.empty_clusters().next().is_none());
        assert_eq!(s, cluster_stats(&ds, &p));
    }

    #[test]
    fn repair_is_noop_without_empty_clusters() {
        let ds = counterexample();
        let mut p = Assignment::new(vec![0, 0, 1, 1, 1], 2).unwrap();
        let mut s = cluster_stats(&ds, &p);
        assert_eq!(repair_empty_clusters(&ds, &mut p, &mut s).unwrap(), 0);
        assert_eq!(p.labels(), &[0, 0, 1, 1, 1]);
    }

    #[test]
    fn repair_many_empty_clusters_decreases_loss() {
        // the mean of {-1, 0, 1} equals the middle point, which must be skipped
        let ds = Dataset::unweighted((0..8).map(|i| vec![f64::from(i) - 1.0]).collect()).unwrap();
        let k = 5;
        let mut p = Assignment::new(vec![0; 8], k).unwrap();
        let mut s = cluster_stats(&ds, &p);
        let before = assignment_loss(&ds, &p, &Divergence::SquaredEuclidean);
        assert_eq!(repair_empty_clusters(&ds, &mut p, &mut s).unwrap(), k - 1);
        assert!(s.member_count.iter().all(|&c| c > 0));
        assert!(assignment_loss(&ds, &p, &Divergence::SquaredEuclidean) < before);

        let ds = Dataset::unweighted(vec![vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        let mut p = Assignment::new(vec![0, 0, 0], 2).unwrap();
        let mut s = cluster_stats(&ds, &p);
        repair_empty_clusters(&ds, &mut p, &mut s).unwrap();
        assert_eq!(p.labels(), &[1, 0, 0]);
    }

    #[test]
    fn kmeans_counterexample_converges_in_two_iterations() {
        let ds = counterexample();
        let cfg = EngineConfig::new(2, Divergence::SquaredEuclidean);
        let r = run_from_centers(&ds, &cfg, counterexample_init()).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert_eq!(r.iterations, 2);
        assert_eq!(r.final_assignment.labels(), &[0, 0, 0, 1, 1]);
        assert_eq!(r.final_centers.rows(), vec![vec![-2.0], vec![2.0]]);
        assert!((r.final_loss - 8.5).abs() < 1e-12);
        assert_eq!(r.new_step_invocations, 0);
    }

    #[test]
    fn c_lo_counterexample() {
        let ds = counterexample();
        let cfg = EngineConfig::new(2, Divergence::SquaredEuclidean).with_variant(Variant::CLo);
        let r = run_from_centers(&ds, &cfg, counterexample_init()).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert_eq!(r.final_assignment.labels(), &[0, 0, 1, 1, 1]);
        assert!((r.final_loss - 31.0 / 6.0).abs() < 1e-12);
        assert_eq!(r.new_step_invocations, 1);
    }

    #[test]
    fn d_lo_variants_counterexample() {
        let ds = counterexample();
        for v in [Variant::DLo, Variant::MinDLo, Variant::Pnx] {
            let cfg = EngineConfig::new(2, Divergence::SquaredEuclidean).with_variant(v);
            let r = run_from_centers(&ds, &cfg, counterexample_init()).unwrap();
            assert_eq!(r.termination, Termination::Converged, "{v}");
            assert!(r.final_loss <= 31.0 / 6.0 + 1e-12, "{v}: {}", r.final_loss);
        }
    }

    #[test]
    fn trajectory_records_changes() {
        let ds = counterexample();
        let cfg = EngineConfig::new(2, Divergence::SquaredEuclidean).with_variant(Variant::DLo);
        let r = run_from_centers(&ds, &cfg, counterexample_init()).unwrap();
        assert_eq!(r.loss_trajectory.len(), r.iterations);
        assert_eq!(r.assignment_changed.len(), r.iterations);
        assert!(r.assignment_changed[0]);
        assert!(!r.assignment_changed.last().unwrap());
        for i in 1..r.iterations {
            if r.assignment_changed[i] {
                assert!(r.loss_trajectory[i] < r.loss_trajectory[i - 1]);
            }
        }
    }

    #[test]
    fn iteration_cap_is_reported() {
        let ds = counterexample();
        let mut cfg = EngineConfig::new(2, Divergence::SquaredEuclidean).with_variant(Variant::DLo);
        cfg.max_iterations = 1;
        let r = run_from_centers(&ds, &cfg, counterexample_init()).unwrap();
        assert_eq!(r.termination, Termination::IterationCap);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn run_rejects_bad_config() {
        let ds = counterexample();
        assert!(run(&ds, &EngineConfig::new(0, Divergence::SquaredEuclidean)).is_err());
        assert!(run(&ds, &EngineConfig::new(5, Divergence::SquaredEuclidean)).is_err());
        assert!(matches!(
            run(&ds, &EngineConfig::new(2, Divergence::Kl)),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn final_state_has_distinct_centers_and_no_empty_cluster() {
        let ds = Dataset::unweighted((0..30).map(|i| vec![f64::from(i % 7), f64::from(i / 7)]).collect()).unwrap();
        for v in Variant::ALL {
            for seed in 0..10 {
                let cfg = EngineConfig::new(6, Divergence::SquaredEuclidean).with_variant(v).with_seed(seed);
                let r = run(&ds, &cfg).unwrap();
                let stats = cluster_stats(&ds, &r.final_assignment);
                assert!(stats.empty_clusters().next().is_none());
                assert_eq!(optimal_centers(&ds, &r.final_assignment).unwrap().k(), 6);
                for a in 0..6 {
                    for b in (a + 1)..6 {
                        assert!(r.final_centers.max_abs_diff(a, b) > 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_gain_moves_do_not_cycle() {
        // integer grid data where some adjacent moves have an exact zero
        // loss change that rounding makes slightly negative
        let ds = crate::data_io::synth_uniform_grid(50, 2, crate::harness::data_seed(2024, 6)).unwrap();
        let div = Divergence::SquaredEuclidean;
        let init = init_centers(&ds, 15, Init::Uniform, &div, &mut seeded_rng(2024, 6)).unwrap();
        for v in [Variant::DLo, Variant::MinDLo, Variant::Pnx] {
            let cfg = EngineConfig::new(15, div.clone()).with_variant(v);
            let r = run_from_centers(&ds, &cfg, init.clone()).unwrap();
            assert_eq!(r.termination, Termination::Converged, "{v}");
            assert!(r.iterations < 200, "{v}: {}", r.iterations);
        }
    }
}
