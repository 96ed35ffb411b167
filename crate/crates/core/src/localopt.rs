//! New steps that run once the Lloyd iterations stall.
//!
//! All of them rely on the closed-form loss change of moving a point `g`
//! (weight `w`) from cluster `a` to cluster `b` by an amount `α`:
//!
//! ```text
//! Δ_α(g, a, b) = α w (D(x_g, c_b) − D(x_g, c_a))
//!              − (s_a − α w) D(c_a', c_a)
//!              − (s_b + α w) D(c_b', c_b)
//! ```
//!
//! where `c_a'`, `c_b'` are the centers after the move. Evaluating it costs
//! one center update per side plus four divergence evaluations.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::divergence::Divergence;
use crate::engine::{
    assign_step, init_centers, repair_empty_clusters, seeded_rng, EngineConfig, RunReport, RunState,
    Termination,
};
use crate::error::{Error, Result};
use crate::model::{
    assignment_loss, centers_from_stats, cluster_stats, incremental_center_update, Assignment, Centers,
    ClusterStats, Dataset,
};

/// A single-point move and its exact effect on the loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveDelta {
    pub point: usize,
    pub from_cluster: usize,
    pub to_cluster: usize,
    pub delta: f64,
    /// The point was the only member of its cluster.
    pub source_empties: bool,
}

/// Exact change in the loss from moving point `g` from `a` to `b` by `alpha`.
///
/// `centers` must be the optimal centers of `assignment` for clusters `a` and
/// `b`. With `alpha = 1` and `g` alone in `a`, the source term vanishes.
#[allow(clippy::too_many_arguments)]
pub fn delta_move(
    dataset: &Dataset,
    assignment: &Assignment,
    stats: &ClusterStats,
    centers: &Centers,
    divergence: &Divergence,
    g: usize,
    a: usize,
    b: usize,
    alpha: f64,
) -> Result<MoveDelta> {
    if a == b {
        return Err(Error::InvalidMove(format!("source and destination are both {a}")));
    }
    if assignment.label(g) != a {
        return Err(Error::InvalidMove(format!(
            "point {g} is in cluster {}, not {a}",
            assignment.label(g)
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidMove(format!("alpha = {alpha} outside [0, 1]")));
    }
    let mut scratch = vec![0.0; dataset.dim()];
    Ok(MoveDelta {
        point: g,
        from_cluster: a,
        to_cluster: b,
        delta: delta_raw(dataset, stats, centers, divergence, g, a, b, alpha, &mut scratch).0,
        source_empties: stats.member_count[a] == 1,
    })
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn delta_raw(
    dataset: &Dataset,
    stats: &ClusterStats,
    centers: &Centers,
    divergence: &Divergence,
    g: usize,
    a: usize,
    b: usize,
    alpha: f64,
    scratch: &mut [f64],
) -> (f64, f64) {
    if alpha == 0.0 {
        return (0.0, 0.0);
    }
    let x = dataset.point(g);
    let aw = alpha * dataset.weight(g);
    let ca = centers.center(a);
    let cb = centers.center(b);
    let (to_b, to_a) = (divergence.eval(x, cb), divergence.eval(x, ca));
    let mut delta = aw * (to_b - to_a);
    let mut magnitude = aw * (to_b + to_a);

    let rest_a = stats.weight_sum[a] - aw;
    let empties = alpha == 1.0 && stats.member_count[a] == 1;
    if !empties && rest_a > 0.0 {
        for ((s, xi), ci) in scratch.iter_mut().zip(x).zip(ca) {
            *s = ci - aw * (xi - ci) / rest_a;
        }
        let shift = rest_a * divergence.eval(scratch, ca);
        delta -= shift;
        magnitude += shift;
    }

    let grown_b = stats.weight_sum[b] + aw;
    for ((s, xi), ci) in scratch.iter_mut().zip(x).zip(cb) {
        *s = ci + aw * (xi - ci) / grown_b;
    }
    let shift = grown_b * divergence.eval(scratch, cb);
    (delta - shift, magnitude + shift)
}

/// Relative size of rounding noise in a computed `Δ`, as a fraction of the
/// summed magnitude of its terms.
pub const DELTA_NOISE: f64 = 1e-12;

/// A move improves when `Δ` is below `-threshold` and clearly beyond the
/// rounding noise of its own terms. Without the second condition, moves
/// whose exact `Δ` is zero can be taken and undone forever.
#[inline]
fn significant(delta: f64, magnitude: f64, threshold: f64) -> bool {
    delta < -threshold.max(DELTA_NOISE * magnitude)
}

/// Tie scan: the first point whose nearest-center set (within the tie band)
/// holds its own cluster and at least one other. The point moves to the
/// largest tied index, or to the smallest if it already sits in the largest.
pub(crate) fn find_tie(
    dataset: &Dataset,
    assignment: &Assignment,
    centers: &Centers,
    divergence: &Divergence,
    tie_tolerance: f64,
    skip_empty: Option<&ClusterStats>,
) -> Option<(usize, usize, usize)> {
    let k = centers.k();
    let mut dist = vec![0.0; k];
    for n in 0..dataset.len() {
        let x = dataset.point(n);
        let mut best = f64::INFINITY;
        for (c, slot) in dist.iter_mut().enumerate() {
            *slot = if skip_empty.is_some_and(|s| s.is_empty_cluster(c)) {
                f64::INFINITY
            } else {
                divergence.eval(x, centers.center(c))
            };
            best = best.min(*slot);
        }
        let band = best + tie_tolerance * (1.0 + best.abs());
        let own = assignment.label(n);
        if dist[own] > band {
            continue;
        }
        let tied: Vec<usize> = (0..k).filter(|&c| dist[c] <= band).collect();
        if tied.len() < 2 {
            continue;
        }
        let max = *tied.last().expect("non-empty");
        let to = if own == max { tied[0] } else { max };
        return Some((n, own, to));
    }
    None
}

/// C-LO: resolves the first tie found, scanning points in order.
///
/// Returns the applied move, or `None` when no point is tied (the assignment
/// is C-local if it is also a partial optimum with distinct centers).
pub fn c_lo_step(
    dataset: &Dataset,
    assignment: &mut Assignment,
    stats: &mut ClusterStats,
    centers: &mut Centers,
    divergence: &Divergence,
    tie_tolerance: f64,
) -> Option<MoveDelta> {
    let (n, from, to) = find_tie(dataset, assignment, centers, divergence, tie_tolerance, None)?;
    let mv = delta_move(dataset, assignment, stats, centers, divergence, n, from, to, 1.0)
        .expect("tie scan yields a valid move");
    incremental_center_update(stats, centers, assignment, dataset, n, from, to)
        .expect("stats consistent with assignment");
    Some(mv)
}

/// D-LO: applies the first improving move, scanning points in order and
/// destinations in index order. A move improves when `Δ₁ < -threshold` and
/// `Δ₁` exceeds the rounding noise of its terms.
pub fn d_lo_step(
    dataset: &Dataset,
    assignment: &mut Assignment,
    stats: &mut ClusterStats,
    centers: &mut Centers,
    divergence: &Divergence,
    threshold: f64,
) -> Option<MoveDelta> {
    let mv = first_improving(dataset, assignment, stats, centers, divergence, threshold, false)?;
    apply(dataset, assignment, stats, centers, mv);
    Some(mv)
}

/// Min-D-LO: applies the improving move with the smallest `Δ₁`. Ties go to
/// the smallest point index, then the smallest destination.
pub fn min_d_lo_step(
    dataset: &Dataset,
    assignment: &mut Assignment,
    stats: &mut ClusterStats,
    centers: &mut Centers,
    divergence: &Divergence,
    threshold: f64,
) -> Option<MoveDelta> {
    let mv = best_move(dataset, assignment, stats, centers, divergence, threshold)?;
    apply(dataset, assignment, stats, centers, mv);
    Some(mv)
}

fn apply(
    dataset: &Dataset,
    assignment: &mut Assignment,
    stats: &mut ClusterStats,
    centers: &mut Centers,
    mv: MoveDelta,
) {
    incremental_center_update(stats, centers, assignment, dataset, mv.point, mv.from_cluster, mv.to_cluster)
        .expect("stats consistent with assignment");
}

fn first_improving(
    dataset: &Dataset,
    assignment: &Assignment,
    stats: &ClusterStats,
    centers: &Centers,
    divergence: &Divergence,
    threshold: f64,
    keep_sources: bool,
) -> Option<MoveDelta> {
    let mut scratch = vec![0.0; dataset.dim()];
    for n in 0..dataset.len() {
        let a = assignment.label(n);
        let singleton = stats.member_count[a] == 1;
        if keep_sources && singleton {
            continue;
        }
        for b in (0..centers.k()).filter(|&b| b != a) {
            let (delta, magnitude) = delta_raw(dataset, stats, centers, divergence, n, a, b, 1.0, &mut scratch);
            if significant(delta, magnitude, threshold) {
                return Some(MoveDelta {
                    point: n,
                    from_cluster: a,
                    to_cluster: b,
                    delta,
                    source_empties: singleton,
                });
            }
        }
    }
    None
}

/// Smallest `Δ₁` among the improving adjacent moves.
pub(crate) fn best_move(
    dataset: &Dataset,
    assignment: &Assignment,
    stats: &ClusterStats,
    centers: &Centers,
    divergence: &Divergence,
    threshold: f64,
) -> Option<MoveDelta> {
    let mut scratch = vec![0.0; dataset.dim()];
    let mut best: Option<MoveDelta> = None;
    for n in 0..dataset.len() {
        let a = assignment.label(n);
        for b in (0..centers.k()).filter(|&b| b != a) {
            let (delta, magnitude) = delta_raw(dataset, stats, centers, divergence, n, a, b, 1.0, &mut scratch);
            if significant(delta, magnitude, threshold) && best.is_none_or(|m| delta < m.delta) {
                best = Some(MoveDelta {
                    point: n,
                    from_cluster: a,
                    to_cluster: b,
                    delta,
                    source_empties: stats.member_count[a] == 1,
                });
            }
        }
    }
    best
}

pub(crate) fn c_lo_apply(state: &mut RunState<'_>, tie_tolerance: f64) -> Option<MoveDelta> {
    c_lo_step(
        state.dataset,
        &mut state.assignment,
        &mut state.stats,
        &mut state.centers,
        state.divergence,
        tie_tolerance,
    )
}

pub(crate) fn d_lo_apply(state: &mut RunState<'_>, threshold: f64) -> Option<MoveDelta> {
    d_lo_step(
        state.dataset,
        &mut state.assignment,
        &mut state.stats,
        &mut state.centers,
        state.divergence,
        threshold,
    )
}

pub(crate) fn min_d_lo_apply(state: &mut RunState<'_>, threshold: f64) -> Option<MoveDelta> {
    min_d_lo_step(
        state.dataset,
        &mut state.assignment,
        &mut state.stats,
        &mut state.centers,
        state.divergence,
        threshold,
    )
}

/// Adjacent-vertex descent: one assignment step from the seeded centers,
/// then repeatedly apply the first improving single-point move until none
/// exists. Every iteration after the first is exactly one move.
pub fn pnx_run(dataset: &Dataset, config: &EngineConfig) -> Result<RunReport> {
    dataset.validate_for(config.k, &config.divergence)?;
    let mut rng = seeded_rng(config.seed, 0);
    let initial = init_centers(dataset, config.k, config.init, &config.divergence, &mut rng)?;
    pnx_run_from_centers(dataset, config, initial)
}

pub(crate) fn pnx_run_from_centers(
    dataset: &Dataset,
    config: &EngineConfig,
    initial: Centers,
) -> Result<RunReport> {
    dataset.validate_for(config.k, &config.divergence)?;
    let started = Instant::now();
    let div = &config.divergence;
    let mut assignment = assign_step(dataset, &initial, div, config.tie_tolerance);
    let mut stats = cluster_stats(dataset, &assignment);
    let repairs = repair_empty_clusters(dataset, &mut assignment, &mut stats)?;

    let mut trajectory = vec![assignment_loss(dataset, &assignment, div)];
    let mut changed = vec![true];
    let mut iterations = 1;
    let mut moves = 0;
    let mut termination = Termination::IterationCap;
    let mut centers = centers_from_stats(&stats)?;
    while iterations < config.max_iterations {
        // Moving a sole member never lowers the loss in exact arithmetic, so
        // such moves are skipped to keep every cluster populated.
        let Some(mv) = first_improving(
            dataset,
            &assignment,
            &stats,
            &centers,
            div,
            config.decrease_threshold,
            true,
        ) else {
            termination = Termination::Converged;
            break;
        };
        apply(dataset, &mut assignment, &mut stats, &mut centers, mv);
        stats = cluster_stats(dataset, &assignment);
        centers = centers_from_stats(&stats)?;
        iterations += 1;
        moves += 1;
        trajectory.push(assignment_loss(dataset, &assignment, div));
        changed.push(true);
    }
    if termination == Termination::Converged {
        // closing scan found nothing: record it as an unchanged iteration
        iterations += 1;
        trajectory.push(*trajectory.last().expect("non-empty"));
        changed.push(false);
    }

    Ok(RunReport {
        variant: config.variant,
        initial_centers: initial,
        final_loss: *trajectory.last().expect("non-empty"),
        final_assignment: assignment,
        final_centers: centers,
        loss_trajectory: trajectory,
        assignment_changed: changed,
        iterations,
        new_step_invocations: moves,
        empty_cluster_repairs: repairs,
        wall_time_secs: started.elapsed().as_secs_f64(),
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::optimal_centers;
    use crate::model::tests::{counterexample, instance};
    use proptest::prelude::*;

    struct Fixed {
        ds: Dataset,
        p: Assignment,
        s: ClusterStats,
        c: Centers,
    }

    fn converged_counterexample() -> Fixed {
        let ds = counterexample();
        let p = Assignment::new(vec![0, 0, 0, 1, 1], 2).unwrap();
        let s = cluster_stats(&ds, &p);
        let c = optimal_centers(&ds, &p).unwrap();
        Fixed { ds, p, s, c }
    }

    fn recompute_delta(ds: &Dataset, p: &Assignment, div: &Divergence, g: usize, b: usize) -> f64 {
        assignment_loss(ds, &p.with_move(g, b), div) - assignment_loss(ds, p, div)
    }

    #[test]
    fn delta_examples() {
        let f = converged_counterexample();
        let div = Divergence::SquaredEuclidean;
        let d = delta_move(&f.ds, &f.p, &f.s, &f.c, &div, 2, 0, 1, 1.0).unwrap();
        assert!((d.delta - -10.0 / 3.0).abs() < 1e-12);
        assert!((recompute_delta(&f.ds, &f.p, &div, 2, 1) - -10.0 / 3.0).abs() < 1e-12);

        let d = delta_move(&f.ds, &f.p, &f.s, &f.c, &div, 3, 1, 0, 1.0).unwrap();
        assert!((d.delta - 8.6875).abs() < 1e-12);
        assert!((recompute_delta(&f.ds, &f.p, &div, 3, 0) - 8.6875).abs() < 1e-12);

        assert_eq!(delta_move(&f.ds, &f.p, &f.s, &f.c, &div, 2, 0, 1, 0.0).unwrap().delta, 0.0);
        assert!(delta_move(&f.ds, &f.p, &f.s, &f.c, &div, 2, 0, 0, 1.0).is_err());
        assert!(delta_move(&f.ds, &f.p, &f.s, &f.c, &div, 2, 1, 0, 1.0).is_err());
    }

    /// `f(P̂(α), Ĉ(α))` minus the loss at α = 0, along the relaxed path.
    fn relaxed_change(alpha: f64) -> f64 {
        let f = |a: f64| {
            4.0 * (5.0 * a - 6.0) / (a - 3.0) + (8.5 * a * a + 18.0 * a + 2.0) / ((a + 2.0) * (a + 2.0))
        };
        f(alpha) - f(0.0)
    }

    #[test]
    fn fractional_delta_follows_relaxed_path() {
        let f = converged_counterexample();
        let div = Divergence::SquaredEuclidean;
        for alpha in [1e-4, 0.1, 0.25, 0.5, 0.9, 1.0] {
            let d = delta_move(&f.ds, &f.p, &f.s, &f.c, &div, 2, 0, 1, alpha).unwrap();
            assert!((d.delta - relaxed_change(alpha)).abs() < 1e-12, "alpha {alpha}");
            assert!(d.delta < 0.0);
        }
        // the first-order terms cancel at a tie, leaving an O(α²) decrease
        let small = delta_move(&f.ds, &f.p, &f.s, &f.c, &div, 2, 0, 1, 1e-3).unwrap().delta;
        let smaller = delta_move(&f.ds, &f.p, &f.s, &f.c, &div, 2, 0, 1, 5e-4).unwrap().delta;
        assert!((small / smaller - 4.0).abs() < 0.01);
    }

    #[test]
    fn c_lo_moves_the_tied_point() {
        let mut f = converged_counterexample();
        let mv = c_lo_step(&f.ds, &mut f.p, &mut f.s, &mut f.c, &Divergence::SquaredEuclidean, 1e-9).unwrap();
        assert_eq!((mv.point, mv.from_cluster, mv.to_cluster), (2, 0, 1));
        assert_eq!(f.p.labels(), &[0, 0, 1, 1, 1]);
        assert!((f.c.center(0)[0] - -3.0).abs() < 1e-15);
        assert!((f.c.center(1)[0] - 4.0 / 3.0).abs() < 1e-15);
        // no tie left
        assert!(c_lo_step(&f.ds, &mut f.p, &mut f.s, &mut f.c, &Divergence::SquaredEuclidean, 1e-9).is_none());
    }

    #[test]
    fn c_lo_three_way_tie_goes_to_largest_index() {
        // x = 0 is at distance 1 from three centers in the plane
        let ds = Dataset::unweighted(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![-0.5, 0.75f64.sqrt()],
            vec![-0.5, -(0.75f64.sqrt())],
            vec![2.0, 0.0],
        ])
        .unwrap();
        let mut p = Assignment::new(vec![0, 0, 1, 2, 0], 3).unwrap();
        let mut s = cluster_stats(&ds, &p);
        let mut c = Centers::from_rows(&[
            vec![1.0, 0.0],
            vec![-0.5, 0.75f64.sqrt()],
            vec![-0.5, -(0.75f64.sqrt())],
        ])
        .unwrap();
        let mv = c_lo_step(&ds, &mut p, &mut s, &mut c, &Divergence::SquaredEuclidean, 1e-9).unwrap();
        assert_eq!((mv.point, mv.from_cluster, mv.to_cluster), (0, 0, 2));
    }

    #[test]
    fn c_lo_without_ties_leaves_state_untouched() {
        let ds = counterexample();
        let mut p = Assignment::new(vec![0, 0, 1, 1, 1], 2).unwrap();
        let mut s = cluster_stats(&ds, &p);
        let mut c = optimal_centers(&ds, &p).unwrap();
        let before = (p.clone(), s.clone(), c.clone());
        assert!(c_lo_step(&ds, &mut p, &mut s, &mut c, &Divergence::SquaredEuclidean, 1e-9).is_none());
        assert_eq!((p, s, c), before);
    }

    #[test]
    fn d_lo_first_improving_move() {
        let mut f = converged_counterexample();
        let mv = d_lo_step(&f.ds, &mut f.p, &mut f.s, &mut f.c, &Divergence::SquaredEuclidean, 0.0).unwrap();
        assert_eq!((mv.point, mv.from_cluster, mv.to_cluster), (2, 0, 1));
        assert!((mv.delta - -10.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn min_d_lo_counterexample_has_unique_negative_move() {
        let f = converged_counterexample();
        let div = Divergence::SquaredEuclidean;
        let negatives: Vec<(usize, usize)> = (0..5)
            .filter_map(|g| {
                let b = 1 - f.p.label(g);
                (recompute_delta(&f.ds, &f.p, &div, g, b) < 0.0).then_some((g, b))
            })
            .collect();
        assert_eq!(negatives, vec![(2, 1)]);
        let mut f = f;
        let mv = min_d_lo_step(&f.ds, &mut f.p, &mut f.s, &mut f.c, &div, 0.0).unwrap();
        assert_eq!((mv.point, mv.to_cluster), (2, 1));
    }

    #[test]
    fn min_d_lo_ties_pick_smallest_point() {
        // mirror-symmetric, so moves come in pairs with identical Δ
        let ds = Dataset::unweighted(
            [-5.0, -4.0, -1.0, 1.0, 4.0, 5.0, 0.0].iter().map(|&x| vec![x]).collect(),
        )
        .unwrap();
        let p = Assignment::new(vec![0, 0, 0, 1, 1, 1, 2], 3).unwrap();
        let s = cluster_stats(&ds, &p);
        let c = optimal_centers(&ds, &p).unwrap();
        let div = Divergence::SquaredEuclidean;
        let all: Vec<MoveDelta> = (0..7)
            .flat_map(|g| (0..3).map(move |b| (g, b)))
            .filter(|&(g, b)| b != p.label(g))
            .map(|(g, b)| delta_move(&ds, &p, &s, &c, &div, g, p.label(g), b, 1.0).unwrap())
            .collect();
        let min = all.iter().map(|m| m.delta).fold(f64::INFINITY, f64::min);
        assert!(all.iter().filter(|m| m.delta == min).count() >= 2);
        let first = all.iter().find(|m| m.delta == min).unwrap();
        assert!(min < 0.0);
        assert_eq!((first.point, first.to_cluster), (2, 2));
        assert_eq!(best_move(&ds, &p, &s, &c, &div, 0.0).unwrap(), *first);
    }

    #[test]
    fn k_equals_one_has_no_moves() {
        let ds = counterexample();
        let mut p = Assignment::new(vec![0; 5], 1).unwrap();
        let mut s = cluster_stats(&ds, &p);
        let mut c = optimal_centers(&ds, &p).unwrap();
        let div = Divergence::SquaredEuclidean;
        assert!(d_lo_step(&ds, &mut p, &mut s, &mut c, &div, 0.0).is_none());
        assert!(min_d_lo_step(&ds, &mut p, &mut s, &mut c, &div, 0.0).is_none());
        assert!(c_lo_step(&ds, &mut p, &mut s, &mut c, &div, 1e-9).is_none());
    }

    #[test]
    fn pnx_from_d_local_start_makes_no_moves() {
        let ds = counterexample();
        let cfg = EngineConfig::new(2, Divergence::SquaredEuclidean).with_variant(crate::engine::Variant::Pnx);
        // centers of the D-local split {-4,-2} | {0,1.5,2.5}
        let init = Centers::from_rows(&[vec![-3.0], vec![4.0 / 3.0]]).unwrap();
        let r = pnx_run_from_centers(&ds, &cfg, init).unwrap();
        assert_eq!(r.new_step_invocations, 0);
        assert_eq!(r.final_assignment.labels(), &[0, 0, 1, 1, 1]);
        assert_eq!(r.termination, Termination::Converged);
    }

    fn divergences(dim: usize) -> Vec<Divergence> {
        let mut a = vec![0.2; dim * dim];
        for i in 0..dim {
            a[i * dim + i] = 1.5;
        }
        vec![
            Divergence::SquaredEuclidean,
            Divergence::SquaredMahalanobis(crate::divergence::SpdMatrix::new(dim, a).unwrap()),
            Divergence::Kl,
            Divergence::ItakuraSaito,
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn delta_matches_recomputation((ds, p) in instance(10, 3, 2, false), pick in any::<prop::sample::Index>(), dest in any::<prop::sample::Index>()) {
            let s = cluster_stats(&ds, &p);
            let c = optimal_centers(&ds, &p).unwrap();
            let g = pick.index(ds.len());
            let a = p.label(g);
            let b = (a + 1 + dest.index(p.k() - 1)) % p.k();
            for div in divergences(2) {
                let d = delta_move(&ds, &p, &s, &c, &div, g, a, b, 1.0).unwrap().delta;
                let oracle = recompute_delta(&ds, &p, &div, g, b);
                let scale = assignment_loss(&ds, &p, &div).max(1.0);
                prop_assert!((d - oracle).abs() <= 1e-9 * oracle.abs().max(1e-3 * scale), "{}: {} vs {}", div, d, oracle);
            }
        }

        #[test]
        fn steps_strictly_decrease_and_stop_at_d_local((ds, p) in instance(8, 3, 2, false)) {
            let div = Divergence::SquaredEuclidean;
            for step in [d_lo_step, min_d_lo_step] {
                let mut p = p.clone();
                let mut s = cluster_stats(&ds, &p);
                let mut c = optimal_centers(&ds, &p).unwrap();
                let mut guard = 0;
                loop {
                    let before = assignment_loss(&ds, &p, &div);
                    match step(&ds, &mut p, &mut s, &mut c, &div, 0.0) {
                        Some(_) => prop_assert!(assignment_loss(&ds, &p, &div) < before),
                        None => break,
                    }
                    if s.empty_clusters().next().is_some() { break; }
                    c = optimal_centers(&ds, &p).unwrap();
                    guard += 1;
                    prop_assert!(guard < 10_000);
                }
            }
        }
    }
}
