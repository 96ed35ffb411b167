//! Local-optimality certificates and brute-force oracles for small instances.
//!
//! The D-local certifier recomputes the loss of every adjacent assignment
//! from scratch and never uses the closed-form move delta, so the two can be
//! checked against each other.

use serde::{Deserialize, Serialize};

use crate::divergence::Divergence;
use crate::error::{Error, Result};
use crate::localopt::MoveDelta;
use crate::model::{assignment_loss, cluster_stats, optimal_centers, Assignment, Centers, Dataset};

/// Largest `K^N` the exhaustive search will enumerate.
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    CLocal,
    DLocal,
    NotLocal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    /// Best improving move for D-local checks, first tied move for C-local.
    pub witness: Option<MoveDelta>,
    /// Smallest loss change over all adjacent moves (0 if there are none).
    pub worst_delta: f64,
    /// Points whose nearest-center set has more than one member.
    pub tie_count: usize,
    pub reason: Option<String>,
}

impl Certificate {
    pub fn is_local(&self) -> bool {
        self.kind != CertificateKind::NotLocal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Slack allowed when checking that a point's own cluster is nearest.
    pub partial_optimality: f64,
    /// Relative band within which two divergences count as tied.
    pub tie: f64,
    /// Max coordinate deviation allowed between given and optimal centers.
    pub center: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            partial_optimality: 1e-9,
            tie: 1e-9,
            center: 1e-8,
        }
    }
}

/// All `N(K − 1)` assignments differing from `assignment` in one label,
/// point-major and destination-minor.
pub fn adjacent_assignments(assignment: &Assignment) -> impl Iterator<Item = (usize, usize, Assignment)> + '_ {
    let k = assignment.k();
    (0..assignment.len()).flat_map(move |n| {
        let own = assignment.label(n);
        (0..k)
            .filter(move |&b| b != own)
            .map(move |b| (n, b, assignment.with_move(n, b)))
    })
}

fn require_non_empty(dataset: &Dataset, assignment: &Assignment) -> Result<()> {
    if assignment.len() != dataset.len() {
        return Err(Error::DimensionMismatch {
            expected: dataset.len(),
            got: assignment.len(),
        });
    }
    match cluster_stats(dataset, assignment).empty_clusters().next() {
        Some(k) => Err(Error::EmptyCluster(k)),
        None => Ok(()),
    }
}

/// D-local iff no adjacent assignment lowers the loss by more than
/// `threshold`. The witness is the best improving move (first one on ties).
pub fn certify_d_local(
    dataset: &Dataset,
    assignment: &Assignment,
    divergence: &Divergence,
    threshold: f64,
) -> Result<Certificate> {
    require_non_empty(dataset, assignment)?;
    let base = assignment_loss(dataset, assignment, divergence);
    let mut best: Option<MoveDelta> = None;
    for (n, b, adj) in adjacent_assignments(assignment) {
        let delta = assignment_loss(dataset, &adj, divergence) - base;
        if best.is_none_or(|m| delta < m.delta) {
            let a = assignment.label(n);
            best = Some(MoveDelta {
                point: n,
                from_cluster: a,
                to_cluster: b,
                delta,
                source_empties: assignment.labels().iter().filter(|&&l| l == a).count() == 1,
            });
        }
    }
    let worst_delta = best.map_or(0.0, |m| m.delta);
    let improving = best.filter(|m| m.delta < -threshold);
    Ok(Certificate {
        kind: if improving.is_some() {
            CertificateKind::NotLocal
        } else {
            CertificateKind::DLocal
        },
        witness: improving,
        worst_delta,
        tie_count: 0,
        reason: improving.map(|m| format!("moving point {} to cluster {} lowers the loss", m.point, m.to_cluster)),
    })
}

/// C-local iff the pair is a partial optimum, no point is tied between
/// clusters, no cluster is empty and the centers are pairwise distinct.
///
/// Coinciding centers leave the answer undetermined; that case is reported
/// as not local with an explanation in `reason`.
pub fn certify_c_local(
    dataset: &Dataset,
    assignment: &Assignment,
    centers: &Centers,
    divergence: &Divergence,
    tolerances: &Tolerances,
) -> Result<Certificate> {
    require_non_empty(dataset, assignment)?;
    if centers.k() != assignment.k() || centers.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: assignment.k() * dataset.dim(),
            got: centers.k() * centers.dim(),
        });
    }
    let optimal = optimal_centers(dataset, assignment)?;
    for k in 0..centers.k() {
        let deviation = centers
            .center(k)
            .iter()
            .zip(optimal.center(k))
            .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
            .fold(0.0, f64::max);
        if deviation > tolerances.center {
            return Err(Error::CentersNotOptimal { cluster: k, deviation });
        }
    }

    let k = centers.k();
    let mut dist = vec![0.0; k];
    let mut tie_count = 0;
    let mut first_tie: Option<MoveDelta> = None;
    let mut not_partial: Option<(usize, usize)> = None;
    let mut worst = f64::INFINITY;
    for n in 0..dataset.len() {
        let x = dataset.point(n);
        let mut min = f64::INFINITY;
        let mut argmin = 0;
        for (c, slot) in dist.iter_mut().enumerate() {
            *slot = divergence.eval(x, centers.center(c));
            if *slot < min {
                min = *slot;
                argmin = c;
            }
        }
        let own = assignment.label(n);
        if dist[own] > min + tolerances.partial_optimality * (1.0 + min.abs()) && not_partial.is_none() {
            not_partial = Some((n, argmin));
        }
        for (c, &d) in dist.iter().enumerate() {
            if c != own {
                worst = worst.min(d - dist[own]);
            }
        }
        let band = min + tolerances.tie * (1.0 + min.abs());
        let tied: Vec<usize> = (0..k).filter(|&c| dist[c] <= band).collect();
        if tied.len() >= 2 {
            tie_count += 1;
            if first_tie.is_none() && tied.contains(&own) {
                let to = if own == *tied.last().expect("non-empty") { tied[0] } else { *tied.last().expect("non-empty") };
                first_tie = Some(MoveDelta {
                    point: n,
                    from_cluster: own,
                    to_cluster: to,
                    delta: dist[to] - dist[own],
                    source_empties: false,
                });
            }
        }
    }
    let worst_delta = if worst.is_finite() { worst } else { 0.0 };

    let duplicate = (0..k)
        .flat_map(|a| ((a + 1)..k).map(move |b| (a, b)))
        .find(|&(a, b)| centers.max_abs_diff(a, b) == 0.0);

    let (kind, witness, reason) = if let Some((n, to)) = not_partial {
        (
            CertificateKind::NotLocal,
            None,
            Some(format!("point {n} is closer to center {to} than to its own")),
        )
    } else if let Some((a, b)) = duplicate {
        (
            CertificateKind::NotLocal,
            None,
            Some(format!("centers {a} and {b} coincide; local optimality is undetermined")),
        )
    } else if let Some(t) = first_tie {
        (
            CertificateKind::NotLocal,
            Some(t),
            Some(format!("point {} is tied between clusters {} and {}", t.point, t.from_cluster, t.to_cluster)),
        )
    } else {
        (CertificateKind::CLocal, None, None)
    };
    Ok(Certificate {
        kind,
        witness,
        worst_delta,
        tie_count,
        reason,
    })
}

/// Exhaustive search over all surjective assignments. Returns the first
/// minimizer in lexicographic label order.
pub fn brute_force_best(dataset: &Dataset, k: usize, divergence: &Divergence) -> Result<(Assignment, f64)> {
    let n = dataset.len();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let too_large = u32::try_from(n)
        .ok()
        .and_then(|e| (k as u64).checked_pow(e))
        .is_none_or(|total| total > BRUTE_FORCE_LIMIT);
    if too_large {
        return Err(Error::InstanceTooLarge { n, k });
    }

    let mut labels = vec![0usize; n];
    let mut counts = vec![0usize; k];
    counts[0] = n;
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        if counts.iter().all(|&c| c > 0) {
            let p = Assignment::new(labels.clone(), k)?;
            let loss = assignment_loss(dataset, &p, divergence);
            if best.as_ref().is_none_or(|(_, b)| loss < *b) {
                best = Some((labels.clone(), loss));
            }
        }
        // odometer, last position fastest
        let mut i = n;
        loop {
            if i == 0 {
                let (labels, loss) = best.expect("k <= n admits a surjective assignment");
                return Ok((Assignment::new(labels, k)?, loss));
            }
            i -= 1;
            counts[labels[i]] -= 1;
            if labels[i] + 1 < k {
                labels[i] += 1;
                counts[labels[i]] += 1;
                break;
            }
            labels[i] = 0;
            counts[0] += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, EngineConfig, Variant};
    use crate::localopt::delta_move;
    use crate::model::tests::{counterexample, instance};
    use proptest::prelude::*;

    #[test]
    fn adjacent_counts() {
        let p = Assignment::new(vec![0, 0, 0, 1, 1], 2).unwrap();
        assert_eq!(adjacent_assignments(&p).count(), 5);
        let p = Assignment::new(vec![0, 1, 2], 3).unwrap();
        let adj: Vec<_> = adjacent_assignments(&p).collect();
        assert_eq!(adj.len(), 6);
        for (n, b, q) in &adj {
            let diff: Vec<usize> = (0..3).filter(|&i| q.label(i) != p.label(i)).collect();
            assert_eq!(diff, vec![*n]);
            assert_eq!(q.label(*n), *b);
        }
        assert_eq!((adj[0].0, adj[0].1), (0, 1));
        assert_eq!((adj[1].0, adj[1].1), (0, 2));
    }

    #[test]
    fn counterexample_kmeans_output_is_not_local() {
        let ds = counterexample();
        let p = Assignment::new(vec![0, 0, 0, 1, 1], 2).unwrap();
        let div = Divergence::SquaredEuclidean;
        let d = certify_d_local(&ds, &p, &div, 0.0).unwrap();
        assert_eq!(d.kind, CertificateKind::NotLocal);
        let w = d.witness.unwrap();
        assert_eq!((w.point, w.from_cluster, w.to_cluster), (2, 0, 1));
        assert!((w.delta + 10.0 / 3.0).abs() < 1e-12);

        let c = optimal_centers(&ds, &p).unwrap();
        let cert = certify_c_local(&ds, &p, &c, &div, &Tolerances::default()).unwrap();
        assert_eq!(cert.kind, CertificateKind::NotLocal);
        assert!(cert.tie_count >= 1);
        assert_eq!(cert.witness.unwrap().point, 2);
    }

    #[test]
    fn c_lo_output_is_c_local() {
        let ds = counterexample();
        let p = Assignment::new(vec![0, 0, 1, 1, 1], 2).unwrap();
        let c = optimal_centers(&ds, &p).unwrap();
        let div = Divergence::SquaredEuclidean;
        let cert = certify_c_local(&ds, &p, &c, &div, &Tolerances::default()).unwrap();
        assert_eq!(cert.kind, CertificateKind::CLocal);
        assert_eq!(cert.tie_count, 0);
        assert_eq!(certify_d_local(&ds, &p, &div, 0.0).unwrap().kind, CertificateKind::DLocal);
    }

    #[test]
    fn single_cluster_is_c_local() {
        let ds = counterexample();
        let p = Assignment::new(vec![0; 5], 1).unwrap();
        let c = optimal_centers(&ds, &p).unwrap();
        let cert = certify_c_local(&ds, &p, &c, &Divergence::SquaredEuclidean, &Tolerances::default()).unwrap();
        assert_eq!(cert.kind, CertificateKind::CLocal);
        assert_eq!(cert.worst_delta, 0.0);
        let d = certify_d_local(&ds, &p, &Divergence::SquaredEuclidean, 0.0).unwrap();
        assert_eq!(d.kind, CertificateKind::DLocal);
    }

    #[test]
    fn singletons_are_d_local() {
        let ds = Dataset::unweighted(vec![vec![0.0], vec![1.0], vec![5.0]]).unwrap();
        let p = Assignment::new(vec![0, 1, 2], 3).unwrap();
        let d = certify_d_local(&ds, &p, &Divergence::SquaredEuclidean, 0.0).unwrap();
        assert_eq!(d.kind, CertificateKind::DLocal);
    }

    #[test]
    fn certifiers_reject_bad_input() {
        let ds = counterexample();
        let p = Assignment::new(vec![0; 5], 2).unwrap();
        assert_eq!(
            certify_d_local(&ds, &p, &Divergence::SquaredEuclidean, 0.0),
            Err(Error::EmptyCluster(1))
        );
        let p = Assignment::new(vec![0, 0, 0, 1, 1], 2).unwrap();
        let c = Centers::from_rows(&[vec![-2.0], vec![2.5]]).unwrap();
        assert!(matches!(
            certify_c_local(&ds, &p, &c, &Divergence::SquaredEuclidean, &Tolerances::default()),
            Err(Error::CentersNotOptimal { cluster: 1, .. })
        ));
    }

    #[test]
    fn coinciding_centers_are_undetermined() {
        // {-1, 1} and {-2, 2} share the mean 0
        let ds = Dataset::unweighted(vec![vec![-1.0], vec![1.0], vec![-2.0], vec![2.0]]).unwrap();
        let p = Assignment::new(vec![0, 0, 1, 1], 2).unwrap();
        let c = optimal_centers(&ds, &p).unwrap();
        let cert = certify_c_local(&ds, &p, &c, &Divergence::SquaredEuclidean, &Tolerances::default()).unwrap();
        assert_eq!(cert.kind, CertificateKind::NotLocal);
        assert!(cert.reason.unwrap().contains("undetermined"));
    }

    #[test]
    fn brute_force_examples() {
        let ds = counterexample();
        let div = Divergence::SquaredEuclidean;
        let (p, loss) = brute_force_best(&ds, 2, &div).unwrap();
        assert!(loss <= 31.0 / 6.0 + 1e-12);
        assert!((assignment_loss(&ds, &p, &div) - loss).abs() < 1e-12);

        let (_, loss) = brute_force_best(&ds, 1, &div).unwrap();
        let mean = (-4.0 - 2.0 + 0.0 + 1.5 + 2.5) / 5.0;
        let scatter: f64 = [-4.0, -2.0, 0.0, 1.5, 2.5].iter().map(|x: &f64| (x - mean).powi(2)).sum();
        assert!((loss - scatter).abs() < 1e-12);

        let (p, loss) = brute_force_best(&ds, 5, &div).unwrap();
        assert_eq!(loss, 0.0);
        let mut labels = p.labels().to_vec();
        labels.sort_unstable();
        assert_eq!(labels, vec![0, 1, 2, 3, 4]);

        let big = Dataset::unweighted((0..30).map(|i| vec![f64::from(i)]).collect()).unwrap();
        assert_eq!(
            brute_force_best(&big, 2, &div),
            Err(Error::InstanceTooLarge { n: 30, k: 2 })
        );
    }

    #[test]
    fn brute_force_result_has_no_empty_cluster() {
        let ds = counterexample();
        let (p, _) = brute_force_best(&ds, 2, &Divergence::SquaredEuclidean).unwrap();
        assert!(cluster_stats(&ds, &p).empty_clusters().next().is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn d_local_certifier_agrees_with_delta((ds, p) in instance(8, 3, 2, false)) {
            let div = Divergence::SquaredEuclidean;
            let stats = cluster_stats(&ds, &p);
            let centers = optimal_centers(&ds, &p).unwrap();
            let cert = certify_d_local(&ds, &p, &div, 1e-9).unwrap();
            let mut any_improving = false;
            for (n, b, _) in adjacent_assignments(&p) {
                let d = delta_move(&ds, &p, &stats, &centers, &div, n, p.label(n), b, 1.0).unwrap().delta;
                any_improving |= d < -1e-6;
            }
            if any_improving {
                prop_assert_eq!(cert.kind, CertificateKind::NotLocal);
            }
            if cert.kind == CertificateKind::NotLocal {
                let w = cert.witness.unwrap();
                let d = delta_move(&ds, &p, &stats, &centers, &div, w.point, w.from_cluster, w.to_cluster, 1.0).unwrap().delta;
                prop_assert!((d - w.delta).abs() <= 1e-9 * (1.0 + w.delta.abs()));
            }
        }

        #[test]
        fn brute_force_bounds_every_variant((ds, p) in instance(7, 3, 2, false), seed in 0u64..1000) {
            let k = p.k();
            let div = Divergence::SquaredEuclidean;
            let (_, best) = brute_force_best(&ds, k, &div).unwrap();
            for v in Variant::ALL {
                let cfg = EngineConfig::new(k, div.clone()).with_variant(v).with_seed(seed);
                let r = run(&ds, &cfg).unwrap();
                prop_assert!(best <= r.final_loss + 1e-9 * (1.0 + best));
            }
        }

        #[test]
        fn d_local_with_distinct_centers_is_c_local((ds, p) in instance(8, 3, 2, false), seed in 0u64..1000) {
            let k = p.k();
            let div = Divergence::SquaredEuclidean;
            let cfg = EngineConfig::new(k, div.clone()).with_variant(Variant::DLo).with_seed(seed);
            let r = run(&ds, &cfg).unwrap();
            let d = certify_d_local(&ds, &r.final_assignment, &div, 1e-9).unwrap();
            prop_assert_eq!(d.kind, CertificateKind::DLocal);
            let c = optimal_centers(&ds, &r.final_assignment).unwrap();
            let distinct = (0..k).all(|a| ((a + 1)..k).all(|b| c.max_abs_diff(a, b) > 0.0));
            if distinct {
                let cert = certify_c_local(&ds, &r.final_assignment, &c, &div, &Tolerances::default()).unwrap();
                prop_assert_eq!(cert.kind, CertificateKind::CLocal, "{:?}", cert);
            }
        }
    }
}
