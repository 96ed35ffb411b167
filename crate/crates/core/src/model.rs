//! Datasets, assignments, per-cluster statistics and centers.
//!
//! Assignments are label arrays (`labels[n] = k`), never `K × N` indicator
//! matrices. Cluster indices are zero-based throughout the crate.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::divergence::Divergence;
use crate::error::{Error, Result};

/// `N` unique `d`-dimensional points with strictly positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

/// Bit pattern of a row with `-0.0` folded into `0.0`, used for exact
/// duplicate detection.
pub(crate) fn row_key(row: &[f64]) -> Vec<u64> {
    row.iter()
        .map(|&v| if v == 0.0 { 0u64 } else { v.to_bits() })
        .collect()
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Self::from_flat(dim, rows.into_iter().flatten().collect(), weights)
    }

    /// Unit weights for every row.
    pub fn unweighted(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        Self::new(rows, vec![1.0; n])
    }

    pub fn from_flat(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDataset("dimension must be at least 1".into()));
        }
        if points.is_empty() {
            return Err(Error::InvalidDataset("no points".into()));
        }
        if !points.len().is_multiple_of(dim) {
            return Err(Error::InvalidDataset(format!(
                "{} coordinates do not form rows of length {dim}",
                points.len()
            )));
        }
        let n = points.len() / dim;
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.len(),
            });
        }
        if let Some(i) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite coordinate in row {}",
                i / dim
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidDataset(format!(
                "weight of row {i} must be positive, got {}",
                weights[i]
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for (i, row) in points.chunks_exact(dim).enumerate() {
            if !seen.insert(row_key(row)) {
                return Err(Error::InvalidDataset(format!(
                    "row {i} duplicates an earlier row; merge duplicates first"
                )));
            }
        }
        Ok(Self {
            dim,
            points,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, n: usize) -> &[f64] {
        &self.points[n * self.dim..(n + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    #[inline]
    pub fn weight(&self, n: usize) -> f64 {
        self.weights[n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Checks that `k` clusters can be fitted (`1 <= k < N`) and that every
    /// point lies in the interior of the divergence domain.
    pub fn validate_for(&self, k: usize, divergence: &Divergence) -> Result<()> {
        if k == 0 || k >= self.len() {
            return Err(Error::InvalidK { k, n: self.len() });
        }
        divergence.check_dim(self.dim)?;
        for (n, p) in self.points().enumerate() {
            if !divergence.domain_contains(p, true) {
                let (coordinate, value) = p
                    .iter()
                    .copied()
                    .enumerate()
                    .find(|(_, v)| !divergence.domain_contains(&[*v], true))
                    .unwrap_or((0, f64::NAN));
                return Err(Error::DomainViolation {
                    divergence: divergence.kind().name(),
                    coordinate: n * self.dim + coordinate,
                    value,
                });
            }
        }
        Ok(())
    }
}

/// Extreme-point assignment: each point belongs to exactly one of `k` clusters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    k: usize,
    labels: Vec<usize>,
}

impl Assignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::LabelOutOfRange { index, label, k });
        }
        Ok(Self { k, labels })
    }

    pub(crate) fn filled(n: usize, k: usize) -> Self {
        Self {
            k,
            labels: vec![0; n],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn label(&self, n: usize) -> usize {
        self.labels[n]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub(crate) fn set(&mut self, n: usize, k: usize) {
        debug_assert!(k < self.k);
        self.labels[n] = k;
    }

    /// Copy of this assignment with point `n` moved to cluster `to`.
    pub fn with_move(&self, n: usize, to: usize) -> Self {
        let mut out = self.clone();
        out.set(n, to);
        out
    }
}

/// Per-cluster weight sums `s_k`, weighted coordinate sums and member counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    dim: usize,
    pub weight_sum: Vec<f64>,
    /// Row-major `K × d`.
    pub coord_sum: Vec<f64>,
    pub member_count: Vec<usize>,
}

impl ClusterStats {
    pub fn k(&self) -> usize {
        self.weight_sum.len()
    }

    pub fn coord_sum_of(&self, k: usize) -> &[f64] {
        &self.coord_sum[k * self.dim..(k + 1) * self.dim]
    }

    pub fn is_empty_cluster(&self, k: usize) -> bool {
        self.member_count[k] == 0
    }

    pub fn empty_clusters(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.k()).filter(|&k| self.member_count[k] == 0)
    }

    /// Moves point `n` between clusters in the sums only.
    pub(crate) fn apply_move(&mut self, dataset: &Dataset, n: usize, from: usize, to: usize) {
        let w = dataset.weight(n);
        let x = dataset.point(n);
        let d = self.dim;
        self.member_count[from] -= 1;
        self.member_count[to] += 1;
        self.weight_sum[to] += w;
        for (acc, xi) in self.coord_sum[to * d..(to + 1) * d].iter_mut().zip(x) {
            *acc += w * xi;
        }
        if self.member_count[from] == 0 {
            self.weight_sum[from] = 0.0;
            self.coord_sum[from * d..(from + 1) * d].fill(0.0);
        } else {
            self.weight_sum[from] -= w;
            for (acc, xi) in self.coord_sum[from * d..(from + 1) * d].iter_mut().zip(x) {
                *acc -= w * xi;
            }
        }
    }
}

/// `K` centers stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centers {
    dim: usize,
    data: Vec<f64>,
}

impl Centers {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidDataset("centers need at least one dimension".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(Self {
            dim,
            data: rows.concat(),
        })
    }

    pub(crate) fn zeros(k: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; k * dim],
        }
    }

    pub fn k(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn center(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub(crate) fn center_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks_exact(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// Largest coordinate difference between two centers.
    pub fn max_abs_diff(&self, a: usize, b: usize) -> f64 {
        self.center(a)
            .iter()
            .zip(self.center(b))
            .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
    }
}

fn check_shapes(dataset: &Dataset, assignment: &Assignment) -> Result<()> {
    if assignment.len() != dataset.len() {
        return Err(Error::DimensionMismatch {
            expected: dataset.len(),
            got: assignment.len(),
        });
    }
    Ok(())
}

/// `f(P, C) = Σ_n w_n D(x_n, c_{label(n)})`.
pub fn clustering_loss(
    dataset: &Dataset,
    assignment: &Assignment,
    centers: &Centers,
    divergence: &Divergence,
) -> Result<f64> {
    check_shapes(dataset, assignment)?;
    if centers.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: centers.dim(),
        });
    }
    if centers.k() != assignment.k() {
        return Err(Error::DimensionMismatch {
            expected: assignment.k(),
            got: centers.k(),
        });
    }
    let mut total = 0.0;
    for n in 0..dataset.len() {
        total += dataset.weight(n)
            * divergence.evaluate(dataset.point(n), centers.center(assignment.label(n)))?;
    }
    Ok(total)
}

/// Loss without domain checks; callers hold validated inputs.
pub(crate) fn loss_unchecked(
    dataset: &Dataset,
    assignment: &Assignment,
    centers: &Centers,
    divergence: &Divergence,
) -> f64 {
    (0..dataset.len())
        .map(|n| dataset.weight(n) * divergence.eval(dataset.point(n), centers.center(assignment.label(n))))
        .sum()
}

pub fn cluster_stats(dataset: &Dataset, assignment: &Assignment) -> ClusterStats {
    let k = assignment.k();
    let d = dataset.dim();
    let mut stats = ClusterStats {
        dim: d,
        weight_sum: vec![0.0; k],
        coord_sum: vec![0.0; k * d],
        member_count: vec![0; k],
    };
    for n in 0..dataset.len() {
        let c = assignment.label(n);
        let w = dataset.weight(n);
        stats.weight_sum[c] += w;
        stats.member_count[c] += 1;
        for (acc, xi) in stats.coord_sum[c * d..(c + 1) * d].iter_mut().zip(dataset.point(n)) {
            *acc += w * xi;
        }
    }
    stats
}

/// Weighted means `coord_sum[k] / weight_sum[k]`; fails on the first empty
/// cluster.
pub fn centers_from_stats(stats: &ClusterStats) -> Result<Centers> {
    let mut centers = Centers::zeros(stats.k(), stats.dim);
    for k in 0..stats.k() {
        if stats.is_empty_cluster(k) {
            return Err(Error::EmptyCluster(k));
        }
        write_mean(stats, k, centers.center_mut(k));
    }
    Ok(centers)
}

pub(crate) fn write_mean(stats: &ClusterStats, k: usize, out: &mut [f64]) {
    let s = stats.weight_sum[k];
    for (o, c) in out.iter_mut().zip(stats.coord_sum_of(k)) {
        *o = c / s;
    }
}

/// The unique loss-minimizing centers for an assignment with no empty cluster.
pub fn optimal_centers(dataset: &Dataset, assignment: &Assignment) -> Result<Centers> {
    check_shapes(dataset, assignment)?;
    centers_from_stats(&cluster_stats(dataset, assignment))
}

/// `F(P)`: loss at optimal centers. Empty clusters contribute nothing.
pub fn assignment_loss(dataset: &Dataset, assignment: &Assignment, divergence: &Divergence) -> f64 {
    let stats = cluster_stats(dataset, assignment);
    let mut centers = Centers::zeros(assignment.k(), dataset.dim());
    for k in 0..assignment.k() {
        if !stats.is_empty_cluster(k) {
            write_mean(&stats, k, centers.center_mut(k));
        }
    }
    loss_unchecked(dataset, assignment, &centers, divergence)
}

/// Outcome of [`incremental_center_update`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CenterMove {
    /// The source cluster lost its last member; its center is now stale.
    pub source_emptied: bool,
}

/// Moves point `n` from `from` to `to`, updating the sums and both centers in
/// `O(d)`:
///
/// ```text
/// c_from' = c_from − w (x − c_from) / (s_from − w)
/// c_to'   = c_to   + w (x − c_to)   / (s_to + w)
/// ```
///
/// When `n` was the only member of `from`, that center is left untouched and
/// the move reports `source_emptied`.
pub fn incremental_center_update(
    stats: &mut ClusterStats,
    centers: &mut Centers,
    assignment: &mut Assignment,
    dataset: &Dataset,
    n: usize,
    from: usize,
    to: usize,
) -> Result<CenterMove> {
    if from == to {
        return Err(Error::InvalidMove(format!("point {n} already in cluster {to}")));
    }
    if assignment.label(n) != from {
        return Err(Error::InvalidMove(format!(
            "point {n} is in cluster {}, not {from}",
            assignment.label(n)
        )));
    }
    let w = dataset.weight(n);
    let s_from = stats.weight_sum[from];
    let s_to = stats.weight_sum[to];
    let emptied = stats.member_count[from] == 1;
    if stats.member_count[from] == 0 || (!emptied && s_from - w <= 0.0) {
        return Err(Error::InconsistentStats(format!(
            "cluster {from} holds weight {s_from} with {} members; cannot remove weight {w}",
            stats.member_count[from]
        )));
    }
    let x = dataset.point(n);
    if !emptied {
        let denom = s_from - w;
        for (c, xi) in centers.center_mut(from).iter_mut().zip(x) {
            *c -= w * (xi - *c) / denom;
        }
    }
    let denom = s_to + w;
    for (c, xi) in centers.center_mut(to).iter_mut().zip(x) {
        *c += w * (xi - *c) / denom;
    }
    stats.apply_move(dataset, n, from, to);
    assignment.set(n, to);
    Ok(CenterMove {
        source_emptied: emptied,
    })
}
