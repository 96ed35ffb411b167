//! Closed-form Bregman divergences.
//!
//! Four generators are supported:
//!
//! | kind | generator | domain |
//! |---|---|---|
//! | squared Euclidean | `‖x‖²` | `ℝ^d` |
//! | squared Mahalanobis | `xᵀAx`, `A` SPD | `ℝ^d` |
//! | Kullback-Leibler | `Σ xᵢ log xᵢ` | `ℝ₊^d` (interior `ℝ₊₊^d`) |
//! | Itakura-Saito | `−Σ log xᵢ` | `ℝ₊₊^d` |
//!
//! The first argument of a divergence may lie anywhere in the domain, the
//! second must lie in its interior.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric positive definite matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpdMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SpdMatrix {
    /// Validates symmetry and positive definiteness with a Cholesky factorization.
    ///
    /// A pivot below `1e-12 * max|a_ij|` rejects the matrix.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::NotPositiveDefinite(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite("non-finite entry".into()));
        }
        let max_abs = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max_abs == 0.0 {
            return Err(Error::NotPositiveDefinite("zero matrix".into()));
        }
        let sym_tol = 1e-12 * max_abs;
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (data[i * dim + j] - data[j * dim + i]).abs() > sym_tol {
                    return Err(Error::NotPositiveDefinite(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }

        let pivot_floor = 1e-12 * max_abs;
        let mut l = vec![0.0; dim * dim];
        for j in 0..dim {
            let mut diag = data[j * dim + j];
            for p in 0..j {
                diag -= l[j * dim + p] * l[j * dim + p];
            }
            if diag.is_nan() || diag < pivot_floor {
                return Err(Error::NotPositiveDefinite(format!(
                    "pivot {j} is {diag:e}"
                )));
            }
            let root = diag.sqrt();
            l[j * dim + j] = root;
            for i in (j + 1)..dim {
                let mut s = data[i * dim + j];
                for p in 0..j {
                    s -= l[i * dim + p] * l[j * dim + p];
                }
                l[i * dim + j] = s / root;
            }
        }
        Ok(Self { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivergenceKind {
    SquaredEuclidean,
    SquaredMahalanobis,
    Kl,
    ItakuraSaito,
}

impl DivergenceKind {
    pub fn name(self) -> &'static str {
        match self {
            DivergenceKind::SquaredEuclidean => "sq-euclidean",
            DivergenceKind::SquaredMahalanobis => "mahalanobis",
            DivergenceKind::Kl => "kl",
            DivergenceKind::ItakuraSaito => "itakura-saito",
        }
    }

    /// True for divergences whose domain is restricted to the positive orthant.
    pub fn needs_positive(self) -> bool {
        matches!(self, DivergenceKind::Kl | DivergenceKind::ItakuraSaito)
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sq-euclidean" | "squared-euclidean" | "euclidean" => Ok(Self::SquaredEuclidean),
            "mahalanobis" | "squared-mahalanobis" => Ok(Self::SquaredMahalanobis),
            "kl" => Ok(Self::Kl),
            "itakura-saito" | "is" => Ok(Self::ItakuraSaito),
            other => Err(Error::Config(format!("unknown divergence '{other}'"))),
        }
    }
}

/// A Bregman divergence together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Divergence {
    SquaredEuclidean,
    SquaredMahalanobis(SpdMatrix),
    Kl,
    ItakuraSaito,
}

impl Divergence {
    /// Builds a divergence from its kind; `matrix` is required iff the kind is
    /// squared Mahalanobis.
    pub fn from_kind(kind: DivergenceKind, matrix: Option<SpdMatrix>) -> Result<Self> {
        match (kind, matrix) {
            (DivergenceKind::SquaredMahalanobis, Some(m)) => Ok(Self::SquaredMahalanobis(m)),
            (DivergenceKind::SquaredMahalanobis, None) => Err(Error::MissingMatrix(0)),
            (_, Some(_)) => Err(Error::Config(format!(
                "a mahalanobis matrix was supplied for divergence '{kind}'"
            ))),
            (DivergenceKind::SquaredEuclidean, None) => Ok(Self::SquaredEuclidean),
            (DivergenceKind::Kl, None) => Ok(Self::Kl),
            (DivergenceKind::ItakuraSaito, None) => Ok(Self::ItakuraSaito),
        }
    }

    pub fn kind(&self) -> DivergenceKind {
        match self {
            Divergence::SquaredEuclidean => DivergenceKind::SquaredEuclidean,
            Divergence::SquaredMahalanobis(_) => DivergenceKind::SquaredMahalanobis,
            Divergence::Kl => DivergenceKind::Kl,
            Divergence::ItakuraSaito => DivergenceKind::ItakuraSaito,
        }
    }

    /// Checks that the divergence is usable with `dim`-dimensional data.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            Divergence::SquaredMahalanobis(m) if m.dim() != dim => Err(Error::MissingMatrix(dim)),
            _ => Ok(()),
        }
    }

    /// Whether every coordinate of `v` is in the domain (or its interior).
    pub fn domain_contains(&self, v: &[f64], require_interior: bool) -> bool {
        self.first_violation(v, require_interior).is_none()
    }

    fn first_violation(&self, v: &[f64], require_interior: bool) -> Option<usize> {
        let ok = |x: f64| -> bool {
            match self {
                Divergence::SquaredEuclidean | Divergence::SquaredMahalanobis(_) => x.is_finite(),
                Divergence::Kl if !require_interior => x.is_finite() && x >= 0.0,
                Divergence::Kl | Divergence::ItakuraSaito => x.is_finite() && x > 0.0,
            }
        };
        v.iter().position(|&x| !ok(x))
    }

    /// `D(x, y)` with dimension and domain checks.
    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        self.check_dim(x.len())?;
        if let Some(i) = self.first_violation(x, false) {
            return Err(self.violation(i, x[i]));
        }
        if let Some(i) = self.first_violation(y, true) {
            return Err(self.violation(i, y[i]));
        }
        Ok(self.eval(x, y))
    }

    fn violation(&self, coordinate: usize, value: f64) -> Error {
        Error::DomainViolation {
            divergence: self.kind().name(),
            coordinate,
            value,
        }
    }

    /// `D(x, y)` without checks. Callers guarantee matching dimensions and
    /// in-domain arguments.
    #[inline]
    pub(crate) fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match self {
            Divergence::SquaredEuclidean => x
                .iter()
                .zip(y)
                .map(|(a, b)| {
                    let t = a - b;
                    t * t
                })
                .sum(),
            Divergence::SquaredMahalanobis(m) => {
                let d = x.len();
                let a = m.as_slice();
                let mut total = 0.0;
                for i in 0..d {
                    let di = x[i] - y[i];
                    let row = &a[i * d..(i + 1) * d];
                    let mut inner = 0.0;
                    for j in 0..d {
                        inner += row[j] * (x[j] - y[j]);
                    }
                    total += di * inner;
                }
                total
            }
            Divergence::Kl => x
                .iter()
                .zip(y)
                .map(|(&a, &b)| {
                    if a == 0.0 {
                        b
                    } else {
                        a * (a / b).ln() - a + b
                    }
                })
                .sum(),
            Divergence::ItakuraSaito => x
                .iter()
                .zip(y)
                .map(|(&a, &b)| {
                    let r = a / b;
                    r - r.ln() - 1.0
                })
                .sum(),
        }
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind().name())
    }
}
