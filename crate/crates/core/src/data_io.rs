//! Loading, merging and preprocessing datasets, plus the synthetic grid
//! generator.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::Rng;

use crate::divergence::{Divergence, SpdMatrix};
use crate::engine::seeded_rng;
use crate::error::{Error, Result};
use crate::model::{row_key, Assignment, Dataset};

/// Rectangular numeric table as read from disk, before duplicate merging.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub rows: Vec<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CsvOptions {
    pub skip_header: bool,
    /// Zero-based column holding point weights.
    pub weight_column: Option<usize>,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<RawTable> {
    let path = path.as_ref();
    parse_csv(open(path)?, &path.display().to_string(), options)
}

/// Parses comma-separated numeric rows. `source` names the input in error
/// messages; lines and columns in errors are one-based.
pub fn parse_csv<R: Read>(reader: R, source: &str, options: &CsvOptions) -> Result<RawTable> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(options.skip_header)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let parse_err = |line: usize, column: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        column,
        message,
    };

    let mut rows = Vec::new();
    let mut weights = options.weight_column.map(|_| Vec::new());
    let mut width = None;
    for record in csv.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, 0, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_err(line, record.len().min(w) + 1, format!("expected {w} fields, found {}", record.len())));
            }
            _ => {}
        }
        if let Some(wc) = options.weight_column {
            if wc >= record.len() {
                return Err(parse_err(line, wc + 1, format!("weight column {wc} missing")));
            }
        }
        let mut row = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field
                .parse()
                .map_err(|_| parse_err(line, col + 1, format!("'{field}' is not a number")))?;
            if !value.is_finite() {
                return Err(parse_err(line, col + 1, format!("non-finite value {field}")));
            }
            if Some(col) == options.weight_column {
                if !(value > 0.0) {
                    return Err(parse_err(line, col + 1, format!("weight {value} is not positive")));
                }
                weights.as_mut().expect("weight column set").push(value);
            } else {
                row.push(value);
            }
        }
        if row.is_empty() {
            return Err(parse_err(line, 1, "row has no coordinates".into()));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(0, 0, "no data rows".into()));
    }
    Ok(RawTable { rows, weights })
}

/// Merges exact duplicate rows, summing their weights (absent weights count
/// as 1). First occurrences keep their order.
pub fn dedup_merge(raw: &RawTable) -> Result<Dataset> {
    let mut index: HashMap<Vec<u64>, usize> = HashMap::with_capacity(raw.len());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (i, row) in raw.rows.iter().enumerate() {
        let w = raw.weights.as_ref().map_or(1.0, |ws| ws[i]);
        match index.get(&row_key(row)) {
            Some(&j) => weights[j] += w,
            None => {
                index.insert(row_key(row), rows.len());
                rows.push(row.clone());
                weights.push(w);
            }
        }
    }
    Dataset::new(rows, weights)
}

/// Merges each row into the first kept row within `epsilon` in every
/// coordinate. `epsilon = 0` behaves like [`dedup_merge`].
pub fn dedup_merge_within(raw: &RawTable, epsilon: f64) -> Result<Dataset> {
    if epsilon == 0.0 {
        return dedup_merge(raw);
    }
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("merge epsilon {epsilon} must be non-negative")));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (i, row) in raw.rows.iter().enumerate() {
        let w = raw.weights.as_ref().map_or(1.0, |ws| ws[i]);
        let close = rows
            .iter()
            .position(|kept| kept.iter().zip(row).all(|(a, b)| (a - b).abs() <= epsilon));
        match close {
            Some(j) => weights[j] += w,
            None => {
                rows.push(row.clone());
                weights.push(w);
            }
        }
    }
    Dataset::new(rows, weights)
}

/// For divergences defined only on positive vectors, drops every dimension
/// that has a non-positive value and merges the resulting duplicates.
/// Other divergences get the dataset back unchanged.
pub fn filter_domain(dataset: &Dataset, divergence: &Divergence) -> Result<(Dataset, Vec<usize>)> {
    if !divergence.kind().needs_positive() {
        return Ok((dataset.clone(), Vec::new()));
    }
    let d = dataset.dim();
    let dropped: Vec<usize> = (0..d)
        .filter(|&j| dataset.points().any(|x| !(x[j] > 0.0)))
        .collect();
    if dropped.is_empty() {
        return Ok((dataset.clone(), dropped));
    }
    if dropped.len() == d {
        return Err(Error::AllDimensionsDropped);
    }
    let kept: Vec<usize> = (0..d).filter(|j| !dropped.contains(j)).collect();
    let raw = RawTable {
        rows: dataset.points().map(|x| kept.iter().map(|&j| x[j]).collect()).collect(),
        weights: Some(dataset.weights().to_vec()),
    };
    Ok((dedup_merge(&raw)?, dropped))
}

/// `n` integer points drawn uniformly from `{1, ..., 10}^d`; repeated draws
/// are merged and weighted by their count.
pub fn synth_uniform_grid(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::Config(format!("synthetic grid needs n >= 1 and d >= 1, got n={n}, d={d}")));
    }
    let mut rng = seeded_rng(seed, 0);
    let rows = (0..n)
        .map(|_| (0..d).map(|_| f64::from(rng.random_range(1u8..=10))).collect())
        .collect();
    dedup_merge(&RawTable { rows, weights: None })
}

/// Square matrix in CSV form, no header.
pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<SpdMatrix> {
    let path = path.as_ref();
    let raw = load_csv(path, &CsvOptions::default())?;
    let dim = raw.len();
    if raw.dim() != dim {
        return Err(Error::NotPositiveDefinite(format!(
            "{}: expected a square matrix, got {dim}x{}",
            path.display(),
            raw.dim()
        )));
    }
    SpdMatrix::new(dim, raw.rows.into_iter().flatten().collect())
}

/// Zero-based labels separated by commas, whitespace or newlines.
pub fn parse_labels(text: &str, source: &str, k: usize) -> Result<Assignment> {
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for (field, token) in line.split(|c: char| c == ',' || c.is_whitespace()).enumerate() {
            if token.is_empty() {
                continue;
            }
            let label: usize = token.parse().map_err(|_| Error::Parse {
                path: source.to_string(),
                line: i + 1,
                column: field + 1,
                message: format!("'{token}' is not a cluster label"),
            })?;
            labels.push(label);
        }
    }
    Assignment::new(labels, k)
}

pub fn load_labels(path: impl AsRef<Path>, k: usize) -> Result<Assignment> {
    let path = path.as_ref();
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_labels(&text, &path.display().to_string(), k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str, options: CsvOptions) -> Result<RawTable> {
        parse_csv(text.as_bytes(), "test.csv", &options)
    }

    #[test]
    fn csv_basic() {
        let t = parse("1,2\n3,4\n5,6\n", CsvOptions::default()).unwrap();
        assert_eq!((t.len(), t.dim()), (3, 2));
        assert!(t.weights.is_none());

        let t = parse("x,y\n1,2\n3,4\n", CsvOptions { skip_header: true, weight_column: None }).unwrap();
        assert_eq!(t.len(), 2);

        let t = parse("1, 2, 0.5\n3, 4, 2\n", CsvOptions { skip_header: false, weight_column: Some(2) }).unwrap();
        assert_eq!(t.rows, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(t.weights, Some(vec![0.5, 2.0]));
    }

    #[test]
    fn csv_errors_carry_location() {
        let opts = CsvOptions { skip_header: false, weight_column: Some(1) };
        match parse("1,1\n2,0\n", opts) {
            Err(Error::Parse { line: 2, column: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse("1,2\n3,abc\n", CsvOptions::default()) {
            Err(Error::Parse { line: 2, column: 2, message, .. }) => assert!(message.contains("abc")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("1,2\n3\n", CsvOptions::default()), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("1,inf\n", CsvOptions::default()), Err(Error::Parse { .. })));
        assert!(parse("", CsvOptions::default()).is_err());
        assert!(parse("x,y\n1,2\n", CsvOptions::default()).is_err());
    }

    #[test]
    fn merge_examples() {
        let raw = RawTable {
            rows: vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![2.0, 2.0]],
            weights: None,
        };
        let ds = dedup_merge(&raw).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.weights(), &[2.0, 1.0]);

        let raw = RawTable {
            rows: vec![vec![1.0], vec![2.0], vec![3.0]],
            weights: None,
        };
        assert_eq!(dedup_merge(&raw).unwrap().weights(), &[1.0, 1.0, 1.0]);

        let raw = RawTable {
            rows: vec![vec![1.0], vec![1.0]],
            weights: Some(vec![0.5, 2.5]),
        };
        let ds = dedup_merge(&raw).unwrap();
        assert_eq!((ds.len(), ds.weight(0)), (1, 3.0));
    }

    #[test]
    fn epsilon_merge() {
        let raw = RawTable {
            rows: vec![vec![1.0], vec![1.0 + 1e-9], vec![1.1]],
            weights: None,
        };
        assert_eq!(dedup_merge_within(&raw, 1e-6).unwrap().weights(), &[2.0, 1.0]);
        assert_eq!(dedup_merge_within(&raw, 0.0).unwrap().len(), 3);
        assert!(dedup_merge_within(&raw, -1.0).is_err());
    }

    #[test]
    fn filter_domain_drops_columns() {
        // 8 columns, 4 of them containing zeros
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                let v = f64::from(i) + 1.0;
                vec![v, 0.0, v * 2.0, f64::from(i % 2), v + 0.5, 0.0, v * 3.0, f64::from(i % 3)]
            })
            .collect();
        let ds = Dataset::unweighted(rows).unwrap();
        let (out, dropped) = filter_domain(&ds, &Divergence::Kl).unwrap();
        assert_eq!(dropped, vec![1, 3, 5, 7]);
        assert_eq!(out.dim(), 4);
        assert!(out.points().all(|x| Divergence::Kl.domain_contains(x, true)));

        let neg = Dataset::unweighted(vec![vec![-1.0, 2.0], vec![3.0, -4.0]]).unwrap();
        assert_eq!(filter_domain(&neg, &Divergence::SquaredEuclidean).unwrap().0, neg);
        assert_eq!(filter_domain(&neg, &Divergence::ItakuraSaito), Err(Error::AllDimensionsDropped));

        let pos = Dataset::unweighted(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let (out, dropped) = filter_domain(&pos, &Divergence::ItakuraSaito).unwrap();
        assert!(dropped.is_empty());
        assert_eq!(out, pos);
    }

    #[test]
    fn filter_domain_merges_projected_duplicates() {
        let ds = Dataset::new(vec![vec![1.0, 0.0], vec![1.0, 5.0], vec![2.0, 5.0]], vec![1.0, 2.0, 3.0]).unwrap();
        let (out, dropped) = filter_domain(&ds, &Divergence::Kl).unwrap();
        assert_eq!(dropped, vec![1]);
        assert_eq!(out.len(), 2);
        assert_eq!(out.weights(), &[3.0, 3.0]);
    }

    #[test]
    fn synth_examples() {
        let a = synth_uniform_grid(5, 1, 42).unwrap();
        assert_eq!(a.total_weight(), 5.0);
        assert_eq!(a, synth_uniform_grid(5, 1, 42).unwrap());

        let big = synth_uniform_grid(10_000, 1, 1).unwrap();
        assert!(big.len() <= 10);
        assert_eq!(big.total_weight(), 10_000.0);

        let cube = synth_uniform_grid(10, 3, 3).unwrap();
        assert!(cube.points().flatten().all(|&v| (1.0..=10.0).contains(&v) && v.fract() == 0.0));
        assert!(synth_uniform_grid(0, 1, 0).is_err());
    }

    #[test]
    fn labels_parse() {
        let p = parse_labels("0\n0\n1 1, 0\n", "l.txt", 2).unwrap();
        assert_eq!(p.labels(), &[0, 0, 1, 1, 0]);
        assert!(matches!(parse_labels("0\nx\n", "l.txt", 2), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_labels("0 3", "l.txt", 2), Err(Error::LabelOutOfRange { .. })));
    }

    proptest! {
        #[test]
        fn merge_conserves_weight(rows in prop::collection::vec(prop::collection::vec(0u8..3, 2), 1..40),
                                  ws in prop::collection::vec(1u32..100, 40)) {
            let raw = RawTable {
                rows: rows.iter().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect(),
                weights: Some(ws[..rows.len()].iter().map(|&w| f64::from(w)).collect()),
            };
            let total: f64 = raw.weights.as_ref().unwrap().iter().sum();
            let ds = dedup_merge(&raw).unwrap();
            prop_assert_eq!(ds.total_weight(), total);
            prop_assert!(ds.len() <= 9);
        }

        #[test]
        fn synth_conserves_count(n in 1usize..500, d in 1usize..4, seed in any::<u64>()) {
            let ds = synth_uniform_grid(n, d, seed).unwrap();
            prop_assert_eq!(ds.total_weight(), n as f64);
            prop_assert_eq!(ds, synth_uniform_grid(n, d, seed).unwrap());
        }
    }
}
