//! Log-returns, correlation matrices and the correlation distance `1 - c`.

use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::MarketPanel;

/// Daily log-returns; row `t` is the return realised on `dates[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    dates: Vec<NaiveDate>,
    symbols: Vec<String>,
    values: DMatrix<f64>,
}

impl ReturnsPanel {
    pub fn new(dates: Vec<NaiveDate>, symbols: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if values.shape() != (dates.len(), symbols.len()) {
            return Err(Error::invalid(format!(
                "returns shape {:?} does not match {} dates x {} symbols",
                values.shape(),
                dates.len(),
                symbols.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("returns contain non-finite values"));
        }
        Ok(Self {
            dates,
            symbols,
            values,
        })
    }

    /// Builds a panel with placeholder consecutive dates; handy for simulated
    /// or already-computed return matrices.
    pub fn from_matrix(symbols: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let dates = start.iter_days().take(values.nrows()).collect();
        Self::new(dates, symbols, values)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Number of return observations per symbol.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn n_symbols(&self) -> usize {
        self.values.ncols()
    }

    pub(crate) fn with_values(&self, values: DMatrix<f64>) -> Self {
        debug_assert_eq!(values.shape(), self.values.shape());
        Self {
            dates: self.dates.clone(),
            symbols: self.symbols.clone(),
            values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Correlation,
    Distance,
}

/// Which correlation coefficient to use for the pair matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    #[default]
    Spearman,
    Pearson,
}

/// Symmetric symbol-by-symbol matrix of correlations or distances.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix {
    symbols: Vec<String>,
    values: DMatrix<f64>,
    kind: MatrixKind,
}

impl PairMatrix {
    /// Validates symmetry, the diagonal and the value range for `kind`.
    pub fn new(symbols: Vec<String>, values: DMatrix<f64>, kind: MatrixKind) -> Result<Self> {
        let n = symbols.len();
        if values.shape() != (n, n) {
            return Err(Error::invalid(format!(
                "pair matrix shape {:?} for {n} symbols",
                values.shape()
            )));
        }
        let (diag, lo, hi) = match kind {
            MatrixKind::Correlation => (1.0, -1.0, 1.0),
            MatrixKind::Distance => (0.0, 0.0, 2.0),
        };
        for i in 0..n {
            if values[(i, i)] != diag {
                return Err(Error::invalid(format!("diagonal entry {i} is not {diag}")));
            }
            for j in 0..n {
                let v = values[(i, j)];
                if !(lo..=hi).contains(&v) {
                    return Err(Error::invalid(format!("entry ({i},{j}) = {v} out of range")));
                }
                if v != values[(j, i)] {
                    return Err(Error::invalid(format!("entry ({i},{j}) breaks symmetry")));
                }
            }
        }
        Ok(Self {
            symbols,
            values,
            kind,
        })
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Off-diagonal upper-triangle entries in row-major order.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.values[(i, j)]);
            }
        }
        out
    }

    pub(crate) fn expect_kind(&self, kind: MatrixKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::invalid(format!(
                "expected a {kind:?} matrix, got {:?}",
                self.kind
            )));
        }
        Ok(())
    }

    /// Dense CSV with a leading `symbol` column; values carry 17 significant
    /// digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(std::iter::once("symbol").chain(self.symbols.iter().map(String::as_str)))?;
        for (i, sym) in self.symbols.iter().enumerate() {
            let mut row = vec![sym.clone()];
            row.extend((0..self.len()).map(|j| format_sig17(self.values[(i, j)])));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

pub(crate) fn format_sig17(v: f64) -> String {
    format!("{v:.16e}")
}

/// `ln P[t+1] - ln P[t]` for every symbol.
pub fn log_returns(panel: &MarketPanel) -> Result<ReturnsPanel> {
    let l = panel.n_dates();
    if l < 2 {
        return Err(Error::invalid("log-returns need at least 2 dates"));
    }
    let p = panel.prices();
    let values = DMatrix::from_fn(l - 1, panel.n_symbols(), |t, j| {
        let (a, b) = (p[(t, j)], p[(t + 1, j)]);
        if a == b {
            0.0
        } else {
            b.ln() - a.ln()
        }
    });
    ReturnsPanel::new(panel.dates()[1..].to_vec(), panel.symbols().to_vec(), values)
}

/// Fractional ranks (1-based), ties receive the average of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && xs[idx[j]] == xs[idx[i]] {
            j += 1;
        }
        // positions i..j (0-based) share rank mean(i+1..=j)
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

pub fn spearman_matrix(returns: &ReturnsPanel) -> Result<PairMatrix> {
    let v = returns.values();
    let ranked = DMatrix::from_columns(
        &(0..v.ncols())
            .map(|j| {
                let col: Vec<f64> = v.column(j).iter().copied().collect();
                nalgebra::DVector::from_vec(average_ranks(&col))
            })
            .collect::<Vec<_>>(),
    );
    correlate_columns(&ranked, returns.symbols())
}

pub fn pearson_matrix(returns: &ReturnsPanel) -> Result<PairMatrix> {
    correlate_columns(returns.values(), returns.symbols())
}

pub fn correlation_matrix(returns: &ReturnsPanel, method: CorrelationMethod) -> Result<PairMatrix> {
    match method {
        CorrelationMethod::Spearman => spearman_matrix(returns),
        CorrelationMethod::Pearson => pearson_matrix(returns),
    }
}

/// Pearson correlation between all column pairs of `data`.
///
/// Each entry is computed independently from centred columns, so the result
/// does not depend on how pairs are scheduled across threads.
fn correlate_columns(data: &DMatrix<f64>, symbols: &[String]) -> Result<PairMatrix> {
    let (l, n) = data.shape();
    if l < 3 {
        return Err(Error::invalid(format!(
            "correlation needs at least 3 observations, got {l}"
        )));
    }
    let centred: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let col = data.column(j);
            let mean = col.iter().sum::<f64>() / l as f64;
            col.iter().map(|x| x - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centred
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    if let Some(j) = norms.iter().position(|&s| s == 0.0 || !s.is_finite()) {
        return Err(Error::ZeroVariance {
            symbol: symbols[j].clone(),
        });
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    let dot: f64 = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum();
                    (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
                })
                .collect()
        })
        .collect();
    let mut m = DMatrix::identity(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (k, &c) in row.iter().enumerate() {
            let j = i + 1 + k;
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
    }
    PairMatrix::new(symbols.to_vec(), m, MatrixKind::Correlation)
}

/// `d = 1 - c` entrywise, with an exactly zero diagonal.
pub fn distance_matrix(corr: &PairMatrix) -> Result<PairMatrix> {
    corr.expect_kind(MatrixKind::Correlation)?;
    let n = corr.len();
    let values = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            1.0 - corr.values()[(i, j)]
        }
    });
    PairMatrix::new(corr.symbols().to_vec(), values, MatrixKind::Distance)
}

/// Inverse of [`distance_matrix`]: `c = 1 - d`.
pub fn correlation_from_distance(dist: &PairMatrix) -> Result<PairMatrix> {
    dist.expect_kind(MatrixKind::Distance)?;
    let n = dist.len();
    let values = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            1.0 - dist.values()[(i, j)]
        }
    });
    PairMatrix::new(dist.symbols().to_vec(), values, MatrixKind::Correlation)
}
