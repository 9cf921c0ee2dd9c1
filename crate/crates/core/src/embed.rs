//! Classical (Torgerson) metric scaling of a distance matrix into a few
//! Euclidean dimensions.
//!
//! `1 - c` distances need not be Euclidean, so the doubly centred Gram matrix
//! can have negative eigenvalues. Those are clamped to zero and their mass is
//! reported alongside the embedding.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::returns::{MatrixKind, PairMatrix};
use crate::spectra::symmetric_eigen;

pub const DEFAULT_DIMS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Embedding {
    pub symbols: Vec<String>,
    /// `N x dims`, columns centred.
    #[serde(skip)]
    pub coords: DMatrix<f64>,
    /// Retained eigenvalues over the sum of all positive eigenvalues.
    pub eigenvalue_shares: Vec<f64>,
    /// Sum of |negative eigenvalues| of the Gram matrix.
    pub negative_mass: f64,
    /// `negative_mass / (positive + negative mass)`.
    pub non_euclidean_share: f64,
    pub stress: f64,
    pub warnings: Vec<String>,
}

impl Embedding {
    pub fn dims(&self) -> usize {
        self.coords.ncols()
    }

    /// Coordinates as rows, padded or truncated to three components.
    pub fn xyz(&self) -> Vec<[f64; 3]> {
        (0..self.coords.nrows())
            .map(|i| {
                let mut p = [0.0; 3];
                for (k, slot) in p.iter_mut().enumerate().take(self.dims()) {
                    *slot = self.coords[(i, k)];
                }
                p
            })
            .collect()
    }

    /// `symbol,x,y,z` (further axes named `d4`, `d5`, ...).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["symbol".to_string()];
        for k in 0..self.dims() {
            header.push(match k {
                0 => "x".into(),
                1 => "y".into(),
                2 => "z".into(),
                _ => format!("d{}", k + 1),
            });
        }
        w.write_record(&header)?;
        for (i, s) in self.symbols.iter().enumerate() {
            let mut row = vec![s.clone()];
            row.extend((0..self.dims()).map(|k| crate::returns::format_sig17(self.coords[(i, k)])));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// `sqrt(sum (d - d_hat)^2 / sum d^2)` over pairs `i < j`; zero when every
/// input distance is zero and the embedding agrees.
pub fn stress(dist: &DMatrix<f64>, coords: &DMatrix<f64>) -> f64 {
    let n = dist.nrows();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let dh = (coords.row(i) - coords.row(j)).norm();
            let d = dist[(i, j)];
            num += (d - dh) * (d - dh);
            den += d * d;
        }
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

pub fn mds_embed(dist: &PairMatrix, dims: usize) -> Result<Embedding> {
    dist.expect_kind(MatrixKind::Distance)?;
    if dims == 0 {
        return Err(Error::invalid("dims must be at least 1"));
    }
    let n = dist.len();
    let mut warnings = Vec::new();
    if n < dims + 1 {
        warnings.push(format!(
            "{n} points cannot span {dims} dimensions; extra coordinates are zero"
        ));
    }
    let d = dist.values();

    // B = -1/2 J D^2 J, computed through row/column/grand means of D^2
    let sq = d.map(|v| v * v);
    let row_mean: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n.max(1) as f64;
    let mut b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + grand));
    // exact symmetry for the solver
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (b[(i, j)] + b[(j, i)]);
            b[(i, j)] = m;
            b[(j, i)] = m;
        }
    }

    let (values, vectors) = if n == 0 {
        (Vec::new(), DMatrix::zeros(0, 0))
    } else {
        symmetric_eigen(&b)?
    };
    let positive: f64 = values.iter().filter(|&&v| v > 0.0).sum();
    let negative_mass: f64 = values.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();

    let mut coords = DMatrix::zeros(n, dims);
    let mut shares = Vec::with_capacity(dims);
    for k in 0..dims {
        let lambda = values.get(k).copied().unwrap_or(0.0).max(0.0);
        shares.push(if positive > 0.0 { lambda / positive } else { 0.0 });
        if k < values.len() && lambda > 0.0 {
            let scale = lambda.sqrt();
            let mut col = vectors.column(k) * scale;
            // remove round-off drift of the mean
            let mean = col.mean();
            col.add_scalar_mut(-mean);
            coords.set_column(k, &col);
        }
    }
    let total = positive + negative_mass;
    Ok(Embedding {
        symbols: dist.symbols().to_vec(),
        stress: stress(d, &coords),
        coords,
        eigenvalue_shares: shares,
        negative_mass,
        non_euclidean_share: if total > 0.0 { negative_mass / total } else { 0.0 },
        warnings,
    })
}
