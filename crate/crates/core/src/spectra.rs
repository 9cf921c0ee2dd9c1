//! Eigen-analysis of correlation matrices.
//!
//! Eigenvalues are compared against the Marčenko-Pastur band for random data
//! and against the empirical band from surrogate panels. The leading
//! eigenvector defines the market-mode portfolio; the sign pattern of the
//! second one splits the symbols into two groups.

use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::returns::{MatrixKind, PairMatrix, ReturnsPanel};
use crate::surrogate::SurrogateEnvelope;

/// Entries of the second eigenvector below this magnitude have no sign.
pub const NEAR_ZERO: f64 = 1e-12;

/// Eigenvalues in descending order with matching orthonormal eigenvectors
/// (column `k` pairs with `eigenvalues[k]`). Each eigenvector is oriented so
/// its largest-magnitude entry is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    symbols: Vec<String>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvector `k`, 1-based to match the usual `e_1, e_2, ...` naming.
    pub fn mode(&self, k: usize) -> Option<DVector<f64>> {
        (1..=self.len())
            .contains(&k)
            .then(|| self.eigenvectors.column(k - 1).into_owned())
    }

    /// Rows `rank,eigenvalue,<symbol...>`: one row per eigenvalue followed by
    /// the entries of its eigenvector.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(
            ["rank", "eigenvalue"]
                .into_iter()
                .chain(self.symbols.iter().map(String::as_str)),
        )?;
        for (k, lambda) in self.eigenvalues.iter().enumerate() {
            let mut row = vec![(k + 1).to_string(), crate::returns::format_sig17(*lambda)];
            row.extend(
                self.eigenvectors
                    .column(k)
                    .iter()
                    .map(|v| crate::returns::format_sig17(*v)),
            );
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Full decomposition of any real symmetric matrix, sorted descending, with
/// the sign convention applied.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if !m.is_square() {
        return Err(Error::Decomposition(format!("matrix is {:?}", m.shape())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Decomposition("non-finite entry".into()));
    }
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Decomposition("solver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        orient(&mut col);
        vectors.set_column(dst, &col);
    }
    Ok((values, vectors))
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
pub fn orient(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Eigenvalues only, descending. Cheaper than [`symmetric_eigen`].
pub fn eigenvalues_only(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Decomposition("non-finite entry".into()));
    }
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

pub fn eigen_decompose(corr: &PairMatrix) -> Result<Spectrum> {
    corr.expect_kind(MatrixKind::Correlation)?;
    let (eigenvalues, eigenvectors) = symmetric_eigen(corr.values())?;
    Ok(Spectrum {
        symbols: corr.symbols().to_vec(),
        eigenvalues,
        eigenvectors,
    })
}

/// Marčenko-Pastur law for `N` series of length `L = Q N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MpLaw {
    pub q: f64,
    pub sigma: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
}

impl MpLaw {
    pub fn contains(&self, lambda: f64) -> bool {
        (self.lambda_minus..=self.lambda_plus).contains(&lambda)
    }
}

/// `lambda_pm = sigma^2 (1 + 1/Q -+ 2 sqrt(1/Q))`.
pub fn mp_bounds(q: f64, sigma: f64) -> Result<MpLaw> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::invalid(format!("Q must be finite and > 1, got {q}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
    }
    let s2 = sigma * sigma;
    let inv = 1.0 / q;
    let root = 2.0 * inv.sqrt();
    Ok(MpLaw {
        q,
        sigma,
        lambda_minus: s2 * (1.0 + inv - root),
        lambda_plus: s2 * (1.0 + inv + root),
    })
}

/// `rho(lambda) = Q / (2 pi sigma^2) * sqrt((l+ - l)(l - l-)) / l` on the
/// support, zero elsewhere.
pub fn mp_density(lambda: f64, law: &MpLaw) -> f64 {
    if !(lambda > law.lambda_minus && lambda < law.lambda_plus) {
        return 0.0;
    }
    let num = ((law.lambda_plus - lambda) * (lambda - law.lambda_minus)).sqrt();
    law.q / (2.0 * std::f64::consts::PI * law.sigma * law.sigma) * num / lambda
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BandPosition {
    Below,
    Inside,
    Above,
}

impl BandPosition {
    fn locate(v: f64, lo: f64, hi: f64) -> Self {
        if v < lo {
            Self::Below
        } else if v > hi {
            Self::Above
        } else {
            Self::Inside
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenvalueClass {
    pub rank: usize,
    pub value: f64,
    pub analytic: BandPosition,
    pub empirical: BandPosition,
}

impl EigenvalueClass {
    /// Outside both noise bands.
    pub fn stands_out(&self) -> bool {
        self.analytic != BandPosition::Inside && self.empirical != BandPosition::Inside
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseBandReport {
    pub n: usize,
    pub analytic_band: [f64; 2],
    pub empirical_band: [f64; 2],
    pub law: MpLaw,
    pub eigenvalues: Vec<EigenvalueClass>,
    pub lambda1: Option<EigenvalueClass>,
    pub lambda2: Option<EigenvalueClass>,
    pub above_analytic: usize,
    pub above_empirical: usize,
}

impl NoiseBandReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

pub fn noise_band_report(
    spec: &Spectrum,
    law: &MpLaw,
    env: &SurrogateEnvelope,
) -> Result<NoiseBandReport> {
    if env.n_symbols != spec.len() {
        return Err(Error::invalid(format!(
            "spectrum has {} eigenvalues but envelope was built on {} symbols",
            spec.len(),
            env.n_symbols
        )));
    }
    let classes: Vec<EigenvalueClass> = spec
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &v)| EigenvalueClass {
            rank: k + 1,
            value: v,
            analytic: BandPosition::locate(v, law.lambda_minus, law.lambda_plus),
            empirical: BandPosition::locate(v, env.eig_min, env.eig_max),
        })
        .collect();
    Ok(NoiseBandReport {
        n: spec.len(),
        analytic_band: [law.lambda_minus, law.lambda_plus],
        empirical_band: [env.eig_min, env.eig_max],
        law: *law,
        lambda1: classes.first().cloned(),
        lambda2: classes.get(1).cloned(),
        above_analytic: classes
            .iter()
            .filter(|c| c.analytic == BandPosition::Above)
            .count(),
        above_empirical: classes
            .iter()
            .filter(|c| c.empirical == BandPosition::Above)
            .count(),
        eigenvalues: classes,
    })
}

/// Daily return of the portfolio weighted by the raw entries of `e_k`.
pub fn mode_portfolio_returns(returns: &ReturnsPanel, spec: &Spectrum, k: usize) -> Result<Vec<f64>> {
    if returns.n_symbols() != spec.len() {
        return Err(Error::invalid("returns and spectrum disagree on symbol count"));
    }
    let e = spec
        .mode(k)
        .ok_or_else(|| Error::invalid(format!("mode {k} outside 1..={}", spec.len())))?;
    Ok((returns.values() * e).iter().copied().collect())
}

/// Pearson correlation of two equally long series.
pub fn benchmark_correlation(portfolio: &[f64], benchmark: &[f64]) -> Result<f64> {
    if portfolio.len() != benchmark.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            portfolio.len(),
            benchmark.len()
        )));
    }
    let l = portfolio.len();
    if l < 3 {
        return Err(Error::invalid("need at least 3 observations"));
    }
    let mx = portfolio.iter().sum::<f64>() / l as f64;
    let my = benchmark.iter().sum::<f64>() / l as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in portfolio.iter().zip(benchmark) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance {
            symbol: "portfolio".into(),
        });
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance {
            symbol: "benchmark".into(),
        });
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Sign split of the second eigenvector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModePartition {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
    pub near_zero: Vec<String>,
    /// `(symbol, entry)` in symbol order.
    pub entries: Vec<(String, f64)>,
}

impl ModePartition {
    /// The two signed groups as an unordered pair (each sorted, smaller
    /// first), independent of the eigenvector's overall sign.
    pub fn groups(&self) -> (Vec<String>, Vec<String>) {
        let mut a = self.positive.clone();
        let mut b = self.negative.clone();
        a.sort();
        b.sort();
        if b < a {
            std::mem::swap(&mut a, &mut b);
        }
        (a, b)
    }

    /// `symbol<TAB>sign<TAB>magnitude` rows for bar charts.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut s = String::from("symbol\tsign\tmagnitude\n");
        for (sym, v) in &self.entries {
            let sign = if v.abs() < NEAR_ZERO {
                "0"
            } else if *v > 0.0 {
                "+"
            } else {
                "-"
            };
            s.push_str(&format!("{sym}\t{sign}\t{}\n", v.abs()));
        }
        f.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

pub fn second_mode_partition(spec: &Spectrum) -> Result<ModePartition> {
    let e2 = spec
        .mode(2)
        .ok_or_else(|| Error::invalid("second mode needs at least 2 symbols"))?;
    Ok(partition_by_sign(&spec.symbols, e2.as_slice()))
}

pub(crate) fn partition_by_sign(symbols: &[String], v: &[f64]) -> ModePartition {
    let mut p = ModePartition {
        positive: Vec::new(),
        negative: Vec::new(),
        near_zero: Vec::new(),
        entries: Vec::with_capacity(v.len()),
    };
    for (sym, &x) in symbols.iter().zip(v) {
        if x.abs() < NEAR_ZERO {
            p.near_zero.push(sym.clone());
        } else if x > 0.0 {
            p.positive.push(sym.clone());
        } else {
            p.negative.push(sym.clone());
        }
        p.entries.push((sym.clone(), x));
    }
    p
}
