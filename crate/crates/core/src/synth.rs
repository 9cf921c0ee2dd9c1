//! Synthetic markets with planted structure.
//!
//! All generators are Gaussian factor models on standardized daily returns:
//!
//! * `blocks`: `r = sqrt(inter) g + sqrt(intra_k - inter) f_k + sqrt(1 - intra_k) e`,
//!   so symbols in block `k` correlate at `intra_k` and across blocks at `inter`.
//! * `single_factor`: `r = a g + sqrt(1 - a^2) e`, pairwise correlation `a^2`.
//! * `timezone`: group A loads on today's factor, group B on a mix of
//!   yesterday's and today's, `a (k g[t-1] + sqrt(1 - k^2) g[t]) + sqrt(1 - a^2) e`.
//!   Same-day correlation is `a^2` within groups and `a^2 sqrt(1 - k^2)` across.
//!
//! Prices start at 100 and compound the returns scaled by `daily_vol`.

use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::MarketPanel;

const BASE_PRICE: f64 = 100.0;

fn default_vol() -> f64 {
    0.01
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    Blocks,
    SingleFactor,
    Timezone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    /// Number of daily returns; the panel has one more date.
    pub n_days: usize,
    pub seed: u64,
    /// `(size, intra_corr)` per block (`blocks` kind).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<(usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inter_corr: Option<f64>,
    /// Loading on the global factor (`single_factor`, `timezone`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor_loading: Option<f64>,
    /// Weight of yesterday's factor for the lagged group (`timezone`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag_coupling: Option<f64>,
    /// Number of symbols (`single_factor`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_symbols: Option<usize>,
    /// Sizes of the same-day and lagged groups (`timezone`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_sizes: Option<(usize, usize)>,
    #[serde(default = "default_vol")]
    pub daily_vol: f64,
}

impl SynthSpec {
    pub fn blocks(sizes_intra: Vec<(usize, f64)>, inter: f64, n_days: usize, seed: u64) -> Self {
        Self {
            kind: SynthKind::Blocks,
            n_days,
            seed,
            blocks: Some(sizes_intra),
            inter_corr: Some(inter),
            factor_loading: None,
            lag_coupling: None,
            n_symbols: None,
            group_sizes: None,
            daily_vol: default_vol(),
        }
    }

    pub fn single_factor(n_symbols: usize, loading: f64, n_days: usize, seed: u64) -> Self {
        Self {
            kind: SynthKind::SingleFactor,
            n_symbols: Some(n_symbols),
            factor_loading: Some(loading),
            blocks: None,
            inter_corr: None,
            ..Self::blocks(Vec::new(), 0.0, n_days, seed)
        }
    }

    pub fn timezone(
        sizes: (usize, usize),
        loading: f64,
        lag_coupling: f64,
        n_days: usize,
        seed: u64,
    ) -> Self {
        Self {
            kind: SynthKind::Timezone,
            group_sizes: Some(sizes),
            factor_loading: Some(loading),
            lag_coupling: Some(lag_coupling),
            blocks: None,
            inter_corr: None,
            ..Self::blocks(Vec::new(), 0.0, n_days, seed)
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&s)?)
    }
}

/// Planted grouping: `labels[j]` is the group of symbol `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub kind: SynthKind,
    pub symbols: Vec<String>,
    pub labels: Vec<usize>,
}

impl GroundTruth {
    /// Symbol indices per group, in group order.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let k = self.labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut g = vec![Vec::new(); k];
        for (i, &l) in self.labels.iter().enumerate() {
            g[l].push(i);
        }
        g
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

fn check_corr(name: &str, v: f64) -> Result<()> {
    if !(0.0..1.0).contains(&v) {
        return Err(Error::Infeasible(format!("{name} = {v} outside [0, 1)")));
    }
    Ok(())
}

fn required<T: Copy>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::invalid(format!("synthetic spec is missing `{name}`")))
}

/// Per-symbol loadings in the unified model
/// `r = global * g_mix + block * f_block + idio * e`.
struct Loadings {
    global: Vec<f64>,
    block: Vec<f64>,
    idio: Vec<f64>,
    block_of: Vec<usize>,
    lagged: Vec<bool>,
    n_blocks: usize,
}

fn loadings(spec: &SynthSpec) -> Result<Loadings> {
    match spec.kind {
        SynthKind::Blocks => {
            let blocks = spec
                .blocks
                .as_ref()
                .filter(|b| !b.is_empty())
                .ok_or_else(|| Error::invalid("blocks kind needs `blocks`"))?;
            let inter = spec.inter_corr.unwrap_or(0.0);
            check_corr("inter_corr", inter)?;
            let mut l = Loadings {
                global: vec![],
                block: vec![],
                idio: vec![],
                block_of: vec![],
                lagged: vec![],
                n_blocks: blocks.len(),
            };
            for (k, &(size, intra)) in blocks.iter().enumerate() {
                if size < 2 {
                    return Err(Error::Infeasible(format!("block {k} has size {size} < 2")));
                }
                check_corr("intra_corr", intra)?;
                if intra < inter {
                    return Err(Error::Infeasible(format!(
                        "block {k}: intra_corr {intra} below inter_corr {inter}"
                    )));
                }
                for _ in 0..size {
                    l.global.push(inter.sqrt());
                    l.block.push((intra - inter).sqrt());
                    l.idio.push((1.0 - intra).sqrt());
                    l.block_of.push(k);
                    l.lagged.push(false);
                }
            }
            Ok(l)
        }
        SynthKind::SingleFactor => {
            let n = required(spec.n_symbols, "n_symbols")?;
            let a = required(spec.factor_loading, "factor_loading")?;
            check_corr("factor_loading", a)?;
            if n < 1 {
                return Err(Error::Infeasible("n_symbols must be positive".into()));
            }
            Ok(Loadings {
                global: vec![a; n],
                block: vec![0.0; n],
                idio: vec![(1.0 - a * a).sqrt(); n],
                block_of: vec![0; n],
                lagged: vec![false; n],
                n_blocks: 1,
            })
        }
        SynthKind::Timezone => {
            let (na, nb) = required(spec.group_sizes, "group_sizes")?;
            let a = required(spec.factor_loading, "factor_loading")?;
            let k = required(spec.lag_coupling, "lag_coupling")?;
            check_corr("factor_loading", a)?;
            check_corr("lag_coupling", k)?;
            if na < 2 || nb < 2 {
                return Err(Error::Infeasible("timezone groups need at least 2 symbols".into()));
            }
            let n = na + nb;
            Ok(Loadings {
                global: vec![a; n],
                block: vec![0.0; n],
                idio: vec![(1.0 - a * a).sqrt(); n],
                block_of: (0..n).map(|i| usize::from(i >= na)).collect(),
                lagged: (0..n).map(|i| i >= na).collect(),
                n_blocks: 2,
            })
        }
    }
}

/// Consecutive weekdays starting 2000-01-03.
pub fn business_days(count: usize) -> Vec<NaiveDate> {
    let mut d = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

/// Standardized return matrix (`n_days x N`) and labels, without prices.
pub fn generate_returns(spec: &SynthSpec) -> Result<(DMatrix<f64>, GroundTruth)> {
    if spec.n_days < 1 {
        return Err(Error::invalid("n_days must be positive"));
    }
    let l = loadings(spec)?;
    let n = l.global.len();
    let kappa = spec.lag_coupling.unwrap_or(0.0);
    let same_day = (1.0 - kappa * kappa).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    let mut prev_g = normal();
    let mut r = DMatrix::zeros(spec.n_days, n);
    let mut block_f = vec![0.0; l.n_blocks];
    for t in 0..spec.n_days {
        let g = normal();
        for f in block_f.iter_mut() {
            *f = normal();
        }
        for j in 0..n {
            let factor = if l.lagged[j] {
                kappa * prev_g + same_day * g
            } else {
                g
            };
            r[(t, j)] = l.global[j] * factor + l.block[j] * block_f[l.block_of[j]] + l.idio[j] * normal();
        }
        prev_g = g;
    }
    let symbols = (0..n).map(|j| format!("S{:02}", j + 1)).collect();
    Ok((
        r,
        GroundTruth {
            kind: spec.kind,
            symbols,
            labels: l.block_of,
        },
    ))
}

pub fn generate(spec: &SynthSpec) -> Result<(MarketPanel, GroundTruth)> {
    if !(spec.daily_vol > 0.0 && spec.daily_vol.is_finite()) {
        return Err(Error::invalid("daily_vol must be positive"));
    }
    let (r, truth) = generate_returns(spec)?;
    let (days, n) = r.shape();
    let mut prices = DMatrix::zeros(days + 1, n);
    for j in 0..n {
        let mut log_p = BASE_PRICE.ln();
        prices[(0, j)] = BASE_PRICE;
        for t in 0..days {
            log_p += spec.daily_vol * r[(t, j)];
            prices[(t + 1, j)] = log_p.exp();
        }
    }
    let panel = MarketPanel::new(
        business_days(days + 1),
        truth.symbols.clone(),
        prices,
        DMatrix::from_element(days + 1, n, false),
    )?;
    Ok((panel, truth))
}
