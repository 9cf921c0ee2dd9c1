//! Surrogate panels and the noise envelope derived from them.
//!
//! Each surrogate rotates every return column by its own random offset. The
//! marginal distribution (and autocorrelation) of each series survives, while
//! any alignment between series is destroyed. Repeating this many times gives
//! the distribution of distances and eigenvalues that pure noise produces.
//!
//! # Seeds
//!
//! Simulation `k` (0-based) uses the seed
//!
//! ```text
//! seed_k = splitmix64(base_seed + (k + 1) * 0x9E3779B97F4A7C15)   (wrapping)
//! splitmix64(z):
//!     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!     z ^ (z >> 31)
//! ```
//!
//! i.e. the `(k+1)`-th output of a SplitMix64 stream started at `base_seed`.
//! Within a simulation, column offsets are drawn from ChaCha8 seeded with
//! `seed_k`.

use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::with_threads;
use crate::returns::{correlation_matrix, distance_matrix, CorrelationMethod, ReturnsPanel};
use crate::spectra::eigenvalues_only;

pub const DEFAULT_SIMS: usize = 1000;
pub const DEFAULT_QUANTILE: f64 = 0.01;
pub const HISTOGRAM_BIN: f64 = 0.01;
const HISTOGRAM_BINS: usize = 200;
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Percentiles reported in the pooled-distance summary.
pub const SUMMARY_PERCENTILES: [f64; 11] = [
    0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 0.999,
];

pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of simulation `k` derived from `base_seed`.
pub fn derive_seed(base_seed: u64, k: u64) -> u64 {
    splitmix64(base_seed.wrapping_add(k.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateMode {
    /// Cyclic rotation by a uniform offset in `1..L`.
    #[default]
    CyclicShift,
    /// Independent uniform permutation of each column.
    Permutation,
}

/// Rotates each column cyclically by an offset drawn uniformly from `1..L`.
pub fn shift_surrogate(returns: &ReturnsPanel, seed: u64) -> Result<ReturnsPanel> {
    surrogate(returns, seed, SurrogateMode::CyclicShift)
}

pub fn surrogate(returns: &ReturnsPanel, seed: u64, mode: SurrogateMode) -> Result<ReturnsPanel> {
    let l = returns.len();
    if l < 2 {
        return Err(Error::invalid("surrogates need at least 2 observations"));
    }
    let src = returns.values();
    let n = src.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(l, n);
    match mode {
        SurrogateMode::CyclicShift => {
            for j in 0..n {
                let offset = rng.gen_range(1..l as u64) as usize;
                for t in 0..l {
                    out[(t, j)] = src[((t + offset) % l, j)];
                }
            }
        }
        SurrogateMode::Permutation => {
            let mut idx: Vec<usize> = (0..l).collect();
            for j in 0..n {
                idx.shuffle(&mut rng);
                for (t, &s) in idx.iter().enumerate() {
                    out[(t, j)] = src[(s, j)];
                }
            }
        }
    }
    Ok(returns.with_values(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeConfig {
    pub n_sims: usize,
    pub base_seed: u64,
    pub quantile: f64,
    pub mode: SurrogateMode,
    pub method: CorrelationMethod,
    /// Worker cap; `None` defers to `CORRNET_THREADS`.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self {
            n_sims: DEFAULT_SIMS,
            base_seed: 0,
            quantile: DEFAULT_QUANTILE,
            mode: SurrogateMode::CyclicShift,
            method: CorrelationMethod::Spearman,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistancePool {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    /// `(p, quantile_p)` pairs.
    pub percentiles: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub range: [f64; 2],
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateEnvelope {
    pub n_sims: usize,
    pub n_symbols: usize,
    pub base_seed: u64,
    pub quantile: f64,
    pub mode: SurrogateMode,
    pub method: CorrelationMethod,
    pub distance_pool: DistancePool,
    pub eig_min: f64,
    pub eig_max: f64,
    /// `quantile`-quantile of the pooled surrogate distances.
    pub noise_threshold: f64,
    pub histogram: Histogram,
}

impl SurrogateEnvelope {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

/// Linear-interpolation quantile of already sorted data (the
/// `(n - 1) p` rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn build_envelope(
    returns: &ReturnsPanel,
    n_sims: usize,
    base_seed: u64,
    percentile: f64,
) -> Result<SurrogateEnvelope> {
    build_envelope_with(
        returns,
        &EnvelopeConfig {
            n_sims,
            base_seed,
            quantile: percentile,
            ..EnvelopeConfig::default()
        },
    )
}

struct SimOutcome {
    distances: Vec<f64>,
    eig_min: f64,
    eig_max: f64,
}

pub fn build_envelope_with(returns: &ReturnsPanel, cfg: &EnvelopeConfig) -> Result<SurrogateEnvelope> {
    if cfg.n_sims == 0 {
        return Err(Error::invalid("n_sims must be at least 1"));
    }
    if !(0.0..=1.0).contains(&cfg.quantile) {
        return Err(Error::invalid(format!("quantile {} outside [0, 1]", cfg.quantile)));
    }
    if returns.n_symbols() < 2 {
        return Err(Error::invalid("envelope needs at least 2 symbols"));
    }
    let run = |k: usize| -> Result<SimOutcome> {
        let s = surrogate(returns, derive_seed(cfg.base_seed, k as u64), cfg.mode)?;
        let c = correlation_matrix(&s, cfg.method)?;
        let eig = eigenvalues_only(c.values())?;
        let d = distance_matrix(&c)?;
        Ok(SimOutcome {
            distances: d.upper_triangle(),
            eig_min: *eig.last().expect("non-empty"),
            eig_max: eig[0],
        })
    };
    let outcomes: Vec<SimOutcome> = with_threads(cfg.threads, || {
        (0..cfg.n_sims)
            .into_par_iter()
            .map(run)
            .collect::<Result<Vec<_>>>()
    })?;

    let eig_min = outcomes.iter().map(|o| o.eig_min).fold(f64::INFINITY, f64::min);
    let eig_max = outcomes.iter().map(|o| o.eig_max).fold(f64::NEG_INFINITY, f64::max);
    let mut pool: Vec<f64> = outcomes.into_iter().flat_map(|o| o.distances).collect();
    pool.sort_by(f64::total_cmp);

    let mut counts = vec![0u64; HISTOGRAM_BINS];
    for &d in &pool {
        let b = ((d * 100.0).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1);
        counts[b] += 1;
    }

    Ok(SurrogateEnvelope {
        n_sims: cfg.n_sims,
        n_symbols: returns.n_symbols(),
        base_seed: cfg.base_seed,
        quantile: cfg.quantile,
        mode: cfg.mode,
        method: cfg.method,
        distance_pool: DistancePool {
            count: pool.len(),
            min: pool[0],
            max: pool[pool.len() - 1],
            percentiles: SUMMARY_PERCENTILES
                .iter()
                .map(|&p| (p, quantile_sorted(&pool, p)))
                .collect(),
        },
        eig_min,
        eig_max,
        noise_threshold: quantile_sorted(&pool, cfg.quantile),
        histogram: Histogram {
            bin_width: HISTOGRAM_BIN,
            range: [0.0, 2.0],
            counts,
        },
    })
}
