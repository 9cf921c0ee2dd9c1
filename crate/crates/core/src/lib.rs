//! Correlation networks for panels of market indices.
//!
//! The pipeline runs from raw price files to threshold asset graphs and
//! spectral diagnostics:
//!
//! 1. [`ingest`]: load ragged calendars and align them ([`align_calendars`]).
//! 2. [`returns`]: log-returns, Spearman/Pearson matrices and `d = 1 - c`.
//! 3. [`graph`]: threshold graphs, cluster evolution over a threshold sweep
//!    and the equivalent single-linkage dendrogram.
//! 4. [`surrogate`]: rotated surrogate panels and the noise envelope.
//! 5. [`spectra`]: eigenvalues against the Marčenko-Pastur band, market-mode
//!    portfolio and the sign split of the second eigenvector.
//! 6. [`embed`]: 3D coordinates by classical metric scaling.
//! 7. [`synth`]: synthetic markets with planted structure.
//!
//! [`cli`] ties everything together for the `corrnet` binary.

pub mod cli;
pub mod embed;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod parallel;
pub mod returns;
pub mod spectra;
pub mod surrogate;
pub mod synth;

pub use embed::{mds_embed, Embedding};
pub use error::{Error, Result};
pub use graph::{
    build_graph, components, dendrogram_equivalence, sweep, Dendrogram, SweepResult,
    ThresholdGraph,
};
pub use ingest::{align_calendars, load_panel, MarketPanel, RawSeries};
pub use returns::{
    distance_matrix, log_returns, pearson_matrix, spearman_matrix, CorrelationMethod, MatrixKind,
    PairMatrix, ReturnsPanel,
};
pub use spectra::{
    benchmark_correlation, eigen_decompose, mode_portfolio_returns, mp_bounds, mp_density,
    noise_band_report, second_mode_partition, MpLaw, NoiseBandReport, Spectrum,
};
pub use surrogate::{build_envelope, shift_surrogate, SurrogateEnvelope};
pub use synth::{generate, GroundTruth, SynthKind, SynthSpec};
