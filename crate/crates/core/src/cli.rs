//! Batch front end: every subcommand reads a price panel (or generates a
//! synthetic one), runs part of the pipeline and writes its artifacts into
//! the output directory. `report` runs everything and adds `summary.json`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::embed::{mds_embed, Embedding, DEFAULT_DIMS};
use crate::error::{Error, Result};
use crate::graph::{build_graph, default_grid, grid, sweep, GraphJson, SweepResult};
use crate::ingest::{align_calendars, load_panel, MarketPanel, DEFAULT_MISSING_FRAC};
use crate::parallel::with_threads;
use crate::returns::{
    correlation_matrix, distance_matrix, log_returns, CorrelationMethod, PairMatrix, ReturnsPanel,
};
use crate::spectra::{
    benchmark_correlation, eigen_decompose, mode_portfolio_returns, mp_bounds, noise_band_report,
    second_mode_partition, ModePartition, NoiseBandReport,
};
use crate::surrogate::{build_envelope_with, EnvelopeConfig, SurrogateEnvelope, SurrogateMode};
use crate::synth::{generate, GroundTruth, SynthSpec};

/// Version of the `summary.json` layout.
pub const SUMMARY_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrArg {
    Spearman,
    Pearson,
}

impl From<CorrArg> for CorrelationMethod {
    fn from(c: CorrArg) -> Self {
        match c {
            CorrArg::Spearman => CorrelationMethod::Spearman,
            CorrArg::Pearson => CorrelationMethod::Pearson,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "corrnet", version, about = "Correlation networks for market-index panels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Ingest,
    Corr,
    Graph,
    Sweep,
    Surrogate,
    Spectra,
    Embed,
    Synth,
    Report,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align price files and write the panel plus fill flags.
    Ingest(RunArgs),
    /// Correlation and distance matrices.
    Corr(RunArgs),
    /// Threshold graphs (JSON + DOT) at `--threshold`, or at every grid value.
    Graph(RunArgs),
    /// Cluster evolution over the threshold grid.
    Sweep(RunArgs),
    /// Surrogate noise envelope.
    Surrogate(RunArgs),
    /// Spectrum, noise-band report, e2 partition and mode portfolios.
    Spectra(RunArgs),
    /// 3D classical scaling coordinates.
    Embed(RunArgs),
    /// Generate a synthetic panel from `--synth spec.json`.
    Synth(RunArgs),
    /// Full pipeline and summary.
    Report(RunArgs),
}

impl Command {
    pub fn split(self) -> (CommandKind, RunArgs) {
        match self {
            Command::Ingest(a) => (CommandKind::Ingest, a),
            Command::Corr(a) => (CommandKind::Corr, a),
            Command::Graph(a) => (CommandKind::Graph, a),
            Command::Sweep(a) => (CommandKind::Sweep, a),
            Command::Surrogate(a) => (CommandKind::Surrogate, a),
            Command::Spectra(a) => (CommandKind::Spectra, a),
            Command::Embed(a) => (CommandKind::Embed, a),
            Command::Synth(a) => (CommandKind::Synth, a),
            Command::Report(a) => (CommandKind::Report, a),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Price CSV file(s): `date,SYM1,SYM2,...`.
    #[arg(long, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "spearman")]
    pub corr: CorrArg,
    /// Threshold grid `start:stop:step`.
    #[arg(long, default_value = "0.1:2.0:0.1")]
    pub grid: String,
    #[arg(long, default_value_t = crate::surrogate::DEFAULT_SIMS)]
    pub sims: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Quantile of pooled surrogate distances used as the noise threshold.
    #[arg(long, default_value_t = crate::surrogate::DEFAULT_QUANTILE)]
    pub quantile: f64,
    /// Benchmark price CSV (`date,NAME`).
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    /// Synthetic market spec (JSON); replaces `--input`.
    #[arg(long)]
    pub synth: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MISSING_FRAC)]
    pub missing_frac: f64,
    /// Single threshold for the `graph` command.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Fully permute columns instead of rotating them.
    #[arg(long)]
    pub permute: bool,
}

/// Resolved configuration for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub out: PathBuf,
    pub method: CorrelationMethod,
    pub grid: Vec<f64>,
    pub n_sims: usize,
    pub base_seed: u64,
    pub quantile: f64,
    pub benchmark: Option<PathBuf>,
    pub synth: Option<SynthSpec>,
    pub missing_frac: f64,
    pub threshold: Option<f64>,
    pub mode: SurrogateMode,
    /// Worker cap; `None` defers to `CORRNET_THREADS`.
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            inputs: Vec::new(),
            out: out.into(),
            method: CorrelationMethod::Spearman,
            grid: default_grid(),
            n_sims: crate::surrogate::DEFAULT_SIMS,
            base_seed: 0,
            quantile: crate::surrogate::DEFAULT_QUANTILE,
            benchmark: None,
            synth: None,
            missing_frac: DEFAULT_MISSING_FRAC,
            threshold: None,
            mode: SurrogateMode::CyclicShift,
            threads: None,
        }
    }

    fn envelope_config(&self) -> EnvelopeConfig {
        EnvelopeConfig {
            n_sims: self.n_sims,
            base_seed: self.base_seed,
            quantile: self.quantile,
            mode: self.mode,
            method: self.method,
            threads: self.threads,
        }
    }

    fn validate(&self, cmd: CommandKind) -> Result<()> {
        if self.n_sims == 0 {
            return Err(Error::invalid("--sims must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.quantile) {
            return Err(Error::invalid("--quantile must lie in [0, 1]"));
        }
        if let Some(t) = self.threshold {
            if !(0.0..=2.0).contains(&t) {
                return Err(Error::invalid("--threshold must lie in [0, 2]"));
            }
        }
        if cmd == CommandKind::Synth && self.synth.is_none() {
            return Err(Error::invalid("synth needs --synth spec.json"));
        }
        if cmd != CommandKind::Synth && self.synth.is_none() && self.inputs.is_empty() {
            return Err(Error::invalid("need --input or --synth"));
        }
        Ok(())
    }
}

impl TryFrom<RunArgs> for RunConfig {
    type Error = Error;

    fn try_from(a: RunArgs) -> Result<Self> {
        let synth = a.synth.as_deref().map(SynthSpec::from_json_file).transpose()?;
        Ok(Self {
            inputs: a.input,
            out: a.out,
            method: a.corr.into(),
            grid: parse_grid(&a.grid)?,
            n_sims: a.sims,
            base_seed: a.seed,
            quantile: a.quantile,
            benchmark: a.benchmark,
            synth,
            missing_frac: a.missing_frac,
            threshold: a.threshold,
            mode: if a.permute {
                SurrogateMode::Permutation
            } else {
                SurrogateMode::CyclicShift
            },
            threads: None,
        })
    }
}

/// Parses `start:stop:step`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::invalid(format!("bad grid {s:?}, expected start:stop:step")))?;
    match nums.as_slice() {
        [start, stop, step] => grid(*start, *stop, *step),
        _ => Err(Error::invalid(format!("bad grid {s:?}, expected start:stop:step"))),
    }
}

/// Machine-readable error document.
pub fn error_json(e: &Error) -> String {
    json!({ "error": { "kind": e.kind(), "message": e.to_string() } }).to_string()
}

/// Files written by a run, relative to the output directory.
#[derive(Debug, Default, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub files: Vec<String>,
}

struct Writer<'a> {
    out: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.out.join(name)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        std::fs::write(&p, s).map_err(|e| Error::io(&p, e))
    }
}

/// Executes `cmd` with `cfg`, returning the written file names.
pub fn run(cmd: CommandKind, cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate(cmd)?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    with_threads(cfg.threads, || run_inner(cmd, cfg))
}

struct Stage {
    panel: MarketPanel,
    truth: Option<GroundTruth>,
}

fn load(cfg: &RunConfig) -> Result<Stage> {
    match &cfg.synth {
        Some(spec) => {
            let (panel, truth) = generate(spec)?;
            Ok(Stage {
                panel,
                truth: Some(truth),
            })
        }
        None => {
            let series = load_panel(&cfg.inputs)?;
            Ok(Stage {
                panel: align_calendars(&series, cfg.missing_frac)?,
                truth: None,
            })
        }
    }
}

fn run_inner(cmd: CommandKind, cfg: &RunConfig) -> Result<RunOutput> {
    let mut w = Writer {
        out: &cfg.out,
        files: Vec::new(),
    };
    let stage = load(cfg)?;
    let panel = &stage.panel;

    match cmd {
        CommandKind::Ingest => {
            let p = w.path("panel.csv");
            w.files.push("panel.fills.csv".into());
            panel.write_csv(&p)?;
        }
        CommandKind::Synth => {
            let p = w.path("panel.csv");
            w.files.push("panel.fills.csv".into());
            panel.write_csv(&p)?;
            if let Some(t) = &stage.truth {
                let p = w.path("labels.json");
                t.write_json(&p)?;
            }
        }
        CommandKind::Corr => {
            let (_, corr, dist) = matrices(panel, cfg)?;
            corr.write_csv(&w.path("correlation.csv"))?;
            dist.write_csv(&w.path("distance.csv"))?;
        }
        CommandKind::Graph => {
            let (_, _, dist) = matrices(panel, cfg)?;
            let ts = cfg.threshold.map_or_else(|| cfg.grid.clone(), |t| vec![t]);
            write_graphs(&mut w, &dist, &ts, None)?;
        }
        CommandKind::Sweep => {
            let (_, _, dist) = matrices(panel, cfg)?;
            let s = sweep(&dist, &cfg.grid)?;
            w.json("sweep.json", &s)?;
        }
        CommandKind::Surrogate => {
            let r = log_returns(panel)?;
            let env = build_envelope_with(&r, &cfg.envelope_config())?;
            w.json("envelope.json", &env)?;
        }
        CommandKind::Spectra => {
            let (r, corr, _) = matrices(panel, cfg)?;
            let env = build_envelope_with(&r, &cfg.envelope_config())?;
            spectra_artifacts(&mut w, cfg, &r, &corr, &env)?;
        }
        CommandKind::Embed => {
            let (_, _, dist) = matrices(panel, cfg)?;
            let e = mds_embed(&dist, DEFAULT_DIMS)?;
            e.write_csv(&w.path("coords.csv"))?;
        }
        CommandKind::Report => report(&mut w, cfg, &stage)?,
    }
    Ok(RunOutput { files: w.files })
}

fn matrices(panel: &MarketPanel, cfg: &RunConfig) -> Result<(ReturnsPanel, PairMatrix, PairMatrix)> {
    let r = log_returns(panel)?;
    let corr = correlation_matrix(&r, cfg.method)?;
    let dist = distance_matrix(&corr)?;
    Ok((r, corr, dist))
}

fn write_graphs(
    w: &mut Writer<'_>,
    dist: &PairMatrix,
    thresholds: &[f64],
    coords: Option<&[[f64; 3]]>,
) -> Result<()> {
    let dir = w.out.join("graphs");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for &t in thresholds {
        let g = build_graph(dist, t)?;
        let stem = format!("graphs/graph_T{t:.2}");
        GraphJson::new(&g, coords).write(&w.path(&format!("{stem}.json")))?;
        g.write_dot(&w.path(&format!("{stem}.dot")))?;
    }
    Ok(())
}

struct SpectraOut {
    band: NoiseBandReport,
    e2: Option<ModePartition>,
    benchmark: Option<f64>,
}

fn spectra_artifacts(
    w: &mut Writer<'_>,
    cfg: &RunConfig,
    r: &ReturnsPanel,
    corr: &PairMatrix,
    env: &SurrogateEnvelope,
) -> Result<SpectraOut> {
    let spectrum = eigen_decompose(corr)?;
    let q = r.len() as f64 / r.n_symbols() as f64;
    let law = mp_bounds(q, 1.0)?;
    let band = noise_band_report(&spectrum, &law, env)?;
    spectrum.write_csv(&w.path("spectrum.csv"))?;
    band.write_json(&w.path("noise_band.json"))?;

    let e2 = if spectrum.len() >= 2 {
        let p = second_mode_partition(&spectrum)?;
        p.write_tsv(&w.path("e2.tsv"))?;
        Some(p)
    } else {
        None
    };

    let mode1 = mode_portfolio_returns(r, &spectrum, 1)?;
    let mode2 = if spectrum.len() >= 2 {
        Some(mode_portfolio_returns(r, &spectrum, 2)?)
    } else {
        None
    };
    {
        let p = w.path("modes.csv");
        let mut cw = csv::Writer::from_path(&p)?;
        cw.write_record(["date", "mode1", "mode2"])?;
        for (t, d) in r.dates().iter().enumerate() {
            cw.write_record([
                d.format("%Y-%m-%d").to_string(),
                format!("{}", mode1[t]),
                mode2.as_ref().map_or(String::new(), |m| format!("{}", m[t])),
            ])?;
        }
        cw.flush().map_err(|e| Error::io(&p, e))?;
    }

    let benchmark = match &cfg.benchmark {
        Some(path) => {
            let b = load_benchmark_returns(path, r)?;
            let c = benchmark_correlation(&mode1, &b)?;
            w.json("benchmark.json", &json!({ "mode": 1, "correlation": c }))?;
            Some(c)
        }
        None => None,
    };
    Ok(SpectraOut {
        band,
        e2,
        benchmark,
    })
}

/// Benchmark log-returns on the dates of `r`. The benchmark price on a date
/// is its latest observation on or before that date.
pub fn load_benchmark_returns(path: &Path, r: &ReturnsPanel) -> Result<Vec<f64>> {
    let cols = {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        crate::ingest::parse_csv(f, path)?
    };
    let (_, obs) = cols
        .into_iter()
        .next()
        .ok_or_else(|| Error::invalid("benchmark file has no series"))?;
    let price_on = |d: chrono::NaiveDate| -> Result<f64> {
        let k = obs.partition_point(|(_, od, _)| *od <= d);
        if k == 0 {
            return Err(Error::invalid(format!("benchmark has no price on or before {d}")));
        }
        Ok(obs[k - 1].2)
    };
    // the first return needs a price strictly before the first return date
    let dates = r.dates();
    let first = dates
        .first()
        .ok_or_else(|| Error::invalid("empty returns panel"))?;
    let k = obs.partition_point(|(_, od, _)| od < first);
    if k == 0 {
        return Err(Error::invalid(format!("benchmark has no price before {first}")));
    }
    let mut prev = obs[k - 1].2;
    let mut out = Vec::with_capacity(dates.len());
    for &d in dates {
        let p = price_on(d)?;
        out.push(p.ln() - prev.ln());
        prev = p;
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct ThresholdSummary {
    threshold: f64,
    components: usize,
    nodes: usize,
}

#[derive(Debug, Serialize)]
struct BandStatus {
    value: f64,
    analytic: crate::spectra::BandPosition,
    empirical: crate::spectra::BandPosition,
}

#[derive(Debug, Serialize)]
struct Summary {
    schema: u32,
    n_symbols: usize,
    n_dates: usize,
    n_returns: usize,
    n_filled: usize,
    correlation: CorrelationMethod,
    n_sims: usize,
    base_seed: u64,
    quantile: f64,
    noise_threshold: f64,
    mp_band: [f64; 2],
    empirical_band: [f64; 2],
    lambda1: Option<BandStatus>,
    lambda2: Option<BandStatus>,
    eigenvalues_above_mp: usize,
    eigenvalues_above_empirical: usize,
    components_per_threshold: Vec<ThresholdSummary>,
    full_connection: Option<f64>,
    e2_partition: Option<E2Summary>,
    embedding: EmbeddingSummary,
    benchmark_correlation: Option<f64>,
    files: Vec<String>,
}

#[derive(Debug, Serialize)]
struct E2Summary {
    positive: Vec<String>,
    negative: Vec<String>,
    near_zero: Vec<String>,
}

#[derive(Debug, Serialize)]
struct EmbeddingSummary {
    stress: f64,
    eigenvalue_shares: Vec<f64>,
    non_euclidean_share: f64,
}

fn report(w: &mut Writer<'_>, cfg: &RunConfig, stage: &Stage) -> Result<()> {
    let panel = &stage.panel;
    let p = w.path("panel.csv");
    w.files.push("panel.fills.csv".into());
    panel.write_csv(&p)?;
    if let Some(t) = &stage.truth {
        t.write_json(&w.path("labels.json"))?;
    }

    let (r, corr, dist) = matrices(panel, cfg)?;
    corr.write_csv(&w.path("correlation.csv"))?;
    dist.write_csv(&w.path("distance.csv"))?;

    let env = build_envelope_with(&r, &cfg.envelope_config())?;
    env.write_json(&w.path("envelope.json"))?;

    let sw: SweepResult = sweep(&dist, &cfg.grid)?;
    w.json("sweep.json", &sw)?;

    let spectra = spectra_artifacts(w, cfg, &r, &corr, &env)?;

    let emb: Embedding = mds_embed(&dist, DEFAULT_DIMS)?;
    emb.write_csv(&w.path("coords.csv"))?;
    write_graphs(w, &dist, &cfg.grid, Some(&emb.xyz()))?;

    let status = |c: &Option<crate::spectra::EigenvalueClass>| {
        c.as_ref().map(|c| BandStatus {
            value: c.value,
            analytic: c.analytic,
            empirical: c.empirical,
        })
    };
    let mut files = w.files.clone();
    files.push("summary.json".into());
    let summary = Summary {
        schema: SUMMARY_SCHEMA,
        n_symbols: panel.n_symbols(),
        n_dates: panel.n_dates(),
        n_returns: r.len(),
        n_filled: panel.n_filled(),
        correlation: cfg.method,
        n_sims: cfg.n_sims,
        base_seed: cfg.base_seed,
        quantile: cfg.quantile,
        noise_threshold: env.noise_threshold,
        mp_band: spectra.band.analytic_band,
        empirical_band: spectra.band.empirical_band,
        lambda1: status(&spectra.band.lambda1),
        lambda2: status(&spectra.band.lambda2),
        eigenvalues_above_mp: spectra.band.above_analytic,
        eigenvalues_above_empirical: spectra.band.above_empirical,
        components_per_threshold: sw
            .thresholds
            .iter()
            .zip(&sw.component_counts)
            .zip(&sw.node_counts)
            .map(|((&threshold, &components), &nodes)| ThresholdSummary {
                threshold,
                components,
                nodes,
            })
            .collect(),
        full_connection: sw.full_connection,
        e2_partition: spectra.e2.map(|p| E2Summary {
            positive: p.positive,
            negative: p.negative,
            near_zero: p.near_zero,
        }),
        embedding: EmbeddingSummary {
            stress: emb.stress,
            eigenvalue_shares: emb.eigenvalue_shares.clone(),
            non_euclidean_share: emb.non_euclidean_share,
        },
        benchmark_correlation: spectra.benchmark,
        files,
    };
    w.json("summary.json", &summary)
}

/// Entry point shared by the binary: parses nothing, just runs and maps
/// errors to a JSON document on stderr. Returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let (kind, args) = cli.command.split();
    let out = args.out.clone();
    let result = RunConfig::try_from(args).and_then(|cfg| run(kind, &cfg));
    match result {
        Ok(_) => 0,
        Err(e) => {
            let doc = error_json(&e);
            eprintln!("{doc}");
            if out.is_dir() {
                let _ = std::fs::write(out.join("error.json"), format!("{doc}\n"));
            }
            1
        }
    }
}
