//! Runs the whole pipeline on a synthetic market and writes every artifact.
//!
//! ```text
//! cargo run --release --example full_report -- /tmp/report
//! ```

use corrnet::cli::{run, CommandKind, RunConfig};
use corrnet::synth::SynthSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: std::path::PathBuf = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("corrnet_report"));
    let mut cfg = RunConfig::new(&out);
    cfg.synth = Some(SynthSpec::blocks(vec![(6, 0.7), (6, 0.5), (6, 0.3)], 0.1, 500, 2024));
    cfg.n_sims = 500;
    let written = run(CommandKind::Report, &cfg)?;
    for f in &written.files {
        println!("{}", out.join(f).display());
    }
    println!("{}", std::fs::read_to_string(out.join("summary.json"))?);
    Ok(())
}
