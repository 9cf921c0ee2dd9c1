//! Spearman and Pearson matrices of a small synthetic market, and the
//! distances `d = 1 - c` the graphs are built from.

use corrnet::synth::SynthSpec;
use corrnet::{distance_matrix, generate, log_returns, pearson_matrix, spearman_matrix, PairMatrix};

fn show(title: &str, m: &PairMatrix) {
    println!("{title}");
    println!("      {}", m.symbols().join("     "));
    for (i, s) in m.symbols().iter().enumerate() {
        let row: Vec<String> = (0..m.len()).map(|j| format!("{:+.3}", m.get(i, j))).collect();
        println!("{s}  {}", row.join(" "));
    }
    println!();
}

fn main() -> corrnet::Result<()> {
    let spec = SynthSpec::blocks(vec![(3, 0.8), (3, 0.5)], 0.2, 500, 7);
    let (panel, _) = generate(&spec)?;
    let returns = log_returns(&panel)?;

    let spearman = spearman_matrix(&returns)?;
    show("spearman", &spearman);
    show("pearson", &pearson_matrix(&returns)?);
    show("distance (spearman)", &distance_matrix(&spearman)?);
    Ok(())
}
