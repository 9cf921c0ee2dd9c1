//! Places a block market in 3D by classical scaling and reports how much of
//! the distance structure survives.

use corrnet::synth::SynthSpec;
use corrnet::{distance_matrix, generate, log_returns, mds_embed, spearman_matrix};

fn main() -> corrnet::Result<()> {
    let spec = SynthSpec::blocks(vec![(4, 0.7), (4, 0.7), (4, 0.7)], 0.2, 500, 9);
    let (panel, truth) = generate(&spec)?;
    let dist = distance_matrix(&spearman_matrix(&log_returns(&panel)?)?)?;

    for dims in 1..=4 {
        let e = mds_embed(&dist, dims)?;
        println!("dims {dims}: stress {:.4}", e.stress);
    }
    let e = mds_embed(&dist, 3)?;
    println!(
        "eigenvalue shares {:?}, non-euclidean share {:.4}",
        e.eigenvalue_shares, e.non_euclidean_share
    );
    for (i, p) in e.xyz().iter().enumerate() {
        println!("{} (block {})  {:+.3} {:+.3} {:+.3}", e.symbols[i], truth.labels[i], p[0], p[1], p[2]);
    }
    Ok(())
}
