//! Sweeps the distance threshold over a three-block market and reports when
//! clusters form and merge. Also checks the single-linkage dendrogram gives
//! the same clusters.

use corrnet::graph::default_grid;
use corrnet::graph::GraphJson;
use corrnet::synth::SynthSpec;
use corrnet::{
    build_graph, components, dendrogram_equivalence, distance_matrix, generate, log_returns,
    spearman_matrix, sweep,
};

fn main() -> corrnet::Result<()> {
    let spec = SynthSpec::blocks(vec![(4, 0.8), (4, 0.6), (4, 0.4)], 0.1, 750, 11);
    let (panel, truth) = generate(&spec)?;
    let dist = distance_matrix(&spearman_matrix(&log_returns(&panel)?)?)?;

    let result = sweep(&dist, &default_grid())?;
    println!("planted groups: {:?}", truth.groups());
    for (k, t) in result.thresholds.iter().enumerate() {
        println!(
            "T={t:.1}  nodes {:>2}  components {}  {:?}",
            result.node_counts[k],
            result.component_counts[k],
            result.components_at(k)
        );
    }
    println!("first connection {:?}, full connection {:?}", result.first_connection, result.full_connection);
    for ev in &result.merge_events {
        println!("merge at T={:.1}: {:?}", ev.threshold, ev.groups);
    }

    let dendro = dendrogram_equivalence(&dist)?;
    for t in [0.3, 0.6, 0.9] {
        let g = build_graph(&dist, t)?;
        assert_eq!(components(&g), dendro.cut(t));
    }
    println!("dendrogram cuts agree with threshold components");

    let g = build_graph(&dist, 0.6)?;
    let out = std::env::temp_dir().join("corrnet_graph_T0.60");
    GraphJson::new(&g, None).write(&out.with_extension("json"))?;
    g.write_dot(&out.with_extension("dot"))?;
    println!("wrote {}.{{json,dot}}", out.display());
    Ok(())
}
