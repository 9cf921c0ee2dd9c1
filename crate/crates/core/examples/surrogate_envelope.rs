//! Builds the noise envelope from rotated surrogates and compares observed
//! distances with the noise threshold.

use corrnet::surrogate::{build_envelope_with, EnvelopeConfig, SurrogateMode};
use corrnet::synth::SynthSpec;
use corrnet::{distance_matrix, generate, log_returns, shift_surrogate, spearman_matrix};

fn main() -> corrnet::Result<()> {
    let spec = SynthSpec::blocks(vec![(5, 0.6), (5, 0.3)], 0.0, 500, 5);
    let (panel, _) = generate(&spec)?;
    let returns = log_returns(&panel)?;

    let one = shift_surrogate(&returns, 42)?;
    println!(
        "surrogate keeps each column's values: {}",
        (0..returns.n_symbols()).all(|j| {
            let mut a: Vec<f64> = returns.values().column(j).iter().copied().collect();
            let mut b: Vec<f64> = one.values().column(j).iter().copied().collect();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            a == b
        })
    );

    for mode in [SurrogateMode::CyclicShift, SurrogateMode::Permutation] {
        let env = build_envelope_with(
            &returns,
            &EnvelopeConfig { n_sims: 500, base_seed: 1, mode, ..EnvelopeConfig::default() },
        )?;
        println!(
            "{mode:?}: noise threshold {:.3}, eigenvalues in [{:.3}, {:.3}]",
            env.noise_threshold, env.eig_min, env.eig_max
        );
        let dist = distance_matrix(&spearman_matrix(&returns)?)?;
        let below = dist.upper_triangle().iter().filter(|&&d| d < env.noise_threshold).count();
        println!("  {below} of {} observed pairs lie below it", dist.upper_triangle().len());
    }
    Ok(())
}
