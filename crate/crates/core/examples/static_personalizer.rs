//! The personaliser on a known quadratic: the estimate walks to the
//! minimiser and settles within the dither amplitude.

use synergid::personalizer::{
    default_steady_tolerance, PersonalizerConfig, PersonalizerState,
    DEFAULT_GAIN_CURVATURE_PRODUCT, DEFAULT_STEADY_WINDOW,
};

fn main() -> synergid::Result<()> {
    let (curvature, optimum) = (0.1, 2.2);
    let config = PersonalizerConfig::nominal(1.2)
        .with_curvature_gain(curvature, DEFAULT_GAIN_CURVATURE_PRODUCT);
    let tolerance = default_steady_tolerance(&config);
    let mut state = PersonalizerState::init(&config)?;
    let mut steady_at = None;
    for i in 0..100 {
        let theta = state.next_theta(&config);
        state.observe_cost(&config, curvature * (theta - optimum).powi(2))?;
        if steady_at.is_none() && state.detect_steady_state(DEFAULT_STEADY_WINDOW, tolerance) {
            steady_at = Some(i + 1);
        }
        if i % 10 == 9 {
            println!("iteration {:>3}: theta_hat {:.4}", i + 1, state.theta_hat);
        }
    }
    println!("steady state at iteration {steady_at:?}, optimum {optimum}");
    let checkpoint = state.to_json().expect("serialisable");
    println!("checkpoint is {} bytes of JSON", checkpoint.len());
    Ok(())
}
