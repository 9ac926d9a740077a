use proptest::prelude::*;
use synergid::personalizer::{
    PersonalizerConfig, PersonalizerError, PersonalizerState, DEFAULT_GAIN_CURVATURE_PRODUCT,
    SYNERGY_BOUNDS,
};

fn run(config: &PersonalizerConfig, cost: impl Fn(f64) -> f64, n: usize) -> PersonalizerState {
    let mut state = PersonalizerState::init(config).unwrap();
    for _ in 0..n {
        let theta = state.next_theta(config);
        state.observe_cost(config, cost(theta)).unwrap();
    }
    state
}

fn adversarial_cost() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(0.0),
        Just(f64::MAX / 4.0),
        Just(f64::MIN_POSITIVE),
        0.0..1.0f64,
        0.0..1e12f64,
    ]
}

proptest! {
    #[test]
    fn commands_stay_in_bounds(
        init in 0.8..=2.7f64,
        log_scale in -3.0..8.0f64,
        costs in prop::collection::vec(adversarial_cost(), 1..200),
    ) {
        let (lo, hi) = SYNERGY_BOUNDS;
        let mut config = PersonalizerConfig::nominal(init);
        config.gain_scale = 10f64.powf(log_scale);
        let mut state = PersonalizerState::init(&config).unwrap();
        for cost in costs {
            let theta = state.next_theta(&config);
            prop_assert!((lo..=hi).contains(&theta));
            let before = state.clone();
            match state.observe_cost(&config, cost) {
                Ok(()) => prop_assert!((lo..=hi).contains(&state.theta_hat)),
                Err(e) => {
                    prop_assert_eq!(e, PersonalizerError::NonFiniteUpdate(cost));
                    prop_assert_eq!(&state, &before);
                }
            }
        }
    }

    #[test]
    fn invalid_costs_leave_state_unchanged(
        bad in prop_oneof![Just(f64::NAN), Just(f64::INFINITY), Just(f64::NEG_INFINITY), -1e3..-1e-12f64],
        warmup in 0usize..12,
    ) {
        let config = PersonalizerConfig::nominal(1.5);
        let mut state = run(&config, |t| (t - 1.9).powi(2), warmup);
        let before = state.clone();
        prop_assert!(state.observe_cost(&config, bad).is_err());
        prop_assert_eq!(state, before);
    }

    #[test]
    fn constant_cost_does_not_move_the_estimate(init in 0.9..2.6f64, level in 0.0..1.0f64) {
        let config = PersonalizerConfig::nominal(init).with_curvature_gain(0.01, DEFAULT_GAIN_CURVATURE_PRODUCT);
        let state = run(&config, |_| level, 50);
        prop_assert_eq!(state.theta_hat, init);
    }

    #[test]
    fn scaled_costs_scale_the_gradient(c in 1e-3..1e3f64, star in 1.0..2.5f64) {
        let config = PersonalizerConfig::nominal(1.5);
        let mut scaled = config.clone();
        scaled.gain_scale /= c;
        let mut a = PersonalizerState::init(&config).unwrap();
        let mut b = PersonalizerState::init(&scaled).unwrap();
        for _ in 0..30 {
            let theta = a.next_theta(&config);
            a.observe_cost(&config, (theta - star).powi(2)).unwrap();
            b.observe_cost(&scaled, c * (b.next_theta(&scaled) - star).powi(2)).unwrap();
            let tol = 1e-9 * a.gradient_estimate.abs().max(1e-6);
            prop_assert!((b.gradient_estimate - c * a.gradient_estimate).abs() <= tol * c);
            prop_assert!((a.theta_hat - b.theta_hat).abs() < 1e-9);
        }
    }

    #[test]
    fn static_quadratics_converge(c in 0.01..1.0f64, star in 1.1..2.6f64, init in 0.9..2.6f64) {
        let config = PersonalizerConfig::nominal(init).with_curvature_gain(c, DEFAULT_GAIN_CURVATURE_PRODUCT);
        let state = run(&config, |t| c * (t - star).powi(2), 150);
        prop_assert!((state.theta_hat - star).abs() < 0.05);
    }

    #[test]
    fn reruns_are_identical(c in 0.01..1.0f64, star in 1.1..2.6f64) {
        let config = PersonalizerConfig::nominal(1.5).with_curvature_gain(c, DEFAULT_GAIN_CURVATURE_PRODUCT);
        let a = run(&config, |t| c * (t - star).powi(2), 60);
        let b = run(&config, |t| c * (t - star).powi(2), 60);
        prop_assert_eq!(a.theta_history, b.theta_history);
    }
}

#[test]
fn checkpoint_resumes_the_same_trajectory() {
    let config =
        PersonalizerConfig::nominal(1.2).with_curvature_gain(0.1, DEFAULT_GAIN_CURVATURE_PRODUCT);
    let cost = |t: f64| 0.1 * (t - 2.0).powi(2);
    let straight = run(&config, cost, 40);
    let mut resumed =
        PersonalizerState::from_json(&run(&config, cost, 17).to_json().unwrap()).unwrap();
    for _ in 17..40 {
        let theta = resumed.next_theta(&config);
        resumed.observe_cost(&config, cost(theta)).unwrap();
    }
    assert_eq!(resumed, straight);
}

#[test]
fn config_round_trips_through_toml() {
    let config = PersonalizerConfig::nominal(1.5).with_max_step(Some(0.1));
    let text = toml::to_string(&config).unwrap();
    let back: PersonalizerConfig = toml::from_str(&text).unwrap();
    assert_eq!(back, config);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut config = PersonalizerConfig::nominal(1.5);
    config.estimator_gain.pop();
    assert!(matches!(
        config.validate(),
        Err(PersonalizerError::InvalidConfig {
            field: "estimator_gain",
            ..
        })
    ));
    assert!(PersonalizerConfig::nominal(3.5).validate().is_err());
    let mut config = PersonalizerConfig::nominal(1.5);
    config.dither_amp = -0.1;
    assert!(PersonalizerState::init(&config).is_err());
}
