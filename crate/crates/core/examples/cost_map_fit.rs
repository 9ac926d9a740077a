//! Fit a quadratic synergy-cost map to noisy samples and screen it for
//! convexity and a flat region.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use synergid::objective::{convexity_screen, fit_cost_map, CostSample};

fn main() -> synergid::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Normal::new(0.0, 2e-4).expect("valid sd");
    let samples: Vec<CostSample> = (0..=38)
        .flat_map(|i| std::iter::repeat_n(0.8 + 0.05 * i as f64, 5))
        .enumerate()
        .map(|(k, theta)| CostSample {
            theta,
            cost: (0.004 * (theta - 1.9f64).powi(2) + noise.sample(&mut rng)).max(0.0),
            iteration_index: k,
        })
        .collect();

    let map = fit_cost_map(&samples)?;
    println!(
        "J(theta) = {:.5} theta^2 + {:.5} theta + {:.5}",
        map.a2, map.a1, map.a0
    );
    println!("theta* = {:?}, rmse {:.2e}", map.theta_star, map.fit_rmse);
    let screen = convexity_screen(&map, &samples);
    println!(
        "convex {}, interior minimum {}, flat region {:?}",
        screen.convex, screen.interior_minimum, screen.flat_region
    );
    Ok(())
}
