//! Statistical soundness of the range bounds: posterior means and standard
//! deviations sampled inside random boxes never escape the returned
//! intervals, across more than a hundred thousand draws.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use swsynth::bounds::{mean_range, sigma_sup, BoundConfig};
use swsynth::geometry::Rect;
use swsynth::learning::{GpFit, SeKernel};

fn random_fit(rng: &mut ChaCha8Rng, m: usize, lengthscale: f64) -> GpFit {
    let inputs: Vec<Vec<f64>> = (0..m)
        .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
        .collect();
    let targets: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    GpFit::fit(inputs, targets, SeKernel::isotropic(1.0, lengthscale)).unwrap()
}

#[test]
fn bounds_hold_over_a_hundred_thousand_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(123_457);
    let configs = [
        BoundConfig {
            refine_pitch: None,
            exact_lambda_max: false,
        },
        BoundConfig {
            refine_pitch: Some(0.25),
            exact_lambda_max: false,
        },
        BoundConfig {
            refine_pitch: Some(0.1),
            exact_lambda_max: true,
        },
    ];
    let mut draws = 0usize;
    let mut violations = 0usize;
    for round in 0..30 {
        let fit = random_fit(&mut rng, 10 + round, 0.4 + 0.05 * round as f64);
        let cfg = &configs[round % configs.len()];
        for _ in 0..4 {
            let ax = rng.random_range(-2.0..1.0);
            let ay = rng.random_range(-2.0..1.0);
            let w = rng.random_range(0.05..1.0);
            let q = Rect::new(vec![ax, ay], vec![ax + w, ay + w]).unwrap();
            let (lo, hi) = mean_range(&fit, &q, cfg);
            let sup = sigma_sup(&fit, &q, cfg);
            for _ in 0..900 {
                let x = [rng.random_range(ax..=ax + w), rng.random_range(ay..=ay + w)];
                let mu = fit.posterior_mean(&x);
                let sd = fit.posterior_std(&x);
                draws += 1;
                if mu < lo - 1e-12 || mu > hi + 1e-12 || sd > sup + 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    assert!(draws >= 100_000, "only {draws} draws");
    assert_eq!(
        violations, 0,
        "{violations} of {draws} draws escaped the bounds"
    );
}
