//! Built-in ground-truth systems for dataset generation and validation.
//!
//! These definitions are the only place the true dynamics exist; the
//! learn/abstract/synthesize stages never read them.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use swsynth::runtime::TrueDynamics;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Three fully-unknown linear modes with truncated Gaussian noise.
    Linear3,
    /// Four nonlinear modes around an identity known part, same noise.
    Nonlin4,
}

impl Scenario {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "linear3" => Ok(Scenario::Linear3),
            "nonlin4" => Ok(Scenario::Nonlin4),
            other => Err(CliError::config(format!(
                "unknown scenario {other:?}; built-ins are \"linear3\" and \"nonlin4\""
            ))),
        }
    }

    pub fn num_modes(&self) -> usize {
        match self {
            Scenario::Linear3 => 3,
            Scenario::Nonlin4 => 4,
        }
    }

    pub fn state_dim(&self) -> usize {
        2
    }

    pub fn domain(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![-2.0, -2.0], vec![2.0, 2.0])
    }

    pub fn noise_std(&self) -> f64 {
        0.01
    }

    pub fn noise_bound(&self) -> f64 {
        0.01
    }

    pub fn truth(&self) -> Box<dyn TrueDynamics> {
        match self {
            Scenario::Linear3 => Box::new(Linear3Truth),
            Scenario::Nonlin4 => Box::new(Nonlin4Truth),
        }
    }
}

fn truncated_gaussian(rng: &mut ChaCha8Rng, std: f64, bound: f64) -> f64 {
    loop {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        let v = std * z;
        if v.abs() <= bound {
            return v;
        }
    }
}

const LINEAR3_MATRICES: [[[f64; 2]; 2]; 3] = [
    [[0.4, 0.1], [0.0, 0.5]],
    [[0.4, 0.5], [0.0, 0.5]],
    [[0.4, 0.0], [0.5, 0.5]],
];

struct Linear3Truth;

impl TrueDynamics for Linear3Truth {
    fn step(&self, mode: usize, x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        let a = &LINEAR3_MATRICES[mode - 1];
        (0..2)
            .map(|i| a[i][0] * x[0] + a[i][1] * x[1] + truncated_gaussian(rng, 0.01, 0.01))
            .collect()
    }
}

fn nonlin4_residual(mode: usize, x: &[f64]) -> [f64; 2] {
    match mode {
        1 => [0.5 + 0.2 * x[1].sin(), 0.4 * x[0].cos()],
        2 => [-0.5 + 0.2 * x[1].sin(), 0.4 * x[0].cos()],
        3 => [0.4 * x[1].cos(), 0.5 + 0.2 * x[0].sin()],
        4 => [0.4 * x[1].cos(), -0.5 + 0.2 * x[0].sin()],
        _ => panic!("nonlin4 has modes 1..=4, got {mode}"),
    }
}

struct Nonlin4Truth;

impl TrueDynamics for Nonlin4Truth {
    fn step(&self, mode: usize, x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        let g = nonlin4_residual(mode, x);
        (0..2)
            .map(|i| x[i] + g[i] + truncated_gaussian(rng, 0.01, 0.01))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn scenario_names_round_trip() {
        assert_eq!(Scenario::parse("linear3").unwrap(), Scenario::Linear3);
        assert_eq!(Scenario::parse("nonlin4").unwrap(), Scenario::Nonlin4);
        assert!(Scenario::parse("other").is_err());
    }

    #[test]
    fn linear3_steps_match_the_matrices() {
        let truth = Scenario::Linear3.truth();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let next = truth.step(1, &[1.0, 1.0], &mut rng);
        // A1 (1,1)^T = (0.5, 0.5) up to the noise bound
        assert!((next[0] - 0.5).abs() <= 0.01 + 1e-12);
        assert!((next[1] - 0.5).abs() <= 0.01 + 1e-12);
    }

    #[test]
    fn nonlin4_modes_drive_opposite_directions() {
        let truth = Scenario::Nonlin4.truth();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let fwd = truth.step(1, &[0.0, 0.0], &mut rng);
        let back = truth.step(2, &[0.0, 0.0], &mut rng);
        assert!(fwd[0] > 0.4);
        assert!(back[0] < -0.4);
    }
}
