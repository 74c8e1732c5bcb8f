//! Sound range bounds of the learned dynamics over a box.
//!
//! Two quantities drive the transition bounds: an over-approximation of the
//! one-step image of a cell under the known-plus-learned map, and an upper
//! bound on the posterior standard deviation over the cell. Both come from
//! per-training-point kernel intervals: for each training input, the squared
//! distance to a box is bracketed, so the kernel value is bracketed, so any
//! weighted sum of kernel values is bracketed.
//!
//! Refinement subdivides the query box along a global lattice anchored at the
//! origin. Using a fixed lattice (rather than bisecting each query box at its
//! own midpoint) makes the bounds monotone: shrinking the query box or the
//! lattice pitch never widens an interval.

use serde::{Deserialize, Serialize};

use crate::geometry::Rect;
use crate::learning::{GpFit, LearnedMode};

/// Known component of one mode's dynamics: a point evaluator together with a
/// box-image oracle. The built-ins cover what the case studies need; the
/// unknown remainder is the GP's job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KnownDynamics {
    Zero,
    Identity,
    /// `x -> A x` with a row-major matrix.
    Linear {
        matrix: Vec<Vec<f64>>,
    },
}

impl KnownDynamics {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            KnownDynamics::Zero => vec![0.0; x.len()],
            KnownDynamics::Identity => x.to_vec(),
            KnownDynamics::Linear { matrix } => matrix
                .iter()
                .map(|row| row.iter().zip(x).map(|(a, v)| a * v).sum())
                .collect(),
        }
    }

    /// Bounding box of the image of `q`. Exact for all three built-ins:
    /// a linear image of a box attains its componentwise extremes at vertices,
    /// which interval arithmetic reproduces.
    pub fn image_box(&self, q: &Rect) -> Rect {
        match self {
            KnownDynamics::Zero => Rect::new(vec![0.0; q.dim()], vec![0.0; q.dim()]).unwrap(),
            KnownDynamics::Identity => q.clone(),
            KnownDynamics::Linear { matrix } => {
                let mut lower = Vec::with_capacity(matrix.len());
                let mut upper = Vec::with_capacity(matrix.len());
                for row in matrix {
                    let (mut lo, mut hi) = (0.0, 0.0);
                    for (j, a) in row.iter().enumerate() {
                        let (p, r) = (a * q.lower()[j], a * q.upper()[j]);
                        lo += p.min(r);
                        hi += p.max(r);
                    }
                    lower.push(lo);
                    upper.push(hi);
                }
                Rect::new(lower, upper).unwrap()
            }
        }
    }
}

/// Knobs for the kernel interval bounds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    /// Pitch of the refinement lattice (same for every axis), anchored at the
    /// origin. `None` evaluates the base bound on the whole box.
    pub refine_pitch: Option<f64>,
    /// Use the exact largest Gram eigenvalue instead of the row-sum bound.
    pub exact_lambda_max: bool,
}

/// Splits `q` along the global lattice of the given pitch; the lattice is the
/// set of hyperplanes at integer multiples of `pitch`.
fn lattice_pieces(q: &Rect, pitch: f64) -> Vec<Rect> {
    let n = q.dim();
    let mut cuts: Vec<Vec<f64>> = Vec::with_capacity(n);
    for axis in 0..n {
        let mut c = vec![q.lower()[axis]];
        let mut k = (q.lower()[axis] / pitch).floor() + 1.0;
        while k * pitch < q.upper()[axis] {
            if k * pitch > q.lower()[axis] {
                c.push(k * pitch);
            }
            k += 1.0;
        }
        c.push(q.upper()[axis]);
        cuts.push(c);
    }
    let mut pieces = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let lower: Vec<f64> = (0..n).map(|a| cuts[a][idx[a]]).collect();
        let upper: Vec<f64> = (0..n).map(|a| cuts[a][idx[a] + 1]).collect();
        pieces.push(Rect::new(lower, upper).unwrap());
        let mut axis = n;
        loop {
            if axis == 0 {
                return pieces;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] + 1 < cuts[axis].len() {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Per-training-point scaled squared distance brackets to a box.
fn sqdist_brackets(fit: &GpFit, q: &Rect) -> Vec<(f64, f64)> {
    let kernel = fit.kernel();
    fit.inputs()
        .iter()
        .map(|xj| {
            let mut d2_min = 0.0;
            let mut d2_max = 0.0;
            for axis in 0..q.dim() {
                let scale = if kernel.length_scales.len() == 1 {
                    kernel.length_scales[0]
                } else {
                    kernel.length_scales[axis]
                };
                let lo = q.lower()[axis];
                let hi = q.upper()[axis];
                let v = xj[axis];
                let near = if v < lo {
                    lo - v
                } else if v > hi {
                    v - hi
                } else {
                    0.0
                };
                let far = (v - lo).abs().max((v - hi).abs());
                d2_min += (near / scale) * (near / scale);
                d2_max += (far / scale) * (far / scale);
            }
            (d2_min, d2_max)
        })
        .collect()
}

fn mean_range_base(fit: &GpFit, q: &Rect) -> (f64, f64) {
    if fit.is_empty() {
        return (0.0, 0.0);
    }
    let kernel = fit.kernel();
    let mut lo = 0.0;
    let mut hi = 0.0;
    for ((d2_min, d2_max), &alpha) in sqdist_brackets(fit, q).iter().zip(fit.weights().iter()) {
        let k_max = kernel.of_scaled_sqdist(*d2_min);
        let k_min = kernel.of_scaled_sqdist(*d2_max);
        if alpha >= 0.0 {
            hi += alpha * k_max;
            lo += alpha * k_min;
        } else {
            hi += alpha * k_min;
            lo += alpha * k_max;
        }
    }
    (lo, hi)
}

fn sigma_sup_base(fit: &GpFit, q: &Rect, lambda_max: f64) -> f64 {
    let s2 = fit.kernel().signal_variance;
    if fit.is_empty() {
        return s2.sqrt();
    }
    let kernel = fit.kernel();
    let norm2: f64 = sqdist_brackets(fit, q)
        .iter()
        .map(|(_, d2_max)| {
            let k_min = kernel.of_scaled_sqdist(*d2_max);
            k_min * k_min
        })
        .sum();
    let var = s2 - norm2 / lambda_max;
    if var <= 0.0 {
        0.0
    } else {
        var.sqrt().min(s2.sqrt())
    }
}

/// Interval containing `{mean(x) : x in q}` for one output dimension.
pub fn mean_range(fit: &GpFit, q: &Rect, cfg: &BoundConfig) -> (f64, f64) {
    match cfg.refine_pitch {
        None => mean_range_base(fit, q),
        Some(pitch) => {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for piece in lattice_pieces(q, pitch) {
                let (plo, phi) = mean_range_base(fit, &piece);
                lo = lo.min(plo);
                hi = hi.max(phi);
            }
            (lo, hi)
        }
    }
}

/// Upper bound on `sup_{x in q} posterior_std(x)` for one output dimension.
///
/// The posterior variance is the prior variance minus a quadratic form in the
/// kernel vector; the form is at least `|k|^2 / lambda_max`, and every kernel
/// entry is at least its minimum over the box. Falls back to the prior std
/// when the subtracted term vanishes.
pub fn sigma_sup(fit: &GpFit, q: &Rect, cfg: &BoundConfig) -> f64 {
    if fit.is_empty() {
        return fit.kernel().signal_variance.sqrt();
    }
    let lambda_max = fit.gram_lambda_max(cfg.exact_lambda_max);
    match cfg.refine_pitch {
        None => sigma_sup_base(fit, q, lambda_max),
        Some(pitch) => lattice_pieces(q, pitch)
            .iter()
            .map(|piece| sigma_sup_base(fit, piece, lambda_max))
            .fold(0.0, f64::max),
    }
}

/// Over-approximation of the one-step image
/// `{f(x) + mean(x) : x in q}` of a cell under one mode.
pub fn image(q: &Rect, known: &KnownDynamics, learned: &LearnedMode, cfg: &BoundConfig) -> Rect {
    let known_box = known.image_box(q);
    let mut lower = Vec::with_capacity(learned.state_dim());
    let mut upper = Vec::with_capacity(learned.state_dim());
    for (dim, fit) in learned.fits.iter().enumerate() {
        let (mlo, mhi) = mean_range(fit, q, cfg);
        lower.push(known_box.lower()[dim] + mlo);
        upper.push(known_box.upper()[dim] + mhi);
    }
    Rect::new(lower, upper).unwrap()
}

/// Image and per-dimension posterior-std suprema for one `(cell, mode)` pair,
/// sharing the distance geometry across output dimensions.
pub fn image_and_sigma_sup(
    q: &Rect,
    known: &KnownDynamics,
    learned: &LearnedMode,
    cfg: &BoundConfig,
) -> (Rect, Vec<f64>) {
    let im = image(q, known, learned, cfg);
    let sups = learned
        .fits
        .iter()
        .map(|fit| sigma_sup(fit, q, cfg))
        .collect();
    (im, sups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::SeKernel;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_fit(rng: &mut ChaCha8Rng, m: usize) -> GpFit {
        let inputs: Vec<Vec<f64>> = (0..m)
            .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
            .collect();
        let targets: Vec<f64> = (0..m).map(|_| rng.random_range(-1.5..1.5)).collect();
        GpFit::fit(inputs, targets, SeKernel::isotropic(1.0, 0.8)).unwrap()
    }

    #[test]
    fn degenerate_box_collapses_to_point_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let fit = random_fit(&mut rng, 12);
        let x = [0.3, -0.4];
        let q = Rect::new(x.to_vec(), x.to_vec()).unwrap();
        let (lo, hi) = mean_range(&fit, &q, &BoundConfig::default());
        let mu = fit.posterior_mean(&x);
        assert_relative_eq!(lo, mu, epsilon = 1e-9);
        assert_relative_eq!(hi, mu, epsilon = 1e-9);
    }

    #[test]
    fn empty_fit_has_prior_bounds() {
        let fit = GpFit::prior(SeKernel::isotropic(2.25, 1.0));
        let q = Rect::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(mean_range(&fit, &q, &BoundConfig::default()), (0.0, 0.0));
        assert_eq!(sigma_sup(&fit, &q, &BoundConfig::default()), 1.5);
    }

    #[test]
    fn sampled_posterior_stays_inside_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let cfg = BoundConfig {
            refine_pitch: Some(0.5),
            exact_lambda_max: false,
        };
        for _ in 0..20 {
            let fit = random_fit(&mut rng, 25);
            let ax = rng.random_range(-1.5..1.0);
            let ay = rng.random_range(-1.5..1.0);
            let q = Rect::new(vec![ax, ay], vec![ax + 1.0, ay + 1.0]).unwrap();
            let (lo, hi) = mean_range(&fit, &q, &cfg);
            let sup = sigma_sup(&fit, &q, &cfg);
            for _ in 0..500 {
                let x = [
                    rng.random_range(ax..ax + 1.0),
                    rng.random_range(ay..ay + 1.0),
                ];
                let mu = fit.posterior_mean(&x);
                assert!(mu >= lo - 1e-12 && mu <= hi + 1e-12, "mu outside bound");
                assert!(fit.posterior_std(&x) <= sup + 1e-12, "sigma above bound");
            }
        }
    }

    #[test]
    fn sigma_bound_dominates_exact_value_at_training_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fit = random_fit(&mut rng, 40);
        let x = fit.inputs()[0].clone();
        let q = Rect::new(
            x.iter().map(|v| v - 0.05).collect(),
            x.iter().map(|v| v + 0.05).collect(),
        )
        .unwrap();
        let cfg = BoundConfig {
            refine_pitch: Some(0.05),
            exact_lambda_max: true,
        };
        assert!(sigma_sup(&fit, &q, &cfg) >= fit.posterior_std(&x));
    }

    #[test]
    fn refinement_never_widens() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let fit = random_fit(&mut rng, 20);
            let q = Rect::new(vec![-0.7, 0.1], vec![0.4, 0.9]).unwrap();
            let base = mean_range(&fit, &q, &BoundConfig::default());
            let mut prev = base;
            for pitch in [0.8, 0.4, 0.2, 0.1] {
                let cfg = BoundConfig {
                    refine_pitch: Some(pitch),
                    exact_lambda_max: false,
                };
                let cur = mean_range(&fit, &q, &cfg);
                assert!(cur.0 >= prev.0 - 1e-12 && cur.1 <= prev.1 + 1e-12);
                let s_prev = sigma_sup(
                    &fit,
                    &q,
                    &BoundConfig {
                        refine_pitch: Some(pitch * 2.0),
                        exact_lambda_max: false,
                    },
                );
                let s_cur = sigma_sup(&fit, &q, &cfg);
                assert!(s_cur <= s_prev + 1e-12);
                prev = cur;
            }
        }
    }

    #[test]
    fn image_is_monotone_in_the_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let fit0 = random_fit(&mut rng, 15);
        let fit1 = random_fit(&mut rng, 15);
        let learned = LearnedMode {
            mode: 1,
            fits: vec![fit0, fit1],
            rkhs_bounds: vec![1.0, 1.0],
            bound_source: crate::learning::RkhsBoundSource::Provided,
            theta: 0.01,
            info_gain_override: None,
        };
        let cfg = BoundConfig {
            refine_pitch: Some(0.25),
            exact_lambda_max: false,
        };
        let known = KnownDynamics::Identity;
        let q = Rect::new(vec![-0.5, -0.5], vec![0.75, 0.5]).unwrap();
        let outer = image(&q, &known, &learned, &cfg);
        for _ in 0..20 {
            let lo = [rng.random_range(-0.5..0.3), rng.random_range(-0.5..0.2)];
            let q_sub = Rect::new(
                lo.to_vec(),
                vec![rng.random_range(lo[0]..0.75), rng.random_range(lo[1]..0.5)],
            )
            .unwrap();
            let inner = image(&q_sub, &known, &learned, &cfg);
            assert!(inner.contained_in(&outer));
        }
    }

    #[test]
    fn linear_known_image_is_the_vertex_hull() {
        let a1 = KnownDynamics::Linear {
            matrix: vec![vec![0.4, 0.1], vec![0.0, 0.5]],
        };
        let q = Rect::new(vec![0.0, 0.0], vec![0.125, 0.125]).unwrap();
        let im = a1.image_box(&q);
        assert_relative_eq!(im.lower()[0], 0.0);
        assert_relative_eq!(im.upper()[0], 0.0625);
        assert_relative_eq!(im.lower()[1], 0.0);
        assert_relative_eq!(im.upper()[1], 0.0625);

        // with a perfectly-known mode and no learned residual, the image is
        // exactly the linear hull
        let learned = LearnedMode {
            mode: 1,
            fits: vec![
                GpFit::prior(SeKernel::isotropic(1.0, 1.0)),
                GpFit::prior(SeKernel::isotropic(1.0, 1.0)),
            ],
            rkhs_bounds: vec![0.0, 0.0],
            bound_source: crate::learning::RkhsBoundSource::Provided,
            theta: 0.01,
            info_gain_override: None,
        };
        let full = image(&q, &a1, &learned, &BoundConfig::default());
        assert!(full.contained_in(&Rect::new(vec![0.0, 0.0], vec![0.0625, 0.0625]).unwrap()));
        // zero known part leaves only the (empty) mean range
        let zero_im = image(&q, &KnownDynamics::Zero, &learned, &BoundConfig::default());
        assert_eq!(zero_im.lower(), &[0.0, 0.0]);
        assert_eq!(zero_im.upper(), &[0.0, 0.0]);
    }
}
