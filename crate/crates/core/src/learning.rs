//! Gaussian process regression over per-mode residual datasets, with the
//! certified uniform error machinery layered on top.
//!
//! Each mode's unknown dynamics component is learned one output dimension at
//! a time. The regression noise parameter is pinned to `1 + 2/m` for `m`
//! samples, which is what the uniform error bound requires; the bound itself
//! is `beta(delta) * posterior_std(x)` where `beta` combines the RKHS norm
//! bound of the target, the realized information gain of the dataset, and the
//! sub-Gaussian parameter of the process noise.

use std::io::Read;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erf_inv};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("no samples for mode {0}")]
    EmptyMode(usize),
    #[error("unknown mode id {0} (modes are 1-based)")]
    UnknownMode(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Gram matrix is numerically singular even with jitter up to {max_jitter:e} (min diagonal pivot would be non-positive)")]
    SingularGram { max_jitter: f64 },
    #[error("confidence delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("csv parse error at line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

/// One state-action-successor measurement. Mode ids are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub mode: usize,
    pub x_next: Vec<f64>,
}

/// Process noise model. Both supported kinds have bounded support, and both
/// are sub-Gaussian; `theta` overrides the default sub-Gaussian parameter
/// (the underlying standard deviation for the truncated Gaussian, the support
/// bound for the uniform).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    TruncatedGaussian {
        std: f64,
        bound: f64,
        theta: Option<f64>,
    },
    BoundedUniform {
        bound: f64,
        theta: Option<f64>,
    },
}

impl NoiseModel {
    pub fn theta(&self) -> f64 {
        match self {
            NoiseModel::TruncatedGaussian { std, theta, .. } => theta.unwrap_or(*std),
            NoiseModel::BoundedUniform { bound, theta } => theta.unwrap_or(*bound),
        }
    }

    pub fn support_bound(&self) -> f64 {
        match self {
            NoiseModel::TruncatedGaussian { bound, .. } => *bound,
            NoiseModel::BoundedUniform { bound, .. } => *bound,
        }
    }

    /// `P[|v| <= eta]` for a single noise component.
    pub fn tail_probability(&self, eta: f64) -> f64 {
        assert!(eta >= 0.0, "eta must be nonnegative");
        match self {
            NoiseModel::TruncatedGaussian { std, bound, .. } => {
                if eta >= *bound {
                    return 1.0;
                }
                let z = |v: f64| erf(v / (std * std::f64::consts::SQRT_2));
                z(eta) / z(*bound)
            }
            NoiseModel::BoundedUniform { bound, .. } => (eta / bound).min(1.0),
        }
    }

    /// Smallest `eta` with `P[|v| <= eta] >= p`.
    pub fn tail_quantile(&self, p: f64) -> f64 {
        assert!((0.0..=1.0).contains(&p));
        match self {
            NoiseModel::TruncatedGaussian { std, bound, .. } => {
                if p >= 1.0 {
                    return *bound;
                }
                let scale = std * std::f64::consts::SQRT_2;
                (scale * erf_inv(p * erf(bound / scale))).min(*bound)
            }
            NoiseModel::BoundedUniform { bound, .. } => p * bound,
        }
    }

    /// Per-dimension `P[|v_i| <= eta_i]`.
    pub fn tail_probabilities(&self, eta: &[f64]) -> Vec<f64> {
        eta.iter().map(|&e| self.tail_probability(e)).collect()
    }
}

/// Squared-exponential kernel with optional per-dimension length scales
/// (a single entry broadcasts to every input dimension).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeKernel {
    pub signal_variance: f64,
    pub length_scales: Vec<f64>,
}

impl SeKernel {
    pub fn new(signal_variance: f64, length_scales: Vec<f64>) -> Self {
        assert!(signal_variance > 0.0);
        assert!(!length_scales.is_empty() && length_scales.iter().all(|&l| l > 0.0));
        SeKernel {
            signal_variance,
            length_scales,
        }
    }

    pub fn isotropic(signal_variance: f64, length_scale: f64) -> Self {
        Self::new(signal_variance, vec![length_scale])
    }

    fn scale(&self, axis: usize) -> f64 {
        if self.length_scales.len() == 1 {
            self.length_scales[0]
        } else {
            self.length_scales[axis]
        }
    }

    /// Sum over axes of `((a_i - b_i) / l_i)^2`.
    pub fn scaled_sqdist(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (x, y))| {
                let d = (x - y) / self.scale(i);
                d * d
            })
            .sum()
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        self.signal_variance * (-0.5 * self.scaled_sqdist(a, b)).exp()
    }

    /// Kernel value at a given scaled squared distance.
    pub fn of_scaled_sqdist(&self, d2: f64) -> f64 {
        self.signal_variance * (-0.5 * d2).exp()
    }
}

/// Fitted GP posterior for one output dimension.
///
/// Stores the training data, the factorized Gram system `K + sigma^2 I`, the
/// weight vector, and the realized information gain of the dataset.
#[derive(Debug)]
pub struct GpFit {
    kernel: SeKernel,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    sigma: f64,
    weights: DVector<f64>,
    chol: Option<Cholesky<f64, Dyn>>,
    information_gain: f64,
    jitter: f64,
    clamp_events: AtomicU64,
    lambda_max_cache: [OnceLock<f64>; 2],
}

impl Clone for GpFit {
    fn clone(&self) -> Self {
        GpFit {
            kernel: self.kernel.clone(),
            inputs: self.inputs.clone(),
            targets: self.targets.clone(),
            sigma: self.sigma,
            weights: self.weights.clone(),
            chol: self.chol.clone(),
            information_gain: self.information_gain,
            jitter: self.jitter,
            clamp_events: AtomicU64::new(self.clamp_events.load(Ordering::Relaxed)),
            lambda_max_cache: self.lambda_max_cache.clone(),
        }
    }
}

impl GpFit {
    /// Fits one output dimension. The regression noise parameter is set to
    /// `1 + 2/m` internally. Fails only if the Gram factorization cannot be
    /// repaired by jitter escalation.
    pub fn fit(
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        kernel: SeKernel,
    ) -> Result<Self, LearnError> {
        if inputs.is_empty() {
            return Err(LearnError::EmptyDataset);
        }
        if inputs.len() != targets.len() {
            return Err(LearnError::DimensionMismatch {
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        let m = inputs.len();
        let sigma = 1.0 + 2.0 / m as f64;
        let gram = {
            let mut g = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in 0..=i {
                    let v = kernel.eval(&inputs[i], &inputs[j]);
                    g[(i, j)] = v;
                    g[(j, i)] = v;
                }
            }
            for i in 0..m {
                g[(i, i)] += sigma * sigma;
            }
            g
        };

        // sigma = 1 + 2/m regularizes strongly already; jitter is a last resort
        let mut jitter = 0.0;
        let base = 1e-10 * kernel.signal_variance;
        let chol = loop {
            let mut g = gram.clone();
            if jitter > 0.0 {
                for i in 0..m {
                    g[(i, i)] += jitter;
                }
            }
            match Cholesky::new(g) {
                Some(c) => break c,
                None => {
                    jitter = if jitter == 0.0 { base } else { jitter * 10.0 };
                    if jitter > 1e-4 * kernel.signal_variance {
                        return Err(LearnError::SingularGram {
                            max_jitter: 1e-4 * kernel.signal_variance,
                        });
                    }
                }
            }
        };

        let weights = chol.solve(&DVector::from_column_slice(&targets));
        // gamma = 1/2 log det(I + sigma^-2 K) = sum log L_ii - m log sigma
        let information_gain =
            (0..m).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() - m as f64 * sigma.ln();

        Ok(GpFit {
            kernel,
            inputs,
            targets,
            sigma,
            weights,
            chol: Some(chol),
            information_gain: information_gain.max(0.0),
            jitter,
            clamp_events: AtomicU64::new(0),
            lambda_max_cache: Default::default(),
        })
    }

    /// Posterior with no data: zero mean, prior variance everywhere.
    pub fn prior(kernel: SeKernel) -> Self {
        GpFit {
            kernel,
            inputs: Vec::new(),
            targets: Vec::new(),
            sigma: f64::NAN,
            weights: DVector::zeros(0),
            chol: None,
            information_gain: 0.0,
            jitter: 0.0,
            clamp_events: AtomicU64::new(0),
            lambda_max_cache: Default::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn kernel(&self) -> &SeKernel {
        &self.kernel
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// Realized information gain `1/2 log det(I + sigma^-2 K)` of the dataset.
    pub fn information_gain(&self) -> f64 {
        self.information_gain
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// How many posterior variance evaluations were clamped up to zero.
    pub fn clamp_count(&self) -> u64 {
        self.clamp_events.load(Ordering::Relaxed)
    }

    /// Log marginal likelihood of the training targets under this fit.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let m = self.inputs.len();
        if m == 0 {
            return 0.0;
        }
        let chol = self
            .chol
            .as_ref()
            .expect("nonempty fit has a factorization");
        let y = DVector::from_column_slice(&self.targets);
        let data_term = -0.5 * y.dot(&self.weights);
        let det_term: f64 = -(0..m).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>();
        data_term + det_term - 0.5 * m as f64 * (2.0 * std::f64::consts::PI).ln()
    }

    fn kernel_vector(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|xi| self.kernel.eval(x, xi)),
        )
    }

    pub fn posterior_mean(&self, x: &[f64]) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.kernel_vector(x).dot(&self.weights)
    }

    pub fn posterior_var(&self, x: &[f64]) -> f64 {
        let prior = self.kernel.eval(x, x);
        let Some(chol) = &self.chol else { return prior };
        let k = self.kernel_vector(x);
        let v = chol.solve(&k);
        let var = prior - k.dot(&v);
        if var < 0.0 {
            self.clamp_events.fetch_add(1, Ordering::Relaxed);
            0.0
        } else {
            var
        }
    }

    pub fn posterior_std(&self, x: &[f64]) -> f64 {
        self.posterior_var(x).sqrt()
    }

    /// Largest eigenvalue of the Gram system, either the cheap row-sum bound
    /// or the exact symmetric eigenvalue. Memoized per fit.
    pub fn gram_lambda_max(&self, exact: bool) -> f64 {
        let m = self.inputs.len();
        if m == 0 {
            return 0.0;
        }
        *self.lambda_max_cache[usize::from(exact)].get_or_init(|| self.compute_lambda_max(exact))
    }

    fn compute_lambda_max(&self, exact: bool) -> f64 {
        let m = self.inputs.len();
        let mut gram = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = self.kernel.eval(&self.inputs[i], &self.inputs[j]);
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        for i in 0..m {
            gram[(i, i)] += self.sigma * self.sigma + self.jitter;
        }
        if exact {
            gram.symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(0.0, f64::max)
        } else {
            (0..m)
                .map(|i| gram.row(i).iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        }
    }
}

/// Where the RKHS norm bound came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RkhsBoundSource {
    /// `kappa * max |target|` fallback; results hold under the heuristic.
    Heuristic,
    /// Supplied by the user.
    Provided,
}

/// Learned dynamics of one mode: an independent GP per output dimension plus
/// everything the uniform error bound needs.
#[derive(Debug, Clone)]
pub struct LearnedMode {
    pub mode: usize,
    pub fits: Vec<GpFit>,
    pub rkhs_bounds: Vec<f64>,
    pub bound_source: RkhsBoundSource,
    pub theta: f64,
    /// External information-gain upper bound; overrides the realized gain of
    /// every per-dimension fit when present.
    pub info_gain_override: Option<f64>,
}

impl LearnedMode {
    pub fn state_dim(&self) -> usize {
        self.fits.len()
    }

    pub fn sigma(&self) -> f64 {
        self.fits[0].sigma()
    }

    pub fn information_gain(&self, dim: usize) -> f64 {
        self.info_gain_override
            .unwrap_or_else(|| self.fits[dim].information_gain())
    }

    /// Uniform-error multiplier at confidence `1 - delta`:
    /// `(theta / sqrt(sigma)) * (B + theta * sqrt(2 (gamma + 1 + ln(1/delta))))`.
    pub fn beta(&self, dim: usize, delta: f64) -> Result<f64, LearnError> {
        if !(0.0 < delta && delta < 1.0) {
            return Err(LearnError::InvalidDelta(delta));
        }
        let gamma = self.information_gain(dim);
        let b = self.rkhs_bounds[dim];
        let sigma = self.sigma();
        Ok(beta_formula(self.theta, sigma, b, gamma, delta))
    }

    /// Largest failure probability `delta` with `beta(delta) * sigma_sup <= eps`,
    /// clamped to `[delta_min, 1]`; `1` means no guarantee is possible.
    pub fn invert_confidence(&self, dim: usize, eps: f64, sigma_sup: f64, delta_min: f64) -> f64 {
        debug_assert!(eps >= 0.0 && delta_min > 0.0);
        if sigma_sup <= 0.0 {
            return delta_min;
        }
        let gamma = self.information_gain(dim);
        let b = self.rkhs_bounds[dim];
        let sigma = self.sigma();
        // solve (theta/sqrt(sigma)) (B + theta sqrt(2(gamma+1+L))) = eps/sigma_sup for L = ln(1/delta)
        let t = (sigma.sqrt() * eps / (self.theta * sigma_sup) - b) / self.theta;
        if t < 0.0 {
            return 1.0;
        }
        let log_term = 0.5 * t * t - gamma - 1.0;
        if log_term <= 0.0 {
            return 1.0;
        }
        (-log_term).exp().clamp(delta_min, 1.0)
    }
}

pub(crate) fn beta_formula(theta: f64, sigma: f64, b: f64, gamma: f64, delta: f64) -> f64 {
    (theta / sigma.sqrt()) * (b + theta * (2.0 * (gamma + 1.0 + (1.0 / delta).ln())).sqrt())
}

/// Residual dataset for one mode: shared inputs, per-dimension targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualData {
    pub mode: usize,
    pub inputs: Vec<Vec<f64>>,
    /// `targets[dim][sample]`
    pub targets: Vec<Vec<f64>>,
}

/// Subtracts the known dynamics from every successor measurement and groups
/// the residual targets by mode: `y_i = x_next_i - f_mode(x_i)`.
pub fn build_residuals<F>(
    samples: &[Sample],
    num_modes: usize,
    known: F,
) -> Result<Vec<ResidualData>, LearnError>
where
    F: Fn(usize, &[f64]) -> Vec<f64>,
{
    let dim = samples.first().map(|s| s.x.len());
    let mut per_mode: Vec<ResidualData> = (1..=num_modes)
        .map(|mode| ResidualData {
            mode,
            inputs: Vec::new(),
            targets: dim.map(|n| vec![Vec::new(); n]).unwrap_or_default(),
        })
        .collect();
    for s in samples {
        if s.mode == 0 || s.mode > num_modes {
            return Err(LearnError::UnknownMode(s.mode));
        }
        let n = dim.unwrap();
        if s.x.len() != n || s.x_next.len() != n {
            return Err(LearnError::DimensionMismatch {
                expected: n,
                got: s.x.len().max(s.x_next.len()),
            });
        }
        let f = known(s.mode, &s.x);
        if f.len() != n {
            return Err(LearnError::DimensionMismatch {
                expected: n,
                got: f.len(),
            });
        }
        let entry = &mut per_mode[s.mode - 1];
        entry.inputs.push(s.x.clone());
        for d in 0..n {
            if entry.targets.len() <= d {
                entry.targets.push(Vec::new());
            }
            entry.targets[d].push(s.x_next[d] - f[d]);
        }
    }
    Ok(per_mode)
}

/// Options controlling how modes are learned from residual data.
#[derive(Debug, Clone)]
pub struct LearnOptions {
    pub kernels: Vec<SeKernel>,
    /// Explicit RKHS bounds per mode per dimension, or a heuristic multiplier.
    pub rkhs_bounds: Option<Vec<Vec<f64>>>,
    pub rkhs_kappa: f64,
    pub info_gain_override: Option<f64>,
    /// When given, each mode's kernel is chosen from this grid by summed
    /// per-dimension log marginal likelihood (ties keep the earlier entry).
    /// Off by default: the error bound is stated for a fixed kernel.
    pub kernel_grid: Option<Vec<SeKernel>>,
}

fn fit_dims(data: &ResidualData, kernel: &SeKernel) -> Result<Vec<GpFit>, LearnError> {
    data.targets
        .iter()
        .map(|ys| GpFit::fit(data.inputs.clone(), ys.clone(), kernel.clone()))
        .collect()
}

/// Fits every mode of a residual dataset.
pub fn learn_modes(
    residuals: &[ResidualData],
    noise: &NoiseModel,
    opts: &LearnOptions,
) -> Result<Vec<LearnedMode>, LearnError> {
    let mut out = Vec::with_capacity(residuals.len());
    for (i, data) in residuals.iter().enumerate() {
        if data.inputs.is_empty() {
            return Err(LearnError::EmptyMode(data.mode));
        }
        let fits = match &opts.kernel_grid {
            Some(grid) if !grid.is_empty() => {
                let mut best: Option<(f64, Vec<GpFit>)> = None;
                for kernel in grid {
                    let fits = fit_dims(data, kernel)?;
                    let score: f64 = fits.iter().map(GpFit::log_marginal_likelihood).sum();
                    if best.as_ref().map(|(s, _)| score > *s).unwrap_or(true) {
                        best = Some((score, fits));
                    }
                }
                best.expect("nonempty grid").1
            }
            _ => {
                let kernel = opts.kernels[i.min(opts.kernels.len() - 1)].clone();
                fit_dims(data, &kernel)?
            }
        };
        let mut bounds = Vec::with_capacity(data.targets.len());
        for (d, ys) in data.targets.iter().enumerate() {
            let b = match &opts.rkhs_bounds {
                Some(table) => table[i][d],
                None => opts.rkhs_kappa * ys.iter().fold(0.0f64, |acc, y| acc.max(y.abs())),
            };
            bounds.push(b);
        }
        out.push(LearnedMode {
            mode: data.mode,
            fits,
            rkhs_bounds: bounds,
            bound_source: if opts.rkhs_bounds.is_some() {
                RkhsBoundSource::Provided
            } else {
                RkhsBoundSource::Heuristic
            },
            theta: noise.theta(),
            info_gain_override: opts.info_gain_override,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// dataset CSV and model serialization

/// Reads a dataset in the `u, x1..xn, xp1..xpn` CSV layout.
pub fn read_dataset_csv<R: Read>(reader: R) -> Result<Vec<Sample>, LearnError> {
    let mut text = String::new();
    let mut r = reader;
    r.read_to_string(&mut text).map_err(|e| LearnError::Csv {
        line: 0,
        msg: e.to_string(),
    })?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(LearnError::Csv {
        line: 1,
        msg: "missing header".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"u") {
        return Err(LearnError::Csv {
            line: 1,
            msg: "header must start with 'u'".into(),
        });
    }
    let n = cols
        .iter()
        .filter(|c| c.starts_with('x') && !c.starts_with("xp"))
        .count();
    let np = cols.iter().filter(|c| c.starts_with("xp")).count();
    if n == 0 || n != np || cols.len() != 1 + 2 * n {
        return Err(LearnError::Csv {
            line: 1,
            msg: format!("header must be u, x1..xn, xp1..xpn (got {header:?})"),
        });
    }
    let mut samples = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 1 + 2 * n {
            return Err(LearnError::Csv {
                line: idx + 1,
                msg: format!("expected {} fields, got {}", 1 + 2 * n, fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64, LearnError> {
            s.parse::<f64>().map_err(|e| LearnError::Csv {
                line: idx + 1,
                msg: format!("{e}: {s:?}"),
            })
        };
        let mode = fields[0].parse::<usize>().map_err(|e| LearnError::Csv {
            line: idx + 1,
            msg: format!("{e}: {:?}", fields[0]),
        })?;
        let x = fields[1..1 + n]
            .iter()
            .map(|s| parse(s))
            .collect::<Result<Vec<_>, _>>()?;
        let x_next = fields[1 + n..]
            .iter()
            .map(|s| parse(s))
            .collect::<Result<Vec<_>, _>>()?;
        samples.push(Sample { x, mode, x_next });
    }
    Ok(samples)
}

/// Serialized form of one fitted mode (inputs, targets, weights and the
/// scalars needed to rebuild the factorization bit-identically).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnedModeRecord {
    pub mode: usize,
    pub kernel: SeKernel,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    pub sigma: f64,
    pub information_gain: Vec<f64>,
    pub rkhs_bounds: Vec<f64>,
    pub bound_source: RkhsBoundSource,
    pub theta: f64,
    pub info_gain_override: Option<f64>,
}

impl LearnedModeRecord {
    pub fn from_mode(m: &LearnedMode) -> Self {
        LearnedModeRecord {
            mode: m.mode,
            kernel: m.fits[0].kernel().clone(),
            inputs: m.fits[0].inputs().to_vec(),
            targets: m.fits.iter().map(|f| f.targets().to_vec()).collect(),
            weights: m
                .fits
                .iter()
                .map(|f| f.weights().iter().cloned().collect())
                .collect(),
            sigma: m.fits[0].sigma(),
            information_gain: m.fits.iter().map(|f| f.information_gain()).collect(),
            rkhs_bounds: m.rkhs_bounds.clone(),
            bound_source: m.bound_source,
            theta: m.theta,
            info_gain_override: m.info_gain_override,
        }
    }

    /// Rebuilds the mode, refitting the factorization from the stored data.
    pub fn into_mode(self) -> Result<LearnedMode, LearnError> {
        let mut fits = Vec::with_capacity(self.targets.len());
        for ys in &self.targets {
            fits.push(GpFit::fit(
                self.inputs.clone(),
                ys.clone(),
                self.kernel.clone(),
            )?);
        }
        Ok(LearnedMode {
            mode: self.mode,
            fits,
            rkhs_bounds: self.rkhs_bounds,
            bound_source: self.bound_source,
            theta: self.theta,
            info_gain_override: self.info_gain_override,
        })
    }
}
