//! Interval MDP assembly.
//!
//! For every cell/mode pair the learned image box and the posterior-std
//! suprema produce probability intervals to every successor cell: the upper
//! bound fires when the successor expanded by the error budget meets the
//! image, the lower bound fires only when the image fits inside the
//! successor shrunk by the budget, and both carry the confidence mass of the
//! regression-error and noise-bound events. Everything outside the domain is
//! lumped into one absorbing state.
//!
//! Rows are stored sparsely: successors whose expanded box misses the image
//! share one implicit interval `[0, default_hi]` per row, where `default_hi`
//! is exactly the additive slop every successor keeps (the product of the
//! per-dimension regression-failure probabilities), so the sparse form is
//! identical to materializing the full formula for every pair.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{image_and_sigma_sup, BoundConfig, KnownDynamics};
use crate::geometry::{Partition, Rect};
use crate::learning::{LearnedMode, NoiseModel};

#[derive(Debug, Error)]
pub enum AbstractionError {
    #[error("coverage must lie in (0, 1], got {0}")]
    InvalidCoverage(f64),
    #[error("need one learned mode and one known dynamics per mode; got {learned} learned, {known} known")]
    ModeCountMismatch { learned: usize, known: usize },
    #[error("learned mode {mode} has {got} output dimensions, partition has {expected}")]
    DimensionMismatch {
        mode: usize,
        got: usize,
        expected: usize,
    },
}

/// Probability interval attached to one `(state, action, successor)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionInterval {
    pub lo: f64,
    pub hi: f64,
}

impl TransitionInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(
            0.0 <= lo && lo <= hi && hi <= 1.0,
            "invalid interval [{lo}, {hi}]"
        );
        TransitionInterval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// One `(state, action)` row. `entries` is sorted by successor index; any
/// successor cell not listed implicitly carries `[0, default_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImdpRow {
    pub entries: Vec<(usize, TransitionInterval)>,
    pub default_hi: f64,
}

impl ImdpRow {
    pub fn interval_to(&self, successor: usize) -> TransitionInterval {
        match self.entries.binary_search_by_key(&successor, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => TransitionInterval {
                lo: 0.0,
                hi: self.default_hi,
            },
        }
    }

    /// Sums over all `num_states` successors, counting implicit ones.
    pub fn sums(&self, num_states: usize) -> (f64, f64) {
        let lo: f64 = self.entries.iter().map(|e| e.1.lo).sum();
        let hi: f64 = self.entries.iter().map(|e| e.1.hi).sum();
        let implicit = num_states - self.entries.len();
        (lo, hi + implicit as f64 * self.default_hi)
    }
}

/// Global noise radii and their per-dimension tail probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaChoice {
    pub eta: Vec<f64>,
    pub p_eta: Vec<f64>,
}

/// Per-pair regression radii and confidence (one minus the failure
/// probability, per dimension).
#[derive(Debug, Clone, PartialEq)]
pub struct EpsChoice {
    pub eps: Vec<f64>,
    pub p_eps: Vec<f64>,
}

impl EpsChoice {
    fn prod_p(&self) -> f64 {
        self.p_eps.iter().product()
    }

    fn slop(&self) -> f64 {
        self.p_eps.iter().map(|p| 1.0 - p).product()
    }

    fn budget(&self, eta: &[f64]) -> Vec<f64> {
        self.eps.iter().zip(eta).map(|(e, h)| e + h).collect()
    }
}

/// Knobs for the abstraction stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractionConfig {
    /// Failure probability for the regression-error event when the image is
    /// not contained in the target.
    pub delta0: f64,
    /// Smallest failure probability the confidence inversion may return.
    pub delta_min: f64,
    /// Product coverage target for the noise radii.
    pub eta_coverage: f64,
    /// Overrides the coverage rule with `eta = fraction * support bound`.
    pub eta_fraction: Option<f64>,
    /// Entries with an upper bound below this are dropped.
    pub sparsity_floor: f64,
    pub bound: BoundConfig,
}

impl Default for AbstractionConfig {
    fn default() -> Self {
        AbstractionConfig {
            delta0: 0.01,
            delta_min: 1e-6,
            eta_coverage: 0.99,
            eta_fraction: None,
            sparsity_floor: 1e-12,
            bound: BoundConfig::default(),
        }
    }
}

/// Statistics recorded while assembling the rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildMeta {
    pub eta: Option<EtaChoice>,
    pub rows_lo_rescaled: usize,
    pub rows_hi_raised: usize,
    pub mean_explicit_width: f64,
    pub max_explicit_width: f64,
    pub explicit_entries: usize,
}

/// Interval Markov decision process over a grid partition. State indices
/// follow the partition (cells then the absorbing outside state); actions are
/// 1-based mode ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Imdp {
    pub partition: Partition,
    pub num_modes: usize,
    /// Indexed `cell * num_modes + (mode - 1)`; the outside state's rows are
    /// implicit (absorbing `[1, 1]` on every action).
    pub rows: Vec<ImdpRow>,
    pub meta: BuildMeta,
}

impl Imdp {
    pub fn num_states(&self) -> usize {
        self.partition.num_states()
    }

    pub fn unsafe_index(&self) -> usize {
        self.partition.unsafe_index()
    }

    /// Row for a grid cell and 1-based mode.
    pub fn row(&self, cell: usize, mode: usize) -> &ImdpRow {
        &self.rows[cell * self.num_modes + (mode - 1)]
    }
}

/// Smallest per-dimension noise radii whose joint tail probability reaches
/// `coverage` (each dimension takes an equal share of the product).
pub fn choose_eta(
    noise: &NoiseModel,
    coverage: f64,
    dim: usize,
) -> Result<EtaChoice, AbstractionError> {
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(AbstractionError::InvalidCoverage(coverage));
    }
    let per_dim = coverage.powf(1.0 / dim as f64);
    let eta = vec![noise.tail_quantile(per_dim); dim];
    let p_eta = noise.tail_probabilities(&eta);
    Ok(EtaChoice { eta, p_eta })
}

/// Noise radii fixed to a fraction of the support bound.
pub fn eta_from_fraction(noise: &NoiseModel, fraction: f64, dim: usize) -> EtaChoice {
    let eta = vec![fraction * noise.support_bound(); dim];
    let p_eta = noise.tail_probabilities(&eta);
    EtaChoice { eta, p_eta }
}

/// Chooses the regression radii for one `(image, target)` pair.
///
/// If the image fits strictly inside the target shrunk by `eps + eta` for
/// some positive `eps`, the greatest such `eps` is taken (shaved by one part
/// in 1e12 so the strict containment it certifies also holds numerically)
/// and the failure probability comes from inverting the error bound. When
/// that inversion is vacuous on any dimension, or containment is impossible,
/// the radii fall back to the error bound at failure probability `delta0`.
pub fn choose_epsilon(
    target: &Rect,
    im: &Rect,
    eta: &EtaChoice,
    learned: &LearnedMode,
    sigma_sup: &[f64],
    cfg: &AbstractionConfig,
) -> EpsChoice {
    let n = target.dim();
    let mut eps = Vec::with_capacity(n);
    let mut vacuous = false;
    for i in 0..n {
        let slack = (im.lower()[i] - target.lower()[i]).min(target.upper()[i] - im.upper()[i]);
        let e = (slack - eta.eta[i]) * (1.0 - 1e-12);
        if e <= 0.0 {
            vacuous = true;
            break;
        }
        eps.push(e);
    }
    if !vacuous {
        let mut p_eps = Vec::with_capacity(n);
        for i in 0..n {
            let delta = learned.invert_confidence(i, eps[i], sigma_sup[i], cfg.delta_min);
            if delta >= 1.0 {
                vacuous = true;
                break;
            }
            p_eps.push(1.0 - delta);
        }
        if !vacuous {
            return EpsChoice { eps, p_eps };
        }
    }
    fallback_epsilon(learned, sigma_sup, cfg)
}

/// The non-containment branch: radii from the error bound at `delta0`, with
/// degenerate zero-uncertainty dimensions getting `delta_min`.
pub fn fallback_epsilon(
    learned: &LearnedMode,
    sigma_sup: &[f64],
    cfg: &AbstractionConfig,
) -> EpsChoice {
    let n = sigma_sup.len();
    let mut eps = Vec::with_capacity(n);
    let mut p_eps = Vec::with_capacity(n);
    for i in 0..n {
        if sigma_sup[i] <= 0.0 {
            eps.push(0.0);
            p_eps.push(1.0 - cfg.delta_min);
        } else {
            let beta = learned.beta(i, cfg.delta0).expect("delta0 in (0,1)");
            eps.push(beta * sigma_sup[i]);
            p_eps.push(1.0 - cfg.delta0);
        }
    }
    EpsChoice { eps, p_eps }
}

/// Transition interval between two grid cells.
pub fn transition_interval(
    target: &Rect,
    im: &Rect,
    eps: &EpsChoice,
    eta: &EtaChoice,
) -> TransitionInterval {
    let budget = eps.budget(&eta.eta);
    let p_event: f64 = eps.prod_p() * eta.p_eta.iter().product::<f64>();
    let upper_fires = target
        .expand(&budget)
        .expect("budget is nonnegative")
        .intersects(im);
    let hi = (f64::from(upper_fires) * p_event + eps.slop()).min(1.0);
    let reduced = target.reduce(&budget).expect("budget is nonnegative");
    let lo = if im.contained_in_reduced(&reduced) {
        p_event
    } else {
        0.0
    };
    TransitionInterval::new(lo.min(hi), hi)
}

/// Interval for falling outside the domain.
pub fn unsafe_interval(
    domain: &Rect,
    im: &Rect,
    eps: &EpsChoice,
    eta: &EtaChoice,
) -> TransitionInterval {
    let budget = eps.budget(&eta.eta);
    let p_event: f64 = eps.prod_p() * eta.p_eta.iter().product::<f64>();
    let stays_indicator = domain
        .expand(&budget)
        .expect("budget is nonnegative")
        .intersects(im);
    let lo = (1.0 - f64::from(stays_indicator) * p_event - eps.slop()).max(0.0);
    let reduced = domain.reduce(&budget).expect("budget is nonnegative");
    let hi = if im.contained_in_reduced(&reduced) {
        1.0 - p_event
    } else {
        1.0
    };
    TransitionInterval::new(lo.min(hi), hi.max(0.0))
}

/// Assembles the full interval MDP. Row computations are independent across
/// `(cell, mode)` pairs and run in parallel; results do not depend on the
/// schedule. Interval-consistency repairs are counted in the metadata, never
/// silent.
pub fn build_imdp(
    partition: &Partition,
    known: &[KnownDynamics],
    learned: &[LearnedMode],
    noise: &NoiseModel,
    cfg: &AbstractionConfig,
) -> Result<Imdp, AbstractionError> {
    if known.len() != learned.len() || learned.is_empty() {
        return Err(AbstractionError::ModeCountMismatch {
            learned: learned.len(),
            known: known.len(),
        });
    }
    let n = partition.domain().dim();
    for m in learned {
        if m.state_dim() != n {
            return Err(AbstractionError::DimensionMismatch {
                mode: m.mode,
                got: m.state_dim(),
                expected: n,
            });
        }
    }
    let eta = match cfg.eta_fraction {
        Some(f) => eta_from_fraction(noise, f, n),
        None => choose_eta(noise, cfg.eta_coverage, n)?,
    };

    let num_modes = learned.len();
    let num_states = partition.num_states();
    let unsafe_idx = partition.unsafe_index();
    let domain = partition.domain().clone();

    let rows: Vec<(ImdpRow, RepairFlags)> = (0..partition.num_cells() * num_modes)
        .into_par_iter()
        .map(|row_idx| {
            let cell_idx = row_idx / num_modes;
            let mode_idx = row_idx % num_modes;
            let cell = partition.cell(cell_idx);
            let lm = &learned[mode_idx];
            let (im, sigma_sups) = image_and_sigma_sup(cell, &known[mode_idx], lm, &cfg.bound);

            let fallback = fallback_epsilon(lm, &sigma_sups, cfg);
            let default_hi = {
                let s = fallback.slop();
                if s < cfg.sparsity_floor {
                    0.0
                } else {
                    s
                }
            };

            // candidate successors: cells the image can reach once expanded
            // by the fallback budget (containment pairs are a subset)
            let reach = im
                .expand(&fallback.budget(&eta.eta))
                .expect("budget is nonnegative");
            let mut entries: Vec<(usize, TransitionInterval)> = Vec::new();
            for q_next in partition.cells_intersecting(&reach) {
                let target = partition.cell(q_next);
                let eps = choose_epsilon(target, &im, &eta, lm, &sigma_sups, cfg);
                let iv = transition_interval(target, &im, &eps, &eta);
                if iv.hi >= cfg.sparsity_floor && (iv.lo > 0.0 || iv.hi > default_hi) {
                    entries.push((q_next, iv));
                }
            }
            let eps_u = choose_epsilon(&domain, &im, &eta, lm, &sigma_sups, cfg);
            let iv_u = unsafe_interval(&domain, &im, &eps_u, &eta);
            entries.push((unsafe_idx, iv_u));

            repair_row(
                ImdpRow {
                    entries,
                    default_hi,
                },
                num_states,
                unsafe_idx,
            )
        })
        .collect();

    let mut meta = BuildMeta {
        eta: Some(eta),
        ..BuildMeta::default()
    };
    let mut width_sum = 0.0;
    for (row, repaired) in &rows {
        meta.rows_lo_rescaled += usize::from(repaired.lo_rescaled);
        meta.rows_hi_raised += usize::from(repaired.hi_raised);
        for (_, iv) in &row.entries {
            width_sum += iv.width();
            meta.max_explicit_width = meta.max_explicit_width.max(iv.width());
            meta.explicit_entries += 1;
        }
    }
    if meta.explicit_entries > 0 {
        meta.mean_explicit_width = width_sum / meta.explicit_entries as f64;
    }

    Ok(Imdp {
        partition: partition.clone(),
        num_modes,
        rows: rows.into_iter().map(|(r, _)| r).collect(),
        meta,
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct RepairFlags {
    lo_rescaled: bool,
    hi_raised: bool,
}

/// Enforces `sum lo <= 1 <= sum hi` over the whole row: lower bounds are
/// scaled down uniformly, and any missing upper mass is granted to the
/// outside successor.
fn repair_row(mut row: ImdpRow, num_states: usize, unsafe_idx: usize) -> (ImdpRow, RepairFlags) {
    row.entries.sort_unstable_by_key(|e| e.0);
    let mut flags = RepairFlags::default();
    let (sum_lo, sum_hi) = row.sums(num_states);
    if sum_lo > 1.0 {
        let scale = 1.0 / sum_lo;
        for e in &mut row.entries {
            e.1.lo *= scale;
        }
        flags.lo_rescaled = true;
    }
    if sum_hi < 1.0 {
        let deficit = 1.0 - sum_hi;
        let i = row
            .entries
            .binary_search_by_key(&unsafe_idx, |e| e.0)
            .expect("unsafe successor is always explicit");
        row.entries[i].1.hi = (row.entries[i].1.hi + deficit).min(1.0);
        flags.hi_raised = true;
    }
    (row, flags)
}
