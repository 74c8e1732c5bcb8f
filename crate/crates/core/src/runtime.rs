//! Executable switching controller and simulation against ground truth.
//!
//! The synthesized product strategy refines into a controller that tracks
//! which cell the observed state falls in and which automaton state the
//! label history has reached; the action is the strategy entry at that pair.
//! Ground-truth dynamics live only on the validation side (the test harness
//! and the CLI scenario definitions); nothing in the synthesis path imports
//! them.
//!
//! All randomness flows through a seedable, portable generator. Monte Carlo
//! trials derive their streams from the batch seed by mixing in the trial
//! index, so trial `i` is the same whether it runs alone, in a different
//! order, or on another thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Partition;
use crate::ltlf::{Dfa, Symbol};
use crate::synthesis::{cell_symbols, ProductStrategy, SynthesisError};

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("state {0:?} is outside the controller's domain")]
    OutsideDomain(Vec<f64>),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error("strategy covers {got} product states, expected {expected}")]
    StrategySize { got: usize, expected: usize },
}

/// Ground-truth one-step dynamics with its noise sampler.
pub trait TrueDynamics: Sync {
    fn step(&self, mode: usize, x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    Truncated,
}

/// Switching controller: partition for the cell map, automaton for the label
/// history, strategy for the action choice.
pub struct Controller<'a> {
    partition: &'a Partition,
    dfa: &'a Dfa,
    strategy: &'a ProductStrategy,
    symbols: Vec<Symbol>,
    dead: Vec<bool>,
    cell: usize,
    dfa_state: usize,
    satisfied: bool,
    violated: bool,
}

impl<'a> Controller<'a> {
    /// Initializes at `x0`, consuming the initial cell's label.
    pub fn new(
        partition: &'a Partition,
        dfa: &'a Dfa,
        strategy: &'a ProductStrategy,
        x0: &[f64],
    ) -> Result<Self, RuntimeError> {
        let expected = partition.num_states() * dfa.num_states();
        if strategy.actions.len() != expected {
            return Err(RuntimeError::StrategySize {
                got: strategy.actions.len(),
                expected,
            });
        }
        let symbols = cell_symbols(partition, dfa)?;
        let dead = dfa.dead_states();
        let cell = partition
            .locate(x0)
            .ok_or_else(|| RuntimeError::OutsideDomain(x0.to_vec()))?;
        let dfa_state = dfa.next[dfa.initial][symbols[cell] as usize];
        let mut ctrl = Controller {
            partition,
            dfa,
            strategy,
            symbols,
            dead,
            cell,
            dfa_state,
            satisfied: false,
            violated: false,
        };
        ctrl.refresh_status();
        Ok(ctrl)
    }

    fn refresh_status(&mut self) {
        if self.dfa.accepting[self.dfa_state] {
            self.satisfied = true;
        } else if self.dead[self.dfa_state] {
            self.violated = true;
        }
    }

    pub fn satisfied(&self) -> bool {
        self.satisfied
    }

    pub fn violated(&self) -> bool {
        self.violated
    }

    pub fn dfa_state(&self) -> usize {
        self.dfa_state
    }

    pub fn cell(&self) -> usize {
        self.cell
    }

    /// Strategy action at the current (cell, automaton state) pair.
    pub fn action(&self) -> usize {
        self.strategy.actions[self.cell * self.dfa.num_states() + self.dfa_state]
    }

    /// Advances the label history with the newly observed state. Leaving the
    /// domain before acceptance is a violation; afterwards it is irrelevant.
    pub fn observe(&mut self, x: &[f64]) -> Result<(), RuntimeError> {
        match self.partition.locate(x) {
            Some(cell) => {
                self.cell = cell;
                self.dfa_state = self.dfa.next[self.dfa_state][self.symbols[cell] as usize];
                self.refresh_status();
                Ok(())
            }
            None => {
                if !self.satisfied {
                    self.violated = true;
                }
                Err(RuntimeError::OutsideDomain(x.to_vec()))
            }
        }
    }
}

/// Record of one closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub labels: Vec<Symbol>,
    pub dfa_states: Vec<usize>,
    pub verdict: Verdict,
    pub steps: usize,
}

impl SimulationTrace {
    /// CSV export: `step, x1..xn, action, dfa_state`; the terminal row has no
    /// action.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map(|s| s.len()).unwrap_or(0);
        let mut out = String::from("step");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        out.push_str(",action,dfa_state\n");
        for (k, state) in self.states.iter().enumerate() {
            out.push_str(&k.to_string());
            for v in state {
                out.push_str(&format!(",{v}"));
            }
            match self.actions.get(k) {
                Some(a) => out.push_str(&format!(",{a}")),
                None => out.push(','),
            }
            out.push_str(&format!(",{}\n", self.dfa_states[k]));
        }
        out
    }
}

/// Runs the controller against ground truth from `x0` until acceptance,
/// violation, or the step budget. Reproducible: the trace is a pure function
/// of the seed.
pub fn simulate(
    truth: &dyn TrueDynamics,
    partition: &Partition,
    dfa: &Dfa,
    strategy: &ProductStrategy,
    x0: &[f64],
    max_steps: usize,
    seed: u64,
) -> Result<SimulationTrace, RuntimeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctrl = Controller::new(partition, dfa, strategy, x0)?;
    let mut trace = SimulationTrace {
        states: vec![x0.to_vec()],
        actions: Vec::new(),
        labels: vec![ctrl.symbols[ctrl.cell]],
        dfa_states: vec![ctrl.dfa_state],
        verdict: Verdict::Truncated,
        steps: 0,
    };
    let mut x = x0.to_vec();
    loop {
        if ctrl.satisfied() {
            trace.verdict = Verdict::Satisfied;
            return Ok(trace);
        }
        if ctrl.violated() {
            trace.verdict = Verdict::Violated;
            return Ok(trace);
        }
        if trace.steps >= max_steps {
            trace.verdict = Verdict::Truncated;
            return Ok(trace);
        }
        let action = ctrl.action();
        x = truth.step(action, &x, &mut rng);
        trace.actions.push(action);
        trace.states.push(x.clone());
        trace.steps += 1;
        match ctrl.observe(&x) {
            Ok(()) => {
                trace.labels.push(ctrl.symbols[ctrl.cell]);
                trace.dfa_states.push(ctrl.dfa_state);
            }
            Err(RuntimeError::OutsideDomain(_)) => {
                trace.labels.push(0);
                trace.dfa_states.push(ctrl.dfa_state);
                trace.verdict = Verdict::Violated;
                return Ok(trace);
            }
            Err(e) => return Err(e),
        }
    }
}

const SPLITMIX_GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(SPLITMIX_GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream-splitting rule: trial `i` of a batch seeded with `base` runs on
/// `splitmix64(base ^ (i + 1) * golden)`.
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    splitmix64(base ^ (trial + 1).wrapping_mul(SPLITMIX_GOLDEN))
}

/// Wilson score interval half-width at normal quantile `z`.
pub fn wilson_half_width(successes: usize, trials: usize, z: f64) -> f64 {
    let n = trials as f64;
    let p = successes as f64 / n;
    (z / (1.0 + z * z / n)) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt()
}

/// Two-sided 99% normal quantile used for the reported intervals.
pub const WILSON_Z_99: f64 = 2.5758293035489004;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub verdicts: Vec<Verdict>,
}

impl McReport {
    /// Does the empirical interval miss `[lo - budget, hi + budget]`?
    pub fn inconsistent_with(&self, lo: f64, hi: f64, budget: f64) -> bool {
        self.wilson_high < lo - budget || self.wilson_low > hi + budget
    }
}

/// Seeded batch of independent trials; trials run in parallel but each draws
/// from its own derived stream, so the aggregate is schedule-independent.
pub fn monte_carlo(
    truth: &dyn TrueDynamics,
    partition: &Partition,
    dfa: &Dfa,
    strategy: &ProductStrategy,
    x0: &[f64],
    trials: usize,
    max_steps: usize,
    seed: u64,
) -> Result<McReport, RuntimeError> {
    assert!(trials >= 1);
    let verdicts: Result<Vec<Verdict>, RuntimeError> = (0..trials)
        .into_par_iter()
        .map(|i| {
            simulate(
                truth,
                partition,
                dfa,
                strategy,
                x0,
                max_steps,
                trial_seed(seed, i as u64),
            )
            .map(|t| t.verdict)
        })
        .collect();
    let verdicts = verdicts?;
    let successes = verdicts
        .iter()
        .filter(|v| **v == Verdict::Satisfied)
        .count();
    let rate = successes as f64 / trials as f64;
    let half = wilson_half_width(successes, trials, WILSON_Z_99);
    let center = {
        let n = trials as f64;
        let z = WILSON_Z_99;
        (rate + z * z / (2.0 * n)) / (1.0 + z * z / n)
    };
    Ok(McReport {
        trials,
        successes,
        rate,
        wilson_low: (center - half).max(0.0),
        wilson_high: (center + half).min(1.0),
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{LabeledRegion, Rect};
    use crate::ltlf::{models, parse, to_dfa, Trace};
    use rand::Rng;

    struct Drift {
        rate: f64,
        noise: f64,
    }

    impl TrueDynamics for Drift {
        fn step(&self, mode: usize, x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
            // modes 1/2 drift left/right by rate with bounded uniform noise
            let dir = if mode == 1 { -1.0 } else { 1.0 };
            x.iter()
                .map(|v| v + dir * self.rate + rng.random_range(-self.noise..=self.noise))
                .collect()
        }
    }

    fn setup() -> (Partition, Dfa, ProductStrategy) {
        let domain = Rect::new(vec![0.0], vec![4.0]).unwrap();
        let regions = vec![
            LabeledRegion::new("Des", Rect::new(vec![0.0], vec![1.0]).unwrap()),
            LabeledRegion::new("Obs", Rect::new(vec![3.0], vec![4.0]).unwrap()),
        ];
        let partition = Partition::build(domain, &regions, &[1.0]).unwrap();
        let ap: Vec<String> = vec!["Des".into(), "Obs".into()];
        let dfa = to_dfa(&parse("G !Obs & F Des", Some(&ap)).unwrap(), &ap, 1 << 20).unwrap();
        // always drift left
        let strategy = ProductStrategy {
            actions: vec![1; partition.num_states() * dfa.num_states()],
        };
        (partition, dfa, strategy)
    }

    #[test]
    fn initial_state_in_goal_is_satisfied_without_stepping() {
        let (partition, dfa, strategy) = setup();
        let truth = Drift {
            rate: 0.5,
            noise: 0.0,
        };
        let t = simulate(&truth, &partition, &dfa, &strategy, &[0.5], 10, 1).unwrap();
        assert_eq!(t.verdict, Verdict::Satisfied);
        assert_eq!(t.steps, 0);
        assert!(t.actions.is_empty());
    }

    #[test]
    fn initial_state_in_obstacle_is_violated() {
        let (partition, dfa, strategy) = setup();
        let truth = Drift {
            rate: 0.5,
            noise: 0.0,
        };
        let t = simulate(&truth, &partition, &dfa, &strategy, &[3.5], 10, 1).unwrap();
        assert_eq!(t.verdict, Verdict::Violated);
        assert_eq!(t.steps, 0);
    }

    #[test]
    fn drifting_into_the_goal_satisfies() {
        let (partition, dfa, strategy) = setup();
        let truth = Drift {
            rate: 0.5,
            noise: 0.0,
        };
        let t = simulate(&truth, &partition, &dfa, &strategy, &[2.5], 20, 7).unwrap();
        assert_eq!(t.verdict, Verdict::Satisfied);
        assert!(t.steps >= 3);
        // same seed reproduces the trace bit for bit
        let t2 = simulate(&truth, &partition, &dfa, &strategy, &[2.5], 20, 7).unwrap();
        assert_eq!(t, t2);
    }

    #[test]
    fn shared_face_points_resolve_to_one_cell() {
        let (partition, dfa, mut strategy) = setup();
        // distinct action per cell so the tie-break is observable
        for cell in 0..partition.num_cells() {
            for s in 0..dfa.num_states() {
                strategy.actions[cell * dfa.num_states() + s] = 1 + cell % 2;
            }
        }
        // 2.0 sits on the face between cells 1 and 2; the smaller cell wins
        let ctrl = Controller::new(&partition, &dfa, &strategy, &[2.0]).unwrap();
        assert_eq!(ctrl.cell(), 1);
        assert_eq!(ctrl.action(), 2);
    }

    #[test]
    fn exiting_the_domain_before_acceptance_violates() {
        let (partition, dfa, mut strategy) = setup();
        for a in strategy.actions.iter_mut() {
            *a = 2; // drift right, out through the obstacle side
        }
        let truth = Drift {
            rate: 0.6,
            noise: 0.0,
        };
        let t = simulate(&truth, &partition, &dfa, &strategy, &[2.5], 50, 3).unwrap();
        assert_eq!(t.verdict, Verdict::Violated);
    }

    #[test]
    fn truncation_is_not_a_violation() {
        let (partition, dfa, strategy) = setup();
        // zero drift: never reaches the goal, never leaves
        let truth = Drift {
            rate: 0.0,
            noise: 0.0,
        };
        let t = simulate(&truth, &partition, &dfa, &strategy, &[2.5], 5, 9).unwrap();
        assert_eq!(t.verdict, Verdict::Truncated);
        assert_eq!(t.steps, 5);
    }

    #[test]
    fn controller_reports_outside_initial_state() {
        let (partition, dfa, strategy) = setup();
        assert!(matches!(
            Controller::new(&partition, &dfa, &strategy, &[9.0]),
            Err(RuntimeError::OutsideDomain(_))
        ));
    }

    #[test]
    fn satisfied_verdicts_agree_with_trace_semantics() {
        let (partition, dfa, strategy) = setup();
        let ap: Vec<String> = vec!["Des".into(), "Obs".into()];
        let formula = parse("G !Obs & F Des", Some(&ap)).unwrap();
        let truth = Drift {
            rate: 0.4,
            noise: 0.05,
        };
        for seed in 0..40 {
            let t = simulate(&truth, &partition, &dfa, &strategy, &[2.2], 30, seed).unwrap();
            let dfa_says = dfa.accepts(&Trace::new(t.labels.clone())).unwrap();
            match t.verdict {
                Verdict::Satisfied => {
                    assert!(dfa_says);
                    // some prefix of the label trace models the formula
                    let any_prefix = (1..=t.labels.len())
                        .any(|k| models(&formula, &Trace::new(t.labels[..k].to_vec()), &ap));
                    assert!(any_prefix);
                }
                Verdict::Violated | Verdict::Truncated => {}
            }
        }
    }

    #[test]
    fn monte_carlo_extremes_and_reproducibility() {
        let (partition, dfa, strategy) = setup();
        let truth = Drift {
            rate: 0.5,
            noise: 0.0,
        };
        let sure = monte_carlo(&truth, &partition, &dfa, &strategy, &[0.5], 50, 10, 3).unwrap();
        assert_eq!(sure.rate, 1.0);
        let dead = monte_carlo(&truth, &partition, &dfa, &strategy, &[3.5], 50, 10, 3).unwrap();
        assert_eq!(dead.rate, 0.0);
        assert!(!sure.inconsistent_with(1.0, 1.0, 0.0));
        assert!(sure.inconsistent_with(0.0, 0.1, 0.05));
    }

    #[test]
    fn batch_trials_match_standalone_streams() {
        let (partition, dfa, strategy) = setup();
        let truth = Drift {
            rate: 0.4,
            noise: 0.08,
        };
        let batch = monte_carlo(&truth, &partition, &dfa, &strategy, &[2.6], 16, 25, 99).unwrap();
        for i in 0..16u64 {
            let solo = simulate(
                &truth,
                &partition,
                &dfa,
                &strategy,
                &[2.6],
                25,
                trial_seed(99, i),
            )
            .unwrap();
            assert_eq!(solo.verdict, batch.verdicts[i as usize]);
        }
    }

    #[test]
    fn trace_csv_has_one_row_per_state() {
        let (partition, dfa, strategy) = setup();
        let truth = Drift {
            rate: 0.5,
            noise: 0.0,
        };
        let t = simulate(&truth, &partition, &dfa, &strategy, &[2.5], 20, 7).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), t.states.len() + 1);
        assert!(csv.starts_with("step,x1,action,dfa_state"));
    }
}
