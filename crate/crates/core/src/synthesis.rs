//! Strategy synthesis on the product of an interval MDP with a DFA.
//!
//! Satisfaction of the specification becomes reachability of accepting
//! product states. The uncertainty inside the probability intervals is
//! resolved by an adversary choosing a feasible distribution each step; the
//! adversary's extreme point for a linear objective orders successors by
//! value and fills upper bounds greedily, which is exact for the interval
//! polytope. Value iteration alternates that inner step with an outer
//! optimization over modes.
//!
//! Three runs produce the synthesis output: a pessimistic run yields the
//! robust strategy and the guaranteed lower bound, a cooperative run under
//! that frozen strategy yields its upper bound, and a fully cooperative run
//! bounds what any strategy could achieve. The later runs are seeded with
//! the earlier fixed points, which both saves sweeps and makes the pointwise
//! ordering of the three value vectors hold exactly rather than up to the
//! convergence tolerance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{Imdp, ImdpRow};
use crate::ltlf::{Dfa, Symbol};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("row is infeasible: sum of lower bounds {sum_lo} and upper bounds {sum_hi} do not bracket 1")]
    InfeasibleRow { sum_lo: f64, sum_hi: f64 },
    #[error("value iteration did not converge within {sweeps} sweeps (residual {residual:e})")]
    NonConvergence { sweeps: usize, residual: f64 },
    #[error("proposition {name:?} of the automaton is not a partition label")]
    ApMismatch { name: String },
    #[error("fixed-strategy objective requires a strategy")]
    StrategyMissing,
}

/// Which way the adversary resolves the intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

/// Greedy extreme point of the interval polytope for a linear objective:
/// successors ordered by value (ties toward the smaller index) each receive
/// their upper bound until the remaining mass forces the rest to their lower
/// bounds. Returns the distribution aligned with `row` and its expectation.
pub fn adversary_extreme(
    row: &[(usize, f64, f64)],
    values: &[f64],
    direction: Direction,
) -> Result<(Vec<f64>, f64), SynthesisError> {
    let sum_lo: f64 = row.iter().map(|e| e.1).sum();
    let sum_hi: f64 = row.iter().map(|e| e.2).sum();
    if sum_lo > 1.0 + 1e-9 || sum_hi < 1.0 - 1e-9 {
        return Err(SynthesisError::InfeasibleRow { sum_lo, sum_hi });
    }
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        let (va, vb) = (values[row[a].0], values[row[b].0]);
        let primary = match direction {
            Direction::Minimize => va.partial_cmp(&vb).expect("values are ordered"),
            Direction::Maximize => vb.partial_cmp(&va).expect("values are ordered"),
        };
        primary.then(row[a].0.cmp(&row[b].0))
    });
    let mut dist: Vec<f64> = row.iter().map(|e| e.1).collect();
    let mut budget = 1.0 - sum_lo;
    for &i in &order {
        if budget <= 0.0 {
            break;
        }
        let extra = (row[i].2 - row[i].1).min(budget);
        dist[i] += extra;
        budget -= extra;
    }
    let value = row.iter().zip(&dist).map(|(e, d)| d * values[e.0]).sum();
    Ok((dist, value))
}

/// Interval MDP in explicit row form, used for small models and as the
/// reference implementation the product fast path is checked against.
/// Actions are 0-based here; rows are indexed `state * num_actions + action`.
#[derive(Debug, Clone)]
pub struct ExplicitImdp {
    pub num_states: usize,
    pub num_actions: usize,
    pub rows: Vec<Vec<(usize, f64, f64)>>,
    pub accepting: Vec<bool>,
    /// States whose value stays pinned at its initialization.
    pub sink: Vec<bool>,
}

/// What the outer optimization over actions does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Robust: best action against the minimizing adversary.
    Maximin,
    /// Optimistic: best action with a cooperating adversary.
    Maximax,
    /// Cooperating adversary under a frozen strategy.
    FixedMax,
}

impl Objective {
    fn direction(self) -> Direction {
        match self {
            Objective::Maximin => Direction::Minimize,
            Objective::Maximax | Objective::FixedMax => Direction::Maximize,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IviOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    /// Starting values; accepting states are forced to 1 regardless.
    pub init: Option<Vec<f64>>,
}

impl Default for IviOptions {
    fn default() -> Self {
        IviOptions {
            tol: 1e-6,
            max_sweeps: 100_000,
            init: None,
        }
    }
}

/// Reference interval value iteration over explicit rows.
pub fn solve_explicit(
    model: &ExplicitImdp,
    objective: Objective,
    strategy: Option<&[usize]>,
    opts: &IviOptions,
) -> Result<(Vec<f64>, Option<Vec<usize>>), SynthesisError> {
    if objective == Objective::FixedMax && strategy.is_none() {
        return Err(SynthesisError::StrategyMissing);
    }
    let n = model.num_states;
    let mut values = match &opts.init {
        Some(v) => v.clone(),
        None => vec![0.0; n],
    };
    for s in 0..n {
        if model.accepting[s] {
            values[s] = 1.0;
        }
    }
    let dir = objective.direction();
    let mut sweeps = 0;
    loop {
        let mut next = values.clone();
        let mut residual = 0.0f64;
        for s in 0..n {
            if model.accepting[s] || model.sink[s] {
                continue;
            }
            let actions: Vec<usize> = match objective {
                Objective::FixedMax => vec![strategy.unwrap()[s]],
                _ => (0..model.num_actions).collect(),
            };
            let mut best = f64::NEG_INFINITY;
            for a in actions {
                let row = &model.rows[s * model.num_actions + a];
                let (_, v) = adversary_extreme(row, &values, dir)?;
                if v > best {
                    best = v;
                }
            }
            residual = residual.max((best - values[s]).abs());
            next[s] = best;
        }
        values = next;
        sweeps += 1;
        if residual < opts.tol {
            break;
        }
        if sweeps >= opts.max_sweeps {
            return Err(SynthesisError::NonConvergence { sweeps, residual });
        }
    }
    let strategy_out = match objective {
        Objective::Maximin => {
            let mut out = vec![0usize; n];
            for s in 0..n {
                if model.accepting[s] || model.sink[s] {
                    continue;
                }
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for a in 0..model.num_actions {
                    let row = &model.rows[s * model.num_actions + a];
                    let (_, v) = adversary_extreme(row, &values, Direction::Minimize)?;
                    if v > best + 1e-15 {
                        best = v;
                        arg = a;
                    }
                }
                out[s] = arg;
            }
            Some(out)
        }
        _ => None,
    };
    Ok((values, strategy_out))
}

/// Memoryless strategy on the product: a 1-based mode per product state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductStrategy {
    pub actions: Vec<usize>,
}

/// Product of the abstraction with the specification automaton.
///
/// Product state `cell * |S| + s` couples a partition state with the DFA
/// state reached after consuming the labels of every visited cell, the
/// initial cell's included. Entering the outside state freezes the DFA
/// component, so acceptance achieved inside the domain is never revoked and
/// never extended by leaving it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pimdp {
    pub imdp: Imdp,
    pub dfa: Dfa,
    cell_symbols: Vec<Symbol>,
    /// Per imdp row: sum of explicit lower bounds (implicit ones are zero).
    row_sum_lo: Vec<f64>,
    /// Per DFA state: product successor id for each imdp successor.
    product_successor: Vec<Vec<usize>>,
}

/// Maps every cell's label set onto the automaton's alphabet. Labels the
/// automaton does not mention are dropped; an automaton proposition missing
/// from the partition is an error.
pub fn cell_symbols(
    partition: &crate::geometry::Partition,
    dfa: &Dfa,
) -> Result<Vec<Symbol>, SynthesisError> {
    let labels = partition.labels();
    let mut label_pos = Vec::with_capacity(dfa.ap.len());
    for name in &dfa.ap {
        match labels.iter().position(|l| l == name) {
            Some(p) => label_pos.push(p),
            None => return Err(SynthesisError::ApMismatch { name: name.clone() }),
        }
    }
    Ok((0..partition.num_cells())
        .map(|q| {
            let bits = partition.cell_label_bits(q);
            let mut sym = 0u32;
            for (i, &p) in label_pos.iter().enumerate() {
                if bits & (1 << p) != 0 {
                    sym |= 1 << i;
                }
            }
            sym
        })
        .collect())
}

impl Pimdp {
    pub fn build(imdp: Imdp, dfa: Dfa) -> Result<Self, SynthesisError> {
        let cell_symbols = cell_symbols(&imdp.partition, &dfa)?;
        let num_dfa = dfa.num_states();
        let unsafe_idx = imdp.unsafe_index();
        let product_successor: Vec<Vec<usize>> = (0..num_dfa)
            .map(|s| {
                (0..imdp.num_states())
                    .map(|q| {
                        if q == unsafe_idx {
                            q * num_dfa + s
                        } else {
                            let s_next = dfa.next[s][cell_symbols[q] as usize];
                            q * num_dfa + s_next
                        }
                    })
                    .collect()
            })
            .collect();
        let row_sum_lo = imdp
            .rows
            .iter()
            .map(|row| row.entries.iter().map(|e| e.1.lo).sum())
            .collect();
        Ok(Pimdp {
            imdp,
            dfa,
            cell_symbols,
            row_sum_lo,
            product_successor,
        })
    }

    pub fn num_dfa_states(&self) -> usize {
        self.dfa.num_states()
    }

    pub fn num_states(&self) -> usize {
        self.imdp.num_states() * self.dfa.num_states()
    }

    pub fn state_id(&self, cell: usize, dfa_state: usize) -> usize {
        cell * self.dfa.num_states() + dfa_state
    }

    /// Product state a path starting in `cell` begins at (the cell's label
    /// is consumed immediately).
    pub fn initial_state(&self, cell: usize) -> usize {
        let s = self.dfa.next[self.dfa.initial][self.cell_symbols[cell] as usize];
        self.state_id(cell, s)
    }

    pub fn is_accepting(&self, pid: usize) -> bool {
        self.dfa.accepting[pid % self.dfa.num_states()]
    }

    fn is_outside(&self, pid: usize) -> bool {
        pid / self.dfa.num_states() == self.imdp.unsafe_index()
    }

    pub fn cell_symbol(&self, cell: usize) -> Symbol {
        self.cell_symbols[cell]
    }

    /// Expands the product into explicit rows (for tests and tiny models;
    /// quadratic in the state count).
    pub fn to_explicit(&self) -> ExplicitImdp {
        let num_dfa = self.dfa.num_states();
        let n = self.num_states();
        let num_actions = self.imdp.num_modes;
        let mut rows = Vec::with_capacity(n * num_actions);
        for pid in 0..n {
            let (q, s) = (pid / num_dfa, pid % num_dfa);
            for a in 0..num_actions {
                if q == self.imdp.unsafe_index() {
                    rows.push(vec![(pid, 1.0, 1.0)]);
                    continue;
                }
                let row = self.imdp.row(q, a + 1);
                let mut out = Vec::new();
                for succ in 0..self.imdp.num_states() {
                    let iv = row.interval_to(succ);
                    if iv.hi > 0.0 {
                        out.push((self.product_successor[s][succ], iv.lo, iv.hi));
                    }
                }
                rows.push(out);
            }
        }
        ExplicitImdp {
            num_states: n,
            num_actions,
            rows,
            accepting: (0..n).map(|pid| self.is_accepting(pid)).collect(),
            sink: (0..n).map(|pid| self.is_outside(pid)).collect(),
        }
    }
}

/// Per-DFA-state sweep structures: successor values mapped through the
/// product, a value-sorted order, its inverse, and prefix sums over the
/// order for bulk-filling implicit successors.
struct SweepStructs {
    w: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
    rank: Vec<Vec<u32>>,
    pref: Vec<Vec<f64>>,
}

fn build_sweep_structs(pimdp: &Pimdp, values: &[f64], direction: Direction) -> SweepStructs {
    let num_dfa = pimdp.dfa.num_states();
    let n_imdp = pimdp.imdp.num_states();
    let mut all_w = Vec::with_capacity(num_dfa);
    let mut all_order = Vec::with_capacity(num_dfa);
    let mut all_rank = Vec::with_capacity(num_dfa);
    let mut all_pref = Vec::with_capacity(num_dfa);
    for s in 0..num_dfa {
        let w: Vec<f64> = (0..n_imdp)
            .map(|q| values[pimdp.product_successor[s][q]])
            .collect();
        let mut order: Vec<u32> = (0..n_imdp as u32).collect();
        order.sort_unstable_by(|&a, &b| {
            let (va, vb) = (w[a as usize], w[b as usize]);
            let primary = match direction {
                Direction::Minimize => va.partial_cmp(&vb).expect("values are ordered"),
                Direction::Maximize => vb.partial_cmp(&va).expect("values are ordered"),
            };
            primary.then(a.cmp(&b))
        });
        let mut rank = vec![0u32; n_imdp];
        for (i, &q) in order.iter().enumerate() {
            rank[q as usize] = i as u32;
        }
        let mut pref = Vec::with_capacity(n_imdp + 1);
        pref.push(0.0);
        for &q in &order {
            pref.push(pref.last().unwrap() + w[q as usize]);
        }
        all_w.push(w);
        all_order.push(order);
        all_rank.push(rank);
        all_pref.push(pref);
    }
    SweepStructs {
        w: all_w,
        order: all_order,
        rank: all_rank,
        pref: all_pref,
    }
}

/// Adversary optimum for one row in the product, walking the value-sorted
/// successor order. Explicit entries interrupt runs of implicit successors,
/// which are filled in bulk through the prefix sums.
fn row_extreme_fast(row: &ImdpRow, sum_lo: f64, s: usize, st: &SweepStructs) -> f64 {
    let w = &st.w[s];
    let order = &st.order[s];
    let rank = &st.rank[s];
    let pref = &st.pref[s];
    let default_hi = row.default_hi;

    let mut base = 0.0;
    let mut events: Vec<(u32, f64, f64)> = row
        .entries
        .iter()
        .map(|&(succ, iv)| {
            base += iv.lo * w[succ];
            (rank[succ], iv.lo, iv.hi)
        })
        .collect();
    events.sort_unstable_by_key(|e| e.0);

    let mut budget = 1.0 - sum_lo;
    let mut pos = 0usize;
    for &(r, lo, hi) in &events {
        if budget <= 0.0 {
            break;
        }
        let r = r as usize;
        let run = r - pos;
        if run > 0 && default_hi > 0.0 {
            let can = run as f64 * default_hi;
            if can <= budget {
                base += default_hi * (pref[r] - pref[pos]);
                budget -= can;
            } else {
                let full = (budget / default_hi).floor() as usize;
                base += default_hi * (pref[pos + full] - pref[pos]);
                budget -= full as f64 * default_hi;
                base += budget * w[order[pos + full] as usize];
                budget = 0.0;
                break;
            }
        }
        let extra = (hi - lo).min(budget).max(0.0);
        base += extra * w[order[r] as usize];
        budget -= extra;
        pos = r + 1;
    }
    if budget > 0.0 && default_hi > 0.0 {
        let n = order.len();
        let run = n - pos;
        let can = run as f64 * default_hi;
        if can <= budget {
            base += default_hi * (pref[n] - pref[pos]);
        } else {
            let full = (budget / default_hi).floor() as usize;
            base += default_hi * (pref[pos + full] - pref[pos]);
            budget -= full as f64 * default_hi;
            base += budget * w[order[pos + full] as usize];
        }
    }
    base
}

/// Interval value iteration over the product.
///
/// Values start at 1 on accepting states and 0 elsewhere (or at the supplied
/// warm start); accepting and outside states stay pinned. Each sweep is a
/// double-buffered Bellman update, so runs are bitwise identical regardless
/// of the thread count. Action ties break toward the smallest mode id.
pub fn interval_value_iteration(
    pimdp: &Pimdp,
    objective: Objective,
    strategy: Option<&ProductStrategy>,
    opts: &IviOptions,
) -> Result<(Vec<f64>, Option<ProductStrategy>), SynthesisError> {
    if objective == Objective::FixedMax && strategy.is_none() {
        return Err(SynthesisError::StrategyMissing);
    }
    let n = pimdp.num_states();
    let num_dfa = pimdp.dfa.num_states();
    let num_modes = pimdp.imdp.num_modes;
    let mut values = match &opts.init {
        Some(v) => {
            assert_eq!(v.len(), n, "warm start has wrong length");
            v.clone()
        }
        None => vec![0.0; n],
    };
    for pid in 0..n {
        if pimdp.is_accepting(pid) {
            values[pid] = 1.0;
        }
    }
    let dir = objective.direction();
    let mut sweeps = 0usize;
    loop {
        let st = build_sweep_structs(pimdp, &values, dir);
        let next: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|pid| {
                if pimdp.is_accepting(pid) || pimdp.is_outside(pid) {
                    return values[pid];
                }
                let (q, s) = (pid / num_dfa, pid % num_dfa);
                match objective {
                    Objective::FixedMax => {
                        let mode = strategy.unwrap().actions[pid];
                        let row = pimdp.imdp.row(q, mode);
                        row_extreme_fast(row, pimdp.row_sum_lo[q * num_modes + mode - 1], s, &st)
                    }
                    _ => {
                        let mut best = f64::NEG_INFINITY;
                        for mode in 1..=num_modes {
                            let row = pimdp.imdp.row(q, mode);
                            let v = row_extreme_fast(
                                row,
                                pimdp.row_sum_lo[q * num_modes + mode - 1],
                                s,
                                &st,
                            );
                            if v > best {
                                best = v;
                            }
                        }
                        best
                    }
                }
            })
            .collect();
        let residual = values
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        values = next;
        sweeps += 1;
        if residual < opts.tol {
            break;
        }
        if sweeps >= opts.max_sweeps {
            return Err(SynthesisError::NonConvergence { sweeps, residual });
        }
    }

    let strategy_out = match objective {
        Objective::Maximin => {
            let st = build_sweep_structs(pimdp, &values, Direction::Minimize);
            let actions: Vec<usize> = (0..n)
                .into_par_iter()
                .map(|pid| {
                    let (q, s) = (pid / num_dfa, pid % num_dfa);
                    if q == pimdp.imdp.unsafe_index() {
                        return 1;
                    }
                    let mut best = f64::NEG_INFINITY;
                    let mut arg = 1usize;
                    for mode in 1..=num_modes {
                        let row = pimdp.imdp.row(q, mode);
                        let v = row_extreme_fast(
                            row,
                            pimdp.row_sum_lo[q * num_modes + mode - 1],
                            s,
                            &st,
                        );
                        if v > best + 1e-15 {
                            best = v;
                            arg = mode;
                        }
                    }
                    arg
                })
                .collect();
            Some(ProductStrategy { actions })
        }
        _ => None,
    };
    Ok((values, strategy_out))
}

/// Verdict for one initial cell against the probability threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellClass {
    Yes,
    No,
    Maybe,
}

/// Per-cell synthesis outcome, evaluated at the cell's initial product state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub cell: usize,
    pub initial_state: usize,
    pub lower: f64,
    pub upper: f64,
    pub upper_opt: f64,
    pub class: CellClass,
    /// Optimality gap: distance from the robust strategy to the best any
    /// strategy could guarantee.
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisResult {
    /// Guaranteed satisfaction probability under the robust strategy.
    pub lower: Vec<f64>,
    /// Upper bound under the same strategy.
    pub upper: Vec<f64>,
    /// Upper bound over all strategies (cooperative uncertainty).
    pub upper_opt: Vec<f64>,
    pub strategy: ProductStrategy,
    pub threshold: f64,
    pub cells: Vec<CellOutcome>,
}

/// Full synthesis: robust values and strategy, the strategy's optimistic
/// envelope, the best-case bound, and the per-cell classification at the
/// given threshold.
pub fn synthesize(
    pimdp: &Pimdp,
    threshold: f64,
    opts: &IviOptions,
) -> Result<SynthesisResult, SynthesisError> {
    let (lower, strategy) = interval_value_iteration(pimdp, Objective::Maximin, None, opts)?;
    let strategy = strategy.expect("maximin extracts a strategy");
    let warm_upper = IviOptions {
        init: Some(lower.clone()),
        ..opts.clone()
    };
    let (upper, _) =
        interval_value_iteration(pimdp, Objective::FixedMax, Some(&strategy), &warm_upper)?;
    let warm_opt = IviOptions {
        init: Some(upper.clone()),
        ..opts.clone()
    };
    let (upper_opt, _) = interval_value_iteration(pimdp, Objective::Maximax, None, &warm_opt)?;

    let cells = (0..pimdp.imdp.partition.num_cells())
        .map(|cell| {
            let pid = pimdp.initial_state(cell);
            let (lo, up, opt) = (lower[pid], upper[pid], upper_opt[pid]);
            let class = if lo >= threshold {
                CellClass::Yes
            } else if up < threshold {
                CellClass::No
            } else {
                CellClass::Maybe
            };
            CellOutcome {
                cell,
                initial_state: pid,
                lower: lo,
                upper: up,
                upper_opt: opt,
                class,
                gap: opt - lo,
            }
        })
        .collect();

    Ok(SynthesisResult {
        lower,
        upper,
        upper_opt,
        strategy,
        threshold,
        cells,
    })
}

#[cfg(any(test, feature = "testkit"))]
pub mod testkit {
    //! Seeded random interval MDPs and a brute-force solver that enumerates
    //! the vertices of each row's interval polytope.

    use super::*;
    use rand::prelude::*;

    /// Random explicit interval MDP with consistent rows. The last state is
    /// accepting and absorbing, the one before it a rejecting sink; every
    /// row gives the sink a positive lower bound so iteration contracts.
    pub fn random_explicit_imdp<R: Rng>(
        rng: &mut R,
        max_states: usize,
        num_actions: usize,
    ) -> ExplicitImdp {
        let n = rng.random_range(4..=max_states.max(4));
        let accepting_state = n - 1;
        let sink_state = n - 2;
        let mut rows = Vec::with_capacity(n * num_actions);
        for state in 0..n {
            for _ in 0..num_actions {
                if state == accepting_state || state == sink_state {
                    rows.push(vec![(state, 1.0, 1.0)]);
                    continue;
                }
                let mut succs: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
                if !succs.contains(&sink_state) {
                    succs.push(sink_state);
                }
                if succs.len() < 2 {
                    succs.push(accepting_state);
                    succs.sort_unstable();
                    succs.dedup();
                }
                // a feasible point distribution, sink share bounded below
                let sink_share = 0.05 + 0.3 * rng.random::<f64>();
                let mut weights: Vec<f64> =
                    succs.iter().map(|_| rng.random::<f64>() + 1e-3).collect();
                let sink_pos = succs.iter().position(|&s| s == sink_state).unwrap();
                let rest: f64 = weights
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != sink_pos)
                    .map(|(_, w)| w)
                    .sum();
                for (i, w) in weights.iter_mut().enumerate() {
                    if i == sink_pos {
                        *w = sink_share;
                    } else {
                        *w *= (1.0 - sink_share) / rest;
                    }
                }
                let row: Vec<(usize, f64, f64)> = succs
                    .iter()
                    .zip(&weights)
                    .map(|(&s, &p)| {
                        let lo = if s == sink_state {
                            p.min(0.05) + (p - p.min(0.05)) * rng.random::<f64>()
                        } else {
                            p * rng.random::<f64>()
                        };
                        let hi = p + (1.0 - p) * rng.random::<f64>();
                        (s, lo, hi)
                    })
                    .collect();
                rows.push(row);
            }
        }
        let mut accepting = vec![false; n];
        accepting[accepting_state] = true;
        let mut sink = vec![false; n];
        sink[sink_state] = true;
        ExplicitImdp {
            num_states: n,
            num_actions,
            rows,
            accepting,
            sink,
        }
    }

    fn permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for rest in permutations(k - 1) {
            for i in 0..=rest.len() {
                let mut p = rest.clone();
                p.insert(i, k - 1);
                out.push(p);
            }
        }
        out
    }

    /// Exact inner optimum by evaluating every vertex of the interval
    /// polytope (every successor ordering).
    pub fn vertex_optimum(row: &[(usize, f64, f64)], values: &[f64], direction: Direction) -> f64 {
        let sum_lo: f64 = row.iter().map(|e| e.1).sum();
        let mut best = match direction {
            Direction::Minimize => f64::INFINITY,
            Direction::Maximize => f64::NEG_INFINITY,
        };
        for perm in permutations(row.len()) {
            let mut dist: Vec<f64> = row.iter().map(|e| e.1).collect();
            let mut budget = 1.0 - sum_lo;
            for &i in &perm {
                let extra = (row[i].2 - row[i].1).min(budget);
                dist[i] += extra;
                budget -= extra;
                if budget <= 0.0 {
                    break;
                }
            }
            let v: f64 = row.iter().zip(&dist).map(|(e, d)| d * values[e.0]).sum();
            best = match direction {
                Direction::Minimize => best.min(v),
                Direction::Maximize => best.max(v),
            };
        }
        best
    }

    /// Value iteration with the vertex-enumeration inner step.
    pub fn brute_force_values(
        model: &ExplicitImdp,
        objective: Objective,
        tol: f64,
        max_sweeps: usize,
    ) -> Vec<f64> {
        let n = model.num_states;
        let mut values = vec![0.0; n];
        for s in 0..n {
            if model.accepting[s] {
                values[s] = 1.0;
            }
        }
        let dir = objective.direction();
        for _ in 0..max_sweeps {
            let mut next = values.clone();
            let mut residual = 0.0f64;
            for s in 0..n {
                if model.accepting[s] || model.sink[s] {
                    continue;
                }
                let mut best = f64::NEG_INFINITY;
                for a in 0..model.num_actions {
                    let row = &model.rows[s * model.num_actions + a];
                    let v = vertex_optimum(row, &values, dir);
                    if v > best {
                        best = v;
                    }
                }
                residual = residual.max((best - values[s]).abs());
                next[s] = best;
            }
            values = next;
            if residual < tol {
                break;
            }
        }
        values
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::{BuildMeta, TransitionInterval};
    use crate::geometry::{LabeledRegion, Partition, Rect};
    use crate::ltlf::{parse, to_dfa};
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn adversary_full_freedom_hits_the_extreme() {
        let row = vec![(0, 0.0, 1.0), (1, 0.0, 1.0)];
        let values = vec![1.0, 0.0];
        let (dist, v) = adversary_extreme(&row, &values, Direction::Minimize).unwrap();
        assert_eq!(dist, vec![0.0, 1.0]);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn adversary_matches_the_worked_example() {
        let row = vec![(0, 0.3, 0.7), (1, 0.2, 0.6), (2, 0.1, 0.5)];
        let values = vec![1.0, 0.5, 0.0];
        let (dist, v) = adversary_extreme(&row, &values, Direction::Minimize).unwrap();
        assert_relative_eq!(dist[0], 0.3, epsilon = 1e-12);
        assert_relative_eq!(dist[1], 0.2, epsilon = 1e-12);
        assert_relative_eq!(dist[2], 0.5, epsilon = 1e-12);
        assert_relative_eq!(v, 0.40, epsilon = 1e-12);
        let (dist_max, v_max) = adversary_extreme(&row, &values, Direction::Maximize).unwrap();
        assert_relative_eq!(dist_max[0], 0.7, epsilon = 1e-12);
        assert_relative_eq!(dist_max[1], 0.2, epsilon = 1e-12);
        assert_relative_eq!(dist_max[2], 0.1, epsilon = 1e-12);
        assert_relative_eq!(v_max, 0.80, epsilon = 1e-12);
    }

    #[test]
    fn adversary_rejects_infeasible_rows() {
        let row = vec![(0, 0.8, 0.9), (1, 0.5, 0.9)];
        assert!(matches!(
            adversary_extreme(&row, &[0.0, 1.0], Direction::Minimize),
            Err(SynthesisError::InfeasibleRow { .. })
        ));
        let row2 = vec![(0, 0.0, 0.4), (1, 0.0, 0.4)];
        assert!(adversary_extreme(&row2, &[0.0, 1.0], Direction::Minimize).is_err());
    }

    #[test]
    fn adversary_distribution_is_feasible_and_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let model = testkit::random_explicit_imdp(&mut rng, 6, 1);
            let values: Vec<f64> = (0..model.num_states).map(|_| rng.random()).collect();
            for row in &model.rows {
                for dir in [Direction::Minimize, Direction::Maximize] {
                    let (dist, v) = adversary_extreme(row, &values, dir).unwrap();
                    let total: f64 = dist.iter().sum();
                    assert!((total - 1.0).abs() < 1e-12, "sums to {total}");
                    for ((_, lo, hi), d) in row.iter().zip(&dist) {
                        assert!(*lo - 1e-12 <= *d && *d <= *hi + 1e-12);
                    }
                    let exact = testkit::vertex_optimum(row, &values, dir);
                    assert_relative_eq!(v, exact, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn adversary_argmax_is_shift_invariant() {
        // adding a common constant to all successor values changes the
        // optimum by exactly that constant and never the chosen ordering
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let model = testkit::random_explicit_imdp(&mut rng, 6, 2);
            let values: Vec<f64> = (0..model.num_states)
                .map(|_| rng.random_range(0.0..0.5))
                .collect();
            let shifted: Vec<f64> = values.iter().map(|v| v + 0.25).collect();
            for state in 0..model.num_states {
                if model.accepting[state] || model.sink[state] {
                    continue;
                }
                let pick = |vals: &[f64]| -> usize {
                    let mut best = f64::NEG_INFINITY;
                    let mut arg = 0;
                    for a in 0..model.num_actions {
                        let row = &model.rows[state * model.num_actions + a];
                        let (_, v) = adversary_extreme(row, vals, Direction::Minimize).unwrap();
                        if v > best + 1e-15 {
                            best = v;
                            arg = a;
                        }
                    }
                    arg
                };
                assert_eq!(pick(&values), pick(&shifted));
            }
        }
    }

    fn chain_model(lo: f64, hi: f64) -> ExplicitImdp {
        // 0 -> 1 -> accepting(3), sink at 2
        ExplicitImdp {
            num_states: 4,
            num_actions: 1,
            rows: vec![
                vec![(1, lo, hi), (2, 1.0 - hi, 1.0 - lo)],
                vec![(3, 1.0, 1.0)],
                vec![(2, 1.0, 1.0)],
                vec![(3, 1.0, 1.0)],
            ],
            accepting: vec![false, false, false, true],
            sink: vec![false, false, true, false],
        }
    }

    #[test]
    fn deterministic_chain_reaches_certainty() {
        let model = chain_model(1.0, 1.0);
        let (v, _) =
            solve_explicit(&model, Objective::Maximin, None, &IviOptions::default()).unwrap();
        assert_relative_eq!(v[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(v[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn uncertain_chain_spreads_between_bounds() {
        let model = chain_model(0.5, 0.9);
        let (lo, _) =
            solve_explicit(&model, Objective::Maximin, None, &IviOptions::default()).unwrap();
        let (hi, _) =
            solve_explicit(&model, Objective::Maximax, None, &IviOptions::default()).unwrap();
        assert_relative_eq!(lo[0], 0.5, epsilon = 1e-9);
        assert_relative_eq!(hi[0], 0.9, epsilon = 1e-9);
    }

    #[test]
    fn sweeps_are_monotone_from_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let model = testkit::random_explicit_imdp(&mut rng, 6, 2);
            for objective in [Objective::Maximin, Objective::Maximax] {
                let mut values = vec![0.0; model.num_states];
                for s in 0..model.num_states {
                    if model.accepting[s] {
                        values[s] = 1.0;
                    }
                }
                for _ in 0..30 {
                    let mut next = values.clone();
                    for s in 0..model.num_states {
                        if model.accepting[s] || model.sink[s] {
                            continue;
                        }
                        let mut best = f64::NEG_INFINITY;
                        for a in 0..model.num_actions {
                            let row = &model.rows[s * model.num_actions + a];
                            let (_, v) =
                                adversary_extreme(row, &values, objective.direction()).unwrap();
                            best = best.max(v);
                        }
                        next[s] = best;
                    }
                    for (old, new) in values.iter().zip(&next) {
                        assert!(new >= &(old - 1e-12), "sweep decreased a value");
                    }
                    values = next;
                }
            }
        }
    }

    #[test]
    fn fixed_points_match_brute_force_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        let opts = IviOptions {
            tol: 1e-13,
            max_sweeps: 20_000,
            init: None,
        };
        for _ in 0..20 {
            let model = testkit::random_explicit_imdp(&mut rng, 6, 2);
            for objective in [Objective::Maximin, Objective::Maximax] {
                let (v, _) = solve_explicit(&model, objective, None, &opts).unwrap();
                let brute = testkit::brute_force_values(&model, objective, 1e-13, 20_000);
                for (a, b) in v.iter().zip(&brute) {
                    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn shrinking_intervals_tightens_the_envelope() {
        // interpolate every interval toward a fixed feasible distribution;
        // the robust value must not drop and the optimistic one must not rise
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let base = testkit::random_explicit_imdp(&mut rng, 6, 2);
        let point: Vec<Vec<f64>> = base
            .rows
            .iter()
            .map(|row| {
                let sum_lo: f64 = row.iter().map(|e| e.1).sum();
                let mut dist: Vec<f64> = row.iter().map(|e| e.1).collect();
                let mut budget = 1.0 - sum_lo;
                for (i, e) in row.iter().enumerate() {
                    let extra = (e.2 - e.1).min(budget);
                    dist[i] += extra;
                    budget -= extra;
                }
                dist
            })
            .collect();
        let opts = IviOptions {
            tol: 1e-12,
            max_sweeps: 20_000,
            init: None,
        };
        let mut last_lo = f64::NEG_INFINITY;
        let mut last_hi = f64::INFINITY;
        for t in [0.0, 0.4, 0.8, 1.0] {
            let mut model = base.clone();
            for (row, pt) in model.rows.iter_mut().zip(&point) {
                for (e, p) in row.iter_mut().zip(pt) {
                    e.1 += t * (p - e.1);
                    e.2 += t * (p - e.2);
                }
            }
            let (lo, _) = solve_explicit(&model, Objective::Maximin, None, &opts).unwrap();
            let (hi, _) = solve_explicit(&model, Objective::Maximax, None, &opts).unwrap();
            assert!(lo[0] >= last_lo - 1e-9);
            assert!(hi[0] <= last_hi + 1e-9);
            last_lo = lo[0];
            last_hi = hi[0];
        }
    }

    /// Tiny abstraction: four cells in a row, leftmost labeled Des and
    /// rightmost labeled Obs; mode 1 drifts left, mode 2 drifts right.
    fn make_toy_pimdp() -> Pimdp {
        let domain = Rect::new(vec![0.0], vec![4.0]).unwrap();
        let regions = vec![
            LabeledRegion::new("Des", Rect::new(vec![0.0], vec![1.0]).unwrap()),
            LabeledRegion::new("Obs", Rect::new(vec![3.0], vec![4.0]).unwrap()),
        ];
        let partition = Partition::build(domain, &regions, &[1.0]).unwrap();
        // mode 1 drifts left, mode 2 drifts right; unsafe leak from cell 3
        let iv = |lo: f64, hi: f64| TransitionInterval::new(lo, hi);
        let rows = vec![
            // cell 0
            ImdpRow {
                entries: vec![(0, iv(0.9, 1.0)), (1, iv(0.0, 0.1)), (4, iv(0.0, 0.05))],
                default_hi: 0.0,
            },
            ImdpRow {
                entries: vec![(0, iv(0.0, 0.2)), (1, iv(0.8, 1.0)), (4, iv(0.0, 0.05))],
                default_hi: 0.0,
            },
            // cell 1
            ImdpRow {
                entries: vec![(0, iv(0.85, 1.0)), (1, iv(0.0, 0.15)), (4, iv(0.0, 0.05))],
                default_hi: 0.0,
            },
            ImdpRow {
                entries: vec![(1, iv(0.0, 0.2)), (2, iv(0.8, 1.0)), (4, iv(0.0, 0.05))],
                default_hi: 0.0,
            },
            // cell 2
            ImdpRow {
                entries: vec![(1, iv(0.8, 0.95)), (2, iv(0.0, 0.2)), (4, iv(0.0, 0.05))],
                default_hi: 0.0,
            },
            ImdpRow {
                entries: vec![(2, iv(0.0, 0.2)), (3, iv(0.8, 1.0)), (4, iv(0.0, 0.05))],
                default_hi: 0.0,
            },
            // cell 3
            ImdpRow {
                entries: vec![(2, iv(0.7, 0.9)), (3, iv(0.0, 0.2)), (4, iv(0.05, 0.15))],
                default_hi: 0.0,
            },
            ImdpRow {
                entries: vec![(3, iv(0.7, 1.0)), (4, iv(0.0, 0.3))],
                default_hi: 0.0,
            },
        ];
        let imdp = Imdp {
            partition,
            num_modes: 2,
            rows,
            meta: BuildMeta::default(),
        };
        let ap: Vec<String> = vec!["Des".into(), "Obs".into()];
        let formula = parse("G !Obs & F Des", Some(&ap)).unwrap();
        let dfa = to_dfa(&formula, &ap, 1 << 20).unwrap();
        Pimdp::build(imdp, dfa).unwrap()
    }

    #[test]
    fn product_structure_is_consistent() {
        let pimdp = make_toy_pimdp();
        // Des-labeled initial cell starts accepting
        assert!(pimdp.is_accepting(pimdp.initial_state(0)));
        // Obs-labeled initial cell starts dead: no accepting state reachable
        let dead = pimdp.initial_state(3);
        assert!(!pimdp.is_accepting(dead));
        let dead_dfa = pimdp.dfa.dead_states();
        assert!(dead_dfa[dead % pimdp.num_dfa_states()]);
        // outside products freeze the dfa component
        let n_dfa = pimdp.num_dfa_states();
        for s in 0..n_dfa {
            let pid = pimdp.product_successor[s][pimdp.imdp.unsafe_index()];
            assert_eq!(pid % n_dfa, s);
            assert_eq!(pid / n_dfa, pimdp.imdp.unsafe_index());
        }
    }

    #[test]
    fn fast_path_agrees_with_explicit_reference() {
        let pimdp = make_toy_pimdp();
        let explicit = pimdp.to_explicit();
        let opts = IviOptions {
            tol: 1e-12,
            max_sweeps: 50_000,
            init: None,
        };
        for objective in [Objective::Maximin, Objective::Maximax] {
            let (fast, _) = interval_value_iteration(&pimdp, objective, None, &opts).unwrap();
            let explicit_actions: Option<Vec<usize>> = None;
            let (slow, _) =
                solve_explicit(&explicit, objective, explicit_actions.as_deref(), &opts).unwrap();
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-9, "fast {a} vs explicit {b}");
            }
        }
    }

    #[test]
    fn synthesis_classifies_and_sandwiches() {
        let pimdp = make_toy_pimdp();
        let result = synthesize(&pimdp, 0.95, &IviOptions::default()).unwrap();
        for pid in 0..pimdp.num_states() {
            assert!(result.lower[pid] <= result.upper[pid] + 1e-9);
            assert!(result.upper[pid] <= result.upper_opt[pid] + 1e-9);
        }
        // Des cell: accepting from step zero
        assert_eq!(result.cells[0].class, CellClass::Yes);
        assert_eq!(result.cells[0].lower, 1.0);
        assert_eq!(result.cells[0].gap, 0.0);
        // Obs cell: dead from step zero
        assert_eq!(result.cells[3].class, CellClass::No);
        assert_eq!(result.cells[3].upper, 0.0);
        // the drift-left strategy makes the neighbor satisfiable
        assert!(result.cells[1].lower > 0.8);
        // strategy picks the leftward mode at the waiting state of cell 1
        let pid1 = pimdp.initial_state(1);
        assert_eq!(result.strategy.actions[pid1], 1);
    }

    #[test]
    fn fast_path_handles_implicit_defaults() {
        // rows with few explicit entries and a positive implicit upper bound
        // for everything else, as the abstraction builder emits
        let domain = Rect::new(vec![0.0], vec![8.0]).unwrap();
        let regions = vec![LabeledRegion::new(
            "Des",
            Rect::new(vec![0.0], vec![1.0]).unwrap(),
        )];
        let partition = Partition::build(domain, &regions, &[1.0]).unwrap();
        let iv = |lo: f64, hi: f64| TransitionInterval::new(lo, hi);
        let mut rows = Vec::new();
        for q in 0..8usize {
            for mode in 0..2usize {
                let target = if mode == 0 {
                    q.saturating_sub(1)
                } else {
                    (q + 1).min(7)
                };
                let mut entries = vec![(q, iv(0.0, 0.08)), (8, iv(0.001, 0.02))];
                if target != q {
                    entries.push((target, iv(0.85, 0.97)));
                } else {
                    entries[0] = (q, iv(0.85, 0.97));
                }
                entries.sort_unstable_by_key(|e| e.0);
                rows.push(ImdpRow {
                    entries,
                    default_hi: 0.004,
                });
            }
        }
        let imdp = Imdp {
            partition,
            num_modes: 2,
            rows,
            meta: BuildMeta::default(),
        };
        let ap: Vec<String> = vec!["Des".into()];
        let dfa = to_dfa(&parse("F Des", Some(&ap)).unwrap(), &ap, 1 << 20).unwrap();
        let pimdp = Pimdp::build(imdp, dfa).unwrap();
        let explicit = pimdp.to_explicit();
        let opts = IviOptions {
            tol: 1e-12,
            max_sweeps: 50_000,
            init: None,
        };
        for objective in [Objective::Maximin, Objective::Maximax] {
            let (fast, _) = interval_value_iteration(&pimdp, objective, None, &opts).unwrap();
            let (slow, _) = solve_explicit(&explicit, objective, None, &opts).unwrap();
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-9, "fast {a} vs explicit {b}");
            }
        }
        // the adjacent cell reaches the goal confidently in one hop, and the
        // classification agrees with the threshold comparisons everywhere
        let result = synthesize(&pimdp, 0.9, &IviOptions::default()).unwrap();
        assert!(
            result.cells[1].lower > 0.9,
            "lower = {}",
            result.cells[1].lower
        );
        assert_eq!(result.cells[1].class, CellClass::Yes);
        for c in &result.cells {
            let expected = if c.lower >= 0.9 {
                CellClass::Yes
            } else if c.upper < 0.9 {
                CellClass::No
            } else {
                CellClass::Maybe
            };
            assert_eq!(c.class, expected);
            assert!(c.gap >= 0.0);
        }
    }

    #[test]
    fn fast_path_agrees_on_randomized_products() {
        // random sparse rows, random labels, random formulas: the prefix-sum
        // walk must match the reference adversary row by row
        let mut rng = ChaCha8Rng::seed_from_u64(314);
        for round in 0..10 {
            let num_cells = 30 + 2 * round;
            let domain = Rect::new(vec![0.0], vec![num_cells as f64]).unwrap();
            let mut regions = Vec::new();
            for (label, span) in [("a", 0..3usize), ("b", 5..9)] {
                regions.push(LabeledRegion::new(
                    label,
                    Rect::new(vec![span.start as f64], vec![span.end as f64]).unwrap(),
                ));
            }
            let partition = Partition::build(domain, &regions, &[1.0]).unwrap();
            let unsafe_idx = partition.unsafe_index();
            let num_modes = 2usize;
            let mut rows = Vec::new();
            for _ in 0..num_cells * num_modes {
                // include large defaults so the budget can exhaust in the
                // middle of an implicit run
                let default_hi = [0.0, 0.002, 0.2][rng.random_range(0..3)];
                let k = rng.random_range(2..6usize);
                let mut succs: Vec<usize> =
                    (0..k).map(|_| rng.random_range(0..num_cells)).collect();
                succs.push(unsafe_idx);
                succs.sort_unstable();
                succs.dedup();
                // feasible point distribution over the chosen successors
                let weights: Vec<f64> = succs.iter().map(|_| rng.random::<f64>() + 0.05).collect();
                let total: f64 = weights.iter().sum();
                let entries: Vec<(usize, TransitionInterval)> = succs
                    .iter()
                    .zip(&weights)
                    .map(|(&s, &w)| {
                        let p = w / total;
                        let lo = p * rng.random::<f64>();
                        let hi = p + (1.0 - p) * rng.random::<f64>();
                        (s, TransitionInterval::new(lo, hi))
                    })
                    .collect();
                rows.push(ImdpRow {
                    entries,
                    default_hi,
                });
            }
            let imdp = Imdp {
                partition,
                num_modes,
                rows,
                meta: BuildMeta::default(),
            };
            let ap: Vec<String> = vec!["a".into(), "b".into()];
            let formula = crate::ltlf::testkit::random_formula(&mut rng, &ap, 3);
            let dfa = to_dfa(&formula, &ap, 1 << 20).unwrap();
            let pimdp = Pimdp::build(imdp, dfa).unwrap();
            let explicit = pimdp.to_explicit();
            let opts = IviOptions {
                tol: 1e-11,
                max_sweeps: 100_000,
                init: None,
            };
            for objective in [Objective::Maximin, Objective::Maximax] {
                let (fast, _) = interval_value_iteration(&pimdp, objective, None, &opts).unwrap();
                let (slow, _) = solve_explicit(&explicit, objective, None, &opts).unwrap();
                for (pid, (a, b)) in fast.iter().zip(&slow).enumerate() {
                    assert!(
                        (a - b).abs() < 1e-8,
                        "round {round} {objective:?} state {pid}: fast {a} vs explicit {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn ivi_rejects_missing_strategy() {
        let pimdp = make_toy_pimdp();
        assert!(matches!(
            interval_value_iteration(&pimdp, Objective::FixedMax, None, &IviOptions::default()),
            Err(SynthesisError::StrategyMissing)
        ));
    }

    #[test]
    fn product_rejects_unknown_propositions() {
        let pimdp = make_toy_pimdp();
        let ap: Vec<String> = vec!["Elsewhere".into()];
        let formula = parse("F Elsewhere", Some(&ap)).unwrap();
        let dfa = to_dfa(&formula, &ap, 1 << 20).unwrap();
        assert!(matches!(
            Pimdp::build(pimdp.imdp.clone(), dfa),
            Err(SynthesisError::ApMismatch { .. })
        ));
    }

    #[test]
    fn all_accepting_product_is_immediately_certain() {
        let pimdp = make_toy_pimdp();
        let ap: Vec<String> = vec!["Des".into(), "Obs".into()];
        let dfa = to_dfa(&crate::ltlf::Formula::True, &ap, 1 << 20).unwrap();
        let trivial = Pimdp::build(pimdp.imdp.clone(), dfa).unwrap();
        let (v, _) =
            interval_value_iteration(&trivial, Objective::Maximin, None, &IviOptions::default())
                .unwrap();
        for cell in 0..trivial.imdp.partition.num_cells() {
            assert_eq!(v[trivial.initial_state(cell)], 1.0);
        }
    }
}
