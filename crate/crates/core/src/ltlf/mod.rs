//! Linear temporal logic over finite traces: parsing, trace semantics, and
//! compilation to a minimized deterministic finite automaton.
//!
//! Formulas are built from atomic propositions with boolean connectives, the
//! strong next operator `X`, and `U` (until); `F` and `G` are kept in the
//! syntax tree and treated by their usual definitions `F p = true U p` and
//! `G p = !F !p`. A trace is a finite sequence of proposition sets. The DFA
//! construction progresses the formula symbol by symbol over canonical
//! syntactic forms and then runs partition refinement, so the automaton
//! accepts exactly the traces the recursive semantics accepts (which the test
//! suite checks exhaustively against random formulas).

mod automaton;
mod parser;

pub use automaton::{to_dfa, Dfa, DfaError};
pub use parser::{parse, ParseError};

use std::fmt;
use std::sync::Arc;

/// Symbol of a trace: the set of atomic propositions that hold, encoded as a
/// bitmask over a declared proposition order.
pub type Symbol = u32;

/// LTLf formula over named atomic propositions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Arc<Formula>),
    /// Conjunction in canonical form: flattened, sorted, deduplicated.
    And(Vec<Arc<Formula>>),
    Or(Vec<Arc<Formula>>),
    Next(Arc<Formula>),
    Until(Arc<Formula>, Arc<Formula>),
    Eventually(Arc<Formula>),
    Globally(Arc<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Arc<Formula> {
        Arc::new(Formula::Atom(name.into()))
    }

    pub fn not(f: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Not(f))
    }

    pub fn and(a: Arc<Formula>, b: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::And(vec![a, b]))
    }

    pub fn or(a: Arc<Formula>, b: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Or(vec![a, b]))
    }

    pub fn next(f: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Next(f))
    }

    pub fn until(a: Arc<Formula>, b: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Until(a, b))
    }

    pub fn eventually(f: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Eventually(f))
    }

    pub fn globally(f: Arc<Formula>) -> Arc<Formula> {
        Arc::new(Formula::Globally(f))
    }

    /// Atomic propositions appearing in the formula, in first-occurrence order.
    pub fn atoms(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                if !out.contains(a) {
                    out.push(a.clone());
                }
            }
            Formula::Not(f) | Formula::Next(f) | Formula::Eventually(f) | Formula::Globally(f) => {
                f.collect_atoms(out)
            }
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_atoms(out);
                }
            }
            Formula::Until(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(x) => write!(f, "!({x})"),
            Formula::And(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| format!("({x})")).collect();
                write!(f, "{}", parts.join(" & "))
            }
            Formula::Or(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| format!("({x})")).collect();
                write!(f, "{}", parts.join(" | "))
            }
            Formula::Next(x) => write!(f, "X ({x})"),
            Formula::Until(a, b) => write!(f, "({a}) U ({b})"),
            Formula::Eventually(x) => write!(f, "F ({x})"),
            Formula::Globally(x) => write!(f, "G ({x})"),
        }
    }
}

/// A finite trace over a declared atomic-proposition order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub symbols: Vec<Symbol>,
}

impl Trace {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Trace { symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Builds a symbol from proposition names given the declared order.
pub fn symbol_of(names: &[&str], ap: &[String]) -> Symbol {
    let mut bits = 0u32;
    for n in names {
        if let Some(i) = ap.iter().position(|a| a == n) {
            bits |= 1 << i;
        }
    }
    bits
}

fn atom_bit(name: &str, ap: &[String]) -> Option<u32> {
    ap.iter().position(|a| a == name).map(|i| 1 << i)
}

/// Recursive finite-trace semantics: does position `i` of `trace` model the
/// formula? `i` must be a valid position.
pub fn evaluate(formula: &Formula, trace: &Trace, i: usize, ap: &[String]) -> bool {
    debug_assert!(i < trace.len(), "evaluate requires a valid position");
    match formula {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a) => match atom_bit(a, ap) {
            Some(bit) => trace.symbols[i] & bit != 0,
            None => false,
        },
        Formula::Not(f) => !evaluate(f, trace, i, ap),
        Formula::And(fs) => fs.iter().all(|f| evaluate(f, trace, i, ap)),
        Formula::Or(fs) => fs.iter().any(|f| evaluate(f, trace, i, ap)),
        Formula::Next(f) => trace.len() > i + 1 && evaluate(f, trace, i + 1, ap),
        Formula::Until(a, b) => (i..trace.len())
            .any(|j| evaluate(b, trace, j, ap) && (i..j).all(|k| evaluate(a, trace, k, ap))),
        Formula::Eventually(f) => (i..trace.len()).any(|j| evaluate(f, trace, j, ap)),
        Formula::Globally(f) => (i..trace.len()).all(|j| evaluate(f, trace, j, ap)),
    }
}

/// Does the whole trace model the formula? The empty trace is judged by the
/// empty-remainder rules (`X`, atoms and `U` fail; `G` holds).
pub fn models(formula: &Formula, trace: &Trace, ap: &[String]) -> bool {
    if trace.is_empty() {
        automaton::holds_on_empty(formula)
    } else {
        evaluate(formula, trace, 0, ap)
    }
}

#[cfg(any(test, feature = "testkit"))]
pub mod testkit {
    //! Seeded random formulas and traces for oracle-equivalence testing.

    use super::*;
    use rand::prelude::*;

    pub fn random_formula<R: Rng>(rng: &mut R, ap: &[String], depth: usize) -> Arc<Formula> {
        if depth == 0 {
            return match rng.random_range(0..6) {
                0 => Arc::new(Formula::True),
                1 => Arc::new(Formula::False),
                _ => Formula::atom(ap[rng.random_range(0..ap.len())].clone()),
            };
        }
        match rng.random_range(0..8) {
            0 => Formula::not(random_formula(rng, ap, depth - 1)),
            1 => Formula::and(
                random_formula(rng, ap, depth - 1),
                random_formula(rng, ap, depth - 1),
            ),
            2 => Formula::or(
                random_formula(rng, ap, depth - 1),
                random_formula(rng, ap, depth - 1),
            ),
            3 => Formula::next(random_formula(rng, ap, depth - 1)),
            4 => Formula::until(
                random_formula(rng, ap, depth - 1),
                random_formula(rng, ap, depth - 1),
            ),
            5 => Formula::eventually(random_formula(rng, ap, depth - 1)),
            6 => Formula::globally(random_formula(rng, ap, depth - 1)),
            _ => random_formula(rng, ap, depth - 1),
        }
    }

    pub fn random_trace<R: Rng>(rng: &mut R, num_ap: usize, max_len: usize) -> Trace {
        let len = rng.random_range(0..=max_len);
        Trace::new(
            (0..len)
                .map(|_| rng.random_range(0..(1u32 << num_ap)))
                .collect(),
        )
    }
}
