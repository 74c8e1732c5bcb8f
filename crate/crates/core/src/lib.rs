//! Data-driven strategy synthesis for switched stochastic systems.
//!
//! Given state-action-successor samples of a system whose per-mode dynamics
//! are only partially known, this crate learns the unknown residual dynamics
//! with Gaussian process regression, certifies a uniform regression error
//! bound, abstracts the closed-loop behavior into an interval Markov decision
//! process over a grid partition, and synthesizes a mode-switching strategy
//! that maximizes the probability of satisfying a finite-trace LTL
//! specification. Every per-state satisfaction probability comes with sound
//! lower/upper bounds and an optimality-gap estimate.
//!
//! Pipeline (each stage is a pure function, see the `swsynth-cli` crate):
//!
//! 1. [`learning`] — per-mode residual datasets and GP posteriors with
//!    information-gain and RKHS-bound bookkeeping.
//! 2. [`bounds`] — sound ranges of the learned map over grid cells.
//! 3. [`abstraction`] — interval MDP assembly from transition probability
//!    bounds.
//! 4. [`ltlf`] — formula parsing, finite-trace semantics, DFA compilation.
//! 5. [`synthesis`] — product construction and interval value iteration.
//! 6. [`runtime`] — strategy refinement into an executable switching
//!    controller plus Monte Carlo validation.

pub mod abstraction;
pub mod bounds;
pub mod geometry;
pub mod learning;
pub mod ltlf;
pub mod runtime;
pub mod synthesis;
