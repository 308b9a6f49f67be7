//! Constrained proportional awards for multi-issue allocation problems with
//! crossed claims.
//!
//! Several divisible issues (resources) are shared by claimants who each hold
//! one claim that draws jointly on a personal subset of the issues. The crate
//! provides:
//!
//! * [`problem`]: the data model, validation, feasibility and Pareto tests;
//! * [`cpa`]: the constrained proportional awards procedure with a full trace;
//! * [`rules`]: a common rule interface and the comparison rules;
//! * [`axioms`]: problem transformations, axiom checkers, and a seeded fuzzer;
//! * [`gen`]: a seeded generator of valid problems and transformation specs;
//! * [`doc`]: JSON documents for allocations, traces, and verdicts.
//!
//! All arithmetic is exact.

pub mod axioms;
pub mod cpa;
pub mod doc;
pub mod fixtures;
pub mod gen;
pub mod problem;
pub mod rational;
pub mod rules;

pub use cpa::{decompose, precedence_order, rho_sequence, solve_cpa, Trace};
pub use problem::{
    are_equal, is_feasible, is_pareto_efficient, normalize, validate_problem, Allocation, Problem, ProblemDoc,
};
pub use rational::Rational;
pub use rules::{Rule, RuleId};
