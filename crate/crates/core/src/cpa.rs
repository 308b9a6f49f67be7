//! The constrained proportional awards (CPA) procedure.
//!
//! Each step scales every active claimant's residual claim by one common
//! factor, the largest that no active issue refuses:
//!
//! ```text
//! λ = min(1, min over active issues i of  e_i / Σ_{active j claiming i} c_j)
//! ```
//!
//! Active claimants receive `λ·c_j`, capacities and residual claims shrink
//! accordingly, and every issue attaining the minimum is exhausted. The run
//! stops when a step pays all residual claims (`λ = 1`) or when no claimant or
//! no issue is left active. A problem with `m` issues needs at most `m` steps.
//!
//! Only active claimants take part in a step's update; the residual claims of
//! inactive claimants are frozen.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::problem::{Allocation, Claimant, Issue, Problem};
use crate::rational::{self, Rational};

/// Why a claimant left the active set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitCause {
    /// Residual claim reached zero.
    ClaimExhausted,
    /// One of its issues ran out.
    IssueExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    /// 1-based step index.
    pub step: usize,
    pub active_issues: Vec<String>,
    pub active_claimants: Vec<String>,
    /// Factor applied to every active residual claim, in `(0, 1]`.
    pub lambda: Rational,
    /// Per active issue: `Some(e_i / demand_i)`, or `None` when no active claimant demands it.
    pub per_issue_lambda: Vec<(String, Option<Rational>)>,
    /// Award increment of each active claimant; inactive claimants receive nothing.
    pub increments: Vec<(String, Rational)>,
    /// Cumulative share of the original claim paid to anyone active through this step.
    pub rho_after: Rational,
    pub deactivated_issues: Vec<String>,
    pub deactivated_claimants: Vec<(String, ExitCause)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<StepRecord>,
    pub final_allocation: Allocation,
    /// Capacity left on each issue after the final step.
    pub leftover: Vec<(String, Rational)>,
    /// Issues with zero capacity from the outset.
    pub initially_inactive_issues: Vec<String>,
    /// Claimants with a zero claim or an empty issue from the outset.
    pub initially_inactive_claimants: Vec<String>,
}

/// When an issue or claimant stopped being active.
///
/// Serializes as `"initial"`, the step number, or `"survived"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exit {
    /// Never active.
    Initial,
    /// Inactive from the step after this one.
    Step(usize),
    /// Still active when the procedure ended.
    Survived,
}

impl Serialize for Exit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Exit::Initial => s.serialize_str("initial"),
            Exit::Step(n) => s.serialize_u64(*n as u64),
            Exit::Survived => s.serialize_str("survived"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecedenceOrder {
    pub issues: Vec<(String, Exit)>,
    pub claimants: Vec<(String, Exit)>,
}

impl PrecedenceOrder {
    fn lookup(table: &[(String, Exit)], id: &str) -> Option<Exit> {
        table.iter().find(|(k, _)| k == id).map(|&(_, e)| e)
    }

    pub fn issue_exit(&self, id: &str) -> Option<Exit> {
        Self::lookup(&self.issues, id)
    }

    pub fn claimant_exit(&self, id: &str) -> Option<Exit> {
        Self::lookup(&self.claimants, id)
    }

    /// `Less` when `a` leaves strictly before `b`, `Equal` when they leave together.
    pub fn compare_issues(&self, a: &str, b: &str) -> Option<Ordering> {
        Some(self.issue_exit(a)?.cmp(&self.issue_exit(b)?))
    }

    pub fn compare_claimants(&self, a: &str, b: &str) -> Option<Ordering> {
        Some(self.claimant_exit(a)?.cmp(&self.claimant_exit(b)?))
    }
}

/// Index-level record of one step; converted to [`StepRecord`] by [`solve_cpa`].
#[derive(Debug, Clone)]
pub(crate) struct RawStep {
    pub active_issues: Vec<usize>,
    pub active_claimants: Vec<usize>,
    pub lambda: Rational,
    pub per_issue_lambda: Vec<(usize, Option<Rational>)>,
    pub increments: Vec<Rational>,
    pub rho_after: Rational,
    pub deactivated_issues: Vec<usize>,
    pub deactivated_claimants: Vec<(usize, ExitCause)>,
}

#[derive(Debug, Clone)]
pub(crate) struct RawRun {
    pub awards: Vec<Rational>,
    pub steps: Vec<RawStep>,
    pub leftover: Vec<Rational>,
    pub initial_issues: Vec<usize>,
    pub initial_claimants: Vec<usize>,
}

fn active_claimants(claims: &[Rational], capacity: &[Rational], sets: &[Vec<usize>]) -> Vec<usize> {
    (0..claims.len())
        .filter(|&j| claims[j].is_positive() && sets[j].iter().all(|&i| capacity[i].is_positive()))
        .collect()
}

fn active_issues(capacity: &[Rational]) -> Vec<usize> {
    (0..capacity.len()).filter(|&i| capacity[i].is_positive()).collect()
}

/// CPA on raw vectors. `sets[j]` lists the issues claimant `j` draws on.
pub(crate) fn run(mut capacity: Vec<Rational>, mut claims: Vec<Rational>, sets: &[Vec<usize>]) -> RawRun {
    let n = claims.len();
    let mut awards = vec![Rational::zero(); n];
    let mut steps = Vec::new();
    let mut issues_now = active_issues(&capacity);
    let mut claimants_now = active_claimants(&claims, &capacity, sets);
    let initial_issues = (0..capacity.len()).filter(|i| !issues_now.contains(i)).collect();
    let initial_claimants = (0..n).filter(|j| !claimants_now.contains(j)).collect();
    let mut unpaid_share = Rational::one();

    while !issues_now.is_empty() && !claimants_now.is_empty() {
        let mut demand = vec![Rational::zero(); capacity.len()];
        for &j in &claimants_now {
            for &i in &sets[j] {
                demand[i] += &claims[j];
            }
        }
        let per_issue_lambda: Vec<(usize, Option<Rational>)> = issues_now
            .iter()
            .map(|&i| {
                let bound = (!demand[i].is_zero()).then(|| &capacity[i] / &demand[i]);
                (i, bound)
            })
            .collect();
        let lambda = per_issue_lambda.iter().filter_map(|(_, l)| l.as_ref()).fold(Rational::one(), |m, l| {
            if *l < m {
                l.clone()
            } else {
                m
            }
        });

        let mut increments = vec![Rational::zero(); n];
        for &j in &claimants_now {
            let a = &lambda * &claims[j];
            awards[j] += &a;
            claims[j] -= &a;
            increments[j] = a;
        }
        for &i in &issues_now {
            capacity[i] -= &lambda * &demand[i];
        }
        unpaid_share *= Rational::one() - &lambda;

        let issues_next = active_issues(&capacity);
        let claimants_next = active_claimants(&claims, &capacity, sets);
        let deactivated_issues = issues_now.iter().copied().filter(|i| !issues_next.contains(i)).collect();
        let deactivated_claimants = claimants_now
            .iter()
            .copied()
            .filter(|j| !claimants_next.contains(j))
            .map(|j| {
                let cause =
                    if claims[j].is_zero() { ExitCause::ClaimExhausted } else { ExitCause::IssueExhausted };
                (j, cause)
            })
            .collect();
        steps.push(RawStep {
            active_issues: issues_now,
            active_claimants: claimants_now,
            lambda,
            per_issue_lambda,
            increments,
            rho_after: Rational::one() - &unpaid_share,
            deactivated_issues,
            deactivated_claimants,
        });
        issues_now = issues_next;
        claimants_now = claimants_next;
    }

    RawRun { awards, steps, leftover: capacity, initial_issues, initial_claimants }
}

/// Runs CPA on any structurally valid problem and returns the allocation with its full trace.
pub fn solve_cpa(problem: &Problem) -> (Allocation, Trace) {
    let raw = run(problem.capacities(), problem.claims(), &problem.issue_sets());
    let issue_id = |i: usize| problem.issues()[i].id.clone();
    let claimant_id = |j: usize| problem.claimants()[j].id.clone();
    let steps = raw
        .steps
        .iter()
        .enumerate()
        .map(|(s, st)| StepRecord {
            step: s + 1,
            active_issues: st.active_issues.iter().map(|&i| issue_id(i)).collect(),
            active_claimants: st.active_claimants.iter().map(|&j| claimant_id(j)).collect(),
            lambda: st.lambda.clone(),
            per_issue_lambda: st.per_issue_lambda.iter().map(|(i, l)| (issue_id(*i), l.clone())).collect(),
            increments: st
                .active_claimants
                .iter()
                .map(|&j| (claimant_id(j), st.increments[j].clone()))
                .collect(),
            rho_after: st.rho_after.clone(),
            deactivated_issues: st.deactivated_issues.iter().map(|&i| issue_id(i)).collect(),
            deactivated_claimants: st
                .deactivated_claimants
                .iter()
                .map(|&(j, cause)| (claimant_id(j), cause))
                .collect(),
        })
        .collect();
    let allocation = Allocation::new(problem, raw.awards);
    let trace = Trace {
        steps,
        final_allocation: allocation.clone(),
        leftover: raw.leftover.iter().enumerate().map(|(i, e)| (issue_id(i), e.clone())).collect(),
        initially_inactive_issues: raw.initial_issues.iter().map(|&i| issue_id(i)).collect(),
        initially_inactive_claimants: raw.initial_claimants.iter().map(|&j| claimant_id(j)).collect(),
    };
    (allocation, trace)
}

/// Allocation only.
pub fn cpa(problem: &Problem) -> Allocation {
    Allocation::new(problem, run(problem.capacities(), problem.claims(), &problem.issue_sets()).awards)
}

/// Exit step of every issue and claimant recorded in `trace`.
pub fn precedence_order(trace: &Trace) -> PrecedenceOrder {
    let exit_of = |id: &str, initial: &[String], pick: &dyn Fn(&StepRecord) -> bool| {
        if initial.iter().any(|x| x == id) {
            return Exit::Initial;
        }
        trace.steps.iter().find(|s| pick(s)).map_or(Exit::Survived, |s| Exit::Step(s.step))
    };
    let issues = trace
        .leftover
        .iter()
        .map(|(id, _)| {
            let e = exit_of(id, &trace.initially_inactive_issues, &|s| {
                s.deactivated_issues.iter().any(|x| x == id)
            });
            (id.clone(), e)
        })
        .collect();
    let claimants = trace
        .final_allocation
        .iter()
        .map(|(id, _)| {
            let e = exit_of(id, &trace.initially_inactive_claimants, &|s| {
                s.deactivated_claimants.iter().any(|(x, _)| x == id)
            });
            (id.to_owned(), e)
        })
        .collect();
    PrecedenceOrder { issues, claimants }
}

/// Cumulative paid share `1 - Π_{h≤s}(1 - λ_h)` after each step.
pub fn rho_sequence(trace: &Trace) -> Vec<Rational> {
    trace.steps.iter().map(|s| s.rho_after.clone()).collect()
}

/// Splits a problem into the connected components of its claimant–issue graph.
///
/// Components are ordered by their first issue; ids and relative declaration
/// order are preserved inside each component.
pub fn decompose(problem: &Problem) -> Vec<Problem> {
    let m = problem.issues().len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for c in problem.claimants() {
        for w in c.issues.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let roots: Vec<usize> = (0..m).map(|i| find(&mut parent, i)).collect();
    let mut order: Vec<usize> = roots.clone();
    order.sort_unstable();
    order.dedup();
    order
        .into_iter()
        .map(|root| {
            let members: Vec<usize> = (0..m).filter(|&i| roots[i] == root).collect();
            let mut remap = vec![usize::MAX; m];
            for (k, &i) in members.iter().enumerate() {
                remap[i] = k;
            }
            let issues: Vec<Issue> = members.iter().map(|&i| problem.issues()[i].clone()).collect();
            let claimants: Vec<Claimant> = problem
                .claimants()
                .iter()
                .filter(|c| c.issues.first().is_some_and(|&i| roots[i] == root))
                .map(|c| Claimant {
                    id: c.id.clone(),
                    claim: c.claim.clone(),
                    issues: c.issues.iter().map(|&i| remap[i]).collect(),
                })
                .collect();
            Problem::from_resolved(issues, claimants)
        })
        .collect()
}

/// Concatenates component allocations back into the whole problem's claimant order.
pub fn join(problem: &Problem, parts: &[Allocation]) -> Option<Allocation> {
    let awards = problem
        .claimants()
        .iter()
        .map(|c| {
            let x = parts.iter().find_map(|p| p.get(&c.id))?;
            Some((c.id.clone(), x.clone()))
        })
        .collect::<Option<Vec<_>>>()?;
    Some(Allocation::from_pairs(awards))
}

impl std::fmt::Display for StepRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "step {}: lambda={} rho={}",
            self.step,
            rational::Exact(&self.lambda),
            rational::Exact(&self.rho_after)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{pa, pb, single_issue};
    use crate::problem::{is_feasible, is_pareto_efficient};
    use crate::rational::{int, ratio};

    #[test]
    fn pb_hand_trace() {
        let (x, trace) = solve_cpa(&pb());
        assert_eq!(x.get("C1"), Some(&int(6)));
        assert_eq!(x.get("C2"), Some(&int(4)));
        assert_eq!(trace.steps.len(), 2);

        let s1 = &trace.steps[0];
        assert_eq!(s1.lambda, ratio(2, 3));
        assert_eq!(
            s1.per_issue_lambda,
            vec![("E1".into(), Some(ratio(10, 14))), ("E2".into(), Some(ratio(4, 6)))]
        );
        assert_eq!(s1.increments, vec![("C1".into(), ratio(16, 3)), ("C2".into(), int(4))]);
        assert_eq!(s1.deactivated_issues, vec!["E2".to_string()]);
        assert_eq!(s1.deactivated_claimants, vec![("C2".into(), ExitCause::IssueExhausted)]);

        let s2 = &trace.steps[1];
        assert_eq!(s2.lambda, ratio(1, 4));
        assert_eq!(s2.active_claimants, vec!["C1".to_string()]);
        assert_eq!(s2.increments, vec![("C1".into(), ratio(2, 3))]);
        assert_eq!(s2.deactivated_issues, vec!["E1".to_string()]);
        assert!(trace.leftover.iter().all(|(_, e)| e.is_zero()));
    }

    #[test]
    fn pa_hand_trace() {
        let (x, trace) = solve_cpa(&pa());
        assert_eq!(x.get("C1"), Some(&int(3)));
        assert_eq!(x.get("C2"), Some(&int(4)));
        let lambdas: Vec<_> = trace.steps.iter().map(|s| s.lambda.clone()).collect();
        assert_eq!(lambdas, vec![ratio(3, 5), ratio(1, 6)]);
        assert_eq!(trace.steps[0].increments[1], ("C2".into(), ratio(18, 5)));
        assert_eq!(trace.leftover, vec![("E1".into(), int(0)), ("E2".into(), int(3)), ("E3".into(), int(0))]);
        assert!(is_pareto_efficient(&pa(), &x).unwrap());
    }

    #[test]
    fn single_issue_is_proportional() {
        let (x, _) = solve_cpa(&single_issue(10, &[8, 6]));
        assert_eq!(x.get("C1"), Some(&ratio(40, 7)));
        assert_eq!(x.get("C2"), Some(&ratio(30, 7)));
        let x = cpa(&single_issue(10, &[7, 7]));
        assert_eq!(x.get("C1"), Some(&int(5)));
        assert_eq!(x.get("C2"), Some(&int(5)));
    }

    #[test]
    fn precedence_of_fixtures() {
        let order = precedence_order(&solve_cpa(&pb()).1);
        assert_eq!(order.issue_exit("E2"), Some(Exit::Step(1)));
        assert_eq!(order.issue_exit("E1"), Some(Exit::Step(2)));
        assert_eq!(order.compare_issues("E2", "E1"), Some(Ordering::Less));

        let order = precedence_order(&solve_cpa(&pa()).1);
        assert_eq!(order.issue_exit("E1"), Some(Exit::Step(1)));
        assert_eq!(order.issue_exit("E3"), Some(Exit::Step(2)));
        assert_eq!(order.issue_exit("E2"), Some(Exit::Survived));
        assert_eq!(order.compare_issues("E1", "E3"), Some(Ordering::Less));
        assert_eq!(order.compare_issues("E3", "E2"), Some(Ordering::Less));
        assert_eq!(order.claimant_exit("C1"), Some(Exit::Step(1)));
        assert_eq!(order.claimant_exit("C2"), Some(Exit::Step(2)));
    }

    #[test]
    fn full_reimbursement_in_one_step() {
        // Non-binding on E2 only; E1 saturates exactly at λ = 1.
        let p = Problem::from_parts(
            &[("E1", int(5)), ("E2", int(9)), ("E3", int(9))],
            &[("C1", int(2), &["E1", "E2"]), ("C2", int(3), &["E1", "E3"])],
        )
        .unwrap();
        let (x, trace) = solve_cpa(&p);
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(rho_sequence(&trace), vec![int(1)]);
        assert_eq!(x.get("C2"), Some(&int(3)));
        let order = precedence_order(&trace);
        assert_eq!(order.issue_exit("E2"), Some(Exit::Survived));
        assert_eq!(order.compare_issues("E2", "E3"), Some(Ordering::Equal));
        assert_eq!(order.issue_exit("E1"), Some(Exit::Step(1)));
        assert!(trace.steps[0].deactivated_claimants.iter().all(|(_, c)| *c == ExitCause::ClaimExhausted));
    }

    #[test]
    fn rho_of_fixtures() {
        let trace = solve_cpa(&pb()).1;
        assert_eq!(rho_sequence(&trace), vec![ratio(2, 3), ratio(3, 4)]);
        let trace = solve_cpa(&pa()).1;
        assert_eq!(rho_sequence(&trace), vec![ratio(3, 5), ratio(2, 3)]);
    }

    #[test]
    fn zero_claims_and_zero_capacity_are_inactive() {
        let p = Problem::from_parts(
            &[("E1", int(0)), ("E2", int(4))],
            &[("A", int(5), &["E1", "E2"]), ("B", int(0), &["E2"]), ("C", int(6), &["E2"])],
        )
        .unwrap();
        let (x, trace) = solve_cpa(&p);
        assert_eq!(x.get("A"), Some(&int(0)));
        assert_eq!(x.get("B"), Some(&int(0)));
        assert_eq!(x.get("C"), Some(&int(4)));
        assert_eq!(trace.initially_inactive_issues, vec!["E1".to_string()]);
        assert_eq!(trace.initially_inactive_claimants, vec!["A".to_string(), "B".to_string()]);
        let order = precedence_order(&trace);
        assert_eq!(order.issue_exit("E1"), Some(Exit::Initial));
        assert_eq!(order.claimant_exit("B"), Some(Exit::Initial));
    }

    #[test]
    fn empty_problem_has_no_steps() {
        let p = Problem::from_parts(&[("E1", int(3))], &[]).unwrap();
        let (x, trace) = solve_cpa(&p);
        assert!(x.is_empty());
        assert!(trace.steps.is_empty());
        assert_eq!(trace.leftover, vec![("E1".into(), int(3))]);
    }

    #[test]
    fn decompose_connected_and_isolated() {
        assert_eq!(decompose(&pb()), vec![pb()]);
        let p = Problem::from_parts(
            &[("E1", int(3)), ("E2", int(2)), ("E3", int(9))],
            &[("A", int(5), &["E1"]), ("B", int(1), &["E2"]), ("C", int(10), &["E3"])],
        )
        .unwrap();
        let parts = decompose(&p);
        assert_eq!(parts.len(), 3);
        let sols: Vec<_> = parts.iter().map(cpa).collect();
        let joined = join(&p, &sols).unwrap();
        assert_eq!(joined, cpa(&p));
        assert_eq!(joined.get("A"), Some(&int(3)));
        assert_eq!(joined.get("B"), Some(&int(1)));
        assert_eq!(joined.get("C"), Some(&int(9)));
        assert!(is_feasible(&p, &joined).unwrap());
    }
}
