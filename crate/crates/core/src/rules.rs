//! Allocation rules behind one interface.
//!
//! Besides CPA this module carries the single-issue proportional rule and the
//! rules used to show that the CPA axioms are independent of one another:
//! each satisfies all but one of them. `CeaMac` is a reconstruction of an
//! egalitarian counterpart of CPA and is labeled as such wherever it is
//! reported.
//!
//! Every rule accepts any structurally valid [`Problem`], including problems
//! with non-binding issues (reduced problems produce them).

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cpa;
use crate::problem::{Allocation, ModelError, Problem};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("the proportional rule needs exactly one issue, got {0}")]
    NotSingleIssue(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unknown rule {0:?}")]
    UnknownRule(String),
}

/// A total map from problems to feasible allocations.
pub trait Rule: Send + Sync {
    fn name(&self) -> String;
    fn allocate(&self, problem: &Problem) -> Result<Allocation, RuleError>;
}

/// Named rule selectable from the command line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum RuleId {
    Cpa,
    /// Closed-form proportional split on single-issue problems.
    Prop,
    Null,
    /// Serves claimants in full, one after another. Without an explicit order
    /// the declaration order of the problem is used.
    Priority {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order: Option<Vec<String>>,
    },
    TwoPhase,
    TwoStep,
    /// Reconstructed constrained equal awards for crossed claims.
    Cea,
}

impl RuleId {
    pub const ALL_NAMES: [&'static str; 7] =
        ["cpa", "prop", "null", "priority", "two-phase", "two-step", "cea"];

    pub fn label(&self) -> &'static str {
        match self {
            RuleId::Cpa => "cpa",
            RuleId::Prop => "prop",
            RuleId::Null => "null",
            RuleId::Priority { .. } => "priority",
            RuleId::TwoPhase => "two-phase",
            RuleId::TwoStep => "two-step",
            RuleId::Cea => "cea",
        }
    }

    /// True for rules whose definition is reconstructed rather than given.
    pub fn is_reconstructed(&self) -> bool {
        matches!(self, RuleId::Cea)
    }

    /// Drops an explicit priority order by moving it into the problem's
    /// declaration order, so that transformed problems keep a usable order.
    pub fn canonical_input(&self, problem: &Problem) -> Result<(RuleId, Problem), RuleError> {
        match self {
            RuleId::Priority { order: Some(order) } => {
                Ok((RuleId::Priority { order: None }, problem.reordered(order)?))
            }
            other => Ok((other.clone(), problem.clone())),
        }
    }
}

impl FromStr for RuleId {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "cpa" => RuleId::Cpa,
            "prop" => RuleId::Prop,
            "null" => RuleId::Null,
            "priority" => RuleId::Priority { order: None },
            "two-phase" => RuleId::TwoPhase,
            "two-step" => RuleId::TwoStep,
            "cea" => RuleId::Cea,
            other => return Err(RuleError::UnknownRule(other.to_owned())),
        })
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())?;
        if self.is_reconstructed() {
            f.write_str(" (reconstructed)")?;
        }
        Ok(())
    }
}

impl Rule for RuleId {
    fn name(&self) -> String {
        self.label().to_owned()
    }

    fn allocate(&self, problem: &Problem) -> Result<Allocation, RuleError> {
        match self {
            RuleId::Cpa => Ok(cpa::cpa(problem)),
            RuleId::Prop => solve_prop_single(problem),
            RuleId::Null => Ok(solve_null(problem)),
            RuleId::Priority { order: None } => Ok(priority_in_declaration_order(problem)),
            RuleId::Priority { order: Some(order) } => Ok(solve_priority(problem, order)?),
            RuleId::TwoPhase => Ok(solve_two_phase(problem)),
            RuleId::TwoStep => Ok(solve_two_step(problem)),
            RuleId::Cea => Ok(solve_cea_mac(problem)),
        }
    }
}

/// `c_j · min(1, e / C)`: proportional split of one issue, full claims when it does not bind.
fn proportional_share(claim: &Rational, amount: &Rational, total: &Rational) -> Rational {
    if total.is_zero() || total <= amount {
        claim.clone()
    } else {
        claim * amount / total
    }
}

pub fn solve_prop_single(problem: &Problem) -> Result<Allocation, RuleError> {
    if problem.issues().len() != 1 {
        return Err(RuleError::NotSingleIssue(problem.issues().len()));
    }
    let amount = &problem.issues()[0].amount;
    let total = problem.total_claim_on(0);
    let awards = problem.claimants().iter().map(|c| proportional_share(&c.claim, amount, &total)).collect();
    Ok(Allocation::new(problem, awards))
}

pub fn solve_null(problem: &Problem) -> Allocation {
    Allocation::zeros(problem)
}

/// Claimants in `order` each take as much as their claim and the remaining
/// capacity of their issues allow.
pub fn solve_priority(problem: &Problem, order: &[String]) -> Result<Allocation, ModelError> {
    let ranked = problem.reordered(order)?;
    let x = priority_in_declaration_order(&ranked);
    let awards = problem
        .claimants()
        .iter()
        .map(|c| (c.id.clone(), x.get(&c.id).cloned().unwrap_or_else(Rational::zero)))
        .collect();
    Ok(Allocation::from_pairs(awards))
}

fn priority_in_declaration_order(problem: &Problem) -> Allocation {
    let mut left = problem.capacities();
    let awards = problem
        .claimants()
        .iter()
        .map(|c| {
            let x =
                c.issues
                    .iter()
                    .map(|&i| &left[i])
                    .fold(c.claim.clone(), |m, e| if *e < m { e.clone() } else { m });
            for &i in &c.issues {
                left[i] -= &x;
            }
            x
        })
        .collect();
    Allocation::new(problem, awards)
}

/// Exclusive claimants of each issue are served first, proportionally and
/// among themselves; CPA then divides what is left among everyone else.
pub fn solve_two_phase(problem: &Problem) -> Allocation {
    let claimants = problem.claimants();
    let exclusive = |j: usize| claimants[j].issues.len() == 1;
    let mut capacity = problem.capacities();
    let mut awards = vec![Rational::zero(); claimants.len()];

    for (i, left) in capacity.iter_mut().enumerate() {
        let members: Vec<usize> = problem.claimants_on(i).filter(|&j| exclusive(j)).collect();
        let total = members.iter().fold(Rational::zero(), |acc, &j| acc + &claimants[j].claim);
        let amount = left.clone();
        for &j in &members {
            let x = proportional_share(&claimants[j].claim, &amount, &total);
            *left -= &x;
            awards[j] = x;
        }
    }

    let rest: Vec<Rational> = claimants
        .iter()
        .enumerate()
        .map(|(j, c)| if exclusive(j) { Rational::zero() } else { c.claim.clone() })
        .collect();
    let second = cpa::run(capacity, rest, &problem.issue_sets());
    for (x, y) in awards.iter_mut().zip(second.awards) {
        *x += y;
    }
    Allocation::new(problem, awards)
}

/// Guaranteed floor of each claimant: its smallest single-issue proportional award.
pub(crate) fn proportional_floors(problem: &Problem) -> Vec<Rational> {
    let totals: Vec<Rational> = (0..problem.issues().len()).map(|i| problem.total_claim_on(i)).collect();
    problem
        .claimants()
        .iter()
        .map(|c| {
            c.issues
                .iter()
                .map(|&i| proportional_share(&c.claim, &problem.issues()[i].amount, &totals[i]))
                .min()
                .unwrap_or_else(Rational::zero)
        })
        .collect()
}

/// Floors first, then issue by issue from the smallest remaining amount up,
/// proportional rounds among the claimants of that issue until the issue is
/// exhausted or none of its claimants can receive more.
///
/// Each round uses the largest common factor that every remaining capacity
/// tolerates, so rounds on one issue may be cut short by another issue
/// running out; the claimants blocked by it drop out of the next round.
pub fn solve_two_step(problem: &Problem) -> Allocation {
    let claimants = problem.claimants();
    let mut awards = proportional_floors(problem);
    let mut claims: Vec<Rational> = claimants.iter().zip(&awards).map(|(c, g)| &c.claim - g).collect();
    let mut capacity = crate::problem::slack(problem, &awards);
    debug_assert!(capacity.iter().all(|e| !e.is_negative()), "floors never over-commit an issue");

    let mut order: Vec<usize> = (0..capacity.len()).collect();
    order.sort_by(|&a, &b| capacity[a].cmp(&capacity[b]).then(a.cmp(&b)));

    for issue in order {
        loop {
            if !capacity[issue].is_positive() {
                break;
            }
            let eligible: Vec<usize> = problem
                .claimants_on(issue)
                .filter(|&j| {
                    claims[j].is_positive() && claimants[j].issues.iter().all(|&k| capacity[k].is_positive())
                })
                .collect();
            if eligible.is_empty() {
                break;
            }
            let mut demand = vec![Rational::zero(); capacity.len()];
            for &j in &eligible {
                for &k in &claimants[j].issues {
                    demand[k] += &claims[j];
                }
            }
            let factor = demand
                .iter()
                .zip(&capacity)
                .filter(|(d, _)| d.is_positive())
                .map(|(d, e)| e / d)
                .fold(Rational::one(), |m, f| if f < m { f } else { m });
            for &j in &eligible {
                let x = &factor * &claims[j];
                for &k in &claimants[j].issues {
                    capacity[k] -= &x;
                }
                claims[j] -= &x;
                awards[j] += x;
            }
        }
    }
    Allocation::new(problem, awards)
}

/// Egalitarian counterpart of CPA: every active claimant receives the same
/// increment per step, the largest no active issue or residual claim refuses.
pub fn solve_cea_mac(problem: &Problem) -> Allocation {
    let claimants = problem.claimants();
    let mut capacity = problem.capacities();
    let mut claims = problem.claims();
    let mut awards = vec![Rational::zero(); claimants.len()];
    loop {
        let active: Vec<usize> = (0..claimants.len())
            .filter(|&j| {
                claims[j].is_positive() && claimants[j].issues.iter().all(|&i| capacity[i].is_positive())
            })
            .collect();
        if active.is_empty() {
            break;
        }
        let mut headcount = vec![0u64; capacity.len()];
        for &j in &active {
            for &i in &claimants[j].issues {
                headcount[i] += 1;
            }
        }
        let by_issue = headcount
            .iter()
            .zip(&capacity)
            .filter(|(n, _)| **n > 0)
            .map(|(&n, e)| e / Rational::from_integer(n.into()));
        let by_claim = active.iter().map(|&j| claims[j].clone());
        let delta = by_issue.chain(by_claim).min().expect("active claimants exist");
        for &j in &active {
            for &i in &claimants[j].issues {
                capacity[i] -= &delta;
            }
            claims[j] -= &delta;
            awards[j] += &delta;
        }
    }
    Allocation::new(problem, awards)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{pa, pb, single_issue};
    use crate::problem::{is_feasible, is_pareto_efficient};
    use crate::rational::{int, ratio};

    fn amounts(x: &Allocation) -> Vec<Rational> {
        x.iter().map(|(_, v)| v.clone()).collect()
    }

    #[test]
    fn prop_closed_form() {
        let x = solve_prop_single(&single_issue(100, &[40, 80])).unwrap();
        assert_eq!(amounts(&x), vec![ratio(100, 3), ratio(200, 3)]);
        let x = solve_prop_single(&single_issue(10, &[7, 7])).unwrap();
        assert_eq!(amounts(&x), vec![int(5), int(5)]);
        let x = solve_prop_single(&single_issue(10, &[8, 6])).unwrap();
        assert_eq!(amounts(&x), vec![ratio(40, 7), ratio(30, 7)]);
        assert_eq!(solve_prop_single(&pb()), Err(RuleError::NotSingleIssue(2)));
    }

    #[test]
    fn prop_pays_in_full_when_slack() {
        let x = solve_prop_single(&single_issue(20, &[3, 4])).unwrap();
        assert_eq!(amounts(&x), vec![int(3), int(4)]);
    }

    #[test]
    fn null_is_zero() {
        for p in [pb(), pa()] {
            let x = solve_null(&p);
            assert!(x.iter().all(|(_, v)| v.is_zero()));
            assert!(is_feasible(&p, &x).unwrap());
        }
    }

    #[test]
    fn priority_on_pb() {
        let p = pb();
        let x = solve_priority(&p, &["C1".into(), "C2".into()]).unwrap();
        assert_eq!(amounts(&x), vec![int(8), int(2)]);
        let x = solve_priority(&p, &["C2".into(), "C1".into()]).unwrap();
        assert_eq!(amounts(&x), vec![int(6), int(4)]);
        assert_eq!(x.iter().next().unwrap().0, "C1");
        assert!(is_pareto_efficient(&p, &x).unwrap());
        assert_eq!(solve_priority(&p, &["C1".into()]), Err(ModelError::NotAPermutation));
    }

    #[test]
    fn priority_single_claimant() {
        let p =
            Problem::from_parts(&[("E1", int(4)), ("E2", int(3))], &[("A", int(9), &["E1", "E2"])]).unwrap();
        assert_eq!(amounts(&solve_priority(&p, &["A".into()]).unwrap()), vec![int(3)]);
    }

    #[test]
    fn two_phase_on_pb() {
        let x = solve_two_phase(&pb());
        assert_eq!(amounts(&x), vec![int(8), int(2)]);
    }

    #[test]
    fn two_phase_without_exclusive_claimants_is_cpa() {
        let p = pa();
        assert_eq!(solve_two_phase(&p), cpa::cpa(&p));
    }

    #[test]
    fn two_phase_all_exclusive_is_per_issue_prop() {
        let p = Problem::from_parts(
            &[("E1", int(10)), ("E2", int(3))],
            &[("A", int(8), &["E1"]), ("B", int(6), &["E1"]), ("C", int(2), &["E2"]), ("D", int(4), &["E2"])],
        )
        .unwrap();
        assert_eq!(amounts(&solve_two_phase(&p)), vec![ratio(40, 7), ratio(30, 7), int(1), int(2)]);
    }

    #[test]
    fn two_step_on_pb() {
        // Floors (40/7, 4) leave 2/7 on E1 and nothing on E2; C1 then takes the 2/7.
        let p = pb();
        assert_eq!(proportional_floors(&p), vec![ratio(40, 7), int(4)]);
        assert_eq!(amounts(&solve_two_step(&p)), vec![int(6), int(4)]);
    }

    #[test]
    fn two_step_single_issue_is_prop() {
        let p = single_issue(10, &[8, 6, 3]);
        assert_eq!(solve_two_step(&p), solve_prop_single(&p).unwrap());
    }

    #[test]
    fn two_step_isolated_pairs() {
        let p = Problem::from_parts(
            &[("E1", int(3)), ("E2", int(5))],
            &[("A", int(5), &["E1"]), ("B", int(7), &["E2"])],
        )
        .unwrap();
        assert_eq!(amounts(&solve_two_step(&p)), vec![int(3), int(5)]);
    }

    #[test]
    fn cea_on_pb() {
        // δ1 = min(10/2, 4/1, 8, 6) = 4; then E2 is empty and C1 alone takes the remaining 2 of E1.
        assert_eq!(amounts(&solve_cea_mac(&pb())), vec![int(6), int(4)]);
    }

    #[test]
    fn cea_single_issue() {
        assert_eq!(amounts(&solve_cea_mac(&single_issue(10, &[7, 7]))), vec![int(5), int(5)]);
        assert_eq!(amounts(&solve_cea_mac(&single_issue(10, &[8, 6]))), vec![int(5), int(5)]);
        assert_eq!(
            amounts(&solve_cea_mac(&single_issue(10, &[4, 4, 6]))),
            vec![ratio(10, 3), ratio(10, 3), ratio(10, 3)]
        );
        assert_eq!(amounts(&solve_cea_mac(&single_issue(10, &[2, 9]))), vec![int(2), int(8)]);
    }

    #[test]
    fn cea_single_claimant() {
        let p =
            Problem::from_parts(&[("E1", int(4)), ("E2", int(3))], &[("A", int(9), &["E1", "E2"])]).unwrap();
        assert_eq!(amounts(&solve_cea_mac(&p)), vec![int(3)]);
    }

    #[test]
    fn rule_names_round_trip() {
        for name in RuleId::ALL_NAMES {
            assert_eq!(name.parse::<RuleId>().unwrap().label(), name);
        }
        assert!("talmud".parse::<RuleId>().is_err());
        assert_eq!(RuleId::Cea.to_string(), "cea (reconstructed)");
    }

    #[test]
    fn explicit_order_moves_into_problem() {
        let rule = RuleId::Priority { order: Some(vec!["C2".into(), "C1".into()]) };
        let (plain, ranked) = rule.canonical_input(&pb()).unwrap();
        assert_eq!(plain, RuleId::Priority { order: None });
        assert_eq!(ranked.claimants()[0].id, "C2");
        let x = plain.allocate(&ranked).unwrap();
        assert_eq!(x.get("C2"), Some(&int(4)));
        assert_eq!(rule.allocate(&pb()).unwrap().get("C1"), Some(&int(6)));
    }
}
