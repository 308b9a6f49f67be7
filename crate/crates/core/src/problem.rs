//! The allocation problem model: issues with capacities, claimants holding a
//! single claim over a set of issues, and allocations of awards.
//!
//! A [`Problem`] built through [`Problem::from_doc`] or [`Problem::from_parts`]
//! is *structurally* valid (unique ids, known and non-empty issue sets,
//! non-negative amounts). [`validate_problem`] additionally requires every
//! issue to be strictly over-claimed; [`normalize`] removes the issues that
//! are not.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{format_rational, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub id: String,
    pub amount: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Claimant {
    pub id: String,
    pub claim: Rational,
    /// Indices into [`Problem::issues`], strictly increasing.
    pub issues: Vec<usize>,
}

/// A structurally valid multi-issue allocation problem with crossed claims.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    issues: Vec<Issue>,
    claimants: Vec<Claimant>,
}

/// JSON shape of a problem. Amounts are exact rational strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    pub issues: Vec<IssueDoc>,
    pub claimants: Vec<ClaimantDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssueDoc {
    pub id: String,
    pub amount: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimantDoc {
    pub id: String,
    pub claim: String,
    pub issues: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    BadRational,
    DuplicateIssue,
    DuplicateClaimant,
    UnknownIssue,
    DuplicateIssueRef,
    EmptyIssueSet,
    NegativeAmount,
    NonBindingIssue,
}

impl ViolationCode {
    pub fn severity(self) -> Severity {
        match self {
            ViolationCode::NonBindingIssue => Severity::Warning,
            _ => Severity::Fatal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Fatal,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub severity: Severity,
    /// Id of the offending issue or claimant.
    pub subject: String,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, subject: &str, message: String) -> Self {
        Violation { code, severity: code.severity(), subject: subject.to_owned(), message }
    }
}

/// Every problem found in a raw document, fatal errors and warnings alike.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_fatal(&self) -> bool {
        self.violations.iter().any(|v| v.severity == Severity::Fatal)
    }

    pub fn codes(&self) -> Vec<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }

    fn push(&mut self, code: ViolationCode, subject: &str, message: String) {
        self.violations.push(Violation::new(code, subject, message));
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, v) in self.violations.iter().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            write!(f, "{:?} [{}]: {}", v.code, v.subject, v.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown claimant {0:?}")]
    UnknownClaimant(String),
    #[error("allocation does not cover exactly the problem's claimants")]
    DomainMismatch,
    #[error("allocation is infeasible")]
    Infeasible,
    #[error("order is not a permutation of the claimants")]
    NotAPermutation,
}

/// Claimant as supplied to [`Problem::from_parts`], before id resolution.
pub type ClaimantParts<'a> = (&'a str, Rational, &'a [&'a str]);

impl Problem {
    /// Structural validation of a document. Non-binding issues are accepted.
    pub fn from_doc(doc: &ProblemDoc) -> Result<Problem, ValidationReport> {
        let mut report = ValidationReport::default();
        let amount = |subject: &str, raw: &str, report: &mut ValidationReport| match parse_rational(raw) {
            Ok(q) => q,
            Err(e) => {
                report.push(ViolationCode::BadRational, subject, e.to_string());
                Rational::zero()
            }
        };
        let issues: Vec<(String, Rational)> =
            doc.issues.iter().map(|i| (i.id.clone(), amount(&i.id, &i.amount, &mut report))).collect();
        let claimants: Vec<(String, Rational, Vec<String>)> = doc
            .claimants
            .iter()
            .map(|c| (c.id.clone(), amount(&c.id, &c.claim, &mut report), c.issues.clone()))
            .collect();
        Self::assemble(issues, claimants, report)
    }

    /// Programmatic constructor with the same structural checks as [`Problem::from_doc`].
    pub fn from_parts(
        issues: &[(&str, Rational)],
        claimants: &[ClaimantParts<'_>],
    ) -> Result<Problem, ValidationReport> {
        Self::assemble(
            issues.iter().map(|(id, e)| (id.to_string(), e.clone())).collect(),
            claimants
                .iter()
                .map(|(id, c, set)| (id.to_string(), c.clone(), set.iter().map(|s| s.to_string()).collect()))
                .collect(),
            ValidationReport::default(),
        )
    }

    fn assemble(
        issues: Vec<(String, Rational)>,
        claimants: Vec<(String, Rational, Vec<String>)>,
        mut report: ValidationReport,
    ) -> Result<Problem, ValidationReport> {
        let mut index = HashMap::new();
        for (n, (id, amount)) in issues.iter().enumerate() {
            if index.insert(id.as_str(), n).is_some() {
                report.push(ViolationCode::DuplicateIssue, id, format!("issue id {id:?} declared twice"));
            }
            if amount.is_negative() {
                report.push(ViolationCode::NegativeAmount, id, "negative issue amount".into());
            }
        }
        let mut seen = HashSet::new();
        let mut built = Vec::with_capacity(claimants.len());
        for (id, claim, set) in &claimants {
            if !seen.insert(id.as_str()) {
                report.push(
                    ViolationCode::DuplicateClaimant,
                    id,
                    format!("claimant id {id:?} declared twice"),
                );
            }
            if claim.is_negative() {
                report.push(ViolationCode::NegativeAmount, id, "negative claim".into());
            }
            if set.is_empty() {
                report.push(ViolationCode::EmptyIssueSet, id, "claimant claims no issue".into());
            }
            let mut resolved = BTreeSet::new();
            for issue in set {
                match index.get(issue.as_str()) {
                    None => report.push(
                        ViolationCode::UnknownIssue,
                        id,
                        format!("claims undeclared issue {issue:?}"),
                    ),
                    Some(&n) => {
                        if !resolved.insert(n) {
                            report.push(
                                ViolationCode::DuplicateIssueRef,
                                id,
                                format!("lists issue {issue:?} more than once"),
                            );
                        }
                    }
                }
            }
            built.push(Claimant {
                id: id.clone(),
                claim: claim.clone(),
                issues: resolved.into_iter().collect(),
            });
        }
        if report.is_fatal() {
            return Err(report);
        }
        let issues = issues.into_iter().map(|(id, amount)| Issue { id, amount }).collect();
        Ok(Problem { issues, claimants: built })
    }

    /// Builds a problem from already-resolved parts. Callers uphold the structural invariants.
    pub(crate) fn from_resolved(issues: Vec<Issue>, claimants: Vec<Claimant>) -> Problem {
        debug_assert!(claimants.iter().all(|c| c.issues.windows(2).all(|w| w[0] < w[1])));
        debug_assert!(claimants.iter().all(|c| c.issues.iter().all(|&i| i < issues.len())));
        Problem { issues, claimants }
    }

    pub fn issues(&self) -> &[Issue] {
        &self.issues
    }

    pub fn claimants(&self) -> &[Claimant] {
        &self.claimants
    }

    pub fn issue_index(&self, id: &str) -> Option<usize> {
        self.issues.iter().position(|i| i.id == id)
    }

    pub fn claimant_index(&self, id: &str) -> Option<usize> {
        self.claimants.iter().position(|c| c.id == id)
    }

    pub fn claims(&self) -> Vec<Rational> {
        self.claimants.iter().map(|c| c.claim.clone()).collect()
    }

    pub fn capacities(&self) -> Vec<Rational> {
        self.issues.iter().map(|i| i.amount.clone()).collect()
    }

    pub fn issue_sets(&self) -> Vec<Vec<usize>> {
        self.claimants.iter().map(|c| c.issues.clone()).collect()
    }

    /// Claimant indices whose issue set contains `issue`, in declaration order.
    pub fn claimants_on(&self, issue: usize) -> impl Iterator<Item = usize> + '_ {
        self.claimants
            .iter()
            .enumerate()
            .filter(move |(_, c)| c.issues.binary_search(&issue).is_ok())
            .map(|(j, _)| j)
    }

    pub fn total_claim_on(&self, issue: usize) -> Rational {
        self.claimants_on(issue).fold(Rational::zero(), |acc, j| acc + &self.claimants[j].claim)
    }

    /// Issues whose total claim does not exceed their capacity.
    pub fn non_binding_issues(&self) -> Vec<usize> {
        (0..self.issues.len()).filter(|&i| self.total_claim_on(i) <= self.issues[i].amount).collect()
    }

    /// Copy of the problem with claimants listed in `order`.
    pub fn reordered(&self, order: &[String]) -> Result<Problem, ModelError> {
        if order.len() != self.claimants.len() {
            return Err(ModelError::NotAPermutation);
        }
        let mut taken = vec![false; self.claimants.len()];
        let mut claimants = Vec::with_capacity(order.len());
        for id in order {
            let j = self.claimant_index(id).ok_or(ModelError::NotAPermutation)?;
            if std::mem::replace(&mut taken[j], true) {
                return Err(ModelError::NotAPermutation);
            }
            claimants.push(self.claimants[j].clone());
        }
        Ok(Problem { issues: self.issues.clone(), claimants })
    }

    pub fn to_doc(&self) -> ProblemDoc {
        ProblemDoc {
            issues: self
                .issues
                .iter()
                .map(|i| IssueDoc { id: i.id.clone(), amount: format_rational(&i.amount) })
                .collect(),
            claimants: self
                .claimants
                .iter()
                .map(|c| ClaimantDoc {
                    id: c.id.clone(),
                    claim: format_rational(&c.claim),
                    issues: c.issues.iter().map(|&i| self.issues[i].id.clone()).collect(),
                })
                .collect(),
        }
    }
}

/// Full validation: structural checks plus strict over-claiming of every issue.
///
/// Returns the problem only when the report would be empty; non-binding issues
/// appear as [`Severity::Warning`] entries and can be removed with [`normalize`].
pub fn validate_problem(doc: &ProblemDoc) -> Result<Problem, ValidationReport> {
    let problem = Problem::from_doc(doc)?;
    check_binding(problem)
}

/// Over-claiming check for an already structurally valid problem.
pub fn check_binding(problem: Problem) -> Result<Problem, ValidationReport> {
    let mut report = ValidationReport::default();
    for i in problem.non_binding_issues() {
        let issue = &problem.issues[i];
        report.push(
            ViolationCode::NonBindingIssue,
            &issue.id,
            format!(
                "total claim {} does not exceed amount {}",
                format_rational(&problem.total_claim_on(i)),
                format_rational(&issue.amount)
            ),
        );
    }
    if report.violations.is_empty() {
        Ok(problem)
    } else {
        Err(report)
    }
}

/// Result of [`normalize`]: the binding core plus what was stripped from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub problem: Problem,
    pub removed_issues: Vec<String>,
    /// Claimants left without any constraining issue; each is owed its full claim.
    pub unconstrained: Vec<(String, Rational)>,
    original_order: Vec<String>,
}

impl Normalized {
    /// True when no constraint remains: paying every claim in full is feasible.
    pub fn is_trivial(&self) -> bool {
        self.problem.issues.is_empty()
    }

    /// Extends an allocation of the normalized problem to every original claimant.
    pub fn complete(&self, inner: &Allocation) -> Allocation {
        let awards = self
            .original_order
            .iter()
            .map(|id| {
                let amount = inner
                    .get(id)
                    .or_else(|| self.unconstrained.iter().find(|(u, _)| u == id).map(|(_, c)| c))
                    .cloned()
                    .unwrap_or_else(Rational::zero);
                (id.clone(), amount)
            })
            .collect();
        Allocation { awards }
    }
}

/// Drops every non-binding issue and the claimants it leaves unconstrained.
pub fn normalize(problem: &Problem) -> Normalized {
    let dropped: BTreeSet<usize> = problem.non_binding_issues().into_iter().collect();
    let mut remap = vec![None; problem.issues.len()];
    let mut issues = Vec::new();
    for (n, issue) in problem.issues.iter().enumerate() {
        if !dropped.contains(&n) {
            remap[n] = Some(issues.len());
            issues.push(issue.clone());
        }
    }
    let mut claimants = Vec::new();
    let mut unconstrained = Vec::new();
    for c in &problem.claimants {
        let kept: Vec<usize> = c.issues.iter().filter_map(|&i| remap[i]).collect();
        if kept.is_empty() {
            unconstrained.push((c.id.clone(), c.claim.clone()));
        } else {
            claimants.push(Claimant { id: c.id.clone(), claim: c.claim.clone(), issues: kept });
        }
    }
    Normalized {
        problem: Problem { issues, claimants },
        removed_issues: dropped.iter().map(|&i| problem.issues[i].id.clone()).collect(),
        unconstrained,
        original_order: problem.claimants.iter().map(|c| c.id.clone()).collect(),
    }
}

/// Awards per claimant, in the problem's declaration order.
///
/// Serializes as a JSON object from claimant id to exact rational string,
/// preserving order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation {
    #[serde(with = "crate::rational::ordered_map")]
    awards: Vec<(String, Rational)>,
}

impl Allocation {
    /// Pairs `amounts` with the problem's claimants. Panics on a length mismatch.
    pub fn new(problem: &Problem, amounts: Vec<Rational>) -> Allocation {
        assert_eq!(amounts.len(), problem.claimants.len(), "one amount per claimant");
        Allocation { awards: problem.claimants.iter().map(|c| c.id.clone()).zip(amounts).collect() }
    }

    pub fn zeros(problem: &Problem) -> Allocation {
        Self::new(problem, vec![Rational::zero(); problem.claimants.len()])
    }

    pub fn from_pairs(awards: Vec<(String, Rational)>) -> Allocation {
        Allocation { awards }
    }

    pub fn get(&self, id: &str) -> Option<&Rational> {
        self.awards.iter().find(|(j, _)| j == id).map(|(_, x)| x)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Rational)> {
        self.awards.iter().map(|(j, x)| (j.as_str(), x))
    }

    pub fn len(&self) -> usize {
        self.awards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.awards.is_empty()
    }

    /// Amounts in the problem's claimant order, or an error if the domains differ.
    pub fn amounts_for(&self, problem: &Problem) -> Result<Vec<Rational>, ModelError> {
        if self.awards.len() != problem.claimants.len() {
            return Err(ModelError::DomainMismatch);
        }
        problem.claimants.iter().map(|c| self.get(&c.id).cloned().ok_or(ModelError::DomainMismatch)).collect()
    }

    pub fn total(&self) -> Rational {
        self.awards.iter().fold(Rational::zero(), |acc, (_, x)| acc + x)
    }
}

/// Residual capacity of every issue under `amounts` (may be negative when infeasible).
pub(crate) fn slack(problem: &Problem, amounts: &[Rational]) -> Vec<Rational> {
    let mut left = problem.capacities();
    for (c, x) in problem.claimants.iter().zip(amounts) {
        for &i in &c.issues {
            left[i] -= x;
        }
    }
    left
}

pub fn is_feasible(problem: &Problem, x: &Allocation) -> Result<bool, ModelError> {
    let amounts = x.amounts_for(problem)?;
    Ok(feasible_amounts(problem, &amounts))
}

pub(crate) fn feasible_amounts(problem: &Problem, amounts: &[Rational]) -> bool {
    let within_claims = problem.claimants.iter().zip(amounts).all(|(c, x)| !x.is_negative() && *x <= c.claim);
    within_claims && slack(problem, amounts).iter().all(|s| !s.is_negative())
}

/// First claimant (declaration order) that could receive more without
/// breaking feasibility, if any.
pub fn improvable_claimant(problem: &Problem, x: &Allocation) -> Result<Option<usize>, ModelError> {
    let amounts = x.amounts_for(problem)?;
    if !feasible_amounts(problem, &amounts) {
        return Err(ModelError::Infeasible);
    }
    let left = slack(problem, &amounts);
    Ok(problem
        .claimants
        .iter()
        .zip(&amounts)
        .position(|(c, x)| *x < c.claim && c.issues.iter().all(|&i| left[i].is_positive())))
}

/// Pareto efficiency of a feasible allocation: every claimant is either paid
/// in full or touches an exhausted issue.
pub fn is_pareto_efficient(problem: &Problem, x: &Allocation) -> Result<bool, ModelError> {
    Ok(improvable_claimant(problem, x)?.is_none())
}

/// `(homologous, equal)` for two claimants of the same problem.
pub fn are_equal(problem: &Problem, j: &str, k: &str) -> Result<(bool, bool), ModelError> {
    let a = problem.claimant_index(j).ok_or_else(|| ModelError::UnknownClaimant(j.to_owned()))?;
    let b = problem.claimant_index(k).ok_or_else(|| ModelError::UnknownClaimant(k.to_owned()))?;
    let (a, b) = (&problem.claimants[a], &problem.claimants[b]);
    let homologous = a.issues == b.issues;
    Ok((homologous, homologous && a.claim == b.claim))
}
