//! Problem transformations and executable axiom checkers.
//!
//! The six axioms are universally quantified; each checker evaluates one rule
//! on one problem against an explicit family of transformations (subsets for
//! consistency, splits and merges for the manipulation axioms) and reports
//! the first violation as a [`Witness`] that can be replayed on its own.
//!
//! An infeasible rule output is a broken rule contract, reported as
//! [`CheckError::Contract`], never as an axiom failure.

use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gen::{self, GenParams, SpecKind, TransformSpec};
use crate::problem::{
    feasible_amounts, improvable_claimant, Allocation, Claimant, Issue, ModelError, Problem, ProblemDoc,
};
use crate::rational::{self, Rational};
use crate::rules::{Rule, RuleError, RuleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axiom {
    /// Pareto efficiency.
    Peff,
    /// Equal treatment of equals.
    Ete,
    /// Guaranteed minimum award.
    Gma,
    /// Consistency.
    Cons,
    /// Non-manipulability by splitting.
    Nms,
    /// Non-manipulability by restricted merging.
    Nmrm,
}

impl Axiom {
    pub const ALL: [Axiom; 6] = [Axiom::Peff, Axiom::Ete, Axiom::Gma, Axiom::Cons, Axiom::Nms, Axiom::Nmrm];

    /// The five axioms that single out CPA.
    pub const CHARACTERIZING: [Axiom; 5] = [Axiom::Peff, Axiom::Ete, Axiom::Gma, Axiom::Cons, Axiom::Nms];

    pub fn label(self) -> &'static str {
        match self {
            Axiom::Peff => "peff",
            Axiom::Ete => "ete",
            Axiom::Gma => "gma",
            Axiom::Cons => "cons",
            Axiom::Nms => "nms",
            Axiom::Nmrm => "nmrm",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Axiom {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axiom::ALL.into_iter().find(|a| a.label() == s).ok_or_else(|| format!("unknown axiom {s:?}"))
    }
}

/// The characterizing axiom each comparison rule is built to violate.
pub fn designed_violation(rule: &RuleId) -> Option<Axiom> {
    match rule {
        RuleId::Null => Some(Axiom::Peff),
        RuleId::Priority { .. } => Some(Axiom::Ete),
        RuleId::TwoPhase => Some(Axiom::Gma),
        RuleId::TwoStep => Some(Axiom::Cons),
        RuleId::Cea => Some(Axiom::Nms),
        RuleId::Cpa | RuleId::Prop => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSpec {
    pub keep: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub target: String,
    #[serde(with = "parts_serde")]
    pub parts: Vec<(String, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeSpec {
    pub sources: Vec<String>,
    pub merged_id: String,
}

mod parts_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Part {
        id: String,
        #[serde(with = "rational::as_string")]
        claim: Rational,
    }

    pub fn serialize<S: Serializer>(parts: &[(String, Rational)], s: S) -> Result<S::Ok, S::Error> {
        let parts: Vec<Part> =
            parts.iter().map(|(id, claim)| Part { id: id.clone(), claim: claim.clone() }).collect();
        parts.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(String, Rational)>, D::Error> {
        Ok(Vec::<Part>::deserialize(d)?.into_iter().map(|p| (p.id, p.claim)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("unknown claimant {0:?}")]
    UnknownClaimant(String),
    #[error("claimant {0:?} listed twice")]
    Repeated(String),
    #[error("the kept set must be non-empty")]
    EmptyKeep,
    #[error("departing awards exceed the amount of issue {0:?}")]
    Overdrawn(String),
    #[error("split parts must have positive claims")]
    NonPositivePart,
    #[error("split parts sum to {got}, expected {expected}")]
    PartSum { expected: String, got: String },
    #[error("id {0:?} already belongs to another claimant")]
    IdCollision(String),
    #[error("a merge needs at least two sources")]
    TooFewSources,
    #[error("claimants {0:?} and {1:?} are not homologous")]
    NotHomologous(String, String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn index_of(problem: &Problem, id: &str) -> Result<usize, TransformError> {
    problem.claimant_index(id).ok_or_else(|| TransformError::UnknownClaimant(id.to_owned()))
}

fn distinct_indices(problem: &Problem, ids: &[String]) -> Result<Vec<usize>, TransformError> {
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let j = index_of(problem, id)?;
        if out.contains(&j) {
            return Err(TransformError::Repeated(id.clone()));
        }
        out.push(j);
    }
    Ok(out)
}

/// The problem left to `spec.keep` after everyone else departs with their awards in `x`.
///
/// Only issues some kept claimant draws on remain, each reduced by the awards
/// of departing claimants on it. The result is not normalized.
pub fn reduce_problem(
    problem: &Problem,
    x: &Allocation,
    spec: &SubsetSpec,
) -> Result<Problem, TransformError> {
    if spec.keep.is_empty() {
        return Err(TransformError::EmptyKeep);
    }
    let kept = distinct_indices(problem, &spec.keep)?;
    let amounts = x.amounts_for(problem)?;
    let stays = |j: usize| kept.contains(&j);
    let mut amount = problem.capacities();
    for (j, c) in problem.claimants().iter().enumerate() {
        if !stays(j) {
            for &i in &c.issues {
                amount[i] -= &amounts[j];
            }
        }
    }
    let mut remap = vec![None; amount.len()];
    let mut issues = Vec::new();
    for (i, issue) in problem.issues().iter().enumerate() {
        let claimed = kept.iter().any(|&j| problem.claimants()[j].issues.contains(&i));
        if claimed {
            if amount[i].is_negative() {
                return Err(TransformError::Overdrawn(issue.id.clone()));
            }
            remap[i] = Some(issues.len());
            issues.push(Issue { id: issue.id.clone(), amount: amount[i].clone() });
        }
    }
    let claimants = problem
        .claimants()
        .iter()
        .enumerate()
        .filter(|(j, _)| stays(*j))
        .map(|(_, c)| Claimant {
            id: c.id.clone(),
            claim: c.claim.clone(),
            issues: c.issues.iter().map(|&i| remap[i].expect("kept issue")).collect(),
        })
        .collect();
    Ok(Problem::from_resolved(issues, claimants))
}

/// Replaces the target by its parts, placed where the target stood and
/// ordered by id; each part inherits the target's issues.
pub fn split_problem(problem: &Problem, spec: &SplitSpec) -> Result<Problem, TransformError> {
    let t = index_of(problem, &spec.target)?;
    let target = &problem.claimants()[t];
    if spec.parts.is_empty() || spec.parts.iter().any(|(_, c)| !c.is_positive()) {
        return Err(TransformError::NonPositivePart);
    }
    let sum = spec.parts.iter().fold(Rational::zero(), |a, (_, c)| a + c);
    if sum != target.claim {
        return Err(TransformError::PartSum {
            expected: rational::format_rational(&target.claim),
            got: rational::format_rational(&sum),
        });
    }
    let mut parts = spec.parts.clone();
    parts.sort_by(|a, b| a.0.cmp(&b.0));
    for (n, (id, _)) in parts.iter().enumerate() {
        if parts[..n].iter().any(|(other, _)| other == id) {
            return Err(TransformError::Repeated(id.clone()));
        }
        if problem.claimant_index(id).is_some_and(|k| k != t) {
            return Err(TransformError::IdCollision(id.clone()));
        }
    }
    let mut claimants = Vec::with_capacity(problem.claimants().len() + parts.len() - 1);
    for (j, c) in problem.claimants().iter().enumerate() {
        if j == t {
            claimants.extend(parts.iter().map(|(id, claim)| Claimant {
                id: id.clone(),
                claim: claim.clone(),
                issues: target.issues.clone(),
            }));
        } else {
            claimants.push(c.clone());
        }
    }
    Ok(Problem::from_resolved(problem.issues().to_vec(), claimants))
}

/// Replaces homologous sources by one claimant holding their summed claim,
/// placed where the first source stood.
pub fn merge_problem(problem: &Problem, spec: &MergeSpec) -> Result<Problem, TransformError> {
    if spec.sources.len() < 2 {
        return Err(TransformError::TooFewSources);
    }
    let mut sources = distinct_indices(problem, &spec.sources)?;
    sources.sort_unstable();
    let first = &problem.claimants()[sources[0]];
    for &j in &sources[1..] {
        let other = &problem.claimants()[j];
        if other.issues != first.issues {
            return Err(TransformError::NotHomologous(first.id.clone(), other.id.clone()));
        }
    }
    if problem.claimant_index(&spec.merged_id).is_some_and(|k| !sources.contains(&k)) {
        return Err(TransformError::IdCollision(spec.merged_id.clone()));
    }
    let claim = sources.iter().fold(Rational::zero(), |a, &j| a + &problem.claimants()[j].claim);
    let mut claimants = Vec::new();
    for (j, c) in problem.claimants().iter().enumerate() {
        if j == sources[0] {
            claimants.push(Claimant {
                id: spec.merged_id.clone(),
                claim: claim.clone(),
                issues: first.issues.clone(),
            });
        } else if !sources.contains(&j) {
            claimants.push(c.clone());
        }
    }
    Ok(Problem::from_resolved(problem.issues().to_vec(), claimants))
}

/// The single-issue problem of issue `i`: its amount and the claimants on it.
pub fn single_issue_problem(problem: &Problem, i: usize) -> Problem {
    let issue = problem.issues()[i].clone();
    let claimants = problem
        .claimants_on(i)
        .map(|j| {
            let c = &problem.claimants()[j];
            Claimant { id: c.id.clone(), claim: c.claim.clone(), issues: vec![0] }
        })
        .collect();
    Problem::from_resolved(vec![issue], claimants)
}

/// The transformed problem a witness compares against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transformation {
    None,
    SingleIssue { issue: String },
    Subset(SubsetSpec),
    Split(SplitSpec),
    Merge(MergeSpec),
}

/// A concrete, replayable axiom violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub axiom: Axiom,
    /// Rule label as accepted by [`RuleId`]'s parser.
    pub rule: String,
    pub problem: ProblemDoc,
    pub transformation: Transformation,
    pub original: Allocation,
    /// Allocation of the transformed problem, when the axiom involves one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transformed: Option<Allocation>,
    /// The claimant (or claimant family, named by its original id) that is treated wrongly.
    pub claimant: String,
    #[serde(with = "rational::as_string")]
    pub expected: Rational,
    #[serde(with = "rational::as_string")]
    pub actual: Rational,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomVerdict {
    pub axiom: Axiom,
    pub holds: bool,
    /// Number of individual comparisons performed.
    pub checked: usize,
    /// Transformed problems on which the rule ran although some issue was not over-claimed.
    pub non_binding_instances: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("rule {rule} returned an infeasible allocation")]
    Contract { rule: String, problem: ProblemDoc },
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("witness did not reproduce: {0}")]
    NotReproduced(String),
}

struct Ctx<'a, R: Rule + ?Sized> {
    rule: &'a R,
    problem: &'a Problem,
    axiom: Axiom,
    checked: usize,
    non_binding: usize,
}

impl<'a, R: Rule + ?Sized> Ctx<'a, R> {
    fn new(rule: &'a R, problem: &'a Problem, axiom: Axiom) -> Self {
        Ctx { rule, problem, axiom, checked: 0, non_binding: 0 }
    }

    fn run(&self, problem: &Problem) -> Result<Allocation, CheckError> {
        let x = self.rule.allocate(problem)?;
        let amounts = x.amounts_for(problem).map_err(RuleError::from)?;
        if !feasible_amounts(problem, &amounts) {
            return Err(CheckError::Contract { rule: self.rule.name(), problem: problem.to_doc() });
        }
        Ok(x)
    }

    fn run_transformed(&mut self, problem: &Problem) -> Result<Allocation, CheckError> {
        if !problem.non_binding_issues().is_empty() {
            self.non_binding += 1;
        }
        self.run(problem)
    }

    fn holds(self) -> AxiomVerdict {
        AxiomVerdict {
            axiom: self.axiom,
            holds: true,
            checked: self.checked,
            non_binding_instances: self.non_binding,
            witness: None,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn fails(
        self,
        transformation: Transformation,
        original: Allocation,
        transformed: Option<Allocation>,
        claimant: &str,
        expected: Rational,
        actual: Rational,
        detail: String,
    ) -> AxiomVerdict {
        AxiomVerdict {
            axiom: self.axiom,
            holds: false,
            checked: self.checked,
            non_binding_instances: self.non_binding,
            witness: Some(Witness {
                axiom: self.axiom,
                rule: self.rule.name(),
                problem: self.problem.to_doc(),
                transformation,
                original,
                transformed,
                claimant: claimant.to_owned(),
                expected,
                actual,
                detail,
            }),
        }
    }
}

fn award(x: &Allocation, id: &str) -> Rational {
    x.get(id).cloned().unwrap_or_else(Rational::zero)
}

pub fn check_peff<R: Rule + ?Sized>(rule: &R, problem: &Problem) -> Result<AxiomVerdict, CheckError> {
    let mut ctx = Ctx::new(rule, problem, Axiom::Peff);
    let x = ctx.run(problem)?;
    ctx.checked = 1;
    match improvable_claimant(problem, &x).map_err(RuleError::from)? {
        None => Ok(ctx.holds()),
        Some(j) => {
            let c = &problem.claimants()[j];
            let actual = award(&x, &c.id);
            Ok(ctx.fails(
                Transformation::None,
                x,
                None,
                &c.id,
                c.claim.clone(),
                actual,
                "claimant is below its claim while every issue it draws on has capacity left".into(),
            ))
        }
    }
}

pub fn check_ete<R: Rule + ?Sized>(rule: &R, problem: &Problem) -> Result<AxiomVerdict, CheckError> {
    let mut ctx = Ctx::new(rule, problem, Axiom::Ete);
    let x = ctx.run(problem)?;
    let claimants = problem.claimants();
    for (j, a) in claimants.iter().enumerate() {
        for b in &claimants[j + 1..] {
            if a.issues != b.issues || a.claim != b.claim {
                continue;
            }
            ctx.checked += 1;
            let (xa, xb) = (award(&x, &a.id), award(&x, &b.id));
            if xa != xb {
                let detail = format!("equal claimants {} and {} receive different awards", a.id, b.id);
                return Ok(ctx.fails(Transformation::None, x, None, &a.id, xb, xa, detail));
            }
        }
    }
    Ok(ctx.holds())
}

pub fn check_gma<R: Rule + ?Sized>(rule: &R, problem: &Problem) -> Result<AxiomVerdict, CheckError> {
    let mut ctx = Ctx::new(rule, problem, Axiom::Gma);
    let x = ctx.run(problem)?;
    let singles = (0..problem.issues().len())
        .map(|i| {
            let sub = single_issue_problem(problem, i);
            ctx.run_transformed(&sub)
        })
        .collect::<Result<Vec<_>, _>>()?;
    for c in problem.claimants() {
        ctx.checked += 1;
        let (i, floor) = c
            .issues
            .iter()
            .map(|&i| (i, award(&singles[i], &c.id)))
            .min_by(|a, b| a.1.cmp(&b.1))
            .expect("issue sets are non-empty");
        let actual = award(&x, &c.id);
        if actual < floor {
            let issue = problem.issues()[i].id.clone();
            let detail = format!("award is below the single-issue award on {issue}");
            return Ok(ctx.fails(
                Transformation::SingleIssue { issue },
                x,
                Some(singles[i].clone()),
                &c.id,
                floor,
                actual,
                detail,
            ));
        }
    }
    Ok(ctx.holds())
}

pub fn check_cons<R: Rule + ?Sized>(
    rule: &R,
    problem: &Problem,
    specs: &[SubsetSpec],
) -> Result<AxiomVerdict, CheckError> {
    let mut ctx = Ctx::new(rule, problem, Axiom::Cons);
    let x = ctx.run(problem)?;
    for spec in specs {
        let reduced = reduce_problem(problem, &x, spec)?;
        let y = ctx.run_transformed(&reduced)?;
        for c in reduced.claimants() {
            ctx.checked += 1;
            let (before, after) = (award(&x, &c.id), award(&y, &c.id));
            if before != after {
                return Ok(ctx.fails(
                    Transformation::Subset(spec.clone()),
                    x,
                    Some(y),
                    &c.id,
                    before,
                    after,
                    "award changes in the reduced problem".into(),
                ));
            }
        }
    }
    Ok(ctx.holds())
}

pub fn check_nms<R: Rule + ?Sized>(
    rule: &R,
    problem: &Problem,
    specs: &[SplitSpec],
) -> Result<AxiomVerdict, CheckError> {
    let mut ctx = Ctx::new(rule, problem, Axiom::Nms);
    let x = ctx.run(problem)?;
    for spec in specs {
        let split = split_problem(problem, spec)?;
        let y = ctx.run_transformed(&split)?;
        ctx.checked += 1;
        let family = spec.parts.iter().fold(Rational::zero(), |a, (id, _)| a + award(&y, id));
        let before = award(&x, &spec.target);
        if family != before {
            return Ok(ctx.fails(
                Transformation::Split(spec.clone()),
                x,
                Some(y),
                &spec.target,
                before,
                family,
                "split parts together receive a different amount than the original claimant".into(),
            ));
        }
    }
    Ok(ctx.holds())
}

pub fn check_nmrm<R: Rule + ?Sized>(
    rule: &R,
    problem: &Problem,
    specs: &[MergeSpec],
) -> Result<AxiomVerdict, CheckError> {
    let mut ctx = Ctx::new(rule, problem, Axiom::Nmrm);
    let x = ctx.run(problem)?;
    for spec in specs {
        let merged = merge_problem(problem, spec)?;
        let y = ctx.run_transformed(&merged)?;
        ctx.checked += 1;
        let family = spec.sources.iter().fold(Rational::zero(), |a, id| a + award(&x, id));
        let after = award(&y, &spec.merged_id);
        if family != after {
            return Ok(ctx.fails(
                Transformation::Merge(spec.clone()),
                x,
                Some(y),
                &spec.merged_id,
                family,
                after,
                "merged claimant receives a different amount than its sources together".into(),
            ));
        }
    }
    Ok(ctx.holds())
}

/// How many transformation specs [`check_axiom`] samples by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecBudget {
    /// Random smaller subsets on top of all `|N| - 1` subsets.
    pub extra_subsets: usize,
    pub splits: usize,
    pub merges: usize,
}

impl Default for SpecBudget {
    fn default() -> Self {
        SpecBudget { extra_subsets: 3, splits: 5, merges: 5 }
    }
}

fn only<T>(specs: Vec<TransformSpec>, pick: impl Fn(TransformSpec) -> Option<T>) -> Vec<T> {
    specs.into_iter().filter_map(pick).collect()
}

/// Runs one checker with its default seeded specs.
pub fn check_axiom(
    rule: &RuleId,
    axiom: Axiom,
    problem: &Problem,
    budget: SpecBudget,
    seed: u64,
) -> Result<AxiomVerdict, CheckError> {
    let (rule, problem) = rule.canonical_input(problem)?;
    let n = problem.claimants().len();
    match axiom {
        Axiom::Peff => check_peff(&rule, &problem),
        Axiom::Ete => check_ete(&rule, &problem),
        Axiom::Gma => check_gma(&rule, &problem),
        Axiom::Cons => {
            let specs = gen::gen_specs(&problem, SpecKind::Subset, n + budget.extra_subsets, seed);
            let specs = only(specs, |s| match s {
                TransformSpec::Subset(s) => Some(s),
                _ => None,
            });
            check_cons(&rule, &problem, &specs)
        }
        Axiom::Nms => {
            let specs = gen::gen_specs(&problem, SpecKind::Split, budget.splits, seed);
            let specs = only(specs, |s| match s {
                TransformSpec::Split(s) => Some(s),
                _ => None,
            });
            check_nms(&rule, &problem, &specs)
        }
        Axiom::Nmrm => {
            let specs = gen::gen_specs(&problem, SpecKind::Merge, budget.merges, seed);
            let specs = only(specs, |s| match s {
                TransformSpec::Merge(s) => Some(s),
                _ => None,
            });
            check_nmrm(&rule, &problem, &specs)
        }
    }
}

impl Witness {
    /// Re-runs the recorded rule, looked up by its label.
    pub fn replay(&self) -> Result<(), CheckError> {
        let rule: RuleId = self.rule.parse()?;
        self.reverify(&rule)
    }

    /// Re-runs the single comparison this witness records, from its own data.
    pub fn reverify<R: Rule + ?Sized>(&self, rule: &R) -> Result<(), CheckError> {
        let problem = Problem::from_doc(&self.problem)
            .map_err(|r| CheckError::NotReproduced(format!("witness problem is malformed: {r}")))?;
        let verdict = match &self.transformation {
            Transformation::None => match self.axiom {
                Axiom::Peff => check_peff(rule, &problem)?,
                Axiom::Ete => check_ete(rule, &problem)?,
                other => return Err(CheckError::NotReproduced(format!("{other} needs a transformation"))),
            },
            Transformation::SingleIssue { .. } => check_gma(rule, &problem)?,
            Transformation::Subset(s) => check_cons(rule, &problem, std::slice::from_ref(s))?,
            Transformation::Split(s) => check_nms(rule, &problem, std::slice::from_ref(s))?,
            Transformation::Merge(s) => check_nmrm(rule, &problem, std::slice::from_ref(s))?,
        };
        match verdict.witness {
            Some(w) if w == *self => Ok(()),
            Some(w) => Err(CheckError::NotReproduced(format!(
                "a different violation was found: {} expected {} got {}",
                w.claimant,
                rational::Exact(&w.expected),
                rational::Exact(&w.actual)
            ))),
            None => Err(CheckError::NotReproduced("the axiom holds on the witness".into())),
        }
    }
}

/// Outcome of a fuzzing campaign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub rule: RuleId,
    pub axiom: Axiom,
    pub budget: u64,
    pub seed: u64,
    /// Index of the trial that produced the witness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// Seed of trial `t`: a SplitMix64 step over the campaign seed.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed.wrapping_add(trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Searches seeded random problems for a violation of `axiom` by `rule`.
///
/// Trials run in parallel; the reported witness is always the one with the
/// smallest trial index, so the result depends only on the inputs. Every
/// witness is replayed with [`Witness::reverify`] before it is returned.
/// An explicit priority order is ignored: generated problems are ranked in
/// declaration order.
pub fn fuzz_axiom(
    rule: &RuleId,
    axiom: Axiom,
    params: &GenParams,
    budget: u64,
    seed: u64,
) -> Result<FuzzReport, CheckError> {
    let rule = match rule {
        RuleId::Priority { .. } => RuleId::Priority { order: None },
        other => other.clone(),
    };
    let found = (0..budget)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(seed, t);
            let problem = gen::gen_problem(&params.with_seed(s))
                .map_err(|e| CheckError::NotReproduced(format!("generator: {e}")))?;
            let verdict = check_axiom(&rule, axiom, &problem, SpecBudget::default(), s)?;
            Ok(verdict.witness.map(|w| (t, w)))
        })
        .find_map_first(|r: Result<Option<(u64, Witness)>, CheckError>| match r {
            Ok(None) => None,
            other => Some(other),
        });
    let (trial, witness) = match found.transpose()?.flatten() {
        Some((t, w)) => {
            w.reverify(&rule)?;
            (Some(t), Some(w))
        }
        None => (None, None),
    };
    Ok(FuzzReport { rule, axiom, budget, seed, trial, witness })
}
