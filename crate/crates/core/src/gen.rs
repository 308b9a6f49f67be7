//! Seeded random problems and transformation specs.
//!
//! Everything here is a pure function of its parameters and seed; the RNG is
//! ChaCha8 so streams are identical across platforms.

use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::axioms::{MergeSpec, SplitSpec, SubsetSpec};
use crate::problem::{Claimant, Issue, Problem};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub claimants: RangeInclusive<usize>,
    pub issues: RangeInclusive<usize>,
    /// Probability that a claimant claims a given issue.
    pub density: f64,
    /// Claims are drawn from `(0, max_claim]`.
    pub max_claim: u64,
    /// Largest denominator of a drawn claim, and of capacities' fractional parts.
    pub max_denominator: u64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            claimants: 2..=6,
            issues: 1..=4,
            density: 0.5,
            max_claim: 100,
            max_denominator: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("claimant range must be non-empty and start at 1 or more")]
    Claimants,
    #[error("issue range must be non-empty and start at 1 or more")]
    Issues,
    #[error("density must lie in (0, 1]")]
    Density,
    #[error("max_claim and max_denominator must be positive")]
    Bounds,
}

impl GenParams {
    pub fn with_seed(&self, seed: u64) -> GenParams {
        GenParams { seed, ..self.clone() }
    }

    fn check(&self) -> Result<(), GenError> {
        if self.claimants.is_empty() || *self.claimants.start() == 0 {
            return Err(GenError::Claimants);
        }
        if self.issues.is_empty() || *self.issues.start() == 0 {
            return Err(GenError::Issues);
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(GenError::Density);
        }
        if self.max_claim == 0 || self.max_denominator == 0 {
            return Err(GenError::Bounds);
        }
        Ok(())
    }
}

fn rational(numer: u64, denom: u64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Draws a problem in which every issue is strictly over-claimed.
///
/// Each issue's capacity is a uniform random fraction in `(0, 1)` of its
/// total claim, rounded down to a multiple of `1/max_denominator` unless that
/// would make it zero.
pub fn gen_problem(params: &GenParams) -> Result<Problem, GenError> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = rng.gen_range(params.claimants.clone());
    let m = rng.gen_range(params.issues.clone());
    let den = params.max_denominator;

    let claims: Vec<Rational> = (0..n)
        .map(|_| {
            let d = rng.gen_range(1..=den);
            rational(rng.gen_range(1..=params.max_claim * d), d)
        })
        .collect();
    let mut sets: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let mut set: Vec<usize> = (0..m).filter(|_| rng.gen_bool(params.density)).collect();
            if set.is_empty() {
                set.push(rng.gen_range(0..m));
            }
            set
        })
        .collect();
    for i in 0..m {
        if !sets.iter().any(|s| s.contains(&i)) {
            let j = rng.gen_range(0..n);
            sets[j].push(i);
            sets[j].sort_unstable();
        }
    }

    let grid = den.max(2);
    let issues = (0..m)
        .map(|i| {
            let total = sets
                .iter()
                .zip(&claims)
                .filter(|(s, _)| s.contains(&i))
                .fold(Rational::zero(), |acc, (_, c)| acc + c);
            let fraction = rational(rng.gen_range(1..grid), grid);
            let scaled = (&fraction * &total * rational(grid, 1)).floor() / rational(grid, 1);
            // Rounding can reach zero on tiny totals; keep the exact fraction there instead.
            let amount = if scaled.is_zero() { fraction * total } else { scaled };
            Issue { id: format!("E{}", i + 1), amount }
        })
        .collect();
    let claimants = claims
        .into_iter()
        .zip(sets)
        .enumerate()
        .map(|(j, (claim, issues))| Claimant { id: format!("C{}", j + 1), claim, issues })
        .collect();
    Ok(Problem::from_resolved(issues, claimants))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Subset,
    Split,
    Merge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TransformSpec {
    Subset(SubsetSpec),
    Split(SplitSpec),
    Merge(MergeSpec),
}

pub fn gen_specs(problem: &Problem, kind: SpecKind, count: usize, seed: u64) -> Vec<TransformSpec> {
    match kind {
        SpecKind::Subset => {
            subset_specs(problem, count, seed).into_iter().map(TransformSpec::Subset).collect()
        }
        SpecKind::Split => split_specs(problem, count, seed).into_iter().map(TransformSpec::Split).collect(),
        SpecKind::Merge => merge_specs(problem, count, seed).into_iter().map(TransformSpec::Merge).collect(),
    }
}

fn ids(problem: &Problem, picks: impl IntoIterator<Item = usize>) -> Vec<String> {
    picks.into_iter().map(|j| problem.claimants()[j].id.clone()).collect()
}

/// Every subset of size `|N| - 1` (dropping the first claimant, then the
/// second, ...), followed by random smaller non-empty subsets.
pub fn subset_specs(problem: &Problem, count: usize, seed: u64) -> Vec<SubsetSpec> {
    let n = problem.claimants().len();
    if n < 2 {
        return Vec::new();
    }
    let mut specs: Vec<SubsetSpec> = (0..n)
        .map(|skip| SubsetSpec { keep: ids(problem, (0..n).filter(|&j| j != skip)) })
        .take(count)
        .collect();
    if n >= 3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while specs.len() < count {
            let size = rng.gen_range(1..=n - 2);
            let mut picks = sample(&mut rng, n, size).into_vec();
            picks.sort_unstable();
            specs.push(SubsetSpec { keep: ids(problem, picks) });
        }
    }
    specs
}

/// Splits of a random positive-claim claimant into 2 to 4 parts with
/// weights that sum exactly to its claim.
pub fn split_specs(problem: &Problem, count: usize, seed: u64) -> Vec<SplitSpec> {
    let candidates: Vec<usize> =
        (0..problem.claimants().len()).filter(|&j| problem.claimants()[j].claim.is_positive()).collect();
    if candidates.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let target = &problem.claimants()[candidates[rng.gen_range(0..candidates.len())]];
            let k = rng.gen_range(2..=4);
            let weights: Vec<u64> = (0..k).map(|_| rng.gen_range(1..=8)).collect();
            let total: u64 = weights.iter().sum();
            let parts = weights
                .iter()
                .enumerate()
                .map(|(p, &w)| {
                    let id = fresh_id(problem, &format!("{}.{}", target.id, p + 1));
                    (id, &target.claim * rational(w, total))
                })
                .collect();
            SplitSpec { target: target.id.clone(), parts }
        })
        .collect()
}

fn fresh_id(problem: &Problem, base: &str) -> String {
    let mut id = base.to_owned();
    while problem.claimant_index(&id).is_some() {
        id.push('\'');
    }
    id
}

/// Random merges of two or more homologous claimants; empty when no
/// homologous pair exists. Duplicate specs are dropped.
pub fn merge_specs(problem: &Problem, count: usize, seed: u64) -> Vec<MergeSpec> {
    let claimants = problem.claimants();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for j in 0..claimants.len() {
        match groups.iter_mut().find(|g| claimants[g[0]].issues == claimants[j].issues) {
            Some(g) => g.push(j),
            None => groups.push(vec![j]),
        }
    }
    groups.retain(|g| g.len() >= 2);
    if groups.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs: Vec<MergeSpec> = Vec::new();
    for _ in 0..count {
        let group = &groups[rng.gen_range(0..groups.len())];
        let size = rng.gen_range(2..=group.len());
        let mut picks: Vec<usize> =
            sample(&mut rng, group.len(), size).into_iter().map(|p| group[p]).collect();
        picks.sort_unstable();
        let sources = ids(problem, picks);
        let spec = MergeSpec { merged_id: sources[0].clone(), sources };
        if !specs.contains(&spec) {
            specs.push(spec);
        }
    }
    specs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{merge_problem, split_problem};
    use crate::fixtures::pb;
    use crate::problem::check_binding;

    #[test]
    fn deterministic_in_seed() {
        let params = GenParams { seed: 1, ..GenParams::default() };
        assert_eq!(gen_problem(&params).unwrap(), gen_problem(&params).unwrap());
        let other = gen_problem(&params.with_seed(2)).unwrap();
        assert_ne!(gen_problem(&params).unwrap(), other);
    }

    #[test]
    fn seed_one_golden() {
        let params = GenParams {
            claimants: 2..=3,
            issues: 1..=2,
            density: 0.5,
            max_claim: 10,
            max_denominator: 4,
            seed: 1,
        };
        let doc = serde_json::to_string(&gen_problem(&params).unwrap().to_doc()).unwrap();
        assert_eq!(doc, include_str!("../tests/golden/gen_seed1.json").trim_end());
    }

    #[test]
    fn always_valid() {
        for seed in 0..300 {
            let params = GenParams {
                claimants: 1..=8,
                issues: 1..=5,
                density: 0.3,
                max_denominator: 3,
                seed,
                ..GenParams::default()
            };
            let p = gen_problem(&params).unwrap();
            assert!(check_binding(p.clone()).is_ok(), "seed {seed}");
            assert!(Problem::from_doc(&p.to_doc()).is_ok());
        }
    }

    #[test]
    fn full_density_makes_everyone_homologous() {
        let params = GenParams { density: 1.0, seed: 9, ..GenParams::default() };
        let p = gen_problem(&params).unwrap();
        let first = &p.claimants()[0].issues;
        assert_eq!(first.len(), p.issues().len());
        assert!(p.claimants().iter().all(|c| &c.issues == first));
    }

    #[test]
    fn rejects_bad_params() {
        let base = GenParams::default();
        assert_eq!(gen_problem(&GenParams { claimants: 0..=3, ..base.clone() }), Err(GenError::Claimants));
        #[allow(clippy::reversed_empty_ranges)]
        let empty = 3..=2;
        assert_eq!(gen_problem(&GenParams { issues: empty, ..base.clone() }), Err(GenError::Issues));
        assert_eq!(gen_problem(&GenParams { density: 0.0, ..base.clone() }), Err(GenError::Density));
        assert_eq!(gen_problem(&GenParams { max_claim: 0, ..base }), Err(GenError::Bounds));
    }

    #[test]
    fn subsets_enumerate_then_sample() {
        let p = Problem::from_parts(
            &[("E1", crate::rational::int(1))],
            &[
                ("A", crate::rational::int(1), &["E1"]),
                ("B", crate::rational::int(1), &["E1"]),
                ("C", crate::rational::int(1), &["E1"]),
            ],
        )
        .unwrap();
        let specs = subset_specs(&p, 5, 3);
        assert_eq!(specs.len(), 5);
        assert_eq!(specs[0].keep, vec!["B", "C"]);
        assert_eq!(specs[1].keep, vec!["A", "C"]);
        assert_eq!(specs[2].keep, vec!["A", "B"]);
        assert!(specs[3..].iter().all(|s| s.keep.len() == 1));
    }

    #[test]
    fn splits_sum_exactly() {
        for seed in 0..50 {
            let p = gen_problem(&GenParams::default().with_seed(seed)).unwrap();
            for spec in split_specs(&p, 5, seed) {
                let parent = &p.claimants()[p.claimant_index(&spec.target).unwrap()].claim;
                let total = spec.parts.iter().fold(Rational::zero(), |a, (_, c)| a + c);
                assert_eq!(&total, parent);
                assert!(split_problem(&p, &spec).is_ok());
            }
        }
    }

    #[test]
    fn merges_need_homologous_pairs() {
        assert!(merge_specs(&pb(), 5, 0).is_empty());
        let p = gen_problem(&GenParams { density: 1.0, seed: 4, claimants: 3..=5, ..GenParams::default() })
            .unwrap();
        let specs = merge_specs(&p, 5, 1);
        assert!(!specs.is_empty());
        for spec in &specs {
            assert!(merge_problem(&p, spec).is_ok());
        }
    }
}
