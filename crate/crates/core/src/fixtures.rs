//! Small hand-traced problems shared by tests, examples, and the CLI docs.

use crate::problem::Problem;
use crate::rational::int;

/// Issues E1:10, E2:4; C1 claims 8 on {E1}; C2 claims 6 on {E1, E2}.
pub fn pb() -> Problem {
    Problem::from_parts(
        &[("E1", int(10)), ("E2", int(4))],
        &[("C1", int(8), &["E1"]), ("C2", int(6), &["E1", "E2"])],
    )
    .expect("fixture is well formed")
}

/// Issues E1:3, E2:10, E3:4; C1 claims 5 on {E1, E2}; C2 claims 6 on {E2, E3}.
pub fn pa() -> Problem {
    Problem::from_parts(
        &[("E1", int(3)), ("E2", int(10)), ("E3", int(4))],
        &[("C1", int(5), &["E1", "E2"]), ("C2", int(6), &["E2", "E3"])],
    )
    .expect("fixture is well formed")
}

/// One issue of amount `e` shared by claimants `C1..Cn` with the given claims.
pub fn single_issue(e: i64, claims: &[i64]) -> Problem {
    let ids: Vec<String> = (1..=claims.len()).map(|n| format!("C{n}")).collect();
    let parts: Vec<(&str, _, &[&str])> =
        ids.iter().zip(claims).map(|(id, &c)| (id.as_str(), int(c), &["E1"][..])).collect();
    Problem::from_parts(&[("E1", int(e))], &parts).expect("fixture is well formed")
}
