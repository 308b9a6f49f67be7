//! JSON documents for traces. Problems, allocations, and verdicts serialize
//! directly; a trace is flattened into id-keyed maps of exact rational strings.

use serde::Serialize;

use crate::cpa::{precedence_order, Exit, ExitCause, Trace};
use crate::problem::Allocation;
use crate::rational::{format_rational, Rational};

/// Ordered `id → value` object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedMap<V>(pub Vec<(String, V)>);

impl<V: Serialize> Serialize for OrderedMap<V> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

fn exact_map(entries: &[(String, Rational)]) -> OrderedMap<String> {
    OrderedMap(entries.iter().map(|(k, v)| (k.clone(), format_rational(v))).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeactivationDoc {
    pub id: String,
    pub cause: ExitCause,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepDoc {
    pub step: usize,
    pub lambda: String,
    /// `"inf"` marks an active issue that no active claimant demands.
    pub per_issue_lambda: OrderedMap<String>,
    pub active_issues: Vec<String>,
    pub active_claimants: Vec<String>,
    pub increments: OrderedMap<String>,
    pub rho: String,
    pub deactivated_issues: Vec<String>,
    pub deactivated_claimants: Vec<DeactivationDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrecedenceDoc {
    pub issues: OrderedMap<Exit>,
    pub claimants: OrderedMap<Exit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceDoc {
    pub steps: Vec<StepDoc>,
    pub allocation: Allocation,
    pub leftover: OrderedMap<String>,
    pub rho: Vec<String>,
    pub precedence: PrecedenceDoc,
}

impl From<&Trace> for TraceDoc {
    fn from(trace: &Trace) -> Self {
        let steps = trace
            .steps
            .iter()
            .map(|s| StepDoc {
                step: s.step,
                lambda: format_rational(&s.lambda),
                per_issue_lambda: OrderedMap(
                    s.per_issue_lambda
                        .iter()
                        .map(|(id, l)| {
                            let v = l.as_ref().map_or_else(|| "inf".to_owned(), format_rational);
                            (id.clone(), v)
                        })
                        .collect(),
                ),
                active_issues: s.active_issues.clone(),
                active_claimants: s.active_claimants.clone(),
                increments: exact_map(&s.increments),
                rho: format_rational(&s.rho_after),
                deactivated_issues: s.deactivated_issues.clone(),
                deactivated_claimants: s
                    .deactivated_claimants
                    .iter()
                    .map(|(id, cause)| DeactivationDoc { id: id.clone(), cause: *cause })
                    .collect(),
            })
            .collect();
        let order = precedence_order(trace);
        TraceDoc {
            steps,
            allocation: trace.final_allocation.clone(),
            leftover: exact_map(&trace.leftover),
            rho: trace.steps.iter().map(|s| format_rational(&s.rho_after)).collect(),
            precedence: PrecedenceDoc {
                issues: OrderedMap(order.issues),
                claimants: OrderedMap(order.claimants),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpa::solve_cpa;
    use crate::fixtures::{pa, pb};

    #[test]
    fn pb_trace_document() {
        let doc = TraceDoc::from(&solve_cpa(&pb()).1);
        let json = serde_json::to_value(&doc).unwrap();
        assert_eq!(json["allocation"], serde_json::json!({"C1": "6", "C2": "4"}));
        assert_eq!(json["rho"], serde_json::json!(["2/3", "3/4"]));
        assert_eq!(json["steps"][0]["lambda"], "2/3");
        assert_eq!(json["steps"][0]["per_issue_lambda"], serde_json::json!({"E1": "5/7", "E2": "2/3"}));
        assert_eq!(json["steps"][1]["lambda"], "1/4");
        assert_eq!(
            json["steps"][0]["deactivated_claimants"],
            serde_json::json!([{"id": "C2", "cause": "issue_exhausted"}])
        );
        assert_eq!(json["precedence"]["issues"], serde_json::json!({"E1": 2, "E2": 1}));
    }

    #[test]
    fn survivors_and_field_order() {
        let doc = TraceDoc::from(&solve_cpa(&pa()).1);
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.contains(r#""precedence":{"issues":{"E1":1,"E2":"survived","E3":2}"#), "{json}");
        assert!(json.contains(r#""leftover":{"E1":"0","E2":"3","E3":"0"}"#));
    }
}
