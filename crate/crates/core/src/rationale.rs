//! Typed statement graphs produced by perspective agents.
//!
//! Statements reference earlier statements through `supports`, giving an
//! acyclic graph. Structural measures used by validation and metrics live
//! here: chain depth, claim support (logical flow), contradiction pairs,
//! rubric-dimension coverage.

use std::collections::BTreeSet;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::profile::is_protected_path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum StatementKind {
    Claim,
    Evidence,
    Inference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    pub fn opposes(self, other: Polarity) -> bool {
        matches!(
            (self, other),
            (Polarity::Positive, Polarity::Negative) | (Polarity::Negative, Polarity::Positive)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct Statement {
    pub index: usize,
    pub kind: StatementKind,
    pub text: String,
    #[serde(default)]
    pub supports: BTreeSet<usize>,
    pub polarity: Polarity,
    /// Profile field path this statement draws on, e.g. `cult.education`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cites_feature: Option<String>,
    /// Rubric dimension this statement addresses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<String>,
    /// Theoretical framework the statement invokes, when any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub framework: Option<String>,
}

/// Problems that make a rationale structurally unusable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StructureProblem {
    Empty,
    NoClaim,
    IndexMismatch { position: usize, index: usize },
    NonBackwardSupport { index: usize, target: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(transparent)]
pub struct StructuredRationale {
    pub statements: Vec<Statement>,
}

/// Builder-style helper for constructing rationales in order.
impl StructuredRationale {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    /// Append a statement and return its index.
    pub fn push(
        &mut self,
        kind: StatementKind,
        text: impl Into<String>,
        polarity: Polarity,
        supports: impl IntoIterator<Item = usize>,
    ) -> usize {
        let index = self.statements.len();
        self.statements.push(Statement {
            index,
            kind,
            text: text.into(),
            supports: supports.into_iter().collect(),
            polarity,
            cites_feature: None,
            dimension: None,
            framework: None,
        });
        index
    }

    /// Mutable access to the most recently pushed statement.
    pub fn last_mut(&mut self) -> &mut Statement {
        self.statements.last_mut().expect("push before last_mut")
    }

    pub fn structure_problems(&self) -> Vec<StructureProblem> {
        let mut problems = Vec::new();
        if self.statements.is_empty() {
            problems.push(StructureProblem::Empty);
            return problems;
        }
        for (position, st) in self.statements.iter().enumerate() {
            if st.index != position {
                problems.push(StructureProblem::IndexMismatch { position, index: st.index });
            }
            for &target in &st.supports {
                if target >= position {
                    problems.push(StructureProblem::NonBackwardSupport { index: position, target });
                }
            }
        }
        if !self.statements.iter().any(|s| s.kind == StatementKind::Claim) {
            problems.push(StructureProblem::NoClaim);
        }
        problems
    }

    /// Backward supports of the statement at `position`. Forward or self
    /// references are ignored so every measure terminates on malformed input.
    fn backward_supports(&self, position: usize) -> impl Iterator<Item = usize> + '_ {
        self.statements[position].supports.iter().copied().filter(move |&t| t < position)
    }

    /// Longest chain of statements following support links. 0 when empty.
    pub fn depth(&self) -> usize {
        let mut chain = vec![0usize; self.statements.len()];
        for i in 0..self.statements.len() {
            chain[i] = 1 + self.backward_supports(i).map(|t| chain[t]).max().unwrap_or(0);
        }
        chain.into_iter().max().unwrap_or(0)
    }

    /// Fraction of claims supported by at least one evidence or inference
    /// statement. 0 when there are no claims.
    pub fn logical_flow(&self) -> f64 {
        let claims: Vec<usize> = (0..self.statements.len())
            .filter(|&i| self.statements[i].kind == StatementKind::Claim)
            .collect();
        if claims.is_empty() {
            return 0.0;
        }
        let supported = claims
            .iter()
            .filter(|&&i| {
                self.backward_supports(i)
                    .any(|t| matches!(self.statements[t].kind, StatementKind::Evidence | StatementKind::Inference))
            })
            .count();
        supported as f64 / claims.len() as f64
    }

    /// Unordered pairs of statements with opposite polarity citing the same
    /// profile feature.
    pub fn contradiction_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for (i, a) in self.statements.iter().enumerate() {
            let Some(feature) = &a.cites_feature else { continue };
            for (j, b) in self.statements.iter().enumerate().skip(i + 1) {
                if b.cites_feature.as_ref() == Some(feature) && a.polarity.opposes(b.polarity) {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    /// Contradicting pairs over all statement pairs; 0 with fewer than two
    /// statements.
    pub fn contradiction_ratio(&self) -> f64 {
        let n = self.statements.len();
        if n < 2 {
            return 0.0;
        }
        let total = n * (n - 1) / 2;
        self.contradiction_pairs().len() as f64 / total as f64
    }

    /// Fraction of `dimensions` addressed by at least one statement; 1 when
    /// no dimensions are required.
    pub fn dimension_coverage(&self, dimensions: &[&str]) -> f64 {
        if dimensions.is_empty() {
            return 1.0;
        }
        let cited: BTreeSet<&str> = self.statements.iter().filter_map(|s| s.dimension.as_deref()).collect();
        let covered = dimensions.iter().filter(|d| cited.contains(*d)).count();
        covered as f64 / dimensions.len() as f64
    }

    pub fn cited_features(&self) -> BTreeSet<&str> {
        self.statements.iter().filter_map(|s| s.cites_feature.as_deref()).collect()
    }

    /// Indices of negative statements whose own citation is a protected
    /// attribute and whose backing chain offers no other profile evidence.
    pub fn protected_only_negatives(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, st) in self.statements.iter().enumerate() {
            if st.polarity != Polarity::Negative {
                continue;
            }
            let Some(feature) = st.cites_feature.as_deref() else { continue };
            if !is_protected_path(feature) {
                continue;
            }
            let mut stack: Vec<usize> = self.backward_supports(i).collect();
            let mut seen = BTreeSet::new();
            let mut other_evidence = false;
            while let Some(t) = stack.pop() {
                if !seen.insert(t) {
                    continue;
                }
                if let Some(f) = self.statements[t].cites_feature.as_deref() {
                    if !is_protected_path(f) {
                        other_evidence = true;
                        break;
                    }
                }
                stack.extend(self.backward_supports(t));
            }
            if !other_evidence {
                out.push(i);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> StructuredRationale {
        let mut r = StructuredRationale::new();
        let mut prev: Option<usize> = None;
        for i in 0..n {
            let kind = if i + 1 == n { StatementKind::Claim } else { StatementKind::Inference };
            prev = Some(r.push(kind, format!("s{i}"), Polarity::Neutral, prev));
        }
        r
    }

    #[test]
    fn depth_of_chain() {
        assert_eq!(StructuredRationale::new().depth(), 0);
        assert_eq!(chain(1).depth(), 1);
        assert_eq!(chain(5).depth(), 5);
    }

    #[test]
    fn forward_supports_are_reported_and_ignored() {
        let mut r = chain(2);
        r.statements[0].supports.insert(1);
        assert_eq!(r.depth(), 2);
        assert!(r
            .structure_problems()
            .contains(&StructureProblem::NonBackwardSupport { index: 0, target: 1 }));
    }

    #[test]
    fn logical_flow_counts_supported_claims() {
        let mut r = StructuredRationale::new();
        let e = r.push(StatementKind::Evidence, "e", Polarity::Positive, []);
        r.push(StatementKind::Claim, "c1", Polarity::Positive, [e]);
        r.push(StatementKind::Claim, "c2", Polarity::Positive, []);
        assert_eq!(r.logical_flow(), 0.5);
    }

    #[test]
    fn contradictions_need_same_feature_and_opposite_polarity() {
        let mut r = StructuredRationale::new();
        r.push(StatementKind::Evidence, "a", Polarity::Positive, []);
        r.last_mut().cites_feature = Some("exp.trauma_indicator".into());
        r.push(StatementKind::Evidence, "b", Polarity::Negative, []);
        r.last_mut().cites_feature = Some("exp.trauma_indicator".into());
        r.push(StatementKind::Evidence, "c", Polarity::Neutral, []);
        r.last_mut().cites_feature = Some("exp.trauma_indicator".into());
        r.push(StatementKind::Claim, "d", Polarity::Negative, [0]);
        assert_eq!(r.contradiction_pairs(), vec![(0, 1)]);
        assert!((r.contradiction_ratio() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn protected_negative_with_other_backing_is_not_flagged() {
        let mut r = StructuredRationale::new();
        let permit = r.push(StatementKind::Evidence, "no permit", Polarity::Negative, []);
        r.last_mut().cites_feature = Some("res.has_work_permit".into());
        r.push(StatementKind::Inference, "age", Polarity::Negative, [permit]);
        r.last_mut().cites_feature = Some("demo.age".into());
        r.push(StatementKind::Inference, "origin", Polarity::Negative, []);
        r.last_mut().cites_feature = Some("demo.origin".into());
        assert_eq!(r.protected_only_negatives(), vec![2]);
    }

    #[test]
    fn serialises_as_statement_array() {
        let r = chain(2);
        let json = serde_json::to_value(&r).unwrap();
        assert!(json.is_array());
        let back: StructuredRationale = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
    }
}
