//! Defeater lifecycle: attachment, status transitions, the residual-risk
//! gate, and origin/status tallies.
//!
//! A defeater blocks the case conclusion until it is either mitigated or
//! explicitly accepted with a risk assessment. The state machine is small by
//! design: `open → mitigated`, `open → accepted_with_risk_assessment`, and
//! reopening from either resolved state. Jumping between the two resolved
//! states requires reopening first, so the history always records the
//! reconsideration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::address::{KindTag, NodeAddress};
use crate::model::{CaseNode, EdgeSpec, ModelError, NodeKind, SafetyCase};

/// Who raised the defeater.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefeaterOrigin {
    Developer,
    Reviewer,
}

impl DefeaterOrigin {
    pub fn keyword(self) -> &'static str {
        match self {
            DefeaterOrigin::Developer => "developer",
            DefeaterOrigin::Reviewer => "reviewer",
        }
    }
}

impl FromStr for DefeaterOrigin {
    type Err = String;

    fn from_str(s: &str) -> Result<DefeaterOrigin, String> {
        match s {
            "developer" => Ok(DefeaterOrigin::Developer),
            "reviewer" => Ok(DefeaterOrigin::Reviewer),
            other => Err(format!("unknown origin {other:?}")),
        }
    }
}

impl fmt::Display for DefeaterOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Lifecycle state of a defeater.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefeaterStatus {
    /// Unresolved; blocks residual-risk acceptance.
    Open,
    /// Addressed by a change, referenced via `mitigation_ref`.
    Mitigated,
    /// Left standing, but with an explicit, referenced risk assessment.
    AcceptedWithRiskAssessment,
}

impl DefeaterStatus {
    pub fn keyword(self) -> &'static str {
        match self {
            DefeaterStatus::Open => "open",
            DefeaterStatus::Mitigated => "mitigated",
            DefeaterStatus::AcceptedWithRiskAssessment => "accepted_with_risk_assessment",
        }
    }

    /// Terminal states do not block the verdict.
    pub fn is_terminal(self) -> bool {
        self != DefeaterStatus::Open
    }
}

impl FromStr for DefeaterStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<DefeaterStatus, String> {
        match s {
            "open" => Ok(DefeaterStatus::Open),
            "mitigated" => Ok(DefeaterStatus::Mitigated),
            "accepted_with_risk_assessment" => Ok(DefeaterStatus::AcceptedWithRiskAssessment),
            other => Err(format!("unknown status {other:?}")),
        }
    }
}

impl fmt::Display for DefeaterStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// One recorded status change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub timestamp: DateTime<Utc>,
    pub address: NodeAddress,
    pub old: DefeaterStatus,
    pub new: DefeaterStatus,
    pub actor: String,
    pub note: String,
}

/// Everything known about one defeater, as a read-only view.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefeaterRecord {
    pub address: NodeAddress,
    pub target: NodeAddress,
    pub origin: DefeaterOrigin,
    pub status: DefeaterStatus,
    pub text: String,
    pub mitigation_ref: Option<String>,
    pub risk_assessment_ref: Option<String>,
    pub history: Vec<HistoryEntry>,
}

/// References accompanying a transition. Which one is required depends on the
/// destination state.
#[derive(Debug, Clone, Default)]
pub struct TransitionRefs {
    pub mitigation_ref: Option<String>,
    pub risk_assessment_ref: Option<String>,
}

impl TransitionRefs {
    pub fn mitigation(reference: &str) -> TransitionRefs {
        TransitionRefs { mitigation_ref: Some(reference.to_string()), ..TransitionRefs::default() }
    }

    pub fn risk_assessment(reference: &str) -> TransitionRefs {
        TransitionRefs {
            risk_assessment_ref: Some(reference.to_string()),
            ..TransitionRefs::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LedgerError {
    #[error("unknown target {0}")]
    UnknownTarget(NodeAddress),
    #[error("defeaters can only target claims or argument steps, not {0}")]
    TargetKindInvalid(NodeAddress),
    #[error("{0} is not a defeater")]
    NotADefeater(NodeAddress),
    #[error("illegal transition {old} -> {new} (reopen first)")]
    IllegalTransition { old: DefeaterStatus, new: DefeaterStatus },
    #[error("transition to {status} requires a {required}")]
    MissingReference { status: DefeaterStatus, required: &'static str },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Outcome of the residual-risk gate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "gate", content = "blocking")]
pub enum GateResult {
    /// Every defeater is mitigated or accepted with a risk assessment.
    Accepted,
    /// Open defeaters remain; residual risks cannot be accepted.
    Rejected(Vec<NodeAddress>),
}

impl GateResult {
    pub fn is_accepted(&self) -> bool {
        matches!(self, GateResult::Accepted)
    }
}

/// Counts of defeaters broken down by origin and status.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DefeaterTally {
    pub by_origin_status: BTreeMap<(DefeaterOrigin, DefeaterStatus), usize>,
}

impl DefeaterTally {
    pub fn total(&self) -> usize {
        self.by_origin_status.values().sum()
    }

    /// Flat (origin, status, count) rows in deterministic order, for reports.
    pub fn rows(&self) -> Vec<(DefeaterOrigin, DefeaterStatus, usize)> {
        self.by_origin_status.iter().map(|(&(o, s), &n)| (o, s, n)).collect()
    }

    pub fn by_origin(&self, origin: DefeaterOrigin) -> usize {
        self.by_origin_status.iter().filter(|((o, _), _)| *o == origin).map(|(_, n)| n).sum()
    }

    pub fn by_status(&self, status: DefeaterStatus) -> usize {
        self.by_origin_status.iter().filter(|((_, s), _)| *s == status).map(|(_, n)| n).sum()
    }

    pub fn get(&self, origin: DefeaterOrigin, status: DefeaterStatus) -> usize {
        self.by_origin_status.get(&(origin, status)).copied().unwrap_or(0)
    }
}

const ALLOWED_TRANSITIONS: [(DefeaterStatus, DefeaterStatus); 4] = [
    (DefeaterStatus::Open, DefeaterStatus::Mitigated),
    (DefeaterStatus::Open, DefeaterStatus::AcceptedWithRiskAssessment),
    (DefeaterStatus::Mitigated, DefeaterStatus::Open),
    (DefeaterStatus::AcceptedWithRiskAssessment, DefeaterStatus::Open),
];

/// True if `old → new` appears in the allowed transition table.
pub fn transition_allowed(old: DefeaterStatus, new: DefeaterStatus) -> bool {
    ALLOWED_TRANSITIONS.contains(&(old, new))
}

impl SafetyCase {
    /// Attaches a fresh, open defeater to a claim or argument step. The new
    /// address takes the next free ordinal on the target's path.
    pub fn attach_defeater(
        &self,
        target: &NodeAddress,
        origin: DefeaterOrigin,
        text: &str,
    ) -> Result<(SafetyCase, NodeAddress), LedgerError> {
        let target_node =
            self.node(target).ok_or_else(|| LedgerError::UnknownTarget(target.clone()))?;
        match target_node.kind {
            NodeKind::Claim | NodeKind::ArgumentStep => {}
            _ => return Err(LedgerError::TargetKindInvalid(target.clone())),
        }
        let next_ordinal = self
            .nodes()
            .filter(|n| n.kind == NodeKind::Defeater && n.address.path() == target.path())
            .filter_map(|n| n.address.defeater_ordinal())
            .max()
            .unwrap_or(0)
            + 1;
        let address = NodeAddress::defeater(target.path().to_vec(), next_ordinal);
        let node = CaseNode::defeater(address.clone(), origin, text)?;
        let case = self.add_node(node, EdgeSpec::target(target.clone()))?;
        Ok((case, address))
    }

    /// Moves a defeater to `new_status`, checking the transition table and
    /// required references, and appending to its history.
    pub fn transition_defeater(
        &self,
        address: &NodeAddress,
        new_status: DefeaterStatus,
        refs: TransitionRefs,
        actor: &str,
        note: &str,
    ) -> Result<SafetyCase, LedgerError> {
        let node = self
            .node(address)
            .ok_or_else(|| ModelError::UnknownAddress(address.clone()))?;
        if node.kind != NodeKind::Defeater {
            return Err(LedgerError::NotADefeater(address.clone()));
        }
        let old = node.status.expect("defeater nodes always carry a status");
        if !transition_allowed(old, new_status) {
            return Err(LedgerError::IllegalTransition { old, new: new_status });
        }
        match new_status {
            DefeaterStatus::Mitigated if refs.mitigation_ref.is_none() => {
                return Err(LedgerError::MissingReference {
                    status: new_status,
                    required: "mitigation_ref",
                });
            }
            DefeaterStatus::AcceptedWithRiskAssessment
                if refs.risk_assessment_ref.is_none() =>
            {
                return Err(LedgerError::MissingReference {
                    status: new_status,
                    required: "risk_assessment_ref",
                });
            }
            _ => {}
        }

        let mut next = self.next_revision();
        {
            let node = next.node_mut(address).expect("checked above");
            node.status = Some(new_status);
            match new_status {
                DefeaterStatus::Mitigated => node.mitigation_ref = refs.mitigation_ref,
                DefeaterStatus::AcceptedWithRiskAssessment => {
                    node.risk_assessment_ref = refs.risk_assessment_ref;
                }
                DefeaterStatus::Open => {
                    node.mitigation_ref = None;
                    node.risk_assessment_ref = None;
                }
            }
        }
        let history = next.histories.entry(address.clone()).or_default();
        // Keep entries chronologically ordered even if the clock stands still
        // between two rapid transitions.
        let mut timestamp = Utc::now();
        if let Some(last) = history.last() {
            if timestamp < last.timestamp {
                timestamp = last.timestamp;
            }
        }
        history.push(HistoryEntry {
            timestamp,
            address: address.clone(),
            old,
            new: new_status,
            actor: actor.to_string(),
            note: note.to_string(),
        });
        Ok(next)
    }

    /// The full record for one defeater, including target and history.
    pub fn defeater_record(&self, address: &NodeAddress) -> Option<DefeaterRecord> {
        let node = self.node(address)?;
        if node.kind != NodeKind::Defeater {
            return None;
        }
        let target = self
            .defeat_edges()
            .find(|(from, _)| from == address)
            .map(|(_, to)| to.clone())
            .unwrap_or_else(|| address.with_tag(KindTag::Claim));
        Some(DefeaterRecord {
            address: address.clone(),
            target,
            origin: node.origin.expect("defeater nodes always carry an origin"),
            status: node.status.expect("defeater nodes always carry a status"),
            text: node.text.clone(),
            mitigation_ref: node.mitigation_ref.clone(),
            risk_assessment_ref: node.risk_assessment_ref.clone(),
            history: self.histories.get(address).cloned().unwrap_or_default(),
        })
    }

    /// All defeater records, sorted by address.
    pub fn defeater_records(&self) -> Vec<DefeaterRecord> {
        self.nodes()
            .filter(|n| n.kind == NodeKind::Defeater)
            .filter_map(|n| self.defeater_record(&n.address))
            .collect()
    }

    /// The residual-risk gate: rejected while any defeater is open.
    pub fn residual_gate(&self) -> GateResult {
        let blocking: Vec<NodeAddress> = self
            .nodes()
            .filter(|n| n.status == Some(DefeaterStatus::Open))
            .map(|n| n.address.clone())
            .collect();
        if blocking.is_empty() {
            GateResult::Accepted
        } else {
            GateResult::Rejected(blocking)
        }
    }

    /// Counts defeaters by origin × status.
    pub fn tally(&self) -> DefeaterTally {
        let mut tally = DefeaterTally::default();
        for node in self.nodes().filter(|n| n.kind == NodeKind::Defeater) {
            let origin = node.origin.expect("defeater nodes always carry an origin");
            let status = node.status.expect("defeater nodes always carry a status");
            *tally.by_origin_status.entry((origin, status)).or_insert(0) += 1;
        }
        tally
    }
}

/// Serializes all transition histories as one JSON object per line, suitable
/// for a `<case>.history` sidecar file.
pub fn history_to_jsonl(case: &SafetyCase) -> String {
    let mut entries: Vec<&HistoryEntry> = case.histories.values().flatten().collect();
    entries.sort_by(|a, b| (a.timestamp, &a.address).cmp(&(b.timestamp, &b.address)));
    let mut out = String::new();
    for entry in entries {
        out.push_str(&serde_json::to_string(entry).expect("history entries serialize"));
        out.push('\n');
    }
    out
}

/// Parses a `<case>.history` sidecar back into entries.
pub fn history_from_jsonl(input: &str) -> Result<Vec<HistoryEntry>, serde_json::Error> {
    input.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CaseMeta, CaseNode};

    fn addr(s: &str) -> NodeAddress {
        s.parse().unwrap()
    }

    fn one_claim() -> SafetyCase {
        SafetyCase::new(CaseMeta::new("t"))
            .add_node(CaseNode::claim(addr("C1"), "top").unwrap(), EdgeSpec::none())
            .unwrap()
    }

    #[test]
    fn test_attach_assigns_first_ordinal() {
        let (case, address) = one_claim()
            .attach_defeater(&addr("C1"), DefeaterOrigin::Reviewer, "doubt")
            .unwrap();
        assert_eq!(address, addr("D1-1"));
        assert_eq!(case.defeater_record(&address).unwrap().status, DefeaterStatus::Open);
    }

    #[test]
    fn test_attach_assigns_next_free_ordinal() {
        let mut case = one_claim();
        for _ in 0..3 {
            case = case
                .attach_defeater(&addr("C1"), DefeaterOrigin::Reviewer, "doubt")
                .unwrap()
                .0;
        }
        let (_, fourth) =
            case.attach_defeater(&addr("C1"), DefeaterOrigin::Developer, "another").unwrap();
        assert_eq!(fourth, addr("D1-4"));
    }

    #[test]
    fn test_attach_to_evidence_rejected() {
        let case = one_claim()
            .add_node(CaseNode::evidence(addr("E1"), "data").unwrap(), EdgeSpec::none())
            .unwrap();
        let err = case
            .attach_defeater(&addr("E1"), DefeaterOrigin::Reviewer, "doubt")
            .unwrap_err();
        assert_eq!(err, LedgerError::TargetKindInvalid(addr("E1")));
    }

    #[test]
    fn test_transition_table_is_exactly_the_allowed_set() {
        use DefeaterStatus::*;
        let all = [Open, Mitigated, AcceptedWithRiskAssessment];
        for old in all {
            for new in all {
                let expected = matches!(
                    (old, new),
                    (Open, Mitigated)
                        | (Open, AcceptedWithRiskAssessment)
                        | (Mitigated, Open)
                        | (AcceptedWithRiskAssessment, Open)
                );
                assert_eq!(transition_allowed(old, new), expected, "{old:?} -> {new:?}");
            }
        }
    }

    #[test]
    fn test_transition_requires_reference() {
        let (case, d) = one_claim()
            .attach_defeater(&addr("C1"), DefeaterOrigin::Reviewer, "doubt")
            .unwrap();
        let err = case
            .transition_defeater(
                &d,
                DefeaterStatus::AcceptedWithRiskAssessment,
                TransitionRefs::default(),
                "alice",
                "",
            )
            .unwrap_err();
        assert!(matches!(err, LedgerError::MissingReference { .. }));
    }

    #[test]
    fn test_mitigate_then_accept_requires_reopen() {
        let (case, d) = one_claim()
            .attach_defeater(&addr("C1"), DefeaterOrigin::Reviewer, "doubt")
            .unwrap();
        let case = case
            .transition_defeater(
                &d,
                DefeaterStatus::Mitigated,
                TransitionRefs::mitigation("CH-1"),
                "alice",
                "patched",
            )
            .unwrap();
        let record = case.defeater_record(&d).unwrap();
        assert_eq!(record.status, DefeaterStatus::Mitigated);
        assert_eq!(record.mitigation_ref.as_deref(), Some("CH-1"));
        assert_eq!(record.history.len(), 1);

        let err = case
            .transition_defeater(
                &d,
                DefeaterStatus::AcceptedWithRiskAssessment,
                TransitionRefs::risk_assessment("RA-1"),
                "alice",
                "",
            )
            .unwrap_err();
        assert!(matches!(err, LedgerError::IllegalTransition { .. }));
    }

    #[test]
    fn test_reopen_clears_refs_and_appends_history() {
        let (case, d) = one_claim()
            .attach_defeater(&addr("C1"), DefeaterOrigin::Developer, "doubt")
            .unwrap();
        let case = case
            .transition_defeater(
                &d,
                DefeaterStatus::Mitigated,
                TransitionRefs::mitigation("CH-1"),
                "alice",
                "",
            )
            .unwrap()
            .transition_defeater(&d, DefeaterStatus::Open, TransitionRefs::default(), "bob", "not convinced")
            .unwrap();
        let record = case.defeater_record(&d).unwrap();
        assert_eq!(record.status, DefeaterStatus::Open);
        assert_eq!(record.mitigation_ref, None);
        assert_eq!(record.history.len(), 2);
        assert!(record.history[0].timestamp <= record.history[1].timestamp);
    }

    #[test]
    fn test_gate_and_tally() {
        let mut case = one_claim();
        let mut addresses = Vec::new();
        for origin in [DefeaterOrigin::Developer, DefeaterOrigin::Reviewer] {
            let (next, address) = case.attach_defeater(&addr("C1"), origin, "doubt").unwrap();
            case = next;
            addresses.push(address);
        }
        assert_eq!(case.residual_gate(), GateResult::Rejected(addresses.clone()));

        let case = case
            .transition_defeater(
                &addresses[0],
                DefeaterStatus::Mitigated,
                TransitionRefs::mitigation("CH-9"),
                "alice",
                "",
            )
            .unwrap();
        let tally = case.tally();
        assert_eq!(tally.total(), 2);
        assert_eq!(tally.get(DefeaterOrigin::Developer, DefeaterStatus::Mitigated), 1);
        assert_eq!(tally.get(DefeaterOrigin::Reviewer, DefeaterStatus::Open), 1);
        assert!(!case.residual_gate().is_accepted());

        let case = case
            .transition_defeater(
                &addresses[1],
                DefeaterStatus::AcceptedWithRiskAssessment,
                TransitionRefs::risk_assessment("RA-2"),
                "alice",
                "",
            )
            .unwrap();
        assert_eq!(case.residual_gate(), GateResult::Accepted);
    }

    #[test]
    fn test_history_jsonl_round_trip() {
        let (case, d) = one_claim()
            .attach_defeater(&addr("C1"), DefeaterOrigin::Reviewer, "doubt")
            .unwrap();
        let case = case
            .transition_defeater(
                &d,
                DefeaterStatus::Mitigated,
                TransitionRefs::mitigation("CH-1"),
                "alice",
                "fixed",
            )
            .unwrap();
        let jsonl = history_to_jsonl(&case);
        let parsed = history_from_jsonl(&jsonl).unwrap();
        assert_eq!(parsed, case.defeater_record(&d).unwrap().history);
    }
}
