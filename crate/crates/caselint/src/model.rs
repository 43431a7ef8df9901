//! The in-memory case model: typed nodes, the case graph, and the verdict.
//!
//! A [`SafetyCase`] is an immutable snapshot — every mutating operation
//! returns a fresh value with a bumped revision counter, so findings can be
//! checked against the exact revision they were computed for.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::address::{AddressError, KindTag, NodeAddress};
use crate::confirm::ConfirmationAssessment;
use crate::defeater::{DefeaterOrigin, DefeaterStatus, HistoryEntry};
use crate::lint::Finding;
use crate::risk::ArtifactKind;

/// What a node is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Claim,
    ArgumentStep,
    Evidence,
    SideWarrant,
    Defeater,
}

impl NodeKind {
    pub fn tag(self) -> KindTag {
        match self {
            NodeKind::Claim => KindTag::Claim,
            NodeKind::ArgumentStep => KindTag::Argument,
            NodeKind::Evidence => KindTag::Evidence,
            NodeKind::SideWarrant => KindTag::Warrant,
            NodeKind::Defeater => KindTag::Defeater,
        }
    }

    /// Token used in case files (`kind=argument_step`).
    pub fn keyword(self) -> &'static str {
        match self {
            NodeKind::Claim => "claim",
            NodeKind::ArgumentStep => "argument_step",
            NodeKind::Evidence => "evidence",
            NodeKind::SideWarrant => "side_warrant",
            NodeKind::Defeater => "defeater",
        }
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<NodeKind, String> {
        match s {
            "claim" => Ok(NodeKind::Claim),
            "argument_step" => Ok(NodeKind::ArgumentStep),
            "evidence" => Ok(NodeKind::Evidence),
            "side_warrant" => Ok(NodeKind::SideWarrant),
            "defeater" => Ok(NodeKind::Defeater),
            other => Err(format!("unknown node kind {other:?}")),
        }
    }
}

/// How an argument step combines its children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgumentSubtype {
    /// All children must hold.
    Conjunctive,
    /// Any one child suffices — discouraged in safety cases, normal in
    /// counter-cases.
    Disjunctive,
    /// Explains why a body of evidence supports the parent claim.
    EvidenceIncorporation,
    /// Makes an abstract claim concrete.
    Concretion,
    /// Replaces a claim by an equivalent reformulation.
    Substitution,
}

impl ArgumentSubtype {
    pub fn keyword(self) -> &'static str {
        match self {
            ArgumentSubtype::Conjunctive => "conjunctive",
            ArgumentSubtype::Disjunctive => "disjunctive",
            ArgumentSubtype::EvidenceIncorporation => "evidence_incorporation",
            ArgumentSubtype::Concretion => "concretion",
            ArgumentSubtype::Substitution => "substitution",
        }
    }
}

impl FromStr for ArgumentSubtype {
    type Err = String;

    fn from_str(s: &str) -> Result<ArgumentSubtype, String> {
        match s {
            "conjunctive" => Ok(ArgumentSubtype::Conjunctive),
            "disjunctive" => Ok(ArgumentSubtype::Disjunctive),
            "evidence_incorporation" => Ok(ArgumentSubtype::EvidenceIncorporation),
            "concretion" => Ok(ArgumentSubtype::Concretion),
            "substitution" => Ok(ArgumentSubtype::Substitution),
            other => Err(format!("unknown argument subtype {other:?}")),
        }
    }
}

/// One node of a case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseNode {
    pub address: NodeAddress,
    pub kind: NodeKind,
    pub text: String,
    /// Present exactly when `kind` is [`NodeKind::ArgumentStep`].
    pub argument_subtype: Option<ArgumentSubtype>,
    /// Technical terms this node relies on; each must appear in the case
    /// glossary or lint rule R03 fires.
    pub terms: Vec<String>,
    /// Defeaters only: who raised the doubt.
    pub origin: Option<DefeaterOrigin>,
    /// Defeaters only: lifecycle state.
    pub status: Option<DefeaterStatus>,
    /// Defeaters only: reference to the mitigation write-up.
    pub mitigation_ref: Option<String>,
    /// Defeaters only: reference to the accepted risk assessment.
    pub risk_assessment_ref: Option<String>,
}

fn check_text(text: &str) -> Result<String, ModelError> {
    if text.trim().is_empty() {
        return Err(ModelError::EmptyText);
    }
    if text.contains('\n') || text.contains('\r') {
        return Err(ModelError::MultilineText);
    }
    if text != text.trim() {
        return Err(ModelError::UntrimmedText);
    }
    Ok(text.to_string())
}

impl CaseNode {
    fn base(address: NodeAddress, kind: NodeKind, text: &str) -> Result<CaseNode, ModelError> {
        if address.kind_tag() != kind.tag() {
            return Err(ModelError::TagKindMismatch { address, kind });
        }
        Ok(CaseNode {
            address,
            kind,
            text: check_text(text)?,
            argument_subtype: None,
            terms: Vec::new(),
            origin: None,
            status: None,
            mitigation_ref: None,
            risk_assessment_ref: None,
        })
    }

    pub fn claim(address: NodeAddress, text: &str) -> Result<CaseNode, ModelError> {
        CaseNode::base(address, NodeKind::Claim, text)
    }

    pub fn argument(
        address: NodeAddress,
        subtype: ArgumentSubtype,
        text: &str,
    ) -> Result<CaseNode, ModelError> {
        let mut node = CaseNode::base(address, NodeKind::ArgumentStep, text)?;
        node.argument_subtype = Some(subtype);
        Ok(node)
    }

    pub fn evidence(address: NodeAddress, text: &str) -> Result<CaseNode, ModelError> {
        CaseNode::base(address, NodeKind::Evidence, text)
    }

    pub fn side_warrant(address: NodeAddress, text: &str) -> Result<CaseNode, ModelError> {
        CaseNode::base(address, NodeKind::SideWarrant, text)
    }

    pub fn defeater(
        address: NodeAddress,
        origin: DefeaterOrigin,
        text: &str,
    ) -> Result<CaseNode, ModelError> {
        let mut node = CaseNode::base(address, NodeKind::Defeater, text)?;
        node.origin = Some(origin);
        node.status = Some(DefeaterStatus::Open);
        Ok(node)
    }

    /// Declares technical terms on the node; sorted and de-duplicated so the
    /// canonical serialization is stable.
    pub fn with_terms<I: IntoIterator<Item = S>, S: Into<String>>(
        mut self,
        terms: I,
    ) -> Result<CaseNode, ModelError> {
        let mut list: Vec<String> = terms.into_iter().map(Into::into).collect();
        for term in &list {
            if term.is_empty() || term.contains('"') || term.contains('\n') {
                return Err(ModelError::BadTerm(term.clone()));
            }
        }
        list.sort();
        list.dedup();
        self.terms = list;
        Ok(self)
    }
}

/// Whether the document argues for safety or against another case.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    #[default]
    SafetyCase,
    /// A structured rebuttal; branches combine disjunctively, so rule R02
    /// does not apply.
    CounterCase,
}

impl CaseKind {
    pub fn keyword(self) -> &'static str {
        match self {
            CaseKind::SafetyCase => "safety_case",
            CaseKind::CounterCase => "counter_case",
        }
    }
}

impl FromStr for CaseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<CaseKind, String> {
        match s {
            "safety_case" => Ok(CaseKind::SafetyCase),
            "counter_case" => Ok(CaseKind::CounterCase),
            other => Err(format!("unknown case kind {other:?}")),
        }
    }
}

/// The quantitative floor above which harm counts as severe.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HarmThreshold {
    /// Economic loss floor in USD.
    pub economic_usd: Option<f64>,
    pub fatalities: Option<u64>,
    pub casualties: Option<u64>,
    pub scope_note: Option<String>,
}

impl HarmThreshold {
    /// True when no field at all is set; such a block serializes to nothing.
    pub fn is_empty(&self) -> bool {
        self.economic_usd.is_none()
            && self.fatalities.is_none()
            && self.casualties.is_none()
            && self.scope_note.is_none()
    }

    /// True when at least one numeric figure is present. A scope note alone
    /// does not quantify anything.
    pub fn quantified(&self) -> bool {
        self.economic_usd.is_some() || self.fatalities.is_some() || self.casualties.is_some()
    }
}

/// When the case was issued and under what conditions it stops holding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityWindow {
    pub issued: chrono::NaiveDate,
    pub expires: Option<chrono::NaiveDate>,
    pub reevaluation_triggers: Vec<String>,
    pub validity_boundaries: Vec<String>,
}

/// Case-level metadata: scope, thresholds, glossary, validity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseMeta {
    pub case_id: String,
    pub case_kind: CaseKind,
    pub assured_property: Option<String>,
    pub harm_threshold: Option<HarmThreshold>,
    pub purpose: Option<String>,
    pub supported_decision: Option<String>,
    pub system_model_ref: Option<String>,
    pub environment_ref: Option<String>,
    pub validity: Option<ValidityWindow>,
    pub glossary: BTreeMap<String, String>,
    /// Severity / exposure / controllability trio, when the author has rated
    /// the case (drives rule R09 and the mandatory-severity floor).
    pub criticality: Option<crate::risk::CriticalityInput>,
}

impl CaseMeta {
    pub fn new(case_id: &str) -> CaseMeta {
        CaseMeta { case_id: case_id.to_string(), ..CaseMeta::default() }
    }
}

/// Edges attached alongside a node in [`SafetyCase::add_node`].
#[derive(Debug, Clone, Default)]
pub struct EdgeSpec {
    /// Argument steps: the parent claim this argument supports.
    pub supports: Option<NodeAddress>,
    /// Argument steps: subclaims or evidence under this argument.
    pub children: Vec<NodeAddress>,
    /// Argument steps: side-warrants justifying the step itself.
    pub warrants: Vec<NodeAddress>,
    /// Defeaters: the claim or argument being challenged.
    pub target: Option<NodeAddress>,
}

impl EdgeSpec {
    pub fn none() -> EdgeSpec {
        EdgeSpec::default()
    }

    pub fn supports(parent: NodeAddress) -> EdgeSpec {
        EdgeSpec { supports: Some(parent), ..EdgeSpec::default() }
    }

    pub fn target(target: NodeAddress) -> EdgeSpec {
        EdgeSpec { target: Some(target), ..EdgeSpec::default() }
    }

    pub fn with_children(mut self, children: Vec<NodeAddress>) -> EdgeSpec {
        self.children = children;
        self
    }

    pub fn with_warrants(mut self, warrants: Vec<NodeAddress>) -> EdgeSpec {
        self.warrants = warrants;
        self
    }
}

/// Errors from model construction and queries.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("node text must be nonempty")]
    EmptyText,
    #[error("node text must be a single line")]
    MultilineText,
    #[error("node text must not have leading or trailing whitespace")]
    UntrimmedText,
    #[error("term {0:?} may not be empty or contain quotes/newlines")]
    BadTerm(String),
    #[error("address {address} does not match node kind {kind:?}")]
    TagKindMismatch { address: NodeAddress, kind: NodeKind },
    #[error("duplicate address {0}")]
    DuplicateAddress(NodeAddress),
    #[error("dangling reference: {from} refers to missing node {to}")]
    DanglingReference { from: NodeAddress, to: NodeAddress },
    #[error("adding {0} would create a cycle through {1}")]
    CycleIntroduced(NodeAddress, NodeAddress),
    #[error("malformed address: {0}")]
    MalformedAddress(#[from] AddressError),
    #[error("unknown address {0}")]
    UnknownAddress(NodeAddress),
    #[error("{address}: {detail}")]
    IllegalEdge { address: NodeAddress, detail: String },
    #[error("defeater {0} has no claim or argument on its path")]
    DefeaterPathUnmatched(NodeAddress),
    #[error("findings were computed for revision {findings} but the case is at revision {case}")]
    StaleFindings { findings: u64, case: u64 },
}

/// Case-level verdict, derived from lint findings plus defeater states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// No credible doubts remain: no open defeaters, no error findings.
    Complete,
    /// Open defeaters or error-level findings stand in the way.
    Incomplete,
    /// The case graph itself is malformed (structural findings present).
    Invalid,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Complete => "complete",
            Verdict::Incomplete => "incomplete",
            Verdict::Invalid => "invalid",
        })
    }
}

/// A defeater-annotated CAE case.
///
/// Equality compares content — meta, nodes, edges, artifacts and assessments —
/// but deliberately ignores the revision counter and transition history, so a
/// case equals its serialize/parse round-trip.
#[derive(Debug, Clone, Default)]
pub struct SafetyCase {
    meta: CaseMeta,
    nodes: BTreeMap<NodeAddress, CaseNode>,
    support_edges: BTreeSet<(NodeAddress, NodeAddress)>,
    child_edges: BTreeSet<(NodeAddress, NodeAddress)>,
    warrant_edges: BTreeSet<(NodeAddress, NodeAddress)>,
    defeat_edges: BTreeSet<(NodeAddress, NodeAddress)>,
    artifacts: BTreeSet<ArtifactKind>,
    assessments: Vec<ConfirmationAssessment>,
    revision: u64,
    pub(crate) histories: BTreeMap<NodeAddress, Vec<HistoryEntry>>,
}

impl PartialEq for SafetyCase {
    fn eq(&self, other: &SafetyCase) -> bool {
        self.meta == other.meta
            && self.nodes == other.nodes
            && self.support_edges == other.support_edges
            && self.child_edges == other.child_edges
            && self.warrant_edges == other.warrant_edges
            && self.defeat_edges == other.defeat_edges
            && self.artifacts == other.artifacts
            && self.assessments == other.assessments
    }
}

impl SafetyCase {
    pub fn new(meta: CaseMeta) -> SafetyCase {
        SafetyCase { meta, ..SafetyCase::default() }
    }

    pub fn meta(&self) -> &CaseMeta {
        &self.meta
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn nodes(&self) -> impl Iterator<Item = &CaseNode> {
        self.nodes.values()
    }

    pub fn node(&self, address: &NodeAddress) -> Option<&CaseNode> {
        self.nodes.get(address)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn support_edges(&self) -> impl Iterator<Item = &(NodeAddress, NodeAddress)> {
        self.support_edges.iter()
    }

    pub fn child_edges(&self) -> impl Iterator<Item = &(NodeAddress, NodeAddress)> {
        self.child_edges.iter()
    }

    pub fn warrant_edges(&self) -> impl Iterator<Item = &(NodeAddress, NodeAddress)> {
        self.warrant_edges.iter()
    }

    pub fn defeat_edges(&self) -> impl Iterator<Item = &(NodeAddress, NodeAddress)> {
        self.defeat_edges.iter()
    }

    pub fn artifacts(&self) -> &BTreeSet<ArtifactKind> {
        &self.artifacts
    }

    pub fn assessments(&self) -> &[ConfirmationAssessment] {
        &self.assessments
    }

    /// The unique claim no argument lists as a child. `None` while a case is
    /// under construction or if several candidates exist.
    pub fn root_claim(&self) -> Option<&CaseNode> {
        let children: BTreeSet<&NodeAddress> =
            self.child_edges.iter().map(|(_, child)| child).collect();
        let mut roots = self
            .nodes
            .values()
            .filter(|n| n.kind == NodeKind::Claim && !children.contains(&n.address));
        match (roots.next(), roots.next()) {
            (Some(root), None) => Some(root),
            _ => None,
        }
    }

    #[cfg(test)]
    pub(crate) fn with_meta(mut self, meta: CaseMeta) -> SafetyCase {
        self.meta = meta;
        self
    }

    pub(crate) fn with_artifacts(mut self, artifacts: BTreeSet<ArtifactKind>) -> SafetyCase {
        self.artifacts = artifacts;
        self
    }

    /// Attaches assessment rows; kept sorted by (claim, evidence, dimension)
    /// for canonical output.
    pub fn with_assessments(
        mut self,
        mut assessments: Vec<ConfirmationAssessment>,
    ) -> SafetyCase {
        assessments.sort_by(|a, b| {
            (&a.claim, &a.evidence, a.dimension).cmp(&(&b.claim, &b.evidence, b.dimension))
        });
        self.assessments = assessments;
        self
    }

    pub fn declare_artifact(&self, artifact: ArtifactKind) -> SafetyCase {
        let mut next = self.clone();
        next.artifacts.insert(artifact);
        next.revision += 1;
        next
    }

    /// Inserts a node together with its edges, returning the next revision.
    ///
    /// Checks addresses, edge endpoints, per-kind edge legality and
    /// acyclicity. Root-claim uniqueness is *not* enforced here (cases are
    /// built incrementally); `parse_case` and `validate_structure` check it
    /// on whole documents.
    pub fn add_node(&self, node: CaseNode, edges: EdgeSpec) -> Result<SafetyCase, ModelError> {
        if self.nodes.contains_key(&node.address) {
            return Err(ModelError::DuplicateAddress(node.address));
        }

        let addr = node.address.clone();
        let exists = |target: &NodeAddress| self.nodes.contains_key(target) || *target == addr;
        let require = |target: &NodeAddress| -> Result<(), ModelError> {
            if exists(target) {
                Ok(())
            } else {
                Err(ModelError::DanglingReference { from: addr.clone(), to: target.clone() })
            }
        };
        let illegal = |detail: &str| -> ModelError {
            ModelError::IllegalEdge { address: addr.clone(), detail: detail.to_string() }
        };

        let mut next = self.clone();

        match node.kind {
            NodeKind::ArgumentStep => {
                let parent = edges.supports.clone().ok_or_else(|| {
                    illegal("an argument step must support exactly one parent claim")
                })?;
                require(&parent)?;
                if self.kind_of(&parent) != Some(NodeKind::Claim) {
                    return Err(illegal("arguments can only support claims"));
                }
                if edges.children.is_empty() {
                    return Err(illegal("an argument step needs at least one child"));
                }
                for child in &edges.children {
                    require(child)?;
                    match self.kind_of(child) {
                        Some(NodeKind::Claim) => {}
                        Some(NodeKind::Evidence) => {
                            if node.argument_subtype
                                != Some(ArgumentSubtype::EvidenceIncorporation)
                            {
                                return Err(illegal(
                                    "evidence may only sit under an evidence_incorporation step",
                                ));
                            }
                        }
                        _ => return Err(illegal("argument children must be claims or evidence")),
                    }
                }
                for warrant in &edges.warrants {
                    require(warrant)?;
                    if self.kind_of(warrant) != Some(NodeKind::SideWarrant) {
                        return Err(illegal("warrants edges must point at side_warrant nodes"));
                    }
                }
                if edges.target.is_some() {
                    return Err(illegal("only defeaters take a target"));
                }
                next.support_edges.insert((addr.clone(), parent.clone()));
                for child in &edges.children {
                    next.child_edges.insert((addr.clone(), child.clone()));
                }
                for warrant in &edges.warrants {
                    next.warrant_edges.insert((addr.clone(), warrant.clone()));
                }
                // Cycle check over the claim/argument/evidence subgraph:
                // parent claim flows down through the argument to children.
                if next.reachable_from(&edges.children, &parent) {
                    return Err(ModelError::CycleIntroduced(addr, parent));
                }
            }
            NodeKind::Defeater => {
                let target = edges
                    .target
                    .clone()
                    .ok_or_else(|| illegal("a defeater must name its target"))?;
                if !exists(&target) {
                    return Err(ModelError::UnknownAddress(target));
                }
                match self.kind_of(&target) {
                    Some(NodeKind::Claim) | Some(NodeKind::ArgumentStep) => {}
                    _ => return Err(illegal("defeaters target claims or argument steps")),
                }
                if target.path() != addr.path() {
                    return Err(illegal("defeater path must match its target's path"));
                }
                if edges.supports.is_some() || !edges.children.is_empty() || !edges.warrants.is_empty()
                {
                    return Err(illegal("defeaters only take a target edge"));
                }
                next.defeat_edges.insert((addr.clone(), target));
            }
            NodeKind::Claim | NodeKind::Evidence | NodeKind::SideWarrant => {
                if edges.supports.is_some()
                    || !edges.children.is_empty()
                    || !edges.warrants.is_empty()
                    || edges.target.is_some()
                {
                    // Claims/evidence/warrants are referenced by later
                    // argument steps; they carry no outgoing edges themselves.
                    return Err(illegal("this node kind carries no outgoing edges"));
                }
            }
        }

        next.nodes.insert(addr, node);
        next.revision = self.revision + 1;
        Ok(next)
    }

    fn kind_of(&self, address: &NodeAddress) -> Option<NodeKind> {
        self.nodes.get(address).map(|n| n.kind)
    }

    /// True if `goal` is reachable from any of `starts` by walking downward
    /// (claim → supporting argument → children).
    fn reachable_from(&self, starts: &[NodeAddress], goal: &NodeAddress) -> bool {
        let mut stack: Vec<NodeAddress> = starts.to_vec();
        let mut seen: BTreeSet<NodeAddress> = BTreeSet::new();
        while let Some(current) = stack.pop() {
            if current == *goal {
                return true;
            }
            if !seen.insert(current.clone()) {
                continue;
            }
            for (arg, parent) in &self.support_edges {
                if *parent == current {
                    stack.push(arg.clone());
                }
            }
            for (arg, child) in &self.child_edges {
                if *arg == current {
                    stack.push(child.clone());
                }
            }
        }
        false
    }

    /// Looks a node up by its rendered address.
    pub fn resolve(&self, address_text: &str) -> Result<&CaseNode, ModelError> {
        let address: NodeAddress = address_text.parse()?;
        self.nodes.get(&address).ok_or(ModelError::UnknownAddress(address))
    }

    /// Nodes that hang below `node` in a rendered diagram, in address order:
    /// for claims the supporting arguments, any (parse-relaxed) directly
    /// attached evidence, and defeaters; for arguments the children, warrants
    /// and defeaters.
    pub fn children_of(&self, node: &NodeAddress) -> Vec<NodeAddress> {
        let mut out: Vec<NodeAddress> = Vec::new();
        match self.kind_of(node) {
            Some(NodeKind::Claim) => {
                for (supporter, parent) in &self.support_edges {
                    if parent == node {
                        out.push(supporter.clone());
                    }
                }
            }
            Some(NodeKind::ArgumentStep) => {
                for (arg, child) in &self.child_edges {
                    if arg == node {
                        out.push(child.clone());
                    }
                }
                for (arg, warrant) in &self.warrant_edges {
                    if arg == node {
                        out.push(warrant.clone());
                    }
                }
            }
            _ => {}
        }
        for (defeater, target) in &self.defeat_edges {
            if target == node {
                out.push(defeater.clone());
            }
        }
        out.sort();
        out
    }

    /// Deterministic pre-order traversal from `root`. Shared nodes (the graph
    /// is a DAG, not a tree) are visited once, at their first encounter.
    pub fn subtree(&self, root: &NodeAddress) -> Result<Vec<&CaseNode>, ModelError> {
        if !self.nodes.contains_key(root) {
            return Err(ModelError::UnknownAddress(root.clone()));
        }
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        self.preorder(root, &mut seen, &mut out);
        Ok(out)
    }

    fn preorder<'a>(
        &'a self,
        node: &NodeAddress,
        seen: &mut BTreeSet<NodeAddress>,
        out: &mut Vec<&'a CaseNode>,
    ) {
        if !seen.insert(node.clone()) {
            return;
        }
        out.push(&self.nodes[node]);
        for child in self.children_of(node) {
            self.preorder(&child, seen, out);
        }
    }

    /// Derives the case verdict from lint findings computed on this revision.
    ///
    /// `invalid` means structural findings (S-prefixed rules) are present;
    /// `incomplete` means open defeaters or error findings remain; otherwise
    /// the case is `complete`.
    pub fn verdict(&self, findings: &[Finding]) -> Result<Verdict, ModelError> {
        for finding in findings {
            if finding.revision != self.revision {
                return Err(ModelError::StaleFindings {
                    findings: finding.revision,
                    case: self.revision,
                });
            }
        }
        if findings.iter().any(|f| f.is_structural() && f.severity == crate::lint::Severity::Error)
        {
            return Ok(Verdict::Invalid);
        }
        let open_defeater =
            self.nodes.values().any(|n| n.status == Some(DefeaterStatus::Open));
        let error_finding =
            findings.iter().any(|f| f.severity == crate::lint::Severity::Error);
        if open_defeater || error_finding {
            return Ok(Verdict::Incomplete);
        }
        Ok(Verdict::Complete)
    }

    /// Internal hook for mutation ops in other modules: clone with +1 revision.
    pub(crate) fn next_revision(&self) -> SafetyCase {
        let mut next = self.clone();
        next.revision += 1;
        next
    }

    pub(crate) fn node_mut(&mut self, address: &NodeAddress) -> Option<&mut CaseNode> {
        self.nodes.get_mut(address)
    }

    pub(crate) fn insert_raw(&mut self, node: CaseNode) {
        self.nodes.insert(node.address.clone(), node);
    }

    pub(crate) fn insert_support_edge(&mut self, from: NodeAddress, to: NodeAddress) {
        self.support_edges.insert((from, to));
    }

    pub(crate) fn insert_child_edge(&mut self, from: NodeAddress, to: NodeAddress) {
        self.child_edges.insert((from, to));
    }

    pub(crate) fn insert_warrant_edge(&mut self, from: NodeAddress, to: NodeAddress) {
        self.warrant_edges.insert((from, to));
    }

    pub(crate) fn insert_defeat_edge(&mut self, from: NodeAddress, to: NodeAddress) {
        self.defeat_edges.insert((from, to));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::address::KindTag;

    fn addr(s: &str) -> NodeAddress {
        s.parse().unwrap()
    }

    fn two_level() -> SafetyCase {
        let case = SafetyCase::new(CaseMeta::new("t"));
        let case = case
            .add_node(CaseNode::claim(addr("C1"), "top").unwrap(), EdgeSpec::none())
            .unwrap();
        let case = case
            .add_node(CaseNode::claim(addr("C1.1"), "sub").unwrap(), EdgeSpec::none())
            .unwrap();
        case.add_node(
            CaseNode::argument(addr("A1"), ArgumentSubtype::Conjunctive, "split").unwrap(),
            EdgeSpec::supports(addr("C1")).with_children(vec![addr("C1.1")]),
        )
        .unwrap()
    }

    #[test]
    fn test_add_node_builds_two_level_case() {
        let case = two_level();
        assert_eq!(case.len(), 3);
        assert_eq!(case.revision(), 3);
        assert_eq!(case.root_claim().unwrap().address, addr("C1"));
    }

    #[test]
    fn test_duplicate_address_rejected() {
        let case = two_level();
        let err = case
            .add_node(CaseNode::claim(addr("C1"), "again").unwrap(), EdgeSpec::none())
            .unwrap_err();
        assert_eq!(err, ModelError::DuplicateAddress(addr("C1")));
    }

    #[test]
    fn test_dangling_defeater_target_rejected() {
        let case = SafetyCase::new(CaseMeta::new("t"));
        let err = case
            .add_node(
                CaseNode::defeater(addr("D1.1-1"), DefeaterOrigin::Reviewer, "doubt").unwrap(),
                EdgeSpec::target(addr("C1.1")),
            )
            .unwrap_err();
        assert_eq!(err, ModelError::UnknownAddress(addr("C1.1")));
    }

    #[test]
    fn test_cycle_rejected() {
        // A1 would make C1 a child of its own supporter.
        let case = SafetyCase::new(CaseMeta::new("t"))
            .add_node(CaseNode::claim(addr("C1"), "top").unwrap(), EdgeSpec::none())
            .unwrap();
        let err = case
            .add_node(
                CaseNode::argument(addr("A1"), ArgumentSubtype::Conjunctive, "loop").unwrap(),
                EdgeSpec::supports(addr("C1")).with_children(vec![addr("C1")]),
            )
            .unwrap_err();
        assert!(matches!(err, ModelError::CycleIntroduced(..)), "{err:?}");
    }

    #[test]
    fn test_evidence_under_plain_argument_rejected() {
        let case = SafetyCase::new(CaseMeta::new("t"))
            .add_node(CaseNode::claim(addr("C1"), "top").unwrap(), EdgeSpec::none())
            .unwrap()
            .add_node(CaseNode::evidence(addr("E1.1"), "data").unwrap(), EdgeSpec::none())
            .unwrap();
        let err = case
            .add_node(
                CaseNode::argument(addr("A1"), ArgumentSubtype::Conjunctive, "bad").unwrap(),
                EdgeSpec::supports(addr("C1")).with_children(vec![addr("E1.1")]),
            )
            .unwrap_err();
        assert!(matches!(err, ModelError::IllegalEdge { .. }), "{err:?}");
    }

    #[test]
    fn test_resolve_rejects_malformed_and_unknown() {
        let case = two_level();
        assert!(matches!(case.resolve("D1-1-1"), Err(ModelError::MalformedAddress(_))));
        assert!(matches!(case.resolve("C9"), Err(ModelError::UnknownAddress(_))));
        assert_eq!(case.resolve("C1").unwrap().text, "top");
    }

    #[test]
    fn test_subtree_single_claim() {
        let case = SafetyCase::new(CaseMeta::new("t"))
            .add_node(CaseNode::claim(addr("C1"), "only").unwrap(), EdgeSpec::none())
            .unwrap();
        let nodes = case.subtree(&addr("C1")).unwrap();
        assert_eq!(nodes.len(), 1);
    }

    #[test]
    fn test_subtree_is_preorder_and_deterministic() {
        let case = two_level();
        let walk: Vec<String> =
            case.subtree(&addr("C1")).unwrap().iter().map(|n| n.address.to_string()).collect();
        assert_eq!(walk, ["C1", "A1", "C1.1"]);
        let again: Vec<String> =
            case.subtree(&addr("C1")).unwrap().iter().map(|n| n.address.to_string()).collect();
        assert_eq!(walk, again);
    }

    #[test]
    fn test_verdict_stale_findings() {
        let case = two_level();
        let finding = Finding::case_level(
            "R10",
            crate::lint::Severity::Warning,
            "old",
            "none",
            case.revision() + 1,
        );
        assert!(matches!(
            case.verdict(&[finding]),
            Err(ModelError::StaleFindings { .. })
        ));
    }

    #[test]
    fn test_verdict_invalid_on_structural_error() {
        let case = two_level();
        let finding = Finding::case_level(
            "S02",
            crate::lint::Severity::Error,
            "dangling",
            "none",
            case.revision(),
        );
        assert_eq!(case.verdict(&[finding]).unwrap(), Verdict::Invalid);
    }

    #[test]
    fn test_verdict_complete_when_quiet() {
        let case = two_level();
        assert_eq!(case.verdict(&[]).unwrap(), Verdict::Complete);
    }

    #[test]
    fn test_verdict_incomplete_with_open_defeater() {
        let case = two_level()
            .add_node(
                CaseNode::defeater(addr("D1-1"), DefeaterOrigin::Reviewer, "doubt").unwrap(),
                EdgeSpec::target(addr("C1")),
            )
            .unwrap();
        assert_eq!(case.verdict(&[]).unwrap(), Verdict::Incomplete);
    }

    #[test]
    fn test_defeater_path_must_match_target() {
        let case = two_level();
        let err = case
            .add_node(
                CaseNode::defeater(addr("D1.2-1"), DefeaterOrigin::Reviewer, "doubt").unwrap(),
                EdgeSpec::target(addr("C1.1")),
            )
            .unwrap_err();
        assert!(matches!(err, ModelError::IllegalEdge { .. }), "{err:?}");
    }

    #[test]
    fn test_node_text_validation() {
        assert!(CaseNode::claim(addr("C1"), "").is_err());
        assert!(CaseNode::claim(addr("C1"), "a\nb").is_err());
        assert!(CaseNode::claim(addr("C1"), " padded ").is_err());
        assert!(CaseNode::claim(NodeAddress::new(KindTag::Claim, vec![1]), "fine").is_ok());
    }
}
