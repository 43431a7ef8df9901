//! The compliance rule catalogue and its evaluation engine.
//!
//! Ten rules, R01–R10, each a pure read-only check over an immutable case
//! snapshot. Severity defaults are chosen so that anything blocking
//! residual-risk acceptance is an error and stylistic issues are warnings;
//! a config can override severity or disable rules entirely. Structural
//! integrity violations — which the parser and builder normally make
//! unrepresentable — surface as S-prefixed findings from
//! [`validate_structure`] and render the verdict `invalid`.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::address::NodeAddress;
use crate::model::{ArgumentSubtype, CaseKind, NodeKind, SafetyCase};
use crate::risk::{criticality, CriticalityRating};
use crate::threat::RiskPathway;

/// Finding severity, ordered so `Error` is the most severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl Severity {
    pub fn keyword(self) -> &'static str {
        match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        }
    }
}

impl FromStr for Severity {
    type Err = String;

    fn from_str(s: &str) -> Result<Severity, String> {
        match s {
            "info" => Ok(Severity::Info),
            "warning" => Ok(Severity::Warning),
            "error" => Ok(Severity::Error),
            other => Err(format!("unknown severity {other:?}")),
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// One lint finding. Serializes with the fixed key order of the
/// `caselint/1` report schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub rule_id: String,
    pub severity: Severity,
    /// The node the finding anchors to, or `None` for case-level findings.
    pub node: Option<NodeAddress>,
    pub message: String,
    pub remediation: String,
    /// Case revision the finding was computed against.
    pub revision: u64,
}

impl Finding {
    pub fn new(
        rule_id: &str,
        severity: Severity,
        node: NodeAddress,
        message: &str,
        remediation: &str,
        revision: u64,
    ) -> Finding {
        Finding {
            rule_id: rule_id.to_string(),
            severity,
            node: Some(node),
            message: message.to_string(),
            remediation: remediation.to_string(),
            revision,
        }
    }

    pub fn case_level(
        rule_id: &str,
        severity: Severity,
        message: &str,
        remediation: &str,
        revision: u64,
    ) -> Finding {
        Finding {
            rule_id: rule_id.to_string(),
            severity,
            node: None,
            message: message.to_string(),
            remediation: remediation.to_string(),
            revision,
        }
    }

    /// Structural findings (S-prefixed) mark a malformed graph rather than a
    /// content problem; they drive the `invalid` verdict.
    pub fn is_structural(&self) -> bool {
        self.rule_id.starts_with('S')
    }

    /// One-line rendering: `<severity> <rule_id> <address>: <message>`.
    pub fn render_line(&self) -> String {
        let location = match &self.node {
            Some(address) => address.to_string(),
            None => "case".to_string(),
        };
        format!("{} {} {}: {}", self.severity, self.rule_id, location, self.message)
    }
}

fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| {
        (&a.node, &a.rule_id, &a.message).cmp(&(&b.node, &b.rule_id, &b.message))
    });
}

/// Static description of one rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RuleDescriptor {
    pub rule_id: &'static str,
    pub title: &'static str,
    pub default_severity: Severity,
    /// The guidance sentence the rule operationalises.
    pub rationale: &'static str,
    pub enabled: bool,
}

const CATALOGUE: [RuleDescriptor; 10] = [
    RuleDescriptor {
        rule_id: "R01",
        title: "incomplete-top-claim",
        default_severity: Severity::Error,
        rationale: "The top-level claim is underspecified: a reviewable case pins down the \
                    assured property with a concrete harm threshold, the system, the \
                    environment of use, the validity window, and the purpose the case serves.",
        enabled: true,
    },
    RuleDescriptor {
        rule_id: "R02",
        title: "disjunctive-argument",
        default_severity: Severity::Warning,
        rationale: "Disjunctive arguments are discouraged in CAE guidance for safety cases: \
                    each branch tends to be weaker than the conjunction a reviewer expects. \
                    Counter-cases are exempt — there, any single sufficiently strong argument \
                    is enough by design.",
        enabled: true,
    },
    RuleDescriptor {
        rule_id: "R03",
        title: "undefined-term",
        default_severity: Severity::Error,
        rationale: "Load-bearing terms that are not precisely defined require side claims; \
                    until the glossary pins them down, the claim's meaning floats.",
        enabled: true,
    },
    RuleDescriptor {
        rule_id: "R04",
        title: "missing-side-warrant",
        default_severity: Severity::Warning,
        rationale: "Arguments require side-warrants: a justification that the decomposition \
                    itself is complete and non-interacting, separate from the subclaims.",
        enabled: true,
    },
    RuleDescriptor {
        rule_id: "R05",
        title: "unresolved-defeater",
        default_severity: Severity::Error,
        rationale: "If a safety case has unmitigated defeaters then the residual risks cannot \
                    be accepted; remaining defeaters should represent residual doubts for \
                    which a risk assessment has been made, communicated, and accepted.",
        enabled: true,
    },
    RuleDescriptor {
        rule_id: "R06",
        title: "direct-evidence-attachment",
        default_severity: Severity::Error,
        rationale: "Evidence attached directly to claims without an intervening argument \
                    leaves the reasoning implicit; an evidence-incorporation step should say \
                    why the evidence supports the claim.",
        enabled: true,
    },
    RuleDescriptor {
        rule_id: "R07",
        title: "undeveloped-leaf-claim",
        default_severity: Severity::Warning,
        rationale: "A leaf claim with neither a supporting argument nor incorporated evidence \
                    is a promissory note, not an argument.",
        enabled: true,
    },
    RuleDescriptor {
        rule_id: "R08",
        title: "pathway-coverage",
        default_severity: Severity::Error,
        rationale: "If credible pathways to severe harm exist that no claim covers, the \
                    theoretical foundation of the case is weakened; coverage must be \
                    demonstrated against a registered threat model.",
        enabled: true,
    },
    RuleDescriptor {
        rule_id: "R09",
        title: "missing-artifact",
        default_severity: Severity::Error,
        rationale: "Define the system, identify what can go wrong, and set targets for how \
                    safe it must be: the artifacts required scale with the criticality of \
                    the case.",
        enabled: true,
    },
    RuleDescriptor {
        rule_id: "R10",
        title: "missing-validity-boundaries",
        default_severity: Severity::Warning,
        rationale: "A validity window needs re-evaluation triggers and explicit validity \
                    boundaries: the conditions under which the safety case ceases to hold.",
        enabled: true,
    },
];

/// The registered rule catalogue, R01–R10.
pub fn catalogue() -> &'static [RuleDescriptor] {
    &CATALOGUE
}

/// Long-form description of one rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleExplanation {
    pub descriptor: RuleDescriptor,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LintError {
    #[error("unknown rule id {0:?}")]
    UnknownRuleId(String),
}

/// Looks a rule up and renders its stable long-form description, including
/// the guidance sentence it operationalises.
pub fn explain(rule_id: &str) -> Result<RuleExplanation, LintError> {
    let descriptor = CATALOGUE
        .iter()
        .find(|d| d.rule_id == rule_id)
        .copied()
        .ok_or_else(|| LintError::UnknownRuleId(rule_id.to_string()))?;
    let description = format!(
        "{} ({}, default severity {}): {}",
        descriptor.rule_id, descriptor.title, descriptor.default_severity, descriptor.rationale
    );
    Ok(RuleExplanation { descriptor, description })
}

/// Rule enablement and severity overrides, plus the optional threat model
/// that switches rule R08 on.
#[derive(Debug, Clone, Default)]
pub struct LintConfig {
    pub enabled: BTreeMap<String, bool>,
    pub severities: BTreeMap<String, Severity>,
    pub threat_model: Option<Vec<RiskPathway>>,
    /// Number of worker threads for rule evaluation; 0 or 1 runs serially.
    /// Output is identical at any setting.
    pub jobs: usize,
}

impl LintConfig {
    pub fn disable(mut self, rule_id: &str) -> LintConfig {
        self.enabled.insert(rule_id.to_string(), false);
        self
    }

    pub fn severity(mut self, rule_id: &str, severity: Severity) -> LintConfig {
        self.severities.insert(rule_id.to_string(), severity);
        self
    }

    pub fn with_threat_model(mut self, pathways: Vec<RiskPathway>) -> LintConfig {
        self.threat_model = Some(pathways);
        self
    }

    fn validate(&self) -> Result<(), LintError> {
        for key in self.enabled.keys().chain(self.severities.keys()) {
            if !CATALOGUE.iter().any(|d| d.rule_id == key) {
                return Err(LintError::UnknownRuleId(key.clone()));
            }
        }
        Ok(())
    }

    fn is_enabled(&self, rule_id: &str) -> bool {
        self.enabled.get(rule_id).copied().unwrap_or(true)
    }
}

/// Runs every enabled rule and returns findings sorted by (node, rule,
/// message). Pure function of (case, config).
pub fn lint(case: &SafetyCase, config: &LintConfig) -> Result<Vec<Finding>, LintError> {
    config.validate()?;

    // The criticality rating feeds R09 and the mandatory-severity floor.
    let rating: Option<CriticalityRating> = case.meta().criticality.map(criticality);

    let rules: Vec<(&'static str, RuleFn)> = vec![
        ("R01", rule_r01),
        ("R02", rule_r02),
        ("R03", rule_r03),
        ("R04", rule_r04),
        ("R05", rule_r05),
        ("R06", rule_r06),
        ("R07", rule_r07),
        ("R08", rule_r08),
        ("R09", rule_r09),
        ("R10", rule_r10),
    ];
    let enabled: Vec<&(&'static str, RuleFn)> =
        rules.iter().filter(|(id, _)| config.is_enabled(id)).collect();

    let context = RuleContext { case, config, rating: rating.as_ref() };
    let jobs = config.jobs.max(1).min(enabled.len().max(1));

    let mut findings: Vec<Finding> = if jobs <= 1 {
        enabled.iter().flat_map(|(_, rule)| rule(&context)).collect()
    } else {
        // Chunk the rule list across scoped threads; collect per-rule results
        // in catalogue order so the merge is independent of scheduling.
        let mut per_rule: Vec<Vec<Finding>> = vec![Vec::new(); enabled.len()];
        let chunk_size = enabled.len().div_ceil(jobs);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for (chunk_index, chunk) in enabled.chunks(chunk_size).enumerate() {
                let context = &context;
                handles.push((
                    chunk_index,
                    scope.spawn(move || {
                        chunk.iter().map(|(_, rule)| rule(context)).collect::<Vec<_>>()
                    }),
                ));
            }
            for (chunk_index, handle) in handles {
                let results = handle.join().expect("lint worker panicked");
                for (offset, result) in results.into_iter().enumerate() {
                    per_rule[chunk_index * chunk_size + offset] = result;
                }
            }
        });
        per_rule.into_iter().flatten().collect()
    };

    // Severity overrides, then the rigour floor: at sufficient criticality
    // some rules may not report below error.
    for finding in &mut findings {
        if let Some(&severity) = config.severities.get(&finding.rule_id) {
            finding.severity = severity;
        }
        if let Some(rating) = &rating {
            if rating.rigour.mandatory_error_rules.contains(finding.rule_id.as_str()) {
                finding.severity = finding.severity.max(Severity::Error);
            }
        }
    }

    let mut structural = validate_structure(case);
    findings.append(&mut structural);
    sort_findings(&mut findings);
    Ok(findings)
}

struct RuleContext<'a> {
    case: &'a SafetyCase,
    config: &'a LintConfig,
    rating: Option<&'a CriticalityRating>,
}

type RuleFn = fn(&RuleContext) -> Vec<Finding>;

fn rule_r01(ctx: &RuleContext) -> Vec<Finding> {
    let case = ctx.case;
    let meta = case.meta();
    let revision = case.revision();
    let node = case.root_claim().map(|n| n.address.clone());
    let mut missing: Vec<(&str, &str)> = Vec::new();
    let threshold_missing =
        meta.harm_threshold.as_ref().map(|t| !t.quantified()).unwrap_or(true);
    if meta.assured_property.is_none() || threshold_missing {
        missing.push((
            "no assured property with a quantified harm threshold",
            "state the assured property and set economic/fatality/casualty floors for severe harm",
        ));
    }
    if meta.system_model_ref.is_none() {
        missing.push((
            "no system model reference",
            "reference a system definition covering components, boundaries and interfaces",
        ));
    }
    if meta.environment_ref.is_none() {
        missing.push((
            "no environment reference",
            "reference a description of the deployment environment the claim is scoped to",
        ));
    }
    if meta.validity.is_none() {
        missing.push((
            "no validity window",
            "state when the case was issued and when or under what conditions it expires",
        ));
    }
    if meta.purpose.is_none() {
        missing.push((
            "no stated purpose",
            "say what decision this case supports and for whom",
        ));
    }
    missing
        .into_iter()
        .map(|(problem, remedy)| {
            let message = format!("top-level claim is underspecified: {problem}");
            match &node {
                Some(address) => Finding::new(
                    "R01",
                    Severity::Error,
                    address.clone(),
                    &message,
                    remedy,
                    revision,
                ),
                None => Finding::case_level("R01", Severity::Error, &message, remedy, revision),
            }
        })
        .collect()
}

fn rule_r02(ctx: &RuleContext) -> Vec<Finding> {
    let case = ctx.case;
    if case.meta().case_kind == CaseKind::CounterCase {
        return Vec::new();
    }
    case.nodes()
        .filter(|n| n.argument_subtype == Some(ArgumentSubtype::Disjunctive))
        .map(|n| {
            Finding::new(
                "R02",
                Severity::Warning,
                n.address.clone(),
                "disjunctive argument in a safety case",
                "convert to a conjunctive decomposition, or justify why one branch suffices",
                case.revision(),
            )
        })
        .collect()
}

fn rule_r03(ctx: &RuleContext) -> Vec<Finding> {
    let case = ctx.case;
    let glossary = &case.meta().glossary;
    let mut findings = Vec::new();
    for node in case.nodes() {
        for term in &node.terms {
            if !glossary.contains_key(term) {
                findings.push(Finding::new(
                    "R03",
                    Severity::Error,
                    node.address.clone(),
                    &format!("term \"{term}\" is not defined in the glossary"),
                    "add a glossary entry or a side claim pinning the term down",
                    case.revision(),
                ));
            }
        }
    }
    findings
}

fn rule_r04(ctx: &RuleContext) -> Vec<Finding> {
    let case = ctx.case;
    let warranted: BTreeSet<&NodeAddress> =
        case.warrant_edges().map(|(argument, _)| argument).collect();
    case.nodes()
        .filter(|n| n.kind == NodeKind::ArgumentStep && !warranted.contains(&n.address))
        .map(|n| {
            Finding::new(
                "R04",
                Severity::Warning,
                n.address.clone(),
                "argument step has no side-warrant",
                "add a side-warrant justifying that the decomposition is complete and sound",
                case.revision(),
            )
        })
        .collect()
}

fn rule_r05(ctx: &RuleContext) -> Vec<Finding> {
    use crate::defeater::DefeaterStatus;
    let case = ctx.case;
    let mut findings = Vec::new();
    for node in case.nodes().filter(|n| n.kind == NodeKind::Defeater) {
        match node.status {
            Some(DefeaterStatus::Open) | None => {
                findings.push(Finding::new(
                    "R05",
                    Severity::Error,
                    node.address.clone(),
                    "defeater is unresolved",
                    "mitigate the defeater, or accept it with an explicit risk assessment",
                    case.revision(),
                ));
            }
            Some(DefeaterStatus::AcceptedWithRiskAssessment)
                if node.risk_assessment_ref.is_none() =>
            {
                findings.push(Finding::new(
                    "R05",
                    Severity::Error,
                    node.address.clone(),
                    "defeater accepted without a risk-assessment reference",
                    "reference the documented risk assessment that justified acceptance",
                    case.revision(),
                ));
            }
            _ => {}
        }
    }
    findings
}

fn rule_r06(ctx: &RuleContext) -> Vec<Finding> {
    let case = ctx.case;
    let mut findings = Vec::new();
    for node in case.nodes().filter(|n| n.kind == NodeKind::Evidence) {
        // Parse-relaxed direct attachment: the evidence itself supports a claim.
        for (source, claim) in case.support_edges() {
            if *source == node.address {
                findings.push(Finding::new(
                    "R06",
                    Severity::Error,
                    claim.clone(),
                    &format!("evidence {} is attached directly to the claim", node.address),
                    "insert an evidence-incorporation argument explaining why the evidence \
                     supports the claim",
                    case.revision(),
                ));
            }
        }
        // Evidence under an argument of the wrong subtype.
        for (argument, child) in case.child_edges() {
            if *child != node.address {
                continue;
            }
            let subtype = case.node(argument).and_then(|n| n.argument_subtype);
            if subtype != Some(ArgumentSubtype::EvidenceIncorporation) {
                findings.push(Finding::new(
                    "R06",
                    Severity::Error,
                    argument.clone(),
                    &format!(
                        "evidence {} sits under an argument that is not an \
                         evidence-incorporation step",
                        node.address
                    ),
                    "move the evidence under an evidence-incorporation argument",
                    case.revision(),
                ));
            }
        }
    }
    findings
}

fn rule_r07(ctx: &RuleContext) -> Vec<Finding> {
    let case = ctx.case;
    let supported: BTreeSet<&NodeAddress> =
        case.support_edges().map(|(_, claim)| claim).collect();
    case.nodes()
        .filter(|n| n.kind == NodeKind::Claim && !supported.contains(&n.address))
        .map(|n| {
            Finding::new(
                "R07",
                Severity::Warning,
                n.address.clone(),
                "leaf claim is undeveloped: no supporting argument or evidence",
                "develop the claim with an argument step, or incorporate evidence for it",
                case.revision(),
            )
        })
        .collect()
}

fn rule_r08(ctx: &RuleContext) -> Vec<Finding> {
    match &ctx.config.threat_model {
        // Dangling covered_by references are caught before lint runs (the CLI
        // resolves the threat model first), so surfacing them as empty here
        // keeps the rule total.
        Some(pathways) => {
            crate::threat::coverage_check(ctx.case, pathways).unwrap_or_default()
        }
        None => Vec::new(),
    }
}

fn rule_r09(ctx: &RuleContext) -> Vec<Finding> {
    let case = ctx.case;
    let Some(rating) = ctx.rating else {
        return Vec::new();
    };
    // Severity scales with the rating: info at low, warning at medium,
    // error from high up.
    let severity = match rating.level {
        crate::risk::CriticalityLevel::Low => Severity::Info,
        crate::risk::CriticalityLevel::Medium => Severity::Warning,
        _ => Severity::Error,
    };
    rating
        .rigour
        .required_artifacts
        .iter()
        .filter(|artifact| !case.artifacts().contains(artifact))
        .map(|artifact| {
            Finding::case_level(
                "R09",
                severity,
                &format!(
                    "criticality {} requires artifact {} which the case does not declare",
                    rating.level, artifact
                ),
                "produce the artifact and declare it with an artifact: line",
                case.revision(),
            )
        })
        .collect()
}

fn rule_r10(ctx: &RuleContext) -> Vec<Finding> {
    let case = ctx.case;
    let Some(validity) = &case.meta().validity else {
        return Vec::new(); // No window at all is R01's business.
    };
    let mut missing = Vec::new();
    if validity.reevaluation_triggers.is_empty() {
        missing.push("re-evaluation triggers");
    }
    if validity.validity_boundaries.is_empty() {
        missing.push("validity boundaries");
    }
    if missing.is_empty() {
        return Vec::new();
    }
    vec![Finding::case_level(
        "R10",
        Severity::Warning,
        &format!("validity window lacks {}", missing.join(" and ")),
        "state the events that force re-evaluation and the conditions outside which the case \
         does not hold",
        case.revision(),
    )]
}

/// Checks the structural invariants that the parser and builder normally
/// enforce. Findings use S-prefixed rule ids and render the verdict
/// `invalid`; on any normally constructed case this returns nothing.
pub fn validate_structure(case: &SafetyCase) -> Vec<Finding> {
    let mut findings = Vec::new();
    let revision = case.revision();

    let mut push = |message: String| {
        findings.push(Finding::case_level(
            "S02",
            Severity::Error,
            &message,
            "repair the case graph",
            revision,
        ));
    };
    for (from, to) in case
        .support_edges()
        .chain(case.child_edges())
        .chain(case.warrant_edges())
        .chain(case.defeat_edges())
    {
        if case.node(from).is_none() {
            push(format!("edge source {from} does not exist"));
        }
        if case.node(to).is_none() {
            push(format!("edge target {to} does not exist"));
        }
    }

    // Cycle detection over the claim/argument/evidence subgraph.
    if has_cycle(case) {
        findings.push(Finding::case_level(
            "S03",
            Severity::Error,
            "the claim/argument/evidence graph contains a cycle",
            "break the cycle; support must flow strictly downward",
            revision,
        ));
    }

    // Exactly one root claim.
    if !case.is_empty() {
        let children: BTreeSet<&NodeAddress> =
            case.child_edges().map(|(_, child)| child).collect();
        let roots: Vec<&NodeAddress> = case
            .nodes()
            .filter(|n| n.kind == NodeKind::Claim && !children.contains(&n.address))
            .map(|n| &n.address)
            .collect();
        if roots.len() != 1 {
            findings.push(Finding::case_level(
                "S04",
                Severity::Error,
                &format!("expected exactly one root claim, found {}", roots.len()),
                "ensure every claim but the top one is the child of an argument",
                revision,
            ));
        }
    }

    // Argument shape: exactly one parent, at least one child.
    for node in case.nodes().filter(|n| n.kind == NodeKind::ArgumentStep) {
        let parents = case.support_edges().filter(|(argument, _)| *argument == node.address).count();
        let children = case.child_edges().filter(|(argument, _)| *argument == node.address).count();
        if parents != 1 || children == 0 {
            findings.push(Finding::new(
                "S05",
                Severity::Error,
                node.address.clone(),
                &format!("argument step has {parents} parent claims and {children} children"),
                "an argument supports exactly one claim and develops at least one child",
                revision,
            ));
        }
    }

    sort_findings(&mut findings);
    findings
}

fn has_cycle(case: &SafetyCase) -> bool {
    // Kahn's algorithm over parent-claim → argument → child edges.
    let mut indegree: BTreeMap<&NodeAddress, usize> = BTreeMap::new();
    let mut edges: Vec<(&NodeAddress, &NodeAddress)> = Vec::new();
    for node in case.nodes().filter(|n| {
        matches!(n.kind, NodeKind::Claim | NodeKind::ArgumentStep | NodeKind::Evidence)
    }) {
        indegree.entry(&node.address).or_insert(0);
    }
    for (argument, parent) in case.support_edges() {
        if indegree.contains_key(parent) && indegree.contains_key(argument) {
            edges.push((parent, argument));
        }
    }
    for (argument, child) in case.child_edges() {
        if indegree.contains_key(argument) && indegree.contains_key(child) {
            edges.push((argument, child));
        }
    }
    for (_, to) in &edges {
        *indegree.get_mut(to).expect("endpoint registered") += 1;
    }
    let mut queue: Vec<&NodeAddress> =
        indegree.iter().filter(|(_, &d)| d == 0).map(|(&a, _)| a).collect();
    let mut visited = 0usize;
    while let Some(current) = queue.pop() {
        visited += 1;
        for (from, to) in &edges {
            if *from == current {
                let d = indegree.get_mut(to).expect("endpoint registered");
                *d -= 1;
                if *d == 0 {
                    queue.push(to);
                }
            }
        }
    }
    visited < indegree.len()
}

/// JSON report document: `{"schema": "caselint/1", "findings": [...]}` with
/// fixed key order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonReport {
    pub schema: String,
    pub findings: Vec<Finding>,
}

pub const REPORT_SCHEMA: &str = "caselint/1";

/// Serializes findings as the versioned JSON report.
pub fn to_json_report(findings: &[Finding]) -> String {
    let report = JsonReport { schema: REPORT_SCHEMA.to_string(), findings: findings.to_vec() };
    let mut out = serde_json::to_string_pretty(&report).expect("findings serialize");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defeater::DefeaterOrigin;
    use crate::model::{CaseMeta, CaseNode, EdgeSpec, HarmThreshold, ValidityWindow};

    fn addr(s: &str) -> NodeAddress {
        s.parse().unwrap()
    }

    fn full_meta() -> CaseMeta {
        let mut meta = CaseMeta::new("m");
        meta.assured_property = Some("no severe harm".to_string());
        meta.harm_threshold = Some(HarmThreshold {
            economic_usd: Some(1e9),
            fatalities: Some(100),
            casualties: Some(1000),
            scope_note: None,
        });
        meta.purpose = Some("internal deployment decision".to_string());
        meta.system_model_ref = Some("SYS-1".to_string());
        meta.environment_ref = Some("ENV-1".to_string());
        meta.validity = Some(ValidityWindow {
            issued: chrono::NaiveDate::from_ymd_opt(2026, 1, 1).unwrap(),
            expires: None,
            reevaluation_triggers: vec!["major model update".to_string()],
            validity_boundaries: vec!["internal deployment only".to_string()],
        });
        meta
    }

    /// One claim, one evidence-incorporation argument, evidence, warrant,
    /// complete meta: lints clean.
    fn minimal_complete() -> SafetyCase {
        SafetyCase::new(full_meta())
            .add_node(CaseNode::claim(addr("C1"), "the system is safe").unwrap(), EdgeSpec::none())
            .unwrap()
            .add_node(CaseNode::evidence(addr("E1.1"), "test results").unwrap(), EdgeSpec::none())
            .unwrap()
            .add_node(
                CaseNode::side_warrant(addr("W1.1"), "results cover the whole envelope").unwrap(),
                EdgeSpec::none(),
            )
            .unwrap()
            .add_node(
                CaseNode::argument(
                    addr("A1"),
                    ArgumentSubtype::EvidenceIncorporation,
                    "the tests exercise the safety property directly",
                )
                .unwrap(),
                EdgeSpec::supports(addr("C1"))
                    .with_children(vec![addr("E1.1")])
                    .with_warrants(vec![addr("W1.1")]),
            )
            .unwrap()
    }

    #[test]
    fn test_minimal_complete_case_lints_clean() {
        let case = minimal_complete();
        let findings = lint(&case, &LintConfig::default()).unwrap();
        assert_eq!(findings, Vec::new());
        assert_eq!(case.verdict(&findings).unwrap(), crate::model::Verdict::Complete);
    }

    #[test]
    fn test_r01_counts_missing_facets() {
        let case = SafetyCase::new(CaseMeta::new("m"))
            .add_node(CaseNode::claim(addr("C1"), "top").unwrap(), EdgeSpec::none())
            .unwrap();
        let findings = lint(&case, &LintConfig::default()).unwrap();
        let r01 = findings.iter().filter(|f| f.rule_id == "R01").count();
        assert_eq!(r01, 5);
    }

    #[test]
    fn test_r02_exempts_counter_cases() {
        let mut meta = full_meta();
        let safety = SafetyCase::new(meta.clone())
            .add_node(CaseNode::claim(addr("C1"), "top").unwrap(), EdgeSpec::none())
            .unwrap()
            .add_node(CaseNode::claim(addr("C1.1"), "branch").unwrap(), EdgeSpec::none())
            .unwrap()
            .add_node(
                CaseNode::argument(addr("A1"), ArgumentSubtype::Disjunctive, "either way")
                    .unwrap(),
                EdgeSpec::supports(addr("C1")).with_children(vec![addr("C1.1")]),
            )
            .unwrap();
        let findings = lint(&safety, &LintConfig::default()).unwrap();
        assert!(findings.iter().any(|f| f.rule_id == "R02" && f.node == Some(addr("A1"))));

        meta.case_kind = CaseKind::CounterCase;
        let counter = safety.clone().with_meta(meta).next_revision();
        let findings = lint(&counter, &LintConfig::default()).unwrap();
        assert!(!findings.iter().any(|f| f.rule_id == "R02"));
    }

    #[test]
    fn test_r03_fires_per_undefined_term() {
        let mut meta = full_meta();
        meta.glossary.insert("defined".to_string(), "has a definition".to_string());
        let case = SafetyCase::new(meta)
            .add_node(
                CaseNode::claim(addr("C1"), "top")
                    .unwrap()
                    .with_terms(["defined", "floating"])
                    .unwrap(),
                EdgeSpec::none(),
            )
            .unwrap();
        let findings = lint(&case, &LintConfig::default()).unwrap();
        let r03: Vec<&Finding> = findings.iter().filter(|f| f.rule_id == "R03").collect();
        assert_eq!(r03.len(), 1);
        assert!(r03[0].message.contains("\"floating\""));
    }

    #[test]
    fn test_r05_accepted_without_reference_fires() {
        let case = minimal_complete();
        let (case, d) = case
            .attach_defeater(&addr("C1"), DefeaterOrigin::Reviewer, "doubt")
            .unwrap();
        // Forge the relaxed form a file could carry: accepted, no reference.
        let mut forged = case.next_revision();
        {
            let node = forged.node_mut(&d).unwrap();
            node.status = Some(crate::defeater::DefeaterStatus::AcceptedWithRiskAssessment);
        }
        let findings = lint(&forged, &LintConfig::default()).unwrap();
        assert!(findings
            .iter()
            .any(|f| f.rule_id == "R05" && f.message.contains("without a risk-assessment")));
    }

    #[test]
    fn test_rule_independence_disabling_removes_exactly_that_rule() {
        let case = SafetyCase::new(CaseMeta::new("m"))
            .add_node(CaseNode::claim(addr("C1"), "top").unwrap(), EdgeSpec::none())
            .unwrap();
        let all = lint(&case, &LintConfig::default()).unwrap();
        let without_r01 = lint(&case, &LintConfig::default().disable("R01")).unwrap();
        let expected: Vec<Finding> =
            all.iter().filter(|f| f.rule_id != "R01").cloned().collect();
        assert_eq!(without_r01, expected);
    }

    #[test]
    fn test_unknown_rule_id_rejected() {
        let case = minimal_complete();
        let err = lint(&case, &LintConfig::default().disable("R99")).unwrap_err();
        assert_eq!(err, LintError::UnknownRuleId("R99".to_string()));
        assert!(explain("R99").is_err());
    }

    #[test]
    fn test_explain_quotes_guidance() {
        let explanation = explain("R05").unwrap();
        assert!(explanation.description.contains("residual risks cannot be accepted"));
        let explanation = explain("R02").unwrap();
        assert!(explanation.description.contains("Disjunctive arguments are discouraged"));
    }

    #[test]
    fn test_determinism_and_parallel_equivalence() {
        let case = SafetyCase::new(CaseMeta::new("m"))
            .add_node(CaseNode::claim(addr("C1"), "top").unwrap(), EdgeSpec::none())
            .unwrap();
        let serial = lint(&case, &LintConfig::default()).unwrap();
        for jobs in [2, 3, 8] {
            let parallel = lint(&case, &LintConfig { jobs, ..LintConfig::default() }).unwrap();
            assert_eq!(serial, parallel, "jobs = {jobs}");
        }
    }

    #[test]
    fn test_severity_override_applies() {
        let case = SafetyCase::new(full_meta())
            .add_node(CaseNode::claim(addr("C1"), "top").unwrap(), EdgeSpec::none())
            .unwrap();
        let config = LintConfig::default().severity("R07", Severity::Error);
        let findings = lint(&case, &config).unwrap();
        let r07 = findings.iter().find(|f| f.rule_id == "R07").unwrap();
        assert_eq!(r07.severity, Severity::Error);
    }

    #[test]
    fn test_mandatory_floor_at_critical() {
        use crate::risk::{CriticalityInput, Grade};
        let mut meta = full_meta();
        meta.criticality =
            Some(CriticalityInput::new(Grade::High, Grade::High, Grade::Low));
        if let Some(validity) = meta.validity.as_mut() {
            validity.reevaluation_triggers.clear();
            validity.validity_boundaries.clear();
        }
        // Critical rigour: R10 may not be downgraded below error, while R04
        // stays subject to ordinary overrides.
        let case = SafetyCase::new(meta)
            .add_node(CaseNode::claim(addr("C1"), "top").unwrap(), EdgeSpec::none())
            .unwrap()
            .add_node(CaseNode::claim(addr("C1.1"), "sub").unwrap(), EdgeSpec::none())
            .unwrap()
            .add_node(
                CaseNode::argument(addr("A1"), ArgumentSubtype::Conjunctive, "split").unwrap(),
                EdgeSpec::supports(addr("C1")).with_children(vec![addr("C1.1")]),
            )
            .unwrap();
        let config = LintConfig::default()
            .severity("R10", Severity::Info)
            .severity("R04", Severity::Info);
        let findings = lint(&case, &config).unwrap();
        let r10 = findings.iter().find(|f| f.rule_id == "R10").unwrap();
        assert_eq!(r10.severity, Severity::Error);
        let r04 = findings.iter().find(|f| f.rule_id == "R04").unwrap();
        assert_eq!(r04.severity, Severity::Info);
        // R09 fires at error for the undeclared artifacts.
        assert_eq!(findings.iter().filter(|f| f.rule_id == "R09").count(), 7);
    }

    #[test]
    fn test_validate_structure_empty_on_built_case() {
        assert_eq!(validate_structure(&minimal_complete()), Vec::new());
    }

    #[test]
    fn test_json_report_shape() {
        let case = SafetyCase::new(CaseMeta::new("m"))
            .add_node(CaseNode::claim(addr("C1"), "top").unwrap(), EdgeSpec::none())
            .unwrap();
        let findings = lint(&case, &LintConfig::default()).unwrap();
        let json = to_json_report(&findings);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["schema"], "caselint/1");
        assert!(value["findings"].as_array().is_some_and(|a| !a.is_empty()));
        // Key order is part of the schema; `Value` re-sorts, so check the text.
        let offsets: Vec<usize> =
            ["\"rule_id\"", "\"severity\"", "\"node\"", "\"message\"", "\"remediation\"", "\"revision\""]
                .iter()
                .map(|key| json.find(key).unwrap())
                .collect();
        assert!(offsets.windows(2).all(|w| w[0] < w[1]), "keys out of order: {offsets:?}");
    }

    #[test]
    fn test_render_line_format() {
        let finding = Finding::new("R05", Severity::Error, addr("D1-1"), "defeater is unresolved", "fix", 0);
        assert_eq!(finding.render_line(), "error R05 D1-1: defeater is unresolved");
    }
}
