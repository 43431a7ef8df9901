//! Risk pathways, the system-component taxonomy, pathway-to-claim coverage,
//! and capability-gap analysis.
//!
//! An inability argument ("the model lacks capability X, therefore no severe
//! harm") is only as strong as the claim that *every* credible route to harm
//! needs X. The pathway registry makes that checkable: each pathway lists the
//! capabilities it strictly needs, the ones that merely help, which system
//! components it runs through, and which claim of the case covers it.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::address::NodeAddress;
use crate::lint::{Finding, Severity};
use crate::model::SafetyCase;

/// The eleven-component socio-technical deployment model, grouped in four
/// layers. Capability evaluations usually exercise only SM5; harm flows
/// through the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ComponentId {
    SM1,
    SM2,
    SM3,
    SM4,
    SM5,
    SM6,
    SM7,
    SM8,
    SM9,
    SM10,
    SM11,
}

impl ComponentId {
    pub const ALL: [ComponentId; 11] = [
        ComponentId::SM1,
        ComponentId::SM2,
        ComponentId::SM3,
        ComponentId::SM4,
        ComponentId::SM5,
        ComponentId::SM6,
        ComponentId::SM7,
        ComponentId::SM8,
        ComponentId::SM9,
        ComponentId::SM10,
        ComponentId::SM11,
    ];
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ComponentId {
    type Err = String;

    fn from_str(s: &str) -> Result<ComponentId, String> {
        ComponentId::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| format!("unknown component {s:?} (expected SM1..SM11)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    HumanGovernance,
    Orchestration,
    Inference,
    ControlExecution,
}

/// One component of the deployment system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SystemComponent {
    pub id: ComponentId,
    pub layer: Layer,
    pub name: &'static str,
}

/// The shipped taxonomy: eleven components in four layers.
pub fn taxonomy() -> &'static [SystemComponent; 11] {
    use ComponentId::*;
    use Layer::*;
    &[
        SystemComponent { id: SM1, layer: HumanGovernance, name: "Developer (task originator)" },
        SystemComponent { id: SM2, layer: HumanGovernance, name: "Reviewer (approval authority)" },
        SystemComponent { id: SM3, layer: Orchestration, name: "Agent/scaffold orchestrator" },
        SystemComponent { id: SM4, layer: Orchestration, name: "Prompt & context assembly" },
        SystemComponent { id: SM5, layer: Inference, name: "LLM core" },
        SystemComponent { id: SM6, layer: Orchestration, name: "Memory & state store" },
        SystemComponent { id: SM7, layer: ControlExecution, name: "Policy & access control" },
        SystemComponent { id: SM8, layer: ControlExecution, name: "Tool gateway" },
        SystemComponent { id: SM9, layer: ControlExecution, name: "Safety monitors" },
        SystemComponent { id: SM10, layer: ControlExecution, name: "Logging" },
        SystemComponent { id: SM11, layer: ControlExecution, name: "Escalation & incident response" },
    ]
}

/// Closed capability vocabulary used by pathways and gap analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    Stealth,
    SituationalAwareness,
    CodeGeneration,
    Cybersecurity,
    LongHorizonPlanning,
    Persuasion,
    Agency,
}

impl Capability {
    pub const ALL: [Capability; 7] = [
        Capability::Stealth,
        Capability::SituationalAwareness,
        Capability::CodeGeneration,
        Capability::Cybersecurity,
        Capability::LongHorizonPlanning,
        Capability::Persuasion,
        Capability::Agency,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Capability::Stealth => "stealth",
            Capability::SituationalAwareness => "situational_awareness",
            Capability::CodeGeneration => "code_generation",
            Capability::Cybersecurity => "cybersecurity",
            Capability::LongHorizonPlanning => "long_horizon_planning",
            Capability::Persuasion => "persuasion",
            Capability::Agency => "agency",
        }
    }
}

impl FromStr for Capability {
    type Err = String;

    fn from_str(s: &str) -> Result<Capability, String> {
        Capability::ALL
            .into_iter()
            .find(|c| c.keyword() == s)
            .ok_or_else(|| format!("unknown capability {s:?}"))
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// The four pathway classes. Precursor pathways weaken defences for a later
/// system; harm-materialisation pathways cause severe harm directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathwayClass {
    /// 1.1 — the model deliberately degrades safety infrastructure.
    PrecursorIntentional,
    /// 1.2 — organisational drift erodes oversight without any intent.
    PrecursorDrift,
    /// 2.1 — the model initiates severe harm autonomously.
    DirectAutonomous,
    /// 2.2 — human error or misuse triggers the harm.
    HumanTriggered,
}

impl PathwayClass {
    pub fn keyword(self) -> &'static str {
        match self {
            PathwayClass::PrecursorIntentional => "precursor_intentional",
            PathwayClass::PrecursorDrift => "precursor_drift",
            PathwayClass::DirectAutonomous => "direct_autonomous",
            PathwayClass::HumanTriggered => "human_triggered",
        }
    }

    /// Short numeric code (1.1, 1.2, 2.1, 2.2).
    pub fn code(self) -> &'static str {
        match self {
            PathwayClass::PrecursorIntentional => "1.1",
            PathwayClass::PrecursorDrift => "1.2",
            PathwayClass::DirectAutonomous => "2.1",
            PathwayClass::HumanTriggered => "2.2",
        }
    }
}

impl FromStr for PathwayClass {
    type Err = String;

    fn from_str(s: &str) -> Result<PathwayClass, String> {
        match s {
            "precursor_intentional" | "1.1" => Ok(PathwayClass::PrecursorIntentional),
            "precursor_drift" | "1.2" => Ok(PathwayClass::PrecursorDrift),
            "direct_autonomous" | "2.1" => Ok(PathwayClass::DirectAutonomous),
            "human_triggered" | "2.2" => Ok(PathwayClass::HumanTriggered),
            other => Err(format!("unknown pathway class {other:?}")),
        }
    }
}

impl fmt::Display for PathwayClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Five-point ordinal plausibility scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plausibility {
    Low,
    LowMedium,
    Medium,
    MediumHigh,
    High,
}

impl Plausibility {
    pub fn keyword(self) -> &'static str {
        match self {
            Plausibility::Low => "low",
            Plausibility::LowMedium => "low_medium",
            Plausibility::Medium => "medium",
            Plausibility::MediumHigh => "medium_high",
            Plausibility::High => "high",
        }
    }
}

impl FromStr for Plausibility {
    type Err = String;

    fn from_str(s: &str) -> Result<Plausibility, String> {
        match s {
            "low" => Ok(Plausibility::Low),
            "low_medium" => Ok(Plausibility::LowMedium),
            "medium" => Ok(Plausibility::Medium),
            "medium_high" => Ok(Plausibility::MediumHigh),
            "high" => Ok(Plausibility::High),
            other => Err(format!("unknown plausibility {other:?}")),
        }
    }
}

impl fmt::Display for Plausibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A route through which the deployed system could cause severe harm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskPathway {
    pub id: String,
    pub class: PathwayClass,
    pub description: String,
    pub necessary_capabilities: BTreeSet<Capability>,
    pub helpful_capabilities: BTreeSet<Capability>,
    pub plausibility: Plausibility,
    pub harm_outcomes: Vec<String>,
    pub components: BTreeSet<ComponentId>,
    /// Claims of the case that address this pathway; empty means uncovered.
    pub covered_by: Vec<NodeAddress>,
    /// Emerging considerations not yet established as pathways; excluded
    /// from coverage checking by default.
    pub speculative: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThreatError {
    #[error("pathway {pathway} covered_by references {reference}, which is not a claim in the case")]
    DanglingClaimReference { pathway: String, reference: NodeAddress },
    #[error("threat model parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One R08 finding per non-speculative pathway no claim covers.
pub fn coverage_check(
    case: &SafetyCase,
    pathways: &[RiskPathway],
) -> Result<Vec<Finding>, ThreatError> {
    let mut findings = Vec::new();
    for pathway in pathways {
        for reference in &pathway.covered_by {
            match case.node(reference) {
                Some(node) if node.kind == crate::model::NodeKind::Claim => {}
                _ => {
                    return Err(ThreatError::DanglingClaimReference {
                        pathway: pathway.id.clone(),
                        reference: reference.clone(),
                    });
                }
            }
        }
        if pathway.speculative {
            continue;
        }
        if pathway.covered_by.is_empty() {
            findings.push(Finding::case_level(
                "R08",
                Severity::Error,
                &format!(
                    "risk pathway '{}' (class {}) is not covered by any claim",
                    pathway.id,
                    pathway.class.keyword()
                ),
                "map the pathway to a claim that addresses it, or argue why it is out of scope",
                case.revision(),
            ));
        }
    }
    Ok(findings)
}

/// Pathways untouched by an inability argument: those whose *necessary*
/// capabilities do not intersect the assumed-absent set. Helpful-only
/// capabilities never kill a pathway.
pub fn capability_gap<'a>(
    pathways: &'a [RiskPathway],
    assumed_absent: &BTreeSet<Capability>,
) -> Vec<&'a RiskPathway> {
    pathways
        .iter()
        .filter(|p| p.necessary_capabilities.is_disjoint(assumed_absent))
        .collect()
}

/// The shipped pathway registry, parsed from the embedded `.threats` file.
pub fn builtin_threat_model() -> &'static [RiskPathway] {
    static MODEL: OnceLock<Vec<RiskPathway>> = OnceLock::new();
    MODEL.get_or_init(|| {
        parse_threats(include_str!("../threats/builtin.threats"))
            .expect("embedded threat model parses")
    })
}

/// Parses a `.threats` document: `pathway <id>` blocks of `key: value` lines.
pub fn parse_threats(input: &str) -> Result<Vec<RiskPathway>, ThreatError> {
    let mut pathways: Vec<RiskPathway> = Vec::new();
    let mut current: Option<(usize, RiskPathway)> = None;
    let mut seen_plausibility = false;

    let err = |line: usize, message: String| ThreatError::Parse { line, message };

    for (index, raw) in input.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim_end();
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }

        if let Some(id) = trimmed.strip_prefix("pathway ") {
            if let Some((start, pathway)) = current.take() {
                if !seen_plausibility {
                    return Err(err(start, format!("pathway {:?} lacks a plausibility", pathway.id)));
                }
                pathways.push(pathway);
            }
            let id = id.trim();
            if id.is_empty() {
                return Err(err(line_no, "pathway needs an id".to_string()));
            }
            if pathways.iter().any(|p| p.id == id) {
                return Err(err(line_no, format!("duplicate pathway id {id:?}")));
            }
            seen_plausibility = false;
            current = Some((
                line_no,
                RiskPathway {
                    id: id.to_string(),
                    class: PathwayClass::DirectAutonomous,
                    description: String::new(),
                    necessary_capabilities: BTreeSet::new(),
                    helpful_capabilities: BTreeSet::new(),
                    plausibility: Plausibility::Low,
                    harm_outcomes: Vec::new(),
                    components: BTreeSet::new(),
                    covered_by: Vec::new(),
                    speculative: false,
                },
            ));
            continue;
        }

        let Some((_, pathway)) = current.as_mut() else {
            return Err(err(line_no, format!("expected 'pathway <id>', found {trimmed:?}")));
        };
        let Some((key, value)) = trimmed.split_once(':') else {
            return Err(err(line_no, format!("expected 'key: value', found {trimmed:?}")));
        };
        let value = value.trim();
        let map_err = |message: String| err(line_no, message);
        let list = |value: &str| -> Vec<String> {
            value
                .split(',')
                .map(|item| item.trim().to_string())
                .filter(|item| !item.is_empty())
                .collect()
        };
        match key.trim() {
            "class" => pathway.class = value.parse().map_err(map_err)?,
            "description" => pathway.description = value.to_string(),
            "plausibility" => {
                pathway.plausibility = value.parse().map_err(map_err)?;
                seen_plausibility = true;
            }
            "necessary" => {
                for item in list(value) {
                    pathway.necessary_capabilities.insert(item.parse().map_err(map_err)?);
                }
            }
            "helpful" => {
                for item in list(value) {
                    pathway.helpful_capabilities.insert(item.parse().map_err(map_err)?);
                }
            }
            "components" => {
                for item in list(value) {
                    pathway.components.insert(item.parse().map_err(map_err)?);
                }
            }
            "harm" => pathway.harm_outcomes.push(value.to_string()),
            "covered_by" => {
                for item in list(value) {
                    let address: NodeAddress = item
                        .parse()
                        .map_err(|e: crate::address::AddressError| map_err(e.to_string()))?;
                    pathway.covered_by.push(address);
                }
            }
            "speculative" => {
                pathway.speculative = match value {
                    "true" => true,
                    "false" => false,
                    other => return Err(err(line_no, format!("speculative must be true or false, found {other:?}"))),
                };
            }
            other => return Err(err(line_no, format!("unknown pathway key {other:?}"))),
        }
    }
    if let Some((start, pathway)) = current.take() {
        if !seen_plausibility {
            return Err(err(start, format!("pathway {:?} lacks a plausibility", pathway.id)));
        }
        pathways.push(pathway);
    }
    Ok(pathways)
}
