//! Criticality classification and rigour profiles.
//!
//! Criticality follows the ASIL recipe: rate severity of harm, exposure to
//! harm, and controllability, then look the triple up in a fixed table. The
//! resulting level selects a rigour profile — which safety-engineering
//! artifacts the case must declare (rule R09) and which lint rules may not be
//! downgraded below error severity.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use std::collections::BTreeSet;

/// Three-point scale used for severity and exposure (`low < medium < high`)
/// and for controllability, where *low* controllability is the bad end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grade {
    Low,
    Medium,
    High,
}

impl Grade {
    pub const ALL: [Grade; 3] = [Grade::Low, Grade::Medium, Grade::High];

    pub fn keyword(self) -> &'static str {
        match self {
            Grade::Low => "low",
            Grade::Medium => "medium",
            Grade::High => "high",
        }
    }

    fn score(self) -> u8 {
        match self {
            Grade::Low => 0,
            Grade::Medium => 1,
            Grade::High => 2,
        }
    }
}

impl FromStr for Grade {
    type Err = String;

    fn from_str(s: &str) -> Result<Grade, String> {
        match s {
            "low" => Ok(Grade::Low),
            "medium" => Ok(Grade::Medium),
            "high" => Ok(Grade::High),
            other => Err(format!("unknown grade {other:?} (expected low, medium or high)")),
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// The severity × exposure × controllability triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalityInput {
    pub severity: Grade,
    pub exposure: Grade,
    /// How reliably harm can be averted once things start going wrong.
    /// `low` means barely controllable.
    pub controllability: Grade,
}

impl CriticalityInput {
    pub fn new(severity: Grade, exposure: Grade, controllability: Grade) -> CriticalityInput {
        CriticalityInput { severity, exposure, controllability }
    }
}

/// Required assurance rigour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalityLevel {
    Low,
    Medium,
    High,
    Critical,
}

impl CriticalityLevel {
    pub const ALL: [CriticalityLevel; 4] = [
        CriticalityLevel::Low,
        CriticalityLevel::Medium,
        CriticalityLevel::High,
        CriticalityLevel::Critical,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            CriticalityLevel::Low => "low",
            CriticalityLevel::Medium => "medium",
            CriticalityLevel::High => "high",
            CriticalityLevel::Critical => "critical",
        }
    }
}

impl FromStr for CriticalityLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<CriticalityLevel, String> {
        match s {
            "low" => Ok(CriticalityLevel::Low),
            "medium" => Ok(CriticalityLevel::Medium),
            "high" => Ok(CriticalityLevel::High),
            "critical" => Ok(CriticalityLevel::Critical),
            other => Err(format!("unknown criticality level {other:?}")),
        }
    }
}

impl fmt::Display for CriticalityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Safety-engineering artifacts a case can declare (`artifact:` meta lines).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    /// What the system is — boundaries, components, interfaces.
    SystemDefinition,
    /// What can go wrong.
    HazardLog,
    /// How safe it must be.
    RiskTargets,
    /// The documented severity/exposure/controllability determination.
    CriticalityClassification,
    /// How claims will be verified and validated.
    VvPlan,
    /// Justification for the risks left standing.
    ResidualRiskAssessment,
    /// Explicit conditions under which the case ceases to hold.
    ValidityBoundaries,
}

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 7] = [
        ArtifactKind::SystemDefinition,
        ArtifactKind::HazardLog,
        ArtifactKind::RiskTargets,
        ArtifactKind::CriticalityClassification,
        ArtifactKind::VvPlan,
        ArtifactKind::ResidualRiskAssessment,
        ArtifactKind::ValidityBoundaries,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            ArtifactKind::SystemDefinition => "system_definition",
            ArtifactKind::HazardLog => "hazard_log",
            ArtifactKind::RiskTargets => "risk_targets",
            ArtifactKind::CriticalityClassification => "criticality_classification",
            ArtifactKind::VvPlan => "vv_plan",
            ArtifactKind::ResidualRiskAssessment => "residual_risk_assessment",
            ArtifactKind::ValidityBoundaries => "validity_boundaries",
        }
    }
}

impl FromStr for ArtifactKind {
    type Err = String;

    fn from_str(s: &str) -> Result<ArtifactKind, String> {
        ArtifactKind::ALL
            .into_iter()
            .find(|k| k.keyword() == s)
            .ok_or_else(|| format!("unknown artifact kind {s:?}"))
    }
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// What a criticality level demands: artifacts that must be declared and
/// rules whose severity may not drop below error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RigourProfile {
    pub level: CriticalityLevel,
    pub required_artifacts: BTreeSet<ArtifactKind>,
    pub mandatory_error_rules: BTreeSet<&'static str>,
}

/// The rigour profile for a level. Profiles are cumulative: each level
/// requires everything the previous one did.
pub fn rigour_profile(level: CriticalityLevel) -> RigourProfile {
    use ArtifactKind::*;
    let mut required_artifacts: BTreeSet<ArtifactKind> = BTreeSet::new();
    let mut mandatory_error_rules: BTreeSet<&'static str> = BTreeSet::new();
    required_artifacts.extend([SystemDefinition, HazardLog]);
    if level >= CriticalityLevel::Medium {
        required_artifacts.extend([RiskTargets, CriticalityClassification]);
        mandatory_error_rules.insert("R05");
    }
    if level >= CriticalityLevel::High {
        required_artifacts.extend([VvPlan, ValidityBoundaries]);
        mandatory_error_rules.insert("R10");
    }
    if level >= CriticalityLevel::Critical {
        required_artifacts.insert(ResidualRiskAssessment);
    }
    RigourProfile { level, required_artifacts, mandatory_error_rules }
}

/// Result of a criticality determination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalityRating {
    pub level: CriticalityLevel,
    pub rigour: RigourProfile,
}

/// A full 27-cell severity × exposure × controllability lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityTable {
    levels: [CriticalityLevel; 27],
}

fn cell_index(input: CriticalityInput) -> usize {
    (input.severity.score() as usize) * 9
        + (input.exposure.score() as usize) * 3
        + input.controllability.score() as usize
}

impl CriticalityTable {
    /// The shipped table. It is additive — severity 0–2, exposure 0–2, and
    /// *inverted* controllability 0–2 sum to a score mapped `≥5 → critical`,
    /// `4 → high`, `2–3 → medium`, `≤1 → low` — with one adjusted cell:
    /// (high, high, medium) reads high rather than critical, reflecting that
    /// merely *uncertain* controllability points at a high classification and
    /// reserving critical for the corner where control is actually poor.
    pub fn builtin() -> CriticalityTable {
        let mut levels = [CriticalityLevel::Low; 27];
        for severity in Grade::ALL {
            for exposure in Grade::ALL {
                for controllability in Grade::ALL {
                    let input = CriticalityInput::new(severity, exposure, controllability);
                    let score =
                        severity.score() + exposure.score() + (2 - controllability.score());
                    let level = match score {
                        0..=1 => CriticalityLevel::Low,
                        2..=3 => CriticalityLevel::Medium,
                        4 => CriticalityLevel::High,
                        _ => CriticalityLevel::Critical,
                    };
                    levels[cell_index(input)] = level;
                }
            }
        }
        let adjusted = CriticalityInput::new(Grade::High, Grade::High, Grade::Medium);
        levels[cell_index(adjusted)] = CriticalityLevel::High;
        CriticalityTable { levels }
    }

    /// Builds a table from explicit cells, refusing non-monotone tables
    /// (raising severity or exposure, or lowering controllability, must never
    /// lower the level).
    pub fn from_cells(
        cells: &[(CriticalityInput, CriticalityLevel)],
    ) -> Result<CriticalityTable, String> {
        let mut levels: [Option<CriticalityLevel>; 27] = [None; 27];
        for &(input, level) in cells {
            let slot = &mut levels[cell_index(input)];
            if slot.is_some() {
                return Err(format!(
                    "duplicate cell ({}, {}, {})",
                    input.severity, input.exposure, input.controllability
                ));
            }
            *slot = Some(level);
        }
        let missing = levels.iter().filter(|l| l.is_none()).count();
        if missing > 0 {
            return Err(format!("table incomplete: {missing} of 27 cells missing"));
        }
        let table = CriticalityTable { levels: levels.map(|l| l.expect("checked complete")) };
        table.check_monotone()?;
        Ok(table)
    }

    pub fn lookup(&self, input: CriticalityInput) -> CriticalityLevel {
        self.levels[cell_index(input)]
    }

    fn check_monotone(&self) -> Result<(), String> {
        let worse = |g: Grade| match g {
            Grade::Low => Some(Grade::Medium),
            Grade::Medium => Some(Grade::High),
            Grade::High => None,
        };
        for severity in Grade::ALL {
            for exposure in Grade::ALL {
                for controllability in Grade::ALL {
                    let here = CriticalityInput::new(severity, exposure, controllability);
                    let level = self.lookup(here);
                    let mut neighbours = Vec::new();
                    if let Some(s) = worse(severity) {
                        neighbours.push(CriticalityInput::new(s, exposure, controllability));
                    }
                    if let Some(e) = worse(exposure) {
                        neighbours.push(CriticalityInput::new(severity, e, controllability));
                    }
                    // Controllability runs the other way: lower is worse.
                    if controllability > Grade::Low {
                        let c = match controllability {
                            Grade::High => Grade::Medium,
                            _ => Grade::Low,
                        };
                        neighbours.push(CriticalityInput::new(severity, exposure, c));
                    }
                    for neighbour in neighbours {
                        if self.lookup(neighbour) < level {
                            return Err(format!(
                                "non-monotone: ({}, {}, {}) = {} exceeds worse cell ({}, {}, {}) = {}",
                                here.severity, here.exposure, here.controllability, level,
                                neighbour.severity, neighbour.exposure, neighbour.controllability,
                                self.lookup(neighbour),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Classifies an input against the shipped table and returns the level with
/// its rigour profile.
pub fn criticality(input: CriticalityInput) -> CriticalityRating {
    criticality_with(&CriticalityTable::builtin(), input)
}

/// Same, against a caller-supplied table (e.g. a config override).
pub fn criticality_with(table: &CriticalityTable, input: CriticalityInput) -> CriticalityRating {
    let level = table.lookup(input);
    CriticalityRating { level, rigour: rigour_profile(level) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_worked_cells() {
        let rate = |s, e, c| criticality(CriticalityInput::new(s, e, c)).level;
        use Grade::*;
        // The anchor determination: high severity, substantial exposure,
        // merely uncertain controllability → high.
        assert_eq!(rate(High, High, Medium), CriticalityLevel::High);
        // With genuinely poor controllability the corner goes critical.
        assert_eq!(rate(High, High, Low), CriticalityLevel::Critical);
        assert!(rate(High, High, Low) >= CriticalityLevel::High);
        assert_eq!(rate(Low, Low, High), CriticalityLevel::Low);
        assert_eq!(rate(High, Low, High), CriticalityLevel::Medium);
    }

    #[test]
    fn test_builtin_table_monotone_all_27_cells() {
        CriticalityTable::builtin().check_monotone().unwrap();
    }

    #[test]
    fn test_rigour_profiles_form_subset_chain() {
        let mut previous: Option<RigourProfile> = None;
        for level in CriticalityLevel::ALL {
            let profile = rigour_profile(level);
            if let Some(prev) = previous {
                assert!(
                    prev.required_artifacts.is_subset(&profile.required_artifacts),
                    "{:?} artifacts not ⊆ {:?}",
                    prev.level,
                    level
                );
                assert!(prev.mandatory_error_rules.is_subset(&profile.mandatory_error_rules));
            }
            previous = Some(profile);
        }
        assert_eq!(
            rigour_profile(CriticalityLevel::Critical).required_artifacts.len(),
            ArtifactKind::ALL.len()
        );
    }

    #[test]
    fn test_from_cells_rejects_non_monotone() {
        let mut cells = Vec::new();
        for severity in Grade::ALL {
            for exposure in Grade::ALL {
                for controllability in Grade::ALL {
                    let input = CriticalityInput::new(severity, exposure, controllability);
                    // Deliberately inverted: high severity mapped lowest.
                    let level = match severity {
                        Grade::High => CriticalityLevel::Low,
                        _ => CriticalityLevel::High,
                    };
                    cells.push((input, level));
                }
            }
        }
        assert!(CriticalityTable::from_cells(&cells).is_err());
    }

    #[test]
    fn test_from_cells_requires_all_27() {
        let cells = [(
            CriticalityInput::new(Grade::Low, Grade::Low, Grade::High),
            CriticalityLevel::Low,
        )];
        assert!(CriticalityTable::from_cells(&cells).is_err());
    }
}
