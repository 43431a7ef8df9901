//! caselint — a linter and toolkit for structured assurance cases.
//!
//! The crate models Claims-Argument-Evidence cases as immutable graphs,
//! parses and serializes the `.cae` text format, evaluates a catalogue of
//! review rules, tracks defeaters through an auditable lifecycle, weighs
//! evidence with log-likelihood-ratio confirmation measures, grades case
//! criticality, and checks claim coverage against a threat-pathway registry.

pub mod address;
pub mod cli;
pub mod confirm;
pub mod config;
pub mod format;
pub mod defeater;
pub mod dot;
pub mod guide;
pub mod lint;
pub mod model;
pub mod report;
pub mod risk;
pub mod threat;

pub use address::{KindTag, NodeAddress};
pub use confirm::{
    aggregate_claim, categorize, llr, weigh_case, ClaimWeight, ConfirmationAssessment,
    ConfirmationCategory, Dimension, Thresholds, WeighTable,
};
pub use dot::emit_dot;
pub use defeater::{
    history_from_jsonl, history_to_jsonl, DefeaterOrigin, DefeaterRecord, DefeaterStatus,
    DefeaterTally, GateResult, HistoryEntry, TransitionRefs,
};
pub use format::{parse_case, serialize_case, ParseDiagnostic, ParseOutcome, SourceSpan};
pub use lint::{catalogue, explain, lint, Finding, LintConfig, RuleDescriptor, Severity};
pub use model::{
    ArgumentSubtype, CaseKind, CaseMeta, CaseNode, EdgeSpec, HarmThreshold, ModelError, NodeKind,
    SafetyCase, ValidityWindow, Verdict,
};
pub use risk::{
    criticality, criticality_with, rigour_profile, ArtifactKind, CriticalityInput,
    CriticalityLevel, CriticalityRating, CriticalityTable, Grade, RigourProfile,
};
pub use threat::{
    builtin_threat_model, capability_gap, coverage_check, parse_threats, Capability, ComponentId,
    Layer, PathwayClass, Plausibility, RiskPathway, SystemComponent,
};
