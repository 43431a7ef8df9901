//! The `.cae` text format: a line-oriented, diff-friendly serialization of a
//! case with spanned diagnostics on the way back in.
//!
//! A file is a `case <id>` header followed by three kinds of blocks:
//!
//! ```text
//! case acme_deployment
//!   meta
//!     case_kind: safety_case
//!     issued: 2026-01-01
//!   node C1 kind=claim
//!     text: the system cannot cause severe harm
//!     terms: "severe harm"
//!   node A1 kind=argument_step subtype=evidence_incorporation
//!     text: the test campaign exercises the property directly
//!     supports: C1
//!     children: E1.1
//!   node E1.1 kind=evidence
//!     text: test campaign report
//!   assess C1 E1.1 benchmark_performance
//!     category: moderate_confirmation
//!     rationale: passes with margin on every configuration
//! ```
//!
//! Indentation is cosmetic; blocks are delimited by their header keywords.
//! `#` starts a comment line. [`parse_case`] accepts a few shapes the
//! builder API refuses — evidence supporting a claim directly, defeaters
//! with gaps in their ordinal sequence, resolved defeaters missing their
//! references — because the linter wants to *report* those, not choke on
//! them. Everything structurally unsound (dangling references, cycles,
//! kind/tag mismatches, multiple roots) is still a parse error.
//!
//! [`serialize_case`] emits the canonical form: two-space indent, nodes
//! sorted by address, fixed key order, one trailing newline. Parsing a
//! serialized case reproduces the case; serializing is idempotent.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;

use chrono::NaiveDate;

use crate::address::{KindTag, NodeAddress};
use crate::confirm::{ConfirmationAssessment, ConfirmationCategory, Dimension};
use crate::defeater::{DefeaterOrigin, DefeaterStatus};
use crate::lint::Severity;
use crate::model::{
    ArgumentSubtype, CaseMeta, CaseNode, HarmThreshold, NodeKind, SafetyCase, ValidityWindow,
};
use crate::risk::{ArtifactKind, CriticalityInput, Grade};

/// A half-open region of a source file, 1-based, inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub line_start: usize,
    pub line_end: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl SourceSpan {
    fn line(file: &str, line: usize, len: usize) -> SourceSpan {
        SourceSpan {
            file: file.to_string(),
            line_start: line,
            line_end: line,
            col_start: 1,
            col_end: len.max(1),
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line_start, self.col_start)
    }
}

/// One parser message, error or warning, anchored to a span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub span: SourceSpan,
    pub message: String,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.severity, self.message)
    }
}

/// What [`parse_case`] hands back: the case, if the file had no errors, and
/// every diagnostic either way.
#[derive(Debug)]
pub struct ParseOutcome {
    pub case: Option<SafetyCase>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

impl ParseOutcome {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.severity == Severity::Error)
    }

    /// Unwraps the case, panicking with the rendered diagnostics. Test helper.
    pub fn expect_case(self) -> SafetyCase {
        match self.case {
            Some(case) => case,
            None => {
                let rendered: Vec<String> =
                    self.diagnostics.iter().map(|d| d.to_string()).collect();
                panic!("case failed to parse:\n{}", rendered.join("\n"));
            }
        }
    }
}

#[derive(Debug, Default)]
struct MetaDraft {
    case_id: Option<String>,
    case_kind: Option<crate::model::CaseKind>,
    assured_property: Option<String>,
    purpose: Option<String>,
    supported_decision: Option<String>,
    system_model_ref: Option<String>,
    environment_ref: Option<String>,
    economic_usd: Option<f64>,
    fatalities: Option<u64>,
    casualties: Option<u64>,
    harm_scope: Option<String>,
    issued: Option<NaiveDate>,
    expires: Option<NaiveDate>,
    reevaluation_triggers: Vec<String>,
    validity_boundaries: Vec<String>,
    severity: Option<Grade>,
    exposure: Option<Grade>,
    controllability: Option<Grade>,
    artifacts: BTreeSet<ArtifactKind>,
    glossary: BTreeMap<String, String>,
    // Line numbers for late validation messages.
    validity_line: Option<usize>,
    criticality_line: Option<usize>,
}

#[derive(Debug)]
struct NodeDraft {
    line: usize,
    address: NodeAddress,
    kind: NodeKind,
    subtype: Option<ArgumentSubtype>,
    text: Option<String>,
    terms: Vec<String>,
    supports: Vec<NodeAddress>,
    children: Vec<NodeAddress>,
    warrants: Vec<NodeAddress>,
    targets: Vec<NodeAddress>,
    status: Option<DefeaterStatus>,
    origin: Option<DefeaterOrigin>,
    mitigation_ref: Option<String>,
    risk_assessment_ref: Option<String>,
}

impl NodeDraft {
    fn new(line: usize, address: NodeAddress, kind: NodeKind) -> NodeDraft {
        NodeDraft {
            line,
            address,
            kind,
            subtype: None,
            text: None,
            terms: Vec::new(),
            supports: Vec::new(),
            children: Vec::new(),
            warrants: Vec::new(),
            targets: Vec::new(),
            status: None,
            origin: None,
            mitigation_ref: None,
            risk_assessment_ref: None,
        }
    }
}

#[derive(Debug)]
struct AssessDraft {
    line: usize,
    claim: NodeAddress,
    evidence: NodeAddress,
    dimension: Dimension,
    category: Option<ConfirmationCategory>,
    likelihoods: Option<(f64, f64)>,
    rationale: Option<String>,
}

enum Section {
    None,
    Meta,
    Node(NodeDraft),
    Assess(AssessDraft),
}

struct Parser<'a> {
    file: &'a str,
    diagnostics: Vec<ParseDiagnostic>,
}

impl<'a> Parser<'a> {
    fn error(&mut self, line_no: usize, line: &str, message: impl Into<String>) {
        self.diagnostics.push(ParseDiagnostic {
            severity: Severity::Error,
            span: SourceSpan::line(self.file, line_no, line.len()),
            message: message.into(),
        });
    }

    fn warning(&mut self, line_no: usize, line: &str, message: impl Into<String>) {
        self.diagnostics.push(ParseDiagnostic {
            severity: Severity::Warning,
            span: SourceSpan::line(self.file, line_no, line.len()),
            message: message.into(),
        });
    }
}

/// Parses `.cae` text. `file` only labels diagnostic spans.
pub fn parse_case(input: &str, file: &str) -> ParseOutcome {
    let mut parser = Parser { file, diagnostics: Vec::new() };
    let mut meta = MetaDraft::default();
    let mut nodes: Vec<NodeDraft> = Vec::new();
    let mut assessments: Vec<AssessDraft> = Vec::new();
    let mut section = Section::None;
    let mut saw_case_header = false;

    let finalize = |section: &mut Section,
                    nodes: &mut Vec<NodeDraft>,
                    assessments: &mut Vec<AssessDraft>| {
        match std::mem::replace(section, Section::None) {
            Section::None | Section::Meta => {}
            Section::Node(draft) => nodes.push(draft),
            Section::Assess(draft) => assessments.push(draft),
        }
    };

    for (index, raw_line) in input.lines().enumerate() {
        let line_no = index + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }

        let mut tokens = line.split_whitespace();
        let head = tokens.next().expect("non-empty line");

        match head {
            "case" => {
                finalize(&mut section, &mut nodes, &mut assessments);
                let id: Vec<&str> = tokens.collect();
                if saw_case_header {
                    parser.error(line_no, raw_line, "duplicate 'case' header");
                } else if id.len() != 1 {
                    parser.error(line_no, raw_line, "expected 'case <id>'");
                } else {
                    meta.case_id = Some(id[0].to_string());
                }
                saw_case_header = true;
            }
            "meta" => {
                finalize(&mut section, &mut nodes, &mut assessments);
                if tokens.next().is_some() {
                    parser.error(line_no, raw_line, "'meta' takes no arguments");
                }
                section = Section::Meta;
            }
            "node" => {
                finalize(&mut section, &mut nodes, &mut assessments);
                if let Some(draft) = parse_node_header(&mut parser, line_no, raw_line, line) {
                    section = Section::Node(draft);
                }
            }
            "assess" => {
                finalize(&mut section, &mut nodes, &mut assessments);
                if let Some(draft) = parse_assess_header(&mut parser, line_no, raw_line, line) {
                    section = Section::Assess(draft);
                }
            }
            _ if line.contains(':') => {
                let (key, value) = line.split_once(':').expect("checked");
                let key = key.trim();
                let value = value.trim();
                match &mut section {
                    Section::None => {
                        parser.error(line_no, raw_line, "key outside of any block");
                    }
                    Section::Meta => {
                        parse_meta_key(&mut parser, &mut meta, line_no, raw_line, key, value);
                    }
                    Section::Node(draft) => {
                        parse_node_key(&mut parser, draft, line_no, raw_line, key, value);
                    }
                    Section::Assess(draft) => {
                        parse_assess_key(&mut parser, draft, line_no, raw_line, key, value);
                    }
                }
            }
            _ => {
                parser.error(
                    line_no,
                    raw_line,
                    "expected 'case', 'meta', 'node', 'assess' or 'key: value'",
                );
            }
        }
    }
    finalize(&mut section, &mut nodes, &mut assessments);

    if !saw_case_header {
        parser.error(1, "", "missing 'case <id>' header");
    }

    let case = assemble(&mut parser, meta, nodes, assessments, input);
    let has_errors = parser.diagnostics.iter().any(|d| d.severity == Severity::Error);
    ParseOutcome { case: if has_errors { None } else { case }, diagnostics: parser.diagnostics }
}

fn parse_node_header(
    parser: &mut Parser,
    line_no: usize,
    raw_line: &str,
    line: &str,
) -> Option<NodeDraft> {
    let mut address: Option<NodeAddress> = None;
    let mut kind: Option<NodeKind> = None;
    let mut subtype: Option<ArgumentSubtype> = None;
    for token in line.split_whitespace().skip(1) {
        if let Some(value) = token.strip_prefix("kind=") {
            match value.parse::<NodeKind>() {
                Ok(parsed) => kind = Some(parsed),
                Err(message) => parser.error(line_no, raw_line, message),
            }
        } else if let Some(value) = token.strip_prefix("subtype=") {
            match value.parse::<ArgumentSubtype>() {
                Ok(parsed) => subtype = Some(parsed),
                Err(message) => parser.error(line_no, raw_line, message),
            }
        } else if address.is_none() {
            match token.parse::<NodeAddress>() {
                Ok(parsed) => address = Some(parsed),
                Err(err) => parser.error(line_no, raw_line, format!("bad address: {err}")),
            }
        } else {
            parser.error(line_no, raw_line, format!("unexpected token {token:?}"));
        }
    }
    let (Some(address), Some(kind)) = (address, kind) else {
        if !parser.diagnostics.iter().any(|d| d.span.line_start == line_no) {
            parser.error(line_no, raw_line, "expected 'node <address> kind=<kind>'");
        }
        return None;
    };
    if address.kind_tag() != kind.tag() {
        parser.error(
            line_no,
            raw_line,
            format!(
                "address {address} carries tag {} but kind {} requires {}",
                address.kind_tag().letter(),
                kind.keyword(),
                kind.tag().letter()
            ),
        );
        return None;
    }
    if subtype.is_some() && kind != NodeKind::ArgumentStep {
        parser.error(line_no, raw_line, "subtype= is only valid on argument steps");
        return None;
    }
    let mut draft = NodeDraft::new(line_no, address, kind);
    draft.subtype = subtype;
    Some(draft)
}

fn parse_assess_header(
    parser: &mut Parser,
    line_no: usize,
    raw_line: &str,
    line: &str,
) -> Option<AssessDraft> {
    let tokens: Vec<&str> = line.split_whitespace().skip(1).collect();
    if tokens.len() != 3 {
        parser.error(line_no, raw_line, "expected 'assess <claim> <evidence> <dimension>'");
        return None;
    }
    let claim = match tokens[0].parse::<NodeAddress>() {
        Ok(address) => address,
        Err(err) => {
            parser.error(line_no, raw_line, format!("bad claim address: {err}"));
            return None;
        }
    };
    let evidence = match tokens[1].parse::<NodeAddress>() {
        Ok(address) => address,
        Err(err) => {
            parser.error(line_no, raw_line, format!("bad evidence address: {err}"));
            return None;
        }
    };
    let dimension = match tokens[2].parse::<Dimension>() {
        Ok(dimension) => dimension,
        Err(message) => {
            parser.error(line_no, raw_line, message);
            return None;
        }
    };
    Some(AssessDraft {
        line: line_no,
        claim,
        evidence,
        dimension,
        category: None,
        likelihoods: None,
        rationale: None,
    })
}

fn set_once<T>(
    parser: &mut Parser,
    slot: &mut Option<T>,
    value: T,
    line_no: usize,
    raw_line: &str,
    key: &str,
) {
    if slot.is_some() {
        parser.error(line_no, raw_line, format!("duplicate key {key:?}"));
    } else {
        *slot = Some(value);
    }
}

fn parse_meta_key(
    parser: &mut Parser,
    meta: &mut MetaDraft,
    line_no: usize,
    raw_line: &str,
    key: &str,
    value: &str,
) {
    macro_rules! parsed {
        ($ty:ty) => {
            match value.parse::<$ty>() {
                Ok(parsed) => parsed,
                Err(err) => {
                    parser.error(line_no, raw_line, format!("bad {key} value: {err}"));
                    return;
                }
            }
        };
    }
    match key {
        "case_kind" => {
            let kind = parsed!(crate::model::CaseKind);
            set_once(parser, &mut meta.case_kind, kind, line_no, raw_line, key);
        }
        "assured_property" => set_once(
            parser,
            &mut meta.assured_property,
            value.to_string(),
            line_no,
            raw_line,
            key,
        ),
        "purpose" => {
            set_once(parser, &mut meta.purpose, value.to_string(), line_no, raw_line, key)
        }
        "supported_decision" => set_once(
            parser,
            &mut meta.supported_decision,
            value.to_string(),
            line_no,
            raw_line,
            key,
        ),
        "system_model_ref" => set_once(
            parser,
            &mut meta.system_model_ref,
            value.to_string(),
            line_no,
            raw_line,
            key,
        ),
        "environment_ref" => set_once(
            parser,
            &mut meta.environment_ref,
            value.to_string(),
            line_no,
            raw_line,
            key,
        ),
        "economic_usd" => {
            let amount = parsed!(f64);
            if !amount.is_finite() || amount < 0.0 {
                parser.error(line_no, raw_line, "economic_usd must be finite and non-negative");
                return;
            }
            set_once(parser, &mut meta.economic_usd, amount, line_no, raw_line, key);
        }
        "fatalities" => {
            let count = parsed!(u64);
            set_once(parser, &mut meta.fatalities, count, line_no, raw_line, key);
        }
        "casualties" => {
            let count = parsed!(u64);
            set_once(parser, &mut meta.casualties, count, line_no, raw_line, key);
        }
        "harm_scope" => {
            set_once(parser, &mut meta.harm_scope, value.to_string(), line_no, raw_line, key)
        }
        "issued" => {
            let date = parse_date(parser, line_no, raw_line, key, value);
            if let Some(date) = date {
                set_once(parser, &mut meta.issued, date, line_no, raw_line, key);
                meta.validity_line.get_or_insert(line_no);
            }
        }
        "expires" => {
            let date = parse_date(parser, line_no, raw_line, key, value);
            if let Some(date) = date {
                set_once(parser, &mut meta.expires, date, line_no, raw_line, key);
                meta.validity_line.get_or_insert(line_no);
            }
        }
        "reevaluation_trigger" => {
            meta.reevaluation_triggers.push(value.to_string());
            meta.validity_line.get_or_insert(line_no);
        }
        "validity_boundary" => {
            meta.validity_boundaries.push(value.to_string());
            meta.validity_line.get_or_insert(line_no);
        }
        "severity" => {
            let grade = parsed!(Grade);
            set_once(parser, &mut meta.severity, grade, line_no, raw_line, key);
            meta.criticality_line.get_or_insert(line_no);
        }
        "exposure" => {
            let grade = parsed!(Grade);
            set_once(parser, &mut meta.exposure, grade, line_no, raw_line, key);
            meta.criticality_line.get_or_insert(line_no);
        }
        "controllability" => {
            let grade = parsed!(Grade);
            set_once(parser, &mut meta.controllability, grade, line_no, raw_line, key);
            meta.criticality_line.get_or_insert(line_no);
        }
        "artifact" => {
            let artifact = parsed!(ArtifactKind);
            if !meta.artifacts.insert(artifact) {
                parser.warning(line_no, raw_line, format!("artifact {value} declared twice"));
            }
        }
        "glossary" => match parse_glossary_entry(value) {
            Some((term, definition)) => {
                if meta.glossary.insert(term.clone(), definition).is_some() {
                    parser.error(line_no, raw_line, format!("glossary term {term:?} redefined"));
                }
            }
            None => {
                parser.error(line_no, raw_line, "expected 'glossary: \"term\" = definition'");
            }
        },
        _ => {
            parser.warning(line_no, raw_line, format!("unknown meta key {key:?}"));
        }
    }
}

fn parse_date(
    parser: &mut Parser,
    line_no: usize,
    raw_line: &str,
    key: &str,
    value: &str,
) -> Option<NaiveDate> {
    match NaiveDate::parse_from_str(value, "%Y-%m-%d") {
        Ok(date) => Some(date),
        Err(_) => {
            parser.error(line_no, raw_line, format!("bad {key} date, expected YYYY-MM-DD"));
            None
        }
    }
}

fn parse_glossary_entry(value: &str) -> Option<(String, String)> {
    let rest = value.strip_prefix('"')?;
    let (term, rest) = rest.split_once('"')?;
    let definition = rest.trim().strip_prefix('=')?.trim();
    if term.is_empty() || definition.is_empty() {
        return None;
    }
    Some((term.to_string(), definition.to_string()))
}

fn parse_address_list(
    parser: &mut Parser,
    line_no: usize,
    raw_line: &str,
    value: &str,
) -> Vec<NodeAddress> {
    let mut out = Vec::new();
    for item in value.split(',') {
        let item = item.trim();
        if item.is_empty() {
            parser.error(line_no, raw_line, "empty entry in address list");
            continue;
        }
        match item.parse::<NodeAddress>() {
            Ok(address) => out.push(address),
            Err(err) => parser.error(line_no, raw_line, format!("bad address {item:?}: {err}")),
        }
    }
    out
}

fn parse_term_list(
    parser: &mut Parser,
    line_no: usize,
    raw_line: &str,
    value: &str,
) -> Vec<String> {
    // Terms are quoted so they can contain commas and stay visually distinct.
    let mut out = Vec::new();
    let mut rest = value.trim();
    while !rest.is_empty() {
        let Some(after_open) = rest.strip_prefix('"') else {
            parser.error(line_no, raw_line, "terms must be double-quoted");
            return out;
        };
        let Some((term, tail)) = after_open.split_once('"') else {
            parser.error(line_no, raw_line, "unterminated quote in terms");
            return out;
        };
        out.push(term.to_string());
        rest = tail.trim_start();
        if let Some(tail) = rest.strip_prefix(',') {
            rest = tail.trim_start();
        } else if !rest.is_empty() {
            parser.error(line_no, raw_line, "expected ',' between terms");
            return out;
        }
    }
    out
}

fn parse_node_key(
    parser: &mut Parser,
    draft: &mut NodeDraft,
    line_no: usize,
    raw_line: &str,
    key: &str,
    value: &str,
) {
    let defeater_only = ["targets", "status", "origin", "mitigation_ref", "risk_assessment_ref"];
    if defeater_only.contains(&key) && draft.kind != NodeKind::Defeater {
        parser.error(
            line_no,
            raw_line,
            format!("key {key:?} is only valid on defeater nodes"),
        );
        return;
    }
    match key {
        "text" => set_once(parser, &mut draft.text, value.to_string(), line_no, raw_line, key),
        "terms" => {
            if !draft.terms.is_empty() {
                parser.error(line_no, raw_line, "duplicate key \"terms\"");
                return;
            }
            draft.terms = parse_term_list(parser, line_no, raw_line, value);
        }
        "supports" | "children" | "warrants" | "targets" => {
            let slot = match key {
                "supports" => &mut draft.supports,
                "children" => &mut draft.children,
                "warrants" => &mut draft.warrants,
                _ => &mut draft.targets,
            };
            if !slot.is_empty() {
                parser.error(line_no, raw_line, format!("duplicate key {key:?}"));
                return;
            }
            *slot = parse_address_list(parser, line_no, raw_line, value);
        }
        "status" => match value.parse::<DefeaterStatus>() {
            Ok(status) => set_once(parser, &mut draft.status, status, line_no, raw_line, key),
            Err(message) => parser.error(line_no, raw_line, message),
        },
        "origin" => match value.parse::<DefeaterOrigin>() {
            Ok(origin) => set_once(parser, &mut draft.origin, origin, line_no, raw_line, key),
            Err(message) => parser.error(line_no, raw_line, message),
        },
        "mitigation_ref" => {
            set_once(parser, &mut draft.mitigation_ref, value.to_string(), line_no, raw_line, key)
        }
        "risk_assessment_ref" => set_once(
            parser,
            &mut draft.risk_assessment_ref,
            value.to_string(),
            line_no,
            raw_line,
            key,
        ),
        _ => parser.warning(line_no, raw_line, format!("unknown node key {key:?}")),
    }
}

fn parse_assess_key(
    parser: &mut Parser,
    draft: &mut AssessDraft,
    line_no: usize,
    raw_line: &str,
    key: &str,
    value: &str,
) {
    match key {
        "category" => match value.parse::<ConfirmationCategory>() {
            Ok(category) => {
                set_once(parser, &mut draft.category, category, line_no, raw_line, key)
            }
            Err(message) => parser.error(line_no, raw_line, message),
        },
        "likelihoods" => {
            let parts: Vec<&str> = value.split(',').map(str::trim).collect();
            let pair = if parts.len() == 2 {
                match (parts[0].parse::<f64>(), parts[1].parse::<f64>()) {
                    (Ok(p), Ok(q)) => Some((p, q)),
                    _ => None,
                }
            } else {
                None
            };
            match pair {
                Some(pair) => {
                    set_once(parser, &mut draft.likelihoods, pair, line_no, raw_line, key)
                }
                None => parser.error(line_no, raw_line, "expected 'likelihoods: <p>, <q>'"),
            }
        }
        "rationale" => {
            set_once(parser, &mut draft.rationale, value.to_string(), line_no, raw_line, key)
        }
        _ => parser.warning(line_no, raw_line, format!("unknown assess key {key:?}")),
    }
}

/// Builds the case graph from collected drafts, enforcing the invariants the
/// builder API enforces — minus the deliberate relaxations called out in the
/// module docs.
fn assemble(
    parser: &mut Parser,
    mut meta: MetaDraft,
    drafts: Vec<NodeDraft>,
    assess_drafts: Vec<AssessDraft>,
    input: &str,
) -> Option<SafetyCase> {
    let before = parser.diagnostics.len();

    let artifacts = std::mem::take(&mut meta.artifacts);
    let case_meta = finish_meta(parser, meta)?;

    // Pass 1: addresses and kinds.
    let mut by_address: BTreeMap<NodeAddress, usize> = BTreeMap::new();
    for (index, draft) in drafts.iter().enumerate() {
        if by_address.insert(draft.address.clone(), index).is_some() {
            let line = line_text(input, draft.line);
            parser.error(draft.line, line, format!("duplicate node {}", draft.address));
        }
    }

    let kind_of = |address: &NodeAddress| -> Option<NodeKind> {
        by_address.get(address).map(|&i| drafts[i].kind)
    };

    // Pass 2: per-kind key and edge legality.
    for draft in &drafts {
        let line = line_text(input, draft.line);
        let address = &draft.address;
        let check_ref = |parser: &mut Parser, list: &[NodeAddress], role: &str| {
            for target in list {
                if !by_address.contains_key(target) {
                    parser.error(
                        draft.line,
                        line,
                        format!("{address} {role} unknown node {target}"),
                    );
                }
            }
        };
        check_ref(parser, &draft.supports, "supports");
        check_ref(parser, &draft.children, "lists child");
        check_ref(parser, &draft.warrants, "lists warrant");
        check_ref(parser, &draft.targets, "targets");

        match draft.kind {
            NodeKind::Claim | NodeKind::SideWarrant => {
                if !draft.supports.is_empty()
                    || !draft.children.is_empty()
                    || !draft.warrants.is_empty()
                {
                    parser.error(
                        draft.line,
                        line,
                        format!("{} nodes take no edge keys", draft.kind.keyword()),
                    );
                }
            }
            NodeKind::ArgumentStep => {
                if draft.subtype.is_none() {
                    parser.error(draft.line, line, "argument step needs subtype=");
                }
                if draft.supports.len() != 1 {
                    parser.error(
                        draft.line,
                        line,
                        format!(
                            "argument step must support exactly one claim, found {}",
                            draft.supports.len()
                        ),
                    );
                } else if kind_of(&draft.supports[0])
                    .is_some_and(|kind| kind != NodeKind::Claim)
                {
                    parser.error(draft.line, line, "argument steps can only support claims");
                }
                if draft.children.is_empty() {
                    parser.error(draft.line, line, "argument step needs at least one child");
                }
                for child in &draft.children {
                    match kind_of(child) {
                        Some(NodeKind::Claim) => {}
                        Some(NodeKind::Evidence) => {}
                        Some(other) => parser.error(
                            draft.line,
                            line,
                            format!(
                                "argument child {child} is a {}, expected claim or evidence",
                                other.keyword()
                            ),
                        ),
                        None => {}
                    }
                }
                for warrant in &draft.warrants {
                    if kind_of(warrant).is_some_and(|kind| kind != NodeKind::SideWarrant) {
                        parser.error(
                            draft.line,
                            line,
                            format!("{warrant} is not a side-warrant"),
                        );
                    }
                }
            }
            NodeKind::Evidence => {
                // Direct support of a claim is tolerated here; rule R06
                // reports it.
                for claim in &draft.supports {
                    if kind_of(claim).is_some_and(|kind| kind != NodeKind::Claim) {
                        parser.error(
                            draft.line,
                            line,
                            format!("evidence can only support claims, {claim} is not one"),
                        );
                    }
                }
                if !draft.children.is_empty() || !draft.warrants.is_empty() {
                    parser.error(draft.line, line, "evidence nodes take no children or warrants");
                }
            }
            NodeKind::Defeater => {
                if draft.origin.is_none() {
                    parser.error(draft.line, line, "defeater needs an origin: line");
                }
                if draft.targets.len() != 1 {
                    parser.error(
                        draft.line,
                        line,
                        format!(
                            "defeater must target exactly one node, found {}",
                            draft.targets.len()
                        ),
                    );
                } else {
                    let target = &draft.targets[0];
                    match kind_of(target) {
                        Some(NodeKind::Claim) | Some(NodeKind::ArgumentStep) => {
                            if target.path() != address.path() {
                                parser.error(
                                    draft.line,
                                    line,
                                    format!(
                                        "defeater {address} must target a node at path {}, \
                                         found {target}",
                                        address
                                            .path()
                                            .iter()
                                            .map(u32::to_string)
                                            .collect::<Vec<_>>()
                                            .join(".")
                                    ),
                                );
                            }
                        }
                        Some(other) => parser.error(
                            draft.line,
                            line,
                            format!(
                                "defeaters target claims or argument steps, {target} is a {}",
                                other.keyword()
                            ),
                        ),
                        None => {}
                    }
                }
                if !draft.supports.is_empty()
                    || !draft.children.is_empty()
                    || !draft.warrants.is_empty()
                {
                    parser.error(draft.line, line, "defeaters take only a targets: line");
                }
            }
        }
    }

    // Pass 3: construct nodes.
    let mut case = SafetyCase::new(case_meta).with_artifacts(artifacts);
    for draft in &drafts {
        let line = line_text(input, draft.line);
        let Some(text) = draft.text.as_deref() else {
            parser.error(draft.line, line, format!("{} has no text: line", draft.address));
            continue;
        };
        let built = match draft.kind {
            NodeKind::Claim => CaseNode::claim(draft.address.clone(), text),
            NodeKind::ArgumentStep => CaseNode::argument(
                draft.address.clone(),
                draft.subtype.unwrap_or(ArgumentSubtype::Conjunctive),
                text,
            ),
            NodeKind::Evidence => CaseNode::evidence(draft.address.clone(), text),
            NodeKind::SideWarrant => CaseNode::side_warrant(draft.address.clone(), text),
            NodeKind::Defeater => CaseNode::defeater(
                draft.address.clone(),
                draft.origin.unwrap_or(DefeaterOrigin::Reviewer),
                text,
            ),
        };
        let node = match built {
            Ok(node) => node,
            Err(err) => {
                parser.error(draft.line, line, err.to_string());
                continue;
            }
        };
        let node = if draft.terms.is_empty() {
            node
        } else {
            match node.with_terms(draft.terms.clone()) {
                Ok(node) => node,
                Err(err) => {
                    parser.error(draft.line, line, err.to_string());
                    continue;
                }
            }
        };
        let mut node = node;
        if draft.kind == NodeKind::Defeater {
            if let Some(status) = draft.status {
                node.status = Some(status);
            }
            // Missing references on resolved statuses are tolerated; rule
            // R05 reports them.
            node.mitigation_ref = draft.mitigation_ref.clone();
            node.risk_assessment_ref = draft.risk_assessment_ref.clone();
        }
        case.insert_raw(node);
        for claim in &draft.supports {
            case.insert_support_edge(draft.address.clone(), claim.clone());
        }
        for child in &draft.children {
            case.insert_child_edge(draft.address.clone(), child.clone());
        }
        for warrant in &draft.warrants {
            case.insert_warrant_edge(draft.address.clone(), warrant.clone());
        }
        for target in &draft.targets {
            case.insert_defeat_edge(draft.address.clone(), target.clone());
        }
    }

    // Pass 4: whole-graph invariants (cycles, root count, argument shape),
    // but only once the pieces were individually sound — otherwise the
    // structural errors just restate pass-2 diagnostics.
    if parser.diagnostics.iter().all(|d| d.severity != Severity::Error) {
        for finding in crate::lint::validate_structure(&case) {
            let line_no = finding
                .node
                .as_ref()
                .and_then(|address| by_address.get(address))
                .map(|&index| drafts[index].line)
                .unwrap_or(1);
            parser.error(line_no, line_text(input, line_no), finding.message);
        }
    }

    // Pass 5: assessments.
    let mut rows = Vec::new();
    for draft in assess_drafts {
        let line = line_text(input, draft.line);
        for (address, expected, role) in [
            (&draft.claim, NodeKind::Claim, "claim"),
            (&draft.evidence, NodeKind::Evidence, "evidence"),
        ] {
            match kind_of(address) {
                Some(kind) if kind == expected => {}
                Some(_) => {
                    parser.error(draft.line, line, format!("{address} is not a {role}"));
                }
                None => {
                    parser.error(draft.line, line, format!("assessment references unknown {address}"));
                }
            }
        }
        let Some(category) = draft.category else {
            parser.error(draft.line, line, "assessment needs a category: line");
            continue;
        };
        let rationale = draft.rationale.clone().unwrap_or_default();
        let row = match draft.likelihoods {
            Some((p, q)) => ConfirmationAssessment::with_likelihoods(
                draft.claim.clone(),
                draft.evidence.clone(),
                draft.dimension,
                p,
                q,
                category,
                &rationale,
            ),
            None => Ok(ConfirmationAssessment::judged(
                draft.claim.clone(),
                draft.evidence.clone(),
                draft.dimension,
                category,
                &rationale,
            )),
        };
        match row {
            Ok(row) => rows.push(row),
            Err(err) => parser.error(draft.line, line, err.to_string()),
        }
    }
    let case = case.with_assessments(rows);

    if parser.diagnostics[before..].iter().any(|d| d.severity == Severity::Error) {
        None
    } else {
        Some(case)
    }
}

fn finish_meta(parser: &mut Parser, meta: MetaDraft) -> Option<CaseMeta> {
    let mut out = CaseMeta::new(meta.case_id.as_deref().unwrap_or("unnamed"));
    out.case_kind = meta.case_kind.unwrap_or_default();
    out.assured_property = meta.assured_property;
    out.purpose = meta.purpose;
    out.supported_decision = meta.supported_decision;
    out.system_model_ref = meta.system_model_ref;
    out.environment_ref = meta.environment_ref;

    let threshold = HarmThreshold {
        economic_usd: meta.economic_usd,
        fatalities: meta.fatalities,
        casualties: meta.casualties,
        scope_note: meta.harm_scope,
    };
    out.harm_threshold = if threshold.is_empty() { None } else { Some(threshold) };

    let any_validity = meta.expires.is_some()
        || !meta.reevaluation_triggers.is_empty()
        || !meta.validity_boundaries.is_empty();
    out.validity = match (meta.issued, any_validity) {
        (Some(issued), _) => Some(ValidityWindow {
            issued,
            expires: meta.expires,
            reevaluation_triggers: meta.reevaluation_triggers,
            validity_boundaries: meta.validity_boundaries,
        }),
        (None, true) => {
            let line = meta.validity_line.unwrap_or(1);
            parser.error(line, "", "validity fields require an issued: date");
            return None;
        }
        (None, false) => None,
    };

    out.criticality = match (meta.severity, meta.exposure, meta.controllability) {
        (Some(severity), Some(exposure), Some(controllability)) => {
            Some(CriticalityInput::new(severity, exposure, controllability))
        }
        (None, None, None) => None,
        _ => {
            let line = meta.criticality_line.unwrap_or(1);
            parser.error(line, "", "severity, exposure and controllability must appear together");
            return None;
        }
    };

    out.glossary = meta.glossary;
    Some(out)
}

fn line_text(input: &str, line_no: usize) -> &str {
    input.lines().nth(line_no.saturating_sub(1)).unwrap_or("")
}

/// Emits the canonical `.cae` text for a case.
pub fn serialize_case(case: &SafetyCase) -> String {
    let mut out = String::new();
    let meta = case.meta();
    let _ = writeln!(out, "case {}", meta.case_id);
    let _ = writeln!(out, "  meta");
    let _ = writeln!(out, "    case_kind: {}", meta.case_kind.keyword());
    let scalars: [(&str, Option<&String>); 5] = [
        ("assured_property", meta.assured_property.as_ref()),
        ("purpose", meta.purpose.as_ref()),
        ("supported_decision", meta.supported_decision.as_ref()),
        ("system_model_ref", meta.system_model_ref.as_ref()),
        ("environment_ref", meta.environment_ref.as_ref()),
    ];
    for (key, value) in scalars {
        if let Some(value) = value {
            let _ = writeln!(out, "    {key}: {value}");
        }
    }
    if let Some(threshold) = &meta.harm_threshold {
        if let Some(amount) = threshold.economic_usd {
            let _ = writeln!(out, "    economic_usd: {amount}");
        }
        if let Some(count) = threshold.fatalities {
            let _ = writeln!(out, "    fatalities: {count}");
        }
        if let Some(count) = threshold.casualties {
            let _ = writeln!(out, "    casualties: {count}");
        }
        if let Some(note) = &threshold.scope_note {
            let _ = writeln!(out, "    harm_scope: {note}");
        }
    }
    if let Some(validity) = &meta.validity {
        let _ = writeln!(out, "    issued: {}", validity.issued.format("%Y-%m-%d"));
        if let Some(expires) = validity.expires {
            let _ = writeln!(out, "    expires: {}", expires.format("%Y-%m-%d"));
        }
        for trigger in &validity.reevaluation_triggers {
            let _ = writeln!(out, "    reevaluation_trigger: {trigger}");
        }
        for boundary in &validity.validity_boundaries {
            let _ = writeln!(out, "    validity_boundary: {boundary}");
        }
    }
    if let Some(criticality) = &meta.criticality {
        let _ = writeln!(out, "    severity: {}", criticality.severity);
        let _ = writeln!(out, "    exposure: {}", criticality.exposure);
        let _ = writeln!(out, "    controllability: {}", criticality.controllability);
    }
    for artifact in case.artifacts() {
        let _ = writeln!(out, "    artifact: {artifact}");
    }
    for (term, definition) in &meta.glossary {
        let _ = writeln!(out, "    glossary: \"{term}\" = {definition}");
    }

    for node in case.nodes() {
        let mut header = format!("  node {} kind={}", node.address, node.kind.keyword());
        if let Some(subtype) = node.argument_subtype {
            let _ = write!(header, " subtype={}", subtype.keyword());
        }
        let _ = writeln!(out, "{header}");
        let _ = writeln!(out, "    text: {}", node.text);
        if !node.terms.is_empty() {
            let quoted: Vec<String> =
                node.terms.iter().map(|term| format!("\"{term}\"")).collect();
            let _ = writeln!(out, "    terms: {}", quoted.join(", "));
        }
        let supports = edge_list(case.support_edges(), &node.address);
        if !supports.is_empty() {
            let _ = writeln!(out, "    supports: {}", supports.join(", "));
        }
        let children = edge_list(case.child_edges(), &node.address);
        if !children.is_empty() {
            let _ = writeln!(out, "    children: {}", children.join(", "));
        }
        let warrants = edge_list(case.warrant_edges(), &node.address);
        if !warrants.is_empty() {
            let _ = writeln!(out, "    warrants: {}", warrants.join(", "));
        }
        let targets = edge_list(case.defeat_edges(), &node.address);
        if !targets.is_empty() {
            let _ = writeln!(out, "    targets: {}", targets.join(", "));
        }
        if let Some(status) = node.status {
            let _ = writeln!(out, "    status: {status}");
        }
        if let Some(origin) = node.origin {
            let _ = writeln!(out, "    origin: {origin}");
        }
        if let Some(reference) = &node.mitigation_ref {
            let _ = writeln!(out, "    mitigation_ref: {reference}");
        }
        if let Some(reference) = &node.risk_assessment_ref {
            let _ = writeln!(out, "    risk_assessment_ref: {reference}");
        }
    }

    for row in case.assessments() {
        let _ = writeln!(
            out,
            "  assess {} {} {}",
            row.claim,
            row.evidence,
            row.dimension.keyword()
        );
        let _ = writeln!(out, "    category: {}", row.category.keyword());
        if let Some((p, q)) = row.likelihoods {
            let _ = writeln!(out, "    likelihoods: {p}, {q}");
        }
        if !row.rationale.is_empty() {
            let _ = writeln!(out, "    rationale: {}", row.rationale);
        }
    }
    out
}

fn edge_list<'a>(
    edges: impl Iterator<Item = &'a (NodeAddress, NodeAddress)>,
    from: &NodeAddress,
) -> Vec<String> {
    edges
        .filter(|(source, _)| source == from)
        .map(|(_, target)| target.to_string())
        .collect()
}

/// Convenience: does this address tag a defeater? Used by callers walking
/// serialized output.
pub fn is_defeater_address(address: &NodeAddress) -> bool {
    address.kind_tag() == KindTag::Defeater
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Verdict;

    const SMALL: &str = "\
case demo
  meta
    case_kind: safety_case
    assured_property: no severe harm in deployment
    purpose: internal deployment go/no-go
    supported_decision: ship to the internal fleet
    system_model_ref: SYS-DEMO-1
    environment_ref: ENV-DEMO-1
    economic_usd: 1000000000
    fatalities: 100
    issued: 2026-01-01
    expires: 2026-07-01
    reevaluation_trigger: major model update
    validity_boundary: internal deployment only
    severity: low
    exposure: low
    controllability: high
    artifact: system_definition
    artifact: hazard_log
    glossary: \"severe harm\" = harm above the stated thresholds
  node C1 kind=claim
    text: the system cannot cause severe harm
    terms: \"severe harm\"
  node A1 kind=argument_step subtype=evidence_incorporation
    text: the campaign tests the property directly
    supports: C1
    children: E1.1
    warrants: W1.1
  node E1.1 kind=evidence
    text: campaign report
  node W1.1 kind=side_warrant
    text: the campaign covers the whole operating envelope
  assess C1 E1.1 benchmark_performance
    category: moderate_confirmation
    likelihoods: 0.8, 0.2
    rationale: clean pass with margin
";

    #[test]
    fn test_small_case_parses_without_diagnostics() {
        let outcome = parse_case(SMALL, "demo.cae");
        assert_eq!(outcome.diagnostics, Vec::new());
        let case = outcome.expect_case();
        assert_eq!(case.len(), 4);
        assert_eq!(case.meta().case_id, "demo");
        assert_eq!(case.assessments().len(), 1);
        assert_eq!(case.assessments()[0].likelihoods, Some((0.8, 0.2)));
    }

    #[test]
    fn test_round_trip_preserves_case() {
        let case = parse_case(SMALL, "demo.cae").expect_case();
        let text = serialize_case(&case);
        let reparsed = parse_case(&text, "demo.cae").expect_case();
        assert_eq!(case, reparsed);
        // And serialization is idempotent on canonical text.
        assert_eq!(text, serialize_case(&reparsed));
    }

    #[test]
    fn test_comments_and_blank_lines_are_ignored() {
        let noisy = SMALL.replace(
            "  node C1 kind=claim",
            "\n# top-level claim follows\n  node C1 kind=claim",
        );
        let case = parse_case(&noisy, "demo.cae").expect_case();
        assert_eq!(case, parse_case(SMALL, "demo.cae").expect_case());
    }

    #[test]
    fn test_dangling_reference_is_an_error_with_span() {
        let broken = SMALL.replace("children: E1.1", "children: E9.9");
        let outcome = parse_case(&broken, "demo.cae");
        assert!(outcome.case.is_none());
        let diagnostic = outcome
            .diagnostics
            .iter()
            .find(|d| d.message.contains("E9.9"))
            .expect("dangling child reported");
        assert_eq!(diagnostic.severity, Severity::Error);
        assert_eq!(diagnostic.span.file, "demo.cae");
        assert_eq!(
            line_text(&broken, diagnostic.span.line_start).trim(),
            "node A1 kind=argument_step subtype=evidence_incorporation"
        );
    }

    #[test]
    fn test_kind_tag_mismatch_rejected() {
        let broken = SMALL.replace("node E1.1 kind=evidence", "node E1.1 kind=claim");
        let outcome = parse_case(&broken, "demo.cae");
        assert!(outcome.case.is_none());
        assert!(outcome.diagnostics.iter().any(|d| d.message.contains("tag")));
    }

    #[test]
    fn test_two_roots_rejected() {
        let broken = format!("{SMALL}  node C2 kind=claim\n    text: a second root\n");
        let outcome = parse_case(&broken, "demo.cae");
        assert!(outcome.case.is_none());
        assert!(outcome
            .diagnostics
            .iter()
            .any(|d| d.message.contains("exactly one root claim")));
    }

    #[test]
    fn test_unknown_keys_warn_but_parse() {
        let noisy = SMALL.replace(
            "    text: campaign report",
            "    text: campaign report\n    color: blue",
        );
        let outcome = parse_case(&noisy, "demo.cae");
        assert!(outcome.case.is_some());
        assert!(outcome
            .diagnostics
            .iter()
            .any(|d| d.severity == Severity::Warning && d.message.contains("color")));
    }

    #[test]
    fn test_direct_evidence_support_is_tolerated() {
        let relaxed = "\
case demo
  node C1 kind=claim
    text: top
  node C1.1 kind=claim
    text: sub
  node A1 kind=argument_step subtype=conjunctive
    text: split
    supports: C1
    children: C1.1
  node E1.1 kind=evidence
    text: direct measurement
    supports: C1.1
";
        let outcome = parse_case(relaxed, "relaxed.cae");
        let case = outcome.expect_case();
        // The relaxation exists so the linter can flag it.
        let findings =
            crate::lint::lint(&case, &crate::lint::LintConfig::default()).unwrap();
        assert!(findings
            .iter()
            .any(|f| f.rule_id == "R06" && f.node == Some("C1.1".parse().unwrap())));
    }

    #[test]
    fn test_sparse_defeater_ordinals_parse() {
        let sparse = "\
case demo
  node C1 kind=claim
    text: top
  node D1-2 kind=defeater
    text: a reviewer doubt recorded under its original number
    targets: C1
    origin: reviewer
";
        let case = parse_case(sparse, "sparse.cae").expect_case();
        assert!(case.node(&"D1-2".parse().unwrap()).is_some());
    }

    #[test]
    fn test_defeater_path_mismatch_rejected() {
        let broken = "\
case demo
  node C1 kind=claim
    text: top
  node C1.1 kind=claim
    text: sub
  node A1 kind=argument_step subtype=conjunctive
    text: split
    supports: C1
    children: C1.1
  node D1.1-1 kind=defeater
    text: doubt
    targets: C1
    origin: reviewer
";
        let outcome = parse_case(broken, "broken.cae");
        assert!(outcome.case.is_none());
        assert!(outcome.diagnostics.iter().any(|d| d.message.contains("path")));
    }

    #[test]
    fn test_likelihood_category_mismatch_rejected() {
        let broken = SMALL.replace("category: moderate_confirmation", "category: strong_confirmation");
        let outcome = parse_case(&broken, "demo.cae");
        assert!(outcome.case.is_none());
    }

    #[test]
    fn test_resolved_defeater_without_refs_is_tolerated() {
        let relaxed = "\
case demo
  node C1 kind=claim
    text: top
  node D1-1 kind=defeater
    text: doubt someone closed in a hurry
    targets: C1
    origin: developer
    status: mitigated
";
        let case = parse_case(relaxed, "relaxed.cae").expect_case();
        let node = case.node(&"D1-1".parse().unwrap()).unwrap();
        assert_eq!(node.status, Some(DefeaterStatus::Mitigated));
        assert_eq!(node.mitigation_ref, None);
    }

    #[test]
    fn test_empty_input_reports_missing_header() {
        let outcome = parse_case("", "empty.cae");
        assert!(outcome.case.is_none());
        assert!(outcome.diagnostics.iter().any(|d| d.message.contains("case <id>")));
    }

    #[test]
    fn test_verdict_of_clean_small_case_is_complete() {
        let case = parse_case(SMALL, "demo.cae").expect_case();
        let findings =
            crate::lint::lint(&case, &crate::lint::LintConfig::default()).unwrap();
        assert_eq!(findings, Vec::new());
        assert_eq!(case.verdict(&findings).unwrap(), Verdict::Complete);
    }
}
