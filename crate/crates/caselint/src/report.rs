//! The `report` output: a reviewer-facing summary of one case, rendered as
//! markdown or as a JSON document under the same `caselint/1` schema tag as
//! the findings report. Section order is fixed so successive reports diff
//! meaningfully.

use serde_json::json;

use crate::config::OutputFormat;
use crate::defeater::GateResult;
use crate::lint::{Finding, Severity, REPORT_SCHEMA};
use crate::model::{ModelError, SafetyCase};
use crate::risk::{criticality, criticality_with, ArtifactKind, CriticalityRating, CriticalityTable};
use crate::threat::RiskPathway;

/// Everything the renderer needs. Findings must match the case revision.
pub struct ReportContext<'a> {
    pub case: &'a SafetyCase,
    pub findings: &'a [Finding],
    pub threat_model: Option<&'a [RiskPathway]>,
    pub criticality_table: Option<&'a CriticalityTable>,
}

impl<'a> ReportContext<'a> {
    fn rating(&self) -> Option<CriticalityRating> {
        let input = self.case.meta().criticality?;
        Some(match self.criticality_table {
            Some(table) => criticality_with(table, input),
            None => criticality(input),
        })
    }

    fn missing_artifacts(&self, rating: &CriticalityRating) -> Vec<ArtifactKind> {
        rating
            .rigour
            .required_artifacts
            .iter()
            .filter(|artifact| !self.case.artifacts().contains(artifact))
            .copied()
            .collect()
    }

    fn uncovered(&self) -> Option<Vec<&'a RiskPathway>> {
        let pathways = self.threat_model?;
        Some(
            pathways
                .iter()
                .filter(|p| !p.speculative && p.covered_by.is_empty())
                .collect(),
        )
    }
}

/// Renders the report in the requested format (`Dot` is not a report
/// format; callers route that to the diagram path).
pub fn render(context: &ReportContext, format: OutputFormat) -> Result<String, ModelError> {
    match format {
        OutputFormat::Json => render_json(context),
        _ => render_markdown(context),
    }
}

pub fn render_markdown(context: &ReportContext) -> Result<String, ModelError> {
    let case = context.case;
    let verdict = case.verdict(context.findings)?;
    let meta = case.meta();
    let mut out = String::new();

    out.push_str(&format!("# Safety case report: {}\n\n", meta.case_id));

    out.push_str("## Scope\n\n");
    let missing = "*(not stated)*".to_string();
    out.push_str(&format!(
        "- assured property: {}\n",
        meta.assured_property.clone().unwrap_or_else(|| missing.clone())
    ));
    let threshold = match &meta.harm_threshold {
        Some(threshold) => {
            let mut parts = Vec::new();
            if let Some(amount) = threshold.economic_usd {
                parts.push(format!("economic loss ≥ ${amount}"));
            }
            if let Some(count) = threshold.fatalities {
                parts.push(format!("fatalities ≥ {count}"));
            }
            if let Some(count) = threshold.casualties {
                parts.push(format!("casualties ≥ {count}"));
            }
            if let Some(note) = &threshold.scope_note {
                parts.push(note.clone());
            }
            if parts.is_empty() {
                missing.clone()
            } else {
                parts.join("; ")
            }
        }
        None => missing.clone(),
    };
    out.push_str(&format!("- severe harm threshold: {threshold}\n"));
    out.push_str(&format!(
        "- purpose: {}\n",
        meta.purpose.clone().unwrap_or_else(|| missing.clone())
    ));
    out.push_str(&format!(
        "- supported decision: {}\n",
        meta.supported_decision.clone().unwrap_or_else(|| missing.clone())
    ));
    out.push_str(&format!(
        "- system model: {}\n",
        meta.system_model_ref.clone().unwrap_or_else(|| missing.clone())
    ));
    out.push_str(&format!(
        "- environment: {}\n",
        meta.environment_ref.clone().unwrap_or_else(|| missing.clone())
    ));
    match &meta.validity {
        Some(validity) => {
            let expires = validity
                .expires
                .map(|d| d.format("%Y-%m-%d").to_string())
                .unwrap_or_else(|| "open-ended".to_string());
            out.push_str(&format!(
                "- validity: issued {}, expires {expires}, {} trigger(s), {} boundary(ies)\n",
                validity.issued.format("%Y-%m-%d"),
                validity.reevaluation_triggers.len(),
                validity.validity_boundaries.len()
            ));
        }
        None => out.push_str(&format!("- validity: {missing}\n")),
    }

    out.push_str("\n## Verdict\n\n");
    let errors = count(context.findings, Severity::Error);
    let warnings = count(context.findings, Severity::Warning);
    let infos = count(context.findings, Severity::Info);
    out.push_str(&format!(
        "`{verdict}` — {errors} error(s), {warnings} warning(s), {infos} info\n"
    ));

    out.push_str("\n## Findings\n\n");
    if context.findings.is_empty() {
        out.push_str("no findings\n");
    } else {
        out.push_str("| Severity | Rule | Node | Message |\n|---|---|---|---|\n");
        for finding in context.findings {
            let node = finding
                .node
                .as_ref()
                .map(|a| a.to_string())
                .unwrap_or_else(|| "—".to_string());
            out.push_str(&format!(
                "| {} | {} | {} | {} |\n",
                finding.severity, finding.rule_id, node, finding.message
            ));
        }
    }

    out.push_str("\n## Defeaters\n\n");
    let tally = case.tally();
    if tally.total() == 0 {
        out.push_str("no defeaters recorded\n");
    } else {
        out.push_str("| Origin | Status | Count |\n|---|---|---|\n");
        for (origin, status, count) in tally.rows() {
            out.push_str(&format!("| {origin} | {status} | {count} |\n"));
        }
    }
    match case.residual_gate() {
        GateResult::Accepted => {
            out.push_str("\nresidual-risk gate: **accepted** — no open defeaters\n");
        }
        GateResult::Rejected(blocking) => {
            out.push_str(&format!(
                "\nresidual-risk gate: **rejected** — {} open defeater(s)\n",
                blocking.len()
            ));
        }
    }

    out.push_str("\n## Criticality\n\n");
    match (meta.criticality, context.rating()) {
        (Some(input), Some(rating)) => {
            out.push_str(&format!(
                "severity {} × exposure {} × controllability {} → **{}**\n",
                input.severity, input.exposure, input.controllability, rating.level
            ));
            let missing_artifacts = context.missing_artifacts(&rating);
            if missing_artifacts.is_empty() {
                out.push_str("all required artifacts declared\n");
            } else {
                let names: Vec<String> =
                    missing_artifacts.iter().map(|a| a.to_string()).collect();
                out.push_str(&format!("missing artifacts: {}\n", names.join(", ")));
            }
        }
        _ => out.push_str("no criticality assessment declared\n"),
    }

    out.push_str("\n## Evidence weighing\n\n");
    match crate::confirm::weigh_case(case) {
        Ok(table) => out.push_str(&table.to_markdown(case)),
        Err(err) => out.push_str(&format!("weighing failed: {err}\n")),
    }

    out.push_str("\n## Pathway coverage\n\n");
    match (context.threat_model, context.uncovered()) {
        (Some(pathways), Some(uncovered)) => {
            let total = pathways.iter().filter(|p| !p.speculative).count();
            out.push_str(&format!(
                "{} of {} non-speculative pathways covered\n",
                total - uncovered.len(),
                total
            ));
            for pathway in uncovered {
                out.push_str(&format!(
                    "- uncovered: {} ({})\n",
                    pathway.id,
                    pathway.class.keyword()
                ));
            }
        }
        _ => out.push_str("no threat model supplied\n"),
    }

    Ok(out)
}

pub fn render_json(context: &ReportContext) -> Result<String, ModelError> {
    let case = context.case;
    let verdict = case.verdict(context.findings)?;
    let meta = case.meta();

    let tally = case.tally();
    let gate = match case.residual_gate() {
        GateResult::Accepted => json!({"accepted": true, "open": 0}),
        GateResult::Rejected(blocking) => json!({
            "accepted": false,
            "open": blocking.len(),
            "blocking": blocking.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        }),
    };
    let defeaters = json!({
        "rows": tally
            .rows()
            .iter()
            .map(|(origin, status, count)| {
                json!({
                    "origin": origin.keyword(),
                    "status": status.keyword(),
                    "count": count,
                })
            })
            .collect::<Vec<_>>(),
        "gate": gate,
    });

    let criticality_section = match (meta.criticality, context.rating()) {
        (Some(input), Some(rating)) => json!({
            "severity": input.severity.keyword(),
            "exposure": input.exposure.keyword(),
            "controllability": input.controllability.keyword(),
            "level": rating.level.keyword(),
            "missing_artifacts": context
                .missing_artifacts(&rating)
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>(),
        }),
        _ => serde_json::Value::Null,
    };

    let weighing = match crate::confirm::weigh_case(case) {
        Ok(table) => serde_json::to_value(&table.rows).expect("weigh rows serialize"),
        Err(_) => serde_json::Value::Null,
    };

    let coverage = match (context.threat_model, context.uncovered()) {
        (Some(pathways), Some(uncovered)) => {
            let total = pathways.iter().filter(|p| !p.speculative).count();
            json!({
                "total": total,
                "covered": total - uncovered.len(),
                "uncovered": uncovered.iter().map(|p| p.id.clone()).collect::<Vec<_>>(),
            })
        }
        _ => serde_json::Value::Null,
    };

    let document = json!({
        "schema": REPORT_SCHEMA,
        "case_id": meta.case_id,
        "verdict": verdict.to_string(),
        "findings": context.findings,
        "defeaters": defeaters,
        "criticality": criticality_section,
        "weighing": weighing,
        "coverage": coverage,
    });
    let mut out = serde_json::to_string_pretty(&document).expect("report serializes");
    out.push('\n');
    Ok(out)
}

fn count(findings: &[Finding], severity: Severity) -> usize {
    findings.iter().filter(|f| f.severity == severity).count()
}
