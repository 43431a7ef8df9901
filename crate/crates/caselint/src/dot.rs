//! Graphviz rendering of a case.
//!
//! One node statement per case node, sorted by address, then the edges in a
//! fixed group order — so the output diffs as cleanly as the `.cae` file it
//! came from. Findings drive visual emphasis: any node carrying an
//! error-severity finding is drawn with a heavy border, and defeaters are
//! red regardless.

use std::collections::BTreeSet;

use crate::address::NodeAddress;
use crate::lint::{Finding, Severity};
use crate::model::{ModelError, NodeKind, SafetyCase};

fn shape(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Claim => "box",
        NodeKind::ArgumentStep => "ellipse",
        NodeKind::Evidence => "parallelogram",
        NodeKind::SideWarrant => "note",
        NodeKind::Defeater => "octagon",
    }
}

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders the case as a `digraph`. Findings must have been computed
/// against this revision of the case.
pub fn emit_dot(case: &SafetyCase, findings: &[Finding]) -> Result<String, ModelError> {
    if let Some(stale) = findings.iter().find(|f| f.revision != case.revision()) {
        return Err(ModelError::StaleFindings {
            findings: stale.revision,
            case: case.revision(),
        });
    }

    let flagged: BTreeSet<&NodeAddress> = findings
        .iter()
        .filter(|f| f.severity == Severity::Error)
        .filter_map(|f| f.node.as_ref())
        .collect();

    let mut out = String::new();
    out.push_str("digraph safety_case {\n");
    out.push_str("  rankdir=TB;\n");
    out.push_str("  node [fontname=\"Helvetica\"];\n");

    for node in case.nodes() {
        let mut attrs = vec![format!("shape={}", shape(node.kind))];
        if node.kind == NodeKind::Defeater {
            attrs.push("color=red".to_string());
        }
        if flagged.contains(&node.address) {
            attrs.push("penwidth=2".to_string());
        }
        attrs.push(format!("label=\"{}: {}\"", node.address, escape(&node.text)));
        out.push_str(&format!("  \"{}\" [{}];\n", node.address, attrs.join(", ")));
    }

    // Support edges point downward: the supported claim to its argument (or
    // directly attached evidence), so the tree reads root-first.
    for (source, claim) in case.support_edges() {
        out.push_str(&format!("  \"{claim}\" -> \"{source}\";\n"));
    }
    for (argument, child) in case.child_edges() {
        out.push_str(&format!("  \"{argument}\" -> \"{child}\";\n"));
    }
    for (argument, warrant) in case.warrant_edges() {
        out.push_str(&format!("  \"{argument}\" -> \"{warrant}\" [style=dotted];\n"));
    }
    for (defeater, target) in case.defeat_edges() {
        out.push_str(&format!(
            "  \"{defeater}\" -> \"{target}\" [style=dashed, color=red];\n"
        ));
    }

    out.push_str("}\n");
    Ok(out)
}
