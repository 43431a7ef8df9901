//! The `caselint` command-line interface.
//!
//! Six subcommands over `.cae` files: `check` (lint + verdict, the CI gate),
//! `report` (reviewer summary), `diagram` (Graphviz), `defeaters` (ledger
//! listing), `weigh` (evidence confirmation table) and `criticality`
//! (severity/exposure/controllability grading, with or without a case file).
//!
//! Exit codes: 0 clean, 1 findings at or above the fail level (or a verdict
//! other than `complete` from `check`), 2 usage, parse or configuration
//! errors. Parse diagnostics and operational errors go to stderr; results go
//! to stdout.

use std::io::IsTerminal;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{OutputFormat, RunConfig};
use crate::defeater::{DefeaterOrigin, DefeaterStatus, GateResult};
use crate::lint::{Finding, LintConfig, Severity, REPORT_SCHEMA};
use crate::model::Verdict;
use crate::risk::{criticality, criticality_with, CriticalityInput, CriticalityRating, Grade};
use crate::threat::RiskPathway;

#[derive(Debug, Parser)]
#[command(
    name = "caselint",
    version,
    about = "Lint, report on and diagram structured assurance cases"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Case file to read (.cae)
    case: PathBuf,
    /// Config file (falls back to $CASELINT_CONFIG)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output format: text, json, markdown or dot
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Lowest severity that makes `check` fail: error or warning
    #[arg(long = "fail-level")]
    fail_level: Option<Severity>,
    /// Rule toggles, e.g. +R04,-R07
    #[arg(long, allow_hyphen_values = true)]
    rules: Option<String>,
    /// Threat model file for pathway coverage, or the word `builtin`
    #[arg(long)]
    threats: Option<String>,
    /// Disable ANSI colors (also: $NO_COLOR)
    #[arg(long = "no-color")]
    no_color: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lint a case and print findings plus the verdict
    Check(CommonArgs),
    /// Render the full reviewer report
    Report(CommonArgs),
    /// Render the case graph as Graphviz DOT
    Diagram(CommonArgs),
    /// List defeater records, optionally filtered
    Defeaters {
        #[command(flatten)]
        common: CommonArgs,
        /// Keep only records with this status
        #[arg(long)]
        status: Option<DefeaterStatus>,
        /// Keep only records with this origin
        #[arg(long)]
        origin: Option<DefeaterOrigin>,
    },
    /// Print the evidence-confirmation table
    Weigh(CommonArgs),
    /// Grade criticality from a case's meta block or from flags
    Criticality {
        /// Case file carrying severity/exposure/controllability meta
        case: Option<PathBuf>,
        #[arg(long)]
        severity: Option<Grade>,
        #[arg(long)]
        exposure: Option<Grade>,
        #[arg(long)]
        controllability: Option<Grade>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        format: Option<OutputFormat>,
        #[arg(long = "no-color")]
        no_color: bool,
    },
}

/// Runs the CLI against explicit argv and streams; returns the exit code.
/// `color_capable` says whether stdout would support ANSI escapes.
pub fn run(
    args: impl IntoIterator<Item = String>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
    color_capable: bool,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // Help/version are "errors" to clap but success to the shell.
            let code = if err.use_stderr() { 2 } else { 0 };
            let rendered = err.render();
            let _ = if err.use_stderr() {
                write!(stderr, "{rendered}")
            } else {
                write!(stdout, "{rendered}")
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr, color_capable) {
        Ok(code) => code,
        Err(failure) => {
            let _ = writeln!(stderr, "error: {}", failure.message);
            failure.code
        }
    }
}

/// Entry point for `main`: real process streams and environment.
pub fn run_from_env() -> i32 {
    let mut stdout = std::io::stdout();
    let mut stderr = std::io::stderr();
    let color_capable = std::io::stdout().is_terminal();
    run(std::env::args(), &mut stdout, &mut stderr, color_capable)
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }
}

fn dispatch(
    command: Command,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
    color_capable: bool,
) -> Result<i32, Failure> {
    match command {
        Command::Check(common) => {
            let run = CaseRun::prepare(&common, stderr, color_capable)?;
            cmd_check(&run, stdout)
        }
        Command::Report(common) => {
            let run = CaseRun::prepare(&common, stderr, color_capable)?;
            cmd_report(&run, stdout)
        }
        Command::Diagram(common) => {
            let run = CaseRun::prepare(&common, stderr, color_capable)?;
            cmd_diagram(&run, stdout)
        }
        Command::Defeaters { common, status, origin } => {
            let run = CaseRun::prepare(&common, stderr, color_capable)?;
            cmd_defeaters(&run, status, origin, stdout)
        }
        Command::Weigh(common) => {
            let run = CaseRun::prepare(&common, stderr, color_capable)?;
            cmd_weigh(&run, stdout)
        }
        Command::Criticality {
            case,
            severity,
            exposure,
            controllability,
            config,
            format,
            no_color: _,
        } => cmd_criticality(case, severity, exposure, controllability, config, format, stdout),
    }
}

/// A parsed case plus the fully resolved configuration — shared by every
/// case-reading subcommand.
struct CaseRun {
    case: crate::model::SafetyCase,
    case_path: PathBuf,
    config: RunConfig,
    threat_model: Option<Vec<RiskPathway>>,
    color: bool,
}

impl CaseRun {
    fn prepare(
        common: &CommonArgs,
        stderr: &mut dyn Write,
        color_capable: bool,
    ) -> Result<CaseRun, Failure> {
        let mut config = resolve_config(common.config.as_deref())?;
        if let Some(format) = common.format {
            config.format = format;
        }
        if let Some(fail_level) = common.fail_level {
            config.fail_level = fail_level;
        }
        if let Some(toggles) = &common.rules {
            config.apply_rule_toggles(toggles).map_err(|e| Failure::usage(e.to_string()))?;
        }
        if common.no_color || std::env::var_os("NO_COLOR").is_some() {
            config.no_color = true;
        }

        let threats_arg = common.threats.clone().map(ThreatSource::from_arg);
        let threat_model = match threats_arg {
            Some(source) => Some(source.load()?),
            None => match &config.threats_path {
                Some(path) => Some(ThreatSource::File(path.clone()).load()?),
                None => None,
            },
        };

        let text = std::fs::read_to_string(&common.case)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", common.case.display())))?;
        let outcome = crate::format::parse_case(&text, &common.case.display().to_string());
        for diagnostic in &outcome.diagnostics {
            let _ = writeln!(stderr, "{diagnostic}");
        }
        let Some(case) = outcome.case else {
            return Err(Failure { code: 2, message: "case failed to parse".to_string() });
        };

        // Fail fast on a threat model that names claims this case lacks.
        if let Some(pathways) = &threat_model {
            crate::threat::coverage_check(&case, pathways)
                .map_err(|e| Failure::usage(e.to_string()))?;
        }

        let color = color_capable && !config.no_color;
        Ok(CaseRun { case, case_path: common.case.clone(), config, threat_model, color })
    }

    fn lint_config(&self) -> LintConfig {
        self.config.lint_config(self.threat_model.clone())
    }

    fn findings(&self) -> Result<Vec<Finding>, Failure> {
        crate::lint::lint(&self.case, &self.lint_config())
            .map_err(|e| Failure::usage(e.to_string()))
    }
}

enum ThreatSource {
    Builtin,
    File(PathBuf),
}

impl ThreatSource {
    fn from_arg(value: String) -> ThreatSource {
        if value == "builtin" {
            ThreatSource::Builtin
        } else {
            ThreatSource::File(PathBuf::from(value))
        }
    }

    fn load(&self) -> Result<Vec<RiskPathway>, Failure> {
        match self {
            ThreatSource::Builtin => Ok(crate::threat::builtin_threat_model().to_vec()),
            ThreatSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Failure::usage(format!("cannot read {}: {e}", path.display()))
                })?;
                crate::threat::parse_threats(&text)
                    .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
            }
        }
    }
}

fn resolve_config(flag: Option<&Path>) -> Result<RunConfig, Failure> {
    let mut config = RunConfig::default();
    let path = flag
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os("CASELINT_CONFIG").map(PathBuf::from));
    if let Some(path) = path {
        config.apply_file(&path).map_err(|e| Failure::usage(e.to_string()))?;
    }
    if let Some(jobs) = std::env::var_os("CASELINT_JOBS") {
        let jobs = jobs
            .to_string_lossy()
            .parse::<usize>()
            .map_err(|e| Failure::usage(format!("bad CASELINT_JOBS: {e}")))?;
        config.jobs = jobs;
    }
    Ok(config)
}

fn paint(severity: Severity, color: bool) -> String {
    if !color {
        return severity.to_string();
    }
    let code = match severity {
        Severity::Error => "31",
        Severity::Warning => "33",
        Severity::Info => "36",
    };
    format!("\x1b[{code}m{severity}\x1b[0m")
}

#[derive(Serialize)]
struct CheckDocument<'a> {
    schema: &'static str,
    verdict: String,
    findings: &'a [Finding],
}

fn cmd_check(run: &CaseRun, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let findings = run.findings()?;
    let verdict = run
        .case
        .verdict(&findings)
        .map_err(|e| Failure::usage(e.to_string()))?;

    match run.config.format {
        OutputFormat::Json => {
            let document = CheckDocument {
                schema: REPORT_SCHEMA,
                verdict: verdict.to_string(),
                findings: &findings,
            };
            let rendered =
                serde_json::to_string_pretty(&document).expect("check document serializes");
            let _ = writeln!(stdout, "{rendered}");
        }
        _ => {
            for finding in &findings {
                let location = finding
                    .node
                    .as_ref()
                    .map(|a| a.to_string())
                    .unwrap_or_else(|| "case".to_string());
                let _ = writeln!(
                    stdout,
                    "{} {} {}: {}",
                    paint(finding.severity, run.color),
                    finding.rule_id,
                    location,
                    finding.message
                );
            }
            let _ = writeln!(stdout, "verdict: {verdict}");
        }
    }

    let failing = findings.iter().any(|f| f.severity >= run.config.fail_level);
    Ok(if failing || verdict != Verdict::Complete { 1 } else { 0 })
}

fn cmd_report(run: &CaseRun, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let findings = run.findings()?;
    let context = crate::report::ReportContext {
        case: &run.case,
        findings: &findings,
        threat_model: run.threat_model.as_deref(),
        criticality_table: run.config.criticality_table.as_ref(),
    };
    let rendered = crate::report::render(&context, run.config.format)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let _ = write!(stdout, "{rendered}");
    Ok(0)
}

fn cmd_diagram(run: &CaseRun, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let findings = run.findings()?;
    let dot = crate::dot::emit_dot(&run.case, &findings)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let _ = write!(stdout, "{dot}");
    Ok(0)
}

fn cmd_defeaters(
    run: &CaseRun,
    status: Option<DefeaterStatus>,
    origin: Option<DefeaterOrigin>,
    stdout: &mut dyn Write,
) -> Result<i32, Failure> {
    // Replay any sidecar history so listings made in later sessions still
    // show the audit trail.
    let mut case = run.case.clone();
    let sidecar = sidecar_path(&run.case_path);
    if let Ok(text) = std::fs::read_to_string(&sidecar) {
        let entries = crate::defeater::history_from_jsonl(&text)
            .map_err(|e| Failure::usage(format!("{}: {e}", sidecar.display())))?;
        for entry in entries {
            case.histories.entry(entry.address.clone()).or_default().push(entry);
        }
    }

    let records: Vec<_> = case
        .defeater_records()
        .into_iter()
        .filter(|r| status.is_none_or(|s| r.status == s))
        .filter(|r| origin.is_none_or(|o| r.origin == o))
        .collect();

    if run.config.format == OutputFormat::Json {
        let rendered = serde_json::to_string_pretty(&records).expect("records serialize");
        let _ = writeln!(stdout, "{rendered}");
        return Ok(0);
    }

    for record in &records {
        let _ = writeln!(
            stdout,
            "{} {} {} -> {}: {}",
            record.address, record.origin, record.status, record.target, record.text
        );
        if let Some(reference) = &record.mitigation_ref {
            let _ = writeln!(stdout, "  mitigation_ref: {reference}");
        }
        if let Some(reference) = &record.risk_assessment_ref {
            let _ = writeln!(stdout, "  risk_assessment_ref: {reference}");
        }
        for entry in &record.history {
            let _ = writeln!(
                stdout,
                "  {} {} -> {} by {}: {}",
                entry.timestamp.format("%Y-%m-%dT%H:%M:%SZ"),
                entry.old,
                entry.new,
                entry.actor,
                entry.note
            );
        }
    }

    let tally = case.tally();
    let rows: Vec<String> = tally
        .rows()
        .iter()
        .map(|(origin, status, count)| format!("{origin} {status}: {count}"))
        .collect();
    let _ = writeln!(stdout, "tally: {}", if rows.is_empty() { "none".to_string() } else { rows.join(", ") });
    match case.residual_gate() {
        GateResult::Accepted => {
            let _ = writeln!(stdout, "residual-risk gate: accepted");
        }
        GateResult::Rejected(blocking) => {
            let _ = writeln!(stdout, "residual-risk gate: rejected ({} open)", blocking.len());
        }
    }
    Ok(0)
}

/// `<case>.history`, next to the case file.
pub fn sidecar_path(case_path: &Path) -> PathBuf {
    let mut path = case_path.as_os_str().to_owned();
    path.push(".history");
    PathBuf::from(path)
}

fn cmd_weigh(run: &CaseRun, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let table =
        crate::confirm::weigh_case(&run.case).map_err(|e| Failure::usage(e.to_string()))?;
    if run.config.format == OutputFormat::Json {
        let rendered = serde_json::to_string_pretty(&table.rows).expect("rows serialize");
        let _ = writeln!(stdout, "{rendered}");
    } else {
        let _ = write!(stdout, "{}", table.to_markdown(&run.case));
    }
    Ok(0)
}

fn cmd_criticality(
    case_path: Option<PathBuf>,
    severity: Option<Grade>,
    exposure: Option<Grade>,
    controllability: Option<Grade>,
    config_path: Option<PathBuf>,
    format: Option<OutputFormat>,
    stdout: &mut dyn Write,
) -> Result<i32, Failure> {
    let mut config = resolve_config(config_path.as_deref())?;
    if let Some(format) = format {
        config.format = format;
    }

    let from_case: Option<CriticalityInput> = match &case_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
            let outcome = crate::format::parse_case(&text, &path.display().to_string());
            let Some(case) = outcome.case else {
                return Err(Failure { code: 2, message: "case failed to parse".to_string() });
            };
            case.meta().criticality
        }
        None => None,
    };

    // Flags override the case's own grading; either source alone works.
    let input = match (severity, exposure, controllability) {
        (Some(severity), Some(exposure), Some(controllability)) => {
            CriticalityInput::new(severity, exposure, controllability)
        }
        (None, None, None) => from_case.ok_or_else(|| {
            Failure::usage(
                "no criticality input: pass --severity/--exposure/--controllability or a case \
                 whose meta declares them",
            )
        })?,
        _ => {
            return Err(Failure::usage(
                "--severity, --exposure and --controllability must be given together",
            ))
        }
    };

    let rating: CriticalityRating = match &config.criticality_table {
        Some(table) => criticality_with(table, input),
        None => criticality(input),
    };

    if config.format == OutputFormat::Json {
        let artifacts: Vec<String> =
            rating.rigour.required_artifacts.iter().map(|a| a.to_string()).collect();
        let rules: Vec<&str> = rating.rigour.mandatory_error_rules.iter().copied().collect();
        let document = serde_json::json!({
            "severity": input.severity.keyword(),
            "exposure": input.exposure.keyword(),
            "controllability": input.controllability.keyword(),
            "level": rating.level.keyword(),
            "required_artifacts": artifacts,
            "mandatory_error_rules": rules,
        });
        let rendered = serde_json::to_string_pretty(&document).expect("rating serializes");
        let _ = writeln!(stdout, "{rendered}");
    } else {
        let _ = writeln!(
            stdout,
            "severity {} x exposure {} x controllability {} -> {}",
            input.severity, input.exposure, input.controllability, rating.level
        );
        let artifacts: Vec<String> =
            rating.rigour.required_artifacts.iter().map(|a| a.to_string()).collect();
        let _ = writeln!(stdout, "required artifacts: {}", artifacts.join(", "));
        let rules: Vec<&str> = rating.rigour.mandatory_error_rules.iter().copied().collect();
        if !rules.is_empty() {
            let _ = writeln!(stdout, "mandatory error rules: {}", rules.join(", "));
        }
    }
    Ok(0)
}
