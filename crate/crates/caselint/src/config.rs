//! Run configuration: defaults, config-file overlay, and the places the CLI
//! flags land. Precedence is flags > file > defaults; the file is found via
//! `--config`, then the `CASELINT_CONFIG` environment variable.
//!
//! The file format is flat `key = value` lines with `#` comments:
//!
//! ```text
//! fail_level = warning
//! format = json
//! rule.R04 = off
//! rule.R07 = error
//! confirm.strong_min = 2.5
//! criticality_table = ./table.crit
//! threats = ./model.threats
//! jobs = 4
//! ```
//!
//! Unknown keys are errors here (unlike in `.cae` files): a typo in
//! configuration silently changes what gets enforced, so it must not pass.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::confirm::Thresholds;
use crate::lint::{LintConfig, Severity};
use crate::risk::{CriticalityLevel, CriticalityTable, Grade};
use crate::threat::RiskPathway;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
    Markdown,
    Dot,
}

impl OutputFormat {
    pub fn keyword(self) -> &'static str {
        match self {
            OutputFormat::Text => "text",
            OutputFormat::Json => "json",
            OutputFormat::Markdown => "markdown",
            OutputFormat::Dot => "dot",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<OutputFormat, String> {
        match s {
            "text" => Ok(OutputFormat::Text),
            "json" => Ok(OutputFormat::Json),
            "markdown" => Ok(OutputFormat::Markdown),
            "dot" => Ok(OutputFormat::Dot),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("{file}:{line}: {message}")]
    Bad { file: String, line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// Everything a run needs, before the case file enters the picture.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Findings at or above this severity make `check` exit non-zero.
    pub fail_level: Severity,
    pub format: OutputFormat,
    pub no_color: bool,
    pub rule_enabled: BTreeMap<String, bool>,
    pub rule_severities: BTreeMap<String, Severity>,
    pub thresholds: Thresholds,
    pub criticality_table: Option<CriticalityTable>,
    pub threats_path: Option<PathBuf>,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            fail_level: Severity::Error,
            format: OutputFormat::Text,
            no_color: false,
            rule_enabled: BTreeMap::new(),
            rule_severities: BTreeMap::new(),
            thresholds: Thresholds::default(),
            criticality_table: None,
            threats_path: None,
            jobs: 1,
        }
    }
}

impl RunConfig {
    /// Reads a config file and overlays it on `self`.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|err| ConfigError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        self.apply_text(&text, &path.display().to_string(), base)
    }

    fn apply_text(&mut self, text: &str, file: &str, base: &Path) -> Result<(), ConfigError> {
        let bad = |line: usize, message: String| ConfigError::Bad {
            file: file.to_string(),
            line,
            message,
        };
        for (index, raw_line) in text.lines().enumerate() {
            let line_no = index + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(bad(line_no, format!("expected 'key = value', got {line:?}")));
            };
            let key = key.trim();
            let value = value.trim();
            match key {
                "fail_level" => {
                    self.fail_level =
                        value.parse::<Severity>().map_err(|e| bad(line_no, e))?;
                }
                "format" => {
                    self.format =
                        value.parse::<OutputFormat>().map_err(|e| bad(line_no, e))?;
                }
                "no_color" => {
                    self.no_color = value
                        .parse::<bool>()
                        .map_err(|e| bad(line_no, format!("bad no_color: {e}")))?;
                }
                "jobs" => {
                    self.jobs = value
                        .parse::<usize>()
                        .map_err(|e| bad(line_no, format!("bad jobs: {e}")))?;
                }
                "criticality_table" => {
                    let table_path = base.join(value);
                    let table_text =
                        std::fs::read_to_string(&table_path).map_err(|err| ConfigError::Io {
                            path: table_path.display().to_string(),
                            message: err.to_string(),
                        })?;
                    self.criticality_table = Some(
                        parse_criticality_table(
                            &table_text,
                            &table_path.display().to_string(),
                        )?,
                    );
                }
                "threats" => {
                    self.threats_path = Some(base.join(value));
                }
                _ if key.starts_with("rule.") => {
                    let rule_id = &key["rule.".len()..];
                    if !crate::lint::catalogue().iter().any(|d| d.rule_id == rule_id) {
                        return Err(bad(line_no, format!("unknown rule id {rule_id:?}")));
                    }
                    if value == "off" {
                        self.rule_enabled.insert(rule_id.to_string(), false);
                    } else {
                        let severity =
                            value.parse::<Severity>().map_err(|e| bad(line_no, e))?;
                        self.rule_enabled.insert(rule_id.to_string(), true);
                        self.rule_severities.insert(rule_id.to_string(), severity);
                    }
                }
                _ if key.starts_with("confirm.") => {
                    let field = &key["confirm.".len()..];
                    let number = value
                        .parse::<f64>()
                        .map_err(|e| bad(line_no, format!("bad threshold: {e}")))?;
                    match field {
                        "strong_min" => self.thresholds.strong_min = number,
                        "moderate_min" => self.thresholds.moderate_min = number,
                        "weak_min" => self.thresholds.weak_min = number,
                        "disconfirm_max" => self.thresholds.disconfirm_max = number,
                        _ => {
                            return Err(bad(line_no, format!("unknown threshold {field:?}")));
                        }
                    }
                }
                _ => return Err(bad(line_no, format!("unknown config key {key:?}"))),
            }
        }
        self.thresholds.validate().map_err(|err| ConfigError::Bad {
            file: file.to_string(),
            line: 0,
            message: err.to_string(),
        })?;
        Ok(())
    }

    /// Applies a `+Rxx,-Ryy` rule toggle list (the `--rules` flag).
    pub fn apply_rule_toggles(&mut self, toggles: &str) -> Result<(), ConfigError> {
        for item in toggles.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (enable, rule_id) = match item.split_at(1) {
                ("+", id) => (true, id),
                ("-", id) => (false, id),
                _ => {
                    return Err(ConfigError::Bad {
                        file: "--rules".to_string(),
                        line: 0,
                        message: format!("expected +Rxx or -Rxx, got {item:?}"),
                    })
                }
            };
            if !crate::lint::catalogue().iter().any(|d| d.rule_id == rule_id) {
                return Err(ConfigError::Bad {
                    file: "--rules".to_string(),
                    line: 0,
                    message: format!("unknown rule id {rule_id:?}"),
                });
            }
            self.rule_enabled.insert(rule_id.to_string(), enable);
        }
        Ok(())
    }

    /// Projects the run configuration down to the lint engine's view.
    pub fn lint_config(&self, threat_model: Option<Vec<RiskPathway>>) -> LintConfig {
        LintConfig {
            enabled: self.rule_enabled.clone(),
            severities: self.rule_severities.clone(),
            threat_model,
            jobs: self.jobs,
        }
    }
}

/// Parses a 27-line criticality table override: one
/// `<severity> <exposure> <controllability> = <level>` line per cell. The
/// result must be complete and monotone.
pub fn parse_criticality_table(text: &str, file: &str) -> Result<CriticalityTable, ConfigError> {
    let bad = |line: usize, message: String| ConfigError::Bad {
        file: file.to_string(),
        line,
        message,
    };
    let mut cells = Vec::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((grades, level)) = line.split_once('=') else {
            return Err(bad(line_no, "expected '<sev> <exp> <ctrl> = <level>'".to_string()));
        };
        let parts: Vec<&str> = grades.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(bad(line_no, format!("expected three grades, got {}", parts.len())));
        }
        let severity = parts[0].parse::<Grade>().map_err(|e| bad(line_no, e))?;
        let exposure = parts[1].parse::<Grade>().map_err(|e| bad(line_no, e))?;
        let controllability = parts[2].parse::<Grade>().map_err(|e| bad(line_no, e))?;
        let level = level.trim().parse::<CriticalityLevel>().map_err(|e| bad(line_no, e))?;
        cells.push((
            crate::risk::CriticalityInput::new(severity, exposure, controllability),
            level,
        ));
    }
    CriticalityTable::from_cells(&cells).map_err(|err| ConfigError::Bad {
        file: file.to_string(),
        line: 0,
        message: err.to_string(),
    })
}
