//! Confirmation-theoretic weighing of evidence.
//!
//! The scheme is deliberately comparative, not probabilistic: a body of
//! evidence confirms a claim to the extent it is more expected when the claim
//! holds than when it does not. Numerically that is the log-likelihood ratio
//! `ln(P(E|C) / P(E|¬C))`, bucketed into five coarse categories. Assessors may
//! also record a category directly, without likelihoods — subjective inputs
//! rarely deserve point estimates.
//!
//! Per-claim aggregation across the three assessment dimensions is
//! weakest-link: the minimum category. Nothing is ever multiplied across
//! evidence items, which are typically overlapping and non-independent.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::address::NodeAddress;
use crate::model::SafetyCase;

/// The lens an assessment looks through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    /// Do the proxy tasks measure the capability the claim talks about?
    ProxyValidity,
    /// What did the runs actually show?
    BenchmarkPerformance,
    /// Does the result carry over from the evaluation setting to deployment?
    Transfer,
}

impl Dimension {
    pub const ALL: [Dimension; 3] =
        [Dimension::ProxyValidity, Dimension::BenchmarkPerformance, Dimension::Transfer];

    pub fn keyword(self) -> &'static str {
        match self {
            Dimension::ProxyValidity => "proxy_validity",
            Dimension::BenchmarkPerformance => "benchmark_performance",
            Dimension::Transfer => "transfer",
        }
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Dimension, String> {
        match s {
            "proxy_validity" => Ok(Dimension::ProxyValidity),
            "benchmark_performance" => Ok(Dimension::BenchmarkPerformance),
            "transfer" => Ok(Dimension::Transfer),
            other => Err(format!("unknown dimension {other:?}")),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Comparative evidential force, weakest first so `Ord` gives weakest-link
/// aggregation via `min`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfirmationCategory {
    Disconfirmation,
    MixedOrNeutral,
    WeakConfirmation,
    ModerateConfirmation,
    StrongConfirmation,
}

impl ConfirmationCategory {
    pub fn keyword(self) -> &'static str {
        match self {
            ConfirmationCategory::Disconfirmation => "disconfirmation",
            ConfirmationCategory::MixedOrNeutral => "mixed_or_neutral",
            ConfirmationCategory::WeakConfirmation => "weak_confirmation",
            ConfirmationCategory::ModerateConfirmation => "moderate_confirmation",
            ConfirmationCategory::StrongConfirmation => "strong_confirmation",
        }
    }
}

impl FromStr for ConfirmationCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<ConfirmationCategory, String> {
        match s {
            "disconfirmation" => Ok(ConfirmationCategory::Disconfirmation),
            "mixed_or_neutral" => Ok(ConfirmationCategory::MixedOrNeutral),
            "weak_confirmation" => Ok(ConfirmationCategory::WeakConfirmation),
            "moderate_confirmation" => Ok(ConfirmationCategory::ModerateConfirmation),
            "strong_confirmation" => Ok(ConfirmationCategory::StrongConfirmation),
            other => Err(format!("unknown confirmation category {other:?}")),
        }
    }
}

impl fmt::Display for ConfirmationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Category boundaries on the log-likelihood-ratio axis.
///
/// Values at or above `strong_min` are strong confirmation; `[moderate_min,
/// strong_min)` moderate; `[weak_min, moderate_min)` weak; the open interval
/// `(disconfirm_max, weak_min)` mixed or neutral; anything at or below
/// `disconfirm_max` disconfirmation. The disconfirmation boundary sits below
/// zero so that tiny negative scores — noise, given how subjective the inputs
/// are — still read as neutral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub strong_min: f64,
    pub moderate_min: f64,
    pub weak_min: f64,
    pub disconfirm_max: f64,
}

impl Default for Thresholds {
    fn default() -> Thresholds {
        Thresholds { strong_min: 2.0, moderate_min: 1.0, weak_min: 0.2, disconfirm_max: -0.2 }
    }
}

impl Thresholds {
    /// Thresholds must be strictly ordered (and finite) or categorize would
    /// not be monotone.
    pub fn validate(&self) -> Result<(), ConfirmError> {
        let ordered = self.disconfirm_max < self.weak_min
            && self.weak_min < self.moderate_min
            && self.moderate_min < self.strong_min;
        let finite = [self.strong_min, self.moderate_min, self.weak_min, self.disconfirm_max]
            .iter()
            .all(|v| v.is_finite());
        if ordered && finite {
            Ok(())
        } else {
            Err(ConfirmError::BadThresholds)
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfirmError {
    #[error("likelihood {0} out of range: probabilities must lie in (0, 1]")]
    OutOfRangeProbability(f64),
    #[error("log-likelihood ratio must be finite")]
    NonFiniteInput,
    #[error("thresholds must be finite and strictly ordered")]
    BadThresholds,
    #[error("stored category {stored} disagrees with categorize(llr) = {computed}")]
    CategoryMismatch { stored: ConfirmationCategory, computed: ConfirmationCategory },
    #[error("no assessments supplied")]
    EmptyInput,
    #[error("assessments mix claims {0} and {1}")]
    MixedClaims(NodeAddress, NodeAddress),
    #[error("assessment references {reference} which is not a {expected} in the case")]
    DanglingAssessment { reference: NodeAddress, expected: &'static str },
}

/// Log-likelihood ratio `ln(p_e_given_c / p_e_given_not_c)`.
///
/// Both probabilities must lie in the half-open interval `(0, 1]`; zero is
/// excluded because it would assert the evidence is impossible under one
/// hypothesis, which no subjective assessment can honestly claim.
pub fn llr(p_e_given_c: f64, p_e_given_not_c: f64) -> Result<f64, ConfirmError> {
    for p in [p_e_given_c, p_e_given_not_c] {
        if !(p > 0.0 && p <= 1.0) {
            return Err(ConfirmError::OutOfRangeProbability(p));
        }
    }
    Ok((p_e_given_c / p_e_given_not_c).ln())
}

/// Buckets a log-likelihood ratio into the five categories.
pub fn categorize(
    llr_value: f64,
    thresholds: &Thresholds,
) -> Result<ConfirmationCategory, ConfirmError> {
    if !llr_value.is_finite() {
        return Err(ConfirmError::NonFiniteInput);
    }
    thresholds.validate()?;
    Ok(if llr_value >= thresholds.strong_min {
        ConfirmationCategory::StrongConfirmation
    } else if llr_value >= thresholds.moderate_min {
        ConfirmationCategory::ModerateConfirmation
    } else if llr_value >= thresholds.weak_min {
        ConfirmationCategory::WeakConfirmation
    } else if llr_value > thresholds.disconfirm_max {
        ConfirmationCategory::MixedOrNeutral
    } else {
        ConfirmationCategory::Disconfirmation
    })
}

/// One assessor judgment: how strongly a body of evidence bears on a claim,
/// viewed through one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfirmationAssessment {
    pub claim: NodeAddress,
    pub evidence: NodeAddress,
    pub dimension: Dimension,
    /// Optional `(P(E|C), P(E|¬C))` pair backing the category.
    pub likelihoods: Option<(f64, f64)>,
    pub category: ConfirmationCategory,
    pub rationale: String,
}

impl ConfirmationAssessment {
    /// Builds an assessment with a directly judged category (no likelihoods).
    pub fn judged(
        claim: NodeAddress,
        evidence: NodeAddress,
        dimension: Dimension,
        category: ConfirmationCategory,
        rationale: &str,
    ) -> ConfirmationAssessment {
        ConfirmationAssessment {
            claim,
            evidence,
            dimension,
            likelihoods: None,
            category,
            rationale: rationale.to_string(),
        }
    }

    /// Builds an assessment backed by a likelihood pair; the stored category
    /// must equal `categorize(llr(p, q))` under the default thresholds.
    pub fn with_likelihoods(
        claim: NodeAddress,
        evidence: NodeAddress,
        dimension: Dimension,
        p_e_given_c: f64,
        p_e_given_not_c: f64,
        category: ConfirmationCategory,
        rationale: &str,
    ) -> Result<ConfirmationAssessment, ConfirmError> {
        let computed = categorize(llr(p_e_given_c, p_e_given_not_c)?, &Thresholds::default())?;
        if computed != category {
            return Err(ConfirmError::CategoryMismatch { stored: category, computed });
        }
        Ok(ConfirmationAssessment {
            claim,
            evidence,
            dimension,
            likelihoods: Some((p_e_given_c, p_e_given_not_c)),
            category,
            rationale: rationale.to_string(),
        })
    }
}

/// Weakest-link aggregate for one claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimWeight {
    pub claim: NodeAddress,
    /// Category per dimension; a dimension may carry several assessments, in
    /// which case its weakest category stands.
    pub dimensions: BTreeMap<Dimension, ConfirmationCategory>,
    /// Dimensions nobody assessed. They do not default to anything — they are
    /// simply reported as gaps.
    pub missing_dimensions: Vec<Dimension>,
    pub aggregate: ConfirmationCategory,
    /// Rationale excerpts in input order.
    pub rationales: Vec<String>,
}

/// Weakest-link aggregation across dimensions for a single claim.
pub fn aggregate_claim(
    assessments: &[ConfirmationAssessment],
) -> Result<ClaimWeight, ConfirmError> {
    let first = assessments.first().ok_or(ConfirmError::EmptyInput)?;
    let mut dimensions: BTreeMap<Dimension, ConfirmationCategory> = BTreeMap::new();
    let mut rationales = Vec::new();
    for assessment in assessments {
        if assessment.claim != first.claim {
            return Err(ConfirmError::MixedClaims(first.claim.clone(), assessment.claim.clone()));
        }
        dimensions
            .entry(assessment.dimension)
            .and_modify(|held| *held = (*held).min(assessment.category))
            .or_insert(assessment.category);
        if !assessment.rationale.is_empty() {
            rationales.push(assessment.rationale.clone());
        }
    }
    let aggregate = dimensions.values().copied().min().expect("nonempty by construction");
    let missing_dimensions = Dimension::ALL
        .into_iter()
        .filter(|d| !dimensions.contains_key(d))
        .collect();
    Ok(ClaimWeight {
        claim: first.claim.clone(),
        dimensions,
        missing_dimensions,
        aggregate,
        rationales,
    })
}

/// Per-claim weigh table for a whole case, rows ordered by claim address.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct WeighTable {
    pub rows: Vec<ClaimWeight>,
}

impl WeighTable {
    pub fn row(&self, claim: &NodeAddress) -> Option<&ClaimWeight> {
        self.rows.iter().find(|r| r.claim == *claim)
    }

    /// Markdown rendering with one row per assessed claim.
    pub fn to_markdown(&self, case: &SafetyCase) -> String {
        if self.rows.is_empty() {
            return "no assessments\n".to_string();
        }
        let mut out = String::from(
            "| Claim | Proxy validity | Benchmark performance | Transfer | Aggregate |\n\
             |---|---|---|---|---|\n",
        );
        for row in &self.rows {
            let cell = |d: Dimension| {
                row.dimensions.get(&d).map(|c| c.keyword().to_string()).unwrap_or_else(|| "—".into())
            };
            let text = case.node(&row.claim).map(|n| n.text.as_str()).unwrap_or("");
            out.push_str(&format!(
                "| {} {} | {} | {} | {} | **{}** |\n",
                row.claim,
                text,
                cell(Dimension::ProxyValidity),
                cell(Dimension::BenchmarkPerformance),
                cell(Dimension::Transfer),
                row.aggregate.keyword(),
            ));
        }
        out
    }
}

/// Aggregates every assessed claim in the case.
pub fn weigh_case(case: &SafetyCase) -> Result<WeighTable, ConfirmError> {
    let mut by_claim: BTreeMap<NodeAddress, Vec<ConfirmationAssessment>> = BTreeMap::new();
    for assessment in case.assessments() {
        if case.node(&assessment.claim).is_none() {
            return Err(ConfirmError::DanglingAssessment {
                reference: assessment.claim.clone(),
                expected: "claim",
            });
        }
        if case.node(&assessment.evidence).is_none() {
            return Err(ConfirmError::DanglingAssessment {
                reference: assessment.evidence.clone(),
                expected: "evidence node",
            });
        }
        by_claim.entry(assessment.claim.clone()).or_default().push(assessment.clone());
    }
    let rows = by_claim
        .values()
        .map(|group| aggregate_claim(group))
        .collect::<Result<Vec<ClaimWeight>, ConfirmError>>()?;
    Ok(WeighTable { rows })
}
