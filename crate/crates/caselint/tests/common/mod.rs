//! Seeded random-case generator shared by the integration tests. Everything
//! it produces goes through the strict builder API, so every generated case
//! is structurally valid by construction.

use std::collections::BTreeSet;

use caselint::confirm::{
    categorize, llr, ConfirmationAssessment, ConfirmationCategory, Dimension, Thresholds,
};
use caselint::defeater::{DefeaterOrigin, DefeaterStatus, TransitionRefs};
use caselint::model::{
    ArgumentSubtype, CaseKind, CaseMeta, CaseNode, EdgeSpec, HarmThreshold, NodeKind, SafetyCase,
    ValidityWindow,
};
use caselint::risk::{CriticalityInput, Grade};
use caselint::{KindTag, NodeAddress};

use chrono::{Days, NaiveDate};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "the", "monitor", "relay", "cutoff", "sensor", "bound", "holds", "under", "load", "margin",
    "within", "range", "review", "trace", "audit", "fails", "safe", "limits", "duty", "cycle",
    "guard", "latch", "vendor", "drift", "probe",
];

fn word(rng: &mut ChaCha8Rng) -> &'static str {
    WORDS[rng.random_range(0..WORDS.len())]
}

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(3..9);
    (0..n).map(|_| word(rng)).collect::<Vec<_>>().join(" ")
}

fn random_meta(rng: &mut ChaCha8Rng, index: usize) -> CaseMeta {
    let mut meta = CaseMeta::new(&format!("generated_case_{index}"));
    if rng.random_bool(0.2) {
        meta.case_kind = CaseKind::CounterCase;
    }
    if rng.random_bool(0.7) {
        meta.assured_property = Some(sentence(rng));
    }
    if rng.random_bool(0.5) {
        let mut threshold = HarmThreshold {
            economic_usd: rng
                .random_bool(0.7)
                .then(|| f64::from(rng.random_range(1..=1_000_000u32)) * 1000.0),
            fatalities: rng.random_bool(0.5).then(|| rng.random_range(0..=1000)),
            casualties: rng.random_bool(0.5).then(|| rng.random_range(0..=10_000)),
            scope_note: rng.random_bool(0.4).then(|| sentence(rng)),
        };
        if threshold.is_empty() {
            // An entirely empty threshold block would serialize to nothing.
            threshold.fatalities = Some(rng.random_range(1..=100));
        }
        meta.harm_threshold = Some(threshold);
    }
    if rng.random_bool(0.5) {
        meta.purpose = Some(sentence(rng));
    }
    if rng.random_bool(0.4) {
        meta.supported_decision = Some(sentence(rng));
    }
    if rng.random_bool(0.5) {
        meta.system_model_ref = Some(format!("SYS-{}", rng.random_range(1..100)));
    }
    if rng.random_bool(0.5) {
        meta.environment_ref = Some(format!("ENV-{}", rng.random_range(1..100)));
    }
    if rng.random_bool(0.6) {
        let issued =
            NaiveDate::from_ymd_opt(2026, 1, 1).unwrap() + Days::new(rng.random_range(0..365));
        let expires =
            rng.random_bool(0.6).then(|| issued + Days::new(rng.random_range(30..900)));
        let reevaluation_triggers = (0..rng.random_range(0..3)).map(|_| sentence(rng)).collect();
        let validity_boundaries = (0..rng.random_range(0..3)).map(|_| sentence(rng)).collect();
        meta.validity =
            Some(ValidityWindow { issued, expires, reevaluation_triggers, validity_boundaries });
    }
    for _ in 0..rng.random_range(0..3) {
        let term = format!("{} {}", word(rng), word(rng));
        meta.glossary.insert(term, sentence(rng));
    }
    if rng.random_bool(0.5) {
        meta.criticality = Some(CriticalityInput::new(
            Grade::ALL[rng.random_range(0..3)],
            Grade::ALL[rng.random_range(0..3)],
            Grade::ALL[rng.random_range(0..3)],
        ));
    }
    meta
}

fn sprinkle_defeaters(
    mut case: SafetyCase,
    rng: &mut ChaCha8Rng,
    target: &NodeAddress,
) -> SafetyCase {
    if !rng.random_bool(0.25) {
        return case;
    }
    for _ in 0..rng.random_range(1..=2) {
        let origin = if rng.random_bool(0.5) {
            DefeaterOrigin::Developer
        } else {
            DefeaterOrigin::Reviewer
        };
        let (next, address) = case.attach_defeater(target, origin, &sentence(rng)).unwrap();
        case = next;
        case = match rng.random_range(0..3) {
            0 => case, // stays open
            1 => case
                .transition_defeater(
                    &address,
                    DefeaterStatus::Mitigated,
                    TransitionRefs::mitigation("MIT-1"),
                    "author",
                    "reworked the argument",
                )
                .unwrap(),
            _ => case
                .transition_defeater(
                    &address,
                    DefeaterStatus::AcceptedWithRiskAssessment,
                    TransitionRefs::risk_assessment("RA-1"),
                    "author",
                    "accepted the residual risk",
                )
                .unwrap(),
        };
    }
    case
}

fn develop_claim(
    mut case: SafetyCase,
    rng: &mut ChaCha8Rng,
    claim: &NodeAddress,
    depth: usize,
) -> SafetyCase {
    case = sprinkle_defeaters(case, rng, claim);
    let develop_p = [0.9, 0.55, 0.3, 0.0][depth.min(3)];
    if develop_p == 0.0 || !rng.random_bool(develop_p) {
        return case;
    }

    let subtype = [
        ArgumentSubtype::Conjunctive,
        ArgumentSubtype::Disjunctive,
        ArgumentSubtype::EvidenceIncorporation,
    ][rng.random_range(0..3)];

    let mut children = Vec::new();
    let mut child_claims = Vec::new();
    if subtype == ArgumentSubtype::EvidenceIncorporation {
        for i in 1..=rng.random_range(1..=2) {
            let evidence = claim.child(KindTag::Evidence, i);
            case = case
                .add_node(
                    CaseNode::evidence(evidence.clone(), &sentence(rng)).unwrap(),
                    EdgeSpec::none(),
                )
                .unwrap();
            children.push(evidence);
        }
    } else {
        for i in 1..=rng.random_range(1..=3) {
            let sub = claim.child(KindTag::Claim, i);
            let mut node = CaseNode::claim(sub.clone(), &sentence(rng)).unwrap();
            if rng.random_bool(0.2) {
                node = node.with_terms([format!("{} {}", word(rng), word(rng))]).unwrap();
            }
            case = case.add_node(node, EdgeSpec::none()).unwrap();
            children.push(sub.clone());
            child_claims.push(sub);
        }
    }

    let mut warrants = Vec::new();
    if rng.random_bool(0.3) {
        let warrant = claim.child(KindTag::Warrant, 1);
        case = case
            .add_node(
                CaseNode::side_warrant(warrant.clone(), &sentence(rng)).unwrap(),
                EdgeSpec::none(),
            )
            .unwrap();
        warrants.push(warrant);
    }

    let argument = claim.with_tag(KindTag::Argument);
    case = case
        .add_node(
            CaseNode::argument(argument.clone(), subtype, &sentence(rng)).unwrap(),
            EdgeSpec::supports(claim.clone()).with_children(children).with_warrants(warrants),
        )
        .unwrap();
    case = sprinkle_defeaters(case, rng, &argument);

    for sub in child_claims {
        case = develop_claim(case, rng, &sub, depth + 1);
    }
    case
}

fn random_assessments(case: &SafetyCase, rng: &mut ChaCha8Rng) -> Vec<ConfirmationAssessment> {
    let claims: Vec<NodeAddress> = case
        .nodes()
        .filter(|n| n.kind == NodeKind::Claim)
        .map(|n| n.address.clone())
        .collect();
    let evidence: Vec<NodeAddress> = case
        .nodes()
        .filter(|n| n.kind == NodeKind::Evidence)
        .map(|n| n.address.clone())
        .collect();
    if evidence.is_empty() {
        return Vec::new();
    }

    let categories = [
        ConfirmationCategory::Disconfirmation,
        ConfirmationCategory::MixedOrNeutral,
        ConfirmationCategory::WeakConfirmation,
        ConfirmationCategory::ModerateConfirmation,
        ConfirmationCategory::StrongConfirmation,
    ];
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for _ in 0..rng.random_range(0..5) {
        let claim = claims[rng.random_range(0..claims.len())].clone();
        let exhibit = evidence[rng.random_range(0..evidence.len())].clone();
        let dimension = Dimension::ALL[rng.random_range(0..3)];
        if !seen.insert((claim.clone(), exhibit.clone(), dimension)) {
            continue;
        }
        let rationale = if rng.random_bool(0.7) { sentence(rng) } else { String::new() };
        if rng.random_bool(0.5) {
            let p: f64 = rng.random_range(0.05..0.95);
            let q: f64 = rng.random_range(0.05..0.95);
            let category = categorize(llr(p, q).unwrap(), &Thresholds::default()).unwrap();
            rows.push(
                ConfirmationAssessment::with_likelihoods(
                    claim, exhibit, dimension, p, q, category, &rationale,
                )
                .unwrap(),
            );
        } else {
            let category = categories[rng.random_range(0..categories.len())];
            rows.push(ConfirmationAssessment::judged(
                claim, exhibit, dimension, category, &rationale,
            ));
        }
    }
    rows
}

/// A structurally valid case grown from a single root claim, with random
/// meta, argument structure, defeater lifecycles, and assessments.
pub fn random_case(rng: &mut ChaCha8Rng, index: usize) -> SafetyCase {
    let root = NodeAddress::new(KindTag::Claim, vec![1]);
    let mut case = SafetyCase::new(random_meta(rng, index))
        .add_node(CaseNode::claim(root.clone(), &sentence(rng)).unwrap(), EdgeSpec::none())
        .unwrap();
    case = develop_claim(case, rng, &root, 0);
    let assessments = random_assessments(&case, rng);
    case.with_assessments(assessments)
}
