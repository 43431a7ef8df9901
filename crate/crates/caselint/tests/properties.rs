//! Property-based checks of the library invariants: confirmation-measure
//! identities, aggregation behaviour, criticality monotonicity, gate
//! coherence, and format round-trips over machine-generated cases.

mod common;

use caselint::confirm::{
    aggregate_claim, categorize, llr, ConfirmationAssessment, ConfirmationCategory, Dimension,
    Thresholds,
};
use caselint::defeater::{DefeaterOrigin, DefeaterStatus, GateResult};
use caselint::lint::{lint, LintConfig};
use caselint::model::Verdict;
use caselint::risk::{criticality, CriticalityInput, Grade};
use caselint::{parse_case, serialize_case, KindTag, NodeAddress};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CATEGORIES: [ConfirmationCategory; 5] = [
    ConfirmationCategory::Disconfirmation,
    ConfirmationCategory::MixedOrNeutral,
    ConfirmationCategory::WeakConfirmation,
    ConfirmationCategory::ModerateConfirmation,
    ConfirmationCategory::StrongConfirmation,
];

fn addr(s: &str) -> NodeAddress {
    s.parse().unwrap()
}

proptest! {
    /// The measure is the log of a quotient, so it must equal the difference
    /// of logs (an independent formulation) and negate when the likelihoods
    /// swap roles.
    #[test]
    fn llr_matches_the_log_difference_and_is_antisymmetric(
        p in 0.001f64..=1.0,
        q in 0.001f64..=1.0,
    ) {
        let forward = llr(p, q).unwrap();
        let backward = llr(q, p).unwrap();
        prop_assert!((forward - (p.ln() - q.ln())).abs() < 1e-9);
        prop_assert!((forward + backward).abs() < 1e-9);
    }

    #[test]
    fn categorize_is_monotone(a in -8.0f64..8.0, b in -8.0f64..8.0) {
        let thresholds = Thresholds::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(
            categorize(lo, &thresholds).unwrap() <= categorize(hi, &thresholds).unwrap()
        );
    }

    /// A likelihood-backed assessment only constructs when the claimed
    /// category agrees with what the likelihoods compute to.
    #[test]
    fn mismatched_categories_are_rejected(
        p in 0.05f64..0.95,
        q in 0.05f64..0.95,
        claimed_index in 0usize..5,
    ) {
        let computed = categorize(llr(p, q).unwrap(), &Thresholds::default()).unwrap();
        let claimed = CATEGORIES[claimed_index];
        let row = ConfirmationAssessment::with_likelihoods(
            addr("C1"),
            addr("E1.1"),
            Dimension::Transfer,
            p,
            q,
            claimed,
            "",
        );
        prop_assert_eq!(row.is_ok(), claimed == computed);
    }

    #[test]
    fn aggregation_is_weakest_link_and_order_invariant(
        indices in prop::collection::vec(0usize..5, 1..8),
    ) {
        let rows: Vec<ConfirmationAssessment> = indices
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                ConfirmationAssessment::judged(
                    addr("C1"),
                    addr(&format!("E1.{}", i + 1)),
                    Dimension::ALL[i % 3],
                    CATEGORIES[c],
                    "",
                )
            })
            .collect();
        let weakest = indices.iter().map(|&c| CATEGORIES[c]).min().unwrap();
        prop_assert_eq!(aggregate_claim(&rows).unwrap().aggregate, weakest);

        let mut reversed = rows.clone();
        reversed.reverse();
        prop_assert_eq!(aggregate_claim(&reversed).unwrap().aggregate, weakest);
    }

    #[test]
    fn worsening_a_coordinate_never_lowers_criticality(
        s in 0usize..3,
        e in 0usize..3,
        c in 0usize..3,
        coordinate in 0usize..3,
    ) {
        let base = CriticalityInput::new(Grade::ALL[s], Grade::ALL[e], Grade::ALL[c]);
        let mut worse = base;
        match coordinate {
            0 if s < 2 => worse.severity = Grade::ALL[s + 1],
            1 if e < 2 => worse.exposure = Grade::ALL[e + 1],
            // Controllability runs the other way: less of it is worse.
            2 if c > 0 => worse.controllability = Grade::ALL[c - 1],
            _ => return Ok(()), // already at the worst edge on that coordinate
        }
        prop_assert!(criticality(worse).level >= criticality(base).level);
    }

    #[test]
    fn generated_cases_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = common::random_case(&mut rng, 0);
        let text = serialize_case(&case);
        let outcome = parse_case(&text, "prop.cae");
        prop_assert!(!outcome.has_errors(), "diagnostics: {:?}", outcome.diagnostics);
        let reparsed = outcome.case.unwrap();
        prop_assert_eq!(&reparsed, &case);
        prop_assert_eq!(serialize_case(&reparsed), text);
    }

    #[test]
    fn lint_is_parallelism_invariant(seed in any::<u64>(), jobs in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = common::random_case(&mut rng, 0);
        let serial = lint(&case, &LintConfig::default()).unwrap();
        let parallel = lint(&case, &LintConfig { jobs, ..LintConfig::default() }).unwrap();
        prop_assert_eq!(serial, parallel);
    }

    /// The residual-risk gate, the defeater tally, and rule R05 are three
    /// views of the same census and may never disagree. (Generated cases
    /// always carry the required reference when a defeater is accepted, so
    /// R05 reduces to the open count.)
    #[test]
    fn gate_tally_and_unresolved_findings_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = common::random_case(&mut rng, 0);
        let open = case
            .nodes()
            .filter(|n| n.status == Some(DefeaterStatus::Open))
            .count();
        let findings = lint(&case, &LintConfig::default()).unwrap();
        let unresolved = findings.iter().filter(|f| f.rule_id == "R05").count();
        prop_assert_eq!(unresolved, open);
        prop_assert_eq!(case.tally().by_status(DefeaterStatus::Open), open);
        prop_assert_eq!(matches!(case.residual_gate(), GateResult::Accepted), open == 0);
    }

    /// The strict builder cannot express a directly attached exhibit, so the
    /// direct-attachment rule must stay silent on anything it produces.
    #[test]
    fn strictly_built_cases_never_trigger_direct_attachment(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = common::random_case(&mut rng, 0);
        let findings = lint(&case, &LintConfig::default()).unwrap();
        prop_assert!(findings.iter().all(|f| f.rule_id != "R06"));
    }

    #[test]
    fn an_open_defeater_blocks_completion(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = common::random_case(&mut rng, 0);
        let root = case.root_claim().unwrap().address.clone();
        let (case, _) = case
            .attach_defeater(&root, DefeaterOrigin::Reviewer, "a fresh doubt")
            .unwrap();
        let findings = lint(&case, &LintConfig::default()).unwrap();
        prop_assert_ne!(case.verdict(&findings).unwrap(), Verdict::Complete);
        prop_assert!(matches!(case.residual_gate(), GateResult::Rejected(_)));
    }

    #[test]
    fn addresses_round_trip_and_order_numerically(
        tag in 0usize..4,
        path in prop::collection::vec(1u32..60, 1..5),
        ordinal in prop::option::of(1u32..9),
    ) {
        let tags = [KindTag::Claim, KindTag::Argument, KindTag::Evidence, KindTag::Warrant];
        let address = match ordinal {
            Some(n) => NodeAddress::defeater(path.clone(), n),
            None => NodeAddress::new(tags[tag], path.clone()),
        };
        let display = address.to_string();
        let parsed: NodeAddress = display.parse().unwrap();
        prop_assert_eq!(&parsed, &address);

        // Bumping the final path component moves the address later, however
        // many digits that takes — ordering is numeric, not lexicographic.
        if ordinal.is_none() {
            let mut bumped_path = path.clone();
            *bumped_path.last_mut().unwrap() += 1;
            let bumped = NodeAddress::new(tags[tag], bumped_path);
            prop_assert!(address < bumped);
        }
    }
}
