//! Compliance linting against the bundled 30-case hand-labeled corpus,
//! plus lexeme-isolation, word-boundary, and property checks.

use lexbench::compliance::check;
use lexbench::conditions::{ConditionId, ConditionSpec};
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct Corpus {
    cases: Vec<Case>,
}

#[derive(Deserialize)]
struct Case {
    text: String,
    condition: String,
    flagged: Vec<String>,
    exempted: Vec<String>,
}

fn corpus() -> Corpus {
    serde_json::from_str(lexbench::compliance_corpus_json()).unwrap()
}

#[test]
fn hand_labeled_corpus_full_agreement() {
    let corpus = corpus();
    assert_eq!(corpus.cases.len(), 30);
    for case in &corpus.cases {
        let spec = ConditionSpec::get(ConditionId::parse(&case.condition).unwrap());
        let report = check(&case.text, &spec);
        let flagged: Vec<&str> = report.violations.iter().map(|v| v.lexeme.as_str()).collect();
        let exempted: Vec<&str> = report.exemptions.iter().map(|v| v.lexeme.as_str()).collect();
        assert_eq!(flagged, case.flagged, "flags for {:?}", case.text);
        assert_eq!(exempted, case.exempted, "exemptions for {:?}", case.text);
    }
}

#[test]
fn every_banned_lexeme_flagged_in_isolation() {
    for id in [ConditionId::EPrime, ConditionId::NoHave, ConditionId::NeutralBan] {
        let spec = ConditionSpec::get(id);
        for lexeme in &spec.banned_lexemes {
            let report = check(lexeme, &spec);
            assert_eq!(
                report.violations.len(),
                1,
                "{lexeme:?} alone under {id}"
            );
            assert_eq!(report.violations[0].lexeme, *lexeme);
            // And embedded in a clean carrier sentence.
            let text = format!("The token {lexeme} appears here.");
            let report = check(&text, &spec);
            assert_eq!(report.violations.len(), 1, "{lexeme:?} embedded under {id}");
        }
    }
}

#[test]
fn word_boundaries_never_leak() {
    // Carrier words containing banned forms as substrings. Hyphenated
    // compounds are absent on purpose: those split at the hyphen and any
    // banned half counts.
    let carriers = [
        "this", "island", "hasten", "justify", "adjust", "privately",
        "behave", "behaves", "shaved", "amend", "rebel", "wasteland", "wherewithal",
        "overjustified", "prettier", "literal", "realize",
    ];
    for id in [ConditionId::EPrime, ConditionId::NoHave, ConditionId::NeutralBan] {
        let spec = ConditionSpec::get(id);
        for carrier in carriers {
            // Skip carriers that ARE banned lexemes (none are, by design).
            assert!(!spec.banned_lexemes.contains(carrier));
            let text = format!("We {carrier} the plan.");
            let report = check(&text, &spec);
            assert!(
                report.fully_compliant,
                "{carrier:?} leaked a match under {id}"
            );
        }
    }
}

#[test]
fn exemption_safety_synonym_substitution() {
    // Replacing each exempted occurrence with an out-of-list synonym leaves
    // the non-exempt count unchanged.
    let spec = ConditionSpec::get(ConditionId::NeutralBan);
    let original = "We choose speed rather than accuracy, and it reads just as well; still, a very odd gap remains.";
    let substituted = "We choose speed instead of accuracy, and it reads equally well; still, a very odd gap remains.";
    let before = check(original, &spec);
    let after = check(substituted, &spec);
    assert_eq!(before.violations.len(), after.violations.len());
    assert_eq!(before.violations.len(), 1); // "very"
    assert_eq!(before.exemptions.len(), 2);
    assert_eq!(after.exemptions.len(), 0);
}

proptest! {
    /// Appending a fresh sentence never decreases the violation count
    /// (sentence-bounded exemptions cannot reach across the boundary).
    #[test]
    fn appending_sentences_is_monotone(
        base in "[a-zA-Z ,.]{0,80}",
        addition in "[a-zA-Z ,.]{0,80}",
        cond in prop_oneof![
            Just(ConditionId::EPrime),
            Just(ConditionId::NoHave),
            Just(ConditionId::NeutralBan)
        ],
    ) {
        let spec = ConditionSpec::get(cond);
        let before = check(&base, &spec).violations.len();
        let extended = format!("{base}. {addition}");
        let after = check(&extended, &spec).violations.len();
        prop_assert!(after >= before, "{base:?} + {addition:?}: {before} -> {after}");
    }

    /// check() is a pure function of (text, condition).
    #[test]
    fn check_is_idempotent(text in "[a-zA-Z' ,.!?]{0,120}") {
        for id in ConditionId::ALL {
            let spec = ConditionSpec::get(id);
            prop_assert_eq!(check(&text, &spec), check(&text, &spec));
        }
    }

    /// Control and the elaborated prompt accept anything.
    #[test]
    fn unconstrained_conditions_always_compliant(text in "\\PC{0,200}") {
        for id in [ConditionId::Control, ConditionId::ElaboratedPrompt] {
            let spec = ConditionSpec::get(id);
            let report = check(&text, &spec);
            prop_assert!(report.fully_compliant);
            prop_assert_eq!(report.compliance_rate, 1.0);
        }
    }
}
