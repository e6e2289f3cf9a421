//! Dialectical-engagement coding against the bundled 20-case hand-labeled
//! fixture.

use lexbench::qualcode::{code_response, PatternSet};
use serde::Deserialize;

#[derive(Deserialize)]
struct Fixture {
    cases: Vec<Case>,
}

#[derive(Deserialize)]
struct Case {
    text: String,
    dialectical: bool,
}

#[test]
fn dialectical_fixture_full_agreement() {
    let fixture: Fixture =
        serde_json::from_str(include_str!("data/dialectical_cases.json")).unwrap();
    assert_eq!(fixture.cases.len(), 20);
    let patterns = PatternSet::default_set();
    for case in &fixture.cases {
        let coded = code_response(&case.text, &patterns);
        assert_eq!(
            coded.dialectical, case.dialectical,
            "dialectical label for {:?}",
            case.text
        );
    }
}
