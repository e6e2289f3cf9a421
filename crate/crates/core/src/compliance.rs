//! Lexical compliance linting: banned-form detection with word-boundary
//! matching, bigram disambiguation, and sentence-level compliance rates.

use crate::conditions::{ConditionId, ConditionSpec, NeighborSide};
use crate::text::{context_window, sentence_count, tokenize};
use serde::{Deserialize, Serialize};

const CONTEXT_CHARS: usize = 40;

/// One banned-form occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// The matched banned form, lowercase.
    pub lexeme: String,
    /// Character offset of the first char of the match.
    pub start: usize,
    /// Character offset one past the match.
    pub end: usize,
    /// ±40-character window around the match.
    pub context: String,
    pub exempted: bool,
}

/// Result of linting one response against one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub condition: ConditionId,
    /// Non-exempt violations only; exempt matches live in `exemptions`.
    pub violations: Vec<Violation>,
    /// Matches excused by a bigram exemption, kept for audit output.
    pub exemptions: Vec<Violation>,
    pub sentence_total: usize,
    pub clean_sentences: usize,
    pub fully_compliant: bool,
    /// clean_sentences / sentence_total, 1.0 when the text has no sentences.
    pub compliance_rate: f64,
}

/// Compliance tier of a report under the three-threshold scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplianceTier {
    Full,
    Above90,
    Below90,
}

impl ComplianceTier {
    pub fn as_str(&self) -> &'static str {
        match self {
            ComplianceTier::Full => "full",
            ComplianceTier::Above90 => "above_90",
            ComplianceTier::Below90 => "below_90",
        }
    }
}

/// Lint `text` against a condition's ban list.
///
/// Matching is case-insensitive on whole word tokens, so banned forms never
/// fire inside longer words. A token matching an exempt bigram (adjacent
/// neighbor on the configured side, same sentence) is reported under
/// `exemptions` and excluded from all counts. Pure function of its inputs.
pub fn check(text: &str, condition: &ConditionSpec) -> ComplianceReport {
    let tokens = tokenize(text);
    let sentence_total = sentence_count(&tokens);

    let mut violations = Vec::new();
    let mut exemptions = Vec::new();
    let mut dirty_sentences = std::collections::BTreeSet::new();

    for (idx, token) in tokens.iter().enumerate() {
        if !condition.banned_lexemes.contains(&token.normalized) {
            continue;
        }
        let exempt = condition.exempt_bigrams.iter().any(|rule| {
            if rule.banned != token.normalized {
                return false;
            }
            let neighbor = match rule.side {
                NeighborSide::After => tokens.get(idx + 1),
                NeighborSide::Before => idx.checked_sub(1).and_then(|i| tokens.get(i)),
            };
            neighbor.is_some_and(|n| {
                n.normalized == rule.neighbor && n.sentence == token.sentence
            })
        });
        let violation = Violation {
            lexeme: token.normalized.clone(),
            start: token.start,
            end: token.end,
            context: context_window(text, token.start, token.end, CONTEXT_CHARS),
            exempted: exempt,
        };
        if exempt {
            exemptions.push(violation);
        } else {
            dirty_sentences.insert(token.sentence);
            violations.push(violation);
        }
    }

    let clean_sentences = sentence_total - dirty_sentences.len();
    let fully_compliant = violations.is_empty();
    let compliance_rate = if sentence_total == 0 {
        1.0
    } else {
        clean_sentences as f64 / sentence_total as f64
    };

    ComplianceReport {
        condition: condition.id,
        violations,
        exemptions,
        sentence_total,
        clean_sentences,
        fully_compliant,
        compliance_rate,
    }
}

/// Classify a report into its compliance tier: `full` iff zero violations,
/// `above_90` iff the sentence-clean rate exceeds 0.9, else `below_90`.
pub fn compliance_tier(report: &ComplianceReport) -> ComplianceTier {
    if report.fully_compliant {
        ComplianceTier::Full
    } else if report.compliance_rate > 0.9 {
        ComplianceTier::Above90
    } else {
        ComplianceTier::Below90
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::ConditionId::*;

    fn spec(id: ConditionId) -> ConditionSpec {
        ConditionSpec::get(id)
    }

    #[test]
    fn e_prime_flags_copula() {
        let report = check("The cat is black.", &spec(EPrime));
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].lexeme, "is");
        assert!(!report.fully_compliant);
    }

    #[test]
    fn rather_than_exempt() {
        let report = check("We choose speed rather than accuracy.", &spec(NeutralBan));
        assert!(report.violations.is_empty());
        assert_eq!(report.exemptions.len(), 1);
        assert!(report.fully_compliant);
        assert_eq!(report.compliance_rate, 1.0);
    }

    #[test]
    fn bare_rather_flagged() {
        let report = check("The proof seems rather weak.", &spec(NeutralBan));
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].lexeme, "rather");
    }

    #[test]
    fn but_rather_exempt() {
        let report = check("Not this, but rather that.", &spec(NeutralBan));
        assert!(report.violations.is_empty());
        assert_eq!(report.exemptions.len(), 1);
    }

    #[test]
    fn just_as_exempt_but_bare_just_flagged() {
        let clean = check("It works just as well.", &spec(NeutralBan));
        assert!(clean.violations.is_empty());
        let dirty = check("It works just fine.", &spec(NeutralBan));
        assert_eq!(dirty.violations.len(), 1);
        assert_eq!(dirty.violations[0].lexeme, "just");
    }

    #[test]
    fn exemption_does_not_cross_sentences() {
        let report = check("I would sooner walk, rather. Than what, exactly?", &spec(NeutralBan));
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].lexeme, "rather");
    }

    #[test]
    fn no_have_counts_each_form() {
        let report = check("They have had results.", &spec(NoHave));
        assert_eq!(report.violations.len(), 2);
        let forms: Vec<&str> = report.violations.iter().map(|v| v.lexeme.as_str()).collect();
        assert_eq!(forms, vec!["have", "had"]);
    }

    #[test]
    fn control_always_compliant() {
        let report = check("It is very important that we have this.", &spec(Control));
        assert!(report.fully_compliant);
        assert_eq!(report.compliance_rate, 1.0);
        assert_eq!(compliance_tier(&report), ComplianceTier::Full);
    }

    #[test]
    fn word_boundaries_hold() {
        // "this" must not trigger "is"; "hasten" not "has"; "justify" not "just".
        assert!(check("this", &spec(EPrime)).fully_compliant);
        assert!(check("hasten", &spec(NoHave)).fully_compliant);
        assert!(check("justify basically-free", &spec(NoHave)).fully_compliant);
        let report = check("We hasten to justify this.", &spec(NeutralBan));
        assert!(report.fully_compliant);
    }

    #[test]
    fn contractions_match_as_whole_tokens() {
        let report = check("It's done; that\u{2019}s all. John's dog being good.", &spec(EPrime));
        let forms: Vec<&str> = report.violations.iter().map(|v| v.lexeme.as_str()).collect();
        // john's stays unflagged (possessive), it's/that's/being flagged
        assert_eq!(forms, vec!["it's", "that's", "being"]);
    }

    #[test]
    fn empty_text_is_vacuously_compliant() {
        let report = check("", &spec(EPrime));
        assert!(report.fully_compliant);
        assert_eq!(report.sentence_total, 0);
        assert_eq!(report.compliance_rate, 1.0);
    }

    #[test]
    fn tier_thresholds() {
        // 1 violation in a 20-sentence response: 19/20 clean = 0.95 > 0.9.
        let mut text = String::new();
        for _ in 0..19 {
            text.push_str("A clean sentence here. ");
        }
        text.push_str("This one has a flaw.");
        let report = check(&text, &spec(NoHave));
        assert_eq!(report.sentence_total, 20);
        assert_eq!(report.violations.len(), 1);
        assert!((report.compliance_rate - 0.95).abs() < 1e-12);
        assert_eq!(compliance_tier(&report), ComplianceTier::Above90);

        // 3 violations across 3 of 5 sentences: 2/5 clean = 0.4.
        let text = "They have one. They had two. Clean here. Having three. Clean again.";
        let report = check(text, &spec(NoHave));
        assert_eq!(report.sentence_total, 5);
        assert_eq!(report.violations.len(), 3);
        assert!((report.compliance_rate - 0.4).abs() < 1e-12);
        assert_eq!(compliance_tier(&report), ComplianceTier::Below90);
    }

    #[test]
    fn offsets_and_context_cover_the_match() {
        let text = "Results are in.";
        let report = check(text, &spec(EPrime));
        let v = &report.violations[0];
        assert_eq!(&text[v.start..v.end], "are"); // ASCII text: chars == bytes
        assert!(v.context.contains("are"));
    }

    #[test]
    fn check_is_pure() {
        let spec = spec(NeutralBan);
        let text = "A very odd, just slightly wrong sentence; rather than quit, we continue.";
        assert_eq!(check(text, &spec), check(text, &spec));
    }
}
