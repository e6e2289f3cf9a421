//! Answer extraction: priority cascades for VALID/INVALID judgments and
//! A-D multiple choice, with last-match semantics inside each rule.

use crate::corpus::AnswerKind;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::LazyLock;

/// A recognized final answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnswerValue {
    #[serde(rename = "VALID")]
    Valid,
    #[serde(rename = "INVALID")]
    Invalid,
    A,
    B,
    C,
    D,
}

impl AnswerValue {
    pub fn as_str(&self) -> &'static str {
        match self {
            AnswerValue::Valid => "VALID",
            AnswerValue::Invalid => "INVALID",
            AnswerValue::A => "A",
            AnswerValue::B => "B",
            AnswerValue::C => "C",
            AnswerValue::D => "D",
        }
    }

    fn from_verdict(s: &str) -> AnswerValue {
        if s.eq_ignore_ascii_case("valid") {
            AnswerValue::Valid
        } else {
            AnswerValue::Invalid
        }
    }

    fn from_letter(s: &str) -> AnswerValue {
        match s {
            "A" => AnswerValue::A,
            "B" => AnswerValue::B,
            "C" => AnswerValue::C,
            _ => AnswerValue::D,
        }
    }
}

impl fmt::Display for AnswerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Extraction outcome. Unscoreable responses carry neither value nor rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedAnswer {
    pub value: Option<AnswerValue>,
    /// Stable identifier of the cascade rule that fired, for audit logs.
    pub rule: Option<&'static str>,
}

impl ExtractedAnswer {
    pub fn scoreable(&self) -> bool {
        self.value.is_some()
    }

    fn none() -> Self {
        ExtractedAnswer {
            value: None,
            rule: None,
        }
    }

    fn some(value: AnswerValue, rule: &'static str) -> Self {
        ExtractedAnswer {
            value: Some(value),
            rule: Some(rule),
        }
    }
}

static BOLD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\*\*([^*\n]+?)\*\*|__([^_\n]+?)__").unwrap());
static VERDICT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\b(valid|invalid)\b").unwrap());
static FILTER_VERB: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:make|become|considered|deemed|render|ensure)\b").unwrap());
static CONCLUSION_FRAMING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\bconclusion\s+(?:is|remains|stands\s+as)\s*:?\s*(?:\*\*|__)?\s*\(?(valid|invalid)\b")
        .unwrap()
});
static THEREFORE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:therefore|thus)\b[^.!?\n]{0,60}?(?:\*\*|__)?\b(valid|invalid)\b").unwrap()
});
static HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?im)^[ \t]*#{1,6}[ \t]*(?:final[ \t]+)?answer\b").unwrap());
static LETTER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b([A-D])\b").unwrap());
static FRAMING_VERB: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(?:best\s+answer|answer|choice)\s+(?:is|remains|stands\s+as|reads\s+as|would\s+be)\s*:?\s*(?:\*\*|__)?\s*\(?([A-D])\b",
    )
    .unwrap()
});
static FRAMING_SELECT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:select|choose|pick)\s+(?:option\s+|answer\s+|choice\s+)?\(?([A-D])\b")
        .unwrap()
});
static FRAMING_OPTION_BEST: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\boption\s+\(?([A-D])\)?\s+(?:is|remains|stands\s+as|reads\s+as)\s+(?:the\s+)?(?:best|correct|right)\b",
    )
    .unwrap()
});
static BOXED_PLAIN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\\boxed\{\s*([A-D])\s*\}").unwrap());
static BOXED_TEXT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\\boxed\{\s*\\text\{\s*([A-D])\s*\}\s*\}").unwrap());
static BOLD_LETTER_CONTENT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*\(?([A-D])(?:[).:,]|\s|$)").unwrap());
static PAREN_LETTER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:^|[^A-Za-z0-9])([A-D])\)").unwrap());
static A_CONTEXT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:option|answer|choice)\b").unwrap());

const CHECKMARKS: [char; 3] = ['\u{2713}', '\u{2714}', '\u{2611}'];
const FILTER_WINDOW_CHARS: usize = 40;
const TAIL_CHARS: usize = 200;
const A_CONTEXT_CHARS: usize = 20;

/// Byte ranges of explanatory verbs (make/become/considered/deemed/render/
/// ensure). A verdict occurrence is skipped when one of these ends within
/// 40 characters before it.
fn filter_verb_spans(text: &str) -> Vec<(usize, usize)> {
    FILTER_VERB.find_iter(text).map(|m| (m.start(), m.end())).collect()
}

fn is_explanatory(text: &str, occurrence_start: usize, verbs: &[(usize, usize)]) -> bool {
    verbs.iter().any(|&(_, verb_end)| {
        verb_end <= occurrence_start
            && text[verb_end..occurrence_start].chars().count() <= FILTER_WINDOW_CHARS
    })
}

/// Bold spans as (content byte offset, content) for `**x**` and `__x__`.
fn bold_spans(text: &str) -> Vec<(usize, &str)> {
    BOLD.captures_iter(text)
        .filter_map(|cap| {
            cap.get(1)
                .or_else(|| cap.get(2))
                .map(|m| (m.start(), m.as_str()))
        })
        .collect()
}

/// Extract a VALID/INVALID judgment via the four-rule cascade:
/// (1) last bolded verdict, (2) "the conclusion is/remains/stands as"
/// framing, (3) therefore/thus followed by a verdict, (4) last standalone
/// verdict token. All rules skip explanatory occurrences.
pub fn extract_syllogism(text: &str) -> ExtractedAnswer {
    let verbs = filter_verb_spans(text);
    let last_unfiltered = |candidates: Vec<(usize, AnswerValue)>| {
        candidates
            .into_iter()
            .filter(|&(pos, _)| !is_explanatory(text, pos, &verbs))
            .next_back()
    };

    // Rule 1: last bolded VALID or INVALID.
    let bolded: Vec<(usize, AnswerValue)> = bold_spans(text)
        .into_iter()
        .flat_map(|(base, content)| {
            VERDICT
                .find_iter(content)
                .map(move |m| (base + m.start(), AnswerValue::from_verdict(m.as_str())))
                .collect::<Vec<_>>()
        })
        .collect();
    if let Some((_, value)) = last_unfiltered(bolded) {
        return ExtractedAnswer::some(value, "bolded_verdict");
    }

    // Rule 2: explicit conclusion framing.
    let framed: Vec<(usize, AnswerValue)> = CONCLUSION_FRAMING
        .captures_iter(text)
        .map(|cap| {
            let m = cap.get(1).unwrap();
            (m.start(), AnswerValue::from_verdict(m.as_str()))
        })
        .collect();
    if let Some((_, value)) = last_unfiltered(framed) {
        return ExtractedAnswer::some(value, "conclusion_framing");
    }

    // Rule 3: therefore/thus followed by a verdict in the same clause.
    let inferred: Vec<(usize, AnswerValue)> = THEREFORE
        .captures_iter(text)
        .map(|cap| {
            let m = cap.get(1).unwrap();
            (m.start(), AnswerValue::from_verdict(m.as_str()))
        })
        .collect();
    if let Some((_, value)) = last_unfiltered(inferred) {
        return ExtractedAnswer::some(value, "therefore_verdict");
    }

    // Rule 4: last standalone occurrence.
    let standalone: Vec<(usize, AnswerValue)> = VERDICT
        .find_iter(text)
        .map(|m| (m.start(), AnswerValue::from_verdict(m.as_str())))
        .collect();
    if let Some((_, value)) = last_unfiltered(standalone) {
        return ExtractedAnswer::some(value, "standalone_verdict");
    }

    ExtractedAnswer::none()
}

/// Extract an A-D choice via the seven-rule cascade:
/// (1) checkmark on the same line as a bolded option, (2) answer-section
/// header followed by a letter, (3) explicit framing ("the best answer is
/// B", "select C", and the circumlocutions remains/stands as/reads as),
/// (4) `\boxed{X}`, (5) last bolded letter, (6) last letter with a closing
/// parenthesis, (7) last standalone letter within the final 200 characters,
/// where a bare "A" needs OPTION/ANSWER/CHOICE context to avoid the article.
pub fn extract_choice(text: &str) -> ExtractedAnswer {
    // Rule 1: checkmark next to a bolded option letter.
    let mut checkmark_hit = None;
    for line in text.lines() {
        if !line.contains(CHECKMARKS) {
            continue;
        }
        for (_, content) in bold_spans(line) {
            if let Some(cap) = BOLD_LETTER_CONTENT.captures(content) {
                checkmark_hit = Some(AnswerValue::from_letter(&cap[1]));
            }
        }
    }
    if let Some(value) = checkmark_hit {
        return ExtractedAnswer::some(value, "checkmark_option");
    }

    // Rule 2: answer-section header followed by a letter; last header that
    // yields a letter wins.
    let mut header_hit = None;
    for m in HEADER.find_iter(text) {
        let region_end = end_of_n_lines(text, m.end(), 3);
        if let Some(cap) = LETTER.captures(&text[m.end()..region_end]) {
            header_hit = Some(AnswerValue::from_letter(cap.get(1).unwrap().as_str()));
        }
    }
    if let Some(value) = header_hit {
        return ExtractedAnswer::some(value, "answer_header");
    }

    // Rule 3: explicit answer framing.
    let mut framing: Vec<(usize, AnswerValue)> = Vec::new();
    for re in [&*FRAMING_VERB, &*FRAMING_SELECT, &*FRAMING_OPTION_BEST] {
        for cap in re.captures_iter(text) {
            let m = cap.get(1).unwrap();
            framing.push((m.start(), AnswerValue::from_letter(m.as_str())));
        }
    }
    framing.sort_by_key(|&(pos, _)| pos);
    if let Some(&(_, value)) = framing.last() {
        return ExtractedAnswer::some(value, "explicit_framing");
    }

    // Rule 4: LaTeX boxed answer.
    let mut boxed: Vec<(usize, AnswerValue)> = Vec::new();
    for re in [&*BOXED_PLAIN, &*BOXED_TEXT] {
        for cap in re.captures_iter(text) {
            let m = cap.get(1).unwrap();
            boxed.push((m.start(), AnswerValue::from_letter(m.as_str())));
        }
    }
    boxed.sort_by_key(|&(pos, _)| pos);
    if let Some(&(_, value)) = boxed.last() {
        return ExtractedAnswer::some(value, "boxed_letter");
    }

    // Rule 5: last bolded letter.
    let bold_letter = bold_spans(text)
        .into_iter()
        .filter_map(|(_, content)| {
            BOLD_LETTER_CONTENT
                .captures(content)
                .map(|cap| AnswerValue::from_letter(&cap[1]))
        })
        .next_back();
    if let Some(value) = bold_letter {
        return ExtractedAnswer::some(value, "bolded_letter");
    }

    // Rule 6: last letter with a closing parenthesis.
    let paren = PAREN_LETTER
        .captures_iter(text)
        .map(|cap| AnswerValue::from_letter(cap.get(1).unwrap().as_str()))
        .last();
    if let Some(value) = paren {
        return ExtractedAnswer::some(value, "paren_letter");
    }

    // Rule 7: last standalone letter in the final 200 characters.
    let tail_start_byte = byte_offset_of_last_chars(text, TAIL_CHARS);
    let mut standalone = None;
    for cap in LETTER.captures_iter(&text[tail_start_byte..]) {
        let m = cap.get(1).unwrap();
        let abs_start = tail_start_byte + m.start();
        if m.as_str() == "A" && !bare_a_in_context(text, abs_start) {
            continue;
        }
        standalone = Some(AnswerValue::from_letter(m.as_str()));
    }
    if let Some(value) = standalone {
        return ExtractedAnswer::some(value, "standalone_letter");
    }

    ExtractedAnswer::none()
}

/// Route to the cascade matching the item's answer kind.
pub fn extract(kind: AnswerKind, text: &str) -> ExtractedAnswer {
    match kind {
        AnswerKind::ValidInvalid => extract_syllogism(text),
        AnswerKind::MultipleChoice => extract_choice(text),
    }
}

/// Bare "A" counts only when OPTION/ANSWER/CHOICE appears in the preceding
/// 20 characters.
fn bare_a_in_context(text: &str, letter_start: usize) -> bool {
    let before = &text[..letter_start];
    let window_start = byte_offset_of_last_chars(before, A_CONTEXT_CHARS);
    A_CONTEXT.is_match(&before[window_start..])
}

/// Byte offset where the final `n` characters of `text` begin.
fn byte_offset_of_last_chars(text: &str, n: usize) -> usize {
    let char_count = text.chars().count();
    if char_count <= n {
        return 0;
    }
    text.char_indices()
        .nth(char_count - n)
        .map(|(b, _)| b)
        .unwrap_or(0)
}

/// Byte offset just past `n` newline-terminated lines starting at `from`.
fn end_of_n_lines(text: &str, from: usize, n: usize) -> usize {
    let mut pos = from;
    for _ in 0..n {
        match text[pos..].find('\n') {
            Some(off) => pos += off + 1,
            None => return text.len(),
        }
    }
    pos
}
