//! Pattern-based qualitative coding of responses on six dimensions, with a
//! versioned, configurable lexicon file.

use crate::conditions::ConditionId;
use crate::error::{Error, Result};
use crate::text::word_count;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Dialectical-engagement pattern family: a subject word followed by a
/// critique word within a small gap ("this approach fails").
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DialecticalPatterns {
    pub subjects: Vec<String>,
    pub critiques: Vec<String>,
    pub max_gap_words: usize,
}

/// Named lexicons per coded dimension. Terms ending in `-` match as word
/// prefixes ("deontolog-" covers "deontological"); multi-word terms match
/// as phrases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternSet {
    pub schema_version: u32,
    /// Recorded in every output so coded results name their lexicon.
    pub version: String,
    pub frameworks: BTreeMap<String, Vec<String>>,
    pub hedges: Vec<String>,
    pub mechanism_patterns: Vec<String>,
    pub counterargument_cues: Vec<String>,
    pub dialectical: DialecticalPatterns,
}

impl PatternSet {
    pub fn parse(json: &str, origin: &str) -> Result<PatternSet> {
        let set: PatternSet = serde_json::from_str(json).map_err(|source| Error::Json {
            path: origin.to_string(),
            source,
        })?;
        if set.schema_version != crate::SCHEMA_VERSION {
            return Err(Error::Invalid(format!(
                "pattern set schema_version {} unsupported",
                set.schema_version
            )));
        }
        for (family, terms) in &set.frameworks {
            if terms.is_empty() {
                return Err(Error::Invalid(format!(
                    "framework family {family:?} has no terms"
                )));
            }
        }
        for (name, terms) in [
            ("hedges", &set.hedges),
            ("mechanism_patterns", &set.mechanism_patterns),
            ("counterargument_cues", &set.counterargument_cues),
            ("dialectical.subjects", &set.dialectical.subjects),
            ("dialectical.critiques", &set.dialectical.critiques),
        ] {
            if terms.is_empty() {
                return Err(Error::Invalid(format!("pattern list {name:?} is empty")));
            }
        }
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PatternSet> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        PatternSet::parse(&text, &path.display().to_string())
    }

    /// The bundled default lexicon.
    pub fn default_set() -> PatternSet {
        PatternSet::parse(crate::default_patterns_json(), "<bundled patterns>")
            .expect("bundled pattern set is valid")
    }
}

/// Per-response metrics on the six coded dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualMetrics {
    pub word_count: usize,
    /// Distinct framework families with at least one hit.
    pub frameworks_invoked: usize,
    pub mechanism_articulations: usize,
    pub hedges_per_100_words: f64,
    pub dialectical: bool,
    pub counterarguments: usize,
    pub structural_markers: usize,
}

fn term_regex(term: &str) -> String {
    let words: Vec<&str> = term.split_whitespace().collect();
    let mut pattern = String::from(r"\b");
    for (i, word) in words.iter().enumerate() {
        if i > 0 {
            pattern.push_str(r"\s+");
        }
        if let Some(stem) = word.strip_suffix('-') {
            pattern.push_str(&regex::escape(stem));
            pattern.push_str(r"\w*");
        } else {
            pattern.push_str(&regex::escape(word));
            if i == words.len() - 1 {
                pattern.push_str(r"\b");
            }
        }
    }
    pattern
}

fn alternation(terms: &[String]) -> Regex {
    let body: Vec<String> = terms.iter().map(|t| format!("(?:{})", term_regex(t))).collect();
    Regex::new(&format!("(?i){}", body.join("|"))).expect("lexicon terms compile")
}

fn count_hits(re: &Regex, text: &str) -> usize {
    re.find_iter(text).count()
}

/// Code one response against a pattern set. Deterministic.
pub fn code_response(text: &str, patterns: &PatternSet) -> QualMetrics {
    let wc = word_count(text);

    let frameworks_invoked = patterns
        .frameworks
        .values()
        .filter(|terms| count_hits(&alternation(terms), text) > 0)
        .count();

    let mechanism_articulations = count_hits(&alternation(&patterns.mechanism_patterns), text);
    let hedge_hits = count_hits(&alternation(&patterns.hedges), text);
    let hedges_per_100_words = if wc == 0 {
        0.0
    } else {
        100.0 * hedge_hits as f64 / wc as f64
    };
    let counterarguments = count_hits(&alternation(&patterns.counterargument_cues), text);

    let subjects: Vec<String> = patterns
        .dialectical
        .subjects
        .iter()
        .map(|s| term_regex(s))
        .collect();
    let critiques: Vec<String> = patterns
        .dialectical
        .critiques
        .iter()
        .map(|s| format!("(?:{})", term_regex(s)))
        .collect();
    let dialectical_re = Regex::new(&format!(
        r"(?i)(?:{})(?:\W+\w+){{0,{}}}?\W+(?:{})",
        subjects.join("|"),
        patterns.dialectical.max_gap_words,
        critiques.join("|")
    ))
    .expect("dialectical pattern compiles");
    let dialectical = dialectical_re.is_match(text);

    let structural_markers = text
        .lines()
        .filter(|line| {
            let trimmed = line.trim_start();
            if trimmed.starts_with("**") && trimmed[2..].contains("**") {
                return true;
            }
            if let Some(rest) = trimmed
                .strip_prefix('-')
                .or_else(|| trimmed.strip_prefix('*'))
                .or_else(|| trimmed.strip_prefix('\u{2022}'))
            {
                return rest.starts_with(' ');
            }
            let digits: String = trimmed.chars().take_while(|c| c.is_ascii_digit()).collect();
            !digits.is_empty() && trimmed[digits.len()..].starts_with('.')
        })
        .count();

    QualMetrics {
        word_count: wc,
        frameworks_invoked,
        mechanism_articulations,
        hedges_per_100_words,
        dialectical,
        counterarguments,
        structural_markers,
    }
}

/// Emitted qualcode artifact: the aggregate rows plus the lexicon version
/// and task they were coded with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualcodeArtifact {
    pub pattern_version: String,
    pub task: crate::corpus::TaskType,
    pub rows: Vec<QualAggregate>,
}

/// Per-condition aggregate of coded metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualAggregate {
    pub condition: ConditionId,
    pub n: usize,
    pub mean_word_count: f64,
    pub mean_frameworks: f64,
    pub mean_mechanisms: f64,
    pub mean_hedges_per_100_words: f64,
    /// Percentage of responses coded dialectical.
    pub dialectical_pct: f64,
    pub mean_counterarguments: f64,
    pub mean_structural_markers: f64,
}

/// Aggregate coded responses by condition: arithmetic means per dimension,
/// dialectical engagement as a percentage.
pub fn aggregate_qual(coded: &[(ConditionId, QualMetrics)]) -> Vec<QualAggregate> {
    let mut by_condition: BTreeMap<ConditionId, Vec<&QualMetrics>> = BTreeMap::new();
    for (condition, metrics) in coded {
        by_condition.entry(*condition).or_default().push(metrics);
    }
    by_condition
        .into_iter()
        .map(|(condition, group)| {
            let n = group.len() as f64;
            let mean = |f: &dyn Fn(&QualMetrics) -> f64| group.iter().map(|m| f(m)).sum::<f64>() / n;
            QualAggregate {
                condition,
                n: group.len(),
                mean_word_count: mean(&|m| m.word_count as f64),
                mean_frameworks: mean(&|m| m.frameworks_invoked as f64),
                mean_mechanisms: mean(&|m| m.mechanism_articulations as f64),
                mean_hedges_per_100_words: mean(&|m| m.hedges_per_100_words),
                dialectical_pct: 100.0 * mean(&|m| f64::from(m.dialectical)),
                mean_counterarguments: mean(&|m| m.counterarguments as f64),
                mean_structural_markers: mean(&|m| m.structural_markers as f64),
            }
        })
        .collect()
}
