//! Task-item schema, bank loading and validation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

/// The seven reasoning task types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    Syllogisms,
    Causal,
    Analogical,
    Classification,
    Epistemic,
    Ethical,
    Math,
}

impl TaskType {
    pub const ALL: [TaskType; 7] = [
        TaskType::Syllogisms,
        TaskType::Causal,
        TaskType::Analogical,
        TaskType::Classification,
        TaskType::Epistemic,
        TaskType::Ethical,
        TaskType::Math,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskType::Syllogisms => "syllogisms",
            TaskType::Causal => "causal",
            TaskType::Analogical => "analogical",
            TaskType::Classification => "classification",
            TaskType::Epistemic => "epistemic",
            TaskType::Ethical => "ethical",
            TaskType::Math => "math",
        }
    }

    pub fn parse(s: &str) -> Result<TaskType> {
        match s {
            "syllogisms" => Ok(TaskType::Syllogisms),
            "causal" => Ok(TaskType::Causal),
            "analogical" => Ok(TaskType::Analogical),
            "classification" => Ok(TaskType::Classification),
            "epistemic" => Ok(TaskType::Epistemic),
            "ethical" => Ok(TaskType::Ethical),
            "math" => Ok(TaskType::Math),
            other => Err(Error::Bank(format!("unknown task_type: {other}"))),
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How an item is answered: a VALID/INVALID judgment or an A–D choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    ValidInvalid,
    MultipleChoice,
}

/// One reasoning problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskItem {
    pub id: String,
    pub task_type: TaskType,
    pub stem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<BTreeMap<String, String>>,
    pub answer_kind: AnswerKind,
    pub ground_truth: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct BankFile {
    schema_version: u32,
    items: Vec<TaskItem>,
}

const VALID_LETTERS: [&str; 4] = ["A", "B", "C", "D"];

fn validate_item(item: &TaskItem) -> Result<()> {
    let id = &item.id;
    if id.is_empty() {
        return Err(Error::Bank("item with empty id".into()));
    }
    if id.contains(':') {
        return Err(Error::Bank(format!(
            "item id {id:?} contains ':' (reserved as the trial-id separator)"
        )));
    }
    let is_syllogism = item.task_type == TaskType::Syllogisms;
    let is_valid_invalid = item.answer_kind == AnswerKind::ValidInvalid;
    if is_syllogism != is_valid_invalid {
        return Err(Error::Bank(format!(
            "item {id}: answer_kind valid_invalid must pair with task_type syllogisms"
        )));
    }
    match item.answer_kind {
        AnswerKind::ValidInvalid => {
            if item.options.is_some() {
                return Err(Error::Bank(format!(
                    "item {id}: valid_invalid items carry no options"
                )));
            }
            if item.ground_truth != "VALID" && item.ground_truth != "INVALID" {
                return Err(Error::Bank(format!(
                    "item {id}: ground_truth must be VALID or INVALID, got {:?}",
                    item.ground_truth
                )));
            }
        }
        AnswerKind::MultipleChoice => {
            let options = item.options.as_ref().ok_or_else(|| {
                Error::Bank(format!("item {id}: multiple_choice items require options"))
            })?;
            if options.len() < 2 {
                return Err(Error::Bank(format!(
                    "item {id}: multiple_choice items need at least two options"
                )));
            }
            for key in options.keys() {
                if !VALID_LETTERS.contains(&key.as_str()) {
                    return Err(Error::Bank(format!(
                        "item {id}: option key {key:?} outside A-D"
                    )));
                }
            }
            if !options.contains_key(&item.ground_truth) {
                return Err(Error::Bank(format!(
                    "item {id}: ground_truth {:?} not among option keys",
                    item.ground_truth
                )));
            }
        }
    }
    Ok(())
}

/// Validate a parsed bank: per-item checks plus unique ids. The whole bank
/// is rejected on any invalid item.
pub fn validate_bank(items: &[TaskItem]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for item in items {
        validate_item(item)?;
        if !seen.insert(item.id.clone()) {
            return Err(Error::Bank(format!("duplicate item id: {}", item.id)));
        }
    }
    Ok(())
}

/// Parse and validate a bank from JSON text.
pub fn parse_bank(json: &str, origin: &str) -> Result<Vec<TaskItem>> {
    let file: BankFile = serde_json::from_str(json).map_err(|source| Error::Json {
        path: origin.to_string(),
        source,
    })?;
    if file.schema_version != crate::SCHEMA_VERSION {
        return Err(Error::Bank(format!(
            "unsupported bank schema_version {} (expected {})",
            file.schema_version,
            crate::SCHEMA_VERSION
        )));
    }
    validate_bank(&file.items)?;
    Ok(file.items)
}

/// Load a bank file, returning validated items in file order.
pub fn load_bank(path: impl AsRef<Path>) -> Result<Vec<TaskItem>> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_bank(&text, &path.display().to_string())
}

/// Serialize a bank back to its file form.
pub fn serialize_bank(items: &[TaskItem]) -> String {
    let file = BankFile {
        schema_version: crate::SCHEMA_VERSION,
        items: items.to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("bank serialization cannot fail")
}

/// Per-type item counts. Total equals the list length.
pub fn bank_summary(items: &[TaskItem]) -> BTreeMap<TaskType, usize> {
    let mut counts: BTreeMap<TaskType, usize> = TaskType::ALL.iter().map(|&t| (t, 0)).collect();
    for item in items {
        *counts.get_mut(&item.task_type).expect("all types present") += 1;
    }
    counts
}

/// The bundled 14-item sample bank.
pub fn sample_bank() -> Vec<TaskItem> {
    parse_bank(crate::sample_bank_json(), "<bundled sample bank>")
        .expect("bundled sample bank is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_bank_loads_with_two_items_per_type() {
        let items = sample_bank();
        assert_eq!(items.len(), 14);
        let summary = bank_summary(&items);
        for t in TaskType::ALL {
            assert_eq!(summary[&t], 2, "type {t}");
        }
        assert_eq!(summary.values().sum::<usize>(), items.len());
    }

    #[test]
    fn empty_bank_summary_is_all_zeros() {
        let summary = bank_summary(&[]);
        assert_eq!(summary.len(), 7);
        assert!(summary.values().all(|&c| c == 0));
    }

    #[test]
    fn duplicate_id_error_names_the_id() {
        let mut items = sample_bank();
        let mut dup = items[0].clone();
        dup.stem = "other".into();
        items.push(dup);
        let err = validate_bank(&items).unwrap_err();
        assert!(err.to_string().contains("syl-001"), "{err}");
    }

    #[test]
    fn multiple_choice_without_options_rejected() {
        let item = TaskItem {
            id: "x-1".into(),
            task_type: TaskType::Causal,
            stem: "why".into(),
            options: None,
            answer_kind: AnswerKind::MultipleChoice,
            ground_truth: "A".into(),
        };
        assert!(validate_bank(&[item]).is_err());
    }

    #[test]
    fn ground_truth_must_match_kind() {
        let mut item = sample_bank()[0].clone();
        item.ground_truth = "B".into();
        assert!(validate_bank(&[item]).is_err());
    }

    #[test]
    fn syllogism_kind_pairing_enforced() {
        let mut item = sample_bank()[0].clone();
        item.answer_kind = AnswerKind::MultipleChoice;
        item.options = Some(
            [("A".to_string(), "x".to_string()), ("B".to_string(), "y".to_string())]
                .into_iter()
                .collect(),
        );
        item.ground_truth = "A".into();
        assert!(validate_bank(&[item]).is_err());
    }

    #[test]
    fn colon_in_id_rejected() {
        let mut item = sample_bank()[0].clone();
        item.id = "syl:001".into();
        assert!(validate_bank(&[item]).is_err());
    }

    #[test]
    fn round_trip_is_identity() {
        let items = sample_bank();
        let reparsed = parse_bank(&serialize_bank(&items), "<round trip>").unwrap();
        assert_eq!(items, reparsed);
    }

    #[test]
    fn paper_scale_bank_counts() {
        // A full-scale bank: 20/15/20/20/20/15/20 items per type, 130 total.
        let per_type = [
            (TaskType::Syllogisms, 20),
            (TaskType::Causal, 15),
            (TaskType::Analogical, 20),
            (TaskType::Classification, 20),
            (TaskType::Epistemic, 20),
            (TaskType::Ethical, 15),
            (TaskType::Math, 20),
        ];
        let mut items = Vec::new();
        for (t, n) in per_type {
            for i in 0..n {
                let (kind, truth, options) = if t == TaskType::Syllogisms {
                    (AnswerKind::ValidInvalid, "VALID".to_string(), None)
                } else {
                    (
                        AnswerKind::MultipleChoice,
                        "A".to_string(),
                        Some(
                            [
                                ("A".to_string(), "one".to_string()),
                                ("B".to_string(), "two".to_string()),
                            ]
                            .into_iter()
                            .collect(),
                        ),
                    )
                };
                items.push(TaskItem {
                    id: format!("{}-{i:03}", t.as_str()),
                    task_type: t,
                    stem: "stem".into(),
                    options,
                    answer_kind: kind,
                    ground_truth: truth,
                });
            }
        }
        validate_bank(&items).unwrap();
        let summary = bank_summary(&items);
        assert_eq!(summary[&TaskType::Syllogisms], 20);
        assert_eq!(summary[&TaskType::Causal], 15);
        assert_eq!(summary[&TaskType::Ethical], 15);
        assert_eq!(summary.values().sum::<usize>(), 130);
    }
}
