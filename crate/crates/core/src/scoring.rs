//! Trial scoring, compliance-stratified filter policies, and the accuracy /
//! word-count / per-item-delta / retry summary tables.

use crate::compliance::{check, compliance_tier, ComplianceTier};
use crate::conditions::{ConditionId, ConditionSpec};
use crate::corpus::{TaskItem, TaskType};
use crate::error::{Error, Result};
use crate::extraction::{extract, AnswerValue};
use crate::store::{TrialRecord, TrialStatus};
use crate::text::word_count;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One scored trial attempt: the unit of every downstream analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTrial {
    pub trial_id: String,
    pub item_id: String,
    pub model_id: String,
    pub condition: ConditionId,
    pub task_type: TaskType,
    pub trial_index: u32,
    pub plan_index: u64,
    pub attempt: u32,
    pub temperature: f64,
    pub ground_truth: String,
    pub scoreable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extracted_value: Option<AnswerValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extraction_rule: Option<String>,
    /// Defined only for scoreable trials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    pub word_count: usize,
    pub violation_count: usize,
    pub fully_compliant: bool,
    pub compliance_rate: f64,
    pub compliance_tier: ComplianceTier,
}

/// Score one ok record against its item and condition rules.
pub fn score_trial(
    record: &TrialRecord,
    item: &TaskItem,
    condition_spec: &ConditionSpec,
) -> Result<ScoredTrial> {
    if record.item_id != item.id {
        return Err(Error::Invalid(format!(
            "record {} does not belong to item {}",
            record.trial_id, item.id
        )));
    }
    if record.status != TrialStatus::Ok {
        return Err(Error::Invalid(format!(
            "record {} has status {:?}; only ok records are scoreable",
            record.trial_id, record.status
        )));
    }
    let text = record.response_text.as_deref().unwrap_or_default();
    let extracted = extract(item.answer_kind, text);
    let report = check(text, condition_spec);
    let correct = extracted
        .value
        .map(|v| v.as_str() == item.ground_truth);
    Ok(ScoredTrial {
        trial_id: record.trial_id.clone(),
        item_id: record.item_id.clone(),
        model_id: record.model_id.clone(),
        condition: record.condition,
        task_type: item.task_type,
        trial_index: record.trial_index,
        plan_index: record.plan_index,
        attempt: record.attempt,
        temperature: record.temperature,
        ground_truth: item.ground_truth.clone(),
        scoreable: extracted.scoreable(),
        extracted_value: extracted.value,
        extraction_rule: extracted.rule.map(str::to_string),
        correct,
        word_count: word_count(text),
        violation_count: report.violations.len(),
        fully_compliant: report.fully_compliant,
        compliance_rate: report.compliance_rate,
        compliance_tier: compliance_tier(&report),
    })
}

/// Score a deduplicated record set against a bank. Records with a non-ok
/// status are dropped (they never enter the scored dataset); output is
/// sorted by (trial_id, attempt) so emission is order-independent.
pub fn score_records(records: &[TrialRecord], bank: &[TaskItem]) -> Result<Vec<ScoredTrial>> {
    let items: BTreeMap<&str, &TaskItem> = bank.iter().map(|i| (i.id.as_str(), i)).collect();
    let specs: BTreeMap<ConditionId, ConditionSpec> = ConditionId::ALL
        .iter()
        .map(|&id| (id, ConditionSpec::get(id)))
        .collect();
    let mut scored = Vec::new();
    for record in records {
        if record.status != TrialStatus::Ok {
            continue;
        }
        let item = items.get(record.item_id.as_str()).ok_or_else(|| {
            Error::Invalid(format!(
                "record {} references item {} missing from the bank",
                record.trial_id, record.item_id
            ))
        })?;
        scored.push(score_trial(record, item, &specs[&record.condition])?);
    }
    scored.sort_by(|a, b| (&a.trial_id, a.attempt).cmp(&(&b.trial_id, b.attempt)));
    Ok(scored)
}

/// Compliance stratum of a filter policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompliancePolicy {
    IntentToTreat,
    Above90,
    Full,
}

/// Conjunctive trial filter. The primary analysis uses
/// (first-pass, scoreable, fully compliant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub first_pass_only: bool,
    pub require_scoreable: bool,
    pub compliance: CompliancePolicy,
}

impl FilterPolicy {
    pub const PRIMARY: FilterPolicy = FilterPolicy {
        first_pass_only: true,
        require_scoreable: true,
        compliance: CompliancePolicy::Full,
    };

    pub fn with_compliance(compliance: CompliancePolicy) -> FilterPolicy {
        FilterPolicy {
            compliance,
            ..FilterPolicy::PRIMARY
        }
    }

    /// CLI names: full | above90 | itt.
    pub fn parse(name: &str) -> Result<FilterPolicy> {
        let compliance = match name {
            "full" => CompliancePolicy::Full,
            "above90" => CompliancePolicy::Above90,
            "itt" => CompliancePolicy::IntentToTreat,
            other => {
                return Err(Error::Invalid(format!(
                    "unknown policy {other:?} (expected full, above90, or itt)"
                )))
            }
        };
        Ok(FilterPolicy::with_compliance(compliance))
    }

    pub fn name(&self) -> &'static str {
        match self.compliance {
            CompliancePolicy::Full => "full",
            CompliancePolicy::Above90 => "above90",
            CompliancePolicy::IntentToTreat => "itt",
        }
    }
}

/// Apply a policy's three predicates conjunctively. Unconstrained
/// conditions are vacuously compliant at every tier.
pub fn filter_trials(scored: &[ScoredTrial], policy: &FilterPolicy) -> Vec<ScoredTrial> {
    scored
        .iter()
        .filter(|t| !policy.first_pass_only || t.attempt == 0)
        .filter(|t| !policy.require_scoreable || t.scoreable)
        .filter(|t| match policy.compliance {
            CompliancePolicy::IntentToTreat => true,
            CompliancePolicy::Above90 => t.compliance_rate > 0.9,
            CompliancePolicy::Full => t.fully_compliant,
        })
        .cloned()
        .collect()
}

/// One accuracy cell: scoreable count and correct count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct AccuracyCell {
    pub n: usize,
    pub correct: usize,
}

impl AccuracyCell {
    pub fn accuracy(&self) -> Option<f64> {
        (self.n > 0).then(|| self.correct as f64 / self.n as f64)
    }
}

/// Row dimension for accuracy tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowBy {
    Task,
    Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub label: String,
    pub cells: BTreeMap<ConditionId, AccuracyCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub conditions: Vec<ConditionId>,
    pub rows: Vec<AccuracyRow>,
    /// Pooled row over all rows above.
    pub total: AccuracyRow,
}

/// Accuracy by (row dimension) x condition. Only scoreable trials enter
/// cell denominators, whatever the upstream policy did.
pub fn accuracy_table(
    scored: &[ScoredTrial],
    row_by: RowBy,
    conditions: &[ConditionId],
) -> AccuracyTable {
    let label_of = |t: &ScoredTrial| match row_by {
        RowBy::Task => t.task_type.to_string(),
        RowBy::Model => t.model_id.clone(),
    };
    let mut labels: Vec<String> = scored.iter().map(|t| label_of(t)).collect();
    labels.sort();
    labels.dedup();
    if row_by == RowBy::Task {
        // Present tasks in canonical order rather than alphabetical.
        labels = TaskType::ALL
            .iter()
            .map(|t| t.to_string())
            .filter(|l| labels.contains(l))
            .collect();
    }

    let empty_cells = || -> BTreeMap<ConditionId, AccuracyCell> {
        conditions.iter().map(|&c| (c, AccuracyCell::default())).collect()
    };
    let mut rows: Vec<AccuracyRow> = labels
        .into_iter()
        .map(|label| AccuracyRow {
            label,
            cells: empty_cells(),
        })
        .collect();
    let mut total = AccuracyRow {
        label: "TOTAL".into(),
        cells: empty_cells(),
    };

    for t in scored {
        if !t.scoreable || !conditions.contains(&t.condition) {
            continue;
        }
        let label = label_of(t);
        let row = rows.iter_mut().find(|r| r.label == label).expect("row exists");
        for cells in [&mut row.cells, &mut total.cells] {
            let cell = cells.get_mut(&t.condition).expect("cell exists");
            cell.n += 1;
            if t.correct == Some(true) {
                cell.correct += 1;
            }
        }
    }

    AccuracyTable {
        conditions: conditions.to_vec(),
        rows,
        total,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordCountRow {
    pub label: String,
    /// Mean word count per condition; None for empty cells.
    pub cells: BTreeMap<ConditionId, Option<f64>>,
}

/// Mean word count by task x condition over scoreable first-pass trials.
pub fn wordcount_table(scored: &[ScoredTrial], conditions: &[ConditionId]) -> Vec<WordCountRow> {
    let mut sums: BTreeMap<(TaskType, ConditionId), (usize, usize)> = BTreeMap::new();
    for t in scored {
        if !t.scoreable || t.attempt != 0 || !conditions.contains(&t.condition) {
            continue;
        }
        let entry = sums.entry((t.task_type, t.condition)).or_default();
        entry.0 += t.word_count;
        entry.1 += 1;
    }
    TaskType::ALL
        .iter()
        .filter(|t| sums.keys().any(|(task, _)| task == *t))
        .map(|&task| WordCountRow {
            label: task.to_string(),
            cells: conditions
                .iter()
                .map(|&c| {
                    let mean = sums
                        .get(&(task, c))
                        .map(|&(sum, n)| sum as f64 / n as f64);
                    (c, mean)
                })
                .collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDelta {
    pub item_id: String,
    pub accuracy_a: f64,
    pub accuracy_b: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDeltaSummary {
    pub condition_a: ConditionId,
    pub condition_b: ConditionId,
    pub deltas: Vec<ItemDelta>,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n−1 denominator).
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub improved: usize,
    pub equal: usize,
    pub worse: usize,
}

/// Per-item accuracy deltas between two conditions, over items with
/// scoreable data in both.
pub fn per_item_deltas(
    scored: &[ScoredTrial],
    condition_a: ConditionId,
    condition_b: ConditionId,
) -> ItemDeltaSummary {
    let mut per_item: BTreeMap<&str, (AccuracyCell, AccuracyCell)> = BTreeMap::new();
    for t in scored {
        if !t.scoreable {
            continue;
        }
        let slot = if t.condition == condition_a {
            0
        } else if t.condition == condition_b {
            1
        } else {
            continue;
        };
        let entry = per_item.entry(t.item_id.as_str()).or_default();
        let cell = if slot == 0 { &mut entry.0 } else { &mut entry.1 };
        cell.n += 1;
        if t.correct == Some(true) {
            cell.correct += 1;
        }
    }

    let mut deltas = Vec::new();
    for (item_id, (a, b)) in per_item {
        if let (Some(acc_a), Some(acc_b)) = (a.accuracy(), b.accuracy()) {
            deltas.push(ItemDelta {
                item_id: item_id.to_string(),
                accuracy_a: acc_a,
                accuracy_b: acc_b,
                delta: acc_a - acc_b,
            });
        }
    }

    let n = deltas.len();
    let values: Vec<f64> = deltas.iter().map(|d| d.delta).collect();
    let mean = if n == 0 { 0.0 } else { values.iter().sum::<f64>() / n as f64 };
    let median = {
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if n == 0 {
            0.0
        } else if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        }
    };
    let sd = if n < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    ItemDeltaSummary {
        condition_a,
        condition_b,
        improved: values.iter().filter(|&&v| v > 0.0).count(),
        equal: values.iter().filter(|&&v| v == 0.0).count(),
        worse: values.iter().filter(|&&v| v < 0.0).count(),
        deltas,
        mean,
        median,
        sd,
        min: if n == 0 { 0.0 } else { min },
        max: if n == 0 { 0.0 } else { max },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryRow {
    pub model_id: String,
    /// First-pass trial count under the retry-bearing condition.
    pub n: usize,
    pub retried: usize,
    pub rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_pass_accuracy: Option<f64>,
    /// Accuracy over retry attempts only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retried_accuracy: Option<f64>,
}

/// Per-model retry summary over the retry-bearing condition's trials.
/// Empty when the store holds none.
pub fn retry_summary(scored: &[ScoredTrial]) -> Vec<RetryRow> {
    let mut models: Vec<&str> = scored
        .iter()
        .filter(|t| t.condition == ConditionId::EPrime)
        .map(|t| t.model_id.as_str())
        .collect();
    models.sort();
    models.dedup();

    models
        .into_iter()
        .map(|model| {
            let trials: Vec<&ScoredTrial> = scored
                .iter()
                .filter(|t| t.condition == ConditionId::EPrime && t.model_id == model)
                .collect();
            let first: Vec<&&ScoredTrial> = trials.iter().filter(|t| t.attempt == 0).collect();
            let retried: Vec<&&ScoredTrial> = trials.iter().filter(|t| t.attempt == 1).collect();
            let acc = |set: &[&&ScoredTrial]| {
                let scoreable: Vec<_> = set.iter().filter(|t| t.scoreable).collect();
                (!scoreable.is_empty()).then(|| {
                    scoreable.iter().filter(|t| t.correct == Some(true)).count() as f64
                        / scoreable.len() as f64
                })
            };
            RetryRow {
                model_id: model.to_string(),
                n: first.len(),
                retried: retried.len(),
                rate: if first.is_empty() {
                    0.0
                } else {
                    retried.len() as f64 / first.len() as f64
                },
                first_pass_accuracy: acc(&first),
                retried_accuracy: acc(&retried),
            }
        })
        .collect()
}
