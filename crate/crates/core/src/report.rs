//! End-of-run report: one navigable text document assembled from the score
//! and analysis artifacts, with every section present even when empty.

use crate::analyze::{
    render_cross_model, render_drift, render_gee, CrossModelReport, DriftRow, GeeSummary,
    PairwiseComparison,
};
use crate::artifact::{fmt_pct, read_jsonl, render_table, write_text};
use crate::conditions::ConditionId;
use crate::error::{Error, Result};
use crate::qualcode::QualAggregate;
use crate::scoring::{
    accuracy_table, filter_trials, retry_summary, wordcount_table, AccuracyTable,
    CompliancePolicy, FilterPolicy, ScoredTrial, WordCountRow,
};
use crate::scoring::ItemDeltaSummary;
use crate::store::StoreHeader;
use std::path::Path;

pub fn render_accuracy_table(title: &str, table: &AccuracyTable) -> String {
    let mut columns = vec!["task/model".to_string()];
    columns.extend(table.conditions.iter().map(|c| c.to_string()));
    let mut rows: Vec<Vec<String>> = Vec::new();
    for row in table.rows.iter().chain(std::iter::once(&table.total)) {
        let mut cells = vec![row.label.clone()];
        for condition in &table.conditions {
            let cell = &row.cells[condition];
            cells.push(match cell.accuracy() {
                Some(acc) => format!("{} ({})", fmt_pct(Some(acc)), cell.n),
                None => "- (0)".into(),
            });
        }
        rows.push(cells);
    }
    render_table(title, &columns, &rows)
}

pub fn render_wordcount_table(rows: &[WordCountRow], conditions: &[ConditionId]) -> String {
    let mut columns = vec!["task".to_string()];
    columns.extend(conditions.iter().map(|c| c.to_string()));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let mut cells = vec![row.label.clone()];
            for condition in conditions {
                cells.push(match row.cells.get(condition).copied().flatten() {
                    Some(mean) => format!("{mean:.0}"),
                    None => "-".into(),
                });
            }
            cells
        })
        .collect();
    render_table("Mean word count by task and condition", &columns, &body)
}

pub fn render_retry_table(rows: &[crate::scoring::RetryRow]) -> String {
    if rows.is_empty() {
        return "Retry summary\n(no retry-bearing trials in the store)\n".into();
    }
    let columns = vec![
        "model".into(),
        "n".into(),
        "retried".into(),
        "rate".into(),
        "first_pass_acc".into(),
        "retried_acc".into(),
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.model_id.clone(),
                r.n.to_string(),
                r.retried.to_string(),
                fmt_pct(Some(r.rate)),
                fmt_pct(r.first_pass_accuracy),
                fmt_pct(r.retried_accuracy),
            ]
        })
        .collect();
    render_table("Retry summary (first-pass vs retry attempts)", &columns, &body)
}

pub fn render_qualcode(rows: &[QualAggregate]) -> String {
    if rows.is_empty() {
        return "Qualitative coding\n(no coded responses)\n".into();
    }
    let columns = vec![
        "condition".into(),
        "n".into(),
        "words".into(),
        "frameworks".into(),
        "mechanisms".into(),
        "hedges/100w".into(),
        "dialectical".into(),
        "counterargs".into(),
        "structure".into(),
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.condition.to_string(),
                r.n.to_string(),
                format!("{:.0}", r.mean_word_count),
                format!("{:.1}", r.mean_frameworks),
                format!("{:.1}", r.mean_mechanisms),
                format!("{:.2}", r.mean_hedges_per_100_words),
                format!("{:.1}%", r.dialectical_pct),
                format!("{:.1}", r.mean_counterarguments),
                format!("{:.1}", r.mean_structural_markers),
            ]
        })
        .collect();
    render_table("Qualitative coding of responses", &columns, &body)
}

fn delta_histogram(summary: &ItemDeltaSummary) -> String {
    const EDGES: [f64; 9] = [-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0];
    let mut counts = [0usize; 8];
    for d in &summary.deltas {
        let mut bin = 7;
        for i in 0..8 {
            if d.delta <= EDGES[i + 1] {
                bin = i;
                break;
            }
        }
        counts[bin] += 1;
    }
    let mut out = format!(
        "{} vs {}: {} items, mean {:+.1}pp, median {:+.1}pp, sd {:.1}pp, range [{:+.1}, {:+.1}], improved/equal/worse {}/{}/{}\n",
        summary.condition_a,
        summary.condition_b,
        summary.deltas.len(),
        100.0 * summary.mean,
        100.0 * summary.median,
        100.0 * summary.sd,
        100.0 * summary.min,
        100.0 * summary.max,
        summary.improved,
        summary.equal,
        summary.worse
    );
    for i in 0..8 {
        out.push_str(&format!(
            "  ({:+.2}, {:+.2}]: {}\n",
            EDGES[i],
            EDGES[i + 1],
            counts[i]
        ));
    }
    out
}

/// Assemble the report from the score and analysis artifacts. Analysis
/// outputs are a precondition; a missing file is an error naming it. The
/// qualitative section renders as "not run" when absent.
pub fn build_report(
    scored_dir: impl AsRef<Path>,
    analysis_dir: impl AsRef<Path>,
    report_dir: impl AsRef<Path>,
) -> Result<std::path::PathBuf> {
    let scored_dir = scored_dir.as_ref();
    let analysis_dir = analysis_dir.as_ref();
    let report_dir = report_dir.as_ref();

    let trials_path = scored_dir.join("trials.jsonl");
    if !trials_path.exists() {
        return Err(Error::Invalid(format!(
            "missing score output: {}",
            trials_path.display()
        )));
    }
    let (header, scored): (StoreHeader, Vec<ScoredTrial>) = read_jsonl(&trials_path)?;

    let mut required = Vec::new();
    for name in ["pairwise.jsonl", "item_deltas.jsonl", "correlation.jsonl", "drift.jsonl", "gee.jsonl"] {
        let path = analysis_dir.join(name);
        if !path.exists() {
            return Err(Error::Invalid(format!(
                "missing analysis output: {}",
                path.display()
            )));
        }
        required.push(path);
    }
    let (_, pairwise): (StoreHeader, Vec<PairwiseComparison>) = read_jsonl(&required[0])?;
    let (_, item_deltas): (StoreHeader, Vec<ItemDeltaSummary>) = read_jsonl(&required[1])?;
    let (_, cross_model): (StoreHeader, Vec<CrossModelReport>) = read_jsonl(&required[2])?;
    let (_, drift): (StoreHeader, Vec<DriftRow>) = read_jsonl(&required[3])?;
    let (_, gee): (StoreHeader, Vec<GeeSummary>) = read_jsonl(&required[4])?;

    let qualcode_path = analysis_dir.join("qualcode.jsonl");
    let qualcode: Option<crate::qualcode::QualcodeArtifact> = if qualcode_path.exists() {
        let (_, mut artifacts): (StoreHeader, Vec<crate::qualcode::QualcodeArtifact>) =
            read_jsonl(&qualcode_path)?;
        artifacts.pop()
    } else {
        None
    };

    let conditions: Vec<ConditionId> = ConditionId::ALL
        .iter()
        .copied()
        .filter(|c| scored.iter().any(|t| t.condition == *c))
        .collect();

    // write_text stamps the provenance comment as the first line.
    let mut out = String::new();
    out.push_str("# Vocabulary-constraint experiment report\n\n");

    for (title, policy) in [
        ("## Accuracy by task (100% compliant, first-pass)", CompliancePolicy::Full),
        ("## Accuracy by task (>90% compliant, first-pass)", CompliancePolicy::Above90),
        ("## Accuracy by task (intent-to-treat, first-pass)", CompliancePolicy::IntentToTreat),
    ] {
        let filtered = filter_trials(&scored, &FilterPolicy::with_compliance(policy));
        let table = accuracy_table(&filtered, crate::scoring::RowBy::Task, &conditions);
        out.push_str(title);
        out.push('\n');
        out.push_str(&render_accuracy_table("", &table));
        out.push('\n');
    }

    let primary = filter_trials(&scored, &FilterPolicy::PRIMARY);
    let by_model = accuracy_table(&primary, crate::scoring::RowBy::Model, &conditions);
    out.push_str("## Accuracy by model (100% compliant, first-pass)\n");
    out.push_str(&render_accuracy_table("", &by_model));
    out.push('\n');

    out.push_str("## Significant pairwise comparisons (q < 0.05)\n");
    let significant: Vec<&PairwiseComparison> =
        pairwise.iter().filter(|c| c.q < 0.05 && !c.degenerate).collect();
    if significant.is_empty() {
        out.push_str("(none)\n");
    } else {
        let columns = vec![
            "task".into(),
            "comparison".into(),
            "delta".into(),
            "h".into(),
            "q".into(),
        ];
        let rows: Vec<Vec<String>> = significant
            .iter()
            .map(|c| {
                vec![
                    c.task.to_string(),
                    format!("{} vs {}", c.condition, c.baseline),
                    c.delta.map_or("-".into(), |d| format!("{:+.1}pp", 100.0 * d)),
                    c.h.map_or("-".into(), |h| format!("{h:+.3}")),
                    format!("{:.4}", c.q),
                ]
            })
            .collect();
        out.push_str(&render_table("", &columns, &rows));
    }
    out.push('\n');

    out.push_str("## Effect sizes (|h|, largest first)\n");
    let mut by_effect: Vec<&PairwiseComparison> =
        pairwise.iter().filter(|c| c.h.is_some()).collect();
    by_effect.sort_by(|a, b| {
        b.h.unwrap()
            .abs()
            .partial_cmp(&a.h.unwrap().abs())
            .unwrap()
            .then_with(|| (a.task, a.condition, a.baseline).cmp(&(b.task, b.condition, b.baseline)))
    });
    let columns = vec![
        "task".into(),
        "comparison".into(),
        "h".into(),
        "delta".into(),
        "q".into(),
    ];
    let rows: Vec<Vec<String>> = by_effect
        .iter()
        .take(20)
        .map(|c| {
            vec![
                c.task.to_string(),
                format!("{} vs {}", c.condition, c.baseline),
                format!("{:+.3}", c.h.unwrap()),
                c.delta.map_or("-".into(), |d| format!("{:+.1}pp", 100.0 * d)),
                format!("{:.4}", c.q),
            ]
        })
        .collect();
    out.push_str(&render_table("", &columns, &rows));
    out.push('\n');

    out.push_str("## Per-item delta distributions (treatment vs control)\n");
    if item_deltas.is_empty() {
        out.push_str("(no treatment/control pairs present)\n");
    } else {
        for summary in &item_deltas {
            out.push_str(&delta_histogram(summary));
        }
    }
    out.push('\n');

    out.push_str("## Word counts\n");
    let wordcount = wordcount_table(&primary, &conditions);
    out.push_str(&render_wordcount_table(&wordcount, &conditions));
    out.push('\n');

    out.push_str("## Retry analysis\n");
    out.push_str(&render_retry_table(&retry_summary(&scored)));
    out.push('\n');

    out.push_str("## Drift check\n");
    out.push_str(&render_drift(&drift));
    out.push('\n');

    out.push_str("## Cross-model correlation\n");
    match cross_model.first() {
        Some(report) => out.push_str(&render_cross_model(report)),
        None => out.push_str("(not computed)\n"),
    }
    out.push('\n');

    out.push_str("## GEE sensitivity analysis\n");
    out.push_str(&render_gee(&gee));
    out.push('\n');

    out.push_str("## Qualitative coding\n");
    match &qualcode {
        Some(artifact) => {
            out.push_str(&format!(
                "task: {}, pattern set: {}\n",
                artifact.task, artifact.pattern_version
            ));
            out.push_str(&render_qualcode(&artifact.rows));
        }
        None => out.push_str("(not run)\n"),
    }

    let path = report_dir.join("report.md");
    write_text(&path, &header, &out)?;
    Ok(path)
}
