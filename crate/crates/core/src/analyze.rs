//! Analysis stage: pairwise comparison records, per-item deltas,
//! cross-model effect correlations, the temporal-drift check, and GEE
//! summaries, each emitted as machine-readable records plus aligned text.

use crate::artifact::{fmt_num, fmt_pct, render_table, write_jsonl, write_text};
use crate::conditions::ConditionId;
use crate::corpus::TaskType;
use crate::error::Result;
use crate::scoring::{per_item_deltas, ItemDeltaSummary, ScoredTrial};
use crate::stats::{
    bh_fdr, bootstrap_ci, cohens_h, cross_model_correlation, fisher_exact, gee_logistic,
    spearman_drift, ContingencyTable2x2, GeeFit, GeeRow, ModelPairR,
};
use crate::store::StoreHeader;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const BOOTSTRAP_RESAMPLES: u32 = 10_000;

/// One pooled pairwise test: `condition` against `baseline` within a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub task: TaskType,
    pub condition: ConditionId,
    pub baseline: ConditionId,
    pub n_condition: usize,
    pub correct_condition: usize,
    pub n_baseline: usize,
    pub correct_baseline: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_condition: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_baseline: Option<f64>,
    /// accuracy(condition) − accuracy(baseline).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    pub p: f64,
    pub degenerate: bool,
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_high: Option<f64>,
}

fn tasks_present(scored: &[ScoredTrial]) -> Vec<TaskType> {
    TaskType::ALL
        .iter()
        .copied()
        .filter(|t| scored.iter().any(|s| s.task_type == *t))
        .collect()
}

fn conditions_present(scored: &[ScoredTrial]) -> Vec<ConditionId> {
    ConditionId::ALL
        .iter()
        .copied()
        .filter(|c| scored.iter().any(|s| s.condition == *c))
        .collect()
}

fn outcomes(scored: &[ScoredTrial], task: TaskType, condition: ConditionId) -> Vec<bool> {
    scored
        .iter()
        .filter(|s| s.task_type == task && s.condition == condition && s.scoreable)
        .map(|s| s.correct == Some(true))
        .collect()
}

/// All condition-pair tests within each task, BH-adjusted as one family
/// (10 pairs x 7 tasks = 70 tests at full scale). Pairs follow canonical
/// condition order, the later condition playing `condition` against the
/// earlier `baseline`.
pub fn pairwise_comparisons(scored: &[ScoredTrial], seed: u64) -> Result<Vec<PairwiseComparison>> {
    let conditions = conditions_present(scored);
    let mut comparisons = Vec::new();
    for task in tasks_present(scored) {
        for i in 0..conditions.len() {
            for j in (i + 1)..conditions.len() {
                let baseline = conditions[i];
                let condition = conditions[j];
                let group_c = outcomes(scored, task, condition);
                let group_b = outcomes(scored, task, baseline);
                let n_c = group_c.len();
                let n_b = group_b.len();
                let correct_c = group_c.iter().filter(|&&v| v).count();
                let correct_b = group_b.iter().filter(|&&v| v).count();
                let acc_c = (n_c > 0).then(|| correct_c as f64 / n_c as f64);
                let acc_b = (n_b > 0).then(|| correct_b as f64 / n_b as f64);

                let fisher = fisher_exact(&ContingencyTable2x2::new(
                    correct_c as u64,
                    (n_c - correct_c) as u64,
                    correct_b as u64,
                    (n_b - correct_b) as u64,
                ));
                let (ci_low, ci_high) = if n_c > 0 && n_b > 0 {
                    let (lo, hi) = bootstrap_ci(&group_c, &group_b, BOOTSTRAP_RESAMPLES, seed)?;
                    (Some(lo), Some(hi))
                } else {
                    (None, None)
                };
                comparisons.push(PairwiseComparison {
                    task,
                    condition,
                    baseline,
                    n_condition: n_c,
                    correct_condition: correct_c,
                    n_baseline: n_b,
                    correct_baseline: correct_b,
                    accuracy_condition: acc_c,
                    accuracy_baseline: acc_b,
                    delta: acc_c.zip(acc_b).map(|(a, b)| a - b),
                    h: acc_c.zip(acc_b).map(|(a, b)| cohens_h(a, b)),
                    p: fisher.p,
                    degenerate: fisher.degenerate,
                    q: 0.0,
                    ci_low,
                    ci_high,
                });
            }
        }
    }
    let qvals = bh_fdr(&comparisons.iter().map(|c| c.p).collect::<Vec<_>>());
    for (c, q) in comparisons.iter_mut().zip(qvals) {
        c.q = q;
    }
    Ok(comparisons)
}

/// Per-model drift check: accuracy against schedule position within each
/// (model, condition).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub model_id: String,
    pub condition: ConditionId,
    pub n: usize,
    pub accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn drift_report(scored: &[ScoredTrial]) -> Vec<DriftRow> {
    let mut groups: BTreeMap<(String, ConditionId), Vec<&ScoredTrial>> = BTreeMap::new();
    for t in scored.iter().filter(|t| t.scoreable) {
        groups
            .entry((t.model_id.clone(), t.condition))
            .or_default()
            .push(t);
    }
    groups
        .into_iter()
        .map(|((model_id, condition), mut trials)| {
            trials.sort_by_key(|t| t.plan_index);
            let series: Vec<f64> = trials
                .iter()
                .map(|t| if t.correct == Some(true) { 1.0 } else { 0.0 })
                .collect();
            let n = series.len();
            let accuracy = series.iter().sum::<f64>() / n.max(1) as f64;
            match spearman_drift(&series) {
                Ok(result) => DriftRow {
                    model_id,
                    condition,
                    n,
                    accuracy,
                    rho: Some(result.rho),
                    p: Some(result.p),
                    note: None,
                },
                Err(e) => DriftRow {
                    model_id,
                    condition,
                    n,
                    accuracy,
                    rho: None,
                    p: None,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Cross-model correlation of per-task effect deltas for one condition
/// against a baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossModelReport {
    pub condition: ConditionId,
    pub baseline: ConditionId,
    pub tasks: Vec<TaskType>,
    pub models: Vec<String>,
    pub pairs: Vec<ModelPairR>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn cross_model_report(
    scored: &[ScoredTrial],
    condition: ConditionId,
    baseline: ConditionId,
) -> CrossModelReport {
    let mut models: Vec<String> = scored.iter().map(|t| t.model_id.clone()).collect();
    models.sort();
    models.dedup();

    let cell = |model: &str, task: TaskType, cond: ConditionId| -> Option<f64> {
        let trials: Vec<&ScoredTrial> = scored
            .iter()
            .filter(|t| t.model_id == model && t.task_type == task && t.condition == cond && t.scoreable)
            .collect();
        (!trials.is_empty()).then(|| {
            trials.iter().filter(|t| t.correct == Some(true)).count() as f64 / trials.len() as f64
        })
    };

    // Keep tasks where every model has data in both conditions.
    let tasks: Vec<TaskType> = TaskType::ALL
        .iter()
        .copied()
        .filter(|&task| {
            models.iter().all(|m| {
                cell(m, task, condition).is_some() && cell(m, task, baseline).is_some()
            })
        })
        .collect();

    if models.len() < 2 || tasks.is_empty() {
        return CrossModelReport {
            condition,
            baseline,
            tasks,
            models,
            pairs: Vec::new(),
            mean_r: None,
            note: Some("requires at least 2 models with shared task coverage".into()),
        };
    }

    let effects: Vec<(String, Vec<f64>)> = models
        .iter()
        .map(|m| {
            let vector: Vec<f64> = tasks
                .iter()
                .map(|&task| {
                    cell(m, task, condition).unwrap() - cell(m, task, baseline).unwrap()
                })
                .collect();
            (m.clone(), vector)
        })
        .collect();

    match cross_model_correlation(&effects) {
        Ok(out) => CrossModelReport {
            condition,
            baseline,
            tasks,
            models,
            pairs: out.pairs,
            mean_r: out.mean_r,
            note: None,
        },
        Err(e) => CrossModelReport {
            condition,
            baseline,
            tasks,
            models,
            pairs: Vec::new(),
            mean_r: None,
            note: Some(e.to_string()),
        },
    }
}

/// GEE fit over one scope (pooled or a single task).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeeSummary {
    pub scope: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<GeeFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn gee_rows(scored: &[ScoredTrial], task: Option<TaskType>) -> Vec<GeeRow> {
    scored
        .iter()
        .filter(|t| t.scoreable && task.map_or(true, |w| t.task_type == w))
        .map(|t| GeeRow {
            outcome: t.correct == Some(true),
            condition: t.condition.to_string(),
            cluster: t.item_id.clone(),
        })
        .collect()
}

pub fn gee_report(scored: &[ScoredTrial]) -> Vec<GeeSummary> {
    let mut scopes: Vec<(String, Option<TaskType>)> = vec![("pooled".into(), None)];
    for task in tasks_present(scored) {
        scopes.push((task.to_string(), Some(task)));
    }
    scopes
        .into_iter()
        .map(|(scope, task)| {
            let rows = gee_rows(scored, task);
            match gee_logistic(&rows, ConditionId::Control.as_str()) {
                Ok(fit) => GeeSummary {
                    scope,
                    fit: Some(fit),
                    error: None,
                },
                Err(e) => GeeSummary {
                    scope,
                    fit: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Everything the analysis stage computes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisOutputs {
    pub pairwise: Vec<PairwiseComparison>,
    pub item_deltas: Vec<ItemDeltaSummary>,
    pub cross_model: CrossModelReport,
    pub drift: Vec<DriftRow>,
    pub gee: Vec<GeeSummary>,
}

/// Run the full analysis over primary-filtered trials.
pub fn analyze(scored_primary: &[ScoredTrial], seed: u64) -> Result<AnalysisOutputs> {
    let conditions = conditions_present(scored_primary);
    let mut item_deltas = Vec::new();
    if conditions.contains(&ConditionId::Control) {
        for &treatment in &conditions {
            if treatment != ConditionId::Control {
                item_deltas.push(per_item_deltas(
                    scored_primary,
                    treatment,
                    ConditionId::Control,
                ));
            }
        }
    }
    Ok(AnalysisOutputs {
        pairwise: pairwise_comparisons(scored_primary, seed)?,
        item_deltas,
        cross_model: cross_model_report(scored_primary, ConditionId::EPrime, ConditionId::Control),
        drift: drift_report(scored_primary),
        gee: gee_report(scored_primary),
    })
}

/// Write every analysis artifact (jsonl + aligned text) under `dir`.
pub fn write_analysis(
    outputs: &AnalysisOutputs,
    header: &StoreHeader,
    dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = dir.as_ref();
    write_jsonl(dir.join("pairwise.jsonl"), header, &outputs.pairwise)?;
    write_text(
        dir.join("pairwise.txt"),
        header,
        &render_pairwise(&outputs.pairwise),
    )?;
    write_jsonl(dir.join("item_deltas.jsonl"), header, &outputs.item_deltas)?;
    write_text(
        dir.join("item_deltas.txt"),
        header,
        &render_item_deltas(&outputs.item_deltas),
    )?;
    write_jsonl(
        dir.join("correlation.jsonl"),
        header,
        std::slice::from_ref(&outputs.cross_model),
    )?;
    write_text(
        dir.join("correlation.txt"),
        header,
        &render_cross_model(&outputs.cross_model),
    )?;
    write_jsonl(dir.join("drift.jsonl"), header, &outputs.drift)?;
    write_text(dir.join("drift.txt"), header, &render_drift(&outputs.drift))?;
    write_jsonl(dir.join("gee.jsonl"), header, &outputs.gee)?;
    write_text(dir.join("gee.txt"), header, &render_gee(&outputs.gee))?;
    Ok(())
}

pub fn render_pairwise(comparisons: &[PairwiseComparison]) -> String {
    let columns = vec![
        "task".into(),
        "comparison".into(),
        "acc".into(),
        "base".into(),
        "delta".into(),
        "h".into(),
        "p".into(),
        "q".into(),
        "ci95".into(),
    ];
    let rows: Vec<Vec<String>> = comparisons
        .iter()
        .map(|c| {
            vec![
                c.task.to_string(),
                format!("{} vs {}", c.condition, c.baseline),
                fmt_pct(c.accuracy_condition),
                fmt_pct(c.accuracy_baseline),
                c.delta.map_or("-".into(), |d| format!("{:+.1}pp", 100.0 * d)),
                fmt_num(c.h, 3),
                format!("{:.4}{}", c.p, if c.degenerate { "*" } else { "" }),
                format!("{:.4}", c.q),
                match (c.ci_low, c.ci_high) {
                    (Some(lo), Some(hi)) => format!("[{:+.3}, {:+.3}]", lo, hi),
                    _ => "-".into(),
                },
            ]
        })
        .collect();
    let mut out = render_table("Pairwise comparisons (pooled per task)", &columns, &rows);
    out.push_str("* degenerate table (zero margin), p = 1 by convention\n");
    out
}

pub fn render_item_deltas(summaries: &[ItemDeltaSummary]) -> String {
    let columns = vec![
        "comparison".into(),
        "items".into(),
        "mean".into(),
        "median".into(),
        "sd".into(),
        "range".into(),
        "improved".into(),
        "equal".into(),
        "worse".into(),
    ];
    let rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            vec![
                format!("{} vs {}", s.condition_a, s.condition_b),
                s.deltas.len().to_string(),
                format!("{:+.1}pp", 100.0 * s.mean),
                format!("{:+.1}pp", 100.0 * s.median),
                format!("{:.1}pp", 100.0 * s.sd),
                format!("[{:+.1}, {:+.1}]", 100.0 * s.min, 100.0 * s.max),
                s.improved.to_string(),
                s.equal.to_string(),
                s.worse.to_string(),
            ]
        })
        .collect();
    render_table("Per-item accuracy deltas", &columns, &rows)
}

pub fn render_cross_model(report: &CrossModelReport) -> String {
    let mut out = format!(
        "Cross-model correlation of per-task {} deltas (baseline {})\n",
        report.condition, report.baseline
    );
    if let Some(note) = &report.note {
        out.push_str(&format!("(unavailable: {note})\n"));
        return out;
    }
    let columns = vec!["model pair".into(), "r".into()];
    let rows: Vec<Vec<String>> = report
        .pairs
        .iter()
        .map(|p| {
            vec![
                format!("{} vs {}", p.model_a, p.model_b),
                p.r.map_or("undefined".into(), |r| format!("{r:+.3}")),
            ]
        })
        .collect();
    out.push_str(&render_table("", &columns, &rows));
    out.push_str(&format!(
        "mean r = {}\n",
        report.mean_r.map_or("undefined".into(), |r| format!("{r:+.3}"))
    ));
    out
}

pub fn render_drift(rows: &[DriftRow]) -> String {
    let columns = vec![
        "model".into(),
        "condition".into(),
        "n".into(),
        "accuracy".into(),
        "rho".into(),
        "p".into(),
        "note".into(),
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.model_id.clone(),
                r.condition.to_string(),
                r.n.to_string(),
                fmt_pct(Some(r.accuracy)),
                r.rho.map_or("-".into(), |v| format!("{v:+.3}")),
                fmt_num(r.p, 3),
                r.note.clone().unwrap_or_default(),
            ]
        })
        .collect();
    render_table("Schedule-position drift check", &columns, &body)
}

pub fn render_gee(summaries: &[GeeSummary]) -> String {
    let mut out = String::from("GEE logistic fits (exchangeable working correlation, item clusters)\n");
    for summary in summaries {
        out.push('\n');
        match (&summary.fit, &summary.error) {
            (Some(fit), _) => {
                out.push_str(&format!(
                    "[{}] n={} clusters={} alpha={:.3} iterations={} converged={}\n",
                    summary.scope, fit.n_obs, fit.n_clusters, fit.alpha, fit.iterations, fit.converged
                ));
                let columns = vec![
                    "term".into(),
                    "coef".into(),
                    "robust_se".into(),
                    "z".into(),
                    "p".into(),
                ];
                let rows: Vec<Vec<String>> = fit
                    .terms
                    .iter()
                    .map(|t| {
                        vec![
                            t.name.clone(),
                            format!("{:+.4}", t.coefficient),
                            format!("{:.4}", t.robust_se),
                            t.z.map_or("-".into(), |z| format!("{z:+.2}")),
                            t.p.map_or("-".into(), |p| format!("{p:.4}")),
                        ]
                    })
                    .collect();
                out.push_str(&render_table("", &columns, &rows));
            }
            (None, Some(error)) => {
                out.push_str(&format!("[{}] unavailable: {error}\n", summary.scope));
            }
            (None, None) => out.push_str(&format!("[{}] unavailable\n", summary.scope)),
        }
    }
    out
}
