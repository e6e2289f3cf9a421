//! Pipeline orchestration: plan -> run -> score -> analyze -> qualcode ->
//! report, with stage-tagged failures and resume semantics at the run
//! stage (completed trials are never re-requested).

use crate::analyze::{analyze, write_analysis, AnalysisOutputs};
use crate::artifact::{write_jsonl, write_text};
use crate::config::{build_backends, load_config, LoadedConfig, RunPaths};
use crate::corpus::{load_bank, TaskItem, TaskType};
use crate::error::{Error, Result};
use crate::qualcode::{aggregate_qual, code_response, PatternSet, QualAggregate};
use crate::report::{build_report, render_accuracy_table, render_qualcode, render_retry_table, render_wordcount_table};
use crate::runner::{plan_trials, run, RunSummary};
use crate::scoring::{
    accuracy_table, filter_trials, retry_summary, score_records, wordcount_table, FilterPolicy,
    RowBy, ScoredTrial,
};
use crate::store::{dedup_records, read_store, StoreHeader, TrialRecord, TrialStatus};
use std::path::{Path, PathBuf};

/// Score a deduplicated record set and emit every score artifact under
/// `scored_dir`: the scored-trial file, the retry summary, and the
/// accuracy/word-count tables at all three compliance tiers.
pub fn score_stage(
    records: &[TrialRecord],
    bank: &[TaskItem],
    header: &StoreHeader,
    scored_dir: &Path,
) -> Result<Vec<ScoredTrial>> {
    let scored = score_records(records, bank)?;
    write_jsonl(scored_dir.join("trials.jsonl"), header, &scored)?;

    let retries = retry_summary(&scored);
    write_jsonl(scored_dir.join("retry_summary.jsonl"), header, &retries)?;
    write_text(
        scored_dir.join("retry_summary.txt"),
        header,
        &render_retry_table(&retries),
    )?;

    let conditions: Vec<_> = crate::conditions::ConditionId::ALL
        .iter()
        .copied()
        .filter(|c| scored.iter().any(|t| t.condition == *c))
        .collect();

    for policy_name in ["full", "above90", "itt"] {
        let policy = FilterPolicy::parse(policy_name)?;
        let filtered = filter_trials(&scored, &policy);
        let dir = scored_dir.join(policy_name);

        let by_task = accuracy_table(&filtered, RowBy::Task, &conditions);
        write_jsonl(dir.join("accuracy_by_task.jsonl"), header, std::slice::from_ref(&by_task))?;
        write_text(
            dir.join("accuracy_by_task.txt"),
            header,
            &render_accuracy_table("Accuracy by task and condition", &by_task),
        )?;

        let by_model = accuracy_table(&filtered, RowBy::Model, &conditions);
        write_jsonl(dir.join("accuracy_by_model.jsonl"), header, std::slice::from_ref(&by_model))?;
        write_text(
            dir.join("accuracy_by_model.txt"),
            header,
            &render_accuracy_table("Accuracy by model and condition", &by_model),
        )?;

        let wordcount = wordcount_table(&filtered, &conditions);
        write_jsonl(dir.join("wordcount_by_task.jsonl"), header, &wordcount)?;
        write_text(
            dir.join("wordcount_by_task.txt"),
            header,
            &render_wordcount_table(&wordcount, &conditions),
        )?;
    }
    Ok(scored)
}

/// Analyze primary-filtered trials and emit the analysis artifacts.
pub fn analyze_stage(
    scored: &[ScoredTrial],
    header: &StoreHeader,
    analysis_dir: &Path,
) -> Result<AnalysisOutputs> {
    let primary = filter_trials(scored, &FilterPolicy::PRIMARY);
    let outputs = analyze(&primary, header.global_seed)?;
    write_analysis(&outputs, header, analysis_dir)?;
    Ok(outputs)
}

/// Code first-pass ok responses of one task type and emit the aggregate.
pub fn qualcode_stage(
    records: &[TrialRecord],
    bank: &[TaskItem],
    task: TaskType,
    patterns: &PatternSet,
    header: &StoreHeader,
    out_dir: &Path,
) -> Result<Vec<QualAggregate>> {
    let task_items: std::collections::BTreeSet<&str> = bank
        .iter()
        .filter(|i| i.task_type == task)
        .map(|i| i.id.as_str())
        .collect();
    let mut coded = Vec::new();
    let mut sorted: Vec<&TrialRecord> = records
        .iter()
        .filter(|r| {
            r.attempt == 0
                && r.status == TrialStatus::Ok
                && task_items.contains(r.item_id.as_str())
        })
        .collect();
    sorted.sort_by(|a, b| a.trial_id.cmp(&b.trial_id));
    for record in sorted {
        let text = record.response_text.as_deref().unwrap_or_default();
        coded.push((record.condition, code_response(text, patterns)));
    }
    let aggregates = aggregate_qual(&coded);

    let artifact = crate::qualcode::QualcodeArtifact {
        pattern_version: patterns.version.clone(),
        task,
        rows: aggregates.clone(),
    };
    write_jsonl(
        out_dir.join("qualcode.jsonl"),
        header,
        std::slice::from_ref(&artifact),
    )?;
    write_text(
        out_dir.join("qualcode.txt"),
        header,
        &format!(
            "Pattern set version: {}\nTask: {task}\n\n{}",
            patterns.version,
            render_qualcode(&aggregates)
        ),
    )?;
    Ok(aggregates)
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub config_path: PathBuf,
    /// Replace every backend with this scripted mock.
    pub mock_override: Option<PathBuf>,
    /// Override the config's bank path.
    pub bank_override: Option<PathBuf>,
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub paths: RunPaths,
    pub run_summary: RunSummary,
    pub report_path: PathBuf,
}

fn resolve_bank(loaded: &LoadedConfig, options: &PipelineOptions) -> Result<PathBuf> {
    if let Some(path) = &options.bank_override {
        return Ok(path.clone());
    }
    match &loaded.config.bank {
        Some(path) => Ok(loaded.resolve(path)),
        None => Err(Error::Config(
            "no bank configured; set `bank` in the config or pass --bank".into(),
        )),
    }
}

/// Run every stage in order. Any stage failure halts with a stage-tagged
/// diagnostic; re-invocation resumes at the run stage's first incomplete
/// trial, so completed live requests are never re-issued.
pub fn run_pipeline(options: &PipelineOptions) -> Result<PipelineOutcome> {
    let loaded = load_config(&options.config_path).map_err(|e| e.in_stage("config"))?;
    let paths = loaded.paths();
    std::fs::create_dir_all(&paths.out_dir)
        .map_err(|e| Error::io(paths.out_dir.display().to_string(), e).in_stage("config"))?;
    let header = StoreHeader {
        schema_version: crate::SCHEMA_VERSION,
        config_hash: loaded.config_hash.clone(),
        global_seed: loaded.config.global_seed,
    };

    let bank_path = resolve_bank(&loaded, options).map_err(|e| e.in_stage("corpus"))?;
    let bank = load_bank(&bank_path).map_err(|e| e.in_stage("corpus"))?;

    let plans = plan_trials(
        &bank,
        &loaded.config.model_ids(),
        &loaded.config.conditions(),
        loaded.config.global_seed,
        &loaded.config.schedule,
    )
    .map_err(|e| e.in_stage("plan"))?;

    let backends = build_backends(&loaded, options.mock_override.as_deref())
        .map_err(|e| e.in_stage("run"))?;
    let run_summary = run(
        &plans,
        &bank,
        &backends,
        &paths.store,
        &header,
        loaded.config.max_in_flight,
    )
    .map_err(|e| e.in_stage("run"))?;

    let contents = read_store(&paths.store).map_err(|e| e.in_stage("score"))?;
    let records = dedup_records(&contents.records);
    let scored =
        score_stage(&records, &bank, &header, &paths.scored_dir).map_err(|e| e.in_stage("score"))?;

    analyze_stage(&scored, &header, &paths.analysis_dir).map_err(|e| e.in_stage("analyze"))?;

    qualcode_stage(
        &records,
        &bank,
        TaskType::Ethical,
        &PatternSet::default_set(),
        &header,
        &paths.analysis_dir,
    )
    .map_err(|e| e.in_stage("qualcode"))?;

    let report_path = build_report(&paths.scored_dir, &paths.analysis_dir, &paths.report_dir)
        .map_err(|e| e.in_stage("report"))?;

    Ok(PipelineOutcome {
        paths,
        run_summary,
        report_path,
    })
}
