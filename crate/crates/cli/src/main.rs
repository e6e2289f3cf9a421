//! `lexbench` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 stage failure.

use clap::{Parser, Subcommand};
use lexbench::artifact::read_jsonl;
use lexbench::compliance::{check, compliance_tier};
use lexbench::conditions::{ConditionId, ConditionSpec};
use lexbench::config::{build_backends, load_config};
use lexbench::corpus::{bank_summary, load_bank, TaskType};
use lexbench::extraction::extract;
use lexbench::pipeline::{
    analyze_stage, qualcode_stage, run_pipeline, score_stage, PipelineOptions,
};
use lexbench::qualcode::PatternSet;
use lexbench::report::build_report;
use lexbench::runner::{plan_trials, run};
use lexbench::scoring::ScoredTrial;
use lexbench::store::{dedup_records, read_store, StoreHeader};
use std::io::Read;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "lexbench", version, about = "Vocabulary-constraint reasoning benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan the trial grid and print a summary.
    Plan {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's bank path.
        #[arg(long)]
        bank: Option<PathBuf>,
        /// Write the plan as line-delimited records.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute planned trials against the configured backends.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        bank: Option<PathBuf>,
        /// Replace every backend with a scripted mock.
        #[arg(long)]
        mock: Option<PathBuf>,
    },
    /// Lint text against a condition's ban list.
    Check {
        #[arg(long)]
        condition: String,
        /// Read from this file instead of stdin.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Run the answer-extraction cascade over text.
    Extract {
        /// valid_invalid or mc.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Score a record store against a bank.
    Score {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        bank: PathBuf,
        /// full, above90, or itt; default emits all three tiers.
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the statistical suite over scored trials.
    Analyze {
        /// Directory holding trials.jsonl from `score`.
        #[arg(long)]
        scored: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pattern-based qualitative coding of stored responses.
    Qualcode {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        bank: PathBuf,
        #[arg(long, default_value = "ethical")]
        task: String,
        /// Pattern-set file; defaults to the bundled lexicon.
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble the navigable report from score and analysis outputs.
    Report {
        #[arg(long)]
        scored: PathBuf,
        #[arg(long)]
        analysis: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run plan, run, score, analyze, qualcode, and report in order.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        bank: Option<PathBuf>,
        #[arg(long)]
        mock: Option<PathBuf>,
    },
    /// Task-bank utilities.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Condition definitions.
    Conditions {
        #[command(subcommand)]
        command: ConditionsCommand,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Validate a bank file.
    Validate { path: PathBuf },
    /// Per-task-type item counts.
    Summary { path: PathBuf },
}

#[derive(Subcommand)]
enum ConditionsCommand {
    /// Export every condition's prompt text and ban list.
    Dump,
}

fn read_input(file: Option<&PathBuf>) -> anyhow::Result<String> {
    match file {
        Some(path) => Ok(std::fs::read_to_string(path)?),
        None => {
            let mut buf = String::new();
            std::io::stdin().read_to_string(&mut buf)?;
            Ok(buf)
        }
    }
}

fn run_command(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Plan { config, bank, out } => {
            let loaded = load_config(&config)?;
            let bank_path = match bank {
                Some(p) => p,
                None => loaded
                    .config
                    .bank
                    .as_ref()
                    .map(|b| loaded.resolve(b))
                    .ok_or_else(|| anyhow::anyhow!("no bank configured; pass --bank"))?,
            };
            let items = load_bank(&bank_path)?;
            let plans = plan_trials(
                &items,
                &loaded.config.model_ids(),
                &loaded.config.conditions(),
                loaded.config.global_seed,
                &loaded.config.schedule,
            )?;
            if let Some(out) = out {
                let header = StoreHeader {
                    schema_version: lexbench::SCHEMA_VERSION,
                    config_hash: loaded.config_hash.clone(),
                    global_seed: loaded.config.global_seed,
                };
                lexbench::artifact::write_jsonl(&out, &header, &plans)?;
            }
            println!(
                "planned {} trials ({} items x {} trials x {} models x {} conditions)",
                plans.len(),
                items.len(),
                loaded.config.schedule.trials_per_item,
                loaded.config.models.len(),
                loaded.config.conditions().len()
            );
        }
        Command::Run { config, bank, mock } => {
            let loaded = load_config(&config)?;
            let paths = loaded.paths();
            std::fs::create_dir_all(&paths.out_dir)?;
            let bank_path = match bank {
                Some(p) => p,
                None => loaded
                    .config
                    .bank
                    .as_ref()
                    .map(|b| loaded.resolve(b))
                    .ok_or_else(|| anyhow::anyhow!("no bank configured; pass --bank"))?,
            };
            let items = load_bank(&bank_path)?;
            let plans = plan_trials(
                &items,
                &loaded.config.model_ids(),
                &loaded.config.conditions(),
                loaded.config.global_seed,
                &loaded.config.schedule,
            )?;
            let backends = build_backends(&loaded, mock.as_deref())?;
            let header = StoreHeader {
                schema_version: lexbench::SCHEMA_VERSION,
                config_hash: loaded.config_hash.clone(),
                global_seed: loaded.config.global_seed,
            };
            let summary = run(
                &plans,
                &items,
                &backends,
                &paths.store,
                &header,
                loaded.config.max_in_flight,
            )?;
            println!(
                "run complete: {} planned, {} skipped (resume), {} executed -> {}",
                summary.planned,
                summary.skipped,
                summary.executed,
                paths.store.display()
            );
        }
        Command::Check { condition, file } => {
            let id = ConditionId::parse(&condition)?;
            let spec = ConditionSpec::get(id);
            let text = read_input(file.as_ref())?;
            let report = check(&text, &spec);
            for violation in report.violations.iter().chain(report.exemptions.iter()) {
                println!("{}", serde_json::to_string(violation)?);
            }
            println!(
                "{}",
                serde_json::json!({
                    "condition": id.as_str(),
                    "violations": report.violations.len(),
                    "exemptions": report.exemptions.len(),
                    "sentence_total": report.sentence_total,
                    "clean_sentences": report.clean_sentences,
                    "fully_compliant": report.fully_compliant,
                    "compliance_rate": report.compliance_rate,
                    "tier": compliance_tier(&report).as_str(),
                })
            );
        }
        Command::Extract { kind, file } => {
            let answer_kind = match kind.as_str() {
                "valid_invalid" => lexbench::corpus::AnswerKind::ValidInvalid,
                "mc" | "multiple_choice" => lexbench::corpus::AnswerKind::MultipleChoice,
                other => anyhow::bail!("unknown kind {other:?} (expected valid_invalid or mc)"),
            };
            let text = read_input(file.as_ref())?;
            let extracted = extract(answer_kind, &text);
            println!(
                "{}",
                serde_json::json!({
                    "value": extracted.value.map(|v| v.as_str()),
                    "rule": extracted.rule,
                    "scoreable": extracted.scoreable(),
                })
            );
        }
        Command::Score {
            store,
            bank,
            policy,
            out,
        } => {
            let contents = read_store(&store)?;
            let records = dedup_records(&contents.records);
            let items = load_bank(&bank)?;
            let policies = match &policy {
                Some(name) => vec![lexbench::scoring::FilterPolicy::parse(name)?.name()],
                None => vec!["full", "above90", "itt"],
            };
            let scored = score_stage_with(&records, &items, &contents.header, &out, &policies)?;
            println!(
                "scored {} trial attempts -> {}",
                scored.len(),
                out.display()
            );
        }
        Command::Analyze { scored, out } => {
            let (header, trials): (StoreHeader, Vec<ScoredTrial>) =
                read_jsonl(scored.join("trials.jsonl"))?;
            let outputs = analyze_stage(&trials, &header, &out)?;
            println!(
                "analyzed {} pairwise comparisons -> {}",
                outputs.pairwise.len(),
                out.display()
            );
        }
        Command::Qualcode {
            store,
            bank,
            task,
            patterns,
            out,
        } => {
            let contents = read_store(&store)?;
            let records = dedup_records(&contents.records);
            let items = load_bank(&bank)?;
            let task = TaskType::parse(&task)?;
            let pattern_set = match patterns {
                Some(path) => PatternSet::load(path)?,
                None => PatternSet::default_set(),
            };
            let rows = qualcode_stage(&records, &items, task, &pattern_set, &contents.header, &out)?;
            println!(
                "coded {} conditions over task {task} -> {}",
                rows.len(),
                out.display()
            );
        }
        Command::Report {
            scored,
            analysis,
            out,
        } => {
            let path = build_report(&scored, &analysis, &out)?;
            println!("report -> {}", path.display());
        }
        Command::Pipeline { config, bank, mock } => {
            let outcome = run_pipeline(&PipelineOptions {
                config_path: config,
                mock_override: mock,
                bank_override: bank,
            })?;
            println!(
                "pipeline complete: {} planned, {} skipped, {} executed",
                outcome.run_summary.planned,
                outcome.run_summary.skipped,
                outcome.run_summary.executed
            );
            println!("report -> {}", outcome.report_path.display());
        }
        Command::Corpus { command } => match command {
            CorpusCommand::Validate { path } => {
                let items = load_bank(&path)?;
                println!("ok: {} items", items.len());
            }
            CorpusCommand::Summary { path } => {
                let items = load_bank(&path)?;
                let summary = bank_summary(&items);
                for (task, count) in &summary {
                    println!("{task}: {count}");
                }
                println!("total: {}", items.len());
            }
        },
        Command::Conditions { command } => match command {
            ConditionsCommand::Dump => {
                for spec in ConditionSpec::all() {
                    println!(
                        "{}",
                        serde_json::json!({
                            "id": spec.id.as_str(),
                            "has_retry": spec.has_retry,
                            "banned_lexemes": spec.banned_lexemes,
                            "exempt_bigrams": spec
                                .exempt_bigrams
                                .iter()
                                .map(|b| b.as_phrase())
                                .collect::<Vec<_>>(),
                            "prompt_text": spec.prompt_text,
                        })
                    );
                }
            }
        },
    }
    Ok(())
}

/// Score with a policy subset (the pipeline emits all three tiers).
fn score_stage_with(
    records: &[lexbench::store::TrialRecord],
    bank: &[lexbench::corpus::TaskItem],
    header: &StoreHeader,
    out: &std::path::Path,
    policies: &[&str],
) -> anyhow::Result<Vec<ScoredTrial>> {
    // score_stage always writes all tiers; trim to the requested subset by
    // removing unrequested tier directories afterwards.
    let scored = score_stage(records, bank, header, out)?;
    for tier in ["full", "above90", "itt"] {
        if !policies.contains(&tier) {
            let dir = out.join(tier);
            if dir.exists() {
                std::fs::remove_dir_all(&dir)?;
            }
        }
    }
    Ok(scored)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's default exit code for parse errors is 2; this tool
            // reserves 2 for stage failures and uses 1 for usage errors.
            let _ = e.print();
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            std::process::exit(if is_help { 0 } else { 1 });
        }
    };
    if let Err(e) = run_command(cli.command) {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}
