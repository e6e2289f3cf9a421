//! Black-box CLI tests: subcommand output shapes, exit codes, and the
//! pipeline resume contract.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_lexbench")
}

fn run_with_stdin(args: &[&str], stdin: &str) -> (String, String, i32) {
    let mut child = Command::new(binary())
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    (
        String::from_utf8_lossy(&out.stdout).to_string(),
        String::from_utf8_lossy(&out.stderr).to_string(),
        out.status.code().unwrap_or(-1),
    )
}

fn run(args: &[&str]) -> (String, String, i32) {
    run_with_stdin(args, "")
}

fn setup_demo(dir: &Path, conditions: Option<&str>) {
    std::fs::write(dir.join("bank.json"), lexbench::sample_bank_json()).unwrap();
    std::fs::write(dir.join("mock.json"), lexbench::demo_mock_json()).unwrap();
    let conditions_line = conditions
        .map(|c| format!("conditions = {c}\n"))
        .unwrap_or_default();
    let config = format!(
        "schema_version = 1\nglobal_seed = 42\nmax_in_flight = 4\nbank = \"bank.json\"\nout_dir = \"out\"\n{conditions_line}\n[[models]]\nid = \"mock-frontier\"\nkind = \"mock\"\nscript = \"mock.json\"\n"
    );
    std::fs::write(dir.join("run.toml"), config).unwrap();
}

#[test]
fn check_emits_violation_records_and_summary() {
    let (stdout, _, code) = run_with_stdin(
        &["check", "--condition", "neutral_ban"],
        "We choose speed rather than accuracy. This seems very weak.",
    );
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 3); // one violation, one exemption, one summary
    let violation: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(violation["lexeme"], "very");
    assert_eq!(violation["exempted"], false);
    let exemption: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(exemption["lexeme"], "rather");
    assert_eq!(exemption["exempted"], true);
    let summary: serde_json::Value = serde_json::from_str(lines[2]).unwrap();
    assert_eq!(summary["violations"], 1);
    assert_eq!(summary["fully_compliant"], false);
    assert_eq!(summary["sentence_total"], 2);
    assert_eq!(summary["tier"], "below_90"); // 1 of 2 sentences clean

}

#[test]
fn extract_reports_value_and_rule() {
    let (stdout, _, code) = run_with_stdin(&["extract", "--kind", "mc"], "## ANSWER\nB");
    assert_eq!(code, 0);
    let parsed: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(parsed["value"], "B");
    assert_eq!(parsed["rule"], "answer_header");
    assert_eq!(parsed["scoreable"], true);

    let (stdout, _, _) = run_with_stdin(&["extract", "--kind", "valid_invalid"], "**VALID**");
    let parsed: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(parsed["value"], "VALID");
}

#[test]
fn corpus_commands() {
    let dir = tempfile::tempdir().unwrap();
    let bank = dir.path().join("bank.json");
    std::fs::write(&bank, lexbench::sample_bank_json()).unwrap();
    let (stdout, _, code) = run(&["corpus", "validate", bank.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("ok: 14 items"));

    let (stdout, _, code) = run(&["corpus", "summary", bank.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("syllogisms: 2"));
    assert!(stdout.contains("total: 14"));

    // Invalid bank -> stage failure (2) naming the problem.
    std::fs::write(&bank, "{\"schema_version\":1,\"items\":[]}").unwrap();
    let bad = dir.path().join("missing.json");
    let (_, stderr, code) = run(&["corpus", "validate", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("missing.json"), "{stderr}");
}

#[test]
fn conditions_dump_lists_all_five() {
    let (stdout, _, code) = run(&["conditions", "dump"]);
    assert_eq!(code, 0);
    let ids: Vec<String> = stdout
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(
        ids,
        vec!["control", "e_prime", "no_have", "elaborated_prompt", "neutral_ban"]
    );
    for line in stdout.lines() {
        let parsed: serde_json::Value = serde_json::from_str(line).unwrap();
        let prompt = parsed["prompt_text"].as_str().unwrap();
        assert!(prompt.starts_with("You are a careful, analytical reasoning assistant."));
    }
}

#[test]
fn usage_errors_exit_one() {
    let (_, _, code) = run(&["--definitely-not-a-flag"]);
    assert_eq!(code, 1);
    let (_, _, code) = run(&["nonexistent-subcommand"]);
    assert_eq!(code, 1);
    // Help is not an error.
    let (_, _, code) = run(&["--help"]);
    assert_eq!(code, 0);
}

#[test]
fn pipeline_full_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    setup_demo(dir.path(), None);
    let config = dir.path().join("run.toml");

    let (stdout, stderr, code) = run(&["pipeline", "--config", config.to_str().unwrap()]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(stdout.contains("280 planned"), "{stdout}");
    let report = dir.path().join("out/report/report.md");
    assert!(report.exists());
    let text = std::fs::read_to_string(&report).unwrap();
    for section in [
        "## Accuracy by task (100% compliant, first-pass)",
        "## Accuracy by task (>90% compliant, first-pass)",
        "## Accuracy by task (intent-to-treat, first-pass)",
        "## Accuracy by model",
        "## Significant pairwise comparisons",
        "## Effect sizes",
        "## Per-item delta distributions",
        "## Word counts",
        "## Retry analysis",
        "## Drift check",
        "## Cross-model correlation",
        "## GEE sensitivity analysis",
        "## Qualitative coding",
    ] {
        assert!(text.contains(section), "missing section {section}");
    }
    assert!(text.contains("config_hash="));
    assert!(text.contains("global_seed=42"));

    // Second invocation: completed trials are skipped, not re-run.
    let (stdout, _, code) = run(&["pipeline", "--config", config.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("278 skipped"), "{stdout}");
}

#[test]
fn pipeline_without_retry_condition_marks_retry_section_empty() {
    let dir = tempfile::tempdir().unwrap();
    setup_demo(dir.path(), Some("[\"control\", \"neutral_ban\"]"));
    let config = dir.path().join("run.toml");
    let (_, stderr, code) = run(&["pipeline", "--config", config.to_str().unwrap()]);
    assert_eq!(code, 0, "stderr: {stderr}");
    let text = std::fs::read_to_string(dir.path().join("out/report/report.md")).unwrap();
    assert!(text.contains("(no retry-bearing trials in the store)"));
}

#[test]
fn unreadable_bank_path_fails_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    setup_demo(dir.path(), None);
    let config = dir.path().join("run.toml");
    let (_, stderr, code) = run(&[
        "pipeline",
        "--config",
        config.to_str().unwrap(),
        "--bank",
        "does/not/exist.json",
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("does/not/exist.json"), "{stderr}");
    assert!(stderr.contains("corpus"), "stage tag missing: {stderr}");
}

#[test]
fn score_and_analyze_standalone() {
    let dir = tempfile::tempdir().unwrap();
    setup_demo(dir.path(), None);
    let config = dir.path().join("run.toml");
    let (_, _, code) = run(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(code, 0);

    let store = dir.path().join("out/store.jsonl");
    let bank = dir.path().join("bank.json");
    let scored = dir.path().join("scored");
    let (_, stderr, code) = run(&[
        "score",
        "--store",
        store.to_str().unwrap(),
        "--bank",
        bank.to_str().unwrap(),
        "--policy",
        "full",
        "--out",
        scored.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(scored.join("trials.jsonl").exists());
    assert!(scored.join("full/accuracy_by_task.txt").exists());
    assert!(!scored.join("itt").exists(), "--policy full trims other tiers");

    let analysis = dir.path().join("analysis");
    let (_, stderr, code) = run(&[
        "analyze",
        "--scored",
        scored.to_str().unwrap(),
        "--out",
        analysis.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    // 7 tasks x C(5,2) condition pairs = 70 comparison records.
    let pairwise = std::fs::read_to_string(analysis.join("pairwise.jsonl")).unwrap();
    assert_eq!(pairwise.lines().count() - 1, 70);

    // qualcode with an explicit pattern file.
    let patterns = dir.path().join("patterns.json");
    std::fs::write(&patterns, lexbench::default_patterns_json()).unwrap();
    let qual_out = dir.path().join("qual");
    let (_, stderr, code) = run(&[
        "qualcode",
        "--store",
        store.to_str().unwrap(),
        "--bank",
        bank.to_str().unwrap(),
        "--task",
        "ethical",
        "--patterns",
        patterns.to_str().unwrap(),
        "--out",
        qual_out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(qual_out.join("qualcode.jsonl").exists());

    let report_dir = dir.path().join("report");
    let (_, stderr, code) = run(&[
        "report",
        "--scored",
        scored.to_str().unwrap(),
        "--analysis",
        analysis.to_str().unwrap(),
        "--out",
        report_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(report_dir.join("report.md").exists());
}
