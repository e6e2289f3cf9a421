//! End-to-end runner behavior against the bundled mock script: grid
//! completeness, retry containment, resume idempotence, and concurrency
//! invariance of store contents.

use lexbench::backend::{BackendMap, MockBackend};
use lexbench::conditions::ConditionId;
use lexbench::corpus::sample_bank;
use lexbench::runner::{plan_trials, run, TrialSchedule};
use lexbench::store::{dedup_records, read_store, StoreHeader, TrialStatus};
use std::collections::BTreeSet;
use std::sync::Arc;

fn header() -> StoreHeader {
    StoreHeader {
        schema_version: 1,
        config_hash: "testhash".into(),
        global_seed: 42,
    }
}

fn mock_backends(model: &str) -> BackendMap {
    let script = serde_json::from_str(lexbench::demo_mock_json()).unwrap();
    let mut map = BackendMap::new();
    map.insert(model.to_string(), Arc::new(MockBackend::new(script)) as _);
    map
}

fn full_plan(model: &str) -> Vec<lexbench::runner::TrialPlan> {
    plan_trials(
        &sample_bank(),
        &[model.to_string()],
        &ConditionId::ALL,
        42,
        &TrialSchedule::default(),
    )
    .unwrap()
}

#[test]
fn fresh_run_persists_every_trial_once() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store.jsonl");
    let plans = full_plan("mock-frontier");
    assert_eq!(plans.len(), 280);
    let summary = run(&plans, &sample_bank(), &mock_backends("mock-frontier"), &store, &header(), 4).unwrap();
    assert_eq!(summary.executed, 280);
    assert_eq!(summary.skipped, 0);

    let contents = read_store(&store).unwrap();
    let ids: BTreeSet<&str> = contents.records.iter().map(|r| r.trial_id.as_str()).collect();
    assert_eq!(ids.len(), 280);
    // One scripted constraint violation -> exactly one retry record.
    let retries: Vec<_> = contents.records.iter().filter(|r| r.attempt == 1).collect();
    assert_eq!(retries.len(), 1);
    assert_eq!(retries[0].condition, ConditionId::EPrime);
    assert_eq!(retries[0].item_id, "ana-001");
    // Retry containment: every retry follows a violating ok first pass.
    assert!(retries.iter().all(|r| r.condition == ConditionId::EPrime));
    // Scripted failures recorded with their statuses.
    let errors: Vec<_> = contents
        .records
        .iter()
        .filter(|r| r.status == TrialStatus::ApiError)
        .collect();
    assert_eq!(errors.len(), 1);
    let empties: Vec<_> = contents
        .records
        .iter()
        .filter(|r| r.status == TrialStatus::Empty)
        .collect();
    assert_eq!(empties.len(), 1);
}

#[test]
fn resume_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store.jsonl");
    let plans = full_plan("mock-frontier");
    let backends = mock_backends("mock-frontier");
    let bank = sample_bank();

    // Partial run: first 100 plans.
    run(&plans[..100], &bank, &backends, &store, &header(), 4).unwrap();
    let partial = read_store(&store).unwrap();
    assert!(partial.records.len() >= 100);

    // Resume with the full plan.
    let summary = run(&plans, &bank, &backends, &store, &header(), 4).unwrap();
    assert_eq!(summary.planned, 280);
    assert!(summary.skipped >= 98, "skipped {}", summary.skipped);

    let contents = read_store(&store).unwrap();
    let ids: BTreeSet<&str> = contents.records.iter().map(|r| r.trial_id.as_str()).collect();
    assert_eq!(ids.len(), 280);

    // Running again re-executes only the permanently failing trials.
    let summary = run(&plans, &bank, &backends, &store, &header(), 4).unwrap();
    assert_eq!(summary.skipped, 278);
    assert_eq!(summary.executed, 2);
    let contents = read_store(&store).unwrap();
    let deduped = dedup_records(&contents.records);
    let dedup_ids: BTreeSet<&str> = deduped.iter().map(|r| r.trial_id.as_str()).collect();
    assert_eq!(dedup_ids.len(), 280);
    // At most one ok first-pass record per id after dedup.
    let mut ok_firsts: BTreeSet<&str> = BTreeSet::new();
    for r in deduped.iter().filter(|r| r.attempt == 0 && r.status == TrialStatus::Ok) {
        assert!(ok_firsts.insert(r.trial_id.as_str()), "duplicate ok set {}", r.trial_id);
    }
}

#[test]
fn store_contents_independent_of_concurrency() {
    let bank = sample_bank();
    let plans = full_plan("mock-frontier");
    let mut snapshots = Vec::new();
    for max_in_flight in [1usize, 8] {
        let dir = tempfile::tempdir().unwrap();
        let store = dir.path().join("store.jsonl");
        run(&plans, &bank, &mock_backends("mock-frontier"), &store, &header(), max_in_flight).unwrap();
        let contents = read_store(&store).unwrap();
        let mut rows: Vec<(String, u32, TrialStatus, Option<String>, f64, u64)> = contents
            .records
            .iter()
            .map(|r| {
                (
                    r.trial_id.clone(),
                    r.attempt,
                    r.status,
                    r.response_text.clone(),
                    r.temperature,
                    r.request_seed,
                )
            })
            .collect();
        rows.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
        snapshots.push(rows);
    }
    assert_eq!(snapshots[0], snapshots[1]);
}
