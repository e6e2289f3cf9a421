//! Trial planning and execution: the deterministic per-model schedule, the
//! constraint retry protocol, transport retries, and the resumable
//! concurrent run loop over the record store.

use crate::backend::{Backend, BackendError, BackendMap, CompletionRequest};
use crate::compliance::check;
use crate::conditions::{retry_feedback, ConditionId, ConditionSpec};
use crate::corpus::{AnswerKind, TaskItem};
use crate::error::{Error, Result};
use crate::store::{completed_trial_ids, StoreHeader, StoreWriter, TrialRecord, TrialStatus};
use chrono::{SecondsFormat, Utc};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};

/// Temperature/token schedule for the trial grid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrialSchedule {
    pub trials_per_item: u32,
    /// Temperature of trial index 0.
    pub temperature_first: f64,
    /// Temperature of every later trial index.
    pub temperature_rest: f64,
    pub max_tokens: u32,
}

impl Default for TrialSchedule {
    fn default() -> Self {
        TrialSchedule {
            trials_per_item: 4,
            temperature_first: 0.0,
            temperature_rest: 0.7,
            max_tokens: 2048,
        }
    }
}

/// One planned trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub trial_id: String,
    pub item_id: String,
    pub model_id: String,
    pub condition: ConditionId,
    pub trial_index: u32,
    /// Position in the model's shuffled execution order.
    pub plan_index: u64,
    pub temperature: f64,
    pub max_tokens: u32,
    pub request_seed: u64,
}

fn seed_bytes(label: &[u8], global_seed: u64, salt: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(label);
    hasher.update(global_seed.to_le_bytes());
    hasher.update(salt.as_bytes());
    hasher.finalize().into()
}

/// Request seed: a pure function of (global seed, trial id), so completion
/// order never affects request inputs.
pub fn request_seed(global_seed: u64, trial_id: &str) -> u64 {
    let bytes = seed_bytes(b"request", global_seed, trial_id);
    u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"))
}

/// In-place Fisher-Yates with a fixed generator, so plans never depend on
/// library shuffle internals.
fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}

/// Plan the full trial grid: |bank| x trials_per_item x |models| x
/// |conditions| plans, each model's order shuffled by a generator seeded
/// from (global_seed, model_id). Identical inputs give identical plans.
pub fn plan_trials(
    bank: &[TaskItem],
    model_ids: &[String],
    conditions: &[ConditionId],
    global_seed: u64,
    schedule: &TrialSchedule,
) -> Result<Vec<TrialPlan>> {
    if bank.is_empty() {
        return Err(Error::Invalid("plan requires a nonempty bank".into()));
    }
    if model_ids.is_empty() {
        return Err(Error::Invalid("plan requires at least one model".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for id in model_ids {
        if !seen.insert(id) {
            return Err(Error::Invalid(format!("duplicate model id: {id}")));
        }
        if id.contains(':') {
            return Err(Error::Invalid(format!(
                "model id {id:?} contains ':' (reserved as the trial-id separator)"
            )));
        }
    }

    let mut plans = Vec::new();
    for model_id in model_ids {
        let mut cells: Vec<(usize, ConditionId, u32)> = Vec::new();
        for (item_idx, _) in bank.iter().enumerate() {
            for &condition in conditions {
                for trial_index in 0..schedule.trials_per_item {
                    cells.push((item_idx, condition, trial_index));
                }
            }
        }
        let mut rng = ChaCha8Rng::from_seed(seed_bytes(b"plan", global_seed, model_id));
        shuffle(&mut cells, &mut rng);

        for (plan_index, (item_idx, condition, trial_index)) in cells.into_iter().enumerate() {
            let item = &bank[item_idx];
            let trial_id = format!("{model_id}:{condition}:{}:{trial_index}", item.id);
            plans.push(TrialPlan {
                request_seed: request_seed(global_seed, &trial_id),
                trial_id,
                item_id: item.id.clone(),
                model_id: model_id.clone(),
                condition,
                trial_index,
                plan_index: plan_index as u64,
                temperature: if trial_index == 0 {
                    schedule.temperature_first
                } else {
                    schedule.temperature_rest
                },
                max_tokens: schedule.max_tokens,
            });
        }
    }
    Ok(plans)
}

/// Render the user prompt for an item. Identical across conditions; only
/// the system prompt varies by condition.
pub fn user_prompt(item: &TaskItem) -> String {
    match item.answer_kind {
        AnswerKind::ValidInvalid => format!(
            "{}\n\nDecide whether the conclusion follows from the premises. \
             Give your final answer as VALID or INVALID.",
            item.stem
        ),
        AnswerKind::MultipleChoice => {
            let mut out = String::from(&item.stem);
            out.push_str("\n\n");
            if let Some(options) = &item.options {
                for (letter, text) in options {
                    out.push_str(&format!("{letter}) {text}\n"));
                }
            }
            out.push_str("\nGive the letter of the best answer.");
            out
        }
    }
}

const TRANSPORT_RETRIES: u32 = 3;
const BACKOFF_BASE_MS: u64 = 200;

fn now_rfc3339() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn call_with_transport_retries(
    backend: &dyn Backend,
    request: &CompletionRequest<'_>,
) -> std::result::Result<crate::backend::Completion, BackendError> {
    let mut last_err = None;
    for attempt in 0..=TRANSPORT_RETRIES {
        match backend.complete(request) {
            Ok(completion) => return Ok(completion),
            Err(e) => {
                let retryable = e.retryable;
                last_err = Some(e);
                if !retryable || attempt == TRANSPORT_RETRIES {
                    break;
                }
                std::thread::sleep(std::time::Duration::from_millis(
                    BACKOFF_BASE_MS << attempt,
                ));
            }
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn record_from(
    plan: &TrialPlan,
    attempt: u32,
    seed: u64,
    status: TrialStatus,
    response: Option<crate::backend::Completion>,
    started_at: String,
) -> TrialRecord {
    let (response_text, finish_reason) = match (&status, response) {
        (TrialStatus::Ok, Some(c)) => (Some(c.text), Some(c.finish_reason)),
        _ => (None, None),
    };
    TrialRecord {
        trial_id: plan.trial_id.clone(),
        item_id: plan.item_id.clone(),
        model_id: plan.model_id.clone(),
        condition: plan.condition,
        trial_index: plan.trial_index,
        plan_index: plan.plan_index,
        attempt,
        temperature: plan.temperature,
        max_tokens: plan.max_tokens,
        request_seed: seed,
        status,
        response_text,
        finish_reason,
        started_at,
        completed_at: now_rfc3339(),
    }
}

fn one_attempt(
    plan: &TrialPlan,
    backend: &dyn Backend,
    attempt: u32,
    seed: u64,
    system_prompt: &str,
    user_prompt: &str,
    condition_spec: &ConditionSpec,
) -> TrialRecord {
    let started_at = now_rfc3339();
    let request = CompletionRequest {
        system_prompt,
        user_prompt,
        temperature: plan.temperature,
        seed,
        max_tokens: plan.max_tokens,
        item_id: &plan.item_id,
        condition: condition_spec.id,
        trial_index: plan.trial_index,
        attempt,
    };
    match call_with_transport_retries(backend, &request) {
        Ok(completion) => {
            if completion.text.trim().is_empty() {
                record_from(plan, attempt, seed, TrialStatus::Empty, None, started_at)
            } else {
                record_from(plan, attempt, seed, TrialStatus::Ok, Some(completion), started_at)
            }
        }
        Err(_) => record_from(plan, attempt, seed, TrialStatus::ApiError, None, started_at),
    }
}

/// Execute one trial: the first-pass request, plus exactly one retry when
/// the condition carries the retry protocol and the first pass violated its
/// ban list. No other condition ever retries.
pub fn execute_trial(
    plan: &TrialPlan,
    item: &TaskItem,
    condition_spec: &ConditionSpec,
    backend: &dyn Backend,
) -> Vec<TrialRecord> {
    debug_assert_eq!(plan.item_id, item.id);
    debug_assert_eq!(plan.condition, condition_spec.id);
    let system = condition_spec.prompt_text.clone();
    let user = user_prompt(item);

    let first = one_attempt(plan, backend, 0, plan.request_seed, &system, &user, condition_spec);
    let mut records = vec![first];

    if condition_spec.has_retry {
        if let (TrialStatus::Ok, Some(text)) = (records[0].status, records[0].response_text.clone())
        {
            let report = check(&text, condition_spec);
            if !report.violations.is_empty() {
                let feedback = retry_feedback(&report.violations)
                    .expect("nonempty violations produce feedback");
                // Retry carries the prior response for context, keeps the
                // temperature, and derives a distinct seed.
                let retry_user = format!(
                    "{user}\n\nYour previous response:\n{text}\n\n{feedback}"
                );
                let retry = one_attempt(
                    plan,
                    backend,
                    1,
                    plan.request_seed.wrapping_add(1),
                    &system,
                    &retry_user,
                    condition_spec,
                );
                records.push(retry);
            }
        }
    }
    records
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub planned: usize,
    pub skipped: usize,
    pub executed: usize,
}

/// Run all plans against their backends with at most `max_in_flight`
/// concurrent trials, appending to the store at `store_path`. Trials whose
/// id already has an ok first pass are skipped (resume semantics); a single
/// writer appends each execution's records as one contiguous block.
pub fn run(
    plans: &[TrialPlan],
    bank: &[TaskItem],
    backends: &BackendMap,
    store_path: impl AsRef<Path>,
    header: &StoreHeader,
    max_in_flight: usize,
) -> Result<RunSummary> {
    let items: BTreeMap<&str, &TaskItem> = bank.iter().map(|i| (i.id.as_str(), i)).collect();
    let specs: BTreeMap<ConditionId, ConditionSpec> = ConditionId::ALL
        .iter()
        .map(|&id| (id, ConditionSpec::get(id)))
        .collect();
    for plan in plans {
        if !items.contains_key(plan.item_id.as_str()) {
            return Err(Error::Invalid(format!(
                "plan {} references unknown item {}",
                plan.trial_id, plan.item_id
            )));
        }
        if !backends.contains_key(&plan.model_id) {
            return Err(Error::Config(format!(
                "no backend configured for model {}",
                plan.model_id
            )));
        }
    }

    let (mut writer, existing) = StoreWriter::open_or_create(&store_path, header)?;
    let done = completed_trial_ids(&existing);
    let pending: Vec<&TrialPlan> = plans
        .iter()
        .filter(|p| !done.contains(&p.trial_id))
        .collect();
    let skipped = plans.len() - pending.len();

    let workers = max_in_flight.max(1).min(pending.len().max(1));
    let cursor = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<Vec<TrialRecord>>();

    let executed = std::thread::scope(|scope| -> Result<usize> {
        for _ in 0..workers {
            let tx = tx.clone();
            let cursor = &cursor;
            let pending = &pending;
            let items = &items;
            let specs = &specs;
            let backends = backends;
            scope.spawn(move || loop {
                let idx = cursor.fetch_add(1, Ordering::SeqCst);
                if idx >= pending.len() {
                    break;
                }
                let plan = pending[idx];
                let item = items[plan.item_id.as_str()];
                let spec = &specs[&plan.condition];
                let backend: &Arc<dyn Backend> = &backends[&plan.model_id];
                let records = execute_trial(plan, item, spec, backend.as_ref());
                if tx.send(records).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut executed = 0usize;
        while let Ok(records) = rx.recv() {
            writer.append_execution(&records)?;
            executed += 1;
        }
        Ok(executed)
    })?;

    Ok(RunSummary {
        planned: plans.len(),
        skipped,
        executed,
    })
}
