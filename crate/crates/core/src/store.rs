//! Append-only trial-record store: line-delimited JSON with a per-line
//! checksum, a provenance header line, resume/dedup semantics, and
//! torn-tail recovery after an interrupted run.

use crate::conditions::ConditionId;
use crate::error::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

/// Outcome of one backend invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    ApiError,
    Empty,
}

/// One persisted trial attempt. Failed attempts carry no response-derived
/// fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: String,
    pub item_id: String,
    pub model_id: String,
    pub condition: ConditionId,
    pub trial_index: u32,
    /// Position in the model's shuffled schedule; the drift check orders by
    /// this so analyses stay independent of completion interleaving.
    pub plan_index: u64,
    /// 0 = first pass, 1 = constraint retry.
    pub attempt: u32,
    pub temperature: f64,
    pub max_tokens: u32,
    pub request_seed: u64,
    pub status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finish_reason: Option<String>,
    pub started_at: String,
    pub completed_at: String,
}

/// Provenance header, the first line of every store file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreHeader {
    pub schema_version: u32,
    pub config_hash: String,
    pub global_seed: u64,
}

fn checksum_of(payload_json: &str) -> String {
    let digest = Sha256::digest(payload_json.as_bytes());
    hex_prefix(&digest, 16)
}

pub(crate) fn hex_prefix(bytes: &[u8], len: usize) -> String {
    let mut s = String::with_capacity(len);
    for b in bytes {
        use std::fmt::Write as _;
        let _ = write!(s, "{b:02x}");
        if s.len() >= len {
            break;
        }
    }
    s.truncate(len);
    s
}

/// Serialize a payload into a store line with an embedded checksum over the
/// payload's own JSON form.
fn encode_line<T: Serialize>(payload: &T) -> String {
    let json = serde_json::to_string(payload).expect("store payloads serialize");
    let checksum = checksum_of(&json);
    debug_assert!(json.ends_with('}'));
    format!("{},\"checksum\":\"{}\"}}", &json[..json.len() - 1], checksum)
}

#[derive(Deserialize)]
struct Envelope<T> {
    #[serde(flatten)]
    payload: T,
    checksum: String,
}

/// Parse and integrity-check one store line.
fn decode_line<T: Serialize + DeserializeOwned>(line: &str, lineno: usize) -> Result<T> {
    let envelope: Envelope<T> = serde_json::from_str(line).map_err(|e| {
        Error::Store(format!("line {lineno}: malformed record: {e}"))
    })?;
    let json = serde_json::to_string(&envelope.payload).expect("payload reserializes");
    if checksum_of(&json) != envelope.checksum {
        return Err(Error::Store(format!(
            "line {lineno}: checksum mismatch (corrupt record)"
        )));
    }
    Ok(envelope.payload)
}

/// A validated read of a store file.
#[derive(Debug)]
pub struct StoreContents {
    pub header: StoreHeader,
    pub records: Vec<TrialRecord>,
    /// Byte length of the valid prefix; shorter than the file when a torn
    /// tail was ignored.
    pub valid_len: u64,
    pub torn_tail: bool,
}

/// Read and validate a store. A final line that fails to parse *and* lacks
/// a trailing newline is treated as the torn tail of an interrupted write
/// and skipped; any other invalid line aborts with a diagnostic.
pub fn read_store(path: impl AsRef<Path>) -> Result<StoreContents> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path.display().to_string(), e))?;

    let mut records = Vec::new();
    let mut header: Option<StoreHeader> = None;
    let mut valid_len = 0u64;
    let mut torn_tail = false;

    let mut offset = 0usize;
    let mut lineno = 0usize;
    while offset < text.len() {
        let rest = &text[offset..];
        let (line, consumed, has_newline) = match rest.find('\n') {
            Some(i) => (&rest[..i], i + 1, true),
            None => (rest, rest.len(), false),
        };
        lineno += 1;
        let at_eof = offset + consumed >= text.len();

        let parsed: Result<()> = if lineno == 1 {
            decode_line::<StoreHeader>(line, lineno).map(|h| {
                header = Some(h);
            })
        } else {
            decode_line::<TrialRecord>(line, lineno).map(|r| {
                records.push(r);
            })
        };
        match parsed {
            Ok(()) => {
                valid_len = (offset + consumed) as u64;
            }
            Err(e) => {
                if at_eof && !has_newline {
                    torn_tail = true;
                    break;
                }
                return Err(e);
            }
        }
        offset += consumed;
    }

    let header = header.ok_or_else(|| {
        Error::Store(format!("{}: missing header line", path.display()))
    })?;
    Ok(StoreContents {
        header,
        records,
        valid_len,
        torn_tail,
    })
}

/// Append-only writer. One writer owns a store file at a time.
pub struct StoreWriter {
    writer: BufWriter<File>,
    path: PathBuf,
}

impl StoreWriter {
    /// Create a fresh store with its header line.
    pub fn create(path: impl AsRef<Path>, header: &StoreHeader) -> Result<StoreWriter> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut writer = StoreWriter {
            writer: BufWriter::new(file),
            path,
        };
        writer.write_line(&encode_line(header))?;
        Ok(writer)
    }

    /// Open an existing store for appending (validating it and truncating a
    /// torn tail), or create it. Returns previously persisted records.
    pub fn open_or_create(
        path: impl AsRef<Path>,
        header: &StoreHeader,
    ) -> Result<(StoreWriter, Vec<TrialRecord>)> {
        let path = path.as_ref();
        if !path.exists() {
            return Ok((Self::create(path, header)?, Vec::new()));
        }
        let contents = read_store(path)?;
        if contents.header != *header {
            return Err(Error::Store(format!(
                "{}: header mismatch (existing run used config_hash {} / seed {}); \
                 refusing to mix runs",
                path.display(),
                contents.header.config_hash,
                contents.header.global_seed
            )));
        }
        let file = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        file.set_len(contents.valid_len)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut file = file;
        file.seek(SeekFrom::End(0))
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok((
            StoreWriter {
                writer: BufWriter::new(file),
                path: path.to_path_buf(),
            },
            contents.records,
        ))
    }

    fn write_line(&mut self, line: &str) -> Result<()> {
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.write_all(b"\n"))
            .and_then(|_| self.writer.flush())
            .map_err(|e| Error::io(self.path.display().to_string(), e))
    }

    /// Append the records of one trial execution as a contiguous block.
    pub fn append_execution(&mut self, records: &[TrialRecord]) -> Result<()> {
        for record in records {
            self.write_line(&encode_line(record))?;
        }
        Ok(())
    }
}

/// Trial ids already persisted with an ok first pass; resume skips these.
pub fn completed_trial_ids(records: &[TrialRecord]) -> std::collections::BTreeSet<String> {
    records
        .iter()
        .filter(|r| r.attempt == 0 && r.status == TrialStatus::Ok)
        .map(|r| r.trial_id.clone())
        .collect()
}

/// Deduplicate on trial id: executions are contiguous blocks sharing a
/// trial id; per id the first block whose first pass completed ok wins,
/// falling back to the first block. Keeps at most one record set per id.
pub fn dedup_records(records: &[TrialRecord]) -> Vec<TrialRecord> {
    #[derive(Default)]
    struct Choice {
        best: Option<(bool, Vec<usize>)>, // (is_ok, record indices)
    }
    let mut order: Vec<&str> = Vec::new();
    let mut by_id: std::collections::BTreeMap<&str, Choice> = std::collections::BTreeMap::new();

    let mut i = 0;
    while i < records.len() {
        let id = records[i].trial_id.as_str();
        let mut block = vec![i];
        let mut j = i + 1;
        while j < records.len() && records[j].trial_id == id {
            block.push(j);
            j += 1;
        }
        let is_ok = block
            .iter()
            .any(|&k| records[k].attempt == 0 && records[k].status == TrialStatus::Ok);
        let entry = by_id.entry(id).or_default();
        if entry.best.is_none() {
            order.push(id);
        }
        let replace = match &entry.best {
            None => true,
            Some((best_ok, _)) => !*best_ok && is_ok,
        };
        if replace {
            entry.best = Some((is_ok, block));
        }
        i = j;
    }

    let mut out = Vec::new();
    for id in order {
        if let Some((_, block)) = &by_id[id].best {
            for &k in block {
                out.push(records[k].clone());
            }
        }
    }
    out
}
