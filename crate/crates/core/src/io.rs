//! Canonical text serialization of states, traces and replay reports.
//!
//! Every document is JSON with object keys sorted and two-space
//! indentation. Sets and finite maps already serialize in sorted order, so
//! equal values always produce byte-equal documents.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{Action, AndroidState, Platform, Response};

pub const TRACE_FORMAT: &str = "droidsec-trace/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{what}: parse error at line {line}, column {column}: {message}")]
    Parse {
        what: &'static str,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported trace format {0:?}, expected {TRACE_FORMAT:?}")]
    Format(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn parse_error(what: &'static str, e: serde_json::Error) -> IoError {
    IoError::Parse {
        what,
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Canonical text of any serializable value.
pub fn to_canonical<T: Serialize>(value: &T) -> String {
    // Routing through `Json` sorts object keys (its map is a BTreeMap).
    let tree = serde_json::to_value(value).expect("model values always serialize");
    let mut out = serde_json::to_string_pretty(&tree).expect("json trees always serialize");
    out.push('\n');
    out
}

fn parse<T: for<'de> Deserialize<'de>>(what: &'static str, text: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| parse_error(what, e))
}

pub fn emit_state(s: &AndroidState) -> String {
    to_canonical(s)
}

pub fn parse_state(text: &str) -> Result<AndroidState, IoError> {
    parse("state", text)
}

pub fn emit_action(a: &Action) -> String {
    to_canonical(a)
}

pub fn parse_action(text: &str) -> Result<Action, IoError> {
    parse("action", text)
}

/// Hex SHA-256 of the canonical text of `s`.
pub fn state_digest(s: &AndroidState) -> String {
    hex::encode(Sha256::digest(emit_state(s).as_bytes()))
}

/// Where a trace's initial state comes from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum InitialState {
    Inline(AndroidState),
    /// A state file, relative to the trace file's directory.
    File(PathBuf),
}

/// One recorded step of a replay.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub action: Action,
    pub response: Response,
    pub digest: String,
}

/// The on-disk trace document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceFile {
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    #[serde(default)]
    pub platform: Platform,
    pub actions: Vec<Action>,
    /// Recorded outcome of a previous replay, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Vec<StepRecord>>,
}

impl TraceFile {
    pub fn new(initial: Option<AndroidState>, platform: Platform, actions: Vec<Action>) -> Self {
        TraceFile {
            format: TRACE_FORMAT.to_string(),
            initial: initial.map(InitialState::Inline),
            platform,
            actions,
            expected: None,
        }
    }

    /// The initial state, loading a referenced state file relative to
    /// `base_dir`. A missing initial section means the empty state.
    pub fn initial_state(&self, base_dir: &Path) -> Result<AndroidState, IoError> {
        match &self.initial {
            None => Ok(AndroidState::empty()),
            Some(InitialState::Inline(s)) => Ok(s.clone()),
            Some(InitialState::File(p)) => read_state_file(&base_dir.join(p)),
        }
    }
}

pub fn emit_trace(t: &TraceFile) -> String {
    to_canonical(t)
}

pub fn parse_trace(text: &str) -> Result<TraceFile, IoError> {
    let t: TraceFile = parse("trace", text)?;
    if t.format != TRACE_FORMAT {
        return Err(IoError::Format(t.format));
    }
    Ok(t)
}

pub fn emit_report(steps: &[StepRecord]) -> String {
    to_canonical(&steps)
}

pub fn parse_report(text: &str) -> Result<Vec<StepRecord>, IoError> {
    parse("report", text)
}

pub fn read_file(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_state_file(path: &Path) -> Result<AndroidState, IoError> {
    parse_state(&read_file(path)?)
}

pub fn read_trace_file(path: &Path) -> Result<TraceFile, IoError> {
    parse_trace(&read_file(path)?)
}

/// Parses `text` as JSON and re-emits it canonically.
pub fn canonicalize(text: &str) -> Result<String, IoError> {
    let tree: Json = parse("document", text)?;
    Ok(to_canonical(&tree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ErrorCode, InstanceId, OpTy};

    #[test]
    fn empty_state_round_trips_and_is_canonical() {
        let text = emit_state(&AndroidState::empty());
        assert_eq!(parse_state(&text).unwrap(), AndroidState::empty());
        assert_eq!(canonicalize(&text).unwrap(), text);
    }

    #[test]
    fn keys_are_sorted() {
        let text = emit_state(&AndroidState::empty());
        let keys: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("  \""))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(keys.len(), 12);
    }

    #[test]
    fn action_uses_parameter_names() {
        let a = Action::GrantP {
            ic: InstanceId(3),
            cp: "cp".into(),
            app: "b".into(),
            uri: "content://x".into(),
            op: OpTy::Read,
        };
        let text = emit_action(&a);
        assert!(text.contains("\"grantP\""));
        assert!(text.contains("\"pt\": \"read\""));
        assert!(text.contains("\"u\": \"content://x\""));
        assert_eq!(parse_action(&text).unwrap(), a);
    }

    #[test]
    fn unknown_action_tag_is_rejected() {
        let err = parse_action("{\"reboot\": {}}").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 1, .. }));
    }

    #[test]
    fn unknown_error_code_is_rejected() {
        let bad = "[{\"index\": 0, \"action\": {\"stop\": {\"ic\": 0}}, \"response\": \"bogus\", \"digest\": \"\"}]";
        assert!(parse_report(bad).is_err());
        let good = bad.replace("bogus", "instance_not_running");
        let steps = parse_report(&good).unwrap();
        assert_eq!(steps[0].response, Response::Error(ErrorCode::InstanceNotRunning));
    }

    #[test]
    fn parse_error_reports_position() {
        let err = parse_state("{\n  \"installedApps\": [1,\n").unwrap_err();
        match err {
            IoError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn wrong_format_is_rejected() {
        let mut t = TraceFile::new(None, Platform::default(), vec![]);
        t.format = "other/9".into();
        assert!(matches!(parse_trace(&emit_trace(&t)), Err(IoError::Format(_))));
    }

    #[test]
    fn digest_is_stable() {
        let d = state_digest(&AndroidState::empty());
        assert_eq!(d.len(), 64);
        assert_eq!(d, state_digest(&AndroidState::empty()));
    }
}
