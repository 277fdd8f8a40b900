//! Text trace files and JSON pattern documents.
//!
//! Trace files hold one step per line. Instances within a step are separated by
//! `;` and written as `src:dest:cmd`, optionally followed by `@<address>`.
//! `#` starts a comment line and blank lines are ignored. A file may hold
//! several traces, each introduced by a `== trace <id> ==` line.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Causality, Message, MessageInstance, ModelError, Origin, Pattern, PatternSet, Step, Trace, TraceSet};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    Trace { line: usize, reason: String },
    #[error("malformed pattern document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("pattern {index}: {reason}")]
    Pattern { index: usize, reason: String },
}

fn trace_header(line: &str) -> Option<&str> {
    line.strip_prefix("== trace ")
        .and_then(|rest| rest.strip_suffix("=="))
        .map(str::trim)
}

fn parse_instance(item: &str) -> Result<MessageInstance, String> {
    let (msg, addr) = match item.split_once('@') {
        Some((m, a)) => {
            let a = a
                .trim()
                .parse::<u64>()
                .map_err(|e| format!("bad address {a:?}: {e}"))?;
            (m.trim(), Some(a))
        }
        None => (item, None),
    };
    let message: Message = msg.parse().map_err(|e: ModelError| e.to_string())?;
    Ok(MessageInstance {
        message,
        address: addr,
        instance_id: None,
    })
}

fn parse_step(line: &str) -> Result<Step, String> {
    let instances = line
        .split(';')
        .map(|item| {
            let item = item.trim();
            if item.is_empty() {
                Err("empty message instance".to_string())
            } else {
                parse_instance(item)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Step::new(instances).map_err(|e| e.to_string())
}

/// Parses a trace file. Without any `== trace <id> ==` header the whole file
/// is a single trace named `default_id`.
pub fn parse_traces(text: &str, default_id: &str) -> Result<TraceSet, FormatError> {
    let mut traces: Vec<Trace> = Vec::new();
    let mut current: Option<(String, Vec<Step>)> = None;
    let mut headerless: Vec<Step> = Vec::new();
    let mut headerless_line = None;

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(id) = trace_header(line) {
            if id.is_empty() || id.chars().any(char::is_whitespace) {
                return Err(FormatError::Trace {
                    line: line_no,
                    reason: format!("bad trace id {id:?}"),
                });
            }
            if let Some(line) = headerless_line {
                return Err(FormatError::Trace {
                    line,
                    reason: "steps before the first trace header".to_string(),
                });
            }
            if let Some((id, steps)) = current.take() {
                traces.push(Trace::new(id, steps));
            }
            current = Some((id.to_string(), Vec::new()));
            continue;
        }
        let step = parse_step(line).map_err(|reason| FormatError::Trace {
            line: line_no,
            reason,
        })?;
        match current.as_mut() {
            Some((_, steps)) => steps.push(step),
            None => {
                headerless_line.get_or_insert(line_no);
                headerless.push(step);
            }
        }
    }
    match current {
        Some((id, steps)) => traces.push(Trace::new(id, steps)),
        None if headerless_line.is_some() => traces.push(Trace::new(default_id, headerless)),
        None => {}
    }
    Ok(TraceSet::new(traces))
}

pub fn write_trace(out: &mut String, trace: &Trace) {
    writeln!(out, "== trace {} ==", trace.id).unwrap();
    for step in trace.steps() {
        let mut first = true;
        for inst in step.instances() {
            if !first {
                out.push(';');
            }
            first = false;
            write!(out, "{inst}").unwrap();
        }
        out.push('\n');
    }
}

pub fn write_traces(traces: &TraceSet) -> String {
    let mut out = String::new();
    for t in traces.iter() {
        write_trace(&mut out, t);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternEntry {
    pub messages: Vec<String>,
    pub set: String,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternDocument {
    pub patterns: Vec<PatternEntry>,
}

/// Longest first, then lexicographic over the canonical tokens.
pub fn pattern_document<'a>(patterns: impl IntoIterator<Item = &'a Pattern>) -> PatternDocument {
    let mut entries: Vec<PatternEntry> = patterns
        .into_iter()
        .map(|p| PatternEntry {
            messages: p.tokens(),
            set: p.origin.label().to_string(),
            length: p.len(),
        })
        .collect();
    entries.sort_by(|a, b| b.length.cmp(&a.length).then_with(|| a.messages.cmp(&b.messages)));
    PatternDocument { patterns: entries }
}

pub fn write_patterns<'a>(patterns: impl IntoIterator<Item = &'a Pattern>) -> String {
    let mut s = serde_json::to_string_pretty(&pattern_document(patterns)).expect("serializable");
    s.push('\n');
    s
}

/// Reads a pattern document. Causality is not re-checked: documents may come
/// from miners that do not apply the filter.
pub fn parse_patterns(text: &str) -> Result<PatternSet, FormatError> {
    let doc: PatternDocument = serde_json::from_str(text)?;
    let mut out = PatternSet::new();
    for (index, entry) in doc.patterns.into_iter().enumerate() {
        let err = |reason: String| FormatError::Pattern { index, reason };
        let origin = Origin::from_label(&entry.set)
            .ok_or_else(|| err(format!("unknown set {:?}", entry.set)))?;
        let messages = entry
            .messages
            .iter()
            .map(|t| t.parse::<Message>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| err(e.to_string()))?;
        if entry.length != messages.len() {
            return Err(err(format!(
                "length {} does not match {} messages",
                entry.length,
                messages.len()
            )));
        }
        let mut p =
            Pattern::new(messages, origin, Causality::Off).map_err(|e| err(e.to_string()))?;
        if let Some(prev) = out.take(&p) {
            p.origin = prev.origin.union(p.origin);
        }
        out.insert(p);
    }
    Ok(out)
}
