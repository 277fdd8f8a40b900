//! Judging mined patterns against ground truth.
//!
//! A pattern is valid when some ground-truth sequence orders every pair of its
//! messages that both sequences contain the same way. Recall only credits
//! patterns that match a ground-truth sequence exactly.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use crate::flow::GroundTruth;
use crate::model::{Message, Pattern};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("ground truth is empty")]
    EmptyGroundTruth,
}

/// Index of the first ground-truth sequence witnessing validity, if any.
pub fn witness(pattern: &[Message], gt: &GroundTruth) -> Option<usize> {
    gt.sequences().iter().position(|truth| {
        let pos: HashMap<&Message, usize> = truth.iter().enumerate().map(|(i, m)| (m, i)).collect();
        pattern.iter().enumerate().all(|(i, a)| {
            pattern[i + 1..].iter().all(|b| match (pos.get(a), pos.get(b)) {
                (Some(pa), Some(pb)) => pa < pb,
                _ => true,
            })
        })
    })
}

pub fn is_valid(pattern: &[Message], gt: &GroundTruth) -> bool {
    witness(pattern, gt).is_some()
}

/// Valid fraction of the mined patterns; `None` when nothing was mined.
pub fn precision<'a>(mined: impl IntoIterator<Item = &'a Pattern>, gt: &GroundTruth) -> Option<f64> {
    let (mut total, mut valid) = (0usize, 0usize);
    for p in mined {
        total += 1;
        valid += usize::from(is_valid(p.messages(), gt));
    }
    (total > 0).then(|| valid as f64 / total as f64)
}

/// Fraction of ground-truth sequences mined exactly.
pub fn recall<'a>(mined: impl IntoIterator<Item = &'a Pattern>, gt: &GroundTruth) -> Result<f64, EvalError> {
    if gt.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    let matched: std::collections::HashSet<&[Message]> = mined
        .into_iter()
        .map(Pattern::messages)
        .filter(|m| gt.contains(m))
        .collect();
    Ok(matched.len() as f64 / gt.len() as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LengthCounts {
    pub valid: usize,
    pub invalid: usize,
}

pub fn length_histogram<'a>(
    mined: impl IntoIterator<Item = &'a Pattern>,
    gt: &GroundTruth,
) -> BTreeMap<usize, LengthCounts> {
    let mut hist: BTreeMap<usize, LengthCounts> = BTreeMap::new();
    for p in mined {
        let entry = hist.entry(p.len()).or_default();
        if is_valid(p.messages(), gt) {
            entry.valid += 1;
        } else {
            entry.invalid += 1;
        }
    }
    hist
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub messages: Vec<String>,
    pub set: String,
    pub length: usize,
    pub valid: bool,
    /// The ground-truth sequence that makes the pattern valid.
    pub witness: Option<Vec<String>>,
    pub ground_truth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub patterns: usize,
    pub ground_truth: usize,
    pub valid: usize,
    pub precision: Option<f64>,
    pub recall: f64,
    pub length_histogram: BTreeMap<usize, LengthCounts>,
    pub gt_matched: Vec<Vec<String>>,
    pub verdicts: Vec<Verdict>,
}

fn tokens(seq: &[Message]) -> Vec<String> {
    seq.iter().map(Message::canonical).collect()
}

pub fn evaluate<'a>(
    mined: impl IntoIterator<Item = &'a Pattern>,
    gt: &GroundTruth,
) -> Result<EvalReport, EvalError> {
    if gt.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    let mined: Vec<&Pattern> = mined.into_iter().collect();
    let verdicts: Vec<Verdict> = mined
        .iter()
        .map(|p| {
            let w = witness(p.messages(), gt);
            Verdict {
                messages: p.tokens(),
                set: p.origin.label().to_string(),
                length: p.len(),
                valid: w.is_some(),
                witness: w.map(|i| tokens(&gt.sequences()[i])),
                ground_truth: gt.contains(p.messages()),
            }
        })
        .collect();
    let valid = verdicts.iter().filter(|v| v.valid).count();
    let gt_matched: Vec<Vec<String>> = gt
        .sequences()
        .iter()
        .filter(|s| mined.iter().any(|p| p.messages() == s.as_slice()))
        .map(|s| tokens(s))
        .collect();
    Ok(EvalReport {
        patterns: mined.len(),
        ground_truth: gt.len(),
        valid,
        precision: (!mined.is_empty()).then(|| valid as f64 / mined.len() as f64),
        recall: gt_matched.len() as f64 / gt.len() as f64,
        length_histogram: length_histogram(mined.iter().copied(), gt),
        gt_matched,
        verdicts,
    })
}

fn percent(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{:.2}%", v * 100.0))
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    /// Plain-text table: pattern count, precision and recall, followed by the
    /// valid/invalid breakdown per length.
    pub fn summary(&self, tool: &str) -> String {
        let mut out = String::new();
        writeln!(out, "{:<12} {:>10} {:>10} {:>10}", "Tool", "#Patterns", "Precision", "Recall").unwrap();
        writeln!(
            out,
            "{:<12} {:>10} {:>10} {:>10}",
            tool,
            self.patterns,
            percent(self.precision),
            percent(Some(self.recall))
        )
        .unwrap();
        if !self.length_histogram.is_empty() {
            out.push('\n');
            let mut header = format!("{:<8}", "Length");
            let mut valid = format!("{:<8}", "V");
            let mut invalid = format!("{:<8}", "IV");
            for (len, c) in &self.length_histogram {
                write!(header, "{len:>6}").unwrap();
                write!(valid, "{:>6}", c.valid).unwrap();
                write!(invalid, "{:>6}", c.invalid).unwrap();
            }
            write!(header, "{:>8}{:>6}", "Total", "GT").unwrap();
            write!(valid, "{:>8}{:>6}", self.valid, self.gt_matched.len()).unwrap();
            write!(invalid, "{:>8}", self.patterns - self.valid).unwrap();
            writeln!(out, "{header}\n{valid}\n{invalid}").unwrap();
        }
        out
    }
}
