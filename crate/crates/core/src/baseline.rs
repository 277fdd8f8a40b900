//! Alternating-pattern reference miner.
//!
//! A pair (A, B) qualifies when, in every trace, the messages A and B taken
//! alone read `ABAB...AB` (possibly empty), and the pair shows up somewhere.
//! Pairs are then combined into the longest sequences whose every ordered pair
//! qualified.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{Causality, Message, Origin, Pattern, PatternSet, TraceSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaselineError {
    #[error("trace {trace}: step {step} holds {count} messages; the alternating miner needs one per step")]
    ConcurrentStep { trace: String, step: usize, count: usize },
}

/// `a` and `b` hold strictly increasing positions of the two messages.
fn alternates(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).enumerate().all(|(k, (&pa, &pb))| {
            pa < pb && a.get(k + 1).is_none_or(|&next| pb < next)
        })
}

pub fn mine_alternating(traces: &TraceSet) -> Result<PatternSet, BaselineError> {
    let alphabet: Vec<Message> = traces.alphabet().into_iter().collect();
    let ids: BTreeMap<&Message, usize> = alphabet.iter().enumerate().map(|(i, m)| (m, i)).collect();

    let mut positions: Vec<Vec<Vec<usize>>> = Vec::with_capacity(traces.len());
    for t in traces.iter() {
        let mut per_msg = vec![Vec::new(); alphabet.len()];
        for (i, step) in t.steps().iter().enumerate() {
            if step.len() != 1 {
                return Err(BaselineError::ConcurrentStep {
                    trace: t.id.clone(),
                    step: i,
                    count: step.len(),
                });
            }
            let m = &step.instances()[0].message;
            per_msg[ids[m]].push(i);
        }
        positions.push(per_msg);
    }

    let n = alphabet.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
        .filter(|&(a, b)| {
            let mut seen = false;
            for per_msg in &positions {
                if !alternates(&per_msg[a], &per_msg[b]) {
                    return false;
                }
                seen |= !per_msg[a].is_empty();
            }
            seen
        })
        .collect();

    Ok(pairs
        .into_iter()
        .map(|(a, b)| {
            Pattern::new(vec![alphabet[a].clone(), alphabet[b].clone()], Origin::Both, Causality::Off)
                .expect("distinct messages")
        })
        .collect())
}

/// Maximal sequences whose every ordered pair is one of `pairs`. Sequences
/// contained as a subsequence in a longer one are dropped.
pub fn chain_alternating(pairs: &PatternSet) -> PatternSet {
    let related: HashSet<(&Message, &Message)> = pairs
        .iter()
        .filter(|p| p.len() == 2)
        .map(|p| (p.first(), p.last()))
        .collect();
    let nodes: BTreeSet<&Message> = related.iter().flat_map(|&(a, b)| [a, b]).collect();
    let nodes: Vec<&Message> = nodes.into_iter().collect();

    let mut out = PatternSet::new();
    let mut seq: Vec<&Message> = Vec::new();
    for &start in &nodes {
        seq.push(start);
        extend(&mut seq, &nodes, &related, &mut out);
        seq.pop();
    }
    out
}

fn fits<'a>(seq: &[&'a Message], at: usize, e: &'a Message, related: &HashSet<(&'a Message, &'a Message)>) -> bool {
    !seq.contains(&e)
        && seq[..at].iter().all(|&s| related.contains(&(s, e)))
        && seq[at..].iter().all(|&s| related.contains(&(e, s)))
}

fn extend<'a>(
    seq: &mut Vec<&'a Message>,
    nodes: &[&'a Message],
    related: &HashSet<(&'a Message, &'a Message)>,
    out: &mut PatternSet,
) {
    let len = seq.len();
    let mut grew = false;
    for &e in nodes {
        if !fits(seq, len, e, related) {
            continue;
        }
        grew = true;
        // Skip extensions that leave room for a message in between; the
        // longer chain containing it is visited on another branch.
        let gap = nodes.iter().any(|&f| {
            f != e && fits(seq, len, f, related) && related.contains(&(f, e))
        });
        if gap {
            continue;
        }
        seq.push(e);
        extend(seq, nodes, related, out);
        seq.pop();
    }
    if grew || len < 2 {
        return;
    }
    let maximal = nodes
        .iter()
        .all(|&f| (0..len).all(|at| !fits(seq, at, f, related)));
    if maximal {
        let msgs = seq.iter().map(|&m| m.clone()).collect();
        out.insert(Pattern::new(msgs, Origin::Both, Causality::Off).expect("distinct messages"));
    }
}

/// Mining followed by chaining.
pub fn baseline(traces: &TraceSet) -> Result<PatternSet, BaselineError> {
    Ok(chain_alternating(&mine_alternating(traces)?))
}
