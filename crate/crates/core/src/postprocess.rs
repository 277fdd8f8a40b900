//! Redundancy removal and the final merge of C and R.

use std::collections::HashSet;

use crate::model::{Message, PatternSet};

/// Drops every pattern that is a contiguous prefix or suffix of another one
/// in the same set. General subsequences are kept.
pub fn remove_redundant(patterns: &PatternSet) -> PatternSet {
    let mut covered: HashSet<&[Message]> = HashSet::new();
    for p in patterns {
        let msgs = p.messages();
        for k in 2..msgs.len() {
            covered.insert(&msgs[..k]);
            covered.insert(&msgs[msgs.len() - k..]);
        }
    }
    patterns
        .iter()
        .filter(|p| !covered.contains(p.messages()))
        .cloned()
        .collect()
}

/// Union of the two sets; a sequence found in both is kept once with origin
/// `Both`.
pub fn merge(forward: &PatternSet, backward: &PatternSet) -> PatternSet {
    let mut out = forward.clone();
    for p in backward {
        match out.take(p) {
            Some(mut prev) => {
                prev.origin = prev.origin.union(p.origin);
                out.insert(prev);
            }
            None => {
                out.insert(p.clone());
            }
        }
    }
    out
}
