//! Growing binary patterns into longer ones.
//!
//! Two patterns chain when a proper suffix of the first equals a proper prefix
//! of the second; the result is the first followed by the rest of the second.
//! Four rules decide which sets feed each other:
//!
//! 1. C x C into C, repeated to a fixpoint.
//! 2. R x R into R, repeated to a fixpoint.
//! 3. R x C into R, one pass.
//! 4. C x R, one pass, admitted into C (resp. R) only when the forward
//!    (resp. backward) confidence from the first to the last message holds on
//!    the traces.
//!
//! Patterns hold unique messages, so their length is bounded by the alphabet
//! and every fixpoint loop terminates.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::mining::SupportIndex;
use crate::model::{Message, Origin, Pattern, PatternSet};

/// Longest non-empty proper suffix of `p1` that is also a proper prefix of
/// `p2`, spliced. `None` without overlap or when the splice repeats a message.
fn splice<T: PartialEq + Clone>(p1: &[T], p2: &[T]) -> Option<Vec<T>> {
    if p1.len() < 2 || p2.len() < 2 {
        return None;
    }
    let longest = (p1.len() - 1).min(p2.len() - 1);
    let len = (1..=longest)
        .rev()
        .find(|&len| p1[p1.len() - len..] == p2[..len])?;
    let tail = &p2[len..];
    if tail.iter().any(|x| p1.contains(x)) {
        return None;
    }
    let mut out = p1.to_vec();
    out.extend_from_slice(tail);
    Some(out)
}

pub fn chain_overlap(p1: &Pattern, p2: &Pattern) -> Option<Vec<Message>> {
    splice(p1.messages(), p2.messages())
}

type Seq = Vec<u32>;

/// Interns the messages of a few pattern sets so the rules can work on ids.
struct Codec {
    messages: Vec<Message>,
    ids: HashMap<Message, u32>,
}

impl Codec {
    fn new(sets: &[&PatternSet]) -> Self {
        let messages: Vec<Message> = sets
            .iter()
            .flat_map(|s| s.iter())
            .flat_map(|p| p.messages())
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let ids = messages
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i as u32))
            .collect();
        Codec { messages, ids }
    }

    fn encode(&self, p: &Pattern) -> Seq {
        p.messages().iter().map(|m| self.ids[m]).collect()
    }

    fn encode_set(&self, set: &PatternSet) -> Vec<Seq> {
        set.iter().map(|p| self.encode(p)).collect()
    }

    fn decode(&self, seq: &[u32], origin: Origin) -> Pattern {
        Pattern::from_trusted(
            seq.iter().map(|&i| self.messages[i as usize].clone()).collect(),
            origin,
        )
    }
}

/// Growable set of sequences indexed for overlap lookups.
#[derive(Default)]
struct Pool {
    seqs: Vec<Seq>,
    members: HashSet<Seq>,
    /// First message -> sequences starting with it.
    by_first: HashMap<u32, Vec<usize>>,
    /// Message -> sequences containing it at a position other than the first.
    by_inner: HashMap<u32, Vec<usize>>,
}

impl Pool {
    fn from_seqs(seqs: impl IntoIterator<Item = Seq>) -> Self {
        let mut pool = Pool::default();
        for s in seqs {
            pool.insert(s);
        }
        pool
    }

    fn insert(&mut self, seq: Seq) -> bool {
        if self.members.contains(&seq) {
            return false;
        }
        let idx = self.seqs.len();
        self.by_first.entry(seq[0]).or_default().push(idx);
        for &m in &seq[1..] {
            self.by_inner.entry(m).or_default().push(idx);
        }
        self.members.insert(seq.clone());
        self.seqs.push(seq);
        true
    }

    /// Sequences that can follow `p1`: they start with a non-first message of it.
    fn successors_of<'a>(&'a self, p1: &'a [u32]) -> impl Iterator<Item = &'a Seq> + 'a {
        p1[1..]
            .iter()
            .filter_map(|m| self.by_first.get(m))
            .flatten()
            .map(|&i| &self.seqs[i])
    }

    /// Sequences that can precede `p2`: they contain its first message past
    /// their own first position.
    fn predecessors_of<'a>(&'a self, p2: &'a [u32]) -> impl Iterator<Item = &'a Seq> + 'a {
        self.by_inner
            .get(&p2[0])
            .into_iter()
            .flatten()
            .map(|&i| &self.seqs[i])
    }

    /// Least fixpoint of adding every splice of two members. Each round only
    /// looks at pairs involving something added in the previous round.
    fn close(&mut self) {
        let mut frontier: Vec<usize> = (0..self.seqs.len()).collect();
        while !frontier.is_empty() {
            let mut found: BTreeSet<Seq> = BTreeSet::new();
            for &i in &frontier {
                let fresh = &self.seqs[i];
                for p2 in self.successors_of(fresh) {
                    found.extend(splice(fresh, p2));
                }
                for p1 in self.predecessors_of(fresh) {
                    found.extend(splice(p1, fresh));
                }
            }
            frontier.clear();
            for s in found {
                let idx = self.seqs.len();
                if self.insert(s) {
                    frontier.push(idx);
                }
            }
        }
    }

    /// One pass over `left x self`.
    fn splices_after(&self, left: &[Seq]) -> BTreeSet<Seq> {
        let mut found = BTreeSet::new();
        for p1 in left {
            for p2 in self.successors_of(p1) {
                found.extend(splice(p1, p2));
            }
        }
        found
    }
}

fn with_additions(
    codec: &Codec,
    base: &PatternSet,
    added: impl IntoIterator<Item = Seq>,
    origin: Origin,
) -> PatternSet {
    let mut out = base.clone();
    for s in added {
        let p = codec.decode(&s, origin);
        if !out.contains(&p) {
            out.insert(p);
        }
    }
    out
}

fn close_set(set: &PatternSet, origin: Origin) -> PatternSet {
    let codec = Codec::new(&[set]);
    let mut pool = Pool::from_seqs(codec.encode_set(set));
    let before = pool.seqs.len();
    pool.close();
    let added = pool.seqs.split_off(before);
    with_additions(&codec, set, added, origin)
}

/// Rule 1: closes C under chaining.
pub fn chain_rule1(forward: &PatternSet) -> PatternSet {
    close_set(forward, Origin::Forward)
}

/// Rule 2: closes R under chaining.
pub fn chain_rule2(backward: &PatternSet) -> PatternSet {
    close_set(backward, Origin::Backward)
}

/// Rule 3: every R pattern followed by a C pattern joins R. Unchained R
/// patterns are kept.
pub fn chain_rule3(backward: &PatternSet, forward: &PatternSet) -> PatternSet {
    let codec = Codec::new(&[backward, forward]);
    let c_pool = Pool::from_seqs(codec.encode_set(forward));
    let found = c_pool.splices_after(&codec.encode_set(backward));
    with_additions(&codec, backward, found, Origin::Backward)
}

/// Rule 4: chains a C pattern into an R pattern when the traces show that the
/// first message always leads to the last one (added to C) or the last one is
/// always preceded by the first one (added to R). `threshold` below 1 switches
/// to averaged confidence.
pub fn chain_rule4_evidence(
    forward: &PatternSet,
    backward: &PatternSet,
    index: &SupportIndex,
    threshold: f64,
) -> (PatternSet, PatternSet) {
    let codec = Codec::new(&[forward, backward]);
    let r_pool = Pool::from_seqs(codec.encode_set(backward));
    let candidates = r_pool.splices_after(&codec.encode_set(forward));

    let mut new_c = forward.clone();
    let mut new_r = backward.clone();
    for seq in candidates {
        let p = codec.decode(&seq, Origin::Forward);
        let (first, last) = (p.first(), p.last());
        let f = index.forward_of(first, last);
        if f.meets(threshold) && !new_c.contains(&p) {
            let mut p = p.clone();
            p.support = Some(f.stats());
            new_c.insert(p);
        }
        let b = index.backward_of(first, last);
        if b.meets(threshold) && !new_r.contains(&p) {
            let mut p = codec.decode(&seq, Origin::Backward);
            p.support = Some(b.stats());
            new_r.insert(p);
        }
    }
    (new_c, new_r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    pub evidence_rule: bool,
    pub threshold: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            evidence_rule: true,
            threshold: 1.0,
        }
    }
}

/// Rules 1 to 4 in order. Rule 4 sees the sets produced by rules 1 to 3.
pub fn chain_all(
    forward: &PatternSet,
    backward: &PatternSet,
    index: &SupportIndex,
    cfg: &ChainConfig,
) -> (PatternSet, PatternSet) {
    let c = chain_rule1(forward);
    let r = chain_rule2(backward);
    let r = chain_rule3(&r, &c);
    if cfg.evidence_rule {
        chain_rule4_evidence(&c, &r, index, cfg.threshold)
    } else {
        (c, r)
    }
}
