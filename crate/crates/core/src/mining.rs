//! Supports, forward/backward confidence and binary pattern mining.
//!
//! Occurrences of a sequence are counted as the maximum number of pairwise
//! instance-disjoint embeddings whose step indices strictly increase. Two
//! instances in the same step are never ordered, so they never form an
//! occurrence together.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::model::{Causality, Message, Origin, Pattern, PatternSet, SupportStats, Trace, TraceSet};

pub type MsgId = u32;

pub fn causal(m1: &Message, m2: &Message, cfg: Causality) -> bool {
    cfg.holds(m1, m2)
}

/// Number of instances of `m` in `t`, counting repeats within a step.
pub fn supp_message(m: &Message, t: &Trace) -> usize {
    t.steps().iter().map(|s| s.count(m)).sum()
}

/// Maximum number of disjoint occurrences of `seq` in `t`.
pub fn supp_seq(seq: &[Message], t: &Trace) -> usize {
    if seq.is_empty() {
        return 0;
    }
    let distinct = seq.iter().collect::<std::collections::HashSet<_>>().len() == seq.len();
    if distinct {
        supp_seq_distinct(seq, t)
    } else {
        supp_seq_repeated(seq, t)
    }
}

/// Scans the steps once, keeping the number of partial occurrences per stage.
/// Instances of a step first extend the most advanced partial occurrences that
/// were opened in earlier steps, then open new ones. Only optimal when every
/// message of `seq` is different.
fn supp_seq_distinct(seq: &[Message], t: &Trace) -> usize {
    let n = seq.len();
    // waiting[k]: partial occurrences that matched seq[..k] and wait for seq[k].
    let mut waiting = vec![0usize; n];
    let mut done = 0;
    for step in t.steps() {
        let snapshot = waiting.clone();
        for k in (1..n).rev() {
            let used = step.count(&seq[k]).min(snapshot[k]);
            waiting[k] -= used;
            if k + 1 == n {
                done += used;
            } else {
                waiting[k + 1] += used;
            }
        }
        let starts = step.count(&seq[0]);
        if n == 1 {
            done += starts;
        } else {
            waiting[1] += starts;
        }
    }
    done
}

/// Exact search for sequences that repeat a message. One instance may then
/// either close an occurrence or open another, and neither choice is always
/// right, so every step keeps the Pareto frontier of stage counts. A state
/// with at least as many partial occurrences at or beyond every stage is never
/// worse.
fn supp_seq_repeated(seq: &[Message], t: &Trace) -> usize {
    let n = seq.len();
    // state[k] for k in 1..n: partials waiting for seq[k]; state[n]: completed.
    let mut frontier: Vec<Vec<usize>> = vec![vec![0; n + 1]];
    let mut groups: Vec<(&Message, Vec<usize>)> = Vec::new();
    for (k, m) in seq.iter().enumerate() {
        match groups.iter_mut().find(|(g, _)| *g == m) {
            Some((_, stages)) => stages.push(k),
            None => groups.push((m, vec![k])),
        }
    }
    for step in t.steps() {
        let mut next = Vec::new();
        for state in &frontier {
            let mut partial = vec![state.clone()];
            for (m, stages) in &groups {
                let available = step.count(m);
                let mut grown = Vec::new();
                for base in &partial {
                    allocate(base, state, stages, available, &mut grown);
                }
                partial = pareto(grown);
            }
            next.extend(partial);
        }
        frontier = pareto(next);
    }
    frontier.iter().map(|s| s[n]).max().unwrap_or(0)
}

/// Every way of spending up to `available` instances of one message on the
/// stages it can fill. Advances are bounded by `before`, the counts at the
/// start of the step, so one occurrence never takes two instances of a step.
fn allocate(base: &[usize], before: &[usize], stages: &[usize], available: usize, out: &mut Vec<Vec<usize>>) {
    let Some((&k, rest)) = stages.split_first() else {
        out.push(base.to_vec());
        return;
    };
    let cap = if k == 0 { available } else { available.min(before[k]) };
    for used in 0..=cap {
        let mut s = base.to_vec();
        if k > 0 {
            s[k] -= used;
        }
        s[k + 1] += used;
        allocate(&s, before, rest, available - used, out);
    }
}

fn dominates(a: &[usize], b: &[usize]) -> bool {
    let (mut sa, mut sb) = (0, 0);
    for k in (1..a.len()).rev() {
        sa += a[k];
        sb += b[k];
        if sa < sb {
            return false;
        }
    }
    true
}

fn pareto(mut states: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    states.sort_unstable_by(|a, b| b.cmp(a));
    states.dedup();
    let mut kept: Vec<Vec<usize>> = Vec::new();
    for s in states {
        if !kept.iter().any(|k| dominates(k, &s)) {
            kept.retain(|k| !dominates(&s, k));
            kept.push(s);
        }
    }
    kept
}

fn concat(s1: &[Message], s2: &[Message]) -> Vec<Message> {
    s1.iter().chain(s2).cloned().collect()
}

/// `supp(s1#s2) / supp(s1)`, undefined when `s1` never occurs.
pub fn conf_f(s1: &[Message], s2: &[Message], t: &Trace) -> Option<f64> {
    let base = supp_seq(s1, t);
    (base > 0).then(|| supp_seq(&concat(s1, s2), t) as f64 / base as f64)
}

/// `supp(s1#s2) / supp(s2)`, undefined when `s2` never occurs.
pub fn conf_b(s1: &[Message], s2: &[Message], t: &Trace) -> Option<f64> {
    let base = supp_seq(s2, t);
    (base > 0).then(|| supp_seq(&concat(s1, s2), t) as f64 / base as f64)
}

/// Confidence aggregated over a trace set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SetConfidence {
    /// Traces where the confidence is defined.
    pub defined: usize,
    /// Sum of per-trace confidences over the defined traces.
    ratio_sum: f64,
    /// Joint support equals the denominator support on every defined trace,
    /// and at least one trace is defined.
    pub exact: bool,
    pub joint: u64,
    pub base: u64,
}

impl SetConfidence {
    fn empty() -> Self {
        SetConfidence {
            exact: true,
            ..Default::default()
        }
    }

    fn add(&mut self, joint: usize, base: usize) {
        if base == 0 {
            return;
        }
        self.defined += 1;
        self.ratio_sum += joint as f64 / base as f64;
        self.exact &= joint == base;
        self.joint += joint as u64;
        self.base += base as u64;
    }

    fn finish(mut self) -> Self {
        self.exact &= self.defined > 0;
        self
    }

    /// Average of the per-trace confidences where defined.
    pub fn mean(&self) -> Option<f64> {
        (self.defined > 0).then(|| self.ratio_sum / self.defined as f64)
    }

    /// Exactness at threshold 1, averaged comparison below it.
    pub fn meets(&self, threshold: f64) -> bool {
        if threshold >= 1.0 {
            self.exact
        } else {
            self.mean().is_some_and(|m| m >= threshold)
        }
    }

    pub fn stats(&self) -> SupportStats {
        SupportStats {
            traces: self.defined,
            joint: self.joint,
            base: self.base,
            confidence: self.mean().unwrap_or(0.0),
        }
    }
}

pub fn conf_f_set(s1: &[Message], s2: &[Message], traces: &TraceSet) -> SetConfidence {
    let joint_seq = concat(s1, s2);
    let mut acc = SetConfidence::empty();
    for t in traces.iter() {
        let base = supp_seq(s1, t);
        if base > 0 {
            acc.add(supp_seq(&joint_seq, t), base);
        }
    }
    acc.finish()
}

pub fn conf_b_set(s1: &[Message], s2: &[Message], traces: &TraceSet) -> SetConfidence {
    let joint_seq = concat(s1, s2);
    let mut acc = SetConfidence::empty();
    for t in traces.iter() {
        let base = supp_seq(s2, t);
        if base > 0 {
            acc.add(supp_seq(&joint_seq, t), base);
        }
    }
    acc.finish()
}

/// Per-trace occurrence table: the sorted step positions of every message.
#[derive(Debug, Clone, Default)]
pub struct SupportTable {
    positions: HashMap<MsgId, Vec<u32>>,
}

impl SupportTable {
    pub fn count(&self, m: MsgId) -> usize {
        self.positions.get(&m).map_or(0, Vec::len)
    }

    /// Disjoint ordered occurrences of `(a, b)`.
    pub fn pair(&self, a: MsgId, b: MsgId) -> usize {
        let (Some(pa), Some(pb)) = (self.positions.get(&a), self.positions.get(&b)) else {
            return 0;
        };
        if a == b {
            return self_pair(pa);
        }
        // Every b takes one unmatched a from a strictly earlier step.
        let mut matched = 0;
        let mut pending = 0;
        let mut i = 0;
        for &sb in pb {
            while i < pa.len() && pa[i] < sb {
                pending += 1;
                i += 1;
            }
            if pending > 0 {
                pending -= 1;
                matched += 1;
            }
        }
        matched
    }
}

fn self_pair(pos: &[u32]) -> usize {
    let mut waiting = 0;
    let mut done = 0;
    let mut i = 0;
    while i < pos.len() {
        let step = pos[i];
        let mut n = 0;
        while i < pos.len() && pos[i] == step {
            n += 1;
            i += 1;
        }
        let used = n.min(waiting);
        done += used;
        waiting = waiting - used + (n - used);
    }
    done
}

/// Interned alphabet plus per-trace support tables for a whole trace set.
#[derive(Debug, Clone, Default)]
pub struct SupportIndex {
    messages: Vec<Message>,
    ids: HashMap<Message, MsgId>,
    tables: Vec<SupportTable>,
    /// Trace indices in which each message occurs.
    occurs_in: Vec<Vec<u32>>,
}

impl SupportIndex {
    pub fn build(traces: &TraceSet) -> Self {
        let messages: Vec<Message> = traces.alphabet().into_iter().collect();
        let ids: HashMap<Message, MsgId> = messages
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i as MsgId))
            .collect();
        let tables: Vec<SupportTable> = traces
            .traces
            .par_iter()
            .map(|t| {
                let mut positions: HashMap<MsgId, Vec<u32>> = HashMap::new();
                for (step, inst) in t.instances() {
                    positions.entry(ids[&inst.message]).or_default().push(step as u32);
                }
                SupportTable { positions }
            })
            .collect();
        let mut occurs_in = vec![Vec::new(); messages.len()];
        for (ti, table) in tables.iter().enumerate() {
            for &m in table.positions.keys() {
                occurs_in[m as usize].push(ti as u32);
            }
        }
        for v in &mut occurs_in {
            v.sort_unstable();
        }
        SupportIndex {
            messages,
            ids,
            tables,
            occurs_in,
        }
    }

    /// The alphabet in canonical order; a message's position is its id.
    pub fn alphabet(&self) -> &[Message] {
        &self.messages
    }

    pub fn id(&self, m: &Message) -> Option<MsgId> {
        self.ids.get(m).copied()
    }

    pub fn message(&self, id: MsgId) -> &Message {
        &self.messages[id as usize]
    }

    pub fn num_traces(&self) -> usize {
        self.tables.len()
    }

    pub fn table(&self, trace: usize) -> &SupportTable {
        &self.tables[trace]
    }

    /// Forward confidence of `b` given `a` over all traces.
    pub fn forward(&self, a: MsgId, b: MsgId) -> SetConfidence {
        let mut acc = SetConfidence::empty();
        for &t in &self.occurs_in[a as usize] {
            let table = &self.tables[t as usize];
            acc.add(table.pair(a, b), table.count(a));
        }
        acc.finish()
    }

    /// Backward confidence of `a` given `b` over all traces.
    pub fn backward(&self, a: MsgId, b: MsgId) -> SetConfidence {
        let mut acc = SetConfidence::empty();
        for &t in &self.occurs_in[b as usize] {
            let table = &self.tables[t as usize];
            acc.add(table.pair(a, b), table.count(b));
        }
        acc.finish()
    }

    pub fn forward_of(&self, a: &Message, b: &Message) -> SetConfidence {
        match (self.id(a), self.id(b)) {
            (Some(a), Some(b)) => self.forward(a, b),
            (Some(a), None) => {
                // b never occurs: defined wherever a occurs, always 0.
                let mut acc = SetConfidence::empty();
                for &t in &self.occurs_in[a as usize] {
                    acc.add(0, self.tables[t as usize].count(a));
                }
                acc.finish()
            }
            _ => SetConfidence::empty().finish(),
        }
    }

    pub fn backward_of(&self, a: &Message, b: &Message) -> SetConfidence {
        match (self.id(a), self.id(b)) {
            (Some(a), Some(b)) => self.backward(a, b),
            (None, Some(b)) => {
                let mut acc = SetConfidence::empty();
                for &t in &self.occurs_in[b as usize] {
                    acc.add(0, self.tables[t as usize].count(b));
                }
                acc.finish()
            }
            _ => SetConfidence::empty().finish(),
        }
    }

    /// Ordered pairs of distinct alphabet messages admitted by `causality`.
    pub fn causal_pairs(&self, causality: Causality) -> Vec<(MsgId, MsgId)> {
        let mut by_src: BTreeMap<&str, Vec<MsgId>> = BTreeMap::new();
        let mut by_dest: BTreeMap<&str, Vec<MsgId>> = BTreeMap::new();
        for (i, m) in self.messages.iter().enumerate() {
            by_src.entry(m.src()).or_default().push(i as MsgId);
            by_dest.entry(m.dest()).or_default().push(i as MsgId);
        }
        let all: Vec<MsgId> = (0..self.messages.len() as MsgId).collect();
        let mut pairs = Vec::new();
        for (i, m) in self.messages.iter().enumerate() {
            let a = i as MsgId;
            let partners: &[MsgId] = match causality {
                Causality::DestSrc => by_src.get(m.dest()).map_or(&[], Vec::as_slice),
                Causality::SrcDestLiteral => by_dest.get(m.src()).map_or(&[], Vec::as_slice),
                Causality::Off => &all,
            };
            pairs.extend(partners.iter().filter(|&&b| b != a).map(|&b| (a, b)));
        }
        pairs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiningConfig {
    /// 1.0 demands exact per-trace equality of supports; lower values compare
    /// the averaged confidence instead.
    pub threshold: f64,
    pub causality: Causality,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            threshold: 1.0,
            causality: Causality::DestSrc,
        }
    }
}

/// Binary patterns qualified by forward (C) and backward (R) confidence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BinaryPatterns {
    pub forward: PatternSet,
    pub backward: PatternSet,
}

pub fn mine_binary_indexed(index: &SupportIndex, cfg: &MiningConfig) -> BinaryPatterns {
    let verdicts: Vec<(MsgId, MsgId, Option<SetConfidence>, Option<SetConfidence>)> = index
        .causal_pairs(cfg.causality)
        .into_par_iter()
        .map(|(a, b)| {
            let f = index.forward(a, b);
            let r = index.backward(a, b);
            (a, b, f.meets(cfg.threshold).then_some(f), r.meets(cfg.threshold).then_some(r))
        })
        .collect();

    let mut out = BinaryPatterns::default();
    for (a, b, f, r) in verdicts {
        let pair = || vec![index.message(a).clone(), index.message(b).clone()];
        if let Some(f) = f {
            let mut p = Pattern::from_trusted(pair(), Origin::Forward);
            p.support = Some(f.stats());
            out.forward.insert(p);
        }
        if let Some(r) = r {
            let mut p = Pattern::from_trusted(pair(), Origin::Backward);
            p.support = Some(r.stats());
            out.backward.insert(p);
        }
    }
    out
}

pub fn mine_binary(traces: &TraceSet, cfg: &MiningConfig) -> BinaryPatterns {
    mine_binary_indexed(&SupportIndex::build(traces), cfg)
}
