//! Brute-force reference implementations shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashMap;

use flowminer::mining::supp_seq;
use flowminer::{Message, MessageInstance, Step, Trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Maximum number of disjoint occurrences of `seq` in `trace`, found by trying
/// every way of assigning each message instance: unused, opening a new
/// occurrence, or extending any compatible open occurrence.
pub fn max_disjoint_occurrences(seq: &[Message], trace: &Trace) -> usize {
    assert!(!seq.is_empty());
    let instances: Vec<(usize, &Message)> = trace.instances().map(|(s, i)| (s, &i.message)).collect();
    let mut memo = HashMap::new();
    search(seq, &instances, 0, Vec::new(), &mut memo)
}

/// `open` holds, per partial occurrence, how many messages it has matched and
/// whether the last match sits in the current step. Earlier steps are all
/// alike for what may follow, which keeps the memo small.
fn search(
    seq: &[Message],
    instances: &[(usize, &Message)],
    at: usize,
    mut open: Vec<(usize, bool)>,
    memo: &mut HashMap<(usize, Vec<(usize, bool)>), usize>,
) -> usize {
    if at == instances.len() {
        return 0;
    }
    let (step, msg) = instances[at];
    if at > 0 && instances[at - 1].0 != step {
        for o in &mut open {
            o.1 = false;
        }
    }
    open.sort_unstable();
    let key = (at, open.clone());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let mut best = search(seq, instances, at + 1, open.clone(), memo);

    if *msg == seq[0] {
        if seq.len() == 1 {
            best = best.max(1 + search(seq, instances, at + 1, open.clone(), memo));
        } else {
            let mut next = open.clone();
            next.push((1, true));
            best = best.max(search(seq, instances, at + 1, next, memo));
        }
    }
    let mut tried = Vec::new();
    for (k, &(stage, here)) in open.iter().enumerate() {
        if here || seq[stage] != *msg || tried.contains(&stage) {
            continue;
        }
        tried.push(stage);
        let mut next = open.clone();
        if stage + 1 == seq.len() {
            next.remove(k);
            best = best.max(1 + search(seq, instances, at + 1, next, memo));
        } else {
            next[k] = (stage + 1, true);
            best = best.max(search(seq, instances, at + 1, next, memo));
        }
    }
    memo.insert(key, best);
    best
}

/// Every root-to-terminal path of a DAG given as adjacency lists, by plain
/// recursion.
pub fn dag_paths(succ: &[Vec<usize>], start: usize, terminals: &[usize]) -> Vec<Vec<usize>> {
    fn walk(succ: &[Vec<usize>], node: usize, terminals: &[usize], path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        path.push(node);
        if terminals.contains(&node) {
            out.push(path.clone());
        }
        for &n in &succ[node] {
            walk(succ, n, terminals, path, out);
        }
        path.pop();
    }
    let mut out = Vec::new();
    walk(succ, start, terminals, &mut Vec::new(), &mut out);
    out
}

fn random_trace(rng: &mut ChaCha8Rng, msgs: &[Message], max_steps: usize, max_width: usize) -> Trace {
    let steps = (0..rng.gen_range(0..=max_steps))
        .map(|_| {
            let width = rng.gen_range(1..=max_width);
            let insts = (0..width)
                .map(|_| MessageInstance::new(msgs[rng.gen_range(0..msgs.len())].clone()))
                .collect();
            Step::new(insts).unwrap()
        })
        .collect();
    Trace::new("t", steps)
}

fn cmds(seq: &[Message]) -> Vec<String> {
    seq.iter().map(|m| m.cmd().to_string()).collect()
}

/// Compares `supp_seq` with the exhaustive search on `cases` random traces of
/// at most 12 steps over at most 4 messages, for sequences of length 1 to 3.
/// Returns one line per disagreement.
pub fn supp_seq_mismatches(seed: u64, cases: usize, max_width: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = Vec::new();
    for case in 0..cases {
        let msgs: Vec<Message> = (0..rng.gen_range(1..=4))
            .map(|i| Message::new("N", "N", format!("e{i}")).unwrap())
            .collect();
        let trace = random_trace(&mut rng, &msgs, 12, max_width);
        let seq: Vec<Message> = (0..rng.gen_range(1..=3))
            .map(|_| msgs[rng.gen_range(0..msgs.len())].clone())
            .collect();
        let fast = supp_seq(&seq, &trace);
        let slow = max_disjoint_occurrences(&seq, &trace);
        if fast != slow {
            let steps: Vec<Vec<String>> = trace
                .steps()
                .iter()
                .map(|s| cmds(&s.messages().cloned().collect::<Vec<_>>()))
                .collect();
            mismatches.push(format!(
                "case {case}: seq {:?} trace {:?} fast {fast} exhaustive {slow}",
                cmds(&seq),
                steps
            ));
        }
    }
    mismatches
}
