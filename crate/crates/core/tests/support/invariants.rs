//! Property checks shared by the proptest suites and the acceptance runner.
//! Each `check_*` runs `cases` random cases and reports the first failure
//! after shrinking.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use flowminer::baseline::{chain_alternating, mine_alternating};
use flowminer::chaining::{chain_all, chain_rule1, chain_rule2, chain_rule3, ChainConfig};
use flowminer::eval::{is_valid, precision, recall};
use flowminer::format::{parse_traces, write_traces};
use flowminer::generate::{generate, AddressMode, GenConfig, GenMode};
use flowminer::mining::{conf_b, conf_b_set, conf_f, conf_f_set, mine_binary, supp_seq, MiningConfig, SupportIndex};
use flowminer::postprocess::remove_redundant;
use flowminer::slicing::{slice_trace, NoAddressPolicy};
use flowminer::{
    mine, parse_flow_spec, Causality, GroundTruth, Message, MessageInstance, MinerConfig, Origin, Pattern,
    PatternSet, SliceKey, Step, Trace, TraceSet,
};

use super::oracle::dag_paths;

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

const COMPONENTS: [&str; 3] = ["A", "B", "C"];

/// Small message pool over three components so causal pairs are common.
fn messages() -> Vec<Message> {
    let mut out = Vec::new();
    for src in COMPONENTS {
        for dest in COMPONENTS {
            out.push(Message::new(src, dest, "x").unwrap());
        }
    }
    out
}

fn arb_message(pool: usize) -> impl Strategy<Value = Message> {
    (0..pool).prop_map(|i| messages()[i].clone())
}

fn arb_instance(pool: usize, addressed: bool) -> impl Strategy<Value = MessageInstance> {
    let addr = if addressed {
        prop::option::weighted(0.8, 0u64..3).boxed()
    } else {
        Just(None).boxed()
    };
    (arb_message(pool), addr).prop_map(|(message, address)| MessageInstance {
        message,
        address,
        instance_id: None,
    })
}

fn arb_trace(pool: usize, max_steps: usize, max_width: usize, addressed: bool) -> impl Strategy<Value = Trace> {
    vec(vec(arb_instance(pool, addressed), 1..=max_width), 0..=max_steps)
        .prop_map(|steps| Trace::new("t", steps.into_iter().map(|s| Step::new(s).unwrap()).collect()))
}

fn arb_traces(pool: usize) -> impl Strategy<Value = TraceSet> {
    vec(arb_trace(pool, 8, 2, false), 1..4).prop_map(|ts| {
        ts.into_iter()
            .enumerate()
            .map(|(i, mut t)| {
                t.id = format!("t{i}");
                t
            })
            .collect()
    })
}

/// Patterns over plain command names, no causality constraint.
fn arb_pattern_set(alphabet: usize, max_len: usize) -> impl Strategy<Value = PatternSet> {
    vec(
        Just((0..alphabet).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_flat_map(move |perm| (Just(perm), 2..=max_len.min(alphabet))),
        0..6,
    )
    .prop_map(|items| {
        items
            .into_iter()
            .map(|(perm, len)| {
                let msgs = perm[..len].iter().map(|i| Message::new("N", "N", format!("m{i}")).unwrap()).collect();
                Pattern::new(msgs, Origin::Forward, Causality::Off).unwrap()
            })
            .collect()
    })
}

fn pairs_of(p: &Pattern) -> impl Iterator<Item = (Message, Message)> + '_ {
    p.messages().windows(2).map(|w| (w[0].clone(), w[1].clone()))
}

fn pair_set(set: &PatternSet) -> HashSet<(Message, Message)> {
    set.iter().flat_map(pairs_of).collect()
}

fn unique(p: &Pattern) -> bool {
    p.messages().iter().collect::<HashSet<_>>().len() == p.len()
}

fn origins(set: &PatternSet, origin: Origin) -> PatternSet {
    set.iter()
        .map(|p| {
            let mut p = p.clone();
            p.origin = origin;
            p
        })
        .collect()
}

// Mining.

pub fn check_confidence_bounds(cases: u32) -> Result<(), String> {
    let seq = || vec(arb_message(5), 1..3);
    run(cases, (arb_trace(5, 10, 3, false), seq(), seq()), |(t, s1, s2)| {
        for c in [conf_f(&s1, &s2, &t), conf_b(&s1, &s2, &t)].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&c), "confidence {c}");
        }
        let joint: Vec<Message> = s1.iter().chain(&s2).cloned().collect();
        let j = supp_seq(&joint, &t);
        prop_assert!(j <= supp_seq(&s1, &t).min(supp_seq(&s2, &t)));
        Ok(())
    })
}

pub fn check_indexed_route_agrees(cases: u32) -> Result<(), String> {
    run(cases, arb_traces(6), |ts| {
        let index = SupportIndex::build(&ts);
        for a in index.alphabet() {
            for b in index.alphabet() {
                if a == b {
                    continue;
                }
                let (fi, fg) = (index.forward_of(a, b), conf_f_set(std::slice::from_ref(a), std::slice::from_ref(b), &ts));
                let (bi, bg) = (index.backward_of(a, b), conf_b_set(std::slice::from_ref(a), std::slice::from_ref(b), &ts));
                prop_assert_eq!(fi.meets(1.0), fg.meets(1.0), "forward {} {}", a, b);
                prop_assert_eq!(bi.meets(1.0), bg.meets(1.0), "backward {} {}", a, b);
                prop_assert_eq!(fi.mean(), fg.mean());
                prop_assert_eq!(bi.mean(), bg.mean());
            }
        }
        Ok(())
    })
}

pub fn check_duplication_invariance(cases: u32) -> Result<(), String> {
    run(cases, arb_traces(6), |ts| {
        let doubled: TraceSet = ts.iter().chain(ts.iter()).cloned().collect();
        let cfg = MiningConfig::default();
        let (once, twice) = (mine_binary(&ts, &cfg), mine_binary(&doubled, &cfg));
        prop_assert_eq!(&once.forward, &twice.forward);
        prop_assert_eq!(&once.backward, &twice.backward);
        let mcfg = MinerConfig::default();
        prop_assert_eq!(mine(&ts, &mcfg).merged, mine(&doubled, &mcfg).merged);
        Ok(())
    })
}

pub fn check_order_independence(cases: u32) -> Result<(), String> {
    let strategy = arb_traces(6).prop_flat_map(|ts| {
        let n = ts.len();
        (Just(ts), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    });
    run(cases, strategy, |(ts, perm)| {
        let shuffled: TraceSet = perm.iter().map(|&i| ts.traces[i].clone()).collect();
        let cfg = MiningConfig::default();
        prop_assert_eq!(mine_binary(&ts, &cfg), mine_binary(&shuffled, &cfg));
        Ok(())
    })
}

pub fn check_binary_patterns_are_causal(cases: u32) -> Result<(), String> {
    let causality = prop_oneof![Just(Causality::DestSrc), Just(Causality::SrcDestLiteral)];
    run(cases, (arb_traces(9), causality), |(ts, causality)| {
        let out = mine_binary(&ts, &MiningConfig { threshold: 1.0, causality });
        for p in out.forward.iter().chain(&out.backward) {
            prop_assert!(causality.holds(p.first(), p.last()), "{} under {:?}", p, causality);
        }
        Ok(())
    })
}

// Chaining and post-processing.

pub fn check_chaining_construction(cases: u32) -> Result<(), String> {
    run(cases, (arb_pattern_set(5, 3), arb_pattern_set(5, 3)), |(c, r)| {
        let r = origins(&r, Origin::Backward);
        let c_pairs = pair_set(&c);
        let r_pairs = pair_set(&r);
        let c1 = chain_rule1(&c);
        let r2 = chain_rule2(&r);
        let r3 = chain_rule3(&r2, &c1);
        prop_assert!(c.is_subset(&c1) && r.is_subset(&r2) && r2.is_subset(&r3));
        for p in &c1 {
            prop_assert!(unique(p) && p.len() <= 5);
            prop_assert!(pairs_of(p).all(|pr| c_pairs.contains(&pr)), "rule 1 invented a pair in {}", p);
        }
        for p in &r2 {
            prop_assert!(unique(p) && pairs_of(p).all(|pr| r_pairs.contains(&pr)));
        }
        for p in &r3 {
            prop_assert!(unique(p));
            prop_assert!(pairs_of(p).all(|pr| c_pairs.contains(&pr) || r_pairs.contains(&pr)));
        }
        // Closure: nothing left to chain.
        prop_assert_eq!(chain_rule1(&c1), c1);
        Ok(())
    })
}

pub fn check_evidence_rule(cases: u32) -> Result<(), String> {
    run(cases, arb_traces(9), |ts| {
        let index = SupportIndex::build(&ts);
        let bin = mine_binary(&ts, &MiningConfig::default());
        let c1 = chain_rule1(&bin.forward);
        let r3 = chain_rule3(&chain_rule2(&bin.backward), &c1);
        let (c, r) = chain_all(&bin.forward, &bin.backward, &index, &ChainConfig::default());
        for p in c.difference(&c1) {
            let f = index.forward_of(p.first(), p.last());
            prop_assert!(f.exact, "{} added without exact forward evidence", p);
            prop_assert!(p.support.is_some());
        }
        for p in r.difference(&r3) {
            prop_assert!(index.backward_of(p.first(), p.last()).exact, "{}", p);
        }
        Ok(())
    })
}

pub fn check_redundancy_removal(cases: u32) -> Result<(), String> {
    run(cases, arb_pattern_set(5, 4), |set| {
        let once = remove_redundant(&set);
        prop_assert_eq!(&remove_redundant(&once), &once);
        prop_assert!(once.is_subset(&set));
        for a in &once {
            for b in &once {
                let (x, y) = (a.messages(), b.messages());
                if x.len() < y.len() {
                    prop_assert!(!y.starts_with(x) && !y.ends_with(x), "{} inside {}", a, b);
                }
            }
        }
        Ok(())
    })
}

pub fn check_pattern_construction(cases: u32) -> Result<(), String> {
    run(cases, vec(arb_message(9), 0..5), |msgs| {
        let built = Pattern::new(msgs.clone(), Origin::Forward, Causality::DestSrc);
        let distinct = msgs.iter().collect::<HashSet<_>>().len() == msgs.len();
        let causal = msgs.windows(2).all(|w| w[0].dest() == w[1].src());
        prop_assert_eq!(built.is_ok(), msgs.len() >= 2 && distinct && causal);
        Ok(())
    })
}

// Trace handling.

pub fn check_slicing_partition(cases: u32) -> Result<(), String> {
    let policy = prop_oneof![
        Just(NoAddressPolicy::OwnSlice),
        Just(NoAddressPolicy::Drop),
        Just(NoAddressPolicy::Broadcast)
    ];
    run(cases, (arb_trace(5, 10, 3, true), policy), |(t, policy)| {
        let slices = slice_trace(&t, policy);
        let key = |i: &MessageInstance| (i.message.clone(), i.address);
        let mut expected: BTreeMap<(Message, Option<u64>), usize> = BTreeMap::new();
        for (_, i) in t.instances() {
            if i.address.is_some() || policy == NoAddressPolicy::OwnSlice {
                *expected.entry(key(i)).or_default() += 1;
            }
        }
        let mut got: BTreeMap<(Message, Option<u64>), usize> = BTreeMap::new();
        for (k, sub) in &slices {
            for (_, i) in sub.instances() {
                if *k != SliceKey::NoAddress && i.address.is_none() {
                    continue; // broadcast copies
                }
                *got.entry(key(i)).or_default() += 1;
            }
        }
        if policy != NoAddressPolicy::Broadcast || t.instances().all(|(_, i)| i.address.is_some()) {
            prop_assert_eq!(&got, &expected);
        }
        // No new ordering: a pair ordered in a slice is ordered the same way
        // somewhere in the original.
        for sub in slices.values() {
            for (si, a) in sub.instances() {
                for (sj, b) in sub.instances() {
                    if si < sj {
                        let seen = t
                            .instances()
                            .any(|(ti, x)| x.message == a.message && t.instances().any(|(tj, y)| tj > ti && y.message == b.message));
                        prop_assert!(seen, "{} before {} not in original", a.message, b.message);
                    }
                }
            }
        }
        Ok(())
    })
}

pub fn check_trace_round_trip(cases: u32) -> Result<(), String> {
    run(cases, vec(arb_trace(9, 6, 3, true), 1..3), |traces| {
        let ts: TraceSet = traces
            .into_iter()
            .enumerate()
            .map(|(i, mut t)| {
                t.id = format!("t{i}");
                t
            })
            .collect();
        let back = parse_traces(&write_traces(&ts), "x").map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(back.len(), ts.len());
        for (a, b) in ts.iter().zip(back.iter()) {
            prop_assert_eq!(&a.id, &b.id);
            prop_assert_eq!(a.len(), b.len());
            for (sa, sb) in a.steps().iter().zip(b.steps()) {
                let ms = |s: &Step| {
                    let mut v: Vec<(String, Option<u64>)> =
                        s.instances().iter().map(|i| (i.message.canonical(), i.address)).collect();
                    v.sort();
                    v
                };
                prop_assert_eq!(ms(sa), ms(sb));
            }
        }
        Ok(())
    })
}

// Generator.

fn arb_ground_truth() -> impl Strategy<Value = GroundTruth> {
    vec(vec(0usize..6, 1..5), 1..4).prop_map(|seqs| {
        GroundTruth::new(seqs.into_iter().map(|s| {
            let mut seen = BTreeSet::new();
            s.into_iter()
                .filter(|i| seen.insert(*i))
                .map(|i| Message::new("N", "N", format!("g{i}")).unwrap())
                .collect::<Vec<_>>()
        }))
    })
}

pub fn check_generator_projection(cases: u32) -> Result<(), String> {
    let mode = prop_oneof![Just(GenMode::SmNi), Just(GenMode::SmI), Just(GenMode::MmI)];
    let cfg = (mode, 1usize..4, any::<u64>(), 1usize..4, prop::option::of(1usize..5), any::<bool>()).prop_map(
        |(mode, instances, seed, max_batch, max_active, addressed)| GenConfig {
            mode,
            instances_per_pattern: instances,
            num_traces: 2,
            seed,
            max_batch,
            max_active,
            address_mode: if addressed { AddressMode::PerInstance } else { AddressMode::None },
            address_pool: 64,
        },
    );
    run(cases, (arb_ground_truth(), cfg), |(gt, cfg)| {
        let (ts, meta) = generate(&gt, &cfg).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(ts.len(), cfg.num_traces);
        let expected_total: usize = gt.sequences().iter().map(Vec::len).sum::<usize>() * cfg.instances_per_pattern;
        for (t, tm) in ts.iter().zip(&meta.traces) {
            prop_assert_eq!(t.num_instances(), expected_total);
            if cfg.mode != GenMode::MmI {
                prop_assert!(t.steps().iter().all(|s| s.len() == 1));
            }
            let mut projected: BTreeMap<&str, (Vec<Message>, Vec<usize>, HashSet<Option<u64>>)> = BTreeMap::new();
            for (step, i) in t.instances() {
                let e = projected.entry(i.instance_id.as_deref().unwrap()).or_default();
                e.0.push(i.message.clone());
                e.1.push(step);
                e.2.insert(i.address);
            }
            prop_assert_eq!(projected.len(), tm.instances.len());
            for im in &tm.instances {
                let (msgs, steps, addrs) = &projected[im.instance_id.as_str()];
                prop_assert_eq!(msgs, &gt.sequences()[im.pattern]);
                prop_assert!(steps.windows(2).all(|w| w[0] < w[1]));
                prop_assert_eq!(addrs.len(), 1);
            }
        }
        let (again, _) = generate(&gt, &cfg).unwrap();
        prop_assert_eq!(write_traces(&again), write_traces(&ts));
        Ok(())
    })
}

// Flows and evaluation.

/// Random DAG: node i > 0 gets an edge from some earlier node, plus extras.
fn arb_dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<usize>)> {
    (2usize..8).prop_flat_map(|n| {
        let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
        let extra = vec((0..n, 0..n), 0..n);
        let term = vec(any::<bool>(), n);
        (Just(n), parents, extra, term).prop_map(|(n, parents, extra, term)| {
            let mut edges: Vec<(usize, usize)> = parents.into_iter().enumerate().map(|(i, p)| (p, i + 1)).collect();
            for (a, b) in extra {
                if a < b && !edges.contains(&(a, b)) {
                    edges.push((a, b));
                }
            }
            let terminals: Vec<usize> = (0..n)
                .filter(|&v| term[v] || !edges.iter().any(|&(a, _)| a == v))
                .collect();
            (n, edges, terminals)
        })
    })
}

pub fn check_path_enumeration(cases: u32) -> Result<(), String> {
    run(cases, arb_dag(), |(n, edges, terminals)| {
        let msgs: Vec<String> = (0..n)
            .map(|i| format!(r#""n{i}": {{"src": "N", "dest": "N", "cmd": "c{i}"}}"#))
            .collect();
        let edge_json: Vec<String> = edges.iter().map(|(a, b)| format!(r#"["n{a}", "n{b}"]"#)).collect();
        let term_json: Vec<String> = terminals.iter().map(|t| format!(r#""n{t}""#)).collect();
        let doc = format!(
            r#"{{"name": "f", "messages": {{{}}}, "edges": [{}], "start": "n0", "terminals": [{}]}}"#,
            msgs.join(", "),
            edge_json.join(", "),
            term_json.join(", ")
        );
        let flow = parse_flow_spec(&doc).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let gt = flowminer::enumerate_paths(&flow);
        let mut succ = vec![Vec::new(); n];
        for &(a, b) in &edges {
            succ[a].push(b);
        }
        let brute = dag_paths(&succ, 0, &terminals);
        prop_assert_eq!(gt.len(), brute.len());
        let edge_msgs: HashSet<(String, String)> =
            edges.iter().map(|(a, b)| (format!("c{a}"), format!("c{b}"))).collect();
        for s in gt.sequences() {
            for w in s.windows(2) {
                prop_assert!(edge_msgs.contains(&(w[0].cmd().to_string(), w[1].cmd().to_string())));
            }
        }
        Ok(())
    })
}

pub fn check_evaluation_properties(cases: u32) -> Result<(), String> {
    let strategy = (arb_ground_truth(), vec(any::<bool>(), 6), arb_pattern_set(6, 4));
    run(cases, strategy, |(gt, mask, extra)| {
        let gt_patterns: Vec<Pattern> = gt
            .sequences()
            .iter()
            .filter(|s| s.len() >= 2)
            .map(|s| Pattern::new(s.clone(), Origin::Forward, Causality::Off).unwrap())
            .collect();
        if !gt_patterns.is_empty() {
            prop_assert_eq!(precision(&gt_patterns, &gt), Some(1.0));
        }
        for s in gt.sequences() {
            let sub: Vec<Message> = s.iter().zip(&mask).filter(|(_, &k)| k).map(|(m, _)| m.clone()).collect();
            prop_assert!(is_valid(&sub, &gt));
        }
        let base: PatternSet = gt_patterns.iter().cloned().collect();
        let more: PatternSet = base.union(&extra).cloned().collect();
        let (r0, r1) = (recall(&base, &gt).unwrap(), recall(&more, &gt).unwrap());
        prop_assert!(r1 <= 1.0 && r0 <= r1);
        let valid_only: Vec<&Pattern> = more.iter().filter(|p| is_valid(p.messages(), &gt)).collect();
        if let (Some(p_all), Some(p_valid)) = (precision(&more, &gt), precision(valid_only.iter().copied(), &gt)) {
            prop_assert!(p_valid >= p_all);
        }
        Ok(())
    })
}

// Baseline.

fn arb_single_message_traces() -> impl Strategy<Value = TraceSet> {
    vec(vec(arb_message(4), 0..10), 1..4).prop_map(|ts| {
        ts.into_iter()
            .enumerate()
            .map(|(i, msgs)| Trace::from_sequence(format!("t{i}"), &msgs))
            .collect()
    })
}

pub fn check_baseline_chains(cases: u32) -> Result<(), String> {
    run(cases, arb_single_message_traces(), |ts| {
        let pairs = mine_alternating(&ts).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let mined: HashSet<(Message, Message)> = pairs.iter().map(|p| (p.first().clone(), p.last().clone())).collect();
        let chained = chain_alternating(&pairs);
        for p in &chained {
            let m = p.messages();
            for i in 0..m.len() {
                for j in i + 1..m.len() {
                    prop_assert!(mined.contains(&(m[i].clone(), m[j].clone())));
                }
            }
        }
        // Every mined pair is covered by some chain.
        for (a, b) in &mined {
            let covered = chained.iter().any(|p| {
                let m = p.messages();
                let (ia, ib) = (m.iter().position(|x| x == a), m.iter().position(|x| x == b));
                matches!((ia, ib), (Some(x), Some(y)) if x < y)
            });
            prop_assert!(covered, "pair ({}, {}) lost by chaining", a, b);
        }
        Ok(())
    })
}

/// Every check with its name, in a fixed order.
pub fn all() -> Vec<(&'static str, fn(u32) -> Result<(), String>)> {
    vec![
        ("confidence bounds", check_confidence_bounds),
        ("indexed and direct confidence agree", check_indexed_route_agrees),
        ("trace duplication invariance", check_duplication_invariance),
        ("trace order independence", check_order_independence),
        ("binary patterns are causal", check_binary_patterns_are_causal),
        ("chaining termination and construction", check_chaining_construction),
        ("evidence rule records exact confidence", check_evidence_rule),
        ("redundancy removal idempotence", check_redundancy_removal),
        ("pattern construction validation", check_pattern_construction),
        ("slicing partition and order", check_slicing_partition),
        ("trace file round trip", check_trace_round_trip),
        ("generator projection", check_generator_projection),
        ("path enumeration vs brute force", check_path_enumeration),
        ("evaluation monotonicity", check_evaluation_properties),
        ("baseline chain pairs", check_baseline_chains),
    ]
}
