//! Synthetic traces from a ground-truth pattern pool.
//!
//! Each trace executes a fresh pool holding `instances_per_pattern` instances of
//! every ground-truth sequence. The mode decides how instances are interleaved:
//!
//! * `SmNi`: one instance at a time, one message per step.
//! * `SmI`: one message per step, taken from a uniformly chosen unfinished
//!   instance.
//! * `MmI`: each step takes the next message of `k` distinct unfinished
//!   instances, `k` uniform in `1..=min(max_batch, unfinished)`.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::GroundTruth;
use crate::model::{MessageInstance, Step, Trace, TraceSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("ground truth is empty")]
    EmptyGroundTruth,
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("address pool of {pool} exhausted: instance {instance} starts while all addresses are in use")]
    PoolExhausted { pool: usize, instance: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GenMode {
    #[default]
    SmNi,
    SmI,
    MmI,
}

impl FromStr for GenMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "sm-ni" => Ok(GenMode::SmNi),
            "sm-i" => Ok(GenMode::SmI),
            "mm-i" => Ok(GenMode::MmI),
            _ => Err(format!("unknown generator mode {s:?}")),
        }
    }
}

impl fmt::Display for GenMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GenMode::SmNi => "sm-ni",
            GenMode::SmI => "sm-i",
            GenMode::MmI => "mm-i",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AddressMode {
    #[default]
    None,
    PerInstance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub mode: GenMode,
    pub instances_per_pattern: usize,
    pub num_traces: usize,
    pub seed: u64,
    /// Largest step size in `MmI`.
    pub max_batch: usize,
    /// Cap on simultaneously started, unfinished instances. `None` admits the
    /// whole pool at once.
    pub max_active: Option<usize>,
    pub address_mode: AddressMode,
    pub address_pool: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            mode: GenMode::SmNi,
            instances_per_pattern: 10,
            num_traces: 100,
            seed: 0,
            max_batch: 4,
            max_active: None,
            address_mode: AddressMode::None,
            address_pool: 64,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |what: &str| Err(GenError::InvalidConfig(what.to_string()));
        if self.instances_per_pattern == 0 {
            return bad("instances_per_pattern must be at least 1");
        }
        if self.num_traces == 0 {
            return bad("num_traces must be at least 1");
        }
        if self.max_batch == 0 {
            return bad("max_batch must be at least 1");
        }
        if self.max_active == Some(0) {
            return bad("max_active must be at least 1");
        }
        if self.address_mode == AddressMode::PerInstance && self.address_pool == 0 {
            return bad("address_pool must be at least 1");
        }
        Ok(())
    }
}

/// First and last step touched by one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpan {
    pub start: usize,
    pub end: usize,
}

/// Lowest free address per instance. An address is free again for an instance
/// starting strictly after its previous holder's last step.
pub fn assign_addresses(spans: &[InstanceSpan], pool: usize) -> Result<Vec<u64>, GenError> {
    let mut order: Vec<usize> = (0..spans.len()).collect();
    order.sort_by_key(|&i| (spans[i].start, i));
    // busy_until[a] is the last step of the instance holding address a.
    let mut busy_until: Vec<Option<usize>> = vec![None; pool];
    let mut out = vec![0u64; spans.len()];
    for i in order {
        let span = spans[i];
        let slot = busy_until
            .iter()
            .position(|b| b.is_none_or(|end| end < span.start))
            .ok_or(GenError::PoolExhausted { pool, instance: i })?;
        busy_until[slot] = Some(span.end);
        out[i] = slot as u64;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub instance_id: String,
    /// Index into the ground-truth sequence list.
    pub pattern: usize,
    pub span: InstanceSpan,
    pub address: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub id: String,
    pub steps: usize,
    /// Executed instance count per ground-truth sequence.
    pub executed: Vec<usize>,
    pub instances: Vec<InstanceMeta>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenMetadata {
    pub config: GenConfig,
    pub ground_truth: Vec<Vec<String>>,
    pub traces: Vec<TraceMeta>,
}

impl GenMetadata {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }
}

/// Step plan: per step, the (instance, position) pairs emitted.
type Plan = Vec<Vec<(usize, usize)>>;

fn plan_trace(lengths: &[usize], cfg: &GenConfig, rng: &mut ChaCha8Rng) -> Plan {
    let mut queue: Vec<usize> = (0..lengths.len()).collect();
    queue.shuffle(rng);
    let mut queue = queue.into_iter();
    let cap = match cfg.mode {
        GenMode::SmNi => 1,
        _ => cfg.max_active.unwrap_or(usize::MAX),
    };

    let mut next = vec![0usize; lengths.len()];
    let mut active: Vec<usize> = Vec::new();
    let mut plan = Plan::new();
    loop {
        while active.len() < cap {
            match queue.next() {
                Some(i) => active.push(i),
                None => break,
            }
        }
        if active.is_empty() {
            return plan;
        }
        let chosen: Vec<usize> = match cfg.mode {
            GenMode::SmNi => vec![0],
            GenMode::SmI => vec![rng.gen_range(0..active.len())],
            GenMode::MmI => {
                let k = rng.gen_range(1..=cfg.max_batch.min(active.len()));
                let mut picked = index::sample(rng, active.len(), k).into_vec();
                picked.sort_unstable();
                picked
            }
        };
        let mut step = Vec::with_capacity(chosen.len());
        for &slot in &chosen {
            let inst = active[slot];
            step.push((inst, next[inst]));
            next[inst] += 1;
        }
        plan.push(step);
        // Remove finished instances back to front so slots stay valid.
        for &slot in chosen.iter().rev() {
            if next[active[slot]] == lengths[active[slot]] {
                active.remove(slot);
            }
        }
    }
}

fn generate_one(gt: &GroundTruth, cfg: &GenConfig, trace_index: usize) -> Result<(Trace, TraceMeta), GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ trace_index as u64);
    let seqs = gt.sequences();
    let pool: Vec<(usize, usize)> = (0..seqs.len())
        .flat_map(|p| (0..cfg.instances_per_pattern).map(move |k| (p, k)))
        .collect();
    let lengths: Vec<usize> = pool.iter().map(|&(p, _)| seqs[p].len()).collect();
    let plan = plan_trace(&lengths, cfg, &mut rng);

    let mut spans = vec![InstanceSpan { start: usize::MAX, end: 0 }; pool.len()];
    for (s, step) in plan.iter().enumerate() {
        for &(inst, _) in step {
            spans[inst].start = spans[inst].start.min(s);
            spans[inst].end = s;
        }
    }
    let addresses = match cfg.address_mode {
        AddressMode::None => None,
        AddressMode::PerInstance => Some(assign_addresses(&spans, cfg.address_pool)?),
    };

    let id = format!("trace{trace_index}");
    let ids: Vec<String> = pool.iter().map(|(p, k)| format!("p{p}.{k}")).collect();
    let steps = plan
        .iter()
        .map(|step| {
            let instances = step
                .iter()
                .map(|&(inst, pos)| MessageInstance {
                    message: seqs[pool[inst].0][pos].clone(),
                    address: addresses.as_ref().map(|a| a[inst]),
                    instance_id: Some(ids[inst].clone()),
                })
                .collect();
            Step::new(instances).expect("planned steps are non-empty")
        })
        .collect();

    let meta = TraceMeta {
        id: id.clone(),
        steps: plan.len(),
        executed: vec![cfg.instances_per_pattern; seqs.len()],
        instances: pool
            .iter()
            .enumerate()
            .map(|(i, &(p, _))| InstanceMeta {
                instance_id: ids[i].clone(),
                pattern: p,
                span: spans[i],
                address: addresses.as_ref().map(|a| a[i]),
            })
            .collect(),
    };
    Ok((Trace::new(id, steps), meta))
}

/// Deterministic for a given seed; trace `i` draws from `seed ^ i`.
pub fn generate(gt: &GroundTruth, cfg: &GenConfig) -> Result<(TraceSet, GenMetadata), GenError> {
    if gt.is_empty() {
        return Err(GenError::EmptyGroundTruth);
    }
    cfg.validate()?;
    let results: Vec<(Trace, TraceMeta)> = (0..cfg.num_traces)
        .into_par_iter()
        .map(|i| generate_one(gt, cfg, i))
        .collect::<Result<_, _>>()?;
    let (traces, metas): (Vec<Trace>, Vec<TraceMeta>) = results.into_iter().unzip();
    let metadata = GenMetadata {
        config: *cfg,
        ground_truth: gt
            .sequences()
            .iter()
            .map(|s| s.iter().map(|m| m.canonical()).collect())
            .collect(),
        traces: metas,
    };
    Ok((TraceSet::new(traces), metadata))
}
