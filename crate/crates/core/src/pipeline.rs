//! The whole miner: slice, mine binary patterns, chain, prune, merge.

use crate::chaining::{chain_all, ChainConfig};
use crate::mining::{mine_binary_indexed, MiningConfig, SupportIndex};
use crate::model::{Causality, PatternSet, TraceSet};
use crate::postprocess::{merge, remove_redundant};
use crate::slicing::{slice_set, NoAddressPolicy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinerConfig {
    pub slice: bool,
    pub noaddr_policy: NoAddressPolicy,
    pub threshold: f64,
    pub causality: Causality,
    pub evidence_rule: bool,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            slice: true,
            noaddr_policy: NoAddressPolicy::OwnSlice,
            threshold: 1.0,
            causality: Causality::DestSrc,
            evidence_rule: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MiningOutcome {
    /// Binary patterns before chaining.
    pub binary_forward: PatternSet,
    pub binary_backward: PatternSet,
    /// Chained and pruned.
    pub forward: PatternSet,
    pub backward: PatternSet,
    pub merged: PatternSet,
    /// Number of traces actually mined (after slicing).
    pub traces_mined: usize,
}

pub fn mine(traces: &TraceSet, cfg: &MinerConfig) -> MiningOutcome {
    let sliced;
    let input = if cfg.slice {
        sliced = slice_set(traces, cfg.noaddr_policy);
        &sliced
    } else {
        traces
    };
    let index = SupportIndex::build(input);
    let binary = mine_binary_indexed(
        &index,
        &MiningConfig {
            threshold: cfg.threshold,
            causality: cfg.causality,
        },
    );
    let (c, r) = chain_all(
        &binary.forward,
        &binary.backward,
        &index,
        &ChainConfig {
            evidence_rule: cfg.evidence_rule,
            threshold: cfg.threshold,
        },
    );
    let forward = remove_redundant(&c);
    let backward = remove_redundant(&r);
    let merged = merge(&forward, &backward);
    MiningOutcome {
        binary_forward: binary.forward,
        binary_backward: binary.backward,
        forward,
        backward,
        merged,
        traces_mined: input.len(),
    }
}
