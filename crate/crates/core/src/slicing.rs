//! Address-based trace slicing.
//!
//! All instances of one flow instance carry the same address, so instances with
//! different addresses are never correlated. Each trace is split into one
//! sub-trace per address before mining.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::model::{MessageInstance, SliceKey, SliceOrigin, Step, Trace, TraceSet};

/// What happens to instances without an address.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum NoAddressPolicy {
    /// Collected into their own sub-trace.
    #[default]
    OwnSlice,
    /// Copied into every address sub-trace.
    Broadcast,
    Drop,
}

impl FromStr for NoAddressPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "own" | "own-slice" | "own_slice" => Ok(NoAddressPolicy::OwnSlice),
            "broadcast" => Ok(NoAddressPolicy::Broadcast),
            "drop" => Ok(NoAddressPolicy::Drop),
            other => Err(format!("unknown no-address policy {other:?}")),
        }
    }
}

impl fmt::Display for NoAddressPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoAddressPolicy::OwnSlice => "own",
            NoAddressPolicy::Broadcast => "broadcast",
            NoAddressPolicy::Drop => "drop",
        })
    }
}

pub fn slice_trace(trace: &Trace, policy: NoAddressPolicy) -> BTreeMap<SliceKey, Trace> {
    let addresses: BTreeSet<u64> = trace
        .steps()
        .iter()
        .flat_map(|s| s.instances())
        .filter_map(|i| i.address)
        .collect();
    // With nothing to broadcast into, address-less instances keep their own slice.
    let policy = if policy == NoAddressPolicy::Broadcast && addresses.is_empty() {
        NoAddressPolicy::OwnSlice
    } else {
        policy
    };

    let mut slices: BTreeMap<SliceKey, Vec<Step>> = BTreeMap::new();
    for step in trace.steps() {
        let mut groups: BTreeMap<SliceKey, Vec<MessageInstance>> = BTreeMap::new();
        let mut unaddressed = Vec::new();
        for inst in step.instances() {
            match inst.address {
                Some(a) => groups.entry(SliceKey::Address(a)).or_default().push(inst.clone()),
                None => unaddressed.push(inst.clone()),
            }
        }
        match policy {
            NoAddressPolicy::OwnSlice => {
                if !unaddressed.is_empty() {
                    groups.insert(SliceKey::NoAddress, unaddressed);
                }
            }
            NoAddressPolicy::Broadcast => {
                if !unaddressed.is_empty() {
                    for &a in &addresses {
                        groups
                            .entry(SliceKey::Address(a))
                            .or_default()
                            .extend(unaddressed.iter().cloned());
                    }
                }
            }
            NoAddressPolicy::Drop => {}
        }
        for (key, instances) in groups {
            slices
                .entry(key)
                .or_default()
                .push(Step::new(instances).expect("groups are never empty"));
        }
    }

    slices
        .into_iter()
        .map(|(key, steps)| {
            let mut t = Trace::new(format!("{}/{}", trace.id, key), steps);
            t.origin = Some(SliceOrigin {
                trace_id: trace.id.clone(),
                key,
            });
            (key, t)
        })
        .collect()
}

/// Slices every trace; sub-traces keep the input order, then key order.
pub fn slice_set(traces: &TraceSet, policy: NoAddressPolicy) -> TraceSet {
    let sliced: Vec<Vec<Trace>> = traces
        .traces
        .par_iter()
        .map(|t| slice_trace(t, policy).into_values().collect())
        .collect();
    TraceSet::new(sliced.into_iter().flatten().collect())
}
