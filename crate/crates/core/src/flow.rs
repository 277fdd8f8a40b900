//! Flow specifications and the ground-truth paths they define.
//!
//! A flow is a DAG over messages with a single start message. Out-edges of a
//! node are alternatives: one execution of the flow follows exactly one of them,
//! so every start-to-terminal path is one ground-truth sequence.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Message, ModelError};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("malformed flow document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("flow {flow}: {source}")]
    Message {
        flow: String,
        #[source]
        source: ModelError,
    },
    #[error("flow {flow}: unknown message id {id:?}")]
    UnknownMessage { flow: String, id: String },
    #[error("flow {flow}: messages {first:?} and {second:?} are the same triple")]
    DuplicateMessage {
        flow: String,
        first: String,
        second: String,
    },
    #[error("flow {flow}: cycle detected")]
    Cycle { flow: String },
    #[error("flow {flow}: message {id:?} is unreachable from the start message")]
    Unreachable { flow: String, id: String },
    #[error("flow {flow}: message {id:?} has no successors but is not a terminal")]
    DeadEnd { flow: String, id: String },
    #[error("flow {flow}: no messages")]
    Empty { flow: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MessageDoc {
    pub src: String,
    pub dest: String,
    pub cmd: String,
}

/// On-disk shape of one flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowDoc {
    pub name: String,
    pub messages: IndexMap<String, MessageDoc>,
    pub edges: Vec<(String, String)>,
    pub start: String,
    pub terminals: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LibraryDoc {
    flows: Vec<FlowDoc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum AnyDoc {
    Library(LibraryDoc),
    Single(FlowDoc),
}

/// A validated flow: acyclic, everything reachable from `start`, and every
/// maximal path ends in a terminal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSpec {
    pub name: String,
    ids: Vec<String>,
    messages: Vec<Message>,
    edges: Vec<(usize, usize)>,
    start: usize,
    terminals: BTreeSet<usize>,
}

impl FlowSpec {
    pub fn from_doc(doc: &FlowDoc) -> Result<Self, FlowError> {
        let flow = doc.name.clone();
        if doc.messages.is_empty() {
            return Err(FlowError::Empty { flow });
        }

        let mut ids = Vec::with_capacity(doc.messages.len());
        let mut messages = Vec::with_capacity(doc.messages.len());
        let mut by_triple: HashMap<Message, &str> = HashMap::new();
        for (id, m) in &doc.messages {
            let message = Message::new(&m.src, &m.dest, &m.cmd).map_err(|source| {
                FlowError::Message {
                    flow: flow.clone(),
                    source,
                }
            })?;
            if let Some(first) = by_triple.insert(message.clone(), id) {
                return Err(FlowError::DuplicateMessage {
                    flow,
                    first: first.to_string(),
                    second: id.clone(),
                });
            }
            ids.push(id.clone());
            messages.push(message);
        }

        let index = |id: &str| {
            doc.messages
                .get_index_of(id)
                .ok_or_else(|| FlowError::UnknownMessage {
                    flow: flow.clone(),
                    id: id.to_string(),
                })
        };

        let mut edges = Vec::with_capacity(doc.edges.len());
        let mut seen = HashSet::new();
        for (from, to) in &doc.edges {
            let e = (index(from)?, index(to)?);
            if seen.insert(e) {
                edges.push(e);
            }
        }
        let start = index(&doc.start)?;
        let terminals = doc
            .terminals
            .iter()
            .map(|t| index(t))
            .collect::<Result<BTreeSet<_>, _>>()?;

        let spec = FlowSpec {
            name: doc.name.clone(),
            ids,
            messages,
            edges,
            start,
            terminals,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), FlowError> {
        let n = self.messages.len();
        let succ = self.successors();

        // Kahn's algorithm.
        let mut indegree = vec![0usize; n];
        for &(_, to) in &self.edges {
            indegree[to] += 1;
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut visited = 0;
        while let Some(v) = queue.pop_front() {
            visited += 1;
            for &w in &succ[v] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        if visited != n {
            return Err(FlowError::Cycle {
                flow: self.name.clone(),
            });
        }

        let mut reached = vec![false; n];
        let mut stack = vec![self.start];
        reached[self.start] = true;
        while let Some(v) = stack.pop() {
            for &w in &succ[v] {
                if !reached[w] {
                    reached[w] = true;
                    stack.push(w);
                }
            }
        }
        if let Some(i) = reached.iter().position(|r| !r) {
            return Err(FlowError::Unreachable {
                flow: self.name.clone(),
                id: self.ids[i].clone(),
            });
        }

        if let Some(i) = (0..n).find(|&i| succ[i].is_empty() && !self.terminals.contains(&i)) {
            return Err(FlowError::DeadEnd {
                flow: self.name.clone(),
                id: self.ids[i].clone(),
            });
        }
        Ok(())
    }

    /// Out-neighbours of every message, in edge insertion order.
    fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.messages.len()];
        for &(from, to) in &self.edges {
            succ[from].push(to);
        }
        succ
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn terminals(&self) -> &BTreeSet<usize> {
        &self.terminals
    }

    pub fn message(&self, index: usize) -> &Message {
        &self.messages[index]
    }

    /// All start-to-terminal paths as index sequences. Out-edges are explored
    /// in insertion order, so the result is deterministic.
    pub fn paths(&self) -> Vec<Vec<usize>> {
        let succ = self.successors();
        let mut out = Vec::new();
        let mut path = vec![self.start];
        self.walk(&succ, &mut path, &mut out);
        out
    }

    fn walk(&self, succ: &[Vec<usize>], path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let v = *path.last().expect("path is never empty");
        if self.terminals.contains(&v) {
            out.push(path.clone());
        }
        for &w in &succ[v] {
            path.push(w);
            self.walk(succ, path, out);
            path.pop();
        }
    }
}

pub fn parse_flow_spec(text: &str) -> Result<FlowSpec, FlowError> {
    let doc: FlowDoc = serde_json::from_str(text)?;
    FlowSpec::from_doc(&doc)
}

/// Parses a library (`{"flows": [...]}`) or a single flow document.
pub fn parse_flow_library(text: &str) -> Result<Vec<FlowSpec>, FlowError> {
    match serde_json::from_str::<AnyDoc>(text) {
        Ok(AnyDoc::Library(lib)) => lib.flows.iter().map(FlowSpec::from_doc).collect(),
        Ok(AnyDoc::Single(doc)) => Ok(vec![FlowSpec::from_doc(&doc)?]),
        // Re-parse as a library to surface a useful serde message.
        Err(_) => {
            let lib: LibraryDoc = serde_json::from_str(text)?;
            lib.flows.iter().map(FlowSpec::from_doc).collect()
        }
    }
}

/// The set of ground-truth sequences, one per path of each flow.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    sequences: Vec<Vec<Message>>,
    members: HashSet<Vec<Message>>,
}

impl GroundTruth {
    pub fn new(sequences: impl IntoIterator<Item = Vec<Message>>) -> Self {
        let mut gt = GroundTruth::default();
        for s in sequences {
            gt.insert(s);
        }
        gt
    }

    pub fn from_flows(flows: &[FlowSpec]) -> Self {
        GroundTruth::new(flows.iter().flat_map(|f| enumerate_paths(f).sequences))
    }

    fn insert(&mut self, seq: Vec<Message>) -> bool {
        if self.members.insert(seq.clone()) {
            self.sequences.push(seq);
            true
        } else {
            false
        }
    }

    pub fn sequences(&self) -> &[Vec<Message>] {
        &self.sequences
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn contains(&self, seq: &[Message]) -> bool {
        self.members.contains(seq)
    }
}

pub fn enumerate_paths(flow: &FlowSpec) -> GroundTruth {
    GroundTruth::new(
        flow.paths()
            .into_iter()
            .map(|p| p.into_iter().map(|i| flow.messages[i].clone()).collect()),
    )
}
