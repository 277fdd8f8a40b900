//! Messages, traces and patterns shared by every stage of the miner.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid token {0:?}: tokens must be non-empty and must not contain ':', ';', '@', '#' or whitespace")]
    InvalidToken(String),
    #[error("malformed message {0:?}: expected src:dest:cmd")]
    MalformedMessage(String),
    #[error("steps must contain at least one message instance")]
    EmptyStep,
    #[error("step index {index} out of range for a trace of {len} steps")]
    StepOutOfRange { index: usize, len: usize },
    #[error("a pattern needs at least two messages, got {0}")]
    PatternTooShort(usize),
    #[error("message {0} occurs more than once in the pattern")]
    DuplicateMessage(Box<Message>),
    #[error("{0} -> {1} violates structural causality")]
    NotCausal(Box<Message>, Box<Message>),
}

fn check_token(token: &str) -> Result<(), ModelError> {
    let bad = token.is_empty()
        || token
            .chars()
            .any(|c| matches!(c, ':' | ';' | '@' | '#') || c.is_whitespace());
    if bad {
        Err(ModelError::InvalidToken(token.to_string()))
    } else {
        Ok(())
    }
}

/// A static `(src, dest, cmd)` triple. This is the alphabet the miner works over;
/// runtime data such as addresses lives on [`MessageInstance`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    src: String,
    dest: String,
    cmd: String,
}

impl Message {
    pub fn new(
        src: impl Into<String>,
        dest: impl Into<String>,
        cmd: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let (src, dest, cmd) = (src.into(), dest.into(), cmd.into());
        check_token(&src)?;
        check_token(&dest)?;
        check_token(&cmd)?;
        Ok(Message { src, dest, cmd })
    }

    pub fn src(&self) -> &str {
        &self.src
    }

    pub fn dest(&self) -> &str {
        &self.dest
    }

    pub fn cmd(&self) -> &str {
        &self.cmd
    }

    /// `src:dest:cmd`
    pub fn canonical(&self) -> String {
        format!("{}:{}:{}", self.src, self.dest, self.cmd)
    }

    fn rendered_bytes(&self) -> impl Iterator<Item = u8> + '_ {
        self.src
            .bytes()
            .chain(std::iter::once(b':'))
            .chain(self.dest.bytes())
            .chain(std::iter::once(b':'))
            .chain(self.cmd.bytes())
    }
}

// Ordered by canonical rendering, which differs from field-wise ordering
// whenever a token contains bytes below ':'.
impl Ord for Message {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rendered_bytes().cmp(other.rendered_bytes())
    }
}

impl PartialOrd for Message {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.src, self.dest, self.cmd)
    }
}

impl FromStr for Message {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split(':');
        match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(src), Some(dest), Some(cmd), None) => Message::new(src, dest, cmd),
            _ => Err(ModelError::MalformedMessage(s.to_string())),
        }
    }
}

impl Serialize for Message {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Message {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn canonical_render(m: &Message) -> String {
    m.canonical()
}

/// One observed occurrence of a message.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MessageInstance {
    pub message: Message,
    pub address: Option<u64>,
    /// Generator bookkeeping. The miner never reads it.
    pub instance_id: Option<String>,
}

impl MessageInstance {
    pub fn new(message: Message) -> Self {
        MessageInstance {
            message,
            address: None,
            instance_id: None,
        }
    }

    pub fn with_address(message: Message, address: u64) -> Self {
        MessageInstance {
            message,
            address: Some(address),
            instance_id: None,
        }
    }
}

impl From<Message> for MessageInstance {
    fn from(message: Message) -> Self {
        MessageInstance::new(message)
    }
}

impl fmt::Display for MessageInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.address {
            Some(addr) => write!(f, "{}@{}", self.message, addr),
            None => write!(f, "{}", self.message),
        }
    }
}

/// The multiset of instances observed at one point in time. Intra-step order
/// carries no meaning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step(Vec<MessageInstance>);

impl Step {
    pub fn new(instances: Vec<MessageInstance>) -> Result<Self, ModelError> {
        if instances.is_empty() {
            return Err(ModelError::EmptyStep);
        }
        Ok(Step(instances))
    }

    pub fn single(instance: impl Into<MessageInstance>) -> Self {
        Step(vec![instance.into()])
    }

    pub fn instances(&self) -> &[MessageInstance] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn messages(&self) -> impl Iterator<Item = &Message> {
        self.0.iter().map(|i| &i.message)
    }

    pub fn count(&self, m: &Message) -> usize {
        self.0.iter().filter(|i| &i.message == m).count()
    }
}

/// Key of an address slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SliceKey {
    Address(u64),
    NoAddress,
}

impl fmt::Display for SliceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SliceKey::Address(a) => write!(f, "{a}"),
            SliceKey::NoAddress => f.write_str("noaddr"),
        }
    }
}

/// Where a sliced trace came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceOrigin {
    pub trace_id: String,
    pub key: SliceKey,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub id: String,
    steps: Vec<Step>,
    pub origin: Option<SliceOrigin>,
}

impl Trace {
    pub fn new(id: impl Into<String>, steps: Vec<Step>) -> Self {
        Trace {
            id: id.into(),
            steps,
            origin: None,
        }
    }

    /// Builds a trace of single-message steps, handy for sequential logs.
    pub fn from_sequence(id: impl Into<String>, messages: &[Message]) -> Self {
        let steps = messages.iter().cloned().map(Step::single).collect();
        Trace::new(id, steps)
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn num_instances(&self) -> usize {
        self.steps.iter().map(Step::len).sum()
    }

    pub fn instances(&self) -> impl Iterator<Item = (usize, &MessageInstance)> {
        self.steps
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.instances().iter().map(move |inst| (i, inst)))
    }

    /// Whether anything observed at step `i` happened before anything at step `j`.
    pub fn precedes(&self, i: usize, j: usize) -> Result<bool, ModelError> {
        let len = self.steps.len();
        for index in [i, j] {
            if index >= len {
                return Err(ModelError::StepOutOfRange { index, len });
            }
        }
        Ok(i < j)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceSet {
    pub traces: Vec<Trace>,
}

impl TraceSet {
    pub fn new(traces: Vec<Trace>) -> Self {
        TraceSet { traces }
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Trace> {
        self.traces.iter()
    }

    pub fn alphabet(&self) -> BTreeSet<Message> {
        self.traces
            .iter()
            .flat_map(|t| t.steps.iter())
            .flat_map(|s| s.messages())
            .cloned()
            .collect()
    }
}

impl FromIterator<Trace> for TraceSet {
    fn from_iter<I: IntoIterator<Item = Trace>>(iter: I) -> Self {
        TraceSet::new(iter.into_iter().collect())
    }
}

/// Reading of the structural causality filter applied to consecutive messages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Causality {
    /// The second message is sent by the component that received the first.
    #[default]
    DestSrc,
    /// `first.src == second.dest`, taken literally.
    SrcDestLiteral,
    Off,
}

impl Causality {
    pub fn holds(self, first: &Message, second: &Message) -> bool {
        match self {
            Causality::DestSrc => first.dest == second.src,
            Causality::SrcDestLiteral => first.src == second.dest,
            Causality::Off => true,
        }
    }
}

/// Which confidence measure qualified a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    /// Forward confidence (set C).
    Forward,
    /// Backward confidence (set R).
    Backward,
    /// Present in both sets after merging.
    Both,
}

impl Origin {
    pub fn union(self, other: Origin) -> Origin {
        if self == other {
            self
        } else {
            Origin::Both
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Origin::Forward => "C",
            Origin::Backward => "R",
            Origin::Both => "CR",
        }
    }

    pub fn from_label(label: &str) -> Option<Origin> {
        match label {
            "C" => Some(Origin::Forward),
            "R" => Some(Origin::Backward),
            "CR" | "RC" => Some(Origin::Both),
            _ => None,
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Aggregate supports recorded when a binary pattern was mined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportStats {
    /// Traces on which the confidence was defined.
    pub traces: usize,
    /// Sum over those traces of the joint support.
    pub joint: u64,
    /// Sum over those traces of the denominator support.
    pub base: u64,
    /// Mean per-trace confidence.
    pub confidence: f64,
}

/// A sequential pattern: at least two distinct messages, each consecutive pair
/// causally linked.
///
/// Equality, ordering and hashing look at the message sequence only.
#[derive(Debug, Clone)]
pub struct Pattern {
    messages: Vec<Message>,
    pub origin: Origin,
    pub support: Option<SupportStats>,
}

impl Pattern {
    pub fn new(
        messages: Vec<Message>,
        origin: Origin,
        causality: Causality,
    ) -> Result<Self, ModelError> {
        if messages.len() < 2 {
            return Err(ModelError::PatternTooShort(messages.len()));
        }
        let mut seen = BTreeSet::new();
        for m in &messages {
            if !seen.insert(m) {
                return Err(ModelError::DuplicateMessage(Box::new(m.clone())));
            }
        }
        for w in messages.windows(2) {
            if !causality.holds(&w[0], &w[1]) {
                return Err(ModelError::NotCausal(Box::new(w[0].clone()), Box::new(w[1].clone())));
            }
        }
        Ok(Pattern {
            messages,
            origin,
            support: None,
        })
    }

    /// For sequences whose invariants were established by construction.
    pub(crate) fn from_trusted(messages: Vec<Message>, origin: Origin) -> Self {
        debug_assert!(messages.len() >= 2);
        Pattern {
            messages,
            origin,
            support: None,
        }
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn first(&self) -> &Message {
        &self.messages[0]
    }

    pub fn last(&self) -> &Message {
        &self.messages[self.messages.len() - 1]
    }

    pub fn tokens(&self) -> Vec<String> {
        self.messages.iter().map(Message::canonical).collect()
    }
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.messages == other.messages
    }
}

impl Eq for Pattern {}

impl Hash for Pattern {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.messages.hash(state);
    }
}

impl Ord for Pattern {
    fn cmp(&self, other: &Self) -> Ordering {
        self.messages.cmp(&other.messages)
    }
}

impl PartialOrd for Pattern {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, m) in self.messages.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str(")")
    }
}

pub type PatternSet = BTreeSet<Pattern>;
