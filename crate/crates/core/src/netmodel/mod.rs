//! Poly-phase network model and bus admittance matrices.

mod event;
mod network;
mod ybus;

pub use event::{apply_event, EventKind, GridEvent};
pub use network::{Line, Network, Node, Switch, DEFAULT_SWITCH_ADMITTANCE};
pub use ybus::{assemble_ybus, read_ybus, write_ybus, AdmittanceMatrix, YbusFile};

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::C64;

/// Node identifier.
pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    /// Nominal angle of the phase in radians (a = 0, b = -120°, c = +120°).
    pub fn nominal_angle(self) -> f64 {
        use std::f64::consts::PI;
        match self {
            Phase::A => 0.0,
            Phase::B => -2.0 * PI / 3.0,
            Phase::C => 2.0 * PI / 3.0,
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        match s.trim() {
            "a" | "A" => Some(Phase::A),
            "b" | "B" => Some(Phase::B),
            "c" | "C" => Some(Phase::C),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::A => "a",
            Phase::B => "b",
            Phase::C => "c",
        };
        f.write_str(s)
    }
}

/// One (node, phase) pair: the unit that indexes rows and columns of every matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(NodeId, Phase)", into = "(NodeId, Phase)")]
pub struct Terminal {
    pub node: NodeId,
    pub phase: Phase,
}

impl Terminal {
    pub fn new(node: NodeId, phase: Phase) -> Self {
        Terminal { node, phase }
    }
}

impl From<(NodeId, Phase)> for Terminal {
    fn from((node, phase): (NodeId, Phase)) -> Self {
        Terminal { node, phase }
    }
}

impl From<Terminal> for (NodeId, Phase) {
    fn from(t: Terminal) -> Self {
        (t.node, t.phase)
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.node, self.phase)
    }
}

/// Ordered terminal set mapping `(node, phase)` to a row index.
///
/// Terminals are always kept sorted by `(node, phase)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TerminalIndex {
    terminals: Vec<Terminal>,
    lookup: HashMap<Terminal, usize>,
}

impl TerminalIndex {
    /// Builds an index from any terminal collection; duplicates are merged.
    pub fn new(terminals: impl IntoIterator<Item = Terminal>) -> Self {
        let mut terminals: Vec<Terminal> = terminals.into_iter().collect();
        terminals.sort();
        terminals.dedup();
        let lookup = terminals.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        TerminalIndex { terminals, lookup }
    }

    pub fn len(&self) -> usize {
        self.terminals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminals.is_empty()
    }

    pub fn terminals(&self) -> &[Terminal] {
        &self.terminals
    }

    pub fn position(&self, t: Terminal) -> Option<usize> {
        self.lookup.get(&t).copied()
    }

    pub fn terminal(&self, i: usize) -> Terminal {
        self.terminals[i]
    }

    /// Sub-index over the given row positions (kept in sorted terminal order).
    pub fn select(&self, rows: &[usize]) -> TerminalIndex {
        TerminalIndex::new(rows.iter().map(|&r| self.terminals[r]))
    }
}

impl Serialize for TerminalIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.terminals.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TerminalIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let terminals = Vec::<Terminal>::deserialize(d)?;
        let n = terminals.len();
        let index = TerminalIndex::new(terminals);
        if index.len() != n {
            return Err(serde::de::Error::custom("duplicate terminal in terminal list"));
        }
        Ok(index)
    }
}

/// Serde adapter for complex numbers written as `[re, im]` pairs.
pub mod complex_pair {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}
