use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NodeId, Phase, Terminal};
use crate::{CMat, Error, Result, C64};

/// Default per-phase admittance magnitude of a switch, in per-unit.
pub const DEFAULT_SWITCH_ADMITTANCE: f64 = 1e5;

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub phases: Vec<Phase>,
}

/// π-model line: series impedance plus an optional total shunt admittance,
/// half of which sits at each end.
#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub id: String,
    pub from: NodeId,
    pub to: NodeId,
    pub phases: Vec<Phase>,
    pub z: CMat,
    pub ys: Option<CMat>,
    pub in_service: bool,
}

/// Switch modelled as a line with scalar per-phase admittance `g·(1 − 0.1j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Switch {
    pub id: String,
    pub from: NodeId,
    pub to: NodeId,
    pub phases: Vec<Phase>,
    pub admittance: f64,
    pub closed: bool,
}

impl Switch {
    pub fn phase_admittance(&self) -> C64 {
        C64::new(self.admittance, -0.1 * self.admittance)
    }
}

/// Branch contribution to the admittance matrix.
pub(crate) struct Stamp {
    pub from: Vec<Terminal>,
    pub to: Vec<Terminal>,
    pub series: CMat,
    pub half_shunt: CMat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub nodes: Vec<Node>,
    pub lines: Vec<Line>,
    pub switches: Vec<Switch>,
    pub slack: NodeId,
}

impl Line {
    pub(crate) fn stamp(&self) -> Result<Option<Stamp>> {
        if !self.in_service {
            return Ok(None);
        }
        let series = invert_symmetric(&self.z).ok_or_else(|| Error::SingularImpedance(self.id.clone()))?;
        let n = self.phases.len();
        let half_shunt = match &self.ys {
            Some(ys) => (ys + ys.transpose()).map(|v| v * 0.25),
            None => CMat::zeros(n, n),
        };
        Ok(Some(Stamp {
            from: terminals(self.from, &self.phases),
            to: terminals(self.to, &self.phases),
            series,
            half_shunt,
        }))
    }
}

impl Switch {
    pub(crate) fn stamp(&self) -> Option<Stamp> {
        if !self.closed {
            return None;
        }
        let n = self.phases.len();
        let series = CMat::from_diagonal_element(n, n, self.phase_admittance());
        Some(Stamp {
            from: terminals(self.from, &self.phases),
            to: terminals(self.to, &self.phases),
            series,
            half_shunt: CMat::zeros(n, n),
        })
    }
}

fn terminals(node: NodeId, phases: &[Phase]) -> Vec<Terminal> {
    phases.iter().map(|&p| Terminal::new(node, p)).collect()
}

/// Inverse of a complex-symmetric matrix, symmetrized so the result is exactly symmetric.
fn invert_symmetric(z: &CMat) -> Option<CMat> {
    if !z.is_square() || z.nrows() == 0 {
        return None;
    }
    let scale = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let inv = z.clone().try_inverse()?;
    if inv.iter().any(|v| !v.is_finite()) {
        return None;
    }
    // reject numerically singular blocks
    let inv_scale = inv.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale * inv_scale > 1e14 {
        return None;
    }
    let sym = (&inv + inv.transpose()).map(|v| v * 0.5);
    Some(sym)
}

impl Network {
    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// All terminals of the network in sorted `(node, phase)` order.
    pub fn terminals(&self) -> Vec<Terminal> {
        let mut t: Vec<Terminal> = self
            .nodes
            .iter()
            .flat_map(|n| n.phases.iter().map(move |&p| Terminal::new(n.id, p)))
            .collect();
        t.sort();
        t
    }

    pub fn slack_terminals(&self) -> Vec<Terminal> {
        self.node(self.slack)
            .map(|n| terminals(n.id, &n.phases))
            .unwrap_or_default()
    }

    pub(crate) fn stamps(&self) -> Result<Vec<Stamp>> {
        let mut out = Vec::new();
        for line in &self.lines {
            if let Some(s) = line.stamp()? {
                out.push(s);
            }
        }
        out.extend(self.switches.iter().filter_map(Switch::stamp));
        Ok(out)
    }

    /// Component ids (lines then switches).
    pub fn component_ids(&self) -> impl Iterator<Item = &str> {
        self.lines
            .iter()
            .map(|l| l.id.as_str())
            .chain(self.switches.iter().map(|s| s.id.as_str()))
    }

    /// Checks structural invariants: unique ids, phase containment, symmetric
    /// square impedances and connectivity over energized branches.
    pub fn validate(&self) -> Result<()> {
        let mut phases_of: HashMap<NodeId, &[Phase]> = HashMap::new();
        for n in &self.nodes {
            if n.phases.is_empty() {
                return Err(Error::InvalidNetwork(format!("node {} has no phases", n.id)));
            }
            let set: BTreeSet<_> = n.phases.iter().collect();
            if set.len() != n.phases.len() {
                return Err(Error::InvalidNetwork(format!("node {} repeats a phase", n.id)));
            }
            if phases_of.insert(n.id, &n.phases).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate node id {}", n.id)));
            }
        }
        if !phases_of.contains_key(&self.slack) {
            return Err(Error::InvalidNetwork(format!("slack node {} does not exist", self.slack)));
        }
        let mut ids = BTreeSet::new();
        for id in self.component_ids() {
            if !ids.insert(id) {
                return Err(Error::InvalidNetwork(format!("duplicate component id `{id}`")));
            }
        }
        let check_branch = |id: &str, from: NodeId, to: NodeId, phases: &[Phase]| -> Result<()> {
            if from == to {
                return Err(Error::InvalidNetwork(format!("component `{id}` is a self loop")));
            }
            if phases.is_empty() {
                return Err(Error::InvalidNetwork(format!("component `{id}` has no phases")));
            }
            let set: BTreeSet<_> = phases.iter().collect();
            if set.len() != phases.len() {
                return Err(Error::InvalidNetwork(format!("component `{id}` repeats a phase")));
            }
            for end in [from, to] {
                let node_phases = phases_of
                    .get(&end)
                    .ok_or_else(|| Error::InvalidNetwork(format!("component `{id}` references unknown node {end}")))?;
                if phases.iter().any(|p| !node_phases.contains(p)) {
                    return Err(Error::InvalidNetwork(format!(
                        "component `{id}` uses a phase missing at node {end}"
                    )));
                }
            }
            Ok(())
        };
        for l in &self.lines {
            check_branch(&l.id, l.from, l.to, &l.phases)?;
            let n = l.phases.len();
            if l.z.nrows() != n || l.z.ncols() != n {
                return Err(Error::InvalidNetwork(format!(
                    "line `{}` impedance must be {n}x{n}",
                    l.id
                )));
            }
            if !is_symmetric(&l.z) {
                return Err(Error::InvalidNetwork(format!("line `{}` impedance is not symmetric", l.id)));
            }
            if let Some(ys) = &l.ys {
                if ys.nrows() != n || ys.ncols() != n || !is_symmetric(ys) {
                    return Err(Error::InvalidNetwork(format!(
                        "line `{}` shunt admittance must be a symmetric {n}x{n} matrix",
                        l.id
                    )));
                }
            }
            if l.z.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidNetwork(format!("line `{}` has non-finite impedance", l.id)));
            }
        }
        for s in &self.switches {
            check_branch(&s.id, s.from, s.to, &s.phases)?;
            if !(s.admittance.is_finite() && s.admittance > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "switch `{}` needs a positive finite admittance",
                    s.id
                )));
            }
        }
        if !self.is_connected() {
            return Err(Error::InvalidNetwork(
                "network is not connected over energized branches".into(),
            ));
        }
        Ok(())
    }

    /// Node-level connectivity over in-service lines and closed switches.
    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> = self.nodes.iter().map(|n| (n.id, Vec::new())).collect();
        let edges = self
            .lines
            .iter()
            .filter(|l| l.in_service)
            .map(|l| (l.from, l.to))
            .chain(self.switches.iter().filter(|s| s.closed).map(|s| (s.from, s.to)));
        for (a, b) in edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let start = self.nodes[0].id;
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(n) = stack.pop() {
            for &m in &adj[&n] {
                if seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        seen.len() == adj.len()
    }

    pub fn from_json_str(s: &str) -> Result<Network> {
        let raw: NetworkJson = serde_json::from_str(s).map_err(|e| Error::Parse {
            path: "<network>".into(),
            message: e.to_string(),
        })?;
        let net = raw.into_network()?;
        net.validate()?;
        Ok(net)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&NetworkJson::from_network(self)).expect("network serializes")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Network> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Network::from_json_str(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }
}

fn is_symmetric(m: &CMat) -> bool {
    let scale = m.iter().map(|v| v.norm()).fold(1.0, f64::max);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).norm() <= 1e-12 * scale))
}

// ---- JSON schema ----

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeJson {
    id: NodeId,
    phases: Vec<Phase>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineJson {
    id: String,
    from: NodeId,
    to: NodeId,
    phases: Vec<Phase>,
    /// Row-major `[re, im]` entries of the series impedance matrix.
    z: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ys: Option<Vec<[f64; 2]>>,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    in_service: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SwitchJson {
    id: String,
    from: NodeId,
    to: NodeId,
    phases: Vec<Phase>,
    #[serde(default = "default_g")]
    g: f64,
    closed: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkJson {
    nodes: Vec<NodeJson>,
    #[serde(default)]
    lines: Vec<LineJson>,
    #[serde(default)]
    switches: Vec<SwitchJson>,
    slack: NodeId,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

fn default_g() -> f64 {
    DEFAULT_SWITCH_ADMITTANCE
}

fn matrix_from_pairs(id: &str, what: &str, n: usize, pairs: &[[f64; 2]]) -> Result<CMat> {
    if pairs.len() != n * n {
        return Err(Error::InvalidNetwork(format!(
            "line `{id}`: {what} needs {} entries for {n} phases, found {}",
            n * n,
            pairs.len()
        )));
    }
    Ok(CMat::from_row_iterator(n, n, pairs.iter().map(|[re, im]| C64::new(*re, *im))))
}

fn pairs_from_matrix(m: &CMat) -> Vec<[f64; 2]> {
    (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
        .collect()
}

impl NetworkJson {
    fn into_network(self) -> Result<Network> {
        let nodes = self
            .nodes
            .into_iter()
            .map(|n| Node { id: n.id, phases: n.phases })
            .collect();
        let lines = self
            .lines
            .into_iter()
            .map(|l| {
                let n = l.phases.len();
                let z = matrix_from_pairs(&l.id, "z", n, &l.z)?;
                let ys = l.ys.as_deref().map(|p| matrix_from_pairs(&l.id, "ys", n, p)).transpose()?;
                Ok(Line {
                    id: l.id,
                    from: l.from,
                    to: l.to,
                    phases: l.phases,
                    z,
                    ys,
                    in_service: l.in_service,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let switches = self
            .switches
            .into_iter()
            .map(|s| Switch {
                id: s.id,
                from: s.from,
                to: s.to,
                phases: s.phases,
                admittance: s.g,
                closed: s.closed,
            })
            .collect();
        Ok(Network {
            nodes,
            lines,
            switches,
            slack: self.slack,
        })
    }

    fn from_network(net: &Network) -> NetworkJson {
        NetworkJson {
            nodes: net
                .nodes
                .iter()
                .map(|n| NodeJson { id: n.id, phases: n.phases.clone() })
                .collect(),
            lines: net
                .lines
                .iter()
                .map(|l| LineJson {
                    id: l.id.clone(),
                    from: l.from,
                    to: l.to,
                    phases: l.phases.clone(),
                    z: pairs_from_matrix(&l.z),
                    ys: l.ys.as_ref().map(pairs_from_matrix),
                    in_service: l.in_service,
                })
                .collect(),
            switches: net
                .switches
                .iter()
                .map(|s| SwitchJson {
                    id: s.id.clone(),
                    from: s.from,
                    to: s.to,
                    phases: s.phases.clone(),
                    g: s.admittance,
                    closed: s.closed,
                })
                .collect(),
            slack: net.slack,
        }
    }
}
