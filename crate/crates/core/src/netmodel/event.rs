use serde::{Deserialize, Serialize};

use super::network::Stamp;
use super::ybus::stamp_into;
use super::{AdmittanceMatrix, Network, TerminalIndex};
use crate::{CMat, Error, Result, C64};

/// What happens to the targeted component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventKind {
    SwitchOpen,
    SwitchClose,
    LineTrip,
    /// Scales the series admittance of a line by `factor` (tap change, partial fault).
    BlockPerturb {
        #[serde(with = "super::complex_pair")]
        factor: C64,
    },
    /// Closes the target switch and opens `open` in the same slot.
    SwitchTransfer { open: String },
}

/// A scripted change to the network at time slot `slot`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridEvent {
    pub slot: usize,
    pub target: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl GridEvent {
    pub fn new(slot: usize, target: impl Into<String>, kind: EventKind) -> Self {
        GridEvent {
            slot,
            target: target.into(),
            kind,
        }
    }
}

enum Target {
    Line(usize),
    Switch(usize),
}

fn find(net: &Network, id: &str) -> Result<Target> {
    if let Some(i) = net.lines.iter().position(|l| l.id == id) {
        return Ok(Target::Line(i));
    }
    if let Some(i) = net.switches.iter().position(|s| s.id == id) {
        return Ok(Target::Switch(i));
    }
    Err(Error::UnknownComponent(id.to_string()))
}

fn switch_index(net: &Network, id: &str) -> Result<usize> {
    match find(net, id)? {
        Target::Switch(i) => Ok(i),
        Target::Line(_) => Err(Error::EventRejected(format!("`{id}` is a line, not a switch"))),
    }
}

fn line_index(net: &Network, id: &str) -> Result<usize> {
    match find(net, id)? {
        Target::Line(i) => Ok(i),
        Target::Switch(_) => Err(Error::EventRejected(format!("`{id}` is a switch, not a line"))),
    }
}

fn component_stamp(net: &Network, target: &Target) -> Result<Option<Stamp>> {
    match *target {
        Target::Line(i) => net.lines[i].stamp(),
        Target::Switch(i) => Ok(net.switches[i].stamp()),
    }
}

fn set_switch(net: &mut Network, id: &str, closed: bool) -> Result<()> {
    let i = switch_index(net, id)?;
    if net.switches[i].closed == closed {
        let state = if closed { "closed" } else { "open" };
        return Err(Error::EventRejected(format!("switch `{id}` is already {state}")));
    }
    net.switches[i].closed = closed;
    Ok(())
}

/// Applies an event and returns the modified network together with the exact
/// admittance update `ΔY = Y(after) − Y(before)`, supported only on the
/// terminals of the affected components.
pub fn apply_event(net: &Network, ev: &GridEvent) -> Result<(Network, AdmittanceMatrix)> {
    let mut after = net.clone();
    let mut touched = vec![find(net, &ev.target)?];
    match &ev.kind {
        EventKind::SwitchOpen => set_switch(&mut after, &ev.target, false)?,
        EventKind::SwitchClose => set_switch(&mut after, &ev.target, true)?,
        EventKind::SwitchTransfer { open } => {
            if open == &ev.target {
                return Err(Error::EventRejected("transfer needs two distinct switches".into()));
            }
            set_switch(&mut after, &ev.target, true)?;
            set_switch(&mut after, open, false)?;
            touched.push(find(net, open)?);
        }
        EventKind::LineTrip => {
            let i = line_index(net, &ev.target)?;
            if !after.lines[i].in_service {
                return Err(Error::EventRejected(format!("line `{}` is already out of service", ev.target)));
            }
            after.lines[i].in_service = false;
        }
        EventKind::BlockPerturb { factor } => {
            let i = line_index(net, &ev.target)?;
            if !after.lines[i].in_service {
                return Err(Error::EventRejected(format!("line `{}` is out of service", ev.target)));
            }
            if *factor == C64::new(1.0, 0.0) || factor.norm() == 0.0 || !factor.is_finite() {
                return Err(Error::EventRejected(format!("invalid perturbation factor {factor}")));
            }
            let inv = C64::new(1.0, 0.0) / factor;
            after.lines[i].z = after.lines[i].z.map(|v| v * inv);
        }
    }
    if !after.is_connected() {
        return Err(Error::EventRejected(format!(
            "event on `{}` would disconnect the network",
            ev.target
        )));
    }
    let index = TerminalIndex::new(net.terminals());
    let n = index.len();
    let mut delta = CMat::zeros(n, n);
    for target in &touched {
        if let Some(s) = component_stamp(&after, target)? {
            stamp_into(&mut delta, &index, &s, 1.0)?;
        }
        if let Some(s) = component_stamp(net, target)? {
            stamp_into(&mut delta, &index, &s, -1.0)?;
        }
    }
    let delta = AdmittanceMatrix::new(index, delta)?;
    Ok((after, delta))
}
