use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::netmodel::{GridEvent, DEFAULT_SWITCH_ADMITTANCE};
use crate::{Error, Result};

/// Phase composition of a generated feeder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseMix {
    /// Every node carries phase a only.
    Single,
    /// Every node carries a, b and c.
    Three,
    /// Three-phase at the slack, random phase subsets further out.
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub nodes: usize,
    #[serde(default = "default_phases")]
    pub phases: PhaseMix,
    /// Add `extra_lines` loop-closing lines (at least one when set).
    #[serde(default)]
    pub loopy: bool,
    #[serde(default)]
    pub extra_lines: usize,
    /// Closed sectionalizing switches `S0, S1, …` placed on tree edges.
    #[serde(default)]
    pub switches: usize,
    /// Open tie switches `T0, T1, …`; `Tk` can take over the load behind `Sk`.
    #[serde(default)]
    pub ties: usize,
    #[serde(default = "default_switch_admittance")]
    pub switch_admittance: f64,
    #[serde(default = "default_r_range")]
    pub r_range: [f64; 2],
    #[serde(default = "default_x_range")]
    pub x_range: [f64; 2],
    /// Mutual-to-self impedance ratio for multi-phase lines.
    #[serde(default = "default_mutual")]
    pub mutual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSpec {
    /// Range of per-terminal base current magnitudes (per-unit).
    #[serde(default = "default_base_range")]
    pub base_range: [f64; 2],
    #[serde(default = "default_pf")]
    pub power_factor: f64,
    /// 0 gives independent slot-to-slot fluctuations, 1 drives every load
    /// from a few shared random-walk factors.
    #[serde(default)]
    pub correlation: f64,
    #[serde(default = "default_factors")]
    pub factors: usize,
    /// Relative size of the fluctuations around the base magnitude.
    #[serde(default = "default_variation")]
    pub variation: f64,
    /// Whether nodes touched by a switch carry load.
    #[serde(default = "default_true")]
    pub load_switch_terminals: bool,
    /// Relative fluctuation of the substation voltage magnitude and angle.
    #[serde(default = "default_slack_variation")]
    pub slack_variation: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub currents: bool,
}

/// Complete, seeded description of a simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub slots: usize,
    #[serde(default = "default_slot_seconds")]
    pub slot_seconds: f64,
    pub network: NetworkSpec,
    #[serde(default)]
    pub loads: LoadSpec,
    #[serde(default)]
    pub events: Vec<GridEvent>,
    #[serde(default)]
    pub noise: NoiseSpec,
}

fn default_phases() -> PhaseMix {
    PhaseMix::Single
}
fn default_switch_admittance() -> f64 {
    DEFAULT_SWITCH_ADMITTANCE
}
fn default_r_range() -> [f64; 2] {
    [0.005, 0.02]
}
fn default_x_range() -> [f64; 2] {
    [0.02, 0.1]
}
fn default_mutual() -> f64 {
    0.3
}
fn default_base_range() -> [f64; 2] {
    [0.2, 1.0]
}
fn default_pf() -> f64 {
    0.95
}
fn default_factors() -> usize {
    2
}
fn default_variation() -> f64 {
    0.5
}
fn default_slack_variation() -> f64 {
    0.01
}
fn default_true() -> bool {
    true
}
fn default_slot_seconds() -> f64 {
    1.0
}

impl Default for LoadSpec {
    fn default() -> Self {
        LoadSpec {
            base_range: default_base_range(),
            power_factor: default_pf(),
            correlation: 0.0,
            factors: default_factors(),
            variation: default_variation(),
            load_switch_terminals: true,
            slack_variation: default_slack_variation(),
        }
    }
}

impl NetworkSpec {
    pub fn radial(nodes: usize, phases: PhaseMix) -> Self {
        NetworkSpec {
            nodes,
            phases,
            loopy: false,
            extra_lines: 0,
            switches: 0,
            ties: 0,
            switch_admittance: DEFAULT_SWITCH_ADMITTANCE,
            r_range: default_r_range(),
            x_range: default_x_range(),
            mutual: default_mutual(),
        }
    }
}

fn range_ok(r: [f64; 2], nonneg: bool) -> bool {
    r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] && (!nonneg || r[0] >= 0.0)
}

impl ScenarioSpec {
    pub fn new(seed: u64, slots: usize, network: NetworkSpec) -> Self {
        ScenarioSpec {
            seed,
            slots,
            slot_seconds: 1.0,
            network,
            loads: LoadSpec::default(),
            events: Vec::new(),
            noise: NoiseSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::InvalidScenario(format!("{field}: {msg}")));
        let n = &self.network;
        if self.slots == 0 {
            return bad("slots", "must be at least 1".into());
        }
        if !(self.slot_seconds > 0.0 && self.slot_seconds.is_finite()) {
            return bad("slot_seconds", "must be positive".into());
        }
        if n.nodes < 2 {
            return bad("network.nodes", format!("need at least 2 nodes, got {}", n.nodes));
        }
        if n.switches + n.ties > 0 && n.switches >= n.nodes {
            return bad("network.switches", format!("{} switches on {} tree edges", n.switches, n.nodes - 1));
        }
        if n.ties > n.switches {
            return bad("network.ties", "each tie switch needs a sectionalizing switch".into());
        }
        if !(n.switch_admittance > 0.0 && n.switch_admittance.is_finite()) {
            return bad("network.switch_admittance", "must be positive".into());
        }
        if !range_ok(n.r_range, true) || !range_ok(n.x_range, true) || n.r_range[1] + n.x_range[1] <= 0.0 {
            return bad("network.r_range/x_range", "invalid impedance range".into());
        }
        if !(0.0..0.9).contains(&n.mutual) {
            return bad("network.mutual", "must lie in [0, 0.9)".into());
        }
        let l = &self.loads;
        if !range_ok(l.base_range, true) {
            return bad("loads.base_range", "invalid magnitude range".into());
        }
        if !(l.power_factor > 0.0 && l.power_factor <= 1.0) {
            return bad("loads.power_factor", "must lie in (0, 1]".into());
        }
        if !(0.0..=1.0).contains(&l.correlation) {
            return bad("loads.correlation", "must lie in [0, 1]".into());
        }
        if l.correlation > 0.0 && l.factors == 0 {
            return bad("loads.factors", "correlated loads need at least one factor".into());
        }
        if !(l.variation >= 0.0 && l.variation.is_finite()) {
            return bad("loads.variation", "must be ≥ 0".into());
        }
        if !(0.0..0.2).contains(&l.slack_variation) {
            return bad("loads.slack_variation", "must be in [0, 0.2)".into());
        }
        if !(self.noise.sigma >= 0.0 && self.noise.sigma.is_finite()) {
            return bad("noise.sigma", "must be ≥ 0".into());
        }
        let mut last = 0;
        for (k, ev) in self.events.iter().enumerate() {
            if ev.slot == 0 || ev.slot >= self.slots {
                return bad(&format!("events[{k}].slot"), format!("{} outside 1..{}", ev.slot, self.slots));
            }
            if ev.slot <= last {
                return bad(&format!("events[{k}].slot"), "events must be strictly time-ordered".into());
            }
            last = ev.slot;
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<ScenarioSpec> {
        let spec: ScenarioSpec = serde_json::from_str(s).map_err(|e| {
            Error::InvalidScenario(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<ScenarioSpec> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario spec serializes")
    }
}
