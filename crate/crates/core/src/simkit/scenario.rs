use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{generate_feeder, generate_loads, ScenarioSpec};
use crate::netmodel::{apply_event, assemble_ybus, AdmittanceMatrix, GridEvent, Network, Terminal, YbusFile};
use crate::phasors::PhasorDataset;
use crate::{CMat, Error, Result, C64};

/// `1∠θ` on each slack terminal, `θ` the phase's nominal angle.
pub fn nominal_slack_voltage(slack: &[Terminal]) -> Vec<C64> {
    slack.iter().map(|t| C64::from_polar(1.0, t.phase.nominal_angle())).collect()
}

/// Substation voltage per slot: the nominal set scaled per phase by
/// `1 + variation·a` and rotated by `variation·b`, with `a`, `b` independent
/// AR(1) series of unit stationary variance.
pub fn slack_voltage_series(slack: &[Terminal], variation: f64, slots: usize, seed: u64) -> CMat {
    const AR_COEF: f64 = 0.95;
    let nominal = nominal_slack_voltage(slack);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let innovation = (1.0 - AR_COEF * AR_COEF).sqrt();
    let mut out = CMat::zeros(slack.len(), slots);
    for (r, v0) in nominal.iter().enumerate() {
        let mut a: f64 = rng.sample(StandardNormal);
        let mut b: f64 = rng.sample(StandardNormal);
        for k in 0..slots {
            if k > 0 {
                a = AR_COEF * a + innovation * rng.sample::<f64, _>(StandardNormal);
                b = AR_COEF * b + innovation * rng.sample::<f64, _>(StandardNormal);
            }
            out[(r, k)] = v0 * C64::from_polar(1.0 + variation * a, variation * b);
        }
    }
    out
}

/// Solves `I = Y·V` for every column of `injections` with the slack voltages
/// fixed to the matching column of `slack_voltage`; the slack rows of `injections` are ignored and replaced by the
/// balancing current. Returns `(V, I)` with `I` recomputed as `Y·V`.
pub fn solve_steady_state(
    y: &AdmittanceMatrix,
    slack: &[Terminal],
    slack_voltage: &CMat,
    injections: &CMat,
) -> Result<(CMat, CMat)> {
    let dim = y.dim();
    if injections.nrows() != dim {
        return Err(Error::Shape(format!("{} injection rows for {dim} terminals", injections.nrows())));
    }
    if slack_voltage.nrows() != slack.len() || slack_voltage.ncols() != injections.ncols() {
        return Err(Error::Shape("one slack voltage per slack terminal and slot required".into()));
    }
    let mut is_slack = vec![false; dim];
    let mut s_rows = Vec::with_capacity(slack.len());
    for t in slack {
        let r = y
            .index()
            .position(*t)
            .ok_or_else(|| Error::InvalidNetwork(format!("slack terminal {t} not in the admittance matrix")))?;
        is_slack[r] = true;
        s_rows.push(r);
    }
    let o_rows: Vec<usize> = (0..dim).filter(|&r| !is_slack[r]).collect();
    let k = injections.ncols();
    let m = y.matrix();
    let y_oo = m.select_rows(&o_rows).select_columns(&o_rows);
    let y_os = m.select_rows(&o_rows).select_columns(&s_rows);
    let rhs = injections.select_rows(&o_rows) - &y_os * slack_voltage;
    let lu = y_oo.lu();
    let v_o = lu
        .solve(&rhs)
        .filter(|v| v.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| Error::InvalidNetwork("reduced admittance matrix is singular (disconnected network?)".into()))?;
    let mut v = CMat::zeros(dim, k);
    for (a, &r) in o_rows.iter().enumerate() {
        v.row_mut(r).copy_from(&v_o.row(a));
    }
    for (a, &r) in s_rows.iter().enumerate() {
        v.row_mut(r).copy_from(&slack_voltage.row(a));
    }
    let i = m * &v;
    Ok((v, i))
}

/// Admittance matrix in force over slots `start..end`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthInterval {
    pub start: usize,
    pub end: usize,
    pub ybus: AdmittanceMatrix,
}

/// A scripted event together with the admittance change it caused.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthEvent {
    pub event: GridEvent,
    pub delta: AdmittanceMatrix,
}

/// Sequence of true admittance matrices; interval `k+1` equals interval `k`
/// plus the delta of event `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub intervals: Vec<TruthInterval>,
    pub events: Vec<TruthEvent>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalJson {
    start: usize,
    end: usize,
    ybus: YbusFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventJson {
    event: GridEvent,
    delta: YbusFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruthJson {
    intervals: Vec<IntervalJson>,
    events: Vec<EventJson>,
}

impl GroundTruth {
    /// Matrix in force at `slot`.
    pub fn ybus_at(&self, slot: usize) -> Option<&AdmittanceMatrix> {
        self.intervals.iter().find(|iv| iv.start <= slot && slot < iv.end).map(|iv| &iv.ybus)
    }

    pub fn initial(&self) -> &AdmittanceMatrix {
        &self.intervals[0].ybus
    }

    pub fn to_json_string(&self) -> String {
        let j = TruthJson {
            intervals: self
                .intervals
                .iter()
                .map(|iv| IntervalJson {
                    start: iv.start,
                    end: iv.end,
                    ybus: YbusFile::from_matrix(&iv.ybus),
                })
                .collect(),
            events: self
                .events
                .iter()
                .map(|e| EventJson {
                    event: e.event.clone(),
                    delta: YbusFile::from_matrix(&e.delta),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&j).expect("ground truth serializes")
    }

    pub fn from_json_str(s: &str) -> Result<GroundTruth> {
        let j: TruthJson = serde_json::from_str(s).map_err(|e| Error::Parse {
            path: "<ground truth>".into(),
            message: e.to_string(),
        })?;
        if j.intervals.is_empty() {
            return Err(Error::InvalidData("ground truth has no intervals".into()));
        }
        Ok(GroundTruth {
            intervals: j
                .intervals
                .into_iter()
                .map(|iv| {
                    Ok(TruthInterval {
                        start: iv.start,
                        end: iv.end,
                        ybus: iv.ybus.to_matrix()?,
                    })
                })
                .collect::<Result<_>>()?,
            events: j
                .events
                .into_iter()
                .map(|e| {
                    Ok(TruthEvent {
                        event: e.event,
                        delta: e.delta.to_matrix()?,
                    })
                })
                .collect::<Result<_>>()?,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<GroundTruth> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| match e {
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

/// Output of [`run_scenario`].
#[derive(Clone, Debug)]
pub struct Scenario {
    /// Network before the first event.
    pub network: Network,
    /// Network after the last event.
    pub final_network: Network,
    pub dataset: PhasorDataset,
    pub truth: GroundTruth,
}

/// Generates the feeder and loads, applies events at their slots, solves every
/// slot and finally adds measurement noise.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let network = generate_feeder(&spec.network, spec.seed)?;
    let injections = generate_loads(&network, &spec.loads, spec.seed.wrapping_add(1), spec.slots)?;
    let slack = network.slack_terminals();
    let slack_v = slack_voltage_series(&slack, spec.loads.slack_variation, spec.slots, spec.seed.wrapping_add(3));

    let mut net = network.clone();
    let mut y = assemble_ybus(&net)?;
    let index = y.index().clone();
    let mut v = CMat::zeros(index.len(), spec.slots);
    let mut i = CMat::zeros(index.len(), spec.slots);
    let mut intervals = Vec::new();
    let mut events = Vec::new();
    let mut bounds: Vec<usize> = spec.events.iter().map(|e| e.slot).collect();
    bounds.push(spec.slots);
    let mut start = 0;
    for (k, &end) in bounds.iter().enumerate() {
        let cols: Vec<usize> = (start..end).collect();
        let (vk, ik) = solve_steady_state(
            &y,
            &slack,
            &slack_v.select_columns(&cols),
            &injections.select_columns(&cols),
        )?;
        for (a, &c) in cols.iter().enumerate() {
            v.set_column(c, &vk.column(a));
            i.set_column(c, &ik.column(a));
        }
        intervals.push(TruthInterval {
            start,
            end,
            ybus: y.clone(),
        });
        if let Some(ev) = spec.events.get(k) {
            let (after, delta) = apply_event(&net, ev)?;
            y = y.sum(&delta)?;
            net = after;
            events.push(TruthEvent {
                event: ev.clone(),
                delta,
            });
        }
        start = end;
    }
    let clean = PhasorDataset::new(index, v, i, spec.slot_seconds)?;
    let dataset = clean.add_noise(spec.noise.sigma, spec.seed.wrapping_add(2), spec.noise.currents)?;
    Ok(Scenario {
        network,
        final_network: net,
        dataset,
        truth: GroundTruth { intervals, events },
    })
}
