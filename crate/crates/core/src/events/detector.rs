use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::netmodel::AdmittanceMatrix;
use crate::{Error, Result, C64};

/// `e = i − Y₀·v`.
pub fn prediction_error(y0: &AdmittanceMatrix, v: &[C64], i: &[C64]) -> Result<Vec<C64>> {
    let n = y0.dim();
    if v.len() != n || i.len() != n {
        return Err(Error::Shape(format!(
            "model has {n} terminals, sample has {} voltages and {} currents",
            v.len(),
            i.len()
        )));
    }
    let m = y0.matrix();
    Ok((0..n)
        .map(|r| i[r] - (0..n).map(|c| m[(r, c)] * v[c]).sum::<C64>())
        .collect())
}

/// Residual threshold policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Threshold {
    /// `τ = max(factor · median(history), floor_rel · ‖Y₀‖_F · ‖v‖)`.
    Auto { factor: f64, floor_rel: f64 },
    Fixed(f64),
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::Auto {
            factor: 10.0,
            floor_rel: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub threshold: Threshold,
    /// Length of the residual history used by the auto threshold.
    pub history: usize,
    /// Quiet slots collected before the auto threshold is armed.
    pub warmup: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            threshold: Threshold::default(),
            history: 300,
            warmup: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum DetectOutcome {
    /// Auto threshold not armed yet.
    Warmup { residual: f64 },
    Quiet { residual: f64, threshold: f64 },
    Event { slot: usize, residual: f64, threshold: f64 },
}

/// Sequential change detector on `‖i_k − Y₀·v_k‖₂`.
#[derive(Clone, Debug)]
pub struct Detector {
    y0: AdmittanceMatrix,
    y0_norm: f64,
    cfg: DetectorConfig,
    history: VecDeque<f64>,
    slot: usize,
    mode: u8,
    event_slot: Option<usize>,
}

fn median(xs: &VecDeque<f64>) -> f64 {
    let mut v: Vec<f64> = xs.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl Detector {
    pub fn new(y0: AdmittanceMatrix, cfg: DetectorConfig) -> Result<Self> {
        match cfg.threshold {
            Threshold::Fixed(t) if !(t > 0.0 && t.is_finite()) => {
                return Err(Error::InvalidParameter(format!("threshold must be positive, got {t}")))
            }
            Threshold::Auto { factor, floor_rel } if !(factor > 0.0 && floor_rel >= 0.0) => {
                return Err(Error::InvalidParameter("auto threshold needs factor > 0 and floor ≥ 0".into()))
            }
            _ => {}
        }
        if cfg.history == 0 {
            return Err(Error::InvalidParameter("residual history must hold at least one slot".into()));
        }
        let y0_norm = y0.matrix().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Ok(Detector {
            y0,
            y0_norm,
            cfg,
            history: VecDeque::new(),
            slot: 0,
            mode: 0,
            event_slot: None,
        })
    }

    pub fn model(&self) -> &AdmittanceMatrix {
        &self.y0
    }

    /// Discrete mode: 0 before the first event, 1 afterwards.
    pub fn mode(&self) -> u8 {
        self.mode
    }

    /// Slot of the most recent detection.
    pub fn event_slot(&self) -> Option<usize> {
        self.event_slot
    }

    /// Index of the next slot to be processed.
    pub fn next_slot(&self) -> usize {
        self.slot
    }

    pub fn residual_history(&self) -> impl Iterator<Item = &f64> {
        self.history.iter()
    }

    /// Replaces the model after an event has been handled.
    pub fn update_model(&mut self, y0: AdmittanceMatrix) -> Result<()> {
        if y0.index() != self.y0.index() {
            return Err(Error::Shape("new model indexes different terminals".into()));
        }
        self.y0_norm = y0.matrix().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        self.y0 = y0;
        Ok(())
    }

    /// Skips `n` slots (e.g. a localization window) without examining them.
    pub fn skip(&mut self, n: usize) {
        self.slot += n;
    }

    /// Processes slot `next_slot()`.
    pub fn detect_step(&mut self, v: &[C64], i: &[C64]) -> Result<DetectOutcome> {
        let e = prediction_error(&self.y0, v, i)?;
        let residual = e.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let slot = self.slot;
        self.slot += 1;
        let threshold = match self.cfg.threshold {
            Threshold::Fixed(t) => t,
            Threshold::Auto { factor, floor_rel } => {
                if self.history.len() < self.cfg.warmup.max(1) {
                    self.push(residual);
                    return Ok(DetectOutcome::Warmup { residual });
                }
                let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                (factor * median(&self.history)).max(floor_rel * self.y0_norm * vnorm)
            }
        };
        if residual > threshold {
            self.mode = 1;
            self.event_slot = Some(slot);
            return Ok(DetectOutcome::Event {
                slot,
                residual,
                threshold,
            });
        }
        self.push(residual);
        Ok(DetectOutcome::Quiet { residual, threshold })
    }

    fn push(&mut self, r: f64) {
        if self.history.len() == self.cfg.history {
            self.history.pop_front();
        }
        self.history.push_back(r);
    }
}
