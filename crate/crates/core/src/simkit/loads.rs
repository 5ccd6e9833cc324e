use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::LoadSpec;
use crate::netmodel::{Network, NodeId};
use crate::{CMat, Result, C64};

const AR_COEF: f64 = 0.95;
const FACTOR_STD: f64 = 0.5;

/// Injected-current schedule (terminals × slots, rows in `net.terminals()` order).
///
/// Each loaded terminal draws a base magnitude `b` and follows
/// `m(t) = b·(1 + variation·(ρ·Σ aₘ fₘ(t) + (1 − ρ)·η(t)))`, where the `fₘ` are
/// shared mean-reverting AR(1) walks and `η` is i.i.d. standard normal.
/// The injection is `−m·e^{j(θ − acos pf)}` with `θ` the nominal phase angle,
/// i.e. a consumer drawing power at power factor `pf` under nominal voltage.
/// Slack terminals (and, optionally, switch terminals) carry no load.
pub fn generate_loads(net: &Network, spec: &LoadSpec, seed: u64, slots: usize) -> Result<CMat> {
    let terms = net.terminals();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unloaded: BTreeSet<NodeId> = BTreeSet::from([net.slack]);
    if !spec.load_switch_terminals {
        for s in &net.switches {
            unloaded.insert(s.from);
            unloaded.insert(s.to);
        }
    }
    let f_count = spec.factors;
    let rho = spec.correlation;
    let base: Vec<f64> = terms
        .iter()
        .map(|_| spec.base_range[0] + (spec.base_range[1] - spec.base_range[0]) * rng.gen::<f64>())
        .collect();
    let scale = 1.0 / (f_count.max(1) as f64).sqrt();
    let loading: Vec<Vec<f64>> = terms
        .iter()
        .map(|_| (0..f_count).map(|_| rng.gen_range(-1.0..1.0) * scale).collect())
        .collect();
    let innovation = (1.0 - AR_COEF * AR_COEF).sqrt() * FACTOR_STD;
    let mut factors = vec![vec![0.0; slots]; f_count];
    for f in factors.iter_mut() {
        let mut acc: f64 = FACTOR_STD * rng.sample::<f64, _>(StandardNormal);
        for v in f.iter_mut() {
            let step: f64 = rng.sample(StandardNormal);
            acc = AR_COEF * acc + innovation * step;
            *v = acc;
        }
    }
    let phi = spec.power_factor.acos();
    let mut out = CMat::zeros(terms.len(), slots);
    for k in 0..slots {
        for (r, t) in terms.iter().enumerate() {
            let eta: f64 = rng.sample(StandardNormal);
            if unloaded.contains(&t.node) {
                continue;
            }
            let common: f64 = (0..f_count).map(|m| loading[r][m] * factors[m][k]).sum();
            let mut m = base[r] * (1.0 + spec.variation * (rho * common + (1.0 - rho) * eta));
            if rho < 1.0 {
                m = m.abs();
            }
            out[(r, k)] = -C64::from_polar(m, t.phase.nominal_angle() - phi);
        }
    }
    Ok(out)
}
