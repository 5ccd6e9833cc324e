//! Helpers shared by the integration suites: random instances, scenario
//! builders and an interior-point oracle for the complex lasso.

#![allow(dead_code)]

use gridid::netmodel::{EventKind, GridEvent};
use gridid::simkit::{generate_loads, slack_voltage_series, NetworkSpec, PhaseMix, Scenario, ScenarioSpec};
use gridid::symvec::duplication_matrix;
use gridid::{CMat, C64};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn randn_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_cmat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| randn_c(rng))
}

pub fn random_cvec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| randn_c(rng)).collect()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let a = random_cmat(rng, n, n);
    (&a + a.transpose()) * C64::new(0.5, 0.0)
}

pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vnorm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vdiff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Radial single-phase feeder with independent loads.
pub fn single_phase_spec(nodes: usize, seed: u64, slots: usize) -> ScenarioSpec {
    ScenarioSpec::new(seed, slots, NetworkSpec::radial(nodes, PhaseMix::Single))
}

/// Feeder with one switch and one open tie; at `slot` the tie closes, or
/// closes while the switch opens when `transfer` is set.
pub fn switching_spec(
    nodes: usize,
    mix: PhaseMix,
    seed: u64,
    slots: usize,
    slot: usize,
    transfer: bool,
    g: f64,
) -> ScenarioSpec {
    let mut net = NetworkSpec::radial(nodes, mix);
    net.switches = 1;
    net.ties = 1;
    net.switch_admittance = g;
    let mut spec = ScenarioSpec::new(seed, slots, net);
    let kind = if transfer {
        EventKind::SwitchTransfer { open: "S0".into() }
    } else {
        EventKind::SwitchClose
    };
    spec.events.push(GridEvent::new(slot, "T0", kind));
    spec
}

/// Weighted complex lasso `min ‖A·x − b‖² + λ·Σ wᵢ|xᵢ|` solved as a real
/// second-order-cone program by a primal log-barrier method:
///
/// `min ‖M·u − c‖² + λ·wᵀt  s.t. ‖(Re xᵢ, Im xᵢ)‖ ≤ tᵢ`,
///
/// with `u = [Re x; Im x]` and `M = [[Re A, −Im A], [Im A, Re A]]`.
/// Returns the objective and the minimizer.
pub fn socp_lasso(a: &CMat, b: &[C64], lambda: f64, w: &[f64]) -> (f64, Vec<C64>) {
    let (m, n) = a.shape();
    let mm = DMatrix::<f64>::from_fn(2 * m, 2 * n, |r, c| {
        let z = a[(r % m, c % n)];
        match (r < m, c < n) {
            (true, true) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
            (false, false) => z.re,
        }
    });
    let cvec = DVector::<f64>::from_fn(2 * m, |r, _| if r < m { b[r].re } else { b[r - m].im });
    let h0 = mm.transpose() * &mm * 2.0;
    let mtc = mm.transpose() * &cvec * 2.0;
    let nv = 3 * n;
    let objective = |z: &DVector<f64>| -> f64 {
        let u = z.rows(0, 2 * n);
        let res = &mm * u - &cvec;
        res.norm_squared() + lambda * (0..n).map(|i| w[i] * z[2 * n + i]).sum::<f64>()
    };
    let cone = |z: &DVector<f64>, i: usize| z[2 * n + i].powi(2) - z[i].powi(2) - z[n + i].powi(2);
    let barrier = |z: &DVector<f64>| -> Option<f64> {
        let mut s = 0.0;
        for i in 0..n {
            let g = cone(z, i);
            if !(g > 0.0 && z[2 * n + i] > 0.0) {
                return None;
            }
            s -= g.ln();
        }
        Some(s)
    };

    let mut z = DVector::<f64>::zeros(nv);
    let scale = 1.0 + cvec.norm_squared();
    for i in 0..n {
        z[2 * n + i] = 1.0;
    }
    let nu = 2.0 * n as f64;
    let mut tau = 1.0 / scale;
    loop {
        for _ in 0..200 {
            let u = z.rows(0, 2 * n).into_owned();
            let mut grad = DVector::<f64>::zeros(nv);
            let gu = &h0 * &u - &mtc;
            grad.rows_mut(0, 2 * n).copy_from(&(gu * tau));
            let mut hess = DMatrix::<f64>::zeros(nv, nv);
            hess.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&(&h0 * tau));
            for i in 0..n {
                grad[2 * n + i] += tau * lambda * w[i];
                let g = cone(&z, i);
                let idx = [i, n + i, 2 * n + i];
                let dg = [-2.0 * z[i], -2.0 * z[n + i], 2.0 * z[2 * n + i]];
                let d2g = [-2.0, -2.0, 2.0];
                for p in 0..3 {
                    grad[idx[p]] -= dg[p] / g;
                    for q in 0..3 {
                        hess[(idx[p], idx[q])] += dg[p] * dg[q] / (g * g);
                    }
                    hess[(idx[p], idx[p])] -= d2g[p] / g;
                }
            }
            let step = match hess.clone().cholesky() {
                Some(ch) => -ch.solve(&grad),
                None => -hess.lu().solve(&grad).expect("barrier Hessian is nonsingular"),
            };
            let decrement = -grad.dot(&step);
            if decrement / 2.0 < 1e-13 {
                break;
            }
            let phi = |z: &DVector<f64>| barrier(z).map(|b| tau * objective(z) + b);
            let f0 = phi(&z).expect("iterate stays feasible");
            let mut s = 1.0;
            loop {
                let cand = &z + &step * s;
                if let Some(f1) = phi(&cand) {
                    if f1 <= f0 - 0.01 * s * decrement {
                        z = cand;
                        break;
                    }
                }
                s *= 0.5;
                if s < 1e-20 {
                    break;
                }
            }
            if s < 1e-20 {
                break;
            }
        }
        if nu / tau < 1e-11 * (1.0 + objective(&z)) {
            break;
        }
        tau *= 10.0;
    }
    let x: Vec<C64> = (0..n).map(|i| C64::new(z[i], z[n + i])).collect();
    let r = a * DVector::from_column_slice(&x) - DVector::from_column_slice(b);
    let obj = r.norm_squared() + lambda * x.iter().zip(w).map(|(xi, wi)| wi * xi.norm()).sum::<f64>();
    (obj, x)
}

/// Explicit `(Vᵀ ⊗ I)·Q` with complex entries.
pub fn dense_design(v: &CMat) -> CMat {
    let (n, k) = v.shape();
    let q = duplication_matrix(n);
    let q = q.map(|x| C64::new(x, 0.0));
    let kron = CMat::from_fn(n * k, n * n, |r, c| {
        let (rt, rn) = (r / n, r % n);
        let (ct, cn) = (c / n, c % n);
        if rn == cn {
            v[(ct, rt)]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    kron * q
}

/// Largest deviation of a noiseless scenario from its own inputs, rebuilt from
/// the spec: non-slack rows of `Y(t)·v` against the load injections and slack
/// rows of `v` against the substation series. Relative to the largest current.
pub fn ohm_deviation(spec: &ScenarioSpec, sc: &Scenario) -> f64 {
    let net = &sc.network;
    let loads = generate_loads(net, &spec.loads, spec.seed.wrapping_add(1), spec.slots).unwrap();
    let slack = net.slack_terminals();
    let slack_v = slack_voltage_series(&slack, spec.loads.slack_variation, spec.slots, spec.seed.wrapping_add(3));
    let index = sc.dataset.index();
    let slack_rows: Vec<usize> = slack.iter().map(|t| index.position(*t).unwrap()).collect();
    let scale = loads.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut worst = 0.0f64;
    for k in 0..sc.dataset.slots() {
        let (v, _) = sc.dataset.slot(k);
        let yv = sc.truth.ybus_at(k).unwrap().matrix() * &v;
        for r in 0..index.len() {
            let d = match slack_rows.iter().position(|&s| s == r) {
                Some(a) => (v[r] - slack_v[(a, k)]).norm(),
                None => (yv[r] - loads[(r, k)]).norm() / scale,
            };
            worst = worst.max(d);
        }
    }
    worst
}
