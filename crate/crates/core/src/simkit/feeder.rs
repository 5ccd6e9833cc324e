use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NetworkSpec, PhaseMix};
use crate::netmodel::{Line, Network, Node, Phase, Switch};
use crate::{CMat, Error, Result, C64};

const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    r[0] + (r[1] - r[0]) * rng.gen::<f64>()
}

fn child_phases(rng: &mut ChaCha8Rng, mix: PhaseMix, parent: &[Phase]) -> Vec<Phase> {
    match mix {
        PhaseMix::Single => vec![Phase::A],
        PhaseMix::Three => ALL.to_vec(),
        PhaseMix::Mixed => {
            let u: f64 = rng.gen();
            if u < 0.5 || parent.len() == 1 {
                parent.to_vec()
            } else if u < 0.75 && parent.len() == 3 {
                let drop = rng.gen_range(0..3);
                parent.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, p)| *p).collect()
            } else {
                vec![parent[rng.gen_range(0..parent.len())]]
            }
        }
    }
}

fn impedance(rng: &mut ChaCha8Rng, spec: &NetworkSpec, n: usize) -> CMat {
    let z = C64::new(uniform(rng, spec.r_range), uniform(rng, spec.x_range));
    let m = spec.mutual;
    CMat::from_fn(n, n, |i, j| if i == j { z } else { z * m })
}

fn subtree(parents: &[usize], root: usize) -> Vec<bool> {
    let n = parents.len();
    let mut inside = vec![false; n];
    inside[root] = true;
    // parents[k] < k, so one forward pass suffices
    for k in (root + 1)..n {
        if inside[parents[k]] {
            inside[k] = true;
        }
    }
    inside
}

/// Random recursive tree rooted at the slack node 0.
///
/// Tree edge `(parent(k), k)` is either line `L{k}` or, for `network.switches`
/// randomly chosen edges, the closed switch `S{j}`. Tie switch `T{j}` (open)
/// joins the child end of `S{j}` to a node outside its subtree, so that closing
/// `T{j}` and opening `S{j}` keeps the feeder connected and radial.
pub fn generate_feeder(spec: &NetworkSpec, seed: u64) -> Result<Network> {
    let n = spec.nodes;
    if n < 2 {
        return Err(Error::InvalidScenario(format!("need at least 2 nodes, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parents = vec![0usize; n];
    let mut phases: Vec<Vec<Phase>> = vec![match spec.phases {
        PhaseMix::Single => vec![Phase::A],
        _ => ALL.to_vec(),
    }];
    for k in 1..n {
        parents[k] = rng.gen_range(0..k);
        let ph = child_phases(&mut rng, spec.phases, &phases[parents[k]]);
        phases.push(ph);
    }

    let mut edges: Vec<usize> = (1..n).collect();
    edges.shuffle(&mut rng);
    let mut switch_edges: Vec<usize> = Vec::new();
    let mut ties: Vec<(usize, usize)> = Vec::new();
    for &c in &edges {
        if switch_edges.len() == spec.switches {
            break;
        }
        if switch_edges.len() < spec.ties {
            let inside = subtree(&parents, c);
            let cands: Vec<usize> = (0..n)
                .filter(|&q| !inside[q] && q != parents[c])
                .filter(|&q| phases[c].iter().all(|p| phases[q].contains(p)))
                .filter(|&q| !ties.iter().any(|&(a, b)| (a, b) == (c, q) || (a, b) == (q, c)))
                .collect();
            if cands.is_empty() {
                continue;
            }
            let q = cands[rng.gen_range(0..cands.len())];
            ties.push((c, q));
        }
        switch_edges.push(c);
    }
    if switch_edges.len() < spec.switches {
        return Err(Error::InvalidScenario(format!(
            "cannot place {} switches with {} tie switches on this feeder",
            spec.switches, spec.ties
        )));
    }

    let mut lines = Vec::new();
    let mut switches = Vec::new();
    for k in 1..n {
        let ph = phases[k].clone();
        if let Some(j) = switch_edges.iter().position(|&c| c == k) {
            switches.push(Switch {
                id: format!("S{j}"),
                from: parents[k] as u32,
                to: k as u32,
                phases: ph,
                admittance: spec.switch_admittance,
                closed: true,
            });
        } else {
            let z = impedance(&mut rng, spec, ph.len());
            lines.push(Line {
                id: format!("L{k}"),
                from: parents[k] as u32,
                to: k as u32,
                phases: ph,
                z,
                ys: None,
                in_service: true,
            });
        }
    }
    for (j, &(c, q)) in ties.iter().enumerate() {
        switches.push(Switch {
            id: format!("T{j}"),
            from: c as u32,
            to: q as u32,
            phases: phases[c].clone(),
            admittance: spec.switch_admittance,
            closed: false,
        });
    }

    let extra = if spec.loopy { spec.extra_lines.max(1) } else { spec.extra_lines };
    let mut adjacent: Vec<(usize, usize)> = (1..n).map(|k| (parents[k], k)).collect();
    adjacent.extend(ties.iter().copied());
    let mut placed = 0;
    let mut attempts = 0;
    while placed < extra {
        attempts += 1;
        if attempts > 1000 * (extra + 1) {
            return Err(Error::InvalidScenario(format!("cannot place {extra} loop-closing lines")));
        }
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b || adjacent.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a)) {
            continue;
        }
        let ph: Vec<Phase> = phases[a].iter().copied().filter(|p| phases[b].contains(p)).collect();
        if ph.is_empty() {
            continue;
        }
        let z = impedance(&mut rng, spec, ph.len());
        lines.push(Line {
            id: format!("X{placed}"),
            from: a as u32,
            to: b as u32,
            phases: ph,
            z,
            ys: None,
            in_service: true,
        });
        adjacent.push((a, b));
        placed += 1;
    }

    let net = Network {
        nodes: phases
            .into_iter()
            .enumerate()
            .map(|(id, phases)| Node { id: id as u32, phases })
            .collect(),
        lines,
        switches,
        slack: 0,
    };
    net.validate()?;
    Ok(net)
}
