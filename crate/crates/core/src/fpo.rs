//! Fractional Pareto optimality through exchange cycles.
//!
//! For an allocation `x`, agent `k` can take chore `j ∈ x_i` at rate
//! `c_kj / c_ij`. The arc `i → k` carries the cheapest such rate. A cycle of
//! arcs whose rates multiply to less than one is an improving exchange, and
//! `x` is fPO exactly when none exists. Otherwise shortest multiplicative
//! path potentials give weights under which `x` is optimal.

use crate::check::{CheckReport, Witness};
use crate::error::Result;
use crate::instance::{Allocation, Instance};
use crate::rat::{one, sum, Rat};

/// `rate[i][k]`: cheapest `c_kj / c_ij` over `j ∈ x_i`, with the chore.
fn exchange_arcs(inst: &Instance, x: &Allocation) -> Vec<Vec<Option<(Rat, usize)>>> {
    let n = inst.n();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|k| {
                    if k == i {
                        return None;
                    }
                    x.bundle(i)
                        .iter()
                        .map(|&j| (inst.cost(k, j) / inst.cost(i, j), j))
                        .min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)))
                })
                .collect()
        })
        .collect()
}

enum Potentials {
    Feasible(Vec<Rat>),
    Cycle(Vec<usize>),
}

/// Multiplicative Bellman-Ford from a virtual source joined to every agent
/// with rate one. `d[k] ≤ d[i] · rate(i → k)` at a fixed point.
fn potentials(arcs: &[Vec<Option<(Rat, usize)>>]) -> Potentials {
    let n = arcs.len();
    let mut d = vec![one(); n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut last = None;
    for _ in 0..=n {
        last = None;
        for i in 0..n {
            for k in 0..n {
                if let Some((r, _)) = &arcs[i][k] {
                    let cand = &d[i] * r;
                    if cand < d[k] {
                        d[k] = cand;
                        pred[k] = Some(i);
                        last = Some(k);
                    }
                }
            }
        }
        if last.is_none() {
            return Potentials::Feasible(d);
        }
    }
    let mut v = last.expect("relaxation in round n+1");
    for _ in 0..n {
        v = pred[v].expect("relaxed vertex has a predecessor");
    }
    let mut cycle = vec![v];
    let mut u = pred[v].expect("on cycle");
    while u != v {
        cycle.push(u);
        u = pred[u].expect("on cycle");
    }
    cycle.reverse();
    Potentials::Cycle(cycle)
}

fn cycle_rate(arcs: &[Vec<Option<(Rat, usize)>>], agents: &[usize]) -> Option<Rat> {
    let mut acc = one();
    for t in 0..agents.len() {
        let (r, _) = arcs[agents[t]][agents[(t + 1) % agents.len()]].as_ref()?;
        acc *= r;
    }
    Some(acc)
}

/// Lexicographically first simple agent cycle with rate product below one.
fn enumerate_improving(arcs: &[Vec<Option<(Rat, usize)>>]) -> Option<Vec<usize>> {
    fn extend(
        arcs: &[Vec<Option<(Rat, usize)>>],
        path: &mut Vec<usize>,
        used: &mut [bool],
    ) -> Option<Vec<usize>> {
        let n = arcs.len();
        let start = path[0];
        let last = *path.last().unwrap();
        if path.len() >= 2 && arcs[last][start].is_some() {
            if let Some(r) = cycle_rate(arcs, path) {
                if r < one() {
                    return Some(path.clone());
                }
            }
        }
        for k in (start + 1)..n {
            if !used[k] && arcs[last][k].is_some() {
                used[k] = true;
                path.push(k);
                let found = extend(arcs, path, used);
                path.pop();
                used[k] = false;
                if found.is_some() {
                    return found;
                }
            }
        }
        None
    }
    let n = arcs.len();
    for s in 0..n {
        let mut used = vec![false; n];
        used[s] = true;
        if let Some(c) = extend(arcs, &mut vec![s], &mut used) {
            return Some(c);
        }
    }
    None
}

fn improving_cycle(arcs: &[Vec<Option<(Rat, usize)>>]) -> Option<Witness> {
    let agents = match potentials(arcs) {
        Potentials::Feasible(_) => return None,
        Potentials::Cycle(c) => c,
    };
    let agents = match cycle_rate(arcs, &agents) {
        Some(r) if r < one() => agents,
        _ => enumerate_improving(arcs)?,
    };
    let chores = (0..agents.len())
        .map(|t| arcs[agents[t]][agents[(t + 1) % agents.len()]].as_ref().unwrap().1)
        .collect();
    Some(Witness::Cycle { agents, chores })
}

/// Positive weights, largest entry one, with every `j ∈ x_i` attaining
/// `min_k w_k c_kj`; `None` iff an improving exchange cycle exists.
pub fn find_fpo_weights(inst: &Instance, x: &Allocation) -> Result<Option<Vec<Rat>>> {
    x.validate(inst.n(), inst.m())?;
    let arcs = exchange_arcs(inst, x);
    Ok(match potentials(&arcs) {
        Potentials::Cycle(_) => None,
        Potentials::Feasible(d) => {
            // Arcs i -> k give d[k] <= d[i] * c_kj / c_ij, i.e. w_i c_ij <= w_k c_kj
            // for w = 1/d. Scale so the largest weight is one.
            let dmin = d.iter().min().cloned().unwrap_or_else(one);
            Some(d.iter().map(|di| &dmin / di).collect())
        }
    })
}

/// fPO verdict. A passing report carries simplex-normalised weights, a failing
/// one an improving exchange cycle.
pub fn check_fpo(inst: &Instance, x: &Allocation) -> Result<CheckReport> {
    x.validate(inst.n(), inst.m())?;
    let arcs = exchange_arcs(inst, x);
    if let Some(cycle) = improving_cycle(&arcs) {
        return Ok(CheckReport::fail("fpo", cycle));
    }
    let w = find_fpo_weights(inst, x)?.expect("no improving cycle");
    let total = sum(&w);
    Ok(CheckReport::pass_with(
        "fpo",
        Witness::Weights(w.iter().map(|v| v / &total).collect()),
    ))
}

/// Whether `x` minimises `Σ w_i c_i(x_i)`: each chore sits with an agent of
/// least weighted cost.
pub fn certifies(inst: &Instance, x: &Allocation, w: &[Rat]) -> bool {
    (0..inst.n()).all(|i| {
        x.bundle(i).iter().all(|&j| {
            let mine = &w[i] * inst.cost(i, j);
            (0..inst.n()).all(|k| mine <= &w[k] * inst.cost(k, j))
        })
    })
}
