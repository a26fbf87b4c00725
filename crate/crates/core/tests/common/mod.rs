//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use chorefair::lp::{Cmp, Lp, LpOutcome};
use chorefair::rat::{int, one, rat, zero, Rat};
use chorefair::{Allocation, Instance};
use proptest::prelude::*;

/// Every allocation of `m` chores to `n` agents, in odometer order with the
/// last chore varying fastest.
pub fn all_allocations(n: usize, m: usize) -> Vec<Allocation> {
    let mut out = Vec::new();
    let mut owners = vec![0usize; m];
    loop {
        out.push(Allocation::from_owners(n, &owners));
        let mut pos = m;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            owners[pos] += 1;
            if owners[pos] < n {
                break;
            }
            owners[pos] = 0;
        }
    }
}

pub fn cost(inst: &Instance, i: usize, bundle: &std::collections::BTreeSet<usize>) -> Rat {
    bundle.iter().map(|&j| inst.cost(i, j).clone()).sum()
}

/// Weighted EF1 straight from the definition: for every ordered pair some
/// single removal (or none) ends the envy.
pub fn ef1_naive(inst: &Instance, x: &Allocation) -> bool {
    let n = inst.n();
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            let envied = cost(inst, i, x.bundle(k)) / inst.entitlement(k);
            let own = cost(inst, i, x.bundle(i));
            let ok = &own / inst.entitlement(i) <= envied
                || x
                    .bundle(i)
                    .iter()
                    .any(|&j| (&own - inst.cost(i, j)) / inst.entitlement(i) <= envied);
            if !ok {
                return false;
            }
        }
    }
    true
}

pub fn dominates(inst: &Instance, y: &Allocation, x: &Allocation) -> bool {
    let mut strict = false;
    for i in 0..inst.n() {
        let (cy, cx) = (cost(inst, i, y.bundle(i)), cost(inst, i, x.bundle(i)));
        if cy > cx {
            return false;
        }
        strict |= cy < cx;
    }
    strict
}

/// Pareto optimality by comparing against every allocation.
pub fn po_naive(inst: &Instance, x: &Allocation) -> bool {
    !all_allocations(inst.n(), inst.m())
        .iter()
        .any(|y| dominates(inst, y, x))
}

/// Fractional Pareto optimality as feasibility of `w ≥ 1` with each chore
/// held by an agent minimising `w_i c_ij`.
pub fn fpo_lp(inst: &Instance, x: &Allocation) -> bool {
    let n = inst.n();
    let mut lp = Lp::new(n);
    for i in 0..n {
        let mut row = vec![zero(); n];
        row[i] = one();
        lp.row(row, Cmp::Ge, one());
    }
    for i in 0..n {
        for &j in x.bundle(i) {
            for k in (0..n).filter(|&k| k != i) {
                let mut row = vec![zero(); n];
                row[i] = inst.cost(i, j).clone();
                row[k] = -inst.cost(k, j).clone();
                lp.row(row, Cmp::Le, zero());
            }
        }
    }
    !matches!(lp.solve(), LpOutcome::Infeasible)
}

/// Exact minimum of `Σ_i w_i c_i(x_i)` over all integral allocations.
pub fn min_weighted_cost(inst: &Instance, w: &[Rat]) -> Rat {
    all_allocations(inst.n(), inst.m())
        .iter()
        .map(|x| weighted(inst, w, x))
        .min()
        .expect("at least one allocation")
}

pub fn weighted(inst: &Instance, w: &[Rat], x: &Allocation) -> Rat {
    (0..inst.n()).map(|i| &w[i] * cost(inst, i, x.bundle(i))).sum()
}

pub fn ints(rows: &[&[i64]]) -> Instance {
    Instance::from_ints(rows).unwrap()
}

/// Random integer-cost instance with `n ∈ agents`, `m ∈ chores`, costs in
/// `1..=max_cost` and optional entitlements in `1..=3`.
pub fn instance(
    agents: std::ops::RangeInclusive<usize>,
    chores: std::ops::RangeInclusive<usize>,
    max_cost: i64,
    weighted: bool,
) -> impl Strategy<Value = Instance> {
    (agents, chores).prop_flat_map(move |(n, m)| {
        let costs = proptest::collection::vec(proptest::collection::vec(1..=max_cost, m), n);
        let alpha = proptest::collection::vec(1..=3i64, n);
        (costs, alpha).prop_map(move |(c, a)| {
            let c: Vec<Vec<Rat>> = c.into_iter().map(|r| r.into_iter().map(int).collect()).collect();
            if weighted {
                Instance::with_entitlements(c, a.into_iter().map(int).collect()).unwrap()
            } else {
                Instance::new(c).unwrap()
            }
        })
    })
}

/// Instance together with an arbitrary allocation of it.
pub fn instance_and_allocation(
    agents: std::ops::RangeInclusive<usize>,
    chores: std::ops::RangeInclusive<usize>,
    weighted: bool,
) -> impl Strategy<Value = (Instance, Allocation)> {
    instance(agents, chores, 10, weighted).prop_flat_map(|inst| {
        let (n, m) = (inst.n(), inst.m());
        proptest::collection::vec(0..n, m).prop_map(move |owners| (inst.clone(), Allocation::from_owners(n, &owners)))
    })
}

/// Rational point of the simplex from nonnegative integer masses (all-zero
/// masses map to the barycenter). Small masses make vertices and faces common.
pub fn simplex_point(masses: &[u32]) -> Vec<Rat> {
    let total: u32 = masses.iter().sum();
    if total == 0 {
        return vec![rat(1, masses.len() as i64); masses.len()];
    }
    masses.iter().map(|&k| rat(k as i64, total as i64)).collect()
}

pub fn masses(n: usize) -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::vec(prop_oneof![3 => Just(0u32), 5 => 1..20u32], n)
}
