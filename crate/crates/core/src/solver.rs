//! FindpEF1: from an optimal allocation satisfying the two invariants, move
//! chores along shortest alternating paths of the reduced graph until the
//! allocation is (weighted) price-EF1. Unit entitlements give the unweighted
//! algorithm.

use std::collections::VecDeque;
use std::fmt::Write as _;

use num_traits::Zero;

use crate::check::{bundle_price, check_wpef1, p_hat};
use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::market::{is_optimal, reduce, ReducedGraph, TightGraph};
use crate::rat::{fmt_rat, Rat};

/// Entitlement-normalised price of the degree-one chores each agent is
/// forced to take.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RValues {
    pub r: Vec<Rat>,
    pub r_max: Rat,
    pub in_r: Vec<bool>,
}

impl RValues {
    pub fn members(&self) -> Vec<usize> {
        (0..self.r.len()).filter(|&i| self.in_r[i]).collect()
    }
}

pub fn r_values(g: &TightGraph, h: &ReducedGraph, alpha: &[Rat]) -> RValues {
    let n = g.n();
    let mut raw = vec![Rat::zero(); n];
    for &(j, i) in &h.forced {
        raw[i] += &g.prices[j];
    }
    let r: Vec<Rat> = raw.iter().zip(alpha).map(|(v, a)| v / a).collect();
    let r_max = r.iter().max().cloned().unwrap_or_else(Rat::zero);
    let in_r = r.iter().map(|v| v == &r_max).collect();
    RValues { r, r_max, in_r }
}

/// Matching that covers `chores` (a subset of the reduced graph's chores),
/// built by augmenting paths; chores are processed ascending and agents tried
/// in ascending order.
pub fn covering_matching(g: &TightGraph, chores: &[usize]) -> Result<Vec<(usize, usize)>> {
    fn augment(g: &TightGraph, j: usize, seen: &mut [bool], holder: &mut [Option<usize>]) -> bool {
        for &i in &g.agents_of[j] {
            if seen[i] {
                continue;
            }
            seen[i] = true;
            if holder[i].is_none_or(|k| augment(g, k, seen, holder)) {
                holder[i] = Some(j);
                return true;
            }
        }
        false
    }
    let mut holder: Vec<Option<usize>> = vec![None; g.n()];
    let mut sorted = chores.to_vec();
    sorted.sort_unstable();
    for &j in &sorted {
        let mut seen = vec![false; g.n()];
        if !augment(g, j, &mut seen, &mut holder) {
            return Err(Error::InvariantViolation(format!(
                "no matching covers chore {} of the reduced graph",
                j + 1
            )));
        }
    }
    let mut out: Vec<(usize, usize)> = holder
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect();
    out.sort_by_key(|&(_, j)| j);
    Ok(out)
}

fn normalised_price(p: &[Rat], x: &Allocation, alpha: &[Rat], i: usize) -> Rat {
    bundle_price(p, x.bundle(i)) / &alpha[i]
}

/// Checks both invariants, naming the first violation.
pub fn check_invariants(
    g: &TightGraph,
    h: &ReducedGraph,
    rv: &RValues,
    alpha: &[Rat],
    x: &Allocation,
) -> Result<()> {
    if !is_optimal(x, g) {
        return Err(Error::InvariantViolation("allocation uses a non-tight edge".into()));
    }
    for i in 0..g.n() {
        if rv.in_r[i] {
            let held = x.bundle(i).iter().filter(|&&j| h.contains(j)).count();
            if held > 1 {
                return Err(Error::InvariantViolation(format!(
                    "(I1): agent {} in R holds {held} reduced-graph chores",
                    i + 1
                )));
            }
        }
        if normalised_price(&g.prices, x, alpha, i) < rv.r_max {
            return Err(Error::InvariantViolation(format!(
                "(I2): agent {} is priced below r_max",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Builds a starting allocation from a witness `y` in which some agent of `R`
/// is price envy-free: agents outside `R` keep the reduced-graph chores they
/// can take, and the rest is matched to `R`. Witnesses are tried in order and
/// the first one meeting both invariants wins.
pub fn initial_allocation(
    g: &TightGraph,
    h: &ReducedGraph,
    rv: &RValues,
    alpha: &[Rat],
    witnesses: &[Option<Allocation>],
) -> Result<Allocation> {
    let n = g.n();
    let outside: Vec<bool> = rv.in_r.iter().map(|r| !r).collect();
    let (near, far): (Vec<usize>, Vec<usize>) = h
        .chores
        .iter()
        .partition(|&&j| g.agents_of[j].iter().any(|&i| outside[i]));
    let matching = covering_matching(g, &far)?;
    let mut last_err = Error::InvariantViolation("no witness for any agent in R".into());
    for i in rv.members() {
        let Some(y) = witnesses.get(i).and_then(Option::as_ref) else {
            continue;
        };
        let owners = y.owners(g.m());
        let mut x = Allocation::empty(n);
        for &(j, a) in &h.forced {
            x.insert(a, j);
        }
        for &j in &near {
            let a = if outside[owners[j]] {
                owners[j]
            } else {
                *g.agents_of[j].iter().find(|&&a| outside[a]).expect("adjacent outside R")
            };
            x.insert(a, j);
        }
        for &(a, j) in &matching {
            x.insert(a, j);
        }
        match check_invariants(g, h, rv, alpha, &x) {
            Ok(()) => return Ok(x),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// One transfer step of the algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    /// `i_0, ..., i_ℓ`.
    pub agents: Vec<usize>,
    /// `j_1, ..., j_ℓ`.
    pub chores: Vec<usize>,
    pub pivot: usize,
    pub phi_before: u64,
    pub phi_after: u64,
}

impl Step {
    /// `iter 1: path 1 -[2]-> 2 pivot 0 phi 26 -> 20`, 1-based.
    pub fn trace_line(&self, iteration: usize) -> String {
        let mut s = format!("iter {iteration}: path {}", self.agents[0] + 1);
        for (j, i) in self.chores.iter().zip(&self.agents[1..]) {
            let _ = write!(s, " -[{}]-> {}", j + 1, i + 1);
        }
        let _ = write!(s, " pivot {} phi {} -> {}", self.pivot, self.phi_before, self.phi_after);
        s
    }
}

/// Agent levels, levels of held reduced-graph chores, and the potential.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Levels {
    pub agents: Vec<usize>,
    /// `None` for chores outside the reduced graph.
    pub chores: Vec<Option<usize>>,
    pub critical: Vec<usize>,
    pub phi: u64,
}

#[derive(Debug, Clone)]
pub struct SolverState<'a> {
    inst: &'a Instance,
    g: TightGraph,
    h: ReducedGraph,
    rv: RValues,
    x: Allocation,
}

/// Output of [`find_pef1`].
#[derive(Debug, Clone)]
pub struct Pef1Run {
    pub allocation: Allocation,
    pub steps: Vec<Step>,
    /// Levels before the first step and after each step.
    pub levels: Vec<Levels>,
    pub r_max: Rat,
}

impl Pef1Run {
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }

    pub fn phi_start(&self) -> u64 {
        self.levels[0].phi
    }

    /// Agent levels and held-chore levels never decrease between steps.
    pub fn levels_monotone(&self) -> bool {
        self.levels.windows(2).all(|w| {
            let agents = w[0].agents.iter().zip(&w[1].agents).all(|(a, b)| a <= b);
            let chores = w[0].chores.iter().zip(&w[1].chores).all(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => a <= b,
                _ => true,
            });
            agents && chores
        })
    }

    pub fn trace(&self) -> Vec<String> {
        self.steps
            .iter()
            .enumerate()
            .map(|(t, s)| s.trace_line(t + 1))
            .collect()
    }
}

/// `n³ + n(n − 1)`, the largest possible starting potential.
pub fn iteration_bound(n: usize) -> u64 {
    let n = n as u64;
    n * n * n + n * (n - 1)
}

impl<'a> SolverState<'a> {
    /// Validates forest structure, optimality and both invariants.
    pub fn new(inst: &'a Instance, g: TightGraph, x: Allocation) -> Result<Self> {
        x.validate(inst.n(), inst.m())?;
        if !g.is_forest() {
            return Err(Error::NotAForest);
        }
        let h = reduce(&g)?;
        let rv = r_values(&g, &h, inst.entitlements());
        check_invariants(&g, &h, &rv, inst.entitlements(), &x)?;
        Ok(Self { inst, g, h, rv, x })
    }

    pub fn allocation(&self) -> &Allocation {
        &self.x
    }

    pub fn r_values(&self) -> &RValues {
        &self.rv
    }

    pub fn reduced(&self) -> &ReducedGraph {
        &self.h
    }

    fn alpha(&self) -> &[Rat] {
        self.inst.entitlements()
    }

    fn owners(&self) -> Vec<usize> {
        self.x.owners(self.g.m())
    }

    pub fn unmatched(&self) -> Vec<usize> {
        (0..self.g.n())
            .filter(|&i| self.rv.in_r[i] && !self.x.bundle(i).iter().any(|&j| self.h.contains(j)))
            .collect()
    }

    pub fn violators(&self) -> Vec<usize> {
        (0..self.g.n())
            .filter(|&i| p_hat(&self.g.prices, self.x.bundle(i)) / &self.alpha()[i] > self.rv.r_max)
            .collect()
    }

    /// Multi-source BFS over alternating steps `agent -> chore held by someone
    /// else -> its holder`. Returns distance and BFS parent `(agent, chore)`.
    fn bfs(&self, sources: &[usize]) -> (Vec<Option<usize>>, Vec<Option<(usize, usize)>>) {
        let n = self.g.n();
        let owners = self.owners();
        let mut dist = vec![None; n];
        let mut parent = vec![None; n];
        let mut queue = VecDeque::new();
        for &s in sources {
            dist[s] = Some(0);
            queue.push_back(s);
        }
        while let Some(a) = queue.pop_front() {
            for &j in &self.h.chores_of[a] {
                let b = owners[j];
                if b != a && dist[b].is_none() {
                    dist[b] = Some(dist[a].unwrap() + 1);
                    parent[b] = Some((a, j));
                    queue.push_back(b);
                }
            }
        }
        (dist, parent)
    }

    pub fn levels(&self) -> Result<Levels> {
        let n = self.g.n();
        let (dist, _) = self.bfs(&self.unmatched());
        let agents: Vec<usize> = dist
            .iter()
            .enumerate()
            .map(|(i, d)| {
                d.ok_or_else(|| {
                    Error::InvariantViolation(format!("agent {} unreachable from U", i + 1))
                })
            })
            .collect::<Result<_>>()?;
        let owners = self.owners();
        let mut chores = vec![None; self.g.m()];
        let mut critical = vec![0usize; n];
        for &j in &self.h.chores {
            let holder = owners[j];
            let lvl = self.g.agents_of[j]
                .iter()
                .filter(|&&a| a != holder)
                .map(|&a| agents[a] + 1)
                .min()
                .expect("reduced-graph chores have degree two");
            chores[j] = Some(lvl);
            if lvl == agents[holder] {
                critical[holder] += 1;
            }
        }
        let nn = n as u64;
        let phi = (0..n)
            .map(|i| nn * (nn - agents[i] as u64) + critical[i] as u64)
            .sum();
        Ok(Levels {
            agents,
            chores,
            critical,
            phi,
        })
    }

    pub fn is_pef1(&self) -> bool {
        check_wpef1(&self.g.prices, &self.x, self.alpha()).verdict
    }

    /// Shortest alternating path from `U` to `V`, lowest indices first.
    pub fn shortest_path(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let v = self.violators();
        let (dist, parent) = self.bfs(&self.unmatched());
        let target = v
            .iter()
            .filter(|&&i| dist[i].is_some())
            .min_by_key(|&&i| (dist[i], i))
            .copied()
            .ok_or_else(|| Error::InvariantViolation("no alternating path from U to V".into()))?;
        let mut agents = vec![target];
        let mut chores = Vec::new();
        let mut cur = target;
        while let Some((a, j)) = parent[cur] {
            agents.push(a);
            chores.push(j);
            cur = a;
        }
        agents.reverse();
        chores.reverse();
        Ok((agents, chores))
    }

    /// Largest `a ∈ [1, ℓ−1]` with `r_max ≥ p(x_{i_a} ∪ {j_{a+1}} ∖ {j_a})/α`, else 0.
    fn pivot(&self, agents: &[usize], chores: &[usize]) -> usize {
        let l = chores.len();
        let p = &self.g.prices;
        for a in (1..l).rev() {
            let i = agents[a];
            let price = bundle_price(p, self.x.bundle(i)) + &p[chores[a]] - &p[chores[a - 1]];
            if self.rv.r_max >= price / &self.alpha()[i] {
                return a;
            }
        }
        0
    }

    fn transfer(&mut self, agents: &[usize], chores: &[usize], a: usize) {
        for k in (a + 1)..=chores.len() {
            let j = chores[k - 1];
            self.x.remove(agents[k], j);
            self.x.insert(agents[k - 1], j);
        }
    }
}

/// Runs the transfer loop to a (weighted) price-EF1 optimal allocation,
/// checking the invariants, the strict decrease of the potential and the
/// iteration bound at every step.
pub fn find_pef1(mut state: SolverState<'_>) -> Result<Pef1Run> {
    let bound = iteration_bound(state.g.n());
    let mut levels = vec![state.levels()?];
    let mut steps = Vec::new();
    while !state.is_pef1() {
        if steps.len() as u64 >= bound {
            return Err(Error::InvariantViolation(format!(
                "iteration bound {bound} exceeded"
            )));
        }
        let (agents, chores) = state.shortest_path()?;
        let a = state.pivot(&agents, &chores);
        state.transfer(&agents, &chores, a);
        check_invariants(&state.g, &state.h, &state.rv, state.alpha(), &state.x)?;
        let after = state.levels()?;
        let before = levels.last().unwrap().phi;
        if after.phi >= before {
            return Err(Error::InvariantViolation(format!(
                "potential did not decrease ({before} -> {})",
                after.phi
            )));
        }
        steps.push(Step {
            agents,
            chores,
            pivot: a,
            phi_before: before,
            phi_after: after.phi,
        });
        levels.push(after);
    }
    Ok(Pef1Run {
        allocation: state.x,
        steps,
        levels,
        r_max: state.rv.r_max,
    })
}

/// Human-readable summary of the state, used by `--trace`.
pub fn describe(g: &TightGraph, rv: &RValues) -> String {
    let prices: Vec<String> = g.prices.iter().map(fmt_rat).collect();
    let r: Vec<String> = rv.members().iter().map(|i| (i + 1).to_string()).collect();
    format!(
        "prices ({}) r_max {} R {{{}}}",
        prices.join(", "),
        fmt_rat(&rv.r_max),
        r.join(",")
    )
}
