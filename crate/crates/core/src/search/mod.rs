//! Weight search: the colour oracle and the search for a weight vector at
//! which every agent can be made price envy-free, plus the end-to-end solve
//! pipeline and the face enumeration of the tightness arrangement.

pub mod cells;
pub mod pipeline;

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::lp::{Cmp, Lp};
use crate::market::{enumerate_optima, shrink_unchecked, tight_graph, ShrunkWeights, TightGraph, DEFAULT_OPTIMA_CAP};
use crate::par;
use crate::rat::{int, one, rat, zero, Rat};

pub use cells::{enumerate_cells, Face};
pub use pipeline::{solve, solve_bruteforce, Certificate, Checks, Method, SolveOptions, Solution};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchBudget {
    /// Finest subdivision has `2^max_depth` steps per edge.
    pub max_depth: u32,
    /// Cap on constraint subsets examined when generating vertices.
    pub max_candidates: u64,
    pub wall_clock: Duration,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_depth: 3,
            max_candidates: 2_000_000,
            wall_clock: Duration::from_secs(120),
        }
    }
}

/// Agents that are (weighted) price envy-free in some optimal allocation,
/// with the first such allocation for each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KkmColors {
    pub members: Vec<bool>,
    pub witnesses: Vec<Option<Allocation>>,
}

impl KkmColors {
    pub fn all(&self) -> bool {
        self.members.iter().all(|&b| b)
    }

    pub fn agents(&self) -> Vec<usize> {
        (0..self.members.len()).filter(|&i| self.members[i]).collect()
    }
}

/// Colour oracle at shrunk weights `shrunk`.
pub fn kkm_colors_shrunk(inst: &Instance, shrunk: &[Rat]) -> Result<KkmColors> {
    let g = tight_graph(inst, shrunk);
    colors_on(inst, &g)
}

fn colors_on(inst: &Instance, g: &TightGraph) -> Result<KkmColors> {
    let n = inst.n();
    let alpha = inst.entitlements();
    let mut witnesses: Vec<Option<Allocation>> = vec![None; n];
    let mut open = n;
    for x in enumerate_optima(g, DEFAULT_OPTIMA_CAP)? {
        let norm: Vec<Rat> = (0..n)
            .map(|i| crate::check::bundle_price(&g.prices, x.bundle(i)) / &alpha[i])
            .collect();
        let low = norm.iter().min().expect("n >= 1");
        for i in 0..n {
            if witnesses[i].is_none() && &norm[i] == low {
                witnesses[i] = Some(x.clone());
                open -= 1;
            }
        }
        if open == 0 {
            break;
        }
    }
    Ok(KkmColors {
        members: witnesses.iter().map(Option::is_some).collect(),
        witnesses,
    })
}

/// Colour oracle at simplex weights `w` shrunk by `τ`.
pub fn kkm_colors(inst: &Instance, w: &[Rat], tau: &Rat) -> Result<KkmColors> {
    let sw = crate::market::shrink(inst, w, tau)?;
    kkm_colors_shrunk(inst, &sw.shrunk)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchPhase {
    Candidate,
    Subdivision,
    Region,
}

impl SearchPhase {
    pub fn name(self) -> &'static str {
        match self {
            SearchPhase::Candidate => "candidate",
            SearchPhase::Subdivision => "subdivision",
            SearchPhase::Region => "region",
        }
    }
}

#[derive(Debug, Clone)]
pub struct WeightSearch {
    pub weights: ShrunkWeights,
    pub colors: KkmColors,
    pub phase: SearchPhase,
}

/// One tightness hyperplane `w′_a c_aj = w′_b c_bj` (`a < b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hyperplane {
    pub a: usize,
    pub b: usize,
    pub chore: usize,
}

impl Hyperplane {
    pub fn coeffs(&self, inst: &Instance) -> Vec<Rat> {
        let mut v = vec![zero(); inst.n()];
        v[self.a] = inst.cost(self.a, self.chore).clone();
        v[self.b] = -inst.cost(self.b, self.chore).clone();
        v
    }

    pub fn eval(&self, inst: &Instance, shrunk: &[Rat]) -> Rat {
        &shrunk[self.a] * inst.cost(self.a, self.chore) - &shrunk[self.b] * inst.cost(self.b, self.chore)
    }
}

pub fn hyperplanes(inst: &Instance) -> Vec<Hyperplane> {
    let n = inst.n();
    let mut out = Vec::new();
    for chore in 0..inst.m() {
        for a in 0..n {
            for b in (a + 1)..n {
                out.push(Hyperplane { a, b, chore });
            }
        }
    }
    out
}

#[cfg(test)]
/// Constraint `k < hs.len()` is a hyperplane, otherwise the facet
/// `w′_{k − hs.len()} = τ`.
fn constraint_row(inst: &Instance, hs: &[Hyperplane], tau: &Rat, k: usize) -> (Vec<Rat>, Rat) {
    if k < hs.len() {
        (hs[k].coeffs(inst), zero())
    } else {
        let mut v = vec![zero(); inst.n()];
        v[k - hs.len()] = one();
        (v, tau.clone())
    }
}

/// Floating-point screen for `arrangement_vertices`: true only when the
/// approximate vertex misses a constraint by a margin far above rounding
/// error, so exact arithmetic would reject it too.
fn clearly_rejected(costs: &[Vec<f64>], hs: &[Hyperplane], tau: f64, sub: &[usize], relevant: bool) -> bool {
    const SLACK: f64 = 1e-9;
    if !(tau >= 1e-6) {
        return false;
    }
    let n = costs.len();
    let mut w = vec![f64::NAN; n];
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut pinned = vec![false; n];
    for &k in sub {
        if k < hs.len() {
            let h = hs[k];
            let ratio = costs[h.a][h.chore] / costs[h.b][h.chore];
            adj[h.a].push((h.b, ratio));
            adj[h.b].push((h.a, 1.0 / ratio));
        } else {
            pinned[k - hs.len()] = true;
        }
    }
    let mut scale = vec![f64::NAN; n];
    let mut free = Vec::new();
    let mut fixed = 0.0;
    for root in 0..n {
        if !scale[root].is_nan() {
            continue;
        }
        scale[root] = 1.0;
        let mut tree = vec![root];
        let mut head = 0;
        while head < tree.len() {
            let u = tree[head];
            head += 1;
            for &(v, r) in &adj[u] {
                if scale[v].is_nan() {
                    scale[v] = scale[u] * r;
                    tree.push(v);
                }
            }
        }
        match tree.iter().find(|&&i| pinned[i]) {
            Some(&p) => {
                for &i in &tree {
                    w[i] = tau * scale[i] / scale[p];
                    fixed += w[i];
                }
            }
            None => free.extend(tree),
        }
    }
    let weight: f64 = free.iter().map(|&i| scale[i]).sum();
    for &i in &free {
        w[i] = scale[i] * (1.0 - fixed) / weight;
    }
    if !w.iter().all(|v| v.is_finite()) {
        return false;
    }
    if w.iter().any(|&v| v < tau - SLACK) {
        return true;
    }
    relevant
        && sub.iter().filter(|&&k| k < hs.len()).any(|&k| {
            let h = hs[k];
            let tight = w[h.a] * costs[h.a][h.chore];
            (0..n).any(|i| w[i] * costs[i][h.chore] < tight * (1.0 - SLACK))
        })
}

/// The unique point where the constraints in `sub` and `Σ w′ = 1` all hold,
/// if there is one. Hyperplanes fix ratios between agents, so the point is
/// found by propagating ratios along a spanning forest: each tree holds at
/// most one facet, and the single tree without one takes up the slack.
fn vertex_of(inst: &Instance, hs: &[Hyperplane], tau: &Rat, sub: &[usize]) -> Option<Vec<Rat>> {
    let n = inst.n();
    let mut adj: Vec<Vec<(usize, Rat)>> = vec![Vec::new(); n];
    let mut pinned = vec![false; n];
    for &k in sub {
        if k < hs.len() {
            let h = hs[k];
            let ratio = inst.cost(h.a, h.chore) / inst.cost(h.b, h.chore);
            adj[h.b].push((h.a, one() / &ratio));
            adj[h.a].push((h.b, ratio));
        } else if std::mem::replace(&mut pinned[k - hs.len()], true) {
            return None;
        }
    }
    // scale[i] is w′_i relative to the root of its tree
    let mut scale: Vec<Option<Rat>> = vec![None; n];
    let mut w: Vec<Option<Rat>> = vec![None; n];
    let mut free: Option<Vec<usize>> = None;
    for root in 0..n {
        if scale[root].is_some() {
            continue;
        }
        scale[root] = Some(one());
        let mut tree = vec![root];
        let mut edges = 0;
        let mut head = 0;
        while head < tree.len() {
            let u = tree[head];
            head += 1;
            for (v, r) in &adj[u] {
                edges += 1;
                if scale[*v].is_none() {
                    scale[*v] = Some(scale[u].as_ref().unwrap() * r);
                    tree.push(*v);
                }
            }
        }
        if edges / 2 != tree.len() - 1 {
            return None;
        }
        let pins: Vec<usize> = tree.iter().copied().filter(|&i| pinned[i]).collect();
        match pins.as_slice() {
            [] if free.is_none() => free = Some(tree),
            [p] => {
                let unit = tau / scale[*p].as_ref().unwrap();
                for &i in &tree {
                    w[i] = Some(scale[i].as_ref().unwrap() * &unit);
                }
            }
            _ => return None,
        }
    }
    let tree = free?;
    let fixed: Rat = w.iter().flatten().sum();
    let weight: Rat = tree.iter().map(|&i| scale[i].clone().unwrap()).sum();
    let unit = (one() - fixed) / weight;
    for &i in &tree {
        w[i] = Some(scale[i].as_ref().unwrap() * &unit);
    }
    w.into_iter().collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|t| (n - t) as f64 / (t + 1) as f64).product()
}

fn subsets(len: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(len: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..len {
            if len - v < k - cur.len() {
                break;
            }
            cur.push(v);
            rec(len, k, v + 1, cur, out);
            cur.pop();
        }
    }
    rec(len, k, 0, &mut cur, &mut out);
    out
}

/// Vertices of the arrangement of tightness hyperplanes and simplex facets,
/// as shrunk weights with every entry at least `τ`, in first-found order.
/// With `relevant`, only vertices where each chosen hyperplane joins two
/// agents that both attain the chore's price are kept.
pub fn arrangement_vertices(
    inst: &Instance,
    tau: &Rat,
    relevant: bool,
    max_candidates: u64,
) -> Result<Vec<Vec<Rat>>> {
    let n = inst.n();
    if n == 1 {
        return Ok(vec![vec![one()]]);
    }
    let hs = hyperplanes(inst);
    let total = hs.len() + n;
    let needed = binomial(total, n - 1);
    if needed > max_candidates as f64 {
        return Err(Error::BudgetExceeded {
            what: "arrangement vertex enumeration",
            needed,
            budget: max_candidates,
        });
    }
    let subs = subsets(total, n - 1);
    let approx: Vec<Vec<f64>> = inst
        .costs()
        .iter()
        .map(|row| row.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect())
        .collect();
    let tau_f = tau.to_f64().unwrap_or(f64::NAN);
    let found = par::map(&subs, |sub| {
        if clearly_rejected(&approx, &hs, tau_f, sub, relevant) {
            return None;
        }
        let w = vertex_of(inst, &hs, tau, sub)?;
        if w.iter().any(|v| v < tau) {
            return None;
        }
        if relevant {
            for &k in sub.iter().filter(|&&k| k < hs.len()) {
                let h = hs[k];
                let tight = &w[h.a] * inst.cost(h.a, h.chore);
                if (0..n).any(|i| &w[i] * inst.cost(i, h.chore) < tight) {
                    return None;
                }
            }
        }
        Some(w)
    });
    let mut seen = BTreeSet::new();
    Ok(found
        .into_iter()
        .flatten()
        .filter(|w| seen.insert(w.clone()))
        .collect())
}

/// Rows `coeff · w′ ≤ 0` making `x` optimal: each chore's holder has the
/// least weighted cost.
fn optimality_rows(inst: &Instance, x: &Allocation) -> Vec<Vec<Rat>> {
    let n = inst.n();
    let mut rows = Vec::new();
    for a in 0..n {
        for &j in x.bundle(a) {
            for b in (0..n).filter(|&b| b != a) {
                let mut v = vec![zero(); n];
                v[a] = inst.cost(a, j).clone();
                v[b] = -inst.cost(b, j).clone();
                rows.push(v);
            }
        }
    }
    rows
}

/// Rows making agent `i` price envy-free in `x` (valid where `x` is optimal,
/// since then `p(x_k) = w′_k c_k(x_k)`).
fn envy_rows(inst: &Instance, x: &Allocation, i: usize) -> Vec<Vec<Rat>> {
    let n = inst.n();
    let norm = |k: usize| inst.cost_of(k, x.bundle(k)) / inst.entitlement(k);
    let own = norm(i);
    (0..n)
        .filter(|&k| k != i)
        .map(|k| {
            let mut v = vec![zero(); n];
            v[i] = own.clone();
            v[k] = -norm(k);
            v
        })
        .collect()
}

/// A point `w′` of the shrunk simplex satisfying every homogeneous row.
fn region_point(n: usize, tau: &Rat, rows: &[Vec<Rat>]) -> Option<Vec<Rat>> {
    let mut lp = Lp::new(n);
    for row in rows {
        let shift = -(row.iter().fold(zero(), |s, v| s + v) * tau);
        lp.row(row.clone(), Cmp::Le, shift);
    }
    lp.row(vec![one(); n], Cmp::Eq, one() - tau * int(n as i64));
    let u = lp.solve().point()?.to_vec();
    Some(u.iter().map(|v| v + tau).collect())
}

fn accept(inst: &Instance, tau: &Rat, shrunk: Vec<Rat>, phase: SearchPhase) -> Result<Option<WeightSearch>> {
    let colors = kkm_colors_shrunk(inst, &shrunk)?;
    if !colors.all() {
        return Ok(None);
    }
    let weights = ShrunkWeights::from_shrunk(shrunk, tau.clone())?;
    Ok(Some(WeightSearch {
        weights,
        colors,
        phase,
    }))
}

fn first_accepted(
    inst: &Instance,
    tau: &Rat,
    candidates: &[Vec<Rat>],
    phase: SearchPhase,
) -> Result<Option<WeightSearch>> {
    let hit = par::find_first_in(candidates, |w| match accept(inst, tau, w.clone(), phase) {
        Ok(Some(found)) => Some(Ok(found)),
        Ok(None) => None,
        Err(e) => Some(Err(e)),
    });
    hit.map(|(_, r)| r).transpose()
}

/// Searches for weights at which every agent is coloured. Candidates are
/// tried in order: barycenter and simplex corners, relevant arrangement
/// vertices, subdivision cells, and finally exact region programs around
/// each relevant vertex. Every hit is re-verified at the exact point.
/// `Ok(None)` means the budget ran out.
pub fn find_weights(inst: &Instance, tau: &Rat, budget: &SearchBudget) -> Result<Option<WeightSearch>> {
    inst.require_positive()?;
    let n = inst.n();
    let start = Instant::now();
    let span = one() - tau * int(n as i64);
    let mut simple = vec![vec![rat(1, n as i64); n]];
    for i in 0..n {
        let mut w = vec![tau.clone(); n];
        w[i] += &span;
        simple.push(w);
    }
    if let Some(found) = first_accepted(inst, tau, &simple, SearchPhase::Candidate)? {
        return Ok(Some(found));
    }
    let vertices = match arrangement_vertices(inst, tau, true, budget.max_candidates) {
        Ok(v) => v,
        Err(e) if e.is_budget() => return Ok(None),
        Err(e) => return Err(e),
    };
    if let Some(found) = first_accepted(inst, tau, &vertices, SearchPhase::Candidate)? {
        return Ok(Some(found));
    }
    for depth in 1..=budget.max_depth {
        if start.elapsed() > budget.wall_clock {
            return Ok(None);
        }
        if let Some(found) = subdivision(inst, tau, 1 << depth)? {
            return Ok(Some(found));
        }
    }
    region_search(inst, tau, &vertices, start, budget)
}

fn grid_weights(y: &[usize], steps: usize) -> Vec<Rat> {
    let n = y.len() + 1;
    let den = steps as i64;
    (0..n)
        .map(|t| {
            let lo = if t == 0 { 0 } else { y[t - 1] };
            let hi = if t == n - 1 { steps } else { y[t] };
            rat((hi - lo) as i64, den)
        })
        .collect()
}

fn monotone(y: &[usize], steps: usize) -> bool {
    y.windows(2).all(|w| w[0] <= w[1]) && y.last().is_none_or(|&v| v <= steps)
}

/// All `0 ≤ y_1 ≤ ... ≤ y_d ≤ steps`, lexicographically.
fn monotone_points(d: usize, steps: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, steps: usize, lo: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for v in lo..=steps {
            cur.push(v);
            rec(d, steps, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, steps, 0, &mut Vec::new(), &mut out);
    out
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(k - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, k - 1);
            out.push(p);
        }
    }
    out.sort();
    out
}

/// Freudenthal subdivision of the simplex with `steps` steps per edge. Grid
/// points are labelled by the lowest-index coloured agent with positive
/// weight; the witnesses of each fully labelled cell define an exact region
/// program whose solution is checked.
fn subdivision(inst: &Instance, tau: &Rat, steps: usize) -> Result<Option<WeightSearch>> {
    let n = inst.n();
    let d = n - 1;
    let points = monotone_points(d, steps);
    let labels = par::map(&points, |y| -> Result<Option<(usize, Allocation)>> {
        let w = grid_weights(y, steps);
        let sw = shrink_unchecked(&w, tau);
        let colors = kkm_colors_shrunk(inst, &sw.shrunk)?;
        Ok((0..n)
            .find(|&i| colors.members[i] && !w[i].is_zero())
            .map(|i| (i, colors.witnesses[i].clone().expect("member"))))
    });
    let mut label_of: HashMap<Vec<usize>, (usize, Allocation)> = HashMap::new();
    for (y, l) in points.iter().zip(labels) {
        if let Some(l) = l? {
            label_of.insert(y.clone(), l);
        }
    }
    let perms = permutations(d);
    let mut tuples: Vec<Vec<Allocation>> = Vec::new();
    let mut seen = BTreeSet::new();
    for base in &points {
        for perm in &perms {
            let mut cur = base.clone();
            let mut verts = vec![cur.clone()];
            let mut ok = true;
            for &axis in perm {
                cur[axis] += 1;
                if !monotone(&cur, steps) {
                    ok = false;
                    break;
                }
                verts.push(cur.clone());
            }
            if !ok {
                continue;
            }
            let mut tuple: Vec<Option<Allocation>> = vec![None; n];
            for v in &verts {
                if let Some((l, x)) = label_of.get(v) {
                    tuple[*l] = Some(x.clone());
                }
            }
            if tuple.iter().all(Option::is_some) {
                let t: Vec<Allocation> = tuple.into_iter().map(Option::unwrap).collect();
                if seen.insert(t.clone()) {
                    tuples.push(t);
                }
            }
        }
    }
    let hit = par::find_first_in(&tuples, |t| {
        let mut rows = Vec::new();
        for (i, x) in t.iter().enumerate() {
            rows.extend(optimality_rows(inst, x));
            rows.extend(envy_rows(inst, x, i));
        }
        let w = region_point(n, tau, &rows)?;
        match accept(inst, tau, w, SearchPhase::Subdivision) {
            Ok(Some(f)) => Some(Ok(f)),
            Ok(None) => None,
            Err(e) => Some(Err(e)),
        }
    });
    hit.map(|(_, r)| r).transpose()
}

/// For each relevant vertex, every choice of one optimal allocation per agent
/// defines a region where all those allocations stay optimal and each agent
/// is price envy-free in its own; any point of a non-empty region is a hit.
fn region_search(
    inst: &Instance,
    tau: &Rat,
    vertices: &[Vec<Rat>],
    start: Instant,
    budget: &SearchBudget,
) -> Result<Option<WeightSearch>> {
    let n = inst.n();
    let mut seen = BTreeSet::new();
    let graphs: Vec<TightGraph> = vertices
        .iter()
        .map(|w| tight_graph(inst, w))
        .filter(|g| seen.insert(g.agents_of.clone()))
        .collect();
    let hit = par::find_first_in(&graphs, |g| {
        if start.elapsed() > budget.wall_clock {
            return None;
        }
        let optima: Vec<Allocation> = match enumerate_optima(g, DEFAULT_OPTIMA_CAP) {
            Ok(it) => it.collect(),
            Err(e) => return Some(Err(e)),
        };
        let mut choices: Vec<Vec<(Allocation, Vec<Vec<Rat>>)>> = Vec::with_capacity(n);
        for i in 0..n {
            let list: Vec<_> = optima
                .iter()
                .filter_map(|x| {
                    let mut rows = optimality_rows(inst, x);
                    rows.extend(envy_rows(inst, x, i));
                    region_point(n, tau, &rows).map(|_| (x.clone(), rows))
                })
                .collect();
            if list.is_empty() {
                return None;
            }
            choices.push(list);
        }
        let w = extend_tuple(n, tau, &choices, 0, Vec::new())?;
        match accept(inst, tau, w, SearchPhase::Region) {
            Ok(Some(f)) => Some(Ok(f)),
            Ok(None) => None,
            Err(e) => Some(Err(e)),
        }
    });
    hit.map(|(_, r)| r).transpose()
}

fn extend_tuple(
    n: usize,
    tau: &Rat,
    choices: &[Vec<(Allocation, Vec<Vec<Rat>>)>],
    agent: usize,
    rows: Vec<Vec<Rat>>,
) -> Option<Vec<Rat>> {
    if agent == choices.len() {
        return region_point(n, tau, &rows);
    }
    for (_, extra) in &choices[agent] {
        let mut next = rows.clone();
        next.extend(extra.iter().cloned());
        if agent + 1 < choices.len() && agent > 0 && region_point(n, tau, &next).is_none() {
            continue;
        }
        if let Some(w) = extend_tuple(n, tau, choices, agent + 1, next) {
            return Some(w);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturb::certify_perturbation;

    fn cross() -> Instance {
        Instance::from_ints(&[&[1, 2], &[2, 1]]).unwrap()
    }

    #[test]
    fn colors_examples() {
        let tau = rat(1, 16);
        let c = kkm_colors(&cross(), &[rat(1, 2), rat(1, 2)], &tau).unwrap();
        assert_eq!(c.agents(), vec![0, 1]);
        assert_eq!(c.witnesses[0], Some(Allocation::from_vecs(&[vec![0], vec![1]])));

        let c = kkm_colors(&cross(), &[one(), zero()], &tau).unwrap();
        assert!(c.members[0]);
        assert_eq!(c.witnesses[0], Some(Allocation::from_vecs(&[vec![], vec![0, 1]])));

        let single = Instance::from_ints(&[&[3, 4]]).unwrap();
        let c = kkm_colors(&single, &[one()], &rat(1, 8)).unwrap();
        assert_eq!(c.agents(), vec![0]);
    }

    #[test]
    fn cross_weights_at_barycenter() {
        let found = find_weights(&cross(), &rat(1, 16), &SearchBudget::default()).unwrap().unwrap();
        assert_eq!(found.weights.weights, vec![rat(1, 2), rat(1, 2)]);
        let single = Instance::from_ints(&[&[3, 4]]).unwrap();
        let found = find_weights(&single, &rat(1, 8), &SearchBudget::default()).unwrap().unwrap();
        assert_eq!(found.weights.weights, vec![one()]);
    }

    #[test]
    fn perturbed_symmetric_instance() {
        let flat = Instance::from_ints(&[&[1, 1], &[1, 1]]).unwrap();
        let (p, _) = certify_perturbation(&flat, 3, 1000).unwrap();
        let tau = crate::market::default_tau(&p);
        let found = find_weights(&p, &tau, &SearchBudget::default()).unwrap().unwrap();
        assert!(kkm_colors_shrunk(&p, &found.weights.shrunk).unwrap().all());
        let w = &found.weights.weights;
        assert!((&w[0] - rat(1, 2)) < rat(1, 100) && (rat(1, 2) - &w[0]) < rat(1, 100));
        // The accepted point sits on a tightness hyperplane of the perturbed costs.
        let on_plane = hyperplanes(&p)
            .iter()
            .any(|h| h.eval(&p, &found.weights.shrunk).is_zero());
        assert!(on_plane);
    }

    #[test]
    fn subset_and_permutation_helpers() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(monotone_points(2, 2).len(), 6);
        assert_eq!(monotone_points(0, 5), vec![Vec::<usize>::new()]);
        assert_eq!(grid_weights(&[1, 3], 4), vec![rat(1, 4), rat(1, 2), rat(1, 4)]);
    }

    #[test]
    fn ratio_propagation_agrees_with_elimination() {
        let inst = Instance::from_ints(&[&[3, 1, 4], &[1, 5, 9], &[2, 6, 5]]).unwrap();
        let tau = rat(1, 50);
        let hs = hyperplanes(&inst);
        let approx: Vec<Vec<f64>> = inst.costs().iter().map(|r| r.iter().map(|c| c.to_f64().unwrap()).collect()).collect();
        let mut solved = 0;
        for sub in subsets(hs.len() + 3, 2) {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for &k in &sub {
                let (row, rhs) = constraint_row(&inst, &hs, &tau, k);
                a.push(row);
                b.push(rhs);
            }
            a.push(vec![one(); 3]);
            b.push(one());
            let expect = crate::lp::solve_square(&a, &b).filter(|w| w.iter().all(|v| v >= &tau));
            let got = vertex_of(&inst, &hs, &tau, &sub).filter(|w| w.iter().all(|v| v >= &tau));
            assert_eq!(got, expect, "subset {sub:?}");
            if got.is_some() {
                assert!(!clearly_rejected(&approx, &hs, 0.02, &sub, false));
            }
            solved += usize::from(got.is_some());
        }
        assert!(solved > 10);
    }

    #[test]
    fn vertices_of_the_cross_segment() {
        let v = arrangement_vertices(&cross(), &rat(1, 16), false, 1000).unwrap();
        let firsts: BTreeSet<Rat> = v.iter().map(|w| w[0].clone()).collect();
        let expect: BTreeSet<Rat> = [rat(2, 3), rat(1, 3), rat(1, 16), rat(15, 16)].into_iter().collect();
        assert_eq!(firsts, expect);
    }
}
