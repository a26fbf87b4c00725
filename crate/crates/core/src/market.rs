//! The weighted social-cost LP at shrunk weights: dual prices, the tight
//! graph, its reduction, and the optimal integral allocations.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::rat::{int, one, sum, Rat};

/// Default cap on the number of optimal allocations enumerated.
pub const DEFAULT_OPTIMA_CAP: u64 = 1_000_000;

/// Exclusive upper end of the admissible `τ` interval: `c_min/(2n c_max)`,
/// or `1/(2n)` without chores.
pub fn tau_bound(inst: &Instance) -> Rat {
    let n2 = int(2 * inst.n() as i64);
    match (inst.c_min(), inst.c_max()) {
        (Some(lo), Some(hi)) => lo / (hi * n2),
        _ => one() / n2,
    }
}

/// `c_min/(4n c_max)`, half the admissible bound.
pub fn default_tau(inst: &Instance) -> Rat {
    tau_bound(inst) / int(2)
}

pub fn validate_weights(w: &[Rat], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::InvalidWeights(format!("{} entries for {n} agents", w.len())));
    }
    if w.iter().any(|v| v.is_negative()) {
        return Err(Error::InvalidWeights("negative entry".into()));
    }
    if sum(w) != one() {
        return Err(Error::InvalidWeights("entries must sum to one".into()));
    }
    Ok(())
}

/// A simplex point `w` together with its image `w′_i = τ + (1 − τn) w_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShrunkWeights {
    pub weights: Vec<Rat>,
    pub shrunk: Vec<Rat>,
    pub tau: Rat,
}

impl ShrunkWeights {
    /// Inverts the shrink map; `shrunk` must be a positive simplex point with
    /// every entry at least `τ`.
    pub fn from_shrunk(shrunk: Vec<Rat>, tau: Rat) -> Result<Self> {
        let n = int(shrunk.len() as i64);
        let span = one() - &tau * &n;
        if !span.is_positive() {
            return Err(Error::TauOutOfRange(crate::rat::fmt_rat(&tau)));
        }
        let weights: Vec<Rat> = shrunk.iter().map(|s| (s - &tau) / &span).collect();
        validate_weights(&weights, shrunk.len())?;
        Ok(Self { weights, shrunk, tau })
    }
}

/// Applies the shrink map after checking `0 < τ < tau_bound(inst)`.
pub fn shrink(inst: &Instance, w: &[Rat], tau: &Rat) -> Result<ShrunkWeights> {
    validate_weights(w, inst.n())?;
    if !tau.is_positive() || tau >= &tau_bound(inst) {
        return Err(Error::TauOutOfRange(crate::rat::fmt_rat(tau)));
    }
    Ok(shrink_unchecked(w, tau))
}

pub(crate) fn shrink_unchecked(w: &[Rat], tau: &Rat) -> ShrunkWeights {
    let span = one() - tau * int(w.len() as i64);
    ShrunkWeights {
        weights: w.to_vec(),
        shrunk: w.iter().map(|wi| tau + &span * wi).collect(),
        tau: tau.clone(),
    }
}

/// `p_j = min_i w′_i c_ij`.
pub fn dual_prices(inst: &Instance, shrunk: &[Rat]) -> Vec<Rat> {
    (0..inst.m())
        .map(|j| {
            (0..inst.n())
                .map(|i| &shrunk[i] * inst.cost(i, j))
                .min()
                .expect("n >= 1")
        })
        .collect()
}

/// Equality graph of `p_j = w′_i c_ij`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TightGraph {
    /// Tight agents of each chore, ascending.
    pub agents_of: Vec<Vec<usize>>,
    /// Tight chores of each agent, ascending.
    pub chores_of: Vec<Vec<usize>>,
    pub prices: Vec<Rat>,
    pub shrunk: Vec<Rat>,
}

impl TightGraph {
    pub fn n(&self) -> usize {
        self.chores_of.len()
    }

    pub fn m(&self) -> usize {
        self.agents_of.len()
    }

    pub fn has_edge(&self, agent: usize, chore: usize) -> bool {
        self.agents_of[chore].binary_search(&agent).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.agents_of
            .iter()
            .enumerate()
            .flat_map(|(j, a)| a.iter().map(move |&i| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.agents_of.iter().map(Vec::len).sum()
    }

    /// Acyclicity by union-find over agents `0..n` and chores `n..n+m`.
    pub fn is_forest(&self) -> bool {
        let n = self.n();
        let mut parent: Vec<usize> = (0..n + self.m()).collect();
        fn root(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for (i, j) in self.edges() {
            let (a, b) = (root(&mut parent, i), root(&mut parent, n + j));
            if a == b {
                return false;
            }
            parent[a] = b;
        }
        true
    }
}

pub fn tight_graph(inst: &Instance, shrunk: &[Rat]) -> TightGraph {
    let prices = dual_prices(inst, shrunk);
    let n = inst.n();
    let mut agents_of = vec![Vec::new(); inst.m()];
    let mut chores_of = vec![Vec::new(); n];
    for (j, p) in prices.iter().enumerate() {
        for i in 0..n {
            if &(&shrunk[i] * inst.cost(i, j)) == p {
                agents_of[j].push(i);
                chores_of[i].push(j);
            }
        }
    }
    TightGraph {
        agents_of,
        chores_of,
        prices,
        shrunk: shrunk.to_vec(),
    }
}

/// Complementary slackness: every allocated pair is a tight edge.
pub fn is_optimal(x: &Allocation, g: &TightGraph) -> bool {
    x.bundles()
        .iter()
        .enumerate()
        .all(|(i, b)| b.iter().all(|&j| j < g.m() && g.has_edge(i, j)))
}

/// The tight graph with its degree-one chores removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedGraph {
    /// Chores of degree at least two, ascending.
    pub chores: Vec<usize>,
    /// Degree-one chores with their unique tight agent, ascending by chore.
    pub forced: Vec<(usize, usize)>,
    /// `in_h[j]` iff chore `j` survives the reduction.
    pub in_h: Vec<bool>,
    /// Surviving chores adjacent to each agent, ascending.
    pub chores_of: Vec<Vec<usize>>,
}

impl ReducedGraph {
    pub fn contains(&self, chore: usize) -> bool {
        self.in_h[chore]
    }
}

pub fn reduce(g: &TightGraph) -> Result<ReducedGraph> {
    let mut chores = Vec::new();
    let mut forced = Vec::new();
    let mut in_h = vec![false; g.m()];
    for (j, agents) in g.agents_of.iter().enumerate() {
        match agents.len() {
            0 => return Err(Error::InvariantViolation(format!("chore {} has no tight agent", j + 1))),
            1 => forced.push((j, agents[0])),
            _ => {
                chores.push(j);
                in_h[j] = true;
            }
        }
    }
    let chores_of = g
        .chores_of
        .iter()
        .map(|cs| cs.iter().copied().filter(|&j| in_h[j]).collect())
        .collect();
    if g.is_forest() && chores.len() + 1 > g.n().max(1) {
        return Err(Error::InvariantViolation(format!(
            "reduced graph has {} chores for {} agents",
            chores.len(),
            g.n()
        )));
    }
    Ok(ReducedGraph {
        chores,
        forced,
        in_h,
        chores_of,
    })
}

/// Lazy enumeration of the optimal allocations supported on a forest tight
/// graph: forced chores fixed, each remaining chore cycling through its tight
/// agents. The first chore of the reduced graph varies slowest.
#[derive(Debug, Clone)]
pub struct Optima<'a> {
    g: &'a TightGraph,
    h: ReducedGraph,
    digits: Vec<usize>,
    done: bool,
    total: u64,
}

impl Optima<'_> {
    pub fn total(&self) -> u64 {
        self.total
    }
}

impl Iterator for Optima<'_> {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        if self.done {
            return None;
        }
        let mut x = Allocation::empty(self.g.n());
        for &(j, i) in &self.h.forced {
            x.insert(i, j);
        }
        for (slot, &j) in self.h.chores.iter().enumerate() {
            x.insert(self.g.agents_of[j][self.digits[slot]], j);
        }
        self.done = true;
        for slot in (0..self.digits.len()).rev() {
            let j = self.h.chores[slot];
            self.digits[slot] += 1;
            if self.digits[slot] < self.g.agents_of[j].len() {
                self.done = false;
                break;
            }
            self.digits[slot] = 0;
        }
        Some(x)
    }
}

pub fn enumerate_optima(g: &TightGraph, cap: u64) -> Result<Optima<'_>> {
    if !g.is_forest() {
        return Err(Error::NotAForest);
    }
    let h = reduce(g)?;
    let total = h
        .chores
        .iter()
        .try_fold(1u64, |acc, &j| acc.checked_mul(g.agents_of[j].len() as u64));
    let total = match total {
        Some(t) if t <= cap => t,
        _ => {
            return Err(Error::BudgetExceeded {
                what: "optimal allocation enumeration",
                needed: h
                    .chores
                    .iter()
                    .map(|&j| g.agents_of[j].len() as f64)
                    .product(),
                budget: cap,
            })
        }
    };
    Ok(Optima {
        g,
        digits: vec![0; h.chores.len()],
        h,
        done: false,
        total,
    })
}

/// `Σ_i w′_i c_i(x_i)`.
pub fn weighted_cost(inst: &Instance, shrunk: &[Rat], x: &Allocation) -> Rat {
    (0..inst.n()).fold(Rat::zero(), |acc, i| acc + &shrunk[i] * inst.cost_of(i, x.bundle(i)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn cross() -> Instance {
        Instance::from_ints(&[&[1, 2], &[2, 1]]).unwrap()
    }

    #[test]
    fn tau_examples() {
        assert_eq!(default_tau(&cross()), rat(1, 16));
        assert_eq!(tau_bound(&cross()), rat(1, 8));
        let single = Instance::from_ints(&[&[2, 6]]).unwrap();
        assert_eq!(default_tau(&single), rat(1, 12));
    }

    #[test]
    fn shrink_examples() {
        let sw = shrink(&cross(), &[one(), int(0)], &rat(1, 16)).unwrap();
        assert_eq!(sw.shrunk, vec![rat(15, 16), rat(1, 16)]);
        let sw = shrink(&cross(), &[rat(1, 2), rat(1, 2)], &rat(1, 16)).unwrap();
        assert_eq!(sw.shrunk, sw.weights);
        assert!(shrink(&cross(), &[rat(1, 2), rat(1, 2)], &rat(1, 8)).is_err());
        assert!(shrink(&cross(), &[rat(1, 2), rat(1, 3)], &rat(1, 16)).is_err());
        let back = ShrunkWeights::from_shrunk(vec![rat(15, 16), rat(1, 16)], rat(1, 16)).unwrap();
        assert_eq!(back.weights, vec![one(), int(0)]);
    }

    #[test]
    fn prices_and_graphs() {
        let half = [rat(1, 2), rat(1, 2)];
        assert_eq!(dual_prices(&cross(), &half), half.to_vec());
        let g = tight_graph(&cross(), &half);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 0), (1, 1)]);
        assert!(g.is_forest());

        let third = [rat(1, 3), rat(2, 3)];
        assert_eq!(dual_prices(&cross(), &third), third.to_vec());
        let g = tight_graph(&cross(), &third);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 0), (0, 1), (1, 1)]);
        assert!(g.is_forest());

        let single = Instance::from_ints(&[&[4, 5]]).unwrap();
        assert_eq!(dual_prices(&single, &[one()]), vec![int(4), int(5)]);

        let flat = Instance::from_ints(&[&[1, 1], &[1, 1]]).unwrap();
        let g = tight_graph(&flat, &half);
        assert_eq!(g.edge_count(), 4);
        assert!(!g.is_forest());
        assert!(matches!(enumerate_optima(&g, 10), Err(Error::NotAForest)));
    }

    #[test]
    fn optimality_and_reduction() {
        let half = [rat(1, 2), rat(1, 2)];
        let g = tight_graph(&cross(), &half);
        assert!(is_optimal(&Allocation::from_vecs(&[vec![0], vec![1]]), &g));
        assert!(!is_optimal(&Allocation::from_vecs(&[vec![1], vec![0]]), &g));
        let h = reduce(&g).unwrap();
        assert!(h.chores.is_empty());
        assert_eq!(h.forced, vec![(0, 0), (1, 1)]);
        let all: Vec<_> = enumerate_optima(&g, 10).unwrap().collect();
        assert_eq!(all, vec![Allocation::from_vecs(&[vec![0], vec![1]])]);

        let g = tight_graph(&cross(), &[rat(1, 3), rat(2, 3)]);
        let h = reduce(&g).unwrap();
        assert_eq!(h.forced, vec![(0, 0)]);
        assert_eq!(h.chores, vec![1]);
        let all: Vec<_> = enumerate_optima(&g, 10).unwrap().collect();
        assert_eq!(
            all,
            vec![
                Allocation::from_vecs(&[vec![0, 1], vec![]]),
                Allocation::from_vecs(&[vec![0], vec![1]])
            ]
        );
        assert!(enumerate_optima(&g, 1).unwrap_err().is_budget());

        let empty = Instance::new(vec![vec![], vec![]]).unwrap();
        let g = tight_graph(&empty, &half);
        assert!(is_optimal(&Allocation::empty(2), &g));
        assert_eq!(enumerate_optima(&g, 1).unwrap().count(), 1);
    }

    #[test]
    fn star_reduces_to_one_chore() {
        // Chore 0 costs the same for everyone; the others are private.
        let inst = Instance::from_ints(&[&[1, 1, 9, 9], &[1, 9, 1, 9], &[1, 9, 9, 1]]).unwrap();
        let third = vec![rat(1, 3); 3];
        let g = tight_graph(&inst, &third);
        let h = reduce(&g).unwrap();
        assert_eq!(h.chores, vec![0]);
        assert_eq!(h.forced, vec![(1, 0), (2, 1), (3, 2)]);
    }
}
