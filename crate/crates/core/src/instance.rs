//! Instances, allocations and additive bundle costs.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rat::{one, zero, Rat};

/// `n` agents, `m` chores, an `n x m` non-negative cost matrix and positive
/// entitlements (all one for the unweighted problem).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    costs: Vec<Vec<Rat>>,
    entitlements: Vec<Rat>,
    m: usize,
}

impl Instance {
    /// Unweighted instance. Costs must be non-negative; most algorithms
    /// additionally require [`Instance::require_positive`].
    pub fn new(costs: Vec<Vec<Rat>>) -> Result<Self> {
        let n = costs.len();
        Self::with_entitlements(costs, vec![one(); n])
    }

    pub fn with_entitlements(costs: Vec<Vec<Rat>>, entitlements: Vec<Rat>) -> Result<Self> {
        let n = costs.len();
        if n == 0 {
            return Err(Error::InvalidInstance("need at least one agent".into()));
        }
        let m = costs[0].len();
        if let Some(i) = costs.iter().position(|row| row.len() != m) {
            return Err(Error::InvalidInstance(format!(
                "row {} has {} entries, expected {m}",
                i + 1,
                costs[i].len()
            )));
        }
        for (i, row) in costs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if c.is_negative() {
                    return Err(Error::InvalidInstance(format!(
                        "negative cost for agent {} chore {}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        if entitlements.len() != n {
            return Err(Error::InvalidInstance(format!(
                "{} entitlements for {n} agents",
                entitlements.len()
            )));
        }
        if let Some(i) = entitlements.iter().position(|a| !a.is_positive()) {
            return Err(Error::InvalidInstance(format!(
                "entitlement of agent {} must be positive",
                i + 1
            )));
        }
        Ok(Self {
            costs,
            entitlements,
            m,
        })
    }

    /// Integer convenience constructor, mostly for tests and fixtures.
    pub fn from_ints(costs: &[&[i64]]) -> Result<Self> {
        Self::new(
            costs
                .iter()
                .map(|row| row.iter().map(|&c| crate::rat::int(c)).collect())
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.costs.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cost(&self, agent: usize, chore: usize) -> &Rat {
        &self.costs[agent][chore]
    }

    pub fn costs(&self) -> &[Vec<Rat>] {
        &self.costs
    }

    pub fn entitlements(&self) -> &[Rat] {
        &self.entitlements
    }

    pub fn entitlement(&self, agent: usize) -> &Rat {
        &self.entitlements[agent]
    }

    pub fn is_unweighted(&self) -> bool {
        self.entitlements.iter().all(|a| *a == one())
    }

    /// Same costs, entitlements reset to one.
    pub fn unweighted(&self) -> Self {
        Self {
            costs: self.costs.clone(),
            entitlements: vec![one(); self.n()],
            m: self.m,
        }
    }

    pub fn with_costs(&self, costs: Vec<Vec<Rat>>) -> Result<Self> {
        Self::with_entitlements(costs, self.entitlements.clone())
    }

    pub fn c_max(&self) -> Option<&Rat> {
        self.costs.iter().flatten().max()
    }

    pub fn c_min(&self) -> Option<&Rat> {
        self.costs.iter().flatten().min()
    }

    pub fn alpha_min(&self) -> &Rat {
        self.entitlements.iter().min().expect("n >= 1")
    }

    pub fn has_zero_costs(&self) -> bool {
        self.costs.iter().flatten().any(|c| c.is_zero())
    }

    pub fn require_positive(&self) -> Result<()> {
        if self.has_zero_costs() {
            return Err(Error::InvalidInstance(
                "costs must be strictly positive (run zero-cost preprocessing first)".into(),
            ));
        }
        Ok(())
    }

    /// Exact additive cost `c_i(S)`; the empty bundle costs zero.
    pub fn bundle_cost<'a>(
        &self,
        agent: usize,
        bundle: impl IntoIterator<Item = &'a usize>,
    ) -> Result<Rat> {
        if agent >= self.n() {
            return Err(Error::IndexOutOfRange(format!("agent {agent}")));
        }
        let mut acc = zero();
        for &j in bundle {
            if j >= self.m {
                return Err(Error::IndexOutOfRange(format!("chore {j}")));
            }
            acc += &self.costs[agent][j];
        }
        Ok(acc)
    }

    /// Unchecked variant used on validated allocations.
    pub(crate) fn cost_of<'a>(&self, agent: usize, bundle: impl IntoIterator<Item = &'a usize>) -> Rat {
        let row = &self.costs[agent];
        bundle.into_iter().fold(zero(), |acc, &j| acc + &row[j])
    }
}

/// An `n`-partition of the chores. Bundles are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Allocation {
    bundles: Vec<BTreeSet<usize>>,
}

impl Allocation {
    pub fn empty(n: usize) -> Self {
        Self {
            bundles: vec![BTreeSet::new(); n],
        }
    }

    pub fn from_bundles(bundles: Vec<BTreeSet<usize>>) -> Self {
        Self { bundles }
    }

    pub fn from_vecs(bundles: &[Vec<usize>]) -> Self {
        Self {
            bundles: bundles.iter().map(|b| b.iter().copied().collect()).collect(),
        }
    }

    /// `owners[j]` is the agent holding chore `j`.
    pub fn from_owners(n: usize, owners: &[usize]) -> Self {
        let mut a = Self::empty(n);
        for (j, &i) in owners.iter().enumerate() {
            a.bundles[i].insert(j);
        }
        a
    }

    pub fn n(&self) -> usize {
        self.bundles.len()
    }

    pub fn bundle(&self, agent: usize) -> &BTreeSet<usize> {
        &self.bundles[agent]
    }

    pub fn bundles(&self) -> &[BTreeSet<usize>] {
        &self.bundles
    }

    pub fn insert(&mut self, agent: usize, chore: usize) {
        self.bundles[agent].insert(chore);
    }

    pub fn remove(&mut self, agent: usize, chore: usize) -> bool {
        self.bundles[agent].remove(&chore)
    }

    pub fn owner(&self, chore: usize) -> Option<usize> {
        self.bundles.iter().position(|b| b.contains(&chore))
    }

    /// Chore-to-agent map; panics if some chore below `m` is unassigned.
    pub fn owners(&self, m: usize) -> Vec<usize> {
        let mut owners = vec![usize::MAX; m];
        for (i, b) in self.bundles.iter().enumerate() {
            for &j in b {
                owners[j] = i;
            }
        }
        owners
    }

    /// Checks that the bundles partition `{0..m}` among exactly `n` agents.
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.bundles.len() != n {
            return Err(Error::MalformedAllocation(format!(
                "{} bundles for {n} agents",
                self.bundles.len()
            )));
        }
        let mut seen = vec![false; m];
        for (i, b) in self.bundles.iter().enumerate() {
            for &j in b {
                if j >= m {
                    return Err(Error::MalformedAllocation(format!(
                        "agent {} holds unknown chore {}",
                        i + 1,
                        j + 1
                    )));
                }
                if seen[j] {
                    return Err(Error::MalformedAllocation(format!(
                        "chore {} assigned twice",
                        j + 1
                    )));
                }
                seen[j] = true;
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::MalformedAllocation(format!(
                "chore {} unassigned",
                j + 1
            )));
        }
        Ok(())
    }

    /// 1-based rendering, e.g. `({1},{2})`.
    pub fn display(&self) -> String {
        let parts: Vec<String> = self
            .bundles
            .iter()
            .map(|b| {
                let items: Vec<String> = b.iter().map(|j| (j + 1).to_string()).collect();
                format!("{{{}}}", items.join(","))
            })
            .collect();
        format!("({})", parts.join(","))
    }
}

/// Every allocation of `m` chores to `n` agents in odometer order
/// (chore 0 varies fastest, agent indices ascending).
#[derive(Debug, Clone)]
pub struct AllocationSpace {
    n: usize,
    m: usize,
}

impl AllocationSpace {
    pub fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }

    /// `n^m` as a float, for budget checks that must not overflow.
    pub fn size_hint(&self) -> f64 {
        (self.n as f64).powi(self.m as i32)
    }

    pub fn size(&self) -> Option<u64> {
        (self.n as u64).checked_pow(self.m as u32)
    }

    pub fn require_within(&self, budget: u64, what: &'static str) -> Result<u64> {
        match self.size() {
            Some(s) if s <= budget => Ok(s),
            _ => Err(Error::BudgetExceeded {
                what,
                needed: self.size_hint(),
                budget,
            }),
        }
    }

    /// Owner vector of the allocation with the given rank.
    pub fn owners_at(&self, mut rank: u64) -> Vec<usize> {
        let mut owners = vec![0; self.m];
        for o in owners.iter_mut() {
            *o = (rank % self.n as u64) as usize;
            rank /= self.n as u64;
        }
        owners
    }

    pub fn iter_owners(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let total = self.size().unwrap_or(u64::MAX);
        (0..total).map(move |r| self.owners_at(r))
    }
}

/// Zero-cost chores removed from an instance, and how to put them back.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub instance: Instance,
    /// `(original chore, agent)` for each removed chore, ascending by chore.
    pub forced: Vec<(usize, usize)>,
    /// Original index of each chore kept in the reduced instance.
    pub kept: Vec<usize>,
    pub original_m: usize,
}

impl Preprocessed {
    /// Maps an allocation of the reduced instance back to the original chores
    /// and re-attaches the forced zero-cost chores.
    pub fn lift(&self, reduced: &Allocation) -> Allocation {
        let mut out = Allocation::empty(reduced.n());
        for (i, b) in reduced.bundles().iter().enumerate() {
            for &j in b {
                out.insert(i, self.kept[j]);
            }
        }
        for &(j, i) in &self.forced {
            out.insert(i, j);
        }
        out
    }

    /// Restricts an allocation of the original instance to the kept chores.
    pub fn restrict(&self, original: &Allocation) -> Allocation {
        let mut index = vec![usize::MAX; self.original_m];
        for (r, &j) in self.kept.iter().enumerate() {
            index[j] = r;
        }
        let mut out = Allocation::empty(original.n());
        for (i, b) in original.bundles().iter().enumerate() {
            for &j in b {
                if index[j] != usize::MAX {
                    out.insert(i, index[j]);
                }
            }
        }
        out
    }
}

/// Assigns every chore that some agent values at zero to the lowest-indexed
/// such agent and drops it from the instance.
pub fn preprocess_zero_costs(raw: &Instance) -> Preprocessed {
    let n = raw.n();
    let mut forced = Vec::new();
    let mut kept = Vec::new();
    for j in 0..raw.m() {
        match (0..n).find(|&i| raw.cost(i, j).is_zero()) {
            Some(i) => forced.push((j, i)),
            None => kept.push(j),
        }
    }
    let costs = raw
        .costs()
        .iter()
        .map(|row| kept.iter().map(|&j| row[j].clone()).collect())
        .collect();
    let instance = Instance::with_entitlements(costs, raw.entitlements().to_vec())
        .expect("sub-matrix of a valid instance");
    Preprocessed {
        instance,
        forced,
        kept,
        original_m: raw.m(),
    }
}
