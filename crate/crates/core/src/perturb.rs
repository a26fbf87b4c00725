//! Perturbation: prime tables, cycle products, non-degeneracy, the threshold
//! calculators for the prime-power scheme, and the certified rational
//! perturbation used at runtime.

use std::ops::ControlFlow;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::check::{CheckReport, Witness};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rat::{int, one, pow, pow2_inv, Rat};

/// Default cap on the number of simple cycles visited.
pub const DEFAULT_CYCLE_BUDGET: u64 = 10_000_000;
/// Default cap on `2^m` subset sums per agent.
pub const DEFAULT_SUBSET_BUDGET: u64 = 1 << 22;
/// Sampling attempts before certification gives up.
pub const MAX_ATTEMPTS: u32 = 64;

/// The first `k` primes, ascending.
pub fn nth_primes(k: usize) -> Vec<u64> {
    if k == 0 {
        return Vec::new();
    }
    let mut limit = 16usize.max(k * 2);
    loop {
        let mut composite = vec![false; limit + 1];
        let mut primes = Vec::with_capacity(k);
        for v in 2..=limit {
            if composite[v] {
                continue;
            }
            primes.push(v as u64);
            if primes.len() == k {
                return primes;
            }
            let mut mult = v * v;
            while mult <= limit {
                composite[mult] = true;
                mult += v;
            }
        }
        limit *= 2;
    }
}

/// `q[i][j]`, the `(m·i + j)`-th prime (zero-based).
pub fn prime_table(n: usize, m: usize) -> Vec<Vec<u64>> {
    let primes = nth_primes(n * m);
    (0..n).map(|i| primes[i * m..(i + 1) * m].to_vec()).collect()
}

/// A simple cycle of the complete bipartite agent/chore graph, visiting
/// `agents[0], chores[0], agents[1], chores[1], ..., agents[0]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteCycle {
    pub agents: Vec<usize>,
    pub chores: Vec<usize>,
}

impl BipartiteCycle {
    /// From the alternating sequence `i_1, j_1, i_2, ..., j_k, i_1`.
    pub fn from_sequence(seq: &[usize], n: usize, m: usize) -> Result<Self> {
        if seq.len() < 5 || seq.len() % 2 == 0 {
            return Err(Error::MalformedCycle(format!(
                "need an odd-length sequence of at least 5 vertices, got {}",
                seq.len()
            )));
        }
        if seq[0] != seq[seq.len() - 1] {
            return Err(Error::MalformedCycle("first agent must be repeated last".into()));
        }
        let body = &seq[..seq.len() - 1];
        let agents: Vec<usize> = body.iter().step_by(2).copied().collect();
        let chores: Vec<usize> = body.iter().skip(1).step_by(2).copied().collect();
        let c = Self { agents, chores };
        c.validate(n, m)?;
        Ok(c)
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        let k = self.agents.len();
        if k < 2 || self.chores.len() != k {
            return Err(Error::MalformedCycle("need at least two agents and as many chores".into()));
        }
        if self.agents.iter().any(|&i| i >= n) || self.chores.iter().any(|&j| j >= m) {
            return Err(Error::MalformedCycle("vertex out of range".into()));
        }
        let distinct = |v: &[usize]| {
            let mut s = v.to_vec();
            s.sort_unstable();
            s.windows(2).all(|w| w[0] != w[1])
        };
        if !distinct(&self.agents) || !distinct(&self.chores) {
            return Err(Error::MalformedCycle("repeated vertex".into()));
        }
        Ok(())
    }

    pub fn reversed(&self) -> Self {
        let k = self.agents.len();
        let agents = (0..k).map(|t| self.agents[(k - t) % k]).collect();
        let chores = (0..k).map(|t| self.chores[k - 1 - t]).collect();
        Self { agents, chores }
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// `(Π c_{i_k j_k}, Π c_{i_{k+1} j_k})`.
    fn products(&self, inst: &Instance) -> (Rat, Rat) {
        let k = self.len();
        let mut fwd = one();
        let mut back = one();
        for t in 0..k {
            let j = self.chores[t];
            fwd *= inst.cost(self.agents[t], j);
            back *= inst.cost(self.agents[(t + 1) % k], j);
        }
        (fwd, back)
    }

    pub fn into_witness(self) -> Witness {
        Witness::Cycle {
            agents: self.agents,
            chores: self.chores,
        }
    }
}

/// `π(C) = Π c_{i_k j_k} / c_{i_{k+1} j_k}`.
pub fn pi_cycle(inst: &Instance, cycle: &BipartiteCycle) -> Result<Rat> {
    cycle.validate(inst.n(), inst.m())?;
    inst.require_positive()?;
    let (fwd, back) = cycle.products(inst);
    Ok(fwd / back)
}

fn falling(m: u64, k: u64) -> f64 {
    (0..k).map(|t| (m - t) as f64).product()
}

/// Number of simple cycles of `K_{n,m}` counted up to orientation.
pub fn cycle_count(n: usize, m: usize) -> f64 {
    let (n, m) = (n as u64, m as u64);
    let mut total = 0.0;
    for l in 2..=n.min(m) {
        // Ordered agent tuples modulo rotation and reflection, times ordered chore tuples.
        let agents = falling(n, l) / (2.0 * l as f64);
        total += agents * falling(m, l);
    }
    total
}

/// Visits every simple cycle once up to orientation: the first agent is the
/// smallest, and the orientation is fixed by `agents[1] < agents[last]` for
/// three or more agents and by `chores[0] < chores[1]` for two.
pub fn for_each_cycle<B>(
    n: usize,
    m: usize,
    budget: u64,
    mut visit: impl FnMut(&BipartiteCycle) -> ControlFlow<B>,
) -> Result<Option<B>> {
    let needed = cycle_count(n, m);
    if needed > budget as f64 {
        return Err(Error::BudgetExceeded {
            what: "cycle enumeration",
            needed,
            budget,
        });
    }
    let mut cycle = BipartiteCycle {
        agents: Vec::new(),
        chores: Vec::new(),
    };
    for l in 2..=n.min(m) {
        for first in 0..n {
            cycle.agents.clear();
            cycle.agents.push(first);
            if let ControlFlow::Break(b) = agent_orders(n, m, l, &mut cycle, &mut visit) {
                return Ok(Some(b));
            }
        }
    }
    Ok(None)
}

fn agent_orders<B>(
    n: usize,
    m: usize,
    l: usize,
    cycle: &mut BipartiteCycle,
    visit: &mut impl FnMut(&BipartiteCycle) -> ControlFlow<B>,
) -> ControlFlow<B> {
    if cycle.agents.len() == l {
        if l >= 3 && cycle.agents[1] > cycle.agents[l - 1] {
            return ControlFlow::Continue(());
        }
        cycle.chores.clear();
        return chore_orders(m, l, cycle, visit);
    }
    let first = cycle.agents[0];
    for a in (first + 1)..n {
        if !cycle.agents.contains(&a) {
            cycle.agents.push(a);
            agent_orders(n, m, l, cycle, visit)?;
            cycle.agents.pop();
        }
    }
    ControlFlow::Continue(())
}

fn chore_orders<B>(
    m: usize,
    l: usize,
    cycle: &mut BipartiteCycle,
    visit: &mut impl FnMut(&BipartiteCycle) -> ControlFlow<B>,
) -> ControlFlow<B> {
    if cycle.chores.len() == l {
        if l == 2 && cycle.chores[0] > cycle.chores[1] {
            return ControlFlow::Continue(());
        }
        return visit(cycle);
    }
    for j in 0..m {
        if !cycle.chores.contains(&j) {
            cycle.chores.push(j);
            chore_orders(m, l, cycle, visit)?;
            cycle.chores.pop();
        }
    }
    ControlFlow::Continue(())
}

/// No simple cycle has `π(C) = 1`. A failing report carries such a cycle.
pub fn is_nondegenerate(inst: &Instance, budget: u64) -> Result<CheckReport> {
    inst.require_positive()?;
    let hit = for_each_cycle(inst.n(), inst.m(), budget, |c| {
        let (fwd, back) = c.products(inst);
        if fwd == back {
            ControlFlow::Break(c.clone())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(match hit {
        Some(c) => CheckReport::fail("nondegenerate", c.into_witness()),
        None => CheckReport::pass("nondegenerate"),
    })
}

/// An upper bound on the perturbation exponent `ε`, stated as the pair
/// `(base, ratio)` meaning `ε < log_base(ratio)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsBound {
    pub base: Rat,
    pub ratio: Rat,
}

impl EpsBound {
    /// Whether `base^ε < ratio` for `ε = 1/z`, i.e. `base < ratio^z`.
    pub fn admits_reciprocal(&self, z: u32) -> bool {
        self.base < pow(&self.ratio, z)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thresholds {
    /// Smallest gap between distinct subset costs of one agent; `None` when
    /// no agent has two distinct subset costs.
    pub delta: Option<Rat>,
    /// Smallest `|Π c_{i_k j_k} − Π c_{i_{k+1} j_k}|` over cycles with
    /// `π(C) ≠ 1`; `None` when no such cycle exists.
    pub delta_prime: Option<Rat>,
    pub eps_nondegen: Option<EpsBound>,
    pub eps_ef1: Option<EpsBound>,
    pub eps_po: Option<EpsBound>,
    pub eps_wef1: Option<EpsBound>,
    pub primes: Vec<Vec<u64>>,
}

fn subset_sums(row: &[Rat], scale: &[Rat]) -> Vec<Rat> {
    let mut sums = vec![Rat::zero()];
    for c in row {
        let extra: Vec<Rat> = sums.iter().map(|s| s + c).collect();
        sums.extend(extra);
    }
    let mut out: Vec<Rat> = scale
        .iter()
        .flat_map(|a| sums.iter().map(move |s| s / a))
        .collect();
    out.sort();
    out.dedup();
    out
}

fn min_gap(sorted: &[Rat]) -> Option<Rat> {
    sorted.windows(2).map(|w| &w[1] - &w[0]).min()
}

fn require_subsets(m: usize, budget: u64) -> Result<()> {
    if m >= 63 || (1u64 << m) > budget {
        return Err(Error::BudgetExceeded {
            what: "subset-sum enumeration",
            needed: 2f64.powi(m as i32),
            budget,
        });
    }
    Ok(())
}

/// `δ`: the smallest positive difference between two subset costs of the
/// same agent.
pub fn delta(inst: &Instance, budget: u64) -> Result<Option<Rat>> {
    require_subsets(inst.m(), budget)?;
    Ok((0..inst.n())
        .filter_map(|i| min_gap(&subset_sums(&inst.costs()[i], &[one()])))
        .min())
}

/// Weighted analogue of `δ`: the smallest gap among the values
/// `c_i(S)/α_k` of one agent `i` over all bundles `S` and agents `k`.
pub fn delta_weighted(inst: &Instance, budget: u64) -> Result<Option<Rat>> {
    require_subsets(inst.m(), budget)?;
    let mut alphas = inst.entitlements().to_vec();
    alphas.sort();
    alphas.dedup();
    Ok((0..inst.n())
        .filter_map(|i| min_gap(&subset_sums(&inst.costs()[i], &alphas)))
        .min())
}

/// `δ′` over all simple cycles with `π(C) ≠ 1`.
pub fn delta_prime(inst: &Instance, budget: u64) -> Result<Option<Rat>> {
    inst.require_positive()?;
    let mut best: Option<Rat> = None;
    for_each_cycle(inst.n(), inst.m(), budget, |c| {
        let (fwd, back) = c.products(inst);
        if fwd != back {
            let gap = (fwd - back).abs();
            if best.as_ref().is_none_or(|b| &gap < b) {
                best = Some(gap);
            }
        }
        ControlFlow::<()>::Continue(())
    })?;
    Ok(best)
}

/// All calculators for the prime-power scheme `c_ij · q_ij^ε`.
pub fn thresholds(inst: &Instance, cycle_budget: u64, subset_budget: u64) -> Result<Thresholds> {
    inst.require_positive()?;
    let n = inst.n();
    let m = inst.m();
    let primes = prime_table(n, m);
    let delta = delta(inst, subset_budget)?;
    let delta_prime = delta_prime(inst, cycle_budget)?;
    let (Some(c_max), Some(q)) = (inst.c_max().cloned(), primes.last().and_then(|r| r.last())) else {
        return Ok(Thresholds {
            delta,
            delta_prime,
            eps_nondegen: None,
            eps_ef1: None,
            eps_po: None,
            eps_wef1: None,
            primes,
        });
    };
    let q = int(*q as i64);
    let nn = int(n as i64);
    let mm = int(m as i64);
    let two = int(2);
    let eps_nondegen = delta_prime.as_ref().map(|dp| EpsBound {
        base: &nn * &q,
        ratio: one() + dp / (&two * &nn * &c_max),
    });
    let eps_ef1 = delta.as_ref().map(|d| EpsBound {
        base: q.clone(),
        ratio: one() + d / (&two * &mm * &c_max),
    });
    let eps_po = delta.as_ref().map(|d| EpsBound {
        base: q.clone(),
        ratio: one()
            + pow(d, n as u32) / (&two * &mm * pow(&q, n as u32 - 1) * pow(&c_max, n as u32)),
    });
    let eps_wef1 = delta.as_ref().map(|d| EpsBound {
        base: q.clone(),
        ratio: one() + d * inst.alpha_min() / (&two * &mm * &c_max),
    });
    Ok(Thresholds {
        delta,
        delta_prime,
        eps_nondegen,
        eps_ef1,
        eps_po,
        eps_wef1,
        primes,
    })
}

/// Marker parts `(Π q_{i_k j_k}, Π q_{i_{k+1} j_k})` that the prime-power
/// scheme contributes to `π(C)`.
pub fn prime_markers(primes: &[Vec<u64>], cycle: &BipartiteCycle) -> (BigInt, BigInt) {
    let k = cycle.len();
    let mut fwd = BigInt::one();
    let mut back = BigInt::one();
    for t in 0..k {
        let j = cycle.chores[t];
        fwd *= primes[cycle.agents[t]][j];
        back *= primes[cycle.agents[(t + 1) % k]][j];
    }
    (fwd, back)
}

/// Margin `η` such that multiplying every cost by a factor in `[1, 1 + η)`
/// keeps perturbed EF1/wEF1 allocations EF1/wEF1 and perturbed fPO
/// allocations PO in the original instance.
pub fn margin_eta(inst: &Instance, subset_budget: u64) -> Result<Rat> {
    inst.require_positive()?;
    let n = inst.n();
    let m = inst.m();
    let (Some(c_max), Some(d)) = (inst.c_max().cloned(), delta(inst, subset_budget)?) else {
        return Ok(one());
    };
    let two_m_cmax = int(2 * m as i64) * &c_max;
    let mut eta = pow(&d, n as u32)
        / (&two_m_cmax * pow(&c_max, n as u32 - 1) * pow(&int(2), n as u32 - 1));
    if n > 1 {
        eta = eta.min(&d / &two_m_cmax);
        if let Some(dw) = delta_weighted(inst, subset_budget)? {
            eta = eta.min(dw * inst.alpha_min() / &two_m_cmax);
        }
    }
    Ok(eta)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbPlan {
    /// `factors[i][j] = 1 + k_ij · η / 2^63` with distinct `k_ij`.
    pub factors: Vec<Vec<Rat>>,
    pub eta: Rat,
    pub seed: u64,
    /// Attempt (sampler stream) that produced the factors.
    pub attempt: u32,
    pub certified: bool,
}

impl PerturbPlan {
    pub fn identity(inst: &Instance, seed: u64) -> Self {
        Self {
            factors: vec![vec![one(); inst.m()]; inst.n()],
            eta: one(),
            seed,
            attempt: 0,
            certified: true,
        }
    }

    pub fn apply(&self, inst: &Instance) -> Result<Instance> {
        let costs = inst
            .costs()
            .iter()
            .zip(&self.factors)
            .map(|(row, f)| row.iter().zip(f).map(|(c, f)| c * f).collect())
            .collect();
        inst.with_costs(costs)
    }
}

/// Factors for one sampler stream: distinct offsets `k/2^63` in `(0, 1)`.
pub fn sample_factors(n: usize, m: usize, eta: &Rat, seed: u64, attempt: u32) -> Vec<Vec<Rat>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt as u64);
    let mut seen = std::collections::BTreeSet::new();
    let scale = eta * pow2_inv(63);
    (0..n)
        .map(|_| {
            (0..m)
                .map(|_| loop {
                    let k: u64 = rng.random_range(1..(1u64 << 63));
                    if seen.insert(k) {
                        break one() + Rat::from_integer(BigInt::from(k)) * &scale;
                    }
                })
                .collect()
        })
        .collect()
}

/// Perturbs within [`margin_eta`] and resamples until the result is
/// non-degenerate.
pub fn certify_perturbation(inst: &Instance, seed: u64, cycle_budget: u64) -> Result<(Instance, PerturbPlan)> {
    inst.require_positive()?;
    if inst.m() == 0 {
        return Ok((inst.clone(), PerturbPlan::identity(inst, seed)));
    }
    let eta = margin_eta(inst, DEFAULT_SUBSET_BUDGET)?;
    let mut last_witness = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let factors = sample_factors(inst.n(), inst.m(), &eta, seed, attempt);
        let mut plan = PerturbPlan {
            factors,
            eta: eta.clone(),
            seed,
            attempt,
            certified: false,
        };
        let perturbed = plan.apply(inst)?;
        let report = is_nondegenerate(&perturbed, cycle_budget)?;
        if report.verdict {
            plan.certified = true;
            return Ok((perturbed, plan));
        }
        last_witness = report.witness.map(|w| w.to_string()).unwrap_or_default();
    }
    Err(Error::PerturbationFailed {
        seed,
        attempts: MAX_ATTEMPTS,
        witness: last_witness,
    })
}
