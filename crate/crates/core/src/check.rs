//! Fairness and efficiency checkers and the brute-force Pareto oracle.

use std::fmt;

use crate::error::Result;
use crate::instance::{Allocation, AllocationSpace, Instance};
use crate::par;
use crate::rat::{zero, Rat, RatTuple};

/// Default limit on `n^m` for exhaustive oracles.
pub const DEFAULT_ORACLE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// `envious` violates the property with respect to `envied`.
    Pair { envious: usize, envied: usize },
    /// An allocation Pareto-dominating the checked one.
    Dominating(Allocation),
    /// Improving exchange cycle: chore `chores[t]` leaves `agents[t]` for
    /// `agents[t + 1]` (cyclically).
    Cycle { agents: Vec<usize>, chores: Vec<usize> },
    /// Positive weights under which the allocation is optimal.
    Weights(Vec<Rat>),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Pair { envious, envied } => write!(f, "({}, {})", envious + 1, envied + 1),
            Witness::Dominating(y) => write!(f, "dominated by {}", y.display()),
            Witness::Cycle { agents, chores } => {
                for (a, j) in agents.iter().zip(chores) {
                    write!(f, "{} -[{}]-> ", a + 1, j + 1)?;
                }
                write!(f, "{}", agents[0] + 1)
            }
            Witness::Weights(w) => write!(f, "w = {}", RatTuple(w)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub property: &'static str,
    pub verdict: bool,
    pub witness: Option<Witness>,
}

impl CheckReport {
    pub fn pass(property: &'static str) -> Self {
        Self {
            property,
            verdict: true,
            witness: None,
        }
    }

    pub fn pass_with(property: &'static str, witness: Witness) -> Self {
        Self {
            property,
            verdict: true,
            witness: Some(witness),
        }
    }

    pub fn fail(property: &'static str, witness: Witness) -> Self {
        Self {
            property,
            verdict: false,
            witness: Some(witness),
        }
    }
}

/// Weighted EF1 (plain EF1 at unit entitlements).
pub fn check_wef1(inst: &Instance, x: &Allocation) -> Result<CheckReport> {
    x.validate(inst.n(), inst.m())?;
    Ok(wef1_unchecked(inst, x))
}

pub(crate) fn wef1_unchecked(inst: &Instance, x: &Allocation) -> CheckReport {
    let n = inst.n();
    for i in 0..n {
        let own = inst.cost_of(i, x.bundle(i));
        let alpha_i = inst.entitlement(i);
        let lhs = &own / alpha_i;
        let worst = x.bundle(i).iter().map(|&j| inst.cost(i, j)).max();
        let relieved = match worst {
            Some(c) => (&own - c) / alpha_i,
            None => zero(),
        };
        for k in (0..n).filter(|&k| k != i) {
            let rhs = inst.cost_of(i, x.bundle(k)) / inst.entitlement(k);
            if lhs > rhs && relieved > rhs {
                return CheckReport::fail(
                    "wef1",
                    Witness::Pair {
                        envious: i,
                        envied: k,
                    },
                );
            }
        }
    }
    CheckReport::pass("wef1")
}

/// Price of a bundle.
pub fn bundle_price<'a>(p: &[Rat], bundle: impl IntoIterator<Item = &'a usize>) -> Rat {
    bundle.into_iter().fold(zero(), |acc, &j| acc + &p[j])
}

/// Bundle price after dropping its most expensive chore; zero for the empty bundle.
pub fn p_hat<'a>(p: &[Rat], bundle: impl IntoIterator<Item = &'a usize> + Clone) -> Rat {
    let total = bundle_price(p, bundle.clone());
    match bundle.into_iter().map(|&j| &p[j]).max() {
        Some(top) => total - top,
        None => zero(),
    }
}

/// Weighted price-EF1: `max_i p̂(x_i)/α_i ≤ min_k p(x_k)/α_k`. On failure the
/// witness pairs the agent attaining the maximum with the one attaining the
/// minimum.
pub fn check_wpef1(p: &[Rat], x: &Allocation, alpha: &[Rat]) -> CheckReport {
    let n = x.n();
    let hat: Vec<Rat> = (0..n).map(|i| p_hat(p, x.bundle(i)) / &alpha[i]).collect();
    let full: Vec<Rat> = (0..n).map(|i| bundle_price(p, x.bundle(i)) / &alpha[i]).collect();
    let top = (0..n).max_by(|&a, &b| hat[a].cmp(&hat[b]).then(b.cmp(&a)));
    let bottom = (0..n).min_by(|&a, &b| full[a].cmp(&full[b]).then(a.cmp(&b)));
    match (top, bottom) {
        (Some(i), Some(k)) if hat[i] > full[k] => CheckReport::fail(
            "wpef1",
            Witness::Pair {
                envious: i,
                envied: k,
            },
        ),
        _ => CheckReport::pass("wpef1"),
    }
}

/// Exhaustive Pareto-optimality oracle over all `n^m` allocations.
pub fn check_po_bruteforce(inst: &Instance, x: &Allocation, budget: u64) -> Result<CheckReport> {
    x.validate(inst.n(), inst.m())?;
    let n = inst.n();
    if n == 1 {
        return Ok(CheckReport::pass("po"));
    }
    let space = AllocationSpace::new(n, inst.m());
    let total = space.require_within(budget, "Pareto brute force")?;
    let base: Vec<Rat> = (0..n).map(|i| inst.cost_of(i, x.bundle(i))).collect();
    let hit = par::find_first(total, |rank| {
        let owners = space.owners_at(rank);
        let mut costs = vec![zero(); n];
        for (j, &i) in owners.iter().enumerate() {
            costs[i] += inst.cost(i, j);
            if costs[i] > base[i] {
                return None;
            }
        }
        costs
            .iter()
            .zip(&base)
            .any(|(c, b)| c < b)
            .then_some(owners)
    });
    Ok(match hit {
        Some((_, owners)) => CheckReport::fail(
            "po",
            Witness::Dominating(Allocation::from_owners(n, &owners)),
        ),
        None => CheckReport::pass("po"),
    })
}
