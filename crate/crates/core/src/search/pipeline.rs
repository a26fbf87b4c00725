//! End-to-end solve: zero-cost preprocessing, certified perturbation, weight
//! search, FindpEF1, lifting, certification, and the brute-force fallback.

use crate::check::{check_po_bruteforce, check_wef1, check_wpef1, DEFAULT_ORACLE_BUDGET};
use crate::error::{Error, Result};
use crate::fpo::check_fpo;
use crate::instance::{preprocess_zero_costs, Allocation, AllocationSpace, Instance, Preprocessed};
use crate::market::{default_tau, reduce, tau_bound, tight_graph, DEFAULT_OPTIMA_CAP};
use crate::par;
use crate::perturb::{certify_perturbation, PerturbPlan, DEFAULT_CYCLE_BUDGET};
use crate::rat::{zero, Rat};
use crate::solver::{find_pef1, initial_allocation, r_values, Pef1Run, SolverState};

use super::{cells, find_weights, SearchBudget};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Paper,
    Bruteforce,
    Cells,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Paper => "paper",
            Method::Bruteforce => "bruteforce",
            Method::Cells => "cells",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper" => Some(Method::Paper),
            "bruteforce" => Some(Method::Bruteforce),
            "cells" => Some(Method::Cells),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub method: Method,
    /// Defaults to half the admissible bound of the perturbed instance.
    pub tau: Option<Rat>,
    pub seed: u64,
    /// Limit on `n^m` for the brute-force oracle and fallback.
    pub oracle_budget: u64,
    pub cycle_budget: u64,
    pub search: SearchBudget,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::Paper,
            tau: None,
            seed: 0,
            oracle_budget: DEFAULT_ORACLE_BUDGET,
            cycle_budget: DEFAULT_CYCLE_BUDGET,
            search: SearchBudget::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checks {
    /// wEF1 on the original instance.
    pub ef1: bool,
    /// wpEF1 at the certificate prices; `None` without prices.
    pub pef1: Option<bool>,
    pub fpo_perturbed: bool,
    /// `None` when the brute-force oracle was over budget.
    pub po_original: Option<bool>,
}

impl Checks {
    pub fn certified(&self) -> bool {
        self.ef1 && self.fpo_perturbed && self.po_original != Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub tau: Rat,
    /// Simplex weights found by the search (absent for brute force).
    pub weights: Option<Vec<Rat>>,
    pub shrunk_weights: Option<Vec<Rat>>,
    /// Perturbed dual prices indexed by original chore; forced zero-cost
    /// chores are priced zero.
    pub prices: Option<Vec<Rat>>,
    pub perturbation_seed: u64,
    pub perturbation_attempt: u32,
    pub checks: Checks,
    /// Method that produced the allocation.
    pub method: Method,
    pub iterations: usize,
    pub phi_start: Option<u64>,
    /// Why the requested method was abandoned for brute force.
    pub fallback: Option<String>,
    pub search_phase: Option<&'static str>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub allocation: Allocation,
    pub certificate: Certificate,
    pub run: Option<Pef1Run>,
    /// Positive-cost instance after zero-cost preprocessing, perturbed.
    pub perturbed: Instance,
    pub plan: PerturbPlan,
    pub preprocessed: Preprocessed,
}

/// First allocation in odometer order that is wEF1 and fPO.
pub fn solve_bruteforce(inst: &Instance, budget: u64) -> Result<Allocation> {
    let n = inst.n();
    let space = AllocationSpace::new(n, inst.m());
    let total = space.require_within(budget, "brute-force solve")?;
    let hit = par::find_first(total, |rank| {
        let x = Allocation::from_owners(n, &space.owners_at(rank));
        let ef1 = crate::check::wef1_unchecked(inst, &x).verdict;
        (ef1 && check_fpo(inst, &x).ok()?.verdict).then_some(x)
    });
    hit.map(|(_, x)| x).ok_or_else(|| {
        Error::CertificationFailed("no wEF1 and fPO allocation exists among all allocations".into())
    })
}

struct Attempt {
    reduced: Allocation,
    weights: Option<(Vec<Rat>, Vec<Rat>, Vec<Rat>)>,
    run: Option<Pef1Run>,
    phase: Option<&'static str>,
}

fn paper_attempt(pert: &Instance, tau: &Rat, opts: &SolveOptions) -> Result<Option<Attempt>> {
    let Some(found) = find_weights(pert, tau, &opts.search)? else {
        return Ok(None);
    };
    let g = tight_graph(pert, &found.weights.shrunk);
    let h = reduce(&g)?;
    let rv = r_values(&g, &h, pert.entitlements());
    let x0 = initial_allocation(&g, &h, &rv, pert.entitlements(), &found.colors.witnesses)?;
    let prices = g.prices.clone();
    let run = find_pef1(SolverState::new(pert, g, x0)?)?;
    Ok(Some(Attempt {
        reduced: run.allocation.clone(),
        weights: Some((found.weights.weights, found.weights.shrunk, prices)),
        run: Some(run),
        phase: Some(found.phase.name()),
    }))
}

fn cells_attempt(pert: &Instance, tau: &Rat, opts: &SolveOptions) -> Result<Option<Attempt>> {
    let faces = cells::enumerate_cells(pert, tau, opts.search.max_candidates)?;
    for face in &faces {
        for x in crate::market::enumerate_optima(&face.graph, DEFAULT_OPTIMA_CAP)? {
            if crate::check::wef1_unchecked(pert, &x).verdict {
                return Ok(Some(Attempt {
                    reduced: x,
                    weights: Some((
                        face.weights.weights.clone(),
                        face.weights.shrunk.clone(),
                        face.graph.prices.clone(),
                    )),
                    run: None,
                    phase: None,
                }));
            }
        }
    }
    Ok(None)
}

fn certify(
    raw: &Instance,
    pert: &Instance,
    pre: &Preprocessed,
    reduced: &Allocation,
    prices: Option<&[Rat]>,
    budget: u64,
) -> Result<(Allocation, Checks)> {
    let x = pre.lift(reduced);
    let ef1 = check_wef1(raw, &x)?.verdict;
    let fpo_perturbed = check_fpo(pert, reduced)?.verdict;
    let po_original = match check_po_bruteforce(raw, &x, budget) {
        Ok(r) => Some(r.verdict),
        Err(e) if e.is_budget() => None,
        Err(e) => return Err(e),
    };
    let pef1 = prices.map(|p| check_wpef1(p, reduced, pert.entitlements()).verdict);
    Ok((
        x,
        Checks {
            ef1,
            pef1,
            fpo_perturbed,
            po_original,
        },
    ))
}

/// Computes a certified wEF1 + PO allocation of `raw`.
pub fn solve(raw: &Instance, opts: &SolveOptions) -> Result<Solution> {
    let pre = preprocess_zero_costs(raw);
    let inst = &pre.instance;
    let (pert, plan) = certify_perturbation(inst, opts.seed, opts.cycle_budget)?;
    let tau = match &opts.tau {
        Some(t) => {
            if t <= &zero() || t >= &tau_bound(&pert) {
                return Err(Error::TauOutOfRange(crate::rat::fmt_rat(t)));
            }
            t.clone()
        }
        None => default_tau(&pert),
    };
    let attempt = match opts.method {
        Method::Paper => paper_attempt(&pert, &tau, opts),
        Method::Cells => cells_attempt(&pert, &tau, opts),
        Method::Bruteforce => solve_bruteforce(&pert, opts.oracle_budget).map(|x| {
            Some(Attempt {
                reduced: x,
                weights: None,
                run: None,
                phase: None,
            })
        }),
    };
    let mut fallback = None;
    let mut accepted = None;
    match attempt {
        Ok(Some(a)) => {
            let prices = a.weights.as_ref().map(|w| w.2.as_slice());
            let (x, checks) = certify(raw, &pert, &pre, &a.reduced, prices, opts.oracle_budget)?;
            if checks.certified() {
                accepted = Some((a, x, checks));
            } else {
                fallback = Some(format!("{} output failed certification", opts.method.name()));
            }
        }
        Ok(None) => fallback = Some("weight search exhausted its budget".to_string()),
        Err(e) if opts.method == Method::Bruteforce => return Err(e),
        Err(e) => fallback = Some(format!("{} method error: {e}", opts.method.name())),
    }
    let method = if accepted.is_some() {
        opts.method
    } else {
        Method::Bruteforce
    };
    let (a, x, checks) = match accepted {
        Some(hit) => hit,
        None => {
            let reduced = solve_bruteforce(&pert, opts.oracle_budget)?;
            let (x, checks) = certify(raw, &pert, &pre, &reduced, None, opts.oracle_budget)?;
            if !checks.certified() {
                return Err(Error::CertificationFailed(format!(
                    "brute-force fallback output {} failed certification",
                    x.display()
                )));
            }
            (
                Attempt {
                    reduced,
                    weights: None,
                    run: None,
                    phase: None,
                },
                x,
                checks,
            )
        }
    };
    let prices = a.weights.as_ref().map(|(_, _, p)| {
        let mut full = vec![zero(); raw.m()];
        for (r, &j) in pre.kept.iter().enumerate() {
            full[j] = p[r].clone();
        }
        full
    });
    let certificate = Certificate {
        tau,
        weights: a.weights.as_ref().map(|w| w.0.clone()),
        shrunk_weights: a.weights.as_ref().map(|w| w.1.clone()),
        prices,
        perturbation_seed: opts.seed,
        perturbation_attempt: plan.attempt,
        checks,
        method,
        iterations: a.run.as_ref().map_or(0, Pef1Run::iterations),
        phi_start: a.run.as_ref().map(Pef1Run::phi_start),
        fallback,
        search_phase: a.phase,
    };
    Ok(Solution {
        allocation: x,
        certificate,
        run: a.run,
        perturbed: pert,
        plan,
        preprocessed: pre,
    })
}
