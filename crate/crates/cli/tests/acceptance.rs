//! Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
//! if any criterion fails.

use std::time::{Duration, Instant};

use chorefair::check::{check_po_bruteforce, check_wef1, check_wpef1};
use chorefair::fpo::{certifies, check_fpo, find_fpo_weights};
use chorefair::lp::{Cmp, Lp, LpOutcome};
use chorefair::market::{default_tau, enumerate_optima, reduce, shrink, tight_graph};
use chorefair::par;
use chorefair::perturb::certify_perturbation;
use chorefair::rat::{one, rat, zero, Rat};
use chorefair::search::{kkm_colors, kkm_colors_shrunk, solve, Solution, SolveOptions};
use chorefair::solver::{
    check_invariants, covering_matching, find_pef1, initial_allocation, iteration_bound, r_values, Pef1Run, SolverState,
};
use chorefair::{Allocation, Instance};
use chorefair_cli::{cmd_bench, random_instance, BenchArgs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INSTANCES: u64 = 500;
const TIME_LIMIT: Duration = Duration::from_secs(600);
const STRUCTURAL_PAIRS: usize = 10_000;
const TIED_INSTANCES: u64 = 300;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn report(results: &mut Vec<bool>, id: u32, name: &str, o: Outcome) {
    println!("criterion {id:>2} {:<4} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    results.push(o.pass);
}

fn sized_instance(seed: u64, n: std::ops::RangeInclusive<usize>, m: std::ops::RangeInclusive<usize>, weighted: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(n);
    let m = rng.random_range(m);
    random_instance(&mut rng, n, m, 10, weighted)
}

fn all_allocations(n: usize, m: usize) -> Vec<Allocation> {
    let total = (n as u64).pow(m as u32);
    (0..total)
        .map(|mut rank| {
            let owners: Vec<usize> = (0..m)
                .map(|_| {
                    let o = (rank % n as u64) as usize;
                    rank /= n as u64;
                    o
                })
                .collect();
            Allocation::from_owners(n, &owners)
        })
        .collect()
}

/// fPO as feasibility of `w ≥ 1` with every chore at a cheapest weighted agent.
fn fpo_lp(inst: &Instance, x: &Allocation) -> bool {
    let n = inst.n();
    let mut lp = Lp::new(n);
    for i in 0..n {
        let mut row = vec![zero(); n];
        row[i] = one();
        lp.row(row, Cmp::Ge, one());
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

struct Trial {
    inst: Instance,
    solution: Result<Solution, String>,
}

fn existence_trials(weighted: bool) -> (Vec<Trial>, Duration) {
    let start = Instant::now();
    let base = if weighted { 1_000_000 } else { 0 };
    let trials = par::map_range(INSTANCES as usize, |t| {
        let seed = base + t as u64;
        let inst = sized_instance(seed, 2..=4, 1..=8, weighted);
        let solution = solve(&inst, &SolveOptions { seed, ..SolveOptions::default() }).map_err(|e| e.to_string());
        Trial { inst, solution }
    });
    (trials, start.elapsed())
}

fn existence(trials: &[Trial], elapsed: Duration) -> Outcome {
    let mut failures = Vec::new();
    for (t, trial) in trials.iter().enumerate() {
        let ok = match &trial.solution {
            Ok(s) => {
                check_wef1(&trial.inst, &s.allocation).map(|r| r.verdict).unwrap_or(false)
                    && check_po_bruteforce(&trial.inst, &s.allocation, 10_000_000)
                        .map(|r| r.verdict)
                        .unwrap_or(false)
            }
            Err(_) => false,
        };
        if !ok {
            failures.push(t);
        }
    }
    outcome(
        failures.is_empty() && elapsed < TIME_LIMIT,
        format!(
            "{} instances, {} failures {:?}, {:.1}s (limit {}s)",
            trials.len(),
            failures.len(),
            &failures[..failures.len().min(5)],
            elapsed.as_secs_f64(),
            TIME_LIMIT.as_secs()
        ),
    )
}

fn fpo_certification(all: &[&Trial]) -> Outcome {
    let mut bad = 0;
    for trial in all {
        if let Ok(s) = &trial.solution {
            let reduced = s.preprocessed.restrict(&s.allocation);
            if !check_fpo(&s.perturbed, &reduced).map(|r| r.verdict).unwrap_or(false) {
                bad += 1;
            }
        }
    }
    let checks = par::map_range(60, |t| {
        let inst = sized_instance(2_000_000 + t as u64, 2..=3, 1..=5, false);
        let mut disagreements = 0;
        let mut count = 0;
        for x in all_allocations(inst.n(), inst.m()) {
            let verdict = check_fpo(&inst, &x).unwrap().verdict;
            let search = find_fpo_weights(&inst, &x)
                .unwrap()
                .is_some_and(|w| certifies(&inst, &x, &w));
            let lp = fpo_lp(&inst, &x);
            disagreements += usize::from(verdict != search || verdict != lp);
            count += 1;
        }
        (count, disagreements)
    });
    let total: usize = checks.iter().map(|c| c.0).sum();
    let disagreements: usize = checks.iter().map(|c| c.1).sum();
    outcome(
        bad == 0 && disagreements == 0,
        format!(
            "{} outputs fPO on the perturbed instance with {bad} failures; {total} allocations on 60 small instances, {disagreements} disagreements",
            all.len()
        ),
    )
}

/// A FindpEF1 run started from a known optimum.
struct TiedRun {
    inst: Instance,
    w: Vec<Rat>,
    start: Allocation,
    run: Result<Pef1Run, String>,
}

/// Trees of agents joined by shared chores at uniform weights, with
/// several agents tied on the largest forced cost so that `R` has more than
/// one member and transfers are needed.
fn tied_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=6usize);
    let m = 2 * n - 1;
    let mut costs = vec![vec![rat(300, 1); m]; n];
    let top = rng.random_range(4..=8i64);
    for i in 0..n {
        let forced = if rng.random_bool(0.5) { top } else { rng.random_range(1..top) };
        costs[i][i] = rat(forced, 1);
        if i > 0 {
            let parent = rng.random_range(0..i);
            let c = rat(rng.random_range(top..=top + 6), 1);
            costs[i][n + i - 1] = c.clone();
            costs[parent][n + i - 1] = c;
        }
    }
    Instance::new(costs).unwrap()
}

fn tied_runs() -> Vec<TiedRun> {
    par::map_range(TIED_INSTANCES as usize, |t| {
        let inst = tied_instance(5_000_000 + t as u64);
        let w = vec![rat(1, inst.n() as i64); inst.n()];
        let g = tight_graph(&inst, &w);
        let h = reduce(&g).unwrap();
        let rv = r_values(&g, &h, inst.entitlements());
        let starts: Vec<Allocation> = enumerate_optima(&g, 100_000)
            .unwrap()
            .filter(|x| check_invariants(&g, &h, &rv, inst.entitlements(), x).is_ok())
            .collect();
        starts
            .into_iter()
            .map(|start| {
                let run = SolverState::new(&inst, g.clone(), start.clone())
                    .and_then(find_pef1)
                    .map_err(|e| e.to_string());
                TiedRun { inst: inst.clone(), w: w.clone(), start, run }
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

fn phi_ok(n: usize, run: &Pef1Run) -> bool {
    run.steps.iter().all(|st| st.phi_after < st.phi_before)
        && run.iterations() as u64 <= run.phi_start()
        && run.phi_start() <= iteration_bound(n)
}

fn pipeline_runs<'a>(all: &'a [&Trial]) -> impl Iterator<Item = (&'a Solution, &'a Pef1Run)> {
    all.iter()
        .filter_map(|t| t.solution.as_ref().ok())
        .filter_map(|s| s.run.as_ref().map(|r| (s, r)))
}

fn tied_ok(tied: &[TiedRun]) -> impl Iterator<Item = (&TiedRun, &Pef1Run)> {
    tied.iter().filter_map(|t| t.run.as_ref().ok().map(|r| (t, r)))
}

fn termination(all: &[&Trial], tied: &[TiedRun]) -> Outcome {
    let mut bad = tied.iter().filter(|t| t.run.is_err()).count();
    let mut max_iter = 0;
    let mut runs = 0;
    let mut stepping = 0;
    let pipeline = pipeline_runs(all).map(|(s, r)| (s.perturbed.n(), r));
    for (n, run) in pipeline.chain(tied_ok(tied).map(|(t, r)| (t.inst.n(), r))) {
        runs += 1;
        bad += usize::from(!phi_ok(n, run));
        max_iter = max_iter.max(run.iterations());
        stepping += usize::from(run.iterations() > 0);
    }
    outcome(
        bad == 0 && stepping > 0,
        format!("{runs} instrumented runs ({} tied-tree), {stepping} with steps, at most {max_iter} iterations, {bad} violations", tied.len()),
    )
}

/// Replays the transfers from `start`, re-checking both invariants after
/// every step. Returns the number of states checked, or `None` on failure.
fn replay(inst: &Instance, w: &[Rat], start: Allocation, run: &Pef1Run) -> Option<usize> {
    let g = tight_graph(inst, w);
    let h = reduce(&g).ok()?;
    let rv = r_values(&g, &h, inst.entitlements());
    let mut x = start;
    let mut ok = check_invariants(&g, &h, &rv, inst.entitlements(), &x).is_ok();
    let mut states = 1;
    for step in &run.steps {
        for k in (step.pivot + 1)..=step.chores.len() {
            let j = step.chores[k - 1];
            x.remove(step.agents[k], j);
            x.insert(step.agents[k - 1], j);
        }
        ok &= check_invariants(&g, &h, &rv, inst.entitlements(), &x).is_ok();
        states += 1;
    }
    (ok && x == run.allocation).then_some(states)
}

fn invariants(all: &[&Trial], tied: &[TiedRun]) -> Outcome {
    let mut runs = 0;
    let mut states = 0;
    let mut bad = 0;
    let invariant_fallbacks = all
        .iter()
        .filter_map(|t| t.solution.as_ref().ok())
        .filter(|s| s.certificate.fallback.as_deref().is_some_and(|f| f.contains("invariant")))
        .count();
    for (s, run) in pipeline_runs(all) {
        let Some(shrunk) = &s.certificate.shrunk_weights else { continue };
        runs += 1;
        let pert = &s.perturbed;
        let g = tight_graph(pert, shrunk);
        let h = reduce(&g).unwrap();
        let rv = r_values(&g, &h, pert.entitlements());
        let colors = kkm_colors_shrunk(pert, shrunk).unwrap();
        match initial_allocation(&g, &h, &rv, pert.entitlements(), &colors.witnesses)
            .ok()
            .and_then(|x0| replay(pert, shrunk, x0, run))
        {
            Some(k) => states += k,
            None => bad += 1,
        }
    }
    for (t, run) in tied_ok(tied) {
        runs += 1;
        match replay(&t.inst, &t.w, t.start.clone(), run) {
            Some(k) => states += k,
            None => bad += 1,
        }
    }
    outcome(
        bad == 0 && invariant_fallbacks == 0,
        format!("{runs} runs replayed over {states} states, {bad} violations, {invariant_fallbacks} invariant fallbacks"),
    )
}

fn levels(all: &[&Trial], tied: &[TiedRun]) -> Outcome {
    let runs: Vec<&Pef1Run> = pipeline_runs(all)
        .map(|(_, r)| r)
        .chain(tied_ok(tied).map(|(_, r)| r))
        .collect();
    let bad = runs.iter().filter(|r| !r.levels_monotone()).count();
    let steps: usize = runs.iter().map(|r| r.iterations()).sum();
    outcome(bad == 0 && steps > 0, format!("{} runs, {steps} steps, {bad} decreases", runs.len()))
}

fn preservation() -> Outcome {
    let results = par::map_range(80, |t| {
        let seed = 3_000_000 + t as u64;
        let inst = sized_instance(seed, 2..=3, 1..=5, t % 2 == 1);
        let (pert, _) = certify_perturbation(&inst, seed, 10_000_000).unwrap();
        let mut checked = 0;
        let mut counter = 0;
        for x in all_allocations(inst.n(), inst.m()) {
            if check_wef1(&pert, &x).unwrap().verdict {
                checked += 1;
                counter += usize::from(!check_wef1(&inst, &x).unwrap().verdict);
            }
            if check_fpo(&pert, &x).unwrap().verdict {
                checked += 1;
                counter += usize::from(!check_po_bruteforce(&inst, &x, 10_000_000).unwrap().verdict);
            }
        }
        (checked, counter)
    });
    let checked: usize = results.iter().map(|r| r.0).sum();
    let counter: usize = results.iter().map(|r| r.1).sum();
    outcome(counter == 0, format!("80 instances, {checked} implications checked, {counter} counterexamples"))
}

/// Random simplex point; about a quarter of the draws are vertices.
fn sample_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rat> {
    if rng.random_range(0..4) == 0 {
        let mut w = vec![zero(); n];
        w[rng.random_range(0..n)] = one();
        return w;
    }
    let masses: Vec<i64> = (0..n).map(|_| rng.random_range(0..12)).collect();
    let total: i64 = masses.iter().sum();
    if total == 0 {
        return vec![rat(1, n as i64); n];
    }
    masses.iter().map(|&k| rat(k, total)).collect()
}

fn structural() -> Outcome {
    let per = 50;
    let instances = STRUCTURAL_PAIRS.div_ceil(per);
    let results = par::map_range(instances, |t| {
        let seed = 4_000_000 + t as u64;
        let inst = sized_instance(seed, 2..=4, 1..=8, t % 2 == 1);
        let (pert, _) = certify_perturbation(&inst, seed, 10_000_000).unwrap();
        let tau = default_tau(&pert);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fails = 0;
        for _ in 0..per {
            let w = sample_weights(&mut rng, pert.n());
            let sw = shrink(&pert, &w, &tau).unwrap();
            let g = tight_graph(&pert, &sw.shrunk);
            let ok = g.is_forest()
                && reduce(&g).is_ok_and(|h| {
                    h.chores.len() < pert.n()
                        && covering_matching(&g, &h.chores).is_ok_and(|mt| mt.len() == h.chores.len())
                });
            fails += usize::from(!ok);
        }
        fails
    });
    let fails: usize = results.iter().sum();
    outcome(
        fails == 0,
        format!("{} (instance, w) pairs, {fails} failures", instances * per),
    )
}

fn kkm() -> Outcome {
    let results = par::map_range(400, |t| {
        let seed = 5_000_000 + t as u64;
        let inst = sized_instance(seed, 2..=4, 1..=7, t % 2 == 1);
        let (pert, _) = certify_perturbation(&inst, seed, 10_000_000).unwrap();
        let tau = default_tau(&pert);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = pert.n();
        let mut points: Vec<Vec<Rat>> = (0..n)
            .map(|i| {
                let mut w = vec![zero(); n];
                w[i] = one();
                w
            })
            .collect();
        points.extend((0..6).map(|_| sample_weights(&mut rng, n)));
        let fails = points
            .iter()
            .filter(|w| {
                !kkm_colors(&pert, w, &tau)
                    .is_ok_and(|c| c.agents().iter().any(|&i| w[i] > zero()))
            })
            .count();
        (points.len(), fails)
    });
    let total: usize = results.iter().map(|r| r.0).sum();
    let fails: usize = results.iter().map(|r| r.1).sum();
    outcome(fails == 0, format!("{total} sampled points including all simplex vertices, {fails} failures"))
}

fn pef1_implies_ef1(all: &[&Trial], tied: &[TiedRun]) -> Outcome {
    let mut runs = 0;
    let mut bad = 0;
    let mut check = |inst: &Instance, w: &[Rat], run: &Pef1Run| {
        runs += 1;
        let g = tight_graph(inst, w);
        let ok = check_wpef1(&g.prices, &run.allocation, inst.entitlements()).verdict
            && check_wef1(inst, &run.allocation).unwrap().verdict;
        bad += usize::from(!ok);
    };
    for (s, run) in pipeline_runs(all) {
        if let Some(shrunk) = &s.certificate.shrunk_weights {
            check(&s.perturbed, shrunk, run);
        }
    }
    for (t, run) in tied_ok(tied) {
        check(&t.inst, &t.w, run);
    }
    outcome(bad == 0, format!("{runs} FindpEF1 outputs, {bad} failures"))
}

fn fallback_rate(all: &[&Trial]) -> Outcome {
    let args = BenchArgs {
        trials: 100,
        agents: 2..=3,
        chores: 2..=6,
        max_cost: 10,
        seed: 0,
        entitlements: false,
        method: "paper".into(),
    };
    let csv = cmd_bench(&args).unwrap();
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').collect())
        .collect();
    let broken = rows.iter().filter(|r| r[7] != "true" || r[10] != "true").count();
    let trailer = csv.lines().last().unwrap_or("").trim_start_matches("# ");
    let harness_fallbacks = all
        .iter()
        .filter(|t| t.solution.as_ref().is_ok_and(|s| s.certificate.fallback.is_some()))
        .count();
    outcome(
        rows.len() == 100 && broken == 0,
        format!(
            "bench {trailer}, {} rows, {broken} with ef1 or po false; existence harness fell back on {harness_fallbacks}/{}",
            rows.len(),
            all.len()
        ),
    )
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let start = Instant::now();
    println!(
        "acceptance run ({} mode)",
        if par::is_parallel() { "parallel" } else { "sequential" }
    );
    let mut results = Vec::new();
    let (plain, plain_time) = existence_trials(false);
    report(&mut results, 1, "EF1+PO existence", existence(&plain, plain_time));
    let (weighted, weighted_time) = existence_trials(true);
    report(&mut results, 2, "weighted EF1+PO existence", existence(&weighted, weighted_time));
    let all: Vec<&Trial> = plain.iter().chain(&weighted).collect();
    report(&mut results, 3, "fPO certification", fpo_certification(&all));
    let tied = tied_runs();
    report(&mut results, 4, "termination bound", termination(&all, &tied));
    report(&mut results, 5, "invariant maintenance", invariants(&all, &tied));
    report(&mut results, 6, "level monotonicity", levels(&all, &tied));
    report(&mut results, 7, "perturbation preservation", preservation());
    report(&mut results, 8, "structural lemmas", structural());
    report(&mut results, 9, "KKM colour guarantee", kkm());
    report(&mut results, 10, "pEF1 implies EF1", pef1_implies_ef1(&all, &tied));
    report(&mut results, 11, "fallback rate reported", fallback_rate(&all));
    let passed = results.iter().filter(|&&p| p).count();
    println!(
        "acceptance: {passed}/{} criteria passed in {:.1}s",
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if passed != results.len() {
        std::process::exit(1);
    }
}
