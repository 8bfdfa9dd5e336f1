//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cubetune_core::backend::{
    mini_cdcl_solve, Backend, BackendError, Budget, CubeSplit, CuberKind, ExternalConfig, ExternalSolver,
    MiniSolverParams, SolveOutcome, SolveStatus, Solver,
};
use cubetune_core::collect::{
    collect, collect_with_limit, effective_budget, CollectConfig, CollectError, CollectStatus, CubeQueue,
    StrategyPool,
};
use cubetune_core::formula::{brute_force_sat, parse_dimacs, parse_icnf, write_dimacs, write_icnf, Cube, Formula};
use cubetune_core::orchestrate::generate::{php, random_3cnf, xor_miter};
use cubetune_core::orchestrate::report::common_cube_costs;
use cubetune_core::orchestrate::{plain_cnc, sdac, Band, BackendConfig, Phase, RunConfig};
use cubetune_core::strategy::{presets, ParamDef, Strategy, StrategySpace};
use cubetune_core::tune::{acceptance_probability, tune, MhChain, TuneConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn mini() -> Backend {
    Backend::mini_cdcl(presets::mini_cdcl(), CuberKind::Lookahead)
}

fn partition(f: &Formula, b: &Backend, k: usize, seed: u64) -> Vec<Cube> {
    match b.cube(f, &Cube::top(), k, seed).unwrap() {
        CubeSplit::Cubes(c) => c,
        _ => vec![Cube::top()],
    }
}

fn collect_config(n: usize, min_cost: u64, max_cost: u64, growth: &str, seed: u64) -> CollectConfig {
    CollectConfig {
        sample_target: n,
        min_cost,
        max_cost,
        online_cubes: 4,
        budget_growth: growth.parse().unwrap(),
        seed,
    }
}

fn space_counts() -> Outcome {
    let kissat = presets::kissat();
    let all = kissat.enumerate().map_err(|e| e.to_string())?;
    ensure(all.len() == 349 && kissat.count() == 349, || format!("kissat space has {}", all.len()))?;
    ensure(all.iter().all(|s| s.deviations() <= 4), || "a strategy deviates in more than four".into())?;
    let marabou = presets::marabou();
    let twelve = marabou.enumerate().map_err(|e| e.to_string())?.len();
    ensure(twelve == 12, || format!("two-parameter space has {twelve}"))?;
    Ok("349 and 12".into())
}

fn band_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut unknown = 0;
    for run in 0..100u64 {
        let (f, k) = if run % 2 == 0 {
            let p = rng.gen_range(6..=7);
            (php(p, p - 1), 16)
        } else {
            let vars = rng.gen_range(30..=60);
            (random_3cnf(vars, vars * 4 + vars / 4, rng.gen()), 8)
        };
        let growth = ["2", "1.5", "1"][(run % 3) as usize];
        let n = rng.gen_range(1..=6);
        let min_cost = rng.gen_range(0..20);
        let max_cost = min_cost + rng.gen_range(1..200);
        let cfg = collect_config(n, min_cost, max_cost, growth, run);
        let b = mini();
        let mut queue = CubeQueue::new(partition(&f, &b, k, run), run);
        let res = collect(&f, &mut queue, &cfg, &StrategyPool::Space(presets::mini_cdcl()), &b, 1 + (run % 2) as usize)
            .map_err(|e| e.to_string())?;
        if res.status != CollectStatus::Unknown {
            continue;
        }
        unknown += 1;
        ensure(res.collected.len() == n, || format!("run {run}: {} cubes, wanted {n}", res.collected.len()))?;
        for c in &res.collected {
            let cap = effective_budget(max_cost, &cfg.budget_growth, c.resplits).map_err(|e| e.to_string())?;
            ensure(min_cost <= c.cost && c.cost <= cap, || format!("run {run}: cost {} outside [{min_cost}, {cap}]", c.cost))?;
        }
    }
    ensure(unknown >= 50, || format!("only {unknown} runs reached the band"))?;
    Ok(format!("{unknown}/100 runs collected, zero violations"))
}

fn soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut decided_collect, mut checked) = (0, 0);
    for i in 0..500u64 {
        let vars = rng.gen_range(3..=16);
        let ratio = rng.gen_range(2.0..6.0);
        let f = random_3cnf(vars, (vars as f64 * ratio) as usize, rng.gen());
        let expected = brute_force_sat(&f).unwrap().is_sat();
        let kind = if i % 2 == 0 { CuberKind::Lookahead } else { CuberKind::UnitClause };
        let workers = if i % 4 == 0 { 4 } else { 1 };

        let b = Backend::mini_cdcl(presets::mini_cdcl(), kind);
        let mut queue = CubeQueue::new(partition(&f, &b, 1 << rng.gen_range(1..4), i), i);
        let cfg = collect_config(rng.gen_range(1..4), rng.gen_range(0..3), rng.gen_range(3..10), "2", rng.gen());
        let res = collect(&f, &mut queue, &cfg, &StrategyPool::Space(presets::mini_cdcl()), &b, workers)
            .map_err(|e| format!("formula {i}: {e}"))?;
        match res.status {
            CollectStatus::Sat(m) => {
                decided_collect += 1;
                ensure(expected && f.is_satisfied_by(&m), || format!("formula {i}: collect claimed sat"))?;
            }
            CollectStatus::Unsat => {
                decided_collect += 1;
                ensure(!expected, || format!("formula {i}: collect claimed unsat"))?;
            }
            CollectStatus::Unknown => {}
        }

        let run = RunConfig {
            seed: rng.gen(),
            workers,
            initial_cubes: Some(1 << rng.gen_range(1..4)),
            tuning: Band { cubes: rng.gen_range(1..4), min_cost: 0, max_cost: rng.gen_range(2..20) },
            validation: Band { cubes: rng.gen_range(1..3), min_cost: 0, max_cost: rng.gen_range(2..40) },
            online_cubes: 4,
            backend: BackendConfig::MiniCdcl { cuber: kind },
            ..RunConfig::default()
        };
        let report = sdac(&f, &run).map_err(|e| format!("formula {i}: {e}"))?;
        let answer = report.answer.ok_or_else(|| format!("formula {i}: no answer"))?;
        ensure(answer.is_sat() == expected, || format!("formula {i}: sdac answered wrongly"))?;
        if let Some(m) = answer.assignment() {
            ensure(f.is_satisfied_by(&m), || format!("formula {i}: sdac model fails"))?;
        }
        checked += 1;
    }
    Ok(format!("{checked} sdac answers and {decided_collect} collect verdicts agree with brute force"))
}

fn all_params() -> Vec<MiniSolverParams> {
    let space = presets::mini_cdcl();
    space
        .enumerate()
        .unwrap()
        .iter()
        .map(|s| MiniSolverParams::decode(&space, s).unwrap())
        .collect()
}

/// Longest trace from `cube`, failing if a leaf is not decided at cost ≤ 1
/// under every strategy.
fn walk(f: &Formula, cube: &Cube, seed: u64, params: &[MiniSolverParams]) -> Result<usize, String> {
    match CuberKind::UnitClause.build().cube(f, cube, 2, seed).map_err(|e| e.to_string())? {
        CubeSplit::Cubes(children) => {
            let mut deepest = 0;
            for child in children {
                deepest = deepest.max(1 + walk(f, &child, seed, params)?);
            }
            Ok(deepest)
        }
        CubeSplit::Refuted | CubeSplit::Satisfied(_) => {
            let g = f.conjoin(cube);
            for p in params {
                let out = mini_cdcl_solve(&g, p, Budget::Conflicts(1));
                ensure(out.status.is_decided() && out.cost <= 1, || format!("trace leaf {cube:?} costs {}", out.cost))?;
            }
            Ok(0)
        }
    }
}

fn termination() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut corpus: Vec<Formula> = (0..40)
        .map(|_| {
            let vars = rng.gen_range(3..=12);
            random_3cnf(vars, (vars as f64 * rng.gen_range(2.0..6.0)) as usize, rng.gen())
        })
        .collect();
    corpus.extend([php(3, 3), php(4, 3), php(3, 4)]);
    let mut runs = 0;
    for f in &corpus {
        let ceiling = 4u64 << f.num_vars();
        for seed in 0..5u64 {
            let b = Backend::mini_cdcl(presets::mini_cdcl(), CuberKind::UnitClause);
            let mut queue = CubeQueue::new(vec![Cube::top()], seed);
            // a fixed budget of 2 and an unreachable sample size: collection
            // must split until every cube is decided
            let cfg = collect_config(1_000_000, 1, 2, "1", seed);
            match collect_with_limit(f, &mut queue, &cfg, &StrategyPool::Space(presets::mini_cdcl()), &b, 1, Some(ceiling)) {
                Ok(_) => runs += 1,
                Err(CollectError::StepLimit(s)) => return Err(format!("step ceiling {ceiling} hit after {s}")),
                Err(e) => return Err(e.to_string()),
            }
        }
    }
    let params = all_params();
    let mut traced = 0;
    for f in corpus.iter().filter(|f| f.num_vars() <= 10) {
        for seed in 0..3 {
            let depth = walk(f, &Cube::top(), seed, &params)?;
            ensure(depth <= f.num_vars(), || format!("trace of length {depth} > {}", f.num_vars()))?;
        }
        traced += 1;
    }
    Ok(format!("{runs} collect runs under the ceiling, all traces of {traced} formulas decided"))
}

fn metropolis_hastings() -> Outcome {
    for cur in [0u64, 1, 50, 999, 123_456] {
        for d in [-500i64, -1, 0, 1, 7, 100, 4000] {
            let prop = (cur as i64 + d).max(0) as u64;
            for beta in [1e-4, 0.01, 0.3, 1.0] {
                let p = acceptance_probability(cur, prop, beta);
                let exact = (beta * (cur as f64 - prop as f64)).exp().min(1.0);
                ensure((p - exact).abs() <= 1e-12 * exact.max(f64::MIN_POSITIVE), || format!("a({cur}→{prop}, {beta}) = {p}"))?;
            }
        }
    }

    let space = presets::marabou();
    let states = space.enumerate().unwrap();
    let costs: HashMap<Strategy, u64> =
        states.iter().enumerate().map(|(i, s)| (s.clone(), 20 + ((i as u64 * 7) % 12) * 3)).collect();
    let beta = 0.08;
    let s0 = space.default_strategy();
    let mut oracle = |s: &Strategy| costs[s];
    let mut chain = MhChain::new(&space, s0.clone(), costs[&s0], beta, 2, 17);
    let steps = 100_000;
    let mut visits: HashMap<Strategy, u64> = HashMap::new();
    for _ in 0..steps {
        chain.step(&mut oracle).map_err(|e| e.to_string())?;
        *visits.entry(chain.current().0.clone()).or_default() += 1;
    }
    let z: f64 = costs.values().map(|&c| (-beta * c as f64).exp()).sum();
    let tv = costs
        .iter()
        .map(|(s, &c)| ((-beta * c as f64).exp() / z - *visits.get(s).unwrap_or(&0) as f64 / steps as f64).abs())
        .sum::<f64>()
        / 2.0;
    ensure(tv <= 0.1, || format!("total variation {tv:.4}"))?;

    let target = states[7].clone();
    let cost = |s: &Strategy| -> u64 {
        100 + s
            .indices()
            .iter()
            .zip(target.indices())
            .map(|(&a, &b)| (a as i64 - b as i64).unsigned_abs() * 15)
            .sum::<u64>()
    };
    let mut hits = 0;
    for seed in 0..100 {
        let mut oracle = |s: &Strategy| cost(s);
        let cfg = TuneConfig { num_samples: 12, seed, ..TuneConfig::default() };
        if tune(&space, &s0, &mut oracle, &cfg).map_err(|e| e.to_string())?.best == target {
            hits += 1;
        }
    }
    ensure(hits >= 95, || format!("argmin found in {hits}/100"))?;
    Ok(format!("exact acceptance, TV {tv:.4}, argmin {hits}/100"))
}

fn miter_config(seed: u64, workers: usize) -> RunConfig {
    RunConfig {
        seed,
        workers,
        initial_cubes: Some(64),
        tuning: Band { cubes: 8, min_cost: 5, max_cost: 200 },
        validation: Band { cubes: 4, min_cost: 20, max_cost: 400 },
        online_cubes: 4,
        ..RunConfig::default()
    }
}

fn end_to_end() -> Outcome {
    let (mut wins, mut both_off) = (0, 0);
    let mut totals = Vec::new();
    for seed in 0..10u64 {
        let f = xor_miter(60, seed);
        let cfg = miter_config(seed, 2);
        let tuned = sdac(&f, &cfg).map_err(|e| e.to_string())?;
        let base = plain_cnc(&f, &cfg).map_err(|e| e.to_string())?;
        let common = common_cube_costs(&base, &tuned);
        let (d, l) = common.iter().fold((0u64, 0u64), |(d, l), r| (d + r.1, l + r.2));
        if l <= d {
            wins += 1;
        }
        totals.push(format!("{l}/{d}"));
        let learned = tuned.learned.unwrap_or_default();
        if learned.split(',').any(|p| p == "bump=0") && learned.split(',').any(|p| p == "tumble=0") {
            both_off += 1;
        }
    }
    ensure(wins >= 8 && both_off >= 5, || format!("wins {wins}/10, bump=0∧tumble=0 in {both_off}/10"))?;
    Ok(format!("wins {wins}/10, bump=0∧tumble=0 learned {both_off}/10, learned/default conflicts {}", totals.join(" ")))
}

fn overfit() -> Outcome {
    let space = presets::mini_cdcl();
    let default = MiniSolverParams::decode(&space, &space.default_strategy()).unwrap();
    let mut rejected = 0;
    let mut margins = Vec::new();
    for seed in 0..10u64 {
        let f = random_3cnf(150, 639, seed);
        let cfg = RunConfig {
            seed,
            initial_cubes: Some(32),
            tuning: Band { cubes: 1, min_cost: 20, max_cost: 500 },
            validation: Band { cubes: 4, min_cost: 50, max_cost: 2000 },
            online_cubes: 4,
            ..RunConfig::default()
        };
        let tuned = sdac(&f, &cfg).map_err(|e| e.to_string())?;
        let base = plain_cnc(&f, &cfg).map_err(|e| e.to_string())?;
        let Some(validation) = &tuned.validation else { continue };
        if validation.accepted {
            continue;
        }
        rejected += 1;
        let truth = matches!(mini_cdcl_solve(&f, &default, Budget::Unlimited).status, SolveStatus::Sat(_));
        let answer = tuned.answer.as_ref().ok_or("no answer")?;
        ensure(answer.is_sat() == truth, || format!("seed {seed}: wrong answer after rejection"))?;
        if let Some(m) = answer.assignment() {
            ensure(f.is_satisfied_by(&m), || format!("seed {seed}: model fails"))?;
        }
        let validation_budgets: u64 =
            tuned.cubes.iter().filter(|c| c.phase == Phase::Validation).filter_map(|c| c.budget).sum();
        let portfolio = tuned.solved_in(Phase::Solving).count() as u64 * cfg.first_budget();
        let bound = validation_budgets + portfolio;
        let excess = tuned.costs.conquer() as i64 - base.costs.conquer() as i64;
        ensure(excess < bound as i64, || format!("seed {seed}: excess {excess} ≥ bound {bound}"))?;
        margins.push(format!("{excess}<{bound}"));
    }
    ensure(rejected > 0, || "validation never rejected; the property was not exercised".into())?;
    Ok(format!("{rejected}/10 rejections, excess<bound: {}", margins.join(" ")))
}

fn determinism() -> Outcome {
    let cases = [(xor_miter(40, 3), miter_config(3, 1)), (random_3cnf(120, 500, 9), miter_config(9, 1))];
    for (f, cfg) in &cases {
        let a = sdac(f, cfg).map_err(|e| e.to_string())?;
        let b = sdac(f, cfg).map_err(|e| e.to_string())?;
        ensure(a.canonical_json() == b.canonical_json(), || "W=1 reports differ".into())?;
        let four = sdac(f, &RunConfig { workers: 4, ..cfg.clone() }).map_err(|e| e.to_string())?;
        ensure(a.answer == four.answer, || "W=4 answer differs".into())?;
        ensure(a.learned == four.learned, || "W=4 learned strategy differs".into())?;
        let costs = |r: &cubetune_core::orchestrate::RunReport| -> Vec<(u64, u64)> { r.cubes.iter().map(|c| (c.id, c.cost)).collect() };
        ensure(costs(&a) == costs(&four), || "W=4 per-cube costs differ".into())?;
        ensure(a.tuning == four.tuning && a.validation == four.validation, || "W=4 tuning rows differ".into())?;
    }
    Ok("byte-identical at W=1, same answer/strategy/costs at W=4".into())
}

fn external_adapter() -> Outcome {
    let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mock_solver.sh");
    let space = StrategySpace::new(
        vec![
            ParamDef::new("mode", "unsat", ["sat", "unknown", "slow"]).unwrap(),
            ParamDef::new("stable", "1", ["0", "2"]).unwrap(),
        ],
        None,
    )
    .unwrap();
    let config = ExternalConfig {
        command: format!("{} {{formula_file}} --conflicts={{budget}} {{params}}", script.display()),
        timeout_secs: Some(0.5),
        ..ExternalConfig::default()
    };
    let solver = ExternalSolver::new(config, space.clone()).map_err(|e| e.to_string())?;
    let f = Formula::from_clauses(2, vec![vec![1], vec![-2]]).unwrap();
    let check = |s: &str, budget| solver.check(&f, &Cube::top(), &space.parse(s).unwrap(), budget);

    let out = check("", Budget::Conflicts(1000)).map_err(|e| e.to_string())?;
    ensure(out == SolveOutcome::new(SolveStatus::Unsat, 42), || format!("unsat case gave {out:?}"))?;
    let out = check("mode=sat", Budget::Conflicts(1000)).map_err(|e| e.to_string())?;
    ensure(out == SolveOutcome::new(SolveStatus::Sat(vec![true, false]), 7), || format!("sat case gave {out:?}"))?;
    let out = check("mode=unknown", Budget::Conflicts(64)).map_err(|e| e.to_string())?;
    ensure(out == SolveOutcome::new(SolveStatus::Unknown, 64), || format!("unknown case gave {out:?}"))?;
    let started = Instant::now();
    let timed = check("mode=slow", Budget::Conflicts(64));
    ensure(matches!(timed, Err(BackendError::Timeout(_))), || format!("slow case gave {timed:?}"))?;
    ensure(started.elapsed() < Duration::from_secs(3), || "timeout not enforced promptly".into())?;

    let strategy = space.parse("stable=0,mode=unknown").unwrap();
    let argv = solver.argv("f.cnf".as_ref(), &strategy, Budget::Conflicts(500)).map_err(|e| e.to_string())?;
    let expect = [script.display().to_string(), "f.cnf".into(), "--conflicts=500".into(), "--mode=unknown".into(), "--stable=0".into()];
    ensure(argv == expect, || format!("flags {argv:?}"))?;
    let argv = solver.argv("f.cnf".as_ref(), &space.default_strategy(), Budget::Unlimited).map_err(|e| e.to_string())?;
    ensure(argv.len() == 2, || format!("unlimited default call {argv:?}"))?;
    Ok("status, cost 42, flags, Timeout vs Unknown".into())
}

fn format_corpus() -> Vec<(String, String, bool)> {
    // (name, text, is_icnf)
    let mut files = Vec::new();
    for (p, h) in [(2, 1), (3, 2), (4, 3), (5, 4), (3, 3), (6, 5)] {
        files.push((format!("php-{p}-{h}.cnf"), write_dimacs(&php(p, h)), false));
    }
    for seed in 0..8 {
        files.push((format!("miter-{seed}.cnf"), write_dimacs(&xor_miter(4 + seed as usize * 3, seed)), false));
    }
    for seed in 0..12 {
        let v = 5 + seed as usize * 4;
        files.push((format!("random-{seed}.cnf"), write_dimacs(&random_3cnf(v, v * 4, seed)), false));
    }
    for seed in 0..10u64 {
        let f = random_3cnf(12 + seed as usize, 40, 100 + seed);
        let cubes = partition(&f, &mini(), 1 << (1 + seed % 4), seed);
        files.push((format!("cubes-{seed}.icnf"), write_icnf(&f, &cubes), true));
    }
    let edge = [
        ("empty.cnf", "p cnf 0 0\n", false),
        ("no-clauses.cnf", "p cnf 7 0\n", false),
        ("empty-clause.cnf", "p cnf 2 2\n1 -2 0\n0\n", false),
        ("only-empty-clause.cnf", "p cnf 0 1\n0\n", false),
        ("header-too-many.cnf", "p cnf 3 5\n1 2 0\n-3 0\n", false),
        ("header-too-few.cnf", "p cnf 3 1\n1 2 0\n-3 0\n2 3 0\n", false),
        ("unused-vars.cnf", "p cnf 9 1\n1 -2 0\n", false),
        ("comments.cnf", "c generated\nc by hand\np cnf 2 1\nc inside\n1 2 0\n", false),
        ("multiline.cnf", "p cnf 3 2\n1 2\n3 0 -1\n-2 0\n", false),
        ("satlib.cnf", "p cnf 3 1\n1 2 3 0\n%\n0\n", false),
        ("duplicate-lits.cnf", "p cnf 2 1\n1 1 -2 0\n", false),
        ("icnf-empty-cube.icnf", "p inccnf\n1 2 0\na 0\n", true),
        ("icnf-hint.icnf", "p inccnf\nc num_vars 6\n1 2 0\na -1 0\n", true),
        ("icnf-empty-clause.icnf", "p inccnf\n0\na 1 0\n", true),
    ];
    for (name, text, icnf) in edge {
        files.push((name.to_string(), text.to_string(), icnf));
    }
    files
}

fn formats() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = format_corpus();
    ensure(corpus.len() == 50, || format!("corpus has {} files", corpus.len()))?;
    let mut canonical = 0;
    for (name, text, icnf) in &corpus {
        let path = dir.path().join(name);
        std::fs::write(&path, text).map_err(|e| e.to_string())?;
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        let fail = |what: &str| format!("{name}: {what}");
        let generated = ["php", "miter", "random", "cubes"].iter().any(|p| name.starts_with(p));
        if *icnf {
            let (f, cubes) = parse_icnf(&bytes[..]).map_err(|e| fail(&e.to_string()))?;
            let once = write_icnf(&f, &cubes);
            let (g, again) = parse_icnf(once.as_bytes()).map_err(|e| fail(&e.to_string()))?;
            ensure(f == g && cubes == again, || fail("value changed"))?;
            ensure(write_icnf(&g, &again) == once, || fail("text not a fixpoint"))?;
            ensure(!generated || once == *text, || fail("writer output not reproduced"))?;
            if once == *text {
                canonical += 1;
            }
        } else {
            let f = parse_dimacs(&bytes[..]).map_err(|e| fail(&e.to_string()))?;
            let once = write_dimacs(&f);
            let g = parse_dimacs(once.as_bytes()).map_err(|e| fail(&e.to_string()))?;
            ensure(f == g, || fail("value changed"))?;
            ensure(write_dimacs(&g) == once, || fail("text not a fixpoint"))?;
            ensure(!generated || once == *text, || fail("writer output not reproduced"))?;
            if once == *text {
                canonical += 1;
            }
        }
    }
    let mismatch = parse_dimacs("p cnf 3 5\n1 2 0\n-3 0\n".as_bytes()).map_err(|e| e.to_string())?;
    ensure(mismatch.num_clauses() == 2 && mismatch.num_vars() == 3, || "header mismatch misread".into())?;
    let empty = parse_dimacs("p cnf 2 2\n1 -2 0\n0\n".as_bytes()).map_err(|e| e.to_string())?;
    ensure(empty.clauses()[1].is_empty(), || "empty clause lost".into())?;
    Ok(format!("50 files, {canonical} reproduced byte for byte, all others reach a fixpoint"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("strategy-space counts", 1, space_counts),
        ("collect band contract", 120, band_contract),
        ("soundness against brute force", 300, soundness),
        ("termination with unit-clause cubing", 180, termination),
        ("Metropolis-Hastings correctness", 120, metropolis_hastings),
        ("end-to-end improvement on XOR miters", 600, end_to_end),
        ("over-fit protection", 300, overfit),
        ("determinism", 120, determinism),
        ("external adapter", 30, external_adapter),
        ("DIMACS/iCNF round trip", 10, formats),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(detail) => ("PASS", detail),
            Err(detail) => {
                failed += 1;
                ("FAIL", detail)
            }
        };
        println!("{tag} {:>2} {name}: {detail} [{secs:.1}s, budget {limit}s]", i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
