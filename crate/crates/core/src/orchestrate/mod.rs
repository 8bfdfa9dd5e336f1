//! End-to-end runs: initial cubing, collection, tuning, validation and the
//! final solving phase.

pub mod config;
pub mod generate;
pub mod report;

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::backend::{Backend, BackendError, CubeSplit, SolveStatus};
use crate::collect::{collect, CollectError, CollectEvent, CollectResult, CollectStatus, CollectedCube, CubeQueue, CubeRecord, StrategyPool};
use crate::formula::{Cube, Formula};
use crate::strategy::{Strategy, StrategyError, StrategySpace};
use crate::tune::{tune, BackendOracle, TuneConfig, TuneError, TuneReport, TuningCube};
use crate::validate::{solve_with_policy, validate, FinalPolicy, OnReject, PolicyOutcome, ValidateError, ValidationReport};
use crate::workqueue::{run_ordered, Flow};

pub use config::{BackendConfig, Band, ReportPaths, RunConfig, SpaceConfig};
use config::derive_seed;
pub use generate::Family;
pub use report::{Answer, Mode, Phase, RunLog, RunReport, SolvedCube};
use report::{AttemptRow, CostRow, LogRecord, PhaseCosts, PolicyRow, Timings, TrajectoryRow, TuningSummary};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Collect(#[from] CollectError),
    #[error(transparent)]
    Tune(#[from] TuneError),
    #[error(transparent)]
    Validate(#[from] ValidateError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("solver left cube {0} undecided without a budget")]
    Undecided(u64),
    #[error("final phase aborted: {source}")]
    Aborted {
        partial: Box<RunReport>,
        #[source]
        source: Box<RunError>,
    },
}

impl RunError {
    /// The report up to the failure, for runs aborted in the final phase.
    pub fn partial_report(&self) -> Option<&RunReport> {
        match self {
            RunError::Aborted { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

// salts for the per-phase seeds
const SALT_CUBE: u64 = 0;
const SALT_TUNING: u64 = 1;
const SALT_VALIDATION: u64 = 2;
const SALT_TUNE: u64 = 3;
const SALT_RETUNING: u64 = 4;
const SALT_RETUNE: u64 = 5;
const SALT_QUEUE: u64 = 6;

/// Self-tuning cube-and-conquer with the backend and space built from `cfg`.
pub fn sdac(formula: &Formula, cfg: &RunConfig) -> Result<RunReport, RunError> {
    cfg.validate()?;
    let space = cfg.strategy_space()?;
    let backend = cfg.build_backend(&space)?;
    let log = open_log(cfg)?;
    let report = sdac_with(formula, cfg, &backend, &space, &log);
    log.flush();
    finish(cfg, report)
}

/// Plain cube-and-conquer under the default strategy.
pub fn plain_cnc(formula: &Formula, cfg: &RunConfig) -> Result<RunReport, RunError> {
    cfg.validate()?;
    let space = cfg.strategy_space()?;
    let backend = cfg.build_backend(&space)?;
    let log = open_log(cfg)?;
    let report = plain_cnc_with(formula, cfg, &backend, &space, &log);
    log.flush();
    finish(cfg, report)
}

fn open_log(cfg: &RunConfig) -> Result<RunLog, RunError> {
    Ok(match &cfg.report.log {
        Some(path) => RunLog::create(path)?,
        None => RunLog::disabled(),
    })
}

fn finish(cfg: &RunConfig, report: Result<RunReport, RunError>) -> Result<RunReport, RunError> {
    let written = match &report {
        Ok(r) => Some(r),
        Err(e) => e.partial_report(),
    };
    if let Some(r) = written {
        if let Some(path) = &cfg.report.summary {
            std::fs::write(path, r.to_json())?;
        }
        if let Some(dir) = &cfg.report.csv_dir {
            report::write_csv_tables(dir, r, None)?;
        }
    }
    report
}

/// [`sdac`] over a caller-provided backend and space.
pub fn sdac_with(
    formula: &Formula,
    cfg: &RunConfig,
    backend: &Backend,
    space: &StrategySpace,
    log: &RunLog,
) -> Result<RunReport, RunError> {
    let mut run = Run::new(formula, cfg, backend, space, log, Mode::Sdac);
    let Some(mut queue) = run.initial_cubing()? else {
        return Ok(run.into_report());
    };
    let learning_start = Instant::now();
    let policy = run.learn(&mut queue)?;
    run.timings.learning_s = learning_start.elapsed().as_secs_f64();
    if let Some(policy) = policy {
        if let Err(e) = run.solve_remaining(&mut queue, &policy) {
            return Err(run.abort(e));
        }
    }
    Ok(run.into_report())
}

/// [`plain_cnc`] over a caller-provided backend and space.
pub fn plain_cnc_with(
    formula: &Formula,
    cfg: &RunConfig,
    backend: &Backend,
    space: &StrategySpace,
    log: &RunLog,
) -> Result<RunReport, RunError> {
    let mut run = Run::new(formula, cfg, backend, space, log, Mode::PlainCnc);
    let Some(mut queue) = run.initial_cubing()? else {
        return Ok(run.into_report());
    };
    let policy = FinalPolicy::Single(space.default_strategy());
    if let Err(e) = run.solve_remaining(&mut queue, &policy) {
        return Err(run.abort(e));
    }
    Ok(run.into_report())
}

struct Run<'a> {
    formula: &'a Formula,
    cfg: &'a RunConfig,
    backend: &'a Backend,
    space: &'a StrategySpace,
    log: &'a RunLog,
    start: Instant,
    report: RunReport,
    timings: Timings,
}

impl<'a> Run<'a> {
    fn new(
        formula: &'a Formula,
        cfg: &'a RunConfig,
        backend: &'a Backend,
        space: &'a StrategySpace,
        log: &'a RunLog,
        mode: Mode,
    ) -> Self {
        let report = RunReport {
            mode,
            seed: cfg.seed,
            workers: cfg.workers,
            num_vars: formula.num_vars(),
            num_clauses: formula.clauses().len(),
            initial_cubes: 0,
            answer: None,
            learned: None,
            policy: None,
            tuning: None,
            retuning: None,
            validation: None,
            cubes: Vec::new(),
            unsolved_cubes: 0,
            costs: PhaseCosts::default(),
            tally: Default::default(),
            timings: Timings::default(),
        };
        Run { formula, cfg, backend, space, log, start: Instant::now(), report, timings: Timings::default() }
    }

    fn seed(&self, salt: u64) -> u64 {
        derive_seed(self.cfg.seed, salt)
    }

    fn into_report(mut self) -> RunReport {
        self.timings.total_s = self.start.elapsed().as_secs_f64();
        self.report.timings = self.timings;
        self.report.tally = self.backend.tally();
        self.report
    }

    fn abort(self, source: RunError) -> RunError {
        RunError::Aborted { partial: Box::new(self.into_report()), source: Box::new(source) }
    }

    fn sat(&mut self, model: Vec<bool>) -> Result<(), RunError> {
        if !self.formula.is_satisfied_by(&model) {
            return Err(CollectError::InvalidModel.into());
        }
        self.report.answer = Some(Answer::sat(&model));
        Ok(())
    }

    /// Returns the queue, or `None` if the cuber already decided the formula.
    fn initial_cubing(&mut self) -> Result<Option<CubeQueue>, RunError> {
        let t = Instant::now();
        let split = self.backend.cube(self.formula, &Cube::top(), self.cfg.initial_k(), self.seed(SALT_CUBE))?;
        self.timings.cubing_s = t.elapsed().as_secs_f64();
        let decided = match split {
            CubeSplit::Cubes(cubes) => {
                self.report.initial_cubes = cubes.len();
                return Ok(Some(CubeQueue::new(cubes, self.seed(SALT_QUEUE))));
            }
            CubeSplit::Refuted => {
                self.report.answer = Some(Answer::Unsat);
                false
            }
            CubeSplit::Satisfied(model) => {
                self.sat(model)?;
                true
            }
        };
        let cube = Cube::top();
        self.log.record(&LogRecord {
            phase: Phase::Cubing,
            event: "split",
            cube_id: 0,
            cube: &cube,
            strategy: None,
            budget: None,
            status: Some(if decided { "sat" } else { "unsat" }),
            cost: None,
            children: None,
            wall_s: self.timings.cubing_s,
        });
        self.report.cubes.push(SolvedCube {
            id: 0,
            cube,
            phase: Phase::Cubing,
            strategy: None,
            status: if decided { "sat" } else { "unsat" }.into(),
            cost: 0,
            budget: None,
            attempts: Vec::new(),
        });
        Ok(None)
    }

    /// Records the events of one collection round; true if it decided the
    /// formula.
    fn absorb(&mut self, phase: Phase, result: &CollectResult) -> Result<bool, RunError> {
        for event in &result.events {
            match event {
                CollectEvent::Check(c) => {
                    let strategy = self.space.render(&c.strategy);
                    let status = c.outcome.status.label();
                    self.log.record(&LogRecord {
                        phase,
                        event: "check",
                        cube_id: c.cube_id,
                        cube: &c.cube,
                        strategy: Some(&strategy),
                        budget: Some(c.budget),
                        status: Some(status),
                        cost: Some(c.outcome.cost),
                        children: None,
                        wall_s: c.wall.as_secs_f64(),
                    });
                    self.report.costs.collection = self.report.costs.collection.saturating_add(c.outcome.cost);
                    if c.outcome.status.is_decided() {
                        let attempt = AttemptRow {
                            strategy: strategy.clone(),
                            budget: Some(c.budget),
                            status: status.into(),
                            cost: c.outcome.cost,
                        };
                        self.report.cubes.push(SolvedCube {
                            id: c.cube_id,
                            cube: c.cube.clone(),
                            phase,
                            strategy: Some(strategy),
                            status: status.into(),
                            cost: c.outcome.cost,
                            budget: Some(c.budget),
                            attempts: vec![attempt],
                        });
                    }
                }
                CollectEvent::Split(s) => {
                    let status = s.decided.map(|sat| if sat { "sat" } else { "unsat" });
                    self.log.record(&LogRecord {
                        phase,
                        event: "split",
                        cube_id: s.cube_id,
                        cube: &s.cube,
                        strategy: None,
                        budget: None,
                        status,
                        cost: None,
                        children: Some(&s.children),
                        wall_s: 0.0,
                    });
                    if let Some(status) = status {
                        self.report.cubes.push(SolvedCube {
                            id: s.cube_id,
                            cube: s.cube.clone(),
                            phase,
                            strategy: None,
                            status: status.into(),
                            cost: 0,
                            budget: None,
                            attempts: Vec::new(),
                        });
                    }
                }
            }
        }
        match &result.status {
            CollectStatus::Sat(model) => {
                self.sat(model.clone())?;
                Ok(true)
            }
            CollectStatus::Unsat => {
                self.report.answer = Some(Answer::Unsat);
                Ok(true)
            }
            CollectStatus::Unknown => Ok(false),
        }
    }

    fn collect_round(
        &mut self,
        queue: &mut CubeQueue,
        phase: Phase,
        band: &Band,
        salt: u64,
        pool: &StrategyPool,
    ) -> Result<Option<Vec<CollectedCube>>, RunError> {
        let ccfg = self.cfg.collect_config(band, self.seed(salt));
        let result = collect(self.formula, queue, &ccfg, pool, self.backend, self.cfg.workers)?;
        if self.absorb(phase, &result)? {
            return Ok(None);
        }
        Ok(Some(result.collected))
    }

    fn run_tuner(&mut self, cubes: &[CollectedCube], salt: u64) -> Result<(TuneReport, TuningSummary), RunError> {
        let cubes: Vec<TuningCube> = cubes
            .iter()
            .map(|c| TuningCube { id: c.id, cube: c.cube.clone(), budget: c.budget })
            .collect();
        let tcfg = TuneConfig { seed: self.seed(salt) ^ self.cfg.tune.seed, ..self.cfg.tune.clone() };
        let default = self.space.default_strategy();
        let mut oracle = BackendOracle::new(self.formula, &cubes, self.backend, &tcfg, self.cfg.workers);
        let result = tune(self.space, &default, &mut oracle, &tcfg)?;
        let rows = |s: &Strategy| oracle.per_cube(s).map(<[u64]>::to_vec).unwrap_or_default();
        let (defaults, learned) = (rows(&default), rows(&result.best));
        let per_cube = cubes
            .iter()
            .zip(defaults.iter().zip(&learned))
            .map(|(c, (&d, &l))| CostRow { cube_id: c.id, cost_default: d, cost_learned: l })
            .collect();
        let priced = result.trajectory.iter().map(|e| e.cost).fold(0u64, u64::saturating_add);
        self.report.costs.pricing = self.report.costs.pricing.saturating_add(priced);
        let summary = TuningSummary {
            cubes: cubes.len(),
            best: self.space.render(&result.best),
            best_cost: result.best_cost,
            default_cost: result.default_cost,
            beta: result.beta,
            evaluations: result.evaluations,
            trajectory: result
                .trajectory
                .iter()
                .enumerate()
                .map(|(step, e)| TrajectoryRow {
                    step,
                    kind: e.kind,
                    strategy: self.space.render(&e.strategy),
                    cost: e.cost,
                    accepted: e.accepted,
                })
                .collect(),
            per_cube,
        };
        Ok((result, summary))
    }

    fn run_validation(
        &mut self,
        cubes: &[CollectedCube],
        learned: &Strategy,
    ) -> Result<(FinalPolicy, ValidationReport), RunError> {
        let default = self.space.default_strategy();
        let (policy, report) = validate(
            self.formula,
            cubes,
            learned,
            &default,
            self.backend,
            self.cfg.first_budget(),
            self.cfg.tune.par_multiplier,
            self.cfg.workers,
        )?;
        let priced = report.cost_learned.saturating_add(report.cost_default);
        self.report.costs.pricing = self.report.costs.pricing.saturating_add(priced);
        Ok((policy, report))
    }

    /// Collection, tuning and validation. `None` when the formula was
    /// decided on the way.
    fn learn(&mut self, queue: &mut CubeQueue) -> Result<Option<FinalPolicy>, RunError> {
        let default = self.space.default_strategy();
        let pool = StrategyPool::Space(self.space.clone());
        let tuning_band = self.cfg.tuning.clone();
        let Some(mut tuning_cubes) = self.collect_round(queue, Phase::Tuning, &tuning_band, SALT_TUNING, &pool)? else {
            return Ok(None);
        };
        let (result, summary) = self.run_tuner(&tuning_cubes, SALT_TUNE)?;
        self.report.tuning = Some(summary);
        let mut learned = result.best;
        if learned == default {
            return Ok(Some(self.settle(FinalPolicy::Single(default))));
        }
        self.report.learned = Some(self.space.render(&learned));

        let validation_band = self.cfg.validation.clone();
        let pool = StrategyPool::Only(learned.clone());
        let Some(validation_cubes) =
            self.collect_round(queue, Phase::Validation, &validation_band, SALT_VALIDATION, &pool)?
        else {
            return Ok(None);
        };
        let (mut policy, report) = self.run_validation(&validation_cubes, &learned)?;
        let accepted = report.accepted;
        self.report.validation = Some(report);
        if accepted {
            return Ok(Some(self.settle(policy)));
        }
        match self.cfg.on_reject {
            OnReject::Portfolio => {}
            OnReject::Default => policy = FinalPolicy::Single(default),
            OnReject::Retune => {
                let extra = self.cfg.tuning.cubes * (self.cfg.retune_factor - 1);
                let band = Band { cubes: extra, ..tuning_band };
                let pool = StrategyPool::Space(self.space.clone());
                let Some(more) = self.collect_round(queue, Phase::Retuning, &band, SALT_RETUNING, &pool)? else {
                    return Ok(None);
                };
                tuning_cubes.extend(more);
                let (result, summary) = self.run_tuner(&tuning_cubes, SALT_RETUNE)?;
                self.report.retuning = Some(summary);
                learned = result.best;
                if learned == default {
                    self.report.learned = None;
                    policy = FinalPolicy::Single(default);
                } else {
                    self.report.learned = Some(self.space.render(&learned));
                    let (second, report) = self.run_validation(&validation_cubes, &learned)?;
                    self.report.validation = Some(report);
                    policy = second;
                }
            }
        }
        Ok(Some(self.settle(policy)))
    }

    fn settle(&mut self, policy: FinalPolicy) -> FinalPolicy {
        self.report.policy = Some(match &policy {
            FinalPolicy::Single(s) => PolicyRow::Single { strategy: self.space.render(s) },
            FinalPolicy::SequentialPortfolio { first, first_budget, fallback } => PolicyRow::SequentialPortfolio {
                first: self.space.render(first),
                first_budget: *first_budget,
                fallback: self.space.render(fallback),
            },
        });
        policy
    }

    /// Final phase: every remaining cube in id order, stopping at the first
    /// model in claim order.
    fn solve_remaining(&mut self, queue: &mut CubeQueue, policy: &FinalPolicy) -> Result<(), RunError> {
        if self.report.policy.is_none() {
            self.settle(policy.clone());
        }
        let t = Instant::now();
        let items: VecDeque<CubeRecord> = queue.drain().into();
        let mut failure: Option<RunError> = None;
        let mut model: Option<Vec<bool>> = None;
        let (formula, backend, space, log) = (self.formula, self.backend, self.space, self.log);
        let report = &mut self.report;
        let rest = run_ordered(
            items,
            self.cfg.workers,
            |_, record| {
                let t = Instant::now();
                (solve_with_policy(formula, &record.cube, policy, backend), t.elapsed())
            },
            |_, record, (result, wall): (Result<PolicyOutcome, BackendError>, Duration)| {
                let out = match result {
                    Ok(out) => out,
                    Err(e) => {
                        failure = Some(e.into());
                        return Flow::Stop;
                    }
                };
                let status = out.outcome.status.label();
                let attempts: Vec<AttemptRow> = out
                    .attempts
                    .iter()
                    .map(|a| AttemptRow {
                        strategy: space.render(&a.strategy),
                        budget: a.budget,
                        status: a.outcome.status.label().into(),
                        cost: a.outcome.cost,
                    })
                    .collect();
                let last = attempts.last().map(|a| a.strategy.clone());
                log.record(&LogRecord {
                    phase: Phase::Solving,
                    event: "solve",
                    cube_id: record.id,
                    cube: &record.cube,
                    strategy: last.as_deref(),
                    budget: None,
                    status: Some(status),
                    cost: Some(out.outcome.cost),
                    children: None,
                    wall_s: wall.as_secs_f64(),
                });
                report.costs.solving = report.costs.solving.saturating_add(out.outcome.cost);
                let flow = match &out.outcome.status {
                    SolveStatus::Sat(m) => {
                        model = Some(m.clone());
                        Flow::Stop
                    }
                    SolveStatus::Unsat => Flow::Continue,
                    SolveStatus::Unknown => {
                        failure = Some(RunError::Undecided(record.id));
                        return Flow::Stop;
                    }
                };
                report.cubes.push(SolvedCube {
                    id: record.id,
                    cube: record.cube,
                    phase: Phase::Solving,
                    strategy: last,
                    status: status.into(),
                    cost: out.outcome.cost,
                    budget: None,
                    attempts,
                });
                flow
            },
        );
        self.timings.solving_s = t.elapsed().as_secs_f64();
        if let Some(e) = failure {
            return Err(e);
        }
        match model {
            Some(m) => {
                self.report.unsolved_cubes = rest.len();
                self.sat(m)?;
            }
            None => self.report.answer = Some(Answer::Unsat),
        }
        Ok(())
    }
}
