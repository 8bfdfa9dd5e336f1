//! Online strategy tuning with a Metropolis-Hastings chain.
//!
//! The objective is the summed cost of the tuning cubes, where a cube that
//! is not solved within its budget counts as `par_multiplier × budget`. The
//! chain starts from the best of the default and its one-flip neighbours,
//! proposes uniformly among strategies at most `proposal_k` flips away and
//! accepts with probability `min(1, exp(β·(cost − cost')))`. At most `t`
//! distinct strategies are evaluated; the best one seen is reported.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{Backend, BackendError, Budget, SolveStatus};
use crate::formula::{Cube, Formula};
use crate::strategy::{Strategy, StrategySpace};
use crate::workqueue::parallel_map;

#[derive(Debug, Error)]
pub enum TuneError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("no tuning cubes")]
    NoCubes,
    #[error("invalid tuning configuration: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    /// Number of distinct strategies that may be evaluated (`t`).
    pub num_samples: usize,
    /// Inverse temperature; `1 / cost(σ₀)` when absent.
    pub beta: Option<f64>,
    pub proposal_k: usize,
    /// Per-cube budget for every strategy. When absent each cube keeps the
    /// budget it was collected with.
    pub per_cube_budget: Option<u64>,
    pub par_multiplier: u64,
    pub probe: bool,
    pub seed: u64,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            num_samples: 20,
            beta: None,
            proposal_k: 2,
            per_cube_budget: None,
            par_multiplier: 2,
            probe: true,
            seed: 0,
        }
    }
}

impl TuneConfig {
    pub fn validate(&self) -> Result<(), TuneError> {
        if self.num_samples == 0 {
            return Err(TuneError::Config("num_samples must be at least 1".into()));
        }
        if self.beta.is_some_and(|b| !(b > 0.0 && b.is_finite())) {
            return Err(TuneError::Config("beta must be positive and finite".into()));
        }
        if self.proposal_k == 0 {
            return Err(TuneError::Config("proposal_k must be at least 1".into()));
        }
        if self.par_multiplier == 0 {
            return Err(TuneError::Config("par_multiplier must be at least 1".into()));
        }
        Ok(())
    }
}

/// `min(1, exp(β·(current − proposed)))`.
pub fn acceptance_probability(cost_current: u64, cost_proposed: u64, beta: f64) -> f64 {
    if cost_proposed <= cost_current {
        return 1.0;
    }
    let delta = cost_current as f64 - cost_proposed as f64;
    (beta * delta).exp().min(1.0)
}

/// Anything that can price a strategy.
pub trait CostOracle {
    fn cost(&mut self, strategy: &Strategy) -> Result<u64, TuneError>;
}

impl<F: FnMut(&Strategy) -> u64> CostOracle for F {
    fn cost(&mut self, strategy: &Strategy) -> Result<u64, TuneError> {
        Ok(self(strategy))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuningCube {
    pub id: u64,
    pub cube: Cube,
    pub budget: u64,
}

/// Per-cube costs of one strategy on a set of tuning cubes, PAR-capped.
///
/// Costs already in the backend's ledger are reused; an earlier decided
/// cost above the budget counts as unsolved, which is what a fresh check
/// would report.
pub fn cube_costs(
    formula: &Formula,
    cubes: &[TuningCube],
    strategy: &Strategy,
    backend: &Backend,
    budget_override: Option<u64>,
    par_multiplier: u64,
    workers: usize,
) -> Result<Vec<u64>, BackendError> {
    parallel_map(cubes, workers, |c| {
        let budget = budget_override.unwrap_or(c.budget);
        let penalty = par_multiplier.saturating_mul(budget);
        if let Ok(cost) = backend.eval(formula, &c.cube, strategy) {
            return Ok(if cost <= budget { cost } else { penalty });
        }
        let out = backend.check(formula, &c.cube, strategy, Budget::Conflicts(budget))?;
        Ok(match out.status {
            SolveStatus::Unknown => penalty,
            _ => out.cost,
        })
    })
    .into_iter()
    .collect()
}

/// Sum of [`cube_costs`].
pub fn cost_of(
    formula: &Formula,
    cubes: &[TuningCube],
    strategy: &Strategy,
    backend: &Backend,
    cfg: &TuneConfig,
    workers: usize,
) -> Result<u64, BackendError> {
    let costs = cube_costs(formula, cubes, strategy, backend, cfg.per_cube_budget, cfg.par_multiplier, workers)?;
    Ok(costs.into_iter().fold(0u64, u64::saturating_add))
}

/// [`CostOracle`] backed by real solver calls, keeping per-cube rows.
pub struct BackendOracle<'a> {
    pub formula: &'a Formula,
    pub cubes: &'a [TuningCube],
    pub backend: &'a Backend,
    pub budget_override: Option<u64>,
    pub par_multiplier: u64,
    pub workers: usize,
    rows: HashMap<Strategy, Vec<u64>>,
}

impl<'a> BackendOracle<'a> {
    pub fn new(formula: &'a Formula, cubes: &'a [TuningCube], backend: &'a Backend, cfg: &TuneConfig, workers: usize) -> Self {
        BackendOracle {
            formula,
            cubes,
            backend,
            budget_override: cfg.per_cube_budget,
            par_multiplier: cfg.par_multiplier,
            workers,
            rows: HashMap::new(),
        }
    }

    pub fn per_cube(&self, strategy: &Strategy) -> Option<&[u64]> {
        self.rows.get(strategy).map(Vec::as_slice)
    }
}

impl CostOracle for BackendOracle<'_> {
    fn cost(&mut self, strategy: &Strategy) -> Result<u64, TuneError> {
        if self.cubes.is_empty() {
            return Err(TuneError::NoCubes);
        }
        let costs = cube_costs(
            self.formula,
            self.cubes,
            strategy,
            self.backend,
            self.budget_override,
            self.par_multiplier,
            self.workers,
        )?;
        let total = costs.iter().copied().fold(0u64, u64::saturating_add);
        self.rows.insert(strategy.clone(), costs);
        Ok(total)
    }
}

/// One Metropolis-Hastings move.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub proposed: Strategy,
    pub cost: u64,
    pub probability: f64,
    pub accepted: bool,
}

/// The bare chain: proposal, pricing and acceptance, nothing else.
pub struct MhChain<'s> {
    space: &'s StrategySpace,
    current: Strategy,
    current_cost: u64,
    beta: f64,
    k: usize,
    rng: ChaCha8Rng,
}

impl<'s> MhChain<'s> {
    pub fn new(space: &'s StrategySpace, start: Strategy, start_cost: u64, beta: f64, k: usize, seed: u64) -> Self {
        MhChain {
            space,
            current: start,
            current_cost: start_cost,
            beta,
            k,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn current(&self) -> (&Strategy, u64) {
        (&self.current, self.current_cost)
    }

    /// Proposes a neighbour, prices it and decides. `None` when the current
    /// state has no neighbours.
    pub fn step<O: CostOracle + ?Sized>(&mut self, oracle: &mut O) -> Result<Option<Move>, TuneError> {
        let neighbors = self.space.neighbors(&self.current, self.k);
        let Some(proposed) = neighbors.choose(&mut self.rng).cloned() else {
            return Ok(None);
        };
        let cost = oracle.cost(&proposed)?;
        let probability = acceptance_probability(self.current_cost, cost, self.beta);
        let accepted = probability >= 1.0 || self.rng.gen::<f64>() < probability;
        if accepted {
            self.current = proposed.clone();
            self.current_cost = cost;
        }
        Ok(Some(Move { proposed, cost, probability, accepted }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    Probe,
    Proposal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub kind: EntryKind,
    pub strategy: Strategy,
    pub cost: u64,
    /// For probes: whether it became the chain's starting point candidate.
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub best: Strategy,
    pub best_cost: u64,
    pub default_cost: u64,
    pub beta: f64,
    /// Distinct strategies priced.
    pub evaluations: usize,
    pub trajectory: Vec<TrajectoryEntry>,
}

/// Memoizing wrapper that counts distinct evaluations.
struct Memo<'o, O: ?Sized> {
    oracle: &'o mut O,
    seen: HashMap<Strategy, u64>,
}

impl<O: CostOracle + ?Sized> CostOracle for Memo<'_, O> {
    fn cost(&mut self, strategy: &Strategy) -> Result<u64, TuneError> {
        if let Some(&c) = self.seen.get(strategy) {
            return Ok(c);
        }
        let c = self.oracle.cost(strategy)?;
        self.seen.insert(strategy.clone(), c);
        Ok(c)
    }
}

/// Evaluates `σ₀` and its one-flip neighbours in enumeration order, at
/// most `limit` strategies in total, and returns the cheapest (earliest on
/// ties).
pub fn probe_initialize<O: CostOracle + ?Sized>(
    space: &StrategySpace,
    default: &Strategy,
    oracle: &mut O,
    limit: usize,
) -> Result<(Strategy, u64, Vec<TrajectoryEntry>), TuneError> {
    let default_cost = oracle.cost(default)?;
    let mut trajectory = vec![TrajectoryEntry {
        kind: EntryKind::Probe,
        strategy: default.clone(),
        cost: default_cost,
        accepted: true,
    }];
    let mut neighbors = space.neighbors(default, 1);
    if neighbors.len() + 1 > limit {
        log::warn!(
            "sample budget {limit} cannot cover all {} one-flip neighbours; probing the first {}",
            neighbors.len(),
            limit.saturating_sub(1)
        );
        neighbors.truncate(limit.saturating_sub(1));
    }
    let (mut best, mut best_cost) = (default.clone(), default_cost);
    for s in neighbors {
        let cost = oracle.cost(&s)?;
        let better = cost < best_cost;
        if better {
            best = s.clone();
            best_cost = cost;
        }
        trajectory.push(TrajectoryEntry { kind: EntryKind::Probe, strategy: s, cost, accepted: better });
    }
    Ok((best, best_cost, trajectory))
}

/// Full tuning run: probing, then the chain until `t` strategies have been
/// priced, the whole space is known, or proposals stop finding anything new.
pub fn tune<O: CostOracle + ?Sized>(
    space: &StrategySpace,
    default: &Strategy,
    oracle: &mut O,
    cfg: &TuneConfig,
) -> Result<TuneReport, TuneError> {
    cfg.validate()?;
    let mut memo = Memo { oracle, seen: HashMap::new() };
    let t = cfg.num_samples;

    let (start, start_cost, mut trajectory) = if cfg.probe {
        probe_initialize(space, default, &mut memo, t)?
    } else {
        let c = memo.cost(default)?;
        let entry = TrajectoryEntry { kind: EntryKind::Probe, strategy: default.clone(), cost: c, accepted: true };
        (default.clone(), c, vec![entry])
    };
    let default_cost = trajectory[0].cost;
    let beta = cfg.beta.unwrap_or(if default_cost == 0 { 1.0 } else { 1.0 / default_cost as f64 });

    let (mut best, mut best_cost) = (start.clone(), start_cost);
    let space_size = space.count();
    let max_proposals = 100 * t + 1000;
    let mut chain = MhChain::new(space, start, start_cost, beta, cfg.proposal_k, cfg.seed);
    let mut proposals = 0;
    while memo.seen.len() < t && (memo.seen.len() as u128) < space_size && proposals < max_proposals {
        proposals += 1;
        let Some(mv) = chain.step(&mut memo)? else {
            break;
        };
        if mv.cost < best_cost {
            best = mv.proposed.clone();
            best_cost = mv.cost;
        }
        trajectory.push(TrajectoryEntry {
            kind: EntryKind::Proposal,
            strategy: mv.proposed,
            cost: mv.cost,
            accepted: mv.accepted,
        });
    }

    Ok(TuneReport {
        best,
        best_cost,
        default_cost,
        beta,
        evaluations: memo.seen.len(),
        trajectory,
    })
}
