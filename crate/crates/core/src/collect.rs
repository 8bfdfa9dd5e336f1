//! Collecting cubes whose solving cost falls in a band.
//!
//! Cubes are drawn from a [`CubeQueue`] in its seeded order and checked
//! under a strategy drawn from a [`StrategyPool`]. Unsat cubes are solved;
//! those at or above `min_cost` are also collected. Cubes that exhaust
//! their budget are set aside and only re-partitioned once every other
//! cube has been examined. Collection ends with a model, with a proof that
//! every cube is unsat, or with exactly `n` collected cubes.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{Backend, BackendError, Budget, CubeSplit, SolveOutcome, SolveStatus};
use crate::formula::{Cube, Formula};
use crate::strategy::{Strategy, StrategySpace};
use crate::workqueue::{run_ordered, Flow};

#[derive(Debug, Error)]
pub enum CollectError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("budget {max_cost}·r^{resplits} does not fit in 64 bits")]
    BudgetOverflow { max_cost: u64, resplits: u32 },
    #[error("backend reported a model that does not satisfy the formula")]
    InvalidModel,
    #[error("step limit of {0} reached")]
    StepLimit(u64),
    #[error("invalid collect configuration: {0}")]
    Config(String),
}

/// Exact budget growth factor `r ≥ 1`, kept as a rational so that
/// `⌈max_cost · rⁿ⌉` has no rounding error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Growth(BigRational);

impl Growth {
    pub fn integer(r: u64) -> Self {
        Growth(BigRational::from_integer(BigInt::from(r)))
    }

    pub fn ratio(&self) -> &BigRational {
        &self.0
    }
}

impl Default for Growth {
    fn default() -> Self {
        Growth::integer(2)
    }
}

impl FromStr for Growth {
    type Err = String;

    /// Accepts decimal notation (`2`, `1.5`, `1.25e1`) and fractions (`3/2`).
    fn from_str(text: &str) -> Result<Self, String> {
        let text = text.trim();
        let bad = || format!("invalid growth factor {text:?}");
        let value = if let Some((n, d)) = text.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d == BigInt::from(0) {
                return Err(bad());
            }
            BigRational::new(n, d)
        } else {
            let (mantissa, exponent) = match text.find(['e', 'E']) {
                Some(i) => (&text[..i], text[i + 1..].parse::<i32>().map_err(|_| bad())?),
                None => (text, 0),
            };
            let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
            if int.is_empty() && frac.is_empty() {
                return Err(bad());
            }
            let digits = format!("{int}{frac}");
            let n: BigInt = digits.parse().map_err(|_| bad())?;
            let scale = exponent - frac.len() as i32;
            let ten = BigRational::from_integer(BigInt::from(10));
            BigRational::from_integer(n) * num_traits::pow::Pow::pow(&ten, scale)
        };
        if value < BigRational::one() {
            return Err(format!("growth factor must be at least 1, got {text}"));
        }
        Ok(Growth(value))
    }
}

impl fmt::Display for Growth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Growth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Growth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Float(f64),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Int(n) => n.to_string(),
            // shortest round-trip decimal, so 1.1 means 11/10
            Raw::Float(x) => format!("{x:?}"),
            Raw::Text(s) => s,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollectConfig {
    pub sample_target: usize,
    pub min_cost: u64,
    pub max_cost: u64,
    pub online_cubes: usize,
    pub budget_growth: Growth,
    pub seed: u64,
}

impl CollectConfig {
    pub fn validate(&self) -> Result<(), CollectError> {
        if self.sample_target == 0 {
            return Err(CollectError::Config("sample target must be at least 1".into()));
        }
        if self.min_cost >= self.max_cost {
            return Err(CollectError::Config("min_cost must be below max_cost".into()));
        }
        if self.online_cubes < 2 {
            return Err(CollectError::Config("online cube count must be at least 2".into()));
        }
        Ok(())
    }
}

/// `⌈max_cost · rⁿ⌉`.
pub fn effective_budget(max_cost: u64, r: &Growth, resplits: u32) -> Result<u64, CollectError> {
    let exponent = i32::try_from(resplits).map_err(|_| CollectError::BudgetOverflow { max_cost, resplits })?;
    let value = BigRational::from_integer(BigInt::from(max_cost)) * num_traits::pow::Pow::pow(r.ratio(), exponent);
    value
        .ceil()
        .to_integer()
        .to_u64()
        .ok_or(CollectError::BudgetOverflow { max_cost, resplits })
}

/// Where collection draws its strategies from.
#[derive(Clone, Debug)]
pub enum StrategyPool {
    /// Uniform over the whole (capped) space.
    Space(StrategySpace),
    Only(Strategy),
}

impl StrategyPool {
    fn draw(&self, seed: u64, claim: u64) -> Strategy {
        match self {
            StrategyPool::Only(s) => s.clone(),
            StrategyPool::Space(space) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(claim);
                space.sample_uniform(&mut rng)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeRecord {
    pub id: u64,
    pub cube: Cube,
    pub resplits: u32,
    pub parent: Option<u64>,
}

/// The unsolved cubes, in the order they will be examined.
#[derive(Clone, Debug)]
pub struct CubeQueue {
    unexamined: VecDeque<CubeRecord>,
    deferred: Vec<CubeRecord>,
    next_id: u64,
    seed: u64,
    splits: u64,
}

impl CubeQueue {
    /// Cubes of the initial partition, shuffled once by `seed`. Ids follow
    /// the shuffled order.
    pub fn new(cubes: Vec<Cube>, seed: u64) -> Self {
        let mut cubes = cubes;
        cubes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let unexamined: VecDeque<CubeRecord> = cubes
            .into_iter()
            .enumerate()
            .map(|(i, cube)| CubeRecord { id: i as u64, cube, resplits: 0, parent: None })
            .collect();
        CubeQueue {
            next_id: unexamined.len() as u64,
            unexamined,
            deferred: Vec::new(),
            seed,
            splits: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.unexamined.len() + self.deferred.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unsolved cubes by id, i.e. in examination order of the initial
    /// partition, children after their ancestors' generation.
    pub fn remaining(&self) -> Vec<CubeRecord> {
        let mut all: Vec<CubeRecord> = self.unexamined.iter().chain(&self.deferred).cloned().collect();
        all.sort_by_key(|r| r.id);
        all
    }

    /// Removes and returns every unsolved cube, ordered by id.
    pub fn drain(&mut self) -> Vec<CubeRecord> {
        let all = self.remaining();
        self.unexamined.clear();
        self.deferred.clear();
        all
    }

    fn split_rng(&mut self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.splits + 1);
        self.splits += 1;
        rng
    }
}

/// One committed check during collection.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckEvent {
    pub cube_id: u64,
    pub cube: Cube,
    pub strategy: Strategy,
    pub budget: u64,
    pub resplits: u32,
    pub outcome: SolveOutcome,
    /// Solver wall time; not part of the event's identity.
    #[serde(skip)]
    pub wall: Duration,
}

impl PartialEq for CheckEvent {
    fn eq(&self, other: &Self) -> bool {
        (self.cube_id, &self.cube, &self.strategy, self.budget, self.resplits, &self.outcome)
            == (other.cube_id, &other.cube, &other.strategy, other.budget, other.resplits, &other.outcome)
    }
}

impl Eq for CheckEvent {}

/// A re-partitioning of a cube during collection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitEvent {
    pub cube_id: u64,
    pub cube: Cube,
    /// Ids of the children; empty when the cuber decided the cube.
    pub children: Vec<u64>,
    pub decided: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollectEvent {
    Check(CheckEvent),
    Split(SplitEvent),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectedCube {
    pub id: u64,
    pub cube: Cube,
    pub strategy: Strategy,
    pub cost: u64,
    pub budget: u64,
    pub resplits: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollectStatus {
    Sat(Vec<bool>),
    Unsat,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectResult {
    pub status: CollectStatus,
    /// Exactly `n` cubes when the status is `Unknown`, empty otherwise.
    pub collected: Vec<CollectedCube>,
    pub events: Vec<CollectEvent>,
}

struct Claim {
    record: CubeRecord,
    strategy: Strategy,
    budget: u64,
}

/// Collects `cfg.sample_target` cubes with cost in
/// `[min_cost, effective_budget]`, mutating `queue` to hold exactly the
/// unsolved cubes on return.
pub fn collect(
    formula: &Formula,
    queue: &mut CubeQueue,
    cfg: &CollectConfig,
    pool: &StrategyPool,
    backend: &Backend,
    workers: usize,
) -> Result<CollectResult, CollectError> {
    collect_with_limit(formula, queue, cfg, pool, backend, workers, None)
}

/// [`collect`] that fails with [`CollectError::StepLimit`] after
/// `max_steps` checks and re-partitionings.
pub fn collect_with_limit(
    formula: &Formula,
    queue: &mut CubeQueue,
    cfg: &CollectConfig,
    pool: &StrategyPool,
    backend: &Backend,
    workers: usize,
    max_steps: Option<u64>,
) -> Result<CollectResult, CollectError> {
    cfg.validate()?;
    // cubes that ran out of budget in an earlier round get a fresh look
    let earlier = std::mem::take(&mut queue.deferred);
    queue.unexamined.extend(earlier);

    let mut collected: Vec<CollectedCube> = Vec::new();
    let mut events = Vec::new();
    let mut claims: u64 = 0;
    let mut steps: u64 = 0;

    loop {
        if queue.unexamined.is_empty() {
            if queue.deferred.is_empty() {
                collected.clear();
                return Ok(CollectResult { status: CollectStatus::Unsat, collected, events });
            }
            if let Some(model) = split_deferred(formula, queue, cfg, backend, workers, &mut events, &mut steps, max_steps)? {
                return finish_sat(formula, model, events);
            }
            continue;
        }

        let mut batch = VecDeque::with_capacity(queue.unexamined.len());
        for record in queue.unexamined.drain(..) {
            let budget = effective_budget(cfg.max_cost, &cfg.budget_growth, record.resplits)?;
            let strategy = pool.draw(cfg.seed, claims);
            claims += 1;
            batch.push_back(Claim { record, strategy, budget });
        }
        let first_claim = claims - batch.len() as u64;

        let mut failure: Option<CollectError> = None;
        let mut model: Option<Vec<bool>> = None;
        let mut committed = 0u64;
        let mut failed: Option<CubeRecord> = None;
        let rest = run_ordered(
            batch,
            workers,
            |_, claim| {
                let t = Instant::now();
                let out = backend.check(formula, &claim.record.cube, &claim.strategy, Budget::Conflicts(claim.budget));
                (out, t.elapsed())
            },
            |_, claim, (result, wall)| {
                committed += 1;
                if max_steps.is_some_and(|limit| steps >= limit) {
                    failure = Some(CollectError::StepLimit(steps));
                    failed = Some(claim.record);
                    return Flow::Stop;
                }
                steps += 1;
                let outcome = match result {
                    Ok(outcome) => outcome,
                    Err(e) => {
                        failure = Some(e.into());
                        failed = Some(claim.record);
                        return Flow::Stop;
                    }
                };
                events.push(CollectEvent::Check(CheckEvent {
                    cube_id: claim.record.id,
                    cube: claim.record.cube.clone(),
                    strategy: claim.strategy.clone(),
                    budget: claim.budget,
                    resplits: claim.record.resplits,
                    outcome: outcome.clone(),
                    wall,
                }));
                match outcome.status {
                    SolveStatus::Sat(m) => {
                        model = Some(m);
                        Flow::Stop
                    }
                    SolveStatus::Unsat => {
                        if outcome.cost >= cfg.min_cost {
                            collected.push(CollectedCube {
                                id: claim.record.id,
                                cube: claim.record.cube,
                                strategy: claim.strategy,
                                cost: outcome.cost,
                                budget: claim.budget,
                                resplits: claim.record.resplits,
                            });
                            if collected.len() == cfg.sample_target {
                                return Flow::Stop;
                            }
                        }
                        Flow::Continue
                    }
                    SolveStatus::Unknown => {
                        queue.deferred.push(claim.record);
                        Flow::Continue
                    }
                }
            },
        );
        // claims beyond the stopping point were never committed
        let mut rest: VecDeque<CubeRecord> = rest.into_iter().map(|c| c.record).collect();
        if let Some(record) = failed.take() {
            rest.push_front(record);
        }
        rest.extend(queue.unexamined.drain(..));
        queue.unexamined = rest;
        claims = first_claim + committed;

        if let Some(e) = failure {
            return Err(e);
        }
        if let Some(m) = model {
            return finish_sat(formula, m, events);
        }
        if collected.len() == cfg.sample_target {
            return Ok(CollectResult { status: CollectStatus::Unknown, collected, events });
        }
    }
}

fn finish_sat(formula: &Formula, model: Vec<bool>, events: Vec<CollectEvent>) -> Result<CollectResult, CollectError> {
    if !formula.is_satisfied_by(&model) {
        return Err(CollectError::InvalidModel);
    }
    Ok(CollectResult { status: CollectStatus::Sat(model), collected: Vec::new(), events })
}

/// Re-partitions every deferred cube; returns a model if the cuber finds one.
#[allow(clippy::too_many_arguments)]
fn split_deferred(
    formula: &Formula,
    queue: &mut CubeQueue,
    cfg: &CollectConfig,
    backend: &Backend,
    workers: usize,
    events: &mut Vec<CollectEvent>,
    steps: &mut u64,
    max_steps: Option<u64>,
) -> Result<Option<Vec<bool>>, CollectError> {
    let deferred = std::mem::take(&mut queue.deferred);
    let seed = queue.seed;
    let splits = crate::workqueue::parallel_map(&deferred, workers, |record| {
        backend.cube(formula, &record.cube, cfg.online_cubes, seed ^ record.id.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    });
    let mut children = Vec::new();
    for (i, (record, split)) in deferred.iter().zip(splits).enumerate() {
        if max_steps.is_some_and(|limit| *steps >= limit) {
            queue.deferred = deferred[i..].to_vec();
            queue.unexamined.extend(children);
            return Err(CollectError::StepLimit(*steps));
        }
        *steps += 1;
        let split = match split {
            Ok(split) => split,
            Err(e) => {
                queue.deferred = deferred[i..].to_vec();
                queue.unexamined.extend(children);
                return Err(e.into());
            }
        };
        match split {
            CubeSplit::Cubes(cubes) => {
                let mut ids = Vec::with_capacity(cubes.len());
                for cube in cubes {
                    let id = queue.next_id;
                    queue.next_id += 1;
                    ids.push(id);
                    children.push(CubeRecord { id, cube, resplits: record.resplits + 1, parent: Some(record.id) });
                }
                events.push(CollectEvent::Split(SplitEvent { cube_id: record.id, cube: record.cube.clone(), children: ids, decided: None }));
            }
            CubeSplit::Refuted => {
                events.push(CollectEvent::Split(SplitEvent { cube_id: record.id, cube: record.cube.clone(), children: Vec::new(), decided: Some(false) }));
            }
            CubeSplit::Satisfied(model) => {
                events.push(CollectEvent::Split(SplitEvent { cube_id: record.id, cube: record.cube.clone(), children: Vec::new(), decided: Some(true) }));
                queue.deferred = deferred[i + 1..].to_vec();
                queue.unexamined.extend(children);
                return Ok(Some(model));
            }
        }
    }
    children.shuffle(&mut queue.split_rng());
    queue.unexamined.extend(children);
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budgets() {
        let g = |s: &str| s.parse::<Growth>().unwrap();
        assert_eq!(effective_budget(10_000, &g("1"), 3).unwrap(), 10_000);
        assert_eq!(effective_budget(100, &g("2"), 0).unwrap(), 100);
        assert_eq!(effective_budget(100, &g("1.5"), 2).unwrap(), 225);
        assert_eq!(effective_budget(100, &g("1.1"), 2).unwrap(), 121);
        assert_eq!(effective_budget(100, &g("3/2"), 1).unwrap(), 150);
        assert_eq!(effective_budget(7, &g("1.5"), 1).unwrap(), 11);
        assert!(matches!(effective_budget(u64::MAX, &g("2"), 1), Err(CollectError::BudgetOverflow { .. })));
        assert!(matches!(effective_budget(2, &g("2"), 64), Err(CollectError::BudgetOverflow { .. })));
    }

    #[test]
    fn growth_parsing() {
        assert_eq!("1.25e1".parse::<Growth>().unwrap(), "25/2".parse().unwrap());
        assert_eq!("125e-2".parse::<Growth>().unwrap(), "5/4".parse().unwrap());
        assert!("0.5".parse::<Growth>().is_err());
        assert!("x".parse::<Growth>().is_err());
        assert!("1/0".parse::<Growth>().is_err());
        let from_toml: CollectConfig = toml::from_str(
            "sample_target = 1\nmin_cost = 0\nmax_cost = 5\nonline_cubes = 2\nbudget_growth = 1.1\nseed = 0",
        )
        .unwrap();
        assert_eq!(from_toml.budget_growth, "11/10".parse().unwrap());
        let from_json: Growth = serde_json::from_str("3").unwrap();
        assert_eq!(from_json, Growth::integer(3));
    }

    #[test]
    fn queue_order_is_seeded() {
        let cubes: Vec<Cube> = (1..=20).map(|v| Cube::from_dimacs(&[v]).unwrap()).collect();
        let a = CubeQueue::new(cubes.clone(), 4);
        let b = CubeQueue::new(cubes.clone(), 4);
        let c = CubeQueue::new(cubes, 5);
        assert_eq!(a.remaining(), b.remaining());
        assert_ne!(a.remaining(), c.remaining());
        assert!(a.remaining().iter().enumerate().all(|(i, r)| r.id == i as u64));
    }
}
