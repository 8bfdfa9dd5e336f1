//! Solver and cuber backends.
//!
//! A [`Backend`] bundles a [`Solver`] (budgeted `check`), a [`Cuber`]
//! (sound partitioning) and a ledger of decided costs that backs `eval`.
//! Backends are shared read-only across worker threads.

mod cdcl;
mod cuber;
mod external;
mod params;
mod propagate;

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Cube, Formula, FormulaError};
use crate::strategy::{Strategy, StrategySpace};

pub use cdcl::mini_cdcl_solve;
pub use cuber::{CuberKind, LookaheadCuber, UnitClauseCuber};
pub use external::{ExternalConfig, ExternalSolver};
pub use params::{MiniSolverParams, RestartMode};
pub use propagate::Propagator;

/// Cost budget for a single check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Budget {
    Conflicts(u64),
    Unlimited,
}

impl Budget {
    pub fn limit(self) -> Option<u64> {
        match self {
            Budget::Conflicts(n) => Some(n),
            Budget::Unlimited => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Sat(Vec<bool>),
    Unsat,
    Unknown,
}

impl SolveStatus {
    pub fn is_decided(&self) -> bool {
        !matches!(self, SolveStatus::Unknown)
    }

    pub fn label(&self) -> &'static str {
        match self {
            SolveStatus::Sat(_) => "sat",
            SolveStatus::Unsat => "unsat",
            SolveStatus::Unknown => "unknown",
        }
    }
}

/// Result of one budgeted solve. `Unknown` always carries `cost == budget`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub cost: u64,
}

impl SolveOutcome {
    pub fn new(status: SolveStatus, cost: u64) -> Self {
        SolveOutcome { status, cost }
    }
}

/// Result of partitioning `φ ∧ base`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CubeSplit {
    /// Sub-cubes, each extending the base; their disjunction is
    /// equisatisfiable with the base.
    Cubes(Vec<Cube>),
    /// Unit propagation alone refutes the base.
    Refuted,
    /// Unit propagation alone satisfies the base.
    Satisfied(Vec<bool>),
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("cannot decode strategy: {0}")]
    Decode(String),
    #[error("failed to spawn solver: {0}")]
    SpawnFailure(String),
    #[error("solver exceeded the wall-clock timeout of {0:?}")]
    Timeout(std::time::Duration),
    #[error("unparseable solver output: {0}")]
    UnparseableOutput(String),
    #[error("eval requested before the cube was decided under this strategy")]
    NotYetSolved,
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Budgeted satisfiability check of `φ ∧ cube`.
pub trait Solver: Send + Sync {
    fn check(
        &self,
        formula: &Formula,
        cube: &Cube,
        strategy: &Strategy,
        budget: Budget,
    ) -> Result<SolveOutcome, BackendError>;
}

/// Sound partitioning of `φ ∧ base` into at most `k` extensions.
pub trait Cuber: Send + Sync {
    fn cube(&self, formula: &Formula, base: &Cube, k: usize, seed: u64) -> Result<CubeSplit, BackendError>;
}

/// The embedded CDCL solver; strategies are decoded against `space`.
#[derive(Clone, Debug)]
pub struct MiniCdcl {
    space: StrategySpace,
}

impl MiniCdcl {
    pub fn new(space: StrategySpace) -> Self {
        MiniCdcl { space }
    }

    pub fn space(&self) -> &StrategySpace {
        &self.space
    }
}

impl Solver for MiniCdcl {
    fn check(
        &self,
        formula: &Formula,
        cube: &Cube,
        strategy: &Strategy,
        budget: Budget,
    ) -> Result<SolveOutcome, BackendError> {
        let params = MiniSolverParams::decode(&self.space, strategy)?;
        Ok(mini_cdcl_solve(&formula.conjoin(cube), &params, budget))
    }
}

/// Per-call counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallTally {
    pub checks: u64,
    pub cube_calls: u64,
    pub total_cost: u64,
}

type EvalKey = (u64, Cube, Strategy);

/// Solver + cuber + the ledger of decided costs.
#[derive(Clone)]
pub struct Backend {
    solver: Arc<dyn Solver>,
    cuber: Arc<dyn Cuber>,
    ledger: Arc<Mutex<HashMap<EvalKey, u64>>>,
    checks: Arc<AtomicU64>,
    cube_calls: Arc<AtomicU64>,
    total_cost: Arc<AtomicU64>,
}

fn fingerprint(formula: &Formula) -> u64 {
    let mut h = DefaultHasher::new();
    formula.num_vars().hash(&mut h);
    formula.clauses().hash(&mut h);
    h.finish()
}

impl Backend {
    pub fn new(solver: Arc<dyn Solver>, cuber: Arc<dyn Cuber>) -> Self {
        Backend {
            solver,
            cuber,
            ledger: Arc::default(),
            checks: Arc::default(),
            cube_calls: Arc::default(),
            total_cost: Arc::default(),
        }
    }

    /// Embedded solver over `space` with the given embedded cuber.
    pub fn mini_cdcl(space: StrategySpace, cuber: CuberKind) -> Self {
        Backend::new(Arc::new(MiniCdcl::new(space)), cuber.build())
    }

    pub fn check(
        &self,
        formula: &Formula,
        cube: &Cube,
        strategy: &Strategy,
        budget: Budget,
    ) -> Result<SolveOutcome, BackendError> {
        let out = self.solver.check(formula, cube, strategy, budget)?;
        debug_assert!(budget.limit().is_none_or(|b| out.cost <= b));
        self.checks.fetch_add(1, Ordering::Relaxed);
        self.total_cost.fetch_add(out.cost, Ordering::Relaxed);
        if out.status.is_decided() {
            let key = (fingerprint(formula), cube.clone(), strategy.clone());
            self.ledger.lock().unwrap().insert(key, out.cost);
        }
        Ok(out)
    }

    /// Cost of an earlier decided check of the same `(φ, cube, σ)`.
    pub fn eval(&self, formula: &Formula, cube: &Cube, strategy: &Strategy) -> Result<u64, BackendError> {
        let key = (fingerprint(formula), cube.clone(), strategy.clone());
        self.ledger
            .lock()
            .unwrap()
            .get(&key)
            .copied()
            .ok_or(BackendError::NotYetSolved)
    }

    pub fn cube(&self, formula: &Formula, base: &Cube, k: usize, seed: u64) -> Result<CubeSplit, BackendError> {
        self.cube_calls.fetch_add(1, Ordering::Relaxed);
        self.cuber.cube(formula, base, k, seed)
    }

    pub fn tally(&self) -> CallTally {
        CallTally {
            checks: self.checks.load(Ordering::Relaxed),
            cube_calls: self.cube_calls.load(Ordering::Relaxed),
            total_cost: self.total_cost.load(Ordering::Relaxed),
        }
    }
}
