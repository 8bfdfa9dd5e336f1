//! Checking a learned strategy against the default before trusting it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{Backend, BackendError, Budget, SolveOutcome, SolveStatus};
use crate::collect::CollectedCube;
use crate::formula::{Cube, Formula};
use crate::strategy::Strategy;
use crate::tune::{cube_costs, TuningCube};

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("no validation cubes")]
    NoCubes,
    #[error("the learned strategy is the default")]
    SameStrategy,
    #[error("a portfolio needs a positive first budget")]
    ZeroBudget,
}

/// How the remaining cubes are solved.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalPolicy {
    Single(Strategy),
    /// Try `first` within `first_budget`, then `fallback` without a budget.
    SequentialPortfolio {
        first: Strategy,
        first_budget: u64,
        fallback: Strategy,
    },
}

impl FinalPolicy {
    pub fn portfolio(first: Strategy, first_budget: u64, fallback: Strategy) -> Result<Self, ValidateError> {
        if first == fallback {
            return Err(ValidateError::SameStrategy);
        }
        if first_budget == 0 {
            return Err(ValidateError::ZeroBudget);
        }
        Ok(FinalPolicy::SequentialPortfolio { first, first_budget, fallback })
    }
}

/// What to do when the learned strategy loses validation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnReject {
    /// Learned strategy with a budget, then the default.
    #[default]
    Portfolio,
    /// Drop the learned strategy entirely.
    Default,
    /// Tune again on a larger sample, then validate once more.
    Retune,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub cube_id: u64,
    pub cost_learned: u64,
    pub cost_default: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub cost_learned: u64,
    pub cost_default: u64,
    pub accepted: bool,
    pub per_cube: Vec<ValidationRow>,
}

/// Prices both strategies on the validation cubes with PAR-capped costs,
/// each cube under the budget it was collected with. Costs of cubes that
/// were collected under `learned` are reused. The learned strategy is kept
/// only if it is strictly cheaper in total.
#[allow(clippy::too_many_arguments)]
pub fn validate(
    formula: &Formula,
    cubes: &[CollectedCube],
    learned: &Strategy,
    default: &Strategy,
    backend: &Backend,
    first_budget: u64,
    par_multiplier: u64,
    workers: usize,
) -> Result<(FinalPolicy, ValidationReport), ValidateError> {
    if cubes.is_empty() {
        return Err(ValidateError::NoCubes);
    }
    if learned == default {
        return Err(ValidateError::SameStrategy);
    }
    let as_tuning: Vec<TuningCube> = cubes
        .iter()
        .map(|c| TuningCube { id: c.id, cube: c.cube.clone(), budget: c.budget })
        .collect();
    let defaults = cube_costs(formula, &as_tuning, default, backend, None, par_multiplier, workers)?;
    let learned_costs = if cubes.iter().all(|c| &c.strategy == learned) {
        cubes.iter().map(|c| c.cost).collect()
    } else {
        cube_costs(formula, &as_tuning, learned, backend, None, par_multiplier, workers)?
    };
    let per_cube: Vec<ValidationRow> = cubes
        .iter()
        .zip(learned_costs.iter().zip(&defaults))
        .map(|(c, (&l, &d))| ValidationRow { cube_id: c.id, cost_learned: l, cost_default: d })
        .collect();
    let cost_learned = learned_costs.iter().copied().fold(0u64, u64::saturating_add);
    let cost_default = defaults.iter().copied().fold(0u64, u64::saturating_add);
    let accepted = cost_learned < cost_default;
    let policy = if accepted {
        FinalPolicy::Single(learned.clone())
    } else {
        FinalPolicy::portfolio(learned.clone(), first_budget, default.clone())?
    };
    Ok((policy, ValidationReport { cost_learned, cost_default, accepted, per_cube }))
}

/// One solver call made on behalf of a policy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub strategy: Strategy,
    pub budget: Option<u64>,
    pub outcome: SolveOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyOutcome {
    /// Final status, with the cost summed over all attempts.
    pub outcome: SolveOutcome,
    pub attempts: Vec<Attempt>,
}

/// Solves `φ ∧ cube` under `policy`.
pub fn solve_with_policy(
    formula: &Formula,
    cube: &Cube,
    policy: &FinalPolicy,
    backend: &Backend,
) -> Result<PolicyOutcome, BackendError> {
    let mut attempts = Vec::new();
    let (first, budget, fallback) = match policy {
        FinalPolicy::Single(s) => (s, Budget::Unlimited, None),
        FinalPolicy::SequentialPortfolio { first, first_budget, fallback } => {
            (first, Budget::Conflicts(*first_budget), Some(fallback))
        }
    };
    let out = backend.check(formula, cube, first, budget)?;
    attempts.push(Attempt { strategy: first.clone(), budget: budget.limit(), outcome: out.clone() });
    let mut total = out.cost;
    let mut status = out.status;
    if let (SolveStatus::Unknown, Some(fallback)) = (&status, fallback) {
        let second = backend.check(formula, cube, fallback, Budget::Unlimited)?;
        total = total.saturating_add(second.cost);
        status = second.status.clone();
        attempts.push(Attempt { strategy: fallback.clone(), budget: None, outcome: second });
    }
    Ok(PolicyOutcome { outcome: SolveOutcome::new(status, total), attempts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::CuberKind;
    use crate::strategy::presets;

    #[test]
    fn portfolio_invariants() {
        let space = presets::mini_cdcl();
        let s0 = space.default_strategy();
        let s1 = space.parse("bump=0").unwrap();
        assert!(matches!(FinalPolicy::portfolio(s0.clone(), 5, s0.clone()), Err(ValidateError::SameStrategy)));
        assert!(matches!(FinalPolicy::portfolio(s1.clone(), 0, s0.clone()), Err(ValidateError::ZeroBudget)));
        assert!(FinalPolicy::portfolio(s1, 5, s0).is_ok());
    }

    #[test]
    fn single_policy_is_one_unlimited_check() {
        let space = presets::mini_cdcl();
        let backend = Backend::mini_cdcl(space.clone(), CuberKind::Lookahead);
        let f = crate::orchestrate::generate::php(5, 4);
        let policy = FinalPolicy::Single(space.default_strategy());
        let out = solve_with_policy(&f, &Cube::top(), &policy, &backend).unwrap();
        assert_eq!(out.attempts.len(), 1);
        assert_eq!(out.outcome, out.attempts[0].outcome);
        assert_eq!(out.outcome.status, SolveStatus::Unsat);
    }

    #[test]
    fn portfolio_accounting() {
        let space = presets::mini_cdcl();
        let backend = Backend::mini_cdcl(space.clone(), CuberKind::Lookahead);
        let f = crate::orchestrate::generate::php(5, 4);
        let first = space.parse("bump=0").unwrap();
        let fallback = space.default_strategy();
        // tight budget: first leg gives up, fallback decides
        let policy = FinalPolicy::portfolio(first.clone(), 3, fallback.clone()).unwrap();
        let out = solve_with_policy(&f, &Cube::top(), &policy, &backend).unwrap();
        assert_eq!(out.attempts.len(), 2);
        assert_eq!(out.attempts[0].outcome, SolveOutcome::new(SolveStatus::Unknown, 3));
        assert_eq!(out.outcome.cost, 3 + out.attempts[1].outcome.cost);
        assert_eq!(out.outcome.status, SolveStatus::Unsat);
        // generous budget: fallback never runs
        let before = backend.tally().checks;
        let policy = FinalPolicy::portfolio(first, 1_000_000, fallback).unwrap();
        let out = solve_with_policy(&f, &Cube::top(), &policy, &backend).unwrap();
        assert_eq!(out.attempts.len(), 1);
        assert_eq!(backend.tally().checks, before + 1);
    }
}
