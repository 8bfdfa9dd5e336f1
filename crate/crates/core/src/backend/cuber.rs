//! Embedded cubers.
//!
//! [`LookaheadCuber`] splits on the variable whose two polarities imply the
//! most unit propagations (score `p⁺·p⁻ + p⁺ + p⁻`), recursing
//! `⌊log₂ k⌋` levels. A polarity that fails under propagation is pruned,
//! since that half of the split is unsatisfiable.
//!
//! [`UnitClauseCuber`] adds unit clauses over variables that are not yet
//! fixed by a unit of `φ ∧ base`, so every re-split strictly grows the set
//! of units and a cubing trace decides its cube after at most `n` steps.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::propagate::Propagator;
use super::{BackendError, CubeSplit, Cuber};
use crate::formula::{Cube, Formula, Lit};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CuberKind {
    #[default]
    Lookahead,
    UnitClause,
}

impl CuberKind {
    pub fn build(self) -> Arc<dyn Cuber> {
        match self {
            CuberKind::Lookahead => Arc::new(LookaheadCuber),
            CuberKind::UnitClause => Arc::new(UnitClauseCuber),
        }
    }
}

/// Binary levels that fit in `k` cubes (at least one).
fn levels(k: usize) -> usize {
    (usize::BITS - 1 - k.max(2).leading_zeros()) as usize
}

fn root(formula: &Formula, base: &Cube) -> Result<Propagator, CubeSplit> {
    let mut prop = Propagator::new(formula);
    if !prop.assert_root(base.lits()) {
        return Err(CubeSplit::Refuted);
    }
    Ok(prop)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LookaheadCuber;

enum Choice {
    Split(usize),
    /// Both polarities of some variable fail.
    Refuted,
    /// Every occurring variable is assigned.
    Done,
}

impl LookaheadCuber {
    fn choose(prop: &mut Propagator, vars: &[usize]) -> (Choice, [bool; 2]) {
        let mut best: Option<(usize, u128, [bool; 2])> = None;
        for &v in vars {
            if prop.value(v).is_some() {
                continue;
            }
            let pos = prop.probe(Lit::from_var(v, true));
            let neg = prop.probe(Lit::from_var(v, false));
            let alive = [pos.is_some(), neg.is_some()];
            let score = match (pos, neg) {
                (None, None) => return (Choice::Refuted, [false; 2]),
                (Some(p), Some(n)) => {
                    let (p, n) = (p as u128, n as u128);
                    p * n + p + n
                }
                // a failed literal is a free split
                _ => u128::MAX,
            };
            if best.as_ref().is_none_or(|&(_, s, _)| score > s) {
                best = Some((v, score, alive));
            }
        }
        match best {
            Some((v, _, alive)) => (Choice::Split(v), alive),
            None => (Choice::Done, [false; 2]),
        }
    }

    fn split(prop: &mut Propagator, vars: &[usize], depth: usize, path: &mut Vec<Lit>, out: &mut Vec<Vec<Lit>>) {
        if depth == 0 {
            out.push(path.clone());
            return;
        }
        let (choice, alive) = Self::choose(prop, vars);
        let v = match choice {
            Choice::Refuted => return,
            Choice::Done => {
                out.push(path.clone());
                return;
            }
            Choice::Split(v) => v,
        };
        for (positive, ok) in [(true, alive[0]), (false, alive[1])] {
            if !ok {
                continue;
            }
            let lit = Lit::from_var(v, positive);
            if prop.push(lit) {
                path.push(lit);
                Self::split(prop, vars, depth - 1, path, out);
                path.pop();
            }
            prop.pop();
        }
    }
}

impl Cuber for LookaheadCuber {
    fn cube(&self, formula: &Formula, base: &Cube, k: usize, _seed: u64) -> Result<CubeSplit, BackendError> {
        let mut prop = match root(formula, base) {
            Ok(p) => p,
            Err(split) => return Ok(split),
        };
        let vars = formula.occurring_vars();
        if vars.iter().all(|&v| prop.value(v).is_some()) {
            return Ok(CubeSplit::Satisfied(prop.model()));
        }
        let mut leaves = Vec::new();
        Self::split(&mut prop, &vars, levels(k), &mut Vec::new(), &mut leaves);
        if leaves.is_empty() {
            return Ok(CubeSplit::Refuted);
        }
        let cubes = leaves
            .into_iter()
            .map(|extra| base.extend(&extra))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CubeSplit::Cubes(cubes))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct UnitClauseCuber;

impl Cuber for UnitClauseCuber {
    fn cube(&self, formula: &Formula, base: &Cube, k: usize, seed: u64) -> Result<CubeSplit, BackendError> {
        let prop = match root(formula, base) {
            Ok(p) => p,
            Err(split) => return Ok(split),
        };
        let mut fixed = vec![false; formula.num_vars()];
        for lit in base.lits() {
            fixed[lit.var()] = true;
        }
        for clause in formula.clauses() {
            if let [unit] = clause.as_slice() {
                fixed[unit.var()] = true;
            }
        }
        let candidates: Vec<usize> = formula
            .occurring_vars()
            .into_iter()
            .filter(|&v| !fixed[v])
            .collect();
        if candidates.is_empty() {
            // every occurring variable is a unit, so propagation decided it
            return Ok(CubeSplit::Satisfied(prop.model()));
        }
        let take = levels(k).min(candidates.len());
        let offset = (seed % candidates.len() as u64) as usize;
        let chosen: Vec<usize> = (0..take)
            .map(|i| candidates[(offset + i) % candidates.len()])
            .collect();
        let mut cubes = Vec::with_capacity(1 << take);
        for signs in 0..(1usize << take) {
            let extra: Vec<Lit> = chosen
                .iter()
                .enumerate()
                .map(|(i, &v)| Lit::from_var(v, signs >> (take - 1 - i) & 1 == 0))
                .collect();
            cubes.push(base.extend(&extra)?);
        }
        Ok(CubeSplit::Cubes(cubes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::brute_force_sat;

    fn cube(v: &[i32]) -> Cube {
        Cube::from_dimacs(v).unwrap()
    }

    #[test]
    fn levels_of_k() {
        assert_eq!(levels(2), 1);
        assert_eq!(levels(3), 1);
        assert_eq!(levels(4), 2);
        assert_eq!(levels(64), 6);
    }

    #[test]
    fn lookahead_full_binary_split() {
        // x1 and x2 free, nothing propagates
        let f = Formula::from_clauses(2, [vec![1, -1], vec![2, -2]]).unwrap();
        match LookaheadCuber.cube(&f, &Cube::top(), 4, 0).unwrap() {
            CubeSplit::Cubes(mut cubes) => {
                cubes.sort();
                let mut expected = vec![cube(&[1, 2]), cube(&[1, -2]), cube(&[-1, 2]), cube(&[-1, -2])];
                expected.sort();
                assert_eq!(cubes, expected);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lookahead_prefers_high_propagation_variable() {
        // x3 implies both x1 and x2 in each polarity chain
        let f = Formula::from_clauses(
            4,
            [vec![-3, 1], vec![-3, 2], vec![3, 4], vec![3, -1, 4], vec![1, 2, 4]],
        )
        .unwrap();
        match LookaheadCuber.cube(&f, &Cube::top(), 2, 0).unwrap() {
            CubeSplit::Cubes(cubes) => {
                assert_eq!(cubes, vec![cube(&[3]), cube(&[-3])]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn refuted_by_propagation() {
        let f = Formula::from_clauses(2, [vec![1], vec![-1, 2], vec![-2, -1]]).unwrap();
        assert_eq!(LookaheadCuber.cube(&f, &Cube::top(), 4, 0).unwrap(), CubeSplit::Refuted);
        assert_eq!(UnitClauseCuber.cube(&f, &Cube::top(), 4, 0).unwrap(), CubeSplit::Refuted);
    }

    #[test]
    fn extends_base() {
        let f = crate::orchestrate::generate::php(3, 3);
        let base = cube(&[1]);
        for cuber in [CuberKind::Lookahead, CuberKind::UnitClause] {
            if let CubeSplit::Cubes(cubes) = cuber.build().cube(&f, &base, 8, 1).unwrap() {
                assert!(!cubes.is_empty() && cubes.len() <= 8);
                for c in cubes {
                    assert_eq!(c.lits()[0], base.lits()[0]);
                    assert!(c.len() > base.len());
                }
            } else {
                panic!("expected cubes");
            }
        }
    }

    #[test]
    fn unit_cuber_splits_on_non_unit_variables() {
        let f = Formula::from_clauses(3, [vec![1], vec![1, 2, 3]]).unwrap();
        match UnitClauseCuber.cube(&f, &cube(&[2]), 2, 0).unwrap() {
            CubeSplit::Cubes(cubes) => assert_eq!(cubes, vec![cube(&[2, 3]), cube(&[2, -3])]),
            other => panic!("{other:?}"),
        }
        // every variable fixed: decided by propagation
        match UnitClauseCuber.cube(&f, &cube(&[2, -3]), 2, 0).unwrap() {
            CubeSplit::Satisfied(m) => assert!(f.is_satisfied_by(&m)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn satisfied_by_propagation_carries_a_model() {
        let f = Formula::from_clauses(2, [vec![1], vec![-1, 2]]).unwrap();
        match LookaheadCuber.cube(&f, &Cube::top(), 4, 0).unwrap() {
            CubeSplit::Satisfied(m) => {
                assert!(f.is_satisfied_by(&m));
                assert!(brute_force_sat(&f).unwrap().is_sat());
            }
            other => panic!("{other:?}"),
        }
    }
}
