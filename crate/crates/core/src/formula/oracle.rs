//! Exhaustive truth-table satisfiability check, the ground truth for tests.

use serde::{Deserialize, Serialize};

use super::{Formula, FormulaError};

/// Largest formula the oracle accepts.
pub const MAX_ORACLE_VARS: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Sat(Vec<bool>),
    Unsat,
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat(_))
    }
}

/// Enumerates all assignments in increasing binary order (variable 1 is the
/// least significant bit) and returns the first model found.
pub fn brute_force_sat(formula: &Formula) -> Result<Verdict, FormulaError> {
    let n = formula.num_vars();
    if n > MAX_ORACLE_VARS {
        return Err(FormulaError::TooManyVariables {
            num_vars: n,
            max: MAX_ORACLE_VARS,
        });
    }
    // per clause: bits that satisfy it when set / when clear
    let masks: Vec<(u32, u32)> = formula
        .clauses()
        .iter()
        .map(|clause| {
            clause.iter().fold((0u32, 0u32), |(pos, neg), lit| {
                let bit = 1u32 << lit.var();
                if lit.is_positive() {
                    (pos | bit, neg)
                } else {
                    (pos, neg | bit)
                }
            })
        })
        .collect();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    for assignment in 0..=full {
        if masks
            .iter()
            .all(|&(pos, neg)| (assignment & pos) | (!assignment & neg) != 0)
        {
            let model = (0..n).map(|v| assignment >> v & 1 == 1).collect();
            return Ok(Verdict::Sat(model));
        }
    }
    Ok(Verdict::Unsat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contradiction_is_unsat() {
        let f = Formula::from_clauses(1, [vec![1], vec![-1]]).unwrap();
        assert_eq!(brute_force_sat(&f).unwrap(), Verdict::Unsat);
    }

    #[test]
    fn finds_model_with_x2_true() {
        let f = Formula::from_clauses(2, [vec![1, 2], vec![-1, 2]]).unwrap();
        match brute_force_sat(&f).unwrap() {
            Verdict::Sat(m) => {
                assert!(m[1]);
                assert!(f.is_satisfied_by(&m));
            }
            Verdict::Unsat => panic!("expected sat"),
        }
    }

    #[test]
    fn empty_formula_is_sat() {
        assert_eq!(brute_force_sat(&Formula::new(0)).unwrap(), Verdict::Sat(vec![]));
    }

    #[test]
    fn empty_clause_is_unsat() {
        let f = Formula::from_clauses(2, [vec![1], vec![]]).unwrap();
        assert_eq!(brute_force_sat(&f).unwrap(), Verdict::Unsat);
    }

    #[test]
    fn refuses_large_formulas() {
        assert!(matches!(
            brute_force_sat(&Formula::new(25)),
            Err(FormulaError::TooManyVariables { .. })
        ));
    }
}
