//! CNF formulas, cubes and the file formats used to exchange them.
//!
//! Variables are 1-based in every external representation (DIMACS, iCNF,
//! reports) and 0-based everywhere else. [`Lit`] stores the signed DIMACS
//! value and exposes the 0-based index through [`Lit::var`].

mod dimacs;
mod oracle;

use std::fmt;
use std::num::NonZeroI32;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dimacs::{parse_dimacs, parse_icnf, write_dimacs, write_icnf};
pub use oracle::{brute_force_sat, Verdict, MAX_ORACLE_VARS};

/// A non-zero signed literal in DIMACS convention.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub struct Lit(NonZeroI32);

impl Lit {
    /// Builds a literal from its DIMACS value; `None` for zero.
    pub fn new(value: i32) -> Option<Self> {
        // i32::MIN has no positive counterpart
        if value == i32::MIN {
            return None;
        }
        NonZeroI32::new(value).map(Lit)
    }

    /// Literal over the 0-based variable `var`.
    pub fn from_var(var: usize, positive: bool) -> Self {
        let v = i32::try_from(var + 1).expect("variable index exceeds i32");
        Lit(NonZeroI32::new(if positive { v } else { -v }).unwrap())
    }

    pub fn dimacs(self) -> i32 {
        self.0.get()
    }

    /// 0-based variable index.
    pub fn var(self) -> usize {
        self.0.get().unsigned_abs() as usize - 1
    }

    pub fn is_positive(self) -> bool {
        self.0.get() > 0
    }

    /// Dense code `2 * var + sign`, handy for watch lists.
    pub fn code(self) -> usize {
        2 * self.var() + usize::from(!self.is_positive())
    }

    /// Value the literal takes under `model`.
    pub fn eval(self, model: &[bool]) -> bool {
        model[self.var()] == self.is_positive()
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(-self.0)
    }
}

impl TryFrom<i32> for Lit {
    type Error = FormulaError;

    fn try_from(value: i32) -> Result<Self, Self::Error> {
        Lit::new(value).ok_or(FormulaError::ZeroLiteral)
    }
}

impl From<Lit> for i32 {
    fn from(lit: Lit) -> i32 {
        lit.dimacs()
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type Clause = Vec<Lit>;

/// Errors raised while building or reading formulas and cubes.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("literal {lit} out of range (formula declares {num_vars} variables)")]
    LiteralOutOfRange { lit: i64, num_vars: usize },
    #[error("unterminated clause at end of input")]
    UnterminatedClause,
    #[error("malformed cube line {line}: {reason}")]
    MalformedCubeLine { line: usize, reason: String },
    #[error("invalid token {token:?} on line {line}")]
    InvalidToken { line: usize, token: String },
    #[error("literal 0 is not a literal")]
    ZeroLiteral,
    #[error("variable {var} appears twice in cube")]
    DuplicateVariable { var: usize },
    #[error("oracle limited to {max} variables, formula has {num_vars}")]
    TooManyVariables { num_vars: usize, max: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FormulaError {
    fn from(e: std::io::Error) -> Self {
        FormulaError::Io(e.to_string())
    }
}

/// A CNF clause database over `num_vars` variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formula {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl Formula {
    pub fn new(num_vars: usize) -> Self {
        Formula {
            num_vars,
            clauses: Vec::new(),
        }
    }

    /// Builds a formula from DIMACS-style integer clauses.
    pub fn from_clauses<I, C>(num_vars: usize, clauses: I) -> Result<Self, FormulaError>
    where
        I: IntoIterator<Item = C>,
        C: AsRef<[i32]>,
    {
        let mut formula = Formula::new(num_vars);
        for clause in clauses {
            let lits = clause
                .as_ref()
                .iter()
                .map(|&v| Lit::try_from(v))
                .collect::<Result<Vec<_>, _>>()?;
            formula.add_clause(lits)?;
        }
        Ok(formula)
    }

    pub fn add_clause(&mut self, clause: Clause) -> Result<(), FormulaError> {
        if let Some(lit) = clause.iter().find(|l| l.var() >= self.num_vars) {
            return Err(FormulaError::LiteralOutOfRange {
                lit: lit.dimacs() as i64,
                num_vars: self.num_vars,
            });
        }
        self.clauses.push(clause);
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// `true` if every clause has a literal made true by `model`.
    pub fn is_satisfied_by(&self, model: &[bool]) -> bool {
        model.len() >= self.num_vars
            && self
                .clauses
                .iter()
                .all(|c| c.iter().any(|l| l.eval(model)))
    }

    /// Variables that occur in at least one clause, ascending.
    pub fn occurring_vars(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_vars];
        for lit in self.clauses.iter().flatten() {
            seen[lit.var()] = true;
        }
        (0..self.num_vars).filter(|&v| seen[v]).collect()
    }

    /// The formula restricted by `cube`: every cube literal becomes a unit
    /// clause appended after the original clauses.
    pub fn conjoin(&self, cube: &Cube) -> Formula {
        let mut out = self.clone();
        out.clauses.extend(cube.lits().iter().map(|&l| vec![l]));
        out
    }
}

/// A conjunction of literals over pairwise distinct variables.
///
/// The empty cube is the unrestricted formula.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Lit>", into = "Vec<Lit>")]
pub struct Cube(Vec<Lit>);

impl Cube {
    pub fn top() -> Self {
        Cube(Vec::new())
    }

    pub fn new(lits: Vec<Lit>) -> Result<Self, FormulaError> {
        let mut vars: Vec<usize> = lits.iter().map(|l| l.var()).collect();
        vars.sort_unstable();
        if let Some(w) = vars.windows(2).find(|w| w[0] == w[1]) {
            return Err(FormulaError::DuplicateVariable { var: w[0] + 1 });
        }
        Ok(Cube(lits))
    }

    pub fn from_dimacs(values: &[i32]) -> Result<Self, FormulaError> {
        let lits = values
            .iter()
            .map(|&v| Lit::try_from(v))
            .collect::<Result<Vec<_>, _>>()?;
        Cube::new(lits)
    }

    pub fn lits(&self) -> &[Lit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains_var(&self, var: usize) -> bool {
        self.0.iter().any(|l| l.var() == var)
    }

    /// `self ∧ extra`, rejecting contradictions and repeated variables.
    pub fn extend(&self, extra: &[Lit]) -> Result<Cube, FormulaError> {
        let mut lits = self.0.clone();
        lits.extend_from_slice(extra);
        Cube::new(lits)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.0.iter().map(|l| l.var()).max()
    }
}

impl TryFrom<Vec<Lit>> for Cube {
    type Error = FormulaError;

    fn try_from(lits: Vec<Lit>) -> Result<Self, Self::Error> {
        Cube::new(lits)
    }
}

impl From<Cube> for Vec<Lit> {
    fn from(cube: Cube) -> Vec<Lit> {
        cube.0
    }
}

impl fmt::Debug for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Space-separated DIMACS literals, `T` for the empty cube.
impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "T");
        }
        for (i, lit) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{lit}")?;
        }
        Ok(())
    }
}
