//! DIMACS CNF and iCNF reading and writing.
//!
//! The readers are lenient where real-world files drift (clause counts,
//! clauses spanning lines, a trailing SATLIB `%` section) and strict about
//! anything that changes meaning (literal ranges, unterminated clauses).
//!
//! iCNF has no variable count in its header. The writer emits a
//! `c num_vars N` comment when the formula declares more variables than its
//! clauses and cubes mention, and the reader honours it, so the variable
//! count survives a round trip.

use std::fmt::Write as _;
use std::io::Read;

use super::{Cube, Formula, FormulaError, Lit};

const NUM_VARS_COMMENT: &str = "num_vars";

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dialect {
    Cnf,
    Icnf,
}

struct Parsed {
    formula: Formula,
    cubes: Vec<Cube>,
}

/// Reads a DIMACS CNF formula.
pub fn parse_dimacs<R: Read>(mut reader: R) -> Result<Formula, FormulaError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse(&text, Dialect::Cnf).map(|p| p.formula)
}

/// Reads an iCNF file: a formula plus one cube per `a` line.
pub fn parse_icnf<R: Read>(mut reader: R) -> Result<(Formula, Vec<Cube>), FormulaError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse(&text, Dialect::Icnf).map(|p| (p.formula, p.cubes))
}

fn parse_int(token: &str, line: usize) -> Result<i64, FormulaError> {
    token.parse::<i64>().map_err(|_| FormulaError::InvalidToken {
        line,
        token: token.to_string(),
    })
}

fn parse(text: &str, dialect: Dialect) -> Result<Parsed, FormulaError> {
    let mut declared: Option<(usize, usize)> = None;
    let mut icnf_header = false;
    let mut num_vars_hint: Option<usize> = None;
    let mut clauses: Vec<Vec<i64>> = Vec::new();
    let mut cubes: Vec<(usize, Vec<i64>)> = Vec::new();
    let mut current: Vec<i64> = Vec::new();
    let mut open = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if let Some(rest) = line.strip_prefix('c') {
            let mut toks = rest.split_whitespace();
            if dialect == Dialect::Icnf && toks.next() == Some(NUM_VARS_COMMENT) {
                if let Some(n) = toks.next().and_then(|t| t.parse::<usize>().ok()) {
                    num_vars_hint = Some(n);
                }
            }
            continue;
        }
        if line.starts_with('p') {
            if declared.is_some() || icnf_header {
                return Err(FormulaError::MalformedHeader(format!(
                    "second header on line {line_no}"
                )));
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            match (dialect, toks.as_slice()) {
                (Dialect::Cnf, ["p", "cnf", v, c]) => {
                    let v = v.parse::<usize>().map_err(|_| {
                        FormulaError::MalformedHeader(format!("bad variable count {v:?}"))
                    })?;
                    let c = c.parse::<usize>().map_err(|_| {
                        FormulaError::MalformedHeader(format!("bad clause count {c:?}"))
                    })?;
                    declared = Some((v, c));
                }
                (Dialect::Icnf, ["p", "inccnf"]) => icnf_header = true,
                _ => return Err(FormulaError::MalformedHeader(line.to_string())),
            }
            continue;
        }
        if declared.is_none() && !icnf_header {
            return Err(FormulaError::MalformedHeader(format!(
                "line {line_no} precedes the header"
            )));
        }
        if dialect == Dialect::Icnf {
            if let Some(rest) = line.strip_prefix('a') {
                if open {
                    return Err(FormulaError::MalformedCubeLine {
                        line: line_no,
                        reason: "cube line inside an unterminated clause".into(),
                    });
                }
                let mut lits = Vec::new();
                let mut terminated = false;
                for tok in rest.split_whitespace() {
                    if terminated {
                        return Err(FormulaError::MalformedCubeLine {
                            line: line_no,
                            reason: "tokens after terminating 0".into(),
                        });
                    }
                    let v = parse_int(tok, line_no).map_err(|_| FormulaError::MalformedCubeLine {
                        line: line_no,
                        reason: format!("invalid literal {tok:?}"),
                    })?;
                    if v == 0 {
                        terminated = true;
                    } else {
                        lits.push(v);
                    }
                }
                if !terminated {
                    return Err(FormulaError::MalformedCubeLine {
                        line: line_no,
                        reason: "missing terminating 0".into(),
                    });
                }
                cubes.push((line_no, lits));
                continue;
            }
        }
        for tok in line.split_whitespace() {
            let v = parse_int(tok, line_no)?;
            if v == 0 {
                clauses.push(std::mem::take(&mut current));
                open = false;
            } else {
                current.push(v);
                open = true;
            }
        }
    }
    if open {
        return Err(FormulaError::UnterminatedClause);
    }

    let max_var = clauses
        .iter()
        .flatten()
        .chain(cubes.iter().flat_map(|(_, c)| c.iter()))
        .map(|v| v.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let num_vars = match dialect {
        Dialect::Cnf => {
            let (vars, count) = declared.ok_or_else(|| {
                FormulaError::MalformedHeader("missing `p cnf` header".into())
            })?;
            if count != clauses.len() {
                log::warn!(
                    "header declares {count} clauses but {} were read",
                    clauses.len()
                );
            }
            vars
        }
        Dialect::Icnf => {
            if !icnf_header {
                return Err(FormulaError::MalformedHeader("missing `p inccnf` header".into()));
            }
            num_vars_hint.unwrap_or(max_var)
        }
    };

    let to_lit = |v: i64| -> Result<Lit, FormulaError> {
        if v.unsigned_abs() as usize > num_vars || v.unsigned_abs() > i32::MAX as u64 {
            return Err(FormulaError::LiteralOutOfRange { lit: v, num_vars });
        }
        Ok(Lit::new(v as i32).expect("non-zero by construction"))
    };

    let mut formula = Formula::new(num_vars);
    for clause in clauses {
        let lits = clause.into_iter().map(to_lit).collect::<Result<Vec<_>, _>>()?;
        formula.clauses.push(lits);
    }
    let cubes = cubes
        .into_iter()
        .map(|(line, lits)| {
            let lits = lits.into_iter().map(to_lit).collect::<Result<Vec<_>, _>>()?;
            Cube::new(lits).map_err(|e| FormulaError::MalformedCubeLine {
                line,
                reason: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Parsed { formula, cubes })
}

fn write_clause(out: &mut String, lits: &[Lit]) {
    for lit in lits {
        write!(out, "{lit} ").unwrap();
    }
    out.push_str("0\n");
}

/// Canonical DIMACS text: header, then one clause per line.
pub fn write_dimacs(formula: &Formula) -> String {
    let mut out = format!("p cnf {} {}\n", formula.num_vars(), formula.num_clauses());
    for clause in formula.clauses() {
        write_clause(&mut out, clause);
    }
    out
}

/// `p inccnf` header, the clauses, then one `a … 0` line per cube.
pub fn write_icnf(formula: &Formula, cubes: &[Cube]) -> String {
    let mut out = String::from("p inccnf\n");
    let max_var = formula
        .clauses()
        .iter()
        .flatten()
        .chain(cubes.iter().flat_map(|c| c.lits().iter()))
        .map(|l| l.var() + 1)
        .max()
        .unwrap_or(0);
    if formula.num_vars() != max_var {
        writeln!(out, "c {NUM_VARS_COMMENT} {}", formula.num_vars()).unwrap();
    }
    for clause in formula.clauses() {
        write_clause(&mut out, clause);
    }
    for cube in cubes {
        out.push_str("a ");
        write_clause(&mut out, cube.lits());
    }
    out
}
