//! Unit propagation with undo, used by the cubers.

use crate::formula::{Formula, Lit};

/// Watched-literal unit propagation over a fixed clause set.
pub struct Propagator {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    values: Vec<Option<bool>>,
    trail: Vec<Lit>,
    marks: Vec<usize>,
    qhead: usize,
    /// Input units and whether the input contained an empty clause.
    units: Vec<Lit>,
    refuted: bool,
}

impl Propagator {
    pub fn new(formula: &Formula) -> Self {
        let n = formula.num_vars();
        let mut p = Propagator {
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            values: vec![None; n],
            trail: Vec::new(),
            marks: Vec::new(),
            qhead: 0,
            units: Vec::new(),
            refuted: false,
        };
        for clause in formula.clauses() {
            let mut lits: Vec<Lit> = Vec::with_capacity(clause.len());
            let mut tautology = false;
            for &l in clause {
                if lits.contains(&!l) {
                    tautology = true;
                    break;
                }
                if !lits.contains(&l) {
                    lits.push(l);
                }
            }
            if tautology {
                continue;
            }
            match lits.len() {
                0 => p.refuted = true,
                1 => p.units.push(lits[0]),
                _ => {
                    let idx = p.clauses.len();
                    p.watches[lits[0].code()].push(idx);
                    p.watches[lits[1].code()].push(idx);
                    p.clauses.push(lits);
                }
            }
        }
        p
    }

    pub fn value(&self, var: usize) -> Option<bool> {
        self.values[var]
    }

    pub fn num_assigned(&self) -> usize {
        self.trail.len()
    }

    /// Asserts the input units plus `lits` permanently. `false` on conflict.
    pub fn assert_root(&mut self, lits: &[Lit]) -> bool {
        if self.refuted {
            return false;
        }
        let units = self.units.clone();
        for &l in units.iter().chain(lits) {
            if !self.assign(l) {
                return false;
            }
        }
        self.propagate()
    }

    fn assign(&mut self, lit: Lit) -> bool {
        match self.values[lit.var()] {
            Some(v) => v == lit.is_positive(),
            None => {
                self.values[lit.var()] = Some(lit.is_positive());
                self.trail.push(lit);
                true
            }
        }
    }

    /// Opens an undo level, assigns `lit` and propagates. On conflict the
    /// level stays open; call [`Self::pop`] either way.
    pub fn push(&mut self, lit: Lit) -> bool {
        self.marks.push(self.trail.len());
        self.assign(lit) && self.propagate()
    }

    pub fn pop(&mut self) {
        let mark = self.marks.pop().expect("pop without push");
        for lit in self.trail.drain(mark..) {
            self.values[lit.var()] = None;
        }
        self.qhead = mark;
    }

    /// Number of literals implied by `lit` (including itself), or `None`
    /// if it leads to a conflict.
    pub fn probe(&mut self, lit: Lit) -> Option<usize> {
        let before = self.trail.len();
        let ok = self.push(lit);
        let implied = self.trail.len() - before;
        self.pop();
        ok.then_some(implied)
    }

    fn propagate(&mut self) -> bool {
        while self.qhead < self.trail.len() {
            let false_lit = !self.trail[self.qhead];
            self.qhead += 1;
            let mut watchers = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut ok = true;
            while i < watchers.len() {
                let ci = watchers[i];
                let clause = &mut self.clauses[ci];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                if self.values[first.var()] == Some(first.is_positive()) {
                    i += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.len() {
                    let l = clause[k];
                    if self.values[l.var()] != Some(!l.is_positive()) {
                        clause.swap(1, k);
                        self.watches[clause[1].code()].push(ci);
                        watchers.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                i += 1;
                if self.values[first.var()].is_none() {
                    self.values[first.var()] = Some(first.is_positive());
                    self.trail.push(first);
                } else {
                    ok = false;
                    break;
                }
            }
            self.watches[false_lit.code()] = watchers;
            if !ok {
                self.qhead = self.trail.len();
                return false;
            }
        }
        true
    }

    /// Current assignment with unassigned variables set to false.
    pub fn model(&self) -> Vec<bool> {
        self.values.iter().map(|v| v.unwrap_or(false)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(v: i32) -> Lit {
        Lit::new(v).unwrap()
    }

    #[test]
    fn probe_counts_implications_and_undoes() {
        // 1 -> 2 -> 3
        let f = Formula::from_clauses(3, [vec![-1, 2], vec![-2, 3]]).unwrap();
        let mut p = Propagator::new(&f);
        assert!(p.assert_root(&[]));
        assert_eq!(p.probe(lit(1)), Some(3));
        assert_eq!(p.probe(lit(-3)), Some(3));
        assert_eq!(p.probe(lit(2)), Some(2));
        assert_eq!(p.num_assigned(), 0);
    }

    #[test]
    fn failed_literal() {
        let f = Formula::from_clauses(2, [vec![-1, 2], vec![-1, -2]]).unwrap();
        let mut p = Propagator::new(&f);
        assert!(p.assert_root(&[]));
        assert_eq!(p.probe(lit(1)), None);
        assert_eq!(p.probe(lit(-1)), Some(1));
    }

    #[test]
    fn root_conflicts() {
        let f = Formula::from_clauses(1, [vec![1], vec![-1]]).unwrap();
        assert!(!Propagator::new(&f).assert_root(&[]));
        let f = Formula::from_clauses(1, [vec![1, -1], vec![]]).unwrap();
        assert!(!Propagator::new(&f).assert_root(&[]));
        let f = Formula::from_clauses(2, [vec![1, 2]]).unwrap();
        assert!(!Propagator::new(&f).assert_root(&[lit(-1), lit(-2)]));
    }
}
