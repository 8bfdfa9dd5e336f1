//! A small deterministic CDCL solver.
//!
//! Two watched literals, first-UIP learning with non-chronological
//! backjumping, VSIDS-style activities and phase saving. Learned clauses
//! are never deleted, so the conflict count stays aligned with the work
//! actually done. The only cost unit is the conflict: refutations found
//! while loading or at decision level 0 cost nothing extra.

use super::params::{MiniSolverParams, RestartMode, LUBY_UNIT, MODE_EPOCH};
use super::{Budget, SolveOutcome, SolveStatus};
use crate::formula::{Formula, Lit};

const ACTIVITY_DECAY: f64 = 0.95;
const RESCALE_LIMIT: f64 = 1e100;

/// Solves `formula` under `params`, giving up once `budget` conflicts have
/// been analysed and another one arrives.
pub fn mini_cdcl_solve(formula: &Formula, params: &MiniSolverParams, budget: Budget) -> SolveOutcome {
    let mut solver = Cdcl::new(formula.num_vars(), *params);
    for clause in formula.clauses() {
        if !solver.add_input_clause(clause) {
            return SolveOutcome::new(SolveStatus::Unsat, 0);
        }
    }
    solver.init_order(formula);
    solver.search(budget)
}

/// `luby(i)` for `i ≥ 1`: 1 1 2 1 1 2 4 1 1 2 …
pub(crate) fn luby(mut i: u64) -> u64 {
    loop {
        let mut k = 1u32;
        while (1u64 << k) - 1 < i {
            k += 1;
        }
        if (1u64 << k) - 1 == i {
            return 1u64 << (k - 1);
        }
        i -= (1u64 << (k - 1)) - 1;
    }
}

/// Binary max-heap over variables keyed by activity, lowest index first on
/// ties.
struct VarOrder {
    heap: Vec<usize>,
    pos: Vec<Option<usize>>,
}

impl VarOrder {
    fn new(n: usize) -> Self {
        VarOrder {
            heap: Vec::with_capacity(n),
            pos: vec![None; n],
        }
    }

    fn before(act: &[f64], a: usize, b: usize) -> bool {
        act[a] > act[b] || (act[a] == act[b] && a < b)
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v].is_some()
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v] = Some(self.heap.len());
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    /// Restores order after `v`'s activity increased.
    fn increased(&mut self, v: usize, act: &[f64]) {
        if let Some(i) = self.pos[v] {
            self.sift_up(i, act);
        }
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if !Self::before(act, v, p) {
                break;
            }
            self.heap[i] = p;
            self.pos[p] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v] = Some(i);
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let left = 2 * i + 1;
            if left >= self.heap.len() {
                break;
            }
            let right = left + 1;
            let child = if right < self.heap.len() && Self::before(act, self.heap[right], self.heap[left]) {
                right
            } else {
                left
            };
            let c = self.heap[child];
            if !Self::before(act, c, v) {
                break;
            }
            self.heap[i] = c;
            self.pos[c] = Some(i);
            i = child;
        }
        self.heap[i] = v;
        self.pos[v] = Some(i);
    }
}

struct Cdcl {
    params: MiniSolverParams,
    clauses: Vec<Vec<Lit>>,
    /// Clause indices watching each literal code.
    watches: Vec<Vec<usize>>,
    values: Vec<Option<bool>>,
    level: Vec<usize>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    order: VarOrder,
    saved_phase: Vec<bool>,
    seen: Vec<bool>,
    conflicts: u64,
    restarts: u64,
    conflicts_since_restart: u64,
}

impl Cdcl {
    fn new(n: usize, params: MiniSolverParams) -> Self {
        Cdcl {
            params,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            values: vec![None; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            var_inc: 1.0,
            order: VarOrder::new(n),
            saved_phase: vec![params.phase; n],
            seen: vec![false; n],
            conflicts: 0,
            restarts: 0,
            conflicts_since_restart: 0,
        }
    }

    fn lit_value(&self, lit: Lit) -> Option<bool> {
        self.values[lit.var()].map(|v| v == lit.is_positive())
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, lit: Lit, reason: Option<usize>) {
        let v = lit.var();
        self.values[v] = Some(lit.is_positive());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(lit);
    }

    /// Adds an input clause at level 0; `false` if the formula is refuted.
    fn add_input_clause(&mut self, clause: &[Lit]) -> bool {
        let mut lits: Vec<Lit> = Vec::with_capacity(clause.len());
        for &l in clause {
            if lits.contains(&!l) {
                return true; // tautology
            }
            if !lits.contains(&l) {
                lits.push(l);
            }
        }
        match lits.len() {
            0 => false,
            1 => match self.lit_value(lits[0]) {
                Some(true) => true,
                Some(false) => false,
                None => {
                    self.enqueue(lits[0], None);
                    true
                }
            },
            _ => {
                let idx = self.clauses.len();
                self.watches[lits[0].code()].push(idx);
                self.watches[lits[1].code()].push(idx);
                self.clauses.push(lits);
                true
            }
        }
    }

    /// Initial scores: zero everywhere (file order) unless tumbling, in
    /// which case variables with more occurrences come first and ties follow
    /// a bit-reversed ("tumbled") index order instead of file order.
    fn init_order(&mut self, formula: &Formula) {
        let n = self.values.len();
        if self.params.tumble && n > 0 {
            let mut occ = vec![0u64; n];
            for lit in formula.clauses().iter().flatten() {
                occ[lit.var()] += 1;
            }
            let max = occ.iter().copied().max().unwrap_or(0) as f64 + 1.0;
            let bits = usize::BITS - (n - 1).leading_zeros();
            let mut tumbled: Vec<usize> = (0..n).collect();
            tumbled.sort_by_key(|&v| if bits == 0 { 0 } else { v.reverse_bits() >> (usize::BITS - bits) });
            for (rank, &v) in tumbled.iter().enumerate() {
                let tie = (n - rank) as f64 / (n + 1) as f64;
                self.activity[v] = (occ[v] as f64 + tie) / max;
            }
        }
        for v in 0..self.values.len() {
            self.order.insert(v, &self.activity);
        }
    }

    /// Returns the index of a falsified clause, if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let lit = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !lit;
            let mut watchers = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut conflict = None;
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
                match self.values[first.var()] {
                    None => self.enqueue(first, Some(ci)),
                    Some(_) => {
                        conflict = Some(ci);
                        break;
                    }
                }
            }
            self.watches[false_lit.code()] = watchers;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: usize) {
        if !self.params.bump {
            return;
        }
        self.activity[v] += self.var_inc;
        if self.activity[v] > RESCALE_LIMIT {
            for a in &mut self.activity {
                *a *= 1.0 / RESCALE_LIMIT;
            }
            self.var_inc *= 1.0 / RESCALE_LIMIT;
        }
        self.order.increased(v, &self.activity);
    }

    /// First-UIP learning. Returns the learned clause (asserting literal
    /// first, highest remaining level second) and the backjump level.
    fn analyze(&mut self, conflict: usize) -> (Vec<Lit>, usize) {
        let current = self.decision_level();
        let mut learnt: Vec<Lit> = vec![Lit::from_var(0, true)];
        let mut pending = 0usize;
        let mut clause_idx = conflict;
        let mut skip_first = false;
        let mut index = self.trail.len();
        let uip;
        loop {
            let start = usize::from(skip_first);
            for k in start..self.clauses[clause_idx].len() {
                let q = self.clauses[clause_idx][k];
                let v = q.var();
                if self.seen[v] || self.level[v] == 0 {
                    continue;
                }
                self.seen[v] = true;
                self.bump(v);
                if self.level[v] >= current {
                    pending += 1;
                } else {
                    learnt.push(q);
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var()] {
                    break;
                }
            }
            let p = self.trail[index];
            self.seen[p.var()] = false;
            pending -= 1;
            if pending == 0 {
                uip = p;
                break;
            }
            clause_idx = self.reason[p.var()].expect("implied literal has a reason");
            skip_first = true;
        }
        learnt[0] = !uip;
        for l in &learnt[1..] {
            self.seen[l.var()] = false;
        }
        let mut backjump = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var()] > self.level[learnt[max_i].var()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            backjump = self.level[learnt[1].var()];
        }
        (learnt, backjump)
    }

    fn backtrack(&mut self, target: usize) {
        if self.decision_level() <= target {
            return;
        }
        let lim = self.trail_lim[target];
        for i in (lim..self.trail.len()).rev() {
            let lit = self.trail[i];
            let v = lit.var();
            self.saved_phase[v] = lit.is_positive();
            self.values[v] = None;
            self.reason[v] = None;
            self.order.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(target);
        self.qhead = lim;
    }

    fn restart_due(&self) -> bool {
        let luby_due = || self.conflicts_since_restart >= LUBY_UNIT * luby(self.restarts + 1);
        match self.params.restarts {
            RestartMode::Never => false,
            RestartMode::Luby => luby_due(),
            RestartMode::Alternating => (self.conflicts / MODE_EPOCH).is_multiple_of(2) && luby_due(),
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.order.pop(&self.activity) {
            if self.values[v].is_none() {
                let positive = if self.params.forcephase {
                    self.params.phase
                } else {
                    self.saved_phase[v]
                };
                return Some(Lit::from_var(v, positive));
            }
        }
        None
    }

    fn search(&mut self, budget: Budget) -> SolveOutcome {
        loop {
            if let Some(conflict) = self.propagate() {
                if self.decision_level() == 0 {
                    return SolveOutcome::new(SolveStatus::Unsat, self.conflicts);
                }
                if let Budget::Conflicts(limit) = budget {
                    if self.conflicts >= limit {
                        return SolveOutcome::new(SolveStatus::Unknown, limit);
                    }
                }
                self.conflicts += 1;
                self.conflicts_since_restart += 1;
                let (learnt, backjump) = self.analyze(conflict);
                self.backtrack(backjump);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let idx = self.clauses.len();
                    self.watches[learnt[0].code()].push(idx);
                    self.watches[learnt[1].code()].push(idx);
                    let asserting = learnt[0];
                    self.clauses.push(learnt);
                    self.enqueue(asserting, Some(idx));
                }
                if self.params.bump {
                    self.var_inc /= ACTIVITY_DECAY;
                }
                if self.restart_due() {
                    self.restarts += 1;
                    self.conflicts_since_restart = 0;
                    self.backtrack(0);
                }
            } else {
                match self.pick_branch() {
                    None => {
                        let model = self.values.iter().map(|v| v.unwrap_or(false)).collect();
                        return SolveOutcome::new(SolveStatus::Sat(model), self.conflicts);
                    }
                    Some(lit) => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(lit, None);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luby_prefix() {
        let got: Vec<u64> = (1..=15).map(luby).collect();
        assert_eq!(got, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn empty_formula_is_sat_for_free() {
        let out = mini_cdcl_solve(&Formula::new(0), &MiniSolverParams::default(), Budget::Unlimited);
        assert_eq!(out, SolveOutcome::new(SolveStatus::Sat(vec![]), 0));
    }

    #[test]
    fn load_time_contradiction_costs_nothing() {
        let f = Formula::from_clauses(1, [vec![1], vec![-1]]).unwrap();
        let out = mini_cdcl_solve(&f, &MiniSolverParams::default(), Budget::Conflicts(1000));
        assert_eq!(out, SolveOutcome::new(SolveStatus::Unsat, 0));
    }

    #[test]
    fn level_zero_propagation_conflict_costs_nothing() {
        let f = Formula::from_clauses(2, [vec![1], vec![-1, 2], vec![-2, -1]]).unwrap();
        let out = mini_cdcl_solve(&f, &MiniSolverParams::default(), Budget::Conflicts(1));
        assert_eq!(out, SolveOutcome::new(SolveStatus::Unsat, 0));
    }

    #[test]
    fn tautologies_and_duplicates_are_harmless() {
        let f = Formula::from_clauses(2, [vec![1, -1, 2], vec![2, 2], vec![-2, 1]]).unwrap();
        let out = mini_cdcl_solve(&f, &MiniSolverParams::default(), Budget::Unlimited);
        match out.status {
            SolveStatus::Sat(m) => assert!(f.is_satisfied_by(&m)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn var_order_breaks_ties_by_index() {
        let act = vec![0.0, 0.0, 1.0, 0.0];
        let mut order = VarOrder::new(4);
        for v in [3, 1, 0, 2] {
            order.insert(v, &act);
        }
        let popped: Vec<_> = std::iter::from_fn(|| order.pop(&act)).collect();
        assert_eq!(popped, vec![2, 0, 1, 3]);
    }
}
