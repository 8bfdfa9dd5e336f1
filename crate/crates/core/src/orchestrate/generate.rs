//! Deterministic benchmark families.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::formula::{Clause, Formula, Lit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Php { pigeons: usize, holes: usize },
    XorMiter { width: usize, seed: u64 },
    Random3Cnf { vars: usize, clauses: usize, seed: u64 },
}

impl Family {
    /// Whether [`Family::generate`] accepts the parameters.
    pub fn is_valid(&self) -> bool {
        match *self {
            Family::Php { pigeons, holes } => pigeons >= 1 && holes >= 1,
            Family::XorMiter { width, .. } => width >= 2,
            Family::Random3Cnf { vars, .. } => vars >= 3,
        }
    }

    /// Panics on parameters rejected by [`Family::is_valid`].
    pub fn generate(self) -> Formula {
        match self {
            Family::Php { pigeons, holes } => php(pigeons, holes),
            Family::XorMiter { width, seed } => xor_miter(width, seed),
            Family::Random3Cnf { vars, clauses, seed } => random_3cnf(vars, clauses, seed),
        }
    }
}

fn lit(var0: usize, positive: bool) -> Lit {
    Lit::from_var(var0, positive)
}

/// Pigeonhole principle: `p` pigeons into `h` holes. Variable `i·h + j + 1`
/// says pigeon `i` sits in hole `j`. Unsatisfiable iff `p > h`.
pub fn php(p: usize, h: usize) -> Formula {
    let var = |i: usize, j: usize| i * h + j;
    let mut f = Formula::new(p * h);
    for i in 0..p {
        f.add_clause((0..h).map(|j| lit(var(i, j), true)).collect())
            .expect("in range");
    }
    for j in 0..h {
        for a in 0..p {
            for b in a + 1..p {
                f.add_clause(vec![lit(var(a, j), false), lit(var(b, j), false)])
                    .expect("in range");
            }
        }
    }
    f
}

/// `out ↔ a ⊕ b` as four clauses.
fn xor_gate(f: &mut Formula, out: usize, a: usize, b: usize) {
    for (sa, sb) in [(true, true), (true, false), (false, true), (false, false)] {
        // forbid the assignment a=sa, b=sb, out≠(sa⊕sb)
        let out_value = sa != sb;
        let clause: Clause = vec![lit(a, !sa), lit(b, !sb), lit(out, out_value)];
        f.add_clause(clause).expect("in range");
    }
}

/// Miter of two XOR circuits over `width` inputs that must disagree.
///
/// Circuit A folds the inputs left to right. Circuit B folds the same
/// inputs in a seeded order that only swaps neighbours inside small
/// windows, so the two chains stay close. Variables are numbered in
/// input order with each stage's gate outputs placed right after their
/// input, which makes the file order a good static branching order.
/// Unsatisfiable by construction.
pub fn xor_miter(width: usize, seed: u64) -> Formula {
    assert!(width >= 2, "xor miter needs at least two inputs");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..width).collect();
    for window in order.chunks_mut(3) {
        window.shuffle(&mut rng);
    }
    // numbering: stage i holds input x_i, then chain A's output, then B's
    let x = |i: usize| 3 * i;
    let a = |i: usize| 3 * i + 1;
    let b = |i: usize| 3 * i + 2;
    let mut f = Formula::new(3 * width);
    // a_0 = x_0, b_0 = x_{order[0]}; expressed as equivalences
    let eq = |f: &mut Formula, u: usize, v: usize| {
        f.add_clause(vec![lit(u, false), lit(v, true)]).expect("in range");
        f.add_clause(vec![lit(u, true), lit(v, false)]).expect("in range");
    };
    eq(&mut f, a(0), x(0));
    eq(&mut f, b(0), x(order[0]));
    for (i, &input) in order.iter().enumerate().skip(1) {
        xor_gate(&mut f, a(i), a(i - 1), x(i));
        xor_gate(&mut f, b(i), b(i - 1), x(input));
    }
    // outputs differ
    f.add_clause(vec![lit(a(width - 1), true), lit(b(width - 1), true)])
        .expect("in range");
    f.add_clause(vec![lit(a(width - 1), false), lit(b(width - 1), false)])
        .expect("in range");
    f
}

/// Uniform random 3-CNF: each clause draws three distinct variables and
/// independent signs.
pub fn random_3cnf(vars: usize, clauses: usize, seed: u64) -> Formula {
    assert!(vars >= 3, "random 3-CNF needs at least three variables");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = Formula::new(vars);
    for _ in 0..clauses {
        let picked = rand::seq::index::sample(&mut rng, vars, 3);
        let clause = picked.iter().map(|v| lit(v, rng.gen())).collect();
        f.add_clause(clause).expect("in range");
    }
    f
}
