//! Seeded random formulas for cross-checking the solver against the oracle.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{Class, Op, QFFormula, Signature};
use crate::structure::PartialStructure;

const VARS: [&str; 3] = ["x", "y", "z"];

/// Shape limits for generated formulas.
#[derive(Clone, Copy, Debug)]
pub struct CorpusShape {
    pub vars: usize,
    pub term_depth: usize,
    pub max_atoms: usize,
}

impl Default for CorpusShape {
    fn default() -> Self {
        CorpusShape {
            vars: 3,
            term_depth: 2,
            max_atoms: 3,
        }
    }
}

fn random_term<R: Rng>(rng: &mut R, class: Class, shape: &CorpusShape, depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.3) {
        let mut leaves: Vec<&str> = VARS[..shape.vars.clamp(1, 3)].to_vec();
        leaves.extend(["0", "1"]);
        if class.has_unit() {
            leaves.push("e");
        }
        // Variables twice as likely as constants.
        let nvars = shape.vars.clamp(1, 3);
        return if rng.gen_bool(0.75) {
            VARS[rng.gen_range(0..nvars)].to_string()
        } else {
            leaves[rng.gen_range(nvars..leaves.len())].to_string()
        };
    }
    let mut ops: Vec<Op> = Op::BINARY.iter().copied().filter(|&op| class.has_op(op)).collect();
    if class.has_op(Op::Diamond) {
        ops.push(Op::Diamond);
    }
    let op = *ops.choose(rng).expect("every class has lattice operations");
    let a = random_term(rng, class, shape, depth - 1);
    if op == Op::Diamond {
        return format!("<>({a})");
    }
    let b = random_term(rng, class, shape, depth - 1);
    format!("({a}) {} ({b})", op.symbol())
}

/// Source text of a random boolean combination of atoms.
pub fn random_formula_text<R: Rng>(rng: &mut R, class: Class, shape: &CorpusShape) -> String {
    let atoms = rng.gen_range(1..=shape.max_atoms.max(1));
    let mut parts = Vec::new();
    for _ in 0..atoms {
        let l = random_term(rng, class, shape, shape.term_depth);
        let r = random_term(rng, class, shape, shape.term_depth);
        let rel = if rng.gen_bool(0.6) { "<=" } else { "=" };
        let atom = format!("{l} {rel} {r}");
        parts.push(if rng.gen_bool(0.5) { format!("!({atom})") } else { format!("({atom})") });
    }
    let mut text = parts.pop().expect("at least one atom");
    while let Some(p) = parts.pop() {
        let conn = if rng.gen_bool(0.5) { "&" } else { "|" };
        text = format!("({p}) {conn} ({text})");
    }
    text
}

/// `count` formulas for a class, reproducible from `seed`.
pub fn corpus(class: Class, count: usize, seed: u64, shape: &CorpusShape) -> Vec<QFFormula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (class as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let sig = Signature::of_class(class);
    (0..count)
        .map(|_| {
            let text = random_formula_text(&mut rng, class, shape);
            QFFormula::parse(&text, sig).expect("generated text parses")
        })
        .collect()
}

/// Formulas of size at most 3: atoms over one variable and the constants,
/// or over the constants with a single operation symbol.
pub fn small_corpus(class: Class, count: usize, seed: u64) -> Vec<QFFormula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed ^ class as u64);
    let sig = Signature::of_class(class);
    let mut consts = vec!["0", "1"];
    if class.has_unit() {
        consts.push("e");
    }
    let mut ops: Vec<Op> = Op::BINARY.iter().copied().filter(|&op| class.has_op(op)).collect();
    if class.has_op(Op::Diamond) {
        ops.push(Op::Diamond);
    }
    let mut out = Vec::new();
    while out.len() < count {
        let with_op = rng.gen_bool(0.5);
        let leaf = |rng: &mut ChaCha8Rng| -> String {
            if !with_op && rng.gen_bool(0.6) {
                "x".to_string()
            } else {
                consts.choose(rng).expect("nonempty").to_string()
            }
        };
        let atoms = rng.gen_range(1..=3);
        let op_atom = rng.gen_range(0..atoms);
        let mut parts = Vec::new();
        for i in 0..atoms {
            let mut l = leaf(&mut rng);
            let r = leaf(&mut rng);
            if with_op && i == op_atom {
                let op = *ops.choose(&mut rng).expect("nonempty");
                l = if op == Op::Diamond {
                    format!("<>{l}")
                } else {
                    format!("{l} {} {}", op.symbol(), leaf(&mut rng))
                };
            }
            let rel = if rng.gen_bool(0.6) { "<=" } else { "=" };
            let atom = format!("({l}) {rel} ({r})");
            parts.push(if rng.gen_bool(0.5) { format!("!({atom})") } else { atom });
        }
        let conn = if rng.gen_bool(0.5) { " & " } else { " | " };
        let text = parts.iter().map(|p| format!("({p})")).collect::<Vec<_>>().join(conn);
        let phi = QFFormula::parse(&text, sig).expect("generated text parses");
        if phi.size() <= 3 {
            out.push(phi);
        }
    }
    out
}

/// A random small structure, reproducible from `seed`: a chain of two to
/// four elements, the four-element square or a five-element distributive
/// lattice, with a few random operation entries. Conflicting entries are
/// skipped, so the result need not be certifiable.
pub fn random_structure(seed: u64, class: Class) -> PartialStructure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = rng.gen_range(0..3);
    // (size, leq)
    let (n, leq): (usize, Vec<(usize, usize)>) = match shape {
        0 => {
            let n = rng.gen_range(2..=4);
            (n, (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect())
        }
        1 => (4, vec![(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)]),
        _ => (5, vec![(0, 1), (0, 2), (0, 3), (0, 4), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4)]),
    };
    let sig = Signature::of_class(class);
    let unit = sig.has_unit().then(|| rng.gen_range(0..n));
    let mut s = PartialStructure::new(sig, n, 0, n - 1, unit).unwrap();
    for (a, b) in leq {
        s.set_leq(a, b).unwrap();
    }
    let ops: Vec<Op> = [Op::Prod, Op::Under, Op::Over]
        .into_iter()
        .filter(|&op| sig.has_op(op))
        .collect();
    let entries = rng.gen_range(0..5);
    for _ in 0..entries {
        if ops.is_empty() {
            let _ = s.define_diamond(rng.gen_range(0..n), rng.gen_range(0..n));
            continue;
        }
        let op = ops[rng.gen_range(0..ops.len())];
        let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
        let _ = s.define(op, a, b, c);
    }
    s
}
