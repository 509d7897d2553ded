//! Finite lattices and finite total algebras.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::bits::{self, Mask};
use crate::formula::{Class, Constant, Interpretation, Op, Property, Props, Signature};
use crate::structure::{PartialStructure, StructureError};

/// Materialized algebras are capped at this many elements.
pub const MAX_ALGEBRA: usize = 4096;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("algebra would have more than {MAX_ALGEBRA} elements")]
    TooLarge,
    #[error("the order is not a bounded lattice")]
    NotLattice,
    #[error("operation `{0}` is missing for class {1}")]
    MissingOp(&'static str, Class),
    #[error("operation `{0}` does not belong to class {1}")]
    ExtraOp(&'static str, Class),
    #[error("table for `{0}` has the wrong shape or out-of-range values")]
    BadTable(&'static str),
    #[error("the unit is given exactly when the class is brdge")]
    UnitMismatch,
}

/// A finite lattice with full tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    n: usize,
    leq: Vec<bool>,
    meet: Vec<u16>,
    join: Vec<u16>,
    zero: usize,
    one: usize,
}

impl Lattice {
    /// The lattice of a family of sets closed under union and intersection
    /// that contains a least and a greatest set. Elements are indexed in the
    /// order given.
    pub fn of_sets(sets: &[Mask]) -> Result<Lattice, AlgebraError> {
        let n = sets.len();
        if n > MAX_ALGEBRA {
            return Err(AlgebraError::TooLarge);
        }
        let index: HashMap<Mask, u16> = sets.iter().enumerate().map(|(i, &s)| (s, i as u16)).collect();
        let mut leq = vec![false; n * n];
        let mut meet = vec![0u16; n * n];
        let mut join = vec![0u16; n * n];
        for (a, &x) in sets.iter().enumerate() {
            for (b, &y) in sets.iter().enumerate() {
                leq[a * n + b] = x & !y == 0;
                meet[a * n + b] = *index.get(&(x & y)).ok_or(AlgebraError::NotLattice)?;
                join[a * n + b] = *index.get(&(x | y)).ok_or(AlgebraError::NotLattice)?;
            }
        }
        let lo = sets.iter().fold(!0, |m, &s| m & s);
        let hi = sets.iter().fold(0, |m, &s| m | s);
        Ok(Lattice {
            n,
            leq,
            meet,
            join,
            zero: *index.get(&lo).ok_or(AlgebraError::NotLattice)? as usize,
            one: *index.get(&hi).ok_or(AlgebraError::NotLattice)? as usize,
        })
    }

    /// The lattice of a partial order given as a matrix, if it is one.
    pub fn of_order(n: usize, leq: Vec<bool>) -> Result<Lattice, AlgebraError> {
        if n == 0 || leq.len() != n * n {
            return Err(AlgebraError::NotLattice);
        }
        if n > MAX_ALGEBRA {
            return Err(AlgebraError::TooLarge);
        }
        let le = |a: usize, b: usize| leq[a * n + b];
        let mut meet = vec![0u16; n * n];
        let mut join = vec![0u16; n * n];
        for a in 0..n {
            for b in 0..n {
                let glb = (0..n).find(|&c| le(c, a) && le(c, b) && (0..n).all(|d| !(le(d, a) && le(d, b)) || le(d, c)));
                let lub = (0..n).find(|&c| le(a, c) && le(b, c) && (0..n).all(|d| !(le(a, d) && le(b, d)) || le(c, d)));
                match (glb, lub) {
                    (Some(g), Some(l)) => {
                        meet[a * n + b] = g as u16;
                        join[a * n + b] = l as u16;
                    }
                    _ => return Err(AlgebraError::NotLattice),
                }
            }
        }
        let zero = (0..n).find(|&z| (0..n).all(|a| le(z, a))).ok_or(AlgebraError::NotLattice)?;
        let one = (0..n).find(|&o| (0..n).all(|a| le(a, o))).ok_or(AlgebraError::NotLattice)?;
        Ok(Lattice {
            n,
            leq,
            meet,
            join,
            zero,
            one,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a * self.n + b]
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.meet[a * self.n + b] as usize
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.join[a * self.n + b] as usize
    }

    pub fn zero(&self) -> usize {
        self.zero
    }

    pub fn one(&self) -> usize {
        self.one
    }

    pub fn is_distributive(&self) -> bool {
        let n = self.n;
        (0..n).all(|x| {
            (0..n).all(|y| (0..n).all(|z| self.meet(x, self.join(y, z)) == self.join(self.meet(x, y), self.meet(x, z))))
        })
    }

    /// Nonzero elements that are not the join of two strictly smaller ones,
    /// sorted so that smaller elements come first.
    pub fn join_irreducibles(&self) -> Vec<usize> {
        let n = self.n;
        let mut out: Vec<usize> = (0..n)
            .filter(|&j| j != self.zero)
            .filter(|&j| {
                let below: Vec<usize> = (0..n).filter(|&a| a != j && self.leq(a, j)).collect();
                !below.iter().any(|&a| below.iter().any(|&b| self.join(a, b) == j))
            })
            .collect();
        out.sort_by_key(|&j| ((0..n).filter(|&a| self.leq(a, j)).count(), j));
        out
    }

    /// All order automorphisms. Only for small lattices.
    pub fn automorphisms(&self) -> Vec<Vec<u16>> {
        let n = self.n;
        let mut out = Vec::new();
        let mut perm: Vec<u16> = Vec::with_capacity(n);
        let mut used = vec![false; n];
        self.extend_automorphism(&mut perm, &mut used, &mut out);
        out
    }

    fn extend_automorphism(&self, perm: &mut Vec<u16>, used: &mut [bool], out: &mut Vec<Vec<u16>>) {
        let n = self.n;
        let k = perm.len();
        if k == n {
            out.push(perm.clone());
            return;
        }
        for cand in 0..n {
            if used[cand] {
                continue;
            }
            let ok = (0..k).all(|i| {
                let p = perm[i] as usize;
                self.leq(i, k) == self.leq(p, cand) && self.leq(k, i) == self.leq(cand, p)
            });
            if ok {
                used[cand] = true;
                perm.push(cand as u16);
                self.extend_automorphism(perm, used, out);
                perm.pop();
                used[cand] = false;
            }
        }
    }

    /// The subset of elements below `a`, as a bitset (for lattices of at
    /// most 64 elements).
    pub fn down_mask(&self, a: usize) -> Mask {
        bits::from_iter((0..self.n).filter(|&b| self.leq(b, a)))
    }
}

/// The non-lattice operations of an algebra.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Operations {
    pub prod: Option<Vec<u16>>,
    pub under: Option<Vec<u16>>,
    pub over: Option<Vec<u16>>,
    pub diamond: Option<Vec<u16>>,
    pub unit: Option<usize>,
}

/// A finite algebra with total operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteAlgebra {
    sig: Signature,
    lattice: Arc<Lattice>,
    ops: Operations,
}

impl FiniteAlgebra {
    /// Checks that exactly the operations of the class are present and that
    /// the tables have the right shape. Axioms are not checked here.
    pub fn new(sig: Signature, lattice: Arc<Lattice>, ops: Operations) -> Result<FiniteAlgebra, AlgebraError> {
        let n = lattice.size();
        let class = sig.class();
        let tables = [
            (Op::Prod, &ops.prod, n * n),
            (Op::Under, &ops.under, n * n),
            (Op::Over, &ops.over, n * n),
            (Op::Diamond, &ops.diamond, n),
        ];
        for (op, table, len) in tables {
            match (class.has_op(op), table) {
                (true, None) => return Err(AlgebraError::MissingOp(op.symbol(), class)),
                (false, Some(_)) => return Err(AlgebraError::ExtraOp(op.symbol(), class)),
                (true, Some(t)) if t.len() != len || t.iter().any(|&v| v as usize >= n) => {
                    return Err(AlgebraError::BadTable(op.symbol()))
                }
                _ => {}
            }
        }
        if ops.unit.is_some() != class.has_unit() || ops.unit.is_some_and(|e| e >= n) {
            return Err(AlgebraError::UnitMismatch);
        }
        Ok(FiniteAlgebra { sig, lattice, ops })
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn class(&self) -> Class {
        self.sig.class()
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn operations(&self) -> &Operations {
        &self.ops
    }

    pub fn size(&self) -> usize {
        self.lattice.size()
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.lattice.leq(a, b)
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.lattice.meet(a, b)
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.lattice.join(a, b)
    }

    pub fn zero(&self) -> usize {
        self.lattice.zero()
    }

    pub fn one(&self) -> usize {
        self.lattice.one()
    }

    pub fn unit(&self) -> Option<usize> {
        self.ops.unit
    }

    fn cell(&self, t: &Option<Vec<u16>>, a: usize, b: usize) -> Option<usize> {
        t.as_ref().map(|t| t[a * self.size() + b] as usize)
    }

    pub fn prod(&self, a: usize, b: usize) -> Option<usize> {
        self.cell(&self.ops.prod, a, b)
    }

    pub fn under(&self, a: usize, b: usize) -> Option<usize> {
        self.cell(&self.ops.under, a, b)
    }

    pub fn over(&self, a: usize, b: usize) -> Option<usize> {
        self.cell(&self.ops.over, a, b)
    }

    pub fn diamond(&self, a: usize) -> Option<usize> {
        self.ops.diamond.as_ref().map(|t| t[a] as usize)
    }

    pub fn apply(&self, op: Op, a: usize, b: usize) -> Option<usize> {
        match op {
            Op::Meet => Some(self.meet(a, b)),
            Op::Join => Some(self.join(a, b)),
            Op::Prod => self.prod(a, b),
            Op::Under => self.under(a, b),
            Op::Over => self.over(a, b),
            Op::Diamond => self.diamond(a),
        }
    }

    /// An element `e` with `e * x = x = x * e` for all `x`, if any.
    pub fn find_unit(&self) -> Option<usize> {
        let n = self.size();
        self.ops.prod.as_ref()?;
        (0..n).find(|&e| (0..n).all(|x| self.prod(e, x) == Some(x) && self.prod(x, e) == Some(x)))
    }

    /// The same algebra with a different signature, keeping the tables.
    pub fn with_signature(&self, sig: Signature) -> Result<FiniteAlgebra, AlgebraError> {
        let mut ops = self.ops.clone();
        if sig.has_unit() && ops.unit.is_none() {
            ops.unit = self.find_unit();
        }
        if !sig.has_unit() {
            ops.unit = None;
        }
        for (op, t) in [(Op::Under, &mut ops.under), (Op::Over, &mut ops.over), (Op::Prod, &mut ops.prod)] {
            if !sig.has_op(op) {
                *t = None;
            }
        }
        FiniteAlgebra::new(sig, self.lattice.clone(), ops)
    }

    /// Exhaustively checks the axioms of `class` and the properties `q`,
    /// reporting the first failure.
    pub fn check_axioms(&self, class: Class, q: Props) -> Result<(), AxiomViolation> {
        let n = self.size();
        let l = &self.lattice;
        let fail = |law: &'static str, elements: &[usize]| {
            Err(AxiomViolation {
                law,
                elements: elements.to_vec(),
            })
        };
        for op in [Op::Prod, Op::Under, Op::Over, Op::Diamond] {
            if class.has_op(op) && self.apply(op, 0, 0).is_none() {
                return fail(op.symbol(), &[]);
            }
        }
        // Bounded distributive lattice.
        for a in 0..n {
            if !l.leq(a, a) {
                return fail("reflexivity", &[a]);
            }
            if !l.leq(l.zero(), a) || !l.leq(a, l.one()) {
                return fail("bounds", &[a]);
            }
            for b in 0..n {
                if a != b && l.leq(a, b) && l.leq(b, a) {
                    return fail("antisymmetry", &[a, b]);
                }
                let (m, j) = (l.meet(a, b), l.join(a, b));
                if !(l.leq(m, a) && l.leq(m, b) && l.leq(a, j) && l.leq(b, j)) {
                    return fail("meet and join bounds", &[a, b]);
                }
                for c in 0..n {
                    if l.leq(a, b) && l.leq(b, c) && !l.leq(a, c) {
                        return fail("transitivity", &[a, b, c]);
                    }
                    if l.leq(c, a) && l.leq(c, b) && !l.leq(c, m) {
                        return fail("meet is greatest", &[a, b, c]);
                    }
                    if l.leq(a, c) && l.leq(b, c) && !l.leq(j, c) {
                        return fail("join is least", &[a, b, c]);
                    }
                    if l.meet(a, l.join(b, c)) != l.join(m, l.meet(a, c)) {
                        return fail("distributivity", &[a, b, c]);
                    }
                }
            }
        }
        if class == Class::Bdo {
            let d = |a| self.diamond(a).expect("checked");
            if d(l.zero()) != l.zero() {
                return fail("<>0 = 0", &[]);
            }
            for a in 0..n {
                for b in 0..n {
                    if d(l.join(a, b)) != l.join(d(a), d(b)) {
                        return fail("<> preserves joins", &[a, b]);
                    }
                }
            }
            return if q.is_empty() { Ok(()) } else { fail("properties need a product", &[]) };
        }
        let p = |a, b| self.prod(a, b).expect("checked");
        for a in 0..n {
            if p(a, l.zero()) != l.zero() || p(l.zero(), a) != l.zero() {
                return fail("0-annihilation", &[a]);
            }
            for b in 0..n {
                for c in 0..n {
                    if p(a, l.join(b, c)) != l.join(p(a, b), p(a, c)) {
                        return fail("* preserves joins on the right", &[a, b, c]);
                    }
                    if p(l.join(a, b), c) != l.join(p(a, c), p(b, c)) {
                        return fail("* preserves joins on the left", &[a, b, c]);
                    }
                }
            }
        }
        if class.is_residuated() {
            let u = |a, b| self.under(a, b).expect("checked");
            let o = |a, b| self.over(a, b).expect("checked");
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        let lhs = l.leq(p(x, y), z);
                        if lhs != l.leq(y, u(x, z)) || lhs != l.leq(x, o(z, y)) {
                            return fail("residuation", &[x, y, z]);
                        }
                    }
                }
            }
        }
        if class.has_unit() || q.contains(Property::P4) {
            let e = match (class.has_unit(), self.unit()) {
                (true, Some(e)) => Some(e),
                (true, None) => None,
                (false, _) => self.find_unit(),
            };
            let Some(e) = e else {
                return fail("unit exists", &[]);
            };
            for x in 0..n {
                if p(e, x) != x || p(x, e) != x {
                    return fail("unit", &[e, x]);
                }
            }
        }
        for x in 0..n {
            if q.contains(Property::P3) && !l.leq(x, p(x, x)) {
                return fail("square-increasing", &[x]);
            }
            for y in 0..n {
                if q.contains(Property::P1) && p(x, y) != p(y, x) {
                    return fail("commutative", &[x, y]);
                }
                if q.contains(Property::P2) && !(l.leq(p(x, y), x) && l.leq(p(x, y), y)) {
                    return fail("decreasing", &[x, y]);
                }
            }
        }
        Ok(())
    }

    /// Which of P1-P4 hold, P4 meaning that a unit exists.
    pub fn satisfied_properties(&self) -> Props {
        let mut out = Props::EMPTY;
        if self.ops.prod.is_none() {
            return out;
        }
        for prop in [Property::P1, Property::P2, Property::P3] {
            if self.props_hold(Props::of(&[prop])) {
                out = out.with(prop);
            }
        }
        if self.find_unit().is_some() {
            out = out.with(Property::P4);
        }
        out
    }

    fn props_hold(&self, q: Props) -> bool {
        let n = self.size();
        let p = |a, b| self.prod(a, b).expect("has a product");
        (0..n).all(|x| {
            (!q.contains(Property::P3) || self.leq(x, p(x, x)))
                && (0..n).all(|y| {
                    (!q.contains(Property::P1) || p(x, y) == p(y, x))
                        && (!q.contains(Property::P2) || (self.leq(p(x, y), x) && self.leq(p(x, y), y)))
                })
        })
    }

    /// The algebra as a partial structure with every entry defined.
    pub fn to_partial(&self) -> Result<PartialStructure, StructureError> {
        let n = self.size();
        let mut s = PartialStructure::new(self.sig, n, self.zero(), self.one(), self.unit())?;
        for a in 0..n {
            for b in 0..n {
                if self.leq(a, b) {
                    s.set_leq(a, b)?;
                }
                for op in Op::BINARY {
                    if self.sig.has_op(op) {
                        s.define(op, a, b, self.apply(op, a, b).expect("total"))?;
                    }
                }
            }
            if let Some(c) = self.diamond(a) {
                s.define_diamond(a, c)?;
            }
        }
        Ok(s)
    }
}

impl Interpretation for FiniteAlgebra {
    type Elem = usize;

    fn constant(&self, c: Constant) -> Option<usize> {
        match c {
            Constant::Zero => Some(self.zero()),
            Constant::One => Some(self.one()),
            Constant::Unit => self.unit(),
        }
    }

    fn unary(&self, _op: Op, a: &usize) -> Option<usize> {
        self.diamond(*a)
    }

    fn binary(&self, op: Op, a: &usize, b: &usize) -> Option<usize> {
        self.apply(op, *a, *b)
    }

    fn leq(&self, a: &usize, b: &usize) -> bool {
        FiniteAlgebra::leq(self, *a, *b)
    }
}

/// A failed axiom together with the elements that falsify it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomViolation {
    pub law: &'static str,
    pub elements: Vec<usize>,
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fails at {:?}", self.law, self.elements)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> Arc<Lattice> {
        let sets: Vec<Mask> = (0..n).map(|k| bits::full(k)).collect();
        Arc::new(Lattice::of_sets(&sets).unwrap())
    }

    #[test]
    fn chain_lattice() {
        let l = chain(3);
        assert_eq!((l.zero(), l.one()), (0, 2));
        assert!(l.is_distributive());
        assert_eq!(l.join_irreducibles(), vec![1, 2]);
        assert_eq!(l.automorphisms().len(), 1);
    }

    #[test]
    fn square_has_two_automorphisms() {
        let l = Lattice::of_sets(&[0b00, 0b01, 0b10, 0b11]).unwrap();
        assert_eq!(l.join_irreducibles(), vec![1, 2]);
        assert_eq!(l.automorphisms().len(), 2);
    }

    #[test]
    fn m3_is_not_distributive() {
        let mut leq = vec![false; 25];
        for a in 0..5 {
            leq[a * 5 + a] = true;
            leq[a] = true;
            leq[a * 5 + 4] = true;
        }
        let l = Lattice::of_order(5, leq).unwrap();
        assert!(!l.is_distributive());
    }

    #[test]
    fn boolean_two_element_algebra() {
        let l = chain(2);
        let ops = Operations {
            prod: Some(vec![0, 0, 0, 1]),
            under: Some(vec![1, 1, 0, 1]),
            over: Some(vec![1, 0, 1, 1]),
            diamond: None,
            unit: Some(1),
        };
        let a = FiniteAlgebra::new(Signature::of_class(Class::Brdge), l, ops).unwrap();
        let all = Props::of(&Property::ALL);
        assert_eq!(a.check_axioms(Class::Brdge, all), Ok(()));
        assert_eq!(a.satisfied_properties(), all);
    }

    #[test]
    fn wrong_residual_is_caught() {
        let l = chain(2);
        let ops = Operations {
            prod: Some(vec![0, 0, 0, 1]),
            under: Some(vec![1, 1, 0, 0]),
            over: Some(vec![1, 0, 1, 1]),
            ..Operations::default()
        };
        let a = FiniteAlgebra::new(Signature::of_class(Class::Brdg), l, ops).unwrap();
        let err = a.check_axioms(Class::Brdg, Props::EMPTY).unwrap_err();
        assert_eq!(err.law, "residuation");
    }

    #[test]
    fn shape_errors() {
        let l = chain(2);
        let sig = Signature::of_class(Class::Brdg);
        let missing = Operations {
            prod: Some(vec![0, 0, 0, 1]),
            ..Operations::default()
        };
        assert!(matches!(
            FiniteAlgebra::new(sig, l.clone(), missing),
            Err(AlgebraError::MissingOp(..))
        ));
        let extra = Operations {
            diamond: Some(vec![0, 1]),
            ..Operations::default()
        };
        assert!(matches!(
            FiniteAlgebra::new(Signature::of_class(Class::Bdbo), l, extra),
            Err(AlgebraError::MissingOp(..) | AlgebraError::ExtraOp(..))
        ));
    }
}
