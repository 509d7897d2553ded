//! Finite partial structures, their prime filters, and certification.

mod filters;

use std::fmt;

use thiserror::Error;

use crate::bits::{self, has, Mask};
use crate::formula::{Class, Constant, Evaluation, Interpretation, Op, Property, Props, QFFormula, Signature};

pub(crate) use filters::Skeleton;
pub use filters::{Condition, Witness};

/// Carriers are stored as `u64` bitsets.
pub const MAX_CARRIER: usize = 64;

/// Certification gives up when a structure has more prime filters than this.
pub const MAX_PRIME_FILTERS: usize = 1 << 16;

/// A binary operation table in which entries may be undefined.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpTable {
    size: usize,
    cells: Vec<Option<u8>>,
}

impl OpTable {
    fn new(size: usize) -> OpTable {
        OpTable {
            size,
            cells: vec![None; size * size],
        }
    }

    pub fn get(&self, a: usize, b: usize) -> Option<usize> {
        self.cells[a * self.size + b].map(usize::from)
    }

    /// Defined entries `(a, b, a op b)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(i, c)| c.map(|c| (i / self.size, i % self.size, c as usize)))
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(Option::is_none)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum StructureError {
    #[error("carrier size {0} is outside 1..=64")]
    BadSize(usize),
    #[error("element {0} is outside the carrier")]
    OutOfRange(usize),
    #[error("operation `{0}` is not in the signature of {1}")]
    OpNotInSignature(&'static str, Class),
    #[error("the unit is given exactly when the class is brdge")]
    UnitMismatch,
    #[error("conflicting entries for {op}({a},{b}): {old} and {new}")]
    Conflict {
        op: &'static str,
        a: usize,
        b: usize,
        old: usize,
        new: usize,
    },
    #[error("expected {expected} names, got {got}")]
    Names { expected: usize, got: usize },
}

/// A finite set with a relation meant to be a partial order, partially
/// defined operation tables, and designated constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialStructure {
    sig: Signature,
    size: usize,
    /// `leq[a]` holds every `b` with `a <= b`.
    leq: Vec<Mask>,
    meet: OpTable,
    join: OpTable,
    prod: OpTable,
    under: OpTable,
    over: OpTable,
    diamond: Vec<Option<u8>>,
    zero: usize,
    one: usize,
    unit: Option<usize>,
    names: Option<Vec<String>>,
}

impl PartialStructure {
    /// A structure with the reflexive order and no defined entries.
    pub fn new(
        sig: Signature,
        size: usize,
        zero: usize,
        one: usize,
        unit: Option<usize>,
    ) -> Result<PartialStructure, StructureError> {
        if size == 0 || size > MAX_CARRIER {
            return Err(StructureError::BadSize(size));
        }
        for i in [zero, one].into_iter().chain(unit) {
            if i >= size {
                return Err(StructureError::OutOfRange(i));
            }
        }
        if unit.is_some() != sig.has_unit() {
            return Err(StructureError::UnitMismatch);
        }
        Ok(PartialStructure {
            sig,
            size,
            leq: (0..size).map(bits::bit).collect(),
            meet: OpTable::new(size),
            join: OpTable::new(size),
            prod: OpTable::new(size),
            under: OpTable::new(size),
            over: OpTable::new(size),
            diamond: vec![None; size],
            zero,
            one,
            unit,
            names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<PartialStructure, StructureError> {
        if names.len() != self.size {
            return Err(StructureError::Names {
                expected: self.size,
                got: names.len(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn class(&self) -> Class {
        self.sig.class()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn zero(&self) -> usize {
        self.zero
    }

    pub fn one(&self) -> usize {
        self.one
    }

    pub fn unit(&self) -> Option<usize> {
        self.unit
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Display name of an element.
    pub fn name(&self, i: usize) -> String {
        match &self.names {
            Some(n) => n[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        has(self.leq[a], b)
    }

    /// Every `b` with `a <= b`.
    pub fn up(&self, a: usize) -> Mask {
        self.leq[a]
    }

    pub fn set_leq(&mut self, a: usize, b: usize) -> Result<(), StructureError> {
        self.check(a)?;
        self.check(b)?;
        self.leq[a] |= bits::bit(b);
        Ok(())
    }

    /// Closes the order under transitivity.
    pub fn close_order(&mut self) {
        for k in 0..self.size {
            for i in 0..self.size {
                if has(self.leq[i], k) {
                    self.leq[i] |= self.leq[k];
                }
            }
        }
    }

    fn check(&self, a: usize) -> Result<(), StructureError> {
        if a < self.size {
            Ok(())
        } else {
            Err(StructureError::OutOfRange(a))
        }
    }

    fn table(&self, op: Op) -> &OpTable {
        match op {
            Op::Meet => &self.meet,
            Op::Join => &self.join,
            Op::Prod => &self.prod,
            Op::Under => &self.under,
            Op::Over => &self.over,
            Op::Diamond => unreachable!("diamond is unary"),
        }
    }

    fn table_mut(&mut self, op: Op) -> &mut OpTable {
        match op {
            Op::Meet => &mut self.meet,
            Op::Join => &mut self.join,
            Op::Prod => &mut self.prod,
            Op::Under => &mut self.under,
            Op::Over => &mut self.over,
            Op::Diamond => unreachable!("diamond is unary"),
        }
    }

    /// Defines `a op b = c`. Redefining an entry with the same value is
    /// allowed, with a different value it is an error.
    pub fn define(&mut self, op: Op, a: usize, b: usize, c: usize) -> Result<(), StructureError> {
        if !self.sig.has_op(op) || op == Op::Diamond {
            return Err(StructureError::OpNotInSignature(op.symbol(), self.class()));
        }
        for i in [a, b, c] {
            self.check(i)?;
        }
        let n = self.size;
        let cell = &mut self.table_mut(op).cells[a * n + b];
        match *cell {
            Some(old) if old as usize != c => Err(StructureError::Conflict {
                op: op.symbol(),
                a,
                b,
                old: old as usize,
                new: c,
            }),
            _ => {
                *cell = Some(c as u8);
                Ok(())
            }
        }
    }

    pub fn define_diamond(&mut self, a: usize, c: usize) -> Result<(), StructureError> {
        if !self.sig.has_op(Op::Diamond) {
            return Err(StructureError::OpNotInSignature(Op::Diamond.symbol(), self.class()));
        }
        self.check(a)?;
        self.check(c)?;
        match self.diamond[a] {
            Some(old) if old as usize != c => Err(StructureError::Conflict {
                op: Op::Diamond.symbol(),
                a,
                b: a,
                old: old as usize,
                new: c,
            }),
            _ => {
                self.diamond[a] = Some(c as u8);
                Ok(())
            }
        }
    }

    /// Removes a defined entry. For the diamond `b` is ignored.
    pub fn undefine(&mut self, op: Op, a: usize, b: usize) {
        if op == Op::Diamond {
            self.diamond[a] = None;
        } else {
            let n = self.size;
            self.table_mut(op).cells[a * n + b] = None;
        }
    }

    pub fn get(&self, op: Op, a: usize, b: usize) -> Option<usize> {
        if op == Op::Diamond {
            self.diamond[a].map(usize::from)
        } else {
            self.table(op).get(a, b)
        }
    }

    pub fn get_diamond(&self, a: usize) -> Option<usize> {
        self.diamond[a].map(usize::from)
    }

    /// Defined entries of a binary operation.
    pub fn entries(&self, op: Op) -> Vec<(usize, usize, usize)> {
        if op == Op::Diamond {
            return self.diamond_entries().into_iter().map(|(a, c)| (a, a, c)).collect();
        }
        self.table(op).entries().collect()
    }

    pub fn diamond_entries(&self) -> Vec<(usize, usize)> {
        self.diamond
            .iter()
            .enumerate()
            .filter_map(|(a, c)| c.map(|c| (a, c as usize)))
            .collect()
    }

    /// All defined entries as `(op, a, b, c)`; for the diamond `b == a`.
    pub fn all_entries(&self) -> Vec<(Op, usize, usize, usize)> {
        let mut out = Vec::new();
        for op in Op::BINARY {
            out.extend(self.table(op).entries().map(|(a, b, c)| (op, a, b, c)));
        }
        out.extend(self.diamond_entries().into_iter().map(|(a, c)| (Op::Diamond, a, a, c)));
        out
    }

    /// The same structure read over another signature of the same class.
    pub fn with_props(&self, props: Props) -> Result<PartialStructure, StructureError> {
        let sig = Signature::new(self.class(), props).map_err(|_| StructureError::UnitMismatch)?;
        let mut out = self.clone();
        out.sig = sig;
        Ok(out)
    }
}

impl Interpretation for PartialStructure {
    type Elem = usize;

    fn constant(&self, c: Constant) -> Option<usize> {
        match c {
            Constant::Zero => Some(self.zero),
            Constant::One => Some(self.one),
            Constant::Unit => self.unit,
        }
    }

    fn unary(&self, op: Op, a: &usize) -> Option<usize> {
        debug_assert_eq!(op, Op::Diamond);
        self.get_diamond(*a)
    }

    fn binary(&self, op: Op, a: &usize, b: &usize) -> Option<usize> {
        self.table(op).get(*a, *b)
    }

    fn leq(&self, a: &usize, b: &usize) -> bool {
        PartialStructure::leq(self, *a, *b)
    }
}

/// Why a structure is not a partial lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LatticeViolation {
    NotReflexive(usize),
    NotAntisymmetric(usize, usize),
    NotTransitive(usize, usize, usize),
    ZeroNotLeast(usize),
    OneNotGreatest(usize),
    /// `a /\ b` is defined as `got` but the greatest lower bound is
    /// `expected` (or does not exist).
    MeetNotGlb {
        a: usize,
        b: usize,
        got: usize,
        expected: Option<usize>,
    },
    JoinNotLub {
        a: usize,
        b: usize,
        got: usize,
        expected: Option<usize>,
    },
}

impl LatticeViolation {
    pub fn describe(&self, s: &PartialStructure) -> String {
        self.describe_with(&|i| s.name(i))
    }

    fn describe_with(&self, n: &dyn Fn(usize) -> String) -> String {
        let bound = |e: &Option<usize>| e.map_or("none".to_string(), n);
        match self {
            LatticeViolation::NotReflexive(a) => format!("order is not reflexive at {}", n(*a)),
            LatticeViolation::NotAntisymmetric(a, b) => {
                format!("order is not antisymmetric: {} <= {} <= {}", n(*a), n(*b), n(*a))
            }
            LatticeViolation::NotTransitive(a, b, c) => format!(
                "order is not transitive: {} <= {} <= {} but not {} <= {}",
                n(*a),
                n(*b),
                n(*c),
                n(*a),
                n(*c)
            ),
            LatticeViolation::ZeroNotLeast(a) => format!("0 is not below {}", n(*a)),
            LatticeViolation::OneNotGreatest(a) => format!("1 is not above {}", n(*a)),
            LatticeViolation::MeetNotGlb { a, b, got, expected } => format!(
                "glb({},{})={} \u{2260} {}",
                n(*a),
                n(*b),
                bound(expected),
                n(*got)
            ),
            LatticeViolation::JoinNotLub { a, b, got, expected } => format!(
                "lub({},{})={} \u{2260} {}",
                n(*a),
                n(*b),
                bound(expected),
                n(*got)
            ),
        }
    }
}

impl fmt::Display for LatticeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe_with(&|i| i.to_string()))
    }
}

/// Checks that the order is a bounded partial order and that every defined
/// meet and join is the greatest lower (least upper) bound.
pub fn validate_partial_lattice(s: &PartialStructure) -> Result<(), LatticeViolation> {
    let n = s.size;
    for a in 0..n {
        if !s.leq(a, a) {
            return Err(LatticeViolation::NotReflexive(a));
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            if s.leq(a, b) && s.leq(b, a) {
                return Err(LatticeViolation::NotAntisymmetric(a, b));
            }
        }
    }
    for a in 0..n {
        for b in bits::ones(s.leq[a]) {
            if let Some(c) = bits::ones(s.leq[b] & !s.leq[a]).next() {
                return Err(LatticeViolation::NotTransitive(a, b, c));
            }
        }
    }
    for a in 0..n {
        if !s.leq(s.zero, a) {
            return Err(LatticeViolation::ZeroNotLeast(a));
        }
        if !s.leq(a, s.one) {
            return Err(LatticeViolation::OneNotGreatest(a));
        }
    }
    let down = |a: usize| -> Mask { (0..n).filter(|&d| s.leq(d, a)).fold(0, |m, d| m | bits::bit(d)) };
    for (a, b, c) in s.meet.entries() {
        let lower = down(a) & down(b);
        let glb = bits::ones(lower).find(|&d| lower & !down(d) == 0);
        if glb != Some(c) {
            return Err(LatticeViolation::MeetNotGlb {
                a,
                b,
                got: c,
                expected: glb,
            });
        }
    }
    for (a, b, c) in s.join.entries() {
        let upper = s.leq[a] & s.leq[b];
        let lub = bits::ones(upper).find(|&d| upper & !s.leq[d] == 0);
        if lub != Some(c) {
            return Err(LatticeViolation::JoinNotLub {
                a,
                b,
                got: c,
                expected: lub,
            });
        }
    }
    Ok(())
}

/// A prime filter, as the set of its elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimeFilter(pub Mask);

impl PrimeFilter {
    pub fn contains(self, a: usize) -> bool {
        has(self.0, a)
    }

    pub fn elements(self) -> Vec<usize> {
        bits::to_vec(self.0)
    }
}

/// A family of prime filters in canonical (increasing bitset) order.
pub type FilterFamily = Vec<PrimeFilter>;

/// All prime filters of `s` with respect to `props`, in canonical order.
///
/// Returns `None` when there are more than `cap`.
pub fn prime_filters_capped(s: &PartialStructure, props: Props, cap: usize) -> Option<FilterFamily> {
    let sk = Skeleton::of(s, props);
    sk.prime_filters(cap).map(|v| v.into_iter().map(PrimeFilter).collect())
}

/// All prime filters of `s` with respect to `props`, in canonical order.
pub fn prime_filters(s: &PartialStructure, props: Props) -> FilterFamily {
    prime_filters_capped(s, props, usize::MAX).expect("uncapped")
}

/// The relation `R(f, g, h)` induced by the defined entries of `s`, with the
/// strengthenings required by `props`.
pub fn accessibility(
    s: &PartialStructure,
    f: PrimeFilter,
    g: PrimeFilter,
    h: PrimeFilter,
    props: Props,
) -> bool {
    Skeleton::of(s, props).related(f.0, g.0, h.0)
}

/// The largest subfamily of `initial` in which every filter has the
/// witnesses its entries require. The result is in canonical order and does
/// not depend on the order of `initial`.
pub fn refine_filters(s: &PartialStructure, initial: &[PrimeFilter], props: Props) -> FilterFamily {
    let sk = Skeleton::of(s, props);
    sk.refine(initial.iter().map(|f| f.0).collect())
        .into_iter()
        .map(PrimeFilter)
        .collect()
}

/// Checks that every pair `a` not below `b` is separated by some filter.
/// On failure returns the first such pair, ordered by `a` then `b`.
pub fn separation_check(s: &PartialStructure, family: &[PrimeFilter]) -> Result<(), (usize, usize)> {
    let masks: Vec<Mask> = family.iter().map(|f| f.0).collect();
    let sk = Skeleton::of(s, Props::EMPTY);
    sk.separation(&masks).map(|_| ())
}

/// Evaluation of a formula under a valuation indexed by variable index.
pub fn evaluate_formula(s: &PartialStructure, phi: &QFFormula, valuation: &[usize]) -> Evaluation {
    phi.evaluate(s, valuation)
}

/// Why certification failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Refusal {
    /// P4 was requested but the structure has no unit.
    MissingUnit,
    NotPartialLattice(LatticeViolation),
    NoPrimeFilters,
    FiltersEliminated,
    /// Some `a` not below `b` is not separated.
    Separation { a: usize, b: usize },
    /// Too many prime filters to enumerate.
    FilterLimit,
}

impl Refusal {
    pub fn stage(&self) -> &'static str {
        match self {
            Refusal::MissingUnit | Refusal::NotPartialLattice(_) => "partial lattice",
            Refusal::NoPrimeFilters | Refusal::FilterLimit => "prime filters",
            Refusal::FiltersEliminated => "filter elimination",
            Refusal::Separation { .. } => "separation",
        }
    }

    /// Human-readable reason, using the element names of `s`.
    pub fn describe(&self, s: &PartialStructure) -> String {
        self.describe_with(&|i| s.name(i))
    }

    fn describe_with(&self, n: &dyn Fn(usize) -> String) -> String {
        match self {
            Refusal::MissingUnit => "P4 requires a unit element".to_string(),
            Refusal::NotPartialLattice(v) => format!("not a partial lattice: {}", v.describe_with(n)),
            Refusal::NoPrimeFilters => "there are no prime filters".to_string(),
            Refusal::FiltersEliminated => "filter elimination emptied F".to_string(),
            Refusal::Separation { a, b } => format!("separation (D) fails: ({},{})", n(*a), n(*b)),
            Refusal::FilterLimit => format!("more than {MAX_PRIME_FILTERS} prime filters"),
        }
    }
}

impl fmt::Display for Refusal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe_with(&|i| i.to_string()))
    }
}

/// Evidence that a partial structure embeds into a member of its class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub props: Props,
    /// The surviving filters, in canonical order.
    pub family: FilterFamily,
    /// `relation[f * k + g]` is the set of `h` with `R(f, g, h)`, indexed
    /// into `family` (of size `k`). Present when `k <= 64`.
    pub relation: Option<Vec<Mask>>,
    /// For each pair `a` not below `b`: `(a, b, index of a separating filter)`.
    pub separation: Vec<(usize, usize, usize)>,
    pub witnesses: Vec<Witness>,
}

/// Runs the full certification pipeline.
pub fn certify(s: &PartialStructure, props: Props) -> Result<Certificate, Refusal> {
    if props.contains(Property::P4) && s.unit.is_none() {
        return Err(Refusal::MissingUnit);
    }
    validate_partial_lattice(s).map_err(Refusal::NotPartialLattice)?;
    if s.size == 1 {
        return Ok(Certificate {
            props,
            family: Vec::new(),
            relation: Some(Vec::new()),
            separation: Vec::new(),
            witnesses: Vec::new(),
        });
    }
    let sk = Skeleton::of(s, props);
    let initial = sk.prime_filters(MAX_PRIME_FILTERS).ok_or(Refusal::FilterLimit)?;
    if initial.is_empty() {
        return Err(Refusal::NoPrimeFilters);
    }
    let family = sk.refine(initial);
    if family.is_empty() {
        return Err(Refusal::FiltersEliminated);
    }
    Ok(build_certificate(&sk, family)?)
}

fn build_certificate(sk: &Skeleton, family: Vec<Mask>) -> Result<Certificate, Refusal> {
    let separation = sk.separation(&family).map_err(|(a, b)| Refusal::Separation { a, b })?;
    let witnesses = sk.witnesses(&family);
    let relation = (family.len() <= 64).then(|| sk.relation_table(&family));
    Ok(Certificate {
        props: sk.props,
        family: family.into_iter().map(PrimeFilter).collect(),
        relation,
        separation,
        witnesses,
    })
}

/// Greedily removes filters while the remaining family, after refinement,
/// still separates. The result certifies the same structure with a family
/// that is usually much smaller, which keeps completions small.
pub fn shrink_certificate(s: &PartialStructure, cert: &Certificate) -> Certificate {
    if s.size == 1 {
        return cert.clone();
    }
    let sk = Skeleton::of(s, cert.props);
    let mut family: Vec<Mask> = cert.family.iter().map(|f| f.0).collect();
    let mut i = family.len();
    while i > 0 {
        i -= 1;
        if i >= family.len() {
            continue;
        }
        let mut candidate = family.clone();
        candidate.remove(i);
        let refined = sk.refine(candidate);
        if sk.separation(&refined).is_ok() {
            family = refined;
            i = i.min(family.len());
        }
    }
    build_certificate(&sk, family).expect("separation was checked")
}

/// Checks that `cert` still certifies `s`: every filter is prime, the
/// family is closed under the witness conditions, and it separates.
pub fn check_certificate(s: &PartialStructure, cert: &Certificate) -> bool {
    if s.size == 1 {
        return cert.family.is_empty();
    }
    let sk = Skeleton::of(s, cert.props);
    let family: Vec<Mask> = cert.family.iter().map(|f| f.0).collect();
    family.iter().all(|&f| sk.is_prime_filter(f))
        && sk.refine(family.clone()).len() == family.len()
        && sk.separation(&family).is_ok()
}

#[cfg(test)]
mod tests;
