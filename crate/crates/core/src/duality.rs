//! Frames, complex algebras of upsets, canonical frames of prime filters,
//! and the completion of a certified partial structure.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{AlgebraError, FiniteAlgebra, Lattice, Operations, MAX_ALGEBRA};
use crate::bits::{self, bit, has, Mask};
use crate::formula::{Class, Op, Property, Props, Signature};
use crate::par;
use crate::structure::{check_certificate, Certificate, PartialStructure, Skeleton};

/// Frames have at most this many points.
pub const MAX_POINTS: usize = 64;

/// Completions are refused above this many filters.
pub const MAX_COMPLETION_FILTERS: usize = 20;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DualityError {
    #[error("frame condition fails: {0}")]
    Frame(FrameViolation),
    #[error("frames and canonical frames are limited to {MAX_POINTS} points")]
    TooManyPoints,
    #[error("canonical frames need an algebra of at most 64 elements")]
    AlgebraTooLarge,
    #[error("the upset lattice has more than {MAX_ALGEBRA} elements")]
    TooManyUpsets,
    #[error("completion refused: {0} filters exceeds the limit of {MAX_COMPLETION_FILTERS}")]
    FamilyTooLarge(usize),
    #[error("certificate does not match the structure")]
    StaleCertificate,
    #[error("embedding check failed: {0}")]
    Embedding(EmbeddingFailure),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// A finite partial order on `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poset {
    /// `up[x]` holds every `y` with `x <= y`.
    up: Vec<Mask>,
}

impl Poset {
    pub fn discrete(n: usize) -> Poset {
        Poset {
            up: (0..n).map(bit).collect(),
        }
    }

    /// Reflexive-transitive closure of `pairs`; fails if the result is not
    /// antisymmetric.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Poset, DualityError> {
        if n > MAX_POINTS {
            return Err(DualityError::TooManyPoints);
        }
        let mut up: Vec<Mask> = (0..n).map(bit).collect();
        for &(x, y) in pairs {
            if x >= n || y >= n {
                return Err(DualityError::Frame(FrameViolation::BadShape));
            }
            up[x] |= bit(y);
        }
        for k in 0..n {
            for x in 0..n {
                if has(up[x], k) {
                    up[x] |= up[k];
                }
            }
        }
        let p = Poset { up };
        p.check().map_err(DualityError::Frame)?;
        Ok(p)
    }

    /// Takes up-sets as given; [`check_frame`] validates them.
    pub fn from_up(up: Vec<Mask>) -> Poset {
        Poset { up }
    }

    pub fn size(&self) -> usize {
        self.up.len()
    }

    pub fn leq(&self, x: usize, y: usize) -> bool {
        has(self.up[x], y)
    }

    pub fn up(&self, x: usize) -> Mask {
        self.up[x]
    }

    pub fn full(&self) -> Mask {
        bits::full(self.size())
    }

    /// Pairs `(x, y)` with `x <= y` and `x != y`.
    pub fn strict_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.size())
            .flat_map(|x| bits::ones(self.up[x] & !bit(x)).map(move |y| (x, y)))
            .collect()
    }

    pub fn up_closure(&self, m: Mask) -> Mask {
        bits::ones(m).fold(0, |acc, x| acc | self.up[x])
    }

    pub fn is_upset(&self, m: Mask) -> bool {
        self.up_closure(m) == m
    }

    fn check(&self) -> Result<(), FrameViolation> {
        let n = self.size();
        if n > MAX_POINTS || self.up.iter().any(|&u| u & !bits::full(n) != 0) {
            return Err(FrameViolation::BadShape);
        }
        for x in 0..n {
            if !has(self.up[x], x) {
                return Err(FrameViolation::NotPartialOrder);
            }
            for y in bits::ones(self.up[x]) {
                if y != x && has(self.up[y], x) {
                    return Err(FrameViolation::NotPartialOrder);
                }
                if self.up[y] & !self.up[x] != 0 {
                    return Err(FrameViolation::NotPartialOrder);
                }
            }
        }
        Ok(())
    }

    /// All upsets, generated from antichains of minimal elements, sorted by
    /// size and then by bitset. Returns `None` if there are more than `cap`.
    pub fn upsets_capped(&self, cap: usize) -> Option<Vec<Mask>> {
        let n = self.size();
        let down: Vec<Mask> = (0..n)
            .map(|x| bits::from_iter((0..n).filter(|&y| self.leq(y, x))))
            .collect();
        let mut out = Vec::new();
        let mut stack = vec![(0usize, 0 as Mask, 0 as Mask)];
        while let Some((i, set, blocked)) = stack.pop() {
            if i == n {
                out.push(set);
                if out.len() > cap {
                    return None;
                }
                continue;
            }
            stack.push((i + 1, set, blocked));
            if !has(blocked, i) {
                stack.push((i + 1, set | self.up[i], blocked | self.up[i] | down[i]));
            }
        }
        out.sort_by_key(|&m| (m.count_ones(), m));
        Some(out)
    }

    pub fn upsets(&self) -> Vec<Mask> {
        self.upsets_capped(usize::MAX).expect("uncapped")
    }
}

/// A poset with a ternary relation and optionally a set of unit points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupoidFrame {
    pub poset: Poset,
    /// `rel[x * n + y]` is the set of `z` with `R(x, y, z)`.
    pub rel: Vec<Mask>,
    pub units: Option<Mask>,
}

impl GroupoidFrame {
    pub fn size(&self) -> usize {
        self.poset.size()
    }

    pub fn related(&self, x: usize, y: usize, z: usize) -> bool {
        has(self.rel[x * self.size() + y], z)
    }

    pub fn triples(&self) -> Vec<(usize, usize, usize)> {
        let n = self.size();
        (0..n * n)
            .flat_map(|xy| bits::ones(self.rel[xy]).map(move |z| (xy / n, xy % n, z)))
            .collect()
    }

    /// Which of P1-P4 the frame conditions guarantee; P4 needs unit points.
    pub fn properties(&self) -> Props {
        let mut out = Props::EMPTY;
        for p in Property::ALL {
            if self.check_property(p).is_ok() {
                out = out.with(p);
            }
        }
        out
    }

    fn check_property(&self, p: Property) -> Result<(), FrameViolation> {
        let n = self.size();
        let up = |x: usize| self.poset.up(x);
        let fail = |name, tuple: Vec<usize>| Err(FrameViolation::Condition { name, tuple });
        match p {
            Property::P1 => {
                for (x, y, z) in self.triples() {
                    if !self.related(y, x, z) {
                        return fail("R1", vec![x, y, z]);
                    }
                }
            }
            Property::P2 => {
                for (x, y, z) in self.triples() {
                    if !has(up(x) & up(y), z) {
                        return fail("R2", vec![x, y, z]);
                    }
                }
            }
            Property::P3 => {
                for x in 0..n {
                    if !self.related(x, x, x) {
                        return fail("R3", vec![x]);
                    }
                }
            }
            Property::P4 => {
                let Some(e) = self.units else {
                    return Err(FrameViolation::MissingUnits);
                };
                for (x, y, z) in self.triples() {
                    if has(e, y) && !has(up(x), z) {
                        return fail("R4 right unit", vec![x, y, z]);
                    }
                    if has(e, x) && !has(up(y), z) {
                        return fail("R4 left unit", vec![x, y, z]);
                    }
                }
                for x in 0..n {
                    let right = bits::ones(e).any(|y| self.related(x, y, x));
                    let left = bits::ones(e).any(|z| self.related(z, x, x));
                    if !(right && left) {
                        return fail("R4 witnesses", vec![x]);
                    }
                }
            }
        }
        Ok(())
    }
}

/// A poset with a binary relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiamondFrame {
    pub poset: Poset,
    /// `rel[x]` is the set of `y` with `R(x, y)`.
    pub rel: Vec<Mask>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Frame {
    Groupoid(GroupoidFrame),
    Diamond(DiamondFrame),
}

impl Frame {
    pub fn poset(&self) -> &Poset {
        match self {
            Frame::Groupoid(f) => &f.poset,
            Frame::Diamond(f) => &f.poset,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FrameViolation {
    BadShape,
    NotPartialOrder,
    MissingUnits,
    PropertiesOnDiamond,
    Condition { name: &'static str, tuple: Vec<usize> },
}

impl fmt::Display for FrameViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameViolation::BadShape => f.write_str("relation tables have the wrong shape"),
            FrameViolation::NotPartialOrder => f.write_str("order is not a partial order"),
            FrameViolation::MissingUnits => f.write_str("unital frame without unit points"),
            FrameViolation::PropertiesOnDiamond => f.write_str("properties apply to groupoid frames only"),
            FrameViolation::Condition { name, tuple } => {
                let t: Vec<String> = tuple.iter().map(|x| x.to_string()).collect();
                write!(f, "{name} at ({})", t.join(", "))
            }
        }
    }
}

/// Checks the monotonicity conditions and the frame conditions for `q`,
/// reporting the first violating tuple.
pub fn check_frame(frame: &Frame, q: Props) -> Result<(), FrameViolation> {
    let poset = frame.poset();
    poset.check()?;
    let n = poset.size();
    let full = poset.full();
    match frame {
        Frame::Diamond(d) => {
            if !q.is_empty() {
                return Err(FrameViolation::PropertiesOnDiamond);
            }
            if d.rel.len() != n || d.rel.iter().any(|&r| r & !full != 0) {
                return Err(FrameViolation::BadShape);
            }
            for x in 0..n {
                for x2 in bits::ones(poset.up(x)) {
                    if let Some(y) = bits::ones(d.rel[x] & !d.rel[x2]).next() {
                        return Err(FrameViolation::Condition {
                            name: "upward closure of R",
                            tuple: vec![x, y, x2],
                        });
                    }
                }
            }
            Ok(())
        }
        Frame::Groupoid(g) => {
            if g.rel.len() != n * n || g.rel.iter().chain(&g.units).any(|&r| r & !full != 0) {
                return Err(FrameViolation::BadShape);
            }
            let cond = |name, tuple| Err(FrameViolation::Condition { name, tuple });
            let below = |x: usize| (0..n).filter(move |&w| w != x && poset.leq(w, x));
            for x in 0..n {
                for y in 0..n {
                    let r = g.rel[x * n + y];
                    for x2 in below(x) {
                        if let Some(z) = bits::ones(r & !g.rel[x2 * n + y]).next() {
                            return cond("FR1", vec![x, y, z, x2]);
                        }
                    }
                    for y2 in below(y) {
                        if let Some(z) = bits::ones(r & !g.rel[x * n + y2]).next() {
                            return cond("FR2", vec![x, y, z, y2]);
                        }
                    }
                    for z in bits::ones(r) {
                        if let Some(z2) = bits::ones(poset.up(z) & !r).next() {
                            return cond("FR3", vec![x, y, z, z2]);
                        }
                    }
                }
            }
            for p in q.iter() {
                g.check_property(p)?;
            }
            if q.contains(Property::P4) || g.units.is_none() {
                return Ok(());
            }
            g.check_property(Property::P4)
        }
    }
}

fn upset_lattice(poset: &Poset) -> Result<(Vec<Mask>, Arc<Lattice>), DualityError> {
    let ups = poset.upsets_capped(MAX_ALGEBRA).ok_or(DualityError::TooManyUpsets)?;
    let lattice = Lattice::of_sets(&ups)?;
    Ok((ups, Arc::new(lattice)))
}

fn index_of(ups: &[Mask]) -> HashMap<Mask, u16> {
    ups.iter().enumerate().map(|(i, &m)| (m, i as u16)).collect()
}

/// The algebra of upsets of a frame: a brdg (brdge with unit points) for
/// groupoid frames and a bdo for diamond frames.
pub fn complex_algebra(frame: &Frame) -> Result<FiniteAlgebra, DualityError> {
    check_frame(frame, Props::EMPTY).map_err(DualityError::Frame)?;
    let poset = frame.poset();
    let n = poset.size();
    let (ups, lattice) = upset_lattice(poset)?;
    let index = index_of(&ups);
    let at = |m: Mask| index[&m];
    let mut ops = Operations::default();
    let sig = match frame {
        Frame::Diamond(d) => {
            let diamond = ups
                .iter()
                .map(|&x| at(bits::from_iter((0..n).filter(|&p| d.rel[p] & x != 0))))
                .collect();
            ops.diamond = Some(diamond);
            Signature::of_class(Class::Bdo)
        }
        Frame::Groupoid(g) => {
            // rows[Y][x] = union of R(x, y, -) over y in Y, and cols[X][y]
            // the union over x in X.
            let rows: Vec<Vec<Mask>> = ups
                .iter()
                .map(|&y| (0..n).map(|x| bits::ones(y).fold(0, |m, b| m | g.rel[x * n + b])).collect())
                .collect();
            let cols: Vec<Vec<Mask>> = ups
                .iter()
                .map(|&x| (0..n).map(|y| bits::ones(x).fold(0, |m, a| m | g.rel[a * n + y])).collect())
                .collect();
            let u = ups.len();
            let idx: Vec<usize> = (0..u).collect();
            let row = |&i: &usize| {
                let x = ups[i];
                let mut prod = Vec::with_capacity(u);
                let mut under = Vec::with_capacity(u);
                let mut over = Vec::with_capacity(u);
                for j in 0..u {
                    // i * j: union over points of X of rows[Y].
                    prod.push(at(bits::ones(x).fold(0, |m, a| m | rows[j][a])));
                    // i \ j: points y whose X-column stays inside Z = j.
                    let z = ups[j];
                    under.push(at(bits::from_iter((0..n).filter(|&y| cols[i][y] & !z == 0))));
                    // j / i with Y = i: points x whose Y-row stays inside j.
                    over.push(at(bits::from_iter((0..n).filter(|&p| rows[i][p] & !z == 0))));
                }
                (prod, under, over)
            };
            let rows_of: Vec<_> = if u >= 64 { par::map(&idx, row) } else { idx.iter().map(row).collect() };
            let mut prod = Vec::with_capacity(u * u);
            let mut under = Vec::with_capacity(u * u);
            let mut over = vec![0u16; u * u];
            for (i, (p, d, o)) in rows_of.into_iter().enumerate() {
                prod.extend(p);
                under.extend(d);
                for (j, v) in o.into_iter().enumerate() {
                    over[j * u + i] = v;
                }
            }
            ops.prod = Some(prod);
            ops.under = Some(under);
            ops.over = Some(over);
            match g.units {
                Some(e) => {
                    ops.unit = Some(at(poset.up_closure(e)) as usize);
                    Signature::of_class(Class::Brdge)
                }
                None => Signature::of_class(Class::Brdg),
            }
        }
    };
    Ok(FiniteAlgebra::new(sig, lattice, ops)?)
}

/// A canonical frame together with the prime filters its points stand for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalFrame {
    pub frame: Frame,
    pub filters: Vec<Mask>,
}

/// Prime filters of a finite distributive lattice, as the principal
/// filters of its join-irreducibles.
pub fn algebra_prime_filters(l: &Lattice) -> Result<Vec<Mask>, DualityError> {
    if l.size() > 64 {
        return Err(DualityError::AlgebraTooLarge);
    }
    let n = l.size();
    Ok(l.join_irreducibles()
        .into_iter()
        .map(|j| bits::from_iter((0..n).filter(|&a| l.leq(j, a))))
        .collect())
}

/// The frame of prime filters of `a`, ordered by inclusion.
pub fn canonical_frame(a: &FiniteAlgebra) -> Result<CanonicalFrame, DualityError> {
    let filters = algebra_prime_filters(a.lattice())?;
    let k = filters.len();
    if k > MAX_POINTS {
        return Err(DualityError::TooManyPoints);
    }
    let poset = Poset::from_up(
        filters
            .iter()
            .map(|&f| bits::from_iter((0..k).filter(|&j| f & !filters[j] == 0)))
            .collect(),
    );
    let frame = if a.operations().diamond.is_some() {
        let rel = filters
            .iter()
            .map(|&f| bits::from_iter((0..k).filter(|&j| bits::ones(filters[j]).all(|x| has(f, a.diamond(x).unwrap())))))
            .collect();
        Frame::Diamond(DiamondFrame { poset, rel })
    } else {
        let prod = |x: usize, y: usize| a.prod(x, y).expect("canonical frames need a product");
        let mut rel = vec![0; k * k];
        for (i, &f) in filters.iter().enumerate() {
            for (j, &g) in filters.iter().enumerate() {
                let mut need = 0;
                for x in bits::ones(f) {
                    for y in bits::ones(g) {
                        need |= bit(prod(x, y));
                    }
                }
                rel[i * k + j] = bits::from_iter((0..k).filter(|&h| need & !filters[h] == 0));
            }
        }
        let units = a
            .unit()
            .map(|e| bits::from_iter((0..k).filter(|&i| has(filters[i], e))));
        Frame::Groupoid(GroupoidFrame { poset, rel, units })
    };
    Ok(CanonicalFrame { frame, filters })
}

/// `mu(a)`: the set of points whose filter contains `a`, for each element.
pub fn mu(elements: usize, filters: &[Mask]) -> Vec<Mask> {
    (0..elements)
        .map(|a| bits::from_iter((0..filters.len()).filter(|&i| has(filters[i], a))))
        .collect()
}

/// Maps `a` into the complex algebra of its canonical frame and returns the
/// complex algebra with the element map.
pub fn canonical_embedding(a: &FiniteAlgebra) -> Result<(FiniteAlgebra, Vec<usize>), DualityError> {
    let cf = canonical_frame(a)?;
    let complex = complex_algebra(&cf.frame)?;
    let ups = cf.frame.poset().upsets();
    let index = index_of(&ups);
    let map = mu(a.size(), &cf.filters).into_iter().map(|m| index[&m] as usize).collect();
    let complex = match a.class() {
        Class::Bdbo => complex.with_signature(a.signature())?,
        _ => complex,
    };
    Ok((complex, map))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EmbeddingFailure {
    WrongLength,
    NotInjective(usize, usize),
    Order(usize, usize),
    Constant(&'static str),
    Entry { op: Op, args: [usize; 2], value: usize },
}

impl fmt::Display for EmbeddingFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingFailure::WrongLength => f.write_str("map has the wrong length"),
            EmbeddingFailure::NotInjective(a, b) => write!(f, "{a} and {b} have the same image"),
            EmbeddingFailure::Order(a, b) => write!(f, "order between {a} and {b} is not preserved"),
            EmbeddingFailure::Constant(c) => write!(f, "constant {c} is not preserved"),
            EmbeddingFailure::Entry { op, args, value } => {
                write!(f, "entry {} {} {} = {value} is not preserved", args[0], op.symbol(), args[1])
            }
        }
    }
}

/// Checks that `map` is injective, preserves and reflects the order, sends
/// constants to constants and commutes with every defined entry of `b`.
pub fn verify_embedding(b: &PartialStructure, a: &FiniteAlgebra, map: &[usize]) -> Result<(), EmbeddingFailure> {
    let n = b.size();
    if map.len() != n || map.iter().any(|&x| x >= a.size()) {
        return Err(EmbeddingFailure::WrongLength);
    }
    for x in 0..n {
        for y in 0..n {
            if x < y && map[x] == map[y] {
                return Err(EmbeddingFailure::NotInjective(x, y));
            }
            if b.leq(x, y) != a.leq(map[x], map[y]) {
                return Err(EmbeddingFailure::Order(x, y));
            }
        }
    }
    if map[b.zero()] != a.zero() {
        return Err(EmbeddingFailure::Constant("0"));
    }
    if map[b.one()] != a.one() {
        return Err(EmbeddingFailure::Constant("1"));
    }
    if let Some(e) = b.unit() {
        if a.unit() != Some(map[e]) {
            return Err(EmbeddingFailure::Constant("e"));
        }
    }
    for (op, x, y, z) in b.all_entries() {
        if a.apply(op, map[x], map[y]) != Some(map[z]) {
            return Err(EmbeddingFailure::Entry {
                op,
                args: [x, y],
                value: z,
            });
        }
    }
    Ok(())
}

/// A total algebra built from a certificate, with the embedding of the
/// partial structure into it.
#[derive(Clone, Debug)]
pub struct Completion {
    pub algebra: FiniteAlgebra,
    pub map: Vec<usize>,
    pub frame: GroupoidFrame,
}

/// Builds the complex algebra of the frame of certified filters, reads it in
/// the class of `s`, and checks that the filter map embeds `s`.
pub fn completion(s: &PartialStructure, cert: &Certificate) -> Result<Completion, DualityError> {
    let sig = Signature::new(s.class(), cert.props).map_err(|_| DualityError::StaleCertificate)?;
    if !check_certificate(s, cert) {
        return Err(DualityError::StaleCertificate);
    }
    let k = cert.family.len();
    if k > MAX_COMPLETION_FILTERS {
        return Err(DualityError::FamilyTooLarge(k));
    }
    let family: Vec<Mask> = cert.family.iter().map(|f| f.0).collect();
    let sk = Skeleton::of(s, cert.props);
    let poset = Poset::from_up(
        family
            .iter()
            .map(|&f| bits::from_iter((0..k).filter(|&j| f & !family[j] == 0)))
            .collect(),
    );
    let units = s
        .unit()
        .filter(|_| cert.props.contains(Property::P4))
        .map(|e| bits::from_iter((0..k).filter(|&i| has(family[i], e))));
    let frame = GroupoidFrame {
        poset,
        rel: sk.relation_table(&family),
        units,
    };
    let complex = complex_algebra(&Frame::Groupoid(frame.clone()))?;
    let ups = frame.poset.upsets();
    let index = index_of(&ups);
    let map: Vec<usize> = mu(s.size(), &family).into_iter().map(|m| index[&m] as usize).collect();
    let algebra = if s.class() == Class::Bdo {
        let top = complex.one();
        let diamond = (0..complex.size())
            .map(|x| complex.prod(x, top).expect("groupoid product") as u16)
            .collect();
        let ops = Operations {
            diamond: Some(diamond),
            ..Operations::default()
        };
        FiniteAlgebra::new(sig, complex.lattice().clone(), ops)?
    } else {
        complex.with_signature(sig)?
    };
    verify_embedding(s, &algebra, &map).map_err(DualityError::Embedding)?;
    Ok(Completion { algebra, map, frame })
}

/// A failed instance of one of the canonical frame facts below.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LemmaFailure {
    pub fact: &'static str,
    pub detail: Vec<usize>,
}

impl fmt::Display for LemmaFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fails at {:?}", self.fact, self.detail)
    }
}

fn groupoid_parts(a: &FiniteAlgebra) -> Result<(GroupoidFrame, Vec<Mask>), DualityError> {
    match canonical_frame(a)? {
        CanonicalFrame {
            frame: Frame::Groupoid(g),
            filters,
        } => Ok((g, filters)),
        _ => Err(DualityError::Frame(FrameViolation::BadShape)),
    }
}

/// On the canonical frame of a residuated algebra, the relation defined by
/// products agrees with the ones defined by either residual.
pub fn relation_definitions_agree(a: &FiniteAlgebra) -> Result<Result<(), LemmaFailure>, DualityError> {
    let (g, filters) = groupoid_parts(a)?;
    let k = filters.len();
    let n = a.size();
    for i in 0..k {
        for j in 0..k {
            for h in 0..k {
                let (f, gg, hh) = (filters[i], filters[j], filters[h]);
                let by_prod = g.related(i, j, h);
                let by_under = (0..n).all(|x| {
                    (0..n).all(|y| !(has(f, x) && has(gg, a.under(x, y).unwrap())) || has(hh, y))
                });
                let by_over = (0..n).all(|x| {
                    (0..n).all(|y| !(has(f, a.over(y, x).unwrap()) && has(gg, x)) || has(hh, y))
                });
                if by_prod != by_under || by_prod != by_over {
                    return Ok(Err(LemmaFailure {
                        fact: "relation definitions agree",
                        detail: vec![i, j, h],
                    }));
                }
            }
        }
    }
    Ok(Ok(()))
}

/// Existence of witnesses in the canonical frame: for products (and, in
/// residuated algebras, residuals), and for the diamond.
pub fn fusion_witnesses(a: &FiniteAlgebra) -> Result<Result<(), LemmaFailure>, DualityError> {
    let cf = canonical_frame(a)?;
    let filters = &cf.filters;
    let k = filters.len();
    let n = a.size();
    let fail = |fact, detail| Ok(Err(LemmaFailure { fact, detail }));
    match &cf.frame {
        Frame::Diamond(d) => {
            for (i, &f) in filters.iter().enumerate() {
                for x in 0..n {
                    if has(f, a.diamond(x).unwrap())
                        && !(0..k).any(|j| has(filters[j], x) && has(d.rel[i], j))
                    {
                        return fail("diamond witness", vec![i, x]);
                    }
                }
            }
        }
        Frame::Groupoid(g) => {
            for x in 0..n {
                for y in 0..n {
                    let xy = a.prod(x, y).unwrap();
                    for h in 0..k {
                        if has(filters[h], xy)
                            && !(0..k).any(|i| {
                                has(filters[i], x) && (0..k).any(|j| has(filters[j], y) && g.related(i, j, h))
                            })
                        {
                            return fail("product witness", vec![x, y, h]);
                        }
                    }
                    if let (Some(u), Some(o)) = (a.under(x, y), a.over(y, x)) {
                        for j in 0..k {
                            if !has(filters[j], u)
                                && !(0..k).any(|i| {
                                    has(filters[i], x) && (0..k).any(|h| !has(filters[h], y) && g.related(i, j, h))
                                })
                            {
                                return fail("under witness", vec![x, y, j]);
                            }
                        }
                        for i in 0..k {
                            if !has(filters[i], o)
                                && !(0..k).any(|j| {
                                    has(filters[j], x) && (0..k).any(|h| !has(filters[h], y) && g.related(i, j, h))
                                })
                            {
                                return fail("over witness", vec![x, y, i]);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(Ok(()))
}

/// In the canonical frame of a unital algebra every point `F` has points
/// `G`, `H` containing the unit with `R(F, G, F)` and `R(H, F, F)`.
pub fn unit_witnesses(a: &FiniteAlgebra) -> Result<Result<(), LemmaFailure>, DualityError> {
    let Some(e) = a.unit() else {
        return Ok(Ok(()));
    };
    let (g, filters) = groupoid_parts(a)?;
    let k = filters.len();
    let with_e: Vec<usize> = (0..k).filter(|&i| has(filters[i], e)).collect();
    for f in 0..k {
        if !with_e.iter().any(|&x| g.related(f, x, f)) || !with_e.iter().any(|&x| g.related(x, f, f)) {
            return Ok(Err(LemmaFailure {
                fact: "unit witnesses",
                detail: vec![f],
            }));
        }
    }
    Ok(Ok(()))
}

#[cfg(test)]
mod tests;
