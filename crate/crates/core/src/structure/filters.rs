//! Prime filter enumeration, refinement and separation over a "skeleton":
//! a preorder with lists of defined entries. Both certification of partial
//! structures and the solver's pruning run on this representation.

use crate::bits::{self, bit, has, Mask};
use crate::formula::{Property, Props};
use crate::par;

use super::PartialStructure;

/// Which witness condition a [`Witness`] discharges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    /// `h` contains `a * b`: witnesses `f` containing `a` and `g` containing
    /// `b` with `R(f, g, h)`.
    Prod,
    /// `g` omits `a \ b`: witnesses `f` containing `a` and `h` omitting `b`.
    Under,
    /// `f` omits `a / b`: witnesses `g` containing `b` and `h` omitting `a`.
    Over,
    /// Some `g` containing the unit has `R(f, g, f)`.
    UnitRight,
    /// Some `h` containing the unit has `R(h, f, f)`.
    UnitLeft,
}

/// One witness, with filters given as indices into the family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Witness {
    pub condition: Condition,
    pub filter: usize,
    /// The entry `(a, b, c)` concerned; for unit conditions all three are
    /// the unit.
    pub entry: [usize; 3],
    pub first: usize,
    pub second: usize,
}

#[derive(Clone, Debug)]
struct Clause {
    pos: Mask,
    neg: Mask,
    concl: usize,
    concl_in: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct Skeleton {
    pub n: usize,
    /// `up[a]` holds every `b` with `a <= b`; may be a preorder.
    pub up: Vec<Mask>,
    pub meet: Vec<[usize; 3]>,
    pub join: Vec<[usize; 3]>,
    pub prod: Vec<[usize; 3]>,
    pub under: Vec<[usize; 3]>,
    pub over: Vec<[usize; 3]>,
    pub zero: usize,
    pub one: usize,
    pub unit: Option<usize>,
    pub props: Props,
}

impl Skeleton {
    /// Diamond entries `<>a = c` are read as `a * 1 = c`.
    pub fn of(s: &PartialStructure, props: Props) -> Skeleton {
        let tri = |v: Vec<(usize, usize, usize)>| v.into_iter().map(|(a, b, c)| [a, b, c]).collect();
        let mut prod: Vec<[usize; 3]> = tri(s.entries(crate::formula::Op::Prod));
        prod.extend(s.diamond_entries().into_iter().map(|(a, c)| [a, s.one(), c]));
        Skeleton {
            n: s.size(),
            up: (0..s.size()).map(|a| s.up(a)).collect(),
            meet: tri(s.entries(crate::formula::Op::Meet)),
            join: tri(s.entries(crate::formula::Op::Join)),
            prod,
            under: tri(s.entries(crate::formula::Op::Under)),
            over: tri(s.entries(crate::formula::Op::Over)),
            zero: s.zero(),
            one: s.one(),
            unit: s.unit(),
            props,
        }
    }

    fn full(&self) -> Mask {
        bits::full(self.n)
    }

    fn square_increasing(&self) -> bool {
        self.props.contains(Property::P3)
    }

    fn clauses(&self) -> Vec<Clause> {
        let mut out = Vec::new();
        let mut horn = |pos: Mask, neg: Mask, concl: usize, concl_in: bool| {
            out.push(Clause {
                pos,
                neg,
                concl,
                concl_in,
            })
        };
        for a in 0..self.n {
            for b in bits::ones(self.up[a] & !bit(a)) {
                horn(bit(a), 0, b, true);
            }
        }
        for &[a, b, c] in &self.meet {
            horn(bit(a) | bit(b), 0, c, true);
        }
        for &[a, b, c] in &self.join {
            horn(0, bit(a) | bit(b), c, false);
        }
        if self.square_increasing() {
            for &[a, b, c] in &self.prod {
                horn(bit(a) | bit(b), 0, c, true);
            }
            for &[a, b, c] in &self.under {
                horn(bit(a) | bit(c), 0, b, true);
            }
            for &[a, b, c] in &self.over {
                horn(bit(c) | bit(b), 0, a, true);
            }
        }
        out
    }

    /// Literal check of the prime filter conditions.
    pub fn is_prime_filter(&self, f: Mask) -> bool {
        has(f, self.one)
            && !has(f, self.zero)
            && f & !self.full() == 0
            && self.clauses().iter().all(|c| clause_holds(c, f))
    }

    /// All prime filters in increasing bitset order, or `None` when there
    /// are more than `cap`.
    pub fn prime_filters(&self, cap: usize) -> Option<Vec<Mask>> {
        if self.zero == self.one {
            return Some(Vec::new());
        }
        // The search assigns elements from the highest index down, so each
        // clause is checked once its lowest element is decided.
        let mut by_low: Vec<Vec<Clause>> = vec![Vec::new(); self.n];
        for c in self.clauses() {
            let low = (c.pos | c.neg | bit(c.concl)).trailing_zeros() as usize;
            by_low[low].push(c);
        }
        let mut out = Vec::new();
        let ok = self.search(self.n, 0, &by_low, cap, &mut out);
        ok.then_some(out)
    }

    fn search(&self, i: usize, inside: Mask, by_low: &[Vec<Clause>], cap: usize, out: &mut Vec<Mask>) -> bool {
        if i == 0 {
            out.push(inside);
            return out.len() <= cap;
        }
        let k = i - 1;
        for take in [false, true] {
            if (k == self.one && !take) || (k == self.zero && take) {
                continue;
            }
            let next = if take { inside | bit(k) } else { inside };
            if by_low[k].iter().all(|c| clause_holds(c, next)) && !self.search(k, next, by_low, cap, out) {
                return false;
            }
        }
        true
    }

    /// The set of elements every `h` with `R(f, g, h)` must contain.
    pub fn required(&self, f: Mask, g: Mask) -> Mask {
        let mut r = self.base_required(f, g);
        if self.props.contains(Property::P1) {
            r |= self.base_required(g, f);
        }
        if self.props.contains(Property::P2) {
            r |= f | g;
        }
        if let (true, Some(e)) = (self.props.contains(Property::P4), self.unit) {
            if has(g, e) {
                r |= f;
            }
            if has(f, e) {
                r |= g;
            }
        }
        r
    }

    fn base_required(&self, f: Mask, g: Mask) -> Mask {
        let mut r = 0;
        for &[a, b, c] in &self.prod {
            if has(f, a) && has(g, b) {
                r |= bit(c);
            }
        }
        for &[a, b, c] in &self.under {
            if has(f, a) && has(g, c) {
                r |= bit(b);
            }
        }
        for &[a, b, c] in &self.over {
            if has(f, c) && has(g, b) {
                r |= bit(a);
            }
        }
        r
    }

    pub fn related(&self, f: Mask, g: Mask, h: Mask) -> bool {
        self.required(f, g) & !h == 0
    }

    /// `relation[f * k + g]`: indices of the `h` related to `f` and `g`.
    pub fn relation_table(&self, family: &[Mask]) -> Vec<Mask> {
        let k = family.len();
        let mut out = vec![0; k * k];
        for (i, &f) in family.iter().enumerate() {
            for (j, &g) in family.iter().enumerate() {
                let r = self.required(f, g);
                out[i * k + j] = family
                    .iter()
                    .enumerate()
                    .filter(|&(_, &h)| r & !h == 0)
                    .fold(0, |m, (l, _)| m | bit(l));
            }
        }
        out
    }

    /// Greatest subfamily closed under the witness conditions, in increasing
    /// bitset order.
    pub fn refine(&self, mut family: Vec<Mask>) -> Vec<Mask> {
        family.sort_unstable();
        family.dedup();
        loop {
            if family.is_empty() {
                return family;
            }
            let pass = Pass::new(self, &family);
            let keep = par::map(&family, |&f| pass.survives(f));
            if keep.iter().all(|&k| k) {
                return family;
            }
            family = family.iter().zip(&keep).filter(|(_, &k)| k).map(|(&f, _)| f).collect();
        }
    }

    /// Every pair `a` not below `b` with the first filter separating it, or
    /// the first pair that no filter separates.
    pub fn separation(&self, family: &[Mask]) -> Result<Vec<(usize, usize, usize)>, (usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in bits::ones(!self.up[a] & self.full()) {
                match family.iter().position(|&f| has(f, a) && !has(f, b)) {
                    Some(i) => out.push((a, b, i)),
                    None => return Err((a, b)),
                }
            }
        }
        Ok(out)
    }

    /// Witnesses for every condition of every filter of a refined family.
    pub fn witnesses(&self, family: &[Mask]) -> Vec<Witness> {
        let pass = Pass::new(self, family);
        let index = |m: Mask| family.binary_search(&m).expect("member of the family");
        let mut out = Vec::new();
        for (fi, &x) in family.iter().enumerate() {
            for &[a, b, c] in &self.prod {
                if has(x, c) {
                    if let Some((f, g)) = pass.prod_witness(x, a, b) {
                        out.push(Witness {
                            condition: Condition::Prod,
                            filter: fi,
                            entry: [a, b, c],
                            first: index(f),
                            second: index(g),
                        });
                    }
                }
            }
            for &[a, b, c] in &self.under {
                if !has(x, c) {
                    if let Some((f, h)) = pass.under_witness(x, a, b) {
                        out.push(Witness {
                            condition: Condition::Under,
                            filter: fi,
                            entry: [a, b, c],
                            first: index(f),
                            second: index(h),
                        });
                    }
                }
            }
            for &[a, b, c] in &self.over {
                if !has(x, c) {
                    if let Some((g, h)) = pass.over_witness(x, a, b) {
                        out.push(Witness {
                            condition: Condition::Over,
                            filter: fi,
                            entry: [a, b, c],
                            first: index(g),
                            second: index(h),
                        });
                    }
                }
            }
            if let Some(e) = pass.unit() {
                if let Some(g) = pass.unit_right(x, e) {
                    out.push(Witness {
                        condition: Condition::UnitRight,
                        filter: fi,
                        entry: [e; 3],
                        first: index(g),
                        second: fi,
                    });
                }
                if let Some(h) = pass.unit_left(x, e) {
                    out.push(Witness {
                        condition: Condition::UnitLeft,
                        filter: fi,
                        entry: [e; 3],
                        first: index(h),
                        second: fi,
                    });
                }
            }
        }
        out
    }
}

fn clause_holds(c: &Clause, f: Mask) -> bool {
    let fires = f & c.pos == c.pos && f & c.neg == 0;
    !fires || has(f, c.concl) == c.concl_in
}

/// Data shared by the checks of one elimination pass.
struct Pass<'a> {
    sk: &'a Skeleton,
    family: &'a [Mask],
    /// For each element, the minimal members of the family containing it, in
    /// family order. `R` is antitone in its first two arguments, so these
    /// are the only candidates worth trying there.
    minimal: Vec<Vec<Mask>>,
}

impl<'a> Pass<'a> {
    fn new(sk: &'a Skeleton, family: &'a [Mask]) -> Pass<'a> {
        let mut by_size: Vec<Mask> = family.to_vec();
        by_size.sort_by_key(|m| (m.count_ones(), *m));
        let mut minimal: Vec<Vec<Mask>> = vec![Vec::new(); sk.n];
        for a in 0..sk.n {
            let mut mins: Vec<Mask> = Vec::new();
            for &f in by_size.iter().filter(|&&f| has(f, a)) {
                if !mins.iter().any(|&m| m & !f == 0) {
                    mins.push(f);
                }
            }
            mins.sort_unstable();
            minimal[a] = mins;
        }
        Pass { sk, family, minimal }
    }

    fn unit(&self) -> Option<usize> {
        self.sk.unit.filter(|_| self.sk.props.contains(Property::P4))
    }

    /// Some member containing `r` and omitting `b`.
    fn excluding(&self, r: Mask, b: usize) -> Option<Mask> {
        if has(r, b) {
            return None;
        }
        self.family.iter().copied().find(|&h| r & !h == 0 && !has(h, b))
    }

    fn prod_witness(&self, h: Mask, a: usize, b: usize) -> Option<(Mask, Mask)> {
        for &f in &self.minimal[a] {
            for &g in &self.minimal[b] {
                if self.sk.required(f, g) & !h == 0 {
                    return Some((f, g));
                }
            }
        }
        None
    }

    fn under_witness(&self, g: Mask, a: usize, b: usize) -> Option<(Mask, Mask)> {
        self.minimal[a]
            .iter()
            .find_map(|&f| self.excluding(self.sk.required(f, g), b).map(|h| (f, h)))
    }

    fn over_witness(&self, f: Mask, a: usize, b: usize) -> Option<(Mask, Mask)> {
        self.minimal[b]
            .iter()
            .find_map(|&g| self.excluding(self.sk.required(f, g), a).map(|h| (g, h)))
    }

    fn unit_right(&self, f: Mask, e: usize) -> Option<Mask> {
        self.minimal[e]
            .iter()
            .copied()
            .find(|&g| self.sk.required(f, g) & !f == 0)
    }

    fn unit_left(&self, f: Mask, e: usize) -> Option<Mask> {
        self.minimal[e]
            .iter()
            .copied()
            .find(|&h| self.sk.required(h, f) & !f == 0)
    }

    fn survives(&self, x: Mask) -> bool {
        let sk = self.sk;
        sk.prod
            .iter()
            .all(|&[a, b, c]| !has(x, c) || self.prod_witness(x, a, b).is_some())
            && sk
                .under
                .iter()
                .all(|&[a, b, c]| has(x, c) || self.under_witness(x, a, b).is_some())
            && sk
                .over
                .iter()
                .all(|&[a, b, c]| has(x, c) || self.over_witness(x, a, b).is_some())
            && self
                .unit()
                .is_none_or(|e| self.unit_right(x, e).is_some() && self.unit_left(x, e).is_some())
    }
}
