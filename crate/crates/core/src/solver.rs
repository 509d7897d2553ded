//! Satisfiability of quantifier-free formulas by search over the subterm
//! universe, with certified leaves.
//!
//! Every element of a candidate structure is the value of some subterm of
//! the formula or a constant. The search decides, for each ordered pair of
//! subterms, whether the first lies below the second; a total decision is a
//! preorder whose quotient is the candidate structure, with one operation
//! entry per operation node. Leaves are handed to [`certify`].

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::bits::{self, bit, has, Mask};
use crate::formula::{
    diamond_to_circ, negate_for_validity, Atom, Class, Constant, Evaluation, Formula, FormulaError, Node, Op,
    Property, QFFormula, Relation, Signature, Terms, UniversalSentence,
};
use crate::par;
use crate::structure::{certify, shrink_certificate, Certificate, PartialStructure, Skeleton};

/// Formulas with a larger size are refused.
pub const MAX_FORMULA_SIZE: u64 = 64;

/// The naive enumerator only runs up to this size.
pub const NAIVE_MAX_SIZE: u64 = 3;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SolverError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("formula size {0} exceeds the limit of {MAX_FORMULA_SIZE}")]
    SizeCap(u64),
    #[error("formula size {0} exceeds the naive enumerator's limit of {NAIVE_MAX_SIZE}")]
    NaiveLimit(u64),
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Enumerate every partial structure instead of searching.
    pub naive: bool,
    /// Prune interior nodes with the filter fixed point.
    pub prune: bool,
    /// Skip pruning when a node has more prime filters than this.
    pub filter_cap: usize,
    /// Branching levels explored in parallel.
    pub parallel_depth: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            naive: false,
            prune: true,
            filter_cap: 2048,
            parallel_depth: 6,
        }
    }
}

/// A certified partial structure satisfying the formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub structure: PartialStructure,
    /// Element assigned to each variable, by variable index.
    pub valuation: Vec<usize>,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Box<Model>),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn model(&self) -> Option<&Model> {
        match self {
            SatResult::Sat(m) => Some(m),
            SatResult::Unsat => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Countermodel(Box<Model>),
}

/// Search counters. Under parallel search these vary between runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub nodes: u64,
    pub leaves: u64,
    pub pruned: u64,
}

pub fn decide_sat(phi: &QFFormula, sig: Signature) -> Result<SatResult, SolverError> {
    decide_sat_with(phi, sig, &SolverOptions::default()).map(|(r, _)| r)
}

pub fn decide_sat_with(
    phi: &QFFormula,
    sig: Signature,
    opts: &SolverOptions,
) -> Result<(SatResult, SolverStats), SolverError> {
    let phi = phi.with_signature(sig)?;
    let size = phi.size();
    if size > MAX_FORMULA_SIZE {
        return Err(SolverError::SizeCap(size));
    }
    if opts.naive && size > NAIVE_MAX_SIZE {
        return Err(SolverError::NaiveLimit(size));
    }
    // The naive enumerator builds diamond tables directly.
    if sig.class() == Class::Bdo && !opts.naive {
        let circ = diamond_to_circ(&phi)?;
        let (result, stats) = run(&circ, circ.signature(), opts);
        let result = match result {
            SatResult::Sat(m) => SatResult::Sat(Box::new(circ_model_to_diamond(&m))),
            SatResult::Unsat => SatResult::Unsat,
        };
        return Ok((result, stats));
    }
    Ok(run(&phi, sig, opts))
}

pub fn decide_valid(sentence: &UniversalSentence, sig: Signature) -> Result<Validity, SolverError> {
    decide_valid_with(sentence, sig, &SolverOptions::default()).map(|(v, _)| v)
}

pub fn decide_valid_with(
    sentence: &UniversalSentence,
    sig: Signature,
    opts: &SolverOptions,
) -> Result<(Validity, SolverStats), SolverError> {
    let negated = negate_for_validity(sentence);
    let (result, stats) = decide_sat_with(&negated, sig, opts)?;
    let v = match result {
        SatResult::Sat(m) => Validity::Countermodel(m),
        SatResult::Unsat => Validity::Valid,
    };
    Ok((v, stats))
}

fn run(phi: &QFFormula, sig: Signature, opts: &SolverOptions) -> (SatResult, SolverStats) {
    if opts.naive {
        return naive(phi, sig);
    }
    let problem = Problem::new(phi, sig, opts);
    let found = problem.solve();
    let stats = SolverStats {
        nodes: problem.visited.load(Ordering::Relaxed),
        leaves: problem.leaves.load(Ordering::Relaxed),
        pruned: problem.pruned.load(Ordering::Relaxed),
    };
    let result = match found {
        Some(m) => SatResult::Sat(Box::new(m)),
        None => SatResult::Unsat,
    };
    (result, stats)
}

/// Reads the `t * 1` entries of a model found for the translated formula as
/// diamond entries.
fn circ_model_to_diamond(m: &Model) -> Model {
    let s = &m.structure;
    let mut out = PartialStructure::new(Signature::of_class(Class::Bdo), s.size(), s.zero(), s.one(), None)
        .expect("same carrier");
    if let Some(names) = s.names() {
        out = out.with_names(names.to_vec()).expect("same length");
    }
    for a in 0..s.size() {
        for b in bits::ones(s.up(a)) {
            out.set_leq(a, b).expect("in range");
        }
    }
    for op in [Op::Meet, Op::Join] {
        for (a, b, c) in s.entries(op) {
            out.define(op, a, b, c).expect("consistent");
        }
    }
    for (a, b, c) in s.entries(Op::Prod) {
        debug_assert_eq!(b, s.one());
        out.define_diamond(a, c).expect("consistent");
    }
    Model {
        structure: out,
        valuation: m.valuation.clone(),
        certificate: m.certificate.clone(),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Tri {
    True,
    False,
    Unknown,
}

/// The formula with atoms over universe slots.
enum Compiled {
    Le(usize, usize),
    Eq(usize, usize),
    Not(Box<Compiled>),
    And(Vec<Compiled>),
    Or(Vec<Compiled>),
}

/// `prem[0] and prem[1] imply concl`, all of them `<=` facts. A reflexive
/// premise stands for "true".
#[derive(Clone, Copy, Debug)]
struct Rule {
    prem: [(u8, u8); 2],
    concl: (u8, u8),
}

#[derive(Clone, Debug)]
struct State {
    le: Vec<Mask>,
    nle: Vec<Mask>,
}

impl State {
    fn get(&self, (i, j): (u8, u8)) -> Tri {
        let (i, j) = (i as usize, j as usize);
        if has(self.le[i], j) {
            Tri::True
        } else if has(self.nle[i], j) {
            Tri::False
        } else {
            Tri::Unknown
        }
    }
}

struct Conflict;

struct Problem<'a> {
    phi: &'a QFFormula,
    sig: Signature,
    opts: &'a SolverOptions,
    k: usize,
    unit: Option<usize>,
    /// Universe slot of each term id.
    slot: Vec<usize>,
    /// Operation entries `(op, a, b, t)` over slots.
    entries: Vec<(Op, usize, usize, usize)>,
    names: Vec<String>,
    rules: Vec<Rule>,
    body: Compiled,
    atom_pairs: Vec<(usize, usize)>,
    best: AtomicU64,
    visited: AtomicU64,
    leaves: AtomicU64,
    pruned: AtomicU64,
}

impl<'a> Problem<'a> {
    fn new(phi: &'a QFFormula, sig: Signature, opts: &'a SolverOptions) -> Problem<'a> {
        let terms = phi.terms();
        let mut names = vec!["0".to_string(), "1".to_string()];
        let unit = sig.has_unit().then(|| {
            names.push("e".to_string());
            2
        });
        let mut slot = vec![usize::MAX; terms.len()];
        let mut entries = Vec::new();
        for &id in phi.reachable() {
            slot[id.index()] = match terms.node(id) {
                Node::Const(Constant::Zero) => 0,
                Node::Const(Constant::One) => 1,
                Node::Const(Constant::Unit) => unit.expect("checked signature"),
                node => {
                    let t = names.len();
                    names.push(terms.display(id).to_string());
                    match node {
                        Node::Binary(op, a, b) => entries.push((op, slot[a.index()], slot[b.index()], t)),
                        Node::Unary(op, a) => entries.push((op, slot[a.index()], slot[a.index()], t)),
                        _ => {}
                    }
                    t
                }
            };
        }
        let k = names.len();
        let body = compile(phi.body(), &slot);
        let mut atom_pairs = Vec::new();
        for atom in phi.atoms() {
            let (l, r) = (slot[atom.lhs.index()], slot[atom.rhs.index()]);
            for pair in [(l, r), (r, l)].into_iter().take(if atom.rel == Relation::Eq { 2 } else { 1 }) {
                if pair.0 != pair.1 && !atom_pairs.contains(&pair) {
                    atom_pairs.push(pair);
                }
            }
        }
        let mut p = Problem {
            phi,
            sig,
            opts,
            k,
            unit,
            slot,
            entries,
            names,
            rules: Vec::new(),
            body,
            atom_pairs,
            best: AtomicU64::new(u64::MAX),
            visited: AtomicU64::new(0),
            leaves: AtomicU64::new(0),
            pruned: AtomicU64::new(0),
        };
        p.rules = p.build_rules();
        p
    }

    /// Horn consequences valid in every member of the class.
    fn build_rules(&self) -> Vec<Rule> {
        let k = self.k;
        let props = self.sig.props();
        let mut rules = Vec::new();
        let mut add = |p: (usize, usize), q: (usize, usize), c: (usize, usize)| {
            let cast = |(a, b): (usize, usize)| (a as u8, b as u8);
            rules.push(Rule {
                prem: [cast(p), cast(q)],
                concl: cast(c),
            })
        };
        let yes = (0, 0);
        let (zero, one) = (0, 1);
        let of = |op: Op| -> Vec<(usize, usize, usize)> {
            self.entries
                .iter()
                .filter(|e| e.0 == op)
                .map(|&(_, a, b, t)| (a, b, t))
                .collect()
        };
        let (meets, joins, prods, unders, overs) = (of(Op::Meet), of(Op::Join), of(Op::Prod), of(Op::Under), of(Op::Over));
        for &(a, b, t) in &meets {
            add(yes, yes, (t, a));
            add(yes, yes, (t, b));
            for c in 0..k {
                add((c, a), (c, b), (c, t));
            }
        }
        for &(a, b, t) in &joins {
            add(yes, yes, (a, t));
            add(yes, yes, (b, t));
            for c in 0..k {
                add((a, c), (b, c), (t, c));
            }
        }
        for &(a, b, t) in &prods {
            add((a, zero), yes, (t, zero));
            add((b, zero), yes, (t, zero));
            if props.contains(Property::P2) {
                add(yes, yes, (t, a));
                add(yes, yes, (t, b));
            }
            if props.contains(Property::P3) {
                for x in 0..k {
                    add((x, a), (x, b), (x, t));
                }
            }
            if let Some(e) = self.unit {
                add((a, e), yes, (t, b));
                add((e, a), yes, (b, t));
                add((b, e), yes, (t, a));
                add((e, b), yes, (a, t));
            }
        }
        for &(a, c, u) in &unders {
            add((a, zero), yes, (one, u));
            add((one, c), yes, (one, u));
        }
        for &(c, b, u) in &overs {
            add((b, zero), yes, (one, u));
            add((one, c), yes, (one, u));
        }
        // Monotonicity between entries of the same operation.
        let pairs = |list: &[(usize, usize, usize)]| -> Vec<((usize, usize, usize), (usize, usize, usize))> {
            list.iter()
                .flat_map(|&x| list.iter().filter(move |&&y| y != x).map(move |&y| (x, y)))
                .collect()
        };
        for list in [&meets, &joins, &prods] {
            for ((a1, b1, t1), (a2, b2, t2)) in pairs(list) {
                add((a1, a2), (b1, b2), (t1, t2));
            }
        }
        if props.contains(Property::P1) {
            for ((a1, b1, t1), (a2, b2, t2)) in pairs(&prods) {
                add((a1, b2), (b1, a2), (t1, t2));
            }
        }
        for ((a1, c1, u1), (a2, c2, u2)) in pairs(&unders) {
            add((a2, a1), (c1, c2), (u1, u2));
        }
        for ((c1, b1, u1), (c2, b2, u2)) in pairs(&overs) {
            add((c1, c2), (b2, b1), (u1, u2));
        }
        // Residuation.
        for &(a, b, t) in &prods {
            for &(x, c, u) in &unders {
                add((x, a), (t, c), (b, u));
                add((a, x), (b, u), (t, c));
            }
            for &(c, y, u) in &overs {
                add((y, b), (t, c), (a, u));
                add((b, y), (a, u), (t, c));
            }
        }
        if props.contains(Property::P1) {
            for &(a, c, u1) in &unders {
                for &(c2, a2, u2) in &overs {
                    add((a2, a), (c, c2), (u1, u2));
                    add((a, a2), (c2, c), (u2, u1));
                }
            }
        }
        rules
    }

    fn initial(&self) -> State {
        let k = self.k;
        let full = bits::full(k);
        let mut le: Vec<Mask> = (0..k).map(bit).collect();
        le[0] = full;
        for l in le.iter_mut() {
            *l |= bit(1);
        }
        State { le, nle: vec![0; k] }
    }

    fn set(&self, st: &mut State, (i, j): (usize, usize), value: bool) -> Result<bool, Conflict> {
        let (same, other) = if value { (&mut st.le, &st.nle) } else { (&mut st.nle, &st.le) };
        if has(other[i], j) {
            return Err(Conflict);
        }
        if has(same[i], j) {
            return Ok(false);
        }
        same[i] |= bit(j);
        Ok(true)
    }

    /// Transitivity of `<=` and its consequences for `not <=`.
    fn close(&self, st: &mut State) -> Result<bool, Conflict> {
        let k = self.k;
        let mut any = false;
        loop {
            let mut changed = false;
            for i in 0..k {
                let mut up = st.le[i];
                for j in bits::ones(st.le[i]) {
                    up |= st.le[j];
                }
                if up != st.le[i] {
                    st.le[i] = up;
                    changed = true;
                }
            }
            for i in 0..k {
                // i <= j and not i <= x give not j <= x.
                for j in bits::ones(st.le[i]) {
                    let n = st.nle[j] | st.nle[i];
                    if n != st.nle[j] {
                        st.nle[j] = n;
                        changed = true;
                    }
                }
            }
            for i in 0..k {
                // not i <= x and y <= x give not i <= y.
                let down = (0..k).filter(|&y| st.le[y] & st.nle[i] != 0).fold(0, |m, y| m | bit(y));
                if down | st.nle[i] != st.nle[i] {
                    st.nle[i] |= down;
                    changed = true;
                }
            }
            if (0..k).any(|i| st.le[i] & st.nle[i] != 0) {
                return Err(Conflict);
            }
            if !changed {
                return Ok(any);
            }
            any = true;
        }
    }

    fn eval(&self, f: &Compiled, st: &State) -> Tri {
        let pair = |i: usize, j: usize| st.get((i as u8, j as u8));
        match f {
            Compiled::Le(i, j) => pair(*i, *j),
            Compiled::Eq(i, j) => match (pair(*i, *j), pair(*j, *i)) {
                (Tri::True, Tri::True) => Tri::True,
                (Tri::False, _) | (_, Tri::False) => Tri::False,
                _ => Tri::Unknown,
            },
            Compiled::Not(g) => match self.eval(g, st) {
                Tri::True => Tri::False,
                Tri::False => Tri::True,
                Tri::Unknown => Tri::Unknown,
            },
            Compiled::And(gs) => {
                let mut out = Tri::True;
                for g in gs {
                    match self.eval(g, st) {
                        Tri::False => return Tri::False,
                        Tri::Unknown => out = Tri::Unknown,
                        Tri::True => {}
                    }
                }
                out
            }
            Compiled::Or(gs) => {
                let mut out = Tri::False;
                for g in gs {
                    match self.eval(g, st) {
                        Tri::True => return Tri::True,
                        Tri::Unknown => out = Tri::Unknown,
                        Tri::False => {}
                    }
                }
                out
            }
        }
    }

    /// Makes `f` take the value `want`, as far as that is forced.
    fn force(&self, f: &Compiled, want: bool, st: &mut State) -> Result<bool, Conflict> {
        match self.eval(f, st) {
            Tri::True if want => return Ok(false),
            Tri::False if !want => return Ok(false),
            Tri::True | Tri::False => return Err(Conflict),
            Tri::Unknown => {}
        }
        match f {
            Compiled::Le(i, j) => self.set(st, (*i, *j), want),
            Compiled::Eq(i, j) => {
                if want {
                    let a = self.set(st, (*i, *j), true)?;
                    let b = self.set(st, (*j, *i), true)?;
                    Ok(a || b)
                } else if st.get((*i as u8, *j as u8)) == Tri::True {
                    self.set(st, (*j, *i), false)
                } else if st.get((*j as u8, *i as u8)) == Tri::True {
                    self.set(st, (*i, *j), false)
                } else {
                    Ok(false)
                }
            }
            Compiled::Not(g) => self.force(g, !want, st),
            Compiled::And(gs) | Compiled::Or(gs) => {
                let is_and = matches!(f, Compiled::And(_));
                if want == is_and {
                    // Every child must take the value.
                    let mut changed = false;
                    for g in gs {
                        changed |= self.force(g, want, st)?;
                    }
                    Ok(changed)
                } else {
                    // Some child must; force it when it is the only open one.
                    let open: Vec<&Compiled> = gs.iter().filter(|g| self.eval(g, st) == Tri::Unknown).collect();
                    if open.len() == 1 {
                        self.force(open[0], want, st)
                    } else {
                        Ok(false)
                    }
                }
            }
        }
    }

    fn propagate(&self, st: &mut State) -> Result<(), Conflict> {
        loop {
            let mut changed = self.close(st)?;
            for r in &self.rules {
                let (p, q, c) = (st.get(r.prem[0]), st.get(r.prem[1]), st.get(r.concl));
                let c2 = (r.concl.0 as usize, r.concl.1 as usize);
                match (p, q, c) {
                    (Tri::True, Tri::True, Tri::False) => return Err(Conflict),
                    (Tri::True, Tri::True, Tri::Unknown) => changed |= self.set(st, c2, true)?,
                    (Tri::True, Tri::Unknown, Tri::False) => {
                        changed |= self.set(st, (r.prem[1].0 as usize, r.prem[1].1 as usize), false)?
                    }
                    (Tri::Unknown, Tri::True, Tri::False) => {
                        changed |= self.set(st, (r.prem[0].0 as usize, r.prem[0].1 as usize), false)?
                    }
                    _ => {}
                }
            }
            changed |= self.force(&self.body, true, st)?;
            if !changed {
                return Ok(());
            }
        }
    }

    fn skeleton(&self, st: &State) -> Skeleton {
        let pick = |op: Op| -> Vec<[usize; 3]> {
            self.entries
                .iter()
                .filter(|e| e.0 == op)
                .map(|&(_, a, b, t)| [a, b, t])
                .collect()
        };
        Skeleton {
            n: self.k,
            up: st.le.clone(),
            meet: pick(Op::Meet),
            join: pick(Op::Join),
            prod: pick(Op::Prod),
            under: pick(Op::Under),
            over: pick(Op::Over),
            zero: 0,
            one: 1,
            unit: self.unit,
            props: self.sig.props(),
        }
    }

    /// Whether the filters that can survive in any completion of `st` still
    /// separate the pairs already known to be unrelated.
    fn filters_can_separate(&self, st: &State) -> bool {
        let sk = self.skeleton(st);
        let Some(filters) = sk.prime_filters(self.opts.filter_cap) else {
            return true;
        };
        let family = sk.refine(filters);
        (0..self.k).all(|a| bits::ones(st.nle[a]).all(|b| family.iter().any(|&f| has(f, a) && !has(f, b))))
    }

    fn next_pair(&self, st: &State) -> Option<(usize, usize)> {
        let open = |&(i, j): &(usize, usize)| st.get((i as u8, j as u8)) == Tri::Unknown;
        if let Some(&p) = self.atom_pairs.iter().find(|p| open(p)) {
            return Some(p);
        }
        (0..self.k)
            .flat_map(|i| (0..self.k).map(move |j| (i, j)))
            .find(|p| p.0 != p.1 && open(p))
    }

    fn solve(&self) -> Option<Model> {
        let mut st = self.initial();
        self.search(&mut st, 0, 0)
    }

    /// Depth-first search; `key` holds the branch choices made in the first
    /// `parallel_depth` levels, so that the leftmost model wins regardless
    /// of scheduling.
    fn search(&self, st: &mut State, depth: usize, key: u64) -> Option<Model> {
        let pd = self.opts.parallel_depth.min(62);
        let padded = key << pd.saturating_sub(depth);
        if padded > self.best.load(Ordering::Relaxed) {
            return None;
        }
        self.visited.fetch_add(1, Ordering::Relaxed);
        if self.propagate(st).is_err() {
            return None;
        }
        if self.opts.prune && !self.filters_can_separate(st) {
            self.pruned.fetch_add(1, Ordering::Relaxed);
            return None;
        }
        let Some(pair) = self.next_pair(st) else {
            let found = self.leaf(st);
            if found.is_some() {
                self.best.fetch_min(padded, Ordering::Relaxed);
            }
            return found;
        };
        let mut left = st.clone();
        let mut right = st.clone();
        let ok_left = self.set(&mut left, pair, true).is_ok();
        let ok_right = self.set(&mut right, pair, false).is_ok();
        let (next, kl, kr) = if depth < pd {
            (depth + 1, key << 1, key << 1 | 1)
        } else {
            (depth + 1, key, key)
        };
        if depth < pd {
            let (l, r) = par::join(
                || ok_left.then(|| self.search(&mut left, next, kl)).flatten(),
                || ok_right.then(|| self.search(&mut right, next, kr)).flatten(),
            );
            return l.or(r);
        }
        if ok_left {
            if let Some(m) = self.search(&mut left, next, kl) {
                return Some(m);
            }
        }
        if ok_right {
            return self.search(&mut right, next, kr);
        }
        None
    }

    fn leaf(&self, st: &State) -> Option<Model> {
        self.leaves.fetch_add(1, Ordering::Relaxed);
        let k = self.k;
        // Classes of the preorder, numbered by their least slot.
        let mut class = vec![usize::MAX; k];
        let mut reps = Vec::new();
        for i in 0..k {
            if class[i] != usize::MAX {
                continue;
            }
            let c = reps.len();
            reps.push(i);
            for j in bits::ones(st.le[i]) {
                if has(st.le[j], i) {
                    class[j] = c;
                }
            }
        }
        let n = reps.len();
        let mut s = PartialStructure::new(self.sig, n, class[0], class[1], self.unit.map(|e| class[e])).ok()?;
        s = s.with_names(reps.iter().map(|&r| self.names[r].clone()).collect()).ok()?;
        for (ci, &r) in reps.iter().enumerate() {
            for j in bits::ones(st.le[r]) {
                s.set_leq(ci, class[j]).ok()?;
            }
        }
        for &(op, a, b, t) in &self.entries {
            let r = match op {
                Op::Diamond => s.define_diamond(class[a], class[t]),
                _ => s.define(op, class[a], class[b], class[t]),
            };
            r.ok()?;
        }
        let cert = certify(&s, self.sig.props()).ok()?;
        let terms = self.phi.terms();
        let valuation: Vec<usize> = (0..terms.var_names().len())
            .map(|v| {
                self.phi
                    .reachable()
                    .iter()
                    .find(|&&id| terms.node(id) == Node::Var(v as u32))
                    .map_or(class[0], |id| class[self.slot[id.index()]])
            })
            .collect();
        if self.phi.evaluate(&s, &valuation) != Evaluation::Satisfied {
            debug_assert!(false, "leaf does not satisfy the formula");
            return None;
        }
        let certificate = shrink_certificate(&s, &cert);
        Some(Model {
            structure: s,
            valuation,
            certificate,
        })
    }
}

fn compile(f: &Formula, slot: &[usize]) -> Compiled {
    match f {
        Formula::Atom(a) => {
            let (l, r) = (slot[a.lhs.index()], slot[a.rhs.index()]);
            match a.rel {
                Relation::Le => Compiled::Le(l, r),
                Relation::Eq => Compiled::Eq(l, r),
            }
        }
        Formula::Not(g) => Compiled::Not(Box::new(compile(g, slot))),
        Formula::And(gs) => Compiled::And(gs.iter().map(|g| compile(g, slot)).collect()),
        Formula::Or(gs) => Compiled::Or(gs.iter().map(|g| compile(g, slot)).collect()),
    }
}

/// Enumerates every partial structure up to the formula size, with tables
/// for the operations occurring in the formula, and every valuation.
fn naive(phi: &QFFormula, sig: Signature) -> (SatResult, SolverStats) {
    let mut stats = SolverStats::default();
    let terms = phi.terms();
    let mut ops: Vec<Op> = Vec::new();
    for &id in phi.reachable() {
        if let Node::Binary(op, _, _) | Node::Unary(op, _) = terms.node(id) {
            if !ops.contains(&op) {
                ops.push(op);
            }
        }
    }
    ops.sort_by_key(|op| Op::BINARY.iter().position(|o| o == op).unwrap_or(usize::MAX));
    let vars = phi.occurring_vars();
    let max = phi.size() as usize;
    for k in 1..=max {
        for order in bounded_orders(k) {
            let units: Vec<Option<usize>> = if sig.has_unit() { (0..k).map(Some).collect() } else { vec![None] };
            for unit in units {
                let cells: usize = ops.iter().map(|&op| if op == Op::Diamond { k } else { k * k }).sum();
                // Each cell is undefined (k) or a value below k.
                let mut table = vec![0usize; cells];
                loop {
                    stats.nodes += 1;
                    if let Some(s) = build_naive(sig, k, &order, unit, &ops, &table) {
                        let mut valuation = vec![0usize; phi.var_names().len()];
                        loop {
                            if phi.evaluate(&s, &valuation) == Evaluation::Satisfied {
                                stats.leaves += 1;
                                if let Ok(cert) = certify(&s, sig.props()) {
                                    let certificate = shrink_certificate(&s, &cert);
                                    let m = Model {
                                        structure: s,
                                        valuation,
                                        certificate,
                                    };
                                    return (SatResult::Sat(Box::new(m)), stats);
                                }
                            }
                            if !odometer(&mut valuation, &vars, k) {
                                break;
                            }
                        }
                    }
                    let all: Vec<usize> = (0..cells).collect();
                    if !odometer(&mut table, &all, k + 1) {
                        break;
                    }
                }
            }
        }
    }
    (SatResult::Unsat, stats)
}

/// Advances the digits at `positions` of `digits` in base `base`; false
/// once every combination has been produced.
fn odometer(digits: &mut [usize], positions: &[usize], base: usize) -> bool {
    for &p in positions {
        digits[p] += 1;
        if digits[p] < base {
            return true;
        }
        digits[p] = 0;
    }
    false
}

/// Partial orders on `0..k` with least element 0 and greatest `k - 1`, as
/// up-set masks.
fn bounded_orders(k: usize) -> Vec<Vec<Mask>> {
    if k == 1 {
        return vec![vec![1]];
    }
    let inner: Vec<(usize, usize)> = (1..k - 1)
        .flat_map(|a| (1..k - 1).map(move |b| (a, b)))
        .filter(|&(a, b)| a != b)
        .collect();
    let mut out = Vec::new();
    for choice in 0u64..(1 << inner.len()) {
        let mut up: Vec<Mask> = (0..k).map(|a| bit(a) | bit(k - 1)).collect();
        up[0] = bits::full(k);
        for (i, &(a, b)) in inner.iter().enumerate() {
            if has(choice, i) {
                up[a] |= bit(b);
            }
        }
        let transitive = (0..k).all(|a| bits::ones(up[a]).all(|b| up[b] & !up[a] == 0));
        let antisymmetric = (0..k).all(|a| bits::ones(up[a]).all(|b| b == a || !has(up[b], a)));
        if transitive && antisymmetric {
            out.push(up);
        }
    }
    out
}

fn build_naive(
    sig: Signature,
    k: usize,
    order: &[Mask],
    unit: Option<usize>,
    ops: &[Op],
    table: &[usize],
) -> Option<PartialStructure> {
    let mut s = PartialStructure::new(sig, k, 0, k - 1, unit).ok()?;
    for a in 0..k {
        for b in bits::ones(order[a]) {
            s.set_leq(a, b).ok()?;
        }
    }
    let mut cell = 0;
    for &op in ops {
        let width = if op == Op::Diamond { 1 } else { k };
        for a in 0..k {
            for b in 0..width {
                let v = table[cell];
                cell += 1;
                if v == k {
                    continue;
                }
                if op == Op::Diamond {
                    s.define_diamond(a, v).ok()?;
                } else {
                    s.define(op, a, b, v).ok()?;
                }
            }
        }
    }
    Some(s)
}

/// The diagram of `s`: distinct variables `x0, x1, ...` for its elements,
/// one equation per defined entry and per constant, and the order between
/// every pair of elements, negated where it fails.
pub fn describe_structure(s: &PartialStructure) -> QFFormula {
    let n = s.size();
    let mut terms = Terms::new();
    let x: Vec<_> = (0..n).map(|i| terms.var(&format!("x{i}"))).collect();
    let mut lits = Vec::new();
    let atom = |rel, lhs, rhs| Formula::Atom(Atom { rel, lhs, rhs });
    for i in 0..n {
        for j in i + 1..n {
            lits.push(atom(Relation::Eq, x[i], x[j]).not());
        }
    }
    let mut constants = vec![(Constant::Zero, s.zero()), (Constant::One, s.one())];
    constants.extend(s.unit().map(|e| (Constant::Unit, e)));
    for (c, i) in constants {
        let t = terms.constant(c);
        lits.push(atom(Relation::Eq, t, x[i]));
    }
    for (op, a, b, c) in s.all_entries() {
        let t = if op == Op::Diamond {
            terms.unary(op, x[a])
        } else {
            terms.binary(op, x[a], x[b])
        };
        lits.push(atom(Relation::Eq, t, x[c]));
    }
    for i in 0..n {
        for j in 0..n {
            let l = atom(Relation::Le, x[i], x[j]);
            lits.push(if s.leq(i, j) { l } else { l.not() });
        }
    }
    QFFormula::new(s.signature(), terms, Formula::And(lits)).expect("symbols come from the structure")
}
