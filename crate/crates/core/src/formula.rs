//! Signatures, terms and quantifier-free formulas.
//!
//! Terms are hash-consed into a [`Terms`] arena, so a term that occurs
//! several times in a formula is a single node. Children always have smaller
//! ids than their parents.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The four classes of algebras.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    /// Bounded distributive lattices with a join-preserving operator.
    Bdo,
    /// Bounded distributive lattice-ordered groupoids.
    Bdbo,
    /// The residuated ones.
    Brdg,
    /// Residuated with a unit.
    Brdge,
}

impl Class {
    pub const ALL: [Class; 4] = [Class::Bdo, Class::Bdbo, Class::Brdg, Class::Brdge];

    pub fn name(self) -> &'static str {
        match self {
            Class::Bdo => "bdo",
            Class::Bdbo => "bdbo",
            Class::Brdg => "brdg",
            Class::Brdge => "brdge",
        }
    }

    pub fn has_op(self, op: Op) -> bool {
        match op {
            Op::Meet | Op::Join => true,
            Op::Prod => self != Class::Bdo,
            Op::Under | Op::Over => matches!(self, Class::Brdg | Class::Brdge),
            Op::Diamond => self == Class::Bdo,
        }
    }

    pub fn has_unit(self) -> bool {
        self == Class::Brdge
    }

    /// Number of constant symbols: 0 and 1, plus e when there is a unit.
    pub fn constant_count(self) -> u64 {
        if self.has_unit() {
            3
        } else {
            2
        }
    }

    pub fn is_residuated(self) -> bool {
        matches!(self, Class::Brdg | Class::Brdge)
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Class {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bdo" => Ok(Class::Bdo),
            "bdbo" => Ok(Class::Bdbo),
            "brdg" => Ok(Class::Brdg),
            "brdge" => Ok(Class::Brdge),
            other => Err(format!("unknown class `{other}`")),
        }
    }
}

/// Commutative, decreasing, square-increasing, unital.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Property {
    P1,
    P2,
    P3,
    P4,
}

impl Property {
    pub const ALL: [Property; 4] = [Property::P1, Property::P2, Property::P3, Property::P4];

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", *self as u8 + 1)
    }
}

impl FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "P1" => Ok(Property::P1),
            "P2" => Ok(Property::P2),
            "P3" => Ok(Property::P3),
            "P4" => Ok(Property::P4),
            other => Err(format!("unknown property `{other}`")),
        }
    }
}

/// A set of properties.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Props(u8);

impl Props {
    pub const EMPTY: Props = Props(0);

    pub fn of(list: &[Property]) -> Props {
        list.iter().fold(Props::EMPTY, |acc, &p| acc.with(p))
    }

    pub fn contains(self, p: Property) -> bool {
        self.0 & p.bit() != 0
    }

    pub fn with(self, p: Property) -> Props {
        Props(self.0 | p.bit())
    }

    pub fn without(self, p: Property) -> Props {
        Props(self.0 & !p.bit())
    }

    pub fn union(self, other: Props) -> Props {
        Props(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: Props) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Property> {
        Property::ALL.into_iter().filter(move |&p| self.contains(p))
    }

    /// All sixteen subsets, smallest bit pattern first.
    pub fn all_subsets() -> impl Iterator<Item = Props> {
        (0u8..16).map(Props)
    }

    /// Parses a comma separated list such as `P1,P3`. The empty string is the
    /// empty set.
    pub fn parse_list(s: &str) -> Result<Props, String> {
        let mut out = Props::EMPTY;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            out = out.with(part.parse()?);
        }
        Ok(out)
    }
}

impl fmt::Display for Props {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.iter().map(|p| p.to_string()).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// A class together with the properties assumed of it.
///
/// P4 is present exactly when the class is BRDGe, and other properties may
/// only be added to the residuated classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    class: Class,
    props: Props,
}

impl Signature {
    pub fn new(class: Class, props: Props) -> Result<Signature, FormulaError> {
        let unital = props.contains(Property::P4);
        if unital != class.has_unit() {
            return Err(FormulaError::BadSignature(if unital {
                format!("P4 requires class brdge, got {class}")
            } else {
                "class brdge requires P4".to_string()
            }));
        }
        if !class.is_residuated() && !props.is_empty() {
            return Err(FormulaError::BadSignature(format!(
                "class {class} admits no properties, got {props}"
            )));
        }
        Ok(Signature { class, props })
    }

    /// The signature with no properties beyond those the class forces.
    pub fn of_class(class: Class) -> Signature {
        let props = if class.has_unit() {
            Props::of(&[Property::P4])
        } else {
            Props::EMPTY
        };
        Signature { class, props }
    }

    pub fn class(self) -> Class {
        self.class
    }

    pub fn props(self) -> Props {
        self.props
    }

    pub fn has_op(self, op: Op) -> bool {
        self.class.has_op(op)
    }

    pub fn has_unit(self) -> bool {
        self.class.has_unit()
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.class, self.props)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Meet,
    Join,
    Prod,
    /// Left residual `a \ b`.
    Under,
    /// Right residual `a / b`.
    Over,
    Diamond,
}

impl Op {
    pub const BINARY: [Op; 5] = [Op::Meet, Op::Join, Op::Prod, Op::Under, Op::Over];

    pub fn arity(self) -> usize {
        if self == Op::Diamond {
            1
        } else {
            2
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Meet => "/\\",
            Op::Join => "\\/",
            Op::Prod => "*",
            Op::Under => "\\",
            Op::Over => "/",
            Op::Diamond => "<>",
        }
    }

    /// Key used for this operation in structure files.
    pub fn json_name(self) -> &'static str {
        match self {
            Op::Meet => "meet",
            Op::Join => "join",
            Op::Prod => "prod",
            Op::Under => "under",
            Op::Over => "over",
            Op::Diamond => "diamond",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            Op::Join => 1,
            Op::Meet => 2,
            Op::Prod | Op::Under | Op::Over => 3,
            Op::Diamond => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constant {
    Zero,
    One,
    Unit,
}

impl Constant {
    pub fn symbol(self) -> &'static str {
        match self {
            Constant::Zero => "0",
            Constant::One => "1",
            Constant::Unit => "e",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    /// Index into the variable table of the arena.
    Var(u32),
    Const(Constant),
    Unary(Op, TermId),
    Binary(Op, TermId, TermId),
}

/// Hash-consed term DAG with its variable table.
#[derive(Clone, Debug, Default)]
pub struct Terms {
    nodes: Vec<Node>,
    lookup: HashMap<Node, TermId>,
    vars: Vec<String>,
    var_lookup: HashMap<String, u32>,
}

impl PartialEq for Terms {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.vars == other.vars
    }
}

impl Eq for Terms {}

impl Terms {
    pub fn new() -> Terms {
        Terms::default()
    }

    fn intern(&mut self, node: Node) -> TermId {
        if let Some(&id) = self.lookup.get(&node) {
            return id;
        }
        let id = TermId(self.nodes.len() as u32);
        self.nodes.push(node);
        self.lookup.insert(node, id);
        id
    }

    pub fn var(&mut self, name: &str) -> TermId {
        let index = match self.var_lookup.get(name) {
            Some(&i) => i,
            None => {
                let i = self.vars.len() as u32;
                self.vars.push(name.to_string());
                self.var_lookup.insert(name.to_string(), i);
                i
            }
        };
        self.intern(Node::Var(index))
    }

    pub fn constant(&mut self, c: Constant) -> TermId {
        self.intern(Node::Const(c))
    }

    pub fn unary(&mut self, op: Op, a: TermId) -> TermId {
        debug_assert_eq!(op.arity(), 1);
        self.intern(Node::Unary(op, a))
    }

    pub fn binary(&mut self, op: Op, a: TermId, b: TermId) -> TermId {
        debug_assert_eq!(op.arity(), 2);
        self.intern(Node::Binary(op, a, b))
    }

    pub fn node(&self, id: TermId) -> Node {
        self.nodes[id.index()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn var_names(&self) -> &[String] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_lookup.get(name).map(|&i| i as usize)
    }

    pub fn display(&self, id: TermId) -> TermDisplay<'_> {
        TermDisplay { terms: self, id }
    }

    /// Value of one term, or `None` where an operation is undefined.
    pub fn evaluate<I: Interpretation>(&self, id: TermId, interp: &I, valuation: &[I::Elem]) -> Option<I::Elem> {
        // Children always precede their parents.
        let mut values: Vec<Option<I::Elem>> = Vec::with_capacity(id.index() + 1);
        for node in &self.nodes[..=id.index()] {
            let v = match *node {
                Node::Var(i) => valuation.get(i as usize).cloned(),
                Node::Const(c) => interp.constant(c),
                Node::Unary(op, a) => values[a.index()].as_ref().and_then(|a| interp.unary(op, a)),
                Node::Binary(op, a, b) => match (&values[a.index()], &values[b.index()]) {
                    (Some(a), Some(b)) => interp.binary(op, a, b),
                    _ => None,
                },
            };
            values.push(v);
        }
        values.pop().flatten()
    }

    fn write_term(&self, out: &mut fmt::Formatter<'_>, id: TermId, context: u8) -> fmt::Result {
        match self.node(id) {
            Node::Var(i) => out.write_str(&self.vars[i as usize]),
            Node::Const(c) => out.write_str(c.symbol()),
            Node::Unary(op, a) => {
                let wrap = op.precedence() < context;
                if wrap {
                    out.write_str("(")?;
                }
                out.write_str(op.symbol())?;
                self.write_term(out, a, op.precedence())?;
                if wrap {
                    out.write_str(")")?;
                }
                Ok(())
            }
            Node::Binary(op, a, b) => {
                let p = op.precedence();
                let wrap = p < context;
                if wrap {
                    out.write_str("(")?;
                }
                self.write_term(out, a, p)?;
                write!(out, " {} ", op.symbol())?;
                self.write_term(out, b, p + 1)?;
                if wrap {
                    out.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

pub struct TermDisplay<'a> {
    terms: &'a Terms,
    id: TermId,
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.terms.write_term(f, self.id, 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Eq,
    Le,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub rel: Relation,
    pub lhs: TermId,
    pub rhs: TermId,
}

/// Boolean combination of atoms. `And(vec![])` is true and `Or(vec![])` is
/// false.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn atoms(&self, out: &mut Vec<Atom>) {
        match self {
            Formula::Atom(a) => out.push(*a),
            Formula::Not(f) => f.atoms(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.atoms(out)),
        }
    }

    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(_) => 1,
            Formula::And(_) => 2,
            Formula::Not(_) => 3,
            Formula::Atom(_) => 4,
        }
    }

    fn write(&self, out: &mut fmt::Formatter<'_>, terms: &Terms, context: u8) -> fmt::Result {
        let wrap = self.precedence() <= context && !matches!(self, Formula::Atom(_) | Formula::Not(_));
        if wrap {
            out.write_str("(")?;
        }
        match self {
            Formula::Atom(a) => {
                terms.write_term(out, a.lhs, 0)?;
                out.write_str(match a.rel {
                    Relation::Eq => " = ",
                    Relation::Le => " <= ",
                })?;
                terms.write_term(out, a.rhs, 0)?;
            }
            Formula::Not(f) => {
                out.write_str("!")?;
                match **f {
                    Formula::Atom(_) => {
                        out.write_str("(")?;
                        f.write(out, terms, 0)?;
                        out.write_str(")")?;
                    }
                    _ => f.write(out, terms, 3)?,
                }
            }
            Formula::And(fs) | Formula::Or(fs) if fs.is_empty() => {
                // Not expressible directly in the grammar.
                let truth = matches!(self, Formula::And(_));
                out.write_str(if truth { "0 <= 0" } else { "1 <= 0" })?;
            }
            Formula::And(fs) | Formula::Or(fs) if fs.len() == 1 => fs[0].write(out, terms, context)?,
            Formula::And(fs) | Formula::Or(fs) => {
                let (sep, own) = if matches!(self, Formula::And(_)) {
                    (" & ", 2)
                } else {
                    (" | ", 1)
                };
                for (i, f) in fs.iter().enumerate() {
                    if i > 0 {
                        out.write_str(sep)?;
                    }
                    f.write(out, terms, own)?;
                }
            }
        }
        if wrap {
            out.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("symbol `{symbol}` is not in the signature of {class}")]
    NotInSignature { symbol: &'static str, class: Class },
    #[error("invalid signature: {0}")]
    BadSignature(String),
    #[error("expected a formula over bdo, got {0}")]
    NotBdo(Class),
}

/// The outcome of evaluating a formula in a (partial) interpretation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Evaluation {
    Satisfied,
    False,
    /// The first term, in DAG order, whose value is undefined.
    Undefined(TermId),
}

/// An interpretation of the symbols, possibly partial.
pub trait Interpretation {
    type Elem: Clone + PartialEq;

    fn constant(&self, c: Constant) -> Option<Self::Elem>;
    fn unary(&self, op: Op, a: &Self::Elem) -> Option<Self::Elem>;
    fn binary(&self, op: Op, a: &Self::Elem, b: &Self::Elem) -> Option<Self::Elem>;
    fn leq(&self, a: &Self::Elem, b: &Self::Elem) -> bool;
}

/// A quantifier-free formula over a signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QFFormula {
    sig: Signature,
    terms: Terms,
    body: Formula,
    reachable: Vec<TermId>,
}

impl QFFormula {
    /// Builds a formula, checking that every symbol it uses belongs to `sig`.
    pub fn new(sig: Signature, terms: Terms, body: Formula) -> Result<QFFormula, FormulaError> {
        let reachable = reachable_terms(&terms, &body);
        let out = QFFormula {
            sig,
            terms,
            body,
            reachable,
        };
        out.check_symbols(sig)?;
        Ok(out)
    }

    pub fn parse(text: &str, sig: Signature) -> Result<QFFormula, FormulaError> {
        parse_formula(text, sig)
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn terms(&self) -> &Terms {
        &self.terms
    }

    pub fn body(&self) -> &Formula {
        &self.body
    }

    /// Ids of the terms occurring in the formula, in increasing order.
    pub fn reachable(&self) -> &[TermId] {
        &self.reachable
    }

    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        self.body.atoms(&mut out);
        out
    }

    pub fn var_names(&self) -> &[String] {
        self.terms.var_names()
    }

    /// Indices of the variables that occur in the formula.
    pub fn occurring_vars(&self) -> Vec<usize> {
        self.reachable
            .iter()
            .filter_map(|&id| match self.terms.node(id) {
                Node::Var(i) => Some(i as usize),
                _ => None,
            })
            .collect()
    }

    /// Checks that every symbol used is available in `sig`.
    pub fn check_symbols(&self, sig: Signature) -> Result<(), FormulaError> {
        for &id in &self.reachable {
            match self.terms.node(id) {
                Node::Const(Constant::Unit) if !sig.has_unit() => {
                    return Err(FormulaError::NotInSignature {
                        symbol: "e",
                        class: sig.class(),
                    })
                }
                Node::Unary(op, _) | Node::Binary(op, _, _) if !sig.has_op(op) => {
                    return Err(FormulaError::NotInSignature {
                        symbol: op.symbol(),
                        class: sig.class(),
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// The same formula read over another signature.
    pub fn with_signature(&self, sig: Signature) -> Result<QFFormula, FormulaError> {
        self.check_symbols(sig)?;
        let mut out = self.clone();
        out.sig = sig;
        Ok(out)
    }

    pub fn size(&self) -> u64 {
        formula_size(self)
    }

    /// Evaluates under `valuation`, indexed by variable index.
    pub fn evaluate<I: Interpretation>(&self, interp: &I, valuation: &[I::Elem]) -> Evaluation {
        let mut scratch = Vec::new();
        self.evaluate_with(interp, valuation, &mut scratch)
    }

    /// Like [`QFFormula::evaluate`] but reuses `scratch` between calls.
    pub fn evaluate_with<I: Interpretation>(
        &self,
        interp: &I,
        valuation: &[I::Elem],
        scratch: &mut Vec<Option<I::Elem>>,
    ) -> Evaluation {
        scratch.clear();
        scratch.resize(self.terms.len(), None);
        for &id in &self.reachable {
            let value = match self.terms.node(id) {
                Node::Var(i) => Some(valuation[i as usize].clone()),
                Node::Const(c) => interp.constant(c),
                Node::Unary(op, a) => scratch[a.index()].as_ref().and_then(|a| interp.unary(op, a)),
                Node::Binary(op, a, b) => match (&scratch[a.index()], &scratch[b.index()]) {
                    (Some(a), Some(b)) => interp.binary(op, a, b),
                    _ => None,
                },
            };
            if value.is_none() {
                return Evaluation::Undefined(id);
            }
            scratch[id.index()] = value;
        }
        let holds = truth(&self.body, &|atom: &Atom| {
            let a = scratch[atom.lhs.index()].as_ref().expect("evaluated");
            let b = scratch[atom.rhs.index()].as_ref().expect("evaluated");
            match atom.rel {
                Relation::Eq => a == b,
                Relation::Le => interp.leq(a, b),
            }
        });
        if holds {
            Evaluation::Satisfied
        } else {
            Evaluation::False
        }
    }
}

impl fmt::Display for QFFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.body.write(f, &self.terms, 0)
    }
}

fn truth(f: &Formula, atom: &dyn Fn(&Atom) -> bool) -> bool {
    match f {
        Formula::Atom(a) => atom(a),
        Formula::Not(g) => !truth(g, atom),
        Formula::And(gs) => gs.iter().all(|g| truth(g, atom)),
        Formula::Or(gs) => gs.iter().any(|g| truth(g, atom)),
    }
}

fn reachable_terms(terms: &Terms, body: &Formula) -> Vec<TermId> {
    let mut seen = vec![false; terms.len()];
    let mut stack: Vec<TermId> = Vec::new();
    let mut atoms = Vec::new();
    body.atoms(&mut atoms);
    for a in atoms {
        stack.push(a.lhs);
        stack.push(a.rhs);
    }
    while let Some(id) = stack.pop() {
        if std::mem::replace(&mut seen[id.index()], true) {
            continue;
        }
        match terms.node(id) {
            Node::Unary(_, a) => stack.push(a),
            Node::Binary(_, a, b) => {
                stack.push(a);
                stack.push(b);
            }
            _ => {}
        }
    }
    (0..terms.len() as u32)
        .map(TermId)
        .filter(|id| seen[id.index()])
        .collect()
}

/// s(φ): operation occurrences counted over the atoms as trees, plus the
/// number of distinct variables, plus the number of constant symbols of the
/// class.
pub fn formula_size(phi: &QFFormula) -> u64 {
    let terms = &phi.terms;
    let mut ops = vec![0u64; terms.len()];
    for &id in &phi.reachable {
        ops[id.index()] = match terms.node(id) {
            Node::Var(_) | Node::Const(_) => 0,
            Node::Unary(_, a) => 1 + ops[a.index()],
            Node::Binary(_, a, b) => (1 + ops[a.index()]).saturating_add(ops[b.index()]),
        };
    }
    let occurrences = phi
        .atoms()
        .iter()
        .fold(0u64, |acc, a| acc.saturating_add(ops[a.lhs.index()]).saturating_add(ops[a.rhs.index()]));
    occurrences + phi.occurring_vars().len() as u64 + phi.sig.class().constant_count()
}

/// Replaces every `<>t` by `t * 1`, producing a formula over bdbo.
pub fn diamond_to_circ(phi: &QFFormula) -> Result<QFFormula, FormulaError> {
    if phi.sig.class() != Class::Bdo {
        return Err(FormulaError::NotBdo(phi.sig.class()));
    }
    let mut terms = Terms::new();
    // Keep variable indices stable.
    for name in phi.terms.var_names() {
        terms.var(name);
    }
    let mut map: Vec<Option<TermId>> = vec![None; phi.terms.len()];
    for &id in &phi.reachable {
        let new = match phi.terms.node(id) {
            Node::Var(i) => terms.var(&phi.terms.var_names()[i as usize]),
            Node::Const(c) => terms.constant(c),
            Node::Unary(Op::Diamond, a) => {
                let one = terms.constant(Constant::One);
                terms.binary(Op::Prod, map[a.index()].expect("child first"), one)
            }
            Node::Unary(op, a) => terms.unary(op, map[a.index()].expect("child first")),
            Node::Binary(op, a, b) => terms.binary(
                op,
                map[a.index()].expect("child first"),
                map[b.index()].expect("child first"),
            ),
        };
        map[id.index()] = Some(new);
    }
    let body = remap(&phi.body, &|t| map[t.index()].expect("reachable"));
    QFFormula::new(Signature::of_class(Class::Bdbo), terms, body)
}

fn remap(f: &Formula, map: &dyn Fn(TermId) -> TermId) -> Formula {
    match f {
        Formula::Atom(a) => Formula::Atom(Atom {
            rel: a.rel,
            lhs: map(a.lhs),
            rhs: map(a.rhs),
        }),
        Formula::Not(g) => Formula::Not(Box::new(remap(g, map))),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| remap(g, map)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| remap(g, map)).collect()),
    }
}

/// A universally quantified sentence `forall xs. body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniversalSentence {
    pub vars: Vec<String>,
    pub body: QFFormula,
}

impl UniversalSentence {
    /// Parses `forall x, y: body` or a bare body, whose free variables are
    /// then read as universally quantified.
    pub fn parse(text: &str, sig: Signature) -> Result<UniversalSentence, FormulaError> {
        let mut trimmed = text.trim_start();
        while let Some(comment) = trimmed.strip_prefix('#') {
            trimmed = comment.find('\n').map_or("", |i| &comment[i..]).trim_start();
        }
        let offset = text.len() - trimmed.len();
        let rest = trimmed
            .strip_prefix("forall")
            .filter(|r| r.starts_with(|c: char| c.is_whitespace()))
            .or_else(|| trimmed.strip_prefix('\u{2200}'));
        let Some(rest) = rest else {
            let body = parse_formula(text, sig)?;
            let vars = body.var_names().to_vec();
            return Ok(UniversalSentence { vars, body });
        };
        let sep = rest.find([':', '.']).ok_or(FormulaError::Syntax {
            pos: text.len(),
            message: "expected `:` after the quantified variables".into(),
        })?;
        let mut vars: Vec<String> = Vec::new();
        for v in rest[..sep].split([',', ' ', '\t', '\n']).filter(|v| !v.is_empty()) {
            if !is_ident(v) {
                return Err(FormulaError::Syntax {
                    pos: offset,
                    message: format!("`{v}` is not a variable name"),
                });
            }
            if !vars.iter().any(|x| x == v) {
                vars.push(v.to_string());
            }
        }
        let body_start = text.len() - rest.len() + sep + 1;
        let body = parse_formula(&text[body_start..], sig).map_err(|e| match e {
            FormulaError::Syntax { pos, message } => FormulaError::Syntax {
                pos: pos + body_start,
                message,
            },
            other => other,
        })?;
        for v in body.var_names() {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
        Ok(UniversalSentence { vars, body })
    }
}

impl fmt::Display for UniversalSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.vars.is_empty() {
            write!(f, "forall {}: ", self.vars.join(", "))?;
        }
        write!(f, "{}", self.body)
    }
}

/// The quantifier-free negation whose satisfiability refutes the sentence.
pub fn negate_for_validity(sentence: &UniversalSentence) -> QFFormula {
    let body = &sentence.body;
    QFFormula {
        sig: body.sig,
        terms: body.terms.clone(),
        body: body.body.clone().not(),
        reachable: body.reachable.clone(),
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
        && s != "e"
        && s != "forall"
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Const(Constant),
    Bin(Op),
    Diamond,
    Le,
    Eq,
    Not,
    And,
    Or,
    LParen,
    RParen,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, FormulaError> {
    let mut out = Vec::new();
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let at = |i: usize| bytes.get(i).map(|&(_, c)| c);
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            while at(i).is_some_and(|d| d != '\n') {
                i += 1;
            }
            continue;
        }
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '*' | '\u{2218}' | '\u{00b7}' => (Tok::Bin(Op::Prod), 1),
            '/' if at(i + 1) == Some('\\') => (Tok::Bin(Op::Meet), 2),
            '/' => (Tok::Bin(Op::Over), 1),
            '\\' if at(i + 1) == Some('/') => (Tok::Bin(Op::Join), 2),
            '\\' => (Tok::Bin(Op::Under), 1),
            '\u{2227}' => (Tok::Bin(Op::Meet), 1),
            '\u{2228}' => (Tok::Bin(Op::Join), 1),
            '<' if at(i + 1) == Some('>') => (Tok::Diamond, 2),
            '<' if at(i + 1) == Some('=') => (Tok::Le, 2),
            '\u{25c7}' => (Tok::Diamond, 1),
            '\u{2264}' => (Tok::Le, 1),
            '=' => (Tok::Eq, 1),
            '!' | '\u{00ac}' => (Tok::Not, 1),
            '&' => (Tok::And, 1),
            '|' => (Tok::Or, 1),
            '0' | '1' if !at(i + 1).is_some_and(|d| d.is_ascii_alphanumeric()) => (
                Tok::Const(if c == '0' {
                    Constant::Zero
                } else {
                    Constant::One
                }),
                1,
            ),
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while at(j).is_some_and(|d| d.is_ascii_alphanumeric() || d == '_' || d == '\'') {
                    j += 1;
                }
                let word: String = bytes[i..j].iter().map(|&(_, c)| c).collect();
                let tok = if word == "e" {
                    Tok::Const(Constant::Unit)
                } else {
                    Tok::Ident(word)
                };
                (tok, j - i)
            }
            other => {
                return Err(FormulaError::Syntax {
                    pos,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((tok, pos));
        i += len;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    sig: Signature,
    terms: Terms,
}

type PResult<T> = Result<T, FormulaError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(FormulaError::Syntax {
            pos: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if *self.peek() == tok {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn formula(&mut self) -> PResult<Formula> {
        let first = self.conjunction()?;
        if *self.peek() != Tok::Or {
            return Ok(first);
        }
        let mut parts = vec![first];
        while *self.peek() == Tok::Or {
            self.pos += 1;
            parts.push(self.conjunction()?);
        }
        Ok(Formula::Or(parts))
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let first = self.negation()?;
        if *self.peek() != Tok::And {
            return Ok(first);
        }
        let mut parts = vec![first];
        while *self.peek() == Tok::And {
            self.pos += 1;
            parts.push(self.negation()?);
        }
        Ok(Formula::And(parts))
    }

    fn negation(&mut self) -> PResult<Formula> {
        if *self.peek() == Tok::Not {
            self.pos += 1;
            return Ok(self.negation()?.not());
        }
        if *self.peek() == Tok::LParen {
            // Either a parenthesised formula or an atom whose left term starts
            // with a parenthesis.
            let start = self.pos;
            let saved = self.terms.clone();
            match self.atom() {
                Ok(a) => return Ok(a),
                Err(atom_err) => {
                    self.pos = start;
                    self.terms = saved;
                    self.pos += 1;
                    let inner = self.formula();
                    let inner = match inner {
                        Ok(f) => f,
                        Err(e) => return Err(further(atom_err, e)),
                    };
                    if let Err(e) = self.expect(Tok::RParen, "`)`") {
                        return Err(further(atom_err, e));
                    }
                    return Ok(inner);
                }
            }
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Formula> {
        let lhs = self.term(1)?;
        let rel = match self.peek() {
            Tok::Le => Relation::Le,
            Tok::Eq => Relation::Eq,
            _ => return self.error("expected `=` or `<=`"),
        };
        self.pos += 1;
        let rhs = self.term(1)?;
        Ok(Formula::Atom(Atom { rel, lhs, rhs }))
    }

    /// Precedence climbing over the binary operations; every level is left
    /// associative.
    fn term(&mut self, min: u8) -> PResult<TermId> {
        let mut lhs = self.prefix()?;
        loop {
            let op = match self.peek() {
                Tok::Bin(op) if op.precedence() >= min => *op,
                _ => return Ok(lhs),
            };
            self.check_op(op)?;
            self.pos += 1;
            let rhs = self.term(op.precedence() + 1)?;
            lhs = self.terms.binary(op, lhs, rhs);
        }
    }

    fn check_op(&self, op: Op) -> PResult<()> {
        if self.sig.has_op(op) {
            Ok(())
        } else {
            Err(FormulaError::NotInSignature {
                symbol: op.symbol(),
                class: self.sig.class(),
            })
        }
    }

    fn prefix(&mut self) -> PResult<TermId> {
        match self.peek().clone() {
            Tok::Diamond => {
                self.check_op(Op::Diamond)?;
                self.pos += 1;
                let a = self.prefix()?;
                Ok(self.terms.unary(Op::Diamond, a))
            }
            Tok::Ident(name) => {
                self.pos += 1;
                Ok(self.terms.var(&name))
            }
            Tok::Const(c) => {
                if c == Constant::Unit && !self.sig.has_unit() {
                    return Err(FormulaError::NotInSignature {
                        symbol: "e",
                        class: self.sig.class(),
                    });
                }
                self.pos += 1;
                Ok(self.terms.constant(c))
            }
            Tok::LParen => {
                self.pos += 1;
                let t = self.term(1)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::End => self.error("unexpected end of input"),
            _ => self.error("expected a term"),
        }
    }
}

fn further(a: FormulaError, b: FormulaError) -> FormulaError {
    match (&a, &b) {
        (FormulaError::Syntax { pos: pa, .. }, FormulaError::Syntax { pos: pb, .. }) if pa > pb => a,
        (FormulaError::Syntax { .. }, FormulaError::Syntax { .. }) => b,
        (FormulaError::Syntax { .. }, _) => b,
        _ => a,
    }
}

/// Parses a quantifier-free formula over `sig`.
pub fn parse_formula(text: &str, sig: Signature) -> Result<QFFormula, FormulaError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        sig,
        terms: Terms::new(),
    };
    let body = p.formula()?;
    if *p.peek() != Tok::End {
        return p.error("unexpected trailing input");
    }
    QFFormula::new(sig, p.terms, body)
}
