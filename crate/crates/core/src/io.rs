//! JSON documents for structures, algebras, frames, certificates and models.
//!
//! Element references are carrier indices. Order pairs are read with
//! reflexive closure (and transitive closure for algebras and frames); written documents list only the strict pairs.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, FiniteAlgebra, Lattice, Operations};
use crate::bits::{self, Mask};
use crate::duality::{DiamondFrame, DualityError, Frame, GroupoidFrame, Poset};
use crate::formula::{Class, FormulaError, Op, Property, Props, Signature};
use crate::solver::Model;
use crate::structure::{Certificate, Condition, PartialStructure, PrimeFilter, StructureError, Witness};

/// Version written to the top-level `schema` field.
pub const SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Duality(#[from] DualityError),
    #[error("{0}")]
    Invalid(String),
}

fn check_schema(schema: Option<u32>) -> Result<(), IoError> {
    match schema {
        Some(v) if v != SCHEMA => Err(IoError::Schema(v)),
        _ => Ok(()),
    }
}

fn props_list(p: Props) -> Vec<Property> {
    p.iter().collect()
}

fn signature(class: Class, properties: &[Property]) -> Result<Signature, IoError> {
    let mut props = Props::of(properties);
    if class.has_unit() {
        props = props.with(Property::P4);
    }
    Ok(Signature::new(class, props)?)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpsDoc {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub meet: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub join: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prod: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub under: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub over: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diamond: Vec<[usize; 2]>,
}

impl OpsDoc {
    fn binary(&self, op: Op) -> &[[usize; 3]] {
        match op {
            Op::Meet => &self.meet,
            Op::Join => &self.join,
            Op::Prod => &self.prod,
            Op::Under => &self.under,
            Op::Over => &self.over,
            Op::Diamond => &[],
        }
    }

    fn binary_mut(&mut self, op: Op) -> &mut Vec<[usize; 3]> {
        match op {
            Op::Meet => &mut self.meet,
            Op::Join => &mut self.join,
            Op::Prod => &mut self.prod,
            Op::Under => &mut self.under,
            Op::Over => &mut self.over,
            Op::Diamond => unreachable!("diamond is unary"),
        }
    }
}

/// A partial structure, or a total algebra when every entry is listed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<u32>,
    pub class: Class,
    #[serde(default)]
    pub properties: Vec<Property>,
    pub carrier: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    #[serde(default)]
    pub leq: Vec<[usize; 2]>,
    #[serde(default)]
    pub ops: OpsDoc,
    pub zero: usize,
    pub one: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<usize>,
}

impl StructureDoc {
    pub fn parse(text: &str) -> Result<StructureDoc, IoError> {
        let doc: StructureDoc = serde_json::from_str(text)?;
        check_schema(doc.schema)?;
        Ok(doc)
    }

    pub fn of_structure(s: &PartialStructure, props: Props) -> StructureDoc {
        let n = s.size();
        let mut ops = OpsDoc::default();
        for (op, a, b, c) in s.all_entries() {
            if op == Op::Diamond {
                ops.diamond.push([a, c]);
            } else {
                ops.binary_mut(op).push([a, b, c]);
            }
        }
        StructureDoc {
            schema: None,
            class: s.class(),
            properties: props_list(if s.class().has_unit() {
                props.without(Property::P4)
            } else {
                props
            }),
            carrier: n,
            names: s.names().map(<[String]>::to_vec),
            leq: (0..n)
                .flat_map(|a| (0..n).filter(move |&b| a != b).map(move |b| [a, b]))
                .filter(|&[a, b]| s.leq(a, b))
                .collect(),
            ops,
            zero: s.zero(),
            one: s.one(),
            e: s.unit(),
        }
    }

    pub fn of_algebra(a: &FiniteAlgebra) -> StructureDoc {
        let s = a.to_partial().expect("algebras convert to structures");
        StructureDoc::of_structure(&s, a.signature().props())
    }

    /// The structure and the properties it is meant to have. For brdge the
    /// property set always includes P4.
    pub fn to_structure(&self) -> Result<(PartialStructure, Props), IoError> {
        let sig = signature(self.class, &self.properties)?;
        let mut s = PartialStructure::new(sig, self.carrier, self.zero, self.one, self.e)?;
        if let Some(names) = &self.names {
            s = s.with_names(names.clone())?;
        }
        for &[a, b] in &self.leq {
            s.set_leq(a, b)?;
        }
        for op in Op::BINARY {
            for &[a, b, c] in self.ops.binary(op) {
                s.define(op, a, b, c)?;
            }
        }
        for &[a, c] in &self.ops.diamond {
            s.define_diamond(a, c)?;
        }
        Ok((s, sig.props()))
    }

    /// A total algebra. The order must be a lattice order; meet and join
    /// entries may be omitted but must agree with the order when given.
    /// Axioms are not checked.
    pub fn to_algebra(&self) -> Result<FiniteAlgebra, IoError> {
        let sig = signature(self.class, &self.properties)?;
        let n = self.carrier;
        if n == 0 {
            return Err(IoError::Invalid("empty carrier".into()));
        }
        let in_range = |i: usize| {
            if i < n {
                Ok(i)
            } else {
                Err(IoError::Structure(StructureError::OutOfRange(i)))
            }
        };
        let mut leq = vec![false; n * n];
        for a in 0..n {
            leq[a * n + a] = true;
        }
        for &[a, b] in &self.leq {
            leq[in_range(a)? * n + in_range(b)?] = true;
        }
        for k in 0..n {
            for a in 0..n {
                for b in 0..n {
                    if leq[a * n + k] && leq[k * n + b] {
                        leq[a * n + b] = true;
                    }
                }
            }
        }
        if let Some((a, b)) = (0..n * n).map(|i| (i / n, i % n)).find(|&(a, b)| a != b && leq[a * n + b] && leq[b * n + a]) {
            return Err(IoError::Invalid(format!("the order is not antisymmetric: {a} and {b}")));
        }
        let lattice = Lattice::of_order(n, leq)?;
        if lattice.zero() != self.zero || lattice.one() != self.one {
            return Err(IoError::Invalid("zero and one are not the bounds of the order".into()));
        }
        for op in [Op::Meet, Op::Join] {
            for &[a, b, c] in self.ops.binary(op) {
                let expected = if op == Op::Meet {
                    lattice.meet(in_range(a)?, in_range(b)?)
                } else {
                    lattice.join(in_range(a)?, in_range(b)?)
                };
                if expected != c {
                    return Err(IoError::Invalid(format!(
                        "{}({a},{b}) is {expected} in the order, not {c}",
                        op.json_name()
                    )));
                }
            }
        }
        let table = |op: Op| -> Result<Option<Vec<u16>>, IoError> {
            if !sig.has_op(op) {
                if !self.ops.binary(op).is_empty() {
                    return Err(StructureError::OpNotInSignature(op.json_name(), self.class).into());
                }
                return Ok(None);
            }
            let mut cells = vec![None; n * n];
            for &[a, b, c] in self.ops.binary(op) {
                let cell = &mut cells[in_range(a)? * n + in_range(b)?];
                if cell.is_some_and(|old| old != c) {
                    return Err(IoError::Invalid(format!("conflicting entries for {}({a},{b})", op.json_name())));
                }
                *cell = Some(in_range(c)?);
            }
            total(op, n, cells).map(Some)
        };
        let diamond = if sig.has_op(Op::Diamond) {
            let mut cells = vec![None; n];
            for &[a, c] in &self.ops.diamond {
                cells[in_range(a)?] = Some(in_range(c)?);
            }
            Some(total(Op::Diamond, 1, cells)?)
        } else {
            if !self.ops.diamond.is_empty() {
                return Err(StructureError::OpNotInSignature("diamond", self.class).into());
            }
            None
        };
        let ops = Operations {
            prod: table(Op::Prod)?,
            under: table(Op::Under)?,
            over: table(Op::Over)?,
            diamond,
            unit: self.e,
        };
        Ok(FiniteAlgebra::new(sig, Arc::new(lattice), ops)?)
    }
}

fn total(op: Op, width: usize, cells: Vec<Option<usize>>) -> Result<Vec<u16>, IoError> {
    cells
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.map(|c| c as u16).ok_or_else(|| {
                let at = if op == Op::Diamond {
                    format!("{i}")
                } else {
                    format!("{},{}", i / width, i % width)
                };
                IoError::Invalid(format!("algebra is missing {}({at})", op.json_name()))
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<u32>,
    pub points: usize,
    #[serde(default)]
    pub leq: Vec<[usize; 2]>,
    #[serde(rename = "R", default)]
    pub r: Vec<Vec<usize>>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<usize>>,
    /// Arity of `R`; only needed when `R` is empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arity: Option<usize>,
}

impl FrameDoc {
    pub fn parse(text: &str) -> Result<FrameDoc, IoError> {
        let doc: FrameDoc = serde_json::from_str(text)?;
        check_schema(doc.schema)?;
        Ok(doc)
    }

    pub fn of_frame(frame: &Frame) -> FrameDoc {
        let poset = frame.poset();
        let leq = poset.strict_pairs().into_iter().map(|(x, y)| [x, y]).collect();
        let mut doc = match frame {
            Frame::Groupoid(g) => FrameDoc {
                schema: None,
                points: g.size(),
                leq,
                r: g.triples().into_iter().map(|(x, y, z)| vec![x, y, z]).collect(),
                e: g.units.map(|e| bits::ones(e).collect()),
                arity: None,
            },
            Frame::Diamond(d) => FrameDoc {
                schema: None,
                points: poset.size(),
                leq,
                r: (0..poset.size())
                    .flat_map(|x| bits::ones(d.rel[x]).map(move |y| vec![x, y]))
                    .collect(),
                e: None,
                arity: None,
            },
        };
        if doc.r.is_empty() {
            doc.arity = Some(if matches!(frame, Frame::Diamond(_)) { 2 } else { 3 });
        }
        doc
    }

    /// Binary `R` gives a diamond frame, ternary a groupoid frame. With an
    /// empty `R` and no `arity`, a groupoid frame.
    pub fn to_frame(&self) -> Result<Frame, IoError> {
        let n = self.points;
        let pairs: Vec<(usize, usize)> = self.leq.iter().map(|&[x, y]| (x, y)).collect();
        let poset = Poset::from_pairs(n, &pairs)?;
        let check = |t: &[usize]| match t.iter().find(|&&x| x >= n) {
            Some(&x) => Err(IoError::Invalid(format!("point {x} is outside the frame"))),
            None => Ok(()),
        };
        let arity = self.r.first().map(Vec::len).or(self.arity).unwrap_or(3);
        if self.r.iter().any(|t| t.len() != arity) || !(arity == 2 || arity == 3) {
            return Err(IoError::Invalid("R must be all pairs or all triples".into()));
        }
        if arity == 2 {
            if self.e.is_some() {
                return Err(IoError::Invalid("E is only meaningful with a ternary R".into()));
            }
            let mut rel: Vec<Mask> = vec![0; n];
            for t in &self.r {
                check(t)?;
                rel[t[0]] |= bits::bit(t[1]);
            }
            return Ok(Frame::Diamond(DiamondFrame { poset, rel }));
        }
        let mut rel: Vec<Mask> = vec![0; n * n];
        for t in &self.r {
            check(t)?;
            rel[t[0] * n + t[1]] |= bits::bit(t[2]);
        }
        let units = match &self.e {
            Some(e) => {
                check(e)?;
                Some(bits::from_iter(e.iter().copied()))
            }
            None => None,
        };
        Ok(Frame::Groupoid(GroupoidFrame { poset, rel, units }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionDoc {
    Prod,
    Under,
    Over,
    UnitRight,
    UnitLeft,
}

impl From<Condition> for ConditionDoc {
    fn from(c: Condition) -> Self {
        match c {
            Condition::Prod => ConditionDoc::Prod,
            Condition::Under => ConditionDoc::Under,
            Condition::Over => ConditionDoc::Over,
            Condition::UnitRight => ConditionDoc::UnitRight,
            Condition::UnitLeft => ConditionDoc::UnitLeft,
        }
    }
}

impl From<ConditionDoc> for Condition {
    fn from(c: ConditionDoc) -> Self {
        match c {
            ConditionDoc::Prod => Condition::Prod,
            ConditionDoc::Under => Condition::Under,
            ConditionDoc::Over => Condition::Over,
            ConditionDoc::UnitRight => Condition::UnitRight,
            ConditionDoc::UnitLeft => Condition::UnitLeft,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessDoc {
    pub condition: ConditionDoc,
    pub filter: usize,
    pub entry: [usize; 3],
    pub first: usize,
    pub second: usize,
}

/// A certificate without the relation table, which is recomputed on demand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateDoc {
    pub properties: Vec<Property>,
    /// Each filter as its sorted list of elements.
    pub family: Vec<Vec<usize>>,
    /// `[a, b, f]`: filter `f` contains `a` and omits `b`.
    pub separation: Vec<[usize; 3]>,
    pub witnesses: Vec<WitnessDoc>,
}

impl CertificateDoc {
    pub fn of_certificate(c: &Certificate) -> CertificateDoc {
        CertificateDoc {
            properties: props_list(c.props),
            family: c.family.iter().map(|f| f.elements()).collect(),
            separation: c.separation.iter().map(|&(a, b, i)| [a, b, i]).collect(),
            witnesses: c
                .witnesses
                .iter()
                .map(|w| WitnessDoc {
                    condition: w.condition.into(),
                    filter: w.filter,
                    entry: w.entry,
                    first: w.first,
                    second: w.second,
                })
                .collect(),
        }
    }

    pub fn to_certificate(&self) -> Result<Certificate, IoError> {
        let mut family = Vec::with_capacity(self.family.len());
        for f in &self.family {
            if let Some(&x) = f.iter().find(|&&x| x >= crate::structure::MAX_CARRIER) {
                return Err(StructureError::OutOfRange(x).into());
            }
            family.push(PrimeFilter(bits::from_iter(f.iter().copied())));
        }
        Ok(Certificate {
            props: Props::of(&self.properties),
            family,
            relation: None,
            separation: self.separation.iter().map(|&[a, b, i]| (a, b, i)).collect(),
            witnesses: self
                .witnesses
                .iter()
                .map(|w| Witness {
                    condition: w.condition.into(),
                    filter: w.filter,
                    entry: w.entry,
                    first: w.first,
                    second: w.second,
                })
                .collect(),
        })
    }
}

/// A satisfying partial structure together with its valuation and
/// certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub schema: u32,
    pub structure: StructureDoc,
    pub valuation: BTreeMap<String, usize>,
    pub certificate: CertificateDoc,
}

impl ModelDoc {
    pub fn of_model(m: &Model, var_names: &[String], props: Props) -> ModelDoc {
        ModelDoc {
            schema: SCHEMA,
            structure: StructureDoc::of_structure(&m.structure, props),
            valuation: var_names.iter().cloned().zip(m.valuation.iter().copied()).collect(),
            certificate: CertificateDoc::of_certificate(&m.certificate),
        }
    }

    pub fn parse(text: &str) -> Result<ModelDoc, IoError> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        check_schema(Some(doc.schema))?;
        Ok(doc)
    }
}
