//! Brute-force enumeration of small finite algebras, used as an independent
//! reference for the solver.
//!
//! Distributive lattices come from their posets of join-irreducibles
//! (downset lattices); operators are enumerated by their values on
//! join-irreducibles and extended by joins. Isomorphic copies are removed.

use std::collections::HashSet;
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{FiniteAlgebra, Lattice, Operations};
use crate::bits::{self, bit, Mask};
use crate::formula::{Class, Evaluation, FormulaError, Props, QFFormula, Signature};
use crate::par;

/// Largest lattice size the enumerator accepts.
pub const MAX_LATTICE_SIZE: usize = 7;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("lattice size {0} exceeds the limit of {MAX_LATTICE_SIZE}")]
    SizeGuard(usize),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// A finite poset, stored as the strict down-set of each element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosetSeed {
    pub below: Vec<Mask>,
}

impl PosetSeed {
    pub fn len(&self) -> usize {
        self.below.len()
    }

    pub fn is_empty(&self) -> bool {
        self.below.is_empty()
    }

    /// Down-closed subsets, smallest first.
    pub fn downsets(&self) -> Vec<Mask> {
        let k = self.len();
        let mut out: Vec<Mask> = (0..1u64 << k)
            .filter(|&d| bits::ones(d).all(|x| self.below[x] & !d == 0))
            .collect();
        out.sort_by_key(|&d| (d.count_ones(), d));
        out
    }

    fn downset_count(&self) -> usize {
        let k = self.len();
        (0..1u64 << k)
            .filter(|&d| bits::ones(d).all(|x| self.below[x] & !d == 0))
            .count()
    }

    /// Smallest encoding of the strict order over all relabelings.
    fn canonical_code(&self) -> u64 {
        let k = self.len();
        let mut best = u64::MAX;
        let mut perm: Vec<usize> = (0..k).collect();
        permutations(&mut perm, 0, &mut |p| {
            let mut code = 0u64;
            for x in 0..k {
                for y in bits::ones(self.below[x]) {
                    code |= bit(p[y] * k + p[x]);
                }
            }
            best = best.min(code);
        });
        best
    }
}

fn permutations(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Every bounded distributive lattice with at most `max_size` elements, once
/// up to isomorphism, ordered by size.
pub fn enumerate_distributive_lattices(max_size: usize) -> Result<Vec<Arc<Lattice>>, OracleError> {
    Ok(enumerate_posets(max_size)?
        .iter()
        .map(|p| Arc::new(Lattice::of_sets(&p.downsets()).expect("downsets form a lattice")))
        .collect())
}

/// Posets whose downset lattice has at most `max_size` elements, once up to
/// isomorphism, ordered by the size of that lattice.
pub fn enumerate_posets(max_size: usize) -> Result<Vec<PosetSeed>, OracleError> {
    if max_size > MAX_LATTICE_SIZE {
        return Err(OracleError::SizeGuard(max_size));
    }
    let mut found: Vec<(usize, u64, PosetSeed)> = Vec::new();
    let mut seen = HashSet::new();
    // Elements are added in a natural labeling: each new element is maximal
    // and lies above a down-closed set of the existing ones. Adding elements
    // never removes downsets, so the count bound prunes.
    let mut stack = vec![PosetSeed { below: Vec::new() }];
    while let Some(p) = stack.pop() {
        let count = p.downset_count();
        if count > max_size {
            continue;
        }
        let code = p.canonical_code();
        if seen.insert((p.len(), code)) {
            found.push((count, code, p.clone()));
        } else {
            continue;
        }
        for d in p.downsets() {
            let mut next = p.clone();
            next.below.push(d);
            stack.push(next);
        }
    }
    found.sort_by_key(|(count, code, p)| (*count, p.len(), *code));
    Ok(found.into_iter().map(|(_, _, p)| p).collect())
}

/// All algebras of `class` satisfying `q` on the lattice `l`, once up to
/// isomorphism.
pub fn enumerate_operators(l: &Arc<Lattice>, class: Class, q: Props) -> Result<Vec<FiniteAlgebra>, OracleError> {
    let sig = Signature::new(class, q)?;
    let n = l.size();
    let joins = l.join_irreducibles();
    let autos = l.automorphisms();
    let unary = class == Class::Bdo;
    // The points at which the operator is chosen freely.
    let points: Vec<(usize, usize)> = if unary {
        joins.iter().map(|&j| (j, j)).collect()
    } else {
        joins.iter().flat_map(|&i| joins.iter().map(move |&j| (i, j))).collect()
    };
    let mut assignments: Vec<Vec<u16>> = Vec::new();
    let mut current: Vec<u16> = Vec::with_capacity(points.len());
    assign(l, &points, &mut current, &mut assignments);

    let build = |values: &Vec<u16>| -> Option<FiniteAlgebra> {
        let table = extend(l, &joins, values, unary);
        if !autos
            .iter()
            .all(|sigma| table <= permute(&table, sigma, n, unary))
        {
            return None;
        }
        let mut ops = Operations::default();
        if unary {
            ops.diamond = Some(table);
        } else {
            if class.is_residuated() {
                let (under, over) = residuals(l, &table);
                ops.under = Some(under);
                ops.over = Some(over);
            }
            ops.prod = Some(table);
        }
        let base = if class == Class::Brdge { Class::Brdg } else { class };
        let algebra = FiniteAlgebra::new(Signature::of_class(base), l.clone(), ops).ok()?;
        let holds = algebra.satisfied_properties();
        if !q.is_subset(holds) {
            return None;
        }
        let mut ops = algebra.operations().clone();
        if class == Class::Brdge {
            ops.unit = algebra.find_unit();
        }
        FiniteAlgebra::new(sig, l.clone(), ops).ok()
    };
    Ok(par::map(&assignments, build).into_iter().flatten().collect())
}

/// Monotone assignments of lattice elements to `points`, where points are
/// ordered componentwise and listed in an order extending it.
fn assign(l: &Lattice, points: &[(usize, usize)], current: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
    let k = current.len();
    if k == points.len() {
        out.push(current.clone());
        return;
    }
    let (i, j) = points[k];
    let lower = (0..k)
        .filter(|&m| l.leq(points[m].0, i) && l.leq(points[m].1, j))
        .fold(l.zero(), |acc, m| l.join(acc, current[m] as usize));
    for v in 0..l.size() {
        if l.leq(lower, v) {
            current.push(v as u16);
            assign(l, points, current, out);
            current.pop();
        }
    }
}

/// Extends values on join-irreducibles to the whole lattice by joins.
fn extend(l: &Lattice, joins: &[usize], values: &[u16], unary: bool) -> Vec<u16> {
    let n = l.size();
    let m = joins.len();
    if unary {
        return (0..n)
            .map(|x| {
                (0..m)
                    .filter(|&a| l.leq(joins[a], x))
                    .fold(l.zero(), |acc, a| l.join(acc, values[a] as usize)) as u16
            })
            .collect();
    }
    let mut table = vec![0u16; n * n];
    for x in 0..n {
        for y in 0..n {
            let mut v = l.zero();
            for a in (0..m).filter(|&a| l.leq(joins[a], x)) {
                for b in (0..m).filter(|&b| l.leq(joins[b], y)) {
                    v = l.join(v, values[a * m + b] as usize);
                }
            }
            table[x * n + y] = v as u16;
        }
    }
    table
}

fn permute(table: &[u16], sigma: &[u16], n: usize, unary: bool) -> Vec<u16> {
    let mut out = vec![0u16; table.len()];
    if unary {
        for x in 0..n {
            out[sigma[x] as usize] = sigma[table[x] as usize];
        }
    } else {
        for x in 0..n {
            for y in 0..n {
                out[sigma[x] as usize * n + sigma[y] as usize] = sigma[table[x * n + y] as usize];
            }
        }
    }
    out
}

/// `x \ z` is the join of all `y` with `x * y <= z`, and `z / y` the join of
/// all `x` with `x * y <= z`.
fn residuals(l: &Lattice, prod: &[u16]) -> (Vec<u16>, Vec<u16>) {
    let n = l.size();
    let mut under = vec![0u16; n * n];
    let mut over = vec![0u16; n * n];
    for a in 0..n {
        for z in 0..n {
            under[a * n + z] = (0..n)
                .filter(|&y| l.leq(prod[a * n + y] as usize, z))
                .fold(l.zero(), |acc, y| l.join(acc, y)) as u16;
            over[z * n + a] = (0..n)
                .filter(|&x| l.leq(prod[x * n + a] as usize, z))
                .fold(l.zero(), |acc, x| l.join(acc, x)) as u16;
        }
    }
    (under, over)
}

/// Exhaustive check of the class axioms and the properties `q`.
pub fn is_member(a: &FiniteAlgebra, class: Class, q: Props) -> bool {
    a.check_axioms(class, q).is_ok()
}

/// Result of a bounded brute-force search. `Exhausted` only means that no
/// algebra up to the bound works.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleOutcome {
    Witness {
        algebra: FiniteAlgebra,
        valuation: Vec<usize>,
    },
    Exhausted,
}

/// All algebras of a signature up to a size, enumerated once and reused.
#[derive(Clone, Debug)]
pub struct Oracle {
    sig: Signature,
    max_size: usize,
    algebras: Vec<FiniteAlgebra>,
}

impl Oracle {
    pub fn new(sig: Signature, max_size: usize) -> Result<Oracle, OracleError> {
        let mut algebras = Vec::new();
        for l in enumerate_distributive_lattices(max_size)? {
            algebras.extend(enumerate_operators(&l, sig.class(), sig.props())?);
        }
        Ok(Oracle {
            sig,
            max_size,
            algebras,
        })
    }

    /// The subset satisfying additional properties, without re-enumerating.
    pub fn restrict(&self, sig: Signature) -> Oracle {
        assert_eq!(sig.class(), self.sig.class());
        let algebras = self
            .algebras
            .iter()
            .filter(|a| is_member(a, sig.class(), sig.props()))
            .filter_map(|a| a.with_signature(sig).ok())
            .collect();
        Oracle {
            sig,
            max_size: self.max_size,
            algebras,
        }
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn algebras(&self) -> &[FiniteAlgebra] {
        &self.algebras
    }

    /// The first algebra (smallest first) and valuation satisfying `phi`.
    pub fn find_witness(&self, phi: &QFFormula) -> Result<OracleOutcome, OracleError> {
        phi.check_symbols(self.sig)?;
        let vars = phi.var_names().len();
        let found = par::find_map_first(&self.algebras, |a| {
            let n = a.size();
            let mut valuation = vec![0usize; vars];
            let mut scratch = Vec::new();
            loop {
                if phi.evaluate_with(a, &valuation, &mut scratch) == Evaluation::Satisfied {
                    return Some((a.clone(), valuation));
                }
                // Next valuation in odometer order.
                let mut i = 0;
                loop {
                    if i == vars {
                        return None;
                    }
                    valuation[i] += 1;
                    if valuation[i] < n {
                        break;
                    }
                    valuation[i] = 0;
                    i += 1;
                }
            }
        });
        Ok(match found {
            Some((algebra, valuation)) => OracleOutcome::Witness { algebra, valuation },
            None => OracleOutcome::Exhausted,
        })
    }
}

/// Searches every algebra of the signature up to `max_size` elements.
pub fn brute_force_sat(phi: &QFFormula, sig: Signature, max_size: usize) -> Result<OracleOutcome, OracleError> {
    Oracle::new(sig, max_size)?.find_witness(phi)
}
