//! Two-person corridor tiling games, the modal formula describing a winning
//! strategy, and its translation into a quantifier-free diamond formula.
//!
//! Used as a generator of large structured formulas and as a consistency
//! check between the game solver, Kripke semantics and the algebraic side.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use varisat::{ExtendFormula, Lit, Solver};

use crate::algebra::FiniteAlgebra;
use crate::bits::has;
use crate::duality::{canonical_frame, DualityError, Frame};
use crate::formula::{
    Atom, Class, Constant, Evaluation, Formula, Interpretation, Op, QFFormula, Relation, Signature, TermId, Terms,
};

/// Game positions explored by [`solve_game`] before giving up.
pub const MAX_GAME_POSITIONS: u64 = 1 << 22;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TilingError {
    #[error("an instance needs the boundary tile and at least one more tile")]
    TooFewTiles,
    #[error("the boundary tile must have one colour on all four sides")]
    BoundaryTile,
    #[error("tile {0} uses a colour outside 0..colors")]
    Colour(usize),
    #[error("the corridor needs at least one column")]
    NoColumns,
    #[error("first row has {found} tiles, expected {expected}")]
    FirstRowLength { expected: usize, found: usize },
    #[error("first row column {column} uses tile {tile}, expected 1..={max}")]
    FirstRowTile { column: usize, tile: usize, max: usize },
    #[error("game too large: {0} positions")]
    Budget(u128),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("box over `{0}` has no translation")]
    UnsupportedBox(String),
    #[error("universal modality under another connective: `{0}`")]
    NestedForall(String),
    #[error("the initial conjunction is 0, so no world can start the play")]
    NoInitialWorld,
    #[error("expected a bdo, found {0:?}")]
    WrongClass(Class),
    #[error(transparent)]
    Duality(#[from] DualityError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tile {
    pub left: u32,
    pub right: u32,
    pub up: u32,
    pub down: u32,
}

impl Tile {
    pub fn plain(c: u32) -> Tile {
        Tile {
            left: c,
            right: c,
            up: c,
            down: c,
        }
    }
}

/// Tile 0 is the boundary tile, the last tile is the winning one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TilingInstance {
    pub colors: u32,
    pub tiles: Vec<Tile>,
    pub n: usize,
    #[serde(rename = "firstRow")]
    pub first_row: Vec<usize>,
}

impl TilingInstance {
    pub fn validate(&self) -> Result<(), TilingError> {
        if self.tiles.len() < 2 {
            return Err(TilingError::TooFewTiles);
        }
        if self.tiles[0] != Tile::plain(self.tiles[0].left) {
            return Err(TilingError::BoundaryTile);
        }
        for (i, t) in self.tiles.iter().enumerate() {
            if [t.left, t.right, t.up, t.down].iter().any(|&c| c >= self.colors) {
                return Err(TilingError::Colour(i));
            }
        }
        if self.n == 0 {
            return Err(TilingError::NoColumns);
        }
        if self.first_row.len() != self.n {
            return Err(TilingError::FirstRowLength {
                expected: self.n,
                found: self.first_row.len(),
            });
        }
        let max = self.winning();
        for (i, &t) in self.first_row.iter().enumerate() {
            if t == 0 || t > max {
                return Err(TilingError::FirstRowTile {
                    column: i + 1,
                    tile: t,
                    max,
                });
            }
        }
        Ok(())
    }

    /// `s`: the number of ordinary tile types.
    pub fn s(&self) -> usize {
        self.tiles.len() - 2
    }

    pub fn winning(&self) -> usize {
        self.tiles.len() - 1
    }

    /// Types that may be placed during play.
    pub fn placeable(&self) -> std::ops::Range<usize> {
        1..self.tiles.len()
    }

    /// `C(left, below, t)`.
    pub fn fits(&self, left: usize, below: usize, t: usize) -> bool {
        self.tiles[left].right == self.tiles[t].left && self.tiles[below].up == self.tiles[t].down
    }

    pub fn fits_boundary(&self, t: usize) -> bool {
        self.tiles[t].right == self.tiles[0].left
    }

    /// `N = (s+2)^(n+2)`, the number of rounds after which a row repeats.
    pub fn repetition_bound(&self) -> Result<u128, TilingError> {
        let base = self.tiles.len() as u128;
        let exp = u32::try_from(self.n + 2).map_err(|_| TilingError::Budget(u128::MAX))?;
        base.checked_pow(exp).ok_or(TilingError::Budget(u128::MAX))
    }

    /// `m = ceil(log2 N)`.
    pub fn counter_bits(&self) -> Result<usize, TilingError> {
        let n = self.repetition_bound()?;
        Ok((128 - (n - 1).leading_zeros()) as usize)
    }
}

/// Formulas over `top`, variables, negation, conjunction, disjunction, the
/// diamond and the universal modality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ModalFormula {
    Top,
    Var(String),
    Not(Box<ModalFormula>),
    And(Vec<ModalFormula>),
    Or(Vec<ModalFormula>),
    Diamond(Box<ModalFormula>),
    Forall(Box<ModalFormula>),
}

impl ModalFormula {
    pub fn var(name: impl Into<String>) -> ModalFormula {
        ModalFormula::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> ModalFormula {
        ModalFormula::Not(Box::new(self))
    }

    pub fn diamond(self) -> ModalFormula {
        ModalFormula::Diamond(Box::new(self))
    }

    /// `[] f`, written as `not <> not f`.
    pub fn boxed(self) -> ModalFormula {
        self.not().diamond().not()
    }

    pub fn forall(self) -> ModalFormula {
        ModalFormula::Forall(Box::new(self))
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            ModalFormula::Top => {}
            ModalFormula::Var(v) => {
                out.insert(v.clone());
            }
            ModalFormula::Not(f) | ModalFormula::Diamond(f) | ModalFormula::Forall(f) => f.collect_vars(out),
            ModalFormula::And(fs) | ModalFormula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(out)),
        }
    }

    /// Top-level conjuncts, with nested conjunctions flattened.
    pub fn conjuncts(&self) -> Vec<&ModalFormula> {
        match self {
            ModalFormula::And(fs) => fs.iter().flat_map(|f| f.conjuncts()).collect(),
            f => vec![f],
        }
    }

    /// Whether `[A]` only occurs as a top-level conjunct.
    pub fn forall_only_on_top(&self) -> bool {
        self.conjuncts().iter().all(|f| match f {
            ModalFormula::Forall(g) => !g.has_forall(),
            g => !g.has_forall(),
        })
    }

    fn has_forall(&self) -> bool {
        match self {
            ModalFormula::Top | ModalFormula::Var(_) => false,
            ModalFormula::Forall(_) => true,
            ModalFormula::Not(f) | ModalFormula::Diamond(f) => f.has_forall(),
            ModalFormula::And(fs) | ModalFormula::Or(fs) => fs.iter().any(|f| f.has_forall()),
        }
    }
}

impl fmt::Display for ModalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, fs: &[ModalFormula], sep: &str, empty: &str| {
            if fs.is_empty() {
                return f.write_str(empty);
            }
            for (i, g) in fs.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                write!(f, "({g})")?;
            }
            Ok(())
        };
        match self {
            ModalFormula::Top => f.write_str("top"),
            ModalFormula::Var(v) => f.write_str(v),
            ModalFormula::Not(g) => match &**g {
                ModalFormula::Diamond(h) => match &**h {
                    ModalFormula::Not(k) => write!(f, "[]({k})"),
                    _ => write!(f, "!({g})"),
                },
                _ => write!(f, "!({g})"),
            },
            ModalFormula::And(fs) => join(f, fs, " & ", "top"),
            ModalFormula::Or(fs) => join(f, fs, " | ", "!top"),
            ModalFormula::Diamond(g) => write!(f, "<>({g})"),
            ModalFormula::Forall(g) => write!(f, "[A]({g})"),
        }
    }
}

fn pos(i: usize) -> ModalFormula {
    ModalFormula::var(format!("p{i}"))
}

fn col(i: usize, u: usize) -> ModalFormula {
    ModalFormula::var(format!("c{i}_T{u}"))
}

fn counter(j: usize) -> ModalFormula {
    ModalFormula::var(format!("q{j}"))
}

/// The player variable. `e` names the unit constant in formula syntax.
pub const ELOISE: &str = "eloise";
pub const WINNING: &str = "w";

fn eloise() -> ModalFormula {
    ModalFormula::var(ELOISE)
}

fn winning() -> ModalFormula {
    ModalFormula::var(WINNING)
}

fn and(fs: Vec<ModalFormula>) -> ModalFormula {
    ModalFormula::And(fs)
}

fn or(fs: Vec<ModalFormula>) -> ModalFormula {
    ModalFormula::Or(fs)
}

/// The parts of the strategy formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TilingFormula {
    pub init: Vec<ModalFormula>,
    /// `R1` to `R9`.
    pub rules: Vec<ModalFormula>,
    pub win: ModalFormula,
    pub counter: ModalFormula,
    pub counter_bits: usize,
}

impl TilingFormula {
    pub fn formula(&self) -> ModalFormula {
        let mut parts = vec![and(self.init.clone())];
        parts.extend(self.rules.iter().cloned());
        parts.push(self.win.clone());
        parts.push(self.counter.clone());
        and(parts)
    }
}

/// Builds `Init & R1 & ... & R9 & Win & F` for the instance.
pub fn build_modal_formula(t: &TilingInstance) -> Result<TilingFormula, TilingError> {
    t.validate()?;
    let n = t.n;
    let types = 0..t.tiles.len();
    let last = n + 1;
    let win_tile = t.winning();

    let mut init = vec![eloise(), pos(1), col(0, 0)];
    init.extend((1..=n).map(|i| col(i, t.first_row[i - 1])));
    init.push(col(last, 0));

    let mut r1 = vec![or((1..=n).map(pos).collect())];
    for i in 1..=n {
        for j in (1..=n).filter(|&j| j != i) {
            r1.push(or(vec![pos(i).not(), pos(j).not()]));
        }
    }
    let r1 = and(r1).forall();

    let some = and((0..=last).map(|i| or(types.clone().map(|u| col(i, u)).collect())).collect());
    let mut at_most = Vec::new();
    for i in 0..=last {
        for u in types.clone() {
            for v in types.clone().filter(|&v| v != u) {
                at_most.push(or(vec![col(i, u).not(), col(i, v).not()]));
            }
        }
    }
    let r2 = and(vec![some.forall(), and(at_most).forall()]);

    let r3 = and(vec![col(0, 0), col(last, 0)]).forall();

    let r4 = and((1..=n).map(|i| or(vec![pos(i).not(), pos(i % n + 1).boxed()])).collect()).forall();

    // p0 and p(n+1) never hold, so those columns never change.
    let mut r5 = Vec::new();
    for i in 0..=last {
        for u in types.clone() {
            let keep = and(vec![
                or(vec![col(i, u).not(), col(i, u).boxed()]),
                or(vec![col(i, u), col(i, u).not().boxed()]),
            ]);
            r5.push(if i == 0 || i == last { keep } else { or(vec![pos(i), keep]) });
        }
    }
    let r5 = and(r5).forall();

    let r6 = and(vec![
        or(vec![eloise().not(), eloise().not().boxed()]),
        or(vec![eloise(), eloise().boxed()]),
    ])
    .forall();

    // The left neighbour is T' and the tile below is T''.
    let allowed = |i: usize, left: usize, below: usize| -> Vec<usize> {
        t.placeable()
            .filter(|&u| t.fits(left, below, u) && (i < n || t.fits_boundary(u)))
            .collect()
    };
    let mut r7 = Vec::new();
    for i in 1..=n {
        for left in types.clone() {
            for below in types.clone() {
                let options = t.placeable().filter(|&u| t.fits(left, below, u)).map(|u| col(i, u)).collect();
                r7.push(or(vec![
                    and(vec![pos(i), col(i - 1, left), col(i, below)]).not(),
                    or(options).boxed(),
                ]));
            }
        }
    }
    let r7 = and(r7).forall();

    let r8 = or(vec![
        pos(n).not(),
        or(t.placeable().filter(|&u| t.fits_boundary(u)).map(|u| col(n, u)).collect()).boxed(),
    ])
    .forall();

    let abelard_moves = |i: usize| -> ModalFormula {
        let mut out = Vec::new();
        for left in types.clone() {
            for below in types.clone() {
                out.push(or(vec![
                    and(vec![eloise().not(), pos(i), col(i - 1, left), col(i, below)]).not(),
                    and(allowed(i, left, below).into_iter().map(|u| col(i, u).diamond()).collect()),
                ]));
            }
        }
        and(out)
    };
    let r9 = and(vec![
        and((1..n).map(abelard_moves).collect()).forall(),
        abelard_moves(n).forall(),
    ]);

    let win = and(vec![
        winning(),
        or(vec![
            winning().not(),
            col(1, win_tile),
            and(vec![eloise(), winning().diamond()]),
            and(vec![eloise().not(), ModalFormula::Top.diamond(), winning().boxed()]),
        ])
        .forall(),
    ]);

    let m = t.counter_bits()?;
    let keep = |k: usize| and(vec![or(vec![counter(k).not(), counter(k).boxed()]), or(vec![counter(k), counter(k).not().boxed()])]);
    let i0 = or(vec![
        counter(1),
        and(std::iter::once(counter(1).boxed()).chain((2..=m).map(keep)).collect()),
    ]);
    let i1 = |i: usize| -> ModalFormula {
        let carry = and(std::iter::once(counter(i + 1).not()).chain((1..=i).map(counter)).collect());
        let mut then = vec![counter(i + 1).boxed()];
        then.extend((1..=i).map(|j| counter(j).not().boxed()));
        then.extend((i + 2..=m).map(keep));
        or(vec![carry.not(), and(then)])
    };
    let mut fparts: Vec<ModalFormula> = (1..=m).rev().map(|j| counter(j).not()).collect();
    fparts.push(and(std::iter::once(i0).chain((1..m).map(i1)).collect()).forall());
    let mut last_round: Vec<ModalFormula> = (1..=m).rev().map(|j| counter(j).not()).collect();
    last_round.push(winning().not().boxed());
    fparts.push(or(last_round).forall());

    Ok(TilingFormula {
        init,
        rules: vec![r1, r2, r3, r4, r5, r6, r7, r8, r9],
        win,
        counter: and(fparts),
        counter_bits: m,
    })
}

/// A set of worlds.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WorldSet {
    words: Vec<u64>,
    len: usize,
}

impl WorldSet {
    pub fn empty(len: usize) -> WorldSet {
        WorldSet {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn full(len: usize) -> WorldSet {
        let mut s = WorldSet::empty(len);
        for w in 0..len {
            s.insert(w);
        }
        s
    }

    pub fn from_iter(len: usize, items: impl IntoIterator<Item = usize>) -> WorldSet {
        let mut s = WorldSet::empty(len);
        for w in items {
            s.insert(w);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, w: usize) {
        self.words[w / 64] |= 1 << (w % 64);
    }

    pub fn contains(&self, w: usize) -> bool {
        has(self.words[w / 64], w % 64)
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&x| x == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&w| self.contains(w))
    }

    fn zip(&self, other: &WorldSet, f: impl Fn(u64, u64) -> u64) -> WorldSet {
        WorldSet {
            words: self.words.iter().zip(&other.words).map(|(&a, &b)| f(a, b)).collect(),
            len: self.len,
        }
    }

    pub fn union(&self, other: &WorldSet) -> WorldSet {
        self.zip(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &WorldSet) -> WorldSet {
        self.zip(other, |a, b| a & b)
    }

    pub fn complement(&self) -> WorldSet {
        let full = WorldSet::full(self.len);
        full.zip(self, |a, b| a & !b)
    }

    pub fn is_subset(&self, other: &WorldSet) -> bool {
        self.words.iter().zip(&other.words).all(|(&a, &b)| a & !b == 0)
    }

    pub fn meets(&self, other: &WorldSet) -> bool {
        self.words.iter().zip(&other.words).any(|(&a, &b)| a & b != 0)
    }
}

/// Worlds `0..worlds`, successor lists and a valuation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeModel {
    pub worlds: usize,
    pub succ: Vec<Vec<usize>>,
    pub valuation: HashMap<String, WorldSet>,
}

impl KripkeModel {
    /// The worlds where `f` holds.
    pub fn truth_set(&self, f: &ModalFormula) -> Result<WorldSet, TilingError> {
        let n = self.worlds;
        Ok(match f {
            ModalFormula::Top => WorldSet::full(n),
            ModalFormula::Var(v) => self
                .valuation
                .get(v)
                .cloned()
                .ok_or_else(|| TilingError::UnknownVariable(v.clone()))?,
            ModalFormula::Not(g) => self.truth_set(g)?.complement(),
            ModalFormula::And(gs) => {
                let mut out = WorldSet::full(n);
                for g in gs {
                    out = out.intersection(&self.truth_set(g)?);
                }
                out
            }
            ModalFormula::Or(gs) => {
                let mut out = WorldSet::empty(n);
                for g in gs {
                    out = out.union(&self.truth_set(g)?);
                }
                out
            }
            ModalFormula::Diamond(g) => {
                let inner = self.truth_set(g)?;
                WorldSet::from_iter(n, (0..n).filter(|&w| self.succ[w].iter().any(|&v| inner.contains(v))))
            }
            ModalFormula::Forall(g) => {
                if self.truth_set(g)? == WorldSet::full(n) {
                    WorldSet::full(n)
                } else {
                    WorldSet::empty(n)
                }
            }
        })
    }
}

pub fn kripke_check(m: &KripkeModel, w: usize, f: &ModalFormula) -> Result<bool, TilingError> {
    Ok(m.truth_set(f)?.contains(w))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameOutcome {
    EloiseWins,
    AbelardWins,
}

/// The topmost tile of columns `1..=n`, the column to fill next and the
/// number of moves made so far.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Position {
    row: Vec<u8>,
    column: usize,
    round: u64,
}

struct Game<'a> {
    t: &'a TilingInstance,
    /// Moves after which the counter of the formula is exhausted.
    cap: u64,
    memo: HashMap<Position, bool>,
}

impl<'a> Game<'a> {
    fn new(t: &'a TilingInstance) -> Result<Game<'a>, TilingError> {
        t.validate()?;
        let m = t.counter_bits()?;
        let cap = (1u128 << m) - 1;
        let rows = (t.tiles.len() as u128).checked_pow(t.n as u32).unwrap_or(u128::MAX);
        let positions = rows.saturating_mul(t.n as u128).saturating_mul(cap + 1);
        if positions > MAX_GAME_POSITIONS as u128 {
            return Err(TilingError::Budget(positions));
        }
        Ok(Game {
            t,
            cap: cap as u64,
            memo: HashMap::new(),
        })
    }

    fn root(&self) -> Position {
        Position {
            row: self.t.first_row.iter().map(|&u| u as u8).collect(),
            column: 0,
            round: 0,
        }
    }

    fn won(&self, p: &Position) -> bool {
        p.row[0] as usize == self.t.winning()
    }

    fn moves(&self, p: &Position) -> Vec<usize> {
        let left = if p.column == 0 { 0 } else { p.row[p.column - 1] as usize };
        let below = p.row[p.column] as usize;
        let last = p.column + 1 == self.t.n;
        self.t
            .placeable()
            .filter(|&u| self.t.fits(left, below, u) && (!last || self.t.fits_boundary(u)))
            .collect()
    }

    fn play(&self, p: &Position, u: usize) -> Position {
        let mut row = p.row.clone();
        row[p.column] = u as u8;
        Position {
            row,
            column: (p.column + 1) % self.t.n,
            round: p.round + 1,
        }
    }

    fn eloise_to_move(p: &Position) -> bool {
        p.round % 2 == 0
    }

    /// Whether Eloise can force a win from `p` before the counter runs out.
    fn wins(&mut self, p: &Position) -> bool {
        if self.won(p) {
            return true;
        }
        if p.round >= self.cap {
            return false;
        }
        if let Some(&v) = self.memo.get(p) {
            return v;
        }
        let moves = self.moves(p);
        let v = !moves.is_empty()
            && if Self::eloise_to_move(p) {
                moves.iter().any(|&u| {
                    let next = self.play(p, u);
                    self.wins(&next)
                })
            } else {
                moves.iter().all(|&u| {
                    let next = self.play(p, u);
                    self.wins(&next)
                })
            };
        self.memo.insert(p.clone(), v);
        v
    }
}

/// Decides the game by backward induction, with plays cut off when the
/// round counter of the formula is exhausted.
pub fn solve_game(t: &TilingInstance) -> Result<GameOutcome, TilingError> {
    let mut g = Game::new(t)?;
    let root = g.root();
    Ok(if g.wins(&root) {
        GameOutcome::EloiseWins
    } else {
        GameOutcome::AbelardWins
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct World {
    position: Position,
    eloise: bool,
    counter: u64,
    winning: bool,
}

/// The positions reached when Eloise follows her winning strategy against
/// every reply, as a Kripke model rooted at world 0. `None` when Eloise
/// has no winning strategy.
pub fn strategy_model(t: &TilingInstance) -> Result<Option<KripkeModel>, TilingError> {
    let mut g = Game::new(t)?;
    let root = g.root();
    if !g.wins(&root) {
        return Ok(None);
    }
    let mut worlds: Vec<World> = Vec::new();
    let mut index: HashMap<World, usize> = HashMap::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let mut add = |w: World, worlds: &mut Vec<World>, succ: &mut Vec<Vec<usize>>| -> (usize, bool) {
        if let Some(&i) = index.get(&w) {
            return (i, false);
        }
        index.insert(w.clone(), worlds.len());
        worlds.push(w);
        succ.push(Vec::new());
        (worlds.len() - 1, true)
    };
    let first = World {
        position: root.clone(),
        eloise: true,
        counter: 0,
        winning: true,
    };
    add(first, &mut worlds, &mut succ);
    let mut next = 0;
    while next < worlds.len() {
        let w = worlds[next].clone();
        let mut children = Vec::new();
        if w.winning {
            let moves = g.moves(&w.position);
            if g.won(&w.position) {
                // Abelard still has his moves; they lead nowhere.
                if !w.eloise {
                    for u in moves {
                        children.push(World {
                            position: g.play(&w.position, u),
                            eloise: true,
                            counter: (w.counter + 1).min(g.cap),
                            winning: false,
                        });
                    }
                }
            } else if w.eloise {
                let u = moves
                    .into_iter()
                    .find(|&u| {
                        let p = g.play(&w.position, u);
                        g.wins(&p)
                    })
                    .expect("winning position has a winning move");
                children.push(World {
                    position: g.play(&w.position, u),
                    eloise: false,
                    counter: w.counter + 1,
                    winning: true,
                });
            } else {
                for u in moves {
                    children.push(World {
                        position: g.play(&w.position, u),
                        eloise: true,
                        counter: w.counter + 1,
                        winning: true,
                    });
                }
            }
        }
        for c in children {
            let (i, _) = add(c, &mut worlds, &mut succ);
            succ[next].push(i);
        }
        next += 1;
    }
    let n = worlds.len();
    let m = t.counter_bits()?;
    let mut valuation = HashMap::new();
    let mut set = |name: String, pred: &dyn Fn(&World) -> bool| {
        valuation.insert(name, WorldSet::from_iter(n, (0..n).filter(|&i| pred(&worlds[i]))));
    };
    for i in 1..=t.n {
        set(format!("p{i}"), &|w| w.position.column + 1 == i);
    }
    for i in 0..=t.n + 1 {
        for u in 0..t.tiles.len() {
            set(format!("c{i}_T{u}"), &|w| {
                if i == 0 || i == t.n + 1 {
                    u == 0
                } else {
                    w.position.row[i - 1] as usize == u
                }
            });
        }
    }
    set(ELOISE.to_string(), &|w| w.eloise);
    set(WINNING.to_string(), &|w| w.winning);
    for j in 1..=m {
        set(format!("q{j}"), &|w| w.counter >> (j - 1) & 1 == 1);
    }
    Ok(Some(KripkeModel {
        worlds: n,
        succ,
        valuation,
    }))
}

/// Searches for a model of `f` with at most `max_worlds` worlds, smallest
/// first. Finding none says nothing about larger models.
pub fn bounded_model_search(f: &ModalFormula, max_worlds: usize) -> Option<(KripkeModel, usize)> {
    (1..=max_worlds).find_map(|k| model_of_size(f, k))
}

fn model_of_size(f: &ModalFormula, k: usize) -> Option<(KripkeModel, usize)> {
    let mut enc = Encoder {
        solver: Solver::new(),
        k,
        vars: HashMap::new(),
        rel: Vec::new(),
        cache: HashMap::new(),
    };
    for _ in 0..k * k {
        let r = enc.solver.new_lit();
        enc.rel.push(r);
    }
    let root = enc.encode(f, 0);
    enc.solver.add_clause(&[root]);
    if !enc.solver.solve().expect("no proof output configured") {
        return None;
    }
    let model: std::collections::HashSet<Lit> = enc.solver.model().expect("satisfiable").into_iter().collect();
    let succ = (0..k)
        .map(|w| (0..k).filter(|&v| model.contains(&enc.rel[w * k + v])).collect())
        .collect();
    let valuation = enc
        .vars
        .iter()
        .map(|(name, lits)| {
            (
                name.clone(),
                WorldSet::from_iter(k, (0..k).filter(|&w| model.contains(&lits[w]))),
            )
        })
        .collect();
    Some((
        KripkeModel {
            worlds: k,
            succ,
            valuation,
        },
        0,
    ))
}

struct Encoder<'s> {
    solver: Solver<'s>,
    k: usize,
    vars: HashMap<String, Vec<Lit>>,
    rel: Vec<Lit>,
    cache: HashMap<(*const ModalFormula, usize), Lit>,
}

impl Encoder<'_> {
    /// A literal equivalent to `f` holding at world `w`.
    fn encode(&mut self, f: &ModalFormula, w: usize) -> Lit {
        let key = (f as *const ModalFormula, if matches!(f, ModalFormula::Forall(_)) { 0 } else { w });
        if let Some(&l) = self.cache.get(&key) {
            return l;
        }
        let k = self.k;
        let lit = match f {
            ModalFormula::Top => {
                let t = self.solver.new_lit();
                self.solver.add_clause(&[t]);
                t
            }
            ModalFormula::Var(v) => {
                if !self.vars.contains_key(v) {
                    let lits = (0..k).map(|_| self.solver.new_lit()).collect();
                    self.vars.insert(v.clone(), lits);
                }
                self.vars[v][w]
            }
            ModalFormula::Not(g) => !self.encode(g, w),
            ModalFormula::And(gs) => {
                let parts: Vec<Lit> = gs.iter().map(|g| self.encode(g, w)).collect();
                self.conjunction(&parts)
            }
            ModalFormula::Or(gs) => {
                let parts: Vec<Lit> = gs.iter().map(|g| !self.encode(g, w)).collect();
                !self.conjunction(&parts)
            }
            ModalFormula::Diamond(g) => {
                let mut options = Vec::new();
                for v in 0..k {
                    let inner = self.encode(g, v);
                    let both = self.conjunction(&[self.rel[w * k + v], inner]);
                    options.push(!both);
                }
                !self.conjunction(&options)
            }
            ModalFormula::Forall(g) => {
                let parts: Vec<Lit> = (0..k).map(|v| self.encode(g, v)).collect();
                self.conjunction(&parts)
            }
        };
        self.cache.insert(key, lit);
        lit
    }

    fn conjunction(&mut self, parts: &[Lit]) -> Lit {
        let x = self.solver.new_lit();
        let mut back = vec![x];
        for &p in parts {
            self.solver.add_clause(&[!x, p]);
            back.push(!p);
        }
        self.solver.add_clause(&back);
        x
    }
}

/// Negation normal form with the box as a primitive.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Nnf {
    Top,
    Bot,
    Lit(String, bool),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
    Dia(Box<Nnf>),
    Box(Box<Nnf>),
    Forall(Box<Nnf>),
}

impl fmt::Display for Nnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, gs: &[Nnf], sep: &str| {
            let parts: Vec<String> = gs.iter().map(|g| format!("({g})")).collect();
            f.write_str(&parts.join(sep))
        };
        match self {
            Nnf::Top => f.write_str("top"),
            Nnf::Bot => f.write_str("!top"),
            Nnf::Lit(p, true) => f.write_str(p),
            Nnf::Lit(p, false) => write!(f, "!{p}"),
            Nnf::And(gs) => join(f, gs, " & "),
            Nnf::Or(gs) => join(f, gs, " | "),
            Nnf::Dia(g) => write!(f, "<>({g})"),
            Nnf::Box(g) => write!(f, "[]({g})"),
            Nnf::Forall(g) => write!(f, "[A]({g})"),
        }
    }
}

fn nnf(f: &ModalFormula, positive: bool) -> Result<Nnf, TilingError> {
    let list = |fs: &[ModalFormula]| fs.iter().map(|g| nnf(g, positive)).collect::<Result<Vec<_>, _>>();
    Ok(match f {
        ModalFormula::Top => {
            if positive {
                Nnf::Top
            } else {
                Nnf::Bot
            }
        }
        ModalFormula::Var(v) => Nnf::Lit(v.clone(), positive),
        ModalFormula::Not(g) => nnf(g, !positive)?,
        ModalFormula::And(gs) => flatten(positive, list(gs)?),
        ModalFormula::Or(gs) => flatten(!positive, list(gs)?),
        ModalFormula::Diamond(g) => {
            let inner = Box::new(nnf(g, positive)?);
            if positive {
                Nnf::Dia(inner)
            } else {
                Nnf::Box(inner)
            }
        }
        ModalFormula::Forall(g) => {
            if !positive {
                return Err(TilingError::NestedForall(f.to_string()));
            }
            Nnf::Forall(Box::new(nnf(g, true)?))
        }
    })
}

/// A conjunction (or disjunction) with nested ones of the same kind merged
/// and single members unwrapped.
fn flatten(conj: bool, parts: Vec<Nnf>) -> Nnf {
    let mut out = Vec::new();
    for p in parts {
        match p {
            Nnf::And(gs) if conj => out.extend(gs),
            Nnf::Or(gs) if !conj => out.extend(gs),
            g => out.push(g),
        }
    }
    if out.len() == 1 {
        return out.pop().expect("one element");
    }
    if conj {
        Nnf::And(out)
    } else {
        Nnf::Or(out)
    }
}

/// What a fresh variable of the translation stands for.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Fresh {
    /// `p'`, the complement of `p`.
    Complement(String),
    /// `b(p)`: `[] p`.
    Box(String),
    /// `bn(p)`: `[] !p`.
    BoxNot(String),
    /// `bd(p1, ..., pk)`: `[] (p1 | ... | pk)`.
    BoxOr(Vec<String>),
    /// `bcd(...)`: `[]` over a conjunction of disjunctions.
    BoxCnf(Vec<Vec<String>>),
}

/// The diamond formula `zeta & Tr(phi)` with its inventory.
#[derive(Clone, Debug)]
pub struct Translation {
    pub formula: QFFormula,
    /// Fresh variables in order of introduction.
    pub fresh: Vec<(String, Fresh)>,
    pub modal_vars: Vec<String>,
    pub zeta_atoms: usize,
    /// The term translating the conjunction of the unquantified conjuncts.
    pub chi: TermId,
    /// Distinct boxed subformulas.
    pub boxes: usize,
}

struct Translator {
    terms: Terms,
    used: BTreeSet<String>,
    fresh: Vec<(String, Fresh)>,
    index: HashMap<Fresh, TermId>,
    boxes: BTreeSet<String>,
}

impl Translator {
    fn var(&mut self, name: &str) -> TermId {
        self.terms.var(name)
    }

    fn complement(&mut self, p: &str) -> TermId {
        self.introduce(Fresh::Complement(p.to_string()), format!("{p}'"))
    }

    fn introduce(&mut self, kind: Fresh, base: String) -> TermId {
        if let Some(&id) = self.index.get(&kind) {
            return id;
        }
        let mut name = base;
        while self.used.contains(&name) {
            name.push('\'');
        }
        self.used.insert(name.clone());
        let id = self.terms.var(&name);
        self.index.insert(kind.clone(), id);
        self.fresh.push((name, kind));
        id
    }

    fn meet_all(&mut self, parts: Vec<TermId>) -> TermId {
        let mut it = parts.into_iter();
        match it.next() {
            None => self.terms.constant(Constant::One),
            Some(first) => it.fold(first, |acc, x| self.terms.binary(Op::Meet, acc, x)),
        }
    }

    fn join_all(&mut self, parts: Vec<TermId>) -> TermId {
        let mut it = parts.into_iter();
        match it.next() {
            None => self.terms.constant(Constant::Zero),
            Some(first) => it.fold(first, |acc, x| self.terms.binary(Op::Join, acc, x)),
        }
    }

    fn star(&mut self, f: &Nnf) -> Result<TermId, TilingError> {
        Ok(match f {
            Nnf::Top => self.terms.constant(Constant::One),
            Nnf::Bot => self.terms.constant(Constant::Zero),
            Nnf::Lit(p, true) => self.var(p),
            Nnf::Lit(p, false) => self.complement(p),
            Nnf::And(gs) => {
                let parts = gs.iter().map(|g| self.star(g)).collect::<Result<_, _>>()?;
                self.meet_all(parts)
            }
            Nnf::Or(gs) => {
                let parts = gs.iter().map(|g| self.star(g)).collect::<Result<_, _>>()?;
                self.join_all(parts)
            }
            Nnf::Dia(g) => {
                let inner = self.star(g)?;
                self.terms.unary(Op::Diamond, inner)
            }
            Nnf::Box(g) => {
                self.boxes.insert(g.to_string());
                let kind = box_shape(g).ok_or_else(|| TilingError::UnsupportedBox(g.to_string()))?;
                let base = match &kind {
                    Fresh::Box(p) => format!("b_{p}"),
                    Fresh::BoxNot(p) => format!("bn_{p}"),
                    Fresh::BoxOr(_) => format!("bd{}", self.count(|k| matches!(k, Fresh::BoxOr(_)))),
                    Fresh::BoxCnf(_) => format!("bcd{}", self.count(|k| matches!(k, Fresh::BoxCnf(_)))),
                    Fresh::Complement(_) => unreachable!("not a box shape"),
                };
                self.introduce(kind, base)
            }
            Nnf::Forall(_) => return Err(TilingError::NestedForall(f.to_string())),
        })
    }

    fn count(&self, pred: impl Fn(&Fresh) -> bool) -> usize {
        self.fresh.iter().filter(|(_, k)| pred(k)).count() + 1
    }
}

fn positive_lits(f: &Nnf) -> Option<Vec<String>> {
    match f {
        Nnf::Lit(p, true) => Some(vec![p.clone()]),
        Nnf::Bot => Some(Vec::new()),
        Nnf::Or(gs) => gs
            .iter()
            .map(|g| match g {
                Nnf::Lit(p, true) => Some(p.clone()),
                _ => None,
            })
            .collect(),
        _ => None,
    }
}

fn box_shape(f: &Nnf) -> Option<Fresh> {
    match f {
        Nnf::Lit(p, true) => Some(Fresh::Box(p.clone())),
        Nnf::Lit(p, false) => Some(Fresh::BoxNot(p.clone())),
        Nnf::Or(_) | Nnf::Bot => positive_lits(f).map(Fresh::BoxOr),
        Nnf::And(gs) => gs.iter().map(positive_lits).collect::<Option<Vec<_>>>().map(Fresh::BoxCnf),
        _ => None,
    }
}

/// Translates a formula whose universal modalities are top-level conjuncts
/// into `zeta & not(chi* = 0) & psi1* = 1 & ...` over the diamond signature.
pub fn translate(phi: &ModalFormula) -> Result<Translation, TilingError> {
    let normal = nnf(phi, true)?;
    let conjuncts = match normal {
        Nnf::And(gs) => gs,
        g => vec![g],
    };
    let modal_vars: Vec<String> = phi.variables().into_iter().collect();
    let mut tr = Translator {
        terms: Terms::new(),
        used: modal_vars.iter().cloned().collect(),
        fresh: Vec::new(),
        index: HashMap::new(),
        boxes: BTreeSet::new(),
    };
    for p in &modal_vars {
        tr.var(p);
    }
    for p in &modal_vars {
        tr.complement(p);
    }
    let mut chi = Vec::new();
    let mut psis = Vec::new();
    for c in conjuncts {
        match c {
            Nnf::Forall(g) => psis.push(*g),
            g => chi.push(g),
        }
    }
    let chi_parts = chi.iter().map(|g| tr.star(g)).collect::<Result<Vec<_>, _>>()?;
    let chi_term = tr.meet_all(chi_parts);
    let psi_terms = psis.iter().map(|g| tr.star(g)).collect::<Result<Vec<_>, _>>()?;

    let zero = tr.terms.constant(Constant::Zero);
    let one = tr.terms.constant(Constant::One);
    let eq = |lhs, rhs| {
        Formula::Atom(Atom {
            rel: Relation::Eq,
            lhs,
            rhs,
        })
    };
    let mut body = Vec::new();
    let fresh = tr.fresh.clone();
    for (name, kind) in &fresh {
        let x = tr.var(name);
        let other = match kind {
            Fresh::Complement(p) => tr.var(p),
            Fresh::Box(p) => {
                let c = tr.complement(p);
                tr.terms.unary(Op::Diamond, c)
            }
            Fresh::BoxNot(p) => {
                let v = tr.var(p);
                tr.terms.unary(Op::Diamond, v)
            }
            Fresh::BoxOr(ps) => {
                let cs = ps.iter().map(|p| tr.complement(p)).collect();
                let m = tr.meet_all(cs);
                tr.terms.unary(Op::Diamond, m)
            }
            Fresh::BoxCnf(rows) => {
                let mut ors = Vec::new();
                for row in rows {
                    let cs = row.iter().map(|p| tr.complement(p)).collect();
                    ors.push(tr.meet_all(cs));
                }
                let j = tr.join_all(ors);
                tr.terms.unary(Op::Diamond, j)
            }
        };
        let join = tr.terms.binary(Op::Join, x, other);
        let meet = tr.terms.binary(Op::Meet, x, other);
        body.push(eq(join, one));
        body.push(eq(meet, zero));
    }
    let zeta_atoms = body.len();
    body.push(eq(chi_term, zero).not());
    for p in psi_terms {
        body.push(eq(p, one));
    }
    let formula = QFFormula::new(Signature::of_class(Class::Bdo), tr.terms, Formula::And(body))
        .expect("only lattice operations and the diamond");
    Ok(Translation {
        formula,
        fresh,
        modal_vars,
        zeta_atoms,
        chi: chi_term,
        boxes: tr.boxes.len(),
    })
}

/// The complex algebra of a Kripke frame with the discrete order: all
/// sets of worlds, with the diamond of the accessibility relation.
#[derive(Clone, Debug)]
pub struct SetAlgebra {
    succ: Vec<WorldSet>,
}

impl SetAlgebra {
    pub fn of_model(m: &KripkeModel) -> SetAlgebra {
        SetAlgebra {
            succ: m
                .succ
                .iter()
                .map(|s| WorldSet::from_iter(m.worlds, s.iter().copied()))
                .collect(),
        }
    }

    pub fn worlds(&self) -> usize {
        self.succ.len()
    }

    pub fn diamond(&self, x: &WorldSet) -> WorldSet {
        WorldSet::from_iter(self.worlds(), (0..self.worlds()).filter(|&w| self.succ[w].meets(x)))
    }

    /// `{w | every successor of w is in x}`.
    pub fn boxed(&self, x: &WorldSet) -> WorldSet {
        WorldSet::from_iter(self.worlds(), (0..self.worlds()).filter(|&w| self.succ[w].is_subset(x)))
    }
}

impl Interpretation for SetAlgebra {
    type Elem = WorldSet;

    fn constant(&self, c: Constant) -> Option<WorldSet> {
        match c {
            Constant::Zero => Some(WorldSet::empty(self.worlds())),
            Constant::One => Some(WorldSet::full(self.worlds())),
            Constant::Unit => None,
        }
    }

    fn unary(&self, op: Op, a: &WorldSet) -> Option<WorldSet> {
        (op == Op::Diamond).then(|| self.diamond(a))
    }

    fn binary(&self, op: Op, a: &WorldSet, b: &WorldSet) -> Option<WorldSet> {
        match op {
            Op::Meet => Some(a.intersection(b)),
            Op::Join => Some(a.union(b)),
            _ => None,
        }
    }

    fn leq(&self, a: &WorldSet, b: &WorldSet) -> bool {
        a.is_subset(b)
    }
}

/// The complex algebra of the model's frame and the valuation of every
/// variable of the translation.
pub fn model_to_algebra(m: &KripkeModel, tr: &Translation) -> Result<(SetAlgebra, Vec<WorldSet>), TilingError> {
    let a = SetAlgebra::of_model(m);
    let n = m.worlds;
    let v = |p: &str| m.valuation.get(p).cloned().ok_or_else(|| TilingError::UnknownVariable(p.to_string()));
    let union = |ps: &[String]| -> Result<WorldSet, TilingError> {
        let mut out = WorldSet::empty(n);
        for p in ps {
            out = out.union(&v(p)?);
        }
        Ok(out)
    };
    let kinds: HashMap<&str, &Fresh> = tr.fresh.iter().map(|(name, k)| (name.as_str(), k)).collect();
    let mut valuation = Vec::new();
    for name in tr.formula.var_names() {
        let value = match kinds.get(name.as_str()) {
            None => v(name)?,
            Some(Fresh::Complement(p)) => v(p)?.complement(),
            Some(Fresh::Box(p)) => a.boxed(&v(p)?),
            Some(Fresh::BoxNot(p)) => a.boxed(&v(p)?.complement()),
            Some(Fresh::BoxOr(ps)) => a.boxed(&union(ps)?),
            Some(Fresh::BoxCnf(rows)) => {
                let mut all = WorldSet::full(n);
                for row in rows {
                    all = all.intersection(&union(row)?);
                }
                a.boxed(&all)
            }
        };
        valuation.push(value);
    }
    Ok((a, valuation))
}

/// Reads a model off the prime filters of a set algebra. They are the sets
/// containing a fixed world, so world `w` stands for the filter at `w`.
pub fn set_algebra_to_model(
    a: &SetAlgebra,
    v: &[WorldSet],
    tr: &Translation,
) -> Result<(KripkeModel, usize), TilingError> {
    let n = a.worlds();
    let chi = tr
        .formula
        .terms()
        .evaluate(tr.chi, a, v)
        .expect("lattice terms are total");
    let root = chi.iter().next().ok_or(TilingError::NoInitialWorld)?;
    let succ = (0..n)
        .map(|w| {
            (0..n)
                .filter(|&u| a.diamond(&WorldSet::from_iter(n, [u])).contains(w))
                .collect()
        })
        .collect();
    let names = tr.formula.var_names();
    let valuation = tr
        .modal_vars
        .iter()
        .map(|p| {
            let i = names.iter().position(|x| x == p).expect("modal variables are kept");
            (p.clone(), v[i].clone())
        })
        .collect();
    Ok((
        KripkeModel {
            worlds: n,
            succ,
            valuation,
        },
        root,
    ))
}

/// The Kripke model on the prime filters of a finite bdo, with `V(p)` the
/// filters containing `v(p)`, and a filter containing the value of `chi*`.
pub fn algebra_to_model(
    a: &FiniteAlgebra,
    v: &[usize],
    tr: &Translation,
) -> Result<(KripkeModel, usize), TilingError> {
    if a.class() != Class::Bdo {
        return Err(TilingError::WrongClass(a.class()));
    }
    let canonical = canonical_frame(a)?;
    let Frame::Diamond(frame) = &canonical.frame else {
        return Err(TilingError::WrongClass(a.class()));
    };
    let filters = &canonical.filters;
    let k = filters.len();
    let chi = tr.formula.terms().evaluate(tr.chi, a, v).expect("bdo terms are total");
    let root = (0..k).find(|&i| has(filters[i], chi)).ok_or(TilingError::NoInitialWorld)?;
    let succ = frame.rel.iter().map(|&r| crate::bits::to_vec(r)).collect();
    let names = tr.formula.var_names();
    let valuation = tr
        .modal_vars
        .iter()
        .map(|p| {
            let i = names.iter().position(|x| x == p).expect("modal variables are kept");
            (p.clone(), WorldSet::from_iter(k, (0..k).filter(|&f| has(filters[f], v[i]))))
        })
        .collect();
    Ok((
        KripkeModel {
            worlds: k,
            succ,
            valuation,
        },
        root,
    ))
}

/// The outcome of every step of the reduction on one instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundTrip {
    pub outcome: GameOutcome,
    pub modal_size: usize,
    pub formula_size: u64,
    pub fresh_variables: usize,
    /// Worlds of the strategy model when Eloise wins.
    pub strategy_worlds: Option<usize>,
    pub strategy_satisfies: Option<bool>,
    pub algebra_satisfies: Option<bool>,
    pub round_trip_satisfies: Option<bool>,
    /// Largest model size searched when Abelard wins, and whether a model
    /// was found. A bounded check only.
    pub bounded_worlds: Option<usize>,
    pub bounded_model_found: Option<bool>,
}

impl RoundTrip {
    /// Whether every step agrees with the game's answer.
    pub fn consistent(&self) -> bool {
        match self.outcome {
            GameOutcome::EloiseWins => {
                self.strategy_satisfies == Some(true)
                    && self.algebra_satisfies == Some(true)
                    && self.round_trip_satisfies == Some(true)
            }
            GameOutcome::AbelardWins => self.bounded_model_found == Some(false),
        }
    }
}

fn modal_size(f: &ModalFormula) -> usize {
    1 + match f {
        ModalFormula::Top | ModalFormula::Var(_) => 0,
        ModalFormula::Not(g) | ModalFormula::Diamond(g) | ModalFormula::Forall(g) => modal_size(g),
        ModalFormula::And(gs) | ModalFormula::Or(gs) => gs.iter().map(modal_size).sum(),
    }
}

/// Solves the game and runs the matching direction of the reduction.
pub fn round_trip(t: &TilingInstance, max_worlds: usize) -> Result<RoundTrip, TilingError> {
    let tf = build_modal_formula(t)?;
    let phi = tf.formula();
    let tr = translate(&phi)?;
    let outcome = solve_game(t)?;
    let mut out = RoundTrip {
        outcome,
        modal_size: modal_size(&phi),
        formula_size: tr.formula.size(),
        fresh_variables: tr.fresh.len(),
        strategy_worlds: None,
        strategy_satisfies: None,
        algebra_satisfies: None,
        round_trip_satisfies: None,
        bounded_worlds: None,
        bounded_model_found: None,
    };
    match outcome {
        GameOutcome::EloiseWins => {
            let m = strategy_model(t)?.expect("Eloise wins");
            out.strategy_worlds = Some(m.worlds);
            out.strategy_satisfies = Some(kripke_check(&m, 0, &phi)?);
            let (a, v) = model_to_algebra(&m, &tr)?;
            out.algebra_satisfies = Some(tr.formula.evaluate(&a, &v) == Evaluation::Satisfied);
            let back = set_algebra_to_model(&a, &v, &tr);
            out.round_trip_satisfies = Some(match back {
                Ok((m2, root)) => kripke_check(&m2, root, &phi)?,
                Err(_) => false,
            });
        }
        GameOutcome::AbelardWins => {
            out.bounded_worlds = Some(max_worlds);
            out.bounded_model_found = Some(bounded_model_search(&phi, max_worlds).is_some());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
