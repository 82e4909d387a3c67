//! Words over the generators `Int`, `Part`, `P`, `Q`, `QQ`, their defining
//! relations, a normal form and a three-valued equality test.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::OpenBox;
use crate::polyfun::{Orientation, PolyFun};
use crate::term::Signature;

mod trace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GenKind {
    Int,
    Part,
    P,
    Q,
    QQ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gen {
    pub kind: GenKind,
    pub index: u32,
}

impl Gen {
    pub fn new(kind: GenKind, index: u32) -> Gen {
        assert!(index >= 1, "generator indices start at 1");
        Gen { kind, index }
    }
    pub fn int(i: u32) -> Gen {
        Gen::new(GenKind::Int, i)
    }
    pub fn part(i: u32) -> Gen {
        Gen::new(GenKind::Part, i)
    }
    pub fn p(i: u32) -> Gen {
        Gen::new(GenKind::P, i)
    }
    pub fn q(i: u32) -> Gen {
        Gen::new(GenKind::Q, i)
    }
    pub fn qq(i: u32) -> Gen {
        Gen::new(GenKind::QQ, i)
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = match self.kind {
            GenKind::Int => "I",
            GenKind::Part => "D",
            GenKind::P => "p",
            GenKind::Q => "q",
            GenKind::QQ => "Q",
        };
        write!(f, "{t}{}", self.index)
    }
}

impl FromStr for Gen {
    type Err = Error;

    fn from_str(s: &str) -> Result<Gen> {
        let bad = || Error::Parse(format!("bad generator `{s}`"));
        let mut cs = s.chars();
        let kind = match cs.next().ok_or_else(bad)? {
            'I' => GenKind::Int,
            'D' => GenKind::Part,
            'p' => GenKind::P,
            'q' => GenKind::Q,
            'Q' => GenKind::QQ,
            _ => return Err(bad()),
        };
        let index: u32 = cs.as_str().parse().map_err(|_| bad())?;
        if index == 0 {
            return Err(bad());
        }
        Ok(Gen { kind, index })
    }
}

/// A monoid element; the empty word is the unit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<Gen>);

impl Word {
    pub fn new(gens: Vec<Gen>) -> Word {
        Word(gens)
    }

    pub fn unit() -> Word {
        Word(vec![])
    }

    pub fn gens(&self) -> &[Gen] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, o: &Word) -> Word {
        Word(self.0.iter().chain(&o.0).copied().collect())
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|g| g.kind != GenKind::Part)
    }

    pub fn int_only(&self) -> bool {
        self.0.iter().all(|g| g.kind == GenKind::Int)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.0.iter().map(Gen::to_string).collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Word> {
        let s = s.trim();
        if s.is_empty() || s == "1" {
            return Ok(Word::unit());
        }
        s.split_whitespace()
            .map(str::parse)
            .collect::<Result<_>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// One letter of a relation pattern: `kind` with index `var + off`, or the
/// constant `off` when `var` is `None`.
#[derive(Clone, Copy, Debug)]
struct Pat {
    kind: GenKind,
    var: Option<usize>,
    off: i64,
}

const fn v(kind: GenKind, var: usize, off: i64) -> Pat {
    Pat {
        kind,
        var: Some(var),
        off,
    }
}

const I: usize = 0;
const J: usize = 1;

/// A defining relation `lhs ≍ rhs` with its side condition on `(i, j)`.
#[derive(Clone, Debug)]
pub struct Relation {
    pub name: &'static str,
    lhs: Vec<Pat>,
    rhs: Vec<Pat>,
    cond: fn(i64, i64) -> bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Backward,
}

fn any(_: i64, _: i64) -> bool {
    true
}

#[rustfmt::skip]
fn table() -> Vec<Relation> {
    use GenKind::*;
    let r = |name, lhs: Vec<Pat>, rhs: Vec<Pat>, cond: fn(i64, i64) -> bool| Relation {
        name,
        lhs,
        rhs,
        cond,
    };
    let p1 = Pat {
        kind: P,
        var: None,
        off: 1,
    };
    vec![
        r("intint", vec![v(Int, I, 0), v(Int, J, 0)], vec![v(Int, J, 1), v(Int, I, 0)], |i, j| i < j),
        r("derint-i", vec![v(Part, I, 0), v(Part, J, 0)], vec![v(Part, J, 0), v(Part, I, 0)], any),
        r("derint-ii", vec![v(Part, I, 0), v(Int, J, 0)], vec![v(Int, J, 0), v(Part, I, 0)], |i, j| i < j),
        r("derint-iii", vec![v(Part, I, 1), v(Int, J, 0)], vec![v(Int, J, 0), v(Part, I, 0)], |i, j| i > j),
        r("coordint-i", vec![v(P, I, 0)], vec![p1, v(P, I, 0)], any),
        r("coordint-ii", vec![v(P, I, 0), v(Int, J, 0)], vec![v(Int, J, 0), v(P, I, 0)], any),
        r("coordint-iii", vec![v(P, I, 0), v(Part, J, 0)], vec![v(Part, J, 0), v(P, I, 0)], any),
        r("leftproj-i", vec![v(Q, I, 0)], vec![v(Part, I, 1), v(Int, I, 0)], any),
        r("leftproj-ii", vec![v(Q, I, 0), v(Q, J, 0)], vec![v(Q, J, 1), v(Q, I, 0)], |i, j| i <= j),
        r("leftproj-iii", vec![v(Q, I, 0), v(Int, J, 0)], vec![v(Int, J, 1), v(Q, I, 0)], |i, j| i < j),
        r("leftproj-iv", vec![v(Q, I, 0), v(Int, J, 0)], vec![v(Int, J, 0), v(Q, I, -1)], |i, j| i >= j + 2),
        r("leftproj-v", vec![v(Q, I, 0), v(Part, J, 0)], vec![v(Part, J, 1), v(Q, I, 0)], |i, j| i <= j),
        r("leftproj-vi", vec![v(Q, I, 0), v(Part, J, 0)], vec![v(Part, J, 0), v(Q, I, 0)], |i, j| i > j),
        r("leftproj-vii", vec![v(Q, I, 0), v(P, J, 0)], vec![v(P, J, 0), v(Q, I, 0)], any),
        r("rightproj-i", vec![v(QQ, I, 0)], vec![v(Part, I, 0), v(Int, I, 0)], any),
        r("rightproj-ii", vec![v(QQ, I, 0), v(QQ, J, 0)], vec![v(QQ, J, 1), v(QQ, I, 0)], |i, j| i <= j),
        r("rightproj-iii", vec![v(QQ, I, 0), v(Int, J, 0)], vec![v(Int, J, 1), v(QQ, I, 0)], |i, j| i < j),
        r("rightproj-iv", vec![v(QQ, I, 0), v(Int, J, 0)], vec![v(Int, J, 0), v(QQ, I, -1)], |i, j| i >= j + 2),
        r("rightproj-v", vec![v(QQ, I, 0), v(Part, J, 0)], vec![v(Part, J, 1), v(QQ, I, 0)], |i, j| i < j),
        r("rightproj-vi", vec![v(QQ, I, 0), v(Part, J, 0)], vec![v(Part, J, 0), v(QQ, I, 0)], |i, j| i >= j),
        r("rightproj-vii", vec![v(QQ, I, 0), v(P, J, 0)], vec![v(P, J, 0), v(QQ, I, 0)], any),
        r("leftrightinter-i", vec![v(QQ, I, 0), v(Q, J, 0)], vec![v(Q, J, 1), v(QQ, I, 0)], |i, j| i < j),
        r("leftrightinter-ii", vec![v(QQ, I, 0), v(Q, J, 0)], vec![v(Q, J, 0), v(QQ, I, -1)], |i, j| i > j),
    ]
}

/// All defining relations of the monoid.
pub fn relations() -> &'static [Relation] {
    static T: OnceLock<Vec<Relation>> = OnceLock::new();
    T.get_or_init(table)
}

pub fn relation(name: &str) -> Result<&'static Relation> {
    relations()
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| Error::Invalid(format!("unknown relation `{name}`")))
}

fn expand_pat(p: &Pat) -> Vec<Pat> {
    match p.kind {
        GenKind::Q => vec![
            Pat {
                kind: GenKind::Part,
                off: p.off + 1,
                ..*p
            },
            Pat {
                kind: GenKind::Int,
                ..*p
            },
        ],
        GenKind::QQ => vec![
            Pat {
                kind: GenKind::Part,
                ..*p
            },
            Pat {
                kind: GenKind::Int,
                ..*p
            },
        ],
        _ => vec![*p],
    }
}

/// The relations seen by `Int`/`Part` words once `Q`, `QQ` are spelled out.
fn id_relations() -> &'static [Relation] {
    static T: OnceLock<Vec<Relation>> = OnceLock::new();
    T.get_or_init(|| {
        table()
            .into_iter()
            .filter(|r| {
                r.lhs.len() == r.rhs.len()
                    && !r.lhs.iter().chain(&r.rhs).any(|p| p.kind == GenKind::P)
            })
            .map(|r| Relation {
                lhs: r.lhs.iter().flat_map(expand_pat).collect(),
                rhs: r.rhs.iter().flat_map(expand_pat).collect(),
                ..r
            })
            .collect()
    })
}

impl Relation {
    fn sides(&self, dir: Direction) -> (&[Pat], &[Pat]) {
        match dir {
            Direction::Forward => (&self.lhs, &self.rhs),
            Direction::Backward => (&self.rhs, &self.lhs),
        }
    }

    pub fn window(&self, dir: Direction) -> usize {
        self.sides(dir).0.len()
    }

    /// Rewrites `window` if it matches the source side.
    fn rewrite(&self, window: &[Gen], dir: Direction) -> Option<Vec<Gen>> {
        let (src, dst) = self.sides(dir);
        if window.len() != src.len() {
            return None;
        }
        let mut vars: [Option<i64>; 2] = [None, None];
        for (g, p) in window.iter().zip(src) {
            if g.kind != p.kind {
                return None;
            }
            let idx = g.index as i64;
            match p.var {
                None => {
                    if idx != p.off {
                        return None;
                    }
                }
                Some(k) => {
                    let val = idx - p.off;
                    if val < 1 || vars[k].is_some_and(|x| x != val) {
                        return None;
                    }
                    vars[k] = Some(val);
                }
            }
        }
        let (i, j) = (vars[0].unwrap_or(1), vars[1].unwrap_or(1));
        if !(self.cond)(i, j) {
            return None;
        }
        dst.iter()
            .map(|p| {
                let idx = match p.var {
                    None => p.off,
                    Some(k) => vars[k]? + p.off,
                };
                (idx >= 1).then(|| Gen::new(p.kind, idx as u32))
            })
            .collect()
    }

    /// Both sides at `(i, j)`, or `None` if the side condition fails or an
    /// index drops below 1.
    pub fn instance(&self, i: u32, j: u32) -> Option<(Word, Word)> {
        if !(self.cond)(i as i64, j as i64) {
            return None;
        }
        let vals = [i as i64, j as i64];
        let side = |ps: &[Pat]| -> Option<Word> {
            ps.iter()
                .map(|p| {
                    let idx = p.var.map_or(p.off, |k| vals[k] + p.off);
                    (idx >= 1).then(|| Gen::new(p.kind, idx as u32))
                })
                .collect::<Option<Vec<_>>>()
                .map(Word)
        };
        Some((side(&self.lhs)?, side(&self.rhs)?))
    }

    pub fn display(&self) -> String {
        let side = |ps: &[Pat]| {
            ps.iter()
                .map(|p| {
                    let g = Gen::new(p.kind, 1).to_string();
                    let head = &g[..g.len() - 1];
                    match p.var {
                        None => format!("{head}{}", p.off),
                        Some(k) => {
                            let n = if k == I { "i" } else { "j" };
                            match p.off {
                                0 => format!("{head}{n}"),
                                o if o > 0 => format!("{head}({n}+{o})"),
                                o => format!("{head}({n}{o})"),
                            }
                        }
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!("{} ~ {}", side(&self.lhs), side(&self.rhs))
    }
}

/// Applies one relation at `pos` (0-based start of the window).
pub fn relation_step(w: &Word, pos: usize, rule: &str, dir: Direction) -> Result<Word> {
    let r = relation(rule)?;
    let len = r.window(dir);
    if pos + len > w.len() {
        return Err(Error::NotApplicable(format!("{rule} at {pos} of `{w}`")));
    }
    let out = r
        .rewrite(&w.0[pos..pos + len], dir)
        .ok_or_else(|| Error::NotApplicable(format!("{rule} at {pos} of `{w}`")))?;
    let mut gens = w.0[..pos].to_vec();
    gens.extend(out);
    gens.extend_from_slice(&w.0[pos + len..]);
    Ok(Word(gens))
}

/// Every `(relation, position, direction)` applicable to `w`.
pub fn applicable_steps(w: &Word) -> Vec<(&'static str, usize, Direction)> {
    let mut out = Vec::new();
    for r in relations() {
        for dir in [Direction::Forward, Direction::Backward] {
            let len = r.window(dir);
            for pos in 0..=w.len().saturating_sub(len) {
                if pos + len <= w.len() && r.rewrite(&w.0[pos..pos + len], dir).is_some() {
                    out.push((r.name, pos, dir));
                }
            }
        }
    }
    out
}

/// Upper bound on the congruence-class search; beyond it the least word seen is returned.
pub const CLASS_CAP: usize = 200_000;

fn letter_key(g: &Gen) -> (u8, i64) {
    match g.kind {
        GenKind::P => (0, g.index as i64),
        GenKind::Part => (1, g.index as i64),
        GenKind::Int => (2, -(g.index as i64)),
        GenKind::Q => (3, g.index as i64),
        GenKind::QQ => (4, g.index as i64),
    }
}

fn word_key(w: &[Gen]) -> Vec<(u8, i64)> {
    w.iter().map(letter_key).collect()
}

#[cfg(test)]
fn encode(w: &[Gen]) -> Vec<u16> {
    w.iter()
        .map(|g| ((g.kind == GenKind::Int) as u16) << 15 | g.index as u16)
        .collect()
}

#[cfg(test)]
fn decode(w: &[u16]) -> Vec<Gen> {
    w.iter()
        .map(|&c| {
            let kind = if c >> 15 == 1 {
                GenKind::Int
            } else {
                GenKind::Part
            };
            Gen::new(kind, (c & 0x7fff) as u32)
        })
        .collect()
}

/// Least element of the congruence class of an `Int`/`Part` word.
fn class_min(w: &[Gen]) -> (Vec<Gen>, bool) {
    if w.iter().all(|g| g.kind == GenKind::Part) {
        let mut s = w.to_vec();
        s.sort_by_key(|g| g.index);
        return (s, true);
    }
    if w.len() > trace::MAX_EVENTS {
        return (w.to_vec(), false);
    }
    trace::class_min(w, CLASS_CAP)
}

/// Word-level search of the same class; the reference for `class_min`.
#[cfg(test)]
fn class_min_words(w: &[Gen]) -> (Vec<Gen>, bool) {
    use std::collections::{HashSet, VecDeque};
    let rels = id_relations();
    let start = encode(w);
    let mut seen: HashSet<Vec<u16>> = HashSet::new();
    let mut queue = VecDeque::new();
    let mut best = w.to_vec();
    let mut best_key = word_key(&best);
    seen.insert(start.clone());
    queue.push_back(start);
    let mut complete = true;
    while let Some(cur) = queue.pop_front() {
        let gens = decode(&cur);
        let k = word_key(&gens);
        if k < best_key {
            best_key = k;
            best = gens.clone();
        }
        for r in rels {
            for dir in [Direction::Forward, Direction::Backward] {
                let len = r.window(dir);
                if len > gens.len() {
                    continue;
                }
                for pos in 0..=gens.len() - len {
                    if let Some(out) = r.rewrite(&gens[pos..pos + len], dir) {
                        let mut next = gens[..pos].to_vec();
                        next.extend(out);
                        next.extend_from_slice(&gens[pos + len..]);
                        let code = encode(&next);
                        if !seen.contains(&code) {
                            if seen.len() >= CLASS_CAP {
                                complete = false;
                                continue;
                            }
                            seen.insert(code.clone());
                            queue.push_back(code);
                        }
                    }
                }
            }
        }
    }
    (best, complete)
}

/// Canonical representative.
///
/// `Q`/`QQ` are spelled out, `P` letters move to the front with redundant
/// `P1`s dropped, and the `Int`/`Part` remainder is replaced by the least
/// word of its congruence class (letters ordered `P < D < I`, `D` indices
/// ascending, `I` indices descending).
pub fn normalize(w: &Word) -> Word {
    normalize_checked(w).0
}

/// As [`normalize`], also reporting whether the class search finished.
pub fn normalize_checked(w: &Word) -> (Word, bool) {
    let mut ps = Vec::new();
    let mut rest = Vec::new();
    for g in &w.0 {
        match g.kind {
            GenKind::P => ps.push(*g),
            GenKind::Q => rest.extend([Gen::part(g.index + 1), Gen::int(g.index)]),
            GenKind::QQ => rest.extend([Gen::part(g.index), Gen::int(g.index)]),
            _ => rest.push(*g),
        }
    }
    let mut pnorm = Vec::with_capacity(ps.len());
    for (k, g) in ps.iter().enumerate() {
        if g.index == 1 && k + 1 < ps.len() {
            continue;
        }
        pnorm.push(*g);
    }
    let (tail, complete) = class_min(&rest);
    pnorm.extend(tail);
    (Word(pnorm), complete)
}

/// Result of [`word_eq`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WordEq {
    Equal,
    NotEqual(PolyFun),
    Unknown,
}

impl fmt::Display for WordEq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WordEq::Equal => write!(f, "Equal"),
            WordEq::NotEqual(w) => write!(f, "NotEqual witness: {w}"),
            WordEq::Unknown => write!(f, "Unknown"),
        }
    }
}

pub const ORACLE_TRIALS: usize = 12;

/// Random polynomial test functions: degree <= 4, at most 3 variables.
pub fn oracle_battery(seed: u64, count: usize) -> Vec<PolyFun> {
    let mut out = vec!["poly 1->1 on (0,1) : x1"
        .parse::<PolyFun>()
        .expect("literal")];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        let m = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=3);
        let dom = crate::eval::random_box(&mut rng, m);
        out.push(crate::eval::random_polyfun(&mut rng, &dom, n, 4));
    }
    out
}

/// Equal on identical normal forms; otherwise compares actions on a battery.
pub fn word_eq(a: &Word, b: &Word, seed: u64) -> WordEq {
    if normalize(a) == normalize(b) {
        return WordEq::Equal;
    }
    for f in oracle_battery(seed, ORACLE_TRIALS) {
        let fa = f.apply_word_with(a, Orientation::Ftc);
        let fb = f.apply_word_with(b, Orientation::Ftc);
        if fa != fb {
            return WordEq::NotEqual(f);
        }
    }
    WordEq::Unknown
}

/// Folds the dom/cod recursion right-to-left over `w`.
pub fn signature_effect(w: &Word, sig: &Signature) -> Signature {
    w.0.iter().rev().fold(sig.clone(), |s, g| {
        let i = g.index as usize;
        match g.kind {
            GenKind::Int | GenKind::Q | GenKind::QQ => Signature {
                dom: s.dom.domint(i),
                cod: s.cod,
            },
            GenKind::Part => s,
            GenKind::P => Signature {
                dom: s.dom,
                cod: if s.cod == 0 { 0 } else { 1 },
            },
        }
    })
}

/// A random word of length `0..=max_len` with indices `1..=max_index`.
pub fn random_word<R: Rng>(rng: &mut R, max_len: usize, max_index: u32) -> Word {
    use GenKind::*;
    let len = rng.gen_range(0..=max_len);
    let kinds = [Int, Part, P, Q, QQ];
    Word(
        (0..len)
            .map(|_| {
                Gen::new(
                    *kinds.choose(rng).expect("nonempty"),
                    rng.gen_range(1..=max_index),
                )
            })
            .collect(),
    )
}

/// Applies `steps` random relation steps (either direction).
pub fn random_rewrites<R: Rng>(rng: &mut R, w: &Word, steps: usize) -> Word {
    let mut cur = w.clone();
    for _ in 0..steps {
        let opts = applicable_steps(&cur);
        let Some(&(rule, pos, dir)) = opts.choose(rng) else {
            break;
        };
        cur = relation_step(&cur, pos, rule, dir).expect("listed as applicable");
    }
    cur
}

pub fn unit_signature(dom: OpenBox, cod: usize) -> Signature {
    Signature { dom, cod }
}
