//! Free-magma terms over base functions: composition, tupling and word action.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::OpenBox;
use crate::monoid::{signature_effect, Word};
use crate::polyfun::{prim, CompMode, PolyFun, PolyFunJson};
use crate::rational::Q;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BaseFn {
    Smooth(PolyFun),
    /// A named continuous scalar function known only by its domain.
    Opaque {
        name: String,
        domain: OpenBox,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Base(BaseFn),
    Tuple(Vec<Term>),
    /// `Comp(x, y)` is `x ∘ y`.
    Comp(Box<Term>, Box<Term>),
    Act(Word, Box<Term>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub dom: OpenBox,
    pub cod: usize,
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> R^{}", self.dom, self.cod)
    }
}

/// Address of a subterm: child selectors from the root. Tuple children are
/// numbered from 0; `Comp` has left 0 and right 1; `Act` has the single child 0.
pub type Occurrence = Vec<usize>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Class {
    Smooth,
    ContinuousOk,
    Illegal,
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class::Smooth => "Smooth",
            Class::ContinuousOk => "ContinuousOK",
            Class::Illegal => "Illegal",
        })
    }
}

impl Term {
    pub fn smooth(f: PolyFun) -> Term {
        Term::Base(BaseFn::Smooth(f))
    }

    pub fn opaque(name: &str, domain: OpenBox) -> Term {
        Term::Base(BaseFn::Opaque {
            name: name.to_string(),
            domain,
        })
    }

    pub fn comp(x: Term, y: Term) -> Term {
        Term::Comp(Box::new(x), Box::new(y))
    }

    pub fn act(w: Word, t: Term) -> Term {
        Term::Act(w, Box::new(t))
    }

    pub fn tuple(ts: Vec<Term>) -> Term {
        Term::Tuple(ts)
    }

    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Base(_) => vec![],
            Term::Tuple(ts) => ts.iter().collect(),
            Term::Comp(a, b) => vec![a, b],
            Term::Act(_, t) => vec![t],
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn subterm(&self, path: &[usize]) -> Option<&Term> {
        let Some((&k, rest)) = path.split_first() else {
            return Some(self);
        };
        self.children().get(k).and_then(|c| c.subterm(rest))
    }
}

/// dom/cod by structural recursion.
pub fn signature(t: &Term, mode: CompMode) -> Result<Signature> {
    match t {
        Term::Base(BaseFn::Smooth(f)) => Ok(Signature {
            dom: f.domain().clone(),
            cod: f.codim(),
        }),
        Term::Base(BaseFn::Opaque { domain, .. }) => Ok(Signature {
            dom: domain.clone(),
            cod: 1,
        }),
        Term::Tuple(ts) => {
            if ts.is_empty() {
                return Err(Error::Signature("empty tuple".into()));
            }
            let sigs = ts
                .iter()
                .map(|c| signature(c, mode))
                .collect::<Result<Vec<_>>>()?;
            Ok(Signature {
                dom: OpenBox::product(&sigs.iter().map(|s| s.dom.clone()).collect::<Vec<_>>()),
                cod: sigs.iter().map(|s| s.cod).sum(),
            })
        }
        Term::Comp(x, y) => {
            let sx = signature(x, mode)?;
            let sy = signature(y, mode)?;
            if sy.cod != sx.dom.dim() && mode == CompMode::Strict {
                return Err(Error::Signature(format!(
                    "composition of {} after a map into R^{}",
                    sx.dom, sy.cod
                )));
            }
            Ok(Signature {
                dom: sy.dom,
                cod: sx.cod,
            })
        }
        Term::Act(w, x) => Ok(signature_effect(w, &signature(x, mode)?)),
    }
}

fn collect_occ(t: &Term, pat: &Term, path: &mut Vec<usize>, out: &mut Vec<Occurrence>) {
    if t == pat {
        out.push(path.clone());
    }
    for (k, c) in t.children().into_iter().enumerate() {
        path.push(k);
        collect_occ(c, pat, path, out);
        path.pop();
    }
}

/// Addresses (preorder) of every subterm structurally equal to `pattern`.
pub fn occurrences(t: &Term, pattern: &Term) -> Vec<Occurrence> {
    let mut out = Vec::new();
    collect_occ(t, pattern, &mut vec![], &mut out);
    out
}

fn replace_at(t: &Term, path: &[usize], new: &Term) -> Term {
    let Some((&k, rest)) = path.split_first() else {
        return new.clone();
    };
    match t {
        Term::Base(_) => unreachable!("validated path"),
        Term::Tuple(ts) => Term::Tuple(
            ts.iter()
                .enumerate()
                .map(|(i, c)| {
                    if i == k {
                        replace_at(c, rest, new)
                    } else {
                        c.clone()
                    }
                })
                .collect(),
        ),
        Term::Comp(a, b) => {
            if k == 0 {
                Term::comp(replace_at(a, rest, new), (**b).clone())
            } else {
                Term::comp((**a).clone(), replace_at(b, rest, new))
            }
        }
        Term::Act(w, x) => Term::Act(w.clone(), Box::new(replace_at(x, rest, new))),
    }
}

/// Simultaneous replacement at pairwise non-nested addresses.
pub fn substitute(t: &Term, assignment: &BTreeMap<Occurrence, Term>) -> Result<Term> {
    let keys: Vec<&Occurrence> = assignment.keys().collect();
    for (a, b) in keys.iter().zip(keys.iter().skip(1)) {
        // sorted order puts a prefix right before its extensions
        if b.starts_with(a) {
            return Err(Error::Overlap(format!("{a:?} is a prefix of {b:?}")));
        }
    }
    for k in &keys {
        if t.subterm(k).is_none() {
            return Err(Error::Invalid(format!("no subterm at {k:?}")));
        }
    }
    Ok(assignment
        .iter()
        .fold(t.clone(), |acc, (p, n)| replace_at(&acc, p, n)))
}

pub fn opaque_set(t: &Term) -> BTreeSet<String> {
    let mut s = BTreeSet::new();
    fn go(t: &Term, s: &mut BTreeSet<String>) {
        if let Term::Base(BaseFn::Opaque { name, .. }) = t {
            s.insert(name.clone());
        }
        for c in t.children() {
            go(c, s);
        }
    }
    go(t, &mut s);
    s
}

/// Opaque leaves with their declared domains.
pub fn opaque_decls(t: &Term) -> BTreeMap<String, OpenBox> {
    let mut s = BTreeMap::new();
    fn go(t: &Term, s: &mut BTreeMap<String, OpenBox>) {
        if let Term::Base(BaseFn::Opaque { name, domain }) = t {
            s.insert(name.clone(), domain.clone());
        }
        for c in t.children() {
            go(c, s);
        }
    }
    go(t, &mut s);
    s
}

pub fn classify(t: &Term) -> Class {
    if opaque_set(t).is_empty() {
        return Class::Smooth;
    }
    fn legal(t: &Term) -> bool {
        match t {
            Term::Act(w, x) => (w.is_integral() || opaque_set(x).is_empty()) && legal(x),
            _ => t.children().into_iter().all(legal),
        }
    }
    if legal(t) {
        Class::ContinuousOk
    } else {
        Class::Illegal
    }
}

fn comp_factors(t: &Term, out: &mut Vec<Term>) {
    match t {
        Term::Comp(a, b) => {
            comp_factors(a, out);
            comp_factors(b, out);
        }
        other => out.push(max_augment(other)),
    }
}

/// Right-associates every composition chain, recursively.
pub fn max_augment(t: &Term) -> Term {
    match t {
        Term::Base(_) => t.clone(),
        Term::Tuple(ts) => Term::Tuple(ts.iter().map(max_augment).collect()),
        Term::Act(w, x) => Term::Act(w.clone(), Box::new(max_augment(x))),
        Term::Comp(..) => {
            let mut fs = Vec::new();
            comp_factors(t, &mut fs);
            let last = fs.pop().expect("at least two factors");
            fs.into_iter().rev().fold(last, |acc, f| Term::comp(f, acc))
        }
    }
}

/// True when some `(a ∘ b) ∘ c` remains.
pub fn has_left_nested_comp(t: &Term) -> bool {
    match t {
        Term::Comp(a, _) if matches!(**a, Term::Comp(..)) => true,
        _ => t.children().into_iter().any(has_left_nested_comp),
    }
}

fn smooth_base(f: PolyFun) -> Term {
    Term::smooth(f)
}

/// `vecsum ∘ <t1, t2> ∘ diag`.
pub fn sum_t(t1: &Term, t2: &Term) -> Result<Term> {
    let (s1, s2) = (
        signature(t1, CompMode::Strict)?,
        signature(t2, CompMode::Strict)?,
    );
    if s1 != s2 {
        return Err(Error::Signature(format!("sum of {s1} and {s2}")));
    }
    Ok(Term::comp(
        Term::comp(
            smooth_base(prim::vecsum(s1.cod, 2)),
            Term::tuple(vec![t1.clone(), t2.clone()]),
        ),
        smooth_base(prim::diag(&s1.dom, 2)),
    ))
}

/// `vecprod ∘ <t1, t2> ∘ diag`.
pub fn mult_t(t1: &Term, t2: &Term) -> Result<Term> {
    let (s1, s2) = (
        signature(t1, CompMode::Strict)?,
        signature(t2, CompMode::Strict)?,
    );
    if s1.dom != s2.dom {
        return Err(Error::Signature(format!("product of {s1} and {s2}")));
    }
    Ok(Term::comp(
        Term::comp(
            smooth_base(prim::vecprod(s1.cod, s2.cod)),
            Term::tuple(vec![t1.clone(), t2.clone()]),
        ),
        smooth_base(prim::diag(&s1.dom, 2)),
    ))
}

/// `vecprod[1,n] ∘ <const a, t> ∘ diag`.
pub fn scal_t(a: &Q, t: &Term) -> Result<Term> {
    let s = signature(t, CompMode::Strict)?;
    Ok(Term::comp(
        Term::comp(
            smooth_base(prim::vecprod(1, s.cod)),
            Term::tuple(vec![
                smooth_base(prim::constant(&s.dom, std::slice::from_ref(a))),
                t.clone(),
            ]),
        ),
        smooth_base(prim::diag(&s.dom, 2)),
    ))
}

/// Declarations available to the parser.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env {
    pub opaques: BTreeMap<String, OpenBox>,
    pub smooth: BTreeMap<String, PolyFun>,
}

impl Env {
    /// One declaration per line: `name : <box>` (opaque) or `name = <polyfun>`.
    /// `#` starts a comment.
    pub fn parse(src: &str) -> Result<Env> {
        let mut env = Env::default();
        for (n, raw) in src.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::Parse(format!("env line {}: {m}", n + 1));
            if let Some((name, rhs)) = line.split_once('=') {
                let name = name.trim();
                check_ident(name).map_err(|e| err(e.to_string()))?;
                env.smooth.insert(
                    name.into(),
                    rhs.parse().map_err(|e: Error| err(e.to_string()))?,
                );
            } else if let Some((name, rhs)) = line.split_once(':') {
                let name = name.trim();
                check_ident(name).map_err(|e| err(e.to_string()))?;
                env.opaques.insert(
                    name.into(),
                    rhs.parse().map_err(|e: Error| err(e.to_string()))?,
                );
            } else {
                return Err(err(format!(
                    "expected `name : box` or `name = poly`, got `{line}`"
                )));
            }
        }
        Ok(env)
    }
}

fn check_ident(s: &str) -> Result<()> {
    let mut cs = s.chars();
    let ok = cs
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok && s != "poly" {
        Ok(())
    } else {
        Err(Error::Parse(format!("bad identifier `{s}`")))
    }
}

struct TermParser<'a> {
    src: &'a str,
    pos: usize,
    env: &'a Env,
}

impl<'a> TermParser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at offset {} in `{}`", self.pos, self.src))
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let r = self.rest();
        self.pos += r.len() - r.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(&format!("expected `{c}`")))
        }
    }

    fn until(&mut self, close: char) -> Result<&'a str> {
        let r = self.rest();
        let end = r
            .find(close)
            .ok_or_else(|| self.err(&format!("missing `{close}`")))?;
        self.pos += end + close.len_utf8();
        Ok(&r[..end])
    }

    fn term(&mut self) -> Result<Term> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let a = self.term()?;
                self.expect('.')?;
                let b = self.term()?;
                self.expect(')')?;
                Ok(Term::comp(a, b))
            }
            Some('<') => {
                self.pos += 1;
                let mut ts = vec![self.term()?];
                while self.peek() == Some(',') {
                    self.pos += 1;
                    ts.push(self.term()?);
                }
                self.expect('>')?;
                Ok(Term::Tuple(ts))
            }
            Some('[') => {
                self.pos += 1;
                let w: Word = self.until(']')?.parse()?;
                let t = self.term()?;
                Ok(Term::Act(w, Box::new(t)))
            }
            Some('{') => {
                self.pos += 1;
                let body = self.until('}')?;
                Ok(Term::smooth(body.parse()?))
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let r = self.rest();
                let end = r
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                    .unwrap_or(r.len());
                let name = &r[..end];
                self.pos += end;
                if let Some(d) = self.env.opaques.get(name) {
                    Ok(Term::opaque(name, d.clone()))
                } else if let Some(f) = self.env.smooth.get(name) {
                    Ok(Term::smooth(f.clone()))
                } else {
                    Err(self.err(&format!("undeclared identifier `{name}`")))
                }
            }
            _ => Err(self.err("expected a term")),
        }
    }
}

/// Parses the term grammar; smooth literals are written `{poly ...}`.
pub fn parse_term(src: &str, env: &Env) -> Result<Term> {
    let mut p = TermParser { src, pos: 0, env };
    let t = p.term()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(t)
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Base(BaseFn::Smooth(p)) => write!(f, "{{{p}}}"),
            Term::Base(BaseFn::Opaque { name, .. }) => write!(f, "{name}"),
            Term::Tuple(ts) => {
                write!(f, "<")?;
                for (k, t) in ts.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ">")
            }
            Term::Comp(a, b) => write!(f, "({a} . {b})"),
            Term::Act(w, t) => write!(f, "[{w}] {t}"),
        }
    }
}

/// JSON mirror of [`Term`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermJson {
    Smooth(PolyFunJson),
    Opaque { name: String, domain: OpenBox },
    Tuple(Vec<TermJson>),
    Comp(Box<TermJson>, Box<TermJson>),
    Act { word: Word, term: Box<TermJson> },
}

impl Term {
    pub fn to_json(&self) -> TermJson {
        match self {
            Term::Base(BaseFn::Smooth(p)) => TermJson::Smooth(p.to_json()),
            Term::Base(BaseFn::Opaque { name, domain }) => TermJson::Opaque {
                name: name.clone(),
                domain: domain.clone(),
            },
            Term::Tuple(ts) => TermJson::Tuple(ts.iter().map(Term::to_json).collect()),
            Term::Comp(a, b) => TermJson::Comp(Box::new(a.to_json()), Box::new(b.to_json())),
            Term::Act(w, t) => TermJson::Act {
                word: w.clone(),
                term: Box::new(t.to_json()),
            },
        }
    }

    pub fn from_json(j: &TermJson) -> Result<Term> {
        Ok(match j {
            TermJson::Smooth(p) => Term::smooth(PolyFun::from_json(p)?),
            TermJson::Opaque { name, domain } => Term::opaque(name, domain.clone()),
            TermJson::Tuple(ts) => {
                Term::Tuple(ts.iter().map(Term::from_json).collect::<Result<_>>()?)
            }
            TermJson::Comp(a, b) => Term::comp(Term::from_json(a)?, Term::from_json(b)?),
            TermJson::Act { word, term } => {
                Term::Act(word.clone(), Box::new(Term::from_json(term)?))
            }
        })
    }
}
