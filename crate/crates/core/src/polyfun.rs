//! Exact vector polynomials with rational coefficients on open boxes.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};
use crate::interval::{range_bound, OpenBox, Ray1};
use crate::monoid::{Gen, GenKind, Word};
use crate::rational::{fmt_q, parse_q, q, Q};

/// Exponent vector; ordered graded-lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mono(pub Vec<u32>);

impl Mono {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial in `arity` variables. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly {
    arity: usize,
    terms: BTreeMap<Mono, Q>,
}

impl Poly {
    pub fn zero(arity: usize) -> Poly {
        Poly {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(arity: usize, c: Q) -> Poly {
        Poly::monomial(arity, vec![0; arity], c)
    }

    /// The coordinate `x_{k+1}` (0-based `k`).
    pub fn var(arity: usize, k: usize) -> Poly {
        assert!(k < arity, "variable index out of range");
        let mut e = vec![0; arity];
        e[k] = 1;
        Poly::monomial(arity, e, Q::one())
    }

    pub fn monomial(arity: usize, exps: Vec<u32>, c: Q) -> Poly {
        assert_eq!(exps.len(), arity);
        let mut p = Poly::zero(arity);
        if !c.is_zero() {
            p.terms.insert(Mono(exps), c);
        }
        p
    }

    pub fn from_terms(
        arity: usize,
        terms: impl IntoIterator<Item = (Vec<u32>, Q)>,
    ) -> Result<Poly> {
        let mut p = Poly::zero(arity);
        for (e, c) in terms {
            dim_check(arity, e.len())?;
            p.add_term(Mono(e), c);
        }
        Ok(p)
    }

    fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Q)> {
        self.terms.iter().map(|(m, c)| (&m.0, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Mono::degree).max().unwrap_or(0)
    }

    pub fn coeff(&self, exps: &[u32]) -> Q {
        self.terms
            .get(&Mono(exps.to_vec()))
            .cloned()
            .unwrap_or_else(Q::zero)
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                (m.degree() == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    /// `a x_{k+1} + b` with `a != 0`, as `(k, a, b)`.
    pub fn as_affine_single(&self) -> Option<(usize, Q, Q)> {
        let mut var = None;
        let mut b = Q::zero();
        for (m, c) in &self.terms {
            match m.degree() {
                0 => b = c.clone(),
                1 => {
                    if var.is_some() {
                        return None;
                    }
                    let k = m.0.iter().position(|&e| e == 1)?;
                    var = Some((k, c.clone()));
                }
                _ => return None,
            }
        }
        var.map(|(k, a)| (k, a, b))
    }

    pub fn add(&self, o: &Poly) -> Poly {
        assert_eq!(self.arity, o.arity, "arity mismatch in add");
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn neg(&self) -> Poly {
        Poly {
            arity: self.arity,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn scale(&self, a: &Q) -> Poly {
        if a.is_zero() {
            return Poly::zero(self.arity);
        }
        Poly {
            arity: self.arity,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * a)).collect(),
        }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        assert_eq!(self.arity, o.arity, "arity mismatch in mul");
        let mut r = Poly::zero(self.arity);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let e = m1.0.iter().zip(&m2.0).map(|(a, b)| a + b).collect();
                r.add_term(Mono(e), c1 * c2);
            }
        }
        r
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::constant(self.arity, Q::one());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        assert_eq!(x.len(), self.arity);
        let mut acc = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, &e) in x.iter().zip(&m.0) {
                if e > 0 {
                    t *= num_traits::pow(v.clone(), e as usize);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                m.0.iter()
                    .zip(x)
                    .fold(crate::rational::to_f64(c), |t, (&e, v)| {
                        t * v.powi(e as i32)
                    })
            })
            .sum()
    }

    /// d/dx_{k+1}
    pub fn deriv(&self, k: usize) -> Poly {
        let mut r = Poly::zero(self.arity);
        for (m, c) in &self.terms {
            let e = m.0[k];
            if e > 0 {
                let mut n = m.0.clone();
                n[k] -= 1;
                r.add_term(Mono(n), c * q(e as i64));
            }
        }
        r
    }

    /// Antiderivative in x_{k+1} with zero constant.
    pub fn antideriv(&self, k: usize) -> Poly {
        let mut r = Poly::zero(self.arity);
        for (m, c) in &self.terms {
            let mut n = m.0.clone();
            n[k] += 1;
            let d = q(n[k] as i64);
            r.add_term(Mono(n), c / d);
        }
        r
    }

    /// Renames variable `k` to `map[k]` in a ring of `arity` variables.
    pub fn rename(&self, arity: usize, map: &[usize]) -> Poly {
        assert_eq!(map.len(), self.arity);
        let mut r = Poly::zero(arity);
        for (m, c) in &self.terms {
            let mut n = vec![0; arity];
            for (k, &e) in m.0.iter().enumerate() {
                n[map[k]] += e;
            }
            r.add_term(Mono(n), c.clone());
        }
        r
    }

    /// Substitutes `args[k]` for `x_{k+1}`.
    pub fn substitute(&self, args: &[Poly], arity: usize) -> Poly {
        assert_eq!(args.len(), self.arity);
        let mut powers: Vec<Vec<Poly>> = args
            .iter()
            .map(|a| vec![Poly::constant(arity, Q::one()), a.clone()])
            .collect();
        let mut r = Poly::zero(arity);
        for (m, c) in &self.terms {
            let mut t = Poly::constant(arity, c.clone());
            for (k, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let cache = &mut powers[k];
                while cache.len() <= e as usize {
                    let next = cache[cache.len() - 1].mul(&cache[1]);
                    cache.push(next);
                }
                t = t.mul(&cache[e as usize]);
            }
            for (tm, tc) in t.terms {
                r.add_term(tm, tc);
            }
        }
        r
    }

    pub fn parse(arity: usize, s: &str) -> Result<Poly> {
        PolyParser::new(s, arity).parse()
    }

    pub fn to_json_terms(&self) -> Vec<(Vec<u32>, String)> {
        self.terms
            .iter()
            .map(|(m, c)| (m.0.clone(), fmt_q(c)))
            .collect()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if n == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let vars: Vec<String> =
                m.0.iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(k, &e)| {
                        if e == 1 {
                            format!("x{}", k + 1)
                        } else {
                            format!("x{}^{}", k + 1, e)
                        }
                    })
                    .collect();
            if vars.is_empty() {
                write!(f, "{}", fmt_q(&a))?;
            } else if a.is_one() {
                write!(f, "{}", vars.join(" "))?;
            } else {
                write!(f, "{} {}", fmt_q(&a), vars.join(" "))?;
            }
        }
        Ok(())
    }
}

struct PolyParser<'a> {
    src: &'a str,
    chars: Vec<char>,
    pos: usize,
    arity: usize,
}

impl<'a> PolyParser<'a> {
    fn new(src: &'a str, arity: usize) -> Self {
        PolyParser {
            src,
            chars: src.chars().collect(),
            pos: 0,
            arity,
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!(
            "{msg} at column {} in `{}`",
            self.pos + 1,
            self.src
        ))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn number(&mut self) -> Result<Q> {
        let start = self.pos;
        while self.pos < self.chars.len()
            && (self.chars[self.pos].is_ascii_digit() || matches!(self.chars[self.pos], '/' | '.'))
        {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        parse_q(&s).map_err(|_| self.err("bad coefficient"))
    }

    fn integer(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| self.err("expected integer"))
    }

    fn parse(mut self) -> Result<Poly> {
        let mut p = Poly::zero(self.arity);
        let mut first = true;
        loop {
            let mut sign = Q::one();
            match self.peek() {
                None if !first => break,
                None => return Err(self.err("empty polynomial")),
                Some('+') if !first => self.pos += 1,
                Some('-') => {
                    self.pos += 1;
                    sign = -sign;
                }
                Some(_) if !first => return Err(self.err("expected `+` or `-`")),
                Some(_) => {}
            }
            first = false;
            let mut coeff = sign;
            let mut exps = vec![0u32; self.arity];
            let mut any = false;
            loop {
                match self.peek() {
                    Some(c) if c.is_ascii_digit() => {
                        coeff *= self.number()?;
                    }
                    Some('x') => {
                        self.pos += 1;
                        let k = self.integer()? as usize;
                        if k == 0 || k > self.arity {
                            return Err(self.err(&format!("variable x{k} out of range")));
                        }
                        let e = if self.peek() == Some('^') {
                            self.pos += 1;
                            self.integer()?
                        } else {
                            1
                        };
                        exps[k - 1] += e;
                    }
                    Some('*') if any => {
                        self.pos += 1;
                        continue;
                    }
                    _ => break,
                }
                any = true;
            }
            if !any {
                return Err(self.err("expected a term"));
            }
            p.add_term(Mono(exps), coeff);
        }
        Ok(p)
    }
}

/// How `compose` reacts when the range guard cannot be established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompMode {
    #[default]
    Strict,
    Permissive,
}

/// Which endpoint `Q(i)` substitutes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// `Q(i)` drops coordinate `i` (upper endpoint), `QQ(i)` drops `i+1` and negates.
    #[default]
    Ftc,
    /// The mirrored reading: `Q(i)` drops `i+1`, `QQ(i)` drops `i`.
    Swapped,
}

/// A vector polynomial `U -> R^n` on an open box `U`.
#[derive(Clone, Debug)]
pub struct PolyFun {
    domain: OpenBox,
    comps: Vec<Poly>,
    partial: bool,
}

impl PartialEq for PolyFun {
    fn eq(&self, o: &Self) -> bool {
        self.domain == o.domain && self.comps == o.comps
    }
}

impl Eq for PolyFun {}

impl PolyFun {
    pub fn new(domain: OpenBox, comps: Vec<Poly>) -> Result<PolyFun> {
        for p in &comps {
            dim_check(domain.dim(), p.arity())?;
        }
        Ok(PolyFun {
            domain,
            comps,
            partial: false,
        })
    }

    pub fn scalar(domain: OpenBox, p: Poly) -> Result<PolyFun> {
        PolyFun::new(domain, vec![p])
    }

    pub fn domain(&self) -> &OpenBox {
        &self.domain
    }

    pub fn arity(&self) -> usize {
        self.domain.dim()
    }

    pub fn codim(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[Poly] {
        &self.comps
    }

    pub fn is_partial(&self) -> bool {
        self.partial
    }

    pub fn degree(&self) -> u32 {
        self.comps.iter().map(Poly::degree).max().unwrap_or(0)
    }

    fn with(&self, domain: OpenBox, comps: Vec<Poly>) -> PolyFun {
        PolyFun {
            domain,
            comps,
            partial: self.partial,
        }
    }

    pub fn eval_at(&self, x: &[Q]) -> Result<Vec<Q>> {
        if !self.domain.contains(x)? {
            let pt: Vec<String> = x.iter().map(fmt_q).collect();
            return Err(Error::OutsideDomain(format!(
                "({}) not in {}",
                pt.join(","),
                self.domain
            )));
        }
        Ok(self.comps.iter().map(|p| p.eval(x)).collect())
    }

    /// Same function on a smaller (or equal) box.
    pub fn restrict(&self, sub: &OpenBox) -> Result<PolyFun> {
        if !sub.subset_of(&self.domain) {
            return Err(Error::Invalid(format!(
                "{sub} is not a sub-box of {}",
                self.domain
            )));
        }
        Ok(self.with(sub.clone(), self.comps.clone()))
    }

    pub fn partial(&self, i: usize) -> PolyFun {
        assert!(i >= 1);
        let m = self.arity();
        let comps = if i <= m {
            self.comps.iter().map(|p| p.deriv(i - 1)).collect()
        } else {
            vec![Poly::zero(m); self.codim()]
        };
        self.with(self.domain.clone(), comps)
    }

    /// `∫_{x_j}^{x_{j+1}} f(.., t, ..) dt` on `domint(U, j)`.
    pub fn smint(&self, j: usize) -> PolyFun {
        assert!(j >= 1);
        let m = self.arity();
        if j > m {
            let lifted = self.lift_to(j);
            return lifted.smint(j);
        }
        let dom = self.domain.domint(j);
        let up = delete_map(m, j - 1);
        let low = delete_map(m, j);
        let comps = self
            .comps
            .iter()
            .map(|p| {
                let a = p.antideriv(j - 1);
                a.rename(m + 1, &up).sub(&a.rename(m + 1, &low))
            })
            .collect();
        self.with(dom, comps)
    }

    /// Precomposition with the projection `U x R^{k-m} -> U`.
    fn lift_to(&self, k: usize) -> PolyFun {
        let m = self.arity();
        let dom = self.domain.times(&OpenBox::real(k - m));
        let map: Vec<usize> = (0..m).collect();
        let comps = self.comps.iter().map(|p| p.rename(k, &map)).collect();
        self.with(dom, comps)
    }

    /// `f` with coordinate `d` (0-based) of `domint` deleted.
    fn drop_coord(&self, dom: OpenBox, d: usize) -> PolyFun {
        let m = self.arity();
        let map = delete_map(m, d);
        let comps = self.comps.iter().map(|p| p.rename(m + 1, &map)).collect();
        self.with(dom, comps)
    }

    fn endpoint(&self, i: usize, upper: bool, o: Orientation) -> PolyFun {
        let m = self.arity();
        let dom = self.domain.domint(i);
        let r = if i > m {
            self.lift_to(i + 1)
        } else {
            let drop_i = upper == (o == Orientation::Ftc);
            self.drop_coord(dom, if drop_i { i - 1 } else { i })
        };
        if upper {
            r
        } else {
            r.vneg()
        }
    }

    pub fn apply_gen_with(&self, g: Gen, o: Orientation) -> PolyFun {
        let i = g.index as usize;
        match g.kind {
            GenKind::Int => self.smint(i),
            GenKind::Part => self.partial(i),
            GenKind::P => {
                let n = self.codim();
                if n == 0 {
                    self.clone()
                } else if i <= n {
                    self.with(self.domain.clone(), vec![self.comps[i - 1].clone()])
                } else {
                    self.with(self.domain.clone(), vec![Poly::zero(self.arity())])
                }
            }
            GenKind::Q => self.endpoint(i, true, o),
            GenKind::QQ => self.endpoint(i, false, o),
        }
    }

    pub fn apply_gen(&self, g: Gen) -> PolyFun {
        self.apply_gen_with(g, Orientation::Ftc)
    }

    /// Right-to-left fold: `g1 g2 .. gk . f = g1.(g2.(..(gk.f)))`.
    pub fn apply_word_with(&self, w: &Word, o: Orientation) -> PolyFun {
        w.gens()
            .iter()
            .rev()
            .fold(self.clone(), |f, &g| f.apply_gen_with(g, o))
    }

    pub fn apply_word(&self, w: &Word) -> PolyFun {
        self.apply_word_with(w, Orientation::Ftc)
    }

    /// `self ∘ g`, guarded by an enclosure of `g`'s range.
    pub fn compose(&self, g: &PolyFun, mode: CompMode) -> Result<PolyFun> {
        dim_check(self.arity(), g.codim())?;
        let enc = range_bound(g);
        let fits = enc.inside(&self.domain);
        if !fits && mode == CompMode::Strict {
            return Err(Error::Guard(format!(
                "range enclosure {enc} not inside {}",
                self.domain
            )));
        }
        let n = g.arity();
        let comps = self
            .comps
            .iter()
            .map(|p| p.substitute(&g.comps, n))
            .collect();
        Ok(PolyFun {
            domain: g.domain.clone(),
            comps,
            partial: self.partial || g.partial || !fits,
        })
    }

    /// Cartesian product `<f1,..,fk>` on the product of the domains.
    pub fn tuple(fs: &[PolyFun]) -> PolyFun {
        let dom = OpenBox::product(&fs.iter().map(|f| f.domain.clone()).collect::<Vec<_>>());
        let total = dom.dim();
        let mut comps = Vec::new();
        let mut off = 0;
        for f in fs {
            let map: Vec<usize> = (off..off + f.arity()).collect();
            comps.extend(f.comps.iter().map(|p| p.rename(total, &map)));
            off += f.arity();
        }
        PolyFun {
            domain: dom,
            comps,
            partial: fs.iter().any(|f| f.partial),
        }
    }

    pub fn vsum(&self, o: &PolyFun) -> Result<PolyFun> {
        if self.domain != o.domain {
            return Err(Error::Signature(format!(
                "vsum domains differ: {} vs {}",
                self.domain, o.domain
            )));
        }
        dim_check(self.codim(), o.codim())?;
        let comps = self
            .comps
            .iter()
            .zip(&o.comps)
            .map(|(a, b)| a.add(b))
            .collect();
        Ok(PolyFun {
            domain: self.domain.clone(),
            comps,
            partial: self.partial || o.partial,
        })
    }

    /// Row-major outer product; an empty codomain behaves as the single entry 0.
    pub fn vprod(&self, o: &PolyFun) -> Result<PolyFun> {
        if self.domain != o.domain {
            return Err(Error::Signature(format!(
                "vprod domains differ: {} vs {}",
                self.domain, o.domain
            )));
        }
        let (m, n) = (self.codim(), o.codim());
        if m == 0 && n == 0 {
            return Ok(self.with(self.domain.clone(), vec![]));
        }
        let z = vec![Poly::zero(self.arity())];
        let a = if m == 0 { &z } else { &self.comps };
        let b = if n == 0 { &z } else { &o.comps };
        let mut comps = Vec::with_capacity(a.len() * b.len());
        for x in a {
            for y in b {
                comps.push(x.mul(y));
            }
        }
        Ok(PolyFun {
            domain: self.domain.clone(),
            comps,
            partial: self.partial || o.partial,
        })
    }

    pub fn vscal(&self, a: &Q) -> PolyFun {
        self.with(
            self.domain.clone(),
            self.comps.iter().map(|p| p.scale(a)).collect(),
        )
    }

    pub fn vneg(&self) -> PolyFun {
        self.with(
            self.domain.clone(),
            self.comps.iter().map(Poly::neg).collect(),
        )
    }

    pub fn jacobian_at_origin(&self) -> Vec<Vec<Q>> {
        let zero = vec![Q::zero(); self.arity()];
        self.comps
            .iter()
            .map(|p| (0..self.arity()).map(|k| p.deriv(k).eval(&zero)).collect())
            .collect()
    }

    pub fn to_json(&self) -> PolyFunJson {
        PolyFunJson {
            arity: self.arity(),
            codim: self.codim(),
            domain: self.domain.clone(),
            components: self.comps.iter().map(Poly::to_json_terms).collect(),
        }
    }

    pub fn from_json(j: &PolyFunJson) -> Result<PolyFun> {
        dim_check(j.arity, j.domain.dim())?;
        dim_check(j.codim, j.components.len())?;
        let comps = j
            .components
            .iter()
            .map(|ts| {
                let terms = ts
                    .iter()
                    .map(|(e, c)| Ok((e.clone(), parse_q(c)?)))
                    .collect::<Result<Vec<_>>>()?;
                Poly::from_terms(j.arity, terms)
            })
            .collect::<Result<Vec<_>>>()?;
        PolyFun::new(j.domain.clone(), comps)
    }
}

/// JSON exchange shape for [`PolyFun`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyFunJson {
    pub arity: usize,
    pub codim: usize,
    pub domain: OpenBox,
    pub components: Vec<Vec<(Vec<u32>, String)>>,
}

/// Variable map for deleting slot `d` (0-based) from an `(m+1)`-ary ring.
fn delete_map(m: usize, d: usize) -> Vec<usize> {
    (0..m).map(|k| if k < d { k } else { k + 1 }).collect()
}

impl fmt::Display for PolyFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "poly {}->{} on {} :",
            self.arity(),
            self.codim(),
            self.domain
        )?;
        for (k, p) in self.comps.iter().enumerate() {
            if k > 0 {
                write!(f, ";")?;
            }
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

impl FromStr for PolyFun {
    type Err = Error;

    fn from_str(s: &str) -> Result<PolyFun> {
        let s = s.trim();
        let rest = s
            .strip_prefix("poly")
            .ok_or_else(|| Error::Parse(format!("expected `poly` in `{s}`")))?;
        let (head, body) = rest
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected `:` in `{s}`")))?;
        let (dims, dom) = head
            .split_once(" on ")
            .ok_or_else(|| Error::Parse(format!("expected `on` in `{s}`")))?;
        let (m, n) = dims
            .trim()
            .split_once("->")
            .ok_or_else(|| Error::Parse(format!("expected `m->n` in `{s}`")))?;
        let bad = |x: &str| Error::Parse(format!("bad dimension `{x}`"));
        let m: usize = m.trim().parse().map_err(|_| bad(m))?;
        let n: usize = n.trim().parse().map_err(|_| bad(n))?;
        let domain: OpenBox = dom.parse()?;
        dim_check(m, domain.dim())?;
        let comps: Vec<Poly> = if body.trim().is_empty() {
            vec![]
        } else {
            body.split(';')
                .map(|c| Poly::parse(m, c))
                .collect::<Result<_>>()?
        };
        dim_check(n, comps.len())?;
        PolyFun::new(domain, comps)
    }
}

/// Concrete realizations of the structural maps.
pub mod prim {
    use super::*;

    fn coords(arity: usize, idx: impl IntoIterator<Item = usize>) -> Vec<Poly> {
        idx.into_iter().map(|k| Poly::var(arity, k)).collect()
    }

    pub fn constant(dom: &OpenBox, values: &[Q]) -> PolyFun {
        let m = dom.dim();
        PolyFun::new(
            dom.clone(),
            values
                .iter()
                .map(|c| Poly::constant(m, c.clone()))
                .collect(),
        )
        .expect("arity matches")
    }

    pub fn zero(dom: &OpenBox, n: usize) -> PolyFun {
        constant(dom, &vec![Q::zero(); n])
    }

    pub fn identity(dom: &OpenBox) -> PolyFun {
        let m = dom.dim();
        PolyFun::new(dom.clone(), coords(m, 0..m)).expect("arity matches")
    }

    /// Inclusion of a sub-box: the identity restricted to `sub`.
    pub fn incl(sub: &OpenBox) -> PolyFun {
        identity(sub)
    }

    pub fn diag(dom: &OpenBox, n: usize) -> PolyFun {
        let m = dom.dim();
        let comps = (0..n).flat_map(|_| coords(m, 0..m)).collect();
        PolyFun::new(dom.clone(), comps).expect("arity matches")
    }

    /// Projection of `U_1 x .. x U_k` onto block `j` (1-based).
    pub fn proj_block(blocks: &[OpenBox], j: usize) -> Result<PolyFun> {
        if j == 0 || j > blocks.len() {
            return Err(Error::Invalid(format!("block {j} of {}", blocks.len())));
        }
        let dom = OpenBox::product(blocks);
        let off: usize = blocks[..j - 1].iter().map(OpenBox::dim).sum();
        let comps = coords(dom.dim(), off..off + blocks[j - 1].dim());
        PolyFun::new(dom, comps)
    }

    /// `x -> x_i` on `dom` (1-based).
    pub fn coord(dom: &OpenBox, i: usize) -> Result<PolyFun> {
        if i == 0 || i > dom.dim() {
            return Err(Error::Invalid(format!("coordinate {i} of R^{}", dom.dim())));
        }
        PolyFun::new(dom.clone(), coords(dom.dim(), [i - 1]))
    }

    /// `R^{m+1} -> R^m`, dropping coordinate `i`.
    pub fn proje(m: usize, i: usize) -> Result<PolyFun> {
        if i == 0 || i > m + 1 {
            return Err(Error::Invalid(format!(
                "proje({m},{i}) needs 1 <= i <= m+1"
            )));
        }
        PolyFun::new(
            OpenBox::real(m + 1),
            coords(m + 1, (0..m).map(|k| if k < i - 1 { k } else { k + 1 })),
        )
    }

    /// `R^{m+1} -> R^m`: slot `i` set to 0, slot `i+1` dropped.
    pub fn sectn(m: usize, i: usize) -> Result<PolyFun> {
        if i == 0 || i > m {
            return Err(Error::Invalid(format!("sectn({m},{i}) needs 1 <= i <= m")));
        }
        let comps = (0..m)
            .map(|k| match (k + 1).cmp(&i) {
                Ordering::Less => Poly::var(m + 1, k),
                Ordering::Equal => Poly::zero(m + 1),
                Ordering::Greater => Poly::var(m + 1, k + 1),
            })
            .collect();
        PolyFun::new(OpenBox::real(m + 1), comps)
    }

    /// `A x B -> B x A`.
    pub fn switch(a: &OpenBox, b: &OpenBox) -> PolyFun {
        let (p, r) = (a.dim(), b.dim());
        let comps = coords(p + r, (p..p + r).chain(0..p));
        PolyFun::new(a.times(b), comps).expect("arity matches")
    }

    /// Coordinate permutation: output slot `j` reads input `sigma[j]` (0-based).
    pub fn permute(dom: &OpenBox, sigma: &[usize]) -> Result<PolyFun> {
        dim_check(dom.dim(), sigma.len())?;
        let mut seen = vec![false; sigma.len()];
        for &s in sigma {
            if s >= sigma.len() || std::mem::replace(&mut seen[s], true) {
                return Err(Error::Invalid("not a permutation".into()));
            }
        }
        PolyFun::new(dom.clone(), coords(dom.dim(), sigma.iter().copied()))
    }

    pub fn trasl(t: &[Q]) -> PolyFun {
        let m = t.len();
        let comps = t
            .iter()
            .enumerate()
            .map(|(k, c)| Poly::var(m, k).add(&Poly::constant(m, c.clone())))
            .collect();
        PolyFun::new(OpenBox::real(m), comps).expect("arity matches")
    }

    /// Sum of `k` vectors of `R^n`.
    pub fn vecsum(n: usize, k: usize) -> PolyFun {
        let a = n * k;
        let comps = (0..n)
            .map(|c| (0..k).fold(Poly::zero(a), |acc, b| acc.add(&Poly::var(a, b * n + c))))
            .collect();
        PolyFun::new(OpenBox::real(a), comps).expect("arity matches")
    }

    pub fn vecprod(m: usize, n: usize) -> PolyFun {
        let dom = OpenBox::real(m + n);
        let x = PolyFun::new(dom.clone(), coords(m + n, 0..m)).expect("arity");
        let y = PolyFun::new(dom, coords(m + n, m..m + n)).expect("arity");
        x.vprod(&y).expect("same domain")
    }

    pub fn vecminus(n: usize) -> PolyFun {
        identity(&OpenBox::real(n)).vneg()
    }

    /// `U1 -> U1 x U2`, `x -> (x, 0)`.
    pub fn pointed_incl(u1: &OpenBox, u2: &OpenBox) -> PolyFun {
        let (p, r) = (u1.dim(), u2.dim());
        let comps = coords(p, 0..p)
            .into_iter()
            .chain(std::iter::repeat_n(Poly::zero(p), r))
            .collect();
        PolyFun::new(u1.clone(), comps).expect("arity matches")
    }

    /// The scalar linear form `s -> Σ a_k s_k` on `R^L`.
    pub fn linear_form(coeffs: &[Q]) -> Poly {
        let l = coeffs.len();
        (0..l).fold(Poly::zero(l), |acc, k| {
            acc.add(&Poly::var(l, k).scale(&coeffs[k]))
        })
    }

    pub fn ray_box(a: i64, b: i64) -> OpenBox {
        OpenBox::new(vec![Ray1::Bounded(q(a), q(b))])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qf;

    fn pf(s: &str) -> PolyFun {
        s.parse().unwrap()
    }

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(
            pf("poly 1->1 on (0,2) : x1^2")
                .eval_at(&[qf(3, 2)])
                .unwrap(),
            vec![qf(9, 4)]
        );
        assert_eq!(
            pf("poly 2->2 on RxR : x1; x2")
                .eval_at(&[q(1), q(2)])
                .unwrap(),
            vec![q(1), q(2)]
        );
        assert_eq!(
            pf("poly 2->1 on RxR : x1 x2")
                .eval_at(&[q(2), q(3)])
                .unwrap(),
            vec![q(6)]
        );
        assert!(matches!(
            pf("poly 1->1 on (0,1) : x1").eval_at(&[q(2)]),
            Err(Error::OutsideDomain(_))
        ));
    }

    #[test]
    fn partial_examples() {
        assert_eq!(
            pf("poly 2->1 on RxR : x1^2 x2").partial(1),
            pf("poly 2->1 on RxR : 2 x1 x2")
        );
        assert_eq!(
            pf("poly 1->1 on R : x1^2").partial(3),
            pf("poly 1->1 on R : 0")
        );
        assert_eq!(
            pf("poly 1->1 on R : 5").partial(1),
            pf("poly 1->1 on R : 0")
        );
    }

    #[test]
    fn smint_examples() {
        assert_eq!(
            pf("poly 1->1 on R : x1^2").smint(1),
            pf("poly 2->1 on RxR : 1/3 x2^3 - 1/3 x1^3")
        );
        assert_eq!(
            pf("poly 1->1 on R : 1").smint(1),
            pf("poly 2->1 on RxR : x2 - x1")
        );
        assert_eq!(
            pf("poly 0->1 on R0 : 7").smint(1),
            pf("poly 2->1 on RxR : 7 x2 - 7 x1")
        );
    }

    #[test]
    fn smint_high_index_lifts() {
        let f = pf("poly 1->1 on (0,1) : x1");
        assert_eq!(f.smint(2), pf("poly 3->1 on (0,1)xRxR : x1 x3 - x1 x2"));
    }

    #[test]
    fn compose_examples() {
        let f = pf("poly 1->1 on (0,2) : x1^2");
        let g = pf("poly 1->1 on (-1/2,1/2) : x1 + 1");
        assert_eq!(
            f.compose(&g, CompMode::Strict).unwrap(),
            pf("poly 1->1 on (-1/2,1/2) : x1^2 + 2 x1 + 1")
        );
        let id = prim::identity(&OpenBox::real(1));
        let h = pf("poly 1->1 on (0,1) : x1^3 - x1");
        assert_eq!(id.compose(&h, CompMode::Strict).unwrap(), h);
        let f01 = pf("poly 1->1 on (0,1) : x1");
        let two = pf("poly 1->1 on R : 2");
        assert!(matches!(
            f01.compose(&two, CompMode::Strict),
            Err(Error::Guard(_))
        ));
        let loose = f01.compose(&two, CompMode::Permissive).unwrap();
        assert!(loose.is_partial());
    }

    #[test]
    fn tuple_examples() {
        let a = pf("poly 1->1 on R : x1^2");
        let b = pf("poly 1->1 on R : x1^3");
        assert_eq!(
            PolyFun::tuple(&[a.clone(), b]),
            pf("poly 2->2 on RxR : x1^2; x2^3")
        );
        assert_eq!(PolyFun::tuple(std::slice::from_ref(&a)), a);
        let e = pf("poly 0->0 on R0 :");
        assert_eq!(PolyFun::tuple(&[a.clone(), e]), a);
    }

    #[test]
    fn vector_ops() {
        let f = pf("poly 1->2 on R : x1; 2");
        let g = pf("poly 1->2 on R : 3; x1^2");
        assert_eq!(
            f.vprod(&g).unwrap(),
            pf("poly 1->4 on R : 3 x1; x1^3; 6; 2 x1^2")
        );
        let x = pf("poly 1->1 on R : x1");
        assert_eq!(x.vsum(&x.vneg()).unwrap(), pf("poly 1->1 on R : 0"));
        assert_eq!(f.vscal(&q(1)), f);
        assert_eq!(x.vprod(&pf("poly 1->0 on R :")).unwrap().codim(), 1);
        assert_eq!(
            pf("poly 1->0 on R :")
                .vprod(&pf("poly 1->0 on R :"))
                .unwrap()
                .codim(),
            0
        );
    }

    #[test]
    fn primitive_examples() {
        assert_eq!(prim::proje(1, 1).unwrap(), pf("poly 2->1 on RxR : x2"));
        let d = prim::diag(&"(0,1)".parse().unwrap(), 2);
        assert_eq!(d, pf("poly 1->2 on (0,1) : x1; x1"));
        let t = prim::trasl(&[q(3)]);
        assert_eq!(t.eval_at(&[q(2)]).unwrap(), vec![q(5)]);
        assert_eq!(prim::sectn(2, 1).unwrap(), pf("poly 3->2 on RxRxR : 0; x3"));
        assert_eq!(
            prim::switch(&OpenBox::real(1), &OpenBox::real(2)),
            pf("poly 3->3 on RxRxR : x2; x3; x1")
        );
        assert_eq!(
            prim::vecsum(2, 2),
            pf("poly 4->2 on RxRxRxR : x1 + x3; x2 + x4")
        );
        assert_eq!(
            prim::vecprod(2, 2),
            pf("poly 4->4 on RxRxRxR : x1 x3; x1 x4; x2 x3; x2 x4")
        );
        assert_eq!(
            prim::pointed_incl(&OpenBox::unit(1), &"(-1,1)".parse().unwrap()),
            pf("poly 1->2 on (0,1) : x1; 0")
        );
        assert_eq!(
            prim::coord(&OpenBox::real(3), 2).unwrap(),
            pf("poly 3->1 on RxRxR : x2")
        );
        assert_eq!(prim::proje(1, 2).unwrap(), pf("poly 2->1 on RxR : x1"));
        assert!(prim::proje(1, 3).is_err());
    }

    #[test]
    fn endpoint_generators_follow_ftc() {
        let f = pf("poly 1->1 on (0,1) : x1^2");
        let q1 = f.apply_gen(Gen::q(1));
        assert_eq!(q1, pf("poly 2->1 on (0,1)x(0,1) : x2^2"));
        assert_eq!(q1, f.apply_word(&w("D2 I1")));
        let qq1 = f.apply_gen(Gen::qq(1));
        assert_eq!(qq1, pf("poly 2->1 on (0,1)x(0,1) : -x1^2"));
        assert_eq!(qq1, f.apply_word(&w("D1 I1")));
    }

    #[test]
    fn swapped_orientation_breaks_ftc() {
        let f = pf("poly 1->1 on (0,1) : x1");
        let q1 = f.apply_gen_with(Gen::q(1), Orientation::Swapped);
        assert_ne!(q1, f.apply_word(&w("D2 I1")));
    }

    #[test]
    fn projection_generator() {
        let f = pf("poly 1->2 on R : x1; x1^3");
        assert_eq!(f.apply_gen(Gen::p(2)), pf("poly 1->1 on R : x1^3"));
        assert_eq!(f.apply_gen(Gen::p(5)), pf("poly 1->1 on R : 0"));
        let e = pf("poly 1->0 on R :");
        assert_eq!(e.apply_gen(Gen::p(1)), e);
    }

    #[test]
    fn text_round_trip() {
        for s in [
            "poly 2->2 on (0,1)xR : 3/2 x1^2 x2 - x2; 0",
            "poly 0->1 on R0 : -4",
            "poly 1->0 on (-inf,2) :",
        ] {
            assert_eq!(pf(s).to_string(), s);
        }
        assert!("poly 1->1 on R : x2".parse::<PolyFun>().is_err());
        assert!("poly 1->2 on R : x1".parse::<PolyFun>().is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = pf("poly 2->2 on (0,1)xR : 3/2 x1^2 x2 - x2; 7");
        let s = serde_json::to_string(&f.to_json()).unwrap();
        let back = PolyFun::from_json(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn substitute_matches_eval() {
        let p = Poly::parse(2, "x1^2 x2 - 3 x2 + 1").unwrap();
        let a = Poly::parse(1, "x1 + 1").unwrap();
        let b = Poly::parse(1, "2 x1^2").unwrap();
        let s = p.substitute(&[a.clone(), b.clone()], 1);
        for t in [-2, 0, 3] {
            let x = [q(t)];
            assert_eq!(s.eval(&x), p.eval(&[a.eval(&x), b.eval(&x)]));
        }
    }
}
