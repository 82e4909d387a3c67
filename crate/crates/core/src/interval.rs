//! Open boxes in R^m, the `domint` extension and range enclosures.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};
use crate::polyfun::{Poly, PolyFun};
use crate::rational::{fmt_q, parse_q, q, Q};

/// One open factor of a box: the line, a ray, or a bounded interval.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ray1 {
    Full,
    Left(Q),
    Right(Q),
    Bounded(Q, Q),
}

impl Ray1 {
    pub fn bounded(a: Q, b: Q) -> Result<Ray1> {
        if a < b {
            Ok(Ray1::Bounded(a, b))
        } else {
            Err(Error::Invalid(format!(
                "empty interval ({}, {})",
                fmt_q(&a),
                fmt_q(&b)
            )))
        }
    }

    pub fn lower(&self) -> Option<&Q> {
        match self {
            Ray1::Right(a) | Ray1::Bounded(a, _) => Some(a),
            _ => None,
        }
    }

    pub fn upper(&self) -> Option<&Q> {
        match self {
            Ray1::Left(b) | Ray1::Bounded(_, b) => Some(b),
            _ => None,
        }
    }

    pub fn from_bounds(lo: Option<Q>, hi: Option<Q>) -> Result<Ray1> {
        match (lo, hi) {
            (None, None) => Ok(Ray1::Full),
            (None, Some(b)) => Ok(Ray1::Left(b)),
            (Some(a), None) => Ok(Ray1::Right(a)),
            (Some(a), Some(b)) => Ray1::bounded(a, b),
        }
    }

    pub fn contains(&self, x: &Q) -> bool {
        self.lower().is_none_or(|a| a < x) && self.upper().is_none_or(|b| x < b)
    }

    /// A deterministic interior point: the midpoint, or one unit inside a ray.
    pub fn interior_point(&self) -> Q {
        match self {
            Ray1::Full => Q::zero(),
            Ray1::Left(b) => b - Q::one(),
            Ray1::Right(a) => a + Q::one(),
            Ray1::Bounded(a, b) => (a + b) / q(2),
        }
    }

    /// `self ⊆ other` as open intervals.
    pub fn subset_of(&self, other: &Ray1) -> bool {
        let lo_ok = match (self.lower(), other.lower()) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(c)) => a >= c,
        };
        let hi_ok = match (self.upper(), other.upper()) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(b), Some(d)) => b <= d,
        };
        lo_ok && hi_ok
    }
}

impl fmt::Display for Ray1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ray1::Full => write!(f, "R"),
            Ray1::Left(b) => write!(f, "(-inf,{})", fmt_q(b)),
            Ray1::Right(a) => write!(f, "({},inf)", fmt_q(a)),
            Ray1::Bounded(a, b) => write!(f, "({},{})", fmt_q(a), fmt_q(b)),
        }
    }
}

/// An open axis-aligned box; dimension 0 is the one-point space R^0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct OpenBox {
    factors: Vec<Ray1>,
}

impl OpenBox {
    pub fn new(factors: Vec<Ray1>) -> OpenBox {
        OpenBox { factors }
    }

    pub fn point() -> OpenBox {
        OpenBox::default()
    }

    pub fn real(m: usize) -> OpenBox {
        OpenBox {
            factors: vec![Ray1::Full; m],
        }
    }

    pub fn unit(m: usize) -> OpenBox {
        OpenBox {
            factors: vec![Ray1::Bounded(q(0), q(1)); m],
        }
    }

    pub fn interval(a: Q, b: Q) -> Result<OpenBox> {
        Ok(OpenBox {
            factors: vec![Ray1::bounded(a, b)?],
        })
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Ray1] {
        &self.factors
    }

    pub fn factor(&self, k: usize) -> &Ray1 {
        &self.factors[k]
    }

    pub fn contains(&self, x: &[Q]) -> Result<bool> {
        dim_check(self.dim(), x.len())?;
        Ok(self.factors.iter().zip(x).all(|(r, v)| r.contains(v)))
    }

    pub fn interior_point(&self) -> Vec<Q> {
        self.factors.iter().map(Ray1::interior_point).collect()
    }

    pub fn subset_of(&self, other: &OpenBox) -> bool {
        self.dim() == other.dim()
            && self
                .factors
                .iter()
                .zip(&other.factors)
                .all(|(a, b)| a.subset_of(b))
    }

    pub fn product(bs: &[OpenBox]) -> OpenBox {
        OpenBox {
            factors: bs.iter().flat_map(|b| b.factors.iter().cloned()).collect(),
        }
    }

    pub fn times(&self, other: &OpenBox) -> OpenBox {
        OpenBox::product(&[self.clone(), other.clone()])
    }

    /// Sub-box of factors `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> OpenBox {
        OpenBox {
            factors: self.factors[start..end].to_vec(),
        }
    }

    /// Drops factor `k` (0-based).
    pub fn delete(&self, k: usize) -> OpenBox {
        let mut factors = self.factors.clone();
        factors.remove(k);
        OpenBox { factors }
    }

    /// The integration-slot extension. `i` is 1-based.
    pub fn domint(&self, i: usize) -> OpenBox {
        assert!(i >= 1, "domint index is 1-based");
        let m = self.dim();
        let mut factors = self.factors.clone();
        if i <= m {
            factors.insert(i, self.factors[i - 1].clone());
        } else {
            factors.extend(std::iter::repeat_n(Ray1::Full, i - m + 1));
        }
        OpenBox { factors }
    }

    pub fn contains_origin(&self) -> bool {
        self.factors.iter().all(|r| r.contains(&Q::zero()))
    }
}

impl fmt::Display for OpenBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "R0");
        }
        for (k, r) in self.factors.iter().enumerate() {
            if k > 0 {
                write!(f, "x")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

fn parse_endpoint(s: &str) -> Result<Option<Q>> {
    match s.trim() {
        "-inf" | "inf" | "+inf" => Ok(None),
        t => parse_q(t).map(Some),
    }
}

fn parse_factor(tok: &str) -> Result<Vec<Ray1>> {
    let t = tok.trim();
    if t == "R" {
        return Ok(vec![Ray1::Full]);
    }
    if let Some(k) = t.strip_prefix("R^") {
        let k: usize = k
            .parse()
            .map_err(|_| Error::Parse(format!("bad power `{t}`")))?;
        return Ok(vec![Ray1::Full; k]);
    }
    let inner = t
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::Parse(format!("bad box factor `{t}`")))?;
    let (a, b) = inner
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("bad box factor `{t}`")))?;
    let (a_s, b_s) = (a.trim(), b.trim());
    if a_s == "inf" || a_s == "+inf" || b_s == "-inf" {
        return Err(Error::Parse(format!("bad box factor `{t}`")));
    }
    let ray = Ray1::from_bounds(parse_endpoint(a_s)?, parse_endpoint(b_s)?)
        .map_err(|e| Error::Parse(e.to_string()))?;
    Ok(vec![ray])
}

impl FromStr for OpenBox {
    type Err = Error;

    fn from_str(s: &str) -> Result<OpenBox> {
        let s = s.trim();
        if s == "R0" {
            return Ok(OpenBox::point());
        }
        let mut factors = Vec::new();
        let mut depth = 0i32;
        let mut cur = String::new();
        for c in s.chars() {
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                _ => {}
            }
            if c == 'x' && depth == 0 {
                factors.extend(parse_factor(&cur)?);
                cur.clear();
            } else if !c.is_whitespace() {
                cur.push(c);
            }
        }
        if depth != 0 {
            return Err(Error::Parse(format!("unbalanced parentheses in `{s}`")));
        }
        factors.extend(parse_factor(&cur)?);
        Ok(OpenBox { factors })
    }
}

impl Serialize for OpenBox {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for OpenBox {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Extended rational endpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ext {
    NegInf,
    Fin(Q),
    PosInf,
}

impl Ext {
    fn rank(&self) -> u8 {
        match self {
            Ext::NegInf => 0,
            Ext::Fin(_) => 1,
            Ext::PosInf => 2,
        }
    }

    fn mul(&self, o: &Ext) -> Ext {
        match (self, o) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a * b),
            (Ext::Fin(a), inf) | (inf, Ext::Fin(a)) => {
                if a.is_zero() {
                    Ext::Fin(Q::zero())
                } else if a.is_positive() == (*inf == Ext::PosInf) {
                    Ext::PosInf
                } else {
                    Ext::NegInf
                }
            }
            (a, b) => {
                if a == b {
                    Ext::PosInf
                } else {
                    Ext::NegInf
                }
            }
        }
    }

    fn add(&self, o: &Ext) -> Ext {
        match (self, o) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a + b),
            (Ext::Fin(_), x) | (x, Ext::Fin(_)) => x.clone(),
            // lower bounds only meet lower bounds and vice versa
            (x, _) => x.clone(),
        }
    }

    fn neg(&self) -> Ext {
        match self {
            Ext::NegInf => Ext::PosInf,
            Ext::PosInf => Ext::NegInf,
            Ext::Fin(a) => Ext::Fin(-a),
        }
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ext {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::NegInf => write!(f, "-inf"),
            Ext::PosInf => write!(f, "inf"),
            Ext::Fin(a) => write!(f, "{}", fmt_q(a)),
        }
    }
}

/// A one-dimensional enclosure with per-endpoint openness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Span {
    pub lo: Ext,
    pub lo_open: bool,
    pub hi: Ext,
    pub hi_open: bool,
}

impl Span {
    pub fn point(c: Q) -> Span {
        Span {
            lo: Ext::Fin(c.clone()),
            lo_open: false,
            hi: Ext::Fin(c),
            hi_open: false,
        }
    }

    pub fn of_ray(r: &Ray1) -> Span {
        Span {
            lo: r.lower().map_or(Ext::NegInf, |a| Ext::Fin(a.clone())),
            lo_open: true,
            hi: r.upper().map_or(Ext::PosInf, |b| Ext::Fin(b.clone())),
            hi_open: true,
        }
    }

    fn closed(lo: Ext, hi: Ext) -> Span {
        Span {
            lo,
            lo_open: false,
            hi,
            hi_open: false,
        }
    }

    fn mul(&self, o: &Span) -> Span {
        let c = [
            self.lo.mul(&o.lo),
            self.lo.mul(&o.hi),
            self.hi.mul(&o.lo),
            self.hi.mul(&o.hi),
        ];
        let lo = c.iter().min().cloned().unwrap_or(Ext::NegInf);
        let hi = c.iter().max().cloned().unwrap_or(Ext::PosInf);
        Span::closed(lo, hi)
    }

    fn add(&self, o: &Span) -> Span {
        Span::closed(self.lo.add(&o.lo), self.hi.add(&o.hi))
    }

    fn scale(&self, c: &Q) -> Span {
        let k = Span::point(c.clone());
        k.mul(self)
    }

    fn powi(&self, e: u32) -> Span {
        if e == 0 {
            return Span::point(Q::one());
        }
        let zero = Ext::Fin(Q::zero());
        let straddles = self.lo < zero && self.hi > zero;
        if e.is_multiple_of(2) && straddles {
            let a = self.lo.neg().max(self.hi.clone());
            let top = pow_ext(&a, e);
            return Span::closed(zero, top);
        }
        if e.is_multiple_of(2) && self.hi <= zero {
            return Span::closed(pow_ext(&self.hi, e), pow_ext(&self.lo, e));
        }
        Span::closed(pow_ext(&self.lo, e), pow_ext(&self.hi, e))
    }

    /// Whether the span lies inside the open interval `r`.
    pub fn inside(&self, r: &Ray1) -> bool {
        let lo_ok = match r.lower() {
            None => true,
            Some(a) => match &self.lo {
                Ext::Fin(x) => x > a || (x == a && self.lo_open),
                _ => false,
            },
        };
        let hi_ok = match r.upper() {
            None => true,
            Some(b) => match &self.hi {
                Ext::Fin(x) => x < b || (x == b && self.hi_open),
                _ => false,
            },
        };
        lo_ok && hi_ok
    }
}

fn pow_ext(x: &Ext, e: u32) -> Ext {
    let mut acc = Ext::Fin(Q::one());
    for _ in 0..e {
        acc = acc.mul(x);
    }
    acc
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_open { '(' } else { '[' };
        let r = if self.hi_open { ')' } else { ']' };
        write!(f, "{l}{},{}{r}", self.lo, self.hi)
    }
}

/// A conservative enclosure of the image of a vector function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub comps: Vec<Span>,
}

impl Enclosure {
    pub fn inside(&self, b: &OpenBox) -> bool {
        self.comps.len() == b.dim() && self.comps.iter().zip(b.factors()).all(|(s, r)| s.inside(r))
    }

    pub fn is_bounded(&self) -> bool {
        self.comps
            .iter()
            .all(|s| matches!(s.lo, Ext::Fin(_)) && matches!(s.hi, Ext::Fin(_)))
    }

    /// An open box strictly containing the enclosure, padded by `pad` on finite sides.
    pub fn padded_box(&self, pad: &Q) -> OpenBox {
        let factors = self
            .comps
            .iter()
            .map(|s| {
                let lo = match &s.lo {
                    Ext::Fin(a) => Some(a - pad),
                    _ => None,
                };
                let hi = match &s.hi {
                    Ext::Fin(b) => Some(b + pad),
                    _ => None,
                };
                Ray1::from_bounds(lo, hi).expect("padding keeps lo < hi")
            })
            .collect();
        OpenBox::new(factors)
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.comps.is_empty() {
            return write!(f, "R0");
        }
        for (k, s) in self.comps.iter().enumerate() {
            if k > 0 {
                write!(f, "x")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Exact image for a constant or a one-variable affine polynomial, else `None`.
fn exact_span(p: &Poly, dom: &OpenBox) -> Option<Span> {
    if let Some(c) = p.as_constant() {
        return Some(Span::point(c));
    }
    let (k, a, b) = p.as_affine_single()?;
    let s = Span::of_ray(dom.factor(k));
    let shift = |e: &Ext| match e {
        Ext::Fin(x) => Ext::Fin(&a * x + &b),
        inf => {
            if a.is_positive() {
                inf.clone()
            } else {
                inf.neg()
            }
        }
    };
    let (lo, hi) = (shift(&s.lo), shift(&s.hi));
    Some(if a.is_positive() {
        Span {
            lo,
            lo_open: true,
            hi,
            hi_open: true,
        }
    } else {
        Span {
            lo: hi,
            lo_open: true,
            hi: lo,
            hi_open: true,
        }
    })
}

fn naive_span(p: &Poly, dom: &OpenBox) -> Span {
    let vars: Vec<Span> = dom
        .factors()
        .iter()
        .map(|r| {
            let s = Span::of_ray(r);
            Span::closed(s.lo, s.hi)
        })
        .collect();
    let mut acc = Span::point(Q::zero());
    for (mono, c) in p.terms() {
        let mut t = Span::point(Q::one());
        for (k, &e) in mono.iter().enumerate() {
            if e > 0 {
                t = t.mul(&vars[k].powi(e));
            }
        }
        acc = acc.add(&t.scale(c));
    }
    acc
}

/// Interval enclosure of `f(dom f)`. Constants and single-variable affine
/// components are exact (with open ends); the rest is monomial-wise
/// interval arithmetic on the closed hull.
pub fn range_bound(f: &PolyFun) -> Enclosure {
    let dom = f.domain();
    Enclosure {
        comps: f
            .components()
            .iter()
            .map(|p| exact_span(p, dom).unwrap_or_else(|| naive_span(p, dom)))
            .collect(),
    }
}

pub fn span_abs_max(s: &Span) -> Option<Q> {
    match (&s.lo, &s.hi) {
        (Ext::Fin(a), Ext::Fin(b)) => Some(a.abs().max(b.abs())),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qf;

    fn bx(s: &str) -> OpenBox {
        s.parse().unwrap()
    }

    #[test]
    fn contains_examples() {
        assert!(bx("(0,1)").contains(&[qf(1, 2)]).unwrap());
        assert!(bx("R0").contains(&[]).unwrap());
        assert!(!bx("(0,1)x(2,3)").contains(&[qf(1, 2), q(5)]).unwrap());
        assert!(bx("(0,1)").contains(&[q(0), q(1)]).is_err());
    }

    #[test]
    fn endpoints_are_excluded() {
        let b = bx("(0,1)");
        assert!(!b.contains(&[q(0)]).unwrap());
        assert!(!b.contains(&[q(1)]).unwrap());
    }

    #[test]
    fn product_examples() {
        assert_eq!(OpenBox::product(&[bx("(0,1)"), bx("R")]), bx("(0,1)xR"));
        assert_eq!(OpenBox::product(&[bx("R0"), bx("(0,1)")]), bx("(0,1)"));
        assert_eq!(OpenBox::product(&[]), OpenBox::point());
    }

    #[test]
    fn domint_examples() {
        assert_eq!(bx("(0,1)").domint(1), bx("(0,1)x(0,1)"));
        assert_eq!(bx("(0,1)").domint(3), bx("(0,1)xRxRxR"));
        assert_eq!(OpenBox::point().domint(1), bx("RxR"));
    }

    #[test]
    fn domint_dims() {
        let b = bx("(0,1)x(2,3)");
        assert_eq!(b.domint(2).dim(), 3);
        assert_eq!(b.domint(4).dim(), 5);
    }

    #[test]
    fn text_round_trip() {
        for s in [
            "R0",
            "R",
            "(0,1)",
            "(-inf,3/2)",
            "(-2,inf)",
            "(0,1)xRx(-1/2,7)",
        ] {
            assert_eq!(bx(s).to_string(), s);
        }
        assert_eq!(bx("R^2"), bx("RxR"));
        assert!("(1,0)".parse::<OpenBox>().is_err());
        assert!("(0,1".parse::<OpenBox>().is_err());
        assert!("(inf,1)".parse::<OpenBox>().is_err());
    }

    #[test]
    fn json_round_trip() {
        let b = bx("(0,1)xRx(-inf,2)");
        let s = serde_json::to_string(&b).unwrap();
        let back: OpenBox = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn range_of_identity_is_open_unit() {
        let f: PolyFun = "poly 1->1 on (0,1) : x1".parse().unwrap();
        let e = range_bound(&f);
        let s = &e.comps[0];
        assert_eq!(s.lo, Ext::Fin(q(0)));
        assert_eq!(s.hi, Ext::Fin(q(1)));
        assert!(e.inside(&bx("(0,1)")));
    }

    #[test]
    fn range_of_square_contains_unit() {
        let f: PolyFun = "poly 1->1 on (-1,1) : x1^2".parse().unwrap();
        let s = &range_bound(&f).comps[0];
        assert!(s.lo <= Ext::Fin(q(0)));
        assert!(s.hi >= Ext::Fin(q(1)));
    }

    #[test]
    fn range_of_constant() {
        let f: PolyFun = "poly 1->1 on R : 3".parse().unwrap();
        assert_eq!(range_bound(&f).comps[0], Span::point(q(3)));
    }

    #[test]
    fn range_unbounded() {
        let f: PolyFun = "poly 2->1 on Rx(0,1) : x1 x2 + x2^2".parse().unwrap();
        let s = &range_bound(&f).comps[0];
        assert_eq!(s.lo, Ext::NegInf);
        assert_eq!(s.hi, Ext::PosInf);
    }

    #[test]
    fn negated_coordinate_flips() {
        let f: PolyFun = "poly 1->1 on (0,1) : -2 x1 + 1".parse().unwrap();
        let s = &range_bound(&f).comps[0];
        assert_eq!(
            (s.lo.clone(), s.hi.clone()),
            (Ext::Fin(q(-1)), Ext::Fin(q(1)))
        );
        assert!(s.inside(&Ray1::Bounded(q(-1), q(1))));
    }
}
