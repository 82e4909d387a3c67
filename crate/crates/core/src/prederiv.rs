//! Pre-derivations at the origin: formal sums of pointed polynomial germs
//! paired with directions, their action on scalar germs, push-forward, smooth
//! evaluation and the vanishing directions of a core.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{dim_check, Error, Result};
use crate::eval::{random_box_around_origin, random_coeff, random_poly};
use crate::interval::{OpenBox, Ray1};
use crate::monoid::{Gen, Word};
use crate::polyfun::{prim, CompMode, Poly, PolyFun};
use crate::rational::{fmt_q, parse_q, Q};

/// A polynomial germ `z : (R^l, 0) -> (R^m, 0)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GermCore {
    z: PolyFun,
}

impl GermCore {
    pub fn new(z: PolyFun) -> Result<GermCore> {
        if !z.domain().contains_origin() {
            return Err(Error::Invalid(format!(
                "core domain {} misses 0",
                z.domain()
            )));
        }
        let origin = vec![Q::zero(); z.arity()];
        if z.eval_at(&origin)?.iter().any(|v| !v.is_zero()) {
            return Err(Error::Invalid("core is not pointed: z(0) != 0".into()));
        }
        Ok(GermCore { z })
    }

    pub fn identity(m: usize) -> GermCore {
        GermCore {
            z: prim::identity(&OpenBox::real(m)),
        }
    }

    pub fn map(&self) -> &PolyFun {
        &self.z
    }

    /// Source dimension `l`.
    pub fn l(&self) -> usize {
        self.z.arity()
    }

    /// Target dimension `m`.
    pub fn m(&self) -> usize {
        self.z.codim()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Summand {
    pub core: GermCore,
    pub u: Vec<Q>,
}

/// A finite formal sum of `D[z, u]` sharing the target dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreDeriv {
    m: usize,
    summands: Vec<Summand>,
}

impl PreDeriv {
    pub fn zero(m: usize) -> PreDeriv {
        PreDeriv {
            m,
            summands: vec![],
        }
    }

    /// The single summand `D[z, u]`.
    pub fn single(core: GermCore, u: Vec<Q>) -> Result<PreDeriv> {
        dim_check(core.l(), u.len())?;
        Ok(PreDeriv {
            m: core.m(),
            summands: vec![Summand { core, u }],
        })
    }

    pub fn from_summands(m: usize, summands: Vec<Summand>) -> Result<PreDeriv> {
        for s in &summands {
            dim_check(m, s.core.m())?;
            dim_check(s.core.l(), s.u.len())?;
        }
        Ok(PreDeriv { m, summands })
    }

    pub fn target(&self) -> usize {
        self.m
    }

    pub fn summands(&self) -> &[Summand] {
        &self.summands
    }

    pub fn add(&self, o: &PreDeriv) -> Result<PreDeriv> {
        dim_check(self.m, o.m)?;
        let mut s = self.summands.clone();
        s.extend(o.summands.iter().cloned());
        Ok(PreDeriv {
            m: self.m,
            summands: s,
        })
    }

    pub fn scale(&self, a: &Q) -> PreDeriv {
        PreDeriv {
            m: self.m,
            summands: self
                .summands
                .iter()
                .map(|s| Summand {
                    core: s.core.clone(),
                    u: s.u.iter().map(|x| x * a).collect(),
                })
                .collect(),
        }
    }

    pub fn neg(&self) -> PreDeriv {
        self.scale(&-Q::one())
    }
}

/// `Σ_ℓ u_ℓ ∂_ℓ g` for a polynomial function `g`.
fn directional(g: &PolyFun, u: &[Q]) -> Result<PolyFun> {
    let mut acc = prim::zero(g.domain(), g.codim());
    for (k, a) in u.iter().enumerate() {
        if !a.is_zero() {
            acc = acc.vsum(&g.partial(k + 1).vscal(a))?;
        }
    }
    Ok(acc)
}

fn intersect(a: &OpenBox, b: &OpenBox) -> Result<OpenBox> {
    dim_check(a.dim(), b.dim())?;
    let rays = a
        .factors()
        .iter()
        .zip(b.factors())
        .map(|(x, y)| {
            let lo = match (x.lower(), y.lower()) {
                (Some(p), Some(q)) => Some(p.max(q).clone()),
                (p, q) => p.or(q).cloned(),
            };
            let hi = match (x.upper(), y.upper()) {
                (Some(p), Some(q)) => Some(p.min(q).clone()),
                (p, q) => p.or(q).cloned(),
            };
            Ray1::from_bounds(lo, hi)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OpenBox::new(rays))
}

/// `D(w)`: one scalar germ per source dimension occurring in `D`, in
/// increasing order of that dimension. Summands with equal `l` are added on
/// the intersection of their domains.
pub fn apply(d: &PreDeriv, w: &PolyFun) -> Result<Vec<PolyFun>> {
    dim_check(d.m, w.arity())?;
    dim_check(1, w.codim())?;
    let mut out: BTreeMap<usize, PolyFun> = BTreeMap::new();
    for s in &d.summands {
        let wz = w.compose(&s.core.z, CompMode::Strict)?;
        let g = directional(&wz, &s.u)?;
        let merged = match out.remove(&s.core.l()) {
            None => g,
            Some(prev) => {
                let dom = intersect(prev.domain(), g.domain())?;
                prev.restrict(&dom)?.vsum(&g.restrict(&dom)?)?
            }
        };
        out.insert(s.core.l(), merged);
    }
    Ok(out.into_values().collect())
}

/// Push-forward along a pointed map: every core `z` becomes `f ∘ z`.
pub fn pre_diff(f: &PolyFun, d: &PreDeriv) -> Result<PreDeriv> {
    dim_check(d.m, f.arity())?;
    let f_core = GermCore::new(f.clone())?;
    let summands = d
        .summands
        .iter()
        .map(|s| {
            Ok(Summand {
                core: GermCore::new(f_core.z.compose(&s.core.z, CompMode::Strict)?)?,
                u: s.u.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreDeriv {
        m: f.codim(),
        summands,
    })
}

fn mat_vec(a: &[Vec<Q>], v: &[Q]) -> Vec<Q> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// `Σ Jac(z, 0) · u` over the summands.
pub fn eval_smooth(d: &PreDeriv) -> Vec<Q> {
    let mut acc = vec![Q::zero(); d.m];
    for s in &d.summands {
        let jv = mat_vec(&s.core.z.jacobian_at_origin(), &s.u);
        for (a, b) in acc.iter_mut().zip(jv) {
            *a += b;
        }
    }
    acc
}

/// `Jac(f, 0) · evalSmooth(D) == evalSmooth(preDiff(f, D))`.
pub fn chain_check(f: &PolyFun, d: &PreDeriv) -> Result<bool> {
    let lhs = mat_vec(&f.jacobian_at_origin(), &eval_smooth(d));
    Ok(lhs == eval_smooth(&pre_diff(f, d)?))
}

/// In-place reduced row echelon form; returns the pivot columns.
fn rref(rows: &mut Vec<Vec<Q>>, cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                let pivot_row = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

/// Directions `u` with `Σ u_ℓ ∂_ℓ z ≡ 0`, as a reduced echelon basis.
pub fn vanishing_space(z: &GermCore) -> Vec<Vec<Q>> {
    let l = z.l();
    // One row per (component, monomial), one column per direction.
    let mut table: BTreeMap<(usize, Vec<u32>), Vec<Q>> = BTreeMap::new();
    for (j, p) in z.z.components().iter().enumerate() {
        for k in 0..l {
            for (mono, c) in p.deriv(k).terms() {
                table
                    .entry((j, mono.clone()))
                    .or_insert_with(|| vec![Q::zero(); l])[k] += c;
            }
        }
    }
    let mut rows: Vec<Vec<Q>> = table.into_values().collect();
    let pivots = rref(&mut rows, l);
    let mut basis: Vec<Vec<Q>> = (0..l)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![Q::zero(); l];
            v[free] = Q::one();
            for (row, &pc) in rows.iter().zip(&pivots) {
                v[pc] = -row[free].clone();
            }
            v
        })
        .collect();
    rref(&mut basis, l);
    basis
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `u` minus its orthogonal projection onto the vanishing space of `z`.
pub fn canonical_direction(z: &GermCore, u: &[Q]) -> Result<Vec<Q>> {
    dim_check(z.l(), u.len())?;
    let mut ortho: Vec<Vec<Q>> = Vec::new();
    for b in vanishing_space(z) {
        let mut v = b;
        for o in &ortho {
            let c = dot(&v, o) / dot(o, o);
            for (x, y) in v.iter_mut().zip(o) {
                *x -= &c * y;
            }
        }
        ortho.push(v);
    }
    let mut out = u.to_vec();
    for o in &ortho {
        let c = dot(u, o) / dot(o, o);
        for (x, y) in out.iter_mut().zip(o) {
            *x -= &c * y;
        }
    }
    Ok(out)
}

/// Whether `D` lies in the kernel of smooth evaluation.
pub fn smooth_kernel_test(d: &PreDeriv) -> bool {
    eval_smooth(d).iter().all(Zero::is_zero)
}

/// `I_1 I_2 … I_l (∂_u h)` for `h(x) = (x_ℓ, 0, …, 0)` on `R^l`.
pub fn nontriviality_witness(l: usize, ell: usize, u: &[Q]) -> Result<PolyFun> {
    if ell < 1 || ell > l {
        return Err(Error::Invalid(format!("index {ell} outside 1..={l}")));
    }
    dim_check(l, u.len())?;
    let mut comps = vec![Poly::zero(l); l];
    comps[0] = Poly::var(l, ell - 1);
    let h = PolyFun::new(OpenBox::real(l), comps)?;
    let word = Word::new((1..=l as u32).map(Gen::int).collect());
    Ok(directional(&h, u)?.apply_word(&word))
}

/// `u_ℓ · ∏_{i ≤ l} (x_{2i} − x_{2i−1})` on `R^{2l}`.
pub fn nontriviality_product(l: usize, ell: usize, u: &[Q]) -> Poly {
    let n = 2 * l;
    (0..l).fold(Poly::constant(n, u[ell - 1].clone()), |acc, i| {
        acc.mul(&Poly::var(n, 2 * i + 1).sub(&Poly::var(n, 2 * i)))
    })
}

/// A random pointed core on a small box around the origin.
pub fn random_core<R: Rng>(rng: &mut R, l: usize, m: usize, max_deg: u32) -> GermCore {
    let dom = random_box_around_origin(rng, l);
    let comps = (0..m)
        .map(|_| {
            let p = random_poly(rng, l, max_deg);
            p.sub(&Poly::constant(l, p.coeff(&vec![0; l])))
        })
        .collect();
    GermCore::new(PolyFun::new(dom, comps).expect("arity matches")).expect("pointed")
}

/// A random core that factors through `k < l` linear coordinates, so its
/// vanishing space has dimension at least `l - k`.
pub fn random_degenerate_core<R: Rng>(
    rng: &mut R,
    l: usize,
    k: usize,
    m: usize,
    max_deg: u32,
) -> GermCore {
    let inner = random_core(rng, k, m, max_deg);
    let lin: Vec<Poly> = (0..k)
        .map(|_| {
            let c: Vec<Q> = (0..l).map(|_| random_coeff(rng, false)).collect();
            prim::linear_form(&c)
        })
        .collect();
    let comps = inner
        .z
        .components()
        .iter()
        .map(|p| p.substitute(&lin, l))
        .collect();
    GermCore::new(PolyFun::new(OpenBox::real(l), comps).expect("arity matches")).expect("pointed")
}

pub fn random_direction<R: Rng>(rng: &mut R, l: usize) -> Vec<Q> {
    (0..l).map(|_| random_coeff(rng, false)).collect()
}

fn fmt_vec(v: &[Q]) -> String {
    let parts: Vec<String> = v.iter().map(fmt_q).collect();
    format!("({})", parts.join(", "))
}

impl fmt::Display for PreDeriv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.summands.is_empty() {
            return write!(f, "0");
        }
        for (k, s) in self.summands.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "D{{ core={}; u={}; }}", s.core.z, fmt_vec(&s.u))?;
        }
        Ok(())
    }
}

/// Parses the textual form. `0` is the zero pre-derivation into `R^0`; use
/// [`PreDeriv::zero`] for other targets.
impl FromStr for PreDeriv {
    type Err = Error;

    fn from_str(s: &str) -> Result<PreDeriv> {
        let s = s.trim();
        if s == "0" {
            return Ok(PreDeriv::zero(0));
        }
        let mut summands = Vec::new();
        let mut rest = s;
        loop {
            let body = rest
                .strip_prefix("D{")
                .ok_or_else(|| Error::Parse(format!("expected `D{{` at `{rest}`")))?;
            let (inner, tail) = body
                .split_once('}')
                .ok_or_else(|| Error::Parse("unclosed `D{`".into()))?;
            summands.push(parse_summand(inner)?);
            let tail = tail.trim();
            if tail.is_empty() {
                break;
            }
            rest = tail
                .strip_prefix('+')
                .ok_or_else(|| Error::Parse(format!("expected `+` at `{tail}`")))?
                .trim_start();
        }
        let m = summands[0].core.m();
        PreDeriv::from_summands(m, summands)
    }
}

fn parse_summand(inner: &str) -> Result<Summand> {
    let inner = inner.trim();
    let body = inner
        .strip_prefix("core=")
        .ok_or_else(|| Error::Parse(format!("expected `core=` in `{inner}`")))?;
    let (core, u) = body
        .rsplit_once("u=(")
        .ok_or_else(|| Error::Parse(format!("expected `u=(` in `{inner}`")))?;
    let core = core.trim().trim_end_matches(';');
    let (u, after) = u
        .split_once(')')
        .ok_or_else(|| Error::Parse("unclosed direction".into()))?;
    if !matches!(after.trim(), "" | ";") {
        return Err(Error::Parse(format!("trailing `{after}`")));
    }
    let u: Vec<Q> = if u.trim().is_empty() {
        vec![]
    } else {
        u.split(',')
            .map(|c| parse_q(c.trim()))
            .collect::<Result<_>>()?
    };
    let core = GermCore::new(core.parse()?)?;
    dim_check(core.l(), u.len())?;
    Ok(Summand { core, u })
}

/// `D[z, u] − D[id, evalSmooth(D[z, u])]`, which always evaluates to zero.
pub fn recentred(z: &GermCore, u: &[Q]) -> Result<PreDeriv> {
    let d = PreDeriv::single(z.clone(), u.to_vec())?;
    let v = eval_smooth(&d);
    d.add(&PreDeriv::single(GermCore::identity(z.m()), v)?.neg())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_vec(l: usize, k: usize) -> Vec<Q> {
        (0..l).map(|i| if i == k { q(1) } else { q(0) }).collect()
    }

    fn pf(s: &str) -> PolyFun {
        s.parse().unwrap()
    }

    fn core(s: &str) -> GermCore {
        GermCore::new(pf(s)).unwrap()
    }

    fn parabola() -> GermCore {
        core("poly 1->2 on R : x1; x1^2")
    }

    #[test]
    fn apply_examples() {
        let d = PreDeriv::single(parabola(), vec![q(1)]).unwrap();
        let w = pf("poly 2->1 on RxR : x1 + x2");
        assert_eq!(
            apply(&d, &w).unwrap(),
            vec![pf("poly 1->1 on R : 1 + 2 x1")]
        );
        let z = PreDeriv::single(parabola(), vec![q(0)]).unwrap();
        assert!(apply(&z, &w).unwrap()[0].components()[0].is_zero());
        let point = core("poly 0->2 on R^0 : 0; 0");
        let d0 = PreDeriv::single(point, vec![]).unwrap();
        let g = apply(&d0, &w).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g[0].components()[0].is_zero());
    }

    #[test]
    fn apply_rejects_target_mismatch() {
        let d = PreDeriv::single(parabola(), vec![q(1)]).unwrap();
        assert!(apply(&d, &pf("poly 1->1 on R : x1")).is_err());
    }

    #[test]
    fn core_must_be_pointed() {
        assert!(GermCore::new(pf("poly 1->1 on R : x1 + 1")).is_err());
        assert!(GermCore::new(pf("poly 1->1 on (1,2) : x1")).is_err());
    }

    #[test]
    fn pre_diff_examples() {
        let d = PreDeriv::single(parabola(), vec![q(1)]).unwrap();
        let id = prim::identity(&OpenBox::real(2));
        assert_eq!(pre_diff(&id, &d).unwrap(), d);
        let f = pf("poly 2->1 on RxR : x1 + x2");
        let p = pre_diff(&f, &d).unwrap();
        assert_eq!(
            p.summands()[0].core.map(),
            &pf("poly 1->1 on R : x1 + x1^2")
        );
        assert_eq!(p.summands()[0].u, vec![q(1)]);
        assert!(pre_diff(&pf("poly 2->1 on RxR : x1 + 1"), &d).is_err());
    }

    #[test]
    fn eval_smooth_examples() {
        let u = vec![q(2), qf(-1, 3)];
        let d = PreDeriv::single(GermCore::identity(2), u.clone()).unwrap();
        assert_eq!(eval_smooth(&d), u);
        let d = PreDeriv::single(parabola(), vec![q(1)]).unwrap();
        assert_eq!(eval_smooth(&d), vec![q(1), q(0)]);
        assert_eq!(eval_smooth(&PreDeriv::zero(3)), vec![q(0); 3]);
    }

    #[test]
    fn chain_check_examples() {
        let d = PreDeriv::single(parabola(), vec![q(1)]).unwrap();
        let f = pf("poly 2->1 on RxR : x1 + x2");
        assert_eq!(eval_smooth(&pre_diff(&f, &d).unwrap()), vec![q(1)]);
        assert!(chain_check(&f, &d).unwrap());
        assert!(chain_check(&prim::identity(&OpenBox::real(2)), &d).unwrap());
    }

    #[test]
    fn vanishing_examples() {
        let z = core("poly 2->2 on RxR : x1; 0");
        assert_eq!(vanishing_space(&z), vec![vec![q(0), q(1)]]);
        assert!(vanishing_space(&GermCore::identity(3)).is_empty());
        let zero = core("poly 2->1 on RxR : 0");
        assert_eq!(vanishing_space(&zero), vec![unit_vec(2, 0), unit_vec(2, 1)]);
    }

    #[test]
    fn canonical_examples() {
        let z = core("poly 2->2 on RxR : x1; 0");
        assert_eq!(
            canonical_direction(&z, &[q(1), q(1)]).unwrap(),
            vec![q(1), q(0)]
        );
        assert_eq!(
            canonical_direction(&z, &[q(0), q(5)]).unwrap(),
            vec![q(0), q(0)]
        );
        let u = vec![q(3), qf(1, 2)];
        assert_eq!(canonical_direction(&GermCore::identity(2), &u).unwrap(), u);
        // x1 + x2 vanishes along (1,-1).
        let diag = core("poly 2->1 on RxR : x1 + x2 + x1^2 + 2 x1 x2 + x2^2");
        assert_eq!(vanishing_space(&diag), vec![vec![q(1), q(-1)]]);
        assert_eq!(
            canonical_direction(&diag, &[q(1), q(0)]).unwrap(),
            vec![qf(1, 2), qf(1, 2)]
        );
    }

    #[test]
    fn kernel_examples() {
        let r = recentred(&parabola(), &[q(3)]).unwrap();
        assert!(smooth_kernel_test(&r));
        let e1 = PreDeriv::single(GermCore::identity(2), unit_vec(2, 0)).unwrap();
        assert!(!smooth_kernel_test(&e1));
        assert!(smooth_kernel_test(&PreDeriv::zero(2)));
    }

    #[test]
    fn witness_examples() {
        let a = qf(3, 7);
        let w = nontriviality_witness(1, 1, std::slice::from_ref(&a)).unwrap();
        assert_eq!(
            w.components()[0],
            Poly::parse(2, "3/7 x2 - 3/7 x1").unwrap()
        );
        let (a, b) = (q(2), q(-5));
        let w = nontriviality_witness(2, 1, &[a, b]).unwrap();
        assert_eq!(
            w.components()[0],
            Poly::parse(4, "2 x2 x4 - 2 x2 x3 - 2 x1 x4 + 2 x1 x3").unwrap()
        );
        assert!(w.components()[1].is_zero());
        let z = nontriviality_witness(3, 2, &vec![q(0); 3]).unwrap();
        assert!(z.components().iter().all(Poly::is_zero));
        assert!(nontriviality_witness(2, 3, &[q(1), q(1)]).is_err());
        assert!(nontriviality_witness(2, 0, &[q(1), q(1)]).is_err());
    }

    #[test]
    fn witness_matches_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for l in 1..=3 {
            for ell in 1..=l {
                let u = random_direction(&mut rng, l);
                let w = nontriviality_witness(l, ell, &u).unwrap();
                assert_eq!(w.components()[0], nontriviality_product(l, ell, &u));
            }
        }
    }

    #[test]
    fn linear_in_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let z = random_core(&mut rng, 2, 2, 3);
        let (u1, u2) = (random_direction(&mut rng, 2), random_direction(&mut rng, 2));
        let sum: Vec<Q> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
        let split = PreDeriv::single(z.clone(), u1)
            .unwrap()
            .add(&PreDeriv::single(z.clone(), u2).unwrap())
            .unwrap();
        let joined = PreDeriv::single(z, sum).unwrap();
        let w = pf("poly 2->1 on RxR : x1 x2 - 3 x2^2 + x1");
        assert_eq!(apply(&split, &w).unwrap(), apply(&joined, &w).unwrap());
        assert_eq!(eval_smooth(&split), eval_smooth(&joined));
    }

    #[test]
    fn text_round_trip() {
        let d = PreDeriv::single(parabola(), vec![qf(1, 2)])
            .unwrap()
            .add(&PreDeriv::single(GermCore::identity(2), vec![q(1), q(-2)]).unwrap())
            .unwrap();
        let s = d.to_string();
        assert!(s.starts_with("D{ core=poly 1->2 on R : x1; x1^2; u=(1/2); } + D{"));
        assert_eq!(s.parse::<PreDeriv>().unwrap(), d);
        assert_eq!(
            PreDeriv::zero(0).to_string().parse::<PreDeriv>().unwrap(),
            PreDeriv::zero(0)
        );
        assert!("D{ core=poly 1->1 on R : x1; u=(1, 2); }"
            .parse::<PreDeriv>()
            .is_err());
    }
}
