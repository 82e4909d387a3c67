//! Evaluation of terms into polynomial functions, instantiation of opaque
//! leaves and the linear-combination embedding.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::Rng;

use crate::error::{dim_check, Error, Result};
use crate::interval::{OpenBox, Ray1};
use crate::polyfun::{prim, CompMode, Orientation, Poly, PolyFun};
use crate::rational::{q, qf, Q};
use crate::term::{classify, opaque_set, BaseFn, Class, Term};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalOptions {
    pub mode: CompMode,
    pub orientation: Orientation,
}

pub fn eval_term(t: &Term) -> Result<PolyFun> {
    eval_term_with(t, EvalOptions::default())
}

pub fn eval_term_with(t: &Term, o: EvalOptions) -> Result<PolyFun> {
    match t {
        Term::Base(BaseFn::Smooth(f)) => Ok(f.clone()),
        Term::Base(BaseFn::Opaque { name, .. }) => Err(Error::Opaque(name.clone())),
        Term::Tuple(ts) => {
            if ts.is_empty() {
                return Err(Error::Signature("empty tuple".into()));
            }
            let fs = ts
                .iter()
                .map(|c| eval_term_with(c, o))
                .collect::<Result<Vec<_>>>()?;
            Ok(PolyFun::tuple(&fs))
        }
        Term::Comp(x, y) => {
            let fx = eval_term_with(x, o)?;
            let fy = eval_term_with(y, o)?;
            fx.compose(&fy, o.mode)
        }
        Term::Act(w, x) => Ok(eval_term_with(x, o)?.apply_word_with(w, o.orientation)),
    }
}

/// Polynomials standing in for opaque generators.
pub type Instantiation = BTreeMap<String, PolyFun>;

/// Replaces every opaque leaf by its assigned polynomial.
pub fn instantiate(t: &Term, a: &Instantiation) -> Result<Term> {
    match t {
        Term::Base(BaseFn::Opaque { name, domain }) => {
            let f = a
                .get(name)
                .ok_or_else(|| Error::MissingAssignment(name.clone()))?;
            if f.domain() != domain || f.codim() != 1 {
                return Err(Error::Signature(format!(
                    "`{name}` is declared on {domain} -> R but assigned {} -> R^{}",
                    f.domain(),
                    f.codim()
                )));
            }
            Ok(Term::smooth(f.clone()))
        }
        Term::Base(_) => Ok(t.clone()),
        Term::Tuple(ts) => Ok(Term::Tuple(
            ts.iter()
                .map(|c| instantiate(c, a))
                .collect::<Result<_>>()?,
        )),
        Term::Comp(x, y) => Ok(Term::comp(instantiate(x, a)?, instantiate(y, a)?)),
        Term::Act(w, x) => Ok(Term::act(w.clone(), instantiate(x, a)?)),
    }
}

/// Instantiates and evaluates; rejects terms outside the continuous fragment.
pub fn eval_instantiated(t: &Term, a: &Instantiation, o: EvalOptions) -> Result<PolyFun> {
    if classify(t) == Class::Illegal {
        return Err(Error::Signature(
            "a word containing Part acts on an opaque subterm".into(),
        ));
    }
    for n in opaque_set(t) {
        if !a.contains_key(&n) {
            return Err(Error::MissingAssignment(n));
        }
    }
    eval_term_with(&instantiate(t, a)?, o)
}

/// One output component written as `Σ coeffs[k] · bases[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Combo {
    pub coeffs: Vec<Q>,
    pub bases: Vec<BaseFn>,
}

fn base_domain(b: &BaseFn) -> Result<&OpenBox> {
    match b {
        BaseFn::Smooth(f) => {
            dim_check(1, f.codim())?;
            Ok(f.domain())
        }
        BaseFn::Opaque { domain, .. } => Ok(domain),
    }
}

/// `(g ∘ <bases>) ∘ diag`, with `g` the linear map carrying the coefficients.
pub fn linincl(combos: &[Combo]) -> Result<Term> {
    if combos.is_empty() {
        return Err(Error::Invalid(
            "linincl needs at least one component".into(),
        ));
    }
    let mut dom: Option<OpenBox> = None;
    for c in combos {
        if c.coeffs.is_empty() || c.coeffs.len() != c.bases.len() {
            return Err(Error::Invalid(
                "each component needs matching nonempty coefficient and base lists".into(),
            ));
        }
        if c.coeffs.iter().any(Q::is_zero) {
            return Err(Error::Invalid(
                "zero coefficient in a linear combination".into(),
            ));
        }
        for b in &c.bases {
            let d = base_domain(b)?;
            match &dom {
                None => dom = Some(d.clone()),
                Some(d0) if d0 != d => {
                    return Err(Error::Signature(format!(
                        "base domains differ: {d0} vs {d}"
                    )))
                }
                _ => {}
            }
        }
    }
    let dom = dom.expect("nonempty");
    let total: usize = combos.iter().map(|c| c.bases.len()).sum();
    let mut rows = Vec::with_capacity(combos.len());
    let mut off = 0;
    for c in combos {
        let mut coeffs = vec![Q::zero(); total];
        for (k, a) in c.coeffs.iter().enumerate() {
            coeffs[off + k] = a.clone();
        }
        rows.push(prim::linear_form(&coeffs));
        off += c.bases.len();
    }
    let g = PolyFun::new(OpenBox::real(total), rows)?;
    let bases: Vec<Term> = combos
        .iter()
        .flat_map(|c| c.bases.iter().cloned().map(Term::Base))
        .collect();
    Ok(Term::comp(
        Term::comp(Term::smooth(g), Term::Tuple(bases)),
        Term::smooth(prim::diag(&dom, total)),
    ))
}

/// Monomial decomposition of each component; a zero component becomes `1 · 0`.
pub fn decompose(f: &PolyFun) -> Result<Vec<Combo>> {
    let dom = f.domain();
    let m = f.arity();
    Ok(f.components()
        .iter()
        .map(|p| {
            if p.is_zero() {
                return Combo {
                    coeffs: vec![q(1)],
                    bases: vec![BaseFn::Smooth(prim::zero(dom, 1))],
                };
            }
            let (coeffs, bases) = p
                .terms()
                .map(|(e, c)| {
                    let mono = Poly::monomial(m, e.clone(), q(1));
                    (
                        c.clone(),
                        BaseFn::Smooth(PolyFun::scalar(dom.clone(), mono).expect("arity")),
                    )
                })
                .unzip();
            Combo { coeffs, bases }
        })
        .collect())
}

pub fn linincl_of(f: &PolyFun) -> Result<Term> {
    linincl(&decompose(f)?)
}

/// Coefficient in `{-3..3} / {1,2}`, nonzero when `nonzero` is set.
pub fn random_coeff<R: Rng>(rng: &mut R, nonzero: bool) -> Q {
    loop {
        let c = qf(rng.gen_range(-3..=3), rng.gen_range(1..=2));
        if !(nonzero && c.is_zero()) {
            return c;
        }
    }
}

pub fn random_ray<R: Rng>(rng: &mut R) -> Ray1 {
    match rng.gen_range(0..8) {
        0 => Ray1::Full,
        1 => Ray1::Left(q(rng.gen_range(0..=3))),
        2 => Ray1::Right(q(rng.gen_range(-3..=0))),
        _ => {
            let a = qf(rng.gen_range(-4..=2), 2);
            let w = qf(rng.gen_range(1..=4), 2);
            Ray1::Bounded(a.clone(), a + w)
        }
    }
}

pub fn random_box<R: Rng>(rng: &mut R, m: usize) -> OpenBox {
    OpenBox::new((0..m).map(|_| random_ray(rng)).collect())
}

/// Bounded box whose factors all contain 0.
pub fn random_box_around_origin<R: Rng>(rng: &mut R, m: usize) -> OpenBox {
    OpenBox::new(
        (0..m)
            .map(|_| Ray1::Bounded(-qf(rng.gen_range(1..=4), 2), qf(rng.gen_range(1..=4), 2)))
            .collect(),
    )
}

/// A random open sub-box of `b`.
pub fn random_subbox<R: Rng>(rng: &mut R, b: &OpenBox) -> OpenBox {
    let shrink = |rng: &mut R, r: &Ray1| -> Ray1 {
        let d = qf(rng.gen_range(0..=2), 2);
        match r {
            Ray1::Full => match rng.gen_range(0..3) {
                0 => Ray1::Full,
                1 => Ray1::Left(d),
                _ => Ray1::Bounded(-d.clone() - q(1), d),
            },
            Ray1::Left(h) => match rng.gen_range(0..2) {
                0 => Ray1::Left(h - d),
                _ => Ray1::Bounded(h - d.clone() - q(2), h - d),
            },
            Ray1::Right(l) => match rng.gen_range(0..2) {
                0 => Ray1::Right(l + d),
                _ => Ray1::Bounded(l + d.clone(), l + d + q(2)),
            },
            Ray1::Bounded(l, h) => {
                let w = (h - l) / q(4);
                let a = l + &w * q(rng.gen_range(0..=1));
                let b = h - &w * q(rng.gen_range(0..=1));
                Ray1::Bounded(a, b)
            }
        }
    };
    OpenBox::new(b.factors().iter().map(|r| shrink(rng, r)).collect())
}

/// A random open box containing `b`.
pub fn random_superbox<R: Rng>(rng: &mut R, b: &OpenBox) -> OpenBox {
    OpenBox::new(
        b.factors()
            .iter()
            .map(|r| match (rng.gen_range(0..3), r) {
                (0, _) => Ray1::Full,
                (_, Ray1::Bounded(l, h)) => {
                    let d = qf(rng.gen_range(0..=2), 2);
                    Ray1::Bounded(l - &d, h + d)
                }
                (_, other) => other.clone(),
            })
            .collect(),
    )
}

pub fn random_poly<R: Rng>(rng: &mut R, arity: usize, max_deg: u32) -> Poly {
    let nterms = rng.gen_range(1..=4);
    let mut p = Poly::zero(arity);
    for _ in 0..nterms {
        let mut e = vec![0u32; arity];
        if arity > 0 {
            let d = rng.gen_range(0..=max_deg);
            for _ in 0..d {
                e[rng.gen_range(0..arity)] += 1;
            }
        }
        p = p.add(&Poly::monomial(arity, e, random_coeff(rng, true)));
    }
    p
}

pub fn random_polyfun<R: Rng>(rng: &mut R, dom: &OpenBox, n: usize, max_deg: u32) -> PolyFun {
    let comps = (0..n)
        .map(|_| random_poly(rng, dom.dim(), max_deg))
        .collect();
    PolyFun::new(dom.clone(), comps).expect("arity matches")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{mult_t, parse_term, scal_t, sum_t, Env};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pf(s: &str) -> PolyFun {
        s.parse().unwrap()
    }

    fn env() -> Env {
        Env::parse("c : (0,1)").unwrap()
    }

    #[test]
    fn eval_examples() {
        let t = Term::comp(
            Term::smooth(pf("poly 1->1 on (0,2) : x1^2")),
            Term::smooth(pf("poly 1->1 on (-1/2,1/2) : x1 + 1")),
        );
        assert_eq!(
            eval_term(&t).unwrap(),
            pf("poly 1->1 on (-1/2,1/2) : x1^2 + 2 x1 + 1")
        );
        let (f, g) = (pf("poly 1->1 on R : x1"), pf("poly 1->1 on (0,1) : x1^3"));
        let tup = Term::tuple(vec![Term::smooth(f.clone()), Term::smooth(g.clone())]);
        assert_eq!(eval_term(&tup).unwrap(), PolyFun::tuple(&[f, g]));
        let sq = Term::smooth(pf("poly 1->1 on (0,1) : x1^2"));
        let a = eval_term(&Term::act("q1".parse().unwrap(), sq.clone())).unwrap();
        assert_eq!(a, pf("poly 2->1 on (0,1)x(0,1) : x2^2"));
        assert_eq!(
            a,
            eval_term(&Term::act("D2 I1".parse().unwrap(), sq)).unwrap()
        );
    }

    #[test]
    fn opaque_needs_instantiation() {
        let t = parse_term("[I1] c", &env()).unwrap();
        assert!(matches!(eval_term(&t), Err(Error::Opaque(_))));
        let a: Instantiation = [("c".to_string(), pf("poly 1->1 on (0,1) : x1^2"))].into();
        let i = instantiate(&t, &a).unwrap();
        assert_eq!(
            i,
            Term::act(
                "I1".parse().unwrap(),
                Term::smooth(pf("poly 1->1 on (0,1) : x1^2"))
            )
        );
        assert!(matches!(
            instantiate(&t, &Instantiation::new()),
            Err(Error::MissingAssignment(_))
        ));
        let wrong: Instantiation = [("c".to_string(), pf("poly 1->1 on R : x1"))].into();
        assert!(instantiate(&t, &wrong).is_err());
        let illegal = parse_term("[D1] c", &env()).unwrap();
        assert!(eval_instantiated(&illegal, &a, EvalOptions::default()).is_err());
    }

    #[test]
    fn instantiate_shares_occurrences() {
        let t = parse_term("(c . c)", &env()).unwrap();
        let f = pf("poly 1->1 on (0,1) : 1/2 x1");
        let a: Instantiation = [("c".to_string(), f.clone())].into();
        match instantiate(&t, &a).unwrap() {
            Term::Comp(x, y) => {
                assert_eq!(*x, Term::smooth(f.clone()));
                assert_eq!(x, y);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn smooth_term_unchanged_by_instantiate() {
        let t = Term::smooth(pf("poly 1->1 on R : x1"));
        assert_eq!(instantiate(&t, &Instantiation::new()).unwrap(), t);
    }

    #[test]
    fn linincl_examples() {
        let f = pf("poly 1->1 on (0,1) : x1^3 - x1");
        let single = linincl(&[Combo {
            coeffs: vec![q(1)],
            bases: vec![BaseFn::Smooth(f.clone())],
        }])
        .unwrap();
        assert_eq!(eval_term(&single).unwrap(), f);
        let x = pf("poly 1->1 on (0,1) : x1");
        let x2 = pf("poly 1->1 on (0,1) : x1^2");
        let t = linincl(&[Combo {
            coeffs: vec![q(2), q(3)],
            bases: vec![BaseFn::Smooth(x), BaseFn::Smooth(x2)],
        }])
        .unwrap();
        assert_eq!(
            eval_term(&t).unwrap(),
            pf("poly 1->1 on (0,1) : 3 x1^2 + 2 x1")
        );
        let bad = linincl(&[Combo {
            coeffs: vec![q(0)],
            bases: vec![BaseFn::Smooth(f)],
        }]);
        assert!(bad.is_err());
        assert!(linincl(&[]).is_err());
    }

    #[test]
    fn linincl_round_trip_vector() {
        let f = pf("poly 2->3 on (0,1)xR : x1 x2 - 2; 0; 1/2 x2^3");
        assert_eq!(eval_term(&linincl_of(&f).unwrap()).unwrap(), f);
    }

    #[test]
    fn derived_constructors() {
        let x = Term::smooth(pf("poly 1->1 on (0,1) : x1"));
        assert_eq!(
            eval_term(&sum_t(&x, &x).unwrap()).unwrap(),
            pf("poly 1->1 on (0,1) : 2 x1")
        );
        assert_eq!(
            eval_term(&scal_t(&q(1), &x).unwrap()).unwrap(),
            eval_term(&x).unwrap()
        );
        let z = Term::smooth(pf("poly 1->1 on (0,1) : 0"));
        assert_eq!(
            eval_term(&mult_t(&z, &x).unwrap()).unwrap(),
            pf("poly 1->1 on (0,1) : 0")
        );
    }

    #[test]
    fn derived_constructors_match_vector_ops() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let m = rng.gen_range(1..=2);
            let dom = random_box(&mut rng, m);
            let (n1, n2) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
            let f = random_polyfun(&mut rng, &dom, n1, 3);
            let g = random_polyfun(&mut rng, &dom, n1, 3);
            let h = random_polyfun(&mut rng, &dom, n2, 3);
            let (tf, tg, th) = (
                Term::smooth(f.clone()),
                Term::smooth(g.clone()),
                Term::smooth(h.clone()),
            );
            assert_eq!(
                eval_term(&sum_t(&tf, &tg).unwrap()).unwrap(),
                f.vsum(&g).unwrap()
            );
            assert_eq!(
                eval_term(&mult_t(&tf, &th).unwrap()).unwrap(),
                f.vprod(&h).unwrap()
            );
            let a = random_coeff(&mut rng, false);
            assert_eq!(eval_term(&scal_t(&a, &tf).unwrap()).unwrap(), f.vscal(&a));
        }
    }
}
