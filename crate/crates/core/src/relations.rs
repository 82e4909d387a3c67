//! Randomized exact verification of the term relation catalogue and of the
//! monoid's defining relations.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{
    eval_instantiated, linincl_of, random_box, random_box_around_origin, random_coeff,
    random_polyfun, random_subbox, random_superbox, EvalOptions, Instantiation,
};
use crate::interval::{range_bound, OpenBox};
use crate::monoid::{relations, Gen, GenKind, Word};
use crate::polyfun::{prim, CompMode, Orientation, PolyFun};
use crate::rational::{q, Q};
use crate::term::{max_augment, opaque_set, signature, sum_t, Signature, Term};

/// Catalogue identifiers, in catalogue order.
#[rustfmt::skip]
pub const RULES: [&str; 36] = [
    "R5", "R4bis", "S0", "R1", "R1bis", "R2", "R3", "S3", "R7", "S7bis", "R7ter", "R7quater",
    "R7penta", "R9", "R9.1", "R9.2", "R9.3", "R9bis", "R9ter", "R10", "R10.1", "R10bis", "R11",
    "R12", "R12.1", "R13", "R14", "R15", "R16", "R16.1", "R16.2", "R16.3", "R16.4", "R16.5",
    "R17", "R17bis",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub reason: String,
    pub instantiation: BTreeMap<String, String>,
    pub lhs: String,
    pub rhs: String,
    pub lhs_value: Option<String>,
    pub rhs_value: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    Failed(Box<Witness>),
    Skipped(String),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Verified => "Verified",
            Verdict::Failed(_) => "Failed",
            Verdict::Skipped(_) => "Skipped",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub rule_id: String,
    pub trials: usize,
    pub verdict: Verdict,
    pub elapsed_ms: f64,
}

impl RelationReport {
    /// `<ruleId> <verdict> trials=<n> time=<ms>`.
    pub fn line(&self) -> String {
        format!(
            "{} {} trials={} time={:.1}",
            self.rule_id,
            self.verdict.label(),
            self.trials,
            self.elapsed_ms
        )
    }

    pub fn verified(&self) -> bool {
        self.verdict == Verdict::Verified
    }
}

/// One comparison: the two sides should (or should not) agree.
struct Check {
    lhs: Term,
    rhs: Term,
    equal: bool,
}

fn same(lhs: Term, rhs: Term) -> Vec<Check> {
    vec![Check {
        lhs,
        rhs,
        equal: true,
    }]
}

fn sm(f: PolyFun) -> Term {
    Term::smooth(f)
}

fn comp(a: Term, b: Term) -> Term {
    Term::comp(a, b)
}

fn act(w: Vec<Gen>, t: Term) -> Term {
    Term::act(Word::new(w), t)
}

/// `v ∘ <a, b> ∘ diag(dom, 2)` for a binary vector map `v`.
fn binop(v: PolyFun, a: Term, b: Term, dom: &OpenBox) -> Term {
    comp(comp(sm(v), Term::tuple(vec![a, b])), sm(prim::diag(dom, 2)))
}

struct Ctx {
    rng: ChaCha8Rng,
    inst: Instantiation,
    next: usize,
    opts: EvalOptions,
    trial: usize,
    deg: u32,
}

impl Ctx {
    fn new(seed: u64, orientation: Orientation) -> Ctx {
        Ctx {
            rng: ChaCha8Rng::seed_from_u64(seed),
            inst: Instantiation::new(),
            next: 0,
            opts: EvalOptions {
                mode: CompMode::Permissive,
                orientation,
            },
            trial: 0,
            deg: 3,
        }
    }

    fn range(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.gen_range(lo..=hi)
    }

    fn index(&mut self, hi: usize) -> u32 {
        self.rng.gen_range(1..=hi as u32)
    }

    fn coin(&mut self) -> bool {
        self.rng.gen_bool(0.5)
    }

    fn boxr(&mut self, lo: usize, hi: usize) -> OpenBox {
        let m = self.range(lo, hi);
        random_box(&mut self.rng, m)
    }

    fn poly(&mut self, dom: &OpenBox, n: usize) -> PolyFun {
        random_polyfun(&mut self.rng, dom, n, self.deg)
    }

    fn opaque(&mut self, dom: &OpenBox) -> Term {
        let name = format!("c{}", self.next);
        self.next += 1;
        let f = random_polyfun(&mut self.rng, dom, 1, self.deg);
        self.inst.insert(name.clone(), f);
        Term::opaque(&name, dom.clone())
    }

    fn value(&self, t: &Term) -> Result<PolyFun> {
        eval_instantiated(t, &self.inst, self.opts)
    }

    /// A box containing the image of `t`.
    fn image_box(&self, t: &Term) -> Result<OpenBox> {
        Ok(range_bound(&self.value(t)?).padded_box(&q(1)))
    }

    /// A random term on exactly `dom` with `cod` outputs.
    fn term(&mut self, dom: &OpenBox, cod: usize, depth: u32, opaque: bool) -> Result<Term> {
        if cod == 0 {
            return Ok(sm(prim::zero(dom, 0)));
        }
        let kind = if depth == 0 { 0 } else { self.range(0, 4) };
        match kind {
            1 if cod >= 2 => {
                let c1 = self.range(1, cod - 1);
                let cut = self.range(0, dom.dim());
                let (d1, d2) = (dom.slice(0, cut), dom.slice(cut, dom.dim()));
                let a = self.term(&d1, c1, depth - 1, opaque)?;
                let b = self.term(&d2, cod - c1, depth - 1, opaque)?;
                Ok(Term::tuple(vec![a, b]))
            }
            2 => {
                let k = self.range(1, 2);
                let saved = std::mem::replace(&mut self.deg, 2);
                let y = self.term(dom, k, depth - 1, opaque);
                let x = y.and_then(|y| {
                    let d = self.image_box(&y)?;
                    Ok(comp(self.term(&d, cod, depth - 1, opaque)?, y))
                });
                self.deg = saved;
                x
            }
            3 if cod == 1 => {
                let c = self.range(1, 3);
                let i = self.index(4);
                let x = self.term(dom, c, depth - 1, opaque)?;
                Ok(act(vec![Gen::p(i)], x))
            }
            4 => {
                let i = self.index(dom.dim() + 1);
                let x = self.term(dom, cod, depth - 1, false)?;
                Ok(act(vec![Gen::part(i)], x))
            }
            _ => {
                if cod == 1 && opaque && self.rng.gen_bool(0.4) {
                    Ok(self.opaque(dom))
                } else {
                    Ok(sm(self.poly(dom, cod)))
                }
            }
        }
    }

    /// A random term on a domain of its own choosing; may be a word action.
    fn free(&mut self, cod: usize, opaque: bool) -> Result<Term> {
        if cod > 0 && self.rng.gen_bool(0.35) {
            let dom = self.boxr(0, 2);
            let x = self.term(&dom, cod, 1, opaque)?;
            let w = self.word(2, !opaque && opaque_set(&x).is_empty(), false);
            return Ok(Term::act(w, x));
        }
        let dom = self.boxr(1, 2);
        self.term(&dom, cod, 1, opaque)
    }

    /// A word of length `1..=max` over `I, Q, QQ`, plus `D` when `part`,
    /// plus `P` when `proj`.
    fn word(&mut self, max: usize, part: bool, proj: bool) -> Word {
        let mut kinds = vec![GenKind::Int, GenKind::Q, GenKind::QQ];
        if part {
            kinds.push(GenKind::Part);
        }
        if proj {
            kinds.push(GenKind::P);
        }
        let len = self.range(1, max);
        Word::new(
            (0..len)
                .map(|_| {
                    let k = *kinds.choose(&mut self.rng).expect("nonempty");
                    Gen::new(k, self.rng.gen_range(1..=3))
                })
                .collect(),
        )
    }

    fn sig(&self, t: &Term) -> Result<Signature> {
        signature(t, CompMode::Strict)
    }

    /// A term provably related to `t` by identity, unit or association rules.
    fn variant(&mut self, t: &Term) -> Result<Term> {
        let s = self.sig(t)?;
        Ok(match self.range(0, 4) {
            0 => t.clone(),
            1 => comp(sm(prim::identity(&OpenBox::real(s.cod))), t.clone()),
            2 => Term::act(Word::unit(), t.clone()),
            3 => comp(t.clone(), sm(prim::incl(&s.dom))),
            _ => max_augment(t),
        })
    }

    /// `f(x) = x` on `(0,1)`: the first trial of orientation-sensitive rules.
    fn witness_input(&self) -> Option<Term> {
        (self.trial == 0).then(|| sm("poly 1->1 on (0,1) : x1".parse().expect("literal")))
    }
}

type Checker = fn(&mut Ctx) -> Result<Vec<Check>>;

fn checker(rule: &str) -> Option<Checker> {
    Some(match rule {
        "R5" => r5,
        "R4bis" => r4bis,
        "S0" => s0,
        "R1" => r1,
        "R1bis" => r1bis,
        "R2" => r2,
        "R3" => r3,
        "S3" => s3,
        "R7" => r7,
        "S7bis" => s7bis,
        "R7ter" => r7ter,
        "R7quater" => |c| r7assoc(c, false),
        "R7penta" => |c| r7assoc(c, true),
        "R9" => r9,
        "R9.1" => r9_1,
        "R9.2" => r9_2,
        "R9.3" => r9_3,
        "R9bis" => r9bis,
        "R9ter" => r9ter,
        "R10" => r10,
        "R10.1" => r10_1,
        "R10bis" => r10bis,
        "R11" => r11,
        "R12" => r12,
        "R12.1" => r12_1,
        "R13" => r13,
        "R14" => r14,
        "R15" => r15,
        "R16" => r16,
        "R16.1" => r16_1,
        "R16.2" => r16_2,
        "R16.3" => r16_3,
        "R16.4" => r16_4,
        "R16.5" => r16_5,
        "R17" => r17,
        "R17bis" => r17bis,
        _ => return None,
    })
}

fn r5(c: &mut Ctx) -> Result<Vec<Check>> {
    let n = c.range(1, 3);
    let mut groups = Vec::new();
    let mut flat = Vec::new();
    for _ in 0..n {
        let l = c.range(1, 2);
        let mut g = Vec::new();
        for _ in 0..l {
            let k = c.range(1, 2);
            let x = c.free(k, true)?;
            flat.push(x.clone());
            g.push(x);
        }
        groups.push(Term::tuple(g));
    }
    Ok(same(Term::tuple(groups), Term::tuple(flat)))
}

fn r4bis(c: &mut Ctx) -> Result<Vec<Check>> {
    let n = c.range(1, 3);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for _ in 0..n {
        let k = c.range(1, 2);
        let x = c.free(k, true)?;
        let y = c.variant(&x)?;
        if c.value(&x)? != c.value(&y)? {
            return Err(Error::Invalid("premise pair differs".into()));
        }
        xs.push(x);
        ys.push(y);
    }
    Ok(same(Term::tuple(xs), Term::tuple(ys)))
}

fn s0(c: &mut Ctx) -> Result<Vec<Check>> {
    let n = c.range(1, 3);
    let (mut xs, mut ys, mut pairs) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let k = c.range(1, 2);
        let y = c.free(k, true)?;
        let d = c.image_box(&y)?;
        let cod = c.range(1, 2);
        let x = c.term(&d, cod, 1, true)?;
        pairs.push(comp(x.clone(), y.clone()));
        xs.push(x);
        ys.push(y);
    }
    Ok(same(
        comp(Term::tuple(xs), Term::tuple(ys)),
        Term::tuple(pairs),
    ))
}

fn r1(c: &mut Ctx) -> Result<Vec<Check>> {
    let n = c.range(1, 3);
    let mut ls: Vec<usize> = (0..n).map(|_| c.range(0, 2)).collect();
    if ls.iter().all(|&l| l == 0) {
        ls[0] = 1;
    }
    let x = c.free(ls.iter().sum(), true)?;
    let dom = c.sig(&x)?.dom;
    let blocks: Vec<OpenBox> = ls.iter().map(|&l| OpenBox::real(l)).collect();
    let parts = (1..=n)
        .map(|j| Ok(comp(sm(prim::proj_block(&blocks, j)?), x.clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(same(x, comp(Term::tuple(parts), sm(prim::diag(&dom, n)))))
}

fn r1bis(c: &mut Ctx) -> Result<Vec<Check>> {
    let (k1, k2) = (c.range(1, 2), c.range(1, 2));
    let x1 = c.free(k1, true)?;
    let x2 = c.free(k2, false)?;
    let (s1, s2) = (c.sig(&x1)?, c.sig(&x2)?);
    let cods = [OpenBox::real(s1.cod), OpenBox::real(s2.cod)];
    let lhs = comp(
        sm(prim::proj_block(&cods, 1)?),
        Term::tuple(vec![x1.clone(), x2]),
    );
    let rhs = comp(x1, sm(prim::proj_block(&[s1.dom, s2.dom], 1)?));
    Ok(same(lhs, rhs))
}

fn r2(c: &mut Ctx) -> Result<Vec<Check>> {
    let k = c.range(1, 2);
    let x = c.free(k, true)?;
    let s = c.sig(&x)?;
    let n = c.range(1, 3);
    let lhs = comp(Term::tuple(vec![x.clone(); n]), sm(prim::diag(&s.dom, n)));
    let rhs = comp(sm(prim::diag(&OpenBox::real(s.cod), n)), x);
    Ok(same(lhs, rhs))
}

fn r3(c: &mut Ctx) -> Result<Vec<Check>> {
    let (k1, k2) = (c.range(1, 2), c.range(1, 2));
    let x1 = c.free(k1, true)?;
    let x2 = c.free(k2, true)?;
    let (s1, s2) = (c.sig(&x1)?, c.sig(&x2)?);
    let back = prim::switch(&OpenBox::real(s2.cod), &OpenBox::real(s1.cod));
    let rhs = comp(
        comp(sm(back), Term::tuple(vec![x2.clone(), x1.clone()])),
        sm(prim::switch(&s1.dom, &s2.dom)),
    );
    Ok(same(Term::tuple(vec![x1, x2]), rhs))
}

fn scaled(a: &Q, x: Term, dom: &OpenBox, n: usize) -> Term {
    binop(
        prim::vecprod(1, n),
        sm(prim::constant(dom, std::slice::from_ref(a))),
        x,
        dom,
    )
}

fn s3(c: &mut Ctx) -> Result<Vec<Check>> {
    let a = random_coeff(&mut c.rng, false);
    let k = c.range(1, 2);
    let y = c.free(k, true)?;
    let d = c.image_box(&y)?;
    let n = c.range(1, 2);
    let x = c.term(&d, n, 1, true)?;
    let dy = c.sig(&y)?.dom;
    let lhs = comp(scaled(&a, x.clone(), &d, n), y.clone());
    let rhs = scaled(&a, comp(x, y), &dy, n);
    Ok(same(lhs, rhs))
}

fn r7(c: &mut Ctx) -> Result<Vec<Check>> {
    let k = c.range(1, 3);
    let x = c.free(k, true)?;
    let n = c.sig(&x)?.cod;
    Ok(same(
        x.clone(),
        comp(sm(prim::identity(&OpenBox::real(n))), x),
    ))
}

fn s7bis(c: &mut Ctx) -> Result<Vec<Check>> {
    let n = c.range(1, 2);
    let x = c.free(n, true)?;
    let dom = c.sig(&x)?.dom;
    let z = c.term(&dom, n, 1, true)?;
    let related = c.coin();
    let y = if related {
        c.variant(&x)?
    } else {
        let shift = PolyFun::new(
            dom.clone(),
            (0..n)
                .map(|_| crate::polyfun::Poly::constant(dom.dim(), random_coeff(&mut c.rng, true)))
                .collect(),
        )?;
        sum_t(&x, &sm(shift))?
    };
    if (c.value(&x)? == c.value(&y)?) != related {
        return Err(Error::Invalid("premise pair misclassified".into()));
    }
    let killed = comp(
        sm(prim::vecprod(1, n)),
        Term::tuple(vec![sm(prim::zero(&dom, 1)), z]),
    );
    let rhs = comp(
        comp(sm(prim::vecsum(n, 2)), Term::tuple(vec![y, killed])),
        sm(prim::diag(&dom, 3)),
    );
    Ok(vec![Check {
        lhs: x,
        rhs,
        equal: related,
    }])
}

fn r7ter(c: &mut Ctx) -> Result<Vec<Check>> {
    let k = c.range(1, 2);
    let x = c.free(k, true)?;
    let dom = c.sig(&x)?.dom;
    Ok(same(x.clone(), comp(x, sm(prim::incl(&dom)))))
}

fn r7assoc(c: &mut Ctx, opaque_middle: bool) -> Result<Vec<Check>> {
    let k1 = c.range(1, 2);
    let z = c.free(k1, true)?;
    let dz = c.image_box(&z)?;
    let k2 = c.range(1, 2);
    c.deg = 2;
    let y = c.term(&dz, k2, 0, opaque_middle)?;
    let dy = c.image_box(&y)?;
    let n = c.range(1, 2);
    let x = c.term(&dy, n, 0, true)?;
    c.deg = 3;
    Ok(same(
        comp(comp(x.clone(), y.clone()), z.clone()),
        comp(x, comp(y, z)),
    ))
}

fn r9(c: &mut Ctx) -> Result<Vec<Check>> {
    let k = c.range(1, 2);
    let x = c.free(k, true)?;
    Ok(same(x.clone(), Term::act(Word::unit(), x)))
}

fn r9_1(c: &mut Ctx) -> Result<Vec<Check>> {
    let k = c.range(1, 2);
    let x = c.free(k, true)?;
    let smooth = opaque_set(&x).is_empty();
    let m = c.word(2, smooth, true);
    let n = c.word(2, smooth, true);
    let lhs = Term::act(m.clone(), Term::act(n.clone(), x.clone()));
    Ok(same(lhs, Term::act(m.concat(&n), x)))
}

fn r9_2(c: &mut Ctx) -> Result<Vec<Check>> {
    let k = c.range(1, 2);
    let x = c.free(k, true)?;
    let y = c.variant(&x)?;
    if c.value(&x)? != c.value(&y)? {
        return Err(Error::Invalid("premise pair differs".into()));
    }
    let m = c.word(3, opaque_set(&x).is_empty(), true);
    Ok(same(Term::act(m.clone(), x), Term::act(m, y)))
}

fn r9_3(c: &mut Ctx) -> Result<Vec<Check>> {
    let dom = c.boxr(1, 3);
    let m = dom.dim();
    let n = c.range(1, 2);
    let x = c.term(&dom, n, 1, true)?;
    let i = c.range(1, m);
    let coords = (0..=m)
        .map(|k| crate::polyfun::Poly::var(m, if k < i { k } else { k - 1 }))
        .collect();
    let h = PolyFun::new(dom.clone(), coords)?;
    let lhs = comp(act(vec![Gen::int(i as u32)], x.clone()), sm(h));
    Ok(same(lhs, scaled(&q(0), x, &dom, n)))
}

fn r9bis(c: &mut Ctx) -> Result<Vec<Check>> {
    let dom = c.boxr(0, 2);
    let n = c.range(1, 2);
    let x = c.term(&dom, n, 1, true)?;
    let u = random_subbox(&mut c.rng, &dom);
    let i = c.index(4);
    let lhs = act(vec![Gen::int(i)], comp(x.clone(), sm(prim::incl(&u))));
    let rhs = comp(
        act(vec![Gen::int(i)], x),
        sm(prim::incl(&u.domint(i as usize))),
    );
    Ok(same(lhs, rhs))
}

fn r9ter(c: &mut Ctx) -> Result<Vec<Check>> {
    let (m1, m2) = (c.range(1, 2), c.range(0, 2));
    let u1 = random_box_around_origin(&mut c.rng, m1);
    let u2 = random_box_around_origin(&mut c.rng, m2);
    let dom = random_superbox(&mut c.rng, &u1.times(&u2));
    let n = c.range(1, 2);
    let x = c.term(&dom, n, 1, true)?;
    let i = c.index(m1);
    let lhs = act(
        vec![Gen::int(i)],
        comp(x.clone(), sm(prim::pointed_incl(&u1, &u2))),
    );
    let rhs = comp(
        act(vec![Gen::int(i)], x),
        sm(prim::pointed_incl(&u1.domint(i as usize), &u2)),
    );
    Ok(same(lhs, rhs))
}

/// `z_{i+1} - z_i` on `d`, spelled with `vecsum`/`vecminus`.
fn width(d: &OpenBox, i: usize) -> Result<Term> {
    let hi = sm(prim::coord(d, i + 1)?);
    let lo = comp(sm(prim::vecminus(1)), sm(prim::coord(d, i)?));
    sum_t(&hi, &lo)
}

fn r10(c: &mut Ctx) -> Result<Vec<Check>> {
    let n = c.range(1, 3);
    let mut xs = Vec::new();
    let (mut ls, mut ms) = (Vec::new(), Vec::new());
    for _ in 0..n {
        let d = c.boxr(0, 2);
        let m = c.range(1, 2);
        ls.push(d.dim());
        ms.push(m);
        xs.push(c.term(&d, m, 1, true)?);
    }
    let mut big_l = vec![0usize];
    for l in &ls {
        big_l.push(big_l.last().expect("nonempty") + l);
    }
    let total = big_l[n];
    let i = c.range(1, total + 2);
    let doms: Vec<OpenBox> = xs
        .iter()
        .map(|x| c.sig(x).map(|s| s.dom))
        .collect::<Result<_>>()?;
    let owner = (1..=n).find(|&j| big_l[j - 1] < i && i <= big_l[j]);
    let mut blocks: Vec<OpenBox> = doms
        .iter()
        .enumerate()
        .map(|(j, d)| {
            if owner == Some(j + 1) {
                d.domint(i - big_l[j])
            } else {
                d.clone()
            }
        })
        .collect();
    if i > total {
        blocks.push(OpenBox::real(i - total + 1));
    }
    let d = OpenBox::product(&blocks);
    let x = Term::tuple(xs.clone());
    if d != c.sig(&x)?.dom.domint(i) {
        return Err(Error::Invalid("block layout disagrees with domint".into()));
    }
    let ys = (1..=n)
        .map(|j| {
            let pj = sm(prim::proj_block(&blocks, j)?);
            if owner == Some(j) {
                let local = (i - big_l[j - 1]) as u32;
                Ok(comp(act(vec![Gen::int(local)], xs[j - 1].clone()), pj))
            } else {
                let body = comp(xs[j - 1].clone(), pj);
                Ok(binop(prim::vecprod(ms[j - 1], 1), body, width(&d, i)?, &d))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let lhs = act(vec![Gen::int(i as u32)], x);
    Ok(same(lhs, comp(Term::tuple(ys), sm(prim::diag(&d, n)))))
}

fn r10_1(c: &mut Ctx) -> Result<Vec<Check>> {
    let dom = c.boxr(1, 3);
    let m = dom.dim();
    let n = c.range(1, 2);
    let x = c.term(&dom, n, 1, true)?;
    let i = c.range(1, m);
    let mut sigma: Vec<usize> = (0..=m).collect();
    sigma.swap(i - 1, i);
    let sw = prim::permute(&OpenBox::real(m + 1), &sigma)?;
    let ix = act(vec![Gen::int(i as u32)], x);
    let lhs = comp(ix.clone(), comp(sm(sw), sm(prim::incl(&dom.domint(i)))));
    Ok(same(lhs, comp(sm(prim::vecminus(n)), ix)))
}

fn r10bis(c: &mut Ctx) -> Result<Vec<Check>> {
    let dom = c.boxr(0, 2);
    let n = c.range(1, 2);
    let x1 = c.term(&dom, n, 1, true)?;
    let x2 = c.term(&dom, n, 1, true)?;
    let i = c.index(4);
    let int = |t: Term| act(vec![Gen::int(i)], t);
    let lhs = int(binop(prim::vecsum(n, 2), x1.clone(), x2.clone(), &dom));
    let rhs = binop(
        prim::vecsum(n, 2),
        int(x1),
        int(x2),
        &dom.domint(i as usize),
    );
    Ok(same(lhs, rhs))
}

fn r11(c: &mut Ctx) -> Result<Vec<Check>> {
    let n = c.range(1, 3);
    let mut xs = Vec::new();
    let mut big_m = vec![0usize];
    for _ in 0..n {
        let d = c.boxr(0, 2);
        let k = c.range(1, 2);
        big_m.push(big_m.last().expect("nonempty") + d.dim());
        xs.push((c.term(&d, k, 1, false)?, k));
    }
    let i = c.range(1, big_m[n] + 1);
    let ys = xs
        .iter()
        .enumerate()
        .map(|(j, (x, k))| {
            if big_m[j] < i && i <= big_m[j + 1] {
                act(vec![Gen::part((i - big_m[j]) as u32)], x.clone())
            } else {
                comp(sm(prim::zero(&OpenBox::real(*k), *k)), x.clone())
            }
        })
        .collect();
    let x = Term::tuple(xs.into_iter().map(|(x, _)| x).collect());
    Ok(same(act(vec![Gen::part(i as u32)], x), Term::tuple(ys)))
}

fn r12(c: &mut Ctx) -> Result<Vec<Check>> {
    let dom2 = c.boxr(1, 2);
    let m = c.range(1, 2);
    let x2 = c.term(&dom2, m, 1, false)?;
    let d1 = c.image_box(&x2)?;
    let n = c.range(1, 2);
    let x1 = c.term(&d1, n, 1, false)?;
    let i = c.index(dom2.dim() + 1);
    let ys = (1..=m as u32)
        .map(|k| {
            let outer = comp(act(vec![Gen::part(k)], x1.clone()), x2.clone());
            let inner = act(vec![Gen::p(k), Gen::part(i)], x2.clone());
            binop(prim::vecprod(n, 1), outer, inner, &dom2)
        })
        .collect();
    let rhs = comp(
        comp(sm(prim::vecsum(n, m)), Term::tuple(ys)),
        sm(prim::diag(&dom2, m)),
    );
    Ok(same(act(vec![Gen::part(i)], comp(x1, x2)), rhs))
}

fn r12_1(c: &mut Ctx) -> Result<Vec<Check>> {
    let n = c.range(1, 2);
    let x = c.free(n, false)?;
    let s = c.sig(&x)?;
    let i = c.index(s.dom.dim() + 1);
    let dx = act(vec![Gen::part(i)], x.clone());
    let z = comp(sm(prim::zero(&OpenBox::real(n), n)), x);
    Ok(same(dx.clone(), binop(prim::vecsum(n, 2), dx, z, &s.dom)))
}

fn r13(c: &mut Ctx) -> Result<Vec<Check>> {
    let n = c.range(0, 3);
    let x = if n == 0 {
        let d = c.boxr(0, 2);
        sm(prim::zero(&d, 0))
    } else {
        c.free(n, true)?
    };
    let i = c.index(4) as usize;
    let lhs = act(vec![Gen::p(i as u32)], x.clone());
    let rhs = if n == 0 {
        x
    } else if i <= n {
        comp(sm(prim::coord(&OpenBox::real(n), i)?), x)
    } else {
        comp(sm(prim::zero(&OpenBox::real(n), 1)), x)
    };
    Ok(same(lhs, rhs))
}

/// Input and index for the endpoint rules; trial 0 is `x` on `(0,1)`, `i = 1`.
fn endpoint_input(c: &mut Ctx, opaque: bool) -> Result<(Term, usize)> {
    if let Some(x) = c.witness_input() {
        return Ok((x, 1));
    }
    let n = c.range(1, 2);
    let x = c.free(n, opaque)?;
    let i = c.range(1, 4);
    Ok((x, i))
}

/// `x ∘ (drop coordinate k)` on `domint(dom x, i)`, or the lift when `i > m`.
fn drop_coord(c: &Ctx, x: Term, i: usize, k: usize) -> Result<Term> {
    let dom = c.sig(&x)?.dom;
    let m = dom.dim();
    Ok(if i <= m {
        comp(
            x,
            comp(sm(prim::proje(m, k)?), sm(prim::incl(&dom.domint(i)))),
        )
    } else {
        comp(
            x,
            sm(prim::proj_block(&[dom, OpenBox::real(i - m + 1)], 1)?),
        )
    })
}

fn r14(c: &mut Ctx) -> Result<Vec<Check>> {
    let (x, i) = endpoint_input(c, true)?;
    let rhs = drop_coord(c, x.clone(), i, i)?;
    Ok(same(act(vec![Gen::q(i as u32)], x), rhs))
}

fn r15(c: &mut Ctx) -> Result<Vec<Check>> {
    let (x, i) = endpoint_input(c, true)?;
    let n = c.sig(&x)?.cod;
    let neg = comp(sm(prim::vecminus(n)), x.clone());
    let rhs = drop_coord(c, neg, i, i + 1)?;
    Ok(same(act(vec![Gen::qq(i as u32)], x), rhs))
}

fn r16(c: &mut Ctx) -> Result<Vec<Check>> {
    let (x, i) = endpoint_input(c, false)?;
    let s = c.sig(&x)?;
    let i = i as u32;
    let ftc = act(vec![Gen::int(i), Gen::part(i)], x.clone());
    let lower = comp(sm(prim::vecminus(s.cod)), act(vec![Gen::qq(i)], x.clone()));
    let rhs = binop(
        prim::vecsum(s.cod, 2),
        ftc,
        lower,
        &s.dom.domint(i as usize),
    );
    Ok(same(act(vec![Gen::q(i)], x), rhs))
}

fn product_pair(c: &mut Ctx) -> Result<(Term, Term, OpenBox, usize, usize, u32)> {
    let dom2 = c.boxr(0, 2);
    let n = c.range(1, 2);
    let x2 = c.term(&dom2, n, 1, true)?;
    let i = c.index(3);
    let d1 = dom2.domint(i as usize);
    let m = c.range(1, 2);
    let x1 = c.term(&d1, m, 1, true)?;
    Ok((x1, x2, d1, m, n, i))
}

fn r16_1(c: &mut Ctx) -> Result<Vec<Check>> {
    let (x1, x2, d1, m, n, i) = product_pair(c)?;
    let v = prim::vecprod(m, n);
    let lhs = act(
        vec![Gen::int(i)],
        binop(v.clone(), x1.clone(), act(vec![Gen::q(i)], x2.clone()), &d1),
    );
    let rhs = binop(
        v,
        act(vec![Gen::int(i)], x1),
        act(vec![Gen::q(i), Gen::q(i)], x2),
        &d1.domint(i as usize),
    );
    Ok(same(lhs, rhs))
}

fn r16_2(c: &mut Ctx) -> Result<Vec<Check>> {
    let (x1, x2, d1, m, n, i) = product_pair(c)?;
    let v = prim::vecprod(m, n);
    let lhs = act(
        vec![Gen::int(i + 1)],
        binop(
            v.clone(),
            x1.clone(),
            act(vec![Gen::qq(i)], x2.clone()),
            &d1,
        ),
    );
    let inner = comp(sm(prim::vecminus(n)), act(vec![Gen::qq(i)], x2));
    let rhs = binop(
        v,
        act(vec![Gen::int(i + 1)], x1),
        act(vec![Gen::qq(i)], inner),
        &d1.domint(i as usize),
    );
    Ok(same(lhs, rhs))
}

fn r16_3(c: &mut Ctx) -> Result<Vec<Check>> {
    let (x, i) = endpoint_input(c, true)?;
    let s = c.sig(&x)?;
    let i = i as u32;
    let a = act(vec![Gen::q(i + 1), Gen::int(i)], x.clone());
    let b = act(vec![Gen::qq(i + 1), Gen::int(i)], x.clone());
    let d = s.dom.domint(i as usize).domint(i as usize);
    let rhs = binop(prim::vecsum(s.cod, 2), a, b, &d);
    Ok(same(act(vec![Gen::q(i), Gen::int(i)], x), rhs))
}

fn r16_4(c: &mut Ctx) -> Result<Vec<Check>> {
    let (x, i) = endpoint_input(c, true)?;
    let n = c.sig(&x)?.cod;
    let i = i as u32;
    let rhs = comp(
        sm(prim::vecminus(n)),
        act(vec![Gen::q(i + 1), Gen::int(i)], x.clone()),
    );
    Ok(same(act(vec![Gen::qq(i), Gen::int(i)], x), rhs))
}

fn r16_5(c: &mut Ctx) -> Result<Vec<Check>> {
    let (x, i) = endpoint_input(c, true)?;
    let n = c.sig(&x)?.cod;
    let i = i as u32;
    let rhs = comp(
        sm(prim::vecminus(n)),
        act(vec![Gen::q(i + 1), Gen::q(i)], x.clone()),
    );
    Ok(same(act(vec![Gen::qq(i), Gen::q(i)], x), rhs))
}

fn r17(c: &mut Ctx) -> Result<Vec<Check>> {
    let n = c.range(1, 2);
    let x = c.free(n, false)?;
    let f = c.value(&x)?;
    Ok(same(x, linincl_of(&f)?))
}

fn r17bis(c: &mut Ctx) -> Result<Vec<Check>> {
    let dom = c.boxr(1, 2);
    let n = c.range(1, 2);
    let f = c.poly(&dom, n);
    let len = c.range(0, 5);
    let w = Word::new(
        (0..len)
            .map(|_| {
                let k = *[
                    GenKind::Int,
                    GenKind::Part,
                    GenKind::P,
                    GenKind::Q,
                    GenKind::QQ,
                ]
                .choose(&mut c.rng)
                .expect("nonempty");
                Gen::new(k, c.rng.gen_range(1..=4))
            })
            .collect(),
    );
    let g = f.apply_word_with(&w, c.opts.orientation);
    Ok(same(Term::act(w, sm(f)), linincl_of(&g)?))
}

fn seed_for(rule: &str, seed: u64) -> u64 {
    rule.bytes().fold(seed ^ 0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    })
}

fn fail(trial: usize, reason: String, c: &Ctx, lhs: &Term, rhs: &Term) -> Verdict {
    let value = |t: &Term| c.value(t).ok().map(|f| f.to_string());
    Verdict::Failed(Box::new(Witness {
        trial,
        reason,
        instantiation: c
            .inst
            .iter()
            .map(|(k, f)| (k.clone(), f.to_string()))
            .collect(),
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
        lhs_value: value(lhs),
        rhs_value: value(rhs),
    }))
}

fn run_trial(c: &mut Ctx, f: Checker) -> Option<Verdict> {
    let trial = c.trial;
    let checks = match f(c) {
        Ok(v) => v,
        Err(e) => {
            let dummy = Term::smooth(prim::zero(&OpenBox::point(), 0));
            return Some(fail(
                trial,
                format!("instance construction: {e}"),
                c,
                &dummy,
                &dummy,
            ));
        }
    };
    for ch in checks {
        let sides = c.sig(&ch.lhs).and_then(|a| Ok((a, c.sig(&ch.rhs)?)));
        match sides {
            Err(e) => return Some(fail(trial, format!("signature: {e}"), c, &ch.lhs, &ch.rhs)),
            Ok((a, b)) if a != b && ch.equal => {
                return Some(fail(
                    trial,
                    format!("signatures {a} vs {b}"),
                    c,
                    &ch.lhs,
                    &ch.rhs,
                ))
            }
            _ => {}
        }
        let values = c.value(&ch.lhs).and_then(|a| Ok((a, c.value(&ch.rhs)?)));
        match values {
            Err(e) => return Some(fail(trial, format!("evaluation: {e}"), c, &ch.lhs, &ch.rhs)),
            Ok((a, b)) if (a == b) != ch.equal => {
                let why = if ch.equal {
                    "sides differ"
                } else {
                    "sides agree unexpectedly"
                };
                return Some(fail(trial, why.into(), c, &ch.lhs, &ch.rhs));
            }
            _ => {}
        }
    }
    None
}

/// Runs `trials` random instances of one catalogue rule.
pub fn check_relation(
    rule: &str,
    trials: usize,
    seed: u64,
    orientation: Orientation,
) -> Result<RelationReport> {
    let f = checker(rule).ok_or_else(|| Error::Invalid(format!("unknown rule `{rule}`")))?;
    let start = Instant::now();
    let mut c = Ctx::new(seed_for(rule, seed), orientation);
    let mut verdict = if trials == 0 {
        Verdict::Skipped("no trials requested".into())
    } else {
        Verdict::Verified
    };
    for t in 0..trials {
        c.trial = t;
        c.inst.clear();
        c.deg = 3;
        if let Some(v) = run_trial(&mut c, f) {
            verdict = v;
            break;
        }
    }
    Ok(RelationReport {
        rule_id: rule.to_string(),
        trials,
        verdict,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Every catalogue rule, run in parallel, reported in catalogue order.
pub fn check_all(trials: usize, seed: u64, orientation: Orientation) -> Vec<RelationReport> {
    RULES
        .par_iter()
        .map(|r| check_relation(r, trials, seed, orientation).expect("known rule"))
        .collect()
}

/// Soundness of one defining relation of the monoid: both sides must act
/// identically. Trial 0 uses the smallest admissible indices on `x` over `(0,1)`.
pub fn check_word_relation(
    name: &str,
    trials: usize,
    seed: u64,
    orientation: Orientation,
) -> Result<RelationReport> {
    let rel = relations()
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| Error::Invalid(format!("unknown relation `{name}`")))?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(name, seed));
    let mut verdict = Verdict::Verified;
    let smallest = (1..=4u32)
        .flat_map(|i| (1..=4u32).map(move |j| (i, j)))
        .find_map(|(i, j)| rel.instance(i, j));
    for t in 0..trials {
        let (lw, rw) = if t == 0 {
            smallest.clone()
        } else {
            (0..64).find_map(|_| rel.instance(rng.gen_range(1..=4), rng.gen_range(1..=4)))
        }
        .ok_or_else(|| Error::Invalid(format!("no admissible instance of `{name}`")))?;
        let f = if t == 0 {
            "poly 1->1 on (0,1) : x1".parse().expect("literal")
        } else {
            let m = rng.gen_range(1..=3);
            let d = random_box(&mut rng, m);
            let n = rng.gen_range(1..=2);
            random_polyfun(&mut rng, &d, n, 3)
        };
        let (a, b) = (
            f.apply_word_with(&lw, orientation),
            f.apply_word_with(&rw, orientation),
        );
        if a != b {
            verdict = Verdict::Failed(Box::new(Witness {
                trial: t,
                reason: "actions differ".into(),
                instantiation: [("f".to_string(), f.to_string())].into(),
                lhs: lw.to_string(),
                rhs: rw.to_string(),
                lhs_value: Some(a.to_string()),
                rhs_value: Some(b.to_string()),
            }));
            break;
        }
    }
    Ok(RelationReport {
        rule_id: name.to_string(),
        trials,
        verdict,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_rule_verified() {
        let r = check_relation("R7", 5, 1, Orientation::Ftc).unwrap();
        assert!(r.verified(), "{r:?}");
        assert!(r.line().starts_with("R7 Verified trials=5 time="));
    }

    #[test]
    fn unknown_rule_is_an_error() {
        assert!(check_relation("R99", 1, 0, Orientation::Ftc).is_err());
        assert!(check_word_relation("nope", 1, 0, Orientation::Ftc).is_err());
    }

    #[test]
    fn zero_trials_skip() {
        let r = check_relation("R9", 0, 0, Orientation::Ftc).unwrap();
        assert_eq!(r.verdict.label(), "Skipped");
    }

    #[test]
    fn endpoint_rules_track_orientation() {
        for rule in ["R14", "R15", "R16"] {
            assert!(check_relation(rule, 8, 3, Orientation::Ftc)
                .unwrap()
                .verified());
            let bad = check_relation(rule, 8, 3, Orientation::Swapped).unwrap();
            match bad.verdict {
                Verdict::Failed(w) => {
                    assert_eq!(w.trial, 0);
                    assert!(w.lhs.contains("x1"));
                }
                v => panic!("{rule}: {v:?}"),
            }
        }
    }

    #[test]
    fn word_relations_sound() {
        for r in relations() {
            let rep = check_word_relation(r.name, 10, 2, Orientation::Ftc).unwrap();
            assert!(rep.verified(), "{rep:?}");
        }
    }

    #[test]
    fn report_json_round_trip() {
        let r = check_relation("R14", 2, 0, Orientation::Swapped).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        let back: RelationReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
