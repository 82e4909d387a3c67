//! The ten acceptance criteria, one PASS/FAIL line each.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use intdiff::cli::DEFAULT_SEED;
use intdiff::eval::{
    eval_term, linincl, linincl_of, random_box, random_coeff, random_polyfun, Combo,
};
use intdiff::interval::OpenBox;
use intdiff::monoid::{normalize_checked, random_rewrites, random_word, word_eq, WordEq};
use intdiff::prederiv::{
    apply, canonical_direction, chain_check, eval_smooth, nontriviality_witness, random_core,
    random_degenerate_core, random_direction, vanishing_space, GermCore, PreDeriv,
};
use intdiff::relations::{check_all, check_relation, check_word_relation, Verdict};
use intdiff::tangent::{comb_sweep, transition_ns};
use intdiff::term::{has_left_nested_comp, max_augment, BaseFn};
use intdiff::{Gen, Orientation, Poly, PolyFun, Term, Word, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ tag)
}

fn relation_catalogue() -> Outcome {
    let start = Instant::now();
    let reports = check_all(20, DEFAULT_SEED, Orientation::Ftc);
    let elapsed = start.elapsed();
    ensure(reports.len() == 36, || {
        format!("{} checkers ran", reports.len())
    })?;
    let bad: Vec<String> = reports
        .iter()
        .filter(|r| !r.verified())
        .map(|r| r.line())
        .collect();
    ensure(bad.is_empty(), || bad.join("; "))?;
    ensure(elapsed < Duration::from_secs(300), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("36/36 verified in {:.1}s", elapsed.as_secs_f64()))
}

fn orientation_endpoints() -> Outcome {
    let mut failed = 0;
    for rule in ["R14", "R15", "R16"] {
        let swapped = check_relation(rule, 20, DEFAULT_SEED, Orientation::Swapped).unwrap();
        match &swapped.verdict {
            Verdict::Failed(w) => {
                ensure(w.trial == 0 && w.lhs.contains("on (0,1) : x1"), || {
                    format!("{rule}: witness is not x on (0,1): {w:?}")
                })?;
                failed += 1;
            }
            v => {
                return Err(format!(
                    "{rule} under the swapped orientation: {}",
                    v.label()
                ))
            }
        }
        let ftc = check_relation(rule, 20, DEFAULT_SEED, Orientation::Ftc).unwrap();
        ensure(ftc.verified(), || ftc.line())?;
    }
    for rel in ["leftproj-i", "rightproj-i"] {
        let swapped = check_word_relation(rel, 20, DEFAULT_SEED, Orientation::Swapped).unwrap();
        match &swapped.verdict {
            Verdict::Failed(w) => {
                ensure(
                    w.trial == 0 && w.instantiation["f"] == "poly 1->1 on (0,1) : x1",
                    || format!("{rel}: unexpected witness {w:?}"),
                )?;
                failed += 1;
            }
            v => {
                return Err(format!(
                    "{rel} under the swapped orientation: {}",
                    v.label()
                ))
            }
        }
        let ftc = check_word_relation(rel, 20, DEFAULT_SEED, Orientation::Ftc).unwrap();
        ensure(ftc.verified(), || ftc.line())?;
    }
    Ok(format!(
        "{failed} swapped failures at f(x)=x, all adopted checks verified"
    ))
}

fn monoid_confluence() -> Outcome {
    let mut r = rng(3);
    let mut unknown = 0;
    for k in 0..500 {
        let w = random_word(&mut r, 8, 4);
        let a = random_rewrites(&mut r, &w, 6);
        let b = random_rewrites(&mut r, &a, 6);
        let c = random_rewrites(&mut r, &w, 10);
        let (nb, done_b) = normalize_checked(&b);
        let (nc, done_c) = normalize_checked(&c);
        ensure(done_b && done_c, || format!("class search capped on {w}"))?;
        ensure(nb == nc, || format!("{w}: schedules reach {nb} and {nc}"))?;
        for (x, y) in [(&w, &b), (&b, &c)] {
            if word_eq(x, y, k) == WordEq::Unknown {
                unknown += 1;
            }
        }
        let v = random_word(&mut r, 8, 4);
        if word_eq(&w, &v, k) == WordEq::Unknown {
            unknown += 1;
        }
    }
    ensure(unknown == 0, || {
        format!("word_eq returned Unknown {unknown} times")
    })?;
    Ok("500 words, schedules agree, no Unknown".into())
}

fn domint_identities() -> Outcome {
    let mut r = rng(4);
    for _ in 0..200 {
        let m = r.gen_range(0..=4);
        let u = random_box(&mut r, m);
        for i in 1..=5 {
            let expect_dim = if i <= m { m + 1 } else { i + 1 };
            ensure(u.domint(i).dim() == expect_dim, || {
                format!("dim of domint({u}, {i})")
            })?;
            for j in 1..=5 {
                let lhs = u.domint(i).domint(j);
                let rhs = if i < j {
                    u.domint(j - 1).domint(i)
                } else {
                    u.domint(j).domint(i + 1)
                };
                ensure(lhs == rhs, || format!("U={u} i={i} j={j}: {lhs} vs {rhs}"))?;
            }
        }
    }
    Ok("200 boxes, i,j <= 5".into())
}

/// `u_ℓ · ∏ (x_{2i} − x_{2i−1})`, built by hand.
fn product_oracle(l: usize, ell: usize, u: &[Q]) -> Poly {
    let n = 2 * l;
    let mut p = Poly::constant(n, u[ell - 1].clone());
    for i in 1..=l {
        let width = Poly::var(n, 2 * i - 1).sub(&Poly::var(n, 2 * i - 2));
        p = p.mul(&width);
    }
    p
}

fn nontriviality() -> Outcome {
    let mut r = rng(5);
    let mut cases = 0;
    for l in 1..=3 {
        for ell in 1..=l {
            for _ in 0..10 {
                let u = random_direction(&mut r, l);
                let w = nontriviality_witness(l, ell, &u).map_err(|e| e.to_string())?;
                ensure(w.codim() == l && w.arity() == 2 * l, || {
                    format!("shape of {w}")
                })?;
                let want = product_oracle(l, ell, &u);
                ensure(w.components()[0] == want, || {
                    format!("l={l} ell={ell}: {w}")
                })?;
                ensure(w.components()[1..].iter().all(Poly::is_zero), || {
                    format!("{w}")
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases"))
}

fn jac_times(f: &PolyFun, v: &[Q]) -> Vec<Q> {
    // Linear part of each component, read off the monomials of degree one.
    let m = f.arity();
    f.components()
        .iter()
        .map(|p| {
            (0..m)
                .map(|k| {
                    let mut e = vec![0; m];
                    e[k] = 1;
                    p.coeff(&e) * &v[k]
                })
                .sum()
        })
        .collect()
}

fn section_and_chain() -> Outcome {
    let mut r = rng(6);
    for _ in 0..100 {
        let m = r.gen_range(1..=4);
        let u = random_direction(&mut r, m);
        let d = PreDeriv::single(GermCore::identity(m), u.clone()).map_err(|e| e.to_string())?;
        ensure(eval_smooth(&d) == u, || {
            format!("evalSmooth(D[id,u]) != u for {d}")
        })?;
    }
    for _ in 0..100 {
        let (l, m, k) = (r.gen_range(1..=3), r.gen_range(1..=3), r.gen_range(1..=3));
        let z = random_core(&mut r, l, m, 3);
        let f = random_core(&mut r, m, k, 3);
        let f = PolyFun::new(OpenBox::real(m), f.map().components().to_vec()).unwrap();
        let u = random_direction(&mut r, l);
        let d = PreDeriv::single(z.clone(), u.clone()).map_err(|e| e.to_string())?;
        ensure(chain_check(&f, &d).map_err(|e| e.to_string())?, || {
            format!("chain rule: f={f} D={d}")
        })?;
        let want = jac_times(&f, &jac_times(z.map(), &u));
        let got = eval_smooth(&intdiff::prederiv::pre_diff(&f, &d).map_err(|e| e.to_string())?);
        ensure(got == want, || {
            format!("pre-differential value for f={f} D={d}")
        })?;
    }
    Ok("100 sections, 100 chain triples".into())
}

fn vanishing_soundness() -> Outcome {
    let mut r = rng(7);
    let mut nonempty = 0;
    for n in 0..100 {
        let l = r.gen_range(2..=4);
        let m = r.gen_range(1..=3);
        let z = if n % 4 == 0 {
            random_core(&mut r, l, m, 3)
        } else {
            let k = r.gen_range(1..l);
            random_degenerate_core(&mut r, l, k, m, 3)
        };
        let basis = vanishing_space(&z);
        if !basis.is_empty() {
            nonempty += 1;
        }
        let ws: Vec<PolyFun> = (0..20)
            .map(|_| random_polyfun(&mut r, &OpenBox::real(m), 1, 3))
            .collect();
        for b in &basis {
            let d = PreDeriv::single(z.clone(), b.clone()).unwrap();
            for w in &ws {
                let out = apply(&d, w).map_err(|e| e.to_string())?;
                ensure(
                    out.iter().all(|g| g.components().iter().all(Poly::is_zero)),
                    || format!("D[{}, {b:?}] does not kill {w}", z.map()),
                )?;
            }
        }
        let u = random_direction(&mut r, l);
        let c = canonical_direction(&z, &u).unwrap();
        ensure(canonical_direction(&z, &c).unwrap() == c, || {
            "canonical not idempotent".into()
        })?;
        let du = PreDeriv::single(z.clone(), u).unwrap();
        let dc = PreDeriv::single(z.clone(), c).unwrap();
        for w in &ws {
            ensure(apply(&du, w).unwrap() == apply(&dc, w).unwrap(), || {
                format!("canonical direction changes the action on {w}")
            })?;
        }
    }
    ensure(nonempty >= 50, || {
        format!("only {nonempty} cores had a vanishing direction")
    })?;
    Ok(format!(
        "100 cores ({nonempty} degenerate), 20 test germs each"
    ))
}

/// A random smooth term on `dom`, built with deliberately mixed association.
fn smooth_term(r: &mut ChaCha8Rng, dom: &OpenBox, cod: usize, depth: u32) -> Term {
    let kind = if depth == 0 { 0 } else { r.gen_range(0..=3) };
    match kind {
        1 => {
            let (k, j) = (r.gen_range(1..=2), r.gen_range(1..=2));
            let h = smooth_term(r, dom, k, depth - 1);
            let g = smooth_term(r, &OpenBox::real(k), j, depth - 1);
            let f = smooth_term(r, &OpenBox::real(j), cod, depth - 1);
            if r.gen_bool(0.7) {
                Term::comp(Term::comp(f, g), h)
            } else {
                Term::comp(f, Term::comp(g, h))
            }
        }
        2 if cod >= 2 => {
            let c1 = r.gen_range(1..cod);
            let cut = r.gen_range(0..=dom.dim());
            let a = smooth_term(r, &dom.slice(0, cut), c1, depth - 1);
            let b = smooth_term(r, &dom.slice(cut, dom.dim()), cod - c1, depth - 1);
            Term::tuple(vec![a, b])
        }
        3 if dom.dim() > 0 => {
            let i = r.gen_range(1..=dom.dim() as u32);
            Term::act(
                Word::new(vec![Gen::part(i)]),
                smooth_term(r, dom, cod, depth - 1),
            )
        }
        _ => Term::smooth(random_polyfun(r, dom, cod, 2)),
    }
}

fn augmentation() -> Outcome {
    let mut r = rng(8);
    let mut nested = 0;
    for _ in 0..200 {
        let m = r.gen_range(1..=3);
        let dom = random_box(&mut r, m);
        let cod = r.gen_range(1..=3);
        let t = smooth_term(&mut r, &dom, cod, 3);
        if has_left_nested_comp(&t) {
            nested += 1;
        }
        let a = max_augment(&t);
        ensure(max_augment(&a) == a, || format!("not idempotent on {t}"))?;
        ensure(!has_left_nested_comp(&a), || {
            format!("left nesting survives in {a}")
        })?;
        let (vt, va) = (eval_term(&t), eval_term(&a));
        ensure(vt.is_ok() && vt == va, || {
            format!("value changed on {t}: {vt:?} vs {va:?}")
        })?;
    }
    ensure(nested >= 50, || {
        format!("only {nested} inputs had left nesting")
    })?;
    Ok(format!("200 terms ({nested} left-nested)"))
}

fn sphere_combing() -> Outcome {
    let start = Instant::now();
    let rep = comb_sweep(2, 200, 0.1).map_err(|e| e.to_string())?;
    let mut involution: f64 = 0.0;
    for s in &rep.samples {
        let n = s.y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1.0 / 3.0 + 1e-9 {
            let back = transition_ns(&transition_ns(&s.y).unwrap()).unwrap();
            let err = back
                .iter()
                .zip(&s.y)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            involution = involution.max(err);
        }
    }
    let elapsed = start.elapsed();
    ensure((rep.vanishing_radius - 0.5).abs() <= 0.02, || rep.summary())?;
    ensure(rep.min_certificate > 1e-6, || rep.summary())?;
    ensure(involution < 1e-10, || {
        format!("involution error {involution:e}")
    })?;
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{} involution_error={involution:.1e} time={:.1}s",
        rep.summary(),
        elapsed.as_secs_f64()
    ))
}

fn linincl_round_trip() -> Outcome {
    let mut r = rng(10);
    for n in 0..100 {
        let m = r.gen_range(1..=3);
        let dom = random_box(&mut r, m);
        let (term, want) = if n % 2 == 0 {
            let comps = r.gen_range(1..=3);
            let mut combos = Vec::new();
            let mut rows = Vec::new();
            for _ in 0..comps {
                let k = r.gen_range(1..=3);
                let mut row = Poly::zero(m);
                let (mut coeffs, mut bases) = (Vec::new(), Vec::new());
                for _ in 0..k {
                    let a = random_coeff(&mut r, true);
                    let b = random_polyfun(&mut r, &dom, 1, 3);
                    row = row.add(&b.components()[0].scale(&a));
                    coeffs.push(a);
                    bases.push(BaseFn::Smooth(b));
                }
                combos.push(Combo { coeffs, bases });
                rows.push(row);
            }
            (linincl(&combos), PolyFun::new(dom, rows).unwrap())
        } else {
            let cod = r.gen_range(1..=3);
            let f = random_polyfun(&mut r, &dom, cod, 3);
            (linincl_of(&f), f)
        };
        let term = term.map_err(|e| e.to_string())?;
        let got = eval_term(&term).map_err(|e| e.to_string())?;
        ensure(got == want, || {
            format!("linincl of {want} evaluates to {got}")
        })?;
    }
    Ok("100 combinations".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("relation catalogue", relation_catalogue),
        ("orientation", orientation_endpoints),
        ("monoid confluence", monoid_confluence),
        ("domint identities", domint_identities),
        ("non-triviality product", nontriviality),
        ("section and chain rule", section_and_chain),
        ("vanishing space", vanishing_soundness),
        ("augmentation normal form", augmentation),
        ("sphere combing", sphere_combing),
        ("linincl round trip", linincl_round_trip),
    ];
    let mut failures = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!(
                "criterion {:>2} {name}: PASS ({detail}) [{secs:.1}s]",
                k + 1
            ),
            Err(why) => {
                println!("criterion {:>2} {name}: FAIL ({why}) [{secs:.1}s]", k + 1);
                failures.push(k + 1);
            }
        }
    }
    if !failures.is_empty() {
        eprintln!("failing criteria: {failures:?}");
        std::process::exit(1);
    }
}
