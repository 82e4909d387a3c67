//! Chart-level tangent computations: the pointed chart differential on
//! polynomial transitions, and a floating-point combing of the n-sphere by a
//! generalized field whose classical projection vanishes on a circle.

use std::f64::consts::PI;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{dim_check, Error, Result};
use crate::interval::{OpenBox, Ray1};
use crate::polyfun::{Poly, PolyFun};
use crate::prederiv::{pre_diff, PreDeriv};
use crate::rational::Q;

pub const UNIT_TOL: f64 = 1e-12;
pub const FD_STEP: f64 = 1e-5;
pub const DEFAULT_EPS: f64 = 0.1;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn scaled(x: &[f64], a: f64) -> Vec<f64> {
    x.iter().map(|v| v * a).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn in_disc(x: &[f64]) -> Result<f64> {
    let r = norm(x);
    if r.is_finite() && r < 1.0 {
        Ok(r)
    } else {
        Err(Error::OutsideDomain(format!("|x| = {r} is not below 1")))
    }
}

/// `sin(3π r/4)/r`, continuous at `r = 0`.
fn sinc_factor(r: f64) -> f64 {
    let a = 0.75 * PI;
    if r < 1e-8 {
        a * (1.0 - (a * r).powi(2) / 6.0)
    } else {
        (a * r).sin() / r
    }
}

fn sphere_map(x: &[f64], sign: f64) -> Result<Vec<f64>> {
    let r = in_disc(x)?;
    let mut p = scaled(x, sinc_factor(r));
    p.push(sign * (0.75 * PI * r).cos());
    Ok(p)
}

/// Chart of the sphere centred at the north pole.
pub fn map_n(x: &[f64]) -> Result<Vec<f64>> {
    sphere_map(x, 1.0)
}

/// Chart of the sphere centred at the south pole.
pub fn map_s(x: &[f64]) -> Result<Vec<f64>> {
    sphere_map(x, -1.0)
}

/// `(4/3 - |x|) x/|x|` on the annulus `1/3 < |x| < 1`.
pub fn transition_ns(x: &[f64]) -> Result<Vec<f64>> {
    let r = norm(x);
    if !(r > 1.0 / 3.0 && r < 1.0) {
        return Err(Error::OutsideDomain(format!(
            "|x| = {r} outside the annulus (1/3, 1)"
        )));
    }
    Ok(scaled(x, (4.0 / 3.0 - r) / r))
}

/// One cubic Hermite arc on `[x0, x1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
struct Arc {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    m0: f64,
    m1: f64,
}

impl Arc {
    fn basis(&self, r: f64) -> (f64, f64) {
        let h = self.x1 - self.x0;
        ((r - self.x0) / h, h)
    }

    fn value(&self, r: f64) -> f64 {
        let (t, h) = self.basis(r);
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.y0
            + (t3 - 2.0 * t2 + t) * h * self.m0
            + (-2.0 * t3 + 3.0 * t2) * self.y1
            + (t3 - t2) * h * self.m1
    }

    fn slope(&self, r: f64) -> f64 {
        let (t, h) = self.basis(r);
        let t2 = t * t;
        (6.0 * t2 - 6.0 * t) * self.y0 / h
            + (3.0 * t2 - 4.0 * t + 1.0) * self.m0
            + (-6.0 * t2 + 6.0 * t) * self.y1 / h
            + (3.0 * t2 - 2.0 * t) * self.m1
    }

    /// Minimum of the quadratic derivative over the arc.
    fn min_slope(&self) -> f64 {
        // slope(t) = a t^2 + b t + c in the normalized variable.
        let h = self.x1 - self.x0;
        let d = (self.y1 - self.y0) / h;
        let a = -6.0 * d + 3.0 * self.m0 + 3.0 * self.m1;
        let b = 6.0 * d - 4.0 * self.m0 - 2.0 * self.m1;
        let c = self.m0;
        let mut best = c.min(a + b + c);
        if a > 0.0 {
            let t = -b / (2.0 * a);
            if (0.0..=1.0).contains(&t) {
                best = best.min(a * t * t + b * t + c);
            }
        }
        best
    }
}

/// A C¹ increasing map: `r - 4/3` up to `1/3 + ε`, zero at `1/2`, the
/// identity from `2/3 - ε` on, two cubic Hermite arcs in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bridge {
    pub eps: f64,
    left: Arc,
    right: Arc,
}

impl Bridge {
    pub fn new(eps: f64) -> Result<Bridge> {
        if !(eps > 0.0 && eps < 1.0 / 6.0) {
            return Err(Error::Invalid(format!("ε = {eps} outside (0, 1/6)")));
        }
        let (a, b) = (1.0 / 3.0 + eps, 2.0 / 3.0 - eps);
        // Right-arc secant; never larger than the left one.
        let mid = b / (b - 0.5);
        let left = Arc {
            x0: a,
            x1: 0.5,
            y0: a - 4.0 / 3.0,
            y1: 0.0,
            m0: 1.0,
            m1: mid,
        };
        let right = Arc {
            x0: 0.5,
            x1: b,
            y0: 0.0,
            y1: b,
            m0: mid,
            m1: 1.0,
        };
        let br = Bridge { eps, left, right };
        if br.min_slope() <= 0.0 {
            return Err(Error::Invalid(format!("no monotone bridge for ε = {eps}")));
        }
        Ok(br)
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.left.x0 {
            r - 4.0 / 3.0
        } else if r <= 0.5 {
            self.left.value(r)
        } else if r < self.right.x1 {
            self.right.value(r)
        } else {
            r
        }
    }

    pub fn slope(&self, r: f64) -> f64 {
        if r <= self.left.x0 || r >= self.right.x1 {
            1.0
        } else if r <= 0.5 {
            self.left.slope(r)
        } else {
            self.right.slope(r)
        }
    }

    /// Lower bound of the derivative over the whole line.
    pub fn min_slope(&self) -> f64 {
        self.left.min_slope().min(self.right.min_slope()).min(1.0)
    }

    /// `β(|w|) w/|w|`.
    fn radial(&self, w: &[f64]) -> Vec<f64> {
        let r = norm(w);
        scaled(w, self.value(r) / r)
    }
}

fn e1(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    v
}

/// The core `t -> β̂(T(t e1 + T(y))) - β̂(y)` for `|y| >= 1/3 + ε`, where `T`
/// is the chart transition.
fn core(br: &Bridge, y: &[f64], t: f64) -> Result<Vec<f64>> {
    let mut v = transition_ns(y)?;
    v[0] += t;
    Ok(sub(&br.radial(&transition_ns(&v)?), &br.radial(y)))
}

/// Largest admissible sampling radius around `t = 0` for the core at `y`.
fn reach(y: &[f64]) -> f64 {
    let r = norm(y);
    (r - 1.0 / 3.0).min(1.0 - r)
}

fn is_constant_zone(br: &Bridge, y: &[f64]) -> bool {
    norm(y) < 1.0 / 3.0 + br.eps
}

fn central(br: &Bridge, y: &[f64], t: f64, h: f64) -> Result<Vec<f64>> {
    let (p, m) = (core(br, y, t + h)?, core(br, y, t - h)?);
    Ok(scaled(&sub(&p, &m), 0.5 / h))
}

/// Classical projection of the field at chart point `y`: the derivative of the
/// core at 0, by central differences with step `h`.
pub fn comb_classical(y: &[f64], br: &Bridge, h: f64) -> Result<Vec<f64>> {
    in_disc(y)?;
    if is_constant_zone(br, y) {
        return Ok(scaled(&e1(y.len()), -1.0));
    }
    central(br, y, 0.0, h.min(reach(y) / 4.0))
}

/// Largest difference-quotient magnitude of the core over `|t| <= 1e-3`.
pub fn comb_certificate(y: &[f64], br: &Bridge) -> Result<f64> {
    in_disc(y)?;
    if is_constant_zone(br, y) {
        return Ok(1.0);
    }
    let radius = 1e-3f64.min(reach(y) / 2.0);
    let h = FD_STEP.min(radius / 4.0);
    const SAMPLES: i32 = 8;
    let mut best: f64 = 0.0;
    for k in -SAMPLES..=SAMPLES {
        let t = radius * k as f64 / SAMPLES as f64 * 0.75;
        best = best.max(norm(&central(br, y, t, h)?));
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CombSample {
    pub y: Vec<f64>,
    pub proj: Vec<f64>,
    pub proj_norm: f64,
    pub certificate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CombReport {
    pub n: usize,
    pub grid: usize,
    pub eps: f64,
    pub samples: Vec<CombSample>,
    /// `|y|` at the grid point with the smallest classical projection.
    pub vanishing_radius: f64,
    pub min_projection: f64,
    pub min_certificate: f64,
    /// Largest `|y| - 1/2` offset among points with projection below `threshold`.
    pub threshold: f64,
    pub below_threshold_max_offset: Option<f64>,
}

impl CombReport {
    pub fn csv(&self) -> String {
        let n = self.n;
        let mut head: Vec<String> = (1..=n).map(|k| format!("y{k}")).collect();
        head.extend((1..=n).map(|k| format!("proj{k}")));
        head.push("projnorm".into());
        head.push("certificate".into());
        let mut out = head.join(",");
        out.push('\n');
        for s in &self.samples {
            let mut row: Vec<String> =
                s.y.iter()
                    .chain(&s.proj)
                    .map(|v| format!("{v:.9}"))
                    .collect();
            row.push(format!("{:.9e}", s.proj_norm));
            row.push(format!("{:.9e}", s.certificate));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "vanishing_radius={:.4} min_projection={:.3e} min_certificate={:.3e} points={}",
            self.vanishing_radius,
            self.min_projection,
            self.min_certificate,
            self.samples.len()
        )
    }
}

/// Samples the disc on a `grid x grid` lattice of cell centres in the plane
/// of the first two coordinates (the others are 0).
pub fn comb_sweep(n: usize, grid: usize, eps: f64) -> Result<CombReport> {
    if n < 2 || grid == 0 {
        return Err(Error::Invalid("need n >= 2 and a nonempty grid".into()));
    }
    let br = Bridge::new(eps)?;
    let g = grid as f64;
    let points: Vec<Vec<f64>> = (0..grid)
        .flat_map(|i| (0..grid).map(move |j| (i, j)))
        .map(|(i, j)| {
            let mut y = vec![0.0; n];
            y[0] = -1.0 + (2 * i + 1) as f64 / g;
            y[1] = -1.0 + (2 * j + 1) as f64 / g;
            y
        })
        .filter(|y| norm(y) < 1.0)
        .collect();
    let samples = points
        .into_par_iter()
        .map(|y| {
            let proj = comb_classical(&y, &br, FD_STEP)?;
            let certificate = comb_certificate(&y, &br)?;
            Ok(CombSample {
                proj_norm: norm(&proj),
                y,
                proj,
                certificate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let argmin = samples
        .iter()
        .min_by(|a, b| a.proj_norm.total_cmp(&b.proj_norm))
        .ok_or_else(|| Error::Invalid("empty sweep".into()))?;
    let threshold = 1e-4;
    let below_threshold_max_offset = samples
        .iter()
        .filter(|s| s.proj_norm < threshold)
        .map(|s| (norm(&s.y) - 0.5).abs())
        .reduce(f64::max);
    Ok(CombReport {
        n,
        grid,
        eps,
        vanishing_radius: norm(&argmin.y),
        min_projection: argmin.proj_norm,
        min_certificate: samples
            .iter()
            .map(|s| s.certificate)
            .fold(f64::INFINITY, f64::min),
        threshold,
        below_threshold_max_offset,
        samples,
    })
}

/// Smallest classical projection over `k` points of the radius-1/2 circle in
/// the first coordinate plane.
pub fn circle_minimum(n: usize, eps: f64, k: usize) -> Result<f64> {
    let br = Bridge::new(eps)?;
    (0..k)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / k as f64;
            let mut y = vec![0.0; n];
            y[0] = 0.5 * a.cos();
            y[1] = 0.5 * a.sin();
            comb_classical(&y, &br, FD_STEP).map(|p| norm(&p))
        })
        .try_fold(f64::INFINITY, |m, v| v.map(|v| m.min(v)))
}

fn shift_box(b: &OpenBox, p: &[Q]) -> Result<OpenBox> {
    let rays = b
        .factors()
        .iter()
        .zip(p)
        .map(|(r, c)| Ray1::from_bounds(r.lower().map(|a| a - c), r.upper().map(|a| a - c)))
        .collect::<Result<Vec<_>>>()?;
    Ok(OpenBox::new(rays))
}

/// `x -> f(x + p) - f(p)` on the translated domain.
pub fn localize(f: &PolyFun, p: &[Q]) -> Result<PolyFun> {
    dim_check(f.arity(), p.len())?;
    if !f.domain().contains(p)? {
        return Err(Error::OutsideDomain(format!(
            "base point not in {}",
            f.domain()
        )));
    }
    let m = p.len();
    let shift: Vec<Poly> = (0..m)
        .map(|k| Poly::var(m, k).add(&Poly::constant(m, p[k].clone())))
        .collect();
    let value = f.eval_at(p)?;
    let comps = f
        .components()
        .iter()
        .zip(value)
        .map(|(c, v)| c.substitute(&shift, m).sub(&Poly::constant(m, v)))
        .collect();
    PolyFun::new(shift_box(f.domain(), p)?, comps)
}

/// Fibre map of the chart transition `f` at base point `p`.
pub fn chart_differential(f: &PolyFun, p: &[Q], d: &PreDeriv) -> Result<PreDeriv> {
    pre_diff(&localize(f, p)?, d)
}

/// Chart differential at the origin.
pub fn chart_differential_at_origin(f: &PolyFun, d: &PreDeriv) -> Result<PreDeriv> {
    chart_differential(f, &vec![Q::zero(); f.arity()], d)
}
