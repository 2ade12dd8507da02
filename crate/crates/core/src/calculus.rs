//! Pointwise operator calculus on phase-space fields.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{Flow, FlowBackend};
use crate::sampling::PhaseSampler;

type Evaluator<P> = Arc<dyn Fn(&P) -> Complex64 + Send + Sync>;

/// A complex-valued function on the phase space of some backend.
pub struct ScalarField<P> {
    eval: Evaluator<P>,
    /// Length over which the field varies appreciably; finite-difference
    /// steps are taken relative to it.
    pub smoothness_scale: f64,
    pub label: String,
}

impl<P> Clone for ScalarField<P> {
    fn clone(&self) -> Self {
        Self {
            eval: Arc::clone(&self.eval),
            smoothness_scale: self.smoothness_scale,
            label: self.label.clone(),
        }
    }
}

impl<P> fmt::Debug for ScalarField<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("smoothness_scale", &self.smoothness_scale)
            .finish()
    }
}

impl<P: 'static> ScalarField<P> {
    pub fn new<F>(label: impl Into<String>, smoothness_scale: f64, f: F) -> Self
    where
        F: Fn(&P) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            smoothness_scale,
            label: label.into(),
        }
    }

    pub fn real<F>(label: impl Into<String>, smoothness_scale: f64, f: F) -> Self
    where
        F: Fn(&P) -> f64 + Send + Sync + 'static,
    {
        Self::new(label, smoothness_scale, move |p| Complex64::new(f(p), 0.0))
    }

    pub fn constant(c: f64) -> Self {
        Self::real(format!("const({c})"), 1.0, move |_| c)
    }

    #[inline]
    pub fn eval(&self, p: &P) -> Complex64 {
        (self.eval)(p)
    }

    #[inline]
    pub fn eval_re(&self, p: &P) -> f64 {
        (self.eval)(p).re
    }

    /// `offset + amplitude * self`.
    pub fn affine(&self, offset: f64, amplitude: f64) -> Self {
        let inner = self.clone();
        Self::new(
            format!("{offset}+{amplitude}*{}", self.label),
            self.smoothness_scale,
            move |p| inner.eval(p) * amplitude + offset,
        )
    }

    /// Pointwise product.
    pub fn times(&self, other: &Self) -> Self {
        let (a, b) = (self.clone(), other.clone());
        Self::new(
            format!("({})*({})", self.label, other.label),
            self.smoothness_scale.min(other.smoothness_scale),
            move |p| a.eval(p) * b.eval(p),
        )
    }

    /// Pointwise `sqrt` of the real part, for positive fields.
    pub fn sqrt(&self) -> Self {
        let a = self.clone();
        Self::real(format!("sqrt({})", self.label), self.smoothness_scale, move |p| {
            a.eval_re(p).sqrt()
        })
    }
}

/// Fallible scalar function used for nested finite differences.
pub type FieldFn<'a, P> = dyn Fn(&P) -> Result<Complex64> + 'a;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Admissible finite-difference steps.
pub const STEP_RANGE: (f64, f64) = (1e-4, 1e-1);

/// Default finite-difference step for a field of the given smoothness scale.
pub fn default_step(scale: f64) -> f64 {
    (1e-2 * scale).clamp(STEP_RANGE.0, STEP_RANGE.1)
}

fn check_step(step: f64) -> Result<()> {
    if !(step >= STEP_RANGE.0 && step <= STEP_RANGE.1) {
        return Err(Error::Range {
            what: "finite-difference step",
            value: step,
            allowed: "[1e-4, 1e-1]",
        });
    }
    Ok(())
}

/// Fourth-order central difference of `u` along `flow` at `p`.
pub fn fd_along<B: FlowBackend>(
    backend: &B,
    flow: Flow,
    p: &B::Point,
    step: f64,
    u: &FieldFn<'_, B::Point>,
) -> Result<Complex64> {
    let at = |t: f64| backend.flow(flow, p, t).and_then(|q| u(&q));
    let (a, b, c, d) = (at(2.0 * step)?, at(step)?, at(-step)?, at(-2.0 * step)?);
    Ok((-a + 8.0 * b - 8.0 * c + d) / (12.0 * step))
}

/// `L_{X_j} phi (p)` by a fourth-order central difference with step `step`.
pub fn lie_derivative<B: FlowBackend>(
    backend: &B,
    flow: Flow,
    phi: &ScalarField<B::Point>,
    p: &B::Point,
    step: f64,
) -> Result<Complex64> {
    check_step(step)?;
    fd_along(backend, flow, p, step, &|q| Ok(phi.eval(q)))
}

/// `[iH_1, H_2] phi - e'(0) H_1 phi` with `H_j = i L_{X_j}`, by nested
/// differences; equals `-i ((L_1 L_2 - L_2 L_1) phi + e'(0) L_1 phi)`.
pub fn commutator_defect_h1h2<B: FlowBackend>(
    backend: &B,
    phi: &ScalarField<B::Point>,
    p: &B::Point,
    step: f64,
) -> Result<Complex64> {
    check_step(step)?;
    let u = |q: &B::Point| Ok(phi.eval(q));
    let l1 = |q: &B::Point| fd_along(backend, Flow::Horocycle, q, step, &u);
    let l2 = |q: &B::Point| fd_along(backend, Flow::Geodesic, q, step, &u);
    let l1l2 = fd_along(backend, Flow::Horocycle, p, step, &l2)?;
    let l2l1 = fd_along(backend, Flow::Geodesic, p, step, &l1)?;
    let l1p = l1(p)?;
    Ok(-I * ((l1l2 - l2l1) + backend.e_prime0() * l1p))
}

/// A positive time change `f` of the horocycle flow on a backend.
pub struct TimeChange<B: FlowBackend> {
    backend: Arc<B>,
    pub f: ScalarField<B::Point>,
    l1f: Option<ScalarField<B::Point>>,
    l2f: Option<ScalarField<B::Point>>,
    /// Step used for derivatives of `f` and for the operator calculus.
    pub fd_step: f64,
    /// Lower bound for `f` recorded by the checker.
    pub delta_f: Option<f64>,
    /// Lower bound for `g` recorded by the checker.
    pub delta_g: Option<f64>,
}

impl<B: FlowBackend> Clone for TimeChange<B> {
    fn clone(&self) -> Self {
        Self {
            backend: Arc::clone(&self.backend),
            f: self.f.clone(),
            l1f: self.l1f.clone(),
            l2f: self.l2f.clone(),
            fd_step: self.fd_step,
            delta_f: self.delta_f,
            delta_g: self.delta_g,
        }
    }
}

impl<B: FlowBackend> fmt::Debug for TimeChange<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeChange")
            .field("backend", &self.backend.name())
            .field("f", &self.f.label)
            .field("fd_step", &self.fd_step)
            .field("delta_f", &self.delta_f)
            .field("delta_g", &self.delta_g)
            .finish()
    }
}

impl<B: FlowBackend> TimeChange<B> {
    pub fn new(backend: Arc<B>, f: ScalarField<B::Point>) -> Self {
        let fd_step = default_step(f.smoothness_scale);
        Self {
            backend,
            f,
            l1f: None,
            l2f: None,
            fd_step,
            delta_f: None,
            delta_g: None,
        }
    }

    pub fn constant(backend: Arc<B>, c: f64) -> Self {
        let zero = ScalarField::constant(0.0);
        Self::new(backend, ScalarField::constant(c)).with_derivatives(zero.clone(), zero)
    }

    /// Supplies closed forms for `L_{X_1} f` and `L_{X_2} f`.
    pub fn with_derivatives(mut self, l1f: ScalarField<B::Point>, l2f: ScalarField<B::Point>) -> Self {
        self.l1f = Some(l1f);
        self.l2f = Some(l2f);
        self
    }

    pub fn with_step(mut self, step: f64) -> Result<Self> {
        check_step(step)?;
        self.fd_step = step;
        Ok(self)
    }

    pub fn with_bounds(mut self, report: &AssumptionReport) -> Self {
        self.delta_f = Some(report.delta_f);
        self.delta_g = Some(report.delta_g);
        self
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn backend_arc(&self) -> Arc<B> {
        Arc::clone(&self.backend)
    }

    pub fn e_prime0(&self) -> f64 {
        self.backend.e_prime0()
    }

    #[inline]
    pub fn f_at(&self, p: &B::Point) -> f64 {
        self.f.eval_re(p)
    }

    fn derivative(&self, flow: Flow, closed: &Option<ScalarField<B::Point>>, p: &B::Point) -> Result<f64> {
        match closed {
            Some(d) => Ok(d.eval_re(p)),
            None => Ok(fd_along(&*self.backend, flow, p, self.fd_step, &|q| Ok(self.f.eval(q)))?.re),
        }
    }

    pub fn l1f_at(&self, p: &B::Point) -> Result<f64> {
        self.derivative(Flow::Horocycle, &self.l1f, p)
    }

    pub fn l2f_at(&self, p: &B::Point) -> Result<f64> {
        self.derivative(Flow::Geodesic, &self.l2f, p)
    }

    /// `g = (e'(0) f + L_{X_2} f) / (2 f)`, the function with
    /// `[iH, H_2] = Hg + gH` under `U_j(t) phi = phi o F_{j,t} = e^{-itH_j} phi`.
    pub fn g_at(&self, p: &B::Point) -> Result<f64> {
        let f = self.f_at(p);
        Ok((self.e_prime0() * f + self.l2f_at(p)?) / (2.0 * f))
    }

    /// `(e'(0) f - L_{X_2} f) / (2 f)`, the same expression with the opposite
    /// sign on the derivative term. Reported alongside `g` for comparison.
    pub fn g_opposite_at(&self, p: &B::Point) -> Result<f64> {
        let f = self.f_at(p);
        Ok((self.e_prime0() * f - self.l2f_at(p)?) / (2.0 * f))
    }

    /// `g` as a field; evaluation failures become NaN.
    pub fn g_field(&self) -> ScalarField<B::Point> {
        let me = self.clone();
        ScalarField::real(format!("g[{}]", self.f.label), self.f.smoothness_scale, move |p| {
            me.g_at(p).unwrap_or(f64::NAN)
        })
    }

    /// `H u (p) = i f L_1 u + (i/2) (L_1 f) u` for a fallible `u`.
    pub fn h_apply(&self, p: &B::Point, u: &FieldFn<'_, B::Point>) -> Result<Complex64> {
        let l1u = fd_along(&*self.backend, Flow::Horocycle, p, self.fd_step, u)?;
        Ok(I * (self.f_at(p) * l1u + 0.5 * self.l1f_at(p)? * u(p)?))
    }

    /// `H u` computed literally as `f^{1/2} (i L_1) (f^{1/2} u)`.
    pub fn h_apply_literal(&self, p: &B::Point, u: &FieldFn<'_, B::Point>) -> Result<Complex64> {
        let inner = |q: &B::Point| Ok(self.f_at(q).sqrt() * u(q)?);
        let d = fd_along(&*self.backend, Flow::Horocycle, p, self.fd_step, &inner)?;
        Ok(self.f_at(p).sqrt() * I * d)
    }

    /// `H^2 u (p)` by nesting.
    pub fn h2_apply(&self, p: &B::Point, u: &FieldFn<'_, B::Point>) -> Result<Complex64> {
        self.h_apply(p, &|q| self.h_apply(q, u))
    }

    /// `H_s u = f_s^{1/2} e(s) H_1 f_s^{1/2} u` with `f_s = f o F_{2,s}`, the
    /// conjugate `U_2(s) H U_2(-s)`. Derivatives of `f_s` are taken along
    /// `F_1` directly.
    fn h_conj_apply(&self, s: f64, p: &B::Point, u: &FieldFn<'_, B::Point>) -> Result<Complex64> {
        let b = &*self.backend;
        let fs = |q: &B::Point| b.geodesic(q, s).map(|r| self.f.eval(&r));
        let f_p = fs(p)?.re;
        let l1fs = fd_along(b, Flow::Horocycle, p, self.fd_step, &fs)?.re;
        let l1u = fd_along(b, Flow::Horocycle, p, self.fd_step, u)?;
        Ok(I * b.e(s) * (f_p * l1u + 0.5 * l1fs * u(p)?))
    }
}

/// `H phi (p)` in product-rule form.
pub fn apply_h<B: FlowBackend>(phi: &ScalarField<B::Point>, tc: &TimeChange<B>, p: &B::Point) -> Result<Complex64> {
    tc.h_apply(p, &|q| Ok(phi.eval(q)))
}

/// Relative tolerance between the two forms of `H phi`.
pub const H_CROSS_CHECK_TOL: f64 = 1e-5;

/// `H phi (p)` in product-rule form, audited against the literal nesting.
pub fn apply_h_checked<B: FlowBackend>(
    phi: &ScalarField<B::Point>,
    tc: &TimeChange<B>,
    p: &B::Point,
) -> Result<Complex64> {
    let u = |q: &B::Point| Ok(phi.eval(q));
    let prod = tc.h_apply(p, &u)?;
    let lit = tc.h_apply_literal(p, &u)?;
    let l1u = fd_along(tc.backend(), Flow::Horocycle, p, tc.fd_step, &u)?;
    let size = (tc.f_at(p) * l1u).norm() + (0.5 * tc.l1f_at(p)? * phi.eval(p)).norm();
    let err = (prod - lit).norm();
    if err > H_CROSS_CHECK_TOL * size && err > 1e-12 {
        return Err(Error::NumericalDifferentiation(err / size.max(f64::MIN_POSITIVE)));
    }
    Ok(prod)
}

/// Both sides of `[iH^2, H_2] = H^2 g + 2HgH + gH^2` applied to `phi` at `p`.
///
/// `A` is the right-hand side by nested differences. `B` is the derivative at
/// `s = 0` of `(H_s)^2 phi (p)`, with `H_s = U_2(s) H U_2(-s)` built from
/// `f o F_{2,s}` and `e(s)`, taken with step `s_step`.
pub fn hsq_commutator<B: FlowBackend>(
    phi: &ScalarField<B::Point>,
    tc: &TimeChange<B>,
    p: &B::Point,
    s_step: f64,
) -> Result<(Complex64, Complex64)> {
    check_step(s_step)?;
    let u = |q: &B::Point| Ok(phi.eval(q));
    let gu = |q: &B::Point| Ok(tc.g_at(q)? * phi.eval(q));
    let hu = |q: &B::Point| tc.h_apply(q, &u);
    let ghu = |q: &B::Point| Ok(tc.g_at(q)? * hu(q)?);
    let a = tc.h2_apply(p, &gu)? + 2.0 * tc.h_apply(p, &ghu)? + tc.g_at(p)? * tc.h2_apply(p, &u)?;

    let q_of = |s: f64| -> Result<Complex64> { tc.h_conj_apply(s, p, &|q| tc.h_conj_apply(s, q, &u)) };
    let h = s_step;
    let b = (-q_of(2.0 * h)? + 8.0 * q_of(h)? - 8.0 * q_of(-h)? + q_of(-2.0 * h)?) / (12.0 * h);
    Ok((a, b))
}

/// Outcome of [`check_assumption`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub label: String,
    pub backend: String,
    pub samples: usize,
    pub seed: u64,
    pub min_f: f64,
    pub min_g: f64,
    pub min_g_opposite: f64,
    pub sup_f: f64,
    pub sup_l1f: f64,
    pub sup_l2f: f64,
    pub sup_l1l2f: f64,
    pub sup_l2l2f: f64,
    pub refined_min_f: f64,
    pub refined_min_g: f64,
    pub delta_f: f64,
    pub delta_g: f64,
    pub pass: bool,
}

impl AssumptionReport {
    /// Flat `key = value` text block.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("label", self.label.clone());
        kv("backend", self.backend.clone());
        kv("samples", self.samples.to_string());
        kv("seed", self.seed.to_string());
        for (k, v) in [
            ("min_f", self.min_f),
            ("min_g", self.min_g),
            ("min_g_opposite", self.min_g_opposite),
            ("sup_f", self.sup_f),
            ("sup_l1f", self.sup_l1f),
            ("sup_l2f", self.sup_l2f),
            ("sup_l1l2f", self.sup_l1l2f),
            ("sup_l2l2f", self.sup_l2l2f),
            ("refined_min_f", self.refined_min_f),
            ("refined_min_g", self.refined_min_g),
            ("delta_f", self.delta_f),
            ("delta_g", self.delta_g),
            ("margin_f", self.delta_f),
            ("margin_g", self.delta_g),
        ] {
            kv(k, format!("{v:.17e}"));
        }
        kv("verdict", if self.pass { "pass" } else { "fail" }.into());
        s
    }
}

#[derive(Debug, Clone, Copy)]
struct Extremes {
    min_f: (f64, u64),
    min_g: (f64, u64),
    min_g_opposite: f64,
    sup: [f64; 5],
}

impl Extremes {
    fn merge(a: Self, b: Self) -> Self {
        let lo = |x: (f64, u64), y: (f64, u64)| if y.0 < x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x };
        let mut sup = a.sup;
        for (s, t) in sup.iter_mut().zip(b.sup) {
            *s = s.max(t);
        }
        Self {
            min_f: lo(a.min_f, b.min_f),
            min_g: lo(a.min_g, b.min_g),
            min_g_opposite: a.min_g_opposite.min(b.min_g_opposite),
            sup,
        }
    }
}

/// Golden-section minimization of `h` on `[a, b]`.
fn golden_min<F: FnMut(f64) -> Result<f64>>(mut h: F, a: f64, b: f64, iters: usize) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (h(c)?, h(d)?);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = h(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = h(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Refines a minimum of `field` near `p` along `F_1` then `F_2`.
fn refine<B: FlowBackend>(
    backend: &B,
    p: &B::Point,
    radius: f64,
    field: &dyn Fn(&B::Point) -> Result<f64>,
) -> Result<f64> {
    let start = field(p)?;
    let (t, v1) = golden_min(|t| backend.horocycle(p, t).and_then(|q| field(&q)), -radius, radius, 50)?;
    let (q, best1) = if v1 < start {
        (backend.horocycle(p, t)?, v1)
    } else {
        (p.clone(), start)
    };
    let (_, v2) = golden_min(|s| backend.geodesic(&q, s).and_then(|r| field(&r)), -radius, radius, 50)?;
    Ok(start.min(best1).min(v2))
}

/// Samples `f`, `g` and the derivatives listed in the time-change assumption
/// over `n` points of `sampler`, then refines the worst points by
/// golden-section search along both flows.
pub fn check_assumption<B, S>(tc: &TimeChange<B>, sampler: &S, n: usize, seed: u64) -> Result<AssumptionReport>
where
    B: FlowBackend,
    S: PhaseSampler<B::Point>,
{
    if n < 1000 {
        return Err(Error::Precondition(format!(
            "check_assumption needs n >= 1000, got {n}"
        )));
    }
    let b = tc.backend();
    let h = tc.fd_step;
    let l2 = |q: &B::Point| Ok(Complex64::new(tc.l2f_at(q)?, 0.0));
    let per_sample = |k: u64| -> Result<Extremes> {
        let p = sampler.sample(seed, k).point;
        let f = tc.f_at(&p);
        let l1f = tc.l1f_at(&p)?;
        let l2f = tc.l2f_at(&p)?;
        let l1l2f = fd_along(b, Flow::Horocycle, &p, h, &l2)?.re;
        let l2l2f = fd_along(b, Flow::Geodesic, &p, h, &l2)?.re;
        let e = tc.e_prime0();
        Ok(Extremes {
            min_f: (f, k),
            min_g: ((e * f + l2f) / (2.0 * f), k),
            min_g_opposite: (e * f - l2f) / (2.0 * f),
            sup: [f.abs(), l1f.abs(), l2f.abs(), l1l2f.abs(), l2l2f.abs()],
        })
    };
    let ext = (0..n as u64)
        .into_par_iter()
        .map(per_sample)
        .try_reduce_with(|a, b| Ok(Extremes::merge(a, b)))
        .expect("n >= 1000")?;

    let radius = tc.f.smoothness_scale.max(0.1);
    let pf = sampler.sample(seed, ext.min_f.1).point;
    let pg = sampler.sample(seed, ext.min_g.1).point;
    let refined_f = refine(b, &pf, radius, &|q| Ok(tc.f_at(q)))?.min(ext.min_f.0);
    let refined_g = refine(b, &pg, radius, &|q| tc.g_at(q))?.min(ext.min_g.0);
    Ok(AssumptionReport {
        label: tc.f.label.clone(),
        backend: b.name().into(),
        samples: n,
        seed,
        min_f: ext.min_f.0,
        min_g: ext.min_g.0,
        min_g_opposite: ext.min_g_opposite,
        sup_f: ext.sup[0],
        sup_l1f: ext.sup[1],
        sup_l2f: ext.sup[2],
        sup_l1l2f: ext.sup[3],
        sup_l2l2f: ext.sup[4],
        refined_min_f: refined_f,
        refined_min_g: refined_g,
        delta_f: refined_f,
        delta_g: refined_g,
        pass: refined_f > 0.0 && refined_g > 0.0,
    })
}
