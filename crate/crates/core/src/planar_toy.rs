//! An exactly solvable planar model.
//!
//! On `R^2` with Lebesgue measure take `X_1 = d/dx` and `X_2 = -x d/dx + y d/dy`,
//! so `F_{1,t}(x, y) = (x + t, y)` and `F_{2,s}(x, y) = (e^{-s} x, e^s y)`.
//! For a time change `f`, the coordinate `Y(x; y) = int_0^x du / f(u, y)`
//! straightens `f X_1` on each horizontal line, and `W phi = f^{1/2} phi(X(., y), y)`
//! is a unitary with `W H W^{-1} = i d/dY`. Everything here is built on that.

use std::sync::Arc;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::calculus::{ScalarField, TimeChange};
use crate::error::{Error, Result};
use crate::flows::PlanarBackend;
use crate::quadrature::{self, kronrod_nodes};
use crate::sampling::{stream_rng, PhaseSampler, Weighted};
use crate::spectral::{DensityGrid, SpectralDensity, Window};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Largest `|s|` accepted by [`toy_geodesic`].
pub const MAX_DILATION: f64 = 700.0;
/// Tolerance on the spline representation of `Y(x; y)`.
pub const RECTIFICATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

fn finite(p: &PlanarPoint, t: f64) -> Result<()> {
    for (what, v) in [("x", p.x), ("y", p.y), ("flow time", t)] {
        if !v.is_finite() {
            return Err(Error::Range {
                what,
                value: v,
                allowed: "finite",
            });
        }
    }
    Ok(())
}

/// `F_{1,t}(x, y) = (x + t, y)`.
pub fn toy_horocycle(p: &PlanarPoint, t: f64) -> Result<PlanarPoint> {
    finite(p, t)?;
    Ok(PlanarPoint::new(p.x + t, p.y))
}

/// `F_{2,s}(x, y) = (e^{-s} x, e^s y)`.
pub fn toy_geodesic(p: &PlanarPoint, s: f64) -> Result<PlanarPoint> {
    finite(p, s)?;
    if s.abs() > MAX_DILATION {
        return Err(Error::Range {
            what: "dilation time",
            value: s,
            allowed: "|s| <= 700",
        });
    }
    Ok(PlanarPoint::new((-s).exp() * p.x, s.exp() * p.y))
}

/// Gaussian proposal for integrals against Lebesgue measure. Weights are the
/// reciprocal proposal density, so this is not a probability sampler.
#[derive(Debug, Clone, Copy)]
pub struct GaussianSampler {
    pub center: (f64, f64),
    pub sigma: f64,
}

impl GaussianSampler {
    pub fn new(center: (f64, f64), sigma: f64) -> Self {
        Self { center, sigma }
    }
}

impl PhaseSampler<PlanarPoint> for GaussianSampler {
    fn sample(&self, seed: u64, index: u64) -> Weighted<PlanarPoint> {
        let mut rng = stream_rng(seed, index);
        let zx: f64 = StandardNormal.sample(&mut rng);
        let zy: f64 = StandardNormal.sample(&mut rng);
        let q = (-0.5 * (zx * zx + zy * zy)).exp() / (std::f64::consts::TAU * self.sigma * self.sigma);
        Weighted {
            point: PlanarPoint::new(self.center.0 + self.sigma * zx, self.center.1 + self.sigma * zy),
            weight: 1.0 / q,
        }
    }

    fn is_probability(&self) -> bool {
        false
    }
}

/// `f = 1 + a exp(-r^2 / (2 w^2))` with closed-form Lie derivatives.
pub fn planar_bump(amplitude: f64, width: f64) -> TimeChange<PlanarBackend> {
    let (a, w2) = (amplitude, width * width);
    let bump = move |p: &PlanarPoint| (-(p.x * p.x + p.y * p.y) / (2.0 * w2)).exp();
    let f = ScalarField::real(format!("1+{a}*bump(w={width})"), width, move |p| 1.0 + a * bump(p));
    let l1f = ScalarField::real("L1 f", width, move |p| -a * bump(p) * p.x / w2);
    let l2f = ScalarField::real("L2 f", width, move |p| a * bump(p) * (p.x * p.x - p.y * p.y) / w2);
    TimeChange::new(Arc::new(PlanarBackend), f).with_derivatives(l1f, l2f)
}

/// `f = 1` on the plane.
pub fn planar_flat() -> TimeChange<PlanarBackend> {
    TimeChange::constant(Arc::new(PlanarBackend), 1.0)
}

/// `exp(-|p - c|^2 / s^2)`.
pub fn gaussian_packet(center: (f64, f64), s: f64) -> ScalarField<PlanarPoint> {
    ScalarField::real(
        format!("gauss({},{};{s})", center.0, center.1),
        s,
        move |p: &PlanarPoint| {
            let (dx, dy) = (p.x - center.0, p.y - center.1);
            (-(dx * dx + dy * dy) / (s * s)).exp()
        },
    )
}

/// `((x - c_x) / s) exp(-|p - c|^2 / s^2)`.
pub fn hermite_packet(center: (f64, f64), s: f64) -> ScalarField<PlanarPoint> {
    ScalarField::real(
        format!("hermite({},{};{s})", center.0, center.1),
        s,
        move |p: &PlanarPoint| {
            let (dx, dy) = (p.x - center.0, p.y - center.1);
            dx / s * (-(dx * dx + dy * dy) / (s * s)).exp()
        },
    )
}

/// `f^{1/2} phi`. Its correlation under `dp / f` along the time-changed flow
/// is the correlation of `phi` under `e^{-itH}` in `L^2(dp)`.
pub fn pipeline_field(phi: &ScalarField<PlanarPoint>, tc: &TimeChange<PlanarBackend>) -> ScalarField<PlanarPoint> {
    phi.times(&tc.f.sqrt())
}

/// Box and resolution for slice computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceGrid {
    /// Fields are treated as zero outside `[-half_width, half_width]^2`.
    pub half_width: f64,
    /// Cell length of the `Y(x)` table.
    pub cell: f64,
    /// Width of the Gauss-Kronrod panels in `y`.
    pub panel: f64,
}

impl Default for SliceGrid {
    fn default() -> Self {
        Self {
            half_width: 8.0,
            cell: 0.02,
            panel: 0.5,
        }
    }
}

impl SliceGrid {
    /// Quadrature nodes and weights in `y`.
    pub fn y_nodes(&self) -> Vec<(f64, f64)> {
        panel_nodes(self.half_width, self.panel)
    }
}

fn panel_nodes(half_width: f64, panel: f64) -> Vec<(f64, f64)> {
    let panels = ((2.0 * half_width / panel).ceil() as usize).max(1);
    let h = 2.0 * half_width / panels as f64;
    (0..panels)
        .flat_map(|k| {
            let a = -half_width + k as f64 * h;
            kronrod_nodes(a, a + h)
        })
        .collect()
}

/// The rectifying coordinate `Y(x; y) = int_0^x du / f(u, y)` on one
/// horizontal line, tabulated as a cubic Hermite spline on `[-L, L]` and
/// extended linearly outside.
#[derive(Debug, Clone)]
pub struct SliceDiagonalization {
    pub y: f64,
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
    f: ScalarField<PlanarPoint>,
}

fn hermite(h: f64, y0: f64, y1: f64, d0: f64, d1: f64, s: f64) -> (f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dv = ((6.0 * s2 - 6.0 * s) * y0 + (6.0 * s - 6.0 * s2) * y1) / h
        + (3.0 * s2 - 4.0 * s + 1.0) * d0
        + (3.0 * s2 - 2.0 * s) * d1;
    (v, dv)
}

impl SliceDiagonalization {
    pub fn new(tc: &TimeChange<PlanarBackend>, y: f64, half_width: f64, cell: f64) -> Result<Self> {
        let n = (half_width / cell).ceil() as i64;
        let h = half_width / n as f64;
        let xs: Vec<f64> = (-n..=n).map(|k| k as f64 * h).collect();
        let inv = |x: f64| -> Result<f64> {
            let v = tc.f_at(&PlanarPoint::new(x, y));
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Precondition(format!("time change not positive at ({x}, {y})")));
            }
            Ok(1.0 / v)
        };
        let slopes = xs.iter().map(|&x| inv(x)).collect::<Result<Vec<_>>>()?;
        let mut ys = vec![0.0; xs.len()];
        let mid = n as usize;
        for k in mid..xs.len() - 1 {
            ys[k + 1] = ys[k] + quadrature::fixed(|x| 1.0 / tc.f_at(&PlanarPoint::new(x, y)), xs[k], xs[k + 1]);
        }
        for k in (1..=mid).rev() {
            ys[k - 1] = ys[k] - quadrature::fixed(|x| 1.0 / tc.f_at(&PlanarPoint::new(x, y)), xs[k - 1], xs[k]);
        }
        let me = Self {
            y,
            xs,
            ys,
            slopes,
            f: tc.f.clone(),
        };
        // the spline must reproduce Y at cell midpoints
        let mut worst: f64 = 0.0;
        for k in 0..me.xs.len() - 1 {
            let xm = 0.5 * (me.xs[k] + me.xs[k + 1]);
            worst = worst.max((me.y_of(xm) - me.y_exact(xm)).abs());
        }
        if worst > RECTIFICATION_TOL {
            return Err(Error::Resolution(format!(
                "rectifying spline error {worst:.3e} at y = {y}; refine the cell length"
            )));
        }
        Ok(me)
    }

    pub fn half_width(&self) -> f64 {
        *self.xs.last().expect("nonempty")
    }

    fn cell_of(&self, x: f64) -> usize {
        let n = self.xs.len() - 1;
        let h = self.xs[1] - self.xs[0];
        (((x - self.xs[0]) / h).floor().max(0.0) as usize).min(n - 1)
    }

    /// Spline value of `Y(x)`.
    pub fn y_of(&self, x: f64) -> f64 {
        let last = self.xs.len() - 1;
        if x <= self.xs[0] {
            return self.ys[0] + (x - self.xs[0]) * self.slopes[0];
        }
        if x >= self.xs[last] {
            return self.ys[last] + (x - self.xs[last]) * self.slopes[last];
        }
        let k = self.cell_of(x);
        let h = self.xs[k + 1] - self.xs[k];
        hermite(
            h,
            self.ys[k],
            self.ys[k + 1],
            self.slopes[k],
            self.slopes[k + 1],
            (x - self.xs[k]) / h,
        )
        .0
    }

    /// `Y(x)` by quadrature from the nearest table node to the left.
    pub fn y_exact(&self, x: f64) -> f64 {
        let last = self.xs.len() - 1;
        if x <= self.xs[0] || x >= self.xs[last] {
            return self.y_of(x);
        }
        let k = self.cell_of(x);
        let y = self.y;
        self.ys[k] + quadrature::fixed(|u| 1.0 / self.f.eval_re(&PlanarPoint::new(u, y)), self.xs[k], x)
    }

    /// Inverse of [`Self::y_of`].
    pub fn x_of(&self, target: f64) -> f64 {
        let last = self.xs.len() - 1;
        if target <= self.ys[0] {
            return self.xs[0] + (target - self.ys[0]) / self.slopes[0];
        }
        if target >= self.ys[last] {
            return self.xs[last] + (target - self.ys[last]) / self.slopes[last];
        }
        let k = self
            .ys
            .partition_point(|&v| v <= target)
            .saturating_sub(1)
            .min(last - 1);
        let h = self.xs[k + 1] - self.xs[k];
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut s = (target - self.ys[k]) / (self.ys[k + 1] - self.ys[k]);
        for _ in 0..60 {
            let (v, dv) = hermite(h, self.ys[k], self.ys[k + 1], self.slopes[k], self.slopes[k + 1], s);
            let r = v - target;
            if r > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let next = s - r / (dv * h);
            let next = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if (next - s).abs() < 1e-15 {
                s = next;
                break;
            }
            s = next;
        }
        self.xs[k] + s * h
    }

    /// Table nodes in `x`.
    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }
}

fn slices(tc: &TimeChange<PlanarBackend>, grid: &SliceGrid) -> Result<Vec<(f64, SliceDiagonalization)>> {
    grid.y_nodes()
        .into_par_iter()
        .map(|(y, w)| Ok((w, SliceDiagonalization::new(tc, y, grid.half_width, grid.cell)?)))
        .collect()
}

/// `W phi` on the uniform grid `Y_j = y0 + j dY`, `j < n`, centred on the
/// image of `[-L, L]`. Returns the samples and `y0`.
fn rectified_samples(
    phi: &ScalarField<PlanarPoint>,
    tc: &TimeChange<PlanarBackend>,
    slice: &SliceDiagonalization,
    d_y: f64,
    n: usize,
) -> Result<(Vec<Complex64>, f64)> {
    let l = slice.half_width();
    let (ya, yb) = (slice.y_of(-l), slice.y_of(l));
    if yb - ya > d_y * n as f64 {
        return Err(Error::Resolution(format!(
            "rectified window {:.3} exceeds the transform length {:.3}",
            yb - ya,
            d_y * n as f64
        )));
    }
    let y0 = 0.5 * (ya + yb) - 0.5 * d_y * n as f64;
    let out = (0..n)
        .map(|j| {
            let yy = y0 + j as f64 * d_y;
            if yy < ya || yy > yb {
                return Complex64::new(0.0, 0.0);
            }
            let p = PlanarPoint::new(slice.x_of(yy), slice.y);
            tc.f_at(&p).sqrt() * phi.eval(&p)
        })
        .collect();
    Ok((out, y0))
}

/// Spectral density of `phi` for `H` on `L^2(dp)`, on the frequency grid of
/// `grid`: `rho(lambda) = (1/2pi) int dy |int (W phi)(Y, y) e^{i lambda Y} dY|^2`.
pub fn exact_spectrum(
    phi: &ScalarField<PlanarPoint>,
    tc: &TimeChange<PlanarBackend>,
    grid: &DensityGrid,
    slice_grid: &SliceGrid,
) -> Result<SpectralDensity> {
    let n = grid.n_fft;
    let d_y = grid.dt;
    let slices = slices(tc, slice_grid)?;
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let parts = slices
        .par_iter()
        .map(|(w, s)| {
            let (mut buf, _) = rectified_samples(phi, tc, s, d_y, n)?;
            fft.process(&mut buf);
            Ok(buf.iter().map(|c| w * (d_y * c.norm()).powi(2)).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut acc = vec![0.0; n];
    for p in &parts {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    let density: Vec<f64> = (0..n).map(|m| acc[(m + n / 2) % n] / std::f64::consts::TAU).collect();
    Ok(SpectralDensity::from_parts(
        grid.freqs(),
        density,
        Window::None,
        f64::INFINITY,
    ))
}

/// Residuals of the resolvent identity on the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventReport {
    pub z_re: f64,
    pub z_im: f64,
    /// Largest `|(H + z) v - psi|` over the audit points.
    pub max_residual: f64,
    /// `||(H + z) v - psi|| / ||psi||` by quadrature.
    pub l2_relative_residual: f64,
    pub points: usize,
}

/// Solver for `(H + z) v = psi` built from the per-line closed form of
/// `(H_1 + z f^{-1})^{-1}`.
pub struct Resolvent<'a> {
    z: Complex64,
    psi: &'a ScalarField<PlanarPoint>,
    slice: SliceDiagonalization,
    /// `u` at the table nodes.
    nodes: Vec<Complex64>,
}

impl<'a> Resolvent<'a> {
    /// Prepares the solve on the line at height `y`.
    pub fn new(
        z: Complex64,
        psi: &'a ScalarField<PlanarPoint>,
        tc: &TimeChange<PlanarBackend>,
        y: f64,
        half_width: f64,
        cell: f64,
    ) -> Result<Self> {
        if z.im.abs() < 0.1 {
            return Err(Error::Range {
                what: "Im z",
                value: z.im,
                allowed: "|Im z| >= 0.1",
            });
        }
        let slice = SliceDiagonalization::new(tc, y, half_width, cell)?;
        let peak = slice
            .nodes()
            .iter()
            .map(|&x| psi.eval(&PlanarPoint::new(x, y)).norm())
            .fold(0.0, f64::max);
        let edge = [slice.nodes()[0], slice.half_width()]
            .iter()
            .map(|&x| psi.eval(&PlanarPoint::new(x, y)).norm())
            .fold(0.0, f64::max);
        if edge > 1e-10 * peak.max(f64::MIN_POSITIVE) && edge > 1e-300 {
            return Err(Error::Precondition(format!(
                "right-hand side does not decay at the boundary of the box (|psi| = {edge:.3e} at y = {y})"
            )));
        }
        let mut me = Self {
            z,
            psi,
            slice,
            nodes: Vec::new(),
        };
        let xs = me.slice.nodes().to_vec();
        let mut u = vec![Complex64::new(0.0, 0.0); xs.len()];
        if z.im > 0.0 {
            for k in 0..xs.len() - 1 {
                u[k + 1] = me.advance(u[k], xs[k], xs[k + 1]);
            }
        } else {
            for k in (1..xs.len()).rev() {
                u[k - 1] = me.advance(u[k], xs[k], xs[k - 1]);
            }
        }
        me.nodes = u;
        Ok(me)
    }

    fn psi_tilde(&self, x: f64) -> Complex64 {
        let p = PlanarPoint::new(x, self.slice.y);
        self.psi.eval(&p) / self.slice.f.eval_re(&p).sqrt()
    }

    /// Carries `u` from `a` to `b` within one table cell:
    /// `u(b) = u(a) e^{iz(Y(b)-Y(a))} - i sgn(b - a) int_a^b psi~ e^{iz(Y(b)-Y(x))} dx`.
    fn advance(&self, ua: Complex64, a: f64, b: f64) -> Complex64 {
        if a == b {
            return ua;
        }
        let yb = self.slice.y_exact(b);
        let ya = self.slice.y_exact(a);
        let z = self.z;
        // the orientation sign is carried by the limits of integration
        let integral = quadrature::fixed_complex(
            |x| self.psi_tilde(x) * (I * z * (yb - self.slice.y_exact(x))).exp(),
            a,
            b,
        );
        ua * (I * z * (yb - ya)).exp() - I * integral
    }

    /// `u = (H_1 + z f^{-1})^{-1} f^{-1/2} psi` at `x`.
    pub fn u(&self, x: f64) -> Complex64 {
        let xs = self.slice.nodes();
        let last = xs.len() - 1;
        if x <= xs[0] {
            return if self.z.im > 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                self.advance(self.nodes[0], xs[0], x)
            };
        }
        if x >= xs[last] {
            return if self.z.im > 0.0 {
                self.advance(self.nodes[last], xs[last], x)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        let k = self.slice.cell_of(x);
        if self.z.im > 0.0 {
            self.advance(self.nodes[k], xs[k], x)
        } else {
            self.advance(self.nodes[k + 1], xs[k + 1], x)
        }
    }

    /// `v = (H + z)^{-1} psi = f^{-1/2} u` at `x`.
    pub fn v(&self, x: f64) -> Complex64 {
        self.u(x) / self.slice.f.eval_re(&PlanarPoint::new(x, self.slice.y)).sqrt()
    }

    /// `(H + z) v - psi` at `x`, with `H v = i f^{1/2} (f^{1/2} v)'` and the
    /// derivative taken by a fourth-order central difference of `u`.
    pub fn residual(&self, x: f64, step: f64) -> Complex64 {
        let y = self.slice.y;
        let du = (-self.u(x + 2.0 * step) + 8.0 * self.u(x + step) - 8.0 * self.u(x - step) + self.u(x - 2.0 * step))
            / (12.0 * step);
        let f = self.slice.f.eval_re(&PlanarPoint::new(x, y));
        I * f.sqrt() * du + self.z * self.u(x) / f.sqrt() - self.psi.eval(&PlanarPoint::new(x, y))
    }
}

fn audit_nodes(grid: &SliceGrid) -> Vec<(f64, f64)> {
    panel_nodes(grid.half_width, 2.0 * grid.panel)
}

/// Solves `(H + z) v = psi` on each audit line and reports the residual of
/// `(H + z) v = psi` evaluated by finite differences.
pub fn resolvent_check(
    z: Complex64,
    psi: &ScalarField<PlanarPoint>,
    tc: &TimeChange<PlanarBackend>,
    grid: &SliceGrid,
) -> Result<ResolventReport> {
    let nodes = audit_nodes(grid);
    let step = 1e-3 * psi.smoothness_scale.min(tc.f.smoothness_scale);
    let rows = nodes
        .par_iter()
        .map(|&(y, wy)| {
            let r = Resolvent::new(z, psi, tc, y, grid.half_width, grid.cell)?;
            let mut acc = (0.0, 0.0, 0.0f64);
            for &(x, wx) in &nodes {
                let res = r.residual(x, step).norm();
                let p = psi.eval(&PlanarPoint::new(x, y)).norm();
                acc.0 += wx * wy * res * res;
                acc.1 += wx * wy * p * p;
                acc.2 = acc.2.max(res);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let (num, den, max) = rows
        .iter()
        .fold((0.0, 0.0, 0.0f64), |a, r| (a.0 + r.0, a.1 + r.1, a.2.max(r.2)));
    Ok(ResolventReport {
        z_re: z.re,
        z_im: z.im,
        max_residual: max,
        l2_relative_residual: (num / den).sqrt(),
        points: nodes.len() * nodes.len(),
    })
}

/// `||(H + z)^{-1} (H + z) psi - psi|| / ||psi||`, with `(H + z) psi` formed by
/// the finite-difference operator of the time change.
pub fn resolvent_round_trip(
    z: Complex64,
    psi: &ScalarField<PlanarPoint>,
    tc: &TimeChange<PlanarBackend>,
    grid: &SliceGrid,
) -> Result<f64> {
    let (p0, t0) = (psi.clone(), tc.clone());
    let rhs = ScalarField::new(format!("(H+z){}", psi.label), psi.smoothness_scale, move |p| {
        crate::calculus::apply_h(&p0, &t0, p)
            .map(|h| h + z * p0.eval(p))
            .unwrap_or(Complex64::new(f64::NAN, 0.0))
    });
    let nodes = audit_nodes(grid);
    let rows = nodes
        .par_iter()
        .map(|&(y, wy)| {
            let r = Resolvent::new(z, &rhs, tc, y, grid.half_width, grid.cell)?;
            let mut acc = (0.0, 0.0);
            for &(x, wx) in &nodes {
                let p = psi.eval(&PlanarPoint::new(x, y));
                acc.0 += wx * wy * (r.v(x) - p).norm_sqr();
                acc.1 += wx * wy * p.norm_sqr();
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let (num, den) = rows.iter().fold((0.0, 0.0), |a, r| (a.0 + r.0, a.1 + r.1));
    Ok((num / den).sqrt())
}

/// Outcome of [`mourre_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MourreReport {
    pub interval: (f64, f64),
    /// Width of the smoothing ramps at each end of the interval, in `lambda^2`.
    pub margin: f64,
    pub delta_g: f64,
    /// `a = 2 delta_g inf(J)`.
    pub a: f64,
    /// `||phi_J||^2`.
    pub norm_sq: f64,
    /// `<phi_J, (H^2 g + 2 H g H + g H^2) phi_J>`.
    pub q: f64,
    /// The `2 <H phi_J, g H phi_J>` part of `q`.
    pub kinetic: f64,
    pub slack: f64,
}

/// Transform settings for [`mourre_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MourreGrid {
    pub d_y: f64,
    pub n_fft: usize,
    pub slices: SliceGrid,
}

impl Default for MourreGrid {
    fn default() -> Self {
        Self {
            d_y: 0.05,
            n_fft: 1 << 14,
            slices: SliceGrid::default(),
        }
    }
}

/// Ramp from 0 at `u <= 0` to 1 at `u >= 1`, smooth at both ends.
fn ramp(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    0.5 * (1.0 - (std::f64::consts::PI * u).cos())
}

/// Smoothed indicator of `J = [a, b]`, supported inside `J`.
fn smoothed_indicator(l2: f64, a: f64, b: f64, eps: f64) -> f64 {
    ramp((l2 - a) / eps) * ramp((b - l2) / eps)
}

/// Builds `phi_J = chi_J(H^2) psi` in the rectified Fourier picture and
/// evaluates the commutator form `q` against `a ||phi_J||^2`.
pub fn mourre_check(
    interval: (f64, f64),
    psi: &ScalarField<PlanarPoint>,
    tc: &TimeChange<PlanarBackend>,
    grid: &MourreGrid,
) -> Result<MourreReport> {
    let (ja, jb) = interval;
    if !(ja > 0.0 && jb > ja && jb.is_finite()) {
        return Err(Error::Range {
            what: "spectral interval lower end",
            value: ja,
            allowed: "0 < inf J < sup J < infinity",
        });
    }
    let delta_g = match tc.delta_g {
        Some(d) if d > 0.0 => d,
        other => {
            return Err(Error::Precondition(format!(
                "time change needs a positive checked delta_g, got {other:?}"
            )))
        }
    };
    let eps = 1e-3 * (jb - ja);
    let n = grid.n_fft;
    let d_y = grid.d_y;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let k_of = |m: usize| {
        let mm = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
        std::f64::consts::TAU * mm / (n as f64 * d_y)
    };
    let slices = slices(tc, &grid.slices)?;
    let parts = slices
        .par_iter()
        .map(|(w, s)| -> Result<(f64, f64, f64)> {
            let (mut buf, y0) = rectified_samples(psi, tc, s, d_y, n)?;
            fwd.process(&mut buf);
            for (m, c) in buf.iter_mut().enumerate() {
                let k = k_of(m);
                *c *= smoothed_indicator(k * k, ja, jb, eps) / n as f64;
            }
            // H acts as i d/dY, which multiplies e^{ikY} by -k
            let mut h1: Vec<Complex64> = buf.iter().enumerate().map(|(m, c)| -k_of(m) * c).collect();
            let mut h2: Vec<Complex64> = buf.iter().enumerate().map(|(m, c)| k_of(m).powi(2) * c).collect();
            inv.process(&mut buf);
            inv.process(&mut h1);
            inv.process(&mut h2);
            let (mut q, mut kin, mut nrm) = (0.0, 0.0, 0.0);
            for j in 0..n {
                let p = PlanarPoint::new(s.x_of(y0 + j as f64 * d_y), s.y);
                let g = tc.g_at(&p)?;
                let k2 = 2.0 * g * h1[j].norm_sqr();
                q += g * 2.0 * (h2[j].conj() * buf[j]).re + k2;
                kin += k2;
                nrm += buf[j].norm_sqr();
            }
            Ok((w * q * d_y, w * kin * d_y, w * nrm * d_y))
        })
        .collect::<Result<Vec<_>>>()?;
    let (q, kinetic, norm_sq) = parts
        .iter()
        .fold((0.0, 0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1, a.2 + p.2));
    if norm_sq.sqrt() < 1e-8 {
        return Err(Error::EmptyProjection(norm_sq.sqrt()));
    }
    let a = 2.0 * delta_g * ja;
    Ok(MourreReport {
        interval,
        margin: eps,
        delta_g,
        a,
        norm_sq,
        q,
        kinetic,
        slack: q - a * norm_sq,
    })
}
