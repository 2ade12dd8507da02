//! Horocycle, geodesic and time-changed flows on the two backends.
//!
//! A backend supplies the two flows `F_1` (horocycle) and `F_2` (geodesic)
//! as point maps satisfying `F_{2,-s} F_{1,t} F_{2,s} = F_{1,e(s) t}` with
//! `e(s) = e^s`. The time-changed flow of `f X_1` is
//! `F~_{1,t}(p) = F_{1,h(p,t)}(p)` where `dh/dt = f(F_{1,h}(p))`, `h(p,0) = 0`.

use std::fmt::Debug;
use std::sync::Arc;

use crate::calculus::TimeChange;
use crate::error::{Error, Result};
use crate::mobius::Orientation;
use crate::ode::DormandPrince;
use crate::planar_toy::PlanarPoint;
use crate::surface::{FuchsianGroup, PhasePoint};
use crate::GroupElement;

/// Largest horocycle displacement applied in one multiplication before
/// reducing.
pub const HOROCYCLE_CHUNK: f64 = 2.0;
/// Largest geodesic displacement applied in one multiplication before
/// reducing.
pub const GEODESIC_CHUNK: f64 = 2.0;
/// Admissible integrator tolerances.
pub const TOL_RANGE: (f64, f64) = (1e-12, 1e-6);
pub const DEFAULT_TOL: f64 = 1e-10;
/// Largest integrator step as a fraction of the smoothness scale of `f`.
/// Longer steps let the embedded error estimate cancel by accident.
pub const STEP_PER_SCALE: f64 = 0.25;

/// One of the two flows of a backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    /// `F_1`, generated by `X_1`.
    Horocycle,
    /// `F_2`, generated by `X_2`.
    Geodesic,
}

/// The pair of flows on a phase space.
pub trait FlowBackend: Send + Sync + 'static {
    type Point: Clone + Debug + Send + Sync + 'static;

    fn name(&self) -> &'static str;

    fn horocycle(&self, p: &Self::Point, t: f64) -> Result<Self::Point>;

    fn geodesic(&self, p: &Self::Point, s: f64) -> Result<Self::Point>;

    /// `e(s)` in `F_{2,-s} F_{1,t} F_{2,s} = F_{1,e(s) t}`.
    fn e(&self, s: f64) -> f64 {
        s.exp()
    }

    fn e_prime0(&self) -> f64 {
        1.0
    }

    /// Distance between two phase points, zero iff they agree.
    fn separation(&self, p: &Self::Point, q: &Self::Point) -> f64;

    /// Horocycle displacement beyond which an [`OrbitCursor`] re-anchors.
    fn anchor_span(&self) -> f64 {
        f64::INFINITY
    }

    fn flow(&self, which: Flow, p: &Self::Point, t: f64) -> Result<Self::Point> {
        match which {
            Flow::Horocycle => self.horocycle(p, t),
            Flow::Geodesic => self.geodesic(p, t),
        }
    }
}

/// Flows on `Gamma \ PSL(2,R)` by right translation, followed by reduction.
#[derive(Debug, Clone)]
pub struct HyperbolicBackend {
    pub group: Arc<FuchsianGroup>,
    pub orientation: Orientation,
}

impl HyperbolicBackend {
    pub fn new(group: Arc<FuchsianGroup>, orientation: Orientation) -> Self {
        Self { group, orientation }
    }

    fn translate<F>(&self, p: &PhasePoint, t: f64, chunk: f64, step: F) -> Result<PhasePoint>
    where
        F: Fn(f64) -> Result<GroupElement>,
    {
        if !t.is_finite() {
            return Err(Error::Range {
                what: "flow time",
                value: t,
                allowed: "finite",
            });
        }
        let pieces = (t.abs() / chunk).ceil().max(1.0) as usize;
        let dt = t / pieces as f64;
        let g = step(dt)?;
        let mut q = if p.reduced { *p } else { self.group.reduce(p)? };
        if t == 0.0 {
            return Ok(q);
        }
        for _ in 0..pieces {
            q = self.group.reduce(&PhasePoint::new(q.rep * g))?;
        }
        Ok(q)
    }
}

impl FlowBackend for HyperbolicBackend {
    type Point = PhasePoint;

    fn name(&self) -> &'static str {
        "bolza"
    }

    fn horocycle(&self, p: &PhasePoint, t: f64) -> Result<PhasePoint> {
        let o = self.orientation;
        self.translate(p, t, HOROCYCLE_CHUNK, |dt| Ok(GroupElement::horocycle_oriented(dt, o)))
    }

    fn geodesic(&self, p: &PhasePoint, s: f64) -> Result<PhasePoint> {
        let o = self.orientation;
        self.translate(p, s, GEODESIC_CHUNK, |ds| GroupElement::geodesic_oriented(ds, o))
    }

    /// Entrywise distance of `p^-1 q` from the identity, minimized over the
    /// representatives `gamma p` with `gamma` a generator or the identity.
    fn separation(&self, p: &PhasePoint, q: &PhasePoint) -> f64 {
        let id = GroupElement::identity();
        let direct = (p.rep.inverse() * q.rep).max_relative_diff(&id);
        self.group
            .generators()
            .iter()
            .map(|g| ((*g * p.rep).inverse() * q.rep).max_relative_diff(&id))
            .fold(direct, f64::min)
    }

    fn anchor_span(&self) -> f64 {
        HOROCYCLE_CHUNK
    }
}

/// Flows on the plane: `F_1(x, y) = (x + t, y)`, `F_2(x, y) = (e^{-s} x, e^s y)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlanarBackend;

impl FlowBackend for PlanarBackend {
    type Point = PlanarPoint;

    fn name(&self) -> &'static str {
        "planar"
    }

    fn horocycle(&self, p: &PlanarPoint, t: f64) -> Result<PlanarPoint> {
        crate::planar_toy::toy_horocycle(p, t)
    }

    fn geodesic(&self, p: &PlanarPoint, s: f64) -> Result<PlanarPoint> {
        crate::planar_toy::toy_geodesic(p, s)
    }

    fn separation(&self, p: &PlanarPoint, q: &PlanarPoint) -> f64 {
        (p.x - q.x).hypot(p.y - q.y)
    }
}

/// Evaluates `F_{1,t}(p)` for many nearby `t` by translating from a moving
/// anchor point instead of from `p`.
pub struct OrbitCursor<'a, B: FlowBackend> {
    backend: &'a B,
    anchor: B::Point,
    anchor_t: f64,
    span: f64,
}

impl<'a, B: FlowBackend> OrbitCursor<'a, B> {
    pub fn new(backend: &'a B, p: &B::Point) -> Self {
        Self {
            backend,
            anchor: p.clone(),
            anchor_t: 0.0,
            span: backend.anchor_span(),
        }
    }

    pub fn at(&mut self, t: f64) -> Result<B::Point> {
        if !t.is_finite() {
            return Err(Error::Range {
                what: "orbit time",
                value: t,
                allowed: "finite",
            });
        }
        while (t - self.anchor_t).abs() > self.span {
            let step = (t - self.anchor_t).clamp(-self.span, self.span);
            self.anchor = self.backend.horocycle(&self.anchor, step)?;
            self.anchor_t += step;
        }
        self.backend.horocycle(&self.anchor, t - self.anchor_t)
    }
}

/// Reparametrized time along the horocycle orbit of `p`.
#[derive(Debug, Clone)]
pub struct ReparamResult<P> {
    pub h: f64,
    pub endpoint: P,
    pub steps: usize,
    pub est_error: f64,
}

pub fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= TOL_RANGE.0 && tol <= TOL_RANGE.1) {
        return Err(Error::Range {
            what: "integrator tolerance",
            value: tol,
            allowed: "[1e-12, 1e-6]",
        });
    }
    Ok(())
}

fn speed<B: FlowBackend>(tc: &TimeChange<B>, cursor: &mut OrbitCursor<'_, B>, h: f64) -> Result<f64> {
    let q = cursor.at(h)?;
    let v = tc.f_at(&q);
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Precondition(format!(
            "time change is not positive along the orbit (f = {v} at h = {h})"
        )));
    }
    Ok(v)
}

fn integrator<B: FlowBackend>(tc: &TimeChange<B>, tol: f64) -> DormandPrince<f64> {
    let dp = DormandPrince::new(tol);
    let cap = STEP_PER_SCALE * tc.f.smoothness_scale;
    if cap.is_finite() {
        dp.with_max_step(cap)
    } else {
        dp
    }
}

/// Solves `dh/dt = f(F_{1,h}(p))`, `h(0) = 0`, up to time `t`.
pub fn reparam<B: FlowBackend>(tc: &TimeChange<B>, p: &B::Point, t: f64, tol: f64) -> Result<ReparamResult<B::Point>> {
    check_tol(tol)?;
    let backend = tc.backend();
    let mut cursor = OrbitCursor::new(backend, p);
    let sol = integrator(tc, tol).integrate(|_, h| speed(tc, &mut cursor, h), 0.0, 0.0, t)?;
    Ok(ReparamResult {
        h: sol.y,
        endpoint: backend.horocycle(p, sol.y)?,
        steps: sol.steps,
        est_error: sol.est_error,
    })
}

/// `F~_{1,t}(p)`.
pub fn time_changed_flow<B: FlowBackend>(tc: &TimeChange<B>, p: &B::Point, t: f64, tol: f64) -> Result<B::Point> {
    Ok(reparam(tc, p, t, tol)?.endpoint)
}

/// Integrates the reparametrization once and visits `F~_{1,t_k}(p)` for every
/// `t_k` in `times`, which must be monotone and start at or after zero in the
/// direction of integration. Intermediate values come from dense output.
pub fn time_changed_orbit<B, V>(
    tc: &TimeChange<B>,
    p: &B::Point,
    times: &[f64],
    tol: f64,
    mut visit: V,
) -> Result<usize>
where
    B: FlowBackend,
    V: FnMut(usize, &B::Point) -> Result<()>,
{
    check_tol(tol)?;
    let Some(&t_end) = times.last() else {
        return Ok(0);
    };
    let backend = tc.backend();
    let mut rhs_cursor = OrbitCursor::new(backend, p);
    let mut out_cursor = OrbitCursor::new(backend, p);
    let sol = integrator(tc, tol).integrate_dense(
        |_, h| speed(tc, &mut rhs_cursor, h),
        0.0,
        0.0,
        t_end,
        times,
        |k, _, h| {
            let q = out_cursor.at(h)?;
            visit(k, &q)
        },
    )?;
    Ok(sol.steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_bolza;

    #[test]
    fn cursor_matches_direct_flow() {
        let b = HyperbolicBackend::new(Arc::new(build_bolza().unwrap()), Orientation::Negative);
        let p = b.group.sample_one(1, 0);
        let mut c = OrbitCursor::new(&b, &p);
        for &t in &[0.5, 3.7, 9.2, -4.1, 12.0] {
            let q1 = c.at(t).unwrap();
            let q2 = b.horocycle(&p, t).unwrap();
            assert!(b.separation(&q1, &q2) < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let b = HyperbolicBackend::new(Arc::new(build_bolza().unwrap()), Orientation::Negative);
        let p = b.group.sample_one(3, 5);
        assert_eq!(b.horocycle(&p, 0.0).unwrap(), p);
        assert_eq!(b.geodesic(&p, 0.0).unwrap(), p);
    }

    #[test]
    fn tolerance_range_is_enforced() {
        assert!(check_tol(1e-13).is_err());
        assert!(check_tol(1e-5).is_err());
        assert!(check_tol(1e-10).is_ok());
    }
}
