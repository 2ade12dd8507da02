//! Adaptive Dormand-Prince 5(4) integrator for scalar ODEs `y' = F(t, y)`,
//! with the usual fourth-order continuous extension for dense output.
//!
//! Integration may run forward or backward in `t`; the direction is taken
//! from the sign of `t_end - t0`.

use crate::error::{Error, Result};
use crate::scalar::Real;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size controller settings.
#[derive(Debug, Clone, Copy)]
pub struct DormandPrince<T> {
    /// Absolute local error bound per step.
    pub tol: T,
    pub max_steps: usize,
    /// Largest step magnitude; `None` lets the controller decide.
    pub max_step: Option<T>,
}

/// Outcome of an integration.
#[derive(Debug, Clone, Copy)]
pub struct Solution<T> {
    pub t: T,
    pub y: T,
    pub steps: usize,
    pub rejected: usize,
    /// Sum of the accepted local error estimates.
    pub est_error: T,
}

impl<T: Real> DormandPrince<T> {
    pub fn new(tol: T) -> Self {
        Self {
            tol,
            max_steps: 10_000_000,
            max_step: None,
        }
    }

    pub fn with_max_step(mut self, h: T) -> Self {
        self.max_step = Some(h);
        self
    }

    /// Integrates from `(t0, y0)` to `t_end`.
    pub fn integrate<F>(&self, rhs: F, t0: T, y0: T, t_end: T) -> Result<Solution<T>>
    where
        F: FnMut(T, T) -> Result<T>,
    {
        self.integrate_dense(rhs, t0, y0, t_end, &[], |_, _, _| Ok(()))
    }

    /// Integrates from `(t0, y0)` to `t_end`, calling `observer(k, t_k, y(t_k))`
    /// for each output time in `grid` (which must be ordered in the integration
    /// direction and lie between `t0` and `t_end`). Values at interior grid
    /// points come from the continuous extension.
    pub fn integrate_dense<F, O>(
        &self,
        mut rhs: F,
        t0: T,
        y0: T,
        t_end: T,
        grid: &[T],
        mut observer: O,
    ) -> Result<Solution<T>>
    where
        F: FnMut(T, T) -> Result<T>,
        O: FnMut(usize, T, T) -> Result<()>,
    {
        let zero = T::zero();
        let span = t_end - t0;
        let dir = if span < zero { -T::one() } else { T::one() };
        let lit = T::lit;

        let mut next_out = 0usize;
        // grid points sitting exactly at t0
        while next_out < grid.len() && (grid[next_out] - t0) * dir <= zero {
            observer(next_out, grid[next_out], y0)?;
            next_out += 1;
        }

        let mut sol = Solution {
            t: t0,
            y: y0,
            steps: 0,
            rejected: 0,
            est_error: zero,
        };
        if span == zero {
            return Ok(sol);
        }

        let max_step = self.max_step.unwrap_or(span.abs());
        let mut k1 = rhs(t0, y0)?;
        // initial step from the usual two-norm heuristic
        let scale = self.tol;
        let d0 = y0.abs() / scale;
        let d1 = k1.abs() / scale;
        let mut h = if d0 < lit(1e-5) || d1 < lit(1e-5) {
            lit(1e-3)
        } else {
            lit(0.01) * d0 / d1
        };
        h = h.min(span.abs()).min(max_step).max(T::MIN_STEP * lit(10.0));

        let (mut t, mut y) = (t0, y0);
        while (t_end - t) * dir > zero {
            if sol.steps + sol.rejected >= self.max_steps {
                return Err(Error::Stiffness {
                    t: t.to_f64().unwrap_or(f64::NAN),
                    step: h.to_f64().unwrap_or(f64::NAN),
                });
            }
            let remaining = (t_end - t).abs();
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let hs = h * dir;

            let k2 = rhs(t + lit(C2) * hs, y + hs * lit(A21) * k1)?;
            let k3 = rhs(t + lit(C3) * hs, y + hs * (lit(A31) * k1 + lit(A32) * k2))?;
            let k4 = rhs(
                t + lit(C4) * hs,
                y + hs * (lit(A41) * k1 + lit(A42) * k2 + lit(A43) * k3),
            )?;
            let k5 = rhs(
                t + lit(C5) * hs,
                y + hs * (lit(A51) * k1 + lit(A52) * k2 + lit(A53) * k3 + lit(A54) * k4),
            )?;
            let k6 = rhs(
                t + hs,
                y + hs * (lit(A61) * k1 + lit(A62) * k2 + lit(A63) * k3 + lit(A64) * k4 + lit(A65) * k5),
            )?;
            let y_new = y + hs * (lit(A71) * k1 + lit(A73) * k3 + lit(A74) * k4 + lit(A75) * k5 + lit(A76) * k6);
            let t_new = if last { t_end } else { t + hs };
            let k7 = rhs(t_new, y_new)?;

            let err_abs =
                (hs * (lit(E1) * k1 + lit(E3) * k3 + lit(E4) * k4 + lit(E5) * k5 + lit(E6) * k6 + lit(E7) * k7)).abs();
            let err = err_abs / self.tol;

            if err <= T::one() {
                // dense output on the accepted step
                if next_out < grid.len() {
                    let ydiff = y_new - y;
                    let bspl = hs * k1 - ydiff;
                    let r4 = ydiff - hs * k7 - bspl;
                    let r5 =
                        hs * (lit(D1) * k1 + lit(D3) * k3 + lit(D4) * k4 + lit(D5) * k5 + lit(D6) * k6 + lit(D7) * k7);
                    while next_out < grid.len() && (grid[next_out] - t_new) * dir <= zero {
                        let tk = grid[next_out];
                        let th = (tk - t) / hs;
                        let th1 = T::one() - th;
                        let yk = if tk == t_new {
                            y_new
                        } else {
                            y + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)))
                        };
                        observer(next_out, tk, yk)?;
                        next_out += 1;
                    }
                }
                t = t_new;
                y = y_new;
                k1 = k7;
                sol.steps += 1;
                sol.est_error = sol.est_error + err_abs;
                let fac = if err == zero {
                    lit(5.0)
                } else {
                    (lit(0.9) * err.powf(lit(-0.2))).min(lit(5.0)).max(lit(0.2))
                };
                h = (h * fac).min(max_step);
            } else {
                sol.rejected += 1;
                h = h * (lit(0.9) * err.powf(lit(-0.2))).max(lit(0.1));
                if h < T::MIN_STEP {
                    return Err(Error::Stiffness {
                        t: t.to_f64().unwrap_or(f64::NAN),
                        step: h.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
        sol.t = t;
        sol.y = y;
        Ok(sol)
    }
}
