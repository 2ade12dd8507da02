//! Correlation functions of the time-changed flow and their spectral
//! diagnostics.
//!
//! For a field `phi` the correlation is `C(t) = E_nu[conj(phi(p)) phi(F~_{1,t} p)]`
//! with `nu = mu / f`. On a compact backend `nu` is normalized and sampled by
//! importance weights `1 / f`; on the plane the estimate is an unnormalized
//! integral against `dp / f`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::calculus::{ScalarField, TimeChange};
use crate::error::{Error, Result};
use crate::flows::{check_tol, time_changed_orbit, FlowBackend};
use crate::sampling::PhaseSampler;

/// Largest number of lags on each side.
pub const MAX_LAGS: f64 = 1e6;
/// Smallest admissible sample count.
pub const MIN_SAMPLES: usize = 1000;
/// Target number of work chunks in [`correlation`].
const CHUNKS: usize = 64;
/// Largest Hann sidelobe relative to the main lobe.
pub const HANN_SIDELOBE: f64 = 0.0267;
/// Largest rectangular-window sidelobe relative to the main lobe.
pub const RECT_SIDELOBE: f64 = 0.2172;

/// Lag window applied before transforming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Hann,
    None,
}

impl Window {
    /// Weight at `u = t / T`.
    pub fn weight(self, u: f64) -> f64 {
        if u.abs() > 1.0 {
            return 0.0;
        }
        match self {
            Window::Hann => 0.5 * (1.0 + (std::f64::consts::PI * u).cos()),
            Window::None => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Window::Hann => "hann",
            Window::None => "none",
        }
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hann" => Ok(Window::Hann),
            "none" => Ok(Window::None),
            other => Err(Error::Parse(format!("unknown window {other:?}"))),
        }
    }
}

/// Frequency grid `lambda_m = 2 pi m / (N dt)`, `m = -N/2 .. N/2 - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub dt: f64,
    pub n_fft: usize,
}

impl DensityGrid {
    /// Grid for a series with lags `-K..=K`, zero padded to twice the next
    /// power of two.
    pub fn for_lags(k_max: usize, dt: f64) -> Self {
        Self {
            dt,
            n_fft: (2 * k_max + 1).next_power_of_two() * 2,
        }
    }

    pub fn d_lambda(&self) -> f64 {
        std::f64::consts::TAU / (self.n_fft as f64 * self.dt)
    }

    pub fn freqs(&self) -> Vec<f64> {
        let n = self.n_fft as i64;
        let d = self.d_lambda();
        (-n / 2..n / 2).map(|m| m as f64 * d).collect()
    }
}

/// Estimated correlation function on the lag grid `t_k = k dt`, `|k| <= K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub dt: f64,
    pub k_max: usize,
    /// `C(t_k)` at index `k + K`.
    pub values: Vec<Complex64>,
    pub stderr: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub f_label: String,
    pub phi_label: String,
    pub backend: String,
    pub mean_subtracted: bool,
    /// `E_nu[phi]`; zero when `nu` is not a probability measure.
    pub mean: Complex64,
    pub warning: Option<String>,
}

impl CorrelationSeries {
    /// A series with known values and zero standard errors.
    pub fn synthetic<F: Fn(f64) -> Complex64>(dt: f64, k_max: usize, c: F) -> Self {
        let k = k_max as i64;
        Self {
            dt,
            k_max,
            values: (-k..=k).map(|j| c(j as f64 * dt)).collect(),
            stderr: vec![0.0; 2 * k_max + 1],
            n_samples: 0,
            seed: 0,
            f_label: String::new(),
            phi_label: "synthetic".into(),
            backend: "synthetic".into(),
            mean_subtracted: true,
            mean: Complex64::new(0.0, 0.0),
            warning: None,
        }
    }

    pub fn t_max(&self) -> f64 {
        self.k_max as f64 * self.dt
    }

    pub fn lag(&self, index: usize) -> f64 {
        (index as i64 - self.k_max as i64) as f64 * self.dt
    }

    /// `C(k dt)` for `|k| <= K`.
    pub fn at(&self, k: i64) -> Complex64 {
        self.values[(k + self.k_max as i64) as usize]
    }

    /// `max_k (|C(-t_k) - conj C(t_k)| - 3 stderr_k)`, clipped at zero, with
    /// `stderr_k` the larger of the two lags' errors. Unitarity of the flow
    /// makes this zero up to rounding.
    pub fn hermitian_excess(&self) -> f64 {
        let k = self.k_max as i64;
        (0..=k)
            .map(|j| {
                let d = (self.at(-j) - self.at(j).conj()).norm();
                let s = self.stderr[(k - j) as usize].max(self.stderr[(k + j) as usize]);
                (d - 3.0 * s).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// Subtracts `|m|^2` once.
    pub fn mean_subtract(&mut self) {
        if !self.mean_subtracted {
            let m2 = self.mean.norm_sqr();
            for v in &mut self.values {
                *v -= m2;
            }
            self.mean_subtracted = true;
        }
    }

    /// Columns `t, re, im, stderr`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,re,im,stderr\n");
        for (i, (v, e)) in self.values.iter().zip(&self.stderr).enumerate() {
            let _ = writeln!(s, "{:.17e},{:.17e},{:.17e},{:.17e}", self.lag(i), v.re, v.im, e);
        }
        s
    }

    /// Reads the columns written by [`Self::to_csv`]. Labels and sampling
    /// metadata are left empty.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("t,re,im,stderr") {
            return Err(Error::Parse("missing correlation CSV header".into()));
        }
        let mut ts = Vec::new();
        let mut values = Vec::new();
        let mut stderr = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", i + 2)))?;
            if cols.len() != 4 {
                return Err(Error::Parse(format!("row {}: expected 4 columns", i + 2)));
            }
            ts.push(cols[0]);
            values.push(Complex64::new(cols[1], cols[2]));
            stderr.push(cols[3]);
        }
        if ts.len() < 3 || ts.len() % 2 == 0 {
            return Err(Error::Parse("lag grid must be symmetric".into()));
        }
        let k_max = ts.len() / 2;
        let dt = ts[k_max + 1] - ts[k_max];
        Ok(Self {
            dt,
            k_max,
            values,
            stderr,
            n_samples: 0,
            seed: 0,
            f_label: String::new(),
            phi_label: String::new(),
            backend: String::new(),
            mean_subtracted: true,
            mean: Complex64::new(0.0, 0.0),
            warning: None,
        })
    }
}

/// Parameters of [`correlation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationConfig {
    pub t_max: f64,
    pub dt: f64,
    pub n: usize,
    pub seed: u64,
    pub tol: f64,
    pub mean_subtracted: bool,
}

#[derive(Clone)]
struct Acc {
    count: usize,
    sw: f64,
    sw2: f64,
    sw_phi: Complex64,
    swx: Vec<Complex64>,
    sw2x: Vec<Complex64>,
    sw2xx: Vec<f64>,
}

impl Acc {
    fn new(len: usize) -> Self {
        Self {
            count: 0,
            sw: 0.0,
            sw2: 0.0,
            sw_phi: Complex64::new(0.0, 0.0),
            swx: vec![Complex64::new(0.0, 0.0); len],
            sw2x: vec![Complex64::new(0.0, 0.0); len],
            sw2xx: vec![0.0; len],
        }
    }

    fn merge(mut self, other: &Self) -> Self {
        self.count += other.count;
        self.sw += other.sw;
        self.sw2 += other.sw2;
        self.sw_phi += other.sw_phi;
        for i in 0..self.swx.len() {
            self.swx[i] += other.swx[i];
            self.sw2x[i] += other.sw2x[i];
            self.sw2xx[i] += other.sw2xx[i];
        }
        self
    }
}

/// Fixed-shape pairwise reduction, independent of how the parts were
/// scheduled.
fn pairwise(mut parts: Vec<Acc>) -> Acc {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(&b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop().expect("at least one part")
}

/// Monte-Carlo estimate of the correlation function of `phi` along the flow
/// of `f X_1`. Each sample's orbit is integrated once forward and once
/// backward, with every lag read from dense output.
pub fn correlation<B, S>(
    phi: &ScalarField<B::Point>,
    tc: &TimeChange<B>,
    sampler: &S,
    cfg: &CorrelationConfig,
) -> Result<CorrelationSeries>
where
    B: FlowBackend,
    S: PhaseSampler<B::Point>,
{
    check_tol(cfg.tol)?;
    if !(cfg.dt > 0.0 && cfg.t_max > 0.0 && cfg.t_max.is_finite()) {
        return Err(Error::Range {
            what: "lag step",
            value: cfg.dt,
            allowed: "dt > 0 and 0 < T < infinity",
        });
    }
    let ratio = cfg.t_max / cfg.dt;
    if ratio > MAX_LAGS {
        return Err(Error::Range {
            what: "T / dt",
            value: ratio,
            allowed: "<= 1e6",
        });
    }
    if cfg.n < MIN_SAMPLES {
        return Err(Error::Precondition(format!(
            "correlation needs n >= {MIN_SAMPLES}, got {}",
            cfg.n
        )));
    }
    let k_max = ratio.round() as usize;
    let len = 2 * k_max + 1;
    let fwd: Vec<f64> = (0..=k_max).map(|k| k as f64 * cfg.dt).collect();
    let bwd: Vec<f64> = fwd.iter().map(|t| -t).collect();
    let chunk = cfg.n.div_ceil(CHUNKS);
    let chunks: Vec<(usize, usize)> = (0..cfg.n).step_by(chunk).map(|a| (a, (a + chunk).min(cfg.n))).collect();

    let run_chunk = |&(a, b): &(usize, usize)| -> Result<Acc> {
        let mut acc = Acc::new(len);
        let mut lag = vec![Complex64::new(0.0, 0.0); len];
        for i in a..b {
            let s = sampler.sample(cfg.seed, i as u64);
            let p = s.point;
            let w = s.weight / tc.f_at(&p);
            let phi0 = phi.eval(&p);
            acc.count += 1;
            acc.sw += w;
            acc.sw2 += w * w;
            acc.sw_phi += w * phi0;
            if phi0 == Complex64::new(0.0, 0.0) {
                continue;
            }
            let c0 = phi0.conj();
            time_changed_orbit(tc, &p, &fwd, cfg.tol, |k, q| {
                lag[k_max + k] = c0 * phi.eval(q);
                Ok(())
            })?;
            time_changed_orbit(tc, &p, &bwd, cfg.tol, |k, q| {
                lag[k_max - k] = c0 * phi.eval(q);
                Ok(())
            })?;
            for (j, x) in lag.iter().enumerate() {
                acc.swx[j] += w * x;
                acc.sw2x[j] += w * w * x;
                acc.sw2xx[j] += w * w * x.norm_sqr();
            }
        }
        Ok(acc)
    };
    let parts = chunks.par_iter().map(run_chunk).collect::<Result<Vec<_>>>()?;
    let acc = pairwise(parts);

    let n = acc.count as f64;
    let probability = sampler.is_probability();
    let mut values = Vec::with_capacity(len);
    let mut stderr = Vec::with_capacity(len);
    for j in 0..len {
        let (c, var) = if probability {
            let c = acc.swx[j] / acc.sw;
            let v = (acc.sw2xx[j] - 2.0 * (c.conj() * acc.sw2x[j]).re + c.norm_sqr() * acc.sw2) / (acc.sw * acc.sw);
            (c, v)
        } else {
            let c = acc.swx[j] / n;
            (c, (acc.sw2xx[j] / n - c.norm_sqr()) / n)
        };
        values.push(c);
        stderr.push(var.max(0.0).sqrt());
    }
    let mean = if probability {
        acc.sw_phi / acc.sw
    } else {
        Complex64::new(0.0, 0.0)
    };
    let c0 = values[k_max].norm();
    let worst = stderr.iter().cloned().fold(0.0, f64::max);
    let warning =
        (worst > c0).then(|| format!("insufficient samples: standard error {worst:.3e} exceeds |C(0)| = {c0:.3e}"));
    let mut series = CorrelationSeries {
        dt: cfg.dt,
        k_max,
        values,
        stderr,
        n_samples: cfg.n,
        seed: cfg.seed,
        f_label: tc.f.label.clone(),
        phi_label: phi.label.clone(),
        backend: tc.backend().name().into(),
        mean_subtracted: false,
        mean,
        warning,
    };
    if cfg.mean_subtracted {
        series.mean_subtract();
    }
    Ok(series)
}

/// Cesàro averages `(1/2T') sum |C(t_k)|^2 dt` over `|t_k| <= T'` at the
/// nested horizons `T/4, T/2, T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomScan {
    pub horizons: [f64; 3],
    pub values: [f64; 3],
    /// Expected contribution of Monte-Carlo noise to each value,
    /// `(1/2T') sum stderr_k^2 dt`.
    pub noise_floors: [f64; 3],
    /// Whether the values decrease strictly with the horizon.
    pub decreasing: bool,
}

impl AtomScan {
    pub fn value(&self) -> f64 {
        self.values[2]
    }

    pub fn noise_floor(&self) -> f64 {
        self.noise_floors[2]
    }
}

/// Time averages of `|C|^2`, which converge to the sum of squared atom
/// masses of the spectral measure. Uses the trapezoid rule on the lag grid.
pub fn atom_scan(series: &CorrelationSeries) -> Result<AtomScan> {
    if !series.mean_subtracted {
        return Err(Error::Precondition("atom scan needs a mean-subtracted series".into()));
    }
    let k = series.k_max;
    let horizon = |q: usize| -> (f64, f64, f64) {
        let kk = (k * q / 4).max(1);
        let t = kk as f64 * series.dt;
        let (mut s, mut e) = (0.0, 0.0);
        for j in (k - kk)..=(k + kk) {
            let w = if j == k - kk || j == k + kk { 0.5 } else { 1.0 };
            s += w * series.values[j].norm_sqr();
            e += w * series.stderr[j].powi(2);
        }
        (t, s * series.dt / (2.0 * t), e * series.dt / (2.0 * t))
    };
    let h = [horizon(1), horizon(2), horizon(4)];
    let values = [h[0].1, h[1].1, h[2].1];
    Ok(AtomScan {
        horizons: [h[0].0, h[1].0, h[2].0],
        values,
        noise_floors: [h[0].2, h[1].2, h[2].2],
        decreasing: values[0] > values[1] && values[1] > values[2],
    })
}

/// Windowed spectral density estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub freqs: Vec<f64>,
    pub density: Vec<f64>,
    pub window: Window,
    /// Window half-width `T`.
    pub half_width: f64,
    /// `sum density * d_lambda`.
    pub integral: f64,
    /// `max(0, -min density)`.
    pub negativity_deficit: f64,
}

impl SpectralDensity {
    pub fn from_parts(freqs: Vec<f64>, density: Vec<f64>, window: Window, half_width: f64) -> Self {
        let d = if freqs.len() > 1 { freqs[1] - freqs[0] } else { 0.0 };
        let integral = density.iter().sum::<f64>() * d;
        let negativity_deficit = density.iter().cloned().fold(0.0, |a: f64, v| a.max(-v));
        Self {
            freqs,
            density,
            window,
            half_width,
            integral,
            negativity_deficit,
        }
    }

    pub fn d_lambda(&self) -> f64 {
        self.freqs[1] - self.freqs[0]
    }

    /// `sum |rho - other| d_lambda / sum |other| d_lambda` on a shared grid.
    pub fn l1_relative(&self, other: &Self) -> Result<f64> {
        if self.freqs.len() != other.freqs.len() || (self.d_lambda() - other.d_lambda()).abs() > 1e-12 * self.d_lambda()
        {
            return Err(Error::Precondition("densities live on different grids".into()));
        }
        let num: f64 = self
            .density
            .iter()
            .zip(&other.density)
            .map(|(a, b)| (a - b).abs())
            .sum();
        let den: f64 = other.density.iter().map(|b| b.abs()).sum();
        Ok(num / den)
    }

    /// Columns `lambda, rho`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,rho\n");
        for (l, r) in self.freqs.iter().zip(&self.density) {
            let _ = writeln!(s, "{l:.17e},{r:.17e}");
        }
        s
    }

    /// Reads the columns written by [`Self::to_csv`].
    pub fn from_csv(text: &str, window: Window, half_width: f64) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("lambda,rho") {
            return Err(Error::Parse("missing density CSV header".into()));
        }
        let mut freqs = Vec::new();
        let mut density = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let mut it = line.split(',').map(|c| c.trim().parse::<f64>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(l)), Some(Ok(r)), None) => {
                    freqs.push(l);
                    density.push(r);
                }
                _ => return Err(Error::Parse(format!("row {}: expected two numbers", i + 2))),
            }
        }
        if freqs.len() < 2 {
            return Err(Error::Parse("density needs at least two rows".into()));
        }
        Ok(Self::from_parts(freqs, density, window, half_width))
    }
}

/// `rho(lambda_m) = (dt / 2pi) sum_k w(t_k / T) C(t_k) e^{i lambda_m t_k}` on
/// the grid [`DensityGrid::for_lags`]. With `C(t) = <phi, e^{-itH} phi>` this
/// is the smoothed spectral density of `phi`, and `sum rho d_lambda = C(0)`.
pub fn density(series: &CorrelationSeries, window: Window) -> Result<SpectralDensity> {
    if !series.mean_subtracted {
        return Err(Error::Precondition("density needs a mean-subtracted series".into()));
    }
    let grid = DensityGrid::for_lags(series.k_max, series.dt);
    let n = grid.n_fft;
    let t = series.t_max();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let k = series.k_max as i64;
    for j in -k..=k {
        let w = window.weight(j as f64 * series.dt / t);
        buf[j.rem_euclid(n as i64) as usize] = w * series.at(j);
    }
    FftPlanner::<f64>::new().plan_fft_inverse(n).process(&mut buf);
    let scale = series.dt / std::f64::consts::TAU;
    let density = (0..n).map(|m| scale * buf[(m + n / 2) % n].re).collect();
    Ok(SpectralDensity::from_parts(grid.freqs(), density, window, t))
}

/// Bound on the negativity of a density estimate: four times the sum of the
/// worst sidelobe leakage of the window applied to the total mass `|C(0)|`
/// and the absolute noise `(dt / 2pi) sum w_k stderr_k`.
pub fn deficit_bound(series: &CorrelationSeries, window: Window) -> f64 {
    let t = series.t_max();
    let (side, peak) = match window {
        Window::Hann => (HANN_SIDELOBE, t / std::f64::consts::TAU),
        Window::None => (RECT_SIDELOBE, t / std::f64::consts::PI),
    };
    let k = series.k_max as i64;
    let noise: f64 = (-k..=k)
        .map(|j| window.weight(j as f64 * series.dt / t) * series.stderr[(j + k) as usize])
        .sum::<f64>()
        * series.dt
        / std::f64::consts::TAU;
    4.0 * (side * peak * series.at(0).norm() + noise)
}

/// Descriptive fit of the correlation envelope on `|t| in [T/4, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayReport {
    Fit {
        /// Slope of `log |C|` against `|t|`.
        exp_slope: f64,
        exp_r2: f64,
        /// Slope of `log |C|` against `log |t|`.
        power_slope: f64,
        power_r2: f64,
        points: usize,
    },
    BelowNoiseFloor,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Minimum number of lags above the noise needed for a fit.
const MIN_FIT_POINTS: usize = 8;

/// Least-squares fits of the tail of `|C|`, averaged over `+t` and `-t`.
/// Lags where `|C|` does not exceed three standard errors are dropped.
pub fn decay_report(series: &CorrelationSeries) -> DecayReport {
    let k = series.k_max as i64;
    let (mut ts, mut ls) = (Vec::new(), Vec::new());
    for j in (k / 4).max(1)..=k {
        let a = 0.5 * (series.at(j).norm() + series.at(-j).norm());
        let e = series.stderr[(k + j) as usize].max(series.stderr[(k - j) as usize]);
        if a > 3.0 * e && a > 0.0 {
            ts.push(j as f64 * series.dt);
            ls.push(a.ln());
        }
    }
    if ts.len() < MIN_FIT_POINTS {
        return DecayReport::BelowNoiseFloor;
    }
    let (exp_slope, exp_r2) = least_squares(&ts, &ls);
    let logt: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let (power_slope, power_r2) = least_squares(&logt, &ls);
    DecayReport::Fit {
        exp_slope,
        exp_r2,
        power_slope,
        power_r2,
        points: ts.len(),
    }
}

/// Metadata written next to every CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub kind: String,
    pub backend: String,
    pub seed: u64,
    pub n: usize,
    pub f_label: String,
    pub phi_label: String,
    pub window: Option<Window>,
    pub half_width: f64,
    pub dt: f64,
    pub config_hash: String,
    #[serde(default)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl Sidecar {
    pub fn for_series(series: &CorrelationSeries, config_hash: &str) -> Self {
        Self {
            kind: "correlation".into(),
            backend: series.backend.clone(),
            seed: series.seed,
            n: series.n_samples,
            f_label: series.f_label.clone(),
            phi_label: series.phi_label.clone(),
            window: None,
            half_width: series.t_max(),
            dt: series.dt,
            config_hash: config_hash.into(),
            extra: Default::default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sidecar is plain data")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_is_a_pure_atom() {
        let s = CorrelationSeries::synthetic(0.1, 400, |_| Complex64::new(1.0, 0.0));
        let a = atom_scan(&s).unwrap();
        for v in a.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!(!a.decreasing);
    }

    #[test]
    fn zero_series_has_zero_density() {
        let s = CorrelationSeries::synthetic(0.1, 100, |_| Complex64::new(0.0, 0.0));
        let d = density(&s, Window::Hann).unwrap();
        assert!(d.density.iter().all(|&r| r == 0.0));
        assert_eq!(decay_report(&s), DecayReport::BelowNoiseFloor);
    }

    #[test]
    fn density_integrates_to_c0() {
        let s = CorrelationSeries::synthetic(0.05, 400, |t| Complex64::new((-t * t).exp() * 2.0, 0.0));
        for w in [Window::Hann, Window::None] {
            let d = density(&s, w).unwrap();
            assert!((d.integral - 2.0).abs() < 1e-12, "{}", d.integral);
        }
    }

    #[test]
    fn csv_round_trip() {
        let s = CorrelationSeries::synthetic(0.25, 8, |t| Complex64::new(t.cos(), -t.sin() / 3.0));
        let back = CorrelationSeries::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back.values, s.values);
        assert_eq!(back.k_max, 8);
        assert!((back.dt - 0.25).abs() < 1e-15);
    }

    #[test]
    fn unsubtracted_series_is_rejected() {
        let mut s = CorrelationSeries::synthetic(0.1, 10, |_| Complex64::new(1.0, 0.0));
        s.mean_subtracted = false;
        assert!(atom_scan(&s).is_err());
        assert!(density(&s, Window::Hann).is_err());
    }
}
