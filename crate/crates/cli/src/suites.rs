//! Invariant suites run by `horoflow verify`. Every check reports its measured
//! value next to the limit it is held to.

use std::f64::consts::PI;
use std::fmt::Write as _;

use anyhow::Result;
use horoflow::calculus::{apply_h_checked, commutator_defect_h1h2, hsq_commutator, ScalarField, TimeChange};
use horoflow::flows::{reparam, FlowBackend, HyperbolicBackend, PlanarBackend};
use horoflow::planar_toy::{GaussianSampler, PlanarPoint};
use horoflow::quadrature;
use horoflow::sampling::{stream_rng, PhaseSampler};
use horoflow::surface::{FuchsianGroup, PhasePoint, GENERATOR_COUNT};
use horoflow::{GroupElement, HPoint};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl Check {
    pub fn at_most(suite: &str, name: &str, value: f64, limit: f64) -> Self {
        Self {
            suite: suite.into(),
            name: name.into(),
            value,
            limit,
            bound: Bound::AtMost,
            pass: value <= limit,
        }
    }

    pub fn at_least(suite: &str, name: &str, value: f64, limit: f64) -> Self {
        Self {
            suite: suite.into(),
            name: name.into(),
            value,
            limit,
            bound: Bound::AtLeast,
            pass: value >= limit,
        }
    }

    /// A yes/no property, recorded as 1 or 0 against a limit of 1.
    pub fn holds(suite: &str, name: &str, ok: bool) -> Self {
        Self::at_least(suite, name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    pub fn failed(suite: &str, name: &str) -> Self {
        Self::at_most(suite, name, f64::INFINITY, 0.0)
    }
}

pub fn checks_csv(checks: &[Check]) -> String {
    let mut s = String::from("suite,check,value,limit,bound,pass\n");
    for c in checks {
        let bound = match c.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        let _ = writeln!(
            s,
            "{},{},{:.6e},{:.6e},{},{}",
            c.suite, c.name, c.value, c.limit, bound, c.pass
        );
    }
    s
}

pub fn checks_table(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let bound = match c.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        let _ = writeln!(
            s,
            "{:<5} {:<10} {:<36} {:>12.4e} {} {:<10.3e}",
            if c.pass { "ok" } else { "FAIL" },
            c.suite,
            c.name,
            c.value,
            bound,
            c.limit
        );
    }
    s
}

fn max_of(v: impl ParallelIterator<Item = f64>) -> f64 {
    // NaN propagates as a failure instead of being ignored by max
    v.reduce(
        || 0.0,
        |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) },
    )
}

fn nan_as_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

/// Exact conjugation and one-parameter laws in PSL(2,R) for `|s|, |t| <= 5`.
pub fn mobius_suite(points: usize, seed: u64) -> Vec<Check> {
    let conj = max_of((0..points as u64).into_par_iter().map(|k| {
        let mut rng = stream_rng(seed, k);
        let s = rng.random_range(-5.0..=5.0);
        let t = rng.random_range(-5.0..=5.0);
        let a = GroupElement::geodesic(s).expect("|s| <= 5");
        let lhs = a * GroupElement::horocycle(t) * a.inverse();
        lhs.max_relative_diff(&GroupElement::horocycle(s.exp() * t))
    }));
    let laws = max_of((0..points as u64).into_par_iter().map(|k| {
        let mut rng = stream_rng(seed ^ 0x5eed, k);
        let s = rng.random_range(-5.0..=5.0);
        let s2 = rng.random_range(-5.0..=5.0);
        let a = GroupElement::geodesic(s).unwrap() * GroupElement::geodesic(s2).unwrap();
        let n = GroupElement::horocycle(s) * GroupElement::horocycle(s2);
        a.max_relative_diff(&GroupElement::geodesic(s + s2).unwrap())
            .max(n.max_relative_diff(&GroupElement::horocycle(s + s2)))
    }));
    vec![
        Check::at_most("mobius", "conjugation_law", nan_as_inf(conj), 1e-12),
        Check::at_most("mobius", "one_parameter_laws", nan_as_inf(laws), 1e-12),
    ]
}

/// A group element whose base point lies within distance 3 of `i`, moved by
/// a random word of up to `letters` generators.
fn random_element(group: &FuchsianGroup, seed: u64, index: u64, letters: usize) -> GroupElement {
    let mut rng = stream_rng(seed, index);
    let r = (1.0 + rng.random::<f64>() * (3.0f64.cosh() - 1.0)).acosh();
    let theta = rng.random::<f64>() * 2.0 * PI;
    let rho = (0.5 * r).tanh();
    let z = HPoint::from_disk(rho * theta.cos(), rho * theta.sin()).expect("inside the disk");
    let mut e = GroupElement::translate_i_to(&z) * GroupElement::rotation(rng.random::<f64>() * 2.0 * PI);
    for _ in 0..rng.random_range(0..=letters) {
        e = group.generator(rng.random_range(0..GENERATOR_COUNT)) * e;
    }
    e
}

/// Group relation, and idempotence and coset invariance of the reduction.
pub fn surface_suite(group: &FuchsianGroup, points: usize, seed: u64) -> Vec<Check> {
    let rel = group.relation_error(group.relation_word());
    let idem = (0..points as u64).into_par_iter().all(|k| {
        let p = PhasePoint::new(random_element(group, seed, k, 5));
        match group.reduce(&p) {
            Ok(r) => group
                .reduce(&PhasePoint::new(r.rep))
                .map(|rr| rr.rep == r.rep)
                .unwrap_or(false),
            Err(_) => false,
        }
    });
    let radius = group.circumradius();
    let outside = max_of((0..points as u64).into_par_iter().map(|k| {
        let p = PhasePoint::new(random_element(group, seed ^ 1, k, 5));
        match group.reduce(&p) {
            Ok(r) => (r.base().distance(&HPoint::i()) - radius).max(0.0),
            Err(_) => f64::NAN,
        }
    }));
    let coset = max_of((0..points as u64).into_par_iter().map(|k| {
        let p = group.sample_one(seed ^ 2, k);
        let gamma = group.generator(stream_rng(seed ^ 3, k).random_range(0..GENERATOR_COUNT));
        match (group.reduce(&p), group.reduce(&PhasePoint::new(gamma * p.rep))) {
            (Ok(a), Ok(b)) => a.base().distance(&b.base()),
            _ => f64::NAN,
        }
    }));
    vec![
        Check::at_most("surface", "relation_word", nan_as_inf(rel), 1e-10),
        Check::holds("surface", "reduce_idempotent", idem),
        Check::at_most("surface", "reduce_coset_invariant", nan_as_inf(coset), 1e-10),
        Check::at_most("surface", "reduced_within_circumradius", nan_as_inf(outside), 1e-9),
    ]
}

/// `int_0^h ds / f(F_{1,s} p)`, by adaptive quadrature on unit panels.
pub fn inverse_time<B: FlowBackend>(tc: &TimeChange<B>, p: &B::Point, h: f64) -> Result<f64> {
    let b = tc.backend();
    let pieces = h.abs().ceil().max(1.0) as usize;
    let mut total = 0.0;
    for k in 0..pieces {
        let a = h * k as f64 / pieces as f64;
        let c = h * (k + 1) as f64 / pieces as f64;
        total += quadrature::integrate(|s| Ok(1.0 / tc.f_at(&b.horocycle(p, s)?)), a, c, 1e-13)?;
    }
    Ok(total)
}

/// Quadrature identity and cocycle of the reparametrization for `|t|, |s| <= 20`.
fn time_change_checks<B, S>(
    label: &str,
    tc: &TimeChange<B>,
    sampler: &S,
    cases: usize,
    seed: u64,
    tol: f64,
) -> Vec<Check>
where
    B: FlowBackend,
    S: PhaseSampler<B::Point>,
{
    let rows: Vec<(f64, f64)> = (0..cases as u64)
        .into_par_iter()
        .map(|k| {
            let p = sampler.sample(seed, k).point;
            let mut rng = stream_rng(seed ^ 0x71, k);
            let t = rng.random_range(-20.0..=20.0);
            let s = rng.random_range(-20.0..=20.0);
            let run = || -> Result<(f64, f64)> {
                let first = reparam(tc, &p, t, tol)?;
                let quad = (inverse_time(tc, &p, first.h)? - t).abs();
                let whole = reparam(tc, &p, t + s, tol)?;
                let second = reparam(tc, &first.endpoint, s, tol)?;
                Ok((quad, (whole.h - first.h - second.h).abs()))
            };
            run().unwrap_or((f64::NAN, f64::NAN))
        })
        .collect();
    let quad = rows
        .iter()
        .fold(0.0f64, |m, r| if r.0.is_nan() { f64::INFINITY } else { m.max(r.0) });
    let coc = rows
        .iter()
        .fold(0.0f64, |m, r| if r.1.is_nan() { f64::INFINITY } else { m.max(r.1) });
    vec![
        Check::at_most("flows", &format!("{label}_quadrature_identity"), quad, 10.0 * tol),
        Check::at_most("flows", &format!("{label}_cocycle"), coc, 1e-8),
    ]
}

pub struct FlowSuiteInput<'a, SB, SP> {
    pub bolza: &'a TimeChange<HyperbolicBackend>,
    pub bolza_sampler: &'a SB,
    pub planar: &'a TimeChange<PlanarBackend>,
    pub planar_sampler: &'a SP,
    /// Samples for the conjugation and group laws.
    pub conjugation_cases: usize,
    /// Samples for the time-change identities.
    pub cases: usize,
    pub seed: u64,
    pub tol: f64,
}

/// Flow-level conjugation (`|s|, |t| <= 3`) and group law on Bolza, and the
/// time-change identities on both backends.
pub fn flows_suite<SB, SP>(input: &FlowSuiteInput<'_, SB, SP>) -> Vec<Check>
where
    SB: PhaseSampler<PhasePoint>,
    SP: PhaseSampler<PlanarPoint>,
{
    let b = input.bolza.backend();
    let seed = input.seed;
    let conj = max_of((0..input.conjugation_cases as u64).into_par_iter().map(|k| {
        let p = input.bolza_sampler.sample(seed ^ 0x11, k).point;
        let mut rng = stream_rng(seed ^ 0x12, k);
        let s = rng.random_range(-3.0..=3.0);
        let t = rng.random_range(-3.0..=3.0);
        let run = || -> horoflow::Result<f64> {
            let lhs = b.geodesic(&b.horocycle(&b.geodesic(&p, s)?, t)?, -s)?;
            let rhs = b.horocycle(&p, b.e(s) * t)?;
            Ok(b.separation(&lhs, &rhs))
        };
        run().unwrap_or(f64::NAN)
    }));
    let law = max_of((0..input.conjugation_cases as u64).into_par_iter().map(|k| {
        let p = input.bolza_sampler.sample(seed ^ 0x13, k).point;
        let mut rng = stream_rng(seed ^ 0x14, k);
        let t = rng.random_range(-20.0..=20.0);
        let t2 = rng.random_range(-20.0..=20.0);
        let run = || -> horoflow::Result<f64> {
            let a = b.horocycle(&b.horocycle(&p, t)?, t2)?;
            let c = b.horocycle(&p, t + t2)?;
            Ok(b.separation(&a, &c))
        };
        run().unwrap_or(f64::NAN)
    }));
    let mut out = vec![
        Check::at_most("flows", "bolza_flow_conjugation", nan_as_inf(conj), 1e-9),
        Check::at_most("flows", "bolza_horocycle_group_law", nan_as_inf(law), 1e-10),
    ];
    out.extend(time_change_checks(
        "bolza",
        input.bolza,
        input.bolza_sampler,
        input.cases,
        seed,
        input.tol,
    ));
    out.extend(time_change_checks(
        "planar",
        input.planar,
        input.planar_sampler,
        input.cases,
        seed,
        input.tol,
    ));
    out
}

/// Largest commutator defect over `n` sampled points at step `h`, and the sum
/// of the defects at `2h` over the sum at `h`.
fn defect_and_ratio<B, S>(
    backend: &B,
    phi: &ScalarField<B::Point>,
    sampler: &S,
    n: usize,
    seed: u64,
    h: f64,
) -> (f64, f64)
where
    B: FlowBackend,
    S: PhaseSampler<B::Point>,
{
    let rows: Vec<(f64, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let p = sampler.sample(seed, k).point;
            let d1 = commutator_defect_h1h2(backend, phi, &p, h).map(|c| c.norm());
            let d2 = commutator_defect_h1h2(backend, phi, &p, 2.0 * h).map(|c| c.norm());
            match (d1, d2) {
                (Ok(a), Ok(b)) => (a, b),
                _ => (f64::NAN, f64::NAN),
            }
        })
        .collect();
    let worst = rows
        .iter()
        .fold(0.0f64, |m, r| if r.0.is_nan() { f64::NAN } else { m.max(r.0) });
    let (s1, s2) = rows.iter().fold((0.0, 0.0), |a, r| (a.0 + r.0, a.1 + r.1));
    (nan_as_inf(worst), s2 / s1)
}

pub struct CalculusSuiteInput<'a, SB, SP> {
    pub bolza_backend: &'a HyperbolicBackend,
    pub bolza_field: &'a ScalarField<PhasePoint>,
    pub bolza_sampler: &'a SB,
    pub planar_tc: &'a TimeChange<PlanarBackend>,
    pub planar_field: &'a ScalarField<PlanarPoint>,
    pub planar_sampler: &'a SP,
    pub defect_points: usize,
    pub hsq_points: usize,
    pub seed: u64,
    /// Base step; the defect is measured at `step` and `2 step`.
    pub step: f64,
}

/// Commutator identity on both backends, its convergence order, the
/// `H^2` commutator cross-check and the `H` cross-check on the plane.
pub fn calculus_suite<SB, SP>(input: &CalculusSuiteInput<'_, SB, SP>) -> Vec<Check>
where
    SB: PhaseSampler<PhasePoint>,
    SP: PhaseSampler<PlanarPoint>,
{
    let mut out = Vec::new();
    let (bw, br) = defect_and_ratio(
        input.bolza_backend,
        input.bolza_field,
        input.bolza_sampler,
        input.defect_points,
        input.seed,
        input.step * input.bolza_field.smoothness_scale,
    );
    let bscale = input.bolza_field.smoothness_scale;
    out.push(Check::at_most("calculus", "bolza_commutator_defect", bw / bscale, 1e-5));
    out.push(Check::at_least("calculus", "bolza_defect_halving_ratio", br, 8.0));
    let (pw, pr) = defect_and_ratio(
        &PlanarBackend,
        input.planar_field,
        input.planar_sampler,
        input.defect_points,
        input.seed,
        input.step * input.planar_field.smoothness_scale,
    );
    let pscale = input.planar_field.smoothness_scale;
    out.push(Check::at_most(
        "calculus",
        "planar_commutator_defect",
        pw / pscale,
        1e-5,
    ));
    out.push(Check::at_least("calculus", "planar_defect_halving_ratio", pr, 8.0));

    let tc = input.planar_tc;
    let phi = input.planar_field;
    let hsq = max_of((0..input.hsq_points as u64).into_par_iter().map(|k| {
        let p = input.planar_sampler.sample(input.seed ^ 0x21, k).point;
        match hsq_commutator(phi, tc, &p, input.step) {
            Ok((a, b)) => (a - b).norm() / a.norm().max(b.norm()).max(1e-3),
            Err(_) => f64::NAN,
        }
    }));
    out.push(Check::at_most(
        "calculus",
        "planar_hsq_cross_check",
        nan_as_inf(hsq),
        1e-4,
    ));
    let cross = (0..input.defect_points as u64)
        .into_par_iter()
        .all(|k| apply_h_checked(phi, tc, &input.planar_sampler.sample(input.seed ^ 0x22, k).point).is_ok());
    out.push(Check::holds("calculus", "planar_apply_h_forms_agree", cross));
    out
}

/// The sampler used for planar suites.
pub fn planar_suite_sampler() -> GaussianSampler {
    GaussianSampler::new((0.0, 0.0), 1.5)
}
