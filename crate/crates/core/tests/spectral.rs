use std::sync::Arc;

use horoflow::calculus::{ScalarField, TimeChange};
use horoflow::flows::HyperbolicBackend;
use horoflow::planar_toy::{gaussian_packet, pipeline_field, planar_bump, planar_flat, GaussianSampler, PlanarPoint};
use horoflow::quadrature;
use horoflow::spectral::*;
use horoflow::surface::{build_bolza, periodic_function, BolzaSampler, MAX_ENUMERATION_RADIUS};
use horoflow::{HPoint, Orientation};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[test]
fn gaussian_atom_scan_decays() {
    // (1/2T) int_{-T}^{T} e^{-2t^2} dt -> sqrt(pi/2) / (2T)
    let s = CorrelationSeries::synthetic(0.01, 5000, |t| re((-t * t).exp()));
    let a = atom_scan(&s).unwrap();
    let expected = (std::f64::consts::PI / 2.0).sqrt() / (2.0 * 50.0);
    assert!((a.value() / expected - 1.0).abs() < 0.05, "{} vs {expected}", a.value());
    assert!(a.decreasing);
}

#[test]
fn mixed_atom_scan_finds_the_atom() {
    let c = |t: f64| re(0.25 + (-t * t).exp());
    let s = CorrelationSeries::synthetic(0.05, 4000, c);
    let a = atom_scan(&s).unwrap();
    let t = 200.0;
    let pi = std::f64::consts::PI;
    let finite_t = 0.0625 + (0.5 * pi.sqrt() + (pi / 2.0).sqrt()) / (2.0 * t);
    assert!((a.value() - finite_t).abs() < 1e-6 * finite_t, "{}", a.value());
    assert!(a.decreasing);
    let long = atom_scan(&CorrelationSeries::synthetic(0.05, 40000, c)).unwrap();
    assert!((long.value() / 0.0625 - 1.0).abs() < 0.05);
}

#[test]
fn gaussian_density_pair() {
    // C = e^{-t^2} has rho = e^{-lambda^2/4} / (2 sqrt(pi))
    let s = CorrelationSeries::synthetic(0.01, 5000, |t| re((-t * t).exp()));
    let d = density(&s, Window::Hann).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for (l, r) in d.freqs.iter().zip(&d.density) {
        let exact = (-l * l / 4.0).exp() / (2.0 * std::f64::consts::PI.sqrt());
        num += (r - exact).abs();
        den += exact;
    }
    assert!(num / den < 0.02, "{}", num / den);
    assert!((d.integral - 1.0).abs() < 0.02);
    assert!(d.negativity_deficit <= deficit_bound(&s, Window::Hann));
}

#[test]
fn decay_fits() {
    let s = CorrelationSeries::synthetic(0.05, 1000, |t| re((-0.3 * t.abs()).exp()));
    match decay_report(&s) {
        DecayReport::Fit { exp_slope, .. } => assert!((exp_slope / -0.3 - 1.0).abs() < 0.05),
        r => panic!("{r:?}"),
    }
    let s = CorrelationSeries::synthetic(0.05, 1000, |t| re(1.0 / (1.0 + t * t)));
    match decay_report(&s) {
        DecayReport::Fit { power_slope, .. } => assert!((power_slope / -2.0 - 1.0).abs() < 0.1),
        r => panic!("{r:?}"),
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut s = CorrelationSeries::synthetic(0.05, 1000, |_| re(0.0));
    for (v, e) in s.values.iter_mut().zip(s.stderr.iter_mut()) {
        *e = 1e-3;
        *v = re(1e-3 * (rng.random::<f64>() - 0.5));
    }
    assert_eq!(decay_report(&s), DecayReport::BelowNoiseFloor);
}

fn flat_overlap(t: f64) -> f64 {
    let phi = |x: f64, y: f64| (-x * x - y * y).exp();
    quadrature::integrate(
        |y| quadrature::integrate(|x| Ok(phi(x, y) * phi(x + t, y)), -12.0, 12.0, 1e-13),
        -12.0,
        12.0,
        1e-12,
    )
    .unwrap()
}

#[test]
fn flat_correlation_matches_direct_quadrature() {
    let tc = planar_flat();
    let phi = gaussian_packet((0.0, 0.0), 1.0);
    let cfg = CorrelationConfig {
        t_max: 4.0,
        dt: 0.25,
        n: 4000,
        seed: 9,
        tol: 1e-9,
        mean_subtracted: true,
    };
    let s = correlation(&phi, &tc, &GaussianSampler::new((0.0, 0.0), 1.0), &cfg).unwrap();
    for k in -16..=16i64 {
        let c = s.at(k);
        let e = s.stderr[(k + 16) as usize];
        let exact = flat_overlap(k as f64 * 0.25);
        assert!(
            (c.re - exact).abs() <= 3.0 * e + 1e-12,
            "k = {k}: {c} vs {exact} (se {e})"
        );
        assert!(c.im.abs() < 1e-15);
    }
    assert_eq!(s.hermitian_excess(), 0.0);
    assert_eq!(s.mean, re(0.0));
}

#[test]
fn c0_is_the_weighted_second_moment() {
    let tc = planar_bump(0.8, 1.0);
    let phi = pipeline_field(&gaussian_packet((0.2, 0.0), 1.0), &tc);
    let cfg = CorrelationConfig {
        t_max: 1.0,
        dt: 0.5,
        n: 2000,
        seed: 4,
        tol: 1e-9,
        mean_subtracted: true,
    };
    let sampler = GaussianSampler::new((0.0, 0.0), 1.0);
    let s = correlation(&phi, &tc, &sampler, &cfg).unwrap();
    // E_nu |phi|^2 with nu = dp / f, from the same samples
    let mut acc = 0.0;
    for i in 0..2000 {
        use horoflow::sampling::PhaseSampler;
        let w = sampler.sample(4, i);
        acc += w.weight / tc.f_at(&w.point) * phi.eval(&w.point).norm_sqr();
    }
    let c0 = s.at(0);
    assert!((c0.re - acc / 2000.0).abs() < 1e-12 * c0.re);
    assert_eq!(c0.im, 0.0);
    // and the estimate is within 3 sigma of pi/2 * (1 + O(bump)) integrated exactly
    let exact = quadrature::integrate(
        |y| {
            quadrature::integrate(
                |x| {
                    let p = PlanarPoint::new(x, y);
                    Ok(phi.eval(&p).norm_sqr() / tc.f_at(&p))
                },
                -10.0,
                10.0,
                1e-12,
            )
        },
        -10.0,
        10.0,
        1e-11,
    )
    .unwrap();
    assert!((c0.re - exact).abs() < 3.0 * s.stderr[s.k_max]);
}

fn bolza_tc() -> (TimeChange<HyperbolicBackend>, BolzaSampler) {
    let g = Arc::new(build_bolza().unwrap());
    let b = Arc::new(HyperbolicBackend::new(g.clone(), Orientation::Negative));
    let u = periodic_function(g.clone(), 2.0, MAX_ENUMERATION_RADIUS, HPoint::new(0.1, 1.2).unwrap()).unwrap();
    (TimeChange::new(b, u.affine(1.0, 0.2)), BolzaSampler { group: g })
}

#[test]
fn constants_are_removed_by_mean_subtraction() {
    let (tc, sampler) = bolza_tc();
    let one = ScalarField::constant(1.0);
    let cfg = CorrelationConfig {
        t_max: 2.0,
        dt: 0.5,
        n: 1000,
        seed: 2,
        tol: 1e-8,
        mean_subtracted: true,
    };
    let s = correlation(&one, &tc, &sampler, &cfg).unwrap();
    for (v, e) in s.values.iter().zip(&s.stderr) {
        assert!(v.norm() <= e + 1e-15, "{v} vs {e}");
    }
    assert!((s.mean - 1.0).norm() < 1e-15);
}

#[test]
fn preconditions() {
    let tc = planar_flat();
    let phi = gaussian_packet((0.0, 0.0), 1.0);
    let sampler = GaussianSampler::new((0.0, 0.0), 1.0);
    let base = CorrelationConfig {
        t_max: 1.0,
        dt: 0.1,
        n: 1000,
        seed: 1,
        tol: 1e-9,
        mean_subtracted: true,
    };
    assert!(correlation(&phi, &tc, &sampler, &CorrelationConfig { n: 999, ..base }).is_err());
    assert!(correlation(&phi, &tc, &sampler, &CorrelationConfig { dt: 1e-7, ..base }).is_err());
    assert!(correlation(&phi, &tc, &sampler, &CorrelationConfig { tol: 1e-3, ..base }).is_err());
}

#[test]
fn seeded_runs_are_bit_identical_across_thread_counts() {
    let tc = planar_bump(0.8, 1.0);
    let phi = pipeline_field(&gaussian_packet((0.0, 0.0), 1.0), &tc);
    let sampler = GaussianSampler::new((0.0, 0.0), 1.0);
    let cfg = CorrelationConfig {
        t_max: 5.0,
        dt: 0.1,
        n: 1500,
        seed: 77,
        tol: 1e-9,
        mean_subtracted: true,
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| correlation(&phi, &tc, &sampler, &cfg).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a.to_csv(), b.to_csv());
    let c = correlation(&phi, &tc, &sampler, &CorrelationConfig { seed: 78, ..cfg }).unwrap();
    assert_ne!(a.to_csv(), c.to_csv());
}

#[test]
fn density_csv_round_trip() {
    let s = CorrelationSeries::synthetic(0.1, 50, |t| re((-t * t).exp()));
    let d = density(&s, Window::None).unwrap();
    let back = SpectralDensity::from_csv(&d.to_csv(), Window::None, d.half_width).unwrap();
    assert_eq!(back.density, d.density);
    assert_eq!(back.freqs, d.freqs);
}

#[test]
fn zero_series_has_zero_density() {
    let s = CorrelationSeries::synthetic(0.1, 100, |_| re(0.0));
    let d = density(&s, Window::Hann).unwrap();
    assert!(d.density.iter().all(|&r| r == 0.0));
    assert_eq!(d.integral, 0.0);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn correlation_csv_round_trips(values in proptest::collection::vec((-1e3..1e3f64, -1e3..1e3f64, 0.0..1.0f64), 1..40)) {
            let k_max = values.len();
            let mut s = CorrelationSeries::synthetic(0.1, k_max, |_| re(0.0));
            for (i, &(a, b, e)) in values.iter().enumerate() {
                s.values[i] = Complex64::new(a, b);
                s.stderr[i] = e;
            }
            let back = CorrelationSeries::from_csv(&s.to_csv()).unwrap();
            prop_assert_eq!(back.k_max, k_max);
            prop_assert_eq!(&back.values, &s.values);
            prop_assert_eq!(&back.stderr, &s.stderr);
        }

        #[test]
        fn positive_definite_input_stays_within_the_deficit_bound(
            terms in proptest::collection::vec((0.0..1.0f64, 0.05..2.0f64, -3.0..3.0f64), 1..4),
            k_max in 50..400usize,
        ) {
            // sums of a e^{-b t^2} cos(w t) with a >= 0 have nonnegative spectra
            let c = |t: f64| re(terms.iter().map(|&(a, b, w)| a * (-b * t * t).exp() * (w * t).cos()).sum());
            let s = CorrelationSeries::synthetic(0.05, k_max, c);
            for window in [Window::Hann, Window::None] {
                let d = density(&s, window).unwrap();
                prop_assert!(d.negativity_deficit <= deficit_bound(&s, window) + 1e-15);
            }
        }
    }
}
