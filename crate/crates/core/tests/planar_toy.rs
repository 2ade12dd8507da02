use horoflow::calculus::check_assumption;
use horoflow::planar_toy::*;
use horoflow::spectral::DensityGrid;
use horoflow::Error;
use libm::erfc;
use num_complex::Complex64;

fn grid() -> DensityGrid {
    DensityGrid {
        dt: 0.05,
        n_fft: 1 << 14,
    }
}

#[test]
fn flat_gaussian_spectrum_matches_closed_form() {
    let phi = gaussian_packet((0.0, 0.0), 1.0);
    let rho = exact_spectrum(&phi, &planar_flat(), &grid(), &SliceGrid::default()).unwrap();
    // rho(lambda) = (1/2) sqrt(pi/2) exp(-lambda^2 / 2)
    let c = 0.5 * (std::f64::consts::PI / 2.0).sqrt();
    let (mut num, mut den) = (0.0, 0.0);
    for (l, r) in rho.freqs.iter().zip(&rho.density) {
        let exact = c * (-l * l / 2.0).exp();
        num += (r - exact).abs();
        den += exact;
    }
    assert!(num / den < 1e-6, "{}", num / den);
    assert!((rho.integral - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
}

#[test]
fn plancherel_with_a_bump() {
    let tc = planar_bump(0.8, 1.0);
    let phi = hermite_packet((0.3, -0.2), 1.0);
    let rho = exact_spectrum(&phi, &tc, &grid(), &SliceGrid::default()).unwrap();
    // ||phi||^2 = pi s^2 / 8 for the Hermite packet
    let norm = std::f64::consts::PI / 8.0;
    assert!((rho.integral - norm).abs() < 1e-8, "{}", rho.integral);
    assert!(rho.density.iter().all(|&r| r >= 0.0));
}

#[test]
fn flat_spectrum_is_translation_invariant() {
    let g = SliceGrid {
        half_width: 9.0,
        ..SliceGrid::default()
    };
    let a = exact_spectrum(&gaussian_packet((0.0, 0.0), 1.0), &planar_flat(), &grid(), &g).unwrap();
    let b = exact_spectrum(&gaussian_packet((1.3, 0.0), 1.0), &planar_flat(), &grid(), &g).unwrap();
    let diff: f64 = a
        .density
        .iter()
        .zip(&b.density)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        * a.d_lambda();
    assert!(diff < 1e-8, "{diff}");
}

#[test]
fn flat_resolvent_closed_form() {
    // (H_1 + i) u = e^{-x^2} with H_1 = i d/dx has
    // u = -i e^{1/4 - x} (sqrt(pi)/2) erfc(1/2 - x)
    let psi = horoflow::calculus::ScalarField::real("g1", 1.0, |p: &PlanarPoint| (-p.x * p.x - p.y * p.y).exp());
    let r = Resolvent::new(Complex64::new(0.0, 1.0), &psi, &planar_flat(), 0.3, 8.0, 0.02).unwrap();
    let ey = (-0.09f64).exp();
    for x in [-2.0f64, -0.5, 0.0, 0.7, 1.9, 4.0] {
        let exact =
            -Complex64::new(0.0, 1.0) * (0.25 - x).exp() * (std::f64::consts::PI.sqrt() / 2.0) * erfc(0.5 - x) * ey;
        assert!((r.u(x) - exact).norm() < 1e-12, "x = {x}: {} vs {exact}", r.u(x));
        assert!(r.residual(x, 1e-3).norm() < 1e-7);
    }
}

#[test]
fn resolvent_residuals_and_round_trip() {
    let psi = gaussian_packet((0.2, 0.1), 1.0);
    let g = SliceGrid {
        half_width: 7.0,
        cell: 0.02,
        panel: 1.0,
    };
    for tc in [planar_flat(), planar_bump(0.8, 1.0)] {
        for z in [
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(1.0, 1.0),
        ] {
            let rep = resolvent_check(z, &psi, &tc, &g).unwrap();
            assert!(rep.l2_relative_residual < 1e-6, "{z}: {rep:?}");
            let rt = resolvent_round_trip(z, &psi, &tc, &g).unwrap();
            assert!(rt < 1e-6, "{z}: round trip {rt}");
        }
    }
}

#[test]
fn resolvent_conjugation_symmetry() {
    // for real psi and f, v_{-conj z} = -conj(v_z)
    let psi = hermite_packet((0.0, 0.0), 1.0);
    let tc = planar_bump(0.6, 1.0);
    let z = Complex64::new(0.7, 1.3);
    let a = Resolvent::new(z, &psi, &tc, 0.4, 8.0, 0.02).unwrap();
    let b = Resolvent::new(-z.conj(), &psi, &tc, 0.4, 8.0, 0.02).unwrap();
    for &x in &[-1.5, -0.2, 0.0, 0.9, 2.5] {
        assert!((a.v(x) + b.v(x).conj()).norm() < 1e-10);
    }
}

#[test]
fn resolvent_preconditions() {
    let psi = gaussian_packet((0.0, 0.0), 1.0);
    assert!(Resolvent::new(Complex64::new(1.0, 0.05), &psi, &planar_flat(), 0.0, 8.0, 0.02).is_err());
    let wide = gaussian_packet((0.0, 0.0), 4.0);
    let r = Resolvent::new(Complex64::new(0.0, 1.0), &wide, &planar_flat(), 0.0, 8.0, 0.02);
    assert!(matches!(r, Err(Error::Precondition(_))));
}

fn checked_bump() -> horoflow::calculus::TimeChange<horoflow::flows::PlanarBackend> {
    let tc = planar_bump(0.8, 1.0);
    let rep = check_assumption(&tc, &GaussianSampler::new((0.0, 0.0), 1.5), 4000, 17).unwrap();
    assert!(rep.pass);
    tc.with_bounds(&rep)
}

#[test]
fn mourre_flat_case() {
    let tc = planar_flat();
    let rep = check_assumption(&tc, &GaussianSampler::new((0.0, 0.0), 1.5), 1000, 1).unwrap();
    let tc = tc.with_bounds(&rep);
    let psi = gaussian_packet((0.0, 0.0), 1.0);
    let m = mourre_check((1.0, 2.0), &psi, &tc, &MourreGrid::default()).unwrap();
    // with g = 1/2 the form is 2 ||H phi_J||^2 >= 2 inf(J) ||phi_J||^2 / 2
    assert!(m.slack >= 0.0);
    assert!((m.q - 2.0 * m.kinetic).abs() < 1e-10 * m.q);
    assert!(m.q / m.norm_sq >= 2.0 * 0.5 * 1.0);
}

#[test]
fn mourre_bump_intervals() {
    let tc = checked_bump();
    let psi = gaussian_packet((0.0, 0.0), 1.0);
    for j in [(0.5, 1.0), (1.0, 2.0), (2.0, 4.0), (4.0, 8.0), (0.25, 0.5)] {
        let m = mourre_check(j, &psi, &tc, &MourreGrid::default()).unwrap();
        assert!(m.slack >= -1e-6 * m.q, "{j:?}: {m:?}");
    }
}

#[test]
fn mourre_empty_projection() {
    let tc = checked_bump();
    let psi = gaussian_packet((0.0, 0.0), 1.0);
    let r = mourre_check((900.0, 1000.0), &psi, &tc, &MourreGrid::default());
    assert!(matches!(r, Err(Error::EmptyProjection(_))), "{r:?}");
    let unchecked = planar_bump(0.8, 1.0);
    assert!(matches!(
        mourre_check((1.0, 2.0), &psi, &unchecked, &MourreGrid::default()),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn mourre_ratio_stays_above_the_bound_as_the_interval_shrinks() {
    let tc = checked_bump();
    let psi = gaussian_packet((0.0, 0.0), 1.0);
    // J is an interval of H^2, so inf(J) = lambda0^2
    let lambda0: f64 = 1.5;
    let delta_g = tc.delta_g.unwrap();
    for w in [1.0, 0.5, 0.25, 0.125] {
        let j = (lambda0 * lambda0, lambda0 * lambda0 + w);
        let m = mourre_check(j, &psi, &tc, &MourreGrid::default()).unwrap();
        assert_eq!(m.a, 2.0 * delta_g * lambda0 * lambda0);
        assert!(m.q / m.norm_sq >= m.a, "w = {w}: {m:?}");
    }
}
