use std::f64::consts::PI;
use std::sync::Arc;

use horoflow::flows::{FlowBackend, HyperbolicBackend};
use horoflow::quadrature;
use horoflow::surface::*;
use horoflow::{GroupElement, HPoint, Orientation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_element(rng: &mut ChaCha8Rng, g: &FuchsianGroup, letters: usize) -> GroupElement {
    let r = (1.0 + rng.random::<f64>() * 3.0f64.cosh()).acosh().min(3.0);
    let theta = rng.random::<f64>() * 2.0 * PI;
    let rho = (0.5 * r).tanh();
    let z = HPoint::from_disk(rho * theta.cos(), rho * theta.sin()).unwrap();
    let mut e = GroupElement::translate_i_to(&z) * GroupElement::rotation(rng.random::<f64>() * 2.0 * PI);
    for _ in 0..rng.random_range(0..=letters) {
        e = g.generator(rng.random_range(0..GENERATOR_COUNT)) * e;
    }
    e
}

#[test]
fn reduction_is_idempotent_and_coset_invariant() {
    let g = build_bolza().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for p in g.sample_phase(300, 1) {
        let r = g.reduce(&p).unwrap();
        assert_eq!(g.reduce(&r).unwrap().rep, r.rep);
        let far = g.reduce(&PhasePoint::new(random_element(&mut rng, &g, 5))).unwrap();
        assert_eq!(g.reduce(&PhasePoint::new(far.rep)).unwrap().rep, far.rep);
        for k in 0..GENERATOR_COUNT {
            let moved = g.reduce(&PhasePoint::new(g.generator(k) * p.rep)).unwrap();
            assert!(moved.base().distance(&r.base()) < 1e-10);
        }
    }
}

#[test]
fn reduced_points_lie_in_the_octagon() {
    let g = build_bolza().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let bound = bolza_circumradius() + 1e-9;
    for _ in 0..10_000 {
        let r = g.reduce(&PhasePoint::new(random_element(&mut rng, &g, 5))).unwrap();
        assert!(r.base().distance(&HPoint::i()) <= bound);
    }
}

#[test]
fn octagon_area_from_its_boundary() {
    // area = int (cosh R(theta) - 1) dtheta over sixteen smooth pieces
    let area: f64 = (0..16)
        .map(|k| {
            let a = k as f64 * PI / 8.0;
            quadrature::integrate(|t| Ok(octagon_boundary_radius(t).cosh() - 1.0), a, a + PI / 8.0, 1e-13).unwrap()
        })
        .sum();
    assert!((area - OCTAGON_AREA).abs() < 1e-11, "{area}");
}

/// Area of the part of the octagon with disk abscissa above `c`, relative to the whole.
fn cut_fraction(c: f64) -> f64 {
    let piece = |t: f64| {
        let big = octagon_boundary_radius(t).cosh();
        let ct = t.cos();
        if ct <= c {
            return Ok(0.0);
        }
        // tanh(r/2) cos t = c
        let r0 = 2.0 * (c / ct).atanh();
        Ok((big - r0.cosh()).max(0.0))
    };
    let total: f64 = (0..16)
        .map(|k| {
            let a = k as f64 * PI / 8.0;
            quadrature::integrate(piece, a, a + PI / 8.0, 1e-12).unwrap()
        })
        .sum();
    total / OCTAGON_AREA
}

#[test]
fn sampler_matches_area_of_a_half_plane_cut() {
    let g = build_bolza().unwrap();
    let c = 0.3;
    let exact = cut_fraction(c);
    assert!(exact > 0.1 && exact < 0.5);
    let n = 100_000;
    let hits = (0..n as u64)
        .filter(|&k| g.sample_one(5, k).base().to_disk().0 > c)
        .count() as f64;
    let p = hits / n as f64;
    let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
    assert!((p - exact).abs() < 3.0 * sigma, "{p} vs {exact}");
}

#[test]
fn sampling_is_deterministic() {
    let g = build_bolza().unwrap();
    assert_eq!(g.sample_phase(50, 9), g.sample_phase(50, 9));
    assert_ne!(g.sample_phase(5, 9), g.sample_phase(5, 10));
}

#[test]
fn series_mean_by_unfolding_quadrature_and_sampling() {
    let g = Arc::new(build_bolza().unwrap());
    let beta = 2.0;
    let s = PoincareSeries::new(g.clone(), beta, HPoint::new(0.1, 1.2).unwrap(), SeriesLimits::default()).unwrap();
    // unfolding: int_X u dA = int_H exp(-beta cosh d) dA = 2 pi e^{-beta} / beta
    let unfolded = 2.0 * PI * (-beta).exp() / beta / OCTAGON_AREA;
    let integrand = |t: f64| {
        let rmax = octagon_boundary_radius(t);
        quadrature::integrate(
            |r| {
                let rho = (0.5 * r).tanh();
                let z = HPoint::from_disk(rho * t.cos(), rho * t.sin())?;
                Ok(s.eval(&z)? * r.sinh())
            },
            0.0,
            rmax,
            1e-11,
        )
    };
    let quad: f64 = (0..16)
        .map(|k| {
            let a = k as f64 * PI / 8.0;
            quadrature::integrate(integrand, a, a + PI / 8.0, 1e-10).unwrap()
        })
        .sum::<f64>()
        / OCTAGON_AREA;
    assert!((quad - unfolded).abs() < 1e-8, "{quad} vs {unfolded}");

    let n = 20_000;
    let vals: Vec<f64> = (0..n as u64)
        .map(|k| s.eval(&g.sample_one(3, k).base()).unwrap())
        .collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    assert!((mean - quad).abs() < 3.0 * (var / n as f64).sqrt(), "{mean} vs {quad}");
}

#[test]
fn series_is_invariant_and_positive() {
    let g = Arc::new(build_bolza().unwrap());
    let s = PoincareSeries::new(g.clone(), 2.0, HPoint::new(-0.4, 0.9).unwrap(), SeriesLimits::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        // points within a few units of the octagon; far out in the plane the
        // coordinates themselves lose digits
        let z = random_element(&mut rng, &g, 1).base_point();
        let u = s.eval(&z).unwrap();
        assert!(u > 0.0);
        for k in 0..GENERATOR_COUNT {
            let w = g.generator(k).act(&z).unwrap();
            assert!((s.eval(&w).unwrap() - u).abs() < 1e-9);
        }
    }
}

#[test]
fn closed_geodesic_through_the_centre() {
    // the axis of the first side pairing passes through i with period l
    let g = Arc::new(build_bolza().unwrap());
    let b = HyperbolicBackend::new(g.clone(), Orientation::Negative);
    let start = PhasePoint::new(GroupElement::identity());
    let l = bolza_translation_length();
    let mut p = start;
    for k in 1..=300 {
        p = b.geodesic(&p, l).unwrap();
        assert!(b.separation(&p, &start) < 1e-8, "period {k}");
    }
    // unit steps against a single long call along the same orbit
    let mut q = start;
    for _ in 0..1000 {
        q = b.geodesic(&q, 1.0).unwrap();
    }
    let direct = b.geodesic(&start, 1000.0).unwrap();
    assert!(b.separation(&q, &direct) < 1e-8);
}

#[test]
fn generic_geodesic_composition_over_moderate_times() {
    let g = Arc::new(build_bolza().unwrap());
    let b = HyperbolicBackend::new(g.clone(), Orientation::Negative);
    for p in g.sample_phase(20, 6) {
        let mut q = p;
        for _ in 0..15 {
            q = b.geodesic(&q, 1.0).unwrap();
        }
        let direct = b.geodesic(&p, 15.0).unwrap();
        assert!(b.separation(&q, &direct) < 1e-8);
    }
}

#[test]
fn horocycle_group_law() {
    let g = Arc::new(build_bolza().unwrap());
    let b = HyperbolicBackend::new(g.clone(), Orientation::Positive);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for p in g.sample_phase(50, 7) {
        let t = rng.random_range(-10.0..10.0);
        let t2 = rng.random_range(-10.0..10.0);
        let a = b.horocycle(&b.horocycle(&p, t).unwrap(), t2).unwrap();
        let c = b.horocycle(&p, t + t2).unwrap();
        assert!(a.base().distance(&c.base()) < 1e-10 || b.separation(&a, &c) < 1e-10);
    }
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn near_octagon(r: f64, theta: f64, angle: f64) -> GroupElement {
        let rho = (0.5 * r).tanh();
        let z = HPoint::from_disk(rho * theta.cos(), rho * theta.sin()).unwrap();
        GroupElement::translate_i_to(&z) * GroupElement::rotation(angle)
    }

    proptest! {
        #[test]
        fn reduction_is_a_projection_to_the_quotient(
            r in 0.0..3.0f64,
            theta in 0.0..2.0 * PI,
            angle in 0.0..2.0 * PI,
            k in 0..GENERATOR_COUNT,
        ) {
            let g = build_bolza().unwrap();
            let p = PhasePoint::new(near_octagon(r, theta, angle));
            let red = g.reduce(&p).unwrap();
            prop_assert_eq!(g.reduce(&red).unwrap().rep, red.rep);
            let moved = g.reduce(&PhasePoint::new(g.generator(k) * p.rep)).unwrap();
            prop_assert!(moved.base().distance(&red.base()) < 1e-10);
            prop_assert!(moved.rep.max_relative_diff(&red.rep) < 1e-9);
        }
    }
}
