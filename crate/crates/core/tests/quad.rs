use num_complex::Complex64 as C;
use pearcey_lab::quad::*;
use pearcey_lab::special::gamma_complex;
use pearcey_lab::LabError;
use proptest::prelude::*;

#[test]
fn rule_invariants() {
    for n in [1, 2, 3, 7, 20, 64, 129, 512] {
        let q = gauss_legendre(n).unwrap();
        assert_eq!(q.order, n);
        assert_eq!(q.nodes.len(), n);
        assert!(q.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(q.nodes.iter().all(|t| t.abs() < 1.0));
        for i in 0..n {
            assert!((q.nodes[i] + q.nodes[n - 1 - i]).abs() < 1e-15);
        }
        assert!(q.weights.iter().all(|w| *w > 0.0));
        assert!((q.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14, "n = {n}");
    }
    assert!(matches!(gauss_legendre(0), Err(LabError::InvalidArgument(_))));
    assert!(matches!(gauss_legendre(513), Err(LabError::InvalidArgument(_))));
}

#[test]
fn segment_examples() {
    let rule = gauss_legendre(3).unwrap();
    let seg = RaySegment::new(C::new(0.0, 0.0), 0.0, 1.0).unwrap();
    let one = integrate_segment(|_| C::new(1.0, 0.0), &seg, &rule).unwrap();
    assert!((one - 1.0).norm() < 1e-15);
    let half = integrate_segment(|t| t, &seg, &gauss_legendre(1).unwrap()).unwrap();
    assert!((half - 0.5).norm() < 1e-15);
    // exp(-t^4/4) on [0, 12]
    let seg = RaySegment::new(C::new(0.0, 0.0), 0.0, 12.0).unwrap();
    let v = integrate_composite(|t| (-t.powi(4) / 4.0).exp(), &seg, &gauss_legendre(200).unwrap(), 8).unwrap();
    let exact = gamma_complex(C::new(0.25, 0.0)).unwrap().re / 2f64.powf(1.5);
    assert!((v.re - exact).abs() < 1e-10 && v.im.abs() < 1e-15);
    assert!((exact - 1.28185).abs() < 1e-5);
}

#[test]
fn rotated_segment_and_bad_input() {
    // ∫ t dt along the unit segment at angle π/2 is (i)^2/2
    let seg = RaySegment::new(C::new(0.0, 0.0), std::f64::consts::FRAC_PI_2, 1.0).unwrap();
    let v = integrate_segment(|t| t, &seg, &gauss_legendre(2).unwrap()).unwrap();
    assert!((v - C::new(-0.5, 0.0)).norm() < 1e-15);
    assert!(RaySegment::new(C::new(0.0, 0.0), 0.0, 0.0).is_err());
    assert!(RaySegment::new(C::new(0.0, 0.0), f64::NAN, 1.0).is_err());
    let err = integrate_segment(|t| 1.0 / (t - 0.5), &seg_real(1.0), &gauss_legendre(1).unwrap());
    assert!(matches!(err, Err(LabError::Numeric(_))));
}

fn seg_real(len: f64) -> RaySegment {
    RaySegment::new(C::new(0.0, 0.0), 0.0, len).unwrap()
}

#[test]
fn truncation_examples() {
    assert!((truncation_radius(0.25, 1e-18) - 3.5883).abs() < 1e-4);
    assert_eq!(truncation_radius(0.25, 1.0), 0.0);
    assert!((truncation_radius(1.0, 1e-16) - 2.46).abs() < 5e-3);
    let t = truncation_radius(0.7, 1e-12);
    assert!(((-0.7 * t.powi(4)).exp() - 1e-12).abs() < 1e-24);
    assert_eq!(DEFAULT_TAIL_EPS, 1e-18);
}

#[test]
fn composite_converges() {
    let f = |t: C| (C::new(0.0, 3.0) * t).exp() * (-t * t).exp();
    let rule = gauss_legendre(16).unwrap();
    let seg = seg_real(6.0);
    let a = integrate_composite(f, &seg, &rule, 8).unwrap();
    let b = integrate_composite(f, &seg, &rule, 16).unwrap();
    assert!((a - b).norm() < 1e-12);
}

proptest! {
    #[test]
    fn rules_integrate_polynomials_exactly(n in 1usize..48, seed in proptest::collection::vec(-1.0..1.0f64, 96)) {
        let q = gauss_legendre(n).unwrap();
        let deg = 2 * n - 1;
        let coef = &seed[..=deg];
        let quad: f64 = q.nodes.iter().zip(&q.weights).map(|(t, w)| {
            w * coef.iter().rev().fold(0.0, |acc, c| acc * t + c)
        }).sum();
        let exact: f64 = coef.iter().enumerate().filter(|(k, _)| k % 2 == 0).map(|(k, c)| 2.0 * c / (k as f64 + 1.0)).sum();
        let scale: f64 = 1.0 + coef.iter().map(|c| c.abs()).sum::<f64>();
        prop_assert!((quad - exact).abs() <= 1e-12 * scale, "n={n}: {quad} vs {exact}");
    }

    #[test]
    fn mapped_rule_integrates_on_interval(a in -5.0..5.0f64, len in 0.1..4.0f64, n in 2usize..20) {
        let b = a + len;
        let q = gauss_legendre(n).unwrap();
        let s: f64 = q.mapped(a, b).map(|(t, w)| w * t * t).sum();
        prop_assert!((s - (b.powi(3) - a.powi(3)) / 3.0).abs() < 1e-11 * (1.0 + a.abs().max(b.abs()).powi(3)));
    }
}
