#![allow(clippy::excessive_precision)]

use pearcey_lab::asympt::{mu, sigma2, theta3, variance_constant};
use pearcey_lab::fredholm::*;
use pearcey_lab::kernel::kernel;
use pearcey_lab::{IntervalFamily, LabError, PearceyParams};
use proptest::prelude::*;
use std::f64::consts::PI;

fn params(rho: f64) -> PearceyParams {
    PearceyParams::new(rho).unwrap()
}

fn fam(x: &[f64], u: &[f64]) -> IntervalFamily {
    IntervalFamily::new(x.to_vec(), u.to_vec()).unwrap()
}

#[test]
fn family_validation_and_constants() {
    assert!(IntervalFamily::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
    assert!(IntervalFamily::new(vec![2.0, 1.0], vec![0.0, 0.0]).is_err());
    assert!(IntervalFamily::new(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
    assert!(IntervalFamily::new(vec![1.0], vec![0.0, 0.0]).is_err());
    assert!(IntervalFamily::new(vec![], vec![]).is_err());
    assert!(IntervalFamily::new(vec![1.0], vec![f64::NAN]).is_err());
    let f = fam(&[0.5, 1.0, 3.0], &[0.3, -1.0, 0.4]);
    assert_eq!(f.m(), 3);
    assert!((f.s(1) - (-0.3f64).exp()).abs() < 1e-15);
    assert!((f.s(2) - (-0.6f64).exp()).abs() < 1e-15);
    assert!((f.s(3) - 0.4f64.exp()).abs() < 1e-15);
    assert_eq!(f.s(4), 1.0);
    for j in 1..=3 {
        assert_eq!(f.beta(j).re, 0.0);
        assert!((f.beta(j).im + f.u()[j - 1] / (2.0 * PI)).abs() < 1e-15);
        let fs = f.frak_s(j);
        assert_eq!(fs.re, 0.0);
        assert!((fs.im + (f.s(j + 1) - f.s(j)) / (2.0 * PI)).abs() < 1e-15);
    }
    let g = f.with_u(vec![0.0; 3]).unwrap();
    assert!(g.factors().iter().all(|v| *v == 0.0));
}

#[test]
fn grid_and_matrix_shapes() {
    let p = params(0.0);
    let g = NystromGrid::new(&[1.0, 2.0], 3.0, 10).unwrap();
    assert_eq!(g.len(), 30);
    assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
    assert!((g.weights.iter().sum::<f64>() - 12.0).abs() < 1e-13);
    assert_eq!(&g.interval[..10], &[1; 10]);
    assert_eq!(&g.interval[10..20], &[0; 10]);
    let w = build_weighted_matrix(&p, &fam(&[1.0], &[0.0]), 2.0, 12).unwrap();
    assert_eq!(w.nrows(), 12);
    assert!(w.iter().all(|v| v.norm() == 0.0));
    let w = build_weighted_matrix(&p, &fam(&[1.0, 2.0], &[1.0, 0.5]), 1.0, 40).unwrap();
    assert_eq!((w.nrows(), w.ncols()), (120, 120));
    assert!(matches!(NystromGrid::new(&[1.0], 1.0, 3), Err(LabError::InvalidArgument(_))));
    assert!(matches!(NystromGrid::new(&[1.0], 0.0, 8), Err(LabError::InvalidArgument(_))));
}

#[test]
fn matrix_is_a_diagonal_similarity_of_the_weighted_kernel() {
    let p = params(0.6);
    let f = fam(&[0.5, 1.5], &[1.0, -0.7]);
    let (r, n) = (2.0, 6);
    let w = build_weighted_matrix(&p, &f, r, n).unwrap();
    let g = NystromGrid::new(f.x(), r, n).unwrap();
    let factors = f.factors();
    let lam = |t: f64| -0.5 * theta3(t.abs(), &p);
    for a in 0..g.len() {
        for b in 0..g.len() {
            let (ta, tb) = (g.nodes[a], g.nodes[b]);
            let plain = kernel(ta, tb, &p).unwrap() * factors[g.interval[b]] * g.weights[b];
            let expect = plain * (lam(tb) - lam(ta)).exp();
            let got = w[(a, b)];
            assert!(got.im.abs() < 1e-12 && (got.re - expect).abs() < 1e-10 * (1.0 + expect.abs()), "{a},{b}");
        }
    }
}

#[test]
fn null_weights_give_zero() {
    for rho in [-1.0, 0.0, 2.0] {
        for x in [vec![1.0], vec![0.5, 2.0], vec![1.0, 2.0, 4.0]] {
            let f = IntervalFamily::endpoints(x).unwrap();
            let g = log_gen_fun(&params(rho), &f, 7.0, 8).unwrap();
            assert_eq!(g.log_f, 0.0);
            assert_eq!(g.est_error, 0.0);
        }
    }
}

#[test]
fn single_interval_regression() {
    // independent Nyström with multiprecision kernel values: -4.284880119734346753
    let g = log_gen_fun(&params(0.0), &fam(&[1.0], &[-2.0]), 4.0, 30).unwrap();
    assert!((g.log_f + 4.284880119734346753).abs() < 1e-10);
    assert!(g.est_error < 1e-8);
    assert_eq!(g.nodes_per_panel, 60);
    assert_eq!(g.r, 4.0);
    let f = g.log_f.exp();
    assert!(f > 0.0 && f < 1.0);
    let pins = [(2.0, 1.25301901709186), (6.0, 4.78223710172454), (10.0, 9.22201261379745)];
    for (r, v) in pins {
        let g = log_gen_fun(&params(0.0), &fam(&[1.0], &[1.0]), r, 60).unwrap();
        assert!((g.log_f - v).abs() < 1e-11, "r = {r}: {}", g.log_f);
    }
}

#[test]
fn zero_weight_merges_intervals() {
    let p = params(0.3);
    let one = log_gen_fun(&p, &fam(&[2.0], &[0.8]), 2.5, 40).unwrap().log_f;
    let two = log_gen_fun(&p, &fam(&[1.0, 2.0], &[0.0, 0.8]), 2.5, 40).unwrap().log_f;
    assert!((one - two).abs() < 1e-10, "{one} vs {two}");
    let one = log_gen_fun(&p, &fam(&[1.0], &[-0.6]), 2.5, 40).unwrap().log_f;
    let two = log_gen_fun(&p, &fam(&[1.0, 2.0], &[-0.6, 0.0]), 2.5, 40).unwrap().log_f;
    assert!((one - two).abs() < 1e-10, "{one} vs {two}");
    let two = log_gen_fun(&p, &fam(&[0.5, 1.5], &[1.0, -1.0]), 2.0, 40).unwrap().log_f;
    let three = log_gen_fun(&p, &fam(&[0.5, 1.0, 1.5], &[1.0, 0.0, -1.0]), 2.0, 40).unwrap().log_f;
    assert!((two - three).abs() < 1e-10, "{two} vs {three}");
}

#[test]
fn monotone_in_weight() {
    let p = params(0.0);
    let f: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0]
        .iter()
        .map(|&u| log_gen_fun(&p, &fam(&[1.0], &[u]), 4.0, 40).unwrap().log_f)
        .collect();
    assert!(f.windows(2).all(|w| w[1] > w[0]), "{f:?}");
}

#[test]
fn spectral_convergence() {
    for (x, u, rho, r) in [
        (vec![1.0], vec![2.0], 0.0, 10.0),
        (vec![1.0], vec![-2.0], 1.5, 8.0),
        (vec![1.0, 2.0], vec![1.0, -1.0], -1.0, 5.0),
        (vec![0.5, 1.0], vec![-2.0, 2.0], 1.0, 10.0),
    ] {
        let g = log_gen_fun(&params(rho), &fam(&x, &u), r, 60).unwrap();
        assert!(g.est_error < 1e-8, "{x:?} {u:?} {rho} {r}: {:e}", g.est_error);
    }
}

#[test]
fn too_few_nodes_is_a_convergence_failure() {
    let e = log_gen_fun(&params(0.0), &fam(&[1.0], &[1.0]), 10.0, 6);
    assert!(matches!(e, Err(LabError::Convergence(_))), "{e:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generating_function_positive(u1 in -3.0..3.0f64, u2 in -3.0..3.0f64, rho in -1.5..1.5f64, r in 0.5..4.0f64) {
        let g = log_gen_fun(&params(rho), &fam(&[0.7, 1.4], &[u1, u2]), r, 40).unwrap();
        prop_assert!(g.log_f.is_finite());
        prop_assert!(g.log_f.exp() > 0.0);
    }
}

#[test]
fn counting_statistics_near_asymptotics() {
    let p = params(0.0);
    let st = counting_stats(&p, &[1.0], 6.0, 60, 2).unwrap();
    assert!((st.mean[0] - mu(6.0, &p)).abs() < 0.15, "{st:?}");
    let var = st.var.as_ref().unwrap()[0];
    assert!((var - sigma2(6.0) - variance_constant()).abs() < 0.1, "{st:?}");
    assert!(st.cov.as_ref().unwrap()[0][0] == var);
    let mean_only = counting_stats(&p, &[1.0], 6.0, 60, 1).unwrap();
    assert!(mean_only.var.is_none() && mean_only.cov.is_none());
    assert!((mean_only.mean[0] - st.mean[0]).abs() < 1e-9);
    assert!(matches!(counting_stats(&p, &[1.0], 6.0, 60, 3), Err(LabError::InvalidArgument(_))));

    let st = counting_stats(&p, &[1.0, 8.0], 6.0, 120, 2).unwrap();
    let cov = st.cov.as_ref().unwrap();
    assert!((cov[0][1] - (7.0f64 / 3.0).ln() / (2.0 * PI * PI)).abs() < 0.1);
    assert_eq!(cov[0][1], cov[1][0]);
}
