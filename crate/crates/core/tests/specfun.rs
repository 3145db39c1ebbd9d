mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use besselpot::specfun::{
    bessel_j, bessel_kernel_profile, bessel_kernel_value, entire_bessel_j, gamma, modified_bessel_k, scale_profile,
    scaled_bessel, scaled_bessel_one,
};
use besselpot::{BesselParams, Radial};
use common::{entire_j_series, lanczos_gamma, simpson, simpson_singular};
use proptest::prelude::*;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `∫_0^∞ e^{-x cosh t} cosh(αt) dt` by the trapezoid rule on the even extension,
/// which converges geometrically for this analytic, doubly decaying integrand.
fn k_oracle(alpha: f64, x: f64) -> f64 {
    let h = 0.01;
    let f = |t: f64| (-x * (t.cosh() - 1.0)).exp() * (alpha * t).cosh();
    let mut sum = 0.5 * f(0.0);
    let mut k = 1;
    loop {
        let term = f(k as f64 * h);
        sum += term;
        if term < 1e-20 * sum && k as f64 * h > 1.0 {
            break;
        }
        k += 1;
    }
    h * sum * (-x).exp()
}

#[test]
fn k_half_closed_form() {
    let v = modified_bessel_k(0.5f64, 1.0).unwrap();
    assert_relative_eq!(v, (PI / 2.0).sqrt() * (-1.0f64).exp(), max_relative = 1e-12);
    assert_relative_eq!(v, 0.461_068_50, epsilon = 1e-8);
}

#[test]
fn k_matches_integral_oracle() {
    for &alpha in &[0.0, 0.3, 1.0, 1.5, 2.0, 3.7] {
        for &x in &[0.05, 0.5, 1.0, 2.5, 7.0, 20.0] {
            let v = modified_bessel_k(alpha, x).unwrap();
            let o = k_oracle(alpha, x);
            assert!((v / o - 1.0).abs() < 1e-9, "K_{alpha}({x}) = {v}, oracle {o}");
        }
    }
}

#[test]
fn k0_logarithmic_limit() {
    // leading behaviour -ln(x/2) - γ; the ratio to -ln(x/2) alone is only 0.89 at x = 0.01
    let x = 0.01;
    let v = modified_bessel_k(0.0f64, x).unwrap();
    assert!((v / (-(x / 2.0).ln() - EULER_GAMMA) - 1.0).abs() < 1e-4);
}

#[test]
fn k1_large_argument() {
    let x = 10.0;
    let r = modified_bessel_k(1.0f64, x).unwrap() * x.sqrt() * x.exp() / (PI / 2.0).sqrt();
    assert!((0.95..=1.05).contains(&r), "{r}");
}

#[test]
fn k_rejects_non_positive() {
    assert!(modified_bessel_k(0.5f64, 0.0).is_err());
    assert!(modified_bessel_k(0.5f64, -1.0).is_err());
}

#[test]
fn k_symmetry_and_recurrence() {
    for &a in &[0.3f64, 0.7] {
        for &x in &[0.5, 1.0, 5.0] {
            assert_relative_eq!(
                modified_bessel_k(a, x).unwrap(),
                modified_bessel_k(-a, x).unwrap(),
                max_relative = 1e-13
            );
        }
    }
    for &a in &[0.3f64, 1.0, 2.25] {
        for &x in &[0.4, 1.9, 2.1, 6.0] {
            let lhs = modified_bessel_k(a + 1.0, x).unwrap();
            let rhs = modified_bessel_k(a - 1.0, x).unwrap() + 2.0 * a / x * modified_bessel_k(a, x).unwrap();
            assert!((lhs / rhs - 1.0).abs() < 1e-9, "a={a} x={x}");
        }
    }
}

#[test]
fn entire_bessel_examples() {
    assert!(entire_bessel_j(0.5f64, PI).unwrap().abs() < 1e-14);
    for &a in &[-0.25, 0.0, 0.5, 3.0] {
        assert_eq!(entire_bessel_j(a, 0.0f64).unwrap(), 1.0);
    }
    assert!((entire_bessel_j(0.25f64, 2.5).unwrap() - entire_j_series(0.25, 2.5)).abs() < 1e-10);
    for &x in &[3.0, 9.0, 25.0, 60.0, 150.0] {
        assert_relative_eq!(entire_bessel_j(0.5f64, x).unwrap(), x.sin() / x, epsilon = 1e-12);
    }
    let j1 = bessel_j(1.0f64, 3.0).unwrap();
    assert!((j1 - 0.339_058_958_525_936_4).abs() < 1e-12);
}

#[test]
fn kernel_closed_form_three_dimensional() {
    let p = BesselParams::uniform(0.5f64, 1).unwrap();
    let g = bessel_kernel_profile(&p, 2.0).unwrap();
    for &r in &[1e-3, 0.1, 0.7, 1.0, 3.3, 10.0, 30.0] {
        assert_relative_eq!(g.value(r), (-r).exp() / r, max_relative = 1e-11);
        assert_relative_eq!(g.neg_derivative(r).unwrap(), (-r).exp() * (1.0 + r) / (r * r), max_relative = 1e-10);
    }
}

#[test]
fn kernel_unit_mass() {
    for &(alpha, nu) in &[(0.25, 1.0), (0.25, 2.0), (1.0, 0.5), (-0.25, 1.5)] {
        let p = BesselParams::uniform(alpha, 1).unwrap();
        let g = bessel_kernel_profile(&p, nu).unwrap();
        let a = p.a(0);
        let mass = simpson_singular(&|r: f64| g.value(r) * r.powf(a), 0.0, 1.0, 1e-13)
            + simpson(&|r: f64| g.value(r) * r.powf(a), 1.0, 60.0, 1e-13);
        assert!((mass - 1.0).abs() < 1e-7, "alpha {alpha} nu {nu}: mass {mass}");
    }
}

#[test]
fn kernel_small_r_power_law() {
    let p = BesselParams::uniform(0.25f64, 1).unwrap();
    let nn = p.hom_dim();
    let nu = 1.0;
    let s = |r: f64| bessel_kernel_value(&p, nu, r).unwrap() * r.powf(nn - nu);
    let (a, b) = (s(1e-6), s(1e-7));
    assert!(a > 0.0 && (a / b - 1.0).abs() < 1e-4);
    // sharper singularity for smaller order
    let g1 = bessel_kernel_profile(&p, 1.0).unwrap();
    let g2 = bessel_kernel_profile(&p, 2.0).unwrap();
    assert!(g1.value(1e-3) > g2.value(1e-3));
}

#[test]
fn kernel_shape_invariants() {
    let p = BesselParams::uniform(0.25f64, 1).unwrap();
    for nu in [0.5, 1.0, 2.0, 3.0] {
        let g = bessel_kernel_profile(&p, nu).unwrap();
        g.check_invariants().unwrap();
        let rs: Vec<f64> = (1..=200).map(|k| 0.05 * k as f64).collect();
        for w in rs.windows(3) {
            let (a, b, c) = (g.value(w[0]), g.value(w[1]), g.value(w[2]));
            assert!(a > b && b > c && c > 0.0);
            assert!(b.ln() <= 0.5 * (a.ln() + c.ln()) + 1e-12, "log-convexity at {}", w[1]);
        }
    }
    assert!(bessel_kernel_profile(&p, 0.0).is_err());
    assert!(bessel_kernel_profile(&p, -1.0).is_err());
}

#[test]
fn kernel_constant_against_gamma_oracle() {
    // C = 2^{(n-|a|-ν)/2+1} / (Γ(ν/2) Π Γ(α+1))
    let p = BesselParams::new(vec![0.25f64, 0.75]).unwrap();
    let nu = 1.5;
    let nn = p.hom_dim();
    let kappa = (nn - nu) / 2.0;
    let c = 2f64.powf((2.0 - p.abs_a() - nu) / 2.0 + 1.0)
        / (lanczos_gamma(nu / 2.0) * lanczos_gamma(1.25) * lanczos_gamma(1.75));
    let r = 0.8;
    let expect = c * k_oracle(kappa, r) * r.powf(-kappa);
    assert_relative_eq!(bessel_kernel_value(&p, nu, r).unwrap(), expect, max_relative = 1e-9);
    assert_relative_eq!(gamma(0.5f64), PI.sqrt(), max_relative = 1e-14);
}

#[test]
fn scaling() {
    let p = BesselParams::uniform(0.25f64, 1).unwrap();
    let g = bessel_kernel_profile(&p, 1.0).unwrap();
    let same = scale_profile(&g, 1.0).unwrap();
    let gb = scaled_bessel_one(&p, 1.0).unwrap();
    for &r in &[0.01, 0.5, 2.0] {
        assert_eq!(same.value(r), g.value(r));
        assert_eq!(gb.value(r), g.value(r));
        let s = scale_profile(&g, 3.0).unwrap();
        assert_eq!(s.value(r), g.value(3.0 * r));
    }
    assert!(scale_profile(&g, 0.0).is_err());
    assert!(scaled_bessel_one(&p, -1.0).is_err());
    let a = p.a(0);
    for beta in [0.25, 4.0] {
        let gb = scaled_bessel_one(&p, beta).unwrap();
        let mass = simpson_singular(&|r: f64| gb.value(r) * r.powf(a), 0.0, 1.0, 1e-13)
            + simpson(&|r: f64| gb.value(r) * r.powf(a), 1.0, 200.0, 1e-13);
        assert!((mass - beta.powf(-0.5)).abs() < 1e-6, "beta {beta}: {mass}");
        let g2 = scaled_bessel(&p, 2.0, beta).unwrap();
        let mass2 = simpson_singular(&|r: f64| g2.value(r) * r.powf(a), 0.0, 1.0, 1e-13)
            + simpson(&|r: f64| g2.value(r) * r.powf(a), 1.0, 200.0, 1e-13);
        assert!((mass2 - 1.0 / beta).abs() < 1e-6);
    }
}

#[test]
fn f32_kernel_smoke() {
    let p = BesselParams::uniform(0.5f32, 1).unwrap();
    let g = bessel_kernel_profile(&p, 2.0f32).unwrap();
    assert!((g.value(1.0) - (-1.0f32).exp()).abs() < 1e-5);
    assert!((modified_bessel_k(0.5f32, 1.0).unwrap() - 0.461_068_5).abs() < 1e-5);
}

proptest! {
    #[test]
    fn entire_bessel_matches_series(alpha in -0.45f64..3.0, x in 0.0f64..8.0) {
        let v = entire_bessel_j(alpha, x).unwrap();
        prop_assert!((v - entire_j_series(alpha, x)).abs() < 1e-9);
        prop_assert!(v.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn k_positive_and_decreasing(alpha in 0.0f64..4.0, x in 0.01f64..30.0) {
        let a = modified_bessel_k(alpha, x).unwrap();
        let b = modified_bessel_k(alpha, x * 1.1).unwrap();
        prop_assert!(a > 0.0 && b < a);
    }
}
