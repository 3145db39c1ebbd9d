mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use besselpot::eigen::{
    bound_from_table, bracket_with, calibrate_from_cases, calibrate_thresholds, cube_bounds, cube_table,
    direct_eigenpair, discretize_hamiltonian, least_eigenpair, least_eigenvalue, phi2, phi2_beta, BetaStrategy,
    CubeFamily, CubeFunctional, CubeValue, DiscreteHamiltonian, EigenSettings, TrainingCase,
};
use besselpot::geometry::OrthantCube;
use besselpot::trace::potential;
use common::simpson;
use besselpot::measure::{DensityMeasure, Factor, Shape};
use besselpot::{BesselParams, Error, Grid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ground energy of `c χ_{[0,R]}` for `a = 2`: `k cot(kR) = -√(c-k²)`.
fn square_well_oracle(c: f64, r: f64) -> f64 {
    let f = |k: f64| k / (k * r).tan() + (c - k * k).sqrt();
    let (mut lo, mut hi) = (PI / (2.0 * r), (PI / r).min(c.sqrt()) - 1e-14);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    k * k - c
}

fn well(c: f64, r: f64) -> DensityMeasure<f64> {
    DensityMeasure::indicator(c, &[0.0], &[r]).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn operator_is_self_adjoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for alphas in [vec![0.25], vec![-0.25, 1.0]] {
        let p = BesselParams::new(alphas).unwrap();
        let m = if p.n() == 1 { 200 } else { 20 };
        let grid = Grid::new(&p, 6.0, m).unwrap();
        let v = DensityMeasure::indicator(3.0, &vec![0.0; p.n()], &vec![1.5; p.n()]).unwrap();
        let h = discretize_hamiltonian(&v, &grid, &p).unwrap();
        for _ in 0..5 {
            let u = random_vec(&mut rng, h.len());
            let w = random_vec(&mut rng, h.len());
            let lhs = h.inner(&h.apply(&u), &w);
            let rhs = h.inner(&u, &h.apply(&w));
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()), "{lhs} vs {rhs}");
        }
    }
}

#[test]
fn free_operator_is_non_negative() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = BesselParams::uniform(0.5, 1).unwrap();
    let grid = Grid::new(&p, 8.0, 128).unwrap();
    let h = discretize_hamiltonian(&DensityMeasure::zero(1), &grid, &p).unwrap();
    assert!(least_eigenvalue(&h, 1e-10).unwrap() >= -1e-8);
    for _ in 0..10 {
        assert!(h.rayleigh(&random_vec(&mut rng, h.len())) >= -1e-12);
    }
    assert_eq!(h.spectrum_floor(), 0.0);
}

#[test]
fn weighted_laplacian_of_square() {
    // Δ_a x² = 2(a+1) = 4α + 4, exact for the flux form away from the outer wall
    for &alpha in &[-0.25, 0.5, 2.0] {
        let p = BesselParams::uniform(alpha, 1).unwrap();
        let grid = Grid::new(&p, 4.0, 64).unwrap();
        let h = discretize_hamiltonian(&DensityMeasure::zero(1), &grid, &p).unwrap();
        let u: Vec<f64> = grid.nodes().iter().map(|x| x * x).collect();
        let hu = h.apply(&u);
        for &v in &hu[..grid.m() - 1] {
            assert_relative_eq!(-v, 4.0 * alpha + 4.0, max_relative = 1e-9);
        }
    }
}

#[test]
fn eigenvalue_below_rayleigh_quotients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = BesselParams::uniform(0.5, 1).unwrap();
    let grid = Grid::new(&p, 12.0, 256).unwrap();
    let h = discretize_hamiltonian(&well(4.0, 1.0), &grid, &p).unwrap();
    let pair = least_eigenpair(&h, 1e-10).unwrap();
    assert!(pair.residual <= 1e-10 * (1.0 + pair.value.abs()));
    for _ in 0..10 {
        let u: Vec<f64> = random_vec(&mut rng, h.len()).iter().zip(pair.vector.values()).map(|(a, b)| b + 0.1 * a).collect();
        assert!(h.rayleigh(&u) >= pair.value - 1e-12);
    }
    assert_relative_eq!(h.rayleigh(pair.vector.values()), pair.value, epsilon = 1e-10);
    assert!(pair.vector.values().iter().all(|&x| x >= -1e-12));
    let decay = (-pair.value).sqrt();
    assert!(pair.tail_mass(0.5) < (-2.0 * decay * 4.0).exp(), "{}", pair.tail_mass(0.5));
}

#[test]
fn square_wells_match_oracle() {
    let p = BesselParams::uniform(0.5, 1).unwrap();
    for &(c, r) in &[(3.0, 2.0), (6.0, 1.0), (5.0, 1.5)] {
        let settings = EigenSettings { x_max: 16.0, m: 2048, tol: 1e-11 };
        let lam = direct_eigenpair(&well(c, r), &p, &settings).unwrap().value;
        let o = square_well_oracle(c, r);
        assert!((lam - o).abs() < 1e-3, "c {c} R {r}: {lam} vs {o}");
    }
}

#[test]
fn constant_potentials_in_two_dimensions() {
    let p = BesselParams::new(vec![0.0, 0.5]).unwrap();
    let v = DensityMeasure::constant(2, 2.5).unwrap();
    let pair = direct_eigenpair(&v, &p, &EigenSettings { x_max: 6.0, m: 24, tol: 1e-10 }).unwrap();
    assert_relative_eq!(pair.value, -2.5, epsilon = 1e-8);
}

#[test]
fn separable_potential_adds_eigenvalues() {
    let p = BesselParams::uniform(0.5, 2).unwrap();
    let p1 = BesselParams::uniform(0.5, 1).unwrap();
    let (x_max, m) = (8.0, 48);
    let f1 = vec![Factor::new(4.0, Shape::Constant).clipped(0.0, 1.0), Factor::new(1.0, Shape::Constant)];
    let f2 = vec![Factor::new(1.0, Shape::Constant), Factor::new(5.0, Shape::Constant).clipped(0.0, 1.5)];
    let v = DensityMeasure::product(f1).unwrap().plus(&DensityMeasure::product(f2).unwrap()).unwrap();
    let settings = EigenSettings { x_max, m, tol: 1e-9 };
    let lam = direct_eigenpair(&v, &p, &settings).unwrap().value;
    let l1 = direct_eigenpair(&well(4.0, 1.0), &p1, &settings).unwrap().value;
    let l2 = direct_eigenpair(&well(5.0, 1.5), &p1, &settings).unwrap().value;
    assert_relative_eq!(lam, l1 + l2, epsilon = 1e-7);
}

#[test]
fn hamiltonian_validation() {
    let p = BesselParams::uniform(0.5, 1).unwrap();
    let grid = Grid::new(&p, 4.0, 16).unwrap();
    let q = BesselParams::uniform(1.0, 1).unwrap();
    assert!(matches!(DiscreteHamiltonian::new(&well(1.0, 1.0), &grid, &q), Err(Error::GridMismatch(_))));
    assert!(DiscreteHamiltonian::new(&DensityMeasure::lebesgue(2), &grid, &p).is_err());
    assert!(DensityMeasure::constant(1, -1.0).is_err());
    assert!(DiscreteHamiltonian::with_cell_potential(&grid, vec![1.0; 15]).is_err());
    assert!(DiscreteHamiltonian::with_cell_potential(&grid, vec![-1.0; 16]).is_err());
    let h = DiscreteHamiltonian::with_cell_potential(&grid, vec![2.0; 16]).unwrap();
    assert_eq!(h.potential(), &[2.0; 16][..]);
    assert!(!h.is_empty());
    assert_relative_eq!(least_eigenvalue(&h, 1e-10).unwrap(), -2.0, epsilon = 1e-10);
    assert!(least_eigenpair(&h, 0.0).is_err());
}

#[test]
fn cube_functional_is_homogeneous() {
    let p = BesselParams::uniform(0.5, 1).unwrap();
    let q = OrthantCube::from_corner(&[0.0], 2.0).unwrap();
    let v = well(3.0, 1.5);
    let one = phi2(&v, &q, &p).unwrap();
    let two = phi2(&v.scaled(2.0), &q, &p).unwrap();
    assert_relative_eq!(two, 2.0 * one, max_relative = 1e-10);
    let far = OrthantCube::from_corner(&[4.0], 1.0).unwrap();
    assert!(matches!(phi2(&v, &far, &p), Err(Error::EmptyCube(_))));
    assert!(phi2_beta(&v, &q, &p, 0.0).is_err());
    assert!(CubeFunctional::new(&p, BetaStrategy::Fixed(-1.0)).is_err());
}

#[test]
fn quadratic_form_identity() {
    // ∫ (G ∗ f) f x^a dx = c ∫ |𝓗f(ξ)|² (1+ξ²)^{-1} ξ^a dξ for f = c₀ χ_[0,R), a = 2
    let p = BesselParams::uniform(0.5, 1).unwrap();
    let (c0, r): (f64, f64) = (3.0, 1.0);
    let q = OrthantCube::from_corner(&[0.0], r).unwrap();
    let v = well(c0, r);
    let mass = c0 * r.powi(3) / 3.0;
    let lhs = phi2(&v, &q, &p).unwrap() * mass;
    let j32 = |z: f64| {
        if z < 1e-3 {
            1.0 - z * z / 10.0
        } else {
            3.0 * (z.sin() - z * z.cos()) / z.powi(3)
        }
    };
    let g = |y: f64| (mass * j32(r * y)).powi(2) / (1.0 + y * y) * y * y;
    let (top, steps) = (400.0, 400_000);
    let h = top / steps as f64;
    let mut integral = g(0.0) + g(top);
    for k in 1..steps {
        integral += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
    }
    integral *= h / 3.0;
    // j_{3/2}(z)² averages to 9/(2z⁴) for large z
    integral += mass * mass * 9.0 / (2.0 * r.powi(4)) / (3.0 * top.powi(3));
    let rhs = p.parseval_constant() * integral;
    assert_relative_eq!(lhs, rhs, max_relative = 1e-6);
}

#[test]
fn square_of_the_half_order_potential() {
    // G_{a,1} ∗ G_{a,1} = G_{a,2}, so ∫ (G_{a,1} ∗ v_Q)² x^a dx = ∫ (G_{a,2} ∗ v_Q) v_Q x^a dx
    let p = BesselParams::uniform(0.25, 1).unwrap();
    let v = well(1.0, 1.0);
    let q = OrthantCube::new(vec![1.0], 0.5).unwrap();
    let vq = v.restrict(&q.lo(), &q.hi());
    let a = p.a(0);
    let rhs = phi2(&v, &q, &p).unwrap() * (1.0 - 0.5f64.powf(a + 1.0)) / (a + 1.0);
    let u2 = |x: f64| potential(&vq, 1.0, &[x], &p).unwrap().powi(2) * x.powf(a);
    let lhs: f64 = [0.0, 0.5, 1.0, 4.0, 40.0]
        .windows(2)
        .map(|w| simpson(&u2, w[0], w[1], 1e-9))
        .sum();
    assert_relative_eq!(lhs, rhs, max_relative = 1e-3);
}

#[test]
fn beta_scaling_through_dilation() {
    // Φ^β(Q; v) = Φ^1(√β Q; β^{-1} v(·/√β))
    let p = BesselParams::uniform(0.25, 1).unwrap();
    let v = DensityMeasure::product(vec![Factor::new(
        2.0,
        Shape::Linear { nodes: vec![0.0, 1.0], values: vec![1.0, 0.5], extend: false },
    )])
    .unwrap();
    let q = OrthantCube::from_corner(&[0.0], 1.0).unwrap();
    for beta in [0.25, 4.0] {
        let s: f64 = f64::sqrt(beta);
        let lhs = phi2_beta(&v, &q, &p, beta).unwrap();
        let moved = OrthantCube::new(q.center().iter().map(|c| c * s).collect(), q.half() * s).unwrap();
        let w = v.dilated(1.0 / s).unwrap().scaled(1.0 / beta);
        let rhs = phi2(&w, &moved, &p).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
    }
}

#[test]
fn bounds_are_monotone_in_thresholds() {
    let p = BesselParams::uniform(0.5, 1).unwrap();
    let functional = CubeFunctional::new(&p, BetaStrategy::PerCube).unwrap();
    let family = CubeFamily::dyadic(8.0, 4);
    let table = cube_table(&well(4.0, 1.5), &family, &functional).unwrap();
    assert!(!table.is_empty());
    let levels = [0.05, 0.1, 0.2, 0.4, 0.8, 1.6];
    let bounds: Vec<f64> = levels.iter().map(|&t| bound_from_table(&table, t)).collect();
    assert!(bounds.windows(2).all(|w| w[0] >= w[1]), "{bounds:?}");
    let r = bracket_with(&well(4.0, 1.5), 0.1, 0.4, &family, &functional).unwrap();
    assert!(r.lower <= r.upper);
    assert_eq!(r.lower, bound_from_table(&r.cubes, 0.4));
    assert!(r.brackets().is_none());
}

#[test]
fn zero_potential_gives_zero_bounds() {
    let p = BesselParams::uniform(0.5, 1).unwrap();
    let r = cube_bounds(&DensityMeasure::zero(1), 0.5, 1.0, &CubeFamily::dyadic(8.0, 3), &p).unwrap();
    assert_eq!((r.lower, r.upper), (0.0, 0.0));
    assert!(r.cubes.is_empty());
    let r = r.with_lambda1(0.0);
    assert_eq!(r.brackets(), Some(true));
    assert!(r.upper_restricted.is_none());
}

#[test]
fn threshold_validation() {
    let p = BesselParams::uniform(0.5, 1).unwrap();
    let family = CubeFamily::dyadic(8.0, 2);
    assert!(cube_bounds(&well(1.0, 1.0), 2.0, 1.0, &family, &p).is_err());
    assert!(cube_bounds(&well(1.0, 1.0), 0.0, 1.0, &family, &p).is_err());
    assert!(cube_bounds(&well(1.0, 1.0), 0.5, f64::INFINITY, &family, &p).is_err());
    let bad = CubeFamily::Graded { x_max: 8.0, min_edge: 0.0, per_octave: 2 };
    assert!(bad.cubes(1).is_err());
    let graded = CubeFamily::Graded { x_max: 4.0, min_edge: 1.0, per_octave: 2 };
    // edges 4, 2√2, 2, √2, 1 on a half-edge lattice
    let cubes = graded.cubes(1).unwrap();
    assert_eq!(cubes.len(), 2 + 3 + 4 + 6 + 8);
}

#[test]
fn calibration_needs_training_data() {
    let p = BesselParams::uniform(0.5, 1).unwrap();
    assert!(matches!(calibrate_from_cases::<f64>(&[]), Err(Error::Empty(_))));
    assert!(matches!(
        calibrate_thresholds(&[], &CubeFamily::dyadic(8.0, 2), &p, &EigenSettings::default()),
        Err(Error::Empty(_))
    ));
}

#[test]
fn calibration_from_synthetic_tables() {
    let cube = |l: f64| OrthantCube::from_corner(&[0.0], l).unwrap();
    // -λ₁ = 1: cubes with l^-2 > 1 set the need, l^-2 >= 1 the allowance
    let case = TrainingCase {
        lambda1: -1.0,
        table: vec![
            CubeValue { cube: cube(0.5), phi: 0.3 },
            CubeValue { cube: cube(1.0), phi: 0.6 },
            CubeValue { cube: cube(2.0), phi: 0.9 },
        ],
    };
    assert_eq!(case.lower_need(), 0.3);
    assert_eq!(case.upper_allow(), 0.6);
    let cal = calibrate_from_cases(&[case.clone()]).unwrap();
    assert!(cal.b > 0.3 && cal.b < 0.3 + 1e-9);
    assert_eq!(cal.a, cal.b);
    let r = besselpot::eigen::BracketResult::from_table(case.table.clone(), cal.a, cal.b, BetaStrategy::PerCube)
        .unwrap()
        .with_lambda1(-1.0);
    assert_eq!(r.brackets(), Some(true));
    let starved = TrainingCase { lambda1: -100.0, table: case.table.clone() };
    assert!(matches!(calibrate_from_cases(&[starved]), Err(Error::Calibration(_))));
}

#[test]
fn calibration_brackets_its_training_set() {
    let p = BesselParams::uniform(0.5, 1).unwrap();
    let family = CubeFamily::dyadic(8.0, 4);
    let settings = EigenSettings { x_max: 24.0, m: 512, tol: 1e-9 };
    let training = [well(4.0, 1.0), well(3.0, 2.0)];
    let cal = calibrate_thresholds(&training, &family, &p, &settings).unwrap();
    assert!(cal.a > 0.0 && cal.a <= cal.b);
    assert_eq!(cal.report.len(), 2);
    for v in &training {
        let lam = direct_eigenpair(v, &p, &settings).unwrap().value;
        let r = cube_bounds(v, cal.a, cal.b, &family, &p).unwrap().with_lambda1(lam);
        assert_eq!(r.brackets(), Some(true), "L {} -λ {} U {}", r.lower, -lam, r.upper);
    }
}

#[test]
fn f32_eigen_smoke() {
    let p = BesselParams::<f32>::uniform(0.5, 1).unwrap();
    let v = DensityMeasure::constant(1, 3.0f32).unwrap();
    let pair = direct_eigenpair(&v, &p, &EigenSettings { x_max: 8.0, m: 64, tol: 1e-4 }).unwrap();
    assert!((pair.value + 3.0).abs() < 1e-4, "{}", pair.value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn deeper_wells_bind_more(c in 1.0f64..6.0, dc in 0.1f64..2.0, r in 0.5f64..2.0) {
        let p = BesselParams::uniform(0.5, 1).unwrap();
        let settings = EigenSettings { x_max: 16.0, m: 256, tol: 1e-9 };
        let a = direct_eigenpair(&well(c, r), &p, &settings).unwrap().value;
        let b = direct_eigenpair(&well(c + dc, r), &p, &settings).unwrap().value;
        prop_assert!(b <= a + 1e-12);
        prop_assert!(a >= -c - 1e-9);
    }
}
