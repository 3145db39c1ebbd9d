mod common;

use approx::assert_relative_eq;
use besselpot::convolution::convolve;
use besselpot::hankel::{default_xi_grid, hankel_radial, hankel_transform, inverse_hankel_transform, XI_CELLS, XI_MAX};
use besselpot::measure::{Factor, Shape};
use besselpot::{BesselParams, Error, Grid, GridFunction};
use common::{entire_j_series, lanczos_gamma};
use proptest::prelude::*;

/// `𝓗(e^{-x²})(ξ) = Γ(α+1)/2 · e^{-ξ²/4}`.
fn gaussian_transform(alpha: f64, xi: f64) -> f64 {
    lanczos_gamma(alpha + 1.0) / 2.0 * (-xi * xi / 4.0).exp()
}

#[test]
fn radial_gaussian_closed_form() {
    for &alpha in &[-0.25, 0.0, 0.5, 1.75] {
        let p = BesselParams::uniform(alpha, 1).unwrap();
        let g = Factor::new(1.0, Shape::Gaussian { center: 0.0, width: 0.5f64.sqrt() });
        let xi = [0.0, 0.5, 1.0, 3.0, 6.0];
        let h = hankel_radial(&g, &p, &xi).unwrap();
        for (&y, v) in xi.iter().zip(h) {
            assert!((v - gaussian_transform(alpha, y)).abs() < 1e-9, "alpha {alpha} xi {y}: {v}");
        }
    }
}

#[test]
fn indicator_is_exact_on_aligned_grid() {
    // ∫_0^R j_α(xξ) x^{2α+1} dx = R^{2α+2} j_{α+1}(Rξ) / (2α+2)
    for &alpha in &[-0.25, 0.5, 1.0] {
        let p = BesselParams::uniform(alpha, 1).unwrap();
        let grid = Grid::new(&p, 4.0, 64).unwrap();
        let r = 1.5;
        let f = GridFunction::from_fn(grid.clone(), |x: &[f64]| if x[0] < r { 1.0 } else { 0.0 });
        let xi = default_xi_grid(&p).unwrap();
        let pair = hankel_transform(&f, &xi, &p).unwrap();
        for (y, v) in pair.rows().into_iter().step_by(16) {
            let e = r.powf(2.0 * alpha + 2.0) * entire_j_series(alpha + 1.0, r * y) / (2.0 * alpha + 2.0);
            assert!((v - e).abs() < 1e-11, "alpha {alpha} xi {y}: {v} vs {e}");
        }
    }
}

#[test]
fn grid_gaussian_and_round_trip() {
    let p = BesselParams::uniform(0.25, 1).unwrap();
    let grid = Grid::new(&p, 10.0, 512).unwrap();
    let f = GridFunction::from_cell_average(grid.clone(), |x: &[f64]| (-x[0] * x[0]).exp());
    let xi = default_xi_grid(&p).unwrap();
    let pair = hankel_transform(&f, &xi, &p).unwrap();
    let peak = gaussian_transform(0.25, 0.0);
    for (y, v) in pair.rows() {
        assert!((v - gaussian_transform(0.25, y)).abs() < 1e-4 * peak, "xi {y}: {v}");
    }
    let back = pair.inverse().unwrap();
    for (k, &x) in grid.nodes().iter().enumerate().filter(|(_, &x)| x < 3.0) {
        assert!((back.values()[k] - (-x * x).exp()).abs() < 1e-3, "x {x}: {}", back.values()[k]);
    }
    assert_eq!(pair.params(), &p);
    assert_eq!(pair.source().values(), f.values());
}

#[test]
fn transform_turns_convolution_into_product() {
    let alpha = 0.25;
    let p = BesselParams::uniform(alpha, 1).unwrap();
    let grid = Grid::new(&p, 8.0, 128).unwrap();
    let f = GridFunction::from_cell_average(grid.clone(), |x: &[f64]| (-x[0] * x[0]).exp());
    let g = GridFunction::from_cell_average(grid.clone(), |x: &[f64]| (-2.0 * x[0] * x[0]).exp());
    let fg = convolve(&f, &g, &p).unwrap();
    let xi = default_xi_grid(&p).unwrap();
    let pair = hankel_transform(&fg, &xi, &p).unwrap();
    // 𝓗(e^{-cx²})(ξ) = Γ(α+1)/(2c^{α+1}) e^{-ξ²/(4c)}
    let gauss = |c: f64, y: f64| lanczos_gamma(alpha + 1.0) / (2.0 * c.powf(alpha + 1.0)) * (-y * y / (4.0 * c)).exp();
    let peak = gauss(1.0, 0.0) * gauss(2.0, 0.0);
    for (y, v) in pair.rows() {
        let e = gauss(1.0, y) * gauss(2.0, y);
        assert!((v - e).abs() < 1e-3 * peak, "xi {y}: {v} vs {e}");
    }
}

#[test]
fn separable_two_dimensional_transform() {
    let p = BesselParams::new(vec![0.0, 0.75]).unwrap();
    let grid = Grid::new(&p, 6.0, 96).unwrap();
    let f = GridFunction::from_cell_average(grid.clone(), |x: &[f64]| (-x[0] * x[0] - x[1] * x[1]).exp());
    let xi = Grid::new(&p, 6.0, 24).unwrap();
    let pair = hankel_transform(&f, &xi, &p).unwrap();
    let peak = gaussian_transform(0.0, 0.0) * gaussian_transform(0.75, 0.0);
    for k in 0..xi.len() {
        let y = xi.point(k);
        let e = gaussian_transform(0.0, y[0]) * gaussian_transform(0.75, y[1]);
        assert!((pair.forward().values()[k] - e).abs() < 1e-3 * peak, "xi {y:?}");
    }
    let back = inverse_hankel_transform(pair.forward(), &grid).unwrap();
    assert_eq!(back.grid().len(), grid.len());
}

#[test]
fn default_frequency_grid() {
    let p = BesselParams::<f64>::uniform(0.5, 1).unwrap();
    let xi = default_xi_grid(&p).unwrap();
    assert_eq!(xi.m(), XI_CELLS);
    assert_relative_eq!(xi.x_max(), XI_MAX);
}

#[test]
fn errors() {
    let p = BesselParams::uniform(0.5, 1).unwrap();
    let q = BesselParams::uniform(1.0, 1).unwrap();
    let grid = Grid::new(&p, 4.0, 8).unwrap();
    let f = GridFunction::zeros(grid.clone());
    let xi_q = Grid::new(&q, 4.0, 8).unwrap();
    assert!(matches!(hankel_transform(&f, &grid, &q), Err(Error::GridMismatch(_))));
    assert!(matches!(hankel_transform(&f, &xi_q, &p), Err(Error::GridMismatch(_))));
    let g = Factor::new(1.0, Shape::Gaussian { center: 0.0, width: 1.0 });
    assert!(hankel_radial(&g, &p, &[-1.0]).is_err());
    assert!(matches!(
        hankel_radial(&g, &BesselParams::uniform(0.5, 2).unwrap(), &[1.0]),
        Err(Error::Unsupported(_))
    ));
    let unbounded = Factor::new(1.0, Shape::Exp(-1.0));
    assert!(hankel_radial(&unbounded, &p, &[1.0]).is_err());
}

#[test]
fn f32_transform_smoke() {
    let p = BesselParams::<f32>::uniform(0.5, 1).unwrap();
    let grid = Grid::new(&p, 4.0, 32).unwrap();
    let f = GridFunction::from_fn(grid.clone(), |x: &[f32]| if x[0] < 1.0 { 1.0 } else { 0.0 });
    let xi = Grid::new(&p, 4.0, 8).unwrap();
    let pair = hankel_transform(&f, &xi, &p).unwrap();
    let (y, v) = pair.rows()[0];
    let e = entire_j_series(1.5, y as f64) / 3.0;
    assert!((v as f64 - e).abs() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_is_linear_and_bounded(
        vals in proptest::collection::vec(-1.0f64..1.0, 32),
        s in -2.0f64..2.0,
        alpha in -0.4f64..2.0,
    ) {
        let p = BesselParams::uniform(alpha, 1).unwrap();
        let grid = Grid::new(&p, 4.0, 32).unwrap();
        let xi = Grid::new(&p, 6.0, 16).unwrap();
        let f = GridFunction::new(grid.clone(), vals).unwrap();
        let a = hankel_transform(&f, &xi, &p).unwrap();
        let b = hankel_transform(&f.scale(s), &xi, &p).unwrap();
        let l1: f64 = f.values().iter().zip(grid.weights()).map(|(v, w)| v.abs() * w).sum();
        for (x, y) in a.forward().values().iter().zip(b.forward().values()) {
            prop_assert!((s * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
            // |j_α| ≤ 1 for α ≥ -1/2
            prop_assert!(x.abs() <= l1 * (1.0 + 1e-10));
        }
    }
}
