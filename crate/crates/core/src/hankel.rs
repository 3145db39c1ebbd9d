//! Hankel transform `𝓗_a f(ξ) = ∫ f(x) ∏ j_{α_i}(x_i ξ_i) x^a dx` and its inverse.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::params::BesselParams;
use crate::quad::{gauss_legendre, make_radial_rule, Integrator};
use crate::scalar::{lit, Real};
use crate::specfun::{EntireBessel, Radial};
use crate::translation::apply_kronecker_rect;

/// Default frequency box `[0, 8]`.
pub const XI_MAX: f64 = 8.0;
/// Default number of frequency cells per axis.
pub const XI_CELLS: usize = 257;

/// Forward transform values on a frequency grid, with the source they came from.
#[derive(Debug, Clone)]
pub struct HankelPair<T> {
    forward: GridFunction<T>,
    source: GridFunction<T>,
}

impl<T: Real> HankelPair<T> {
    pub fn forward(&self) -> &GridFunction<T> {
        &self.forward
    }

    pub fn source(&self) -> &GridFunction<T> {
        &self.source
    }

    pub fn params(&self) -> &BesselParams<T> {
        self.source.grid().params()
    }

    /// Frequency nodes and values along the first axis (all other indices at the first cell).
    pub fn rows(&self) -> Vec<(T, T)> {
        let g = self.forward.grid();
        let stride = g.len() / g.m();
        g.nodes()
            .iter()
            .enumerate()
            .map(|(k, &xi)| (xi, self.forward.values()[k * stride]))
            .collect()
    }

    /// Inverse transform back onto the source grid.
    pub fn inverse(&self) -> Result<GridFunction<T>> {
        inverse_hankel_transform(&self.forward, self.source.grid())
    }
}

/// Cell-centred frequency grid on `[0, 8]` with 257 cells per axis.
pub fn default_xi_grid<T: Real>(params: &BesselParams<T>) -> Result<Arc<Grid<T>>> {
    Grid::new(params, lit(XI_MAX), XI_CELLS)
}

/// `J[k][j] = ∫_{cell j of src} s^a j_α(s y_k) ds` for one axis.
fn axis_matrix<T: Real>(alpha: T, a: T, src: &Grid<T>, targets: &[T]) -> Result<Vec<T>> {
    let q = 8;
    let jb = EntireBessel::new(alpha)?;
    let gl = gauss_legendre::<T>(q)?;
    let rad = make_radial_rule(a, q)?;
    let h = src.h();
    let m = src.m();
    let cells: Vec<Vec<(T, T)>> = (0..m)
        .map(|k| {
            if k == 0 {
                rad.nodes
                    .iter()
                    .zip(&rad.weights)
                    .map(|(&u, &w)| (u * h, w * h.powf(a + T::one())))
                    .collect()
            } else {
                let lo = T::of(k) * h;
                gl.nodes
                    .iter()
                    .zip(&gl.weights)
                    .map(|(&u, &w)| {
                        let s = lo + h * lit(0.5) * (u + T::one());
                        (s, w * h * lit(0.5) * s.powf(a))
                    })
                    .collect()
            }
        })
        .collect();
    Ok(targets
        .par_iter()
        .flat_map_iter(|&y| {
            cells
                .iter()
                .map(|pts| pts.iter().map(|&(s, w)| w * jb.eval(s * y)).sum::<T>())
                .collect::<Vec<_>>()
        })
        .collect())
}

fn transform<T: Real>(f: &GridFunction<T>, target: &Arc<Grid<T>>, constant: T) -> Result<GridFunction<T>> {
    let src = f.grid();
    if src.params() != target.params() {
        return Err(Error::GridMismatch("source and target grids use different weights".into()));
    }
    let params = src.params();
    let mats = (0..params.n())
        .map(|i| axis_matrix(params.alpha(i), params.a(i), src, target.nodes()))
        .collect::<Result<Vec<_>>>()?;
    let mut out = apply_kronecker_rect(&mats, target.m(), src.m(), f.values());
    for v in &mut out {
        *v = *v * constant;
    }
    GridFunction::new(target.clone(), out)
}

/// Forward transform of the piecewise-constant function carried by `f`, sampled at the
/// nodes of `xi`. Cell integrals of `x^a j_α(xξ)` use an 8-point rule per cell.
pub fn hankel_transform<T: Real>(
    f: &GridFunction<T>,
    xi: &Arc<Grid<T>>,
    params: &BesselParams<T>,
) -> Result<HankelPair<T>> {
    if f.grid().params() != params {
        return Err(Error::GridMismatch("grid weight differs from params".into()));
    }
    Ok(HankelPair {
        forward: transform(f, xi, T::one())?,
        source: f.clone(),
    })
}

/// Inverse transform `f(x) = c ∫ f̂(ξ) ∏ j_{α_i}(x_i ξ_i) ξ^a dξ` with the Parseval constant `c`.
pub fn inverse_hankel_transform<T: Real>(fhat: &GridFunction<T>, x: &Arc<Grid<T>>) -> Result<GridFunction<T>> {
    let c = fhat.grid().params().parseval_constant();
    transform(fhat, x, c)
}

/// `𝓗_a g(ξ)` for a radial profile in one dimension, by adaptive panel quadrature.
pub fn hankel_radial<T: Real>(g: &dyn Radial<T>, params: &BesselParams<T>, xi: &[T]) -> Result<Vec<T>> {
    if params.n() != 1 {
        return Err(Error::Unsupported("radial transform is one-dimensional".into()));
    }
    let reach = g
        .reach()
        .ok_or_else(|| invalid("profile", "needs a finite reach"))?;
    let a = params.a(0);
    let jb = EntireBessel::new(params.alpha(0))?;
    let breaks = g.breakpoints();
    xi.par_iter()
        .map(|&y| {
            if !(y >= T::zero()) {
                return Err(invalid("xi", "must be non-negative"));
            }
            let step = if y > T::zero() { (T::PI() / y).min(lit(2.0)) } else { lit(2.0) };
            let integ = Integrator::new(3, step);
            Ok(integ.integrate(|r| g.value(r) * r.powf(a) * jb.eval(r * y), T::zero(), reach, &breaks, &[T::zero()]))
        })
        .collect()
}
