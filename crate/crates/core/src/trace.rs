//! Trace-inequality diagnostics: the potential `G_{a,ν} ∗ γ`, the cube condition, the
//! pointwise condition and lower bounds for the trace constant.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::convolution::{Convolver, GridConvolver, KernelOperator};
use crate::error::{invalid, Error, Result};
use crate::geometry::{cube_mass, OrthantCube};
use crate::grid::{Grid, GridFunction};
use crate::measure::{DensityMeasure, Factor, MeasureKind, Shape};
use crate::params::BesselParams;
use crate::quad::{gauss_legendre, Integrator};
use crate::scalar::{lit, Real};
use crate::specfun::{bessel_kernel_profile, Radial, RadialProfile};

/// `x ↦ (G_{a,ν} ∗ γ)(x)` with the kernel table built once.
#[derive(Debug, Clone)]
pub struct Potential<T> {
    kernel: RadialProfile<T>,
    conv: Convolver<T>,
    nu: T,
}

impl<T: Real> Potential<T> {
    pub fn new(params: &BesselParams<T>, nu: T) -> Result<Self> {
        Ok(Self {
            kernel: bessel_kernel_profile(params, nu)?,
            conv: Convolver::new(params)?,
            nu,
        })
    }

    pub fn nu(&self) -> T {
        self.nu
    }

    pub fn kernel(&self) -> &RadialProfile<T> {
        &self.kernel
    }

    pub fn params(&self) -> &BesselParams<T> {
        self.conv.params()
    }

    /// Layer-cake evaluation.
    pub fn eval(&self, gamma: &DensityMeasure<T>, x: &[T]) -> Result<T> {
        self.conv.layer_cake(&self.kernel, gamma, x)
    }
}

/// `(G_{a,ν} ∗ γ)(x)` by the layer-cake route.
pub fn potential<T: Real>(gamma: &DensityMeasure<T>, nu: T, x: &[T], params: &BesselParams<T>) -> Result<T> {
    Potential::new(params, nu)?.eval(gamma, x)
}

/// Trace problem data: exponent, order, measure and the finite families used for
/// estimating the constants.
#[derive(Debug, Clone)]
pub struct TraceProblem<T> {
    pub params: BesselParams<T>,
    p: T,
    p_conj: T,
    pub nu: T,
    pub gamma: DensityMeasure<T>,
    pub cubes: Vec<OrthantCube<T>>,
    pub points: Vec<Vec<T>>,
    pub tests: Vec<GridFunction<T>>,
    potential: Arc<Potential<T>>,
    convolver: OnceLock<Arc<GridOp<T>>>,
}

#[derive(Debug)]
enum GridOp<T> {
    Kernel(KernelOperator<T>),
    Pair(GridConvolver<T>),
}

impl<T: Real> GridOp<T> {
    fn grid(&self) -> &Arc<Grid<T>> {
        match self {
            GridOp::Kernel(k) => k.grid(),
            GridOp::Pair(c) => c.grid(),
        }
    }
}

impl<T: Real> TraceProblem<T> {
    pub fn new(params: &BesselParams<T>, p: T, nu: T, gamma: DensityMeasure<T>) -> Result<Self> {
        if !(p >= lit(1.1) && p <= lit(10.0)) {
            return Err(invalid("p", format!("need 1.1 <= p <= 10, got {p}")));
        }
        if !(nu > T::zero()) {
            return Err(invalid("nu", format!("need nu > 0, got {nu}")));
        }
        if gamma.n() != params.n() {
            return Err(invalid("measure", "dimension differs from params"));
        }
        Ok(Self {
            params: params.clone(),
            p,
            p_conj: p / (p - T::one()),
            nu,
            gamma,
            cubes: Vec::new(),
            points: Vec::new(),
            tests: Vec::new(),
            potential: Arc::new(Potential::new(params, nu)?),
            convolver: OnceLock::new(),
        })
    }

    pub fn p(&self) -> T {
        self.p
    }

    /// `p' = p/(p-1)`.
    pub fn p_conj(&self) -> T {
        self.p_conj
    }

    pub fn potential(&self) -> &Potential<T> {
        &self.potential
    }

    /// Same problem with `γ` replaced by `s γ`.
    pub fn with_scaled_measure(&self, s: T) -> Self {
        let mut out = self.clone();
        out.gamma = self.gamma.scaled(s);
        out
    }

    /// Dyadic cubes of `[0, X]^n` down to `depth`, evaluation points on a uniform grid and
    /// test functions (cube indicators and bounded Bessel-shaped bumps) on `grid`.
    pub fn with_default_families(mut self, grid: &Arc<Grid<T>>, depth: u32, points_per_axis: usize) -> Result<Self> {
        let x_max = grid.x_max();
        let n = self.params.n();
        self.cubes = crate::geometry::dyadic_cubes(n, x_max * lit(0.5), depth)?
            .into_iter()
            .map(|(_, q)| q)
            .filter(|q| cube_mass(&self.gamma, q, &self.params, true).map(|m| m > T::zero()).unwrap_or(false))
            .collect();
        let k = points_per_axis.max(1);
        self.points = (0..k.pow(n as u32))
            .map(|mut f| {
                let mut x = vec![T::zero(); n];
                for xi in x.iter_mut().rev() {
                    *xi = x_max * lit(0.5) * (T::of(f % k) + lit(0.5)) / T::of(k);
                    f /= k;
                }
                x
            })
            .collect();
        let mut tests: Vec<GridFunction<T>> = self
            .cubes
            .iter()
            .take(15)
            .map(|q| GridFunction::from_cell_average(grid.clone(), |x| if q.contains(x) { T::one() } else { T::zero() }))
            .collect();
        let bump = bessel_kernel_profile(&self.params, self.params.hom_dim() + T::one())?;
        for s in [lit::<T>(0.5), T::one(), lit(2.0)] {
            tests.push(GridFunction::from_cell_average(grid.clone(), |x| {
                bump.value(x.iter().map(|&v| v * v).sum::<T>().sqrt() / s)
            }));
        }
        self.tests = tests;
        Ok(self)
    }
}

/// `∫_Q (G ∗ γ|_Q)^{p'} x^a dx / γ_a(Q)`.
pub fn cube_condition_value<T: Real>(prob: &TraceProblem<T>, q: &OrthantCube<T>) -> Result<T> {
    let mass = cube_mass(&prob.gamma, q, &prob.params, true)?;
    if !(mass > T::zero()) {
        return Err(Error::EmptyCube("gamma_a(Q) = 0"));
    }
    let restricted = prob.gamma.restrict(&q.lo(), &q.hi());
    let pc = prob.p_conj;
    let pot = prob.potential();
    let f = |x: &[T]| -> Result<T> { Ok(pot.eval(&restricted, x)?.powf(pc)) };
    Ok(integrate_cube(f, q, &prob.params, &restricted)? / mass)
}

/// `∫_Q f(x) x^a dx`: adaptive in one dimension, tensor Gauss–Legendre (4 panels of 8 points
/// per axis) above.
fn integrate_cube<T: Real, F>(f: F, q: &OrthantCube<T>, params: &BesselParams<T>, gamma: &DensityMeasure<T>) -> Result<T>
where
    F: Fn(&[T]) -> Result<T> + Sync,
{
    let lo = q.lo();
    let hi = q.hi();
    if params.n() == 1 {
        let a = params.a(0);
        let mut breaks = Vec::new();
        for t in gamma.terms() {
            breaks.extend(t[0].interior_breaks());
        }
        let integ = Integrator::new(2, (hi[0] - lo[0]) * lit(0.25));
        let err = std::sync::Mutex::new(None);
        let v = integ.integrate(
            |x| match f(&[x]) {
                Ok(v) => v * x.powf(a),
                Err(e) => {
                    *err.lock().expect("lock") = Some(e);
                    T::zero()
                }
            },
            lo[0],
            hi[0],
            &breaks,
            &[lo[0], hi[0], T::zero()],
        );
        if let Some(e) = err.into_inner().expect("lock") {
            return Err(e);
        }
        return Ok(v);
    }
    let gl = gauss_legendre::<T>(8)?;
    let panels = 4;
    let axis_pts: Vec<Vec<(T, T)>> = (0..params.n())
        .map(|i| {
            let a = params.a(i);
            let w = (hi[i] - lo[i]) / T::of(panels);
            (0..panels)
                .flat_map(|k| {
                    let l = lo[i] + w * T::of(k);
                    gl.nodes
                        .iter()
                        .zip(&gl.weights)
                        .map(|(&u, &g)| {
                            let x = l + w * lit(0.5) * (u + T::one());
                            (x, g * w * lit(0.5) * x.powf(a))
                        })
                        .collect::<Vec<_>>()
                })
                .collect()
        })
        .collect();
    let per = axis_pts[0].len();
    let total = per.pow(params.n() as u32);
    (0..total)
        .into_par_iter()
        .map(|mut k| {
            let mut x = vec![T::zero(); params.n()];
            let mut w = T::one();
            for i in (0..params.n()).rev() {
                let (xi, wi) = axis_pts[i][k % per];
                k /= per;
                x[i] = xi;
                w = w * wi;
            }
            Ok(w * f(&x)?)
        })
        .sum::<Result<T>>()
}

/// `(G ∗ γ)^{p'}` as a density, tabulated along the single axis (`n = 1`) or on a grid.
fn powered_potential<T: Real>(prob: &TraceProblem<T>, x_top: T) -> Result<DensityMeasure<T>> {
    let pot = prob.potential();
    let reach = pot.kernel().reach().unwrap_or(lit(60.0));
    let pc = prob.p_conj;
    if prob.params.n() == 1 {
        let mut kinks = Vec::new();
        for t in prob.gamma.terms() {
            kinks.extend(t[0].breakpoints());
        }
        let hi = prob.gamma.support_hi(0);
        let bounded = hi.is_finite();
        let top = if bounded { hi + reach } else { x_top + reach };
        let mut nodes = Vec::new();
        let mut r = lit::<T>(1e-3);
        while r < T::one().min(top) {
            nodes.push(r);
            r = r * lit(1.1);
        }
        let step = lit::<T>(0.02);
        let mut r = T::one();
        while r < top {
            nodes.push(r);
            r = r + if r < x_top + lit(4.0) { step } else { step * lit(5.0) };
        }
        nodes.push(T::zero());
        nodes.push(top);
        for &k in &kinks {
            if k < top {
                nodes.push(k);
            }
        }
        nodes.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        nodes.dedup();
        let values = nodes
            .par_iter()
            .map(|&t| Ok(pot.eval(&prob.gamma, &[t])?.powf(pc)))
            .collect::<Result<Vec<T>>>()?;
        let f = Factor::new(
            T::one(),
            Shape::Sampled {
                nodes,
                values,
                extend: !bounded,
                kinks,
            },
        );
        return DensityMeasure::from_terms(1, MeasureKind::Tabulated, vec![vec![f]]);
    }
    let m = 32;
    let grid = Grid::new(&prob.params, x_top + reach.min(lit(8.0)), m)?;
    let vals = (0..grid.len())
        .into_par_iter()
        .map(|k| Ok(pot.eval(&prob.gamma, &grid.point(k))?.powf(pc)))
        .collect::<Result<Vec<T>>>()?;
    DensityMeasure::from_grid(&GridFunction::new(grid, vals)?)
}

/// Pointwise condition ratios `G ∗ (G ∗ γ)^{p'}(x) / (G ∗ γ)(x)` at each point.
pub fn pointwise_v_ratios<T: Real>(prob: &TraceProblem<T>, points: &[Vec<T>]) -> Result<Vec<T>> {
    if points.is_empty() {
        return Err(Error::Empty("evaluation points"));
    }
    let x_top = points
        .iter()
        .flat_map(|x| x.iter().copied())
        .fold(T::zero(), T::max);
    let dens = powered_potential(prob, x_top)?;
    let pot = prob.potential();
    points
        .par_iter()
        .map(|x| {
            let den = pot.eval(&prob.gamma, x)?;
            if !(den > T::zero()) {
                return Err(Error::ZeroPotential);
            }
            Ok(pot.eval(&dens, x)? / den)
        })
        .collect()
}

/// `G ∗ (G ∗ γ)^{p'}(x) / (G ∗ γ)(x)`.
pub fn pointwise_v_ratio<T: Real>(prob: &TraceProblem<T>, x: &[T]) -> Result<T> {
    Ok(pointwise_v_ratios(prob, &[x.to_vec()])?[0])
}

/// `(∫ |G ∗ f|^p dγ_a)^{1/p} / ‖f‖_{p,a}` with the convolution on the grid of `f`.
pub fn trace_ratio<T: Real>(prob: &TraceProblem<T>, f: &GridFunction<T>) -> Result<T> {
    let grid = f.grid();
    if grid.params() != &prob.params {
        return Err(Error::GridMismatch("test function grid uses other weights".into()));
    }
    if f.values().iter().any(|&v| v < T::zero()) {
        return Err(invalid("f", "test function must be non-negative"));
    }
    let norm = f.norm(prob.p)?;
    if !(norm > T::zero()) {
        return Err(invalid("f", "test function vanishes"));
    }
    let op = match prob.convolver.get() {
        Some(c) if c.grid().compatible(grid) => c.clone(),
        _ => {
            let kernel = prob.potential().kernel();
            let c = Arc::new(if grid.n() == 1 {
                GridOp::Kernel(KernelOperator::new(kernel, grid.clone(), 6)?)
            } else {
                GridOp::Pair(GridConvolver::new(grid.clone(), 4)?)
            });
            let _ = prob.convolver.set(c.clone());
            c
        }
    };
    let u = match op.as_ref() {
        GridOp::Kernel(k) => k.apply(f)?,
        GridOp::Pair(c) => c.convolve(f, &kernel_cell_averages(prob.potential().kernel(), grid))?,
    };
    let lhs: T = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let idx = grid.unflatten(k);
            let h = grid.h();
            let lo: Vec<T> = idx.iter().map(|&i| T::of(i) * h).collect();
            let hi: Vec<T> = idx.iter().map(|&i| T::of(i + 1) * h).collect();
            u.values()[k].abs().powf(prob.p) * prob.gamma.box_mass(&lo, &hi, Some(&prob.params))
        })
        .sum();
    Ok(lhs.powf(T::one() / prob.p) / norm)
}

/// `λ_a`-weighted cell averages of a radial kernel, with adaptive integration in cell 0.
pub fn kernel_cell_averages<T: Real>(kernel: &RadialProfile<T>, grid: &Arc<Grid<T>>) -> GridFunction<T> {
    let n = grid.n();
    if n == 1 {
        let a = grid.params().a(0);
        let h = grid.h();
        let integ = Integrator::new(3, h);
        let vals = (0..grid.m())
            .into_par_iter()
            .map(|k| {
                let lo = T::of(k) * h;
                let v = integ.integrate(|r| kernel.value(r) * r.powf(a), lo, lo + h, &kernel.breakpoints(), &[T::zero()]);
                v / grid.cell_weights(0)[k]
            })
            .collect();
        return GridFunction::new(grid.clone(), vals).expect("sizes match");
    }
    GridFunction::from_cell_average(grid.clone(), |x| kernel.value(x.iter().map(|&v| v * v).sum::<T>().sqrt()))
}

/// Constant estimates with the per-cube and per-point tables behind them.
#[derive(Debug, Clone)]
pub struct TraceEstimate<T> {
    /// Lower bound for the trace constant over the test family.
    pub a1_lower: T,
    pub a2_hat: T,
    pub a3_hat: T,
    pub per_cube: Vec<(OrthantCube<T>, T)>,
    pub per_point: Vec<(Vec<T>, T)>,
    pub per_test: Vec<T>,
}

/// Maximises each of the three ratios over the problem's families.
pub fn estimate_constants<T: Real>(prob: &TraceProblem<T>) -> Result<TraceEstimate<T>> {
    if prob.gamma.is_zero() {
        return Err(Error::ZeroPotential);
    }
    if prob.cubes.is_empty() || prob.points.is_empty() || prob.tests.is_empty() {
        return Err(Error::Empty("cube, point or test-function family"));
    }
    let per_cube = prob
        .cubes
        .par_iter()
        .map(|q| Ok((q.clone(), cube_condition_value(prob, q)?)))
        .collect::<Result<Vec<_>>>()?;
    let ratios = pointwise_v_ratios(prob, &prob.points)?;
    let per_point: Vec<(Vec<T>, T)> = prob.points.iter().cloned().zip(ratios).collect();
    let per_test = prob
        .tests
        .iter()
        .map(|f| trace_ratio(prob, f))
        .collect::<Result<Vec<_>>>()?;
    let max = |it: &mut dyn Iterator<Item = T>| it.fold(T::zero(), T::max);
    Ok(TraceEstimate {
        a1_lower: max(&mut per_test.iter().copied()),
        a2_hat: max(&mut per_cube.iter().map(|c| c.1)),
        a3_hat: max(&mut per_point.iter().map(|c| c.1)),
        per_cube,
        per_point,
        per_test,
    })
}
