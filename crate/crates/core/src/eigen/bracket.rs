use rayon::prelude::*;

use crate::convolution::Convolver;
use crate::error::{invalid, Error, Result};
use crate::geometry::{dyadic_cubes, OrthantCube};
use crate::grid::Grid;
use crate::measure::DensityMeasure;
use crate::params::BesselParams;
use crate::quad::{gauss_legendre, Integrator};
use crate::scalar::{lit, Real};
use crate::specfun::{bessel_kernel_profile, scale_profile, RadialProfile};

use super::hamiltonian::{discretize_hamiltonian, least_eigenpair, EigenPair};

/// Which kernel scale a cube is tested with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaStrategy<T> {
    /// `β = l(Q)^{-2}` for each cube.
    PerCube,
    /// One `β` for every cube.
    Fixed(T),
}

/// Evaluates `Φ(Q) = v_a(Q)^{-1} ∫_Q (G^β_{a,2} ∗ v|_Q) v x^a dx`.
#[derive(Debug, Clone)]
pub struct CubeFunctional<T> {
    params: BesselParams<T>,
    base: RadialProfile<T>,
    conv: Convolver<T>,
    strategy: BetaStrategy<T>,
    /// Gauss points per axis for `n ≥ 2`.
    points: usize,
}

impl<T: Real> CubeFunctional<T> {
    pub fn new(params: &BesselParams<T>, strategy: BetaStrategy<T>) -> Result<Self> {
        if let BetaStrategy::Fixed(b) = strategy {
            if !(b > T::zero()) {
                return Err(invalid("beta", "must be positive"));
            }
        }
        Ok(Self {
            params: params.clone(),
            base: bessel_kernel_profile(params, lit(2.0))?,
            conv: Convolver::new(params)?,
            strategy,
            points: 4,
        })
    }

    /// Gauss points per axis used when `n ≥ 2`.
    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points.max(1);
        self
    }

    pub fn params(&self) -> &BesselParams<T> {
        &self.params
    }

    pub fn strategy(&self) -> BetaStrategy<T> {
        self.strategy
    }

    pub fn beta(&self, q: &OrthantCube<T>) -> T {
        match self.strategy {
            BetaStrategy::PerCube => q.edge_length().powi(-2),
            BetaStrategy::Fixed(b) => b,
        }
    }

    /// `G^β_{a,2}(r) = β^{(N-2)/2} G_{a,2}(√β r)`.
    pub fn kernel(&self, beta: T) -> Result<RadialProfile<T>> {
        let k = beta.powf((self.params.hom_dim() - lit(2.0)) * lit(0.5));
        Ok(scale_profile(&self.base, beta.sqrt())?.times(k))
    }

    pub fn eval(&self, v: &DensityMeasure<T>, q: &OrthantCube<T>) -> Result<T> {
        self.eval_beta(v, q, self.beta(q))
    }

    pub fn eval_beta(&self, v: &DensityMeasure<T>, q: &OrthantCube<T>, beta: T) -> Result<T> {
        let n = self.params.n();
        if v.n() != n || q.n() != n {
            return Err(invalid("cube", "dimension differs from params"));
        }
        if !(beta > T::zero()) {
            return Err(invalid("beta", "must be positive"));
        }
        let (lo, hi) = (q.lo(), q.hi());
        let vq = v.restrict(&lo, &hi);
        let mass = vq.box_mass(&lo, &hi, Some(&self.params));
        if !(mass > T::zero()) {
            return Err(Error::EmptyCube("potential has no weighted mass on the cube"));
        }
        let kernel = self.kernel(beta)?;
        let total = if n == 1 {
            self.integrate_1d(&kernel, &vq, lo[0], hi[0])?
        } else {
            self.integrate_tensor(&kernel, &vq, &lo, &hi)?
        };
        Ok(total / mass)
    }

    fn integrate_1d(&self, kernel: &RadialProfile<T>, vq: &DensityMeasure<T>, lo: T, hi: T) -> Result<T> {
        let a = self.params.a(0);
        let mut breaks = Vec::new();
        for t in vq.terms() {
            breaks.extend(t[0].interior_breaks());
            breaks.push(t[0].support_lo());
            breaks.push(t[0].support_hi());
        }
        let integ = Integrator::new(2, (hi - lo) * lit(0.25));
        let err = std::sync::Mutex::new(None);
        let f = |x: T| {
            let w = vq.density(&[x]);
            if w == T::zero() {
                return T::zero();
            }
            match self.conv.direct(kernel, vq, &[x]) {
                Ok(u) => u * w * x.powf(a),
                Err(e) => {
                    *err.lock().unwrap() = Some(e);
                    T::zero()
                }
            }
        };
        let val = integ.integrate(f, lo, hi, &breaks, &[lo, hi]);
        match err.into_inner().unwrap() {
            Some(e) => Err(e),
            None => Ok(val),
        }
    }

    fn integrate_tensor(
        &self,
        kernel: &RadialProfile<T>,
        vq: &DensityMeasure<T>,
        lo: &[T],
        hi: &[T],
    ) -> Result<T> {
        let n = lo.len();
        let rule = gauss_legendre::<T>(self.points)?;
        let m = rule.nodes.len();
        let nodes: Vec<(Vec<T>, T)> = (0..m.pow(n as u32))
            .map(|flat| {
                let mut rem = flat;
                let mut x = vec![T::zero(); n];
                let mut w = T::one();
                for i in (0..n).rev() {
                    let k = rem % m;
                    rem /= m;
                    let half = (hi[i] - lo[i]) * lit(0.5);
                    x[i] = lo[i] + half * (T::one() + rule.nodes[k]);
                    w = w * half * rule.weights[k];
                }
                (x, w)
            })
            .collect();
        let terms = nodes
            .par_iter()
            .map(|(x, w)| {
                let d = vq.density(x);
                if d == T::zero() {
                    return Ok(T::zero());
                }
                let u = self.conv.layer_cake(kernel, vq, x)?;
                Ok(u * d * self.params.weight(x) * *w)
            })
            .collect::<Result<Vec<T>>>()?;
        Ok(terms.into_iter().sum())
    }
}

/// `Φ(Q)` with the unscaled kernel `G_{a,2}`.
pub fn phi2<T: Real>(v: &DensityMeasure<T>, q: &OrthantCube<T>, params: &BesselParams<T>) -> Result<T> {
    CubeFunctional::new(params, BetaStrategy::Fixed(T::one()))?.eval(v, q)
}

/// `Φ(Q)` with `G^β_{a,2}`.
pub fn phi2_beta<T: Real>(
    v: &DensityMeasure<T>,
    q: &OrthantCube<T>,
    params: &BesselParams<T>,
    beta: T,
) -> Result<T> {
    CubeFunctional::new(params, BetaStrategy::Fixed(beta))?.eval(v, q)
}

/// The cubes over which the suprema run.
#[derive(Debug, Clone, PartialEq)]
pub enum CubeFamily<T> {
    /// Dyadic cubes of `[0, X]^n` at depths `0..=depth`.
    Dyadic { x_max: T, depth: u32 },
    /// Edges `X·2^{-j/per_octave}` down to `min_edge`, corners on the lattice of half an edge.
    Graded { x_max: T, min_edge: T, per_octave: u32 },
}

impl<T: Real> CubeFamily<T> {
    pub fn dyadic(x_max: T, depth: u32) -> Self {
        Self::Dyadic { x_max, depth }
    }

    pub fn cubes(&self, n: usize) -> Result<Vec<OrthantCube<T>>> {
        match *self {
            Self::Dyadic { x_max, depth } => Ok(dyadic_cubes(n, x_max, depth)?.into_iter().map(|(_, q)| q).collect()),
            Self::Graded {
                x_max,
                min_edge,
                per_octave,
            } => {
                if n == 0 || !(x_max > T::zero()) || !(min_edge > T::zero()) || per_octave == 0 {
                    return Err(invalid("family", "need n >= 1, X > 0, a positive edge and per_octave >= 1"));
                }
                let mut out = Vec::new();
                let mut j = 0;
                loop {
                    let l = x_max * lit::<T>(2.0).powf(-T::of(j) / T::of(per_octave as usize));
                    if l < min_edge * (T::one() - lit(1e-9)) {
                        break;
                    }
                    let step = l * lit(0.5);
                    let per = (x_max / step).ceil().to_usize().unwrap_or(1).max(1);
                    for flat in 0..per.pow(n as u32) {
                        let mut rem = flat;
                        let mut lo = vec![T::zero(); n];
                        for c in lo.iter_mut().rev() {
                            *c = step * T::of(rem % per);
                            rem /= per;
                        }
                        out.push(OrthantCube::from_corner(&lo, l)?);
                    }
                    j += 1;
                }
                Ok(out)
            }
        }
    }
}

/// One row of the per-cube table.
#[derive(Debug, Clone)]
pub struct CubeValue<T> {
    pub cube: OrthantCube<T>,
    pub phi: T,
}

impl<T: Real> CubeValue<T> {
    pub fn edge(&self) -> T {
        self.cube.edge_length()
    }

    /// `l(Q)^{-2}`.
    pub fn inverse_square(&self) -> T {
        self.edge().powi(-2)
    }
}

/// `Φ` on every cube of the family carrying weighted mass of `v`.
pub fn cube_table<T: Real>(
    v: &DensityMeasure<T>,
    family: &CubeFamily<T>,
    functional: &CubeFunctional<T>,
) -> Result<Vec<CubeValue<T>>> {
    let params = functional.params();
    let cubes = family.cubes(params.n())?;
    if cubes.is_empty() {
        return Err(Error::Empty("cube family"));
    }
    let live: Vec<OrthantCube<T>> = cubes
        .into_iter()
        .filter(|q| v.box_mass(&q.lo(), &q.hi(), Some(params)) > T::zero())
        .collect();
    live.into_par_iter()
        .map(|cube| {
            let phi = functional.eval(v, &cube)?;
            Ok(CubeValue { cube, phi })
        })
        .collect()
}

/// `sup{l(Q)^{-2} : Φ(Q) ≥ threshold}` over the table, `0` when no cube qualifies.
pub fn bound_from_table<T: Real>(table: &[CubeValue<T>], threshold: T) -> T {
    table
        .iter()
        .filter(|c| c.phi >= threshold)
        .map(|c| c.inverse_square())
        .fold(T::zero(), T::max)
}

/// Bracket for `-λ₁` from the cube functional.
#[derive(Debug, Clone)]
pub struct BracketResult<T> {
    /// `sup{l^{-2} : Φ ≥ B}`
    pub lower: T,
    /// `sup{l^{-2} : Φ ≥ A}`
    pub upper: T,
    /// `U` over cubes with `l ≤ 2 (-λ₁)^{-1/2}`, when `λ₁` is known.
    pub upper_restricted: Option<T>,
    pub lambda1: Option<T>,
    pub a: T,
    pub b: T,
    pub strategy: BetaStrategy<T>,
    pub cubes: Vec<CubeValue<T>>,
}

impl<T: Real> BracketResult<T> {
    /// Builds the bounds from a computed table.
    pub fn from_table(table: Vec<CubeValue<T>>, a: T, b: T, strategy: BetaStrategy<T>) -> Result<Self> {
        check_thresholds(a, b)?;
        Ok(Self {
            lower: bound_from_table(&table, b),
            upper: bound_from_table(&table, a),
            upper_restricted: None,
            lambda1: None,
            a,
            b,
            strategy,
            cubes: table,
        })
    }

    /// Attaches the directly computed `λ₁`.
    pub fn with_lambda1(mut self, lambda1: T) -> Self {
        self.lambda1 = Some(lambda1);
        let energy = -lambda1;
        self.upper_restricted = if energy > T::zero() {
            let cap = lit::<T>(2.0) / energy.sqrt();
            let sub: Vec<CubeValue<T>> = self
                .cubes
                .iter()
                .filter(|c| c.edge() <= cap * (T::one() + lit(1e-12)))
                .cloned()
                .collect();
            Some(bound_from_table(&sub, self.a))
        } else {
            None
        };
        self
    }

    /// `L ≤ -λ₁ ≤ U`, when `λ₁` is known.
    pub fn brackets(&self) -> Option<bool> {
        self.lambda1.map(|l| self.lower <= -l && -l <= self.upper)
    }
}

fn check_thresholds<T: Real>(a: T, b: T) -> Result<()> {
    if !(a > T::zero()) || !(b.is_finite()) {
        return Err(invalid("thresholds", "need 0 < A and finite B"));
    }
    if a > b {
        return Err(invalid("thresholds", format!("need A <= B, got A = {a}, B = {b}")));
    }
    Ok(())
}

/// `L` and `U` for `v` at thresholds `A ≤ B`, testing each cube at `β = l(Q)^{-2}`.
pub fn cube_bounds<T: Real>(
    v: &DensityMeasure<T>,
    a: T,
    b: T,
    family: &CubeFamily<T>,
    params: &BesselParams<T>,
) -> Result<BracketResult<T>> {
    check_thresholds(a, b)?;
    let functional = CubeFunctional::new(params, BetaStrategy::PerCube)?;
    bracket_with(v, a, b, family, &functional)
}

/// As [`cube_bounds`] with an explicit functional.
pub fn bracket_with<T: Real>(
    v: &DensityMeasure<T>,
    a: T,
    b: T,
    family: &CubeFamily<T>,
    functional: &CubeFunctional<T>,
) -> Result<BracketResult<T>> {
    check_thresholds(a, b)?;
    let cubes = family.cubes(functional.params().n())?;
    if cubes.is_empty() {
        return Err(Error::Empty("cube family"));
    }
    let table = if v.is_zero() {
        Vec::new()
    } else {
        cube_table(v, family, functional)?
    };
    BracketResult::from_table(table, a, b, functional.strategy())
}

/// Grid used for the direct eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSettings<T> {
    pub x_max: T,
    pub m: usize,
    pub tol: T,
}

impl<T: Real> Default for EigenSettings<T> {
    fn default() -> Self {
        Self {
            x_max: lit(48.0),
            m: 2048,
            tol: lit(1e-9),
        }
    }
}

/// Least eigenpair of `-Δ_a - v` on `[0, X]^n`.
pub fn direct_eigenpair<T: Real>(
    v: &DensityMeasure<T>,
    params: &BesselParams<T>,
    settings: &EigenSettings<T>,
) -> Result<EigenPair<T>> {
    let grid = Grid::new(params, settings.x_max, settings.m)?;
    let h = discretize_hamiltonian(v, &grid, params)?;
    least_eigenpair(&h, settings.tol)
}

/// One training potential with its direct eigenvalue and cube table.
#[derive(Debug, Clone)]
pub struct TrainingCase<T> {
    pub lambda1: T,
    pub table: Vec<CubeValue<T>>,
}

impl<T: Real> TrainingCase<T> {
    /// `max{Φ : l^{-2} > -λ₁}`: `B` must exceed this for `L ≤ -λ₁`.
    pub fn lower_need(&self) -> T {
        let e = -self.lambda1;
        self.table
            .iter()
            .filter(|c| c.inverse_square() > e)
            .map(|c| c.phi)
            .fold(T::zero(), T::max)
    }

    /// `max{Φ : l^{-2} ≥ -λ₁}`: `A` may not exceed this for `-λ₁ ≤ U`.
    pub fn upper_allow(&self) -> T {
        let e = -self.lambda1;
        self.table
            .iter()
            .filter(|c| c.inverse_square() >= e)
            .map(|c| c.phi)
            .fold(T::zero(), T::max)
    }
}

/// Calibrated thresholds with the per-case requirements they came from.
#[derive(Debug, Clone)]
pub struct Calibration<T> {
    pub a: T,
    pub b: T,
    /// `(λ₁, lower_need, upper_allow)` per training case.
    pub report: Vec<(T, T, T)>,
}

/// Smallest `B` and largest `A ≤ B` bracketing every training case.
pub fn calibrate_from_cases<T: Real>(cases: &[TrainingCase<T>]) -> Result<Calibration<T>> {
    if cases.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let report: Vec<(T, T, T)> = cases
        .iter()
        .map(|c| (c.lambda1, c.lower_need(), c.upper_allow()))
        .collect();
    let need = report.iter().map(|r| r.1).fold(T::zero(), T::max);
    let allow = report.iter().map(|r| r.2).fold(T::infinity(), T::min);
    let b = if need > T::zero() {
        need * (T::one() + lit(1e-12))
    } else {
        T::min_positive_value()
    };
    if !(allow > T::zero()) {
        return Err(Error::Calibration(format!(
            "some training case has no cube with l^-2 >= -lambda1 and positive functional; report {report:?}"
        )));
    }
    // a cube with l^-2 exactly -λ₁ can push the admissible A above B
    Ok(Calibration {
        a: allow.min(b),
        b,
        report,
    })
}

/// Calibrates `(A, B)` on training potentials, each solved directly on the grid of `settings`.
pub fn calibrate_thresholds<T: Real>(
    training: &[DensityMeasure<T>],
    family: &CubeFamily<T>,
    params: &BesselParams<T>,
    settings: &EigenSettings<T>,
) -> Result<Calibration<T>> {
    if training.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let functional = CubeFunctional::new(params, BetaStrategy::PerCube)?;
    let cases = training
        .iter()
        .map(|v| {
            let lambda1 = direct_eigenpair(v, params, settings)?.value;
            let table = cube_table(v, family, &functional)?;
            Ok(TrainingCase { lambda1, table })
        })
        .collect::<Result<Vec<_>>>()?;
    calibrate_from_cases(&cases)
}
