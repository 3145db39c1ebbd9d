//! Generalized (Bessel) translation `T^t`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{power_moment, Grid, GridFunction};
use crate::params::{angular_normalization, BesselParams};
use crate::quad::{make_angular_rule, Integrator, QuadratureRule};
use crate::scalar::{lit, Real};
use crate::specfun::{gamma, ln_gamma, SymmetricBeta};

#[derive(Debug, Clone)]
struct AxisRule<T> {
    rule: QuadratureRule<T>,
    /// weights times `c_α`, summing to one
    probs: Vec<T>,
    c_alpha: T,
    beta: SymmetricBeta<T>,
}

/// Per-axis angular rules and normalisations for `T^t`.
#[derive(Debug, Clone)]
pub struct TranslationPlan<T> {
    params: BesselParams<T>,
    axes: Vec<AxisRule<T>>,
}

impl<T: Real> TranslationPlan<T> {
    /// Plan with an `m`-point angular rule per axis.
    pub fn new(params: &BesselParams<T>, m: usize) -> Result<Self> {
        let axes = params
            .alphas()
            .iter()
            .map(|&al| {
                let rule = make_angular_rule(al, m)?;
                let c_alpha = angular_normalization(al);
                let probs = rule.weights.iter().map(|&w| w * c_alpha).collect();
                Ok(AxisRule {
                    rule,
                    probs,
                    c_alpha,
                    beta: SymmetricBeta::new(al + lit(0.5)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params: params.clone(),
            axes,
        })
    }

    pub fn params(&self) -> &BesselParams<T> {
        &self.params
    }

    pub fn rule(&self, axis: usize) -> &QuadratureRule<T> {
        &self.axes[axis].rule
    }

    pub fn normalization(&self, axis: usize) -> T {
        self.axes[axis].c_alpha
    }

    /// `c_α Σ w_j` for one axis (should be 1).
    pub fn normalized_weight_sum(&self, axis: usize) -> T {
        self.axes[axis].probs.iter().copied().sum()
    }

    fn check_points(&self, t: &[T], x: &[T]) -> Result<()> {
        let n = self.params.n();
        if t.len() != n || x.len() != n {
            return Err(invalid("point", format!("expected {n} coordinates")));
        }
        if t.iter().chain(x).any(|&v| !(v >= T::zero())) {
            return Err(invalid("point", "coordinates must be non-negative"));
        }
        Ok(())
    }

    /// `T^t f(x)` by tensorised angular quadrature.
    pub fn translate_fn<F: Fn(&[T]) -> T + ?Sized>(&self, f: &F, t: &[T], x: &[T]) -> Result<T> {
        self.check_points(t, x)?;
        let n = self.params.n();
        let sizes: Vec<usize> = self.axes.iter().map(|a| a.probs.len()).collect();
        let total: usize = sizes.iter().product();
        let mut z = vec![T::zero(); n];
        let mut acc = T::zero();
        for c in 0..total {
            let mut rem = c;
            let mut w = T::one();
            for i in (0..n).rev() {
                let j = rem % sizes[i];
                rem /= sizes[i];
                let ax = &self.axes[i];
                w = w * ax.probs[j];
                z[i] = axis_distance(x[i], t[i], ax.rule.nodes[j]);
            }
            acc = acc + w * f(&z);
        }
        Ok(acc)
    }

    /// `T^t χ_{[0,R)}(x)` on one axis, exactly.
    pub fn ball_1d(&self, axis: usize, x: T, t: T, r: T) -> T {
        ball_translate_1d(&self.axes[axis].beta, x, t, r)
    }

    pub(crate) fn beta(&self, axis: usize) -> &SymmetricBeta<T> {
        &self.axes[axis].beta
    }
}

/// `√(x² + t² - 2xt cos θ)` written as `√((x-t)² + 4xt sin²(θ/2))`.
#[inline]
fn axis_distance<T: Real>(x: T, t: T, theta: T) -> T {
    let s = (theta * lit(0.5)).sin();
    ((x - t) * (x - t) + lit::<T>(4.0) * x * t * s * s).sqrt()
}

/// `T^t χ_{[0,R)}(x) = I_s(α+1/2, α+1/2)` with `s = (R² - (x-t)²)/(4xt)`.
#[inline]
pub fn ball_translate_1d<T: Real>(beta: &SymmetricBeta<T>, x: T, t: T, r: T) -> T {
    if x == T::zero() || t == T::zero() {
        return if x.max(t) < r { T::one() } else { T::zero() };
    }
    let d = (x - t).abs();
    if d >= r {
        return T::zero();
    }
    let sum = x + t;
    if sum <= r {
        return T::one();
    }
    let q = lit::<T>(4.0) * x * t;
    let s = (r - d) * (r + d) / q;
    let sc = (sum - r) * (sum + r) / q;
    beta.cdf2(s, sc)
}

/// A function that can be translated: a closure or a grid function (interpolated).
pub enum Translatable<'a, T> {
    Fn(&'a (dyn Fn(&[T]) -> T + Sync)),
    Grid(&'a GridFunction<T>),
}

/// `T^t f(x)`.
pub fn translate_point<T: Real>(
    f: Translatable<'_, T>,
    t: &[T],
    x: &[T],
    plan: &TranslationPlan<T>,
) -> Result<T> {
    match f {
        Translatable::Fn(g) => plan.translate_fn(g, t, x),
        Translatable::Grid(g) => {
            if g.grid().params() != plan.params() {
                return Err(Error::GridMismatch("grid weight differs from plan".into()));
            }
            plan.translate_fn(&|z: &[T]| g.interpolate(z), t, x)
        }
    }
}

/// Kernel `K(x,t,z)` with `T^t f(x) = ∫ f(z) K(x,t,z) z^{2α+1} dz`; zero off `(|x-t|, x+t)`.
pub fn translation_kernel<T: Real>(x: T, t: T, z: T, alpha: T) -> T {
    if !(x > T::zero() && t > T::zero() && z > T::zero()) {
        return T::zero();
    }
    let d = (x - t).abs();
    let s = x + t;
    if z <= d || z >= s {
        return T::zero();
    }
    let two = lit::<T>(2.0);
    let ln_c = ln_gamma(alpha + T::one())
        - ln_gamma(alpha + lit(0.5))
        - lit::<T>(0.5) * T::PI().ln()
        - (two * alpha - T::one()) * T::LN_2();
    let delta = (s - z) * (s + z) * (z - d) * (z + d);
    (ln_c + (alpha - lit(0.5)) * delta.ln() - two * alpha * (x * t * z).ln()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorShape {
    /// `B_+(0, r)`
    Ball,
    /// `[0, r)^n`
    Cube,
}

/// `T^t χ(x)` for the positive ball or cube of radius `r` at the origin.
pub fn translate_indicator<T: Real>(
    shape: IndicatorShape,
    r: T,
    t: &[T],
    x: &[T],
    plan: &TranslationPlan<T>,
) -> Result<T> {
    if !(r > T::zero()) {
        return Err(invalid("r", format!("radius must be positive, got {r}")));
    }
    plan.check_points(t, x)?;
    let n = plan.params().n();
    match shape {
        IndicatorShape::Cube => Ok((0..n).fold(T::one(), |acc, i| acc * plan.ball_1d(i, x[i], t[i], r))),
        IndicatorShape::Ball => {
            if n == 1 {
                return Ok(plan.ball_1d(0, x[0], t[0], r));
            }
            // angular quadrature on the first n-1 axes, exact on the last
            let last = n - 1;
            let sizes: Vec<usize> = (0..last).map(|i| plan.axes[i].probs.len()).collect();
            let total: usize = sizes.iter().product();
            let r2 = r * r;
            let mut acc = T::zero();
            for c in 0..total {
                let mut rem = c;
                let mut w = T::one();
                let mut d = T::zero();
                for i in (0..last).rev() {
                    let j = rem % sizes[i];
                    rem /= sizes[i];
                    let ax = &plan.axes[i];
                    w = w * ax.probs[j];
                    let zi = axis_distance(x[i], t[i], ax.rule.nodes[j]);
                    d = d + zi * zi;
                }
                if d < r2 {
                    acc = acc + w * plan.ball_1d(last, x[last], t[last], (r2 - d).sqrt());
                }
            }
            Ok(acc)
        }
    }
}

/// Grid-to-grid translation: `T^t` applied to the piecewise-constant reconstruction,
/// then `λ_a`-averaged over each cell. Entries are computed from the exact
/// `T^t χ_{[0,R)}` so that positivity and `T^t 1 = 1` hold to rounding.
#[derive(Debug, Clone)]
pub struct GridTranslator<T> {
    grid: Arc<Grid<T>>,
    plan: TranslationPlan<T>,
    integ: Integrator<T>,
}

impl<T: Real> GridTranslator<T> {
    pub fn new(grid: Arc<Grid<T>>) -> Result<Self> {
        let plan = TranslationPlan::new(grid.params(), 8)?;
        Ok(Self {
            grid,
            plan,
            integ: Integrator::new(3, T::infinity()),
        })
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    /// `∫_{lo}^{hi} x^a T^t χ_{[0,R)}(x) dx`.
    fn cell_ball(&self, axis: usize, a: T, lo: T, hi: T, t: T, r: T) -> T {
        if r <= T::zero() {
            return T::zero();
        }
        if t == T::zero() {
            return power_moment(a, lo, hi.min(r).max(lo));
        }
        let k1 = (r - t).abs();
        let k2 = r + t;
        let mut total = T::zero();
        if r > t {
            let top = hi.min(k1);
            if top > lo {
                total = total + power_moment(a, lo, top);
            }
        }
        let p = lo.max(k1);
        let q = hi.min(k2);
        if q > p {
            let beta = self.plan.beta(axis);
            let f = |x: T| x.powf(a) * ball_translate_1d(beta, x, t, r);
            total = total + self.integ.panel(f, p, q, &[T::zero(), k1, k2]);
        }
        total
    }

    /// Row-major `m × m` matrix of `T^t` on one axis.
    pub fn axis_matrix(&self, axis: usize, t: T) -> Vec<T> {
        let m = self.grid.m();
        let h = self.grid.h();
        let a = self.grid.params().a(axis);
        let w = self.grid.cell_weights(axis);
        let mut out = vec![T::zero(); m * m];
        out.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let lo = T::of(i) * h;
            let hi = T::of(i + 1) * h;
            let mut prev = T::zero();
            for (j, slot) in row.iter_mut().enumerate() {
                let cur = self.cell_ball(axis, a, lo, hi, t, T::of(j + 1) * h);
                *slot = ((cur - prev) / w[i]).max(T::zero());
                prev = cur;
            }
        });
        out
    }

    /// `T^t f` as a grid function.
    pub fn translate(&self, f: &GridFunction<T>, t: &[T]) -> Result<GridFunction<T>> {
        if !self.grid.compatible(f.grid()) {
            return Err(Error::GridMismatch("translator built for another grid".into()));
        }
        let n = self.grid.n();
        if t.len() != n || t.iter().any(|&v| !(v >= T::zero())) {
            return Err(invalid("t", "need a non-negative point of the grid dimension"));
        }
        let mats: Vec<Vec<T>> = (0..n).map(|i| self.axis_matrix(i, t[i])).collect();
        let values = apply_kronecker(&mats, self.grid.m(), f.values());
        GridFunction::new(f.grid().clone(), values)
    }
}

/// `(M_0 ⊗ … ⊗ M_{n-1}) v` for `m × m` factors, axis 0 slowest.
pub(crate) fn apply_kronecker<T: Real>(mats: &[Vec<T>], m: usize, v: &[T]) -> Vec<T> {
    apply_kronecker_rect(mats, m, m, v)
}

/// `(A_0 ⊗ … ⊗ A_{n-1}) v` for `rows × cols` factors in row-major order.
pub(crate) fn apply_kronecker_rect<T: Real>(mats: &[Vec<T>], rows: usize, cols: usize, v: &[T]) -> Vec<T> {
    let n = mats.len();
    let mut cur = v.to_vec();
    for (axis, mat) in mats.iter().enumerate() {
        let inner = cols.pow((n - axis - 1) as u32);
        let outer = rows.pow(axis as u32);
        let mut next = vec![T::zero(); outer * rows * inner];
        for o in 0..outer {
            for i in 0..rows {
                for j in 0..cols {
                    let c = mat[i * cols + j];
                    if c == T::zero() {
                        continue;
                    }
                    let src = (o * cols + j) * inner;
                    let dst = (o * rows + i) * inner;
                    for k in 0..inner {
                        next[dst + k] = next[dst + k] + c * cur[src + k];
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

/// Normalising constant of [`translation_kernel`] (exposed for diagnostics).
pub fn translation_kernel_constant<T: Real>(alpha: T) -> T {
    gamma(alpha + T::one())
        / (T::PI().sqrt() * gamma(alpha + lit(0.5)) * lit::<T>(2.0).powf(lit::<T>(2.0) * alpha - T::one()))
}
