//! Bessel convolution: grid functions, radial functions and measures.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::measure::{DensityMeasure, Factor, Shape};
use crate::params::BesselParams;
use crate::quad::{gauss_legendre, make_radial_rule, Integrator};
use crate::scalar::{lit, Real};
use crate::specfun::{Radial, RadialProfile, SymmetricBeta};
use crate::translation::{ball_translate_1d, GridTranslator, TranslationPlan};

/// Shared state for pointwise convolutions with radial kernels and measures.
#[derive(Debug, Clone)]
pub struct Convolver<T> {
    params: BesselParams<T>,
    integ: Integrator<T>,
    plan: TranslationPlan<T>,
}

fn push_pos<T: Real>(v: &mut Vec<T>, x: T) {
    if x > T::zero() && x.is_finite() {
        v.push(x);
    }
}

impl<T: Real> Convolver<T> {
    pub fn new(params: &BesselParams<T>) -> Result<Self> {
        Ok(Self {
            params: params.clone(),
            integ: Integrator::new(3, lit(2.0)),
            plan: TranslationPlan::new(params, 16)?,
        })
    }

    pub fn params(&self) -> &BesselParams<T> {
        &self.params
    }

    fn beta(&self, axis: usize) -> &SymmetricBeta<T> {
        self.plan.beta(axis)
    }

    fn check_x(&self, x: &[T]) -> Result<()> {
        if x.len() != self.params.n() || x.iter().any(|&v| !(v >= T::zero())) {
            return Err(invalid("x", "need a non-negative point of the parameter dimension"));
        }
        Ok(())
    }

    /// `(f ∗ g)(x)` for radial functions on the half-line (`n = 1`), by splitting the
    /// `(t, θ)` domain where `|x - t e^{iθ}| ≥ t` so each factor is only evaluated away
    /// from its singularity at the origin.
    pub fn radial_1d(&self, f: &dyn Radial<T>, g: &dyn Radial<T>, x: T) -> Result<T> {
        if self.params.n() != 1 {
            return Err(Error::Unsupported("direct convolution is one-dimensional".into()));
        }
        if !(x >= T::zero()) {
            return Err(invalid("x", "must be non-negative"));
        }
        let a = self.params.a(0);
        if x == T::zero() {
            let top = match (f.reach(), g.reach()) {
                (Some(p), Some(q)) => p.min(q),
                (Some(p), None) | (None, Some(p)) => p,
                (None, None) => return Err(Error::Unsupported("both factors have unbounded support".into())),
            };
            let mut breaks = f.breakpoints();
            breaks.extend(g.breakpoints());
            return Ok(self.integ.integrate(
                |t| f.value(t) * g.value(t) * t.powf(a),
                T::zero(),
                top,
                &breaks,
                &[T::zero()],
            ));
        }
        let c = self.plan.normalization(0);
        Ok(c * (self.half(x, g, f)? + self.half(x, f, g)?))
    }

    /// `∫ outer(t) t^a ∫_{θ: z ≥ t} inner(z) sin^{2α}θ dθ dt`.
    fn half(&self, x: T, outer: &dyn Radial<T>, inner: &dyn Radial<T>) -> Result<T> {
        let alpha = self.params.alpha(0);
        let a = self.params.a(0);
        let tmax = match (outer.reach(), inner.reach()) {
            (Some(r), Some(s)) => r.min(x + s),
            (Some(r), None) => r,
            (None, Some(s)) => x + s,
            (None, None) => return Err(Error::Unsupported("both factors have unbounded support".into())),
        };
        let half_x = x * lit(0.5);
        let ib = inner.breakpoints();
        let mut breaks = outer.breakpoints();
        let mut singular = vec![T::zero(), half_x];
        for &b in &ib {
            if x - b < half_x {
                push_pos(&mut breaks, x - b);
            }
            if b > half_x {
                breaks.push(b);
            }
            push_pos(&mut breaks, b - x);
        }
        if let Some(rr) = inner.reach() {
            if x - rr < half_x {
                push_pos(&mut singular, x - rr);
            }
            if rr > half_x {
                singular.push(rr);
            }
            push_pos(&mut singular, rr - x);
        }
        let two_alpha = lit::<T>(2.0) * alpha;
        let pi = T::PI();
        let integrand = |t: T| {
            let gt = outer.value(t);
            if gt == T::zero() {
                return T::zero();
            }
            let d = (x - t).abs();
            let s = x + t;
            let zlo = (x - t).max(t);
            let mut zhi = s;
            if let Some(rr) = inner.reach() {
                zhi = zhi.min(rr);
            }
            if !(zhi > zlo) {
                return T::zero();
            }
            let q = lit::<T>(4.0) * x * t;
            let theta_of = |z: T| {
                let sn = ((z - d).max(T::zero()) * (z + d)).sqrt();
                let cs = ((s - z).max(T::zero()) * (s + z)).sqrt();
                lit::<T>(2.0) * sn.atan2(cs)
            };
            let th_lo = if t <= half_x { T::zero() } else { theta_of(zlo) };
            let th_hi = if zhi >= s { pi } else { theta_of(zhi) };
            let cuts: Vec<T> = ib
                .iter()
                .filter(|&&b| b > zlo && b < zhi)
                .map(|&b| theta_of(b))
                .collect();
            let ft = |th: T| {
                let sh = (th * lit(0.5)).sin();
                let z = (d * d + q * sh * sh).sqrt();
                inner.value(z) * th.sin().powf(two_alpha)
            };
            gt * t.powf(a) * self.integ.integrate(ft, th_lo, th_hi, &cuts, &[T::zero(), pi])
        };
        Ok(self.integ.integrate(integrand, T::zero(), tmax, &breaks, &singular))
    }

    /// `(κ ∗ γ)(x)` by direct quadrature (`n = 1`).
    pub fn direct(&self, kernel: &dyn Radial<T>, gamma: &DensityMeasure<T>, x: &[T]) -> Result<T> {
        self.check_x(x)?;
        if gamma.n() != 1 || self.params.n() != 1 {
            return Err(Error::Unsupported("direct convolution is one-dimensional".into()));
        }
        let mut acc = T::zero();
        for term in gamma.terms() {
            if !term[0].is_zero() {
                acc = acc + self.radial_1d(kernel, &term[0], x[0])?;
            }
        }
        Ok(acc)
    }

    /// `∫ f(t) t^a T^t χ_{[0,r)}(x) dt` for one factor along `axis`.
    pub fn ball_factor(&self, axis: usize, f: &Factor<T>, x: T, r: T) -> T {
        let a = self.params.a(axis);
        let lo = f.support_lo();
        let hi = f.support_hi();
        if x == T::zero() {
            return f.moment(a, lo, hi.min(r));
        }
        let mut total = T::zero();
        if r > x {
            total = total + f.moment(a, lo, hi.min(r - x));
        }
        let p = lo.max((r - x).abs());
        let q = hi.min(x + r);
        if q > p {
            let beta = self.beta(axis);
            let breaks = f.interior_breaks();
            total = total
                + self.integ.integrate(
                    |t| f.value(t) * t.powf(a) * ball_translate_1d(beta, x, t, r),
                    p,
                    q,
                    &breaks,
                    &[T::zero(), (r - x).abs(), x + r],
                );
        }
        total
    }

    /// `(χ_{B_+(0,r)} ∗ γ)(x)`.
    pub fn ball(&self, r: T, gamma: &DensityMeasure<T>, x: &[T]) -> Result<T> {
        if !(r > T::zero()) {
            return Err(invalid("r", format!("radius must be positive, got {r}")));
        }
        self.check_x(x)?;
        if gamma.n() != self.params.n() {
            return Err(invalid("measure", "dimension differs from params"));
        }
        let mut acc = T::zero();
        for term in gamma.terms() {
            if term.iter().any(|f| f.is_zero()) {
                continue;
            }
            acc = acc
                + match self.params.n() {
                    1 => self.ball_factor(0, &term[0], x[0], r),
                    2 => {
                        let inner = InnerBall::new(self, &term[0], x[0], r);
                        self.ball_2d(&inner, &term[1], x[1], r)
                    }
                    _ => return Err(Error::Unsupported("ball convolution beyond n = 2".into())),
                };
        }
        Ok(acc)
    }

    /// Two-dimensional ball mass: exact-in-`ρ` mass along axis 0 averaged over axis 1.
    fn ball_2d(&self, inner: &InnerBall<T>, f2: &Factor<T>, x2: T, r: T) -> T {
        let alpha = self.params.alpha(1);
        let a = self.params.a(1);
        let c = self.plan.normalization(1);
        let lo = f2.support_lo();
        let hi = f2.support_hi();
        let r2 = r * r;
        let two_alpha = lit::<T>(2.0) * alpha;
        let pi = T::PI();
        let zk: Vec<T> = inner
            .kinks
            .iter()
            .filter(|&&k| k < r)
            .map(|&k| (r2 - k * k).sqrt())
            .collect();
        if x2 == T::zero() {
            let mut sing = vec![T::zero()];
            sing.extend(zk.iter().copied());
            return self.integ.integrate(
                |t| f2.value(t) * t.powf(a) * inner.eval((r2 - t * t).max(T::zero()).sqrt()),
                lo,
                hi.min(r),
                &f2.interior_breaks(),
                &sing,
            );
        }
        let mut sing = vec![T::zero(), (x2 - r).abs(), x2 + r];
        for &z in &zk {
            push_pos(&mut sing, (x2 - z).abs());
            sing.push(x2 + z);
        }
        let integrand = |t: T| {
            let w = f2.value(t);
            if w == T::zero() {
                return T::zero();
            }
            let d = (x2 - t).abs();
            let s = x2 + t;
            if d >= r {
                return T::zero();
            }
            let q = lit::<T>(4.0) * x2 * t;
            let theta_of = |z: T| {
                let sn = ((z - d).max(T::zero()) * (z + d)).sqrt();
                let cs = ((s - z).max(T::zero()) * (s + z)).sqrt();
                lit::<T>(2.0) * sn.atan2(cs)
            };
            let th_hi = if r >= s { pi } else { theta_of(r) };
            let cuts: Vec<T> = zk.iter().filter(|&&z| z > d && z < s.min(r)).map(|&z| theta_of(z)).collect();
            let ft = |th: T| {
                let sh = (th * lit(0.5)).sin();
                let d2 = d * d + q * sh * sh;
                inner.eval((r2 - d2).max(T::zero()).sqrt()) * th.sin().powf(two_alpha)
            };
            let mut sg = vec![T::zero(), pi];
            sg.extend(cuts.iter().copied());
            w * t.powf(a) * self.integ.integrate(ft, T::zero(), th_hi, &[], &sg)
        };
        c * self.integ.integrate(integrand, lo, hi.min(x2 + r), &f2.interior_breaks(), &sing)
    }

    /// `(g ∗ γ)(x) = ∫_0^∞ (χ_{B(0,r)} ∗ γ)(x) (-g'(r)) dr`.
    pub fn layer_cake(&self, g: &RadialProfile<T>, gamma: &DensityMeasure<T>, x: &[T]) -> Result<T> {
        self.check_x(x)?;
        if !g.has_derivative() {
            return Err(invalid("profile", "layer-cake route needs the derivative -g'"));
        }
        let r_top = g
            .reach()
            .ok_or_else(|| Error::Unsupported("profile without finite reach".into()))?;
        let n = self.params.n();
        if gamma.n() != n {
            return Err(invalid("measure", "dimension differs from params"));
        }
        let negd = |r: T| g.neg_derivative(r).unwrap_or(T::zero());
        let mut total = T::zero();
        for term in gamma.terms() {
            if term.iter().any(|f| f.is_zero()) {
                continue;
            }
            let his: Vec<T> = term.iter().map(|f| f.support_hi()).collect();
            let bounded = his.iter().all(|h| h.is_finite());
            let r_sat = if bounded {
                x.iter().zip(&his).map(|(&xi, &h)| (xi + h) * (xi + h)).sum::<T>().sqrt()
            } else {
                T::infinity()
            };
            let r_end = r_top.min(r_sat);
            let mut breaks: Vec<T> = g.breakpoints();
            let norm_x = x.iter().map(|&v| v * v).sum::<T>().sqrt();
            let mut singular = vec![T::zero()];
            push_pos(&mut singular, norm_x);
            for (i, f) in term.iter().enumerate() {
                for b in f.interior_breaks() {
                    push_pos(&mut breaks, (b - x[i]).abs());
                    breaks.push(b + x[i]);
                }
                for b in [f.support_lo(), f.support_hi()] {
                    if b.is_finite() && b > T::zero() {
                        push_pos(&mut singular, (b - x[i]).abs());
                        singular.push(b + x[i]);
                    }
                }
                push_pos(&mut singular, x[i]);
            }
            let body = match n {
                1 => self.integ.integrate(
                    |r| {
                        let d = negd(r);
                        if d == T::zero() {
                            T::zero()
                        } else {
                            d * self.ball_factor(0, &term[0], x[0], r)
                        }
                    },
                    T::zero(),
                    r_end,
                    &breaks,
                    &singular,
                ),
                2 => {
                    let inner = InnerBall::new(self, &term[0], x[0], r_end);
                    self.integ.integrate(
                        |r| {
                            let d = negd(r);
                            if d == T::zero() {
                                T::zero()
                            } else {
                                d * self.ball_2d(&inner, &term[1], x[1], r)
                            }
                        },
                        T::zero(),
                        r_end,
                        &breaks,
                        &singular,
                    )
                }
                _ => return Err(Error::Unsupported("layer-cake beyond n = 2".into())),
            };
            total = total + body;
            if r_sat < r_top {
                let mass: T = term
                    .iter()
                    .enumerate()
                    .fold(T::one(), |acc, (i, f)| acc * f.moment(self.params.a(i), T::zero(), T::infinity()));
                total = total + g.value(r_sat) * mass;
            }
        }
        Ok(total)
    }
}

/// `ρ ↦ ∫ f(t) t^a T^t χ_{[0,ρ)}(x) dt` along axis 0: closed form for constants, else a table.
struct InnerBall<T> {
    coef_closed: Option<(T, T)>,
    rho: Vec<T>,
    vals: Vec<T>,
    kinks: Vec<T>,
}

impl<T: Real> InnerBall<T> {
    fn new(cv: &Convolver<T>, f: &Factor<T>, x: T, rho_max: T) -> Self {
        let a = cv.params.a(0);
        let mut kinks = vec![x];
        for b in f.breakpoints() {
            push_pos(&mut kinks, (b - x).abs());
            kinks.push(b + x);
        }
        if matches!(f.shape, Shape::Constant) && f.support_lo() == T::zero() && f.support_hi().is_infinite() {
            return Self {
                coef_closed: Some((f.coef / (a + T::one()), a + T::one())),
                rho: Vec::new(),
                vals: Vec::new(),
                kinks,
            };
        }
        let mut rho = Vec::new();
        let fine = lit::<T>(0.01);
        let mut r = lit::<T>(1e-4).min(rho_max);
        while r < T::one().min(rho_max) {
            rho.push(r);
            r = r * lit(1.05);
        }
        let mut r = T::one().min(rho_max);
        while r < rho_max {
            rho.push(r);
            r = r + fine;
        }
        for &k in &kinks {
            if k < rho_max {
                rho.push(k);
            }
        }
        rho.push(rho_max);
        rho.push(T::zero());
        rho.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rho.dedup();
        let vals: Vec<T> = rho
            .par_iter()
            .map(|&p| if p == T::zero() { T::zero() } else { cv.ball_factor(0, f, x, p) })
            .collect();
        Self {
            coef_closed: None,
            rho,
            vals,
            kinks,
        }
    }

    fn eval(&self, p: T) -> T {
        if let Some((c, e)) = self.coef_closed {
            return c * p.powf(e);
        }
        if p <= T::zero() {
            return T::zero();
        }
        let last = self.rho.len() - 1;
        if p >= self.rho[last] {
            return self.vals[last];
        }
        let k = self.rho.partition_point(|&r| r <= p) - 1;
        let f = (p - self.rho[k]) / (self.rho[k + 1] - self.rho[k]);
        self.vals[k] + f * (self.vals[k + 1] - self.vals[k])
    }
}

/// `(χ_{B_+(0,r)} ∗ γ)(x)`.
pub fn ball_convolve_measure<T: Real>(
    r: T,
    gamma: &DensityMeasure<T>,
    x: &[T],
    params: &BesselParams<T>,
) -> Result<T> {
    Convolver::new(params)?.ball(r, gamma, x)
}

/// `(g ∗ γ)(x)` through the layer-cake representation.
pub fn layer_cake_convolve<T: Real>(
    g: &RadialProfile<T>,
    gamma: &DensityMeasure<T>,
    x: &[T],
    params: &BesselParams<T>,
) -> Result<T> {
    Convolver::new(params)?.layer_cake(g, gamma, x)
}

/// Grid convolution `(f ∗ g)_i = w_i^{-1} Σ_{j,k} C(i,j,k) f_j g_k` with the per-axis
/// tensor `C(i,j,k) = ∫_{cell k} t^a w_i M^t(i,j) dt` precomputed from the grid translator.
#[derive(Debug, Clone)]
pub struct GridConvolver<T> {
    grid: Arc<Grid<T>>,
    /// per axis, `tensor[(k * m + i) * m + j]`
    tensors: Vec<Vec<T>>,
}

impl<T: Real> GridConvolver<T> {
    /// `q` Gauss points per cell in the translation variable.
    pub fn new(grid: Arc<Grid<T>>, q: usize) -> Result<Self> {
        let tr = GridTranslator::new(grid.clone())?;
        let m = grid.m();
        let h = grid.h();
        let gl = gauss_legendre::<T>(q)?;
        let tensors = (0..grid.n())
            .map(|axis| {
                let a = grid.params().a(axis);
                let w = grid.cell_weights(axis).to_vec();
                let rad = make_radial_rule(a, q)?;
                let blocks: Vec<Vec<T>> = (0..m)
                    .into_par_iter()
                    .map(|k| {
                        let pts: Vec<(T, T)> = if k == 0 {
                            rad.nodes
                                .iter()
                                .zip(&rad.weights)
                                .map(|(&u, &wt)| (u * h, wt * h.powf(a + T::one())))
                                .collect()
                        } else {
                            let lo = T::of(k) * h;
                            gl.nodes
                                .iter()
                                .zip(&gl.weights)
                                .map(|(&u, &wt)| {
                                    let t = lo + h * lit(0.5) * (u + T::one());
                                    (t, wt * h * lit(0.5) * t.powf(a))
                                })
                                .collect()
                        };
                        let s: T = pts.iter().map(|p| p.1).sum();
                        let mut block = vec![T::zero(); m * m];
                        for (t, wt) in pts {
                            let om = wt * w[k] / s;
                            let mt = tr.axis_matrix(axis, t);
                            for i in 0..m {
                                for j in 0..m {
                                    block[i * m + j] = block[i * m + j] + om * w[i] * mt[i * m + j];
                                }
                            }
                        }
                        block
                    })
                    .collect();
                let mut t = blocks.concat();
                // the exact tensor is symmetric in (j, k); the t-quadrature is not
                for i in 0..m {
                    for j in 0..m {
                        for k in j + 1..m {
                            let (p, q) = ((k * m + i) * m + j, (j * m + i) * m + k);
                            let s = (t[p] + t[q]) * lit(0.5);
                            t[p] = s;
                            t[q] = s;
                        }
                    }
                }
                Ok(t)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, tensors })
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    /// `f ∗ g` on the grid.
    pub fn convolve(&self, f: &GridFunction<T>, g: &GridFunction<T>) -> Result<GridFunction<T>> {
        f.check_compatible(g)?;
        if !self.grid.compatible(f.grid()) {
            return Err(Error::GridMismatch("convolver built for another grid".into()));
        }
        let m = self.grid.m();
        let n = self.grid.n();
        let len = self.grid.len();
        let gv = g.values();
        let fv = f.values();
        // Σ_K g_K (⊗_i C_i(k_i, ·, ·)) f
        let parts: Vec<Vec<T>> = (0..len)
            .into_par_iter()
            .filter(|&k| gv[k] != T::zero())
            .map(|k| {
                let idx = self.grid.unflatten(k);
                let mats: Vec<Vec<T>> = (0..n)
                    .map(|i| self.tensors[i][idx[i] * m * m..(idx[i] + 1) * m * m].to_vec())
                    .collect();
                let mut v = crate::translation::apply_kronecker(&mats, m, fv);
                for x in &mut v {
                    *x = *x * gv[k];
                }
                v
            })
            .collect();
        let mut out = vec![T::zero(); len];
        for p in parts {
            for (o, v) in out.iter_mut().zip(p) {
                *o = *o + v;
            }
        }
        for (k, o) in out.iter_mut().enumerate() {
            *o = *o / self.grid.weight(k);
        }
        GridFunction::new(f.grid().clone(), out)
    }
}

/// `(f ∗ g)(x) = ∫ T^t f(x) g(t) t^a dt` on the grid of `f`.
pub fn convolve<T: Real>(
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    params: &BesselParams<T>,
) -> Result<GridFunction<T>> {
    f.check_compatible(g)?;
    if f.grid().params() != params {
        return Err(Error::GridMismatch("grid weight differs from params".into()));
    }
    GridConvolver::new(f.grid().clone(), 8)?.convolve(f, g)
}

/// Grid operator `f ↦ κ ∗ f` for a radial kernel in one dimension: the kernel enters through
/// its point values in a per-cell quadrature of `∫ T^t f(x) κ(t) t^a dt`, so only `f` is
/// discretised. Cell 0 uses a Jacobi rule matched to the kernel's power singularity.
#[derive(Debug, Clone)]
pub struct KernelOperator<T> {
    grid: Arc<Grid<T>>,
    matrix: Vec<T>,
}

impl<T: Real> KernelOperator<T> {
    pub fn new(kernel: &dyn Radial<T>, grid: Arc<Grid<T>>, q: usize) -> Result<Self> {
        if grid.n() != 1 {
            return Err(Error::Unsupported("kernel operator is one-dimensional".into()));
        }
        let tr = GridTranslator::new(grid.clone())?;
        let m = grid.m();
        let h = grid.h();
        let a = grid.params().a(0);
        let (r1, r2) = (lit::<T>(1e-9) * h, lit::<T>(1e-8) * h);
        let slope = (kernel.value(r1) / kernel.value(r2)).ln() / (r2 / r1).ln();
        let e = if slope.is_finite() && slope > lit(0.05) { a - slope } else { a };
        if !(e > -T::one()) {
            return Err(invalid("kernel", "not locally integrable"));
        }
        let rad = make_radial_rule(e, 2 * q)?;
        let gl = gauss_legendre::<T>(q)?;
        let top = kernel.reach().unwrap_or(T::infinity());
        let mut pts: Vec<(T, T)> = rad
            .nodes
            .iter()
            .zip(&rad.weights)
            .map(|(&u, &w)| {
                let t = u * h;
                (t, w * h.powf(e + T::one()) * kernel.value(t) * t.powf(a - e))
            })
            .collect();
        for k in 1..m {
            let lo = T::of(k) * h;
            if lo >= top {
                break;
            }
            for (&u, &w) in gl.nodes.iter().zip(&gl.weights) {
                let t = lo + h * lit(0.5) * (u + T::one());
                pts.push((t, w * h * lit(0.5) * t.powf(a) * kernel.value(t)));
            }
        }
        let add = |mut acc: Vec<T>, p: Vec<T>| {
            for (o, v) in acc.iter_mut().zip(p) {
                *o = *o + v;
            }
            acc
        };
        let matrix = pts
            .par_iter()
            .fold(
                || vec![T::zero(); m * m],
                |acc, &(t, w)| add(acc, tr.axis_matrix(0, t).into_iter().map(|v| v * w).collect()),
            )
            .reduce(|| vec![T::zero(); m * m], add);
        Ok(Self { grid, matrix })
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn apply(&self, f: &GridFunction<T>) -> Result<GridFunction<T>> {
        if !self.grid.compatible(f.grid()) {
            return Err(Error::GridMismatch("operator built for another grid".into()));
        }
        let m = self.grid.m();
        let v = f.values();
        let out = (0..m)
            .map(|i| (0..m).map(|j| self.matrix[i * m + j] * v[j]).sum())
            .collect();
        GridFunction::new(f.grid().clone(), out)
    }
}
