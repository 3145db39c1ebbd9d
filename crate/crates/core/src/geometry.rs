//! Orthant cubes and balls, weighted masses, doubling diagnostics and the distance `d(x,t,ϑ)`.

use rayon::prelude::*;

use crate::convolution::Convolver;
use crate::error::{invalid, Error, Result};
use crate::measure::{DensityMeasure, Factor};
use crate::params::BesselParams;
use crate::quad::Integrator;
use crate::scalar::{lit, Real};
use crate::specfun::Radial;

/// `Q(x, r) = Π(x_i - r, x_i + r) ∩ ℝⁿ₊`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthantCube<T> {
    center: Vec<T>,
    half: T,
}

impl<T: Real> OrthantCube<T> {
    pub fn new(center: Vec<T>, half: T) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::EmptyCube("cube needs at least one axis"));
        }
        if !(half > T::zero()) || !half.is_finite() {
            return Err(Error::EmptyCube("half-side must be positive and finite"));
        }
        if center.iter().any(|&c| !c.is_finite() || c + half <= T::zero()) {
            return Err(Error::EmptyCube("cube misses the orthant"));
        }
        Ok(Self { center, half })
    }

    /// Cube with lower corner `lo` and edge length `side` (no clipping needed).
    pub fn from_corner(lo: &[T], side: T) -> Result<Self> {
        let half = side * lit(0.5);
        Self::new(lo.iter().map(|&l| l + half).collect(), half)
    }

    pub fn n(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn half(&self) -> T {
        self.half
    }

    /// `l(Q) = 2r` before clipping.
    pub fn edge_length(&self) -> T {
        self.half * lit(2.0)
    }

    /// Lower corner of the realised set.
    pub fn lo(&self) -> Vec<T> {
        self.center.iter().map(|&c| (c - self.half).max(T::zero())).collect()
    }

    /// Upper corner of the realised set.
    pub fn hi(&self) -> Vec<T> {
        self.center.iter().map(|&c| c + self.half).collect()
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.iter()
            .zip(self.lo().iter().zip(self.hi()))
            .all(|(&v, (&l, h))| v >= l && v < h)
    }
}

/// `γ(Q)`, or `γ_a(Q) = ∫_Q x^a dγ` when `weighted`.
pub fn cube_mass<T: Real>(
    gamma: &DensityMeasure<T>,
    q: &OrthantCube<T>,
    params: &BesselParams<T>,
    weighted: bool,
) -> Result<T> {
    if q.n() != params.n() || gamma.n() != params.n() {
        return Err(invalid("cube", "dimension differs from params"));
    }
    Ok(gamma.box_mass(&q.lo(), &q.hi(), weighted.then_some(params)))
}

fn ball_rec<T: Real>(
    term: &[Factor<T>],
    axis: usize,
    x: &[T],
    r: T,
    a: &[T],
    integ: &Integrator<T>,
) -> T {
    let f = &term[axis];
    let lo = (x[axis] - r).max(T::zero());
    let hi = x[axis] + r;
    if axis + 1 == term.len() {
        return f.moment(a[axis], lo, hi);
    }
    let p = lo.max(f.support_lo());
    let q = hi.min(f.support_hi());
    if !(q > p) {
        return T::zero();
    }
    let mut sing = vec![x[axis] - r, x[axis] + r, T::zero()];
    sing.retain(|&s| s >= T::zero());
    integ.integrate(
        |t| {
            let d = t - x[axis];
            let rr = (r * r - d * d).max(T::zero()).sqrt();
            if rr == T::zero() {
                return T::zero();
            }
            f.value(t) * t.powf(a[axis]) * ball_rec(term, axis + 1, x, rr, a, integ)
        },
        p,
        q,
        &f.interior_breaks(),
        &sing,
    )
}

/// `γ(B(x, r) ∩ ℝⁿ₊)`, or the `x^a`-weighted mass when `weighted`.
pub fn ball_mass<T: Real>(
    gamma: &DensityMeasure<T>,
    x: &[T],
    r: T,
    params: &BesselParams<T>,
    weighted: bool,
) -> Result<T> {
    if !(r > T::zero()) {
        return Err(invalid("r", format!("radius must be positive, got {r}")));
    }
    if x.len() != params.n() || gamma.n() != params.n() {
        return Err(invalid("x", "dimension differs from params"));
    }
    let a: Vec<T> = (0..params.n())
        .map(|i| if weighted { params.a(i) } else { T::zero() })
        .collect();
    let integ = Integrator::new(3, lit(1.0));
    Ok(gamma
        .terms()
        .iter()
        .filter(|t| t.iter().all(|f| !f.is_zero()))
        .map(|t| ball_rec(t, 0, x, r, &a, &integ))
        .sum())
}

/// Finite sweep of centres and radii for doubling diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublingSweep<T> {
    pub centers: Vec<Vec<T>>,
    pub radii: Vec<T>,
    pub weighted: bool,
}

impl<T: Real> DoublingSweep<T> {
    /// `count` geometric radii on `[r_min, r_max]` and centres on a uniform grid
    /// (`per_axis` points per axis) in `[0, min(x_max, support)]^n`.
    pub fn new(
        gamma: &DensityMeasure<T>,
        x_max: T,
        per_axis: usize,
        r_min: T,
        r_max: T,
        count: usize,
    ) -> Result<Self> {
        if !(r_min > T::zero() && r_max >= r_min) || count == 0 || per_axis == 0 {
            return Err(invalid("sweep", "need 0 < r_min <= r_max and non-empty sweeps"));
        }
        let n = gamma.n();
        let radii = if count == 1 {
            vec![r_min]
        } else {
            let ratio = (r_max / r_min).ln() / T::of(count - 1);
            (0..count).map(|k| r_min * (ratio * T::of(k)).exp()).collect()
        };
        let tops: Vec<T> = (0..n).map(|i| x_max.min(gamma.support_hi(i))).collect();
        let total = per_axis.pow(n as u32);
        let centers = (0..total)
            .map(|mut k| {
                let mut c = vec![T::zero(); n];
                for i in (0..n).rev() {
                    let j = k % per_axis;
                    k /= per_axis;
                    c[i] = if per_axis == 1 {
                        T::zero()
                    } else {
                        tops[i] * T::of(j) / T::of(per_axis - 1)
                    };
                }
                c
            })
            .collect();
        Ok(Self {
            centers,
            radii,
            weighted: false,
        })
    }

    /// Default sweep: radii `[1e-2, 4]` (25 levels), 17 centres per axis in `[0, 8]`.
    pub fn standard(gamma: &DensityMeasure<T>) -> Result<Self> {
        Self::new(gamma, lit(8.0), 17, lit(1e-2), lit(4.0), 25)
    }

    pub fn weighted(mut self, on: bool) -> Self {
        self.weighted = on;
        self
    }
}

/// Outcome of a doubling sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublingReport<T> {
    /// `max γ(B(x,2r)) / γ(B(x,r))` over the sweep.
    pub ratio: T,
    pub worst_center: Vec<T>,
    pub worst_radius: T,
    pub evaluations: usize,
}

impl<T: Real> DoublingReport<T> {
    /// Whether the ratio stays at or below `threshold` (a necessary condition only).
    pub fn passes(&self, threshold: T) -> bool {
        self.ratio <= threshold
    }
}

/// Largest doubling ratio on the sweep; errors on a zero-mass ball.
pub fn doubling_ratio<T: Real>(
    gamma: &DensityMeasure<T>,
    sweep: &DoublingSweep<T>,
    params: &BesselParams<T>,
) -> Result<DoublingReport<T>> {
    if sweep.centers.is_empty() || sweep.radii.is_empty() {
        return Err(invalid("sweep", "empty sweep"));
    }
    let cases: Vec<(usize, T)> = (0..sweep.centers.len())
        .flat_map(|c| sweep.radii.iter().map(move |&r| (c, r)))
        .collect();
    let vals = cases
        .par_iter()
        .map(|&(c, r)| {
            let x = &sweep.centers[c];
            let small = ball_mass(gamma, x, r, params, sweep.weighted)?;
            if !(small > T::zero()) {
                return Err(invalid(
                    "sweep",
                    format!("ball of radius {r} around {x:?} has zero mass"),
                ));
            }
            let big = ball_mass(gamma, x, r * lit(2.0), params, sweep.weighted)?;
            Ok(big / small)
        })
        .collect::<Result<Vec<T>>>()?;
    let (k, ratio) = vals
        .iter()
        .enumerate()
        .fold((0, T::neg_infinity()), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    Ok(DoublingReport {
        ratio,
        worst_center: sweep.centers[cases[k].0].clone(),
        worst_radius: cases[k].1,
        evaluations: vals.len(),
    })
}

/// `d(x,t,ϑ) = Σ x_i² + t_i² - 2 x_i t_i cos ϑ_i`.
pub fn bessel_distance<T: Real>(x: &[T], t: &[T], theta: &[T]) -> T {
    x.iter()
        .zip(t)
        .zip(theta)
        .map(|((&xi, &ti), &th)| {
            let s = (th * lit(0.5)).sin();
            (xi - ti) * (xi - ti) + lit::<T>(4.0) * xi * ti * s * s
        })
        .sum()
}

/// `(D, N)` with `D = |√d(t,u,ϑ) - √d(x,y,ϑ)|` and `N = d(t,u,ϑ) + d(x,y,ϑ)`.
pub fn distance_gap<T: Real>(x: &[T], y: &[T], t: &[T], u: &[T], theta: &[T]) -> (T, T) {
    let p = bessel_distance(t, u, theta);
    let q = bessel_distance(x, y, theta);
    ((p.sqrt() - q.sqrt()).abs(), p + q)
}

fn euclid<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt()
}

/// Right-hand side of the gap bound `2 max{‖x-t‖, ‖y-u‖} (3 + √2 ‖y-t‖/√N)`.
pub fn gap_bound<T: Real>(x: &[T], y: &[T], t: &[T], u: &[T], theta: &[T]) -> T {
    let (_, nn) = distance_gap(x, y, t, u, theta);
    let m = euclid(x, t).max(euclid(y, u));
    if m == T::zero() {
        return T::zero();
    }
    lit::<T>(2.0) * m * (lit::<T>(3.0) + T::SQRT_2() * euclid(y, t) / nn.sqrt())
}

/// `max{A + 1, 2B + (B+1)²/(A-1)}` for the comparison `d(z,y,ϑ) ≤ C d(x,y,ϑ)`
/// whenever `‖z-y‖ ≤ B‖x-y‖`.
pub fn comparison_constant<T: Real>(a: T, b: T) -> Result<T> {
    if !(a > T::one()) || !(b >= T::zero()) {
        return Err(invalid("A, B", "need A > 1 and B >= 0"));
    }
    Ok((a + T::one()).max(lit::<T>(2.0) * b + (b + T::one()) * (b + T::one()) / (a - T::one())))
}

/// `(B + 2)²`: with `‖z-y‖ ≤ B‖x-y‖`, `√d(z,y,ϑ) ≤ √d(x,y,ϑ) + ‖x-z‖ ≤ (B+2)√d(x,y,ϑ)`
/// because `√d` is a Euclidean distance between points of `ℂⁿ` and `‖x-y‖² ≤ d(x,y,ϑ)`.
pub fn sharp_comparison_constant<T: Real>(b: T) -> Result<T> {
    if !(b >= T::zero()) {
        return Err(invalid("B", "need B >= 0"));
    }
    Ok((b + lit(2.0)) * (b + lit(2.0)))
}

/// Geometric radii on `(0, 1]` used by the truncated maximal function.
pub fn default_radius_grid<T: Real>() -> Vec<T> {
    let count = 61;
    (0..count)
        .map(|k| lit::<T>(10.0).powf(-lit::<T>(3.0) * T::of(count - 1 - k) / T::of(count - 1)))
        .collect()
}

/// `sup_r (χ_{B₊(0,r)} ∗ γ)(x) / r^{n+|a|-ν}` over the radii in `r_grid ⊂ (0, 1]`.
pub fn maximal_function<T: Real>(
    gamma: &DensityMeasure<T>,
    x: &[T],
    nu: T,
    params: &BesselParams<T>,
    r_grid: &[T],
) -> Result<T> {
    if r_grid.is_empty() {
        return Err(Error::Empty("radius grid"));
    }
    if !(nu > T::zero()) {
        return Err(invalid("nu", "must be positive"));
    }
    if r_grid.iter().any(|&r| !(r > T::zero() && r <= T::one())) {
        return Err(invalid("r_grid", "radii must lie in (0, 1]"));
    }
    let cv = Convolver::new(params)?;
    let e = params.hom_dim() - nu;
    let vals = r_grid
        .par_iter()
        .map(|&r| Ok(cv.ball(r, gamma, x)? / r.powf(e)))
        .collect::<Result<Vec<T>>>()?;
    Ok(vals.into_iter().fold(T::zero(), T::max))
}

/// Dyadic cubes of `[0, X]^n` at depths `0..=depth`, anchored at the origin.
pub fn dyadic_cubes<T: Real>(n: usize, x_max: T, depth: u32) -> Result<Vec<(u32, OrthantCube<T>)>> {
    if n == 0 || !(x_max > T::zero()) {
        return Err(invalid("dyadic", "need n >= 1 and X > 0"));
    }
    let mut out = Vec::new();
    for k in 0..=depth {
        let per = 1usize << k;
        let side = x_max / T::of(per);
        for flat in 0..per.pow(n as u32) {
            let mut rem = flat;
            let mut lo = vec![T::zero(); n];
            for i in (0..n).rev() {
                lo[i] = side * T::of(rem % per);
                rem /= per;
            }
            out.push((k, OrthantCube::from_corner(&lo, side)?));
        }
    }
    Ok(out)
}

/// `γ(Q) Π max{x_i, r}^{a_i} / γ_a(Q)`, which stays in a fixed band for doubling `γ`.
pub fn weight_comparison<T: Real>(
    gamma: &DensityMeasure<T>,
    q: &OrthantCube<T>,
    params: &BesselParams<T>,
) -> Result<T> {
    let plain = cube_mass(gamma, q, params, false)?;
    let weighted = cube_mass(gamma, q, params, true)?;
    if !(weighted > T::zero()) {
        return Err(Error::EmptyCube("cube has zero weighted mass"));
    }
    let f = q
        .center()
        .iter()
        .enumerate()
        .fold(T::one(), |acc, (i, &x)| acc * x.max(q.half()).powf(params.a(i)));
    Ok(plain * f / weighted)
}
