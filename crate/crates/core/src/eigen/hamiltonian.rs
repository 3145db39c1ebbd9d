use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::measure::DensityMeasure;
use crate::params::BesselParams;
use crate::scalar::{lit, Real};

/// Finite-volume `-Δ_a - v` on a cell-centred grid: fluxes `x^a ∂u` across cell faces,
/// a zero face weight at the origin, no flux through the outer boundary and the
/// `λ_a`-cell-averaged potential on the diagonal. Self-adjoint in `Σ w_i u_i v_i`.
#[derive(Debug, Clone)]
pub struct DiscreteHamiltonian<T> {
    grid: Arc<Grid<T>>,
    /// per axis, `face[k] = x_{k+1/2}^a / h` for the face between cells `k` and `k+1`
    faces: Vec<Vec<T>>,
    potential: Vec<T>,
}

/// Assembles the operator for `v` on `grid`.
pub fn discretize_hamiltonian<T: Real>(
    v: &DensityMeasure<T>,
    grid: &Arc<Grid<T>>,
    params: &BesselParams<T>,
) -> Result<DiscreteHamiltonian<T>> {
    DiscreteHamiltonian::new(v, grid, params)
}

impl<T: Real> DiscreteHamiltonian<T> {
    pub fn new(v: &DensityMeasure<T>, grid: &Arc<Grid<T>>, params: &BesselParams<T>) -> Result<Self> {
        if grid.params() != params || v.n() != params.n() {
            return Err(Error::GridMismatch("grid, potential and params disagree".into()));
        }
        let m = grid.m();
        let h = grid.h();
        let faces = (0..grid.n())
            .map(|i| {
                let a = params.a(i);
                (0..m - 1).map(|k| (T::of(k + 1) * h).powf(a) / h).collect()
            })
            .collect();
        let potential = (0..grid.len())
            .map(|k| {
                let idx = grid.unflatten(k);
                let lo: Vec<T> = idx.iter().map(|&i| T::of(i) * h).collect();
                let hi: Vec<T> = idx.iter().map(|&i| T::of(i + 1) * h).collect();
                v.box_mass(&lo, &hi, Some(params)) / grid.weight(k)
            })
            .collect::<Vec<T>>();
        if let Some(k) = potential.iter().position(|&p| !(p >= T::zero()) || !p.is_finite()) {
            return Err(invalid(
                "potential",
                format!("negative or non-finite cell average at {:?}", grid.point(k)),
            ));
        }
        Ok(Self {
            grid: grid.clone(),
            faces,
            potential,
        })
    }

    /// Operator with an explicit cell potential.
    pub fn with_cell_potential(grid: &Arc<Grid<T>>, potential: Vec<T>) -> Result<Self> {
        if potential.len() != grid.len() {
            return Err(Error::GridMismatch("potential length differs from grid".into()));
        }
        if potential.iter().any(|&p| !(p >= T::zero())) {
            return Err(invalid("potential", "must be non-negative"));
        }
        let zero = DensityMeasure::zero(grid.n());
        let mut h = Self::new(&zero, grid, grid.params())?;
        h.potential = potential;
        Ok(h)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn potential(&self) -> &[T] {
        &self.potential
    }

    pub fn len(&self) -> usize {
        self.potential.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potential.is_empty()
    }

    /// `(H - σ) u`.
    pub fn apply_shifted(&self, u: &[T], sigma: T) -> Vec<T> {
        let g = &self.grid;
        let m = g.m();
        let n = g.n();
        let mut out: Vec<T> = u
            .iter()
            .zip(&self.potential)
            .map(|(&x, &p)| -(p + sigma) * x)
            .collect();
        for axis in 0..n {
            let stride = m.pow((n - 1 - axis) as u32);
            let wts = g.cell_weights(axis);
            let faces = &self.faces[axis];
            for (flat, o) in out.iter_mut().enumerate() {
                let k = (flat / stride) % m;
                let mut acc = T::zero();
                if k > 0 {
                    acc = acc + faces[k - 1] * (u[flat] - u[flat - stride]);
                }
                if k + 1 < m {
                    acc = acc + faces[k] * (u[flat] - u[flat + stride]);
                }
                *o = *o + acc / wts[k];
            }
        }
        out
    }

    /// `H u`.
    pub fn apply(&self, u: &[T]) -> Vec<T> {
        self.apply_shifted(u, T::zero())
    }

    /// `Σ w_i u_i v_i`.
    pub fn inner(&self, u: &[T], v: &[T]) -> T {
        u.iter()
            .zip(v)
            .enumerate()
            .map(|(k, (&a, &b))| a * b * self.grid.weight(k))
            .sum()
    }

    /// `⟨H u, u⟩ / ⟨u, u⟩`.
    pub fn rayleigh(&self, u: &[T]) -> T {
        self.inner(&self.apply(u), u) / self.inner(u, u)
    }

    /// Symmetrised tridiagonal form `(diag, off)` of the one-dimensional operator.
    pub(crate) fn tridiagonal(&self) -> Option<(Vec<T>, Vec<T>)> {
        if self.grid.n() != 1 {
            return None;
        }
        let m = self.grid.m();
        let w = self.grid.cell_weights(0);
        let f = &self.faces[0];
        let diag = (0..m)
            .map(|k| {
                let left = if k > 0 { f[k - 1] } else { T::zero() };
                let right = if k + 1 < m { f[k] } else { T::zero() };
                (left + right) / w[k] - self.potential[k]
            })
            .collect();
        let off = (0..m - 1).map(|k| -f[k] / (w[k] * w[k + 1]).sqrt()).collect();
        Some((diag, off))
    }

    /// Lower bound `-max v` for the spectrum.
    pub fn spectrum_floor(&self) -> T {
        -self.potential.iter().copied().fold(T::zero(), T::max)
    }
}

/// Smallest eigenvalue with its eigenvector.
#[derive(Debug, Clone)]
pub struct EigenPair<T> {
    pub value: T,
    pub vector: GridFunction<T>,
    /// `‖(H - λ) u‖ / ‖u‖` in the weighted norm.
    pub residual: T,
    pub iterations: usize,
}

impl<T: Real> EigenPair<T> {
    /// Fraction of `∫ u² dλ_a` carried by cells with some coordinate beyond `frac · X`.
    pub fn tail_mass(&self, frac: T) -> T {
        let g = self.vector.grid();
        let cut = g.x_max() * frac;
        let mut tail = T::zero();
        let mut total = T::zero();
        for (k, &u) in self.vector.values().iter().enumerate() {
            let e = u * u * g.weight(k);
            total = total + e;
            if g.point(k).iter().any(|&x| x > cut) {
                tail = tail + e;
            }
        }
        tail / total
    }
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal `(d, e)`.
fn sturm_count<T: Real>(d: &[T], e: &[T], x: T) -> usize {
    let tiny = T::min_positive_value().sqrt();
    let mut q = d[0] - x;
    let mut count = usize::from(q < T::zero());
    for k in 1..d.len() {
        let qq = if q.abs() < tiny { tiny } else { q };
        q = d[k] - x - e[k - 1] * e[k - 1] / qq;
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

/// Solves `(T - σ) y = b` for symmetric tridiagonal `T` (no pivoting; `σ` below the spectrum
/// or close to an isolated eigenvalue).
fn tridiagonal_solve<T: Real>(d: &[T], e: &[T], sigma: T, b: &[T]) -> Vec<T> {
    let m = d.len();
    let mut c = vec![T::zero(); m];
    let mut y = vec![T::zero(); m];
    let guard = T::epsilon() * lit(1e3);
    let mut piv = d[0] - sigma;
    if piv.abs() < guard {
        piv = guard;
    }
    y[0] = b[0] / piv;
    for k in 1..m {
        c[k - 1] = e[k - 1] / piv;
        piv = d[k] - sigma - e[k - 1] * c[k - 1];
        if piv.abs() < guard {
            piv = guard;
        }
        y[k] = (b[k] - e[k - 1] * y[k - 1]) / piv;
    }
    for k in (0..m - 1).rev() {
        y[k] = y[k] - c[k] * y[k + 1];
    }
    y
}

fn normalise<T: Real>(h: &DiscreteHamiltonian<T>, u: &mut [T]) {
    let nrm = h.inner(u, u).sqrt();
    for x in u.iter_mut() {
        *x = *x / nrm;
    }
}

fn residual<T: Real>(h: &DiscreteHamiltonian<T>, u: &[T], lambda: T) -> T {
    let r = h.apply_shifted(u, lambda);
    (h.inner(&r, &r) / h.inner(u, u)).sqrt()
}

/// Smallest eigenvalue and eigenvector of `H` in the `λ_a` inner product.
///
/// One dimension: Sturm bisection on the symmetrised tridiagonal form, then inverse
/// iteration for the vector. Higher dimensions: inverse iteration with a fixed shift below
/// the spectrum, solving each step by conjugate gradients.
pub fn least_eigenpair<T: Real>(h: &DiscreteHamiltonian<T>, tol: T) -> Result<EigenPair<T>> {
    if !(tol > T::zero()) {
        return Err(invalid("tol", "must be positive"));
    }
    let grid = h.grid().clone();
    if let Some((d, e)) = h.tridiagonal() {
        let m = d.len();
        let mut lo = h.spectrum_floor() - T::one();
        let mut hi = d.iter().copied().fold(T::neg_infinity(), T::max) + T::one();
        for k in 0..e.len() {
            hi = hi.max(d[k] + e[k].abs() * lit(2.0));
        }
        for _ in 0..200 {
            let mid = (lo + hi) * lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if sturm_count(&d, &e, mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let lambda = (lo + hi) * lit(0.5);
        let w = grid.cell_weights(0);
        let mut y = vec![T::one(); m];
        let mut iterations = 0;
        let mut res = T::infinity();
        let mut value = lambda;
        for it in 0..8 {
            iterations = it + 1;
            y = tridiagonal_solve(&d, &e, lambda, &y);
            let nrm = y.iter().map(|&v| v * v).sum::<T>().sqrt();
            for v in &mut y {
                *v = *v / nrm;
            }
            let u: Vec<T> = y.iter().zip(w).map(|(&v, &wk)| v / wk.sqrt()).collect();
            value = h.rayleigh(&u);
            res = residual(h, &u, value);
            if res <= tol * (T::one() + value.abs()) {
                break;
            }
        }
        let mut u: Vec<T> = y.iter().zip(w).map(|(&v, &wk)| v / wk.sqrt()).collect();
        if u.iter().copied().sum::<T>() < T::zero() {
            u.iter_mut().for_each(|v| *v = -*v);
        }
        normalise(h, &mut u);
        if !(res <= tol * (T::one() + value.abs())) {
            return Err(Error::NoConvergence {
                what: "tridiagonal inverse iteration",
                iterations,
                residual: res.to_f64().unwrap_or(f64::NAN),
            });
        }
        return Ok(EigenPair {
            value,
            vector: GridFunction::new(grid, u)?,
            residual: res,
            iterations,
        });
    }
    let sigma = h.spectrum_floor() - T::one();
    let len = h.len();
    let mut u = vec![T::one(); len];
    normalise(h, &mut u);
    let max_outer = 20_000;
    let mut value = h.rayleigh(&u);
    let mut res = T::infinity();
    for it in 0..max_outer {
        let next = conjugate_gradient(h, sigma, &u, tol * lit(1e-2))?;
        u = next;
        normalise(h, &mut u);
        value = h.rayleigh(&u);
        res = residual(h, &u, value);
        if res <= tol * (T::one() + value.abs()) {
            return Ok(EigenPair {
                value,
                vector: GridFunction::new(grid, u)?,
                residual: res,
                iterations: it + 1,
            });
        }
    }
    let _ = value;
    Err(Error::NoConvergence {
        what: "shifted inverse iteration",
        iterations: max_outer,
        residual: res.to_f64().unwrap_or(f64::NAN),
    })
}

/// Smallest eigenvalue of `H` to residual `tol`.
pub fn least_eigenvalue<T: Real>(h: &DiscreteHamiltonian<T>, tol: T) -> Result<T> {
    Ok(least_eigenpair(h, tol)?.value)
}

/// Solves `(H - σ) x = b` by conjugate gradients in the weighted inner product.
fn conjugate_gradient<T: Real>(h: &DiscreteHamiltonian<T>, sigma: T, b: &[T], tol: T) -> Result<Vec<T>> {
    let len = b.len();
    let mut x = vec![T::zero(); len];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let bn = h.inner(b, b).sqrt();
    let mut rr = h.inner(&r, &r);
    let max_it = 20 * len + 100;
    for _ in 0..max_it {
        if rr.sqrt() <= tol * bn {
            return Ok(x);
        }
        let ap = h.apply_shifted(&p, sigma);
        let alpha = rr / h.inner(&p, &ap);
        for k in 0..len {
            x[k] = x[k] + alpha * p[k];
            r[k] = r[k] - alpha * ap[k];
        }
        let next = h.inner(&r, &r);
        let beta = next / rr;
        rr = next;
        for k in 0..len {
            p[k] = r[k] + beta * p[k];
        }
    }
    if rr.sqrt() <= tol * bn * lit(1e3) {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        what: "conjugate gradients",
        iterations: max_it,
        residual: (rr.sqrt() / bn).to_f64().unwrap_or(f64::NAN),
    })
}
