//! Cell-centred tensor grids on `[0, X]^n` with exact `λ_a` cell weights.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::params::BesselParams;
use crate::quad::{gauss_legendre, make_radial_rule};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    params: BesselParams<T>,
    x_max: T,
    m: usize,
    h: T,
    nodes: Vec<T>,
    /// `cell_weights[i][k] = ∫_{kh}^{(k+1)h} x^{a_i} dx`.
    cell_weights: Vec<Vec<T>>,
}

/// `∫_lo^hi x^a dx`.
pub fn power_moment<T: Real>(a: T, lo: T, hi: T) -> T {
    let e = a + T::one();
    (hi.powf(e) - lo.max(T::zero()).powf(e)) / e
}

impl<T: Real> Grid<T> {
    pub fn new(params: &BesselParams<T>, x_max: T, m: usize) -> Result<Arc<Self>> {
        if !(x_max > T::zero()) {
            return Err(invalid("x_max", format!("box size must be positive, got {x_max}")));
        }
        if m < 2 {
            return Err(invalid("m", "need at least 2 cells per axis"));
        }
        let h = x_max / T::of(m);
        let nodes = (0..m).map(|k| (T::of(k) + lit(0.5)) * h).collect();
        let cell_weights = (0..params.n())
            .map(|i| {
                let a = params.a(i);
                (0..m)
                    .map(|k| power_moment(a, T::of(k) * h, T::of(k + 1) * h))
                    .collect()
            })
            .collect();
        Ok(Arc::new(Self {
            params: params.clone(),
            x_max,
            m,
            h,
            nodes,
            cell_weights,
        }))
    }

    pub fn params(&self) -> &BesselParams<T> {
        &self.params
    }
    pub fn n(&self) -> usize {
        self.params.n()
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn x_max(&self) -> T {
        self.x_max
    }
    pub fn h(&self) -> T {
        self.h
    }
    /// Cell centres along one axis.
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }
    pub fn cell_weights(&self, axis: usize) -> &[T] {
        &self.cell_weights[axis]
    }
    /// Number of grid points, `m^n`.
    pub fn len(&self) -> usize {
        self.m.pow(self.n() as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-index of a flat index (axis 0 slowest).
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let n = self.n();
        let mut idx = vec![0; n];
        for i in (0..n).rev() {
            idx[i] = flat % self.m;
            flat /= self.m;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &k| acc * self.m + k)
    }

    pub fn point(&self, flat: usize) -> Vec<T> {
        self.unflatten(flat).into_iter().map(|k| self.nodes[k]).collect()
    }

    /// `λ_a` weight of a cell.
    pub fn weight(&self, flat: usize) -> T {
        self.unflatten(flat)
            .iter()
            .enumerate()
            .fold(T::one(), |acc, (i, &k)| acc * self.cell_weights[i][k])
    }

    pub fn weights(&self) -> Vec<T> {
        (0..self.len()).map(|f| self.weight(f)).collect()
    }

    pub fn compatible(&self, other: &Grid<T>) -> bool {
        self == other
    }
}

/// Values on a [`Grid`], read as a piecewise-constant function on the cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(grid: Arc<Grid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let values = vec![T::zero(); grid.len()];
        Self { grid, values }
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn<F: Fn(&[T]) -> T>(grid: Arc<Grid<T>>, f: F) -> Self {
        let values = (0..grid.len()).map(|k| f(&grid.point(k))).collect();
        Self { grid, values }
    }

    /// `λ_a`-weighted cell averages of `f` (tensor Gauss rule per cell, 6 points per axis).
    pub fn from_cell_average<F: Fn(&[T]) -> T>(grid: Arc<Grid<T>>, f: F) -> Self {
        let q = 6;
        let gl = gauss_legendre::<T>(q).expect("rule");
        let h = grid.h();
        // per axis: cell 0 uses the radial rule for x^a, others Legendre times x^a
        let axis_rules: Vec<Vec<Vec<(T, T)>>> = (0..grid.n())
            .map(|i| {
                let a = grid.params().a(i);
                let rad = make_radial_rule(a, q).expect("rule");
                (0..grid.m())
                    .map(|k| {
                        let pts: Vec<(T, T)> = if k == 0 {
                            rad.nodes
                                .iter()
                                .zip(&rad.weights)
                                .map(|(&x, &w)| (x * h, w * h.powf(a + T::one())))
                                .collect()
                        } else {
                            let lo = T::of(k) * h;
                            gl.nodes
                                .iter()
                                .zip(&gl.weights)
                                .map(|(&u, &w)| {
                                    let x = lo + h * lit(0.5) * (u + T::one());
                                    (x, w * h * lit(0.5) * x.powf(a))
                                })
                                .collect()
                        };
                        let s: T = pts.iter().map(|p| p.1).sum();
                        let w = grid.cell_weights(i)[k];
                        pts.into_iter().map(|(x, v)| (x, v * w / s)).collect()
                    })
                    .collect()
            })
            .collect();
        let n = grid.n();
        let values = (0..grid.len())
            .map(|flat| {
                let idx = grid.unflatten(flat);
                let mut sum = T::zero();
                let mut x = vec![T::zero(); n];
                let total = q.pow(n as u32);
                for c in 0..total {
                    let mut rem = c;
                    let mut w = T::one();
                    for i in (0..n).rev() {
                        let (xi, wi) = axis_rules[i][idx[i]][rem % q];
                        rem /= q;
                        x[i] = xi;
                        w = w * wi;
                    }
                    sum = sum + w * f(&x);
                }
                sum / grid.weight(flat)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| c * v)
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.compatible(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch("grids differ in size, box or weight".into()))
        }
    }

    /// `∫ f dλ_a`.
    pub fn integral(&self) -> T {
        self.values
            .iter()
            .enumerate()
            .map(|(k, &v)| v * self.grid.weight(k))
            .sum()
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// `‖f‖_{p,a}`; `p = ∞` gives `max |f|`.
    pub fn norm(&self, p: T) -> Result<T> {
        if !(p >= T::one()) {
            return Err(invalid("p", format!("need p >= 1, got {p}")));
        }
        if p.is_infinite() {
            return Ok(self.sup_norm());
        }
        let s: T = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| v.abs().powf(p) * self.grid.weight(k))
            .sum();
        Ok(s.powf(T::one() / p))
    }

    /// `⟨f, g⟩_a`.
    pub fn inner(&self, other: &Self) -> Result<T> {
        self.check_compatible(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(k, (&a, &b))| a * b * self.grid.weight(k))
            .sum())
    }

    /// Multilinear interpolation through the cell centres, extended evenly across
    /// each coordinate hyperplane and by zero outside the box.
    pub fn interpolate(&self, x: &[T]) -> T {
        let g = &self.grid;
        let n = g.n();
        let m = g.m();
        let mut lo = [0usize; 8];
        let mut hi = [0usize; 8];
        let mut fr = [T::zero(); 8];
        for i in 0..n {
            let y = x[i].abs();
            if y > g.x_max() {
                return T::zero();
            }
            let s = y / g.h() - lit(0.5);
            if s <= T::zero() {
                lo[i] = 0;
                hi[i] = 0;
                fr[i] = T::zero();
            } else {
                let k = s.floor().to_usize().unwrap_or(0);
                if k + 1 >= m {
                    lo[i] = m - 1;
                    hi[i] = m - 1;
                    fr[i] = T::zero();
                } else {
                    lo[i] = k;
                    hi[i] = k + 1;
                    fr[i] = s - T::of(k);
                }
            }
        }
        let mut acc = T::zero();
        for corner in 0..(1usize << n) {
            let mut w = T::one();
            let mut flat = 0;
            for i in 0..n {
                let up = corner >> i & 1 == 1;
                w = w * if up { fr[i] } else { T::one() - fr[i] };
                flat = flat * m + if up { hi[i] } else { lo[i] };
            }
            if w != T::zero() {
                acc = acc + w * self.values[flat];
            }
        }
        acc
    }
}

fn check_params<T: Real>(f: &GridFunction<T>, params: &BesselParams<T>) -> Result<()> {
    if f.grid().params() != params {
        return Err(Error::GridMismatch("grid weight differs from params".into()));
    }
    Ok(())
}

/// `(∫ |f|^p x^a dx)^{1/p}` over the truncated grid.
pub fn weighted_norm<T: Real>(f: &GridFunction<T>, p: T, params: &BesselParams<T>) -> Result<T> {
    check_params(f, params)?;
    f.norm(p)
}

/// `⟨f, g⟩_a = ∫ f g x^a dx`.
pub fn weighted_inner_product<T: Real>(
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    params: &BesselParams<T>,
) -> Result<T> {
    check_params(f, params)?;
    f.inner(g)
}
