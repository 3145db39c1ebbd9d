use std::fmt::Debug;
use std::sync::Arc;

use super::bessel::modified_bessel_k;
use super::gamma::ln_gamma;
use crate::cheb::Chebyshev;
use crate::error::{invalid, Result};
use crate::params::BesselParams;
use crate::scalar::{lit, Real};

/// A function of one non-negative variable with known breakpoints and support.
pub trait Radial<T>: Send + Sync + Debug {
    fn value(&self, r: T) -> T;

    /// `-g'(r)`, when available.
    fn neg_derivative(&self, _r: T) -> Option<T> {
        None
    }

    /// Points in `(0, ∞)` where the function or its derivative is not smooth.
    fn breakpoints(&self) -> Vec<T> {
        Vec::new()
    }

    /// The function vanishes (to working precision) beyond this radius.
    fn reach(&self) -> Option<T> {
        None
    }
}

/// Radial kernel `r ↦ k · shape(c r)` with homogeneous-dimension metadata `n + |a|`.
#[derive(Debug, Clone)]
pub struct RadialProfile<T> {
    shape: Arc<dyn Radial<T>>,
    dilation: T,
    prefactor: T,
    hom_dim: T,
}

impl<T: Real> RadialProfile<T> {
    pub fn new(shape: Arc<dyn Radial<T>>, hom_dim: T) -> Self {
        Self {
            shape,
            dilation: T::one(),
            prefactor: T::one(),
            hom_dim,
        }
    }

    pub fn hom_dim(&self) -> T {
        self.hom_dim
    }

    pub fn has_derivative(&self) -> bool {
        self.shape.neg_derivative(T::one()).is_some()
    }

    /// Same profile multiplied by `k`.
    pub fn times(&self, k: T) -> Self {
        Self {
            prefactor: self.prefactor * k,
            ..self.clone()
        }
    }

    /// Checks non-negativity, monotonicity and local integrability on a sample grid.
    pub fn check_invariants(&self) -> Result<()> {
        let mut prev = T::infinity();
        let top = self.reach().unwrap_or(lit(20.0));
        for k in 1..=400 {
            let r = top * T::of(k) / lit(400.0);
            let g = self.value(r);
            if g < T::zero() || g > prev * (T::one() + lit::<T>(1e-12)) {
                return Err(invalid("profile", format!("not non-negative and non-increasing at r = {r}")));
            }
            prev = g;
        }
        let small = self.value(lit(1e-8)) * lit::<T>(1e-8).powf(self.hom_dim);
        if !small.is_finite() || small > lit(1e-2) {
            return Err(invalid("profile", "not locally integrable against r^{n+|a|-1}"));
        }
        Ok(())
    }
}

impl<T: Real> Radial<T> for RadialProfile<T> {
    fn value(&self, r: T) -> T {
        self.prefactor * self.shape.value(self.dilation * r)
    }

    fn neg_derivative(&self, r: T) -> Option<T> {
        self.shape
            .neg_derivative(self.dilation * r)
            .map(|d| d * self.prefactor * self.dilation)
    }

    fn breakpoints(&self) -> Vec<T> {
        self.shape
            .breakpoints()
            .into_iter()
            .map(|b| b / self.dilation)
            .collect()
    }

    fn reach(&self) -> Option<T> {
        self.shape.reach().map(|r| r / self.dilation)
    }
}

/// `g(r) = g_0(c r)`.
pub fn scale_profile<T: Real>(g: &RadialProfile<T>, c: T) -> Result<RadialProfile<T>> {
    if !(c > T::zero()) {
        return Err(invalid("c", format!("dilation must be positive, got {c}")));
    }
    Ok(RadialProfile {
        dilation: g.dilation * c,
        ..g.clone()
    })
}

/// Profile from closures.
pub struct FnShape<F, D> {
    pub f: F,
    pub neg_d: Option<D>,
    pub breaks: Vec<f64>,
    pub reach: Option<f64>,
}

impl<F, D> Debug for FnShape<F, D> {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("FnShape").field("breaks", &self.breaks).finish()
    }
}

impl<T, F, D> Radial<T> for FnShape<F, D>
where
    T: Real,
    F: Fn(T) -> T + Send + Sync,
    D: Fn(T) -> T + Send + Sync,
{
    fn value(&self, r: T) -> T {
        (self.f)(r)
    }

    fn neg_derivative(&self, r: T) -> Option<T> {
        self.neg_d.as_ref().map(|d| d(r))
    }

    fn breakpoints(&self) -> Vec<T> {
        self.breaks.iter().map(|&b| lit(b)).collect()
    }

    fn reach(&self) -> Option<T> {
        self.reach.map(lit)
    }
}

#[derive(Debug)]
struct Tent;

impl<T: Real> Radial<T> for Tent {
    fn value(&self, r: T) -> T {
        (T::one() - r).max(T::zero())
    }

    fn neg_derivative(&self, r: T) -> Option<T> {
        Some(if r < T::one() { T::one() } else { T::zero() })
    }

    fn breakpoints(&self) -> Vec<T> {
        vec![T::one()]
    }

    fn reach(&self) -> Option<T> {
        Some(T::one())
    }
}

/// The tent `max(0, 1 - r)`.
pub fn tent_profile<T: Real>(params: &BesselParams<T>) -> RadialProfile<T> {
    RadialProfile::new(Arc::new(Tent), params.hom_dim())
}

#[derive(Debug)]
struct Panel<T> {
    g: Chebyshev<T>,
    d: Chebyshev<T>,
}

/// `C K_κ(r) / r^κ`, tabulated piecewise: geometric panels `[2^{-k-1}, 2^{-k}]` below 1
/// and unit panels above.
#[derive(Debug)]
struct BesselShape<T> {
    kappa: T,
    c: T,
    small: Vec<Panel<T>>,
    large: Vec<Panel<T>>,
    r_min: T,
    r_cut: T,
}

const GEOMETRIC_PANELS: i32 = 30;
const PANEL_NODES: usize = 22;

impl<T: Real> BesselShape<T> {
    fn new(kappa: T, c: T, r_cut: T) -> Result<Self> {
        let exact_g = |r: T| -> T { c * modified_bessel_k(kappa, r).unwrap_or(T::nan()) * r.powf(-kappa) };
        let exact_d = |r: T| -> T {
            c * modified_bessel_k(kappa + T::one(), r).unwrap_or(T::nan()) * r.powf(-kappa)
        };
        let mk = |lo: T, hi: T| Panel {
            g: Chebyshev::fit(exact_g, lo, hi, PANEL_NODES),
            d: Chebyshev::fit(exact_d, lo, hi, PANEL_NODES),
        };
        let small = (0..GEOMETRIC_PANELS)
            .map(|k| {
                let hi = lit::<T>(0.5).powi(k);
                mk(hi * lit(0.5), hi)
            })
            .collect();
        let nl = (r_cut - T::one()).ceil().to_usize().unwrap_or(1);
        let large = (0..nl)
            .map(|k| mk(T::one() + T::of(k), lit::<T>(2.0) + T::of(k)))
            .collect();
        let shape = Self {
            kappa,
            c,
            small,
            large,
            r_min: lit::<T>(0.5).powi(GEOMETRIC_PANELS),
            r_cut,
        };
        if !shape.value(T::one()).is_finite() {
            return Err(invalid("nu", "kernel evaluation failed"));
        }
        Ok(shape)
    }

    #[inline]
    fn panel(&self, r: T) -> Option<&Panel<T>> {
        if r < self.r_min || r >= self.r_cut {
            return None;
        }
        if r < T::one() {
            let k = (-r.log2()).floor().to_usize().unwrap_or(0);
            self.small.get(k.min(self.small.len() - 1))
        } else {
            let k = (r - T::one()).floor().to_usize().unwrap_or(0);
            self.large.get(k.min(self.large.len() - 1))
        }
    }
}

impl<T: Real> Radial<T> for BesselShape<T> {
    fn value(&self, r: T) -> T {
        if r >= self.r_cut {
            return T::zero();
        }
        match self.panel(r) {
            Some(p) => p.g.eval(r),
            None => self.c * modified_bessel_k(self.kappa, r).unwrap_or(T::infinity()) * r.powf(-self.kappa),
        }
    }

    fn neg_derivative(&self, r: T) -> Option<T> {
        if r >= self.r_cut {
            return Some(T::zero());
        }
        Some(match self.panel(r) {
            Some(p) => p.d.eval(r),
            None => {
                self.c
                    * modified_bessel_k(self.kappa + T::one(), r).unwrap_or(T::infinity())
                    * r.powf(-self.kappa)
            }
        })
    }

    fn reach(&self) -> Option<T> {
        Some(self.r_cut)
    }
}

fn kernel_constants<T: Real>(params: &BesselParams<T>, nu: T) -> Result<(T, T)> {
    if !(nu > T::zero()) || !nu.is_finite() {
        return Err(invalid("nu", format!("need nu > 0, got {nu}")));
    }
    let n = T::of(params.n());
    let abs_a = params.abs_a();
    let kappa = (n + abs_a - nu) * lit(0.5);
    let mut ln_c = ((n - abs_a - nu) * lit(0.5) + T::one()) * T::LN_2() - ln_gamma(nu * lit(0.5));
    for &al in params.alphas() {
        ln_c = ln_c - ln_gamma(al + T::one());
    }
    Ok((kappa, ln_c.exp()))
}

/// `G_{a,ν}(r)` evaluated directly from `K_κ` (no tabulation).
pub fn bessel_kernel_value<T: Real>(params: &BesselParams<T>, nu: T, r: T) -> Result<T> {
    let (kappa, c) = kernel_constants(params, nu)?;
    Ok(c * modified_bessel_k(kappa, r)? * r.powf(-kappa))
}

/// Bessel kernel `G_{a,ν}` with unit `λ_a` mass.
pub fn bessel_kernel_profile<T: Real>(params: &BesselParams<T>, nu: T) -> Result<RadialProfile<T>> {
    let (kappa, c) = kernel_constants(params, nu)?;
    let r_cut = lit::<T>(40.0) + lit::<T>(2.0) * params.hom_dim();
    let shape = BesselShape::new(kappa, c, r_cut)?;
    Ok(RadialProfile::new(Arc::new(shape), params.hom_dim()))
}

/// `β^{(n+|a|-ν)/2} G_{a,ν}(√β r)`, whose Hankel transform is `(β + ξ²)^{-ν/2}`.
pub fn scaled_bessel<T: Real>(params: &BesselParams<T>, nu: T, beta: T) -> Result<RadialProfile<T>> {
    if !(beta > T::zero()) {
        return Err(invalid("beta", format!("need beta > 0, got {beta}")));
    }
    let g = bessel_kernel_profile(params, nu)?;
    let k = beta.powf((params.hom_dim() - nu) * lit(0.5));
    Ok(scale_profile(&g, beta.sqrt())?.times(k))
}

/// `G^β_{a,1}(r) = β^{(n-1+|a|)/2} G_{a,1}(√β r)`.
pub fn scaled_bessel_one<T: Real>(params: &BesselParams<T>, beta: T) -> Result<RadialProfile<T>> {
    scaled_bessel(params, T::one(), beta)
}
