//! Gauss rules (Golub–Welsch), tanh-sinh panels and a breakpoint-aware integrator.

use crate::error::{invalid, Error, Result};
use crate::scalar::{lit, Real};
use crate::specfun::ln_gamma;

/// What a rule integrates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// `∫_0^π f(cos θ) sin^{2α}θ dθ`; nodes are angles.
    Angular,
    /// `∫_0^1 f(t) t^a dt`.
    Radial,
    /// `∫_{-1}^1 f(u) (1-u)^p (1+u)^q du`.
    Jacobi,
}

#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    pub kind: RuleKind,
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    pub order: usize,
}

impl<T: Real> QuadratureRule<T> {
    pub fn weight_sum(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// `Σ w_j f(node_j)`.
    pub fn apply<F: Fn(T) -> T>(&self, f: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Jacobi rule for `(1-u)^p (1+u)^q` on `[-1, 1]`, nodes ascending.
pub fn gauss_jacobi<T: Real>(m: usize, p: T, q: T) -> Result<QuadratureRule<T>> {
    if m < 1 {
        return Err(invalid("m", "rule order must be at least 1"));
    }
    if !(p > -T::one() && q > -T::one()) {
        return Err(invalid("jacobi", "exponents must exceed -1"));
    }
    let one = T::one();
    let two = lit::<T>(2.0);
    let s = p + q;
    let mut diag = vec![T::zero(); m];
    let mut off = vec![T::zero(); m];
    diag[0] = (q - p) / (s + two);
    for k in 1..m {
        let kk = T::of(k);
        let c = two * kk + s;
        diag[k] = (q * q - p * p) / (c * (c + two));
        let b = if k == 1 {
            lit::<T>(4.0) * (one + p) * (one + q) / ((two + s) * (two + s) * (lit::<T>(3.0) + s))
        } else {
            lit::<T>(4.0) * kk * (kk + p) * (kk + q) * (kk + s) / (c * c * (c + one) * (c - one))
        };
        off[k] = b.sqrt();
    }
    let ln_mu0 = (s + one) * T::LN_2() + ln_gamma(p + one) + ln_gamma(q + one) - ln_gamma(s + two);
    let (nodes, z) = tridiagonal_eigen(diag, off)?;
    let mu0 = ln_mu0.exp();
    let weights = z.iter().map(|&v| mu0 * v * v).collect();
    Ok(QuadratureRule {
        kind: RuleKind::Jacobi,
        nodes,
        weights,
        order: m,
    })
}

pub fn gauss_legendre<T: Real>(m: usize) -> Result<QuadratureRule<T>> {
    gauss_jacobi(m, T::zero(), T::zero())
}

/// Gauss rule for `∫_0^π f(cos θ) sin^{2α}θ dθ`, via `u = cos θ` and the weight `(1-u²)^{α-1/2}`.
/// Nodes are the angles `θ_j ∈ (0, π)`, ascending.
pub fn make_angular_rule<T: Real>(alpha: T, m: usize) -> Result<QuadratureRule<T>> {
    if !(alpha > lit(-0.5)) {
        return Err(invalid("alpha", format!("need alpha > -1/2, got {alpha}")));
    }
    if m < 1 {
        return Err(invalid("m", "rule order must be at least 1"));
    }
    let e = alpha - lit(0.5);
    let r = gauss_jacobi(m, e, e)?;
    let mut nodes: Vec<T> = r.nodes.iter().map(|&u| u.max(-T::one()).min(T::one()).acos()).collect();
    let mut weights = r.weights;
    nodes.reverse();
    weights.reverse();
    Ok(QuadratureRule {
        kind: RuleKind::Angular,
        nodes,
        weights,
        order: m,
    })
}

/// Gauss rule for `∫_0^1 f(t) t^a dt`.
pub fn make_radial_rule<T: Real>(a: T, m: usize) -> Result<QuadratureRule<T>> {
    let r = gauss_jacobi(m, T::zero(), a)?;
    let half = lit::<T>(0.5);
    let scale = half.powf(a + T::one());
    Ok(QuadratureRule {
        kind: RuleKind::Radial,
        nodes: r.nodes.iter().map(|&u| half * (u + T::one())).collect(),
        weights: r.weights.iter().map(|&w| w * scale).collect(),
        order: m,
    })
}

/// Implicit QL on a symmetric tridiagonal matrix. `off[k]` couples rows `k-1` and `k`
/// (`off[0]` unused). Returns ascending eigenvalues and the first component of each
/// normalised eigenvector.
pub(crate) fn tridiagonal_eigen<T: Real>(mut d: Vec<T>, off: Vec<T>) -> Result<(Vec<T>, Vec<T>)> {
    let n = d.len();
    let mut e = vec![T::zero(); n];
    e[..(n - 1)].copy_from_slice(&off[1..n]);
    let mut z = vec![T::zero(); n];
    z[0] = T::one();
    let two = lit::<T>(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::NoConvergence {
                    what: "tridiagonal QL",
                    iterations: iter,
                    residual: e[l].f64(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r } else { -r });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let fz = z[i + 1];
                z[i + 1] = s * z[i] + c * fz;
                z[i] = c * z[i] - s * fz;
            }
            if early {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    Ok((idx.iter().map(|&k| d[k]).collect(), idx.iter().map(|&k| z[k]).collect()))
}

/// Tanh-sinh rule on `[-1, 1]`, stored as distances from the endpoints.
#[derive(Debug, Clone)]
pub struct TanhSinh<T> {
    center: T,
    /// `(1 - u_k, w_k)` for `s_k = k h`, `k ≥ 1`.
    pairs: Vec<(T, T)>,
}

impl<T: Real> TanhSinh<T> {
    /// Step `h = 2^{-level}`.
    pub fn new(level: u32) -> Self {
        let h = lit::<T>(0.5).powi(level as i32);
        let hpi = T::FRAC_PI_2();
        let floor = T::epsilon().powf(lit(1.5));
        let mut pairs = Vec::new();
        let mut k = 1usize;
        loop {
            let s = h * T::of(k);
            let v = hpi * s.sinh();
            let ch = v.cosh();
            let delta = (-v).exp() / ch;
            let w = h * hpi * s.cosh() / (ch * ch);
            if delta < floor || !w.is_finite() {
                break;
            }
            pairs.push((delta, w));
            k += 1;
        }
        Self {
            center: h * hpi,
            pairs,
        }
    }

    pub fn len(&self) -> usize {
        2 * self.pairs.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `∫_a^b f`; nodes that round onto an endpoint are skipped.
    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F, a: T, b: T) -> T {
        if !(b > a) {
            return T::zero();
        }
        let half = (b - a) * lit(0.5);
        let mid = a + half;
        let mut acc = self.center * f(mid);
        for &(d, w) in &self.pairs {
            let off = half * d;
            let xl = a + off;
            let xr = b - off;
            if xl > a {
                acc = acc + w * f(xl);
            }
            if xr < b {
                acc = acc + w * f(xr);
            }
        }
        acc * half
    }
}

/// Composite integrator: panels split at `breaks` (jumps, where the integrand is smooth
/// from either side) and at `singular` points (algebraic endpoint behaviour). Panels near a
/// singular point use tanh-sinh, the rest Gauss–Legendre.
#[derive(Debug, Clone)]
pub struct Integrator<T> {
    ts: TanhSinh<T>,
    gl8: Vec<(T, T)>,
    gl16: Vec<(T, T)>,
    max_len: T,
}

fn rule_pairs<T: Real>(m: usize) -> Vec<(T, T)> {
    let r = gauss_legendre::<T>(m).expect("legendre rule");
    r.nodes.into_iter().zip(r.weights).collect()
}

impl<T: Real> Integrator<T> {
    pub fn new(level: u32, max_len: T) -> Self {
        Self {
            ts: TanhSinh::new(level),
            gl8: rule_pairs(8),
            gl16: rule_pairs(16),
            max_len,
        }
    }

    pub fn tanh_sinh(&self) -> &TanhSinh<T> {
        &self.ts
    }

    fn apply<F: FnMut(T) -> T>(rule: &[(T, T)], mut f: F, a: T, b: T) -> T {
        let half = (b - a) * lit(0.5);
        let mid = a + half;
        let s: T = rule.iter().map(|&(u, w)| w * f(mid + half * u)).sum();
        s * half
    }

    pub fn gauss<F: FnMut(T) -> T>(&self, f: F, a: T, b: T) -> T {
        Self::apply(&self.gl16, f, a, b)
    }

    pub fn gauss8<F: FnMut(T) -> T>(&self, f: F, a: T, b: T) -> T {
        Self::apply(&self.gl8, f, a, b)
    }

    /// One panel, choosing the rule from the distance to the nearest singular point.
    pub fn panel<F: FnMut(T) -> T>(&self, f: F, a: T, b: T, singular: &[T]) -> T {
        let len = b - a;
        let mut dist = T::infinity();
        for &s in singular {
            let d = if s < a {
                a - s
            } else if s > b {
                s - b
            } else {
                T::zero()
            };
            dist = dist.min(d);
        }
        if dist >= len {
            Self::apply(&self.gl8, f, a, b)
        } else if dist >= len * lit(0.25) {
            Self::apply(&self.gl16, f, a, b)
        } else {
            self.ts.integrate(f, a, b)
        }
    }

    /// `∫_lo^hi f`.
    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F, lo: T, hi: T, breaks: &[T], singular: &[T]) -> T {
        if !(hi > lo) {
            return T::zero();
        }
        let mut pts: Vec<T> = Vec::with_capacity(breaks.len() + singular.len() + 2);
        pts.push(lo);
        pts.extend(
            breaks
                .iter()
                .chain(singular)
                .copied()
                .filter(|&b| b > lo && b < hi),
        );
        pts.push(hi);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let mut total = T::zero();
        for seg in pts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let len = b - a;
            let pieces = if len > self.max_len {
                (len / self.max_len).ceil().to_usize().unwrap_or(1).max(1)
            } else {
                1
            };
            let step = len / T::of(pieces);
            for k in 0..pieces {
                let pa = a + step * T::of(k);
                let pb = if k + 1 == pieces { b } else { a + step * T::of(k + 1) };
                total = total + self.panel(&mut f, pa, pb, singular);
            }
        }
        total
    }
}
