//! Measures `dγ = w(x) dx` given by sums of separable densities.

use crate::error::{invalid, Result};
use crate::grid::{power_moment, GridFunction};
use crate::params::BesselParams;
use crate::quad::Integrator;
use crate::scalar::{lit, Real};
use crate::specfun::Radial;

/// One-dimensional density shape.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape<T> {
    Constant,
    /// `t^s`
    Power(T),
    /// `e^{k t}`
    Exp(T),
    /// `exp(-(t-c)²/(2σ²))`
    Gaussian { center: T, width: T },
    /// Piecewise constant on `[edges[k], edges[k+1])`, zero outside.
    Steps { edges: Vec<T>, values: Vec<T> },
    /// Piecewise linear through `(nodes, values)`, constant below the first node;
    /// beyond the last node it stays at the last value if `extend`, else vanishes.
    Linear {
        nodes: Vec<T>,
        values: Vec<T>,
        extend: bool,
    },
    /// Linear interpolation of a smooth function; unlike `Linear` only `kinks` count
    /// as breakpoints.
    Sampled {
        nodes: Vec<T>,
        values: Vec<T>,
        extend: bool,
        kinks: Vec<T>,
    },
}

/// `coef · shape(t)` restricted to `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor<T> {
    pub coef: T,
    pub shape: Shape<T>,
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Factor<T> {
    pub fn new(coef: T, shape: Shape<T>) -> Self {
        Self {
            coef,
            shape,
            lo: T::zero(),
            hi: T::infinity(),
        }
    }

    pub fn clipped(&self, lo: T, hi: T) -> Self {
        Self {
            lo: self.lo.max(lo),
            hi: self.hi.min(hi),
            ..self.clone()
        }
    }

    fn shape_value(&self, t: T) -> T {
        match &self.shape {
            Shape::Constant => T::one(),
            Shape::Power(s) => {
                if *s == T::zero() {
                    T::one()
                } else {
                    t.powf(*s)
                }
            }
            Shape::Exp(k) => (*k * t).exp(),
            Shape::Gaussian { center, width } => {
                let u = (t - *center) / *width;
                (-u * u * lit(0.5)).exp()
            }
            Shape::Steps { edges, values } => {
                if t < edges[0] || t >= edges[edges.len() - 1] {
                    return T::zero();
                }
                let k = edges.partition_point(|&e| e <= t) - 1;
                values[k.min(values.len() - 1)]
            }
            Shape::Linear {
                nodes,
                values,
                extend,
            }
            | Shape::Sampled {
                nodes,
                values,
                extend,
                ..
            } => {
                let last = nodes.len() - 1;
                if t <= nodes[0] {
                    return values[0];
                }
                if t >= nodes[last] {
                    return if *extend || t == nodes[last] {
                        values[last]
                    } else {
                        T::zero()
                    };
                }
                let k = nodes.partition_point(|&e| e <= t) - 1;
                let f = (t - nodes[k]) / (nodes[k + 1] - nodes[k]);
                values[k] + f * (values[k + 1] - values[k])
            }
        }
    }

    /// `t ↦ coef · shape(c t)` on `[lo/c, hi/c)`.
    pub fn dilated(&self, c: T) -> Self {
        let (coef, shape) = match &self.shape {
            Shape::Constant => (self.coef, Shape::Constant),
            Shape::Power(s) => (self.coef * c.powf(*s), Shape::Power(*s)),
            Shape::Exp(k) => (self.coef, Shape::Exp(*k * c)),
            Shape::Gaussian { center, width } => (
                self.coef,
                Shape::Gaussian {
                    center: *center / c,
                    width: *width / c,
                },
            ),
            Shape::Steps { edges, values } => (
                self.coef,
                Shape::Steps {
                    edges: edges.iter().map(|&e| e / c).collect(),
                    values: values.clone(),
                },
            ),
            Shape::Linear { nodes, values, extend } => (
                self.coef,
                Shape::Linear {
                    nodes: nodes.iter().map(|&e| e / c).collect(),
                    values: values.clone(),
                    extend: *extend,
                },
            ),
            Shape::Sampled {
                nodes,
                values,
                extend,
                kinks,
            } => (
                self.coef,
                Shape::Sampled {
                    nodes: nodes.iter().map(|&e| e / c).collect(),
                    values: values.clone(),
                    extend: *extend,
                    kinks: kinks.iter().map(|&e| e / c).collect(),
                },
            ),
        };
        Self {
            coef,
            shape,
            lo: self.lo / c,
            hi: self.hi / c,
        }
    }

    /// Upper end of the support (possibly infinite).
    pub fn support_hi(&self) -> T {
        let shape_hi = match &self.shape {
            Shape::Steps { edges, .. } => edges[edges.len() - 1],
            Shape::Linear {
                nodes, extend: false, ..
            }
            | Shape::Sampled {
                nodes, extend: false, ..
            } => nodes[nodes.len() - 1],
            Shape::Gaussian { center, width } => *center + lit::<T>(40.0) * *width,
            _ => T::infinity(),
        };
        self.hi.min(shape_hi)
    }

    pub fn support_lo(&self) -> T {
        let shape_lo = match &self.shape {
            Shape::Steps { edges, .. } => edges[0],
            Shape::Gaussian { center, width } => (*center - lit::<T>(40.0) * *width).max(T::zero()),
            _ => T::zero(),
        };
        self.lo.max(shape_lo)
    }

    pub fn is_zero(&self) -> bool {
        self.coef == T::zero() || !(self.support_hi() > self.support_lo())
    }

    /// Interior points where the density jumps or kinks.
    pub fn interior_breaks(&self) -> Vec<T> {
        let (lo, hi) = (self.support_lo(), self.support_hi());
        let mut b: Vec<T> = match &self.shape {
            Shape::Steps { edges, .. } => edges.clone(),
            Shape::Linear { nodes, .. } => nodes.clone(),
            Shape::Sampled { kinks, .. } => kinks.clone(),
            _ => Vec::new(),
        };
        b.retain(|&e| e > lo && e < hi);
        b
    }

    /// `∫_p^q coef·shape(t) t^a dt` over `[p, q] ∩ support`.
    pub fn moment(&self, a: T, p: T, q: T) -> T {
        let p = p.max(self.support_lo());
        let q = q.min(self.support_hi());
        if !(q > p) || self.coef == T::zero() {
            return T::zero();
        }
        let c = self.coef;
        match &self.shape {
            Shape::Constant => c * power_moment(a, p, q),
            Shape::Power(s) => c * power_moment(a + *s, p, q),
            Shape::Steps { edges, values } => {
                let mut acc = T::zero();
                for (k, &v) in values.iter().enumerate() {
                    let lo = edges[k].max(p);
                    let hi = edges[k + 1].min(q);
                    if hi > lo && v != T::zero() {
                        acc = acc + v * power_moment(a, lo, hi);
                    }
                }
                c * acc
            }
            Shape::Linear {
                nodes,
                values,
                extend,
            }
            | Shape::Sampled {
                nodes,
                values,
                extend,
                ..
            } => c * linear_moment(nodes, values, *extend, a, p, q),
            _ => {
                if q.is_infinite() {
                    return T::infinity();
                }
                let integ = Integrator::new(3, lit(1.0));
                let breaks = self.interior_breaks();
                integ.integrate(|t| self.value(t) * t.powf(a), p, q, &breaks, &[T::zero()])
            }
        }
    }
}

/// `∫_p^q L(t) t^a dt` for the piecewise-linear `L` through `(nodes, values)`.
fn linear_moment<T: Real>(nodes: &[T], values: &[T], extend: bool, a: T, p: T, q: T) -> T {
    let last = nodes.len() - 1;
    let mut acc = T::zero();
    let first = nodes[0];
    if p < first {
        acc = acc + values[0] * power_moment(a, p, q.min(first));
    }
    if extend && q > nodes[last] {
        acc = acc + values[last] * power_moment(a, p.max(nodes[last]), q);
    }
    let k0 = nodes.partition_point(|&e| e <= p).saturating_sub(1);
    for k in k0..last {
        let (l, r) = (nodes[k], nodes[k + 1]);
        if l >= q {
            break;
        }
        let lo = l.max(p);
        let hi = r.min(q);
        if hi > lo {
            let s = (values[k + 1] - values[k]) / (r - l);
            acc = acc + (values[k] - s * l) * power_moment(a, lo, hi) + s * power_moment(a + T::one(), lo, hi);
        }
    }
    acc
}

impl<T: Real> Radial<T> for Factor<T> {
    fn value(&self, t: T) -> T {
        if t < self.lo || t >= self.hi {
            return T::zero();
        }
        self.coef * self.shape_value(t)
    }

    fn breakpoints(&self) -> Vec<T> {
        let mut b = self.interior_breaks();
        let lo = self.support_lo();
        if lo > T::zero() {
            b.push(lo);
        }
        let hi = self.support_hi();
        if hi.is_finite() {
            b.push(hi);
        }
        b
    }

    fn reach(&self) -> Option<T> {
        let hi = self.support_hi();
        if hi.is_finite() {
            Some(hi)
        } else {
            None
        }
    }
}

/// How a measure was specified (metadata for reports).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Zero,
    Constant,
    Power,
    Indicator,
    Exp,
    Gaussian,
    Grid,
    Product,
    Tabulated,
}

/// `w(x) = Σ_terms Π_i f_i(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMeasure<T> {
    n: usize,
    kind: MeasureKind,
    terms: Vec<Vec<Factor<T>>>,
}

impl<T: Real> DensityMeasure<T> {
    pub fn from_terms(n: usize, kind: MeasureKind, terms: Vec<Vec<Factor<T>>>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("measure", "dimension must be at least 1"));
        }
        for term in &terms {
            if term.len() != n {
                return Err(invalid("measure", "every term needs one factor per axis"));
            }
            for f in term {
                if !(f.coef >= T::zero()) {
                    return Err(invalid("measure", "density must be non-negative"));
                }
                match &f.shape {
                    Shape::Steps { edges, values } => {
                        if edges.len() != values.len() + 1 || values.is_empty() {
                            return Err(invalid("measure", "steps need one more edge than values"));
                        }
                        if values.iter().any(|&v| !(v >= T::zero())) {
                            return Err(invalid("measure", "density must be non-negative"));
                        }
                        if edges.windows(2).any(|w| !(w[1] > w[0])) {
                            return Err(invalid("measure", "step edges must increase"));
                        }
                    }
                    Shape::Linear { nodes, values, .. } | Shape::Sampled { nodes, values, .. } => {
                        if nodes.len() != values.len() || nodes.is_empty() {
                            return Err(invalid("measure", "table nodes and values differ in length"));
                        }
                        if values.iter().any(|&v| !(v >= T::zero())) {
                            return Err(invalid("measure", "density must be non-negative"));
                        }
                        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
                            return Err(invalid("measure", "table nodes must increase"));
                        }
                    }
                    Shape::Gaussian { width, .. } => {
                        if !(*width > T::zero()) {
                            return Err(invalid("measure", "gaussian width must be positive"));
                        }
                    }
                    _ => {}
                }
            }
        }
        Ok(Self { n, kind, terms })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            kind: MeasureKind::Zero,
            terms: Vec::new(),
        }
    }

    /// `w ≡ c`.
    pub fn constant(n: usize, c: T) -> Result<Self> {
        let mut term = vec![Factor::new(T::one(), Shape::Constant); n];
        term[0].coef = c;
        Self::from_terms(n, MeasureKind::Constant, vec![term])
    }

    /// Lebesgue measure, `w ≡ 1`.
    pub fn lebesgue(n: usize) -> Self {
        Self::constant(n, T::one()).expect("valid")
    }

    /// `w(x) = c Π x_i^{s_i}`.
    pub fn power(coef: T, exponents: &[T]) -> Result<Self> {
        let mut term: Vec<Factor<T>> = exponents
            .iter()
            .map(|&s| Factor::new(T::one(), Shape::Power(s)))
            .collect();
        if term.is_empty() {
            return Err(invalid("exponents", "need at least one axis"));
        }
        term[0].coef = coef;
        Self::from_terms(exponents.len(), MeasureKind::Power, vec![term])
    }

    /// `w = c χ_{Π[lo_i, hi_i)}`.
    pub fn indicator(value: T, lo: &[T], hi: &[T]) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(invalid("indicator", "bounds need one entry per axis"));
        }
        let mut term: Vec<Factor<T>> = lo
            .iter()
            .zip(hi)
            .map(|(&l, &h)| Factor::new(T::one(), Shape::Constant).clipped(l, h))
            .collect();
        term[0].coef = value;
        Self::from_terms(lo.len(), MeasureKind::Indicator, vec![term])
    }

    /// Product of one-dimensional factors.
    pub fn product(factors: Vec<Factor<T>>) -> Result<Self> {
        Self::from_terms(factors.len(), MeasureKind::Product, vec![factors])
    }

    /// `w(x) = c e^{k x}` in one dimension.
    pub fn exp(coef: T, rate: T) -> Result<Self> {
        Self::from_terms(1, MeasureKind::Exp, vec![vec![Factor::new(coef, Shape::Exp(rate))]])
    }

    /// Piecewise-constant density read from a grid function (negative values rejected).
    pub fn from_grid(f: &GridFunction<T>) -> Result<Self> {
        let g = f.grid();
        let n = g.n();
        let m = g.m();
        if f.values().iter().any(|&v| !(v >= T::zero())) {
            return Err(invalid("grid", "density values must be non-negative"));
        }
        let edges: Vec<T> = (0..=m).map(|k| T::of(k) * g.h()).collect();
        let rows = m.pow((n - 1) as u32);
        let mut terms = Vec::new();
        for r in 0..rows {
            let vals = f.values()[r * m..(r + 1) * m].to_vec();
            if vals.iter().all(|&v| v == T::zero()) {
                continue;
            }
            let mut term = Vec::with_capacity(n);
            let mut rem = r;
            let mut idx = vec![0; n - 1];
            for i in (0..n - 1).rev() {
                idx[i] = rem % m;
                rem /= m;
            }
            for &k in &idx {
                term.push(Factor::new(T::one(), Shape::Constant).clipped(edges[k], edges[k + 1]));
            }
            term.push(Factor::new(
                T::one(),
                Shape::Steps {
                    edges: edges.clone(),
                    values: vals,
                },
            ));
            terms.push(term);
        }
        Self::from_terms(n, MeasureKind::Grid, terms)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn terms(&self) -> &[Vec<Factor<T>>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.iter().any(|f| f.is_zero()))
    }

    /// `w(x)`.
    pub fn density(&self, x: &[T]) -> T {
        self.terms
            .iter()
            .map(|t| t.iter().zip(x).fold(T::one(), |acc, (f, &xi)| acc * f.value(xi)))
            .sum()
    }

    /// `s · γ`.
    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t[0].coef = t[0].coef * s;
        }
        out
    }

    /// `x ↦ w(c x)`.
    pub fn dilated(&self, c: T) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(invalid("c", "dilation must be positive and finite"));
        }
        let mut out = self.clone();
        for t in &mut out.terms {
            for f in t.iter_mut() {
                *f = f.dilated(c);
            }
        }
        Ok(out)
    }

    /// Sum of two measures.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(invalid("measure", "dimensions differ"));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            n: self.n,
            kind: MeasureKind::Product,
            terms,
        })
    }

    /// `γ|_box` with the half-open box `Π[lo_i, hi_i)`.
    pub fn restrict(&self, lo: &[T], hi: &[T]) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                t.iter()
                    .enumerate()
                    .map(|(i, f)| f.clipped(lo[i], hi[i]))
                    .collect::<Vec<_>>()
            })
            .filter(|t: &Vec<Factor<T>>| t.iter().all(|f| !f.is_zero()))
            .collect();
        Self {
            n: self.n,
            kind: self.kind,
            terms,
        }
    }

    /// `∫_box w (x^a) dx`, weighted when `params` is given.
    pub fn box_mass(&self, lo: &[T], hi: &[T], params: Option<&BesselParams<T>>) -> T {
        self.terms
            .iter()
            .map(|t| {
                t.iter().enumerate().fold(T::one(), |acc, (i, f)| {
                    let a = params.map(|p| p.a(i)).unwrap_or(T::zero());
                    acc * f.moment(a, lo[i], hi[i])
                })
            })
            .sum()
    }

    /// Upper end of the support along `axis` (infinite if unbounded).
    pub fn support_hi(&self, axis: usize) -> T {
        self.terms
            .iter()
            .map(|t| t[axis].support_hi())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Checks `w ≥ 0` on a sample of points in `[0, x_max]^n`.
    pub fn check_nonnegative(&self, x_max: T, samples: usize) -> Result<()> {
        for k in 0..samples {
            let x: Vec<T> = (0..self.n)
                .map(|i| x_max * T::of((k * (i + 7) + 3) % samples) / T::of(samples))
                .collect();
            if !(self.density(&x) >= T::zero()) {
                return Err(invalid("measure", "density negative or undefined at a sample point"));
            }
        }
        Ok(())
    }
}
