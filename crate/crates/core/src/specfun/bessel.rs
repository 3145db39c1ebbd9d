use super::gamma::{ln_gamma, rgamma};
use crate::error::{invalid, Result};
use crate::quad::gauss_jacobi;
use crate::scalar::{lit, Real};

/// Power series `I_ν(x) = Σ (x/2)^{2k+ν} / (k! Γ(k+ν+1))`.
pub fn bessel_i<T: Real>(nu: T, x: T) -> T {
    let hx = x * lit(0.5);
    let q = hx * hx;
    let mut term = hx.powf(nu) * rgamma(nu + T::one());
    let mut first = term;
    if term == T::zero() {
        // ν a negative integer: start the series at k = -ν
        let k0 = (-nu).round();
        first = hx.powf(lit::<T>(2.0) * k0 + nu) * rgamma(k0 + T::one());
        term = first;
        let mut sum = term;
        let mut k = k0;
        for _ in 0..500 {
            term = term * q / ((k + T::one()) * (k + T::one() + nu));
            k = k + T::one();
            sum = sum + term;
            if term.abs() <= T::epsilon() * sum.abs() {
                break;
            }
        }
        return sum;
    }
    let mut sum = first;
    let mut k = T::zero();
    for _ in 0..500 {
        term = term * q / ((k + T::one()) * (k + T::one() + nu));
        k = k + T::one();
        sum = sum + term;
        if term.abs() <= T::epsilon() * sum.abs() {
            break;
        }
    }
    sum
}

/// `e^{x} ∫_0^∞ e^{-x cosh t} cosh(νt) dt` by the trapezoid rule with step halving.
fn k_integral_scaled<T: Real>(nu: T, x: T) -> T {
    let nu = nu.abs();
    let two = lit::<T>(2.0);
    let logf = |t: T| {
        let sh = (t * lit(0.5)).sinh();
        -x * two * sh * sh + nu * t
    };
    let tpeak = (nu / x).asinh();
    let lpeak = logf(tpeak);
    let mut tmax = tpeak + T::one();
    while logf(tmax) > lpeak - lit(50.0) {
        tmax = tmax + T::one();
    }
    let f = |t: T| (logf(t) - lpeak).exp() * (T::one() + (-two * nu * t).exp()) * lit(0.5);
    let mut n = 32usize;
    let mut h = tmax / T::of(n);
    let mut sum = f(T::zero()) * lit(0.5) + f(tmax) * lit(0.5);
    for k in 1..n {
        sum = sum + f(h * T::of(k));
    }
    let mut est = sum * h;
    for _ in 0..16 {
        let mut add = T::zero();
        for k in 0..n {
            add = add + f(h * (T::of(k) + lit(0.5)));
        }
        sum = sum + add;
        n *= 2;
        h = h * lit(0.5);
        let next = sum * h;
        let done = (next - est).abs() <= lit::<T>(4.0) * T::epsilon() * next.abs();
        est = next;
        if done {
            break;
        }
    }
    est * lpeak.exp()
}

/// Modified Bessel function of the second kind `K_α(x)`, `x > 0`.
///
/// Uses `π/2 (I_{-α} - I_α)/sin απ` with power series for `x ≤ 2` when `α` is at least
/// 0.05 away from an integer, and the integral `∫_0^∞ e^{-x cosh t} cosh αt dt` otherwise.
pub fn modified_bessel_k<T: Real>(alpha: T, x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(invalid("x", format!("K_alpha needs x > 0, got {x}")));
    }
    let nu = alpha.abs();
    let frac = (nu - nu.round()).abs();
    if x <= lit(2.0) && frac >= lit(0.05) {
        let s = (T::PI() * nu).sin();
        return Ok(T::FRAC_PI_2() * (bessel_i(-nu, x) - bessel_i(nu, x)) / s);
    }
    Ok(k_integral_scaled(nu, x) * (-x).exp())
}

/// `j_α(x) = 2^α Γ(α+1) x^{-α} J_α(x)` with a cached Gegenbauer rule.
#[derive(Debug, Clone)]
pub struct EntireBessel<T> {
    alpha: T,
    nodes: Vec<T>,
    weights: Vec<T>,
    x_switch: T,
    ln_pref: T,
}

impl<T: Real> EntireBessel<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if !(alpha > lit(-0.5)) {
            return Err(invalid("alpha", format!("need alpha > -1/2, got {alpha}")));
        }
        let x_switch = lit::<T>(40.0) + alpha * alpha;
        let m = (x_switch * lit(0.75)).ceil().to_usize().unwrap_or(64) + 24;
        let e = alpha - lit(0.5);
        let rule = gauss_jacobi(m, e, e)?;
        let total: T = rule.weights.iter().copied().sum();
        Ok(Self {
            alpha,
            nodes: rule.nodes,
            weights: rule.weights.iter().map(|&w| w / total).collect(),
            x_switch,
            ln_pref: alpha * T::LN_2() + ln_gamma(alpha + T::one()),
        })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn eval(&self, x: T) -> T {
        let x = x.abs();
        if x <= lit(2.0) {
            return self.series(x);
        }
        if x < self.x_switch {
            return self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(&u, &w)| w * (x * u).cos())
                .sum();
        }
        (self.ln_pref - self.alpha * x.ln()).exp() * hankel_asymptotic_j(self.alpha, x)
    }

    fn series(&self, x: T) -> T {
        let q = x * x * lit(0.25);
        let mut term = T::one();
        let mut sum = T::one();
        let mut k = T::zero();
        for _ in 0..60 {
            term = -term * q / ((k + T::one()) * (k + T::one() + self.alpha));
            k = k + T::one();
            sum = sum + term;
            if term.abs() <= T::epsilon() * lit(0.1) {
                break;
            }
        }
        sum
    }
}

/// Hankel's asymptotic expansion of `J_α(x)` for large `x`.
fn hankel_asymptotic_j<T: Real>(alpha: T, x: T) -> T {
    let mu = lit::<T>(4.0) * alpha * alpha;
    let eightx = lit::<T>(8.0) * x;
    let (mut p, mut q) = (T::one(), T::zero());
    let mut term = T::one();
    let mut last = T::infinity();
    for k in 1..60 {
        let kk = T::of(k);
        let odd = lit::<T>(2.0) * kk - T::one();
        term = term * (mu - odd * odd) / (kk * eightx);
        if term.abs() > last || term.abs() < T::epsilon() * lit(1e-3) {
            break;
        }
        last = term.abs();
        match k % 4 {
            1 => q = q + term,
            2 => p = p - term,
            3 => q = q - term,
            _ => p = p + term,
        }
    }
    let chi = x - (alpha * lit(0.5) + lit(0.25)) * T::PI();
    (lit::<T>(2.0) / (T::PI() * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Entire Bessel function `j_α(x)`; builds a rule on every call, prefer [`EntireBessel`] in loops.
pub fn entire_bessel_j<T: Real>(alpha: T, x: T) -> Result<T> {
    Ok(EntireBessel::new(alpha)?.eval(x))
}

/// Bessel function of the first kind `J_α(x)`, `x ≥ 0`.
pub fn bessel_j<T: Real>(alpha: T, x: T) -> Result<T> {
    if x == T::zero() {
        return Ok(if alpha == T::zero() { T::one() } else { T::zero() });
    }
    let j = entire_bessel_j(alpha, x)?;
    Ok(j * (alpha * (x * lit(0.5)).ln() - ln_gamma(alpha + T::one())).exp())
}
