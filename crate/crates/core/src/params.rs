use crate::error::{invalid, Result};
use crate::scalar::{lit, Real};
use crate::specfun::ln_gamma;

/// Multi-index `α` of the weight `x^a`, `a_i = 2α_i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselParams<T> {
    alphas: Vec<T>,
}

impl<T: Real> BesselParams<T> {
    pub fn new(alphas: Vec<T>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(invalid("alphas", "need at least one coordinate (n >= 1)"));
        }
        for &al in &alphas {
            if !(al > lit(-0.5)) || !al.is_finite() {
                return Err(invalid(
                    "alphas",
                    format!("every alpha must satisfy alpha > -1/2, got {al}"),
                ));
            }
        }
        Ok(Self { alphas })
    }

    /// Same `α` on each of `n` axes.
    pub fn uniform(alpha: T, n: usize) -> Result<Self> {
        Self::new(vec![alpha; n])
    }

    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    pub fn alpha(&self, i: usize) -> T {
        self.alphas[i]
    }

    pub fn a(&self, i: usize) -> T {
        lit::<T>(2.0) * self.alphas[i] + T::one()
    }

    pub fn a_vec(&self) -> Vec<T> {
        (0..self.n()).map(|i| self.a(i)).collect()
    }

    /// `|a| = Σ a_i`.
    pub fn abs_a(&self) -> T {
        (0..self.n()).map(|i| self.a(i)).sum()
    }

    /// Homogeneous dimension `n + |a|`.
    pub fn hom_dim(&self) -> T {
        T::of(self.n()) + self.abs_a()
    }

    /// `x^a = Π x_i^{a_i}`.
    pub fn weight(&self, x: &[T]) -> T {
        x.iter()
            .enumerate()
            .fold(T::one(), |acc, (i, &xi)| acc * xi.powf(self.a(i)))
    }

    /// `∫_{S^{n-1}_+} ω^a dω`, so that `∫ g(|x|) x^a dx = S ∫ g(r) r^{n+|a|-1} dr`.
    pub fn sphere_constant(&self) -> T {
        let n = self.n();
        let mut ln = lit::<T>(1.0 - n as f64) * T::LN_2();
        for &al in &self.alphas {
            ln = ln + ln_gamma(al + T::one());
        }
        ln = ln - ln_gamma(self.hom_dim() / lit(2.0));
        ln.exp()
    }

    /// `λ_a(B_+(0, r))`.
    pub fn ball_volume(&self, r: T) -> T {
        let nn = self.hom_dim();
        self.sphere_constant() * r.powf(nn) / nn
    }

    /// Parseval constant `2^{n-|a|} / Π Γ(α_i+1)^2`.
    pub fn parseval_constant(&self) -> T {
        let mut ln = (T::of(self.n()) - self.abs_a()) * T::LN_2();
        for &al in &self.alphas {
            ln = ln - lit::<T>(2.0) * ln_gamma(al + T::one());
        }
        ln.exp()
    }

    pub fn axis(&self, i: usize) -> BesselParams<T> {
        BesselParams {
            alphas: vec![self.alphas[i]],
        }
    }
}

/// Normalisation `c_α = Γ(α+1) / (√π Γ(α+1/2))` of the angular average.
pub fn angular_normalization<T: Real>(alpha: T) -> T {
    (ln_gamma(alpha + T::one()) - ln_gamma(alpha + lit(0.5))).exp() / T::PI().sqrt()
}
