use crate::scalar::{lit, Real};

/// Chebyshev interpolant on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct Chebyshev<T> {
    lo: T,
    hi: T,
    coeffs: Vec<T>,
}

impl<T: Real> Chebyshev<T> {
    /// Interpolates `f` at `n` Chebyshev points of the first kind.
    pub fn fit<F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, n: usize) -> Self {
        let half = (hi - lo) * lit(0.5);
        let mid = lo + half;
        let pi = T::PI();
        let nn = T::of(n);
        let vals: Vec<T> = (0..n)
            .map(|k| {
                let th = pi * (T::of(k) + lit(0.5)) / nn;
                f(mid + half * th.cos())
            })
            .collect();
        let coeffs = (0..n)
            .map(|j| {
                let s: T = (0..n)
                    .map(|k| vals[k] * (pi * T::of(j) * (T::of(k) + lit(0.5)) / nn).cos())
                    .sum();
                s * lit::<T>(2.0) / nn
            })
            .collect();
        Self { lo, hi, coeffs }
    }

    #[inline]
    pub fn eval(&self, x: T) -> T {
        let two = lit::<T>(2.0);
        let y = (two * x - self.lo - self.hi) / (self.hi - self.lo);
        let y2 = two * y;
        let (mut b1, mut b2) = (T::zero(), T::zero());
        for &c in self.coeffs[1..].iter().rev() {
            let b0 = y2 * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        y * b1 - b2 + self.coeffs[0] * lit(0.5)
    }
}
