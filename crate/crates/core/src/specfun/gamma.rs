use crate::scalar::{lit, Real};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum<T: Real>(x: T) -> T {
    let mut a = lit::<T>(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a = a + lit::<T>(c) / (x + T::of(i));
    }
    a
}

/// `ln |Γ(x)|`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    if x < lit(0.5) {
        let s = (T::PI() * x).sin().abs();
        return (T::PI() / s).ln() - ln_gamma(T::one() - x);
    }
    let z = x - T::one();
    let t = z + lit(LANCZOS_G + 0.5);
    lit::<T>(0.5) * (lit::<T>(2.0) * T::PI()).ln() + (z + lit(0.5)) * t.ln() - t
        + lanczos_sum(z).ln()
}

pub fn gamma<T: Real>(x: T) -> T {
    if x < lit(0.5) {
        return T::PI() / ((T::PI() * x).sin() * gamma(T::one() - x));
    }
    let z = x - T::one();
    let t = z + lit(LANCZOS_G + 0.5);
    (lit::<T>(2.0) * T::PI()).sqrt() * t.powf(z + lit(0.5)) * (-t).exp() * lanczos_sum(z)
}

/// `1/Γ(x)`, zero at the poles.
pub fn rgamma<T: Real>(x: T) -> T {
    if x <= T::zero() && x == x.round() {
        return T::zero();
    }
    if x < lit(0.5) {
        return (T::PI() * x).sin() * gamma(T::one() - x) / T::PI();
    }
    if x > lit(150.0) {
        return (-ln_gamma(x)).exp();
    }
    T::one() / gamma(x)
}
