use crate::real::Real;

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

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        let pi = T::PI();
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::count(i as u64));
    }
    let t = x + T::lit(7.5);
    half * (T::PI() + T::PI()).ln() + (x + half) * t.ln() - t + acc.ln()
}

/// `e^{-x} - 1 + x` without cancellation near zero.
pub fn exp_rem2<T: Real>(x: T) -> T {
    if x.abs() < T::lit(0.1) {
        let mut term = x * x * T::lit(0.5);
        let mut sum = term;
        for j in 3..30u64 {
            term = -term * x / T::count(j);
            sum = sum + term;
            if term.abs() <= T::epsilon() * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (-x).exp_m1() + x
    }
}

/// `(1 + u)^{-k} - 1 + k u` without cancellation near zero.
pub fn pow_rem2<T: Real>(u: T, k: T) -> T {
    if u.abs() * (k + T::one()) < T::lit(0.1) {
        let mut term = k * (k + T::one()) * T::lit(0.5) * u * u;
        let mut sum = term;
        for j in 2..60u64 {
            let jt = T::count(j);
            term = -term * (k + jt) / (jt + T::one()) * u;
            sum = sum + term;
            if term.abs() <= T::epsilon() * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (-k * u.ln_1p()).exp_m1() + k * u
    }
}
