use crate::error::{Error, Result};
use crate::real::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SEGMENTS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
}

fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let fc = f(c);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let s = f(c - dx) + f(c + dx);
        k = k + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            g = g + s * T::lit(WG[j / 2]);
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Subdivides the segment with the largest error estimate until the total
/// estimate falls below `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, abs_tol: T, rel_tol: T) -> Result<Integral<T>> {
    if a == b {
        return Ok(Integral { value: T::zero(), error: T::zero() });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration bounds must be finite, got [{a}, {b}]")));
    }
    let (lo, hi, sign) = if a < b { (a, b, T::one()) } else { (b, a, -T::one()) };
    let (v0, e0) = gk15(&mut f, lo, hi);
    let mut segs = vec![(lo, hi, v0, e0)];
    let mut value = v0;
    let mut error = e0;
    let floor = T::epsilon() * T::lit(50.0);
    loop {
        if !value.is_finite() {
            return Err(Error::NotConverged(format!("non-finite integrand on [{lo}, {hi}]")));
        }
        let tol = abs_tol.max(rel_tol * value.abs());
        if error <= tol || error <= floor * value.abs() {
            break;
        }
        if segs.len() >= MAX_SEGMENTS {
            return Err(Error::NotConverged(format!(
                "quadrature on [{lo}, {hi}] stalled at error {error} (value {value})"
            )));
        }
        let (imax, _) = segs
            .iter()
            .enumerate()
            .fold((0, -T::one()), |acc, (i, s)| if s.3 > acc.1 { (i, s.3) } else { acc });
        let (sa, sb, sv, se) = segs.swap_remove(imax);
        let mid = (sa + sb) * T::lit(0.5);
        if mid <= sa || mid >= sb {
            // Segment cannot be split further at this precision.
            segs.push((sa, sb, sv, T::zero()));
            error = error - se;
            continue;
        }
        let (v1, e1) = gk15(&mut f, sa, mid);
        let (v2, e2) = gk15(&mut f, mid, sb);
        segs.push((sa, mid, v1, e1));
        segs.push((mid, sb, v2, e2));
        value = segs.iter().map(|s| s.2).sum();
        error = segs.iter().map(|s| s.3).sum();
    }
    Ok(Integral { value: sign * value, error })
}
