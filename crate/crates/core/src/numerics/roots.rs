use crate::error::{Error, Result};
use crate::real::Real;

/// Bisection on `[lo, hi]` for a function changing sign once.
pub fn bisect<T: Real, F: FnMut(T) -> T>(mut f: F, mut lo: T, mut hi: T, tol: T) -> Result<T> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if (flo > T::zero()) == (fhi > T::zero()) {
        return Err(Error::NotConverged(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..400 {
        let mid = lo + (hi - lo) * T::lit(0.5);
        if mid <= lo || mid >= hi || hi - lo <= tol * (T::one() + mid.abs()) {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(lo + (hi - lo) * T::lit(0.5))
}

/// Newton iteration safeguarded by a sign-change bracket `[lo, hi]`.
///
/// `fdf` returns the value and derivative. Steps leaving the bracket fall
/// back to bisection.
pub fn newton_bracketed<T: Real, F: FnMut(T) -> (T, T)>(mut fdf: F, mut lo: T, mut hi: T, x0: T, tol: T) -> Result<T> {
    let (flo, _) = fdf(lo);
    let (fhi, _) = fdf(hi);
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if (flo > T::zero()) == (fhi > T::zero()) {
        return Err(Error::NotConverged(format!("no sign change on [{lo}, {hi}]")));
    }
    let lo_positive = flo > T::zero();
    let mut x = if x0 > lo && x0 < hi { x0 } else { lo + (hi - lo) * T::lit(0.5) };
    for _ in 0..200 {
        let (fx, dfx) = fdf(x);
        if fx == T::zero() {
            return Ok(x);
        }
        if (fx > T::zero()) == lo_positive {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - fx / dfx;
        if !(next.is_finite() && next > lo && next < hi) {
            next = lo + (hi - lo) * T::lit(0.5);
        }
        let scale = T::one().max(next.abs());
        if (next - x).abs() <= tol * scale || hi - lo <= tol * scale {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NotConverged(format!("newton iteration did not settle in [{lo}, {hi}]")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let r = newton_bracketed(|x: f64| (x * x - 2.0, 2.0 * x), 0.0, 2.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        let r = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bad_derivative_falls_back_to_bisection() {
        let r = newton_bracketed(|x: f64| (x.powi(3) - 1.0, 0.0), -3.0, 5.0, 0.0, 1e-14).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_sign_change_is_an_error() {
        assert!(bisect(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }
}
