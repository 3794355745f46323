//! Closed-form laws of Levy trees and of the pruning process, used as
//! oracles for the Monte Carlo checks.

use crate::error::{Error, Result};
use crate::family::AdmissibleFamily;
use crate::mechanism::{Criticality, Mechanism};
use crate::real::Real;

/// `N[1 - exp(-l sigma)] = psi^{-1}(l)`.
pub fn sigma_laplace<T: Real>(mech: &Mechanism<T>, l: T) -> Result<T> {
    mech.psi_inverse(l)
}

/// `E_r[exp(-l sigma)] = exp(-r psi^{-1}(l))`.
pub fn sigma_laplace_pr<T: Real>(mech: &Mechanism<T>, r: T, l: T) -> Result<T> {
    if !(r >= T::zero()) {
        return Err(Error::Domain(format!("initial mass must be nonnegative, got {r}")));
    }
    Ok((-r * mech.psi_inverse(l)?).exp())
}

fn ordered<T: Real>(t: T, q: T) -> Result<()> {
    if t <= q {
        Ok(())
    } else {
        Err(Error::Domain(format!("need t <= q, got t = {t}, q = {q}")))
    }
}

/// `N[exp(-l sigma_t) | T_q] = exp(-psi_q(psi_t^{-1}(l)) sigma_q)`.
pub fn cond_sigma_laplace<T: Real>(fam: &AdmissibleFamily<T>, t: T, q: T, l: T, sigma_q: T) -> Result<T> {
    ordered(t, q)?;
    let x = fam.psi_at(t)?.psi_inverse(l)?;
    Ok((-fam.psi_at(q)?.psi(x)? * sigma_q).exp())
}

/// `N[sigma_t | T_q] = psi_q'(0) sigma_q / psi_t'(0)` for subcritical `psi_t`.
pub fn cond_sigma_mean<T: Real>(fam: &AdmissibleFamily<T>, t: T, q: T, sigma_q: T) -> Result<T> {
    ordered(t, q)?;
    let bt = fam.psi_at(t)?.b();
    if !(bt > T::zero()) {
        return Err(Error::Singular(format!("psi_{t} is not subcritical, the mean is infinite")));
    }
    Ok(fam.psi_at(q)?.b() * sigma_q / bt)
}

/// `N[A > q] = psi_q^{-1}(0) = eta_q`.
pub fn ascension_tail<T: Real>(fam: &AdmissibleFamily<T>, q: T) -> Result<T> {
    fam.eta_at(q)
}

/// Density of the ascension time at `q`: `zeta_q(eta_q) / psi_q'(eta_q)`.
pub fn ascension_density<T: Real>(fam: &AdmissibleFamily<T>, q: T) -> Result<T> {
    let mech = fam.psi_at(q)?;
    let eta = mech.eta()?;
    if eta == T::zero() {
        return Ok(T::zero());
    }
    Ok(fam.zeta(q, eta)? / mech.psi_d1(eta)?)
}

/// `N[A = t_inf]`: infinite when the family extends to `t_inf`, else zero.
pub fn boundary_mass<T: Real>(fam: &AdmissibleFamily<T>) -> T {
    if fam.t_infinity().1 {
        T::infinity()
    } else {
        T::zero()
    }
}

fn require_critical_origin<T: Real>(fam: &AdmissibleFamily<T>) -> Result<()> {
    if !fam.window().contains(T::zero()) || fam.psi_at(T::zero())?.classify() != Criticality::Critical {
        return Err(Error::Precondition("psi_0 must be critical".into()));
    }
    Ok(())
}

/// `N[exp(-l sigma_A) | A = q] = psi_q'(eta_q) / psi_q'(psi_q^{-1}(l))`.
pub fn tree_at_ascension<T: Real>(fam: &AdmissibleFamily<T>, q: T, l: T) -> Result<T> {
    require_critical_origin(fam)?;
    if !(q < T::zero()) || !fam.window().contains(q) {
        return Err(Error::Domain(format!("ascension time {q} must be negative and in the window")));
    }
    let mech = fam.psi_at(q)?;
    let eta = mech.eta()?;
    if l == T::zero() {
        return Ok(T::one());
    }
    Ok(mech.psi_d1(eta)? / mech.psi_d1(mech.psi_inverse(l)?)?)
}

/// `N[(1 - exp(-l sigma_A)) 1{A = t_inf}] = psi_{t_inf}^{-1}(l) - eta_{t_inf}`.
pub fn boundary_ascension<T: Real>(fam: &AdmissibleFamily<T>, l: T) -> Result<T> {
    let (t_inf, reachable) = fam.t_infinity();
    if !reachable {
        return Err(Error::Precondition("t_inf is not in the family window".into()));
    }
    let mech = fam.psi_at(t_inf)?;
    Ok(mech.psi_inverse(l)? - mech.eta()?)
}

/// Conditional exit-time probabilities given `A = q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitTimeLaws<T> {
    /// `P[A_h > q0 | A = q]`.
    pub beyond: T,
    /// `P[A_h = A | A = q]`.
    pub at_ascension: T,
}

/// Exit time `A_h` of height `h` given the ascension time `q < q0 < 0`.
pub fn exit_time_laws<T: Real>(fam: &AdmissibleFamily<T>, q: T, q0: T, h: T) -> Result<ExitTimeLaws<T>> {
    require_critical_origin(fam)?;
    if !(q < q0 && q0 < T::zero()) || !fam.window().contains(q) || fam.t_infinity().0 >= q {
        return Err(Error::Domain(format!("need t_inf < q < q0 < 0, got q = {q}, q0 = {q0}")));
    }
    let mech = fam.psi_at(q)?;
    let eta = mech.eta()?;
    let conj = mech.conjugate(eta)?;
    let v = conj.v_of(h)?;
    let x = conj.psi(v)? * conj.integral_to_infinity(v, 2)?;
    let d0 = fam.psi_at(q0)?.psi_d1(eta)?;
    Ok(ExitTimeLaws { beyond: T::one() - d0 * x, at_ascension: mech.psi_d1(eta)? * x })
}

/// `N[A_h >= q] = v^{psi_q}(h)`.
pub fn exit_tail<T: Real>(fam: &AdmissibleFamily<T>, q: T, h: T) -> Result<T> {
    fam.psi_at(q)?.v_of(h)
}

/// Common value of `psi_q'(0) N[sigma_q exp(-l sigma_q)]` and
/// `E*[exp(-l sigma(T*_q))]`: `psi_q'(0) / psi_q'(psi_q^{-1}(l))`.
pub fn size_bias_identity<T: Real>(fam: &AdmissibleFamily<T>, q: T, l: T) -> Result<T> {
    let mech = fam.psi_at(q)?;
    if mech.classify() != Criticality::Subcritical {
        return Err(Error::Domain(format!("psi_{q} must be subcritical")));
    }
    if !(l >= T::zero()) {
        return Err(Error::Domain(format!("need l >= 0, got {l}")));
    }
    Ok(mech.b() / mech.psi_d1(mech.psi_inverse(l)?)?)
}

/// Rate of the exponential spine length of `T*_q`: `psi_q'(0)`.
pub fn spine_rate<T: Real>(fam: &AdmissibleFamily<T>, q: T) -> Result<T> {
    Ok(fam.psi_at(q)?.b())
}

/// `M_a = exp(theta Z_0 - theta Z_a - psi(theta) int_0^a Z_s ds)`.
pub fn girsanov_weight<T: Real>(mech: &Mechanism<T>, theta: T, z0: T, za: T, integral: T) -> Result<T> {
    Ok((theta * z0 - theta * za - mech.psi(theta)? * integral).exp())
}

/// `N^{psi^theta}[1 - exp(theta Z_a + psi(theta) int_0^a Z)] = -theta` for
/// `theta > 0` with `psi(theta) >= 0`.
pub fn gir2_value<T: Real>(mech: &Mechanism<T>, theta: T) -> Result<T> {
    if !(theta > T::zero()) || mech.psi(theta)? < T::zero() {
        return Err(Error::Domain(format!("need theta > 0 with psi(theta) >= 0, got {theta}")));
    }
    Ok(-theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Window;

    fn drift() -> AdmissibleFamily<f64> {
        AdmissibleFamily::linear_drift(1.0, 1.0, Window::real_line()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn sigma_laws() {
        let m = Mechanism::quadratic(1.0, 1.0).unwrap();
        close(sigma_laplace(&m, 1.0).unwrap(), (5f64.sqrt() - 1.0) / 2.0, 1e-12);
        assert_eq!(sigma_laplace(&m, 0.0).unwrap(), 0.0);
        let sup = Mechanism::quadratic(-1.0, 1.0).unwrap();
        close(sigma_laplace(&sup, 0.0).unwrap(), 1.0, 1e-12);
        close(sigma_laplace_pr(&m, 2.0, 2.0).unwrap(), (-2.0f64).exp(), 1e-12);
    }

    #[test]
    fn conditional_mass() {
        let f = drift();
        close(cond_sigma_laplace(&f, 0.0, 1.0, 1.0, 1.0).unwrap(), (-2.0f64).exp(), 1e-12);
        assert_eq!(cond_sigma_laplace(&f, 0.5, 1.0, 0.0, 3.0).unwrap(), 1.0);
        close(cond_sigma_mean(&f, 0.5, 1.0, 2.0).unwrap(), 4.0, 1e-14);
        assert!(matches!(cond_sigma_mean(&f, 0.0, 1.0, 2.0), Err(Error::Singular(_))));
        assert!(cond_sigma_laplace(&f, 1.0, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn ascension() {
        let f = drift();
        close(ascension_tail(&f, -0.5).unwrap(), 0.5, 1e-12);
        assert_eq!(ascension_tail(&f, 0.5).unwrap(), 0.0);
        for q in [-3.0, -1.0, -0.25] {
            close(ascension_density(&f, q).unwrap(), 1.0, 1e-10);
        }
        assert!(ascension_tail(&f, -1e-6).unwrap() < 1e-3);
        assert_eq!(boundary_mass(&f), 0.0);
        let closed = AdmissibleFamily::linear_drift(1.0, 1.0, Window::new(-1.0, true, 1.0).unwrap()).unwrap();
        assert!(boundary_mass::<f64>(&closed).is_infinite());
    }

    #[test]
    fn ascension_tree() {
        let f = drift();
        close(tree_at_ascension(&f, -1.0, 2.0).unwrap(), 1.0 / 3.0, 1e-12);
        for q in [-2.0, -1.0, -0.1] {
            assert_eq!(tree_at_ascension(&f, q, 0.0).unwrap(), 1.0);
        }
        assert!(tree_at_ascension(&f, -1.0, 1e12).unwrap() < 1e-5);
        assert!(tree_at_ascension(&f, 0.5, 1.0).is_err());
    }

    #[test]
    fn boundary() {
        let f = AdmissibleFamily::linear_drift(1.0, 1.0, Window::new(-1.0, true, 1.0).unwrap()).unwrap();
        assert_eq!(boundary_ascension(&f, 0.0).unwrap(), 0.0);
        close(boundary_ascension(&f, 2.0).unwrap(), 1.0, 1e-12);
        let mut last = 0.0;
        for l in [0.1, 0.5, 1.0, 4.0, 20.0] {
            let v = boundary_ascension(&f, l).unwrap();
            close(v, (1.0 + (1.0 + 4.0 * l).sqrt()) / 2.0 - 1.0, 1e-12);
            assert!(v > last);
            last = v;
        }
        assert!(boundary_ascension(&drift(), 1.0).is_err());
    }

    #[test]
    fn exit_time() {
        let f = drift();
        let h = 2f64.ln();
        // int_1^inf dr/(r^2+r)^2 by partial fractions.
        let integral = 1.5 - 2.0 * 2f64.ln();
        let laws = exit_time_laws(&f, -1.0, -0.5, h).unwrap();
        close(laws.beyond, 1.0 - 1.5 * 2.0 * integral, 1e-9);
        close(laws.beyond, 0.658882, 1e-5);
        close(laws.at_ascension, 2.0 * integral, 1e-9);
        let near = exit_time_laws(&f, -1.0, -1.0 + 1e-8, h).unwrap();
        close(near.beyond + near.at_ascension, 1.0, 1e-6);
        close(exit_tail(&f, 1.0, h).unwrap(), 1.0, 1e-10);
    }

    #[test]
    fn size_bias() {
        let f = drift();
        assert_eq!(size_bias_identity(&f, 1.0, 0.0).unwrap(), 1.0);
        close(size_bias_identity(&f, 1.0, 2.0).unwrap(), 1.0 / 3.0, 1e-12);
        let mut last = 1.0;
        for l in [0.5, 1.0, 2.0, 10.0] {
            let v = size_bias_identity(&f, 1.0, l).unwrap();
            assert!(v > 0.0 && v < last);
            last = v;
        }
        assert_eq!(spine_rate(&f, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn girsanov() {
        let m = Mechanism::quadratic(1.0, 1.0).unwrap();
        assert_eq!(girsanov_weight(&m, 0.0, 1.0, 2.0, 3.0).unwrap(), 1.0);
        close(girsanov_weight(&m, -1.0, 0.0, 2.0, 5.0).unwrap(), 2f64.exp(), 1e-14);
        let sup = Mechanism::quadratic(-1.0, 1.0).unwrap();
        assert_eq!(gir2_value(&sup, 1.0).unwrap(), -1.0);
        assert!(gir2_value(&sup, 0.5).is_err());
    }
}
