//! Branching mechanisms `psi(l) = b l + c l^2 + int (e^{-l z} - 1 + l z) m(dz)`.
//!
//! The Levy measure `m` is a finite sum of primitives: weighted point masses
//! and weighted gamma densities. Everything below works for `f32` and `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{exp_rem2, integrate, ln_gamma, newton_bracketed, pow_rem2};
use crate::real::Real;

/// One term of the Levy measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Primitive<T> {
    /// `w * delta_z`.
    #[serde(rename = "point")]
    PointMass { z: T, w: T },
    /// `w * Gamma(k, rate rho)` as a probability density scaled by `w`.
    #[serde(rename = "gamma")]
    GammaDensity { k: T, rho: T, w: T },
}

impl<T: Real> Primitive<T> {
    pub fn point(z: T, w: T) -> Self {
        Primitive::PointMass { z, w }
    }

    pub fn gamma(k: T, rho: T, w: T) -> Self {
        Primitive::GammaDensity { k, rho, w }
    }

    pub fn weight(&self) -> T {
        match *self {
            Primitive::PointMass { w, .. } | Primitive::GammaDensity { w, .. } => w,
        }
    }

    pub fn with_weight(&self, w: T) -> Self {
        match *self {
            Primitive::PointMass { z, .. } => Primitive::PointMass { z, w },
            Primitive::GammaDensity { k, rho, .. } => Primitive::GammaDensity { k, rho, w },
        }
    }

    /// Mean jump size of the normalised primitive.
    pub fn mean_size(&self) -> T {
        match *self {
            Primitive::PointMass { z, .. } => z,
            Primitive::GammaDensity { k, rho, .. } => k / rho,
        }
    }

    /// `int z m_i(dz)`.
    pub fn first_moment(&self) -> T {
        self.weight() * self.mean_size()
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Primitive::PointMass { z, w } => {
                if !(z.is_finite() && z > T::zero()) {
                    return invalid(format!("point mass location must be positive, got {z}"));
                }
                if !(w.is_finite() && w >= T::zero()) {
                    return invalid(format!("point mass weight must be nonnegative, got {w}"));
                }
            }
            Primitive::GammaDensity { k, rho, w } => {
                if !(k.is_finite() && k > T::zero() && rho.is_finite() && rho > T::zero()) {
                    return invalid(format!("gamma density needs k > 0 and rho > 0, got k={k} rho={rho}"));
                }
                if !(w.is_finite() && w >= T::zero()) {
                    return invalid(format!("gamma density weight must be nonnegative, got {w}"));
                }
            }
        }
        Ok(())
    }

    fn psi(&self, l: T) -> T {
        match *self {
            Primitive::PointMass { z, w } => w * exp_rem2(l * z),
            Primitive::GammaDensity { k, rho, w } => w * pow_rem2(l / rho, k),
        }
    }

    fn d1(&self, l: T) -> T {
        match *self {
            Primitive::PointMass { z, w } => -w * z * (-l * z).exp_m1(),
            Primitive::GammaDensity { k, rho, w } => {
                -w * k / rho * (-(k + T::one()) * (l / rho).ln_1p()).exp_m1()
            }
        }
    }

    fn d2(&self, l: T) -> T {
        match *self {
            Primitive::PointMass { z, w } => w * z * z * (-l * z).exp(),
            Primitive::GammaDensity { k, rho, w } => {
                w * k * (k + T::one()) / (rho * rho) * (-(k + T::one() + T::one()) * (l / rho).ln_1p()).exp()
            }
        }
    }

    /// `int (1 - e^{-l z}) P(dz)` for the normalised primitive.
    pub fn unit_laplace(&self, l: T) -> T {
        match *self {
            Primitive::PointMass { z, .. } => -(-l * z).exp_m1(),
            Primitive::GammaDensity { k, rho, .. } => -(-k * (l / rho).ln_1p()).exp_m1(),
        }
    }

    /// Derivative of [`Primitive::unit_laplace`] in `l`.
    pub fn unit_laplace_d1(&self, l: T) -> T {
        match *self {
            Primitive::PointMass { z, .. } => z * (-l * z).exp(),
            Primitive::GammaDensity { k, rho, .. } => k / rho * (-(k + T::one()) * (l / rho).ln_1p()).exp(),
        }
    }

    /// Exponential tilt `e^{-theta z} m_i(dz)`.
    pub fn tilted(&self, theta: T) -> Self {
        match *self {
            Primitive::PointMass { z, w } => Primitive::PointMass { z, w: w * (-theta * z).exp() },
            Primitive::GammaDensity { k, rho, w } => Primitive::GammaDensity {
                k,
                rho: rho + theta,
                w: w * (rho / (rho + theta)).powf(k),
            },
        }
    }

    /// Atom weight and density of `m_i` at `z`.
    pub fn intensity_at(&self, z: T) -> (T, T) {
        match *self {
            Primitive::PointMass { z: site, w } => (if site == z { w } else { T::zero() }, T::zero()),
            Primitive::GammaDensity { k, rho, w } => {
                if z <= T::zero() || w == T::zero() {
                    return (T::zero(), T::zero());
                }
                let log = k * rho.ln() + (k - T::one()) * z.ln() - rho * z - ln_gamma(k);
                (T::zero(), w * log.exp())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

/// A branching mechanism with finite first moment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MechanismSpec<T>", into = "MechanismSpec<T>")]
#[serde(bound = "T: Real")]
pub struct Mechanism<T> {
    b: T,
    c: T,
    jumps: Vec<Primitive<T>>,
}

#[derive(Serialize, Deserialize)]
struct MechanismSpec<T> {
    b: T,
    c: T,
    #[serde(default)]
    m: Vec<Primitive<T>>,
}

impl<T: Real> TryFrom<MechanismSpec<T>> for Mechanism<T> {
    type Error = Error;
    fn try_from(s: MechanismSpec<T>) -> Result<Self> {
        Mechanism::new(s.b, s.c, s.m)
    }
}

impl<T: Real> From<Mechanism<T>> for MechanismSpec<T> {
    fn from(m: Mechanism<T>) -> Self {
        MechanismSpec { b: m.b, c: m.c, m: m.jumps }
    }
}

impl<T: Real> Mechanism<T> {
    pub fn new(b: T, c: T, jumps: Vec<Primitive<T>>) -> Result<Self> {
        if !b.is_finite() {
            return invalid(format!("drift must be finite, got {b}"));
        }
        if !(c.is_finite() && c >= T::zero()) {
            return invalid(format!("quadratic coefficient must be nonnegative, got {c}"));
        }
        for p in &jumps {
            p.validate()?;
        }
        Ok(Mechanism { b, c, jumps })
    }

    /// `b l + c l^2`.
    pub fn quadratic(b: T, c: T) -> Result<Self> {
        Self::new(b, c, Vec::new())
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn jumps(&self) -> &[Primitive<T>] {
        &self.jumps
    }

    /// `int z m(dz)`.
    pub fn jump_first_moment(&self) -> T {
        self.jumps.iter().map(|p| p.first_moment()).sum()
    }

    /// Total mass of `m`.
    pub fn jump_mass(&self) -> T {
        self.jumps.iter().map(|p| p.weight()).sum()
    }

    /// Infimum of the domain on which the Laplace exponent is finite.
    pub fn domain_min(&self) -> T {
        self.jumps
            .iter()
            .filter_map(|p| match *p {
                Primitive::GammaDensity { rho, w, .. } if w > T::zero() => Some(-rho),
                _ => None,
            })
            .fold(T::neg_infinity(), T::max)
    }

    fn check_arg(&self, l: T) -> Result<()> {
        if !l.is_finite() || l <= self.domain_min() {
            return Err(Error::Domain(format!("psi is not finite at {l}")));
        }
        Ok(())
    }

    pub(crate) fn eval(&self, l: T) -> T {
        let j: T = self.jumps.iter().map(|p| p.psi(l)).sum();
        self.b * l + self.c * l * l + j
    }

    pub(crate) fn eval_d1(&self, l: T) -> T {
        let j: T = self.jumps.iter().map(|p| p.d1(l)).sum();
        self.b + (self.c + self.c) * l + j
    }

    pub(crate) fn eval_d2(&self, l: T) -> T {
        let j: T = self.jumps.iter().map(|p| p.d2(l)).sum();
        self.c + self.c + j
    }

    pub fn psi(&self, l: T) -> Result<T> {
        self.check_arg(l)?;
        Ok(self.eval(l))
    }

    pub fn psi_d1(&self, l: T) -> Result<T> {
        self.check_arg(l)?;
        Ok(self.eval_d1(l))
    }

    pub fn psi_d2(&self, l: T) -> Result<T> {
        self.check_arg(l)?;
        Ok(self.eval_d2(l))
    }

    pub fn classify(&self) -> Criticality {
        if self.b > T::zero() {
            Criticality::Subcritical
        } else if self.b == T::zero() {
            Criticality::Critical
        } else {
            Criticality::Supercritical
        }
    }

    pub fn is_grey(&self) -> bool {
        self.c > T::zero()
    }

    fn require_grey(&self) -> Result<()> {
        if self.is_grey() {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "int^inf dl/psi(l) diverges without a quadratic part (c = {})",
                self.c
            )))
        }
    }

    fn crossover(&self, eta: T) -> T {
        let two = T::lit(2.0);
        (two * eta + T::one()).max(T::lit(10.0)).max(two * self.b.abs() / self.c)
    }

    /// Checks that `int^inf dl/psi(l)` is finite, comparing the tail with `c l^2`.
    pub fn grey_check(&self) -> Result<bool> {
        if !self.is_grey() {
            return Ok(false);
        }
        let eta = self.eta()?;
        let big = self.crossover(eta);
        let tail = self.tail_integral(big, 1)?;
        Ok(tail.is_finite() && tail > T::zero() && tail <= T::lit(2.0) / (self.c * big))
    }

    /// Largest root of `psi`.
    pub fn eta(&self) -> Result<T> {
        self.require_grey()?;
        if self.b >= T::zero() {
            return Ok(T::zero());
        }
        let mut hi = T::one();
        while self.eval(hi) <= T::zero() {
            hi = hi + hi;
            if !hi.is_finite() {
                return Err(Error::NotConverged("no positive root of psi".into()));
            }
        }
        let mut lo = T::zero();
        for _ in 0..4000 {
            if hi - lo <= T::epsilon() * hi {
                break;
            }
            let mid = lo + (hi - lo) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) > T::zero() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut x = hi;
        for _ in 0..3 {
            let d = self.eval_d1(x);
            if d <= T::zero() {
                break;
            }
            let next = x - self.eval(x) / d;
            if !(next >= lo && next <= hi + (hi - lo)) {
                break;
            }
            x = next;
        }
        Ok(x)
    }

    /// The inverse `psi^{-1}` on `[0, inf)`, valued in `[eta, inf)`.
    pub fn psi_inverse(&self, y: T) -> Result<T> {
        if !(y >= T::zero()) || !y.is_finite() {
            return Err(Error::Domain(format!("psi^-1 needs a finite y >= 0, got {y}")));
        }
        let eta = self.eta()?;
        if y == T::zero() {
            return Ok(eta);
        }
        let mut hi = T::one().max(eta + eta);
        while self.eval(hi) < y {
            hi = hi + hi;
            if !hi.is_finite() {
                return Err(Error::NotConverged(format!("psi^-1({y}) overflowed")));
            }
        }
        newton_bracketed(|l| (self.eval(l) - y, self.eval_d1(l)), eta, hi, hi, T::root_tol())
    }

    fn recip_integral(&self, lo: T, hi: T, power: i32) -> Result<T> {
        let r = integrate(|l| self.eval(l).powi(-power), lo, hi, T::min_positive_value(), T::quad_tol())?;
        Ok(r.value)
    }

    /// `int_from^inf psi^{-power}` via `s = 1/l`, split into the exact `c l^2`
    /// contribution and a bounded correction.
    fn tail_integral(&self, from: T, power: i32) -> Result<T> {
        let s_max = T::one() / from;
        let cp = self.c.powi(power);
        let order = 2 * power - 1;
        let exact = s_max.powi(order) / (T::count(order as u64) * cp);
        let corr = integrate(
            |s: T| {
                let g = self.eval(T::one() / s) * s * s;
                s.powi(2 * power - 2) * (g.powi(-power) - cp.recip())
            },
            T::zero(),
            s_max,
            T::quad_tol() * exact,
            T::quad_tol(),
        )?;
        Ok(exact + corr.value)
    }

    /// `int_from^inf psi^{-power}` for `from > eta`.
    pub fn integral_to_infinity(&self, from: T, power: i32) -> Result<T> {
        self.require_grey()?;
        let eta = self.eta()?;
        if !(from > eta) {
            return Err(Error::Domain(format!("lower limit {from} must exceed eta = {eta}")));
        }
        let big = self.crossover(eta);
        if from >= big {
            self.tail_integral(from, power)
        } else {
            Ok(self.recip_integral(from, big, power)? + self.tail_integral(big, power)?)
        }
    }

    /// `int_lo^hi dl/psi(l)`, with both limits on the same side of `eta`.
    pub fn flow_time(&self, lo: T, hi: T) -> Result<T> {
        self.recip_integral(lo, hi, 1)
    }

    /// `v(a)`: the unique `v > eta` with `int_v^inf dl/psi(l) = a`.
    pub fn v_of(&self, a: T) -> Result<T> {
        if !(a > T::zero()) {
            return Err(Error::Domain(format!("v(a) needs a > 0, got {a}")));
        }
        self.require_grey()?;
        let eta = self.eta()?;
        if a.is_infinite() {
            return Ok(eta);
        }
        self.flow(a, None, eta)
    }

    /// `u(a, l)`: solution of `int_u^l dr/psi(r) = a`.
    pub fn u_of(&self, a: T, l: T) -> Result<T> {
        if !(a >= T::zero()) {
            return Err(Error::Domain(format!("u(a, l) needs a >= 0, got {a}")));
        }
        if !(l >= T::zero()) || !l.is_finite() {
            return Err(Error::Domain(format!("u(a, l) needs a finite l >= 0, got {l}")));
        }
        self.require_grey()?;
        let eta = self.eta()?;
        if a == T::zero() || l == T::zero() || l == eta {
            return Ok(l);
        }
        if a.is_infinite() {
            return Ok(eta);
        }
        self.flow(a, Some(l), eta)
    }

    /// Solves `F(u) = a` with `F(u) = int_u^upper dr/psi`, along
    /// `u = eta + side * e^x`. `F` is decreasing in `x` on both sides.
    /// Increments are integrated in `x` against `psi(eta + d)` written as the
    /// conjugate mechanism, which keeps full precision next to `eta`.
    fn flow(&self, a: T, upper: Option<T>, eta: T) -> Result<T> {
        let phi = if eta > T::zero() { self.conjugate(eta)? } else { self.clone() };
        let side = match upper {
            Some(l) if l < eta => -T::one(),
            _ => T::one(),
        };
        let at = |x: T| eta + side * x.exp();
        let x_floor = if eta > T::zero() { (eta * T::epsilon()).ln() } else { T::min_positive_value().ln() };
        let (mut x, mut f, x_cap) = match upper {
            Some(l) => {
                let x0 = (l - eta).abs().ln();
                (x0, T::zero(), x0)
            }
            None => {
                let u0 = eta + eta.max(T::one());
                (((u0 - eta).ln()), self.integral_to_infinity(u0, 1)?, T::infinity())
            }
        };
        let mut u = at(x);
        let (mut xl, mut xh) = (T::neg_infinity(), x_cap);
        let tol = T::root_tol();
        for _ in 0..300 {
            if f > a {
                xl = xl.max(x);
            } else {
                xh = xh.min(x);
            }
            let slope = x.exp() / phi.eval(side * x.exp()).abs();
            let mut next = x + (f - a) / slope;
            let five = T::lit(5.0);
            if next > x + five {
                next = x + five;
            }
            if next < x - five {
                next = x - five;
            }
            if !next.is_finite() || next <= xl || next >= xh {
                next = if xl.is_finite() && xh.is_finite() {
                    (xl + xh) * T::lit(0.5)
                } else if xl.is_finite() {
                    xl + T::one()
                } else {
                    xh - T::one()
                };
            }
            if next < x_floor {
                if x <= x_floor {
                    return Ok(eta);
                }
                next = x_floor;
            }
            let u_next = at(next);
            if (u_next - u).abs() <= tol * u.abs().max(T::min_positive_value()) {
                return Ok(u_next);
            }
            if u_next == eta {
                return Ok(eta);
            }
            f = f + integrate(
                |y: T| y.exp() / phi.eval(side * y.exp()).abs(),
                next,
                x,
                T::min_positive_value(),
                T::quad_tol(),
            )?
            .value;
            x = next;
            u = u_next;
        }
        Err(Error::NotConverged(format!("flow equation for a = {a} did not converge")))
    }

    /// `psi^theta(l) = psi(theta + l) - psi(theta)`.
    pub fn conjugate(&self, theta: T) -> Result<Self> {
        self.check_arg(theta)?;
        Mechanism::new(
            self.eval_d1(theta),
            self.c,
            self.jumps.iter().map(|p| p.tilted(theta)).collect(),
        )
    }

    /// Atom weight and density of `m` at `z`.
    pub fn intensity_at(&self, z: T) -> (T, T) {
        self.jumps.iter().fold((T::zero(), T::zero()), |(a, d), p| {
            let (pa, pd) = p.intensity_at(z);
            (a + pa, d + pd)
        })
    }

    /// Radon-Nikodym derivative `d self.m / d other.m` at jump size `z`.
    pub fn jump_density_ratio(&self, other: &Self, z: T) -> Result<T> {
        let (na, nd) = self.intensity_at(z);
        let (da, dd) = other.intensity_at(z);
        if da > T::zero() {
            Ok(na / da)
        } else if dd > T::zero() {
            Ok(nd / dd)
        } else {
            Err(Error::DegeneratePrimitive(format!("reference measure puts no mass at z = {z}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(b: f64, c: f64) -> Mechanism<f64> {
        Mechanism::quadratic(b, c).unwrap()
    }

    #[test]
    fn quadratic_closed_forms() {
        let m = quad(1.0, 1.0);
        for &a in &[0.01, 0.3, 1.0, 5.0] {
            let exact = 1.0 / (a as f64).exp_m1();
            let v = m.v_of(a).unwrap();
            assert!((v - exact).abs() <= 1e-10 * exact, "a={a} v={v} exact={exact}");
        }
        for &y in &[0.0, 0.5, 3.0, 1e4] {
            let exact = (-1.0 + (1.0 + 4.0 * y as f64).sqrt()) / 2.0;
            assert!((m.psi_inverse(y).unwrap() - exact).abs() <= 1e-12 * exact.max(1.0));
        }
    }

    #[test]
    fn supercritical_root_and_flow() {
        let m = quad(-1.0, 1.0);
        assert!((m.eta().unwrap() - 1.0).abs() < 1e-14);
        assert!((m.v_of(2f64.ln()).unwrap() - 2.0).abs() < 1e-10);
        let u = m.u_of(0.5, 0.3).unwrap();
        // Logistic solution of u' = -psi(u) started below eta.
        let exact = 1.0 / (1.0 + (1.0 / 0.3 - 1.0) * (-0.5f64).exp());
        assert!((u - exact).abs() < 1e-10, "{u} {exact}");
    }

    #[test]
    fn grey_requires_quadratic_part() {
        let m = Mechanism::new(-1.0, 0.0, vec![Primitive::point(1.0, 2.0)]).unwrap();
        assert!(!m.grey_check().unwrap());
        assert!(matches!(m.eta(), Err(Error::Precondition(_))));
        assert!(Mechanism::<f64>::new(0.0, -1.0, vec![]).is_err());
    }

    #[test]
    fn json_shape() {
        let m: Mechanism<f64> =
            serde_json::from_str(r#"{"b":0,"c":1,"m":[{"type":"point","z":1,"w":2},{"type":"gamma","k":2,"rho":3,"w":1}]}"#)
                .unwrap();
        assert_eq!(m.jumps()[0], Primitive::point(1.0, 2.0));
        let back: Mechanism<f64> = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<Mechanism<f64>>(r#"{"b":0,"c":-1}"#).is_err());
    }

    #[test]
    fn gamma_primitive_matches_quadrature() {
        let p = Primitive::gamma(2.5, 1.5, 0.7);
        let m = Mechanism::new(0.2, 0.5, vec![p]).unwrap();
        let l = 1.3;
        let j = integrate(
            |z: f64| {
                let (_, dens) = p.intensity_at(z);
                dens * ((-l * z).exp() - 1.0 + l * z)
            },
            0.0,
            60.0,
            1e-14,
            1e-12,
        )
        .unwrap()
        .value;
        assert!((m.psi(l).unwrap() - (0.2 * l + 0.5 * l * l + j)).abs() < 1e-10);
    }
}
