//! Admissible families `(psi_q, q in Theta)` of branching mechanisms.
//!
//! A family is nondecreasing in `q` and satisfies
//! `psi_q(l) - psi_t(l) = int_t^q zeta_theta(l) d theta` with
//! `zeta_theta(l) = beta_theta l + int (1 - e^{-l z}) n_theta(dz)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mechanism::{Criticality, Mechanism, Primitive};
use crate::numerics::{bisect, integrate, newton_bracketed};
use crate::real::Real;

/// Interval of admissible parameters, `[lower, upper]` or `(lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window<T> {
    pub lower: T,
    #[serde(default = "default_true")]
    pub lower_closed: bool,
    pub upper: T,
}

fn default_true() -> bool {
    true
}

impl<T: Real> Window<T> {
    pub fn new(lower: T, lower_closed: bool, upper: T) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || !(lower < upper) {
            return invalid(format!("empty window ({lower}, {upper})"));
        }
        Ok(Window { lower, lower_closed: lower_closed && lower.is_finite(), upper })
    }

    pub fn real_line() -> Self {
        Window { lower: T::neg_infinity(), lower_closed: false, upper: T::infinity() }
    }

    pub fn contains(&self, q: T) -> bool {
        let above = if self.lower_closed { q >= self.lower } else { q > self.lower };
        above && q <= self.upper && q.is_finite()
    }
}

/// Elementary function of the family parameter with closed-form integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TimeFn<T> {
    Constant { value: T },
    /// `intercept + slope * theta`.
    Linear { intercept: T, slope: T },
    /// `scale * e^{rate * theta}`.
    Exp { scale: T, rate: T },
}

impl<T: Real> TimeFn<T> {
    pub fn value(&self, th: T) -> T {
        match *self {
            TimeFn::Constant { value } => value,
            TimeFn::Linear { intercept, slope } => intercept + slope * th,
            TimeFn::Exp { scale, rate } => scale * (rate * th).exp(),
        }
    }

    /// `int_a^b f`.
    pub fn integral(&self, a: T, b: T) -> T {
        match *self {
            TimeFn::Constant { value } => value * (b - a),
            TimeFn::Linear { intercept, slope } => {
                intercept * (b - a) + slope * (b * b - a * a) * T::lit(0.5)
            }
            TimeFn::Exp { scale, rate } => {
                if rate == T::zero() {
                    scale * (b - a)
                } else {
                    scale * (rate * a).exp() * (rate * (b - a)).exp_m1() / rate
                }
            }
        }
    }

    /// Minimum over `[a, b]`; every variant is monotone.
    fn min_on(&self, a: T, b: T) -> T {
        self.value(a).min(self.value(b))
    }
}

/// Serialisable description of a family.
///
/// Windows are `[lower, upper]`; `null` leaves that end unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
#[serde(bound = "T: Real")]
pub enum FamilySpec<T> {
    /// `psi_q(l) = psi(q + l) - psi(q)`.
    Shift {
        base: Mechanism<T>,
        #[serde(default)]
        window: Option<[Option<T>; 2]>,
    },
    /// `psi_q(l) = q b_rate l + c l^2`.
    #[serde(rename = "lineardrift")]
    LinearDrift {
        kernel: LinearKernel<T>,
        #[serde(default)]
        window: Option<[Option<T>; 2]>,
    },
    /// Atoms of `base` above `h(q)` are moved into the drift; `base.b` is `g(0)`.
    Truncation { base: Mechanism<T>, kernel: TruncationKernel<T>, window: [T; 2] },
    /// Critical-at-zero family extended to `q > 0` through `psi_{-q}(eta_{-q} + .)`.
    Reflected { inner: Box<FamilySpec<T>> },
    /// `base` at the window start, then the kernel up to the window end.
    Custom { base: Mechanism<T>, kernel: CustomKernel<T>, window: [T; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearKernel<T> {
    pub b_rate: T,
    pub c: T,
}

/// `g(q) = g(0) + drift_rate q` and `h(q) = threshold0 e^{-threshold_rate q}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationKernel<T> {
    pub drift_rate: T,
    pub threshold0: T,
    pub threshold_rate: T,
}

/// `beta(theta)` and `nu[i](theta)`, the rate at which primitive `i` of the
/// base measure is moved into the kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomKernel<T> {
    pub beta: TimeFn<T>,
    pub nu: Vec<TimeFn<T>>,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind<T> {
    Shift { base: Mechanism<T> },
    LinearDrift { b_rate: T, c: T },
    Truncation { c: T, drift0: T, drift_rate: T, threshold0: T, threshold_rate: T, atoms: Vec<(T, T)> },
    Reflected { inner: Box<AdmissibleFamily<T>> },
    Custom { base: Mechanism<T>, t0: T, beta: TimeFn<T>, nu: Vec<TimeFn<T>> },
}

/// A validated admissible family.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleFamily<T> {
    kind: Kind<T>,
    window: Window<T>,
}

/// Pair `(alpha(t, q), mark probability)` for pruning from `t` to `q`.
#[derive(Debug, Clone, Copy)]
pub struct PruneParameters<'a, T> {
    family: &'a AdmissibleFamily<T>,
    pub t: T,
    pub q: T,
    pub alpha: T,
}

impl<T: Real> PruneParameters<'_, T> {
    /// Probability that an infinite node of size `z` is marked by time `q`.
    pub fn node_mark_probability(&self, z: T) -> Result<T> {
        Ok(T::one() - self.family.mz(self.t, self.q, z)?)
    }
}

/// Outcome of one admissibility condition on a finite grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub conditions: Vec<ConditionCheck>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }
}

/// `gamma_t` and the density of `U` at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscensionRates<T> {
    pub gamma: T,
    pub u_density: T,
}

fn opt_window<T: Real>(lower: Option<T>, upper: Option<T>) -> Result<Window<T>> {
    let lo = lower.unwrap_or(T::neg_infinity());
    Window::new(lo, lower.is_some(), upper.unwrap_or(T::infinity()))
}

impl<T: Real> AdmissibleFamily<T> {
    pub fn from_spec(spec: &FamilySpec<T>) -> Result<Self> {
        let open = |w: &Option<[Option<T>; 2]>| match w {
            Some([lo, hi]) => opt_window(*lo, *hi),
            None => opt_window(None, None),
        };
        match spec {
            FamilySpec::Shift { base, window } => {
                let mut w = open(window)?;
                if w.lower < base.domain_min() || (w.lower == base.domain_min() && w.lower_closed) {
                    w.lower = base.domain_min();
                    w.lower_closed = false;
                }
                Self::shift(base.clone(), w)
            }
            FamilySpec::LinearDrift { kernel, window } => Self::linear_drift(kernel.b_rate, kernel.c, open(window)?),
            FamilySpec::Truncation { base, kernel, window } => Self::truncation(
                base.c(),
                base.b(),
                kernel.drift_rate,
                kernel.threshold0,
                kernel.threshold_rate,
                base.jumps(),
                Window::new(window[0], true, window[1])?,
            ),
            FamilySpec::Reflected { inner } => Self::reflected(Self::from_spec(inner)?),
            FamilySpec::Custom { base, kernel, window } => {
                Self::custom(base.clone(), window[0], window[1], kernel.beta, kernel.nu.clone())
            }
        }
    }

    pub fn shift(base: Mechanism<T>, window: Window<T>) -> Result<Self> {
        if !base.is_grey() {
            return invalid("shift family needs a base with c > 0");
        }
        if window.lower < base.domain_min() {
            return invalid(format!("window starts below the domain of psi ({})", base.domain_min()));
        }
        Ok(AdmissibleFamily { kind: Kind::Shift { base }, window })
    }

    pub fn linear_drift(b_rate: T, c: T, window: Window<T>) -> Result<Self> {
        if !(b_rate > T::zero() && b_rate.is_finite()) {
            return invalid(format!("linear drift rate must be positive, got {b_rate}"));
        }
        if !(c > T::zero() && c.is_finite()) {
            return invalid(format!("quadratic coefficient must be positive, got {c}"));
        }
        Ok(AdmissibleFamily { kind: Kind::LinearDrift { b_rate, c }, window })
    }

    pub fn truncation(
        c: T,
        drift0: T,
        drift_rate: T,
        threshold0: T,
        threshold_rate: T,
        atoms: &[Primitive<T>],
        window: Window<T>,
    ) -> Result<Self> {
        if !(c > T::zero()) {
            return invalid("truncation family needs c > 0");
        }
        if !(drift_rate >= T::zero()) {
            return invalid(format!("drift rate must be nonnegative, got {drift_rate}"));
        }
        if !(threshold0 > T::zero()) || !threshold_rate.is_finite() {
            return invalid("threshold must be positive and finite");
        }
        if !(window.lower.is_finite() && window.upper.is_finite()) {
            return invalid("truncation family needs a bounded window");
        }
        let mut pairs = Vec::with_capacity(atoms.len());
        for p in atoms {
            match *p {
                Primitive::PointMass { z, w } if z > T::zero() && w >= T::zero() => pairs.push((z, w)),
                _ => return invalid("truncation family only supports point masses"),
            }
        }
        Ok(AdmissibleFamily {
            kind: Kind::Truncation { c, drift0, drift_rate, threshold0, threshold_rate, atoms: pairs },
            window,
        })
    }

    pub fn reflected(inner: Self) -> Result<Self> {
        if !inner.window.contains(T::zero()) || inner.window.lower >= T::zero() {
            return invalid("reflected family needs an inner window reaching below 0");
        }
        if inner.psi_at(T::zero())?.classify() != Criticality::Critical {
            return invalid("reflected family needs psi_0 critical");
        }
        let window = Window {
            lower: inner.window.lower,
            lower_closed: inner.window.lower_closed,
            upper: -inner.window.lower,
        };
        Ok(AdmissibleFamily { kind: Kind::Reflected { inner: Box::new(inner) }, window })
    }

    pub fn custom(base: Mechanism<T>, t0: T, t1: T, beta: TimeFn<T>, nu: Vec<TimeFn<T>>) -> Result<Self> {
        let window = Window::new(t0, true, t1)?;
        if !t1.is_finite() || !t0.is_finite() {
            return invalid("custom family needs a bounded window");
        }
        if !base.is_grey() {
            return invalid("custom family needs a base with c > 0");
        }
        if nu.len() != base.jumps().len() {
            return invalid(format!("{} kernel terms for {} primitives", nu.len(), base.jumps().len()));
        }
        if beta.min_on(t0, t1) < T::zero() {
            return invalid("kernel beta must be nonnegative");
        }
        for (i, (f, p)) in nu.iter().zip(base.jumps()).enumerate() {
            if f.min_on(t0, t1) < T::zero() {
                return invalid(format!("kernel nu[{i}] must be nonnegative"));
            }
            if p.weight() - f.integral(t0, t1) < T::zero() {
                return invalid(format!("kernel nu[{i}] exhausts primitive {i} before {t1}"));
            }
        }
        Ok(AdmissibleFamily { kind: Kind::Custom { base, t0, beta, nu }, window })
    }

    pub fn window(&self) -> Window<T> {
        self.window
    }

    fn check(&self, q: T) -> Result<()> {
        if self.window.contains(q) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "q = {q} outside the family window ({}, {}]",
                self.window.lower, self.window.upper
            )))
        }
    }

    fn check_pair(&self, t: T, q: T) -> Result<()> {
        self.check(t)?;
        self.check(q)?;
        if t > q {
            return Err(Error::Domain(format!("need t <= q, got t = {t}, q = {q}")));
        }
        Ok(())
    }

    pub fn psi_at(&self, q: T) -> Result<Mechanism<T>> {
        self.check(q)?;
        match &self.kind {
            Kind::Shift { base } => base.conjugate(q),
            Kind::LinearDrift { b_rate, c } => Mechanism::quadratic(q * *b_rate, *c),
            Kind::Truncation { c, drift0, drift_rate, threshold0, threshold_rate, atoms } => {
                let h = *threshold0 * (-*threshold_rate * q).exp();
                let mut b = *drift0 + *drift_rate * q;
                let mut kept = Vec::new();
                // Crossed atoms stay with zero weight so indices keep naming base primitives.
                for &(z, w) in atoms {
                    if z <= h {
                        kept.push(Primitive::point(z, w));
                    } else {
                        b = b + w * z;
                        kept.push(Primitive::point(z, T::zero()));
                    }
                }
                Mechanism::new(b, *c, kept)
            }
            Kind::Reflected { inner } => {
                if q <= T::zero() {
                    inner.psi_at(q)
                } else {
                    let m = inner.psi_at(-q)?;
                    let eta = m.eta()?;
                    m.conjugate(eta)
                }
            }
            Kind::Custom { base, t0, beta, nu } => {
                let mut b = base.b() + beta.integral(*t0, q);
                let mut jumps = Vec::with_capacity(nu.len());
                for (p, f) in base.jumps().iter().zip(nu) {
                    let used = f.integral(*t0, q);
                    b = b + used * p.mean_size();
                    jumps.push(p.with_weight((p.weight() - used).max(T::zero())));
                }
                Mechanism::new(b, base.c(), jumps)
            }
        }
    }

    /// `zeta_q(l) = d psi_q(l) / dq`.
    pub fn zeta(&self, q: T, l: T) -> Result<T> {
        self.check(q)?;
        match &self.kind {
            Kind::Shift { base } => {
                base.psi(q + l)?;
                Ok(base.eval_d1(q + l) - base.eval_d1(q))
            }
            Kind::LinearDrift { b_rate, .. } => Ok(*b_rate * l),
            Kind::Truncation { drift_rate, .. } => Ok(*drift_rate * l),
            Kind::Reflected { inner } => {
                if q <= T::zero() {
                    return inner.zeta(q, l);
                }
                let s = -q;
                let m = inner.psi_at(s)?;
                let eta = m.eta()?;
                let r = inner.zeta(s, eta)? / m.eval_d1(eta);
                Ok(-inner.zeta(s, eta + l)? + m.eval_d1(eta + l) * r)
            }
            Kind::Custom { base, beta, nu, .. } => {
                let mut z = beta.value(q) * l;
                for (p, f) in base.jumps().iter().zip(nu) {
                    z = z + f.value(q) * p.unit_laplace(l);
                }
                Ok(z)
            }
        }
    }

    /// `d zeta_q(l) / dl`.
    pub fn zeta_d1(&self, q: T, l: T) -> Result<T> {
        self.check(q)?;
        match &self.kind {
            Kind::Shift { base } => base.psi_d2(q + l),
            Kind::LinearDrift { b_rate, .. } => Ok(*b_rate),
            Kind::Truncation { drift_rate, .. } => Ok(*drift_rate),
            Kind::Reflected { inner } => {
                if q <= T::zero() {
                    return inner.zeta_d1(q, l);
                }
                let s = -q;
                let m = inner.psi_at(s)?;
                let eta = m.eta()?;
                let r = inner.zeta(s, eta)? / m.eval_d1(eta);
                Ok(-inner.zeta_d1(s, eta + l)? + m.eval_d2(eta + l) * r)
            }
            Kind::Custom { base, beta, nu, .. } => {
                let mut z = beta.value(q);
                for (p, f) in base.jumps().iter().zip(nu) {
                    z = z + f.value(q) * p.unit_laplace_d1(l);
                }
                Ok(z)
            }
        }
    }

    /// Brownian part `beta_q` of the kernel.
    pub fn beta(&self, q: T) -> Result<T> {
        self.check(q)?;
        match &self.kind {
            Kind::Shift { base } => Ok(base.c() + base.c()),
            Kind::LinearDrift { b_rate, .. } => Ok(*b_rate),
            Kind::Truncation { drift_rate, .. } => Ok(*drift_rate),
            Kind::Reflected { inner } => {
                if q <= T::zero() {
                    return inner.beta(q);
                }
                let s = -q;
                let m = inner.psi_at(s)?;
                let eta = m.eta()?;
                let r = inner.zeta(s, eta)? / m.eval_d1(eta);
                Ok(-inner.beta(s)? + (m.c() + m.c()) * r)
            }
            Kind::Custom { beta, .. } => Ok(beta.value(q)),
        }
    }

    /// `alpha(t, q) = int_t^q beta`.
    pub fn alpha(&self, t: T, q: T) -> Result<T> {
        self.check_pair(t, q)?;
        match &self.kind {
            Kind::Shift { base } => Ok((base.c() + base.c()) * (q - t)),
            Kind::LinearDrift { b_rate, .. } => Ok(*b_rate * (q - t)),
            Kind::Truncation { drift_rate, .. } => Ok(*drift_rate * (q - t)),
            Kind::Reflected { inner } => {
                let mut a = T::zero();
                if t < T::zero() {
                    a = a + inner.alpha(t, q.min(T::zero()))?;
                }
                if q > T::zero() {
                    let lo = t.max(T::zero());
                    let mut err = None;
                    let r = integrate(
                        |th| match self.beta(th) {
                            Ok(v) => v,
                            Err(e) => {
                                err = Some(e);
                                T::zero()
                            }
                        },
                        lo,
                        q,
                        T::epsilon(),
                        T::lit(1e-10).max(T::quad_tol()),
                    )?;
                    if let Some(e) = err {
                        return Err(e);
                    }
                    a = a + r.value;
                }
                Ok(a)
            }
            Kind::Custom { beta, .. } => Ok(beta.integral(t, q)),
        }
    }

    /// Smallest `q` in `[t, q_max]` with `alpha(t, q) = target`.
    pub fn alpha_inverse(&self, t: T, target: T, q_max: T) -> Result<T> {
        if !(target >= T::zero()) {
            return Err(Error::Domain(format!("alpha target must be nonnegative, got {target}")));
        }
        if target == T::zero() {
            return Ok(t);
        }
        match &self.kind {
            Kind::Shift { base } => Ok(t + target / (base.c() + base.c())),
            Kind::LinearDrift { b_rate, .. } => Ok(t + target / *b_rate),
            Kind::Truncation { drift_rate, .. } => Ok(t + target / *drift_rate),
            _ => {
                let total = self.alpha(t, q_max)?;
                if target > total {
                    return Err(Error::Domain(format!("alpha({t}, {q_max}) = {total} < {target}")));
                }
                newton_bracketed(
                    |q| {
                        let a = self.alpha(t, q).unwrap_or(T::nan());
                        let d = self.beta(q).unwrap_or(T::nan());
                        (a - target, d)
                    },
                    t,
                    q_max,
                    t + (q_max - t) * target / total,
                    T::lit(1e-12).max(T::root_tol()),
                )
            }
        }
    }

    pub fn prune_parameters(&self, t: T, q: T) -> Result<PruneParameters<'_, T>> {
        Ok(PruneParameters { family: self, t, q, alpha: self.alpha(t, q)? })
    }

    /// `m_z(t, q) = (d m_q / d m_t)(z)`, the survival factor of a jump of size `z`.
    pub fn mz(&self, t: T, q: T, z: T) -> Result<T> {
        self.check_pair(t, q)?;
        if !(z > T::zero()) {
            return Err(Error::Domain(format!("jump size must be positive, got {z}")));
        }
        match &self.kind {
            Kind::Shift { .. } => Ok((-z * (q - t)).exp()),
            Kind::LinearDrift { .. } => Ok(T::one()),
            Kind::Truncation { threshold0, threshold_rate, .. } => {
                let h = |s: T| *threshold0 * (-*threshold_rate * s).exp();
                if z > h(t) || z <= h(q) {
                    Ok(T::one())
                } else {
                    Ok(T::zero())
                }
            }
            _ => {
                let mq = self.psi_at(q)?;
                let mt = self.psi_at(t)?;
                mq.jump_density_ratio(&mt, z)
            }
        }
    }

    /// Survival factor of primitive `i` as a whole.
    ///
    /// Only defined when the primitive keeps its shape between `t` and `q`.
    pub fn mz_primitive(&self, t: T, q: T, i: usize) -> Result<T> {
        self.check_pair(t, q)?;
        let mt = self.psi_at(t)?;
        let pt = *mt
            .jumps()
            .get(i)
            .ok_or_else(|| Error::InvalidParameter(format!("no primitive {i}")))?;
        if pt.weight() == T::zero() {
            return Err(Error::DegeneratePrimitive(format!("primitive {i} has zero mass at t = {t}")));
        }
        match pt {
            Primitive::PointMass { z, .. } => self.mz(t, q, z),
            Primitive::GammaDensity { .. } => {
                let mq = self.psi_at(q)?;
                match mq.jumps().get(i) {
                    Some(&pq) if pq.with_weight(pt.weight()) == pt => Ok(pq.weight() / pt.weight()),
                    _ => Err(Error::DegeneratePrimitive(format!(
                        "primitive {i} changes shape between {t} and {q}"
                    ))),
                }
            }
        }
    }

    /// First `q` in `(t, q_max]` with `-ln m_z(t, q) >= e`, if any.
    pub fn first_node_mark(&self, t: T, z: T, e: T, q_max: T) -> Result<Option<T>> {
        self.check_pair(t, q_max)?;
        match &self.kind {
            Kind::Shift { .. } => {
                let q = t + e / z;
                Ok(if q <= q_max { Some(q) } else { None })
            }
            Kind::LinearDrift { .. } => Ok(None),
            Kind::Truncation { threshold0, threshold_rate, .. } => {
                if *threshold_rate <= T::zero() || z > *threshold0 * (-*threshold_rate * t).exp() {
                    return Ok(None);
                }
                let q = (*threshold0 / z).ln() / *threshold_rate;
                Ok(if q > t && q <= q_max { Some(q) } else { None })
            }
            _ => {
                let hazard = |q: T| -> T {
                    match self.mz(t, q, z) {
                        Ok(m) if m > T::zero() => -m.ln(),
                        Ok(_) => T::infinity(),
                        Err(_) => T::nan(),
                    }
                };
                let top = hazard(q_max);
                if top.is_nan() {
                    return Err(Error::DegeneratePrimitive(format!("no jump of size {z} at t = {t}")));
                }
                if top < e {
                    return Ok(None);
                }
                let f = |q: T| {
                    let h = hazard(q);
                    if h.is_infinite() {
                        T::one()
                    } else {
                        h - e
                    }
                };
                bisect(f, t, q_max, T::lit(1e-13).max(T::root_tol())).map(Some)
            }
        }
    }

    pub fn eta_at(&self, q: T) -> Result<T> {
        self.psi_at(q)?.eta()
    }

    /// `d eta_t / dt = -zeta_t(eta_t) / psi'_t(eta_t)`.
    pub fn deta_dt(&self, t: T) -> Result<T> {
        let m = self.psi_at(t)?;
        let eta = m.eta()?;
        let d = m.eval_d1(eta);
        if d == T::zero() {
            return Err(Error::Singular(format!("psi'_t(eta_t) = 0 at t = {t}")));
        }
        Ok(-self.zeta(t, eta)? / d)
    }

    /// Lower end of the window and whether it belongs to the family.
    pub fn t_infinity(&self) -> (T, bool) {
        (self.window.lower, self.window.lower.is_finite() && self.window.lower_closed)
    }

    /// `q_bar` with `psi_{q_bar}(.) = psi_q(eta_q + .)`, or `None` when the
    /// family has no such member on its window.
    pub fn qbar(&self, q: T) -> Result<Option<T>> {
        let m = self.psi_at(q)?;
        let eta = m.eta()?;
        if eta == T::zero() {
            return Ok(Some(q));
        }
        let target = m.eval_d1(eta);
        let candidate = match &self.kind {
            Kind::Shift { .. } => q + eta,
            Kind::LinearDrift { .. } => -q,
            Kind::Reflected { .. } if q <= T::zero() => -q,
            _ => {
                let drift = |s: T| self.psi_at(s).map(|p| p.b()).unwrap_or(T::nan());
                let lo = q;
                let mut hi = if self.window.upper.is_finite() { self.window.upper } else { q.abs() + T::one() };
                while drift(hi) < target {
                    if hi >= self.window.upper {
                        return Ok(None);
                    }
                    hi = (hi + hi.abs() + T::one()).min(self.window.upper);
                }
                match bisect(|s| drift(s) - target, lo, hi, T::lit(1e-14).max(T::root_tol())) {
                    Ok(s) => s,
                    Err(_) => return Ok(None),
                }
            }
        };
        if !self.window.contains(candidate) {
            return Ok(None);
        }
        let mb = self.psi_at(candidate)?;
        for i in 1..=100 {
            let l = T::lit(0.1) * T::count(i);
            let lhs = m.eval(eta + l);
            let rhs = mb.eval(l);
            if (lhs - rhs).abs() > T::lit(1e-9).max(T::lit(100.0) * T::epsilon()) * lhs.abs().max(T::one()) {
                return Ok(None);
            }
        }
        Ok(Some(candidate))
    }

    /// `gamma_t` and the density of the ascension time `U` at `t`.
    pub fn ascension_rates(&self, t: T) -> Result<AscensionRates<T>> {
        let m = self.psi_at(t)?;
        let eta = m.eta()?;
        let d1 = m.eval_d1(eta);
        if eta == T::zero() || d1 <= T::zero() {
            return Err(Error::Singular(format!("psi_{t} is not supercritical")));
        }
        let z = self.zeta(t, eta)?;
        let gamma = -(self.zeta_d1(t, eta)? * d1 - m.eval_d2(eta) * z) / d1;
        if gamma == T::zero() {
            return Err(Error::Singular(format!("gamma vanishes at t = {t}")));
        }
        let tbar = self
            .qbar(t)?
            .ok_or_else(|| Error::Precondition(format!("no conjugate member for t = {t}")))?;
        let u_density = z * self.zeta_d1(tbar, T::zero())? / (d1 * gamma);
        Ok(AscensionRates { gamma, u_density })
    }

    /// Checks monotonicity, the survival-factor conditions, the grey condition
    /// and the kernel integrability on the given grids.
    pub fn check_admissibility(&self, times: &[T], lambdas: &[T], sizes: &[T]) -> Result<AdmissibilityReport> {
        let tol = T::lit(1e-9).max(T::lit(100.0) * T::epsilon());
        let mut times = times.to_vec();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let mechs: Vec<Mechanism<T>> = times.iter().map(|&q| self.psi_at(q)).collect::<Result<_>>()?;

        let mut mono = 0.0f64;
        for w in mechs.windows(2) {
            for &l in lambdas {
                let (a, b) = (w[0].eval(l), w[1].eval(l));
                mono = mono.max(((a - b) / a.abs().max(T::one())).f64());
            }
        }

        let mut h1 = 0.0f64;
        let mut h2 = 0.0f64;
        for (i, &t) in times.iter().enumerate() {
            for &z in sizes {
                let mut prev = T::one();
                for (j, &q) in times.iter().enumerate().skip(i) {
                    let m = match self.mz(t, q, z) {
                        Ok(m) => m,
                        Err(Error::DegeneratePrimitive(_)) => continue,
                        Err(e) => return Err(e),
                    };
                    h1 = h1.max((m - T::one()).f64()).max((m - prev).f64());
                    prev = m;
                    for &th in &times[i..=j] {
                        let split = self.mz(t, th, z)? * self.mz(th, q, z)?;
                        h2 = h2.max((m - split).abs().f64());
                    }
                }
            }
        }

        let mut grey = true;
        for m in &mechs {
            grey &= m.grey_check()?;
        }

        let mut kernel = 0.0f64;
        for (i, &t) in times.iter().enumerate() {
            for (j, &q) in times.iter().enumerate().skip(i) {
                let a = self.alpha(t, q)?;
                let jump_drift = mechs[j].b() - mechs[i].b() - a;
                if !a.is_finite() || !jump_drift.is_finite() {
                    kernel = f64::INFINITY;
                } else {
                    kernel = kernel.max((-a).f64()).max((-jump_drift).f64());
                }
            }
        }

        let tol = tol.f64();
        Ok(AdmissibilityReport {
            conditions: vec![
                ConditionCheck { name: "monotone", passed: mono <= tol, worst: mono },
                ConditionCheck { name: "survival_factor_bounded", passed: h1 <= tol, worst: h1 },
                ConditionCheck { name: "survival_factor_cocycle", passed: h2 <= tol, worst: h2 },
                ConditionCheck { name: "grey", passed: grey, worst: if grey { 0.0 } else { 1.0 } },
                ConditionCheck { name: "kernel_integrable", passed: kernel <= tol, worst: kernel },
            ],
        })
    }
}
