//! Quadrature and root finding, generic over the scalar.

mod quad;
mod roots;
mod special;

pub use quad::{integrate, Integral};
pub use roots::{bisect, newton_bracketed};
pub use special::{exp_rem2, ln_gamma, pow_rem2};
