use num_complex::Complex64;

use super::zeta::ln_completed_xi;
use crate::error::{Error, Result};
use crate::group::{prime_divisors, GroupProfile};

/// `D_N(s) = N^{-s} ∏_{p | N} (p^s + p) / (p^s + 1)`.
pub fn dirichlet_factor(level: u64, s: Complex64) -> Complex64 {
    let mut acc = (-s * (level as f64).ln()).exp();
    for p in prime_divisors(level) {
        let pf = p as f64;
        let ps = (s * pf.ln()).exp();
        acc *= (ps + pf) / (ps + 1.0);
    }
    acc
}

/// Determinant of the scattering matrix,
/// `φ_N(s) = s/(s-1) · ξ(2s-1)/ξ(2s) · D_N(s)`.
pub fn scattering_det(profile: &GroupProfile, s: Complex64) -> Result<Complex64> {
    if s.re == 1.0 && s.im == 0.0 {
        return Err(Error::Pole("scattering determinant at s = 1".into()));
    }
    if s.re == 0.5 && s.im == 0.0 {
        return Ok(Complex64::new(-1.0, 0.0));
    }
    let ratio = (ln_completed_xi(2.0 * s - 1.0)? - ln_completed_xi(2.0 * s)?).exp();
    Ok(s / (s - 1.0) * ratio * dirichlet_factor(profile.level, s))
}
