//! Riemann zeta and the completed xi function.
//!
//! The primary route is the Dirichlet eta series accelerated with Borwein's
//! Chebyshev weights, `ζ(s) = η(s) / (1 - 2^{1-s})`, for `Re s >= 1/2`; the
//! functional equation covers the rest. Euler-Maclaurin summation is an
//! independent second route, also used where `1 - 2^{1-s}` vanishes away
//! from `s = 1`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use super::gamma::log_gamma;
use crate::error::{Error, Result};

fn is_one(s: Complex64) -> bool {
    s.re == 1.0 && s.im == 0.0
}

/// Borwein weights `w_k = (d_n - d_k) / d_n` for an `n`-term eta sum,
/// computed from tail sums so that no large numbers appear.
fn borwein_weights(n: usize) -> Vec<f64> {
    // log of term_i = (n+i-1)! 4^i / ((n-i)! (2i)!)
    let mut logs = Vec::with_capacity(n + 1);
    let mut l = -(n as f64).ln();
    logs.push(l);
    for i in 0..n {
        let ratio = 4.0 * (n + i) as f64 * (n - i) as f64 / ((2 * i + 1) as f64 * (2 * i + 2) as f64);
        l += ratio.ln();
        logs.push(l);
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let t: Vec<f64> = logs.iter().map(|v| (v - top).exp()).collect();
    let mut tails = vec![0.0; n + 1];
    let mut acc = 0.0;
    for k in (0..=n).rev() {
        tails[k] = acc;
        acc += t[k];
    }
    tails.iter().take(n).map(|v| v / acc).collect()
}

fn borwein_terms(s: Complex64) -> usize {
    let t = s.im.abs();
    let digits = 0.5 * PI * t + 40.0 + (2.0 + t).ln();
    (digits / (3.0 + 8f64.sqrt()).ln()).ceil() as usize + 4
}

/// Dirichlet eta function by Borwein's method; intended for `Re s >= 1/2`.
pub fn eta(s: Complex64) -> Complex64 {
    let n = borwein_terms(s);
    let w = borwein_weights(n);
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, wk) in w.iter().enumerate() {
        let term = (-s * ((k + 1) as f64).ln()).exp() * *wk;
        if k % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

fn expm1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        let mut term = z;
        let mut acc = z;
        for k in 2..8 {
            term = term * z / k as f64;
            acc += term;
        }
        acc
    } else {
        z.exp() - 1.0
    }
}

/// `(s - 1) ζ(s)` for `Re s >= 1/2`; entire, equal to 1 at `s = 1`.
pub fn zeta_pole_free(s: Complex64) -> Complex64 {
    let v = (s - 1.0) * LN_2;
    let den = -expm1(-v); // 1 - 2^{1-s}
    if den.norm() < 0.05 && v.norm() > 1.0 {
        return (s - 1.0) * zeta_euler_maclaurin(s);
    }
    let factor = if v.norm() == 0.0 { Complex64::new(1.0 / LN_2, 0.0) } else { v / den / LN_2 };
    eta(s) * factor
}

pub fn zeta(s: Complex64) -> Result<Complex64> {
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::Domain(format!("zeta argument not finite: {s}")));
    }
    if is_one(s) {
        return Err(Error::Pole("zeta at s = 1".into()));
    }
    if s.re >= 0.5 {
        return Ok(zeta_pole_free(s) / (s - 1.0));
    }
    // ζ(s) = -1/2 (s-1)ζ(s)|_{1-s} π^{s-1/2} Γ((1-s)/2) / Γ(s/2 + 1)
    let w = 1.0 - s;
    let lg = (s - 0.5) * PI.ln() + log_gamma(w * 0.5)? - log_gamma(s * 0.5 + 1.0)?;
    Ok(-0.5 * zeta_pole_free(w) * lg.exp())
}

/// `ξ(s) = s(s-1)/2 π^{-s/2} Γ(s/2) ζ(s)`, entire.
pub fn completed_xi(s: Complex64) -> Result<Complex64> {
    if s.re < 0.5 {
        return completed_xi(1.0 - s);
    }
    let lg = -(s * 0.5) * PI.ln() + log_gamma(s * 0.5)?;
    Ok(0.5 * s * zeta_pole_free(s) * lg.exp())
}

/// A logarithm of `ξ(s)`, for ratios of values that would underflow.
pub fn ln_completed_xi(s: Complex64) -> Result<Complex64> {
    if s.re < 0.5 {
        return ln_completed_xi(1.0 - s);
    }
    Ok((0.5 * s).ln() + zeta_pole_free(s).ln() - (s * 0.5) * PI.ln() + log_gamma(s * 0.5)?)
}

/// `ζ(2k)` for `k >= 1`.
fn zeta_even(k: usize) -> f64 {
    if k == 1 {
        return PI * PI / 6.0;
    }
    let p = 2 * k as i32;
    let n = 60.0f64;
    let mut acc = 0.0;
    for m in (1..60).rev() {
        acc += (m as f64).powi(-p);
    }
    let pf = p as f64;
    acc + n.powf(1.0 - pf) / (pf - 1.0) + 0.5 * n.powf(-pf) + pf / 12.0 * n.powf(-pf - 1.0)
}

/// Euler-Maclaurin summation for `ζ(s)`, `s != 1`.
pub fn zeta_euler_maclaurin(s: Complex64) -> Complex64 {
    const K: usize = 20;
    let big_n = ((s.norm() + 2.0 * K as f64) / (2.0 * PI * 0.25)).ceil().max(10.0) as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for n in (1..big_n).rev() {
        acc += (-s * (n as f64).ln()).exp();
    }
    let nf = big_n as f64;
    let ln_n = nf.ln();
    let n_pow = (-s * ln_n).exp(); // N^{-s}
    acc += n_pow * nf / (s - 1.0) + n_pow * 0.5;
    let mut poch = s;
    let mut npow = n_pow / nf; // N^{-s-1}
    let two_pi_sq = 4.0 * PI * PI;
    let mut scale = 2.0 / two_pi_sq; // 2/(2π)^{2k}
    for k in 1..=K {
        // B_{2k}/(2k)! = (-1)^{k+1} 2 ζ(2k) / (2π)^{2k}
        let b = if k % 2 == 1 { 1.0 } else { -1.0 } * scale * zeta_even(k);
        acc += poch * npow * b;
        let kk = (2 * k) as f64;
        poch = poch * (s + (kk - 1.0)) * (s + kk);
        npow = npow / (nf * nf);
        scale /= two_pi_sq;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn classical_values() {
        assert!((zeta(c(2.0, 0.0)).unwrap() - c(PI * PI / 6.0, 0.0)).norm() < 1e-14);
        assert!((zeta(c(0.0, 0.0)).unwrap() - c(-0.5, 0.0)).norm() < 1e-14);
        assert!((zeta(c(-1.0, 0.0)).unwrap() - c(-1.0 / 12.0, 0.0)).norm() < 1e-14);
        assert!(matches!(zeta(c(1.0, 0.0)), Err(Error::Pole(_))));
    }

    #[test]
    fn first_zero() {
        let z = zeta(c(0.5, 14.134_725_141_734_693)).unwrap();
        assert!(z.norm() < 1e-12, "{z}");
    }

    #[test]
    fn xi_at_removable_points() {
        assert!((completed_xi(c(0.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        assert!((completed_xi(c(1.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn near_one() {
        let s = 1.0 + 1e-9;
        let eps = s - 1.0;
        let z = zeta(c(s, 0.0)).unwrap();
        // ζ(1+ε) = 1/ε + γ + O(ε)
        assert!((z.re - (1.0 / eps + 0.577_215_664_901_532_9)).abs() < 1e-6);
    }

    #[test]
    fn borwein_against_euler_maclaurin() {
        for &(x, y) in &[(0.5, 3.0), (0.7, 25.0), (1.0, 20.0), (2.0, 1.0), (1.0, 300.0), (0.5, 999.0)] {
            let s = c(x, y);
            let a = zeta_pole_free(s) / (s - 1.0);
            let b = zeta_euler_maclaurin(s);
            assert!((a - b).norm() < 1e-12 * b.norm().max(1.0), "{s}: {a} {b}");
        }
    }

    #[test]
    fn removable_denominator_zero() {
        let s = c(1.0, 2.0 * PI / LN_2);
        let a = zeta(s).unwrap();
        let b = zeta(c(1.0, 2.0 * PI / LN_2 + 1e-4)).unwrap();
        assert!((a - b).norm() < 1e-3);
    }
}
