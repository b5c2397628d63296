//! The average Weyl law `M_N(T)` for Γ₀(N)⁺, its error envelope, and the
//! fluctuation `S(T) = N(T) - M_N(T)` of a computed eigenvalue list together
//! with its running mean.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupProfile;
use crate::quad::{gauss_legendre, integrate};
use crate::spectrum::EigenvalueList;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylTerms {
    pub quadratic: f64,
    pub tlogt: f64,
    pub linear: f64,
    pub elliptic_const: f64,
    pub volume_const: f64,
    pub spectral_const: f64,
    pub sawtooth: f64,
    pub arctan_term: f64,
    pub g_bound: f64,
    pub total: f64,
}

impl WeylTerms {
    pub fn constant(&self) -> f64 {
        self.elliptic_const + self.volume_const + self.spectral_const
    }

    pub fn periodic(&self) -> f64 {
        self.sawtooth + self.arctan_term
    }
}

/// Cell index `k = ⌊T log p / π⌋` and `α = T log p - kπ ∈ [0, π)`.
fn cell(p: u64, t: f64) -> (i64, f64) {
    let x = t * (p as f64).ln();
    let k = (x / PI).floor();
    let a = x - k * PI;
    // guard against rounding just below a multiple of π
    if a >= PI {
        (k as i64 + 1, 0.0)
    } else {
        (k as i64, a.max(0.0))
    }
}

/// `α_N(j, T)` for the j-th (1-based) prime divisor of N.
pub fn alpha(profile: &GroupProfile, j: usize, t: f64) -> Result<f64> {
    let primes = profile.primes();
    let p = *primes
        .get(j.wrapping_sub(1))
        .ok_or_else(|| Error::Domain(format!("N = {} has no prime number {j}", profile.level)))?;
    if !(t > 0.0) {
        return Err(Error::Domain("T must be positive".into()));
    }
    Ok(cell(p, t).1)
}

fn q_of(p: u64) -> f64 {
    let s = (p as f64).sqrt();
    (s - 1.0) / (s + 1.0)
}

/// `arctan(q^{±1} tan(α/2))`, the sign set by the parity of the cell.
fn arctan_piece(q: f64, k: i64, a: f64) -> f64 {
    let qq = if k.rem_euclid(2) == 0 { q } else { 1.0 / q };
    (qq * (0.5 * a).tan()).atan()
}

pub fn elliptic_const(orders: &[u32]) -> f64 {
    orders
        .iter()
        .map(|&m| {
            let mf = m as f64;
            let s: f64 = (1..m).map(|j| 1.0 / (PI * j as f64 / mf).sin().powi(2)).sum();
            s / (4.0 * mf)
        })
        .sum()
}

fn g_constant(profile: &GroupProfile) -> f64 {
    let vol = profile.volume;
    let ell: f64 = profile
        .signature
        .elliptic_orders
        .iter()
        .map(|&m| {
            let mf = m as f64;
            let s: f64 = (1..m).map(|j| 1.0 / (PI * j as f64 / mf).sin()).sum();
            mf / (2.0 * E * PI) * s
        })
        .sum();
    (vol * (2.0 * PI + 1.0) / (2.0 * PI * PI * (2.0 * PI).exp()) + ell + 5051.0 / 900.0) / (2.0 * PI)
}

/// Explicit bound for `|G_N(T)|`, valid for `T > 1`.
pub fn g_envelope(profile: &GroupProfile, t: f64) -> Result<f64> {
    if !(t > 1.0) {
        return Err(Error::Domain(format!("the error bound needs T > 1, got {t}")));
    }
    Ok(g_constant(profile) / t)
}

pub fn main_term(profile: &GroupProfile, t: f64) -> Result<WeylTerms> {
    if !(t > 1.0) {
        return Err(Error::Domain(format!("the Weyl law is stated for T > 1, got {t}")));
    }
    let vol = profile.volume;
    let n = profile.level as f64;
    let quadratic = vol / (4.0 * PI) * t * t;
    let tlogt = -2.0 * t * t.ln() / PI;
    let linear = t * (2.0 + (PI / (2.0 * n)).ln()) / PI;
    let elliptic_const = elliptic_const(&profile.signature.elliptic_orders);
    let volume_const = -vol / (48.0 * PI);
    let spectral_const = -0.75 - profile.n_cusp_terms as f64 / 2.0 - profile.m_quarter as f64;
    let mut sawtooth = 0.0;
    let mut arctan_term = 0.0;
    for p in profile.primes() {
        let (k, a) = cell(p, t);
        sawtooth += a / (2.0 * PI);
        arctan_term -= arctan_piece(q_of(p), k, a) / PI;
    }
    let g_bound = g_envelope(profile, t)?;
    let total = quadratic
        + tlogt
        + linear
        + elliptic_const
        + volume_const
        + spectral_const
        + sawtooth
        + arctan_term;
    Ok(WeylTerms {
        quadratic,
        tlogt,
        linear,
        elliptic_const,
        volume_const,
        spectral_const,
        sawtooth,
        arctan_term,
        g_bound,
        total,
    })
}

/// `#{n : 0 < r_n <= T}`.
pub fn counting(list: &EigenvalueList, t: f64) -> usize {
    list.records.partition_point(|e| e.r <= t)
}

fn check_range(list: &EigenvalueList, t: f64) -> Result<()> {
    if t > list.meta.r_hi * (1.0 + 1e-12) {
        return Err(Error::Range(format!(
            "T = {t} lies beyond the scanned range (r <= {})",
            list.meta.r_hi
        )));
    }
    Ok(())
}

pub fn s_num(list: &EigenvalueList, profile: &GroupProfile, t: f64) -> Result<f64> {
    check_range(list, t)?;
    Ok(counting(list, t) as f64 - main_term(profile, t)?.total)
}

const GL_ORDER: usize = 20;
const GL_PANELS: usize = 16;

/// Integrals over `[0, T]` of the periodic parts of `M_N`, cell by cell.
pub struct PeriodicIntegrator {
    rule: (Vec<f64>, Vec<f64>),
    /// Per prime: (p, q, full-cell integral of the arctan piece for even and
    /// odd cells), integrals taken in the variable α.
    cells: Vec<(u64, f64, [f64; 2])>,
}

impl PeriodicIntegrator {
    pub fn new(profile: &GroupProfile) -> Self {
        let rule = gauss_legendre(GL_ORDER);
        let cells = profile
            .primes()
            .into_iter()
            .map(|p| {
                let q = q_of(p);
                let full = [0i64, 1].map(|k| {
                    integrate(|a| arctan_piece(q, k, a), 0.0, PI, GL_PANELS, &rule)
                });
                (p, q, full)
            })
            .collect();
        PeriodicIntegrator { rule, cells }
    }

    /// `∫_0^T Σ_j α_j(t)/(2π) dt` by quadrature.
    pub fn sawtooth_integral(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (p, _, _) in &self.cells {
            let l = (*p as f64).ln();
            let (k, a) = cell(*p, t);
            let full = integrate(|x| x, 0.0, PI, 1, &self.rule);
            let part = integrate(|x| x, 0.0, a, 1, &self.rule);
            acc += (k as f64 * full + part) / l / (2.0 * PI);
        }
        acc
    }

    /// `∫_0^T -Σ_j arctan(...)/π dt` by quadrature.
    pub fn arctan_integral(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (p, q, full) in &self.cells {
            let l = (*p as f64).ln();
            let (k, a) = cell(*p, t);
            let evens = (k + 1) / 2;
            let odds = k / 2;
            let whole = evens as f64 * full[0] + odds as f64 * full[1];
            let part = integrate(|x| arctan_piece(*q, k, x), 0.0, a, GL_PANELS, &self.rule);
            acc -= (whole + part) / l / PI;
        }
        acc
    }
}

/// `∫_0^T α(t) dt` for one prime from the antiderivative `α²/2` per cell.
pub fn sawtooth_integral_exact(p: u64, t: f64) -> f64 {
    let l = (p as f64).ln();
    let (k, a) = cell(p, t);
    (k as f64 * PI * PI / 2.0 + a * a / 2.0) / l
}

/// Time average of the smooth part, `(1/T) ∫_0^T M_N(t) dt`, with `G_N = 0`.
pub fn averaged_main_term(profile: &GroupProfile, integ: &PeriodicIntegrator, t: f64) -> f64 {
    let vol = profile.volume;
    let n = profile.level as f64;
    let quadratic = vol * t * t / (12.0 * PI);
    let tlogt = -(2.0 / PI) * (t * t.ln() / 2.0 - t / 4.0);
    let linear = (2.0 + (PI / (2.0 * n)).ln()) / PI * t / 2.0;
    let constant = elliptic_const(&profile.signature.elliptic_orders) - vol / (48.0 * PI)
        - 0.75
        - profile.n_cusp_terms as f64 / 2.0
        - profile.m_quarter as f64;
    let periodic = (integ.sawtooth_integral(t) + integ.arctan_integral(t)) / t;
    quadratic + tlogt + linear + constant + periodic
}

/// `(1/T) Σ_{r_n <= T} (T - r_n)`, the running mean of the counting function.
pub fn averaged_counting(list: &EigenvalueList, t: f64) -> f64 {
    list.records.iter().take_while(|e| e.r <= t).map(|e| (t - e.r) / t).sum()
}

/// `⟨S(T)⟩ = (1/T) ∫_0^T S(t) dt` with `G_N` treated as zero.
pub fn averaged_s(list: &EigenvalueList, profile: &GroupProfile, t: f64) -> Result<f64> {
    check_range(list, t)?;
    if !(t > 1.0) {
        return Err(Error::Domain(format!("T must exceed 1, got {t}")));
    }
    let integ = PeriodicIntegrator::new(profile);
    Ok(averaged_counting(list, t) - averaged_main_term(profile, &integ, t))
}

/// Width contributed by the `G_N` envelope to the running mean at `T`:
/// `(1/T) ∫_1^T g(t) dt`.
pub fn averaged_envelope(profile: &GroupProfile, t: f64) -> f64 {
    if t <= 1.0 {
        return 0.0;
    }
    g_constant(profile) * t.ln() / t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::builtin_profile;

    #[test]
    fn alpha_examples() {
        let p5 = builtin_profile(5).unwrap();
        let a = alpha(&p5, 1, PI / 5f64.ln()).unwrap();
        assert!(a < 1e-12 || (PI - a) < 1e-12);
        let b = alpha(&p5, 1, PI / (2.0 * 5f64.ln())).unwrap();
        assert!((b - PI / 2.0).abs() < 1e-14);
        let p6 = builtin_profile(6).unwrap();
        let t = 13.37;
        let want = t * 3f64.ln() - (t * 3f64.ln() / PI).floor() * PI;
        assert!((alpha(&p6, 2, t).unwrap() - want).abs() < 1e-13);
        assert!(alpha(&p6, 3, t).is_err());
    }

    #[test]
    fn constants() {
        let c1 = main_term(&builtin_profile(1).unwrap(), 10.0).unwrap().constant();
        assert!((c1 + 131.0 / 144.0).abs() < 1e-12);
        let c5 = main_term(&builtin_profile(5).unwrap(), 10.0).unwrap().constant();
        assert!((c5 + 43.0 / 48.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_t() {
        let p = builtin_profile(5).unwrap();
        assert!(main_term(&p, 1.0).is_err());
        assert!(g_envelope(&p, 0.5).is_err());
    }

    #[test]
    fn arctan_continuous_across_cells() {
        let p = builtin_profile(6).unwrap();
        for prime in [2f64, 3.0] {
            for k in 1..6 {
                let t = k as f64 * PI / prime.ln();
                let lo = main_term(&p, t - 1e-9).unwrap().total;
                let hi = main_term(&p, t + 1e-9).unwrap().total;
                assert!((hi - lo).abs() < 1e-7, "p={prime} k={k}: {lo} {hi}");
            }
        }
    }
}
