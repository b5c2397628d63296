//! Multiplicativity of Fourier coefficients under the Hecke operators `T_n`,
//! `(n, N) = 1`: `a_m a_n = a_1 Σ_{d | (m,n)} a_{mn/d²}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeckeReport {
    pub defect: f64,
    pub pairs_checked: Vec<(usize, usize)>,
    pub t_n: Vec<f64>,
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Pairs `2 <= m <= n` coprime to `level` whose identities only involve
/// coefficients up to `max_index`.
pub fn admissible_pairs(level: u64, max_index: usize) -> Vec<(usize, usize)> {
    let n_level = level as usize;
    let mut out = Vec::new();
    for m in 2..=max_index {
        if gcd(m, n_level) != 1 {
            continue;
        }
        for n in m..=max_index / m {
            if gcd(n, n_level) == 1 {
                out.push((m, n));
            }
        }
    }
    out
}

/// `coeffs[k]` holds `a_{k+1}`.
pub fn hecke_eigenvalues(coeffs: &[f64]) -> Result<Vec<f64>> {
    let a1 = *coeffs.first().ok_or(Error::Empty)?;
    if a1 == 0.0 {
        return Err(Error::ZeroFirstCoefficient);
    }
    Ok(coeffs.iter().map(|a| a / a1).collect())
}

/// Largest violation of the Hecke relations over all admissible pairs, taken
/// on `t_n = a_n / a_1` so that it does not depend on the normalisation.
pub fn multiplicativity_defect(coeffs: &[f64], level: u64, max_index: usize) -> Result<HeckeReport> {
    if coeffs.len() < max_index {
        return Err(Error::InsufficientCoefficients { need: max_index, have: coeffs.len() });
    }
    let pairs = admissible_pairs(level, max_index);
    if pairs.is_empty() {
        return Err(Error::InsufficientCoefficients { need: 4, have: max_index });
    }
    let t_n = hecke_eigenvalues(&coeffs[..max_index])?;
    let t = |k: usize| t_n[k - 1];
    let mut defect = 0.0f64;
    for &(m, n) in &pairs {
        let g = gcd(m, n);
        let mut rhs = 0.0;
        for d in (1..=g).filter(|d| g % d == 0) {
            rhs += t(m * n / (d * d));
        }
        defect = defect.max((t(m) * t(n) - rhs).abs());
    }
    Ok(HeckeReport { defect, pairs_checked: pairs, t_n })
}
