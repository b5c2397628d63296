//! Unfolding and nearest-neighbour spacing statistics.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupProfile;
use crate::spectrum::EigenvalueList;
use crate::weyl::main_term;

/// Unfolded levels are rounded to multiples of this in the independence demo.
pub const LATTICE: f64 = 1.0 / (1u64 << 24) as f64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnfoldedSpectrum {
    pub u: Vec<f64>,
    pub group: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    Poisson,
    Goe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram1D {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub density: Vec<f64>,
}

impl Histogram1D {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }
}

/// Joint histogram of consecutive spacings; `density[i][j]` is the bin
/// `[edges[i], edges[i+1]) × [edges[j], edges[j+1])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram2D {
    pub edges: Vec<f64>,
    pub counts: Vec<Vec<usize>>,
    pub density: Vec<Vec<f64>>,
}

fn check_increasing(u: &[f64]) -> Result<()> {
    for (i, w) in u.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::Monotonicity(format!("unfolded levels not increasing at index {}", i + 2)));
        }
    }
    Ok(())
}

pub fn unfold(list: &EigenvalueList, profile: &GroupProfile) -> Result<UnfoldedSpectrum> {
    let u = list.records.iter().map(|e| main_term(profile, e.r).map(|m| m.total)).collect::<Result<Vec<_>>>()?;
    check_increasing(&u)?;
    Ok(UnfoldedSpectrum { u, group: list.group })
}

pub fn unfold_with(values: &[f64], m: &dyn Fn(f64) -> f64, group: u64) -> Result<UnfoldedSpectrum> {
    let u: Vec<f64> = values.iter().map(|&v| m(v)).collect();
    check_increasing(&u)?;
    Ok(UnfoldedSpectrum { u, group })
}

pub fn spacings(u: &UnfoldedSpectrum) -> Result<Vec<f64>> {
    if u.u.len() < 2 {
        return Err(Error::Empty);
    }
    Ok(u.u.windows(2).map(|w| w[1] - w[0]).collect())
}

pub fn reference_pdf(kind: Reference, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("spacing must be non-negative, got {s}")));
    }
    Ok(match kind {
        Reference::Poisson => (-s).exp(),
        Reference::Goe => 0.5 * PI * s * (-0.25 * PI * s * s).exp(),
    })
}

pub fn reference_cdf(kind: Reference, s: f64) -> f64 {
    let s = s.max(0.0);
    match kind {
        Reference::Poisson => -(-s).exp_m1(),
        Reference::Goe => -(-0.25 * PI * s * s).exp_m1(),
    }
}

/// Kolmogorov-Smirnov distance between the sample and a reference law.
pub fn ks_distance(sample: &[f64], kind: Reference) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Empty);
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &v) in s.iter().enumerate() {
        let f = reference_cdf(kind, v);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Freedman-Diaconis bin count over `[0, max]`, at most `len/10`.
pub fn freedman_diaconis_bins(sample: &[f64]) -> usize {
    if sample.len() < 4 {
        return 1;
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let q = |p: f64| s[((s.len() - 1) as f64 * p).round() as usize];
    let width = 2.0 * (q(0.75) - q(0.25)) / (s.len() as f64).cbrt();
    let max = s[s.len() - 1];
    let bins = if width > 0.0 { (max / width).ceil() as usize } else { 1 };
    bins.clamp(1, (s.len() / 10).max(1))
}

fn bin_of(v: f64, width: f64, bins: usize) -> usize {
    ((v / width) as usize).min(bins - 1)
}

fn range_of(sample: &[f64], bins: usize, need: usize) -> Result<f64> {
    if bins == 0 {
        return Err(Error::Domain("histogram needs at least one bin".into()));
    }
    if sample.len() < need {
        return Err(Error::InsufficientData(format!("{} samples for {bins} bins", sample.len())));
    }
    if sample.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain("spacings must be finite and non-negative".into()));
    }
    let max = sample.iter().cloned().fold(0.0, f64::max);
    Ok(if max > 0.0 { max } else { 1.0 })
}

pub fn spacing_histogram(sample: &[f64], bins: usize) -> Result<Histogram1D> {
    let max = range_of(sample, bins, 10 * bins)?;
    let width = max / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in sample {
        counts[bin_of(v, width, bins)] += 1;
    }
    let n = sample.len() as f64;
    let density = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    let edges = (0..=bins).map(|i| i as f64 * width).collect();
    Ok(Histogram1D { edges, counts, density })
}

pub fn joint_histogram(sample: &[f64], bins: usize) -> Result<Histogram2D> {
    let max = range_of(sample, bins, 10 * bins + 1)?;
    let width = max / bins as f64;
    let mut counts = vec![vec![0usize; bins]; bins];
    for w in sample.windows(2) {
        counts[bin_of(w[0], width, bins)][bin_of(w[1], width, bins)] += 1;
    }
    let pairs = (sample.len() - 1) as f64;
    let density =
        counts.iter().map(|row| row.iter().map(|&c| c as f64 / (pairs * width * width)).collect()).collect();
    let edges = (0..=bins).map(|i| i as f64 * width).collect();
    Ok(Histogram2D { edges, counts, density })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub lambda: Vec<f64>,
    pub u: Vec<f64>,
    pub spacings: Vec<f64>,
    /// Spacings after rounding the unfolded levels to the `LATTICE`.
    pub lattice_spacings: Vec<f64>,
    pub max_u_error: f64,
    pub max_spacing_error: f64,
}

/// Solves `m(t) = target` for `t >= 0` by bisection.
pub fn invert_monotone(m: &dyn Fn(f64) -> f64, target: f64) -> Result<f64> {
    let mut lo = 0.0;
    if m(lo) > target {
        return Err(Error::Domain(format!("{target} lies below m(0)")));
    }
    let mut hi = 1.0;
    while m(hi) < target {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Domain(format!("{target} is not attained")));
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if m(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if (m(lo) - target).abs() <= (m(hi) - target).abs() { lo } else { hi })
}

/// Builds `λ_n = m⁻¹(x_n - 1/2)` and unfolds them again with `m`: the
/// resulting spacings are those of `x`, whatever `m` is.
pub fn independence_demo(x: &[f64], m: &dyn Fn(f64) -> f64) -> Result<IndependenceReport> {
    check_increasing(x)?;
    let lambda = x.iter().map(|&v| invert_monotone(m, v - 0.5)).collect::<Result<Vec<_>>>()?;
    let un = unfold_with(&lambda, m, 0)?;
    let s = spacings(&un)?;
    let max_u_error = un.u.iter().zip(x).map(|(u, v)| (u - (v - 0.5)).abs()).fold(0.0, f64::max);
    let max_spacing_error = s.iter().zip(x.windows(2)).map(|(s, w)| (s - (w[1] - w[0])).abs()).fold(0.0, f64::max);
    if max_u_error > 1e-9 || max_spacing_error > 1e-9 {
        return Err(Error::Range(format!(
            "unfolding does not invert the construction (errors {max_u_error:.2e}, {max_spacing_error:.2e})"
        )));
    }
    let q: Vec<f64> = un.u.iter().map(|u| (u / LATTICE).round() * LATTICE).collect();
    let lattice_spacings = q.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(IndependenceReport { lambda, u: un.u, spacings: s, lattice_spacings, max_u_error, max_spacing_error })
}

/// Increasing levels starting near 1 with exponential gaps, rounded to
/// multiples of 2^-10 so that every `x - 1/2` lies on the `LATTICE`.
pub fn synthetic_levels(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1.0 / 1024.0;
    let mut x = 1.0;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(x);
        let gap = -(1.0 - rng.gen::<f64>()).ln();
        x += ((gap / step).round() * step).max(step);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{gauss_legendre, integrate};

    #[test]
    fn goe_is_normalised_with_unit_mean() {
        let rule = gauss_legendre(30);
        let pdf = |s: f64| reference_pdf(Reference::Goe, s).unwrap();
        let mass = integrate(pdf, 0.0, 12.0, 40, &rule);
        let mean = integrate(|s| s * pdf(s), 0.0, 12.0, 40, &rule);
        assert!((mass - 1.0).abs() < 1e-10);
        assert!((mean - 1.0).abs() < 1e-10);
        assert_eq!(reference_pdf(Reference::Poisson, 0.0).unwrap(), 1.0);
        assert!(reference_pdf(Reference::Goe, -0.1).is_err());
    }

    #[test]
    fn ks_of_quantile_sample() {
        let n = 500;
        let s: Vec<f64> = (0..n).map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln()).collect();
        let d = ks_distance(&s, Reference::Poisson).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-12, "{d}");
        assert!(ks_distance(&[], Reference::Goe).is_err());
    }

    #[test]
    fn histogram_integrates_to_one() {
        let s: Vec<f64> = (0..400).map(|i| ((i * 37) % 101) as f64 / 25.0).collect();
        let h = spacing_histogram(&s, 20).unwrap();
        let mass: f64 = h.density.iter().sum::<f64>() * h.width();
        assert!((mass - 1.0).abs() < 1e-12);
        let j = joint_histogram(&s, 6).unwrap();
        let w = j.edges[1] - j.edges[0];
        let mass: f64 = j.density.iter().flatten().sum::<f64>() * w * w;
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(spacing_histogram(&s[..50], 20).is_err());
    }

    #[test]
    fn equidistant_demo() {
        let x: Vec<f64> = (2..=50).map(|i| i as f64).collect();
        assert!(independence_demo(&[1.0, 2.0], &|t| t * t + 1.0).is_err());
        let rep = independence_demo(&x, &|t| t * t + 1.0).unwrap();
        assert!(rep.spacings.iter().all(|s| (s - 1.0).abs() < 1e-9));
        assert!(rep.lattice_spacings.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn short_lists() {
        let one = UnfoldedSpectrum { u: vec![3.0], group: 5 };
        assert!(matches!(spacings(&one), Err(Error::Empty)));
        assert!(unfold_with(&[2.0, 1.0], &|t| t, 5).is_err());
    }
}
