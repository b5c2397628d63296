//! Consecutiveness test for eigenvalue lists: the running mean of
//! `S(T) = N(T) - M_N(T)` stays near zero for a complete list and drifts by
//! about ±1 per missing or surplus eigenvalue.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupProfile;
use crate::spectrum::EigenvalueList;
use crate::weyl::{averaged_counting, averaged_envelope, averaged_main_term, PeriodicIntegrator};

pub use crate::weyl::averaged_s;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuringOptions {
    /// Heuristic half-width of the acceptance band before the error envelope is added.
    pub base_band: f64,
    pub points: usize,
    /// Consecutive grid points outside the band needed to trip the verdict.
    pub debounce: usize,
}

impl Default for TuringOptions {
    fn default() -> Self {
        TuringOptions { base_band: 0.15, points: 400, debounce: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    MissingSuspected { t_from: f64, t_to: f64 },
    SurplusSuspected { t_from: f64, t_to: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuringReport {
    pub t_grid: Vec<f64>,
    pub avg_s: Vec<f64>,
    pub band: Vec<f64>,
    pub verdict: Verdict,
    pub drift_at_end: f64,
}

/// Evaluates `⟨S⟩` on `points` equally spaced heights in `[T_max/4, T_max]`,
/// where `T_max` is the end of the scanned range.
pub fn consecutiveness(list: &EigenvalueList, profile: &GroupProfile, opts: &TuringOptions) -> Result<TuringReport> {
    let t_max = list.meta.r_hi;
    if !(t_max > 4.0) {
        return Err(Error::Range(format!("the scanned range must extend beyond r = 4, got {t_max}")));
    }
    if list.records.last().is_some_and(|e| e.r > t_max) {
        return Err(Error::Range("list has eigenvalues beyond its recorded range".into()));
    }
    if opts.points < 2 {
        return Err(Error::Domain("the Turing grid needs at least 2 points".into()));
    }
    let t_min = t_max / 4.0;
    let integ = PeriodicIntegrator::new(profile);
    let step = (t_max - t_min) / (opts.points - 1) as f64;
    let t_grid: Vec<f64> =
        (0..opts.points).map(|i| if i + 1 == opts.points { t_max } else { t_min + i as f64 * step }).collect();
    let avg_s: Vec<f64> =
        t_grid.iter().map(|&t| averaged_counting(list, t) - averaged_main_term(profile, &integ, t)).collect();
    let band: Vec<f64> = t_grid.iter().map(|&t| opts.base_band + averaged_envelope(profile, t)).collect();
    let verdict = decide(&t_grid, &avg_s, &band, opts.debounce);
    let drift_at_end = *avg_s.last().expect("grid is non-empty");
    Ok(TuringReport { t_grid, avg_s, band, verdict, drift_at_end })
}

/// First run of at least `debounce` points outside the band; its sign
/// decides between a missing and a surplus eigenvalue.
fn decide(t: &[f64], avg: &[f64], band: &[f64], debounce: usize) -> Verdict {
    let mut i = 0;
    while i < avg.len() {
        if avg[i].abs() <= band[i] {
            i += 1;
            continue;
        }
        let sign = avg[i].signum();
        let mut j = i;
        while j < avg.len() && avg[j].abs() > band[j] && avg[j].signum() == sign {
            j += 1;
        }
        if j - i >= debounce.max(1) {
            let (t_from, t_to) = (t[i], t[j - 1]);
            return if sign < 0.0 {
                Verdict::MissingSuspected { t_from, t_to }
            } else {
                Verdict::SurplusSuspected { t_from, t_to }
            };
        }
        i = j;
    }
    Verdict::Consistent
}

pub fn inject(list: &EigenvalueList, lambda_fake: f64) -> Result<EigenvalueList> {
    let r = (lambda_fake - 0.25).sqrt();
    if !(r <= list.meta.r_hi) {
        return Err(Error::Range(format!("fake eigenvalue {lambda_fake} lies outside the scanned range")));
    }
    list.inject(lambda_fake)
}

pub fn remove(list: &EigenvalueList, index: usize) -> Result<EigenvalueList> {
    list.remove(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn debounce_ignores_spikes() {
        let t: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let band = vec![0.2; 30];
        let mut avg = vec![0.0; 30];
        for v in avg.iter_mut().skip(5).take(9) {
            *v = -1.0;
        }
        assert_eq!(decide(&t, &avg, &band, 10), Verdict::Consistent);
        for v in avg.iter_mut().skip(15) {
            *v = 0.5;
        }
        assert_eq!(decide(&t, &avg, &band, 10), Verdict::SurplusSuspected { t_from: 15.0, t_to: 29.0 });
    }
}
