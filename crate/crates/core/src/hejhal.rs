//! Hejhal's method: Maass cusp forms from the Fourier expansion at the cusp
//! and implicit automorphy on a low horocycle.
//!
//! The groups handled here are normalised by the reflection `z -> -conj(z)`,
//! so every cusp form is either even or odd in `x`. The two classes are
//! solved separately with real unknowns: an even form is
//! `Σ c_n √y K_{ir}(2πny) cos(2πnx)` and an odd one uses `sin`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{pullback, GroupProfile, UpperHalfPoint};
use crate::hecke::{multiplicativity_defect, HeckeReport};
use crate::special::{bessel_k_ir_scaled, KirSweep};
use crate::spectrum::MERGE_TOLERANCE;

pub const DEFAULT_EPS: f64 = 1e-8;
pub const DEFAULT_GRID_STEP: f64 = 0.01;
pub const DEFAULT_NUM_Y: usize = 5;
/// Coefficients up to this index enter the Hecke check.
pub const HECKE_INDEX: usize = 36;

const CONDITION_LIMIT: f64 = 1e8;
const DIAGONAL_FLOOR: f64 = 1e-250;
const Y_REDUCTION: f64 = 0.995;
const Y_FRACTION: f64 = 0.9;
/// The scan also samples at this multiple of `y`: spurious roots of the
/// system move with the height, true eigenvalues do not.
const SECOND_HEIGHT: f64 = 1.04;

pub fn tol_y(eps: f64) -> f64 {
    1e3 * eps
}

pub fn tol_hecke(eps: f64) -> f64 {
    1e4 * eps
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HejhalParams {
    pub t: f64,
    pub eps: f64,
    pub m0: usize,
    pub y: f64,
    pub m: usize,
    pub q: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub const BOTH: [Parity; 2] = [Parity::Even, Parity::Odd];

    fn index(self) -> usize {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }

    fn trig(self, v: f64) -> f64 {
        match self {
            Parity::Even => v.cos(),
            Parity::Odd => v.sin(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub y_values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Absent when the y-test already failed.
    pub hecke: Option<HeckeReport>,
    pub tol_y: f64,
    pub tol_hecke: f64,
    pub accepted: bool,
}

impl VerificationReport {
    pub fn hecke_defect(&self) -> Option<f64> {
        self.hecke.as_ref().map(|h| h.defect)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuspFormCandidate {
    pub r: f64,
    pub lambda: f64,
    pub parity: Parity,
    /// `coeffs[k]` is `c_{k+1}`; `c_1 = 1`.
    pub coeffs: Vec<f64>,
    pub cond: f64,
    pub params: HejhalParams,
    pub verification: Option<VerificationReport>,
}

impl CuspFormCandidate {
    /// Coefficient `a_n` of `Σ a_n √y K_{ir}(2π|n|y) e(nx)` normalised by `a_1 = 1`.
    pub fn fourier_coefficient(&self, n: i64) -> f64 {
        if n == 0 || n.unsigned_abs() as usize > self.coeffs.len() {
            return 0.0;
        }
        let c = self.coeffs[n.unsigned_abs() as usize - 1];
        match (self.parity, n < 0) {
            (Parity::Odd, true) => -c,
            _ => c,
        }
    }

    pub fn accepted(&self) -> bool {
        self.verification.as_ref().is_some_and(|v| v.accepted)
    }
}

/// Smallest `M` with `2πMy > max(t,1)` and `K_{it}(2πMy) <= eps K_{it}(max(t,1))`.
pub fn truncation(eps: f64, t: f64, y: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0,1), got {eps}")));
    }
    if !(y > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("truncation needs y > 0, got y={y}, t={t}")));
    }
    let big_t = t.abs().max(1.0);
    let reference = bessel_k_ir_scaled(t, big_t)?.abs();
    let ok = |m: usize| -> Result<bool> {
        let x = 2.0 * PI * m as f64 * y;
        if x <= big_t {
            return Ok(false);
        }
        Ok(bessel_k_ir_scaled(t, x)?.abs() <= eps * reference)
    };
    let mut lo = (big_t / (2.0 * PI * y)).floor() as usize;
    let mut step = 1usize;
    let mut hi = lo + step;
    while !ok(hi)? {
        lo = hi;
        step *= 2;
        hi = lo + step;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn params_at(profile: &GroupProfile, t: f64, eps: f64, m0: usize, y: f64) -> Result<HejhalParams> {
    let ratio = (profile.y_min / y * m0 as f64).ceil() as usize;
    let m = truncation(eps, t, y)?.max(ratio);
    Ok(HejhalParams { t, eps, m0, y, m, q: m + m0 + 1 })
}

/// Parameters for trial values up to `t`.
pub fn choose_params(profile: &GroupProfile, t: f64, eps: f64) -> Result<HejhalParams> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("trial parameter must be non-negative, got {t}")));
    }
    if !(profile.y_min > 0.0) {
        return Err(Error::Domain("profile has no domain floor".into()));
    }
    let big_t = t.max(1.0);
    let m0 = truncation(eps, t, profile.y_min)?;
    let y0 = Y_FRACTION * big_t / (2.0 * PI * m0 as f64);
    let mut y = y0;
    let mut worst = f64::INFINITY;
    while y > Y_FRACTION * y0 {
        let params = params_at(profile, t, eps, m0, y)?;
        let set = SampleSet::new(profile, params)?;
        let kv = set.bessel(t)?;
        let diag_ok = set.diagonal(&kv).iter().all(|d| d.abs() > DIAGONAL_FLOOR);
        let mut cond = 0.0f64;
        for p in Parity::BOTH {
            let v = set.matrix(p, &kv);
            let sv = reduced(&v).0.singular_values();
            cond = cond.max(sv.max() / sv.min());
        }
        if diag_ok && cond < CONDITION_LIMIT {
            return Ok(params);
        }
        worst = worst.min(cond);
        y *= Y_REDUCTION;
    }
    Err(Error::Conditioning(worst))
}

/// Sample points on the horocycle at height `params.y`, their pullbacks and
/// the trigonometric tables needed to assemble the system for any `r`.
///
/// The points are `x_j = (j - 1/2)/(2Q)`, `j = 1..2Q`. Only the half with
/// `x_j < 1/2` is stored: the other half mirrors it and, by parity, adds the
/// same contributions.
pub struct SampleSet {
    pub params: HejhalParams,
    pulled: Vec<UpperHalfPoint>,
    /// `2π n y*_j` at `(n-1) Q + j`, followed by the diagonal `2π m y`.
    args: Vec<f64>,
    order: Vec<usize>,
    sqrt_y: Vec<f64>,
    rows: [DMatrix<f64>; 2],
    stars: [DMatrix<f64>; 2],
}

impl SampleSet {
    pub fn new(profile: &GroupProfile, params: HejhalParams) -> Result<Self> {
        let (m0, q) = (params.m0, params.q);
        let xs: Vec<f64> = (0..q).map(|j| (j as f64 + 0.5) / (2 * q) as f64).collect();
        let pulled = xs
            .iter()
            .map(|&x| pullback(UpperHalfPoint { x, y: params.y }, profile).map(|p| p.point))
            .collect::<Result<Vec<_>>>()?;
        let mut args = Vec::with_capacity(m0 * q + m0);
        for n in 1..=m0 {
            args.extend(pulled.iter().map(|z| 2.0 * PI * n as f64 * z.y));
        }
        args.extend((1..=m0).map(|m| 2.0 * PI * m as f64 * params.y));
        let mut order: Vec<usize> = (0..args.len()).collect();
        order.sort_by(|&a, &b| args[b].total_cmp(&args[a]));
        let sqrt_y = pulled.iter().map(|z| z.y.sqrt()).collect();
        let table = |p: Parity, pts: &dyn Fn(usize) -> f64| {
            DMatrix::from_fn(m0, q, |n, j| p.trig(2.0 * PI * (n + 1) as f64 * pts(j)))
        };
        let rows = Parity::BOTH.map(|p| table(p, &|j| xs[j]));
        let stars = Parity::BOTH.map(|p| table(p, &|j| pulled[j].x));
        Ok(SampleSet { params, pulled, args, order, sqrt_y, rows, stars })
    }

    pub fn pulled(&self) -> &[UpperHalfPoint] {
        &self.pulled
    }

    /// Scaled `K_{ir}` at every stored argument.
    pub fn bessel(&self, r: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.args.len()];
        KirSweep::new(r).eval_sorted(&self.args, &self.order, &mut out)?;
        Ok(out)
    }

    /// `√y K_{ir}(2πmy)`, `m = 1..M0`.
    pub fn diagonal(&self, kv: &[f64]) -> Vec<f64> {
        let (m0, q) = (self.params.m0, self.params.q);
        let sy = self.params.y.sqrt();
        kv[m0 * q..].iter().map(|k| sy * k).collect()
    }

    /// The sample sum `(1/Q) Σ_j √y*_j K(2πn y*_j) trig(2πn x*_j) trig(2πm x_j)`
    /// over all `2Q` points, as an `M0 × M0` matrix indexed by `(m, n)`.
    pub fn sum_matrix(&self, parity: Parity, kv: &[f64]) -> DMatrix<f64> {
        let (m0, q) = (self.params.m0, self.params.q);
        let star = &self.stars[parity.index()];
        let w = DMatrix::from_fn(m0, q, |n, j| self.sqrt_y[j] * kv[n * q + j] * star[(n, j)]);
        let mut s = &self.rows[parity.index()] * w.transpose();
        s *= 2.0 / q as f64;
        s
    }

    /// `V = diag(D) - S`; a cusp form has `V c = 0`.
    pub fn matrix(&self, parity: Parity, kv: &[f64]) -> DMatrix<f64> {
        let mut v = -self.sum_matrix(parity, kv);
        for (m, d) in self.diagonal(kv).into_iter().enumerate() {
            v[(m, m)] += d;
        }
        v
    }

    /// Detection values for both parities at `r`.
    pub fn detect(&self, r: f64) -> Result<[f64; 2]> {
        let kv = self.bessel(r)?;
        Ok(Parity::BOTH.map(|p| detection(&self.matrix(p, &kv))))
    }
}

/// `sign(det V) · σ_min(V)` after scaling the columns of `V` to unit length.
/// It is continuous in `r` and changes sign where `V` becomes singular.
pub fn detection(v: &DMatrix<f64>) -> f64 {
    let mut a = v.clone();
    for mut col in a.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    let smin = a.singular_values().min();
    let lu = a.lu();
    let mut sign: f64 = lu.p().determinant();
    let u = lu.u();
    for i in 0..u.nrows().min(u.ncols()) {
        sign *= u[(i, i)].signum();
    }
    sign * smin
}

/// Square system in `c_2..c_M0` obtained by fixing `c_1 = 1` and dropping row 1.
fn reduced(v: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = v.nrows();
    let a = v.view((1, 1), (n - 1, n - 1)).into_owned();
    let b = -v.view((1, 0), (n - 1, 1)).into_owned().column(0).into_owned();
    (a, b)
}

pub struct LinearSystem {
    pub r: f64,
    pub parity: Parity,
    pub params: HejhalParams,
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

pub fn build_system(profile: &GroupProfile, r: f64, params: HejhalParams, parity: Parity) -> Result<LinearSystem> {
    let set = SampleSet::new(profile, params)?;
    let kv = set.bessel(r)?;
    let (matrix, rhs) = reduced(&set.matrix(parity, &kv));
    Ok(LinearSystem { r, parity, params, matrix, rhs })
}

impl LinearSystem {
    /// Solves by SVD; returns `(c_1..c_M0, condition number)`.
    pub fn solve(&self) -> Result<(Vec<f64>, f64)> {
        if self.matrix.nrows() == 0 {
            return Ok((vec![1.0], 1.0));
        }
        let svd = self.matrix.clone().svd(true, true);
        let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
        if !(smin > 1e-14 * smax) {
            return Err(Error::Singular);
        }
        let sol = svd.solve(&self.rhs, 0.0).map_err(|_| Error::Singular)?;
        let mut coeffs = Vec::with_capacity(sol.len() + 1);
        coeffs.push(1.0);
        coeffs.extend(sol.iter());
        Ok((coeffs, smax / smin))
    }
}

fn candidate_from(set: &SampleSet, kv: &[f64], r: f64, parity: Parity) -> Result<CuspFormCandidate> {
    let (matrix, rhs) = reduced(&set.matrix(parity, kv));
    let sys = LinearSystem { r, parity, params: set.params, matrix, rhs };
    let (coeffs, cond) = sys.solve()?;
    Ok(CuspFormCandidate { r, lambda: r * r + 0.25, parity, coeffs, cond, params: set.params, verification: None })
}

pub fn solve_candidate(profile: &GroupProfile, r: f64, params: HejhalParams, parity: Parity) -> Result<CuspFormCandidate> {
    let set = SampleSet::new(profile, params)?;
    let kv = set.bessel(r)?;
    candidate_from(&set, &kv, r, parity)
}

/// Defect of the central identity at height `y_test` for the candidate's
/// coefficients, relative to the largest diagonal term `|D_m c_m|`.
pub fn residual(profile: &GroupProfile, cand: &CuspFormCandidate, y_test: f64) -> Result<f64> {
    let p = cand.params;
    let params = params_at(profile, p.t, p.eps, cand.coeffs.len(), y_test)?;
    let set = SampleSet::new(profile, params)?;
    let kv = set.bessel(cand.r)?;
    let v = set.matrix(cand.parity, &kv);
    let c = DVector::from_column_slice(&cand.coeffs);
    let res = &v * &c;
    let scale = set
        .diagonal(&kv)
        .iter()
        .zip(&cand.coeffs)
        .fold(0.0f64, |acc, (d, c)| acc.max((d * c).abs()));
    Ok(res.amax() / scale)
}

/// Coefficients `c_1..c_count` recovered by sampling the expansion on a
/// horocycle low enough that every `K_{ir}(2πny)`, `n <= count`, is oscillatory.
/// Each index uses whichever of two nearby heights keeps it away from a zero
/// of the Bessel function.
pub fn expansion_coefficients(profile: &GroupProfile, cand: &CuspFormCandidate, count: usize) -> Result<Vec<f64>> {
    let base = Y_FRACTION * cand.r.max(1.0) / (2.0 * PI * count as f64);
    let m0 = cand.coeffs.len();
    let mut best = vec![(0.0f64, 0.0f64); count];
    let mut sweep = KirSweep::new(cand.r);
    for y in [base, 0.93 * base] {
        let m = truncation(cand.params.eps, cand.r, y)?;
        let q = m + count + 1;
        let xs: Vec<f64> = (0..q).map(|j| (j as f64 + 0.5) / (2 * q) as f64).collect();
        let pulled = xs
            .iter()
            .map(|&x| pullback(UpperHalfPoint { x, y }, profile).map(|p| p.point))
            .collect::<Result<Vec<_>>>()?;
        let mut args = Vec::with_capacity(m0 * q + count);
        for n in 1..=m0 {
            args.extend(pulled.iter().map(|z| 2.0 * PI * n as f64 * z.y));
        }
        args.extend((1..=count).map(|n| 2.0 * PI * n as f64 * y));
        let kv = sweep.eval(&args)?;
        let values: Vec<f64> = (0..q)
            .map(|j| {
                let z = pulled[j];
                (0..m0)
                    .map(|n| cand.coeffs[n] * kv[n * q + j] * cand.parity.trig(2.0 * PI * (n + 1) as f64 * z.x))
                    .sum::<f64>()
                    * z.y.sqrt()
            })
            .collect();
        for (n, slot) in best.iter_mut().enumerate() {
            let d = y.sqrt() * kv[m0 * q + n];
            if d.abs() <= slot.1 {
                continue;
            }
            let w = 2.0 * PI * (n + 1) as f64;
            let s: f64 = values.iter().zip(&xs).map(|(f, x)| f * cand.parity.trig(w * x)).sum();
            *slot = (2.0 * s / q as f64 / d, d.abs());
        }
    }
    Ok(best.into_iter().map(|(c, _)| c).collect())
}

/// Accepts a candidate when the central identity holds at `num_y` random
/// heights and the coefficients are multiplicative.
pub fn verify(profile: &GroupProfile, cand: &CuspFormCandidate, num_y: usize, seed: u64) -> Result<VerificationReport> {
    if num_y < 2 {
        return Err(Error::Domain(format!("verification needs at least 2 heights, got {num_y}")));
    }
    let p = cand.params;
    let (ty, th) = (tol_y(p.eps), tol_hecke(p.eps));
    let lo = Y_FRACTION * p.t.max(1.0) / (2.0 * PI * p.m0 as f64);
    let hi = profile.y_min;
    let lo = lo + 0.05 * (hi - lo);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ cand.r.to_bits().rotate_left(17));
    let y_values: Vec<f64> = (0..num_y).map(|_| rng.gen_range(lo..=hi)).collect();
    let residuals = y_values.iter().map(|&y| residual(profile, cand, y)).collect::<Result<Vec<_>>>()?;
    let max_residual = residuals.iter().fold(0.0f64, |a, &b| a.max(b));
    let hecke = if max_residual < ty {
        let count = HECKE_INDEX.max(p.m0);
        let coeffs = expansion_coefficients(profile, cand, count)?;
        Some(multiplicativity_defect(&coeffs, profile.level, count)?)
    } else {
        None
    };
    let accepted = max_residual < ty && hecke.as_ref().is_some_and(|h| h.defect < th);
    Ok(VerificationReport { y_values, residuals, max_residual, hecke, tol_y: ty, tol_hecke: th, accepted })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub eps: f64,
    pub grid_step: f64,
    pub num_y: usize,
    pub seed: u64,
    /// Width in `r` of the blocks sharing one parameter set.
    pub block_width: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { eps: DEFAULT_EPS, grid_step: DEFAULT_GRID_STEP, num_y: DEFAULT_NUM_Y, seed: 1, block_width: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ScanEvent {
    Block { r_lo: f64, r_hi: f64, params: HejhalParams, alt_y: f64, points: usize },
    Candidate {
        r: f64,
        lambda: f64,
        parity: Parity,
        cond: f64,
        max_residual: f64,
        hecke_defect: Option<f64>,
        accepted: bool,
    },
    Failure { r: f64, parity: Parity, message: String },
}

#[derive(Clone, Debug, Default)]
pub struct ScanOutcome {
    pub accepted: Vec<CuspFormCandidate>,
    pub rejected: Vec<CuspFormCandidate>,
}

impl ScanOutcome {
    pub fn rs(&self) -> Vec<f64> {
        self.accepted.iter().map(|c| c.r).collect()
    }
}

pub fn scan(profile: &GroupProfile, r_lo: f64, r_hi: f64, opts: &ScanOptions) -> Result<ScanOutcome> {
    scan_with_log(profile, r_lo, r_hi, opts, &mut |_| {})
}

/// Scans `[r_lo, r_hi]` for sign changes of the detection functional, refines
/// each, and verifies the resulting candidates.
pub fn scan_with_log(
    profile: &GroupProfile,
    r_lo: f64,
    r_hi: f64,
    opts: &ScanOptions,
    log: &mut dyn FnMut(&ScanEvent),
) -> Result<ScanOutcome> {
    if !(r_lo >= 0.0 && r_hi > r_lo) || !(opts.grid_step > 0.0) || !(opts.block_width > 0.0) {
        return Err(Error::Domain(format!("bad scan range [{r_lo}, {r_hi}] or step")));
    }
    let n_steps = ((r_hi - r_lo) / opts.grid_step).ceil() as usize;
    let grid = |k: usize| if k >= n_steps { r_hi } else { r_lo + k as f64 * opts.grid_step };
    let per_block = ((opts.block_width / opts.grid_step).round() as usize).max(2);
    let mut out = ScanOutcome::default();
    let mut start = 0;
    while start < n_steps {
        let end = (start + per_block).min(n_steps);
        let rs: Vec<f64> = (start..=end).map(grid).collect();
        let params = choose_params(profile, rs[rs.len() - 1], opts.eps)?;
        let alt = params_at(profile, params.t, params.eps, params.m0, SECOND_HEIGHT * params.y)?;
        let sets = [SampleSet::new(profile, params)?, SampleSet::new(profile, alt)?];
        log(&ScanEvent::Block { r_lo: rs[0], r_hi: rs[rs.len() - 1], params, alt_y: alt.y, points: rs.len() });
        let mut brackets = Vec::new();
        for (k, set) in sets.iter().enumerate() {
            let values = rs.par_iter().map(|&r| set.detect(r)).collect::<Result<Vec<_>>>()?;
            for p in Parity::BOTH {
                let g: Vec<f64> = values.iter().map(|v| v[p.index()]).collect();
                brackets.extend(find_brackets(set, p, &rs, &g)?.into_iter().map(|b| (k, b)));
            }
        }
        let refined: Vec<_> = brackets
            .par_iter()
            .map(|&(k, (p, a, fa, b, fb))| {
                refine(&sets[k], p, a, fa, b, fb).map(|r| (k, p, r)).map_err(|e| (0.5 * (a + b), p, e.to_string()))
            })
            .collect();
        let mut roots = Vec::new();
        for item in refined {
            match item {
                Ok(root) => roots.push(root),
                Err((r, parity, message)) => log(&ScanEvent::Failure { r, parity, message }),
            }
        }
        // A root seen at both heights is kept once, from the primary set.
        roots.sort_by(|a, b| a.1.index().cmp(&b.1.index()).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)));
        roots.dedup_by(|b, a| a.1 == b.1 && (b.2 - a.2).abs() < MERGE_TOLERANCE);
        let found: Vec<_> = roots
            .par_iter()
            .map(|&(k, p, r)| {
                let set = &sets[k];
                let kv = set.bessel(r)?;
                let mut cand = candidate_from(set, &kv, r, p)?;
                cand.verification = Some(verify(profile, &cand, opts.num_y, opts.seed)?);
                Ok(cand)
            })
            .zip(roots.par_iter())
            .map(|(res, &(_, p, r))| res.map_err(|e: Error| (r, p, e.to_string())))
            .collect();
        for item in found {
            match item {
                Ok(cand) => {
                    let v = cand.verification.as_ref().expect("verified");
                    log(&ScanEvent::Candidate {
                        r: cand.r,
                        lambda: cand.lambda,
                        parity: cand.parity,
                        cond: cand.cond,
                        max_residual: v.max_residual,
                        hecke_defect: v.hecke_defect(),
                        accepted: v.accepted,
                    });
                    if v.accepted {
                        out.accepted.push(cand);
                    } else {
                        out.rejected.push(cand);
                    }
                }
                Err((r, parity, message)) => log(&ScanEvent::Failure { r, parity, message }),
            }
        }
        start = end;
    }
    let by_r = |a: &CuspFormCandidate, b: &CuspFormCandidate| a.r.total_cmp(&b.r);
    out.accepted.sort_by(by_r);
    out.rejected.sort_by(by_r);
    out.accepted.dedup_by(|b, a| {
        let same = (b.r - a.r).abs() < MERGE_TOLERANCE && a.parity == b.parity;
        if same && b.verification.as_ref().map(|v| v.max_residual) < a.verification.as_ref().map(|v| v.max_residual) {
            std::mem::swap(a, b);
        }
        same
    });
    Ok(out)
}

type Bracket = (Parity, f64, f64, f64, f64);

/// Sign changes on the grid, plus those revealed by subdividing around local
/// minima of `|g|` and around jumps of more than 10% between neighbours.
fn find_brackets(set: &SampleSet, p: Parity, rs: &[f64], g: &[f64]) -> Result<Vec<Bracket>> {
    const SUBDIVISIONS: usize = 8;
    let mut out = Vec::new();
    let mut suspicious = vec![false; rs.len().saturating_sub(1)];
    for i in 0..rs.len() - 1 {
        if g[i] * g[i + 1] < 0.0 || g[i] == 0.0 {
            out.push((p, rs[i], g[i], rs[i + 1], g[i + 1]));
            continue;
        }
        let (a, b) = (g[i].abs(), g[i + 1].abs());
        if (a - b).abs() > 0.1 * a.max(b) {
            suspicious[i] = true;
        }
        if i > 0 && a < g[i - 1].abs() && a < b && g[i - 1] * g[i] > 0.0 {
            suspicious[i - 1] = true;
            suspicious[i] = true;
        }
    }
    for (i, _) in suspicious.iter().enumerate().filter(|(_, s)| **s) {
        if g[i] * g[i + 1] <= 0.0 {
            continue;
        }
        let h = (rs[i + 1] - rs[i]) / SUBDIVISIONS as f64;
        let mut prev = (rs[i], g[i]);
        for k in 1..=SUBDIVISIONS {
            let r = if k == SUBDIVISIONS { rs[i + 1] } else { rs[i] + k as f64 * h };
            let v = if k == SUBDIVISIONS { g[i + 1] } else { set.detect(r)?[p.index()] };
            if prev.1 * v < 0.0 {
                out.push((p, prev.0, prev.1, r, v));
            }
            prev = (r, v);
        }
    }
    Ok(out)
}

/// Illinois iteration on a sign-changing bracket, with a bisection step
/// whenever the bracket fails to halve.
fn refine(set: &SampleSet, p: Parity, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64) -> Result<f64> {
    let tol = 1e-11 * b.abs().max(1.0);
    let f = |r: f64| -> Result<f64> { Ok(set.detect(r)?[p.index()]) };
    if fa == 0.0 {
        return Ok(a);
    }
    let mut side = 0i8;
    let mut width = b - a;
    for it in 0..200 {
        if b - a <= tol {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if it % 3 == 2 && b - a > 0.5 * width {
            c = 0.5 * (a + b);
        }
        if it % 3 == 2 {
            width = b - a;
        }
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}
