//! Modified Bessel function of the second kind with imaginary order, `K_{ir}(x)`.
//!
//! Single values come from the trapezoid rule applied to
//! `K_{ir}(x) = Re ∫_0^∞ exp(-x cosh t + i r t) dt` along the horizontal line
//! `Im t = θ`. Moving the line toward the saddle of the integrand removes the
//! cancellation that makes the real-axis integral useless once `x < r`: the
//! integrand then has size comparable to the result instead of `e^{πr/2}`
//! times larger. The integrand decays doubly exponentially along the line, so
//! the trapezoid rule converges geometrically in the step size.
//!
//! Many values at a fixed order are produced by [`KirSweep`], which anchors at
//! the largest argument with quadrature and then integrates the Bessel ODE in
//! `s = ln x` downward by local Taylor series.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

const LOSS_BUDGET: f64 = 3.0;
const TAIL_DIGITS: f64 = 40.0;
const CONVERGENCE_TOL: f64 = 1e-13;
/// Natural log below which a scaled value is reported as zero.
const LN_UNDERFLOW: f64 = -700.0;

#[derive(Clone, Copy, Debug)]
struct Contour {
    theta: f64,
    /// ln of the envelope of the scaled function at this argument.
    ln_envelope: f64,
    /// Loss factor exponent relative to the envelope on the chosen line.
    loss: f64,
    step: f64,
}

fn saddle_height(r: f64, x: f64) -> f64 {
    (r / x).min(1.0).asin()
}

fn contour(r: f64, x: f64) -> Contour {
    let g = |t: f64| r * t + x * t.cos();
    let theta0 = saddle_height(r, x);
    let g0 = g(theta0);
    let loss_at = |t: f64| g0 - g(t);
    let theta = if loss_at(0.0) <= LOSS_BUDGET {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, theta0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if loss_at(mid) > LOSS_BUDGET {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let loss = loss_at(theta);
    let d = 0.7 * (FRAC_PI_2 - theta).min(FRAC_PI_2);
    let worst = loss_at(theta - d).max(loss_at(theta + d)).max(0.0);
    let step = 2.0 * PI * d / (TAIL_DIGITS + 2.0 + worst);
    Contour { theta, ln_envelope: FRAC_PI_2 * r - g0, loss, step }
}

/// Trapezoid sums for the scaled value and its x-derivative on a fixed line.
struct Trapezoid {
    r: f64,
    x: f64,
    cos_t: f64,
    sin_t: f64,
    base: f64,
    u_end: f64,
    want_derivative: bool,
}

impl Trapezoid {
    fn new(r: f64, x: f64, c: &Contour, want_derivative: bool) -> Self {
        let cos_t = c.theta.cos();
        let sin_t = c.theta.sin();
        let a = x * cos_t;
        let u_end = (1.0 + (c.loss + TAIL_DIGITS) / a).acosh();
        Trapezoid {
            r,
            x,
            cos_t,
            sin_t,
            base: FRAC_PI_2 * r - r * c.theta,
            u_end,
            want_derivative,
        }
    }

    /// Sum of integrand values at `u = offset + k*h`, `k = 0, 1, ...`.
    fn sum(&self, offset: f64, h: f64) -> (f64, f64, f64) {
        let mut s = 0.0;
        let mut sd = 0.0;
        let mut mag = 0.0;
        let mut k = 0usize;
        loop {
            let u = offset + k as f64 * h;
            if u > self.u_end {
                break;
            }
            let eu = u.exp();
            let ch = 0.5 * (eu + 1.0 / eu);
            let sh = 0.5 * (eu - 1.0 / eu);
            let amp = (self.base - self.x * self.cos_t * ch).exp();
            let phase = self.r * u - self.x * self.sin_t * sh;
            let (sp, cp) = phase.sin_cos();
            let w = if u == 0.0 { 0.5 } else { 1.0 };
            s += w * amp * cp;
            mag += w * amp;
            if self.want_derivative {
                sd -= w * amp * (self.cos_t * ch * cp - self.sin_t * sh * sp);
            }
            k += 1;
        }
        (s, sd, mag)
    }
}

/// Returns `(e^{πr/2} K_{ir}(x), e^{πr/2} dK_{ir}/dx)`.
fn scaled_with_derivative(r: f64, x: f64, want_derivative: bool) -> Result<(f64, f64)> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("K-Bessel argument must be positive, got {x}")));
    }
    if !r.is_finite() {
        return Err(Error::Domain(format!("K-Bessel order must be finite, got {r}")));
    }
    let r = r.abs();
    let c = contour(r, x);
    if c.ln_envelope < LN_UNDERFLOW {
        return Ok((0.0, 0.0));
    }
    let tr = Trapezoid::new(r, x, &c, want_derivative);
    let mut h = 2.0 * c.step;
    let (mut s, mut sd, mut mag) = tr.sum(0.0, h);
    let mut prev = h * s;
    let mut prev_d = h * sd;
    for _ in 0..30 {
        let (s2, sd2, mag2) = tr.sum(0.5 * h, h);
        s += s2;
        sd += sd2;
        mag += mag2;
        h *= 0.5;
        let val = h * s;
        let der = h * sd;
        let scale = (h * mag * (-c.loss).exp()).max(val.abs());
        let ok_v = (val - prev).abs() <= CONVERGENCE_TOL * scale;
        let ok_d = !want_derivative
            || (der - prev_d).abs() <= CONVERGENCE_TOL * scale * (1.0 + x + r);
        if ok_v && ok_d {
            return Ok((val, der));
        }
        prev = val;
        prev_d = der;
    }
    Err(Error::Range(format!("K-Bessel quadrature did not converge at r={r}, x={x}")))
}

/// `K_{ir}(x)` for real `r` and `x > 0`.
pub fn bessel_k_ir(r: f64, x: f64) -> Result<f64> {
    let scaled = bessel_k_ir_scaled(r, x)?;
    Ok(scaled * (-FRAC_PI_2 * r.abs()).exp())
}

/// `e^{π|r|/2} K_{ir}(x)`, which stays of moderate size for `x < |r|`.
pub fn bessel_k_ir_scaled(r: f64, x: f64) -> Result<f64> {
    Ok(scaled_with_derivative(r, x, false)?.0)
}

/// Natural log of the size of `e^{π|r|/2} K_{ir}(x)` ignoring algebraic factors:
/// zero in the oscillatory region `x < |r|`, negative beyond the turning point.
pub fn bessel_k_ir_ln_envelope(r: f64, x: f64) -> f64 {
    let r = r.abs();
    let t0 = saddle_height(r, x);
    FRAC_PI_2 * r - r * t0 - x * t0.cos()
}

/// Envelope including the algebraic factor; used to measure errors near the
/// zeros of the oscillatory region.
pub fn bessel_k_ir_amplitude(r: f64, x: f64) -> f64 {
    let r = r.abs();
    let q = (r * r - x * x).abs().max(1.0 + r);
    (2.0 * PI).sqrt() * q.powf(-0.25) * bessel_k_ir_ln_envelope(r, x).exp()
}

/// Evaluates scaled `K_{ir}` at many arguments for one order.
///
/// Arguments are visited in decreasing order. The first is computed by
/// quadrature, the rest by Taylor steps of `y'' = (e^{2s} - r^2) y` with
/// `s = ln x`. Downward integration is stable: beyond the turning point the
/// wanted solution grows in that direction, and below it both solutions
/// oscillate with bounded amplitude.
pub struct KirSweep {
    r: f64,
    /// Largest argument that is not negligible.
    cutoff: f64,
    coef: Vec<f64>,
}

const MAX_ORDER: usize = 48;

impl KirSweep {
    pub fn new(r: f64) -> Self {
        let r = r.abs();
        // Past x_cut the envelope is below e^{-745}; solve envelope(x) = that.
        let mut lo = r.max(1e-3);
        let mut hi = lo + 800.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if bessel_k_ir_ln_envelope(r, mid) > LN_UNDERFLOW {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        KirSweep { r, cutoff: lo, coef: vec![0.0; MAX_ORDER + 2] }
    }

    /// Fills `out[i]` with `e^{πr/2} K_{ir}(xs[i])`. `order` must list the
    /// indices of `xs` sorted by decreasing argument.
    pub fn eval_sorted(&mut self, xs: &[f64], order: &[usize], out: &mut [f64]) -> Result<()> {
        let mut state: Option<(f64, f64, f64)> = None; // (s, y, dy/ds)
        for &i in order {
            let x = xs[i];
            if !(x > 0.0) {
                return Err(Error::Domain(format!("K-Bessel argument must be positive, got {x}")));
            }
            if x > self.cutoff {
                out[i] = 0.0;
                continue;
            }
            let s = x.ln();
            let (y, dy) = match state {
                None => {
                    let (v, d) = scaled_with_derivative(self.r, x, true)?;
                    (v, x * d)
                }
                Some((s0, y0, dy0)) => self.advance(s0, y0, dy0, s),
            };
            out[i] = y;
            state = Some((s, y, dy));
        }
        Ok(())
    }

    pub fn eval(&mut self, xs: &[f64]) -> Result<Vec<f64>> {
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[b].total_cmp(&xs[a]));
        let mut out = vec![0.0; xs.len()];
        self.eval_sorted(xs, &order, &mut out)?;
        Ok(out)
    }

    fn advance(&mut self, mut s: f64, mut y: f64, mut dy: f64, target: f64) -> (f64, f64) {
        while s > target {
            let x2 = (2.0 * s).exp();
            let omega = (x2 - self.r * self.r).abs().sqrt().max(2.0);
            let step = (s - target).min(1.0 / omega);
            let (y1, dy1) = self.taylor(s, y, dy, -step);
            s -= step;
            y = y1;
            dy = dy1;
        }
        (y, dy)
    }

    fn taylor(&mut self, s0: f64, y0: f64, dy0: f64, sigma: f64) -> (f64, f64) {
        let e = (2.0 * s0).exp();
        let r2 = self.r * self.r;
        let c = &mut self.coef;
        c[0] = y0;
        c[1] = dy0;
        let mut val = y0 + dy0 * sigma;
        let mut der = dy0;
        let scale = y0.abs() + (dy0 * sigma).abs();
        let mut pow = 1.0;
        let mut small = 0;
        for k in 0..MAX_ORDER {
            // c_{k+2} (k+2)(k+1) = e * sum_j 2^j/j! c_{k-j} - r^2 c_k
            let mut w = 0.0;
            let mut f = 1.0;
            for j in 0..=k {
                w += f * c[k - j];
                f *= 2.0 / (j + 1) as f64;
            }
            let next = (e * w - r2 * c[k]) / ((k + 2) as f64 * (k + 1) as f64);
            c[k + 2] = next;
            let n = k + 2;
            pow *= sigma; // sigma^(n-1)
            let dterm = n as f64 * next * pow;
            let term = next * pow * sigma;
            val += term;
            der += dterm;
            if term.abs() <= 1e-18 * scale && (dterm * sigma).abs() <= 1e-18 * scale {
                small += 1;
                if small >= 2 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        (val, der)
    }
}
