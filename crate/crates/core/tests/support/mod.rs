#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};

const PREC: usize = 320;
const RM: RoundingMode = RoundingMode::ToEven;

fn to_f64(v: &BigFloat) -> f64 {
    let text = format!("{v}");
    text.parse().unwrap_or_else(|_| panic!("cannot parse {text}"))
}

/// Trapezoid rule for `K_{ir}(x) = ∫_0^∞ e^{-x cosh t} cos(rt) dt` on the real
/// axis in 320-bit arithmetic, with step `h` and cut-off `t_max`.
pub fn bessel_trapezoid(r: f64, x: f64, h: f64, t_max: f64) -> f64 {
    let mut cc = Consts::new().expect("constants cache");
    let bx = BigFloat::from_f64(x, PREC);
    let br = BigFloat::from_f64(r, PREC);
    let bh = BigFloat::from_f64(h, PREC);
    let n = (t_max / h).ceil() as usize;
    let mut acc = BigFloat::from_f64(0.0, PREC);
    for k in 0..=n {
        let t = bh.mul(&BigFloat::from_u64(k as u64, PREC), PREC, RM);
        let ch = t.cosh(PREC, RM, &mut cc);
        let e = bx.mul(&ch, PREC, RM).neg().exp(PREC, RM, &mut cc);
        let c = br.mul(&t, PREC, RM).cos(PREC, RM, &mut cc);
        let mut term = e.mul(&c, PREC, RM);
        if k == 0 {
            term = term.div(&BigFloat::from_f64(2.0, PREC), PREC, RM);
        }
        acc = acc.add(&term, PREC, RM);
    }
    to_f64(&acc.mul(&bh, PREC, RM))
}

/// Step and cut-off that make the discretisation and truncation errors
/// negligible at double precision: the integrand is analytic in
/// |Im t| < π/2 where it grows at most like e^{r|Im t|}.
pub fn oracle_grid(r: f64, x: f64) -> (f64, f64) {
    use std::f64::consts::{FRAC_PI_2, PI};
    // On the line Im t = d the integrand is larger by at most e^{rd + x(1 - cos d)}.
    let h = (1..=145)
        .map(|i| {
            let d = i as f64 * 0.01;
            2.0 * PI * d / (r * d + x * (1.0 - d.cos()) + FRAC_PI_2 * r + 60.0)
        })
        .fold(0.0, f64::max);
    let t_max = (1.0 + (50.0 + std::f64::consts::FRAC_PI_2 * r) / x).acosh();
    (h, t_max)
}

pub fn bessel_oracle(r: f64, x: f64) -> f64 {
    let (h, t_max) = oracle_grid(r, x);
    bessel_trapezoid(r, x, h, t_max)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}
