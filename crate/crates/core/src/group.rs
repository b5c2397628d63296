//! Elements of Γ₀(N)⁺, the action on the upper half-plane, and reduction of
//! points into a Dirichlet fundamental domain.
//!
//! An element is stored as an integer matrix `(a, b; c, d)` together with its
//! Atkin-Lehner divisor `e = ad - bc`; the real matrix it represents is
//! `M / sqrt(e)`. Signs are normalised so that `a > 0`, or `a == 0` and `c > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_PULLBACK_ITERATIONS: usize = 10_000;
pub const DEFAULT_FLOOR_SAMPLES: usize = 9600;

/// Default centre of the Dirichlet domain used by [`pullback`].
pub const DIRICHLET_CENTRE: UpperHalfPoint = UpperHalfPoint { x: 0.0, y: 1.2 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
    pub e: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperHalfPoint {
    pub x: f64,
    pub y: f64,
}

impl UpperHalfPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::Domain(format!("point ({x}, {y}) is not in the upper half-plane")));
        }
        Ok(UpperHalfPoint { x, y })
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn narrow(v: i128) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::Overflow)
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { a: 1, b: 0, c: 0, d: 1, e: 1 };

    fn normalised(self) -> Self {
        if self.a < 0 || (self.a == 0 && self.c < 0) {
            GroupElement { a: -self.a, b: -self.b, c: -self.c, d: -self.d, e: self.e }
        } else {
            self
        }
    }

    pub fn inverse(&self) -> Self {
        GroupElement { a: self.d, b: -self.b, c: -self.c, d: self.a, e: self.e }.normalised()
    }

    /// Exact product `self * other`.
    pub fn compose(&self, other: &GroupElement) -> Result<Self> {
        let (a1, b1, c1, d1) = (self.a as i128, self.b as i128, self.c as i128, self.d as i128);
        let (a2, b2, c2, d2) = (other.a as i128, other.b as i128, other.c as i128, other.d as i128);
        let g = gcd(self.e, other.e) as i128;
        let m = [a1 * a2 + b1 * c2, a1 * b2 + b1 * d2, c1 * a2 + d1 * c2, c1 * b2 + d1 * d2];
        if m.iter().any(|v| v % g != 0) {
            return Err(Error::Membership("product does not reduce by the common divisor".into()));
        }
        let e = (self.e as i128) * (other.e as i128) / (g * g);
        Ok(GroupElement {
            a: narrow(m[0] / g)?,
            b: narrow(m[1] / g)?,
            c: narrow(m[2] / g)?,
            d: narrow(m[3] / g)?,
            e: narrow(e)?,
        }
        .normalised())
    }

    pub fn trace_squared(&self) -> f64 {
        let t = (self.a + self.d) as f64;
        t * t / self.e as f64
    }

    pub fn is_translation(&self) -> bool {
        self.c == 0 && self.e == 1 && self.a == 1 && self.d == 1 && self.b.abs() == 1
    }
}

/// Validates and builds an element of Γ₀(N)⁺.
pub fn make_element(a: i64, b: i64, c: i64, d: i64, e: i64, level: u64) -> Result<GroupElement> {
    let n = level as i64;
    let det = (a as i128) * (d as i128) - (b as i128) * (c as i128);
    let bad = |why: &str| Err(Error::Membership(format!("({a},{b};{c},{d})/sqrt({e}): {why}")));
    if e <= 0 || n <= 0 {
        return bad("divisor must be positive");
    }
    if n % e != 0 {
        return bad("e does not divide N");
    }
    if gcd(e, n / e) != 1 {
        return bad("e is not an exact divisor of N");
    }
    if det != e as i128 {
        return bad("determinant differs from e");
    }
    if a % e != 0 || d % e != 0 {
        return bad("e must divide a and d");
    }
    if c % n != 0 {
        return bad("N must divide c");
    }
    Ok(GroupElement { a, b, c, d, e }.normalised())
}

pub fn apply(g: &GroupElement, z: UpperHalfPoint) -> UpperHalfPoint {
    let (a, b, c, d) = (g.a as f64, g.b as f64, g.c as f64, g.d as f64);
    let re = c * z.x + d;
    let im = c * z.y;
    let den = re * re + im * im;
    let x = ((a * z.x + b) * re + a * im * z.y) / den;
    let y = g.e as f64 * z.y / den;
    UpperHalfPoint { x, y }
}

pub fn hyperbolic_distance(z: UpperHalfPoint, w: UpperHalfPoint) -> f64 {
    let dx = z.x - w.x;
    let dy = z.y - w.y;
    let chord = (dx * dx + dy * dy).sqrt();
    2.0 * (chord / (2.0 * (z.y * w.y).sqrt())).asinh()
}

/// Monotone in the hyperbolic distance from `z` to `p`.
fn distance_key(z: UpperHalfPoint, p: UpperHalfPoint) -> f64 {
    let dx = z.x - p.x;
    let dy = z.y - p.y;
    (dx * dx + dy * dy) / z.y
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    pub genus: u32,
    pub elliptic_orders: Vec<u32>,
    pub cusps: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupProfile {
    pub level: u64,
    /// Side-pairing elements used for reduction. A generating set, possibly
    /// with redundant members.
    pub generators: Vec<GroupElement>,
    pub signature: Signature,
    pub volume: f64,
    /// Number of cusp orbits of the scattering matrix contributing to the
    /// continuous spectrum term (`n_N` in the counting formula).
    pub n_cusp_terms: u32,
    /// Multiplicity of the eigenvalue 1/4 from the residual spectrum.
    pub m_quarter: u32,
    pub dirichlet_center: UpperHalfPoint,
    /// Lower bound for the height of the fundamental domain; filled in by
    /// [`estimate_floor`] when a profile is loaded without one.
    #[serde(default)]
    pub y_min: f64,
}

impl GroupProfile {
    pub fn primes(&self) -> Vec<u64> {
        prime_divisors(self.level)
    }

    pub fn translation(&self) -> Option<GroupElement> {
        self.generators.iter().copied().find(|g| g.is_translation())
    }

    pub fn validate(&self) -> Result<()> {
        if self.level == 0 {
            return Err(Error::Domain("level must be positive".into()));
        }
        for g in &self.generators {
            make_element(g.a, g.b, g.c, g.d, g.e, self.level)?;
        }
        if self.translation().is_none() {
            return Err(Error::Domain("generators must include the translation z -> z + 1".into()));
        }
        if !(self.dirichlet_center.y > 0.0) {
            return Err(Error::Domain("dirichlet centre must lie in the upper half-plane".into()));
        }
        if self.y_min > self.dirichlet_center.y {
            return Err(Error::Domain("y_min exceeds the height of the dirichlet centre".into()));
        }
        if !(self.volume > 0.0) {
            return Err(Error::Domain("volume must be positive".into()));
        }
        if self.signature.elliptic_orders.iter().any(|&m| m < 2) {
            return Err(Error::Domain("elliptic orders must be at least 2".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut p: GroupProfile = serde_json::from_str(text)?;
        p.validate()?;
        if !(p.y_min > 0.0) {
            p.y_min = estimate_floor(&p, DEFAULT_FLOOR_SAMPLES)?;
        }
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn el(a: i64, b: i64, c: i64, d: i64, e: i64, n: u64) -> GroupElement {
    make_element(a, b, c, d, e, n).expect("builtin generator")
}

/// Built-in data for N = 1, 5 and 6.
///
/// Besides a minimal generating set, the lists carry the involutions and
/// their translates that pair the sides of the Dirichlet domain centred at
/// 1.2i, so that greedy reduction never stalls outside the domain.
pub fn builtin_profile(level: u64) -> Result<GroupProfile> {
    let mut p = builtin_data(level)?;
    p.y_min = estimate_floor(&p, DEFAULT_FLOOR_SAMPLES)?;
    Ok(p)
}

fn builtin_data(level: u64) -> Result<GroupProfile> {
    use std::f64::consts::PI;
    match level {
        1 => Ok(GroupProfile {
            level,
            generators: vec![el(1, 1, 0, 1, 1, 1), el(0, -1, 1, 0, 1, 1)],
            signature: Signature { genus: 0, elliptic_orders: vec![2, 3], cusps: 1 },
            volume: PI / 3.0,
            n_cusp_terms: 1,
            m_quarter: 0,
            dirichlet_center: DIRICHLET_CENTRE,
            y_min: 0.0,
        }),
        5 => Ok(GroupProfile {
            level,
            generators: vec![
                el(1, 1, 0, 1, 1, 5),
                el(5, -1, 5, 0, 5, 5),
                el(5, -3, 10, -5, 5, 5),
                el(0, -1, 5, 0, 5, 5),
                el(5, 2, 10, 5, 5, 5),
                el(2, -1, 5, -2, 1, 5),
                el(3, 1, 5, 2, 1, 5),
            ],
            signature: Signature { genus: 0, elliptic_orders: vec![2, 2, 2], cusps: 1 },
            volume: PI,
            n_cusp_terms: 1,
            m_quarter: 0,
            dirichlet_center: DIRICHLET_CENTRE,
            y_min: 0.0,
        }),
        6 => Ok(GroupProfile {
            level,
            generators: vec![
                el(1, 1, 0, 1, 1, 6),
                el(6, -1, 6, 0, 6, 6),
                el(3, -2, 6, -3, 3, 6),
                el(0, -1, 6, 0, 6, 6),
                el(3, 1, 6, 3, 3, 6),
                el(2, -1, 6, -2, 2, 6),
                el(4, 1, 6, 2, 2, 6),
            ],
            signature: Signature { genus: 0, elliptic_orders: vec![2, 2, 2], cusps: 1 },
            volume: PI,
            n_cusp_terms: 1,
            m_quarter: 0,
            dirichlet_center: DIRICHLET_CENTRE,
            y_min: 0.0,
        }),
        other => Err(Error::UnsupportedGroup(other)),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Pullback {
    pub point: UpperHalfPoint,
    /// The element with `apply(element, z) == point`.
    pub element: GroupElement,
    pub iterations: usize,
}

/// Moves `z` into the Dirichlet domain centred at `centre` by repeatedly
/// applying whichever generator (or inverse) brings it closest to the centre.
/// Stops as soon as no candidate is strictly closer.
pub fn pullback_with_centre(
    z: UpperHalfPoint,
    profile: &GroupProfile,
    centre: UpperHalfPoint,
) -> Result<Pullback> {
    let mut moves: Vec<GroupElement> = Vec::with_capacity(2 * profile.generators.len());
    for g in &profile.generators {
        moves.push(*g);
        let inv = g.inverse();
        if inv != *g {
            moves.push(inv);
        }
    }
    let translation = profile.translation();
    let mut cur = z;
    let mut key = distance_key(cur, centre);
    let mut acc = GroupElement::IDENTITY;
    let mut iterations = 0;
    loop {
        if iterations >= MAX_PULLBACK_ITERATIONS {
            return Err(Error::IterationLimit(iterations));
        }
        // Shortcut for long runs of translations; each is a descent step.
        if translation.is_some() && (cur.x - centre.x).abs() > 0.5 {
            let k = (cur.x - centre.x).round() as i64;
            let t = GroupElement { a: 1, b: -k, c: 0, d: 1, e: 1 };
            let next = apply(&t, cur);
            let next_key = distance_key(next, centre);
            if next_key < key {
                debug_assert!(next_key < key);
                cur = next;
                key = next_key;
                acc = t.compose(&acc)?;
                iterations += 1;
                continue;
            }
        }
        let mut best: Option<(f64, GroupElement, UpperHalfPoint)> = None;
        for g in &moves {
            let w = apply(g, cur);
            let k = distance_key(w, centre);
            if best.as_ref().map_or(true, |(bk, _, _)| k < *bk) {
                best = Some((k, *g, w));
            }
        }
        match best {
            Some((k, g, w)) if k < key => {
                debug_assert!(k < key);
                cur = w;
                key = k;
                acc = g.compose(&acc)?;
                iterations += 1;
            }
            _ => break,
        }
    }
    // Recompute from the exact accumulated element to avoid drift.
    let point = if iterations > 0 { apply(&acc, z) } else { z };
    Ok(Pullback { point, element: acc, iterations })
}

pub fn pullback(z: UpperHalfPoint, profile: &GroupProfile) -> Result<Pullback> {
    pullback_with_centre(z, profile, profile.dirichlet_center)
}

/// True when no single reduction move brings `z` strictly closer to the centre.
pub fn is_reduced(z: UpperHalfPoint, profile: &GroupProfile) -> bool {
    matches!(pullback(z, profile), Ok(pb) if pb.iterations == 0)
}

/// Lower bound for the height of the fundamental domain.
///
/// A deterministic grid of low points is pulled back and the lowest image is
/// taken; the lowest vertex near it is then located by bisection on domain
/// membership, and the result is lowered by one percent.
pub fn estimate_floor(profile: &GroupProfile, samples: usize) -> Result<f64> {
    let ny = 40;
    let nx = samples.max(1000).div_ceil(ny);
    let mut best = UpperHalfPoint { x: 0.0, y: f64::INFINITY };
    for i in 0..nx {
        let x = (i as f64 + 0.5) / nx as f64 - 0.5;
        for j in 0..ny {
            let y = 0.004 * (250.0f64).powf(j as f64 / (ny - 1) as f64);
            let pb = pullback(UpperHalfPoint { x, y }, profile)?;
            if pb.point.y < best.y {
                best = pb.point;
            }
        }
    }
    let boundary = |x: f64| -> f64 {
        let mut lo = 0.5 * best.y;
        let mut hi = 2.0 * best.y;
        if !is_reduced(UpperHalfPoint { x, y: hi }, profile) {
            return f64::INFINITY;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if is_reduced(UpperHalfPoint { x, y: mid }, profile) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    // Golden-section search for the lowest boundary point near the best image.
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = (best.x - 0.05).max(-0.5);
    let mut b = (best.x + 0.05).min(0.5);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = boundary(c);
    let mut fd = boundary(d);
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = boundary(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = boundary(d);
        }
    }
    let refined = fc.min(fd);
    Ok(0.99 * best.y.min(refined))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_rules() {
        assert!(make_element(5, -1, 5, 0, 5, 5).is_ok());
        assert!(make_element(1, 0, 1, 1, 1, 5).is_err());
        assert!(make_element(2, 1, 5, 3, 1, 5).is_ok());
        assert!(make_element(2, 0, 0, 2, 4, 5).is_err());
    }

    #[test]
    fn sign_is_normalised() {
        let g = make_element(-1, -1, 0, -1, 1, 5).unwrap();
        assert_eq!(g, GroupElement { a: 1, b: 1, c: 0, d: 1, e: 1 });
    }

    #[test]
    fn involution_squares_to_identity() {
        let w = make_element(0, -1, 5, 0, 5, 5).unwrap();
        assert_eq!(w.compose(&w).unwrap(), GroupElement::IDENTITY);
        let g3 = make_element(3, -2, 6, -3, 3, 6).unwrap();
        assert_eq!(g3.compose(&g3).unwrap(), GroupElement::IDENTITY);
    }

    #[test]
    fn apply_matches_real_matrix() {
        let g = make_element(5, -1, 5, 0, 5, 5).unwrap();
        let z = UpperHalfPoint { x: 0.3, y: 0.7 };
        let w = apply(&g, z);
        // 1 - 1/(5z)
        let (zr, zi) = (0.3, 0.7);
        let den = 5.0 * (zr * zr + zi * zi);
        assert!((w.x - (1.0 - zr / den)).abs() < 1e-15);
        assert!((w.y - zi / den).abs() < 1e-15);
    }

    #[test]
    fn distance_to_self_is_zero() {
        let z = UpperHalfPoint { x: 0.1, y: 0.2 };
        assert_eq!(hyperbolic_distance(z, z), 0.0);
    }

    #[test]
    fn builtin_unknown_level() {
        assert!(matches!(builtin_profile(7), Err(Error::UnsupportedGroup(7))));
    }

    #[test]
    fn modular_floor_is_near_rho() {
        let p = builtin_profile(1).unwrap();
        let y = p.y_min;
        let want = 0.99 * 3f64.sqrt() / 2.0;
        assert!((y - want).abs() < 1e-3 * want, "{y}");
    }
}
