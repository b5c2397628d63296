//! One PASS/FAIL line per acceptance criterion. With `ACCEPTANCE_STRICT=1`
//! the process also exits nonzero when any criterion fails.

mod support;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use maass::group::{apply, builtin_profile, hyperbolic_distance, pullback, GroupElement, GroupProfile, UpperHalfPoint};
use maass::hecke::multiplicativity_defect;
use maass::hejhal::{expansion_coefficients, scan, tol_hecke, CuspFormCandidate, ScanOptions, HECKE_INDEX};
use maass::special::{bessel_k_ir, bessel_k_ir_amplitude, dirichlet_factor, scattering_det, ComplexValue};
use maass::spectrum::{EigenvalueList, ListMetadata};
use maass::stats::{independence_demo, ks_distance, spacings, synthetic_levels, unfold, Reference};
use maass::turing::{averaged_s, consecutiveness, remove, TuringOptions, Verdict};
use maass::weyl::main_term;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TABLE_5: [f64; 5] = [17.32676, 24.23291, 36.89998, 40.58784, 46.81219];
const TABLE_6: [f64; 5] = [20.93844, 26.24717, 37.71537, 40.01593, 52.39092];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Spectra {
    p5: GroupProfile,
    p6: GroupProfile,
    forms5: Vec<CuspFormCandidate>,
    forms6: Vec<CuspFormCandidate>,
    list6: EigenvalueList,
}

fn meta(r_hi: f64) -> ListMetadata {
    ListMetadata {
        eps: ScanOptions::default().eps,
        r_lo: 0.0,
        r_hi,
        timestamp: String::new(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: String::new(),
    }
}

fn compute_spectra() -> Spectra {
    let p5 = builtin_profile(5).unwrap();
    let p6 = builtin_profile(6).unwrap();
    let opts = ScanOptions::default();
    let t0 = Instant::now();
    let forms5 = scan(&p5, 0.0, 7.0, &opts).expect("scan N=5").accepted;
    let forms6 = scan(&p6, 0.0, 30.0, &opts).expect("scan N=6").accepted;
    eprintln!("scans finished in {:.1} s", t0.elapsed().as_secs_f64());
    let list6 = EigenvalueList::new(6, forms6.iter().map(|c| c.r).collect(), meta(30.0)).unwrap();
    Spectra { p5, p6, forms5, forms6, list6 }
}

fn table_match(found: &[CuspFormCandidate], expected: &[f64]) -> (f64, String) {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (i, &want) in expected.iter().enumerate() {
        let got = found.get(i).map_or(f64::NAN, |c| c.lambda);
        let diff = (got - want).abs();
        worst = if diff.is_nan() { f64::INFINITY } else { worst.max(diff) };
        parts.push(format!("{got:.6}({diff:.1e})"));
    }
    (worst, parts.join(" "))
}

fn criterion_1(s: &Spectra) -> Outcome {
    let (w5, d5) = table_match(&s.forms5, &TABLE_5);
    let (w6, d6) = table_match(&s.forms6, &TABLE_6);
    outcome(w5 < 1e-4 && w6 < 1e-4, format!("N=5: {d5}; N=6: {d6}; worst |dλ| {:.1e}", w5.max(w6)))
}

fn criterion_2() -> Outcome {
    let c = |n| main_term(&builtin_profile(n).unwrap(), 10.0).unwrap().constant();
    let (c1, c5, c6) = (c(1), c(5), c(6));
    let e1 = (c1 + 131.0 / 144.0).abs();
    let e5 = (c5 + 43.0 / 48.0).abs();
    let e56 = (c5 - c6).abs();
    let p5 = builtin_profile(5).unwrap();
    let p6 = builtin_profile(6).unwrap();
    let mut diff = 0.0f64;
    for i in 0..200 {
        let t = 1.5 + i as f64 * 0.37;
        let m5 = main_term(&p5, t).unwrap();
        let m6 = main_term(&p6, t).unwrap();
        let d = (m5.total - m5.periodic()) - (m6.total - m6.periodic());
        diff = diff.max((d - t / PI * 1.2f64.ln()).abs());
    }
    let pass = e1 < 1e-12 && e5 < 1e-12 && e56 < 1e-12 && diff < 1e-10;
    outcome(pass, format!("N=1 err {e1:.1e}, N=5 err {e5:.1e}, N=5 vs 6 {e56:.1e}, log(6/5) identity {diff:.1e}"))
}

fn criterion_3() -> Outcome {
    let half = ComplexValue::new(0.5, 0.0);
    let mut exact = true;
    let mut limit = 0.0f64;
    let mut reflection = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [5u64, 6] {
        let p = builtin_profile(n).unwrap();
        exact &= scattering_det(&p, half).unwrap() == ComplexValue::new(-1.0, 0.0);
        for d in [ComplexValue::new(1e-9, 0.0), ComplexValue::new(0.0, 1e-9), ComplexValue::new(-1e-9, 1e-9)] {
            limit = limit.max((scattering_det(&p, half + d).unwrap() + 1.0).norm());
        }
        for _ in 0..100 {
            let s = ComplexValue::new(0.5, rng.gen_range(-200.0..200.0));
            let v = scattering_det(&p, s).unwrap() * scattering_det(&p, 1.0 - s).unwrap();
            reflection = reflection.max((v - 1.0).norm());
        }
    }
    let dn = [5u64, 6, 30, 210].iter().map(|&n| (dirichlet_factor(n, half) - 1.0).norm()).fold(0.0, f64::max);
    let pass = exact && limit < 1e-8 && reflection < 1e-10 && dn < 1e-12;
    outcome(pass, format!("exact -1: {exact}, limit {limit:.1e}, reflection {reflection:.1e}, D_N(1/2) {dn:.1e}"))
}

fn criterion_4() -> Outcome {
    let rs: Vec<f64> = (0..=12).map(|i| 5.0 * i as f64).collect();
    let ys = support::log_grid(1e-2, 1e2, 13);
    let mut rel = 0.0f64;
    let mut rel_amp = 0.0f64;
    let mut where_rel = (0.0, 0.0);
    let mut points = 0;
    for &r in &rs {
        for &y in &ys {
            let want = support::bessel_oracle(r, y);
            if want.abs() < 1e-280 {
                continue;
            }
            points += 1;
            let got = bessel_k_ir(r, y).unwrap();
            let err = (got - want).abs();
            if err / want.abs() > rel {
                rel = err / want.abs();
                where_rel = (r, y);
            }
            let scale = want.abs().max(bessel_k_ir_amplitude(r, y) * (-PI * r / 2.0).exp());
            rel_amp = rel_amp.max(err / scale);
        }
    }
    let ratio = |r: f64| bessel_k_ir(r, 50.0).unwrap() * (100.0 / PI).sqrt() * 50f64.exp();
    let (a0, a1) = (ratio(0.0), ratio(1.0));
    let pass = rel < 1e-10 && (a0 - 1.0).abs() < 0.01;
    outcome(
        pass,
        format!(
            "{points} grid points, max relative error {rel:.1e} at (r,y)=({}, {:.3}), relative to envelope {rel_amp:.1e}; \
             asymptotic ratio at y=50: r=0 {a0:.5}, r=1 {a1:.5}",
            where_rel.0, where_rel.1
        ),
    )
}

fn criterion_5(s: &Spectra) -> Outcome {
    let list = &s.list6;
    let t_end = 30.0;
    let opts = TuringOptions::default();
    let base = consecutiveness(list, &s.p6, &opts).unwrap();
    let end = averaged_s(list, &s.p6, t_end).unwrap();
    let mut identity = 0.0f64;
    let mut untripped = Vec::new();
    for (i, rec) in list.records.iter().enumerate() {
        let altered = remove(list, i + 1).unwrap();
        for &t in base.t_grid.iter().filter(|&&t| t > rec.r) {
            let shift = averaged_s(&altered, &s.p6, t).unwrap() - averaged_s(list, &s.p6, t).unwrap();
            identity = identity.max((shift + (1.0 - rec.r / t)).abs());
        }
        if rec.r <= t_end / 2.0 {
            let rep = consecutiveness(&altered, &s.p6, &opts).unwrap();
            if !matches!(rep.verdict, Verdict::MissingSuspected { .. }) {
                untripped.push(rec.n);
            }
        }
    }
    let pass = end.abs() <= 0.15 && base.verdict == Verdict::Consistent && identity < 1e-12 && untripped.is_empty();
    outcome(
        pass,
        format!(
            "{} eigenvalues, <S(30)> = {end:.4}, verdict {:?}, removal identity {identity:.1e}, \
             removals not flagged (r0 <= T/2): {untripped:?}",
            list.len(),
            base.verdict
        ),
    )
}

fn criterion_6(s: &Spectra) -> Outcome {
    let u = unfold(&s.list6, &s.p6).unwrap();
    let sp = spacings(&u).unwrap();
    let kp = ks_distance(&sp, Reference::Poisson).unwrap();
    let kg = ks_distance(&sp, Reference::Goe).unwrap();
    outcome(kp < kg, format!("{} spacings, KS Poisson {kp:.4} vs GOE {kg:.4}", sp.len()))
}

fn criterion_7(s: &Spectra) -> Outcome {
    let mut worst = 0.0f64;
    let mut all = true;
    let mut weakest_perturbed = f64::INFINITY;
    for (profile, forms, index) in [(&s.p5, &s.forms5, 2usize), (&s.p6, &s.forms6, 5)] {
        for c in forms.iter() {
            let v = c.verification.as_ref().unwrap();
            let tol = tol_hecke(c.params.eps);
            match v.hecke_defect() {
                Some(d) if d < tol => worst = worst.max(d),
                _ => all = false,
            }
            let count = HECKE_INDEX.max(c.params.m0);
            let mut a = expansion_coefficients(profile, c, count).unwrap();
            a[index - 1] += 1e-3;
            let d = multiplicativity_defect(&a, profile.level, count).unwrap().defect;
            weakest_perturbed = weakest_perturbed.min(d / tol);
        }
    }
    let n = s.forms5.len() + s.forms6.len();
    outcome(
        all && weakest_perturbed > 1.0,
        format!("{n} forms, worst defect {worst:.1e}; perturbed defect at least {weakest_perturbed:.1e} x tolerance"),
    )
}

fn criterion_8() -> Outcome {
    let x = synthetic_levels(5000, 8);
    let a = independence_demo(&x, &|t| 0.25 * t * t + 0.3 * t).unwrap();
    let b = independence_demo(&x, &|t| t * t * t / 3.0 + t).unwrap();
    let same = a.lattice_spacings.len() == b.lattice_spacings.len()
        && a.lattice_spacings.iter().zip(&b.lattice_spacings).all(|(p, q)| p.to_bits() == q.to_bits());
    let raw = a.spacings.iter().zip(&b.spacings).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    outcome(same, format!("{} spacings bit-identical: {same} (unquantised difference {raw:.1e})", a.spacings.len()))
}

fn random_word(profile: &GroupProfile, rng: &mut ChaCha8Rng) -> GroupElement {
    let mut g = GroupElement::IDENTITY;
    for _ in 0..rng.gen_range(1..=6) {
        let h = profile.generators[rng.gen_range(0..profile.generators.len())];
        let h = if rng.gen_bool(0.5) { h.inverse() } else { h };
        g = h.compose(&g).unwrap();
    }
    g
}

/// `word·z` is formed only through exact integer elements: evaluating it in
/// floating point first would lose up to eight digits when the word sends `z`
/// very close to the real axis, which says nothing about the pullback.
fn criterion_9() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_float = 0.0f64;
    let mut failures = 0;
    let mut mismatched = 0;
    let mut trials = 0;
    for n in [1u64, 5, 6] {
        let p = builtin_profile(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9 + n);
        for _ in 0..10_000 {
            trials += 1;
            let z = UpperHalfPoint::new(rng.gen_range(-2.0..2.0), 10f64.powf(rng.gen_range(-2.0..0.5))).unwrap();
            let word = random_word(&p, &mut rng);
            let w = apply(&word, z);
            match (pullback(z, &p), pullback(w, &p)) {
                (Ok(a), Ok(b)) => {
                    let total = b.element.compose(&word).unwrap();
                    if total != a.element {
                        mismatched += 1;
                    }
                    worst = worst.max(hyperbolic_distance(a.point, apply(&total, z)));
                    worst_float = worst_float.max(hyperbolic_distance(a.point, b.point));
                }
                _ => failures += 1,
            }
        }
    }
    outcome(
        failures == 0 && mismatched == 0 && worst < 1e-10,
        format!(
            "{trials} pairs, {failures} without termination, {mismatched} with different reducing elements, \
             worst hyperbolic distance {worst:.1e} (from a rounded word·z: {worst_float:.1e})"
        ),
    )
}

fn main() -> ExitCode {
    let spectra = compute_spectra();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("published low spectrum", Box::new(|| criterion_1(&spectra))),
        ("Weyl constants", Box::new(criterion_2)),
        ("scattering identities", Box::new(criterion_3)),
        ("Bessel oracle", Box::new(criterion_4)),
        ("consecutiveness", Box::new(|| criterion_5(&spectra))),
        ("spacing statistics", Box::new(|| criterion_6(&spectra))),
        ("Hecke verification", Box::new(|| criterion_7(&spectra))),
        ("unfolding independence", Box::new(criterion_8)),
        ("pullback correctness", Box::new(criterion_9)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{failed} of {} criteria failed", criteria.len());
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
