mod config;
mod output;

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use maass::group::GroupProfile;
use maass::hejhal::{scan_with_log, CuspFormCandidate, ScanEvent, DEFAULT_EPS, DEFAULT_GRID_STEP, DEFAULT_NUM_Y};
use maass::io::{format_sig15, load_list, save_list, tsv};
use maass::special::{bessel_k_ir, bessel_k_ir_scaled};
use maass::spectrum::{EigenvalueList, ListMetadata};
use maass::stats::{
    freedman_diaconis_bins, independence_demo, joint_histogram, ks_distance, reference_pdf, spacing_histogram,
    spacings, synthetic_levels, unfold, Reference,
};
use maass::turing::{consecutiveness, inject, remove, TuringOptions, TuringReport, Verdict};
use maass::weyl::main_term;
use serde::Serialize;

use config::{config_err, config_hash, load_profile, profile_label, ConfigError, RunConfig};
use output::{check_reuse, ensure_dir, write, write_json};

const EXIT_CONFIG: u8 = 2;
const EXIT_COMPUTE: u8 = 3;
const EXIT_REJECTIONS: u8 = 4;

#[derive(Parser)]
#[command(name = "maass", version, about = "Maass cusp forms and spectral statistics for the groups Γ₀(N)⁺")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Search an interval of spectral parameters for cusp forms.
    Scan(ScanArgs),
    /// Print the terms of the average Weyl law.
    Weyl(WeylArgs),
    /// Test a list for missing or extra eigenvalues.
    Turing(TuringArgs),
    /// Spacing statistics of an unfolded list.
    Stats(StatsArgs),
    /// Show that unfolded spacings do not depend on the unfolding function.
    DemoIndependence(DemoArgs),
    /// Tabulate K_{ir}(x).
    BesselTable(BesselArgs),
}

#[derive(Args)]
struct GroupArgs {
    /// Level N of a built-in group (1, 5 or 6).
    #[arg(long)]
    group: Option<u64>,
    /// Group profile in JSON, for other groups.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    #[arg(long, default_value_t = 0.0)]
    r_lo: f64,
    #[arg(long)]
    r_hi: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    grid_step: f64,
    /// Number of random heights in the verification.
    #[arg(long, default_value_t = DEFAULT_NUM_Y)]
    num_y: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    block_width: f64,
    #[arg(long)]
    out: PathBuf,
    /// Overwrite results of a different configuration.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct WeylArgs {
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long = "t", required = true, num_args = 1..)]
    t: Vec<f64>,
    /// Write the table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TuringArgs {
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long)]
    list: PathBuf,
    /// Add a fake eigenvalue λ.
    #[arg(long, conflicts_with = "remove")]
    inject: Option<f64>,
    /// Drop the n-th eigenvalue (1-based).
    #[arg(long)]
    remove: Option<usize>,
    #[arg(long, default_value_t = 0.15)]
    band: f64,
    #[arg(long, default_value_t = 400)]
    points: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long)]
    list: PathBuf,
    /// Histogram bins (default: Freedman-Diaconis).
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 2000)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BesselArgs {
    #[arg(long = "r", required = true, num_args = 1..)]
    r: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    x_min: f64,
    #[arg(long, default_value_t = 50.0)]
    x_max: f64,
    #[arg(long, default_value_t = 50)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: cannot start {n} workers");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let result = match cli.cmd {
        Cmd::Scan(a) => cmd_scan(a),
        Cmd::Weyl(a) => cmd_weyl(a),
        Cmd::Turing(a) => cmd_turing(a),
        Cmd::Stats(a) => cmd_stats(a),
        Cmd::DemoIndependence(a) => cmd_demo(a),
        Cmd::BesselTable(a) => cmd_bessel(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_COMPUTE)
            }
        }
    }
}

fn profile_for(g: &GroupArgs, fallback: Option<u64>) -> anyhow::Result<GroupProfile> {
    load_profile(g.group.or(fallback), g.profile.as_deref())
}

fn read_list(path: &std::path::Path) -> anyhow::Result<EigenvalueList> {
    load_list(path).map_err(|e| config_err(format!("cannot load {}: {e}", path.display())))
}

#[derive(Serialize)]
struct FormSummary {
    n: usize,
    r: f64,
    lambda: f64,
    parity: maass::hejhal::Parity,
    cond: f64,
    max_residual: f64,
    hecke_defect: Option<f64>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    group: u64,
    meta: &'a ListMetadata,
    config: &'a RunConfig,
    count: usize,
    forms: Vec<FormSummary>,
    rejected: usize,
    /// Rejected candidates that passed the height test but not the Hecke test.
    near_misses: Vec<f64>,
    failures: Vec<String>,
}

fn cmd_scan(a: ScanArgs) -> anyhow::Result<u8> {
    let profile = profile_for(&a.group, None)?;
    let cfg = RunConfig {
        group: profile.level,
        profile: profile_label(a.group.profile.as_ref()),
        eps: a.eps,
        r_lo: a.r_lo,
        r_hi: a.r_hi,
        grid_step: a.grid_step,
        num_y: a.num_y,
        seed: a.seed,
        block_width: a.block_width,
    };
    cfg.validate()?;
    let hash = cfg.hash();
    ensure_dir(&a.out)?;
    let csv = a.out.join("eigenvalues.csv");
    check_reuse(&csv, &hash, a.force)?;

    let log_path = a.out.join("scan.jsonl");
    let mut log = BufWriter::new(File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?);
    let mut failures = Vec::new();
    let mut io_error = None;
    let outcome = scan_with_log(&profile, a.r_lo, a.r_hi, &cfg.scan_options(), &mut |e| {
        if let ScanEvent::Failure { r, message, .. } = e {
            failures.push(format!("r={r}: {message}"));
        }
        let line = serde_json::to_string(e).expect("event serialises");
        if let Err(err) = writeln!(log, "{line}") {
            io_error.get_or_insert(err);
        }
    })?;
    if let Some(e) = io_error {
        return Err(e).context("writing scan log");
    }
    log.flush()?;

    let meta = ListMetadata {
        eps: a.eps,
        r_lo: a.r_lo,
        r_hi: a.r_hi,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: hash,
    };
    let list = EigenvalueList::new(profile.level, outcome.rs(), meta)?;
    save_list(&list, &csv)?;

    let coeff_dir = a.out.join("coefficients");
    ensure_dir(&coeff_dir)?;
    for (i, cand) in outcome.accepted.iter().enumerate() {
        write_json(&coeff_dir.join(format!("form_{:04}.json", i + 1)), cand)?;
    }
    let summary = |(i, c): (usize, &CuspFormCandidate)| {
        let v = c.verification.as_ref().expect("scan verifies every candidate");
        FormSummary {
            n: i + 1,
            r: list.records[i].r,
            lambda: list.records[i].lambda,
            parity: c.parity,
            cond: c.cond,
            max_residual: v.max_residual,
            hecke_defect: v.hecke_defect(),
        }
    };
    let near_misses: Vec<f64> = outcome
        .rejected
        .iter()
        .filter(|c| c.verification.as_ref().is_some_and(|v| v.hecke.is_some()))
        .map(|c| c.r)
        .collect();
    let sidecar = Sidecar {
        group: list.group,
        meta: &list.meta,
        config: &cfg,
        count: list.len(),
        forms: outcome.accepted.iter().enumerate().map(summary).collect(),
        rejected: outcome.rejected.len(),
        near_misses: near_misses.clone(),
        failures: failures.clone(),
    };
    write_json(&a.out.join("eigenvalues.json"), &sidecar)?;

    println!("{} cusp forms with {} <= r <= {} written to {}", list.len(), a.r_lo, a.r_hi, csv.display());
    for e in &list.records {
        println!("{:>5}  r = {}  lambda = {}", e.n, format_sig15(e.r), format_sig15(e.lambda));
    }
    if !near_misses.is_empty() || !failures.is_empty() {
        eprintln!(
            "warning: {} candidates failed only the Hecke test, {} roots could not be solved",
            near_misses.len(),
            failures.len()
        );
        return Ok(EXIT_REJECTIONS);
    }
    Ok(0)
}

fn cmd_weyl(a: WeylArgs) -> anyhow::Result<u8> {
    let profile = profile_for(&a.group, None)?;
    if let Some(t) = a.t.iter().find(|t| !(**t > 1.0)) {
        return Err(config_err(format!("the Weyl law needs T > 1, got {t}")));
    }
    let rows = a
        .t
        .iter()
        .map(|&t| {
            let w = main_term(&profile, t)?;
            Ok(vec![
                t,
                w.quadratic,
                w.tlogt,
                w.linear,
                w.elliptic_const,
                w.volume_const,
                w.spectral_const,
                w.constant(),
                w.sawtooth,
                w.arctan_term,
                w.g_bound,
                w.total,
            ])
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let header = [
        "T",
        "quadratic",
        "tlogt",
        "linear",
        "elliptic_const",
        "volume_const",
        "spectral_const",
        "constant",
        "sawtooth",
        "arctan",
        "g_bound",
        "total",
    ];
    let text = tsv(&[("group", profile.level.to_string())], &header, rows);
    match a.out {
        Some(p) => write(&p, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

#[derive(Serialize)]
struct TuringOutput {
    list_config_hash: String,
    alteration: Option<String>,
    report: TuringReport,
    altered: Option<TuringReport>,
}

fn cmd_turing(a: TuringArgs) -> anyhow::Result<u8> {
    let list = read_list(&a.list)?;
    let profile = profile_for(&a.group, Some(list.group))?;
    let opts = TuringOptions { base_band: a.band, points: a.points, ..TuringOptions::default() };
    let report = consecutiveness(&list, &profile, &opts)?;
    let (alteration, altered_list) = match (a.inject, a.remove) {
        (Some(l), _) => (Some(format!("inject lambda={l}")), Some(inject(&list, l).map_err(|e| config_err(e.to_string()))?)),
        (_, Some(n)) => (Some(format!("remove n={n}")), Some(remove(&list, n).map_err(|e| config_err(e.to_string()))?)),
        _ => (None, None),
    };
    let altered = altered_list.map(|l| consecutiveness(&l, &profile, &opts)).transpose()?;
    ensure_dir(&a.out)?;
    let meta = [("group", list.group.to_string()), ("config_hash", list.meta.config_hash.clone())];
    let rows = (0..report.t_grid.len()).map(|i| {
        let mut row = vec![report.t_grid[i], report.avg_s[i], report.band[i]];
        if let Some(alt) = &altered {
            row.push(alt.avg_s[i]);
        }
        row
    });
    let header: &[&str] =
        if altered.is_some() { &["T", "avg_s", "band", "avg_s_altered"] } else { &["T", "avg_s", "band"] };
    write(&a.out.join("turing.tsv"), &tsv(&meta, header, rows))?;
    let consistent = report.verdict == Verdict::Consistent;
    println!("list: {:?}, mean fluctuation at T = {}: {:.4}", report.verdict, list.meta.r_hi, report.drift_at_end);
    if let Some(alt) = &altered {
        println!("{}: {:?}, mean fluctuation at the end: {:.4}", alteration.as_deref().unwrap_or(""), alt.verdict, alt.drift_at_end);
    }
    let out = TuringOutput { list_config_hash: list.meta.config_hash.clone(), alteration, report, altered };
    write_json(&a.out.join("turing.json"), &out)?;
    Ok(if consistent { 0 } else { EXIT_REJECTIONS })
}

#[derive(Serialize)]
struct KsSummary {
    list_config_hash: String,
    spacings: usize,
    mean_spacing: f64,
    ks_poisson: f64,
    ks_goe: f64,
    closer_to: Reference,
}

fn cmd_stats(a: StatsArgs) -> anyhow::Result<u8> {
    let list = read_list(&a.list)?;
    let profile = profile_for(&a.group, Some(list.group))?;
    let u = unfold(&list, &profile)?;
    let s = spacings(&u)?;
    let bins = a.bins.unwrap_or_else(|| freedman_diaconis_bins(&s));
    let meta = [("group", list.group.to_string()), ("config_hash", list.meta.config_hash.clone())];
    ensure_dir(&a.out)?;
    write(
        &a.out.join("spacings.tsv"),
        &tsv(&meta, &["n", "u", "s"], s.iter().enumerate().map(|(i, v)| vec![(i + 1) as f64, u.u[i], *v])),
    )?;
    match spacing_histogram(&s, bins) {
        Ok(h) => {
            let rows = h.centers().into_iter().zip(&h.density).map(|(c, d)| {
                vec![c, *d, reference_pdf(Reference::Poisson, c).unwrap_or(0.0), reference_pdf(Reference::Goe, c).unwrap_or(0.0)]
            });
            write(&a.out.join("histogram.tsv"), &tsv(&meta, &["bin_center", "density", "poisson", "goe"], rows))?;
        }
        Err(e) => eprintln!("warning: histogram skipped: {e}"),
    }
    let jbins = (bins / 2).max(1);
    match joint_histogram(&s, jbins) {
        Ok(j) => {
            let centers: Vec<f64> = j.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            let rows = (0..jbins).flat_map(|i| {
                let (centers, j) = (&centers, &j);
                (0..jbins).map(move |k| vec![centers[i], centers[k], j.density[i][k]])
            });
            write(&a.out.join("joint.tsv"), &tsv(&meta, &["s", "s_next", "density"], rows))?;
        }
        Err(e) => eprintln!("warning: joint histogram skipped: {e}"),
    }
    let (kp, kg) = (ks_distance(&s, Reference::Poisson)?, ks_distance(&s, Reference::Goe)?);
    let summary = KsSummary {
        list_config_hash: list.meta.config_hash.clone(),
        spacings: s.len(),
        mean_spacing: s.iter().sum::<f64>() / s.len() as f64,
        ks_poisson: kp,
        ks_goe: kg,
        closer_to: if kp <= kg { Reference::Poisson } else { Reference::Goe },
    };
    println!("{} spacings, mean {:.4}; KS distance to Poisson {kp:.4}, to GOE {kg:.4}", s.len(), summary.mean_spacing);
    write_json(&a.out.join("ks.json"), &summary)?;
    Ok(0)
}

#[derive(Serialize)]
struct DemoSummary {
    config_hash: String,
    count: usize,
    seed: u64,
    max_u_error: [f64; 2],
    identical_lattice_spacings: bool,
}

fn cmd_demo(a: DemoArgs) -> anyhow::Result<u8> {
    if a.count < 2 {
        return Err(config_err("--count must be at least 2"));
    }
    let x = synthetic_levels(a.count, a.seed);
    let weyl_like = |t: f64| 0.25 * t * t + 0.3 * t;
    let cubic = |t: f64| t * t * t / 3.0 + t;
    let r1 = independence_demo(&x, &weyl_like)?;
    let r2 = independence_demo(&x, &cubic)?;
    let identical = r1.lattice_spacings.iter().zip(&r2.lattice_spacings).all(|(p, q)| p.to_bits() == q.to_bits());
    let hash = config_hash(&(a.count, a.seed));
    ensure_dir(&a.out)?;
    let rows = (0..x.len() - 1).map(|i| vec![x[i], r1.lambda[i], r2.lambda[i], r1.lattice_spacings[i], r2.lattice_spacings[i]]);
    write(
        &a.out.join("demo.tsv"),
        &tsv(&[("config_hash", hash.clone())], &["x", "lambda_quadratic", "lambda_cubic", "s_quadratic", "s_cubic"], rows),
    )?;
    let summary = DemoSummary {
        config_hash: hash,
        count: a.count,
        seed: a.seed,
        max_u_error: [r1.max_u_error, r2.max_u_error],
        identical_lattice_spacings: identical,
    };
    write_json(&a.out.join("demo.json"), &summary)?;
    println!("spacings identical under both unfoldings: {identical}");
    Ok(if identical { 0 } else { EXIT_COMPUTE })
}

fn cmd_bessel(a: BesselArgs) -> anyhow::Result<u8> {
    if !(a.x_min > 0.0 && a.x_max > a.x_min) || a.points < 2 {
        return Err(config_err("need 0 < x-min < x-max and at least 2 points"));
    }
    let ratio = a.x_max / a.x_min;
    let mut rows = Vec::new();
    for &r in &a.r {
        for i in 0..a.points {
            let x = a.x_min * ratio.powf(i as f64 / (a.points - 1) as f64);
            rows.push(vec![r, x, bessel_k_ir(r, x)?, bessel_k_ir_scaled(r, x)?]);
        }
    }
    let text = tsv(&[], &["r", "x", "k_ir", "k_ir_scaled"], rows);
    match a.out {
        Some(p) => write(&p, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}
