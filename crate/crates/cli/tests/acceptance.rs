//! Acceptance criteria at full size. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use horoflow::planar_toy::{gaussian_packet, planar_bump, planar_flat, resolvent_round_trip, SliceGrid};
use horoflow_cli::commands::{cmd_mourre, cmd_spectrum, cmd_verify};
use horoflow_cli::config::ExperimentConfig;
use horoflow_cli::manifest::RunManifest;
use horoflow_cli::suites::Check;
use num_complex::Complex64;

struct Outcome {
    pass: bool,
    detail: String,
    runtime: Duration,
    limit: Duration,
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&configs().join(name)).unwrap()
}

fn find<'a>(m: &'a RunManifest, name: &str) -> &'a Check {
    m.checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

fn describe(checks: &[&Check]) -> (bool, String) {
    let pass = checks.iter().all(|c| c.pass);
    let text = checks
        .iter()
        .map(|c| {
            let op = match c.bound {
                horoflow_cli::suites::Bound::AtMost => "<=",
                horoflow_cli::suites::Bound::AtLeast => ">=",
            };
            format!("{} {:.3e} {op} {:.3e}", c.name, c.value, c.limit)
        })
        .collect::<Vec<_>>()
        .join("; ");
    (pass, text)
}

fn secs(m: &RunManifest, stages: &[&str]) -> Duration {
    Duration::from_secs_f64(stages.iter().map(|s| m.timings.get(*s).copied().unwrap_or(0.0)).sum())
}

fn outcome(checks: &[&Check], runtime: Duration, limit: Duration) -> Outcome {
    let (pass, detail) = describe(checks);
    Outcome {
        pass,
        detail,
        runtime,
        limit,
    }
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().unwrap();
    let dir = |name: &str| tmp.path().join(name);
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();

    // 1 to 5 share one verify run at the shipped sizes
    let verify_cfg = load("verify.toml");
    let v = cmd_verify(&verify_cfg, &dir("verify")).unwrap();
    results.push((
        1,
        "conjugation law",
        outcome(
            &[
                find(&v, "conjugation_law"),
                find(&v, "one_parameter_laws"),
                find(&v, "bolza_flow_conjugation"),
            ],
            secs(&v, &["mobius", "flows"]),
            Duration::from_secs(10),
        ),
    ));
    let surface: Vec<&Check> = v.checks.iter().filter(|c| c.suite == "surface").collect();
    results.push((
        2,
        "Bolza relation and reduction",
        outcome(&surface, secs(&v, &["surface"]), Duration::from_secs(30)),
    ));
    let time_change: Vec<&Check> = v
        .checks
        .iter()
        .filter(|c| c.name.ends_with("_quadrature_identity") || c.name.ends_with("_cocycle"))
        .collect();
    results.push((
        3,
        "time-change correctness",
        outcome(&time_change, secs(&v, &["flows"]), Duration::from_secs(120)),
    ));
    let defects: Vec<&Check> = v
        .checks
        .iter()
        .filter(|c| c.name.ends_with("_commutator_defect") || c.name.ends_with("_halving_ratio"))
        .collect();
    results.push((
        4,
        "commutator identity",
        outcome(&defects, secs(&v, &["calculus"]), Duration::from_secs(120)),
    ));
    results.push((
        5,
        "H^2 commutator cross-check",
        outcome(
            &[find(&v, "planar_hsq_cross_check")],
            secs(&v, &["calculus"]),
            Duration::from_secs(120),
        ),
    ));

    let start = Instant::now();
    let psi = gaussian_packet((0.2, 0.1), 1.0);
    let grid = SliceGrid {
        half_width: 7.0,
        cell: 0.02,
        panel: 1.0,
    };
    let mut worst = 0.0f64;
    for tc in [planar_flat(), planar_bump(0.8, 1.0)] {
        for z in [
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(1.0, 1.0),
        ] {
            let r = resolvent_round_trip(z, &psi, &tc, &grid).unwrap_or(f64::INFINITY);
            worst = if r.is_nan() { f64::INFINITY } else { worst.max(r) };
        }
    }
    let rt = Check::at_most("resolvent", "round_trip_l2_relative", worst, 1e-6);
    results.push((
        6,
        "resolvent identity",
        outcome(&[&rt], start.elapsed(), Duration::from_secs(60)),
    ));

    let bump = load("planar_bump.toml");
    let start = Instant::now();
    let (m7, reports) = cmd_mourre(&bump, &dir("mourre")).unwrap();
    let elapsed = start.elapsed();
    let slack: Vec<&Check> = m7.checks.iter().filter(|c| c.suite == "mourre").collect();
    let mut o7 = outcome(&slack, elapsed, Duration::from_secs(300));
    o7.pass &= reports.len() == 5;
    o7.detail = format!("delta_g {:.4}; {}", reports[0].delta_g, o7.detail);
    results.push((7, "strict Mourre estimate", o7));

    let start = Instant::now();
    let flat = cmd_spectrum(&load("planar_flat.toml"), &dir("flat")).unwrap();
    let bumped = cmd_spectrum(&bump, &dir("bump")).unwrap();
    let c8 = [
        Check::at_most(
            "spectrum",
            "flat_oracle_l1",
            flat.oracle_l1.unwrap_or(f64::INFINITY),
            0.05,
        ),
        Check::at_most(
            "spectrum",
            "bump_oracle_l1",
            bumped.oracle_l1.unwrap_or(f64::INFINITY),
            0.05,
        ),
    ];
    results.push((
        8,
        "pipeline vs exact spectrum",
        outcome(&[&c8[0], &c8[1]], start.elapsed(), Duration::from_secs(900)),
    ));

    let bolza_cfg = load("bolza_spectrum.toml");
    let start = Instant::now();
    let run9 = cmd_spectrum(&bolza_cfg, &dir("bolza")).unwrap();
    let elapsed = start.elapsed();
    let m9 = &run9.manifest;
    let mut o9 = outcome(
        &[
            find(m9, "verdict"),
            find(m9, "atom_scan_decreasing"),
            find(m9, "atom_scan_over_noise_floor"),
            find(m9, "negativity_deficit"),
        ],
        elapsed,
        Duration::from_secs(1800),
    );
    let s = &run9.scan;
    o9.detail = format!(
        "scan {:.3e} > {:.3e} > {:.3e}, floor {:.3e}; {}",
        s.values[0], s.values[1], s.values[2], s.noise_floors[2], o9.detail
    );
    results.push((9, "hyperbolic diagnostics", o9));

    // the binary rerun must reproduce the in-process CSVs byte for byte
    let start = Instant::now();
    let reruns = [
        ("verify", "verify.toml", "verify"),
        ("mourre", "planar_bump.toml", "mourre"),
        ("spectrum", "bolza_spectrum.toml", "bolza"),
    ];
    let mut compared = 0;
    let mut differing = Vec::new();
    for (cmd, config, first) in reruns {
        let out = dir(&format!("rerun-{first}"));
        let status = Command::new(env!("CARGO_BIN_EXE_horoflow"))
            .args([cmd, "--config"])
            .arg(configs().join(config))
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap()
            .status;
        let (a, b) = (csv_files(&dir(first)), csv_files(&out));
        if status.code() == Some(2) || a.is_empty() || a.keys().ne(b.keys()) {
            differing.push(format!("{first}: file set"));
            continue;
        }
        for (name, bytes) in &a {
            compared += 1;
            if b[name] != *bytes {
                differing.push(format!("{first}/{name}"));
            }
        }
    }
    let o10 = Outcome {
        pass: differing.is_empty(),
        detail: if differing.is_empty() {
            format!("{compared} CSV files byte-identical across reruns")
        } else {
            format!("differing: {}", differing.join(", "))
        },
        runtime: start.elapsed(),
        limit: Duration::MAX,
    };
    results.push((10, "reproducibility", o10));

    let mut all = true;
    for (n, title, o) in &results {
        let in_time = o.runtime <= o.limit;
        let pass = o.pass && in_time;
        all &= pass;
        let budget = if o.limit == Duration::MAX {
            String::new()
        } else {
            format!(" / {} s", o.limit.as_secs())
        };
        println!(
            "{} criterion {n:>2} {title}: {} [{:.1} s{budget}{}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            o.runtime.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
