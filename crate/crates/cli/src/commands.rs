use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use horoflow::calculus::{check_assumption, AssumptionReport, ScalarField, TimeChange};
use horoflow::flows::{FlowBackend, HyperbolicBackend, PlanarBackend};
use horoflow::planar_toy::{
    exact_spectrum, hermite_packet, mourre_check, pipeline_field, planar_bump, MourreGrid, MourreReport, SliceGrid,
};
use horoflow::sampling::PhaseSampler;
use horoflow::spectral::{
    atom_scan, correlation, decay_report, deficit_bound, density, AtomScan, CorrelationConfig, CorrelationSeries,
    DensityGrid, Sidecar, SpectralDensity, Window,
};
use horoflow::surface::{BolzaSampler, FuchsianGroup};
use serde_json::json;

use crate::config::{BackendKind, ExperimentConfig, ObservableSpec, TimeChangeSpec};
use crate::manifest::{load_manifests, sha256_hex, OutDir, RunManifest};
use crate::suites::{
    calculus_suite, checks_csv, flows_suite, mobius_suite, planar_suite_sampler, surface_suite, CalculusSuiteInput,
    Check, FlowSuiteInput,
};

/// Largest accepted ratio of the final atom-scan value to its noise floor.
pub const ATOM_FLOOR_FACTOR: f64 = 3.0;
/// Largest accepted relative L1 distance between pipeline and oracle densities.
pub const ORACLE_L1_LIMIT: f64 = 0.05;

fn manifest(cfg: &ExperimentConfig, command: &str) -> RunManifest {
    let mut versions = BTreeMap::new();
    versions.insert("horoflow".to_string(), env!("CARGO_PKG_VERSION").to_string());
    versions.insert("config".to_string(), cfg.version.to_string());
    RunManifest {
        command: command.into(),
        config_hash: config_hash(cfg),
        seed: cfg.seed,
        versions,
        timings: BTreeMap::new(),
        files: Vec::new(),
        checks: Vec::new(),
        pass: false,
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(cfg.to_toml().as_bytes())
}

fn open(cfg: &ExperimentConfig, out: &Path) -> Result<OutDir> {
    let mut dir = OutDir::create(out)?;
    dir.write("config.toml", &cfg.to_toml())?;
    Ok(dir)
}

struct Timer(Instant);

impl Timer {
    fn start() -> Self {
        Timer(Instant::now())
    }
    fn lap(&mut self, m: &mut RunManifest, stage: &str) {
        m.timings.insert(stage.into(), self.0.elapsed().as_secs_f64());
        self.0 = Instant::now();
    }
}

fn shipped_bolza_tc(
    cfg: &ExperimentConfig,
    group: std::sync::Arc<FuchsianGroup>,
) -> Result<TimeChange<HyperbolicBackend>> {
    if cfg.backend == BackendKind::Bolza {
        return cfg.bolza_time_change(group);
    }
    let shipped = ExperimentConfig {
        backend: BackendKind::Bolza,
        time_change: TimeChangeSpec::Poincare {
            epsilon: 0.2,
            beta: 2.0,
            radius: horoflow::surface::MAX_ENUMERATION_RADIUS,
            center: [0.1, 1.2],
        },
        ..cfg.clone()
    };
    shipped.bolza_time_change(group)
}

fn shipped_planar_tc(cfg: &ExperimentConfig) -> Result<TimeChange<PlanarBackend>> {
    if cfg.backend == BackendKind::Planar {
        return cfg.planar_time_change();
    }
    Ok(planar_bump(0.8, 1.0).with_step(cfg.tolerances.fd_step)?)
}

/// Runs the invariant suites of the geometric and calculus layers.
pub fn cmd_verify(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    let mut m = manifest(cfg, "verify");
    let mut dir = open(cfg, out)?;
    let mut timer = Timer::start();
    let group = cfg.group()?;
    let v = &cfg.verify;
    let seed = cfg.seed;

    m.checks.extend(mobius_suite(v.points, seed));
    timer.lap(&mut m, "mobius");
    m.checks.extend(surface_suite(&group, v.points, seed));
    timer.lap(&mut m, "surface");

    let bolza = shipped_bolza_tc(cfg, group.clone())?;
    let planar = shipped_planar_tc(cfg)?;
    let bolza_sampler = BolzaSampler { group: group.clone() };
    let planar_sampler = planar_suite_sampler();
    m.checks.extend(flows_suite(&FlowSuiteInput {
        bolza: &bolza,
        bolza_sampler: &bolza_sampler,
        planar: &planar,
        planar_sampler: &planar_sampler,
        conjugation_cases: v.points,
        cases: v.flow_cases,
        seed,
        tol: cfg.tolerances.ode,
    }));
    timer.lap(&mut m, "flows");

    let bolza_field = match (&cfg.observable, cfg.backend) {
        (ObservableSpec::Poincare { .. }, BackendKind::Bolza) => cfg.bolza_observable(group.clone())?,
        _ => ExperimentConfig {
            backend: BackendKind::Bolza,
            observable: ObservableSpec::Poincare {
                beta: 2.0,
                radius: horoflow::surface::MAX_ENUMERATION_RADIUS,
                center: [0.1, 1.2],
            },
            ..cfg.clone()
        }
        .bolza_observable(group.clone())?,
    };
    let planar_field = match (&cfg.observable, cfg.backend) {
        (ObservableSpec::Gaussian { .. } | ObservableSpec::Hermite { .. }, BackendKind::Planar) => {
            cfg.planar_observable()?
        }
        _ => hermite_packet((0.2, 0.3), 1.0),
    };
    m.checks.extend(calculus_suite(&CalculusSuiteInput {
        bolza_backend: bolza.backend(),
        bolza_field: &bolza_field,
        bolza_sampler: &bolza_sampler,
        planar_tc: &planar,
        planar_field: &planar_field,
        planar_sampler: &planar_sampler,
        defect_points: v.defect_points,
        hsq_points: v.hsq_points,
        seed,
        step: cfg.tolerances.fd_step,
    }));
    timer.lap(&mut m, "calculus");

    dir.write("verify.csv", &checks_csv(&m.checks))?;
    dir.finish(m)
}

fn assumption_on<B, S>(tc: &TimeChange<B>, sampler: &S, n: usize, seed: u64) -> Result<AssumptionReport>
where
    B: FlowBackend,
    S: PhaseSampler<B::Point>,
{
    Ok(check_assumption(tc, sampler, n, seed)?)
}

fn run_assumption(cfg: &ExperimentConfig) -> Result<AssumptionReport> {
    let n = cfg
        .assumption
        .as_ref()
        .context("the [assumption] section is required")?
        .n_samples;
    match cfg.backend {
        BackendKind::Bolza => {
            let group = cfg.group()?;
            let tc = cfg.bolza_time_change(group.clone())?;
            assumption_on(&tc, &BolzaSampler { group }, n, cfg.seed)
        }
        BackendKind::Planar => assumption_on(&cfg.planar_time_change()?, &cfg.planar_sampler(), n, cfg.seed),
    }
}

fn assumption_checks(rep: &AssumptionReport) -> Vec<Check> {
    vec![
        Check::at_least("assumption", "delta_f", rep.delta_f, f64::MIN_POSITIVE),
        Check::at_least("assumption", "delta_g", rep.delta_g, f64::MIN_POSITIVE),
    ]
}

/// Sampled and refined positivity margins of `f` and `g`.
pub fn cmd_assumption(cfg: &ExperimentConfig, out: &Path) -> Result<(RunManifest, AssumptionReport)> {
    let mut m = manifest(cfg, "assumption");
    let mut dir = open(cfg, out)?;
    let mut timer = Timer::start();
    let rep = run_assumption(cfg)?;
    timer.lap(&mut m, "check");
    dir.write("assumption.txt", &rep.to_text())?;
    dir.write("assumption.json", &(serde_json::to_string_pretty(&rep)? + "\n"))?;
    m.checks = assumption_checks(&rep);
    m.checks.push(Check::holds("assumption", "verdict", rep.pass));
    Ok((dir.finish(m)?, rep))
}

/// Everything `cmd_spectrum` computes, for callers that want the numbers.
#[derive(Debug, Clone)]
pub struct SpectrumRun {
    pub manifest: RunManifest,
    pub series: CorrelationSeries,
    pub scan: AtomScan,
    pub density: SpectralDensity,
    pub deficit_bound: f64,
    pub oracle: Option<SpectralDensity>,
    pub oracle_l1: Option<f64>,
    pub assumption: Option<AssumptionReport>,
}

fn scan_csv(scan: &AtomScan) -> String {
    let mut s = String::from("horizon,value,noise_floor\n");
    for i in 0..3 {
        let _ = writeln!(
            s,
            "{:.17e},{:.17e},{:.17e}",
            scan.horizons[i], scan.values[i], scan.noise_floors[i]
        );
    }
    s
}

fn correlate<B, S>(
    phi: &ScalarField<B::Point>,
    tc: &TimeChange<B>,
    sampler: &S,
    cfg: &ExperimentConfig,
) -> Result<CorrelationSeries>
where
    B: FlowBackend,
    S: PhaseSampler<B::Point>,
{
    let s = cfg.spectrum.as_ref().context("the [spectrum] section is required")?;
    let cc = CorrelationConfig {
        t_max: s.t_max,
        dt: s.dt,
        n: s.n_samples,
        seed: cfg.seed,
        tol: cfg.tolerances.ode,
        mean_subtracted: true,
    };
    Ok(correlation(phi, tc, sampler, &cc)?)
}

/// Correlation, atom scan, density and decay fit of the configured
/// observable, plus the exact density on the planar backend.
pub fn cmd_spectrum(cfg: &ExperimentConfig, out: &Path) -> Result<SpectrumRun> {
    let spec = cfg.spectrum.clone().context("the [spectrum] section is required")?;
    let window: Window = spec.window.parse().map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut m = manifest(cfg, "spectrum");
    let mut dir = open(cfg, out)?;
    let mut timer = Timer::start();
    let hash = m.config_hash.clone();

    let assumption = match cfg.assumption {
        Some(_) => {
            let rep = run_assumption(cfg)?;
            dir.write("assumption.txt", &rep.to_text())?;
            m.checks.push(Check::holds("assumption", "verdict", rep.pass));
            timer.lap(&mut m, "assumption");
            Some(rep)
        }
        None => None,
    };

    let (series, oracle) = match cfg.backend {
        BackendKind::Bolza => {
            let group = cfg.group()?;
            let tc = cfg.bolza_time_change(group.clone())?;
            let phi = cfg.bolza_observable(group.clone())?;
            (correlate(&phi, &tc, &BolzaSampler { group }, cfg)?, None)
        }
        BackendKind::Planar => {
            let tc = cfg.planar_time_change()?;
            let phi = cfg.planar_observable()?;
            let series = correlate(&pipeline_field(&phi, &tc), &tc, &cfg.planar_sampler(), cfg)?;
            timer.lap(&mut m, "correlation");
            let grid = DensityGrid::for_lags(series.k_max, series.dt);
            let oracle = exact_spectrum(&phi, &tc, &grid, &SliceGrid::default())?;
            (series, Some(oracle))
        }
    };
    timer.lap(&mut m, if oracle.is_some() { "oracle" } else { "correlation" });

    let scan = atom_scan(&series)?;
    let rho = density(&series, window)?;
    let bound = deficit_bound(&series, window);
    let decay = decay_report(&series);
    timer.lap(&mut m, "analysis");

    dir.write("correlation.csv", &series.to_csv())?;
    dir.write(
        "correlation.json",
        &(Sidecar::for_series(&series, &hash).to_json() + "\n"),
    )?;
    dir.write("atom_scan.csv", &scan_csv(&scan))?;
    dir.write("density.csv", &rho.to_csv())?;
    let mut side = Sidecar::for_series(&series, &hash);
    side.kind = "density".into();
    side.window = Some(window);
    side.half_width = rho.half_width;
    side.extra.insert("integral".into(), json!(rho.integral));
    side.extra
        .insert("negativity_deficit".into(), json!(rho.negativity_deficit));
    side.extra.insert("deficit_bound".into(), json!(bound));
    side.extra.insert("decay".into(), serde_json::to_value(&decay)?);
    if let Some(w) = &series.warning {
        side.extra.insert("warning".into(), json!(w));
    }
    dir.write("density.json", &(side.to_json() + "\n"))?;

    m.checks.push(Check::at_most(
        "spectrum",
        "negativity_deficit",
        rho.negativity_deficit,
        bound,
    ));
    let mut oracle_l1 = None;
    if let Some(o) = &oracle {
        let l1 = rho.l1_relative(o)?;
        dir.write("oracle_density.csv", &o.to_csv())?;
        let mut side = Sidecar::for_series(&series, &hash);
        side.kind = "oracle_density".into();
        side.window = None;
        side.half_width = f64::MAX;
        side.extra.insert("integral".into(), json!(o.integral));
        side.extra.insert("pipeline_l1_relative".into(), json!(l1));
        dir.write("oracle_density.json", &(side.to_json() + "\n"))?;
        m.checks
            .push(Check::at_most("spectrum", "oracle_l1_relative", l1, ORACLE_L1_LIMIT));
        oracle_l1 = Some(l1);
    } else {
        m.checks
            .push(Check::holds("spectrum", "atom_scan_decreasing", scan.decreasing));
        m.checks.push(Check::at_most(
            "spectrum",
            "atom_scan_over_noise_floor",
            scan.value() / scan.noise_floor(),
            ATOM_FLOOR_FACTOR,
        ));
    }
    let manifest = dir.finish(m)?;
    Ok(SpectrumRun {
        manifest,
        series,
        scan,
        density: rho,
        deficit_bound: bound,
        oracle,
        oracle_l1,
        assumption,
    })
}

fn mourre_csv(reports: &[MourreReport]) -> String {
    let mut s = String::from("j_lo,j_hi,margin,delta_g,a,norm_sq,q,kinetic,slack\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.interval.0, r.interval.1, r.margin, r.delta_g, r.a, r.norm_sq, r.q, r.kinetic, r.slack
        );
    }
    s
}

/// Strict Mourre inequality on each configured interval (planar backend only).
pub fn cmd_mourre(cfg: &ExperimentConfig, out: &Path) -> Result<(RunManifest, Vec<MourreReport>)> {
    if cfg.backend != BackendKind::Planar {
        return Err(horoflow::Error::UnsupportedBackend("bolza"))
            .context("spectral projections of H^2 are only realized on the planar backend");
    }
    let intervals = cfg
        .mourre
        .as_ref()
        .context("the [mourre] section is required")?
        .intervals
        .clone();
    let mut m = manifest(cfg, "mourre");
    let mut dir = open(cfg, out)?;
    let mut timer = Timer::start();
    let rep = run_assumption(cfg)?;
    dir.write("assumption.txt", &rep.to_text())?;
    m.checks.extend(assumption_checks(&rep));
    timer.lap(&mut m, "assumption");
    if !(rep.delta_g > 0.0) {
        bail!(
            "assumption check gives delta_g = {}; the Mourre constant needs delta_g > 0",
            rep.delta_g
        );
    }
    let tc = cfg.planar_time_change()?.with_bounds(&rep);
    let psi = cfg.planar_observable()?;
    let reports = intervals
        .iter()
        .map(|j| mourre_check((j[0], j[1]), &psi, &tc, &MourreGrid::default()))
        .collect::<horoflow::Result<Vec<_>>>()?;
    timer.lap(&mut m, "mourre");
    for r in &reports {
        m.checks.push(Check::at_least(
            "mourre",
            &format!("slack_over_q[{},{}]", r.interval.0, r.interval.1),
            r.slack / r.q,
            -1e-6,
        ));
    }
    dir.write("mourre.csv", &mourre_csv(&reports))?;
    dir.write("mourre.json", &(serde_json::to_string_pretty(&reports)? + "\n"))?;
    Ok((dir.finish(m)?, reports))
}

/// Summarizes every manifest in `dir` and re-hashes the files they list.
pub fn cmd_report(dir: &Path) -> Result<(String, bool)> {
    let manifests = load_manifests(dir)?;
    if manifests.is_empty() {
        bail!("no manifest-*.json files in {}", dir.display());
    }
    let mut s = String::from("# horoflow run report\n\n");
    let mut ok = true;
    for m in &manifests {
        let _ = writeln!(s, "## {}\n", m.command);
        let _ = writeln!(s, "config sha256 `{}`, seed {}\n", m.config_hash, m.seed);
        s.push_str("| suite | check | value | limit | pass |\n|---|---|---|---|---|\n");
        for c in &m.checks {
            let op = match c.bound {
                crate::suites::Bound::AtMost => "<=",
                crate::suites::Bound::AtLeast => ">=",
            };
            let _ = writeln!(
                s,
                "| {} | {} | {:.4e} | {op} {:.3e} | {} |",
                c.suite,
                c.name,
                c.value,
                c.limit,
                if c.pass { "yes" } else { "NO" }
            );
        }
        let mut bad = Vec::new();
        for f in &m.files {
            match std::fs::read(dir.join(&f.name)) {
                Ok(bytes) if sha256_hex(&bytes) == f.sha256 => {}
                _ => bad.push(f.name.clone()),
            }
        }
        let _ = writeln!(s, "\nfiles: {} listed, {} changed or missing", m.files.len(), bad.len());
        for b in &bad {
            let _ = writeln!(s, "- {b}");
        }
        let secs: f64 = m.timings.values().sum();
        let _ = writeln!(
            s,
            "\nwall time {secs:.1} s, overall {}\n",
            if m.pass { "pass" } else { "FAIL" }
        );
        ok &= bad.is_empty() && m.pass;
    }
    std::fs::write(dir.join("report.md"), &s)?;
    Ok((s, ok))
}
