use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sausage_core::clt::{clt_experiment, CltReport};
use sausage_core::io;
use sausage_core::observables::{observe_prefix, ObservableSample};
use sausage_core::pathgen::{resample_to_spacing, simulate_stream, DriftVector, DriftedPath};
use sausage_core::regeneration::{dependence_diagnostics, eta_tail};
use sausage_core::replica::run_replicas;
use sausage_core::rng::StreamId;
use sausage_core::stats;
use sausage_core::topology::{betti_curve, build_alpha_complex, persistence_deg1, PersistencePairs};

use crate::config::ExperimentConfig;
use crate::manifest::{Artifacts, RunManifest};
use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Persistence,
    Regen,
    Clt,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Persistence => "persistence",
            Command::Regen => "regen",
            Command::Clt => "clt",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Output directory; the config's `output` when absent.
    pub out: Option<PathBuf>,
    pub surrogate: bool,
    pub check: bool,
    /// Point or path CSV for `persistence`.
    pub input: Option<PathBuf>,
    /// Report JSON for `report`; `<out>/report.json` when absent.
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub manifest: RunManifest,
    /// Failed checks in `--check` mode.
    pub failures: Vec<String>,
}

fn read(path: &Path) -> Result<String, LabError> {
    std::fs::read_to_string(path).map_err(|source| LabError::File { path: path.display().to_string(), source })
}

pub fn run_command(cmd: Command, cfg: &ExperimentConfig, opts: &Options) -> Result<Outcome, LabError> {
    cfg.validate()?;
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output));
    let mut art = Artifacts::new(&out)?;
    log::info!("{} -> {}", cmd.name(), out.display());
    let failures = match cmd {
        Command::Simulate => simulate(cfg, &mut art)?,
        Command::Persistence => persistence(cfg, opts, &mut art)?,
        Command::Regen => regen(cfg, opts, &mut art)?,
        Command::Clt => clt(cfg, opts, &mut art)?,
        Command::Report => report(cfg, opts, &mut art)?,
    };
    art.mark(cmd.name());
    let manifest = art.finish(cmd.name(), cfg.hash())?;
    Ok(Outcome { manifest, failures })
}

fn drift(cfg: &ExperimentConfig) -> Result<DriftVector, LabError> {
    Ok(DriftVector::new(cfg.mu())?)
}

fn path_file(i: usize) -> String {
    format!("paths/path_{i:05}.csv")
}

fn simulate(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<String>, LabError> {
    let d = drift(cfg)?;
    let paths = (0..cfg.replicas.evaluation)
        .into_par_iter()
        .map(|i| simulate_stream(d, cfg.horizon, cfg.dt, StreamId::new(cfg.seeds.evaluation, i as u64)).map(|p| io::path_csv(&p)))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, text) in paths.iter().enumerate() {
        art.write(&path_file(i), text)?;
    }
    log::info!("{} paths written", paths.len());
    Ok(Vec::new())
}

/// A stored path of replica `i` when present, else a fresh simulation.
fn load_or_simulate(cfg: &ExperimentConfig, root: &Path, i: usize) -> Result<DriftedPath, LabError> {
    let d = drift(cfg)?;
    let seed = StreamId::new(cfg.seeds.evaluation, i as u64);
    let file = root.join(path_file(i));
    if file.exists() {
        let (times, points) = io::parse_path_csv(&read(&file)?)?;
        return Ok(DriftedPath { times, points, drift: d, seed, dt_nominal: cfg.dt });
    }
    Ok(simulate_stream(d, cfg.horizon, cfg.dt, seed)?)
}

fn persistence(cfg: &ExperimentConfig, opts: &Options, art: &mut Artifacts) -> Result<Vec<String>, LabError> {
    let window = cfg.window()?;
    if let Some(input) = &opts.input {
        let text = read(input)?;
        let points = match io::parse_points_csv(&text) {
            Ok(p) => p,
            Err(_) => io::parse_path_csv(&text)?.1,
        };
        let pairs = persistence_deg1(&build_alpha_complex(&points)?);
        art.write("pairs/input.csv", &io::pairs_csv(&pairs))?;
        art.write("curves/input.csv", &io::curve_csv(&betti_curve(&pairs, window)))?;
        return Ok(Vec::new());
    }
    let weights = cfg.weight_list()?;
    let root = art.root().to_path_buf();
    let results = (0..cfg.replicas.evaluation)
        .into_par_iter()
        .map(|i| -> Result<(ObservableSample, PersistencePairs), LabError> {
            let path = resample_to_spacing(load_or_simulate(cfg, &root, i)?, cfg.max_spacing)?;
            Ok(observe_prefix(&path, &weights, window, cfg.horizon, cfg.cell)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut samples = Vec::with_capacity(results.len());
    for (i, (sample, pairs)) in results.into_iter().enumerate() {
        art.write(&format!("pairs/pairs_{i:05}.csv"), &io::pairs_csv(&pairs))?;
        art.write(&format!("curves/curve_{i:05}.csv"), &io::curve_csv(&betti_curve(&pairs, window)))?;
        samples.push(sample);
    }
    art.write("samples.csv", &io::samples_csv(&samples, &cfg.weight_names()))?;
    Ok(Vec::new())
}

fn regen(cfg: &ExperimentConfig, opts: &Options, art: &mut Artifacts) -> Result<Vec<String>, LabError> {
    let spec = cfg.replica_spec(opts.surrogate)?;
    let reps = run_replicas(&spec, cfg.seeds.evaluation, 0, cfg.replicas.evaluation)?;
    let names = cfg.weight_names();
    let cycles: Vec<_> = reps.iter().map(|r| r.cycles.clone()).collect();
    let mut taus = String::from("replica,n,tau\n");
    for (r, rep) in reps.iter().enumerate() {
        for (n, t) in rep.taus.iter().enumerate() {
            writeln!(taus, "{r},{n},{t}").unwrap();
        }
    }
    art.write("taus.csv", &taus)?;
    art.write("cycles.csv", &io::cycles_csv(&cycles, &names))?;
    art.write("renewal.csv", &io::renewal_csv(&reps.iter().map(|r| r.renewal.clone()).collect::<Vec<_>>(), &names))?;
    let lags = dependence_diagnostics(&cycles, &names).map_err(|e| log::warn!("lag table skipped: {e}")).ok();
    art.write("lags.csv", &io::lags_csv(lags.as_ref()))?;
    let etas: Vec<f64> = cycles.iter().flatten().map(|c| c.eta).collect();
    art.write("eta_survival.csv", &eta_survival_csv(&eta_tail(&etas).log_survival))?;
    Ok(Vec::new())
}

fn eta_survival_csv(rows: &[(f64, f64)]) -> String {
    let mut s = String::from("eta,log_survival\n");
    for (x, l) in rows {
        writeln!(s, "{x},{l}").unwrap();
    }
    s
}

/// Criteria applied in `--check` mode.
pub fn check_report(report: &CltReport) -> Vec<String> {
    let mut failures = Vec::new();
    for w in &report.weights {
        if w.degenerate {
            continue;
        }
        if report.surrogate {
            if w.ks_distance >= w.ks_threshold {
                failures.push(format!("{}: KS {:.4} >= {:.4}", w.name, w.ks_distance, w.ks_threshold));
            }
        } else {
            if w.ks_distance > 0.05 {
                failures.push(format!("{}: KS {:.4} > 0.05", w.name, w.ks_distance));
            }
            if w.relative_difference.is_none_or(|d| d >= 0.2) {
                failures.push(format!("{}: variance mismatch {:?}", w.name, w.relative_difference));
            }
        }
    }
    if !report.multivariate.psd {
        failures.push("covariance estimate is not positive semidefinite".into());
    }
    failures
}

fn clt(cfg: &ExperimentConfig, opts: &Options, art: &mut Artifacts) -> Result<Vec<String>, LabError> {
    let run = clt_experiment(&cfg.clt_config(opts.surrogate)?)?;
    let names = cfg.weight_names();
    art.write("report.json", &io::report_json(&run.report))?;
    art.write("z_samples.csv", &io::z_samples_csv(&run.z, &names))?;
    let cycles: Vec<_> = run.evaluation.iter().map(|r| r.cycles.clone()).collect();
    art.write("cycles.csv", &io::cycles_csv(&cycles, &names))?;
    art.write("renewal.csv", &io::renewal_csv(&run.evaluation.iter().map(|r| r.renewal.clone()).collect::<Vec<_>>(), &names))?;
    art.write("lags.csv", &io::lags_csv(run.report.diagnostics.lags.as_ref()))?;
    for w in &run.report.weights {
        log::info!("{}: rho {:.5} sigma2 {:.5} KS {:.4} (threshold {:.4})", w.name, w.rho_hat, w.sigma_psi2_hat, w.ks_distance, w.ks_threshold);
    }
    Ok(if opts.check { check_report(&run.report) } else { Vec::new() })
}

fn report(cfg: &ExperimentConfig, opts: &Options, art: &mut Artifacts) -> Result<Vec<String>, LabError> {
    let report_path = opts.report.clone().unwrap_or_else(|| art.root().join("report.json"));
    let report = io::parse_report_json(&read(&report_path)?)?;
    let z_path = report_path.with_file_name("z_samples.csv");
    let (names, z) = io::parse_z_samples_csv(&read(&z_path)?)?;

    let mut qq = String::from("rank,p");
    for n in &names {
        write!(qq, ",q_{n},z_{n}").unwrap();
    }
    qq.push('\n');
    let sorted: Vec<Vec<f64>> = z
        .iter()
        .map(|col| {
            let mut c = col.clone();
            c.sort_by(f64::total_cmp);
            c
        })
        .collect();
    let rows = sorted.first().map_or(0, Vec::len);
    for k in 0..rows {
        let p = (k as f64 + 0.5) / rows as f64;
        let q = stats::standard_normal_quantile(p);
        write!(qq, "{k},{p}").unwrap();
        for (w, col) in sorted.iter().enumerate() {
            let sd = report.weights.get(w).map_or(1.0, |r| r.sigma_psi2_hat.sqrt());
            write!(qq, ",{},{}", sd * q, col[k]).unwrap();
        }
        qq.push('\n');
    }
    art.write("qq.csv", &qq)?;

    let window = cfg.window()?;
    let pair_dir = art.root().join("pairs");
    let mut pair_files: Vec<PathBuf> = std::fs::read_dir(&pair_dir)
        .map(|d| d.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("pairs_"))).collect())
        .unwrap_or_default();
    pair_files.sort();
    let curves = pair_files.iter().map(|p| Ok(betti_curve(&io::parse_pairs_csv(&read(p)?)?, window))).collect::<Result<Vec<_>, LabError>>()?;
    let mut betti = String::from("r,mean_beta1\n");
    if !curves.is_empty() {
        for k in 0..100 {
            let r = window.r0 + (k as f64 + 0.5) * window.width() / 100.0;
            let m = curves.iter().map(|c| c.value_at(r) as f64).sum::<f64>() / curves.len() as f64;
            writeln!(betti, "{r},{m}").unwrap();
        }
    }
    art.write("betti_average.csv", &betti)?;

    let mut rem = String::from("t,n_t_scaled,mean_age2");
    for w in &report.weights {
        write!(rem, ",remainder_{}", w.name).unwrap();
    }
    rem.push('\n');
    for row in &report.diagnostics.renewal {
        let vals: Vec<String> = row.remainder.iter().map(|v| v.to_string()).collect();
        writeln!(rem, "{},{},{},{}", row.t, row.n_t_scaled, row.mean_age2, vals.join(",")).unwrap();
    }
    art.write("remainder.csv", &rem)?;
    art.write("eta_survival.csv", &eta_survival_csv(&report.diagnostics.eta_tail.log_survival))?;
    Ok(Vec::new())
}
