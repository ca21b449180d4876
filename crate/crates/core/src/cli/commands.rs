//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{
    default_decay_window, estimate_saturation, fit_exponential_in_l, fit_h_power_law, fit_power_law_curve,
    fit_power_law_decay, light_cone_map, saturation_of_curve, FitResult, Saturation,
};
use crate::dynamics::{Spacing, TimeGrid};
use crate::error::{Error, Result};
use crate::experiment::{run_ensemble, seed_list_digest, with_workers, EnsembleResult, Measure};

use super::config::{parse_config_with, Overrides, ResolvedConfig};
use super::output::{
    lightcone_csv, prepare_dir, read_results_csv, read_summary_csv, results_csv, summary_csv, write_file, RunManifest,
    SummaryRow,
};
use super::{ColumnArg, FitArgs, FitCommandKind, JobArgs};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn load(job: &JobArgs) -> Result<ResolvedConfig> {
    let text = fs::read_to_string(&job.config).map_err(|e| Error::io(&job.config, e))?;
    parse_config_with(&text, &Overrides { seed: job.seed, realizations: job.realizations })
}

/// Hex SHA-256 of the resolved config text.
pub fn config_digest(cfg: &ResolvedConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_toml().as_bytes()))
}

/// `<out>/<command>-<first 16 hex digits of the config digest>`.
pub fn run_dir(out: &Path, command: &str, digest: &str) -> PathBuf {
    out.join(format!("{command}-{}", &digest[..16]))
}

fn manifest(command: &str, cfg: &ResolvedConfig, digest: String, outputs: Vec<String>) -> RunManifest {
    RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        command: command.to_string(),
        config: cfg.file.clone(),
        config_digest: digest,
        master_seed: cfg.base.master_seed,
        seed_list_digest: seed_list_digest(&cfg.base.seeds()),
        outputs,
    }
}

fn finish(dir: &Path, m: RunManifest) -> Result<Vec<PathBuf>> {
    let mut written: Vec<PathBuf> = m.outputs.iter().map(|o| dir.join(o)).collect();
    let path = dir.join("manifest.json");
    write_file(&path, &m.to_json())?;
    written.push(path);
    Ok(written)
}

pub fn cmd_run(job: &JobArgs, workers: usize) -> Result<Vec<PathBuf>> {
    let cfg = load(job)?;
    let digest = config_digest(&cfg);
    let dir = prepare_dir(&run_dir(&job.out, "run", &digest), job.force)?;
    let result = with_workers(workers, || run_ensemble(&cfg.base))?;
    write_file(&dir.join("results.csv"), &results_csv(&result))?;
    finish(&dir, manifest("run", &cfg, digest, vec!["results.csv".into()]))
}

fn summarize(point: usize, result: &EnsembleResult, cfg: &ResolvedConfig, results: String) -> Result<SummaryRow> {
    let chain = &result.spec.chain;
    let sat = estimate_saturation(result, cfg.analysis.tail_decades)?;
    // A decay fit only makes sense where the window lies inside the grid.
    let fit = if chain.delta > 0.0 { fit_power_law_decay(result, cfg.analysis.fit_window).ok() } else { None };
    Ok(SummaryRow {
        point,
        n_sites: chain.n_sites,
        delta: chain.delta,
        h: chain.h_bound,
        scenario: serde_json::to_value(chain.scenario)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        s_inf: sat.value,
        s_inf_spread: sat.spread,
        s_inf_stderr: sat.stderr,
        tail_slope: sat.tail_slope,
        converged: sat.converged,
        v: fit.as_ref().map(|f| f.exponent),
        v_stderr: fit.as_ref().map(|f| f.stderr_exponent),
        v_r2: fit.as_ref().map(|f| f.r_squared),
        fit_lo: fit.as_ref().map(|f| f.window.0),
        fit_hi: fit.as_ref().map(|f| f.window.1),
        results,
    })
}

pub fn cmd_sweep(job: &JobArgs, workers: usize) -> Result<Vec<PathBuf>> {
    let cfg = load(job)?;
    let digest = config_digest(&cfg);
    let dir = prepare_dir(&run_dir(&job.out, "sweep", &digest), job.force)?;
    let mut outputs = Vec::new();
    let mut rows = Vec::new();
    for (i, spec) in cfg.points.iter().enumerate() {
        let result = with_workers(workers, || run_ensemble(spec))?;
        let rel = format!("point-{i}/results.csv");
        let point_dir = dir.join(format!("point-{i}"));
        fs::create_dir_all(&point_dir).map_err(|e| Error::io(&point_dir, e))?;
        write_file(&dir.join(&rel), &results_csv(&result))?;
        rows.push(summarize(i, &result, &cfg, rel.clone())?);
        outputs.push(rel);
    }
    write_file(&dir.join("summary.csv"), &summary_csv(&rows))?;
    outputs.push("summary.csv".into());
    finish(&dir, manifest("sweep", &cfg, digest, outputs))
}

pub fn cmd_lightcone(job: &JobArgs, workers: usize) -> Result<Vec<PathBuf>> {
    let cfg = load(job)?;
    let digest = config_digest(&cfg);
    let dir = prepare_dir(&run_dir(&job.out, "lightcone", &digest), job.force)?;
    let base = &cfg.base;
    let map = with_workers(workers, || {
        light_cone_map(&base.chain, &cfg.lightcone.l_values, &base.grid, base.n_realizations, base.master_seed)
    })?;
    write_file(&dir.join("lightcone.csv"), &lightcone_csv(&map))?;
    for (l, onset) in map.onset_times(cfg.lightcone.threshold) {
        match onset {
            Some(t) => println!("L={l} onset t={t:.6e}"),
            None => println!("L={l} onset none"),
        }
    }
    finish(&dir, manifest("lightcone", &cfg, digest, vec!["lightcone.csv".into()]))
}

fn measure_of(column: ColumnArg) -> Measure {
    match column {
        ColumnArg::Neg => Measure::Negativity,
        ColumnArg::Logneg => Measure::LogNegativity,
        ColumnArg::Conc => Measure::Concurrence,
        ColumnArg::Eof => Measure::Formation,
    }
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum FitOutcome {
    Fit(FitResult),
    Saturation(Saturation),
}

#[derive(Debug, Serialize)]
struct FitsFile<'a> {
    tool_version: &'a str,
    input: String,
    column: Option<&'static str>,
    result: FitOutcome,
}

/// The decay window from a run's manifest, when the results file sits in one.
fn manifest_window(results: &Path, times: &[f64]) -> Result<(f64, f64)> {
    let path = results.parent().unwrap_or(Path::new(".")).join("manifest.json");
    let missing = || Error::Config("--window is required when no manifest.json accompanies the results".into());
    let text = fs::read_to_string(&path).map_err(|_| missing())?;
    let m = RunManifest::from_json(&text)?;
    let delta = m.config.chain.delta.ok_or_else(missing)?;
    default_decay_window(delta, &TimeGrid { times: times.to_vec(), spacing: Spacing::Logarithmic })
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str, kind: &str) -> Result<&'a PathBuf> {
    path.as_ref().ok_or_else(|| Error::Config(format!("--kind {kind} needs --{flag}")))
}

pub fn cmd_fit(args: &FitArgs) -> Result<Vec<PathBuf>> {
    let (input, column, outcome) = match args.kind {
        FitCommandKind::PowerLaw | FitCommandKind::Saturation => {
            let name = if args.kind == FitCommandKind::PowerLaw { "power-law" } else { "saturation" };
            let path = require(&args.results, "results", name)?;
            let table = read_results_csv(path)?;
            let m = measure_of(args.column);
            let outcome = if args.kind == FitCommandKind::PowerLaw {
                let window = match args.window {
                    Some(w) => w,
                    None => manifest_window(path, &table.times)?,
                };
                FitOutcome::Fit(fit_power_law_curve(&table.times, table.mean(m), window)?)
            } else {
                let se = table.stderr(m);
                FitOutcome::Saturation(saturation_of_curve(&table.times, table.mean(m), Some(&se), args.tail_decades)?)
            };
            (path, Some(m.column()), outcome)
        }
        FitCommandKind::ExpL | FitCommandKind::HPower => {
            let name = if args.kind == FitCommandKind::ExpL { "exp-l" } else { "h-power" };
            let path = require(&args.summary, "summary", name)?;
            let rows = read_summary_csv(path)?;
            let fit = if args.kind == FitCommandKind::ExpL {
                let l: Vec<f64> = rows.iter().map(|r| r.n_sites as f64).collect();
                let s: Vec<f64> = rows.iter().map(|r| r.s_inf).collect();
                fit_exponential_in_l(&l, &s)?
            } else {
                let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
                let y: Vec<f64> = rows.iter().map(|r| 1.0 - r.s_inf).collect();
                fit_h_power_law(&h, &y)?
            };
            (path, None, FitOutcome::Fit(fit))
        }
    };

    match &outcome {
        FitOutcome::Fit(f) => {
            println!(
                "kind: {}",
                serde_json::to_value(f.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
            );
            println!("exponent: {:.10e}", f.exponent);
            println!("stderr_exponent: {:.10e}", f.stderr_exponent);
            println!("amplitude: {:.10e}", f.amplitude);
            println!("window: [{:.6e}, {:.6e}]", f.window.0, f.window.1);
            println!("n_points: {}", f.n_points);
            println!("r_squared: {:.10}", f.r_squared);
        }
        FitOutcome::Saturation(s) => {
            println!("kind: saturation");
            println!("value: {:.10e}", s.value);
            println!("spread: {:.10e}", s.spread);
            println!("stderr: {:.10e}", s.stderr);
            println!("tail_slope: {:.10e}", s.tail_slope);
            println!("converged: {}", s.converged);
            println!("window: [{:.6e}, {:.6e}]", s.window.0, s.window.1);
            println!("n_points: {}", s.n_points);
        }
    }

    let out = args.out.clone().unwrap_or_else(|| input.parent().unwrap_or(Path::new(".")).join("fits.json"));
    let file = FitsFile { tool_version: TOOL_VERSION, input: input.display().to_string(), column, result: outcome };
    write_file(&out, &(serde_json::to_string_pretty(&file).expect("fits serialize") + "\n"))?;
    Ok(vec![out])
}
