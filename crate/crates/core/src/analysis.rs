//! Post-processing of ensemble curves.
//!
//! All fits are unweighted least squares on log-transformed data:
//!
//! | kind              | regression            | exponent      |
//! |-------------------|-----------------------|---------------|
//! | power-law decay   | ln S_N  vs ln t       | v = −slope    |
//! | exponential in L  | ln S_N(∞) vs L        | β = −slope    |
//! | power law in h    | ln y vs ln h          | c = slope     |
//!
//! The amplitude is always e^intercept.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::TimeGrid;
use crate::error::{Error, Result};
use crate::experiment::{realization_seed, ChainPipeline, EnsembleResult, Measure};
use crate::model::{draw_fields, ChainConfig, DisorderRealization, Scenario};

/// Tail slope (in S_N per decade of time) above which a saturation estimate
/// is flagged as not converged.
pub const TAIL_SLOPE_THRESHOLD: f64 = 0.01;

/// Default ΔS_N level marking the light-cone onset.
pub const LIGHT_CONE_THRESHOLD: f64 = 0.02;

/// Relative slack when deciding whether a grid point lies inside a window.
const WINDOW_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// Ordinary least squares y ≈ intercept + slope·x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if n < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let syy: f64 = y.iter().map(|yi| (yi - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("abscissas are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - intercept - slope * xi).powi(2)).sum();
    let slope_stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    Ok(LinearFit { slope, intercept, slope_stderr, r_squared, n })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    PowerLawDecay,
    ExponentialInL,
    HPowerLaw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: FitKind,
    /// v, β or c depending on `kind`.
    pub exponent: f64,
    pub amplitude: f64,
    pub stderr_exponent: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    pub r_squared: f64,
}

impl FitResult {
    /// |exponent| / stderr; infinite for exact nonzero data.
    pub fn significance(&self) -> f64 {
        self.exponent.abs() / self.stderr_exponent
    }
}

fn log_fit(kind: FitKind, x: &[f64], y: &[f64], log_x: bool, sign: f64) -> Result<FitResult> {
    if let Some(bad) = y.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Fit(format!("ordinates must be positive, found {bad}")));
    }
    if log_x {
        if let Some(bad) = x.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::Fit(format!("abscissas must be positive, found {bad}")));
        }
    }
    let lx: Vec<f64> = if log_x { x.iter().map(|v| v.ln()).collect() } else { x.to_vec() };
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FitResult {
        kind,
        exponent: sign * fit.slope,
        amplitude: fit.intercept.exp(),
        stderr_exponent: fit.slope_stderr,
        window: (lo, hi),
        n_points: fit.n,
        r_squared: fit.r_squared,
    })
}

/// Indices of `times` inside the closed window.
fn window_indices(times: &[f64], window: (f64, f64)) -> Vec<usize> {
    let (lo, hi) = (window.0 * (1.0 - WINDOW_SLACK), window.1 * (1.0 + WINDOW_SLACK));
    times.iter().enumerate().filter(|(_, &t)| t >= lo && t <= hi).map(|(i, _)| i).collect()
}

/// Fits S ~ A t^{−v} to the samples inside `window`.
pub fn fit_power_law_curve(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<FitResult> {
    if !(window.0 > 0.0 && window.0 < window.1) {
        return Err(Error::Fit(format!("window must satisfy 0 < lo < hi, got {window:?}")));
    }
    let idx = window_indices(times, window);
    let t: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    let mut fit = log_fit(FitKind::PowerLawDecay, &t, &y, true, -1.0)?;
    fit.window = window;
    Ok(fit)
}

/// Default power-law window [10/Δ, t_max/10].
pub fn default_decay_window(delta: f64, grid: &TimeGrid) -> Result<(f64, f64)> {
    if !(delta > 0.0) {
        return Err(Error::Fit("default decay window needs Δ > 0; supply a window".into()));
    }
    Ok((10.0 / delta, grid.t_max() / 10.0))
}

/// Power-law fit of the disorder-averaged S_N. Without an explicit window
/// the default [10/Δ, t_max/10] is used.
pub fn fit_power_law_decay(result: &EnsembleResult, window: Option<(f64, f64)>) -> Result<FitResult> {
    let window = match window {
        Some(w) => w,
        None => default_decay_window(result.spec.chain.delta, result.grid())?,
    };
    fit_power_law_curve(result.times(), &result.log_negativity.mean, window)
}

/// Fits S(∞) ~ A e^{−βL}.
pub fn fit_exponential_in_l(l_values: &[f64], saturations: &[f64]) -> Result<FitResult> {
    log_fit(FitKind::ExponentialInL, l_values, saturations, false, -1.0)
}

/// Fits y ~ A h^c.
pub fn fit_h_power_law(h_values: &[f64], y_values: &[f64]) -> Result<FitResult> {
    log_fit(FitKind::HPowerLaw, h_values, y_values, true, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    /// Mean of the curve over the tail.
    pub value: f64,
    /// Standard deviation of the curve over the tail.
    pub spread: f64,
    /// Upper bound on the standard error of `value` from the disorder
    /// variance (rms over the tail of the per-time standard error).
    pub stderr: f64,
    /// Least-squares slope of the curve against log10 t over the tail.
    pub tail_slope: f64,
    pub converged: bool,
    pub n_points: usize,
    pub window: (f64, f64),
}

/// Averages the final `tail_decades` decades of a curve. `stderr` holds the
/// per-time standard errors, if known.
pub fn saturation_of_curve(
    times: &[f64],
    values: &[f64],
    stderr: Option<&[f64]>,
    tail_decades: f64,
) -> Result<Saturation> {
    if !(tail_decades > 0.0) {
        return Err(Error::Analysis(format!("tail_decades must be positive, got {tail_decades}")));
    }
    let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
        return Err(Error::Analysis("empty curve".into()));
    };
    let span = (last / first).log10();
    if span + 1e-9 < tail_decades {
        return Err(Error::Analysis(format!(
            "grid spans {span:.3} decades, fewer than the requested tail of {tail_decades}"
        )));
    }
    let lo = last / 10f64.powf(tail_decades);
    let idx = window_indices(times, (lo, last));
    if idx.len() < 2 {
        return Err(Error::Analysis("fewer than two grid points in the tail".into()));
    }
    let n = idx.len() as f64;
    let tail: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    let value = tail.iter().sum::<f64>() / n;
    let spread = (tail.iter().map(|v| (v - value).powi(2)).sum::<f64>() / n).sqrt();
    let stderr = stderr.map(|se| (idx.iter().map(|&i| se[i] * se[i]).sum::<f64>() / n).sqrt()).unwrap_or(0.0);
    let tail_slope = if idx.len() >= 3 {
        let lt: Vec<f64> = idx.iter().map(|&i| times[i].log10()).collect();
        linear_fit(&lt, &tail)?.slope
    } else {
        (tail[1] - tail[0]) / (times[idx[1]] / times[idx[0]]).log10()
    };
    Ok(Saturation {
        value,
        spread,
        stderr,
        tail_slope,
        converged: tail_slope.abs() <= TAIL_SLOPE_THRESHOLD,
        n_points: idx.len(),
        window: (times[idx[0]], last),
    })
}

/// Late-time value of the disorder-averaged S_N.
pub fn estimate_saturation(result: &EnsembleResult, tail_decades: f64) -> Result<Saturation> {
    let se = result.log_negativity.stderr(result.n);
    saturation_of_curve(result.times(), &result.log_negativity.mean, Some(&se), tail_decades)
}

/// One curve entering a tΔ collapse.
#[derive(Clone, Debug)]
pub struct CollapseInput<'a> {
    pub delta: f64,
    pub times: &'a [f64],
    pub mean: &'a [f64],
    pub stderr: &'a [f64],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Collapse {
    pub deltas: Vec<f64>,
    /// Common abscissas x = tΔ.
    pub x: Vec<f64>,
    /// values[c][i]: curve c interpolated at x[i].
    pub values: Vec<Vec<f64>>,
    /// Largest pairwise |difference| over the common window.
    pub metric: f64,
    /// Mean over the window of √(Σ_c stderr_c²).
    pub joint_stderr: f64,
}

/// Linear interpolation in ln t. `times` is ascending and contains `t` in range.
fn interp_log(times: &[f64], values: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|&s| s < t);
    if k == 0 {
        return values[0];
    }
    if k == times.len() {
        return values[times.len() - 1];
    }
    if times[k] == t {
        return values[k];
    }
    let (a, b) = (times[k - 1].ln(), times[k].ln());
    let w = (t.ln() - a) / (b - a);
    values[k - 1] * (1.0 - w) + values[k] * w
}

/// Rescales each curve to x = tΔ, keeps t > t_min_factor/Δ, and compares the
/// curves on the abscissas of the first one that fall in the common window.
pub fn collapse_curves(curves: &[CollapseInput<'_>], t_min_factor: f64) -> Result<Collapse> {
    if curves.len() < 2 {
        return Err(Error::Analysis("a collapse needs at least two curves".into()));
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for c in curves {
        if !(c.delta > 0.0) {
            return Err(Error::Analysis(format!("collapse needs Δ > 0, got {}", c.delta)));
        }
        let t_cut = t_min_factor / c.delta;
        let kept: Vec<f64> = c.times.iter().copied().filter(|&t| t > t_cut).collect();
        let (Some(&first), Some(&last)) = (kept.first(), kept.last()) else {
            return Err(Error::Analysis(format!("no times beyond {t_cut} for Δ = {}", c.delta)));
        };
        lo = lo.max(first * c.delta);
        hi = hi.min(last * c.delta);
    }
    let ref_curve = &curves[0];
    let x: Vec<f64> = ref_curve
        .times
        .iter()
        .map(|t| t * ref_curve.delta)
        .filter(|&x| x >= lo * (1.0 - WINDOW_SLACK) && x <= hi * (1.0 + WINDOW_SLACK))
        .collect();
    if !(lo < hi) || x.is_empty() {
        return Err(Error::Analysis(format!("curves share no tΔ window (lo {lo}, hi {hi})")));
    }
    let values: Vec<Vec<f64>> =
        curves.iter().map(|c| x.iter().map(|&xi| interp_log(c.times, c.mean, xi / c.delta)).collect()).collect();
    let errors: Vec<Vec<f64>> =
        curves.iter().map(|c| x.iter().map(|&xi| interp_log(c.times, c.stderr, xi / c.delta)).collect()).collect();
    let mut metric = 0.0f64;
    for i in 0..x.len() {
        for a in 0..curves.len() {
            for b in (a + 1)..curves.len() {
                metric = metric.max((values[a][i] - values[b][i]).abs());
            }
        }
    }
    let joint_stderr =
        (0..x.len()).map(|i| errors.iter().map(|e| e[i] * e[i]).sum::<f64>().sqrt()).sum::<f64>() / x.len() as f64;
    Ok(Collapse { deltas: curves.iter().map(|c| c.delta).collect(), x, values, metric, joint_stderr })
}

/// tΔ collapse of disorder-averaged S_N curves that differ only in Δ.
pub fn scaling_collapse(results: &[(f64, &EnsembleResult)], t_min_factor: f64) -> Result<Collapse> {
    let reference = &results.first().ok_or_else(|| Error::Analysis("no curves to collapse".into()))?.1.spec.chain;
    let stderrs: Vec<Vec<f64>> = results.iter().map(|(_, r)| r.log_negativity.stderr(r.n)).collect();
    for (delta, r) in results {
        let mut c = r.spec.chain.clone();
        c.delta = reference.delta;
        if &c != reference {
            return Err(Error::Analysis("collapsed curves must differ only in Δ".into()));
        }
        if *delta != r.spec.chain.delta {
            return Err(Error::Analysis(format!("Δ = {delta} does not match the result's Δ")));
        }
    }
    let inputs: Vec<CollapseInput<'_>> = results
        .iter()
        .zip(&stderrs)
        .map(|((delta, r), se)| CollapseInput {
            delta: *delta,
            times: r.times(),
            mean: &r.log_negativity.mean,
            stderr: se,
        })
        .collect();
    collapse_curves(&inputs, t_min_factor)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightConeMap {
    /// Truncation lengths in ascending order, `l_ref` last.
    pub l_values: Vec<usize>,
    pub grid: TimeGrid,
    /// delta_sn[l][i] = mean S_N^{(l_ref)}(t_i) − mean S_N^{(l)}(t_i).
    pub delta_sn: Vec<Vec<f64>>,
    /// Disorder-averaged S_N for each row of `l_values`.
    pub mean_sn: Vec<Vec<f64>>,
    pub l_ref: usize,
    pub n_realizations: usize,
    pub master_seed: u64,
}

impl LightConeMap {
    /// First time |ΔS_N| exceeds `threshold` in each row, if it ever does.
    /// ΔS_N is mostly negative, since a shorter environment absorbs less of
    /// the pair's entanglement.
    pub fn onset_times(&self, threshold: f64) -> Vec<(usize, Option<f64>)> {
        self.l_values
            .iter()
            .zip(&self.delta_sn)
            .map(|(&l, row)| (l, row.iter().position(|&d| d.abs() > threshold).map(|i| self.grid.times[i])))
            .collect()
    }
}

/// Contiguous window of `len` sites anchored at Alice's end of the chain.
/// With an isolated Bob only Alice has to fall inside: Bob is decoupled, so
/// the subchain reseats him at its far end.
pub fn truncation_window(chain: &ChainConfig, len: usize) -> Result<std::ops::Range<usize>> {
    let n = chain.n_sites;
    if len < 2 || len > n || len % 2 != 0 {
        return Err(Error::Analysis(format!("truncation length {len} must be even and within 2..={n}")));
    }
    let start = if 2 * chain.alice_site < n { 0 } else { n - len };
    let window = start..start + len;
    let bob_ok = window.contains(&chain.bob_site) || chain.scenario == Scenario::IsolatedBob;
    if !window.contains(&chain.alice_site) || !bob_ok {
        return Err(Error::Analysis(format!(
            "window {window:?} of length {len} excludes alice ({}) or bob ({})",
            chain.alice_site, chain.bob_site
        )));
    }
    Ok(window)
}

/// Subchain on `window`, with the pair relabeled and the same couplings.
pub fn truncated_chain(chain: &ChainConfig, window: &std::ops::Range<usize>) -> ChainConfig {
    let alice_site = chain.alice_site - window.start;
    let bob_site = if window.contains(&chain.bob_site) {
        chain.bob_site - window.start
    } else if 2 * alice_site < window.len() {
        window.len() - 1
    } else {
        0
    };
    ChainConfig { n_sites: window.len(), alice_site, bob_site, ..chain.clone() }
}

/// ΔS_N^{(L)}(t) between the full chain of `chain_ref.n_sites` sites and its
/// truncations to each length in `l_values`, all driven by the same field
/// draw per realization.
pub fn light_cone_map(
    chain_ref: &ChainConfig,
    l_values: &[usize],
    grid: &TimeGrid,
    n_realizations: usize,
    master_seed: u64,
) -> Result<LightConeMap> {
    chain_ref.validate()?;
    grid.validate()?;
    if n_realizations == 0 {
        return Err(Error::Analysis("n_realizations must be at least 1".into()));
    }
    let l_ref = chain_ref.n_sites;
    let mut lengths: Vec<usize> = l_values.iter().copied().filter(|&l| l != l_ref).collect();
    lengths.sort_unstable();
    lengths.dedup();

    let full = ChainPipeline::new(chain_ref)?;
    let neel = full.environment_mask();
    let mut truncated: Vec<(std::ops::Range<usize>, ChainPipeline)> = Vec::new();
    for &l in &lengths {
        let window = truncation_window(chain_ref, l)?;
        let sub = truncated_chain(chain_ref, &window);
        let env = (neel >> window.start) & ((1u64 << l) - 1);
        truncated.push((window, ChainPipeline::with_environment(&sub, env)?));
    }

    let times = &grid.times;
    // curves[k][row][i], rows ordered like `lengths` then the full chain
    let curves: Vec<Vec<Vec<f64>>> = (0..n_realizations)
        .into_par_iter()
        .map(|k| {
            let seed = realization_seed(master_seed, k as u64);
            let fields = draw_fields(chain_ref, seed, k);
            let mut rows = Vec::with_capacity(truncated.len() + 1);
            for (window, pipeline) in &truncated {
                let sub =
                    DisorderRealization { fields: fields.fields[window.clone()].to_vec(), seed, realization_index: k };
                rows.push(pipeline.run(&sub, times)?.iter().map(|r| r.log_negativity).collect());
            }
            rows.push(full.run(&fields, times)?.iter().map(|r| r.log_negativity).collect());
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let n_rows = truncated.len() + 1;
    let mean_sn: Vec<Vec<f64>> = (0..n_rows)
        .map(|row| {
            (0..times.len()).map(|i| curves.iter().map(|c| c[row][i]).sum::<f64>() / n_realizations as f64).collect()
        })
        .collect();
    let reference = &mean_sn[n_rows - 1];
    let delta_sn = mean_sn.iter().map(|row| reference.iter().zip(row).map(|(a, b)| a - b).collect()).collect();
    lengths.push(l_ref);

    Ok(LightConeMap { l_values: lengths, grid: grid.clone(), delta_sn, mean_sn, l_ref, n_realizations, master_seed })
}

/// True if `values` never rises by more than `k` joint standard errors from
/// one entry to the next and ends clearly below where it starts.
pub fn decreasing_within_resolution(values: &[f64], stderrs: &[f64], k: f64) -> bool {
    if values.len() < 2 || values.len() != stderrs.len() {
        return false;
    }
    let steps_ok =
        values.windows(2).zip(stderrs.windows(2)).all(|(v, s)| v[1] - v[0] < k * (s[0] * s[0] + s[1] * s[1]).sqrt());
    let n = values.len() - 1;
    let overall = values[0] - values[n] > k * (stderrs[0].powi(2) + stderrs[n].powi(2)).sqrt();
    steps_ok && overall
}

/// Mean S_N curve and its standard error, for convenience in reports.
pub fn log_negativity_curve(result: &EnsembleResult) -> (Vec<f64>, Vec<f64>) {
    let s = result.stats(Measure::LogNegativity);
    (s.mean.clone(), s.stderr(result.n))
}
