//! TOML run configuration.
//!
//! ```toml
//! [chain]
//! L = 12                      # required, even
//! delta = 0.01                # required, Δ ≥ 0
//! h = 3.0                     # required, disorder half-width ≥ 0
//! J = 1.0
//! scenario = "isolated-bob"   # or "shared-environment"
//! alice = 0
//! bob = 11                    # default: L−1 (isolated-bob) or 1 (shared-environment)
//! bell = "psi-plus"           # or "psi-minus"
//! boundary = "open"
//!
//! [grid]                      # default: 10 points/decade, 0.1 … 10^(⌈log10 1/Δ⌉+3)
//! t_min = 0.1
//! t_max = 1e8
//! points = 91
//! spacing = "logarithmic"     # or "linear"
//!
//! [ensemble]
//! realizations = 200
//! seed = 1                    # integer, or a "0x…" string for the full u64 range
//!
//! [sweep]                     # optional; Cartesian product of the listed axes
//! L = [8, 10, 12]
//! delta = [0.0, 0.01]
//! h = [2.0, 3.0, 4.0, 5.0, 6.0]
//!
//! [lightcone]
//! L_values = [4, 6, 8, 10]
//! threshold = 0.02
//!
//! [analysis]
//! tail_decades = 1.0
//! fit_window = [1e3, 1e7]     # default [10/Δ, t_max/10]
//! collapse_t_min_factor = 10.0
//! ```
//!
//! Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::dynamics::{make_time_grid, Spacing, TimeGrid};
use crate::error::{Error, Result};
use crate::experiment::EnsembleSpec;
use crate::model::{default_bob_site, BellState, Boundary, ChainConfig, Scenario};

pub const DEFAULT_REALIZATIONS: usize = 200;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TAIL_DECADES: f64 = 1.0;
pub const DEFAULT_COLLAPSE_T_MIN_FACTOR: f64 = 10.0;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lightcone: Option<LightconeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSection>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alice: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bob: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bell: Option<BellState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::Logarithmic
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "seed_format")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightconeSection {
    #[serde(rename = "L_values", default, skip_serializing_if = "Option::is_none")]
    pub l_values: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_decades: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collapse_t_min_factor: Option<f64>,
}

/// Seeds are TOML integers when they fit in i64 and "0x…" strings otherwise.
mod seed_format {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match seed {
            Some(v) if *v <= i64::MAX as u64 => s.serialize_i64(*v as i64),
            Some(v) => s.serialize_str(&format!("{v:#x}")),
            None => s.serialize_none(),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        match Option::<Raw>::deserialize(d)? {
            None => Ok(None),
            Some(Raw::Int(v)) if v >= 0 => Ok(Some(v as u64)),
            Some(Raw::Int(v)) => Err(de::Error::custom(format!("seed must be non-negative, got {v}"))),
            Some(Raw::Text(t)) => {
                let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
                    Some(hex) => u64::from_str_radix(hex, 16),
                    None => t.parse::<u64>(),
                };
                parsed.map(Some).map_err(|e| de::Error::custom(format!("invalid seed {t:?}: {e}")))
            }
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub realizations: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LightconeParams {
    pub l_values: Vec<usize>,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisParams {
    pub tail_decades: f64,
    pub fit_window: Option<(f64, f64)>,
    pub collapse_t_min_factor: f64,
}

/// A fully resolved configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedConfig {
    /// The input with every defaulted field written out, except the grid and
    /// Bob's site, whose defaults depend on each sweep point.
    pub file: ConfigFile,
    /// The un-swept ensemble.
    pub base: EnsembleSpec,
    /// One spec per sweep point; just `base` without a sweep section.
    pub points: Vec<EnsembleSpec>,
    pub lightcone: LightconeParams,
    pub analysis: AnalysisParams,
}

fn config_err(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

/// Parses and resolves TOML config text.
pub fn parse_config(text: &str) -> Result<ResolvedConfig> {
    parse_config_with(text, &Overrides::default())
}

pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<ResolvedConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    resolve(file, overrides)
}

fn chain_for(file: &ChainSection, n_sites: usize, delta: f64, h: f64) -> Result<ChainConfig> {
    if n_sites % 2 != 0 || n_sites < 2 {
        return Err(config_err("chain.L", format!("L must be even and at least 2, got {n_sites}")));
    }
    let scenario = file.scenario.unwrap_or(Scenario::IsolatedBob);
    let chain = ChainConfig {
        n_sites,
        coupling: file.coupling.unwrap_or(1.0),
        delta,
        h_bound: h,
        scenario,
        alice_site: file.alice.unwrap_or(0),
        bob_site: file.bob.unwrap_or_else(|| default_bob_site(scenario, n_sites)),
        bell_state: file.bell.unwrap_or(BellState::PsiPlus),
        boundary: file.boundary.unwrap_or(Boundary::Open),
    };
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(config_err("chain.delta", format!("delta must be non-negative, got {delta}")));
    }
    if !(h.is_finite() && h >= 0.0) {
        return Err(config_err("chain.h", format!("h must be non-negative, got {h}")));
    }
    if !(chain.coupling.is_finite() && chain.coupling > 0.0) {
        return Err(config_err("chain.J", format!("J must be positive, got {}", chain.coupling)));
    }
    if chain.alice_site >= n_sites {
        return Err(config_err("chain.alice", format!("site {} outside a chain of {n_sites}", chain.alice_site)));
    }
    if chain.bob_site >= n_sites || chain.bob_site == chain.alice_site {
        return Err(config_err(
            "chain.bob",
            format!("site {} must lie in the chain of {n_sites} and differ from alice", chain.bob_site),
        ));
    }
    chain.validate().map_err(|e| config_err("chain", e))?;
    Ok(chain)
}

fn grid_for(section: Option<&GridSection>, delta: f64) -> Result<TimeGrid> {
    match section {
        Some(g) => make_time_grid(g.t_min, g.t_max, g.points, g.spacing).map_err(|e| config_err("grid", e)),
        None => Ok(TimeGrid::default_for_delta(delta)),
    }
}

pub fn resolve(mut file: ConfigFile, overrides: &Overrides) -> Result<ResolvedConfig> {
    if let Some(seed) = overrides.seed {
        file.ensemble.seed = Some(seed);
    }
    if let Some(n) = overrides.realizations {
        file.ensemble.realizations = Some(n);
    }

    let c = &file.chain;
    let n_sites = c.n_sites.ok_or_else(|| config_err("chain.L", "missing required key"))?;
    let delta = c.delta.ok_or_else(|| config_err("chain.delta", "missing required key"))?;
    let h = c.h.ok_or_else(|| config_err("chain.h", "missing required key"))?;
    let realizations = file.ensemble.realizations.unwrap_or(DEFAULT_REALIZATIONS);
    if realizations == 0 {
        return Err(config_err("ensemble.realizations", "must be at least 1"));
    }
    let seed = file.ensemble.seed.unwrap_or(DEFAULT_SEED);

    let spec_for = |l: usize, d: f64, hh: f64| -> Result<EnsembleSpec> {
        Ok(EnsembleSpec {
            chain: chain_for(&file.chain, l, d, hh)?,
            grid: grid_for(file.grid.as_ref(), d)?,
            n_realizations: realizations,
            master_seed: seed,
        })
    };
    let base = spec_for(n_sites, delta, h)?;

    let points = match &file.sweep {
        None => vec![base.clone()],
        Some(s) => {
            let ls = s.n_sites.clone().unwrap_or_else(|| vec![n_sites]);
            let ds = s.delta.clone().unwrap_or_else(|| vec![delta]);
            let hs = s.h.clone().unwrap_or_else(|| vec![h]);
            for (key, empty) in [("sweep.L", ls.is_empty()), ("sweep.delta", ds.is_empty()), ("sweep.h", hs.is_empty())]
            {
                if empty {
                    return Err(config_err(key, "sweep axis must not be empty"));
                }
            }
            let mut points = Vec::with_capacity(ls.len() * ds.len() * hs.len());
            for &l in &ls {
                for &d in &ds {
                    for &hh in &hs {
                        points.push(spec_for(l, d, hh).map_err(|e| match e {
                            Error::Config(m) => Error::Config(format!("sweep point (L={l}, delta={d}, h={hh}): {m}")),
                            other => other,
                        })?);
                    }
                }
            }
            points
        }
    };

    let lc = file.lightcone.clone().unwrap_or_default();
    let lightcone = LightconeParams {
        l_values: lc.l_values.unwrap_or_else(|| (4..n_sites).step_by(2).collect()),
        threshold: lc.threshold.unwrap_or(crate::analysis::LIGHT_CONE_THRESHOLD),
    };
    if let Some(&bad) = lightcone.l_values.iter().find(|&&l| l % 2 != 0 || l < 2 || l > n_sites) {
        return Err(config_err("lightcone.L_values", format!("{bad} must be even and within 2..={n_sites}")));
    }
    if !(lightcone.threshold > 0.0) {
        return Err(config_err("lightcone.threshold", "must be positive"));
    }

    let an = file.analysis.clone().unwrap_or_default();
    let analysis = AnalysisParams {
        tail_decades: an.tail_decades.unwrap_or(DEFAULT_TAIL_DECADES),
        fit_window: an.fit_window.map(|[a, b]| (a, b)),
        collapse_t_min_factor: an.collapse_t_min_factor.unwrap_or(DEFAULT_COLLAPSE_T_MIN_FACTOR),
    };
    if !(analysis.tail_decades > 0.0) {
        return Err(config_err("analysis.tail_decades", "must be positive"));
    }
    if let Some((a, b)) = analysis.fit_window {
        if !(a > 0.0 && a < b) {
            return Err(config_err("analysis.fit_window", format!("need 0 < lo < hi, got [{a}, {b}]")));
        }
    }

    // write the defaults back so the manifest records them
    let chain = &mut file.chain;
    chain.coupling = Some(base.chain.coupling);
    chain.scenario = Some(base.chain.scenario);
    chain.alice = Some(base.chain.alice_site);
    chain.bell = Some(base.chain.bell_state);
    chain.boundary = Some(base.chain.boundary);
    file.ensemble.realizations = Some(realizations);
    file.ensemble.seed = Some(seed);
    file.lightcone =
        Some(LightconeSection { l_values: Some(lightcone.l_values.clone()), threshold: Some(lightcone.threshold) });
    file.analysis = Some(AnalysisSection {
        tail_decades: Some(analysis.tail_decades),
        fit_window: analysis.fit_window.map(|(a, b)| [a, b]),
        collapse_t_min_factor: Some(analysis.collapse_t_min_factor),
    });

    Ok(ResolvedConfig { file, base, points, lightcone, analysis })
}

impl ResolvedConfig {
    /// TOML text that resolves back to this configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.file).expect("config serializes")
    }
}
