//! Disorder ensembles.
//!
//! Realization `k` of an ensemble uses the fields drawn from
//! [`realization_seed`]`(master_seed, k)`, so any single realization can be
//! rebuilt in isolation. Realizations run on a rayon pool; their per-time
//! measure values are then folded in ascending `k` on one thread, which makes
//! the aggregated statistics bit-identical for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::{enumerate_sector, SectorBasis};
use crate::dynamics::{diagonalize, evolve_many, neel_environment, pair_product_state, StateVector, TimeGrid};
use crate::error::{Error, Result};
use crate::measures::{evaluate_all, EntanglementRecord};
use crate::model::{build_hamiltonian, draw_fields, ChainConfig, DisorderRealization};
use crate::reduced::PairReducer;

/// SplitMix64 increment (the 64-bit golden ratio).
pub const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const SPLITMIX_MUL1: u64 = 0xBF58_476D_1CE4_E5B9;
const SPLITMIX_MUL2: u64 = 0x94D0_49BB_1331_11EB;

/// Seed of realization `k`: the (k+1)-th output of a SplitMix64 generator
/// started at `master_seed`.
///
/// ```text
/// z = master_seed + (k + 1) · 0x9E3779B97F4A7C15        (mod 2^64)
/// z = (z ^ (z >> 30)) · 0xBF58476D1CE4E5B9
/// z = (z ^ (z >> 27)) · 0x94D049BB133111EB
/// seed = z ^ (z >> 31)
/// ```
pub fn realization_seed(master_seed: u64, k: u64) -> u64 {
    let mut z = master_seed.wrapping_add(k.wrapping_add(1).wrapping_mul(SPLITMIX_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(SPLITMIX_MUL1);
    z = (z ^ (z >> 27)).wrapping_mul(SPLITMIX_MUL2);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub chain: ChainConfig,
    pub grid: TimeGrid,
    pub n_realizations: usize,
    pub master_seed: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        self.chain.validate()?;
        self.grid.validate()?;
        if self.n_realizations == 0 {
            return Err(Error::InvalidChain("n_realizations must be at least 1".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_realizations as u64).map(|k| realization_seed(self.master_seed, k)).collect()
    }
}

/// Hex SHA-256 over the little-endian bytes of `seeds`.
pub fn seed_list_digest(seeds: &[u64]) -> String {
    let mut h = Sha256::new();
    for s in seeds {
        h.update(s.to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    Negativity,
    LogNegativity,
    Concurrence,
    Formation,
}

impl Measure {
    pub const ALL: [Measure; 4] =
        [Measure::Negativity, Measure::LogNegativity, Measure::Concurrence, Measure::Formation];

    pub fn of(self, r: &EntanglementRecord) -> f64 {
        match self {
            Measure::Negativity => r.negativity,
            Measure::LogNegativity => r.log_negativity,
            Measure::Concurrence => r.concurrence,
            Measure::Formation => r.formation,
        }
    }

    /// Column prefix used in results files.
    pub fn column(self) -> &'static str {
        match self {
            Measure::Negativity => "neg",
            Measure::LogNegativity => "logneg",
            Measure::Concurrence => "conc",
            Measure::Formation => "eof",
        }
    }
}

/// Per-time mean and unbiased variance of one measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl MeasureStats {
    /// Standard error of the mean at each time.
    pub fn stderr(&self, n: usize) -> Vec<f64> {
        self.variance.iter().map(|v| (v / n as f64).sqrt()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub spec: EnsembleSpec,
    pub config_digest: String,
    pub seeds: Vec<u64>,
    pub n: usize,
    pub negativity: MeasureStats,
    pub log_negativity: MeasureStats,
    pub concurrence: MeasureStats,
    pub formation: MeasureStats,
}

impl EnsembleResult {
    pub fn grid(&self) -> &TimeGrid {
        &self.spec.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.spec.grid.times
    }

    pub fn stats(&self, m: Measure) -> &MeasureStats {
        match m {
            Measure::Negativity => &self.negativity,
            Measure::LogNegativity => &self.log_negativity,
            Measure::Concurrence => &self.concurrence,
            Measure::Formation => &self.formation,
        }
    }

    /// Aggregates per-realization curves, already in ascending realization
    /// order, into means and unbiased variances. With a single realization
    /// the variance is reported as 0.
    pub fn aggregate(spec: EnsembleSpec, curves: &[Vec<EntanglementRecord>]) -> Result<Self> {
        let n = curves.len();
        let n_t = spec.grid.len();
        if n == 0 {
            return Err(Error::InvalidChain("no realizations to aggregate".into()));
        }
        if let Some(bad) = curves.iter().find(|c| c.len() != n_t) {
            return Err(Error::DimensionMismatch { expected: n_t, found: bad.len() });
        }
        let stats = |m: Measure| {
            let mut mean = vec![0.0; n_t];
            let mut variance = vec![0.0; n_t];
            for (i, (mu, var)) in mean.iter_mut().zip(variance.iter_mut()).enumerate() {
                let sum: f64 = curves.iter().map(|c| m.of(&c[i])).sum();
                *mu = sum / n as f64;
                if n > 1 {
                    let ss: f64 = curves.iter().map(|c| (m.of(&c[i]) - *mu).powi(2)).sum();
                    *var = ss / (n - 1) as f64;
                }
            }
            MeasureStats { mean, variance }
        };
        Ok(EnsembleResult {
            config_digest: spec.digest(),
            seeds: spec.seeds(),
            n,
            negativity: stats(Measure::Negativity),
            log_negativity: stats(Measure::LogNegativity),
            concurrence: stats(Measure::Concurrence),
            formation: stats(Measure::Formation),
            spec,
        })
    }
}

/// Everything about a chain that does not depend on the disorder draw.
#[derive(Clone, Debug)]
pub struct ChainPipeline {
    chain: ChainConfig,
    basis: SectorBasis,
    psi0: StateVector,
    reducer: PairReducer,
    environment: u64,
}

impl ChainPipeline {
    /// Pipeline starting from the EPR ⊗ Néel state.
    pub fn new(chain: &ChainConfig) -> Result<Self> {
        Self::with_environment(chain, neel_environment(chain))
    }

    /// Pipeline starting from the Bell pair times the environment
    /// configuration `environment`.
    pub fn with_environment(chain: &ChainConfig, environment: u64) -> Result<Self> {
        chain.validate()?;
        let basis = enumerate_sector(chain.n_sites, 0)?;
        let psi0 = pair_product_state(chain, &basis, environment)?;
        let reducer = PairReducer::new(&basis, chain.alice_site, chain.bob_site)?;
        Ok(ChainPipeline { chain: chain.clone(), basis, psi0, reducer, environment })
    }

    /// Environment bits of the initial product state.
    pub fn environment_mask(&self) -> u64 {
        self.environment
    }

    pub fn chain(&self) -> &ChainConfig {
        &self.chain
    }

    pub fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.psi0
    }

    pub fn reducer(&self) -> &PairReducer {
        &self.reducer
    }

    /// Builds H, diagonalizes once and records the measures at every time.
    pub fn run(&self, realization: &DisorderRealization, times: &[f64]) -> Result<Vec<EntanglementRecord>> {
        let seed = realization.seed;
        let h = build_hamiltonian(&self.chain, realization, &self.basis, None)?;
        let spectrum = diagonalize(&h).map_err(|e| e.with_seed(seed))?;
        drop(h);
        let states = evolve_many(&spectrum, &self.psi0, times)?;
        times
            .iter()
            .zip(&states)
            .map(|(&t, psi)| evaluate_all(&self.reducer.reduce(psi)?, t))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                Error::InvalidDensity(msg) => Error::InvalidDensity(format!("{msg} (realization seed {seed:#018x})")),
                other => other,
            })
    }
}

/// One realization through the full pipeline.
pub fn run_realization(
    chain: &ChainConfig,
    realization: &DisorderRealization,
    grid: &TimeGrid,
) -> Result<Vec<EntanglementRecord>> {
    ChainPipeline::new(chain)?.run(realization, &grid.times)
}

/// Runs every realization on the current rayon pool and aggregates.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleResult> {
    spec.validate()?;
    let pipeline = ChainPipeline::new(&spec.chain)?;
    let seeds = spec.seeds();
    let curves: Vec<Vec<EntanglementRecord>> = seeds
        .par_iter()
        .enumerate()
        .map(|(k, &seed)| {
            let realization = draw_fields(&spec.chain, seed, k);
            pipeline.run(&realization, &spec.grid.times)
        })
        .collect::<Result<_>>()?;
    EnsembleResult::aggregate(spec.clone(), &curves)
}

/// [`run_ensemble`] on a dedicated pool of `workers` threads.
pub fn run_ensemble_with_workers(spec: &EnsembleSpec, workers: usize) -> Result<EnsembleResult> {
    with_workers(workers, || run_ensemble(spec))
}

/// Runs `f` inside a rayon pool with `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}
