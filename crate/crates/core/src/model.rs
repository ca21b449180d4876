//! Random-field XXZ chain:
//!
//! ```text
//! H = Σ_i J (s^x_i s^x_{i+1} + s^y_i s^y_{i+1}) + Δ s^z_i s^z_{i+1} + h_i s^z_i
//! ```
//!
//! with open boundaries and fields h_i drawn uniformly from [-h, h]. In the
//! s^z product basis the flip-flop term is (s^+ s^- + s^- s^+)/2, so every
//! matrix element is real and the Hamiltonian is stored as a real symmetric
//! matrix.

use std::ops::Range;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::SectorBasis;
use crate::error::{Error, Result};

/// How Bob's qubit couples to the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Bob has no bonds and no field; only Alice touches the environment.
    IsolatedBob,
    /// Alice and Bob both sit inside the same chain.
    SharedEnvironment,
}

/// Which S_z = 0 Bell state the (Alice, Bob) pair starts in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BellState {
    /// (|↑↓⟩ + |↓↑⟩)/√2
    PsiPlus,
    /// (|↑↓⟩ − |↓↑⟩)/√2
    PsiMinus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Open,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Total number of sites, Alice and Bob included.
    pub n_sites: usize,
    /// Flip-flop coupling J.
    pub coupling: f64,
    /// Ising anisotropy Δ.
    pub delta: f64,
    /// Disorder half-width h.
    pub h_bound: f64,
    pub scenario: Scenario,
    pub alice_site: usize,
    pub bob_site: usize,
    pub bell_state: BellState,
    pub boundary: Boundary,
}

impl ChainConfig {
    /// Config with J = 1, Ψ+, open boundaries and the default pair placement
    /// for `scenario`.
    pub fn new(n_sites: usize, delta: f64, h_bound: f64, scenario: Scenario) -> Result<Self> {
        let cfg = ChainConfig {
            n_sites,
            coupling: 1.0,
            delta,
            h_bound,
            scenario,
            alice_site: 0,
            bob_site: default_bob_site(scenario, n_sites),
            bell_state: BellState::PsiPlus,
            boundary: Boundary::Open,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidChain(msg));
        if self.n_sites < 2 || self.n_sites % 2 != 0 {
            return bad(format!("L must be even and at least 2, got {}", self.n_sites));
        }
        if self.alice_site >= self.n_sites {
            return bad(format!("alice site {} outside chain of {}", self.alice_site, self.n_sites));
        }
        if self.bob_site >= self.n_sites {
            return bad(format!("bob site {} outside chain of {}", self.bob_site, self.n_sites));
        }
        if self.alice_site == self.bob_site {
            return bad("alice and bob must occupy different sites".into());
        }
        if !(self.coupling.is_finite() && self.coupling > 0.0) {
            return bad(format!("J must be positive, got {}", self.coupling));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return bad(format!("delta must be non-negative, got {}", self.delta));
        }
        if !(self.h_bound.is_finite() && self.h_bound >= 0.0) {
            return bad(format!("h must be non-negative, got {}", self.h_bound));
        }
        Ok(())
    }

    /// Whether the bond (i, i+1) is part of the Hamiltonian.
    pub fn has_bond(&self, i: usize) -> bool {
        match self.scenario {
            Scenario::SharedEnvironment => true,
            Scenario::IsolatedBob => i != self.bob_site && i + 1 != self.bob_site,
        }
    }

    /// Whether site `i` carries its random field term.
    pub fn has_field(&self, i: usize) -> bool {
        !(self.scenario == Scenario::IsolatedBob && i == self.bob_site)
    }

    /// Sites other than Alice and Bob, in increasing order.
    pub fn environment_sites(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_sites).filter(move |&i| i != self.alice_site && i != self.bob_site)
    }
}

/// Bob sits at the far end when isolated and next to Alice otherwise.
pub fn default_bob_site(scenario: Scenario, n_sites: usize) -> usize {
    match scenario {
        Scenario::IsolatedBob => n_sites.saturating_sub(1),
        Scenario::SharedEnvironment => 1,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub fields: Vec<f64>,
    pub seed: u64,
    pub realization_index: usize,
}

/// Draws one field per site (Alice and Bob included) from U[-h, h] using a
/// ChaCha8 stream seeded with `seed`.
pub fn draw_fields(config: &ChainConfig, seed: u64, realization_index: usize) -> DisorderRealization {
    let h = config.h_bound;
    let fields = if h == 0.0 {
        vec![0.0; config.n_sites]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..config.n_sites).map(|_| rng.random_range(-h..=h)).collect()
    };
    DisorderRealization { fields, seed, realization_index }
}

/// Dense real symmetric operator on a sector.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    entries: Mat<f64>,
}

impl HermitianOperator {
    pub fn from_matrix(entries: Mat<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch { expected: entries.nrows(), found: entries.ncols() });
        }
        Ok(HermitianOperator { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianOperator { entries: Mat::zeros(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> Mat<f64> {
        self.entries
    }

    /// max |H − H†| over all entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_check(&self.entries)
    }
}

/// Elementwise max |A − Aᵀ| of a real matrix.
pub fn hermiticity_check(a: &Mat<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Builds H on `basis`. With `active_sites`, only bonds whose endpoints both
/// lie in the range and fields of sites inside it are kept.
pub fn build_hamiltonian(
    config: &ChainConfig,
    realization: &DisorderRealization,
    basis: &SectorBasis,
    active_sites: Option<Range<usize>>,
) -> Result<HermitianOperator> {
    let l = config.n_sites;
    if basis.n_sites() != l {
        return Err(Error::DimensionMismatch { expected: l, found: basis.n_sites() });
    }
    if realization.fields.len() != l {
        return Err(Error::DimensionMismatch { expected: l, found: realization.fields.len() });
    }
    let active = match active_sites {
        Some(r) if r.start >= r.end || r.end > l => {
            return Err(Error::InvalidSiteRange { start: r.start, end: r.end, n_sites: l })
        }
        Some(r) => r,
        None => 0..l,
    };

    let bonds: Vec<usize> = (0..l.saturating_sub(1))
        .filter(|&i| config.has_bond(i) && active.contains(&i) && active.contains(&(i + 1)))
        .collect();
    let field_sites: Vec<usize> = (0..l).filter(|&i| config.has_field(i) && active.contains(&i)).collect();

    let j_half = 0.5 * config.coupling;
    let dim = basis.dim();
    let mut h = Mat::<f64>::zeros(dim, dim);
    for (k, &state) in basis.states().iter().enumerate() {
        let mut diag = 0.0;
        for &i in &bonds {
            let aligned = state.is_up(i) == state.is_up(i + 1);
            diag += if aligned { 0.25 * config.delta } else { -0.25 * config.delta };
            if !aligned {
                let partner = basis.index_of(state.swap_sites(i, i + 1)).expect("flip-flop stays inside the sector");
                h[(partner, k)] = j_half;
            }
        }
        for &i in &field_sites {
            let sz = if state.is_up(i) { 0.5 } else { -0.5 };
            diag += realization.fields[i] * sz;
        }
        h[(k, k)] = diag;
    }
    Ok(HermitianOperator { entries: h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_sector;

    fn realization(fields: Vec<f64>) -> DisorderRealization {
        DisorderRealization { fields, seed: 0, realization_index: 0 }
    }

    #[test]
    fn two_site_matrix() {
        let (j, delta, h1, h2) = (1.3, 0.7, 0.4, -1.1);
        let mut cfg = ChainConfig::new(2, delta, 2.0, Scenario::SharedEnvironment).unwrap();
        cfg.coupling = j;
        let basis = enumerate_sector(2, 0).unwrap();
        let h = build_hamiltonian(&cfg, &realization(vec![h1, h2]), &basis, None).unwrap();
        // basis {01, 10}: state 0 has site 0 up.
        let expect = [[-delta / 4.0 + (h1 - h2) / 2.0, j / 2.0], [j / 2.0, -delta / 4.0 + (h2 - h1) / 2.0]];
        for r in 0..2 {
            for c in 0..2 {
                assert!((h.get(r, c) - expect[r][c]).abs() < 1e-15, "({r},{c})");
            }
        }
    }

    #[test]
    fn free_clean_chain_is_flip_flop_adjacency() {
        let cfg = ChainConfig::new(6, 0.0, 0.0, Scenario::SharedEnvironment).unwrap();
        let basis = enumerate_sector(6, 0).unwrap();
        let real = draw_fields(&cfg, 1, 0);
        let h = build_hamiltonian(&cfg, &real, &basis, None).unwrap();
        for a in 0..basis.dim() {
            for b in 0..basis.dim() {
                let x = basis.state(a).bits() ^ basis.state(b).bits();
                let adjacent = x.count_ones() == 2 && (x >> x.trailing_zeros()) == 0b11;
                let expect = if adjacent { 0.5 } else { 0.0 };
                assert_eq!(h.get(a, b), expect);
            }
        }
    }

    #[test]
    fn isolated_bob_ignores_his_field_and_bonds() {
        let cfg = ChainConfig::new(6, 0.3, 2.0, Scenario::IsolatedBob).unwrap();
        assert_eq!(cfg.bob_site, 5);
        let basis = enumerate_sector(6, 0).unwrap();
        let mut fields = draw_fields(&cfg, 9, 0).fields;
        let h1 = build_hamiltonian(&cfg, &realization(fields.clone()), &basis, None).unwrap();
        fields[5] += 7.5;
        let h2 = build_hamiltonian(&cfg, &realization(fields), &basis, None).unwrap();
        for a in 0..basis.dim() {
            for b in 0..basis.dim() {
                assert_eq!(h1.get(a, b), h2.get(a, b));
                if a != b && h1.get(a, b) != 0.0 {
                    let x = basis.state(a).bits() ^ basis.state(b).bits();
                    assert_eq!(x & (1 << 5), 0, "flip through Bob's site");
                }
            }
        }
    }

    #[test]
    fn hermiticity() {
        let cfg = ChainConfig::new(8, 0.5, 3.0, Scenario::SharedEnvironment).unwrap();
        let basis = enumerate_sector(8, 0).unwrap();
        let h = build_hamiltonian(&cfg, &draw_fields(&cfg, 3, 0), &basis, None).unwrap();
        assert!(h.hermiticity_deviation() <= 1e-12);

        assert_eq!(HermitianOperator::zeros(5).hermiticity_deviation(), 0.0);
        let mut m = h.into_matrix();
        m[(0, 3)] += 1e-3;
        assert!(hermiticity_check(&m) > 0.0);
    }

    #[test]
    fn truncation_keeps_window_terms_only() {
        let cfg = ChainConfig::new(6, 0.4, 2.0, Scenario::SharedEnvironment).unwrap();
        let basis = enumerate_sector(6, 0).unwrap();
        let real = draw_fields(&cfg, 5, 0);
        let h = build_hamiltonian(&cfg, &real, &basis, Some(0..4)).unwrap();
        for a in 0..basis.dim() {
            for b in 0..basis.dim() {
                if a != b && h.get(a, b) != 0.0 {
                    let x = basis.state(a).bits() ^ basis.state(b).bits();
                    assert_eq!(x & 0b110000, 0);
                }
            }
        }
        // moving fields outside the window changes nothing
        let mut other = real.clone();
        other.fields[4] = -1.0;
        other.fields[5] = 1.9;
        let h2 = build_hamiltonian(&cfg, &other, &basis, Some(0..4)).unwrap();
        assert_eq!(h.matrix(), h2.matrix());
    }

    #[test]
    fn build_errors() {
        let cfg = ChainConfig::new(6, 0.4, 2.0, Scenario::SharedEnvironment).unwrap();
        let real = draw_fields(&cfg, 5, 0);
        let wrong = enumerate_sector(4, 0).unwrap();
        assert!(matches!(build_hamiltonian(&cfg, &real, &wrong, None), Err(Error::DimensionMismatch { .. })));
        let basis = enumerate_sector(6, 0).unwrap();
        assert!(matches!(build_hamiltonian(&cfg, &real, &basis, Some(3..3)), Err(Error::InvalidSiteRange { .. })));
        assert!(matches!(build_hamiltonian(&cfg, &real, &basis, Some(2..7)), Err(Error::InvalidSiteRange { .. })));
    }

    #[test]
    fn fields_respect_bounds() {
        let cfg = ChainConfig::new(12, 0.0, 0.0, Scenario::IsolatedBob).unwrap();
        assert!(draw_fields(&cfg, 77, 0).fields.iter().all(|&h| h == 0.0));

        let cfg = ChainConfig::new(12, 0.0, 3.0, Scenario::IsolatedBob).unwrap();
        for seed in 0..200 {
            let r = draw_fields(&cfg, seed, seed as usize);
            assert_eq!(r.fields.len(), 12);
            assert!(r.fields.iter().all(|h| h.abs() <= 3.0));
            assert_eq!(r, draw_fields(&cfg, seed, seed as usize));
        }
    }

    #[test]
    fn field_golden_values() {
        let cfg = ChainConfig::new(4, 0.0, 3.0, Scenario::SharedEnvironment).unwrap();
        let r = draw_fields(&cfg, 0x5EED, 0);
        let golden = GOLDEN_FIELDS;
        for (a, b) in r.fields.iter().zip(golden) {
            assert_eq!(a.to_bits(), b.to_bits(), "{:?}", r.fields);
        }
    }

    // Recorded once from ChaCha8(seed 0x5EED) through rand's uniform sampler.
    const GOLDEN_FIELDS: [f64; 4] = [0.6050168951961981, 2.3768456066298427, -0.5329303579311215, -2.344882317064128];

    #[test]
    fn config_validation() {
        assert!(ChainConfig::new(7, 0.0, 3.0, Scenario::IsolatedBob).is_err());
        assert!(ChainConfig::new(8, -0.1, 3.0, Scenario::IsolatedBob).is_err());
        assert!(ChainConfig::new(8, 0.0, -3.0, Scenario::IsolatedBob).is_err());
        let mut cfg = ChainConfig::new(8, 0.0, 3.0, Scenario::IsolatedBob).unwrap();
        cfg.bob_site = 0;
        assert!(cfg.validate().is_err());
        cfg.bob_site = 8;
        assert!(cfg.validate().is_err());
    }
}
