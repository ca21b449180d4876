//! Partial trace down to the (Alice, Bob) pair.
//!
//! Pair basis order is |↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩ with Alice as the first factor.

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::basis::SectorBasis;
use crate::dynamics::StateVector;
use crate::error::{Error, Result};

/// Index of (Alice up?, Bob up?) in the pair basis.
#[inline]
pub fn pair_index(alice_up: bool, bob_up: bool) -> usize {
    (if alice_up { 0 } else { 2 }) + (if bob_up { 0 } else { 1 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitDensity(pub Matrix4<Complex64>);

impl TwoQubitDensity {
    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    /// Projector onto a normalized pure state given in the pair basis.
    pub fn pure(amplitudes: [Complex64; 4]) -> Self {
        TwoQubitDensity(Matrix4::from_fn(|i, j| amplitudes[i] * amplitudes[j].conj()))
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.0 - self.0.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let e = self.0.symmetric_eigenvalues();
        let mut out = [e[0], e[1], e[2], e[3]];
        out.sort_by(f64::total_cmp);
        out
    }

    /// Checks Hermiticity (1e-12), unit trace (1e-10) and positivity (−1e-10).
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_deviation();
        if !(herm <= 1e-12) {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.trace();
        if !((tr.re - 1.0).abs() <= 1e-10 && tr.im.abs() <= 1e-10) {
            return Err(Error::InvalidDensity(format!("trace is {tr}")));
        }
        let lowest = self.eigenvalues()[0];
        if !(lowest >= -1e-10) {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {lowest:e}")));
        }
        Ok(())
    }

    /// Row-major entries with interleaved real and imaginary parts.
    pub fn to_interleaved(&self) -> [f64; 32] {
        let mut out = [0.0; 32];
        for i in 0..4 {
            for j in 0..4 {
                let z = self.0[(i, j)];
                out[2 * (4 * i + j)] = z.re;
                out[2 * (4 * i + j) + 1] = z.im;
            }
        }
        out
    }

    pub fn from_interleaved(values: &[f64; 32]) -> Self {
        TwoQubitDensity(Matrix4::from_fn(|i, j| Complex64::new(values[2 * (4 * i + j)], values[2 * (4 * i + j) + 1])))
    }
}

/// Precomputed grouping of sector states by environment configuration, so
/// each reduction is a single O(dim) pass.
#[derive(Clone, Debug)]
pub struct PairReducer {
    dim: usize,
    n_sites: usize,
    /// For each environment configuration, the sector index of each pair
    /// basis state that occurs with it.
    groups: Vec<[Option<usize>; 4]>,
}

impl PairReducer {
    pub fn new(basis: &SectorBasis, alice_site: usize, bob_site: usize) -> Result<Self> {
        let n_sites = basis.n_sites();
        for site in [alice_site, bob_site] {
            if site >= n_sites {
                return Err(Error::SiteOutOfRange { site, n_sites });
            }
        }
        if alice_site == bob_site {
            return Err(Error::InvalidChain("alice and bob must occupy different sites".into()));
        }
        let pair_mask = (1u64 << alice_site) | (1u64 << bob_site);
        let mut keyed: Vec<(u64, usize, usize)> = basis
            .states()
            .iter()
            .enumerate()
            .map(|(k, s)| (s.bits() & !pair_mask, pair_index(s.is_up(alice_site), s.is_up(bob_site)), k))
            .collect();
        keyed.sort_unstable();

        let mut groups: Vec<[Option<usize>; 4]> = Vec::new();
        let mut last_env = None;
        for (env, p, k) in keyed {
            if last_env != Some(env) {
                groups.push([None; 4]);
                last_env = Some(env);
            }
            groups.last_mut().expect("pushed above")[p] = Some(k);
        }
        Ok(PairReducer { dim: basis.dim(), n_sites, groups })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// ρ_AB[p, q] = Σ_env ψ(p, env) ψ*(q, env).
    pub fn reduce(&self, psi: &StateVector) -> Result<TwoQubitDensity> {
        if psi.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: psi.dim() });
        }
        let amps = psi.amplitudes();
        let zero = Complex64::new(0.0, 0.0);
        let mut rho = Matrix4::<Complex64>::zeros();
        for group in &self.groups {
            let a = group.map(|k| k.map_or(zero, |k| amps[k]));
            for p in 0..4 {
                if a[p] == zero {
                    continue;
                }
                for q in p..4 {
                    rho[(p, q)] += a[p] * a[q].conj();
                }
            }
        }
        for p in 0..4 {
            rho[(p, p)].im = 0.0;
            for q in (p + 1)..4 {
                rho[(q, p)] = rho[(p, q)].conj();
            }
        }
        Ok(TwoQubitDensity(rho))
    }
}

pub fn reduce_to_pair(
    psi: &StateVector,
    basis: &SectorBasis,
    alice_site: usize,
    bob_site: usize,
) -> Result<TwoQubitDensity> {
    if !psi.matches(basis) {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: psi.dim() });
    }
    PairReducer::new(basis, alice_site, bob_site)?.reduce(psi)
}
