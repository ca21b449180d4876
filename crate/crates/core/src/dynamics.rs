//! Initial state, exact diagonalization and spectral time evolution.
//!
//! The Hamiltonian is split into its connected blocks (components of the
//! graph of nonzero off-diagonal elements) before diagonalizing. A decoupled
//! Bob halves the problem into two independent blocks, and truncated chains
//! break into many small ones; each block is diagonalized on its own and
//! evolution is a dense product per block.

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors};
use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{SectorBasis, SpinConfiguration};
use crate::error::{Error, Result};
use crate::model::{BellState, ChainConfig, HermitianOperator};

/// Amplitudes over a sector basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    sz_twice: i32,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(basis: &SectorBasis, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: amplitudes.len() });
        }
        Ok(StateVector { n_sites: basis.n_sites(), sz_twice: basis.sz_twice(), amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// True if this state was built over `basis`.
    pub fn matches(&self, basis: &SectorBasis) -> bool {
        self.n_sites == basis.n_sites() && self.sz_twice == basis.sz_twice() && self.dim() == basis.dim()
    }

    /// ⟨ψ|H|ψ⟩.
    pub fn expectation(&self, op: &HermitianOperator) -> Result<f64> {
        let n = self.dim();
        if op.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: op.dim() });
        }
        let m = op.matrix();
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let mut col = Complex64::new(0.0, 0.0);
            for i in 0..n {
                col += self.amplitudes[i].conj() * m[(i, j)];
            }
            acc += col * self.amplitudes[j];
        }
        Ok(acc.re)
    }
}

/// Néel mask ↑↓↑↓… over the environment sites in increasing order.
pub fn neel_environment(config: &ChainConfig) -> u64 {
    config.environment_sites().enumerate().filter(|(j, _)| j % 2 == 0).fold(0u64, |mask, (_, site)| mask | (1 << site))
}

/// |Bell⟩_AB ⊗ |Néel⟩_E, with the Néel pattern ↑↓↑↓… running over the
/// environment sites in increasing order.
pub fn initial_state(config: &ChainConfig, basis: &SectorBasis) -> Result<StateVector> {
    pair_product_state(config, basis, neel_environment(config))
}

/// |Bell⟩_AB ⊗ |env⟩ for an arbitrary environment configuration; bits of
/// `environment` on Alice's or Bob's site are ignored.
pub fn pair_product_state(config: &ChainConfig, basis: &SectorBasis, environment: u64) -> Result<StateVector> {
    config.validate()?;
    if basis.n_sites() != config.n_sites || basis.sz_twice() != 0 {
        return Err(Error::InvalidDimension(format!(
            "initial state needs the S_z = 0 sector of {} sites, got L = {}, 2S_z = {}",
            config.n_sites,
            basis.n_sites(),
            basis.sz_twice()
        )));
    }
    let alice = 1u64 << config.alice_site;
    let bob = 1u64 << config.bob_site;
    let env = environment & !(alice | bob);
    let up_down = basis.index_of(SpinConfiguration(env | alice));
    let down_up = basis.index_of(SpinConfiguration(env | bob));
    let (Some(ud), Some(du)) = (up_down, down_up) else {
        return Err(Error::InvalidDimension("pair ⊗ environment state is not in the sector".into()));
    };

    let amp = std::f64::consts::FRAC_1_SQRT_2;
    let sign = match config.bell_state {
        BellState::PsiPlus => 1.0,
        BellState::PsiMinus => -1.0,
    };
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dim()];
    amplitudes[ud] = Complex64::new(amp, 0.0);
    amplitudes[du] = Complex64::new(sign * amp, 0.0);
    StateVector::new(basis, amplitudes)
}

/// Eigendecomposition of one connected block.
#[derive(Clone, Debug)]
pub struct SpectralBlock {
    /// Sector indices spanned by the block, ascending.
    pub members: Vec<usize>,
    /// Ascending eigenvalues.
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors as columns, rows indexed like `members`.
    pub vectors: Mat<f64>,
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    dim: usize,
    blocks: Vec<SpectralBlock>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[SpectralBlock] {
        &self.blocks
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.sorted_columns().into_iter().map(|(e, _, _)| e).collect()
    }

    /// Dense eigenvector matrix, columns ordered like [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> Mat<f64> {
        let mut v = Mat::<f64>::zeros(self.dim, self.dim);
        for (col, (_, b, c)) in self.sorted_columns().into_iter().enumerate() {
            let block = &self.blocks[b];
            for (r, &row) in block.members.iter().enumerate() {
                v[(row, col)] = block.vectors[(r, c)];
            }
        }
        v
    }

    fn sorted_columns(&self) -> Vec<(f64, usize, usize)> {
        let mut cols: Vec<(f64, usize, usize)> = self
            .blocks
            .iter()
            .enumerate()
            .flat_map(|(b, blk)| blk.energies.iter().enumerate().map(move |(c, &e)| (e, b, c)))
            .collect();
        cols.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        cols
    }
}

/// Splits `0..dim` into the connected components of the off-diagonal pattern.
fn connected_blocks(h: &Mat<f64>) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..n {
        for i in (j + 1)..n {
            if h[(i, j)] != 0.0 || h[(j, i)] != 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        if label[root] == usize::MAX {
            label[root] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[label[root]].push(i);
    }
    blocks
}

fn eigh_block(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    let mut s = Diag::<f64>::zeros(n);
    let mut u = Mat::<f64>::zeros(n, n);
    let par = Par::Seq;
    let mut mem = MemBuffer::new(self_adjoint_evd_scratch::<f64>(n, ComputeEigenvectors::Yes, par, Default::default()));
    self_adjoint_evd(a.as_ref(), s.as_mut(), Some(u.as_mut()), par, MemStack::new(&mut mem), Default::default())
        .map_err(|_| Error::Solver { seed: None })?;
    let energies: Vec<f64> = (0..n).map(|i| s[i]).collect();
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::Solver { seed: None });
    }
    Ok((energies, u))
}

/// Full eigendecomposition, block by block. Runs single-threaded so results
/// are independent of the caller's thread pool.
pub fn diagonalize(h: &HermitianOperator) -> Result<SpectralDecomposition> {
    let m = h.matrix();
    let dim = m.nrows();
    let mut blocks = Vec::new();
    for members in connected_blocks(m) {
        let sub = Mat::<f64>::from_fn(members.len(), members.len(), |i, j| m[(members[i], members[j])]);
        let (energies, vectors) = eigh_block(&sub)?;
        blocks.push(SpectralBlock { members, energies, vectors });
    }
    Ok(SpectralDecomposition { dim, blocks })
}

/// ψ(t) = V e^{−iEt} V† ψ0.
pub fn evolve(spec: &SpectralDecomposition, psi0: &StateVector, t: f64) -> Result<StateVector> {
    Ok(evolve_many(spec, psi0, &[t])?.pop().expect("one time requested"))
}

/// Evolves `psi0` to every time in `times` with one matrix product per block.
pub fn evolve_many(spec: &SpectralDecomposition, psi0: &StateVector, times: &[f64]) -> Result<Vec<StateVector>> {
    let dim = spec.dim;
    if psi0.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: psi0.dim() });
    }
    if let Some(&t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::InvalidGrid(format!("evolution time must be finite and ≥ 0, got {t}")));
    }
    let n_t = times.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; n_t];
    let amps = psi0.amplitudes();

    for block in &spec.blocks {
        let n = block.members.len();
        let v = &block.vectors;
        // c = Vᵀ ψ0 restricted to the block; skip blocks the state never touches.
        let local: Vec<Complex64> = block.members.iter().map(|&i| amps[i]).collect();
        if local.iter().all(|a| *a == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let coeffs: Vec<Complex64> =
            (0..n).map(|c| (0..n).fold(Complex64::new(0.0, 0.0), |acc, r| acc + local[r] * v[(r, c)])).collect();

        // Phased coefficients for all times: columns (re_0, im_0, re_1, im_1, ...).
        let mut w = Mat::<f64>::zeros(n, 2 * n_t);
        for (k, &t) in times.iter().enumerate() {
            for (c, &e) in block.energies.iter().enumerate() {
                let z = coeffs[c] * Complex64::from_polar(1.0, -e * t);
                w[(c, 2 * k)] = z.re;
                w[(c, 2 * k + 1)] = z.im;
            }
        }
        let mut psi = Mat::<f64>::zeros(n, 2 * n_t);
        matmul(psi.as_mut(), Accum::Replace, v.as_ref(), w.as_ref(), 1.0, Par::Seq);

        for (k, state) in out.iter_mut().enumerate() {
            for (r, &row) in block.members.iter().enumerate() {
                state[row] = Complex64::new(psi[(r, 2 * k)], psi[(r, 2 * k + 1)]);
            }
        }
    }

    Ok(times
        .iter()
        .zip(out)
        .map(|(&t, amplitudes)| {
            if t == 0.0 {
                psi0.clone()
            } else {
                StateVector { n_sites: psi0.n_sites, sz_twice: psi0.sz_twice, amplitudes }
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Logarithmic,
    Linear,
}

/// Strictly increasing positive sample times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub times: Vec<f64>,
    pub spacing: Spacing,
}

impl TimeGrid {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().expect("grid is never empty")
    }

    pub fn t_min(&self) -> f64 {
        self.times[0]
    }

    /// Ten points per decade from 0.1 up to 10^(⌈log10(1/Δ)⌉ + 3), or 10^6
    /// when Δ = 0.
    pub fn default_for_delta(delta: f64) -> Self {
        let top = if delta > 0.0 { (1.0 / delta).log10().ceil() as i32 + 3 } else { 6 };
        let top = top.max(1);
        let n = (top + 1) as usize * 10 + 1;
        make_time_grid(0.1, 10f64.powi(top), n, Spacing::Logarithmic).expect("valid default grid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() < 2 {
            return Err(Error::InvalidGrid("need at least two times".into()));
        }
        if self.times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidGrid("times must be positive and finite".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("times must be strictly increasing".into()));
        }
        Ok(())
    }
}

pub fn make_time_grid(t_min: f64, t_max: f64, n_points: usize, spacing: Spacing) -> Result<TimeGrid> {
    if !(t_min.is_finite() && t_max.is_finite() && t_min > 0.0 && t_min < t_max) {
        return Err(Error::InvalidGrid(format!("need 0 < t_min < t_max, got [{t_min}, {t_max}]")));
    }
    if n_points < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 points, got {n_points}")));
    }
    let last = (n_points - 1) as f64;
    let mut times: Vec<f64> = match spacing {
        Spacing::Linear => {
            let step = (t_max - t_min) / last;
            (0..n_points).map(|k| t_min + step * k as f64).collect()
        }
        Spacing::Logarithmic => {
            let (a, b) = (t_min.log10(), t_max.log10());
            let step = (b - a) / last;
            (0..n_points).map(|k| 10f64.powf(a + step * k as f64)).collect()
        }
    };
    times[0] = t_min;
    times[n_points - 1] = t_max;
    let grid = TimeGrid { times, spacing };
    grid.validate()?;
    Ok(grid)
}
