//! Fixed-magnetization sectors of a spin-1/2 chain.
//!
//! A configuration is an `L`-bit mask: bit `i` set means site `i` is spin-up
//! (s_i^z = +1/2). Site 0 is the leftmost chain site. A sector is the set of
//! all masks with a given popcount, kept in ascending integer order so that
//! the ordinal of a configuration does not depend on how it was enumerated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest chain supported by the bitmask representation.
pub const MAX_SITES: usize = 62;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinConfiguration(pub u64);

impl SpinConfiguration {
    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_up(self, site: usize) -> bool {
        (self.0 >> site) & 1 == 1
    }

    /// Number of up spins.
    #[inline]
    pub fn n_up(self) -> u32 {
        self.0.count_ones()
    }

    /// Exchanges the spins on two sites.
    #[inline]
    pub fn swap_sites(self, i: usize, j: usize) -> Self {
        if self.is_up(i) == self.is_up(j) {
            self
        } else {
            SpinConfiguration(self.0 ^ ((1 << i) | (1 << j)))
        }
    }

    /// Twice the total magnetization, 2·Σ s_i^z, over `n_sites` sites.
    pub fn sz_twice(self, n_sites: usize) -> i32 {
        2 * self.n_up() as i32 - n_sites as i32
    }
}

/// s^z eigenvalue (±1/2) of `site` in `config` for a chain of `n_sites`.
pub fn site_spin(config: SpinConfiguration, site: usize, n_sites: usize) -> Result<f64> {
    if site >= n_sites {
        return Err(Error::SiteOutOfRange { site, n_sites });
    }
    Ok(if config.is_up(site) { 0.5 } else { -0.5 })
}

/// All configurations of `n_sites` spins with total magnetization `sz_twice / 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorBasis {
    n_sites: usize,
    sz_twice: i32,
    states: Vec<SpinConfiguration>,
}

impl SectorBasis {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn sz_twice(&self) -> i32 {
        self.sz_twice
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[SpinConfiguration] {
        &self.states
    }

    pub fn state(&self, k: usize) -> SpinConfiguration {
        self.states[k]
    }

    /// Ordinal of `config` in the canonical order, if it belongs to the sector.
    pub fn index_of(&self, config: SpinConfiguration) -> Option<usize> {
        self.states.binary_search(&config).ok()
    }
}

/// Enumerates the sector with `2·S_z = sz_twice` for a chain of `n_sites`.
pub fn enumerate_sector(n_sites: usize, sz_twice: i32) -> Result<SectorBasis> {
    if n_sites == 0 || n_sites % 2 != 0 {
        return Err(Error::InvalidDimension(format!("L must be a positive even integer, got {n_sites}")));
    }
    if n_sites > MAX_SITES {
        return Err(Error::InvalidDimension(format!("L = {n_sites} exceeds the supported maximum of {MAX_SITES}")));
    }
    let l = n_sites as i64;
    let m = sz_twice as i64;
    if m.abs() > l || (l + m) % 2 != 0 {
        return Err(Error::InvalidDimension(format!("2·S_z = {sz_twice} is not reachable with L = {n_sites}")));
    }
    let n_up = ((l + m) / 2) as u32;

    let mut states = Vec::with_capacity(binomial(n_sites as u64, n_up as u64) as usize);
    if n_up == 0 {
        states.push(SpinConfiguration(0));
    } else {
        // Gosper's hack walks the fixed-popcount masks in ascending order.
        let limit = 1u64 << n_sites;
        let mut x: u64 = (1u64 << n_up) - 1;
        while x < limit {
            states.push(SpinConfiguration(x));
            let c = x & x.wrapping_neg();
            let r = x + c;
            x = (((r ^ x) >> 2) / c) | r;
        }
    }

    Ok(SectorBasis { n_sites, sz_twice, states })
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}
