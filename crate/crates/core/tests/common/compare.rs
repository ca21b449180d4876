//! Library pipeline against the brute-force reference.

use epr_loc::basis::enumerate_sector;
use epr_loc::dynamics::{diagonalize, evolve_many, initial_state};
use epr_loc::experiment::ChainPipeline;
use epr_loc::measures::evaluate_all;
use epr_loc::model::{build_hamiltonian, BellState, ChainConfig, DisorderRealization, Scenario};
use epr_loc::reduced::PairReducer;

use super::*;

pub fn oracle_chain(cfg: &ChainConfig, fields: &[f64]) -> Chain {
    Chain {
        l: cfg.n_sites,
        j: cfg.coupling,
        delta: cfg.delta,
        fields: fields.to_vec(),
        alice: cfg.alice_site,
        bob: cfg.bob_site,
        isolated_bob: cfg.scenario == Scenario::IsolatedBob,
        psi_minus: cfg.bell_state == BellState::PsiMinus,
    }
}

/// Largest deviations seen over a time grid.
#[derive(Clone, Copy, Debug, Default)]
pub struct Deviations {
    pub state: f64,
    pub rho: f64,
    pub negativity: f64,
    pub log_negativity: f64,
    pub concurrence: f64,
    pub formation: f64,
}

impl Deviations {
    pub fn max(&self) -> f64 {
        [self.state, self.rho, self.negativity, self.log_negativity, self.concurrence, self.formation]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn compare_with_oracle(cfg: &ChainConfig, realization: &DisorderRealization, times: &[f64]) -> Deviations {
    let l = cfg.n_sites;
    let basis = enumerate_sector(l, 0).unwrap();
    let h = build_hamiltonian(cfg, realization, &basis, None).unwrap();
    let spec = diagonalize(&h).unwrap();
    let psi0 = initial_state(cfg, &basis).unwrap();
    let states = evolve_many(&spec, &psi0, times).unwrap();
    let reducer = PairReducer::new(&basis, cfg.alice_site, cfg.bob_site).unwrap();
    let records = ChainPipeline::new(cfg).unwrap().run(realization, times).unwrap();

    let ch = oracle_chain(cfg, &realization.fields);
    let prop = FullPropagator::new(&full_hamiltonian(&ch, None));
    let full0 = full_initial_state(&ch);

    let mut dev = Deviations::default();
    for (i, &t) in times.iter().enumerate() {
        let full = prop.evolve(&full0, t);
        let amps = states[i].amplitudes();
        let mut in_sector = vec![false; full.len()];
        for (k, a) in amps.iter().enumerate() {
            let cfg_bits = basis.state(k).0 as usize;
            in_sector[cfg_bits] = true;
            dev.state = dev.state.max((a - full[cfg_bits]).norm());
        }
        for (x, z) in full.iter().enumerate() {
            if !in_sector[x] {
                dev.state = dev.state.max(z.norm());
            }
        }

        let rho_lib = reducer.reduce(&states[i]).unwrap();
        let rho = full_partial_trace(&full, l, cfg.alice_site, cfg.bob_site);
        for r in 0..4 {
            for c in 0..4 {
                dev.rho = dev.rho.max((rho_lib.matrix()[(r, c)] - rho[(r, c)]).norm());
            }
        }

        let n = oracle_negativity(&rho);
        let conc = if off_x_weight(&rho) < 1e-14 { x_state_concurrence(&rho) } else { oracle_concurrence(&rho) };
        let expected = [n, (n + 1.0).log2(), conc, formation(conc)];
        let direct = evaluate_all(&rho_lib, t).unwrap();
        for rec in [&records[i], &direct] {
            assert_eq!(rec.t, t);
            dev.negativity = dev.negativity.max((rec.negativity - expected[0]).abs());
            dev.log_negativity = dev.log_negativity.max((rec.log_negativity - expected[1]).abs());
            dev.concurrence = dev.concurrence.max((rec.concurrence - expected[2]).abs());
            dev.formation = dev.formation.max((rec.formation - expected[3]).abs());
        }
    }
    dev
}
