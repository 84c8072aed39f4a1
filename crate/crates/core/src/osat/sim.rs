//! The simulator for the Oracle-3SAT PCP, and the brute-force equivalence
//! check between implicit satisfiability and commitment-level vanishing.
//!
//! Commitment queries are answered lazily as evaluations of a uniformly
//! random polynomial with the commitment's individual-degree bounds,
//! conditioned on all answers given so far. When the adversary first touches
//! a per-tau bundle, the lazy state is saturated into one full polynomial Z
//! drawn from the current solution set (the sequential-consistency property
//! of the lazy sampler makes this distribution-preserving), and a reference
//! sub-simulation rebuilds an honest-style bundle from Z with fresh masks.
//! All later commitment reads come from Z, so every sub-simulation routes
//! through a single consistent state.

use super::tau::{OSatSystem, TauBundle};
use super::{a_hat_from_commitment, brute_force_witness, osat_check_direct, OsatError};
use crate::adversary::{Adversary, AnswerSource};
use crate::field::FieldElem;
use crate::oracles::{OracleError, OracleIndex, Symbol, VerifierView};
use crate::poly::{DegreeBounds, MultiPoly};
use crate::polysim::PolySim;
use crate::seeds::{child_seed, rng_from, Seed};
use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;

/// Oracle names used by adversaries against both real proofs and the
/// simulator. Per-tau parts are addressed by flat points carrying tau
/// followed by the in-part index.
pub const ORACLE_PI_C: &str = "pi_c";
pub const ORACLE_TAU_SIGMA: &str = "tau_sigma";
pub const ORACLE_TAU_P: &str = "tau_p";

/// Answer source over a real proof.
pub struct RealProofSource<'a> {
    pub oracles: &'a super::tau::OSatProofOracles<'a>,
    bundles: HashMap<Vec<u32>, TauBundle<'a>>,
}

impl<'a> RealProofSource<'a> {
    pub fn new(oracles: &'a super::tau::OSatProofOracles<'a>) -> Self {
        RealProofSource {
            oracles,
            bundles: HashMap::new(),
        }
    }
}

fn split_tau_index<'p>(
    system: &OSatSystem,
    pt: &'p [FieldElem],
    part_len: usize,
) -> Result<(Vec<FieldElem>, &'p [FieldElem]), OracleError> {
    let m_tau = system.params.big_m();
    if pt.len() != m_tau + part_len {
        return Err(OracleError::OutOfDomain(format!(
            "tau-indexed query must carry {m_tau} + {part_len} coordinates, got {}",
            pt.len()
        )));
    }
    Ok((pt[..m_tau].to_vec(), &pt[m_tau..]))
}

fn key(tau: &[FieldElem]) -> Vec<u32> {
    tau.iter().map(|e| e.0).collect()
}

impl AnswerSource for RealProofSource<'_> {
    fn answer(&mut self, oracle: &str, idx: &OracleIndex) -> Result<Symbol, OracleError> {
        let system = self.oracles.system;
        let m_sum = system.sum_instance().map_err(to_oracle_err)?.m;
        let pt = match idx {
            OracleIndex::Point(p) => p,
            other => return Err(OracleError::OutOfDomain(format!("{other:?}"))),
        };
        match oracle {
            ORACLE_PI_C => {
                let p = &system.params;
                if pt.len() != p.m2 + p.k {
                    return Err(OracleError::OutOfDomain("pi_c arity".into()));
                }
                Ok(vec![self.oracles.chat.eval(pt).expect("arity checked")])
            }
            ORACLE_TAU_SIGMA => {
                let (tau, rest) = split_tau_index(system, pt, m_sum - 1)?;
                let rest = rest.to_vec();
                let k = key(&tau);
                if !self.bundles.contains_key(&k) {
                    let bundle = self.oracles.tau_bundle(&tau).map_err(to_oracle_err)?;
                    self.bundles.insert(k.clone(), bundle);
                }
                Ok(self
                    .bundles
                    .get_mut(&k)
                    .expect("just inserted")
                    .sigma_symbol(&rest))
            }
            ORACLE_TAU_P => {
                let (tau, rest) = split_tau_index(system, pt, m_sum)?;
                let rest = rest.to_vec();
                let k = key(&tau);
                if !self.bundles.contains_key(&k) {
                    let bundle = self.oracles.tau_bundle(&tau).map_err(to_oracle_err)?;
                    self.bundles.insert(k.clone(), bundle);
                }
                Ok(self
                    .bundles
                    .get_mut(&k)
                    .expect("just inserted")
                    .p_symbol(&rest))
            }
            other => Err(OracleError::OutOfDomain(format!("unknown oracle {other}"))),
        }
    }
}

fn to_oracle_err(e: OsatError) -> OracleError {
    match e {
        OsatError::Oracle(o) => o,
        other => OracleError::Backend(other.to_string()),
    }
}

/// The simulator's answer source.
pub struct SimulatorSource<'a> {
    pub system: &'a OSatSystem,
    polysim: PolySim,
    z: Option<MultiPoly>,
    bundles: HashMap<Vec<u32>, TauBundle<'a>>,
    rng: ChaCha20Rng,
    seed: Seed,
    tau_counter: u64,
}

impl<'a> SimulatorSource<'a> {
    pub fn new(system: &'a OSatSystem, seed: Seed) -> Self {
        let p = &system.params;
        let polysim = PolySim::new(
            &p.field,
            p.m2 + p.k,
            DegreeBounds::PerVar(vec![p.c_ind_degree; p.m2 + p.k]),
        );
        SimulatorSource {
            system,
            polysim,
            z: None,
            bundles: HashMap::new(),
            rng: rng_from(child_seed(&seed, "sim-polysim", 0)),
            seed,
            tau_counter: 0,
        }
    }

    fn pi_c_answer(&mut self, q: &[FieldElem]) -> Result<FieldElem, OracleError> {
        if let Some(z) = &self.z {
            return Ok(z.eval(q).expect("arity"));
        }
        self.polysim
            .query(q, &mut self.rng)
            .map_err(|e| OracleError::Backend(e.to_string()))
    }

    fn ensure_saturated(&mut self) {
        if self.z.is_none() {
            self.z = Some(self.polysim.sample_polynomial(&mut self.rng));
        }
    }

    fn ensure_bundle(&mut self, tau: &[FieldElem]) -> Result<Vec<u32>, OracleError> {
        self.ensure_saturated();
        let k = key(tau);
        if !self.bundles.contains_key(&k) {
            self.tau_counter += 1;
            let seed = child_seed(&self.seed, "sim-tau-mask", self.tau_counter);
            let bundle = TauBundle::new(
                self.system,
                self.z.clone().expect("saturated"),
                tau.to_vec(),
                seed,
            )
            .map_err(to_oracle_err)?;
            self.bundles.insert(k.clone(), bundle);
        }
        Ok(k)
    }
}

impl AnswerSource for SimulatorSource<'_> {
    fn answer(&mut self, oracle: &str, idx: &OracleIndex) -> Result<Symbol, OracleError> {
        let m_sum = self.system.sum_instance().map_err(to_oracle_err)?.m;
        let pt = match idx {
            OracleIndex::Point(p) => p.clone(),
            other => return Err(OracleError::OutOfDomain(format!("{other:?}"))),
        };
        match oracle {
            ORACLE_PI_C => {
                let p = &self.system.params;
                if pt.len() != p.m2 + p.k {
                    return Err(OracleError::OutOfDomain("pi_c arity".into()));
                }
                Ok(vec![self.pi_c_answer(&pt)?])
            }
            ORACLE_TAU_SIGMA => {
                let (tau, rest) = split_tau_index(self.system, &pt, m_sum - 1)?;
                let rest = rest.to_vec();
                let k = self.ensure_bundle(&tau)?;
                Ok(self
                    .bundles
                    .get_mut(&k)
                    .expect("ensured")
                    .sigma_symbol(&rest))
            }
            ORACLE_TAU_P => {
                let (tau, rest) = split_tau_index(self.system, &pt, m_sum)?;
                let rest = rest.to_vec();
                let k = self.ensure_bundle(&tau)?;
                Ok(self.bundles.get_mut(&k).expect("ensured").p_symbol(&rest))
            }
            other => Err(OracleError::OutOfDomain(format!("unknown oracle {other}"))),
        }
    }
}

/// Run the simulator for one adversary. The hiding guarantee covers
/// adversaries whose budget stays below |H|^k; larger budgets are refused
/// up front with the same error the access layer would raise.
pub fn osat_simulate(
    system: &OSatSystem,
    adversary: &dyn Adversary,
    coins: u64,
    seed: Seed,
) -> Result<VerifierView, OsatError> {
    let budget_cap = system.params.hiding_budget();
    if adversary.budget() >= budget_cap {
        return Err(OsatError::Oracle(OracleError::BudgetExceeded {
            budget: budget_cap.saturating_sub(1),
            attempted: adversary.budget(),
        }));
    }
    let mut source = SimulatorSource::new(system, seed);
    crate::adversary::run_adversary(adversary, coins, &mut source).map_err(OsatError::from)
}

/// Run an adversary against a real proof (same oracle naming as the
/// simulator, so views are directly comparable).
pub fn osat_real_view(
    oracles: &super::tau::OSatProofOracles<'_>,
    adversary: &dyn Adversary,
    coins: u64,
) -> Result<VerifierView, OsatError> {
    let mut source = RealProofSource::new(oracles);
    crate::adversary::run_adversary(adversary, coins, &mut source).map_err(OsatError::from)
}

// ---------------------------------------------------------------------------
// Equivalence brute force
// ---------------------------------------------------------------------------

/// Check, by enumeration, that implicit satisfiability of B coincides with
/// the existence of a commitment whose inner sums vanish on the whole mixed
/// grid. The tested family is one committed polynomial per witness oracle
/// plus unconstrained random polynomials; any vanishing commitment is
/// cross-checked by rounding its decommitment to a witness table, which is
/// what certifies the reverse direction for polynomials outside the family.
pub fn claim_equivalence_bruteforce(
    system: &OSatSystem,
    random_family: usize,
    seed: Seed,
) -> Result<bool, OsatError> {
    let inst = &system.inst;
    let p = &system.params;
    if 1usize << inst.s > 4 {
        return Err(OsatError::Oracle(OracleError::SearchSpaceTooLarge(
            format!("2^s = {} witness bits", 1usize << inst.s),
        )));
    }
    let implicitly_sat = brute_force_witness(inst).is_some();

    let mixed_grid = mixed_grid_points(system);

    let n = 1usize << inst.s;
    let mut any_vanishing = false;
    let mut rng = rng_from(seed);
    let mut family: Vec<MultiPoly> = Vec::new();
    for code in 0..1u64 << n {
        let table: Vec<bool> = (0..n).map(|i| (code >> i) & 1 == 1).collect();
        family.push(super::commit_witness(p, &system.gamma2, &table, &mut rng));
    }
    for _ in 0..random_family {
        family.push(crate::poly::poly_random(
            &p.field,
            p.m2 + p.k,
            DegreeBounds::PerVar(vec![p.c_ind_degree; p.m2 + p.k]),
            &mut rng,
        ));
    }

    for chat in &family {
        let vanishes = mixed_grid
            .iter()
            .map(|w| system.inner_sum_at(chat, w))
            .collect::<Result<Vec<_>, _>>()?
            .iter()
            .all(|&v| v == FieldElem::ZERO);
        if vanishes {
            any_vanishing = true;
            // Rounding cross-check: a vanishing commitment decommits to a
            // witness table after rounding off-boolean values to zero.
            let mut a_table = vec![false; n];
            let mut b_grid = vec![0usize; p.m2];
            loop {
                let b_pt: Vec<FieldElem> = b_grid.iter().map(|&g| p.h.elems[g]).collect();
                let bits = system
                    .gamma2
                    .map_grid_point(&p.h, &b_pt)
                    .expect("grid point");
                let addr = bits
                    .iter()
                    .fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
                let v = a_hat_from_commitment(p, chat, &b_pt);
                a_table[addr] = v == FieldElem::ONE;
                if p.m2 == 0 || !crate::oracles::odometer_advance(&mut b_grid, p.h.len()) {
                    break;
                }
            }
            if !osat_check_direct(inst, &a_table) {
                // would contradict the rounding argument
                return Ok(false);
            }
        }
    }
    Ok(implicitly_sat == any_vanishing)
}

/// All points of the selector grid H^(m1+3m2) x {0,1}^3.
pub fn mixed_grid_points(system: &OSatSystem) -> Vec<Vec<FieldElem>> {
    let p = &system.params;
    let zb = p.m1 + 3 * p.m2;
    let mut out = Vec::new();
    let mut zb_grid = vec![0usize; zb];
    loop {
        let mut a_grid = vec![0usize; 3];
        loop {
            let mut w: Vec<FieldElem> = zb_grid.iter().map(|&g| p.h.elems[g]).collect();
            w.extend(a_grid.iter().map(|&g| FieldElem(g as u32)));
            out.push(w);
            if !crate::oracles::odometer_advance(&mut a_grid, 2) {
                break;
            }
        }
        if zb == 0 || !crate::oracles::odometer_advance(&mut zb_grid, p.h.len()) {
            break;
        }
    }
    out
}
