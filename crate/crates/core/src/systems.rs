//! Adapters exposing the concrete proof systems as uniform non-adaptive
//! system descriptors: a seeded prover, a query algorithm, and a pure
//! decision algorithm. These are what the composition machinery and the
//! pipeline experiments consume.

use crate::adversary::{Adversary, AnswerSource};
use crate::compose::{PcpParams, PcpSystem};
use crate::field::{FieldCtx, FieldElem};
use crate::ldt::Line;
use crate::oracles::{OracleError, OracleIndex, Symbol, VerifierView};
use crate::poly::{uni_is_low_degree, MultiPoly};
use crate::seeds::{rng_from, Seed};
use crate::sumcheck_rsc::{RscCoins, RscVerifier, SumInstance};
use num_rational::Ratio;
use rand::SeedableRng;

/// A proof set serving named oracles from closures over owned tables.
pub struct TableProof {
    pub tables: Vec<(String, std::collections::HashMap<OracleIndex, Symbol>)>,
}

impl AnswerSource for TableProof {
    fn answer(&mut self, oracle: &str, idx: &OracleIndex) -> Result<Symbol, OracleError> {
        for (name, table) in &self.tables {
            if name == oracle {
                return table
                    .get(idx)
                    .cloned()
                    .ok_or_else(|| OracleError::OutOfDomain(format!("{idx:?}")));
            }
        }
        Err(OracleError::OutOfDomain(format!("unknown oracle {oracle}")))
    }
}

/// Wrap the robust sumcheck PCPP, with its implicit input fixed to a
/// concrete polynomial, as a PCP-style system. Randomness values enumerate
/// (axis coins, test seed) pairs over a fixed seed set, so micro instances
/// can be exhausted.
pub fn rsc_pcp_system(inst: SumInstance, f_input: MultiPoly, ldt_seeds: Vec<u64>) -> PcpSystem {
    let verifier = RscVerifier::new(inst.clone());
    let field = inst.field.clone();
    let q = field.order();
    let m = inst.m;
    let mu_space = q.pow((m - 1) as u32) * ldt_seeds.len() as u64;
    let randomness_bits = 64 - (mu_space - 1).leading_zeros();

    let coins_of = {
        let field = field.clone();
        let ldt_seeds = ldt_seeds.clone();
        move |mu: u64| -> RscCoins {
            let mu = mu % mu_space;
            let seed_idx = (mu % ldt_seeds.len() as u64) as usize;
            let mut c_code = mu / ldt_seeds.len() as u64;
            let mut c = Vec::with_capacity(m - 1);
            for _ in 0..m - 1 {
                c.push(field.elem(c_code % q));
                c_code /= q;
            }
            RscCoins {
                c,
                ldt_seed: ldt_seeds[seed_idx],
            }
        }
    };

    let alphabet_bits = {
        // proof symbols are (m-1)-tuples; input symbols width 1, padded for
        // a uniform declared width
        let elem_bits = 64 - (q - 1).leading_zeros();
        (m as u32 - 1) * elem_bits
    };

    let params = PcpParams {
        randomness_bits,
        queries: 2 * q + verifier.ldt_reps as u64 * q,
        symbol_bits: alphabet_bits,
        robustness: inst.delta_rm() / Ratio::new(2, 1),
        query_bound: u64::MAX, // not a zero-knowledge system
        decision_size: None,
    };

    let prove = {
        let inst = inst.clone();
        let f_input = f_input.clone();
        let field = field.clone();
        Box::new(move |_seed: Seed| -> Box<dyn AnswerSource> {
            let proof = crate::sumcheck_rsc::rsc_prove(&inst, &f_input).expect("honest proof");
            let fi = f_input.clone();
            let field2 = field.clone();
            struct Src {
                proof: crate::sumcheck_rsc::RscProof,
                fi: MultiPoly,
                field: FieldCtx,
            }
            impl AnswerSource for Src {
                fn answer(
                    &mut self,
                    oracle: &str,
                    idx: &OracleIndex,
                ) -> Result<Symbol, OracleError> {
                    let pt = match idx {
                        OracleIndex::Point(p) => p,
                        other => {
                            return Err(OracleError::OutOfDomain(format!("{other:?}")))
                        }
                    };
                    match oracle {
                        "pi" => {
                            let mut flat = 0u64;
                            for e in pt {
                                flat = flat * self.field.order() + e.0 as u64;
                            }
                            Ok(self.proof.table[flat as usize].clone())
                        }
                        "F" => Ok(vec![self.fi.eval(pt).expect("arity")]),
                        other => {
                            Err(OracleError::OutOfDomain(format!("unknown oracle {other}")))
                        }
                    }
                }
            }
            Box::new(Src {
                proof,
                fi,
                field: field2,
            })
        })
    };

    let query = {
        let verifier = verifier.clone();
        let coins_of = coins_of.clone();
        Box::new(move |mu: u64| -> Vec<(String, OracleIndex)> {
            let coins = coins_of(mu);
            let mut out = Vec::new();
            for pq in verifier.plan_axis(&coins) {
                let name = match pq.role {
                    crate::sumcheck_rsc::Role::Proof => "pi",
                    crate::sumcheck_rsc::Role::Input => "F",
                };
                out.push((name.to_string(), pq.index));
            }
            for pq in verifier.plan_ldt(&coins) {
                out.push(("F".to_string(), pq.index));
            }
            out
        })
    };

    let decide = {
        let verifier = verifier.clone();
        let field = field.clone();
        Box::new(move |mu: u64, answers: &[Symbol]| -> bool {
            let coins = coins_of(mu);
            let qn = field.order() as usize;
            let pi_column: Vec<Symbol> = answers[..qn].to_vec();
            let f_axis: Vec<FieldElem> = answers[qn..2 * qn].iter().map(|s| s[0]).collect();
            if !verifier.decide_axis(&coins, &pi_column, &f_axis).accept {
                return false;
            }
            // test lines, in plan order
            let mut pos = 2 * qn;
            for rep in 0..verifier.ldt_reps {
                let mut rng = crate::ldt::rep_rng(coins.ldt_seed, rep as u64);
                let _line = Line::sample(&field, verifier.inst.m, &mut rng);
                let table: Vec<FieldElem> =
                    answers[pos..pos + qn].iter().map(|s| s[0]).collect();
                pos += qn;
                if !uni_is_low_degree(&field, &table, verifier.inst.d_input_total) {
                    return false;
                }
            }
            true
        })
    };

    PcpSystem {
        params,
        prove,
        query,
        decide,
        simulate: None,
    }
}

/// A deliberately tiny perfect-zero-knowledge system for exercising the
/// lifting machinery: the proof is one uniformly random pad value repeated
/// across a flat domain; the verifier accepts unconditionally. Every view is
/// a function of the single pad, so a one-draw simulator is exact for any
/// query budget.
pub fn toy_pad_system(field: &FieldCtx, domain_len: u64, query_bound: u64) -> PcpSystem {
    let elem_bits = 64 - (field.order() - 1).leading_zeros();
    let params = PcpParams {
        randomness_bits: 1,
        queries: 1,
        symbol_bits: elem_bits,
        robustness: Ratio::new(1, 4),
        query_bound,
        decision_size: Some(1),
    };
    let f1 = field.clone();
    let prove = Box::new(move |seed: Seed| -> Box<dyn AnswerSource> {
        let mut rng = rng_from(seed);
        let pad = f1.random(&mut rng);
        struct Src {
            pad: FieldElem,
            len: u64,
        }
        impl AnswerSource for Src {
            fn answer(&mut self, oracle: &str, idx: &OracleIndex) -> Result<Symbol, OracleError> {
                match (oracle, idx) {
                    ("pad", OracleIndex::Flat(i)) if *i < self.len => Ok(vec![self.pad]),
                    other => Err(OracleError::OutOfDomain(format!("{other:?}"))),
                }
            }
        }
        Box::new(Src {
            pad,
            len: domain_len,
        })
    });
    let query = Box::new(move |mu: u64| vec![("pad".to_string(), OracleIndex::Flat(mu % domain_len))]);
    let decide = Box::new(|_mu: u64, _answers: &[Symbol]| true);
    let f2 = field.clone();
    let simulate = Some(Box::new(
        move |adv: &dyn Adversary, coins: u64, seed: Seed| -> Result<VerifierView, OracleError> {
            // one fresh pad answers everything, exactly like a fresh proof
            let mut rng = rng_from(seed);
            let pad = f2.random(&mut rng);
            struct Src {
                pad: FieldElem,
                len: u64,
            }
            impl AnswerSource for Src {
                fn answer(&mut self, oracle: &str, idx: &OracleIndex) -> Result<Symbol, OracleError> {
                    match (oracle, idx) {
                        ("pad", OracleIndex::Flat(i)) if *i < self.len => Ok(vec![self.pad]),
                        other => Err(OracleError::OutOfDomain(format!("{other:?}"))),
                    }
                }
            }
            let mut src = Src {
                pad,
                len: domain_len,
            };
            crate::adversary::run_adversary(adv, coins, &mut src)
        },
    )
        as Box<dyn Fn(&dyn Adversary, u64, Seed) -> Result<VerifierView, OracleError>>);

    PcpSystem {
        params,
        prove,
        query,
        decide,
        simulate,
    }
}

/// Seeded randomness for system runs: mu drawn uniformly below 2^bits.
pub fn sample_mu(bits: u32, rng: &mut impl rand::Rng) -> u64 {
    if bits >= 64 {
        rng.gen()
    } else {
        rng.gen_range(0..1u64 << bits)
    }
}

/// Derive a ChaCha RNG from a u64 for test drivers.
pub fn rng64(seed: u64) -> rand_chacha::ChaCha20Rng {
    rand_chacha::ChaCha20Rng::seed_from_u64(seed)
}
