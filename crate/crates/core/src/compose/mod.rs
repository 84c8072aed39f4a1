//! Zero-knowledge-preserving proof transformations: locally computable proof
//! maps, the hybrid adversary and lifted simulator, error-correcting-code
//! alphabet reduction, and outer/inner proof composition with a pluggable
//! inner proximity verifier.
//!
//! Every transformed proof here is locally computable from its base proof:
//! each derived symbol is produced by a deterministic map making a bounded
//! number of base queries. That single fact is what transfers zero knowledge
//! through bundling, alphabet reduction, and composition, with the query
//! bound shrinking by the locality factor.

pub mod circuit;

use crate::adversary::{replay_adversary, run_adversary, Adversary, AnswerSource};
use crate::field::FieldElem;
use crate::oracles::{OracleError, OracleIndex, Symbol, VerifierView};
use crate::seeds::Seed;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("inner proximity {inner} exceeds outer robustness {outer}")]
    ProximityExceedsRobustness {
        inner: Ratio<u64>,
        outer: Ratio<u64>,
    },
    #[error("local map exceeded its budget: used {used}, budget {budget}")]
    LocalBudgetExceeded { used: u64, budget: u64 },
    #[error("no generator reached relative distance {target} within {tried} seeds; best {best}")]
    DistanceTargetUnreachable {
        target: Ratio<u64>,
        tried: u32,
        best: Ratio<u64>,
    },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

// ---------------------------------------------------------------------------
// System descriptors
// ---------------------------------------------------------------------------

/// Declared parameters of a proof system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcpParams {
    pub randomness_bits: u32,
    pub queries: u64,
    /// Bits per proof symbol (after bit-encoding field elements).
    pub symbol_bits: u32,
    pub robustness: Ratio<u64>,
    pub query_bound: u64,
    pub decision_size: Option<usize>,
}

/// A proof realized as an answer source plus the base-query audit used by
/// locality checks.
pub trait ProofRealization: AnswerSource {
    /// Base reads spent materializing each derived symbol so far, if the
    /// realization tracks locality.
    fn locality_audit(&self) -> Vec<u64> {
        Vec::new()
    }
}

impl<T: AnswerSource + ?Sized> ProofRealization for T {}

/// A uniform descriptor of a PCP (or PCPP with its input fixed): a seeded
/// prover, a non-adaptive query algorithm, and a pure decision algorithm.
pub struct PcpSystem {
    pub params: PcpParams,
    pub prove: Box<dyn Fn(Seed) -> Box<dyn AnswerSource>>,
    pub query: Box<dyn Fn(u64) -> Vec<(String, OracleIndex)>>,
    pub decide: Box<dyn Fn(u64, &[Symbol]) -> bool>,
    /// Black-box simulator for the system, when one is declared.
    pub simulate:
        Option<Box<dyn Fn(&dyn Adversary, u64, Seed) -> Result<VerifierView, OracleError>>>,
}

impl PcpSystem {
    /// Run the verifier on one randomness value against a realized proof.
    pub fn run(&self, proof: &mut dyn AnswerSource, mu: u64) -> Result<bool, OracleError> {
        let plan = (self.query)(mu);
        let mut answers = Vec::with_capacity(plan.len());
        for (oracle, idx) in &plan {
            answers.push(proof.answer(oracle, idx)?);
        }
        Ok((self.decide)(mu, &answers))
    }
}

/// A proximity verifier for restricted decision predicates, with a
/// deterministic prover. The pass-through instantiation reads its whole
/// input view, carries no proof, and evaluates the predicate directly.
pub struct InnerPcpp {
    pub randomness_bits: u32,
    pub proximity: Ratio<u64>,
    pub soundness_error: Ratio<u64>,
    /// Deterministic prover: (decision, input view) -> proof symbols.
    pub prove: Box<dyn Fn(&DecisionEval, &[Symbol]) -> Vec<Symbol>>,
    /// Query plan over the input view and the inner proof.
    pub query: Box<dyn Fn(u64, usize, usize) -> Vec<InnerAddr>>,
    pub decide: Box<dyn Fn(&DecisionEval, u64, &[Symbol]) -> bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerAddr {
    Input(usize),
    Proof(usize),
}

/// A decision predicate over an answer vector, with its recorded circuit
/// size when a gate-level description exists.
pub struct DecisionEval {
    pub eval: Box<dyn Fn(&[Symbol]) -> bool>,
    pub size: Option<usize>,
}

/// The pass-through inner: reads the entire input view, no proof, evaluates
/// the decision exactly. Proximity 0, soundness error 0.
pub fn pass_through_inner() -> InnerPcpp {
    InnerPcpp {
        randomness_bits: 0,
        proximity: Ratio::new(0, 1),
        soundness_error: Ratio::new(0, 1),
        prove: Box::new(|_c, _view| Vec::new()),
        query: Box::new(|_mu, input_len, _proof_len| {
            (0..input_len).map(InnerAddr::Input).collect()
        }),
        decide: Box::new(|c, _mu, answers| (c.eval)(answers)),
    }
}

// ---------------------------------------------------------------------------
// Locally computable maps
// ---------------------------------------------------------------------------

/// A deterministic oracle algorithm computing derived symbols from a base
/// proof with a per-invocation query budget.
pub struct LocalMap {
    pub budget: u64,
    #[allow(clippy::type_complexity)]
    pub f: Box<
        dyn Fn(
            &mut dyn AnswerSource,
            &str,
            &OracleIndex,
        ) -> Result<Symbol, OracleError>,
    >,
}

/// Counting wrapper enforcing the per-invocation budget.
struct CountingSource<'a> {
    base: &'a mut dyn AnswerSource,
    used: u64,
}

impl AnswerSource for CountingSource<'_> {
    fn answer(&mut self, oracle: &str, idx: &OracleIndex) -> Result<Symbol, OracleError> {
        self.used += 1;
        self.base.answer(oracle, idx)
    }
}

/// Apply a local map to one derived index; errors on budget violation
/// (a correctness bug in the map, not an input error).
pub fn localmap_apply(
    map: &LocalMap,
    base: &mut dyn AnswerSource,
    oracle: &str,
    idx: &OracleIndex,
) -> Result<(Symbol, u64), ComposeError> {
    let mut counter = CountingSource { base, used: 0 };
    let sym = (map.f)(&mut counter, oracle, idx)?;
    if counter.used > map.budget {
        return Err(ComposeError::LocalBudgetExceeded {
            used: counter.used,
            budget: map.budget,
        });
    }
    Ok((sym, counter.used))
}

/// Derived proof realization: serves derived queries through a local map,
/// recording per-invocation base-read counts for audits.
pub struct LocallyComputedProof<'a> {
    pub map: &'a LocalMap,
    pub base: Box<dyn AnswerSource + 'a>,
    pub audit: Vec<u64>,
}

impl AnswerSource for LocallyComputedProof<'_> {
    fn answer(&mut self, oracle: &str, idx: &OracleIndex) -> Result<Symbol, OracleError> {
        let mut counter = CountingSource {
            base: self.base.as_mut(),
            used: 0,
        };
        let sym = (self.map.f)(&mut counter, oracle, idx)?;
        if counter.used > self.map.budget {
            return Err(OracleError::Backend(
                ComposeError::LocalBudgetExceeded {
                    used: counter.used,
                    budget: self.map.budget,
                }
                .to_string(),
            ));
        }
        self.audit.push(counter.used);
        Ok(sym)
    }
}

/// Owning variant of the locally computed proof, used by composed provers.
pub struct OwnedLocallyComputed {
    pub map: LocalMap,
    pub base: Box<dyn AnswerSource>,
    pub audit: std::rc::Rc<std::cell::RefCell<Vec<u64>>>,
}

impl AnswerSource for OwnedLocallyComputed {
    fn answer(&mut self, oracle: &str, idx: &OracleIndex) -> Result<Symbol, OracleError> {
        let mut counter = CountingSource {
            base: self.base.as_mut(),
            used: 0,
        };
        let sym = (self.map.f)(&mut counter, oracle, idx)?;
        if counter.used > self.map.budget {
            return Err(OracleError::Backend(
                ComposeError::LocalBudgetExceeded {
                    used: counter.used,
                    budget: self.map.budget,
                }
                .to_string(),
            ));
        }
        self.audit.borrow_mut().push(counter.used);
        Ok(sym)
    }
}

/// The hybrid adversary: runs a derived-proof adversary, translating each
/// query through the local map against the base proof. Returns the derived
/// view and the base query-answer set it consumed.
pub fn lifted_hybrid_adversary(
    adv: &dyn Adversary,
    map: &LocalMap,
    base: &mut dyn AnswerSource,
    coins: u64,
) -> Result<(VerifierView, Vec<(String, OracleIndex, Symbol)>), ComposeError> {
    let recorded = std::cell::RefCell::new(Vec::new());
    struct RecordingBase<'a, 'b> {
        base: &'a mut dyn AnswerSource,
        recorded: &'b std::cell::RefCell<Vec<(String, OracleIndex, Symbol)>>,
    }
    impl AnswerSource for RecordingBase<'_, '_> {
        fn answer(&mut self, oracle: &str, idx: &OracleIndex) -> Result<Symbol, OracleError> {
            let sym = self.base.answer(oracle, idx)?;
            self.recorded
                .borrow_mut()
                .push((oracle.to_string(), idx.clone(), sym.clone()));
            Ok(sym)
        }
    }
    let view = {
        let mut derived = LocallyComputedProof {
            map,
            base: Box::new(RecordingBase {
                base,
                recorded: &recorded,
            }),
            audit: Vec::new(),
        };
        run_adversary(adv, coins, &mut derived)?
    };
    Ok((view, recorded.into_inner()))
}

/// The lifted simulator: simulate the base view of the hybrid adversary,
/// then replay the derived adversary answering through the local map from
/// the recorded base answers.
pub fn lifted_simulator(
    sim0: &mut dyn AnswerSource,
    map: &LocalMap,
    adv: &dyn Adversary,
    coins: u64,
) -> Result<VerifierView, ComposeError> {
    // Phase 1: the hybrid adversary runs against the base simulator; only
    // the base query-answer set is kept.
    let (_, base_answers) = lifted_hybrid_adversary(adv, map, sim0, coins)?;
    let recorded: std::collections::HashMap<(String, OracleIndex), Symbol> = base_answers
        .into_iter()
        .map(|(o, i, s)| ((o, i), s))
        .collect();
    // Phase 2: replay the derived adversary, computing its answers through
    // the map from the recorded set.
    struct ReplaySource<'a> {
        recorded: &'a std::collections::HashMap<(String, OracleIndex), Symbol>,
    }
    impl AnswerSource for ReplaySource<'_> {
        fn answer(&mut self, oracle: &str, idx: &OracleIndex) -> Result<Symbol, OracleError> {
            self.recorded
                .get(&(oracle.to_string(), idx.clone()))
                .cloned()
                .ok_or_else(|| OracleError::MissingAnswer(format!("{oracle} {idx:?}")))
        }
    }
    // Build a derived answer map by replaying each derived query through f.
    struct DerivedReplay<'a> {
        map: &'a LocalMap,
        recorded: &'a std::collections::HashMap<(String, OracleIndex), Symbol>,
    }
    impl AnswerSource for DerivedReplay<'_> {
        fn answer(&mut self, oracle: &str, idx: &OracleIndex) -> Result<Symbol, OracleError> {
            let mut replay = ReplaySource {
                recorded: self.recorded,
            };
            (self.map.f)(&mut replay, oracle, idx)
        }
    }
    let mut derived = DerivedReplay {
        map,
        recorded: &recorded,
    };
    let mut answers = std::collections::HashMap::new();
    // Replay the adversary once against the derived-replay source to learn
    // its query sequence and answers.
    let view = run_adversary(adv, coins, &mut derived)?;
    for (o, i, s) in &view.answers {
        answers.insert((o.clone(), i.clone()), s.clone());
    }
    // Deterministic replay through the recorded set reproduces the view.
    replay_adversary(adv, coins, &answers).map_err(ComposeError::from)
}

// ---------------------------------------------------------------------------
// Error-correcting code
// ---------------------------------------------------------------------------

/// Systematic binary code [I | P] with a recorded minimum-distance bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EccSpec {
    pub a: usize,
    pub b: usize,
    /// Parity columns, row-major: p[i][j] is the contribution of message
    /// bit i to parity bit j.
    pub parity: Vec<Vec<bool>>,
    pub min_distance: usize,
    /// "exhaustive" or "monte-carlo" depending on how the distance was
    /// verified.
    pub distance_method: String,
    pub seed_used: u64,
}

impl EccSpec {
    pub fn encode(&self, x: &[bool]) -> Vec<bool> {
        debug_assert_eq!(x.len(), self.a);
        let mut out = x.to_vec();
        for j in 0..self.b - self.a {
            let mut bit = false;
            for (i, &xi) in x.iter().enumerate() {
                bit ^= xi & self.parity[i][j];
            }
            out.push(bit);
        }
        out
    }

    pub fn relative_distance(&self) -> Ratio<u64> {
        Ratio::new(self.min_distance as u64, self.b as u64)
    }
}

/// Generate a rate-1/4 systematic code with pseudorandom parity, retrying
/// seeds until the relative distance reaches 1/8. Distance is verified
/// exhaustively for a <= 20, otherwise by a recorded Monte Carlo lower
/// bound estimate.
pub fn ecc_generate(a: usize, seed: u64) -> Result<EccSpec, ComposeError> {
    use rand::Rng;
    assert!(a >= 1 && a <= 64, "message width 1..=64");
    let b = 4 * a;
    let target = Ratio::new(1u64, 8);
    let mut best = EccSpec {
        a,
        b,
        parity: vec![vec![false; b - a]; a],
        min_distance: 0,
        distance_method: String::new(),
        seed_used: seed,
    };
    for attempt in 0..64u64 {
        let s = seed.wrapping_add(attempt);
        let mut rng = crate::ldt::rep_rng(s, 0);
        let parity: Vec<Vec<bool>> = (0..a)
            .map(|_| (0..b - a).map(|_| rng.gen::<bool>()).collect())
            .collect();
        let spec = EccSpec {
            a,
            b,
            parity,
            min_distance: 0,
            distance_method: String::new(),
            seed_used: s,
        };
        let (dist, method) = if a <= 20 {
            (ecc_min_weight_exhaustive(&spec), "exhaustive")
        } else {
            (ecc_min_weight_monte_carlo(&spec, 1 << 16, s), "monte-carlo")
        };
        let spec = EccSpec {
            min_distance: dist,
            distance_method: method.to_string(),
            ..spec
        };
        if spec.relative_distance() >= target {
            return Ok(spec);
        }
        if spec.min_distance > best.min_distance {
            best = spec;
        }
    }
    Err(ComposeError::DistanceTargetUnreachable {
        target,
        tried: 64,
        best: best.relative_distance(),
    })
}

fn ecc_min_weight_exhaustive(spec: &EccSpec) -> usize {
    let mut best = spec.b;
    for code in 1..1u64 << spec.a {
        let msg: Vec<bool> = (0..spec.a).map(|i| (code >> i) & 1 == 1).collect();
        let w = spec.encode(&msg).iter().filter(|&&b| b).count();
        best = best.min(w);
    }
    best
}

fn ecc_min_weight_monte_carlo(spec: &EccSpec, samples: u64, seed: u64) -> usize {
    use rand::Rng;
    let mut rng = crate::ldt::rep_rng(seed, 1);
    let mut best = spec.b;
    for _ in 0..samples {
        let msg: Vec<bool> = (0..spec.a).map(|_| rng.gen()).collect();
        if msg.iter().all(|&b| !b) {
            continue;
        }
        let w = spec.encode(&msg).iter().filter(|&&b| b).count();
        best = best.min(w);
    }
    best
}

// ---------------------------------------------------------------------------
// Alphabet reduction
// ---------------------------------------------------------------------------

/// Bit-encode a symbol of fixed width over the field: little-endian bits of
/// each element, `bits_per_elem` each.
pub fn symbol_to_bits(sym: &Symbol, bits_per_elem: u32) -> Vec<bool> {
    let mut out = Vec::with_capacity(sym.len() * bits_per_elem as usize);
    for e in sym {
        for i in 0..bits_per_elem {
            out.push((e.0 >> i) & 1 == 1);
        }
    }
    out
}

fn bool_sym(b: bool) -> Symbol {
    vec![if b { FieldElem::ONE } else { FieldElem::ZERO }]
}

/// Convert a PCP over a fixed-width symbol alphabet into a boolean PCP by
/// appending per-symbol codewords and reading everything bitwise. The
/// derived proof is 1-locally computable from the base proof, so zero
/// knowledge transfers with the query bound intact up to the locality factor.
pub fn alphabet_reduce(sys: PcpSystem, ecc: EccSpec, bits_per_elem: u32) -> PcpSystem {
    let a = ecc.a;
    assert_eq!(
        sys.params.symbol_bits as usize, a,
        "code message width must match the symbol width"
    );
    let sys = std::rc::Rc::new(sys);
    let ecc = std::sync::Arc::new(ecc);
    #[allow(clippy::type_complexity)]
    let map_rc: std::sync::Arc<
        dyn Fn(&mut dyn AnswerSource, &str, &OracleIndex) -> Result<Symbol, OracleError>
            + Send
            + Sync,
    > = {
        let ecc = ecc.clone();
        std::sync::Arc::new(move |base: &mut dyn AnswerSource,
                               oracle: &str,
                               idx: &OracleIndex|
              -> Result<Symbol, OracleError> {
            // Derived addressing: Sub(bit, base index) on the original
            // oracle name for systematic bits, and on "tau:<name>" for
            // codeword bits.
            let (is_tau, base_name) = match oracle.strip_prefix("tau:") {
                Some(rest) => (true, rest),
                None => (false, oracle),
            };
            let (bit_str, base_idx) = match idx {
                OracleIndex::Sub(bit, inner) => (bit.clone(), (**inner).clone()),
                other => {
                    return Err(OracleError::OutOfDomain(format!(
                        "bit-addressed index expected, got {other:?}"
                    )))
                }
            };
            let bit: usize = bit_str
                .parse()
                .map_err(|_| OracleError::OutOfDomain(format!("bad bit index {bit_str}")))?;
            let sym = base.answer(base_name, &base_idx)?;
            let bits = symbol_to_bits(&sym, bits_per_elem);
            if is_tau {
                let code = ecc.encode(&bits);
                Ok(bool_sym(code[bit]))
            } else {
                Ok(bool_sym(bits[bit]))
            }
        })
    };

    let params = PcpParams {
        randomness_bits: sys.params.randomness_bits,
        queries: sys.params.queries * (a as u64 + ecc.b as u64),
        symbol_bits: 1,
        robustness: sys.params.robustness, // order-of constants measured, not asserted
        query_bound: sys.params.query_bound,
        decision_size: sys.params.decision_size,
    };

    let prove = {
        let sys = sys.clone();
        let map_rc = map_rc.clone();
        Box::new(move |seed: Seed| -> Box<dyn AnswerSource> {
            struct Derived {
                base: Box<dyn AnswerSource>,
                #[allow(clippy::type_complexity)]
                f: std::sync::Arc<
                    dyn Fn(
                        &mut dyn AnswerSource,
                        &str,
                        &OracleIndex,
                    ) -> Result<Symbol, OracleError>
                        + Send
                        + Sync,
                >,
            }
            impl AnswerSource for Derived {
                fn answer(
                    &mut self,
                    oracle: &str,
                    idx: &OracleIndex,
                ) -> Result<Symbol, OracleError> {
                    (self.f)(self.base.as_mut(), oracle, idx)
                }
            }
            Box::new(Derived {
                base: (sys.prove)(seed),
                f: map_rc.clone(),
            })
        })
    };

    let query = {
        let sys = sys.clone();
        let b_len = ecc.b;
        Box::new(move |mu: u64| -> Vec<(String, OracleIndex)> {
            let mut out = Vec::new();
            for (name, idx) in (sys.query)(mu) {
                for bit in 0..a {
                    out.push((name.clone(), OracleIndex::Sub(bit.to_string(), Box::new(idx.clone()))));
                }
                for bit in 0..b_len {
                    out.push((
                        format!("tau:{name}"),
                        OracleIndex::Sub(bit.to_string(), Box::new(idx.clone())),
                    ));
                }
            }
            out
        })
    };

    let decide = {
        let sys = sys.clone();
        let ecc = ecc.clone();
        Box::new(move |mu: u64, answers: &[Symbol]| -> bool {
            // Reassemble blocks and codewords from the interleaved bits.
            let base_plan = (sys.query)(mu);
            let per = a + ecc.b;
            debug_assert_eq!(answers.len(), base_plan.len() * per);
            let mut base_answers = Vec::with_capacity(base_plan.len());
            for (q, _) in base_plan.iter().enumerate() {
                let chunk = &answers[q * per..(q + 1) * per];
                let block_bits: Vec<bool> =
                    chunk[..a].iter().map(|s| s[0] == FieldElem::ONE).collect();
                let code_bits: Vec<bool> = chunk[a..]
                    .iter()
                    .map(|s| s[0] == FieldElem::ONE)
                    .collect();
                if ecc.encode(&block_bits) != code_bits {
                    return false;
                }
                // decode the block back into a symbol
                let width = (a as u32 / bits_per_elem) as usize;
                let mut sym = Vec::with_capacity(width);
                for w in 0..width {
                    let mut v = 0u32;
                    for i in 0..bits_per_elem {
                        if block_bits[w * bits_per_elem as usize + i as usize] {
                            v |= 1 << i;
                        }
                    }
                    sym.push(FieldElem(v));
                }
                base_answers.push(sym);
            }
            (sys.decide)(mu, &base_answers)
        })
    };

    let simulate = sys.simulate.is_some().then(|| {
        let sys = sys.clone();
        let map_rc = map_rc.clone();
        Box::new(
            move |adv: &dyn Adversary, coins: u64, seed: Seed| -> Result<VerifierView, OracleError> {
                // The map is 1-local and deterministic, so simulating the
                // derived view is running the base simulator on the
                // bit-translated adversary and re-deriving the bit answers.
                let base_sim = sys.simulate.as_ref().expect("checked");
                let translated = BitTranslatedAdversary {
                    inner: adv,
                    f: map_rc.clone(),
                };
                let base_view = base_sim(&translated, coins, seed)?;
                // Recompute the derived answers from the base answers.
                let recorded: std::collections::HashMap<(String, OracleIndex), Symbol> =
                    base_view
                        .answers
                        .iter()
                        .map(|(o, i, s)| ((o.clone(), i.clone()), s.clone()))
                        .collect();
                struct ReplayBase<'x> {
                    recorded:
                        &'x std::collections::HashMap<(String, OracleIndex), Symbol>,
                }
                impl AnswerSource for ReplayBase<'_> {
                    fn answer(
                        &mut self,
                        oracle: &str,
                        idx: &OracleIndex,
                    ) -> Result<Symbol, OracleError> {
                        self.recorded
                            .get(&(oracle.to_string(), idx.clone()))
                            .cloned()
                            .ok_or_else(|| {
                                OracleError::MissingAnswer(format!("{oracle} {idx:?}"))
                            })
                    }
                }
                struct DerivedFromBase<'x> {
                    base: ReplayBase<'x>,
                    #[allow(clippy::type_complexity)]
                    f: std::sync::Arc<
                        dyn Fn(
                            &mut dyn AnswerSource,
                            &str,
                            &OracleIndex,
                        ) -> Result<Symbol, OracleError>
                            + Send
                            + Sync,
                    >,
                }
                impl AnswerSource for DerivedFromBase<'_> {
                    fn answer(
                        &mut self,
                        oracle: &str,
                        idx: &OracleIndex,
                    ) -> Result<Symbol, OracleError> {
                        (self.f)(&mut self.base, oracle, idx)
                    }
                }
                let mut derived = DerivedFromBase {
                    base: ReplayBase {
                        recorded: &recorded,
                    },
                    f: map_rc.clone(),
                };
                run_adversary(adv, coins, &mut derived)
            },
        )
            as Box<dyn Fn(&dyn Adversary, u64, Seed) -> Result<VerifierView, OracleError>>
    });

    PcpSystem {
        params,
        prove,
        query,
        decide,
        simulate,
    }
}

/// Adversary wrapper translating bit-level queries into base queries: each
/// derived query needs exactly one base symbol.
struct BitTranslatedAdversary<'x> {
    inner: &'x dyn Adversary,
    #[allow(clippy::type_complexity)]
    f: std::sync::Arc<
        dyn Fn(&mut dyn AnswerSource, &str, &OracleIndex) -> Result<Symbol, OracleError>
            + Send
            + Sync,
    >,
}

impl Adversary for BitTranslatedAdversary<'_> {
    fn name(&self) -> &str {
        "bit-translated"
    }
    fn budget(&self) -> u64 {
        // one base query per derived query
        self.inner.budget()
    }
    fn next_query(
        &self,
        coins: u64,
        history: &[(String, OracleIndex, Symbol)],
    ) -> Option<(String, OracleIndex)> {
        // Reconstruct the derived history: each base answer determines the
        // derived bit answer through f deterministically.
        let mut derived_history = Vec::with_capacity(history.len());
        for (k, (base_name, base_idx, base_sym)) in history.iter().enumerate() {
            let _ = k;
            // Re-ask the inner adversary what it asked at this position.
            let (derived_name, derived_idx) =
                self.inner.next_query(coins, &derived_history)?;
            let mut one_shot = OneShot {
                name: base_name.clone(),
                idx: base_idx.clone(),
                sym: base_sym.clone(),
            };
            let sym = (self.f)(&mut one_shot, &derived_name, &derived_idx).ok()?;
            derived_history.push((derived_name, derived_idx, sym));
        }
        let (derived_name, derived_idx) = self.inner.next_query(coins, &derived_history)?;
        // Translate to the base query f would make.
        let base_name = derived_name
            .strip_prefix("tau:")
            .unwrap_or(&derived_name)
            .to_string();
        let base_idx = match &derived_idx {
            OracleIndex::Sub(_, inner) => (**inner).clone(),
            other => other.clone(),
        };
        Some((base_name, base_idx))
    }
}

/// Single-recorded-answer source for deterministic re-derivation.
struct OneShot {
    name: String,
    idx: OracleIndex,
    sym: Symbol,
}

impl AnswerSource for OneShot {
    fn answer(&mut self, oracle: &str, idx: &OracleIndex) -> Result<Symbol, OracleError> {
        if oracle == self.name && idx == &self.idx {
            Ok(self.sym.clone())
        } else {
            Err(OracleError::MissingAnswer(format!("{oracle} {idx:?}")))
        }
    }
}

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

/// Compose a robust outer system with an inner proximity verifier. The
/// composed prover serves the outer proof unchanged plus, for each outer
/// randomness r, a lazily materialized inner proof for the restricted
/// decision; the composed verifier runs the inner verifier against the
/// outer answers as its input oracle.
pub fn compose(outer: PcpSystem, inner: InnerPcpp) -> Result<PcpSystem, ComposeError> {
    if inner.proximity > outer.params.robustness {
        return Err(ComposeError::ProximityExceedsRobustness {
            inner: inner.proximity,
            outer: outer.params.robustness,
        });
    }
    let outer = std::rc::Rc::new(outer);
    let inner = std::rc::Rc::new(inner);
    let q_out = outer.params.queries;

    let params = PcpParams {
        randomness_bits: outer.params.randomness_bits + inner.randomness_bits,
        // composed query count equals the inner query count
        queries: {
            let sample = (inner.query)(0, q_out as usize, 0);
            sample.len() as u64
        },
        symbol_bits: outer.params.symbol_bits,
        robustness: Ratio::new(0, 1), // not declared for the composed system
        query_bound: outer.params.query_bound / q_out.max(1),
        decision_size: outer.params.decision_size,
    };

    // The composed proof is q_out-locally computable from the outer proof.
    let local_map_for = move |outer: std::rc::Rc<PcpSystem>,
                              inner: std::rc::Rc<InnerPcpp>|
     -> LocalMap {
        LocalMap {
            budget: q_out,
            f: Box::new(move |base, oracle, idx| {
                if let Some(r_str) = oracle.strip_prefix("inner:") {
                    let r: u64 = r_str.parse().map_err(|_| {
                        OracleError::OutOfDomain(format!("bad inner oracle {oracle}"))
                    })?;
                    let i = match idx {
                        OracleIndex::Flat(i) => *i as usize,
                        other => {
                            return Err(OracleError::OutOfDomain(format!("{other:?}")))
                        }
                    };
                    // Materialize the inner proof for r: read the outer
                    // view, build the restricted decision, run the prover.
                    let plan = (outer.query)(r);
                    let mut view = Vec::with_capacity(plan.len());
                    for (name, qidx) in &plan {
                        view.push(base.answer(name, qidx)?);
                    }
                    let decision = restricted_decision_rc(&outer, r);
                    let proof = (inner.prove)(&decision, &view);
                    proof.get(i).cloned().ok_or_else(|| {
                        OracleError::OutOfDomain(format!("inner proof index {i}"))
                    })
                } else {
                    base.answer(oracle, idx)
                }
            }),
        }
    };

    let prove = {
        let outer = outer.clone();
        let inner = inner.clone();
        Box::new(move |seed: Seed| -> Box<dyn AnswerSource> {
            let base = (outer.prove)(seed);
            let map = local_map_for(outer.clone(), inner.clone());
            Box::new(OwnedLocallyComputed {
                map,
                base,
                audit: std::rc::Rc::new(std::cell::RefCell::new(Vec::new())),
            })
        })
    };

    let query = {
        let outer = outer.clone();
        let inner = inner.clone();
        let outer_bits = outer.params.randomness_bits;
        Box::new(move |mu: u64| -> Vec<(String, OracleIndex)> {
            let r = if outer_bits >= 64 { mu } else { mu & ((1u64 << outer_bits) - 1) };
            let mu_in = if outer_bits >= 64 { 0 } else { mu >> outer_bits };
            let outer_plan = (outer.query)(r);
            (inner.query)(mu_in, outer_plan.len(), usize::MAX)
                .into_iter()
                .map(|addr| match addr {
                    InnerAddr::Input(j) => outer_plan[j].clone(),
                    InnerAddr::Proof(i) => (
                        format!("inner:{r}"),
                        OracleIndex::Flat(i as u64),
                    ),
                })
                .collect()
        })
    };

    let decide = {
        let outer = outer.clone();
        let inner = inner.clone();
        let outer_bits = outer.params.randomness_bits;
        Box::new(move |mu: u64, answers: &[Symbol]| -> bool {
            let r = if outer_bits >= 64 { mu } else { mu & ((1u64 << outer_bits) - 1) };
            let mu_in = if outer_bits >= 64 { 0 } else { mu >> outer_bits };
            let decision = restricted_decision_rc(&outer, r);
            (inner.decide)(&decision, mu_in, answers)
        })
    };

    let simulate = outer.simulate.is_some().then(|| {
        let outer = outer.clone();
        let inner = inner.clone();
        Box::new(
            move |adv: &dyn Adversary, coins: u64, seed: Seed| -> Result<VerifierView, OracleError> {
                // Simulating the composed system runs the outer simulator on
                // the hybrid adversary; realized by serving the adversary
                // through the local map backed by the outer simulator's
                // answer distribution. With the reference outer simulators
                // in this crate the base is itself an answer source.
                let base_sim = outer.simulate.as_ref().expect("checked");
                // One-query-at-a-time translation is exact because the map
                // is deterministic; see the lifted_simulator tests for the
                // distribution audit.
                let map = local_map_for(outer.clone(), inner.clone());
                struct AdapterSource<'x> {
                    sim: &'x dyn Fn(
                        &dyn Adversary,
                        u64,
                        Seed,
                    ) -> Result<VerifierView, OracleError>,
                    coins: u64,
                    seed: Seed,
                    asked: std::cell::RefCell<Vec<(String, OracleIndex)>>,
                }
                impl AnswerSource for AdapterSource<'_> {
                    fn answer(
                        &mut self,
                        oracle: &str,
                        idx: &OracleIndex,
                    ) -> Result<Symbol, OracleError> {
                        // Ask the base simulator for the cumulative query
                        // sequence and take the final answer: black-box reuse
                        // of a view-level simulator as an answer source.
                        self.asked
                            .borrow_mut()
                            .push((oracle.to_string(), idx.clone()));
                        let fixed = self.asked.borrow().clone();
                        struct FixedSeq {
                            queries: Vec<(String, OracleIndex)>,
                        }
                        impl Adversary for FixedSeq {
                            fn name(&self) -> &str {
                                "fixed-seq"
                            }
                            fn budget(&self) -> u64 {
                                self.queries.len() as u64
                            }
                            fn next_query(
                                &self,
                                _c: u64,
                                h: &[(String, OracleIndex, Symbol)],
                            ) -> Option<(String, OracleIndex)> {
                                self.queries.get(h.len()).cloned()
                            }
                        }
                        let view = (self.sim)(
                            &FixedSeq {
                                queries: fixed,
                            },
                            self.coins,
                            self.seed,
                        )?;
                        Ok(view.answers.last().expect("asked one").2.clone())
                    }
                }
                let mut base = AdapterSource {
                    sim: base_sim.as_ref(),
                    coins,
                    seed,
                    asked: std::cell::RefCell::new(Vec::new()),
                };
                lifted_simulator(&mut base, &map, adv, coins)
                    .map_err(|e| OracleError::Backend(e.to_string()))
            },
        )
            as Box<dyn Fn(&dyn Adversary, u64, Seed) -> Result<VerifierView, OracleError>>
    });

    Ok(PcpSystem {
        params,
        prove,
        query,
        decide,
        simulate,
    })
}

/// The outer decision at fixed randomness, as an opaque evaluable with its
/// recorded size when available.
fn restricted_decision_rc(outer: &std::rc::Rc<PcpSystem>, r: u64) -> DecisionEval {
    let size = outer.params.decision_size;
    let outer = outer.clone();
    DecisionEval {
        eval: Box::new(move |answers: &[Symbol]| (outer.decide)(r, answers)),
        size,
    }
}
