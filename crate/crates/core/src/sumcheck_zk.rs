//! Masked, robust, perfect-zero-knowledge sumcheck PCPP.
//!
//! The prover samples a mask R = Q - Q_rev + sum_i Z_H(X_i) T_i, which sums
//! to zero over H^m (the antisymmetric part cancels under the reversal
//! pairing, the nullstellensatz part vanishes pointwise on H), then proves
//! the claim for F + R with the robust sumcheck and publishes the masks as a
//! second bundled oracle pi_P(x) = (Q(x), T_1(x), ..., T_m(x)). The verifier
//! re-derives every (F+R) input query from F and two pi_P reads, runs the
//! sumcheck checks on the synthesized values, and low-degree tests both F
//! and pi_P.

use crate::adversary::{run_adversary, Adversary, OracleSet};
use crate::field::{FieldCtx, FieldElem};
use crate::ldt::{LdtOutcome, LdtParams};
use crate::oracles::{Alphabet, OracleError, OracleHandle, OracleIndex, Symbol, VerifierView};
use crate::poly::{
    poly_random, vanishing_coeffs, uni_eval, DegreeBounds, MultiPoly,
};
use crate::sumcheck_rsc::{
    assemble_table, sumcheck_polys, CheckFailure, RscCoins, RscProof, ScError, SumInstance,
    Verdict,
};
use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// The mask polynomials: Q with per-variable bounds (d, ..., d) and, for
/// each i, T_i with the same bounds except d - |H| in coordinate i.
#[derive(Debug, Clone)]
pub struct MaskSet {
    pub q: MultiPoly,
    pub t: Vec<MultiPoly>,
}

impl MaskSet {
    /// Assemble R = Q - Q_rev + sum_i Z_H(X_i) T_i.
    pub fn mask_poly(&self, inst: &SumInstance) -> MultiPoly {
        let z = vanishing_coeffs(&inst.field, &inst.h);
        let mut r = self.q.sub(&self.q.reverse_vars());
        for (i, t) in self.t.iter().enumerate() {
            r = r.add(&t.mul_univariate_in_var(&z, i));
        }
        r
    }
}

/// Sample a fresh mask set and its assembled mask polynomial.
pub fn zksc_mask(inst: &SumInstance, rng: &mut impl Rng) -> (MaskSet, MultiPoly) {
    let f = &inst.field;
    let m = inst.m;
    let d = inst.d;
    let q = poly_random(f, m, DegreeBounds::PerVar(vec![d; m]), rng);
    let t: Vec<MultiPoly> = (0..m)
        .map(|i| {
            let mut bounds = vec![d; m];
            bounds[i] = d - inst.h.len();
            poly_random(f, m, DegreeBounds::PerVar(bounds), rng)
        })
        .collect();
    let masks = MaskSet { q, t };
    let r = masks.mask_poly(inst);
    (masks, r)
}

/// The bundled proof: the robust sumcheck table for F + R, re-alphabetized
/// to width m+1 by two zero padding elements per symbol, plus the mask table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZkscProof {
    pub pi_sigma: RscProof,
    /// Dense table over F^m with symbols (Q(x), T_1(x), ..., T_m(x)).
    pub pi_p: Vec<Symbol>,
}

impl ZkscProof {
    /// pi_sigma as an oracle over F^(m-1) with width-(m+1) symbols.
    pub fn sigma_oracle(&self, field: &FieldCtx, m: usize) -> OracleHandle {
        let padded: Vec<Symbol> = self
            .pi_sigma
            .table
            .iter()
            .map(|s| pad_symbol(s, m + 1))
            .collect();
        OracleHandle::table_over_grid(
            "pi_sigma",
            m - 1,
            field.order(),
            padded,
            Alphabet::Elems { width: m + 1 },
        )
    }

    pub fn p_oracle(&self, field: &FieldCtx, m: usize) -> OracleHandle {
        OracleHandle::table_over_grid(
            "pi_p",
            m,
            field.order(),
            self.pi_p.clone(),
            Alphabet::Elems { width: m + 1 },
        )
    }
}

pub fn pad_symbol(s: &Symbol, width: usize) -> Symbol {
    let mut out = s.clone();
    out.resize(width, FieldElem::ZERO);
    out
}

/// Honest prover with explicit masks (the random path samples them).
pub fn zksc_prove_with_masks(
    inst: &SumInstance,
    f_input: &MultiPoly,
    masks: &MaskSet,
) -> Result<ZkscProof, ScError> {
    let f = &inst.field;
    let r = masks.mask_poly(inst);
    let masked = f_input.add(&r);
    let gs = sumcheck_polys(inst, &masked)?;
    let pi_sigma = assemble_table(inst, &gs);
    let q = f.order() as usize;
    let mut pi_p = Vec::with_capacity(q.pow(inst.m as u32));
    let mut grid = vec![0usize; inst.m];
    loop {
        let pt: Vec<FieldElem> = grid.iter().map(|&g| FieldElem(g as u32)).collect();
        let mut sym = Vec::with_capacity(inst.m + 1);
        sym.push(masks.q.eval(&pt).expect("arity"));
        for t in &masks.t {
            sym.push(t.eval(&pt).expect("arity"));
        }
        pi_p.push(sym);
        if !crate::oracles::odometer_advance(&mut grid, q) {
            break;
        }
    }
    Ok(ZkscProof { pi_sigma, pi_p })
}

/// Honest prover: mask, then prove the masked claim.
pub fn zksc_prove(
    inst: &SumInstance,
    f_input: &MultiPoly,
    rng: &mut impl Rng,
) -> Result<ZkscProof, ScError> {
    let (masks, _) = zksc_mask(inst, rng);
    zksc_prove_with_masks(inst, f_input, &masks)
}

/// Verifier coins: the sumcheck prefix plus seeds for the two low-degree
/// tests (input F and mask bundle).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZkscCoins {
    pub c: Vec<FieldElem>,
    pub ldt_seed_f: u64,
    pub ldt_seed_p: u64,
}

impl ZkscCoins {
    pub fn rsc(&self) -> RscCoins {
        RscCoins {
            c: self.c.clone(),
            ldt_seed: self.ldt_seed_f,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZkCheckFailure {
    Rsc(CheckFailure),
    PaddingNonzero,
    MaskBundleLowDegree,
}

#[derive(Debug)]
pub struct ZkscOutcome {
    pub accept: bool,
    pub failures: Vec<ZkCheckFailure>,
    pub sigma_column: Vec<Symbol>,
    /// Synthesized (F + R) values along the verifier's axis.
    pub masked_axis: Vec<FieldElem>,
    pub ldt_f: LdtOutcome,
    pub ldt_p: LdtOutcome,
    pub view: VerifierView,
}

#[derive(Debug, Clone)]
pub struct ZkscVerifier {
    pub inst: SumInstance,
    pub ldt_reps: usize,
    /// Override for the vector test's field-size precondition on micro
    /// instances.
    pub allow_small_field: bool,
}

impl ZkscVerifier {
    pub fn new(inst: SumInstance) -> Self {
        ZkscVerifier {
            inst,
            ldt_reps: 1,
            allow_small_field: false,
        }
    }

    pub fn allowing_small_field(mut self) -> Self {
        self.allow_small_field = true;
        self
    }

    pub fn coins_from_rng(&self, rng: &mut impl Rng) -> ZkscCoins {
        let f = &self.inst.field;
        ZkscCoins {
            c: (0..self.inst.m - 1).map(|_| f.random(rng)).collect(),
            ldt_seed_f: rng.gen(),
            ldt_seed_p: rng.gen(),
        }
    }

    /// Mask-bundle test degree parameter: m * d.
    pub fn d_p(&self) -> usize {
        self.inst.m * self.inst.d
    }

    /// Mask-bundle proximity parameter: delta_RM / 8.
    pub fn epsilon_p(&self) -> Ratio<u64> {
        self.inst.delta_rm() / Ratio::new(8, 1)
    }

    /// Synthesize one (F + R)(x) value from F(x), pi_P(x) and pi_P(rev x).
    pub fn synthesize_masked(
        &self,
        x: &[FieldElem],
        f_val: FieldElem,
        pp_here: &Symbol,
        pp_rev: &Symbol,
    ) -> FieldElem {
        let f = &self.inst.field;
        let z = vanishing_coeffs(f, &self.inst.h);
        let q_here = pp_here[0];
        let q_rev = pp_rev[0];
        let mut acc = f.add(f_val, f.sub(q_here, q_rev));
        for (i, &xi) in x.iter().enumerate() {
            let zi = uni_eval(f, &z, xi);
            acc = f.add(acc, f.mul(zi, pp_here[1 + i]));
        }
        acc
    }

    /// Run the verifier against oracle handles.
    pub fn verify(
        &self,
        f_input: &mut OracleHandle,
        pi_sigma: &mut OracleHandle,
        pi_p: &mut OracleHandle,
        coins: &ZkscCoins,
    ) -> Result<ZkscOutcome, ScError> {
        let f_cell = std::cell::RefCell::new(f_input);
        let sigma_cell = std::cell::RefCell::new(pi_sigma);
        let p_cell = std::cell::RefCell::new(pi_p);
        self.verify_with(
            coins,
            &mut |pt| f_cell.borrow_mut().query(&OracleIndex::point(pt)),
            &mut |pt| sigma_cell.borrow_mut().query(&OracleIndex::point(pt)),
            &mut |pt| p_cell.borrow_mut().query(&OracleIndex::point(pt)),
        )
    }

    /// Run the verifier against reader closures. Queries: the pi_sigma axis
    /// column, the F axis, the pi_P axis and reversed axis, then the two
    /// low-degree tests.
    pub fn verify_with(
        &self,
        coins: &ZkscCoins,
        f_read: &mut dyn FnMut(&[FieldElem]) -> Result<Symbol, OracleError>,
        sigma_read: &mut dyn FnMut(&[FieldElem]) -> Result<Symbol, OracleError>,
        pp_read: &mut dyn FnMut(&[FieldElem]) -> Result<Symbol, OracleError>,
    ) -> Result<ZkscOutcome, ScError> {
        let inst = &self.inst;
        let f = &inst.field;
        let m = inst.m;
        let mut failures = Vec::new();
        let mut view_answers = Vec::new();

        // pi_sigma column
        let mut sigma_column = Vec::new();
        for alpha in f.elements() {
            let mut idx = coins.c[..m - 2].to_vec();
            idx.push(alpha);
            let sym = sigma_read(&idx)?;
            if sym.len() != m + 1
                || sym[m - 1] != FieldElem::ZERO
                || sym[m] != FieldElem::ZERO
            {
                if !failures.contains(&ZkCheckFailure::PaddingNonzero) {
                    failures.push(ZkCheckFailure::PaddingNonzero);
                }
            }
            view_answers.push(("pi_sigma".to_string(), OracleIndex::point(&idx), sym.clone()));
            sigma_column.push(sym[..(m - 1).min(sym.len())].to_vec());
        }

        // Axis reads of F and pi_P, synthesizing (F+R).
        let mut masked_axis = Vec::with_capacity(f.order() as usize);
        for alpha in f.elements() {
            let mut x = coins.c.clone();
            x.push(alpha);
            let f_sym = f_read(&x)?;
            let pp_here = pp_read(&x)?;
            let mut rx = x.clone();
            rx.reverse();
            let pp_rev = pp_read(&rx)?;
            view_answers.push(("F".to_string(), OracleIndex::point(&x), f_sym.clone()));
            view_answers.push(("pi_p".to_string(), OracleIndex::point(&x), pp_here.clone()));
            view_answers.push(("pi_p".to_string(), OracleIndex::point(&rx), pp_rev.clone()));
            masked_axis.push(self.synthesize_masked(&x, f_sym[0], &pp_here, &pp_rev));
        }

        // Emulated sumcheck decision on the synthesized values.
        let rsc = crate::sumcheck_rsc::RscVerifier::new(inst.clone());
        let axis_verdict: Verdict = rsc.decide_axis(&coins.rsc(), &sigma_column, &masked_axis);
        failures.extend(axis_verdict.failures.into_iter().map(ZkCheckFailure::Rsc));

        // Scalar low-degree test on F.
        let mut params_f = LdtParams::new(m, inst.d_input_total, self.ldt_reps);
        params_f.proximity = inst.delta_rm();
        let ldt_f = crate::ldt::ldt_scalar_with(f, f_read, &params_f, coins.ldt_seed_f)?;
        if !ldt_f.accept {
            failures.push(ZkCheckFailure::Rsc(CheckFailure::InputLowDegree));
        }

        // Vector low-degree test on the mask bundle.
        let mut params_p = LdtParams::new(m, self.d_p(), self.ldt_reps);
        params_p.proximity = self.epsilon_p();
        params_p.allow_small_field = self.allow_small_field;
        let ldt_p =
            crate::ldt::ldt_vector_with(f, pp_read, &params_p, coins.ldt_seed_p, m + 1)?;
        if !ldt_p.accept {
            failures.push(ZkCheckFailure::MaskBundleLowDegree);
        }

        Ok(ZkscOutcome {
            accept: failures.is_empty(),
            failures,
            sigma_column,
            masked_axis,
            ldt_f,
            ldt_p,
            view: VerifierView {
                randomness: serde_json::to_vec(coins).expect("serializable"),
                answers: view_answers,
            },
        })
    }
}

/// Reference simulator: rerun the honest prover with fresh randomness and
/// answer the adversary from the resulting bundle. The output distribution
/// equals the real view distribution because the proof distribution itself
/// is resampled; the budget is still enforced so the query accounting of
/// downstream simulators stays meaningful.
pub fn zksc_simulate_reference(
    inst: &SumInstance,
    f_input: &MultiPoly,
    adversary: &dyn Adversary,
    coins: u64,
    rng: &mut impl Rng,
) -> Result<VerifierView, ScError> {
    let proof = zksc_prove(inst, f_input, rng)?;
    let mut sigma = proof.sigma_oracle(&inst.field, inst.m);
    let mut pp = proof.p_oracle(&inst.field, inst.m);
    let fi = f_input.clone();
    let mut f_oracle = OracleHandle::lazy_over_grid(
        "F",
        inst.m,
        inst.field.order(),
        Alphabet::Elems { width: 1 },
        move |x| vec![fi.eval(x).expect("arity")],
    );
    let mut src = OracleSet {
        oracles: vec![
            ("pi_sigma", &mut sigma),
            ("pi_p", &mut pp),
            ("F", &mut f_oracle),
        ],
    };
    run_adversary(adversary, coins, &mut src).map_err(ScError::from)
}

/// Exhaustive statistical-independence check between the partial sums of a
/// random bounded polynomial and its evaluations at a bounded query set.
///
/// Enumerates every polynomial Z with individual degree at most `d` in the
/// first `m` variables and at most `d_prime` in the last `k`, tabulates the
/// joint distribution of (the full table of sum_{y in H^k} Z(., y), the
/// tuple (Z(q))_q), and returns true iff the joint factors exactly.
pub fn sum_indep_check(
    field: &FieldCtx,
    m: usize,
    k: usize,
    h: &crate::field::SubsetH,
    d: usize,
    d_prime: usize,
    queries: &[Vec<FieldElem>],
) -> Result<bool, ScError> {
    if d_prime < 2 * (h.len() - 1) {
        return Err(ScError::BadInstance(format!(
            "d' = {d_prime} is below the 2(|H|-1) = {} hypothesis",
            2 * (h.len() - 1)
        )));
    }
    let budget = (h.len() as u64).pow(k as u32);
    if queries.len() as u64 >= budget {
        return Err(ScError::BadInstance(format!(
            "|Q| = {} must be below |H|^k = {budget}",
            queries.len()
        )));
    }
    let dim = (d + 1).pow(m as u32) * (d_prime + 1).pow(k as u32);
    let space = (field.order() as f64).powi(dim as i32);
    if space > (1u64 << 21) as f64 {
        return Err(ScError::Oracle(OracleError::SearchSpaceTooLarge(format!(
            "{}^{dim} polynomials",
            field.order()
        ))));
    }

    let mut bounds = vec![d; m];
    bounds.extend(vec![d_prime; k]);
    let bounds = DegreeBounds::PerVar(bounds);
    let q = field.order() as usize;

    // Grid of all F^m points for the sum table, and H^k for the inner sums.
    let mut f_points: Vec<Vec<FieldElem>> = Vec::new();
    {
        let mut grid = vec![0usize; m];
        loop {
            f_points.push(grid.iter().map(|&g| FieldElem(g as u32)).collect());
            if !crate::oracles::odometer_advance(&mut grid, q) {
                break;
            }
        }
    }
    let mut h_points: Vec<Vec<FieldElem>> = Vec::new();
    {
        let mut grid = vec![0usize; k];
        loop {
            h_points.push(grid.iter().map(|&g| h.elems[g]).collect());
            if !crate::oracles::odometer_advance(&mut grid, h.len()) {
                break;
            }
        }
    }

    let mut joint: std::collections::HashMap<(Vec<u32>, Vec<u32>), u64> = Default::default();
    let mut marg_sum: std::collections::HashMap<Vec<u32>, u64> = Default::default();
    let mut marg_ans: std::collections::HashMap<Vec<u32>, u64> = Default::default();
    let mut total = 0u64;

    let proto = MultiPoly::zero(field, m + k, bounds.clone());
    let n_coeffs = proto.coeffs.len();
    let mut counters = vec![0usize; n_coeffs];
    loop {
        let mut z = MultiPoly::zero(field, m + k, bounds.clone());
        for (slot, &c) in counters.iter().enumerate() {
            z.coeffs[slot] = FieldElem(c as u32);
        }
        let sum_table: Vec<u32> = f_points
            .iter()
            .map(|alpha| {
                let mut acc = FieldElem::ZERO;
                for y in &h_points {
                    let mut pt = alpha.clone();
                    pt.extend_from_slice(y);
                    acc = field.add(acc, z.eval(&pt).expect("arity"));
                }
                acc.0
            })
            .collect();
        let answers: Vec<u32> = queries
            .iter()
            .map(|pt| z.eval(pt).expect("arity").0)
            .collect();
        *joint.entry((sum_table.clone(), answers.clone())).or_default() += 1;
        *marg_sum.entry(sum_table).or_default() += 1;
        *marg_ans.entry(answers).or_default() += 1;
        total += 1;
        if !crate::oracles::odometer_advance(&mut counters, q) {
            break;
        }
    }

    // Exact factorization: joint * total == product of marginals, for every
    // pair in the product support (zero-count pairs included).
    for (st, &cs) in &marg_sum {
        for (ans, &ca) in &marg_ans {
            let j = joint.get(&(st.clone(), ans.clone())).copied().unwrap_or(0);
            if j * total != cs * ca {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
