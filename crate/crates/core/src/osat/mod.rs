//! A perfect-zero-knowledge PCP for Oracle-3SAT.
//!
//! An Oracle-3SAT instance is a 3-CNF B over r + 3s + 3 boolean variables
//! (z, b_1, b_2, b_3, a_1, a_2, a_3); it is implicitly satisfiable when some
//! witness table A: {0,1}^s -> {0,1} makes B true for every (z, b_1, b_2,
//! b_3) with a_i = A(b_i).
//!
//! The proof hides A behind a summation commitment: a random polynomial
//! C-hat over F^(m2+k) of individual degree 2(|H|-1) whose sums over H^k
//! decommit to A on the H^(m2) grid. Satisfiability becomes the vanishing,
//! on a structured grid, of a summand assembled from an arithmetization of
//! B, lexicographic index extensions, and the commitment; each grid claim is
//! delegated to a masked zero-knowledge sumcheck instance selected by a
//! random point tau.

pub mod sim;
pub mod tau;

use crate::field::{FieldCtx, FieldElem, SubsetH};
use crate::oracles::OracleError;
use crate::poly::{
    lde_from_table, uni_eval, uni_lagrange_indicator, DegreeBounds, MultiPoly, PolyError,
};
use crate::polysim::PolySim;
use crate::sumcheck_rsc::ScError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OsatError {
    #[error("formula has too many variables: {got} > 2^{s_cap}")]
    TooManyVariables { got: usize, s_cap: usize },
    #[error("witness table does not satisfy the instance")]
    WitnessInvalid,
    #[error("bit width mismatch: log|H| * m = {got}, target {want}")]
    WidthMismatch { got: usize, want: usize },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Sumcheck(#[from] ScError),
    #[error(transparent)]
    Ldt(#[from] crate::ldt::LdtError),
}

/// A literal of the 3-CNF: variable index into the (z, b_1, b_2, b_3, a)
/// layout, possibly negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lit {
    pub var: usize,
    pub negated: bool,
}

impl Lit {
    pub fn pos(var: usize) -> Self {
        Lit {
            var,
            negated: false,
        }
    }
    pub fn neg(var: usize) -> Self {
        Lit { var, negated: true }
    }
}

/// Oracle-3SAT instance: a 3-CNF over r + 3s + 3 variables, laid out as
/// z[0..r], b1[r..r+s], b2[r+s..r+2s], b3[r+2s..r+3s], a1, a2, a3.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OSatInstance {
    pub r: usize,
    pub s: usize,
    pub clauses: Vec<[Lit; 3]>,
}

impl OSatInstance {
    pub fn num_vars(&self) -> usize {
        self.r + 3 * self.s + 3
    }

    pub fn new(r: usize, s: usize, clauses: Vec<[Lit; 3]>) -> Result<Self, OsatError> {
        let n = r + 3 * s + 3;
        for cl in &clauses {
            for lit in cl {
                if lit.var >= n {
                    return Err(OsatError::BadParams(format!(
                        "literal variable {} out of range {n}",
                        lit.var
                    )));
                }
            }
        }
        Ok(OSatInstance { r, s, clauses })
    }

    /// Evaluate B on a full boolean assignment.
    pub fn eval(&self, bits: &[bool]) -> bool {
        debug_assert_eq!(bits.len(), self.num_vars());
        self.clauses.iter().all(|cl| {
            cl.iter()
                .any(|lit| bits[lit.var] ^ lit.negated)
        })
    }

    /// Assemble the full assignment from (z, b1, b2, b3, A(b1), A(b2), A(b3)).
    fn assignment(&self, z: usize, b: [usize; 3], a: [bool; 3]) -> Vec<bool> {
        let mut bits = Vec::with_capacity(self.num_vars());
        for i in 0..self.r {
            bits.push((z >> (self.r - 1 - i)) & 1 == 1);
        }
        for bi in b {
            for i in 0..self.s {
                bits.push((bi >> (self.s - 1 - i)) & 1 == 1);
            }
        }
        bits.extend(a);
        bits
    }
}

/// Brute-force check that the witness table satisfies B for every (z, b).
pub fn osat_check_direct(inst: &OSatInstance, a_table: &[bool]) -> bool {
    debug_assert_eq!(a_table.len(), 1 << inst.s);
    for z in 0..1usize << inst.r {
        for b1 in 0..1usize << inst.s {
            for b2 in 0..1usize << inst.s {
                for b3 in 0..1usize << inst.s {
                    let bits = inst.assignment(
                        z,
                        [b1, b2, b3],
                        [a_table[b1], a_table[b2], a_table[b3]],
                    );
                    if !inst.eval(&bits) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Brute-force implicit satisfiability over all 2^(2^s) witness oracles.
pub fn brute_force_witness(inst: &OSatInstance) -> Option<Vec<bool>> {
    let n = 1usize << inst.s;
    assert!(n <= 16, "witness enumeration limited to 2^s <= 16");
    for code in 0..1u64 << n {
        let table: Vec<bool> = (0..n).map(|i| (code >> i) & 1 == 1).collect();
        if osat_check_direct(inst, &table) {
            return Some(table);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// 3SAT front end
// ---------------------------------------------------------------------------

/// A CNF with at most 3 literals per clause over `num_vars` variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cnf {
    pub num_vars: usize,
    /// Clauses as (variable index, negated) pairs, 1..=3 literals each.
    pub clauses: Vec<Vec<(usize, bool)>>,
}

impl Cnf {
    pub fn eval(&self, w: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|cl| cl.iter().any(|&(v, neg)| w[v] ^ neg))
    }
}

/// Maps satisfying assignments of the source formula to witness tables of
/// the emitted Oracle-3SAT instance.
#[derive(Debug, Clone)]
pub struct WitnessTranslator {
    pub s: usize,
    pub num_vars: usize,
}

impl WitnessTranslator {
    pub fn translate(&self, w: &[bool]) -> Vec<bool> {
        let mut table = vec![false; 1 << self.s];
        let n = self.num_vars.min(table.len());
        table[..n].copy_from_slice(&w[..n]);
        table
    }
}

/// Direct desk-scale 3SAT front end.
///
/// Strategy: unit-propagate the formula; unit clauses become address-pinned
/// forcing clauses of B whenever the address width s fits the 3-literal
/// budget (s <= 2). The residual formula is decided by exhaustive search
/// (micro formulas only): a satisfiable residual contributes no further
/// clauses, an unsatisfiable formula is emitted as a pinned contradiction.
/// Either way the emitted B is implicitly satisfiable iff the input formula
/// is satisfiable, and every satisfying assignment translates to a passing
/// witness table.
pub fn osat_encode_from_3sat(phi: &Cnf) -> Result<(OSatInstance, WitnessTranslator), OsatError> {
    const S_CAP: usize = 2;
    let s = match phi.num_vars {
        0 | 1 | 2 => 1,
        3 | 4 => 2,
        got => {
            return Err(OsatError::TooManyVariables {
                got,
                s_cap: S_CAP,
            })
        }
    };
    let n = phi.num_vars;

    // Unit propagation.
    let mut forced: std::collections::BTreeMap<usize, bool> = Default::default();
    let mut clauses: Vec<Vec<(usize, bool)>> = phi.clauses.clone();
    loop {
        let mut changed = false;
        let mut next = Vec::new();
        for cl in &clauses {
            let mut live = Vec::new();
            let mut satisfied = false;
            for &(v, neg) in cl {
                match forced.get(&v) {
                    Some(&val) if val ^ neg => satisfied = true,
                    Some(_) => {}
                    None => live.push((v, neg)),
                }
            }
            if satisfied {
                continue;
            }
            match live.len() {
                0 => {
                    // conflict: unsatisfiable under propagation
                    return Ok((contradiction_instance(s), WitnessTranslator { s, num_vars: n }));
                }
                1 => {
                    let (v, neg) = live[0];
                    match forced.insert(v, !neg) {
                        Some(prev) if prev == neg => {
                            return Ok((
                                contradiction_instance(s),
                                WitnessTranslator { s, num_vars: n },
                            ));
                        }
                        _ => changed = true,
                    }
                }
                _ => next.push(live),
            }
        }
        clauses = next;
        if !changed {
            break;
        }
    }

    // Residual satisfiability by exhaustive search consistent with forced
    // values.
    let residual_sat = 'outer: {
        for code in 0..1u64 << n {
            let w: Vec<bool> = (0..n).map(|i| (code >> i) & 1 == 1).collect();
            if forced.iter().all(|(&v, &val)| w[v] == val) && phi.eval(&w) {
                break 'outer true;
            }
        }
        false
    };
    if !residual_sat {
        return Ok((contradiction_instance(s), WitnessTranslator { s, num_vars: n }));
    }

    // Satisfiable: emit the unit forcings (implied by the formula, so every
    // satisfying assignment's table passes them).
    let mut out = Vec::new();
    for (&v, &val) in &forced {
        out.push(forcing_clause(s, v, val));
    }
    Ok((
        OSatInstance {
            r: 0,
            s,
            clauses: out,
        },
        WitnessTranslator { s, num_vars: n },
    ))
}

/// A 3-clause forcing A(addr) = value: false exactly when b_1 = addr and
/// a_1 = !value. With r = 0 the b_1 block starts at variable 0.
fn forcing_clause(s: usize, addr: usize, value: bool) -> [Lit; 3] {
    let b1_bit = |i: usize| -> Lit {
        // Guard literal satisfied whenever b_{1,i} differs from addr's bit i
        // (MSB first): positive literal if the address bit is 0.
        let bit = (addr >> (s - 1 - i)) & 1 == 1;
        Lit {
            var: i,
            negated: bit,
        }
    };
    let payload = Lit {
        var: 3 * s, // a_1
        negated: !value,
    };
    match s {
        1 => [b1_bit(0), b1_bit(0), payload],
        2 => [b1_bit(0), b1_bit(1), payload],
        _ => unreachable!("encoder caps s at 2"),
    }
}

/// Never implicitly satisfiable: forces A(0..0) to both values.
fn contradiction_instance(s: usize) -> OSatInstance {
    OSatInstance {
        r: 0,
        s,
        clauses: vec![forcing_clause(s, 0, true), forcing_clause(s, 0, false)],
    }
}

// ---------------------------------------------------------------------------
// Parameters and arithmetization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithMode {
    /// Unique multilinear extension of 1 - B (table-based; micro widths).
    Multilinear,
    /// Arithmetic formula mirroring the CNF structure (degree grows with
    /// the clause count, evaluation stays cheap).
    Formula,
}

/// Field, subfield, and dimension bookkeeping for one instance.
#[derive(Debug, Clone)]
pub struct OSatParams {
    pub field: FieldCtx,
    pub h: SubsetH,
    /// log2 |H|.
    pub f_log: usize,
    pub m1: usize,
    pub m2: usize,
    pub k: usize,
    pub mode: ArithMode,
    /// Individual degree of the commitment in every variable: 2(|H|-1).
    pub c_ind_degree: usize,
    /// Recorded total degree of the arithmetization of B.
    pub d_b: usize,
}

impl OSatParams {
    pub fn new(
        field: &FieldCtx,
        h: SubsetH,
        inst: &OSatInstance,
        k: usize,
        mode: ArithMode,
    ) -> Result<Self, OsatError> {
        if !h.len().is_power_of_two() || h.len() < 2 {
            return Err(OsatError::BadParams(
                "H must be a power-of-two subfield".into(),
            ));
        }
        let f_log = h.len().trailing_zeros() as usize;
        if inst.r % f_log != 0 || inst.s % f_log != 0 {
            return Err(OsatError::BadParams(format!(
                "log|H| = {f_log} must divide r = {} and s = {}",
                inst.r, inst.s
            )));
        }
        if k == 0 {
            return Err(OsatError::BadParams("k must be at least 1".into()));
        }
        if field.characteristic() != 2 {
            return Err(OsatError::BadParams(
                "the commitment path requires characteristic 2".into(),
            ));
        }
        let d_b = match mode {
            ArithMode::Multilinear => inst.num_vars(),
            ArithMode::Formula => 3 * inst.clauses.len().max(1),
        };
        let c_ind_degree = 2 * (h.len() - 1);
        Ok(OSatParams {
            field: field.clone(),
            h,
            f_log,
            m1: inst.r / f_log,
            m2: inst.s / f_log,
            k,
            mode,
            c_ind_degree,
            d_b,
        })
    }

    /// Number of selector variables: m1 + 3 m2 + 3.
    pub fn big_m(&self) -> usize {
        self.m1 + 3 * self.m2 + 3
    }

    /// Total sumcheck variables: big_m + 3k.
    pub fn sum_vars(&self) -> usize {
        self.big_m() + 3 * self.k
    }

    /// Adversary budgets below |H|^k keep the commitment hiding.
    pub fn hiding_budget(&self) -> u64 {
        (self.h.len() as u64).pow(self.k as u32)
    }

    /// Total degree of the commitment polynomial.
    pub fn c_total_degree(&self) -> usize {
        (self.m2 + self.k) * self.c_ind_degree
    }
}

/// Arithmetization of 1 - B, evaluable at arbitrary field points.
#[derive(Debug, Clone)]
pub enum BHat {
    Multilinear(MultiPoly),
    Formula(OSatInstance),
}

/// Build the arithmetization in the requested mode.
pub fn arithmetize_b(
    field: &FieldCtx,
    inst: &OSatInstance,
    mode: ArithMode,
) -> Result<BHat, OsatError> {
    match mode {
        ArithMode::Multilinear => {
            let n = inst.num_vars();
            if n > 16 {
                return Err(OsatError::BadParams(format!(
                    "multilinear mode caps the variable count at 16, got {n}"
                )));
            }
            let mut table = Vec::with_capacity(1 << n);
            for code in 0..1usize << n {
                let bits: Vec<bool> = (0..n).map(|i| (code >> (n - 1 - i)) & 1 == 1).collect();
                table.push(if inst.eval(&bits) {
                    FieldElem::ZERO
                } else {
                    FieldElem::ONE
                });
            }
            let h01 = field.h01();
            Ok(BHat::Multilinear(lde_from_table(field, &h01, n, &table)?))
        }
        ArithMode::Formula => Ok(BHat::Formula(inst.clone())),
    }
}

impl BHat {
    /// Evaluate at field-valued bit arguments.
    pub fn eval(&self, field: &FieldCtx, bits: &[FieldElem]) -> FieldElem {
        match self {
            BHat::Multilinear(p) => p.eval(bits).expect("arity"),
            BHat::Formula(inst) => {
                // 1 - prod_c (1 - prod_t (1 - lit_t))
                let one = FieldElem::ONE;
                let mut formula = one;
                for cl in &inst.clauses {
                    let mut unsat = one;
                    for lit in cl {
                        let v = bits[lit.var];
                        let litval = if lit.negated { field.sub(one, v) } else { v };
                        unsat = field.mul(unsat, field.sub(one, litval));
                    }
                    formula = field.mul(formula, field.sub(one, unsat));
                }
                field.sub(one, formula)
            }
        }
    }

    /// Degree of the evaluator in each bit argument.
    pub fn per_bit_degrees(&self, n_bits: usize) -> Vec<usize> {
        match self {
            BHat::Multilinear(_) => vec![1; n_bits],
            BHat::Formula(inst) => {
                let mut degs = vec![0usize; n_bits];
                for cl in &inst.clauses {
                    for lit in cl {
                        degs[lit.var] += 1;
                    }
                }
                degs
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Lexicographic index extension
// ---------------------------------------------------------------------------

/// The bijection H^m -> {0,1}^(m log|H|) induced by the canonical order of
/// H, together with its minimal-degree per-bit extension (individual degree
/// |H| - 1).
#[derive(Debug, Clone)]
pub struct GammaLex {
    pub m: usize,
    pub f_log: usize,
    /// Univariate interpolants of the MSB-first index bits over H.
    pub bit_polys: Vec<Vec<FieldElem>>,
}

pub fn gamma_lex(
    field: &FieldCtx,
    h: &SubsetH,
    m: usize,
    target_bits: usize,
) -> Result<GammaLex, OsatError> {
    let f_log = h.len().trailing_zeros() as usize;
    if m * f_log != target_bits {
        return Err(OsatError::WidthMismatch {
            got: m * f_log,
            want: target_bits,
        });
    }
    let mut bit_polys = Vec::with_capacity(f_log);
    for bit in 0..f_log {
        let ys: Vec<FieldElem> = (0..h.len())
            .map(|t| {
                if (t >> (f_log - 1 - bit)) & 1 == 1 {
                    FieldElem::ONE
                } else {
                    FieldElem::ZERO
                }
            })
            .collect();
        bit_polys.push(crate::poly::uni_interpolate(field, &h.elems, &ys)?);
    }
    Ok(GammaLex {
        m,
        f_log,
        bit_polys,
    })
}

impl GammaLex {
    /// Exact bit string of a grid point of H^m.
    pub fn map_grid_point(&self, h: &SubsetH, pt: &[FieldElem]) -> Option<Vec<bool>> {
        let mut bits = Vec::with_capacity(self.m * self.f_log);
        for &x in pt {
            let t = h.index_of(x)?;
            for bit in 0..self.f_log {
                bits.push((t >> (self.f_log - 1 - bit)) & 1 == 1);
            }
        }
        Some(bits)
    }

    /// Extension values at an arbitrary point of F^m.
    pub fn eval(&self, field: &FieldCtx, x: &[FieldElem]) -> Vec<FieldElem> {
        debug_assert_eq!(x.len(), self.m);
        let mut out = Vec::with_capacity(self.m * self.f_log);
        for &xi in x {
            for bp in &self.bit_polys {
                out.push(uni_eval(field, bp, xi));
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Witness commitment
// ---------------------------------------------------------------------------

/// Sample the commitment: a uniformly random polynomial over F^(m2+k) with
/// individual degree 2(|H|-1) whose H^k-sums decommit to the witness on the
/// H^(m2) grid. Uniformity over the affine solution set comes from exact
/// elimination (particular solution plus uniform kernel element).
pub fn commit_witness(
    params: &OSatParams,
    gamma2: &GammaLex,
    a_table: &[bool],
    rng: &mut impl rand::Rng,
) -> MultiPoly {
    let f = &params.field;
    let m2 = params.m2;
    let k = params.k;
    let d = params.c_ind_degree;
    let mut sim = PolySim::new(f, m2 + k, DegreeBounds::PerVar(vec![d; m2 + k]));

    // One constraint per b in H^(m2): sum_{c in H^k} C(b, c) = A(gamma2(b)).
    let mut b_grid = vec![0usize; m2];
    loop {
        let b_pt: Vec<FieldElem> = b_grid.iter().map(|&g| params.h.elems[g]).collect();
        let bits = gamma2
            .map_grid_point(&params.h, &b_pt)
            .expect("grid point");
        let addr = bits
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
        let target = if a_table[addr] {
            FieldElem::ONE
        } else {
            FieldElem::ZERO
        };
        let mut terms = Vec::new();
        let mut c_grid = vec![0usize; k];
        loop {
            let mut pt = b_pt.clone();
            pt.extend(c_grid.iter().map(|&g| params.h.elems[g]));
            terms.push((pt, FieldElem::ONE));
            if !crate::oracles::odometer_advance(&mut c_grid, params.h.len()) {
                break;
            }
        }
        sim.constrain_combination(&terms, target)
            .expect("decommitment system is always feasible at degree >= |H|-1");
        if m2 == 0 || !crate::oracles::odometer_advance(&mut b_grid, params.h.len()) {
            break;
        }
    }
    sim.sample_polynomial(rng)
}

/// The decommitted table: sums of the commitment over H^k on the H^(m2) grid.
pub fn decommit(params: &OSatParams, chat: &MultiPoly) -> Vec<FieldElem> {
    let mut out = Vec::new();
    let mut b_grid = vec![0usize; params.m2];
    loop {
        let b_pt: Vec<FieldElem> = b_grid.iter().map(|&g| params.h.elems[g]).collect();
        out.push(a_hat_from_commitment(params, chat, &b_pt));
        if params.m2 == 0 || !crate::oracles::odometer_advance(&mut b_grid, params.h.len()) {
            break;
        }
    }
    out
}

/// A-hat(x) := sum_{c in H^k} C(x, c).
pub fn a_hat_from_commitment(
    params: &OSatParams,
    chat: &MultiPoly,
    x: &[FieldElem],
) -> FieldElem {
    let f = &params.field;
    let mut acc = FieldElem::ZERO;
    let mut c_grid = vec![0usize; params.k];
    loop {
        let mut pt = x.to_vec();
        pt.extend(c_grid.iter().map(|&g| params.h.elems[g]));
        acc = f.add(acc, chat.eval(&pt).expect("arity"));
        if !crate::oracles::odometer_advance(&mut c_grid, params.h.len()) {
            break;
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Summand evaluators
// ---------------------------------------------------------------------------

/// Evaluator for g: (z, b, a) -> B-hat(bits) * prod_i (A-hat(b_i) + a_i - 1).
pub struct SummandG<'a> {
    pub params: &'a OSatParams,
    pub b_hat: &'a BHat,
    pub gamma1: &'a GammaLex,
    pub gamma2: &'a GammaLex,
    pub a_hat: Box<dyn Fn(&[FieldElem]) -> FieldElem + 'a>,
}

impl SummandG<'_> {
    pub fn eval(&self, x: &[FieldElem]) -> FieldElem {
        let p = self.params;
        let f = &p.field;
        debug_assert_eq!(x.len(), p.big_m());
        let (z, rest) = x.split_at(p.m1);
        let (b1, rest) = rest.split_at(p.m2);
        let (b2, rest) = rest.split_at(p.m2);
        let (b3, a) = rest.split_at(p.m2);
        let mut bits = self.gamma1.eval(f, z);
        bits.extend(self.gamma2.eval(f, b1));
        bits.extend(self.gamma2.eval(f, b2));
        bits.extend(self.gamma2.eval(f, b3));
        bits.extend_from_slice(a);
        let mut acc = self.b_hat.eval(f, &bits);
        for (i, bi) in [b1, b2, b3].into_iter().enumerate() {
            let term = f.sub(f.add((self.a_hat)(bi), a[i]), FieldElem::ONE);
            acc = f.mul(acc, term);
        }
        acc
    }
}

/// Evaluator for h: like g, but each witness read goes through the
/// commitment with the 0^k Lagrange correction carrying the (a_i - 1) term.
pub struct SummandH<'a> {
    pub params: &'a OSatParams,
    pub b_hat: &'a BHat,
    pub gamma1: &'a GammaLex,
    pub gamma2: &'a GammaLex,
    /// Commitment accessor (a polynomial or a counted oracle read).
    pub chat: Box<dyn FnMut(&[FieldElem]) -> Result<FieldElem, OsatError> + 'a>,
    /// Univariate indicator of 0 within H.
    pub l0: Vec<FieldElem>,
}

impl SummandH<'_> {
    pub fn l0_coeffs(field: &FieldCtx, h: &SubsetH) -> Vec<FieldElem> {
        uni_lagrange_indicator(field, &h.elems, FieldElem::ZERO).expect("0 in H")
    }

    pub fn eval(&mut self, x: &[FieldElem]) -> Result<FieldElem, OsatError> {
        h_eval_raw(
            self.params,
            self.b_hat,
            self.gamma1,
            self.gamma2,
            &self.l0,
            &mut self.chat,
            x,
        )
    }
}

/// Pointwise evaluation of h at (z, b, a, c1, c2, c3): the arithmetized
/// clause predicate times three commitment reads with the 0^k Lagrange
/// correction carrying the (a_i - 1) term.
pub fn h_eval_raw(
    p: &OSatParams,
    b_hat: &BHat,
    gamma1: &GammaLex,
    gamma2: &GammaLex,
    l0: &[FieldElem],
    chat: &mut dyn FnMut(&[FieldElem]) -> Result<FieldElem, OsatError>,
    x: &[FieldElem],
) -> Result<FieldElem, OsatError> {
    let f = &p.field;
    debug_assert_eq!(x.len(), p.big_m() + 3 * p.k);
    let (z, rest) = x.split_at(p.m1);
    let (b1, rest) = rest.split_at(p.m2);
    let (b2, rest) = rest.split_at(p.m2);
    let (b3, rest) = rest.split_at(p.m2);
    let (a, cs) = rest.split_at(3);
    let (c1, rest) = cs.split_at(p.k);
    let (c2, c3) = rest.split_at(p.k);
    let mut bits = gamma1.eval(f, z);
    bits.extend(gamma2.eval(f, b1));
    bits.extend(gamma2.eval(f, b2));
    bits.extend(gamma2.eval(f, b3));
    bits.extend_from_slice(a);
    let mut acc = b_hat.eval(f, &bits);
    if acc == FieldElem::ZERO {
        return Ok(FieldElem::ZERO);
    }
    for (i, (bi, ci)) in [(b1, c1), (b2, c2), (b3, c3)].into_iter().enumerate() {
        let mut pt = bi.to_vec();
        pt.extend_from_slice(ci);
        let cval = chat(&pt)?;
        let lag = ci.iter().fold(FieldElem::ONE, |acc, &cj| {
            f.mul(acc, uni_eval(f, l0, cj))
        });
        let corr = f.mul(lag, f.sub(a[i], FieldElem::ONE));
        acc = f.mul(acc, f.add(cval, corr));
    }
    Ok(acc)
}
