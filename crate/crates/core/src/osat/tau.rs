//! Per-tau sumcheck machinery: the selected summand, the lazily realized
//! masked-sumcheck bundle, and the top-level prover and verifier.
//!
//! For a point tau, the delegated claim is that the summand
//!
//!   F_tau(W, C) = Sel(W; tau) * s(W_a) * h(W, C)
//!
//! sums to zero over H^(M+3k), where Sel is the node-side extension of the
//! grid indicator w -> L_{grid, w}(tau) (a product of per-coordinate
//! kernels), s re-weights the three a-coordinates so that summing them over
//! H equals summing over {0,1}, and h reads the commitment three times. The
//! full per-tau proof family is astronomically large, so bundles are
//! materialized on demand from seeds derived from the master seed; the
//! realization is distribution-identical to a written-out proof for every
//! access pattern.

use super::{
    arithmetize_b, gamma_lex, ArithMode, BHat, GammaLex, OSatInstance, OSatParams, OsatError,
};
use crate::field::{FieldCtx, FieldElem, SubsetH};
use crate::ldt::{ldt_scalar, LdtParams, Line};
use crate::oracles::{Alphabet, OracleError, OracleHandle, OracleIndex, Symbol};
use crate::poly::{
    flat_accumulate_shifted, flat_digit_reverse, flat_eval, flat_partial_eval_prefix,
    flat_restrict_line, power_sums, uni_add, uni_eval, uni_interpolate,
    uni_lagrange_indicator, vanishing_coeffs, MultiPoly,
};
use crate::seeds::{child_seed_bytes, rng_from, Seed};
use crate::sumcheck_rsc::SumInstance;
use crate::sumcheck_zk::{ZkCheckFailure, ZkscCoins, ZkscVerifier};
use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Everything fixed once instance and parameters are chosen.
pub struct OSatSystem {
    pub inst: OSatInstance,
    pub params: OSatParams,
    pub b_hat: BHat,
    pub gamma1: GammaLex,
    pub gamma2: GammaLex,
    /// Indicator of {0,1} within H (degree |H|-1; constant 1 when |H| = 2).
    pub s_hat: Vec<FieldElem>,
    /// Indicator of 0 within H.
    pub l0: Vec<FieldElem>,
    /// Indicator of each element of H, in canonical order.
    pub h_indicators: Vec<Vec<FieldElem>>,
}

impl OSatSystem {
    pub fn new(
        field: &FieldCtx,
        h: SubsetH,
        inst: OSatInstance,
        k: usize,
        mode: ArithMode,
    ) -> Result<Self, OsatError> {
        let params = OSatParams::new(field, h.clone(), &inst, k, mode)?;
        let b_hat = arithmetize_b(field, &inst, mode)?;
        let gamma1 = gamma_lex(field, &h, params.m1, inst.r)?;
        let gamma2 = gamma_lex(field, &h, params.m2, inst.s)?;
        let s_hat = {
            let ys: Vec<FieldElem> = h
                .elems
                .iter()
                .map(|&e| {
                    if e == FieldElem::ZERO || e == FieldElem::ONE {
                        FieldElem::ONE
                    } else {
                        FieldElem::ZERO
                    }
                })
                .collect();
            uni_interpolate(field, &h.elems, &ys)?
        };
        let l0 = uni_lagrange_indicator(field, &h.elems, FieldElem::ZERO)?;
        let h_indicators = h
            .elems
            .iter()
            .map(|&e| uni_lagrange_indicator(field, &h.elems, e))
            .collect::<Result<_, _>>()?;
        Ok(OSatSystem {
            inst,
            params,
            b_hat,
            gamma1,
            gamma2,
            s_hat,
            l0,
            h_indicators,
        })
    }

    /// Per-variable degree caps of F_tau across the M + 3k sumcheck
    /// variables.
    pub fn per_var_degrees(&self) -> Vec<usize> {
        let p = &self.params;
        let hd = p.h.len() - 1;
        let s_deg = if p.h.len() == 2 { 0 } else { hd };
        let per_bit = self.b_hat.per_bit_degrees(self.inst.num_vars());
        let mut out = Vec::with_capacity(p.sum_vars());
        let mut bit_cursor = 0usize;
        // z coordinates
        for _ in 0..p.m1 {
            let bsum: usize = per_bit[bit_cursor..bit_cursor + p.f_log].iter().sum();
            bit_cursor += p.f_log;
            out.push(hd + bsum * hd.max(1));
        }
        // b coordinates (three blocks)
        for _ in 0..3 {
            for _ in 0..p.m2 {
                let bsum: usize = per_bit[bit_cursor..bit_cursor + p.f_log].iter().sum();
                bit_cursor += p.f_log;
                out.push(hd + bsum * hd.max(1) + p.c_ind_degree);
            }
        }
        // a coordinates
        for _ in 0..3 {
            let bdeg = per_bit[bit_cursor];
            bit_cursor += 1;
            out.push(1 + s_deg + bdeg + 1);
        }
        // c coordinates
        for _ in 0..3 * p.k {
            out.push(p.c_ind_degree.max(hd));
        }
        out
    }

    /// Upper bound on the total degree of F_tau.
    pub fn summand_total_degree(&self) -> usize {
        let p = &self.params;
        let hd = p.h.len() - 1;
        let s_deg = if p.h.len() == 2 { 0 } else { hd };
        let sel = (p.m1 + 3 * p.m2) * hd + 3;
        let b_comp: usize = self
            .b_hat
            .per_bit_degrees(self.inst.num_vars())
            .iter()
            .enumerate()
            .map(|(bit, &d)| {
                if bit < self.inst.r + 3 * self.inst.s {
                    d * hd.max(1)
                } else {
                    d
                }
            })
            .sum();
        let h_factors = 3 * p.c_total_degree().max(p.k * hd + 1);
        sel + 3 * s_deg + b_comp + h_factors
    }

    /// The summation instance shared by every tau: gamma = 0, degree cap
    /// from the per-variable maxima, input-test degree from the total bound.
    pub fn sum_instance(&self) -> Result<SumInstance, OsatError> {
        let f = &self.params.field;
        let m_sum = self.params.sum_vars();
        let d = *self.per_var_degrees().iter().max().expect("nonempty");
        let d = d.max(self.params.h.len() + 1);
        let bound = Ratio::new((m_sum * d) as u64, f.order());
        let inst = if bound < Ratio::new(1, 1) {
            let delta = (bound + Ratio::new(1, 1)) / Ratio::new(2, 1);
            SumInstance::new(f, m_sum, d, self.params.h.clone(), FieldElem::ZERO, delta)?
        } else {
            SumInstance::new_relaxed(
                f,
                m_sum,
                d,
                self.params.h.clone(),
                FieldElem::ZERO,
                Ratio::new(1, 1),
            )?
        };
        Ok(inst.with_input_total_degree(self.summand_total_degree()))
    }

    /// Per-coordinate selector kernels for a fixed tau: on the H-node
    /// coordinates u(W) = sum_h l_h(W) l_h(tau_j); on the three a-node
    /// coordinates the node set is {0,1}.
    pub fn selector_kernels(&self, tau: &[FieldElem]) -> Vec<Vec<FieldElem>> {
        let f = &self.params.field;
        let p = &self.params;
        debug_assert_eq!(tau.len(), p.big_m());
        let mut out = Vec::with_capacity(p.big_m());
        for (j, &tj) in tau.iter().enumerate() {
            if j < p.m1 + 3 * p.m2 {
                let mut acc = vec![FieldElem::ZERO; p.h.len()];
                for ind in &self.h_indicators {
                    let w = uni_eval(f, ind, tj);
                    if w != FieldElem::ZERO {
                        acc = uni_add(f, &acc, &crate::poly::uni_scale(f, ind, w));
                    }
                }
                out.push(acc);
            } else {
                // nodes {0,1}: (1 - W)(1 - tau) + W tau
                let one = FieldElem::ONE;
                let c0 = f.sub(one, tj);
                let c1 = f.sub(f.add(tj, tj), one); // 2 tau - 1
                out.push(vec![c0, c1]);
            }
        }
        out
    }

    /// Evaluate the summand F_tau at (w, c) using a commitment accessor.
    pub fn summand_eval(
        &self,
        kernels: &[Vec<FieldElem>],
        chat: &mut dyn FnMut(&[FieldElem]) -> Result<FieldElem, OsatError>,
        x: &[FieldElem],
    ) -> Result<FieldElem, OsatError> {
        let p = &self.params;
        let f = &p.field;
        debug_assert_eq!(x.len(), p.sum_vars());
        let big_m = p.big_m();
        let mut sel = FieldElem::ONE;
        for (j, k) in kernels.iter().enumerate() {
            sel = f.mul(sel, uni_eval(f, k, x[j]));
            if sel == FieldElem::ZERO {
                return Ok(FieldElem::ZERO);
            }
        }
        // a-coordinate reweighting
        let a_base = p.m1 + 3 * p.m2;
        for t in 0..3 {
            sel = f.mul(sel, uni_eval(f, &self.s_hat, x[a_base + t]));
            if sel == FieldElem::ZERO {
                return Ok(FieldElem::ZERO);
            }
        }
        let h_val = super::h_eval_raw(
            p,
            &self.b_hat,
            &self.gamma1,
            &self.gamma2,
            &self.l0,
            chat,
            &x[..big_m + 3 * p.k],
        )?;
        Ok(f.mul(sel, h_val))
    }

    /// Exact sum of F_tau over the full grid H^(M+3k), which equals the
    /// low-degree extension of the inner-sum table evaluated at tau.
    pub fn summand_grid_sum(
        &self,
        tau: &[FieldElem],
        chat: &MultiPoly,
    ) -> Result<FieldElem, OsatError> {
        let p = &self.params;
        let f = &p.field;
        let kernels = self.selector_kernels(tau);
        let mut acc = FieldElem::ZERO;
        let mut grid = vec![0usize; p.sum_vars()];
        let mut access = |pt: &[FieldElem]| Ok(chat.eval(pt).expect("arity"));
        loop {
            let x: Vec<FieldElem> = grid.iter().map(|&g| p.h.elems[g]).collect();
            acc = f.add(acc, self.summand_eval(&kernels, &mut access, &x)?);
            if !crate::oracles::odometer_advance(&mut grid, p.h.len()) {
                break;
            }
        }
        Ok(acc)
    }

    /// Inner-sum table value at a mixed-grid point w: sum over H^(3k) of
    /// h(w, c).
    pub fn inner_sum_at(
        &self,
        chat: &MultiPoly,
        w: &[FieldElem],
    ) -> Result<FieldElem, OsatError> {
        let p = &self.params;
        let f = &p.field;
        let mut acc = FieldElem::ZERO;
        let mut grid = vec![0usize; 3 * p.k];
        let mut access =
            |pt: &[FieldElem]| -> Result<FieldElem, OsatError> { Ok(chat.eval(pt).expect("arity")) };
        loop {
            let mut x = w.to_vec();
            x.extend(grid.iter().map(|&g| p.h.elems[g]));
            acc = f.add(
                acc,
                super::h_eval_raw(
                    p,
                    &self.b_hat,
                    &self.gamma1,
                    &self.gamma2,
                    &self.l0,
                    &mut access,
                    &x,
                )?,
            );
            if !crate::oracles::odometer_advance(&mut grid, p.h.len()) {
                break;
            }
        }
        Ok(acc)
    }
}

// ---------------------------------------------------------------------------
// Dense per-tau masks in flat layout
// ---------------------------------------------------------------------------

/// Dense masks for one tau bundle, kept as flat coefficient arrays.
pub struct DenseMasks {
    pub m: usize,
    pub d: usize,
    pub q: Vec<FieldElem>,
    pub t: Vec<Vec<FieldElem>>,
}

impl DenseMasks {
    pub fn sample(field: &FieldCtx, m: usize, d: usize, h_len: usize, rng: &mut impl Rng) -> Self {
        let q_len = (d + 1).pow(m as u32);
        let mut q = vec![FieldElem::ZERO; q_len];
        field.random_fill(&mut q, rng);
        let t = (0..m)
            .map(|i| {
                let mut len = 1usize;
                for j in 0..m {
                    len *= if j == i { d + 1 - h_len } else { d + 1 };
                }
                let mut ti = vec![FieldElem::ZERO; len];
                field.random_fill(&mut ti, rng);
                ti
            })
            .collect();
        DenseMasks { m, d, q, t }
    }

    fn t_radixes(&self, i: usize, h_len: usize) -> Vec<usize> {
        (0..self.m)
            .map(|j| if j == i { self.d + 1 - h_len } else { self.d + 1 })
            .collect()
    }

    /// Assemble R = Q - Q_rev + sum_i Z_H(X_i) T_i as a flat array with
    /// uniform radix d+1.
    pub fn mask_flat(&self, field: &FieldCtx, h: &SubsetH) -> Vec<FieldElem> {
        let radix = self.d + 1;
        let radixes = vec![radix; self.m];
        let z = vanishing_coeffs(field, h);
        let mut r = self.q.clone();
        let q_rev = flat_digit_reverse(&self.q, radix, self.m);
        for (a, &b) in r.iter_mut().zip(&q_rev) {
            *a = field.sub(*a, b);
        }
        for (i, ti) in self.t.iter().enumerate() {
            let src_radixes = self.t_radixes(i, h.len());
            for (kexp, &zc) in z.iter().enumerate() {
                if zc == FieldElem::ZERO {
                    continue;
                }
                flat_accumulate_shifted(
                    field,
                    &mut r,
                    &radixes,
                    ti,
                    &src_radixes,
                    i,
                    kexp,
                    zc,
                );
            }
        }
        r
    }

    /// Evaluate the bundled mask symbol (Q(x), T_1(x), ..., T_m(x)).
    pub fn symbol_at(&self, field: &FieldCtx, h_len: usize, x: &[FieldElem]) -> Symbol {
        let radix = self.d + 1;
        let mut out = Vec::with_capacity(self.m + 1);
        out.push(flat_eval(field, &self.q, &vec![radix; self.m], x));
        for (i, ti) in self.t.iter().enumerate() {
            out.push(flat_eval(field, ti, &self.t_radixes(i, h_len), x));
        }
        out
    }

    /// Restrictions of every bundled coordinate to a line: one univariate
    /// per coordinate.
    pub fn line_restrictions(
        &self,
        field: &FieldCtx,
        h_len: usize,
        line: &Line,
    ) -> Vec<Vec<FieldElem>> {
        let radix = self.d + 1;
        let mut out = Vec::with_capacity(self.m + 1);
        out.push(flat_restrict_line(
            field,
            &self.q,
            &vec![radix; self.m],
            &line.base,
            &line.dir,
        ));
        for (i, ti) in self.t.iter().enumerate() {
            out.push(flat_restrict_line(
                field,
                ti,
                &self.t_radixes(i, h_len),
                &line.base,
                &line.dir,
            ));
        }
        out
    }

    /// Univariate restrictions along the last-variable axis (prefix, X):
    /// plain partial evaluation, much cheaper than a general line.
    pub fn axis_restrictions_last(
        &self,
        field: &FieldCtx,
        h_len: usize,
        prefix: &[FieldElem],
    ) -> Vec<Vec<FieldElem>> {
        let radix = self.d + 1;
        let mut out = Vec::with_capacity(self.m + 1);
        out.push(crate::poly::flat_partial_eval_prefix(
            field,
            &self.q,
            &vec![radix; self.m],
            prefix,
        ));
        for (i, ti) in self.t.iter().enumerate() {
            out.push(crate::poly::flat_partial_eval_prefix(
                field,
                ti,
                &self.t_radixes(i, h_len),
                prefix,
            ));
        }
        out
    }

    /// Univariate restrictions along the first-variable axis (X, suffix).
    pub fn axis_restrictions_first(
        &self,
        field: &FieldCtx,
        h_len: usize,
        suffix: &[FieldElem],
    ) -> Vec<Vec<FieldElem>> {
        let radix = self.d + 1;
        let mut out = Vec::with_capacity(self.m + 1);
        out.push(crate::poly::flat_partial_eval_suffix(
            field,
            &self.q,
            &vec![radix; self.m],
            suffix,
        ));
        for (i, ti) in self.t.iter().enumerate() {
            out.push(crate::poly::flat_partial_eval_suffix(
                field,
                ti,
                &self.t_radixes(i, h_len),
                suffix,
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// The lazily realized bundle for one tau
// ---------------------------------------------------------------------------

/// One masked-sumcheck bundle, materialized on demand. Symbol reads are
/// exact: the bundle answers precisely what the written-out proof would
/// contain at the queried index.
pub struct TauBundle<'a> {
    pub system: &'a OSatSystem,
    pub tau: Vec<FieldElem>,
    pub inst: SumInstance,
    kernels: Vec<Vec<FieldElem>>,
    chat: MultiPoly,
    masks: DenseMasks,
    /// Partial sums of the mask polynomial: level i holds the flat
    /// coefficients of g_i^R over i variables (radix d+1).
    g_r: Vec<Vec<FieldElem>>,
    /// Cached univariate g_i(prefix, X) = g_i^F + g_i^R for the masked
    /// summand, keyed by (level, prefix).
    g_cache: HashMap<(usize, Vec<u32>), Vec<FieldElem>>,
    /// Prefetched mask-bundle symbols along verifier lines.
    p_cache: HashMap<Vec<u32>, Symbol>,
}

impl<'a> TauBundle<'a> {
    pub fn new(
        system: &'a OSatSystem,
        chat: MultiPoly,
        tau: Vec<FieldElem>,
        seed: Seed,
    ) -> Result<Self, OsatError> {
        let inst = system.sum_instance()?;
        let f = &system.params.field;
        let mut rng = rng_from(seed);
        let masks = DenseMasks::sample(f, inst.m, inst.d, system.params.h.len(), &mut rng);
        let r_flat = masks.mask_flat(f, &system.params.h);
        // Collapse trailing variables one at a time with H power sums.
        let psums = power_sums(f, &system.params.h, inst.d);
        let mut g_r: Vec<Vec<FieldElem>> = Vec::with_capacity(inst.m);
        let mut cur = r_flat;
        for _level in (1..inst.m).rev() {
            cur = crate::poly::flat_collapse_last(f, &cur, inst.d + 1, &psums[..inst.d + 1]);
            g_r.push(cur.clone());
        }
        g_r.reverse(); // g_r[i] now holds level i+1 coefficients over i+1 vars
        let kernels = system.selector_kernels(&tau);
        Ok(TauBundle {
            system,
            tau,
            inst,
            kernels,
            chat,
            masks,
            g_r,
            g_cache: HashMap::new(),
            p_cache: HashMap::new(),
        })
    }

    fn key(prefix: &[FieldElem]) -> Vec<u32> {
        prefix.iter().map(|e| e.0).collect()
    }

    /// Univariate g_level(prefix, X) of the masked summand F_tau + R.
    fn g_univariate(&mut self, level: usize, prefix: &[FieldElem]) -> Vec<FieldElem> {
        debug_assert_eq!(prefix.len(), level - 1);
        let cache_key = (level, Self::key(prefix));
        if let Some(u) = self.g_cache.get(&cache_key) {
            return u.clone();
        }
        let f = self.system.params.field.clone();
        let m = self.inst.m;
        let d = self.inst.d;
        // Mask part: partial evaluation of the dense level polynomial.
        let radixes = vec![d + 1; level];
        let mask_uni =
            flat_partial_eval_prefix(&f, &self.g_r[level - 1], &radixes, prefix);
        // Summand part: interpolate from d+1 nodes, each a grid sum over the
        // trailing H coordinates.
        let nodes: Vec<FieldElem> = (0..=d as u32).map(FieldElem).collect();
        let h = self.system.params.h.clone();
        let mut values = Vec::with_capacity(nodes.len());
        for &nu in &nodes {
            let mut acc = FieldElem::ZERO;
            let mut grid = vec![0usize; m - level];
            loop {
                let mut x = prefix.to_vec();
                x.push(nu);
                x.extend(grid.iter().map(|&g| h.elems[g]));
                let chat = &self.chat;
                let mut access = |pt: &[FieldElem]| Ok(chat.eval(pt).expect("arity"));
                acc = f.add(
                    acc,
                    self.system
                        .summand_eval(&self.kernels, &mut access, &x)
                        .expect("summand eval"),
                );
                if m == level || !crate::oracles::odometer_advance(&mut grid, h.len()) {
                    break;
                }
            }
            values.push(acc);
        }
        let f_uni = uni_interpolate(&f, &nodes, &values).expect("distinct nodes");
        let uni = uni_add(&f, &mask_uni, &f_uni);
        self.g_cache.insert(cache_key, uni.clone());
        uni
    }

    /// A bundled proof symbol at index (u_1..u_{m-2}, alpha), padded to
    /// width m+1 with two zeros.
    pub fn sigma_symbol(&mut self, idx: &[FieldElem]) -> Symbol {
        let m = self.inst.m;
        debug_assert_eq!(idx.len(), m - 1);
        let f = self.system.params.field.clone();
        let alpha = idx[m - 2];
        let mut sym = Vec::with_capacity(m + 1);
        for level in 1..m {
            let uni = self.g_univariate(level, &idx[..level - 1]);
            sym.push(uni_eval(&f, &uni, alpha));
        }
        sym.push(FieldElem::ZERO);
        sym.push(FieldElem::ZERO);
        sym
    }

    /// A mask-bundle symbol (Q(x), T_1(x), ..., T_m(x)).
    pub fn p_symbol(&mut self, x: &[FieldElem]) -> Symbol {
        if let Some(s) = self.p_cache.get(&Self::key(x)) {
            return s.clone();
        }
        let f = &self.system.params.field;
        self.masks.symbol_at(f, self.system.params.h.len(), x)
    }

    /// Precompute mask-bundle symbols along a line so the vector test's
    /// point reads hit a cache instead of full dense evaluations.
    pub fn prefetch_p_line(&mut self, line: &Line) {
        let f = self.system.params.field.clone();
        let restrictions =
            self.masks
                .line_restrictions(&f, self.system.params.h.len(), line);
        for t in f.elements() {
            let pt = line.point_at(&f, t);
            let sym: Symbol = restrictions
                .iter()
                .map(|uni| uni_eval(&f, uni, t))
                .collect();
            self.p_cache.insert(Self::key(&pt), sym);
        }
    }

    /// Prefetch the axis (prefix, X): the verifier's forward mask reads.
    pub fn prefetch_p_axis_last(&mut self, prefix: &[FieldElem]) {
        let f = self.system.params.field.clone();
        let restrictions =
            self.masks
                .axis_restrictions_last(&f, self.system.params.h.len(), prefix);
        for alpha in f.elements() {
            let mut pt = prefix.to_vec();
            pt.push(alpha);
            let sym: Symbol = restrictions
                .iter()
                .map(|uni| uni_eval(&f, uni, alpha))
                .collect();
            self.p_cache.insert(Self::key(&pt), sym);
        }
    }

    /// Prefetch the axis (X, suffix): the verifier's reversed mask reads.
    pub fn prefetch_p_axis_first(&mut self, suffix: &[FieldElem]) {
        let f = self.system.params.field.clone();
        let restrictions =
            self.masks
                .axis_restrictions_first(&f, self.system.params.h.len(), suffix);
        for alpha in f.elements() {
            let mut pt = vec![alpha];
            pt.extend_from_slice(suffix);
            let sym: Symbol = restrictions
                .iter()
                .map(|uni| uni_eval(&f, uni, alpha))
                .collect();
            self.p_cache.insert(Self::key(&pt), sym);
        }
    }

    /// Evaluate the unmasked summand F_tau at a point (three commitment
    /// reads through the supplied accessor).
    pub fn summand_at(
        &self,
        chat: &mut dyn FnMut(&[FieldElem]) -> Result<FieldElem, OsatError>,
        x: &[FieldElem],
    ) -> Result<FieldElem, OsatError> {
        self.system.summand_eval(&self.kernels, chat, x)
    }
}

// ---------------------------------------------------------------------------
// Top-level proof object
// ---------------------------------------------------------------------------

/// The proof: the dense commitment table plus the master seed that
/// deterministically derives every per-tau bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OSatProof {
    pub pi_c: Vec<FieldElem>,
    pub master_seed: Seed,
}

/// Prover-side realization: the commitment polynomial plus bundle access.
pub struct OSatProofOracles<'a> {
    pub system: &'a OSatSystem,
    pub chat: MultiPoly,
    pub proof: OSatProof,
}

pub fn tau_seed(master: &Seed, tau: &[FieldElem]) -> Seed {
    let bytes: Vec<u8> = tau.iter().flat_map(|e| e.0.to_le_bytes()).collect();
    child_seed_bytes(master, "tau-mask", &bytes)
}

impl<'a> OSatProofOracles<'a> {
    /// Materialize the bundle for one tau; deterministic in (master seed,
    /// tau).
    pub fn tau_bundle(&self, tau: &[FieldElem]) -> Result<TauBundle<'a>, OsatError> {
        TauBundle::new(
            self.system,
            self.chat.clone(),
            tau.to_vec(),
            tau_seed(&self.proof.master_seed, tau),
        )
    }

    /// The commitment table as an oracle.
    pub fn pi_c_oracle(&self) -> OracleHandle {
        let p = &self.system.params;
        OracleHandle::table_over_grid(
            "pi_c",
            p.m2 + p.k,
            p.field.order(),
            self.proof.pi_c.iter().map(|&v| vec![v]).collect(),
            Alphabet::Elems { width: 1 },
        )
    }
}

/// Honest prover: checks the witness, commits to it, and fixes the master
/// seed that derives each lazily materialized per-tau bundle.
pub fn osat_prove<'a>(
    system: &'a OSatSystem,
    a_table: &[bool],
    master_seed: Seed,
) -> Result<OSatProofOracles<'a>, OsatError> {
    if !super::osat_check_direct(&system.inst, a_table) {
        return Err(OsatError::WitnessInvalid);
    }
    let mut rng = rng_from(crate::seeds::child_seed(&master_seed, "commit", 0));
    let chat = super::commit_witness(&system.params, &system.gamma2, a_table, &mut rng);
    let p = &system.params;
    let q = p.field.order() as usize;
    let mut pi_c = Vec::with_capacity(q.pow((p.m2 + p.k) as u32));
    let mut grid = vec![0usize; p.m2 + p.k];
    loop {
        let pt: Vec<FieldElem> = grid.iter().map(|&g| FieldElem(g as u32)).collect();
        pi_c.push(chat.eval(&pt).expect("arity"));
        if !crate::oracles::odometer_advance(&mut grid, q) {
            break;
        }
    }
    Ok(OSatProofOracles {
        system,
        chat,
        proof: OSatProof { pi_c, master_seed },
    })
}

// ---------------------------------------------------------------------------
// Verifier
// ---------------------------------------------------------------------------

/// Structured coins for one verification run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OSatCoins {
    /// Seeds for the commitment low-degree-test repetitions.
    pub ldt_c_seeds: Vec<u64>,
    /// The selected tau points, one per sumcheck repetition.
    pub taus: Vec<Vec<FieldElem>>,
    /// Sumcheck coins per repetition.
    pub zksc: Vec<ZkscCoins>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OSatCheckFailure {
    CommitmentLowDegree { rep: usize },
    Sumcheck { rep: usize, failure: ZkCheckFailure },
}

#[derive(Debug)]
pub struct OSatOutcome {
    pub accept: bool,
    pub failures: Vec<OSatCheckFailure>,
    pub queries_ldt_c: u64,
    pub queries_sumcheck: u64,
}

pub struct OSatVerifier<'a> {
    pub system: &'a OSatSystem,
    /// Repetition counts balancing each subtest to at least 1/3 of the view.
    pub reps_ldt_c: usize,
    pub reps_sumcheck: usize,
}

impl<'a> OSatVerifier<'a> {
    /// Compute the balancing repetition counts: the smallest integers
    /// making each subtest at least a third of the queried symbols.
    pub fn new(system: &'a OSatSystem) -> Result<Self, OsatError> {
        let q = system.params.field.order();
        let q_ldt = q; // one full line per repetition
        // Sumcheck repetition with one line per inner test: the sigma
        // column (q), the summand axis and test line (each read makes one
        // virtual query plus three commitment reads), and the mask bundle
        // axis, reversed axis, and test line.
        let inner_ldt_reps = 1u64;
        let q_sc = q * (7 + 5 * inner_ldt_reps);
        let mut reps_ldt_c = 1u64;
        let reps_sumcheck = 1u64;
        // each needs >= 1/3 of the total: with two subtests this reduces to
        // 2 * a >= b on both sides.
        while 2 * reps_ldt_c * q_ldt < reps_sumcheck * q_sc {
            reps_ldt_c += 1;
        }
        Ok(OSatVerifier {
            system,
            reps_ldt_c: reps_ldt_c as usize,
            reps_sumcheck: reps_sumcheck as usize,
        })
    }

    pub fn coins_from_rng(&self, rng: &mut impl Rng) -> Result<OSatCoins, OsatError> {
        let f = &self.system.params.field;
        let inst = self.system.sum_instance()?;
        Ok(OSatCoins {
            ldt_c_seeds: (0..self.reps_ldt_c).map(|_| rng.gen()).collect(),
            taus: (0..self.reps_sumcheck)
                .map(|_| {
                    (0..self.system.params.big_m())
                        .map(|_| f.random(rng))
                        .collect()
                })
                .collect(),
            zksc: (0..self.reps_sumcheck)
                .map(|_| ZkscCoins {
                    c: (0..inst.m - 1).map(|_| f.random(rng)).collect(),
                    ldt_seed_f: rng.gen(),
                    ldt_seed_p: rng.gen(),
                })
                .collect(),
        })
    }

    /// Verify against the commitment oracle and a bundle accessor. The
    /// accessor returns the lazily materialized bundle for a tau; honest
    /// provers and forgers supply their own.
    pub fn verify(
        &self,
        pi_c: &mut OracleHandle,
        bundle_for_tau: &mut dyn FnMut(&[FieldElem]) -> Result<TauBundle<'a>, OsatError>,
        coins: &OSatCoins,
    ) -> Result<OSatOutcome, OsatError> {
        let f = self.system.params.field.clone();
        let p = &self.system.params;
        let mut failures = Vec::new();
        let mut queries_ldt_c = 0u64;

        // Commitment low-degree test with the recorded total degree.
        let mut params_c = LdtParams::new(p.m2 + p.k, p.c_total_degree(), 1);
        params_c.proximity = Ratio::new(1, 2);
        for (rep, &seed) in coins.ldt_c_seeds.iter().enumerate() {
            let before = pi_c.served;
            let out = ldt_scalar(&f, pi_c, &params_c, seed)?;
            queries_ldt_c += pi_c.served - before;
            if !out.accept {
                failures.push(OSatCheckFailure::CommitmentLowDegree { rep });
            }
        }

        // Sumcheck repetitions.
        let mut queries_sumcheck = 0u64;
        let inst = self.system.sum_instance()?;
        for rep in 0..self.reps_sumcheck {
            let tau = &coins.taus[rep];
            let zcoins = &coins.zksc[rep];
            let mut bundle = bundle_for_tau(tau)?;

            // Prefetch the two axis reads (cheap partial evaluations) and
            // the vector-test line so the mask reads hit a cache.
            let m = inst.m;
            bundle.prefetch_p_axis_last(&zcoins.c);
            let mut rev_c = zcoins.c.clone();
            rev_c.reverse();
            bundle.prefetch_p_axis_first(&rev_c);
            {
                let mut rng = crate::ldt::rep_rng(zcoins.ldt_seed_p, 0);
                let line = Line::sample(&f, m, &mut rng);
                bundle.prefetch_p_line(&line);
            }

            let bundle_cell = std::cell::RefCell::new(bundle);
            let pi_c_cell = std::cell::RefCell::new(&mut *pi_c);
            let counters = std::cell::RefCell::new((0u64, 0u64, 0u64)); // sigma, pp, f

            let verifier = ZkscVerifier::new(inst.clone()).allowing_small_field();
            let before = pi_c_cell.borrow().served;
            let out = verifier.verify_with(
                zcoins,
                &mut |pt: &[FieldElem]| {
                    counters.borrow_mut().2 += 1;
                    let mut chat_reads = |q: &[FieldElem]| -> Result<FieldElem, OsatError> {
                        let sym = pi_c_cell.borrow_mut().query(&OracleIndex::point(q))?;
                        Ok(sym[0])
                    };
                    let v = bundle_cell
                        .borrow()
                        .summand_at(&mut chat_reads, pt)
                        .map_err(|e| match e {
                            OsatError::Oracle(o) => o,
                            other => OracleError::Backend(other.to_string()),
                        })?;
                    Ok(vec![v])
                },
                &mut |pt: &[FieldElem]| {
                    counters.borrow_mut().0 += 1;
                    Ok(bundle_cell.borrow_mut().sigma_symbol(pt))
                },
                &mut |pt: &[FieldElem]| {
                    counters.borrow_mut().1 += 1;
                    Ok(bundle_cell.borrow_mut().p_symbol(pt))
                },
            )?;
            let pi_c_reads = pi_c_cell.borrow().served - before;
            let (n_sigma, n_pp, n_f) = *counters.borrow();
            queries_sumcheck += n_sigma + n_pp + n_f + pi_c_reads;
            for fail in out.failures {
                failures.push(OSatCheckFailure::Sumcheck { rep, failure: fail });
            }
        }

        Ok(OSatOutcome {
            accept: failures.is_empty(),
            failures,
            queries_ldt_c,
            queries_sumcheck,
        })
    }
}
