//! Multivariate polynomial arithmetic over a finite field: dense coefficient
//! representation indexed by mixed-radix exponent tuples, evaluation,
//! interpolation, Lagrange bases, vanishing polynomials, low-degree
//! extensions, variable reversal, partial sums over a subset grid, random
//! sampling, and exact nearest-polynomial fits для univariate tables.
//!
//! Degree bounds come in two kinds: per-variable caps and a single
//! total-degree cap. Both are dense under the hood; a total-degree bound
//! stores the cube `(d+1)^m` with out-of-bound monomials pinned to zero.

use crate::field::{FieldCtx, FieldElem, SubsetH};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("point arity {got} does not match polynomial arity {want}")]
    ArityMismatch { want: usize, got: usize },
    #[error("point is not in the interpolation grid")]
    PointNotInGrid,
    #[error("variable index {0} out of range")]
    BadIndex(usize),
    #[error("evaluation table is incomplete: expected {want} entries, got {got}")]
    IncompleteTable { want: usize, got: usize },
    #[error("no polynomial in the bounded space satisfies the constraints")]
    InconsistentConstraints,
    #[error("search space too large: {0}")]
    SearchSpaceTooLarge(String),
}

/// Individual-degree caps per variable, or a single total-degree cap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegreeBounds {
    PerVar(Vec<usize>),
    Total(usize),
}

impl DegreeBounds {
    /// Storage radix (cap + 1) for each of `m` variables.
    pub fn radixes(&self, m: usize) -> Vec<usize> {
        match self {
            DegreeBounds::PerVar(d) => {
                assert_eq!(d.len(), m);
                d.iter().map(|&di| di + 1).collect()
            }
            DegreeBounds::Total(d) => vec![d + 1; m],
        }
    }

    pub fn admits(&self, exps: &[usize]) -> bool {
        match self {
            DegreeBounds::PerVar(d) => exps.iter().zip(d).all(|(&e, &di)| e <= di),
            DegreeBounds::Total(d) => exps.iter().sum::<usize>() <= *d,
        }
    }

    /// Number of admissible monomials for `m` variables.
    pub fn dimension(&self, m: usize) -> usize {
        match self {
            DegreeBounds::PerVar(d) => {
                assert_eq!(d.len(), m);
                d.iter().map(|&di| di + 1).product()
            }
            DegreeBounds::Total(d) => {
                // Count of exponent tuples with sum <= d.
                let mut count = 0usize;
                for_each_tuple(&vec![d + 1; m], |_, e| {
                    if e.iter().sum::<usize>() <= *d {
                        count += 1;
                    }
                });
                count
            }
        }
    }
}

/// Visit every exponent tuple for the given radixes along with its flat index.
pub fn for_each_tuple(radixes: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = radixes.iter().product();
    if radixes.is_empty() {
        f(0, &[]);
        return;
    }
    let mut tuple = vec![0usize; radixes.len()];
    for idx in 0..total {
        f(idx, &tuple);
        for j in (0..radixes.len()).rev() {
            tuple[j] += 1;
            if tuple[j] < radixes[j] {
                break;
            }
            tuple[j] = 0;
        }
    }
}

/// Dense multivariate polynomial with explicit degree bounds.
#[derive(Debug, Clone)]
pub struct MultiPoly {
    pub field: FieldCtx,
    pub num_vars: usize,
    pub bounds: DegreeBounds,
    radixes: Vec<usize>,
    strides: Vec<usize>,
    pub coeffs: Vec<FieldElem>,
}

impl PartialEq for MultiPoly {
    fn eq(&self, other: &Self) -> bool {
        self.num_vars == other.num_vars
            && self.field.order() == other.field.order()
            && {
                // Compare as functions of exponent tuples: identical monomial
                // support and coefficients, regardless of storage radix.
                let mut equal = true;
                self.for_each_coeff(|e, c| {
                    if c != other.coeff_at(e) {
                        equal = false;
                    }
                });
                other.for_each_coeff(|e, c| {
                    if c != self.coeff_at(e) {
                        equal = false;
                    }
                });
                equal
            }
    }
}

fn strides_of(radixes: &[usize]) -> Vec<usize> {
    let m = radixes.len();
    let mut strides = vec![1usize; m];
    for j in (0..m.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * radixes[j + 1];
    }
    strides
}

impl MultiPoly {
    pub fn zero(field: &FieldCtx, num_vars: usize, bounds: DegreeBounds) -> Self {
        let radixes = bounds.radixes(num_vars);
        let strides = strides_of(&radixes);
        let size: usize = radixes.iter().product::<usize>().max(1);
        MultiPoly {
            field: field.clone(),
            num_vars,
            bounds,
            radixes,
            strides,
            coeffs: vec![FieldElem::ZERO; size],
        }
    }

    pub fn constant(field: &FieldCtx, num_vars: usize, c: FieldElem) -> Self {
        let mut p = MultiPoly::zero(field, num_vars, DegreeBounds::Total(0));
        p.coeffs[0] = c;
        p
    }

    /// Build from univariate coefficients (var 0), lowest degree first.
    pub fn from_univariate(field: &FieldCtx, coeffs: &[FieldElem]) -> Self {
        let deg = coeffs.len().saturating_sub(1);
        let mut p = MultiPoly::zero(field, 1, DegreeBounds::PerVar(vec![deg]));
        p.coeffs[..coeffs.len()].copy_from_slice(coeffs);
        p
    }

    pub fn radixes(&self) -> &[usize] {
        &self.radixes
    }

    fn flat_index(&self, exps: &[usize]) -> Option<usize> {
        let mut idx = 0usize;
        for (j, &e) in exps.iter().enumerate() {
            if e >= self.radixes[j] {
                return None;
            }
            idx += e * self.strides[j];
        }
        Some(idx)
    }

    pub fn coeff_at(&self, exps: &[usize]) -> FieldElem {
        match self.flat_index(exps) {
            Some(i) => self.coeffs[i],
            None => FieldElem::ZERO,
        }
    }

    pub fn set_coeff(&mut self, exps: &[usize], c: FieldElem) {
        assert!(
            self.bounds.admits(exps),
            "monomial {exps:?} out of bounds {:?}",
            self.bounds
        );
        let i = self.flat_index(exps).expect("admissible monomial");
        self.coeffs[i] = c;
    }

    pub fn add_to_coeff(&mut self, exps: &[usize], c: FieldElem) {
        let i = self.flat_index(exps).expect("admissible monomial");
        self.coeffs[i] = self.field.add(self.coeffs[i], c);
    }

    /// Visit every stored (exponent tuple, nonzero coefficient) pair.
    pub fn for_each_coeff(&self, mut f: impl FnMut(&[usize], FieldElem)) {
        for_each_tuple(&self.radixes, |idx, tuple| {
            let c = self.coeffs[idx];
            if c != FieldElem::ZERO {
                f(tuple, c);
            }
        });
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == FieldElem::ZERO)
    }

    /// Exact evaluation at a point.
    pub fn eval(&self, x: &[FieldElem]) -> Result<FieldElem, PolyError> {
        if x.len() != self.num_vars {
            return Err(PolyError::ArityMismatch {
                want: self.num_vars,
                got: x.len(),
            });
        }
        // Collapse variables innermost-first: repeatedly Horner-fold the last
        // axis. Single pass over the coefficient array.
        let f = &self.field;
        if self.num_vars == 0 {
            return Ok(self.coeffs[0]);
        }
        let mut buf = self.coeffs.clone();
        let mut len = buf.len();
        for j in (0..self.num_vars).rev() {
            let r = self.radixes[j];
            let xj = x[j];
            let blocks = len / r;
            for b in 0..blocks {
                let base = b * r;
                let mut acc = buf[base + r - 1];
                for t in (0..r - 1).rev() {
                    acc = f.add(f.mul(acc, xj), buf[base + t]);
                }
                buf[b] = acc;
            }
            len = blocks;
        }
        Ok(buf[0])
    }

    /// Largest exponent of each variable over the nonzero support.
    pub fn individual_degrees(&self) -> Vec<usize> {
        let mut degs = vec![0usize; self.num_vars];
        self.for_each_coeff(|e, _| {
            for (j, &ej) in e.iter().enumerate() {
                degs[j] = degs[j].max(ej);
            }
        });
        degs
    }

    pub fn total_degree(&self) -> usize {
        let mut deg = 0usize;
        self.for_each_coeff(|e, _| {
            deg = deg.max(e.iter().sum());
        });
        deg
    }

    /// Re-bound the polynomial; panics if existing support does not fit.
    pub fn with_bounds(&self, bounds: DegreeBounds) -> MultiPoly {
        let mut out = MultiPoly::zero(&self.field, self.num_vars, bounds);
        self.for_each_coeff(|e, c| out.set_coeff(e, c));
        out
    }

    pub fn add(&self, other: &MultiPoly) -> MultiPoly {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &MultiPoly) -> MultiPoly {
        self.combine(other, true)
    }

    fn combine(&self, other: &MultiPoly, negate: bool) -> MultiPoly {
        assert_eq!(self.num_vars, other.num_vars);
        let f = &self.field;
        let bounds = union_bounds(&self.bounds, &other.bounds, self.num_vars);
        let mut out = MultiPoly::zero(f, self.num_vars, bounds);
        self.for_each_coeff(|e, c| out.add_to_coeff(e, c));
        other.for_each_coeff(|e, c| {
            let c = if negate { f.neg(c) } else { c };
            out.add_to_coeff(e, c);
        });
        out
    }

    pub fn scale(&self, c: FieldElem) -> MultiPoly {
        let mut out = self.clone();
        for v in &mut out.coeffs {
            *v = self.field.mul(*v, c);
        }
        out
    }

    /// Dense product; result bounds are the per-variable degree sums.
    pub fn mul(&self, other: &MultiPoly) -> MultiPoly {
        assert_eq!(self.num_vars, other.num_vars);
        let f = &self.field;
        let da = self.individual_degrees();
        let db = other.individual_degrees();
        let bounds =
            DegreeBounds::PerVar(da.iter().zip(&db).map(|(&a, &b)| a + b).collect());
        let mut out = MultiPoly::zero(f, self.num_vars, bounds);
        let mut sum = vec![0usize; self.num_vars];
        self.for_each_coeff(|ea, ca| {
            other.for_each_coeff(|eb, cb| {
                for j in 0..self.num_vars {
                    sum[j] = ea[j] + eb[j];
                }
                out.add_to_coeff(&sum, f.mul(ca, cb));
            });
        });
        out
    }

    /// Multiply by a univariate polynomial in variable `var`.
    pub fn mul_univariate_in_var(&self, uni: &[FieldElem], var: usize) -> MultiPoly {
        let f = &self.field;
        let mut degs = self.individual_degrees();
        degs[var] += uni.len().saturating_sub(1);
        let mut out = MultiPoly::zero(f, self.num_vars, DegreeBounds::PerVar(degs));
        let mut shifted = vec![0usize; self.num_vars];
        self.for_each_coeff(|e, c| {
            shifted.copy_from_slice(e);
            for (k, &u) in uni.iter().enumerate() {
                if u == FieldElem::ZERO {
                    continue;
                }
                shifted[var] = e[var] + k;
                out.add_to_coeff(&shifted, f.mul(c, u));
            }
        });
        out
    }

    /// p(reverse(x)) for all x: exponent tuples are reversed, bounds likewise.
    pub fn reverse_vars(&self) -> MultiPoly {
        let bounds = match &self.bounds {
            DegreeBounds::PerVar(d) => {
                let mut r = d.clone();
                r.reverse();
                DegreeBounds::PerVar(r)
            }
            DegreeBounds::Total(d) => DegreeBounds::Total(*d),
        };
        let mut out = MultiPoly::zero(&self.field, self.num_vars, bounds);
        self.for_each_coeff(|e, c| {
            let mut rev = e.to_vec();
            rev.reverse();
            out.set_coeff(&rev, c);
        });
        out
    }

    /// Sum the trailing `m - i` variables over H, leaving an `i`-variate
    /// polynomial: `g_i(x_1..x_i) = sum_{b in H^(m-i)} p(x_1..x_i, b)`.
    pub fn partial_sum(&self, h: &SubsetH, i: usize) -> Result<MultiPoly, PolyError> {
        if i > self.num_vars {
            return Err(PolyError::BadIndex(i));
        }
        let which: Vec<usize> = (i..self.num_vars).collect();
        self.sum_over_grid(h, &which)
    }

    /// Symbolically sum the listed variables over H; the remaining variables
    /// keep their original order. Uses the power-sum factorization
    /// `sum_{b in H^t} prod_j b_j^(e_j) = prod_j (sum_{b in H} b^(e_j))`.
    pub fn sum_over_grid(
        &self,
        h: &SubsetH,
        which_vars: &[usize],
    ) -> Result<MultiPoly, PolyError> {
        let f = &self.field;
        for &v in which_vars {
            if v >= self.num_vars {
                return Err(PolyError::BadIndex(v));
            }
        }
        let mut summed = vec![false; self.num_vars];
        for &v in which_vars {
            summed[v] = true;
        }
        let keep: Vec<usize> = (0..self.num_vars).filter(|&j| !summed[j]).collect();

        let max_deg = self.radixes.iter().map(|r| r - 1).max().unwrap_or(0);
        let psums = power_sums(f, h, max_deg);

        let out_bounds = DegreeBounds::PerVar(keep.iter().map(|&j| self.radixes[j] - 1).collect());
        let mut out = MultiPoly::zero(f, keep.len(), out_bounds);
        let mut kept_exps = vec![0usize; keep.len()];
        self.for_each_coeff(|e, c| {
            let mut w = c;
            for &v in which_vars {
                w = f.mul(w, psums[e[v]]);
            }
            if w != FieldElem::ZERO {
                for (t, &j) in keep.iter().enumerate() {
                    kept_exps[t] = e[j];
                }
                out.add_to_coeff(&kept_exps, w);
            }
        });
        Ok(out)
    }

    /// Value of a zero-variate (fully summed) polynomial.
    pub fn as_constant(&self) -> FieldElem {
        assert_eq!(self.num_vars, 0);
        self.coeffs[0]
    }

    /// Substitute an affine line `x_j = base_j + t * dir_j` and return the
    /// univariate coefficients in `t`. One pass per variable.
    pub fn restrict_to_line(&self, base: &[FieldElem], dir: &[FieldElem]) -> Vec<FieldElem> {
        assert_eq!(base.len(), self.num_vars);
        assert_eq!(dir.len(), self.num_vars);
        let f = &self.field;
        if self.num_vars == 0 {
            return vec![self.coeffs[0]];
        }
        // Working buffer of blocks; each entry is a univariate poly in t.
        let mut buf: Vec<Vec<FieldElem>> = self.coeffs.iter().map(|&c| vec![c]).collect();
        let mut len = buf.len();
        for j in (0..self.num_vars).rev() {
            let r = self.radixes[j];
            let lin = [base[j], dir[j]]; // base + t*dir
            let blocks = len / r;
            for b in 0..blocks {
                let base_idx = b * r;
                // Horner in (base_j + t dir_j) over univariate-in-t coefficients.
                let mut acc: Vec<FieldElem> = buf[base_idx + r - 1].clone();
                for k in (0..r - 1).rev() {
                    acc = uni_mul(f, &acc, &lin);
                    acc = uni_add(f, &acc, &buf[base_idx + k]);
                }
                buf[b] = acc;
            }
            len = blocks;
        }
        let mut out = std::mem::take(&mut buf[0]);
        while out.len() > 1 && *out.last().unwrap() == FieldElem::ZERO {
            out.pop();
        }
        out
    }
}

fn union_bounds(a: &DegreeBounds, b: &DegreeBounds, m: usize) -> DegreeBounds {
    match (a, b) {
        (DegreeBounds::Total(da), DegreeBounds::Total(db)) => DegreeBounds::Total(*da.max(db)),
        _ => {
            let ra = a.radixes(m);
            let rb = b.radixes(m);
            DegreeBounds::PerVar(
                ra.iter()
                    .zip(&rb)
                    .map(|(&x, &y)| x.max(y) - 1)
                    .collect(),
            )
        }
    }
}

// ---------------------------------------------------------------------------
// Flat coefficient-array kernels for large dense polynomials
// ---------------------------------------------------------------------------
//
// The mask polynomials of the zero-knowledge sumcheck live in spaces with
// millions of coefficients; these routines work on plain arrays in mixed-
// radix layout (last variable fastest) to keep the per-instance prover and
// verifier costs linear in the coefficient count.

/// Evaluate a flat coefficient array at a point by nested Horner collapse.
pub fn flat_eval(
    f: &FieldCtx,
    coeffs: &[FieldElem],
    radixes: &[usize],
    x: &[FieldElem],
) -> FieldElem {
    debug_assert_eq!(radixes.len(), x.len());
    let mut buf = coeffs.to_vec();
    let mut len = buf.len();
    for j in (0..radixes.len()).rev() {
        let r = radixes[j];
        let xj = x[j];
        let blocks = len / r;
        for b in 0..blocks {
            let base = b * r;
            let mut acc = buf[base + r - 1];
            for t in (0..r - 1).rev() {
                acc = f.add(f.mul(acc, xj), buf[base + t]);
            }
            buf[b] = acc;
        }
        len = blocks;
    }
    buf[0]
}

/// Collapse the last variable by weighting its powers with `weights[k]`
/// (e.g. power sums over H to realize a partial sum).
pub fn flat_collapse_last(
    f: &FieldCtx,
    coeffs: &[FieldElem],
    radix_last: usize,
    weights: &[FieldElem],
) -> Vec<FieldElem> {
    let blocks = coeffs.len() / radix_last;
    let mut out = vec![FieldElem::ZERO; blocks];
    for (b, o) in out.iter_mut().enumerate() {
        let base = b * radix_last;
        let mut acc = FieldElem::ZERO;
        for k in 0..radix_last {
            acc = f.add(acc, f.mul(coeffs[base + k], weights[k]));
        }
        *o = acc;
    }
    out
}

/// Partially evaluate the first `prefix.len()` variables, returning the
/// univariate coefficients over the single remaining variable. Requires
/// `radixes.len() == prefix.len() + 1`.
pub fn flat_partial_eval_prefix(
    f: &FieldCtx,
    coeffs: &[FieldElem],
    radixes: &[usize],
    prefix: &[FieldElem],
) -> Vec<FieldElem> {
    debug_assert_eq!(radixes.len(), prefix.len() + 1);
    let mut buf = coeffs.to_vec();
    // Collapse variables from the front: Horner over blocks of the leading
    // radix, each block being a contiguous run of the remaining layout.
    for (j, &xj) in prefix.iter().enumerate() {
        let r = radixes[j];
        let tail: usize = radixes[j + 1..].iter().product();
        let mut out = vec![FieldElem::ZERO; tail];
        for (slot, o) in out.iter_mut().enumerate() {
            let mut acc = buf[(r - 1) * tail + slot];
            for t in (0..r - 1).rev() {
                acc = f.add(f.mul(acc, xj), buf[t * tail + slot]);
            }
            *o = acc;
        }
        buf = out;
    }
    buf
}

/// Partially evaluate the last `suffix.len()` variables, returning the
/// univariate coefficients over the single remaining (first) variable.
/// Requires `radixes.len() == suffix.len() + 1`.
pub fn flat_partial_eval_suffix(
    f: &FieldCtx,
    coeffs: &[FieldElem],
    radixes: &[usize],
    suffix: &[FieldElem],
) -> Vec<FieldElem> {
    debug_assert_eq!(radixes.len(), suffix.len() + 1);
    let mut buf = coeffs.to_vec();
    let mut len = buf.len();
    for (j, &xj) in suffix.iter().enumerate().rev() {
        let r = radixes[j + 1];
        let blocks = len / r;
        for b in 0..blocks {
            let base = b * r;
            let mut acc = buf[base + r - 1];
            for t in (0..r - 1).rev() {
                acc = f.add(f.mul(acc, xj), buf[base + t]);
            }
            buf[b] = acc;
        }
        len = blocks;
    }
    buf.truncate(radixes[0]);
    buf
}

/// In the uniform-radix layout, produce the coefficient array of
/// p(reverse(x)): digit-reversed indices.
pub fn flat_digit_reverse(coeffs: &[FieldElem], radix: usize, m: usize) -> Vec<FieldElem> {
    debug_assert_eq!(coeffs.len(), radix.pow(m as u32));
    let mut out = vec![FieldElem::ZERO; coeffs.len()];
    let mut digits = vec![0usize; m];
    let mut strides = vec![1usize; m];
    for j in (0..m.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * radix;
    }
    let mut rev_idx = 0usize;
    for (idx, &c) in coeffs.iter().enumerate() {
        out[rev_idx] = c;
        if idx + 1 == coeffs.len() {
            break;
        }
        // advance digits (last fastest) while mirroring into rev_idx
        for j in (0..m).rev() {
            let mirrored = m - 1 - j;
            digits[j] += 1;
            if digits[j] < radix {
                rev_idx += strides[mirrored];
                break;
            }
            digits[j] = 0;
            rev_idx -= (radix - 1) * strides[mirrored];
        }
    }
    out
}

/// Add `scale * src` into `dst` where `src` has per-variable radixes
/// `src_radixes` and `dst` the (pointwise >=) radixes `dst_radixes`, with an
/// additional exponent shift of `shift` in variable `var`.
pub fn flat_accumulate_shifted(
    f: &FieldCtx,
    dst: &mut [FieldElem],
    dst_radixes: &[usize],
    src: &[FieldElem],
    src_radixes: &[usize],
    var: usize,
    shift: usize,
    scale: FieldElem,
) {
    let m = src_radixes.len();
    let mut dst_strides = vec![1usize; m];
    for j in (0..m - 1).rev() {
        dst_strides[j] = dst_strides[j + 1] * dst_radixes[j + 1];
    }
    let mut digits = vec![0usize; m];
    let mut dst_idx = shift * dst_strides[var];
    for (src_idx, &c) in src.iter().enumerate() {
        if c != FieldElem::ZERO {
            dst[dst_idx] = f.add(dst[dst_idx], f.mul(scale, c));
        }
        if src_idx + 1 == src.len() {
            break;
        }
        for j in (0..m).rev() {
            digits[j] += 1;
            if digits[j] < src_radixes[j] {
                dst_idx += dst_strides[j];
                break;
            }
            digits[j] = 0;
            dst_idx -= (src_radixes[j] - 1) * dst_strides[j];
        }
    }
}

/// Restrict a flat polynomial to the affine line base + t*dir, returning
/// univariate coefficients in t. Linear passes with reused scratch buffers.
pub fn flat_restrict_line(
    f: &FieldCtx,
    coeffs: &[FieldElem],
    radixes: &[usize],
    base: &[FieldElem],
    dir: &[FieldElem],
) -> Vec<FieldElem> {
    let m = radixes.len();
    debug_assert_eq!(base.len(), m);
    debug_assert_eq!(dir.len(), m);
    // Entries become univariate polynomials in t; track the width per pass.
    let max_width: usize = 1 + radixes.iter().map(|r| r - 1).sum::<usize>();
    let mut width = 1usize;
    let mut buf: Vec<FieldElem> = coeffs.to_vec();
    let mut len = coeffs.len();
    let mut acc = vec![FieldElem::ZERO; max_width];
    let mut next = vec![FieldElem::ZERO; max_width];
    for j in (0..m).rev() {
        let r = radixes[j];
        let blocks = len / r;
        let out_width = width + r - 1;
        let mut out = vec![FieldElem::ZERO; blocks * out_width];
        for b in 0..blocks {
            // Horner in (base_j + t dir_j) over width-`width` t-polynomials.
            acc[..out_width].fill(FieldElem::ZERO);
            let top = &buf[(b * r + r - 1) * width..(b * r + r) * width];
            acc[..width].copy_from_slice(top);
            let mut acc_w = width;
            for k in (0..r - 1).rev() {
                // acc = acc * (base_j + t dir_j) + block[k]
                let new_w = (acc_w + 1).min(out_width);
                next[..new_w].fill(FieldElem::ZERO);
                for i in 0..acc_w {
                    let a = acc[i];
                    if a == FieldElem::ZERO {
                        continue;
                    }
                    next[i] = f.add(next[i], f.mul(a, base[j]));
                    if i + 1 < new_w {
                        next[i + 1] = f.add(next[i + 1], f.mul(a, dir[j]));
                    }
                }
                let row = &buf[(b * r + k) * width..(b * r + k + 1) * width];
                for (i, &c) in row.iter().enumerate() {
                    next[i] = f.add(next[i], c);
                }
                acc[..new_w].copy_from_slice(&next[..new_w]);
                acc_w = new_w;
            }
            out[b * out_width..b * out_width + acc_w].copy_from_slice(&acc[..acc_w]);
        }
        buf = out;
        width = out_width;
        len = blocks;
    }
    let mut out = buf;
    out.truncate(width);
    while out.len() > 1 && *out.last().unwrap() == FieldElem::ZERO {
        out.pop();
    }
    out
}

/// `sum_{b in H} b^k` for k = 0..=max_deg. The k = 0 term counts |H| in the
/// field's characteristic.
pub fn power_sums(f: &FieldCtx, h: &SubsetH, max_deg: usize) -> Vec<FieldElem> {
    let mut sums = vec![FieldElem::ZERO; max_deg + 1];
    for &b in &h.elems {
        let mut p = FieldElem::ONE;
        for s in sums.iter_mut() {
            *s = f.add(*s, p);
            p = f.mul(p, b);
        }
    }
    sums
}

// ---------------------------------------------------------------------------
// Univariate helpers (coefficient slices, lowest degree first)
// ---------------------------------------------------------------------------

pub fn uni_eval(f: &FieldCtx, coeffs: &[FieldElem], x: FieldElem) -> FieldElem {
    let mut acc = FieldElem::ZERO;
    for &c in coeffs.iter().rev() {
        acc = f.add(f.mul(acc, x), c);
    }
    acc
}

pub fn uni_add(f: &FieldCtx, a: &[FieldElem], b: &[FieldElem]) -> Vec<FieldElem> {
    let n = a.len().max(b.len());
    let mut out = vec![FieldElem::ZERO; n];
    for (i, o) in out.iter_mut().enumerate() {
        let x = a.get(i).copied().unwrap_or(FieldElem::ZERO);
        let y = b.get(i).copied().unwrap_or(FieldElem::ZERO);
        *o = f.add(x, y);
    }
    out
}

pub fn uni_mul(f: &FieldCtx, a: &[FieldElem], b: &[FieldElem]) -> Vec<FieldElem> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![FieldElem::ZERO; a.len() + b.len() - 1];
    for (i, &ca) in a.iter().enumerate() {
        if ca == FieldElem::ZERO {
            continue;
        }
        for (j, &cb) in b.iter().enumerate() {
            out[i + j] = f.add(out[i + j], f.mul(ca, cb));
        }
    }
    out
}

pub fn uni_scale(f: &FieldCtx, a: &[FieldElem], c: FieldElem) -> Vec<FieldElem> {
    a.iter().map(|&x| f.mul(x, c)).collect()
}

pub fn uni_degree(coeffs: &[FieldElem]) -> usize {
    coeffs
        .iter()
        .rposition(|&c| c != FieldElem::ZERO)
        .unwrap_or(0)
}

/// Unique interpolating polynomial of degree < n through n distinct nodes.
pub fn uni_interpolate(
    f: &FieldCtx,
    xs: &[FieldElem],
    ys: &[FieldElem],
) -> Result<Vec<FieldElem>, PolyError> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    let mut acc = vec![FieldElem::ZERO; n.max(1)];
    for i in 0..n {
        // Basis polynomial for node i.
        let mut basis = vec![FieldElem::ONE];
        let mut denom = FieldElem::ONE;
        for j in 0..n {
            if i == j {
                continue;
            }
            basis = uni_mul(f, &basis, &[f.neg(xs[j]), FieldElem::ONE]);
            denom = f.mul(denom, f.sub(xs[i], xs[j]));
        }
        let w = f
            .mul(ys[i], f.inv(denom).map_err(|_| PolyError::PointNotInGrid)?);
        let term = uni_scale(f, &basis, w);
        acc = uni_add(f, &acc, &term);
    }
    Ok(acc)
}

/// The univariate indicator of `a` within the node set `s`: 1 at `a`, 0 on
/// the rest of `s`, degree |s| - 1.
pub fn uni_lagrange_indicator(
    f: &FieldCtx,
    s: &[FieldElem],
    a: FieldElem,
) -> Result<Vec<FieldElem>, PolyError> {
    if !s.contains(&a) {
        return Err(PolyError::PointNotInGrid);
    }
    let mut basis = vec![FieldElem::ONE];
    let mut denom = FieldElem::ONE;
    for &b in s {
        if b == a {
            continue;
        }
        basis = uni_mul(f, &basis, &[f.neg(b), FieldElem::ONE]);
        denom = f.mul(denom, f.sub(a, b));
    }
    Ok(uni_scale(f, &basis, f.inv(denom).expect("distinct nodes")))
}

// ---------------------------------------------------------------------------
// Grid constructions
// ---------------------------------------------------------------------------

/// The minimal-degree indicator polynomial of grid point `a` in the product
/// set `S = S_1 x ... x S_m`: individual degree |S_j| - 1 in variable j,
/// equal to 1 at `a` and 0 on the rest of the grid.
pub fn lagrange_basis(
    f: &FieldCtx,
    s: &[Vec<FieldElem>],
    a: &[FieldElem],
) -> Result<MultiPoly, PolyError> {
    if s.len() != a.len() {
        return Err(PolyError::ArityMismatch {
            want: s.len(),
            got: a.len(),
        });
    }
    let m = s.len();
    let unis: Vec<Vec<FieldElem>> = s
        .iter()
        .zip(a)
        .map(|(sj, &aj)| uni_lagrange_indicator(f, sj, aj))
        .collect::<Result<_, _>>()?;
    let bounds = DegreeBounds::PerVar(s.iter().map(|sj| sj.len() - 1).collect());
    let mut out = MultiPoly::zero(f, m, bounds);
    let radixes: Vec<usize> = s.iter().map(|sj| sj.len()).collect();
    for_each_tuple(&radixes, |_, tuple| {
        let mut c = FieldElem::ONE;
        for (j, &e) in tuple.iter().enumerate() {
            c = f.mul(c, unis[j].get(e).copied().unwrap_or(FieldElem::ZERO));
        }
        if c != FieldElem::ZERO {
            out.set_coeff(tuple, c);
        }
    });
    Ok(out)
}

/// Z_H = prod_{a in H} (X - a), univariate, zero exactly on H.
pub fn vanishing_poly(f: &FieldCtx, h: &SubsetH) -> MultiPoly {
    MultiPoly::from_univariate(f, &vanishing_coeffs(f, h))
}

pub fn vanishing_coeffs(f: &FieldCtx, h: &SubsetH) -> Vec<FieldElem> {
    let mut acc = vec![FieldElem::ONE];
    for &a in &h.elems {
        acc = uni_mul(f, &acc, &[f.neg(a), FieldElem::ONE]);
    }
    acc
}

/// Unique extension of a table on H^m with individual degree <= |H|-1.
/// `values` is indexed in mixed-radix order over H (last variable fastest).
pub fn lde_from_table(
    f: &FieldCtx,
    h: &SubsetH,
    m: usize,
    values: &[FieldElem],
) -> Result<MultiPoly, PolyError> {
    let want = h.len().pow(m as u32);
    if values.len() != want {
        return Err(PolyError::IncompleteTable {
            want,
            got: values.len(),
        });
    }
    // Successive univariate interpolation along each axis, innermost first:
    // after processing axis j the buffer holds coefficients in that axis.
    let hn = h.len();
    let mut buf = values.to_vec();
    for _axis in (0..m).rev() {
        // Interpolate blocks of length hn along the current innermost axis,
        // then rotate the axis order so the next axis becomes innermost.
        let blocks = buf.len() / hn;
        let mut interp = vec![FieldElem::ZERO; buf.len()];
        for b in 0..blocks {
            let ys = &buf[b * hn..(b + 1) * hn];
            let coeffs = uni_interpolate(f, &h.elems, ys)?;
            for (k, &c) in coeffs.iter().enumerate() {
                interp[b * hn + k] = c;
            }
        }
        // Transpose so the processed axis moves to the front: entry
        // (block, k) -> (k, block).
        let mut rotated = vec![FieldElem::ZERO; buf.len()];
        for b in 0..blocks {
            for k in 0..hn {
                rotated[k * blocks + b] = interp[b * hn + k];
            }
        }
        buf = rotated;
    }
    let bounds = DegreeBounds::PerVar(vec![hn - 1; m]);
    let mut out = MultiPoly::zero(f, m, bounds.clone());
    // After m rotations the axis order is restored; buf is coefficient data
    // in mixed-radix order with radix hn per variable.
    let radixes = vec![hn; m];
    for_each_tuple(&radixes, |idx, tuple| {
        if buf[idx] != FieldElem::ZERO {
            out.set_coeff(tuple, buf[idx]);
        }
    });
    Ok(out)
}

/// Uniform sample over all polynomials respecting `bounds`: each admissible
/// coefficient independent and uniform.
pub fn poly_random(
    f: &FieldCtx,
    num_vars: usize,
    bounds: DegreeBounds,
    rng: &mut impl rand::Rng,
) -> MultiPoly {
    let mut p = MultiPoly::zero(f, num_vars, bounds.clone());
    match &bounds {
        DegreeBounds::PerVar(_) => {
            for c in &mut p.coeffs {
                *c = f.random(rng);
            }
        }
        DegreeBounds::Total(d) => {
            let radixes = p.radixes.clone();
            let mut draws: Vec<(usize, FieldElem)> = Vec::new();
            for_each_tuple(&radixes, |idx, tuple| {
                if tuple.iter().sum::<usize>() <= *d {
                    draws.push((idx, FieldElem::ZERO));
                }
            });
            for (idx, _) in draws {
                p.coeffs[idx] = f.random(rng);
            }
        }
    }
    p
}

// ---------------------------------------------------------------------------
// Exact univariate fit checking
// ---------------------------------------------------------------------------

/// Result of checking a full-field univariate table against degree d.
#[derive(Debug, Clone)]
pub struct FitCheck {
    pub is_degree_le_d: bool,
    /// A nearest degree-<=d polynomial (coefficients, length d+1); ties are
    /// broken by the lexicographically smallest coefficient vector.
    pub nearest: Vec<FieldElem>,
    /// Exact relative Hamming distance of the table to `nearest`.
    pub distance: Ratio<u64>,
}

/// Fast membership test only: does the table agree with some polynomial of
/// degree <= d? Interpolates through all |F| points.
pub fn uni_is_low_degree(f: &FieldCtx, values: &[FieldElem], d: usize) -> bool {
    debug_assert_eq!(values.len() as u64, f.order());
    let xs: Vec<FieldElem> = f.elements().collect();
    let coeffs = uni_interpolate(f, &xs, values).expect("distinct nodes");
    uni_degree(&coeffs) <= d
}

/// Exact membership decision plus nearest polynomial and distance.
///
/// The nearest polynomial is found by interpolating every (d+1)-subset of
/// positions: any optimal polynomial agrees with the table on at least d+1
/// points, so it arises from one of the subsets.
pub fn univariate_fit_check(f: &FieldCtx, values: &[FieldElem], d: usize) -> FitCheck {
    let n = values.len();
    debug_assert_eq!(n as u64, f.order());
    assert!(d < n, "degree cap must be below the field order");
    let xs: Vec<FieldElem> = f.elements().collect();

    // Exact-member fast path.
    let full = uni_interpolate(f, &xs, values).expect("distinct nodes");
    if uni_degree(&full) <= d {
        let mut nearest = full;
        nearest.resize(d + 1, FieldElem::ZERO);
        return FitCheck {
            is_degree_le_d: true,
            nearest,
            distance: Ratio::new(0, n as u64),
        };
    }

    let mut best_dist = n; // number of disagreements
    let mut best: Vec<Vec<FieldElem>> = Vec::new();
    let mut subset: Vec<usize> = (0..=d).collect();
    loop {
        let sx: Vec<FieldElem> = subset.iter().map(|&i| xs[i]).collect();
        let sy: Vec<FieldElem> = subset.iter().map(|&i| values[i]).collect();
        let mut cand = uni_interpolate(f, &sx, &sy).expect("distinct nodes");
        cand.resize(d + 1, FieldElem::ZERO);
        let dist = xs
            .iter()
            .zip(values)
            .filter(|&(&x, &y)| uni_eval(f, &cand, x) != y)
            .count();
        use std::cmp::Ordering;
        match dist.cmp(&best_dist) {
            Ordering::Less => {
                best_dist = dist;
                best = vec![cand];
            }
            Ordering::Equal => {
                if !best.contains(&cand) {
                    best.push(cand);
                }
            }
            Ordering::Greater => {}
        }
        // Next (d+1)-combination of 0..n.
        let k = subset.len();
        let mut i = k;
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if subset[i] != i + n - k {
                subset[i] += 1;
                for j in i + 1..k {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
        if i == 0 && subset[0] == n - k {
            break;
        }
    }
    best.sort_by(|a, b| {
        a.iter()
            .map(|c| c.0)
            .collect::<Vec<_>>()
            .cmp(&b.iter().map(|c| c.0).collect::<Vec<_>>())
    });
    FitCheck {
        is_degree_le_d: false,
        nearest: best.into_iter().next().expect("at least one candidate"),
        distance: Ratio::new(best_dist as u64, n as u64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{field_create, FieldSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn gf(p: u64) -> FieldCtx {
        field_create(&FieldSpec::prime(p)).unwrap()
    }

    fn fe(v: u64) -> FieldElem {
        FieldElem(v as u32)
    }

    /// X1*X2 + X1 over the given field.
    fn x1x2_plus_x1(f: &FieldCtx) -> MultiPoly {
        let mut p = MultiPoly::zero(f, 2, DegreeBounds::PerVar(vec![1, 1]));
        p.set_coeff(&[1, 1], FieldElem::ONE);
        p.set_coeff(&[1, 0], FieldElem::ONE);
        p
    }

    #[test]
    fn eval_direct_substitution() {
        let f = gf(17);
        let p = x1x2_plus_x1(&f);
        assert_eq!(p.eval(&[fe(1), fe(1)]).unwrap(), fe(2));
        let z = MultiPoly::zero(&f, 3, DegreeBounds::Total(2));
        assert_eq!(z.eval(&[fe(5), fe(2), fe(9)]).unwrap(), FieldElem::ZERO);
        assert!(matches!(
            p.eval(&[fe(1)]),
            Err(PolyError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn lagrange_linear_indicator() {
        let f = gf(5);
        // S = {0,1}, a=1 -> X
        let p = lagrange_basis(&f, &[vec![fe(0), fe(1)]], &[fe(1)]).unwrap();
        assert_eq!(p.eval(&[fe(0)]).unwrap(), fe(0));
        assert_eq!(p.eval(&[fe(1)]).unwrap(), fe(1));
        assert_eq!(p.coeff_at(&[1]), FieldElem::ONE);
        assert_eq!(p.coeff_at(&[0]), FieldElem::ZERO);
    }

    #[test]
    fn lagrange_product_indicator() {
        let f = gf(5);
        let s = vec![vec![fe(0), fe(1)], vec![fe(0), fe(1)]];
        let p = lagrange_basis(&f, &s, &[fe(1), fe(1)]).unwrap();
        // X1*X2
        assert_eq!(p.coeff_at(&[1, 1]), FieldElem::ONE);
        assert_eq!(p.total_degree(), 2);
    }

    #[test]
    fn lagrange_vandermonde_three_nodes() {
        // S = {0,1,2} in GF(7), a = 0: solving the 3x3 Vandermonde system
        // gives p = 1 + 2X + 4X^2 (p(0)=1, p(1)=0, p(2)=0).
        let f = gf(7);
        let p = lagrange_basis(&f, &[vec![fe(0), fe(1), fe(2)]], &[fe(0)]).unwrap();
        assert_eq!(p.eval(&[fe(0)]).unwrap(), fe(1));
        assert_eq!(p.eval(&[fe(1)]).unwrap(), fe(0));
        assert_eq!(p.eval(&[fe(2)]).unwrap(), fe(0));
        assert_eq!(p.individual_degrees(), vec![2]);
        assert_eq!(p.coeff_at(&[0]), fe(1));
        assert_eq!(p.coeff_at(&[1]), fe(2));
        assert_eq!(p.coeff_at(&[2]), fe(4));
    }

    #[test]
    fn lagrange_indicator_property_exhaustive() {
        // Every point of a 3-variable grid of size <= 4^3.
        let f = gf(13);
        let s = vec![
            vec![fe(0), fe(1), fe(2), fe(3)],
            vec![fe(5), fe(7)],
            vec![fe(1), fe(2), fe(4)],
        ];
        let pts: Vec<Vec<FieldElem>> = {
            let mut out = vec![];
            for &a in &s[0] {
                for &b in &s[1] {
                    for &c in &s[2] {
                        out.push(vec![a, b, c]);
                    }
                }
            }
            out
        };
        for a in &pts {
            let p = lagrange_basis(&f, &s, a).unwrap();
            for b in &pts {
                let want = if a == b { FieldElem::ONE } else { FieldElem::ZERO };
                assert_eq!(p.eval(b).unwrap(), want);
            }
        }
    }

    #[test]
    fn lagrange_point_not_in_grid() {
        let f = gf(5);
        assert!(matches!(
            lagrange_basis(&f, &[vec![fe(0), fe(1)]], &[fe(3)]),
            Err(PolyError::PointNotInGrid)
        ));
    }

    #[test]
    fn vanishing_poly_values() {
        let f = gf(7);
        let h = SubsetH::subset(vec![fe(0), fe(1)]);
        let z = vanishing_poly(&f, &h);
        // X^2 - X at 3 -> 9 - 3 = 6
        assert_eq!(z.eval(&[fe(3)]).unwrap(), fe(6));
        let h3 = SubsetH::subset(vec![fe(0), fe(1), fe(2)]);
        let z3 = vanishing_poly(&f, &h3);
        assert_eq!(z3.eval(&[fe(3)]).unwrap(), fe(6)); // 3*2*1
        for &a in &h3.elems {
            assert_eq!(z3.eval(&[a]).unwrap(), FieldElem::ZERO);
        }
    }

    #[test]
    fn partial_sum_symbolic() {
        let f = gf(17);
        let h = SubsetH::subset(vec![fe(0), fe(1)]);
        let p = x1x2_plus_x1(&f);
        // g_1(X) = F(X,0) + F(X,1) = X + 2X = 3X
        let g1 = p.partial_sum(&h, 1).unwrap();
        assert_eq!(g1.num_vars, 1);
        assert_eq!(g1.coeff_at(&[1]), fe(3));
        assert_eq!(g1.coeff_at(&[0]), fe(0));

        // constant c sums to c * |H|^(m-i)
        let c = MultiPoly::constant(&f, 2, fe(5));
        let g = c.partial_sum(&h, 1).unwrap();
        assert_eq!(g.eval(&[fe(9)]).unwrap(), fe(10));

        // antisymmetric X1 - X2 sums to zero over H^2
        let mut anti = MultiPoly::zero(&f, 2, DegreeBounds::PerVar(vec![1, 1]));
        anti.set_coeff(&[1, 0], FieldElem::ONE);
        anti.set_coeff(&[0, 1], f.neg(FieldElem::ONE));
        let total = anti.partial_sum(&h, 0).unwrap();
        assert_eq!(total.as_constant(), FieldElem::ZERO);
    }

    #[test]
    fn partial_sum_bad_index() {
        let f = gf(5);
        let p = MultiPoly::constant(&f, 2, fe(1));
        let h = SubsetH::subset(vec![fe(0)]);
        assert!(matches!(p.partial_sum(&h, 3), Err(PolyError::BadIndex(3))));
    }

    #[test]
    fn sum_over_grid_matches_brute_force() {
        let f = gf(7);
        let h = SubsetH::subset(vec![fe(0), fe(1), fe(3)]);
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for m in 1..=3usize {
            for _ in 0..34 {
                let p = poly_random(&f, m, DegreeBounds::PerVar(vec![2; m]), &mut rng);
                // sum over the last variable, symbolically vs pointwise
                let which = [m - 1];
                let symbolic = p.sum_over_grid(&h, &which).unwrap();
                // spot-check at random points
                for _ in 0..5 {
                    let x: Vec<FieldElem> = (0..m - 1).map(|_| f.random(&mut rng)).collect();
                    let mut brute = FieldElem::ZERO;
                    for &b in &h.elems {
                        let mut full = x.clone();
                        full.push(b);
                        brute = f.add(brute, p.eval(&full).unwrap());
                    }
                    assert_eq!(symbolic.eval(&x).unwrap(), brute);
                }
            }
        }
    }

    #[test]
    fn sum_over_grid_example() {
        let f = gf(17);
        let h = SubsetH::subset(vec![fe(0), fe(1)]);
        // p = X1 + X2, sum over var 2 -> 2*X1 + 1
        let mut p = MultiPoly::zero(&f, 2, DegreeBounds::PerVar(vec![1, 1]));
        p.set_coeff(&[1, 0], FieldElem::ONE);
        p.set_coeff(&[0, 1], FieldElem::ONE);
        let s = p.sum_over_grid(&h, &[1]).unwrap();
        assert_eq!(s.coeff_at(&[1]), fe(2));
        assert_eq!(s.coeff_at(&[0]), fe(1));
    }

    #[test]
    fn vanishing_factor_kills_grid_sum() {
        let f = gf(7);
        let h = SubsetH::subset(vec![fe(0), fe(1), fe(2)]);
        let z = vanishing_poly(&f, &h); // univariate in X1
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let anything = poly_random(&f, 2, DegreeBounds::PerVar(vec![2, 2]), &mut rng);
        // Z_H(X1) * anything, summed over the full grid H^2, is zero.
        let zended = anything.mul_univariate_in_var(
            &[z.coeff_at(&[0]), z.coeff_at(&[1]), z.coeff_at(&[2]), z.coeff_at(&[3])],
            0,
        );
        let total = zended.sum_over_grid(&h, &[0, 1]).unwrap();
        assert_eq!(total.as_constant(), FieldElem::ZERO);
    }

    #[test]
    fn lde_multilinear_identities() {
        let f = gf(5);
        let h = SubsetH::subset(vec![fe(0), fe(1)]);
        // m=1: [0,1] -> X
        let p = lde_from_table(&f, &h, 1, &[fe(0), fe(1)]).unwrap();
        assert_eq!(p.coeff_at(&[1]), FieldElem::ONE);
        assert_eq!(p.coeff_at(&[0]), FieldElem::ZERO);
        // m=2 AND table -> X1*X2 (order: (0,0),(0,1),(1,0),(1,1))
        let and = lde_from_table(&f, &h, 2, &[fe(0), fe(0), fe(0), fe(1)]).unwrap();
        assert_eq!(and.coeff_at(&[1, 1]), FieldElem::ONE);
        assert_eq!(and.total_degree(), 2);
    }

    #[test]
    fn lde_degree_two_indicator() {
        let f = gf(7);
        let h = SubsetH::subset(vec![fe(0), fe(1), fe(2)]);
        let p = lde_from_table(&f, &h, 1, &[fe(1), fe(0), fe(0)]).unwrap();
        assert_eq!(p.eval(&[fe(0)]).unwrap(), fe(1));
        assert_eq!(p.eval(&[fe(1)]).unwrap(), fe(0));
        assert_eq!(p.individual_degrees(), vec![2]);
    }

    #[test]
    fn lde_agrees_on_grid_and_respects_degree() {
        let f = gf(7);
        let h = SubsetH::subset(vec![fe(0), fe(2), fe(5)]);
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for m in 1..=3usize {
            let n = h.len().pow(m as u32);
            let values: Vec<FieldElem> = (0..n).map(|_| f.random(&mut rng)).collect();
            let p = lde_from_table(&f, &h, m, &values).unwrap();
            assert!(p
                .individual_degrees()
                .iter()
                .all(|&d| d <= h.len() - 1));
            let radixes = vec![h.len(); m];
            for_each_tuple(&radixes, |idx, tuple| {
                let pt: Vec<FieldElem> = tuple.iter().map(|&t| h.elems[t]).collect();
                assert_eq!(p.eval(&pt).unwrap(), values[idx]);
            });
        }
    }

    #[test]
    fn lde_incomplete_table() {
        let f = gf(5);
        let h = SubsetH::subset(vec![fe(0), fe(1)]);
        assert!(matches!(
            lde_from_table(&f, &h, 2, &[fe(0)]),
            Err(PolyError::IncompleteTable { want: 4, got: 1 })
        ));
    }

    #[test]
    fn reverse_vars_involution_and_examples() {
        let f = gf(17);
        // X1 over m=2 -> X2
        let mut p = MultiPoly::zero(&f, 2, DegreeBounds::PerVar(vec![1, 0]));
        p.set_coeff(&[1, 0], FieldElem::ONE);
        let r = p.reverse_vars();
        assert_eq!(r.coeff_at(&[0, 1]), FieldElem::ONE);
        // symmetric polynomial is fixed
        let sym = x1x2_plus_x1(&f).add(&x1x2_plus_x1(&f).reverse_vars());
        assert_eq!(sym.reverse_vars(), sym);
        // involution on random polynomials
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..100 {
            let q = poly_random(&f, 3, DegreeBounds::PerVar(vec![2, 1, 3]), &mut rng);
            assert_eq!(q.reverse_vars().reverse_vars(), q);
            // reversal evaluates at the reversed point
            let x: Vec<FieldElem> = (0..3).map(|_| f.random(&mut rng)).collect();
            let mut rx = x.clone();
            rx.reverse();
            assert_eq!(q.reverse_vars().eval(&x).unwrap(), q.eval(&rx).unwrap());
        }
    }

    #[test]
    fn random_total_degree_zero_is_constant() {
        let f = gf(3);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..50 {
            let p = poly_random(&f, 1, DegreeBounds::Total(0), &mut rng);
            assert_eq!(p.total_degree(), 0);
        }
    }

    #[test]
    fn random_respects_own_bounds() {
        let f = gf(5);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let d = (f.order() - 1) as usize;
        for _ in 0..20 {
            let p = poly_random(&f, 1, DegreeBounds::PerVar(vec![d]), &mut rng);
            let values: Vec<FieldElem> = f
                .elements()
                .map(|x| p.eval(&[x]).unwrap())
                .collect();
            assert!(uni_is_low_degree(&f, &values, d));
        }
    }

    #[test]
    fn random_uniform_chi_square() {
        // per_var=(1) over GF(3): 9 equally likely polynomials.
        let f = gf(3);
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let n = 100_000usize;
        let mut counts = [0usize; 9];
        for _ in 0..n {
            let p = poly_random(&f, 1, DegreeBounds::PerVar(vec![1]), &mut rng);
            let key = (p.coeff_at(&[0]).0 * 3 + p.coeff_at(&[1]).0) as usize;
            counts[key] += 1;
        }
        let expected = n as f64 / 9.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // 8 degrees of freedom; chi2 above 26.12 has p < 0.001.
        assert!(chi2 < 26.12, "chi2 = {chi2}");
    }

    #[test]
    fn fit_check_members_and_constants() {
        let f = gf(17);
        // table of 3X, d=3 -> member
        let values: Vec<FieldElem> = f.elements().map(|x| f.mul(fe(3), x)).collect();
        let fit = univariate_fit_check(&f, &values, 3);
        assert!(fit.is_degree_le_d);
        assert_eq!(fit.distance, Ratio::new(0, 17));
        // constant table, d=0 -> member
        let f5 = gf(5);
        let cvals = vec![fe(2); 5];
        assert!(univariate_fit_check(&f5, &cvals, 0).is_degree_le_d);
    }

    #[test]
    fn fit_check_square_vs_linear() {
        // X^2 over GF(5) vs degree 1: distance computed by enumerating all
        // 25 linear polynomials as an independent oracle.
        let f = gf(5);
        let values: Vec<FieldElem> = f.elements().map(|x| f.mul(x, x)).collect();
        let mut oracle_best = usize::MAX;
        for a in 0..5u32 {
            for b in 0..5u32 {
                let dist = f
                    .elements()
                    .filter(|&x| {
                        f.add(FieldElem(a), f.mul(FieldElem(b), x)) != f.mul(x, x)
                    })
                    .count();
                oracle_best = oracle_best.min(dist);
            }
        }
        let fit = univariate_fit_check(&f, &values, 1);
        assert!(!fit.is_degree_le_d);
        assert!(fit.distance > Ratio::new(0, 5));
        assert_eq!(fit.distance, Ratio::new(oracle_best as u64, 5));
        // the reported nearest polynomial achieves its distance
        let achieved = f
            .elements()
            .filter(|&x| uni_eval(&f, &fit.nearest, x) != f.mul(x, x))
            .count();
        assert_eq!(fit.distance, Ratio::new(achieved as u64, 5));
    }

    #[test]
    fn fit_check_tie_break_is_deterministic() {
        let f = gf(5);
        let values: Vec<FieldElem> = f.elements().map(|x| f.mul(x, x)).collect();
        let a = univariate_fit_check(&f, &values, 1);
        let b = univariate_fit_check(&f, &values, 1);
        assert_eq!(a.nearest, b.nearest);
    }

    #[test]
    fn restrict_to_line_matches_pointwise() {
        let f = gf(17);
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        for m in 1..=3usize {
            for _ in 0..20 {
                let p = poly_random(&f, m, DegreeBounds::PerVar(vec![2; m]), &mut rng);
                let base: Vec<FieldElem> = (0..m).map(|_| f.random(&mut rng)).collect();
                let dir: Vec<FieldElem> = (0..m).map(|_| f.random(&mut rng)).collect();
                let restricted = p.restrict_to_line(&base, &dir);
                for t in f.elements() {
                    let pt: Vec<FieldElem> = base
                        .iter()
                        .zip(&dir)
                        .map(|(&b, &d)| f.add(b, f.mul(t, d)))
                        .collect();
                    assert_eq!(
                        uni_eval(&f, &restricted, t),
                        p.eval(&pt).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn mul_and_line_degree() {
        let f = gf(17);
        let p = x1x2_plus_x1(&f);
        let q = p.mul(&p);
        assert_eq!(q.individual_degrees(), vec![2, 2]);
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let x: Vec<FieldElem> = (0..2).map(|_| f.random(&mut rng)).collect();
        let pe = p.eval(&x).unwrap();
        assert_eq!(q.eval(&x).unwrap(), f.mul(pe, pe));
    }
}
