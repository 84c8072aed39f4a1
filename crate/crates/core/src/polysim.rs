//! Lazy conditional sampling of a uniformly random degree-bounded polynomial:
//! answer evaluation queries one at a time so that the joint distribution of
//! the answers is exactly that of sampling the polynomial up front.
//!
//! The sampler maintains the affine solution set of all constraints recorded
//! so far as an echelon system over the coefficient space. A new query is
//! either forced (its evaluation functional lies in the span of the recorded
//! constraints) or exactly uniform over the field; both cases fall out of the
//! elimination, no approximation anywhere. Both total-degree and
//! individual-degree coefficient spaces are supported.

use crate::field::{FieldCtx, FieldElem};
use crate::poly::{for_each_tuple, DegreeBounds, MultiPoly, PolyError};

/// A recorded point constraint: the polynomial takes `value` at `point`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointConstraint {
    pub point: Vec<FieldElem>,
    pub value: FieldElem,
}

/// What the affine solution set implies about a single query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepLaw {
    /// The value is determined by the recorded constraints.
    Forced(FieldElem),
    /// The value is exactly uniform over the field.
    Uniform,
}

/// Incremental sampler for one polynomial. Session-confined: a single logical
/// owner issues queries; cloning forks the constraint state.
#[derive(Debug, Clone)]
pub struct PolySim {
    field: FieldCtx,
    num_vars: usize,
    monomials: Vec<Vec<usize>>,
    rows: Vec<Vec<FieldElem>>,
    pivots: Vec<usize>,
    values: Vec<FieldElem>,
    bounds: DegreeBounds,
}

impl PolySim {
    pub fn new(field: &FieldCtx, num_vars: usize, bounds: DegreeBounds) -> Self {
        let radixes = bounds.radixes(num_vars);
        let mut monomials = Vec::new();
        for_each_tuple(&radixes, |_, e| {
            if bounds.admits(e) {
                monomials.push(e.to_vec());
            }
        });
        PolySim {
            field: field.clone(),
            num_vars,
            monomials,
            rows: Vec::new(),
            pivots: Vec::new(),
            values: Vec::new(),
            bounds,
        }
    }

    pub fn dimension(&self) -> usize {
        self.monomials.len()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn bounds(&self) -> &DegreeBounds {
        &self.bounds
    }

    fn eval_row(&self, point: &[FieldElem]) -> Vec<FieldElem> {
        let f = &self.field;
        self.monomials
            .iter()
            .map(|e| {
                let mut c = FieldElem::ONE;
                for (j, &ej) in e.iter().enumerate() {
                    c = f.mul(c, f.pow(point[j], ej as u64));
                }
                c
            })
            .collect()
    }

    /// Reduce `row` against the echelon state; returns the accumulated value
    /// of the eliminated combination and the pivot of the residual (None if
    /// the row reduced to zero).
    fn reduce(&self, row: &mut [FieldElem]) -> (FieldElem, Option<usize>) {
        let f = &self.field;
        let mut acc = FieldElem::ZERO;
        for i in 0..self.rows.len() {
            let c = row[self.pivots[i]];
            if c == FieldElem::ZERO {
                continue;
            }
            for (x, &y) in row.iter_mut().zip(&self.rows[i]) {
                *x = f.sub(*x, f.mul(c, y));
            }
            acc = f.add(acc, f.mul(c, self.values[i]));
        }
        let pivot = row.iter().position(|&c| c != FieldElem::ZERO);
        (acc, pivot)
    }

    /// The law of the query value at `point` under the current constraints.
    pub fn step_law(&self, point: &[FieldElem]) -> Result<StepLaw, PolyError> {
        if point.len() != self.num_vars {
            return Err(PolyError::ArityMismatch {
                want: self.num_vars,
                got: point.len(),
            });
        }
        let mut row = self.eval_row(point);
        let (acc, pivot) = self.reduce(&mut row);
        Ok(match pivot {
            None => StepLaw::Forced(acc),
            Some(_) => StepLaw::Uniform,
        })
    }

    /// Record that the polynomial takes `value` at `point`.
    pub fn constrain(&mut self, point: &[FieldElem], value: FieldElem) -> Result<(), PolyError> {
        if point.len() != self.num_vars {
            return Err(PolyError::ArityMismatch {
                want: self.num_vars,
                got: point.len(),
            });
        }
        let f = self.field.clone();
        let mut row = self.eval_row(point);
        let (acc, pivot) = self.reduce(&mut row);
        match pivot {
            None => {
                if acc != value {
                    Err(PolyError::InconsistentConstraints)
                } else {
                    Ok(())
                }
            }
            Some(p) => {
                let inv = f.inv(row[p]).expect("pivot nonzero");
                for x in row.iter_mut() {
                    *x = f.mul(*x, inv);
                }
                let rhs = f.mul(f.sub(value, acc), inv);
                self.rows.push(row);
                self.pivots.push(p);
                self.values.push(rhs);
                Ok(())
            }
        }
    }

    /// Record a linear constraint `sum_i coeff_i * Q(point_i) = value`.
    pub fn constrain_combination(
        &mut self,
        terms: &[(Vec<FieldElem>, FieldElem)],
        value: FieldElem,
    ) -> Result<(), PolyError> {
        let f = self.field.clone();
        let mut row = vec![FieldElem::ZERO; self.monomials.len()];
        for (point, coeff) in terms {
            if point.len() != self.num_vars {
                return Err(PolyError::ArityMismatch {
                    want: self.num_vars,
                    got: point.len(),
                });
            }
            let er = self.eval_row(point);
            for (x, &y) in row.iter_mut().zip(&er) {
                *x = f.add(*x, f.mul(*coeff, y));
            }
        }
        let (acc, pivot) = self.reduce(&mut row);
        match pivot {
            None => {
                if acc != value {
                    Err(PolyError::InconsistentConstraints)
                } else {
                    Ok(())
                }
            }
            Some(p) => {
                let inv = f.inv(row[p]).expect("pivot nonzero");
                for x in row.iter_mut() {
                    *x = f.mul(*x, inv);
                }
                let rhs = f.mul(f.sub(value, acc), inv);
                self.rows.push(row);
                self.pivots.push(p);
                self.values.push(rhs);
                Ok(())
            }
        }
    }

    /// Answer a query: forced when determined, otherwise uniform; the answer
    /// is recorded so later queries stay consistent.
    pub fn query(
        &mut self,
        point: &[FieldElem],
        rng: &mut impl rand::Rng,
    ) -> Result<FieldElem, PolyError> {
        match self.step_law(point)? {
            StepLaw::Forced(v) => Ok(v),
            StepLaw::Uniform => {
                let beta = self.field.random(rng);
                self.constrain(point, beta)?;
                Ok(beta)
            }
        }
    }

    /// Sample a full polynomial uniformly from the current solution set.
    /// Subsequent queries answered from this polynomial have exactly the
    /// distribution the lazy path would produce.
    pub fn sample_polynomial(&self, rng: &mut impl rand::Rng) -> MultiPoly {
        let f = &self.field;
        let dim = self.monomials.len();
        // Bring a copy of the system to reduced echelon form.
        let mut rows = self.rows.clone();
        let mut values = self.values.clone();
        let pivots = self.pivots.clone();
        for i in 0..rows.len() {
            for j in 0..rows.len() {
                if i == j {
                    continue;
                }
                let c = rows[j][pivots[i]];
                if c == FieldElem::ZERO {
                    continue;
                }
                let (ri, vj) = (rows[i].clone(), values[i]);
                for (x, &y) in rows[j].iter_mut().zip(&ri) {
                    *x = f.sub(*x, f.mul(c, y));
                }
                values[j] = f.sub(values[j], f.mul(c, vj));
            }
        }
        let mut is_pivot = vec![false; dim];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut coeffs = vec![FieldElem::ZERO; dim];
        for (k, c) in coeffs.iter_mut().enumerate() {
            if !is_pivot[k] {
                *c = f.random(rng);
            }
        }
        for (i, &p) in pivots.iter().enumerate() {
            let mut v = values[i];
            for k in 0..dim {
                if k != p && rows[i][k] != FieldElem::ZERO {
                    v = f.sub(v, f.mul(rows[i][k], coeffs[k]));
                }
            }
            coeffs[p] = v;
        }
        let mut out = MultiPoly::zero(f, self.num_vars, self.bounds.clone());
        for (e, &c) in self.monomials.iter().zip(&coeffs) {
            if c != FieldElem::ZERO {
                out.set_coeff(e, c);
            }
        }
        out
    }
}

/// One-shot form: the value at `alpha` of a uniform polynomial in the bounded
/// space conditioned on the constraints `s`.
pub fn polysim_step(
    field: &FieldCtx,
    num_vars: usize,
    bounds: DegreeBounds,
    s: &[PointConstraint],
    alpha: &[FieldElem],
    rng: &mut impl rand::Rng,
) -> Result<FieldElem, PolyError> {
    let mut sim = PolySim::new(field, num_vars, bounds);
    for c in s {
        sim.constrain(&c.point, c.value)?;
    }
    sim.query(alpha, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{field_create, FieldSpec};
    use crate::poly::poly_random;
    use num_rational::Ratio;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn gf3() -> FieldCtx {
        field_create(&FieldSpec::prime(3)).unwrap()
    }

    fn fe(v: u64) -> FieldElem {
        FieldElem(v as u32)
    }

    #[test]
    fn repeated_point_is_forced() {
        let f = gf3();
        let mut sim = PolySim::new(&f, 1, DegreeBounds::Total(1));
        sim.constrain(&[fe(0)], fe(1)).unwrap();
        assert_eq!(sim.step_law(&[fe(0)]).unwrap(), StepLaw::Forced(fe(1)));
    }

    #[test]
    fn fresh_point_is_uniform_matching_enumeration() {
        // All 9 degree-<=1 polynomials over GF(3) through (0,1): the values
        // at 1 are uniform over GF(3).
        let f = gf3();
        let sim = {
            let mut s = PolySim::new(&f, 1, DegreeBounds::Total(1));
            s.constrain(&[fe(0)], fe(1)).unwrap();
            s
        };
        assert_eq!(sim.step_law(&[fe(1)]).unwrap(), StepLaw::Uniform);
        // enumeration oracle
        let mut counts = [0usize; 3];
        for a in 0..3u32 {
            for b in 0..3u32 {
                if a == 1 {
                    counts[((a + b) % 3) as usize] += 1;
                }
            }
        }
        assert_eq!(counts, [1, 1, 1]);
    }

    #[test]
    fn constants_cannot_take_two_values() {
        let f = gf3();
        let s = [
            PointConstraint {
                point: vec![fe(0)],
                value: fe(1),
            },
            PointConstraint {
                point: vec![fe(1)],
                value: fe(2),
            },
        ];
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert_eq!(
            polysim_step(&f, 1, DegreeBounds::Total(0), &s, &[fe(2)], &mut rng),
            Err(PolyError::InconsistentConstraints)
        );
    }

    /// Exact joint law of the sampler over a query sequence, by recursing
    /// over the per-step law. Probabilities have denominator 3^k.
    fn sim_joint(
        sim: &PolySim,
        queries: &[Vec<FieldElem>],
        f: &FieldCtx,
    ) -> std::collections::BTreeMap<Vec<u32>, Ratio<u64>> {
        let mut out = std::collections::BTreeMap::new();
        fn rec(
            sim: &PolySim,
            queries: &[Vec<FieldElem>],
            f: &FieldCtx,
            prefix: &mut Vec<u32>,
            prob: Ratio<u64>,
            out: &mut std::collections::BTreeMap<Vec<u32>, Ratio<u64>>,
        ) {
            if queries.is_empty() {
                *out.entry(prefix.clone()).or_insert_with(|| Ratio::new(0, 1)) =
                    out.get(prefix).copied().unwrap_or_else(|| Ratio::new(0, 1)) + prob;
                return;
            }
            match sim.step_law(&queries[0]).unwrap() {
                StepLaw::Forced(v) => {
                    let mut s = sim.clone();
                    s.constrain(&queries[0], v).unwrap();
                    prefix.push(v.0);
                    rec(&s, &queries[1..], f, prefix, prob, out);
                    prefix.pop();
                }
                StepLaw::Uniform => {
                    let q = f.order();
                    for v in f.elements() {
                        let mut s = sim.clone();
                        s.constrain(&queries[0], v).unwrap();
                        prefix.push(v.0);
                        rec(&s, &queries[1..], f, prefix, prob / Ratio::new(q, 1), out);
                        prefix.pop();
                    }
                }
            }
        }
        let mut prefix = Vec::new();
        rec(sim, queries, f, &mut prefix, Ratio::new(1, 1), &mut out);
        out
    }

    /// Enumeration oracle: joint law by evaluating every polynomial in the
    /// space at the query sequence.
    fn enum_joint(
        f: &FieldCtx,
        num_vars: usize,
        bounds: &DegreeBounds,
        queries: &[Vec<FieldElem>],
    ) -> std::collections::BTreeMap<Vec<u32>, Ratio<u64>> {
        use crate::poly::{for_each_tuple, MultiPoly};
        let radixes = bounds.radixes(num_vars);
        let mut monomials = Vec::new();
        for_each_tuple(&radixes, |_, e| {
            if bounds.admits(e) {
                monomials.push(e.to_vec());
            }
        });
        let dim = monomials.len();
        let q = f.order() as usize;
        let total = q.pow(dim as u32);
        let mut out = std::collections::BTreeMap::new();
        for code in 0..total {
            let mut p = MultiPoly::zero(f, num_vars, bounds.clone());
            let mut c = code;
            for e in &monomials {
                let v = (c % q) as u32;
                c /= q;
                if v != 0 {
                    p.set_coeff(e, FieldElem(v));
                }
            }
            let answers: Vec<u32> = queries.iter().map(|x| p.eval(x).unwrap().0).collect();
            *out.entry(answers)
                .or_insert_with(|| Ratio::new(0u64, 1)) += Ratio::new(1, total as u64);
        }
        out
    }

    #[test]
    fn sequential_joint_matches_enumeration_univariate() {
        let f = gf3();
        let bounds = DegreeBounds::Total(2);
        let queries = vec![vec![fe(0)], vec![fe(2)], vec![fe(1)], vec![fe(0)]];
        let sim = PolySim::new(&f, 1, bounds.clone());
        assert_eq!(
            sim_joint(&sim, &queries, &f),
            enum_joint(&f, 1, &bounds, &queries)
        );
    }

    #[test]
    fn sequential_joint_matches_enumeration_bivariate() {
        let f = gf3();
        let bounds = DegreeBounds::PerVar(vec![1, 1]);
        let queries = vec![
            vec![fe(0), fe(1)],
            vec![fe(2), fe(2)],
            vec![fe(1), fe(0)],
            vec![fe(2), fe(1)],
            vec![fe(0), fe(0)],
        ];
        let sim = PolySim::new(&f, 2, bounds.clone());
        assert_eq!(
            sim_joint(&sim, &queries, &f),
            enum_joint(&f, 2, &bounds, &queries)
        );
    }

    #[test]
    fn conditioned_joint_matches_enumeration() {
        // Condition on Q(0) = 1, then compare the joint law of later queries
        // against the filtered enumeration.
        let f = gf3();
        let bounds = DegreeBounds::Total(1);
        let mut sim = PolySim::new(&f, 1, bounds.clone());
        sim.constrain(&[fe(0)], fe(1)).unwrap();
        let queries = vec![vec![fe(1)], vec![fe(2)]];
        let got = sim_joint(&sim, &queries, &f);
        // filtered enumeration: 3 polynomials a=1
        let mut want = std::collections::BTreeMap::new();
        for b in 0..3u32 {
            let ans = vec![(1 + b) % 3, (1 + 2 * b) % 3];
            *want.entry(ans).or_insert_with(|| Ratio::new(0u64, 1)) += Ratio::new(1, 3);
        }
        assert_eq!(got, want);
    }

    #[test]
    fn sample_polynomial_respects_constraints_and_law() {
        let f = gf3();
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let mut sim = PolySim::new(&f, 2, DegreeBounds::PerVar(vec![1, 1]));
        sim.constrain(&[fe(0), fe(0)], fe(2)).unwrap();
        sim.constrain(&[fe(1), fe(2)], fe(0)).unwrap();
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..3000 {
            let p = sim.sample_polynomial(&mut rng);
            assert_eq!(p.eval(&[fe(0), fe(0)]).unwrap(), fe(2));
            assert_eq!(p.eval(&[fe(1), fe(2)]).unwrap(), fe(0));
            *counts.entry(p.eval(&[fe(2), fe(1)]).unwrap().0).or_insert(0usize) += 1;
        }
        // The off-constraint value should be spread over the whole field.
        assert_eq!(counts.len(), 3);
        for &c in counts.values() {
            assert!(c > 800, "counts {counts:?}");
        }
    }

    #[test]
    fn forced_after_saturation() {
        // After dim-many independent constraints every query is forced and
        // agrees with the unique interpolating polynomial.
        let f = gf3();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let p = poly_random(&f, 1, DegreeBounds::Total(2), &mut rng);
        let mut sim = PolySim::new(&f, 1, DegreeBounds::Total(2));
        for x in f.elements() {
            sim.constrain(&[x], p.eval(&[x]).unwrap()).unwrap();
        }
        for x in f.elements() {
            assert_eq!(
                sim.step_law(&[x]).unwrap(),
                StepLaw::Forced(p.eval(&[x]).unwrap())
            );
        }
    }
}
