//! Robust low-degree tests: the affine-line test with full-line reads, for
//! scalar functions F^m -> F and for bundled functions F^m -> F^k (the same
//! lines are used across all coordinates), plus an exact Reed-Muller
//! distance oracle for micro instances.
//!
//! The test samples uniform affine lines, reads all |F| points of each, and
//! accepts iff every restriction is a univariate polynomial of degree at
//! most d. Robustness constants are measured by experiments rather than
//! asserted.

use crate::field::{FieldCtx, FieldElem};
use crate::oracles::{OracleError, OracleHandle, OracleIndex, Symbol};
use crate::poly::{uni_is_low_degree, univariate_fit_check, PolyError};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LdtError {
    #[error("field of order {order} is too small for {k} bundled coordinates (need order > 25k)")]
    FieldTooSmallForK { order: u64, k: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdtParams {
    pub m: usize,
    /// Degree cap checked on every line restriction.
    pub d: usize,
    pub reps: usize,
    /// Proximity target; recorded in reports, not used by the decision.
    pub proximity: Ratio<u64>,
    /// Permit fields below the 25k bound of the vector-valued guarantee.
    /// Intended for micro experiments; the run is flagged in the outcome.
    pub allow_small_field: bool,
}

impl LdtParams {
    pub fn new(m: usize, d: usize, reps: usize) -> Self {
        LdtParams {
            m,
            d,
            reps,
            proximity: Ratio::new(1, 5),
            allow_small_field: false,
        }
    }

    pub fn allowing_small_field(mut self) -> Self {
        self.allow_small_field = true;
        self
    }
}

/// An affine line: base + t * dir with dir nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Line {
    pub base: Vec<FieldElem>,
    pub dir: Vec<FieldElem>,
}

impl Line {
    pub fn point_at(&self, f: &FieldCtx, t: FieldElem) -> Vec<FieldElem> {
        self.base
            .iter()
            .zip(&self.dir)
            .map(|(&b, &d)| f.add(b, f.mul(t, d)))
            .collect()
    }

    pub fn sample(f: &FieldCtx, m: usize, rng: &mut impl Rng) -> Line {
        let base = (0..m).map(|_| f.random(rng)).collect();
        let dir = loop {
            let d: Vec<FieldElem> = (0..m).map(|_| f.random(rng)).collect();
            if d.iter().any(|&x| x != FieldElem::ZERO) {
                break d;
            }
        };
        Line { base, dir }
    }
}

/// Everything read along one line.
#[derive(Debug, Clone)]
pub struct LineView {
    pub line: Line,
    /// One table of |F| values per bundled coordinate, indexed by t in
    /// canonical field order.
    pub tables: Vec<Vec<FieldElem>>,
    pub accept: bool,
}

impl LineView {
    /// Distance of this line's view to the nearest accepting view. Exact for
    /// one coordinate; for bundles the union of per-coordinate repairs is an
    /// upper bound (a symbol counts as modified if any coordinate changes).
    pub fn distance_to_accepting(&self, f: &FieldCtx, d: usize) -> crate::oracles::DistanceResult {
        let n = self.tables[0].len();
        let mut needs_change = vec![false; n];
        for table in &self.tables {
            let fit = univariate_fit_check(f, table, d);
            if fit.is_degree_le_d {
                continue;
            }
            for (t, x) in f.elements().enumerate() {
                if crate::poly::uni_eval(f, &fit.nearest, x) != table[t] {
                    needs_change[t] = true;
                }
            }
        }
        let changed = needs_change.iter().filter(|&&b| b).count();
        crate::oracles::DistanceResult {
            distance: Ratio::new(changed as u64, n as u64),
            exact: self.tables.len() == 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LdtOutcome {
    pub accept: bool,
    pub views: Vec<LineView>,
    /// Set when the 25k precondition was overridden.
    pub small_field_override: bool,
}

/// Per-repetition RNG derived by counter from the master seed.
pub fn rep_rng(master_seed: u64, rep: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(rep);
    rng
}

/// Line test for a scalar function F: F^m -> F.
pub fn ldt_scalar(
    f: &FieldCtx,
    oracle: &mut OracleHandle,
    params: &LdtParams,
    master_seed: u64,
) -> Result<LdtOutcome, LdtError> {
    let mut read = |pt: &[FieldElem]| oracle.query(&OracleIndex::point(pt));
    ldt_inner(f, &mut read, params, master_seed, 1)
}

/// Scalar line test against a reader closure.
pub fn ldt_scalar_with(
    f: &FieldCtx,
    read: &mut dyn FnMut(&[FieldElem]) -> Result<Symbol, OracleError>,
    params: &LdtParams,
    master_seed: u64,
) -> Result<LdtOutcome, LdtError> {
    ldt_inner(f, read, params, master_seed, 1)
}

/// Line test for a bundled function F: F^m -> F^k; the same lines are read
/// across all k coordinates and every coordinate restriction must have
/// degree at most d.
pub fn ldt_vector(
    f: &FieldCtx,
    oracle: &mut OracleHandle,
    params: &LdtParams,
    master_seed: u64,
    k: usize,
) -> Result<LdtOutcome, LdtError> {
    let mut read = |pt: &[FieldElem]| oracle.query(&OracleIndex::point(pt));
    ldt_vector_with(f, &mut read, params, master_seed, k)
}

/// Vector line test against a reader closure.
pub fn ldt_vector_with(
    f: &FieldCtx,
    read: &mut dyn FnMut(&[FieldElem]) -> Result<Symbol, OracleError>,
    params: &LdtParams,
    master_seed: u64,
    k: usize,
) -> Result<LdtOutcome, LdtError> {
    if f.order() <= 25 * k as u64 && !params.allow_small_field {
        return Err(LdtError::FieldTooSmallForK {
            order: f.order(),
            k,
        });
    }
    ldt_inner(f, read, params, master_seed, k)
}

fn ldt_inner(
    f: &FieldCtx,
    read: &mut dyn FnMut(&[FieldElem]) -> Result<Symbol, OracleError>,
    params: &LdtParams,
    master_seed: u64,
    k: usize,
) -> Result<LdtOutcome, LdtError> {
    let mut accept = true;
    let mut views = Vec::with_capacity(params.reps);
    for rep in 0..params.reps {
        let mut rng = rep_rng(master_seed, rep as u64);
        let line = Line::sample(f, params.m, &mut rng);
        let mut tables = vec![Vec::with_capacity(f.order() as usize); k];
        for t in f.elements() {
            let pt = line.point_at(f, t);
            let sym: Symbol = read(&pt)?;
            debug_assert_eq!(sym.len(), k);
            for (c, table) in tables.iter_mut().enumerate() {
                table.push(sym[c]);
            }
        }
        let line_ok = tables.iter().all(|table| uni_is_low_degree(f, table, params.d));
        accept &= line_ok;
        views.push(LineView {
            line,
            tables,
            accept: line_ok,
        });
    }
    Ok(LdtOutcome {
        accept,
        views,
        small_field_override: f.order() <= 25 * k as u64,
    })
}

/// Exact minimum relative distance of a full evaluation table (row-major over
/// F^m) to the total-degree-d Reed-Muller code, by enumerating the code.
pub fn rm_distance_exact(
    f: &FieldCtx,
    table: &[FieldElem],
    m: usize,
    d: usize,
) -> Result<Ratio<u64>, OracleError> {
    use crate::poly::{for_each_tuple, DegreeBounds, MultiPoly};
    let q = f.order();
    let n = q.pow(m as u32) as usize;
    debug_assert_eq!(table.len(), n);
    let bounds = DegreeBounds::Total(d);
    let dim = bounds.dimension(m);
    let codewords = (q as f64).powi(dim as i32);
    if codewords > (1u64 << 20) as f64 {
        return Err(OracleError::SearchSpaceTooLarge(format!(
            "|RM| = {q}^{dim} codewords"
        )));
    }
    // Enumerate coefficient assignments for the admissible monomials.
    let mut monomials = Vec::new();
    for_each_tuple(&vec![d + 1; m], |_, e| {
        if e.iter().sum::<usize>() <= d {
            monomials.push(e.to_vec());
        }
    });
    let mut counters = vec![0usize; dim];
    let mut best = n as u64;
    loop {
        let mut p = MultiPoly::zero(f, m, bounds.clone());
        for (e, &c) in monomials.iter().zip(&counters) {
            if c != 0 {
                p.set_coeff(e, FieldElem(c as u32));
            }
        }
        let mut dist = 0u64;
        let mut idx = 0usize;
        let mut pt = vec![FieldElem::ZERO; m];
        let mut grid = vec![0usize; m];
        loop {
            for (j, &g) in grid.iter().enumerate() {
                pt[j] = FieldElem(g as u32);
            }
            if p.eval(&pt).expect("arity") != table[idx] {
                dist += 1;
            }
            idx += 1;
            if !crate::oracles::odometer_advance(&mut grid, q as usize) {
                break;
            }
        }
        best = best.min(dist);
        if best == 0 {
            break;
        }
        if !crate::oracles::odometer_advance(&mut counters, q as usize) {
            break;
        }
    }
    Ok(Ratio::new(best, n as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{field_create, FieldSpec};
    use crate::oracles::Alphabet;
    use crate::poly::{poly_random, DegreeBounds, MultiPoly};

    fn fe(v: u64) -> FieldElem {
        FieldElem(v as u32)
    }

    fn poly_oracle(f: &FieldCtx, polys: Vec<MultiPoly>, id: &str) -> OracleHandle {
        let m = polys[0].num_vars;
        let k = polys.len();
        OracleHandle::lazy_over_grid(id, m, f.order(), Alphabet::Elems { width: k }, move |p| {
            polys.iter().map(|q| q.eval(p).expect("arity")).collect()
        })
    }

    #[test]
    fn scalar_accepts_members() {
        let f = field_create(&FieldSpec::prime(17)).unwrap();
        // X1*X2 + X2, total degree 2
        let mut p = MultiPoly::zero(&f, 2, DegreeBounds::Total(2));
        p.set_coeff(&[1, 1], FieldElem::ONE);
        p.set_coeff(&[0, 1], FieldElem::ONE);
        let mut o = poly_oracle(&f, vec![p], "F");
        for seed in 0..20 {
            let out = ldt_scalar(&f, &mut o, &LdtParams::new(2, 2, 3), seed).unwrap();
            assert!(out.accept);
        }
    }

    #[test]
    fn scalar_max_degree_always_accepts() {
        // d = |F|-1 admits every univariate table.
        let f = field_create(&FieldSpec::prime(5)).unwrap();
        let f2 = f.clone();
        let mut o = OracleHandle::lazy_over_grid("F", 2, 5, Alphabet::Elems { width: 1 }, move |p| {
            // arbitrary non-polynomial-looking table
            vec![f2.add(f2.mul(p[0], p[0]), FieldElem((p[1].0 * 3 + 1) % 5))]
        });
        let out = ldt_scalar(&f, &mut o, &LdtParams::new(2, 4, 5), 7).unwrap();
        assert!(out.accept);
    }

    #[test]
    fn scalar_point_indicator_rejects_on_hitting_lines() {
        // Indicator of a single point over GF(17)^2 vs d=2: a line through
        // the point sees a table that is 0 except at one t, degree 16.
        let f = field_create(&FieldSpec::prime(17)).unwrap();
        let target = vec![fe(4), fe(9)];
        let t2 = target.clone();
        let mut o = OracleHandle::lazy_over_grid("F", 2, 17, Alphabet::Elems { width: 1 }, move |p| {
            vec![if p == t2.as_slice() { FieldElem::ONE } else { FieldElem::ZERO }]
        });
        let mut hit_and_rejected = 0;
        let mut missed_and_accepted = 0;
        for seed in 0..200u64 {
            let out = ldt_scalar(&f, &mut o, &LdtParams::new(2, 2, 1), seed).unwrap();
            let view = &out.views[0];
            let hits = f
                .elements()
                .any(|t| view.line.point_at(&f, t) == target);
            match (hits, out.accept) {
                (true, false) => hit_and_rejected += 1,
                (false, true) => missed_and_accepted += 1,
                (true, true) => panic!("line through the indicator point must reject"),
                (false, false) => panic!("line missing the point is identically zero"),
            }
        }
        assert!(hit_and_rejected > 0 && missed_and_accepted > 0);
    }

    #[test]
    fn vector_accepts_member_bundle() {
        let f = field_create(&FieldSpec::binary(6)).unwrap(); // GF(64)
        let mut x1 = MultiPoly::zero(&f, 2, DegreeBounds::Total(2));
        x1.set_coeff(&[1, 0], FieldElem::ONE);
        let mut x2 = MultiPoly::zero(&f, 2, DegreeBounds::Total(2));
        x2.set_coeff(&[0, 1], FieldElem::ONE);
        let mut x1x2 = MultiPoly::zero(&f, 2, DegreeBounds::Total(2));
        x1x2.set_coeff(&[1, 1], FieldElem::ONE);
        let mut o = poly_oracle(&f, vec![x1, x2, x1x2], "P");
        // |F| = 64 <= 25*3: the stated guarantee needs the override here.
        let params = LdtParams::new(2, 2, 2).allowing_small_field();
        for seed in 0..10 {
            let out = ldt_vector(&f, &mut o, &params, seed, 3).unwrap();
            assert!(out.accept);
            assert!(out.small_field_override);
        }
    }

    #[test]
    fn vector_small_field_guard() {
        let f = field_create(&FieldSpec::binary(6)).unwrap();
        let mut o = poly_oracle(&f, vec![MultiPoly::constant(&f, 2, fe(1))], "P");
        let err = ldt_vector(&f, &mut o, &LdtParams::new(2, 2, 1), 0, 3).unwrap_err();
        assert_eq!(err, LdtError::FieldTooSmallForK { order: 64, k: 3 });
    }

    #[test]
    fn vector_rejects_corrupted_coordinate() {
        // One coordinate replaced by a pseudorandom table over GF(64)^3:
        // rejection frequency at least 0.9 over 200 trials.
        let f = field_create(&FieldSpec::binary(6)).unwrap();
        let mut good1 = MultiPoly::zero(&f, 3, DegreeBounds::Total(2));
        good1.set_coeff(&[1, 1, 0], FieldElem::ONE);
        let mut good2 = MultiPoly::zero(&f, 3, DegreeBounds::Total(2));
        good2.set_coeff(&[0, 0, 1], fe(7));
        let fc = f.clone();
        let mut o = OracleHandle::lazy_over_grid("P", 3, 64, Alphabet::Elems { width: 3 }, move |p| {
            // third coordinate: a keyed hash of the point, far from low degree
            let mut h = 0xcbf29ce484222325u64;
            for e in p {
                h ^= e.0 as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
            vec![
                good1.eval(p).unwrap(),
                good2.eval(p).unwrap(),
                fc.elem(h),
            ]
        });
        let params = LdtParams::new(3, 2, 1).allowing_small_field();
        let mut rejections = 0;
        for seed in 0..200u64 {
            let out = ldt_vector(&f, &mut o, &params, seed, 3).unwrap();
            if !out.accept {
                rejections += 1;
            }
        }
        assert!(
            rejections >= 180,
            "rejections {rejections} / 200 below 0.9"
        );
    }

    #[test]
    fn vector_k1_matches_scalar_on_same_seed() {
        // |F| = 29 > 25*1 keeps the stated guarantee in force.
        let f = field_create(&FieldSpec::prime(29)).unwrap();
        let mut p = MultiPoly::zero(&f, 2, DegreeBounds::Total(3));
        p.set_coeff(&[2, 1], fe(5));
        p.set_coeff(&[0, 1], fe(2));
        for seed in 0..20u64 {
            let mut o1 = poly_oracle(&f, vec![p.clone()], "F");
            let mut o2 = poly_oracle(&f, vec![p.clone()], "F");
            let params = LdtParams::new(2, 2, 2);
            let a = ldt_scalar(&f, &mut o1, &params, seed).unwrap();
            let b = ldt_vector(&f, &mut o2, &params, seed, 1).unwrap();
            assert_eq!(a.accept, b.accept);
            for (va, vb) in a.views.iter().zip(&b.views) {
                assert_eq!(va.line, vb.line);
                assert_eq!(va.tables, vb.tables);
            }
        }
    }

    #[test]
    fn perfect_completeness_random_members() {
        // Random in-code polynomials across a parameter sweep always accept.
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(42);
        let fields = [
            field_create(&FieldSpec::prime(17)).unwrap(),
            field_create(&FieldSpec::binary(5)).unwrap(),
        ];
        let mut runs = 0;
        for f in &fields {
            for m in 1..=2usize {
                for d in 1..=3usize {
                    for _ in 0..84 {
                        let p = poly_random(f, m, DegreeBounds::Total(d), &mut rng);
                        let mut o = poly_oracle(f, vec![p], "F");
                        let out =
                            ldt_scalar(f, &mut o, &LdtParams::new(m, d, 2), runs as u64).unwrap();
                        assert!(out.accept);
                        runs += 1;
                    }
                }
            }
        }
        assert!(runs >= 1000);
    }

    #[test]
    fn monotone_robustness_signal() {
        // Average per-line distance to accepting is nondecreasing in the
        // corruption rate applied to a fixed polynomial on GF(17)^2.
        use rand::Rng;
        use rand::SeedableRng;
        let f = field_create(&FieldSpec::prime(17)).unwrap();
        let mut base = MultiPoly::zero(&f, 2, DegreeBounds::Total(2));
        base.set_coeff(&[1, 1], fe(3));
        base.set_coeff(&[1, 0], fe(1));
        let rates = [0.0, 0.01, 0.05, 0.20];
        let mut means = Vec::new();
        for (ri, &rate) in rates.iter().enumerate() {
            let mut corrupt_rng = rand_chacha::ChaCha20Rng::seed_from_u64(1000 + ri as u64);
            let n = 17 * 17;
            let mut table: Vec<FieldElem> = Vec::with_capacity(n);
            for a in f.elements() {
                for b in f.elements() {
                    let mut v = base.eval(&[a, b]).unwrap();
                    if corrupt_rng.gen::<f64>() < rate {
                        v = f.add(v, FieldElem::ONE);
                    }
                    table.push(v);
                }
            }
            let mut o = OracleHandle::table_over_grid(
                "F",
                2,
                17,
                table.into_iter().map(|v| vec![v]).collect(),
                Alphabet::Elems { width: 1 },
            );
            let mut total = Ratio::new(0u64, 1);
            let trials = 60;
            for seed in 0..trials {
                let out = ldt_scalar(&f, &mut o, &LdtParams::new(2, 2, 1), seed).unwrap();
                total += out.views[0].distance_to_accepting(&f, 2).distance;
            }
            means.push(total / Ratio::new(trials, 1));
        }
        for w in means.windows(2) {
            assert!(w[0] <= w[1], "means not monotone: {means:?}");
        }
        assert_eq!(means[0], Ratio::new(0, 1));
    }

    #[test]
    fn rm_distance_examples() {
        let f3 = field_create(&FieldSpec::prime(3)).unwrap();
        // member
        let table: Vec<FieldElem> = vec![fe(2), fe(2), fe(2)];
        assert_eq!(rm_distance_exact(&f3, &table, 1, 0).unwrap(), Ratio::new(0, 3));
        // identity table (0,1,2) vs constants: distance 2/3
        let table: Vec<FieldElem> = vec![fe(0), fe(1), fe(2)];
        let d = rm_distance_exact(&f3, &table, 1, 0).unwrap();
        assert_eq!(d, Ratio::new(2, 3));
        assert!(d <= Ratio::new(1, 1));
    }

    #[test]
    fn rm_distance_guard() {
        let f = field_create(&FieldSpec::binary(5)).unwrap();
        let table = vec![FieldElem::ZERO; 32 * 32];
        assert!(matches!(
            rm_distance_exact(&f, &table, 2, 6),
            Err(OracleError::SearchSpaceTooLarge(_))
        ));
    }
}
