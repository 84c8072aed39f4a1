//! Robust (non-zero-knowledge) sumcheck PCP of proximity.
//!
//! The claim is that an m-variate low-degree polynomial F sums to gamma over
//! H^m. The proof bundles all partial-sum polynomials into one symbol per
//! point of F^(m-1): pi(c_1..c_{m-2}, alpha) = (g_1(alpha), g_2(c_1, alpha),
//! ..., g_{m-1}(c_1..c_{m-2}, alpha)), where g_i sums F over the trailing
//! m - i variables. The verifier reads one full axis of pi and of F, degree-
//! checks every bundled column, checks the telescoping sum identities, and
//! runs a low-degree test on F. Bundling makes a corruption of any level a
//! large fraction of each affected symbol, which is what the robustness
//! experiments measure.

use crate::field::{FieldCtx, FieldElem, SubsetH};
use crate::ldt::{ldt_scalar, LdtError, LdtOutcome, LdtParams};
use crate::oracles::{OracleError, OracleHandle, OracleIndex, Symbol};
use crate::poly::{power_sums, uni_eval, uni_is_low_degree, MultiPoly, PolyError};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScError {
    #[error("instance invariant violated: {0}")]
    BadInstance(String),
    #[error("input degree too high: variable {var} has degree {got}, cap {cap}")]
    DegreeTooHigh { var: usize, got: usize, cap: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Ldt(#[from] LdtError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Parameters of one summation claim: sum over H^m of an m-variate F with
/// per-variable degree at most d equals gamma.
#[derive(Debug, Clone)]
pub struct SumInstance {
    pub field: FieldCtx,
    pub m: usize,
    /// Per-variable degree parameter: the cap for the bundled column checks
    /// and for the mask spaces layered on top of this instance.
    pub d: usize,
    /// Total-degree parameter for the low-degree test on the input. Equals
    /// `d` for plain instances; larger when the input is a structured
    /// summand whose total degree exceeds its per-variable degrees.
    pub d_input_total: usize,
    pub h: SubsetH,
    pub gamma: FieldElem,
    pub delta: Ratio<u64>,
    /// Whether the soundness-analysis premise m*d/|F| < delta was enforced.
    pub strict: bool,
}

impl SumInstance {
    /// Full invariants: d >= |H|+1, m >= 2, and m*d/|F| < delta <= 1.
    pub fn new(
        field: &FieldCtx,
        m: usize,
        d: usize,
        h: SubsetH,
        gamma: FieldElem,
        delta: Ratio<u64>,
    ) -> Result<Self, ScError> {
        let inst = Self::new_relaxed(field, m, d, h, gamma, delta)?;
        let bound = Ratio::new((m * d) as u64, field.order());
        if inst.delta <= bound {
            return Err(ScError::BadInstance(format!(
                "delta {} must exceed m*d/|F| = {}",
                inst.delta, bound
            )));
        }
        Ok(SumInstance {
            strict: true,
            ..inst
        })
    }

    /// Relaxed constructor: skips the m*d/|F| soundness premise. Used for
    /// micro fields where the premise cannot hold and only completeness or
    /// distance instrumentation is exercised.
    pub fn new_relaxed(
        field: &FieldCtx,
        m: usize,
        d: usize,
        h: SubsetH,
        gamma: FieldElem,
        delta: Ratio<u64>,
    ) -> Result<Self, ScError> {
        if m < 2 {
            return Err(ScError::BadInstance(
                "m = 1 is rejected: the proof domain F^0 is degenerate; check the sum directly"
                    .into(),
            ));
        }
        if d < h.len() + 1 {
            return Err(ScError::BadInstance(format!(
                "d = {d} must be at least |H|+1 = {}",
                h.len() + 1
            )));
        }
        if h.is_empty() {
            return Err(ScError::BadInstance("H must be nonempty".into()));
        }
        if delta <= Ratio::new(0, 1) || delta > Ratio::new(1, 1) {
            return Err(ScError::BadInstance("delta must lie in (0, 1]".into()));
        }
        Ok(SumInstance {
            field: field.clone(),
            m,
            d,
            d_input_total: d,
            h,
            gamma,
            delta,
            strict: false,
        })
    }

    pub fn with_input_total_degree(mut self, d_total: usize) -> Self {
        self.d_input_total = d_total;
        self
    }

    /// Proximity parameter handed to the low-degree test: min(delta, 1/5).
    pub fn delta_rm(&self) -> Ratio<u64> {
        self.delta.min(Ratio::new(1, 5))
    }

    /// Whether a direct summation of `f` over H^m hits gamma.
    pub fn sums_to_gamma(&self, f: &MultiPoly) -> bool {
        let total = f
            .partial_sum(&self.h, 0)
            .expect("index 0 always valid")
            .as_constant();
        total == self.gamma
    }
}

/// The bundled proof table over F^(m-1), alphabet F^(m-1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RscProof {
    pub m: usize,
    pub table: Vec<Symbol>,
}

impl RscProof {
    pub fn oracle(&self, field: &FieldCtx) -> OracleHandle {
        OracleHandle::table_over_grid(
            "pi",
            self.m - 1,
            field.order(),
            self.table.clone(),
            crate::oracles::Alphabet::Elems { width: self.m - 1 },
        )
    }
}

/// The partial-sum polynomials g_1 .. g_{m-1} of F over H.
pub fn sumcheck_polys(inst: &SumInstance, f: &MultiPoly) -> Result<Vec<MultiPoly>, ScError> {
    for (var, &deg) in f.individual_degrees().iter().enumerate() {
        if deg > inst.d {
            return Err(ScError::DegreeTooHigh {
                var,
                got: deg,
                cap: inst.d,
            });
        }
    }
    (1..inst.m)
        .map(|i| f.partial_sum(&inst.h, i).map_err(ScError::from))
        .collect()
}

/// Assemble the dense bundled table from the partial-sum polynomials.
pub fn assemble_table(inst: &SumInstance, gs: &[MultiPoly]) -> RscProof {
    let f = &inst.field;
    let q = f.order() as usize;
    let m = inst.m;
    let mut table = Vec::with_capacity(q.pow((m - 1) as u32));
    let mut grid = vec![0usize; m - 1];
    loop {
        let pt: Vec<FieldElem> = grid.iter().map(|&g| FieldElem(g as u32)).collect();
        let alpha = pt[m - 2];
        let symbol: Symbol = (0..m - 1)
            .map(|i| {
                let mut arg: Vec<FieldElem> = pt[..i].to_vec();
                arg.push(alpha);
                gs[i].eval(&arg).expect("arity")
            })
            .collect();
        table.push(symbol);
        if !crate::oracles::odometer_advance(&mut grid, q) {
            break;
        }
    }
    RscProof { m, table }
}

/// Deterministic honest prover.
pub fn rsc_prove(inst: &SumInstance, f: &MultiPoly) -> Result<RscProof, ScError> {
    let gs = sumcheck_polys(inst, f)?;
    Ok(assemble_table(inst, &gs))
}

/// Verifier coins: the axis prefix c in F^(m-1) plus the seed for the
/// low-degree-test lines (sampled after the axis reads).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RscCoins {
    pub c: Vec<FieldElem>,
    pub ldt_seed: u64,
}

/// Which oracle a planned query goes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Input,
    Proof,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedQuery {
    pub role: Role,
    pub index: OracleIndex,
}

/// Names of the verifier's checks, for diagnostics and reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckFailure {
    ColumnDegree { level: usize },
    GammaSum,
    Chain { level: usize },
    InputSum,
    InputLowDegree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub accept: bool,
    pub failures: Vec<CheckFailure>,
}

/// The verifier, split into a query plan and a pure decision so it can be
/// wrapped as a non-adaptive system descriptor.
#[derive(Debug, Clone)]
pub struct RscVerifier {
    pub inst: SumInstance,
    pub ldt_reps: usize,
}

impl RscVerifier {
    pub fn new(inst: SumInstance) -> Self {
        RscVerifier { inst, ldt_reps: 1 }
    }

    pub fn with_ldt_reps(mut self, reps: usize) -> Self {
        self.ldt_reps = reps;
        self
    }

    pub fn coins_from_rng(&self, rng: &mut impl rand::Rng) -> RscCoins {
        let f = &self.inst.field;
        RscCoins {
            c: (0..self.inst.m - 1).map(|_| f.random(rng)).collect(),
            ldt_seed: rng.gen(),
        }
    }

    fn ldt_params(&self) -> LdtParams {
        let mut p = LdtParams::new(self.inst.m, self.inst.d_input_total, self.ldt_reps);
        p.proximity = self.inst.delta_rm();
        p
    }

    /// The non-adaptive query plan for the axis reads. The LDT lines are
    /// derived from `coins.ldt_seed` and issued by `verify` itself (they are
    /// part of the plan in the same deterministic order).
    pub fn plan_axis(&self, coins: &RscCoins) -> Vec<PlannedQuery> {
        let f = &self.inst.field;
        let m = self.inst.m;
        let mut plan = Vec::with_capacity(2 * f.order() as usize);
        for alpha in f.elements() {
            let mut idx = coins.c[..m - 2].to_vec();
            idx.push(alpha);
            plan.push(PlannedQuery {
                role: Role::Proof,
                index: OracleIndex::Point(idx),
            });
        }
        for alpha in f.elements() {
            let mut idx = coins.c.clone();
            idx.push(alpha);
            plan.push(PlannedQuery {
                role: Role::Input,
                index: OracleIndex::Point(idx),
            });
        }
        plan
    }

    /// Full-line query plan of the input LDT for these coins.
    pub fn plan_ldt(&self, coins: &RscCoins) -> Vec<PlannedQuery> {
        let f = &self.inst.field;
        let mut plan = Vec::new();
        for rep in 0..self.ldt_reps {
            let mut rng = crate::ldt::rep_rng(coins.ldt_seed, rep as u64);
            let line = crate::ldt::Line::sample(f, self.inst.m, &mut rng);
            for t in f.elements() {
                plan.push(PlannedQuery {
                    role: Role::Input,
                    index: OracleIndex::Point(line.point_at(f, t)),
                });
            }
        }
        plan
    }

    /// Pure decision over the axis answers: the bundled column degree checks
    /// and the telescoping sum checks (the input LDT is decided separately).
    pub fn decide_axis(
        &self,
        coins: &RscCoins,
        pi_column: &[Symbol],
        f_axis: &[FieldElem],
    ) -> Verdict {
        let inst = &self.inst;
        let f = &inst.field;
        let q = f.order() as usize;
        let m = inst.m;
        let mut failures = Vec::new();

        // Columns: level i table is alpha -> pi(c_1..c_{m-2}, alpha)[i-1].
        let mut columns: Vec<Vec<FieldElem>> = vec![Vec::with_capacity(q); m - 1];
        for sym in pi_column {
            for (i, col) in columns.iter_mut().enumerate() {
                col.push(sym.get(i).copied().unwrap_or(FieldElem::ZERO));
            }
        }
        for (i, col) in columns.iter().enumerate() {
            if !uni_is_low_degree(f, col, inst.d) {
                failures.push(CheckFailure::ColumnDegree { level: i + 1 });
            }
        }

        let sum_over_h = |table: &[FieldElem]| {
            inst.h
                .elems
                .iter()
                .fold(FieldElem::ZERO, |acc, &b| f.add(acc, table[b.0 as usize]))
        };

        if sum_over_h(&columns[0]) != inst.gamma {
            failures.push(CheckFailure::GammaSum);
        }
        for i in 1..m - 1 {
            // sum_b col_{i+1}(b) = col_i(c_i)
            let lhs = sum_over_h(&columns[i]);
            let rhs = columns[i - 1][coins.c[i - 1].0 as usize];
            if lhs != rhs {
                failures.push(CheckFailure::Chain { level: i });
            }
        }
        let lhs = sum_over_h(f_axis);
        let rhs = columns[m - 2][coins.c[m - 2].0 as usize];
        if lhs != rhs {
            failures.push(CheckFailure::InputSum);
        }

        Verdict {
            accept: failures.is_empty(),
            failures,
        }
    }

    /// Run the whole verifier against oracles.
    pub fn verify(
        &self,
        input: &mut OracleHandle,
        proof: &mut OracleHandle,
        coins: &RscCoins,
    ) -> Result<RscOutcome, ScError> {
        let f = &self.inst.field;
        let mut pi_column = Vec::new();
        let mut f_axis = Vec::new();
        for q in self.plan_axis(coins) {
            match q.role {
                Role::Proof => pi_column.push(proof.query(&q.index)?),
                Role::Input => {
                    let sym = input.query(&q.index)?;
                    f_axis.push(sym[0]);
                }
            }
        }
        let mut verdict = self.decide_axis(coins, &pi_column, &f_axis);
        let ldt = ldt_scalar(f, input, &self.ldt_params(), coins.ldt_seed)?;
        if !ldt.accept {
            verdict.failures.push(CheckFailure::InputLowDegree);
            verdict.accept = false;
        }
        Ok(RscOutcome {
            verdict,
            pi_column,
            f_axis,
            ldt,
        })
    }
}

#[derive(Debug)]
pub struct RscOutcome {
    pub verdict: Verdict,
    /// The proof axis read: |F| bundled symbols.
    pub pi_column: Vec<Symbol>,
    /// The input axis read: |F| values.
    pub f_axis: Vec<FieldElem>,
    pub ldt: LdtOutcome,
}

impl RscOutcome {
    /// The sumcheck-subtest view as a string of 2|F| symbols over F^(m-1):
    /// the bundled proof column followed by the input values, each input
    /// value embedded as a width-(m-1) symbol.
    pub fn sumcheck_view(&self, m: usize) -> Vec<Symbol> {
        let mut view = self.pi_column.clone();
        for &v in &self.f_axis {
            let mut sym = vec![FieldElem::ZERO; m - 1];
            sym[0] = v;
            view.push(sym);
        }
        view
    }
}

/// Exact distance of a realized sumcheck view (steps 4-7 only) to the set of
/// accepting views, by enumerating chains of degree-<= d univariate
/// polynomials satisfying the telescoping constraints. The input part of an
/// accepting view is free apart from its H-sum, so its repair costs at most
/// one position.
pub fn rsc_view_distance(
    inst: &SumInstance,
    coins: &RscCoins,
    pi_column: &[Symbol],
    f_axis: &[FieldElem],
) -> Result<Ratio<u64>, ScError> {
    let f = &inst.field;
    let q = f.order() as usize;
    let m = inst.m;
    let view_len = 2 * q;

    let per_level = (q as f64).powi((inst.d + 1) as i32);
    if per_level.powi((m - 1) as i32) > 2e8 {
        return Err(ScError::Oracle(OracleError::SearchSpaceTooLarge(format!(
            "{q}^{} polynomial chains",
            (inst.d + 1) * (m - 1)
        ))));
    }

    let mut columns: Vec<Vec<FieldElem>> = vec![Vec::with_capacity(q); m - 1];
    for sym in pi_column {
        for (i, col) in columns.iter_mut().enumerate() {
            col.push(sym.get(i).copied().unwrap_or(FieldElem::ZERO));
        }
    }

    let psums = power_sums(f, &inst.h, inst.d);
    // All degree-<= d polynomials with prescribed H-sum, as value tables.
    let candidates_with_sum = |target: FieldElem| -> Vec<Vec<FieldElem>> {
        let mut out = Vec::new();
        let mut counters = vec![0usize; inst.d + 1];
        loop {
            let coeffs: Vec<FieldElem> =
                counters.iter().map(|&c| FieldElem(c as u32)).collect();
            let hsum = coeffs
                .iter()
                .zip(&psums)
                .fold(FieldElem::ZERO, |acc, (&c, &s)| f.add(acc, f.mul(c, s)));
            if hsum == target {
                out.push(f.elements().map(|x| uni_eval(f, &coeffs, x)).collect());
            }
            if !crate::oracles::odometer_advance(&mut counters, q) {
                break;
            }
        }
        out
    };

    // Depth-first over levels; at the leaf, count the union of per-position
    // symbol mismatches plus the input repair cost.
    struct Ctx<'a> {
        inst: &'a SumInstance,
        coins: &'a RscCoins,
        columns: &'a [Vec<FieldElem>],
        f_axis: &'a [FieldElem],
        q: usize,
    }
    fn descend(
        ctx: &Ctx,
        level: usize,
        chain: &mut Vec<Vec<FieldElem>>,
        candidates_with_sum: &dyn Fn(FieldElem) -> Vec<Vec<FieldElem>>,
        best: &mut usize,
    ) {
        let f = &ctx.inst.field;
        let m = ctx.inst.m;
        if level == m - 1 {
            // Count changed proof symbols: position alpha changes if any
            // level differs there.
            let mut cost = 0usize;
            for alpha in 0..ctx.q {
                if (0..m - 1).any(|i| chain[i][alpha] != ctx.columns[i][alpha]) {
                    cost += 1;
                }
            }
            // Input repair: H-sum must equal the last chain poly at c_{m-1}.
            let target = chain[m - 2][ctx.coins.c[m - 2].0 as usize];
            let hsum = ctx
                .inst
                .h
                .elems
                .iter()
                .fold(FieldElem::ZERO, |acc, &b| {
                    f.add(acc, ctx.f_axis[b.0 as usize])
                });
            if hsum != target {
                cost += 1;
            }
            *best = (*best).min(cost);
            return;
        }
        let target = if level == 0 {
            ctx.inst.gamma
        } else {
            chain[level - 1][ctx.coins.c[level - 1].0 as usize]
        };
        for cand in candidates_with_sum(target) {
            chain.push(cand);
            descend(ctx, level + 1, chain, candidates_with_sum, best);
            chain.pop();
        }
    }

    let ctx = Ctx {
        inst,
        coins,
        columns: &columns,
        f_axis,
        q,
    };
    let mut best = view_len;
    let mut chain = Vec::new();
    descend(&ctx, 0, &mut chain, &candidates_with_sum, &mut best);
    Ok(Ratio::new(best as u64, view_len as u64))
}
