//! Uniform abstraction for proof and input oracles: domains, alphabets,
//! query budgets and counters, transcripts, verifier views, and distance
//! from a view to the accepting set of a decision predicate.
//!
//! Simulator-backed oracles expose the same handle interface as table-backed
//! ones, so a malicious verifier cannot tell the backing kinds apart by API
//! shape.

use crate::field::FieldElem;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("query index outside the oracle domain: {0}")]
    OutOfDomain(String),
    #[error("query budget exhausted: budget {budget}, attempted query {attempted}")]
    BudgetExceeded { budget: u64, attempted: u64 },
    #[error("duplicate oracle id {0} in concatenation")]
    DuplicateId(String),
    #[error("symbol vectors have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("search space too large: {0}")]
    SearchSpaceTooLarge(String),
    #[error("simulator replay is missing an answer for {0}")]
    MissingAnswer(String),
    #[error("backend error: {0}")]
    Backend(String),
}

/// A proof symbol: a fixed-width tuple of field elements (bits are carried
/// as 0/1 elements).
pub type Symbol = Vec<FieldElem>;

/// Index into an oracle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OracleIndex {
    /// A point of a product grid over the field.
    Point(Vec<FieldElem>),
    /// A flat position in an index range.
    Flat(u64),
    /// An index of a named sub-oracle inside a concatenation.
    Sub(String, Box<OracleIndex>),
}

impl OracleIndex {
    pub fn point(p: &[FieldElem]) -> Self {
        OracleIndex::Point(p.to_vec())
    }

    pub fn sub(id: &str, idx: OracleIndex) -> Self {
        OracleIndex::Sub(id.to_string(), Box::new(idx))
    }
}

/// Domain descriptor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    /// All of F^m for the ambient field.
    Grid { m: usize, field_order: u64 },
    Range { len: u64 },
    Concat(Vec<(String, Domain)>),
}

impl Domain {
    fn contains(&self, idx: &OracleIndex) -> bool {
        match (self, idx) {
            (Domain::Grid { m, field_order }, OracleIndex::Point(p)) => {
                p.len() == *m && p.iter().all(|e| (e.0 as u64) < *field_order)
            }
            (Domain::Range { len }, OracleIndex::Flat(i)) => i < len,
            (Domain::Concat(parts), OracleIndex::Sub(id, inner)) => parts
                .iter()
                .any(|(pid, d)| pid == id && d.contains(inner)),
            _ => false,
        }
    }
}

/// Alphabet descriptor: tuples of field elements, or raw bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alphabet {
    Elems { width: usize },
    Bits { width: usize },
}

impl Alphabet {
    pub fn width(&self) -> usize {
        match self {
            Alphabet::Elems { width } | Alphabet::Bits { width } => *width,
        }
    }
}

/// One recorded query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub oracle: String,
    pub index: OracleIndex,
    pub answer: Symbol,
    pub seq: u64,
}

pub enum Backing {
    /// Dense table, indexed by `Flat` or row-major `Point`.
    Table(Vec<Symbol>),
    /// Deterministic lazy function.
    Lazy(Box<dyn Fn(&OracleIndex) -> Result<Symbol, OracleError> + Send>),
    /// Stateful callback (simulators). Session-confined.
    Callback(Box<dyn FnMut(&OracleIndex) -> Result<Symbol, OracleError> + Send>),
    /// Concatenation of named sub-oracles.
    Concat(Vec<OracleHandle>),
}

impl std::fmt::Debug for Backing {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backing::Table(t) => write!(fm, "Table({} entries)", t.len()),
            Backing::Lazy(_) => write!(fm, "Lazy"),
            Backing::Callback(_) => write!(fm, "Callback"),
            Backing::Concat(parts) => write!(fm, "Concat({} parts)", parts.len()),
        }
    }
}

/// A queryable oracle with per-handle counters and an optional budget.
#[derive(Debug)]
pub struct OracleHandle {
    pub id: String,
    pub domain: Domain,
    pub alphabet: Alphabet,
    backing: Backing,
    pub served: u64,
    pub budget: Option<u64>,
    /// Opt-in transcript; kept off on honest-path benchmarks.
    pub transcript: Option<Vec<QueryRecord>>,
}

impl OracleHandle {
    pub fn new(id: &str, domain: Domain, alphabet: Alphabet, backing: Backing) -> Self {
        OracleHandle {
            id: id.to_string(),
            domain,
            alphabet,
            backing,
            served: 0,
            budget: None,
            transcript: None,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn recording(mut self) -> Self {
        self.transcript = Some(Vec::new());
        self
    }

    /// Dense table oracle over F^m, row-major in the point coordinates.
    pub fn table_over_grid(
        id: &str,
        m: usize,
        field_order: u64,
        values: Vec<Symbol>,
        alphabet: Alphabet,
    ) -> Self {
        debug_assert_eq!(values.len() as u64, field_order.pow(m as u32));
        OracleHandle::new(
            id,
            Domain::Grid { m, field_order },
            alphabet,
            Backing::Table(values),
        )
    }

    pub fn lazy_over_grid(
        id: &str,
        m: usize,
        field_order: u64,
        alphabet: Alphabet,
        f: impl Fn(&[FieldElem]) -> Symbol + Send + 'static,
    ) -> Self {
        OracleHandle::new(
            id,
            Domain::Grid { m, field_order },
            alphabet,
            Backing::Lazy(Box::new(move |idx| match idx {
                OracleIndex::Point(p) => Ok(f(p)),
                other => Err(OracleError::OutOfDomain(format!("{other:?}"))),
            })),
        )
    }

    /// Total queries served, including across concatenated parts.
    pub fn total_served(&self) -> u64 {
        self.served
    }

    pub fn query(&mut self, idx: &OracleIndex) -> Result<Symbol, OracleError> {
        if !self.domain.contains(idx) {
            return Err(OracleError::OutOfDomain(format!("{idx:?}")));
        }
        if let Some(b) = self.budget {
            if self.served + 1 > b {
                return Err(OracleError::BudgetExceeded {
                    budget: b,
                    attempted: self.served + 1,
                });
            }
        }
        let answer = match &mut self.backing {
            Backing::Table(values) => {
                let flat = flat_of(&self.domain, idx)
                    .ok_or_else(|| OracleError::OutOfDomain(format!("{idx:?}")))?;
                values
                    .get(flat as usize)
                    .cloned()
                    .ok_or_else(|| OracleError::OutOfDomain(format!("{idx:?}")))?
            }
            Backing::Lazy(f) => f(idx)?,
            Backing::Callback(f) => f(idx)?,
            Backing::Concat(parts) => match idx {
                OracleIndex::Sub(id, inner) => {
                    let part = parts
                        .iter_mut()
                        .find(|p| &p.id == id)
                        .ok_or_else(|| OracleError::OutOfDomain(format!("unknown sub-oracle {id}")))?;
                    part.query(inner)?
                }
                other => return Err(OracleError::OutOfDomain(format!("{other:?}"))),
            },
        };
        self.served += 1;
        if let Some(t) = &mut self.transcript {
            t.push(QueryRecord {
                oracle: self.id.clone(),
                index: idx.clone(),
                answer: answer.clone(),
                seq: self.served,
            });
        }
        Ok(answer)
    }

    /// Per-part served counters of a concatenation.
    pub fn part_counters(&self) -> Vec<(String, u64)> {
        match &self.backing {
            Backing::Concat(parts) => parts.iter().map(|p| (p.id.clone(), p.served)).collect(),
            _ => vec![(self.id.clone(), self.served)],
        }
    }

    /// Dump the transcript as JSON lines, one record per query.
    pub fn transcript_jsonl(&self) -> String {
        let mut out = String::new();
        if let Some(t) = &self.transcript {
            for rec in t {
                out.push_str(&serde_json::to_string(rec).expect("serializable"));
                out.push('\n');
            }
        }
        out
    }
}

fn flat_of(domain: &Domain, idx: &OracleIndex) -> Option<u64> {
    match (domain, idx) {
        (Domain::Grid { m, field_order }, OracleIndex::Point(p)) if p.len() == *m => {
            let mut acc = 0u64;
            for e in p {
                acc = acc * field_order + e.0 as u64;
            }
            Some(acc)
        }
        (Domain::Range { .. }, OracleIndex::Flat(i)) => Some(*i),
        _ => None,
    }
}

/// Concatenate oracles into a composite addressed by (sub-id, index).
pub fn oracle_concat(parts: Vec<OracleHandle>) -> Result<OracleHandle, OracleError> {
    let mut seen = std::collections::HashSet::new();
    for p in &parts {
        if !seen.insert(p.id.clone()) {
            return Err(OracleError::DuplicateId(p.id.clone()));
        }
    }
    let domain = Domain::Concat(parts.iter().map(|p| (p.id.clone(), p.domain.clone())).collect());
    let alphabet = parts
        .first()
        .map(|p| p.alphabet)
        .unwrap_or(Alphabet::Elems { width: 1 });
    Ok(OracleHandle::new(
        "concat",
        domain,
        alphabet,
        Backing::Concat(parts),
    ))
}

/// Exact relative Hamming distance between equal-length symbol vectors.
pub fn view_distance(a: &[Symbol], b: &[Symbol]) -> Result<Ratio<u64>, OracleError> {
    if a.len() != b.len() {
        return Err(OracleError::LengthMismatch(a.len(), b.len()));
    }
    let diff = a.iter().zip(b).filter(|(x, y)| x != y).count();
    Ok(Ratio::new(diff as u64, a.len() as u64))
}

/// A verifier's view: its random coins and the ordered answers it received.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierView {
    pub randomness: Vec<u8>,
    pub answers: Vec<(String, OracleIndex, Symbol)>,
}

impl VerifierView {
    /// Canonical byte encoding for hashing and histogram binning.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("serializable")
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        self.answers.iter().map(|(_, _, s)| s.clone()).collect()
    }
}

/// Pure decision predicate over an answer vector, bound to its instance and
/// randomness at construction time.
pub struct AcceptPredicate {
    decide: Box<dyn Fn(&[Symbol]) -> bool + Send + Sync>,
}

impl AcceptPredicate {
    pub fn new(decide: impl Fn(&[Symbol]) -> bool + Send + Sync + 'static) -> Self {
        AcceptPredicate {
            decide: Box::new(decide),
        }
    }

    pub fn accepts(&self, answers: &[Symbol]) -> bool {
        (self.decide)(answers)
    }
}

/// Result of a distance computation; `exact` is false for structured upper
/// bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub distance: Ratio<u64>,
    pub exact: bool,
}

/// Exact minimum distance of `view` to the accepting set by exhausting all
/// answer vectors over the given symbol alphabet. The empty accepting set has
/// distance 1 by convention.
pub fn distance_to_accepting_exhaustive(
    view: &[Symbol],
    pred: &AcceptPredicate,
    alphabet: &[Symbol],
) -> Result<DistanceResult, OracleError> {
    let n = view.len();
    let a = alphabet.len();
    let space = (a as f64).powi(n as i32);
    if space > (1u64 << 24) as f64 {
        return Err(OracleError::SearchSpaceTooLarge(format!(
            "{a}^{n} answer vectors"
        )));
    }
    if pred.accepts(view) {
        return Ok(DistanceResult {
            distance: Ratio::new(0, n as u64),
            exact: true,
        });
    }
    let mut best: Option<usize> = None;
    let mut counters = vec![0usize; n];
    let mut candidate: Vec<Symbol> = vec![alphabet[0].clone(); n];
    loop {
        if pred.accepts(&candidate) {
            let d = candidate
                .iter()
                .zip(view)
                .filter(|(x, y)| x != y)
                .count();
            best = Some(best.map_or(d, |b| b.min(d)));
        }
        if !odometer_advance(&mut counters, a) {
            break;
        }
        for (j, &c) in counters.iter().enumerate() {
            candidate[j] = alphabet[c].clone();
        }
    }
    Ok(match best {
        Some(d) => DistanceResult {
            distance: Ratio::new(d as u64, n as u64),
            exact: true,
        },
        // Rejecting-everything predicate: distance 1 by convention.
        None => DistanceResult {
            distance: Ratio::new(1, 1),
            exact: true,
        },
    })
}

/// Advance a mixed-radix counter; returns false when it wraps to all zeros.
pub fn odometer_advance(counters: &mut [usize], radix: usize) -> bool {
    for j in (0..counters.len()).rev() {
        counters[j] += 1;
        if counters[j] < radix {
            return true;
        }
        counters[j] = 0;
    }
    false
}

/// Upper bound on the distance from `view` to accepting, scanning candidate
/// repairs supplied by a per-verifier enumerator. Flagged non-exact.
pub fn distance_to_accepting_structured(
    view: &[Symbol],
    pred: &AcceptPredicate,
    candidates: impl Iterator<Item = Vec<Symbol>>,
) -> DistanceResult {
    let n = view.len();
    if pred.accepts(view) {
        return DistanceResult {
            distance: Ratio::new(0, n as u64),
            exact: true,
        };
    }
    let mut best = n; // all-positions repair bound
    for cand in candidates {
        if cand.len() == n && pred.accepts(&cand) {
            let d = cand.iter().zip(view).filter(|(x, y)| x != y).count();
            best = best.min(d);
        }
    }
    DistanceResult {
        distance: Ratio::new(best as u64, n as u64).min(Ratio::new(1, 1)),
        exact: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(v: u32) -> Symbol {
        vec![FieldElem(v)]
    }

    #[test]
    fn table_lookup_and_counter() {
        let mut o = OracleHandle::new(
            "t",
            Domain::Range { len: 3 },
            Alphabet::Elems { width: 1 },
            Backing::Table(vec![sym(5), sym(7), sym(9)]),
        );
        assert_eq!(o.query(&OracleIndex::Flat(1)).unwrap(), sym(7));
        assert_eq!(o.served, 1);
    }

    #[test]
    fn budget_enforced_before_serving() {
        let mut o = OracleHandle::new(
            "t",
            Domain::Range { len: 10 },
            Alphabet::Elems { width: 1 },
            Backing::Table((0..10).map(sym).collect()),
        )
        .with_budget(2);
        o.query(&OracleIndex::Flat(0)).unwrap();
        o.query(&OracleIndex::Flat(1)).unwrap();
        assert_eq!(
            o.query(&OracleIndex::Flat(2)).unwrap_err(),
            OracleError::BudgetExceeded {
                budget: 2,
                attempted: 3
            }
        );
        assert_eq!(o.served, 2);
    }

    #[test]
    fn lazy_function_oracle() {
        use crate::field::{field_create, FieldSpec};
        let f = field_create(&FieldSpec::prime(5)).unwrap();
        let mut o = OracleHandle::lazy_over_grid("sq", 1, 5, Alphabet::Elems { width: 1 }, {
            let f = f.clone();
            move |p| vec![f.mul(p[0], p[0])]
        });
        assert_eq!(o.query(&OracleIndex::point(&[FieldElem(3)])).unwrap(), sym(4));
    }

    #[test]
    fn concat_dispatch_and_counters() {
        let a = OracleHandle::new(
            "A",
            Domain::Range { len: 2 },
            Alphabet::Elems { width: 1 },
            Backing::Table(vec![sym(1), sym(2)]),
        );
        let b = OracleHandle::new(
            "B",
            Domain::Range { len: 2 },
            Alphabet::Elems { width: 1 },
            Backing::Table(vec![sym(3), sym(4)]),
        );
        let mut c = oracle_concat(vec![a, b]).unwrap();
        assert_eq!(
            c.query(&OracleIndex::sub("B", OracleIndex::Flat(0))).unwrap(),
            sym(3)
        );
        assert_eq!(
            c.query(&OracleIndex::sub("A", OracleIndex::Flat(1))).unwrap(),
            sym(2)
        );
        // unknown id
        assert!(matches!(
            c.query(&OracleIndex::sub("C", OracleIndex::Flat(0))),
            Err(OracleError::OutOfDomain(_))
        ));
        // aggregate equals sum of parts
        let parts = c.part_counters();
        let sum: u64 = parts.iter().map(|(_, n)| n).sum();
        assert_eq!(c.total_served(), sum);
    }

    #[test]
    fn duplicate_id_rejected() {
        let a = OracleHandle::new(
            "X",
            Domain::Range { len: 1 },
            Alphabet::Elems { width: 1 },
            Backing::Table(vec![sym(0)]),
        );
        let b = OracleHandle::new(
            "X",
            Domain::Range { len: 1 },
            Alphabet::Elems { width: 1 },
            Backing::Table(vec![sym(0)]),
        );
        assert_eq!(
            oracle_concat(vec![a, b]).unwrap_err(),
            OracleError::DuplicateId("X".into())
        );
    }

    #[test]
    fn view_distance_metric() {
        let a = vec![sym(1), sym(2), sym(3)];
        let b = vec![sym(1), sym(0), sym(3)];
        assert_eq!(view_distance(&a, &a).unwrap(), Ratio::new(0, 3));
        assert_eq!(view_distance(&a, &b).unwrap(), Ratio::new(1, 3));
        assert_eq!(view_distance(&a, &b), view_distance(&b, &a));
        // triangle inequality on random triples
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0);
        for _ in 0..200 {
            let x: Vec<Symbol> = (0..6).map(|_| sym(rng.gen_range(0..3))).collect();
            let y: Vec<Symbol> = (0..6).map(|_| sym(rng.gen_range(0..3))).collect();
            let z: Vec<Symbol> = (0..6).map(|_| sym(rng.gen_range(0..3))).collect();
            let dxy = view_distance(&x, &y).unwrap();
            let dyz = view_distance(&y, &z).unwrap();
            let dxz = view_distance(&x, &z).unwrap();
            assert!(dxz <= dxy + dyz);
        }
        assert!(matches!(
            view_distance(&a, &[sym(0)]),
            Err(OracleError::LengthMismatch(3, 1))
        ));
    }

    #[test]
    fn distance_exhaustive_member_and_empty() {
        let alphabet: Vec<Symbol> = (0..3).map(sym).collect();
        let view = vec![sym(1), sym(2)];
        // already accepting
        let pred = AcceptPredicate::new(|a| a[0] == vec![FieldElem(1)]);
        let d = distance_to_accepting_exhaustive(&view, &pred, &alphabet).unwrap();
        assert_eq!(d.distance, Ratio::new(0, 2));
        // rejecting everything -> distance 1 by convention
        let never = AcceptPredicate::new(|_| false);
        let d = distance_to_accepting_exhaustive(&view, &never, &alphabet).unwrap();
        assert_eq!(d.distance, Ratio::new(1, 1));
        // nontrivial: accept iff both symbols equal 0
        let both = AcceptPredicate::new(|a| a.iter().all(|s| s == &vec![FieldElem(0)]));
        let d = distance_to_accepting_exhaustive(&view, &both, &alphabet).unwrap();
        assert_eq!(d.distance, Ratio::new(2, 2));
    }

    #[test]
    fn distance_search_space_guard() {
        let alphabet: Vec<Symbol> = (0..256).map(sym).collect();
        let view: Vec<Symbol> = (0..4).map(sym).collect();
        let pred = AcceptPredicate::new(|_| true);
        assert!(matches!(
            distance_to_accepting_exhaustive(&view, &pred, &alphabet),
            Err(OracleError::SearchSpaceTooLarge(_))
        ));
    }

    #[test]
    fn transcript_records_in_order() {
        let mut o = OracleHandle::new(
            "t",
            Domain::Range { len: 3 },
            Alphabet::Elems { width: 1 },
            Backing::Table(vec![sym(5), sym(7), sym(9)]),
        )
        .recording();
        o.query(&OracleIndex::Flat(2)).unwrap();
        o.query(&OracleIndex::Flat(0)).unwrap();
        let dump = o.transcript_jsonl();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].contains("\"seq\":1"));
        assert!(lines[1].contains("\"seq\":2"));
    }
}
