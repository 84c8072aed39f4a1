//! Adaptive query-bounded adversaries and the recording access layer that
//! serves them.
//!
//! An adversary is a pure function of its coins and the answers it has seen,
//! which makes every interaction replayable: the lifted simulator re-runs an
//! adversary against a recorded answer set and must reproduce the same query
//! sequence.

use crate::oracles::{OracleError, OracleHandle, OracleIndex, Symbol, VerifierView};

/// A (possibly adaptive) query-bounded verifier strategy. `next_query` must
/// be deterministic given `(coins, history)`.
pub trait Adversary: Send + Sync {
    fn name(&self) -> &str;
    /// Declared maximum number of queries.
    fn budget(&self) -> u64;
    /// The next query, or None to stop. Pure in (coins, history).
    fn next_query(
        &self,
        coins: u64,
        history: &[(String, OracleIndex, Symbol)],
    ) -> Option<(String, OracleIndex)>;
}

/// Answer source shared by real proofs and simulators.
pub trait AnswerSource {
    fn answer(&mut self, oracle: &str, idx: &OracleIndex) -> Result<Symbol, OracleError>;
}

/// Serve from a set of named oracle handles.
pub struct OracleSet<'a> {
    pub oracles: Vec<(&'a str, &'a mut OracleHandle)>,
}

impl AnswerSource for OracleSet<'_> {
    fn answer(&mut self, oracle: &str, idx: &OracleIndex) -> Result<Symbol, OracleError> {
        for (name, handle) in &mut self.oracles {
            if *name == oracle {
                return handle.query(idx);
            }
        }
        Err(OracleError::OutOfDomain(format!("unknown oracle {oracle}")))
    }
}

/// Run an adversary against an answer source, enforcing its declared budget
/// before any out-of-budget symbol is served.
pub fn run_adversary(
    adv: &dyn Adversary,
    coins: u64,
    source: &mut dyn AnswerSource,
) -> Result<VerifierView, OracleError> {
    let mut history: Vec<(String, OracleIndex, Symbol)> = Vec::new();
    let mut served = 0u64;
    while let Some((oracle, idx)) = adv.next_query(coins, &history) {
        if served + 1 > adv.budget() {
            return Err(OracleError::BudgetExceeded {
                budget: adv.budget(),
                attempted: served + 1,
            });
        }
        let answer = source.answer(&oracle, &idx)?;
        served += 1;
        history.push((oracle, idx, answer));
    }
    Ok(VerifierView {
        randomness: coins.to_le_bytes().to_vec(),
        answers: history,
    })
}

/// Replay an adversary, answering its queries from a recorded map. Errors
/// with MissingAnswer if the replay diverges from the recording.
pub fn replay_adversary(
    adv: &dyn Adversary,
    coins: u64,
    recorded: &std::collections::HashMap<(String, OracleIndex), Symbol>,
) -> Result<VerifierView, OracleError> {
    let mut history: Vec<(String, OracleIndex, Symbol)> = Vec::new();
    while let Some((oracle, idx)) = adv.next_query(coins, &history) {
        let key = (oracle.clone(), idx.clone());
        let answer = recorded
            .get(&key)
            .cloned()
            .ok_or_else(|| OracleError::MissingAnswer(format!("{key:?}")))?;
        history.push((oracle, idx, answer));
    }
    Ok(VerifierView {
        randomness: coins.to_le_bytes().to_vec(),
        answers: history,
    })
}
