//! Desk-scale laboratory for probabilistically checkable proofs with perfect
//! zero knowledge: robust sumcheck PCPPs, masked zero-knowledge sumcheck
//! PCPPs, an Oracle-3SAT PZK-PCP, zero-knowledge-preserving proof
//! composition, and an experiment harness that measures completeness,
//! soundness, robustness, and view indistinguishability on small finite-field
//! instances.

pub mod field;
pub mod poly;
pub mod polysim;
pub mod oracles;
pub mod ldt;
pub mod sumcheck_rsc;
pub mod sumcheck_zk;
pub mod adversary;
pub mod seeds;
pub mod osat;
pub mod compose;
pub mod systems;

pub use field::{FieldCtx, FieldElem, FieldSpec, SubsetH};
