//! Exact arithmetic in prime fields GF(p) and binary extension fields GF(2^e),
//! including canonical subfields GF(2^f) for f dividing e.
//!
//! Binary fields use fixed published reduction polynomials (see
//! [`default_irreducible`]) so that serialized proofs are reproducible across
//! implementations. All fields are capped at order 2^16 and arithmetic is
//! computed (log/antilog tables for binary multiplication), never stored as a
//! full multiplication table.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by field construction and arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is composite")]
    CompositeModulus(u64),
    #[error("reduction polynomial {0:#b} is reducible over GF(2)")]
    ReducibleModulusPolynomial(u64),
    #[error("subfield degree {f} does not divide extension degree {e}")]
    BadSubfieldDegree { f: u32, e: u32 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("field has no configured subfield")]
    NoSubfieldConfigured,
    #[error("field order {0} exceeds the 2^16 cap")]
    OrderTooLarge(u64),
    #[error("element {0} is not canonical for this field")]
    NotCanonical(u64),
}

/// A field element in canonical representation: an integer in `[0, p)` for
/// prime fields, or an `e`-bit vector (packed into the low bits) for binary
/// extension fields.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct FieldElem(pub u32);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);
}

/// Serializable description of a field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldSpec {
    Prime {
        p: u64,
    },
    BinaryExtension {
        e: u32,
        /// Reduction polynomial as a bit-vector; bit `i` is the coefficient
        /// of `x^i`. When absent the published default for `e` is used.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        irreducible_bits: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subfield_f: Option<u32>,
    },
}

impl FieldSpec {
    pub fn prime(p: u64) -> Self {
        FieldSpec::Prime { p }
    }

    pub fn binary(e: u32) -> Self {
        FieldSpec::BinaryExtension {
            e,
            irreducible_bits: None,
            subfield_f: None,
        }
    }

    pub fn binary_with_subfield(e: u32, f: u32) -> Self {
        FieldSpec::BinaryExtension {
            e,
            irreducible_bits: None,
            subfield_f: Some(f),
        }
    }
}

/// Published reduction polynomials per extension degree, chosen low-weight.
/// Bit `i` is the coefficient of `x^i`.
///
/// | e | polynomial |
/// |---|------------|
/// | 1 | x + 1 |
/// | 2 | x^2 + x + 1 |
/// | 3 | x^3 + x + 1 |
/// | 4 | x^4 + x + 1 |
/// | 5 | x^5 + x^2 + 1 |
/// | 6 | x^6 + x + 1 |
/// | 7 | x^7 + x + 1 |
/// | 8 | x^8 + x^4 + x^3 + x + 1 |
/// | 9 | x^9 + x + 1 |
/// | 10 | x^10 + x^3 + 1 |
/// | 11 | x^11 + x^2 + 1 |
/// | 12 | x^12 + x^3 + 1 |
/// | 13 | x^13 + x^4 + x^3 + x + 1 |
/// | 14 | x^14 + x^5 + 1 |
/// | 15 | x^15 + x + 1 |
/// | 16 | x^16 + x^5 + x^3 + x + 1 |
pub fn default_irreducible(e: u32) -> Option<u64> {
    match e {
        1 => Some(0b11),
        2 => Some(0b111),
        3 => Some(0b1011),
        4 => Some(0b1_0011),
        5 => Some(0b10_0101),
        6 => Some(0b100_0011),
        7 => Some(0b1000_0011),
        8 => Some(0b1_0001_1011),
        9 => Some(0b10_0000_0011),
        10 => Some(0b100_0000_1001),
        11 => Some(0b1000_0000_0101),
        12 => Some(0b1_0000_0000_1001),
        13 => Some(0b10_0000_0001_1011),
        14 => Some(0b100_0000_0010_0001),
        15 => Some(0b1000_0000_0000_0011),
        16 => Some(0b1_0000_0000_0010_1011),
        _ => None,
    }
}

/// An ordered subset H of the field, optionally a subfield.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetH {
    pub elems: Vec<FieldElem>,
    pub is_subfield: bool,
}

impl SubsetH {
    /// An arbitrary user-supplied subset; duplicates are rejected by debug
    /// assertion only since callers construct these from trusted enumerations.
    pub fn subset(elems: Vec<FieldElem>) -> Self {
        debug_assert!(distinct(&elems));
        SubsetH {
            elems,
            is_subfield: false,
        }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, x: FieldElem) -> bool {
        self.elems.contains(&x)
    }

    /// Position of `x` in the canonical order.
    pub fn index_of(&self, x: FieldElem) -> Option<usize> {
        self.elems.iter().position(|&h| h == x)
    }
}

fn distinct(v: &[FieldElem]) -> bool {
    let mut seen = std::collections::HashSet::new();
    v.iter().all(|x| seen.insert(*x))
}

#[derive(Debug, Clone)]
enum Repr {
    Prime {
        p: u64,
    },
    Binary {
        e: u32,
        irreducible: u64,
        subfield_f: Option<u32>,
        /// antilog[i] = g^i for a primitive g; length 2^e - 1.
        antilog: Vec<u16>,
        /// log[x] for x != 0; log[0] is unused.
        log: Vec<u16>,
    },
}

/// An immutable field context. Cheap to clone for sharing across tasks; all
/// operations are pure.
#[derive(Debug, Clone)]
pub struct FieldCtx {
    repr: std::sync::Arc<Repr>,
}

/// Create a field from its spec, validating all invariants.
pub fn field_create(spec: &FieldSpec) -> Result<FieldCtx, FieldError> {
    match *spec {
        FieldSpec::Prime { p } => {
            if p > 1 << 16 {
                return Err(FieldError::OrderTooLarge(p));
            }
            if !is_prime(p) {
                return Err(FieldError::CompositeModulus(p));
            }
            Ok(FieldCtx {
                repr: std::sync::Arc::new(Repr::Prime { p }),
            })
        }
        FieldSpec::BinaryExtension {
            e,
            irreducible_bits,
            subfield_f,
        } => {
            if e == 0 || e > 16 {
                return Err(FieldError::OrderTooLarge(1u64 << e.min(63)));
            }
            let irr = irreducible_bits
                .or_else(|| default_irreducible(e))
                .expect("degrees 1..=16 have default polynomials");
            if 64 - irr.leading_zeros() - 1 != e || !gf2_poly_irreducible(irr, e) {
                return Err(FieldError::ReducibleModulusPolynomial(irr));
            }
            if let Some(f) = subfield_f {
                if f == 0 || e % f != 0 {
                    return Err(FieldError::BadSubfieldDegree { f, e });
                }
            }
            let (antilog, log) = build_log_tables(e, irr);
            Ok(FieldCtx {
                repr: std::sync::Arc::new(Repr::Binary {
                    e,
                    irreducible: irr,
                    subfield_f,
                    antilog,
                    log,
                }),
            })
        }
    }
}

impl FieldCtx {
    pub fn order(&self) -> u64 {
        match *self.repr {
            Repr::Prime { p } => p,
            Repr::Binary { e, .. } => 1 << e,
        }
    }

    pub fn spec(&self) -> FieldSpec {
        match *self.repr {
            Repr::Prime { p } => FieldSpec::Prime { p },
            Repr::Binary {
                e,
                irreducible,
                subfield_f,
                ..
            } => FieldSpec::BinaryExtension {
                e,
                irreducible_bits: Some(irreducible),
                subfield_f,
            },
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(*self.repr, Repr::Binary { .. })
    }

    pub fn characteristic(&self) -> u64 {
        match *self.repr {
            Repr::Prime { p } => p,
            Repr::Binary { .. } => 2,
        }
    }

    /// All field elements in canonical order 0, 1, 2, ...
    pub fn elements(&self) -> impl Iterator<Item = FieldElem> + '_ {
        (0..self.order() as u32).map(FieldElem)
    }

    pub fn elem(&self, v: u64) -> FieldElem {
        match *self.repr {
            Repr::Prime { p } => FieldElem((v % p) as u32),
            Repr::Binary { e, .. } => FieldElem((v & ((1 << e) - 1)) as u32),
        }
    }

    pub fn check_canonical(&self, x: FieldElem) -> Result<(), FieldError> {
        if (x.0 as u64) < self.order() {
            Ok(())
        } else {
            Err(FieldError::NotCanonical(x.0 as u64))
        }
    }

    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        match *self.repr {
            Repr::Prime { p } => FieldElem(((a.0 as u64 + b.0 as u64) % p) as u32),
            Repr::Binary { .. } => FieldElem(a.0 ^ b.0),
        }
    }

    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        match *self.repr {
            Repr::Prime { p } => FieldElem(((a.0 as u64 + p - b.0 as u64) % p) as u32),
            Repr::Binary { .. } => FieldElem(a.0 ^ b.0),
        }
    }

    pub fn neg(&self, a: FieldElem) -> FieldElem {
        match *self.repr {
            Repr::Prime { p } => {
                if a.0 == 0 {
                    a
                } else {
                    FieldElem((p - a.0 as u64) as u32)
                }
            }
            Repr::Binary { .. } => a,
        }
    }

    #[inline]
    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        match *self.repr {
            Repr::Prime { p } => FieldElem(((a.0 as u64 * b.0 as u64) % p) as u32),
            Repr::Binary {
                e,
                ref antilog,
                ref log,
                ..
            } => {
                if a.0 == 0 || b.0 == 0 {
                    return FieldElem(0);
                }
                let q1 = (1u32 << e) - 1;
                let mut s = log[a.0 as usize] as u32 + log[b.0 as usize] as u32;
                if s >= q1 {
                    s -= q1;
                }
                FieldElem(antilog[s as usize] as u32)
            }
        }
    }

    pub fn inv(&self, a: FieldElem) -> Result<FieldElem, FieldError> {
        if a.0 == 0 {
            return Err(FieldError::DivisionByZero);
        }
        match *self.repr {
            Repr::Prime { p } => Ok(self.pow(a, p - 2)),
            Repr::Binary {
                e,
                ref antilog,
                ref log,
                ..
            } => {
                let q1 = (1u32 << e) - 1;
                let s = (q1 - log[a.0 as usize] as u32) % q1;
                Ok(FieldElem(antilog[s as usize] as u32))
            }
        }
    }

    pub fn div(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: FieldElem, mut n: u64) -> FieldElem {
        let mut base = a;
        let mut acc = FieldElem::ONE;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            n >>= 1;
        }
        acc
    }

    /// Uniformly random element.
    pub fn random(&self, rng: &mut impl rand::Rng) -> FieldElem {
        let q = self.order();
        // Rejection-free when q is a power of two; otherwise gen_range is
        // already bias-free.
        if q.is_power_of_two() {
            FieldElem(rng.gen::<u32>() & (q as u32 - 1))
        } else {
            FieldElem(rng.gen_range(0..q) as u32)
        }
    }

    /// Fill a slice with uniform elements; bulk path for two-power orders.
    pub fn random_fill(&self, out: &mut [FieldElem], rng: &mut impl rand::Rng) {
        let q = self.order();
        if q.is_power_of_two() {
            let mask = q as u32 - 1;
            let mut buf = vec![0u32; out.len()];
            rng.fill(buf.as_mut_slice());
            for (o, b) in out.iter_mut().zip(buf) {
                *o = FieldElem(b & mask);
            }
        } else {
            for o in out.iter_mut() {
                *o = self.random(rng);
            }
        }
    }

    /// The canonical subfield GF(2^f) as configured at creation: exactly the
    /// elements fixed by x -> x^(2^f), sorted by integer representation.
    pub fn subfield_elements(&self) -> Result<SubsetH, FieldError> {
        match *self.repr {
            Repr::Prime { .. } => Err(FieldError::NoSubfieldConfigured),
            Repr::Binary { subfield_f, .. } => {
                let f = subfield_f.ok_or(FieldError::NoSubfieldConfigured)?;
                let frob = 1u64 << f;
                let mut elems: Vec<FieldElem> = self
                    .elements()
                    .filter(|&x| self.pow(x, frob) == x)
                    .collect();
                elems.sort();
                debug_assert_eq!(elems.len(), 1 << f);
                Ok(SubsetH {
                    elems,
                    is_subfield: true,
                })
            }
        }
    }

    /// The subset {0, 1}, valid in any field.
    pub fn h01(&self) -> SubsetH {
        SubsetH {
            elems: vec![FieldElem::ZERO, FieldElem::ONE],
            is_subfield: self.characteristic() == 2,
        }
    }
}

/// Dispatch for the four basic arithmetic ops, as addressed by reports and
/// the CLI.
pub fn fe_arith(ctx: &FieldCtx, op: ArithOp, a: FieldElem, b: FieldElem) -> FieldElem {
    match op {
        ArithOp::Add => ctx.add(a, b),
        ArithOp::Sub => ctx.sub(a, b),
        ArithOp::Mul => ctx.mul(a, b),
        ArithOp::Neg => ctx.neg(a),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Neg,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Multiply two GF(2)[x] polynomials given as bit-vectors.
fn gf2_poly_mul(a: u64, b: u64) -> u128 {
    let mut acc = 0u128;
    let mut b = b as u128;
    let mut a = a;
    while a != 0 {
        if a & 1 == 1 {
            acc ^= b;
        }
        a >>= 1;
        b <<= 1;
    }
    acc
}

fn gf2_poly_deg(a: u128) -> i32 {
    127 - a.leading_zeros() as i32
}

/// Reduce a GF(2)[x] polynomial modulo `m`.
fn gf2_poly_mod(mut a: u128, m: u64) -> u64 {
    let dm = gf2_poly_deg(m as u128);
    while gf2_poly_deg(a) >= dm {
        a ^= (m as u128) << (gf2_poly_deg(a) - dm);
    }
    a as u64
}

fn gf2_poly_mulmod(a: u64, b: u64, m: u64) -> u64 {
    gf2_poly_mod(gf2_poly_mul(a, b), m)
}

fn gf2_poly_gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = gf2_poly_mod(a as u128, b);
        a = b;
        b = r;
    }
    a
}

/// x^(2^k) mod m, by repeated squaring of x.
fn gf2_frobenius_iter(k: u32, m: u64) -> u64 {
    let mut x = gf2_poly_mod(0b10u128, m); // the polynomial x
    for _ in 0..k {
        x = gf2_poly_mulmod(x, x, m);
    }
    x
}

/// Degree-e polynomial over GF(2) is irreducible iff x^(2^e) = x (mod f) and
/// gcd(x^(2^(e/p)) - x mod f, f) = 1 for every prime p dividing e.
fn gf2_poly_irreducible(f: u64, e: u32) -> bool {
    if gf2_frobenius_iter(e, f) != gf2_poly_mod(0b10, f) {
        return false;
    }
    let mut rem = e;
    let mut p = 2;
    while p <= rem {
        if rem % p == 0 {
            let sub = gf2_frobenius_iter(e / p, f) ^ gf2_poly_mod(0b10, f);
            if gf2_poly_gcd(f, sub) != 1 {
                return false;
            }
            while rem % p == 0 {
                rem /= p;
            }
        }
        p += 1;
    }
    true
}

/// Build antilog/log tables from the smallest primitive element.
fn build_log_tables(e: u32, irr: u64) -> (Vec<u16>, Vec<u16>) {
    let q = 1usize << e;
    if e == 1 {
        return (vec![1], vec![0, 0]);
    }
    'candidate: for g in 2..q as u64 {
        let mut antilog = vec![0u16; q - 1];
        let mut log = vec![0u16; q];
        let mut acc = 1u64;
        for i in 0..q - 1 {
            if acc == 1 && i > 0 {
                continue 'candidate; // order of g divides i < q-1
            }
            antilog[i] = acc as u16;
            log[acc as usize] = i as u16;
            acc = gf2_poly_mulmod(acc, g, irr);
        }
        if acc == 1 {
            return (antilog, log);
        }
    }
    unreachable!("every finite field has a primitive element");
}
