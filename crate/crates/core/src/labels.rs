//! The label monoid: principal monomial ideals over a finite prime basis,
//! plus the distinguished zero ideal.
//!
//! A label is stored as the exponent vector of a generator, so two
//! generators differing by a unit are the same value. All exponents are
//! arbitrary precision.

use std::fmt;
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::specialization::Generization;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("label is zero")]
    ZeroLabel,
    #[error("label is a unit")]
    UnitLabel,
    #[error("basis mismatch: expected {expected} primes, found {found}")]
    BasisMismatch { expected: usize, found: usize },
    #[error("invalid prime basis: {0}")]
    InvalidBasis(String),
}

/// Error from the textual label syntax. `offset` is a 0-based character
/// offset into the parsed text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct LabelParseError {
    pub offset: usize,
    pub message: String,
}

/// Ordered list of distinct prime names.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PrimeBasis {
    names: Vec<String>,
}

impl PrimeBasis {
    /// Builds a basis; names must be nonempty, distinct, and free of the
    /// characters used by the label syntax.
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, LabelError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(LabelError::InvalidBasis("a basis needs at least one prime".into()));
        }
        Self::from_names(names)
    }

    /// The empty basis, the base of a generic (smooth) fibre.
    pub fn empty() -> Self {
        PrimeBasis { names: Vec::new() }
    }

    pub(crate) fn from_names(names: Vec<String>) -> Result<Self, LabelError> {
        for (i, n) in names.iter().enumerate() {
            if !is_valid_prime_name(n) {
                return Err(LabelError::InvalidBasis(format!("invalid prime name `{n}`")));
            }
            if names[..i].contains(n) {
                return Err(LabelError::InvalidBasis(format!("duplicate prime `{n}`")));
            }
        }
        Ok(PrimeBasis { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Sub-basis on the given ascending indices.
    pub fn subset(&self, indices: &[usize]) -> PrimeBasis {
        PrimeBasis { names: indices.iter().map(|&i| self.names[i].clone()).collect() }
    }
}

pub(crate) fn is_valid_prime_name(name: &str) -> bool {
    !name.is_empty()
        && name != "zero"
        && name.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
        && !name.chars().all(|c| c.is_ascii_digit())
}

/// Exponent vector of a monomial generator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<BigUint>);

impl Monomial {
    pub fn new(exponents: Vec<BigUint>) -> Self {
        Monomial(exponents)
    }

    pub fn from_u64s(exponents: &[u64]) -> Self {
        Monomial(exponents.iter().map(|&e| BigUint::from(e)).collect())
    }

    pub fn unit(k: usize) -> Self {
        Monomial(vec![BigUint::zero(); k])
    }

    pub fn exponents(&self) -> &[BigUint] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_unit(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn gcd(&self) -> BigUint {
        self.0.iter().fold(BigUint::zero(), |acc, e| acc.gcd(e))
    }

    /// Exponent vector divided by the gcd of its entries.
    pub fn primitive(&self) -> Monomial {
        let g = self.gcd();
        if g.is_zero() {
            return self.clone();
        }
        Monomial(self.0.iter().map(|e| e / &g).collect())
    }

    /// `Some(n)` when `self = n * base` for a positive integer `n`.
    pub fn multiple_of(&self, base: &Monomial) -> Option<BigUint> {
        if self.len() != base.len() || base.is_unit() || self.is_unit() {
            return None;
        }
        let mut factor: Option<BigUint> = None;
        for (a, b) in self.0.iter().zip(&base.0) {
            if b.is_zero() {
                if !a.is_zero() {
                    return None;
                }
                continue;
            }
            let (q, r) = a.div_rem(b);
            if !r.is_zero() || q.is_zero() {
                return None;
            }
            match &factor {
                Some(f) if *f != q => return None,
                Some(_) => {}
                None => factor = Some(q),
            }
        }
        factor
    }

    pub fn scaled(&self, n: &BigUint) -> Monomial {
        Monomial(self.0.iter().map(|e| e * n).collect())
    }

    pub fn signed(&self) -> Vec<BigInt> {
        self.0.iter().map(|e| BigInt::from(e.clone())).collect()
    }
}

/// A principal ideal of the base: zero, or a monomial in the basis primes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Label {
    Zero,
    Mono(Monomial),
}

/// Power-equivalence class of a label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PowerClass {
    Zero,
    Unit,
    Primitive(Monomial),
}

/// The order of a label along a trait; the zero ideal has infinite order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Order {
    Finite(BigUint),
    Infinite,
}

impl Order {
    /// Whether this order divides `diff`; infinity divides only zero.
    pub fn divides(&self, diff: &BigInt) -> bool {
        match self {
            Order::Infinite => diff.is_zero(),
            Order::Finite(o) if o.is_zero() => diff.is_zero(),
            Order::Finite(o) => (diff.abs().magnitude() % o).is_zero(),
        }
    }

    pub fn finite(&self) -> Option<&BigUint> {
        match self {
            Order::Finite(o) => Some(o),
            Order::Infinite => None,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(o) => write!(f, "{o}"),
            Order::Infinite => f.write_str("inf"),
        }
    }
}

impl Label {
    pub fn mono(exponents: &[u64]) -> Label {
        Label::Mono(Monomial::from_u64s(exponents))
    }

    pub fn unit(k: usize) -> Label {
        Label::Mono(Monomial::unit(k))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Label::Zero)
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Label::Mono(m) if m.is_unit())
    }

    pub fn as_mono(&self) -> Option<&Monomial> {
        match self {
            Label::Mono(m) => Some(m),
            Label::Zero => None,
        }
    }

    /// Number of primes, `None` for zero (which lives over every basis).
    pub fn arity(&self) -> Option<usize> {
        self.as_mono().map(Monomial::len)
    }

    pub(crate) fn check_basis(&self, k: usize) -> Result<(), LabelError> {
        match self.arity() {
            Some(found) if found != k => Err(LabelError::BasisMismatch { expected: k, found }),
            _ => Ok(()),
        }
    }

    /// Normal form of the power-equivalence class of a non-unit monomial.
    pub fn primitive(&self) -> Result<Monomial, LabelError> {
        match self {
            Label::Zero => Err(LabelError::ZeroLabel),
            Label::Mono(m) if m.is_unit() => Err(LabelError::UnitLabel),
            Label::Mono(m) => Ok(m.primitive()),
        }
    }

    pub fn class(&self) -> PowerClass {
        match self {
            Label::Zero => PowerClass::Zero,
            Label::Mono(m) if m.is_unit() => PowerClass::Unit,
            Label::Mono(m) => PowerClass::Primitive(m.primitive()),
        }
    }

    /// Whether `a^n1 = b^n2` for some positive integers `n1`, `n2`.
    pub fn power_equivalent(&self, other: &Label) -> Result<bool, LabelError> {
        if let (Some(a), Some(b)) = (self.arity(), other.arity()) {
            if a != b {
                return Err(LabelError::BasisMismatch { expected: a, found: b });
            }
        }
        Ok(self.class() == other.class())
    }

    /// Image of the label at a generization: primes outside the kept set
    /// become units.
    pub fn restrict(&self, g: &Generization) -> Result<Label, LabelError> {
        self.check_basis(g.ambient().len())?;
        Ok(match self {
            Label::Zero => Label::Zero,
            Label::Mono(m) => Label::Mono(Monomial(g.kept().iter().map(|&i| m.0[i].clone()).collect())),
        })
    }

    /// Order of the label's pullback along a trait.
    pub fn ord_under(&self, t: &TraitValuation) -> Result<Order, LabelError> {
        self.check_basis(t.basis().len())?;
        Ok(match self {
            Label::Zero => Order::Infinite,
            Label::Mono(m) => Order::Finite(t.dot(m.exponents())),
        })
    }

    /// Parses `zero`, `1`, or a `*`-separated product of `prime` /
    /// `prime:exp` factors.
    pub fn parse(text: &str, basis: &PrimeBasis) -> Result<Label, LabelParseError> {
        let trimmed = text.trim();
        let lead = text.len() - text.trim_start().len();
        if trimmed == "zero" {
            return Ok(Label::Zero);
        }
        if trimmed == "1" {
            return Ok(Label::unit(basis.len()));
        }
        if trimmed.is_empty() {
            return Err(LabelParseError { offset: lead, message: "empty label".into() });
        }
        let mut exps = vec![BigUint::zero(); basis.len()];
        let mut offset = lead;
        for factor in trimmed.split('*') {
            let (name, exp, exp_offset) = match factor.split_once(':') {
                Some((n, e)) => (n, Some(e), offset + n.chars().count() + 1),
                None => (factor, None, offset),
            };
            let idx = basis.index_of(name).ok_or_else(|| LabelParseError {
                offset,
                message: if name.is_empty() { "missing prime name".into() } else { format!("unknown prime `{name}`") },
            })?;
            let value = match exp {
                None => BigUint::one(),
                Some(e) => parse_positive(e).ok_or_else(|| LabelParseError {
                    offset: exp_offset,
                    message: format!("invalid exponent `{e}`"),
                })?,
            };
            if !exps[idx].is_zero() {
                return Err(LabelParseError { offset, message: format!("prime `{name}` repeated") });
            }
            exps[idx] = value;
            offset += factor.chars().count() + 1;
        }
        Ok(Label::Mono(Monomial(exps)))
    }

    pub fn display<'a>(&'a self, basis: &'a PrimeBasis) -> LabelDisplay<'a> {
        LabelDisplay { label: self, basis }
    }
}

fn parse_positive(text: &str) -> Option<BigUint> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let v: BigUint = text.parse().ok()?;
    (!v.is_zero()).then_some(v)
}

pub struct LabelDisplay<'a> {
    label: &'a Label,
    basis: &'a PrimeBasis,
}

impl fmt::Display for LabelDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.label {
            Label::Zero => f.write_str("zero"),
            Label::Mono(m) => {
                let signed = m.signed();
                write_signed_monomial(f, self.basis, &signed)
            }
        }
    }
}

/// Writes a signed exponent vector in label syntax (`p:2*q:-1`, `1` for
/// the zero vector).
pub(crate) fn write_signed_monomial(f: &mut impl fmt::Write, basis: &PrimeBasis, exps: &[BigInt]) -> fmt::Result {
    let mut first = true;
    for (name, e) in basis.names().iter().zip(exps) {
        if e.is_zero() {
            continue;
        }
        if !first {
            f.write_char('*')?;
        }
        first = false;
        if e.is_one() {
            f.write_str(name)?;
        } else {
            write!(f, "{name}:{e}")?;
        }
    }
    if first {
        f.write_char('1')?;
    }
    Ok(())
}

pub fn format_signed_monomial(basis: &PrimeBasis, exps: &[BigInt]) -> String {
    let mut s = String::new();
    write_signed_monomial(&mut s, basis, exps).expect("writing to a String");
    s
}

/// Orders of the basis primes along a non-degenerate trait.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraitValuation {
    basis: PrimeBasis,
    ord: Vec<BigUint>,
}

impl TraitValuation {
    pub fn new(basis: PrimeBasis, ord: Vec<BigUint>) -> Result<Self, LabelError> {
        if ord.len() != basis.len() {
            return Err(LabelError::BasisMismatch { expected: basis.len(), found: ord.len() });
        }
        if ord.iter().any(Zero::is_zero) {
            return Err(LabelError::InvalidBasis("trait orders must be at least 1".into()));
        }
        Ok(TraitValuation { basis, ord })
    }

    pub fn from_u64s(basis: PrimeBasis, ord: &[u64]) -> Result<Self, LabelError> {
        Self::new(basis, ord.iter().map(|&o| BigUint::from(o)).collect())
    }

    /// Parses `p=1,q=2`; every basis prime must appear exactly once.
    pub fn parse(text: &str, basis: &PrimeBasis) -> Result<Self, LabelParseError> {
        let mut ord: Vec<Option<BigUint>> = vec![None; basis.len()];
        let mut offset = 0;
        for item in text.split(',') {
            let err = |message: String| LabelParseError { offset, message };
            let (name, value) =
                item.split_once('=').ok_or_else(|| err(format!("expected `prime=order`, got `{item}`")))?;
            let idx = basis.index_of(name.trim()).ok_or_else(|| err(format!("unknown prime `{name}`")))?;
            let v = parse_positive(value.trim())
                .ok_or_else(|| err(format!("order of `{name}` must be a positive integer")))?;
            if ord[idx].replace(v).is_some() {
                return Err(err(format!("prime `{name}` repeated")));
            }
            offset += item.chars().count() + 1;
        }
        if let Some(missing) = ord.iter().position(Option::is_none) {
            return Err(LabelParseError {
                offset: text.chars().count(),
                message: format!("missing order for prime `{}`", basis.names()[missing]),
            });
        }
        Ok(TraitValuation { basis: basis.clone(), ord: ord.into_iter().flatten().collect() })
    }

    pub fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    pub fn orders(&self) -> &[BigUint] {
        &self.ord
    }

    pub(crate) fn dot(&self, exps: &[BigUint]) -> BigUint {
        exps.iter().zip(&self.ord).map(|(e, o)| e * o).sum()
    }

    pub(crate) fn dot_signed(&self, exps: &[BigInt]) -> BigInt {
        exps.iter().zip(&self.ord).map(|(e, o)| e * BigInt::from(o.clone())).sum()
    }
}

impl fmt::Display for TraitValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (n, o)) in self.basis.names().iter().zip(&self.ord).enumerate() {
            if i > 0 {
                f.write_char(',')?;
            }
            write!(f, "{n}={o}")?;
        }
        Ok(())
    }
}
