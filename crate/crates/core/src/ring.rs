//! Coefficient ring descriptors used by formula evaluation, expansion and PIT.
//!
//! A descriptor owns whatever context its elements need (field tables, the
//! dimension of a group algebra, a truncation degree), so elements themselves
//! stay plain data.

use std::fmt::Debug;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::gf2m::{FieldElem, Gf2m};

/// Commutative semiring with a way to embed formula constants.
pub trait Semiring {
    type Elem: Clone + Debug + PartialEq;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    /// Embed a formula constant given as a GF(2^d) bit pattern.
    fn constant(&self, bits: u32) -> Result<Self::Elem>;
}

/// A ring that is also a vector space over a binary field, with hashable
/// elements and a canonical representative of each class of nonzero scalar
/// multiples.
pub trait ScalarRing: Semiring
where
    Self::Elem: Eq + Hash,
{
    fn field(&self) -> &Gf2m;

    /// First nonzero field coordinate of `a` in a fixed order, `None` for zero.
    fn leading(&self, a: &Self::Elem) -> Option<FieldElem>;

    fn scale(&self, a: &Self::Elem, c: FieldElem) -> Self::Elem;

    /// `normalize(a) == normalize(c * a)` for every nonzero scalar `c`, and the
    /// result is zero exactly when `a` is.
    fn normalize(&self, a: &Self::Elem) -> Self::Elem {
        match self.leading(a) {
            None => self.zero(),
            Some(l) => {
                let inv = self.field().inv(l).expect("leading coordinate is nonzero");
                self.scale(a, inv)
            }
        }
    }
}

impl Semiring for Gf2m {
    type Elem = FieldElem;

    fn zero(&self) -> FieldElem {
        0
    }
    fn one(&self) -> FieldElem {
        1
    }
    fn add(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        Gf2m::add(self, *a, *b)
    }
    fn mul(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        Gf2m::mul(self, *a, *b)
    }
    fn is_zero(&self, a: &FieldElem) -> bool {
        *a == 0
    }
    fn constant(&self, bits: u32) -> Result<FieldElem> {
        self.check(bits)
    }
}

impl ScalarRing for Gf2m {
    fn field(&self) -> &Gf2m {
        self
    }
    fn leading(&self, a: &FieldElem) -> Option<FieldElem> {
        (*a != 0).then_some(*a)
    }
    fn scale(&self, a: &FieldElem, c: FieldElem) -> FieldElem {
        self.mul(*a, c)
    }
}

/// The Boolean semiring: tracks only whether a coefficient is present.
///
/// Expanding over `Support` lists every monomial produced by at least one
/// parse tree whose constants are all nonzero, with no cancellation between
/// parse trees.
#[derive(Clone, Copy, Debug, Default)]
pub struct Support;

impl Semiring for Support {
    type Elem = bool;

    fn zero(&self) -> bool {
        false
    }
    fn one(&self) -> bool {
        true
    }
    fn add(&self, a: &bool, b: &bool) -> bool {
        *a || *b
    }
    fn mul(&self, a: &bool, b: &bool) -> bool {
        *a && *b
    }
    fn is_zero(&self, a: &bool) -> bool {
        !*a
    }
    fn constant(&self, bits: u32) -> Result<bool> {
        Ok(bits != 0)
    }
}

/// Nonnegative integer counts, saturating at `u128::MAX`.
///
/// Only the constants 0 and 1 embed; anything else is rejected.
#[derive(Clone, Copy, Debug, Default)]
pub struct Counting;

impl Semiring for Counting {
    type Elem = u128;

    fn zero(&self) -> u128 {
        0
    }
    fn one(&self) -> u128 {
        1
    }
    fn add(&self, a: &u128, b: &u128) -> u128 {
        a.saturating_add(*b)
    }
    fn mul(&self, a: &u128, b: &u128) -> u128 {
        a.saturating_mul(*b)
    }
    fn is_zero(&self, a: &u128) -> bool {
        *a == 0
    }
    fn constant(&self, bits: u32) -> Result<u128> {
        match bits {
            0 | 1 => Ok(bits as u128),
            _ => Err(Error::InvalidParameter(format!(
                "constant {bits:#x} has no integer counterpart"
            ))),
        }
    }
}
