//! Arithmetic in GF(2^d) for 1 <= d <= 16.
//!
//! Elements are bit patterns in the polynomial basis {1, X, ..., X^(d-1)}
//! reduced modulo a fixed irreducible polynomial. Multiplication goes through
//! log/antilog tables built from the smallest primitive element; the
//! carry-less reference path (`clmul` + `poly_mod`) is kept public so tests can
//! check the tables against it.

use std::fmt;

use crate::error::{Error, Result};

/// A field element as a raw bit pattern. Always `< 2^d` for the field it belongs to.
pub type FieldElem = u16;

pub const MAX_FIELD_BITS: u32 = 16;

/// Carry-less product of two polynomials over GF(2).
pub fn clmul(a: u32, b: u32) -> u64 {
    let mut acc = 0u64;
    let mut b = b;
    let mut shift = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= (a as u64) << shift;
        }
        b >>= 1;
        shift += 1;
    }
    acc
}

fn degree(p: u64) -> i32 {
    63 - p.leading_zeros() as i32
}

/// Remainder of `a` modulo `m` as polynomials over GF(2). `m` must be nonzero.
pub fn poly_mod(mut a: u64, m: u64) -> u64 {
    assert!(m != 0, "modulus must be nonzero");
    let dm = degree(m);
    while a != 0 && degree(a) >= dm {
        a ^= m << (degree(a) - dm);
    }
    a
}

/// Trial division by every polynomial of degree 1..=deg/2.
pub fn is_irreducible(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let d = degree(p as u64);
    for div_deg in 1..=(d / 2) {
        for div in (1u64 << div_deg)..(1u64 << (div_deg + 1)) {
            if poly_mod(p as u64, div) == 0 {
                return false;
            }
        }
    }
    true
}

/// Numerically smallest irreducible polynomial of exact degree `d`.
pub fn smallest_irreducible(d: u32) -> Result<u32> {
    if d == 0 || d > MAX_FIELD_BITS {
        return Err(Error::FieldTooWide { d });
    }
    (1u32 << d..1u32 << (d + 1))
        .find(|&p| is_irreducible(p))
        .ok_or_else(|| Error::InvalidParameter(format!("no irreducible of degree {d}")))
}

/// Width and modulus of a binary extension field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldParams {
    pub d: u32,
    pub irr: u32,
}

impl FieldParams {
    pub fn new(d: u32, irr: u32) -> Result<Self> {
        if d == 0 || d > MAX_FIELD_BITS {
            return Err(Error::FieldTooWide { d });
        }
        if degree(irr as u64) != d as i32 || !is_irreducible(irr) {
            return Err(Error::InvalidParameter(format!(
                "{irr:#b} is not an irreducible polynomial of degree {d}"
            )));
        }
        Ok(Self { d, irr })
    }

    /// The field of width `d` with the smallest irreducible modulus.
    pub fn with_width(d: u32) -> Result<Self> {
        let irr = smallest_irreducible(d)?;
        Ok(Self { d, irr })
    }

    pub fn order(&self) -> u32 {
        1 << self.d
    }
}

impl fmt::Display for FieldParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}) mod {:#x}", self.d, self.irr)
    }
}

/// Field width for degree-`k` testing on a formula with `s` gates:
/// `d = ceil(log2(k(s+1)+1)) + 1`.
pub fn choose_field(k: u32, s: u32) -> Result<FieldParams> {
    if k == 0 || s == 0 {
        return Err(Error::InvalidParameter("choose_field needs k >= 1 and s >= 1".into()));
    }
    let target = (k as u64) * (s as u64 + 1) + 1;
    let ceil_log = 64 - (target - 1).leading_zeros();
    let d = ceil_log + 1;
    if d > MAX_FIELD_BITS {
        return Err(Error::FieldTooWide { d });
    }
    FieldParams::with_width(d)
}

/// GF(2^d) with precomputed log/antilog tables.
#[derive(Clone, Debug)]
pub struct Gf2m {
    params: FieldParams,
    exp: Vec<FieldElem>,
    log: Vec<u32>,
}

impl PartialEq for Gf2m {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
    }
}
impl Eq for Gf2m {}

impl Gf2m {
    pub fn new(params: FieldParams) -> Self {
        let order = params.order();
        let group = order - 1;
        let generator = (1..order)
            .find(|&g| multiplicative_order(g, &params) == group)
            .expect("every finite field has a primitive element");
        let mut exp = vec![0 as FieldElem; 2 * group as usize];
        let mut log = vec![0u32; order as usize];
        let mut x = 1u32;
        for i in 0..group {
            exp[i as usize] = x as FieldElem;
            exp[(i + group) as usize] = x as FieldElem;
            log[x as usize] = i;
            x = reference_mul(x, generator, &params);
        }
        Self { params, exp, log }
    }

    pub fn with_width(d: u32) -> Result<Self> {
        Ok(Self::new(FieldParams::with_width(d)?))
    }

    pub fn params(&self) -> FieldParams {
        self.params
    }

    pub fn d(&self) -> u32 {
        self.params.d
    }

    pub fn contains(&self, a: u32) -> bool {
        a < self.params.order()
    }

    pub fn check(&self, a: u32) -> Result<FieldElem> {
        if self.contains(a) {
            Ok(a as FieldElem)
        } else {
            Err(Error::NotInField { value: a, d: self.params.d })
        }
    }

    #[inline]
    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
    }

    pub fn inv(&self, a: FieldElem) -> Result<FieldElem> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        let group = self.params.order() - 1;
        Ok(self.exp[((group - self.log[a as usize]) % group) as usize])
    }

    /// `X^e mod irr` as a field element.
    pub fn x_pow(&self, e: u32) -> FieldElem {
        let mut acc = 1u32;
        for _ in 0..e {
            acc = poly_mod((acc as u64) << 1, self.params.irr as u64) as u32;
        }
        acc as FieldElem
    }

    /// Checked addition: both operands must belong to this field.
    pub fn gf_add(&self, a: u32, b: u32) -> Result<FieldElem> {
        Ok(self.add(self.check(a)?, self.check(b)?))
    }

    pub fn gf_mul(&self, a: u32, b: u32) -> Result<FieldElem> {
        Ok(self.mul(self.check(a)?, self.check(b)?))
    }

    pub fn gf_inv(&self, a: u32) -> Result<FieldElem> {
        self.inv(self.check(a)?)
    }
}

/// Carry-less multiply followed by long division.
pub fn reference_mul(a: u32, b: u32, params: &FieldParams) -> u32 {
    poly_mod(clmul(a, b), params.irr as u64) as u32
}

fn multiplicative_order(g: u32, params: &FieldParams) -> u32 {
    let mut x = g;
    let mut ord = 1;
    while x != 1 {
        x = reference_mul(x, g, params);
        ord += 1;
        if ord > params.order() {
            return 0;
        }
    }
    ord
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf8() -> Gf2m {
        Gf2m::new(FieldParams::new(3, 0b1011).unwrap())
    }

    #[test]
    fn add_is_xor() {
        let f = gf8();
        assert_eq!(f.gf_add(0b011, 0b101).unwrap(), 0b110);
        for a in 0..8u16 {
            assert_eq!(f.add(a, a), 0);
            assert_eq!(f.add(a, 0), a);
        }
    }

    #[test]
    fn mul_small_cases() {
        let f = gf8();
        // X * X^2 = X^3 = X + 1
        assert_eq!(f.gf_mul(0b010, 0b100).unwrap(), 0b011);
        for a in 0..8u16 {
            assert_eq!(f.mul(1, a), a);
            assert_eq!(f.mul(0, a), 0);
        }
    }

    #[test]
    fn inverse_small_cases() {
        let f = gf8();
        assert_eq!(f.gf_inv(1).unwrap(), 1);
        assert_eq!(f.gf_inv(0b010).unwrap(), 0b101);
        assert_eq!(f.gf_inv(0), Err(Error::ZeroInverse));
    }

    #[test]
    fn out_of_field_rejected() {
        let f = gf8();
        assert!(matches!(f.gf_add(8, 1), Err(Error::NotInField { .. })));
        assert!(matches!(f.gf_mul(1, 9), Err(Error::NotInField { .. })));
    }

    #[test]
    fn tables_match_reference_and_inverses_exhaustive() {
        for d in 1..=8 {
            let f = Gf2m::with_width(d).unwrap();
            let p = f.params();
            for a in 0..p.order() {
                for b in 0..p.order() {
                    assert_eq!(
                        f.mul(a as u16, b as u16) as u32,
                        reference_mul(a, b, &p),
                        "d={d} a={a} b={b}"
                    );
                }
                if a != 0 {
                    let inv = f.inv(a as u16).unwrap();
                    assert_eq!(f.mul(a as u16, inv), 1);
                }
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for d in 1..=4 {
            let f = Gf2m::with_width(d).unwrap();
            let n = f.params().order() as u16;
            for a in 0..n {
                for b in 0..n {
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    // Frobenius: (a+b)^2 = a^2 + b^2
                    let s = f.add(a, b);
                    assert_eq!(f.mul(s, s), f.add(f.mul(a, a), f.mul(b, b)));
                    for c in 0..n {
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn choose_field_widths() {
        assert_eq!(choose_field(2, 3).unwrap().d, 5);
        assert_eq!(choose_field(1, 1).unwrap().d, 3);
        assert!(matches!(choose_field(1000, 100000), Err(Error::FieldTooWide { .. })));
        for (k, s) in [(1, 1), (3, 7), (5, 40), (10, 200), (20, 1000)] {
            let p = choose_field(k, s).unwrap();
            assert!(is_irreducible(p.irr));
            assert_eq!(degree(p.irr as u64), p.d as i32);
        }
    }

    #[test]
    fn irreducible_table_is_stable() {
        // Smallest irreducibles of each degree, computed independently with sympy.
        let expected = [
            0b10, 0b111, 0b1011, 0b10011, 0b100101, 0b1000011, 0b10000011, 0x11b, 0x203, 0x409,
            0x805, 0x1009, 0x201b, 0x4021, 0x8003, 0x1002b,
        ];
        for (i, &irr) in expected.iter().enumerate() {
            let d = i as u32 + 1;
            assert_eq!(smallest_irreducible(d).unwrap(), irr, "d={d}");
        }
    }
}
