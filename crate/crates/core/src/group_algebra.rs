//! The group algebra F[Z_2^k] over F = GF(2^d), and truncated polynomials over
//! any coefficient ring.
//!
//! An element is a coefficient vector of length `2^k`; index `i` holds the
//! coefficient of the vector whose k-bit pattern is `i`. The group operation is
//! XOR of indices, so multiplication is XOR convolution.
//!
//! Fast multiplication runs the Walsh-Hadamard transform over `i64`. Each field
//! coefficient is split into its `d` bit planes; planes are transformed once,
//! multiplied pointwise into `2d - 1` buckets keyed by `r + s` (plane `r` of the
//! left factor times plane `s` of the right), and each bucket is transformed
//! back. The inverse transform of a bucket equals `2^k` times an integer count,
//! whose parity is the GF(2) coordinate; bucket `e` then contributes `X^e mod irr`.
//! All integer arithmetic wraps: only bit `k` of each result is read, and that
//! bit is exact modulo `2^64` for `k < 64`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gf2m::{FieldElem, Gf2m};
use crate::ring::{ScalarRing, Semiring};

/// Largest supported dimension for the transform path.
pub const MAX_WHT_K: u32 = 20;

/// Dimensions at or below this use the naive product under [`MulMode::Auto`].
pub const NAIVE_CUTOFF_K: u32 = 3;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupAlgebraElem {
    k: u32,
    coeffs: Vec<FieldElem>,
}

impl GroupAlgebraElem {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        &self.coeffs
    }

    pub fn coeff(&self, index: usize) -> FieldElem {
        self.coeffs[index]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Indices with a nonzero coefficient.
    pub fn support(&self) -> Vec<usize> {
        (0..self.coeffs.len()).filter(|&i| self.coeffs[i] != 0).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MulMode {
    /// Naive for `k <= NAIVE_CUTOFF_K`, transform otherwise.
    #[default]
    Auto,
    Naive,
    Wht,
}

/// Work counters. Integer ops count butterfly add/subs, pointwise multiply-adds
/// and the final parity extraction actually performed (all-zero planes are
/// skipped). Naive ops count coefficient products.
#[derive(Debug, Default)]
pub struct OpCounters {
    ga_mults: AtomicU64,
    int_ops: AtomicU64,
    naive_ops: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpSnapshot {
    pub ga_mults: u64,
    pub int_ops: u64,
    pub naive_ops: u64,
}

impl OpCounters {
    pub fn snapshot(&self) -> OpSnapshot {
        OpSnapshot {
            ga_mults: self.ga_mults.load(Ordering::Relaxed),
            int_ops: self.int_ops.load(Ordering::Relaxed),
            naive_ops: self.naive_ops.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.ga_mults.store(0, Ordering::Relaxed);
        self.int_ops.store(0, Ordering::Relaxed);
        self.naive_ops.store(0, Ordering::Relaxed);
    }
}

impl std::ops::Add for OpSnapshot {
    type Output = OpSnapshot;
    fn add(self, o: OpSnapshot) -> OpSnapshot {
        OpSnapshot {
            ga_mults: self.ga_mults + o.ga_mults,
            int_ops: self.int_ops + o.int_ops,
            naive_ops: self.naive_ops + o.naive_ops,
        }
    }
}

/// Descriptor for F[Z_2^k].
#[derive(Debug)]
pub struct GroupAlgebra {
    field: Arc<Gf2m>,
    k: u32,
    /// `X^e mod irr` for `e < 2d - 1`.
    xpow: Vec<FieldElem>,
    mode: MulMode,
    counters: OpCounters,
}

impl Clone for GroupAlgebra {
    /// Clones start with fresh counters.
    fn clone(&self) -> Self {
        Self {
            field: self.field.clone(),
            k: self.k,
            xpow: self.xpow.clone(),
            mode: self.mode,
            counters: OpCounters::default(),
        }
    }
}

impl GroupAlgebra {
    pub fn new(field: Arc<Gf2m>, k: u32) -> Result<Self> {
        if k > MAX_WHT_K {
            return Err(Error::DimensionTooLarge { k, max: MAX_WHT_K });
        }
        let d = field.d();
        let xpow = (0..2 * d - 1).map(|e| field.x_pow(e)).collect();
        Ok(Self { field, k, xpow, mode: MulMode::Auto, counters: OpCounters::default() })
    }

    pub fn with_mode(mut self, mode: MulMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        1 << self.k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn gf(&self) -> &Gf2m {
        &self.field
    }

    pub fn field_arc(&self) -> &Arc<Gf2m> {
        &self.field
    }

    pub fn counters(&self) -> &OpCounters {
        &self.counters
    }

    pub fn zero_elem(&self) -> GroupAlgebraElem {
        GroupAlgebraElem { k: self.k, coeffs: vec![0; self.len()] }
    }

    pub fn one_elem(&self) -> GroupAlgebraElem {
        self.scalar(1)
    }

    /// `c * v_0`.
    pub fn scalar(&self, c: FieldElem) -> GroupAlgebraElem {
        let mut e = self.zero_elem();
        e.coeffs[0] = c;
        e
    }

    /// The group element `v` with coefficient 1.
    pub fn basis(&self, v: usize) -> GroupAlgebraElem {
        let mut e = self.zero_elem();
        e.coeffs[v] = 1;
        e
    }

    /// `v + v_0`.
    pub fn shifted(&self, v: usize) -> GroupAlgebraElem {
        let mut e = self.basis(v);
        e.coeffs[0] ^= 1;
        e
    }

    pub fn from_coeffs(&self, coeffs: Vec<FieldElem>) -> Result<GroupAlgebraElem> {
        if coeffs.len() != self.len() {
            return Err(Error::Mismatch(format!(
                "expected {} coefficients, got {}",
                self.len(),
                coeffs.len()
            )));
        }
        for &c in &coeffs {
            self.field.check(c as u32)?;
        }
        Ok(GroupAlgebraElem { k: self.k, coeffs })
    }

    fn check_pair(&self, x: &GroupAlgebraElem, y: &GroupAlgebraElem) -> Result<()> {
        if x.k != self.k || y.k != self.k {
            return Err(Error::Mismatch(format!(
                "group algebra of dimension {} got operands of dimension {} and {}",
                self.k, x.k, y.k
            )));
        }
        let order = self.field.params().order();
        if x.coeffs.iter().chain(&y.coeffs).any(|&c| c as u32 >= order) {
            return Err(Error::Mismatch(format!("coefficient outside {}", self.field.params())));
        }
        Ok(())
    }

    pub fn ga_add(&self, x: &GroupAlgebraElem, y: &GroupAlgebraElem) -> Result<GroupAlgebraElem> {
        self.check_pair(x, y)?;
        Ok(self.add_unchecked(x, y))
    }

    pub fn ga_mul_naive(
        &self,
        x: &GroupAlgebraElem,
        y: &GroupAlgebraElem,
    ) -> Result<GroupAlgebraElem> {
        self.check_pair(x, y)?;
        Ok(self.mul_naive_unchecked(x, y))
    }

    /// Transform-based product, bit-identical to [`GroupAlgebra::ga_mul_naive`].
    /// Falls back to the naive product for `k <= NAIVE_CUTOFF_K` unless the
    /// descriptor is in [`MulMode::Wht`].
    pub fn ga_mul_wht(
        &self,
        x: &GroupAlgebraElem,
        y: &GroupAlgebraElem,
    ) -> Result<GroupAlgebraElem> {
        self.check_pair(x, y)?;
        if self.k <= NAIVE_CUTOFF_K && self.mode != MulMode::Wht {
            return Ok(self.mul_naive_unchecked(x, y));
        }
        Ok(self.mul_wht_unchecked(x, y))
    }

    fn add_unchecked(&self, x: &GroupAlgebraElem, y: &GroupAlgebraElem) -> GroupAlgebraElem {
        let coeffs = x.coeffs.iter().zip(&y.coeffs).map(|(a, b)| a ^ b).collect();
        GroupAlgebraElem { k: self.k, coeffs }
    }

    fn mul_naive_unchecked(&self, x: &GroupAlgebraElem, y: &GroupAlgebraElem) -> GroupAlgebraElem {
        let n = self.len();
        let mut out = vec![0 as FieldElem; n];
        let mut products = 0u64;
        for (i, &a) in x.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in y.coeffs.iter().enumerate() {
                if b != 0 {
                    out[i ^ j] ^= self.field.mul(a, b);
                    products += 1;
                }
            }
        }
        self.counters.ga_mults.fetch_add(1, Ordering::Relaxed);
        self.counters.naive_ops.fetch_add(products, Ordering::Relaxed);
        GroupAlgebraElem { k: self.k, coeffs: out }
    }

    fn mul_wht_unchecked(&self, x: &GroupAlgebraElem, y: &GroupAlgebraElem) -> GroupAlgebraElem {
        let k = self.k;
        let n = self.len();
        let d = self.field.d() as usize;
        let mut ops = 0u64;
        let transform_cost = k as u64 * n as u64;

        let planes = |e: &GroupAlgebraElem, ops: &mut u64| -> Vec<Option<Vec<i64>>> {
            (0..d)
                .map(|r| {
                    if e.coeffs.iter().all(|&c| (c >> r) & 1 == 0) {
                        return None;
                    }
                    let mut v: Vec<i64> = e.coeffs.iter().map(|&c| ((c >> r) & 1) as i64).collect();
                    butterfly(&mut v);
                    *ops += transform_cost;
                    Some(v)
                })
                .collect()
        };
        let xa = planes(x, &mut ops);
        let yb = planes(y, &mut ops);

        let mut buckets: Vec<Option<Vec<i64>>> = vec![None; 2 * d - 1];
        for (r, pa) in xa.iter().enumerate() {
            let Some(pa) = pa else { continue };
            for (s, pb) in yb.iter().enumerate() {
                let Some(pb) = pb else { continue };
                let bucket = buckets[r + s].get_or_insert_with(|| vec![0i64; n]);
                for i in 0..n {
                    bucket[i] = bucket[i].wrapping_add(pa[i].wrapping_mul(pb[i]));
                }
                ops += n as u64;
            }
        }

        let mut out = vec![0 as FieldElem; n];
        for (e, bucket) in buckets.iter_mut().enumerate() {
            let Some(bucket) = bucket else { continue };
            butterfly(bucket);
            ops += transform_cost + n as u64;
            let xe = self.xpow[e];
            for i in 0..n {
                if (bucket[i] >> k) & 1 == 1 {
                    out[i] ^= xe;
                }
            }
        }
        self.counters.ga_mults.fetch_add(1, Ordering::Relaxed);
        self.counters.int_ops.fetch_add(ops, Ordering::Relaxed);
        GroupAlgebraElem { k, coeffs: out }
    }

    fn mul_auto(&self, x: &GroupAlgebraElem, y: &GroupAlgebraElem) -> GroupAlgebraElem {
        let naive = match self.mode {
            MulMode::Auto => self.k <= NAIVE_CUTOFF_K,
            MulMode::Naive => true,
            MulMode::Wht => false,
        };
        if naive {
            self.mul_naive_unchecked(x, y)
        } else {
            self.mul_wht_unchecked(x, y)
        }
    }

    /// Worst-case integer ops of one transform product with no skipped planes:
    /// `(4d-1) k 2^k + d^2 2^k + (2d-1) 2^k`.
    pub fn nominal_wht_ops(&self) -> u64 {
        let d = self.field.d() as u64;
        let n = self.len() as u64;
        (4 * d - 1) * self.k as u64 * n + d * d * n + (2 * d - 1) * n
    }
}

/// In-place unnormalized Walsh-Hadamard butterfly with wrapping arithmetic.
fn butterfly(v: &mut [i64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a.wrapping_add(b);
                v[i + h] = a.wrapping_sub(b);
            }
        }
        h *= 2;
    }
}

/// Walsh-Hadamard transform of a length-`2^k` vector, `k * 2^k` add/subs.
/// Rejects inputs whose transform could overflow `i64`.
pub fn wht_int(v: &mut [i64]) -> Result<()> {
    let n = v.len();
    if !n.is_power_of_two() {
        return Err(Error::Mismatch(format!("length {n} is not a power of two")));
    }
    let k = n.trailing_zeros();
    let max = v.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
    if max != 0 && (max.leading_zeros() as i64) - 1 < k as i64 {
        return Err(Error::InvalidParameter(format!(
            "entries up to {max} overflow a transform of length 2^{k}"
        )));
    }
    butterfly(v);
    Ok(())
}

impl Semiring for GroupAlgebra {
    type Elem = GroupAlgebraElem;

    fn zero(&self) -> GroupAlgebraElem {
        self.zero_elem()
    }
    fn one(&self) -> GroupAlgebraElem {
        self.one_elem()
    }
    fn add(&self, a: &GroupAlgebraElem, b: &GroupAlgebraElem) -> GroupAlgebraElem {
        debug_assert!(a.k == self.k && b.k == self.k);
        self.add_unchecked(a, b)
    }
    fn mul(&self, a: &GroupAlgebraElem, b: &GroupAlgebraElem) -> GroupAlgebraElem {
        debug_assert!(a.k == self.k && b.k == self.k);
        self.mul_auto(a, b)
    }
    fn is_zero(&self, a: &GroupAlgebraElem) -> bool {
        a.is_zero()
    }
    fn constant(&self, bits: u32) -> Result<GroupAlgebraElem> {
        Ok(self.scalar(self.field.check(bits)?))
    }
}

impl ScalarRing for GroupAlgebra {
    fn field(&self) -> &Gf2m {
        &self.field
    }
    fn leading(&self, a: &GroupAlgebraElem) -> Option<FieldElem> {
        a.coeffs.iter().copied().find(|&c| c != 0)
    }
    fn scale(&self, a: &GroupAlgebraElem, c: FieldElem) -> GroupAlgebraElem {
        GroupAlgebraElem { k: a.k, coeffs: a.coeffs.iter().map(|&x| self.field.mul(x, c)).collect() }
    }
}

/// Polynomials in one variable over `R`, truncated above degree `cap`.
///
/// With `R = GroupAlgebra` this is the marker polynomial ring: index `j` holds
/// the coefficient of `w^j`, and any product term above `w^cap` is dropped.
#[derive(Clone, Debug)]
pub struct TruncPoly<R> {
    inner: R,
    cap: usize,
}

pub type MarkerPoly = TruncPoly<GroupAlgebra>;

impl<R: Semiring> TruncPoly<R> {
    pub fn new(inner: R, cap: usize) -> Self {
        Self { inner, cap }
    }

    pub fn inner(&self) -> &R {
        &self.inner
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// `c * X^j` (zero when `j > cap`).
    pub fn monomial(&self, c: R::Elem, j: usize) -> Vec<R::Elem> {
        let mut p = vec![self.inner.zero(); self.cap + 1];
        if j <= self.cap {
            p[j] = c;
        }
        p
    }

    pub fn lift(&self, c: R::Elem) -> Vec<R::Elem> {
        self.monomial(c, 0)
    }

    fn check(&self, p: &[R::Elem]) -> Result<()> {
        if p.len() != self.cap + 1 {
            return Err(Error::Mismatch(format!(
                "truncated polynomial with cap {} has {} coefficients",
                self.cap,
                p.len()
            )));
        }
        Ok(())
    }

    pub fn mp_add(&self, p: &[R::Elem], q: &[R::Elem]) -> Result<Vec<R::Elem>> {
        self.check(p)?;
        self.check(q)?;
        Ok(self.add(&p.to_vec(), &q.to_vec()))
    }

    pub fn mp_mul(&self, p: &[R::Elem], q: &[R::Elem]) -> Result<Vec<R::Elem>> {
        self.check(p)?;
        self.check(q)?;
        Ok(self.mul(&p.to_vec(), &q.to_vec()))
    }
}

impl<R: Semiring> Semiring for TruncPoly<R> {
    type Elem = Vec<R::Elem>;

    fn zero(&self) -> Self::Elem {
        vec![self.inner.zero(); self.cap + 1]
    }
    fn one(&self) -> Self::Elem {
        self.lift(self.inner.one())
    }
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a.iter().zip(b).map(|(x, y)| self.inner.add(x, y)).collect()
    }
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        let mut out = self.zero();
        for (i, x) in a.iter().enumerate() {
            if self.inner.is_zero(x) {
                continue;
            }
            for (j, y) in b.iter().enumerate().take(self.cap + 1 - i) {
                if self.inner.is_zero(y) {
                    continue;
                }
                let prod = self.inner.mul(x, y);
                out[i + j] = self.inner.add(&out[i + j], &prod);
            }
        }
        out
    }
    fn is_zero(&self, a: &Self::Elem) -> bool {
        a.iter().all(|x| self.inner.is_zero(x))
    }
    fn constant(&self, bits: u32) -> Result<Self::Elem> {
        Ok(self.lift(self.inner.constant(bits)?))
    }
}

impl<R> ScalarRing for TruncPoly<R>
where
    R: ScalarRing,
    R::Elem: Eq + std::hash::Hash,
{
    fn field(&self) -> &Gf2m {
        self.inner.field()
    }
    fn leading(&self, a: &Self::Elem) -> Option<FieldElem> {
        a.iter().find_map(|x| self.inner.leading(x))
    }
    fn scale(&self, a: &Self::Elem, c: FieldElem) -> Self::Elem {
        a.iter().map(|x| self.inner.scale(x, c)).collect()
    }
}

/// Rank over GF(2) of a set of k-bit vectors, by elimination on a
/// leading-bit basis.
pub fn gf2_rank(vectors: &[u64]) -> usize {
    let mut basis: Vec<u64> = Vec::new();
    for &v in vectors {
        let mut x = v;
        for &b in &basis {
            x = x.min(x ^ b);
        }
        if x != 0 {
            basis.push(x);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}
