//! Perfect hash families: sets of colorings `{1..n} -> {1..k}` such that every
//! k-subset of the domain is colored injectively by at least one member.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default bound on `C(n, k)` for exhaustive verification.
pub const DEFAULT_VERIFY_CAP: u128 = 10_000_000;

/// Default bound on `C(n, k)` for the greedy provider.
pub const DEFAULT_GREEDY_CAP: u128 = 200_000;

/// Candidates scored per greedy round.
const GREEDY_CANDIDATES: u64 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum HashProvider {
    #[default]
    Greedy,
    Splitter,
    Randomized,
    /// Read from a dump; origin unknown.
    External,
}

impl fmt::Display for HashProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HashProvider::Greedy => "greedy",
            HashProvider::Splitter => "splitter",
            HashProvider::Randomized => "randomized",
            HashProvider::External => "external",
        })
    }
}

impl FromStr for HashProvider {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(HashProvider::Greedy),
            "splitter" => Ok(HashProvider::Splitter),
            "randomized" => Ok(HashProvider::Randomized),
            _ => Err(Error::InvalidParameter(format!("unknown hash provider `{s}`"))),
        }
    }
}

/// Construction knobs shared by the providers.
#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub greedy_cap: u128,
    /// Seed for the randomized provider.
    pub seed: u64,
    /// Explicit function count for the randomized provider.
    pub count: Option<usize>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { greedy_cap: DEFAULT_GREEDY_CAP, seed: 0, count: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashFamily {
    n: u32,
    k: u32,
    /// `functions[f][x - 1]` is the color of `x`, in `1..=k`.
    functions: Vec<Vec<u8>>,
    provider: HashProvider,
    certified: bool,
}

impl HashFamily {
    /// Wrap explicit colorings, validating ranges. Not certified.
    pub fn from_functions(n: u32, k: u32, functions: Vec<Vec<u8>>) -> Result<Self> {
        check_nk(n, k)?;
        for (idx, f) in functions.iter().enumerate() {
            if f.len() != n as usize {
                return Err(Error::InvalidParameter(format!(
                    "function {idx} has {} entries, expected {n}",
                    f.len()
                )));
            }
            if f.iter().any(|&c| c == 0 || c as u32 > k) {
                return Err(Error::InvalidParameter(format!(
                    "function {idx} uses a color outside 1..={k}"
                )));
            }
        }
        Ok(Self { n, k, functions, provider: HashProvider::External, certified: false })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn provider(&self) -> HashProvider {
        self.provider
    }

    pub fn certified(&self) -> bool {
        self.certified
    }

    pub fn functions(&self) -> &[Vec<u8>] {
        &self.functions
    }

    /// Color of `x` (1-based) under function `f`.
    pub fn color(&self, f: usize, x: u32) -> u8 {
        self.functions[f][x as usize - 1]
    }

    /// The family restricted to the sub-domain `{1..n2}`.
    pub fn restrict(&self, n2: u32) -> Result<Self> {
        if n2 > self.n {
            return Err(Error::InvalidParameter(format!("cannot restrict {} to {n2}", self.n)));
        }
        check_nk(n2, self.k)?;
        let functions = self.functions.iter().map(|f| f[..n2 as usize].to_vec()).collect();
        Ok(Self { n: n2, k: self.k, functions, provider: self.provider, certified: false })
    }

    /// `phf <n> <k> <count>` then one line of colors per function.
    pub fn dump(&self) -> String {
        let mut s = format!("phf {} {} {}\n", self.n, self.k, self.functions.len());
        for f in &self.functions {
            let line: Vec<String> = f.iter().map(|c| c.to_string()).collect();
            writeln!(s, "{}", line.join(" ")).unwrap();
        }
        s
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Format { line: 1, message: "empty input".into() })?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        let bad = |line: usize, m: &str| Error::Format { line, message: m.to_string() };
        let (n, k, count) = match toks.as_slice() {
            ["phf", n, k, c] => (
                n.parse::<u32>().map_err(|_| bad(hline, "bad n"))?,
                k.parse::<u32>().map_err(|_| bad(hline, "bad k"))?,
                c.parse::<usize>().map_err(|_| bad(hline, "bad count"))?,
            ),
            _ => return Err(bad(hline, "expected `phf <n> <k> <count>`")),
        };
        let mut functions = Vec::with_capacity(count);
        for (line, body) in lines {
            let f: Vec<u8> = body
                .split_whitespace()
                .map(|t| t.parse::<u8>().map_err(|_| bad(line, "bad color")))
                .collect::<Result<_>>()?;
            if f.len() != n as usize {
                return Err(bad(line, "wrong number of colors"));
            }
            if f.iter().any(|&c| c == 0 || c as u32 > k) {
                return Err(bad(line, "color out of range"));
            }
            functions.push(f);
        }
        if functions.len() != count {
            return Err(bad(hline, "function count does not match header"));
        }
        Self::from_functions(n, k, functions)
    }
}

fn check_nk(n: u32, k: u32) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= n, got n={n}, k={k}")));
    }
    if k > 32 {
        return Err(Error::DimensionTooLarge { k, max: 32 });
    }
    Ok(())
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// Advance a sorted 0-based combination in lexicographic order.
fn next_combination(c: &mut [u32], n: u32) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - (k - i) as u32 {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// The combination of the given lexicographic rank.
fn unrank(mut rank: u128, n: u32, k: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(k as usize);
    let mut x = 0u32;
    for slot in 0..k {
        loop {
            let rest = binomial((n - x - 1) as u64, (k - slot - 1) as u64);
            if rank < rest {
                break;
            }
            rank -= rest;
            x += 1;
        }
        out.push(x);
        x += 1;
    }
    out
}

#[inline]
fn injective_on(f: &[u8], subset: &[u32]) -> bool {
    let mut seen = 0u64;
    for &x in subset {
        let bit = 1u64 << f[x as usize];
        if seen & bit != 0 {
            return false;
        }
        seen |= bit;
    }
    true
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn build_family(n: u32, k: u32, provider: HashProvider) -> Result<HashFamily> {
    build_family_with(n, k, provider, BuildOptions::default())
}

pub fn build_family_with(
    n: u32,
    k: u32,
    provider: HashProvider,
    opts: BuildOptions,
) -> Result<HashFamily> {
    check_nk(n, k)?;
    match provider {
        HashProvider::Greedy => greedy(n, k, opts.greedy_cap),
        HashProvider::Splitter => splitter(n, k, opts.greedy_cap),
        HashProvider::Randomized => {
            let count = opts.count.unwrap_or_else(|| randomized_count(n, k));
            Ok(randomized(n, k, count, opts.seed))
        }
        HashProvider::External => {
            Err(Error::InvalidParameter("external families are loaded, not built".into()))
        }
    }
}

/// `ceil(e^k * k * 40 * ln n)`, at least 1.
pub fn randomized_count(n: u32, k: u32) -> usize {
    let v = (k as f64).exp() * k as f64 * 40.0 * (n.max(2) as f64).ln();
    v.ceil().max(1.0) as usize
}

fn randomized(n: u32, k: u32, count: usize, seed: u64) -> HashFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let functions = (0..count)
        .map(|_| (0..n).map(|_| rng.gen_range(1..=k) as u8).collect())
        .collect();
    HashFamily { n, k, functions, provider: HashProvider::Randomized, certified: false }
}

/// Greedy cover of all k-subsets. Certified by construction.
fn greedy(n: u32, k: u32, cap: u128) -> Result<HashFamily> {
    let total = binomial(n as u64, k as u64);
    if total > cap {
        return Err(Error::CheckCap { count: total, cap });
    }
    let mut uncovered: Vec<Vec<u32>> = Vec::with_capacity(total as usize);
    let mut c: Vec<u32> = (0..k).collect();
    loop {
        uncovered.push(c.clone());
        if !next_combination(&mut c, n) {
            break;
        }
    }
    let mut functions: Vec<Vec<u8>> = Vec::new();
    let mut round = 0u64;
    while let Some(first) = uncovered.first().cloned() {
        let mut best: Option<(usize, Vec<u8>)> = None;
        for cand in 0..GREEDY_CANDIDATES {
            let mut f: Vec<u8> = (0..n as u64)
                .map(|x| {
                    let h = splitmix(round.wrapping_mul(0x1_0000_0001) ^ (cand << 48) ^ x);
                    (h % k as u64) as u8 + 1
                })
                .collect();
            for (color, &x) in first.iter().enumerate() {
                f[x as usize] = color as u8 + 1;
            }
            let covered = uncovered.iter().filter(|s| injective_on(&f, s)).count();
            if best.as_ref().map_or(true, |(b, _)| covered > *b) {
                best = Some((covered, f));
            }
        }
        let (_, f) = best.unwrap();
        uncovered.retain(|s| !injective_on(&f, s));
        functions.push(f);
        round += 1;
    }
    Ok(HashFamily { n, k, functions, provider: HashProvider::Greedy, certified: true })
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// `h(x) = g((a x mod p) mod k^2)` over the smallest prime `p > n`, every
/// `a in 1..p`, and `g` from a greedy `(k^2, k)` family. For every k-subset some
/// `a` makes the inner map injective, because the expected number of colliding
/// pairs under a uniform `a` is below one.
fn splitter(n: u32, k: u32, cap: u128) -> Result<HashFamily> {
    let r = k * k;
    if n <= r {
        let mut f = greedy(n, k, cap)?;
        f.provider = HashProvider::Splitter;
        return Ok(f);
    }
    let inner = greedy(r, k, cap)?;
    let p = (n as u64 + 1..).find(|&p| is_prime(p)).unwrap();
    let mut functions = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for a in 1..p {
        for g in inner.functions() {
            let f: Vec<u8> =
                (1..=n as u64).map(|x| g[((a * x % p) % r as u64) as usize]).collect();
            if seen.insert(f.clone()) {
                functions.push(f);
            }
        }
    }
    Ok(HashFamily { n, k, functions, provider: HashProvider::Splitter, certified: false })
}

/// Exhaustively check every k-subset; marks the family certified on success.
pub fn verify_family(fam: &mut HashFamily) -> Result<bool> {
    verify_family_with_cap(fam, DEFAULT_VERIFY_CAP)
}

pub fn verify_family_with_cap(fam: &mut HashFamily, cap: u128) -> Result<bool> {
    let total = binomial(fam.n as u64, fam.k as u64);
    if total > cap {
        return Err(Error::CheckCap { count: total, cap });
    }
    const CHUNK: u128 = 4096;
    let chunks = total.div_ceil(CHUNK);
    let (n, k) = (fam.n, fam.k);
    let functions = &fam.functions;
    let ok = (0..chunks as u64).into_par_iter().all(|chunk| {
        let start = chunk as u128 * CHUNK;
        let end = (start + CHUNK).min(total);
        let mut c = unrank(start, n, k);
        for rank in start..end {
            if !functions.iter().any(|f| injective_on(f, &c)) {
                return false;
            }
            if rank + 1 < end {
                next_combination(&mut c, n);
            }
        }
        true
    });
    fam.certified = ok;
    Ok(ok)
}

/// `(count, bound)` with bound `ceil(e^k * k^(2 log2 max(k,2)) * (log2 max(n,2))^2)`.
pub fn family_size_report(fam: &HashFamily) -> (usize, u128) {
    (fam.len(), size_budget(fam.n, fam.k))
}

pub fn size_budget(n: u32, k: u32) -> u128 {
    let kf = k as f64;
    let lk = (k.max(2) as f64).log2();
    let ln = (n.max(2) as f64).log2();
    let v = kf.exp() * kf.powf(2.0 * lk) * ln * ln;
    if v >= u128::MAX as f64 {
        u128::MAX
    } else {
        v.ceil() as u128
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_verify(fam: &HashFamily) -> bool {
        let (n, k) = (fam.n(), fam.k());
        (0u32..1 << n).filter(|m| m.count_ones() == k).all(|mask| {
            fam.functions().iter().any(|f| {
                let colors: std::collections::BTreeSet<u8> =
                    (0..n).filter(|x| mask >> x & 1 == 1).map(|x| f[x as usize]).collect();
                colors.len() == k as usize
            })
        })
    }

    #[test]
    fn paper_sized_example_family() {
        let mut fam = HashFamily::from_functions(3, 2, vec![vec![1, 2, 1], vec![1, 1, 2]]).unwrap();
        assert!(verify_family(&mut fam).unwrap());
        assert!(fam.certified());
        assert_eq!(family_size_report(&fam).0, 2);
        let mut missing = HashFamily::from_functions(3, 2, vec![vec![1, 2, 1]]).unwrap();
        assert!(!verify_family(&mut missing).unwrap());
        assert!(!missing.certified());
    }

    #[test]
    fn trivial_shapes() {
        let f = build_family(5, 5, HashProvider::Greedy).unwrap();
        assert_eq!(f.len(), 1);
        let f = build_family(6, 1, HashProvider::Greedy).unwrap();
        assert_eq!(f.len(), 1);
        assert!(f.functions()[0].iter().all(|&c| c == 1));
        let f = build_family(3, 2, HashProvider::Greedy).unwrap();
        assert_eq!(f.len(), 2);
        assert!(build_family(2, 3, HashProvider::Greedy).is_err());
        assert!(build_family(3, 0, HashProvider::Greedy).is_err());
    }

    #[test]
    fn greedy_is_deterministic_and_valid() {
        for n in 1..=9 {
            for k in 1..=n.min(4) {
                let a = build_family(n, k, HashProvider::Greedy).unwrap();
                let b = build_family(n, k, HashProvider::Greedy).unwrap();
                assert_eq!(a, b);
                assert!(a.certified());
                assert!(brute_verify(&a), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn greedy_within_budget() {
        for n in 1..=12 {
            for k in 1..=n.min(4) {
                let f = build_family(n, k, HashProvider::Greedy).unwrap();
                let (count, bound) = family_size_report(&f);
                assert!(count as u128 <= bound, "n={n} k={k} count={count} bound={bound}");
            }
        }
    }

    #[test]
    fn greedy_cap_enforced() {
        let opts = BuildOptions { greedy_cap: 10, ..Default::default() };
        assert!(matches!(
            build_family_with(10, 3, HashProvider::Greedy, opts),
            Err(Error::CheckCap { .. })
        ));
    }

    #[test]
    fn splitter_covers() {
        for (n, k) in [(12, 3), (20, 2), (15, 3), (8, 2)] {
            let mut f = build_family(n, k, HashProvider::Splitter).unwrap();
            assert!(verify_family(&mut f).unwrap(), "n={n} k={k}");
            assert!(brute_verify(&f));
        }
    }

    #[test]
    fn randomized_64_functions() {
        let opts = BuildOptions { count: Some(64), seed: 11, ..Default::default() };
        let mut f = build_family_with(10, 3, HashProvider::Randomized, opts).unwrap();
        assert_eq!(f.len(), 64);
        assert!(!f.certified());
        assert!(verify_family(&mut f).unwrap());
        assert!(f.certified());
        let again = build_family_with(10, 3, HashProvider::Randomized, opts).unwrap();
        assert_eq!(again.functions(), f.functions());
    }

    #[test]
    fn restriction_stays_valid() {
        let f = build_family(9, 3, HashProvider::Greedy).unwrap();
        for n2 in 3..=9 {
            let mut r = f.restrict(n2).unwrap();
            assert!(verify_family(&mut r).unwrap());
        }
    }

    #[test]
    fn verify_cap_enforced() {
        let mut f = HashFamily::from_functions(30, 15, vec![vec![1; 30]]).unwrap();
        assert!(matches!(verify_family(&mut f), Err(Error::CheckCap { .. })));
    }

    #[test]
    fn dump_round_trip() {
        let f = build_family(6, 3, HashProvider::Greedy).unwrap();
        let text = f.dump();
        assert!(text.starts_with(&format!("phf 6 3 {}\n", f.len())));
        let back = HashFamily::parse_dump(&text).unwrap();
        assert_eq!(back.functions(), f.functions());
        assert!(HashFamily::parse_dump("phf 3 2 1\n1 2\n").is_err());
        assert!(HashFamily::parse_dump("phf 3 2 1\n1 2 3\n").is_err());
        assert!(HashFamily::parse_dump("phf 3 2 2\n1 2 1\n").is_err());
    }

    #[test]
    fn unrank_matches_enumeration() {
        let (n, k) = (7, 3);
        let mut c: Vec<u32> = (0..k).collect();
        let mut rank = 0u128;
        loop {
            assert_eq!(unrank(rank, n, k), c);
            rank += 1;
            if !next_combination(&mut c, n) {
                break;
            }
        }
        assert_eq!(rank, binomial(7, 3));
    }
}
