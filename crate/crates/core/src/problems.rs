//! Reductions from set packing, multidimensional matching and partial
//! domination to monomial detection, with brute-force oracles.
//!
//! Instance files are line oriented; `#` starts a comment line.
//!
//! ```text
//! packing <n> <m> <k>        then one line of m element ids per set
//! matching <m> <k>
//! sizes <n1> ... <nm>        then one line of m coordinates per tuple
//! dominating <n> <t>         then one "<u> <v>" line per edge
//! ```

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fdtm::{test_formula, Answer, FdtmConfig, FdtmReport};
use crate::formula::{Formula, FormulaBuilder, NodeId, Var};

/// Default bound on the number of selections a brute-force oracle may visit.
pub const DEFAULT_BRUTE_CAP: u128 = 50_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackingInstance {
    pub n: u32,
    pub m: u32,
    pub k: u32,
    pub sets: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingInstance {
    pub m: u32,
    pub sizes: Vec<u32>,
    pub k: u32,
    pub tuples: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DominatingInstance {
    pub n: u32,
    pub t: u32,
    pub edges: Vec<(u32, u32)>,
}

impl PackingInstance {
    pub fn new(n: u32, m: u32, k: u32, sets: Vec<Vec<u32>>) -> Result<Self> {
        let inst = Self { n, m, k, sets };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 3 {
            return Err(Error::InvalidParameter(format!("set size m = {} must be at least 3", self.m)));
        }
        for (i, s) in self.sets.iter().enumerate() {
            let distinct: BTreeSet<_> = s.iter().collect();
            if s.len() != self.m as usize || distinct.len() != s.len() {
                return Err(Error::InvalidParameter(format!("set {} needs {} distinct elements", i + 1, self.m)));
            }
            if s.iter().any(|&x| x == 0 || x > self.n) {
                return Err(Error::InvalidParameter(format!("set {} has an element outside 1..={}", i + 1, self.n)));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("packing {} {} {}\n", self.n, self.m, self.k);
        for set in &self.sets {
            s.push_str(&join(set));
            s.push('\n');
        }
        s
    }
}

impl MatchingInstance {
    pub fn new(m: u32, sizes: Vec<u32>, k: u32, tuples: Vec<Vec<u32>>) -> Result<Self> {
        let inst = Self { m, sizes, k, tuples };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidParameter(format!("m = {} must be at least 2", self.m)));
        }
        if self.sizes.len() != self.m as usize {
            return Err(Error::InvalidParameter("one size per dimension required".into()));
        }
        for (i, t) in self.tuples.iter().enumerate() {
            if t.len() != self.m as usize {
                return Err(Error::InvalidParameter(format!("tuple {} needs {} coordinates", i + 1, self.m)));
            }
            if t.iter().zip(&self.sizes).any(|(&c, &n)| c == 0 || c > n) {
                return Err(Error::InvalidParameter(format!("tuple {} has a coordinate out of range", i + 1)));
            }
        }
        Ok(())
    }

    /// Variable index of coordinate `dim` (0-based, `dim >= 1`) with value `v`.
    fn var_index(&self, dim: usize, v: u32) -> u32 {
        self.sizes[1..dim].iter().sum::<u32>() + v
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("matching {} {}\nsizes {}\n", self.m, self.k, join(&self.sizes));
        for t in &self.tuples {
            s.push_str(&join(t));
            s.push('\n');
        }
        s
    }
}

impl DominatingInstance {
    pub fn new(n: u32, t: u32, edges: Vec<(u32, u32)>) -> Result<Self> {
        let inst = Self { n, t, edges };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &(u, v) in &self.edges {
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at {u}")));
            }
            if u == 0 || v == 0 || u > self.n || v > self.n {
                return Err(Error::InvalidParameter(format!("edge {u}-{v} out of range")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidParameter(format!("duplicate edge {u}-{v}")));
            }
        }
        if self.n > 64 {
            return Err(Error::InvalidParameter("at most 64 nodes supported".into()));
        }
        Ok(())
    }

    /// Closed neighborhoods as bit masks (bit `i - 1` for node `i`).
    pub fn closed_neighborhoods(&self) -> Vec<u64> {
        let mut nb: Vec<u64> = (0..self.n).map(|i| 1u64 << i).collect();
        for &(u, v) in &self.edges {
            nb[u as usize - 1] |= 1 << (v - 1);
            nb[v as usize - 1] |= 1 << (u - 1);
        }
        nb
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("dominating {} {}\n", self.n, self.t);
        for &(u, v) in &self.edges {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }
}

fn join(v: &[u32]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

// ---------------------------------------------------------------------------
// File formats

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, Vec<&'a str>)> + 'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, Vec<&'a str>)>> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
                .map(|(i, l)| (i, l.split_whitespace().collect())),
        );
        Self { inner: it.peekable() }
    }

    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        self.inner.next()
    }
}

fn fmt_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format { line, message: message.into() }
}

fn ints(line: usize, toks: &[&str]) -> Result<Vec<u32>> {
    toks.iter()
        .map(|t| t.parse::<u32>().map_err(|_| fmt_err(line, format!("`{t}` is not a nonnegative integer"))))
        .collect()
}

fn header<'a>(lines: &mut Lines<'a>, keyword: &str, arity: usize) -> Result<(usize, Vec<u32>)> {
    let (line, toks) = lines.next().ok_or_else(|| fmt_err(1, "empty input"))?;
    if toks.first() != Some(&keyword) || toks.len() != arity + 1 {
        return Err(fmt_err(line, format!("expected `{keyword}` header with {arity} fields")));
    }
    Ok((line, ints(line, &toks[1..])?))
}

fn revalidate<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidParameter(m) => fmt_err(line, m),
        other => other,
    })
}

pub fn parse_packing(text: &str) -> Result<PackingInstance> {
    let mut lines = Lines::new(text);
    let (hline, h) = header(&mut lines, "packing", 3)?;
    let (n, m, k) = (h[0], h[1], h[2]);
    let mut sets = Vec::new();
    while let Some((line, toks)) = lines.next() {
        let set = ints(line, &toks)?;
        revalidate(line, PackingInstance::new(n, m, k, vec![set.clone()]))?;
        sets.push(set);
    }
    revalidate(hline, PackingInstance::new(n, m, k, sets))
}

pub fn parse_matching(text: &str) -> Result<MatchingInstance> {
    let mut lines = Lines::new(text);
    let (hline, h) = header(&mut lines, "matching", 2)?;
    let (m, k) = (h[0], h[1]);
    let (sline, stoks) = lines.next().ok_or_else(|| fmt_err(hline, "missing `sizes` line"))?;
    if stoks.first() != Some(&"sizes") {
        return Err(fmt_err(sline, "expected `sizes <n1> ... <nm>`"));
    }
    let sizes = ints(sline, &stoks[1..])?;
    revalidate(sline, MatchingInstance::new(m, sizes.clone(), k, vec![]))?;
    let mut tuples = Vec::new();
    while let Some((line, toks)) = lines.next() {
        let t = ints(line, &toks)?;
        revalidate(line, MatchingInstance::new(m, sizes.clone(), k, vec![t.clone()]))?;
        tuples.push(t);
    }
    Ok(MatchingInstance { m, sizes, k, tuples })
}

pub fn parse_dominating(text: &str) -> Result<DominatingInstance> {
    let mut lines = Lines::new(text);
    let (hline, h) = header(&mut lines, "dominating", 2)?;
    let (n, t) = (h[0], h[1]);
    let mut edges = Vec::new();
    while let Some((line, toks)) = lines.next() {
        let e = ints(line, &toks)?;
        if e.len() != 2 {
            return Err(fmt_err(line, "expected `<u> <v>`"));
        }
        edges.push((e[0], e[1]));
        revalidate(line, DominatingInstance::new(n, t, edges.clone()))?;
    }
    revalidate(hline, DominatingInstance::new(n, t, edges))
}

// ---------------------------------------------------------------------------
// Formula builders

/// `k` copies of the subtree produced by `base`, under a balanced product tree.
fn power(b: &mut FormulaBuilder, k: u32, mut base: impl FnMut(&mut FormulaBuilder) -> NodeId) -> NodeId {
    let copies: Vec<NodeId> = (0..k).map(|_| base(b)).collect();
    b.product(&copies)
}

/// `(sum_A prod_{x in A} x)^k` and the target degree `m k`.
/// An empty family gives the constant 0, and `k = 0` the constant 1.
pub fn build_packing_formula(inst: &PackingInstance) -> (Formula, u32) {
    let mut b = FormulaBuilder::new();
    let root = if inst.k == 0 {
        b.fresh_terminal(crate::formula::Node::Const(1))
    } else if inst.sets.is_empty() {
        b.fresh_terminal(crate::formula::Node::Const(0))
    } else {
        power(&mut b, inst.k, |b| {
            let terms = inst
                .sets
                .iter()
                .map(|set| {
                    let xs: Vec<NodeId> = set.iter().map(|&x| b.x(x)).collect();
                    b.product(&xs)
                })
                .collect();
            b.plus(terms)
        })
    };
    (b.build(root).expect("packing formula is valid"), inst.m * inst.k)
}

/// `prod_j (1 + sum_{v in C_j} w pi(v))` over the classes `C_j` of tuples with
/// first coordinate `j`; `pi(v)` multiplies the remaining coordinates. Returns
/// the formula, the target x-degree `(m-1) k` and the marker degree `k`.
pub fn build_matching_formula(inst: &MatchingInstance) -> (Formula, u32, u32) {
    let mut classes: BTreeMap<u32, Vec<&Vec<u32>>> = BTreeMap::new();
    for t in &inst.tuples {
        classes.entry(t[0]).or_default().push(t);
    }
    let mut b = FormulaBuilder::new();
    let factors: Vec<NodeId> = classes
        .values()
        .map(|members| {
            let mut terms = vec![b.fresh_terminal(crate::formula::Node::Const(1))];
            for t in members {
                let mut xs = vec![b.var(Var::W)];
                for (dim, &c) in t.iter().enumerate().skip(1) {
                    xs.push(b.x(inst.var_index(dim, c)));
                }
                terms.push(b.product(&xs));
            }
            b.plus(terms)
        })
        .collect();
    let root = if factors.is_empty() {
        b.fresh_terminal(crate::formula::Node::Const(1))
    } else {
        b.product(&factors)
    };
    (b.build(root).expect("matching formula is valid"), (inst.m - 1) * inst.k, inst.k)
}

/// `(sum_i prod_{j in N[i]} (1 + w x_j))^k`. The target x-degree and the
/// marker degree are both `t`.
pub fn build_dominating_formula(inst: &DominatingInstance, k: u32) -> (Formula, u32, u32) {
    let nb = inst.closed_neighborhoods();
    let mut b = FormulaBuilder::new();
    let root = if inst.n == 0 || k == 0 {
        b.fresh_terminal(crate::formula::Node::Const(1))
    } else {
        power(&mut b, k, |b| {
            let terms = nb
                .iter()
                .map(|&mask| {
                    let factors: Vec<NodeId> = (0..inst.n)
                        .filter(|j| mask >> j & 1 == 1)
                        .map(|j| {
                            let one = b.fresh_terminal(crate::formula::Node::Const(1));
                            let w = b.var(Var::W);
                            let x = b.x(j + 1);
                            let wx = b.times(w, x);
                            b.plus(vec![one, wx])
                        })
                        .collect();
                    b.product(&factors)
                })
                .collect();
            b.plus(terms)
        })
    };
    (b.build(root).expect("dominating formula is valid"), inst.t, inst.t)
}

// ---------------------------------------------------------------------------
// Solvers

/// Outcome of a reduction-based solve with the underlying reports.
#[derive(Clone, Debug)]
pub struct Solved {
    pub answer: Answer,
    pub reports: Vec<FdtmReport>,
}

pub fn solve_packing(inst: &PackingInstance, cfg: &FdtmConfig) -> Result<Solved> {
    inst.validate()?;
    if inst.k == 0 {
        return Ok(Solved { answer: Answer::Yes, reports: vec![] });
    }
    let (f, degree) = build_packing_formula(inst);
    let run = FdtmConfig { q: 2, k: degree, marker_cap: None, ..cfg.clone() };
    let report = test_formula(&f, &run)?;
    Ok(Solved { answer: report.answer, reports: vec![report] })
}

pub fn solve_matching(inst: &MatchingInstance, cfg: &FdtmConfig) -> Result<Solved> {
    inst.validate()?;
    if inst.k == 0 {
        return Ok(Solved { answer: Answer::Yes, reports: vec![] });
    }
    let (f, degree, t) = build_matching_formula(inst);
    let run = FdtmConfig { q: 2, k: degree, marker_cap: Some(t), ..cfg.clone() };
    let report = test_formula(&f, &run)?;
    Ok(Solved { answer: report.answer, reports: vec![report] })
}

/// Single dominating-set query: is there a set of at most `k` nodes
/// dominating at least `t` nodes?
pub fn solve_dominating(inst: &DominatingInstance, k: u32, cfg: &FdtmConfig) -> Result<Solved> {
    inst.validate()?;
    if inst.t == 0 {
        return Ok(Solved { answer: Answer::Yes, reports: vec![] });
    }
    if inst.t > inst.n || k == 0 {
        return Ok(Solved { answer: Answer::No, reports: vec![] });
    }
    let (f, degree, t) = build_dominating_formula(inst, k);
    let run = FdtmConfig { q: 2, k: degree, marker_cap: Some(t), ..cfg.clone() };
    let report = test_formula(&f, &run)?;
    Ok(Solved { answer: report.answer, reports: vec![report] })
}

/// Outcome of the minimal-k search.
#[derive(Clone, Debug)]
pub struct MinK {
    /// `None` when `t > n`, or when an indeterminate run stopped the search.
    pub k: Option<u32>,
    pub indeterminate: bool,
    pub reports: Vec<FdtmReport>,
}

/// Smallest `k` for which `k` nodes dominate at least `t` nodes, trying
/// `k = 1, 2, ..., t` in order.
pub fn solve_dominating_min_k(inst: &DominatingInstance, cfg: &FdtmConfig) -> Result<MinK> {
    inst.validate()?;
    if inst.t == 0 {
        return Err(Error::InvalidParameter("t must be at least 1".into()));
    }
    let mut reports = Vec::new();
    if inst.t > inst.n {
        return Ok(MinK { k: None, indeterminate: false, reports });
    }
    for k in 1..=inst.t {
        let solved = solve_dominating(inst, k, cfg)?;
        reports.extend(solved.reports);
        match solved.answer {
            Answer::Yes => return Ok(MinK { k: Some(k), indeterminate: false, reports }),
            Answer::Indeterminate => return Ok(MinK { k: None, indeterminate: true, reports }),
            Answer::No => {}
        }
    }
    // any t nodes dominate at least themselves
    unreachable!("k = t always succeeds when t <= n")
}

// ---------------------------------------------------------------------------
// Brute-force oracles

fn check_brute_cap(items: usize, k: u32, cap: u128) -> Result<()> {
    let count = crate::hashing::binomial(items as u64, k as u64);
    if count > cap {
        return Err(Error::CheckCap { count, cap });
    }
    Ok(())
}

/// Exhaustive search for `k` pairwise disjoint sets.
pub fn brute_packing(inst: &PackingInstance) -> Result<bool> {
    check_brute_cap(inst.sets.len(), inst.k, DEFAULT_BRUTE_CAP)?;
    let masks: Vec<u128> = inst
        .sets
        .iter()
        .map(|s| s.iter().fold(0u128, |acc, &x| acc | 1u128 << (x - 1)))
        .collect();
    Ok(pick_disjoint(&masks, inst.k as usize, 0, 0))
}

fn pick_disjoint(masks: &[u128], need: usize, start: usize, used: u128) -> bool {
    if need == 0 {
        return true;
    }
    (start..masks.len()).any(|i| masks[i] & used == 0 && pick_disjoint(masks, need - 1, i + 1, used | masks[i]))
}

/// Exhaustive search for `k` tuples disjoint in every coordinate.
pub fn brute_matching(inst: &MatchingInstance) -> Result<bool> {
    check_brute_cap(inst.tuples.len(), inst.k, DEFAULT_BRUTE_CAP)?;
    // encode every coordinate of every dimension as one bit
    let total: u32 = inst.sizes.iter().sum();
    if total > 128 {
        return Err(Error::InvalidParameter("brute_matching supports at most 128 coordinates".into()));
    }
    let masks: Vec<u128> = inst
        .tuples
        .iter()
        .map(|t| {
            t.iter().enumerate().fold(0u128, |acc, (dim, &c)| {
                let offset: u32 = inst.sizes[..dim].iter().sum();
                acc | 1u128 << (offset + c - 1)
            })
        })
        .collect();
    Ok(pick_disjoint(&masks, inst.k as usize, 0, 0))
}

/// Is there a set of at most `k` nodes whose closed neighborhood has at least `t` nodes?
pub fn brute_dominating(inst: &DominatingInstance, k: u32) -> Result<bool> {
    if inst.t == 0 {
        return Ok(true);
    }
    check_brute_cap(inst.n as usize, k.min(inst.n), DEFAULT_BRUTE_CAP)?;
    let nb = inst.closed_neighborhoods();
    fn go(nb: &[u64], left: u32, start: usize, covered: u64, t: u32) -> bool {
        if covered.count_ones() >= t {
            return true;
        }
        left > 0 && (start..nb.len()).any(|i| go(nb, left - 1, i + 1, covered | nb[i], t))
    }
    Ok(go(&nb, k, 0, 0, inst.t))
}

/// Minimal `k` by exhaustive search, `None` when `t > n`.
pub fn brute_dominating_min_k(inst: &DominatingInstance) -> Result<Option<u32>> {
    if inst.t > inst.n {
        return Ok(None);
    }
    for k in 1..=inst.t {
        if brute_dominating(inst, k)? {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Random instances

pub fn random_packing<R: Rng>(rng: &mut R, n: u32, m: u32, k: u32, sets: usize) -> PackingInstance {
    let universe: Vec<u32> = (1..=n).collect();
    let sets = (0..sets)
        .map(|_| {
            let mut s: Vec<u32> = universe.choose_multiple(rng, m as usize).copied().collect();
            s.sort_unstable();
            s
        })
        .collect();
    PackingInstance { n, m, k, sets }
}

pub fn random_matching<R: Rng>(rng: &mut R, sizes: Vec<u32>, k: u32, tuples: usize) -> MatchingInstance {
    let tuples = (0..tuples)
        .map(|_| sizes.iter().map(|&n| rng.gen_range(1..=n)).collect())
        .collect();
    MatchingInstance { m: sizes.len() as u32, sizes, k, tuples }
}

pub fn random_dominating<R: Rng>(rng: &mut R, n: u32, t: u32, p: f64) -> DominatingInstance {
    let mut edges = Vec::new();
    for u in 1..=n {
        for v in u + 1..=n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    DominatingInstance { n, t, edges }
}
