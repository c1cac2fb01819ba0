//! Formula reconstruction: terminal duplication (C -> C*), edge annotation
//! (C* -> C'), and replacement of each `x_i` by a weighted sum of `q - 1`
//! multilinear stand-ins (C' -> C'').
//!
//! Annotation variables are `z` variables numbered from 1 in preorder, the
//! virtual root edge first. The replacement variables are `y_tau(i,j)` with
//! `tau(i, j) = (i - 1)(q - 1) + j`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::formula::{Formula, FormulaBuilder, Node, NodeId, Var};

/// Split every shared terminal into one copy per parent. The result is a
/// tree including its terminals and computes the same polynomial.
pub fn duplicate_terminals(c: &Formula) -> Formula {
    let mut b = FormulaBuilder::new();
    let root = copy_tree(c, c.root(), &mut b, &mut |b, node| b.fresh_terminal(node.clone()));
    b.build(root).expect("a copy of a valid formula is valid")
}

/// Rebuild the subtree at `id`, mapping each terminal through `leaf`.
fn copy_tree(
    c: &Formula,
    id: NodeId,
    b: &mut FormulaBuilder,
    leaf: &mut dyn FnMut(&mut FormulaBuilder, &Node) -> NodeId,
) -> NodeId {
    match c.node(id) {
        Node::Plus(children) => {
            let kids = children.iter().map(|&ch| copy_tree(c, ch, b, leaf)).collect();
            b.plus(kids)
        }
        Node::Times(x, y) => {
            let l = copy_tree(c, *x, b, leaf);
            let r = copy_tree(c, *y, b, leaf);
            b.times(l, r)
        }
        terminal => leaf(b, terminal),
    }
}

/// Multiply every edge of `c_star` (and the virtual root edge) by a fresh
/// annotation variable. Returns the annotated formula and the number of
/// annotation variables used.
pub fn annotate_edges(c_star: &Formula) -> (Formula, u32) {
    let mut b = FormulaBuilder::new();
    let mut next = 0u32;
    let root = annotate(c_star, c_star.root(), &mut b, &mut next);
    (b.build(root).expect("annotation preserves validity"), next)
}

fn annotate(c: &Formula, id: NodeId, b: &mut FormulaBuilder, next: &mut u32) -> NodeId {
    *next += 1;
    let z = b.var(Var::Z(*next));
    let inner = match c.node(id) {
        Node::Plus(children) => {
            let kids = children.iter().map(|&ch| annotate(c, ch, b, next)).collect();
            b.plus(kids)
        }
        Node::Times(x, y) => {
            let l = annotate(c, *x, b, next);
            let r = annotate(c, *y, b, next);
            b.times(l, r)
        }
        terminal => b.fresh_terminal(terminal.clone()),
    };
    b.times(z, inner)
}

/// The labeling `(i, j) -> (i - 1)(q - 1) + j` of replacement variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tau {
    pub q: u32,
    pub n: u32,
    map: BTreeMap<(u32, u32), u32>,
}

impl Tau {
    pub fn new(q: u32, n: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParameter(format!("q = {q} must be at least 2")));
        }
        let mut map = BTreeMap::new();
        for i in 1..=n {
            for j in 1..q {
                map.insert((i, j), (i - 1) * (q - 1) + j);
            }
        }
        Ok(Self { q, n, map })
    }

    pub fn index(&self, i: u32, j: u32) -> Option<u32> {
        self.map.get(&(i, j)).copied()
    }

    /// Size of the label range, `(q - 1) n`.
    pub fn domain(&self) -> u32 {
        (self.q - 1) * self.n
    }

    pub fn entries(&self) -> impl Iterator<Item = ((u32, u32), u32)> + '_ {
        self.map.iter().map(|(&k, &v)| (k, v))
    }

    /// Sidecar text: a `tau <q> <n>` header, then one `y i j -> index` line per label.
    pub fn to_sidecar(&self) -> String {
        let mut s = format!("tau {} {}\n", self.q, self.n);
        for ((i, j), idx) in self.entries() {
            writeln!(s, "y {i} {j} -> {idx}").unwrap();
        }
        s
    }

    pub fn parse_sidecar(text: &str) -> Result<Self> {
        let mut header = None;
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = lineno + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fmt_err = |m: &str| Error::Format { line: lineno, message: m.to_string() };
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                ["tau", q, n] if header.is_none() => {
                    let q: u32 = q.parse().map_err(|_| fmt_err("bad q"))?;
                    let n: u32 = n.parse().map_err(|_| fmt_err("bad n"))?;
                    header = Some((q, n));
                }
                ["y", i, j, "->", idx] => {
                    let parse = |s: &str| s.parse::<u32>().map_err(|_| fmt_err("bad integer"));
                    map.insert((parse(i)?, parse(j)?), parse(idx)?);
                }
                _ => return Err(fmt_err("expected `tau <q> <n>` or `y <i> <j> -> <index>`")),
            }
        }
        let (q, n) = header.ok_or(Error::Format { line: 1, message: "missing tau header".into() })?;
        let tau = Self::new(q, n)?;
        if tau.map != map {
            return Err(Error::Format {
                line: 1,
                message: "mapping does not match (i-1)(q-1)+j".into(),
            });
        }
        Ok(tau)
    }
}

/// Replace every `x_i` terminal of `c_prime` by `(+ (* z y_tau(i,1)) ... (* z y_tau(i,q-1)))`
/// with a fresh annotation variable on each summand. Fresh annotation
/// variables continue after the largest `z` index already present.
pub fn replace_q(c_prime: &Formula, q: u32) -> Result<(Formula, Tau)> {
    let n = c_prime.max_x();
    let tau = Tau::new(q, n)?;
    let mut next = c_prime
        .variables()
        .into_iter()
        .filter_map(|v| match v {
            Var::Z(i) => Some(i),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let mut b = FormulaBuilder::new();
    let root = copy_tree(c_prime, c_prime.root(), &mut b, &mut |b, node| match node {
        Node::Var(Var::X(i)) => {
            let summands = (1..q)
                .map(|j| {
                    next += 1;
                    let z = b.var(Var::Z(next));
                    let y = b.var(Var::Y(tau.index(*i, j).unwrap()));
                    b.times(z, y)
                })
                .collect();
            b.plus(summands)
        }
        Node::Var(v) => b.var(*v),
        other => b.fresh_terminal(other.clone()),
    });
    Ok((b.build(root)?, tau))
}

/// All intermediate formulas of the reconstruction.
#[derive(Clone, Debug)]
pub struct TransformTrace {
    pub original: Formula,
    pub c_star: Formula,
    pub c_prime: Formula,
    pub c_dprime: Formula,
    /// Annotation variables introduced by [`annotate_edges`].
    pub z_count: u32,
    /// Total annotation variables in `c_dprime`.
    pub z_total: u32,
    pub tau: Tau,
    pub q: u32,
}

impl TransformTrace {
    pub fn build(original: &Formula, q: u32) -> Result<Self> {
        if !original.is_formula() {
            return Err(Error::InvalidParameter("transforms require a formula".into()));
        }
        let c_star = duplicate_terminals(original);
        let (c_prime, z_count) = annotate_edges(&c_star);
        let (c_dprime, tau) = replace_q(&c_prime, q)?;
        let z_total = c_dprime
            .variables()
            .into_iter()
            .filter(|v| matches!(v, Var::Z(_)))
            .count() as u32;
        Ok(Self { original: original.clone(), c_star, c_prime, c_dprime, z_count, z_total, tau, q })
    }

    /// Text dump: one formula per labeled line, then the sidecar.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "original {}", self.original).unwrap();
        writeln!(s, "c_star {}", self.c_star).unwrap();
        writeln!(s, "c_prime {}", self.c_prime).unwrap();
        writeln!(s, "c_dprime {}", self.c_dprime).unwrap();
        writeln!(s, "z_count {} {}", self.z_count, self.z_total).unwrap();
        s.push_str(&self.tau.to_sidecar());
        s
    }
}
