//! Arithmetic formulas: data model, text format, evaluation and the symbolic
//! expansion oracle.
//!
//! A [`Formula`] is a rooted DAG of `+` gates (fan-in >= 1), `*` gates
//! (fan-in exactly 2), variable terminals and constant terminals. Gates have
//! fan-out at most one; terminals may be shared.
//!
//! Text format (whitespace separated tokens):
//!
//! ```text
//! expr  := "(" "+" expr+ ")" | "(" "*" expr expr ")" | VAR | CONST
//! VAR   := "x"<n> | "y"<n> | "z"<n> | "f"<n> | "w"
//! CONST := "#"<hex digits>
//! ```
//!
//! Two occurrences of the same `VAR` token denote one shared terminal node;
//! every `CONST` token is its own terminal.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::ring::Semiring;

/// Default cap on the number of terms handled by [`expand`].
pub const DEFAULT_EXPANSION_CAP: u128 = 1_000_000;

/// A variable. Each kind is densely numbered from 1.
///
/// `X` are problem variables, `Z` annotation variables, `Y` the replacement
/// variables indexed by their label in `1..=(q-1)n`, `W` the marker variable
/// and `Fresh` the variables introduced by identity-testing collapses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X(u32),
    Y(u32),
    Z(u32),
    W,
    Fresh(u32),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{i}"),
            Var::Y(i) => write!(f, "y{i}"),
            Var::Z(i) => write!(f, "z{i}"),
            Var::W => write!(f, "w"),
            Var::Fresh(i) => write!(f, "f{i}"),
        }
    }
}

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Plus(Vec<NodeId>),
    Times(NodeId, NodeId),
    Var(Var),
    /// GF(2^d) bit pattern, little-endian in the polynomial basis.
    Const(u32),
}

impl Node {
    pub fn children(&self) -> Vec<NodeId> {
        child_slice(self).to_vec()
    }

    pub fn is_gate(&self) -> bool {
        matches!(self, Node::Plus(_) | Node::Times(..))
    }

    pub fn is_terminal(&self) -> bool {
        !self.is_gate()
    }
}

/// A validated formula (or, when built with [`Formula::circuit`], a circuit).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    nodes: Vec<Node>,
    root: NodeId,
    /// Reachable nodes, children before parents.
    order: Vec<NodeId>,
    is_formula: bool,
}

impl Formula {
    /// Validate `nodes` as a formula rooted at `root`.
    pub fn new(nodes: Vec<Node>, root: NodeId) -> Result<Self> {
        Self::validate(nodes, root, true)
    }

    /// Like [`Formula::new`] but gates may have fan-out above one.
    /// Circuits are only meant for `evaluate`/`expand` experiments.
    pub fn circuit(nodes: Vec<Node>, root: NodeId) -> Result<Self> {
        Self::validate(nodes, root, false)
    }

    fn validate(nodes: Vec<Node>, root: NodeId, formula: bool) -> Result<Self> {
        if root >= nodes.len() {
            return Err(Error::Dangling { node: root });
        }
        for (id, node) in nodes.iter().enumerate() {
            match node {
                Node::Plus(c) if c.is_empty() => {
                    return Err(Error::FanIn { node: id, message: "+ gate without inputs".into() })
                }
                _ => {}
            }
            for &c in child_slice(node).iter() {
                if c >= nodes.len() {
                    return Err(Error::Dangling { node: c });
                }
            }
        }
        // Iterative DFS with colors for cycle detection and post-order.
        let mut state = vec![0u8; nodes.len()];
        let mut order = Vec::new();
        let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
        state[root] = 1;
        while let Some(&mut (id, ref mut next)) = stack.last_mut() {
            let children = child_slice(&nodes[id]);
            if *next < children.len() {
                let c = children[*next];
                *next += 1;
                match state[c] {
                    0 => {
                        state[c] = 1;
                        stack.push((c, 0));
                    }
                    1 => return Err(Error::Cycle { node: c }),
                    _ => {}
                }
            } else {
                state[id] = 2;
                order.push(id);
                stack.pop();
            }
        }
        if formula {
            let mut fan_out = vec![0usize; nodes.len()];
            for &id in &order {
                for &c in child_slice(&nodes[id]).iter() {
                    fan_out[c] += 1;
                }
            }
            for &id in &order {
                if nodes[id].is_gate() && fan_out[id] > 1 {
                    return Err(Error::FanOut { node: id, count: fan_out[id] });
                }
            }
        }
        Ok(Self { nodes, root, order, is_formula: formula })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn is_formula(&self) -> bool {
        self.is_formula
    }

    /// Reachable node ids, children before parents.
    pub fn topo_order(&self) -> &[NodeId] {
        &self.order
    }

    pub fn children(&self, id: NodeId) -> Vec<NodeId> {
        child_slice(&self.nodes[id]).to_vec()
    }

    /// Number of reachable gates, the size `s` of the formula.
    pub fn gate_count(&self) -> usize {
        self.order.iter().filter(|&&id| self.nodes[id].is_gate()).count()
    }

    pub fn node_count(&self) -> usize {
        self.order.len()
    }

    pub fn variables(&self) -> BTreeSet<Var> {
        self.order
            .iter()
            .filter_map(|&id| match self.nodes[id] {
                Node::Var(v) => Some(v),
                _ => None,
            })
            .collect()
    }

    /// Largest index of an `x` variable (0 when there is none).
    pub fn max_x(&self) -> u32 {
        self.variables()
            .into_iter()
            .filter_map(|v| match v {
                Var::X(i) => Some(i),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Largest constant bit pattern used (0 when there is none).
    pub fn max_constant(&self) -> u32 {
        self.order
            .iter()
            .filter_map(|&id| match self.nodes[id] {
                Node::Const(c) => Some(c),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Number of edges on the longest root-to-terminal path.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        for &id in &self.order {
            depth[id] = child_slice(&self.nodes[id])
                .iter()
                .map(|&c| depth[c] + 1)
                .max()
                .unwrap_or(0);
        }
        depth[self.root]
    }

    /// Number of parents of each node among reachable nodes.
    pub fn fan_out(&self) -> Vec<usize> {
        let mut out = vec![0usize; self.nodes.len()];
        for &id in &self.order {
            for &c in child_slice(&self.nodes[id]).iter() {
                out[c] += 1;
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write_node(self.root, &mut s);
        s
    }

    fn write_node(&self, id: NodeId, out: &mut String) {
        match &self.nodes[id] {
            Node::Var(v) => out.push_str(&v.to_string()),
            Node::Const(c) => out.push_str(&format!("#{c:x}")),
            Node::Plus(children) => {
                out.push_str("(+");
                for &c in children {
                    out.push(' ');
                    self.write_node(c, out);
                }
                out.push(')');
            }
            Node::Times(a, b) => {
                out.push_str("(* ");
                self.write_node(*a, out);
                out.push(' ');
                self.write_node(*b, out);
                out.push(')');
            }
        }
    }

    /// Structural equality up to node numbering (children order matters).
    pub fn same_structure(&self, other: &Formula) -> bool {
        fn eq(a: &Formula, x: NodeId, b: &Formula, y: NodeId) -> bool {
            match (&a.nodes[x], &b.nodes[y]) {
                (Node::Var(u), Node::Var(v)) => u == v,
                (Node::Const(u), Node::Const(v)) => u == v,
                (Node::Times(a1, a2), Node::Times(b1, b2)) => {
                    eq(a, *a1, b, *b1) && eq(a, *a2, b, *b2)
                }
                (Node::Plus(ca), Node::Plus(cb)) => {
                    ca.len() == cb.len() && ca.iter().zip(cb).all(|(&p, &q)| eq(a, p, b, q))
                }
                _ => false,
            }
        }
        eq(self, self.root, other, other.root)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn child_slice(node: &Node) -> ChildSlice<'_> {
    match node {
        Node::Plus(c) => ChildSlice::Many(c),
        Node::Times(a, b) => ChildSlice::Two([*a, *b]),
        _ => ChildSlice::Many(&[]),
    }
}

enum ChildSlice<'a> {
    Many(&'a [NodeId]),
    Two([NodeId; 2]),
}

impl std::ops::Deref for ChildSlice<'_> {
    type Target = [NodeId];
    fn deref(&self) -> &[NodeId] {
        match self {
            ChildSlice::Many(s) => s,
            ChildSlice::Two(a) => a,
        }
    }
}

/// Incremental formula construction. Terminals are interned so repeated
/// variables and constants share one node; gates are always fresh.
#[derive(Clone, Debug, Default)]
pub struct FormulaBuilder {
    nodes: Vec<Node>,
    vars: HashMap<Var, NodeId>,
    consts: HashMap<u32, NodeId>,
}

impl FormulaBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&mut self, v: Var) -> NodeId {
        if let Some(&id) = self.vars.get(&v) {
            return id;
        }
        let id = self.push(Node::Var(v));
        self.vars.insert(v, id);
        id
    }

    pub fn x(&mut self, i: u32) -> NodeId {
        self.var(Var::X(i))
    }

    pub fn constant(&mut self, c: u32) -> NodeId {
        if let Some(&id) = self.consts.get(&c) {
            return id;
        }
        let id = self.push(Node::Const(c));
        self.consts.insert(c, id);
        id
    }

    /// A terminal that is never shared with other occurrences.
    pub fn fresh_terminal(&mut self, node: Node) -> NodeId {
        debug_assert!(node.is_terminal());
        self.push(node)
    }

    pub fn plus(&mut self, children: Vec<NodeId>) -> NodeId {
        self.push(Node::Plus(children))
    }

    pub fn times(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Times(a, b))
    }

    /// Balanced binary product tree over `factors` (must be nonempty).
    pub fn product(&mut self, factors: &[NodeId]) -> NodeId {
        assert!(!factors.is_empty(), "empty product");
        if factors.len() == 1 {
            return factors[0];
        }
        let mid = factors.len() / 2;
        let left = self.product(&factors[..mid]);
        let right = self.product(&factors[mid..]);
        self.times(left, right)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// Finish with `root`, dropping unreachable nodes.
    pub fn build(self, root: NodeId) -> Result<Formula> {
        let full = Formula::new(self.nodes, root)?;
        Ok(compact(&full))
    }
}

/// Copy the reachable part of `f` into a fresh arena (preserving sharing).
fn compact(f: &Formula) -> Formula {
    let mut remap = vec![usize::MAX; f.nodes.len()];
    let mut nodes = Vec::with_capacity(f.order.len());
    for &id in &f.order {
        let node = match &f.nodes[id] {
            Node::Plus(c) => Node::Plus(c.iter().map(|&x| remap[x]).collect()),
            Node::Times(a, b) => Node::Times(remap[*a], remap[*b]),
            other => other.clone(),
        };
        remap[id] = nodes.len();
        nodes.push(node);
    }
    let order = (0..nodes.len()).collect();
    Formula { nodes, root: remap[f.root], order, is_formula: f.is_formula }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Self { chars: text.chars().peekable(), line: 1, column: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    /// Next token with the position of its first character.
    fn next(&mut self) -> Option<(Tok, usize, usize)> {
        while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
        let (line, column) = (self.line, self.column);
        let c = self.bump()?;
        let tok = match c {
            '(' => Tok::Open,
            ')' => Tok::Close,
            _ => {
                let mut s = String::from(c);
                while matches!(self.chars.peek(), Some(&c) if !c.is_whitespace() && c != '(' && c != ')')
                {
                    s.push(self.bump().unwrap());
                }
                Tok::Atom(s)
            }
        };
        Some((tok, line, column))
    }
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax { line, column, message: message.into() }
}

fn parse_atom(atom: &str, line: usize, column: usize) -> Result<Node> {
    if let Some(hex) = atom.strip_prefix('#') {
        if hex.is_empty() {
            return Err(syntax(line, column, "empty constant"));
        }
        let value = u32::from_str_radix(hex, 16)
            .map_err(|_| syntax(line, column, format!("bad hex constant `{atom}`")))?;
        return Ok(Node::Const(value));
    }
    if atom == "w" {
        return Ok(Node::Var(Var::W));
    }
    let mut chars = atom.chars();
    let kind = chars.next().unwrap();
    let digits = chars.as_str();
    let index: u32 = match digits.parse() {
        Ok(i) if i >= 1 && digits.bytes().all(|b| b.is_ascii_digit()) => i,
        _ => return Err(syntax(line, column, format!("unexpected token `{atom}`"))),
    };
    let var = match kind {
        'x' => Var::X(index),
        'y' => Var::Y(index),
        'z' => Var::Z(index),
        'f' => Var::Fresh(index),
        _ => return Err(syntax(line, column, format!("unexpected token `{atom}`"))),
    };
    Ok(Node::Var(var))
}

/// Parse the text format into a validated formula.
pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut lexer = Lexer::new(text);
    let mut builder = FormulaBuilder::new();
    let root = parse_expr(&mut lexer, &mut builder, None)?;
    if let Some((_, line, column)) = lexer.next() {
        return Err(syntax(line, column, "trailing input after expression"));
    }
    builder.build(root)
}

fn parse_expr(
    lexer: &mut Lexer<'_>,
    b: &mut FormulaBuilder,
    first: Option<(Tok, usize, usize)>,
) -> Result<NodeId> {
    let (tok, line, column) = match first.or_else(|| lexer.next()) {
        Some(t) => t,
        None => return Err(syntax(lexer.line, lexer.column, "unexpected end of input")),
    };
    match tok {
        Tok::Close => Err(syntax(line, column, "unexpected `)`")),
        Tok::Atom(a) => match parse_atom(&a, line, column)? {
            Node::Var(v) => Ok(b.var(v)),
            Node::Const(c) => Ok(b.fresh_terminal(Node::Const(c))),
            _ => unreachable!(),
        },
        Tok::Open => {
            let op = match lexer.next() {
                Some((Tok::Atom(op), l, c)) => (op, l, c),
                Some((_, l, c)) => return Err(syntax(l, c, "expected `+` or `*`")),
                None => return Err(syntax(lexer.line, lexer.column, "unexpected end of input")),
            };
            let mut children = Vec::new();
            loop {
                match lexer.next() {
                    Some((Tok::Close, _, _)) => break,
                    Some(t) => children.push(parse_expr(lexer, b, Some(t))?),
                    None => {
                        return Err(syntax(lexer.line, lexer.column, "unclosed `(`"));
                    }
                }
            }
            match op.0.as_str() {
                "+" => {
                    if children.is_empty() {
                        return Err(Error::FanIn {
                            node: b.len(),
                            message: format!("+ gate at {}:{} has no inputs", line, column),
                        });
                    }
                    Ok(b.plus(children))
                }
                "*" => {
                    if children.len() != 2 {
                        return Err(Error::FanIn {
                            node: b.len(),
                            message: format!(
                                "* gate at {}:{} has {} inputs; exactly 2 required",
                                line,
                                column,
                                children.len()
                            ),
                        });
                    }
                    Ok(b.times(children[0], children[1]))
                }
                other => Err(syntax(op.1, op.2, format!("unknown operator `{other}`"))),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation

/// Evaluate bottom-up over `ring`, each reachable node exactly once.
pub fn evaluate<R, A>(f: &Formula, assignment: A, ring: &R) -> Result<R::Elem>
where
    R: Semiring,
    A: Fn(Var) -> Option<R::Elem>,
{
    let mut values: Vec<Option<R::Elem>> = vec![None; f.nodes.len()];
    for &id in &f.order {
        let value = match &f.nodes[id] {
            Node::Var(v) => assignment(*v).ok_or_else(|| Error::Unassigned(v.to_string()))?,
            Node::Const(c) => ring.constant(*c)?,
            Node::Plus(children) => {
                let mut acc = values[children[0]].clone().unwrap();
                for &c in &children[1..] {
                    acc = ring.add(&acc, values[c].as_ref().unwrap());
                }
                acc
            }
            Node::Times(a, b) => {
                ring.mul(values[*a].as_ref().unwrap(), values[*b].as_ref().unwrap())
            }
        };
        values[id] = Some(value);
    }
    Ok(values[f.root].take().unwrap())
}

// ---------------------------------------------------------------------------
// Expansion

/// A monomial as sorted `(variable, exponent)` pairs with positive exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Self(Vec::new())
    }

    pub fn var(v: Var) -> Self {
        Self(vec![(v, 1)])
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, u32)>) -> Self {
        let mut map = BTreeMap::new();
        for (v, e) in pairs {
            if e > 0 {
                *map.entry(v).or_insert(0) += e;
            }
        }
        Self(map.into_iter().collect())
    }

    pub fn exponents(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0.iter().find(|(u, _)| *u == v).map_or(0, |&(_, e)| e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_multilinear(&self) -> bool {
        self.0.iter().all(|&(_, e)| e == 1)
    }

    pub fn is_q_monomial(&self, q: u32) -> bool {
        self.0.iter().all(|&(_, e)| e <= q - 1)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, b) = (self.0[i], other.0[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => {
                    out.push(a);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// The part of this monomial over variables satisfying `keep`.
    pub fn restrict(&self, keep: impl Fn(Var) -> bool) -> Monomial {
        Monomial(self.0.iter().copied().filter(|&(v, _)| keep(v)).collect())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, (v, e)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            if *e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Sum-product expansion: monomial -> nonzero coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpandedPoly<E> {
    terms: BTreeMap<Monomial, E>,
}

impl<E: Clone + PartialEq + fmt::Debug> ExpandedPoly<E> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, E> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Option<&E> {
        self.terms.get(m)
    }

    pub fn from_terms<R: Semiring<Elem = E>>(
        ring: &R,
        terms: impl IntoIterator<Item = (Monomial, E)>,
    ) -> Self {
        let mut out = Self::zero();
        for (m, c) in terms {
            out.add_term(ring, m, c);
        }
        out
    }

    fn add_term<R: Semiring<Elem = E>>(&mut self, ring: &R, m: Monomial, c: E) {
        if ring.is_zero(&c) {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = ring.add(o.get(), &c);
                if ring.is_zero(&sum) {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add<R: Semiring<Elem = E>>(&self, ring: &R, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(ring, m.clone(), c.clone());
        }
        out
    }

    pub fn mul<R: Semiring<Elem = E>>(&self, ring: &R, other: &Self) -> Self {
        let mut out = Self::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(ring, m1.mul(m2), ring.mul(c1, c2));
            }
        }
        out
    }

    /// Evaluate the expanded polynomial at a point.
    pub fn evaluate<R, A>(&self, ring: &R, assignment: A) -> Result<E>
    where
        R: Semiring<Elem = E>,
        A: Fn(Var) -> Option<E>,
    {
        let mut acc = ring.zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for &(v, e) in m.exponents() {
                let value = assignment(v).ok_or_else(|| Error::Unassigned(v.to_string()))?;
                for _ in 0..e {
                    term = ring.mul(&term, &value);
                }
            }
            acc = ring.add(&acc, &term);
        }
        Ok(acc)
    }
}

/// Expand `f` over `ring` with the default term cap.
pub fn expand<R: Semiring>(f: &Formula, ring: &R) -> Result<ExpandedPoly<R::Elem>> {
    expand_with(f, ring, |_| None, DEFAULT_EXPANSION_CAP)
}

/// Expand `f`, treating every variable for which `scalars` returns a value as
/// that ring constant. Fails once any intermediate exceeds `cap` terms.
pub fn expand_with<R, S>(
    f: &Formula,
    ring: &R,
    scalars: S,
    cap: u128,
) -> Result<ExpandedPoly<R::Elem>>
where
    R: Semiring,
    S: Fn(Var) -> Option<R::Elem>,
{
    let mut values: Vec<Option<ExpandedPoly<R::Elem>>> = vec![None; f.nodes.len()];
    for &id in &f.order {
        let value = match &f.nodes[id] {
            Node::Var(v) => match scalars(*v) {
                Some(c) => ExpandedPoly::from_terms(ring, [(Monomial::one(), c)]),
                None => ExpandedPoly::from_terms(ring, [(Monomial::var(*v), ring.one())]),
            },
            Node::Const(c) => ExpandedPoly::from_terms(ring, [(Monomial::one(), ring.constant(*c)?)]),
            Node::Plus(children) => {
                let estimate: u128 =
                    children.iter().map(|&c| values[c].as_ref().unwrap().len() as u128).sum();
                if estimate > cap {
                    return Err(Error::ExpansionCap { estimate, cap });
                }
                let mut acc = values[children[0]].clone().unwrap();
                for &c in &children[1..] {
                    acc = acc.add(ring, values[c].as_ref().unwrap());
                }
                acc
            }
            Node::Times(a, b) => {
                let (pa, pb) = (values[*a].as_ref().unwrap(), values[*b].as_ref().unwrap());
                let estimate = pa.len() as u128 * pb.len() as u128;
                if estimate > cap {
                    return Err(Error::ExpansionCap { estimate, cap });
                }
                pa.mul(ring, pb)
            }
        };
        values[id] = Some(value);
    }
    Ok(values[f.root].take().unwrap())
}

/// True iff some term is a `q`-monomial of degree exactly `k`.
pub fn has_q_monomial_oracle<E>(p: &ExpandedPoly<E>, q: u32, k: u32) -> bool {
    assert!(q >= 2, "q must be at least 2");
    p.terms.keys().any(|m| m.degree() == k && m.is_q_monomial(q))
}

/// True iff some term is `w^t * pi` with `pi` a degree-`k` `q`-monomial free of `w`.
pub fn has_marked_q_monomial_oracle<E>(p: &ExpandedPoly<E>, q: u32, k: u32, t: u32) -> bool {
    assert!(q >= 2, "q must be at least 2");
    p.terms.keys().any(|m| {
        let rest = m.restrict(|v| v != Var::W);
        m.exponent(Var::W) == t && rest.degree() == k && rest.is_q_monomial(q)
    })
}
