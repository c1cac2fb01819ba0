//! Identity testing for read-once formulas with scalar leaves.
//!
//! Two engines share this module:
//!
//! * [`reduce_steps`] performs the gate-collapse reduction literally on an
//!   S-read-once formula over a field: `(* alpha x)` pairs become weighted
//!   leaves, `+` gates merge the linear forms of their children, and a `*` gate
//!   over two linear forms is replaced by `d * f` with `f` a fresh variable and
//!   `d` the collapse scalar of all pairwise products. Every intermediate stage
//!   is available as a [`Formula`].
//! * [`pit_readonce`] evaluates any formula that is read-once in its
//!   non-scalar variables. Distinct monomials never cancel there, so a node is
//!   summarized by its exact constant term plus the set of scalar classes (up to
//!   nonzero field multiples) of its other coefficients. Over a field every
//!   class is the unit class and the summary is the collapse scalar; over the
//!   group algebra the set is the product list kept by ring mode.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::formula::{expand_with, Formula, FormulaBuilder, Node, NodeId, Var};
use crate::gf2m::{FieldElem, Gf2m};
use crate::ring::ScalarRing;

/// Largest scalar-class list kept per node before falling back to expansion.
pub const RING_LIST_CAP: usize = 4096;

/// Term cap for the expansion fallback.
pub const ORACLE_FALLBACK_CAP: u128 = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PitOutcome {
    Zero,
    NonZero,
    /// The class list overflowed and the expansion fallback was out of reach.
    Indeterminate,
}

#[derive(Clone, Copy, Debug)]
pub struct PitOptions {
    pub list_cap: usize,
    pub oracle_cap: u128,
    /// Reuse class products across gates. Disabling it makes every class
    /// pair at every gate cost one ring multiplication.
    pub memoize: bool,
}

impl Default for PitOptions {
    fn default() -> Self {
        Self { list_cap: RING_LIST_CAP, oracle_cap: ORACLE_FALLBACK_CAP, memoize: true }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PitStats {
    /// Scalar products computed (memo misses).
    pub products: u64,
    /// Largest class list seen at any node.
    pub max_list: usize,
    pub oracle_fallback: bool,
}

/// Tree-shaped including terminals, every variable in one terminal, and every
/// terminal paired under a `*` gate with a terminal of the other kind.
pub fn is_sreadonce(f: &Formula) -> bool {
    if !f.is_formula() || f.node(f.root()).is_terminal() {
        return false;
    }
    let fan = f.fan_out();
    let mut seen = HashSet::new();
    for &id in f.topo_order() {
        match f.node(id) {
            Node::Var(v) => {
                if fan[id] != 1 || !seen.insert(*v) {
                    return false;
                }
            }
            Node::Const(_) => {
                if fan[id] != 1 {
                    return false;
                }
            }
            Node::Plus(children) => {
                if children.iter().any(|&c| f.node(c).is_terminal()) {
                    return false;
                }
            }
            Node::Times(a, b) => {
                let (na, nb) = (f.node(*a), f.node(*b));
                let leaf_pair = matches!(
                    (na, nb),
                    (Node::Const(_), Node::Var(_)) | (Node::Var(_), Node::Const(_))
                );
                if !leaf_pair && (na.is_terminal() || nb.is_terminal()) {
                    return false;
                }
            }
        }
    }
    true
}

/// Field collapse scalar: zero when every product vanishes, otherwise the unit 1.
pub fn collapse_scalar(products: &[FieldElem]) -> FieldElem {
    products.iter().any(|&p| p != 0) as FieldElem
}

/// Ring collapse: the deduplicated normalized nonzero products.
pub fn collapse_products<R>(ring: &R, products: &[R::Elem]) -> Vec<R::Elem>
where
    R: ScalarRing,
    R::Elem: Eq + Hash,
{
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for p in products {
        if ring.is_zero(p) {
            continue;
        }
        let n = ring.normalize(p);
        if seen.insert(n.clone()) {
            out.push(n);
        }
    }
    out
}

/// Identity test for a field-coefficient S-read-once formula.
/// Returns `true` when the formula is identically zero.
pub fn pit_sreadonce(f: &Formula, field: &Gf2m) -> Result<bool> {
    if !is_sreadonce(f) {
        return Err(Error::NotSReadOnce(f.to_string()));
    }
    let (outcome, _) = pit_readonce(f, field, |_| None, |c| *c != 0, PitOptions::default())?;
    Ok(outcome == PitOutcome::Zero)
}

/// Ring-mode identity test for an S-read-once formula whose scalars are
/// supplied by `scalars` (constants embed through the ring).
pub fn pit_sreadonce_ring<R, S>(f: &Formula, ring: &R, scalars: S) -> Result<PitOutcome>
where
    R: ScalarRing,
    R::Elem: Eq + Hash,
    S: Fn(Var) -> Option<R::Elem>,
{
    let (outcome, _) = pit_readonce(f, ring, scalars, |c| !ring.is_zero(c), PitOptions::default())?;
    Ok(outcome)
}

struct Interner<E> {
    ids: HashMap<E, u32>,
    elems: Vec<E>,
}

impl<E: Clone + Eq + Hash> Interner<E> {
    fn new() -> Self {
        Self { ids: HashMap::new(), elems: Vec::new() }
    }

    fn intern(&mut self, e: E) -> u32 {
        if let Some(&id) = self.ids.get(&e) {
            return id;
        }
        let id = self.elems.len() as u32;
        self.ids.insert(e.clone(), id);
        self.elems.push(e);
        id
    }
}

#[derive(Clone)]
struct Summary<E> {
    constant: E,
    /// Sorted, deduplicated class ids of the non-constant coefficients.
    classes: Vec<u32>,
}

/// Decide whether some coefficient of `f` satisfies `witness`, where `f` is
/// read-once in every variable not mapped by `scalars`.
///
/// `witness` must be invariant under nonzero field scaling and false on zero.
pub fn pit_readonce<R, S, P>(
    f: &Formula,
    ring: &R,
    scalars: S,
    witness: P,
    opts: PitOptions,
) -> Result<(PitOutcome, PitStats)>
where
    R: ScalarRing,
    R::Elem: Eq + Hash,
    S: Fn(Var) -> Option<R::Elem>,
    P: Fn(&R::Elem) -> bool,
{
    let fan = f.fan_out();
    let mut stats = PitStats::default();
    let mut classes = Interner::new();
    let one = classes.intern(ring.normalize(&ring.one()));
    let mut memo: HashMap<(u32, u32), Option<u32>> = HashMap::new();
    let mut values: Vec<Option<Summary<R::Elem>>> = (0..f.nodes().len()).map(|_| None).collect();

    // Class of a product of two classes, `None` when it vanishes.
    let mut product = |a: u32,
                       b: u32,
                       classes: &mut Interner<R::Elem>,
                       stats: &mut PitStats|
     -> Option<u32> {
        if a == one {
            return Some(b);
        }
        if b == one {
            return Some(a);
        }
        let key = (a.min(b), a.max(b));
        if let Some(&hit) = memo.get(&key).filter(|_| opts.memoize) {
            return hit;
        }
        stats.products += 1;
        let p = ring.mul(&classes.elems[a as usize], &classes.elems[b as usize]);
        let out = if ring.is_zero(&p) { None } else { Some(classes.intern(ring.normalize(&p))) };
        memo.insert(key, out);
        out
    };

    // Shared terminals feed several parents; everything else is consumed once.
    let take = |values: &mut Vec<Option<Summary<R::Elem>>>, c: NodeId| {
        if fan[c] > 1 {
            values[c].clone().expect("child evaluated before parent")
        } else {
            values[c].take().expect("child evaluated before parent")
        }
    };

    for &id in f.topo_order() {
        let summary = match f.node(id) {
            Node::Var(v) => match scalars(*v) {
                Some(c) => Summary { constant: c, classes: Vec::new() },
                None => {
                    if fan[id] > 1 {
                        return Err(Error::NotSReadOnce(format!("variable {v} is read more than once")));
                    }
                    Summary { constant: ring.zero(), classes: vec![one] }
                }
            },
            Node::Const(bits) => Summary { constant: ring.constant(*bits)?, classes: Vec::new() },
            Node::Plus(children) => {
                let mut constant = ring.zero();
                let mut set: Vec<u32> = Vec::new();
                for &c in children {
                    let s = take(&mut values, c);
                    constant = ring.add(&constant, &s.constant);
                    set.extend(s.classes);
                }
                set.sort_unstable();
                set.dedup();
                Summary { constant, classes: set }
            }
            Node::Times(a, b) => {
                let sa = take(&mut values, *a);
                let sb = take(&mut values, *b);
                let constant = if ring.is_zero(&sa.constant) || ring.is_zero(&sb.constant) {
                    ring.zero()
                } else {
                    ring.mul(&sa.constant, &sb.constant)
                };
                let mut set = Vec::new();
                let ca = (!ring.is_zero(&sa.constant)).then(|| classes.intern(ring.normalize(&sa.constant)));
                let cb = (!ring.is_zero(&sb.constant)).then(|| classes.intern(ring.normalize(&sb.constant)));
                if let Some(ca) = ca {
                    set.extend(sb.classes.iter().filter_map(|&y| product(ca, y, &mut classes, &mut stats)));
                }
                if let Some(cb) = cb {
                    set.extend(sa.classes.iter().filter_map(|&x| product(x, cb, &mut classes, &mut stats)));
                }
                for &x in &sa.classes {
                    for &y in &sb.classes {
                        if let Some(p) = product(x, y, &mut classes, &mut stats) {
                            set.push(p);
                        }
                    }
                }
                set.sort_unstable();
                set.dedup();
                Summary { constant, classes: set }
            }
        };
        stats.max_list = stats.max_list.max(summary.classes.len());
        if summary.classes.len() > opts.list_cap {
            return fallback(f, ring, &scalars, &witness, opts, stats);
        }
        values[id] = Some(summary);
    }
    let root = values[f.root()].take().unwrap();
    let hit = witness(&root.constant)
        || root.classes.iter().any(|&c| witness(&classes.elems[c as usize]));
    Ok((if hit { PitOutcome::NonZero } else { PitOutcome::Zero }, stats))
}

fn fallback<R, S, P>(
    f: &Formula,
    ring: &R,
    scalars: &S,
    witness: &P,
    opts: PitOptions,
    mut stats: PitStats,
) -> Result<(PitOutcome, PitStats)>
where
    R: ScalarRing,
    R::Elem: Eq + Hash,
    S: Fn(Var) -> Option<R::Elem>,
    P: Fn(&R::Elem) -> bool,
{
    stats.oracle_fallback = true;
    match expand_with(f, ring, scalars, opts.oracle_cap) {
        Ok(p) => {
            let hit = p.terms().values().any(witness);
            Ok((if hit { PitOutcome::NonZero } else { PitOutcome::Zero }, stats))
        }
        Err(Error::ExpansionCap { .. }) => Ok((PitOutcome::Indeterminate, stats)),
        Err(e) => Err(e),
    }
}

/// The stages of the literal collapse reduction.
#[derive(Clone, Debug)]
pub struct Reduction {
    /// The formula after leaf pairing and after every later collapse, in order.
    pub steps: Vec<Formula>,
    /// Size of each stage, counting a weighted linear form as one node.
    pub sizes: Vec<usize>,
    /// Number of gate collapses (leaf pairings included).
    pub collapses: usize,
    /// Largest number of scalar products formed by one collapse.
    pub max_products: usize,
    pub is_zero: bool,
}

/// Run the collapse reduction on a field-coefficient S-read-once formula.
/// Collapses proceed bottom-up: among gates whose children are all weighted
/// leaves, the one farthest from the root goes first, ties to the lowest id.
pub fn reduce_steps(f: &Formula, field: &Gf2m) -> Result<Reduction> {
    if !is_sreadonce(f) {
        return Err(Error::NotSReadOnce(f.to_string()));
    }
    let mut next_fresh = f
        .variables()
        .into_iter()
        .filter_map(|v| match v {
            Var::Fresh(i) => Some(i),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let n = f.nodes().len();
    let mut depth = vec![0usize; n];
    for &id in f.topo_order().iter().rev() {
        for c in f.children(id) {
            depth[c] = depth[id] + 1;
        }
    }
    let mut linear: Vec<Option<Vec<(FieldElem, Var)>>> = vec![None; n];
    let mut collapses = 0;
    let mut max_products = 0;
    let mut steps = Vec::new();
    let mut sizes = Vec::new();

    for &id in f.topo_order() {
        if let Node::Times(a, b) = f.node(id) {
            let pair = match (f.node(*a), f.node(*b)) {
                (Node::Const(c), Node::Var(v)) | (Node::Var(v), Node::Const(c)) => Some((*c, *v)),
                _ => None,
            };
            if let Some((c, v)) = pair {
                linear[id] = Some(vec![(field.check(c)?, v)]);
                collapses += 1;
            }
        }
    }
    steps.push(snapshot(f, &linear)?);
    sizes.push(abstract_size(f, &linear));

    loop {
        if linear[f.root()].is_some() {
            break;
        }
        let ready = f
            .topo_order()
            .iter()
            .copied()
            .filter(|&id| {
                linear[id].is_none()
                    && f.node(id).is_gate()
                    && f.children(id).iter().all(|&c| linear[c].is_some())
            })
            .max_by(|&x, &y| depth[x].cmp(&depth[y]).then(y.cmp(&x)))
            .ok_or_else(|| Error::NotSReadOnce("reduction stalled".into()))?;
        let form = match f.node(ready) {
            Node::Plus(children) => {
                children.iter().flat_map(|&c| linear[c].clone().unwrap()).collect()
            }
            Node::Times(a, b) => {
                let (la, lb) = (linear[*a].as_ref().unwrap(), linear[*b].as_ref().unwrap());
                let products: Vec<FieldElem> = la
                    .iter()
                    .flat_map(|&(x, _)| lb.iter().map(move |&(y, _)| field.mul(x, y)))
                    .collect();
                max_products = max_products.max(products.len());
                next_fresh += 1;
                vec![(collapse_scalar(&products), Var::Fresh(next_fresh))]
            }
            _ => unreachable!("terminals are never collapse targets"),
        };
        linear[ready] = Some(form);
        collapses += 1;
        steps.push(snapshot(f, &linear)?);
        sizes.push(abstract_size(f, &linear));
    }
    let is_zero = linear[f.root()].as_ref().unwrap().iter().all(|&(c, _)| c == 0);
    Ok(Reduction { steps, sizes, collapses, max_products, is_zero })
}

fn abstract_size(f: &Formula, linear: &[Option<Vec<(FieldElem, Var)>>]) -> usize {
    fn count(f: &Formula, id: NodeId, linear: &[Option<Vec<(FieldElem, Var)>>]) -> usize {
        if linear[id].is_some() {
            return 1;
        }
        1 + f.children(id).iter().map(|&c| count(f, c, linear)).sum::<usize>()
    }
    count(f, f.root(), linear)
}

/// The current stage as a formula: collapsed nodes become sums of `(* #c v)`.
fn snapshot(f: &Formula, linear: &[Option<Vec<(FieldElem, Var)>>]) -> Result<Formula> {
    fn emit(
        f: &Formula,
        id: NodeId,
        linear: &[Option<Vec<(FieldElem, Var)>>],
        b: &mut FormulaBuilder,
    ) -> NodeId {
        if let Some(form) = &linear[id] {
            let leaves: Vec<NodeId> = form
                .iter()
                .map(|&(c, v)| {
                    let cn = b.fresh_terminal(Node::Const(c as u32));
                    let vn = b.var(v);
                    b.times(cn, vn)
                })
                .collect();
            return if leaves.len() == 1 { leaves[0] } else { b.plus(leaves) };
        }
        match f.node(id) {
            Node::Plus(children) => {
                let kids = children.iter().map(|&c| emit(f, c, linear, b)).collect();
                b.plus(kids)
            }
            Node::Times(x, y) => {
                let l = emit(f, *x, linear, b);
                let r = emit(f, *y, linear, b);
                b.times(l, r)
            }
            t => b.fresh_terminal(t.clone()),
        }
    }
    let mut b = FormulaBuilder::new();
    let root = emit(f, f.root(), linear, &mut b);
    b.build(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{expand, parse_formula};
    use crate::group_algebra::GroupAlgebra;
    use std::sync::Arc;

    fn gf(d: u32) -> Gf2m {
        Gf2m::with_width(d).unwrap()
    }

    #[test]
    fn recognizer_cases() {
        let yes = parse_formula("(* (+ (* #3 x1) (* #5 x2)) (* #7 x3))").unwrap();
        assert!(is_sreadonce(&yes));
        let twice = parse_formula("(+ (* #3 x1) (* #5 x1))").unwrap();
        assert!(!is_sreadonce(&twice));
        let bare = parse_formula("(+ x1 (* #1 x2))").unwrap();
        assert!(!is_sreadonce(&bare));
        let mut b = FormulaBuilder::new();
        let c = b.constant(3);
        let (x1, x2) = (b.x(1), b.x(2));
        let (l, r) = (b.times(c, x1), b.times(c, x2));
        let root = b.plus(vec![l, r]);
        assert!(!is_sreadonce(&b.build(root).unwrap()));
        assert!(is_sreadonce(&parse_formula("(+ (* #3 x1) (* #3 x2))").unwrap()));
        assert!(!is_sreadonce(&parse_formula("x1").unwrap()));
    }

    #[test]
    fn single_leaf_nonzero() {
        let f = parse_formula("(* #3 x1)").unwrap();
        assert!(!pit_sreadonce(&f, &gf(3)).unwrap());
        let z = parse_formula("(* #0 x1)").unwrap();
        assert!(pit_sreadonce(&z, &gf(3)).unwrap());
    }

    #[test]
    fn equal_scalars_on_distinct_variables_do_not_cancel() {
        let mut b = FormulaBuilder::new();
        let c1 = b.fresh_terminal(Node::Const(5));
        let c2 = b.fresh_terminal(Node::Const(5));
        let x1 = b.x(1);
        let x2 = b.x(2);
        let l = b.times(c1, x1);
        let r = b.times(c2, x2);
        let root = b.plus(vec![l, r]);
        let f = b.build(root).unwrap();
        assert!(is_sreadonce(&f));
        assert!(!pit_sreadonce(&f, &gf(3)).unwrap());
    }

    #[test]
    fn planted_zero_kills_product() {
        let f = parse_formula("(* (+ (* #0 x1) (* #0 x2)) (* #7 x3))").unwrap();
        assert!(pit_sreadonce(&f, &gf(3)).unwrap());
        let r = reduce_steps(&f, &gf(3)).unwrap();
        assert!(r.is_zero);
        for step in &r.steps {
            assert!(expand(step, &gf(3)).unwrap().is_empty());
        }
    }

    #[test]
    fn reduction_steps_preserve_verdict() {
        let f = parse_formula(
            "(+ (* (+ (* #3 x1) (* #5 x2)) (* #7 x3)) (* (* #2 x4) (+ (* #1 x5) (* #6 x6))))",
        )
        .unwrap();
        let field = gf(3);
        let r = reduce_steps(&f, &field).unwrap();
        assert!(!r.is_zero);
        assert!(r.collapses <= f.gate_count());
        assert_eq!(r.sizes.len(), r.steps.len());
        for w in r.sizes.windows(2) {
            assert!(w[1] < w[0]);
        }
        for step in &r.steps {
            assert!(is_sreadonce(step));
            assert!(!expand(step, &field).unwrap().is_empty());
        }
    }

    #[test]
    fn collapse_scalar_cases() {
        assert_eq!(collapse_scalar(&[0, 0, 0]), 0);
        assert_eq!(collapse_scalar(&[0, 6, 0]), 1);
        let a = GroupAlgebra::new(Arc::new(gf(2)), 2).unwrap();
        let s = a.shifted(1);
        let sq = crate::ring::Semiring::mul(&a, &s, &s);
        assert!(collapse_products(&a, &[sq.clone()]).is_empty());
        let kept = collapse_products(&a, &[s.clone(), a.scale(&s, 3), sq, a.shifted(2)]);
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn ring_mode_zero_divisors() {
        let a = GroupAlgebra::new(Arc::new(gf(2)), 2).unwrap();
        // (s x1) (s x2) with s = v1 + v0 vanishes since s^2 = 0
        let f = parse_formula("(* (* y1 x1) (* y2 x2))").unwrap();
        let s = a.shifted(1);
        let t = a.shifted(2);
        let same = |v: Var| matches!(v, Var::Y(_)).then(|| s.clone());
        assert_eq!(pit_sreadonce_ring(&f, &a, same).unwrap(), PitOutcome::Zero);
        let differ = |v: Var| match v {
            Var::Y(1) => Some(s.clone()),
            Var::Y(2) => Some(t.clone()),
            _ => None,
        };
        assert_eq!(pit_sreadonce_ring(&f, &a, differ).unwrap(), PitOutcome::NonZero);
    }

    #[test]
    fn constant_terms_are_exact() {
        // (#1 + #1) * x1 over a field is zero even though the gates are not S-read-once
        let f = parse_formula("(* (+ #1 #1) x1)").unwrap();
        let field = gf(2);
        let (out, _) = pit_readonce(&f, &field, |_| None, |c| *c != 0, PitOptions::default()).unwrap();
        assert_eq!(out, PitOutcome::Zero);
    }

    #[test]
    fn overflow_falls_back_then_reports_indeterminate() {
        let f = parse_formula("(* (+ (* #1 x1) (* #1 x2)) (+ (* #1 x3) (* #2 x4)))").unwrap();
        let a = GroupAlgebra::new(Arc::new(gf(2)), 2).unwrap();
        let opts = PitOptions { list_cap: 0, oracle_cap: 1000, ..Default::default() };
        let (out, stats) = pit_readonce(&f, &a, |_| None, |c| !c.is_zero(), opts).unwrap();
        assert_eq!(out, PitOutcome::NonZero);
        assert!(stats.oracle_fallback);
        let opts = PitOptions { list_cap: 0, oracle_cap: 1, ..Default::default() };
        let (out, _) = pit_readonce(&f, &a, |_| None, |c| !c.is_zero(), opts).unwrap();
        assert_eq!(out, PitOutcome::Indeterminate);
    }

    #[test]
    fn rejects_repeated_variables() {
        let f = parse_formula("(+ (* #1 x1) (* #2 x1))").unwrap();
        assert!(matches!(pit_sreadonce(&f, &gf(2)), Err(Error::NotSReadOnce(_))));
    }
}
