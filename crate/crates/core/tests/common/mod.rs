#![allow(dead_code)]

use std::collections::BTreeSet;

use qmono::formula::{parse_formula, Formula};
use rand::Rng;

/// Random formula text with exactly `size` tree nodes over `x1..=xn`.
/// Constants `#1..#3` appear with probability `const_p` at the leaves.
pub fn random_formula_text<R: Rng>(rng: &mut R, n: u32, size: usize, const_p: f64) -> String {
    if size == 1 {
        return if rng.gen_bool(const_p) {
            format!("#{}", rng.gen_range(1..=3))
        } else {
            format!("x{}", rng.gen_range(1..=n))
        };
    }
    if size >= 3 && rng.gen_bool(0.55) {
        let a = rng.gen_range(1..size - 1);
        let l = random_formula_text(rng, n, a, const_p);
        let r = random_formula_text(rng, n, size - 1 - a, const_p);
        return format!("(* {l} {r})");
    }
    // plus gate: split size - 1 into a random composition
    let mut left = size - 1;
    let mut parts = Vec::new();
    while left > 0 {
        let p = rng.gen_range(1..=left);
        parts.push(p);
        left -= p;
    }
    let kids: Vec<String> = parts.into_iter().map(|p| random_formula_text(rng, n, p, const_p)).collect();
    format!("(+ {})", kids.join(" "))
}

pub fn random_formula<R: Rng>(rng: &mut R, n: u32, max_size: usize, const_p: f64) -> Formula {
    let size = rng.gen_range(1..=max_size);
    parse_formula(&random_formula_text(rng, n, size, const_p)).expect("generated text parses")
}

/// Every formula text with exactly `size` tree nodes over `x1..=xn`, with
/// children of commutative gates listed in sorted order.
pub fn all_formula_texts(n: u32, size: usize) -> Vec<String> {
    let mut memo: Vec<Vec<String>> = vec![Vec::new()];
    for s in 1..=size {
        let mut out = BTreeSet::new();
        if s == 1 {
            for i in 1..=n {
                out.insert(format!("x{i}"));
            }
        } else {
            for a in 1..s - 1 {
                let b = s - 1 - a;
                for l in &memo[a] {
                    for r in &memo[b] {
                        if l <= r {
                            out.insert(format!("(* {l} {r})"));
                        }
                    }
                }
            }
            let mut seqs = Vec::new();
            sorted_sequences(&memo, s - 1, "", &mut Vec::new(), &mut seqs);
            for kids in seqs {
                out.insert(format!("(+ {})", kids.join(" ")));
            }
        }
        memo.push(out.into_iter().collect());
    }
    memo.swap_remove(size)
}

fn sorted_sequences(memo: &[Vec<String>], left: usize, floor: &str, cur: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
    if left == 0 {
        out.push(cur.clone());
        return;
    }
    for p in 1..=left {
        for t in &memo[p] {
            if t.as_str() >= floor {
                cur.push(t.clone());
                sorted_sequences(memo, left - p, t, cur, out);
                cur.pop();
            }
        }
    }
}

/// Random S-read-once formula: a tree of gates whose leaves are
/// `(* #c x_i)` with distinct variables. With `zero_p > 0` some weights are 0.
pub fn random_sreadonce_text<R: Rng>(rng: &mut R, leaves: u32, d: u32, zero_p: f64) -> String {
    random_sreadonce_text_from(rng, leaves, d, zero_p, 1)
}

/// As [`random_sreadonce_text`] with variables numbered from `first`.
pub fn random_sreadonce_text_from<R: Rng>(rng: &mut R, leaves: u32, d: u32, zero_p: f64, first: u32) -> String {
    let mut next = first - 1;
    sreadonce_rec(rng, leaves, d, zero_p, &mut next)
}

fn sreadonce_rec<R: Rng>(rng: &mut R, leaves: u32, d: u32, zero_p: f64, next: &mut u32) -> String {
    if leaves == 1 {
        *next += 1;
        let c = if rng.gen_bool(zero_p) { 0 } else { rng.gen_range(1..1u32 << d) };
        return format!("(* #{c:x} x{})", *next);
    }
    if rng.gen_bool(0.5) {
        let a = rng.gen_range(1..leaves);
        let l = sreadonce_rec(rng, a, d, zero_p, next);
        let r = sreadonce_rec(rng, leaves - a, d, zero_p, next);
        format!("(* {l} {r})")
    } else {
        let mut left = leaves;
        let mut kids = Vec::new();
        while left > 0 {
            let p = rng.gen_range(1..=left);
            kids.push(sreadonce_rec(rng, p, d, zero_p, next));
            left -= p;
        }
        format!("(+ {})", kids.join(" "))
    }
}

/// Rank over GF(2) by elimination on explicit bit rows.
pub fn rank_gf2(rows: &[u64]) -> usize {
    let mut rows: Vec<u64> = rows.to_vec();
    let mut rank = 0;
    for bit in 0..64 {
        let Some(p) = (rank..rows.len()).find(|&i| rows[i] >> bit & 1 == 1) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank];
        for (i, r) in rows.iter_mut().enumerate() {
            if i != rank && *r >> bit & 1 == 1 {
                *r ^= pivot;
            }
        }
        rank += 1;
    }
    rank
}

/// All XOR combinations of `vs`.
pub fn span(vs: &[u64]) -> BTreeSet<u64> {
    let mut out = BTreeSet::from([0u64]);
    for &v in vs {
        let more: Vec<u64> = out.iter().map(|&s| s ^ v).collect();
        out.extend(more);
    }
    out
}

/// Checks terminal duplication, the annotation properties and the
/// replacement equivalence on one formula. Returns a description of the
/// first violation.
pub fn check_transform_lemmas(f: &Formula) -> Result<(), String> {
    use qmono::formula::{expand, has_q_monomial_oracle, Var};
    use qmono::ring::{Counting, Support};
    use qmono::transform::{duplicate_terminals, TransformTrace};
    use std::collections::{BTreeMap, HashSet};

    let text = f.to_text();
    let err = |what: &str| format!("{what} on {text}");
    let is_x = |v: Var| matches!(v, Var::X(_));
    let is_z = |v: Var| matches!(v, Var::Z(_));
    let is_y = |v: Var| matches!(v, Var::Y(_));

    let fc = expand(f, &Counting).map_err(|e| err(&e.to_string()))?;
    let dup = duplicate_terminals(f);
    if dup.fan_out().iter().any(|&c| c > 1) {
        return Err(err("duplicate_terminals left a shared node"));
    }
    if expand(&dup, &Counting).map_err(|e| err(&e.to_string()))? != fc {
        return Err(err("duplicate_terminals changed the polynomial"));
    }

    let trace = TransformTrace::build(f, 2).map_err(|e| err(&e.to_string()))?;
    let t = trace.c_star.depth() as u32;
    let fp = expand(&trace.c_prime, &Counting).map_err(|e| err(&e.to_string()))?;
    let mut seen_alpha = HashSet::new();
    let mut dropped: BTreeMap<_, u128> = BTreeMap::new();
    for (m, &c) in fp.terms() {
        let alpha = m.restrict(is_z);
        let pi = m.restrict(is_x);
        if c != 1 {
            return Err(err("annotated term with multiplicity above one"));
        }
        if !alpha.is_multilinear() {
            return Err(err("non-multilinear annotation coefficient"));
        }
        if alpha.degree() > t * pi.degree() + 1 {
            return Err(err("annotation coefficient degree above t*k + 1"));
        }
        if !seen_alpha.insert(alpha) {
            return Err(err("annotation coefficient repeated"));
        }
        *dropped.entry(pi).or_default() += 1;
    }
    let direct: BTreeMap<_, u128> = fc.terms().iter().map(|(m, &c)| (m.clone(), c)).collect();
    if dropped != direct {
        return Err(err("setting z = 1 does not recover the polynomial"));
    }

    let fs = expand(f, &Support).map_err(|e| err(&e.to_string()))?;
    let max_deg = fs.terms().keys().map(|m| m.degree()).max().unwrap_or(0);
    for q in [2, 3] {
        let trace = TransformTrace::build(f, q).map_err(|e| err(&e.to_string()))?;
        let g = expand(&trace.c_dprime, &Support).map_err(|e| err(&e.to_string()))?;
        for k in 1..=max_deg + 1 {
            let lhs = has_q_monomial_oracle(&fs, q, k);
            let rhs = g.terms().keys().any(|m| {
                let y = m.restrict(is_y);
                y.degree() == k && y.is_multilinear()
            });
            if lhs != rhs {
                return Err(err(&format!("replacement equivalence fails for q={q}, k={k}")));
            }
        }
    }
    Ok(())
}
