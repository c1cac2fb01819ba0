//! Deterministic q-monomial testing for formulas, its marker-tracking variant,
//! and a randomized engine used as a cross-check.
//!
//! Deterministic pipeline:
//! 1. reconstruct C -> C* -> C' -> C'' ([`TransformTrace`]);
//! 2. build a perfect hash family over the `(q-1) n` replacement variables;
//! 3. take the standard basis `e_1..e_k` of Z_2^k;
//! 4. for each hash function `h`, substitute `y_tau -> e_h(tau) + v_0` and test
//!    the resulting group-algebra-valued formula in the `z` variables;
//! 5. answer no once every function fails.
//!
//! Step 4 asks for a coefficient whose entry at index `2^k - 1` (the sum of the
//! basis vectors) is nonzero. A product of `(e_i + v_0)` over a set `T` of
//! distinct basis vectors is the sum over the span of `T`, which contains that
//! index only when `T` is the whole basis, so the test selects multilinear
//! y-monomials of degree exactly `k`. With a marker cap `t` the same test is
//! applied to the coefficient of `w^t`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formula::{evaluate, expand_with, Formula, Var};
use crate::gf2m::{choose_field, FieldParams, Gf2m, MAX_FIELD_BITS};
use crate::group_algebra::{GroupAlgebra, GroupAlgebraElem, OpSnapshot, TruncPoly, MAX_WHT_K};
use crate::hashing::{build_family_with, BuildOptions, HashFamily, HashProvider};
use crate::pit::{pit_readonce, PitOptions, PitOutcome, PitStats};
use crate::ring::{ScalarRing, Semiring};
use crate::transform::TransformTrace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Deterministic,
    Randomized,
}

impl FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic" => Ok(Engine::Deterministic),
            "randomized" => Ok(Engine::Randomized),
            _ => Err(Error::InvalidParameter(format!("unknown engine `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PitMode {
    #[default]
    Ring,
    /// Full symbolic expansion of the substituted formula.
    Oracle,
}

impl FromStr for PitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(PitMode::Ring),
            "oracle" => Ok(PitMode::Oracle),
            _ => Err(Error::InvalidParameter(format!("unknown pit mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No,
    Indeterminate,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Yes => "yes",
            Answer::No => "no",
            Answer::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Clone, Debug)]
pub struct FdtmConfig {
    pub q: u32,
    pub k: u32,
    pub engine: Engine,
    pub pit_mode: PitMode,
    pub hash_provider: HashProvider,
    pub seed: u64,
    /// Marker degree `t`; `Some` switches to the marker-tracking variant.
    pub marker_cap: Option<u32>,
    /// Lower bound on the field width, on top of the computed one.
    pub min_field_bits: Option<u32>,
    pub hash_options: BuildOptions,
    pub pit_options: PitOptions,
    /// Term cap for [`PitMode::Oracle`].
    pub oracle_cap: u128,
    pub early_exit: bool,
    pub parallel: bool,
    /// Randomized engine trial count; `None` uses [`default_trials`].
    pub trials: Option<usize>,
}

impl FdtmConfig {
    pub fn new(q: u32, k: u32) -> Self {
        Self {
            q,
            k,
            engine: Engine::Deterministic,
            pit_mode: PitMode::Ring,
            hash_provider: HashProvider::Greedy,
            seed: 0,
            marker_cap: None,
            min_field_bits: None,
            hash_options: BuildOptions::default(),
            pit_options: PitOptions::default(),
            oracle_cap: 1_000_000,
            early_exit: true,
            parallel: false,
            trials: None,
        }
    }

    pub fn with_marker(mut self, t: u32) -> Self {
        self.marker_cap = Some(t);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.q < 2 {
            return Err(Error::InvalidParameter(format!("q = {} must be at least 2", self.q)));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.k > MAX_WHT_K {
            return Err(Error::DimensionTooLarge { k: self.k, max: MAX_WHT_K });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FdtmReport {
    pub answer: Answer,
    pub hash_functions_tried: usize,
    pub witness_hash_index: Option<usize>,
    pub op_counts: BTreeMap<&'static str, u64>,
    pub field: FieldParams,
    pub family_certified: bool,
}

impl FdtmReport {
    pub fn count(&self, key: &str) -> u64 {
        self.op_counts.get(key).copied().unwrap_or(0)
    }
}

/// The standard basis of Z_2^k as bit patterns.
pub fn select_basis(k: u32) -> Vec<u64> {
    (0..k).map(|i| 1u64 << i).collect()
}

/// `max(ceil(4 e^k), 90)`. Each trial succeeds on a yes-instance with
/// probability at least `0.288 * 1/2`, so 90 trials keep the miss rate under
/// `2^-20`.
pub fn default_trials(k: u32) -> usize {
    ((4.0 * (k as f64).exp()).ceil() as usize).max(90)
}

fn check_variables(f: &Formula, marked: bool) -> Result<()> {
    for v in f.variables() {
        match v {
            Var::X(_) => {}
            Var::W if marked => {}
            other => {
                return Err(Error::InvalidParameter(format!(
                    "variable {other} is not allowed in {} input",
                    if marked { "marked" } else { "unmarked" }
                )))
            }
        }
    }
    Ok(())
}

fn bits_needed(c: u32) -> u32 {
    32 - c.leading_zeros()
}

fn field_for(f: &Formula, cfg: &FdtmConfig, extra: u32) -> Result<FieldParams> {
    let s = f.gate_count().max(1) as u32;
    let d = choose_field(cfg.k, s)?
        .d
        .max(bits_needed(f.max_constant()))
        .max(cfg.min_field_bits.unwrap_or(1))
        .max(extra);
    if d > MAX_FIELD_BITS {
        return Err(Error::FieldTooWide { d });
    }
    FieldParams::with_width(d)
}

/// Deterministic test. With `cfg.marker_cap = Some(t)` this is
/// [`fdtm_test_marked`].
pub fn fdtm_test(f: &Formula, cfg: &FdtmConfig) -> Result<FdtmReport> {
    cfg.validate()?;
    if !f.is_formula() {
        return Err(Error::InvalidParameter("input must be a formula".into()));
    }
    let marked = cfg.marker_cap.is_some();
    check_variables(f, marked)?;
    let field = field_for(f, cfg, 0)?;
    let n = f.max_x();
    let domain = (cfg.q - 1) * n;
    let mut op_counts = BTreeMap::new();
    if domain < cfg.k {
        // fewer than k replacement variables: no multilinear y-monomial of degree k
        op_counts.insert("hash_functions", 0);
        return Ok(FdtmReport {
            answer: Answer::No,
            hash_functions_tried: 0,
            witness_hash_index: None,
            op_counts,
            field,
            family_certified: true,
        });
    }
    let trace = TransformTrace::build(f, cfg.q)?;
    let family = family_for(f, cfg)?;
    let gf = Arc::new(Gf2m::new(field));
    let target = (1usize << cfg.k) - 1;
    let basis = select_basis(cfg.k);

    let run = |idx: usize| -> Result<(PitOutcome, OpSnapshot, PitStats)> {
        let alg = GroupAlgebra::new(gf.clone(), cfg.k)?;
        let ys: Vec<GroupAlgebraElem> = (1..=domain)
            .map(|tau| alg.shifted(basis[family.color(idx, tau) as usize - 1] as usize))
            .collect();
        let y_of = |v: Var| match v {
            Var::Y(tau) => Some(ys[tau as usize - 1].clone()),
            _ => None,
        };
        let outcome = match cfg.marker_cap {
            None => {
                let witness = |a: &GroupAlgebraElem| a.coeff(target) != 0;
                test_substituted(&trace.c_dprime, &alg, y_of, witness, cfg)?
            }
            Some(t) => {
                let mp = TruncPoly::new(alg.clone(), t as usize);
                let w = mp.monomial(alg.one_elem(), 1);
                let scalars = |v: Var| match v {
                    Var::W => Some(w.clone()),
                    other => y_of(other).map(|e| mp.lift(e)),
                };
                let witness = |p: &Vec<GroupAlgebraElem>| p[t as usize].coeff(target) != 0;
                let out = test_substituted(&trace.c_dprime, &mp, scalars, witness, cfg)?;
                // the marker ring multiplies through its own clone of `alg`
                let snap = mp.inner().counters().snapshot();
                return Ok((out.0, snap + alg.counters().snapshot(), out.1));
            }
        };
        Ok((outcome.0, alg.counters().snapshot(), outcome.1))
    };

    let results: Vec<Option<(PitOutcome, OpSnapshot, PitStats)>> = if cfg.parallel {
        let found = AtomicBool::new(false);
        (0..family.len())
            .into_par_iter()
            .map(|i| {
                if cfg.early_exit && found.load(Ordering::Relaxed) {
                    return Ok(None);
                }
                let r = run(i)?;
                if r.0 == PitOutcome::NonZero {
                    found.store(true, Ordering::Relaxed);
                }
                Ok(Some(r))
            })
            .collect::<Result<_>>()?
    } else {
        let mut out = Vec::with_capacity(family.len());
        for i in 0..family.len() {
            let r = run(i)?;
            let hit = r.0 == PitOutcome::NonZero;
            out.push(Some(r));
            if hit && cfg.early_exit {
                break;
            }
        }
        out
    };

    let mut ops = OpSnapshot::default();
    let mut products = 0u64;
    let mut max_list = 0usize;
    let mut max_hash_ops = 0u64;
    let mut tried = 0usize;
    let mut witness = None;
    let mut indeterminate = false;
    for (i, r) in results.iter().enumerate() {
        let Some((outcome, snap, stats)) = r else { continue };
        tried += 1;
        ops = ops + *snap;
        products += stats.products;
        max_list = max_list.max(stats.max_list);
        max_hash_ops = max_hash_ops.max(snap.int_ops);
        match outcome {
            PitOutcome::NonZero if witness.is_none() => witness = Some(i),
            PitOutcome::Indeterminate => indeterminate = true,
            _ => {}
        }
    }
    let answer = match (witness, indeterminate) {
        (Some(_), _) => Answer::Yes,
        (None, true) => Answer::Indeterminate,
        (None, false) => Answer::No,
    };
    op_counts.insert("hash_functions", family.len() as u64);
    op_counts.insert("hash_functions_tried", tried as u64);
    op_counts.insert("ga_mults", ops.ga_mults);
    op_counts.insert("wht_int_ops", ops.int_ops);
    op_counts.insert("naive_field_ops", ops.naive_ops);
    op_counts.insert("max_hash_int_ops", max_hash_ops);
    op_counts.insert("pit_products", products);
    op_counts.insert("max_class_list", max_list as u64);
    op_counts.insert("c_dprime_gates", trace.c_dprime.gate_count() as u64);
    op_counts.insert("z_vars", trace.z_total as u64);
    Ok(FdtmReport {
        answer,
        hash_functions_tried: tried,
        witness_hash_index: witness,
        op_counts,
        field,
        family_certified: family.certified(),
    })
}

/// Marker variant: yes iff `f` has a term `w^t * pi` with `pi` a degree-`k`
/// q-monomial in the `x` variables.
pub fn fdtm_test_marked(f: &Formula, cfg: &FdtmConfig) -> Result<FdtmReport> {
    if cfg.marker_cap.is_none() {
        return Err(Error::InvalidParameter("marked test needs a marker cap".into()));
    }
    fdtm_test(f, cfg)
}

fn test_substituted<R, S, P>(
    c: &Formula,
    ring: &R,
    scalars: S,
    witness: P,
    cfg: &FdtmConfig,
) -> Result<(PitOutcome, PitStats)>
where
    R: ScalarRing,
    R::Elem: Eq + std::hash::Hash,
    S: Fn(Var) -> Option<R::Elem>,
    P: Fn(&R::Elem) -> bool,
{
    match cfg.pit_mode {
        PitMode::Ring => pit_readonce(c, ring, scalars, witness, cfg.pit_options),
        PitMode::Oracle => match expand_with(c, ring, scalars, cfg.oracle_cap) {
            Ok(p) => {
                let hit = p.terms().values().any(witness);
                Ok((if hit { PitOutcome::NonZero } else { PitOutcome::Zero }, PitStats::default()))
            }
            Err(Error::ExpansionCap { .. }) => Ok((PitOutcome::Indeterminate, PitStats::default())),
            Err(e) => Err(e),
        },
    }
}

/// Build the hash family the deterministic engine would use for `f`.
pub fn family_for(f: &Formula, cfg: &FdtmConfig) -> Result<HashFamily> {
    let domain = (cfg.q - 1) * f.max_x();
    build_family_with(domain, cfg.k, cfg.hash_provider, BuildOptions { seed: cfg.seed, ..cfg.hash_options })
}

/// Randomized engine: random vectors for the replacement variables, random
/// nonzero field values for the annotation variables, and a formal variable
/// tracking y-degree. Never answers yes on a no-instance.
pub fn randomized_test(f: &Formula, cfg: &FdtmConfig) -> Result<FdtmReport> {
    cfg.validate()?;
    if !f.is_formula() {
        return Err(Error::InvalidParameter("input must be a formula".into()));
    }
    let marked = cfg.marker_cap.is_some();
    check_variables(f, marked)?;
    let trace = TransformTrace::build(f, cfg.q)?;
    // 2^d - 1 >= 2 * (number of z variables) bounds the Schwartz-Zippel loss by 1/2
    let sz_bits = bits_needed(2 * trace.z_total + 1);
    let field = field_for(f, cfg, sz_bits)?;
    let gf = Arc::new(Gf2m::new(field));
    let k = cfg.k;
    let target = (1usize << k) - 1;
    let domain = ((cfg.q - 1) * f.max_x()) as usize;
    let trials = cfg.trials.unwrap_or_else(|| default_trials(k));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let order = field.order();
    let z_count = trace.z_total as usize;

    let alg = GroupAlgebra::new(gf.clone(), k)?;
    let eps = TruncPoly::new(alg.clone(), k as usize);
    let mut witness = None;
    let mut tried = 0;
    for trial in 0..trials {
        tried += 1;
        let ys: Vec<GroupAlgebraElem> =
            (0..domain).map(|_| alg.shifted(rng.gen_range(0..1usize << k))).collect();
        let zs: Vec<u16> = (0..z_count).map(|_| rng.gen_range(1..order) as u16).collect();
        let hit = match cfg.marker_cap {
            None => {
                let value = evaluate(
                    &trace.c_dprime,
                    |v| match v {
                        Var::Y(t) => Some(eps.monomial(ys[t as usize - 1].clone(), 1)),
                        Var::Z(i) => Some(eps.lift(alg.scalar(zs[i as usize - 1]))),
                        _ => None,
                    },
                    &eps,
                )?;
                value[k as usize].coeff(target) != 0
            }
            Some(t) => {
                let mp = TruncPoly::new(eps.clone(), t as usize);
                let value = evaluate(
                    &trace.c_dprime,
                    |v| match v {
                        Var::Y(i) => Some(mp.lift(eps.monomial(ys[i as usize - 1].clone(), 1))),
                        Var::Z(i) => Some(mp.lift(eps.lift(alg.scalar(zs[i as usize - 1])))),
                        Var::W => Some(mp.monomial(eps.one(), 1)),
                        _ => None,
                    },
                    &mp,
                )?;
                value[t as usize][k as usize].coeff(target) != 0
            }
        };
        if hit {
            witness = Some(trial);
            break;
        }
    }
    let mut op_counts = BTreeMap::new();
    op_counts.insert("trials", tried as u64);
    Ok(FdtmReport {
        answer: if witness.is_some() { Answer::Yes } else { Answer::No },
        hash_functions_tried: tried,
        witness_hash_index: witness,
        op_counts,
        field,
        family_certified: false,
    })
}

/// Dispatch on `cfg.engine`.
pub fn test_formula(f: &Formula, cfg: &FdtmConfig) -> Result<FdtmReport> {
    match cfg.engine {
        Engine::Deterministic => fdtm_test(f, cfg),
        Engine::Randomized => randomized_test(f, cfg),
    }
}
