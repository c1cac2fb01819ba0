//! Operation-counting benchmark over generated packing instances.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fdtm::{FdtmConfig, FdtmReport};
use crate::problems::{random_packing, solve_packing, PackingInstance};

/// Generated packing suite: for every target degree `k'`, `instances`
/// instances with one set to pick (`k = 1`, `m = k'`) over `k' + extra`
/// elements. The set count is `terminals / k'` rounded, so the formula size
/// stays roughly constant along the suite.
#[derive(Clone, Debug)]
pub struct BenchSuite {
    pub k_primes: Vec<u32>,
    pub instances: usize,
    pub terminals: u32,
    pub extra: u32,
    pub seed: u64,
}

impl Default for BenchSuite {
    fn default() -> Self {
        Self { k_primes: (4..=10).collect(), instances: 30, terminals: 60, extra: 2, seed: 0 }
    }
}

impl BenchSuite {
    pub fn sets_for(&self, k_prime: u32) -> usize {
        ((self.terminals as f64 / k_prime as f64).round() as usize).max(1)
    }

    pub fn instances_for(&self, k_prime: u32) -> Vec<PackingInstance> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (k_prime as u64) << 32);
        let sets = self.sets_for(k_prime);
        (0..self.instances)
            .map(|_| random_packing(&mut rng, k_prime + self.extra, k_prime, 1, sets))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub k: u32,
    /// Summed over the suite's instances.
    pub family_size: u64,
    pub hash_functions_tried: u64,
    pub ga_mults: u64,
    pub int_ops: u64,
    pub wall_secs: f64,
}

impl BenchRow {
    /// Group-algebra integer operations per evaluated hash function.
    pub fn int_ops_per_hash(&self) -> f64 {
        self.int_ops as f64 / self.hash_functions_tried.max(1) as f64
    }

    pub fn ga_mults_per_hash(&self) -> f64 {
        self.ga_mults as f64 / self.hash_functions_tried.max(1) as f64
    }

    /// Row without the wall time, for determinism checks.
    pub fn counters(&self) -> (u32, u64, u64, u64, u64) {
        (self.k, self.family_size, self.hash_functions_tried, self.ga_mults, self.int_ops)
    }
}

/// Deterministic engine that evaluates every hash function and charges every
/// class product, so counters reflect the full per-function algebra stage.
pub fn bench_config() -> FdtmConfig {
    let mut cfg = FdtmConfig::new(2, 1);
    cfg.early_exit = false;
    cfg.pit_options.memoize = false;
    cfg
}

/// Runs the suite with `cfg` as the template (see [`bench_config`]).
pub fn run_bench(suite: &BenchSuite, cfg: &FdtmConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &kp in &suite.k_primes {
        let start = Instant::now();
        let mut row = BenchRow { k: kp, family_size: 0, hash_functions_tried: 0, ga_mults: 0, int_ops: 0, wall_secs: 0.0 };
        for inst in suite.instances_for(kp) {
            for r in solve_packing(&inst, cfg)?.reports {
                accumulate(&mut row, &r);
            }
        }
        row.wall_secs = start.elapsed().as_secs_f64();
        rows.push(row);
    }
    Ok(rows)
}

fn accumulate(row: &mut BenchRow, r: &FdtmReport) {
    row.family_size += r.count("hash_functions");
    row.hash_functions_tried += r.count("hash_functions_tried");
    row.ga_mults += r.count("ga_mults");
    row.int_ops += r.count("wht_int_ops") + r.count("naive_field_ops");
}

pub fn to_tsv(rows: &[BenchRow]) -> String {
    let mut s = String::from("k\tfamily_size\tga_mults\tint_ops\twall_secs\thash_functions\tint_ops_per_hash\n");
    for r in rows {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{:.3}\t{}\t{:.1}\n",
            r.k,
            r.family_size,
            r.ga_mults,
            r.int_ops,
            r.wall_secs,
            r.hash_functions_tried,
            r.int_ops_per_hash()
        ));
    }
    s
}
