//! Command-line front end.
//!
//! Exit codes: 0 on a completed computation (including the verdict "no"),
//! 1 on operational or input-format errors, 2 on usage errors, 3 on an
//! indeterminate verdict, 4 when `--oracle` disagrees with the verdict.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qmono::bench::{bench_config, run_bench, to_tsv, BenchSuite};
use qmono::fdtm::{test_formula, Answer, Engine, FdtmConfig, FdtmReport, PitMode};
use qmono::formula::{expand, has_marked_q_monomial_oracle, has_q_monomial_oracle, parse_formula, Formula};
use qmono::gf2m::{FieldParams, Gf2m};
use qmono::hashing::{build_family_with, family_size_report, verify_family, BuildOptions, HashProvider};
use qmono::pit::pit_sreadonce;
use qmono::problems::{self, MinK, Solved};
use qmono::ring::Support;
use qmono::Error;

const EXIT_ERROR: u8 = 1;
const EXIT_INDETERMINATE: u8 = 3;
const EXIT_MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(name = "qmono", version, about = "Deterministic q-monomial testing for arithmetic formulas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether k pairwise disjoint sets exist.
    SolvePacking(SolveArgs),
    /// Decide whether k coordinate-wise disjoint tuples exist.
    SolveMatching(SolveArgs),
    /// Minimal k such that k nodes dominate at least t nodes.
    SolveDominating {
        #[command(flatten)]
        solve: SolveArgs,
        /// Answer the single query "at most k nodes" instead of searching.
        #[arg(long)]
        k: Option<u32>,
    },
    /// Test a formula for a degree-k q-monomial (with marker degree t).
    TestMonomial {
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        q: u32,
        #[arg(long)]
        k: u32,
        /// Marker degree; the formula may then use the variable `w`.
        #[arg(long)]
        t: Option<u32>,
    },
    /// Identity test for a field-coefficient S-read-once formula.
    Pit {
        #[arg(long)]
        input: PathBuf,
        /// Field width d of GF(2^d); defaults to the smallest width holding every constant.
        #[arg(long)]
        field_bits: Option<u32>,
        #[arg(long)]
        oracle: bool,
    },
    /// Operation-count table over a generated packing suite.
    Bench {
        #[arg(long, default_value_t = 4)]
        k_min: u32,
        #[arg(long, default_value_t = 10)]
        k_max: u32,
        #[arg(long, default_value_t = 30)]
        instances: usize,
        #[arg(long, default_value_t = 60)]
        terminals: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reuse class products across gates (lower counts, not 2^k-proportional).
        #[arg(long)]
        memoize: bool,
    },
    /// Build and exhaustively check an (n, k) perfect hash family.
    VerifyPhf {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value = "greedy")]
        provider: HashProvider,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the family in dump format to this path.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "deterministic")]
    engine: Engine,
    #[arg(long, default_value = "ring")]
    pit_mode: PitMode,
    #[arg(long, default_value = "greedy")]
    provider: HashProvider,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trial count for the randomized engine (default max(ceil(4e^k), 90)).
    #[arg(long)]
    trials: Option<usize>,
    /// Evaluate hash functions on all cores.
    #[arg(long)]
    parallel: bool,
    /// Print "#"-prefixed operation counts after the verdict.
    #[arg(long)]
    stats: bool,
    /// Cross-check the verdict against an exhaustive oracle.
    #[arg(long)]
    oracle: bool,
}

impl SolveArgs {
    fn config(&self) -> FdtmConfig {
        let mut cfg = FdtmConfig::new(2, 1);
        cfg.engine = self.engine;
        cfg.pit_mode = self.pit_mode;
        cfg.hash_provider = self.provider;
        cfg.seed = self.seed;
        cfg.parallel = self.parallel;
        cfg.trials = self.trials;
        cfg
    }

    fn read(&self) -> Result<String, Error> {
        read(&self.input)
    }
}

fn read(path: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))
}

/// Verdict, trailing stat lines, and the oracle's verdict when requested.
struct Outcome {
    verdict: String,
    stats: Vec<String>,
    indeterminate: bool,
    oracle: Option<String>,
}

fn stat_lines(reports: &[FdtmReport]) -> Vec<String> {
    let mut lines = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        let tag = if reports.len() > 1 { format!("run {} ", i + 1) } else { String::new() };
        lines.push(format!("# {tag}field d={} irr={:#x}", r.field.d, r.field.irr));
        lines.push(format!("# {tag}family_certified {}", r.family_certified));
        for (key, v) in &r.op_counts {
            lines.push(format!("# {tag}{key} {v}"));
        }
    }
    lines
}

fn answer_text(a: Answer) -> String {
    a.to_string()
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

fn solved(s: Solved, oracle: Option<bool>) -> Outcome {
    Outcome {
        verdict: answer_text(s.answer),
        stats: stat_lines(&s.reports),
        indeterminate: s.answer == Answer::Indeterminate,
        oracle: oracle.map(yes_no),
    }
}

fn min_k_text(k: Option<u32>) -> String {
    match k {
        Some(k) => format!("k={k}"),
        None => "infeasible".to_string(),
    }
}

fn run(cmd: Command) -> Result<Outcome, Error> {
    match cmd {
        Command::SolvePacking(a) => {
            let inst = problems::parse_packing(&a.read()?)?;
            let s = problems::solve_packing(&inst, &a.config())?;
            let oracle = if a.oracle { Some(problems::brute_packing(&inst)?) } else { None };
            Ok(with_stats(solved(s, oracle), a.stats))
        }
        Command::SolveMatching(a) => {
            let inst = problems::parse_matching(&a.read()?)?;
            let s = problems::solve_matching(&inst, &a.config())?;
            let oracle = if a.oracle { Some(problems::brute_matching(&inst)?) } else { None };
            Ok(with_stats(solved(s, oracle), a.stats))
        }
        Command::SolveDominating { solve: a, k: Some(k) } => {
            let inst = problems::parse_dominating(&a.read()?)?;
            let s = problems::solve_dominating(&inst, k, &a.config())?;
            let oracle = if a.oracle { Some(problems::brute_dominating(&inst, k)?) } else { None };
            Ok(with_stats(solved(s, oracle), a.stats))
        }
        Command::SolveDominating { solve: a, k: None } => {
            let inst = problems::parse_dominating(&a.read()?)?;
            if inst.t == 0 {
                return Err(Error::InvalidParameter("t must be at least 1".into()));
            }
            let MinK { k, indeterminate, reports } = problems::solve_dominating_min_k(&inst, &a.config())?;
            let oracle = if a.oracle { Some(min_k_text(problems::brute_dominating_min_k(&inst)?)) } else { None };
            let verdict = if indeterminate { answer_text(Answer::Indeterminate) } else { min_k_text(k) };
            let out = Outcome { verdict, stats: stat_lines(&reports), indeterminate, oracle };
            Ok(with_stats(out, a.stats))
        }
        Command::TestMonomial { solve: a, q, k, t } => {
            let f = parse_formula(&a.read()?)?;
            let mut cfg = a.config();
            cfg.q = q;
            cfg.k = k;
            cfg.marker_cap = t;
            let report = test_formula(&f, &cfg)?;
            let oracle = if a.oracle { Some(monomial_oracle(&f, q, k, t)?) } else { None };
            let out = Outcome {
                verdict: answer_text(report.answer),
                indeterminate: report.answer == Answer::Indeterminate,
                stats: stat_lines(std::slice::from_ref(&report)),
                oracle: oracle.map(yes_no),
            };
            Ok(with_stats(out, a.stats))
        }
        Command::Pit { input, field_bits, oracle } => {
            let f = parse_formula(&read(&input)?)?;
            let d = field_bits.unwrap_or_else(|| (32 - f.max_constant().leading_zeros()).max(1));
            let field = Gf2m::new(FieldParams::with_width(d)?);
            let zero = pit_sreadonce(&f, &field)?;
            let verdict = if zero { "zero" } else { "nonzero" }.to_string();
            let oracle = if oracle {
                let p = expand(&f, &field)?;
                Some(if p.len() == 0 { "zero" } else { "nonzero" }.to_string())
            } else {
                None
            };
            Ok(Outcome { verdict, stats: vec![format!("# field d={d}")], indeterminate: false, oracle })
        }
        Command::Bench { k_min, k_max, instances, terminals, seed, memoize } => {
            if k_min < 3 || k_min > k_max {
                return Err(Error::InvalidParameter("bench needs 3 <= k-min <= k-max".into()));
            }
            let suite = BenchSuite { k_primes: (k_min..=k_max).collect(), instances, terminals, seed, ..Default::default() };
            let mut cfg = bench_config();
            cfg.pit_options.memoize = memoize;
            let rows = run_bench(&suite, &cfg)?;
            let table = to_tsv(&rows);
            Ok(Outcome { verdict: table.trim_end().to_string(), stats: vec![], indeterminate: false, oracle: None })
        }
        Command::VerifyPhf { n, k, provider, seed, dump } => {
            let opts = BuildOptions { seed, ..BuildOptions::default() };
            let mut fam = build_family_with(n, k, provider, opts)?;
            let ok = verify_family(&mut fam)?;
            if let Some(path) = dump {
                std::fs::write(&path, fam.dump())
                    .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display())))?;
            }
            let (size, budget) = family_size_report(&fam);
            let mut stats = vec![format!("# size {size}"), format!("# budget {budget}")];
            stats.push(format!("# provider {provider}"));
            Ok(Outcome {
                verdict: if ok { "certified" } else { "not certified" }.to_string(),
                stats,
                indeterminate: false,
                oracle: None,
            })
        }
    }
}

/// Keeps stat lines only when requested; `pit` and `verify-phf` always print theirs.
fn with_stats(mut out: Outcome, stats: bool) -> Outcome {
    if !stats {
        out.stats.clear();
    }
    out
}

fn monomial_oracle(f: &Formula, q: u32, k: u32, t: Option<u32>) -> Result<bool, Error> {
    let p = expand(f, &Support)?;
    Ok(match t {
        Some(t) => has_marked_q_monomial_oracle(&p, q, k, t),
        None => has_q_monomial_oracle(&p, q, k),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            let mut text = String::new();
            let _ = writeln!(text, "{}", out.verdict);
            for line in &out.stats {
                let _ = writeln!(text, "{line}");
            }
            let mismatch = out.oracle.as_ref().filter(|o| !out.indeterminate && **o != out.verdict);
            if let Some(o) = &out.oracle {
                let _ = writeln!(text, "# oracle {o}");
            }
            print!("{text}");
            if let Some(o) = mismatch {
                eprintln!("error: oracle says `{o}` but the verdict was `{}`", out.verdict);
                ExitCode::from(EXIT_MISMATCH)
            } else if out.indeterminate {
                ExitCode::from(EXIT_INDETERMINATE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
