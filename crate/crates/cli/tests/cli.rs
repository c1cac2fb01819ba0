use std::path::PathBuf;
use std::process::{Command, Output};

fn input(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qmono-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn qmono(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmono")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn first_line(o: &Output) -> String {
    stdout(o).lines().next().unwrap_or_default().to_string()
}

fn assert_stats_follow_verdict(o: &Output) {
    let out = stdout(o);
    let mut lines = out.lines();
    assert!(!lines.next().unwrap().starts_with('#'));
    assert!(lines.all(|l| l.starts_with('#')), "{out}");
}

#[test]
fn packing_yes() {
    let p = input("pack.txt", "# three sets\npacking 6 3 2\n1 2 3\n4 5 6\n1 4 5\n");
    let o = qmono(&["solve-packing", "--input", p.to_str().unwrap(), "--stats", "--oracle"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(first_line(&o), "yes");
    assert!(stdout(&o).contains("# oracle yes"));
    assert_stats_follow_verdict(&o);
}

#[test]
fn packing_no_exits_zero() {
    let p = input("pack_no.txt", "packing 5 3 2\n1 2 3\n1 4 5\n");
    let o = qmono(&["solve-packing", "--input", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "no\n");
}

#[test]
fn squared_variable_has_no_multilinear_monomial() {
    let f = input("sq.txt", "(* x1 x1)\n");
    let o = qmono(&["test-monomial", "--input", f.to_str().unwrap(), "--q", "2", "--k", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(first_line(&o), "no");
    let o = qmono(&["test-monomial", "--input", f.to_str().unwrap(), "--q", "3", "--k", "2", "--oracle"]);
    assert_eq!(first_line(&o), "yes");
}

#[test]
fn marked_monomial_test() {
    let f = input("marked.txt", "(* (+ #1 (* w x1)) (+ #1 (* w x2)))\n");
    let o = qmono(&["test-monomial", "--input", f.to_str().unwrap(), "--q", "2", "--k", "2", "--t", "2", "--oracle"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(first_line(&o), "yes");
}

#[test]
fn verify_phf_reports_certified_and_size() {
    let o = qmono(&["verify-phf", "--n", "3", "--k", "2", "--provider", "greedy"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(first_line(&o), "certified");
    assert!(stdout(&o).lines().any(|l| l.starts_with("# size ")));
}

#[test]
fn matching_and_dominating() {
    let m = input("match.txt", "matching 3 2\nsizes 2 2 2\n1 1 1\n2 2 2\n");
    let o = qmono(&["solve-matching", "--input", m.to_str().unwrap(), "--oracle"]);
    assert_eq!((o.status.code(), first_line(&o)), (Some(0), "yes".to_string()));

    let d = input("dom.txt", "dominating 5 5\n1 2\n2 3\n3 4\n4 5\n");
    let o = qmono(&["solve-dominating", "--input", d.to_str().unwrap(), "--oracle", "--stats"]);
    assert_eq!((o.status.code(), first_line(&o)), (Some(0), "k=2".to_string()));
    assert_stats_follow_verdict(&o);

    let o = qmono(&["solve-dominating", "--input", d.to_str().unwrap(), "--k", "1"]);
    assert_eq!(first_line(&o), "no");

    let big = input("dom_big.txt", "dominating 2 3\n1 2\n");
    let o = qmono(&["solve-dominating", "--input", big.to_str().unwrap()]);
    assert_eq!((o.status.code(), first_line(&o)), (Some(0), "infeasible".to_string()));
}

#[test]
fn pit_command() {
    let z = input("pit_zero.txt", "(* (+ (* #0 x1) (* #0 x2)) (* #3 x3))\n");
    let o = qmono(&["pit", "--input", z.to_str().unwrap(), "--oracle"]);
    assert_eq!((o.status.code(), first_line(&o)), (Some(0), "zero".to_string()));
    let nz = input("pit_nonzero.txt", "(+ (* #1 x1) (* #2 x2))\n");
    let o = qmono(&["pit", "--input", nz.to_str().unwrap()]);
    assert_eq!(first_line(&o), "nonzero");
    let shared = input("pit_shared.txt", "(* (* #1 x1) (* #1 x1))\n");
    assert_eq!(qmono(&["pit", "--input", shared.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn bench_table() {
    let o = qmono(&["bench", "--k-min", "4", "--k-max", "5", "--instances", "2", "--terminals", "12"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("k\tfamily_size\tga_mults\tint_ops\twall_secs"));
    assert!(lines[1].starts_with("4\t"));
    let again = stdout(&qmono(&["bench", "--k-min", "4", "--k-max", "5", "--instances", "2", "--terminals", "12"]));
    let counters = |s: &str| s.lines().map(|l| l.split('\t').take(4).collect::<Vec<_>>().join("\t")).collect::<Vec<_>>();
    assert_eq!(counters(&out), counters(&again));
}

#[test]
fn errors_and_usage() {
    let bad = input("bad.txt", "packing 6 3 1\n1 2 3\n1 2\n");
    let o = qmono(&["solve-packing", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let missing = qmono(&["solve-packing", "--input", "/nonexistent/qmono.txt"]);
    assert_eq!(missing.status.code(), Some(1));

    let f = input("usage.txt", "(* x1 x2)\n");
    assert_eq!(qmono(&["test-monomial", "--input", f.to_str().unwrap(), "--q", "2"]).status.code(), Some(2));
    assert_eq!(qmono(&["solve-packing", "--input", f.to_str().unwrap(), "--engine", "magic"]).status.code(), Some(2));
    assert_eq!(qmono(&["solve-packing", "--input", f.to_str().unwrap(), "--t", "2"]).status.code(), Some(2));

    let syntax = input("syntax.txt", "(* x1 x2 x3)\n");
    let o = qmono(&["test-monomial", "--input", syntax.to_str().unwrap(), "--q", "2", "--k", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oracle_mismatch_exits_four() {
    // one randomized trial misses a present monomial for some seeds
    let f = input("miss.txt", "(* (* x1 x2) (* x3 x4))\n");
    let path = f.to_str().unwrap();
    let mut seen_miss = false;
    for seed in 0..64 {
        let seed = seed.to_string();
        let o = qmono(&[
            "test-monomial", "--input", path, "--q", "2", "--k", "4", "--engine", "randomized", "--trials", "1",
            "--seed", &seed, "--oracle",
        ]);
        match first_line(&o).as_str() {
            "yes" => assert_eq!(o.status.code(), Some(0)),
            "no" => {
                assert_eq!(o.status.code(), Some(4));
                seen_miss = true;
            }
            other => panic!("unexpected verdict {other}"),
        }
    }
    assert!(seen_miss);
}
