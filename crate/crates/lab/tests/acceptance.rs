//! Runs the ten acceptance criteria and prints one line per criterion.
//!
//! `cargo test -p dispersive-lab --test acceptance -- 3 7` runs a subset.

use std::process::ExitCode;

use dispersive_lab::criteria;

fn main() -> ExitCode {
    let picked: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let which: Vec<usize> = if picked.is_empty() { (1..=10).collect() } else { picked };
    let mut failed = Vec::new();
    for n in which {
        match criteria::run_timed(n) {
            Ok((out, took)) => {
                let verdict = if out.passed() { "PASS" } else { "FAIL" };
                println!("criterion {n}: {verdict} ({:.1}s)", took.as_secs_f64());
                for c in &out.checks {
                    println!("    {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
                }
                if !out.passed() {
                    failed.push(n);
                }
            }
            Err(e) => {
                println!("criterion {n}: FAIL (error: {e:#})");
                failed.push(n);
            }
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
