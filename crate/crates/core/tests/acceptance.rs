//! One line per acceptance criterion, followed by the individual checks.
//! Runs without the libtest harness so the lines always print.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use potts::cli::suites::run_suite;

struct Criterion {
    id: u8,
    title: &'static str,
    budget: Duration,
    run: fn() -> Result<Vec<String>, Vec<String>>,
}

fn suite(name: &str) -> Result<Vec<String>, Vec<String>> {
    match run_suite(name, None, 0) {
        Ok(report) => {
            let lines = report.checks.iter().map(|c| c.line()).collect();
            if report.passed() {
                Ok(lines)
            } else {
                Err(lines)
            }
        }
        Err(e) => Err(vec![format!("error: {e}")]),
    }
}

fn invariants() -> Result<Vec<String>, Vec<String>> {
    let props: [(&str, fn() -> Result<(), String>); 6] = [
        ("overlap normalization", common::overlap_normalization),
        ("covariance identity", || common::covariance_identity(10, 10_000)),
        ("color permutation symmetry", common::color_permutation_symmetry),
        ("species permutation symmetry", common::species_permutation_symmetry),
        ("level merging", common::level_merging_invariance),
        ("minimize monotone in r", || common::minimize_monotone_in_r(3)),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, prop) in props {
        match prop() {
            Ok(()) => lines.push(format!("PASS {name}")),
            Err(why) => {
                ok = false;
                lines.push(format!("FAIL {name}: {why}"));
            }
        }
    }
    if ok {
        Ok(lines)
    } else {
        Err(lines)
    }
}

const MIN: Duration = Duration::from_secs(60);

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, title: "closed-form identities", budget: MIN, run: || suite("closed-forms") },
        Criterion { id: 2, title: "cascade oracle", budget: MIN * 10, run: || suite("rpc-oracle") },
        Criterion { id: 3, title: "Guerra upper bound", budget: MIN * 20, run: || suite("guerra") },
        Criterion { id: 4, title: "ground-state sandwich", budget: MIN, run: || suite("sandwich") },
        Criterion { id: 5, title: "cut oracle", budget: MIN * 5, run: || suite("cut-oracle") },
        Criterion { id: 6, title: "coupling bound", budget: MIN * 15, run: || suite("coupling") },
        Criterion { id: 7, title: "internal consistency", budget: MIN * 60, run: || suite("consistency") },
        Criterion { id: 8, title: "surrogate consistency", budget: MIN * 30, run: || suite("surrogate") },
        Criterion { id: 9, title: "invariant suites", budget: MIN * 10, run: invariants },
    ];
    let only: Option<u8> = std::env::var("POTTS_ACCEPTANCE").ok().and_then(|v| v.parse().ok());
    let mut summary = Vec::new();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| only.is_none_or(|id| id == c.id)) {
        let t = Instant::now();
        let result = (c.run)();
        let took = t.elapsed();
        let (pass, lines) = match result {
            Ok(l) => (took <= c.budget, l),
            Err(l) => (false, l),
        };
        for l in &lines {
            println!("  [{}] {l}", c.id);
        }
        let line = format!(
            "{} AC{} {}: {} checks in {:.1}s (budget {}s)",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            lines.len(),
            took.as_secs_f64(),
            c.budget.as_secs()
        );
        println!("{line}");
        failed += usize::from(!pass);
        summary.push(line);
    }
    println!("\nacceptance summary");
    for l in &summary {
        println!("{l}");
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
