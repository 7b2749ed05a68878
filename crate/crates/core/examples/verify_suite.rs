//! Run a named verification suite and print its checks.
//!
//! `cargo run --release --example verify_suite -- sandwich`
use potts::cli::suites::{run_suite, SUITES};

fn main() -> potts::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "cut-oracle".into());
    if !SUITES.contains(&name.as_str()) {
        eprintln!("known suites: {}", SUITES.join(", "));
    }
    let report = run_suite(&name, None, 0)?;
    for check in &report.checks {
        println!("{}", check.line());
    }
    println!("{}: {}", report.suite, if report.passed() { "passed" } else { "FAILED" });
    Ok(())
}
