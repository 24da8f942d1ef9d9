//! The twelve acceptance criteria, one line each. Runs the full verification
//! suite twice: once for criteria 1-11 and the wall-time bound, again for
//! determinism.

use std::process::ExitCode;
use std::time::Instant;

use muskat::verify::{verify_suite, CheckResult, Module, VerifyReport};

const WALL_LIMIT_SECONDS: f64 = 600.0;

fn summary(c: &CheckResult) -> String {
    let vals: Vec<String> = c
        .measured
        .iter()
        .take(4)
        .map(|(n, v)| format!("{n}={v:.3e}"))
        .collect();
    format!("{} [{}] ({:.2}s)", vals.join(", "), c.bound, c.seconds)
}

fn same_measurements(a: &VerifyReport, b: &VerifyReport) -> Result<(), String> {
    for (x, y) in a.checks.iter().zip(&b.checks) {
        if x.id != y.id || x.passed != y.passed || x.measured.len() != y.measured.len() {
            return Err(format!("{} differs in shape", x.id));
        }
        for ((n, u), (_, v)) in x.measured.iter().zip(&y.measured) {
            // timings are the only measured values allowed to change
            if !n.ends_with("seconds") && u.to_bits() != v.to_bits() {
                return Err(format!("{} {n}: {u:e} vs {v:e}", x.id));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let start = Instant::now();
    let first = verify_suite(&Module::ALL);
    let first_seconds = start.elapsed().as_secs_f64();
    let second = verify_suite(&Module::ALL);

    let mut all = true;
    for i in 1..=11 {
        let id = format!("C{i}");
        let line = match first.checks.iter().find(|c| c.id == id) {
            Some(c) => {
                all &= c.passed;
                format!(
                    "{} {id}: {} {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.title,
                    summary(c)
                )
            }
            None => {
                all = false;
                format!("FAIL {id}: missing from the suite")
            }
        };
        println!("{line}");
        if let Some(c) = first
            .checks
            .iter()
            .find(|c| c.id == id && !c.detail.is_empty() && !c.passed)
        {
            println!("     {}", c.detail);
        }
    }
    let det = same_measurements(&first, &second);
    let c12 = first_seconds <= WALL_LIMIT_SECONDS && det.is_ok();
    all &= c12;
    println!(
        "{} C12: full suite in {first_seconds:.1}s (limit {WALL_LIMIT_SECONDS}s), repeat run {}",
        if c12 { "PASS" } else { "FAIL" },
        match &det {
            Ok(()) => "bit-identical".to_string(),
            Err(e) => format!("differs: {e}"),
        }
    );
    let extra: Vec<&str> = first
        .checks
        .iter()
        .filter(|c| !c.id.starts_with('C'))
        .map(|c| c.id)
        .collect();
    let extra_ok = first
        .checks
        .iter()
        .filter(|c| !c.id.starts_with('C'))
        .all(|c| c.passed);
    println!(
        "     module checks {extra:?}: {}",
        if extra_ok { "pass" } else { "FAIL" }
    );
    if all && extra_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
