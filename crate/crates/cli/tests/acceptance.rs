//! One line per acceptance criterion, then the binary-level determinism
//! check. Criterion 7 is expected to fail on its reference weak-field form; the
//! check below pins the size of that discrepancy instead.

use std::process::Command;

use qorder_cli::emit::emit_json;
use qorder_cli::presets;
use qorder_cli::selftest::{self, CriterionResult};

const EXE: &str = env!("CARGO_BIN_EXE_qorder");

fn measured(r: &CriterionResult, key: &str) -> f64 {
    r.measured[key].as_f64().unwrap_or(f64::NAN)
}

/// The threshold itself is right, the leading-order form `r_a²c/GM` is within
/// 1 %, and the reference form `2r_a²c/GM` is off by a factor of two.
fn ordering_discrepancy_is_the_documented_one(r: &CriterionResult) -> Result<(), String> {
    let arrival = measured(r, "max_arrival_relative_error");
    let leading = measured(r, "leading_form_max_relative_deviation");
    let reference = measured(r, "reference_form_max_relative_deviation");
    if !(arrival <= 1e-9) {
        return Err(format!("arrival at threshold off by {arrival:e}"));
    }
    if !(leading <= 0.01) {
        return Err(format!("r_a²c/GM off by {leading}"));
    }
    if !((reference - 1.0).abs() <= 0.01) {
        return Err(format!("2r_a²c/GM deviates by {reference}, expected a factor of 2"));
    }
    Ok(())
}

fn run_binary(args: &[&str], out: &std::path::Path) -> (Option<i32>, Vec<u8>) {
    let status = Command::new(EXE)
        .args(args)
        .arg("--out")
        .arg(out)
        .stderr(std::process::Stdio::null())
        .status()
        .expect("binary runs");
    (status.code(), std::fs::read(out).expect("report written"))
}

fn binary_determinism(selftest_bytes: &[u8]) -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("report.json");
    for name in presets::NAMES {
        let mut runs = Vec::new();
        for threads in ["1", "4", "1", "4"] {
            let (code, bytes) = run_binary(&["preset", name, "--threads", threads], &out);
            if code != Some(0) {
                return Err(format!("preset {name} exited with {code:?}"));
            }
            runs.push(bytes);
        }
        if runs.iter().any(|r| *r != runs[0]) {
            return Err(format!("preset {name} is not byte-stable"));
        }
    }
    for threads in ["1", "4"] {
        let (code, bytes) = run_binary(&["selftest", "--threads", threads], &out);
        // exit code 1 reflects the known criterion-7 failure
        if code != Some(1) {
            return Err(format!("selftest exited with {code:?}"));
        }
        if bytes != selftest_bytes {
            return Err(format!("selftest report on {threads} thread(s) differs from the in-process run"));
        }
    }
    Ok(())
}

fn main() {
    let results = selftest::run_all();
    let mut problems = Vec::new();
    for r in &results {
        println!("{}", selftest::line(r));
        if r.id == 7 {
            if let Err(e) = ordering_discrepancy_is_the_documented_one(r) {
                problems.push(format!("criterion 7: {e}"));
            }
        } else if !r.passed {
            problems.push(format!("criterion {}: {}", r.id, r.detail));
        }
    }
    let report = emit_json(&selftest::report(&results));
    match binary_determinism(&report) {
        Ok(()) => println!("[PASS] 10 determinism (binary): presets and selftest byte-identical on 1 and 4 threads across runs"),
        Err(e) => {
            println!("[FAIL] 10 determinism (binary): {e}");
            problems.push(format!("criterion 10 (binary): {e}"));
        }
    }
    if problems.is_empty() {
        println!("acceptance: all criteria behave as documented");
    } else {
        for p in &problems {
            eprintln!("unexpected: {p}");
        }
        std::process::exit(1);
    }
}
