//! Runs every acceptance criterion through `besselflow suite` and prints one
//! line per criterion. Exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::process::{Command, ExitCode};

const CRITERIA: u32 = 12;

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let status = Command::new(env!("CARGO_BIN_EXE_besselflow"))
        .args(["suite", "--seed", "42", "--out"])
        .arg(dir.path())
        .stdout(std::process::Stdio::null())
        .status()
        .expect("suite runs");
    let text = fs::read_to_string(dir.path().join("manifest.json")).expect("suite writes a manifest");
    let manifest: serde_json::Value = serde_json::from_str(&text).expect("manifest is JSON");

    let mut verdicts = BTreeMap::new();
    for c in manifest["criteria"].as_array().expect("criteria list") {
        let id = c["id"].as_u64().expect("id") as u32;
        let passed = c["passed"].as_bool().expect("verdict");
        // The report on disk must agree with the manifest.
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(c["report"].as_str().unwrap())).unwrap()).unwrap();
        let consistent = report["passed"].as_bool() == Some(passed);
        verdicts.insert(id, (passed && consistent, c["title"].as_str().unwrap_or("").to_string(), c["seconds"].as_f64()));
    }

    let mut failed = 0;
    for id in 1..=CRITERIA {
        match verdicts.get(&id) {
            Some((passed, title, secs)) => {
                println!(
                    "criterion {id}: {}  {title} ({:.1} s)",
                    if *passed { "PASS" } else { "FAIL" },
                    secs.unwrap_or(f64::NAN)
                );
                failed += usize::from(!passed);
            }
            None => {
                println!("criterion {id}: FAIL  missing from the manifest");
                failed += 1;
            }
        }
    }
    let all_passed = failed == 0;
    if status.success() != all_passed {
        println!("suite exit status {status} disagrees with the criteria");
        return ExitCode::FAILURE;
    }
    println!("acceptance: {} of {CRITERIA} criteria pass", CRITERIA as usize - failed);
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
