//! `suite`: every acceptance criterion, one JSON report each, plus a manifest.
//!
//! Criterion 12 reruns a cheap subset under a different worker count and
//! compares the serialized reports byte for byte.

use std::collections::BTreeMap;
use std::time::Instant;

use besselflow::experiments::{criteria, run_criterion, Criterion, REPORT_SCHEMA};
use serde_json::json;

use crate::keyvalue::Entries;
use crate::{pool, Failure, Options, Outcome};

const KEYS: &[&str] = &["seed", "criteria"];

pub const MANIFEST_SCHEMA: &str = "besselflow-manifest/1";
pub const DETERMINISM_ID: u32 = 12;
const DETERMINISM_TITLE: &str = "reports are byte-identical across runs and worker counts";
/// Criteria recomputed for the determinism check: fast, but covering
/// symbolic, pathwise, exact-sampler and Dufresne code.
const RERUN: [u32; 5] = [1, 2, 3, 4, 6];

pub fn report_name(id: u32) -> String {
    format!("criterion_{id:02}.json")
}

fn render(c: &Criterion) -> (bool, String) {
    let body = match run_criterion(c) {
        Ok(o) => return (o.passed, serde_json::to_string_pretty(&o).expect("plain JSON") + "\n"),
        Err(e) => json!({
            "schema": REPORT_SCHEMA,
            "id": c.id,
            "title": c.title,
            "error": e.to_string(),
            "passed": false,
        }),
    };
    (false, serde_json::to_string_pretty(&body).expect("plain JSON") + "\n")
}

fn selection(kv: &Entries) -> Result<Vec<u32>, Failure> {
    let all: Vec<f64> = (1..=DETERMINISM_ID).map(f64::from).collect();
    let mut ids = Vec::new();
    for v in kv.list("criteria", all)? {
        if v.fract() != 0.0 || !(1.0..=f64::from(DETERMINISM_ID)).contains(&v) {
            return Err(kv.invalid("criteria", format!("`criteria` entries must be integers in 1..=12, got {v}")));
        }
        ids.push(v as u32);
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

pub fn run(opts: &Options) -> Outcome {
    let kv = Entries::load(opts, KEYS)?;
    let seed = kv.seed(opts.seed)?;
    let selected = selection(&kv)?;
    let started = Instant::now();
    let all = criteria(seed);
    let mut bodies: BTreeMap<u32, String> = BTreeMap::new();
    let mut entries = Vec::new();
    let mut all_passed = true;

    for c in all.iter().filter(|c| selected.contains(&c.id)) {
        let t = Instant::now();
        let (passed, body) = render(c);
        let secs = t.elapsed().as_secs_f64();
        let name = report_name(c.id);
        opts.write(&name, &body)?;
        println!("criterion {:>2}: {}  {} ({secs:.1} s)", c.id, verdict(passed), c.title);
        all_passed &= passed;
        entries.push(json!({
            "id": c.id,
            "title": c.title,
            "passed": passed,
            "report": name,
            "seconds": secs,
            "configs": c.configs.iter().map(|cfg| cfg.to_text()).collect::<Vec<_>>(),
        }));
        bodies.insert(c.id, body);
    }

    if selected.contains(&DETERMINISM_ID) {
        let t = Instant::now();
        let alternate = if opts.workers == 1 { 2 } else { 1 };
        let rerun_pool = pool(alternate)?;
        let mut compared = Vec::new();
        for c in all.iter().filter(|c| RERUN.contains(&c.id)) {
            let first = match bodies.get(&c.id) {
                Some(b) => b.clone(),
                None => render(c).1,
            };
            let second = rerun_pool.install(|| render(c).1);
            compared.push(json!({ "id": c.id, "identical": first == second, "bytes": first.len() }));
        }
        let passed = compared.iter().all(|c| c["identical"] == true);
        let body = json!({
            "schema": REPORT_SCHEMA,
            "id": DETERMINISM_ID,
            "title": DETERMINISM_TITLE,
            "passed": passed,
            "seed": seed,
            "compared": compared,
            "notes": ["each listed criterion was recomputed on a thread pool of a different size"],
        });
        let name = report_name(DETERMINISM_ID);
        opts.write(&name, &(serde_json::to_string_pretty(&body).expect("plain JSON") + "\n"))?;
        let secs = t.elapsed().as_secs_f64();
        println!("criterion {DETERMINISM_ID:>2}: {}  {DETERMINISM_TITLE} ({secs:.1} s)", verdict(passed));
        all_passed &= passed;
        entries.push(json!({
            "id": DETERMINISM_ID,
            "title": DETERMINISM_TITLE,
            "passed": passed,
            "report": name,
            "seconds": secs,
            "alternate_workers": alternate,
        }));
    }

    let manifest = json!({
        "schema": MANIFEST_SCHEMA,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "workers": opts.workers,
        "criteria": entries,
        "seconds": started.elapsed().as_secs_f64(),
        "passed": all_passed,
    });
    opts.write("manifest.json", &(serde_json::to_string_pretty(&manifest).expect("plain JSON") + "\n"))?;
    Ok(all_passed)
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}
