//! `laws <name>`: draws from a named law with its distribution function.

use besselflow::laws::{DufresneIndex, LawSpec};
use besselflow::sde::StreamSeed;

use crate::keyvalue::Entries;
use crate::{Failure, Options, Outcome};

pub const NAMES: [&str; 5] = ["gamma", "dufresne-u1", "tau0", "t1", "bound-integral"];

/// Keys each law reads, besides `seed` and `n_paths`.
fn law_keys(name: &str) -> Option<&'static [&'static str]> {
    Some(match name {
        "gamma" => &["nu"],
        "dufresne-u1" => &["delta", "nu"],
        "tau0" => &["x", "delta"],
        "t1" => &[],
        "bound-integral" => &["delta", "k"],
        _ => return None,
    })
}

fn spec(name: &str, kv: &Entries) -> Result<LawSpec, Failure> {
    Ok(match name {
        "gamma" => LawSpec::Gamma { nu: kv.get("nu", 1.0)? },
        "dufresne-u1" => {
            let delta = kv.get("delta", 2.5)?;
            let index = if delta >= 2.0 { DufresneIndex::Flow } else { DufresneIndex::FirstZero };
            // NaN when the index is undefined, so validation names the problem.
            let nu = kv.get("nu", index.nu(delta).unwrap_or(f64::NAN))?;
            LawSpec::DufresneU1 { delta, nu }
        }
        "tau0" => LawSpec::Tau0 {
            x: kv.get("x", 1.0)?,
            delta: kv.get("delta", 1.5)?,
        },
        "t1" => LawSpec::T1,
        "bound-integral" => LawSpec::BoundIntegral {
            delta: kv.get("delta", 2.5)?,
            k: kv.get("k", 1)?,
        },
        _ => unreachable!("name checked by law_keys"),
    })
}

pub fn run(opts: &Options, name: &str) -> Outcome {
    let extra = law_keys(name)
        .ok_or_else(|| Failure::Usage(format!("unknown law `{name}` (expected one of {})", NAMES.join(", "))))?;
    let mut keys = vec!["seed", "n_paths"];
    keys.extend_from_slice(extra);
    let kv = Entries::load(opts, &keys)?;
    let seed = kv.seed(opts.seed)?;
    let n: usize = kv.get("n_paths", 10_000)?;
    let law = spec(name, &kv)?;
    law.validate().map_err(|e| kv.invalid(extra.first().copied().unwrap_or("seed"), e))?;

    let mut rng = StreamSeed::new(seed).derive(name).rng(0);
    let path = opts.out_path(&format!("{name}.csv"))?;
    let io = |e: csv::Error| Failure::Run(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(["draw_id", "value", "cdf"]).map_err(io)?;
    for i in 0..n {
        let v = law.sample(&mut rng).map_err(|e| Failure::Run(e.to_string()))?;
        let f = law.cdf(v).map_err(|e| Failure::Run(e.to_string()))?;
        w.write_record(&[i.to_string(), format!("{v:?}"), format!("{f:?}")]).map_err(io)?;
    }
    w.flush().map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
    println!("wrote {n} draws of {name} to {}", path.display());
    Ok(true)
}
