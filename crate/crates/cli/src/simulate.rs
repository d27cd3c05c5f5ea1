//! `simulate`: coupled flow paths to a long-format CSV.

use besselflow::sde::{simulate_flow, BesselPath, NoisePath, Schedule, Scheme, StopMode, StreamSeed, TimeGrid};
use rayon::prelude::*;

use crate::keyvalue::Entries;
use crate::{Failure, Options, Outcome};

const KEYS: &[&str] = &["seed", "delta", "xs", "horizon", "n_steps", "n_paths", "scheme", "mode"];

/// Columns of `samples.csv`.
pub const HEADER: [&str; 4] = ["path_id", "x0", "t", "value"];

struct Request {
    seed: u64,
    delta: f64,
    xs: Vec<f64>,
    horizon: f64,
    n_steps: usize,
    n_paths: usize,
    scheme: Scheme,
    mode: StopMode,
}

fn parse_mode(s: &str) -> Option<StopMode> {
    match s {
        "free" => Some(StopMode::Free),
        "stopped" => Some(StopMode::StoppedAtZero),
        _ => None,
    }
}

fn request(opts: &Options) -> Result<Request, Failure> {
    let kv = Entries::load(opts, KEYS)?;
    let scheme: String = kv.get("scheme", Scheme::EulerFloor.to_string())?;
    let scheme = scheme.parse().map_err(|e| kv.invalid("scheme", e))?;
    let mode: String = kv.get("mode", "free".to_string())?;
    let mode = parse_mode(&mode).ok_or_else(|| kv.invalid("mode", format!("`mode` must be free or stopped, got `{mode}`")))?;
    let r = Request {
        seed: kv.seed(opts.seed)?,
        delta: kv.get("delta", 2.5)?,
        xs: kv.list("xs", vec![1.0])?,
        horizon: kv.get("horizon", 1.0)?,
        n_steps: kv.get("n_steps", 1000)?,
        n_paths: kv.get("n_paths", 10)?,
        scheme,
        mode,
    };
    if r.n_paths == 0 {
        return Err(kv.invalid("n_paths", "`n_paths` must be positive"));
    }
    if r.xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(kv.invalid("xs", "`xs` must be strictly increasing"));
    }
    TimeGrid::horizon(r.horizon, r.n_steps).map_err(|e| kv.invalid("horizon", e))?;
    Ok(r)
}

pub fn run(opts: &Options) -> Outcome {
    let r = request(opts)?;
    let grid = TimeGrid::horizon(r.horizon, r.n_steps).expect("checked in request");
    let schedule = Schedule::uniform(grid);
    let streams = StreamSeed::new(r.seed).derive("simulate");
    let paths = (0..r.n_paths)
        .into_par_iter()
        .map(|i| {
            let noise = NoisePath::sample(&schedule, &mut streams.rng(i as u64));
            simulate_flow(&r.xs, r.delta, &noise, r.scheme, r.mode).map(|b| b.into_paths())
        })
        .collect::<Result<Vec<Vec<BesselPath>>, _>>()
        .map_err(|e| Failure::Usage(format!("simulate: {e}")))?;

    let path = opts.out_path("samples.csv")?;
    let io = |e: csv::Error| Failure::Run(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(HEADER).map_err(io)?;
    for (i, bundle) in paths.iter().enumerate() {
        for p in bundle {
            for (t, v) in p.nodes().iter().zip(p.values()) {
                w.write_record(&[i.to_string(), format!("{:?}", p.x0()), format!("{t:?}"), format!("{v:?}")])
                    .map_err(io)?;
            }
        }
    }
    w.flush().map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
    println!("wrote {} paths × {} initial values to {}", r.n_paths, r.xs.len(), path.display());
    Ok(true)
}
