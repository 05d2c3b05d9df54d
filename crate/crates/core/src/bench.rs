//! Benchmark protocols: worst-case operators (from depth-`2n` circuits) over a
//! range of sizes, and a sweep over generation depths at fixed size.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::circuit::random_operator_of_depth;
use crate::error::Result;
use crate::portfolio::Method;

/// One CSV row; `depth`/`cnots` are empty when the method gave up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub n: usize,
    pub method: String,
    pub sample: usize,
    pub gen_depth: usize,
    pub depth: Option<usize>,
    pub cnots: Option<usize>,
    pub ms: u128,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    pub samples: usize,
    pub seed: u64,
    /// Record wall time; off by default so reports are reproducible.
    pub timing: bool,
}

/// Seed of one generated operator, independent of scheduling.
pub fn task_seed(seed: u64, n: usize, gen_depth: usize, sample: usize) -> u64 {
    let mut x = seed;
    for v in [n as u64, gen_depth as u64, sample as u64] {
        x = splitmix(x ^ splitmix(v));
    }
    x
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn run_tasks(tasks: Vec<(usize, usize, usize)>, cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let per_task: Vec<Vec<BenchRow>> = tasks
        .into_par_iter()
        .map(|(n, gen_depth, sample)| {
            let s = task_seed(cfg.seed, n, gen_depth, sample);
            let a = random_operator_of_depth(n, gen_depth, s);
            let mut rows = Vec::with_capacity(cfg.methods.len());
            for m in &cfg.methods {
                let start = Instant::now();
                let res = m.run(&a, s)?;
                let ms = if cfg.timing {
                    start.elapsed().as_millis()
                } else {
                    0
                };
                if let Some(r) = &res {
                    assert!(r.implements(&a), "method {m} failed verification");
                }
                rows.push(BenchRow {
                    n,
                    method: m.to_string(),
                    sample,
                    gen_depth,
                    depth: res.as_ref().map(|r| r.depth),
                    cnots: res.as_ref().map(|r| r.cnot_count),
                    ms,
                });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_task.into_iter().flatten().collect())
}

/// For each `n` in the range, `samples` operators from random depth-`2n` circuits.
pub fn bench_worst(n_min: usize, n_max: usize, cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    assert!(n_min >= 2);
    let tasks = (n_min..=n_max)
        .flat_map(|n| (0..cfg.samples).map(move |s| (n, 2 * n, s)))
        .collect();
    run_tasks(tasks, cfg)
}

/// At size `n`, `samples` operators per generation depth in the range.
pub fn bench_sweep(
    n: usize,
    depth_min: usize,
    depth_max: usize,
    cfg: &BenchConfig,
) -> Result<Vec<BenchRow>> {
    assert!(n >= 2);
    let tasks = (depth_min..=depth_max)
        .flat_map(|d| (0..cfg.samples).map(move |s| (n, d, s)))
        .collect();
    run_tasks(tasks, cfg)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "method", "sample", "gen_depth", "depth", "cnots", "ms"])?;
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.method.clone(),
            r.sample.to_string(),
            r.gen_depth.to_string(),
            opt(r.depth),
            opt(r.cnots),
            r.ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean output depth of `method` over rows with a result.
pub fn mean_depth(rows: &[BenchRow], method: &str) -> Option<f64> {
    let ds: Vec<usize> = rows
        .iter()
        .filter(|r| r.method == method)
        .filter_map(|r| r.depth)
        .collect();
    (!ds.is_empty()).then(|| ds.iter().sum::<usize>() as f64 / ds.len() as f64)
}
