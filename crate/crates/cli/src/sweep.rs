//! Sample-size sweeps over `(N, seed)` cells.

use std::io::Write;

use cmdp_core::CmdpSpec;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::pipeline::{run_pipeline, PipelineOptions};

/// Caps the number of worker threads; unset means one per core.
pub const THREADS_ENV: &str = "CMDP_LAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Data,
    /// Per-N summary: medians in the main columns plus 90th percentiles.
    Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub kind: RowKind,
    pub n: u64,
    pub seed: Option<u64>,
    pub v_true_mixture: f64,
    pub v_star: f64,
    pub subopt: f64,
    pub max_violation: f64,
    pub violations: Vec<f64>,
    pub runtime_ms: f64,
    pub p90_subopt: Option<f64>,
    pub p90_max_violation: Option<f64>,
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

fn aggregate(n: u64, rows: &[SweepRow]) -> SweepRow {
    let col = |f: &dyn Fn(&SweepRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let median = |f: &dyn Fn(&SweepRow) -> f64| quantile(&col(f), 0.5);
    let d = rows.first().map_or(0, |r| r.violations.len());
    SweepRow {
        kind: RowKind::Aggregate,
        n,
        seed: None,
        v_true_mixture: median(&|r| r.v_true_mixture),
        v_star: median(&|r| r.v_star),
        subopt: median(&|r| r.subopt),
        max_violation: median(&|r| r.max_violation),
        violations: (0..d).map(|i| median(&|r| r.violations[i])).collect(),
        runtime_ms: median(&|r| r.runtime_ms),
        p90_subopt: Some(quantile(&col(&|r| r.subopt), 0.9)),
        p90_max_violation: Some(quantile(&col(&|r| r.max_violation), 0.9)),
    }
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(LabError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

/// Runs every `(N, seed)` cell and returns the data rows sorted by `N` then
/// seed, each `N` followed by its aggregate row. `base.samples` and
/// `base.seed` are ignored.
pub fn sweep(spec: &CmdpSpec, base: &PipelineOptions, n_grid: &[u64], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    if n_grid.is_empty() {
        return Err(LabError::Usage("sample grid is empty".into()));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::Usage("sample grid must be strictly ascending".into()));
    }
    if seeds.is_empty() {
        return Err(LabError::Usage("need at least one seed".into()));
    }

    let cells: Vec<(u64, u64)> = n_grid
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();
    let run_cell = |&(n, seed): &(u64, u64)| -> Result<SweepRow> {
        let opts = PipelineOptions {
            samples: n,
            seed,
            ..base.clone()
        };
        let r = run_pipeline(spec, &opts)?;
        Ok(SweepRow {
            kind: RowKind::Data,
            n,
            seed: Some(seed),
            v_true_mixture: r.result.v_reward,
            v_star: r.oracle.v_star,
            subopt: r.result.subopt,
            max_violation: r.result.max_violation,
            violations: r.result.violations,
            runtime_ms: r.runtime.wall_clock_ms,
            p90_subopt: None,
            p90_max_violation: None,
        })
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| LabError::Usage(e.to_string()))?;
    let mut data: Vec<SweepRow> = pool.install(|| cells.par_iter().map(run_cell).collect::<Result<Vec<_>>>())?;
    data.sort_by_key(|r| (r.n, r.seed));

    let mut out = Vec::with_capacity(data.len() + n_grid.len());
    for &n in n_grid {
        let group: Vec<SweepRow> = data.iter().filter(|r| r.n == n).cloned().collect();
        let agg = aggregate(n, &group);
        out.extend(group);
        out.push(agg);
    }
    Ok(out)
}

pub fn csv_header(d: usize) -> Vec<String> {
    let mut h: Vec<String> = ["kind", "N", "seed", "v_true_mixture", "v_star", "subopt", "max_violation"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..d).map(|i| format!("violation_{i}")));
    h.extend(["runtime_ms", "p90_subopt", "p90_max_violation"].iter().map(|s| s.to_string()));
    h
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn csv_record(row: &SweepRow) -> Vec<String> {
    let kind = match row.kind {
        RowKind::Data => "data",
        RowKind::Aggregate => "aggregate",
    };
    let mut rec = vec![
        kind.to_string(),
        row.n.to_string(),
        row.seed.map(|s| s.to_string()).unwrap_or_default(),
        row.v_true_mixture.to_string(),
        row.v_star.to_string(),
        row.subopt.to_string(),
        row.max_violation.to_string(),
    ];
    rec.extend(row.violations.iter().map(|v| v.to_string()));
    rec.push(row.runtime_ms.to_string());
    rec.push(opt(row.p90_subopt));
    rec.push(opt(row.p90_max_violation));
    rec
}

pub fn write_csv<W: Write>(out: W, d: usize, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| LabError::Output(e.to_string());
    w.write_record(csv_header(d)).map_err(err)?;
    for row in rows {
        w.write_record(csv_record(row)).map_err(err)?;
    }
    w.flush().map_err(|e| LabError::Output(e.to_string()))
}
