//! Result files: `manifest.json`, `metrics.csv`, `traces/*.csv`,
//! `summary.json`, `timings.csv`, plus the per-command artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use afrelay_core::bcrlb::BoundPoint;
use afrelay_core::estimate::EstimateSummary;
use afrelay_core::math::quantile;
use afrelay_core::samplers::ChainTrace;
use serde::Serialize;
use serde_json::json;

use crate::config::{Config, SamplerKind};
use crate::error::{AppError, AppResult};
use crate::frame_io::fmt_f64;
use crate::harness::{BenchReport, MetricsRecord, PointId, PointOutcome, TraceRow};

/// Column order of `metrics.csv`.
pub const METRICS_HEADER: [&str; 18] = [
    "n",
    "t",
    "snr_db",
    "frame",
    "sampler",
    "seed",
    "iterations",
    "acceptance_rate",
    "mse_h",
    "mse_g",
    "mse_total",
    "mse_hg",
    "mmse_alpha",
    "mmse_beta",
    "ci90_alpha_lo",
    "ci90_alpha_hi",
    "bcrlb_mean",
    "error",
];

fn create_dir(dir: &Path) -> AppResult<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> AppResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|source| AppError::Json { context: path.display().to_string(), source })?;
    fs::write(path, text + "\n").map_err(|e| AppError::io(path, e))
}

fn csv_writer(path: &Path) -> AppResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path)
        .map_err(|source| AppError::Csv { context: path.display().to_string(), source })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> AppError + '_ {
    move |source| AppError::Csv { context: path.display().to_string(), source }
}

/// Writes `manifest.json`; every command calls this before producing any
/// other file.
pub fn write_manifest(dir: &Path, command: &str, cfg: &Config) -> AppResult<PathBuf> {
    create_dir(dir)?;
    let path = dir.join("manifest.json");
    let manifest = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "config": cfg,
    });
    write_json(&path, &manifest)?;
    Ok(path)
}

fn metrics_row(r: &MetricsRecord) -> Vec<String> {
    let f = |x: f64| fmt_f64(x);
    vec![
        r.id.n.to_string(),
        r.id.t.to_string(),
        f(r.id.snr_db),
        r.id.frame.to_string(),
        r.id.sampler.name().to_string(),
        r.seed.to_string(),
        r.iterations.to_string(),
        f(r.acceptance_rate),
        f(r.mse_h),
        f(r.mse_g),
        f(r.mse_total),
        f(r.mse_hg),
        f(r.mmse_alpha),
        f(r.mmse_beta),
        f(r.ci90_alpha.0),
        f(r.ci90_alpha.1),
        f(r.bcrlb_mean),
        r.error.clone(),
    ]
}

pub fn write_metrics(path: &Path, records: &[MetricsRecord]) -> AppResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(METRICS_HEADER).map_err(csv_err(path))?;
    for r in records {
        w.write_record(metrics_row(r)).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

pub fn read_metrics(path: &Path) -> AppResult<Vec<MetricsRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let bad = |message: String| AppError::Parse { path: path.to_path_buf(), message };
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    if headers.iter().ne(METRICS_HEADER) {
        return Err(bad("unexpected metrics header".into()));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err(path))?;
        let col = |i: usize| row.get(i).unwrap_or("");
        let num = |i: usize| -> AppResult<f64> {
            col(i).parse().map_err(|_| bad(format!("column {} `{}`", METRICS_HEADER[i], col(i))))
        };
        let int = |i: usize| -> AppResult<u64> {
            col(i).parse().map_err(|_| bad(format!("column {} `{}`", METRICS_HEADER[i], col(i))))
        };
        let sampler = SamplerKind::parse(col(4)).ok_or_else(|| bad(format!("sampler `{}`", col(4))))?;
        out.push(MetricsRecord {
            id: PointId {
                n: int(0)? as usize,
                t: int(1)? as usize,
                snr_db: num(2)?,
                frame: int(3)? as usize,
                sampler,
            },
            seed: int(5)?,
            iterations: int(6)? as usize,
            acceptance_rate: num(7)?,
            mse_h: num(8)?,
            mse_g: num(9)?,
            mse_total: num(10)?,
            mse_hg: num(11)?,
            mmse_alpha: num(12)?,
            mmse_beta: num(13)?,
            ci90_alpha: (num(14)?, num(15)?),
            bcrlb_mean: num(16)?,
            error: col(17).to_string(),
        });
    }
    Ok(out)
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> AppResult<()> {
    let relays = rows.first().map_or(0, |r| r.params.relays());
    let mut w = csv_writer(path)?;
    let mut header = vec!["iteration".to_string()];
    header.extend((0..relays).map(|l| format!("alpha_{l}")));
    header.extend((0..relays).map(|l| format!("beta_{l}")));
    header.push("log_likelihood".into());
    w.write_record(&header).map_err(csv_err(path))?;
    for r in rows {
        let mut rec = vec![r.iteration.to_string()];
        rec.extend(r.params.alpha.iter().map(|&x| fmt_f64(x)));
        rec.extend(r.params.beta.iter().map(|&x| fmt_f64(x)));
        rec.push(fmt_f64(r.log_likelihood));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Minimum, quartiles and maximum of the finite values.
pub fn five_numbers(values: &[f64]) -> Option<[f64; 5]> {
    let v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    Some([0.0, 0.25, 0.5, 0.75, 1.0].map(|p| quantile(&v, p)))
}

#[derive(Debug, Clone, Serialize)]
pub struct PointSummary {
    pub sampler: SamplerKind,
    pub n: usize,
    pub t: usize,
    pub snr_db: f64,
    pub frames: usize,
    pub failures: usize,
    pub mean_acceptance: f64,
    pub mse_total_quantiles: Option<[f64; 5]>,
    pub mse_h_quantiles: Option<[f64; 5]>,
    pub mse_g_quantiles: Option<[f64; 5]>,
    pub mmse_alpha_quantiles: Option<[f64; 5]>,
    pub mmse_beta_quantiles: Option<[f64; 5]>,
    pub mse_total_mean: f64,
    pub mse_total_std_error: f64,
    pub bcrlb_mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AcceptanceByN {
    pub sampler: SamplerKind,
    pub n: usize,
    pub mean_acceptance: f64,
    pub chains: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub points: Vec<PointSummary>,
    pub acceptance_by_n: Vec<AcceptanceByN>,
    pub failures: usize,
}

fn mean_finite(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Aggregates over frames per `(sampler, N, T, SNR)` and acceptance per `N`.
pub fn summarize(records: &[MetricsRecord]) -> SweepSummary {
    type Key = (SamplerKind, usize, usize, u64);
    let mut groups: BTreeMap<Key, (f64, Vec<&MetricsRecord>)> = BTreeMap::new();
    for r in records {
        let key = (r.id.sampler, r.id.n, r.id.t, r.id.snr_db.to_bits());
        groups.entry(key).or_insert((r.id.snr_db, Vec::new())).1.push(r);
    }
    let mut points: Vec<PointSummary> = groups
        .into_iter()
        .map(|((sampler, n, t, _), (snr_db, rs))| {
            let ok: Vec<&&MetricsRecord> = rs.iter().filter(|r| r.is_ok()).collect();
            let col = |f: fn(&MetricsRecord) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let mse = col(|r| r.mse_total);
            let m = mean_finite(mse.iter().copied());
            let se = if mse.len() > 1 {
                let var = mse.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (mse.len() - 1) as f64;
                (var / mse.len() as f64).sqrt()
            } else {
                f64::NAN
            };
            PointSummary {
                sampler,
                n,
                t,
                snr_db,
                frames: rs.len(),
                failures: rs.len() - ok.len(),
                mean_acceptance: mean_finite(col(|r| r.acceptance_rate).into_iter()),
                mse_total_quantiles: five_numbers(&mse),
                mse_h_quantiles: five_numbers(&col(|r| r.mse_h)),
                mse_g_quantiles: five_numbers(&col(|r| r.mse_g)),
                mmse_alpha_quantiles: five_numbers(&col(|r| r.mmse_alpha)),
                mmse_beta_quantiles: five_numbers(&col(|r| r.mmse_beta)),
                mse_total_mean: m,
                mse_total_std_error: se,
                bcrlb_mean: mean_finite(col(|r| r.bcrlb_mean).into_iter()),
            }
        })
        .collect();
    points.sort_by(|a, b| {
        (a.sampler, a.n, a.t).cmp(&(b.sampler, b.n, b.t)).then(a.snr_db.total_cmp(&b.snr_db))
    });
    let mut by_n: BTreeMap<(SamplerKind, usize), Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_ok()) {
        by_n.entry((r.id.sampler, r.id.n)).or_default().push(r.acceptance_rate);
    }
    let acceptance_by_n = by_n
        .into_iter()
        .map(|((sampler, n), v)| AcceptanceByN {
            sampler,
            n,
            mean_acceptance: v.iter().sum::<f64>() / v.len() as f64,
            chains: v.len(),
        })
        .collect();
    SweepSummary {
        points,
        acceptance_by_n,
        failures: records.iter().filter(|r| !r.is_ok()).count(),
    }
}

/// Writes the sweep result files into `dir` (the manifest must already be
/// there).
pub fn emit_results(outcomes: &[PointOutcome], dir: &Path) -> AppResult<()> {
    create_dir(dir)?;
    let records: Vec<MetricsRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    write_metrics(&dir.join("metrics.csv"), &records)?;
    let traces = dir.join("traces");
    create_dir(&traces)?;
    for o in outcomes.iter().filter(|o| !o.trace.is_empty()) {
        write_trace(&traces.join(format!("{}.csv", o.record.id.label())), &o.trace)?;
    }
    write_json(&dir.join("summary.json"), &summarize(&records))?;
    let path = dir.join("timings.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["point", "wall_clock_s"]).map_err(csv_err(&path))?;
    for o in outcomes {
        w.write_record([o.record.id.label(), fmt_f64(o.wall_clock_s)]).map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| AppError::io(&path, e))
}

pub fn write_bench(dir: &Path, report: &BenchReport) -> AppResult<()> {
    let path = dir.join("bench.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["axis", "n", "t", "relays", "filter_runs", "seconds_per_iteration", "model_cost"])
        .map_err(csv_err(&path))?;
    for r in &report.rows {
        w.write_record([
            r.axis.to_string(),
            r.n.to_string(),
            r.t.to_string(),
            r.relays.to_string(),
            r.filter_runs.to_string(),
            fmt_f64(r.seconds_per_iteration),
            fmt_f64(r.model_cost),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| AppError::io(&path, e))?;
    write_json(
        &dir.join("bench.json"),
        &json!({ "exponent_n": report.exponent_n, "exponent_t": report.exponent_t }),
    )
}

/// One `bcrlb.csv` row per relay and time index.
pub fn write_bound_curves(path: &Path, curves: &[Vec<BoundPoint>]) -> AppResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["relay", "t", "trace_inverse", "trace_information"]).map_err(csv_err(path))?;
    for (l, curve) in curves.iter().enumerate() {
        for p in curve {
            w.write_record([
                l.to_string(),
                p.t.to_string(),
                fmt_f64(p.trace_inverse),
                fmt_f64(p.trace_information),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

fn path_json(p: &afrelay_core::model::LatentPath) -> serde_json::Value {
    let grid = |g: &afrelay_core::model::ComplexGrid| -> Vec<Vec<[f64; 2]>> {
        (0..g.relays()).map(|l| g.row(l).iter().map(|z| [z.re, z.im]).collect()).collect()
    };
    json!({ "h": grid(&p.h), "g": grid(&p.g), "w": grid(&p.w) })
}

/// `summary.json` of the `estimate` command.
pub fn estimate_json(
    summary: &EstimateSummary,
    trace: &ChainTrace,
    sampler: SamplerKind,
    mse: Option<(f64, f64, f64)>,
) -> serde_json::Value {
    json!({
        "sampler": sampler,
        "iterations": trace.accepted.len(),
        "acceptance_rate": trace.acceptance_rate,
        "block_acceptance_rate": trace.block_acceptance_rate,
        "filter_failures": trace.filter_failures,
        "samples": summary.samples,
        "ci_level": summary.ci_level,
        "mmse_alpha": summary.mmse_params.alpha,
        "mmse_beta": summary.mmse_params.beta,
        "alpha_band": [summary.params_lower.alpha, summary.params_upper.alpha],
        "beta_band": [summary.params_lower.beta, summary.params_upper.beta],
        "mse": mse.map(|(h, g, total)| json!({ "h": h, "g": g, "total": total })),
        "mmse_path": path_json(&summary.mmse_path),
        "ci_lower": path_json(&summary.ci_lower),
        "ci_upper": path_json(&summary.ci_upper),
    })
}

pub fn write_estimate(dir: &Path, value: &serde_json::Value, trace: &[TraceRow]) -> AppResult<()> {
    write_json(&dir.join("summary.json"), value)?;
    write_trace(&dir.join("trace.csv"), trace)
}
