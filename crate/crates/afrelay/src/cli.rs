//! Argument parsing and subcommand dispatch.
//!
//! Settings resolve as built-in defaults, then `AFRELAY_OUTPUT_DIR`, then the
//! `--config` TOML file, then command-line flags. Exit codes: 0 success,
//! 1 runtime failure, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use afrelay_core::bcrlb::bound_curve;
use afrelay_core::estimate::{mse_against_truth, summarize_chain};
use afrelay_core::model::NoiseConfig;
use afrelay_core::rng::mix_seed;
use afrelay_core::ComplexSample;
use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::config::{Config, SamplerChoice, SamplerKind, OUTPUT_DIR_ENV, SCHEMA};
use crate::error::{AppError, AppResult};
use crate::frame_io::{read_frame, write_frame};
use crate::harness::{benchmark_cost, run_chain, run_sweep, simulate, trace_rows, PointId};
use crate::output::{
    emit_results, estimate_json, write_bench, write_bound_curves, write_estimate, write_manifest,
};

const SUBCOMMANDS: &[(&str, &str)] = &[
    ("simulate", "Simulate one frame and write it as a frame file"),
    ("estimate", "Run one chain on a frame file and write its posterior summary"),
    ("sweep", "Run the (N, T, SNR) experiment grid and write metrics"),
    ("bench", "Time PMCMC iterations against N and T"),
    ("bcrlb", "Write the bound curves trace(J_t^-1) and trace(J_t) against t"),
];

/// Seed stream of the `estimate` chain.
const ESTIMATE_STREAM: u64 = 4;

/// The full command tree. Every schema key is a flag on every subcommand.
pub fn command() -> Command {
    let mut root = Command::new("afrelay")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Channel tracking and parameter estimation for dual-hop relay networks")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for &(name, about) in SUBCOMMANDS {
        let mut sub = Command::new(name)
            .about(about)
            .arg(
                Arg::new("config")
                    .long("config")
                    .value_name("FILE")
                    .help("TOML file with any of the keys below"),
            )
            .arg(
                Arg::new("quiet")
                    .long("quiet")
                    .short('q')
                    .action(ArgAction::SetTrue)
                    .help("Suppress progress lines on stderr"),
            );
        match name {
            "simulate" => {
                sub = sub
                    .arg(
                        Arg::new("frame")
                            .long("frame")
                            .value_name("FILE")
                            .help("Output frame file [default: <output-dir>/frame.txt]"),
                    )
                    .arg(
                        Arg::new("strip-truth")
                            .long("strip-truth")
                            .action(ArgAction::SetTrue)
                            .help("Omit the ground truth from the frame file"),
                    );
            }
            "estimate" => {
                sub = sub.arg(
                    Arg::new("frame")
                        .long("frame")
                        .value_name("FILE")
                        .required(true)
                        .help("Input frame file"),
                );
            }
            _ => {}
        }
        for key in SCHEMA {
            let mut arg = Arg::new(key.name)
                .long(key.name)
                .value_name(key.value_name)
                .help(key.help)
                .allow_hyphen_values(true);
            if let Some(alias) = key.alias {
                arg = arg.visible_alias(alias);
            }
            sub = sub.arg(arg);
        }
        root = root.subcommand(sub);
    }
    root
}

fn resolve_config(m: &ArgMatches) -> AppResult<Config> {
    let mut cfg = Config::default();
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        cfg.apply("output-dir", &dir.to_string_lossy())?;
    }
    if let Some(path) = m.get_one::<String>("config") {
        cfg.apply_file(&PathBuf::from(path))?;
    }
    for key in SCHEMA {
        if let Some(v) = m.get_one::<String>(key.name) {
            cfg.apply(key.name, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Prints one stderr line per tenth of `total`.
struct Progress {
    label: &'static str,
    quiet: bool,
    last_decile: usize,
}

impl Progress {
    fn new(label: &'static str, quiet: bool) -> Self {
        Self { label, quiet, last_decile: 0 }
    }

    fn tick(&mut self, done: usize, total: usize) {
        if self.quiet || total == 0 {
            return;
        }
        let decile = done * 10 / total;
        if decile > self.last_decile {
            self.last_decile = decile;
            let _ = writeln!(std::io::stderr(), "{}: {}% ({done}/{total})", self.label, decile * 10);
        }
    }
}

fn run_simulate(cfg: &Config, m: &ArgMatches) -> AppResult<()> {
    let (t, snr_db) = (cfg.single_t()?, cfg.single_snr()?);
    let dir = &cfg.output_dir;
    write_manifest(dir, "simulate", cfg)?;
    let id = PointId { n: 0, t, snr_db, frame: 0, sampler: SamplerKind::Adpmcmc };
    let mut frame = simulate(cfg, t, snr_db, id.frame_seed(cfg.seed))?;
    if m.get_flag("strip-truth") {
        frame = frame.without_truth();
    }
    let path = m.get_one::<String>("frame").map_or_else(|| dir.join("frame.txt"), PathBuf::from);
    write_frame(&frame, &path)
}

fn run_estimate(cfg: &Config, m: &ArgMatches) -> AppResult<()> {
    let sampler = match cfg.sampler {
        SamplerChoice::Adpmcmc => SamplerKind::Adpmcmc,
        SamplerChoice::Gibbs => SamplerKind::Gibbs,
        SamplerChoice::Both => {
            return Err(AppError::InvalidValue {
                field: "sampler".into(),
                value: "both".into(),
                allowed: "adpmcmc or gibbs for estimate".into(),
            })
        }
    };
    let n = cfg.single_n()?;
    let frame_path = PathBuf::from(m.get_one::<String>("frame").expect("required by clap"));
    let frame = read_frame(&frame_path)?;
    write_manifest(&cfg.output_dir, "estimate", cfg)?;
    let mut progress = Progress::new("estimate", m.get_flag("quiet"));
    let seed = mix_seed(cfg.seed, &[ESTIMATE_STREAM]);
    let trace = run_chain(cfg, &frame, sampler, n, seed, &mut |j, total| progress.tick(j, total))?;
    let summary = summarize_chain(&trace, trace.burnin, cfg.ci_level)?;
    let mse = match &frame.truth {
        Some(truth) => {
            let e = mse_against_truth(&summary.mmse_path, &truth.path)?;
            Some((e.h, e.g, e.total))
        }
        None => None,
    };
    let value = estimate_json(&summary, &trace, sampler, mse);
    write_estimate(&cfg.output_dir, &value, &trace_rows(&trace))
}

fn run_sweep_command(cfg: &Config, m: &ArgMatches) -> AppResult<()> {
    write_manifest(&cfg.output_dir, "sweep", cfg)?;
    let progress = std::sync::Mutex::new(Progress::new("sweep", m.get_flag("quiet")));
    let outcomes = run_sweep(cfg, &|done, total| {
        if let Ok(mut p) = progress.lock() {
            p.tick(done, total);
        }
    });
    emit_results(&outcomes, &cfg.output_dir)?;
    match outcomes.iter().find(|o| !o.record.is_ok()) {
        Some(o) => Err(AppError::Point { point: o.record.id.label(), message: o.record.error.clone() }),
        None => Ok(()),
    }
}

fn run_bench(cfg: &Config) -> AppResult<()> {
    write_manifest(&cfg.output_dir, "bench", cfg)?;
    let report = benchmark_cost(cfg)?;
    write_bench(&cfg.output_dir, &report)
}

fn run_bcrlb(cfg: &Config) -> AppResult<()> {
    let (t, snr_db) = (cfg.single_t()?, cfg.single_snr()?);
    write_manifest(&cfg.output_dir, "bcrlb", cfg)?;
    let noise = NoiseConfig::from_snr_db(snr_db);
    let curves = (0..cfg.relays)
        .map(|_| bound_curve(cfg.alpha, cfg.beta, &noise, ComplexSample::ONE, t))
        .collect::<Result<Vec<_>, _>>()?;
    write_bound_curves(&cfg.output_dir.join("bcrlb.csv"), &curves)
}

fn dispatch(name: &str, m: &ArgMatches) -> AppResult<()> {
    let cfg = resolve_config(m)?;
    match name {
        "simulate" => run_simulate(&cfg, m),
        "estimate" => run_estimate(&cfg, m),
        "sweep" => run_sweep_command(&cfg, m),
        "bench" => run_bench(&cfg),
        "bcrlb" => run_bcrlb(&cfg),
        other => unreachable!("unhandled subcommand {other}"),
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    match dispatch(name, sub) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            e.exit_code()
        }
    }
}
