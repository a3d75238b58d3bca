//! Versioned text format for frames.
//!
//! ```text
//! afrelay-frame 1
//! [config]
//! t = 100
//! ...
//! [data]
//! relay,t,s_re,s_im,y_re,y_im[,h_re,h_im,g_re,g_im,w_re,w_im]
//! 0,0,...
//! ```
//!
//! Rows are relay-major. Truth columns are present iff `truth = true`.

use std::fmt::Write as _;
use std::path::Path;

use afrelay_core::model::{
    ComplexGrid, Frame, FrameConfig, LatentPath, NoiseConfig, RelayFunction, StaticParams, Truth,
};
use afrelay_core::ComplexSample;

use crate::error::{AppError, AppResult};

pub const MAGIC: &str = "afrelay-frame";
pub const VERSION: u32 = 1;

/// Round-trip float formatting used by every text artifact.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(",")
}

pub fn frame_to_string(frame: &Frame) -> String {
    let cfg = &frame.config;
    let noise = &frame.noise;
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    out.push_str("[config]\n");
    let _ = writeln!(out, "t = {}", cfg.t);
    let _ = writeln!(out, "relays = {}", cfg.relays);
    let _ = writeln!(out, "snr_db = {}", fmt_f64(cfg.snr_db));
    let _ = writeln!(out, "sigma2_w = {}", fmt_f64(noise.sigma2_w));
    let _ = writeln!(out, "sigma2_v = {}", fmt_f64(noise.sigma2_v));
    let _ = writeln!(out, "sigma2_h = {}", fmt_f64(noise.sigma2_h));
    let _ = writeln!(out, "sigma2_g = {}", fmt_f64(noise.sigma2_g));
    match frame.relay {
        RelayFunction::AmplifyForward { gain } => {
            let _ = writeln!(out, "relay = af\ngain = {}", fmt_f64(gain));
        }
        RelayFunction::Identity => out.push_str("relay = identity\n"),
    }
    let _ = writeln!(out, "truth = {}", frame.truth.is_some());
    if let Some(truth) = &frame.truth {
        let _ = writeln!(out, "alpha = {}", join(&truth.params.alpha));
        let _ = writeln!(out, "beta = {}", join(&truth.params.beta));
    }
    out.push_str("[data]\nrelay,t,s_re,s_im,y_re,y_im");
    if frame.truth.is_some() {
        out.push_str(",h_re,h_im,g_re,g_im,w_re,w_im");
    }
    out.push('\n');
    for l in 0..cfg.relays {
        for t in 0..cfg.t {
            let s = cfg.pilots[t];
            let y = frame.y.get(l, t);
            let mut cols = vec![s.re, s.im, y.re, y.im];
            if let Some(truth) = &frame.truth {
                for grid in [&truth.path.h, &truth.path.g, &truth.path.w] {
                    let z = grid.get(l, t);
                    cols.extend([z.re, z.im]);
                }
            }
            let _ = writeln!(out, "{l},{t},{}", join(&cols));
        }
    }
    out
}

pub fn write_frame(frame: &Frame, path: &Path) -> AppResult<()> {
    std::fs::write(path, frame_to_string(frame)).map_err(|e| AppError::io(path, e))
}

pub fn read_frame(path: &Path) -> AppResult<Frame> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_frame(&text).map_err(|message| AppError::Parse { path: path.to_path_buf(), message })
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.trim().parse().map_err(|_| format!("bad value `{v}` for `{key}`"))
}

pub fn parse_frame(text: &str) -> Result<Frame, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    match header.split_once(' ') {
        Some((MAGIC, v)) if v.trim() == VERSION.to_string() => {}
        Some((MAGIC, v)) => return Err(format!("unsupported version {v}")),
        _ => return Err(format!("missing `{MAGIC}` header")),
    }
    if lines.next() != Some("[config]") {
        return Err("expected [config] section".into());
    }
    let mut kv = std::collections::BTreeMap::new();
    for line in lines.by_ref() {
        if line == "[data]" {
            break;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("bad config line `{line}`"))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| kv.get(k).ok_or_else(|| format!("missing `{k}`"));
    let t_len: usize = num("t", get("t")?)?;
    let relays: usize = num("relays", get("relays")?)?;
    let snr_db: f64 = num("snr_db", get("snr_db")?)?;
    let noise = NoiseConfig::new(
        num("sigma2_w", get("sigma2_w")?)?,
        num("sigma2_v", get("sigma2_v")?)?,
        num("sigma2_h", get("sigma2_h")?)?,
        num("sigma2_g", get("sigma2_g")?)?,
    )
    .map_err(|e| e.to_string())?;
    let relay = match get("relay")?.as_str() {
        "af" => RelayFunction::AmplifyForward { gain: num("gain", get("gain")?)? },
        "identity" => RelayFunction::Identity,
        other => return Err(format!("unknown relay `{other}`")),
    };
    let has_truth: bool = num("truth", get("truth")?)?;
    let columns = lines.next().ok_or("missing data header")?;
    let width = if has_truth { 12 } else { 6 };
    if columns.split(',').count() != width {
        return Err(format!("expected {width} data columns"));
    }

    let mut pilots = vec![ComplexSample::ZERO; t_len];
    let mut y = ComplexGrid::zeros(relays, t_len);
    let mut path = LatentPath::zeros(relays, t_len);
    let mut seen = 0usize;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != width {
            return Err(format!("row `{line}` has {} columns", f.len()));
        }
        let l: usize = num("relay", f[0])?;
        let t: usize = num("t", f[1])?;
        if l >= relays || t >= t_len {
            return Err(format!("row index ({l}, {t}) out of range"));
        }
        let vals: Vec<f64> = f[2..].iter().map(|v| num("data", v)).collect::<Result<_, _>>()?;
        let c = |i: usize| ComplexSample::new(vals[2 * i], vals[2 * i + 1]);
        pilots[t] = c(0);
        y.set(l, t, c(1));
        if has_truth {
            path.h.set(l, t, c(2));
            path.g.set(l, t, c(3));
            path.w.set(l, t, c(4));
        }
        seen += 1;
    }
    if seen != relays * t_len {
        return Err(format!("expected {} data rows, found {seen}", relays * t_len));
    }
    let config = FrameConfig::with_pilots(relays, pilots, snr_db).map_err(|e| e.to_string())?;
    let truth = if has_truth {
        let list = |k: &str| -> Result<Vec<f64>, String> {
            get(k)?.split(',').map(|v| num(k, v)).collect()
        };
        let params = StaticParams::new(list("alpha")?, list("beta")?).map_err(|e| e.to_string())?;
        Some(Truth { params, path })
    } else {
        None
    };
    Frame::new(y, config, noise, relay, truth).map_err(|e| e.to_string())
}
