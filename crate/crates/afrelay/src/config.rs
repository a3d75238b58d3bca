//! Run configuration: one schema drives defaults, TOML files, command-line
//! flags and the help text.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{AppError, AppResult};

/// Environment variable consulted for the default output directory.
pub const OUTPUT_DIR_ENV: &str = "AFRELAY_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerChoice {
    Adpmcmc,
    Gibbs,
    Both,
}

impl SamplerChoice {
    pub fn samplers(self) -> &'static [SamplerKind] {
        match self {
            Self::Adpmcmc => &[SamplerKind::Adpmcmc],
            Self::Gibbs => &[SamplerKind::Gibbs],
            Self::Both => &[SamplerKind::Adpmcmc, SamplerKind::Gibbs],
        }
    }
}

/// A single chain type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Adpmcmc,
    Gibbs,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Adpmcmc => "adpmcmc",
            Self::Gibbs => "gibbs",
        }
    }

    pub fn code(self) -> u64 {
        match self {
            Self::Adpmcmc => 0,
            Self::Gibbs => 1,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "adpmcmc" => Some(Self::Adpmcmc),
            "gibbs" => Some(Self::Gibbs),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RelayChoice {
    /// Amplify-and-forward with the power-normalising gain.
    Af,
    Identity,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Config {
    pub t: Vec<usize>,
    pub relays: usize,
    pub snr_db: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub relay: RelayChoice,
    pub n_particles: Vec<usize>,
    pub frames: usize,
    pub iterations: usize,
    pub burnin: usize,
    pub thin: Option<usize>,
    pub seed: u64,
    pub sampler: SamplerChoice,
    pub prior_a: f64,
    pub prior_b: f64,
    pub prior_c: f64,
    pub prior_d: f64,
    pub ess_threshold: f64,
    pub w1: f64,
    pub warmup: usize,
    pub gibbs_block: usize,
    pub gibbs_multiplier: f64,
    pub ci_level: f64,
    pub output_dir: PathBuf,
    pub bench_n: Vec<usize>,
    pub bench_t: Vec<usize>,
    pub bench_iterations: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            t: vec![100],
            relays: 1,
            snr_db: vec![0.0, 15.0, 25.0],
            alpha: 0.95,
            beta: 0.95,
            relay: RelayChoice::Af,
            n_particles: vec![100],
            frames: 20,
            iterations: 5000,
            burnin: 1500,
            thin: None,
            seed: 1,
            sampler: SamplerChoice::Adpmcmc,
            prior_a: 10.0,
            prior_b: 0.6,
            prior_c: 10.0,
            prior_d: 0.6,
            ess_threshold: 0.8,
            w1: 0.95,
            warmup: 100,
            gibbs_block: 10,
            gibbs_multiplier: 1.0,
            ci_level: 0.95,
            output_dir: PathBuf::from("afrelay-out"),
            bench_n: vec![50, 100, 200, 400],
            bench_t: vec![50, 100, 200, 400],
            bench_iterations: 30,
        }
    }
}

pub struct KeySpec {
    pub name: &'static str,
    pub alias: Option<&'static str>,
    pub value_name: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, value_name: &'static str, help: &'static str) -> KeySpec {
    KeySpec { name, alias: None, value_name, help }
}

/// Every configuration key, in help order.
pub const SCHEMA: &[KeySpec] = &[
    key("t", "LIST", "Frame length(s) T, integers >= 2 [default: 100]"),
    key("relays", "INT", "Number of parallel relays L >= 1 [default: 1]"),
    KeySpec {
        name: "snr-db",
        alias: Some("snr"),
        value_name: "LIST",
        help: "SNR grid in dB [default: 0,15,25]",
    },
    key("alpha", "REAL", "True h coefficient for simulation, in (0,1) [default: 0.95]"),
    key("beta", "REAL", "True g coefficient for simulation, in (0,1) [default: 0.95]"),
    key("relay", "KIND", "Relay function: af or identity [default: af]"),
    key("n-particles", "LIST", "Particle counts N >= 2 [default: 100]"),
    key("frames", "INT", "Frames per grid point >= 1 [default: 20]"),
    key("iterations", "INT", "PMCMC chain length J [default: 5000]"),
    key("burnin", "INT", "Burn-in iterations, below J [default: 1500]"),
    key("thin", "INT|auto", "Keep every k-th state; auto keeps all up to 100000 iterations [default: auto]"),
    key("seed", "INT", "Master seed, unsigned 64-bit [default: 1]"),
    key("sampler", "KIND", "adpmcmc, gibbs or both [default: adpmcmc]"),
    key("prior-a", "REAL", "Beta(a, b) prior on alpha, a > 0 [default: 10]"),
    key("prior-b", "REAL", "Beta(a, b) prior on alpha, b > 0 [default: 0.6]"),
    key("prior-c", "REAL", "Beta(c, d) prior on beta, c > 0 [default: 10]"),
    key("prior-d", "REAL", "Beta(c, d) prior on beta, d > 0 [default: 0.6]"),
    key("ess-threshold", "REAL", "Resample when ESS < threshold * N, in (0,1] [default: 0.8]"),
    key("w1", "REAL", "Weight of the adaptive proposal component, in (0,1] [default: 0.95]"),
    key("warmup", "INT", "Iterations before proposal adaptation starts [default: 100]"),
    key("gibbs-block", "INT", "Gibbs block length tau, must divide T [default: 10]"),
    key("gibbs-multiplier", "REAL", "Gibbs length as a multiple of the matched operation count, > 0 [default: 1]"),
    key("ci-level", "REAL", "Credible level of path bands, in (0,1) [default: 0.95]"),
    key("output-dir", "DIR", "Output directory [env: AFRELAY_OUTPUT_DIR] [default: afrelay-out]"),
    key("bench-n", "LIST", "Particle counts of the N scaling benchmark [default: 50,100,200,400]"),
    key("bench-t", "LIST", "Frame lengths of the T scaling benchmark [default: 50,100,200,400]"),
    key("bench-iterations", "INT", "Timed PMCMC iterations per benchmark point [default: 30]"),
];

pub fn canonical_key(name: &str) -> Option<&'static str> {
    SCHEMA
        .iter()
        .find(|k| k.name == name || k.alias == Some(name))
        .map(|k| k.name)
}

fn invalid(field: &str, value: &str, allowed: &str) -> AppError {
    AppError::InvalidValue { field: field.to_string(), value: value.to_string(), allowed: allowed.to_string() }
}

fn parse_num<T: std::str::FromStr>(field: &str, value: &str, allowed: &str) -> AppResult<T> {
    value.trim().parse().map_err(|_| invalid(field, value, allowed))
}

fn parse_list<T: std::str::FromStr>(field: &str, value: &str, allowed: &str) -> AppResult<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(field, s, allowed))
        .collect::<AppResult<_>>()?;
    if items.is_empty() {
        return Err(invalid(field, value, allowed));
    }
    Ok(items)
}

fn check<T>(ok: bool, field: &str, value: &str, allowed: &str, v: T) -> AppResult<T> {
    if ok {
        Ok(v)
    } else {
        Err(invalid(field, value, allowed))
    }
}

fn open_unit(field: &str, value: &str) -> AppResult<f64> {
    let allowed = "a real number in (0, 1)";
    let x: f64 = parse_num(field, value, allowed)?;
    check(x > 0.0 && x < 1.0, field, value, allowed, x)
}

fn positive_real(field: &str, value: &str) -> AppResult<f64> {
    let allowed = "a finite real number > 0";
    let x: f64 = parse_num(field, value, allowed)?;
    check(x > 0.0 && x.is_finite(), field, value, allowed, x)
}

fn int_at_least(field: &str, value: &str, min: usize) -> AppResult<usize> {
    let allowed = format!("an integer >= {min}");
    let x: usize = parse_num(field, value, &allowed)?;
    check(x >= min, field, value, &allowed, x)
}

fn list_at_least(field: &str, value: &str, min: usize) -> AppResult<Vec<usize>> {
    let allowed = format!("a comma-separated list of integers >= {min}");
    let xs: Vec<usize> = parse_list(field, value, &allowed)?;
    check(xs.iter().all(|&x| x >= min), field, value, &allowed, xs)
}

impl Config {
    /// Sets one key from its textual value. Names and aliases are accepted.
    pub fn apply(&mut self, name: &str, value: &str) -> AppResult<()> {
        let field = canonical_key(name).ok_or_else(|| AppError::UnknownKey(name.to_string()))?;
        match field {
            "t" => self.t = list_at_least(field, value, 2)?,
            "relays" => self.relays = int_at_least(field, value, 1)?,
            "snr-db" => {
                let allowed = "a comma-separated list of finite reals";
                let xs: Vec<f64> = parse_list(field, value, allowed)?;
                self.snr_db = check(xs.iter().all(|x| x.is_finite()), field, value, allowed, xs)?;
            }
            "alpha" => self.alpha = open_unit(field, value)?,
            "beta" => self.beta = open_unit(field, value)?,
            "relay" => {
                self.relay = match value.trim() {
                    "af" => RelayChoice::Af,
                    "identity" => RelayChoice::Identity,
                    _ => return Err(invalid(field, value, "one of af, identity")),
                }
            }
            "n-particles" => self.n_particles = list_at_least(field, value, 2)?,
            "frames" => self.frames = int_at_least(field, value, 1)?,
            "iterations" => self.iterations = int_at_least(field, value, 1)?,
            "burnin" => self.burnin = parse_num(field, value, "a non-negative integer")?,
            "thin" => {
                self.thin = if value.trim() == "auto" {
                    None
                } else {
                    Some(int_at_least(field, value, 1)?)
                }
            }
            "seed" => self.seed = parse_num(field, value, "an integer in [0, 2^64)")?,
            "sampler" => {
                self.sampler = match value.trim() {
                    "adpmcmc" => SamplerChoice::Adpmcmc,
                    "gibbs" => SamplerChoice::Gibbs,
                    "both" => SamplerChoice::Both,
                    _ => return Err(invalid(field, value, "one of adpmcmc, gibbs, both")),
                }
            }
            "prior-a" => self.prior_a = positive_real(field, value)?,
            "prior-b" => self.prior_b = positive_real(field, value)?,
            "prior-c" => self.prior_c = positive_real(field, value)?,
            "prior-d" => self.prior_d = positive_real(field, value)?,
            "ess-threshold" | "w1" => {
                let allowed = "a real number in (0, 1]";
                let x: f64 = parse_num(field, value, allowed)?;
                let x = check(x > 0.0 && x <= 1.0, field, value, allowed, x)?;
                if field == "w1" {
                    self.w1 = x;
                } else {
                    self.ess_threshold = x;
                }
            }
            "warmup" => self.warmup = parse_num(field, value, "a non-negative integer")?,
            "gibbs-block" => self.gibbs_block = int_at_least(field, value, 1)?,
            "gibbs-multiplier" => self.gibbs_multiplier = positive_real(field, value)?,
            "ci-level" => self.ci_level = open_unit(field, value)?,
            "output-dir" => {
                self.output_dir = check(!value.is_empty(), field, value, "a non-empty path", PathBuf::from(value))?
            }
            "bench-n" => self.bench_n = list_at_least(field, value, 2)?,
            "bench-t" => self.bench_t = list_at_least(field, value, 2)?,
            "bench-iterations" => self.bench_iterations = int_at_least(field, value, 1)?,
            _ => unreachable!("schema key {field} without a setter"),
        }
        Ok(())
    }

    /// Cross-field checks that single keys cannot express.
    pub fn validate(&self) -> AppResult<()> {
        if self.burnin >= self.iterations {
            return Err(invalid(
                "burnin",
                &self.burnin.to_string(),
                &format!("an integer below iterations ({})", self.iterations),
            ));
        }
        for &t in &self.t {
            if t % self.gibbs_block != 0 {
                return Err(invalid(
                    "gibbs-block",
                    &self.gibbs_block.to_string(),
                    &format!("a divisor of every frame length (T = {t})"),
                ));
            }
        }
        Ok(())
    }

    /// Applies every key of a TOML table. Arrays become comma lists.
    pub fn apply_toml(&mut self, text: &str, origin: &Path) -> AppResult<()> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| AppError::ConfigFile {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        for (name, value) in &table {
            let text = toml_value_text(value).ok_or_else(|| {
                invalid(name, &value.to_string(), "a string, number, boolean or flat array")
            })?;
            self.apply(name, &text)?;
        }
        Ok(())
    }

    /// Reads and applies a TOML config file; a missing file is a usage error.
    pub fn apply_file(&mut self, path: &Path) -> AppResult<()> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::ConfigFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        self.apply_toml(&text, path)
    }

    pub fn single_t(&self) -> AppResult<usize> {
        single("t", &self.t)
    }

    pub fn single_snr(&self) -> AppResult<f64> {
        single("snr-db", &self.snr_db)
    }

    pub fn single_n(&self) -> AppResult<usize> {
        single("n-particles", &self.n_particles)
    }
}

fn single<T: Copy + std::fmt::Debug>(field: &str, xs: &[T]) -> AppResult<T> {
    match xs {
        [x] => Ok(*x),
        _ => Err(invalid(field, &format!("{xs:?}"), "exactly one value for this subcommand")),
    }
}

fn toml_value_text(v: &toml::Value) -> Option<String> {
    use toml::Value;
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(f.to_string()),
        Value::Boolean(b) => Some(b.to_string()),
        Value::Array(items) => {
            let parts: Option<Vec<String>> = items
                .iter()
                .map(|x| match x {
                    Value::Array(_) | Value::Table(_) => None,
                    other => toml_value_text(other),
                })
                .collect();
            parts.map(|p| p.join(","))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_schema_key_has_a_setter_that_accepts_its_default() {
        let defaults = Config::default();
        let json = serde_json::to_value(&defaults).unwrap();
        for k in SCHEMA {
            let v = &json[k.name];
            let text = match v {
                serde_json::Value::Array(xs) => {
                    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
                }
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Null => "auto".to_string(),
                other => other.to_string(),
            };
            let mut c = Config::default();
            c.apply(k.name, &text).unwrap_or_else(|e| panic!("{}: {e}", k.name));
            assert_eq!(c, defaults, "{}", k.name);
        }
    }

    #[test]
    fn alias_and_lists() {
        let mut c = Config::default();
        c.apply("snr", "5, 10").unwrap();
        assert_eq!(c.snr_db, vec![5.0, 10.0]);
        c.apply("n-particles", "10,100,1000").unwrap();
        assert_eq!(c.n_particles, vec![10, 100, 1000]);
    }

    #[test]
    fn out_of_range_values_name_field_value_and_range() {
        let err = Config::default().apply("alpha", "1.5").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("alpha") && msg.contains("1.5") && msg.contains("(0, 1)"), "{msg}");
        assert!(matches!(Config::default().apply("nope", "1"), Err(AppError::UnknownKey(_))));
        assert!(Config::default().apply("n-particles", "1").is_err());
        assert!(Config::default().apply("t", "").is_err());
    }

    #[test]
    fn toml_file_values() {
        let mut c = Config::default();
        c.apply_toml("snr-db = [0, 25]\nseed = 9\nthin = 2\nrelay = \"identity\"\n", Path::new("x.toml"))
            .unwrap();
        assert_eq!(c.snr_db, vec![0.0, 25.0]);
        assert_eq!((c.seed, c.thin, c.relay), (9, Some(2), RelayChoice::Identity));
        let err = c.apply_toml("bogus = 1\n", Path::new("x.toml")).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn cross_field_checks() {
        let c = Config { burnin: 5000, ..Config::default() };
        assert!(c.validate().is_err());
        let c = Config { gibbs_block: 7, ..Config::default() };
        assert!(c.validate().is_err());
        assert!(Config::default().validate().is_ok());
    }
}
