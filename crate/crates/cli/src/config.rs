//! Run configuration resolved from four layers in increasing precedence:
//! built-in defaults, a key=value config file, `ABELIA_*` environment
//! variables (prefix plus the upper-cased key), and command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use abelia_core::bound_calculus::DeltaPolicy;
use abelia_core::prime_counting::PrimeSieve;
use abelia_core::quadratic_class_groups::ClassGroupCache;
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::report::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Global flags, valid before or after any subcommand. Each one overrides
/// the config-file and environment layers for its key.
#[derive(Debug, clap::Args)]
pub struct GlobalOpts {
    /// key=value configuration file
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Largest prime scans may reach (key sieve_limit, at least 1000)
    #[arg(long, global = true, value_name = "N")]
    pub sieve_limit: Option<u64>,
    /// Largest |D| the class-group engine accepts (key
    /// classgroup_disc_bound, at least 100)
    #[arg(long, global = true, value_name = "N")]
    pub disc_bound: Option<u64>,
    /// Class-group cache file, JSON lines; without it the cache stays in
    /// memory (key cache_path)
    #[arg(long, global = true, value_name = "PATH")]
    pub cache: Option<PathBuf>,
    /// Epsilon inside the density exponent, a rational like 1/20 (key
    /// eps_delta)
    #[arg(long, global = true, value_name = "Q")]
    pub eps_delta: Option<String>,
    /// Report format (key output_format)
    #[arg(long, global = true, value_enum, value_name = "FORMAT")]
    pub out: Option<OutputFormat>,
    /// Worker thread count (key parallelism, at least 1)
    #[arg(long, global = true, value_name = "N")]
    pub parallelism: Option<usize>,
}

#[derive(Debug)]
pub struct RunConfig {
    pub sieve_limit: u64,
    pub classgroup_disc_bound: u64,
    pub cache_path: Option<PathBuf>,
    pub delta_policy: DeltaPolicy,
    pub output_format: OutputFormat,
    pub parallelism: usize,
}

const KEYS: [&str; 6] = [
    "sieve_limit",
    "classgroup_disc_bound",
    "cache_path",
    "eps_delta",
    "output_format",
    "parallelism",
];

/// Parses "a" or "a/b" with integer parts into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational, CliError> {
    let bad = || CliError::Usage(format!("expected a rational like 3 or 1/20, got {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| bad())?;
    let den = BigInt::from_str(den).map_err(|_| bad())?;
    if den == BigInt::from(0) {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

fn policy_from(s: &str) -> Result<DeltaPolicy, CliError> {
    Ok(DeltaPolicy::new(parse_rational(s)?)?)
}

impl RunConfig {
    fn defaults() -> RunConfig {
        RunConfig {
            sieve_limit: 100_000_000,
            classgroup_disc_bound: 1_000_000,
            cache_path: None,
            delta_policy: DeltaPolicy::exact(),
            output_format: OutputFormat::Json,
            parallelism: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }

    fn apply(&mut self, key: &str, value: &str, origin: &str) -> Result<(), CliError> {
        let context = |what: &str| {
            CliError::Usage(format!("bad value {value:?} for {key} ({origin}): {what}"))
        };
        match key {
            "sieve_limit" => {
                self.sieve_limit = value.parse().map_err(|_| context("expected an integer"))?;
            }
            "classgroup_disc_bound" => {
                self.classgroup_disc_bound =
                    value.parse().map_err(|_| context("expected an integer"))?;
            }
            "cache_path" => self.cache_path = Some(PathBuf::from(value)),
            "eps_delta" => self.delta_policy = policy_from(value)?,
            "output_format" => {
                self.output_format = match value.to_ascii_lowercase().as_str() {
                    "json" => OutputFormat::Json,
                    "csv" => OutputFormat::Csv,
                    _ => return Err(context("expected json or csv")),
                };
            }
            "parallelism" => {
                self.parallelism = value.parse().map_err(|_| context("expected an integer"))?;
            }
            _ => return Err(CliError::Usage(format!("unknown configuration key {key}"))),
        }
        Ok(())
    }

    pub fn resolve(opts: &GlobalOpts) -> Result<RunConfig, CliError> {
        let mut layered: BTreeMap<&str, (String, String)> = BTreeMap::new();
        if let Some(path) = &opts.config {
            for (key, value) in read_config_file(path)? {
                layered.insert(key, (value, format!("config file {}", path.display())));
            }
        }
        for key in KEYS {
            let var = format!("ABELIA_{}", key.to_ascii_uppercase());
            if let Ok(value) = std::env::var(&var) {
                layered.insert(key, (value, format!("environment variable {var}")));
            }
        }

        let mut config = RunConfig::defaults();
        for (key, (value, origin)) in &layered {
            config.apply(key, value, origin)?;
        }
        if let Some(v) = opts.sieve_limit {
            config.sieve_limit = v;
        }
        if let Some(v) = opts.disc_bound {
            config.classgroup_disc_bound = v;
        }
        if let Some(path) = &opts.cache {
            config.cache_path = Some(path.clone());
        }
        if let Some(s) = &opts.eps_delta {
            config.delta_policy = policy_from(s)?;
        }
        if let Some(f) = opts.out {
            config.output_format = f;
        }
        if let Some(n) = opts.parallelism {
            config.parallelism = n;
        }

        if config.sieve_limit < 1000 {
            return Err(CliError::Usage(format!(
                "sieve_limit must be at least 1000, got {}",
                config.sieve_limit
            )));
        }
        if config.classgroup_disc_bound < 100 {
            return Err(CliError::Usage(format!(
                "classgroup_disc_bound must be at least 100, got {}",
                config.classgroup_disc_bound
            )));
        }
        if config.parallelism < 1 {
            return Err(CliError::Usage("parallelism must be at least 1".to_owned()));
        }
        Ok(config)
    }

    pub fn open_cache(&self) -> Result<ClassGroupCache, CliError> {
        match &self.cache_path {
            Some(path) => Ok(ClassGroupCache::open(path)?),
            None => Ok(ClassGroupCache::in_memory()),
        }
    }

    /// Sieve sized to the query, refused when the query overruns the
    /// configured cap. Sieving less than the cap changes nothing but
    /// memory: every answer depends only on primes up to the query point.
    pub fn sieve_for(&self, x: u64) -> Result<PrimeSieve, CliError> {
        if x > self.sieve_limit {
            return Err(CliError::Resource(format!(
                "query needs primes up to {x} but sieve_limit is {}",
                self.sieve_limit
            )));
        }
        Ok(PrimeSieve::new(x))
    }
}

fn read_config_file(path: &Path) -> Result<Vec<(&'static str, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!("cannot read config file {}: {e}", path.display()))
    })?;
    let mut entries = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "config file {} line {}: expected key=value, got {line:?}",
                path.display(),
                index + 1
            ))
        })?;
        let key = key.trim();
        let known = KEYS.iter().find(|k| **k == key).ok_or_else(|| {
            CliError::Usage(format!(
                "config file {} line {}: unknown key {key}",
                path.display(),
                index + 1
            ))
        })?;
        entries.push((*known, value.trim().to_owned()));
    }
    Ok(entries)
}
