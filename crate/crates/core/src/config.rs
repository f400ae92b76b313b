//! Plain-text `key=value` run configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use log::warn;

use crate::dynamics::SolverConfig;
use crate::error::{Error, Result};
use crate::modes::Truncation;
use crate::transforms::GridSpec;

const KEYS: [&str; 13] = [
    "K",
    "M",
    "Nx",
    "Ny",
    "Nz",
    "dt",
    "T",
    "nu",
    "mu",
    "seed",
    "decay_power",
    "sample_every",
    "out_dir",
];

const REQUIRED: [&str; 11] = ["K", "M", "Nx", "Ny", "Nz", "dt", "T", "nu", "mu", "seed", "out_dir"];

const DEFAULT_SAMPLE_EVERY: usize = 10;
const DEFAULT_DECAY_POWER: f64 = 2.0;

/// Parses and validates a configuration.
///
/// Blank lines and lines starting with `#` are ignored. A repeated key
/// overrides the earlier value with a warning.
pub fn parse_config(text: &str) -> Result<SolverConfig> {
    // key -> (line number, raw value)
    let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {line_no}: expected key=value, got {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        let known = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| Error::Config(format!("line {line_no}: unknown key {key:?}")))?;
        if let Some((prev, _)) = entries.insert(known, (line_no, value)) {
            warn!("config line {line_no}: key {key} overrides the value from line {prev}");
        }
    }

    let int = |key: &str| -> Result<Option<u64>> {
        entries
            .get(key)
            .map(|&(line, v)| {
                v.parse::<u64>().map_err(|_| {
                    Error::Config(format!(
                        "line {line}: key {key}: cannot parse {v:?} as a nonnegative integer"
                    ))
                })
            })
            .transpose()
    };
    let real = |key: &str| -> Result<Option<f64>> {
        entries
            .get(key)
            .map(|&(line, v)| match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(Error::Config(format!(
                    "line {line}: key {key}: cannot parse {v:?} as a finite number"
                ))),
            })
            .transpose()
    };
    let usize_of = |key: &str| -> Result<Option<usize>> {
        int(key)?
            .map(|v| {
                usize::try_from(v).map_err(|_| Error::Config(format!("key {key}: {v} too large")))
            })
            .transpose()
    };

    // Malformed values are reported before missing keys.
    let k = usize_of("K")?;
    let m = usize_of("M")?;
    let nx = usize_of("Nx")?;
    let ny = usize_of("Ny")?;
    let nz = usize_of("Nz")?;
    let dt = real("dt")?;
    let t_end = real("T")?;
    let nu = real("nu")?;
    let mu = real("mu")?;
    let seed = int("seed")?;
    let sample_every = usize_of("sample_every")?.unwrap_or(DEFAULT_SAMPLE_EVERY);
    let decay_power = real("decay_power")?.unwrap_or(DEFAULT_DECAY_POWER);

    let missing: Vec<&str> = REQUIRED
        .iter()
        .copied()
        .filter(|k| !entries.contains_key(k))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Config(format!(
            "missing required keys: {}",
            missing.join(", ")
        )));
    }

    let grid = GridSpec::new(nx.unwrap(), ny.unwrap(), nz.unwrap())
        .map_err(|e| Error::Config(e.to_string()))?;
    let config = SolverConfig {
        trunc: Truncation::new(k.unwrap(), m.unwrap()),
        grid,
        dt: dt.unwrap(),
        t_end: t_end.unwrap(),
        nu: nu.unwrap(),
        mu: mu.unwrap(),
        sample_every,
        seed: seed.unwrap(),
        decay_power,
        out_dir: entries.get("out_dir").map(|&(_, v)| PathBuf::from(v)),
    };
    config.validate()?;
    Ok(config)
}

/// Renders a configuration in the format accepted by [`parse_config`].
pub fn render_config(config: &SolverConfig) -> String {
    let mut s = String::new();
    let mut push = |k: &str, v: String| {
        s.push_str(k);
        s.push('=');
        s.push_str(&v);
        s.push('\n');
    };
    push("K", config.trunc.k.to_string());
    push("M", config.trunc.m.to_string());
    push("Nx", config.grid.nx.to_string());
    push("Ny", config.grid.ny.to_string());
    push("Nz", config.grid.nz.to_string());
    push("dt", format!("{:?}", config.dt));
    push("T", format!("{:?}", config.t_end));
    push("nu", format!("{:?}", config.nu));
    push("mu", format!("{:?}", config.mu));
    push("seed", config.seed.to_string());
    push("decay_power", format!("{:?}", config.decay_power));
    push("sample_every", config.sample_every.to_string());
    if let Some(dir) = &config.out_dir {
        push("out_dir", dir.display().to_string());
    }
    s
}
