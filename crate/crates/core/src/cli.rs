//! Subcommand implementations behind the `mhdflat` binary.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::checkpoint::write_checkpoint;
use crate::config::parse_config;
use crate::diagnostics::{convergence_study, DiagnosticsRecord, StudyResult};
use crate::dynamics::{simulate_streaming, SimState, SolverConfig};
use crate::error::{Error, Result};
use crate::fields::SpectralField;
use crate::verify::{run_battery, VerifyReport};

pub const DIAGNOSTICS_HEADER: &str = "t,E_u,E_B,Hu1,Hu2,Hu3,HB1,HB2,HB3,res_energy,res_cancel,res_star,res_bc_u,res_bc_B,res_lem1,res_lem2,res_lem3";
pub const STUDY_HEADER: &str = "eps,sup_err_H2sq,sup_H3";

/// Scientific notation with 17 significant digits; Rust formatting is
/// locale-independent.
fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn format_record(r: &DiagnosticsRecord) -> String {
    let cols = [
        r.t,
        r.energy_u,
        r.energy_b,
        r.h_u[0],
        r.h_u[1],
        r.h_u[2],
        r.h_b[0],
        r.h_b[1],
        r.h_b[2],
        r.res_energy,
        r.res_cancel,
        r.res_star,
        r.res_bc_u,
        r.res_bc_b,
        r.res_lem1,
        r.res_lem2,
        r.res_lem3,
    ];
    cols.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",")
}

pub fn load_config(path: &Path) -> Result<SolverConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn resolve_out(config: &SolverConfig, out: Option<&Path>) -> Result<PathBuf> {
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| config.out_dir.clone())
        .ok_or_else(|| Error::Config("no output directory given".into()))?;
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

/// Runs a simulation, streaming `diagnostics.csv` and writing `final.ckpt`.
///
/// Rows are flushed as they are produced so a blow-up leaves the partial CSV
/// on disk.
pub fn run_config(config: &SolverConfig, out: &Path) -> Result<SimState<f64>> {
    let csv_path = out.join("diagnostics.csv");
    let file = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut csv = BufWriter::new(file);
    writeln!(csv, "{DIAGNOSTICS_HEADER}").map_err(|e| Error::io(&csv_path, e))?;
    let result = simulate_streaming(config, config.initial_fields::<f64>(), |rec| {
        writeln!(csv, "{}", format_record(rec))
            .and_then(|_| csv.flush())
            .map_err(|e| Error::io(&csv_path, e))
    });
    csv.flush().map_err(|e| Error::io(&csv_path, e))?;
    let state = result?;
    write_checkpoint(&state, config.grid, &out.join("final.ckpt"))?;
    Ok(state)
}

pub fn run_cmd(config_path: &Path, out: Option<&Path>) -> Result<SimState<f64>> {
    let config = load_config(config_path)?;
    let dir = resolve_out(&config, out)?;
    run_config(&config, &dir)
}

/// Parses a comma-separated list of dissipation values.
pub fn parse_eps_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Config(format!("eps list: cannot parse {s:?}")))
        })
        .collect()
}

/// Runs a study from explicit initial data and writes `study.csv`,
/// `slope.txt` and `reference.ckpt` into `out`.
pub fn study_with_init(
    config: &SolverConfig,
    eps: &[f64],
    init: (SpectralField<f64>, SpectralField<f64>),
    out: &Path,
) -> Result<StudyResult<f64>> {
    let result = convergence_study(config, eps, init)?;

    let csv_path = out.join("study.csv");
    let mut csv = String::from(STUDY_HEADER);
    csv.push('\n');
    for r in &result.rows {
        csv.push_str(&format!("{},{},{}\n", num(r.eps), num(r.sup_err), num(r.sup_h3)));
    }
    fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;

    let slope_path = out.join("slope.txt");
    let line = format!(
        "slope={} intercept={}\n",
        num(result.slope.unwrap_or(f64::NAN)),
        num(result.intercept.unwrap_or(f64::NAN))
    );
    fs::write(&slope_path, line).map_err(|e| Error::io(&slope_path, e))?;

    write_checkpoint(&result.reference, config.grid, &out.join("reference.ckpt"))?;
    Ok(result)
}

pub fn study_cmd(config_path: &Path, eps: &str, out: Option<&Path>) -> Result<StudyResult<f64>> {
    let config = load_config(config_path)?;
    let eps = parse_eps_list(eps)?;
    let dir = resolve_out(&config, out)?;
    study_with_init(&config, &eps, config.initial_fields::<f64>(), &dir)
}

pub fn verify_cmd(config_path: &Path) -> Result<VerifyReport> {
    run_battery(&load_config(config_path)?)
}
