//! Property battery run by `mhdflat verify`.

use std::fmt;
use std::time::Instant;

use crate::diagnostics::Diagnostics;
use crate::dynamics::{Dynamics, SolverConfig};
use crate::error::Result;
use crate::fields::SpectralField;
use crate::modes::{FieldParity, Truncation};
use crate::transforms::{GridSpec, Transformer};

pub const SEEDS: std::ops::RangeInclusive<u64> = 1..=5;

const FLOOR: f64 = 1e-300;

/// Worst observed value of one invariant across all seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub worst: f64,
    pub tol: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.tol
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub trunc: Truncation,
    pub grid: GridSpec,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "property battery: K={} M={} grid {}x{}x{}, seeds {}..{}",
            self.trunc.k,
            self.trunc.m,
            self.grid.nx,
            self.grid.ny,
            self.grid.nz,
            SEEDS.start(),
            SEEDS.end()
        )?;
        writeln!(f, "{:<28} {:>12} {:>10}  status", "invariant", "worst", "tol")?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<28} {:>12.3e} {:>10.0e}  {}",
                c.name,
                c.worst,
                c.tol,
                if c.passed() { "PASS" } else { "FAIL" }
            )?;
        }
        write!(f, "elapsed {:.2} s", self.seconds)
    }
}

fn rel(num: f64, den: f64) -> f64 {
    num / den.max(FLOOR)
}

struct Battery {
    checks: Vec<Check>,
}

impl Battery {
    fn observe(&mut self, name: &'static str, tol: f64, value: f64) {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        match self.checks.iter_mut().find(|c| c.name == name) {
            Some(c) => c.worst = c.worst.max(value),
            None => self.checks.push(Check {
                name,
                worst: value,
                tol,
            }),
        }
    }
}

/// Runs every structural identity on seeded random fields at the
/// truncation and grid of `config`.
pub fn run_battery(config: &SolverConfig) -> Result<VerifyReport> {
    config.validate()?;
    let start = Instant::now();
    let (trunc, grid) = (config.trunc, config.grid);
    let tf = Transformer::<f64>::new(grid);
    let dynamics = Dynamics::<f64>::new(trunc, grid)?;
    let diagnostics = Diagnostics::<f64>::new(trunc, grid)?;
    let mut b = Battery { checks: Vec::new() };

    for seed in SEEDS {
        let p = config.decay_power;
        let u = SpectralField::<f64>::random_divfree(seed, FieldParity::Velocity, trunc, p);
        let bf = SpectralField::<f64>::random_divfree(
            seed ^ 0x9E37_79B9_7F4A_7C15,
            FieldParity::Magnetic,
            trunc,
            p,
        );
        let raw_u = SpectralField::<f64>::random_raw(seed, FieldParity::Velocity, trunc, p);
        let raw_b = SpectralField::<f64>::random_raw(seed + 100, FieldParity::Magnetic, trunc, p);

        for f in [&u, &bf] {
            let vals = tf.to_physical(f)?;
            let e = f.energy();
            b.observe("parseval", 1e-10, rel((vals.quadrature_inner(&vals) - e).abs(), e));

            let back = tf.to_spectral(&vals, f.parity(), trunc)?;
            b.observe("round trip", 1e-12, rel((&back - f).l2_norm(), f.l2_norm()));

            let lap = f.laplacian();
            let resid = (&f.curl_pow(2) + &lap).l2_norm();
            b.observe("curl^2 = -laplacian", 1e-12, rel(resid, lap.l2_norm()));

            b.observe("divergence", 1e-12, f.divergence_residual());
            b.observe("hermitian symmetry", 1e-14, rel(f.hermitian_residual(), f.max_abs_coeff()));
        }

        for (f, g) in [(&raw_u, &u), (&raw_b, &bf)] {
            let pf = f.leray_project();
            let ppf = pf.leray_project();
            b.observe("leray idempotency", 1e-13, rel((&ppf - &pf).l2_norm(), f.l2_norm()));
            let lhs = pf.inner(g)?;
            let rhs = f.inner(&g.leray_project())?;
            b.observe(
                "leray self-adjointness",
                1e-13,
                rel((lhs - rhs).abs(), f.l2_norm() * g.l2_norm()),
            );
        }

        let constructed = [
            u.clone(),
            bf.clone(),
            u.curl(),
            bf.curl(),
            u.curl_pow(3),
            bf.curl_pow(3),
            u.leray_project(),
            raw_u.leray_project(),
            raw_b.leray_project(),
            dynamics.h1(&u, &bf)?,
            dynamics.h2(&u, &bf)?,
        ];
        for f in &constructed {
            b.observe("boundary trace", 1e-11, f.relative_boundary_residual());
        }

        b.observe("energy cancellation", 1e-11, diagnostics.cancellation_residual(&dynamics, &u, &bf)?);
        b.observe("star cancellation", 1e-9, diagnostics.star_cancellation_residual(&u, &bf)?);
        let lem = diagnostics.boundary_lemma_residuals(&u, &bf)?;
        b.observe("lemma curl(B x u)", 1e-9, lem.induction);
        b.observe("lemma curl(w x u)", 1e-9, lem.vortex);
        b.observe("lemma curl(J x B)", 1e-9, lem.lorentz);
        b.observe("lemma curl^3(B x u)", 1e-9, lem.third_curl);
    }

    Ok(VerifyReport {
        trunc,
        grid,
        checks: b.checks,
        seconds: start.elapsed().as_secs_f64(),
    })
}
