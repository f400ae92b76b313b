//! Galerkin right-hand side and time integration.
//!
//! The evolved system is
//!
//! ```text
//! du/dt = nu Delta u - H1(u, B),   H1 = P[(curl u) x u + B x (curl B)]
//! dB/dt = mu Delta B - H2(u, B),   H2 = curl(B x u)
//! ```
//!
//! with `P` the per-block Leray projection. Products are formed on the
//! collocation grid and truncated with the 2/3 rule. Diffusion is integrated
//! exactly by the factor `exp(-nu lambda t)` around a three-stage SSP
//! Runge-Kutta scheme for the nonlinear part.

use std::fmt;
use std::path::PathBuf;

use log::warn;

use crate::diagnostics::{energy_law_residual, Diagnostics, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::fields::SpectralField;
use crate::modes::{eigenvalue, FieldParity, Truncation};
use crate::scalar::Real;
use crate::transforms::{GridSpec, Transformer};

/// Seed mixed into the magnetic initial field so `u` and `B` draw different streams.
const MAGNETIC_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Time, fields and dissipation coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState<T> {
    pub t: f64,
    pub u: SpectralField<T>,
    pub b: SpectralField<T>,
    pub nu: f64,
    pub mu: f64,
}

impl<T: Real> SimState<T> {
    pub fn new(u: SpectralField<T>, b: SpectralField<T>, nu: f64, mu: f64) -> Result<Self> {
        check_pair(&u, &b)?;
        if !(nu >= 0.0 && mu >= 0.0 && nu.is_finite() && mu.is_finite()) {
            return Err(Error::Config(format!(
                "dissipation must be finite and nonnegative, got nu={nu}, mu={mu}"
            )));
        }
        Ok(Self {
            t: 0.0,
            u,
            b,
            nu,
            mu,
        })
    }

    /// `||u||^2 + ||B||^2`.
    pub fn total_energy(&self) -> f64 {
        self.u.energy().as_f64() + self.b.energy().as_f64()
    }
}

fn check_pair<T: Real>(u: &SpectralField<T>, b: &SpectralField<T>) -> Result<()> {
    if u.parity() != FieldParity::Velocity {
        return Err(Error::ParityMismatch("u must carry velocity parity".into()));
    }
    if b.parity() != FieldParity::Magnetic {
        return Err(Error::ParityMismatch("B must carry magnetic parity".into()));
    }
    if u.truncation() != b.truncation() {
        return Err(Error::ShapeMismatch("u and B have different truncations".into()));
    }
    Ok(())
}

/// Run parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub trunc: Truncation,
    pub grid: GridSpec,
    pub dt: f64,
    pub t_end: f64,
    pub nu: f64,
    pub mu: f64,
    pub sample_every: usize,
    /// Initial-data seed; `0` selects the analytic shear field.
    pub seed: u64,
    pub decay_power: f64,
    pub out_dir: Option<PathBuf>,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        if !finite_pos(self.dt) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Config(format!("T must be nonnegative, got {}", self.t_end)));
        }
        for (name, v) in [("nu", self.nu), ("mu", self.mu)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if self.sample_every == 0 {
            return Err(Error::Config("sample_every must be at least 1".into()));
        }
        if !(self.decay_power.is_finite() && self.decay_power >= 2.0) {
            return Err(Error::Config(format!(
                "decay_power must be >= 2, got {}",
                self.decay_power
            )));
        }
        self.grid.check_dealiased(self.trunc)?;
        self.n_steps().map(|_| ())
    }

    /// Number of fixed steps; `T` must be an integer multiple of `dt`.
    pub fn n_steps(&self) -> Result<usize> {
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::Config(format!(
                "T={} is not an integer multiple of dt={}",
                self.t_end, self.dt
            )));
        }
        Ok(n as usize)
    }

    /// Steps at which diagnostics are sampled: `0`, every `sample_every`, and the last.
    pub fn is_sample_step(&self, step: usize, n_steps: usize) -> bool {
        step.is_multiple_of(self.sample_every) || step == n_steps
    }

    /// Initial `(u, B)` selected by `seed`.
    pub fn initial_fields<T: Real>(&self) -> (SpectralField<T>, SpectralField<T>) {
        if self.seed == 0 {
            (
                SpectralField::shear_velocity(self.trunc),
                SpectralField::zero(FieldParity::Magnetic, self.trunc),
            )
        } else {
            (
                SpectralField::random_divfree(
                    self.seed,
                    FieldParity::Velocity,
                    self.trunc,
                    self.decay_power,
                ),
                SpectralField::random_divfree(
                    self.seed ^ MAGNETIC_SEED_SALT,
                    FieldParity::Magnetic,
                    self.trunc,
                    self.decay_power,
                ),
            )
        }
    }

    pub fn with_dissipation(&self, nu: f64, mu: f64) -> Self {
        Self {
            nu,
            mu,
            ..self.clone()
        }
    }
}

/// Nonlinear operators and the time stepper for one truncation/grid pair.
#[derive(Debug)]
pub struct Dynamics<T: Real> {
    tf: Transformer<T>,
    trunc: Truncation,
}

impl<T: Real> Dynamics<T> {
    pub fn new(trunc: Truncation, grid: GridSpec) -> Result<Self> {
        grid.check_dealiased(trunc)?;
        Ok(Self {
            tf: Transformer::new(grid),
            trunc,
        })
    }

    pub fn transformer(&self) -> &Transformer<T> {
        &self.tf
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    fn check_inputs(&self, u: &SpectralField<T>, b: &SpectralField<T>) -> Result<()> {
        check_pair(u, b)?;
        if u.truncation() != self.trunc {
            return Err(Error::ShapeMismatch(format!(
                "fields have K={}, M={}, solver expects K={}, M={}",
                u.truncation().k,
                u.truncation().m,
                self.trunc.k,
                self.trunc.m
            )));
        }
        Ok(())
    }

    /// `(H1(u, B), H2(u, B))` sharing one set of grid evaluations.
    pub fn nonlinear(
        &self,
        u: &SpectralField<T>,
        b: &SpectralField<T>,
    ) -> Result<(SpectralField<T>, SpectralField<T>)> {
        self.check_inputs(u, b)?;
        let tf = &self.tf;
        let up = tf.to_physical(u)?;
        let bp = tf.to_physical(b)?;
        let wp = tf.to_physical(&u.curl())?;
        let jp = tf.to_physical(&b.curl())?;

        let mut g = wp.cross(&up);
        g.add_assign(&bp.cross(&jp));
        let h1 = tf
            .to_spectral(&g, FieldParity::Velocity, self.trunc)?
            .dealias()
            .leray_project();

        let bxu = bp.cross(&up);
        let h2 = tf
            .to_spectral(&bxu, FieldParity::Velocity, self.trunc)?
            .dealias()
            .curl();
        Ok((h1, h2))
    }

    /// `P[(curl u) x u + B x (curl B)]`, velocity parity, divergence-free.
    pub fn h1(&self, u: &SpectralField<T>, b: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.check_inputs(u, b)?;
        let tf = &self.tf;
        let up = tf.to_physical(u)?;
        let bp = tf.to_physical(b)?;
        let mut g = tf.to_physical(&u.curl())?.cross(&up);
        g.add_assign(&bp.cross(&tf.to_physical(&b.curl())?));
        Ok(tf
            .to_spectral(&g, FieldParity::Velocity, self.trunc)?
            .dealias()
            .leray_project())
    }

    /// `curl(B x u)`, magnetic parity, divergence-free.
    pub fn h2(&self, u: &SpectralField<T>, b: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.check_inputs(u, b)?;
        let tf = &self.tf;
        let bxu = tf.to_physical(b)?.cross(&tf.to_physical(u)?);
        Ok(tf
            .to_spectral(&bxu, FieldParity::Velocity, self.trunc)?
            .dealias()
            .curl())
    }

    /// `(du/dt, dB/dt)`.
    pub fn rhs(&self, state: &SimState<T>) -> Result<(SpectralField<T>, SpectralField<T>)> {
        let (h1, h2) = self.nonlinear(&state.u, &state.b)?;
        let du = state.u.laplacian().lin_comb(T::lit(state.nu), &h1, -T::one());
        let db = state.b.laplacian().lin_comb(T::lit(state.mu), &h2, -T::one());
        Ok((du, db))
    }

    /// One integrating-factor SSP-RK3 step.
    pub fn step(&self, state: &SimState<T>, dt: f64) -> Result<SimState<T>> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let (nu, mu) = (state.nu, state.mu);
        let decay = |f: &SpectralField<T>, coef: f64, h: f64| {
            if coef == 0.0 {
                return f.clone();
            }
            f.scale_modes(|mode| T::lit((-coef * eigenvalue::<f64>(mode) * h).exp()))
        };
        let dtt = T::lit(dt);
        let (u0, b0) = (&state.u, &state.b);

        // stage 1: t + dt
        let (h1, h2) = self.nonlinear(u0, b0)?;
        let u1 = decay(&u0.lin_comb(T::one(), &h1, -dtt), nu, dt);
        let b1 = decay(&b0.lin_comb(T::one(), &h2, -dtt), mu, dt);

        // stage 2: t + dt/2
        let (h1, h2) = self.nonlinear(&u1, &b1)?;
        let (q, qq) = (T::lit(0.75), T::lit(0.25));
        let u2 = decay(u0, nu, 0.5 * dt).lin_comb(
            q,
            &decay(&u1.lin_comb(T::one(), &h1, -dtt), nu, -0.5 * dt),
            qq,
        );
        let b2 = decay(b0, mu, 0.5 * dt).lin_comb(
            q,
            &decay(&b1.lin_comb(T::one(), &h2, -dtt), mu, -0.5 * dt),
            qq,
        );

        // stage 3: t + dt
        let (h1, h2) = self.nonlinear(&u2, &b2)?;
        let (third, two_thirds) = (T::lit(1.0 / 3.0), T::lit(2.0 / 3.0));
        let u3 = decay(u0, nu, dt).lin_comb(
            third,
            &decay(&u2.lin_comb(T::one(), &h1, -dtt), nu, 0.5 * dt),
            two_thirds,
        );
        let b3 = decay(b0, mu, dt).lin_comb(
            third,
            &decay(&b2.lin_comb(T::one(), &h2, -dtt), mu, 0.5 * dt),
            two_thirds,
        );

        let t = state.t + dt;
        let h3 = (u3.curl_norm_sq(3) + b3.curl_norm_sq(3)).as_f64();
        if !u3.is_finite() || !b3.is_finite() || h3.is_nan() || h3 > T::blow_up_cap() {
            let norm = (u3.energy() + b3.energy()).as_f64().sqrt();
            return Err(Error::BlowUp { t, norm });
        }
        Ok(SimState {
            t,
            u: u3.dealias().leray_project().with_parity_zeros(),
            b: b3.dealias().leray_project().with_parity_zeros(),
            nu,
            mu,
        })
    }

    /// `dt * max(|u| + |B|) / min(dx, dy, dz)`; stable guidance is `<= 0.5`.
    pub fn cfl_number(&self, state: &SimState<T>, dt: f64) -> Result<f64> {
        let up = self.tf.to_physical(&state.u)?;
        let bp = self.tf.to_physical(&state.b)?;
        let grid = self.tf.grid();
        let mut vmax = 0.0f64;
        for p in 0..grid.points() {
            let mag = |f: &crate::transforms::PhysicalField<T>| {
                (0..3)
                    .map(|c| f.comps[c][p] * f.comps[c][p])
                    .sum::<T>()
                    .sqrt()
                    .as_f64()
            };
            vmax = vmax.max(mag(&up) + mag(&bp));
        }
        let two_pi = std::f64::consts::TAU;
        let h = (two_pi / grid.nx as f64)
            .min(two_pi / grid.ny as f64)
            .min(1.0 / grid.nz as f64);
        Ok(dt * vmax / h)
    }

    fn check_cfl(&self, state: &SimState<T>, dt: f64) -> Result<()> {
        let cfl = self.cfl_number(state, dt)?;
        if cfl > 0.5 {
            warn!(
                "CFL number {cfl:.3} exceeds 0.5 at t={:.6}; consider a smaller dt",
                state.t
            );
        }
        Ok(())
    }

    /// Advances `init` to `config.t_end`, calling `on_step(step, state)` for step 0
    /// and after every completed step.
    pub fn integrate<F>(
        &self,
        config: &SolverConfig,
        init: SimState<T>,
        mut on_step: F,
    ) -> Result<SimState<T>>
    where
        F: FnMut(usize, &SimState<T>) -> Result<()>,
    {
        let n = config.n_steps()?;
        let mut state = init;
        on_step(0, &state)?;
        if n > 0 {
            self.check_cfl(&state, config.dt)?;
        }
        for s in 1..=n {
            let mut next = self.step(&state, config.dt)?;
            next.t = s as f64 * config.dt;
            state = next;
            if s % 100 == 0 {
                self.check_cfl(&state, config.dt)?;
            }
            on_step(s, &state)?;
        }
        Ok(state)
    }
}

/// Final state and the sampled diagnostics of a completed run.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub final_state: SimState<T>,
    pub records: Vec<DiagnosticsRecord>,
}

/// A run that stopped early, with every record produced before the failure.
#[derive(Debug)]
pub struct SimFailure {
    pub records: Vec<DiagnosticsRecord>,
    pub error: Error,
}

impl fmt::Display for SimFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} records)", self.error, self.records.len())
    }
}

impl std::error::Error for SimFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Checks the preconditions of a run on its initial data.
pub fn initial_state<T: Real>(
    config: &SolverConfig,
    init: (SpectralField<T>, SpectralField<T>),
) -> Result<SimState<T>> {
    config.validate()?;
    let (u, b) = init;
    if u.truncation() != config.trunc {
        return Err(Error::ShapeMismatch("initial data truncation differs from config".into()));
    }
    for (name, f) in [("u", &u), ("B", &b)] {
        let r = f.relative_boundary_residual();
        if r > T::identity_tol() {
            return Err(Error::Config(format!(
                "initial {name} violates its boundary conditions (residual {r:e})"
            )));
        }
        let d = f.divergence_residual();
        if d > T::identity_tol() {
            return Err(Error::Config(format!(
                "initial {name} is not divergence-free (residual {d:e})"
            )));
        }
    }
    SimState::new(u, b, config.nu, config.mu)
}

/// Runs `config` from `init`, handing each diagnostics record to `sink` as soon
/// as it is produced.
pub fn simulate_streaming<T, F>(
    config: &SolverConfig,
    init: (SpectralField<T>, SpectralField<T>),
    mut sink: F,
) -> Result<SimState<T>>
where
    T: Real,
    F: FnMut(&DiagnosticsRecord) -> Result<()>,
{
    let state = initial_state(config, init)?;
    let dynamics = Dynamics::new(config.trunc, config.grid)?;
    let diagnostics = Diagnostics::new(config.trunc, config.grid)?;
    let n = config.n_steps()?;
    let (nu, mu) = (config.nu, config.mu);

    let mut prev: Option<DiagnosticsRecord> = None;
    let mut prev_step = 0usize;
    // curl norms since the last sample, indexed by step - prev_step
    let mut history: Vec<(f64, f64)> = Vec::new();

    dynamics.integrate(config, state, |s, st| {
        if s == 0 {
            history.clear();
        }
        history.push((st.u.curl_norm_sq(1).as_f64(), st.b.curl_norm_sq(1).as_f64()));
        if !config.is_sample_step(s, n) {
            return Ok(());
        }
        let mid = if s > 0 && (s - prev_step).is_multiple_of(2) {
            Some(history[(s - prev_step) / 2])
        } else {
            None
        };
        let mut rec = diagnostics.record(&dynamics, st, mid)?;
        if let Some(p) = &prev {
            rec.res_energy = energy_law_residual(p, &rec, nu, mu);
        }
        sink(&rec)?;
        prev = Some(rec);
        prev_step = s;
        let last = *history.last().expect("just pushed");
        history.clear();
        history.push(last);
        Ok(())
    })
}

/// Runs `config` from `init` and collects every diagnostics record.
pub fn simulate<T: Real>(
    config: &SolverConfig,
    init: (SpectralField<T>, SpectralField<T>),
) -> std::result::Result<Trajectory<T>, SimFailure> {
    let mut records = Vec::new();
    match simulate_streaming(config, init, |r| {
        records.push(r.clone());
        Ok(())
    }) {
        Ok(final_state) => Ok(Trajectory {
            final_state,
            records,
        }),
        Err(error) => Err(SimFailure { records, error }),
    }
}
