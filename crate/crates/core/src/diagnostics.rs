//! Residuals of the tracked identities, Sobolev-norm histories and the
//! vanishing-dissipation convergence study.
//!
//! Every "relative" residual divides by a magnitude of the same expression,
//! floored at `1e-30` so that identically vanishing inputs report `0`.

use num_traits::Float;
use rayon::prelude::*;

use crate::dynamics::{initial_state, Dynamics, SimState, SolverConfig};
use crate::error::{Error, Result};
use crate::fields::SpectralField;
use crate::modes::{FieldParity, Truncation};
use crate::scalar::Real;
use crate::transforms::{quadrature, GridSpec, ScalarSeries, Transformer};

const FLOOR: f64 = 1e-30;

/// Everything recorded at one sampling instant.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `||u||^2`
    pub energy_u: f64,
    /// `||B||^2`
    pub energy_b: f64,
    /// `||u||_s` for `s = 1, 2, 3`
    pub h_u: [f64; 3],
    pub h_b: [f64; 3],
    /// `||curl u||^2`, `||curl B||^2`
    pub curl_sq_u: f64,
    pub curl_sq_b: f64,
    /// Curl norms at the midpoint of the interval ending at this sample, when
    /// that midpoint falls on a step.
    pub mid_curl_sq: Option<(f64, f64)>,
    pub res_energy: f64,
    pub res_cancel: f64,
    pub res_star: f64,
    pub res_bc_u: f64,
    pub res_bc_b: f64,
    pub res_lem1: f64,
    pub res_lem2: f64,
    pub res_lem3: f64,
}

impl DiagnosticsRecord {
    pub fn total_energy(&self) -> f64 {
        self.energy_u + self.energy_b
    }

    /// Every entry is finite and the energies are nonnegative.
    pub fn is_valid(&self) -> bool {
        let vals = [
            self.t,
            self.energy_u,
            self.energy_b,
            self.curl_sq_u,
            self.curl_sq_b,
            self.res_energy,
            self.res_cancel,
            self.res_star,
            self.res_bc_u,
            self.res_bc_b,
            self.res_lem1,
            self.res_lem2,
            self.res_lem3,
        ];
        vals.iter()
            .chain(self.h_u.iter())
            .chain(self.h_b.iter())
            .all(|v| v.is_finite())
            && self.energy_u >= 0.0
            && self.energy_b >= 0.0
    }
}

/// Tangential boundary residuals of the flat-boundary identities.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LemmaResiduals {
    /// `curl(B x u) x n`
    pub induction: f64,
    /// `curl((curl u) x u) x n`
    pub vortex: f64,
    /// `curl((curl B) x B) x n`
    pub lorentz: f64,
    /// `curl^3(B x u) x n`
    pub third_curl: f64,
}

impl LemmaResiduals {
    pub fn max(&self) -> f64 {
        self.induction
            .max(self.vortex)
            .max(self.lorentz)
            .max(self.third_curl)
    }
}

/// `|(E1 - E0)/dt + 2(nu ||curl u||^2 + mu ||curl B||^2)|` for two consecutive
/// records, with the dissipation at the interval midpoint when recorded and
/// the endpoint average otherwise.
pub fn energy_law_residual(
    prev: &DiagnosticsRecord,
    next: &DiagnosticsRecord,
    nu: f64,
    mu: f64,
) -> f64 {
    let dt = next.t - prev.t;
    if dt <= 0.0 {
        return 0.0;
    }
    let rate = |cu: f64, cb: f64| 2.0 * (nu * cu + mu * cb);
    let dissipation = match next.mid_curl_sq {
        Some((cu, cb)) => rate(cu, cb),
        None => 0.5 * (rate(prev.curl_sq_u, prev.curl_sq_b) + rate(next.curl_sq_u, next.curl_sq_b)),
    };
    ((next.total_energy() - prev.total_energy()) / dt + dissipation).abs()
}

/// Ordinary least squares on `(ln x, ln y)`; returns `(slope, intercept)`.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::Fit(format!("need at least 2 points, got {}", points.len())));
    }
    if let Some(p) = points
        .iter()
        .find(|(x, y)| !(x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0))
    {
        return Err(Error::Fit(format!("nonpositive or nonfinite point {p:?}")));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Diagnostics evaluator owning the state grid and its 2x refinement.
#[derive(Debug)]
pub struct Diagnostics<T: Real> {
    trunc: Truncation,
    tf: Transformer<T>,
    fine: Transformer<T>,
}

impl<T: Real> Diagnostics<T> {
    pub fn new(trunc: Truncation, grid: GridSpec) -> Result<Self> {
        grid.check_dealiased(trunc)?;
        Ok(Self {
            trunc,
            tf: Transformer::new(grid),
            fine: Transformer::new(grid.refined(2)),
        })
    }

    /// `|(H1, u) + (H2, B)| / (||H1|| ||u|| + ||H2|| ||B||)`.
    pub fn cancellation_residual(
        &self,
        dynamics: &Dynamics<T>,
        u: &SpectralField<T>,
        b: &SpectralField<T>,
    ) -> Result<f64> {
        let (h1, h2) = dynamics.nonlinear(u, b)?;
        let sum = h1.inner(u)?.as_f64() + h2.inner(b)?.as_f64();
        let scale = h1.l2_norm().as_f64() * u.l2_norm().as_f64()
            + h2.l2_norm().as_f64() * b.l2_norm().as_f64();
        Ok(sum.abs() / scale.max(FLOOR))
    }

    /// `|T1 + T2| / (|T1| + |T2|)` with `T1 = (B.grad curl^3 u, curl^3 B)` and
    /// `T2 = (B.grad curl^3 B, curl^3 u)`, by quadrature on the refined grid.
    pub fn star_cancellation_residual(
        &self,
        u: &SpectralField<T>,
        b: &SpectralField<T>,
    ) -> Result<f64> {
        let (t1, t2) = self.star_terms(u, b)?;
        Ok((t1 + t2).abs() / (t1.abs() + t2.abs()).max(FLOOR))
    }

    /// The two advective inner products of the star cancellation.
    pub fn star_terms(&self, u: &SpectralField<T>, b: &SpectralField<T>) -> Result<(f64, f64)> {
        if b.max_abs_coeff() == T::zero() || u.max_abs_coeff() == T::zero() {
            return Ok((0.0, 0.0));
        }
        let tf = &self.fine;
        let a = u.curl_pow(3);
        let c = b.curl_pow(3);
        let bp = tf.to_physical(b)?;
        let n = tf.grid().points();
        let mut s1 = vec![T::zero(); n];
        let mut s2 = vec![T::zero(); n];
        for i in 0..3 {
            let ai = ScalarSeries::component(&a, i);
            let ci = ScalarSeries::component(&c, i);
            let av = tf.scalar_to_physical(&ai)?;
            let cv = tf.scalar_to_physical(&ci)?;
            for j in 0..3 {
                let dav = tf.scalar_to_physical(&ai.derivative(j))?;
                let dcv = tf.scalar_to_physical(&ci.derivative(j))?;
                let bj = &bp.comps[j];
                for p in 0..n {
                    s1[p] = s1[p] + bj[p] * dav[p] * cv[p];
                    s2[p] = s2[p] + bj[p] * dcv[p] * av[p];
                }
            }
        }
        let g = tf.grid();
        Ok((quadrature(g, &s1).as_f64(), quadrature(g, &s2).as_f64()))
    }

    /// Tangential face value of `curl(product)` relative to its interior maximum.
    fn face_ratio(&self, f: &SpectralField<T>, tf: &Transformer<T>) -> Result<f64> {
        let face = f.tangential_face_max(tf.grid().nx.max(tf.grid().ny)).as_f64();
        let vals = tf.to_physical(f)?;
        let interior = vals.comps[..2]
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |acc, &v| acc.max(Float::abs(v).as_f64()));
        Ok(face / interior.max(FLOOR))
    }

    /// Relative face residuals of the four flat-boundary identities.
    pub fn boundary_lemma_residuals(
        &self,
        u: &SpectralField<T>,
        b: &SpectralField<T>,
    ) -> Result<LemmaResiduals> {
        let tf = &self.tf;
        let trunc = self.trunc;
        let up = tf.to_physical(u)?;
        let bp = tf.to_physical(b)?;
        let wp = tf.to_physical(&u.curl())?;
        let jp = tf.to_physical(&b.curl())?;
        let analyse = |g: &crate::transforms::PhysicalField<T>| -> Result<SpectralField<T>> {
            Ok(tf.to_spectral(g, FieldParity::Velocity, trunc)?.dealias())
        };

        let induction = self.face_ratio(&analyse(&bp.cross(&up))?.curl(), tf)?;
        let vortex = self.face_ratio(&analyse(&wp.cross(&up))?.curl(), tf)?;
        let lorentz = self.face_ratio(&analyse(&jp.cross(&bp))?.curl(), tf)?;

        // full product on the refined grid, no truncation of B x u
        let fine = &self.fine;
        let wide = Truncation::new(2 * trunc.k, 2 * trunc.m);
        let prod = fine
            .to_physical(&b.resized(wide))?
            .cross(&fine.to_physical(&u.resized(wide))?);
        let third = fine
            .to_spectral(&prod, FieldParity::Velocity, wide)?
            .curl_pow(3);
        let third_curl = self.face_ratio(&third, fine)?;

        Ok(LemmaResiduals {
            induction,
            vortex,
            lorentz,
            third_curl,
        })
    }

    /// Full record for `state`; `res_energy` is left at zero for the caller.
    pub fn record(
        &self,
        dynamics: &Dynamics<T>,
        state: &SimState<T>,
        mid_curl_sq: Option<(f64, f64)>,
    ) -> Result<DiagnosticsRecord> {
        let (u, b) = (&state.u, &state.b);
        let h = |f: &SpectralField<T>| -> Result<[f64; 3]> {
            Ok([
                f.sobolev_norm(1)?.as_f64(),
                f.sobolev_norm(2)?.as_f64(),
                f.sobolev_norm(3)?.as_f64(),
            ])
        };
        let lemmas = self.boundary_lemma_residuals(u, b)?;
        Ok(DiagnosticsRecord {
            t: state.t,
            energy_u: u.energy().as_f64(),
            energy_b: b.energy().as_f64(),
            h_u: h(u)?,
            h_b: h(b)?,
            curl_sq_u: u.curl_norm_sq(1).as_f64(),
            curl_sq_b: b.curl_norm_sq(1).as_f64(),
            mid_curl_sq,
            res_energy: 0.0,
            res_cancel: self.cancellation_residual(dynamics, u, b)?,
            res_star: self.star_cancellation_residual(u, b)?,
            res_bc_u: u.relative_boundary_residual(),
            res_bc_b: b.relative_boundary_residual(),
            res_lem1: lemmas.induction.max(lemmas.vortex),
            res_lem2: lemmas.lorentz,
            res_lem3: lemmas.third_curl,
        })
    }
}

/// One dissipation value of a convergence study.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub eps: f64,
    /// `sup_t ||Delta(u_eps - u0)||^2 + ||Delta(B_eps - B0)||^2`; NaN if the run failed.
    pub sup_err: f64,
    /// `sup_t sqrt(||u_eps||_3^2 + ||B_eps||_3^2)`; NaN if the run failed.
    pub sup_h3: f64,
    pub failed: bool,
}

/// Outcome of [`convergence_study`].
#[derive(Clone, Debug)]
pub struct StudyResult<T> {
    pub rows: Vec<StudyRow>,
    /// Log-log fit over rows with positive `eps` and error; `None` with fewer than two.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Final state of the ideal reference run.
    pub reference: SimState<T>,
}

impl<T> StudyResult<T> {
    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| r.failed)
    }

    /// Spread `(max - min) / mean` of the `H^3` suprema.
    pub fn h3_spread(&self) -> f64 {
        let v: Vec<f64> = self.rows.iter().map(|r| r.sup_h3).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        let min = v.iter().cloned().fold(f64::MAX, f64::min);
        (max - min) / mean
    }
}

fn h2_error<T: Real>(u: &SpectralField<T>, b: &SpectralField<T>, u0: &SpectralField<T>, b0: &SpectralField<T>) -> f64 {
    (u - u0).laplacian().energy().as_f64() + (b - b0).laplacian().energy().as_f64()
}

fn h3_norm<T: Real>(st: &SimState<T>) -> Result<f64> {
    let a = st.u.sobolev_norm(3)?.as_f64();
    let c = st.b.sobolev_norm(3)?.as_f64();
    Ok((a * a + c * c).sqrt())
}

/// Vanishing-dissipation study: an ideal reference run plus one run per `eps`
/// with `nu = mu = eps`, compared at every sample instant.
///
/// The per-`eps` runs execute in parallel; rows follow `eps_list` order. A run
/// that blows up yields a NaN row with `failed` set.
pub fn convergence_study<T: Real>(
    config: &SolverConfig,
    eps_list: &[f64],
    init: (SpectralField<T>, SpectralField<T>),
) -> Result<StudyResult<T>> {
    if eps_list.is_empty() {
        return Err(Error::Config("eps list is empty".into()));
    }
    if let Some(e) = eps_list.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::Config(format!("eps values must be nonnegative, got {e}")));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("eps values must be strictly decreasing".into()));
    }
    let ideal = config.with_dissipation(0.0, 0.0);
    let n = ideal.n_steps()?;
    let dynamics = Dynamics::<T>::new(config.trunc, config.grid)?;
    let start = initial_state(&ideal, init.clone())?;
    let mut reference = Vec::new();
    let reference_final = dynamics.integrate(&ideal, start, |s, st| {
        if ideal.is_sample_step(s, n) {
            reference.push((st.u.clone(), st.b.clone()));
        }
        Ok(())
    })?;

    let rows: Vec<StudyRow> = eps_list
        .par_iter()
        .map(|&eps| {
            let run = || -> Result<(f64, f64)> {
                let cfg = config.with_dissipation(eps, eps);
                let dynamics = Dynamics::<T>::new(cfg.trunc, cfg.grid)?;
                let start = initial_state(&cfg, init.clone())?;
                let mut idx = 0usize;
                let mut sup_err = 0.0f64;
                let mut sup_h3 = 0.0f64;
                dynamics.integrate(&cfg, start, |s, st| {
                    if cfg.is_sample_step(s, n) {
                        let (u0, b0) = &reference[idx];
                        idx += 1;
                        sup_err = sup_err.max(h2_error(&st.u, &st.b, u0, b0));
                        sup_h3 = sup_h3.max(h3_norm(st)?);
                    }
                    Ok(())
                })?;
                Ok((sup_err, sup_h3))
            };
            match run() {
                Ok((sup_err, sup_h3)) => StudyRow {
                    eps,
                    sup_err,
                    sup_h3,
                    failed: false,
                },
                Err(e) => {
                    log::error!("study run with eps={eps} failed: {e}");
                    StudyRow {
                        eps,
                        sup_err: f64::NAN,
                        sup_h3: f64::NAN,
                        failed: true,
                    }
                }
            }
        })
        .collect();

    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.failed && r.eps > 0.0 && r.sup_err > 0.0 && r.sup_err.is_finite())
        .map(|r| (r.eps, r.sup_err))
        .collect();
    let (slope, intercept) = match fit_loglog(&points) {
        Ok((s, i)) => (Some(s), Some(i)),
        Err(_) => (None, None),
    };
    Ok(StudyResult {
        rows,
        slope,
        intercept,
        reference: reference_final,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, e: f64, cu: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            energy_u: e,
            energy_b: 0.0,
            h_u: [0.0; 3],
            h_b: [0.0; 3],
            curl_sq_u: cu,
            curl_sq_b: 0.0,
            mid_curl_sq: None,
            res_energy: 0.0,
            res_cancel: 0.0,
            res_star: 0.0,
            res_bc_u: 0.0,
            res_bc_b: 0.0,
            res_lem1: 0.0,
            res_lem2: 0.0,
            res_lem3: 0.0,
        }
    }

    #[test]
    fn fit_exact_lines() {
        let pts: Vec<(f64, f64)> = [0.1, 0.03, 0.01, 0.003].iter().map(|&x| (x, 3.0 * x)).collect();
        let (s, i) = fit_loglog(&pts).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        assert!((i - 3f64.ln()).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = [2.0, 5.0, 7.0].iter().map(|&x| (x, x * x)).collect();
        assert!((fit_loglog(&pts).unwrap().0 - 2.0).abs() < 1e-12);
        let (s, _) = fit_loglog(&[(1.0, 2.0), (4.0, 5.0)]).unwrap();
        assert!((s - (5f64.ln() - 2f64.ln()) / 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_loglog(&[(1.0, 1.0)]).is_err());
        assert!(fit_loglog(&[(1.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(fit_loglog(&[(1.0, -1.0), (2.0, 2.0)]).is_err());
        assert!(fit_loglog(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn fit_slope_invariant_under_rescaling() {
        let pts = [(0.1, 0.4), (0.03, 0.2), (0.01, 0.05), (0.003, 0.02)];
        let (s, i) = fit_loglog(&pts).unwrap();
        let scaled: Vec<_> = pts.iter().map(|&(x, y)| (x, 7.5 * y)).collect();
        let (s2, i2) = fit_loglog(&scaled).unwrap();
        assert!((s - s2).abs() < 1e-12);
        assert!((i2 - i - 7.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn energy_law_for_exponential_decay() {
        // E = e^{-2t}, ||curl u||^2 = E so 2 nu ||curl u||^2 = -E' with nu = 1
        let e = |t: f64| (-2.0 * t).exp();
        let a = rec(0.0, e(0.0), e(0.0));
        let mut b = rec(1e-3, e(1e-3), e(1e-3));
        let r = energy_law_residual(&a, &b, 1.0, 0.0);
        assert!(r < 1e-6, "{r}");
        b.mid_curl_sq = Some((e(5e-4), 0.0));
        let r_mid = energy_law_residual(&a, &b, 1.0, 0.0);
        assert!(r_mid < r);
    }
}
