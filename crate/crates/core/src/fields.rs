//! The [`SpectralField`] value type.
//!
//! A field stores complex coefficients for three components indexed by
//! `(component, k1, k2, m)`. The parity decides which vertical family each
//! component uses (see [`crate::modes`]), so boundary conditions hold by
//! construction. Real-valuedness is kept as Hermitian symmetry
//! `f(-k1,-k2,m) = conj f(k1,k2,m)`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::modes::{
    block_divergence, curl_block, divergence_vector, eigenvalue, leray_project_block,
    vertical_wavenumber, FieldParity, ModeIndex, Truncation, ZBasis,
};
use crate::scalar::Real;

/// Spectral coefficients of a real, parity-tagged 3-vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<T> {
    parity: FieldParity,
    trunc: Truncation,
    coeffs: Vec<Complex<T>>,
}

/// Horizontal area of the periodic cell, `(2 pi)^2`.
pub fn cell_area<T: Real>() -> T {
    let two_pi = T::TAU();
    two_pi * two_pi
}

impl<T: Real> SpectralField<T> {
    pub fn zero(parity: FieldParity, trunc: Truncation) -> Self {
        Self {
            parity,
            trunc,
            coeffs: vec![Complex::new(T::zero(), T::zero()); 3 * trunc.block_count()],
        }
    }

    /// Wraps raw coefficients in `(component, k1, k2, m)` lexicographic order.
    pub fn from_coeffs(
        parity: FieldParity,
        trunc: Truncation,
        coeffs: Vec<Complex<T>>,
    ) -> Result<Self> {
        if coeffs.len() != 3 * trunc.block_count() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients for K={}, M={}, got {}",
                3 * trunc.block_count(),
                trunc.k,
                trunc.m,
                coeffs.len()
            )));
        }
        Ok(Self {
            parity,
            trunc,
            coeffs,
        })
    }

    pub fn parity(&self) -> FieldParity {
        self.parity
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    #[inline]
    fn index(&self, c: usize, mode: ModeIndex) -> usize {
        let n = self.trunc.width();
        let k = self.trunc.k as i32;
        let a = (mode.k1 + k) as usize;
        let b = (mode.k2 + k) as usize;
        ((c * n + a) * n + b) * self.trunc.depth() + mode.m as usize
    }

    /// Coefficient of component `c` (0-based) at `mode`.
    pub fn get(&self, c: usize, mode: ModeIndex) -> Complex<T> {
        self.coeffs[self.index(c, mode)]
    }

    pub fn block(&self, mode: ModeIndex) -> [Complex<T>; 3] {
        [self.get(0, mode), self.get(1, mode), self.get(2, mode)]
    }

    pub(crate) fn set(&mut self, c: usize, mode: ModeIndex, value: Complex<T>) {
        let i = self.index(c, mode);
        self.coeffs[i] = value;
    }

    pub(crate) fn set_block(&mut self, mode: ModeIndex, block: [Complex<T>; 3]) {
        for (c, v) in block.into_iter().enumerate() {
            self.set(c, mode, v);
        }
    }

    /// Copy with one coefficient replaced. No invariant is re-established.
    pub fn with_coeff(&self, c: usize, mode: ModeIndex, value: Complex<T>) -> Self {
        let mut out = self.clone();
        out.set(c, mode, value);
        out
    }

    /// Copy with one block and its Hermitian partner replaced.
    pub fn with_block(&self, mode: ModeIndex, block: [Complex<T>; 3]) -> Self {
        let mut out = self.clone();
        out.set_block(mode, block);
        out.set_block(mode.conjugate(), block.map(|v| v.conj()));
        if mode.k1 == 0 && mode.k2 == 0 {
            out.set_block(mode, block.map(|v| Complex::new(v.re, T::zero())));
        }
        out
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> {
        let k = self.trunc.k as i32;
        let m = self.trunc.m as u32;
        (-k..=k).flat_map(move |k1| {
            (-k..=k).flat_map(move |k2| (0..=m).map(move |mm| ModeIndex::new(k1, k2, mm)))
        })
    }

    /// Applies a per-block map; the result keeps this field's parity.
    pub fn map_blocks<F>(&self, f: F) -> Self
    where
        F: Fn(ModeIndex, [Complex<T>; 3]) -> [Complex<T>; 3],
    {
        self.map_blocks_into(self.parity, f)
    }

    fn map_blocks_into<F>(&self, parity: FieldParity, f: F) -> Self
    where
        F: Fn(ModeIndex, [Complex<T>; 3]) -> [Complex<T>; 3],
    {
        let mut out = Self::zero(parity, self.trunc);
        for mode in self.modes() {
            out.set_block(mode, f(mode, self.block(mode)));
        }
        out
    }

    /// Multiplies every block by a real mode-dependent factor.
    pub fn scale_modes<F: Fn(ModeIndex) -> T>(&self, f: F) -> Self {
        let depth = self.trunc.depth();
        let n = self.trunc.width();
        let k = self.trunc.k as i32;
        let per_comp = self.trunc.block_count();
        let mut factors = Vec::with_capacity(per_comp);
        for a in 0..n {
            for b in 0..n {
                for m in 0..depth {
                    factors.push(f(ModeIndex::new(a as i32 - k, b as i32 - k, m as u32)));
                }
            }
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, v)| v * factors[i % per_comp])
            .collect();
        Self {
            parity: self.parity,
            trunc: self.trunc,
            coeffs,
        }
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self {
            parity: self.parity,
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|v| v * alpha).collect(),
        }
    }

    /// `alpha * self + beta * other`.
    pub fn lin_comb(&self, alpha: T, other: &Self, beta: T) -> Self {
        self.assert_compatible(other);
        Self {
            parity: self.parity,
            trunc: self.trunc,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a * alpha + b * beta)
                .collect(),
        }
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.parity != other.parity {
            return Err(Error::ParityMismatch(format!(
                "{} field combined with {} field",
                self.parity, other.parity
            )));
        }
        if self.trunc != other.trunc {
            return Err(Error::ShapeMismatch(format!(
                "truncation (K={}, M={}) vs (K={}, M={})",
                self.trunc.k, self.trunc.m, other.trunc.k, other.trunc.m
            )));
        }
        Ok(())
    }

    fn assert_compatible(&self, other: &Self) {
        if let Err(e) = self.check_compatible(other) {
            panic!("incompatible spectral fields: {e}");
        }
    }

    /// `curl f`, with the opposite parity.
    pub fn curl(&self) -> Self {
        let parity = self.parity;
        self.map_blocks_into(parity.flipped(), |mode, b| curl_block(b, mode, parity))
    }

    /// `curl^s f`.
    pub fn curl_pow(&self, s: u32) -> Self {
        (0..s).fold(self.clone(), |f, _| f.curl())
    }

    pub fn laplacian(&self) -> Self {
        crate::modes::laplacian_apply(self)
    }

    /// Per-block Leray projection onto divergence-free fields of this parity.
    pub fn leray_project(&self) -> Self {
        let parity = self.parity;
        self.map_blocks(|mode, b| leray_project_block(b, mode, parity))
    }

    /// 2/3-rule truncation: zero every block outside `trunc.dealiased()`.
    pub fn dealias(&self) -> Self {
        let keep = self.trunc.dealiased();
        self.scale_modes(|mode| {
            if keep.contains(mode) {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    pub fn is_dealiased(&self) -> bool {
        let keep = self.trunc.dealiased();
        self.modes()
            .filter(|&mode| !keep.contains(mode))
            .all(|mode| self.block(mode).iter().all(|v| v.re == T::zero() && v.im == T::zero()))
    }

    /// Zeroes the slots whose basis function is `sin(0 * pi z) = 0`.
    pub fn with_parity_zeros(&self) -> Self {
        let parity = self.parity;
        self.map_blocks(|mode, mut b| {
            for (c, v) in b.iter_mut().enumerate() {
                if parity.is_forced_zero(c, mode.m) {
                    *v = Complex::new(T::zero(), T::zero());
                }
            }
            b
        })
    }

    /// Averages each coefficient with the conjugate of its partner.
    pub fn hermitian_symmetrize(&self) -> Self {
        let half = T::lit(0.5);
        let mut out = self.clone();
        for c in 0..3 {
            for mode in self.modes() {
                let v = (self.get(c, mode) + self.get(c, mode.conjugate()).conj()) * half;
                out.set(c, mode, v);
            }
        }
        out
    }

    /// `max |f(k) - conj f(-k)|`.
    pub fn hermitian_residual(&self) -> T {
        let mut worst = T::zero();
        for c in 0..3 {
            for mode in self.modes() {
                let r = (self.get(c, mode) - self.get(c, mode.conjugate()).conj()).norm();
                worst = worst.max(r);
            }
        }
        worst
    }

    /// `max |d . f| / max(|d| |f|)` over all blocks.
    pub fn divergence_residual(&self) -> f64 {
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for mode in self.modes() {
            let block = self.block(mode);
            let d = divergence_vector::<T>(mode, self.parity);
            let dn = d.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt();
            let bn = block.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt();
            num = num.max(block_divergence(&block, mode, self.parity).norm().as_f64());
            den = den.max((dn * bn).as_f64());
        }
        num / den.max(1e-30)
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, v| acc.max(v.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `L^2(Omega)` inner product computed from coefficients.
    pub fn inner(&self, other: &Self) -> Result<T> {
        self.check_compatible(other)?;
        Ok(self.weighted_sum(|_, a, b| (a * b.conj()).re, other))
    }

    fn weighted_sum<F>(&self, f: F, other: &Self) -> T
    where
        F: Fn(ModeIndex, Complex<T>, Complex<T>) -> T,
    {
        let mut acc = T::zero();
        for c in 0..3 {
            let basis = self.parity.z_basis(c);
            for mode in self.modes() {
                let w = basis.weight::<T>(mode.m);
                if w == T::zero() {
                    continue;
                }
                acc = acc + w * f(mode, self.get(c, mode), other.get(c, mode));
            }
        }
        acc * cell_area::<T>()
    }

    /// `||f||^2`, the quantity whose sum over `u` and `B` is the total energy.
    pub fn energy(&self) -> T {
        self.weighted_sum(|_, a, _| a.norm_sqr(), self)
    }

    pub fn l2_norm(&self) -> T {
        self.energy().sqrt()
    }

    /// `||curl^s f||^2 = sum lambda^s |f|^2 w` for divergence-free fields.
    pub fn curl_norm_sq(&self, s: u32) -> T {
        self.weighted_sum(|mode, a, _| eigenvalue::<T>(mode).powi(s as i32) * a.norm_sqr(), self)
    }

    /// `||f||_s = sqrt(||f||^2 + ||curl^s f||^2)`; `s = 0` is the plain `L^2` norm.
    pub fn sobolev_norm(&self, s: u32) -> Result<T> {
        match s {
            0 => Ok(self.l2_norm()),
            1..=3 => Ok((self.energy() + self.curl_norm_sq(s)).sqrt()),
            _ => Err(Error::SobolevIndex(s)),
        }
    }

    /// Random real field with the spectrum shape `(1 + lambda)^-decay_power`.
    ///
    /// Each block gets standard normal real and imaginary parts drawn from a
    /// ChaCha8 stream in `(k1, k2, m, component)` order; the result is
    /// Hermitian-symmetrized and has its `sin(0)` slots zeroed, but is not
    /// projected.
    pub fn random_raw(seed: u64, parity: FieldParity, trunc: Truncation, decay_power: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut raw = Self::zero(parity, trunc);
        let modes: Vec<ModeIndex> = raw.modes().collect();
        for &mode in &modes {
            let lam = eigenvalue::<f64>(mode);
            let amp = (1.0 + lam).powf(-decay_power);
            for c in 0..3 {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                raw.set(c, mode, Complex::new(T::lit(re * amp), T::lit(im * amp)));
            }
        }
        let mut sym = raw.clone();
        for &mode in &modes {
            let upper = mode.k1 > 0 || (mode.k1 == 0 && mode.k2 > 0);
            let b = raw.block(mode);
            if upper {
                sym.set_block(mode.conjugate(), b.map(|v| v.conj()));
            } else if mode.k1 == 0 && mode.k2 == 0 {
                sym.set_block(mode, b.map(|v| Complex::new(v.re, T::zero())));
            }
        }
        sym.with_parity_zeros()
    }

    /// Smooth random divergence-free field with unit `L^2` norm: [`Self::random_raw`]
    /// projected, dealiased and normalized.
    pub fn random_divfree(
        seed: u64,
        parity: FieldParity,
        trunc: Truncation,
        decay_power: f64,
    ) -> Self {
        let f = Self::random_raw(seed, parity, trunc, decay_power)
            .leray_project()
            .dealias();
        let norm = f.l2_norm();
        if norm > T::zero() {
            f.scaled(T::one() / norm)
        } else {
            f
        }
    }

    /// `(cos pi z, 0, 0)`: the Navier-slip shear flow.
    pub fn shear_velocity(trunc: Truncation) -> Self {
        let one = Complex::new(T::one(), T::zero());
        Self::zero(FieldParity::Velocity, trunc).with_coeff(0, ModeIndex::new(0, 0, 1), one)
    }

    /// `(b sin pi z, 0, 0)`: a decaying insulating magnetic mode.
    pub fn magnetic_sine(trunc: Truncation, b: T) -> Self {
        let v = Complex::new(b, T::zero());
        Self::zero(FieldParity::Magnetic, trunc).with_coeff(0, ModeIndex::new(0, 0, 1), v)
    }

    /// `(0, 0, b)`: the uniform vertical magnetic field.
    pub fn uniform_vertical(trunc: Truncation, b: T) -> Self {
        let v = Complex::new(b, T::zero());
        Self::zero(FieldParity::Magnetic, trunc).with_coeff(2, ModeIndex::new(0, 0, 0), v)
    }

    pub fn cast<U: Real>(&self) -> SpectralField<U> {
        SpectralField {
            parity: self.parity,
            trunc: self.trunc,
            coeffs: self
                .coeffs
                .iter()
                .map(|v| Complex::new(U::lit(v.re.as_f64()), U::lit(v.im.as_f64())))
                .collect(),
        }
    }

    /// Per-(k1, k2) values of `d^order/dz^order` of component `c` at height `z`,
    /// summed directly over `m`.
    ///
    /// A nonzero entry in a `sin(0)` slot is read as the constant it would carry
    /// as `cos(0)`, so a corrupted slot shows up as a face violation.
    fn face_column_sums(&self, c: usize, z: T, derivative: bool) -> Vec<Complex<T>> {
        let n = self.trunc.width();
        let k = self.trunc.k as i32;
        let basis = self.parity.z_basis(c);
        let mut out = vec![Complex::new(T::zero(), T::zero()); n * n];
        for a in 0..n {
            for b in 0..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                for m in 0..=self.trunc.m as u32 {
                    let v = self.get(c, ModeIndex::new(a as i32 - k, b as i32 - k, m));
                    let kappa = vertical_wavenumber::<T>(m);
                    let phase = kappa * z;
                    let basis_value = match (basis, derivative) {
                        (ZBasis::Sin, false) if m == 0 => T::one(),
                        (ZBasis::Sin, false) => phase.sin(),
                        (ZBasis::Cos, false) => phase.cos(),
                        (ZBasis::Cos, true) => -kappa * phase.sin(),
                        (ZBasis::Sin, true) => kappa * phase.cos(),
                    };
                    acc = acc + v * basis_value;
                }
                out[a * n + b] = acc;
            }
        }
        out
    }

    /// Max over both faces and an `ns x ns` surface grid of the boundary
    /// quantities that must vanish: `|d3 f1|, |d3 f2|, |f3|` for velocity parity,
    /// `|f1|, |f2|, |d3 f3|` for magnetic parity.
    pub fn boundary_trace_residual_on(&self, ns: usize) -> T {
        let checks: [(usize, bool); 3] = match self.parity {
            FieldParity::Velocity => [(0, true), (1, true), (2, false)],
            FieldParity::Magnetic => [(0, false), (1, false), (2, true)],
        };
        let mut worst = T::zero();
        for z in [T::zero(), T::one()] {
            for &(c, deriv) in &checks {
                let cols = self.face_column_sums(c, z, deriv);
                let vals = surface_evaluate(&cols, self.trunc.k, ns);
                for v in vals {
                    worst = worst.max(Float::abs(v));
                }
            }
        }
        worst
    }

    /// [`Self::boundary_trace_residual_on`] with a surface grid of `4K + 4` points.
    pub fn boundary_trace_residual(&self) -> T {
        self.boundary_trace_residual_on(4 * self.trunc.k + 4)
    }

    /// Max over both faces of `|f1|, |f2|` (the components tangential to the faces).
    pub fn tangential_face_max(&self, ns: usize) -> T {
        let mut worst = T::zero();
        for z in [T::zero(), T::one()] {
            for c in 0..2 {
                let cols = self.face_column_sums(c, z, false);
                for v in surface_evaluate(&cols, self.trunc.k, ns) {
                    worst = worst.max(Float::abs(v));
                }
            }
        }
        worst
    }

    /// Copy on another truncation: zero-padded or cut off.
    pub fn resized(&self, trunc: Truncation) -> Self {
        let mut out = Self::zero(self.parity, trunc);
        for mode in self.modes().filter(|&m| trunc.contains(m)) {
            out.set_block(mode, self.block(mode));
        }
        out
    }

    /// Upper bound for the magnitude of any first-derivative-level boundary
    /// quantity: `max_c sum |f_c| max(1, m pi)`.
    pub fn boundary_trace_scale(&self) -> T {
        let mut worst = T::zero();
        for c in 0..3 {
            let mut acc = T::zero();
            for mode in self.modes() {
                let kappa = vertical_wavenumber::<T>(mode.m).max(T::one());
                acc = acc + self.get(c, mode).norm() * kappa;
            }
            worst = worst.max(acc);
        }
        worst
    }

    /// Boundary residual divided by [`Self::boundary_trace_scale`].
    pub fn relative_boundary_residual(&self) -> f64 {
        self.boundary_trace_residual().as_f64() / self.boundary_trace_scale().as_f64().max(1e-30)
    }
}

/// Real values on an `ns x ns` grid of `sum_{k1,k2} g(k1,k2) e^{i(k1 x + k2 y)}`.
pub(crate) fn surface_evaluate<T: Real>(cols: &[Complex<T>], k: usize, ns: usize) -> Vec<T> {
    let n = 2 * k + 1;
    let ki = k as i32;
    let step = T::TAU() / T::lit(ns as f64);
    let phase = |kk: i32, i: usize| {
        let arg = step * T::lit(((kk as i64 * i as i64).rem_euclid(ns as i64)) as f64);
        Complex::new(arg.cos(), arg.sin())
    };
    // first sum over k2 for every k1 and y_j
    let mut partial = vec![Complex::new(T::zero(), T::zero()); n * ns];
    for a in 0..n {
        for j in 0..ns {
            let mut acc = Complex::new(T::zero(), T::zero());
            for b in 0..n {
                acc = acc + cols[a * n + b] * phase(b as i32 - ki, j);
            }
            partial[a * ns + j] = acc;
        }
    }
    let mut out = vec![T::zero(); ns * ns];
    for i in 0..ns {
        for j in 0..ns {
            let mut acc = Complex::new(T::zero(), T::zero());
            for a in 0..n {
                acc = acc + partial[a * ns + j] * phase(a as i32 - ki, i);
            }
            out[i * ns + j] = acc.re;
        }
    }
    out
}

impl<T: Real> Add for &SpectralField<T> {
    type Output = SpectralField<T>;
    fn add(self, rhs: Self) -> SpectralField<T> {
        self.lin_comb(T::one(), rhs, T::one())
    }
}

impl<T: Real> Sub for &SpectralField<T> {
    type Output = SpectralField<T>;
    fn sub(self, rhs: Self) -> SpectralField<T> {
        self.lin_comb(T::one(), rhs, -T::one())
    }
}

impl<T: Real> Mul<T> for &SpectralField<T> {
    type Output = SpectralField<T>;
    fn mul(self, rhs: T) -> SpectralField<T> {
        self.scaled(rhs)
    }
}

impl<T: Real> Neg for &SpectralField<T> {
    type Output = SpectralField<T>;
    fn neg(self) -> SpectralField<T> {
        self.scaled(-T::one())
    }
}
