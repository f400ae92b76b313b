//! Spectral <-> collocation transforms.
//!
//! Horizontal directions use FFTs on `x_i = 2 pi i / Nx`, `y_j = 2 pi j / Ny`.
//! The vertical grid is `z_l = l / Nz`, `l = 0..=Nz` (both faces included); the
//! cosine/sine series are evaluated and analysed directly against exact trig
//! tables with trapezoid weights, which is exact for `m < Nz`.
//!
//! Grid values are stored plane by plane: index `(l * Nx + i) * Ny + j`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Float;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fields::{cell_area, SpectralField};
use crate::modes::{FieldParity, Truncation, ZBasis};
use crate::scalar::Real;

/// Collocation grid: `Nx x Ny` horizontal points and `Nz + 1` vertical levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || !nx.is_multiple_of(2) || !ny.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "Nx and Ny must be even and positive, got Nx={nx}, Ny={ny}"
            )));
        }
        if nz == 0 {
            return Err(Error::InvalidGrid("Nz must be positive".into()));
        }
        Ok(Self { nx, ny, nz })
    }

    /// Number of stored values per scalar, `Nx * Ny * (Nz + 1)`.
    pub fn points(&self) -> usize {
        self.nx * self.ny * (self.nz + 1)
    }

    pub fn levels(&self) -> usize {
        self.nz + 1
    }

    /// Smallest grid satisfying the dealiased-product bound for `trunc`.
    pub fn min_dealiased(trunc: Truncation) -> GridSpec {
        let h = (3 * trunc.width()).div_ceil(2);
        let h = h + h % 2;
        let nz = (3 * trunc.m).div_ceil(2) + 1;
        GridSpec {
            nx: h.max(2),
            ny: h.max(2),
            nz,
        }
    }

    /// Every dimension multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> GridSpec {
        GridSpec {
            nx: self.nx * factor,
            ny: self.ny * factor,
            nz: self.nz * factor,
        }
    }

    fn too_small(&self, trunc: Truncation, reason: String) -> Error {
        Error::GridTooSmall {
            nx: self.nx,
            ny: self.ny,
            nz: self.nz,
            k: trunc.k,
            m: trunc.m,
            reason,
        }
    }

    /// Grid can represent and analyse every mode of `trunc` exactly.
    pub fn check_resolves(&self, trunc: Truncation) -> Result<()> {
        if self.nx < trunc.width() || self.ny < trunc.width() {
            return Err(self.too_small(trunc, format!("need Nx, Ny >= 2K+1 = {}", trunc.width())));
        }
        if self.nz < trunc.m + 1 {
            return Err(self.too_small(trunc, format!("need Nz >= M+1 = {}", trunc.m + 1)));
        }
        Ok(())
    }

    /// Grid is fine enough for alias-free quadratic products of `trunc` fields:
    /// `Nx, Ny >= 3(2K+1)/2` (rounded up to even) and `Nz >= 3M/2 + 1`.
    pub fn check_dealiased(&self, trunc: Truncation) -> Result<()> {
        let min = GridSpec::min_dealiased(trunc);
        if self.nx < min.nx || self.ny < min.ny {
            return Err(self.too_small(
                trunc,
                format!("dealiasing bound needs Nx, Ny >= 3(2K+1)/2 = {}", min.nx),
            ));
        }
        if self.nz < min.nz {
            return Err(self.too_small(
                trunc,
                format!("dealiasing bound needs Nz >= 3M/2 + 1 = {}", min.nz),
            ));
        }
        Ok(())
    }
}

/// Boundary face of the channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Face {
    Bottom,
    Top,
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Face::Bottom => f.write_str("z=0"),
            Face::Top => f.write_str("z=1"),
        }
    }
}

/// Grid values of a 3-vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField<T> {
    pub grid: GridSpec,
    pub comps: [Vec<T>; 3],
}

impl<T: Real> PhysicalField<T> {
    pub fn zeros(grid: GridSpec) -> Self {
        let z = vec![T::zero(); grid.points()];
        Self {
            grid,
            comps: [z.clone(), z.clone(), z],
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        (l * self.grid.nx + i) * self.grid.ny + j
    }

    pub fn get(&self, c: usize, i: usize, j: usize, l: usize) -> T {
        self.comps[c][self.index(i, j, l)]
    }

    pub fn max_abs(&self) -> T {
        self.comps
            .iter()
            .flat_map(|v| v.iter())
            .fold(T::zero(), |acc, &v| acc.max(Float::abs(v)))
    }

    /// Pointwise cross product `self x other`.
    pub fn cross(&self, other: &Self) -> Self {
        let [a1, a2, a3] = &self.comps;
        let [b1, b2, b3] = &other.comps;
        let n = self.grid.points();
        let mut out = Self::zeros(self.grid);
        for p in 0..n {
            out.comps[0][p] = a2[p] * b3[p] - a3[p] * b2[p];
            out.comps[1][p] = a3[p] * b1[p] - a1[p] * b3[p];
            out.comps[2][p] = a1[p] * b2[p] - a2[p] * b1[p];
        }
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        for c in 0..3 {
            for (a, b) in self.comps[c].iter_mut().zip(&other.comps[c]) {
                *a = *a + *b;
            }
        }
    }

    /// Trapezoid-in-`z`, rectangle-in-`x,y` quadrature of `self . other` over the cell.
    pub fn quadrature_inner(&self, other: &Self) -> T {
        let q: Vec<T> = (0..self.grid.points())
            .map(|p| (0..3).map(|c| self.comps[c][p] * other.comps[c][p]).sum())
            .collect();
        quadrature(self.grid, &q)
    }
}

/// `int_Omega f dV` from grid values by the rule matching the transforms.
pub fn quadrature<T: Real>(grid: GridSpec, values: &[T]) -> T {
    let plane = grid.nx * grid.ny;
    let mut acc = T::zero();
    for l in 0..=grid.nz {
        let s: T = values[l * plane..(l + 1) * plane].iter().copied().sum();
        let w = if l == 0 || l == grid.nz { T::lit(0.5) } else { T::one() };
        acc = acc + w * s;
    }
    acc * cell_area::<T>() / T::lit((plane * grid.nz) as f64)
}

/// One scalar series `sum c(k1,k2,m) e^{i(k1 x + k2 y)} phi_m(z)`, index `(a, b, m)`
/// with `a = k1 + K`, `b = k2 + K`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarSeries<T> {
    pub trunc: Truncation,
    pub basis: ZBasis,
    pub coeffs: Vec<Complex<T>>,
}

impl<T: Real> ScalarSeries<T> {
    pub fn zero(trunc: Truncation, basis: ZBasis) -> Self {
        Self {
            trunc,
            basis,
            coeffs: vec![Complex::new(T::zero(), T::zero()); trunc.block_count()],
        }
    }

    /// Component `c` of a vector field.
    pub fn component(field: &SpectralField<T>, c: usize) -> Self {
        let n = field.truncation().block_count();
        Self {
            trunc: field.truncation(),
            basis: field.parity().z_basis(c),
            coeffs: field.coeffs()[c * n..(c + 1) * n].to_vec(),
        }
    }

    /// Exact spectral partial derivative along axis 0 (`x`), 1 (`y`) or 2 (`z`).
    pub fn derivative(&self, axis: usize) -> Self {
        let n = self.trunc.width();
        let depth = self.trunc.depth();
        let k = self.trunc.k as i32;
        let mut out = Self::zero(self.trunc, self.basis);
        if axis == 2 {
            out.basis = self.basis.derivative();
        }
        for a in 0..n {
            for b in 0..n {
                for m in 0..depth {
                    let idx = (a * n + b) * depth + m;
                    let v = self.coeffs[idx];
                    out.coeffs[idx] = match axis {
                        0 => v * Complex::new(T::zero(), T::lit((a as i32 - k) as f64)),
                        1 => v * Complex::new(T::zero(), T::lit((b as i32 - k) as f64)),
                        _ => v * self.basis.derivative_factor::<T>(m as u32),
                    };
                }
            }
        }
        if axis == 2 && out.basis == ZBasis::Sin {
            for a in 0..n {
                for b in 0..n {
                    out.coeffs[(a * n + b) * depth] = Complex::new(T::zero(), T::zero());
                }
            }
        }
        out
    }
}

/// Planned transforms and trig tables for one grid.
pub struct Transformer<T: Real> {
    grid: GridSpec,
    fft_x: Arc<dyn Fft<T>>,
    ifft_x: Arc<dyn Fft<T>>,
    fft_y: Arc<dyn Fft<T>>,
    ifft_y: Arc<dyn Fft<T>>,
    /// `cos(m pi l / Nz)`, index `m * (Nz + 1) + l`, `m = 0..=Nz`.
    cos_table: Vec<T>,
    sin_table: Vec<T>,
}

impl<T: Real> fmt::Debug for Transformer<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transformer").field("grid", &self.grid).finish()
    }
}

/// `(cos, sin)(pi r / n)` with exact zeros and unit values at the quarter points.
fn exact_trig(r: usize, n: usize) -> (f64, f64) {
    let r = r % (2 * n);
    let (c, s) = match (2 * r, r) {
        (_, 0) => (1.0, 0.0),
        (_, rr) if rr == n => (-1.0, 0.0),
        (tr, _) if tr == n => (0.0, 1.0),
        (tr, _) if tr == 3 * n => (0.0, -1.0),
        _ => {
            let arg = std::f64::consts::PI * r as f64 / n as f64;
            (arg.cos(), arg.sin())
        }
    };
    (c, s)
}

impl<T: Real> Transformer<T> {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let levels = grid.levels();
        let mut cos_table = Vec::with_capacity(levels * levels);
        let mut sin_table = Vec::with_capacity(levels * levels);
        for m in 0..levels {
            for l in 0..levels {
                let (c, s) = exact_trig(m * l, grid.nz);
                cos_table.push(T::lit(c));
                sin_table.push(T::lit(s));
            }
        }
        Self {
            grid,
            fft_x: planner.plan_fft_forward(grid.nx),
            ifft_x: planner.plan_fft_inverse(grid.nx),
            fft_y: planner.plan_fft_forward(grid.ny),
            ifft_y: planner.plan_fft_inverse(grid.ny),
            cos_table,
            sin_table,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    fn table(&self, basis: ZBasis) -> &[T] {
        match basis {
            ZBasis::Cos => &self.cos_table,
            ZBasis::Sin => &self.sin_table,
        }
    }

    fn scratch(&self) -> Vec<Complex<T>> {
        let len = [&self.fft_x, &self.ifft_x, &self.fft_y, &self.ifft_y]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        vec![Complex::new(T::zero(), T::zero()); len]
    }

    #[inline]
    fn wrap(k: i32, n: usize) -> usize {
        k.rem_euclid(n as i32) as usize
    }

    /// Evaluates one scalar series at every grid node.
    pub fn scalar_to_physical(&self, series: &ScalarSeries<T>) -> Result<Vec<T>> {
        let grid = self.grid;
        grid.check_resolves(series.trunc)?;
        let (nx, ny, levels) = (grid.nx, grid.ny, grid.levels());
        let n = series.trunc.width();
        let depth = series.trunc.depth();
        let k = series.trunc.k as i32;
        let table = self.table(series.basis);
        let zero = Complex::new(T::zero(), T::zero());

        let mut planes = vec![zero; levels * nx * ny];
        for a in 0..n {
            let i = Self::wrap(a as i32 - k, nx);
            for b in 0..n {
                let j = Self::wrap(b as i32 - k, ny);
                let col = &series.coeffs[(a * n + b) * depth..(a * n + b + 1) * depth];
                if col.iter().all(|v| v.re == T::zero() && v.im == T::zero()) {
                    continue;
                }
                for l in 0..levels {
                    let mut acc = zero;
                    for (m, v) in col.iter().enumerate() {
                        acc = acc + v * table[m * levels + l];
                    }
                    planes[(l * nx + i) * ny + j] = acc;
                }
            }
        }

        let mut out = vec![T::zero(); grid.points()];
        let mut transposed = vec![zero; nx * ny];
        let mut scratch = self.scratch();
        for l in 0..levels {
            let plane = &mut planes[l * nx * ny..(l + 1) * nx * ny];
            for a in 0..n {
                let i = Self::wrap(a as i32 - k, nx);
                self.ifft_y
                    .process_with_scratch(&mut plane[i * ny..(i + 1) * ny], &mut scratch);
            }
            for i in 0..nx {
                for j in 0..ny {
                    transposed[j * nx + i] = plane[i * ny + j];
                }
            }
            // all ny rows in one call
            self.ifft_x.process_with_scratch(&mut transposed, &mut scratch);
            let dst = &mut out[l * nx * ny..(l + 1) * nx * ny];
            for i in 0..nx {
                for j in 0..ny {
                    dst[i * ny + j] = transposed[j * nx + i].re;
                }
            }
        }
        Ok(out)
    }

    /// Analyses grid values into a series of the given vertical family.
    ///
    /// Exact inverse of [`Self::scalar_to_physical`] on the truncated space;
    /// the result is Hermitian-symmetrized.
    pub fn scalar_to_spectral(
        &self,
        values: &[T],
        basis: ZBasis,
        trunc: Truncation,
    ) -> Result<ScalarSeries<T>> {
        let grid = self.grid;
        grid.check_resolves(trunc)?;
        if values.len() != grid.points() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} grid values, got {}",
                grid.points(),
                values.len()
            )));
        }
        let (nx, ny, nz, levels) = (grid.nx, grid.ny, grid.nz, grid.levels());
        let n = trunc.width();
        let depth = trunc.depth();
        let k = trunc.k as i32;
        let zero = Complex::new(T::zero(), T::zero());
        let scale = T::one() / T::lit((nx * ny) as f64);

        // horizontal analysis, hat index (l, a, b)
        let mut hat = vec![zero; levels * n * n];
        let mut transposed = vec![zero; nx * ny];
        let mut row = vec![zero; ny];
        let mut scratch = self.scratch();
        for l in 0..levels {
            let src = &values[l * nx * ny..(l + 1) * nx * ny];
            for i in 0..nx {
                for j in 0..ny {
                    transposed[j * nx + i] = Complex::new(src[i * ny + j], T::zero());
                }
            }
            self.fft_x.process_with_scratch(&mut transposed, &mut scratch);
            for a in 0..n {
                let i = Self::wrap(a as i32 - k, nx);
                for j in 0..ny {
                    row[j] = transposed[j * nx + i];
                }
                self.fft_y.process_with_scratch(&mut row, &mut scratch);
                for b in 0..n {
                    let j = Self::wrap(b as i32 - k, ny);
                    hat[(l * n + a) * n + b] = row[j] * scale;
                }
            }
        }

        // vertical analysis with trapezoid weights
        let table = self.table(basis);
        let inv_nz = T::one() / T::lit(nz as f64);
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        let mut series = ScalarSeries::zero(trunc, basis);
        for a in 0..n {
            for b in 0..n {
                for m in 0..depth {
                    let norm = match basis {
                        ZBasis::Cos if m == 0 || m == nz => inv_nz,
                        ZBasis::Sin if m == 0 => continue,
                        _ => two * inv_nz,
                    };
                    let mut acc = zero;
                    for l in 0..levels {
                        let w = if l == 0 || l == nz { half } else { T::one() };
                        acc = acc + hat[(l * n + a) * n + b] * (w * table[m * levels + l]);
                    }
                    series.coeffs[(a * n + b) * depth + m] = acc * norm;
                }
            }
        }

        // Hermitian symmetrization
        let raw = series.coeffs.clone();
        for a in 0..n {
            for b in 0..n {
                let (ca, cb) = (n - 1 - a, n - 1 - b);
                for m in 0..depth {
                    let v = raw[(a * n + b) * depth + m];
                    let p = raw[(ca * n + cb) * depth + m];
                    series.coeffs[(a * n + b) * depth + m] = (v + p.conj()) * half;
                }
            }
        }
        Ok(series)
    }

    /// Pointwise evaluation of a vector field on the grid.
    pub fn to_physical(&self, field: &SpectralField<T>) -> Result<PhysicalField<T>> {
        self.grid.check_resolves(field.truncation())?;
        let c0 = self.scalar_to_physical(&ScalarSeries::component(field, 0))?;
        let c1 = self.scalar_to_physical(&ScalarSeries::component(field, 1))?;
        let c2 = self.scalar_to_physical(&ScalarSeries::component(field, 2))?;
        Ok(PhysicalField {
            grid: self.grid,
            comps: [c0, c1, c2],
        })
    }

    /// Checks that sine components vanish on both faces, up to
    /// [`Real::identity_tol`] relative to the component's largest magnitude
    /// (floored at 1).
    pub fn check_boundary(&self, values: &PhysicalField<T>, parity: FieldParity) -> Result<()> {
        let grid = self.grid;
        let plane = grid.nx * grid.ny;
        for c in 0..3 {
            if parity.z_basis(c) != ZBasis::Sin {
                continue;
            }
            let comp = &values.comps[c];
            let scale = comp
                .iter()
                .fold(T::one(), |acc, &v| acc.max(Float::abs(v)))
                .as_f64();
            for (face, l) in [(Face::Bottom, 0), (Face::Top, grid.nz)] {
                let worst = comp[l * plane..(l + 1) * plane]
                    .iter()
                    .fold(0.0f64, |acc, &v| acc.max(Float::abs(v).as_f64()));
                if worst > T::identity_tol() * scale {
                    return Err(Error::BoundaryInconsistent {
                        component: c + 1,
                        face,
                        value: worst,
                    });
                }
            }
        }
        Ok(())
    }

    /// Analyses grid values of a vector field with the given parity.
    pub fn to_spectral(
        &self,
        values: &PhysicalField<T>,
        parity: FieldParity,
        trunc: Truncation,
    ) -> Result<SpectralField<T>> {
        if values.grid != self.grid {
            return Err(Error::ShapeMismatch(format!(
                "values on {:?}, transformer on {:?}",
                values.grid, self.grid
            )));
        }
        self.grid.check_resolves(trunc)?;
        self.check_boundary(values, parity)?;
        let mut coeffs = Vec::with_capacity(3 * trunc.block_count());
        for c in 0..3 {
            let s = self.scalar_to_spectral(&values.comps[c], parity.z_basis(c), trunc)?;
            coeffs.extend(s.coeffs);
        }
        SpectralField::from_coeffs(parity, trunc, coeffs)
    }
}

/// Convenience wrapper planning a [`Transformer`] for a single call.
pub fn to_physical<T: Real>(field: &SpectralField<T>, grid: GridSpec) -> Result<PhysicalField<T>> {
    Transformer::new(grid).to_physical(field)
}

/// Convenience wrapper planning a [`Transformer`] for a single call.
pub fn to_spectral<T: Real>(
    values: &PhysicalField<T>,
    parity: FieldParity,
    k: usize,
    m: usize,
) -> Result<SpectralField<T>> {
    Transformer::new(values.grid).to_spectral(values, parity, Truncation::new(k, m))
}

/// 2/3-rule truncation (see [`SpectralField::dealias`]).
pub fn dealias<T: Real>(field: &SpectralField<T>) -> SpectralField<T> {
    field.dealias()
}
