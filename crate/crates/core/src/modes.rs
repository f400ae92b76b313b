//! Spectral modes of the channel `T^2 x (0,1)` and the exact per-block
//! linear operators acting on them.
//!
//! Horizontal directions are `2*pi`-periodic with integer wavenumbers. In `z`
//! every scalar component is a cosine or sine series in `m*pi*z`; which one is
//! fixed by the field parity and encodes the boundary conditions:
//!
//! | parity   | `f1`  | `f2`  | `f3`  |
//! |----------|-------|-------|-------|
//! | velocity | cos   | cos   | sin   |
//! | magnetic | sin   | sin   | cos   |

use std::fmt;

use num_complex::Complex;

use crate::fields::SpectralField;
use crate::scalar::Real;

/// One spectral block `e^{i(k1 x + k2 y)} * {cos,sin}(m pi z)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub k1: i32,
    pub k2: i32,
    pub m: u32,
}

impl ModeIndex {
    pub const fn new(k1: i32, k2: i32, m: u32) -> Self {
        Self { k1, k2, m }
    }

    /// The Hermitian partner `(-k1, -k2, m)`.
    pub const fn conjugate(self) -> Self {
        Self::new(-self.k1, -self.k2, self.m)
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.k1, self.k2, self.m)
    }
}

/// Vertical basis family of a scalar component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ZBasis {
    Cos,
    Sin,
}

impl ZBasis {
    /// Family obtained after one `d/dz`.
    pub fn derivative(self) -> ZBasis {
        match self {
            ZBasis::Cos => ZBasis::Sin,
            ZBasis::Sin => ZBasis::Cos,
        }
    }

    /// Signed factor picked up by `d/dz` at vertical index `m`:
    /// `cos -> -m pi sin`, `sin -> +m pi cos`.
    pub fn derivative_factor<T: Real>(self, m: u32) -> T {
        let kappa = vertical_wavenumber::<T>(m);
        match self {
            ZBasis::Cos => -kappa,
            ZBasis::Sin => kappa,
        }
    }

    /// `L^2(0,1)` weight of the basis function of index `m`.
    pub fn weight<T: Real>(self, m: u32) -> T {
        match (self, m) {
            (ZBasis::Cos, 0) => T::one(),
            (ZBasis::Sin, 0) => T::zero(),
            _ => T::lit(0.5),
        }
    }
}

/// Parity tag of a vector field, i.e. which boundary conditions it carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldParity {
    /// Navier-slip: `d3 u1 = d3 u2 = 0`, `u3 = 0` on the faces.
    Velocity,
    /// Insulating: `B1 = B2 = 0` on the faces.
    Magnetic,
}

impl FieldParity {
    pub fn flipped(self) -> FieldParity {
        match self {
            FieldParity::Velocity => FieldParity::Magnetic,
            FieldParity::Magnetic => FieldParity::Velocity,
        }
    }

    /// Vertical family of component `c` (0-based).
    pub fn z_basis(self, c: usize) -> ZBasis {
        match (self, c) {
            (FieldParity::Velocity, 2) | (FieldParity::Magnetic, 0 | 1) => ZBasis::Sin,
            _ => ZBasis::Cos,
        }
    }

    /// `true` when slot `(c, m)` is forced to zero because `sin(0) = 0`.
    pub fn is_forced_zero(self, c: usize, m: u32) -> bool {
        m == 0 && self.z_basis(c) == ZBasis::Sin
    }
}

impl fmt::Display for FieldParity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldParity::Velocity => f.write_str("velocity"),
            FieldParity::Magnetic => f.write_str("magnetic"),
        }
    }
}

/// Rectangular truncation `|k1|, |k2| <= k`, `m <= m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Truncation {
    pub k: usize,
    pub m: usize,
}

impl Truncation {
    pub const fn new(k: usize, m: usize) -> Self {
        Self { k, m }
    }

    /// Number of horizontal wavenumbers per direction, `2K + 1`.
    pub const fn width(&self) -> usize {
        2 * self.k + 1
    }

    pub const fn depth(&self) -> usize {
        self.m + 1
    }

    /// Number of blocks, `(2K+1)^2 (M+1)`.
    pub const fn block_count(&self) -> usize {
        self.width() * self.width() * self.depth()
    }

    /// Largest retained indices under the 2/3 rule.
    pub const fn dealiased(&self) -> Truncation {
        Truncation::new(2 * self.k / 3, 2 * self.m / 3)
    }

    pub fn contains(&self, mode: ModeIndex) -> bool {
        mode.k1.unsigned_abs() as usize <= self.k
            && mode.k2.unsigned_abs() as usize <= self.k
            && mode.m as usize <= self.m
    }
}

/// All blocks of the truncation in lexicographic `(k1, k2, m)` order.
pub fn enumerate_modes(k: usize, m: usize) -> Vec<ModeIndex> {
    let k = k as i32;
    let mut modes = Vec::with_capacity(Truncation::new(k as usize, m).block_count());
    for k1 in -k..=k {
        for k2 in -k..=k {
            for mm in 0..=m as u32 {
                modes.push(ModeIndex::new(k1, k2, mm));
            }
        }
    }
    modes
}

#[inline]
pub fn vertical_wavenumber<T: Real>(m: u32) -> T {
    T::lit(m as f64) * T::PI()
}

/// `k1^2 + k2^2 + (m pi)^2`, the eigenvalue of `-Delta` on the block.
pub fn eigenvalue<T: Real>(mode: ModeIndex) -> T {
    let kappa = vertical_wavenumber::<T>(mode.m);
    let h = T::lit((mode.k1 * mode.k1 + mode.k2 * mode.k2) as f64);
    h + kappa * kappa
}

/// Vector `d` with `div f = 0  <=>  d . f_hat = 0` on the block.
pub fn divergence_vector<T: Real>(mode: ModeIndex, parity: FieldParity) -> [Complex<T>; 3] {
    let kappa = vertical_wavenumber::<T>(mode.m);
    let d3 = match parity {
        FieldParity::Velocity => kappa,
        FieldParity::Magnetic => -kappa,
    };
    [
        Complex::new(T::zero(), T::lit(mode.k1 as f64)),
        Complex::new(T::zero(), T::lit(mode.k2 as f64)),
        Complex::new(d3, T::zero()),
    ]
}

/// `d . f_hat` (bilinear, no conjugation).
pub fn block_divergence<T: Real>(
    block: &[Complex<T>; 3],
    mode: ModeIndex,
    parity: FieldParity,
) -> Complex<T> {
    let d = divergence_vector::<T>(mode, parity);
    d[0] * block[0] + d[1] * block[1] + d[2] * block[2]
}

/// Orthogonal projection of one block onto `{v : d . v = 0}`.
///
/// The removed part is parallel to `conj(d)`, which is the coefficient vector of
/// a gradient `grad p` with `p` in the pressure basis of the parity.
pub fn leray_project_block<T: Real>(
    block: [Complex<T>; 3],
    mode: ModeIndex,
    parity: FieldParity,
) -> [Complex<T>; 3] {
    let d = divergence_vector::<T>(mode, parity);
    let d2 = d[0].norm_sqr() + d[1].norm_sqr() + d[2].norm_sqr();
    if d2 == T::zero() {
        return block;
    }
    let alpha = (d[0] * block[0] + d[1] * block[1] + d[2] * block[2]) / d2;
    [
        block[0] - alpha * d[0].conj(),
        block[1] - alpha * d[1].conj(),
        block[2] - alpha * d[2].conj(),
    ]
}

/// Coefficient action of `curl` on one block; the result has the opposite parity.
pub fn curl_block<T: Real>(
    block: [Complex<T>; 3],
    mode: ModeIndex,
    parity: FieldParity,
) -> [Complex<T>; 3] {
    let ik1 = Complex::new(T::zero(), T::lit(mode.k1 as f64));
    let ik2 = Complex::new(T::zero(), T::lit(mode.k2 as f64));
    let kappa = vertical_wavenumber::<T>(mode.m);
    let [a, b, c] = block;
    let mut out = match parity {
        // (a C, b C, c S) -> ((ik2 c + kb) S, (-ka - ik1 c) S, (ik1 b - ik2 a) C)
        FieldParity::Velocity => [
            ik2 * c + b * kappa,
            -(a * kappa) - ik1 * c,
            ik1 * b - ik2 * a,
        ],
        // (a S, b S, c C) -> ((ik2 c - kb) C, (ka - ik1 c) C, (ik1 b - ik2 a) S)
        FieldParity::Magnetic => [
            ik2 * c - b * kappa,
            a * kappa - ik1 * c,
            ik1 * b - ik2 * a,
        ],
    };
    let target = parity.flipped();
    for (comp, v) in out.iter_mut().enumerate() {
        if target.is_forced_zero(comp, mode.m) {
            *v = Complex::new(T::zero(), T::zero());
        }
    }
    out
}

/// `Delta f`: every block scaled by `-lambda`.
pub fn laplacian_apply<T: Real>(field: &SpectralField<T>) -> SpectralField<T> {
    field.scale_modes(|mode| -eigenvalue::<T>(mode))
}
