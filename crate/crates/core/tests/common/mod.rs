#![allow(dead_code)]

//! Oracles that share no code with the solver: direct trigonometric summation,
//! sixth-order finite differences and rectangle-rule quadrature on the
//! periodic extension `z in [0, 2)`.

use std::f64::consts::PI;

use mhdflat::{Field, FieldParity, GridSpec, ModeIndex, SolverConfig, Truncation, ZBasis};
use num_complex::Complex64;

/// Values of `field` at the tensor product `xs x ys x zs`, index
/// `(i * ys.len() + j) * zs.len() + l`, by direct summation of the series.
pub fn evaluate(field: &Field, xs: &[f64], ys: &[f64], zs: &[f64]) -> [Vec<f64>; 3] {
    let t = field.truncation();
    let k = t.k as i32;
    let w = t.width();
    let (nx, ny, nz) = (xs.len(), ys.len(), zs.len());
    let mut out: [Vec<f64>; 3] = Default::default();
    for c in 0..3 {
        let sine = field.parity().z_basis(c) == ZBasis::Sin;
        // s[a][b][l] = sum_m c phi_m(z_l)
        let mut s = vec![Complex64::new(0.0, 0.0); w * w * nz];
        for a in 0..w {
            for b in 0..w {
                for m in 0..=t.m {
                    let v = field.get(c, ModeIndex::new(a as i32 - k, b as i32 - k, m as u32));
                    if v == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for (l, &z) in zs.iter().enumerate() {
                        let arg = m as f64 * PI * z;
                        let phi = if sine { arg.sin() } else { arg.cos() };
                        s[(a * w + b) * nz + l] += v * phi;
                    }
                }
            }
        }
        // r[a][j][l] = sum_b s e^{i k2 y_j}
        let mut r = vec![Complex64::new(0.0, 0.0); w * ny * nz];
        for a in 0..w {
            for b in 0..w {
                let k2 = (b as i32 - k) as f64;
                for (j, &y) in ys.iter().enumerate() {
                    let e = Complex64::from_polar(1.0, k2 * y);
                    for l in 0..nz {
                        r[(a * ny + j) * nz + l] += s[(a * w + b) * nz + l] * e;
                    }
                }
            }
        }
        let mut vals = vec![0.0; nx * ny * nz];
        for a in 0..w {
            let k1 = (a as i32 - k) as f64;
            for (i, &x) in xs.iter().enumerate() {
                let e = Complex64::from_polar(1.0, k1 * x);
                for j in 0..ny {
                    for l in 0..nz {
                        vals[(i * ny + j) * nz + l] += (r[(a * ny + j) * nz + l] * e).re;
                    }
                }
            }
        }
        out[c] = vals;
    }
    out
}

/// Uniform periodic sample points `0, L/n, ..., (n-1)L/n`.
pub fn periodic_points(n: usize, length: f64) -> Vec<f64> {
    (0..n).map(|i| length * i as f64 / n as f64).collect()
}

/// Cube grid with `n` points per direction on `[0, 2pi)^2 x [0, 2)`.
#[derive(Clone, Copy, Debug)]
pub struct Periodic {
    pub n: usize,
}

impl Periodic {
    pub fn sample(&self, f: &Field) -> [Vec<f64>; 3] {
        let xy = periodic_points(self.n, 2.0 * PI);
        evaluate(f, &xy, &xy, &periodic_points(self.n, 2.0))
    }

    fn spacing(&self, axis: usize) -> f64 {
        if axis == 2 {
            2.0 / self.n as f64
        } else {
            2.0 * PI / self.n as f64
        }
    }

    /// Sixth-order central difference along `axis`.
    pub fn d(&self, v: &[f64], axis: usize) -> Vec<f64> {
        const C: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
        let n = self.n;
        let h = self.spacing(axis);
        let idx = |i: usize, j: usize, l: usize| (i * n + j) * n + l;
        let mut out = vec![0.0; v.len()];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let mut acc = 0.0;
                    for (s, c) in C.iter().enumerate() {
                        let o = s + 1;
                        let (p, q) = match axis {
                            0 => (idx((i + o) % n, j, l), idx((i + n - o) % n, j, l)),
                            1 => (idx(i, (j + o) % n, l), idx(i, (j + n - o) % n, l)),
                            _ => (idx(i, j, (l + o) % n), idx(i, j, (l + n - o) % n)),
                        };
                        acc += c * (v[p] - v[q]);
                    }
                    out[idx(i, j, l)] = acc / h;
                }
            }
        }
        out
    }

    pub fn curl(&self, f: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
        let d = |c: usize, a: usize| self.d(&f[c], a);
        let sub = |a: Vec<f64>, b: Vec<f64>| a.iter().zip(&b).map(|(x, y)| x - y).collect();
        [sub(d(2, 1), d(1, 2)), sub(d(0, 2), d(2, 0)), sub(d(1, 0), d(0, 1))]
    }

    /// `int_{T^2 x (0,1)} f . g`, using evenness of the integrand in `z`.
    pub fn inner(&self, f: &[Vec<f64>; 3], g: &[Vec<f64>; 3]) -> f64 {
        let n3 = (self.n * self.n * self.n) as f64;
        let sum: f64 = (0..3)
            .map(|c| f[c].iter().zip(&g[c]).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        0.5 * sum * (2.0 * PI) * (2.0 * PI) * 2.0 / n3
    }
}

pub fn cross(a: &[Vec<f64>; 3], b: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
    let n = a[0].len();
    let mut out: [Vec<f64>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for p in 0..n {
        out[0][p] = a[1][p] * b[2][p] - a[2][p] * b[1][p];
        out[1][p] = a[2][p] * b[0][p] - a[0][p] * b[2][p];
        out[2][p] = a[0][p] * b[1][p] - a[1][p] * b[0][p];
    }
    out
}

pub fn add(a: &[Vec<f64>; 3], b: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
    let f = |c: usize| a[c].iter().zip(&b[c]).map(|(x, y)| x + y).collect();
    [f(0), f(1), f(2)]
}

pub fn max_abs(v: &[Vec<f64>; 3]) -> f64 {
    v.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_diff(a: &[Vec<f64>; 3], b: &[Vec<f64>; 3]) -> f64 {
    (0..3)
        .flat_map(|c| a[c].iter().zip(&b[c]).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

pub fn random_pair(seed: u64, trunc: Truncation) -> (Field, Field) {
    (
        Field::random_divfree(seed, FieldParity::Velocity, trunc, 2.0),
        Field::random_divfree(seed.wrapping_mul(31) + 7, FieldParity::Magnetic, trunc, 2.0),
    )
}

pub fn config(k: usize, m: usize, dt: f64, t_end: f64, nu: f64, mu: f64, seed: u64) -> SolverConfig {
    let trunc = Truncation::new(k, m);
    SolverConfig {
        trunc,
        grid: GridSpec::min_dealiased(trunc),
        dt,
        t_end,
        nu,
        mu,
        sample_every: 10,
        seed,
        decay_power: 2.0,
        out_dir: None,
    }
}
