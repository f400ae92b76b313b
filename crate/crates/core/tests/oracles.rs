mod common;

use std::f64::consts::PI;

use common::{add, cross, evaluate, max_abs, max_diff, periodic_points, random_pair, Periodic};
use mhdflat::modes::{divergence_vector, FieldParity};
use mhdflat::transforms::quadrature;
use mhdflat::{Dynamics, Field, GridSpec, ModeIndex, Transformer, Truncation};
use nalgebra::DMatrix;
use num_complex::Complex64;

#[test]
fn to_physical_matches_direct_summation() {
    let trunc = Truncation::new(5, 4);
    let grid = GridSpec::new(14, 12, 9).unwrap();
    let tf = Transformer::<f64>::new(grid);
    for (seed, parity) in [(3, FieldParity::Velocity), (4, FieldParity::Magnetic)] {
        let f = Field::random_raw(seed, parity, trunc, 1.0);
        let fast = tf.to_physical(&f).unwrap();
        let xs = periodic_points(grid.nx, 2.0 * PI);
        let ys = periodic_points(grid.ny, 2.0 * PI);
        let zs: Vec<f64> = (0..=grid.nz).map(|l| l as f64 / grid.nz as f64).collect();
        let slow = evaluate(&f, &xs, &ys, &zs);
        let scale = max_abs(&slow);
        for c in 0..3 {
            for i in 0..grid.nx {
                for j in 0..grid.ny {
                    for l in 0..=grid.nz {
                        let a = fast.get(c, i, j, l);
                        let b = slow[c][(i * grid.ny + j) * (grid.nz + 1) + l];
                        assert!((a - b).abs() <= 1e-13 * scale, "c={c} ({i},{j},{l}): {a} vs {b}");
                    }
                }
            }
        }
    }
}

#[test]
fn quadrature_integrates_products_exactly_on_dealiased_grids() {
    let trunc = Truncation::new(4, 4);
    let grid = GridSpec::min_dealiased(trunc);
    let tf = Transformer::<f64>::new(grid);
    let f = Field::random_raw(11, FieldParity::Velocity, trunc, 1.0).dealias();
    let g = Field::random_raw(12, FieldParity::Velocity, trunc, 1.0).dealias();
    let q = tf.to_physical(&f).unwrap().quadrature_inner(&tf.to_physical(&g).unwrap());
    let exact = f.inner(&g).unwrap();
    assert!((q - exact).abs() <= 1e-13 * f.l2_norm() * g.l2_norm());

    // constant 1 integrates to the cell volume
    let ones = vec![1.0; grid.points()];
    assert!((quadrature(grid, &ones) - 4.0 * PI * PI).abs() < 1e-12);
}

#[test]
fn curl_matches_sixth_order_finite_differences() {
    let trunc = Truncation::new(3, 3);
    let box3 = Periodic { n: 64 };
    for (seed, parity) in [(5, FieldParity::Velocity), (6, FieldParity::Magnetic)] {
        let f = Field::random_raw(seed, parity, trunc, 1.0).leray_project();
        let fd = box3.curl(&box3.sample(&f));
        let spectral = box3.sample(&f.curl());
        let err = max_diff(&fd, &spectral) / max_abs(&spectral);
        assert!(err < 1e-5, "{parity:?}: relative FD discrepancy {err:e}");
    }
}

#[test]
fn laplacian_matches_finite_differences() {
    let trunc = Truncation::new(3, 3);
    let box3 = Periodic { n: 64 };
    let f = Field::random_raw(9, FieldParity::Magnetic, trunc, 1.0);
    let v = box3.sample(&f);
    let lap: [Vec<f64>; 3] = std::array::from_fn(|c| {
        let mut acc = vec![0.0; v[c].len()];
        for axis in 0..3 {
            let d2 = box3.d(&box3.d(&v[c], axis), axis);
            acc.iter_mut().zip(d2).for_each(|(a, b)| *a += b);
        }
        acc
    });
    let spectral = box3.sample(&f.laplacian());
    // two stacked first differences: error ~ (kh)^6 of each
    assert!(max_diff(&lap, &spectral) / max_abs(&spectral) < 1e-4);
}

#[test]
fn nonlinear_terms_match_finite_difference_oracle() {
    let trunc = Truncation::new(3, 3);
    let dynamics = Dynamics::<f64>::new(trunc, GridSpec::min_dealiased(trunc)).unwrap();
    let box3 = Periodic { n: 64 };
    let (u, b) = random_pair(21, trunc);
    let (h1, h2) = dynamics.nonlinear(&u, &b).unwrap();

    let up = box3.sample(&u);
    let bp = box3.sample(&b);
    let g1 = add(&cross(&box3.curl(&up), &up), &cross(&bp, &box3.curl(&bp)));
    let g2 = box3.curl(&cross(&bp, &up));

    for seed in 30..34 {
        let (v, w) = random_pair(seed, trunc);
        let (v, w) = (v.dealias(), w.dealias());
        let oracle1 = box3.inner(&g1, &box3.sample(&v));
        let got1 = h1.inner(&v).unwrap();
        let scale1 = h1.l2_norm() * v.l2_norm();
        assert!((got1 - oracle1).abs() < 1e-5 * scale1, "h1: {got1} vs {oracle1}");

        let oracle2 = box3.inner(&g2, &box3.sample(&w));
        let got2 = h2.inner(&w).unwrap();
        let scale2 = h2.l2_norm() * w.l2_norm();
        assert!((got2 - oracle2).abs() < 1e-5 * scale2, "h2: {got2} vs {oracle2}");
    }
}

#[test]
fn parseval_against_quadrature_of_the_direct_sum() {
    let trunc = Truncation::new(3, 3);
    let box3 = Periodic { n: 32 };
    let f = Field::random_divfree(2, FieldParity::Velocity, trunc, 2.0);
    let v = box3.sample(&f);
    let quad = box3.inner(&v, &v);
    assert!((quad - f.energy()).abs() < 1e-12 * f.energy());
    assert!((f.energy() - 1.0).abs() < 1e-12);
}

/// Coefficient vector as reals `[re_0, im_0, re_1, ...]`.
fn to_real(f: &Field) -> Vec<f64> {
    f.coeffs().iter().flat_map(|c| [c.re, c.im]).collect()
}

/// Weighted-orthogonal projection onto `{div = 0, forced zeros = 0}` built from
/// an SVD null space of the full constraint matrix.
fn dense_projector(parity: FieldParity, trunc: Truncation) -> DMatrix<f64> {
    let modes: Vec<ModeIndex> = Field::zero(parity, trunc).modes().collect();
    let nb = modes.len();
    let n = 2 * 3 * nb;
    let slot = |c: usize, b: usize| 2 * (c * nb + b);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut weight = vec![0.0; n];
    for (bi, &mode) in modes.iter().enumerate() {
        let d = divergence_vector::<f64>(mode, parity);
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for c in 0..3 {
            let s = slot(c, bi);
            re[s] = d[c].re;
            re[s + 1] = -d[c].im;
            im[s] = d[c].im;
            im[s + 1] = d[c].re;
            let w = parity.z_basis(c).weight(mode.m);
            weight[s] = w;
            weight[s + 1] = w;
            if parity.is_forced_zero(c, mode.m) {
                for o in 0..2 {
                    let mut r = vec![0.0; n];
                    r[s + o] = 1.0;
                    rows.push(r);
                }
            }
        }
        rows.push(re);
        rows.push(im);
    }
    // zero rows keep the matrix square so the SVD returns all of V^T
    rows.resize(rows.len().max(n), vec![0.0; n]);
    let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let svd = a.svd(false, true);
    let vt = svd.v_t.unwrap();
    let tol = 1e-10;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    // rows of V^T with zero singular value span the null space
    let null_rows: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= tol).collect();
    assert_eq!(null_rows.len(), n - rank);
    let null = DMatrix::from_fn(n, null_rows.len(), |i, j| vt[(null_rows[j], i)]);
    let w = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(weight));
    let gram = null.transpose() * &w * &null;
    let inv = gram.try_inverse().expect("weighted Gram matrix is nonsingular");
    &null * inv * null.transpose() * w
}

#[test]
fn leray_projection_matches_dense_svd_projector() {
    let trunc = Truncation::new(2, 2);
    for (seed, parity) in [(1, FieldParity::Velocity), (2, FieldParity::Magnetic)] {
        let f = Field::random_raw(seed, parity, trunc, 0.0);
        let p = dense_projector(parity, trunc);
        let expected = &p * nalgebra::DVector::from_vec(to_real(&f));
        let got = to_real(&f.leray_project());
        let err = expected
            .iter()
            .zip(&got)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = got.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(err < 1e-12 * scale, "{parity:?}: {err:e}");
    }
}

#[test]
fn divergence_vector_matches_differentiated_series() {
    // d/dz of cos(m pi z) is -m pi sin, of sin is +m pi cos; the divergence of a
    // single block must equal d . block times the shared basis function.
    let trunc = Truncation::new(2, 2);
    let mode = ModeIndex::new(1, -2, 2);
    let block = [
        Complex64::new(0.3, 0.1),
        Complex64::new(-0.2, 0.4),
        Complex64::new(0.5, -0.7),
    ];
    let xy = [0.4, 1.3];
    let z = 0.37;
    for parity in [FieldParity::Velocity, FieldParity::Magnetic] {
        let f = Field::zero(parity, trunc).with_block(mode, block);
        let h = 1e-5;
        let at = |dx: f64, dy: f64, dz: f64| {
            evaluate(&f, &[xy[0] + dx], &[xy[1] + dy], &[z + dz])
        };
        let fd = |c: usize, e: [f64; 3]| {
            let p = at(e[0] * h, e[1] * h, e[2] * h)[c][0];
            let q = at(-e[0] * h, -e[1] * h, -e[2] * h)[c][0];
            (p - q) / (2.0 * h)
        };
        let div = fd(0, [1.0, 0.0, 0.0]) + fd(1, [0.0, 1.0, 0.0]) + fd(2, [0.0, 0.0, 1.0]);
        let d = divergence_vector::<f64>(mode, parity);
        let s: Complex64 = (0..3).map(|c| d[c] * block[c]).sum();
        let phase = Complex64::from_polar(1.0, mode.k1 as f64 * xy[0] + mode.k2 as f64 * xy[1]);
        let zfun = match parity {
            FieldParity::Velocity => (2.0 * PI * z).cos(),
            FieldParity::Magnetic => (2.0 * PI * z).sin(),
        };
        // with_block adds the conjugate mode, so the real field is 2 Re(...)
        let expected = 2.0 * (s * phase).re * zfun;
        assert!((div - expected).abs() < 1e-6, "{parity:?}: {div} vs {expected}");
    }
}
