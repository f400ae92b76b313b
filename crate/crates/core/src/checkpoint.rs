//! Binary checkpoint format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "MHDS"
//! 4       4     version (u32 LE) = 1
//! 8       20    K, M, Nx, Ny, Nz (u32 LE each)
//! 28      24    t, nu, mu (f64 LE each)
//! 52      ...   u coefficients, then B coefficients
//! ```
//!
//! Each tensor is `3 (2K+1)^2 (M+1)` complex values written as interleaved
//! `(re, im)` f64 LE pairs, ordered by component, then `k1` from `-K`, then `k2`
//! from `-K`, then `m` from 0.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex;

use crate::dynamics::SimState;
use crate::error::{Error, Result};
use crate::fields::SpectralField;
use crate::modes::{FieldParity, Truncation};
use crate::scalar::Real;
use crate::transforms::GridSpec;

pub const MAGIC: [u8; 4] = *b"MHDS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 52;

/// Decoded checkpoint contents.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub grid: GridSpec,
    pub state: SimState<f64>,
}

/// Total file size implied by a truncation, or `None` on overflow.
pub fn expected_len(trunc: Truncation) -> Option<u64> {
    let w = 2u64.checked_mul(trunc.k as u64)?.checked_add(1)?;
    let per = w.checked_mul(w)?.checked_mul(trunc.m as u64 + 1)?;
    per.checked_mul(2 * 3 * 16)?.checked_add(HEADER_LEN)
}

/// Serializes a state; coefficients are widened to f64.
pub fn encode<T: Real>(state: &SimState<T>, grid: GridSpec) -> Vec<u8> {
    let trunc = state.u.truncation();
    let len = expected_len(trunc).expect("in-memory field size fits u64") as usize;
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [trunc.k, trunc.m, grid.nx, grid.ny, grid.nz] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for v in [state.t, state.nu, state.mu] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for f in [&state.u, &state.b] {
        for c in f.coeffs() {
            out.extend_from_slice(&c.re.as_f64().to_le_bytes());
            out.extend_from_slice(&c.im.as_f64().to_le_bytes());
        }
    }
    out
}

fn u32_at(bytes: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(bytes[off..off + 4].try_into().expect("4 bytes"))
}

fn f64_at(bytes: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(bytes[off..off + 8].try_into().expect("8 bytes"))
}

struct Header {
    trunc: Truncation,
    grid: GridSpec,
    t: f64,
    nu: f64,
    mu: f64,
}

fn parse_header(path: &Path, bytes: &[u8], total_len: u64) -> Result<(Header, u64)> {
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            path: path.into(),
            expected: HEADER_LEN,
            actual: total_len,
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(Error::BadMagic {
            path: path.into(),
            found: magic,
        });
    }
    if (bytes.len() as u64) < HEADER_LEN {
        return Err(Error::Truncated {
            path: path.into(),
            expected: HEADER_LEN,
            actual: total_len,
        });
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(Error::BadVersion {
            path: path.into(),
            found: version,
        });
    }
    let dims: Vec<usize> = (0..5).map(|i| u32_at(bytes, 8 + 4 * i) as usize).collect();
    let trunc = Truncation::new(dims[0], dims[1]);
    let shape_err = |reason: String| Error::CheckpointShape {
        path: path.into(),
        reason,
    };
    let grid = GridSpec::new(dims[2], dims[3], dims[4]).map_err(|e| shape_err(e.to_string()))?;
    grid.check_resolves(trunc).map_err(|e| shape_err(e.to_string()))?;
    let expected = expected_len(trunc).ok_or_else(|| shape_err("size overflows u64".into()))?;
    Ok((
        Header {
            trunc,
            grid,
            t: f64_at(bytes, 28),
            nu: f64_at(bytes, 36),
            mu: f64_at(bytes, 44),
        },
        expected,
    ))
}

/// Deserializes a checkpoint held in memory; `path` is only used in errors.
pub fn decode(path: &Path, bytes: &[u8]) -> Result<Checkpoint> {
    let actual = bytes.len() as u64;
    let (h, expected) = parse_header(path, bytes, actual)?;
    check_len(path, expected, actual)?;
    build(path, h, &bytes[HEADER_LEN as usize..])
}

fn check_len(path: &Path, expected: u64, actual: u64) -> Result<()> {
    if actual < expected {
        return Err(Error::Truncated {
            path: path.into(),
            expected,
            actual,
        });
    }
    if actual > expected {
        return Err(Error::CheckpointShape {
            path: path.into(),
            reason: format!("{} trailing bytes after the B tensor", actual - expected),
        });
    }
    Ok(())
}

fn build(path: &Path, h: Header, body: &[u8]) -> Result<Checkpoint> {
    let n = 3 * h.trunc.block_count();
    let read_tensor = |off: usize| -> Vec<Complex<f64>> {
        (0..n)
            .map(|i| {
                let p = off + 16 * i;
                Complex::new(f64_at(body, p), f64_at(body, p + 8))
            })
            .collect()
    };
    let u = SpectralField::from_coeffs(FieldParity::Velocity, h.trunc, read_tensor(0))?;
    let b = SpectralField::from_coeffs(FieldParity::Magnetic, h.trunc, read_tensor(16 * n))?;
    if !(h.nu >= 0.0 && h.mu >= 0.0) {
        return Err(Error::CheckpointShape {
            path: path.into(),
            reason: format!("negative dissipation nu={}, mu={}", h.nu, h.mu),
        });
    }
    Ok(Checkpoint {
        grid: h.grid,
        state: SimState {
            t: h.t,
            u,
            b,
            nu: h.nu,
            mu: h.mu,
        },
    })
}

pub fn write_checkpoint<T: Real>(state: &SimState<T>, grid: GridSpec, path: &Path) -> Result<()> {
    let bytes = encode(state, grid);
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    file.flush().map_err(|e| Error::io(path, e))
}

/// Reads a checkpoint, validating the header and the file size before the
/// coefficient buffers are allocated.
pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let actual = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let mut head = Vec::with_capacity(HEADER_LEN as usize);
    (&mut file)
        .take(HEADER_LEN)
        .read_to_end(&mut head)
        .map_err(|e| Error::io(path, e))?;
    let (h, expected) = parse_header(path, &head, actual)?;
    check_len(path, expected, actual)?;
    let mut body = Vec::with_capacity((expected - HEADER_LEN) as usize);
    file.read_to_end(&mut body).map_err(|e| Error::io(path, e))?;
    check_len(path, expected, HEADER_LEN + body.len() as u64)?;
    build(path, h, &body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::FieldParity;

    fn state() -> (SimState<f64>, GridSpec) {
        let t = Truncation::new(2, 3);
        let u = SpectralField::random_divfree(1, FieldParity::Velocity, t, 2.0);
        let b = SpectralField::random_divfree(2, FieldParity::Magnetic, t, 2.0);
        let mut s = SimState::new(u, b, 0.01, 0.02).unwrap();
        s.t = 0.125;
        (s, GridSpec::min_dealiased(t))
    }

    #[test]
    fn header_layout() {
        let (s, g) = state();
        let bytes = encode(&s, g);
        assert_eq!(&bytes[..4], b"MHDS");
        assert_eq!(u32_at(&bytes, 4), 1);
        assert_eq!(u32_at(&bytes, 8), 2);
        assert_eq!(u32_at(&bytes, 12), 3);
        assert_eq!(u32_at(&bytes, 16), g.nx as u32);
        assert_eq!(f64_at(&bytes, 28), 0.125);
        assert_eq!(f64_at(&bytes, 36), 0.01);
        assert_eq!(f64_at(&bytes, 44), 0.02);
        assert_eq!(bytes.len() as u64, expected_len(Truncation::new(2, 3)).unwrap());
        // first u coefficient is component 1 at (k1, k2, m) = (-2, -2, 0)
        let c0 = s.u.get(0, crate::modes::ModeIndex::new(-2, -2, 0));
        assert_eq!(f64_at(&bytes, 52), c0.re);
        assert_eq!(f64_at(&bytes, 60), c0.im);
    }

    #[test]
    fn decode_inverts_encode() {
        let (s, g) = state();
        let ck = decode(Path::new("mem"), &encode(&s, g)).unwrap();
        assert_eq!(ck.grid, g);
        assert_eq!(ck.state, s);
    }

    #[test]
    fn bad_magic_and_version() {
        let (s, g) = state();
        let mut bytes = encode(&s, g);
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode(Path::new("x"), &bytes), Err(Error::BadMagic { .. })));
        let mut bytes = encode(&s, g);
        bytes[4] = 2;
        assert!(matches!(decode(Path::new("x"), &bytes), Err(Error::BadVersion { found: 2, .. })));
    }

    #[test]
    fn truncated_and_oversized() {
        let (s, g) = state();
        let bytes = encode(&s, g);
        let cut = &bytes[..bytes.len() - 100];
        match decode(Path::new("x"), cut) {
            Err(Error::Truncated { expected, actual, .. }) => {
                assert_eq!(expected, bytes.len() as u64);
                assert_eq!(actual, cut.len() as u64);
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(decode(Path::new("x"), &long), Err(Error::CheckpointShape { .. })));
    }

    #[test]
    fn grid_that_cannot_hold_the_truncation_is_a_shape_error() {
        let (s, _) = state();
        let bytes = encode(&s, GridSpec::new(2, 2, 1).unwrap());
        assert!(matches!(decode(Path::new("x"), &bytes), Err(Error::CheckpointShape { .. })));
    }
}
