//! Little-endian binary grid files.
//!
//! ```text
//! magic    [u8; 4]   "UODF" (directional field) or "SCLR" (SDF/UDF grid)
//! version  u32       1
//! R        u32       corners per axis
//! code     u8        direction (0 lr, 1 fb, 2 ud) or kind (0 sdf, 1 udf)
//! values   f32 x R^3 x fastest, then y, then z
//! -- directional fields only --
//! mask     u8 x R^2  1 if the ray meets the shape; index iu + R * iv over the
//!                    plane axes (lr: y,z  fb: x,z  ud: x,y)
//! hits     R^2 times: u32 count, then count f32 axis coordinates
//! ```
//!
//! In a directional file the sign bit of each value stores the derivative
//! sign (set means `-1`, so `-0.0` is a valid sample) and samples on rays
//! that miss the shape hold the quiet NaN with bit pattern [`UNDEFINED_BITS`].

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{DirectionalField, FieldSource, GridSpec, RayProfile, ScalarFieldGrid, ScalarKind};
use crate::geometry::Direction;

pub const MAGIC_DIRECTIONAL: [u8; 4] = *b"UODF";
pub const MAGIC_SCALAR: [u8; 4] = *b"SCLR";
pub const VERSION: u32 = 1;
/// Storage pattern of an undefined sample.
pub const UNDEFINED_BITS: u32 = 0x7FC0_0DEF;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { found: [u8; 4], expected: &'static str },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("invalid resolution {0}")]
    InvalidResolution(u32),
    #[error("invalid direction or kind code {0}")]
    BadCode(u8),
    #[error("file truncated: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("inconsistent field data: {0}")]
    Inconsistent(String),
}

/// Either kind of grid file.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldFile {
    Directional(DirectionalField),
    Scalar(ScalarFieldGrid),
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.bytes.len() - self.pos < n {
            return Err(FormatError::Truncated {
                offset: self.pos,
                needed: n - (self.bytes.len() - self.pos),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32_bits(&mut self) -> Result<u32, FormatError> {
        self.u32()
    }

    fn finish(&self) -> Result<(), FormatError> {
        if self.pos != self.bytes.len() {
            return Err(FormatError::Inconsistent(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn header(out: &mut Vec<u8>, magic: [u8; 4], r: usize, code: u8) {
    out.extend_from_slice(&magic);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(r as u32).to_le_bytes());
    out.push(code);
}

fn read_header(rd: &mut Reader, magic: [u8; 4]) -> Result<(GridSpec, u8), FormatError> {
    let found: [u8; 4] = rd.take(4)?.try_into().unwrap();
    if found != magic {
        return Err(FormatError::BadMagic {
            found,
            expected: if magic == MAGIC_SCALAR { "SCLR" } else { "UODF" },
        });
    }
    let version = rd.u32()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let r = rd.u32()?;
    let grid = GridSpec::new(r as usize).map_err(|_| FormatError::InvalidResolution(r))?;
    Ok((grid, rd.u8()?))
}

fn encode_sample(sample: Option<(f64, i8)>) -> u32 {
    match sample {
        None => UNDEFINED_BITS,
        Some((d, s)) => {
            let v = d as f32;
            if s < 0 {
                (-v).to_bits()
            } else {
                v.to_bits()
            }
        }
    }
}

pub fn directional_to_bytes(field: &DirectionalField) -> Vec<u8> {
    let grid = field.grid();
    let r = grid.resolution();
    let mut out = Vec::with_capacity(13 + 4 * grid.corner_count() + grid.ray_count() * 5);
    header(&mut out, MAGIC_DIRECTIONAL, r, field.direction().code());
    for iz in 0..r {
        for iy in 0..r {
            for ix in 0..r {
                out.extend_from_slice(&encode_sample(field.sample(ix, iy, iz)).to_le_bytes());
            }
        }
    }
    out.extend(field.rays().iter().map(|ray| ray.is_some() as u8));
    for ray in field.rays() {
        let hits = ray.as_ref().map(|p| p.hits.as_slice()).unwrap_or(&[]);
        out.extend_from_slice(&(hits.len() as u32).to_le_bytes());
        for &h in hits {
            out.extend_from_slice(&(h as f32).to_le_bytes());
        }
    }
    out
}

pub fn directional_from_bytes(bytes: &[u8]) -> Result<DirectionalField, FormatError> {
    let mut rd = Reader { bytes, pos: 0 };
    let (grid, code) = read_header(&mut rd, MAGIC_DIRECTIONAL)?;
    let direction = Direction::from_code(code).ok_or(FormatError::BadCode(code))?;
    let r = grid.resolution();
    let values: Vec<u32> = (0..grid.corner_count())
        .map(|_| rd.f32_bits())
        .collect::<Result<_, _>>()?;
    let mask = rd.take(grid.ray_count())?.to_vec();
    let (a, b) = direction.plane_axes();
    let axis = direction.axis();
    let mut predicted = false;
    let mut rays = Vec::with_capacity(grid.ray_count());
    for (ray, &m) in mask.iter().enumerate() {
        let count = rd.u32()? as usize;
        let hits: Vec<f64> = (0..count)
            .map(|_| rd.f32_bits().map(|bits| f32::from_bits(bits) as f64))
            .collect::<Result<_, _>>()?;
        let (iu, iv) = (ray % r, ray / r);
        let value_at = |is: usize| {
            let mut idx = [0usize; 3];
            idx[a] = iu;
            idx[b] = iv;
            idx[axis] = is;
            values[grid.index(idx[0], idx[1], idx[2])]
        };
        match m {
            0 => {
                if count != 0 || (0..r).any(|is| value_at(is) != UNDEFINED_BITS) {
                    return Err(FormatError::Inconsistent(format!("masked-out ray {ray} carries data")));
                }
                rays.push(None);
            }
            1 => {
                let mut distances = Vec::with_capacity(r);
                let mut signs = Vec::with_capacity(r);
                for is in 0..r {
                    let v = f32::from_bits(value_at(is));
                    if !v.is_finite() {
                        return Err(FormatError::Inconsistent(format!("ray {ray} has a non-finite sample")));
                    }
                    distances.push(v.abs() as f64);
                    signs.push(if v.is_sign_negative() { -1 } else { 1 });
                }
                predicted |= hits.is_empty();
                rays.push(Some(RayProfile { hits, distances, signs }));
            }
            other => return Err(FormatError::Inconsistent(format!("mask byte {other} at ray {ray}"))),
        }
    }
    rd.finish()?;
    let source = if predicted {
        FieldSource::Predicted
    } else {
        FieldSource::GroundTruth
    };
    Ok(DirectionalField::new(direction, grid, source, rays))
}

pub fn scalar_to_bytes(field: &ScalarFieldGrid) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(13 + 4 * grid.corner_count());
    header(&mut out, MAGIC_SCALAR, grid.resolution(), field.kind().code());
    for &v in field.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn scalar_from_bytes(bytes: &[u8]) -> Result<ScalarFieldGrid, FormatError> {
    let mut rd = Reader { bytes, pos: 0 };
    let (grid, code) = read_header(&mut rd, MAGIC_SCALAR)?;
    let kind = ScalarKind::from_code(code).ok_or(FormatError::BadCode(code))?;
    let values = (0..grid.corner_count())
        .map(|_| rd.f32_bits().map(|b| f32::from_bits(b) as f64))
        .collect::<Result<_, _>>()?;
    rd.finish()?;
    Ok(ScalarFieldGrid::new(kind, grid, values))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_directional(field: &DirectionalField, path: &Path) -> Result<(), FormatError> {
    fs::write(path, directional_to_bytes(field)).map_err(io_err(path))
}

pub fn write_scalar(field: &ScalarFieldGrid, path: &Path) -> Result<(), FormatError> {
    fs::write(path, scalar_to_bytes(field)).map_err(io_err(path))
}

pub fn read_directional(path: &Path) -> Result<DirectionalField, FormatError> {
    directional_from_bytes(&fs::read(path).map_err(io_err(path))?)
}

pub fn read_scalar(path: &Path) -> Result<ScalarFieldGrid, FormatError> {
    scalar_from_bytes(&fs::read(path).map_err(io_err(path))?)
}

/// Read a grid file of either kind, dispatching on its magic.
pub fn read_field_file(path: &Path) -> Result<FieldFile, FormatError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.starts_with(&MAGIC_SCALAR) {
        scalar_from_bytes(&bytes).map(FieldFile::Scalar)
    } else {
        directional_from_bytes(&bytes).map(FieldFile::Directional)
    }
}
