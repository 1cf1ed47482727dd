use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ply_rs::parser::Parser;
use ply_rs::ply::{
    Addable, DefaultElement, ElementDef, Encoding, Ply, Property, PropertyDef, PropertyType, ScalarType,
};
use ply_rs::writer::Writer;
use thiserror::Error;

use super::GridEdgePoint;
use crate::geometry::Vec3;

#[derive(Debug, Error)]
pub enum PointIoError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("unsupported point format `{0}` (expected ply or xyz)")]
    UnsupportedFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFormat {
    Ply,
    Xyz,
}

impl PointFormat {
    pub fn from_path(path: &Path) -> Result<Self, PointIoError> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        match ext.as_str() {
            "ply" => Ok(PointFormat::Ply),
            "xyz" => Ok(PointFormat::Xyz),
            _ => Err(PointIoError::UnsupportedFormat(ext)),
        }
    }
}

/// Oriented normal per point from the axis votes of all points within
/// `radius`, each weighted by its sample count. Falls back to the point's own
/// axis when the votes cancel.
pub fn estimate_normals(points: &[GridEdgePoint], radius: f64) -> Vec<Vec3> {
    let cell = |p: &Vec3| -> [i64; 3] { [0, 1, 2].map(|k| (p[k] / radius).floor() as i64) };
    let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        buckets.entry(cell(&p.position)).or_default().push(i);
    }
    let vote = |p: &GridEdgePoint| p.direction.unit() * (p.axis_vote as f64);
    points
        .iter()
        .map(|p| {
            let c = cell(&p.position);
            let mut sum = Vec3::zeros();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let Some(ids) = buckets.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else {
                            continue;
                        };
                        for &j in ids {
                            let q = &points[j];
                            if (q.position - p.position).norm() <= radius {
                                sum += vote(q) * q.count as f64;
                            }
                        }
                    }
                }
            }
            let n = sum.norm();
            if n > 0.0 {
                sum / n
            } else {
                vote(p)
            }
        })
        .collect()
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> PointIoError + '_ {
    move |source| PointIoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write points as binary little-endian PLY with normals, or as plain XYZ.
pub fn export_points(points: &[Vec3], normals: &[Vec3], path: &Path, format: PointFormat) -> Result<(), PointIoError> {
    assert_eq!(points.len(), normals.len(), "one normal per point");
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    match format {
        PointFormat::Xyz => {
            for p in points {
                writeln!(out, "{} {} {}", p.x as f32, p.y as f32, p.z as f32).map_err(io_err(path))?;
            }
        }
        PointFormat::Ply => {
            let mut ply = Ply::<DefaultElement>::new();
            ply.header.encoding = Encoding::BinaryLittleEndian;
            let mut vertex = ElementDef::new("vertex".to_string());
            for name in ["x", "y", "z", "nx", "ny", "nz"] {
                vertex
                    .properties
                    .add(PropertyDef::new(name.to_string(), PropertyType::Scalar(ScalarType::Float)));
            }
            ply.header.elements.add(vertex);
            let elements = points
                .iter()
                .zip(normals)
                .map(|(p, n)| {
                    let mut el = DefaultElement::new();
                    for (name, v) in ["x", "y", "z", "nx", "ny", "nz"].iter().zip([p.x, p.y, p.z, n.x, n.y, n.z]) {
                        el.insert(name.to_string(), Property::Float(v as f32));
                    }
                    el
                })
                .collect();
            ply.payload.insert("vertex".to_string(), elements);
            Writer::new()
                .write_ply(&mut out, &mut ply)
                .map_err(io_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}

/// Read point positions back from a PLY or XYZ file.
pub fn read_points(path: &Path) -> Result<Vec<Vec3>, PointIoError> {
    let format = PointFormat::from_path(path)?;
    let parse_err = |message: String| PointIoError::Parse {
        path: path.display().to_string(),
        message,
    };
    let mut reader = BufReader::new(File::open(path).map_err(io_err(path))?);
    match format {
        PointFormat::Xyz => {
            let mut out = Vec::new();
            for (n, line) in reader.lines().enumerate() {
                let line = line.map_err(io_err(path))?;
                if line.trim().is_empty() {
                    continue;
                }
                let xyz: Vec<f64> = line
                    .split_whitespace()
                    .take(3)
                    .map(str::parse)
                    .collect::<Result<_, _>>()
                    .map_err(|e| parse_err(format!("line {}: {e}", n + 1)))?;
                if xyz.len() != 3 {
                    return Err(parse_err(format!("line {} needs three coordinates", n + 1)));
                }
                out.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            Ok(out)
        }
        PointFormat::Ply => {
            let ply = Parser::<DefaultElement>::new()
                .read_ply(&mut reader)
                .map_err(|e| parse_err(e.to_string()))?;
            let Some(vertices) = ply.payload.get("vertex") else {
                return Ok(Vec::new());
            };
            vertices
                .iter()
                .map(|el| {
                    let get = |k: &str| match el.get(k) {
                        Some(Property::Float(v)) => Ok(*v as f64),
                        Some(Property::Double(v)) => Ok(*v),
                        _ => Err(parse_err(format!("vertex lacks float `{k}`"))),
                    };
                    Ok(Vec3::new(get("x")?, get("y")?, get("z")?))
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Direction;

    fn sample_points() -> Vec<Vec3> {
        vec![Vec3::new(0.1, -0.2, 0.3), Vec3::new(1.0 / 3.0, 0.5, -0.75)]
    }

    #[test]
    fn ply_round_trip_to_f32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.ply");
        let pts = sample_points();
        export_points(&pts, &[Vec3::x(), Vec3::y()], &path, PointFormat::Ply).unwrap();
        let back = read_points(&path).unwrap();
        for (a, b) in pts.iter().zip(&back) {
            for k in 0..3 {
                assert_eq!(a[k] as f32 as f64, b[k]);
            }
        }
    }

    #[test]
    fn xyz_has_one_line_per_point_and_empty_set_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.xyz");
        export_points(&sample_points(), &[Vec3::x(); 2], &path, PointFormat::Xyz).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), "0.1 -0.2 0.3");
        export_points(&[], &[], &path, PointFormat::Xyz).unwrap();
        assert!(read_points(&path).unwrap().is_empty());
        let ply = dir.path().join("e.ply");
        export_points(&[], &[], &ply, PointFormat::Ply).unwrap();
        assert!(read_points(&ply).unwrap().is_empty());
    }

    #[test]
    fn lone_point_normal_follows_its_vote() {
        let p = GridEdgePoint {
            position: Vec3::new(0.0, 0.0, 0.5),
            direction: Direction::Ud,
            ray: 0,
            count: 3,
            axis_vote: 1,
        };
        assert_eq!(estimate_normals(&[p], 0.1), vec![Vec3::z()]);
    }
}
