use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ply_rs::parser::Parser;
use ply_rs::ply::{DefaultElement, Property};

use super::{MeshError, TriangleMesh};
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self, MeshError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "ply" => Ok(MeshFormat::Ply),
            _ => Err(MeshError::UnsupportedFormat { extension: ext }),
        }
    }
}

/// Load an OBJ or PLY file. Polygons are triangulated as fans around their
/// first vertex. When `format` is `None` it is taken from the file extension.
pub fn load_mesh(path: &Path, format: Option<MeshFormat>) -> Result<TriangleMesh, MeshError> {
    let format = match format {
        Some(f) => f,
        None => MeshFormat::from_path(path)?,
    };
    let file = File::open(path).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (vertices, faces) = match format {
        MeshFormat::Obj => read_obj(path, BufReader::new(file))?,
        MeshFormat::Ply => read_ply(path, BufReader::new(file))?,
    };
    let mut triangles = Vec::with_capacity(faces.len());
    for (face, polygon) in faces.iter().enumerate() {
        for &index in polygon {
            if index < 0 || index as usize >= vertices.len() {
                return Err(MeshError::IndexOutOfRange {
                    face,
                    index,
                    vertex_count: vertices.len(),
                });
            }
        }
        for k in 1..polygon.len().saturating_sub(1) {
            triangles.push([polygon[0] as u32, polygon[k] as u32, polygon[k + 1] as u32]);
        }
    }
    if triangles.is_empty() {
        return Err(MeshError::Empty {
            path: path.to_path_buf(),
        });
    }
    let mesh = TriangleMesh::new(vertices, triangles)?;
    if mesh.degenerate_count() == mesh.triangles().len() {
        return Err(MeshError::AllDegenerate);
    }
    Ok(mesh)
}

type RawMesh = (Vec<Vec3>, Vec<Vec<i64>>);

fn read_obj(path: &Path, reader: impl BufRead) -> Result<RawMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let parse_err = |line: usize, message: String| MeshError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|source| MeshError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in xyz.iter_mut() {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| parse_err(lineno, "vertex needs three coordinates".into()))?;
                    *c = tok
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad coordinate `{tok}`")))?;
                }
                vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let mut polygon = Vec::new();
                for tok in tokens {
                    let first = tok.split('/').next().unwrap_or("");
                    let idx: i64 = first
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad face index `{tok}`")))?;
                    // OBJ indices are 1-based; negative values count back from the latest vertex
                    let resolved = match idx {
                        0 => return Err(parse_err(lineno, "face index 0 is invalid".into())),
                        i if i > 0 => i - 1,
                        i => vertices.len() as i64 + i,
                    };
                    polygon.push(resolved);
                }
                if polygon.len() < 3 {
                    return Err(parse_err(lineno, "face needs at least three vertices".into()));
                }
                faces.push(polygon);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

fn scalar(p: &Property) -> Option<f64> {
    Some(match *p {
        Property::Char(v) => v as f64,
        Property::UChar(v) => v as f64,
        Property::Short(v) => v as f64,
        Property::UShort(v) => v as f64,
        Property::Int(v) => v as f64,
        Property::UInt(v) => v as f64,
        Property::Float(v) => v as f64,
        Property::Double(v) => v,
        _ => return None,
    })
}

fn index_list(p: &Property) -> Option<Vec<i64>> {
    Some(match p {
        Property::ListChar(v) => v.iter().map(|&i| i as i64).collect(),
        Property::ListUChar(v) => v.iter().map(|&i| i as i64).collect(),
        Property::ListShort(v) => v.iter().map(|&i| i as i64).collect(),
        Property::ListUShort(v) => v.iter().map(|&i| i as i64).collect(),
        Property::ListInt(v) => v.iter().map(|&i| i as i64).collect(),
        Property::ListUInt(v) => v.iter().map(|&i| i as i64).collect(),
        _ => return None,
    })
}

fn read_ply(path: &Path, mut reader: impl BufRead) -> Result<RawMesh, MeshError> {
    let parse_err = |message: String| MeshError::Parse {
        path: path.to_path_buf(),
        line: 0,
        message,
    };
    let ply = Parser::<DefaultElement>::new()
        .read_ply(&mut reader)
        .map_err(|e| parse_err(e.to_string()))?;
    let vertex_elements = ply
        .payload
        .get("vertex")
        .ok_or_else(|| parse_err("missing `vertex` element".into()))?;
    let mut vertices = Vec::with_capacity(vertex_elements.len());
    for (i, el) in vertex_elements.iter().enumerate() {
        let mut xyz = [0.0; 3];
        for (c, key) in xyz.iter_mut().zip(["x", "y", "z"]) {
            *c = el
                .get(key)
                .and_then(scalar)
                .ok_or_else(|| parse_err(format!("vertex {i} lacks numeric `{key}`")))?;
        }
        vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
    }
    let mut faces = Vec::new();
    if let Some(face_elements) = ply.payload.get("face") {
        for (i, el) in face_elements.iter().enumerate() {
            let list = el
                .get("vertex_indices")
                .or_else(|| el.get("vertex_index"))
                .and_then(index_list)
                .ok_or_else(|| parse_err(format!("face {i} lacks a `vertex_indices` list")))?;
            if list.len() < 3 {
                return Err(parse_err(format!("face {i} has fewer than three vertices")));
            }
            faces.push(list);
        }
    }
    Ok((vertices, faces))
}
