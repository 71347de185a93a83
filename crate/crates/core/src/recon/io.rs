//! Point-cloud readers (PLY with x, y, z and optional nx, ny, nz; XYZ text
//! with 3 or 6 columns) and mesh readers (OBJ, PLY).

use std::io::{BufRead, BufReader};
use std::path::Path;

use nalgebra::Vector3;

use super::{ReconError, TriangleMesh};
use crate::ply::{read_header, Header, PlyEncoding, PropertyKind};

/// Raw points with optional normals as read from disk.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointData {
    pub points: Vec<Vector3<f64>>,
    pub normals: Option<Vec<Vector3<f64>>>,
}

fn parse_err(msg: impl Into<String>) -> ReconError {
    ReconError::Parse(msg.into())
}

pub fn load_points(path: &Path) -> Result<PointData, ReconError> {
    let file = std::fs::File::open(path).map_err(|source| ReconError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut r = BufReader::new(file);
    let is_ply = r.fill_buf().map(|b| b.starts_with(b"ply")).unwrap_or(false);
    if is_ply {
        read_ply_points(&mut r)
    } else {
        read_xyz(r)
    }
}

pub fn read_xyz<R: BufRead>(r: R) -> Result<PointData, ReconError> {
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut columns = None;
    for (ln, line) in r.lines().enumerate() {
        let line = line.map_err(|e| parse_err(format!("line {}: {e}", ln + 1)))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| parse_err(format!("line {}: {e}", ln + 1)))?;
        if vals.len() != 3 && vals.len() != 6 {
            return Err(parse_err(format!("line {}: expected 3 or 6 columns, got {}", ln + 1, vals.len())));
        }
        match columns {
            None => columns = Some(vals.len()),
            Some(c) if c != vals.len() => {
                return Err(parse_err(format!("line {}: column count changed from {c}", ln + 1)))
            }
            _ => {}
        }
        points.push(Vector3::new(vals[0], vals[1], vals[2]));
        if vals.len() == 6 {
            normals.push(Vector3::new(vals[3], vals[4], vals[5]));
        }
    }
    let has_normals = columns == Some(6);
    Ok(PointData {
        points,
        normals: has_normals.then_some(normals),
    })
}

pub fn read_ply_points<R: BufRead>(r: &mut R) -> Result<PointData, ReconError> {
    let header = read_header(r).map_err(|e| parse_err(e.to_string()))?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| parse_err("no vertex element"))?;
    let el = &header.elements[vertex_pos];
    let idx = |n: &str| el.property_index(n);
    let (ix, iy, iz) = match (idx("x"), idx("y"), idx("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(parse_err("vertex element lacks x, y or z")),
    };
    let normal_idx = match (idx("nx"), idx("ny"), idx("nz")) {
        (Some(a), Some(b), Some(c)) => Some((a, b, c)),
        _ => None,
    };
    let mut points = Vec::with_capacity(el.count);
    let mut normals = Vec::with_capacity(if normal_idx.is_some() { el.count } else { 0 });
    let mut push = |vals: &[f64]| {
        points.push(Vector3::new(vals[ix], vals[iy], vals[iz]));
        if let Some((a, b, c)) = normal_idx {
            normals.push(Vector3::new(vals[a], vals[b], vals[c]));
        }
    };
    match header.encoding {
        PlyEncoding::Ascii => {
            let mut lines = r.lines();
            let skip: usize = header.elements[..vertex_pos].iter().map(|e| e.count).sum();
            for _ in 0..skip {
                lines.next();
            }
            for i in 0..el.count {
                let line = lines
                    .next()
                    .ok_or_else(|| parse_err(format!("vertex {i}: unexpected end of file")))?
                    .map_err(|e| parse_err(e.to_string()))?;
                let vals: Vec<f64> = line
                    .split_whitespace()
                    .map(|s| s.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| parse_err(format!("vertex {i}: {e}")))?;
                if vals.len() < el.properties.len() {
                    return Err(parse_err(format!("vertex {i}: too few values")));
                }
                push(&vals);
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            if vertex_pos != 0 {
                return Err(parse_err("binary PLY must start with the vertex element"));
            }
            let mut types = Vec::new();
            for p in &el.properties {
                match p.kind {
                    PropertyKind::Scalar(t) => types.push(t),
                    PropertyKind::List { .. } => {
                        return Err(parse_err("list properties on vertices are not supported"))
                    }
                }
            }
            let stride: usize = types.iter().map(|t| t.size()).sum();
            let mut buf = vec![0u8; stride];
            let mut vals = vec![0.0; types.len()];
            for i in 0..el.count {
                r.read_exact(&mut buf)
                    .map_err(|e| parse_err(format!("vertex {i}: {e}")))?;
                let mut off = 0;
                for (v, t) in vals.iter_mut().zip(&types) {
                    *v = t.read_le(&buf[off..]);
                    off += t.size();
                }
                push(&vals);
            }
        }
        PlyEncoding::BinaryBigEndian => return Err(parse_err("big-endian PLY is not supported")),
    }
    if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(parse_err(format!("vertex {i} is not finite")));
    }
    Ok(PointData {
        points,
        normals: normal_idx.map(|_| normals),
    })
}

pub fn load_mesh(path: &Path) -> Result<TriangleMesh, ReconError> {
    let file = std::fs::File::open(path).map_err(|source| ReconError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut r = BufReader::new(file);
    let is_ply = r.fill_buf().map(|b| b.starts_with(b"ply")).unwrap_or(false);
    if is_ply {
        read_ply_mesh(&mut r)
    } else {
        read_obj(r)
    }
}

/// Wavefront OBJ: `v` and `f` records; polygons are fan-triangulated and
/// negative (relative) indices are accepted.
pub fn read_obj<R: BufRead>(r: R) -> Result<TriangleMesh, ReconError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (ln, line) in r.lines().enumerate() {
        let line = line.map_err(|e| parse_err(format!("line {}: {e}", ln + 1)))?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| parse_err(format!("line {}: {e}", ln + 1)))?;
                if c.len() != 3 {
                    return Err(parse_err(format!("line {}: vertex needs 3 coordinates", ln + 1)));
                }
                vertices.push(Vector3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in it {
                    let first = tok.split('/').next().unwrap_or("");
                    let v: i64 = first
                        .parse()
                        .map_err(|e| parse_err(format!("line {}: {e}", ln + 1)))?;
                    let n = vertices.len() as i64;
                    let i = if v < 0 { n + v } else { v - 1 };
                    if i < 0 || i >= n {
                        return Err(parse_err(format!("line {}: index {v} out of range", ln + 1)));
                    }
                    idx.push(i as u32);
                }
                if idx.len() < 3 {
                    return Err(parse_err(format!("line {}: face needs 3 vertices", ln + 1)));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
}

fn read_ascii_values<R: BufRead>(r: &mut R, what: &str) -> Result<Vec<f64>, ReconError> {
    let mut line = String::new();
    let n = r.read_line(&mut line).map_err(|e| parse_err(e.to_string()))?;
    if n == 0 {
        return Err(parse_err(format!("{what}: unexpected end of file")));
    }
    line.split_whitespace()
        .map(|s| s.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| parse_err(format!("{what}: {e}")))
}

/// PLY mesh with `vertex` (x, y, z) and `face` (vertex index list)
/// elements, ASCII or binary little-endian.
pub fn read_ply_mesh<R: BufRead>(r: &mut R) -> Result<TriangleMesh, ReconError> {
    let header: Header = read_header(r).map_err(|e| parse_err(e.to_string()))?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let ascii = match header.encoding {
        PlyEncoding::Ascii => true,
        PlyEncoding::BinaryLittleEndian => false,
        PlyEncoding::BinaryBigEndian => return Err(parse_err("big-endian PLY is not supported")),
    };
    for el in &header.elements {
        let xyz = (el.property_index("x"), el.property_index("y"), el.property_index("z"));
        let list = el
            .properties
            .iter()
            .position(|p| p.name == "vertex_indices" || p.name == "vertex_index");
        for i in 0..el.count {
            let what = format!("{} {i}", el.name);
            // Values per property; list properties contribute their items.
            let mut scalars: Vec<f64> = Vec::with_capacity(el.properties.len());
            let mut items: Vec<u32> = Vec::new();
            if ascii {
                let vals = read_ascii_values(r, &what)?;
                let mut k = 0;
                for (pi, p) in el.properties.iter().enumerate() {
                    match p.kind {
                        PropertyKind::Scalar(_) => {
                            scalars.push(*vals.get(k).ok_or_else(|| parse_err(format!("{what}: too few values")))?);
                            k += 1;
                        }
                        PropertyKind::List { .. } => {
                            let n = *vals.get(k).ok_or_else(|| parse_err(format!("{what}: too few values")))? as usize;
                            let slice = vals.get(k + 1..k + 1 + n).ok_or_else(|| parse_err(format!("{what}: short list")))?;
                            if Some(pi) == list {
                                items = slice.iter().map(|&v| v as u32).collect();
                            }
                            scalars.push(f64::NAN);
                            k += 1 + n;
                        }
                    }
                }
            } else {
                for (pi, p) in el.properties.iter().enumerate() {
                    match p.kind {
                        PropertyKind::Scalar(t) => {
                            let mut buf = [0u8; 8];
                            r.read_exact(&mut buf[..t.size()]).map_err(|e| parse_err(format!("{what}: {e}")))?;
                            scalars.push(t.read_le(&buf));
                        }
                        PropertyKind::List { count, item } => {
                            let mut buf = [0u8; 8];
                            r.read_exact(&mut buf[..count.size()]).map_err(|e| parse_err(format!("{what}: {e}")))?;
                            let n = count.read_le(&buf) as usize;
                            let mut vals = Vec::with_capacity(n);
                            for _ in 0..n {
                                r.read_exact(&mut buf[..item.size()]).map_err(|e| parse_err(format!("{what}: {e}")))?;
                                vals.push(item.read_le(&buf) as u32);
                            }
                            if Some(pi) == list {
                                items = vals;
                            }
                            scalars.push(f64::NAN);
                        }
                    }
                }
            }
            if el.name == "vertex" {
                let (Some(x), Some(y), Some(z)) = xyz else {
                    return Err(parse_err("vertex element lacks x, y or z"));
                };
                vertices.push(Vector3::new(scalars[x], scalars[y], scalars[z]));
            } else if el.name == "face" {
                if items.len() < 3 {
                    return Err(parse_err(format!("{what}: face needs 3 vertices")));
                }
                for k in 1..items.len() - 1 {
                    triangles.push([items[0], items[k], items[k + 1]]);
                }
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xyz_with_and_without_normals() {
        let d = read_xyz("# c\n0 0 0\n1,2,3\n".as_bytes()).unwrap();
        assert_eq!(d.points.len(), 2);
        assert!(d.normals.is_none());
        let d = read_xyz("0 0 0 0 0 1\n1 1 1 1 0 0\n".as_bytes()).unwrap();
        assert_eq!(d.normals.unwrap()[1], Vector3::x());
        assert!(read_xyz("0 0\n".as_bytes()).is_err());
        assert!(read_xyz("0 0 0\n0 0 0 1 0 0\n".as_bytes()).is_err());
    }

    #[test]
    fn ascii_ply_points() {
        let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty float nx\nproperty float ny\nproperty float nz\nend_header\n0 0 0 0 0 1\n1 2 3 1 0 0\n";
        let d = read_ply_points(&mut text.as_bytes()).unwrap();
        assert_eq!(d.points[1], Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(d.normals.unwrap()[0], Vector3::z());
    }

    #[test]
    fn mesh_round_trips_through_obj_and_ply() {
        let v = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
        ];
        let m = TriangleMesh::new(v, vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]).unwrap();
        let mut obj = Vec::new();
        m.write_obj(&mut obj).unwrap();
        assert_eq!(read_obj(obj.as_slice()).unwrap(), m);
        let mut ply = Vec::new();
        m.write_ply(&mut ply).unwrap();
        assert_eq!(read_ply_mesh(&mut ply.as_slice()).unwrap(), m);
        let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 -1\n";
        assert_eq!(read_obj(quad.as_bytes()).unwrap().triangles().len(), 2);
        let ascii = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        assert_eq!(read_ply_mesh(&mut ascii.as_bytes()).unwrap().triangles(), &[[0, 1, 2]]);
    }

    #[test]
    fn binary_ply_points() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty double x\nproperty float y\nproperty float z\nend_header\n".to_vec();
        bytes.extend(1.5f64.to_le_bytes());
        bytes.extend(2.0f32.to_le_bytes());
        bytes.extend((-1.0f32).to_le_bytes());
        let d = read_ply_points(&mut bytes.as_slice()).unwrap();
        assert_eq!(d.points, vec![Vector3::new(1.5, 2.0, -1.0)]);
        assert!(d.normals.is_none());
    }
}
