//! Binary little-endian splat PLY files.
//!
//! Layout per vertex: `x y z f_dc_0..2 f_rest_* opacity scale_0..2 rot_0..3`.
//! Opacity is stored as a logit, scales as natural logs, and `rot` as an
//! unnormalized (w, x, y, z) quaternion. `f_rest` is channel-major.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{Quaternion, Vector3};

use super::gaussian::{sh_basis_count, SplatGaussian, SplatSet, MAX_SH_DEGREE};
use super::SplatError;
use crate::ply::{read_header, PlyEncoding, PlyError, PropertyKind};

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn field_names(degree: u8) -> Vec<String> {
    let rest = 3 * (sh_basis_count(degree) - 1);
    let mut names: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
    names.extend((0..3).map(|i| format!("f_dc_{i}")));
    names.extend((0..rest).map(|i| format!("f_rest_{i}")));
    names.push("opacity".into());
    names.extend((0..3).map(|i| format!("scale_{i}")));
    names.extend((0..4).map(|i| format!("rot_{i}")));
    names
}

pub fn load_splats(path: &Path) -> Result<SplatSet, SplatError> {
    let file = File::open(path).map_err(|e| SplatError::Io(path.display().to_string(), e))?;
    read_splats(&mut BufReader::new(file))
}

pub fn read_splats<R: BufRead>(r: &mut R) -> Result<SplatSet, SplatError> {
    let header = read_header(r)?;
    if header.encoding != PlyEncoding::BinaryLittleEndian {
        return Err(PlyError::Format("splat files must be binary_little_endian".into()).into());
    }
    if let Some(other) = header.elements.iter().find(|e| e.name != "vertex") {
        return Err(PlyError::Format(format!("unexpected element '{}'", other.name)).into());
    }
    let vertex = header
        .element("vertex")
        .ok_or_else(|| PlyError::Format("missing element 'vertex'".into()))?;

    let rest_count = vertex
        .properties
        .iter()
        .filter(|p| p.name.starts_with("f_rest_"))
        .count();
    let degree = (0..=MAX_SH_DEGREE)
        .find(|&d| 3 * (sh_basis_count(d) - 1) == rest_count)
        .ok_or_else(|| {
            PlyError::Format(format!("f_rest count {rest_count} matches no SH degree up to 3"))
        })?;

    let expected = field_names(degree);
    let present: HashSet<&str> = vertex.properties.iter().map(|p| p.name.as_str()).collect();
    if let Some(missing) = expected.iter().find(|n| !present.contains(n.as_str())) {
        return Err(PlyError::Format(format!("missing field '{missing}'")).into());
    }
    let wanted: HashSet<&str> = expected.iter().map(String::as_str).collect();
    if let Some(extra) = vertex.properties.iter().find(|p| !wanted.contains(p.name.as_str())) {
        return Err(PlyError::Format(format!("unexpected field '{}'", extra.name)).into());
    }
    let mut types = Vec::with_capacity(vertex.properties.len());
    for p in &vertex.properties {
        match p.kind {
            PropertyKind::Scalar(t) => types.push(t),
            PropertyKind::List { .. } => {
                return Err(PlyError::Format(format!("field '{}' must be scalar", p.name)).into());
            }
        }
    }
    // Column of each expected field in file order.
    let columns: Vec<usize> = expected
        .iter()
        .map(|n| vertex.property_index(n).expect("checked above"))
        .collect();
    let record_size: usize = types.iter().map(|t| t.size()).sum();
    let offsets: Vec<usize> = types
        .iter()
        .scan(0, |acc, t| {
            let o = *acc;
            *acc += t.size();
            Some(o)
        })
        .collect();

    let basis = sh_basis_count(degree);
    let mut set = SplatSet::new(degree)?;
    let mut buf = vec![0u8; record_size];
    let mut values = vec![0.0f64; expected.len()];
    for index in 0..vertex.count {
        r.read_exact(&mut buf)
            .map_err(|e| PlyError::Data(format!("record {index}: {e}")))?;
        for (slot, &col) in values.iter_mut().zip(&columns) {
            *slot = types[col].read_le(&buf[offsets[col]..]);
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(PlyError::Data(format!(
                "record {index}: non-finite value in field '{}'",
                expected[k]
            ))
            .into());
        }
        let mut sh = vec![0.0; 3 * basis];
        sh[..3].copy_from_slice(&values[3..6]);
        for j in 0..3 * (basis - 1) {
            let channel = j / (basis - 1);
            let k = 1 + j % (basis - 1);
            sh[3 * k + channel] = values[6 + j];
        }
        let o = 6 + 3 * (basis - 1);
        let q = Quaternion::new(values[o + 4], values[o + 5], values[o + 6], values[o + 7]);
        if q.norm() == 0.0 {
            return Err(PlyError::Data(format!("record {index}: zero-length rotation")).into());
        }
        let g = SplatGaussian {
            opacity: sigmoid(values[o]),
            position: Vector3::new(values[0], values[1], values[2]),
            orientation: q.normalize(),
            scale: Vector3::new(values[o + 1].exp(), values[o + 2].exp(), values[o + 3].exp()),
            sh,
        };
        set.push(g)
            .map_err(|e| PlyError::Data(format!("record {index}: {e}")))?;
    }
    Ok(set)
}

pub fn save_splats(path: &Path, set: &SplatSet) -> Result<(), SplatError> {
    let file = File::create(path).map_err(|e| SplatError::Io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    write_splats(&mut w, set).map_err(|e| SplatError::Io(path.display().to_string(), e))?;
    w.flush().map_err(|e| SplatError::Io(path.display().to_string(), e))
}

pub fn write_splats<W: Write>(w: &mut W, set: &SplatSet) -> std::io::Result<()> {
    let degree = set.sh_degree();
    let basis = sh_basis_count(degree);
    writeln!(w, "ply")?;
    writeln!(w, "format binary_little_endian 1.0")?;
    writeln!(w, "element vertex {}", set.len())?;
    for name in field_names(degree) {
        writeln!(w, "property float {name}")?;
    }
    writeln!(w, "end_header")?;
    let mut put = |v: f64| w.write_all(&(v as f32).to_le_bytes());
    for g in set {
        for v in g.position.iter() {
            put(*v)?;
        }
        for c in 0..3 {
            put(g.sh[c])?;
        }
        for c in 0..3 {
            for k in 1..basis {
                put(g.sh[3 * k + c])?;
            }
        }
        put(logit(g.opacity))?;
        for s in g.scale.iter() {
            put(s.ln())?;
        }
        let q = g.orientation;
        for v in [q.w, q.i, q.j, q.k] {
            put(v)?;
        }
    }
    Ok(())
}
