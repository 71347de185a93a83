use std::collections::HashMap;
use std::io::Write;

use nalgebra::Vector3;

use super::ReconError;
use crate::splat::RigidTransform;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[u32; 3]>,
}

/// Edge incidence summary of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EdgeReport {
    pub edges: usize,
    /// Edges used by exactly one triangle.
    pub boundary: usize,
    /// Edges used by more than two triangles.
    pub non_manifold: usize,
    /// Interior edges traversed in the same direction by both triangles.
    pub misoriented: usize,
}

impl EdgeReport {
    pub fn is_watertight(&self) -> bool {
        self.boundary == 0 && self.non_manifold == 0 && self.misoriented == 0
    }
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self, ReconError> {
        let n = vertices.len() as u32;
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(ReconError::Mesh(format!("triangle {t:?} indexes past {n} vertices")));
        }
        if !vertices.iter().all(|v| v.iter().all(|c| c.is_finite())) {
            return Err(ReconError::Mesh("non-finite vertex".into()));
        }
        let mut m = Self { vertices, triangles };
        m.remove_degenerate(1e-12);
        Ok(m)
    }

    pub(super) fn from_parts_unchecked(vertices: Vec<Vector3<f64>>, triangles: Vec<[u32; 3]>) -> Self {
        Self { vertices, triangles }
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    fn corners(&self, t: usize) -> [Vector3<f64>; 3] {
        self.triangles[t].map(|i| self.vertices[i as usize])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Unit normal by the right-hand rule.
    pub fn face_normal(&self, t: usize) -> Vector3<f64> {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a)).normalize()
    }

    /// Drops triangles with repeated indices or area at most `eps`.
    pub(super) fn remove_degenerate(&mut self, eps: f64) {
        let verts = &self.vertices;
        self.triangles.retain(|&[a, b, c]| {
            if a == b || b == c || a == c {
                return false;
            }
            let (pa, pb, pc) = (verts[a as usize], verts[b as usize], verts[c as usize]);
            0.5 * (pb - pa).cross(&(pc - pa)).norm() > eps
        });
    }

    pub fn edge_report(&self) -> EdgeReport {
        let mut uses: HashMap<(u32, u32), (u32, i32)> = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let dir = if a < b { 1 } else { -1 };
                let entry = uses.entry(key).or_insert((0, 0));
                entry.0 += 1;
                entry.1 += dir;
            }
        }
        let mut r = EdgeReport {
            edges: uses.len(),
            ..EdgeReport::default()
        };
        for (count, dir) in uses.values() {
            match count {
                1 => r.boundary += 1,
                2 if *dir != 0 => r.misoriented += 1,
                2 => {}
                _ => r.non_manifold += 1,
            }
        }
        r
    }

    /// Triangle-connected components, each as a list of triangle indices,
    /// largest first.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for t in &self.triangles {
            let a = find(&mut parent, t[0] as usize);
            for &v in &t[1..] {
                let b = find(&mut parent, v as usize);
                if a != b {
                    parent[b] = a;
                }
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, t) in self.triangles.iter().enumerate() {
            let root = find(&mut parent, t[0] as usize);
            groups.entry(root).or_default().push(i);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        out
    }

    /// Keeps components with at least `min_triangles` triangles and drops
    /// unreferenced vertices. Returns the number of components removed.
    pub fn remove_small_components(&mut self, min_triangles: usize) -> usize {
        let comps = self.components();
        let mut keep = vec![false; self.triangles.len()];
        let mut removed = 0;
        for c in &comps {
            if c.len() >= min_triangles {
                for &t in c {
                    keep[t] = true;
                }
            } else {
                removed += 1;
            }
        }
        let mut i = 0;
        self.triangles.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        self.compact();
        removed
    }

    fn compact(&mut self) {
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut verts = Vec::new();
        for t in &mut self.triangles {
            for v in t.iter_mut() {
                let old = *v as usize;
                if remap[old] == u32::MAX {
                    remap[old] = verts.len() as u32;
                    verts.push(self.vertices[old]);
                }
                *v = remap[old];
            }
        }
        self.vertices = verts;
    }

    /// Enclosed volume by the divergence theorem; positive for outward
    /// facing closed meshes.
    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    pub fn flip_orientation(&mut self) {
        for t in &mut self.triangles {
            t.swap(1, 2);
        }
    }

    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| t.apply_point(v)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    pub fn bounds(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p))))
    }

    pub fn write_obj<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# {} vertices, {} triangles", self.vertices.len(), self.triangles.len())?;
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
        }
        for t in &self.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }

    /// Binary little-endian PLY with float vertices and uchar-counted
    /// int face lists.
    pub fn write_ply<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(
            w,
            "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
            self.vertices.len(),
            self.triangles.len()
        )?;
        for v in &self.vertices {
            for c in v.iter() {
                w.write_all(&(*c as f32).to_le_bytes())?;
            }
        }
        for t in &self.triangles {
            w.write_all(&[3u8])?;
            for &i in t {
                w.write_all(&(i as i32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), ReconError> {
        let io_err = |source| ReconError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = std::fs::File::create(path).map_err(io_err)?;
        let w = std::io::BufWriter::new(file);
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        match ext.to_ascii_lowercase().as_str() {
            "obj" => self.write_obj(w),
            _ => self.write_ply(w),
        }
        .map_err(io_err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> TriangleMesh {
        let v = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
        ];
        TriangleMesh::new(v, vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]).unwrap()
    }

    #[test]
    fn tetrahedron_is_closed_with_positive_volume() {
        let m = tetra();
        assert!(m.edge_report().is_watertight());
        assert!((m.signed_volume() - 1.0 / 6.0).abs() < 1e-12);
        let mut f = m.clone();
        f.flip_orientation();
        assert!((f.signed_volume() + 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn missing_face_is_reported() {
        let mut m = tetra();
        m.triangles.pop();
        let r = m.edge_report();
        assert_eq!(r.boundary, 3);
        assert!(!r.is_watertight());
    }

    #[test]
    fn rejects_out_of_range_and_drops_degenerate() {
        assert!(TriangleMesh::new(vec![Vector3::zeros()], vec![[0, 1, 2]]).is_err());
        let v = vec![Vector3::zeros(), Vector3::x(), Vector3::x() * 2.0];
        let m = TriangleMesh::new(v, vec![[0, 1, 2]]).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn small_components_are_removed() {
        let mut m = tetra();
        let shift = Vector3::new(5.0, 0.0, 0.0);
        let base = m.vertices.len() as u32;
        let extra: Vec<_> = m.vertices.iter().map(|v| v + shift).collect();
        m.vertices.extend(extra);
        m.triangles.push([base, base + 1, base + 2]);
        assert_eq!(m.components().len(), 2);
        assert_eq!(m.remove_small_components(2), 1);
        assert_eq!(m.triangles.len(), 4);
        assert_eq!(m.vertices.len(), 4);
    }

    #[test]
    fn obj_and_ply_output() {
        let m = tetra();
        let mut obj = Vec::new();
        m.write_obj(&mut obj).unwrap();
        let text = String::from_utf8(obj).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 4);
        assert!(text.contains("f 1 3 2"));
        let mut ply = Vec::new();
        m.write_ply(&mut ply).unwrap();
        let header_end = ply.windows(11).position(|w| w == b"end_header\n").unwrap() + 11;
        assert_eq!(ply.len() - header_end, 4 * 12 + 4 * 13);
    }
}
