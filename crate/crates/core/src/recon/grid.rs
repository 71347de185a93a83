use nalgebra::Vector3;

use super::{OrientedPointCloud, ReconError};

/// Default padding of the grid bounds, as a fraction of the cloud extent.
pub const DEFAULT_PAD: f64 = 0.1;

/// Node layout of a regular grid. Node `(i, j, k)` sits at
/// `min + (i·hx, j·hy, k·hz)`; flat index `i + nx (j + ny k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub res: [usize; 3],
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl GridSpec {
    pub fn new(res: [usize; 3], min: Vector3<f64>, max: Vector3<f64>) -> Result<Self, ReconError> {
        if res.iter().any(|&n| n < 2) {
            return Err(ReconError::Grid(format!("resolution {res:?} must be at least 2 per axis")));
        }
        if !(0..3).all(|a| max[a] > min[a] && min[a].is_finite() && max[a].is_finite()) {
            return Err(ReconError::Grid("bounds must be finite and nonempty".into()));
        }
        Ok(Self { res, min, max })
    }

    pub fn spacing(&self) -> Vector3<f64> {
        Vector3::from_fn(|a, _| (self.max[a] - self.min[a]) / (self.res[a] - 1) as f64)
    }

    pub fn len(&self) -> usize {
        self.res[0] * self.res[1] * self.res[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.res[0] * (j + self.res[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.res[0];
        let j = (idx / self.res[0]) % self.res[1];
        let k = idx / (self.res[0] * self.res[1]);
        [i, j, k]
    }

    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        let h = self.spacing();
        self.min + Vector3::new(i as f64 * h.x, j as f64 * h.y, k as f64 * h.z)
    }

    pub fn is_boundary(&self, i: usize, j: usize, k: usize) -> bool {
        i == 0 || j == 0 || k == 0 || i + 1 == self.res[0] || j + 1 == self.res[1] || k + 1 == self.res[2]
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.spacing().norm()
    }

    /// Lower cell corner and fractional offsets of `p`, clamped into the grid.
    pub fn locate(&self, p: &Vector3<f64>) -> ([usize; 3], [f64; 3]) {
        let h = self.spacing();
        let mut cell = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let u = ((p[a] - self.min[a]) / h[a]).clamp(0.0, (self.res[a] - 1) as f64);
            let c = (u.floor() as usize).min(self.res[a] - 2);
            cell[a] = c;
            frac[a] = u - c as f64;
        }
        (cell, frac)
    }

    /// The 8 nodes around `p` with their trilinear weights.
    pub fn trilinear(&self, p: &Vector3<f64>) -> [(usize, f64); 8] {
        let (c, f) = self.locate(p);
        let mut out = [(0usize, 0.0f64); 8];
        for (n, slot) in out.iter_mut().enumerate() {
            let (dx, dy, dz) = (n & 1, (n >> 1) & 1, (n >> 2) & 1);
            let w = (if dx == 1 { f[0] } else { 1.0 - f[0] })
                * (if dy == 1 { f[1] } else { 1.0 - f[1] })
                * (if dz == 1 { f[2] } else { 1.0 - f[2] });
            *slot = (self.index(c[0] + dx, c[1] + dy, c[2] + dz), w);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(Vector3<f64>) -> f64) -> Self {
        let mut g = Self::zeros(spec);
        for idx in 0..spec.len() {
            let [i, j, k] = spec.coords(idx);
            g.values[idx] = f(spec.node_position(i, j, k));
        }
        g
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.spec.index(i, j, k)]
    }

    /// Trilinear interpolation, clamped to the grid.
    pub fn sample(&self, p: &Vector3<f64>) -> f64 {
        self.spec.trilinear(p).iter().map(|&(i, w)| self.values[i] * w).sum()
    }
}

/// Node-sampled vector field plus the total trilinear weight deposited at
/// each node.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorGrid {
    pub spec: GridSpec,
    pub values: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
}

impl VectorGrid {
    pub fn constant(spec: GridSpec, v: Vector3<f64>) -> Self {
        Self {
            spec,
            values: vec![v; spec.len()],
            weights: vec![1.0; spec.len()],
        }
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        self.values[self.spec.index(i, j, k)]
    }
}

/// Deposits each normal into its 8 surrounding nodes with trilinear weights,
/// then divides every node by its total weight.
pub fn splat_vector_field(
    cloud: &OrientedPointCloud,
    res: [usize; 3],
    pad: f64,
) -> Result<VectorGrid, ReconError> {
    let (lo, hi) = cloud
        .bounds()
        .ok_or_else(|| ReconError::Cloud("point cloud is empty".into()))?;
    if !(pad >= 0.0 && pad.is_finite()) {
        return Err(ReconError::Grid(format!("padding {pad} must be nonnegative")));
    }
    let extent = hi - lo;
    let fallback = extent.max().max(1e-3);
    let margin = Vector3::from_fn(|a, _| {
        let e = if extent[a] > 0.0 { extent[a] } else { fallback };
        e * pad.max(1e-3)
    });
    let spec = GridSpec::new(res, lo - margin, hi + margin)?;
    Ok(deposit(cloud, spec))
}

pub(super) fn deposit(cloud: &OrientedPointCloud, spec: GridSpec) -> VectorGrid {
    let mut sums = vec![Vector3::zeros(); spec.len()];
    let mut weights = vec![0.0; spec.len()];
    for (p, n) in cloud.points().iter().zip(cloud.normals()) {
        for (idx, w) in spec.trilinear(p) {
            sums[idx] += n * w;
            weights[idx] += w;
        }
    }
    let values = sums
        .iter()
        .zip(&weights)
        .map(|(s, &w)| if w > 0.0 { s / w } else { Vector3::zeros() })
        .collect();
    VectorGrid { spec, values, weights }
}

/// Central-difference divergence at interior nodes; zero on the boundary.
pub fn divergence(field: &VectorGrid) -> ScalarGrid {
    let spec = field.spec;
    let h = spec.spacing();
    let [nx, ny, nz] = spec.res;
    let mut out = ScalarGrid::zeros(spec);
    for k in 1..nz - 1 {
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let dx = (field.at(i + 1, j, k).x - field.at(i - 1, j, k).x) / (2.0 * h.x);
                let dy = (field.at(i, j + 1, k).y - field.at(i, j - 1, k).y) / (2.0 * h.y);
                let dz = (field.at(i, j, k + 1).z - field.at(i, j, k - 1).z) / (2.0 * h.z);
                out.values[spec.index(i, j, k)] = dx + dy + dz;
            }
        }
    }
    out
}
