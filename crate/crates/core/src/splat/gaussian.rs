use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

use super::SplatError;

/// Number of spherical-harmonic basis functions for a given degree.
pub const fn sh_basis_count(degree: u8) -> usize {
    let n = degree as usize + 1;
    n * n
}

/// Total SH coefficient count (three color channels).
pub const fn sh_coeff_count(degree: u8) -> usize {
    3 * sh_basis_count(degree)
}

pub const MAX_SH_DEGREE: u8 = 3;

/// A single 3D Gaussian splat.
///
/// `sh` is laid out basis-major: coefficient `k` of channel `c` lives at
/// `sh[3 * k + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplatGaussian {
    pub opacity: f64,
    pub position: Vector3<f64>,
    /// Orientation quaternion (w, x, y, z).
    pub orientation: Quaternion<f64>,
    pub scale: Vector3<f64>,
    pub sh: Vec<f64>,
}

impl SplatGaussian {
    /// Degree-0 splat with a given base color. The DC coefficients are chosen
    /// so that the evaluated color equals `rgb` for every view direction.
    pub fn with_color(
        position: Vector3<f64>,
        scale: Vector3<f64>,
        orientation: Quaternion<f64>,
        opacity: f64,
        rgb: [f64; 3],
    ) -> Self {
        let sh = rgb.iter().map(|&c| super::sh::rgb_to_dc(c)).collect();
        Self {
            opacity,
            position,
            orientation,
            scale,
            sh,
        }
    }

    pub fn isotropic(position: Vector3<f64>, sigma: f64, opacity: f64, rgb: [f64; 3]) -> Self {
        Self::with_color(
            position,
            Vector3::repeat(sigma),
            Quaternion::identity(),
            opacity,
            rgb,
        )
    }

    pub fn unit_orientation(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_quaternion(self.orientation)
    }

    /// Rotation matrix of the normalized orientation.
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        quat_to_matrix(&self.orientation.normalize())
    }

    /// World-space covariance R diag(s²) Rᵀ.
    pub fn covariance(&self) -> Matrix3<f64> {
        let m = self.rotation_matrix() * Matrix3::from_diagonal(&self.scale);
        m * m.transpose()
    }

    pub fn validate(&self, degree: u8) -> Result<(), SplatError> {
        if !(self.opacity > 0.0 && self.opacity < 1.0) {
            return Err(SplatError::Invariant(format!(
                "opacity {} outside (0, 1)",
                self.opacity
            )));
        }
        if (self.orientation.norm() - 1.0).abs() > 1e-6 {
            return Err(SplatError::Invariant(format!(
                "orientation norm {} is not 1",
                self.orientation.norm()
            )));
        }
        if self.scale.iter().any(|&s| !(s > 0.0)) {
            return Err(SplatError::Invariant(format!(
                "non-positive scale {:?}",
                self.scale.as_slice()
            )));
        }
        if self.sh.len() != sh_coeff_count(degree) {
            return Err(SplatError::Invariant(format!(
                "expected {} SH coefficients for degree {degree}, found {}",
                sh_coeff_count(degree),
                self.sh.len()
            )));
        }
        let finite = self.position.iter().all(|v| v.is_finite())
            && self.sh.iter().all(|v| v.is_finite());
        if !finite {
            return Err(SplatError::Invariant("non-finite parameter".into()));
        }
        Ok(())
    }
}

/// Rotation matrix of a (not necessarily unit) quaternion using the
/// homogeneous formula for unit inputs. Callers normalize first.
pub fn quat_to_matrix(q: &Quaternion<f64>) -> Matrix3<f64> {
    let (w, x, y, z) = (q.w, q.i, q.j, q.k);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Ordered collection of splats sharing one SH degree. Insertion order is the
/// depth-sort tie-break key.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SplatSet {
    splats: Vec<SplatGaussian>,
    sh_degree: u8,
}

impl SplatSet {
    pub fn new(sh_degree: u8) -> Result<Self, SplatError> {
        if sh_degree > MAX_SH_DEGREE {
            return Err(SplatError::Invariant(format!(
                "SH degree {sh_degree} exceeds {MAX_SH_DEGREE}"
            )));
        }
        Ok(Self {
            splats: Vec::new(),
            sh_degree,
        })
    }

    pub fn from_splats(sh_degree: u8, splats: Vec<SplatGaussian>) -> Result<Self, SplatError> {
        let mut set = Self::new(sh_degree)?;
        for g in splats {
            set.push(g)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, g: SplatGaussian) -> Result<(), SplatError> {
        g.validate(self.sh_degree)
            .map_err(|e| SplatError::Invariant(format!("splat {}: {e}", self.splats.len())))?;
        self.splats.push(g);
        Ok(())
    }

    pub fn sh_degree(&self) -> u8 {
        self.sh_degree
    }

    pub fn len(&self) -> usize {
        self.splats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splats.is_empty()
    }

    pub fn splats(&self) -> &[SplatGaussian] {
        &self.splats
    }

    /// Mutable access for optimizers. Callers are responsible for keeping the
    /// type invariants.
    pub fn splats_mut(&mut self) -> &mut [SplatGaussian] {
        &mut self.splats
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SplatGaussian> {
        self.splats.iter()
    }

    /// Appends all splats of `other`, promoting both sets to the larger SH
    /// degree (missing coefficients are zero).
    pub fn extend_from(&mut self, other: &SplatSet) {
        let degree = self.sh_degree.max(other.sh_degree);
        self.promote(degree);
        let n = sh_coeff_count(degree);
        for g in &other.splats {
            let mut g = g.clone();
            g.sh.resize(n, 0.0);
            self.splats.push(g);
        }
    }

    fn promote(&mut self, degree: u8) {
        if degree <= self.sh_degree {
            return;
        }
        let n = sh_coeff_count(degree);
        for g in &mut self.splats {
            g.sh.resize(n, 0.0);
        }
        self.sh_degree = degree;
    }
}

impl<'a> IntoIterator for &'a SplatSet {
    type Item = &'a SplatGaussian;
    type IntoIter = std::slice::Iter<'a, SplatGaussian>;

    fn into_iter(self) -> Self::IntoIter {
        self.splats.iter()
    }
}
