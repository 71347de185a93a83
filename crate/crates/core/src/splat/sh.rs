//! Real spherical-harmonic color evaluation, degrees 0 through 3.
//!
//! Basis ordering and signs follow the usual splatting convention
//! (Condon-Shortley phase, `m` from `-l` to `l` within each band).

use nalgebra::Vector3;

use super::gaussian::{sh_basis_count, SplatGaussian};

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
const SH_C1: f64 = 0.488_602_511_902_919_9;
const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Offset added to the SH sum before clamping.
pub const COLOR_OFFSET: f64 = 0.5;

/// DC coefficient producing a view-independent channel value `c`.
pub fn rgb_to_dc(c: f64) -> f64 {
    (c - COLOR_OFFSET) / SH_C0
}

/// Basis values `Y_k(d)` for `k < (degree+1)²`; unused slots are zero.
pub fn basis(degree: u8, d: &Vector3<f64>) -> [f64; 16] {
    let (x, y, z) = (d.x, d.y, d.z);
    let mut out = [0.0; 16];
    out[0] = SH_C0;
    if degree == 0 {
        return out;
    }
    out[1] = -SH_C1 * y;
    out[2] = SH_C1 * z;
    out[3] = -SH_C1 * x;
    if degree == 1 {
        return out;
    }
    let (xx, yy, zz) = (x * x, y * y, z * z);
    out[4] = SH_C2[0] * x * y;
    out[5] = SH_C2[1] * y * z;
    out[6] = SH_C2[2] * (2.0 * zz - xx - yy);
    out[7] = SH_C2[3] * x * z;
    out[8] = SH_C2[4] * (xx - yy);
    if degree == 2 {
        return out;
    }
    out[9] = SH_C3[0] * y * (3.0 * xx - yy);
    out[10] = SH_C3[1] * x * y * z;
    out[11] = SH_C3[2] * y * (4.0 * zz - xx - yy);
    out[12] = SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
    out[13] = SH_C3[4] * x * (4.0 * zz - xx - yy);
    out[14] = SH_C3[5] * z * (xx - yy);
    out[15] = SH_C3[6] * x * (xx - 3.0 * yy);
    out
}

/// Partial derivatives of each basis function with respect to the (unnormalized)
/// direction components, treating x, y, z as independent.
pub fn basis_gradient(degree: u8, d: &Vector3<f64>) -> [Vector3<f64>; 16] {
    let (x, y, z) = (d.x, d.y, d.z);
    let mut g = [Vector3::zeros(); 16];
    if degree == 0 {
        return g;
    }
    g[1] = Vector3::new(0.0, -SH_C1, 0.0);
    g[2] = Vector3::new(0.0, 0.0, SH_C1);
    g[3] = Vector3::new(-SH_C1, 0.0, 0.0);
    if degree == 1 {
        return g;
    }
    let (xx, yy, zz) = (x * x, y * y, z * z);
    g[4] = SH_C2[0] * Vector3::new(y, x, 0.0);
    g[5] = SH_C2[1] * Vector3::new(0.0, z, y);
    g[6] = SH_C2[2] * Vector3::new(-2.0 * x, -2.0 * y, 4.0 * z);
    g[7] = SH_C2[3] * Vector3::new(z, 0.0, x);
    g[8] = SH_C2[4] * Vector3::new(2.0 * x, -2.0 * y, 0.0);
    if degree == 2 {
        return g;
    }
    g[9] = SH_C3[0] * Vector3::new(6.0 * x * y, 3.0 * xx - 3.0 * yy, 0.0);
    g[10] = SH_C3[1] * Vector3::new(y * z, x * z, x * y);
    g[11] = SH_C3[2] * Vector3::new(-2.0 * x * y, 4.0 * zz - xx - 3.0 * yy, 8.0 * y * z);
    g[12] = SH_C3[3] * Vector3::new(-6.0 * x * z, -6.0 * y * z, 6.0 * zz - 3.0 * xx - 3.0 * yy);
    g[13] = SH_C3[4] * Vector3::new(4.0 * zz - 3.0 * xx - yy, -2.0 * x * y, 8.0 * x * z);
    g[14] = SH_C3[5] * Vector3::new(2.0 * x * z, -2.0 * y * z, xx - yy);
    g[15] = SH_C3[6] * Vector3::new(3.0 * xx - 3.0 * yy, -6.0 * x * y, 0.0);
    g
}

/// Evaluated color before clamping, per channel.
pub fn raw_color(g: &SplatGaussian, degree: u8, view_dir: &Vector3<f64>) -> [f64; 3] {
    let y = basis(degree, view_dir);
    let mut rgb = [COLOR_OFFSET; 3];
    for (k, yk) in y.iter().enumerate().take(sh_basis_count(degree)) {
        for (c, v) in rgb.iter_mut().enumerate() {
            *v += g.sh[3 * k + c] * yk;
        }
    }
    rgb
}

/// View-dependent RGB color of a splat, clamped to [0, 1].
pub fn eval_color(g: &SplatGaussian, degree: u8, view_dir: &Vector3<f64>) -> [f64; 3] {
    raw_color(g, degree, view_dir).map(|v| v.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Quaternion;

    fn splat(sh: Vec<f64>) -> SplatGaussian {
        SplatGaussian {
            opacity: 0.5,
            position: Vector3::zeros(),
            orientation: Quaternion::identity(),
            scale: Vector3::repeat(0.1),
            sh,
        }
    }

    #[test]
    fn dc_only_color() {
        let k = 0.7;
        let g = splat(vec![k, -k, 0.0]);
        let c = eval_color(&g, 0, &Vector3::z());
        assert!((c[0] - (k * 0.28209479 + 0.5)).abs() < 1e-8);
        assert!((c[1] - (-k * 0.28209479 + 0.5)).abs() < 1e-8);
        assert_eq!(c[2], 0.5);
    }

    #[test]
    fn zero_coefficients_give_mid_gray() {
        let g = splat(vec![0.0; 48]);
        assert_eq!(eval_color(&g, 3, &Vector3::x()), [0.5; 3]);
    }

    #[test]
    fn clamps_to_unit_range() {
        let g = splat(vec![10.0, -10.0, 0.0]);
        assert_eq!(eval_color(&g, 0, &Vector3::y()), [1.0, 0.0, 0.5]);
    }

    #[test]
    fn rgb_to_dc_inverts() {
        let g = splat(vec![rgb_to_dc(0.2), rgb_to_dc(0.9), rgb_to_dc(0.5)]);
        let c = eval_color(&g, 0, &Vector3::x());
        for (a, b) in c.iter().zip([0.2, 0.9, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_gradient_matches_central_differences() {
        let d = Vector3::new(0.3, -0.5, 0.8);
        let h = 1e-6;
        let g = basis_gradient(3, &d);
        for axis in 0..3 {
            let mut p = d;
            let mut m = d;
            p[axis] += h;
            m[axis] -= h;
            let (bp, bm) = (basis(3, &p), basis(3, &m));
            for k in 0..16 {
                let fd = (bp[k] - bm[k]) / (2.0 * h);
                assert!((fd - g[k][axis]).abs() < 1e-7, "k={k} axis={axis}");
            }
        }
    }
}
