//! Analytic gradients of the L2 photometric loss through alpha compositing,
//! the perspective projection of the covariance, and SH color evaluation.
//! The alpha cutoff and view culling act as fixed gates.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Quaternion, Vector2, Vector3};

use super::OptimError;
use crate::image::ImageBuffer;
use crate::splat::sh::{basis, basis_gradient, raw_color};
use crate::splat::{
    perspective_jacobian, project_sorted, quat_to_matrix, sh_basis_count, PinholeCamera,
    ProjectedSplat, SplatGaussian, SplatSet,
};

/// Loss partials for one splat with respect to its optimization parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SplatGrad {
    pub position: Vector3<f64>,
    pub log_scale: Vector3<f64>,
    /// (w, x, y, z), tangent to the unit sphere at the current orientation.
    pub orientation: Quaternion<f64>,
    pub opacity_logit: f64,
    pub sh: Vec<f64>,
}

impl SplatGrad {
    pub fn zeros(sh_len: usize) -> Self {
        Self {
            position: Vector3::zeros(),
            log_scale: Vector3::zeros(),
            orientation: Quaternion::new(0.0, 0.0, 0.0, 0.0),
            opacity_logit: 0.0,
            sh: vec![0.0; sh_len],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.position == Vector3::zeros()
            && self.log_scale == Vector3::zeros()
            && self.orientation.coords == nalgebra::Vector4::zeros()
            && self.opacity_logit == 0.0
            && self.sh.iter().all(|&v| v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.log_scale.iter().all(|v| v.is_finite())
            && self.orientation.coords.iter().all(|v| v.is_finite())
            && self.opacity_logit.is_finite()
            && self.sh.iter().all(|v| v.is_finite())
    }

    fn add_scaled(&mut self, other: &SplatGrad, w: f64) {
        self.position += other.position * w;
        self.log_scale += other.log_scale * w;
        self.orientation.coords += other.orientation.coords * w;
        self.opacity_logit += other.opacity_logit * w;
        for (a, b) in self.sh.iter_mut().zip(&other.sh) {
            *a += b * w;
        }
    }
}

/// Per-splat gradients, indexed like the source [`SplatSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplatGradients {
    pub splats: Vec<SplatGrad>,
}

impl SplatGradients {
    pub fn zeros(set: &SplatSet) -> Self {
        let n = 3 * sh_basis_count(set.sh_degree());
        Self {
            splats: vec![SplatGrad::zeros(n); set.len()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.splats.iter().all(SplatGrad::is_finite)
    }

    /// `self += w * other`, in splat order.
    pub fn accumulate(&mut self, other: &SplatGradients, w: f64) {
        for (a, b) in self.splats.iter_mut().zip(&other.splats) {
            a.add_scaled(b, w);
        }
    }
}

/// Image-space partials accumulated over pixels for one projected splat.
#[derive(Debug, Clone, Copy, Default)]
struct ScreenGrad {
    mean: Vector2<f64>,
    conic: [f64; 3],
    opacity: f64,
    color: [f64; 3],
}

/// Renders through the reference path and returns the L2 loss against
/// `target` together with exact partials of that loss.
pub fn render_with_gradients(
    cam: &PinholeCamera,
    set: &SplatSet,
    target: &ImageBuffer,
) -> Result<(f64, SplatGradients), OptimError> {
    if target.width() != cam.width || target.height() != cam.height || target.channels() != 3 {
        return Err(OptimError::Target {
            expected: (cam.width, cam.height),
            found: (target.width(), target.height(), target.channels()),
        });
    }
    let projected = project_sorted(cam, set);
    let mut screen = vec![ScreenGrad::default(); projected.len()];
    let n = (cam.pixel_count() * 3) as f64;
    let mut loss_sum = 0.0;
    let mut hits: Vec<(usize, f64)> = Vec::new();

    for y in 0..cam.height {
        for x in 0..cam.width {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            hits.clear();
            let mut color = [0.0f64; 3];
            let mut t = 1.0f64;
            for (k, s) in projected.iter().enumerate() {
                let Some(alpha) = s.alpha_at(px, py) else {
                    continue;
                };
                let w = alpha * t;
                for c in 0..3 {
                    color[c] += s.color[c] * w;
                }
                t *= 1.0 - alpha;
                hits.push((k, alpha));
            }
            let tgt = target.rgb(x, y);
            let mut dl_dc = [0.0f64; 3];
            for c in 0..3 {
                let out = color[c].clamp(0.0, 1.0);
                let diff = out - tgt[c];
                loss_sum += diff * diff;
                if (0.0..=1.0).contains(&color[c]) {
                    dl_dc[c] = 2.0 * diff / n;
                }
            }
            if dl_dc == [0.0; 3] {
                continue;
            }
            // Second pass: suffix contribution S_i = C - Σ_{k≤i} c_k α_k T_k.
            let mut t = 1.0f64;
            let mut prefix = [0.0f64; 3];
            for &(k, alpha) in &hits {
                let s = &projected[k];
                let g = &mut screen[k];
                let w = alpha * t;
                let mut dl_dalpha = 0.0;
                for c in 0..3 {
                    prefix[c] += s.color[c] * w;
                    let suffix = color[c] - prefix[c];
                    g.color[c] += dl_dc[c] * w;
                    dl_dalpha += dl_dc[c] * (s.color[c] * t - suffix / (1.0 - alpha));
                }
                t *= 1.0 - alpha;
                let dl_dpower = dl_dalpha * alpha;
                g.opacity += dl_dalpha * alpha / s.opacity;
                let dx = px - s.mean2d.x;
                let dy = py - s.mean2d.y;
                let [a, b, cc] = s.conic;
                g.mean.x += dl_dpower * (a * dx + b * dy);
                g.mean.y += dl_dpower * (b * dx + cc * dy);
                g.conic[0] += dl_dpower * (-0.5 * dx * dx);
                g.conic[1] += dl_dpower * (-dx * dy);
                g.conic[2] += dl_dpower * (-0.5 * dy * dy);
            }
        }
    }

    let mut grads = SplatGradients::zeros(set);
    for (s, g) in projected.iter().zip(&screen) {
        let splat = &set.splats()[s.source_index];
        grads.splats[s.source_index] = splat_backward(cam, splat, set.sh_degree(), s, g);
    }
    Ok((loss_sum / n, grads))
}

/// Chains screen-space partials back to the splat parameters.
fn splat_backward(
    cam: &PinholeCamera,
    g: &SplatGaussian,
    degree: u8,
    proj: &ProjectedSplat,
    sg: &ScreenGrad,
) -> SplatGrad {
    let w = cam.world_to_camera.rotation();
    let p = cam.world_to_camera.apply_point(&g.position);
    let (x, y, z) = (p.x, p.y, p.z);
    let (fx, fy) = (cam.fx, cam.fy);

    let q_norm = g.orientation.norm();
    let q = g.orientation / q_norm;
    let r = quat_to_matrix(&q);
    let s = Matrix3::from_diagonal(&g.scale);
    let m = r * s;
    let sigma = m * m.transpose();
    let j = perspective_jacobian(cam, &p);
    let t = j * w;

    // Conic → covariance: dL/dcov = -Q G Q with G the symmetric conic gradient.
    let conic = Matrix2::new(proj.conic[0], proj.conic[1], proj.conic[1], proj.conic[2]);
    let g_conic = Matrix2::new(
        sg.conic[0],
        0.5 * sg.conic[1],
        0.5 * sg.conic[1],
        sg.conic[2],
    );
    let g_cov = -(conic * g_conic * conic);

    // cov = T Σ Tᵀ + dilation.
    let g_sigma = t.transpose() * g_cov * t;
    let g_t: Matrix2x3<f64> = 2.0 * g_cov * t * sigma;
    let g_j = g_t * w.transpose();

    let inv_z = 1.0 / z;
    let inv_z2 = inv_z * inv_z;
    let inv_z3 = inv_z2 * inv_z;
    let mut g_pc = Vector3::zeros();
    g_pc.x += g_j[(0, 2)] * (-fx * inv_z2);
    g_pc.y += g_j[(1, 2)] * (-fy * inv_z2);
    g_pc.z += g_j[(0, 0)] * (-fx * inv_z2)
        + g_j[(0, 2)] * (2.0 * fx * x * inv_z3)
        + g_j[(1, 1)] * (-fy * inv_z2)
        + g_j[(1, 2)] * (2.0 * fy * y * inv_z3);
    g_pc.x += sg.mean.x * fx * inv_z;
    g_pc.z += sg.mean.x * (-fx * x * inv_z2);
    g_pc.y += sg.mean.y * fy * inv_z;
    g_pc.z += sg.mean.y * (-fy * y * inv_z2);
    let mut g_pos = w.transpose() * g_pc;

    // Σ = M Mᵀ, M = R S.
    let g_m = 2.0 * g_sigma * m;
    let g_r = g_m * s;
    let g_s = Vector3::from_fn(|jj, _| (0..3).map(|ii| g_m[(ii, jj)] * r[(ii, jj)]).sum::<f64>());
    let log_scale = g_s.component_mul(&g.scale);

    let gq = quat_backward(&q, &g_r);
    let gq_tangent = (gq - q * gq.dot(&q)) / q_norm;

    // Color: SH coefficients and view direction.
    let view = g.position - cam.center();
    let view_len = view.norm();
    let dir = if view_len > 0.0 { view / view_len } else { Vector3::z() };
    let raw = raw_color(g, degree, &dir);
    let y_basis = basis(degree, &dir);
    let y_grad = basis_gradient(degree, &dir);
    let nb = sh_basis_count(degree);
    let mut sh = vec![0.0; 3 * nb];
    let mut g_dir = Vector3::zeros();
    for ch in 0..3 {
        if !(0.0..=1.0).contains(&raw[ch]) {
            continue;
        }
        let gc = sg.color[ch];
        for k in 0..nb {
            sh[3 * k + ch] = gc * y_basis[k];
            g_dir += y_grad[k] * (gc * g.sh[3 * k + ch]);
        }
    }
    if view_len > 0.0 {
        g_pos += (g_dir - dir * g_dir.dot(&dir)) / view_len;
    }

    SplatGrad {
        position: g_pos,
        log_scale,
        orientation: gq_tangent,
        opacity_logit: sg.opacity * g.opacity * (1.0 - g.opacity),
        sh,
    }
}

/// Gradient of `L(R(q))` with respect to the quaternion components, given
/// `dL/dR`.
fn quat_backward(q: &Quaternion<f64>, g: &Matrix3<f64>) -> Quaternion<f64> {
    let (w, x, y, z) = (q.w, q.i, q.j, q.k);
    let gw = 2.0 * (-z * g[(0, 1)] + y * g[(0, 2)] + z * g[(1, 0)] - x * g[(1, 2)] - y * g[(2, 0)]
        + x * g[(2, 1)]);
    let gx = 2.0
        * (y * g[(0, 1)] + z * g[(0, 2)] + y * g[(1, 0)] - 2.0 * x * g[(1, 1)] - w * g[(1, 2)]
            + z * g[(2, 0)]
            + w * g[(2, 1)]
            - 2.0 * x * g[(2, 2)]);
    let gy = 2.0
        * (-2.0 * y * g[(0, 0)] + x * g[(0, 1)] + w * g[(0, 2)] + x * g[(1, 0)] + z * g[(1, 2)]
            - w * g[(2, 0)]
            + z * g[(2, 1)]
            - 2.0 * y * g[(2, 2)]);
    let gz = 2.0
        * (-2.0 * z * g[(0, 0)] - w * g[(0, 1)] + x * g[(0, 2)] + w * g[(1, 0)]
            - 2.0 * z * g[(1, 1)]
            + y * g[(1, 2)]
            + x * g[(2, 0)]
            + y * g[(2, 1)]);
    Quaternion::new(gw, gx, gy, gz)
}
