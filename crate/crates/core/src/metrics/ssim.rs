use super::MetricsError;
use crate::image::ImageBuffer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c1: f64,
    pub c2: f64,
    pub window: usize,
    pub sigma: f64,
}

impl SsimParams {
    /// Unit exponents, stabilizers scaled to the dynamic range `max_i`.
    pub fn for_max(max_i: f64) -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            c1: (0.01 * max_i).powi(2),
            c2: (0.03 * max_i).powi(2),
            window: 11,
            sigma: 1.5,
        }
    }

    fn validate(&self) -> Result<(), MetricsError> {
        let exps = [self.alpha, self.beta, self.gamma];
        if !exps.iter().all(|e| e.is_finite() && *e > 0.0) {
            return Err(MetricsError::Params("exponents must be positive".into()));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(MetricsError::Params("stabilizers must be positive".into()));
        }
        if self.window == 0 || !(self.sigma > 0.0) {
            return Err(MetricsError::Params("window must be nonempty with positive sigma".into()));
        }
        Ok(())
    }

    fn kernel(&self) -> Vec<f64> {
        let r = (self.window as f64 - 1.0) / 2.0;
        let w: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - r;
                (-d * d / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    }
}

impl Default for SsimParams {
    fn default() -> Self {
        Self::for_max(1.0)
    }
}

/// Window-averaged luminance, contrast and structure terms, plus the mean of
/// their exponent-weighted per-window product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimComponents {
    pub luminance: f64,
    pub contrast: f64,
    pub structure: f64,
    pub ssim: f64,
    pub windows: usize,
}

/// `b^e` keeping the sign of `b`, so negative structure correlation stays
/// negative for fractional exponents.
fn signed_pow(b: f64, e: f64) -> f64 {
    if e == 1.0 {
        b
    } else {
        b.signum() * b.abs().powf(e)
    }
}

/// Separable filtering over valid positions only.
fn filter(plane: &[f64], w: usize, h: usize, k: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = k.len();
    let ow = w + 1 - n;
    let oh = h + 1 - n;
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = (0..n).map(|i| k[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| k[i] * tmp[(y + i) * ow + x]).sum();
        }
    }
    (out, ow, oh)
}

pub fn ssim_components(
    x: &ImageBuffer,
    y: &ImageBuffer,
    p: &SsimParams,
) -> Result<SsimComponents, MetricsError> {
    x.same_shape(y)?;
    p.validate()?;
    let (w, h) = (x.width() as usize, x.height() as usize);
    if w < p.window || h < p.window {
        return Err(MetricsError::TooSmall {
            width: x.width(),
            height: x.height(),
            window: p.window,
        });
    }
    let gx = x.to_gray();
    let gy = y.to_gray();
    let (a, b) = (gx.data(), gy.data());
    let k = p.kernel();
    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(u, v)| u * v).collect();
    let (mu_a, ow, oh) = filter(a, w, h, &k);
    let (mu_b, ..) = filter(b, w, h, &k);
    let (e_aa, ..) = filter(&aa, w, h, &k);
    let (e_bb, ..) = filter(&bb, w, h, &k);
    let (e_ab, ..) = filter(&ab, w, h, &k);

    let (c1, c2) = (p.c1, p.c2);
    let mut acc = [0.0f64; 4];
    let n = ow * oh;
    for i in 0..n {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = (e_aa[i] - ma * ma).max(0.0);
        let vb = (e_bb[i] - mb * mb).max(0.0);
        let cov = e_ab[i] - ma * mb;
        let (sa, sb) = (va.sqrt(), vb.sqrt());
        let l = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        let c = (2.0 * sa * sb + c2) / (va + vb + c2);
        let s = (cov + 0.5 * c2) / (sa * sb + 0.5 * c2);
        acc[0] += l;
        acc[1] += c;
        acc[2] += s;
        acc[3] += signed_pow(l, p.alpha) * signed_pow(c, p.beta) * signed_pow(s, p.gamma);
    }
    let inv = 1.0 / n as f64;
    Ok(SsimComponents {
        luminance: acc[0] * inv,
        contrast: acc[1] * inv,
        structure: acc[2] * inv,
        ssim: (acc[3] * inv).clamp(-1.0, 1.0),
        windows: n,
    })
}

/// Mean structural similarity over all valid windows of the grayscale images.
pub fn ssim(x: &ImageBuffer, y: &ImageBuffer, p: &SsimParams) -> Result<f64, MetricsError> {
    Ok(ssim_components(x, y, p)?.ssim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = SsimParams::default().kernel();
        assert_eq!(k.len(), 11);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..5 {
            assert!((k[i] - k[10 - i]).abs() < 1e-18);
        }
    }

    #[test]
    fn rejects_small_images_and_bad_params() {
        let a = ImageBuffer::filled(10, 20, 1, 0.5);
        assert!(matches!(
            ssim(&a, &a, &SsimParams::default()),
            Err(MetricsError::TooSmall { .. })
        ));
        let b = ImageBuffer::filled(20, 20, 1, 0.5);
        let p = SsimParams { gamma: 0.0, ..Default::default() };
        assert!(ssim(&b, &b, &p).is_err());
    }

    #[test]
    fn signed_pow_keeps_sign() {
        assert_eq!(signed_pow(-0.25, 0.5), -0.5);
        assert_eq!(signed_pow(0.25, 0.5), 0.5);
    }
}
