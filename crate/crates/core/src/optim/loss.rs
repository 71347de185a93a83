use super::OptimError;
use crate::image::ImageBuffer;

/// Mean squared per-channel error.
pub fn photometric_loss(rendered: &ImageBuffer, target: &ImageBuffer) -> Result<f64, OptimError> {
    rendered.same_shape(target)?;
    let n = rendered.data().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = rendered
        .data()
        .iter()
        .zip(target.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checker(w: u32, h: u32, invert: bool) -> ImageBuffer {
        let mut img = ImageBuffer::black(w, h, 3);
        for y in 0..h {
            for x in 0..w {
                let on = ((x + y) % 2 == 0) != invert;
                img.set_rgb(x, y, [if on { 1.0 } else { 0.0 }; 3]);
            }
        }
        img
    }

    #[test]
    fn identical_images_have_zero_loss() {
        let a = checker(4, 4, false);
        assert_eq!(photometric_loss(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn black_versus_white_is_one() {
        let a = ImageBuffer::black(3, 5, 3);
        let b = ImageBuffer::filled(3, 5, 3, 1.0);
        assert_eq!(photometric_loss(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn checker_versus_inverse_is_one() {
        assert_eq!(
            photometric_loss(&checker(6, 6, false), &checker(6, 6, true)).unwrap(),
            1.0
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = ImageBuffer::black(3, 3, 3);
        let b = ImageBuffer::black(3, 4, 3);
        assert!(photometric_loss(&a, &b).is_err());
        assert!(photometric_loss(&a, &ImageBuffer::black(3, 3, 1)).is_err());
    }
}
