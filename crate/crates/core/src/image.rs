//! Row-major floating-point image buffers and 8-bit PNG I/O.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("pixel buffer holds {found} values, expected {expected}")]
    Size { expected: usize, found: usize },
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    Channels(u8),
    #[error("pixel value {value} at index {index} outside [0, 1]")]
    Range { index: usize, value: f64 },
    #[error("image I/O: {0}")]
    Io(#[from] image::ImageError),
    #[error("image dimensions differ: {0}x{1}x{2} vs {3}x{4}x{5}")]
    Mismatch(u32, u32, u8, u32, u32, u8),
}

/// Image with values in [0, 1], `channels` interleaved per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn black(width: u32, height: u32, channels: u8) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width as usize * height as usize * channels as usize],
        }
    }

    pub fn filled(width: u32, height: u32, channels: u8, value: f64) -> Self {
        let mut img = Self::black(width, height, channels);
        img.data.fill(value.clamp(0.0, 1.0));
        img
    }

    pub fn from_raw(width: u32, height: u32, channels: u8, data: Vec<f64>) -> Result<Self, ImageError> {
        if channels != 1 && channels != 3 {
            return Err(ImageError::Channels(channels));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(ImageError::Size {
                expected,
                found: data.len(),
            });
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(ImageError::Range { index, value });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> Result<(), ImageError> {
        if self.width != other.width || self.height != other.height || self.channels != other.channels {
            return Err(ImageError::Mismatch(
                self.width,
                self.height,
                self.channels,
                other.width,
                other.height,
                other.channels,
            ));
        }
        Ok(())
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    pub fn get(&self, x: u32, y: u32, c: u8) -> f64 {
        self.data[self.offset(x, y) + c as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, c: u8, v: f64) {
        let o = self.offset(x, y) + c as usize;
        self.data[o] = v.clamp(0.0, 1.0);
    }

    /// RGB triple at a pixel (gray images replicate the single channel).
    pub fn rgb(&self, x: u32, y: u32) -> [f64; 3] {
        let o = self.offset(x, y);
        if self.channels == 1 {
            [self.data[o]; 3]
        } else {
            [self.data[o], self.data[o + 1], self.data[o + 2]]
        }
    }

    pub fn set_rgb(&mut self, x: u32, y: u32, rgb: [f64; 3]) {
        let o = self.offset(x, y);
        if self.channels == 1 {
            self.data[o] = ((rgb[0] + rgb[1] + rgb[2]) / 3.0).clamp(0.0, 1.0);
        } else {
            for (c, v) in rgb.iter().enumerate() {
                self.data[o + c] = v.clamp(0.0, 1.0);
            }
        }
    }

    /// Channel-mean grayscale copy.
    pub fn to_gray(&self) -> ImageBuffer {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| (p[0] + p[1] + p[2]) / 3.0)
            .collect();
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Applies `f` to every stored value, clamping the result.
    pub fn map_values(&mut self, mut f: impl FnMut(f64) -> f64) {
        for v in &mut self.data {
            *v = f(*v).clamp(0.0, 1.0);
        }
    }

    /// Linear 8-bit quantization, no gamma.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, ImageError> {
        use image::ImageEncoder;
        let mut out = Vec::new();
        let color = if self.channels == 1 {
            image::ExtendedColorType::L8
        } else {
            image::ExtendedColorType::Rgb8
        };
        image::codecs::png::PngEncoder::new(&mut out).write_image(
            &self.to_bytes(),
            self.width,
            self.height,
            color,
        )?;
        Ok(out)
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ImageError> {
        let bytes = self.encode_png()?;
        std::fs::write(path, bytes).map_err(|e| ImageError::Io(image::ImageError::IoError(e)))
    }

    /// Loads an 8-bit PNG. Gray inputs stay single-channel; alpha is dropped.
    pub fn load_png(path: &Path) -> Result<ImageBuffer, ImageError> {
        let img = image::open(path)?;
        Ok(Self::from_dynamic(img))
    }

    pub fn decode_png(bytes: &[u8]) -> Result<ImageBuffer, ImageError> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?;
        Ok(Self::from_dynamic(img))
    }

    fn from_dynamic(img: image::DynamicImage) -> ImageBuffer {
        let (width, height) = (img.width(), img.height());
        match img.color().channel_count() {
            1 | 2 => {
                let g = img.to_luma8();
                ImageBuffer {
                    width,
                    height,
                    channels: 1,
                    data: g.as_raw().iter().map(|&b| b as f64 / 255.0).collect(),
                }
            }
            _ => {
                let rgb = img.to_rgb8();
                ImageBuffer {
                    width,
                    height,
                    channels: 3,
                    data: rgb.as_raw().iter().map(|&b| b as f64 / 255.0).collect(),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_values() {
        assert!(matches!(
            ImageBuffer::from_raw(1, 1, 1, vec![1.5]),
            Err(ImageError::Range { index: 0, .. })
        ));
        assert!(matches!(
            ImageBuffer::from_raw(2, 1, 3, vec![0.0; 5]),
            Err(ImageError::Size { .. })
        ));
    }

    #[test]
    fn png_round_trip_is_exact_on_8bit_values() {
        let data: Vec<f64> = (0..12).map(|i| (i * 20) as f64 / 255.0).collect();
        let img = ImageBuffer::from_raw(2, 2, 3, data).unwrap();
        let back = ImageBuffer::decode_png(&img.encode_png().unwrap()).unwrap();
        assert_eq!(back, img);
    }
}
