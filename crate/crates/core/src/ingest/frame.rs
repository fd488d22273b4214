use std::path::Path;

use crate::error::{Error, Result};

/// A single RGB raster. Pixels are stored row-major, top-left origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
    data: Vec<[u8; 3]>,
}

impl Frame {
    pub fn new(width: u32, height: u32) -> Self {
        Frame {
            width,
            height,
            data: vec![[0, 0, 0]; (width * height) as usize],
        }
    }

    pub fn from_pixels(width: u32, height: u32, data: Vec<[u8; 3]>) -> Result<Self> {
        if data.len() != (width * height) as usize {
            return Err(Error::InvalidInput(format!(
                "pixel buffer length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.data[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        self.data[(y * self.width + x) as usize] = rgb;
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.data
    }

    /// Intensity in [0, 1]: mean of the three channels.
    #[inline]
    pub fn intensity(&self, x: u32, y: u32) -> f64 {
        let [r, g, b] = self.get(x, y);
        (r as f64 + g as f64 + b as f64) / (3.0 * 255.0)
    }

    /// Hue/saturation/intensity with hue in [0, 1), saturation and intensity in [0, 1].
    pub fn hsi(&self, x: u32, y: u32) -> (f64, f64, f64) {
        let [r8, g8, b8] = self.get(x, y);
        let r = r8 as f64 / 255.0;
        let g = g8 as f64 / 255.0;
        let b = b8 as f64 / 255.0;
        let i = (r + g + b) / 3.0;
        let min = r.min(g).min(b);
        let s = if i > 1e-12 { 1.0 - min / i } else { 0.0 };
        let num = 0.5 * ((r - g) + (r - b));
        let den = ((r - g) * (r - g) + (r - b) * (g - b)).sqrt();
        let h = if den > 1e-12 {
            let theta = (num / den).clamp(-1.0, 1.0).acos();
            let angle = if b > g {
                2.0 * std::f64::consts::PI - theta
            } else {
                theta
            };
            angle / (2.0 * std::f64::consts::PI)
        } else {
            0.0
        };
        (h, s.clamp(0.0, 1.0), i.clamp(0.0, 1.0))
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let mut buf = image::RgbImage::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                buf.put_pixel(x, y, image::Rgb(self.get(x, y)));
            }
        }
        buf.save(path).map_err(|e| Error::Image {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|e| Error::Image {
                path: path.to_path_buf(),
                source: e,
            })?
            .to_rgb8();
        let (width, height) = img.dimensions();
        let mut frame = Frame::new(width, height);
        for y in 0..height {
            for x in 0..width {
                frame.set(x, y, img.get_pixel(x, y).0);
            }
        }
        Ok(frame)
    }
}

/// Ordered frame sequence with its capture metadata. Frame indices are
/// 1-based everywhere; `frame(t)` follows that convention.
#[derive(Clone, Debug)]
pub struct VideoStream {
    pub id: String,
    pub frame_rate: f64,
    pub frames: Vec<Frame>,
}

impl VideoStream {
    pub fn width(&self) -> u32 {
        self.frames.first().map(|f| f.width).unwrap_or(0)
    }

    pub fn height(&self) -> u32 {
        self.frames.first().map(|f| f.height).unwrap_or(0)
    }

    pub fn len(&self) -> u32 {
        self.frames.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// 1-based accessor matching file indices.
    pub fn frame(&self, t: u32) -> &Frame {
        &self.frames[(t - 1) as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hsi_gray_has_zero_saturation() {
        let mut f = Frame::new(1, 1);
        f.set(0, 0, [128, 128, 128]);
        let (h, s, i) = f.hsi(0, 0);
        assert_eq!(h, 0.0);
        assert_eq!(s, 0.0);
        assert!((i - 128.0 / 255.0).abs() < 1e-9);
    }

    #[test]
    fn hsi_primaries_are_spread() {
        let mut f = Frame::new(3, 1);
        f.set(0, 0, [255, 0, 0]);
        f.set(1, 0, [0, 255, 0]);
        f.set(2, 0, [0, 0, 255]);
        let (hr, sr, _) = f.hsi(0, 0);
        let (hg, _, _) = f.hsi(1, 0);
        let (hb, _, _) = f.hsi(2, 0);
        assert!(hr < hg && hg < hb);
        assert!((sr - 1.0).abs() < 1e-9);
    }

    #[test]
    fn png_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.png");
        let mut f = Frame::new(4, 3);
        for y in 0..3 {
            for x in 0..4 {
                f.set(x, y, [x as u8 * 10, y as u8 * 20, 7]);
            }
        }
        f.save_png(&path).unwrap();
        let g = Frame::load_png(&path).unwrap();
        assert_eq!(f, g);
    }
}
