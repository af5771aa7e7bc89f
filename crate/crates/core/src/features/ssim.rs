//! Grayscale frames and the mean structural similarity index.

use std::path::Path;

use crate::error::{Error, Result};

/// Side length frames are resampled to before comparison.
pub const COMPARE_SIZE: usize = 256;

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const DYNAMIC_RANGE: f64 = 255.0;

/// Row-major luma plane with values in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayFrame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::usage("frame must not be empty"));
        }
        if data.len() != width * height {
            return Err(Error::usage(format!(
                "frame data has {} samples, expected {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, level: f64) -> Self {
        Self {
            width,
            height,
            data: vec![level; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// `255 - v` for every sample.
    pub fn inverted(&self) -> Self {
        Self {
            data: self.data.iter().map(|v| DYNAMIC_RANGE - v).collect(),
            ..self.clone()
        }
    }

    /// Bilinear resampling with pixel-centre alignment. Same-size resampling
    /// is the identity.
    pub fn resized(&self, width: usize, height: usize) -> Self {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let coord = |dst: usize, scale: f64, len: usize| {
            let src = ((dst as f64 + 0.5) * scale - 0.5).max(0.0);
            let i0 = (src.floor() as usize).min(len - 1);
            let i1 = (i0 + 1).min(len - 1);
            (i0, i1, src - i0 as f64)
        };
        Self::from_fn(width, height, |x, y| {
            let (x0, x1, fx) = coord(x, sx, self.width);
            let (y0, y1, fy) = coord(y, sy, self.height);
            let top = self.at(x0, y0) * (1.0 - fx) + self.at(x1, y0) * fx;
            let bottom = self.at(x0, y1) * (1.0 - fx) + self.at(x1, y1) * fx;
            top * (1.0 - fy) + bottom * fy
        })
    }

    /// Decodes a raster file to luma (0.299 R + 0.587 G + 0.114 B).
    pub fn decode(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|e| Error::usage(format!("{}: {e}", path.display())))?;
        let (width, height) = (img.width() as usize, img.height() as usize);
        if width == 0 || height == 0 {
            return Err(Error::usage(format!("{}: empty image", path.display())));
        }
        let data = match img.as_luma8() {
            Some(gray) => gray.pixels().map(|p| p.0[0] as f64).collect(),
            None => img
                .to_rgb8()
                .pixels()
                .map(|p| {
                    0.299 * p.0[0] as f64 + 0.587 * p.0[1] as f64 + 0.114 * p.0[2] as f64
                })
                .collect(),
        };
        Self::new(width, height, data)
    }
}

fn gaussian_window() -> [f64; WINDOW] {
    let mut w = [0.0; WINDOW];
    let c = (WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-(d * d) / (2.0 * SIGMA * SIGMA)).exp();
    }
    let sum: f64 = w.iter().sum();
    w.map(|v| v / sum)
}

/// Separable Gaussian filter keeping only fully covered positions.
fn filter_valid(src: &[f64], width: usize, height: usize, kernel: &[f64; WINDOW]) -> Vec<f64> {
    let ow = width - WINDOW + 1;
    let oh = height - WINDOW + 1;
    let mut horiz = vec![0.0; ow * height];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                acc += w * row[x + k];
            }
            horiz[y * ow + x] = acc;
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                acc += w * horiz[(y + k) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03 and a dynamic range of 255. Both frames must share dimensions
/// of at least 11x11.
pub fn ssim(a: &GrayFrame, b: &GrayFrame) -> Result<f64> {
    if a.data.is_empty() || b.data.is_empty() {
        return Err(Error::usage("ssim of an empty frame"));
    }
    if a.width != b.width || a.height != b.height {
        return Err(Error::usage(format!(
            "frame sizes differ: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    if a.width < WINDOW || a.height < WINDOW {
        return Err(Error::usage(format!(
            "frames must be at least {WINDOW}x{WINDOW}"
        )));
    }
    let (w, h) = (a.width, a.height);
    let kernel = gaussian_window();
    let sq = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<_>>();
    let xy: Vec<f64> = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();

    let mu_a = filter_valid(&a.data, w, h, &kernel);
    let mu_b = filter_valid(&b.data, w, h, &kernel);
    let e_aa = filter_valid(&sq(&a.data), w, h, &kernel);
    let e_bb = filter_valid(&sq(&b.data), w, h, &kernel);
    let e_ab = filter_valid(&xy, w, h, &kernel);

    let c1 = (K1 * DYNAMIC_RANGE).powi(2);
    let c2 = (K2 * DYNAMIC_RANGE).powi(2);
    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
        total += num / den;
    }
    Ok(total / mu_a.len() as f64)
}

/// Structural dissimilarity `(1 - ssim) / 2`, in `[0, 1]`.
pub fn dssim(a: &GrayFrame, b: &GrayFrame) -> Result<f64> {
    Ok(((1.0 - ssim(a, b)?) / 2.0).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checker(size: usize, cell: usize) -> GrayFrame {
        GrayFrame::from_fn(size, size, |x, y| {
            if (x / cell + y / cell).is_multiple_of(2) {
                230.0
            } else {
                20.0
            }
        })
    }

    #[test]
    fn self_similarity_is_exact() {
        let f = checker(40, 3);
        assert_eq!(ssim(&f, &f).unwrap(), 1.0);
        assert_eq!(dssim(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn inverted_checkerboard_is_negative() {
        let f = checker(64, 4);
        let s = ssim(&f, &f.inverted()).unwrap();
        assert!(s < 0.0, "{s}");
    }

    #[test]
    fn constant_levels_use_luminance_term_only() {
        let black = GrayFrame::filled(32, 32, 0.0);
        let white = GrayFrame::filled(32, 32, 255.0);
        let c1 = (0.01f64 * 255.0).powi(2);
        let expected = c1 / (255.0 * 255.0 + c1);
        assert!((ssim(&black, &white).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_shapes() {
        let a = GrayFrame::filled(20, 20, 1.0);
        let b = GrayFrame::filled(21, 20, 1.0);
        assert!(ssim(&a, &b).is_err());
        let tiny = GrayFrame::filled(5, 5, 1.0);
        assert!(ssim(&tiny, &tiny).is_err());
        assert!(GrayFrame::new(0, 3, vec![]).is_err());
        assert!(GrayFrame::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn resize_identity_and_constant() {
        let f = checker(16, 2);
        assert_eq!(f.resized(16, 16), f);
        let c = GrayFrame::filled(7, 9, 128.0).resized(256, 256);
        assert!(c.data().iter().all(|v| (*v - 128.0).abs() < 1e-12));
        let up = GrayFrame::from_fn(2, 1, |x, _| if x == 0 { 0.0 } else { 100.0 }).resized(4, 1);
        assert_eq!(up.data(), &[0.0, 25.0, 75.0, 100.0]);
    }

    #[test]
    fn window_is_normalized() {
        let w = gaussian_window();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w[0], w[10]);
    }
}
