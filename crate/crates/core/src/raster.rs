//! Grayscale raster buffer, PNG I/O and area-average resampling.

use std::io::Cursor;
use std::path::Path;

use image::{GrayImage, ImageFormat};

use crate::error::{Error, Result};

/// An 8-bit luminance image stored row-major. 0 is black, 255 is white.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Raster {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Raster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Raster")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Raster {
    /// A raster filled with `value`.
    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self> {
        Self::check_dims(width, height)?;
        Ok(Raster {
            width,
            height,
            pixels: vec![value; width as usize * height as usize],
        })
    }

    pub fn white(width: u32, height: u32) -> Result<Self> {
        Self::filled(width, height, 255)
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        Self::check_dims(width, height)?;
        if pixels.len() != width as usize * height as usize {
            return Err(Error::InvalidParam(format!(
                "{} pixels supplied for a {width}x{height} raster",
                pixels.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            pixels,
        })
    }

    fn check_dims(width: u32, height: u32) -> Result<()> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam(format!(
                "raster dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        self.pixels[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        &self.pixels[y as usize * w..(y as usize + 1) * w]
    }

    /// Fraction of pixels darker than 128.
    pub fn foreground_fraction(&self) -> f64 {
        let dark = self.pixels.iter().filter(|&&p| p < 128).count();
        dark as f64 / self.pixels.len() as f64
    }

    /// Encodes as an 8-bit grayscale PNG. The output is a pure function of the pixels.
    pub fn to_png_bytes(&self) -> Vec<u8> {
        let img = GrayImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("pixel count checked at construction");
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png)
            .expect("in-memory PNG encoding cannot fail");
        out.into_inner()
    }

    pub fn from_png_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| {
            Error::Image {
                path: origin.to_path_buf(),
                message: e.to_string(),
            }
        })?;
        let gray = img.into_luma8();
        let (w, h) = gray.dimensions();
        Raster::from_pixels(w, h, gray.into_raw())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_png_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_png_bytes(&bytes, path)
    }
}

/// Per-destination-index source contributions for one axis.
///
/// Source pixel `j` covers `[j*dst, (j+1)*dst)` and destination pixel `i`
/// covers `[i*src, (i+1)*src)` in units of `1/dst` source pixels, so every
/// overlap is an integer and the weights of one output pixel sum to `src`.
fn axis_weights(src: u32, dst: u32) -> Vec<Vec<(usize, u64)>> {
    let (src, dst) = (src as u64, dst as u64);
    (0..dst)
        .map(|i| {
            let lo = i * src;
            let hi = (i + 1) * src;
            let first = lo / dst;
            let last = (hi - 1) / dst;
            (first..=last)
                .filter_map(|j| {
                    let overlap = hi.min((j + 1) * dst) - lo.max(j * dst);
                    (overlap > 0).then_some((j as usize, overlap))
                })
                .collect()
        })
        .collect()
}

/// Area-average resampling: each output pixel is the exact coverage-weighted
/// mean of the source pixels under its footprint, rounded half up.
///
/// Works for both shrinking and enlarging; identical dimensions return a copy.
pub fn resample_area(src: &Raster, width: u32, height: u32) -> Result<Raster> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParam(format!(
            "resample target must be positive, got {width}x{height}"
        )));
    }
    if src.dims() == (width, height) {
        return Ok(src.clone());
    }
    let wx = axis_weights(src.width, width);
    let wy = axis_weights(src.height, height);

    let sw = src.width as usize;
    let mut horiz = vec![0u64; width as usize * src.height as usize];
    for y in 0..src.height as usize {
        let row = &src.pixels[y * sw..(y + 1) * sw];
        let out = &mut horiz[y * width as usize..(y + 1) * width as usize];
        for (o, taps) in out.iter_mut().zip(&wx) {
            *o = taps.iter().map(|&(j, w)| row[j] as u64 * w).sum();
        }
    }

    let denom = src.width as u64 * src.height as u64;
    let mut pixels = vec![0u8; width as usize * height as usize];
    for (oy, taps) in wy.iter().enumerate() {
        for ox in 0..width as usize {
            let sum: u64 = taps
                .iter()
                .map(|&(j, w)| horiz[j * width as usize + ox] * w)
                .sum();
            pixels[oy * width as usize + ox] = ((sum + denom / 2) / denom) as u8;
        }
    }
    Raster::from_pixels(width, height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: u32, h: u32) -> Raster {
        let px = (0..w * h).map(|i| ((i * 37) % 256) as u8).collect();
        Raster::from_pixels(w, h, px).unwrap()
    }

    /// Independent reference: integrate over a supersampled grid of the
    /// output footprint in floating point.
    fn reference_area(src: &Raster, w: u32, h: u32) -> Vec<f64> {
        let (sw, sh) = (src.width() as f64, src.height() as f64);
        let mut out = Vec::new();
        for oy in 0..h {
            for ox in 0..w {
                let x0 = ox as f64 * sw / w as f64;
                let x1 = (ox + 1) as f64 * sw / w as f64;
                let y0 = oy as f64 * sh / h as f64;
                let y1 = (oy + 1) as f64 * sh / h as f64;
                let mut acc = 0.0;
                for sy in 0..src.height() {
                    let oy_ = (y1.min(sy as f64 + 1.0) - y0.max(sy as f64)).max(0.0);
                    if oy_ == 0.0 {
                        continue;
                    }
                    for sx in 0..src.width() {
                        let ox_ = (x1.min(sx as f64 + 1.0) - x0.max(sx as f64)).max(0.0);
                        acc += ox_ * oy_ * src.get(sx, sy) as f64;
                    }
                }
                out.push(acc / ((x1 - x0) * (y1 - y0)));
            }
        }
        out
    }

    #[test]
    fn rejects_zero_dims() {
        assert!(Raster::white(0, 5).is_err());
        assert!(Raster::from_pixels(2, 2, vec![0; 3]).is_err());
    }

    #[test]
    fn resample_matches_reference_integration() {
        let src = gradient(23, 17);
        for &(w, h) in &[(7, 5), (10, 9), (23, 17), (31, 20), (1, 1)] {
            let got = resample_area(&src, w, h).unwrap();
            let want = reference_area(&src, w, h);
            for (g, r) in got.pixels().iter().zip(&want) {
                assert!((*g as f64 - r).abs() <= 0.5 + 1e-9, "{w}x{h}: {g} vs {r}");
            }
        }
    }

    #[test]
    fn resample_constant_stays_constant() {
        let src = Raster::filled(40, 20, 77).unwrap();
        let out = resample_area(&src, 13, 7).unwrap();
        assert!(out.pixels().iter().all(|&p| p == 77));
    }

    #[test]
    fn png_round_trip() {
        let src = gradient(9, 4);
        let back = Raster::from_png_bytes(&src.to_png_bytes(), Path::new("mem")).unwrap();
        assert_eq!(src, back);
    }
}
