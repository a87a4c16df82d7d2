//! Structural similarity between ASCII renders and their original word art.
//!
//! The default is the uniform-window variant: the image is tiled by
//! non-overlapping square windows (trailing partial windows dropped), local
//! SSIM is computed from population statistics inside each window, and the
//! result is the mean over windows. A Gaussian sliding-window variant
//! (11x11, sigma 1.5) is available for comparison with other tools.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charlevels::LevelTag;
use crate::error::{Error, Result};
use crate::manifest::Manifest;
use crate::raster::{Raster, resample_area};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WindowKind {
    Uniform,
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    /// Window side length in pixels.
    pub window: u32,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
    pub kind: WindowKind,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 8,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
            kind: WindowKind::Uniform,
        }
    }
}

impl SsimParams {
    pub fn gaussian() -> Self {
        SsimParams {
            window: 11,
            kind: WindowKind::Gaussian { sigma: 1.5 },
            ..Default::default()
        }
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    fn validate(&self) -> Result<()> {
        if self.window < 2 || self.c1() <= 0.0 || self.c2() <= 0.0 {
            return Err(Error::InvalidParam(format!("invalid SSIM parameters {self:?}")));
        }
        Ok(())
    }
}

/// Local SSIM from window statistics.
#[inline]
pub fn local_ssim(mu_x: f64, mu_y: f64, var_x: f64, var_y: f64, cov: f64, c1: f64, c2: f64) -> f64 {
    ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2))
        / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2))
}

pub fn ssim(a: &Raster, b: &Raster, p: &SsimParams) -> Result<f64> {
    p.validate()?;
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(a.width(), a.height(), b.width(), b.height()));
    }
    if a.width() < p.window || a.height() < p.window {
        return Err(Error::ImageTooSmall {
            width: a.width(),
            height: a.height(),
            window: p.window,
        });
    }
    Ok(match p.kind {
        WindowKind::Uniform => uniform(a, b, p),
        WindowKind::Gaussian { sigma } => gaussian(a, b, p, sigma),
    })
}

fn uniform(a: &Raster, b: &Raster, p: &SsimParams) -> f64 {
    let win = p.window as usize;
    let width = a.width() as usize;
    let (nx, ny) = (width / win, a.height() as usize / win);
    let n = (win * win) as f64;
    let (c1, c2) = (p.c1(), p.c2());
    let (pa, pb) = (a.pixels(), b.pixels());

    let mut total = 0.0;
    for wy in 0..ny {
        for wx in 0..nx {
            let idx = |i: usize, j: usize| (wy * win + j) * width + wx * win + i;
            let (mut sx, mut sy) = (0.0, 0.0);
            for j in 0..win {
                for i in 0..win {
                    sx += pa[idx(i, j)] as f64;
                    sy += pb[idx(i, j)] as f64;
                }
            }
            let (mx, my) = (sx / n, sy / n);
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for j in 0..win {
                for i in 0..win {
                    let dx = pa[idx(i, j)] as f64 - mx;
                    let dy = pb[idx(i, j)] as f64 - my;
                    vx += dx * dx;
                    vy += dy * dy;
                    cxy += dx * dy;
                }
            }
            total += local_ssim(mx, my, vx / n, vy / n, cxy / n, c1, c2);
        }
    }
    total / (nx * ny) as f64
}

fn gaussian_kernel(win: usize, sigma: f64) -> Vec<f64> {
    let c = (win as f64 - 1.0) / 2.0;
    let mut k: Vec<f64> = (0..win * win)
        .map(|i| {
            let (x, y) = ((i % win) as f64 - c, (i / win) as f64 - c);
            (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

fn gaussian(a: &Raster, b: &Raster, p: &SsimParams, sigma: f64) -> f64 {
    let win = p.window as usize;
    let kernel = gaussian_kernel(win, sigma);
    let width = a.width() as usize;
    let (nx, ny) = (width - win + 1, a.height() as usize - win + 1);
    let (c1, c2) = (p.c1(), p.c2());
    let (pa, pb) = (a.pixels(), b.pixels());

    let rows: Vec<f64> = (0..ny)
        .into_par_iter()
        .map(|oy| {
            let mut acc = 0.0;
            for ox in 0..nx {
                let (mut mx, mut my) = (0.0, 0.0);
                for (k, w) in kernel.iter().enumerate() {
                    let i = (oy + k / win) * width + ox + k % win;
                    mx += w * pa[i] as f64;
                    my += w * pb[i] as f64;
                }
                let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
                for (k, w) in kernel.iter().enumerate() {
                    let i = (oy + k / win) * width + ox + k % win;
                    let dx = pa[i] as f64 - mx;
                    let dy = pb[i] as f64 - my;
                    vx += w * dx * dx;
                    vy += w * dy * dy;
                    cxy += w * dx * dy;
                }
                acc += local_ssim(mx, my, vx, vy, cxy, c1, c2);
            }
            acc
        })
        .collect();
    rows.iter().sum::<f64>() / (nx * ny) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSsimRow {
    pub level: LevelTag,
    pub mean_ssim: f64,
    pub std_ssim: f64,
    pub n: usize,
}

/// SSIM of one manifest entry against its original word art. The original
/// is area-resampled to the sample's size first when they differ.
pub fn entry_ssim(manifest: &Manifest, entry: &crate::manifest::SampleManifestEntry, p: &SsimParams) -> Result<f64> {
    let image = Raster::load_png(&manifest.image_path(entry))?;
    let original = Raster::load_png(&manifest.original_path(entry))?;
    let original = resample_area(&original, image.width(), image.height())?;
    ssim(&image, &original, p)
}

/// Mean and population standard deviation of SSIM per level, in level order.
/// `levels = None` includes every level present.
pub fn level_ssim_table(manifest: &Manifest, levels: Option<&[LevelTag]>, p: &SsimParams) -> Result<Vec<LevelSsimRow>> {
    let scores = manifest
        .entries
        .par_iter()
        .filter(|e| levels.map_or(true, |ls| ls.contains(&e.level)))
        .map(|e| Ok((e.level, entry_ssim(manifest, e, p)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut by_level: BTreeMap<LevelTag, Vec<f64>> = BTreeMap::new();
    for (level, s) in scores {
        by_level.entry(level).or_default().push(s);
    }
    Ok(by_level
        .into_iter()
        .map(|(level, v)| {
            let n = v.len();
            let mean = v.iter().sum::<f64>() / n as f64;
            let var = v.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
            LevelSsimRow {
                level,
                mean_ssim: mean,
                std_ssim: var.sqrt(),
                n,
            }
        })
        .collect())
}

/// Largest minus smallest per-level mean.
pub fn mean_spread(rows: &[LevelSsimRow]) -> f64 {
    let means = rows.iter().map(|r| r.mean_ssim);
    let max = means.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = means.fold(f64::INFINITY, f64::min);
    if rows.is_empty() { 0.0 } else { max - min }
}

/// CSV with columns `level,mean_ssim,std_ssim,n`.
pub fn write_ssim_csv(rows: &[LevelSsimRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["level", "mean_ssim", "std_ssim", "n"])?;
    for r in rows {
        w.write_record([
            r.level.to_string(),
            format!("{:.6}", r.mean_ssim),
            format!("{:.6}", r.std_ssim),
            r.n.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
