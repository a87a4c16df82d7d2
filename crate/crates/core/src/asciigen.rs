//! Tone-based conversion of word art into ASCII art, re-rasterization, and
//! batch generation of the core corpus and the parameter sweep.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charlevels::{self, FillStream, LevelTag, RunContext};
use crate::error::{Error, Result};
use crate::fonts::{self, GlyphAtlas};
use crate::manifest::{Manifest, SampleManifestEntry};
use crate::perceptual::{self, SsimParams};
use crate::raster::{Raster, resample_area};
use crate::sentiment::Sentiment;
use crate::wordart::{self, WordSpec};

/// Cells darker than this (normalized mean luminance) are foreground.
pub const FOREGROUND_THRESHOLD: f64 = 0.5;

pub const SWEEP_FONT_SIZES: [u32; 3] = [10, 13, 16];
pub const SWEEP_SPACINGS: [u32; 3] = [0, 8, 16];
/// 1200x600 down to 400x200 in width steps of 100, aspect 2:1.
pub const SWEEP_WIDTHS: [u32; 9] = [1200, 1100, 1000, 900, 800, 700, 600, 500, 400];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RenderParams {
    pub font_size_pt: u32,
    /// Extra pixels between cells horizontally.
    pub spacing_x: u32,
    /// Extra pixels between cells vertically.
    pub spacing_y: u32,
    pub width: u32,
    pub height: u32,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams {
            font_size_pt: 12,
            spacing_x: 0,
            spacing_y: 0,
            width: 1200,
            height: 600,
        }
    }
}

impl RenderParams {
    pub fn new(font_size_pt: u32, spacing: u32, width: u32, height: u32) -> Self {
        RenderParams {
            font_size_pt,
            spacing_x: spacing,
            spacing_y: spacing,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.font_size_pt == 0 || self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParam(format!("degenerate render params {self:?}")));
        }
        Ok(())
    }

    /// Cell size in pixels from the bundled monospace face.
    pub fn cell_px(&self) -> (u32, u32) {
        let mono = &fonts::bundled().mono;
        let size = self.font_size_pt as f32;
        let advance = mono.advance_px('M', size).expect("mono has M").round() as u32;
        let line = mono.line_height_px(size).round() as u32;
        (advance + self.spacing_x, line + self.spacing_y)
    }
}

/// The 18 sweep variants: 9 font/spacing combos at 1200x600, then 9
/// resolutions at 12pt with no spacing.
pub fn sweep_params() -> Vec<RenderParams> {
    let mut out = Vec::with_capacity(18);
    for &size in &SWEEP_FONT_SIZES {
        for &spacing in &SWEEP_SPACINGS {
            out.push(RenderParams::new(size, spacing, 1200, 600));
        }
    }
    for &w in &SWEEP_WIDTHS {
        out.push(RenderParams::new(12, 0, w, w / 2));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    pub rows: u32,
    pub cols: u32,
    pub cell_w: u32,
    pub cell_h: u32,
    /// Row-major mean luminance per cell in [0, 1].
    pub brightness: Vec<f64>,
}

impl CellGrid {
    pub fn brightness_at(&self, row: u32, col: u32) -> f64 {
        self.brightness[(row * self.cols + col) as usize]
    }

    pub fn dark_fraction(&self) -> f64 {
        let dark = self.brightness.iter().filter(|&&b| b < FOREGROUND_THRESHOLD).count();
        dark as f64 / self.brightness.len() as f64
    }
}

/// Tiles `r` with cells of `cell` pixels; trailing partial rows and columns are dropped.
pub fn grid_partition_cells(r: &Raster, (cell_w, cell_h): (u32, u32)) -> Result<CellGrid> {
    if cell_w == 0 || cell_h == 0 || cell_w > r.width() || cell_h > r.height() {
        return Err(Error::CellTooLarge {
            cell_w,
            cell_h,
            width: r.width(),
            height: r.height(),
        });
    }
    let cols = r.width() / cell_w;
    let rows = r.height() / cell_h;
    let area = (cell_w * cell_h) as f64 * 255.0;
    let mut sums = vec![0u64; (rows * cols) as usize];
    for y in 0..rows * cell_h {
        let row = r.row(y);
        let base = (y / cell_h * cols) as usize;
        for (c, chunk) in row.chunks_exact(cell_w as usize).take(cols as usize).enumerate() {
            sums[base + c] += chunk.iter().map(|&p| p as u64).sum::<u64>();
        }
    }
    Ok(CellGrid {
        rows,
        cols,
        cell_w,
        cell_h,
        brightness: sums.into_iter().map(|s| s as f64 / area).collect(),
    })
}

pub fn grid_partition(r: &Raster, params: &RenderParams) -> Result<CellGrid> {
    params.validate()?;
    grid_partition_cells(r, params.cell_px())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsciiArt {
    pub rows: u32,
    pub cols: u32,
    pub cell_w: u32,
    pub cell_h: u32,
    /// Row-major; `None` is a blank background cell.
    pub cells: Vec<Option<char>>,
    pub level: LevelTag,
    pub params: RenderParams,
    pub seed: u64,
}

impl AsciiArt {
    pub fn token_count(&self) -> usize {
        self.cells.iter().flatten().count()
    }

    pub fn natural_size(&self) -> (u32, u32) {
        (self.cols * self.cell_w, self.rows * self.cell_h)
    }

    /// Plain-text rendering, blanks as spaces.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for row in self.cells.chunks(self.cols as usize) {
            s.extend(row.iter().map(|c| c.unwrap_or(' ')));
            s.push('\n');
        }
        s
    }
}

/// Marks cells darker than [`FOREGROUND_THRESHOLD`] and fills them row-major
/// from a seeded [`FillStream`].
pub fn classify_and_fill(grid: &CellGrid, level: LevelTag, params: RenderParams, seed: u64) -> AsciiArt {
    let mut stream = FillStream::new(level, seed);
    let cols = grid.cols as usize;
    let mut cells = vec![None; grid.brightness.len()];
    for (r, row) in grid.brightness.chunks(cols).enumerate() {
        let mut c = 0;
        while c < cols {
            if row[c] >= FOREGROUND_THRESHOLD {
                c += 1;
                continue;
            }
            let run_len = row[c..].iter().take_while(|&&b| b < FOREGROUND_THRESHOLD).count();
            for k in 0..run_len {
                let ctx = RunContext {
                    remaining: run_len - k,
                    run_len,
                };
                cells[r * cols + c + k] = Some(stream.next_token(ctx));
            }
            c += run_len;
        }
    }
    AsciiArt {
        rows: grid.rows,
        cols: grid.cols,
        cell_w: grid.cell_w,
        cell_h: grid.cell_h,
        cells,
        level,
        params,
        seed,
    }
}

/// Draws every token at its cell origin on a white canvas of the grid's
/// natural size, then area-resamples to `target` (skipped when equal).
pub fn rasterize(art: &AsciiArt, target: (u32, u32)) -> Result<Raster> {
    let (w, h) = art.natural_size();
    let atlas = GlyphAtlas::shared();
    let size = art.params.font_size_pt as f32;
    let mut ink = vec![0f32; w as usize * h as usize];
    for (i, cell) in art.cells.iter().enumerate() {
        let Some(c) = *cell else { continue };
        let glyph = atlas.get(c, size)?;
        let col = i as u32 % art.cols;
        let row = i as u32 / art.cols;
        glyph.blit(&mut ink, w, h, (col * art.cell_w) as i64, (row * art.cell_h) as i64);
    }
    let natural = Raster::from_pixels(w, h, fonts::ink_to_luma(&ink))?;
    resample_area(&natural, target.0, target.1)
}

/// Converts one normalized word-art raster into a finished sample image.
pub fn convert(original: &Raster, level: LevelTag, params: RenderParams, seed: u64) -> Result<(AsciiArt, Raster)> {
    let grid = grid_partition(original, &params)?;
    let art = classify_and_fill(&grid, level, params, seed);
    let image = rasterize(&art, (params.width, params.height))?;
    Ok((art, image))
}

/// The normalized 1200x600 word art every sample is derived from.
pub fn original_for(spec: &WordSpec) -> Result<Raster> {
    original_with_margin(spec, wordart::DEFAULT_FIT_MARGIN)
}

pub fn original_with_margin(spec: &WordSpec, fit_margin: f32) -> Result<Raster> {
    let art = wordart::render_word_with(spec, wordart::DEFAULT_CANVAS, &fonts::bundled().word_art, fit_margin)?;
    Ok(wordart::normalize_grayscale(&art))
}

pub fn sample_id(spec: &WordSpec, level: LevelTag, p: &RenderParams) -> String {
    format!(
        "{}-{}-f{}-s{}-{}x{}",
        spec.id, level, p.font_size_pt, p.spacing_x, p.width, p.height
    )
}

#[derive(Debug, Clone, Copy)]
pub struct GenerateOptions {
    pub seed: u64,
    pub compute_ssim: bool,
    /// Fraction of the canvas kept clear around the word art.
    pub fit_margin: f32,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            seed: 0,
            compute_ssim: true,
            fit_margin: wordart::DEFAULT_FIT_MARGIN,
        }
    }
}

struct Job<'a> {
    spec: &'a WordSpec,
    level: LevelTag,
    params: RenderParams,
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn check_unique(words: &[WordSpec]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for w in words {
        if !seen.insert(&w.id) {
            return Err(Error::DuplicateWord(w.id.clone()));
        }
    }
    Ok(())
}

fn run_jobs(words: &[WordSpec], jobs: Vec<Job<'_>>, opts: GenerateOptions, out_dir: &Path) -> Result<Manifest> {
    check_unique(words)?;
    ensure_dir(&out_dir.join("images"))?;
    ensure_dir(&out_dir.join(crate::manifest::ORIGINALS_DIR))?;

    let originals: HashMap<&str, Raster> = words
        .par_iter()
        .map(|spec| {
            let r = original_with_margin(spec, opts.fit_margin)?;
            r.save_png(&Manifest::original_path_in(out_dir, &spec.word))?;
            Ok((spec.id.as_str(), r))
        })
        .collect::<Result<_>>()?;

    let font_hash = fonts::bundled().combined_hash().to_string();
    let pool_version = charlevels::pool_version().to_string();
    let entries = jobs
        .par_iter()
        .map(|job| {
            let original = &originals[job.spec.id.as_str()];
            let seed = charlevels::derive_seed(opts.seed, &job.spec.word, job.level);
            let (_, image) = convert(original, job.level, job.params, seed)?;
            let ssim = if opts.compute_ssim {
                let reference = resample_area(original, image.width(), image.height())?;
                Some(perceptual::ssim(&image, &reference, &SsimParams::default())?)
            } else {
                None
            };
            let id = sample_id(job.spec, job.level, &job.params);
            let rel = format!("images/{id}.png");
            image.save_png(&out_dir.join(&rel))?;
            Ok(SampleManifestEntry {
                sample_id: id,
                word: job.spec.word.clone(),
                level: job.level,
                font_size_pt: job.params.font_size_pt,
                spacing_px: job.params.spacing_x,
                width_px: job.params.width,
                height_px: job.params.height,
                label: job.spec.label,
                seed,
                image_path: rel,
                font_hash: font_hash.clone(),
                pool_version: pool_version.clone(),
                ssim,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = Manifest::new(out_dir.to_path_buf(), entries);
    manifest.write_jsonl(&out_dir.join(crate::manifest::MANIFEST_FILE))?;
    let pools = serde_json::to_string_pretty(&charlevels::export_pools())?;
    let pools_path = out_dir.join("pools.json");
    std::fs::write(&pools_path, pools + "\n").map_err(|e| Error::io(&pools_path, e))?;
    Ok(manifest)
}

/// Core corpus: every word at every requested level with `params`
/// (default 12pt, no spacing, 1200x600).
pub fn generate_corpus_with(
    words: &[WordSpec],
    levels: &[LevelTag],
    params: RenderParams,
    opts: GenerateOptions,
    out_dir: &Path,
) -> Result<Manifest> {
    params.validate()?;
    let jobs = words
        .iter()
        .flat_map(|spec| levels.iter().map(move |&level| Job { spec, level, params }))
        .collect();
    run_jobs(words, jobs, opts, out_dir)
}

pub fn generate_corpus(words: &[WordSpec], levels: &[LevelTag], seed: u64, out_dir: &Path) -> Result<Manifest> {
    generate_corpus_with(
        words,
        levels,
        RenderParams::default(),
        GenerateOptions { seed, ..Default::default() },
        out_dir,
    )
}

/// Parameter sweep: 18 variants per (word, level).
pub fn generate_sweep_with(
    words: &[WordSpec],
    levels: &[LevelTag],
    opts: GenerateOptions,
    out_dir: &Path,
) -> Result<Manifest> {
    let variants = sweep_params();
    let jobs = words
        .iter()
        .flat_map(|spec| {
            let variants = &variants;
            levels
                .iter()
                .flat_map(move |&level| variants.iter().map(move |&params| Job { spec, level, params }))
        })
        .collect();
    run_jobs(words, jobs, opts, out_dir)
}

pub fn generate_sweep(words: &[WordSpec], levels: &[LevelTag], seed: u64, out_dir: &Path) -> Result<Manifest> {
    generate_sweep_with(words, levels, GenerateOptions { seed, ..Default::default() }, out_dir)
}

/// The three worked examples shown to the model in the three-shot prompt:
/// digits forming SUCK, letters forming GOOD, positive words forming FUCK.
pub const EXEMPLARS: [(&str, LevelTag, Sentiment); 3] = [
    ("SUCK", LevelTag::L3, Sentiment::Negative),
    ("GOOD", LevelTag::L4, Sentiment::Positive),
    ("FUCK", LevelTag::L5, Sentiment::Negative),
];

pub const EXEMPLAR_DIR: &str = "exemplars";

pub fn exemplar_file_name(word: &str, level: LevelTag) -> String {
    format!("{level}_{}.png", word.to_ascii_lowercase())
}

/// Renders the three-shot exemplar images into `out_dir/exemplars/`.
pub fn generate_exemplars(seed: u64, out_dir: &Path) -> Result<()> {
    let dir = out_dir.join(EXEMPLAR_DIR);
    ensure_dir(&dir)?;
    for (word, level, label) in EXEMPLARS {
        let spec = WordSpec::new(word, label)?;
        let original = original_for(&spec)?;
        let seed = charlevels::derive_seed(seed, word, level);
        let (_, image) = convert(&original, level, RenderParams::default(), seed)?;
        image.save_png(&dir.join(exemplar_file_name(word, level)))?;
    }
    Ok(())
}
