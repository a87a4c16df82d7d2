//! Bold word-art rendering: the visual ground truth for every ASCII variant.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fonts::{self, FontAsset, GlyphBitmap, ink_to_luma};
use crate::raster::Raster;
use crate::sentiment::Sentiment;

/// Default word-art canvas.
pub const DEFAULT_CANVAS: (u32, u32) = (1200, 600);
/// Margin kept on every side, as a fraction of the canvas dimension.
pub const DEFAULT_FIT_MARGIN: f32 = 0.05;
const MIN_CANVAS: (u32, u32) = (100, 50);
const MIN_GLYPH_HEIGHT_PX: f32 = 8.0;

const WORDS_100: &str = include_str!("../data/words100.txt");
const WORDS_20: &str = include_str!("../data/words20.txt");

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WordSpec {
    pub id: String,
    pub word: String,
    pub label: Sentiment,
}

impl WordSpec {
    /// A core-corpus entry: validated word, id derived from it, label Negative.
    pub fn negative(word: &str) -> Result<Self> {
        Self::new(word, Sentiment::Negative)
    }

    pub fn new(word: &str, label: Sentiment) -> Result<Self> {
        let word = word.trim();
        let valid = (1..=7).contains(&word.len()) && word.bytes().all(|b| b.is_ascii_uppercase());
        if !valid {
            return Err(Error::InvalidWord(word.to_string()));
        }
        Ok(WordSpec {
            id: word.to_ascii_lowercase(),
            word: word.to_string(),
            label,
        })
    }
}

/// Parses a word list: one word per line, `#` comments and blank lines ignored.
/// Duplicate words are rejected.
pub fn parse_word_list(text: &str) -> Result<Vec<WordSpec>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let spec = WordSpec::negative(line)?;
        if !seen.insert(spec.id.clone()) {
            return Err(Error::DuplicateWord(spec.id));
        }
        out.push(spec);
    }
    Ok(out)
}

pub fn load_word_list(path: &Path) -> Result<Vec<WordSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_word_list(&text)
}

/// The bundled 100-word core corpus.
pub fn core_words() -> Vec<WordSpec> {
    parse_word_list(WORDS_100).expect("bundled list is valid")
}

/// The bundled 20-word parameter-sweep subset.
pub fn sweep_words() -> Vec<WordSpec> {
    parse_word_list(WORDS_20).expect("bundled list is valid")
}

pub fn bundled_word_list_text(sweep: bool) -> &'static str {
    if sweep { WORDS_20 } else { WORDS_100 }
}

#[derive(Debug, Clone, Copy)]
struct InkBox {
    min_x: f32,
    min_y: f32,
    max_x: f32,
    max_y: f32,
}

/// Renders `spec.word` dark-on-white, centered on its ink bounding box and
/// scaled to the largest size that keeps `fit_margin` clear on every side.
pub fn render_word_with(
    spec: &WordSpec,
    canvas: (u32, u32),
    font: &FontAsset,
    fit_margin: f32,
) -> Result<Raster> {
    let (width, height) = canvas;
    if width < MIN_CANVAS.0 || height < MIN_CANVAS.1 {
        return Err(Error::CanvasTooSmall {
            width,
            height,
            reason: format!("minimum is {}x{}", MIN_CANVAS.0, MIN_CANVAS.1),
        });
    }
    if !(0.0..0.5).contains(&fit_margin) {
        return Err(Error::InvalidParam(format!("fit margin {fit_margin} outside [0, 0.5)")));
    }

    let ab = font.font();
    let ids = spec
        .word
        .chars()
        .map(|c| font.glyph(c))
        .collect::<Result<Vec<_>>>()?;

    // Layout in font units with y pointing down, baseline at 0.
    use ab_glyph::Font as _;
    let mut pen = 0.0f32;
    let mut pens = Vec::with_capacity(ids.len());
    let mut ink: Option<InkBox> = None;
    for (i, &id) in ids.iter().enumerate() {
        if i > 0 {
            pen += ab.kern_unscaled(ids[i - 1], id);
        }
        pens.push(pen);
        if let Some(outline) = ab.outline(id) {
            // ab_glyph stores the font-unit top edge in `min.y`.
            let b = outline.bounds;
            let g = InkBox {
                min_x: pen + b.min.x,
                max_x: pen + b.max.x,
                min_y: -b.min.y,
                max_y: -b.max.y,
            };
            ink = Some(match ink {
                None => g,
                Some(acc) => InkBox {
                    min_x: acc.min_x.min(g.min_x),
                    min_y: acc.min_y.min(g.min_y),
                    max_x: acc.max_x.max(g.max_x),
                    max_y: acc.max_y.max(g.max_y),
                },
            });
        }
        pen += ab.h_advance_unscaled(id);
    }
    let ink = ink.ok_or_else(|| Error::InvalidParam(format!("{:?} has no ink", spec.word)))?;

    let avail_w = width as f32 * (1.0 - 2.0 * fit_margin);
    let avail_h = height as f32 * (1.0 - 2.0 * fit_margin);
    let ink_w = ink.max_x - ink.min_x;
    let ink_h = ink.max_y - ink.min_y;
    let px_per_unit = (avail_w / ink_w).min(avail_h / ink_h);
    if ink_h * px_per_unit < MIN_GLYPH_HEIGHT_PX {
        return Err(Error::CanvasTooSmall {
            width,
            height,
            reason: format!("glyphs would be under {MIN_GLYPH_HEIGHT_PX}px tall"),
        });
    }

    let units_per_em = ab.units_per_em().expect("units per em");
    let scale = font.px_scale_for_em(px_per_unit * units_per_em);
    let origin_x = (width as f32 - ink_w * px_per_unit) / 2.0 - ink.min_x * px_per_unit;
    let origin_y = (height as f32 - ink_h * px_per_unit) / 2.0 - ink.min_y * px_per_unit;

    let mut coverage = vec![0f32; width as usize * height as usize];
    for (&id, &p) in ids.iter().zip(&pens) {
        let glyph = GlyphBitmap::rasterize(font, id, scale, origin_x + p * px_per_unit, origin_y);
        glyph.blit(&mut coverage, width, height, 0, 0);
    }
    Raster::from_pixels(width, height, ink_to_luma(&coverage))
}

/// Renders with the bundled bold face and the default margin.
pub fn render_word(spec: &WordSpec, canvas: (u32, u32)) -> Result<Raster> {
    render_word_with(spec, canvas, &fonts::bundled().word_art, DEFAULT_FIT_MARGIN)
}

/// Linear contrast stretch to the full 0..=255 range.
/// Constant images map to all-white.
pub fn normalize_grayscale(r: &Raster) -> Raster {
    let (lo, hi) = r
        .pixels()
        .iter()
        .fold((u8::MAX, u8::MIN), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    let pixels = if lo == hi {
        vec![255; r.pixels().len()]
    } else {
        let range = (hi - lo) as u32;
        r.pixels()
            .iter()
            .map(|&p| (((p - lo) as u32 * 255 + range / 2) / range) as u8)
            .collect()
    };
    Raster::from_pixels(r.width(), r.height(), pixels).expect("same dimensions")
}
