//! Bundled font assets and glyph rasterization helpers.
//!
//! Three DejaVu faces ship with the crate: a bold sans-serif for word art,
//! a monospace face for ASCII cells and the regular sans face, which carries
//! the monochrome emoji and dingbat glyphs used for L6.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use ab_glyph::{Font, FontRef, GlyphId, PxScale, point};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const WORD_ART_TTF: &[u8] = include_bytes!("../assets/fonts/DejaVuSans-Bold.ttf");
const MONO_TTF: &[u8] = include_bytes!("../assets/fonts/DejaVuSansMono.ttf");
const SYMBOL_TTF: &[u8] = include_bytes!("../assets/fonts/DejaVuSans.ttf");

/// Points to pixels at 96 DPI.
pub const PX_PER_PT: f32 = 96.0 / 72.0;

pub struct FontAsset {
    name: &'static str,
    bytes: &'static [u8],
    font: FontRef<'static>,
    sha256: String,
}

impl std::fmt::Debug for FontAsset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FontAsset")
            .field("name", &self.name)
            .field("sha256", &self.sha256)
            .finish()
    }
}

impl FontAsset {
    fn load(name: &'static str, bytes: &'static [u8]) -> Self {
        let font = FontRef::try_from_slice(bytes).expect("bundled font parses");
        FontAsset {
            name,
            bytes,
            font,
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }

    pub fn name(&self) -> &str {
        self.name
    }

    pub fn bytes(&self) -> &[u8] {
        self.bytes
    }

    pub fn sha256(&self) -> &str {
        &self.sha256
    }

    pub(crate) fn font(&self) -> &FontRef<'static> {
        &self.font
    }

    pub fn has_glyph(&self, c: char) -> bool {
        self.font.glyph_id(c).0 != 0
    }

    pub(crate) fn glyph(&self, c: char) -> Result<GlyphId> {
        let id = self.font.glyph_id(c);
        if id.0 == 0 {
            return Err(Error::MissingGlyph(c));
        }
        Ok(id)
    }

    fn units_per_em(&self) -> f32 {
        self.font.units_per_em().expect("bundled fonts declare units per em")
    }

    /// ab_glyph scales by ascent-descent height; convert from an em size in px.
    pub(crate) fn px_scale_for_em(&self, em_px: f32) -> PxScale {
        PxScale::from(em_px * self.font.height_unscaled() / self.units_per_em())
    }

    /// Horizontal advance of `c` in pixels at `size_pt`.
    pub fn advance_px(&self, c: char, size_pt: f32) -> Result<f32> {
        let id = self.glyph(c)?;
        Ok(self.font.h_advance_unscaled(id) * size_pt * PX_PER_PT / self.units_per_em())
    }

    /// Ascent + descent + line gap in pixels at `size_pt`.
    pub fn line_height_px(&self, size_pt: f32) -> f32 {
        let f = &self.font;
        (f.ascent_unscaled() - f.descent_unscaled() + f.line_gap_unscaled()) * size_pt * PX_PER_PT
            / self.units_per_em()
    }

    pub fn ascent_px(&self, size_pt: f32) -> f32 {
        self.font.ascent_unscaled() * size_pt * PX_PER_PT / self.units_per_em()
    }
}

pub struct FontSet {
    pub word_art: FontAsset,
    pub mono: FontAsset,
    pub symbols: FontAsset,
    combined_hash: String,
}

impl FontSet {
    /// Short digest over all bundled font bytes, recorded in manifests.
    pub fn combined_hash(&self) -> &str {
        &self.combined_hash
    }
}

/// The process-wide bundled font set.
pub fn bundled() -> &'static FontSet {
    static FONTS: OnceLock<FontSet> = OnceLock::new();
    FONTS.get_or_init(|| {
        let word_art = FontAsset::load("DejaVuSans-Bold", WORD_ART_TTF);
        let mono = FontAsset::load("DejaVuSansMono", MONO_TTF);
        let symbols = FontAsset::load("DejaVuSans", SYMBOL_TTF);
        let mut h = Sha256::new();
        for f in [&word_art, &mono, &symbols] {
            h.update(f.bytes);
        }
        let combined_hash = hex::encode(h.finalize())[..16].to_string();
        FontSet {
            word_art,
            mono,
            symbols,
            combined_hash,
        }
    })
}

/// Anti-aliased coverage bitmap of one glyph.
///
/// `left`/`top` give the bitmap's offset from the origin the glyph was
/// rasterized against (the top-left corner of its cell).
#[derive(Debug, Clone, Default)]
pub struct GlyphBitmap {
    pub left: i32,
    pub top: i32,
    pub width: u32,
    pub height: u32,
    pub coverage: Vec<f32>,
}

impl GlyphBitmap {
    /// Rasterizes glyph `id` with its baseline-left origin at `(x, y)` px
    /// relative to the bitmap origin.
    pub(crate) fn rasterize(font: &FontAsset, id: GlyphId, scale: PxScale, x: f32, y: f32) -> Self {
        let glyph = id.with_scale_and_position(scale, point(x, y));
        let Some(outlined) = font.font().outline_glyph(glyph) else {
            return GlyphBitmap::default();
        };
        let bounds = outlined.px_bounds();
        let width = bounds.width() as u32;
        let height = bounds.height() as u32;
        let mut coverage = vec![0f32; width as usize * height as usize];
        outlined.draw(|gx, gy, c| {
            if gx < width && gy < height {
                coverage[(gy * width + gx) as usize] = c;
            }
        });
        GlyphBitmap {
            left: bounds.min.x as i32,
            top: bounds.min.y as i32,
            width,
            height,
            coverage,
        }
    }

    /// Adds coverage into an ink buffer at `(ox, oy)`, clipping to its bounds.
    pub fn blit(&self, ink: &mut [f32], ink_w: u32, ink_h: u32, ox: i64, oy: i64) {
        for gy in 0..self.height as i64 {
            let y = oy + self.top as i64 + gy;
            if y < 0 || y >= ink_h as i64 {
                continue;
            }
            for gx in 0..self.width as i64 {
                let x = ox + self.left as i64 + gx;
                if x < 0 || x >= ink_w as i64 {
                    continue;
                }
                let c = self.coverage[(gy * self.width as i64 + gx) as usize];
                let dst = &mut ink[(y * ink_w as i64 + x) as usize];
                *dst = (*dst + c).min(1.0);
            }
        }
    }
}

/// Converts accumulated ink coverage into dark-on-white luminance.
pub(crate) fn ink_to_luma(ink: &[f32]) -> Vec<u8> {
    ink.iter()
        .map(|&c| (255.0 * (1.0 - c.clamp(0.0, 1.0))).round() as u8)
        .collect()
}

/// Glyph bitmaps for ASCII cells, keyed by character and point size.
///
/// Mono glyphs sit on the mono baseline. Characters the mono face lacks fall
/// back to the symbol face, scaled down so the glyph advance fits the mono
/// cell and centered horizontally.
#[derive(Default)]
pub struct GlyphAtlas {
    cache: RwLock<HashMap<(char, u32), Arc<GlyphBitmap>>>,
}

impl GlyphAtlas {
    pub fn new() -> Self {
        Self::default()
    }

    /// Shared atlas for the bundled fonts.
    pub fn shared() -> &'static GlyphAtlas {
        static ATLAS: OnceLock<GlyphAtlas> = OnceLock::new();
        ATLAS.get_or_init(GlyphAtlas::new)
    }

    pub fn get(&self, c: char, size_pt: f32) -> Result<Arc<GlyphBitmap>> {
        let key = (c, size_pt.to_bits());
        if let Some(b) = self.cache.read().expect("atlas lock").get(&key) {
            return Ok(Arc::clone(b));
        }
        let bitmap = Arc::new(Self::render(c, size_pt)?);
        let mut cache = self.cache.write().expect("atlas lock");
        Ok(Arc::clone(cache.entry(key).or_insert(bitmap)))
    }

    fn render(c: char, size_pt: f32) -> Result<GlyphBitmap> {
        let fonts = bundled();
        let em_px = size_pt * PX_PER_PT;
        let baseline = fonts.mono.ascent_px(size_pt);
        if fonts.mono.has_glyph(c) {
            let id = fonts.mono.glyph(c)?;
            let scale = fonts.mono.px_scale_for_em(em_px);
            return Ok(GlyphBitmap::rasterize(&fonts.mono, id, scale, 0.0, baseline));
        }
        let id = fonts.symbols.glyph(c)?;
        let cell_advance = fonts.mono.advance_px('M', size_pt)?;
        let natural = fonts.symbols.advance_px(c, size_pt)?;
        let shrink = if natural > cell_advance {
            cell_advance / natural
        } else {
            1.0
        };
        let scale = fonts.symbols.px_scale_for_em(em_px * shrink);
        let x = (cell_advance - natural * shrink) / 2.0;
        Ok(GlyphBitmap::rasterize(&fonts.symbols, id, scale, x, baseline))
    }
}
