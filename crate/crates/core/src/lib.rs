//! Adversarial ASCII art generation and vision-language model evaluation.
//!
//! The pipeline renders negative words as bold word art, converts them into
//! ASCII art whose fill characters carry increasingly rich (and positive)
//! semantics, and evaluates model endpoints on sentiment and similarity
//! tasks over the resulting corpus.

pub mod asciigen;
pub mod charlevels;
pub mod error;
pub mod evalharness;
pub mod fonts;
pub mod manifest;
pub mod perceptual;
pub mod promptkit;
pub mod raster;
pub mod reporting;
pub mod sentiment;
pub mod wordart;

pub use asciigen::{AsciiArt, CellGrid, RenderParams};
pub use charlevels::{CharacterLevel, FillStream, LevelTag};
pub use error::{Error, Result};
pub use evalharness::{CampaignConfig, EvalRecord, ModelClient};
pub use manifest::{Manifest, SampleManifestEntry};
pub use perceptual::SsimParams;
pub use promptkit::{ParsedSentiment, ParsedSimilarity, PromptStrategy};
pub use raster::Raster;
pub use reporting::{AccuracyTable, DistributionTable, GroupBy};
pub use sentiment::Sentiment;
pub use wordart::WordSpec;
