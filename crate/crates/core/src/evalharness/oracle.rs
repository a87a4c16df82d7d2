//! Offline model clients. All are pure functions of the request context.

use std::collections::BTreeMap;
use std::path::Path;

use super::{ClientError, ModelClient, ModelRequest, SampleContext, DEFAULT_TEMPERATURE};
use crate::charlevels::{level_definition, DeclaredSentiment};
use crate::error::{Error, Result};
use crate::promptkit::PromptStrategy;
use crate::sentiment::Sentiment;

fn sentiment_answer(strategy: PromptStrategy, label: Sentiment, reason: &str, steps: [&str; 2]) -> String {
    match strategy {
        PromptStrategy::ZeroShotCot => format!(
            "\"Step 1: {}\",\n\"Step 2: {}\",\n\"Step 3: The overall tone is {}.\"\n\nEmotion: {label}; Reason: {reason}",
            steps[0],
            steps[1],
            label.as_str().to_ascii_lowercase(),
        ),
        PromptStrategy::ThreeShotCot => serde_json::json!({
            "reasoning_steps": [format!("Step 1: {}", steps[0]), format!("Step 2: {}", steps[1])],
            "emotion": label.as_str(),
            "reason": reason,
        })
        .to_string(),
        _ => format!("Emotion: {label}; Reason: {reason}"),
    }
}

/// Sees the word through any fill: answers the ground-truth label and names
/// the word.
#[derive(Debug, Clone)]
pub struct VisualOracle {
    temperature: f64,
}

impl VisualOracle {
    pub fn new() -> Self {
        VisualOracle {
            temperature: DEFAULT_TEMPERATURE,
        }
    }
}

impl Default for VisualOracle {
    fn default() -> Self {
        Self::new()
    }
}

impl ModelClient for VisualOracle {
    fn identity(&self) -> &str {
        "oracle:visual"
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }

    fn send(&self, req: &ModelRequest) -> std::result::Result<String, ClientError> {
        let c = &req.context;
        if c.strategy == (PromptStrategy::SimilarityCompare { with_hint: true }) {
            return Ok(format!("Score: 10; Reason: Both images show the word {} in the same shape.", c.word));
        }
        let reason = format!(
            "The characters form the word {}, which reads as {}.",
            c.word,
            c.label.as_str().to_ascii_lowercase()
        );
        Ok(sentiment_answer(
            c.strategy,
            c.label,
            &reason,
            ["The image is large letter shapes built from characters.", &format!("The shapes spell {}.", c.word)],
        ))
    }
}

/// Reads only the fill characters, never the word they outline: answers the
/// sentiment the level's characters carry, treating meaningless fills as
/// the word shape's negative cue.
#[derive(Debug, Clone)]
pub struct TextBiasedOracle {
    temperature: f64,
}

impl TextBiasedOracle {
    pub fn new() -> Self {
        TextBiasedOracle {
            temperature: DEFAULT_TEMPERATURE,
        }
    }

    pub fn label_for(ctx: &SampleContext) -> Sentiment {
        level_definition(ctx.level).declared_sentiment.character_reading()
    }
}

impl Default for TextBiasedOracle {
    fn default() -> Self {
        Self::new()
    }
}

impl ModelClient for TextBiasedOracle {
    fn identity(&self) -> &str {
        "oracle:text-biased"
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }

    fn send(&self, req: &ModelRequest) -> std::result::Result<String, ClientError> {
        let c = &req.context;
        let level = level_definition(c.level);
        let description = level.description.to_ascii_lowercase();
        if c.strategy == (PromptStrategy::SimilarityCompare { with_hint: true }) {
            return Ok(match level.declared_sentiment {
                DeclaredSentiment::None => format!(
                    "Score: 8; Reason: The symbols trace the same letters, spelling {}.",
                    c.word
                ),
                DeclaredSentiment::Neutral => {
                    format!("Score: 5; Reason: Both images have a similar layout, but one is made of {description}.")
                }
                DeclaredSentiment::Positive => {
                    format!("Score: 2; Reason: The first image is mostly {description} with no clear letters.")
                }
            });
        }
        let label = Self::label_for(c);
        let reason = match level.declared_sentiment {
            DeclaredSentiment::None => format!(
                "The {description} carry no meaning, so the dark shape itself sets a negative tone."
            ),
            _ => format!("The image is filled with {description}, which read as {}.", label.as_str().to_ascii_lowercase()),
        };
        Ok(sentiment_answer(
            c.strategy,
            label,
            &reason,
            [&format!("The image is made of {description}."), "The characters themselves set the tone."],
        ))
    }
}

/// Always answers the same label (and a mid-range similarity score).
#[derive(Debug, Clone)]
pub struct ConstantOracle {
    label: Sentiment,
    identity: String,
}

impl ConstantOracle {
    pub fn new(label: Sentiment) -> Self {
        ConstantOracle {
            label,
            identity: format!("oracle:constant:{}", label.as_str().to_ascii_lowercase()),
        }
    }
}

impl ModelClient for ConstantOracle {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn temperature(&self) -> f64 {
        DEFAULT_TEMPERATURE
    }

    fn send(&self, req: &ModelRequest) -> std::result::Result<String, ClientError> {
        if req.context.strategy == (PromptStrategy::SimilarityCompare { with_hint: true }) {
            return Ok("Score: 5; Reason: Constant answer.".into());
        }
        Ok(format!("Emotion: {}; Reason: Constant answer.", self.label))
    }
}

/// Replays canned responses. Keys are tried in order: the request digest,
/// `<sample_id>::<strategy>`, `<sample_id>`, then `*`.
#[derive(Debug, Clone)]
pub struct ScriptedOracle {
    identity: String,
    responses: BTreeMap<String, String>,
}

impl ScriptedOracle {
    pub fn new(name: &str, responses: BTreeMap<String, String>) -> Self {
        ScriptedOracle {
            identity: format!("oracle:scripted:{name}"),
            responses,
        }
    }

    /// Loads a fixture: a JSON object of key to raw response. The identity
    /// includes a hash of the fixture so edited fixtures never hit stale cache
    /// entries.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let responses: BTreeMap<String, String> = serde_json::from_slice(&bytes)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("fixture");
        let hash = hex::encode(<sha2::Sha256 as sha2::Digest>::digest(&bytes));
        Ok(Self::new(&format!("{stem}@{}", &hash[..8]), responses))
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    fn lookup(&self, req: &ModelRequest) -> Option<&String> {
        let c = &req.context;
        let digest = super::request_digest(&self.identity, self.temperature(), req);
        [
            digest,
            format!("{}::{}", c.sample_id, c.strategy),
            c.sample_id.clone(),
            "*".to_string(),
        ]
        .iter()
        .find_map(|k| self.responses.get(k))
    }
}

impl ModelClient for ScriptedOracle {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn temperature(&self) -> f64 {
        DEFAULT_TEMPERATURE
    }

    fn send(&self, req: &ModelRequest) -> std::result::Result<String, ClientError> {
        self.lookup(req).cloned().ok_or_else(|| {
            ClientError::Fatal(format!(
                "no scripted response for {} ({})",
                req.context.sample_id, req.context.strategy
            ))
        })
    }
}
