//! Prompt templates for every task and strategy, and tolerant parsers for
//! model responses.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::asciigen::{EXEMPLAR_DIR, EXEMPLARS, exemplar_file_name};
use crate::error::{Error, Result};
use crate::sentiment::Sentiment;

pub const NORMAL_PROMPT: &str = "Please analyze the image's emotional tone (Positive, Negative, or Neutral) and provide a brief explanation in no more than 30 words. Return your answer in the following format:\n\nEmotion: [Positive/Negative/Neutral]; Reason: Brief explanation";

pub const NO_OCR_PROMPT: &str = "Analyze the emotional tone of this image (Positive, Negative, or Neutral) using ONLY visual perception.\n\nCRITICAL INSTRUCTION: You must NOT use OCR, text recognition, or any text processing tools. Return your analysis in format:\n\nEmotion: [Positive/Negative/Neutral]; Reason: Brief explanation";

pub const ZERO_SHOT_COT_PROMPT: &str = "Please analyze the image's emotional tone and determine if it is Positive, Negative, or Neutral.\n\nLet's think step by step about the emotional content of this image.\n\nReturn your answer in the following format:\n\"Step 1: [Your reasoning step]\",\n\"Step 2: [Your reasoning step]\",\n\"...\"";

pub const SIMILARITY_PROMPT: &str = "Please compare these two images and return a similarity score (1-10) and a brief explanation (within 30 words):\nScore: [similarity score]; Reason: brief explanation\n\nDo not use any external tools or code.";

const THREE_SHOT_INTRO: &str = "Please analyze the image's emotional tone and determine if it is Positive, Negative, or Neutral.\n\nI'll show you some examples of how to think step by step when analyzing ASCII art images:";

const THREE_SHOT_REASONING: [&str; 3] = [
    "Let's think step by step:\nStep 1: It is an ASCII art image.\nStep 2: The picture consists of a lot of random numbers, emotionally neutral.\nStep 3: The random numbers combine to form the word \"SUCK\", which has a strong negative connotation.\nStep 4: Overall, the sentiment of the picture is negative.\nTherefore, the emotion is: Negative\nReason: The word 'SUCK' conveys a derogatory sentiment, suggesting a negative emotional tone.",
    "Let's think step by step:\nStep 1: It is an ASCII art image.\nStep 2: The picture consists of a lot of random letters, emotionally neutral.\nStep 3: The random letters combine to form the word \"GOOD\", which has a positive connotation.\nStep 4: Overall, the sentiment of the picture is positive.\nTherefore, the emotion is: Positive\nReason: The word 'GOOD' conveys a commendatory sentiment, suggesting a positive emotional tone.",
    "Let's think step by step:\nStep 1: It is an ASCII art image.\nStep 2: The picture consists of a lot of positive words like \"GOOD\", \"NICE\", \"COOL\", emotionally positive.\nStep 3: The random numbers combine to form the word \"FUCK\", which has a strong negative connotation.\nStep 4: Although the words are positive, the overall image is negative.\nTherefore, the emotion is: Negative\nReason: The word \"FUCK\" conveys a derogatory sentiment and suggests a negative emotional tone, even though it is made up of positive words.",
];

const THREE_SHOT_QUERY: &str = "Now, please analyze the provided image.";

const THREE_SHOT_OUTPUT: &str = "Let's think step by step about the emotional content of this image.\n\nReturn your answer in the following JSON format:\n{\n  \"reasoning_steps\": [\n    \"Step 1: [Your reasoning step]\",\n    \"Step 2: [Your reasoning step]\",\n    \"...\"\n  ],\n  \"emotion\": \"[Positive/Negative/Neutral]\",\n  \"reason\": \"[Brief final explanation in no more than 50 words]\"\n}";

/// Serialized as its tag (`normal`, `no-ocr`, `cot0`, `cot3`, `similarity`,
/// `similarity-hint`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PromptStrategy {
    Normal,
    NoOcr,
    ZeroShotCot,
    ThreeShotCot,
    SimilarityCompare { with_hint: bool },
}

impl PromptStrategy {
    pub const SENTIMENT: [PromptStrategy; 4] = [
        PromptStrategy::Normal,
        PromptStrategy::NoOcr,
        PromptStrategy::ZeroShotCot,
        PromptStrategy::ThreeShotCot,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            PromptStrategy::Normal => "normal",
            PromptStrategy::NoOcr => "no-ocr",
            PromptStrategy::ZeroShotCot => "cot0",
            PromptStrategy::ThreeShotCot => "cot3",
            PromptStrategy::SimilarityCompare { with_hint: false } => "similarity",
            PromptStrategy::SimilarityCompare { with_hint: true } => "similarity-hint",
        }
    }

    pub fn task(self) -> Task {
        match self {
            PromptStrategy::SimilarityCompare { with_hint: true } => Task::Similarity,
            _ => Task::Sentiment,
        }
    }
}

impl fmt::Display for PromptStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for PromptStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "normal" => PromptStrategy::Normal,
            "no-ocr" => PromptStrategy::NoOcr,
            "cot0" => PromptStrategy::ZeroShotCot,
            "cot3" => PromptStrategy::ThreeShotCot,
            "similarity" => PromptStrategy::SimilarityCompare { with_hint: false },
            "similarity-hint" => PromptStrategy::SimilarityCompare { with_hint: true },
            other => {
                return Err(format!(
                    "unknown strategy {other:?} (expected normal, no-ocr, cot0, cot3, similarity, similarity-hint)"
                ));
            }
        })
    }
}

impl Serialize for PromptStrategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

impl<'de> Deserialize<'de> for PromptStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// What a response is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    /// A sentiment label compared with ground truth.
    Sentiment,
    /// A 1-10 similarity score plus a recognition check.
    Similarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageRole {
    /// The ASCII sample under evaluation.
    Sample,
    /// The original word art, shown as a hint.
    Original,
    Exemplar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptPart {
    Text(String),
    Image { role: ImageRole, path: PathBuf },
}

/// Ordered text and image parts of a single user message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub parts: Vec<PromptPart>,
}

impl Prompt {
    pub fn text(&self) -> String {
        self.parts
            .iter()
            .filter_map(|p| match p {
                PromptPart::Text(t) => Some(t.as_str()),
                PromptPart::Image { .. } => None,
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn images(&self) -> impl Iterator<Item = (ImageRole, &Path)> {
        self.parts.iter().filter_map(|p| match p {
            PromptPart::Image { role, path } => Some((*role, path.as_path())),
            PromptPart::Text(_) => None,
        })
    }
}

/// Exemplar images for the three-shot prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExemplarSet {
    pub images: [PathBuf; 3],
}

impl ExemplarSet {
    /// Locates `exemplars/` under a dataset directory; every image must exist.
    pub fn in_dir(dataset_dir: &Path) -> Result<Self> {
        let dir = dataset_dir.join(EXEMPLAR_DIR);
        let images = EXEMPLARS.map(|(word, level, _)| dir.join(exemplar_file_name(word, level)));
        for p in &images {
            if !p.is_file() {
                return Err(Error::MissingExemplar(p.clone()));
            }
        }
        Ok(ExemplarSet { images })
    }
}

/// Builds the message for one sample. Image slots are ordered sample first,
/// then the hint; three-shot exemplars precede the sample.
pub fn build_prompt(
    strategy: PromptStrategy,
    sample_image: &Path,
    hint_image: Option<&Path>,
    exemplars: Option<&ExemplarSet>,
) -> Result<Prompt> {
    let text = |s: &str| PromptPart::Text(s.to_string());
    let sample = PromptPart::Image {
        role: ImageRole::Sample,
        path: sample_image.to_path_buf(),
    };
    let parts = match strategy {
        PromptStrategy::Normal | PromptStrategy::SimilarityCompare { with_hint: false } => {
            vec![text(NORMAL_PROMPT), sample]
        }
        PromptStrategy::NoOcr => vec![text(NO_OCR_PROMPT), sample],
        PromptStrategy::ZeroShotCot => vec![text(ZERO_SHOT_COT_PROMPT), sample],
        PromptStrategy::SimilarityCompare { with_hint: true } => {
            let hint = hint_image.ok_or_else(|| {
                Error::InvalidParam("similarity comparison needs the original image".into())
            })?;
            vec![
                text(SIMILARITY_PROMPT),
                sample,
                PromptPart::Image {
                    role: ImageRole::Original,
                    path: hint.to_path_buf(),
                },
            ]
        }
        PromptStrategy::ThreeShotCot => {
            let ex = exemplars.ok_or_else(|| {
                Error::MissingExemplar(PathBuf::from(EXEMPLAR_DIR))
            })?;
            for p in &ex.images {
                if !p.is_file() {
                    return Err(Error::MissingExemplar(p.clone()));
                }
            }
            let mut parts = vec![text(THREE_SHOT_INTRO)];
            for (i, (path, reasoning)) in ex.images.iter().zip(THREE_SHOT_REASONING).enumerate() {
                parts.push(text(&format!("Example {}", i + 1)));
                parts.push(PromptPart::Image {
                    role: ImageRole::Exemplar,
                    path: path.clone(),
                });
                parts.push(text(reasoning));
            }
            parts.push(text(THREE_SHOT_QUERY));
            parts.push(sample);
            parts.push(text(THREE_SHOT_OUTPUT));
            parts
        }
    };
    Ok(Prompt { parts })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentiment {
    pub label: Sentiment,
    pub reason: String,
    pub steps: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedSimilarity {
    pub score: f64,
    pub reason: String,
    pub recognized_target: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseFailure {
    pub message: String,
}

impl ParseFailure {
    fn new(message: impl Into<String>) -> Self {
        ParseFailure {
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unparseable response: {}", self.message)
    }
}

fn re(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("static pattern"))
}

fn emotion_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(&R, r"(?i)\bemotion\s*(?:is)?\s*:?\s*\[?\s*(positive|negative|neutral)\b(/)?")
}

fn leading_label_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(&R, r"(?i)^\s*\[?(positive|negative|neutral)\]?\s*(?:[;:.,\-]|\n|$)")
}

fn reason_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(&R, r"(?i)\breason\s*:\s*(.+)")
}

fn step_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(&R, r#"(?im)^\W*step\s*\d+\s*:\s*(.+?)["”']?[.,]?\s*$"#)
}

fn number_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(&R, r"\d+(?:\.\d+)?")
}

fn score_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    re(&R, r"(?i)\bscore\s*:?\s*\[?\s*(\d+(?:\.\d+)?)")
}

fn strip_markup(raw: &str) -> String {
    raw.replace(['*', '`'], "")
}

fn clean_reason(s: &str) -> String {
    s.trim().trim_matches('"').trim().to_string()
}

fn parse_json_sentiment(text: &str) -> Option<ParsedSentiment> {
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    let v: serde_json::Value = serde_json::from_str(text.get(start..=end)?).ok()?;
    let label = v.get("emotion")?.as_str()?.parse().ok()?;
    let reason = v.get("reason").and_then(|r| r.as_str()).unwrap_or("").trim().to_string();
    let steps = v
        .get("reasoning_steps")
        .and_then(|s| s.as_array())
        .map(|a| a.iter().filter_map(|s| s.as_str().map(str::to_string)).collect())
        .unwrap_or_default();
    Some(ParsedSentiment { label, reason, steps })
}

fn extract_steps(text: &str) -> Vec<String> {
    step_re()
        .captures_iter(text)
        .map(|c| clean_reason(&c[1]))
        .filter(|s| !s.is_empty())
        .collect()
}

/// Extracts a sentiment label, never guessing: responses without an explicit
/// `Emotion: <label>`, a leading `<label>;`, or a JSON `emotion` field fail.
pub fn parse_sentiment(raw: &str) -> Result<ParsedSentiment, ParseFailure> {
    let text = strip_markup(raw);
    if let Some(parsed) = parse_json_sentiment(&text) {
        return Ok(parsed);
    }
    let steps = extract_steps(&text);

    // The last explicit "Emotion: X" wins; template echoes like
    // "[Positive/Negative/Neutral]" are skipped.
    let labelled = emotion_re()
        .captures_iter(&text)
        .filter(|c| c.get(2).is_none())
        .last()
        .map(|c| c[1].parse::<Sentiment>().expect("regex restricts labels"));
    if let Some(label) = labelled {
        let reason = reason_re()
            .captures_iter(&text)
            .last()
            .map(|c| clean_reason(&c[1]))
            .unwrap_or_default();
        return Ok(ParsedSentiment { label, reason, steps });
    }

    if let Some(c) = leading_label_re().captures(&text) {
        let label = c[1].parse::<Sentiment>().expect("regex restricts labels");
        let rest = &text[c.get(0).expect("match").end()..];
        let reason = match reason_re().captures(rest) {
            Some(r) => clean_reason(&r[1]),
            None => clean_reason(rest.lines().find(|l| !l.trim().is_empty()).unwrap_or("")),
        };
        return Ok(ParsedSentiment { label, reason, steps });
    }
    Err(ParseFailure::new("no sentiment label found"))
}

/// Whether `text` mentions `word` as a standalone token, ignoring case.
pub fn mentions_word(text: &str, word: &str) -> bool {
    if word.is_empty() {
        return false;
    }
    let pattern = format!(r"(?i)\b{}\b", regex::escape(word));
    Regex::new(&pattern).is_ok_and(|r| r.is_match(text))
}

/// Extracts the first score (preferring an explicit `Score:`), which must
/// lie in [1, 10]. Recognition is true iff the explanation names `target_word`.
pub fn parse_similarity(raw: &str, target_word: &str) -> Result<ParsedSimilarity, ParseFailure> {
    let text = strip_markup(raw);
    let m = score_re()
        .captures(&text)
        .and_then(|c| c.get(1))
        .or_else(|| number_re().find(&text))
        .ok_or_else(|| ParseFailure::new("no score found"))?;
    let score: f64 = m
        .as_str()
        .parse()
        .map_err(|_| ParseFailure::new(format!("bad number {}", m.as_str())))?;
    if !(1.0..=10.0).contains(&score) {
        return Err(ParseFailure::new(format!("score {score} outside [1, 10]")));
    }
    let rest = &text[m.end()..];
    let reason = match reason_re().captures(rest) {
        Some(c) => clean_reason(&c[1]),
        None => clean_reason(rest.trim_start_matches(|c: char| {
            c.is_whitespace() || matches!(c, ';' | ':' | ',' | '.' | '-' | ']' | '/')
        })),
    };
    let recognized_target = mentions_word(&reason, target_word);
    Ok(ParsedSimilarity {
        score,
        reason,
        recognized_target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_contain_anchor_phrases() {
        let p = Path::new("x.png");
        let normal = build_prompt(PromptStrategy::Normal, p, None, None).unwrap().text();
        assert!(normal.contains("Emotion: [Positive/Negative/Neutral]; Reason:"));
        assert!(normal.contains("Please analyze the image's emotional tone (Positive, Negative, or Neutral)"));
        let no_ocr = build_prompt(PromptStrategy::NoOcr, p, None, None).unwrap().text();
        assert!(no_ocr.contains("must NOT use OCR"));
        let cot = build_prompt(PromptStrategy::ZeroShotCot, p, None, None).unwrap().text();
        assert!(cot.contains("Let's think step by step about the emotional content of this image."));
        let sim = build_prompt(PromptStrategy::SimilarityCompare { with_hint: true }, p, Some(Path::new("o.png")), None)
            .unwrap();
        assert!(sim.text().contains("similarity score (1-10)"));
        assert!(sim.text().contains("Do not use any external tools or code"));
        let roles: Vec<_> = sim.images().map(|(r, _)| r).collect();
        assert_eq!(roles, [ImageRole::Sample, ImageRole::Original]);
    }

    #[test]
    fn similarity_requires_hint_image() {
        let p = Path::new("x.png");
        assert!(build_prompt(PromptStrategy::SimilarityCompare { with_hint: true }, p, None, None).is_err());
        let plain = build_prompt(PromptStrategy::SimilarityCompare { with_hint: false }, p, None, None).unwrap();
        assert_eq!(plain.images().count(), 1);
    }

    #[test]
    fn three_shot_needs_exemplars() {
        let p = Path::new("x.png");
        assert!(matches!(
            build_prompt(PromptStrategy::ThreeShotCot, p, None, None),
            Err(Error::MissingExemplar(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(ExemplarSet::in_dir(dir.path()), Err(Error::MissingExemplar(_))));

        let ex_dir = dir.path().join(EXEMPLAR_DIR);
        std::fs::create_dir_all(&ex_dir).unwrap();
        for (w, l, _) in EXEMPLARS {
            std::fs::write(ex_dir.join(exemplar_file_name(w, l)), b"png").unwrap();
        }
        let ex = ExemplarSet::in_dir(dir.path()).unwrap();
        let prompt = build_prompt(PromptStrategy::ThreeShotCot, p, None, Some(&ex)).unwrap();
        let roles: Vec<_> = prompt.images().map(|(r, _)| r).collect();
        assert_eq!(roles, [ImageRole::Exemplar, ImageRole::Exemplar, ImageRole::Exemplar, ImageRole::Sample]);
        let text = prompt.text();
        assert!(text.contains("Therefore, the emotion is: Negative"));
        assert!(text.contains("\"reasoning_steps\""));
    }

    #[test]
    fn strategy_tags_round_trip() {
        for s in PromptStrategy::SENTIMENT
            .into_iter()
            .chain([true, false].map(|with_hint| PromptStrategy::SimilarityCompare { with_hint }))
        {
            assert_eq!(s.tag().parse::<PromptStrategy>().unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.tag()));
            assert_eq!(serde_json::from_str::<PromptStrategy>(&json).unwrap(), s);
        }
        assert!("cot9".parse::<PromptStrategy>().is_err());
    }

    #[test]
    fn sentiment_formats() {
        let p = parse_sentiment("Emotion: Negative; Reason: The word 'BAD' prominently displayed suggests a negative sentiment or feeling.").unwrap();
        assert_eq!(p.label, Sentiment::Negative);
        assert!(p.reason.starts_with("The word 'BAD'"));

        let p = parse_sentiment("Positive; The words predominantly convey uplifting and joyful sentiments").unwrap();
        assert_eq!(p.label, Sentiment::Positive);
        assert!(p.reason.starts_with("The words"));

        let p = parse_sentiment("**Emotion**: Neutral; **Reason**: letters").unwrap();
        assert_eq!(p.label, Sentiment::Neutral);
        assert_eq!(p.reason, "letters");

        let json = r#"{"reasoning_steps": ["Step 1: a", "Step 2: b"], "emotion": "Negative", "reason": "shape"}"#;
        let p = parse_sentiment(json).unwrap();
        assert_eq!((p.label, p.steps.len(), p.reason.as_str()), (Sentiment::Negative, 2, "shape"));
    }

    #[test]
    fn sentiment_failures() {
        assert!(parse_sentiment("no sentiment here").is_err());
        assert!(parse_sentiment("").is_err());
        assert!(parse_sentiment("Emotion: [Positive/Negative/Neutral]; Reason: Brief explanation").is_err());
        assert!(parse_sentiment("It is not positive at all").is_err());
    }

    #[test]
    fn similarity_formats() {
        let p = parse_similarity("Score: 7; Reason: Both show 'BAD'", "BAD").unwrap();
        assert_eq!(p.score, 7.0);
        assert!(p.recognized_target);
        assert!(parse_similarity("Score: 11", "BAD").is_err());
        assert!(parse_similarity("Score: 0; nothing", "BAD").is_err());
        assert!(parse_similarity("no digits", "BAD").is_err());
        let p = parse_similarity("3.5; The BADGE is blurry", "BAD").unwrap();
        assert!(!p.recognized_target);
    }

    #[test]
    fn parsers_are_total_on_odd_input() {
        for s in ["{", "}{", "Emotion:", "Score:", "\u{0}\u{ffff}", "{\"emotion\": 5}", "1e309"] {
            let _ = parse_sentiment(s);
            let _ = parse_similarity(s, "X");
        }
    }
}
