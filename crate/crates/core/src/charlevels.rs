//! The seven character-semantics levels and their seeded fill streams.
//!
//! Levels run from semantically empty fills (solid blocks, symbols) up to
//! positive words and poem text. L5 and L7 pack whole words into horizontal
//! foreground runs so every word stays readable; the other levels draw single
//! characters uniformly at random.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sentiment::Sentiment;

/// Filler for run cells too short to hold the next whole word.
pub const PAD: char = '\u{00B7}';

pub const POOL_SCHEMA_VERSION: u32 = 1;

const POEM: &str = include_str!("../data/hope_poem.txt");

const L2_SYMBOLS: [&str; 5] = ["$", "@", "#", "&", "%"];

const L5_WORDS: [&str; 25] = [
    "GOOD", "GREAT", "COOL", "NICE", "WELL", "SMART", "TOP", "JOY", "LOVE", "HAPPY", "KIND",
    "BRAVE", "BEST", "FUN", "HOPE", "PEACE", "SMILE", "WARM", "SWEET", "FINE", "BRIGHT", "CALM",
    "GLAD", "WIN", "FRESH",
];

const L6_EMOJI: [char; 20] = [
    '\u{1F600}', '\u{1F601}', '\u{1F603}', '\u{1F604}', '\u{1F60A}', '\u{1F60D}', '\u{263A}',
    '\u{263B}', '\u{2665}', '\u{2661}', '\u{2764}', '\u{2765}', '\u{2605}', '\u{2606}', '\u{2600}',
    '\u{263C}', '\u{273F}', '\u{2740}', '\u{270C}', '\u{266A}',
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LevelTag {
    L1,
    L2,
    L3,
    L4,
    L5,
    L6,
    L7,
}

impl LevelTag {
    pub const ALL: [LevelTag; 7] = [
        LevelTag::L1,
        LevelTag::L2,
        LevelTag::L3,
        LevelTag::L4,
        LevelTag::L5,
        LevelTag::L6,
        LevelTag::L7,
    ];

    /// Levels shared by the similarity study and the parameter sweep.
    pub const SWEEP: [LevelTag; 4] = [LevelTag::L2, LevelTag::L3, LevelTag::L4, LevelTag::L7];

    pub fn as_str(self) -> &'static str {
        match self {
            LevelTag::L1 => "L1",
            LevelTag::L2 => "L2",
            LevelTag::L3 => "L3",
            LevelTag::L4 => "L4",
            LevelTag::L5 => "L5",
            LevelTag::L6 => "L6",
            LevelTag::L7 => "L7",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Parses `L1,L3,L5`, `L2..L4` or a mix of both.
    pub fn parse_list(s: &str) -> Result<Vec<LevelTag>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some((a, b)) = part.split_once("..") {
                let a: LevelTag = a.parse().map_err(Error::InvalidParam)?;
                let b: LevelTag = b.parse().map_err(Error::InvalidParam)?;
                if a > b {
                    return Err(Error::InvalidParam(format!("empty level range {part}")));
                }
                out.extend(LevelTag::ALL[a.index()..=b.index()].iter().copied());
            } else {
                out.push(part.parse().map_err(Error::InvalidParam)?);
            }
        }
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::InvalidParam("no levels given".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for LevelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LevelTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LevelTag::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown level {s:?} (expected L1..L7)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SemanticComplexity {
    Lowest,
    Low,
    Medium,
    High,
    Highest,
}

/// Sentiment a level's characters carry on their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeclaredSentiment {
    None,
    Neutral,
    Positive,
}

impl DeclaredSentiment {
    /// The label a reader who only looks at the characters would give:
    /// meaningless fills leave the word shape (always negative) as the only cue.
    pub fn character_reading(self) -> Sentiment {
        match self {
            DeclaredSentiment::None => Sentiment::Negative,
            DeclaredSentiment::Neutral => Sentiment::Neutral,
            DeclaredSentiment::Positive => Sentiment::Positive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoolKind {
    /// Each foreground cell gets one uniformly drawn token.
    Characters,
    /// Whole words drawn at random, packed into runs.
    RandomWords,
    /// Whole words in text order (cyclic), packed into runs.
    OrderedWords,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterLevel {
    pub tag: LevelTag,
    pub description: String,
    pub semantic_complexity: SemanticComplexity,
    pub declared_sentiment: DeclaredSentiment,
    pub kind: PoolKind,
    pub token_pool: Vec<String>,
}

impl CharacterLevel {
    /// Every character a fill of this level may emit (excluding [`PAD`]).
    pub fn alphabet(&self) -> Vec<char> {
        let mut chars: Vec<char> = self.token_pool.iter().flat_map(|t| t.chars()).collect();
        chars.sort();
        chars.dedup();
        chars
    }

    pub fn allows(&self, c: char) -> bool {
        c == PAD || self.token_pool.iter().any(|t| t.contains(c))
    }
}

fn poem_words() -> Vec<String> {
    POEM.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_ascii_alphabetic())
                .collect::<String>()
                .to_ascii_uppercase()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

fn build(tag: LevelTag) -> CharacterLevel {
    use DeclaredSentiment as D;
    use SemanticComplexity as C;
    let chars = |it: &mut dyn Iterator<Item = char>| it.map(String::from).collect::<Vec<_>>();
    let (description, complexity, sentiment, kind, pool) = match tag {
        LevelTag::L1 => (
            "Solid block (U+2588)",
            C::Lowest,
            D::None,
            PoolKind::Characters,
            vec!["\u{2588}".to_string()],
        ),
        LevelTag::L2 => (
            "Simple symbols",
            C::Low,
            D::None,
            PoolKind::Characters,
            L2_SYMBOLS.iter().map(|s| s.to_string()).collect(),
        ),
        LevelTag::L3 => (
            "Digits (0-9)",
            C::Low,
            D::Neutral,
            PoolKind::Characters,
            chars(&mut ('0'..='9')),
        ),
        LevelTag::L4 => (
            "Capital letters (A-Z)",
            C::Medium,
            D::Neutral,
            PoolKind::Characters,
            chars(&mut ('A'..='Z')),
        ),
        LevelTag::L5 => (
            "Positive words",
            C::High,
            D::Positive,
            PoolKind::RandomWords,
            L5_WORDS.iter().map(|s| s.to_string()).collect(),
        ),
        LevelTag::L6 => (
            "Positive emojis (monochrome)",
            C::High,
            D::Positive,
            PoolKind::Characters,
            chars(&mut L6_EMOJI.into_iter()),
        ),
        LevelTag::L7 => (
            "Positive poem fragments (\"Hope\" is the thing with feathers)",
            C::Highest,
            D::Positive,
            PoolKind::OrderedWords,
            poem_words(),
        ),
    };
    CharacterLevel {
        tag,
        description: description.to_string(),
        semantic_complexity: complexity,
        declared_sentiment: sentiment,
        kind,
        token_pool: pool,
    }
}

fn all_levels() -> &'static [CharacterLevel; 7] {
    static LEVELS: OnceLock<[CharacterLevel; 7]> = OnceLock::new();
    LEVELS.get_or_init(|| LevelTag::ALL.map(build))
}

/// The frozen definition of a level.
pub fn level_definition(tag: LevelTag) -> &'static CharacterLevel {
    &all_levels()[tag.index()]
}

/// Versioned export of every level pool, suitable for citing in reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolExport {
    pub schema_version: u32,
    pub pool_version: String,
    pub levels: Vec<CharacterLevel>,
}

/// `"<schema>:<first 12 hex chars of the SHA-256 over all pools>"`.
pub fn pool_version() -> &'static str {
    static VERSION: OnceLock<String> = OnceLock::new();
    VERSION.get_or_init(|| {
        let bytes = serde_json::to_vec(all_levels().as_slice()).expect("levels serialize");
        let digest = hex::encode(Sha256::digest(&bytes));
        format!("{POOL_SCHEMA_VERSION}:{}", &digest[..12])
    })
}

pub fn export_pools() -> PoolExport {
    PoolExport {
        schema_version: POOL_SCHEMA_VERSION,
        pool_version: pool_version().to_string(),
        levels: all_levels().to_vec(),
    }
}

/// Fans a campaign seed out to a per-sample seed.
pub fn derive_seed(seed: u64, word: &str, level: LevelTag) -> u64 {
    let digest = Sha256::digest(format!("{seed}:{word}:{level}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Position of the cell being filled within its horizontal foreground run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunContext {
    /// Cells left in the run, including the current one.
    pub remaining: usize,
    /// Total length of the run.
    pub run_len: usize,
}

impl RunContext {
    pub fn at_start(self) -> bool {
        self.remaining == self.run_len
    }
}

/// Seeded token source for one sample.
pub struct FillStream {
    level: &'static CharacterLevel,
    seed: u64,
    rng: ChaCha8Rng,
    /// Word-level levels: index of the next word to place, if already chosen.
    upcoming: Option<usize>,
    /// OrderedWords cursor.
    cursor: usize,
    /// Letters of the word being written, and the offset into it.
    current: Vec<char>,
    offset: usize,
}

impl FillStream {
    pub fn new(tag: LevelTag, seed: u64) -> Self {
        let level = level_definition(tag);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cursor = match level.kind {
            PoolKind::OrderedWords => rng.random_range(0..level.token_pool.len()),
            _ => 0,
        };
        FillStream {
            level,
            seed,
            rng,
            upcoming: None,
            cursor,
            current: Vec::new(),
            offset: 0,
        }
    }

    pub fn level(&self) -> &'static CharacterLevel {
        self.level
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn peek_word(&mut self) -> usize {
        if let Some(i) = self.upcoming {
            return i;
        }
        let i = match self.level.kind {
            PoolKind::RandomWords => self.rng.random_range(0..self.level.token_pool.len()),
            _ => {
                let i = self.cursor;
                self.cursor = (self.cursor + 1) % self.level.token_pool.len();
                i
            }
        };
        self.upcoming = Some(i);
        i
    }

    fn word_len(&self, i: usize) -> usize {
        self.level.token_pool[i].chars().count()
    }

    /// Picks the next word for a run with `ctx.remaining` free cells.
    ///
    /// The upcoming word is placed only if it fits; otherwise it stays
    /// queued for the next run. A word that does not fit even in a fresh run
    /// is dropped so that over-long words cannot stall the stream.
    fn start_word(&mut self, ctx: RunContext) -> bool {
        let attempts = if ctx.at_start() { self.level.token_pool.len() } else { 1 };
        for _ in 0..attempts {
            let i = self.peek_word();
            if self.word_len(i) <= ctx.remaining {
                self.upcoming = None;
                self.current = self.level.token_pool[i].chars().collect();
                self.offset = 0;
                return true;
            }
            if ctx.at_start() {
                self.upcoming = None;
            }
        }
        false
    }

    /// Token for the next foreground cell, visited in row-major order.
    pub fn next_token(&mut self, ctx: RunContext) -> char {
        match self.level.kind {
            PoolKind::Characters => {
                let pool = &self.level.token_pool;
                let i = if pool.len() == 1 { 0 } else { self.rng.random_range(0..pool.len()) };
                pool[i].chars().next().expect("non-empty token")
            }
            PoolKind::RandomWords | PoolKind::OrderedWords => {
                if ctx.at_start() {
                    self.current.clear();
                    self.offset = 0;
                }
                if self.offset >= self.current.len() && !self.start_word(ctx) {
                    self.current.clear();
                    self.offset = 0;
                    return PAD;
                }
                let c = self.current[self.offset];
                self.offset += 1;
                c
            }
        }
    }
}
