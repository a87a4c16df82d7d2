//! Evaluation campaigns: (sample x strategy) jobs against a model client,
//! with a digest-keyed response cache, retries, seeded presentation order
//! and append-only JSONL records.

mod cache;
mod live;
mod oracle;

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::charlevels::LevelTag;
use crate::error::{Error, Result};
use crate::manifest::{Manifest, SampleManifestEntry};
use crate::promptkit::{
    build_prompt, mentions_word, parse_sentiment, parse_similarity, ExemplarSet, ImageRole, Prompt,
    PromptPart, PromptStrategy, Task,
};
use crate::sentiment::Sentiment;

pub use cache::{CachedResponse, ResponseCache};
pub use live::{extract_content, LiveClient, API_KEY_ENV, API_URL_ENV, DEFAULT_MODEL};
pub use oracle::{ConstantOracle, ScriptedOracle, TextBiasedOracle, VisualOracle};

pub const DEFAULT_TEMPERATURE: f64 = 0.7;

/// Ground truth and bookkeeping that travel with a request. Oracles read it;
/// it is not part of the request digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleContext {
    pub sample_id: String,
    pub word: String,
    pub level: LevelTag,
    pub label: Sentiment,
    pub strategy: PromptStrategy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RequestPart {
    Text(String),
    Image { role: ImageRole, png: Vec<u8> },
}

#[derive(Debug, Clone)]
pub struct ModelRequest {
    pub parts: Vec<RequestPart>,
    pub context: SampleContext,
    pub repeat: u32,
}

impl ModelRequest {
    /// Materializes a prompt by reading every referenced image.
    pub fn from_prompt(prompt: &Prompt, context: SampleContext, repeat: u32) -> Result<Self> {
        let parts = prompt
            .parts
            .iter()
            .map(|p| match p {
                PromptPart::Text(t) => Ok(RequestPart::Text(t.clone())),
                PromptPart::Image { role, path } => Ok(RequestPart::Image {
                    role: *role,
                    png: std::fs::read(path).map_err(|e| Error::io(path, e))?,
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelRequest { parts, context, repeat })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClientError {
    /// Worth retrying: rate limits, timeouts, server errors.
    Transient(String),
    Fatal(String),
}

impl std::fmt::Display for ClientError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClientError::Transient(m) => write!(f, "transient: {m}"),
            ClientError::Fatal(m) => write!(f, "fatal: {m}"),
        }
    }
}

/// A model endpoint. Implementations must be safe to call concurrently.
pub trait ModelClient: Send + Sync {
    fn identity(&self) -> &str;
    fn temperature(&self) -> f64;
    fn send(&self, request: &ModelRequest) -> std::result::Result<String, ClientError>;
}

/// Hex SHA-256 over model identity, temperature, repeat index and the
/// length-prefixed message parts (text bytes and image bytes).
pub fn request_digest(identity: &str, temperature: f64, request: &ModelRequest) -> String {
    let mut h = Sha256::new();
    let mut field = |tag: u8, bytes: &[u8]| {
        h.update([tag]);
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    };
    field(b'M', identity.as_bytes());
    field(b'T', &temperature.to_bits().to_le_bytes());
    field(b'R', &request.repeat.to_le_bytes());
    for part in &request.parts {
        match part {
            RequestPart::Text(t) => field(b't', t.as_bytes()),
            RequestPart::Image { png, .. } => field(b'i', png),
        }
    }
    hex::encode(h.finalize())
}

/// One evaluated job. Field names are a frozen file format; `repeat` and
/// `error` are only written when set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub sample_id: String,
    pub strategy: PromptStrategy,
    pub model: String,
    pub raw: String,
    /// Parsed sentiment; `None` on a parse or transport failure.
    pub label: Option<Sentiment>,
    /// Parsed similarity score (similarity task only).
    pub score: Option<f64>,
    /// Label matches ground truth (sentiment task only).
    pub correct: Option<bool>,
    /// The response names the target word (similarity strategies only).
    pub recognized: Option<bool>,
    pub latency_ms: u64,
    pub cached: bool,
    pub digest: String,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub repeat: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

impl EvalRecord {
    /// The response arrived but carried no usable answer.
    pub fn is_parse_failure(&self) -> bool {
        self.error.is_none() && self.label.is_none() && self.score.is_none()
    }

    fn job_key(&self) -> JobKey {
        (self.model.clone(), self.sample_id.clone(), self.strategy, self.repeat)
    }
}

type JobKey = (String, String, PromptStrategy, u32);

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts per request, at least 1.
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff: Duration::from_secs(2),
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    pub fn backoff(&self, attempt: u32) -> Duration {
        self.initial_backoff.mul_f64(self.multiplier.powi(attempt as i32))
    }
}

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub manifest: PathBuf,
    pub strategies: Vec<PromptStrategy>,
    /// Restrict to these levels; `None` keeps every manifest entry.
    pub levels: Option<Vec<LevelTag>>,
    pub shuffle_seed: u64,
    pub concurrency: usize,
    pub retry: RetryPolicy,
    pub cache_dir: Option<PathBuf>,
    /// Append-only record sink; existing records are resumed from.
    pub records_path: Option<PathBuf>,
    pub repeats: u32,
}

impl CampaignConfig {
    pub fn new(manifest: impl Into<PathBuf>, strategies: Vec<PromptStrategy>) -> Self {
        CampaignConfig {
            manifest: manifest.into(),
            strategies,
            levels: None,
            shuffle_seed: 0,
            concurrency: 4,
            retry: RetryPolicy::default(),
            cache_dir: None,
            records_path: None,
            repeats: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.concurrency == 0 {
            return Err(Error::InvalidParam("concurrency must be at least 1".into()));
        }
        if self.retry.max_attempts == 0 {
            return Err(Error::InvalidParam("max attempts must be at least 1".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidParam("repeats must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidParam("no strategies given".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct CampaignOutcome {
    /// One record per job, in presentation order.
    pub records: Vec<EvalRecord>,
    /// Calls issued to the client, retries included.
    pub calls: usize,
    pub cache_hits: usize,
    /// Jobs satisfied by records already in the sink.
    pub resumed: usize,
    /// False when cancelled before every job ran.
    pub complete: bool,
}

#[derive(Debug, Clone)]
struct Job {
    entry: SampleManifestEntry,
    strategy: PromptStrategy,
    repeat: u32,
}

/// The seeded presentation order of every (sample, strategy, repeat) job.
fn schedule(manifest: &Manifest, cfg: &CampaignConfig) -> Vec<Job> {
    let mut jobs = Vec::new();
    for entry in &manifest.entries {
        if cfg.levels.as_ref().is_some_and(|l| !l.contains(&entry.level)) {
            continue;
        }
        for &strategy in &cfg.strategies {
            for repeat in 0..cfg.repeats {
                jobs.push(Job {
                    entry: entry.clone(),
                    strategy,
                    repeat,
                });
            }
        }
    }
    jobs.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.shuffle_seed));
    jobs
}

/// Loads records from a sink, truncating a torn final line left by an
/// interrupted write.
pub fn load_records(path: &Path) -> Result<Vec<EvalRecord>> {
    let mut f = match OpenOptions::new().read(true).write(true).open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut records = Vec::new();
    let mut good_len = 0u64;
    let mut reader = BufReader::new(&mut f);
    let mut line = String::new();
    let mut line_no = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let complete = line.ends_with('\n');
        if complete && line.trim().is_empty() {
            good_len += n as u64;
            continue;
        }
        if !complete {
            break;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Records {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        records.push(record);
        good_len += n as u64;
    }
    drop(reader);
    f.set_len(good_len).map_err(|e| Error::io(path, e))?;
    Ok(records)
}

pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Records {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

struct Sink {
    file: Option<Mutex<File>>,
    path: PathBuf,
}

impl Sink {
    fn open(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                }
                let mut f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(p)
                    .map_err(|e| Error::io(p, e))?;
                f.seek(SeekFrom::End(0)).map_err(|e| Error::io(p, e))?;
                Some(Mutex::new(f))
            }
            None => None,
        };
        Ok(Sink {
            file,
            path: path.map(Path::to_path_buf).unwrap_or_default(),
        })
    }

    fn append(&self, record: &EvalRecord) -> Result<()> {
        if let Some(f) = &self.file {
            let mut line = serde_json::to_string(record)?;
            line.push('\n');
            let mut f = f.lock().unwrap_or_else(|p| p.into_inner());
            f.write_all(line.as_bytes()).map_err(|e| Error::io(&self.path, e))?;
            f.flush().map_err(|e| Error::io(&self.path, e))?;
        }
        Ok(())
    }
}

struct Runner<'a> {
    manifest: &'a Manifest,
    exemplars: Option<ExemplarSet>,
    client: &'a dyn ModelClient,
    cache: Option<ResponseCache>,
    retry: &'a RetryPolicy,
    calls: AtomicUsize,
    cache_hits: AtomicUsize,
}

impl Runner<'_> {
    fn request(&self, job: &Job) -> Result<ModelRequest> {
        let e = &job.entry;
        let hint = self.manifest.original_path(e);
        let prompt = build_prompt(
            job.strategy,
            &self.manifest.image_path(e),
            Some(&hint),
            self.exemplars.as_ref(),
        )?;
        let context = SampleContext {
            sample_id: e.sample_id.clone(),
            word: e.word.clone(),
            level: e.level,
            label: e.label,
            strategy: job.strategy,
        };
        ModelRequest::from_prompt(&prompt, context, job.repeat)
    }

    fn call(&self, req: &ModelRequest) -> std::result::Result<(String, u64), String> {
        let mut attempt = 0;
        loop {
            self.calls.fetch_add(1, Ordering::Relaxed);
            let start = Instant::now();
            match self.client.send(req) {
                Ok(raw) => return Ok((raw, start.elapsed().as_millis() as u64)),
                Err(ClientError::Transient(_)) if attempt + 1 < self.retry.max_attempts => {
                    std::thread::sleep(self.retry.backoff(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(format!("{e} (after {} attempt(s))", attempt + 1)),
            }
        }
    }

    fn run(&self, job: &Job) -> Result<EvalRecord> {
        let req = self.request(job)?;
        let model = self.client.identity().to_string();
        let digest = request_digest(&model, self.client.temperature(), &req);
        let cached = self.cache.as_ref().and_then(|c| c.get(&digest));
        let (raw, latency_ms, was_cached, error) = match cached {
            Some(hit) => {
                self.cache_hits.fetch_add(1, Ordering::Relaxed);
                (hit.raw, hit.latency_ms, true, None)
            }
            None => match self.call(&req) {
                Ok((raw, latency)) => {
                    if let Some(c) = &self.cache {
                        c.put(&digest, &raw, latency)?;
                    }
                    (raw, latency, false, None)
                }
                Err(msg) => (String::new(), 0, false, Some(msg)),
            },
        };
        let mut record = EvalRecord {
            sample_id: job.entry.sample_id.clone(),
            strategy: job.strategy,
            model,
            raw,
            label: None,
            score: None,
            correct: None,
            recognized: None,
            latency_ms,
            cached: was_cached,
            digest,
            repeat: job.repeat,
            error,
        };
        score_record(&mut record, &job.entry);
        Ok(record)
    }
}

/// Fills the parsed fields of a record from its raw response.
/// Parse and transport failures count as incorrect.
pub fn score_record(record: &mut EvalRecord, entry: &SampleManifestEntry) {
    let failed = record.error.is_some();
    match record.strategy.task() {
        Task::Sentiment => {
            let parsed = if failed { None } else { parse_sentiment(&record.raw).ok() };
            record.label = parsed.as_ref().map(|p| p.label);
            record.correct = Some(record.label == Some(entry.label));
            if matches!(record.strategy, PromptStrategy::SimilarityCompare { .. }) {
                record.recognized = Some(parsed.is_some_and(|p| mentions_word(&p.reason, &entry.word)));
            }
        }
        Task::Similarity => {
            let parsed = if failed { None } else { parse_similarity(&record.raw, &entry.word).ok() };
            record.score = parsed.as_ref().map(|p| p.score);
            record.recognized = Some(parsed.is_some_and(|p| p.recognized_target));
        }
    }
}

/// Runs every job of a campaign.
///
/// Aborts before any call on a malformed manifest, a missing image or a
/// missing exemplar. Jobs whose records are already in the sink are resumed
/// rather than re-run. Setting `cancel` stops dispatching new jobs; in-flight
/// jobs finish and are recorded.
pub fn run_campaign(cfg: &CampaignConfig, client: &dyn ModelClient, cancel: &AtomicBool) -> Result<CampaignOutcome> {
    cfg.validate()?;
    let manifest = Manifest::load(&cfg.manifest)?;
    let jobs = schedule(&manifest, cfg);

    for job in &jobs {
        let image = manifest.image_path(&job.entry);
        if !image.is_file() {
            return Err(Error::io(image, std::io::ErrorKind::NotFound.into()));
        }
        if job.strategy == (PromptStrategy::SimilarityCompare { with_hint: true }) {
            let original = manifest.original_path(&job.entry);
            if !original.is_file() {
                return Err(Error::io(original, std::io::ErrorKind::NotFound.into()));
            }
        }
    }
    let exemplars = if cfg.strategies.contains(&PromptStrategy::ThreeShotCot) {
        Some(ExemplarSet::in_dir(manifest.dir())?)
    } else {
        None
    };

    let previous = match &cfg.records_path {
        Some(p) => load_records(p)?,
        None => Vec::new(),
    };
    let mut slots: Vec<Option<EvalRecord>> = vec![None; jobs.len()];
    let mut pending = Vec::new();
    let mut resumed = 0;
    {
        let mut by_key: std::collections::HashMap<JobKey, EvalRecord> =
            previous.into_iter().map(|r| (r.job_key(), r)).collect();
        for (i, job) in jobs.iter().enumerate() {
            let key = (
                client.identity().to_string(),
                job.entry.sample_id.clone(),
                job.strategy,
                job.repeat,
            );
            match by_key.remove(&key) {
                Some(r) => {
                    slots[i] = Some(r);
                    resumed += 1;
                }
                None => pending.push(i),
            }
        }
    }

    let cache = cfg.cache_dir.as_deref().map(ResponseCache::open).transpose()?;
    let sink = Sink::open(cfg.records_path.as_deref())?;
    let runner = Runner {
        manifest: &manifest,
        exemplars,
        client,
        cache,
        retry: &cfg.retry,
        calls: AtomicUsize::new(0),
        cache_hits: AtomicUsize::new(0),
    };

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, EvalRecord)>> = Mutex::new(Vec::new());
    let first_error: Mutex<Option<Error>> = Mutex::new(None);
    let abort = AtomicBool::new(false);
    std::thread::scope(|scope| {
        for _ in 0..cfg.concurrency.min(pending.len().max(1)) {
            scope.spawn(|| loop {
                if cancel.load(Ordering::SeqCst) || abort.load(Ordering::SeqCst) {
                    break;
                }
                let n = next.fetch_add(1, Ordering::SeqCst);
                let Some(&i) = pending.get(n) else { break };
                let outcome = runner.run(&jobs[i]).and_then(|r| sink.append(&r).map(|_| r));
                match outcome {
                    Ok(r) => results.lock().unwrap_or_else(|p| p.into_inner()).push((i, r)),
                    Err(e) => {
                        abort.store(true, Ordering::SeqCst);
                        first_error.lock().unwrap_or_else(|p| p.into_inner()).get_or_insert(e);
                        break;
                    }
                }
            });
        }
    });
    if let Some(e) = first_error.into_inner().unwrap_or_else(|p| p.into_inner()) {
        return Err(e);
    }
    for (i, r) in results.into_inner().unwrap_or_else(|p| p.into_inner()) {
        slots[i] = Some(r);
    }
    let complete = slots.iter().all(Option::is_some);
    Ok(CampaignOutcome {
        records: slots.into_iter().flatten().collect(),
        calls: runner.calls.into_inner(),
        cache_hits: runner.cache_hits.into_inner(),
        resumed,
        complete,
    })
}

/// Similarity study over the levels that carry no emoji or block fills.
pub const SIMILARITY_LEVELS: [LevelTag; 4] = LevelTag::SWEEP;

/// Runs the image-similarity study: with a hint the model compares the ASCII
/// image with its original and rates similarity; without one it sees only the
/// ASCII image and recognition is read from its explanation.
pub fn run_similarity_study(
    cfg: &CampaignConfig,
    with_hint: bool,
    client: &dyn ModelClient,
    cancel: &AtomicBool,
) -> Result<CampaignOutcome> {
    let mut cfg = cfg.clone();
    cfg.strategies = vec![PromptStrategy::SimilarityCompare { with_hint }];
    if cfg.levels.is_none() {
        cfg.levels = Some(SIMILARITY_LEVELS.to_vec());
    }
    run_campaign(&cfg, client, cancel)
}

/// Keys of jobs present in a record set, for duplicate checks.
pub fn duplicate_jobs(records: &[EvalRecord]) -> usize {
    let mut seen = HashSet::new();
    records.iter().filter(|r| !seen.insert(r.job_key())).count()
}
