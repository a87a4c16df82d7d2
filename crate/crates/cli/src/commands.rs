use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use asciiclash::asciigen::{self, GenerateOptions};
use asciiclash::evalharness::{self, CampaignOutcome, SIMILARITY_LEVELS};
use asciiclash::manifest::MANIFEST_FILE;
use asciiclash::perceptual::{self, SsimParams};
use asciiclash::promptkit::Task;
use asciiclash::reporting::{
    self, emit, Format, Joined, Report, ResolutionReport, SweepGridReport, CURVE_FONT_PT,
};
use asciiclash::{
    wordart, CampaignConfig, EvalRecord, LevelTag, Manifest, ModelClient, PromptStrategy, RenderParams, WordSpec,
};

use crate::config::RunConfig;
use crate::model;
use crate::Failure;

const RECORDS_FILE: &str = "records.jsonl";
const SIMILARITY_RECORDS_FILE: &str = "similarity_records.jsonl";
const SSIM_CSV: &str = "ssim_by_level.csv";
const MANUAL_REVIEW_CSV: &str = "manual_review.csv";

fn load_words(path: Option<&Path>, bundled: fn() -> Vec<WordSpec>) -> Result<Vec<WordSpec>, Failure> {
    match path {
        Some(p) => wordart::load_word_list(p).map_err(|e| Failure::Invalid(e.to_string())),
        None => Ok(bundled()),
    }
}

fn options(cfg: &RunConfig) -> GenerateOptions {
    GenerateOptions {
        seed: cfg.seed,
        compute_ssim: true,
        fit_margin: cfg.fit_margin,
    }
}

fn generate_into(cfg: &RunConfig, dir: &Path) -> Result<Manifest, Failure> {
    let words = load_words(cfg.words.as_deref(), wordart::core_words)?;
    let levels = cfg.levels_or(&LevelTag::ALL)?;
    let params = RenderParams {
        font_size_pt: cfg.font_size_pt,
        spacing_x: cfg.spacing_x,
        spacing_y: cfg.spacing_y,
        width: cfg.width,
        height: cfg.height,
    };
    let m = asciigen::generate_corpus_with(&words, &levels, params, options(cfg), dir)?;
    asciigen::generate_exemplars(cfg.seed, dir)?;
    println!("generated {} samples ({} words x {} levels) in {}", m.len(), words.len(), levels.len(), dir.display());
    Ok(m)
}

fn sweep_into(cfg: &RunConfig, words: Option<&Path>, levels: &[LevelTag], dir: &Path) -> Result<Manifest, Failure> {
    let words = load_words(words, wordart::sweep_words)?;
    let m = asciigen::generate_sweep_with(&words, levels, options(cfg), dir)?;
    println!("generated {} sweep samples ({} words x {} levels x 18 variants) in {}", m.len(), words.len(), levels.len(), dir.display());
    Ok(m)
}

fn load_manifest(path: &Path) -> Result<Manifest, Failure> {
    if !path.is_file() {
        return Err(Failure::Invalid(format!(
            "manifest {} not found; run `asciiclash generate` first or pass --manifest",
            path.display()
        )));
    }
    Ok(Manifest::load(path)?)
}

pub fn generate(cfg: &RunConfig) -> Result<(), Failure> {
    generate_into(cfg, &cfg.out)?;
    cfg.write_snapshot(&cfg.out)
}

pub fn sweep(cfg: &RunConfig) -> Result<(), Failure> {
    let words = cfg.sweep_words.as_deref().or(cfg.words.as_deref());
    sweep_into(cfg, words, &cfg.levels_or(&LevelTag::SWEEP)?, &cfg.out)?;
    cfg.write_snapshot(&cfg.out)
}

fn ssim_table(manifest: &Manifest, levels: Option<&[LevelTag]>, csv: &Path) -> Result<(), Failure> {
    let rows = perceptual::level_ssim_table(manifest, levels, &SsimParams::default())?;
    if let Some(dir) = csv.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Campaign(format!("{}: {e}", dir.display())))?;
    }
    perceptual::write_ssim_csv(&rows, csv)?;
    for r in &rows {
        println!("{}: mean {:.4} std {:.4} (n={})", r.level, r.mean_ssim, r.std_ssim, r.n);
    }
    println!("spread of level means {:.4}; wrote {}", perceptual::mean_spread(&rows), csv.display());
    Ok(())
}

/// `--out` may name the CSV itself or a directory to write it into.
pub fn ssim(cfg: &RunConfig, manifest: Option<PathBuf>) -> Result<(), Failure> {
    let to_file = cfg.out.extension().is_some_and(|e| e == "csv");
    let csv = if to_file { cfg.out.clone() } else { cfg.out.join(SSIM_CSV) };
    let manifest = match manifest {
        Some(m) => m,
        None if to_file => return Err(Failure::Invalid("--manifest is required when --out names a CSV file".into())),
        None => cfg.out.join(MANIFEST_FILE),
    };
    let m = load_manifest(&manifest)?;
    let levels = cfg.levels.as_ref().map(|_| cfg.levels_or(&LevelTag::ALL)).transpose()?;
    ssim_table(&m, levels.as_deref(), &csv)
}

fn campaign(cfg: &RunConfig, manifest: &Path, records: &Path, strategies: Vec<PromptStrategy>) -> CampaignConfig {
    let mut c = CampaignConfig::new(manifest, strategies);
    c.shuffle_seed = cfg.shuffle_seed();
    c.concurrency = cfg.concurrency;
    c.repeats = cfg.repeats;
    c.cache_dir = Some(cfg.cache_dir());
    c.records_path = Some(records.to_path_buf());
    c
}

fn summarize(what: &str, out: &CampaignOutcome, records: &Path) {
    let errors = out.records.iter().filter(|r| r.error.is_some()).count();
    let unparsed = out.records.iter().filter(|r| r.is_parse_failure()).count();
    println!(
        "{what}: {} records ({} calls, {} cache hits, {} resumed), {unparsed} parse failures, {errors} errors; records in {}",
        out.records.len(),
        out.calls,
        out.cache_hits,
        out.resumed,
        records.display()
    );
    if errors > 0 {
        eprintln!("warning: {errors} jobs failed; see the `error` field in {}", records.display());
    }
}

fn sentiment_strategies(cfg: &RunConfig) -> Result<Vec<PromptStrategy>, Failure> {
    let strategies = cfg.strategies()?;
    if let Some(s) = strategies.iter().find(|s| s.task() != Task::Sentiment || matches!(s, PromptStrategy::SimilarityCompare { .. })) {
        return Err(Failure::Invalid(format!("strategy {} belongs to the similarity subcommand", s.tag())));
    }
    Ok(strategies)
}

fn run(cfg: &CampaignConfig, client: &dyn ModelClient) -> Result<CampaignOutcome, Failure> {
    Ok(evalharness::run_campaign(cfg, client, &AtomicBool::new(false))?)
}

pub fn eval(cfg: &RunConfig, manifest: Option<PathBuf>, records: Option<PathBuf>) -> Result<(), Failure> {
    let strategies = sentiment_strategies(cfg)?;
    let client = model::build(&cfg.model, cfg.temperature)?;
    let manifest = manifest.unwrap_or_else(|| cfg.out.join(MANIFEST_FILE));
    let records = records.unwrap_or_else(|| cfg.out.join(RECORDS_FILE));
    load_manifest(&manifest)?;
    let mut c = campaign(cfg, &manifest, &records, strategies);
    c.levels = cfg.levels.as_ref().map(|_| cfg.levels_or(&LevelTag::ALL)).transpose()?;
    let out = run(&c, client.as_ref())?;
    summarize(client.identity(), &out, &records);
    cfg.write_snapshot(&cfg.out)
}

pub fn similarity(cfg: &RunConfig, manifest: Option<PathBuf>, records: Option<PathBuf>, with_hint: bool) -> Result<(), Failure> {
    let client = model::build(&cfg.model, cfg.temperature)?;
    let manifest = manifest.unwrap_or_else(|| cfg.out.join(MANIFEST_FILE));
    let records = records.unwrap_or_else(|| cfg.out.join(SIMILARITY_RECORDS_FILE));
    load_manifest(&manifest)?;
    let strategy = PromptStrategy::SimilarityCompare { with_hint };
    let mut c = campaign(cfg, &manifest, &records, vec![strategy]);
    c.levels = cfg.levels.as_ref().map(|_| cfg.levels_or(&SIMILARITY_LEVELS)).transpose()?;
    let out = evalharness::run_similarity_study(&c, with_hint, client.as_ref(), &AtomicBool::new(false))?;
    summarize(&format!("{} {}", client.identity(), strategy.tag()), &out, &records);
    cfg.write_snapshot(&cfg.out)
}

fn emit_all(report: &dyn Report, formats: &[Format], dir: &Path, written: &mut Vec<PathBuf>) -> Result<(), Failure> {
    for &f in formats {
        let path = dir.join(format!("{}.{}", report.title(), f.extension()));
        emit(report, f, &path)?;
        written.push(path);
    }
    Ok(())
}

/// Writes every report the record set supports and returns the files written.
fn write_reports(
    cfg: &RunConfig,
    manifest: &Manifest,
    records: &[EvalRecord],
    dir: &Path,
    manual_review: bool,
) -> Result<Vec<PathBuf>, Failure> {
    let formats = cfg.formats()?;
    let group_by = cfg.group_by()?;
    let joined = reporting::join(records, manifest)?;
    let mut written = Vec::new();

    let sentiment: Vec<Joined<'_>> = joined.iter().filter(|j| j.record.correct.is_some()).copied().collect();
    if !sentiment.is_empty() {
        let acc = reporting::accuracy_by_level(&sentiment, group_by, cfg.exclude_failures)?;
        emit_all(&acc, &formats, dir, &mut written)?;
        emit_all(&reporting::distribution_by_level(&sentiment, group_by), &formats, dir, &mut written)?;
        if sentiment.iter().any(|j| j.entry.font_size_pt != CURVE_FONT_PT) {
            let grid = SweepGridReport(reporting::sweep_grid(&sentiment, group_by));
            emit_all(&grid, &formats, dir, &mut written)?;
        }
        let widths: BTreeSet<u32> = sentiment.iter().map(|j| j.entry.width_px).collect();
        if widths.len() > 1 {
            let curve = ResolutionReport(reporting::resolution_curve(&sentiment, group_by));
            emit_all(&curve, &formats, dir, &mut written)?;
        }
        print!("{}", acc.to_csv());
    }

    let recognition: Vec<Joined<'_>> = joined.iter().filter(|j| j.record.recognized.is_some()).copied().collect();
    if !recognition.is_empty() {
        let summary = reporting::similarity_summary(&recognition, group_by);
        emit_all(&summary, &formats, dir, &mut written)?;
        if manual_review {
            let path = dir.join(MANUAL_REVIEW_CSV);
            let body = reporting::manual_review_csv(&recognition)?;
            std::fs::write(&path, body).map_err(|e| Failure::Campaign(format!("{}: {e}", path.display())))?;
            written.push(path);
        }
        print!("{}", summary.to_csv());
    }

    if written.is_empty() {
        return Err(Failure::Invalid("no records to report".into()));
    }
    println!("wrote {} report files to {}", written.len(), dir.display());
    Ok(written)
}

fn read_records(paths: &[PathBuf]) -> Result<Vec<EvalRecord>, Failure> {
    let mut out = Vec::new();
    for p in paths {
        if !p.is_file() {
            return Err(Failure::Invalid(format!("records file {} not found", p.display())));
        }
        out.extend(evalharness::read_records(p)?);
    }
    Ok(out)
}

pub fn report(cfg: &RunConfig, manifest: Option<PathBuf>, records: Vec<PathBuf>, manual_review: bool) -> Result<(), Failure> {
    let manifest = load_manifest(&manifest.unwrap_or_else(|| cfg.out.join(MANIFEST_FILE)))?;
    let records = if records.is_empty() { vec![cfg.out.join(RECORDS_FILE)] } else { records };
    let records = read_records(&records)?;
    write_reports(cfg, &manifest, &records, &cfg.out.join("reports"), manual_review)?;
    cfg.write_snapshot(&cfg.out)
}

/// Full offline-reproducible run under `--out`:
///
/// ```text
/// run_config.toml
/// corpus/     core corpus, originals, exemplars
/// sweep/      font/spacing/resolution sweep
/// records/    sentiment.jsonl, sweep.jsonl, similarity.jsonl
/// cache/      response cache
/// reports/    corpus reports, ssim_by_level.csv, sweep/ and similarity/
/// ```
pub fn all(cfg: &RunConfig) -> Result<(), Failure> {
    let strategies = sentiment_strategies(cfg)?;
    let client = model::build(&cfg.model, cfg.temperature)?;
    let root = &cfg.out;
    let (corpus_dir, sweep_dir) = (root.join("corpus"), root.join("sweep"));
    let (records_dir, reports_dir) = (root.join("records"), root.join("reports"));
    cfg.write_snapshot(root)?;

    let corpus = generate_into(cfg, &corpus_dir)?;
    let sweep = sweep_into(cfg, cfg.sweep_words.as_deref(), &LevelTag::SWEEP, &sweep_dir)?;
    ssim_table(&corpus, None, &reports_dir.join(SSIM_CSV))?;

    let path = records_dir.join("sentiment.jsonl");
    let c = campaign(cfg, &corpus_dir.join(MANIFEST_FILE), &path, strategies);
    let out = run(&c, client.as_ref())?;
    summarize("corpus", &out, &path);
    write_reports(cfg, &corpus, &out.records, &reports_dir, false)?;

    let path = records_dir.join("sweep.jsonl");
    let c = campaign(cfg, &sweep_dir.join(MANIFEST_FILE), &path, vec![PromptStrategy::Normal]);
    let out = run(&c, client.as_ref())?;
    summarize("sweep", &out, &path);
    write_reports(cfg, &sweep, &out.records, &reports_dir.join("sweep"), false)?;

    let generated: BTreeSet<LevelTag> = corpus.entries.iter().map(|e| e.level).collect();
    let levels: Vec<LevelTag> = SIMILARITY_LEVELS.into_iter().filter(|l| generated.contains(l)).collect();
    if !levels.is_empty() {
        let path = records_dir.join("similarity.jsonl");
        let mut records = Vec::new();
        for with_hint in [true, false] {
            let mut c = campaign(cfg, &corpus_dir.join(MANIFEST_FILE), &path, vec![]);
            c.levels = Some(levels.clone());
            let out = evalharness::run_similarity_study(&c, with_hint, client.as_ref(), &AtomicBool::new(false))?;
            summarize(PromptStrategy::SimilarityCompare { with_hint }.tag(), &out, &path);
            records.extend(out.records);
        }
        write_reports(cfg, &corpus, &records, &reports_dir.join("similarity"), true)?;
    }
    Ok(())
}
