//! Acceptance suite. Runs every criterion in order and prints one
//! `criterion N: PASS|FAIL|SKIP` line each; exits non-zero if any fails.

use std::collections::{BTreeMap, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use asciiclash::asciigen::{self, SWEEP_FONT_SIZES, SWEEP_SPACINGS, SWEEP_WIDTHS};
use asciiclash::evalharness::{
    self, duplicate_jobs, read_records, run_campaign, CampaignConfig, ClientError, LiveClient, ModelClient,
    ModelRequest, ScriptedOracle, TextBiasedOracle, VisualOracle,
};
use asciiclash::manifest::MANIFEST_FILE;
use asciiclash::perceptual::{self, mean_spread, SsimParams};
use asciiclash::promptkit::{parse_sentiment, parse_similarity, PromptStrategy};
use asciiclash::reporting::{
    accuracy_by_level, distribution_by_level, join, resolution_curve, sweep_grid, Format, GroupBy, Report,
    ResolutionReport, SweepGridReport,
};
use asciiclash::{wordart, LevelTag, Manifest, Raster, Sentiment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const SEED: u64 = 7;
const SSIM_REGRESSION_TOL: f64 = 1e-6;

fn fixture(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap()
}

fn scratch() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| tempfile::tempdir().unwrap()).path()
}

fn corpus_dir() -> PathBuf {
    scratch().join("corpus")
}

fn sweep_dir() -> PathBuf {
    scratch().join("sweep")
}

fn generate_corpus(dir: &Path) -> Manifest {
    let m = asciigen::generate_corpus(&wordart::core_words(), &LevelTag::ALL, SEED, dir).unwrap();
    asciigen::generate_exemplars(SEED, dir).unwrap();
    m
}

fn corpus() -> &'static Manifest {
    static M: OnceLock<Manifest> = OnceLock::new();
    M.get_or_init(|| generate_corpus(&corpus_dir()))
}

fn sweep() -> &'static Manifest {
    static M: OnceLock<Manifest> = OnceLock::new();
    M.get_or_init(|| asciigen::generate_sweep(&wordart::sweep_words(), &LevelTag::SWEEP, SEED, &sweep_dir()).unwrap())
}

fn check(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok { Ok(()) } else { Err(what.into()) }
}

fn campaign(manifest_dir: &Path, strategies: Vec<PromptStrategy>) -> CampaignConfig {
    let mut cfg = CampaignConfig::new(manifest_dir.join(MANIFEST_FILE), strategies);
    cfg.shuffle_seed = SEED;
    cfg.concurrency = 8;
    cfg
}

fn no_cancel() -> AtomicBool {
    AtomicBool::new(false)
}

fn accuracy_row(manifest: &Manifest, records: &[asciiclash::EvalRecord]) -> (Vec<f64>, f64) {
    let j = join(records, manifest).unwrap();
    let t = accuracy_by_level(&j, GroupBy::Model, false).unwrap();
    assert_eq!(t.rows.len(), 1, "one model expected");
    let row = &t.rows[0];
    let acc = LevelTag::ALL.iter().map(|l| row.accuracy.get(l).copied().unwrap_or(f64::NAN)).collect();
    (acc, row.average.unwrap())
}

fn all_reports(manifest: &Manifest, records: &[asciiclash::EvalRecord]) -> Vec<(String, String)> {
    let j = join(records, manifest).unwrap();
    let acc = accuracy_by_level(&j, GroupBy::ModelStrategy, false).unwrap();
    let dist = distribution_by_level(&j, GroupBy::ModelStrategy);
    let mut out = Vec::new();
    let reports: [&dyn Report; 2] = [&acc, &dist];
    for r in reports {
        for f in [Format::Csv, Format::Json, Format::Svg] {
            out.push((format!("{}.{}", r.title(), f.extension()), r.render(f).unwrap()));
        }
    }
    out
}

fn criterion_1() -> Result<String, String> {
    let start = Instant::now();
    let m = corpus();
    let secs = start.elapsed().as_secs_f64();
    check(m.len() == 700, format!("{} entries", m.len()))?;
    check(m.entries.iter().all(|e| e.label == Sentiment::Negative), "non-negative label")?;
    let ids: HashSet<_> = m.entries.iter().map(|e| &e.sample_id).collect();
    check(ids.len() == 700, "duplicate sample ids")?;
    for level in LevelTag::ALL {
        let n = m.entries.iter().filter(|e| e.level == level).count();
        check(n == 100, format!("{level}: {n} entries"))?;
    }
    let reloaded = Manifest::load(&corpus_dir().join(MANIFEST_FILE)).map_err(|e| e.to_string())?;
    check(reloaded.len() == 700, "reloaded manifest size")?;
    check(secs < 300.0, format!("took {secs:.1}s"))?;
    Ok(format!("700 entries, all Negative, {secs:.1}s"))
}

fn criterion_2() -> Result<String, String> {
    let start = Instant::now();
    let m = sweep();
    check(m.len() == 1440, format!("{} entries", m.len()))?;
    let mut per_key: BTreeMap<(String, LevelTag), HashSet<(u32, u32, u32, u32)>> = BTreeMap::new();
    for e in &m.entries {
        per_key
            .entry((e.word.clone(), e.level))
            .or_default()
            .insert((e.font_size_pt, e.spacing_px, e.width_px, e.height_px));
    }
    check(per_key.len() == 80, format!("{} (word, level) pairs", per_key.len()))?;
    let mut expected = HashSet::new();
    for f in SWEEP_FONT_SIZES {
        for s in SWEEP_SPACINGS {
            expected.insert((f, s, 1200, 600));
        }
    }
    for w in SWEEP_WIDTHS {
        expected.insert((12, 0, w, w / 2));
    }
    check(expected.len() == 18, "variant table")?;
    for ((word, level), variants) in &per_key {
        check(*variants == expected, format!("{word} {level}: wrong variants"))?;
    }
    for e in &m.entries {
        let img = Raster::load_png(&m.image_path(e)).map_err(|e| e.to_string())?;
        check(img.dims() == (e.width_px, e.height_px), format!("{} has size {:?}", e.sample_id, img.dims()))?;
    }
    Ok(format!("1440 = 20 x 18 x 4, {:.1}s", start.elapsed().as_secs_f64()))
}

fn tree_bytes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_3() -> Result<String, String> {
    let first = corpus();
    let second_dir = scratch().join("corpus-again");
    let second = generate_corpus(&second_dir);
    let a = tree_bytes(&corpus_dir());
    let b = tree_bytes(&second_dir);
    check(a.len() == b.len(), format!("{} vs {} files", a.len(), b.len()))?;
    for (path, bytes) in &a {
        check(b.get(path) == Some(bytes), format!("{} differs", path.display()))?;
    }
    let mut reports = Vec::new();
    for (dir, m) in [(corpus_dir(), first), (second_dir.clone(), &second)] {
        let out = run_campaign(&campaign(&dir, vec![PromptStrategy::Normal]), &TextBiasedOracle::new(), &no_cancel())
            .map_err(|e| e.to_string())?;
        reports.push(all_reports(m, &out.records));
    }
    check(reports[0] == reports[1], "reports differ")?;
    Ok(format!("{} files and {} reports byte-identical", a.len(), reports[0].len()))
}

/// Brute-force uniform-window SSIM from exact integer moments.
fn ssim_oracle(a: &Raster, b: &Raster, win: u32) -> f64 {
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let (nx, ny) = (a.width() / win, a.height() / win);
    let n = (win * win) as f64;
    let mut total = 0.0;
    for wy in 0..ny {
        for wx in 0..nx {
            let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0u64, 0u64, 0u64, 0u64, 0u64);
            for y in wy * win..(wy + 1) * win {
                for x in wx * win..(wx + 1) * win {
                    let (p, q) = (a.get(x, y) as u64, b.get(x, y) as u64);
                    sx += p;
                    sy += q;
                    sxx += p * p;
                    syy += q * q;
                    sxy += p * q;
                }
            }
            let (mx, my) = (sx as f64 / n, sy as f64 / n);
            let vx = (sxx as f64 * n - (sx * sx) as f64) / (n * n);
            let vy = (syy as f64 * n - (sy * sy) as f64) / (n * n);
            let cov = (sxy as f64 * n - (sx * sy) as f64) / (n * n);
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    }
    total / (nx * ny) as f64
}

fn random_raster(rng: &mut ChaCha8Rng, w: u32, h: u32) -> Raster {
    let px = (0..w * h).map(|_| rng.random()).collect();
    Raster::from_pixels(w, h, px).unwrap()
}

fn criterion_4() -> Result<String, String> {
    let p = SsimParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_identity = 0f64;
    for _ in 0..20 {
        let (w, h) = (rng.random_range(8..96), rng.random_range(8..96));
        let x = random_raster(&mut rng, w, h);
        let s = perceptual::ssim(&x, &x, &p).unwrap();
        worst_identity = worst_identity.max((s - 1.0).abs());
        let y = random_raster(&mut rng, w, h);
        let (xy, yx) = (perceptual::ssim(&x, &y, &p).unwrap(), perceptual::ssim(&y, &x, &p).unwrap());
        check(xy.to_bits() == yx.to_bits(), format!("asymmetric: {xy} vs {yx}"))?;
    }
    check(worst_identity <= 1e-9, format!("ssim(x,x) off by {worst_identity:e}"))?;
    let mut worst_oracle = 0f64;
    for i in 0..5 {
        let x = random_raster(&mut rng, 32, 32);
        // Mix of unrelated and correlated pairs.
        let y = if i % 2 == 0 {
            random_raster(&mut rng, 32, 32)
        } else {
            let noise = random_raster(&mut rng, 32, 32);
            let px = x.pixels().iter().zip(noise.pixels()).map(|(a, b)| ((*a as u16 * 3 + *b as u16) / 4) as u8).collect();
            Raster::from_pixels(32, 32, px).unwrap()
        };
        let got = perceptual::ssim(&x, &y, &p).unwrap();
        worst_oracle = worst_oracle.max((got - ssim_oracle(&x, &y, 8)).abs());
    }
    check(worst_oracle <= 1e-9, format!("oracle mismatch {worst_oracle:e}"))?;
    Ok(format!("identity err {worst_identity:.1e}, oracle err {worst_oracle:.1e}"))
}

fn criterion_5() -> Result<String, String> {
    let m = corpus();
    let rows = perceptual::level_ssim_table(m, Some(&LevelTag::SWEEP), &SsimParams::default()).map_err(|e| e.to_string())?;
    let spread = mean_spread(&rows);
    let means: Vec<String> = rows.iter().map(|r| format!("{}={:.6}", r.level, r.mean_ssim)).collect();
    check(spread <= 0.2, format!("spread {spread:.4} > 0.2 ({})", means.join(" ")))?;
    let reference = fixture("ssim_reference.json");
    for r in &rows {
        let want = reference["mean_ssim"][r.level.as_str()]
            .as_f64()
            .ok_or_else(|| format!("no frozen reference for {} ({})", r.level, means.join(" ")))?;
        check(
            (r.mean_ssim - want).abs() <= SSIM_REGRESSION_TOL,
            format!("{} mean {:.6} drifted from frozen {want:.6}", r.level, r.mean_ssim),
        )?;
    }
    let frozen_bound = reference["spread_bound"].as_f64().unwrap();
    check(spread <= frozen_bound, format!("spread {spread:.6} > frozen bound {frozen_bound}"))?;
    Ok(format!("spread {spread:.4} <= 0.2; {}", means.join(" ")))
}

fn criterion_6() -> Result<String, String> {
    let cases = fixture("reference_responses.json");
    let cases = cases["cases"].as_array().unwrap();
    for c in cases {
        let id = c["id"].as_str().unwrap();
        let raw = c["raw"].as_str().unwrap();
        match c["kind"].as_str().unwrap() {
            "sentiment" => {
                let got = parse_sentiment(raw).ok();
                match c["label"].as_str() {
                    Some(label) => {
                        let got = got.ok_or_else(|| format!("{id}: parse failed"))?;
                        check(got.label.as_str() == label, format!("{id}: {} != {label}", got.label))?;
                        check(!got.reason.is_empty(), format!("{id}: empty reason"))?;
                        if let Some(steps) = c["steps"].as_u64() {
                            check(got.steps.len() as u64 == steps, format!("{id}: {} steps", got.steps.len()))?;
                        }
                    }
                    None => check(got.is_none(), format!("{id}: expected a parse failure"))?,
                }
            }
            "similarity" => {
                let got = parse_similarity(raw, c["target"].as_str().unwrap()).map_err(|e| format!("{id}: {e}"))?;
                check(got.score == c["score"].as_f64().unwrap(), format!("{id}: score {}", got.score))?;
                check(got.recognized_target == c["recognized"].as_bool().unwrap(), format!("{id}: recognition"))?;
            }
            other => return Err(format!("{id}: unknown kind {other}")),
        }
    }
    Ok(format!("{} fixture responses reproduced", cases.len()))
}

fn criterion_7() -> Result<String, String> {
    let start = Instant::now();
    let m = corpus();
    let out = run_campaign(&campaign(&corpus_dir(), vec![PromptStrategy::Normal]), &TextBiasedOracle::new(), &no_cancel())
        .map_err(|e| e.to_string())?;
    check(out.records.len() == 700, format!("{} records", out.records.len()))?;
    let (acc, _) = accuracy_row(m, &out.records);
    check(acc == [100.0, 100.0, 0.0, 0.0, 0.0, 0.0, 0.0], format!("text-biased accuracy {acc:?}"))?;
    let j = join(&out.records, m).unwrap();
    let dist = distribution_by_level(&j, GroupBy::Model);
    let group = dist.groups.values().next().unwrap();
    for (level, counts) in group {
        let dominant = match level {
            LevelTag::L1 | LevelTag::L2 => counts.negative,
            LevelTag::L3 | LevelTag::L4 => counts.neutral,
            _ => counts.positive,
        };
        check(dominant == 100 && counts.total() == 100, format!("{level}: {counts:?}"))?;
    }

    let out = run_campaign(&campaign(&corpus_dir(), PromptStrategy::SENTIMENT.to_vec()), &VisualOracle::new(), &no_cancel())
        .map_err(|e| e.to_string())?;
    check(out.records.len() == 2800, format!("{} visual records", out.records.len()))?;
    let j = join(&out.records, m).unwrap();
    let t = accuracy_by_level(&j, GroupBy::Strategy, false).unwrap();
    for row in &t.rows {
        check(row.accuracy.values().all(|a| *a == 100.0), format!("visual {}: {:?}", row.group, row.accuracy))?;
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 600.0, format!("took {secs:.1}s"))?;
    Ok(format!("text-biased (100,100,0,0,0,0,0) with tri-modal distribution; visual 100% x 4 strategies; {secs:.1}s"))
}

/// Reference responses by label and level, taken from the response fixture.
fn canned(level: LevelTag, label: Sentiment, word: &str) -> String {
    match (label, level) {
        (Sentiment::Negative, _) => format!("Negative; The word '{word}' conveys a negative sentiment, indicating displeasure or criticism"),
        (Sentiment::Neutral, _) => "Neutral; The image contains a pattern of letters without any discernible emotional context or imagery.".into(),
        (Sentiment::Positive, LevelTag::L7) => "Positive; The text conveys themes of hope, music, and resilience, suggesting a joyful and uplifting emotional tone.".into(),
        (Sentiment::Positive, _) => "Positive; The words predominantly convey uplifting and joyful sentiments, emphasizing love, happiness, and warmth.".into(),
    }
}

fn wrong_label(level: LevelTag) -> Sentiment {
    match level {
        LevelTag::L3 | LevelTag::L4 => Sentiment::Neutral,
        _ => Sentiment::Positive,
    }
}

/// Answers the first `k` entries (in manifest order) of each group correctly.
fn script_groups<K: Ord>(
    manifest: &Manifest,
    key: impl Fn(&asciiclash::SampleManifestEntry) -> Option<K>,
    quota: impl Fn(&K) -> usize,
) -> BTreeMap<String, String> {
    let mut seen: BTreeMap<K, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for e in &manifest.entries {
        let Some(k) = key(e) else { continue };
        let q = quota(&k);
        let i = seen.entry(k).or_default();
        let label = if *i < q { e.label } else { wrong_label(e.level) };
        *i += 1;
        out.insert(e.sample_id.clone(), canned(e.level, label, &e.word));
    }
    out
}

fn criterion_8() -> Result<String, String> {
    let row = fixture("accuracy_row_reference.json");
    let m = corpus();
    let responses = script_groups(m, |e| Some(e.level), |l| row["accuracy"][l.as_str()].as_u64().unwrap() as usize);
    let oracle = ScriptedOracle::new("reference-row", responses);
    let out = run_campaign(&campaign(&corpus_dir(), vec![PromptStrategy::Normal]), &oracle, &no_cancel()).map_err(|e| e.to_string())?;
    let (acc, avg) = accuracy_row(m, &out.records);
    for (l, a) in LevelTag::ALL.iter().zip(&acc) {
        let want = row["accuracy"][l.as_str()].as_f64().unwrap();
        check((a - want).abs() < 1e-9, format!("{l}: {a} != {want}"))?;
    }
    let want_avg = row["average"].as_f64().unwrap();
    check((avg - want_avg).abs() <= 0.01, format!("avg {avg:.4} != {want_avg}"))?;

    let grid = fixture("sweep_grid_reference.json");
    let s = sweep();
    let levels: Vec<LevelTag> = grid["levels"].as_array().unwrap().iter().map(|l| l.as_str().unwrap().parse().unwrap()).collect();
    let mut cell_pct: BTreeMap<(u32, u32, LevelTag), usize> = BTreeMap::new();
    for c in grid["cells"].as_array().unwrap() {
        let (f, sp) = (c["font_pt"].as_u64().unwrap() as u32, c["spacing_px"].as_u64().unwrap() as u32);
        for (l, a) in levels.iter().zip(c["accuracy"].as_array().unwrap()) {
            cell_pct.insert((f, sp, *l), a.as_u64().unwrap() as usize);
        }
    }
    let curve = fixture("resolution_curve_reference.json");
    let curve_level: LevelTag = curve["level"].as_str().unwrap().parse().unwrap();
    let words = wordart::sweep_words().len();
    let mut responses = script_groups(
        s,
        |e| {
            let in_grid = (e.width_px, e.height_px) == (1200, 600) && e.font_size_pt != 12;
            in_grid.then_some((e.font_size_pt, e.spacing_px, e.level))
        },
        |k| cell_pct[k] * words / 100,
    );
    responses.extend(script_groups(
        s,
        |e| (e.font_size_pt == 12 && e.level == curve_level).then_some(e.width_px),
        |w| curve["accuracy_by_width"][w.to_string()].as_u64().unwrap() as usize * words / 100,
    ));
    responses.insert("*".into(), "Positive; The words predominantly convey uplifting and joyful sentiments.".into());
    let oracle = ScriptedOracle::new("reference-sweep", responses);
    let out = run_campaign(&campaign(&sweep_dir(), vec![PromptStrategy::Normal]), &oracle, &no_cancel()).map_err(|e| e.to_string())?;
    check(out.records.len() == 1440, format!("{} sweep records", out.records.len()))?;
    let j = join(&out.records, s).unwrap();
    let grids = sweep_grid(&j, GroupBy::Model);
    let g = &grids[0];
    check(g.cell(10, 8, LevelTag::L2) == Some(100.0), "L2 10pt/8px cell")?;
    let mut avgs = Vec::new();
    for (l, want) in levels.iter().zip(grid["level_average"].as_array().unwrap()) {
        let got = g.level_average[l];
        let want = want.as_f64().unwrap();
        check((got - want).abs() <= 0.1, format!("{l} grid average {got:.2} != {want}"))?;
        avgs.push(format!("{got:.1}"));
    }
    let curves = resolution_curve(&j, GroupBy::Model);
    let c = &curves[0];
    check(c.accuracy(400, curve_level) == Some(90.0), format!("{curve_level}@400 = {:?}", c.accuracy(400, curve_level)))?;
    check(c.accuracy(1200, curve_level) == Some(0.0), format!("{curve_level}@1200 = {:?}", c.accuracy(1200, curve_level)))?;
    let _ = (SweepGridReport(grids.clone()).to_csv(), ResolutionReport(curves.clone()).to_svg());
    Ok(format!(
        "row ({}) avg {avg:.2}; grid averages ({}); {curve_level} 90% @400, 0% @1200",
        acc.iter().map(|a| format!("{a:.2}")).collect::<Vec<_>>().join(", "),
        avgs.join(", ")
    ))
}

/// Raises `cancel` once `limit` calls have been made.
struct StopAfter<'a> {
    inner: TextBiasedOracle,
    calls: std::sync::atomic::AtomicUsize,
    limit: usize,
    cancel: &'a AtomicBool,
}

impl ModelClient for StopAfter<'_> {
    fn identity(&self) -> &str {
        self.inner.identity()
    }
    fn temperature(&self) -> f64 {
        self.inner.temperature()
    }
    fn send(&self, r: &ModelRequest) -> Result<String, ClientError> {
        if self.calls.fetch_add(1, Ordering::SeqCst) + 1 >= self.limit {
            self.cancel.store(true, Ordering::SeqCst);
        }
        self.inner.send(r)
    }
}

fn criterion_9() -> Result<String, String> {
    let m = corpus();
    let work = scratch().join("c9");
    let mut cfg = campaign(&corpus_dir(), vec![PromptStrategy::Normal, PromptStrategy::ZeroShotCot]);
    cfg.cache_dir = Some(work.join("cache"));
    cfg.records_path = Some(work.join("run1.jsonl"));
    let first = run_campaign(&cfg, &TextBiasedOracle::new(), &no_cancel()).map_err(|e| e.to_string())?;
    check(first.calls == 1400, format!("first run made {} calls", first.calls))?;
    cfg.records_path = Some(work.join("run2.jsonl"));
    let second = run_campaign(&cfg, &TextBiasedOracle::new(), &no_cancel()).map_err(|e| e.to_string())?;
    check(second.calls == 0 && second.cache_hits == 1400, format!("rerun: {} calls, {} hits", second.calls, second.cache_hits))?;
    check(all_reports(m, &first.records) == all_reports(m, &second.records), "rerun reports differ")?;

    let cancel = AtomicBool::new(false);
    let stopper = StopAfter {
        inner: TextBiasedOracle::new(),
        calls: Default::default(),
        limit: 700,
        cancel: &cancel,
    };
    let mut cfg = campaign(&corpus_dir(), vec![PromptStrategy::Normal, PromptStrategy::ZeroShotCot]);
    cfg.concurrency = 1;
    cfg.cache_dir = Some(work.join("cache-resume"));
    cfg.records_path = Some(work.join("resume.jsonl"));
    let partial = run_campaign(&cfg, &stopper, &cancel).map_err(|e| e.to_string())?;
    check(!partial.complete && partial.records.len() == 700, format!("interrupted with {} records", partial.records.len()))?;
    let resumed = run_campaign(&cfg, &TextBiasedOracle::new(), &no_cancel()).map_err(|e| e.to_string())?;
    check(resumed.complete && resumed.resumed == 700 && resumed.calls == 700, format!("resume: {} resumed, {} calls", resumed.resumed, resumed.calls))?;
    let on_disk = read_records(cfg.records_path.as_ref().unwrap()).map_err(|e| e.to_string())?;
    check(on_disk.len() == 1400 && duplicate_jobs(&on_disk) == 0, format!("{} records on disk", on_disk.len()))?;
    check(all_reports(m, &on_disk) == all_reports(m, &first.records), "resumed reports differ")?;
    Ok("rerun: 0 calls, 1400 cache hits, identical reports; 50% interrupt + resume: 1400 records, no duplicates".into())
}

fn criterion_10() -> Option<Result<String, String>> {
    if std::env::var(evalharness::API_KEY_ENV).map_or(true, |v| v.trim().is_empty()) {
        return None;
    }
    Some((|| {
        let client = LiveClient::from_env(evalharness::DEFAULT_MODEL, evalharness::DEFAULT_TEMPERATURE).map_err(|e| e.to_string())?;
        let m = corpus();
        let dir = scratch().join("live");
        let l1: Vec<_> = m.entries.iter().filter(|e| e.level == LevelTag::L1).take(5).cloned().collect();
        std::fs::create_dir_all(&dir).unwrap();
        let subset = Manifest::new(corpus_dir(), l1);
        subset.write_jsonl(&corpus_dir().join("live-manifest.jsonl")).unwrap();
        let mut cfg = CampaignConfig::new(corpus_dir().join("live-manifest.jsonl"), vec![PromptStrategy::Normal]);
        cfg.concurrency = 2;
        cfg.records_path = Some(dir.join("records.jsonl"));
        let out = run_campaign(&cfg, &client, &no_cancel()).map_err(|e| e.to_string())?;
        check(out.records.len() == 5, format!("{} records", out.records.len()))?;
        for r in &out.records {
            check(r.error.is_none(), format!("{}: {}", r.sample_id, r.error.clone().unwrap_or_default()))?;
            check(r.label.is_some(), format!("{}: unparseable {:?}", r.sample_id, r.raw))?;
        }
        let correct = out.records.iter().filter(|r| r.correct == Some(true)).count();
        Ok(format!("5 L1 samples answered by {}, {correct}/5 correct (not gated)", client.identity()))
    })())
}

fn run(n: u32, name: &str, f: impl FnOnce() -> Result<String, String>) -> bool {
    let start = Instant::now();
    let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = Duration::from_secs_f64(start.elapsed().as_secs_f64()).as_secs_f64();
    match result {
        Ok(detail) => {
            println!("criterion {n}: PASS  {name} ({detail}) [{secs:.1}s]");
            true
        }
        Err(why) => {
            println!("criterion {n}: FAIL  {name}: {why} [{secs:.1}s]");
            false
        }
    }
}

fn main() {
    // `cargo test -- --list` and filters from the default harness are not supported;
    // listing prints nothing so tooling that enumerates tests still works.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut ok = true;
    ok &= run(1, "corpus cardinality", criterion_1);
    ok &= run(2, "sweep cardinality", criterion_2);
    ok &= run(3, "determinism", criterion_3);
    ok &= run(4, "SSIM identities", criterion_4);
    ok &= run(5, "SSIM level flatness", criterion_5);
    ok &= run(6, "parser regression", criterion_6);
    ok &= run(7, "oracle end-to-end", criterion_7);
    ok &= run(8, "report arithmetic", criterion_8);
    ok &= run(9, "cache idempotence", criterion_9);
    match criterion_10() {
        None => println!("criterion 10: SKIP  live smoke test ({} not set)", evalharness::API_KEY_ENV),
        Some(r) => ok &= run(10, "live smoke test", || r),
    }
    if !ok {
        std::process::exit(1);
    }
}
