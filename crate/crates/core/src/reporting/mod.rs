//! Aggregation of evaluation records into accuracy tables, prediction
//! distributions, font/spacing grids, resolution curves and similarity
//! summaries, with bit-stable CSV/JSON and static SVG output.
//!
//! Records carry only a sample id, so every aggregate joins them with the
//! manifest they were run against. All aggregates are order-invariant: they
//! are built from integer counts or from sorted values.

pub mod svg;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asciigen::{SWEEP_FONT_SIZES, SWEEP_SPACINGS};
use crate::charlevels::LevelTag;
use crate::error::{Error, Result};
use crate::evalharness::EvalRecord;
use crate::manifest::{Manifest, SampleManifestEntry};
use crate::sentiment::Sentiment;
use svg::Series;

pub const ACCURACY_CSV_HEADER: &str = "group,L1,L2,L3,L4,L5,L6,L7,avg,n";
pub const DISTRIBUTION_CSV_HEADER: &str =
    "group,level,negative,neutral,positive,failure,n,negative_frac,neutral_frac,positive_frac,failure_frac";
pub const SIMILARITY_CSV_HEADER: &str = "group,level,n,scored,mean_score,recognition";

/// The resolution curve's fixed rendering parameters.
pub const CURVE_FONT_PT: u32 = 12;
pub const CURVE_SPACING_PX: u32 = 0;
/// The font/spacing grid's canvas.
pub const GRID_CANVAS: (u32, u32) = (1200, 600);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Model,
    Strategy,
    ModelStrategy,
}

impl GroupBy {
    pub fn key(self, r: &EvalRecord) -> String {
        match self {
            GroupBy::Model => r.model.clone(),
            GroupBy::Strategy => r.strategy.tag().to_string(),
            GroupBy::ModelStrategy => format!("{}/{}", r.model, r.strategy),
        }
    }
}

impl FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "model" => Ok(GroupBy::Model),
            "strategy" => Ok(GroupBy::Strategy),
            "model-strategy" => Ok(GroupBy::ModelStrategy),
            other => Err(format!("unknown grouping {other:?} (expected model, strategy, model-strategy)")),
        }
    }
}

/// A record paired with the manifest entry it evaluated.
#[derive(Debug, Clone, Copy)]
pub struct Joined<'a> {
    pub record: &'a EvalRecord,
    pub entry: &'a SampleManifestEntry,
}

/// Pairs every record with its manifest entry; unknown sample ids are an error.
pub fn join<'a>(records: &'a [EvalRecord], manifest: &'a Manifest) -> Result<Vec<Joined<'a>>> {
    let index: BTreeMap<&str, &SampleManifestEntry> =
        manifest.entries.iter().map(|e| (e.sample_id.as_str(), e)).collect();
    records
        .iter()
        .map(|record| {
            let entry = index.get(record.sample_id.as_str()).ok_or_else(|| {
                Error::InvalidParam(format!("record for unknown sample {:?}", record.sample_id))
            })?;
            Ok(Joined { record, entry })
        })
        .collect()
}

fn pct(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    v.map(|v| format!("{v:.decimals$}")).unwrap_or_default()
}

/// Counts behind one accuracy cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub n: usize,
    pub correct: usize,
    /// Parse and transport failures, already counted as incorrect.
    pub failures: usize,
}

impl Tally {
    fn add(&mut self, r: &EvalRecord) {
        self.n += 1;
        self.correct += usize::from(r.correct == Some(true));
        self.failures += usize::from(r.label.is_none());
    }

    /// Accuracy with failures counted as incorrect.
    pub fn accuracy(&self) -> Option<f64> {
        pct(self.correct, self.n)
    }

    /// Accuracy over answered records only.
    pub fn accuracy_excluding_failures(&self) -> Option<f64> {
        pct(self.correct, self.n - self.failures)
    }

    pub fn value(&self, exclude_failures: bool) -> Option<f64> {
        if exclude_failures {
            self.accuracy_excluding_failures()
        } else {
            self.accuracy()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub group: String,
    pub levels: BTreeMap<LevelTag, Tally>,
    pub accuracy: BTreeMap<LevelTag, f64>,
    pub accuracy_excluding_failures: BTreeMap<LevelTag, f64>,
    pub average: Option<f64>,
    /// True when levels had unequal sizes and the average is sample-weighted.
    pub weighted_average: bool,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub group_by: GroupBy,
    pub exclude_failures: bool,
    pub rows: Vec<AccuracyRow>,
}

/// Per-group, per-level accuracy. Parse failures count as incorrect unless
/// `exclude_failures` is set; both figures are kept in every row.
/// The average is the unweighted level mean when every level has the same
/// number of records, otherwise the sample-weighted mean.
pub fn accuracy_by_level(joined: &[Joined<'_>], group_by: GroupBy, exclude_failures: bool) -> Result<AccuracyTable> {
    let mut groups: BTreeMap<String, BTreeMap<LevelTag, Tally>> = BTreeMap::new();
    for j in joined {
        if j.record.correct.is_none() {
            return Err(Error::InvalidParam(format!(
                "record {} ({}) is not a sentiment record",
                j.record.sample_id, j.record.strategy
            )));
        }
        groups
            .entry(group_by.key(j.record))
            .or_default()
            .entry(j.entry.level)
            .or_default()
            .add(j.record);
    }
    let rows = groups
        .into_iter()
        .map(|(group, levels)| {
            let value = |t: &Tally| t.value(exclude_failures);
            let sizes: Vec<usize> = levels.values().map(|t| t.n).collect();
            let equal = sizes.windows(2).all(|w| w[0] == w[1]);
            let values: Vec<f64> = levels.values().filter_map(value).collect();
            let average = if values.is_empty() {
                None
            } else if equal {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            } else {
                let (num, den) = levels.values().fold((0, 0), |(c, n), t| {
                    (c + t.correct, n + if exclude_failures { t.n - t.failures } else { t.n })
                });
                pct(num, den)
            };
            AccuracyRow {
                accuracy: levels.iter().filter_map(|(l, t)| t.accuracy().map(|a| (*l, a))).collect(),
                accuracy_excluding_failures: levels
                    .iter()
                    .filter_map(|(l, t)| t.accuracy_excluding_failures().map(|a| (*l, a)))
                    .collect(),
                n: sizes.iter().sum(),
                weighted_average: !equal,
                average,
                levels,
                group,
            }
        })
        .collect();
    Ok(AccuracyTable {
        group_by,
        exclude_failures,
        rows,
    })
}

impl AccuracyTable {
    pub fn row(&self, group: &str) -> Option<&AccuracyRow> {
        self.rows.iter().find(|r| r.group == group)
    }

    pub fn cell(&self, group: &str, level: LevelTag) -> Option<f64> {
        self.row(group)?.levels.get(&level)?.value(self.exclude_failures)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub negative: usize,
    pub neutral: usize,
    pub positive: usize,
    pub failure: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.negative + self.neutral + self.positive + self.failure
    }

    fn add(&mut self, label: Option<Sentiment>) {
        match label {
            Some(Sentiment::Negative) => self.negative += 1,
            Some(Sentiment::Neutral) => self.neutral += 1,
            Some(Sentiment::Positive) => self.positive += 1,
            None => self.failure += 1,
        }
    }

    pub fn fraction(&self, label: Option<Sentiment>) -> f64 {
        let n = match label {
            Some(Sentiment::Negative) => self.negative,
            Some(Sentiment::Neutral) => self.neutral,
            Some(Sentiment::Positive) => self.positive,
            None => self.failure,
        };
        if self.total() == 0 {
            0.0
        } else {
            n as f64 / self.total() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub group_by: GroupBy,
    pub groups: BTreeMap<String, BTreeMap<LevelTag, ClassCounts>>,
}

/// Predicted-label mass per group and level; failures are their own class.
pub fn distribution_by_level(joined: &[Joined<'_>], group_by: GroupBy) -> DistributionTable {
    let mut groups: BTreeMap<String, BTreeMap<LevelTag, ClassCounts>> = BTreeMap::new();
    for j in joined.iter().filter(|j| j.record.correct.is_some()) {
        groups
            .entry(group_by.key(j.record))
            .or_default()
            .entry(j.entry.level)
            .or_default()
            .add(j.record.label);
    }
    DistributionTable { group_by, groups }
}

impl DistributionTable {
    pub fn counts(&self, group: &str, level: LevelTag) -> Option<&ClassCounts> {
        self.groups.get(group)?.get(&level)
    }
}

/// Accuracy on the font-size x spacing grid, one grid per group.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub group: String,
    pub levels: Vec<LevelTag>,
    /// Keyed by (font pt, spacing px), then level. Missing cells are absent.
    pub cells: BTreeMap<(u32, u32), BTreeMap<LevelTag, Tally>>,
    /// Unweighted mean over the present cells of each level.
    pub level_average: BTreeMap<LevelTag, f64>,
}

impl SweepGrid {
    pub fn cell(&self, font_pt: u32, spacing_px: u32, level: LevelTag) -> Option<f64> {
        self.cells.get(&(font_pt, spacing_px))?.get(&level)?.accuracy()
    }
}

fn grouped<'a>(joined: &[Joined<'a>], group_by: GroupBy) -> BTreeMap<String, Vec<Joined<'a>>> {
    let mut out: BTreeMap<String, Vec<Joined<'a>>> = BTreeMap::new();
    for j in joined {
        out.entry(group_by.key(j.record)).or_default().push(*j);
    }
    out
}

fn levels_of(joined: &[Joined<'_>]) -> Vec<LevelTag> {
    let mut levels: Vec<LevelTag> = joined.iter().map(|j| j.entry.level).collect();
    levels.sort();
    levels.dedup();
    levels
}

/// Builds the {10,13,16}pt x {0,8,16}px grid from records at 1200x600.
pub fn sweep_grid(joined: &[Joined<'_>], group_by: GroupBy) -> Vec<SweepGrid> {
    grouped(joined, group_by)
        .into_iter()
        .filter_map(|(group, js)| {
            let in_grid: Vec<Joined<'_>> = js
                .into_iter()
                .filter(|j| {
                    let e = j.entry;
                    j.record.correct.is_some()
                        && (e.width_px, e.height_px) == GRID_CANVAS
                        && SWEEP_FONT_SIZES.contains(&e.font_size_pt)
                        && SWEEP_SPACINGS.contains(&e.spacing_px)
                })
                .collect();
            if in_grid.is_empty() {
                return None;
            }
            let mut cells: BTreeMap<(u32, u32), BTreeMap<LevelTag, Tally>> = BTreeMap::new();
            for j in &in_grid {
                cells
                    .entry((j.entry.font_size_pt, j.entry.spacing_px))
                    .or_default()
                    .entry(j.entry.level)
                    .or_default()
                    .add(j.record);
            }
            let levels = levels_of(&in_grid);
            let level_average = levels
                .iter()
                .filter_map(|l| {
                    let values: Vec<f64> = cells.values().filter_map(|c| c.get(l)?.accuracy()).collect();
                    (!values.is_empty()).then(|| (*l, values.iter().sum::<f64>() / values.len() as f64))
                })
                .collect();
            Some(SweepGrid {
                group,
                levels,
                cells,
                level_average,
            })
        })
        .collect()
}

/// Accuracy against canvas width at 12pt with no spacing, one curve per group.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionCurve {
    pub group: String,
    pub levels: Vec<LevelTag>,
    /// Keyed by (width, height), then level.
    pub points: BTreeMap<(u32, u32), BTreeMap<LevelTag, Tally>>,
}

impl ResolutionCurve {
    pub fn accuracy(&self, width: u32, level: LevelTag) -> Option<f64> {
        self.points
            .iter()
            .find(|((w, _), _)| *w == width)
            .and_then(|(_, levels)| levels.get(&level)?.accuracy())
    }
}

pub fn resolution_curve(joined: &[Joined<'_>], group_by: GroupBy) -> Vec<ResolutionCurve> {
    grouped(joined, group_by)
        .into_iter()
        .filter_map(|(group, js)| {
            let on_curve: Vec<Joined<'_>> = js
                .into_iter()
                .filter(|j| {
                    j.record.correct.is_some()
                        && j.entry.font_size_pt == CURVE_FONT_PT
                        && j.entry.spacing_px == CURVE_SPACING_PX
                })
                .collect();
            if on_curve.is_empty() {
                return None;
            }
            let mut points: BTreeMap<(u32, u32), BTreeMap<LevelTag, Tally>> = BTreeMap::new();
            for j in &on_curve {
                points
                    .entry((j.entry.width_px, j.entry.height_px))
                    .or_default()
                    .entry(j.entry.level)
                    .or_default()
                    .add(j.record);
            }
            Some(ResolutionCurve {
                group,
                levels: levels_of(&on_curve),
                points,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityCell {
    pub n: usize,
    /// Records with a parsed score.
    pub scored: usize,
    pub mean_score: Option<f64>,
    /// Percentage of records whose response named the target word.
    pub recognition: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySummary {
    pub group_by: GroupBy,
    pub groups: BTreeMap<String, BTreeMap<LevelTag, SimilarityCell>>,
}

impl SimilaritySummary {
    pub fn cell(&self, group: &str, level: LevelTag) -> Option<&SimilarityCell> {
        self.groups.get(group)?.get(&level)
    }
}

/// Mean similarity score and recognition rate per group and level, over
/// records that carry a recognition flag.
pub fn similarity_summary(joined: &[Joined<'_>], group_by: GroupBy) -> SimilaritySummary {
    let mut raw: BTreeMap<String, BTreeMap<LevelTag, (usize, Vec<f64>, usize)>> = BTreeMap::new();
    for j in joined.iter().filter(|j| j.record.recognized.is_some()) {
        let cell = raw
            .entry(group_by.key(j.record))
            .or_default()
            .entry(j.entry.level)
            .or_default();
        cell.0 += 1;
        if let Some(s) = j.record.score {
            cell.1.push(s);
        }
        cell.2 += usize::from(j.record.recognized == Some(true));
    }
    let groups = raw
        .into_iter()
        .map(|(g, levels)| {
            let levels = levels
                .into_iter()
                .map(|(l, (n, mut scores, recognized))| {
                    scores.sort_by(f64::total_cmp);
                    let mean_score = (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64);
                    (
                        l,
                        SimilarityCell {
                            n,
                            scored: scores.len(),
                            mean_score,
                            recognition: pct(recognized, n),
                        },
                    )
                })
                .collect();
            (g, levels)
        })
        .collect();
    SimilaritySummary { group_by, groups }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown report format {other:?} (expected csv, json, svg)")),
        }
    }
}

pub const MANUAL_REVIEW_CSV_HEADER: &str =
    "sample_id,model,strategy,repeat,word,level,score,auto_recognized,manual_recognized,raw";

/// Recognition decisions for human audit: one row per record that carries an
/// automatic recognition call, with an empty `manual_recognized` column.
/// Rows are sorted so the file is stable for a given record set.
pub fn manual_review_csv(joined: &[Joined<'_>]) -> Result<String> {
    let mut rows: Vec<&Joined<'_>> = joined.iter().filter(|j| j.record.recognized.is_some()).collect();
    rows.sort_by(|a, b| {
        (&a.record.model, a.record.strategy.tag(), &a.record.sample_id, a.record.repeat).cmp(&(
            &b.record.model,
            b.record.strategy.tag(),
            &b.record.sample_id,
            b.record.repeat,
        ))
    });
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(MANUAL_REVIEW_CSV_HEADER.split(','))?;
    for j in rows {
        let r = j.record;
        w.write_record([
            r.sample_id.as_str(),
            r.model.as_str(),
            r.strategy.tag(),
            &r.repeat.to_string(),
            j.entry.word.as_str(),
            j.entry.level.as_str(),
            &fmt_opt(r.score, 2),
            if r.recognized == Some(true) { "true" } else { "false" },
            "",
            r.raw.as_str(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidParam(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

/// A report that can be written in every format.
pub trait Report {
    fn title(&self) -> &'static str;
    fn to_csv(&self) -> String;
    fn to_json(&self) -> Result<String>;
    fn to_svg(&self) -> String;

    fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json()?,
            Format::Svg => self.to_svg(),
        })
    }
}

pub fn emit(report: &dyn Report, format: Format, path: &Path) -> Result<()> {
    let body = report.render(format)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn level_names(levels: &[LevelTag]) -> Vec<String> {
    levels.iter().map(|l| l.to_string()).collect()
}

impl Report for AccuracyTable {
    fn title(&self) -> &'static str {
        "accuracy"
    }

    fn to_csv(&self) -> String {
        let mut out = format!("{ACCURACY_CSV_HEADER}\n");
        for row in &self.rows {
            let _ = write!(out, "{}", csv_field(&row.group));
            for level in LevelTag::ALL {
                let v = row.levels.get(&level).and_then(|t| t.value(self.exclude_failures));
                let _ = write!(out, ",{}", fmt_opt(v, 2));
            }
            let _ = writeln!(out, ",{},{}", fmt_opt(row.average, 2), row.n);
        }
        out
    }

    fn to_json(&self) -> Result<String> {
        json(self)
    }

    fn to_svg(&self) -> String {
        let series: Vec<Series> = self
            .rows
            .iter()
            .map(|r| Series {
                name: r.group.clone(),
                values: LevelTag::ALL
                    .iter()
                    .map(|l| r.levels.get(l).and_then(|t| t.value(self.exclude_failures)))
                    .collect(),
            })
            .collect();
        svg::grouped_bars("Accuracy by level", "accuracy (%)", &level_names(&LevelTag::ALL), &series, 100.0)
    }
}

impl Report for DistributionTable {
    fn title(&self) -> &'static str {
        "distribution"
    }

    fn to_csv(&self) -> String {
        let mut out = format!("{DISTRIBUTION_CSV_HEADER}\n");
        for (group, levels) in &self.groups {
            for (level, c) in levels {
                let _ = writeln!(
                    out,
                    "{},{level},{},{},{},{},{},{:.4},{:.4},{:.4},{:.4}",
                    csv_field(group),
                    c.negative,
                    c.neutral,
                    c.positive,
                    c.failure,
                    c.total(),
                    c.fraction(Some(Sentiment::Negative)),
                    c.fraction(Some(Sentiment::Neutral)),
                    c.fraction(Some(Sentiment::Positive)),
                    c.fraction(None),
                );
            }
        }
        out
    }

    fn to_json(&self) -> Result<String> {
        let groups: BTreeMap<&String, BTreeMap<String, &ClassCounts>> = self
            .groups
            .iter()
            .map(|(g, levels)| (g, levels.iter().map(|(l, c)| (l.to_string(), c)).collect()))
            .collect();
        json(&serde_json::json!({ "group_by": self.group_by, "groups": groups }))
    }

    /// One stacked bar per (group, level).
    fn to_svg(&self) -> String {
        let mut categories = Vec::new();
        let classes = [
            ("Negative", Some(Sentiment::Negative)),
            ("Neutral", Some(Sentiment::Neutral)),
            ("Positive", Some(Sentiment::Positive)),
            ("Failure", None),
        ];
        let mut stacks: Vec<Series> = classes
            .iter()
            .map(|(name, _)| Series {
                name: name.to_string(),
                values: Vec::new(),
            })
            .collect();
        let many = self.groups.len() > 1;
        for (group, levels) in &self.groups {
            for (level, c) in levels {
                categories.push(if many { format!("{group} {level}") } else { level.to_string() });
                for (s, (_, class)) in stacks.iter_mut().zip(classes) {
                    s.values.push(Some(c.fraction(class)));
                }
            }
        }
        svg::stacked_bars("Predicted label distribution", &categories, &stacks)
    }
}

/// Every grid of a report, written together.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGridReport(pub Vec<SweepGrid>);

impl Report for SweepGridReport {
    fn title(&self) -> &'static str {
        "sweep_grid"
    }

    /// `group,font_pt,spacing_px,<levels...>`, then an `avg` row per group.
    fn to_csv(&self) -> String {
        let levels = union_levels(self.0.iter().map(|g| g.levels.as_slice()));
        let mut out = format!("group,font_pt,spacing_px,{}\n", level_names(&levels).join(","));
        for g in &self.0 {
            for &font in &SWEEP_FONT_SIZES {
                for &spacing in &SWEEP_SPACINGS {
                    let _ = write!(out, "{},{font},{spacing}", csv_field(&g.group));
                    for &l in &levels {
                        let _ = write!(out, ",{}", fmt_opt(g.cell(font, spacing, l), 2));
                    }
                    out.push('\n');
                }
            }
            let _ = write!(out, "{},avg,", csv_field(&g.group));
            for l in &levels {
                let _ = write!(out, ",{}", fmt_opt(g.level_average.get(l).copied(), 2));
            }
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> Result<String> {
        let grids: Vec<serde_json::Value> = self
            .0
            .iter()
            .map(|g| {
                let cells: BTreeMap<String, BTreeMap<String, &Tally>> = g
                    .cells
                    .iter()
                    .map(|((f, s), levels)| {
                        (format!("{f}pt/{s}px"), levels.iter().map(|(l, t)| (l.to_string(), t)).collect())
                    })
                    .collect();
                let avg: BTreeMap<String, f64> = g.level_average.iter().map(|(l, v)| (l.to_string(), *v)).collect();
                serde_json::json!({ "group": g.group, "cells": cells, "level_average": avg })
            })
            .collect();
        json(&grids)
    }

    /// Bars per font/spacing combination, one series per (group, level).
    fn to_svg(&self) -> String {
        let mut categories = Vec::new();
        for &font in &SWEEP_FONT_SIZES {
            for &spacing in &SWEEP_SPACINGS {
                categories.push(format!("{font}/{spacing}"));
            }
        }
        let many = self.0.len() > 1;
        let mut series = Vec::new();
        for g in &self.0 {
            for &l in &g.levels {
                let mut values = Vec::new();
                for &font in &SWEEP_FONT_SIZES {
                    for &spacing in &SWEEP_SPACINGS {
                        values.push(g.cell(font, spacing, l));
                    }
                }
                let name = if many { format!("{} {l}", g.group) } else { l.to_string() };
                series.push(Series { name, values });
            }
        }
        svg::grouped_bars("Accuracy by font size (pt) / spacing (px)", "accuracy (%)", &categories, &series, 100.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionReport(pub Vec<ResolutionCurve>);

impl ResolutionReport {
    fn sizes(&self) -> Vec<(u32, u32)> {
        let mut sizes: Vec<(u32, u32)> = self.0.iter().flat_map(|c| c.points.keys().copied()).collect();
        sizes.sort();
        sizes.dedup();
        sizes
    }
}

impl Report for ResolutionReport {
    fn title(&self) -> &'static str {
        "resolution"
    }

    /// `group,width_px,height_px,<levels...>`, widths ascending.
    fn to_csv(&self) -> String {
        let levels = union_levels(self.0.iter().map(|c| c.levels.as_slice()));
        let mut out = format!("group,width_px,height_px,{}\n", level_names(&levels).join(","));
        for c in &self.0 {
            for ((w, h), per_level) in &c.points {
                let _ = write!(out, "{},{w},{h}", csv_field(&c.group));
                for l in &levels {
                    let _ = write!(out, ",{}", fmt_opt(per_level.get(l).and_then(Tally::accuracy), 2));
                }
                out.push('\n');
            }
        }
        out
    }

    fn to_json(&self) -> Result<String> {
        let curves: Vec<serde_json::Value> = self
            .0
            .iter()
            .map(|c| {
                let points: BTreeMap<String, BTreeMap<String, &Tally>> = c
                    .points
                    .iter()
                    .map(|((w, h), levels)| {
                        (format!("{w:05}x{h:04}"), levels.iter().map(|(l, t)| (l.to_string(), t)).collect())
                    })
                    .collect();
                serde_json::json!({ "group": c.group, "points": points })
            })
            .collect();
        json(&curves)
    }

    fn to_svg(&self) -> String {
        let sizes = self.sizes();
        let xs: Vec<f64> = sizes.iter().map(|(w, _)| *w as f64).collect();
        let many = self.0.len() > 1;
        let mut series = Vec::new();
        for c in &self.0 {
            for &l in &c.levels {
                let values = sizes
                    .iter()
                    .map(|s| c.points.get(s).and_then(|p| p.get(&l)).and_then(Tally::accuracy))
                    .collect();
                let name = if many { format!("{} {l}", c.group) } else { l.to_string() };
                series.push(Series { name, values });
            }
        }
        svg::line_chart("Accuracy by resolution", "width (px)", "accuracy (%)", &xs, &series, 100.0)
    }
}

impl Report for SimilaritySummary {
    fn title(&self) -> &'static str {
        "similarity"
    }

    fn to_csv(&self) -> String {
        let mut out = format!("{SIMILARITY_CSV_HEADER}\n");
        for (group, levels) in &self.groups {
            for (level, c) in levels {
                let _ = writeln!(
                    out,
                    "{},{level},{},{},{},{}",
                    csv_field(group),
                    c.n,
                    c.scored,
                    fmt_opt(c.mean_score, 2),
                    fmt_opt(c.recognition, 2)
                );
            }
        }
        out
    }

    fn to_json(&self) -> Result<String> {
        let groups: BTreeMap<&String, BTreeMap<String, &SimilarityCell>> = self
            .groups
            .iter()
            .map(|(g, levels)| (g, levels.iter().map(|(l, c)| (l.to_string(), c)).collect()))
            .collect();
        json(&serde_json::json!({ "group_by": self.group_by, "groups": groups }))
    }

    /// Mean score (scaled to 0-100) and recognition rate per level.
    fn to_svg(&self) -> String {
        let mut levels: Vec<LevelTag> = self.groups.values().flat_map(|c| c.keys().copied()).collect();
        levels.sort();
        levels.dedup();
        let mut series = Vec::new();
        let many = self.groups.len() > 1;
        for (g, cells) in &self.groups {
            let prefix = if many { format!("{g} ") } else { String::new() };
            series.push(Series {
                name: format!("{prefix}score x10"),
                values: levels.iter().map(|l| cells.get(l).and_then(|c| c.mean_score).map(|s| s * 10.0)).collect(),
            });
            series.push(Series {
                name: format!("{prefix}recognition %"),
                values: levels.iter().map(|l| cells.get(l).and_then(|c| c.recognition)).collect(),
            });
        }
        svg::grouped_bars("Similarity and recognition", "score x10 / %", &level_names(&levels), &series, 100.0)
    }
}

fn union_levels<'a>(sets: impl Iterator<Item = &'a [LevelTag]>) -> Vec<LevelTag> {
    let mut levels: Vec<LevelTag> = sets.flatten().copied().collect();
    levels.sort();
    levels.dedup();
    levels
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
