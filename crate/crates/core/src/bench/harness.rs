use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::backend::{FrameRef, RecordingBackend, ScriptedBackend, Trace};
use crate::config::Hyperparams;
use crate::mask::Mask;
use crate::memory::MemoryPolicy;
use crate::metrics::{scores_csv, segment_bounds, FrameScore, Means};
use crate::search::{brute_force_best, track, SearchOptions, DEFAULT_ENUMERATION_CAP};
use crate::simworld::{ScenarioSpec, SimWorld};
use crate::types::{FrameRecord, PathwayNode};

use super::config::{load_scenarios, BackendSource, RunConfig};
use super::output::{jf_series, line_chart, parse_scores_csv, write_atomic};
use super::run::{run_scenario, ScenarioRun};
use super::{BenchError, BUILD_VERSION};

/// Everything one `run` produced, in scenario order.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub specs: Vec<ScenarioSpec>,
    pub runs: Vec<ScenarioRun>,
    /// Decode traffic, when recording was requested.
    pub trace: Option<Trace>,
}

/// Scenario-averaged means, overall and per segment index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub scenarios: usize,
    pub mean: Means,
    pub segments: Vec<Means>,
}

fn average(items: &[Means]) -> Means {
    let n = items.len() as f64;
    let (j, f, jf) = items.iter().fold((0.0, 0.0, 0.0), |a, m| (a.0 + m.j, a.1 + m.f, a.2 + m.jf));
    Means { j: j / n, f: f / n, jf: jf / n }
}

impl RunReport {
    pub fn aggregate(&self) -> Aggregate {
        let means: Vec<Means> = self.runs.iter().map(|r| r.summary.mean).collect();
        let width = self.runs.iter().map(|r| r.summary.segments.len()).max().unwrap_or(0);
        let segments = (0..width)
            .map(|i| {
                let at: Vec<Means> = self.runs.iter().filter_map(|r| r.summary.segments.get(i).copied()).collect();
                average(&at)
            })
            .collect();
        Aggregate { scenarios: self.runs.len(), mean: average(&means), segments }
    }
}

/// Runs every scenario of `config` on a pool of `config.parallelism`
/// threads. Results do not depend on the pool size.
pub fn execute(config: &RunConfig, record: bool) -> Result<RunReport, BenchError> {
    config.validate()?;
    let specs = load_scenarios(&config.scenarios)?;
    let source = BackendSource::prepare(config)?;
    let settings = config.track_settings();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| BenchError::Run(format!("thread pool: {e}")))?;

    let one = |spec: &ScenarioSpec| -> Result<(ScenarioRun, Option<Trace>), BenchError> {
        let world = Arc::new(SimWorld::new(spec.clone()).map_err(|e| BenchError::Config(e.to_string()))?);
        let backend = source.instantiate(&world)?;
        if record {
            let recorder = RecordingBackend::new(backend);
            let run = run_scenario(&world, &recorder, &settings)?;
            Ok((run, Some(recorder.into_trace())))
        } else {
            Ok((run_scenario(&world, &backend, &settings)?, None))
        }
    };
    let results: Vec<(ScenarioRun, Option<Trace>)> =
        pool.install(|| specs.par_iter().map(one).collect::<Result<_, _>>())?;

    let mut trace = record.then(Trace::default);
    let mut runs = Vec::with_capacity(results.len());
    for (run, t) in results {
        if let (Some(all), Some(t)) = (trace.as_mut(), t) {
            all.merge(t);
        }
        runs.push(run);
    }
    Ok(RunReport { specs, runs, trace })
}

#[derive(Serialize)]
struct ScenarioSummary<'a> {
    scenario: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    final_score: f64,
    summary: &'a crate::metrics::Summary,
    spec: &'a ScenarioSpec,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    version: &'a str,
    config: &'a RunConfig,
    aggregate: Aggregate,
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("summary serializes");
    s.push('\n');
    s.into_bytes()
}

/// Run-level CSV: one row per scenario.
pub fn run_summary_csv(report: &RunReport) -> String {
    let width = report.runs.iter().map(|r| r.summary.segments.len()).max().unwrap_or(0);
    let mut out = String::from("scenario,frames,mean_j,mean_f,mean_jf,final_score");
    for i in 1..=width {
        let _ = write!(out, ",seg{i}_jf");
    }
    out.push('\n');
    for r in &report.runs {
        let m = r.summary.mean;
        let _ = write!(out, "{},{},{:.6},{:.6},{:.6},{:.6}", r.name, r.summary.frames, m.j, m.f, m.jf, r.final_score);
        for i in 0..width {
            match r.summary.segments.get(i) {
                Some(s) => {
                    let _ = write!(out, ",{:.6}", s.jf);
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Writes per-scenario and run-level outputs under `dir`; returns `dir`.
pub fn write_outputs(config: &RunConfig, report: &RunReport, dir: &Path) -> Result<PathBuf, BenchError> {
    for (run, spec) in report.runs.iter().zip(&report.specs) {
        let sdir = dir.join(&run.name);
        write_atomic(&sdir.join("frames.csv"), scores_csv(&run.scores).as_bytes())?;
        let summary = ScenarioSummary {
            scenario: &run.name,
            version: BUILD_VERSION,
            config,
            final_score: run.final_score,
            summary: &run.summary,
            spec,
        };
        write_atomic(&sdir.join("summary.json"), &json(&summary))?;
        if config.svg {
            let svg = line_chart(&format!("{} J&F", run.name), (0.0, 1.0), &[("J&F", jf_series(&run.scores))]);
            write_atomic(&sdir.join("curve.svg"), svg.as_bytes())?;
        }
        if config.trace {
            let mut lines = String::new();
            for t in &run.traces {
                lines.push_str(&serde_json::to_string(t).expect("trace serializes"));
                lines.push('\n');
            }
            write_atomic(&sdir.join("trace.ndjson"), lines.as_bytes())?;
            let mut masklet = String::new();
            for f in &run.masklet {
                masklet.push_str(&serde_json::to_string(f).expect("frame serializes"));
                masklet.push('\n');
            }
            write_atomic(&sdir.join("masklet.ndjson"), masklet.as_bytes())?;
        }
    }
    write_atomic(&dir.join("summary.csv"), run_summary_csv(report).as_bytes())?;
    let run = RunSummary { version: BUILD_VERSION, config, aggregate: report.aggregate() };
    write_atomic(&dir.join("summary.json"), &json(&run))?;
    Ok(dir.to_path_buf())
}

/// Hyperparameter swept by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Pathways,
    MemoryFrames,
    DeltaConf,
    DeltaIou,
    /// Values are `w_low:w_high`.
    Modulation,
    /// Values are a decimal count or `off`.
    Rounding,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self, BenchError> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "p" | "pathways" => Self::Pathways,
            "n" | "memory_frames" => Self::MemoryFrames,
            "delta_conf" => Self::DeltaConf,
            "delta_iou" => Self::DeltaIou,
            "modulation" => Self::Modulation,
            "rounding" => Self::Rounding,
            _ => return Err(BenchError::Config(format!("unknown sweep axis `{s}`"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Pathways => "P",
            Self::MemoryFrames => "N",
            Self::DeltaConf => "delta_conf",
            Self::DeltaIou => "delta_iou",
            Self::Modulation => "modulation",
            Self::Rounding => "rounding",
        }
    }

    /// Sets this axis of `h` to `value`.
    pub fn apply(self, value: &str, h: &mut Hyperparams) -> Result<(), BenchError> {
        let bad = || BenchError::Config(format!("bad {} value `{value}`", self.name()));
        let float = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        match self {
            Self::Pathways => h.pathways = value.trim().parse().map_err(|_| bad())?,
            Self::MemoryFrames => h.memory_frames = value.trim().parse().map_err(|_| bad())?,
            Self::DeltaConf => h.delta_conf = float(value)?,
            Self::DeltaIou => h.delta_iou = float(value)?,
            Self::Modulation => {
                let (lo, hi) = value.split_once(':').ok_or_else(bad)?;
                h.w_low = float(lo)?;
                h.w_high = float(hi)?;
            }
            Self::Rounding => {
                h.iou_rounding_decimals = match value.trim() {
                    "off" | "none" => None,
                    v => Some(v.parse().map_err(|_| bad())?),
                }
            }
        }
        h.validate().map_err(|e| BenchError::Config(format!("{}={value}: {e}", self.name())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: String,
    pub aggregate: Aggregate,
}

/// One full run per value; everything but the swept axis comes from `config`.
pub fn sweep(config: &RunConfig, axis: SweepAxis, values: &[String]) -> Result<Vec<SweepRow>, BenchError> {
    if values.is_empty() {
        return Err(BenchError::Config("sweep needs at least one value".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for v in values {
        let mut c = config.clone();
        axis.apply(v, &mut c.hyperparams)?;
        let report = execute(&c, false)?;
        rows.push(SweepRow { value: v.clone(), aggregate: report.aggregate() });
    }
    Ok(rows)
}

pub fn sweep_csv(axis: SweepAxis, rows: &[SweepRow]) -> String {
    let width = rows.iter().map(|r| r.aggregate.segments.len()).max().unwrap_or(0);
    let mut out = format!("{},scenarios,mean_j,mean_f,mean_jf", axis.name());
    for i in 1..=width {
        let _ = write!(out, ",seg{i}_jf");
    }
    out.push('\n');
    for r in rows {
        let m = r.aggregate.mean;
        let _ = write!(out, "{},{},{:.6},{:.6},{:.6}", r.value, r.aggregate.scenarios, m.j, m.f, m.jf);
        for s in &r.aggregate.segments {
            let _ = write!(out, ",{:.6}", s.jf);
        }
        out.push('\n');
    }
    out
}

/// Per-frame J&F differences `a - b` over a shared time axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    /// `(time, jf_a, jf_b, gap)`.
    pub frames: Vec<(u32, f64, f64, f64)>,
    pub mean_gap: f64,
    pub segment_gaps: Vec<f64>,
}

pub fn compare_scores(a: &[FrameScore], b: &[FrameScore], segments: usize) -> Result<Comparison, BenchError> {
    if a.is_empty() || a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.time != y.time) {
        return Err(BenchError::Config("series to compare must share the same non-empty time axis".into()));
    }
    let frames: Vec<_> = a.iter().zip(b).map(|(x, y)| (x.time, x.jf, y.jf, x.jf - y.jf)).collect();
    let mean = |r: &[(u32, f64, f64, f64)]| r.iter().map(|f| f.3).sum::<f64>() / r.len() as f64;
    let segment_gaps = segment_bounds(frames.len(), segments).into_iter().map(|r| mean(&frames[r])).collect();
    Ok(Comparison { mean_gap: mean(&frames), segment_gaps, frames })
}

pub fn comparison_csv(c: &Comparison) -> String {
    let mut out = String::from("time,jf_a,jf_b,gap\n");
    for (t, a, b, g) in &c.frames {
        let _ = writeln!(out, "{t},{a:.6},{b:.6},{g:.6}");
    }
    out
}

fn read_scores(path: &Path) -> Result<Vec<FrameScore>, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    parse_scores_csv(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
}

/// Compares two `frames.csv` files, or every scenario present in both of
/// two run directories. Returns `(scenario, comparison)` pairs sorted by name.
pub fn compare_paths(a: &Path, b: &Path, segments: usize) -> Result<Vec<(String, Comparison)>, BenchError> {
    if a.is_file() && b.is_file() {
        let name = a.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        return Ok(vec![(name, compare_scores(&read_scores(a)?, &read_scores(b)?, segments)?)]);
    }
    let scenario_dirs = |root: &Path| -> Result<Vec<String>, BenchError> {
        let mut names: Vec<String> = std::fs::read_dir(root)
            .map_err(|e| BenchError::Config(format!("{}: {e}", root.display())))?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().join("frames.csv").is_file())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        Ok(names)
    };
    let in_b = scenario_dirs(b)?;
    let common: Vec<String> = scenario_dirs(a)?.into_iter().filter(|n| in_b.contains(n)).collect();
    if common.is_empty() {
        return Err(BenchError::Config("no scenario appears in both runs".into()));
    }
    common
        .into_iter()
        .map(|n| {
            let c = compare_scores(
                &read_scores(&a.join(&n).join("frames.csv"))?,
                &read_scores(&b.join(&n).join("frames.csv"))?,
                segments,
            )?;
            Ok((n, c))
        })
        .collect()
}

/// One oracle-check fixture and its verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCase {
    pub seed: u64,
    pub frames: u32,
    pub tree_path: Vec<u8>,
    pub oracle_path: Vec<u8>,
    pub tree_score: f64,
    pub oracle_score: f64,
    pub matches: bool,
}

/// Prompt for oracle fixtures: a 6x4 block on a 16x12 canvas.
pub fn oracle_prompt() -> FrameRecord {
    let mask = Mask::from_fn(16, 12, |x, y| (5..11).contains(&x) && (4..8).contains(&y)).expect("valid canvas");
    FrameRecord::prompt(0, mask, b"prompt".to_vec())
}

/// Runs the tree with `P = 3^T` against exhaustive enumeration on one
/// seeded scripted fixture of `frames` steps. IoUs are quantized to tenths
/// so exact score ties exercise the tie-breaks.
pub fn oracle_case(seed: u64, frames: u32) -> Result<OracleCase, BenchError> {
    let backend = ScriptedBackend::seeded(seed, Some(10), 3.0);
    let hyper = Hyperparams { pathways: 3usize.pow(frames), ..Hyperparams::default() };
    let memory = MemoryPolicy::object_aware(&hyper);
    let refs: Vec<FrameRef> = (1..=frames).map(FrameRef::index).collect();
    let run_err = |e: crate::error::SearchError| BenchError::Run(format!("fixture seed {seed}: {e}"));
    let (masklet, _) =
        track(0, oracle_prompt(), &refs, &backend, &memory, &hyper, SearchOptions::default()).map_err(run_err)?;
    let root = PathwayNode::root(oracle_prompt());
    let (best, score) =
        brute_force_best(&root, 0, &refs, &backend, &memory, &hyper, DEFAULT_ENUMERATION_CAP).map_err(run_err)?;
    let tree_path = masklet.leaf.branch_path();
    let oracle_path = best.branch_path();
    Ok(OracleCase {
        seed,
        frames,
        matches: tree_path == oracle_path && masklet.score.to_bits() == score.to_bits(),
        tree_path,
        oracle_path,
        tree_score: masklet.score,
        oracle_score: score,
    })
}

/// `count` fixtures with seeds `base_seed..` and lengths cycling through
/// `min_frames..=max_frames`.
pub fn oracle_check(count: usize, base_seed: u64, min_frames: u32, max_frames: u32) -> Result<Vec<OracleCase>, BenchError> {
    if min_frames == 0 || min_frames > max_frames || max_frames > 10 {
        return Err(BenchError::Config("oracle fixture lengths must satisfy 1 <= min <= max <= 10".into()));
    }
    let span = u64::from(max_frames - min_frames + 1);
    (0..count as u64)
        .into_par_iter()
        .map(|i| oracle_case(base_seed + i, min_frames + (i % span) as u32))
        .collect()
}
