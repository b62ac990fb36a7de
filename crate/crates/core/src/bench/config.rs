use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::backend::{DecoderBackend, ExternalBackend, ReplayBackend, ScriptedBackend};
use crate::config::Hyperparams;
use crate::simworld::{generate_scenario_suite, ScenarioSpec, SimDecoder, SimWorld};

use super::run::{GreedyOptions, Mode, TrackSettings};
use super::BenchError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TREEMEM_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Scenario JSON files, directories of them, or `suite:<family>:<count>:<seed>`.
    pub scenarios: Vec<String>,
    pub hyperparams: Hyperparams,
    pub mode: Mode,
    pub greedy: GreedyOptions,
    /// Distinct-IoU selection on uncertain steps (tree mode).
    pub diversify: bool,
    /// `sim`, `scripted:<path>`, `replay:<path>` or `external:<command line>`.
    pub backend: String,
    /// Execution-only fields are not serialized, so provenance records
    /// do not vary with where or how wide a run executes.
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub parallelism: usize,
    pub segments: usize,
    /// Contour tolerance in pixels; defaults to 0.8% of the diagonal.
    pub tolerance: Option<u32>,
    pub svg: bool,
    pub trace: bool,
    /// Seconds to wait for an external decoder reply.
    pub timeout_secs: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenarios: Vec::new(),
            hyperparams: Hyperparams::default(),
            mode: Mode::Tree,
            greedy: GreedyOptions::default(),
            diversify: true,
            backend: "sim".into(),
            out_dir: None,
            parallelism: 1,
            segments: 4,
            tolerance: None,
            svg: false,
            trace: false,
            timeout_secs: 30,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        self.hyperparams
            .validate()
            .map_err(|e| BenchError::Config(format!("hyperparams.{e}")))?;
        if self.parallelism == 0 {
            return Err(BenchError::Config("parallelism: must be at least 1".into()));
        }
        if self.segments == 0 {
            return Err(BenchError::Config("segments: must be at least 1".into()));
        }
        if self.scenarios.is_empty() {
            return Err(BenchError::Config("scenarios: none given".into()));
        }
        BackendKind::parse(&self.backend)?;
        Ok(())
    }

    pub fn track_settings(&self) -> TrackSettings {
        let mut s = match self.mode {
            Mode::Tree => TrackSettings::tree(self.hyperparams),
            Mode::Greedy => TrackSettings::greedy(self.hyperparams, self.greedy),
            Mode::Oracle => TrackSettings::oracle(self.hyperparams),
        };
        if self.mode == Mode::Tree {
            s.options.diversify = self.diversify;
        }
        s.segments = self.segments;
        s.tolerance = self.tolerance;
        s
    }

    /// Output directory: the configured one, else the environment default,
    /// else `./out`.
    pub fn resolved_out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Parsed `backend` field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendKind {
    Sim,
    Scripted(PathBuf),
    Replay(PathBuf),
    External(Vec<String>),
}

impl BackendKind {
    pub fn parse(s: &str) -> Result<Self, BenchError> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let need = |what: &str| {
            if arg.is_empty() {
                Err(BenchError::Config(format!("backend: `{kind}` needs a {what}")))
            } else {
                Ok(())
            }
        };
        match kind {
            "sim" => Ok(Self::Sim),
            "scripted" => need("fixture path").map(|_| Self::Scripted(arg.into())),
            "replay" => need("trace path").map(|_| Self::Replay(arg.into())),
            "external" => {
                need("command")?;
                Ok(Self::External(arg.split_whitespace().map(String::from).collect()))
            }
            other => Err(BenchError::Config(format!("backend: unknown kind `{other}`"))),
        }
    }
}

/// A backend ready to be instantiated per scenario.
pub enum BackendSource {
    Sim,
    Scripted(ScriptedBackend),
    Replay(ReplayBackend),
    External { command: Vec<String>, timeout: Duration },
}

impl BackendSource {
    pub fn prepare(config: &RunConfig) -> Result<Self, BenchError> {
        Ok(match BackendKind::parse(&config.backend)? {
            BackendKind::Sim => Self::Sim,
            BackendKind::Scripted(p) => {
                Self::Scripted(ScriptedBackend::from_file(&p).map_err(|e| BenchError::Config(e.to_string()))?)
            }
            BackendKind::Replay(p) => {
                Self::Replay(ReplayBackend::load(&p).map_err(|e| BenchError::Config(e.to_string()))?)
            }
            BackendKind::External(command) => Self::External {
                command,
                timeout: Duration::from_secs(config.timeout_secs),
            },
        })
    }

    pub fn instantiate(&self, world: &Arc<SimWorld>) -> Result<Box<dyn DecoderBackend>, BenchError> {
        Ok(match self {
            Self::Sim => Box::new(SimDecoder::new(Arc::clone(world))),
            Self::Scripted(b) => Box::new(b.clone()),
            Self::Replay(b) => Box::new(b.clone()),
            Self::External { command, timeout } => Box::new(
                ExternalBackend::spawn(command, *timeout).map_err(|e| BenchError::Run(e.to_string()))?,
            ),
        })
    }
}

fn parse_suite(s: &str) -> Result<Vec<ScenarioSpec>, BenchError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || BenchError::Config(format!("scenario source `{s}`: expected suite:<family>:<count>:<seed>"));
    if parts.len() != 4 {
        return Err(bad());
    }
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    let seed: u64 = parts[3].parse().map_err(|_| bad())?;
    generate_scenario_suite(parts[1], count, seed).map_err(|e| BenchError::Config(e.to_string()))
}

fn load_file(path: &Path) -> Result<ScenarioSpec, BenchError> {
    let mut spec = ScenarioSpec::load(path).map_err(|e| BenchError::Config(e.to_string()))?;
    if spec.name.is_empty() {
        spec.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
    }
    Ok(spec)
}

/// Resolves every scenario source, in order. Names must be unique.
pub fn load_scenarios(sources: &[String]) -> Result<Vec<ScenarioSpec>, BenchError> {
    let mut out = Vec::new();
    for src in sources {
        if src.starts_with("suite:") {
            out.extend(parse_suite(src)?);
            continue;
        }
        let path = Path::new(src);
        if path.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| BenchError::Config(format!("{src}: {e}")))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            for f in files {
                out.push(load_file(&f)?);
            }
        } else {
            out.push(load_file(path)?);
        }
    }
    let mut names: Vec<&str> = out.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if let Some(dup) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(BenchError::Config(format!("duplicate scenario name `{}`", dup[0])));
    }
    Ok(out)
}
