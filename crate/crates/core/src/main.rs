use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use treemem::bench::{
    compare_paths, comparison_csv, execute, line_chart, oracle_check, sweep, sweep_csv, write_atomic, write_outputs,
    BenchError, Mode, RunConfig, SweepAxis, BUILD_VERSION,
};
use treemem::simworld::generate_scenario_suite;

#[derive(Parser)]
#[command(name = "treemem", version = BUILD_VERSION, about = "Tree-memory segmentation tracker and experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track every scenario and write per-frame scores and summaries.
    Run(RunArgs),
    /// One run per value of a hyperparameter; prints a CSV table.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// P, N, delta_conf, delta_iou, modulation or rounding.
        #[arg(long)]
        axis: String,
        /// Comma-separated values; modulation values are `lo:hi`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Per-frame J&F gap between two runs (frames.csv files or run directories).
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 4)]
        segments: usize,
        /// Directory for gap CSVs and charts.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tree search with P = 3^T against exhaustive enumeration on scripted fixtures.
    OracleCheck {
        #[arg(long, default_value_t = 50)]
        fixtures: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        min_frames: u32,
        #[arg(long, default_value_t = 8)]
        max_frames: u32,
    },
    /// Like `run`, also saving every decode response to a trace file.
    Record {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "trace-file")]
        trace_file: PathBuf,
    },
    /// Like `run`, answering every decode from a recorded trace file.
    Replay {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "trace-file")]
        trace_file: PathBuf,
    },
    /// Write a generated scenario suite as JSON files.
    Generate {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario file, directory, or `suite:<family>:<count>:<seed>`. Replaces the configured list.
    #[arg(long = "scenario")]
    scenarios: Vec<String>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// sim, scripted:<path>, replay:<path> or external:<command>.
    #[arg(long)]
    backend: Option<String>,
    /// Output directory (default: $TREEMEM_OUT_DIR, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    tolerance: Option<u32>,
    #[arg(long = "pathways", short = 'P')]
    pathways: Option<usize>,
    #[arg(long = "memory-frames", short = 'N')]
    memory_frames: Option<usize>,
    #[arg(long)]
    delta_conf: Option<f64>,
    #[arg(long)]
    delta_iou: Option<f64>,
    /// Modulation weight range `lo:hi`.
    #[arg(long)]
    modulation: Option<String>,
    /// IoU rounding decimals, or `off`.
    #[arg(long)]
    rounding: Option<String>,
    #[arg(long)]
    no_diversify: bool,
    /// Greedy mode: use the gating/modulation toggles instead of strict FIFO memory.
    #[arg(long)]
    greedy_ablated: bool,
    #[arg(long)]
    greedy_gating: bool,
    #[arg(long)]
    greedy_modulation: bool,
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    trace: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, BenchError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if !self.scenarios.is_empty() {
            c.scenarios = self.scenarios.clone();
        }
        if let Some(m) = self.mode {
            c.mode = m;
        }
        if let Some(b) = &self.backend {
            c.backend = b.clone();
        }
        if let Some(o) = &self.out {
            c.out_dir = Some(o.clone());
        }
        if let Some(p) = self.parallelism {
            c.parallelism = p;
        }
        if let Some(s) = self.segments {
            c.segments = s;
        }
        if self.tolerance.is_some() {
            c.tolerance = self.tolerance;
        }
        let h = &mut c.hyperparams;
        if let Some(v) = self.pathways {
            h.pathways = v;
        }
        if let Some(v) = self.memory_frames {
            h.memory_frames = v;
        }
        if let Some(v) = self.delta_conf {
            h.delta_conf = v;
        }
        if let Some(v) = self.delta_iou {
            h.delta_iou = v;
        }
        if let Some(v) = &self.modulation {
            SweepAxis::Modulation.apply(v, h)?;
        }
        if let Some(v) = &self.rounding {
            SweepAxis::Rounding.apply(v, h)?;
        }
        c.diversify &= !self.no_diversify;
        if self.greedy_ablated {
            c.greedy.strict = false;
        }
        c.greedy.gating |= self.greedy_gating;
        c.greedy.modulation |= self.greedy_modulation;
        c.svg |= self.svg;
        c.trace |= self.trace;
        c.validate()?;
        Ok(c)
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn print_json(value: &serde_json::Value) {
    emit(&format!("{}\n", serde_json::to_string_pretty(value).expect("json serializes")));
}

fn run(config: &RunConfig, record: Option<&Path>) -> Result<(), BenchError> {
    let report = execute(config, record.is_some())?;
    let dir = write_outputs(config, &report, &config.resolved_out_dir())?;
    if let (Some(path), Some(trace)) = (record, &report.trace) {
        trace.save(path).map_err(|e| BenchError::Run(format!("{}: {e}", path.display())))?;
    }
    print_json(&json!({ "out_dir": dir, "aggregate": report.aggregate() }));
    Ok(())
}

fn dispatch(command: Command) -> Result<(), BenchError> {
    match command {
        Command::Run(args) => run(&args.resolve()?, None),
        Command::Record { run: args, trace_file } => run(&args.resolve()?, Some(&trace_file)),
        Command::Replay { run: mut args, trace_file } => {
            args.backend = Some(format!("replay:{}", trace_file.display()));
            run(&args.resolve()?, None)
        }
        Command::Sweep { run: args, axis, values } => {
            let config = args.resolve()?;
            let axis = SweepAxis::parse(&axis)?;
            let rows = sweep(&config, axis, &values)?;
            let csv = sweep_csv(axis, &rows);
            write_atomic(&config.resolved_out_dir().join(format!("sweep-{}.csv", axis.name())), csv.as_bytes())?;
            emit(&csv);
            Ok(())
        }
        Command::Compare { a, b, segments, out } => {
            if segments == 0 {
                return Err(BenchError::Config("segments: must be at least 1".into()));
            }
            let pairs = compare_paths(&a, &b, segments)?;
            if let Some(dir) = &out {
                for (name, c) in &pairs {
                    write_atomic(&dir.join(name).join("gap.csv"), comparison_csv(c).as_bytes())?;
                    let pts = |k: usize| -> Vec<(f64, f64)> {
                        c.frames.iter().map(|f| (f64::from(f.0), if k == 0 { f.1 } else { f.2 })).collect()
                    };
                    let svg = line_chart(&format!("{name} J&F"), (0.0, 1.0), &[("a", pts(0)), ("b", pts(1))]);
                    write_atomic(&dir.join(name).join("gap.svg"), svg.as_bytes())?;
                }
            }
            let summary: Vec<_> = pairs
                .iter()
                .map(|(n, c)| json!({ "scenario": n, "mean_gap": c.mean_gap, "segment_gaps": c.segment_gaps }))
                .collect();
            let value = json!({ "scenarios": summary });
            if let Some(dir) = &out {
                let mut text = serde_json::to_string_pretty(&value).expect("json serializes");
                text.push('\n');
                write_atomic(&dir.join("compare.json"), text.as_bytes())?;
            }
            print_json(&value);
            Ok(())
        }
        Command::OracleCheck { fixtures, seed, min_frames, max_frames } => {
            let cases = oracle_check(fixtures, seed, min_frames, max_frames)?;
            for c in &cases {
                emit(&format!("{}\n", serde_json::to_string(c).expect("case serializes")));
            }
            let failed = cases.iter().filter(|c| !c.matches).count();
            if failed > 0 {
                return Err(BenchError::Run(format!("{failed} of {} fixtures disagree with enumeration", cases.len())));
            }
            Ok(())
        }
        Command::Generate { family, count, seed, out } => {
            let specs = generate_scenario_suite(&family, count, seed).map_err(|e| BenchError::Config(e.to_string()))?;
            for s in &specs {
                write_atomic(&out.join(format!("{}.json", s.name)), s.to_json().as_bytes())?;
            }
            print_json(&json!({ "written": specs.len(), "dir": out }));
            Ok(())
        }
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("config", e.to_string().trim(), 2),
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string(), e.exit_code() as u8),
    }
}
