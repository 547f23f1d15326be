//! Scenario-driven test harness.
//!
//! [`run_scenario`] loads the platform, binary and optional fault
//! campaign named by a scenario, steps the simulation until the stop
//! condition, evaluates assertions non-intrusively, and produces a
//! verdict plus trace, coverage and fault-log artifacts. Runs are
//! deterministic in (scenario, seeds): identical inputs give
//! byte-identical artifacts.
//!
//! A batch ([`run_batch`]) executes many scenarios, possibly across
//! worker threads, reports verdicts in declaration order, and merges
//! coverage across scenarios that share a binary layout.

pub mod coverage;
pub mod loader;
pub mod scenario;
pub mod trace;

pub use coverage::{merge_coverage, CoverageError, CoverageReport};
pub use loader::{build_executable, load_binary, sha256_hex, LoadError, LoadResult};
pub use scenario::{parse_scenario, Assertion, StopCondition, Stimulus, TestScenario};
pub use trace::{diff_traces, parse_trace, render_trace, MalformedTrace, TraceDiff, TraceRecord};

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cpu::{CpuState, StepOutcome};
use crate::decode::InstrClass;
use crate::fault::{compile_campaign, parse_campaign};
use crate::platform::{instantiate, parse_platform, PlatformConfig};
use crate::sim::Simulator;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl ScenarioError {
    fn parse(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Parse {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, ScenarioError> {
    fs::read(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String, ScenarioError> {
    String::from_utf8(read_file(path)?).map_err(|_| ScenarioError::parse(path, "not UTF-8"))
}

/// Read a scenario file and resolve its relative references.
pub fn load_scenario(path: &Path) -> Result<TestScenario, ScenarioError> {
    let text = read_text(path)?;
    let mut scenario = parse_scenario(&text).map_err(|e| ScenarioError::parse(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    scenario.resolve_paths(base);
    Ok(scenario)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionResult {
    pub kind: String,
    pub subject: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactPaths {
    pub trace: Option<String>,
    pub coverage: String,
    pub fault_log: Option<String>,
}

/// Machine-readable record of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: String,
    pub outcome: Outcome,
    pub cycles: u64,
    pub instructions: u64,
    pub fault_activations: u64,
    pub coverage_pct: f64,
    pub exit_code: Option<u32>,
    pub stop_reason: String,
    pub error: Option<String>,
    pub image_sha256: String,
    pub assertions: Vec<AssertionResult>,
    pub artifacts: ArtifactPaths,
}

/// Run outputs: the verdict plus rendered artifact bodies.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub verdict: Verdict,
    pub trace_text: Option<String>,
    pub coverage: CoverageReport,
    pub fault_log_text: Option<String>,
}

impl RunArtifacts {
    /// Write every artifact under `dir` using the names recorded in the
    /// verdict, plus `<id>.verdict.json`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        if let (Some(name), Some(text)) = (&self.verdict.artifacts.trace, &self.trace_text) {
            fs::write(dir.join(name), text)?;
        }
        fs::write(dir.join(&self.verdict.artifacts.coverage), self.coverage.render())?;
        if let (Some(name), Some(text)) =
            (&self.verdict.artifacts.fault_log, &self.fault_log_text)
        {
            fs::write(dir.join(name), text)?;
        }
        let mut json = serde_json::to_string(&self.verdict).expect("verdict serializes");
        json.push('\n');
        fs::write(dir.join(format!("{}.verdict.json", self.verdict.id)), json)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Overrides scenario and campaign seeds.
    pub seed_override: Option<u64>,
    /// Collect and emit the instruction trace.
    pub trace: bool,
}

enum StopReason {
    Exit,
    Budget,
    Pc,
    Trap(crate::cpu::Trap),
}

impl StopReason {
    fn name(&self) -> String {
        match self {
            StopReason::Exit => "exit".into(),
            StopReason::Budget => "budget".into(),
            StopReason::Pc => "pc".into(),
            StopReason::Trap(t) => format!("trap:{t}"),
        }
    }
}

/// Execute one scenario end to end.
///
/// File-level problems (missing or malformed inputs) are `Err`;
/// simulation-level failures (traps, wrong stop condition) come back as
/// a verdict with [`Outcome::Error`].
pub fn run_scenario(
    scenario: &TestScenario,
    opts: &RunOptions,
) -> Result<RunArtifacts, ScenarioError> {
    let platform_text = read_text(&scenario.platform_path)?;
    let config = parse_platform(&platform_text)
        .map_err(|e| ScenarioError::parse(&scenario.platform_path, e))?;

    let image = read_file(&scenario.binary_path)?;
    let image_sha256 = sha256_hex(&image);

    let mut sim =
        instantiate(&config).map_err(|e| ScenarioError::parse(&scenario.platform_path, e))?;
    let loaded = load_binary(&image, scenario.load_address, &mut sim)
        .map_err(|e| ScenarioError::parse(&scenario.binary_path, e))?;
    sim.cpu = CpuState::reset(loaded.entry)
        .map_err(|e| ScenarioError::parse(&scenario.binary_path, e))?;
    sim.cpu.test_exit = Some(config.test_exit_address);

    // Validate stimuli targets up front.
    for s in &scenario.stimuli {
        let device = config.device(&s.device).ok_or_else(|| {
            ScenarioError::parse(
                &scenario.platform_path,
                format!("stimulus names unknown device `{}`", s.device),
            )
        })?;
        if s.offset >= device.size {
            return Err(ScenarioError::parse(
                &scenario.platform_path,
                format!("stimulus offset {:#x} outside device `{}`", s.offset, s.device),
            ));
        }
    }

    let campaign_attached = match &scenario.campaign_path {
        Some(path) => {
            let text = read_text(path)?;
            let mut campaign =
                parse_campaign(&text).map_err(|e| ScenarioError::parse(path, e))?;
            if let Some(seed) = opts.seed_override.or(scenario.seed) {
                campaign.seed = seed;
            }
            let compiled = compile_campaign(&campaign, &config)
                .map_err(|e| ScenarioError::parse(path, e))?;
            sim.attach_campaign(&compiled);
            true
        }
        None => false,
    };

    let mut coverage = CoverageReport::default();
    coverage.layout.extend(loaded.segments.iter().cloned());
    let mut trace_records: Vec<TraceRecord> = Vec::new();
    let mut instructions: u64 = 0;

    // Stimuli sorted by cycle, declaration order preserved within a cycle.
    let mut pending: Vec<&Stimulus> = scenario.stimuli.iter().collect();
    pending.sort_by_key(|s| s.cycle);
    let mut next_stimulus = 0usize;

    let reason = loop {
        if let StopCondition::PcEquals(addr) = scenario.stop {
            if sim.cpu.pc == addr {
                break StopReason::Pc;
            }
        }
        if sim.cpu.cycles >= scenario.cycle_budget {
            break StopReason::Budget;
        }
        while next_stimulus < pending.len() && pending[next_stimulus].cycle <= sim.cpu.cycles {
            let s = pending[next_stimulus];
            let base = config.device(&s.device).expect("validated").base;
            sim.stimulus_write(base + s.offset, s.value);
            next_stimulus += 1;
        }
        match sim.step() {
            StepOutcome::Retired(info) => {
                instructions += 1;
                coverage.record_exec(info.pc);
                if info.decoded.op.class() == InstrClass::Branch {
                    coverage.record_branch(info.pc, info.branch_taken.unwrap_or(false));
                }
                if opts.trace {
                    trace_records.push(TraceRecord::from_retired(&info));
                }
                if sim.cpu.halted {
                    break StopReason::Exit;
                }
            }
            StepOutcome::Trapped(t) => break StopReason::Trap(t),
            StepOutcome::Halted => break StopReason::Exit,
        }
    };

    // The input image must be untouched by the run.
    if sha256_hex(&image) != image_sha256 {
        return Err(ScenarioError::parse(
            &scenario.binary_path,
            "input image mutated during the run",
        ));
    }

    let expected_stop = matches!(
        (&scenario.stop, &reason),
        (StopCondition::TestExit, StopReason::Exit)
            | (StopCondition::CycleBudget, StopReason::Budget)
            | (StopCondition::PcEquals(_), StopReason::Pc)
    );

    let (outcome, error, assertions) = if expected_stop {
        let results = evaluate_assertions(&scenario.assertions, &sim, &config);
        let all_pass = results.iter().all(|r| r.pass);
        (
            if all_pass { Outcome::Pass } else { Outcome::Fail },
            None,
            results,
        )
    } else {
        (
            Outcome::Error,
            Some(format!(
                "expected stop `{}`, run ended with `{}`",
                match scenario.stop {
                    StopCondition::TestExit => "exit".to_string(),
                    StopCondition::CycleBudget => "budget".to_string(),
                    StopCondition::PcEquals(a) => format!("pc:{a:#x}"),
                },
                reason.name()
            )),
            Vec::new(),
        )
    };

    let verdict = Verdict {
        id: scenario.id.clone(),
        outcome,
        cycles: sim.cpu.cycles,
        instructions,
        fault_activations: sim.fault_log().len() as u64,
        coverage_pct: coverage.instruction_pct(),
        exit_code: sim.cpu.exit_code,
        stop_reason: reason.name(),
        error,
        image_sha256,
        assertions,
        artifacts: ArtifactPaths {
            trace: opts.trace.then(|| format!("{}.trace", scenario.id)),
            coverage: format!("{}.cov", scenario.id),
            fault_log: campaign_attached.then(|| format!("{}.faults", scenario.id)),
        },
    };

    let fault_log_text = campaign_attached.then(|| {
        let mut out = String::new();
        for record in sim.fault_log() {
            out.push_str(&record.to_string());
            out.push('\n');
        }
        out
    });

    Ok(RunArtifacts {
        verdict,
        trace_text: opts.trace.then(|| render_trace(&trace_records)),
        coverage,
        fault_log_text,
    })
}

fn evaluate_assertions(
    assertions: &[Assertion],
    sim: &Simulator,
    config: &PlatformConfig,
) -> Vec<AssertionResult> {
    assertions
        .iter()
        .map(|a| match a {
            Assertion::RegEquals { reg, value } => {
                let actual = sim.cpu.reg(*reg);
                AssertionResult {
                    kind: "reg".into(),
                    subject: format!("x{reg}"),
                    expected: format!("{value:#010x}"),
                    actual: format!("{actual:#010x}"),
                    pass: actual == *value,
                }
            }
            Assertion::MemEquals { address, width, value } => {
                let actual = sim.peek_range(*address, *width as u32).map(|bytes| {
                    bytes
                        .iter()
                        .rev()
                        .fold(0u32, |acc, b| acc << 8 | *b as u32)
                });
                AssertionResult {
                    kind: "mem".into(),
                    subject: format!("{address:#010x}/{width}"),
                    expected: format!("{value:#010x}"),
                    actual: actual
                        .map(|v| format!("{v:#010x}"))
                        .unwrap_or_else(|| "<unreadable>".into()),
                    pass: actual == Some(*value),
                }
            }
            Assertion::ConsoleEquals { expected } => {
                let actual = config
                    .devices
                    .iter()
                    .find(|d| d.kind == crate::device::DeviceKind::Console)
                    .and_then(|d| sim.bus.device(&d.id))
                    .and_then(|dev| dev.console_bytes().map(|b| b.to_vec()));
                AssertionResult {
                    kind: "console".into(),
                    subject: "output".into(),
                    expected: printable(expected),
                    actual: actual
                        .as_deref()
                        .map(printable)
                        .unwrap_or_else(|| "<no console>".into()),
                    pass: actual.as_deref() == Some(expected.as_slice()),
                }
            }
            Assertion::ExitCodeEquals { value } => {
                let actual = sim.cpu.exit_code;
                AssertionResult {
                    kind: "exit_code".into(),
                    subject: "exit".into(),
                    expected: value.to_string(),
                    actual: actual
                        .map(|v| v.to_string())
                        .unwrap_or_else(|| "<none>".into()),
                    pass: actual == Some(*value),
                }
            }
            Assertion::DeviceStatusEquals { device, value } => {
                let actual = sim.bus.device(device).map(|d| d.status());
                AssertionResult {
                    kind: "device_status".into(),
                    subject: device.clone(),
                    expected: value.to_string(),
                    actual: actual
                        .map(|v| v.to_string())
                        .unwrap_or_else(|| "<no device>".into()),
                    pass: actual == Some(*value),
                }
            }
        })
        .collect()
}

fn printable(bytes: &[u8]) -> String {
    bytes
        .iter()
        .flat_map(|b| std::ascii::escape_default(*b))
        .map(char::from)
        .collect()
}

/// Outputs of a batch run, verdicts in scenario-declaration order.
#[derive(Debug)]
pub struct BatchResult {
    pub runs: Vec<RunArtifacts>,
    /// Merged coverage per layout group, in first-appearance order.
    pub merged_coverage: Vec<CoverageReport>,
}

impl BatchResult {
    pub fn all_pass(&self) -> bool {
        self.runs
            .iter()
            .all(|r| r.verdict.outcome == Outcome::Pass)
    }

    /// One JSON record per scenario, in declaration order.
    pub fn report_jsonl(&self) -> String {
        let mut out = String::new();
        for run in &self.runs {
            out.push_str(&serde_json::to_string(&run.verdict).expect("verdict serializes"));
            out.push('\n');
        }
        out
    }
}

/// Run a list of scenario files, at most `jobs` at a time. Scenario-level
/// failures become error verdicts; the batch always continues.
pub fn run_batch(paths: &[PathBuf], opts: &RunOptions, jobs: usize) -> BatchResult {
    let jobs = jobs.max(1);
    let slots: Vec<Mutex<Option<RunArtifacts>>> =
        paths.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..jobs.min(paths.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= paths.len() {
                    break;
                }
                let run = run_path(&paths[i], opts);
                *slots[i].lock().unwrap() = Some(run);
            });
        }
    });

    let runs: Vec<RunArtifacts> = slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("every slot filled"))
        .collect();

    // Group coverage by layout, preserving first-appearance order.
    let mut merged_coverage: Vec<CoverageReport> = Vec::new();
    for run in &runs {
        if run.coverage.is_empty() {
            continue;
        }
        match merged_coverage
            .iter_mut()
            .find(|m| m.layout == run.coverage.layout)
        {
            Some(group) => {
                *group = merge_coverage(&[group.clone(), run.coverage.clone()])
                    .expect("same layout merges")
            }
            None => merged_coverage.push(run.coverage.clone()),
        }
    }

    BatchResult { runs, merged_coverage }
}

fn run_path(path: &Path, opts: &RunOptions) -> RunArtifacts {
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    match load_scenario(path).and_then(|s| run_scenario(&s, opts)) {
        Ok(run) => run,
        Err(e) => error_artifacts(id, e.to_string()),
    }
}

fn error_artifacts(id: String, message: String) -> RunArtifacts {
    RunArtifacts {
        verdict: Verdict {
            artifacts: ArtifactPaths {
                trace: None,
                coverage: format!("{id}.cov"),
                fault_log: None,
            },
            id,
            outcome: Outcome::Error,
            cycles: 0,
            instructions: 0,
            fault_activations: 0,
            coverage_pct: 0.0,
            exit_code: None,
            stop_reason: "none".into(),
            error: Some(message),
            image_sha256: String::new(),
            assertions: Vec::new(),
        },
        trace_text: None,
        coverage: CoverageReport::default(),
        fault_log_text: None,
    }
}

/// Parse one verdict record from its JSON line form.
pub fn verdict_from_json(line: &str) -> Result<Verdict, String> {
    serde_json::from_str(line).map_err(|e| e.to_string())
}

/// Human-readable batch summary.
pub fn summarize(verdicts: &[Verdict]) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let mut pass = 0;
    let mut fail = 0;
    let mut error = 0;
    for v in verdicts {
        let tag = match v.outcome {
            Outcome::Pass => {
                pass += 1;
                "PASS "
            }
            Outcome::Fail => {
                fail += 1;
                "FAIL "
            }
            Outcome::Error => {
                error += 1;
                "ERROR"
            }
        };
        writeln!(
            out,
            "{tag} {}  cycles={} faults={} coverage={:.2}%",
            v.id, v.cycles, v.fault_activations, v.coverage_pct
        )
        .unwrap();
        if let Some(e) = &v.error {
            writeln!(out, "      {e}").unwrap();
        }
        for a in v.assertions.iter().filter(|a| !a.pass) {
            writeln!(
                out,
                "      assert {} {}: expected {}, got {}",
                a.kind, a.subject, a.expected, a.actual
            )
            .unwrap();
        }
    }
    writeln!(
        out,
        "{} scenario(s): {pass} pass, {fail} fail, {error} error",
        verdicts.len()
    )
    .unwrap();
    out
}
