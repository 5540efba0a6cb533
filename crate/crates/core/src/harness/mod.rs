//! Dataset loading and the three pipeline commands: fit calibrators on a
//! validation split, run debates over a dataset, and score transcripts.

mod config;

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use crate::agents::{Agent, AgentSpec};
use crate::answer::answers_match;
use crate::calibration::{
    save_calibrator, CalibrationMethod, Calibrator, LabeledScore, Provenance, TemperatureRecord, CALIBRATOR_EXT,
    DEFAULT_BINS,
};
use crate::confidence::ConfidenceMode;
use crate::engine::{question_seed, DebateConfig, DebateEngine};
use crate::error::{Error, Result};
use crate::metrics::{ece, GoldSet, MetricsReport, DEFAULT_ECE_BINS};
use crate::types::{DebateTranscript, DebateTurn, QuestionRecord};

pub use config::{load_agents_file, AgentsFile, RunConfigFile, DEFAULT_FAILURE_BUDGET};

pub const TRANSCRIPT_DIR: &str = "transcripts";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const ECE_CSV: &str = "ece_bins.csv";

/// Reads a JSONL dataset. Blank lines are skipped; ids must be unique.
pub fn load_dataset(path: &Path) -> Result<Vec<QuestionRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, path)
}

pub fn parse_dataset(text: &str, path: &Path) -> Result<Vec<QuestionRecord>> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Dataset {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let q: QuestionRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if !ids.insert(q.id.clone()) {
            return Err(err(format!("duplicate question id `{}`", q.id)));
        }
        out.push(q);
    }
    Ok(out)
}

pub fn write_dataset(path: &Path, questions: &[QuestionRecord]) -> Result<()> {
    let mut text = String::new();
    for q in questions {
        text.push_str(&serde_json::to_string(q)?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Numeric questions `<prefix>-0000`, `<prefix>-0001`, ... with distinct gold
/// answers; enough for simulated agents, which never read the question text.
pub fn synthetic_dataset(prefix: &str, n: usize) -> Vec<QuestionRecord> {
    (0..n)
        .map(|i| {
            QuestionRecord::new(format!("{prefix}-{i:04}"), format!("What is {i} + 100?"), (100 + i).to_string())
                .with_kind(crate::types::AnswerKind::Numeric)
        })
        .collect()
}

/// Applies `f` to every item on `workers` threads; results keep input order.
pub(crate) fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = workers.max(1).min(items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = std::iter::repeat_with(|| None).take(items.len()).collect();
    let parts: Vec<Vec<(usize, R)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= items.len() {
                            break done;
                        }
                        done.push((i, f(&items[i])));
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    for (i, r) in parts.into_iter().flatten() {
        slots[i] = Some(r);
    }
    slots.into_iter().map(|r| r.expect("every item processed")).collect()
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    // write-then-rename so an interrupted run never leaves a torn file
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------- calibrate

#[derive(Debug, Clone)]
pub struct CalibrateOptions {
    pub agents: Vec<AgentSpec>,
    pub validation: Vec<QuestionRecord>,
    /// Recorded in calibrator provenance.
    pub dataset_id: String,
    pub mode: ConfidenceMode,
    pub method: CalibrationMethod,
    pub out_dir: PathBuf,
    pub bins: usize,
    pub global_seed: u64,
    pub workers: usize,
}

impl CalibrateOptions {
    pub fn new(agents: Vec<AgentSpec>, validation: Vec<QuestionRecord>, mode: ConfidenceMode, method: CalibrationMethod, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            agents,
            validation,
            dataset_id: "validation".into(),
            mode,
            method,
            out_dir: out_dir.into(),
            bins: DEFAULT_BINS,
            global_seed: 0,
            workers: 1,
        }
    }
}

/// Per-agent outcome of `cmd_calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCalibration {
    pub agent_id: String,
    pub n_samples: usize,
    pub accuracy: f64,
    pub ece_before: f64,
    pub ece_after: Option<f64>,
    pub path: Option<PathBuf>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub method: CalibrationMethod,
    pub agents: Vec<AgentCalibration>,
    /// Validation questions whose initial round failed.
    pub failed_questions: Vec<String>,
}

impl CalibrationSummary {
    pub fn all_fitted(&self) -> bool {
        self.agents.iter().all(|a| a.error.is_none())
    }

    /// ECE before/after table, values x100.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<20}{:>8}{:>10}{:>14}{:>18}\n",
            "agent", "n", "accuracy", "ECE vanilla", format!("ECE {}", self.method)
        );
        for a in &self.agents {
            let after = match (a.ece_after, &a.error) {
                (Some(e), _) => format!("{:.2}", e * 100.0),
                (None, Some(_)) => "failed".to_string(),
                (None, None) => "-".to_string(),
            };
            let _ = writeln!(
                out,
                "{:<20}{:>8}{:>10.3}{:>14.2}{:>18}",
                a.agent_id,
                a.n_samples,
                a.accuracy,
                a.ece_before * 100.0,
                after
            );
        }
        for a in &self.agents {
            if let Some(e) = &a.error {
                let _ = writeln!(out, "{}: {e}", a.agent_id);
            }
        }
        out
    }
}

/// Runs the initial round over the validation set, fits one calibrator per
/// agent and writes `<out>/<agent_id>.cal.json`.
pub fn cmd_calibrate(opts: &CalibrateOptions) -> Result<CalibrationSummary> {
    let agents = opts
        .agents
        .iter()
        .cloned()
        .map(crate::agents::build_agent)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    cmd_calibrate_with(opts, agents)
}

/// As [`cmd_calibrate`] with pre-built agents (in `opts.agents` order).
pub fn cmd_calibrate_with(opts: &CalibrateOptions, agents: Vec<Arc<dyn Agent>>) -> Result<CalibrationSummary> {
    if opts.validation.is_empty() {
        return Err(Error::Config("validation set is empty".into()));
    }
    if !opts.mode.is_enabled() {
        return Err(Error::Config("calibration needs LN or SV confidence".into()));
    }
    let mut cfg = DebateConfig::new(opts.agents.clone());
    cfg.rounds = 0;
    cfg.confidence_mode = opts.mode;
    cfg.global_seed = opts.global_seed;
    let engine = DebateEngine::new(cfg, agents)?;

    let rounds = parallel_map(&opts.validation, opts.workers, |q| engine.run_initial_round(q));
    let mut failed_questions = Vec::new();
    let mut per_agent: BTreeMap<String, Vec<(DebateTurn, bool)>> = BTreeMap::new();
    for (q, result) in opts.validation.iter().zip(rounds) {
        match result {
            Ok(turns) => {
                for t in turns {
                    let ok = answers_match(&t.answer_raw, &q.gold_answer, q.answer_kind, q.choices());
                    per_agent.entry(t.agent_id.clone()).or_default().push((t, ok));
                }
            }
            Err(e) => {
                warn!(question = %q.id, "initial round failed: {e}");
                failed_questions.push(q.id.clone());
            }
        }
    }

    create_dir(&opts.out_dir)?;
    let mut results = Vec::new();
    for spec in &opts.agents {
        let rows = per_agent.remove(&spec.agent_id).unwrap_or_default();
        let scores: Vec<LabeledScore> = rows.iter().map(|(t, ok)| LabeledScore::new(t.conf_raw, *ok)).collect();
        let records: Vec<TemperatureRecord> = rows
            .iter()
            .filter_map(|(t, ok)| {
                t.token_logprobs.as_ref().map(|tokens| TemperatureRecord {
                    tokens: tokens.clone(),
                    correct: *ok,
                })
            })
            .collect();
        let n = scores.len();
        let accuracy = if n == 0 { 0.0 } else { scores.iter().filter(|s| s.correct).count() as f64 / n as f64 };
        let ece_before = if n == 0 { 0.0 } else { ece(&scores, DEFAULT_ECE_BINS)?.0 };
        let provenance = Provenance::new(spec.agent_id.clone(), opts.dataset_id.clone(), opts.mode, n);
        let mut entry = AgentCalibration {
            agent_id: spec.agent_id.clone(),
            n_samples: n,
            accuracy,
            ece_before,
            ece_after: None,
            path: None,
            error: None,
        };
        match Calibrator::fit(opts.method, &scores, &records, opts.bins, provenance) {
            Ok(cal) => {
                let calibrated = rows
                    .iter()
                    .map(|(t, ok)| cal.calibrate(t).map(|c| LabeledScore::new(c, *ok)))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                entry.ece_after = Some(ece(&calibrated, DEFAULT_ECE_BINS)?.0);
                let path = opts.out_dir.join(format!("{}.{CALIBRATOR_EXT}", spec.agent_id));
                save_calibrator(&cal, &path)?;
                info!(agent = %spec.agent_id, path = %path.display(), "calibrator written");
                entry.path = Some(path);
            }
            Err(e) => {
                warn!(agent = %spec.agent_id, "calibration failed: {e}");
                entry.error = Some(e.to_string());
            }
        }
        results.push(entry);
    }
    let summary = CalibrationSummary {
        method: opts.method,
        agents: results,
        failed_questions,
    };
    write_file(&opts.out_dir.join("calibration_report.txt"), &summary.to_table())?;
    Ok(summary)
}

// ------------------------------------------------------------------- debate

#[derive(Debug, Clone)]
pub struct DebateOptions {
    pub config: DebateConfig,
    pub dataset: Vec<QuestionRecord>,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub resume: bool,
    pub failure_budget: f64,
}

impl DebateOptions {
    pub fn new(config: DebateConfig, dataset: Vec<QuestionRecord>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            config,
            dataset,
            out_dir: out_dir.into(),
            workers: 1,
            resume: false,
            failure_budget: DEFAULT_FAILURE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedQuestion {
    pub question_id: String,
    pub message: String,
}

/// Written once at the end of `cmd_debate`. Holds wall-clock timings, so it
/// is the one output file that differs between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub global_seed: u64,
    pub n_questions: usize,
    pub completed: usize,
    pub resumed: usize,
    pub failed: Vec<FailedQuestion>,
    pub workers: usize,
    pub question_seeds: BTreeMap<String, u64>,
    /// Turns recorded across the debates run in this invocation.
    pub turns_recorded: usize,
    pub started_at: String,
    pub elapsed_ms: u64,
    pub question_ms: BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn failure_rate(&self) -> f64 {
        if self.n_questions == 0 {
            0.0
        } else {
            self.failed.len() as f64 / self.n_questions as f64
        }
    }
}

/// File-system-safe transcript name for a question id.
pub fn transcript_file_name(question_id: &str) -> String {
    let safe: String = question_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    if safe == question_id && !safe.starts_with('.') {
        format!("{safe}.json")
    } else {
        // keep distinct ids distinct after replacement
        let tag = &crate::engine::sha256_hex(question_id.as_bytes())[..8];
        format!("{safe}-{tag}.json")
    }
}

pub fn transcript_to_json(t: &DebateTranscript) -> Result<String> {
    Ok(serde_json::to_string_pretty(t)? + "\n")
}

fn completed_transcript(path: &Path, digest: &str) -> bool {
    std::fs::read_to_string(path)
        .ok()
        .and_then(|s| serde_json::from_str::<DebateTranscript>(&s).ok())
        .is_some_and(|t| t.is_completed() && t.config_digest == digest)
}

pub fn cmd_debate(opts: &DebateOptions) -> Result<RunManifest> {
    let engine = DebateEngine::from_config(opts.config.clone())?;
    cmd_debate_with(opts, engine)
}

/// Runs every question not already completed (when resuming) and writes one
/// transcript per question plus the manifest.
pub fn cmd_debate_with(opts: &DebateOptions, engine: DebateEngine) -> Result<RunManifest> {
    if opts.workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    let started_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
    let clock = Instant::now();
    let dir = opts.out_dir.join(TRANSCRIPT_DIR);
    create_dir(&dir)?;
    let digest = engine.digest().to_string();

    let mut pending = Vec::new();
    let mut resumed = 0;
    for q in &opts.dataset {
        let path = dir.join(transcript_file_name(&q.id));
        if opts.resume && completed_transcript(&path, &digest) {
            resumed += 1;
        } else {
            pending.push(q);
        }
    }
    info!(pending = pending.len(), resumed, "starting debates");

    let outcomes = parallel_map(&pending, opts.workers, |q| -> Result<(DebateTranscript, u64)> {
        let t0 = Instant::now();
        let t = engine.run_debate(q);
        write_file(&dir.join(transcript_file_name(&q.id)), &transcript_to_json(&t)?)?;
        Ok((t, t0.elapsed().as_millis() as u64))
    });

    let mut manifest = RunManifest {
        config_digest: digest,
        global_seed: opts.config.global_seed,
        n_questions: opts.dataset.len(),
        completed: resumed,
        resumed,
        failed: Vec::new(),
        workers: opts.workers,
        question_seeds: opts
            .dataset
            .iter()
            .map(|q| (q.id.clone(), question_seed(opts.config.global_seed, &q.id)))
            .collect(),
        turns_recorded: 0,
        started_at,
        elapsed_ms: 0,
        question_ms: BTreeMap::new(),
    };
    for outcome in outcomes {
        let (t, ms) = outcome?;
        manifest.turns_recorded += t.turns.len();
        manifest.question_ms.insert(t.question_id.clone(), ms);
        if t.is_completed() {
            manifest.completed += 1;
        } else {
            manifest.failed.push(FailedQuestion {
                question_id: t.question_id.clone(),
                message: t.failure.clone().unwrap_or_default(),
            });
        }
    }
    manifest.elapsed_ms = clock.elapsed().as_millis() as u64;
    write_file(
        &opts.out_dir.join(MANIFEST_FILE),
        &(serde_json::to_string_pretty(&manifest)? + "\n"),
    )?;
    if manifest.failure_rate() > opts.failure_budget {
        warn!(
            failed = manifest.failed.len(),
            total = manifest.n_questions,
            "failure budget exceeded"
        );
    }
    Ok(manifest)
}

// ------------------------------------------------------------------- report

/// Reads every transcript in `<dir>/transcripts`, ordered by file name.
pub fn load_transcripts(dir: &Path) -> Result<Vec<DebateTranscript>> {
    let tdir = dir.join(TRANSCRIPT_DIR);
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&tdir)
        .map_err(|e| Error::io(&tdir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(Error::from)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    Json,
    #[default]
    Text,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "text" => Ok(Self::Text),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

/// Scores the transcripts in `in_dir` and writes report.json, report.txt and
/// ece_bins.csv next to them.
pub fn cmd_report(in_dir: &Path, dataset: &[QuestionRecord]) -> Result<MetricsReport> {
    let transcripts = load_transcripts(in_dir)?;
    let gold = GoldSet::new(dataset.iter().cloned());
    let report = MetricsReport::compute(&transcripts, &gold)?;
    write_file(&in_dir.join(REPORT_JSON), &report.to_json())?;
    write_file(&in_dir.join(REPORT_TEXT), &report.to_text())?;
    write_file(&in_dir.join(ECE_CSV), &report.ece_csv())?;
    Ok(report)
}

pub fn render_report(report: &MetricsReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Text => report.to_text(),
        ReportFormat::Csv => report.ece_csv(),
    }
}
