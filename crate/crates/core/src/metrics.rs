//! Debate-quality metrics over a set of transcripts: accuracy, consensus,
//! correction, confidence win rate and expected calibration error.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::answer::{AnswerMatcher, StandardMatcher};
use crate::calibration::{bin_edge, bin_index, LabeledScore};
use crate::error::MetricsError;
use crate::types::{DebateTranscript, DebateTurn, QuestionRecord};

pub const DEFAULT_ECE_BINS: usize = 10;
/// ECE values are rounded to this many decimals, which strips floating-point
/// residue such as `1.0 - 0.95 = 0.050000000000000044`.
pub const ECE_DECIMALS: i32 = 12;

fn quantize(x: f64) -> f64 {
    let scale = 10f64.powi(ECE_DECIMALS);
    (x * scale).round() / scale
}

/// Per-bin statistics of a reliability diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStat {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_conf: f64,
    pub accuracy: f64,
}

/// Expected calibration error over `m` equal-width bins, with items already
/// assigned to bins. Empty bins contribute nothing.
pub fn ece_assigned(items: impl IntoIterator<Item = (usize, f64, bool)>, m: usize) -> Result<(f64, Vec<BinStat>), MetricsError> {
    let mut count = vec![0usize; m];
    let mut correct = vec![0usize; m];
    // running mean: exact when every value in a bin is identical
    let mut mean_conf = vec![0.0f64; m];
    for (bin, conf, ok) in items {
        count[bin] += 1;
        correct[bin] += usize::from(ok);
        mean_conf[bin] += (conf - mean_conf[bin]) / count[bin] as f64;
    }
    let n: usize = count.iter().sum();
    if n == 0 {
        return Err(MetricsError::EmptyInput);
    }
    let mut total = 0.0;
    let mut stats = Vec::with_capacity(m);
    for k in 0..m {
        let accuracy = if count[k] == 0 { 0.0 } else { correct[k] as f64 / count[k] as f64 };
        if count[k] > 0 {
            total += count[k] as f64 / n as f64 * (accuracy - mean_conf[k]).abs();
        }
        stats.push(BinStat {
            lo: bin_edge(k, m),
            hi: bin_edge(k + 1, m),
            count: count[k],
            mean_conf: mean_conf[k],
            accuracy,
        });
    }
    Ok((quantize(total), stats))
}

/// `ECE = Σ_m |B_m|/n · |acc(B_m) − conf(B_m)|` with bins chosen by the score.
pub fn ece(pairs: &[LabeledScore], m: usize) -> Result<(f64, Vec<BinStat>), MetricsError> {
    ece_assigned(
        pairs.iter().map(|p| (bin_index(p.score.value(), m), p.score.value(), p.correct)),
        m,
    )
}

/// A rate that is undefined when its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinRate {
    pub rate: Option<f64>,
    pub numerator: usize,
    pub denominator: usize,
}

impl WinRate {
    pub fn from_counts(numerator: usize, denominator: usize) -> Self {
        Self {
            rate: (denominator > 0).then(|| numerator as f64 / denominator as f64),
            numerator,
            denominator,
        }
    }
}

impl fmt::Display for WinRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rate {
            Some(r) => write!(f, "{r:.3} ({}/{})", self.numerator, self.denominator),
            None => write!(f, "n/a ({}/{})", self.numerator, self.denominator),
        }
    }
}

/// Gold answers keyed by question id, with the matcher used to score them.
#[derive(Clone)]
pub struct GoldSet {
    by_id: HashMap<String, QuestionRecord>,
    matcher: Arc<dyn AnswerMatcher>,
}

impl GoldSet {
    pub fn new(questions: impl IntoIterator<Item = QuestionRecord>) -> Self {
        Self::with_matcher(questions, Arc::new(StandardMatcher))
    }

    pub fn with_matcher(questions: impl IntoIterator<Item = QuestionRecord>, matcher: Arc<dyn AnswerMatcher>) -> Self {
        Self {
            by_id: questions.into_iter().map(|q| (q.id.clone(), q)).collect(),
            matcher,
        }
    }

    pub fn question(&self, id: &str) -> Option<&QuestionRecord> {
        self.by_id.get(id)
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn matcher(&self) -> &dyn AnswerMatcher {
        self.matcher.as_ref()
    }

    fn is_correct(&self, q: &QuestionRecord, answer: &str) -> bool {
        self.matcher.matches(answer, &q.gold_answer, q)
    }
}

fn resolve<'a>(transcripts: &'a [DebateTranscript], gold: &'a GoldSet) -> Result<Vec<(&'a DebateTranscript, &'a QuestionRecord)>, MetricsError> {
    let mut out = Vec::with_capacity(transcripts.len());
    let mut unknown = Vec::new();
    for t in transcripts {
        match gold.question(&t.question_id) {
            Some(q) => out.push((t, q)),
            None => unknown.push(t.question_id.clone()),
        }
    }
    if let Some(first) = unknown.first() {
        return Err(MetricsError::IdMismatch {
            unknown: unknown.len(),
            first: first.clone(),
        });
    }
    Ok(out)
}

fn final_turns(t: &DebateTranscript) -> Vec<&DebateTurn> {
    t.final_turns()
}

/// Unanimity over final-round answers.
fn reached_consensus(t: &DebateTranscript, q: &QuestionRecord, gold: &GoldSet) -> Option<String> {
    let turns = final_turns(t);
    let first = turns.first()?;
    turns
        .iter()
        .all(|o| gold.matcher.matches(&first.answer_raw, &o.answer_raw, q))
        .then(|| first.answer_raw.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusStats {
    pub n_questions: usize,
    pub consensus_count: usize,
    pub consensus_rate: f64,
    pub correct_consensus_count: usize,
}

pub fn consensus_metrics(transcripts: &[DebateTranscript], gold: &GoldSet) -> Result<ConsensusStats, MetricsError> {
    let pairs = resolve(transcripts, gold)?;
    if pairs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut consensus = 0;
    let mut correct = 0;
    for (t, q) in &pairs {
        if let Some(shared) = reached_consensus(t, q, gold) {
            consensus += 1;
            if gold.is_correct(q, &shared) {
                correct += 1;
            }
        }
    }
    Ok(ConsensusStats {
        n_questions: pairs.len(),
        consensus_count: consensus,
        consensus_rate: consensus as f64 / pairs.len() as f64,
        correct_consensus_count: correct,
    })
}

/// Questions answered correctly although some agent started out wrong.
pub fn correction_count(transcripts: &[DebateTranscript], gold: &GoldSet) -> Result<usize, MetricsError> {
    let pairs = resolve(transcripts, gold)?;
    Ok(pairs
        .iter()
        .filter(|(t, q)| {
            gold.is_correct(q, &t.final_answer)
                && t.round_turns(0).any(|turn| !gold.is_correct(q, &turn.answer_raw))
        })
        .count())
}

/// Among two-agent rounds where exactly one agent is right, the answers differ
/// and the calibrated confidences differ: how often the right agent was more
/// confident.
pub fn win_rate(transcripts: &[DebateTranscript], gold: &GoldSet, round: usize) -> Result<WinRate, MetricsError> {
    let pairs = resolve(transcripts, gold)?;
    let (mut num, mut den) = (0, 0);
    for (t, q) in pairs {
        if t.n_agents > 2 {
            return Err(MetricsError::MoreThanTwoAgents(t.n_agents));
        }
        let turns: Vec<_> = t.round_turns(round).collect();
        let [a, b] = turns.as_slice() else { continue };
        let (ca, cb) = (gold.is_correct(q, &a.answer_raw), gold.is_correct(q, &b.answer_raw));
        if ca == cb
            || gold.matcher.matches(&a.answer_raw, &b.answer_raw, q)
            || a.conf_cal.value() == b.conf_cal.value()
        {
            continue;
        }
        den += 1;
        let (right, wrong) = if ca { (a, b) } else { (b, a) };
        if right.conf_cal.value() > wrong.conf_cal.value() {
            num += 1;
        }
    }
    Ok(WinRate::from_counts(num, den))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accuracies {
    pub system: f64,
    pub per_agent_final: BTreeMap<String, f64>,
}

pub fn accuracies(transcripts: &[DebateTranscript], gold: &GoldSet) -> Result<Accuracies, MetricsError> {
    let pairs = resolve(transcripts, gold)?;
    if pairs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = pairs.len() as f64;
    let system = pairs.iter().filter(|(t, q)| gold.is_correct(q, &t.final_answer)).count() as f64 / n;
    let mut right: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (t, q) in &pairs {
        for turn in final_turns(t) {
            let e = right.entry(turn.agent_id.clone()).or_default();
            e.0 += usize::from(gold.is_correct(q, &turn.answer_raw));
            e.1 += 1;
        }
    }
    Ok(Accuracies {
        system,
        per_agent_final: right
            .into_iter()
            .map(|(k, (c, n))| (k, c as f64 / n as f64))
            .collect(),
    })
}

/// Labelled calibrated confidences of one agent at one round.
pub fn agent_round_pairs(transcripts: &[DebateTranscript], gold: &GoldSet, agent_id: &str, round: usize) -> Result<Vec<LabeledScore>, MetricsError> {
    let pairs = resolve(transcripts, gold)?;
    Ok(pairs
        .iter()
        .flat_map(|(t, q)| {
            t.round_turns(round)
                .filter(|turn| turn.agent_id == agent_id)
                .map(|turn| LabeledScore::new(turn.conf_cal, gold.is_correct(q, &turn.answer_raw)))
                .collect::<Vec<_>>()
        })
        .collect())
}

/// One row of the reliability-diagram CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EceBinRow {
    pub agent_id: String,
    pub round: usize,
    pub bin: usize,
    #[serde(flatten)]
    pub stat: BinStat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_questions: usize,
    pub failures: usize,
    pub accuracy_system: f64,
    pub accuracy_per_agent_final: BTreeMap<String, f64>,
    pub consensus_count: usize,
    pub consensus_rate: f64,
    pub correct_consensus_count: usize,
    pub correction_count: usize,
    pub win_rate_per_round: BTreeMap<usize, WinRate>,
    pub ece_per_agent_per_round: BTreeMap<String, BTreeMap<usize, f64>>,
    #[serde(skip)]
    pub ece_bins: Vec<EceBinRow>,
}

impl MetricsReport {
    /// Scores completed transcripts; failed ones are only counted.
    pub fn compute(transcripts: &[DebateTranscript], gold: &GoldSet) -> Result<Self, MetricsError> {
        let failures = transcripts.iter().filter(|t| !t.is_completed()).count();
        let done: Vec<DebateTranscript> = transcripts.iter().filter(|t| t.is_completed()).cloned().collect();
        if done.is_empty() {
            return Err(MetricsError::EmptyInput);
        }
        let acc = accuracies(&done, gold)?;
        let cons = consensus_metrics(&done, gold)?;
        let corrections = correction_count(&done, gold)?;

        let n_agents = done.iter().map(|t| t.n_agents).max().unwrap_or(0);
        let n_rounds = done.iter().map(|t| t.n_rounds).max().unwrap_or(0);
        let mut win_rate_per_round = BTreeMap::new();
        if n_agents == 2 {
            for r in 0..=n_rounds {
                win_rate_per_round.insert(r, win_rate(&done, gold, r)?);
            }
        }

        let mut agents: Vec<String> = Vec::new();
        for t in &done {
            for turn in &t.turns {
                if !agents.contains(&turn.agent_id) {
                    agents.push(turn.agent_id.clone());
                }
            }
        }
        let mut ece_per_agent_per_round: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
        let mut ece_bins = Vec::new();
        for agent in &agents {
            for r in 0..=n_rounds {
                let pairs = agent_round_pairs(&done, gold, agent, r)?;
                if pairs.is_empty() {
                    continue;
                }
                let (value, bins) = ece(&pairs, DEFAULT_ECE_BINS)?;
                ece_per_agent_per_round.entry(agent.clone()).or_default().insert(r, value);
                ece_bins.extend(bins.into_iter().enumerate().map(|(bin, stat)| EceBinRow {
                    agent_id: agent.clone(),
                    round: r,
                    bin,
                    stat,
                }));
            }
        }

        Ok(Self {
            n_questions: done.len(),
            failures,
            accuracy_system: acc.system,
            accuracy_per_agent_final: acc.per_agent_final,
            consensus_count: cons.consensus_count,
            consensus_rate: cons.consensus_rate,
            correct_consensus_count: cons.correct_consensus_count,
            correction_count: corrections,
            win_rate_per_round,
            ece_per_agent_per_round,
            ece_bins,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let row = |out: &mut String, k: &str, v: String| {
            let _ = writeln!(out, "{k:<28}{v:>16}");
        };
        row(&mut out, "questions", self.n_questions.to_string());
        row(&mut out, "failed debates", self.failures.to_string());
        row(&mut out, "system accuracy", format!("{:.3}", self.accuracy_system));
        row(&mut out, "consensus rate", format!("{:.3}", self.consensus_rate));
        row(&mut out, "consensus cases", self.consensus_count.to_string());
        row(&mut out, "correct consensus cases", self.correct_consensus_count.to_string());
        row(&mut out, "correction cases", self.correction_count.to_string());
        let _ = writeln!(out, "\nfinal-round accuracy");
        for (agent, a) in &self.accuracy_per_agent_final {
            row(&mut out, &format!("  {agent}"), format!("{a:.3}"));
        }
        if !self.win_rate_per_round.is_empty() {
            let _ = writeln!(out, "\nwin rate");
            for (r, wr) in &self.win_rate_per_round {
                row(&mut out, &format!("  round {r}"), wr.to_string());
            }
        }
        let _ = writeln!(out, "\nECE x100 (10 bins)");
        for (agent, rounds) in &self.ece_per_agent_per_round {
            let cells: Vec<String> = rounds.iter().map(|(r, e)| format!("r{r}={:.1}", e * 100.0)).collect();
            let _ = writeln!(out, "  {agent:<26}{}", cells.join("  "));
        }
        out
    }

    /// Reliability-diagram bins as CSV.
    pub fn ece_csv(&self) -> String {
        let mut out = String::from("agent_id,round,bin,lo,hi,count,mean_conf,accuracy\n");
        for row in &self.ece_bins {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                row.agent_id, row.round, row.bin, row.stat.lo, row.stat.hi, row.stat.count, row.stat.mean_conf, row.stat.accuracy
            );
        }
        out
    }
}
