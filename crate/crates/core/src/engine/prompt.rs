//! Prompt templates and debate-history rendering.

use std::collections::HashMap;

use crate::agents::{AgentSpec, PromptBundle};
use crate::confidence::{coarsen_categorical, ConfidenceMethod, ConfidenceMode, Granularity};
use crate::types::DebateTurn;

pub const LN_INIT_SYSTEM: &str = "You are {debater}, a helpful AI assistant. You are now required to answer a question given by the user.
Please give your reasoning for the question, and give your answer to the question.
Please output in the following format strictly:

Reason: [your reason for the answer here]

Answer: [your answer here, only the answer]";

pub const LN_DEBATE_SYSTEM: &str = "You are {debater}, a debater. You are now required to answer a question given by the user and debate with other debaters about the answer. PAY SPECIAL ATTENTION to these confidence scores as they reflect the reliability and conviction of each debater. If the confidence score is low, it may indicate uncertainty in the debater's answer. Please evaluate it further in this case. Then, formulate your debate arguments and provide your answer to the question.
Please output in the following format strictly:

Reason: [your debate arguments here]

Answer: [your answer here, only the answer]";

pub const SV_INIT_SYSTEM: &str = "You are {debater}, a helpful AI assistant. You are now required to answer a question given by the user.
Please provide a clear reasoning for your answer, followed by your answer to the question.
It is crucial to also include your confidence score, which reflects how strongly you believe your answer is correct.
Consider the confidence score carefully as it represents the likelihood of your answer being accurate.
Please output in the following format strictly:

Reason: [your reason for the answer here]

Answer: [your answer here, only the answer]

Confidence score: [your confidence score only, 0-100]";

pub const SV_DEBATE_SYSTEM: &str = "You are {debater}, a debater. You are now required to answer a question given by the user and debate with other debaters about the answer.
PAY SPECIAL ATTENTION to these confidence scores as they reflect the reliability and conviction of each debater's argument.
If the confidence score is low, it may indicate uncertainty in the debater's answer. Please evaluate it further in this case.
Then, formulate your debate arguments and provide your answer to the question.
Finally, include your confidence score, which is a critical measure of how strongly you believe your answer is correct.
Please output in the following format strictly:

Reason: [your debate arguments here]

Answer: [your answer here, only the answer]

Confidence score: [your confidence score only, 0-100]";

/// The LN prompts with every confidence sentence removed.
pub const NOCONF_INIT_SYSTEM: &str = LN_INIT_SYSTEM;

pub const NOCONF_DEBATE_SYSTEM: &str = "You are {debater}, a debater. You are now required to answer a question given by the user and debate with other debaters about the answer. Then, formulate your debate arguments and provide your answer to the question.
Please output in the following format strictly:

Reason: [your debate arguments here]

Answer: [your answer here, only the answer]";

pub const INIT_USER: &str = "Question: {question}";

pub const DEBATE_USER: &str = "Question: {question}
Debate history: {debate_history}";

/// Single-pass `{name}` substitution; substituted text is never rescanned.
fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open + 1..];
        let hit = tail.find('}').and_then(|close| {
            let name = &tail[..close];
            vars.iter().find(|(k, _)| *k == name).map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &tail[close + 1..];
            }
            None => {
                out.push('{');
                rest = tail;
            }
        }
    }
    out.push_str(rest);
    out
}

fn system_template(mode: ConfidenceMode, round: usize) -> &'static str {
    match (mode.method, round) {
        (ConfidenceMethod::Ln, 0) => LN_INIT_SYSTEM,
        (ConfidenceMethod::Ln, _) => LN_DEBATE_SYSTEM,
        (ConfidenceMethod::Sv, 0) => SV_INIT_SYSTEM,
        (ConfidenceMethod::Sv, _) => SV_DEBATE_SYSTEM,
        (ConfidenceMethod::None, 0) => NOCONF_INIT_SYSTEM,
        (ConfidenceMethod::None, _) => NOCONF_DEBATE_SYSTEM,
    }
}

/// Init prompts for round 0, debate prompts afterwards. The question text is
/// inserted as-is.
pub fn build_prompt(agent: &AgentSpec, mode: ConfidenceMode, question: &str, history: Option<&str>, round: usize) -> PromptBundle {
    debug_assert_eq!(history.is_some(), round > 0, "history is present iff round > 0");
    let system = fill(system_template(mode, round), &[("debater", &agent.display_name)]);
    let user = match history {
        Some(h) if round > 0 => fill(DEBATE_USER, &[("question", question), ("debate_history", h)]),
        _ => fill(INIT_USER, &[("question", question)]),
    };
    PromptBundle { system, user }
}

/// Appended to the user prompt when a reply could not be parsed.
pub fn format_reminder(mode: ConfidenceMode, round: usize) -> String {
    let template = system_template(mode, round);
    let block = template
        .find("Please output in the following format strictly:")
        .map_or(template, |i| &template[i..]);
    format!("\n\nYour previous reply did not follow the required format. {block}")
}

/// Confidence as shown to other debaters: 0-100, or 0-10 when categorical.
pub fn display_confidence(turn: &DebateTurn, mode: ConfidenceMode) -> u8 {
    match mode.granularity {
        Granularity::Raw => turn.conf_cal.display(),
        Granularity::Categorical => coarsen_categorical(turn.conf_cal).1,
    }
}

/// One block per turn, in order, separated by blank lines.
pub fn render_history(turns: &[DebateTurn], agents: &[AgentSpec], mode: ConfidenceMode) -> String {
    let names: HashMap<&str, &str> = agents
        .iter()
        .map(|a| (a.agent_id.as_str(), a.display_name.as_str()))
        .collect();
    turns
        .iter()
        .map(|t| {
            let name = names.get(t.agent_id.as_str()).copied().unwrap_or(&t.agent_id);
            let mut block = format!(
                "[{name}, Round {}]\nReason: {}\nAnswer: {}",
                t.round, t.reason, t.answer_raw
            );
            if mode.is_enabled() {
                block.push_str(&format!("\nConfidence: {}", display_confidence(t, mode)));
            }
            block
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}
