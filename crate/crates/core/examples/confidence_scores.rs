//! Turning model output into confidence scores: length-normalized token
//! probabilities, verbalized scores, and the 0-10 categorical scale.

use confdebate::confidence::{coarsen_categorical, extract_answer_tokens, ln_confidence, sv_confidence};
use confdebate::parse::parse_turn;
use confdebate::{ConfidenceScore, TokenLogprob};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tokens: Vec<TokenLogprob> = [
        ("Reason: 6 times 7.\n", 0.98),
        ("Answer", 0.99),
        (": ", 0.99),
        ("4", 0.92),
        ("2", 0.85),
    ]
    .into_iter()
    .map(|(t, p): (&str, f64)| TokenLogprob::new(t, p.ln()))
    .collect();
    let span = extract_answer_tokens(&tokens, "42")?;
    println!("answer tokens {:?}: LN confidence {:.4}", span.text(), ln_confidence(&span).value());

    let reply = "Reason: Paris has been the capital since 987.\nAnswer: Paris\nConfidence score: 93";
    let parsed = parse_turn(reply, true)?;
    println!("verbalized: answer {:?}, confidence {:.2}", parsed.answer, sv_confidence(&parsed)?.value());

    for v in [0.04, 0.05, 0.449, 0.45, 0.97] {
        let (score, label) = coarsen_categorical(ConfidenceScore::new(v)?);
        println!("categorical {v:>5} -> {label:>2} ({})", score.value());
    }
    Ok(())
}
