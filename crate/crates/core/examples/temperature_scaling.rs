//! Temperature scaling on token-level alternatives. An overconfident model
//! puts most of its mass on the emitted answer token; fitting T > 1 flattens
//! the distribution and brings the rescaled LN confidence down.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use confdebate::calibration::{apply_temperature, fit_temperature, rescaled_ln_confidence, TemperatureRecord};
use confdebate::{TokenLogprob, TopLogprob};

fn record(rng: &mut ChaCha8Rng) -> TemperatureRecord {
    let p: f64 = rng.random_range(0.6..0.99);
    let rest = 1.0 - p;
    let mut alts = vec![TopLogprob { token: "A".into(), logprob: p.ln() }];
    alts.extend(["B", "C", "D", "E"].iter().map(|t| TopLogprob { token: (*t).into(), logprob: (rest / 4.0).ln() }));
    TemperatureRecord {
        tokens: vec![TokenLogprob::new("A", p.ln()).with_alternatives(alts)],
        correct: rng.random::<f64>() < p - 0.25,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("softmax([2, 1, 0]) at T=1: {:?}", apply_temperature(&[2.0, 1.0, 0.0], 1.0));
    println!("softmax([2, 1, 0]) at T=3: {:?}", apply_temperature(&[2.0, 1.0, 0.0], 3.0));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let records: Vec<_> = (0..1000).map(|_| record(&mut rng)).collect();
    let fitted = fit_temperature(&records)?;
    let accuracy = records.iter().filter(|r| r.correct).count() as f64 / records.len() as f64;
    let mean = |t: f64| records.iter().map(|r| rescaled_ln_confidence(&r.tokens, t).value()).sum::<f64>() / records.len() as f64;
    println!("accuracy {accuracy:.3}; mean confidence at T=1 {:.3}, at fitted T={:.3} {:.3}", mean(1.0), fitted.t, mean(fitted.t));
    Ok(())
}
