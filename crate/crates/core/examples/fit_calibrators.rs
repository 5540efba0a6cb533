//! Fitting Platt scaling and histogram binning on overconfident scores and
//! comparing expected calibration error on held-out data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use confdebate::calibration::{Calibrator, CalibrationMethod, LabeledScore, Provenance};
use confdebate::confidence::ConfidenceMode;
use confdebate::metrics::ece;
use confdebate::ConfidenceScore;

fn overconfident(rng: &mut ChaCha8Rng, n: usize) -> Vec<LabeledScore> {
    (0..n)
        .map(|_| {
            let s: f64 = rng.random_range(0.5..1.0);
            // True accuracy trails the stated score by about 20 points.
            let correct = rng.random::<f64>() < s - 0.2;
            LabeledScore::new(ConfidenceScore::clamped(s), correct)
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let train = overconfident(&mut rng, 2000);
    let test = overconfident(&mut rng, 2000);
    println!("held-out ECE, uncalibrated: {:.4}", ece(&test, 10)?.0);

    for method in [CalibrationMethod::Platt, CalibrationMethod::Histogram] {
        let prov = Provenance::new("example-model", "synthetic", ConfidenceMode::SV, train.len());
        let cal = Calibrator::fit(method, &train, &[], 10, prov)?;
        let mapped: Vec<_> = test
            .iter()
            .map(|d| Ok(LabeledScore::new(cal.apply_score(d.score)?, d.correct)))
            .collect::<Result<_, confdebate::error::CalibrationError>>()?;
        println!("held-out ECE, {method}: {:.4}", ece(&mapped, 10)?.0);
        if method == CalibrationMethod::Platt {
            println!("{}", serde_json::to_string_pretty(&cal)?);
        }
    }
    Ok(())
}
