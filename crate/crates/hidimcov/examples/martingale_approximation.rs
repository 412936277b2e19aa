//! The approximating martingale against the centered partial-sum form on
//! shared innovation streams: the scaled squared gap shrinks as the sample
//! grows, and vanishes exactly for white noise.
//!
//! Run with: cargo run --release --example martingale_approximation

use hidimcov::limit::martingale_path;
use hidimcov::model::{CoefficientScheme, InnovationSpec};
use hidimcov::stats::mean;
use hidimcov::weights::WeightVector;

fn main() -> hidimcov::Result<()> {
    let innov = InnovationSpec::gaussian(1.0)?;
    let e0 = WeightVector::unit(0, 1)?;

    for (label, scheme) in [
        ("white noise", CoefficientScheme::white_noise(1, 64, 0.25)?),
        ("ar1(0.5)", CoefficientScheme::ar1(vec![0.5], 1, 64, 0.25)?),
    ] {
        println!("{label}:");
        let coefs = scheme.projected_coef(&e0)?;
        let center: f64 = innov.sigma_sq * coefs.iter().map(|c| c * c).sum::<f64>();
        for n in [250usize, 1000, 4000] {
            let reps = 400;
            let gaps: Vec<f64> = (0..reps)
                .map(|r| {
                    let eps = scheme.draw_innovations(&innov, n, 10_000 + r as u64);
                    let y = scheme.project_stream(&eps, &e0)?;
                    let d_nn: f64 = y.iter().map(|x| x * x).sum::<f64>() - n as f64 * center;
                    let m = martingale_path(&scheme, &innov, &eps, &e0, &e0, n)?;
                    let diff = d_nn - (m[n] - m[0]);
                    Ok(diff * diff / n as f64)
                })
                .collect::<hidimcov::Result<_>>()?;
            println!("  n = {n:>5}: scaled squared gap = {:.3e}", mean(&gaps));
        }
    }
    Ok(())
}
