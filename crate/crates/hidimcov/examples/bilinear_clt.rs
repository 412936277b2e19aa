//! Empirical check of the single-form central limit theorem: the scaled
//! centered bilinear form of an ar1(0.5) series is close to
//! N(0, alpha^2) with alpha^2 = 160/27.
//!
//! Run with: cargo run --release --example bilinear_clt

use hidimcov::asymvar::alpha_sq;
use hidimcov::covest::d_path;
use hidimcov::mc::ks_statistic_normal;
use hidimcov::model::{CoefficientScheme, InnovationSpec};
use hidimcov::stats::sample_variance;
use hidimcov::weights::WeightVector;

fn main() -> hidimcov::Result<()> {
    let scheme = CoefficientScheme::ar1(vec![0.5], 1, 256, 0.25)?;
    let innov = InnovationSpec::gaussian(1.0)?;
    let e0 = WeightVector::unit(0, 1)?;
    let sigma = scheme.true_covariance(&innov)?;

    let n = 2000;
    let reps = 1000;
    let samples: Vec<f64> = (0..reps)
        .map(|r| {
            let panel = scheme.simulate(&innov, n, 1000 + r as u64)?;
            let path = d_path(&panel, &sigma, &e0, &e0, &[1.0])?;
            Ok(path.values[0][0])
        })
        .collect::<hidimcov::Result<_>>()?;

    let target = alpha_sq(&scheme, &innov, &e0, &e0, 256)?;
    let var = sample_variance(&samples);
    let ks = ks_statistic_normal(&samples, target.sqrt())?;
    println!("n = {n}, {reps} replications");
    println!("alpha^2 analytic  = {target:.6}");
    println!(
        "empirical Var     = {var:.6}  (rel err {:.2}%)",
        100.0 * (var - target).abs() / target
    );
    println!("KS vs N(0, alpha^2) = {ks:.4}");
    Ok(())
}
