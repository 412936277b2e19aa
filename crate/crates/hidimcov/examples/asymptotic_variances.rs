// Analytic asymptotic variances of the bilinear forms, cross-checked
// against the independent Isserlis brute-force oracle.
//
// Run with: cargo run --release --example asymptotic_variances

use hidimcov::asymvar::{alpha_sq, beta_matrix, isserlis_lrv_oracle, sigma_tr_sq};
use hidimcov::model::{CoefficientScheme, InnovationSpec};
use hidimcov::weights::{WeightPairSet, WeightVector};

fn main() -> hidimcov::Result<()> {
    let j_max = 512;
    let scheme = CoefficientScheme::ar1(vec![0.5], 1, j_max, 0.25)?;
    let innov = InnovationSpec::gaussian(1.0)?;
    let e0 = WeightVector::unit(0, 1)?;

    let analytic = alpha_sq(&scheme, &innov, &e0, &e0, j_max)?;
    let oracle = isserlis_lrv_oracle(&scheme, &innov, &e0, &e0, &e0, &e0, j_max)?;
    println!("ar1(0.5) unit form:");
    println!("  alpha^2 analytic  = {analytic:.12}");
    println!("  isserlis oracle   = {oracle:.12}");
    println!("  closed form 160/27 = {:.12}", 160.0 / 27.0);

    // beta matrix over unit pairs and the trace-functional variance
    let d = 4;
    let mix = CoefficientScheme::ar1(vec![0.2, 0.5, 0.7], d, j_max, 0.25)?;
    let pairs = WeightPairSet::unit_pairs(d)?;
    let kernel = beta_matrix(&mix, &innov, &pairs, j_max)?;
    println!("\nbeta^2(i,j) over unit pairs (d = {d}):");
    for i in 0..d {
        let row: Vec<String> = (0..d)
            .map(|j| format!("{:7.4}", kernel.beta.get(i, j)))
            .collect();
        println!("  [{}]", row.join(", "));
    }
    println!("sigma_tr^2 = {:.6}", sigma_tr_sq(&kernel)?);
    Ok(())
}
