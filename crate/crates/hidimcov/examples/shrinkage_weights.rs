//! Shrinkage toward mu I: the estimated optimal weight against its oracle
//! value, and the loss improvement of oracle-weight shrinkage over the raw
//! sample covariance in a d > n regime.
//!
//! Run with: cargo run --release --example shrinkage_weights

use hidimcov::covest::{frobenius_star_sq, sample_cov};
use hidimcov::lrvest::{default_bandwidth, KernelSpec};
use hidimcov::model::{CoefficientScheme, InnovationSpec};
use hidimcov::shrink::{shrink_matrix, w_star_hat, w_star_oracle};
use hidimcov::stats::mean;

fn main() -> hidimcov::Result<()> {
    let d = 40;
    let n = 30; // singular sample covariance territory
    let scheme = CoefficientScheme::ar1(vec![0.2, 0.5, 0.7], d, 64, 0.25)?;
    let innov = InnovationSpec::gaussian(1.0)?;
    let sigma = scheme.true_covariance(&innov)?;
    let wstar = w_star_oracle(&scheme, &innov, n)?;
    println!(
        "W* = {:.4}  (numerator {:.4}, denominator {:.4})",
        wstar.w_star, wstar.numerator, wstar.denominator
    );

    let kernel = KernelSpec::bartlett(default_bandwidth(n)?);
    let reps = 200;
    let mut w_hats = Vec::with_capacity(reps);
    let mut loss_raw = Vec::with_capacity(reps);
    let mut loss_shrunk = Vec::with_capacity(reps);
    for r in 0..reps {
        let panel = scheme.simulate(&innov, n, 500 + r as u64)?;
        let shat = sample_cov(&panel)?.matrix;
        w_hats.push(w_star_hat(&panel, &kernel)?.w_hat);
        let mu = hidimcov::covest::trace_star(&shat)?;
        let shrunk = shrink_matrix(&shat, wstar.w_star, mu)?;
        loss_raw.push(frobenius_star_sq(&shat.sub(&sigma)?)?);
        loss_shrunk.push(frobenius_star_sq(&shrunk.sub(&sigma)?)?);
    }
    println!("mean W_hat over {reps} panels = {:.4}", mean(&w_hats));
    println!("mean ||S_hat - Sigma||*F^2      = {:.4}", mean(&loss_raw));
    println!(
        "mean ||S^s(W*) - Sigma||*F^2    = {:.4}  (gain {:.1}%)",
        mean(&loss_shrunk),
        100.0 * (1.0 - mean(&loss_shrunk) / mean(&loss_raw))
    );
    Ok(())
}
