#![allow(clippy::needless_range_loop)]

//! End-to-end acceptance suite: every limit approximation and estimator contract
//! the crate implements is verified at desk scale with frozen seeds and
//! pinned tolerances. One test (and one printed pass/fail line) per
//! criterion.
//!
//! Criteria:
//!  1. analytic beta^2 agrees with the Isserlis oracle to 1e-8 on 50
//!     randomized schemes and weight tuples;
//!  2. single-form CLT: empirical Var within 10% of 160/27 and KS <= 0.04
//!     for the ar1(0.5) unit form at n = 4000;
//!  3. trace-CI coverage in [0.93, 0.97] at the 95% level (d = 20,
//!     n = 2000), oracle-sigma coverage inside the binomial 3-sigma band;
//!  4. mean |sigma_tr_hat^2 - sigma_tr^2| strictly decreasing over
//!     n in {500, 2000, 8000};
//!  5. oracle-weight shrinkage dominates the sample covariance by at least
//!     two paired MC standard errors at d/n in {0.1, 1, 2};
//!  6. log-log rate slope of E|W_hat - W*| negative for d in {10, 20, 40},
//!     oracle distance tracking within a factor 3;
//!  7. orthogonal-pair variance matches (1-W)^2 alpha^2 within 10%;
//!     near-orthogonal target share decreasing over d in {16, 64, 256};
//!  8. limit-model endpoint covariance within 5% entrywise (0.02 floor)
//!     at 1e5 replications; Var(B'(W)) matches the closed form within 5%;
//!  9. martingale gap at n = 4000 strictly below its n = 500 value for
//!     ar1(0.5); identically ~0 for white noise;
//! 10. identical configs give bit-identical summaries for any worker count.

use hidimcov::asymvar::{beta_sq, isserlis_lrv_oracle};
use hidimcov::limit::{build_limit_model, sample_paths, shrink_functional, Construction};
use hidimcov::mc::{
    run, CellSpec, ExperimentConfig, ExperimentKind, KernelConfig, OrthoConfig, ShrinkAssertions,
    Tolerances,
};
use hidimcov::model::{
    CoefficientScheme, InnovationConfig, InnovationSpec, ModelConfig, SchemeKindConfig,
};
use hidimcov::stats::sample_variance;
use hidimcov::weights::WeightVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn gaussian_ar1_mixture(d: usize, j_max: usize) -> ModelConfig {
    ModelConfig {
        kind: SchemeKindConfig::Ar1Geometric {
            rho: vec![0.2, 0.5, 0.7],
        },
        theta: 0.25,
        j_max,
        d,
        innovations: InnovationConfig::Gaussian { sigma_sq: 1.0 },
    }
}

fn base_config(kind: ExperimentKind, model: ModelConfig) -> ExperimentConfig {
    ExperimentConfig {
        schema: 1,
        experiment: kind,
        model,
        weights: None,
        n_grid: vec![],
        d_grid: vec![],
        cells: None,
        reps: 100,
        kernel: KernelConfig::default(),
        master_seed: 0,
        workers: None,
        level: None,
        shrink_w: None,
        ortho: None,
        store_reps: false,
        tolerances: Tolerances::default(),
        shrink_assertions: ShrinkAssertions::default(),
    }
}

fn report_line(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

#[test]
fn criterion_1_oracle_equivalence() {
    let innov = InnovationSpec::gaussian(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let d = rng.random_range(1..=5usize);
        let j_max = 64;
        let scheme = match trial % 3 {
            0 => CoefficientScheme::white_noise(d, j_max, 0.25).unwrap(),
            1 => {
                let rho: Vec<f64> = (0..d).map(|_| rng.random_range(-0.85..0.85)).collect();
                CoefficientScheme::ar1(rho, d, j_max, 0.25).unwrap()
            }
            _ => {
                let scale: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..1.5)).collect();
                CoefficientScheme::power_decay(scale, d, j_max, 0.3).unwrap()
            }
        };
        let rand_w = |rng: &mut ChaCha8Rng| {
            let coords: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w = WeightVector::new(coords);
            if w.l1() > 0.0 {
                w.scale(1.0 / w.l1())
            } else {
                w
            }
        };
        let v = rand_w(&mut rng);
        let w = rand_w(&mut rng);
        let vt = rand_w(&mut rng);
        let wt = rand_w(&mut rng);
        let analytic = beta_sq(&scheme, &innov, &v, &w, &vt, &wt, j_max).unwrap();
        let oracle = isserlis_lrv_oracle(&scheme, &innov, &v, &w, &vt, &wt, j_max).unwrap();
        let err = (analytic - oracle).abs() / analytic.abs().max(1.0);
        worst = worst.max(err);
    }
    let pass = worst <= 1e-8;
    report_line(
        "1 oracle-equivalence",
        pass,
        &format!("worst relative discrepancy {worst:.3e} over 50 tuples"),
    );
    assert!(pass, "worst analytic-vs-oracle discrepancy {worst}");
}

#[test]
fn criterion_2_single_form_clt() {
    let mut cfg = base_config(
        ExperimentKind::CltCheck,
        ModelConfig {
            kind: SchemeKindConfig::Ar1Geometric { rho: vec![0.5] },
            theta: 0.25,
            j_max: 512,
            d: 1,
            innovations: InnovationConfig::Gaussian { sigma_sq: 1.0 },
        },
    );
    cfg.n_grid = vec![4000];
    cfg.reps = 2000;
    cfg.master_seed = 1;
    cfg.tolerances.variance_rel = 0.10;
    cfg.tolerances.ks_max = 0.04;
    let out = run(&cfg).unwrap();
    let stats = &out.report.cells[0].stats;
    let target = 160.0 / 27.0;
    let detail = format!(
        "alpha^2 {:.6} (=160/27 {:.6}), emp var {:.4}, rel {:.4}, ks {:.4}",
        stats["alpha_sq"], target, stats["emp_var"], stats["var_rel_err"], stats["ks"]
    );
    report_line("2 single-form-clt", out.report.pass, &detail);
    assert!((stats["alpha_sq"] - target).abs() < 1e-9);
    assert!(out.report.pass, "{:?}", out.report.assertions);
}

#[test]
fn criterion_3_trace_ci_coverage() {
    let mut cfg = base_config(ExperimentKind::TraceCoverage, gaussian_ar1_mixture(20, 64));
    cfg.n_grid = vec![2000];
    cfg.reps = 2000;
    cfg.level = Some(0.95);
    cfg.master_seed = 20260808;
    cfg.tolerances.coverage_tol = 0.02; // [0.93, 0.97]
    let out = run(&cfg).unwrap();
    let stats = &out.report.cells[0].stats;
    let detail = format!(
        "coverage {:.4} (band [0.93,0.97]), oracle coverage {:.4} (3-sigma band ±{:.4})",
        stats["coverage"],
        stats["coverage_oracle"],
        3.0 * stats["binom_se"]
    );
    report_line("3 trace-ci-coverage", out.report.pass, &detail);
    assert!(out.report.pass, "{:?}", out.report.assertions);
}

#[test]
fn criterion_4_estimator_consistency() {
    let mut cfg = base_config(
        ExperimentKind::BetaConsistency,
        gaussian_ar1_mixture(10, 64),
    );
    cfg.n_grid = vec![500, 2000, 8000];
    cfg.reps = 200;
    cfg.master_seed = 1618;
    let out = run(&cfg).unwrap();
    let errs: Vec<f64> = out
        .report
        .cells
        .iter()
        .map(|c| c.stats["mean_abs_err"])
        .collect();
    let detail = format!("mean |sigma_tr_hat^2 - sigma_tr^2| along n: {errs:?}");
    report_line("4 estimator-consistency", out.report.pass, &detail);
    assert!(out.report.pass, "{:?}", out.report.assertions);
}

/// Sliding-window AR(1): coordinate a is the same AR(1) series lagged by a,
/// giving the classic Toeplitz covariance rho^|a-b|/(1-rho^2). Off-diagonal
/// mass decays with the band, which keeps the paired dominance comparison
/// sharp at every d/n ratio.
fn sliding_window_ar1(d: usize, rho: f64, j_max: usize) -> ModelConfig {
    let rows: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            let mut row = vec![0.0; j_max + 1];
            for (k, slot) in row.iter_mut().enumerate().skip(a) {
                *slot = rho.powi((k - a) as i32);
            }
            row
        })
        .collect();
    ModelConfig {
        kind: SchemeKindConfig::Table { coefficients: rows },
        theta: 0.25,
        j_max,
        d,
        innovations: InnovationConfig::Gaussian { sigma_sq: 1.0 },
    }
}

#[test]
fn criterion_5_shrinkage_dominance() {
    let mut cfg = base_config(
        ExperimentKind::ShrinkageRate,
        sliding_window_ar1(64, 0.5, 160),
    );
    // d/n = 0.1, 1, 2
    cfg.cells = Some(vec![
        CellSpec { n: 640, d: 64 },
        CellSpec { n: 64, d: 64 },
        CellSpec { n: 32, d: 64 },
    ]);
    cfg.reps = 500;
    cfg.master_seed = 1;
    cfg.tolerances.dominance_se = 2.0;
    cfg.shrink_assertions = ShrinkAssertions {
        dominance: true,
        rate_slope: false,
        tracking: false,
    };
    let out = run(&cfg).unwrap();
    let detail: Vec<String> = out
        .report
        .cells
        .iter()
        .map(|c| {
            format!(
                "{}: W*={:.3}, gain {:.4} vs 2se {:.4}",
                c.cell_id,
                c.stats["w_star"],
                c.stats["mean_dominance_gain"],
                2.0 * c.stats["mcse_dominance_gain"]
            )
        })
        .collect();
    report_line("5 shrinkage-dominance", out.report.pass, &detail.join("; "));
    assert!(out.report.pass, "{:?}", out.report.assertions);
}

#[test]
fn criterion_6_weight_estimator_rate() {
    let mut cfg = base_config(ExperimentKind::ShrinkageRate, gaussian_ar1_mixture(10, 64));
    cfg.n_grid = vec![500, 2000, 8000];
    cfg.d_grid = vec![10, 20, 40];
    cfg.reps = 200;
    cfg.master_seed = 31415;
    cfg.tolerances.tracking_factor = 3.0;
    cfg.shrink_assertions = ShrinkAssertions {
        dominance: false,
        rate_slope: true,
        tracking: true,
    };
    let out = run(&cfg).unwrap();
    let slopes: Vec<String> = out
        .report
        .assertions
        .iter()
        .filter(|a| a.name.starts_with("rate_slope"))
        .map(|a| format!("{}: {}", a.name, a.detail))
        .collect();
    report_line(
        "6 weight-estimator-rate",
        out.report.pass,
        &slopes.join("; "),
    );
    assert!(out.report.pass, "{:?}", out.report.assertions);
}

#[test]
fn criterion_7_near_orthogonal_degeneration() {
    let mut cfg = base_config(ExperimentKind::OrthoStudy, gaussian_ar1_mixture(16, 64));
    cfg.n_grid = vec![4000];
    cfg.d_grid = vec![16, 64, 256];
    cfg.reps = 2000;
    cfg.shrink_w = Some(0.5);
    cfg.ortho = Some(OrthoConfig { a_coherence: 1.0 });
    cfg.master_seed = 60601;
    cfg.tolerances.variance_rel = 0.10;
    let out = run(&cfg).unwrap();
    let shares: Vec<String> = out
        .report
        .cells
        .iter()
        .filter(|c| c.cell_id.starts_with("near_orth"))
        .map(|c| format!("d={}: share {:.4}", c.d, c.stats["target_share"]))
        .collect();
    let orth = out
        .report
        .cells
        .iter()
        .find(|c| c.cell_id.starts_with("orthogonal"))
        .unwrap();
    let detail = format!(
        "orthogonal var {:.4} vs (1-W)^2 alpha^2 {:.4}; {}",
        orth.stats["emp_var"],
        0.25 * orth.stats["alpha_sq"],
        shares.join("; ")
    );
    report_line("7 near-orthogonal", out.report.pass, &detail);
    assert!(out.report.pass, "{:?}", out.report.assertions);
}

#[test]
fn criterion_8_limit_model_self_consistency() {
    let d = 6;
    let model_cfg = gaussian_ar1_mixture(d, 64);
    let (scheme, innov) = model_cfg.build().unwrap();
    let v = WeightVector::new(vec![0.4, 0.2, 0.1, 0.1, 0.1, 0.1]);
    let w = WeightVector::new(vec![0.1, 0.3, 0.2, 0.2, 0.1, 0.1]);
    let reps = 100_000;

    let mut pass = true;
    let mut worst_rel: f64 = 0.0;
    for construction in [Construction::Joint, Construction::TwoBlock] {
        let model = build_limit_model(&scheme, &innov, &v, &w, construction).unwrap();
        let ens = sample_paths(&model, &[1.0], reps, 0xACCE_0008).unwrap();
        let dim = d + 1;
        // empirical endpoint covariance (mean-zero construction)
        let mut emp = vec![vec![0.0f64; dim]; dim];
        for r in 0..reps {
            let x = ens.endpoint(r);
            for i in 0..dim {
                for j in i..dim {
                    emp[i][j] += x[i] * x[j];
                }
            }
        }
        for i in 0..dim {
            for j in i..dim {
                let e = emp[i][j] / reps as f64;
                let target = model.cov.get(i, j);
                let scale = target.abs().max(0.02);
                let rel = (e - target).abs() / scale;
                worst_rel = worst_rel.max(rel);
                if rel > 0.05 {
                    pass = false;
                }
            }
        }
    }

    // Var(B'(W)) against the closed-form decomposition under two_block
    let model = build_limit_model(&scheme, &innov, &v, &w, Construction::TwoBlock).unwrap();
    let ens = sample_paths(&model, &[1.0], reps, 0xACCE_0009).unwrap();
    let w_shrink = 0.6;
    let vals: Vec<f64> = (0..reps)
        .map(|r| shrink_functional(&model, ens.endpoint(r), w_shrink).unwrap())
        .collect();
    let emp_var = sample_variance(&vals);
    let (a, b, c) = model.variance_decomposition(w_shrink).unwrap();
    let closed = a + b + c;
    let var_rel = (emp_var - closed).abs() / closed;
    if var_rel > 0.05 {
        pass = false;
    }
    let detail = format!(
        "worst endpoint-cov rel {:.4}; Var(B'({w_shrink})) emp {:.4} vs closed {:.4} (rel {:.4})",
        worst_rel, emp_var, closed, var_rel
    );
    report_line("8 limit-model", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_9_martingale_gap_decay() {
    let mut cfg = base_config(
        ExperimentKind::MartingaleGap,
        ModelConfig {
            kind: SchemeKindConfig::Ar1Geometric { rho: vec![0.5] },
            theta: 0.25,
            j_max: 128,
            d: 1,
            innovations: InnovationConfig::Gaussian { sigma_sq: 1.0 },
        },
    );
    cfg.n_grid = vec![500, 4000];
    cfg.reps = 500;
    cfg.master_seed = 6507;
    let out = run(&cfg).unwrap();
    let g500 = out.report.cells[0].stats["mean_gap"];
    let g4000 = out.report.cells[1].stats["mean_gap"];

    // white noise: gap identically ~0
    let mut wn = cfg.clone();
    wn.model = ModelConfig {
        kind: SchemeKindConfig::WhiteNoise,
        theta: 0.25,
        j_max: 16,
        d: 1,
        innovations: InnovationConfig::Gaussian { sigma_sq: 1.0 },
    };
    let wn_out = run(&wn).unwrap();
    let wn_max = wn_out
        .report
        .cells
        .iter()
        .map(|c| c.stats["mean_gap"])
        .fold(0.0f64, f64::max);

    let pass = out.report.pass && g4000 < g500 && wn_max <= 1e-12;
    let detail = format!("ar1 gap {g500:.6} -> {g4000:.6}; white-noise max gap {wn_max:.2e}");
    report_line("9 martingale-gap", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_10_determinism_across_workers() {
    let mut cfg = base_config(ExperimentKind::CltCheck, gaussian_ar1_mixture(4, 32));
    cfg.n_grid = vec![512];
    cfg.reps = 300;
    cfg.master_seed = 99;

    cfg.workers = Some(1);
    let one = run(&cfg).unwrap();
    cfg.workers = Some(4);
    let four = run(&cfg).unwrap();
    cfg.workers = None;
    let default_pool = run(&cfg).unwrap();

    let s1 = one.report.summaries_json();
    let s4 = four.report.summaries_json();
    let sd = default_pool.report.summaries_json();
    let pass = s1 == s4 && s1 == sd;
    report_line(
        "10 determinism",
        pass,
        &format!("summaries identical across worker counts: {pass}"),
    );
    assert!(pass);
}
