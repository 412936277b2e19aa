//! Build a Monte Carlo experiment in code, run it on a pinned seed, and
//! print the report. The same configuration can be written to JSON and run
//! through `hidimcov mc run --config <file>`.
//!
//! Run with: cargo run --release --example mc_experiment

use hidimcov::mc::{
    run, ExperimentConfig, ExperimentKind, KernelConfig, ShrinkAssertions, Tolerances,
};
use hidimcov::model::{InnovationConfig, ModelConfig, SchemeKindConfig};

fn main() -> hidimcov::Result<()> {
    let config = ExperimentConfig {
        schema: 1,
        experiment: ExperimentKind::CltCheck,
        model: ModelConfig {
            kind: SchemeKindConfig::Ar1Geometric { rho: vec![0.5] },
            theta: 0.25,
            j_max: 256,
            d: 1,
            innovations: InnovationConfig::Gaussian { sigma_sq: 1.0 },
        },
        weights: None,
        n_grid: vec![1000, 4000],
        d_grid: vec![],
        cells: None,
        reps: 1000,
        kernel: KernelConfig::default(),
        master_seed: 7,
        workers: None,
        level: None,
        shrink_w: None,
        ortho: None,
        store_reps: false,
        tolerances: Tolerances::default(),
        shrink_assertions: ShrinkAssertions::default(),
    };

    println!(
        "config as JSON:\n{}\n",
        serde_json::to_string_pretty(&config).unwrap()
    );
    let out = run(&config)?;
    for cell in &out.report.cells {
        println!(
            "{}: emp var {:.4} vs alpha^2 {:.4}, ks {:.4}",
            cell.cell_id, cell.stats["emp_var"], cell.stats["alpha_sq"], cell.stats["ks"]
        );
    }
    for a in &out.report.assertions {
        println!(
            "[{}] {}: {}",
            if a.pass { "pass" } else { "FAIL" },
            a.name,
            a.detail
        );
    }
    println!(
        "overall: {} ({:.2}s)",
        if out.report.pass { "pass" } else { "FAIL" },
        out.report.wall_clock_secs
    );
    Ok(())
}
