//! Two interacting interfaces: evolve the reduced PDE from the two-layer
//! ansatz, track both fronts, and compare the gap against the law
//! eta(t) + b_1 and the positions against the Toda flow.
//!
//! Run with: cargo run --release --example two_layer_interaction

use catenoid_ac::harness::{run_experiment, FarFieldKind, RunConfig};
use catenoid_ac::reduced_dynamics::{b_constants, beta_cached, solve_eta, SolveOptions};

fn main() -> catenoid_ac::Result<()> {
    let out = std::env::temp_dir().join("catenoid-ac-two-layer");
    let cfg = RunConfig {
        n_dim: 2,
        k: 2,
        t0: -4000.0,
        t_end: -3700.0,
        n: 2501,
        snapshot_every: 800,
        far_field_bc: FarFieldKind::FixedConstant,
        output_dir: out.clone(),
        ..RunConfig::default()
    };
    println!(
        "evolving k = 2, N = 2 from the ansatz over [{}, {}] ...",
        cfg.t0, cfg.t_end
    );
    let report = run_experiment(&cfg)?;

    let beta = beta_cached()?;
    let b1 = b_constants(2, beta)?[0];
    let eta = solve_eta(cfg.t0 * 1.05, &SolveOptions::default())?;

    println!(
        "{:>10} {:>11} {:>11} {:>9} {:>9} {:>11}",
        "t", "front 1", "front 2", "gap", "eta+b1", "max|dev|"
    );
    for (i, &t) in report.track.times.iter().enumerate() {
        let pos = &report.track.positions[i];
        let dev = report.track.deviation[i]
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        let law = eta.eta_at(t)? + b1;
        println!(
            "{t:>10.1} {:>11.4} {:>11.4} {:>9.4} {law:>9.4} {dev:>11.3e}",
            pos[0],
            pos[1],
            pos[1] - pos[0]
        );
    }
    println!();
    println!(
        "max deviation from the Toda prediction: {:.5}; outputs in {}",
        report.track.max_deviation(),
        out.display()
    );
    Ok(())
}
