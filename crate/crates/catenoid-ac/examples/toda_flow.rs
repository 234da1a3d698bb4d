//! The Toda-type flow of three nested interfaces: start on the
//! construction's leading-order positions, integrate forward, and watch the
//! correction h = rho - rho0 and the normalized residual.
//!
//! Run with: cargo run --example toda_flow

use catenoid_ac::geometry::CatenoidParams;
use catenoid_ac::reduced_dynamics::{beta_cached, solve_toda, toda_residual, Rho0, SolveOptions};

fn main() -> catenoid_ac::Result<()> {
    let p = CatenoidParams::new(2)?;
    let beta = beta_cached()?;
    let opts = SolveOptions::default();
    let (t0, t_end) = (-2e4, -1.6e4);

    let rho0 = Rho0::for_layers(3, p, t0 * 1.05, &opts)?;
    let init = rho0.eval(t0)?;
    println!("k = 3, N = 2, window [{t0}, {t_end}], starting on rho0(t0):");
    println!("  rho(t0) = {init:.4?}");

    let traj = solve_toda(t0, t_end, &init, beta, &rho0, &opts)?;
    println!(
        "  {} accepted steps, ordering held throughout",
        traj.times().len()
    );
    println!();
    println!("{:>10} {:>28} {:>24} {:>12}", "t", "gaps", "h", "max |res|");
    for i in 0..=4 {
        let t = t0 + (t_end - t0) * f64::from(i) / 4.0;
        let rho = traj.rho_at(t)?;
        let h = traj.h_at(t)?;
        let res = toda_residual(&traj, t, &p, beta)?;
        let gaps: Vec<String> = rho
            .windows(2)
            .map(|w| format!("{:.4}", w[1] - w[0]))
            .collect();
        let hs: Vec<String> = h.iter().map(|v| format!("{v:+.4}")).collect();
        let max_res = res.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        println!(
            "{t:>10.0} {:>28} {:>24} {max_res:>12.3e}",
            gaps.join(" "),
            hs.join(" ")
        );
    }
    println!();
    println!(
        "class norm sup|h| + sup (|t|/log|t|)|h'| = {:.4}  (a-priori class wants < 1)",
        traj.class_norm()
    );
    println!();
    println!("residual of the leading-order positions rho0 themselves:");
    for t in [-2e4, -1.8e4, -1.6e4] {
        let res = toda_residual(&rho0, t, &p, beta)?;
        let max = res.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let scale = t.abs().ln() / t.abs();
        println!(
            "  t = {t:>9.0}: max |res| = {max:.3e} = {:.3} * log|t|/|t|",
            max / scale
        );
    }
    Ok(())
}
