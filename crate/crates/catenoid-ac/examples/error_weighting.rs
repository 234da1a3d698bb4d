//! The ansatz error term against the piecewise-exponential weight: tabulate
//! sup |E|/Phi and the normalized ratio sup/(log|t|/|t|)^nu across several
//! decades; boundedness of the ratio is the desk-scale form of the weighted
//! error estimate.
//!
//! Run with: cargo run --release --example error_weighting

use catenoid_ac::geometry::CatenoidParams;
use catenoid_ac::profiles::SQRT_2;
use catenoid_ac::projection::error_bound_ratio;

fn main() -> catenoid_ac::Result<()> {
    let p = CatenoidParams::new(2)?;
    let sigma = 1.0;
    let nu = (SQRT_2 - sigma) / (2.0 * SQRT_2);
    println!("k = 2, N = 2, sigma = {sigma}, nu = {nu:.4}");
    println!();
    println!("{:>10} {:>16} {:>12}", "t", "sup |E|/Phi", "ratio");
    let samples = error_bound_ratio(&[-1e2, -1e3, -1e4, -1e5], sigma, 2, &p)?;
    for s in &samples {
        println!("{:>10.0} {:>16.4} {:>12.4}", s.t, s.sup_e_over_phi, s.ratio);
    }
    let hi = samples.iter().map(|s| s.ratio).fold(0.0f64, f64::max);
    let lo = samples
        .iter()
        .map(|s| s.ratio)
        .fold(f64::INFINITY, f64::min);
    println!();
    println!("ratio spread {:.2}x across three decades", hi / lo);
    println!("(the sup includes the f64 rounding floor of E far below the innermost layer)");
    Ok(())
}
