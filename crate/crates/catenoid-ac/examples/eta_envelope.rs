//! The common gap profile eta(t): integrate its ODE over five decades and
//! verify the logarithmic envelope, i.e. that sqrt2 eta + log(log|t|/|t|)
//! stays inside a fixed window while -eta' stays under c log|t|/|t|.
//!
//! Run with: cargo run --example eta_envelope

use catenoid_ac::profiles::SQRT_2;
use catenoid_ac::reduced_dynamics::{eta_envelope_check, solve_eta, SolveOptions};

fn main() -> catenoid_ac::Result<()> {
    let sol = solve_eta(-1e6, &SolveOptions::default())?;
    println!(
        "integrated eta from t = -1 to t = -1e6 in {} accepted steps",
        sol.times().len()
    );
    println!();
    println!("{:>12} {:>12} {:>14} {:>10}", "t", "eta", "eta'", "g(t)");
    for exponent in 1..=6 {
        let t = -10f64.powi(exponent);
        let e = sol.eta_at(t)?;
        let ep = sol.eta_prime_at(t)?;
        let g = SQRT_2 * e + (t.abs().ln() / t.abs()).ln();
        println!("{t:>12.1} {e:>12.6} {ep:>14.3e} {g:>10.4}");
    }
    println!();
    let env = eta_envelope_check(&sol)?;
    println!(
        "envelope constants: c_low = {:.4}, c_high = {:.4} (ratio {:.2})",
        env.c_low,
        env.c_high,
        env.ratio()
    );
    println!("envelope check pass: {}", env.pass);
    Ok(())
}
