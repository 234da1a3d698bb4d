//! The orthogonality multipliers d_i of the projected equation: with zero
//! perturbation the right-hand side is driven by the ansatz error alone, so
//! the multipliers must decay fast as t recedes. Tabulates d_1 for a single
//! layer together with the Gram normalization it is divided by.
//!
//! Run with: cargo run --release --example projection_decay

use catenoid_ac::geometry::{y_of_r, CatenoidParams};
use catenoid_ac::pde_solver::Grid1D;
use catenoid_ac::profiles::{LayerState, SQRT_2};
use catenoid_ac::projection::{gram_matrix, solve_projection_coeffs, ProjectionParts};
use catenoid_ac::reduced_dynamics::{beta_cached, toda_rhs, Rho0, SolveOptions};

fn main() -> catenoid_ac::Result<()> {
    let p = CatenoidParams::new(2)?;
    let beta = beta_cached()?;
    let rho0 = Rho0::for_layers(1, p, -2.0, &SolveOptions::default())?;

    println!("k = 1, N = 2, psi = 0: d_1 driven by the ansatz error only");
    println!();
    println!(
        "{:>10} {:>10} {:>14} {:>16}",
        "t", "rho_1", "G_11/rho_1", "d_1"
    );
    for exponent in 2..=5 {
        let t = -10f64.powi(exponent);
        let rr = rho0.eval(t)?;
        let layers = LayerState::new(rr.clone())?;
        let rho_prime = toda_rhs(&rr, &p, beta)?;
        let y_max = y_of_r(rr[0] + 20.0, &p)?;
        let n = (y_max / 0.01).ceil() as usize + 1;
        let grid = Grid1D::new(y_max, n)?;
        let psi = vec![0.0; grid.n()];
        let gram = gram_matrix(t, &layers, &grid, &p)?;
        let coeffs = solve_projection_coeffs(
            &psi,
            t,
            &layers,
            &rho_prime,
            &grid,
            &p,
            ProjectionParts::default(),
        )?;
        println!(
            "{t:>10.0} {:>10.3} {:>14.6} {:>16.6e}",
            rr[0],
            gram.get(0, 0) / rr[0],
            coeffs.d[0]
        );
    }
    println!();
    println!(
        "the normalization G_11/rho_1 approaches 2 sqrt2/3 = {:.6}",
        2.0 * SQRT_2 / 3.0
    );
    Ok(())
}
