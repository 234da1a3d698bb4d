//! The explicit constants of the construction: the interaction constant
//! beta from its two kernel integrals, then the spacing constants b_l and
//! centering constants gamma_j for small layer counts.
//!
//! Run with: cargo run --example constants

use catenoid_ac::reduced_dynamics::{
    b_constants, compute_beta, gamma_constants, interaction_integral, kernel_energy,
};

fn main() -> catenoid_ac::Result<()> {
    let num = interaction_integral()?;
    let den = kernel_energy()?;
    let beta = compute_beta()?;
    println!("int e^(sqrt2 x)(1-w^2) w' dx = {num:.15}   (exact 8/3)");
    println!("int (w')^2 dx               = {den:.15}   (exact 2 sqrt2 / 3)");
    println!("beta = 6 * ratio            = {beta:.15}   (exact 12 sqrt2)");
    println!();

    for k in 1..=4 {
        println!("k = {k}");
        let gamma = if k >= 2 {
            let b = b_constants(k, beta)?;
            for (l, v) in b.iter().enumerate() {
                println!("  b_{}     = {v:+.12}", l + 1);
            }
            gamma_constants(k, &b)?
        } else {
            vec![0.0]
        };
        for (j, v) in gamma.iter().enumerate() {
            println!("  gamma_{} = {v:+.12}", j + 1);
        }
    }
    Ok(())
}
