//! The catenoid itself: graph height and slope profiles for a few ambient
//! dimensions, the neck-coordinate map, and the operator coefficients in
//! both coordinate systems.
//!
//! Run with: cargo run --example catenoid_geometry

use catenoid_ac::geometry::{
    catenoid_height, catenoid_slope, divergence_form_coeffs, r_form_coeffs, r_of_y, y_of_r,
    CatenoidParams,
};

fn main() -> catenoid_ac::Result<()> {
    println!("graph height F(r) and slope F_r(r):");
    println!(
        "{:>8} {:>12} {:>12} {:>12} {:>12}",
        "r", "F (N=2)", "F_r (N=2)", "F (N=3)", "F_r (N=3)"
    );
    let p2 = CatenoidParams::new(2)?;
    let p3 = CatenoidParams::new(3)?;
    for r in [1.001, 1.1, 1.5, 2.0, 5.0, 20.0] {
        println!(
            "{r:>8.3} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            catenoid_height(r, &p2)?,
            catenoid_slope(r, &p2)?,
            catenoid_height(r, &p3)?,
            catenoid_slope(r, &p3)?
        );
    }

    println!();
    println!("neck coordinate y = sqrt(r^(2(N-1)) - 1), N = 3:");
    for r in [1.0, 1.5, 3.0, 10.0] {
        let y = y_of_r(r, &p3)?;
        println!(
            "  r = {r:>6.2}  ->  y = {y:>12.4}  ->  back to r = {:.12}",
            r_of_y(y, &p3)?
        );
    }

    println!();
    println!("operator coefficients, N = 3:");
    println!(
        "{:>8} {:>12} {:>12} | {:>8} {:>12} {:>12}",
        "y", "a(y)", "b(y)", "r", "diffusion", "drift"
    );
    for y in [0.0, 0.5, 2.0, 10.0] {
        let (a, b) = divergence_form_coeffs(y, &p3)?;
        let r = r_of_y(y, &p3)?;
        if r > 1.0 {
            let (diffusion, drift) = r_form_coeffs(r, &p3)?;
            println!("{y:>8.2} {a:>12.6} {b:>12.6} | {r:>8.4} {diffusion:>12.6} {drift:>12.6}");
        } else {
            // The r-form degenerates at the neck; that is why the solver
            // works in y.
            println!(
                "{y:>8.2} {a:>12.6} {b:>12.6} | {r:>8.4} {:>12} {:>12}",
                "0", "singular"
            );
        }
    }
    Ok(())
}
