//! The N-dimensional catenoid: graph height, slope, and the two coordinate
//! systems (radius `r > 1` and neck distance `y >= 0`) in which the radial
//! Laplace-Beltrami operator is expressed.
//!
//! The two coordinates are linked by `y = sqrt(r^{2(N-1)} - 1)`, so the neck
//! `r = 1` sits at `y = 0` and the operator coefficients are smooth in `y`
//! even though the slope blows up at the neck in `r`.

use crate::error::{Error, Result};
use crate::quad;

/// Largest exponent `x` with `exp(x)` finite in f64.
const LN_MAX: f64 = 709.78;

/// Ambient-graph dimension of the catenoid with the exponents every
/// coordinate formula needs, precomputed once per `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatenoidParams {
    n: u32,
    /// N - 1
    nm1: f64,
    /// 2(N - 1), the exponent in y = sqrt(r^{2(N-1)} - 1)
    two_nm1: f64,
    /// 1 / (2(N-1)), the exponent of r(y) = (1+y^2)^{1/(2(N-1))}
    exp_r: f64,
    /// (2N-3) / (2(N-1)), the exponent of the divergence-form flux weight
    exp_b: f64,
}

impl CatenoidParams {
    /// Requires `N >= 2`.
    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::Argument(format!(
                "dimension N must be >= 2, got {n}"
            )));
        }
        let nf = f64::from(n);
        Ok(Self {
            n,
            nm1: nf - 1.0,
            two_nm1: 2.0 * (nf - 1.0),
            exp_r: 1.0 / (2.0 * (nf - 1.0)),
            exp_b: (2.0 * nf - 3.0) / (2.0 * (nf - 1.0)),
        })
    }

    pub fn dim(&self) -> u32 {
        self.n
    }

    /// N - 1 as a float; the drift strength and the Jacobian power.
    pub fn nm1(&self) -> f64 {
        self.nm1
    }
}

/// `ln(1 + y^2)` without overflowing the square for huge `y`.
fn ln1p_sq(y: f64) -> f64 {
    if y > 1e150 {
        2.0 * y.ln()
    } else {
        (y * y).ln_1p()
    }
}

/// `r^m - 1` evaluated as `expm1(m ln r)`; accurate near `r = 1` where the
/// direct power cancels catastrophically.
fn pow_m1(r: f64, m: f64) -> f64 {
    (m * (r - 1.0).ln_1p()).exp_m1()
}

/// Graph slope `F_r(r) = 1 / sqrt(r^{2N-2} - 1)`; singular at the neck.
pub fn catenoid_slope(r: f64, p: &CatenoidParams) -> Result<f64> {
    if !(r > 1.0) {
        return Err(Error::Domain(format!(
            "slope is singular at the neck: need r > 1, got {r}"
        )));
    }
    Ok(1.0 / pow_m1(r, p.two_nm1).sqrt())
}

/// Graph height `F(r)`, the integral of the slope from the neck, with
/// `F(1) = 0`.
///
/// Near the neck the integrand behaves like `1/sqrt(s-1)`; substituting
/// `s = 1 + u^2` removes the singularity, so the quadrature sees a smooth
/// integrand throughout.
pub fn catenoid_height(r: f64, p: &CatenoidParams) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::Domain(format!("need r >= 1, got {r}")));
    }
    if r == 1.0 {
        return Ok(0.0);
    }
    let m = p.two_nm1;
    // 2u / sqrt((1+u^2)^m - 1); the u -> 0 limit is 2/sqrt(m).
    let neck_integrand = move |u: f64| {
        if u < 1e-8 {
            2.0 / m.sqrt()
        } else {
            2.0 * u / pow_m1(1.0 + u * u, m).sqrt()
        }
    };
    let split = 4.0_f64;
    if r <= split {
        quad::integrate(neck_integrand, 0.0, (r - 1.0).sqrt(), 1e-12)
    } else {
        let near = quad::integrate(neck_integrand, 0.0, (split - 1.0).sqrt(), 1e-12)?;
        let p_owned = *p;
        let far = quad::integrate(
            move |s| 1.0 / pow_m1(s, p_owned.two_nm1).sqrt(),
            split,
            r,
            1e-12,
        )?;
        Ok(near + far)
    }
}

/// `r(y) = (1 + y^2)^{1/(2(N-1))}`, the inverse of [`y_of_r`].
pub fn r_of_y(y: f64, p: &CatenoidParams) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("need y >= 0, got {y}")));
    }
    Ok((p.exp_r * ln1p_sq(y)).exp())
}

/// `y(r) = sqrt(r^{2(N-1)} - 1)`, distance from the neck in the flattened
/// coordinate. Rejects `r` whose power `r^{2(N-1)}` would overflow instead
/// of silently returning infinity.
pub fn y_of_r(r: f64, p: &CatenoidParams) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::Domain(format!("need r >= 1, got {r}")));
    }
    let log_pow = p.two_nm1 * (r - 1.0).ln_1p();
    if log_pow > LN_MAX {
        return Err(Error::Domain(format!(
            "r^{{2(N-1)}} overflows f64 for r = {r}, N = {}",
            p.n
        )));
    }
    Ok(log_pow.exp_m1().sqrt())
}

/// dr/dy = y r(y) / ((N-1)(1 + y^2)).
pub fn r_prime_of_y(y: f64, p: &CatenoidParams) -> Result<f64> {
    let r = r_of_y(y, p)?;
    Ok(y * r / (p.nm1 * (1.0 + y * y)))
}

/// Coefficients `(a, b)` of the divergence-form radial operator
/// `(N-1)^2 (1/a) d/dy (b v_y)` with `a = (y^2+1)^{1/(2(N-1))}` and
/// `b = (y^2+1)^{(2N-3)/(2(N-1))}`.
pub fn divergence_form_coeffs(y: f64, p: &CatenoidParams) -> Result<(f64, f64)> {
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("need y >= 0, got {y}")));
    }
    let l = ln1p_sq(y);
    Ok(((p.exp_r * l).exp(), (p.exp_b * l).exp()))
}

/// Coefficients `(diffusion, drift)` of the operator in the radius variable:
/// `diffusion = (r^{2(N-1)} - 1) / r^{2(N-1)}`, `drift = (N-1)/r`.
///
/// The diffusion coefficient degenerates to 0 at the neck, which is why the
/// PDE solver works in `y` instead.
pub fn r_form_coeffs(r: f64, p: &CatenoidParams) -> Result<(f64, f64)> {
    if !(r > 1.0) {
        return Err(Error::Domain(format!("need r > 1, got {r}")));
    }
    let diffusion = -(-p.two_nm1 * (r - 1.0).ln_1p()).exp_m1();
    Ok((diffusion, p.nm1 / r))
}
