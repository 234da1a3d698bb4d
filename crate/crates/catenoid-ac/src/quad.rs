//! Adaptive quadrature used by the geometry and constants computations.
//!
//! Plain adaptive Simpson with Richardson correction. The integrands in this
//! crate are smooth after the neck substitution, so this converges quickly;
//! the recursion depth cap turns pathological inputs into a reported error
//! instead of a hang.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 60;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !flm.is_finite() || !frm.is_finite() {
        return Err(Error::Numerical(format!(
            "integrand not finite near [{lm}, {rm}]"
        )));
    }
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Numerical(format!(
            "adaptive quadrature did not converge on [{a}, {b}] (residual {delta:.3e})"
        )));
    }
    let half_tol = 0.5 * tol;
    Ok(step(f, a, m, fa, flm, fm, left, half_tol, depth + 1)?
        + step(f, m, b, fm, frm, fb, right, half_tol, depth + 1)?)
}

/// Number of equal panels the interval is split into before the adaptive
/// recursion starts; guards against features the three initial samples of a
/// single panel would miss entirely.
const INITIAL_PANELS: usize = 16;

/// Integrate `f` over `[a, b]` to the given absolute tolerance.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Argument("quadrature limits must be finite".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let panel_tol = tol / INITIAL_PANELS as f64;
    let width = (b - a) / INITIAL_PANELS as f64;
    let mut total = 0.0;
    for i in 0..INITIAL_PANELS {
        let lo = a + i as f64 * width;
        let hi = if i + 1 == INITIAL_PANELS {
            b
        } else {
            a + (i + 1) as f64 * width
        };
        let m = 0.5 * (lo + hi);
        let (fa, fm, fb) = (f(lo), f(m), f(hi));
        if !fa.is_finite() || !fm.is_finite() || !fb.is_finite() {
            return Err(Error::Numerical(
                "integrand not finite at initial nodes".into(),
            ));
        }
        let whole = simpson(fa, fm, fb, hi - lo);
        total += step(&f, lo, hi, fa, fm, fb, whole, panel_tol, 0)?;
    }
    Ok(total)
}
