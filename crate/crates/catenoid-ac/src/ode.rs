//! Embedded Dormand-Prince 5(4) integrator with cubic-Hermite dense output.
//!
//! Both reduced flows of this crate (the gap profile and the interface
//! system) are integrated with this stepper: it runs in either time
//! direction, stores the right-hand side at every accepted step, and lands
//! exactly on the requested end time. The per-step `check` hook lets callers
//! enforce state invariants (layer ordering) and report the first failure
//! time.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Cap on |h| relative to max(|t|, 1); keeps dense output accurate when
    /// the solution turns logarithmic and error control alone would take
    /// huge steps.
    pub max_step_fraction: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step_fraction: 0.05,
            max_steps: 2_000_000,
        }
    }
}

/// Accepted-step samples of a trajectory: times, states, and the right-hand
/// side at each sample (exact derivatives, not differences).
#[derive(Debug, Clone)]
pub(crate) struct OdeSamples {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub derivs: Vec<Vec<f64>>,
}

/// Cubic Hermite value and derivative on one segment.
pub(crate) fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> (f64, f64) {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let value = h00 * y0 + h * (h10 * d0 + h11 * d1) + h01 * y1;
    let dh00 = 6.0 * s * (s - 1.0);
    let dh10 = (1.0 - s) * (1.0 - 3.0 * s);
    let dh01 = -dh00;
    let dh11 = s * (3.0 * s - 2.0);
    let deriv = (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1;
    (value, deriv)
}

impl OdeSamples {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    fn locate(&self, t: f64) -> Result<usize> {
        let times = &self.times;
        let n = times.len();
        let increasing = times[n - 1] >= times[0];
        let (lo, hi) = if increasing {
            (times[0], times[n - 1])
        } else {
            (times[n - 1], times[0])
        };
        if !(t >= lo && t <= hi) {
            return Err(Error::Argument(format!(
                "t = {t} outside the sampled window [{lo}, {hi}]"
            )));
        }
        // Index of the segment [i, i+1] containing t.
        let idx = times.partition_point(|&s| if increasing { s <= t } else { s >= t });
        Ok(idx.clamp(1, n - 1) - 1)
    }

    /// Dense output: state and derivative at `t` inside the sampled window.
    pub fn eval_with_deriv(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let i = self.locate(t)?;
        let dim = self.dim();
        let mut value = vec![0.0; dim];
        let mut deriv = vec![0.0; dim];
        for c in 0..dim {
            let (v, d) = hermite(
                self.times[i],
                self.times[i + 1],
                self.states[i][c],
                self.states[i + 1][c],
                self.derivs[i][c],
                self.derivs[i + 1][c],
                t,
            );
            value[c] = v;
            deriv[c] = d;
        }
        Ok((value, deriv))
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.eval_with_deriv(t)?.0)
    }
}

// Dormand-Prince 5(4) tableau.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const B_LOW: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `y' = rhs(t, y)` from `t0` to `t_end` (either direction).
///
/// `check` runs on every accepted step; its error aborts the integration
/// and is reported with the failing time.
pub(crate) fn solve<F, C>(
    rhs: F,
    t0: f64,
    t_end: f64,
    y0: &[f64],
    opts: &OdeOptions,
    mut check: C,
) -> Result<OdeSamples>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
    C: FnMut(f64, &[f64]) -> Result<()>,
{
    if t_end == t0 {
        let d = rhs(t0, y0)?;
        return Ok(OdeSamples {
            times: vec![t0],
            states: vec![y0.to_vec()],
            derivs: vec![d],
        });
    }
    let dir = (t_end - t0).signum();
    let dim = y0.len();
    let h_cap = |t: f64| opts.max_step_fraction * t.abs().max(1.0);

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = rhs(t, &y)?;
    check(t, &y)?;

    let mut samples = OdeSamples {
        times: vec![t],
        states: vec![y.clone()],
        derivs: vec![k1.clone()],
    };

    let mut h = dir
        * (1e-3 * t0.abs().max(1.0))
            .min(h_cap(t0))
            .min((t_end - t0).abs());
    let combine = |y: &[f64], parts: &[(&[f64], f64)], h: f64| -> Vec<f64> {
        let mut out = y.to_vec();
        for (stage, coef) in parts {
            for i in 0..y.len() {
                out[i] += h * coef * stage[i];
            }
        }
        out
    };

    for _ in 0..opts.max_steps {
        if (t_end - t) * dir <= 0.0 {
            return Ok(samples);
        }
        let final_step = (t_end - t).abs() <= h.abs();
        if final_step {
            h = t_end - t;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Numerical(format!("step size underflow at t = {t}")));
        }

        let k2 = rhs(t + h / 5.0, &combine(&y, &[(&k1, A2[0])], h))?;
        let k3 = rhs(
            t + 3.0 * h / 10.0,
            &combine(&y, &[(&k1, A3[0]), (&k2, A3[1])], h),
        )?;
        let k4 = rhs(
            t + 4.0 * h / 5.0,
            &combine(&y, &[(&k1, A4[0]), (&k2, A4[1]), (&k3, A4[2])], h),
        )?;
        let k5 = rhs(
            t + 8.0 * h / 9.0,
            &combine(
                &y,
                &[(&k1, A5[0]), (&k2, A5[1]), (&k3, A5[2]), (&k4, A5[3])],
                h,
            ),
        )?;
        let k6 = rhs(
            t + h,
            &combine(
                &y,
                &[
                    (&k1, A6[0]),
                    (&k2, A6[1]),
                    (&k3, A6[2]),
                    (&k4, A6[3]),
                    (&k5, A6[4]),
                ],
                h,
            ),
        )?;
        let y_new = combine(
            &y,
            &[
                (&k1, B[0]),
                (&k3, B[2]),
                (&k4, B[3]),
                (&k5, B[4]),
                (&k6, B[5]),
            ],
            h,
        );
        // FSAL: the last stage is the derivative at the new point.
        let k7 = rhs(t + h, &y_new)?;

        let mut err_sq = 0.0;
        for i in 0..dim {
            let low = B_LOW[0] * k1[i]
                + B_LOW[2] * k3[i]
                + B_LOW[3] * k4[i]
                + B_LOW[4] * k5[i]
                + B_LOW[5] * k6[i]
                + B_LOW[6] * k7[i];
            let e = h
                * (B[0] * k1[i] + B[2] * k3[i] + B[3] * k4[i] + B[4] * k5[i] + B[5] * k6[i] - low);
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / dim as f64).sqrt();

        if err <= 1.0 {
            // Pin the endpoint exactly; t + (t_end - t) can round 1 ulp
            // short and would then trip the underflow guard.
            t = if final_step { t_end } else { t + h };
            y = y_new;
            k1 = k7;
            check(t, &y).map_err(|e| match e {
                Error::Integration { .. } => e,
                other => Error::Integration {
                    t,
                    reason: other.to_string(),
                },
            })?;
            samples.times.push(t);
            samples.states.push(y.clone());
            samples.derivs.push(k1.clone());
        }

        let factor = if err.is_finite() && err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else if err == 0.0 {
            5.0
        } else {
            0.2
        };
        h = (h * factor).clamp(-h_cap(t), h_cap(t));
        if h == 0.0 {
            h = dir * 1e-12 * t.abs().max(1.0);
        }
    }
    Err(Error::Numerical(format!(
        "integration exceeded {} steps before reaching t = {t_end}",
        opts.max_steps
    )))
}
