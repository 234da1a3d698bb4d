//! Method-of-lines evolution of the reduced semilinear equation in the neck
//! coordinate: conservative second-order discretization of the radial
//! operator, implicit theta-weighted diffusion with explicit reaction, and a
//! reflection ghost node at the neck.
//!
//! The neck is the natural left boundary: the divergence-form coefficients
//! are smooth at y = 0, and the symmetry u(t, r, F) = u(t, r, -F) of the
//! two-sheeted catenoid is exactly an even reflection there.

use crate::error::{Error, Result};
use crate::geometry::{divergence_form_coeffs, r_of_y, CatenoidParams};
use crate::profiles::{ansatz_z, f, LayerState};

/// Uniform grid on [0, y_max] with y_0 = 0.
#[derive(Debug, Clone)]
pub struct Grid1D {
    y_max: f64,
    n: usize,
    h: f64,
    ys: Vec<f64>,
}

impl Grid1D {
    pub fn new(y_max: f64, n: usize) -> Result<Self> {
        if !(y_max > 0.0) {
            return Err(Error::Argument(format!("need y_max > 0, got {y_max}")));
        }
        if n < 8 {
            return Err(Error::Argument(format!("need at least 8 nodes, got {n}")));
        }
        let h = y_max / (n - 1) as f64;
        let ys = (0..n).map(|i| i as f64 * h).collect();
        Ok(Self { y_max, n, h, ys })
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }
}

/// Grid samples of the solution at one time.
#[derive(Debug, Clone)]
pub struct Field {
    pub t: f64,
    pub values: Vec<f64>,
}

/// Far-field Dirichlet data at y_max.
pub enum FarFieldBc {
    /// Pin the boundary to a constant (the parity-determined phase).
    FixedConstant(f64),
    /// Track a time-dependent value, e.g. the ansatz at the boundary radius.
    Tracking(Box<dyn Fn(f64) -> Result<f64> + Send + Sync>),
}

impl FarFieldBc {
    fn value_at(&self, t: f64) -> Result<f64> {
        match self {
            FarFieldBc::FixedConstant(c) => Ok(*c),
            FarFieldBc::Tracking(f) => f(t),
        }
    }
}

pub struct SolverConfig {
    /// Implicitness weight in [1/2, 1]; 1/2 is second order in time.
    pub theta: f64,
    pub dt: f64,
    pub far_field: FarFieldBc,
    /// Disable to run the pure-diffusion flow.
    pub reaction_on: bool,
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!(
                "theta must lie in [1/2, 1], got {}",
                self.theta
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("need dt > 0, got {}", self.dt)));
        }
        Ok(())
    }
}

/// The discrete radial operator in flux form:
/// `(N-1)^2 / a_i * (b_{i+1/2}(v_{i+1}-v_i) - b_{i-1/2}(v_i-v_{i-1})) / h^2`,
/// with the even reflection v_{-1} = v_1 at the neck. Exact on constants.
pub struct SpatialOperator {
    /// (N-1)^2 / (h^2 a_i)
    coef: Vec<f64>,
    /// b at the half nodes, index i holds b_{i+1/2}.
    b_half: Vec<f64>,
}

impl SpatialOperator {
    pub fn new(grid: &Grid1D, p: &CatenoidParams) -> Result<Self> {
        if grid.n() < 3 {
            return Err(Error::Argument("operator needs at least 3 nodes".into()));
        }
        let scale = p.nm1() * p.nm1() / (grid.h() * grid.h());
        let mut coef = Vec::with_capacity(grid.n());
        for &y in grid.ys() {
            let (a, _) = divergence_form_coeffs(y, p)?;
            coef.push(scale / a);
        }
        // b is smooth, so the half-node values are evaluated analytically
        // rather than averaged.
        let mut b_half = Vec::with_capacity(grid.n() - 1);
        for i in 0..grid.n() - 1 {
            let y_half = (i as f64 + 0.5) * grid.h();
            let (_, b) = divergence_form_coeffs(y_half, p)?;
            b_half.push(b);
        }
        Ok(Self { coef, b_half })
    }

    /// Apply to grid values. The Dirichlet row at y_max is left as zero; the
    /// stepper overwrites it with boundary data.
    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        let n = self.coef.len();
        if values.len() != n {
            return Err(Error::Argument(format!(
                "field has {} values on a grid of {n} nodes",
                values.len()
            )));
        }
        let mut out = vec![0.0; n];
        // Neck row: v_{-1} = v_1 and b_{-1/2} = b_{1/2} by evenness.
        out[0] = self.coef[0] * 2.0 * self.b_half[0] * (values[1] - values[0]);
        for i in 1..n - 1 {
            out[i] = self.coef[i]
                * (self.b_half[i] * (values[i + 1] - values[i])
                    - self.b_half[i - 1] * (values[i] - values[i - 1]));
        }
        Ok(out)
    }
}

/// One-off evaluation of the spatial operator on a field.
pub fn apply_spatial_operator(
    field: &Field,
    grid: &Grid1D,
    p: &CatenoidParams,
) -> Result<Vec<f64>> {
    SpatialOperator::new(grid, p)?.apply(&field.values)
}

/// Prefactored Thomas solve for a fixed tridiagonal matrix.
struct Tridiag {
    lower: Vec<f64>,
    cprime: Vec<f64>,
    inv_m: Vec<f64>,
}

impl Tridiag {
    fn factor(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut cprime = vec![0.0; n - 1];
        let mut inv_m = vec![0.0; n];
        let mut m = diag[0];
        for i in 0..n {
            if i > 0 {
                m = diag[i] - lower[i - 1] * cprime[i - 1];
            }
            if !(m.abs() > f64::MIN_POSITIVE) || !m.is_finite() {
                return Err(Error::Numerical(format!(
                    "tridiagonal pivot vanished at row {i}"
                )));
            }
            inv_m[i] = 1.0 / m;
            if i < n - 1 {
                cprime[i] = upper[i] * inv_m[i];
            }
        }
        Ok(Self {
            lower: lower.to_vec(),
            cprime,
            inv_m,
        })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut x = vec![0.0; n];
        x[0] = rhs[0] * self.inv_m[0];
        for i in 1..n {
            x[i] = (rhs[i] - self.lower[i - 1] * x[i - 1]) * self.inv_m[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.cprime[i] * x[i + 1];
        }
        x
    }
}

/// Theta-scheme stepper with the matrix `(I - theta dt L)` factored once.
pub struct ThetaStepper {
    op: SpatialOperator,
    solver: Tridiag,
    theta: f64,
    dt: f64,
}

impl ThetaStepper {
    pub fn new(grid: &Grid1D, p: &CatenoidParams, theta: f64, dt: f64) -> Result<Self> {
        let op = SpatialOperator::new(grid, p)?;
        let n = grid.n();
        let s = theta * dt;
        let mut lower = vec![0.0; n - 1];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n - 1];
        let neck = 2.0 * op.coef[0] * op.b_half[0];
        diag[0] = 1.0 + s * neck;
        upper[0] = -s * neck;
        for i in 1..n - 1 {
            let left = op.coef[i] * op.b_half[i - 1];
            let right = op.coef[i] * op.b_half[i];
            lower[i - 1] = -s * left;
            diag[i] = 1.0 + s * (left + right);
            upper[i] = -s * right;
        }
        // Dirichlet row at y_max.
        lower[n - 2] = 0.0;
        diag[n - 1] = 1.0;
        let solver = Tridiag::factor(&lower, &diag, &upper)?;
        Ok(Self {
            op,
            solver,
            theta,
            dt,
        })
    }

    /// Advance one step: solve
    /// `(I - theta dt L) v_new = v + dt ((1-theta) L v + f(v))`
    /// with the far-field row pinned to the boundary value at the new time.
    pub fn step(&self, field: &Field, cfg: &SolverConfig) -> Result<Field> {
        let t_new = field.t + self.dt;
        let lv = self.op.apply(&field.values)?;
        let n = field.values.len();
        let mut rhs = vec![0.0; n];
        let explicit = (1.0 - self.theta) * self.dt;
        for i in 0..n - 1 {
            let reaction = if cfg.reaction_on {
                f(field.values[i])
            } else {
                0.0
            };
            rhs[i] = field.values[i] + explicit * lv[i] + self.dt * reaction;
        }
        rhs[n - 1] = cfg.far_field.value_at(t_new)?;
        Ok(Field {
            t: t_new,
            values: self.solver.solve(&rhs),
        })
    }
}

/// Single theta-scheme step; builds the stepper on the fly. Loops should use
/// [`ThetaStepper`] or [`evolve`] so the factorization is reused.
pub fn step(field: &Field, cfg: &SolverConfig, grid: &Grid1D, p: &CatenoidParams) -> Result<Field> {
    cfg.validate()?;
    ThetaStepper::new(grid, p, cfg.theta, cfg.dt)?.step(field, cfg)
}

/// Sample the multi-layer ansatz on the grid at time `t0`.
///
/// Fails if the outermost layer sits within 10 radius units of the domain
/// boundary, where its tail would touch the Dirichlet row.
pub fn initialize_from_ansatz(
    grid: &Grid1D,
    t0: f64,
    layers: &LayerState,
    p: &CatenoidParams,
) -> Result<Field> {
    let r_max = r_of_y(grid.y_max(), p)?;
    let rho_k = *layers.rho().last().unwrap();
    if r_max < rho_k + 10.0 {
        return Err(Error::Config(format!(
            "domain too small: r(y_max) = {r_max:.3} but outermost layer is at {rho_k:.3} \
             (need 10 radius units of clearance)"
        )));
    }
    let mut values = Vec::with_capacity(grid.n());
    for &y in grid.ys() {
        values.push(ansatz_z(r_of_y(y, p)?, layers));
    }
    Ok(Field { t: t0, values })
}

/// Diagnostic envelope; beyond it the run is reported as blown up.
const ENVELOPE: f64 = 1.5;

/// March the field from its own time to `t_target`, invoking `observer` on
/// the initial state, every `snapshot_every`-th step, and on the final
/// state. The last step is shortened to land exactly on `t_target`.
pub fn evolve<F>(
    field: Field,
    t_target: f64,
    cfg: &SolverConfig,
    grid: &Grid1D,
    p: &CatenoidParams,
    snapshot_every: usize,
    mut observer: F,
) -> Result<Field>
where
    F: FnMut(&Field) -> Result<()>,
{
    cfg.validate()?;
    if snapshot_every == 0 {
        return Err(Error::Argument("snapshot_every must be at least 1".into()));
    }
    if t_target < field.t {
        return Err(Error::Argument(format!(
            "backward evolution is not supported (field at t = {}, target {t_target})",
            field.t
        )));
    }
    if t_target == field.t {
        observer(&field)?;
        return Ok(field);
    }

    let span = t_target - field.t;
    let full_steps = (span / cfg.dt + 1e-9).floor() as usize;
    let remainder = span - full_steps as f64 * cfg.dt;
    let t0 = field.t;

    let stepper = ThetaStepper::new(grid, p, cfg.theta, cfg.dt)?;
    observer(&field)?;
    let mut current = field;
    let check_envelope = |f: &Field| -> Result<()> {
        let max_abs = f.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if max_abs > ENVELOPE {
            return Err(Error::BlowUp { t: f.t, max_abs });
        }
        Ok(())
    };

    for i in 0..full_steps {
        current = stepper.step(&current, cfg)?;
        // Pin the time arithmetically to avoid accumulated drift.
        current.t = t0 + (i + 1) as f64 * cfg.dt;
        check_envelope(&current)?;
        let last = i + 1 == full_steps && remainder <= 1e-9 * cfg.dt;
        if last {
            current.t = t_target;
            observer(&current)?;
            return Ok(current);
        }
        if (i + 1) % snapshot_every == 0 {
            observer(&current)?;
        }
    }
    // Final partial step.
    let tail = ThetaStepper::new(grid, p, cfg.theta, remainder)?;
    current = tail.step(&current, cfg)?;
    current.t = t_target;
    check_envelope(&current)?;
    observer(&current)?;
    Ok(current)
}
