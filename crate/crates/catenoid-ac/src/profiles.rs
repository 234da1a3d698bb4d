//! The heteroclinic transition profile `w`, the cubic nonlinearity, the
//! k-layer ansatz, and the piecewise-exponential weight against which all
//! residuals are measured.

use crate::error::{Error, Result};
use crate::geometry::{r_of_y, CatenoidParams};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Beyond this the closed forms underflow and the exponential tail is used.
const TAIL_CUTOFF: f64 = 350.0;

/// Transition profile `w(x) = tanh(x / sqrt(2))`, the heteroclinic connecting
/// the phases -1 and +1.
pub fn w(x: f64) -> f64 {
    if x.abs() > TAIL_CUTOFF {
        // +-1 -+ 2 e^{-sqrt(2)|x|}; indistinguishable from tanh in f64 but
        // never overflows intermediate exponentials.
        x.signum() * (1.0 - 2.0 * (-SQRT_2 * x.abs()).exp())
    } else {
        (x / SQRT_2).tanh()
    }
}

/// `w'(x) = (1 - w^2)/sqrt(2)`, evaluated through sech so the exponential
/// tail survives where `1 - w^2` would round to zero.
pub fn w1(x: f64) -> f64 {
    if x.abs() > TAIL_CUTOFF {
        2.0 * SQRT_2 * (-SQRT_2 * x.abs()).exp()
    } else {
        let s = 1.0 / (x / SQRT_2).cosh();
        s * s / SQRT_2
    }
}

/// `w''(x) = -w (1 - w^2)`.
pub fn w2(x: f64) -> f64 {
    if x.abs() > TAIL_CUTOFF {
        -x.signum() * 4.0 * (-SQRT_2 * x.abs()).exp()
    } else {
        let u = x / SQRT_2;
        let s = 1.0 / u.cosh();
        -u.tanh() * s * s
    }
}

/// `w'''(x) = (3 w^2 - 1)(1 - w^2)/sqrt(2)`.
pub fn w3(x: f64) -> f64 {
    if x.abs() > TAIL_CUTOFF {
        4.0 * SQRT_2 * (-SQRT_2 * x.abs()).exp()
    } else {
        let u = x / SQRT_2;
        let s2 = 1.0 / (u.cosh() * u.cosh());
        let t2 = u.tanh() * u.tanh();
        (3.0 * t2 - 1.0) * s2 / SQRT_2
    }
}

/// The bistable nonlinearity `f(v) = v (1 - v^2)`.
pub fn f(v: f64) -> f64 {
    v * (1.0 - v * v)
}

/// `f'(v) = 1 - 3 v^2`.
pub fn fprime(v: f64) -> f64 {
    1.0 - 3.0 * v * v
}

/// Quadratic remainder `f(z + psi) - f(z) - f'(z) psi = -3 z psi^2 - psi^3`,
/// evaluated through the exact cubic identity so small `psi` loses no digits.
pub fn nonlinear_remainder(psi: f64, z: f64) -> f64 {
    -psi * psi * (3.0 * z + psi)
}

/// An ordered stack of `k` interfaces with the additive parity constant of
/// the alternating ansatz.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    rho: Vec<f64>,
    parity_constant: f64,
}

impl LayerState {
    /// Requires at least one radius, strictly increasing, with the innermost
    /// layer beyond the neck.
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if rho.is_empty() {
            return Err(Error::Argument("layer state needs k >= 1 radii".into()));
        }
        if !(rho[0] > 1.0) {
            return Err(Error::State(format!(
                "innermost layer must satisfy rho_1 > 1, got {}",
                rho[0]
            )));
        }
        if rho.windows(2).any(|p| !(p[0] < p[1])) {
            return Err(Error::State(format!("layer radii not increasing: {rho:?}")));
        }
        let parity_constant = if rho.len().is_multiple_of(2) {
            -1.0
        } else {
            0.0
        };
        Ok(Self {
            rho,
            parity_constant,
        })
    }

    pub fn k(&self) -> usize {
        self.rho.len()
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// -1/2 (1 + (-1)^k): -1 for even k, 0 for odd k.
    pub fn parity_constant(&self) -> f64 {
        self.parity_constant
    }

    /// Limit of the ansatz as r -> infinity: +1 for odd k, -1 for even k.
    /// (Below the innermost layer the limit is -1 for either parity.)
    pub fn far_field_value(&self) -> f64 {
        if self.k().is_multiple_of(2) {
            -1.0
        } else {
            1.0
        }
    }
}

/// Alternating multi-layer ansatz
/// `z(r) = sum_j (-1)^{j+1} w(r - rho_j) + parity_constant`.
pub fn ansatz_z(r: f64, layers: &LayerState) -> f64 {
    let mut z = layers.parity_constant;
    let mut sign = 1.0;
    for &rho_j in layers.rho() {
        z += sign * w(r - rho_j);
        sign = -sign;
    }
    z
}

/// Decay rate and leading-order layer locations defining the spatial weight.
///
/// `sigma` must lie in (0, sqrt(2)); the interaction diagnostics that lean on
/// the reduced Toda derivation additionally want sigma > sqrt(2)/2, which the
/// callers select themselves.
pub struct WeightSpec {
    sigma: f64,
    rho0_eval: Box<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync>,
}

impl WeightSpec {
    pub fn new(
        sigma: f64,
        rho0_eval: Box<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync>,
    ) -> Result<Self> {
        if !(sigma > 0.0 && sigma < SQRT_2) {
            return Err(Error::Argument(format!(
                "weight rate must satisfy 0 < sigma < sqrt(2), got {sigma}"
            )));
        }
        Ok(Self { sigma, rho0_eval })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn rho0(&self, t: f64) -> Result<Vec<f64>> {
        (self.rho0_eval)(t)
    }
}

/// Piecewise-exponential weight centered between consecutive leading-order
/// layer positions.
///
/// Within the branch containing layer j the weight is
/// `exp(sigma (rho0_{j-1} - r)) + exp(sigma (r - rho0_{j+1}))` with the
/// conventions `rho0_0 = -inf`, `rho0_{k+1} = +inf`; branches are selected by
/// midpoint comparison with ties going to the lower branch. Needs k >= 2,
/// otherwise both exponentials of the only branch are void.
pub fn weight_phi(t: f64, r: f64, spec: &WeightSpec) -> Result<f64> {
    let rho0 = spec.rho0(t)?;
    phi_from_rho0(r, spec.sigma, &rho0)
}

pub(crate) fn phi_from_rho0(r: f64, sigma: f64, rho0: &[f64]) -> Result<f64> {
    let k = rho0.len();
    if k < 2 {
        return Err(Error::Argument(
            "piecewise weight is degenerate for k < 2 layers".into(),
        ));
    }
    if rho0.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(Error::State(format!(
            "leading-order layer positions not ordered: {rho0:?}"
        )));
    }
    if !(r >= 1.0) {
        return Err(Error::Domain(format!("weight defined for r >= 1, got {r}")));
    }
    // 0-based branch index: number of midpoints strictly below r.
    let branch = (0..k - 1)
        .take_while(|&i| 0.5 * (rho0[i] + rho0[i + 1]) < r)
        .count();
    let mut phi = 0.0;
    if branch >= 1 {
        phi += (sigma * (rho0[branch - 1] - r)).exp();
    }
    if branch + 1 < k {
        phi += (sigma * (r - rho0[branch + 1])).exp();
    }
    Ok(phi)
}

/// Discrete weighted sup norm `max_i |u_i| / Phi(t, r(y_i))` over grid nodes.
pub fn weighted_norm(
    values: &[f64],
    ys: &[f64],
    t: f64,
    spec: &WeightSpec,
    p: &CatenoidParams,
) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Argument("weighted norm of an empty grid".into()));
    }
    if values.len() != ys.len() {
        return Err(Error::Argument(format!(
            "value/grid length mismatch: {} vs {}",
            values.len(),
            ys.len()
        )));
    }
    let rho0 = spec.rho0(t)?;
    let mut sup = 0.0f64;
    for (&u, &y) in values.iter().zip(ys) {
        let r = r_of_y(y, p)?;
        let phi = phi_from_rho0(r, spec.sigma, &rho0)?;
        sup = sup.max(u.abs() / phi);
    }
    Ok(sup)
}
