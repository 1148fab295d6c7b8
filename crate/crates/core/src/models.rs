//! The oscillator models as explicit first-order vector fields.
//!
//! Every damped system comes paired with an anti-damped auxiliary partner so
//! that the combined four-dimensional flow conserves phase volume. The pair
//! state is ordered `[x, xdot, y, ydot]` throughout; the auxiliary block never
//! feeds back into the physical one.

use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    /// The underdamped closed form needs `big_omega^2 > lambda^2`.
    #[error("overdamped parameters: big_omega^2 = {big_omega_sq} <= lambda^2 = {lambda_sq}")]
    Overdamped { big_omega_sq: f64, lambda_sq: f64 },
}

/// All model constants in one place. Unused fields are simply ignored by
/// systems that do not reference them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Nonlinearity strength of the Van der Pol / Liénard damping term.
    pub epsilon: f64,
    /// Natural angular frequency (must be positive).
    pub omega: f64,
    /// Bookkeeping coefficient on the x^2 damping term (1 recovers Van der Pol).
    pub alpha: f64,
    /// Coefficient on the y^2 term of the symmetric doubled system.
    pub beta: f64,
    /// Damping rate of the damped simple harmonic oscillator.
    pub lambda: f64,
    /// Stiffness frequency of the damped simple harmonic oscillator.
    pub big_omega: f64,
    /// Parametric forcing amplitude.
    pub f1: f64,
    /// Parametric forcing frequency.
    pub gamma: f64,
    /// External forcing amplitude.
    pub f2: f64,
    /// External forcing frequency.
    pub omega_ext: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            omega: 1.0,
            alpha: 1.0,
            beta: 0.0,
            lambda: 0.0,
            big_omega: 1.0,
            f1: 0.0,
            gamma: 0.0,
            f2: 0.0,
            omega_ext: 0.0,
        }
    }
}

impl SystemParams {
    /// Van der Pol parameters with `alpha = 1`, no forcing.
    pub fn vdp(epsilon: f64, omega: f64) -> Self {
        Self {
            epsilon,
            omega,
            ..Self::default()
        }
    }

    /// Damped-SHO parameters.
    pub fn dsho(lambda: f64, big_omega: f64) -> Self {
        Self {
            lambda,
            big_omega,
            ..Self::default()
        }
    }

    /// Frequency of the underdamped closed form, `sqrt(big_omega^2 - lambda^2)`.
    pub fn underdamped_omega(&self) -> Result<f64, ModelError> {
        let w2 = self.big_omega * self.big_omega - self.lambda * self.lambda;
        if w2 <= 0.0 {
            return Err(ModelError::Overdamped {
                big_omega_sq: self.big_omega * self.big_omega,
                lambda_sq: self.lambda * self.lambda,
            });
        }
        Ok(w2.sqrt())
    }
}

/// Position/velocity state of a single second-order system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State2 {
    pub x: f64,
    pub v: f64,
}

impl State2 {
    pub fn new(x: f64, v: f64) -> Self {
        Self { x, v }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.v]
    }

    pub fn from_array(a: [f64; 2]) -> Self {
        Self { x: a[0], v: a[1] }
    }
}

/// Canonical state `(x, y, p_x, p_y)` of a doubled system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState4 {
    pub x: f64,
    pub y: f64,
    pub px: f64,
    pub py: f64,
}

impl PhaseState4 {
    pub fn new(x: f64, y: f64, px: f64, py: f64) -> Self {
        Self { x, y, px, py }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.px, self.py]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            x: a[0],
            y: a[1],
            px: a[2],
            py: a[3],
        }
    }
}

/// Scalar function of one variable with an optional analytic derivative.
///
/// When no derivative is supplied, a central difference with step
/// `1e-6 * max(1, |x|)` stands in. Used for the damping profile `f(x)` of
/// Liénard systems and for the pieces of its gauge split.
#[derive(Clone)]
pub struct ScalarFn {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    df: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl ScalarFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            df: None,
        }
    }

    pub fn with_derivative(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Arc::new(f),
            df: Some(Arc::new(df)),
        }
    }

    /// The zero function.
    pub fn zero() -> Self {
        Self::with_derivative(|_| 0.0, |_| 0.0)
    }

    /// The constant function `x -> c`.
    pub fn constant(c: f64) -> Self {
        Self::with_derivative(move |_| c, |_| 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.df {
            Some(df) => df(x),
            None => {
                let h = 1e-6 * x.abs().max(1.0);
                ((self.f)(x + h) - (self.f)(x - h)) / (2.0 * h)
            }
        }
    }
}

impl std::fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarFn")
            .field("analytic_derivative", &self.df.is_some())
            .finish()
    }
}

/// Damped SHO `xddot = -2 lambda xdot - big_omega^2 x`, or its anti-damped
/// partner (`+2 lambda xdot`) when `anti` is set.
pub fn dsho_rhs(s: State2, p: &SystemParams, anti: bool) -> State2 {
    let sign = if anti { 1.0 } else { -1.0 };
    State2 {
        x: s.v,
        v: sign * 2.0 * p.lambda * s.v - p.big_omega * p.big_omega * s.x,
    }
}

/// Exact underdamped DSHO solution `(x(t), xdot(t))` for the stated initial data.
///
/// Errors when `big_omega^2 <= lambda^2`; only the underdamped branch exists here.
pub fn dsho_closed_form(
    p: &SystemParams,
    x0: f64,
    v0: f64,
    t: f64,
) -> Result<(f64, f64), ModelError> {
    let w = p.underdamped_omega()?;
    let l = p.lambda;
    let envelope = (-l * t).exp();
    let c = x0;
    let s = (v0 + l * x0) / w;
    let (sin, cos) = (w * t).sin_cos();
    let x = envelope * (c * cos + s * sin);
    let v = envelope * (-l * (c * cos + s * sin) + w * (-c * sin + s * cos));
    Ok((x, v))
}

/// Van der Pol damping profile `epsilon (alpha x^2 - 1)`.
fn vdp_damping(x: f64, p: &SystemParams) -> f64 {
    p.epsilon * (p.alpha * x * x - 1.0)
}

/// Physical Van der Pol block only: `xddot = -eps(alpha x^2 - 1) xdot - omega^2 x`.
pub fn vdp_rhs(s: [f64; 2], p: &SystemParams) -> [f64; 2] {
    let [x, v] = s;
    [v, -vdp_damping(x, p) * v - p.omega * p.omega * x]
}

/// Van der Pol plus its anti-damped auxiliary partner, coupled unidirectionally:
/// the x-block never sees `(y, ydot)`.
pub fn vdp_pair_rhs(s: [f64; 4], p: &SystemParams) -> [f64; 4] {
    let [x, xdot, y, ydot] = s;
    let g = vdp_damping(x, p);
    let w2 = p.omega * p.omega;
    [xdot, -g * xdot - w2 * x, ydot, g * ydot - w2 * y]
}

/// Symmetric doubled system with damping profile `eps (alpha x^2 + beta y^2 - 1)`
/// and opposite signs on the two blocks. Its vector field is divergence-free.
pub fn symmetric_ab_rhs(s: [f64; 4], p: &SystemParams) -> [f64; 4] {
    let [x, xdot, y, ydot] = s;
    let g = p.epsilon * (p.alpha * x * x + p.beta * y * y - 1.0);
    let w2 = p.omega * p.omega;
    [xdot, -g * xdot - w2 * x, ydot, g * ydot - w2 * y]
}

/// Externally and parametrically forced Van der Pol pair: stiffness gains
/// `F1 cos(gamma t)` and both blocks are driven by `F2 cos(omega_ext t)`.
pub fn forced_vdp_pair_rhs(s: [f64; 4], t: f64, p: &SystemParams) -> [f64; 4] {
    let [x, xdot, y, ydot] = s;
    let g = vdp_damping(x, p);
    let stiffness = p.omega * p.omega + p.f1 * (p.gamma * t).cos();
    let drive = p.f2 * (p.omega_ext * t).cos();
    [
        xdot,
        -g * xdot - stiffness * x + drive,
        ydot,
        g * ydot - stiffness * y + drive,
    ]
}

/// Liénard pair `xddot = -eps f(x) xdot - omega^2 x` with the sign-flipped
/// auxiliary equation in `y`. `f(x) = x^2 - 1` recovers the Van der Pol pair.
pub fn lienard_pair_rhs(s: [f64; 4], p: &SystemParams, f: impl Fn(f64) -> f64) -> [f64; 4] {
    let [x, xdot, y, ydot] = s;
    let g = p.epsilon * f(x);
    let w2 = p.omega * p.omega;
    [xdot, -g * xdot - w2 * x, ydot, g * ydot - w2 * y]
}
