//! Hamiltonians for the doubled oscillator systems, with analytic canonical
//! vector fields and checks that the canonical flow reproduces the model ODEs.
//!
//! Every kind stores its own parameters. The canonical state is
//! `(x, y, p_x, p_y)`; for the time-dependent single-oscillator kind the
//! `(y, p_y)` block is carried along as zeros.
//!
//! # The kinds
//!
//! - `BatemanDual`: `H = p_x p_y + w^2 x y - lambda (p_x x - p_y y)` with
//!   `w^2 = big_omega^2 - lambda^2`, generating the damped oscillator in `x`
//!   and its anti-damped partner in `y`.
//! - `CaldirolaKanai`: `H = e^{-2 lambda t} p_x^2 / 2 + e^{2 lambda t}
//!   big_omega^2 x^2 / 2`, an oscillator whose mass grows exponentially. It
//!   arises from the dual form through a chain of canonical transformations
//!   generated by `F_a = x P_1 e^{lambda t} + y P_2 e^{-lambda t}`
//!   (exponential rescaling of the pair), `F_b = P_1' (Q_1 + Q_2)/sqrt(2) +
//!   P_2' (Q_1 - Q_2)/sqrt(2)` (rotation to sum/difference coordinates),
//!   `F_c = pi Q + lambda Q^2 / 2` (momentum shear), and
//!   `F_d = P xi e^{-lambda t}` (undoing the rescaling on the surviving
//!   oscillator). Only the endpoint is executable here;
//!   [`ck_transform_check`] certifies it against the damped-oscillator
//!   equation directly.
//! - `VdpFull`: the Legendre transform of the Van der Pol pair Lagrangian
//!   `L = xdot ydot - w^2 x y + (eps/2)[(y - alpha y x^2) xdot -
//!   (x - alpha x^3/3) ydot]`, including its `alpha^2 x^5 y` term.
//! - `VdpSimple`: the gauge-reduced form `H = p_x p_y + w^2 x y +
//!   eps f(x) y p_y` with `f(x) = alpha x^2 - 1`, conjugate to `p_y = xdot`,
//!   `p_x = ydot - eps f(x) y`. This is the kind the perturbation pipeline
//!   starts from.
//! - `ForcedVdp`: `VdpFull` plus `-(x + y) F2 cos(omega_ext t) +
//!   x y F1 cos(gamma t)`; not autonomous.
//! - `LienardGeneral`: for a damping profile split as `f = f1' + f2 - 1`,
//!   the Legendre transform of `L = xdot ydot + (eps/2)(xdot y - x ydot) -
//!   w^2 x y + eps [f1(x) ydot - f2(x) xdot y]` gives
//!
//!   ```text
//!   H = p_x p_y + (eps/2)(x p_x - y p_y) - eps f1 p_x + eps f2 y p_y
//!       + (w^2 - eps^2/4) x y + (eps^2/2) f1 y + (eps^2/2) f2 x y
//!       - eps^2 f1 f2 y.
//!   ```
//!
//!   The quadratic cross terms `(eps^2/2) f2 x y` and `-eps^2 f1 f2 y` are
//!   what the transform produces (specializing to the Van der Pol split
//!   `f1 = alpha x^3/6`, `f2 = alpha x^2/2` recovers `VdpFull` exactly),
//!   and [`verify_reduction`] certifies them against the Liénard pair
//!   equations.
//! - `AveragedQuadratic`: the equivalent linearization of `VdpFull` over an
//!   assumed cycle `x ~ A cos(w t)`, with `<x^2> = A^2/2` and vanishing odd
//!   moments hard-coded from that ansatz.

use crate::integrate::{integrate, IntegrateError, IntegratorConfig};
use crate::models::{
    dsho_rhs, forced_vdp_pair_rhs, lienard_pair_rhs, vdp_pair_rhs, PhaseState4, ScalarFn, State2,
    SystemParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error(
        "gauge split inconsistent: max |f1'(x) + f2(x) - 1 - f(x)| = {residual:.3e} at x = {at}"
    )]
    InconsistentSplit { residual: f64, at: f64 },
    #[error("forced kind needs a nonzero forcing amplitude")]
    MissingForcing,
    #[error("averaging amplitude must be nonnegative, got {0}")]
    NegativeAmplitude(f64),
    #[error("no reduction pairing between {kind} and {model}")]
    UnknownPairing {
        kind: &'static str,
        model: &'static str,
    },
    #[error("{kind} is not autonomous; use the power-balance check instead")]
    NotAutonomous { kind: &'static str },
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

/// A damping profile `f` written as `f(x) = f1'(x) + f2(x) - 1`.
///
/// The split is pure gauge: total time derivatives added to the Lagrangian
/// move weight between `f1` and `f2` without changing the equations of
/// motion. Construction fails if the pieces do not reassemble the target.
#[derive(Clone, Debug)]
pub struct GaugeSplit {
    pub f1: ScalarFn,
    pub f2: ScalarFn,
}

impl GaugeSplit {
    /// Check `f1' + f2 - 1 == target` on a sample grid (tolerance 1e-9).
    pub fn new(
        f1: ScalarFn,
        f2: ScalarFn,
        target: impl Fn(f64) -> f64,
    ) -> Result<Self, HamiltonianError> {
        let split = Self { f1, f2 };
        let mut worst = (0.0f64, 0.0f64);
        for k in 0..=60 {
            let x = -3.0 + 0.1 * k as f64;
            let r = (split.damping(x) - target(x)).abs();
            if r > worst.0 {
                worst = (r, x);
            }
        }
        if worst.0 > 1e-9 {
            return Err(HamiltonianError::InconsistentSplit {
                residual: worst.0,
                at: worst.1,
            });
        }
        Ok(split)
    }

    /// The reassembled damping profile `f1'(x) + f2(x) - 1`.
    pub fn damping(&self, x: f64) -> f64 {
        self.f1.derivative(x) + self.f2.eval(x) - 1.0
    }

    /// Van der Pol split with all weight on `f2`: `(f1, f2) = (0, x^2)`.
    pub fn vdp_momentum_free() -> Self {
        Self {
            f1: ScalarFn::zero(),
            f2: ScalarFn::with_derivative(|x| x * x, |x| 2.0 * x),
        }
    }

    /// Van der Pol split with all weight on `f1`: `(f1, f2) = (x^3/3, 0)`.
    pub fn vdp_potential_free() -> Self {
        Self {
            f1: ScalarFn::with_derivative(|x| x * x * x / 3.0, |x| x * x),
            f2: ScalarFn::zero(),
        }
    }
}

/// Coordinates of the doubled system in forward/reverse path form,
/// `q1 = (2x + y)/2`, `q2 = (2x - y)/2`. The physical limit is `q1 = q2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalleyCoordinates {
    pub q1: f64,
    pub q2: f64,
    pub q1dot: f64,
    pub q2dot: f64,
}

impl GalleyCoordinates {
    pub fn from_pair(x: f64, y: f64, xdot: f64, ydot: f64) -> Self {
        Self {
            q1: x + 0.5 * y,
            q2: x - 0.5 * y,
            q1dot: xdot + 0.5 * ydot,
            q2dot: xdot - 0.5 * ydot,
        }
    }

    pub fn to_pair(self) -> (f64, f64, f64, f64) {
        (
            0.5 * (self.q1 + self.q2),
            self.q1 - self.q2,
            0.5 * (self.q1dot + self.q2dot),
            self.q1dot - self.q2dot,
        )
    }
}

/// The gauge-reduced pair Lagrangian split into two free-oscillator terms and
/// the nonconservative coupling: `L = forward - reverse + coupling`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalleyDecomposition {
    /// `q1dot^2/2 - w^2 q1^2/2`, the forward-path oscillator.
    pub forward: f64,
    /// `q2dot^2/2 - w^2 q2^2/2`, the reverse-path oscillator (enters negated).
    pub reverse: f64,
    /// The coupling `N = -eps (q1 - q2) (q1dot + q2dot)/2 f((q1 + q2)/2)`
    /// carrying all nonconservative forces; it vanishes in the physical limit.
    pub coupling: f64,
}

impl GalleyDecomposition {
    /// Value of the full Lagrangian, `forward - reverse + coupling`.
    pub fn total(&self) -> f64 {
        self.forward - self.reverse + self.coupling
    }
}

/// Split the gauge-reduced Lagrangian at one state into conservative
/// forward/reverse oscillator terms plus the nonconservative coupling `N`.
pub fn galley_decompose(
    x: f64,
    y: f64,
    xdot: f64,
    ydot: f64,
    p: &SystemParams,
    f: impl Fn(f64) -> f64,
) -> GalleyDecomposition {
    let q = GalleyCoordinates::from_pair(x, y, xdot, ydot);
    let w2 = p.omega * p.omega;
    let forward = 0.5 * (q.q1dot * q.q1dot - w2 * q.q1 * q.q1);
    let reverse = 0.5 * (q.q2dot * q.q2dot - w2 * q.q2 * q.q2);
    let coupling = -p.epsilon * (q.q1 - q.q2) * 0.5 * (q.q1dot + q.q2dot) * f(0.5 * (q.q1 + q.q2));
    GalleyDecomposition {
        forward,
        reverse,
        coupling,
    }
}

/// Amplitude-dependent linearized damping coefficient `eps (alpha A^2/4 - 1)`.
/// Its root in `A` is the limit-cycle amplitude `2/sqrt(alpha)`.
pub fn equivalent_damping(amplitude: f64, alpha: f64, epsilon: f64) -> f64 {
    epsilon * (alpha * amplitude * amplitude / 4.0 - 1.0)
}

#[derive(Clone, Debug)]
pub enum Hamiltonian {
    BatemanDual(SystemParams),
    CaldirolaKanai(SystemParams),
    VdpFull(SystemParams),
    VdpSimple(SystemParams),
    ForcedVdp(SystemParams),
    LienardGeneral(SystemParams, GaugeSplit),
    AveragedQuadratic(SystemParams, f64),
}

/// Which model vector field a Hamiltonian is checked against in
/// [`verify_reduction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Damped + anti-damped SHO pair.
    DshoPair,
    /// Single damped SHO (for the time-dependent single-oscillator kind).
    Dsho,
    /// Van der Pol + auxiliary pair.
    VdpPair,
    /// Forced Van der Pol + auxiliary pair.
    ForcedVdpPair,
    /// Liénard + auxiliary pair with the split's damping profile.
    LienardPair,
    /// Linearized damped/anti-damped pair with amplitude-dependent damping.
    AveragedPair,
}

impl ModelKind {
    fn name(self) -> &'static str {
        match self {
            ModelKind::DshoPair => "dsho-pair",
            ModelKind::Dsho => "dsho",
            ModelKind::VdpPair => "vdp-pair",
            ModelKind::ForcedVdpPair => "forced-vdp-pair",
            ModelKind::LienardPair => "lienard-pair",
            ModelKind::AveragedPair => "averaged-pair",
        }
    }
}

impl Hamiltonian {
    /// Forced kind, requiring at least one forcing amplitude.
    pub fn forced_vdp(p: SystemParams) -> Result<Self, HamiltonianError> {
        if p.f1 == 0.0 && p.f2 == 0.0 {
            return Err(HamiltonianError::MissingForcing);
        }
        Ok(Self::ForcedVdp(p))
    }

    /// Liénard kind from a validated gauge split.
    pub fn lienard(p: SystemParams, split: GaugeSplit) -> Self {
        Self::LienardGeneral(p, split)
    }

    /// Equivalent quadratic kind for an assumed cycle amplitude `A >= 0`.
    pub fn averaged(p: SystemParams, amplitude: f64) -> Result<Self, HamiltonianError> {
        if amplitude < 0.0 {
            return Err(HamiltonianError::NegativeAmplitude(amplitude));
        }
        Ok(Self::AveragedQuadratic(p, amplitude))
    }

    pub fn params(&self) -> &SystemParams {
        match self {
            Self::BatemanDual(p)
            | Self::CaldirolaKanai(p)
            | Self::VdpFull(p)
            | Self::VdpSimple(p)
            | Self::ForcedVdp(p)
            | Self::LienardGeneral(p, _)
            | Self::AveragedQuadratic(p, _) => p,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::BatemanDual(_) => "bateman-dual",
            Self::CaldirolaKanai(_) => "caldirola-kanai",
            Self::VdpFull(_) => "vdp-full",
            Self::VdpSimple(_) => "vdp-simple",
            Self::ForcedVdp(_) => "forced-vdp",
            Self::LienardGeneral(..) => "lienard",
            Self::AveragedQuadratic(..) => "averaged-quadratic",
        }
    }

    pub fn is_autonomous(&self) -> bool {
        !matches!(self, Self::CaldirolaKanai(_) | Self::ForcedVdp(_))
    }

    /// Energy value at a canonical state. `t` is ignored by autonomous kinds.
    pub fn evaluate(&self, s: &PhaseState4, t: f64) -> f64 {
        let (x, y, px, py) = (s.x, s.y, s.px, s.py);
        match self {
            Self::BatemanDual(p) => {
                let w2 = p.big_omega * p.big_omega - p.lambda * p.lambda;
                px * py + w2 * x * y - p.lambda * (px * x - py * y)
            }
            Self::CaldirolaKanai(p) => {
                let l = p.lambda;
                0.5 * (-2.0 * l * t).exp() * px * px
                    + 0.5 * (2.0 * l * t).exp() * p.big_omega * p.big_omega * x * x
            }
            Self::VdpFull(p) => vdp_full_energy(s, p),
            Self::VdpSimple(p) => {
                let w2 = p.omega * p.omega;
                px * py + w2 * x * y + p.epsilon * (p.alpha * x * x - 1.0) * y * py
            }
            Self::ForcedVdp(p) => {
                vdp_full_energy(s, p) - (x + y) * p.f2 * (p.omega_ext * t).cos()
                    + x * y * p.f1 * (p.gamma * t).cos()
            }
            Self::LienardGeneral(p, split) => {
                let e = p.epsilon;
                let w2 = p.omega * p.omega;
                let (f1, f2) = (split.f1.eval(x), split.f2.eval(x));
                px * py + 0.5 * e * (x * px - y * py) - e * f1 * px
                    + e * f2 * y * py
                    + (w2 - 0.25 * e * e) * x * y
                    + 0.5 * e * e * f1 * y
                    + 0.5 * e * e * f2 * x * y
                    - e * e * f1 * f2 * y
            }
            Self::AveragedQuadratic(p, a) => {
                let e = p.epsilon;
                let w2 = p.omega * p.omega;
                let k = 1.0 - 0.5 * p.alpha * a * a;
                px * py + 0.5 * e * (x * px - k * y * py) + (w2 - 0.25 * e * e) * x * y
            }
        }
    }

    /// Analytic gradient `(dH/dx, dH/dy, dH/dp_x, dH/dp_y)`.
    pub fn gradient(&self, s: &PhaseState4, t: f64) -> [f64; 4] {
        let (x, y, px, py) = (s.x, s.y, s.px, s.py);
        match self {
            Self::BatemanDual(p) => {
                let w2 = p.big_omega * p.big_omega - p.lambda * p.lambda;
                let l = p.lambda;
                [w2 * y - l * px, w2 * x + l * py, py - l * x, px + l * y]
            }
            Self::CaldirolaKanai(p) => {
                let l = p.lambda;
                [
                    (2.0 * l * t).exp() * p.big_omega * p.big_omega * x,
                    0.0,
                    (-2.0 * l * t).exp() * px,
                    0.0,
                ]
            }
            Self::VdpFull(p) => vdp_full_gradient(s, p),
            Self::VdpSimple(p) => {
                let e = p.epsilon;
                let w2 = p.omega * p.omega;
                let f = p.alpha * x * x - 1.0;
                [
                    w2 * y + e * 2.0 * p.alpha * x * y * py,
                    w2 * x + e * f * py,
                    py,
                    px + e * f * y,
                ]
            }
            Self::ForcedVdp(p) => {
                let mut g = vdp_full_gradient(s, p);
                let drive = p.f2 * (p.omega_ext * t).cos();
                let parametric = p.f1 * (p.gamma * t).cos();
                g[0] += -drive + parametric * y;
                g[1] += -drive + parametric * x;
                g
            }
            Self::LienardGeneral(p, split) => {
                let e = p.epsilon;
                let w2 = p.omega * p.omega;
                let (f1, f2) = (split.f1.eval(x), split.f2.eval(x));
                let (d1, d2) = (split.f1.derivative(x), split.f2.derivative(x));
                [
                    0.5 * e * px - e * d1 * px
                        + e * d2 * y * py
                        + (w2 - 0.25 * e * e) * y
                        + 0.5 * e * e * d1 * y
                        + 0.5 * e * e * (d2 * x + f2) * y
                        - e * e * (d1 * f2 + f1 * d2) * y,
                    -0.5 * e * py
                        + e * f2 * py
                        + (w2 - 0.25 * e * e) * x
                        + 0.5 * e * e * f1
                        + 0.5 * e * e * f2 * x
                        - e * e * f1 * f2,
                    py + 0.5 * e * x - e * f1,
                    px - 0.5 * e * y + e * f2 * y,
                ]
            }
            Self::AveragedQuadratic(p, a) => {
                let e = p.epsilon;
                let w2 = p.omega * p.omega;
                let k = 1.0 - 0.5 * p.alpha * a * a;
                [
                    0.5 * e * px + (w2 - 0.25 * e * e) * y,
                    -0.5 * e * k * py + (w2 - 0.25 * e * e) * x,
                    py + 0.5 * e * x,
                    px - 0.5 * e * k * y,
                ]
            }
        }
    }

    /// Explicit time partial `dH/dt`; zero for autonomous kinds.
    pub fn time_partial(&self, s: &PhaseState4, t: f64) -> f64 {
        match self {
            Self::CaldirolaKanai(p) => {
                let l = p.lambda;
                -l * (-2.0 * l * t).exp() * s.px * s.px
                    + l * (2.0 * l * t).exp() * p.big_omega * p.big_omega * s.x * s.x
            }
            Self::ForcedVdp(p) => {
                (s.x + s.y) * p.f2 * p.omega_ext * (p.omega_ext * t).sin()
                    - s.x * s.y * p.f1 * p.gamma * (p.gamma * t).sin()
            }
            _ => 0.0,
        }
    }

    /// Canonical flow `(xdot, ydot, p_x dot, p_y dot)` from the analytic
    /// gradient; no numerical differentiation is involved.
    pub fn canonical_vector_field(&self, s: &PhaseState4, t: f64) -> [f64; 4] {
        let g = self.gradient(s, t);
        [g[2], g[3], -g[0], -g[1]]
    }

    /// Lift a model-space state `(x, xdot, y, ydot)` to canonical coordinates
    /// via this kind's momentum definitions.
    pub fn canonical_from_model(&self, m: [f64; 4], t: f64) -> PhaseState4 {
        let [x, xdot, y, ydot] = m;
        let (px, py) = match self {
            Self::BatemanDual(p) => (ydot - p.lambda * y, xdot + p.lambda * x),
            Self::CaldirolaKanai(p) => ((2.0 * p.lambda * t).exp() * xdot, 0.0),
            Self::VdpFull(p) | Self::ForcedVdp(p) => {
                let e = p.epsilon;
                let al = p.alpha;
                (
                    ydot + 0.5 * e * (y - al * x * x * y),
                    xdot - 0.5 * e * (x - al * x * x * x / 3.0),
                )
            }
            Self::VdpSimple(p) => (ydot - p.epsilon * (p.alpha * x * x - 1.0) * y, xdot),
            Self::LienardGeneral(p, split) => {
                let e = p.epsilon;
                (
                    ydot + 0.5 * e * y - e * split.f2.eval(x) * y,
                    xdot - 0.5 * e * x + e * split.f1.eval(x),
                )
            }
            Self::AveragedQuadratic(p, a) => {
                let e = p.epsilon;
                let k = 1.0 - 0.5 * p.alpha * a * a;
                (ydot + 0.5 * e * k * y, xdot - 0.5 * e * x)
            }
        };
        let y_out = if matches!(self, Self::CaldirolaKanai(_)) {
            0.0
        } else {
            y
        };
        PhaseState4::new(x, y_out, px, py)
    }

    /// Model-space velocities `(xdot, ydot)` recovered from a canonical state.
    pub fn model_velocities(&self, s: &PhaseState4, t: f64) -> (f64, f64) {
        let flow = self.canonical_vector_field(s, t);
        (flow[0], flow[1])
    }

    /// Second derivatives `(xddot, yddot)` induced by the canonical flow,
    /// obtained by differentiating the momentum maps along the flow.
    fn induced_accelerations(&self, s: &PhaseState4, t: f64) -> (f64, f64) {
        let flow = self.canonical_vector_field(s, t);
        let (xdot, ydot, pxdot, pydot) = (flow[0], flow[1], flow[2], flow[3]);
        let x = s.x;
        let y = s.y;
        match self {
            Self::BatemanDual(p) => (pydot - p.lambda * xdot, pxdot + p.lambda * ydot),
            Self::CaldirolaKanai(p) => {
                let l = p.lambda;
                (-2.0 * l * xdot + (-2.0 * l * t).exp() * pxdot, 0.0)
            }
            Self::VdpFull(p) | Self::ForcedVdp(p) => {
                let e = p.epsilon;
                let al = p.alpha;
                (
                    pydot + 0.5 * e * (1.0 - al * x * x) * xdot,
                    pxdot - 0.5 * e * (ydot - al * (2.0 * x * xdot * y + x * x * ydot)),
                )
            }
            Self::VdpSimple(p) => {
                let e = p.epsilon;
                let f = p.alpha * x * x - 1.0;
                (pydot, pxdot + e * (2.0 * p.alpha * x * xdot * y + f * ydot))
            }
            Self::LienardGeneral(p, split) => {
                let e = p.epsilon;
                (
                    pydot + 0.5 * e * xdot - e * split.f1.derivative(x) * xdot,
                    pxdot - 0.5 * e * ydot
                        + e * (split.f2.derivative(x) * xdot * y + split.f2.eval(x) * ydot),
                )
            }
            Self::AveragedQuadratic(p, a) => {
                let e = p.epsilon;
                let k = 1.0 - 0.5 * p.alpha * a * a;
                (pydot + 0.5 * e * xdot, pxdot - 0.5 * e * k * ydot)
            }
        }
    }
}

fn vdp_full_energy(s: &PhaseState4, p: &SystemParams) -> f64 {
    let (x, y, px, py) = (s.x, s.y, s.px, s.py);
    let e = p.epsilon;
    let al = p.alpha;
    let w2 = p.omega * p.omega;
    let x2 = x * x;
    let x3 = x2 * x;
    px * py
        + 0.5 * e * (x * px - y * py)
        + (w2 - 0.25 * e * e) * x * y
        + al * (0.5 * e * (x2 * y * py - x3 * px / 3.0)
            + e * e / 12.0 * (4.0 * x3 * y - al * x3 * x2 * y))
}

fn vdp_full_gradient(s: &PhaseState4, p: &SystemParams) -> [f64; 4] {
    let (x, y, px, py) = (s.x, s.y, s.px, s.py);
    let e = p.epsilon;
    let al = p.alpha;
    let w2 = p.omega * p.omega;
    let x2 = x * x;
    let x3 = x2 * x;
    let x4 = x2 * x2;
    [
        0.5 * e * px
            + (w2 - 0.25 * e * e) * y
            + al * (0.5 * e * (2.0 * x * y * py - x2 * px)
                + e * e / 12.0 * (12.0 * x2 * y - 5.0 * al * x4 * y)),
        -0.5 * e * py
            + (w2 - 0.25 * e * e) * x
            + al * (0.5 * e * x2 * py + e * e / 12.0 * (4.0 * x3 - al * x4 * x)),
        py + 0.5 * e * x - al * e * x3 / 6.0,
        px - 0.5 * e * y + 0.5 * al * e * x2 * y,
    ]
}

/// Construct the Liénard Hamiltonian for a validated gauge split.
pub fn lienard_hamiltonian(split: GaugeSplit, p: SystemParams) -> Hamiltonian {
    Hamiltonian::lienard(p, split)
}

/// Construct the equivalent quadratic Hamiltonian for cycle amplitude `A`.
pub fn averaged_hamiltonian(
    p: SystemParams,
    amplitude: f64,
) -> Result<Hamiltonian, HamiltonianError> {
    Hamiltonian::averaged(p, amplitude)
}

/// Maximum residual between the canonical flow's induced second-order
/// dynamics and the paired model vector field over pseudo-random samples.
///
/// States are drawn from a fixed-seed generator in `[-2, 2]^4` with
/// `t in [0, 5]`, so repeated calls are deterministic. Velocity consistency
/// (`dH/dp` against the sampled velocities) is folded into the residual.
pub fn verify_reduction(
    h: &Hamiltonian,
    model: ModelKind,
    samples: usize,
) -> Result<f64, HamiltonianError> {
    let compatible = matches!(
        (h, model),
        (Hamiltonian::BatemanDual(_), ModelKind::DshoPair)
            | (Hamiltonian::CaldirolaKanai(_), ModelKind::Dsho)
            | (Hamiltonian::VdpFull(_), ModelKind::VdpPair)
            | (Hamiltonian::VdpSimple(_), ModelKind::VdpPair)
            | (Hamiltonian::ForcedVdp(_), ModelKind::ForcedVdpPair)
            | (Hamiltonian::LienardGeneral(..), ModelKind::LienardPair)
            | (Hamiltonian::AveragedQuadratic(..), ModelKind::AveragedPair)
    );
    if !compatible {
        return Err(HamiltonianError::UnknownPairing {
            kind: h.name(),
            model: model.name(),
        });
    }

    let p = *h.params();
    let model_rhs = |m: [f64; 4], t: f64| -> [f64; 4] {
        match (model, h) {
            (ModelKind::DshoPair, _) => {
                let dx = dsho_rhs(State2::new(m[0], m[1]), &p, false);
                let dy = dsho_rhs(State2::new(m[2], m[3]), &p, true);
                [dx.x, dx.v, dy.x, dy.v]
            }
            (ModelKind::Dsho, _) => {
                let dx = dsho_rhs(State2::new(m[0], m[1]), &p, false);
                [dx.x, dx.v, 0.0, 0.0]
            }
            (ModelKind::VdpPair, _) => vdp_pair_rhs(m, &p),
            (ModelKind::ForcedVdpPair, _) => forced_vdp_pair_rhs(m, t, &p),
            (ModelKind::LienardPair, Hamiltonian::LienardGeneral(_, split)) => {
                lienard_pair_rhs(m, &p, |x| split.damping(x))
            }
            (ModelKind::AveragedPair, Hamiltonian::AveragedQuadratic(_, a)) => {
                // exact linearization: xddot + c xdot + w_eff^2 x = 0 plus the
                // sign-flipped partner, with the eps^2 stiffness shift the
                // quadratic Hamiltonian actually generates
                let c = equivalent_damping(*a, p.alpha, p.epsilon);
                let w2_eff = p.omega * p.omega - p.epsilon * p.epsilon * p.alpha * a * a / 8.0;
                [
                    m[1],
                    -c * m[1] - w2_eff * m[0],
                    m[3],
                    c * m[3] - w2_eff * m[2],
                ]
            }
            _ => unreachable!("pairing checked above"),
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x0ddba11);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let mut m = [
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ];
        if matches!(model, ModelKind::Dsho) {
            m[2] = 0.0;
            m[3] = 0.0;
        }
        let t = if h.is_autonomous() {
            0.0
        } else {
            rng.gen_range(0.0..5.0)
        };
        let z = h.canonical_from_model(m, t);
        let (xdot, ydot) = h.model_velocities(&z, t);
        let (xddot, yddot) = h.induced_accelerations(&z, t);
        let reference = model_rhs(m, t);
        let mut r = (xdot - m[1]).abs().max((xddot - reference[1]).abs());
        if !matches!(model, ModelKind::Dsho) {
            r = r.max((ydot - m[3]).abs()).max((yddot - reference[3]).abs());
        }
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Endpoint check for the canonical-transformation chain: the time-dependent
/// single-oscillator Hamiltonian must reproduce the damped-SHO equation.
pub fn ck_transform_check(p: SystemParams, samples: usize) -> Result<f64, HamiltonianError> {
    verify_reduction(&Hamiltonian::CaldirolaKanai(p), ModelKind::Dsho, samples)
}

/// Maximum relative drift `|H(t) - H(0)| / max(1, |H(0)|)` along the
/// numerically integrated canonical flow of an autonomous kind.
pub fn conservation_drift(
    h: &Hamiltonian,
    s0: PhaseState4,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<f64, HamiltonianError> {
    if !h.is_autonomous() {
        return Err(HamiltonianError::NotAutonomous { kind: h.name() });
    }
    let traj = integrate(
        |t, z: &[f64; 4]| h.canonical_vector_field(&PhaseState4::from_array(*z), t),
        s0.to_array(),
        (0.0, t_end),
        cfg,
    )?;
    let h0 = h.evaluate(&s0, 0.0);
    let denom = h0.abs().max(1.0);
    let mut drift = 0.0f64;
    for (&t, z) in traj.times().iter().zip(traj.states()) {
        let ht = h.evaluate(&PhaseState4::from_array(*z), t);
        drift = drift.max((ht - h0).abs() / denom);
    }
    Ok(drift)
}

/// Pointwise residual `|dH/dt - dH/dt|_explicit|` along the flow, with the
/// total derivative taken by a fourth-order finite-difference stencil on the
/// dense trajectory. For autonomous kinds this is just the drift rate.
pub fn power_balance_residual(
    h: &Hamiltonian,
    s0: PhaseState4,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<f64, HamiltonianError> {
    let cfg = IntegratorConfig {
        dense: true,
        ..*cfg
    };
    let traj = integrate(
        |t, z: &[f64; 4]| h.canonical_vector_field(&PhaseState4::from_array(*z), t),
        s0.to_array(),
        (0.0, t_end),
        &cfg,
    )?;
    let energy_at = |t: f64| -> f64 {
        let z = traj.sample(t).expect("inside span");
        h.evaluate(&PhaseState4::from_array(z), t)
    };
    let fd_h = 1e-2;
    let mut worst = 0.0f64;
    let n = 200;
    for k in 0..=n {
        let t = 2.0 * fd_h + (t_end - 4.0 * fd_h) * k as f64 / n as f64;
        let total = (-energy_at(t + 2.0 * fd_h) + 8.0 * energy_at(t + fd_h)
            - 8.0 * energy_at(t - fd_h)
            + energy_at(t - 2.0 * fd_h))
            / (12.0 * fd_h);
        let z = PhaseState4::from_array(traj.sample(t).expect("inside span"));
        let partial = h.time_partial(&z, t);
        worst = worst.max((total - partial).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fd_gradient(h: &Hamiltonian, s: &PhaseState4, t: f64) -> [f64; 4] {
        let step = 1e-6;
        let mut g = [0.0; 4];
        let mut arr = s.to_array();
        for i in 0..4 {
            let orig = arr[i];
            arr[i] = orig + step;
            let plus = h.evaluate(&PhaseState4::from_array(arr), t);
            arr[i] = orig - step;
            let minus = h.evaluate(&PhaseState4::from_array(arr), t);
            arr[i] = orig;
            g[i] = (plus - minus) / (2.0 * step);
        }
        g
    }

    fn sample_states(n: usize, seed: u64) -> Vec<PhaseState4> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                PhaseState4::new(
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                )
            })
            .collect()
    }

    fn all_kinds() -> Vec<Hamiltonian> {
        let vdp = SystemParams::vdp(0.2, 1.1);
        let dsho = SystemParams::dsho(0.3, 1.4);
        let mut forced = SystemParams::vdp(0.15, 1.0);
        forced.f1 = 0.4;
        forced.gamma = 2.0;
        forced.f2 = 0.7;
        forced.omega_ext = 1.3;
        // even damping profile x^4 - 1 split across both pieces, so the
        // Liénard x-dynamics stays on a bounded cycle
        let split = GaugeSplit::new(
            ScalarFn::with_derivative(|x| 0.1 * x.powi(5), |x| 0.5 * x.powi(4)),
            ScalarFn::with_derivative(|x| 0.5 * x.powi(4), |x| 2.0 * x.powi(3)),
            |x| x.powi(4) - 1.0,
        )
        .unwrap();
        vec![
            Hamiltonian::BatemanDual(dsho),
            Hamiltonian::CaldirolaKanai(dsho),
            Hamiltonian::VdpFull(vdp),
            Hamiltonian::VdpSimple(vdp),
            Hamiltonian::forced_vdp(forced).unwrap(),
            Hamiltonian::lienard(SystemParams::vdp(0.15, 0.9), split),
            Hamiltonian::averaged(SystemParams::vdp(0.2, 1.0), 1.3).unwrap(),
        ]
    }

    #[test]
    fn vdp_simple_energy_point() {
        let h = Hamiltonian::VdpSimple(SystemParams::vdp(0.5, 1.0));
        let s = PhaseState4::new(1.0, 0.0, 0.3, 0.7);
        // f(1) = 0 and y = 0, so only p_x p_y survives
        assert_relative_eq!(h.evaluate(&s, 0.0), 0.21, epsilon = 1e-15);
    }

    #[test]
    fn bateman_energy_vanishes_at_origin() {
        let h = Hamiltonian::BatemanDual(SystemParams::dsho(0.5, 1.2));
        assert_eq!(h.evaluate(&PhaseState4::new(0.0, 0.0, 0.0, 0.0), 0.0), 0.0);
    }

    #[test]
    fn vdp_full_energy_point() {
        let h = Hamiltonian::VdpFull(SystemParams::vdp(0.2, 1.0));
        let s = PhaseState4::new(1.0, 1.0, 0.0, 0.0);
        // (w^2 - eps^2/4) + eps^2/12 * (4 - 1) = 0.99 + 0.01
        assert_relative_eq!(h.evaluate(&s, 0.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn vdp_simple_flow_point() {
        let h = Hamiltonian::VdpSimple(SystemParams::vdp(0.1, 1.0));
        let s = PhaseState4::new(0.0, 0.0, 0.0, 1.0);
        let flow = h.canonical_vector_field(&s, 0.0);
        assert_relative_eq!(flow[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(flow[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(flow[2], 0.0, epsilon = 1e-15);
        assert_relative_eq!(flow[3], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn bateman_flow_point() {
        let p = SystemParams::dsho(0.5, 1.25f64.sqrt()); // w^2 = 1
        let h = Hamiltonian::BatemanDual(p);
        let s = PhaseState4::new(1.0, 0.0, 0.0, 0.0);
        let flow = h.canonical_vector_field(&s, 0.0);
        assert_relative_eq!(flow[0], -0.5, epsilon = 1e-15);
        assert_relative_eq!(flow[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(flow[2], 0.0, epsilon = 1e-15);
        assert_relative_eq!(flow[3], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn origin_is_critical_for_autonomous_kinds() {
        let origin = PhaseState4::new(0.0, 0.0, 0.0, 0.0);
        for h in all_kinds() {
            if h.is_autonomous() {
                assert_eq!(
                    h.canonical_vector_field(&origin, 0.0),
                    [0.0; 4],
                    "{}",
                    h.name()
                );
            }
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        for h in all_kinds() {
            for (i, s) in sample_states(20, 42).iter().enumerate() {
                let t = 0.37 * i as f64;
                let exact = h.gradient(s, t);
                let fd = fd_gradient(&h, s, t);
                for c in 0..4 {
                    assert!(
                        (exact[c] - fd[c]).abs() < 1e-6,
                        "{} component {c}: {} vs {}",
                        h.name(),
                        exact[c],
                        fd[c]
                    );
                }
            }
        }
    }

    #[test]
    fn time_partial_matches_finite_differences() {
        for h in all_kinds() {
            for (i, s) in sample_states(10, 43).iter().enumerate() {
                let t = 0.5 + 0.3 * i as f64;
                let step = 1e-6;
                let fd = (h.evaluate(s, t + step) - h.evaluate(s, t - step)) / (2.0 * step);
                assert!(
                    (h.time_partial(s, t) - fd).abs() < 1e-6,
                    "{}: {} vs {}",
                    h.name(),
                    h.time_partial(s, t),
                    fd
                );
            }
        }
    }

    #[test]
    fn reduction_holds_for_every_kind() {
        let pairs: Vec<(Hamiltonian, ModelKind)> = all_kinds()
            .into_iter()
            .zip([
                ModelKind::DshoPair,
                ModelKind::Dsho,
                ModelKind::VdpPair,
                ModelKind::VdpPair,
                ModelKind::ForcedVdpPair,
                ModelKind::LienardPair,
                ModelKind::AveragedPair,
            ])
            .collect();
        for (h, model) in pairs {
            let residual = verify_reduction(&h, model, 100).unwrap();
            assert!(residual < 1e-10, "{}: residual {residual:.3e}", h.name());
        }
    }

    #[test]
    fn reduction_with_nonunit_alpha() {
        let mut p = SystemParams::vdp(0.3, 1.2);
        p.alpha = 1.7;
        for h in [Hamiltonian::VdpFull(p), Hamiltonian::VdpSimple(p)] {
            let residual = verify_reduction(&h, ModelKind::VdpPair, 100).unwrap();
            assert!(residual < 1e-10, "{}: {residual:.3e}", h.name());
        }
    }

    #[test]
    fn mismatched_pairing_is_rejected() {
        let h = Hamiltonian::BatemanDual(SystemParams::dsho(0.1, 1.0));
        assert!(matches!(
            verify_reduction(&h, ModelKind::VdpPair, 10),
            Err(HamiltonianError::UnknownPairing { .. })
        ));
    }

    #[test]
    fn ck_endpoint_check() {
        // lambda = 0 degenerates to the plain SHO
        assert!(ck_transform_check(SystemParams::dsho(0.0, 1.0), 50).unwrap() < 1e-12);
        assert!(ck_transform_check(SystemParams::dsho(0.1, 1.0), 50).unwrap() < 1e-10);
        // rest state is trivially consistent at any time
        let h = Hamiltonian::CaldirolaKanai(SystemParams::dsho(0.1, 1.0));
        let z = h.canonical_from_model([0.0; 4], 2.7);
        let (xdot, _) = h.model_velocities(&z, 2.7);
        let (xddot, _) = h.induced_accelerations(&z, 2.7);
        assert_eq!((xdot, xddot), (0.0, 0.0));
    }

    #[test]
    fn gauge_split_validates_target() {
        assert!(GaugeSplit::new(
            ScalarFn::zero(),
            ScalarFn::with_derivative(|x| x * x, |x| 2.0 * x),
            |x| x * x - 1.0,
        )
        .is_ok());
        // wrong target
        assert!(matches!(
            GaugeSplit::new(ScalarFn::zero(), ScalarFn::new(|x| x * x), |x| {
                x.powi(4) - 1.0
            }),
            Err(HamiltonianError::InconsistentSplit { .. })
        ));
    }

    #[test]
    fn vdp_splits_reduce_to_vdp_pair() {
        let p = SystemParams::vdp(0.2, 1.0);
        for split in [
            GaugeSplit::vdp_momentum_free(),
            GaugeSplit::vdp_potential_free(),
        ] {
            let h = lienard_hamiltonian(split, p);
            let residual = verify_reduction(&h, ModelKind::LienardPair, 100).unwrap();
            assert!(residual < 1e-10, "residual {residual:.3e}");
        }
    }

    #[test]
    fn unit_f2_split_gives_sho_pair() {
        // f1' + f2 - 1 = 0: two uncoupled SHOs
        let p = SystemParams::vdp(0.4, 1.3);
        let split = GaugeSplit::new(ScalarFn::zero(), ScalarFn::constant(1.0), |_| 0.0).unwrap();
        let h = lienard_hamiltonian(split, p);
        let residual = verify_reduction(&h, ModelKind::LienardPair, 100).unwrap();
        assert!(residual < 1e-10);
        // the induced x-equation at a probe state has no damping term
        let z = h.canonical_from_model([1.0, 0.7, 0.0, 0.0], 0.0);
        let (xddot, _) = h.induced_accelerations(&z, 0.0);
        assert_relative_eq!(xddot, -p.omega * p.omega, epsilon = 1e-12);
    }

    #[test]
    fn quartic_lienard_reduction() {
        let p = SystemParams::vdp(0.15, 1.0);
        let split = GaugeSplit::new(
            ScalarFn::with_derivative(|x| x.powi(5) / 5.0, |x| x.powi(4)),
            ScalarFn::zero(),
            |x| x.powi(4) - 1.0,
        )
        .unwrap();
        let h = lienard_hamiltonian(split, p);
        assert!(verify_reduction(&h, ModelKind::LienardPair, 100).unwrap() < 1e-10);
    }

    #[test]
    fn galley_coupling_vanishes_in_physical_limit() {
        let p = SystemParams::vdp(0.3, 1.0);
        // y = 0 means q1 = q2
        let d = galley_decompose(1.2, 0.0, -0.4, 0.9, &p, |x| x * x - 1.0);
        assert_eq!(d.coupling, 0.0);
    }

    #[test]
    fn galley_sum_matches_reduced_lagrangian() {
        use rand::{Rng, SeedableRng};
        let p = SystemParams::vdp(0.3, 1.0);
        let f = |x: f64| x * x - 1.0;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let (x, y, xdot, ydot) = (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let d = galley_decompose(x, y, xdot, ydot, &p, f);
            // independent evaluation of the reduced Lagrangian
            let lagrangian = xdot * ydot - p.omega * p.omega * x * y - p.epsilon * f(x) * xdot * y;
            assert!(
                (d.total() - lagrangian).abs() < 1e-12,
                "sum {} vs {}",
                d.total(),
                lagrangian
            );
        }
    }

    #[test]
    fn galley_conservative_parts_at_zero_coupling() {
        let p = SystemParams::vdp(0.0, 1.0);
        let d = galley_decompose(0.8, 0.6, -0.2, 0.4, &p, |x| x * x - 1.0);
        assert_eq!(d.coupling, 0.0);
        let q = GalleyCoordinates::from_pair(0.8, 0.6, -0.2, 0.4);
        assert_relative_eq!(
            d.forward,
            0.5 * (q.q1dot * q.q1dot - q.q1 * q.q1),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            d.reverse,
            0.5 * (q.q2dot * q.q2dot - q.q2 * q.q2),
            epsilon = 1e-15
        );
    }

    #[test]
    fn galley_roundtrip() {
        let q = GalleyCoordinates::from_pair(1.0, -0.5, 0.3, 0.7);
        let (x, y, xdot, ydot) = q.to_pair();
        assert_relative_eq!(x, 1.0, epsilon = 1e-15);
        assert_relative_eq!(y, -0.5, epsilon = 1e-15);
        assert_relative_eq!(xdot, 0.3, epsilon = 1e-15);
        assert_relative_eq!(ydot, 0.7, epsilon = 1e-15);
    }

    #[test]
    fn equivalent_damping_roots() {
        assert_eq!(equivalent_damping(2.0, 1.0, 0.3), 0.0);
        assert_relative_eq!(equivalent_damping(0.0, 1.0, 0.3), -0.3, epsilon = 1e-15);
        assert_relative_eq!(equivalent_damping(1.0, 4.0, 0.1), 0.0, epsilon = 1e-15);
        assert_relative_eq!(equivalent_damping(1.0, 1.0, 0.2), -0.15, epsilon = 1e-15);
    }

    #[test]
    fn averaged_at_zero_amplitude_is_bateman_with_negative_damping() {
        let eps = 0.2;
        let omega = 1.1;
        let avg = Hamiltonian::averaged(SystemParams::vdp(eps, omega), 0.0).unwrap();
        let bateman = Hamiltonian::BatemanDual(SystemParams::dsho(-0.5 * eps, omega));
        for s in sample_states(30, 17) {
            assert_relative_eq!(
                avg.evaluate(&s, 0.0),
                bateman.evaluate(&s, 0.0),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn averaged_rejects_negative_amplitude() {
        assert!(Hamiltonian::averaged(SystemParams::vdp(0.1, 1.0), -1.0).is_err());
    }

    #[test]
    fn forced_requires_forcing() {
        assert!(matches!(
            Hamiltonian::forced_vdp(SystemParams::vdp(0.1, 1.0)),
            Err(HamiltonianError::MissingForcing)
        ));
    }

    #[test]
    fn autonomous_kinds_conserve_energy() {
        // The auxiliary block grows exponentially along the nonlinear flows,
        // so a 30/omega horizon keeps headroom below the drift bound; the
        // acceptance suite runs the Van der Pol kinds out to t = 50.
        let cfg = IntegratorConfig {
            dense: false,
            ..Default::default()
        };
        let s0 = PhaseState4::new(0.5, 0.25, -0.15, 0.4);
        for h in all_kinds() {
            if !h.is_autonomous() {
                continue;
            }
            let t_end = 30.0 / h.params().omega;
            let drift = conservation_drift(&h, s0, t_end, &cfg).unwrap();
            assert!(drift < 1e-8, "{}: drift {drift:.3e}", h.name());
        }
    }

    #[test]
    fn conservation_check_rejects_nonautonomous() {
        let mut p = SystemParams::vdp(0.1, 1.0);
        p.f2 = 1.0;
        p.omega_ext = 1.5;
        let h = Hamiltonian::forced_vdp(p).unwrap();
        assert!(matches!(
            conservation_drift(
                &h,
                PhaseState4::new(0.1, 0.0, 0.0, 0.0),
                10.0,
                &Default::default()
            ),
            Err(HamiltonianError::NotAutonomous { .. })
        ));
    }

    #[test]
    fn forced_flow_obeys_power_balance() {
        let mut p = SystemParams::vdp(0.1, 1.0);
        p.f1 = 0.3;
        p.gamma = 1.7;
        p.f2 = 0.5;
        p.omega_ext = 2.3;
        let h = Hamiltonian::forced_vdp(p).unwrap();
        let cfg = IntegratorConfig::default();
        let residual =
            power_balance_residual(&h, PhaseState4::new(0.5, 0.2, -0.1, 0.4), 20.0, &cfg).unwrap();
        assert!(residual < 1e-7, "residual {residual:.3e}");
    }
}
