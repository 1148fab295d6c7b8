//! Canonical perturbation pipeline for the doubled Van der Pol system.
//!
//! Starting from `H = p_x p_y + w^2 x y + eps (x^2 - 1) y p_y`, a rotation to
//! sum/difference coordinates `X = (x + y)/sqrt2`, `Y = (x - y)/sqrt2` (and
//! likewise for momenta) splits the unperturbed part into a positive and a
//! negative oscillator, `P_X^2/2 + w^2 X^2/2 - (P_Y^2/2 + w^2 Y^2/2)`. Angle
//! and action variables of the unperturbed pair,
//!
//! ```text
//! X = sqrt(2 I1 / w) sin phi1,   P_X = sqrt(2 w I1) cos phi1,
//! Y = sqrt(2 I2 / w) sin phi2,   P_Y = sqrt(2 w I2) cos phi2,
//! ```
//!
//! turn the Hamiltonian into `K = w I1 - w I2 + eps K1(phi, I)`, where `K1`
//! is an exact trigonometric polynomial ([`k1_modes`]). The first-order
//! generating function follows mode by mode from
//! `S1_{m1,m2} = -j K1_{m1,m2} / (w (m1 - m2))`; the four modes with
//! `m1 = m2` hit a zero denominator and are excluded ([`s1_build`]), which
//! makes `S1` non-periodic unless special initial data keep the excluded
//! (resonant) terms dormant. Choosing the auxiliary block at its fixed point
//! `(y, ydot) = (0, 0)` pins `phi1 + phi2 = 0` and `sqrt(I1) = -sqrt(I2)`
//! ([`special_initial_state`], [`nonperiodic_conditions`]), pushing the
//! aperiodicity to second order. The second-order energy [`second_order_energy`]
//! then yields the oscillation frequency `w - eps^2/(16 w)`
//! ([`predict_frequency`]) and the waveform
//! `x = 2 sin phi1 - (eps/4w) cos 3 phi1` ([`predict_waveform`]).
//!
//! All half-integer powers of `I2` evaluate on the signed branch carried by
//! [`ActionAngle::branch2`]; the negative branch is the one on which the
//! special initial data live, and it is what makes the frequency come out
//! with the `-eps^2/(16 w)` sign. Everything here assumes the plain
//! `x^2 - 1` damping profile (`alpha = 1`).

mod trig;

pub use trig::{Amplitude, CRational, FourierMode, MonoKey, TrigError, TrigPolynomial};

use crate::analysis::CycleSamples;
use crate::integrate::Trajectory;
use crate::models::{PhaseState4, SystemParams};
use num_rational::Rational64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Square-root branch for `sqrt(I2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

/// Action-angle coordinates of the unperturbed doubled oscillator, with the
/// explicit square-root branch for the second action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionAngle {
    pub phi1: f64,
    pub phi2: f64,
    pub i1: f64,
    pub i2: f64,
    pub branch2: Branch,
}

/// Map a canonical state to action-angle variables on the given branch.
///
/// Momenta must follow the gauge-reduced definitions `p_y = xdot`,
/// `p_x = ydot - eps (x^2 - 1) y`. A zero action maps to angle 0.
pub fn to_action_angle_on(s: &PhaseState4, p: &SystemParams, branch2: Branch) -> ActionAngle {
    let w = p.omega;
    let big_x = (s.x + s.y) * FRAC_1_SQRT_2;
    let big_y = (s.x - s.y) * FRAC_1_SQRT_2;
    let big_px = (s.px + s.py) * FRAC_1_SQRT_2;
    let big_py = (s.px - s.py) * FRAC_1_SQRT_2;

    let i1 = 0.5 * (w * big_x * big_x + big_px * big_px / w);
    let i2 = 0.5 * (w * big_y * big_y + big_py * big_py / w);
    let phi1 = if i1 == 0.0 {
        0.0
    } else {
        (w * big_x).atan2(big_px)
    };
    let sign = branch2.sign();
    let phi2 = if i2 == 0.0 {
        0.0
    } else {
        (sign * w * big_y).atan2(sign * big_py)
    };
    ActionAngle {
        phi1,
        phi2,
        i1,
        i2,
        branch2,
    }
}

/// Map to action-angle variables on the negative branch, the one on which
/// the special initial data satisfy `phi1 + phi2 = 0`.
pub fn to_action_angle(s: &PhaseState4, p: &SystemParams) -> ActionAngle {
    to_action_angle_on(s, p, Branch::Negative)
}

/// Inverse of [`to_action_angle`], honoring the stored branch.
pub fn from_action_angle(aa: &ActionAngle, p: &SystemParams) -> PhaseState4 {
    let w = p.omega;
    let s1 = aa.i1.sqrt();
    let s2 = aa.branch2.sign() * aa.i2.sqrt();
    let big_x = (2.0 / w).sqrt() * s1 * aa.phi1.sin();
    let big_px = (2.0 * w).sqrt() * s1 * aa.phi1.cos();
    let big_y = (2.0 / w).sqrt() * s2 * aa.phi2.sin();
    let big_py = (2.0 * w).sqrt() * s2 * aa.phi2.cos();
    PhaseState4 {
        x: (big_x + big_y) * FRAC_1_SQRT_2,
        y: (big_x - big_y) * FRAC_1_SQRT_2,
        px: (big_px + big_py) * FRAC_1_SQRT_2,
        py: (big_px - big_py) * FRAC_1_SQRT_2,
    }
}

fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// First-order perturbation of the Hamiltonian in action-angle variables:
/// the exact mode expansion of
/// `K1 = (P_X - P_Y)(X - Y)/2 * [(X + Y)^2/2 - 1]`
/// under the action-angle substitution. Omega enters symbolically, so the
/// polynomial is parameter-free; its support is eighteen modes and the mean
/// over both angles (mode (0,0)) vanishes.
pub fn k1_modes() -> TrigPolynomial {
    let one = CRational::real(1, 1);
    let position = |block: u8| MonoKey {
        half_i1: (block == 1) as i32,
        half_i2: (block == 2) as i32,
        half_omega: -1,
        sqrt_two: 1,
    };
    let momentum = |block: u8| MonoKey {
        half_i1: (block == 1) as i32,
        half_i2: (block == 2) as i32,
        half_omega: 1,
        sqrt_two: 1,
    };
    let x1 = TrigPolynomial::sin_angle(1, position(1), one);
    let y2 = TrigPolynomial::sin_angle(2, position(2), one);
    let px = TrigPolynomial::cos_angle(1, momentum(1), one);
    let py = TrigPolynomial::cos_angle(2, momentum(2), one);

    let half = CRational::real(1, 2);
    let sum = x1.add(&y2);
    let square_half = sum.mul(&sum).scale(half);
    let bracket = square_half.sub(&TrigPolynomial::constant(MonoKey::ONE, one));
    px.sub(&py).mul(&x1.sub(&y2)).scale(half).mul(&bracket)
}

/// First-order generating function split into its periodic part and the
/// resonant modes that cannot be absorbed.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderGenerator {
    /// Periodic `S1`: every stored mode has `m1 != m2`.
    pub periodic: TrigPolynomial,
    /// Resonant modes of `K1` (`m1 = m2`) excluded by the zero denominator;
    /// they reappear as the first-order residual term.
    pub resonant: TrigPolynomial,
}

/// Solve `w (dS1/dphi1 - dS1/dphi2) + K1 = <K1>` mode by mode:
/// `S1_{m1,m2} = -j K1_{m1,m2} / (w (m1 - m2))`, skipping `m1 = m2`.
pub fn s1_build(k1: &TrigPolynomial) -> FirstOrderGenerator {
    let mut periodic = TrigPolynomial::zero();
    let mut resonant = TrigPolynomial::zero();
    for mode in k1.modes() {
        if mode.m1 == mode.m2 {
            resonant.add_mode(mode.m1, mode.m2, mode.amplitude.clone());
        } else {
            let amp = mode
                .amplitude
                .scale(CRational::imag(-1, 1))
                .scale_rational(Rational64::new(1, (mode.m1 - mode.m2) as i64))
                .shift_omega(-2);
            periodic.add_mode(mode.m1, mode.m2, amp);
        }
    }
    FirstOrderGenerator { periodic, resonant }
}

/// The two conditions that keep the generating function free of secular
/// terms: `(sqrt I1 - sqrt I2)^2 - 4 w = 0` (signed roots) and
/// `phi1 + phi2 = 0`. Returns both residuals; the angle sum is wrapped to
/// `(-pi, pi]`.
pub fn nonperiodic_conditions(aa: &ActionAngle, p: &SystemParams) -> (f64, f64) {
    let root_diff = aa.i1.sqrt() - aa.branch2.sign() * aa.i2.sqrt();
    let action_residual = root_diff * root_diff - 4.0 * p.omega;
    let angle_residual = wrap_angle(aa.phi1 + aa.phi2);
    (action_residual, angle_residual)
}

/// Secular (non-periodic) part of both angle gradients of the generating
/// function, proportional to the unreduced angle `phi1`:
/// `sqrt(I1 I2) phi1 [(I1 + I2 - 4w) cos(phi1+phi2)
///  - 2 sqrt(I1 I2) cos 2(phi1+phi2)] / (4 w^2)`.
/// Vanishes whenever [`nonperiodic_conditions`] hold.
pub fn nonperiodic_gradient(aa: &ActionAngle, p: &SystemParams) -> f64 {
    let w = p.omega;
    let root_prod = aa.i1.sqrt() * aa.branch2.sign() * aa.i2.sqrt();
    let sum = aa.phi1 + aa.phi2;
    root_prod * aa.phi1 / (4.0 * w * w)
        * ((aa.i1 + aa.i2 - 4.0 * w) * sum.cos() - 2.0 * root_prod * (2.0 * sum).cos())
}

/// Initial model state `(x, xdot, y = 0, ydot = 0)` that places the system on
/// the cycle with the first-order action correction
/// `I1(0) = w + eps (2 sin 2 phi10 + sin 4 phi10)/4`.
pub fn special_initial_state(phi10: f64, p: &SystemParams) -> [f64; 4] {
    let w = p.omega;
    let i10 = w + p.epsilon * (2.0 * (2.0 * phi10).sin() + (4.0 * phi10).sin()) / 4.0;
    let x0 = 2.0 * (i10 / w).sqrt() * phi10.sin();
    let v0 = 2.0 * (w * i10).sqrt() * phi10.cos();
    [x0, v0, 0.0, 0.0]
}

/// The two bilinear forms in `(x, xdot, y, ydot)` whose zeros pin the angle
/// sum and the action difference of the unperturbed variables:
/// `b1 = ydot x - y [xdot + eps (x^2 - 1) x]` vanishes iff
/// `sin(phi1 + phi2) = 0`, and
/// `b2 = ydot xdot + y [w^2 x - eps (x^2 - 1) xdot]` vanishes iff `I1 = I2`.
pub fn initial_condition_residuals(m: [f64; 4], p: &SystemParams) -> (f64, f64) {
    let [x, xdot, y, ydot] = m;
    let f = x * x - 1.0;
    let b1 = ydot * x - y * (xdot + p.epsilon * f * x);
    let b2 = ydot * xdot + y * (p.omega * p.omega * x - p.epsilon * f * xdot);
    (b1, b2)
}

/// The twelve-monomial second-order energy in the true actions. Every
/// half-integer power of `I2` evaluates on the signed branch.
pub fn second_order_energy() -> Amplitude {
    let mut amp = Amplitude::zero();
    // (numerator, denominator, half_i1, half_i2, omega power)
    let terms: [(i64, i64, i32, i32, i32); 12] = [
        (11, 64, 5, 1, -3),
        (-3, 8, 3, 1, -2),
        (-11, 256, 6, 0, -3),
        (-55, 256, 4, 2, -3),
        (3, 16, 4, 0, -2),
        (-11, 64, 1, 5, -3),
        (3, 8, 1, 3, -2),
        (55, 256, 2, 4, -3),
        (-1, 8, 2, 0, -1),
        (11, 256, 0, 6, -3),
        (-3, 16, 0, 4, -2),
        (1, 8, 0, 2, -1),
    ];
    for (num, den, h1, h2, w) in terms {
        amp.add_term(
            MonoKey {
                half_i1: h1,
                half_i2: h2,
                half_omega: 2 * w,
                sqrt_two: 0,
            },
            CRational::real(num, den),
        );
    }
    amp
}

/// Second-order energy at the given actions and branch.
pub fn e_r2(i1: f64, i2: f64, branch2: Branch, p: &SystemParams) -> f64 {
    second_order_energy()
        .value(i1, i2, branch2.sign(), p.omega)
        .re
}

/// Symbolic `d(E_R2)/dI1` evaluated at the given point.
pub fn e_r2_d_i1(i1: f64, i2: f64, branch2: Branch, p: &SystemParams) -> f64 {
    second_order_energy()
        .d_action(1)
        .value(i1, i2, branch2.sign(), p.omega)
        .re
}

/// Limit-cycle angular frequency predicted by the perturbation pipeline:
/// `dE0/dI1 + eps^2 dE_R2/dI1` at `I1 = I2 = w` on the negative branch. The
/// first-order residual contributes nothing there. Equals
/// `w - eps^2/(16 w)` up to roundoff.
pub fn predict_frequency(p: &SystemParams) -> f64 {
    let w = p.omega;
    w + p.epsilon * p.epsilon * e_r2_d_i1(w, w, Branch::Negative, p)
}

/// Analytic waveform `x(t) = 2 sin phi1 - (eps/4w) cos 3 phi1` with
/// `phi1 = predict_frequency * t + phi10`.
pub fn predict_waveform(t: f64, phi10: f64, p: &SystemParams) -> f64 {
    let phi1 = predict_frequency(p) * t + phi10;
    2.0 * phi1.sin() - p.epsilon / (4.0 * p.omega) * (3.0 * phi1).cos()
}

/// First-order relation between the true and unperturbed first action:
/// `I1 = I1_0 - eps (2 I1_0 w sin 2 phi + I1_0^2 sin 4 phi)/(4 w^2)`,
/// with the true action substituted by `I1_0` inside the correction.
pub fn action_from_zeroth(i10: f64, phi10: f64, p: &SystemParams) -> f64 {
    let w = p.omega;
    i10 - p.epsilon * (2.0 * i10 * w * (2.0 * phi10).sin() + i10 * i10 * (4.0 * phi10).sin())
        / (4.0 * w * w)
}

/// First-order relation between the true and unperturbed first angle:
/// `phi1 = phi1_0 - eps [(2w - 4 I1) cos 2 phi1_0 + I1 cos 4 phi1_0]/(8 w^2)`.
pub fn angle_from_zeroth(i1: f64, phi10: f64, p: &SystemParams) -> f64 {
    let w = p.omega;
    phi10
        - p.epsilon * ((2.0 * w - 4.0 * i1) * (2.0 * phi10).cos() + i1 * (4.0 * phi10).cos())
            / (8.0 * w * w)
}

/// Constancy report for the corrected action along a trajectory started from
/// [`special_initial_state`].
#[derive(Debug, Clone)]
pub struct ActionRelationsReport {
    /// `max |I1(t) - w|` with `I1` reconstructed through [`action_from_zeroth`].
    pub max_action_deviation: f64,
    /// `max |wrap(phi1 + phi2)|` along the flow.
    pub max_angle_sum: f64,
    /// `max |I1_0(t) - I2_0(t)|`, zero on the special manifold.
    pub max_action_difference: f64,
}

/// Walk a doubled-pair trajectory `(x, xdot, y, ydot)`, lift each state to
/// action-angle variables on the negative branch, and measure how constant
/// the corrected action stays.
pub fn action_relations_check(traj: &Trajectory<4>, p: &SystemParams) -> ActionRelationsReport {
    let mut report = ActionRelationsReport {
        max_action_deviation: 0.0,
        max_angle_sum: 0.0,
        max_action_difference: 0.0,
    };
    for m in traj.states() {
        let [x, xdot, y, ydot] = *m;
        let z = PhaseState4 {
            x,
            y,
            px: ydot - p.epsilon * (x * x - 1.0) * y,
            py: xdot,
        };
        let aa = to_action_angle(&z, p);
        let i1 = action_from_zeroth(aa.i1, aa.phi1, p);
        report.max_action_deviation = report.max_action_deviation.max((i1 - p.omega).abs());
        report.max_angle_sum = report
            .max_angle_sum
            .max(wrap_angle(aa.phi1 + aa.phi2).abs());
        report.max_action_difference = report.max_action_difference.max((aa.i1 - aa.i2).abs());
    }
    report
}

/// Root-mean-square deviation between one measured cycle and the analytic
/// waveform, phase-aligned through the measured fundamental.
pub fn waveform_rms_vs_cycle(cycle: &CycleSamples, p: &SystemParams) -> f64 {
    let n = cycle.xs.len();
    let mut acc = 0.0;
    for (i, &x) in cycle.xs.iter().enumerate() {
        let theta = 2.0 * PI * i as f64 / n as f64 + cycle.fundamental_phase;
        let predicted = 2.0 * theta.sin() - p.epsilon / (4.0 * p.omega) * (3.0 * theta).cos();
        acc += (x - predicted) * (x - predicted);
    }
    (acc / n as f64).sqrt()
}
