//! Numerical limit-cycle measurement and Hill/Floquet analysis of the
//! auxiliary variable.
//!
//! The measurement path integrates only the physical two-dimensional block:
//! the coupling is unidirectional, so the auxiliary state can never alter any
//! x-quantity reported here. The auxiliary block's parametric-resonance
//! growth is quantified separately through the monodromy of the Hill
//! equation obeyed by its envelope-stripped component.

use crate::integrate::{
    find_events, integrate, Direction, EventSpec, IntegrateError, IntegratorConfig,
};
use crate::models::{vdp_pair_rhs, vdp_rhs, SystemParams};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no stable limit cycle: epsilon = {0} is not positive")]
    EpsilonNotPositive(f64),
    #[error("found {found} zero crossings, need {needed}; settle time too short?")]
    TooFewCrossings { found: usize, needed: usize },
    #[error("auxiliary variable blew up at t = {t:.3e} after {periods_completed} whole periods")]
    AuxiliaryBlowUp { t: f64, periods_completed: usize },
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

/// Default transient horizon: the radial relaxation rate is of order epsilon,
/// so 30/epsilon suppresses the transient by roughly e^-30.
pub fn default_settle_time(epsilon: f64) -> f64 {
    30.0 / epsilon
}

/// Default number of periods averaged in a measurement.
pub const DEFAULT_N_PERIODS: usize = 20;

/// Samples for waveform quadrature over one measured period.
const HARMONIC_SAMPLES: usize = 4096;

/// Measured properties of the Van der Pol limit cycle.
#[derive(Debug, Clone, Serialize)]
pub struct LimitCycleReport {
    /// Mean gap between successive rising zero crossings of x.
    pub period: f64,
    /// Angular frequency `2 pi / period`.
    pub frequency: f64,
    /// Peak `|x|` over the cycle, refined at velocity zeros.
    pub amplitude: f64,
    /// Magnitudes of the first five Fourier harmonics of x over one period.
    pub harmonics: [f64; 5],
    /// Transient horizon that was discarded before measuring.
    pub settle_time: f64,
}

/// One dense period of the settled cycle, phase-referenced at a rising zero.
#[derive(Debug, Clone)]
pub struct CycleSamples {
    pub period: f64,
    /// Uniform samples of x over `[t0, t0 + period)`, `t0` a rising zero.
    pub xs: Vec<f64>,
    /// Phase `psi` of the fundamental, `x ~ c1 sin(2 pi tau / period + psi)`
    /// with `tau` measured from the rising zero; small for small epsilon.
    pub fundamental_phase: f64,
}

/// Measure the limit cycle from the default start `(x, xdot) = (0.5, 0)`.
pub fn measure_limit_cycle(
    p: &SystemParams,
    cfg: &IntegratorConfig,
    settle_time: f64,
    n_periods: usize,
) -> Result<LimitCycleReport, AnalysisError> {
    measure_limit_cycle_from([0.5, 0.0], p, cfg, settle_time, n_periods).map(|(r, _)| r)
}

/// Measurement plus the dense one-period samples used for waveform work.
pub fn measure_limit_cycle_with_samples(
    p: &SystemParams,
    cfg: &IntegratorConfig,
    settle_time: f64,
    n_periods: usize,
) -> Result<(LimitCycleReport, CycleSamples), AnalysisError> {
    measure_limit_cycle_from([0.5, 0.0], p, cfg, settle_time, n_periods)
}

/// Measure the limit cycle starting the transient from `start`.
pub fn measure_limit_cycle_from(
    start: [f64; 2],
    p: &SystemParams,
    cfg: &IntegratorConfig,
    settle_time: f64,
    n_periods: usize,
) -> Result<(LimitCycleReport, CycleSamples), AnalysisError> {
    if p.epsilon <= 0.0 {
        return Err(AnalysisError::EpsilonNotPositive(p.epsilon));
    }
    let settled = integrate(
        |_, s: &[f64; 2]| vdp_rhs(*s, p),
        start,
        (0.0, settle_time),
        &IntegratorConfig {
            dense: false,
            ..*cfg
        },
    )?
    .last_state();

    // a couple of spare periods so n_periods + 1 rising zeros always fit
    let horizon = (n_periods as f64 + 2.5) * 2.2 * std::f64::consts::PI / p.omega;
    let traj = integrate(
        |_, s: &[f64; 2]| vdp_rhs(*s, p),
        settled,
        (0.0, horizon),
        &IntegratorConfig {
            dense: true,
            ..*cfg
        },
    )?;

    let rising = find_events(
        &traj,
        &EventSpec::new(|_t: f64, s: &[f64; 2]| s[0], Direction::Rising),
    )?;
    if rising.len() < n_periods + 1 {
        return Err(AnalysisError::TooFewCrossings {
            found: rising.len(),
            needed: n_periods + 1,
        });
    }
    let t0 = rising[0].t;
    let period = (rising[n_periods].t - t0) / n_periods as f64;
    let frequency = 2.0 * std::f64::consts::PI / period;

    // peak |x| at the velocity zeros inside the measured window
    let extrema = find_events(
        &traj,
        &EventSpec::new(|_t: f64, s: &[f64; 2]| s[1], Direction::Both),
    )?;
    let amplitude = extrema
        .iter()
        .filter(|ev| ev.t >= t0 && ev.t <= rising[n_periods].t)
        .map(|ev| ev.state[0].abs())
        .fold(0.0f64, f64::max);

    // harmonic quadrature over one period from the phase reference t0
    let n = HARMONIC_SAMPLES;
    let mut xs = Vec::with_capacity(n);
    for i in 0..n {
        let t = t0 + period * i as f64 / n as f64;
        xs.push(traj.sample(t)?[0]);
    }
    let mut harmonics = [0.0; 5];
    let mut fundamental_phase = 0.0;
    for (k, h) in harmonics.iter_mut().enumerate() {
        let k1 = (k + 1) as f64;
        let mut a = 0.0;
        let mut b = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let phase = 2.0 * std::f64::consts::PI * k1 * i as f64 / n as f64;
            a += x * phase.cos();
            b += x * phase.sin();
        }
        a *= 2.0 / n as f64;
        b *= 2.0 / n as f64;
        *h = a.hypot(b);
        if k == 0 {
            fundamental_phase = a.atan2(b);
        }
    }

    Ok((
        LimitCycleReport {
            period,
            frequency,
            amplitude,
            harmonics,
            settle_time,
        },
        CycleSamples {
            period,
            xs,
            fundamental_phase,
        },
    ))
}

/// Periodic coefficient of the Hill equation governing the envelope-stripped
/// auxiliary variable on the limit cycle:
/// `p(t) = w^2 - eps^2 (1 - 4 cos^2 wt)^2 / 4 - 2 eps w sin 2wt`.
pub fn hill_p(t: f64, p: &SystemParams) -> f64 {
    let w = p.omega;
    let c = (w * t).cos();
    let q = 1.0 - 4.0 * c * c;
    w * w - p.epsilon * p.epsilon * q * q / 4.0 - 2.0 * p.epsilon * w * (2.0 * w * t).sin()
}

/// Monodromy period choice for the Hill analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HillPeriod {
    /// The forcing period `2 pi / w` of the underlying cycle.
    Full,
    /// The minimal period `pi / w` of the Hill coefficient; multipliers over
    /// the full period are the squares of these.
    Minimal,
}

/// Floquet data for the auxiliary variable's Hill equation.
#[derive(Debug, Clone, Serialize)]
pub struct FloquetReport {
    /// Fundamental solution matrix over one period, columns from (1,0), (0,1).
    pub monodromy: [[f64; 2]; 2],
    /// Eigenvalues of the monodromy matrix as (re, im) pairs.
    pub multipliers: [[f64; 2]; 2],
    pub max_multiplier_magnitude: f64,
    /// Growth of the stripped envelope `exp[(eps/2)(T + sin(2wT)/w)]` over the
    /// period; `e^{eps pi / w}` for the full period.
    pub envelope_factor_per_period: f64,
    /// Predicted per-period growth of the auxiliary norm:
    /// `max |multiplier| * envelope factor`.
    pub combined_growth_per_period: f64,
    /// Set when the combined growth exceeds one.
    pub resonant: bool,
    pub period: f64,
}

impl FloquetReport {
    pub fn determinant(&self) -> f64 {
        self.monodromy[0][0] * self.monodromy[1][1] - self.monodromy[0][1] * self.monodromy[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.monodromy[0][0] + self.monodromy[1][1]
    }

    pub fn multipliers_complex(&self) -> [Complex64; 2] {
        [
            Complex64::new(self.multipliers[0][0], self.multipliers[0][1]),
            Complex64::new(self.multipliers[1][0], self.multipliers[1][1]),
        ]
    }
}

/// Monodromy of `u'' + p(t) u = 0` over the full period `2 pi / w`.
pub fn monodromy(p: &SystemParams, cfg: &IntegratorConfig) -> Result<FloquetReport, AnalysisError> {
    monodromy_over(p, cfg, HillPeriod::Full)
}

/// Monodromy over a selectable period of the Hill coefficient.
pub fn monodromy_over(
    p: &SystemParams,
    cfg: &IntegratorConfig,
    which: HillPeriod,
) -> Result<FloquetReport, AnalysisError> {
    let period = match which {
        HillPeriod::Full => 2.0 * std::f64::consts::PI / p.omega,
        HillPeriod::Minimal => std::f64::consts::PI / p.omega,
    };
    let cfg = IntegratorConfig {
        dense: false,
        ..*cfg
    };
    let mut monodromy = [[0.0; 2]; 2];
    for (col, u0) in [[1.0, 0.0], [0.0, 1.0]].into_iter().enumerate() {
        let end = integrate(
            |t, u: &[f64; 2]| [u[1], -hill_p(t, p) * u[0]],
            u0,
            (0.0, period),
            &cfg,
        )?
        .last_state();
        monodromy[0][col] = end[0];
        monodromy[1][col] = end[1];
    }
    let tr = monodromy[0][0] + monodromy[1][1];
    let det = monodromy[0][0] * monodromy[1][1] - monodromy[0][1] * monodromy[1][0];
    let disc = Complex64::new(tr * tr - 4.0 * det, 0.0).sqrt();
    let mu1 = (Complex64::new(tr, 0.0) + disc) / 2.0;
    let mu2 = (Complex64::new(tr, 0.0) - disc) / 2.0;
    let max_mag = mu1.norm().max(mu2.norm());
    let w = p.omega;
    let envelope = (0.5 * p.epsilon * (period + (2.0 * w * period).sin() / w)).exp();
    let combined = max_mag * envelope;
    Ok(FloquetReport {
        monodromy,
        multipliers: [[mu1.re, mu1.im], [mu2.re, mu2.im]],
        max_multiplier_magnitude: max_mag,
        envelope_factor_per_period: envelope,
        combined_growth_per_period: combined,
        resonant: combined > 1.0,
        period,
    })
}

/// Predicted versus directly measured growth of the auxiliary variable.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthCheck {
    /// Floquet-times-envelope growth factor per period.
    pub predicted_per_period: f64,
    /// Geometric-mean growth of `|(y, ydot)|` per period along the coupled
    /// flow, fitted over the second half of the horizon.
    pub measured_per_period: f64,
    /// predicted / measured.
    pub ratio: f64,
    /// Norm of the auxiliary state at each whole period.
    pub period_norms: Vec<f64>,
}

/// Integrate the true coupled pair with the physical block settled on the
/// cycle and `(y, ydot) = (1, 0)`, then compare the measured per-period growth
/// of the auxiliary norm against the Floquet-times-envelope prediction.
pub fn auxiliary_growth_check(
    p: &SystemParams,
    cfg: &IntegratorConfig,
    n_periods: usize,
) -> Result<GrowthCheck, AnalysisError> {
    let floquet = monodromy(p, cfg)?;
    let period = floquet.period;

    let start = if p.epsilon > 0.0 {
        integrate(
            |_, s: &[f64; 2]| vdp_rhs(*s, p),
            [2.0, 0.0],
            (0.0, default_settle_time(p.epsilon)),
            &IntegratorConfig {
                dense: false,
                ..*cfg
            },
        )?
        .last_state()
    } else {
        [2.0, 0.0]
    };

    let horizon = period * n_periods as f64;
    let traj = integrate(
        |_, s: &[f64; 4]| vdp_pair_rhs(*s, p),
        [start[0], start[1], 1.0, 0.0],
        (0.0, horizon),
        &IntegratorConfig {
            dense: true,
            ..*cfg
        },
    )
    .map_err(|e| match e {
        IntegrateError::StepSizeUnderflow { t } => AnalysisError::AuxiliaryBlowUp {
            t,
            periods_completed: (t / period) as usize,
        },
        other => AnalysisError::Integrate(other),
    })?;

    let mut period_norms = Vec::with_capacity(n_periods + 1);
    for k in 0..=n_periods {
        let s = traj.sample(period * k as f64)?;
        period_norms.push(s[2].hypot(s[3]));
    }
    // fit over the second half so the decaying Floquet mode has died down
    let half = n_periods / 2;
    let measured =
        (period_norms[n_periods] / period_norms[half]).powf(1.0 / (n_periods - half) as f64);
    Ok(GrowthCheck {
        predicted_per_period: floquet.combined_growth_per_period,
        measured_per_period: measured,
        ratio: floquet.combined_growth_per_period / measured,
        period_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    #[test]
    fn small_epsilon_frequency_matches_quadratic_shift() {
        let p = SystemParams::vdp(0.01, 1.0);
        let report =
            measure_limit_cycle(&p, &cfg(), default_settle_time(0.01), DEFAULT_N_PERIODS).unwrap();
        // predicted 1 - eps^2/16 = 0.99999375
        assert!(
            (report.frequency - 0.99999375).abs() < 1e-7,
            "frequency {}",
            report.frequency
        );
    }

    #[test]
    fn amplitude_is_near_two() {
        let p = SystemParams::vdp(0.1, 1.0);
        let report =
            measure_limit_cycle(&p, &cfg(), default_settle_time(0.1), DEFAULT_N_PERIODS).unwrap();
        assert!(
            report.amplitude > 1.95 && report.amplitude < 2.05,
            "amplitude {}",
            report.amplitude
        );
    }

    #[test]
    fn third_harmonic_matches_quarter_epsilon() {
        let p = SystemParams::vdp(0.1, 1.0);
        let report =
            measure_limit_cycle(&p, &cfg(), default_settle_time(0.1), DEFAULT_N_PERIODS).unwrap();
        let expected = 0.1 / 4.0;
        assert!(
            (report.harmonics[2] - expected).abs() < 0.2 * expected,
            "third harmonic {} vs {}",
            report.harmonics[2],
            expected
        );
        // fundamental dominates, even harmonics are tiny, and the peak
        // amplitude tracks the fundamental
        assert!(report.harmonics[0] > 1.9);
        assert!(report.harmonics[1] < 0.01);
        assert!((report.amplitude - report.harmonics[0]).abs() < 0.05 * report.harmonics[0]);
    }

    #[test]
    fn frequency_band_at_moderate_epsilon() {
        let p = SystemParams::vdp(0.2, 1.0);
        let report =
            measure_limit_cycle(&p, &cfg(), default_settle_time(0.2), DEFAULT_N_PERIODS).unwrap();
        let predicted = 1.0 - 0.2 * 0.2 / 16.0;
        assert!(
            (report.frequency - predicted).abs() <= 0.02 * 0.2f64.powi(3) + 5e-7,
            "frequency {} vs {}",
            report.frequency,
            predicted
        );
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        let p = SystemParams::vdp(-0.1, 1.0);
        assert!(matches!(
            measure_limit_cycle(&p, &cfg(), 10.0, 5),
            Err(AnalysisError::EpsilonNotPositive(_))
        ));
    }

    #[test]
    fn initial_condition_independence() {
        let p = SystemParams::vdp(0.1, 1.0);
        let settle = default_settle_time(0.1);
        let (a, _) = measure_limit_cycle_from([0.5, 0.0], &p, &cfg(), settle, 20).unwrap();
        let (b, _) = measure_limit_cycle_from([-1.3, 0.7], &p, &cfg(), settle, 20).unwrap();
        assert!(
            (a.period - b.period).abs() < 1e-7,
            "periods {} vs {}",
            a.period,
            b.period
        );
    }

    #[test]
    fn x_report_identical_with_auxiliary_integrated() {
        // measure on the 2D block, then re-measure periods from the full 4D
        // flow with a nonzero auxiliary state: x-quantities must agree
        let p = SystemParams::vdp(0.1, 1.0);
        let settle = default_settle_time(0.1);
        let (report, _) = measure_limit_cycle_with_samples(&p, &cfg(), settle, 10).unwrap();

        let settled = integrate(
            |_, s: &[f64; 2]| vdp_rhs(*s, &p),
            [0.5, 0.0],
            (0.0, settle),
            &IntegratorConfig {
                dense: false,
                ..cfg()
            },
        )
        .unwrap()
        .last_state();
        let traj = integrate(
            |_, s: &[f64; 4]| vdp_pair_rhs(*s, &p),
            [settled[0], settled[1], 0.3, -0.2],
            (0.0, 11.0 * 2.2 * PI),
            &cfg(),
        )
        .unwrap();
        let rising = find_events(
            &traj,
            &EventSpec::new(|_t: f64, s: &[f64; 4]| s[0], Direction::Rising),
        )
        .unwrap();
        assert!(rising.len() >= 11);
        let period_4d = (rising[10].t - rising[0].t) / 10.0;
        assert!(
            (period_4d - report.period).abs() < 1e-8,
            "4D period {} vs 2D {}",
            period_4d,
            report.period
        );
    }

    #[test]
    fn hill_coefficient_values() {
        let p0 = SystemParams::vdp(0.0, 1.3);
        for &t in &[0.0, 0.7, 2.1] {
            assert_relative_eq!(hill_p(t, &p0), 1.69, epsilon = 1e-14);
        }
        let p = SystemParams::vdp(0.1, 1.0);
        assert_relative_eq!(hill_p(0.0, &p), 0.9775, epsilon = 1e-14);
        assert_relative_eq!(hill_p(PI / 4.0, &p), 0.7975, epsilon = 1e-12);
    }

    #[test]
    fn hill_coefficient_is_periodic() {
        let p = SystemParams::vdp(0.17, 1.4);
        let period = 2.0 * PI / p.omega;
        for k in 0..40 {
            let t = 0.17 * k as f64;
            assert_relative_eq!(hill_p(t + period, &p), hill_p(t, &p), epsilon = 1e-10);
        }
    }

    #[test]
    fn monodromy_at_zero_epsilon_is_identity() {
        let p = SystemParams::vdp(0.0, 1.0);
        let report = monodromy(&p, &cfg()).unwrap();
        assert!(
            (report.trace() - 2.0).abs() < 1e-9,
            "trace {}",
            report.trace()
        );
        assert!((report.monodromy[0][0] - 1.0).abs() < 1e-9);
        assert!((report.monodromy[1][1] - 1.0).abs() < 1e-9);
        assert!(report.monodromy[0][1].abs() < 1e-9);
        assert!(report.monodromy[1][0].abs() < 1e-9);
        for mu in report.multipliers_complex() {
            assert!((mu - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
        assert_relative_eq!(report.envelope_factor_per_period, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn monodromy_determinant_is_unity() {
        for eps in [0.05, 0.1, 0.2] {
            let p = SystemParams::vdp(eps, 1.0);
            let report = monodromy(&p, &cfg()).unwrap();
            assert!(
                (report.determinant() - 1.0).abs() < 1e-8,
                "det {}",
                report.determinant()
            );
        }
    }

    #[test]
    fn envelope_factor_over_full_period() {
        let p = SystemParams::vdp(0.1, 1.0);
        let report = monodromy(&p, &cfg()).unwrap();
        assert_relative_eq!(
            report.envelope_factor_per_period,
            (0.1 * PI).exp(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn resonant_growth_at_positive_epsilon() {
        let p = SystemParams::vdp(0.1, 1.0);
        let report = monodromy(&p, &cfg()).unwrap();
        assert!(report.combined_growth_per_period > 1.0);
        assert!(report.resonant);
    }

    #[test]
    fn full_period_multipliers_are_squares_of_minimal() {
        let p = SystemParams::vdp(0.08, 1.0);
        let full = monodromy_over(&p, &cfg(), HillPeriod::Full).unwrap();
        let min = monodromy_over(&p, &cfg(), HillPeriod::Minimal).unwrap();
        // compare by magnitude and eigenvalue set (squaring may swap order)
        let squares: Vec<Complex64> = min.multipliers_complex().iter().map(|m| m * m).collect();
        for mu in full.multipliers_complex() {
            let closest = squares
                .iter()
                .map(|s| (s - mu).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(closest < 1e-7, "multiplier {mu} vs squares {squares:?}");
        }
    }

    #[test]
    fn growth_ratio_is_one_without_nonlinearity() {
        let p = SystemParams::vdp(0.0, 1.0);
        let check = auxiliary_growth_check(&p, &cfg(), 10).unwrap();
        assert_relative_eq!(check.measured_per_period, 1.0, epsilon = 1e-8);
        assert_relative_eq!(check.ratio, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn growth_prediction_close_at_small_epsilon() {
        let p = SystemParams::vdp(0.05, 1.0);
        let check = auxiliary_growth_check(&p, &cfg(), 10).unwrap();
        assert!(
            check.ratio > 0.8 && check.ratio < 1.25,
            "ratio {} (predicted {}, measured {})",
            check.ratio,
            check.predicted_per_period,
            check.measured_per_period
        );
    }

    #[test]
    fn envelope_maxima_increase_monotonically() {
        let p = SystemParams::vdp(0.1, 1.0);
        let check = auxiliary_growth_check(&p, &cfg(), 10).unwrap();
        for w in check.period_norms.windows(2).skip(1) {
            assert!(w[1] > w[0], "norms {:?}", check.period_norms);
        }
    }
}
