//! Explicit ODE integration: adaptive Dormand–Prince 5(4) with dense output,
//! a fixed-step RK4, and event detection by root refinement on the interpolant.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IntegrateError {
    /// Local error control cannot advance; `t` is the best estimate of the
    /// blow-up time.
    #[error("step size underflow at t = {t:.6e} (trajectory blow-up?)")]
    StepSizeUnderflow { t: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("step budget of {0} exceeded")]
    TooManySteps(usize),
    #[error("trajectory carries no dense output")]
    NoDenseOutput,
    #[error("sample time {t} outside the integrated span")]
    SampleOutOfRange { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Embedded Dormand–Prince 5(4) with adaptive steps.
    Dopri5,
    /// Classical RK4 with the given fixed step.
    FixedRk4 { step: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub method: Method,
    /// Keep the per-step interpolant. Required for sampling and events.
    pub dense: bool,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
            method: Method::Dopri5,
            dense: true,
            max_steps: 20_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tol(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), IntegrateError> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(IntegrateError::InvalidConfig(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        if self.max_step.is_nan() || self.max_step <= 0.0 {
            return Err(IntegrateError::InvalidConfig(format!(
                "max_step must be positive, got {}",
                self.max_step
            )));
        }
        if let Method::FixedRk4 { step } = self.method {
            if !(step > 0.0 && step.is_finite()) {
                return Err(IntegrateError::InvalidConfig(format!(
                    "fixed RK4 step must be positive and finite, got {step}"
                )));
            }
        }
        Ok(())
    }
}

/// One accepted step's interpolant. Evaluation uses the nested form
/// `c1 + th*(c2 + (1-th)*(c3 + th*(c4 + (1-th)*c5)))` with `th = (t-t0)/h`;
/// with `c5 = 0` this is exactly the cubic Hermite interpolant.
#[derive(Debug, Clone)]
struct DenseSegment<const N: usize> {
    t0: f64,
    h: f64,
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseSegment<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for i in 0..N {
            let c = &self.cont;
            out[i] = c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i])));
        }
        out
    }
}

/// Result of an integration: accepted step points plus, when requested, a
/// piecewise interpolant covering the whole span.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    times: Vec<f64>,
    states: Vec<[f64; N]>,
    segments: Option<Vec<DenseSegment<N>>>,
}

impl<const N: usize> Trajectory<N> {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[[f64; N]] {
        &self.states
    }

    pub fn is_dense(&self) -> bool {
        self.segments.is_some()
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn last_state(&self) -> [f64; N] {
        *self.states.last().unwrap()
    }

    /// Interpolated state at `t`, which must lie inside the integrated span.
    pub fn sample(&self, t: f64) -> Result<[f64; N], IntegrateError> {
        let segments = self
            .segments
            .as_ref()
            .ok_or(IntegrateError::NoDenseOutput)?;
        let slack = 1e-9 * (self.t_end() - self.t_start()).abs().max(1.0);
        if t < self.t_start() - slack || t > self.t_end() + slack {
            return Err(IntegrateError::SampleOutOfRange { t });
        }
        let t = t.clamp(self.t_start(), self.t_end());
        // index of the segment whose [t0, t0+h] contains t
        let idx = match self.times.binary_search_by(|probe| probe.total_cmp(&t)) {
            Ok(i) => i.min(segments.len().saturating_sub(1)),
            Err(i) => i.saturating_sub(1).min(segments.len().saturating_sub(1)),
        };
        Ok(segments[idx].eval(t))
    }
}

/// Integrate `dy/dt = rhs(t, y)` forward over `t_span`.
pub fn integrate<const N: usize>(
    rhs: impl Fn(f64, &[f64; N]) -> [f64; N],
    y0: [f64; N],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory<N>, IntegrateError> {
    cfg.validate()?;
    let (t0, t_end) = t_span;
    if t_end.is_nan() || t0.is_nan() || t_end <= t0 {
        return Err(IntegrateError::InvalidConfig(format!(
            "t_span must be increasing, got ({t0}, {t_end})"
        )));
    }
    match cfg.method {
        Method::Dopri5 => dopri5(rhs, y0, t0, t_end, cfg),
        Method::FixedRk4 { step } => rk4(rhs, y0, t0, t_end, step, cfg),
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn rms_scaled<const N: usize>(v: &[f64; N], scale: &[f64; N]) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        let q = v[i] / scale[i];
        s += q * q;
    }
    (s / N as f64).sqrt()
}

fn initial_step<const N: usize>(
    rhs: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    cfg: &IntegratorConfig,
    span: f64,
) -> f64 {
    let mut scale = [0.0; N];
    for i in 0..N {
        scale[i] = cfg.abs_tol + cfg.rel_tol * y0[i].abs();
    }
    let d0 = rms_scaled(y0, &scale);
    let d1 = rms_scaled(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span).min(cfg.max_step);
    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y0[i] + h0 * f0[i];
    }
    let f1 = rhs(t0 + h0, &y1);
    let mut df = [0.0; N];
    for i in 0..N {
        df[i] = f1[i] - f0[i];
    }
    let d2 = rms_scaled(&df, &scale) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span).min(cfg.max_step)
}

fn dopri5<const N: usize>(
    rhs: impl Fn(f64, &[f64; N]) -> [f64; N],
    y0: [f64; N],
    t0: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<N>, IntegrateError> {
    const SAFE: f64 = 0.9;
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 10.0;

    let mut times = vec![t0];
    let mut states = vec![y0];
    let mut segments = cfg.dense.then(Vec::new);

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = initial_step(&rhs, t0, &y0, &k1, cfg, t_end - t0);
    let mut rejected = false;
    let mut n_steps = 0usize;

    while t < t_end {
        n_steps += 1;
        if n_steps > cfg.max_steps {
            return Err(IntegrateError::TooManySteps(cfg.max_steps));
        }
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(IntegrateError::StepSizeUnderflow { t });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        let mut k = [[0.0; N]; 7];
        k[0] = k1;
        for stage in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[stage] = rhs(t + C[stage] * h, &ys);
        }
        // stage 7 reuses the 5th-order solution node: y_new is the A[6] combination
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let a = A[6][j];
            if a != 0.0 {
                for i in 0..N {
                    y_new[i] += h * a * kj[i];
                }
            }
        }

        let mut err_vec = [0.0; N];
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                for i in 0..N {
                    err_vec[i] += h * E[j] * kj[i];
                }
            }
        }
        let mut scale = [0.0; N];
        for i in 0..N {
            scale[i] = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
        }
        let err = rms_scaled(&err_vec, &scale);

        if err <= 1.0 {
            if let Some(segs) = segments.as_mut() {
                let mut cont = [[0.0; N]; 5];
                for i in 0..N {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k[0][i] - ydiff;
                    cont[0][i] = y[i];
                    cont[1][i] = ydiff;
                    cont[2][i] = bspl;
                    cont[3][i] = ydiff - h * k[6][i] - bspl;
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate() {
                        if D[j] != 0.0 {
                            acc += D[j] * kj[i];
                        }
                    }
                    cont[4][i] = h * acc;
                }
                segs.push(DenseSegment { t0: t, h, cont });
            }
            t = if last { t_end } else { t + h };
            y = y_new;
            k1 = k[6];
            times.push(t);
            states.push(y);

            let fac = if err == 0.0 {
                FAC_MAX
            } else {
                (SAFE * err.powf(-0.2)).clamp(FAC_MIN, if rejected { 1.0 } else { FAC_MAX })
            };
            h = (h * fac).min(cfg.max_step);
            rejected = false;
        } else {
            h *= (SAFE * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
            rejected = true;
        }
    }

    Ok(Trajectory {
        times,
        states,
        segments,
    })
}

fn rk4<const N: usize>(
    rhs: impl Fn(f64, &[f64; N]) -> [f64; N],
    y0: [f64; N],
    t0: f64,
    t_end: f64,
    step: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<N>, IntegrateError> {
    let mut times = vec![t0];
    let mut states = vec![y0];
    let mut segments = cfg.dense.then(Vec::new);

    let mut t = t0;
    let mut y = y0;
    let mut f_left = rhs(t, &y);
    let mut n_steps = 0usize;
    while t < t_end {
        n_steps += 1;
        if n_steps > cfg.max_steps {
            return Err(IntegrateError::TooManySteps(cfg.max_steps));
        }
        let h = step.min(t_end - t);
        let k1 = f_left;
        let mut ys = [0.0; N];
        for i in 0..N {
            ys[i] = y[i] + 0.5 * h * k1[i];
        }
        let k2 = rhs(t + 0.5 * h, &ys);
        for i in 0..N {
            ys[i] = y[i] + 0.5 * h * k2[i];
        }
        let k3 = rhs(t + 0.5 * h, &ys);
        for i in 0..N {
            ys[i] = y[i] + h * k3[i];
        }
        let k4 = rhs(t + h, &ys);
        let mut y_new = y;
        for i in 0..N {
            y_new[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let f_right = rhs(t + h, &y_new);
        if let Some(segs) = segments.as_mut() {
            // cubic Hermite: same nested form with the fifth coefficient zero
            let mut cont = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * f_right[i] - bspl;
            }
            segs.push(DenseSegment { t0: t, h, cont });
        }
        t += h;
        y = y_new;
        f_left = f_right;
        times.push(t);
        states.push(y);
    }

    Ok(Trajectory {
        times,
        states,
        segments,
    })
}

/// Which sign changes of the event function count as events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Both,
}

/// Event specification: a scalar function of `(t, state)` whose directed zero
/// crossings are located on the dense interpolant.
pub struct EventSpec<G> {
    pub g: G,
    pub direction: Direction,
    /// Stop after this many events (`None` keeps them all).
    pub max_events: Option<usize>,
}

impl<G> EventSpec<G> {
    pub fn new(g: G, direction: Direction) -> Self {
        Self {
            g,
            direction,
            max_events: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Event<const N: usize> {
    pub t: f64,
    pub state: [f64; N],
}

/// Locate directed zero crossings of `spec.g` along a dense trajectory.
///
/// Each accepted step is subsampled to bracket crossings, then each bracket is
/// refined by bisection followed by secant polish to about `1e-12` relative
/// accuracy in time. Returns an empty list when the sign never changes.
pub fn find_events<const N: usize, G: Fn(f64, &[f64; N]) -> f64>(
    traj: &Trajectory<N>,
    spec: &EventSpec<G>,
) -> Result<Vec<Event<N>>, IntegrateError> {
    if !traj.is_dense() {
        return Err(IntegrateError::NoDenseOutput);
    }
    const SUBSAMPLES: usize = 8;
    let mut events = Vec::new();
    let times = traj.times();

    let eval_g = |t: f64| -> f64 { (spec.g)(t, &traj.sample(t).expect("t inside span")) };

    'outer: for w in times.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let mut prev_t = ta;
        let mut prev_g = eval_g(ta);
        for s in 1..=SUBSAMPLES {
            let ts = ta + (tb - ta) * s as f64 / SUBSAMPLES as f64;
            let gs = eval_g(ts);
            let crossing = match spec.direction {
                Direction::Rising => prev_g < 0.0 && gs >= 0.0,
                Direction::Falling => prev_g > 0.0 && gs <= 0.0,
                Direction::Both => (prev_g < 0.0 && gs >= 0.0) || (prev_g > 0.0 && gs <= 0.0),
            };
            if crossing {
                let t_ev = refine_root(&eval_g, prev_t, ts, prev_g, gs);
                events.push(Event {
                    t: t_ev,
                    state: traj.sample(t_ev)?,
                });
                if let Some(max) = spec.max_events {
                    if events.len() >= max {
                        break 'outer;
                    }
                }
            }
            prev_t = ts;
            prev_g = gs;
        }
    }
    Ok(events)
}

fn refine_root(g: &impl Fn(f64) -> f64, a0: f64, b0: f64, ga0: f64, gb0: f64) -> f64 {
    let (mut a, mut b, mut ga, mut gb) = (a0, b0, ga0, gb0);
    if ga == 0.0 {
        return a;
    }
    let tol = |t: f64| 1e-13 * t.abs().max(1.0);
    for _ in 0..80 {
        if (b - a).abs() <= tol(b) {
            break;
        }
        let m = 0.5 * (a + b);
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
            gb = gm;
        }
    }
    // secant polish inside the final bracket
    let (mut t0, mut t1, mut g0, mut g1) = (a, b, ga, gb);
    for _ in 0..4 {
        if g1 == g0 {
            break;
        }
        let t2 = t1 - g1 * (t1 - t0) / (g1 - g0);
        if !(t2 > a && t2 < b) {
            break;
        }
        t0 = t1;
        g0 = g1;
        t1 = t2;
        g1 = g(t2);
        if g1 == 0.0 {
            break;
        }
    }
    t1
}
