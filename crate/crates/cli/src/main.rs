//! Command-line front end: simulate the doubled oscillator models, measure
//! limit cycles, run the Hill/Floquet analysis, print the perturbation
//! predictions, and check conservation laws.
//!
//! Exit codes: 0 on success, 1 on configuration errors (with a field
//! diagnostic), 2 on numerical failures (blow-up, missing crossings, failed
//! conservation check) with partial output where available.

mod config;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use config::{resolve, validate_params, FileConfig, ParamArgs};
use dualosc::analysis::{
    auxiliary_growth_check, default_settle_time, measure_limit_cycle, monodromy_over,
    AnalysisError, HillPeriod, DEFAULT_N_PERIODS,
};
use dualosc::hamiltonians::{
    conservation_drift, galley_decompose, GaugeSplit, Hamiltonian, HamiltonianError,
};
use dualosc::integrate::{integrate, IntegrateError};
use dualosc::models::{
    dsho_rhs, forced_vdp_pair_rhs, symmetric_ab_rhs, vdp_pair_rhs, PhaseState4, State2,
};
use dualosc::perturb::{k1_modes, predict_frequency, s1_build};
use output::{emit, num, CsvWriter};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<IntegrateError> for CliError {
    fn from(e: IntegrateError) -> Self {
        match e {
            IntegrateError::InvalidConfig(msg) => CliError::Config(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<HamiltonianError> for CliError {
    fn from(e: HamiltonianError) -> Self {
        match e {
            HamiltonianError::Integrate(inner) => inner.into(),
            HamiltonianError::NotAutonomous { .. }
            | HamiltonianError::MissingForcing
            | HamiltonianError::InconsistentSplit { .. }
            | HamiltonianError::NegativeAmplitude(_)
            | HamiltonianError::UnknownPairing { .. } => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "dualosc",
    about = "Doubled-oscillator Hamiltonian toolkit: simulation, limit-cycle \
             measurement, Floquet analysis, and canonical perturbation predictions",
    version
)]
struct Cli {
    /// Flat TOML config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelTag {
    /// Van der Pol plus auxiliary partner.
    Vdp,
    /// Symmetric doubled system with the beta y^2 term.
    Symmetric,
    /// Externally and parametrically forced pair.
    Forced,
    /// Damped SHO plus anti-damped partner.
    Dsho,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum KindTag {
    Bateman,
    CaldirolaKanai,
    VdpFull,
    VdpSimple,
    Forced,
    Lienard,
    Averaged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SplitTag {
    /// (f1, f2) = (0, x^2).
    MomentumFree,
    /// (f1, f2) = (x^3/3, 0).
    PotentialFree,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a model and emit the trajectory as CSV.
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "vdp")]
        model: ModelTag,
        #[arg(long)]
        t_end: Option<f64>,
        /// Number of uniformly spaced output rows.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.5)]
        x0: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        xdot0: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        y0: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        ydot0: f64,
    },
    /// Measure the limit cycle and emit a JSON report.
    LimitCycle {
        #[command(flatten)]
        params: ParamArgs,
        /// Transient horizon to discard (default 30/epsilon).
        #[arg(long)]
        settle: Option<f64>,
        /// Periods averaged for the period estimate.
        #[arg(long)]
        periods: Option<usize>,
    },
    /// Hill/Floquet analysis of the auxiliary variable; JSON report.
    Floquet {
        #[command(flatten)]
        params: ParamArgs,
        /// Use the minimal period pi/omega of the Hill coefficient.
        #[arg(long)]
        minimal_period: bool,
        /// Also measure auxiliary growth directly over this many periods.
        #[arg(long)]
        growth_periods: Option<usize>,
    },
    /// Print the perturbation predictions and exact mode tables as JSON.
    Perturb {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Check energy conservation along a canonical flow.
    ConserveCheck {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "vdp-simple")]
        kind: KindTag,
        /// Gauge split used by the lienard kind.
        #[arg(long, value_enum, default_value = "momentum-free")]
        split: SplitTag,
        /// Cycle amplitude for the averaged kind (default 2/sqrt(alpha)).
        #[arg(long, allow_negative_numbers = true)]
        amplitude: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Canonical initial state "x,y,px,py".
        #[arg(long, default_value = "0.5,0.25,-0.15,0.4")]
        state: String,
    },
    /// Sweep a parameter, comparing measured and predicted frequencies (CSV).
    Compare {
        #[command(flatten)]
        params: ParamArgs,
        /// Sweep specification, e.g. "epsilon=0.05,0.1,0.2".
        #[arg(long)]
        sweep: String,
        #[arg(long)]
        settle: Option<f64>,
        #[arg(long)]
        periods: Option<usize>,
    },
    /// Emit the forward/reverse/coupling split of the Lagrangian along a
    /// trajectory (CSV).
    Galley {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.5)]
        x0: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        xdot0: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        y0: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        ydot0: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let out = cli.output.as_ref();
    match cli.command {
        Command::Simulate {
            params,
            model,
            t_end,
            samples,
            x0,
            xdot0,
            y0,
            ydot0,
        } => {
            let (p, cfg) = resolve(&params, &file);
            validate_params(&p)?;
            let t_end = t_end.or(file.t_end).unwrap_or(50.0);
            let samples = samples.or(file.samples).unwrap_or(2000).max(2);
            let s0 = [x0, xdot0, y0, ydot0];
            let rhs = move |t: f64, s: &[f64; 4]| -> [f64; 4] {
                match model {
                    ModelTag::Vdp => vdp_pair_rhs(*s, &p),
                    ModelTag::Symmetric => symmetric_ab_rhs(*s, &p),
                    ModelTag::Forced => forced_vdp_pair_rhs(*s, t, &p),
                    ModelTag::Dsho => {
                        let dx = dsho_rhs(State2::new(s[0], s[1]), &p, false);
                        let dy = dsho_rhs(State2::new(s[2], s[3]), &p, true);
                        [dx.x, dx.v, dy.x, dy.v]
                    }
                }
            };
            let traj = integrate(rhs, s0, (0.0, t_end), &cfg)?;
            let mut csv = CsvWriter::new(&["t", "x", "xdot", "y", "ydot"]);
            for i in 0..samples {
                let t = t_end * i as f64 / (samples - 1) as f64;
                let s = traj.sample(t)?;
                csv.row(&[t, s[0], s[1], s[2], s[3]]);
            }
            emit(out, &csv.finish())
        }
        Command::LimitCycle {
            params,
            settle,
            periods,
        } => {
            let (p, cfg) = resolve(&params, &file);
            validate_params(&p)?;
            let settle = settle
                .or(file.settle)
                .unwrap_or_else(|| default_settle_time(p.epsilon));
            let periods = periods.or(file.periods).unwrap_or(DEFAULT_N_PERIODS);
            let report = measure_limit_cycle(&p, &cfg, settle, periods)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            emit(out, &format!("{json}\n"))
        }
        Command::Floquet {
            params,
            minimal_period,
            growth_periods,
        } => {
            let (p, cfg) = resolve(&params, &file);
            validate_params(&p)?;
            let which = if minimal_period {
                HillPeriod::Minimal
            } else {
                HillPeriod::Full
            };
            let report = monodromy_over(&p, &cfg, which)?;
            let mut value = serde_json::to_value(&report).expect("report serializes");
            let map = value.as_object_mut().expect("report is an object");
            map.insert("determinant".into(), report.determinant().into());
            map.insert("trace".into(), report.trace().into());
            if let Some(n) = growth_periods {
                let growth = auxiliary_growth_check(&p, &cfg, n)?;
                map.insert(
                    "growth".into(),
                    serde_json::to_value(&growth).expect("growth serializes"),
                );
            }
            let json = serde_json::to_string_pretty(&value).expect("value serializes");
            emit(out, &format!("{json}\n"))
        }
        Command::Perturb { params } => {
            let (p, _) = resolve(&params, &file);
            validate_params(&p)?;
            let k1 = k1_modes();
            let generator = s1_build(&k1);
            let poly_value =
                |poly: &dualosc::perturb::TrigPolynomial| -> Result<serde_json::Value, CliError> {
                    let json = poly
                        .to_json()
                        .map_err(|e| CliError::Numerical(e.to_string()))?;
                    Ok(serde_json::from_str(&json).expect("round-trips"))
                };
            let value = serde_json::json!({
                "predicted_frequency": predict_frequency(&p),
                "waveform": {
                    "fundamental_amplitude": 2.0,
                    "third_harmonic_coefficient": -p.epsilon / (4.0 * p.omega),
                },
                "k1": poly_value(&k1)?,
                "s1_periodic": poly_value(&generator.periodic)?,
                "s1_resonant": poly_value(&generator.resonant)?,
            });
            let json = serde_json::to_string_pretty(&value).expect("value serializes");
            emit(out, &format!("{json}\n"))
        }
        Command::ConserveCheck {
            params,
            kind,
            split,
            amplitude,
            t_end,
            state,
        } => {
            let (p, cfg) = resolve(&params, &file);
            validate_params(&p)?;
            let t_end = t_end.or(file.t_end).unwrap_or(50.0);
            let s0 = parse_state(&state)?;
            let h = match kind {
                KindTag::Bateman => Hamiltonian::BatemanDual(p),
                KindTag::CaldirolaKanai => {
                    return Err(CliError::Config(
                        "caldirola-kanai is not autonomous; use power-balance".into(),
                    ))
                }
                KindTag::Forced => {
                    return Err(CliError::Config(
                        "forced-vdp is not autonomous; use power-balance".into(),
                    ))
                }
                KindTag::VdpFull => Hamiltonian::VdpFull(p),
                KindTag::VdpSimple => Hamiltonian::VdpSimple(p),
                KindTag::Lienard => {
                    let split = match split {
                        SplitTag::MomentumFree => GaugeSplit::vdp_momentum_free(),
                        SplitTag::PotentialFree => GaugeSplit::vdp_potential_free(),
                    };
                    Hamiltonian::lienard(p, split)
                }
                KindTag::Averaged => {
                    let a = amplitude.unwrap_or_else(|| 2.0 / p.alpha.sqrt());
                    Hamiltonian::averaged(p, a)?
                }
            };
            const THRESHOLD: f64 = 1e-8;
            let drift = conservation_drift(&h, s0, t_end, &cfg)?;
            let verdict = if drift < THRESHOLD { "PASS" } else { "FAIL" };
            let line = format!(
                "kind={} t_end={} max_relative_drift={} threshold={}: {verdict}\n",
                h.name(),
                num(t_end),
                num(drift),
                num(THRESHOLD),
            );
            emit(out, &line)?;
            if drift >= THRESHOLD {
                return Err(CliError::Numerical(format!(
                    "conservation drift {} exceeds threshold {THRESHOLD:e}",
                    num(drift)
                )));
            }
            Ok(())
        }
        Command::Compare {
            params,
            sweep,
            settle,
            periods,
        } => {
            let (base, cfg) = resolve(&params, &file);
            validate_params(&base)?;
            let (name, values) = parse_sweep(&sweep)?;
            let periods = periods.or(file.periods).unwrap_or(DEFAULT_N_PERIODS);
            let settle = settle.or(file.settle);

            // sweep points are independent; run them concurrently and emit
            // rows in sweep order
            let mut results: Vec<Option<Result<[f64; 4], CliError>>> =
                (0..values.len()).map(|_| None).collect();
            std::thread::scope(|scope| {
                let mut handles = Vec::new();
                for &value in &values {
                    let name = name.as_str();
                    let mut p = base;
                    handles.push(scope.spawn(move || -> Result<[f64; 4], CliError> {
                        match name {
                            "epsilon" => p.epsilon = value,
                            "omega" => p.omega = value,
                            _ => unreachable!("validated in parse_sweep"),
                        }
                        let settle = settle.unwrap_or_else(|| default_settle_time(p.epsilon));
                        let report = measure_limit_cycle(&p, &cfg, settle, periods)?;
                        let predicted = predict_frequency(&p);
                        Ok([
                            value,
                            report.frequency,
                            predicted,
                            (report.frequency - predicted).abs(),
                        ])
                    }));
                }
                for (slot, handle) in results.iter_mut().zip(handles) {
                    *slot = Some(handle.join().expect("sweep worker panicked"));
                }
            });

            let mut csv = CsvWriter::new(&[&name, "measured_freq", "predicted_freq", "abs_err"]);
            for row in results.into_iter().flatten() {
                csv.row(&row?);
            }
            emit(out, &csv.finish())
        }
        Command::Galley {
            params,
            t_end,
            samples,
            x0,
            xdot0,
            y0,
            ydot0,
        } => {
            let (p, cfg) = resolve(&params, &file);
            validate_params(&p)?;
            let t_end = t_end.or(file.t_end).unwrap_or(20.0);
            let samples = samples.or(file.samples).unwrap_or(400).max(2);
            let traj = integrate(
                |_, s: &[f64; 4]| vdp_pair_rhs(*s, &p),
                [x0, xdot0, y0, ydot0],
                (0.0, t_end),
                &cfg,
            )?;
            let f = |x: f64| p.alpha * x * x - 1.0;
            let mut csv = CsvWriter::new(&[
                "t",
                "q1",
                "q2",
                "q1dot",
                "q2dot",
                "forward",
                "reverse",
                "coupling",
                "lagrangian",
            ]);
            for i in 0..samples {
                let t = t_end * i as f64 / (samples - 1) as f64;
                let s = traj.sample(t)?;
                let d = galley_decompose(s[0], s[2], s[1], s[3], &p, f);
                let q = dualosc::hamiltonians::GalleyCoordinates::from_pair(s[0], s[2], s[1], s[3]);
                csv.row(&[
                    t,
                    q.q1,
                    q.q2,
                    q.q1dot,
                    q.q2dot,
                    d.forward,
                    d.reverse,
                    d.coupling,
                    d.total(),
                ]);
            }
            emit(out, &csv.finish())
        }
    }
}

fn parse_state(text: &str) -> Result<PhaseState4, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(CliError::Config(format!(
            "field state: expected four comma-separated numbers \"x,y,px,py\", got \"{text}\""
        )));
    }
    let mut vals = [0.0; 4];
    for (i, part) in parts.iter().enumerate() {
        vals[i] = part.trim().parse::<f64>().map_err(|_| {
            CliError::Config(format!("field state: component {} is not a number", i + 1))
        })?;
    }
    Ok(PhaseState4::new(vals[0], vals[1], vals[2], vals[3]))
}

fn parse_sweep(text: &str) -> Result<(String, Vec<f64>), CliError> {
    let (name, rest) = text.split_once('=').ok_or_else(|| {
        CliError::Config(format!(
            "field sweep: expected \"name=v1,v2,...\", got \"{text}\""
        ))
    })?;
    let name = name.trim().to_string();
    if name != "epsilon" && name != "omega" {
        return Err(CliError::Config(format!(
            "field sweep: parameter \"{name}\" does not exist (use epsilon or omega)"
        )));
    }
    let values: Result<Vec<f64>, _> = rest.split(',').map(|v| v.trim().parse::<f64>()).collect();
    let values =
        values.map_err(|_| CliError::Config("field sweep: values must be numbers".into()))?;
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config(
            "field sweep: need at least one finite value".into(),
        ));
    }
    Ok((name, values))
}
