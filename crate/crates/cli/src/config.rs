//! Flat TOML experiment configuration; command-line flags override file values.

use crate::CliError;
use dualosc::integrate::IntegratorConfig;
use dualosc::models::SystemParams;
use serde::Deserialize;
use std::path::Path;

/// Every recognized file key. Flags override any of these; unknown keys are
/// rejected with the field name in the diagnostic.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub epsilon: Option<f64>,
    pub omega: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub big_omega: Option<f64>,
    pub f1: Option<f64>,
    pub gamma: Option<f64>,
    pub f2: Option<f64>,
    pub omega_ext: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub settle: Option<f64>,
    pub periods: Option<usize>,
    pub t_end: Option<f64>,
    pub samples: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }
}

/// Shared numeric flags, every one optional so file values can show through.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ParamArgs {
    /// Nonlinearity strength.
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Natural angular frequency.
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    /// Bookkeeping coefficient on the x^2 damping term.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Symmetric-system y^2 coefficient.
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Damped-SHO damping rate.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Damped-SHO stiffness frequency.
    #[arg(long, allow_negative_numbers = true)]
    pub big_omega: Option<f64>,
    /// Parametric forcing amplitude.
    #[arg(long, allow_negative_numbers = true)]
    pub f1: Option<f64>,
    /// Parametric forcing frequency.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// External forcing amplitude.
    #[arg(long, allow_negative_numbers = true)]
    pub f2: Option<f64>,
    /// External forcing frequency.
    #[arg(long, allow_negative_numbers = true)]
    pub omega_ext: Option<f64>,
    /// Relative integration tolerance.
    #[arg(long, allow_negative_numbers = true)]
    pub rel_tol: Option<f64>,
    /// Absolute integration tolerance.
    #[arg(long, allow_negative_numbers = true)]
    pub abs_tol: Option<f64>,
}

/// Resolve flag > file > default for the model and integrator settings.
pub fn resolve(args: &ParamArgs, file: &FileConfig) -> (SystemParams, IntegratorConfig) {
    let d = SystemParams::default();
    let pick =
        |flag: Option<f64>, file: Option<f64>, default: f64| flag.or(file).unwrap_or(default);
    let params = SystemParams {
        epsilon: pick(args.epsilon, file.epsilon, d.epsilon),
        omega: pick(args.omega, file.omega, d.omega),
        alpha: pick(args.alpha, file.alpha, d.alpha),
        beta: pick(args.beta, file.beta, d.beta),
        lambda: pick(args.lambda, file.lambda, d.lambda),
        big_omega: pick(args.big_omega, file.big_omega, d.big_omega),
        f1: pick(args.f1, file.f1, d.f1),
        gamma: pick(args.gamma, file.gamma, d.gamma),
        f2: pick(args.f2, file.f2, d.f2),
        omega_ext: pick(args.omega_ext, file.omega_ext, d.omega_ext),
    };
    let dc = IntegratorConfig::default();
    let cfg = IntegratorConfig {
        rel_tol: pick(args.rel_tol, file.rel_tol, dc.rel_tol),
        abs_tol: pick(args.abs_tol, file.abs_tol, dc.abs_tol),
        ..dc
    };
    (params, cfg)
}

pub fn validate_params(p: &SystemParams) -> Result<(), CliError> {
    if p.omega.is_nan() || p.omega <= 0.0 {
        return Err(CliError::Config(format!(
            "field omega: must be positive, got {}",
            p.omega
        )));
    }
    Ok(())
}
