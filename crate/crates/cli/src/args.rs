use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "hktop", version, about = "Hirota-Kimura discretization of the Euler top")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Iterate a method from x0 and emit one record per step.
    Trajectory(TrajectoryArgs),
    /// Fit the global convergence order against a fine RK4 reference.
    Order(OrderArgs),
    /// Check every algebraic identity at seeded random points.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Hk,
    Bls,
    Rk4,
    Jonas,
    Elliptic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OrderMethod {
    Hk,
    Bls,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormulationArg {
    Velocity,
    Momentum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Report {
    F,
    H,
    G,
    Phi,
}

/// Exactly one of `--inertia`, `--alpha`, `--delta` selects the parameters.
#[derive(Args, Debug, Clone)]
pub struct ParamArgs {
    #[arg(long, value_parser = parse_vec3, value_name = "I1,I2,I3")]
    pub inertia: Option<[f64; 3]>,
    #[arg(long, value_enum, default_value = "momentum")]
    pub formulation: FormulationArg,
    #[arg(long, value_parser = parse_vec3, value_name = "A1,A2,A3", allow_hyphen_values = true)]
    pub alpha: Option<[f64; 3]>,
    #[arg(long, value_parser = parse_vec3, value_name = "D1,D2,D3", allow_hyphen_values = true)]
    pub delta: Option<[f64; 3]>,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrajectoryArgs {
    #[arg(long, value_enum, default_value = "hk")]
    pub method: Method,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Initial state; drawn from `--seed` when omitted.
    #[arg(long, value_parser = parse_vec3, value_name = "X1,X2,X3", allow_hyphen_values = true)]
    pub x0: Option<[f64; 3]>,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, value_delimiter = ',', value_enum)]
    pub report: Vec<Report>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Drift above which a step counts as a violation.
    #[arg(long, default_value_t = 1e-10)]
    pub threshold: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct OrderArgs {
    #[arg(long, value_enum, default_value = "hk")]
    pub method: OrderMethod,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_parser = parse_vec3, value_name = "X1,X2,X3", allow_hyphen_values = true, default_value = "1,0.8,0.6")]
    pub x0: [f64; 3],
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025")]
    pub eps_list: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub final_time: f64,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Perturb every tested bracket so that the Jacobi identity fails.
    #[arg(long)]
    pub corrupt_bracket: bool,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

pub fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {s:?}"));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p.parse::<f64>().map_err(|e| format!("{p:?}: {e}"))?;
        if !slot.is_finite() {
            return Err(format!("{p:?} is not finite"));
        }
    }
    Ok(v)
}
