use std::fmt::{self, Write as _};
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use hktop::continuous::{alpha_from_inertia, integrals_g, rk4_step, AlphaParams, Formulation, Inertia};
use hktop::convergence::{order_study, Integrator, OrderStudy};
use hktop::elliptic::{eval_solution, fit_solution};
use hktop::hk::{default_beta, density, hk_step, integral_h, integrals_f, jonas_delta, jonas_step, DeltaParams, DensityChoice};
use hktop::sampling::sample_state;
use hktop::tolerance::{DriftStats, DriftTracker};
use hktop::verify::{run_checks, CheckResult, VerifyConfig};
use hktop::bls::{bls_step, BlsConfig};
use hktop::{CyclicIndex, Error, Vec3};

use crate::args::{Format, FormulationArg, Method, OrderArgs, OrderMethod, ParamArgs, Report, TrajectoryArgs, VerifyArgs};

/// Agreement required between the closed form and the iterated map.
const ELLIPTIC_TOL: f64 = 1e-9;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
    ChecksFailed,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numeric(_) | CliError::Io(_) | CliError::ChecksFailed => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::ChecksFailed => write!(f, "verification failed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::NonPositiveInertia | Error::WrongSignPattern | Error::NotOrthogonal { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Resolved model parameters: `δ = εα/2`.
#[derive(Clone, Debug, Serialize)]
pub struct Params {
    pub source: &'static str,
    pub alpha: [f64; 3],
    pub delta: [f64; 3],
    pub eps: f64,
}

impl Params {
    fn delta(&self) -> Result<DeltaParams<f64>> {
        Ok(DeltaParams::new(Vec3::from_f64(self.delta))?)
    }

    fn alpha(&self) -> Vec3 {
        Vec3::from_f64(self.alpha)
    }
}

/// One of `--inertia`, `--alpha`, `--delta`; inertia `(1,2,3)` when none is given.
pub fn resolve_params(p: &ParamArgs) -> Result<Params> {
    if !(p.eps > 0.0 && p.eps.is_finite()) {
        return Err(CliError::Config(format!("--eps must be positive, got {}", p.eps)));
    }
    let given = [p.inertia.is_some(), p.alpha.is_some(), p.delta.is_some()].iter().filter(|b| **b).count();
    if given > 1 {
        return Err(CliError::Config("give exactly one of --inertia, --alpha, --delta".into()));
    }
    let eps = p.eps;
    let (source, alpha, delta) = if let Some(d) = p.delta {
        let d = Vec3::from_f64(d);
        ("delta", d * (2.0 / eps), d)
    } else {
        let (source, alpha) = match p.alpha {
            Some(a) => ("alpha", Vec3::from_f64(a)),
            None => {
                let inertia = Inertia::new(Vec3::from_f64(p.inertia.unwrap_or([1.0, 2.0, 3.0])))?;
                let formulation = match p.formulation {
                    FormulationArg::Velocity => Formulation::Velocity,
                    FormulationArg::Momentum => Formulation::Momentum,
                };
                ("inertia", alpha_from_inertia(&inertia, formulation)?.alpha)
            }
        };
        (source, alpha, alpha * (eps / 2.0))
    };
    Ok(Params { source, alpha: alpha.to_f64(), delta: delta.to_f64(), eps })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn iterate(x0: Vec3, steps: usize, mut step: impl FnMut(Vec3) -> hktop::Result<Vec3>) -> Result<Vec<Vec3>> {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0);
    let mut x = x0;
    for n in 0..steps {
        x = step(x).map_err(|e| CliError::Numeric(format!("step {n}: {e}")))?;
        states.push(x);
    }
    Ok(states)
}

#[derive(Serialize)]
struct TrajectoryConfig<'a> {
    method: &'static str,
    params: &'a Params,
    x0: [f64; 3],
    steps: usize,
    seed: u64,
    reports: Vec<&'static str>,
    threshold: f64,
}

#[derive(Serialize)]
struct Record {
    n: usize,
    x: [f64; 3],
    #[serde(rename = "F", skip_serializing_if = "Option::is_none")]
    f: Option<[f64; 3]>,
    #[serde(rename = "H", skip_serializing_if = "Option::is_none")]
    h: Option<[f64; 3]>,
    #[serde(rename = "G", skip_serializing_if = "Option::is_none")]
    g: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi_ratio: Option<f64>,
}

#[derive(Serialize)]
struct TrajectoryOutput<'a> {
    config: TrajectoryConfig<'a>,
    records: Vec<Record>,
    summary: DriftStats,
    checks: Vec<CheckResult>,
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Hk => "hk",
        Method::Bls => "bls",
        Method::Rk4 => "rk4",
        Method::Jonas => "jonas",
        Method::Elliptic => "elliptic",
    }
}

fn report_name(r: Report) -> &'static str {
    match r {
        Report::F => "f",
        Report::H => "h",
        Report::G => "g",
        Report::Phi => "phi",
    }
}

pub fn trajectory(a: &TrajectoryArgs) -> Result<()> {
    let params = resolve_params(&a.params)?;
    if !(a.threshold >= 0.0) {
        return Err(CliError::Config("--threshold must be nonnegative".into()));
    }
    let mut reports = a.report.clone();
    reports.sort();
    reports.dedup();
    let x0 = a.x0.map(Vec3::from_f64).unwrap_or_else(|| sample_state(a.seed, 1.0));
    let delta = params.delta()?;
    let alpha = params.alpha();
    let steps = a.steps;

    let mut checks = Vec::new();
    let states = match a.method {
        Method::Hk => iterate(x0, steps, |x| hk_step(x, &delta))?,
        Method::Jonas => iterate(x0, steps, jonas_step)?,
        Method::Rk4 => iterate(x0, steps, |x| Ok(rk4_step(x, alpha, params.eps)))?,
        Method::Bls => {
            let cfg = BlsConfig::new(AlphaParams::raw(alpha), params.eps)?;
            iterate(x0, steps, |x| bls_step(x, &cfg))?
        }
        Method::Elliptic => {
            let sol = fit_solution(x0, &delta)?;
            let closed: Vec<Vec3> = (0..=steps).map(|n| eval_solution(&sol, n as i64)).collect();
            let iterated = iterate(x0, steps, |x| hk_step(x, &delta))?;
            let gap = closed.iter().zip(&iterated).map(|(c, h)| (*c - *h).max_abs()).fold(0.0, f64::max);
            checks.push(CheckResult::new("elliptic_vs_hk", gap, ELLIPTIC_TOL));
            closed
        }
    };

    // the Jonas map conserves the integrals of the HK map with δ = (−1,−1,−1)
    let inv_delta = if a.method == Method::Jonas { jonas_delta() } else { delta };
    let beta = default_beta(&inv_delta);
    let phi_choice = DensityChoice::all()[0];
    let phi0 = density(x0, &inv_delta, phi_choice);

    let mut records = Vec::with_capacity(states.len());
    let mut tracker: Option<DriftTracker> = None;
    for (n, x) in states.iter().enumerate() {
        let x = *x;
        let mut rec = Record { n, x: x.to_f64(), f: None, h: None, g: None, phi_ratio: None };
        let mut tracked = Vec::new();
        for r in &reports {
            match r {
                Report::F => {
                    let f = integrals_f(x, &inv_delta).map_err(|e| CliError::Numeric(format!("step {n}: {e}")))?.to_f64();
                    tracked.extend(f);
                    rec.f = Some(f);
                }
                Report::H => {
                    let mut h = [0.0; 3];
                    for idx in CyclicIndex::ALL {
                        h[idx.i()] = integral_h(x, &inv_delta, beta, idx).map_err(|e| CliError::Numeric(format!("step {n}: {e}")))?;
                    }
                    tracked.extend(h);
                    rec.h = Some(h);
                }
                Report::G => {
                    let g = integrals_g(x, alpha).to_f64();
                    tracked.extend(g);
                    rec.g = Some(g);
                }
                Report::Phi => rec.phi_ratio = Some(density(x, &inv_delta, phi_choice) / phi0),
            }
        }
        let t = tracker.get_or_insert_with(|| DriftTracker::new(tracked.clone(), a.threshold));
        t.record(n, &tracked);
        records.push(rec);
    }
    let summary = tracker.map(|t| t.finish()).unwrap_or(DriftStats { max_drift: 0.0, rms_drift: 0.0, first_violation: None });

    let text = match a.output.format {
        Format::Csv => csv(&records, &reports),
        Format::Json => to_json(&TrajectoryOutput {
            config: TrajectoryConfig {
                method: method_name(a.method),
                params: &params,
                x0: x0.to_f64(),
                steps,
                seed: a.seed,
                reports: reports.iter().map(|r| report_name(*r)).collect(),
                threshold: a.threshold,
            },
            records,
            summary,
            checks,
        })?,
    };
    emit(a.output.out.as_deref(), &text)
}

fn csv(records: &[Record], reports: &[Report]) -> String {
    let mut out = String::from("n,x1,x2,x3");
    for r in reports {
        out.push_str(match r {
            Report::F => ",F1,F2,F3",
            Report::H => ",H1,H2,H3",
            Report::G => ",G1,G2,G3",
            Report::Phi => ",phi_ratio",
        });
    }
    out.push('\n');
    for rec in records {
        let _ = write!(out, "{}", rec.n);
        let cols = [Some(rec.x), rec.f, rec.h, rec.g];
        for v in cols.iter().flatten().flatten() {
            let _ = write!(out, ",{v:.16e}");
        }
        if let Some(p) = rec.phi_ratio {
            let _ = write!(out, ",{p:.16e}");
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct OrderOutput<'a> {
    config: &'a Params,
    x0: [f64; 3],
    study: OrderStudy,
}

pub fn order(a: &OrderArgs) -> Result<()> {
    let params = resolve_params(&a.params)?;
    let list = &a.eps_list;
    if list.len() < 4 || list.windows(2).any(|w| !(w[1] < w[0])) || !(list[list.len() - 1] > 0.0) {
        return Err(CliError::Config("--eps-list needs at least four positive decreasing values".into()));
    }
    if !(a.final_time > 0.0 && a.final_time.is_finite()) {
        return Err(CliError::Config("--final-time must be positive".into()));
    }
    let method = match a.method {
        OrderMethod::Hk => Integrator::Hk,
        OrderMethod::Bls => Integrator::Bls,
        OrderMethod::Rk4 => Integrator::Rk4,
    };
    let x0 = Vec3::from_f64(a.x0);
    let study = order_study(method, x0, params.alpha(), list, a.final_time)?;
    emit(a.out.as_deref(), &to_json(&OrderOutput { config: &params, x0: a.x0, study })?)
}

#[derive(Serialize)]
struct VerifyConfigOut<'a> {
    params: &'a Params,
    samples: usize,
    seed: u64,
    corrupt_bracket: bool,
}

#[derive(Serialize)]
struct VerifySummary {
    all_pass: bool,
    sample_box: f64,
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    config: VerifyConfigOut<'a>,
    summary: VerifySummary,
    checks: Vec<CheckResult>,
}

pub fn verify(a: &VerifyArgs) -> Result<()> {
    let params = resolve_params(&a.params)?;
    if a.samples == 0 {
        return Err(CliError::Config("--samples must be at least 1".into()));
    }
    let cfg = VerifyConfig {
        delta: params.delta()?,
        alpha: Some(params.alpha()),
        samples: a.samples,
        seed: a.seed,
        corrupt_bracket: a.corrupt_bracket,
    };
    let report = run_checks(&cfg)?;
    let all_pass = report.all_pass();
    let out = VerifyOutput {
        config: VerifyConfigOut { params: &params, samples: a.samples, seed: a.seed, corrupt_bracket: a.corrupt_bracket },
        summary: VerifySummary { all_pass, sample_box: report.sample_box },
        checks: report.checks,
    };
    emit(a.out.as_deref(), &to_json(&out)?)?;
    if all_pass {
        Ok(())
    } else {
        Err(CliError::ChecksFailed)
    }
}
