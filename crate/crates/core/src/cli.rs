//! Command-line front end.
//!
//! Exit codes: 0 success, 2 solver non-convergence, 3 invalid input or
//! configuration, 4 integration failure.

use std::ffi::OsString;
use std::fs::{File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::averaging::{f1_bar, f1_doublebar, f1_elements, mean_over_angle, FastAngle, TruncationSpec};
use crate::elements::{
    cartesian_to_orbital, delaunay_from_orbital, delaunay_from_poincare, orbital_from_delaunay,
    orbital_from_poincare, orbital_to_cartesian, poincare_from_delaunay, poincare_from_orbital, CartesianState, Delaunay, OrbitalElements, PoincareDelaunay,
};
use crate::error::{HillError, Result};
use crate::hansen::{hansen, HansenQuery};
use crate::model::{maclaurin_chain, HillParams};
use crate::shooting::{
    continue_family, epsilon_from_resonance, residual_psi, solve_orbit, verify_double_symmetry, DeltaLSplit,
    FamilyParameter, NewtonOptions, OrbitRecord, ShootingProblem, SymmetryConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_INTEGRATION: i32 = 4;

/// Bounds a verified orbit must satisfy.
pub const CLOSURE_BOUND: f64 = 1e-8;
pub const PLANE_BOUND: f64 = 1e-8;
pub const ENERGY_BOUND: f64 = 1e-9;
pub const DRIFT_BOUND: f64 = 1e-12;

pub fn exit_code(err: &HillError) -> i32 {
    match err {
        HillError::Domain(_) | HillError::Numerical(_) => EXIT_INVALID,
        HillError::Singularity(_) | HillError::Integration(_) => EXIT_INTEGRATION,
        HillError::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        HillError::PartialFamily { source, .. } => exit_code(source),
    }
}

/// Parameters as written in a config file: a missing `epsilon` is taken from
/// the resonance condition and a missing `epsilon_tilde` from `epsilon^3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_epsilon_tilde")]
    pub epsilon_tilde: Option<f64>,
    #[serde(default = "default_a_e")]
    pub a_e: f64,
    #[serde(default)]
    pub b_e: Option<f64>,
    #[serde(default = "default_j_tilde")]
    pub j_tilde: Vec<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
}

fn default_epsilon_tilde() -> Option<f64> {
    Some(1e-3)
}

fn default_a_e() -> f64 {
    0.5
}

fn default_j_tilde() -> Vec<f64> {
    maclaurin_chain(0.01, 2)
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            epsilon_tilde: default_epsilon_tilde(),
            a_e: default_a_e(),
            b_e: None,
            j_tilde: default_j_tilde(),
            mu: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub integrate: f64,
    pub newton: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { integrate: 1e-12, newton: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub config: SymmetryConfig,
    #[serde(rename = "L_star", default = "one")]
    pub l_star: f64,
    #[serde(default = "default_p3")]
    pub p3_star: f64,
    #[serde(default)]
    pub split: DeltaLSplit,
    #[serde(default)]
    pub truncation: TruncationSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

fn default_p3() -> f64 {
    0.2
}

fn default_max_iter() -> usize {
    25
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ParamsConfig::default(),
            config: SymmetryConfig::default(),
            l_star: 1.0,
            p3_star: 0.2,
            split: DeltaLSplit::P1,
            truncation: TruncationSpec::default(),
            tolerances: Tolerances::default(),
            max_iter: 25,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerances.integrate > 0.0 && self.tolerances.newton > 0.0) {
            return Err(HillError::domain("tolerances must be positive"));
        }
        self.truncation.validate()?;
        self.problem()?.validate()
    }

    pub fn resolved_params(&self) -> Result<HillParams> {
        let p = &self.params;
        let epsilon = match p.epsilon {
            Some(e) => e,
            None => epsilon_from_resonance(self.l_star, self.config.k, self.config.m)?,
        };
        let params = HillParams {
            epsilon,
            epsilon_tilde: p.epsilon_tilde.unwrap_or(epsilon.powi(3)),
            a_e: p.a_e,
            b_e: p.b_e,
            j_tilde: p.j_tilde.clone(),
            mu: p.mu,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn problem(&self) -> Result<ShootingProblem> {
        Ok(ShootingProblem {
            config: self.config,
            l_star: self.l_star,
            p3_star: self.p3_star,
            split: self.split,
            params: self.resolved_params()?,
            tol_integrate: self.tolerances.integrate,
        })
    }

    pub fn newton(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.tolerances.newton,
            max_iter: self.max_iter,
            ..NewtonOptions::default()
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hill-orbits", version, about = "Periodic orbits of the Hill problem with an oblate secondary")]
pub struct Cli {
    /// JSON run configuration; defaults are used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (appended to); standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Relative and absolute tolerance of the integrator.
    #[arg(long, global = true)]
    pub tol_integrate: Option<f64>,
    /// Target for the largest shooting residual.
    #[arg(long, global = true)]
    pub tol_newton: Option<f64>,
    /// Hansen series truncation |k - m| <= kmax.
    #[arg(long, global = true)]
    pub kmax: Option<usize>,
    /// Eccentricity order the truncation must resolve.
    #[arg(long, global = true)]
    pub e_order: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert one state between element sets (JSON in, JSON out).
    Convert(ConvertArgs),
    /// Tabulate Hansen coefficients as CSV.
    Hansen(HansenArgs),
    /// Compare the averaged perturbation against quadrature averages.
    AverageCheck(AverageArgs),
    /// Solve for one periodic orbit.
    FindOrbit,
    /// Continue a family of orbits in one parameter.
    Family(FamilyArgs),
    /// Re-integrate stored orbits and report their symmetry residuals.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Representation {
    Cartesian,
    Orbital,
    Delaunay,
    Poincare,
    All,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// File with a JSON object keyed by its representation
    /// (`cartesian`, `orbital`, `delaunay` or `poincare`); standard input when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    pub to: Representation,
}

#[derive(Debug, Args)]
pub struct HansenArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub n: i32,
    #[arg(long, allow_hyphen_values = true)]
    pub m: i32,
    #[arg(long, allow_hyphen_values = true)]
    pub k_min: i32,
    #[arg(long, allow_hyphen_values = true)]
    pub k_max: i32,
    /// Comma-separated eccentricities.
    #[arg(long, value_delimiter = ',', required = true)]
    pub e: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct AverageArgs {
    #[arg(long, default_value_t = 10)]
    pub points: usize,
    #[arg(long, default_value_t = 0.1)]
    pub e: f64,
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyParam {
    J2,
    EpsilonTilde,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub parameter: FamilyParam,
    /// Comma-separated parameter values (overrides the range flags).
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long, default_value_t = 6)]
    pub steps: usize,
    /// Space the range logarithmically.
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// File with one orbit record per line; standard input when absent.
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateInput {
    Cartesian(CartesianState),
    Orbital(OrbitalElements),
    Delaunay(Delaunay),
    Poincare(PoincareDelaunay),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllRepresentations {
    pub cartesian: CartesianState,
    pub orbital: OrbitalElements,
    pub delaunay: Delaunay,
    pub poincare: PoincareDelaunay,
}

pub fn convert_all(input: &StateInput) -> Result<AllRepresentations> {
    let (orbital, delaunay, poincare) = match input {
        StateInput::Cartesian(s) => {
            let o = cartesian_to_orbital(s)?;
            (o, delaunay_from_orbital(&o)?, poincare_from_orbital(&o)?)
        }
        StateInput::Orbital(o) => (*o, delaunay_from_orbital(o)?, poincare_from_orbital(o)?),
        StateInput::Delaunay(d) => {
            let o = orbital_from_delaunay(d)?;
            (o, *d, poincare_from_delaunay(d)?)
        }
        StateInput::Poincare(p) => {
            (orbital_from_poincare(p)?, delaunay_from_poincare(p)?, *p)
        }
    };
    let cartesian = match input {
        StateInput::Cartesian(s) => *s,
        _ => orbital_to_cartesian(&orbital)?,
    };
    Ok(AllRepresentations { cartesian, orbital, delaunay, poincare })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub closure: f64,
    pub plane_a_residual: f64,
    pub plane_b_residual: f64,
    pub mirror_residual: f64,
    pub half_period_residual: f64,
    pub energy_drift: f64,
    /// Largest change of `psi` when recomputed from the stored unknowns.
    pub recomputation_drift: f64,
    pub passed: bool,
}

pub fn verify_record(rec: &OrbitRecord) -> Result<VerifyReport> {
    let sym = verify_double_symmetry(rec, rec.tol_integrate)?;
    let psi = residual_psi(&rec.x, &rec.problem())?;
    let drift = (0..3).map(|i| (psi[i] - rec.psi[i]).abs()).fold(0.0, f64::max);
    let passed = sym.closure <= CLOSURE_BOUND
        && sym.plane_a_residual <= PLANE_BOUND
        && sym.plane_b_residual <= PLANE_BOUND
        && sym.energy_drift <= ENERGY_BOUND
        && drift <= DRIFT_BOUND;
    Ok(VerifyReport {
        closure: sym.closure,
        plane_a_residual: sym.plane_a_residual,
        plane_b_residual: sym.plane_b_residual,
        mirror_residual: sym.mirror_residual,
        half_period_residual: sym.half_period_residual,
        energy_drift: sym.energy_drift,
        recomputation_drift: drift,
        passed,
    })
}

/// Sink that appends to a file or writes to standard output; CSV headers are
/// written only to empty targets.
struct Sink<'a> {
    file: Option<File>,
    stdout: &'a mut dyn Write,
    fresh: bool,
}

impl<'a> Sink<'a> {
    fn open(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Self> {
        match path {
            Some(p) => {
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(p)
                    .map_err(|e| HillError::domain(format!("cannot open {}: {e}", p.display())))?;
                let fresh = file.metadata().map(|m| m.len() == 0).unwrap_or(true);
                Ok(Self { file: Some(file), stdout, fresh })
            }
            None => Ok(Self { file: None, stdout, fresh: true }),
        }
    }

    fn line(&mut self, s: &str) -> Result<()> {
        let res = match self.file.as_mut() {
            Some(f) => writeln!(f, "{s}"),
            None => writeln!(self.stdout, "{s}"),
        };
        res.map_err(|e| HillError::domain(format!("write failed: {e}")))
    }

    fn header(&mut self, s: &str) -> Result<()> {
        if self.fresh {
            self.line(s)?;
            self.fresh = false;
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let s = serde_json::to_string(value).map_err(|e| HillError::domain(format!("serialization failed: {e}")))?;
        self.line(&s)
    }
}

fn read_source(path: Option<&Path>, stdin: &mut dyn Read) -> Result<String> {
    let mut s = String::new();
    match path {
        Some(p) => {
            s = std::fs::read_to_string(p).map_err(|e| HillError::domain(format!("cannot read {}: {e}", p.display())))?
        }
        None => {
            stdin
                .read_to_string(&mut s)
                .map_err(|e| HillError::domain(format!("cannot read standard input: {e}")))?;
        }
    }
    Ok(s)
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| HillError::domain(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| HillError::domain(format!("invalid config: {e}")))?
        }
        None => RunConfig::default(),
    };
    if let Some(t) = cli.tol_integrate {
        cfg.tolerances.integrate = t;
    }
    if let Some(t) = cli.tol_newton {
        cfg.tolerances.newton = t;
    }
    if let Some(k) = cli.kmax {
        cfg.truncation.k_max = k;
    }
    if let Some(e) = cli.e_order {
        cfg.truncation.e_order = e;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_path(cli: &Cli, cfg: &RunConfig) -> Option<PathBuf> {
    cli.out.clone().or_else(|| cfg.output.clone())
}

fn family_values(args: &FamilyArgs) -> Result<Vec<f64>> {
    if let Some(v) = &args.values {
        return Ok(v.clone());
    }
    let (a, b) = match (args.from, args.to) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(HillError::domain("family needs --values or both --from and --to")),
    };
    let n = args.steps;
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    if args.log {
        if !(a > 0.0 && b > 0.0) {
            return Err(HillError::domain("logarithmic spacing needs positive endpoints"));
        }
        let (la, lb) = (a.ln(), b.ln());
        Ok((0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect())
    } else {
        Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
    }
}

/// Deterministic sample points for the averaging check.
fn average_points(e: f64, count: usize) -> Result<Vec<PoincareDelaunay>> {
    let golden = 0.618_033_988_749_894_9;
    let mut out = Vec::with_capacity(count);
    for id in 0..count {
        let u = |s: f64| ((id as f64 + 1.0) * golden * s).fract();
        let el = OrbitalElements {
            a: 0.8 + 0.4 * u(1.0),
            e,
            inc: 0.1 + 2.9 * u(2.0),
            node: std::f64::consts::TAU * u(3.0),
            peri: std::f64::consts::TAU * u(5.0),
            mean_anomaly: std::f64::consts::TAU * u(7.0),
        };
        out.push(poincare_from_delaunay(&delaunay_from_orbital(&el)?)?);
    }
    Ok(out)
}

fn run_inner(cli: &Cli, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Convert(args) => {
            let text = read_source(args.input.as_deref(), stdin)?;
            let input: StateInput =
                serde_json::from_str(&text).map_err(|e| HillError::domain(format!("invalid state: {e}")))?;
            let all = convert_all(&input)?;
            let mut sink = Sink::open(cli.out.as_deref(), stdout)?;
            match args.to {
                Representation::All => sink.json(&all)?,
                Representation::Cartesian => sink.json(&all.cartesian)?,
                Representation::Orbital => sink.json(&all.orbital)?,
                Representation::Delaunay => sink.json(&all.delaunay)?,
                Representation::Poincare => sink.json(&all.poincare)?,
            }
            Ok(EXIT_OK)
        }
        Command::Hansen(args) => {
            if args.k_min > args.k_max {
                return Err(HillError::domain("k-min must not exceed k-max"));
            }
            let mut rows = Vec::new();
            for &e in &args.e {
                for k in args.k_min..=args.k_max {
                    let v = hansen(HansenQuery { n: args.n, m: args.m, k, e })?;
                    rows.push(format!("{},{},{},{},{}", args.n, args.m, k, e, v));
                }
            }
            let mut sink = Sink::open(cli.out.as_deref(), stdout)?;
            sink.header("n,m,k,e,value")?;
            for r in rows {
                sink.line(&r)?;
            }
            Ok(EXIT_OK)
        }
        Command::AverageCheck(args) => {
            let cfg = load_config(cli)?;
            if !(0.0..1.0).contains(&args.e) {
                return Err(HillError::domain(format!("eccentricity must lie in [0, 1), got {}", args.e)));
            }
            let params = cfg.resolved_params()?;
            let trunc = cfg.truncation;
            let mut rows = Vec::new();
            for (id, p) in average_points(args.e, args.points)?.iter().enumerate() {
                let closed = f1_bar(p, &params, &trunc)?;
                let quad = mean_over_angle(p, FastAngle::Q1, args.nodes, |q| f1_elements(q, &params, &trunc))?;
                rows.push(format!("{id},q1,{closed},{quad},{}", closed - quad));
                let closed = f1_doublebar(p, &params)?;
                let quad = mean_over_angle(p, FastAngle::Q3, args.nodes, |q| f1_bar(q, &params, &trunc))?;
                rows.push(format!("{id},q3,{closed},{quad},{}", closed - quad));
            }
            let mut sink = Sink::open(output_path(cli, &cfg).as_deref(), stdout)?;
            sink.header("id,average,closed_form,quadrature,difference")?;
            for r in rows {
                sink.line(&r)?;
            }
            Ok(EXIT_OK)
        }
        Command::FindOrbit => {
            let cfg = load_config(cli)?;
            let problem = cfg.problem()?;
            let mut sink = Sink::open(output_path(cli, &cfg).as_deref(), stdout)?;
            match solve_orbit(&problem, &cfg.newton()) {
                Ok(rec) => {
                    sink.json(&rec)?;
                    Ok(EXIT_OK)
                }
                Err(HillError::NoConvergence { iterations, residual, reason, last }) => {
                    sink.json(&last)?;
                    let _ = writeln!(
                        stderr,
                        "no convergence after {iterations} iterations (|psi| = {residual:.3e}): {reason}"
                    );
                    Ok(EXIT_NO_CONVERGENCE)
                }
                Err(e) => Err(e),
            }
        }
        Command::Family(args) => {
            let cfg = load_config(cli)?;
            let problem = cfg.problem()?;
            let values = family_values(args)?;
            let parameter = match args.parameter {
                FamilyParam::J2 => FamilyParameter::J2,
                FamilyParam::EpsilonTilde => FamilyParameter::EpsilonTilde,
            };
            let mut sink = Sink::open(output_path(cli, &cfg).as_deref(), stdout)?;
            match continue_family(&problem, parameter, &values, &cfg.newton()) {
                Ok(records) => {
                    for r in &records {
                        sink.json(r)?;
                    }
                    Ok(EXIT_OK)
                }
                Err(HillError::PartialFamily { index, completed, source }) => {
                    for r in &completed {
                        sink.json(r)?;
                    }
                    let _ = writeln!(stderr, "family stopped at step {index}: {source}");
                    Ok(exit_code(&source))
                }
                Err(e) => Err(e),
            }
        }
        Command::Verify(args) => {
            let text = read_source(args.record.as_deref(), stdin)?;
            let mut sink = Sink::open(cli.out.as_deref(), stdout)?;
            let mut all_passed = true;
            let mut count = 0;
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let rec: OrbitRecord =
                    serde_json::from_str(line).map_err(|e| HillError::domain(format!("invalid record: {e}")))?;
                if !rec.converged {
                    return Err(HillError::domain("record is not a converged orbit"));
                }
                let report = verify_record(&rec)?;
                all_passed &= report.passed;
                sink.json(&report)?;
                count += 1;
            }
            if count == 0 {
                return Err(HillError::domain("no records to verify"));
            }
            if !all_passed {
                let _ = writeln!(stderr, "verification bounds exceeded");
                return Ok(EXIT_NO_CONVERGENCE);
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` and runs the selected command, returning the process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    match run_inner(&cli, stdin, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point used by the binary.
pub fn main_with_env() -> i32 {
    let stdin = io::stdin();
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(std::env::args_os(), &mut stdin.lock(), &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str], input: &str) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("hill-orbits").chain(args.iter().copied()),
            &mut input.as_bytes(),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn convert_circular_equatorial() {
        let (code, out, _) = run_str(&["convert", "--to", "delaunay"], r#"{"cartesian":{"xi":[1,0,0],"eta":[0,1,0]}}"#);
        assert_eq!(code, 0);
        let d: Delaunay = serde_json::from_str(out.trim()).unwrap();
        assert!((d.big_l - 1.0).abs() < 1e-15 && (d.big_g - 1.0).abs() < 1e-15 && (d.big_h - 1.0).abs() < 1e-15);
    }

    #[test]
    fn convert_rejects_hyperbolic() {
        let (code, _, err) = run_str(&["convert"], r#"{"cartesian":{"xi":[1,0,0],"eta":[0,2,0]}}"#);
        assert_eq!(code, EXIT_INVALID);
        assert!(err.contains("not bound"));
    }

    #[test]
    fn hansen_csv() {
        let (code, out, _) = run_str(&["hansen", "--n", "2", "--m", "0", "--k-min", "0", "--k-max", "0", "--e", "0.2"], "");
        assert_eq!(code, 0);
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("n,m,k,e,value"));
        let v: f64 = lines.next().unwrap().split(',').nth(4).unwrap().parse().unwrap();
        assert!((v - 1.06).abs() < 1e-12);
        let (code, _, _) = run_str(&["hansen", "--n", "2", "--m", "0", "--k-min", "0", "--k-max", "0", "--e", "1.0"], "");
        assert_eq!(code, EXIT_INVALID);
    }

    #[test]
    fn bad_usage_is_invalid_input() {
        assert_eq!(run_str(&["no-such-command"], "").0, EXIT_INVALID);
    }

    #[test]
    fn family_ranges() {
        let args = FamilyArgs { parameter: FamilyParam::J2, values: None, from: Some(0.0), to: Some(0.1), steps: 6, log: false };
        let v = family_values(&args).unwrap();
        assert_eq!(v.len(), 6);
        assert!((v[5] - 0.1).abs() < 1e-16 && (v[1] - 0.02).abs() < 1e-16);
        let args = FamilyArgs { log: true, from: Some(1e-2), to: Some(1e-4), steps: 3, ..args };
        let v = family_values(&args).unwrap();
        assert!((v[1] - 1e-3).abs() < 1e-16);
    }

    #[test]
    fn config_defaults_resolve() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        let p = cfg.resolved_params().unwrap();
        assert_eq!(p.epsilon, 1.0);
        assert_eq!(p.epsilon_tilde, 1e-3);
        let cfg: RunConfig = serde_json::from_str(r#"{"params":{"epsilon_tilde":null},"config":{"i":0,"j":0,"k":1,"m":1}}"#).unwrap();
        let p = cfg.resolved_params().unwrap();
        assert!((p.epsilon.powi(-3) - 3.0).abs() < 1e-12);
        assert!(p.is_coupled());
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus":1}"#).is_err());
    }
}
