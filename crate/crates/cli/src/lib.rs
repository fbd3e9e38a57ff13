//! Command-line front end: JSON state files in, JSON or CSV out.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use gaussfid::io::StateSpec;
use gaussfid::measurement::{MeasurementType, DEFAULT_CLASSIFY_TOL};
use gaussfid::oracle::{self, OracleCase, Suite};
use gaussfid::{
    channel_library, classify, fidelity_gaussian, sld_qfi, sweep_classification, ChannelKind, GaussianState,
    GridRange, Mat, Probe, Vector, DEFAULT_EPSILON,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gaussfid", version, about = "Fidelity, optimal measurements and QFI for Gaussian states")]
pub struct Cli {
    /// Regularization for pure or near-pure states.
    #[arg(long, global = true, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Include the parsed input states in the JSON output.
    #[arg(long, global = true)]
    pub dump_state: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    Fidelity(PairArgs),
    Classify(PairArgs),
    Sweep(SweepArgs),
    Qfi(QfiArgs),
    OracleCheck(OracleArgs),
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long)]
    pub state0: PathBuf,
    #[arg(long)]
    pub state1: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub nbar1: f64,
    /// `start:stop:count`
    #[arg(long, default_value = "0:2:200")]
    pub r0: String,
    /// `start:stop:count`
    #[arg(long, default_value = "0.01:3:200")]
    pub nbar0: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ChannelArg {
    Displacement,
    Phase,
    Squeezing,
    Loss,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct QfiArgs {
    #[arg(long, value_enum)]
    pub channel: ChannelArg,
    #[arg(long, default_value_t = 0.0)]
    pub nbar: f64,
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    #[arg(long, default_value_t = 0.0)]
    pub theta_s: f64,
    /// Real part of the probe amplitude.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha_im: f64,
    /// Loss rate; the estimated parameter of the loss channel.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub time: f64,
    #[arg(long)]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    Fidelity,
    Classify,
    Qfi,
    All,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 60)]
    pub cutoff: usize,
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteArg,
    /// Extra seeded random pairs added to the fidelity suite.
    #[arg(long, default_value_t = 0)]
    pub random: usize,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Core(gaussfid::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }

    pub fn to_json(&self) -> Value {
        let (code, detail) = match self {
            CliError::Usage(d) => ("Usage", d.clone()),
            CliError::Input(d) => ("InvalidInput", d.clone()),
            CliError::Core(e) => (e.code(), e.to_string()),
        };
        json!({ "error": code, "detail": detail })
    }
}

impl From<gaussfid::Error> for CliError {
    fn from(e: gaussfid::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Seventeen significant digits.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    serde_json::from_str(&format!("{x:.16e}")).expect("formatted float is a JSON number")
}

fn vec_json(v: &Vector) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

fn mat_json(m: &Mat) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array(m.row(i).iter().map(|&x| num(x)).collect())).collect())
}

pub fn state_json(s: &GaussianState) -> Value {
    json!({ "modes": s.n_modes(), "mean": vec_json(s.mean()), "cov": mat_json(s.cov()) })
}

pub fn read_state(path: &Path) -> CliResult<GaussianState> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let spec: StateSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(spec.to_state()?)
}

fn parse_range(s: &str) -> CliResult<GridRange> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Usage(format!("expected start:stop:count, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start = parts[0].parse::<f64>().map_err(|_| bad())?;
    let stop = parts[1].parse::<f64>().map_err(|_| bad())?;
    let count = parts[2].parse::<usize>().map_err(|_| bad())?;
    Ok(GridRange::new(start, stop, count)?)
}

fn measurement_json(m: &MeasurementType, out: &mut Map<String, Value>) {
    out.insert("type".into(), json!(m.name()));
    match m {
        MeasurementType::NumberResolving { pre_unitary } | MeasurementType::XpPlusPxEigenbasis { pre_unitary } => {
            out.insert(
                "pre_unitary".into(),
                json!({ "S": mat_json(pre_unitary.matrix()), "d": vec_json(pre_unitary.displacement_vector()) }),
            );
        }
        MeasurementType::Homodyne { angle, pre_displacement } => {
            out.insert("angle".into(), num(*angle));
            out.insert("pre_displacement".into(), vec_json(pre_displacement));
        }
        MeasurementType::PureStateProjector { target } => {
            out.insert("target".into(), state_json(target));
        }
    }
}

fn fidelity_cmd(cli: &Cli, a: &PairArgs) -> CliResult<Value> {
    let (s0, s1) = (read_state(&a.state0)?, read_state(&a.state1)?);
    let f = fidelity_gaussian(&s0, &s1, cli.epsilon)?;
    let mut out = Map::new();
    out.insert("fidelity".into(), num(f.fidelity));
    out.insert("overlap".into(), num(f.overlap));
    out.insert("gk_spectrum".into(), vec_json(&f.gk_spectrum));
    if cli.dump_state {
        out.insert("state0".into(), state_json(&s0));
        out.insert("state1".into(), state_json(&s1));
    }
    Ok(Value::Object(out))
}

fn classify_cmd(cli: &Cli, a: &PairArgs) -> CliResult<Value> {
    let (s0, s1) = (read_state(&a.state0)?, read_state(&a.state1)?);
    let c = classify(&s0, &s1, DEFAULT_CLASSIFY_TOL)?;
    let mut out = Map::new();
    measurement_json(&c.measurement, &mut out);
    out.insert("d1".into(), num(c.d1));
    out.insert("d2".into(), num(c.d2));
    out.insert("boundary_distance".into(), num(c.boundary_distance));
    out.insert("on_boundary".into(), json!(c.on_boundary));
    if cli.dump_state {
        out.insert("state0".into(), state_json(&s0));
        out.insert("state1".into(), state_json(&s1));
    }
    Ok(Value::Object(out))
}

pub fn sweep_csv(a: &SweepArgs) -> CliResult<String> {
    let pts = sweep_classification(a.nbar1, &parse_range(&a.r0)?, &parse_range(&a.nbar0)?)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record(["r0", "nbar0", "type", "d1", "d2", "boundary_distance"]).map_err(io)?;
    for p in pts {
        let f = |x: f64| format!("{x:.16e}");
        w.write_record([f(p.r0), f(p.nbar0), p.class.label().to_string(), f(p.d1), f(p.d2), f(p.boundary_distance)])
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn qfi_cmd(cli: &Cli, a: &QfiArgs) -> CliResult<Value> {
    let probe = Probe::new(a.nbar, a.r, a.theta_s, Complex::new(a.alpha, a.alpha_im));
    let (kind, theta) = match a.channel {
        ChannelArg::Displacement => (ChannelKind::Displacement, a.theta.unwrap_or(0.0)),
        ChannelArg::Phase => (ChannelKind::Phase, a.theta.unwrap_or(0.0)),
        ChannelArg::Squeezing => (ChannelKind::Squeezing, a.theta.unwrap_or(0.0)),
        ChannelArg::Loss => {
            let gamma = match (a.gamma, a.theta) {
                (Some(g), None) => g,
                (None, Some(t)) => t,
                (None, None) => 0.0,
                (Some(_), Some(_)) => return Err(CliError::Usage("give either --gamma or --theta for loss".into())),
            };
            (ChannelKind::Loss { t: a.time }, gamma)
        }
    };
    let ch = channel_library(kind, probe)?;
    let res = sld_qfi(&ch, theta)?;
    let mut out = Map::new();
    out.insert("qfi".into(), num(res.qfi));
    out.insert(
        "sld".into(),
        json!({ "gm_rate": mat_json(&res.gm_rate), "vm_rate": vec_json(&res.vm_rate), "nu": num(res.nu) }),
    );
    match &res.measurement_type {
        Some(m) => {
            let mut inner = Map::new();
            measurement_json(m, &mut inner);
            out.insert("type".into(), inner.remove("type").unwrap_or(Value::Null));
            out.insert("measurement".into(), Value::Object(inner));
        }
        None => {
            out.insert("type".into(), Value::Null);
        }
    }
    out.insert("epsilon_used".into(), num(res.epsilon_used));
    if cli.dump_state {
        out.insert("state".into(), state_json(&gaussfid::metrology::ParametrizedChannel::state(&ch, theta)?));
    }
    Ok(Value::Object(out))
}

/// Builder parameters drawn so every state fits comfortably below cutoff 60.
pub fn random_pairs(seed: u64, count: usize) -> CliResult<Vec<(GaussianState, GaussianState)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        gaussfid::state_builder(
            rng.random_range(0.05..1.5),
            rng.random_range(0.0..0.6),
            rng.random_range(0.0..std::f64::consts::PI),
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        )
    };
    (0..count).map(|_| Ok((draw(&mut rng)?, draw(&mut rng)?))).collect()
}

fn case_json(c: &OracleCase) -> Value {
    json!({
        "case": c.case,
        "gaussian_value": num(c.gaussian_value),
        "oracle_value": num(c.oracle_value),
        "abs_err": num(c.abs_err),
        "pass": c.pass,
    })
}

fn oracle_cmd(cli: &Cli, a: &OracleArgs) -> CliResult<Value> {
    let suite = match a.suite {
        SuiteArg::Fidelity => Suite::Fidelity,
        SuiteArg::Classify => Suite::Classify,
        SuiteArg::Qfi => Suite::Qfi,
        SuiteArg::All => Suite::All,
    };
    let mut cases = oracle::run_suite(suite, a.cutoff)?;
    if matches!(suite, Suite::Fidelity | Suite::All) {
        for (k, (s0, s1)) in random_pairs(cli.seed, a.random)?.iter().enumerate() {
            let g = fidelity_gaussian(s0, s1, cli.epsilon)?.fidelity;
            let (f0, f1) = oracle::balanced_fock_pair(s0, s1, a.cutoff)?;
            let o = gaussfid::fidelity_fock(&f0, &f1)?;
            let abs_err = (g - o).abs();
            cases.push(OracleCase {
                case: format!("fidelity random seed={} #{k}", cli.seed),
                gaussian_value: g,
                oracle_value: o,
                abs_err,
                pass: abs_err < oracle::FIDELITY_TOL,
            });
        }
    }
    Ok(Value::Array(cases.iter().map(case_json).collect()))
}

/// Runs the command and returns the text to emit.
pub fn run(cli: &Cli) -> CliResult<String> {
    if !(cli.epsilon >= 0.0) {
        return Err(CliError::Usage("--epsilon must be nonnegative".into()));
    }
    let value = match &cli.command {
        Command::Fidelity(a) => fidelity_cmd(cli, a)?,
        Command::Classify(a) => classify_cmd(cli, a)?,
        Command::Sweep(a) => return sweep_csv(a),
        Command::Qfi(a) => qfi_cmd(cli, a)?,
        Command::OracleCheck(a) => oracle_cmd(cli, a)?,
    };
    Ok(serde_json::to_string_pretty(&value).expect("JSON values serialize") + "\n")
}
