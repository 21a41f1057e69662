//! `qig`: divergences, metrics, verification suites and DPI scans from the command line.
//!
//! Exit codes: 0 success, 1 numeric failure or failed check, 2 invalid input.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use qig_core::channel::{dpi_scan, monotonicity_check, ChannelFamily};
use qig_core::entropy::{
    bures_divergence, log_form, qz_divergence, tsallis_divergence, von_neumann_divergence,
    wigner_yanase_divergence, QZParams,
};
use qig_core::fd::{random_nonkernel_tangent, verify_suite, SuiteCheck, VerificationReport};
use qig_core::metric::{
    default_radial_sequence, metric_qz, radial_limit_qubit, special_metric, SpecialMetric,
};
use qig_core::state::{random_state_with, random_unfolded_with, DensityMatrix, ProbabilityVector};
use qig_core::su_basis::build_su_basis;
use qig_core::Error;

use output::{emit, state_to_json, CliError, Format};

#[derive(Parser, Debug)]
#[command(name = "qig", version, about = "q-z relative entropies and their metrics")]
struct Cli {
    /// JSON file whose keys are used as default flag values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Write output here (atomically) instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Random seed.
    #[arg(long, env = "QIG_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// q-z divergence of two states.
    Divergence(DivergenceArgs),
    /// Closed-form metric tensor at a diagonal state.
    Metric(MetricArgs),
    /// Finite-difference verification suite.
    Verify(VerifyArgs),
    /// Empirical data-processing scan over a (q, z) grid.
    DpiScan(DpiArgs),
    /// Metric monotonicity under random channels.
    Monotonicity(MonotonicityArgs),
    /// Qubit tangential coefficient along w -> 1.
    Radial(RadialArgs),
    /// Dump the su(n) generator basis.
    Basis(BasisArgs),
    /// Dump a seeded random state.
    State(StateArgs),
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct DivergenceArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    z: f64,
    /// First state as JSON; generated from the seed when absent.
    #[arg(long, value_name = "FILE")]
    rho: Option<PathBuf>,
    /// Second state as JSON; generated from the seed when absent.
    #[arg(long, value_name = "FILE")]
    sigma: Option<PathBuf>,
    /// Smallest eigenvalue of generated states.
    #[arg(long, default_value_t = 0.01)]
    min_eig: f64,
    /// Also report the named divergences and the log form.
    #[arg(long)]
    all: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SpecialName {
    Bures,
    WignerYanase,
    Tsallis,
    VonNeumann,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct MetricArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: usize,
    /// Comma-separated eigenvalues.
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long, value_enum)]
    special: Option<SpecialName>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CheckName {
    Criticality,
    Hessian,
    SlotIdentities,
    Skewness,
    Kernel,
}

impl From<CheckName> for SuiteCheck {
    fn from(c: CheckName) -> Self {
        match c {
            CheckName::Criticality => SuiteCheck::Criticality,
            CheckName::Hessian => SuiteCheck::Hessian,
            CheckName::SlotIdentities => SuiteCheck::SlotIdentities,
            CheckName::Skewness => SuiteCheck::Skewness,
            CheckName::Kernel => SuiteCheck::Kernel,
        }
    }
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Dimensions to test.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 0.4)]
    q: f64,
    #[arg(long, default_value_t = 1.3)]
    z: f64,
    /// Restrict to these checks (default: all).
    #[arg(long, value_enum, value_delimiter = ',')]
    check: Vec<CheckName>,
    /// Random tangent vectors for the Hessian comparison.
    #[arg(long, default_value_t = 10)]
    probes: usize,
    /// Multiply every tolerance by this factor.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ChannelName {
    Random,
    Unitary,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct DpiArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Explicit q values.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["q_range", "proven"])]
    q_grid: Vec<f64>,
    /// Explicit z values.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["z_range", "proven"])]
    z_grid: Vec<f64>,
    /// `min,max,count` for an evenly spaced q grid.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.025, 0.975, 20.0])]
    q_range: Vec<f64>,
    /// `min,max,count` for an evenly spaced z grid.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 2.0, 20.0])]
    z_range: Vec<f64>,
    /// Scan only parameter points where the inequality is known to hold.
    #[arg(long)]
    proven: bool,
    #[arg(long, value_enum, default_value_t = ChannelName::Random)]
    channel: ChannelName,
    /// Environment dimension of random channels.
    #[arg(long, default_value_t = 2)]
    env_dim: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct MonotonicityArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    z: f64,
    #[arg(long, default_value_t = 50)]
    trials: usize,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct RadialArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    z: f64,
    /// Strictly increasing Bloch radii in (0, 1).
    #[arg(long, value_delimiter = ',')]
    w: Vec<f64>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct BasisArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: usize,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct StateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.01)]
    min_eig: f64,
}

fn with_schema(command: &str, body: impl Serialize) -> Result<Value, CliError> {
    let mut v = serde_json::to_value(body).map_err(|e| CliError::Numeric(e.to_string()))?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| CliError::Numeric("output is not a JSON object".into()))?;
    obj.insert("schema".into(), json!(output::SCHEMA));
    obj.insert("command".into(), json!(command));
    Ok(v)
}

fn cmd_divergence(a: DivergenceArgs) -> Result<(), CliError> {
    let params = QZParams::new(a.q, a.z)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed);
    let mut load = |path: &Option<PathBuf>| -> Result<DensityMatrix, CliError> {
        match path {
            Some(p) => output::read_state(p),
            None => Ok(random_state_with(a.n, a.min_eig, &mut rng)?),
        }
    };
    let rho = load(&a.rho)?;
    let sigma = load(&a.sigma)?;
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        }
        .into());
    }
    let value = qz_divergence(&rho, &sigma, params)?;
    let mut body = json!({ "n": rho.dim(), "q": a.q, "z": a.z, "value": value });
    if a.all {
        body["named"] = json!({
            "von_neumann": von_neumann_divergence(&rho, &sigma)?,
            "bures": bures_divergence(&rho, &sigma)?,
            "wigner_yanase": wigner_yanase_divergence(&rho, &sigma)?,
            "tsallis": tsallis_divergence(&rho, &sigma, a.q)?,
            "log_form": log_form(&rho, &sigma, params)?,
        });
    }
    body["rho"] = state_to_json(&rho);
    body["sigma"] = state_to_json(&sigma);
    emit(&a.common.output, &with_schema("divergence", body)?, Format::Json)
}

fn cmd_metric(a: MetricArgs) -> Result<(), CliError> {
    if a.p.len() != a.n {
        return Err(Error::DimMismatch {
            expected: a.n,
            got: a.p.len(),
        }
        .into());
    }
    let p = ProbabilityVector::new(a.p)?;
    let basis = build_su_basis(a.n)?;
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| CliError::Invalid(format!("--{name} is required for this metric")))
    };
    let g = match a.special {
        None => metric_qz(&p, QZParams::new(need(a.q, "q")?, need(a.z, "z")?)?, &basis)?,
        Some(SpecialName::Bures) => special_metric(&p, SpecialMetric::Bures, &basis)?,
        Some(SpecialName::WignerYanase) => special_metric(&p, SpecialMetric::WignerYanase, &basis)?,
        Some(SpecialName::Tsallis) => special_metric(&p, SpecialMetric::Tsallis { q: need(a.q, "q")? }, &basis)?,
        Some(SpecialName::VonNeumann) => special_metric(&p, SpecialMetric::VonNeumann, &basis)?,
    };
    emit(&a.common.output, &with_schema("metric", g)?, Format::Json)
}

fn cmd_verify(a: VerifyArgs) -> Result<(), CliError> {
    let params = QZParams::new(a.q, a.z)?;
    if !(a.tol_scale > 0.0) {
        return Err(CliError::Invalid(format!("--tol-scale must be positive, got {}", a.tol_scale)));
    }
    let checks: Vec<SuiteCheck> = if a.check.is_empty() {
        SuiteCheck::ALL.to_vec()
    } else {
        a.check.iter().map(|&c| c.into()).collect()
    };
    let mut all = VerificationReport { checks: Vec::new() };
    for &n in &a.n {
        let basis = build_su_basis(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed ^ (n as u64).rotate_left(32));
        let base = random_unfolded_with(n, 0.05, &mut rng)?;
        let probes = (0..a.probes)
            .map(|_| random_nonkernel_tangent(&base, &basis, &mut rng))
            .collect::<qig_core::Result<Vec<_>>>()?;
        let r = verify_suite(base, &basis, params, &checks, &probes, a.tol_scale)?;
        all.checks.extend(r.checks);
    }
    let passed = all.passed();
    let body = json!({ "q": a.q, "z": a.z, "tol_scale": a.tol_scale, "passed": passed, "checks": all.checks });
    emit(&a.common.output, &with_schema("verify", body)?, Format::Json)?;
    if passed {
        Ok(())
    } else {
        let names: Vec<&str> = all.failures().map(|c| c.name.as_str()).collect();
        Err(CliError::CheckFailed(format!("failing checks: {}", names.join(", "))))
    }
}

fn range_grid(r: &[f64], name: &str) -> Result<Vec<f64>, CliError> {
    let &[lo, hi, count] = r else {
        return Err(CliError::Invalid(format!("--{name}-range takes min,max,count")));
    };
    if !(count >= 1.0 && count.fract() == 0.0) || !(lo <= hi) {
        return Err(CliError::Invalid(format!("--{name}-range needs min <= max and a positive integer count")));
    }
    let k = count as usize;
    if k == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect())
}

/// Proven-region sample points.
const PROVEN_POINTS: [(f64, f64); 6] = [(0.25, 1.0), (0.5, 1.0), (0.75, 1.0), (0.6, 0.6), (0.9, 0.9), (0.5, 0.5)];

fn cmd_dpi_scan(a: DpiArgs) -> Result<(), CliError> {
    let family = match a.channel {
        ChannelName::Random => ChannelFamily::Random { env_dim: a.env_dim },
        ChannelName::Unitary => ChannelFamily::Unitary,
    };
    let result = if a.proven {
        let mut grid = Vec::new();
        let mut base = None;
        for (i, &(q, z)) in PROVEN_POINTS.iter().enumerate() {
            let r = dpi_scan(&[q], &[z], a.n, a.trials, a.common.seed.wrapping_add(i as u64), family)?;
            grid.extend(r.grid.iter().cloned());
            base.get_or_insert(r);
        }
        let mut r = base.expect("non-empty preset");
        r.grid = grid;
        r
    } else {
        let q = if a.q_grid.is_empty() { range_grid(&a.q_range, "q")? } else { a.q_grid.clone() };
        let z = if a.z_grid.is_empty() { range_grid(&a.z_range, "z")? } else { a.z_grid.clone() };
        dpi_scan(&q, &z, a.n, a.trials, a.common.seed, family)?
    };
    match a.format {
        Format::Json => emit(&a.common.output, &with_schema("dpi-scan", &result)?, Format::Json)?,
        Format::Csv => output::emit_text(&a.common.output, &result.to_csv())?,
    }
    let bad = result.proven_violations();
    if bad > 0 {
        return Err(CliError::CheckFailed(format!("{bad} violations at parameters in the proven region")));
    }
    Ok(())
}

fn cmd_monotonicity(a: MonotonicityArgs) -> Result<(), CliError> {
    let r = monotonicity_check(QZParams::new(a.q, a.z)?, a.n, a.trials, a.common.seed)?;
    emit(&a.common.output, &with_schema("monotonicity", &r)?, Format::Json)?;
    if r.passed() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("{} monotonicity failures", r.failures)))
    }
}

fn cmd_radial(a: RadialArgs) -> Result<(), CliError> {
    let seq = if a.w.is_empty() { default_radial_sequence() } else { a.w };
    let r = radial_limit_qubit(QZParams::new(a.q, a.z)?, &seq)?;
    emit(&a.common.output, &with_schema("radial", &r)?, Format::Json)
}

fn cmd_basis(a: BasisArgs) -> Result<(), CliError> {
    let b = build_su_basis(a.n)?;
    let generators: Vec<Value> = b
        .generators()
        .iter()
        .zip(b.kinds())
        .map(|(g, k)| {
            let mut v = json!(k);
            v["entries"] = output::matrix_entries(g);
            v
        })
        .collect();
    let body = json!({ "n": a.n, "convention": qig_core::metric::BASIS_CONVENTION, "generators": generators });
    emit(&a.common.output, &with_schema("basis", body)?, Format::Json)
}

fn cmd_state(a: StateArgs) -> Result<(), CliError> {
    let rho = random_state_with(a.n, a.min_eig, &mut ChaCha8Rng::seed_from_u64(a.common.seed))?;
    emit(&a.common.output, &state_to_json(&rho), Format::Json)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Divergence(a) => cmd_divergence(a),
        Command::Metric(a) => cmd_metric(a),
        Command::Verify(a) => cmd_verify(a),
        Command::DpiScan(a) => cmd_dpi_scan(a),
        Command::Monotonicity(a) => cmd_monotonicity(a),
        Command::Radial(a) => cmd_radial(a),
        Command::Basis(a) => cmd_basis(a),
        Command::State(a) => cmd_state(a),
    }
}

fn main() -> ExitCode {
    let argv = match config::expand_config(std::env::args_os().collect()) {
        Ok(v) => v,
        Err(e) => return e.report(),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
