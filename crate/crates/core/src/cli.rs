//! The `actsense` command line.
//!
//! Every document written embeds a [`RunManifest`] holding the model and all
//! resolved settings; `actsense rerun DOC` regenerates the document from it.
//! The worker-thread count is not part of the manifest because it cannot
//! change any output.
//!
//! Exit codes: 0 success, 1 invalid model, flags or settings, 2 I/O failure,
//! 3 a failed acceptance check in `reproduce`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exponents::{
    default_eta_grid, example_closed_forms, exponent_report, open_loop_exponent,
    table1_epsilon, ExampleClosedForms, ExponentReport, ExponentSettings, OptimizerSettings,
};
use crate::fss::{FssConfig, FssPolicy};
use crate::model::{check_positivity, table1_model, ModelDocument, SensingModel};
use crate::montecarlo::{estimate_fss, estimate_sequential, fit_exponent, ExponentFit, SimReport};
use crate::sequential::{SequentialConfig, DEFAULT_EXPLORATION_BASE, DEFAULT_MAX_STEPS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "actsense", version, about = "Error exponents and Monte Carlo for multihypothesis testing with observation control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model document and report where positivity fails.
    Validate {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
    },
    /// Compute the exponents, bounds and sequential denominators of a model.
    Exponents {
        #[command(flatten)]
        source: ModelArgs,
        /// Simplex lattice spacing for seeding the open-loop search.
        #[arg(long, default_value_t = 0.02)]
        lattice_resolution: f64,
        /// Smallest step of the open-loop local refinement.
        #[arg(long, default_value_t = 1e-5)]
        refine_step: f64,
        /// η grid for the causal lower bound [default: 0.05, 0.10, ..., 5.00, plus the example's η]
        #[arg(long, value_delimiter = ',')]
        eta: Option<Vec<f64>>,
        /// Lattice spacing over beliefs ν for the causal lower bound.
        #[arg(long, default_value_t = 0.02)]
        nu_resolution: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo sweep of fixed-sample or sequential tests.
    Simulate(SimulateArgs),
    /// Run the whole three-sensor example pipeline and check it.
    Reproduce {
        /// Crossover probability ε of the example, in (0, 1/2).
        #[arg(long)]
        eps: f64,
        /// Trials per hypothesis for the fixed-sample, risk and modified runs.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Trials per hypothesis and `c` for the sequential Chernoff sweep.
        #[arg(long, default_value_t = 10_000)]
        seq_trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Regenerate a document from the manifest it embeds.
    Rerun {
        /// A document written by exponents, simulate or reproduce.
        #[arg(value_name = "DOC")]
        document: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ModelArgs {
    /// Model document (JSON).
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
    /// Use the three-sensor example with crossover probability EPS.
    #[arg(long, value_name = "EPS")]
    table1: Option<f64>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Doc)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Doc,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Fss,
    Seq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum PolicyName {
    OpenLoop,
    Causal,
    Mismatched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    Chernoff,
    Modified,
    Risk,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: ModelArgs,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Fixed-sample policies [default: open_loop,causal]
    #[arg(long, value_enum, value_delimiter = ',')]
    policy: Option<Vec<PolicyName>>,
    /// Fixed-sample sizes [default: 10,20,30,40]
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Sequential variant [default: chernoff]
    #[arg(long, value_enum)]
    variant: Option<VariantName>,
    /// Stopping parameters c in (0, 1] [default: 0.01,0.001,0.0001]
    #[arg(long, value_delimiter = ',')]
    c: Option<Vec<f64>>,
    /// Exploration base a > 1 of the modified and risk variants [default: 1.5]
    #[arg(long)]
    a: Option<f64>,
    /// Risk bounds, one per hypothesis (risk variant).
    #[arg(long, value_delimiter = ',')]
    rbar: Option<Vec<f64>>,
    /// Prior over hypotheses (risk variant) [default: uniform]
    #[arg(long, value_delimiter = ',')]
    prior: Option<Vec<f64>>,
    /// η of the mismatched policy [default: 1]
    #[arg(long)]
    eta: Option<f64>,
    /// Smoothing of the mismatched policy [default: 0.5]
    #[arg(long)]
    eps_smooth: Option<f64>,
    /// Truncation cap for sequential trials [default: 1000000]
    #[arg(long)]
    max_steps: Option<u64>,
    /// Trials per hypothesis and sweep point.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Where the model came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Path(String),
    Table1(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentsSettings {
    pub lattice_resolution: f64,
    pub refine_step: f64,
    pub eta: Vec<f64>,
    pub nu_resolution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSettings {
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fss: Option<FssSweep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq: Option<SeqSweep>,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssSweep {
    pub policies: Vec<PolicyName>,
    pub n: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_smooth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqSweep {
    pub variant: VariantName,
    /// Empty for the risk variant, which has no `c`.
    pub c: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rbar: Option<Vec<f64>>,
    pub max_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproduceSettings {
    pub eps: f64,
    pub trials: u64,
    pub seq_trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Settings {
    Exponents(ExponentsSettings),
    Simulate(SimulateSettings),
    Reproduce(ReproduceSettings),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub model_source: ModelSource,
    pub model: ModelDocument,
    pub settings: Settings,
}

/// Failures of a command, mapped onto exit codes.
enum Failure {
    Invalid(String),
    Io(String),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(io) => Failure::Io(io.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            EXIT_IO
        }
        Err(Failure::Checks) => EXIT_CHECK_FAILED,
    }
}

fn dispatch(command: Command) -> CmdResult<()> {
    match command {
        Command::Validate { model } => validate(&model),
        Command::Exponents {
            source,
            lattice_resolution,
            refine_step,
            eta,
            nu_resolution,
            output,
        } => {
            let (source, model) = load_source(&source)?;
            let eta = eta.unwrap_or_else(|| default_eta_grid(&model));
            let settings = Settings::Exponents(ExponentsSettings {
                lattice_resolution,
                refine_step,
                eta,
                nu_resolution,
            });
            execute(manifest(source, &model, settings), 1, &output)
        }
        Command::Simulate(args) => {
            let (source, model) = load_source(&args.source)?;
            let settings = Settings::Simulate(resolve_simulate(&args, &model)?);
            let threads = threads_or_default(args.threads);
            execute(manifest(source, &model, settings), threads, &args.output)
        }
        Command::Reproduce {
            eps,
            trials,
            seq_trials,
            seed,
            threads,
            output,
        } => {
            let model = table1_model(eps)?;
            let settings = Settings::Reproduce(ReproduceSettings {
                eps,
                trials,
                seq_trials,
                seed,
            });
            execute(manifest(ModelSource::Table1(eps), &model, settings), threads_or_default(threads), &output)
        }
        Command::Rerun {
            document,
            threads,
            output,
        } => {
            let text = read_file(&document)?;
            #[derive(Deserialize)]
            struct Envelope {
                manifest: RunManifest,
            }
            let envelope: Envelope = serde_json::from_str(&text)
                .map_err(|e| Failure::Invalid(format!("{}: not a document with a manifest: {e}", document.display())))?;
            execute(envelope.manifest, threads_or_default(threads), &output)
        }
    }
}

fn threads_or_default(threads: Option<usize>) -> usize {
    threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn manifest(source: ModelSource, model: &SensingModel, settings: Settings) -> RunManifest {
    RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        model_source: source,
        model: model.to_document(),
        settings,
    }
}

fn read_file(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_source(args: &ModelArgs) -> CmdResult<(ModelSource, SensingModel)> {
    match (&args.model, args.table1) {
        (Some(path), None) => {
            let model = SensingModel::from_json(&read_file(path)?)?;
            Ok((ModelSource::Path(path.display().to_string()), model))
        }
        (None, Some(eps)) => Ok((ModelSource::Table1(eps), table1_model(eps)?)),
        _ => Err(Failure::Invalid("give exactly one of --model and --table1".into())),
    }
}

fn write_output(output: &OutputArgs, text: &str) -> CmdResult<()> {
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Io(e.to_string()))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct ValidationReport {
    valid: bool,
    hypotheses: usize,
    controls: Vec<String>,
    observations: Vec<String>,
    positivity_holds: bool,
    /// Controls under which two hypotheses have identical pmfs.
    positivity_failures: Vec<PositivityFailure>,
}

#[derive(Serialize)]
struct PositivityFailure {
    control: String,
    i: usize,
    j: usize,
}

fn validate(path: &Path) -> CmdResult<()> {
    let model = SensingModel::from_json(&read_file(path)?)?;
    let positivity = check_positivity(&model);
    let report = ValidationReport {
        valid: true,
        hypotheses: model.num_hypotheses(),
        controls: model.controls().to_vec(),
        observations: model.observations().to_vec(),
        positivity_holds: positivity.holds_overall,
        positivity_failures: positivity
            .failures
            .iter()
            .map(|&(u, i, j)| PositivityFailure {
                control: model.control_label(u).to_string(),
                i,
                j,
            })
            .collect(),
    };
    print!("{}", to_json(&report));
    Ok(())
}

fn resolve_simulate(args: &SimulateArgs, model: &SensingModel) -> CmdResult<SimulateSettings> {
    let bad = |msg: &str| Err(Failure::Invalid(msg.to_string()));
    if args.trials == 0 {
        return bad("--trials must be positive");
    }
    let m = model.num_hypotheses();
    let (fss, seq) = match args.mode {
        Mode::Fss => {
            if args.variant.is_some() || args.c.is_some() || args.a.is_some() {
                return bad("--variant, --c and --a apply to --mode seq only");
            }
            if args.rbar.is_some() || args.prior.is_some() || args.max_steps.is_some() {
                return bad("--rbar, --prior and --max-steps apply to --mode seq only");
            }
            let policies = args.policy.clone().unwrap_or(vec![PolicyName::OpenLoop, PolicyName::Causal]);
            let mismatched = policies.contains(&PolicyName::Mismatched);
            if !mismatched && (args.eta.is_some() || args.eps_smooth.is_some()) {
                return bad("--eta and --eps-smooth apply to the mismatched policy only");
            }
            let n = args.n.clone().unwrap_or(vec![10, 20, 30, 40]);
            if n.is_empty() || n.contains(&0) {
                return bad("--n values must be positive");
            }
            let fss = FssSweep {
                policies,
                n,
                eta: mismatched.then(|| args.eta.unwrap_or(1.0)),
                eps_smooth: mismatched.then(|| args.eps_smooth.unwrap_or(0.5)),
            };
            (Some(fss), None)
        }
        Mode::Seq => {
            if args.policy.is_some() || args.n.is_some() || args.eta.is_some() || args.eps_smooth.is_some() {
                return bad("--policy, --n, --eta and --eps-smooth apply to --mode fss only");
            }
            let variant = args.variant.unwrap_or(VariantName::Chernoff);
            let max_steps = args.max_steps.unwrap_or(DEFAULT_MAX_STEPS);
            let seq = match variant {
                VariantName::Risk => {
                    if args.c.is_some() {
                        return bad("--c does not apply to the risk variant; use --rbar");
                    }
                    let Some(rbar) = args.rbar.clone() else {
                        return bad("the risk variant needs --rbar with one bound per hypothesis");
                    };
                    SeqSweep {
                        variant,
                        c: Vec::new(),
                        a: Some(args.a.unwrap_or(DEFAULT_EXPLORATION_BASE)),
                        prior: Some(args.prior.clone().unwrap_or(vec![1.0 / m as f64; m])),
                        rbar: Some(rbar),
                        max_steps,
                    }
                }
                VariantName::Chernoff | VariantName::Modified => {
                    if args.rbar.is_some() || args.prior.is_some() {
                        return bad("--rbar and --prior apply to the risk variant only");
                    }
                    if variant == VariantName::Chernoff && args.a.is_some() {
                        return bad("--a applies to the modified and risk variants only");
                    }
                    let c = args.c.clone().unwrap_or(vec![1e-2, 1e-3, 1e-4]);
                    if c.is_empty() {
                        return bad("--c needs at least one value");
                    }
                    SeqSweep {
                        variant,
                        c,
                        a: (variant == VariantName::Modified).then(|| args.a.unwrap_or(DEFAULT_EXPLORATION_BASE)),
                        prior: None,
                        rbar: None,
                        max_steps,
                    }
                }
            };
            (None, Some(seq))
        }
    };
    let settings = SimulateSettings {
        mode: args.mode,
        fss,
        seq,
        trials: args.trials,
        seed: args.seed,
    };
    // Catch parameter errors before any simulation runs.
    for config in fss_configs(&settings, model)? {
        config.1.validate(model)?;
    }
    for (_, config) in seq_configs(&settings)? {
        config.validate(m)?;
    }
    Ok(settings)
}

fn fss_policy(name: PolicyName, sweep: &FssSweep, model: &SensingModel) -> Result<FssPolicy> {
    Ok(match name {
        PolicyName::OpenLoop => FssPolicy::OpenLoop {
            q: open_loop_exponent(model, &OptimizerSettings::default())?.1,
        },
        PolicyName::Causal => FssPolicy::CausalChernoff,
        PolicyName::Mismatched => FssPolicy::Mismatched {
            eta: sweep.eta.unwrap_or(1.0),
            eps_smooth: sweep.eps_smooth.unwrap_or(0.5),
        },
    })
}

/// `(policy, config)` for every sweep point, policies outermost.
fn fss_configs(settings: &SimulateSettings, model: &SensingModel) -> Result<Vec<(PolicyName, FssConfig)>> {
    let Some(sweep) = &settings.fss else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for &name in &sweep.policies {
        let policy = fss_policy(name, sweep, model)?;
        for &n in &sweep.n {
            out.push((
                name,
                FssConfig {
                    policy: policy.clone(),
                    n,
                },
            ));
        }
    }
    Ok(out)
}

fn seq_configs(settings: &SimulateSettings) -> Result<Vec<(Option<f64>, SequentialConfig)>> {
    let Some(sweep) = &settings.seq else {
        return Ok(Vec::new());
    };
    let a = sweep.a.unwrap_or(DEFAULT_EXPLORATION_BASE);
    Ok(match sweep.variant {
        VariantName::Risk => {
            let prior = sweep.prior.clone().ok_or_else(|| invalid("risk variant without prior"))?;
            let rbar = sweep.rbar.clone().ok_or_else(|| invalid("risk variant without risk bounds"))?;
            vec![(None, SequentialConfig::risk_constrained(a, prior, rbar).with_max_steps(sweep.max_steps))]
        }
        VariantName::Chernoff => sweep
            .c
            .iter()
            .map(|&c| (Some(c), SequentialConfig::chernoff(c).with_max_steps(sweep.max_steps)))
            .collect(),
        VariantName::Modified => sweep
            .c
            .iter()
            .map(|&c| (Some(c), SequentialConfig::modified(c, a).with_max_steps(sweep.max_steps)))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<VariantName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub report: SimReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFit {
    pub policy: PolicyName,
    /// Fit of `-ln(max error)` against `n`, or why there is none.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<ExponentFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn run_simulation(settings: &SimulateSettings, model: &SensingModel, threads: usize) -> Result<Vec<SweepPoint>> {
    let mut points = Vec::new();
    for (name, config) in fss_configs(settings, model)? {
        let report = estimate_fss(model, &config, settings.trials, settings.seed, threads)?;
        points.push(SweepPoint {
            policy: Some(name),
            n: Some(config.n),
            variant: None,
            c: None,
            report,
        });
    }
    let variant = settings.seq.as_ref().map(|s| s.variant);
    for (c, config) in seq_configs(settings)? {
        let report = estimate_sequential(model, &config, settings.trials, settings.seed, threads)?;
        points.push(SweepPoint {
            policy: None,
            n: None,
            variant,
            c,
            report,
        });
    }
    Ok(points)
}

fn policy_fits(points: &[SweepPoint]) -> Vec<PolicyFit> {
    let mut names: Vec<PolicyName> = Vec::new();
    for p in points {
        if let Some(name) = p.policy {
            if !names.contains(&name) {
                names.push(name);
            }
        }
    }
    names
        .into_iter()
        .map(|name| {
            let data: Vec<(f64, f64)> = points
                .iter()
                .filter(|p| p.policy == Some(name))
                .map(|p| (p.n.unwrap_or(0) as f64, p.report.max_error))
                .collect();
            match fit_exponent(&data) {
                Ok(fit) => PolicyFit {
                    policy: name,
                    fit: Some(fit),
                    note: (fit.excluded > 0)
                        .then(|| format!("{} point(s) with zero observed error excluded", fit.excluded)),
                },
                Err(e) => PolicyFit {
                    policy: name,
                    fit: None,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect()
}

#[derive(Serialize)]
struct ExponentsDocument<'a> {
    manifest: &'a RunManifest,
    report: ExponentReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_forms: Option<ExampleClosedForms>,
    notes: Vec<String>,
}

#[derive(Serialize)]
struct SimulateDocument<'a> {
    manifest: &'a RunManifest,
    results: Vec<SweepPoint>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    fits: Vec<PolicyFit>,
}

const DENOMINATOR_NOTE: &str = "The sequential denominators are the maximin values computed from the model. For this \
example they equal (1 - 2 eps) ln((1 - eps)/eps), attained by the diagonal control. The smaller single-sensor Chernoff \
information -ln(2 sqrt(eps (1 - eps))) (closed_forms.seq_denominator_paper) is sometimes quoted in its place.";

fn execute(manifest: RunManifest, threads: usize, output: &OutputArgs) -> CmdResult<()> {
    let model = manifest.model.clone().into_model()?;
    match &manifest.settings {
        Settings::Exponents(s) => {
            if output.format == Format::Csv {
                return Err(Failure::Invalid("--format csv is only available for simulate".into()));
            }
            let settings = ExponentSettings {
                optimizer: OptimizerSettings {
                    lattice_resolution: s.lattice_resolution,
                    refine_step: s.refine_step,
                    ..OptimizerSettings::default()
                },
                eta_grid: Some(s.eta.clone()),
                nu_resolution: s.nu_resolution,
            };
            let report = exponent_report(&model, &settings)?;
            let eps = table1_epsilon(&model);
            let doc = ExponentsDocument {
                manifest: &manifest,
                report,
                closed_forms: eps.map(example_closed_forms).transpose()?,
                notes: eps.map(|_| DENOMINATOR_NOTE.to_string()).into_iter().collect(),
            };
            write_output(output, &to_json(&doc))
        }
        Settings::Simulate(s) => {
            let results = run_simulation(s, &model, threads)?;
            match output.format {
                Format::Doc => {
                    let fits = policy_fits(&results);
                    write_output(
                        output,
                        &to_json(&SimulateDocument {
                            manifest: &manifest,
                            results,
                            fits,
                        }),
                    )
                }
                Format::Csv => {
                    write_output(output, &simulate_csv(s.mode, &results))?;
                    if let Some(path) = &output.out {
                        let mut sidecar = path.clone().into_os_string();
                        sidecar.push(".manifest.json");
                        #[derive(Serialize)]
                        struct Only<'a> {
                            manifest: &'a RunManifest,
                        }
                        fs::write(&sidecar, to_json(&Only { manifest: &manifest }))
                            .map_err(|e| Failure::Io(format!("{}: {e}", PathBuf::from(&sidecar).display())))?;
                    }
                    Ok(())
                }
            }
        }
        Settings::Reproduce(s) => {
            if output.format == Format::Csv {
                return Err(Failure::Invalid("--format csv is only available for simulate".into()));
            }
            let doc = reproduce(&manifest, s, &model, threads)?;
            let passed = doc.passed;
            write_output(output, &to_json(&doc))?;
            for check in &doc.checks {
                eprintln!("{} {}", if check.pass { "PASS" } else { "FAIL" }, check.name);
            }
            if passed {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
    }
}

/// Fixed column order: sweep keys, hypothesis, estimate, ci_lo, ci_hi,
/// mean_N, se_N. Empty cells where a value does not apply.
fn simulate_csv(mode: Mode, points: &[SweepPoint]) -> String {
    let mut out = String::new();
    match mode {
        Mode::Fss => out.push_str("policy,n,hypothesis,estimate,ci_lo,ci_hi,mean_N,se_N\n"),
        Mode::Seq => out.push_str("variant,c,hypothesis,estimate,ci_lo,ci_hi,mean_N,se_N\n"),
    }
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in points {
        let keys = match mode {
            Mode::Fss => format!(
                "{},{}",
                p.policy.map(policy_label).unwrap_or_default(),
                p.n.map(|n| n.to_string()).unwrap_or_default()
            ),
            Mode::Seq => format!("{},{}", p.variant.map(variant_label).unwrap_or_default(), opt(p.c)),
        };
        for h in &p.report.hypotheses {
            out.push_str(&format!(
                "{keys},{},{},{},{},{},{}\n",
                h.hypothesis,
                h.error,
                h.ci_lo,
                h.ci_hi,
                opt(h.mean_n),
                opt(h.se_n)
            ));
        }
    }
    out
}

fn policy_label(p: PolicyName) -> &'static str {
    match p {
        PolicyName::OpenLoop => "open_loop",
        PolicyName::Causal => "causal",
        PolicyName::Mismatched => "mismatched",
    }
}

fn variant_label(v: VariantName) -> &'static str {
    match v {
        VariantName::Chernoff => "chernoff",
        VariantName::Modified => "modified",
        VariantName::Risk => "risk",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: String,
    pub pass: bool,
}

fn check(name: &str, value: f64, target: String, pass: bool) -> Check {
    Check {
        name: name.to_string(),
        value,
        target,
        pass,
    }
}

#[derive(Serialize)]
struct ReproduceDocument<'a> {
    manifest: &'a RunManifest,
    closed_forms: ExampleClosedForms,
    exponents: ExponentReport,
    fss: Vec<SweepPoint>,
    fits: Vec<PolicyFit>,
    sequential: Vec<SweepPoint>,
    risk_constrained: SweepPoint,
    modified: SweepPoint,
    checks: Vec<Check>,
    passed: bool,
    notes: Vec<String>,
}

/// Fixed-sample sizes, stopping parameters and risk bounds of the pipeline.
const REPRODUCE_N: [usize; 4] = [10, 20, 30, 40];
const REPRODUCE_C: [f64; 3] = [1e-2, 1e-3, 1e-4];
const REPRODUCE_RBAR: f64 = 0.02;
const REPRODUCE_MODIFIED_C: f64 = 1e-3;
const REPRODUCE_MODIFIED_MAX_STEPS: u64 = 100_000;

fn reproduce<'a>(
    manifest: &'a RunManifest,
    s: &ReproduceSettings,
    model: &SensingModel,
    threads: usize,
) -> CmdResult<ReproduceDocument<'a>> {
    if s.trials == 0 || s.seq_trials == 0 {
        return Err(Failure::Invalid("trial counts must be positive".into()));
    }
    let closed = example_closed_forms(s.eps)?;
    let exponents = exponent_report(model, &ExponentSettings::default())?;
    let mut checks = Vec::new();

    let ol = exponents.open_loop_exponent;
    checks.push(check(
        "open-loop exponent matches closed form",
        ol,
        format!("{} ± 1e-4", closed.beta_ol),
        (ol - closed.beta_ol).abs() <= 1e-4,
    ));
    let ub = exponents.causal_upper.unwrap_or(f64::NAN);
    checks.push(check(
        "causal upper bound matches closed form",
        ub,
        format!("{} ± 1e-9", closed.causal_ub),
        (ub - closed.causal_ub).abs() <= 1e-9,
    ));
    let lb = exponents.causal_lower.as_ref().map_or(f64::NAN, |l| l.safe);
    checks.push(check(
        "causal lower bound (certified) matches closed form",
        lb,
        format!("{} ± 2e-3", closed.causal_lb),
        (lb - closed.causal_lb).abs() <= 2e-3,
    ));
    for (i, d) in exponents.sequential_denominators.iter().enumerate() {
        checks.push(check(
            &format!("sequential denominator {i} matches maximin closed form"),
            *d,
            format!("{} ± 1e-9", closed.seq_denominator_derived),
            (d - closed.seq_denominator_derived).abs() <= 1e-9,
        ));
    }
    checks.push(check(
        "closed forms ordered: open-loop < causal lower < causal upper",
        closed.causal_lb - closed.beta_ol,
        "beta_ol < causal_lb < causal_ub".into(),
        closed.beta_ol < closed.causal_lb && closed.causal_lb < closed.causal_ub,
    ));

    let fss_settings = SimulateSettings {
        mode: Mode::Fss,
        fss: Some(FssSweep {
            policies: vec![PolicyName::OpenLoop, PolicyName::Causal],
            n: REPRODUCE_N.to_vec(),
            eta: None,
            eps_smooth: None,
        }),
        seq: None,
        trials: s.trials,
        seed: s.seed,
    };
    let fss = run_simulation(&fss_settings, model, threads)?;
    let fits = policy_fits(&fss);
    let slope = |name| {
        fits.iter()
            .find(|f| f.policy == name)
            .and_then(|f| f.fit)
            .map_or(f64::NAN, |f| f.slope)
    };
    let (ol_slope, causal_slope) = (slope(PolicyName::OpenLoop), slope(PolicyName::Causal));
    checks.push(check(
        "fixed-sample causal fitted exponent exceeds open-loop",
        causal_slope - ol_slope,
        "> 0".into(),
        causal_slope > ol_slope,
    ));
    checks.push(check(
        "fixed-sample open-loop fitted exponent within 20% of closed form",
        ol_slope,
        format!("[{}, {}]", 0.8 * closed.beta_ol, 1.2 * closed.beta_ol),
        (ol_slope - closed.beta_ol).abs() <= 0.2 * closed.beta_ol,
    ));
    checks.push(check(
        "fixed-sample causal fitted exponent between open-loop exponent and 1.2 x upper bound",
        causal_slope,
        format!("[{}, {}]", closed.beta_ol, 1.2 * closed.causal_ub),
        causal_slope >= closed.beta_ol && causal_slope <= 1.2 * closed.causal_ub,
    ));

    let seq_settings = SimulateSettings {
        mode: Mode::Seq,
        fss: None,
        seq: Some(SeqSweep {
            variant: VariantName::Chernoff,
            c: REPRODUCE_C.to_vec(),
            a: None,
            prior: None,
            rbar: None,
            max_steps: DEFAULT_MAX_STEPS,
        }),
        trials: s.seq_trials,
        seed: s.seed,
    };
    let sequential = run_simulation(&seq_settings, model, threads)?;
    let m = model.num_hypotheses();
    for h in 0..m {
        let data: Vec<(f64, f64)> = sequential
            .iter()
            .map(|p| (-p.c.unwrap_or(1.0).ln(), p.report.hypotheses[h].mean_n.unwrap_or(f64::NAN)))
            .collect();
        let target = 1.0 / exponents.sequential_denominators[h];
        let slope = least_squares_slope(&data);
        checks.push(check(
            &format!("sequential mean stopping time slope in -ln c, hypothesis {h}"),
            slope,
            format!("{target} ± 25%"),
            (slope - target).abs() <= 0.25 * target,
        ));
    }
    let errors: Vec<f64> = sequential.iter().map(|p| p.report.max_error).collect();
    let tolerance: Vec<f64> = sequential
        .iter()
        .map(|p| p.report.hypotheses.iter().map(|h| h.ci_hi - h.error).fold(0.0, f64::max))
        .collect();
    let monotone = errors.windows(2).zip(tolerance.windows(2)).all(|(e, t)| e[1] <= e[0] + t[1].max(t[0]));
    checks.push(check(
        "sequential max error nonincreasing as c decreases",
        errors.last().copied().unwrap_or(f64::NAN),
        "nonincreasing within CI".into(),
        monotone,
    ));

    let risk_settings = SimulateSettings {
        mode: Mode::Seq,
        fss: None,
        seq: Some(SeqSweep {
            variant: VariantName::Risk,
            c: Vec::new(),
            a: Some(DEFAULT_EXPLORATION_BASE),
            prior: Some(vec![1.0 / m as f64; m]),
            rbar: Some(vec![REPRODUCE_RBAR; m]),
            max_steps: DEFAULT_MAX_STEPS,
        }),
        trials: s.trials,
        seed: s.seed,
    };
    let risk_constrained = run_simulation(&risk_settings, model, threads)?.remove(0);
    for r in risk_constrained.report.risks.iter().flatten() {
        checks.push(check(
            &format!("risk of deciding {} within bound", r.hypothesis),
            r.estimate,
            format!("<= {REPRODUCE_RBAR} + 2 x {}", r.half_width),
            r.estimate <= REPRODUCE_RBAR + 2.0 * r.half_width,
        ));
    }

    let modified_settings = SimulateSettings {
        mode: Mode::Seq,
        fss: None,
        seq: Some(SeqSweep {
            variant: VariantName::Modified,
            c: vec![REPRODUCE_MODIFIED_C],
            a: Some(DEFAULT_EXPLORATION_BASE),
            prior: None,
            rbar: None,
            max_steps: REPRODUCE_MODIFIED_MAX_STEPS,
        }),
        trials: s.trials,
        seed: s.seed,
    };
    let modified = run_simulation(&modified_settings, model, threads)?.remove(0);
    checks.push(check(
        "modified test: no truncated trials",
        modified.report.truncated as f64,
        "0".into(),
        modified.report.truncated == 0,
    ));
    checks.push(check(
        "modified test: every error below 0.05",
        modified.report.max_error,
        "< 0.05".into(),
        modified.report.max_error < 0.05,
    ));

    let passed = checks.iter().all(|c| c.pass);
    Ok(ReproduceDocument {
        manifest,
        closed_forms: closed,
        exponents,
        fss,
        fits,
        sequential,
        risk_constrained,
        modified,
        checks,
        passed,
        notes: vec![
            DENOMINATOR_NOTE.to_string(),
            "Fitted exponents come from n in {10, 20, 30, 40}; the exponents are asymptotic, so finite-n fits carry \
             a bias from the polynomial prefactor of the error probability."
                .to_string(),
        ],
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
