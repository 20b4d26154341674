//! `geoqs` command-line driver.

mod manifest;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use geoqs_core::canonical::{
    canonical_grid_state, canonical_sampler, comparison_from, GridResolution, SamplerConfig,
};
use geoqs_core::gstate::{density_matrix, histogram, povm_statistics, GeometricState, Histogram};
use geoqs_core::hybrid::{
    capacity_bounds, decompose, pushforward, pushforward_weighted, reconstruct, reduced_density_matrix, HybridState,
};
use geoqs_core::io::{
    comparison_to_json, decomposition_to_json, density_matrix_report, from_pairs, geometric_state_to_json,
    labeled_ensemble_to_json, scaling_report_to_json, LoadError, LoadedState, MatrixJson, Pair, PovmJson,
    StateFile, CanonicalMode,
};
use geoqs_core::linalg::max_abs_diff;
use geoqs_core::thermo::{
    environment_scaling_report, geometric_state_of, reconstruct_global, reduce, system_density_matrix,
    BipartitePureState,
};
use geoqs_core::verify::{run_suite, suite, CheckStatus, VerifyOptions};
use geoqs_core::{CanonicalSpec, GqsError};
use serde_json::{json, Value};

pub use manifest::{replay_arguments, RunManifest};

const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "geoqs", version, about = "Geometric quantum states on CP^{D-1}")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance for the invariant self-checks run after each computation.
    #[arg(long, global = true, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Output file; stdout when absent. The run manifest goes to
    /// `<output>.manifest.json`, or to stderr without an output file.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Output format. Histograms default to CSV, verify to a plain-text
    /// report, everything else to JSON.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Density matrix of a state file and its eigendecomposition.
    Rho(StateArg),
    /// Outcome probabilities of a POVM.
    Povm {
        #[command(flatten)]
        state: StateArg,
        /// POVM file: {"effects": [matrix, ...]}.
        #[arg(long)]
        povm: PathBuf,
    },
    /// (p, ν) histogram of a qubit state.
    Histogram {
        #[command(flatten)]
        state: StateArg,
        #[command(flatten)]
        bins: BinArgs,
    },
    /// Geometric canonical ensemble compared with the Gibbs state.
    Canonical(CanonicalArgs),
    #[command(subcommand)]
    Hybrid(HybridCommand),
    #[command(subcommand)]
    Thermo(ThermoCommand),
    /// Run the golden-value suite.
    Verify {
        /// Print the check names without running them.
        #[arg(long)]
        list: bool,
        /// Offset added to the computed ρ_00 before comparison.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        perturb_rho00: f64,
    },
    /// Rerun the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Debug, Args)]
struct StateArg {
    /// State file (version "gqs-1").
    #[arg(long)]
    state: PathBuf,
}

#[derive(Debug, Args)]
struct BinArgs {
    /// Bins along p.
    #[arg(long, default_value_t = 20)]
    bins: usize,
    /// Bins along ν; defaults to `--bins`.
    #[arg(long)]
    bins_phase: Option<usize>,
}

impl BinArgs {
    fn shape(&self) -> (usize, usize) {
        (self.bins, self.bins_phase.unwrap_or(self.bins))
    }
}

#[derive(Debug, Args)]
struct CanonicalArgs {
    /// Hamiltonian file: {"dim": D, "matrix": [...]}.
    #[arg(long)]
    hamiltonian: PathBuf,
    #[arg(long)]
    beta: f64,
    /// Quadrature bins per axis.
    #[arg(long, conflicts_with = "samples")]
    grid: Option<usize>,
    /// Metropolis samples kept after burn-in.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    step_p: f64,
    #[arg(long, default_value_t = 0.5)]
    step_phase: f64,
    #[arg(long, default_value_t = 0.1)]
    burn_in: f64,
}

#[derive(Debug, Subcommand)]
enum HybridCommand {
    /// f(x), p(x), φ(x) of a hybrid state.
    Decompose(StateArg),
    /// Reduced density matrix of the discrete factor.
    Reduce(StateArg),
    /// Pushforward of |f|² onto the discrete system's pure states.
    Pushforward {
        #[command(flatten)]
        state: StateArg,
        /// Number of draws.
        #[arg(long, default_value_t = 10_000, conflicts_with = "exact")]
        samples: usize,
        /// Emit one weighted atom per grid cell instead of drawing.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        bins: BinArgs,
    },
    /// Qudit capacity bounds for N continuous degrees of freedom.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
    },
}

#[derive(Debug, Subcommand)]
enum ThermoCommand {
    /// Labeled ensemble of the system for a global pure state.
    Reduce {
        /// Bipartite state file, or a JSON array of [re, im] amplitudes with
        /// the environment index fastest.
        #[arg(long)]
        state: PathBuf,
        /// System dimension; required for a bare amplitude array.
        #[arg(long)]
        ds: Option<usize>,
        #[command(flatten)]
        bins: BinArgs,
    },
    /// Distance of ρ^S from I/d_S for Haar-random global states.
    Scaling {
        #[arg(long)]
        ds: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 8, 64, 512])]
        de: Vec<usize>,
        /// Number of seeds, starting at `--seed`.
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        /// Histogram bins per axis (qubit systems only).
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
}

/// Failure categories, each with its own exit code.
#[derive(Debug)]
enum CliError {
    Schema(String),
    Invariant(String),
    ChecksFailed(usize),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::ChecksFailed(_) => 1,
            CliError::Schema(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }

    fn message(&self) -> String {
        let text = match self {
            CliError::Schema(m) => format!("schema: {m}"),
            CliError::Invariant(m) => format!("invariant: {m}"),
            CliError::ChecksFailed(n) => format!("verify: {n} check(s) failed"),
        };
        text.replace('\n', " ")
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Schema(m) => CliError::Schema(m),
            LoadError::Invariant(g) => g.into(),
        }
    }
}

impl From<GqsError> for CliError {
    fn from(e: GqsError) -> Self {
        CliError::Invariant(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// What a command produced.
struct Outcome {
    body: String,
    seeds: Vec<u64>,
    warnings: Vec<String>,
    failed_checks: usize,
}

impl Outcome {
    fn json(v: Value) -> Self {
        let mut body = serde_json::to_string_pretty(&v).expect("serializable");
        body.push('\n');
        Outcome::text(body)
    }

    fn text(body: String) -> Self {
        Outcome {
            body,
            seeds: Vec::new(),
            warnings: Vec::new(),
            failed_checks: 0,
        }
    }

    fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }
}

/// Run with full `argv` (program name first) and return the exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("error: usage: {first}");
            return 2;
        }
    };
    if let Command::Replay { manifest } = &cli.command {
        return match load_manifest(manifest) {
            Ok(m) => {
                let mut args = vec![argv[0].clone()];
                let output = cli.output.as_ref().map(|p| p.to_string_lossy().into_owned());
                args.extend(replay_arguments(&m, output.as_deref()));
                run(args)
            }
            Err(e) => {
                eprintln!("error: {}", e.message());
                e.code()
            }
        };
    }
    let clock = manifest::ManifestClock::start();
    let result = dispatch(&cli);
    match result {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {}", w.replace('\n', " "));
            }
            if let Err(e) = emit(&cli, &argv, &clock, &outcome) {
                eprintln!("error: {}", e.message());
                return e.code();
            }
            if outcome.failed_checks > 0 {
                let e = CliError::ChecksFailed(outcome.failed_checks);
                eprintln!("error: {}", e.message());
                return e.code();
            }
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Rho(_) => "rho",
        Command::Povm { .. } => "povm",
        Command::Histogram { .. } => "histogram",
        Command::Canonical(_) => "canonical",
        Command::Hybrid(HybridCommand::Decompose(_)) => "hybrid decompose",
        Command::Hybrid(HybridCommand::Reduce(_)) => "hybrid reduce",
        Command::Hybrid(HybridCommand::Pushforward { .. }) => "hybrid pushforward",
        Command::Hybrid(HybridCommand::Bounds { .. }) => "hybrid bounds",
        Command::Thermo(ThermoCommand::Reduce { .. }) => "thermo reduce",
        Command::Thermo(ThermoCommand::Scaling { .. }) => "thermo scaling",
        Command::Verify { .. } => "verify",
        Command::Replay { .. } => "replay",
    }
}

fn emit(cli: &Cli, argv: &[String], clock: &manifest::ManifestClock, outcome: &Outcome) -> CliResult<()> {
    let output = cli.output.as_ref().map(|p| p.to_string_lossy().into_owned());
    if let Some(path) = &cli.output {
        std::fs::write(path, &outcome.body)
            .map_err(|e| CliError::Schema(format!("cannot write {}: {e}", path.display())))?;
    } else {
        print!("{}", outcome.body);
    }
    let m = clock.finish(
        command_name(&cli.command),
        &argv[1..],
        outcome.seeds.clone(),
        cli.tolerance,
        output,
    );
    match &cli.output {
        Some(path) => {
            let text = serde_json::to_string_pretty(&m).expect("serializable");
            let mut name = path.as_os_str().to_owned();
            name.push(".manifest.json");
            std::fs::write(&name, text + "\n")
                .map_err(|e| CliError::Schema(format!("cannot write manifest: {e}")))?;
        }
        None => eprintln!("{}", serde_json::to_string(&m).expect("serializable")),
    }
    Ok(())
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))
}

fn load_manifest(path: &Path) -> CliResult<RunManifest> {
    let m: RunManifest = serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Schema(e.to_string()))?;
    if m.tool != manifest::TOOL {
        return Err(CliError::Schema(format!("manifest was written by {:?}", m.tool)));
    }
    Ok(m)
}

fn load_state(path: &Path) -> CliResult<LoadedState> {
    Ok(StateFile::parse(&read_text(path)?)?.load()?)
}

impl Cli {
    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn require_json(cli: &Cli, what: &str) -> CliResult<()> {
    if cli.format == Some(Format::Csv) {
        return Err(CliError::Schema(format!("{what} has no CSV form; use --format json")));
    }
    Ok(())
}

/// A loaded state reduced to a geometric state on the discrete system.
struct Realized {
    state: GeometricState,
    seeds: Vec<u64>,
    warnings: Vec<String>,
}

fn realize(loaded: LoadedState) -> CliResult<Realized> {
    let mut seeds = Vec::new();
    let mut warnings = Vec::new();
    let state = match loaded {
        LoadedState::Geometric(g) => {
            if let GeometricState::Samples(s) = &g {
                seeds.push(s.seed());
            }
            g
        }
        LoadedState::Canonical { spec, mode } => match mode {
            CanonicalMode::Grid(res) => canonical_grid_state(&spec, res)?.into(),
            CanonicalMode::Sampler(cfg) => {
                seeds.push(cfg.seed);
                let run = canonical_sampler(&spec, &cfg)?;
                warnings.extend(run.warning);
                run.ensemble.into()
            }
        },
        LoadedState::Hybrid(h) => pushforward_weighted(&decompose(&h))?.into(),
        LoadedState::Bipartite(b) => geometric_state_of(&reduce(&b))?.into(),
    };
    Ok(Realized { state, seeds, warnings })
}

fn check_trace(rho: &geoqs_core::DensityMatrix, tol: f64) -> CliResult<()> {
    let tr: f64 = (0..rho.dim()).map(|k| rho.matrix()[(k, k)].re).sum();
    if (tr - 1.0).abs() > tol.max(1e-10) {
        return Err(CliError::Invariant(format!("trace of ρ is {tr}")));
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Rho(a) => cmd_rho(cli, &a.state),
        Command::Povm { state, povm } => cmd_povm(cli, &state.state, povm),
        Command::Histogram { state, bins } => {
            let r = realize(load_state(&state.state)?)?;
            let (bp, bn) = bins.shape();
            let h = histogram(&r.state, bp, bn)?;
            let mut out = histogram_outcome(cli, &h);
            out.seeds = r.seeds;
            out.warnings = r.warnings;
            Ok(out)
        }
        Command::Canonical(a) => cmd_canonical(cli, a),
        Command::Hybrid(h) => cmd_hybrid(cli, h),
        Command::Thermo(t) => cmd_thermo(cli, t),
        Command::Verify { list, perturb_rho00 } => cmd_verify(cli, *list, *perturb_rho00),
        Command::Replay { .. } => unreachable!("handled before dispatch"),
    }
}

fn histogram_outcome(cli: &Cli, h: &Histogram) -> Outcome {
    match cli.format_or(Format::Csv) {
        Format::Csv => Outcome::text(h.to_csv()),
        Format::Json => Outcome::json(histogram_json(h)),
    }
}

fn histogram_json(h: &Histogram) -> Value {
    json!({
        "bins_p": h.bins_p,
        "bins_phase": h.bins_phase,
        "rows": h.rows().map(|r| json!({
            "p_lo": r[0], "p_hi": r[1], "nu_lo": r[2], "nu_hi": r[3], "mass": r[4],
        })).collect::<Vec<_>>(),
    })
}

fn cmd_rho(cli: &Cli, path: &Path) -> CliResult<Outcome> {
    require_json(cli, "rho")?;
    let loaded = load_state(path)?;
    let mut extra = None;
    let (rho, seeds, warnings) = match loaded {
        LoadedState::Hybrid(h) => (reduced_density_matrix(&decompose(&h)), vec![], vec![]),
        LoadedState::Bipartite(b) => (system_density_matrix(&reduce(&b)), vec![], vec![]),
        LoadedState::Geometric(GeometricState::Samples(s)) => {
            let est = s.density_matrix_estimate();
            extra = Some(json!({
                "stderr_re": est.stderr_re.iter().collect::<Vec<_>>(),
                "stderr_im": est.stderr_im.iter().collect::<Vec<_>>(),
            }));
            (density_matrix(&GeometricState::Samples(s.clone())), vec![s.seed()], vec![])
        }
        other => {
            let r = realize(other)?;
            (density_matrix(&r.state), r.seeds, r.warnings)
        }
    };
    check_trace(&rho, cli.tolerance)?;
    let mut v = density_matrix_report(&rho);
    if let Some(e) = extra {
        v["stderr"] = e;
    }
    let mut out = Outcome::json(v).with_seeds(seeds);
    out.warnings = warnings;
    Ok(out)
}

fn cmd_povm(cli: &Cli, state: &Path, povm: &Path) -> CliResult<Outcome> {
    let povm_json: PovmJson = serde_json::from_str(&read_text(povm)?).map_err(|e| CliError::Schema(e.to_string()))?;
    let povm = povm_json.to_povm()?;
    let r = realize(load_state(state)?)?;
    let probs = povm_statistics(&r.state, &povm)?;
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > cli.tolerance.max(1e-10) {
        return Err(CliError::Invariant(format!("probabilities sum to {total}")));
    }
    let mut out = match cli.format_or(Format::Json) {
        Format::Json => Outcome::json(json!({ "probabilities": probs })),
        Format::Csv => {
            let mut s = String::from("outcome,probability\n");
            for (k, p) in probs.iter().enumerate() {
                let _ = writeln!(s, "{k},{p}");
            }
            Outcome::text(s)
        }
    };
    out.seeds = r.seeds;
    out.warnings = r.warnings;
    Ok(out)
}

fn cmd_canonical(cli: &Cli, a: &CanonicalArgs) -> CliResult<Outcome> {
    require_json(cli, "canonical")?;
    let h: MatrixJson = serde_json::from_str(&read_text(&a.hamiltonian)?).map_err(|e| CliError::Schema(e.to_string()))?;
    let spec = CanonicalSpec::new(h.to_observable().map_err(CliError::from)?, a.beta)?;
    match a.samples {
        Some(n) => {
            let cfg = SamplerConfig {
                n_samples: n,
                seed: cli.seed,
                step_p: a.step_p,
                step_phase: a.step_phase,
                burn_in_fraction: a.burn_in,
            };
            let run = canonical_sampler(&spec, &cfg)?;
            let est = run.ensemble.density_matrix_estimate();
            let rho = density_matrix(&run.ensemble.clone().into());
            let report = comparison_from(&spec, rho);
            let mut v = comparison_to_json(&report);
            v["method"] = json!("sampler");
            v["samples"] = json!(n);
            v["acceptance_rate"] = json!(run.acceptance_rate);
            v["burn_in"] = json!(run.burn_in);
            v["stderr_re"] = json!(est.stderr_re.iter().collect::<Vec<_>>());
            v["stderr_im"] = json!(est.stderr_im.iter().collect::<Vec<_>>());
            v["warning"] = json!(run.warning);
            let mut out = Outcome::json(v).with_seeds(vec![cli.seed]);
            out.warnings.extend(run.warning);
            Ok(out)
        }
        None => {
            let bins = a.grid.unwrap_or(256);
            let state = canonical_grid_state(&spec, GridResolution::square(bins))?;
            let report = comparison_from(&spec, density_matrix(&state.into()));
            let mut v = comparison_to_json(&report);
            v["method"] = json!("grid");
            v["bins"] = json!(bins);
            Ok(Outcome::json(v))
        }
    }
}

fn load_hybrid(path: &Path) -> CliResult<HybridState> {
    match load_state(path)? {
        LoadedState::Hybrid(h) => Ok(h),
        _ => Err(CliError::Schema("expected a state file of kind \"hybrid\"".into())),
    }
}

fn cmd_hybrid(cli: &Cli, cmd: &HybridCommand) -> CliResult<Outcome> {
    match cmd {
        HybridCommand::Decompose(a) => {
            require_json(cli, "hybrid decompose")?;
            let h = load_hybrid(&a.state)?;
            let dec = decompose(&h);
            let back = reconstruct(&dec);
            let err = h
                .psi()
                .iter()
                .zip(back.psi())
                .flat_map(|(x, y)| x.iter().zip(y).map(|(a, b)| (a - b).norm()))
                .fold(0.0, f64::max);
            if err > cli.tolerance.max(1e-12) {
                return Err(CliError::Invariant(format!("reconstruction error {err}")));
            }
            let mut v = decomposition_to_json(&dec);
            v["reconstruction_error"] = json!(err);
            Ok(Outcome::json(v))
        }
        HybridCommand::Reduce(a) => {
            require_json(cli, "hybrid reduce")?;
            let rho = reduced_density_matrix(&decompose(&load_hybrid(&a.state)?));
            check_trace(&rho, cli.tolerance)?;
            Ok(Outcome::json(density_matrix_report(&rho)))
        }
        HybridCommand::Pushforward { state, samples, exact, bins } => {
            let dec = decompose(&load_hybrid(&state.state)?);
            let (ens, seeds) = if *exact {
                (pushforward_weighted(&dec)?, vec![])
            } else {
                (pushforward(&dec, *samples, cli.seed)?, vec![cli.seed])
            };
            let g: GeometricState = ens.into();
            let out = match cli.format_or(Format::Json) {
                Format::Json => Outcome::json(geometric_state_to_json(&g)),
                Format::Csv => {
                    let (bp, bn) = bins.shape();
                    histogram_outcome(cli, &histogram(&g, bp, bn)?)
                }
            };
            Ok(out.with_seeds(seeds))
        }
        HybridCommand::Bounds { n, d } => {
            let b = capacity_bounds(*n, *d)?;
            let (full, prod) = b.max_qudits();
            Ok(match cli.format_or(Format::Json) {
                Format::Json => Outcome::json(json!({
                    "n": n, "d": d, "m_full": b.m_full, "m_prod": b.m_prod,
                    "max_qudits_full": full, "max_qudits_prod": prod,
                })),
                Format::Csv => Outcome::text(format!(
                    "n,d,m_full,m_prod,max_qudits_full,max_qudits_prod\n{n},{d},{},{},{full},{prod}\n",
                    b.m_full, b.m_prod
                )),
            })
        }
    }
}

fn load_bipartite(path: &Path, ds: Option<usize>) -> CliResult<BipartitePureState> {
    let text = read_text(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Schema(e.to_string()))?;
    let state = if value.is_array() {
        let amps: Vec<Pair> = serde_json::from_value(value).map_err(|e| CliError::Schema(e.to_string()))?;
        let ds = ds.ok_or_else(|| CliError::Schema("--ds is required for a bare amplitude array".into()))?;
        BipartitePureState::from_vector(&from_pairs(&amps), ds)?
    } else {
        match StateFile::parse(&text)?.load()? {
            LoadedState::Bipartite(b) => b,
            _ => return Err(CliError::Schema("expected a state file of kind \"bipartite\"".into())),
        }
    };
    if let Some(d) = ds {
        if d != state.d_s() {
            return Err(CliError::Schema(format!("--ds {d} does not match the state's d_s = {}", state.d_s())));
        }
    }
    Ok(state)
}

fn cmd_thermo(cli: &Cli, cmd: &ThermoCommand) -> CliResult<Outcome> {
    match cmd {
        ThermoCommand::Reduce { state, ds, bins } => {
            let psi = load_bipartite(state, *ds)?;
            let ens = reduce(&psi);
            let back = reconstruct_global(&ens, psi.d_e())?;
            let err = max_abs_diff(back.matrix(), psi.matrix());
            if err > cli.tolerance.max(1e-12) {
                return Err(CliError::Invariant(format!("reconstruction error {err}")));
            }
            let (bp, bn) = bins.shape();
            let hist = if psi.d_s() == 2 {
                Some(histogram(&geometric_state_of(&ens)?.into(), bp, bn)?)
            } else {
                None
            };
            match cli.format_or(Format::Json) {
                Format::Json => {
                    let mut v = labeled_ensemble_to_json(&ens);
                    v["rho_s"] = density_matrix_report(&system_density_matrix(&ens));
                    v["histogram"] = hist.as_ref().map(histogram_json).unwrap_or(Value::Null);
                    Ok(Outcome::json(v))
                }
                Format::Csv => match hist {
                    Some(h) => Ok(Outcome::text(h.to_csv())),
                    None => Err(CliError::Schema("histogram CSV needs a qubit system (d_s = 2)".into())),
                },
            }
        }
        ThermoCommand::Scaling { ds, de, seeds, bins } => {
            let report = environment_scaling_report(*ds, de, *seeds, cli.seed, *bins)?;
            let used: Vec<u64> = (0..*seeds as u64).map(|k| cli.seed + k).collect();
            let out = match cli.format_or(Format::Json) {
                Format::Json => Outcome::json(scaling_report_to_json(&report)),
                Format::Csv => {
                    let mut s = String::from("d_e,mean_trace_distance,stderr\n");
                    for r in &report.rows {
                        let _ = writeln!(s, "{},{},{}", r.d_e, r.mean_distance, r.stderr);
                    }
                    Outcome::text(s)
                }
            };
            Ok(out.with_seeds(used))
        }
    }
}

fn fmt_values(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn status_tag(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "fail",
        CheckStatus::Measured => "info",
    }
}

fn cmd_verify(cli: &Cli, list: bool, perturb: f64) -> CliResult<Outcome> {
    if list {
        let mut s = String::new();
        for (name, desc) in suite() {
            let _ = writeln!(s, "{name}\t{desc}");
        }
        return Ok(Outcome::text(s));
    }
    let results = run_suite(&VerifyOptions { rho00_offset: perturb });
    let failed = results.iter().filter(|r| r.status == CheckStatus::Fail).count();
    let mut out = match cli.format {
        Some(Format::Json) => Outcome::json(json!({ "checks": results, "failed": failed })),
        Some(Format::Csv) => {
            let mut s = String::from("name,status,deviation,tolerance\n");
            for r in &results {
                let _ = writeln!(s, "{},{},{},{}", r.name, status_tag(r.status), r.deviation, r.tolerance);
            }
            Outcome::text(s)
        }
        None => {
            let mut s = String::new();
            for r in &results {
                let _ = writeln!(
                    s,
                    "{} {} measured={} expected={} tol={:e} dev={:e}",
                    status_tag(r.status).to_uppercase(),
                    r.name,
                    fmt_values(&r.measured),
                    fmt_values(&r.expected),
                    r.tolerance,
                    r.deviation
                );
            }
            let _ = writeln!(s, "{} checks, {failed} failed", results.len());
            Outcome::text(s)
        }
    };
    out.failed_checks = failed;
    Ok(out)
}
