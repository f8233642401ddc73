use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use superchain::liouville::{CoherenceMode, InitialState};
use superchain_cli::config::{ConfigFile, Member, RunConfig, Scenario};
use superchain_cli::grid::{parse_usize_list, Grid};
use superchain_cli::{execute, CliError, RunStatus};

#[derive(Parser)]
#[command(name = "superchain", version, about = "Spectra and dynamics of a wire between two qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario named in a config file or manifest.
    Run(Common),
    /// Closed spectrum and localization weights versus λ.
    BandStructure(Common),
    /// Analytic λ → 0 spectrum against the eigensolve.
    DecoupledLimit(Common),
    /// Pair energies, splittings and symmetric-point roots.
    PairAnalysis(Common),
    /// Resonance trajectories versus γ.
    ComplexSpectrum(Common),
    /// Width statistics versus γ.
    GammaSweep(Common),
    /// Critical γ of the width segregation.
    Superradiance(Common),
    /// Open spectrum versus λ at fixed γ.
    BandStructureOpen(Common),
    /// Site profiles of the two broadest resonances.
    Profiles(Common),
    /// Survival probability of a pair state.
    Survival(Common),
    /// Coherence time under dephasing.
    CoherenceScan(Common),
    /// Master equation against stochastic trajectories.
    McValidate(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    ModulusSum,
    ElementSum,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitialArg {
    OpenEigenstate,
    ClosedEigenstate,
}

#[derive(Args)]
struct Common {
    /// JSON config file or a run.json manifest.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,

    /// Half-length of the wire.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<f64>,
    /// Sets both qubit detunings.
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta_l: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta_r: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Dephasing rate.
    #[arg(long)]
    alpha: Option<f64>,

    /// `start:step:stop` or a comma list.
    #[arg(long)]
    gamma_grid: Option<String>,
    #[arg(long)]
    lambda_grid: Option<String>,
    #[arg(long)]
    t_grid: Option<String>,
    #[arg(long)]
    n_list: Option<String>,
    #[arg(long)]
    alpha_list: Option<String>,

    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    initial_state: Option<InitialArg>,
    /// Upper limit on coherence times.
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long)]
    pair_index: Option<usize>,
    #[arg(long, value_enum)]
    member: Option<Member>,
    #[arg(long)]
    n_traj: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
}

impl Common {
    fn to_layer(&self, scenario: Option<Scenario>) -> Result<ConfigFile, CliError> {
        let grid = |s: &Option<String>, name: &str| {
            s.as_deref().map(|t| Grid::parse(t).map_err(|e| CliError::Config(format!("--{name}: {e}")))).transpose()
        };
        let mut f = ConfigFile { scenario, output_dir: self.output_dir.clone(), seed: self.seed, ..Default::default() };
        let s = &mut f.spec;
        s.n = self.n;
        s.epsilon0 = self.epsilon0;
        s.nu = self.nu;
        s.delta_l = self.delta_l.or(self.delta);
        s.delta_r = self.delta_r.or(self.delta);
        s.lambda = self.lambda;
        s.kappa = self.kappa;
        s.gamma = self.gamma;
        s.alpha_phi = self.alpha;
        f.grids.gamma_grid = grid(&self.gamma_grid, "gamma-grid")?;
        f.grids.lambda_grid = grid(&self.lambda_grid, "lambda-grid")?;
        f.grids.t_grid = grid(&self.t_grid, "t-grid")?;
        f.grids.n_list = self
            .n_list
            .as_deref()
            .map(|t| parse_usize_list(t).map_err(|e| CliError::Config(format!("--n-list: {e}"))))
            .transpose()?;
        f.grids.alpha_list = grid(&self.alpha_list, "alpha-list")?
            .map(|g| g.values().map_err(|e| CliError::Config(format!("--alpha-list: {e}"))))
            .transpose()?;
        let o = &mut f.options;
        o.coherence_mode = self.mode.map(|m| match m {
            ModeArg::ModulusSum => CoherenceMode::ModulusSum,
            ModeArg::ElementSum => CoherenceMode::ElementSum,
        });
        o.initial_state = self.initial_state.map(|m| match m {
            InitialArg::OpenEigenstate => InitialState::OpenEigenstate,
            InitialArg::ClosedEigenstate => InitialState::ClosedEigenstate,
        });
        o.cap = self.cap;
        o.pair_index = self.pair_index;
        o.member = self.member;
        o.n_traj = self.n_traj;
        o.dt = self.dt;
        Ok(f)
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(text) = std::env::var("SUPERCHAIN_THREADS") else {
        return Ok(());
    };
    let threads: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Config(format!("SUPERCHAIN_THREADS='{text}' is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn resolve(command: Command) -> Result<RunConfig, CliError> {
    let (scenario, args) = match command {
        Command::Run(a) => (None, a),
        Command::BandStructure(a) => (Some(Scenario::BandStructure), a),
        Command::DecoupledLimit(a) => (Some(Scenario::DecoupledLimit), a),
        Command::PairAnalysis(a) => (Some(Scenario::PairAnalysis), a),
        Command::ComplexSpectrum(a) => (Some(Scenario::ComplexSpectrum), a),
        Command::GammaSweep(a) => (Some(Scenario::GammaSweep), a),
        Command::Superradiance(a) => (Some(Scenario::Superradiance), a),
        Command::BandStructureOpen(a) => (Some(Scenario::BandStructureOpen), a),
        Command::Profiles(a) => (Some(Scenario::Profiles), a),
        Command::Survival(a) => (Some(Scenario::Survival), a),
        Command::CoherenceScan(a) => (Some(Scenario::CoherenceScan), a),
        Command::McValidate(a) => (Some(Scenario::McValidate), a),
    };
    let mut file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None if scenario.is_none() => return Err(CliError::Config("`run` needs --config".into())),
        None => ConfigFile::default(),
    };
    if let (Some(s), Some(f)) = (scenario, file.scenario) {
        if s != f {
            return Err(CliError::Config(format!("config is for '{}', not '{}'", f.name(), s.name())));
        }
    }
    file.overlay(&args.to_layer(scenario)?);
    RunConfig::resolve(file)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|_| resolve(cli.command)).and_then(|cfg| {
        let status = execute(&cfg)?;
        eprintln!("wrote {}", cfg.output_dir.display());
        Ok(status)
    });
    match outcome {
        Ok(RunStatus::Ok) => ExitCode::SUCCESS,
        Ok(s @ RunStatus::Partial) => {
            eprintln!("finished with warnings; see run.json");
            ExitCode::from(s.exit_code())
        }
        Err(e) => {
            eprintln!("superchain: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
