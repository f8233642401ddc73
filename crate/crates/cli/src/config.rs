//! Run configuration: JSON file, command-line overrides, resolved defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use superchain::liouville::{CoherenceMode, InitialState};
use superchain::ChainSpec;

use crate::grid::Grid;
use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    BandStructure,
    DecoupledLimit,
    PairAnalysis,
    ComplexSpectrum,
    GammaSweep,
    Superradiance,
    BandStructureOpen,
    Profiles,
    Survival,
    CoherenceScan,
    McValidate,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::BandStructure => "band-structure",
            Scenario::DecoupledLimit => "decoupled-limit",
            Scenario::PairAnalysis => "pair-analysis",
            Scenario::ComplexSpectrum => "complex-spectrum",
            Scenario::GammaSweep => "gamma-sweep",
            Scenario::Superradiance => "superradiance",
            Scenario::BandStructureOpen => "band-structure-open",
            Scenario::Profiles => "profiles",
            Scenario::Survival => "survival",
            Scenario::CoherenceScan => "coherence-scan",
            Scenario::McValidate => "mc-validate",
        }
    }
}

/// Spec fields given in a file or on the command line; unset fields keep
/// the reference values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecPatch {
    pub n: Option<usize>,
    pub epsilon0: Option<f64>,
    pub nu: Option<f64>,
    pub delta_l: Option<f64>,
    pub delta_r: Option<f64>,
    pub lambda: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha_phi: Option<f64>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr, $($f:ident),*) => { $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )* };
}

impl SpecPatch {
    pub fn overlay(&mut self, other: &SpecPatch) {
        overlay!(self, other, n, epsilon0, nu, delta_l, delta_r, lambda, kappa, gamma, alpha_phi);
    }

    pub fn resolve(&self) -> ChainSpec {
        let d = ChainSpec::default();
        ChainSpec {
            n: self.n.unwrap_or(d.n),
            epsilon0: self.epsilon0.unwrap_or(d.epsilon0),
            nu: self.nu.unwrap_or(d.nu),
            delta_l: self.delta_l.unwrap_or(d.delta_l),
            delta_r: self.delta_r.unwrap_or(d.delta_r),
            lambda: self.lambda.unwrap_or(d.lambda),
            kappa: self.kappa.unwrap_or(d.kappa),
            gamma: self.gamma.unwrap_or(d.gamma),
            alpha_phi: self.alpha_phi.unwrap_or(d.alpha_phi),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_grid: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_list: Option<Vec<f64>>,
}

impl Grids {
    pub fn overlay(&mut self, other: &Grids) {
        overlay!(self, other, gamma_grid, lambda_grid, t_grid, n_list, alpha_list);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Member {
    Upper,
    Lower,
}

/// Scalar settings of individual scenarios.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coherence_mode: Option<CoherenceMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    /// Largest integration time of a coherence-time search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub member: Option<Member>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl Options {
    pub fn overlay(&mut self, other: &Options) {
        overlay!(self, other, coherence_mode, initial_state, cap, pair_index, member, n_traj, dt);
    }
}

/// Contents of a config file; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub format_version: Option<u32>,
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub spec: SpecPatch,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub options: Options,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn overlay(&mut self, other: &ConfigFile) {
        overlay!(self, other, format_version, scenario, output_dir, seed);
        self.spec.overlay(&other.spec);
        self.grids.overlay(&other.grids);
        self.options.overlay(&other.options);
    }

    /// Reads a config file, or the `config` object of a run manifest.
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{} is not valid JSON: {e}", path.display())))?;
        let body = match value.get("config") {
            Some(inner) if value.get("manifest_version").is_some() => inner.clone(),
            _ => value,
        };
        let file: ConfigFile =
            serde_json::from_value(body).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(v) = file.format_version {
            if v != FORMAT_VERSION {
                return Err(CliError::Config(format!(
                    "{}: format_version {v} is not supported (expected {FORMAT_VERSION})",
                    path.display()
                )));
            }
        }
        Ok(file)
    }
}

/// Fully resolved configuration, as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub scenario: Scenario,
    pub spec: ChainSpec,
    pub grids: Grids,
    pub options: Options,
    pub output_dir: PathBuf,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 1;
const DEFAULT_LAMBDA_GRID: &str = "0.05:0.05:20";
const DEFAULT_GAMMA_GRID: &str = "0.05:0.01:20";
const DEFAULT_PROFILE_GRID: &str = "0.05:0.05:20";
const DEFAULT_SURVIVAL_GAMMAS: [f64; 3] = [0.25, 2.5, 25.0];
const DEFAULT_SURVIVAL_TIMES: &str = "0:0.05:300";
const DEFAULT_SCAN_GAMMAS: [f64; 15] = [0.05, 0.1, 0.2, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 7.0, 10.0, 15.0, 20.0];
const DEFAULT_CHECKPOINTS: &str = "5:5:50";

fn need_grid(slot: &mut Option<Grid>, default: impl FnOnce() -> Grid) {
    if slot.is_none() {
        *slot = Some(default());
    }
}

impl RunConfig {
    /// Fills scenario defaults and validates what the scenario needs.
    pub fn resolve(file: ConfigFile) -> Result<RunConfig, CliError> {
        let scenario = file.scenario.ok_or_else(|| CliError::Config("no scenario given".into()))?;
        let spec = file.spec.resolve();
        spec.validate().map_err(|e| CliError::Config(format!("spec: {e}")))?;
        let mut g = file.grids;
        let mut o = file.options;
        let range = |s: &str| Grid::Range(s.to_string());
        match scenario {
            Scenario::BandStructure | Scenario::BandStructureOpen => {
                need_grid(&mut g.lambda_grid, || range(DEFAULT_LAMBDA_GRID))
            }
            Scenario::DecoupledLimit => {}
            Scenario::PairAnalysis => need_grid(&mut g.lambda_grid, || Grid::Values(vec![spec.lambda])),
            Scenario::ComplexSpectrum | Scenario::GammaSweep | Scenario::Superradiance => {
                need_grid(&mut g.gamma_grid, || range(DEFAULT_GAMMA_GRID))
            }
            Scenario::Profiles => need_grid(&mut g.gamma_grid, || range(DEFAULT_PROFILE_GRID)),
            Scenario::Survival => {
                need_grid(&mut g.gamma_grid, || Grid::Values(DEFAULT_SURVIVAL_GAMMAS.to_vec()));
                need_grid(&mut g.t_grid, || range(DEFAULT_SURVIVAL_TIMES));
                o.pair_index.get_or_insert(1);
                o.member.get_or_insert(Member::Upper);
                o.initial_state.get_or_insert(InitialState::OpenEigenstate);
            }
            Scenario::CoherenceScan => {
                need_grid(&mut g.gamma_grid, || Grid::Values(DEFAULT_SCAN_GAMMAS.to_vec()));
                g.n_list.get_or_insert_with(|| vec![spec.n]);
                g.alpha_list.get_or_insert_with(|| vec![spec.alpha_phi]);
                o.coherence_mode.get_or_insert(CoherenceMode::ModulusSum);
                o.initial_state.get_or_insert(InitialState::OpenEigenstate);
                o.cap.get_or_insert(1e4);
            }
            Scenario::McValidate => {
                need_grid(&mut g.t_grid, || range(DEFAULT_CHECKPOINTS));
                o.n_traj.get_or_insert(2000);
                o.dt.get_or_insert(0.01);
                o.initial_state.get_or_insert(InitialState::OpenEigenstate);
            }
        }
        let cfg = RunConfig {
            format_version: FORMAT_VERSION,
            scenario,
            spec,
            grids: g,
            options: o,
            output_dir: file.output_dir.unwrap_or_else(|| PathBuf::from(format!("superchain-{}", scenario.name()))),
            seed: file.seed.unwrap_or(DEFAULT_SEED),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        let g = &self.grids;
        for (name, grid) in [("gamma_grid", &g.gamma_grid), ("lambda_grid", &g.lambda_grid), ("t_grid", &g.t_grid)] {
            if let Some(grid) = grid {
                let v = grid.values().map_err(|e| CliError::Config(format!("{name}: {e}")))?;
                if v.iter().any(|&x| x < 0.0) {
                    return Err(CliError::Config(format!("{name}: values must be non-negative")));
                }
                if v.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(CliError::Config(format!("{name}: values must be strictly increasing")));
                }
            }
        }
        if let Some(ns) = &g.n_list {
            if ns.is_empty() || ns.iter().any(|&n| n < 2) {
                return Err(CliError::Config("n_list: need at least one value, each at least 2".into()));
            }
        }
        if let Some(alphas) = &g.alpha_list {
            if alphas.is_empty() || alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                return Err(CliError::Config("alpha_list: need at least one finite non-negative value".into()));
            }
        }
        let o = &self.options;
        if o.pair_index == Some(0) {
            return Err(CliError::Config("pair_index counts from 1 (the pair nearest the band top)".into()));
        }
        if let Some(dt) = o.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CliError::Config("dt must be positive".into()));
            }
        }
        if let Some(cap) = o.cap {
            if !(cap > 0.0 && cap.is_finite()) {
                return Err(CliError::Config("cap must be positive".into()));
            }
        }
        Ok(())
    }

    /// Values of a grid the scenario requires.
    pub fn grid(&self, name: &str) -> Vec<f64> {
        let g = match name {
            "gamma_grid" => &self.grids.gamma_grid,
            "lambda_grid" => &self.grids.lambda_grid,
            "t_grid" => &self.grids.t_grid,
            _ => &None,
        };
        g.as_ref().and_then(|g| g.values().ok()).unwrap_or_default()
    }
}
