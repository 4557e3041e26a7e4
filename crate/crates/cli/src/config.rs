//! Run configuration: a TOML file whose keys mirror the command-line flags,
//! with flags taking precedence.

use std::path::{Path, PathBuf};

use benney_core::{BlowupThreshold, FieldState, InitialData, RegimeTolerance, Scheme, TorusGrid};
use clap::Args;
use serde::Deserialize;

use crate::CliError;

/// Scheme choice; `auto` picks the upwind scheme when every initial cell is
/// strictly hyperbolic and the central scheme otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeChoice {
    #[default]
    Auto,
    Central,
    Riemann,
}

impl SchemeChoice {
    pub fn resolve(self, state: &FieldState) -> Scheme {
        match self {
            SchemeChoice::Central => Scheme::CentralViscous,
            SchemeChoice::Riemann => Scheme::RiemannUpwind,
            SchemeChoice::Auto => {
                if benney_core::riemann_fields(state).valid.iter().all(|&v| v) {
                    Scheme::RiemannUpwind
                } else {
                    Scheme::CentralViscous
                }
            }
        }
    }
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML file with the same keys as the flags (dashes become underscores).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Built-in initial data: constant, traveling, perturbed, elliptic-bump.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Initial data in text form, e.g. "perturbed(delta=0.1)" or "custom-table(path=u.csv)".
    #[arg(long, value_name = "SPEC")]
    pub initial: Option<String>,
    /// Number of grid cells on the circle.
    #[arg(long, value_name = "N")]
    pub grid: Option<usize>,
    /// Seed for the random samples (verify, maclane).
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Directory for every file the command writes; nothing is written without it.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Solver: auto picks riemann when every initial cell is strictly hyperbolic.
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeChoice>,
    /// Final time of the simulation.
    #[arg(long, value_name = "T")]
    pub t_end: Option<f64>,
    /// Courant number in (0, 1].
    #[arg(long)]
    pub cfl: Option<f64>,
    /// Number of random samples for verify and maclane.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Overrides the pass bound (verify, maclane) or classification tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Sample the near-degenerate band 0.001 < discriminant < 0.01.
    #[arg(long)]
    pub band: bool,
    /// Critical values to invert directly (maclane), comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        value_name = "R1,R2,.."
    )]
    pub r: Option<Vec<f64>>,
    /// Also simulate and compare the observed blow-up with the prediction (blowup).
    #[arg(long)]
    pub simulate: bool,
    /// |u_1|, |u_2| bound for maximally degenerate cells.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Keep every k-th solver step as a snapshot.
    #[arg(long, value_name = "K")]
    pub snapshot_every: Option<usize>,
}

/// Raw file contents; every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    pub initial: Option<String>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub scheme: Option<SchemeChoice>,
    pub t_end: Option<f64>,
    pub cfl: Option<f64>,
    pub samples: Option<usize>,
    pub tolerance: Option<f64>,
    pub band: Option<bool>,
    pub r: Option<Vec<f64>>,
    pub simulate: Option<bool>,
    pub eps: Option<f64>,
    pub snapshot_every: Option<usize>,
    pub blowup_threshold: Option<BlowupThreshold>,
}

impl FileConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }
}

/// Subcommand whose defaults apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Verify,
    Simulate,
    Blowup,
    Maclane,
    Classify,
}

/// Validated settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub initial: InitialData,
    pub initial_label: String,
    pub grid: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub scheme: SchemeChoice,
    pub t_end: f64,
    pub cfl: f64,
    pub samples: usize,
    pub tolerance: Option<f64>,
    pub band: bool,
    pub r: Option<Vec<f64>>,
    pub simulate: bool,
    pub eps: f64,
    pub snapshot_every: usize,
    pub blowup_threshold: BlowupThreshold,
}

pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_SAMPLES: usize = 1000;
/// Bound on |u_1|, |u_2| at maximally degenerate cells, about 3h at N = 256
/// (scheme error moves the boundary at first order).
pub const DEFAULT_EPS: f64 = 1e-3;

impl RunConfig {
    /// Defaults per command: blowup runs at N = 512 with the perturbed preset,
    /// everything else at N = 256 with the traveling wave.
    pub fn defaults(kind: CommandKind) -> Self {
        let blowup = kind == CommandKind::Blowup;
        let preset = if blowup { "perturbed" } else { "traveling" };
        RunConfig {
            initial: InitialData::preset(preset).expect("built-in preset"),
            initial_label: preset.into(),
            grid: if blowup { 512 } else { 256 },
            seed: DEFAULT_SEED,
            out: None,
            scheme: SchemeChoice::Auto,
            t_end: if blowup { 1.5 } else { 2.0 },
            cfl: 0.9,
            samples: DEFAULT_SAMPLES,
            tolerance: None,
            band: false,
            r: None,
            simulate: false,
            eps: DEFAULT_EPS,
            snapshot_every: 10,
            blowup_threshold: BlowupThreshold::default(),
        }
    }

    pub fn resolve(kind: CommandKind, flags: &Flags) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Self::merge(kind, file, flags)
    }

    pub fn merge(kind: CommandKind, file: FileConfig, flags: &Flags) -> Result<Self, CliError> {
        let mut c = Self::defaults(kind);
        let preset = flags.preset.clone().or(file.preset);
        let initial = flags.initial.clone().or(file.initial);
        match (preset, initial) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "preset and initial are mutually exclusive".into(),
                ))
            }
            (Some(name), None) => {
                c.initial = InitialData::preset(&name).ok_or_else(|| {
                    CliError::Config(format!(
                        "preset: unknown name {name:?} (known: {})",
                        benney_core::PRESETS.join(", ")
                    ))
                })?;
                c.initial_label = name;
            }
            (None, Some(text)) => {
                c.initial = text
                    .parse()
                    .map_err(|e| CliError::Config(format!("initial: {e}")))?;
                c.initial_label = text;
            }
            (None, None) => {}
        }
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = flags.$field.clone().or(file.$field) {
                    c.$field = v;
                }
            };
        }
        take!(grid);
        take!(seed);
        take!(scheme);
        take!(t_end);
        take!(cfl);
        take!(samples);
        take!(eps);
        take!(snapshot_every);
        c.out = flags.out.clone().or(file.out);
        c.tolerance = flags.tolerance.or(file.tolerance);
        c.r = flags.r.clone().or(file.r);
        c.band = flags.band || file.band.unwrap_or(false);
        c.simulate = flags.simulate || file.simulate.unwrap_or(false);
        if let Some(t) = file.blowup_threshold {
            c.blowup_threshold = t;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, why: String| Err(CliError::Config(format!("{field}: {why}")));
        if let Err(e) = TorusGrid::new(self.grid) {
            return bad("grid", e.to_string());
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad("cfl", format!("must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end", format!("must be positive, got {}", self.t_end));
        }
        if self.samples == 0 {
            return bad("samples", "must be at least 1".into());
        }
        if let Some(t) = self.tolerance {
            if t.is_nan() || t <= 0.0 {
                return bad("tolerance", format!("must be positive, got {t}"));
            }
        }
        if RegimeTolerance::new(RegimeTolerance::default().eps_disc, self.eps).is_none() {
            return bad("eps", format!("must be positive, got {}", self.eps));
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every", "must be at least 1".into());
        }
        if let Some(r) = &self.r {
            if r.is_empty() || r.iter().any(|v| !v.is_finite()) {
                return bad("r", "needs one or more finite values".into());
            }
        }
        if let Err(e) = self.initial.validate() {
            return bad("initial", e.to_string());
        }
        Ok(())
    }

    /// Classification tolerance for degenerate cells.
    pub fn regime_tolerance(&self) -> RegimeTolerance {
        RegimeTolerance::new(RegimeTolerance::default().eps_disc, self.eps).expect("validated")
    }
}
