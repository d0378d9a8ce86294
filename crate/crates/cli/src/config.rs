//! Command-line arguments and the validated run configuration.

use std::f64::consts::TAU;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sta_core::energetics::EnergyUnits;
use sta_core::trajectories::{make_hybrid, make_polynomial, make_quasi_optimal, ExpansionSpec, ScalingTrajectory};
use thiserror::Error;

/// A flag combination clap cannot rule out on its own.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, Parser)]
#[command(
    name = "sta-harmonic",
    version,
    about = "Fast harmonic-trap expansions and their energy cost"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate b(t), the trap frequency, energy and spread of one design.
    Design(#[command(flatten)] CommonArgs),
    /// Energy report for one design, with the forward-integration residuals.
    Analyze(#[command(flatten)] CommonArgs),
    /// Sweep duration, final frequency, cap width, or both frequency and time.
    Scan(ScanArgs),
    /// Cooling rate versus final frequency for a refrigerator time law.
    Otto(OttoArgs),
    /// Forward-integration and grid-oracle checks; exit code 4 on failure.
    Verify(#[command(flatten)] CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryChoice {
    Poly,
    Qopt,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum UnitsChoice {
    E0,
    Raw,
}

impl From<UnitsChoice> for EnergyUnits {
    fn from(u: UnitsChoice) -> Self {
        match u {
            UnitsChoice::E0 => EnergyUnits::E0,
            UnitsChoice::Raw => EnergyUnits::Raw,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Initial trap frequency (Hz, or rad/s with --angular)
    #[arg(long, default_value_t = 250.0)]
    pub f0_hz: f64,
    /// Final trap frequency (Hz, or rad/s with --angular)
    #[arg(long, default_value_t = 0.25)]
    pub ff_hz: f64,
    /// Duration in seconds
    #[arg(long, default_value_t = 2e-3)]
    pub tf_s: f64,
    /// Vibrational level
    #[arg(long, default_value_t = 0)]
    pub n: u32,
    #[arg(long, value_enum, default_value_t = TrajectoryChoice::Poly)]
    pub traj: TrajectoryChoice,
    /// Cap width for hybrid trajectories, in (0, 0.5)
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = 2001, value_parser = clap::value_parser!(u64).range(101..))]
    pub samples: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Output file, written atomically; standard output if absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = UnitsChoice::E0)]
    pub units: UnitsChoice,
    /// Read frequencies as angular (rad/s) instead of Hz
    #[arg(long)]
    pub angular: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanAxis {
    Tf,
    Wf,
    Tau,
    Grid,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub axis: ScanAxis,
    /// Sweep start (seconds for tf, Hz or rad/s for wf)
    #[arg(long)]
    pub from: Option<f64>,
    /// Sweep end
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long, default_value_t = 25)]
    pub points_per_decade: usize,
    /// Cap widths for the tau axis
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
    /// Points per axis for the grid axis
    #[arg(long, default_value_t = 20)]
    pub grid_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawChoice {
    Budget,
    BangBang,
    Quarter,
    Power,
}

#[derive(Debug, Clone, Args)]
pub struct OttoArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = LawChoice::Budget)]
    pub law: LawChoice,
    /// Energy budget in units of hbar omega0 / 2 (budget law)
    #[arg(long, default_value_t = 100.0)]
    pub budget: f64,
    /// tf = prefactor * omegaf^exponent (power law)
    #[arg(long, default_value_t = 1.0)]
    pub prefactor: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub exponent: f64,
    /// Lowest final frequency (Hz, or rad/s with --angular)
    #[arg(long, default_value_t = 2.5e-3)]
    pub from: f64,
    #[arg(long, default_value_t = 2.5)]
    pub to: f64,
    #[arg(long, default_value_t = 25)]
    pub points_per_decade: usize,
}

/// Validated parameters, echoed into every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub f0_hz: f64,
    pub ff_hz: f64,
    pub tf_s: f64,
    pub n: u32,
    pub trajectory: TrajectoryChoice,
    pub tau: Option<f64>,
    pub samples: u64,
    pub format: OutputFormat,
    pub units: UnitsChoice,
    pub angular: bool,
    pub omega0: f64,
    pub omegaf: f64,
}

impl RunConfig {
    pub fn from_args(args: &CommonArgs) -> Result<Self, UsageError> {
        match (args.traj, args.tau) {
            (TrajectoryChoice::Hybrid, None) => {
                return Err(UsageError("--traj hybrid requires --tau".into()));
            }
            (TrajectoryChoice::Hybrid, Some(tau)) if !(tau > 0.0 && tau < 0.5) => {
                return Err(UsageError(format!("--tau {tau} must lie in (0, 0.5)")));
            }
            (TrajectoryChoice::Poly | TrajectoryChoice::Qopt, Some(_)) => {
                return Err(UsageError("--tau only applies to --traj hybrid".into()));
            }
            _ => {}
        }
        for (name, v) in [("--f0-hz", args.f0_hz), ("--ff-hz", args.ff_hz), ("--tf-s", args.tf_s)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(UsageError(format!("{name} must be a positive number, got {v}")));
            }
        }
        let to_angular = |f: f64| if args.angular { f } else { TAU * f };
        Ok(Self {
            f0_hz: args.f0_hz,
            ff_hz: args.ff_hz,
            tf_s: args.tf_s,
            n: args.n,
            trajectory: args.traj,
            tau: args.tau,
            samples: args.samples,
            format: args.format,
            units: args.units,
            angular: args.angular,
            omega0: to_angular(args.f0_hz),
            omegaf: to_angular(args.ff_hz),
        })
    }

    /// Converts a frequency given on the command line to rad/s.
    pub fn angular_of(&self, f: f64) -> f64 {
        if self.angular {
            f
        } else {
            TAU * f
        }
    }

    pub fn spec(&self) -> sta_core::Result<ExpansionSpec> {
        ExpansionSpec::new(self.omega0, self.omegaf, self.tf_s, self.n)
    }

    pub fn trajectory(&self, spec: &ExpansionSpec) -> sta_core::Result<ScalingTrajectory> {
        match self.trajectory {
            TrajectoryChoice::Poly => Ok(make_polynomial(spec)),
            TrajectoryChoice::Qopt => make_quasi_optimal(spec),
            TrajectoryChoice::Hybrid => make_hybrid(spec, self.tau.expect("checked in from_args")),
        }
    }
}
