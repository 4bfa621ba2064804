use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hybrid_eit::model::{load_params, mhz, preset, PresetId, SystemParams};
use hybrid_eit::response::{detuning_grid, spectrum_with, BFactor, Execution, SpectrumOptions};
use hybrid_eit::scenarios::{
    csv_digits, default_power_grid, delay_vs_power, detect_windows, run_preset, validate, write_delay_csv,
    write_spectrum_csv, EvalPoint, ValidateOptions, DEFAULT_PROMINENCE,
};
use hybrid_eit::timedomain::{integrate, verify_linearization, IntegrationConfig};
use hybrid_eit::Error;

#[derive(Parser)]
#[command(
    name = "hybrid-eit",
    version,
    about = "Weak-probe response of a hybrid optomechanical cavity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Built-in parameter set.
    #[arg(long, conflicts_with = "config")]
    preset: Option<PresetId>,
    /// JSON parameter file (frequencies in MHz).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Source {
    fn params(&self) -> hybrid_eit::Result<SystemParams> {
        match (&self.preset, &self.config) {
            (Some(id), _) => Ok(preset(*id)),
            (None, Some(path)) => {
                let text = fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                load_params(&text)
            }
            (None, None) => Err(Error::Config("one of --preset or --config is required".into())),
        }
    }
}

#[derive(Args)]
struct Grid {
    #[arg(long, default_value_t = 2001)]
    points: usize,
    /// δ̄/ω_m range as LO,HI.
    #[arg(long, value_delimiter = ',', default_values_t = [-0.2, 0.2], allow_hyphen_values = true)]
    range: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BFactorArg {
    Derived,
    PaperLiteral,
}

impl From<BFactorArg> for BFactor {
    fn from(b: BFactorArg) -> Self {
        match b {
            BFactorArg::Derived => BFactor::Derived,
            BFactorArg::PaperLiteral => BFactor::Printed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Absorption, dispersion, transmission and group delay over a detuning grid.
    Spectrum {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        grid: Grid,
        /// Output CSV (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "derived")]
        b_factor: BFactorArg,
        /// Evaluate grid points on one thread.
        #[arg(long)]
        serial: bool,
    },
    /// Transparency windows of the absorption spectrum, as JSON.
    Windows {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, default_value_t = DEFAULT_PROMINENCE)]
        prominence: f64,
    },
    /// Group delay against pump power.
    Delay {
        #[command(flatten)]
        source: Source,
        /// Pump powers in W, comma separated (default: 20 points, Ω_l/2π from 2 to 40 MHz).
        #[arg(long, value_delimiter = ',')]
        powers: Option<Vec<f64>>,
        /// Evaluation detuning δ̄/2π in MHz (default 0).
        #[arg(long, allow_hyphen_values = true, conflicts_with = "paper_literal_eval")]
        eval_delta_bar: Option<f64>,
        /// Evaluate at δ̄ = ω_m.
        #[arg(long)]
        paper_literal_eval: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every acceptance check; exits 1 if any fails.
    Validate {
        /// Closed form vs direct solve tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        #[arg(long, value_enum, default_value = "derived")]
        b_factor: BFactorArg,
        /// Skip the time-domain integrations.
        #[arg(long)]
        skip_time_domain: bool,
        /// Print the summary as JSON.
        #[arg(long)]
        json: bool,
    },
    /// List presets or print one as a config file.
    Preset {
        #[arg(long)]
        list: bool,
        id: Option<PresetId>,
    },
    /// Write spectrum CSV, window report and run metadata for presets.
    Run {
        /// Preset to run (all if omitted).
        #[arg(long)]
        preset: Option<PresetId>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Integrate the nonlinear equations and dump the trajectory as CSV.
    Trajectory {
        #[command(flatten)]
        source: Source,
        /// Probe detuning δ̄/2π in MHz.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        delta_bar: f64,
        /// Keep every n-th step.
        #[arg(long, default_value_t = 1000)]
        stride: usize,
        /// Start recording at t = 0 rather than after the transient.
        #[arg(long)]
        from_start: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare time-domain c_-/ε_p across probe amplitudes with the closed form.
    Linearize {
        #[command(flatten)]
        source: Source,
        /// Probe detuning δ̄/2π in MHz.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        delta_bar: f64,
        /// Probe amplitudes as fractions of Ω_l.
        #[arg(long, value_delimiter = ',', default_values_t = [1e-3, 5e-4])]
        eps_ratio: Vec<f64>,
    },
}

fn output(path: &Option<PathBuf>) -> hybrid_eit::Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let file = fs::File::create(p).map_err(|source| Error::Io {
                path: p.clone(),
                source,
            })?;
            Ok(Box::new(io::BufWriter::new(file)))
        }
        None => Ok(Box::new(io::BufWriter::new(io::stdout().lock()))),
    }
}

fn io_error(path: &Option<PathBuf>) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.clone().unwrap_or_else(|| PathBuf::from("<stdout>")),
        source,
    }
}

fn grid_for(params: &SystemParams, grid: &Grid) -> hybrid_eit::Result<Vec<f64>> {
    match grid.range[..] {
        [lo, hi] if lo < hi => Ok(detuning_grid(params.omega_m, lo, hi, grid.points)),
        _ => Err(Error::Config("--range takes LO,HI with LO < HI".into())),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> hybrid_eit::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

/// Ok(false) means a validation failure.
fn run(cli: Cli) -> hybrid_eit::Result<bool> {
    match cli.command {
        Command::Spectrum {
            source,
            grid,
            out,
            b_factor,
            serial,
        } => {
            let params = source.params()?;
            let opts = SpectrumOptions {
                execution: if serial { Execution::Serial } else { Execution::Parallel },
                b_factor: b_factor.into(),
            };
            let s = spectrum_with(&params, &grid_for(&params, &grid)?, opts)?;
            let digits = csv_digits()?;
            let mut w = output(&out)?;
            write_spectrum_csv(&s, &mut w, digits)
                .and_then(|_| w.flush())
                .map_err(io_error(&out))?;
        }
        Command::Windows {
            source,
            grid,
            prominence,
        } => {
            let params = source.params()?;
            let s = spectrum_with(&params, &grid_for(&params, &grid)?, SpectrumOptions::default())?;
            print_json(&detect_windows(&s, prominence)?)?;
        }
        Command::Delay {
            source,
            powers,
            eval_delta_bar,
            paper_literal_eval,
            out,
        } => {
            let params = source.params()?;
            let powers = match powers {
                Some(p) => p,
                None => default_power_grid(&params)?,
            };
            let eval = match (paper_literal_eval, eval_delta_bar) {
                (true, _) => EvalPoint::PaperLiteral,
                (false, Some(x)) => EvalPoint::DeltaBar(mhz(x)),
                (false, None) => EvalPoint::LineCenter,
            };
            let curve = delay_vs_power(&params, &powers, eval)?;
            let digits = csv_digits()?;
            let mut w = output(&out)?;
            write_delay_csv(&curve, &mut w, digits)
                .and_then(|_| w.flush())
                .map_err(io_error(&out))?;
        }
        Command::Validate {
            tolerance,
            b_factor,
            skip_time_domain,
            json,
        } => {
            let opts = ValidateOptions {
                tolerance,
                b_factor: b_factor.into(),
                time_domain: !skip_time_domain,
            };
            let summary = validate(&opts)?;
            if json {
                print_json(&summary)?;
            } else {
                for c in &summary.criteria {
                    println!(
                        "{} criterion {}: {}",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.id,
                        c.name
                    );
                    for d in &c.details {
                        println!("    {d}");
                    }
                }
            }
            return Ok(summary.all_passed());
        }
        Command::Preset { list, id } => match (list, id) {
            (_, Some(id)) => println!("{}", preset(id).to_config_json()),
            (true, None) => {
                for id in PresetId::ALL {
                    println!("{:<6} {}", id.as_str(), id.description());
                }
            }
            (false, None) => return Err(Error::Config("give a preset id or --list".into())),
        },
        Command::Run { preset: id, out } => {
            let ids = match id {
                Some(id) => vec![id],
                None => PresetId::ALL.to_vec(),
            };
            for id in ids {
                for f in run_preset(id, &out)?.files {
                    println!("{}", f.display());
                }
            }
        }
        Command::Trajectory {
            source,
            delta_bar,
            stride,
            from_start,
            out,
        } => {
            let params = source.params()?;
            let mut cfg = IntegrationConfig::new(&params, params.omega_m + mhz(delta_bar), params.eps_p)?;
            cfg.record_stride = stride;
            if from_start {
                cfg.record_from = 0.0;
            }
            let traj = integrate(&params, &cfg)?;
            let mut w = output(&out)?;
            traj.write_csv(&mut w).and_then(|_| w.flush()).map_err(io_error(&out))?;
        }
        Command::Linearize {
            source,
            delta_bar,
            eps_ratio,
        } => {
            let params = source.params()?;
            let eps: Vec<f64> = eps_ratio.iter().map(|r| r * params.omega_l).collect();
            print_json(&verify_linearization(&params, params.omega_m + mhz(delta_bar), &eps)?)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
