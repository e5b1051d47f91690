use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pbs_cli::commands::{self, parse_bump, parse_complex, parse_grid, Outcome, Resolution};
use pbs_cli::{Config, Suite};
use pbs_core::Format;

#[derive(Parser)]
#[command(name = "pbs", version, about = "Pseudo-bosonic ladder operators from superpotentials")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set k=0.25` or `--set quadrature.hermite_points=300`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "json", value_parser = parse_format)]
    format: Format,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

#[derive(Subcommand)]
enum Command {
    /// Check the superpotential identities for the presets and the configured family.
    Validate,
    /// Exact coefficients of P_0..P_nmax.
    Poly {
        #[arg(long, default_value_t = 10)]
        nmax: usize,
        /// `csv` for numerator/denominator rows.
        #[arg(long)]
        emit: Option<String>,
    },
    /// Sample phi_n and Psi_n of the configured family.
    States {
        #[arg(long, default_value_t = 5)]
        nmax: usize,
        #[arg(long, default_value = "-5:5:200", value_parser = parse_grid, allow_hyphen_values = true)]
        grid: (f64, f64, usize),
        #[arg(long)]
        emit: Option<String>,
    },
    /// Gram matrix <Psi_m, phi_n> of the configured family.
    Biorth {
        #[arg(long)]
        nmax: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Quadrature norms against closed forms and their asymptotics.
    Norms,
    /// Bi-coherent state at z, with the optional resolution integral.
    Bcs {
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        z: num_complex::Complex64,
        #[arg(long)]
        nmax: Option<usize>,
        /// R NR NTHETA.
        #[arg(long, num_args = 3, value_names = ["R", "NR", "NTHETA"])]
        resolution: Option<Vec<f64>>,
        #[arg(long, default_value = "0,2", value_parser = parse_bump, allow_hyphen_values = true)]
        bump: pbs_core::TestFunction,
    },
    /// Weak bi-coherent functionals on a bump test function.
    Weak {
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        z: num_complex::Complex64,
        #[arg(long, value_parser = parse_bump, allow_hyphen_values = true)]
        bump: pbs_core::TestFunction,
        #[arg(long)]
        nmax: Option<usize>,
    },
    /// Run a named verification suite.
    Report {
        #[arg(long, default_value = "all")]
        suite: Suite,
    },
}

fn csv_flag(emit: &Option<String>) -> Result<bool, String> {
    match emit.as_deref() {
        None | Some("json") => Ok(false),
        Some("csv") => Ok(true),
        Some(other) => Err(format!("unknown --emit '{other}' (expected csv)")),
    }
}

fn run(cli: Cli) -> Result<Outcome, String> {
    let cfg = Config::load(cli.global.config.as_deref(), &cli.global.overrides).map_err(|e| e.to_string())?;
    match cli.command {
        Command::Validate => Ok(commands::suite(&cfg, Suite::Validate)),
        Command::Norms => Ok(commands::suite(&cfg, Suite::Norms)),
        Command::Report { suite } => Ok(commands::suite(&cfg, suite)),
        Command::Poly { nmax, emit } => Ok(commands::poly(nmax, csv_flag(&emit)?)),
        Command::States { nmax, grid, emit } => commands::states(&cfg, nmax, grid, csv_flag(&emit)?),
        Command::Biorth { nmax, tol } => {
            commands::biorth(&cfg, nmax.unwrap_or(cfg.nmax), tol.unwrap_or_else(|| cfg.tolerance("gram")))
        }
        Command::Bcs { z, nmax, resolution, bump } => {
            let resolution = match resolution.as_deref() {
                None => None,
                Some([r, nr, nt]) if *r > 0.0 && *nr >= 1.0 && *nt >= 1.0 && nr.fract() == 0.0 && nt.fract() == 0.0 => {
                    Some(Resolution { radius: *r, nr: *nr as usize, ntheta: *nt as usize })
                }
                Some(_) => return Err("--resolution expects R > 0 and positive integers NR NTHETA".into()),
            };
            commands::bcs(&cfg, z, nmax, resolution, &bump)
        }
        Command::Weak { z, bump, nmax } => commands::weak(&cfg, z, &bump, nmax),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.global.format;
    let out = cli.global.out.clone();
    let outcome = match run(cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("pbs: {e}");
            return ExitCode::from(2);
        }
    };
    let bytes = match outcome.render(format) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("pbs: {e}");
            return ExitCode::from(2);
        }
    };
    let written = match &out {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("pbs: {e}");
        return ExitCode::from(2);
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
