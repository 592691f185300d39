use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zmc_core::config::RunConfig;
use zmc_core::io::Axis;
use zmc_core::Error;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "zmc", version, about = "Timelike zero-mean-curvature surfaces in Minkowski 4-space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid size as NUxNV (overrides `grid.n_u`, `grid.n_v`)
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Tolerance applied to every pass/fail check
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Coordinate dropped in the OBJ projection
    #[arg(long, global = true, value_parser = parse_axis)]
    project: Option<Axis>,
    /// Grade the row-first against column-first frame discrepancy
    #[arg(long, global = true)]
    path_check: bool,
    /// Re-orthonormalize the frame after every integration step
    #[arg(long, global = true)]
    renorm: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a Moore surface in canonical parameters with its invariant fields
    Moore,
    /// Analyze a mesh: mean curvature, flat points, structure and PDE residuals
    Verify {
        mesh: PathBuf,
    },
    /// Rebuild a surface from mu and nu fields given in canonical parameters
    Reconstruct {
        mu: PathBuf,
        nu: PathBuf,
    },
    /// Solve one of the (X, Y) systems
    Pde,
    /// Write the 3-D projection of a mesh as OBJ
    Export {
        mesh: PathBuf,
    },
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NUxNV, got `{s}`"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a node count"));
    Ok((n(a)?, n(b)?))
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn effective_config(c: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &c.out {
        cfg.output.dir = dir.clone();
    }
    if let Some((n_u, n_v)) = c.grid {
        if n_u < 5 || n_v < 5 {
            return Err(Error::Config(format!("--grid {n_u}x{n_v}: grids need at least 5x5 nodes")));
        }
        cfg.grid.n_u = n_u;
        cfg.grid.n_v = n_v;
    }
    if let Some(t) = c.tol {
        if !(t > 0.0) {
            return Err(Error::Config(format!("--tol must be positive (got {t})")));
        }
        cfg.tolerances.override_checks(t);
    }
    if let Some(a) = c.project {
        cfg.output.project = a;
    }
    cfg.bonnet.path_check |= c.path_check;
    cfg.bonnet.renorm |= c.renorm;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match effective_config(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Moore => commands::moore(&cfg),
        Command::Verify { mesh } => commands::verify(mesh, &cfg),
        Command::Reconstruct { mu, nu } => commands::reconstruct(mu, nu, &cfg),
        Command::Pde => commands::pde(&cfg),
        Command::Export { mesh } => commands::export(mesh, &cfg),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
