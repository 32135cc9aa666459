//! `semilinear`: command-line front end for the radial steady states,
//! barriers and parabolic solver of `u_t = Δu + |u|^{p-1}u`.
//!
//! Every subcommand prints a JSON report on standard output. Subcommands
//! that produce tables also write `<name>.csv` and `<name>.json` into the
//! output directory. Exit codes: 0 success, 2 invalid input, 3 numerical
//! failure; errors are printed to standard error as one JSON line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};

use commands::Globals;
use output::{Failure, OutDir, Outcome};

#[derive(Debug, Parser)]
#[command(
    name = "semilinear",
    version,
    about = "Radial steady states and barriers for u_t = Δu + |u|^{p-1}u"
)]
struct Cli {
    /// Relative tolerance for integration and root refinement.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,

    /// Relative distance to p_S within which p counts as critical.
    #[arg(long, global = true, default_value_t = semilinear::exponents::CRITICAL_REL_TOL)]
    critical_tol: f64,

    /// Seed for generated inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory (default: $SEMILINEAR_OUT_DIR, then `.`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Critical exponents for dimension N, and the regime of p.
    Exponents {
        #[arg(long)]
        dim: u32,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Shoot the regular profile λΦ(λ^{(p-1)/2} r) on [0, rmax].
    Shoot {
        #[arg(long)]
        dim: u32,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        rmax: f64,
    },
    /// Crossings of Φ with φ∞, or of φ_λ with a Delaunay profile at p_S.
    Intersections {
        #[arg(long)]
        dim: u32,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 100.0)]
        rmax: f64,
        #[arg(long, requires = "lambda")]
        delaunay_min: Option<f64>,
        #[arg(long, requires = "delaunay_min")]
        lambda: Option<f64>,
    },
    /// Periodic orbit of the critical cylinder equation with minimum m.
    Delaunay {
        #[arg(long)]
        dim: u32,
        #[arg(long)]
        min_value: f64,
        #[arg(long, default_value_t = 1)]
        periods: usize,
    },
    /// Orbit from L to 0 of the damped cylinder equation, p_sg < p < p_S.
    Heteroclinic {
        #[arg(long)]
        dim: u32,
        #[arg(long)]
        p: f64,
        /// Rows of the table, evenly spaced in t.
        #[arg(long, default_value_t = 2001)]
        samples: usize,
    },
    /// Barrier z_λ on a snapped mesh with its weak residual.
    Supersolution {
        #[arg(long)]
        dim: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        delaunay_min: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        mesh_h: f64,
        #[arg(long)]
        rmax: Option<f64>,
    },
    /// Evolve the heat equation on a ball from a JSON run configuration.
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sweep the barrier family down a schedule from a JSON run configuration.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Doubling point of a weight on a finite metric space.
    #[command(group(ArgGroup::new("source").required(true).args(["input", "random"])))]
    Doubling {
        /// JSON file {points, dist, M}.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Generate this many random space-time points from --seed.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long)]
        k: f64,
        /// Label of the starting point.
        #[arg(long)]
        y: Option<String>,
    },
}

fn run(cli: Cli) -> Outcome<String> {
    let g = Globals {
        tol: cli.tol,
        critical_tol: cli.critical_tol,
        seed: cli.seed,
        out: OutDir::resolve(cli.out_dir),
    };
    match cli.command {
        Command::Exponents { dim, p } => commands::exponents(&g, dim, p),
        Command::Shoot { dim, p, lambda, rmax } => commands::shoot(&g, dim, p, lambda, rmax),
        Command::Intersections {
            dim,
            p,
            rmax,
            delaunay_min,
            lambda,
        } => commands::intersections(&g, dim, p, rmax, delaunay_min.zip(lambda)),
        Command::Delaunay {
            dim,
            min_value,
            periods,
        } => commands::delaunay(&g, dim, min_value, periods),
        Command::Heteroclinic { dim, p, samples } => commands::heteroclinic(&g, dim, p, samples),
        Command::Supersolution {
            dim,
            p,
            lambda,
            delaunay_min,
            mesh_h,
            rmax,
        } => commands::supersolution(&g, dim, p, lambda, delaunay_min, mesh_h, rmax),
        Command::Evolve { config } => commands::evolve_run(&g, &config),
        Command::Sweep { config } => commands::sweep_run(&g, &config),
        Command::Doubling { input, random, k, y } => commands::doubling(&g, input.as_ref(), random, k, y.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(json) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(json.as_bytes()).and_then(|_| out.flush()).is_err() {
                return report(Failure::Io("cannot write to standard output".into()));
            }
            ExitCode::SUCCESS
        }
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    eprintln!("{}", f.to_json());
    ExitCode::from(u8::try_from(f.exit_code()).unwrap_or(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_follow_subcommands() {
        let cli = Cli::try_parse_from([
            "semilinear",
            "shoot",
            "--dim",
            "3",
            "--p",
            "5",
            "--rmax",
            "10",
            "--tol",
            "1e-9",
        ])
        .unwrap();
        assert_eq!(cli.tol, 1e-9);
        assert!(matches!(cli.command, Command::Shoot { lambda, .. } if lambda == 1.0));
    }

    #[test]
    fn delaunay_flags_come_in_pairs() {
        let half = Cli::try_parse_from(["semilinear", "intersections", "--dim", "3", "--p", "5", "--lambda", "2"]);
        assert!(half.is_err());
        let both = Cli::try_parse_from([
            "semilinear",
            "intersections",
            "--dim",
            "3",
            "--p",
            "5",
            "--lambda",
            "2",
            "--delaunay-min",
            "0.3",
        ]);
        assert!(both.is_ok());
    }

    #[test]
    fn doubling_needs_a_source() {
        assert!(Cli::try_parse_from(["semilinear", "doubling", "--k", "1"]).is_err());
        assert!(Cli::try_parse_from([
            "semilinear",
            "doubling",
            "--k",
            "1",
            "--random",
            "5",
            "--input",
            "a.json"
        ])
        .is_err());
    }
}
