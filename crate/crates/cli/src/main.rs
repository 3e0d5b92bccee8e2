use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fracscreen::pipeline::SolveMode;
use fracscreen::Error;
use fracscreen_cli::{cmd_converge, cmd_field, cmd_mesh, cmd_solve, exit_code, RunConfig};

#[derive(Parser)]
#[command(name = "fracscreen", version, about = "Scattering by fractal impedance screens")]
struct Cli {
    /// JSON run configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for assembly and field evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the configured solve mode.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Print the effective configuration with all defaults and exit.
    #[arg(long)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Fast,
    Dense,
}

#[derive(Subcommand)]
enum Command {
    /// Build the prefractal and its mesh; write summary and wireframe.
    Mesh,
    /// Assemble and solve; write coefficients.
    Solve {
        /// Also write the GMRES residual history to iterations.csv.
        #[arg(long)]
        log_iterations: bool,
    },
    /// Evaluate the field of a stored solution on the cube faces.
    Field {
        /// Solution file; defaults to solution.bin in the output directory.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Run the prefractal convergence study.
    Converge,
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default().validated()?,
    };
    if let Some(mode) = cli.mode {
        cfg.mode = match mode {
            Mode::Fast => SolveMode::Fast,
            Mode::Dense => SolveMode::Dense,
        };
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidParameter("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    if cli.print_config {
        println!("{}", cfg.to_json());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(Error::InvalidParameter("no subcommand given (mesh, solve, field, converge)".into()));
    };
    match command {
        Command::Mesh => {
            let s = cmd_mesh(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&s)?);
        }
        Command::Solve { log_iterations } => {
            let out = cmd_solve(&cfg, log_iterations)?;
            let s = &out.solution;
            println!(
                "{} unknowns, {} iterations, relative residual {:.3e}, {:.2} s",
                s.phi.len() + s.psi.len(),
                s.iterations,
                s.rel_residual,
                s.seconds
            );
            if !out.converged {
                return Err(Error::NotConverged(Box::new(out.solution)));
            }
        }
        Command::Field { solution } => {
            let grid = cmd_field(&cfg, solution.as_deref())?;
            println!("{} samples, {} excluded near the screen", grid.points.len(), grid.excluded);
        }
        Command::Converge => {
            let rows = cmd_converge(&cfg)?;
            for r in &rows {
                println!("k={} j={} h={:.4e} error={:.4e} iterations={}", r.k, r.j, r.h, r.error, r.iterations);
            }
            if rows.iter().any(|r| !r.converged) {
                eprintln!("warning: some levels did not converge; see study.csv");
                return Err(Error::Breakdown("study contains unconverged solves".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
