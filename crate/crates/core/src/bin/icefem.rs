use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use icefem::app::{self, AppError};

#[derive(Parser)]
#[command(name = "icefem", version, about = "Least-squares finite element sea-ice momentum solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write log, indicator and VTK files.
    Run { config: PathBuf },
    /// Run the experiment on a uniform refinement hierarchy.
    Study {
        config: PathBuf,
        /// Number of mesh levels (at least 3); defaults to `levels` in the config.
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Print counts and sizes of a mesh file.
    MeshInfo { meshfile: PathBuf },
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = app::load_config(&config)?;
            let summary = app::run_experiment(&cfg)?;
            for s in &summary.steps {
                println!(
                    "step {:>4}  t = {:e}  gn_iterations = {:>2}  H = {:e}  |u - v_o| = {:e}  ({:?})",
                    s.step,
                    s.time,
                    s.gn_iterations(),
                    s.functional,
                    s.u_minus_vo_norm,
                    s.reason
                );
            }
            println!(
                "cells {}  dofs {}  final H = {:e}  output in {}",
                summary.n_cells,
                summary.n_dofs,
                summary.final_functional,
                cfg.output_dir.display()
            );
        }
        Command::Study { config, levels } => {
            let cfg = app::load_config(&config)?;
            let report = app::run_convergence_study(&cfg, levels.unwrap_or(cfg.levels))?;
            let rates = report.rates();
            for (i, l) in report.levels.iter().enumerate() {
                let rate = if i == 0 { String::from("-") } else { format!("{:.3}", rates[i - 1]) };
                println!(
                    "level {}  h_max = {:e}  cells {:>6}  dofs {:>7}  H = {:e}  rate {rate}  time {:.2?}",
                    l.level, l.h_max, l.n_cells, l.n_dofs, l.functional, l.wall_time
                );
            }
            match report.slope {
                Some(v) => println!("fitted slope of log H vs log h_max: {v:.4}"),
                None => println!("fitted slope: undefined (functional at rounding level)"),
            }
        }
        Command::MeshInfo { meshfile } => print!("{}", app::mesh_info(&meshfile)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
