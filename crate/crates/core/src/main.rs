use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use mhdflat::cli;

#[derive(Parser)]
#[command(name = "mhdflat", version, about = "Spectral MHD solver on the slip/insulating channel")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write diagnostics.csv and final.ckpt.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides out_dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vanishing-dissipation study with nu = mu = eps for each eps.
    Study {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated, strictly decreasing.
        #[arg(long)]
        eps: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the structural property battery.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let outcome = match args.command {
        Command::Run { config, out } => cli::run_cmd(&config, out.as_deref()).map(|s| {
            println!("run finished at t={} (E={:.6e})", s.t, s.total_energy());
            true
        }),
        Command::Study { config, eps, out } => cli::study_cmd(&config, &eps, out.as_deref()).map(|r| {
            for row in &r.rows {
                println!("eps={:e} sup_err={:e} sup_H3={:e}", row.eps, row.sup_err, row.sup_h3);
            }
            match r.slope {
                Some(s) => println!("slope={s:.4}"),
                None => println!("slope undefined (fewer than two usable rows)"),
            }
            if r.any_failed() {
                error!("at least one study run failed");
            }
            !r.any_failed()
        }),
        Command::Verify { config } => cli::verify_cmd(&config).map(|report| {
            println!("{report}");
            for c in report.failures() {
                error!("{} violated: residual {:e} > {:e}", c.name, c.worst, c.tol);
            }
            report.all_passed()
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
