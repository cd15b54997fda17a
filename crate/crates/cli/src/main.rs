//! Command-line front end for the depth-sweep experiments.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lincntk::cntk::Depth;
use lincntk::experiments::{
    compute_gallery, compute_mnist, compute_sweep, gallery_outputs, mnist_outputs, parse_config,
    sweep_outputs, Family, OutputSet, SweepConfig,
};
use lincntk::{Error, Execution};

/// `println!` that stops quietly when stdout is closed (e.g. piped to `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "lincntk", version, about = "Linear CNTK depth experiments")]
struct Cli {
    /// Worker threads for Monte Carlo trials (0 = all cores). Results do not
    /// depend on this setting.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Run every trial on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bias, variance and excess risk across depths (sweep.csv).
    Sweep { config: PathBuf },
    /// Leading eigenvector of Θ_D rendered as PGM images.
    Eigvec { config: PathBuf },
    /// MNIST 0/1 test loss across depths (mnist_loss.csv).
    Mnist { config: PathBuf },
    /// Parse and check a configuration without running anything.
    Validate { config: PathBuf },
}

fn execution(cli: &Cli) -> Result<Execution, Error> {
    if cli.sequential {
        return Ok(Execution::Sequential);
    }
    #[cfg(feature = "parallel")]
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("cannot start thread pool: {e}")))?;
    }
    Ok(Execution::default())
}

fn describe(cfg: &SweepConfig) -> String {
    let depths: Vec<String> = cfg.depths.iter().map(Depth::to_string).collect();
    let family = match cfg.family {
        Family::Cntk => "cntk".to_string(),
        Family::Aligned { center } => format!("aligned around {center}"),
    };
    format!(
        "geometry {} padding {} architecture {} family {family}\ndepths {}\noutput {}",
        cfg.geometry,
        cfg.padding,
        cfg.architecture,
        depths.join(","),
        cfg.output_dir.display()
    )
}

fn commit(outputs: OutputSet, dir: &Path) -> Result<(), Error> {
    for path in outputs.commit(dir)? {
        say!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    let exec = execution(cli)?;
    match &cli.command {
        Command::Validate { config } => {
            let cfg = parse_config(config)?;
            say!("{}: ok\n{}", config.display(), describe(&cfg));
        }
        Command::Sweep { config } => {
            let cfg = parse_config(config)?;
            let run = compute_sweep(&cfg, exec)?;
            for r in &run.records {
                say!(
                    "D={:>6}  bias {:.6e}  var {:.6e}  risk {:.6e}  g {:.6}",
                    r.depth.to_string(),
                    r.bias_mean,
                    r.var_mean,
                    r.risk_mean,
                    r.g
                );
            }
            commit(sweep_outputs(&cfg, &run), &cfg.output_dir)?;
        }
        Command::Eigvec { config } => {
            let cfg = parse_config(config)?;
            let entries = compute_gallery(&cfg, exec)?;
            for e in &entries {
                say!(
                    "D={:>6}  participation ratio {:.3}",
                    e.depth.to_string(),
                    e.participation_ratio
                );
            }
            commit(gallery_outputs(&cfg, &entries), &cfg.output_dir)?;
        }
        Command::Mnist { config } => {
            let cfg = parse_config(config)?;
            let run = compute_mnist(&cfg, exec)?;
            for r in &run.records {
                say!(
                    "D={:>6}  loss {:.6} ± {:.6}  g {:.6}",
                    r.depth.to_string(),
                    r.loss_mean,
                    r.loss_se,
                    r.g
                );
            }
            say!(
                "baseline (Θ = I)  loss {:.6} ± {:.6}",
                run.baseline.mean,
                run.baseline.std_error
            );
            commit(mnist_outputs(&cfg, &run), &cfg.output_dir)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
