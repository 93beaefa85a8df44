use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skrp_cli::config::{load, RunConfig, SweepConfig};
use skrp_cli::error::CliError;
use skrp_cli::report::{read_report, summary_table, write_document};
use skrp_cli::{build, classify, sweep, verify, Overrides};

#[derive(Parser)]
#[command(name = "skrp", version, about = "Build and verify SKRP metrics from JSON configs")]
struct Cli {
    /// Worker threads for the parallel core (0: rayon default).
    #[arg(long, global = true, env = "SKRP_THREADS", default_value_t = 0)]
    threads: usize,
    /// Evaluate points sequentially instead of on the thread pool.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol_scale: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg: RunConfig = load(&self.config)?;
        Overrides { seed: self.seed, tol_scale: self.tol_scale, points: self.points }.apply(&mut cfg);
        Ok(cfg)
    }

    fn out(&self, cfg: &RunConfig) -> Option<PathBuf> {
        self.out.clone().or_else(|| cfg.output.report.clone())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the model and write its metadata and a metric grid.
    Build {
        #[command(flatten)]
        run: RunArgs,
        /// CSV grid path (defaults to `output.grid`, then to the --out path with a .csv extension).
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Run the check plan and write a report. Exit 1 if any check fails.
    Verify {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print the type classification of the model.
    Classify {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a parameter sweep and write CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a summary table of a report file.
    Report { path: PathBuf },
}

fn set_threads(threads: usize, sequential: bool) -> Result<(), CliError> {
    if sequential {
        skrp_core::exec::set_mode(skrp_core::exec::ExecMode::Sequential);
    }
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    set_threads(cli.threads, cli.sequential)?;
    match cli.command {
        Command::Build { run, grid } => {
            let cfg = run.load()?;
            let out = run.out(&cfg);
            let grid = grid.or_else(|| cfg.output.grid.clone()).or_else(|| out.as_ref().map(|p| p.with_extension("csv")));
            let meta = build(cfg, grid.as_deref())?;
            write_document(&meta, out.as_deref())?;
            Ok(0)
        }
        Command::Verify { run } => {
            let cfg = run.load()?;
            let out = run.out(&cfg);
            let report = verify(cfg)?;
            write_document(&report, out.as_deref())?;
            for c in report.checks.iter().filter(|c| !c.pass) {
                eprintln!("FAIL {}: residual {:?}, tolerance {:e}", c.name, c.residual, c.tolerance);
            }
            Ok(if report.summary.pass { 0 } else { 1 })
        }
        Command::Classify { run } => {
            let cfg = run.load()?;
            let c = classify(&cfg)?;
            let json = serde_json::to_string_pretty(&c).map_err(|e| CliError::Io(e.to_string()))?;
            match run.out(&cfg) {
                Some(p) => std::fs::write(p, json + "\n")?,
                None => println!("{json}"),
            }
            Ok(0)
        }
        Command::Sweep { config, out } => {
            let cfg: SweepConfig = load(&config)?;
            let rows = match out.or_else(|| cfg.output.clone()) {
                Some(p) => sweep::run_sweep(&cfg, std::fs::File::create(p)?)?,
                None => sweep::run_sweep(&cfg, std::io::stdout().lock())?,
            };
            eprintln!("{rows} rows");
            Ok(0)
        }
        Command::Report { path } => {
            let report = read_report(&path)?;
            print!("{}", summary_table(&report)?);
            Ok(if report.pointer("/summary/pass").and_then(|v| v.as_bool()) == Some(false) { 1 } else { 0 })
        }
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
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("skrp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
