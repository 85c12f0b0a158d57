use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gaussmanin::config::RandomSpec;
use gaussmanin::{cmd_gen, resolve, run_command, Error, RunConfig};

#[derive(Parser)]
#[command(name = "gaussmanin", version, about = "Critical points, Bethe operators and Lagrangian charts of generic arrangements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Arrangement identities, involution of the Hamiltonians and the algebra at z
    Verify(RunArgs),
    /// Critical points from the Bethe operators and from Newton's method
    Solve(RunArgs),
    /// Charts, transition Jacobians, flows and the C×-action
    Flows(RunArgs),
    /// Emit a random generic spec file
    Gen(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long)]
    seed: Option<u64>,
    /// Writes the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random arrangement size (used when no config is given)
    #[arg(long, requires = "k")]
    n: Option<usize>,
    #[arg(long, requires = "n")]
    k: Option<usize>,
    #[arg(long, default_value_t = 3)]
    coeff_bound: i64,
    #[arg(long)]
    tol_newton: Option<f64>,
    #[arg(long)]
    tol_spectral: Option<f64>,
    #[arg(long)]
    tol_fd: Option<f64>,
    #[arg(long)]
    tol_dedup: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    coeff_bound: i64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Domain(_) | Error::Generation(_) => 2,
        Error::Numeric(_) | Error::Reduction(_) => 3,
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n"))
            .map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_config(name: &str, args: &RunArgs) -> Result<(RunConfig, PathBuf), Error> {
    let (mut cfg, base) = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => (RunConfig::default(), PathBuf::from(".")),
    };
    if let Some(cmd) = &cfg.command {
        if cmd != name {
            return Err(Error::Usage(format!("config is for `{cmd}`, not `{name}`")));
        }
    }
    if let (Some(n), Some(k)) = (args.n, args.k) {
        if cfg.spec.is_some() || cfg.spec_file.is_some() {
            return Err(Error::Usage("--n/--k conflict with the spec in the config".into()));
        }
        cfg.random = Some(RandomSpec { n, k, coeff_bound: args.coeff_bound });
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    let tol = &mut cfg.tolerances;
    for (slot, value) in [
        (&mut tol.newton_tol, args.tol_newton),
        (&mut tol.spectral_tol, args.tol_spectral),
        (&mut tol.fd_tol, args.tol_fd),
        (&mut tol.dedup_tol, args.tol_dedup),
    ] {
        if let Some(v) = value {
            *slot = v;
        }
    }
    if args.out.is_some() {
        cfg.output = args.out.clone();
    }
    Ok((cfg, base))
}

fn run(name: &str, args: &RunArgs) -> Result<bool, Error> {
    let (cfg, base) = load_config(name, args)?;
    let resolved = resolve(&cfg, &base)?;
    let report = run_command(name, &resolved)?;
    write_output(cfg.output.as_deref(), &report.to_json())?;
    eprintln!(
        "{name}: {} passed, {} failed, {} skipped",
        report.summary.passed, report.summary.failed, report.summary.skipped
    );
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Verify(a) => run("verify", a),
        Command::Solve(a) => run("solve", a),
        Command::Flows(a) => run("flows", a),
        Command::Gen(g) => cmd_gen(g.n, g.k, g.seed, g.coeff_bound).and_then(|file| {
            let text = serde_json::to_string_pretty(&file).expect("spec file serializes");
            write_output(g.out.as_deref(), &text).map(|_| true)
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
