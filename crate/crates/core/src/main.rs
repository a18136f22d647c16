use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use fpsym::report::{
    cmd_check, cmd_determining, cmd_generate, cmd_table, cmd_verify, CheckInput, CommandError, ConfigOverrides,
    SystemId, VerifyTarget, CONFIG_ENV,
};

/// Symmetry and solution checks for u_t = -a2 u - (a2 x + a1) u_x + 1/2 u_xx.
#[derive(Parser, Debug)]
#[command(name = "fpsym", version)]
struct Cli {
    /// Drift parameter a1: a rational, or `sym`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    a1: Option<String>,
    /// Drift parameter a2 (nonzero): a rational, or `sym`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    a2: Option<String>,
    /// Finite-difference grid `x0,x1,t0,t1,h,L`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Numeric residual threshold.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for randomized identity checks.
    #[arg(long = "seed-rng", global = true)]
    seed_rng: Option<u64>,
    /// Output format: text or structured.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Treat containment mismatches as failures.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Verify the generator catalog.
    Verify {
        #[arg(long, default_value = "all")]
        target: String,
    },
    /// Commutator table and its diff against the reference table.
    Table,
    /// Apply solution operators to a seed.
    Generate {
        #[arg(long, allow_hyphen_values = true)]
        seed: String,
        #[arg(long, value_delimiter = ',')]
        ops: Vec<String>,
    },
    /// Check a closed-form solution or a registered claim.
    Check {
        #[arg(long, conflicts_with = "claim", allow_hyphen_values = true)]
        expr: Option<String>,
        #[arg(long)]
        claim: Option<String>,
    },
    /// Derive determining equations and compare with the reference system.
    Determining {
        #[arg(long)]
        system: String,
    },
}

fn run(cli: Cli) -> Result<i32, CommandError> {
    let file = match std::env::var_os(CONFIG_ENV) {
        Some(path) => ConfigOverrides::from_file(std::path::Path::new(&path))?,
        None => ConfigOverrides::default(),
    };
    let flags = ConfigOverrides {
        a1: cli.a1,
        a2: cli.a2,
        grid: cli.grid,
        tol: cli.tol,
        seed: cli.seed_rng,
        format: cli.format,
        strict: cli.strict.then_some(true),
    };
    let cfg = file.merge(flags).resolve()?;
    let start = Instant::now();
    let mut report = match cli.command {
        Command::Verify { target } => cmd_verify(target.parse::<VerifyTarget>()?, &cfg),
        Command::Table => cmd_table(&cfg),
        Command::Generate { seed, ops } => cmd_generate(&seed, &ops, &cfg)?,
        Command::Check { expr, claim } => {
            let input = match (expr, claim) {
                (Some(e), None) => CheckInput::Expr(e),
                (None, Some(c)) => CheckInput::Claim(c),
                _ => return Err(CommandError::Usage("check needs exactly one of --expr or --claim".into())),
            };
            cmd_check(&input, &cfg)?
        }
        Command::Determining { system } => cmd_determining(system.parse::<SystemId>()?, &cfg),
    };
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    // A closed pipe (e.g. `| head`) is not an error worth a panic.
    let _ = writeln!(std::io::stdout().lock(), "{}", report.render(cfg.format));
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
