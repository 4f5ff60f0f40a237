use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hrx_core::hr::ApproxOrder;
use hrx_core::study::{
    fit_rate, group_by_point, parse_config_text, parse_orders, read_records_from_path, run_study,
    write_records, write_records_to_path, StudyConfig,
};
use hrx_core::verify::{run_verification, VerifyOptions};
use hrx_core::Error;

/// Convergence studies for maxima of Gaussian triangular arrays.
#[derive(Debug, Parser)]
#[command(name = "hrx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Error table over an n sweep and a grid, written as CSV.
    Table(TableArgs),
    /// Log-log rate fits of err_k against b_n² from a table CSV.
    Rate(RateArgs),
    /// Identity and oracle checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct TableArgs {
    /// key = value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// constant | third-order | corollary-infinity | corollary-zero
    #[arg(long)]
    spec: Option<String>,
    /// Correlation for the constant spec.
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long = "tau-rate")]
    tau_rate: Option<String>,
    /// Comma list, or a:b:step in log10 units.
    #[arg(long)]
    n: Option<String>,
    /// x=a:b:step,y=c:d:step or pairs x1,y1;x2,y2
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Subset of 1,2,3.
    #[arg(long)]
    orders: Option<String>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Debug, Args)]
struct RateArgs {
    /// CSV written by `hrx table`.
    input: PathBuf,
    /// Orders to fit; defaults to every order present in the file.
    #[arg(long)]
    orders: Option<String>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = VerifyOptions::default().seed)]
    seed: u64,
    /// Monte Carlo trials per cross-check.
    #[arg(long, default_value_t = VerifyOptions::default().mc_trials)]
    trials: u64,
}

/// Exit status: validation problems are 1, numerical non-convergence is 2.
#[derive(Debug)]
enum Failure {
    Invalid(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Convergence { .. } => Failure::Numerical(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

fn settings_from(args: &TableArgs) -> Result<BTreeMap<String, String>, Failure> {
    let mut map = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    let overrides = [
        ("spec", &args.spec),
        ("rho", &args.rho),
        ("lambda", &args.lambda),
        ("alpha", &args.alpha),
        ("beta", &args.beta),
        ("gamma", &args.gamma),
        ("tau_rate", &args.tau_rate),
        ("n", &args.n),
        ("grid", &args.grid),
        ("orders", &args.orders),
        ("out", &args.out),
        ("seed", &args.seed),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            map.insert(key.to_string(), v.clone());
        }
    }
    Ok(map)
}

fn table(args: &TableArgs) -> Result<(), Failure> {
    let config = StudyConfig::from_settings(&settings_from(args)?)?;
    let out = run_study(&config)?;
    for p in &out.skipped {
        eprintln!("skipped {p}: limit below 1e-300");
    }
    let clipped = out.records.iter().filter(|r| r.clipped).count();
    if clipped > 0 {
        log::warn!("{clipped} records have a clipped correlation");
    }
    match &config.output_path {
        Some(path) => {
            write_records_to_path(path, &out.records)?;
            log::info!("wrote {} records to {}", out.records.len(), path.display());
        }
        None => {
            write_records(io::stdout().lock(), &out.records)
                .map_err(|e| Failure::Invalid(format!("stdout: {e}")))?;
        }
    }
    Ok(())
}

fn rate(args: &RateArgs) -> Result<(), Failure> {
    let records = read_records_from_path(&args.input)?;
    let orders: BTreeSet<ApproxOrder> = match &args.orders {
        Some(s) => parse_orders(s)?,
        None => ApproxOrder::ALL
            .into_iter()
            .filter(|&o| records.iter().any(|r| r.err_of(o).is_some()))
            .collect(),
    };
    let mut stdout = io::stdout().lock();
    let mut emit = |line: String| {
        writeln!(stdout, "{line}").map_err(|e| Failure::Invalid(format!("stdout: {e}")))
    };
    emit("x,y,order,slope,intercept,r_squared,points".into())?;
    for (p, recs) in group_by_point(&records) {
        for &order in &orders {
            let fit = fit_rate(&recs, order)?;
            emit(format!(
                "{},{},{},{:.6},{:.6},{:.6},{}",
                p.x,
                p.y,
                order.rank(),
                fit.slope,
                fit.intercept,
                fit.r_squared,
                fit.points
            ))?;
        }
    }
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let opts = VerifyOptions {
        seed: args.seed,
        mc_trials: args.trials,
    };
    let outcomes = run_verification(&opts)?;
    let mut failed = 0;
    for c in &outcomes {
        println!(
            "[{}] {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(Failure::Invalid(format!(
            "{failed} of {} checks failed",
            outcomes.len()
        )));
    }
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("HRX_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        Failure::Invalid(format!(
            "HRX_THREADS must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Invalid(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Table(a) => table(a),
        Command::Rate(a) => rate(a),
        Command::Verify(a) => verify(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergence_maps_to_numerical_failure() {
        let e = Error::Convergence {
            value: 1.0,
            abs_error_estimate: 0.5,
            evaluations: 100,
        };
        assert!(matches!(Failure::from(e), Failure::Numerical(_)));
        assert!(matches!(
            Failure::from(Error::Config("x".into())),
            Failure::Invalid(_)
        ));
    }
}
