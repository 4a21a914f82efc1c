//! `lgdid` — in-default LGD analytics over recovery cash flows.
//!
//! Subcommands: `simulate` a seeded synthetic portfolio, `fit` the
//! exponential recovery law, `score` per-loan posterior forecasts, and
//! `evaluate` exact vs forecast vs average LGD curves. All outputs are
//! deterministic given the same inputs and seed.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lgdid_cli::config::{AppConfig, SchemeChoice};
use lgdid_cli::error::CliError;
use lgdid_cli::io::{load_portfolio, write_portfolio, LoadedPortfolio};
use lgdid_cli::output::{
    write_eval_summary, write_fit_json, write_report_csv, write_score_csv, EvalSummary,
    FitDocument, SchemeFits, EVAL_SCHEMA, FIT_SCHEMA,
};
use lgdid_core::curve::{aggregate_curve, fit, pick_conservative};
use lgdid_core::{
    bayes, cashflow, eval, generator, LoanForecast, RecoveryCurveFit, WeightScheme,
};
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "lgdid",
    version,
    about = "In-default LGD analytics over recovery cash flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the exponential recovery law to a portfolio (JSON output).
    Fit(AnalyzeArgs),
    /// Write per-loan posterior forecast paths (CSV output).
    Score(AnalyzeArgs),
    /// Compare exact, forecast, and average LGD curves (CSV + JSON summary).
    Evaluate(AnalyzeArgs),
    /// Generate a synthetic portfolio in the input CSV schema.
    Simulate {
        /// TOML config; the `[generator]` section drives the simulation.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Base path: writes `<out>_loans.csv` and `<out>_recoveries.csv`.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the generator seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Loans CSV: loan_id,ead,annual_rate,lgd_wd.
    #[arg(long)]
    loans: PathBuf,
    /// Recoveries CSV: loan_id,month_after_default,amount.
    #[arg(long)]
    recoveries: PathBuf,
    /// TOML config with segment settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path (for `evaluate`, the JSON summary lands next to it).
    #[arg(long)]
    out: PathBuf,
    /// Weighting scheme; overrides the config.
    #[arg(long, value_enum)]
    scheme: Option<SchemeChoice>,
}

fn main() {
    init_thread_pool();
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

/// Honors LGDID_THREADS as a cap on internal per-loan parallelism.
fn init_thread_pool() {
    if let Ok(value) = std::env::var("LGDID_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn run() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::Fit(args) => run_fit(&args),
        Command::Score(args) => run_score(&args),
        Command::Evaluate(args) => run_evaluate(&args),
        Command::Simulate { config, out, seed } => run_simulate(config.as_deref(), &out, seed),
    }
}

struct FittedPortfolio {
    loans: Vec<cashflow::LoanRecord>,
    cfg: AppConfig,
    choice: SchemeChoice,
    terminal_recovery: f64,
    fits: [RecoveryCurveFit; 3],
    conservative: RecoveryCurveFit,
    selected: RecoveryCurveFit,
}

fn load_and_fit(args: &AnalyzeArgs) -> Result<FittedPortfolio, CliError> {
    let cfg = AppConfig::load(args.config.as_deref())?;
    let choice = args.scheme.unwrap_or(cfg.weight_scheme);
    let LoadedPortfolio { loans, diagnostics } = load_portfolio(
        &args.loans,
        &args.recoveries,
        cfg.horizon_months,
        cfg.lgd_wd_fallback,
    )?;
    println!(
        "loaded {} loans, {} recovery rows ({} rejected)",
        loans.len(),
        diagnostics.recovery_rows,
        diagnostics.rejected.len()
    );
    for rejected in &diagnostics.rejected {
        eprintln!(
            "note: {} line {}: {}",
            rejected.file, rejected.line, rejected.reason
        );
    }
    let curve = aggregate_curve(&loans, &cfg.segment())?;
    let fits = [
        fit(&curve, WeightScheme::Uniform)?,
        fit(&curve, WeightScheme::FrontLoaded)?,
        fit(&curve, WeightScheme::BackLoaded)?,
    ];
    let conservative = pick_conservative(&fits);
    let selected = match choice.scheme() {
        Some(WeightScheme::Uniform) => fits[0],
        Some(WeightScheme::FrontLoaded) => fits[1],
        Some(WeightScheme::BackLoaded) => fits[2],
        None => conservative,
    };
    Ok(FittedPortfolio {
        loans,
        cfg,
        choice,
        terminal_recovery: curve.terminal(),
        fits,
        conservative,
        selected,
    })
}

fn run_fit(args: &AnalyzeArgs) -> Result<(), CliError> {
    let fitted = load_and_fit(args)?;
    let doc = FitDocument {
        schema_version: FIT_SCHEMA,
        horizon_months: fitted.cfg.horizon_months,
        terminal_recovery: fitted.terminal_recovery,
        fits: SchemeFits {
            uniform: fitted.fits[0],
            front_loaded: fitted.fits[1],
            back_loaded: fitted.fits[2],
        },
        conservative_scheme: fitted.conservative.scheme.label().to_string(),
        selected_scheme: fitted.choice.label().to_string(),
        selected: fitted.selected,
    };
    write_fit_json(&args.out, &doc)?;
    println!(
        "fit: T = {:.4} months, R_inf = {:.6}, sigma_T = {:.4}, MAD = {:.6} ({})",
        fitted.selected.mean_time,
        fitted.selected.r_inf,
        fitted.selected.sigma_t,
        fitted.selected.mad,
        fitted.selected.scheme
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_score(args: &AnalyzeArgs) -> Result<(), CliError> {
    let fitted = load_and_fit(args)?;
    let segment = fitted.cfg.segment();
    let mean_time = fitted.selected.mean_time;
    let forecasts: Vec<LoanForecast> = fitted
        .loans
        .par_iter()
        .map(|loan| {
            let series = cashflow::discount_recoveries(loan, &segment)?;
            bayes::score_loan(loan, &series, mean_time, segment.horizon_months)
        })
        .collect::<Result<_, _>>()?;
    write_score_csv(&args.out, &forecasts)?;
    println!(
        "scored {} loans over {} months (T = {:.4})",
        forecasts.len(),
        segment.horizon_months,
        mean_time
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_evaluate(args: &AnalyzeArgs) -> Result<(), CliError> {
    let fitted = load_and_fit(args)?;
    let report = eval::evaluate(&fitted.loans, &fitted.selected, &fitted.cfg.segment())?;
    write_report_csv(&args.out, &report)?;
    let summary_path = args.out.with_extension("json");
    let last = report.horizon as usize;
    write_eval_summary(
        &summary_path,
        &EvalSummary {
            schema_version: EVAL_SCHEMA,
            n_loans: fitted.loans.len(),
            horizon_months: report.horizon,
            selected_scheme: fitted.choice.label().to_string(),
            fit: fitted.selected,
            rr_bar: report.rr_bar,
            monotonicity_violation_rate: report.monotonicity_violation_rate,
            lgd_exact_final: report.lgd_exact[last],
            lgd_forecast_final: report.lgd_forecast[last],
            lgd_average_final: report.lgd_average[last],
        },
    )?;
    println!(
        "evaluated {} loans: rr_bar = {:.4}, forecast decrease rate = {:.6}",
        fitted.loans.len(),
        report.rr_bar,
        report.monotonicity_violation_rate
    );
    println!("wrote {} and {}", args.out.display(), summary_path.display());
    Ok(())
}

fn run_simulate(config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let cfg = AppConfig::load(config)?;
    let spec = cfg.generator.to_spec(seed);
    let loans = generator::generate_portfolio(&spec)?;
    let loans_path = sibling(out, "_loans.csv");
    let recoveries_path = sibling(out, "_recoveries.csv");
    write_portfolio(&loans, &loans_path, &recoveries_path)?;
    println!(
        "simulated {} loans (seed {}, T = {}, mean R_inf = {})",
        loans.len(),
        spec.seed,
        spec.mean_time,
        spec.r_inf_mean
    );
    println!(
        "wrote {} and {}",
        loans_path.display(),
        recoveries_path.display()
    );
    Ok(())
}

fn sibling(base: &Path, suffix: &str) -> PathBuf {
    let mut name = base.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}
