use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sarima_cli::error::exit;
use sarima_cli::ingest::ingest;
use sarima_cli::report::{write_ingest, write_outputs};
use sarima_cli::synthetic::{synthetic_csv, SyntheticModel, SyntheticSpec};
use sarima_cli::{run_pipeline, CliError, ConfigArgs, PipelineConfig, Stage};
use sarima_core::MonthStamp;

/// Seasonal ARIMA modelling and forecasting of monthly crime counts.
#[derive(Debug, Parser)]
#[command(name = "sarima", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Aggregate the input and write the monthly series.
    Ingest(ConfigArgs),
    /// Identify and fit a model per category.
    Fit(ConfigArgs),
    /// Fit, then run residual diagnostics.
    Diagnose(ConfigArgs),
    /// Fit, then forecast the holdout months and evaluate.
    Forecast(ConfigArgs),
    /// Full pipeline including figures.
    Run(ConfigArgs),
    /// Write a synthetic dataset in the input schema.
    Simulate(SimulateArgs),
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "seasonal")]
    model: SyntheticModel,
    #[arg(long, default_value = "2005-01")]
    from: MonthStamp,
    #[arg(long, default_value_t = 180)]
    months: usize,
    #[arg(long, default_value_t = 3)]
    jurisdictions: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let (args, stage) = match cli.command {
        Command::Simulate(a) => {
            let text = synthetic_csv(&SyntheticSpec {
                model: a.model,
                from: a.from,
                months: a.months,
                jurisdictions: a.jurisdictions,
                seed: a.seed,
            })?;
            match a.out {
                Some(p) => std::fs::write(&p, text).map_err(|e| CliError::Io { path: p, source: e })?,
                None => print!("{text}"),
            }
            return Ok(exit::OK);
        }
        Command::Ingest(a) => {
            let cfg = PipelineConfig::resolve(&a)?;
            let data = ingest(cfg.input_path()?, &cfg.ingest_options())?;
            write_ingest(&cfg.out, &data)?;
            println!(
                "{} records read, {} inside {}..{}",
                data.records_read, data.records_used, cfg.from, cfg.to
            );
            for (year, total) in &data.annual_totals {
                println!("{year}\t{total}");
            }
            return Ok(exit::OK);
        }
        Command::Fit(a) => (a, Stage::Fit),
        Command::Diagnose(a) => (a, Stage::Diagnose),
        Command::Forecast(a) => (a, Stage::Forecast),
        Command::Run(a) => (a, Stage::Run),
    };
    let cfg = PipelineConfig::resolve(&args)?;
    let run = run_pipeline(&cfg, stage)?;
    write_outputs(&run, &cfg.out)?;
    println!(
        "{} records used; outputs in {}",
        run.dataset.records_used,
        cfg.out.display()
    );
    for (category, result) in &run.results {
        match result {
            Ok(r) => {
                let m = &r.auto.selection.model;
                let mut line = format!("{category}: {} aic {:.2}", m.order, m.aic);
                if let Some(e) = &r.evaluation {
                    line += &format!(
                        ", max relative error {:.3}, coverage {:.2}",
                        e.max_relative_error, e.coverage
                    );
                }
                println!("{line}");
            }
            Err(e) => eprintln!("error: {e}"),
        }
    }
    Ok(run.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = execute(cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
