//! Per-category split, identification, fit, diagnostics, forecast and
//! evaluation.

use rayon::prelude::*;
use sarima_core::engine::check_roots;
use sarima_core::forecast::{evaluate, forecast_with};
use sarima_core::select::{auto_select, choose_differencing, AutoSelection, SelectError};
use sarima_core::series::{apply_transform, log_transform, train_test_split};
use sarima_core::stats::{diagnose, sample_acf, sample_pacf};
use sarima_core::{
    Diagnostics, Differenced, Evaluation, Forecast, RootReport, Series,
};

use crate::config::{ConstantMode, PipelineConfig};
use crate::error::CliError;
use crate::ingest::{ingest, Category, Dataset};

/// How far a subcommand runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Fit,
    Diagnose,
    Forecast,
    Run,
}

/// Lags shown in the ACF/PACF tables.
pub const ACF_LAGS: usize = 36;

#[derive(Debug, Clone)]
pub struct CategoryResult {
    pub category: Category,
    pub train: Series,
    pub test: Series,
    pub auto: AutoSelection<f64>,
    /// Training series after log and differencing.
    pub transformed: Differenced,
    pub include_mean: bool,
    pub acf: Vec<f64>,
    pub pacf: Vec<f64>,
    pub roots: RootReport<f64>,
    pub diagnostics: Option<Diagnostics>,
    pub forecast: Option<Forecast>,
    pub evaluation: Option<Evaluation>,
}

#[derive(Debug)]
pub struct PipelineRun {
    pub config: PipelineConfig,
    pub stage: Stage,
    pub dataset: Dataset,
    /// One entry per category in dataset order.
    pub results: Vec<(Category, Result<CategoryResult, CliError>)>,
}

impl PipelineRun {
    /// Exit code of the first failed category, or 0.
    pub fn exit_code(&self) -> i32 {
        self.results
            .iter()
            .find_map(|(_, r)| r.as_ref().err().map(CliError::exit_code))
            .unwrap_or(crate::error::exit::OK)
    }
}

fn select_error(category: &Category, e: SelectError) -> CliError {
    let category = category.name().to_string();
    match e {
        SelectError::NoAdmissibleCandidate => CliError::NoAdmissible {
            category,
            message: e.to_string(),
        },
        SelectError::SeriesTooShort { .. } | SelectError::Series(_) => {
            CliError::Data(format!("{category}: {e}"))
        }
        _ => CliError::Estimation {
            category,
            message: e.to_string(),
        },
    }
}

fn estimation(category: &Category, e: impl std::fmt::Display) -> CliError {
    CliError::Estimation {
        category: category.name().to_string(),
        message: e.to_string(),
    }
}

pub fn run_category(
    category: &Category,
    series: &Series,
    config: &PipelineConfig,
    stage: Stage,
) -> Result<CategoryResult, CliError> {
    let data_err = |e: &dyn std::fmt::Display| CliError::Data(format!("{category}: {e}"));
    let (train, test) = train_test_split(series, config.holdout).map_err(|e| data_err(&e))?;
    if config.log {
        if let Some(i) = train.values().iter().position(|&v| v <= 0.0) {
            return Err(CliError::Data(format!(
                "{category}: count at {} is zero, which the log transform cannot take (use --no-log)",
                train.month_at(i)
            )));
        }
    }
    let bounds = config.bounds();
    let include_mean = match config.constant {
        ConstantMode::On => true,
        ConstantMode::Off => false,
        ConstantMode::Auto => {
            let inspected = if config.log {
                log_transform(&train).map_err(|e| data_err(&e))?
            } else {
                train.clone()
            };
            let c = choose_differencing(&inspected, &bounds).map_err(|e| select_error(category, e))?;
            c.d + c.seasonal_d == 0
        }
    };
    let auto = auto_select(
        &train,
        &bounds,
        config.log,
        &config.fit_options(include_mean),
        config.rule(),
    )
    .map_err(|e| select_error(category, e))?;
    let model = &auto.selection.model;
    let transformed = apply_transform(&train, auto.transform).map_err(|e| data_err(&e))?;
    let core = transformed.core.values();
    let max_lag = ACF_LAGS.min(core.len().saturating_sub(1));
    let acf = sample_acf(core, max_lag)
        .map(|a| a.rho)
        .map_err(|e| estimation(category, e))?;
    let pacf = sample_pacf(core, max_lag).map_err(|e| estimation(category, e))?;
    let roots = check_roots(&model.order, &model.coefficients).map_err(|e| estimation(category, e))?;

    let mut result = CategoryResult {
        category: category.clone(),
        train,
        test,
        transformed,
        include_mean,
        acf,
        pacf,
        roots,
        diagnostics: None,
        forecast: None,
        evaluation: None,
        auto,
    };
    if stage >= Stage::Diagnose {
        let m = &result.auto.selection.model;
        result.diagnostics = Some(
            diagnose(m.residuals.values(), m.order.n_coefficients(), None)
                .map_err(|e| estimation(category, e))?,
        );
    }
    if stage >= Stage::Forecast {
        let fc = forecast_with(
            &result.auto.selection.model,
            result.auto.transform,
            &result.transformed,
            config.holdout,
            config.level,
            config.mean_corrected,
        )
        .map_err(|e| estimation(category, e))?;
        result.evaluation = Some(evaluate(&fc, &result.test).map_err(|e| data_err(&e))?);
        result.forecast = Some(fc);
    }
    Ok(result)
}

/// Ingests the configured input and runs every category. Ingestion errors
/// abort; per-category errors are collected.
pub fn run_pipeline(config: &PipelineConfig, stage: Stage) -> Result<PipelineRun, CliError> {
    let dataset = ingest(config.input_path()?, &config.ingest_options())?;
    Ok(run_dataset(config, dataset, stage))
}

pub fn run_dataset(config: &PipelineConfig, dataset: Dataset, stage: Stage) -> PipelineRun {
    let entries: Vec<(&Category, &Series)> = dataset.series.iter().collect();
    let results = entries
        .into_par_iter()
        .map(|(c, s)| (c.clone(), run_category(c, s, config, stage)))
        .collect();
    PipelineRun {
        config: config.clone(),
        stage,
        dataset,
        results,
    }
}

