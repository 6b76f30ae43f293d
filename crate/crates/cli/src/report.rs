//! Tables, figures and the machine-readable run summary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sarima_core::engine::SIGN_CONVENTION;
use sarima_core::select::DifferencingCandidate;
use sarima_core::stats::TestOutcome;
use sarima_core::ModelOrder;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::ingest::Dataset;
use crate::pipeline::{CategoryResult, PipelineRun, Stage};
use crate::svg;

pub const INTERVAL_NOTE: &str =
    "interval bounds are prediction intervals for future observations, built on the log scale";
const DIAGNOSTIC_LEVEL: f64 = 0.10;

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        String::new()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::io(path, std::io::Error::other(e));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(path, std::io::Error::other(e.to_string())))?;
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Serialize)]
pub struct IngestSummary {
    pub records_read: usize,
    pub records_used: usize,
    pub annual_totals: BTreeMap<String, u64>,
    pub categories: Vec<String>,
}

impl IngestSummary {
    pub fn new(d: &Dataset) -> Self {
        Self {
            records_read: d.records_read,
            records_used: d.records_used,
            annual_totals: d.annual_totals.iter().map(|(y, t)| (y.to_string(), *t)).collect(),
            categories: d.series.keys().map(|c| c.name().to_string()).collect(),
        }
    }
}

/// Wide table: one row per month, one column per category.
pub fn write_series(dir: &Path, d: &Dataset) -> Result<PathBuf, CliError> {
    let path = dir.join("series.csv");
    let names: Vec<&str> = d.series.keys().map(|c| c.name()).collect();
    let mut header = vec!["month"];
    header.extend(&names);
    let first = d.series.values().next();
    let rows = first
        .map(|s| {
            (0..s.len())
                .map(|i| {
                    let mut row = vec![s.month_at(i).to_string()];
                    row.extend(d.series.values().map(|v| format!("{}", v.values()[i])));
                    row
                })
                .collect()
        })
        .unwrap_or_default();
    write_csv(&path, &header, rows)?;
    Ok(path)
}

pub fn write_ingest(dir: &Path, d: &Dataset) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_series(dir, d)?;
    let json = serde_json::to_string_pretty(&IngestSummary::new(d)).expect("serializable");
    write_file(&dir.join("ingest.json"), &(json + "\n"))
}

#[derive(Debug, Serialize)]
struct Span {
    start: String,
    end: String,
    n: usize,
}

#[derive(Debug, Serialize)]
struct TransformCard {
    log: bool,
    d: usize,
    seasonal_d: usize,
    period: usize,
    mean_term: bool,
}

#[derive(Debug, Serialize)]
struct Term {
    name: String,
    estimate: f64,
    std_error: Option<f64>,
    t_stat: Option<f64>,
    p_value: Option<f64>,
}

#[derive(Debug, Serialize)]
struct RootsCard {
    ar_min_modulus: Option<f64>,
    ma_min_modulus: Option<f64>,
    stationary: bool,
    invertible: bool,
}

#[derive(Debug, Serialize)]
struct ModelCard {
    order: String,
    sign_convention: &'static str,
    coefficients: Vec<Term>,
    sigma2: f64,
    loglik: f64,
    aic: f64,
    bic: f64,
    aicc: f64,
    n_obs: usize,
    n_params: usize,
    converged: bool,
    iterations: usize,
    hessian_ok: bool,
    roots: RootsCard,
}

#[derive(Debug, Serialize)]
struct SelectionCard {
    min_aic_order: String,
    parsimony_band: Vec<String>,
    trail: Vec<String>,
}

#[derive(Debug, Serialize)]
struct RankRow {
    rank: usize,
    order: String,
    aic: Option<f64>,
    loglik: Option<f64>,
    n_params: Option<usize>,
    converged: bool,
    roots_ok: bool,
    significant: bool,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct TestCard {
    test: &'static str,
    statistic: f64,
    df_or_n: usize,
    p_value: f64,
    rejected_at_10pct: bool,
}

#[derive(Debug, Serialize)]
struct DiagnosticsCard {
    lags: usize,
    fitted_params: usize,
    tests: Vec<TestCard>,
}

#[derive(Debug, Serialize)]
struct ForecastRow {
    month: String,
    actual: f64,
    forecast: f64,
    lower: f64,
    upper: f64,
    relative_error: f64,
    inside_interval: bool,
    log_scale_point: f64,
    log_scale_se: f64,
}

#[derive(Debug, Serialize)]
struct EvaluationCard {
    level: f64,
    back_transform: String,
    max_relative_error: f64,
    mean_absolute_percentage_error: f64,
    coverage: f64,
}

#[derive(Debug, Serialize)]
struct CategorySummary {
    category: String,
    training: Span,
    holdout: Span,
    transform: TransformCard,
    differencing_trail: Vec<DifferencingCandidate<f64>>,
    acf: Vec<f64>,
    pacf: Vec<f64>,
    model: ModelCard,
    selection: SelectionCard,
    ranking: Vec<RankRow>,
    diagnostics: Option<DiagnosticsCard>,
    forecast: Option<Vec<ForecastRow>>,
    evaluation: Option<EvaluationCard>,
}

#[derive(Debug, Serialize)]
struct ErrorEntry {
    category: String,
    exit_code: i32,
    message: String,
}

#[derive(Debug, Serialize)]
struct Conventions {
    sign: &'static str,
    intervals: &'static str,
    relative_error: &'static str,
    coefficient_p_values: &'static str,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    tool: &'static str,
    version: &'static str,
    stage: &'static str,
    seed: u64,
    config: &'a PipelineConfig,
    conventions: Conventions,
    ingest: IngestSummary,
    categories: Vec<CategorySummary>,
    errors: Vec<ErrorEntry>,
}

fn span(s: &sarima_core::Series) -> Span {
    Span {
        start: s.start().to_string(),
        end: s.end().to_string(),
        n: s.len(),
    }
}

fn test_card(o: &TestOutcome<f64>) -> TestCard {
    TestCard {
        test: o.test.label(),
        statistic: o.statistic,
        df_or_n: o.df_or_n,
        p_value: o.p_value,
        rejected_at_10pct: o.rejects_at(DIAGNOSTIC_LEVEL),
    }
}

fn order_str(o: &ModelOrder) -> String {
    o.to_string()
}

fn category_summary(r: &CategoryResult) -> CategorySummary {
    let m = &r.auto.selection.model;
    let t = r.auto.transform;
    CategorySummary {
        category: r.category.name().to_string(),
        training: span(&r.train),
        holdout: span(&r.test),
        transform: TransformCard {
            log: t.apply_log,
            d: t.d,
            seasonal_d: t.seasonal_d,
            period: t.period,
            mean_term: r.include_mean,
        },
        differencing_trail: r.auto.differencing.trail.clone(),
        acf: r.acf.clone(),
        pacf: r.pacf.clone(),
        model: ModelCard {
            order: order_str(&m.order),
            sign_convention: SIGN_CONVENTION,
            coefficients: m
                .terms
                .iter()
                .map(|c| Term {
                    name: c.name.clone(),
                    estimate: c.value,
                    std_error: c.std_error,
                    t_stat: c.t_stat,
                    p_value: c.p_value,
                })
                .collect(),
            sigma2: m.sigma2,
            loglik: m.loglik,
            aic: m.aic,
            bic: m.bic,
            aicc: m.aicc,
            n_obs: m.n_obs,
            n_params: m.n_params,
            converged: m.converged,
            iterations: m.iterations,
            hessian_ok: m.hessian_ok,
            roots: RootsCard {
                ar_min_modulus: r.roots.ar_min_modulus,
                ma_min_modulus: r.roots.ma_min_modulus,
                stationary: r.roots.ar_ok,
                invertible: r.roots.ma_ok,
            },
        },
        selection: SelectionCard {
            min_aic_order: order_str(&r.auto.selection.min_aic_order),
            parsimony_band: r.auto.selection.band.iter().map(order_str).collect(),
            trail: r.auto.selection.trail.clone(),
        },
        ranking: r
            .auto
            .ranking
            .candidates
            .iter()
            .enumerate()
            .map(|(i, c)| RankRow {
                rank: i + 1,
                order: order_str(&c.order),
                aic: c.model.as_ref().map(|m| m.aic),
                loglik: c.model.as_ref().map(|m| m.loglik),
                n_params: c.model.as_ref().map(|m| m.n_params),
                converged: c.converged,
                roots_ok: c.roots_ok,
                significant: c.significant,
                error: c.error.clone(),
            })
            .collect(),
        diagnostics: r.diagnostics.as_ref().map(|d| DiagnosticsCard {
            lags: d.lags,
            fitted_params: d.fitted_params,
            tests: d.outcomes().iter().map(|o| test_card(o)).collect(),
        }),
        forecast: r.forecast.as_ref().zip(r.evaluation.as_ref()).map(|(f, e)| {
            e.steps
                .iter()
                .enumerate()
                .map(|(i, s)| ForecastRow {
                    month: s.month.to_string(),
                    actual: s.actual,
                    forecast: s.forecast,
                    lower: s.lower,
                    upper: s.upper,
                    relative_error: s.relative_error,
                    inside_interval: s.inside_interval,
                    log_scale_point: f.log_scale_point[i],
                    log_scale_se: f.log_scale_se[i],
                })
                .collect()
        }),
        evaluation: r.forecast.as_ref().zip(r.evaluation.as_ref()).map(|(f, e)| EvaluationCard {
            level: f.level,
            back_transform: format!("{:?}", f.back_transform),
            max_relative_error: e.max_relative_error,
            mean_absolute_percentage_error: e.mean_absolute_percentage_error,
            coverage: e.coverage,
        }),
    }
}

fn stage_name(s: Stage) -> &'static str {
    match s {
        Stage::Fit => "fit",
        Stage::Diagnose => "diagnose",
        Stage::Forecast => "forecast",
        Stage::Run => "run",
    }
}

/// Deterministic JSON summary of a run.
pub fn summary_json(run: &PipelineRun) -> String {
    let ok = || run.results.iter().filter_map(|(_, r)| r.as_ref().ok());
    let summary = Summary {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        stage: stage_name(run.stage),
        seed: run.config.seed,
        config: &run.config,
        conventions: Conventions {
            sign: SIGN_CONVENTION,
            intervals: INTERVAL_NOTE,
            relative_error: "|forecast - actual| / actual",
            coefficient_p_values: "two-sided, normal reference distribution",
        },
        ingest: IngestSummary::new(&run.dataset),
        categories: ok().map(category_summary).collect(),
        errors: run
            .results
            .iter()
            .filter_map(|(c, r)| {
                r.as_ref().err().map(|e| ErrorEntry {
                    category: c.name().to_string(),
                    exit_code: e.exit_code(),
                    message: e.to_string(),
                })
            })
            .collect(),
    };
    serde_json::to_string_pretty(&summary).expect("serializable") + "\n"
}

/// Writes every artifact for the stage reached. Returns the files written.
pub fn write_outputs(run: &PipelineRun, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = vec![write_series(dir, &run.dataset)?];
    let ok: Vec<&CategoryResult> = run.results.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();

    let path = dir.join("models.csv");
    write_csv(
        &path,
        &[
            "category", "order", "log", "d", "D", "mean_term", "loglik", "aic", "bic", "aicc", "sigma2",
            "n_obs", "converged", "iterations", "ar_min_root_modulus", "ma_min_root_modulus",
        ],
        ok.iter()
            .map(|r| {
                let m = &r.auto.selection.model;
                let t = r.auto.transform;
                vec![
                    r.category.name().to_string(),
                    order_str(&m.order),
                    t.apply_log.to_string(),
                    t.d.to_string(),
                    t.seasonal_d.to_string(),
                    r.include_mean.to_string(),
                    num(m.loglik),
                    num(m.aic),
                    num(m.bic),
                    num(m.aicc),
                    num(m.sigma2),
                    m.n_obs.to_string(),
                    m.converged.to_string(),
                    m.iterations.to_string(),
                    opt(r.roots.ar_min_modulus),
                    opt(r.roots.ma_min_modulus),
                ]
            })
            .collect(),
    )?;
    written.push(path);

    let path = dir.join("coefficients.csv");
    write_csv(
        &path,
        &["category", "order", "term", "estimate", "std_error", "t_stat", "p_value"],
        ok.iter()
            .flat_map(|r| {
                let m = &r.auto.selection.model;
                m.terms.iter().map(move |c| {
                    vec![
                        r.category.name().to_string(),
                        order_str(&m.order),
                        c.name.clone(),
                        num(c.value),
                        opt(c.std_error),
                        opt(c.t_stat),
                        opt(c.p_value),
                    ]
                })
            })
            .collect(),
    )?;
    written.push(path);

    for r in &ok {
        let slug = r.category.slug();
        let path = dir.join(format!("ranking_{slug}.csv"));
        write_csv(
            &path,
            &["rank", "order", "aic", "loglik", "n_params", "converged", "roots_ok", "significant", "error"],
            r.auto
                .ranking
                .candidates
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    vec![
                        (i + 1).to_string(),
                        order_str(&c.order),
                        opt(c.model.as_ref().map(|m| m.aic)),
                        opt(c.model.as_ref().map(|m| m.loglik)),
                        c.model.as_ref().map(|m| m.n_params.to_string()).unwrap_or_default(),
                        c.converged.to_string(),
                        c.roots_ok.to_string(),
                        c.significant.to_string(),
                        c.error.clone().unwrap_or_default(),
                    ]
                })
                .collect(),
        )?;
        written.push(path);

        let path = dir.join(format!("acf_{slug}.csv"));
        write_csv(
            &path,
            &["lag", "acf", "pacf"],
            (1..r.acf.len())
                .map(|k| vec![k.to_string(), num(r.acf[k]), num(r.pacf[k])])
                .collect(),
        )?;
        written.push(path);
    }

    if run.stage >= Stage::Diagnose {
        let path = dir.join("diagnostics.csv");
        write_csv(
            &path,
            &["category", "order", "test", "statistic", "df_or_n", "p_value", "rejected_at_10pct"],
            ok.iter()
                .flat_map(|r| {
                    let order = order_str(&r.auto.selection.model.order);
                    r.diagnostics.iter().flat_map(move |d| {
                        let order = order.clone();
                        d.outcomes().into_iter().map(move |o| {
                            vec![
                                r.category.name().to_string(),
                                order.clone(),
                                o.test.label().to_string(),
                                num(o.statistic),
                                o.df_or_n.to_string(),
                                num(o.p_value),
                                o.rejects_at(DIAGNOSTIC_LEVEL).to_string(),
                            ]
                        })
                    })
                })
                .collect(),
        )?;
        written.push(path);
    }

    if run.stage >= Stage::Forecast {
        let path = dir.join("forecasts.csv");
        write_csv(
            &path,
            &["category", "month", "actual", "forecast", "lower", "upper", "relative_error", "inside_interval"],
            ok.iter()
                .flat_map(|r| {
                    r.evaluation.iter().flat_map(move |e| {
                        e.steps.iter().map(move |s| {
                            vec![
                                r.category.name().to_string(),
                                s.month.to_string(),
                                num(s.actual),
                                num(s.forecast),
                                num(s.lower),
                                num(s.upper),
                                num(s.relative_error),
                                s.inside_interval.to_string(),
                            ]
                        })
                    })
                })
                .collect(),
        )?;
        written.push(path);
    }

    if run.stage >= Stage::Run {
        let figs = dir.join("figures");
        fs::create_dir_all(&figs).map_err(|e| CliError::io(&figs, e))?;
        let panels: Vec<(String, &sarima_core::Series)> = run
            .dataset
            .series
            .iter()
            .map(|(c, s)| (c.name().to_string(), s))
            .collect();
        let path = figs.join("series.svg");
        write_file(&path, &svg::series_figure(&panels))?;
        written.push(path);
        for r in &ok {
            let slug = r.category.slug();
            let name = r.category.name();
            if let Some(d) = &r.diagnostics {
                let path = figs.join(format!("residuals_{slug}.svg"));
                let res = r.auto.selection.model.residuals.values();
                write_file(&path, &svg::residual_figure(name, res, &d.qq))?;
                written.push(path);
            }
            if let Some(f) = &r.forecast {
                let path = figs.join(format!("forecast_{slug}.svg"));
                write_file(&path, &svg::forecast_figure(name, &r.train, &r.test, f))?;
                written.push(path);
            }
        }
    }

    let path = dir.join("errors.log");
    let log: String = run
        .results
        .iter()
        .filter_map(|(c, r)| r.as_ref().err().map(|e| format!("{c}\t{}\t{e}\n", e.exit_code())))
        .collect();
    write_file(&path, &log)?;
    written.push(path);

    let path = dir.join("summary.json");
    write_file(&path, &summary_json(run))?;
    written.push(path);
    Ok(written)
}
