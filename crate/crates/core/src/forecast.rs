//! Multi-step forecasts, prediction intervals and holdout evaluation.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{
    expand_polynomials, fit_mle, integrate_polynomial, kalman_filter, EngineError, FitOptions,
    FittedModel, ModelOrder, StateSpaceForm,
};
use crate::scalar::Scalar;
use crate::select::{auto_select, SearchBounds, SelectError, SelectionRule};
use crate::series::{
    apply_transform, integrate_future, train_test_split, DifferencedSeries, MonthStamp,
    SeriesError, TimeSeries, TransformSpec,
};
use crate::stats::normal_quantile;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error("interval level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("forecast horizon must be positive")]
    HorizonZero,
    #[error("actuals start at {actual}, forecasts at {expected}")]
    MisalignedCalendar { expected: MonthStamp, actual: MonthStamp },
    #[error("{available} actual values cover fewer than the {horizon} forecast steps")]
    ShortActuals { available: usize, horizon: usize },
    #[error("actual value at step {0} is not positive")]
    NonPositiveActual(usize),
    #[error("series of length {len} leaves no fold for horizon {horizon}")]
    SeriesTooShort { len: usize, horizon: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Select(#[from] SelectError),
}

/// How transformed-scale forecasts are mapped back to counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BackTransform {
    /// No log transform: values are already on the original scale.
    Identity,
    /// `exp(m)`, the median of the lognormal forecast distribution.
    Median,
    /// `exp(m + s²/2)`, the lognormal mean.
    MeanCorrected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastResult<T> {
    pub start: MonthStamp,
    pub horizon: usize,
    pub level: T,
    pub point: Vec<T>,
    /// Prediction-interval bounds for future observations.
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    /// Point path and standard errors on the transformed (log if enabled) scale.
    pub log_scale_point: Vec<T>,
    pub log_scale_se: Vec<T>,
    pub back_transform: BackTransform,
}

impl<T: Scalar> ForecastResult<T> {
    pub fn month(&self, step: usize) -> MonthStamp {
        self.start.advance(step as i64)
    }
}

fn check_level<T: Scalar>(level: T) -> Result<(), ForecastError> {
    if level > T::zero() && level < T::one() {
        Ok(())
    } else {
        Err(ForecastError::InvalidLevel(level.as_f64()))
    }
}

/// Forecasts `h` steps past the end of the series behind `diffed`.
///
/// The mean path comes from the Kalman prediction on the differenced scale,
/// integrated with the stored initial values. Standard errors use the
/// ψ-weights of the AR polynomial multiplied by the differencing operators,
/// `Var_h = σ² Σ_{j<h} ψ_j²`. Bounds are `m ± z·se` on the transformed
/// scale, exponentiated afterwards when a log was taken.
pub fn forecast<T: Scalar>(
    model: &FittedModel<T>,
    transform: TransformSpec,
    diffed: &DifferencedSeries<T>,
    h: usize,
    level: T,
) -> Result<ForecastResult<T>, ForecastError> {
    forecast_with(model, transform, diffed, h, level, false)
}

/// As [`forecast`]; `mean_corrected` selects the lognormal-mean point.
pub fn forecast_with<T: Scalar>(
    model: &FittedModel<T>,
    transform: TransformSpec,
    diffed: &DifferencedSeries<T>,
    h: usize,
    level: T,
    mean_corrected: bool,
) -> Result<ForecastResult<T>, ForecastError> {
    if h == 0 {
        return Err(ForecastError::HorizonZero);
    }
    check_level(level)?;
    let order = &model.order;
    let consistent = transform == diffed.spec
        && transform.d == order.d
        && transform.seasonal_d == order.seasonal_d
        && (order.seasonal_d == 0 || transform.period == order.period);
    if !consistent {
        return Err(EngineError::ShapeMismatch(format!(
            "transform (log={}, d={}, D={}, s={}) does not match model {order} or its data",
            transform.apply_log, transform.d, transform.seasonal_d, transform.period
        ))
        .into());
    }

    let coeffs = &model.coefficients;
    let (ar, ma) = expand_polynomials(order, coeffs)?;
    let ss = StateSpaceForm::from_polynomials(&ar, &ma);
    let mu = coeffs.mean.unwrap_or_else(T::zero);
    let centered: Vec<T> = diffed.core.values().iter().map(|&v| v - mu).collect();
    let out = kalman_filter(&centered, &ss, false)?;

    let transition = ss.transition();
    let r = ss.dim();
    let mut state = out.next_state;
    let mut path = Vec::with_capacity(h);
    for step in 0..h {
        if step > 0 {
            let mut next = vec![T::zero(); r];
            for (i, slot) in next.iter_mut().enumerate() {
                *slot = (0..r).map(|j| transition[i * r + j] * state[j]).sum();
            }
            state = next;
        }
        path.push(state[0] + mu);
    }

    let plain = DifferencedSeries {
        spec: TransformSpec {
            apply_log: false,
            ..diffed.spec
        },
        ..diffed.clone()
    };
    let mean_path = integrate_future(&plain, &path)?;

    let full_ar = integrate_polynomial(&ar, order.d, order.seasonal_d, order.period);
    let ar_coef: Vec<T> = full_ar[1..].iter().map(|&c| -c).collect();
    let psi = crate::engine::psi_weights(&ar_coef, &ma[1..], h);
    let mut acc = T::zero();
    let se: Vec<T> = psi
        .iter()
        .map(|&p| {
            acc += p * p;
            (model.sigma2 * acc).sqrt()
        })
        .collect();

    let z = normal_quantile((T::one() + level) * T::of(0.5))
        .map_err(|_| ForecastError::InvalidLevel(level.as_f64()))?;
    let half = T::of(0.5);
    let back_transform = match (transform.apply_log, mean_corrected) {
        (false, _) => BackTransform::Identity,
        (true, false) => BackTransform::Median,
        (true, true) => BackTransform::MeanCorrected,
    };
    let map = |v: T| if transform.apply_log { v.exp() } else { v };
    let mut point = Vec::with_capacity(h);
    let mut lower = Vec::with_capacity(h);
    let mut upper = Vec::with_capacity(h);
    for (&m, &s) in mean_path.iter().zip(&se) {
        point.push(match back_transform {
            BackTransform::MeanCorrected => (m + half * s * s).exp(),
            _ => map(m),
        });
        lower.push(map(m - z * s));
        upper.push(map(m + z * s));
    }
    Ok(ForecastResult {
        start: diffed.core.end().advance(1),
        horizon: h,
        level,
        point,
        lower,
        upper,
        log_scale_point: mean_path,
        log_scale_se: se,
        back_transform,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationStep<T> {
    pub month: MonthStamp,
    pub actual: T,
    pub forecast: T,
    pub lower: T,
    pub upper: T,
    /// `|forecast - actual| / actual`.
    pub relative_error: T,
    pub inside_interval: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport<T> {
    pub steps: Vec<EvaluationStep<T>>,
    pub max_relative_error: T,
    /// Mean of the relative errors (not multiplied by 100).
    pub mean_absolute_percentage_error: T,
    pub coverage: T,
}

/// Compares forecasts with actuals aligned at `result.start`.
pub fn evaluate<T: Scalar>(
    result: &ForecastResult<T>,
    actual: &TimeSeries<T>,
) -> Result<EvaluationReport<T>, ForecastError> {
    if actual.start() != result.start {
        return Err(ForecastError::MisalignedCalendar {
            expected: result.start,
            actual: actual.start(),
        });
    }
    if actual.len() < result.horizon {
        return Err(ForecastError::ShortActuals {
            available: actual.len(),
            horizon: result.horizon,
        });
    }
    let mut steps = Vec::with_capacity(result.horizon);
    for i in 0..result.horizon {
        let a = actual.values()[i];
        if !(a > T::zero()) {
            return Err(ForecastError::NonPositiveActual(i));
        }
        let f = result.point[i];
        steps.push(EvaluationStep {
            month: result.month(i),
            actual: a,
            forecast: f,
            lower: result.lower[i],
            upper: result.upper[i],
            relative_error: (f - a).abs() / a,
            inside_interval: result.lower[i] <= a && a <= result.upper[i],
        });
    }
    let n = T::of_usize(steps.len());
    let max_relative_error = steps
        .iter()
        .map(|s| s.relative_error)
        .fold(T::zero(), |a, b| a.max(b));
    let mape = steps.iter().map(|s| s.relative_error).sum::<T>() / n;
    let coverage = T::of_usize(steps.iter().filter(|s| s.inside_interval).count()) / n;
    Ok(EvaluationReport {
        steps,
        max_relative_error,
        mean_absolute_percentage_error: mape,
        coverage,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingConfig<T> {
    pub horizon: usize,
    pub folds: usize,
    pub level: T,
    pub apply_log: bool,
    pub bounds: SearchBounds,
    pub fit: FitOptions<T>,
    pub rule: SelectionRule<T>,
    /// Skip identification and refit this order at every origin.
    pub fixed_order: Option<ModelOrder>,
}

impl<T: Scalar> Default for RollingConfig<T> {
    fn default() -> Self {
        Self {
            horizon: 6,
            folds: 3,
            level: T::of(0.9),
            apply_log: true,
            bounds: SearchBounds::default(),
            fit: FitOptions::default(),
            rule: SelectionRule::default(),
            fixed_order: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport<T> {
    pub train_len: usize,
    pub order: ModelOrder,
    pub report: EvaluationReport<T>,
}

/// Training lengths `n - h - (folds - 1) ..= n - h`, one per fold.
pub fn fold_lengths(n: usize, horizon: usize, folds: usize) -> Result<Vec<usize>, ForecastError> {
    if horizon == 0 {
        return Err(ForecastError::HorizonZero);
    }
    if folds == 0 || n < horizon + folds + 1 {
        return Err(ForecastError::SeriesTooShort { len: n, horizon });
    }
    let last = n - horizon;
    Ok((last + 1 - folds..=last).collect())
}

/// Repeats split, identification, fit, forecast and evaluation with the
/// origin advanced one month per fold.
pub fn rolling_origin<T: Scalar>(
    series: &TimeSeries<T>,
    config: &RollingConfig<T>,
) -> Result<Vec<FoldReport<T>>, ForecastError> {
    check_level(config.level)?;
    let lengths = fold_lengths(series.len(), config.horizon, config.folds)?;
    lengths
        .into_par_iter()
        .map(|len| {
            let (train, rest) = train_test_split(series, series.len() - len)?;
            let actual = TimeSeries::new(rest.start(), rest.values()[..config.horizon].to_vec())?;
            let (model, transform) = match config.fixed_order {
                Some(order) => {
                    let spec = TransformSpec::new(config.apply_log, order.d, order.seasonal_d, order.period);
                    let diffed = apply_transform(&train, spec)?;
                    (fit_mle(&diffed, &order, &config.fit)?, spec)
                }
                None => {
                    let auto = auto_select(&train, &config.bounds, config.apply_log, &config.fit, config.rule)?;
                    (auto.selection.model, auto.transform)
                }
            };
            let diffed = apply_transform(&train, transform)?;
            let result = forecast(&model, transform, &diffed, config.horizon, config.level)?;
            Ok(FoldReport {
                train_len: len,
                order: model.order,
                report: evaluate(&result, &actual)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{fit_series, simulate, CoefficientSet};
    use proptest::prelude::*;

    fn ts(values: Vec<f64>) -> TimeSeries<f64> {
        TimeSeries::new(MonthStamp::new(2010, 1).unwrap(), values).unwrap()
    }

    fn fixed_model(order: ModelOrder, x: &[f64], sigma2: f64, spec: TransformSpec, data: &TimeSeries<f64>) -> (FittedModel<f64>, DifferencedSeries<f64>) {
        let diffed = apply_transform(data, spec).unwrap();
        let (_, mut model) = fit_series(data, &order, spec.apply_log, &FitOptions::default()).unwrap();
        model.coefficients = CoefficientSet::from_vector(&order, x, sigma2).unwrap();
        model.sigma2 = sigma2;
        (model, diffed)
    }

    fn positive_series(n: usize, seed: u64) -> TimeSeries<f64> {
        let order = ModelOrder::new((1, 0, 0), (1, 0, 0), 12);
        let c = CoefficientSet::<f64>::from_vector(&order, &[0.5, 0.3], 0.01).unwrap();
        let x = simulate(&order, &c, n, seed).unwrap();
        ts(x.values().iter().map(|v| (5.0 + v).exp()).collect())
    }

    #[test]
    fn random_walk_is_flat() {
        let data = ts(vec![3.0, 5.0, 4.0, 6.0, 8.0, 7.0, 9.0, 8.5, 10.0, 12.0, 11.0, 13.0, 12.5]);
        let order = ModelOrder::arima(0, 1, 0);
        let spec = TransformSpec::new(false, 1, 0, 12);
        let (model, diffed) = fixed_model(order, &[], 1.0, spec, &data);
        let f = forecast(&model, spec, &diffed, 5, 0.9).unwrap();
        assert!(f.point.iter().all(|&p| p == 12.5));
        assert_eq!(f.start, data.end().advance(1));
        // se grows like sqrt(h) for a random walk
        for (i, s) in f.log_scale_se.iter().enumerate() {
            assert!((s - ((i + 1) as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn seasonal_naive() {
        let values: Vec<f64> = (0..36).map(|t| 10.0 + (t % 12) as f64 + 0.1 * t as f64).collect();
        let data = ts(values.clone());
        let order = ModelOrder::new((0, 0, 0), (0, 1, 0), 12);
        let spec = TransformSpec::new(false, 0, 1, 12);
        let (model, diffed) = fixed_model(order, &[], 1.0, spec, &data);
        let f = forecast(&model, spec, &diffed, 12, 0.9).unwrap();
        for (i, &p) in f.point.iter().enumerate() {
            assert!((p - values[24 + i]).abs() < 1e-12);
        }
    }

    #[test]
    fn ar1_geometric_decay() {
        let mut values: Vec<f64> = (0..30).map(|t| ((t * 7) % 5) as f64 * 0.3 - 0.6).collect();
        values.push(1.0);
        let data = ts(values);
        let order = ModelOrder::arima(1, 0, 0);
        let spec = TransformSpec::new(false, 0, 0, 12);
        let (model, diffed) = fixed_model(order, &[0.5], 1.0, spec, &data);
        let f = forecast(&model, spec, &diffed, 3, 0.9).unwrap();
        for (p, want) in f.point.iter().zip([0.5, 0.25, 0.125]) {
            assert!((p - want).abs() < 1e-12);
        }
        // se² = 1, 1 + φ², 1 + φ² + φ⁴
        assert!((f.log_scale_se[2] - (1.0f64 + 0.25 + 0.0625).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn white_noise_with_constant_forecasts_training_mean() {
        let data = ts((0..60).map(|t| 4.0 + ((t * 13) % 7) as f64 * 0.1).collect());
        let opts = FitOptions {
            include_mean: true,
            ..FitOptions::default()
        };
        let order = ModelOrder::arima(0, 0, 0);
        let (diffed, model) = fit_series(&data, &order, true, &opts).unwrap();
        let f = forecast(&model, diffed.spec, &diffed, 4, 0.9).unwrap();
        let logs: Vec<f64> = data.values().iter().map(|v| v.ln()).collect();
        let mean = logs.iter().sum::<f64>() / logs.len() as f64;
        for m in &f.log_scale_point {
            assert!((m - mean).abs() < 1e-10);
        }
        let (_, no_const) = fit_series(&data, &order, true, &FitOptions::default()).unwrap();
        let f0 = forecast(&no_const, diffed.spec, &diffed, 4, 0.9).unwrap();
        assert!(f0.log_scale_point.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn errors() {
        let data = positive_series(60, 1);
        let order = ModelOrder::arima(1, 0, 0);
        let (diffed, model) = fit_series(&data, &order, true, &FitOptions::default()).unwrap();
        assert!(matches!(forecast(&model, diffed.spec, &diffed, 0, 0.9), Err(ForecastError::HorizonZero)));
        assert!(matches!(forecast(&model, diffed.spec, &diffed, 3, 1.0), Err(ForecastError::InvalidLevel(_))));
        let wrong = TransformSpec::new(true, 1, 0, 12);
        assert!(forecast(&model, wrong, &diffed, 3, 0.9).is_err());
    }

    #[test]
    fn evaluation_definitions() {
        let result = ForecastResult::<f64> {
            start: MonthStamp::new(2019, 7).unwrap(),
            horizon: 2,
            level: 0.9,
            point: vec![110.0, 50.0],
            lower: vec![90.0, 40.0],
            upper: vec![130.0, 60.0],
            log_scale_point: vec![0.0; 2],
            log_scale_se: vec![1.0; 2],
            back_transform: BackTransform::Median,
        };
        let actual = TimeSeries::new(MonthStamp::new(2019, 7).unwrap(), vec![100.0, 70.0]).unwrap();
        let rep = evaluate(&result, &actual).unwrap();
        assert!((rep.steps[0].relative_error - 0.10).abs() < 1e-15);
        assert!(rep.steps[0].inside_interval && !rep.steps[1].inside_interval);
        assert_eq!(rep.coverage, 0.5);
        assert!((rep.max_relative_error - 20.0 / 70.0).abs() < 1e-15);

        let perfect = TimeSeries::new(result.start, vec![110.0, 50.0]).unwrap();
        let rep = evaluate(&result, &perfect).unwrap();
        assert_eq!((rep.max_relative_error, rep.coverage), (0.0, 1.0));

        let shifted = TimeSeries::new(MonthStamp::new(2019, 8).unwrap(), vec![1.0, 1.0]).unwrap();
        assert!(matches!(evaluate(&result, &shifted), Err(ForecastError::MisalignedCalendar { .. })));
    }

    #[test]
    fn fold_arithmetic() {
        assert_eq!(fold_lengths(180, 6, 3).unwrap(), vec![172, 173, 174]);
        assert!(fold_lengths(8, 6, 3).is_err());
    }

    #[test]
    fn rolling_origin_is_deterministic() {
        let data = positive_series(120, 3);
        let config = RollingConfig {
            fixed_order: Some(ModelOrder::new((1, 0, 0), (1, 0, 0), 12)),
            ..RollingConfig::default()
        };
        let a = rolling_origin(&data, &config).unwrap();
        let b = rolling_origin(&data, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().map(|f| f.train_len).collect::<Vec<_>>(), vec![112, 113, 114]);
        for fold in &a {
            assert_eq!(fold.report.steps.len(), 6);
            assert_eq!(fold.report.steps[0].month, data.month_at(fold.train_len));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn interval_invariants(seed in 0u64..1000, level in 0.5f64..0.99, h in 1usize..10) {
            let level: f64 = level;
            let data = positive_series(80, seed);
            let order = ModelOrder::new((1, 0, 1), (0, 1, 1), 12);
            let (diffed, model) = fit_series(&data, &order, true, &FitOptions::default()).unwrap();
            let f = forecast(&model, diffed.spec, &diffed, h, level).unwrap();
            let z = normal_quantile((1.0 + level) / 2.0).unwrap();
            for i in 0..h {
                let (m, s) = (f.log_scale_point[i], f.log_scale_se[i]);
                prop_assert!(s > 0.0);
                prop_assert!(f.lower[i] < f.point[i] && f.point[i] < f.upper[i]);
                prop_assert_eq!(f.lower[i], (m - z * s).exp());
                let up = f.upper[i].ln() - f.point[i].ln();
                let down = f.point[i].ln() - f.lower[i].ln();
                prop_assert!((up - down).abs() < 1e-10);
            }
            let short = forecast(&model, diffed.spec, &diffed, 1.max(h / 2), level).unwrap();
            prop_assert_eq!(&short.point[..], &f.point[..short.horizon]);
            prop_assert_eq!(&short.lower[..], &f.lower[..short.horizon]);
        }
    }
}
