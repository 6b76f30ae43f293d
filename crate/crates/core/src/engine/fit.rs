//! Maximum-likelihood estimation.

use serde::Serialize;

use crate::scalar::Scalar;
use crate::series::{apply_transform, DifferencedSeries, TimeSeries, TransformSpec};
use crate::stats::normal_sf;

use super::kalman::{kalman_filter, FilterOutput};
use super::optim::{central_hessian, invert_spd, nelder_mead, NelderMeadOptions, OptimResult};
use super::order::{
    coefficient_labels, expand_polynomials, roots_outside_unit_circle, CoefficientSet, ModelOrder,
};
use super::statespace::StateSpaceForm;
use super::EngineError;

const PENALTY: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions<T> {
    /// Estimate a constant mean; only valid when `d = D = 0`.
    pub include_mean: bool,
    /// Required observations beyond the number of coefficients.
    pub min_extra_obs: usize,
    pub optimizer: NelderMeadOptions<T>,
    /// Iteration budget for each start point before the best one is polished.
    pub screen_iterations_per_dim: usize,
    /// Relative step for the finite-difference Hessian.
    pub hessian_step: T,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            include_mean: false,
            min_extra_obs: 10,
            optimizer: NelderMeadOptions::default(),
            screen_iterations_per_dim: 20,
            hessian_step: T::of(1e-4),
        }
    }
}

/// One row of the coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientEstimate<T> {
    pub name: String,
    pub value: T,
    pub std_error: Option<T>,
    pub t_stat: Option<T>,
    /// Two-sided, normal reference: `2 (1 - Φ(|t|))`.
    pub p_value: Option<T>,
}

impl<T: Scalar> CoefficientEstimate<T> {
    fn new(name: String, value: T, std_error: Option<T>) -> Self {
        let std_error = std_error.filter(|s| *s > T::zero() && s.is_finite());
        let t_stat = std_error.map(|s| value / s);
        let p_value = t_stat.map(|t| T::of(2.0) * normal_sf(t.abs()));
        Self {
            name,
            value,
            std_error,
            t_stat,
            p_value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedModel<T> {
    pub order: ModelOrder,
    pub transform: TransformSpec,
    pub coefficients: CoefficientSet<T>,
    /// ARMA coefficients in `ar, ma, sar, sma` order, then the mean if fitted.
    pub terms: Vec<CoefficientEstimate<T>>,
    pub loglik: T,
    pub aic: T,
    pub bic: T,
    pub aicc: T,
    pub sigma2: T,
    /// Observations used by the likelihood (after differencing).
    pub n_obs: usize,
    /// Estimated parameters including the innovation variance.
    pub n_params: usize,
    /// Standardized one-step prediction errors on the differenced scale.
    pub residuals: TimeSeries<T>,
    pub converged: bool,
    pub iterations: usize,
    /// False when the Hessian could not be inverted; standard errors are then absent.
    pub hessian_ok: bool,
}

impl<T: Scalar> FittedModel<T> {
    /// Every term has a p-value below `level`. Models without terms qualify.
    pub fn all_significant(&self, level: T) -> bool {
        self.terms
            .iter()
            .all(|t| t.p_value.is_some_and(|p| p < level))
    }

    /// Largest coefficient p-value; absent standard errors count as 1.
    pub fn max_p_value(&self) -> T {
        self.terms
            .iter()
            .map(|t| t.p_value.unwrap_or_else(T::one))
            .fold(T::zero(), |a, b| a.max(b))
    }
}

struct Objective<'a, T> {
    data: &'a [T],
    order: &'a ModelOrder,
    include_mean: bool,
}

impl<T: Scalar> Objective<'_, T> {
    fn filter(&self, x: &[T]) -> Option<FilterOutput<T>> {
        let c = CoefficientSet::from_vector(self.order, x, T::one()).ok()?;
        let (ar, ma) = expand_polynomials(self.order, &c).ok()?;
        if !roots_outside_unit_circle(&ar) || !roots_outside_unit_circle(&ma) {
            return None;
        }
        let ss = StateSpaceForm::from_polynomials(&ar, &ma);
        kalman_filter(self.data, &ss, self.include_mean).ok()
    }

    /// Negative log-likelihood, or a large penalty growing with `‖x‖`.
    fn penalized(&self, x: &[T]) -> T {
        match self.filter(x) {
            Some(out) if out.loglik.is_finite() => -out.loglik,
            _ => T::of(PENALTY) + x.iter().map(|&v| v * v).sum::<T>(),
        }
    }

    /// Negative log-likelihood, NaN outside the admissible region.
    fn strict(&self, x: &[T]) -> T {
        self.filter(x).map_or_else(T::nan, |out| -out.loglik)
    }
}

/// Documented start points: all +0.1, all −0.1, AR +0.1 / MA −0.1,
/// AR −0.1 / MA +0.1, and alternating signs. Duplicates are dropped.
fn start_points<T: Scalar>(order: &ModelOrder) -> Vec<Vec<T>> {
    let n = order.n_coefficients();
    let is_ar: Vec<bool> = (0..n)
        .map(|i| {
            let ma_start = order.p;
            let sar_start = order.p + order.q;
            let sma_start = sar_start + order.seasonal_p;
            i < ma_start || (i >= sar_start && i < sma_start)
        })
        .collect();
    let step = T::of(0.1);
    let patterns: [&dyn Fn(usize) -> T; 5] = [
        &|_| step,
        &|_| -step,
        &|i| if is_ar[i] { step } else { -step },
        &|i| if is_ar[i] { -step } else { step },
        &|i| if i % 2 == 0 { step } else { -step },
    ];
    let mut starts: Vec<Vec<T>> = Vec::new();
    for pat in patterns {
        let x: Vec<T> = (0..n).map(pat).collect();
        if !starts.contains(&x) {
            starts.push(x);
        }
    }
    starts
}

fn minimise<T: Scalar>(objective: &Objective<'_, T>, order: &ModelOrder, opts: &FitOptions<T>) -> OptimResult<T> {
    let f = |x: &[T]| objective.penalized(x);
    let dim = order.n_coefficients();
    let starts = start_points::<T>(order);
    let mut iterations = 0;
    let best_start = if starts.len() == 1 {
        starts[0].clone()
    } else {
        let screen = NelderMeadOptions {
            max_iter: opts.screen_iterations_per_dim * (dim + 1),
            ..opts.optimizer
        };
        let mut best: Option<OptimResult<T>> = None;
        for x0 in &starts {
            let res = nelder_mead(f, x0, &screen);
            iterations += res.iterations;
            if best.as_ref().map_or(true, |b| res.fx < b.fx) {
                best = Some(res);
            }
        }
        best.expect("at least one start").x
    };
    let mut res = nelder_mead(f, &best_start, &opts.optimizer);
    iterations += res.iterations;
    // a fresh simplex at the solution guards against premature collapse
    if dim > 0 {
        let again = nelder_mead(f, &res.x, &opts.optimizer);
        iterations += again.iterations;
        if again.fx <= res.fx {
            res = OptimResult {
                converged: again.converged,
                ..again
            };
        } else {
            res.converged = res.converged && again.converged;
        }
    }
    res.iterations = iterations;
    res
}

fn standard_errors<T: Scalar>(
    objective: &Objective<'_, T>,
    x: &[T],
    rel_step: T,
) -> Option<Vec<T>> {
    let n = x.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let f = |z: &[T]| objective.strict(z);
    let mut scale = rel_step;
    for _ in 0..3 {
        let h: Vec<T> = x.iter().map(|v| scale * v.abs().max(T::one())).collect();
        if let Some(hess) = central_hessian(f, x, &h) {
            let cov = invert_spd(&hess, n)?;
            return (0..n)
                .map(|i| {
                    let v = cov[i * n + i];
                    (v > T::zero()).then(|| v.sqrt())
                })
                .collect();
        }
        // the stencil left the admissible region; shrink towards the optimum
        scale = scale * T::of(0.1);
    }
    None
}

/// Fits `order` to a series that has already been transformed and differenced.
pub fn fit_mle<T: Scalar>(
    data: &DifferencedSeries<T>,
    order: &ModelOrder,
    opts: &FitOptions<T>,
) -> Result<FittedModel<T>, EngineError> {
    let spec = data.spec;
    let period_matches = spec.seasonal_d == 0 || spec.period == order.period;
    if spec.d != order.d || spec.seasonal_d != order.seasonal_d || !period_matches {
        return Err(EngineError::ShapeMismatch(format!(
            "series differenced with d={}, D={}, s={} but order is {order}",
            spec.d, spec.seasonal_d, spec.period
        )));
    }
    if opts.include_mean && order.is_differenced() {
        return Err(EngineError::ConstantNotAllowed);
    }
    let values = data.core.values();
    let needed = opts.min_extra_obs + order.n_coefficients();
    if values.len() < needed {
        return Err(EngineError::InsufficientData {
            n: values.len(),
            needed,
        });
    }

    let objective = Objective {
        data: values,
        order,
        include_mean: opts.include_mean,
    };
    let res = minimise(&objective, order, opts);
    let out = objective.filter(&res.x).ok_or_else(|| {
        EngineError::NumericalFailure(format!("no admissible optimum found for {order}"))
    })?;

    let std_errors = standard_errors(&objective, &res.x, opts.hessian_step);
    let hessian_ok = std_errors.is_some();
    let mut terms: Vec<CoefficientEstimate<T>> = coefficient_labels(order)
        .into_iter()
        .enumerate()
        .map(|(i, name)| {
            let se = std_errors.as_ref().and_then(|s| s.get(i).copied());
            CoefficientEstimate::new(name, res.x[i], se)
        })
        .collect();
    let mut coefficients = CoefficientSet::from_vector(order, &res.x, out.sigma2)?;
    if let Some((mu, se)) = out.mean {
        coefficients.mean = Some(mu);
        terms.push(CoefficientEstimate::new("mean".into(), mu, Some(se)));
    }

    let n_obs = values.len();
    let n_params = order.n_coefficients() + 1 + usize::from(opts.include_mean);
    let k = T::of_usize(n_params);
    let nf = T::of_usize(n_obs);
    let two = T::of(2.0);
    let aic = two * k - two * out.loglik;
    let bic = k * nf.ln() - two * out.loglik;
    let aicc = if n_obs > n_params + 1 {
        aic + two * k * (k + T::one()) / (nf - k - T::one())
    } else {
        T::infinity()
    };
    let residuals = TimeSeries::new(data.core.start(), out.standardized())?;
    Ok(FittedModel {
        order: *order,
        transform: spec,
        coefficients,
        terms,
        loglik: out.loglik,
        aic,
        bic,
        aicc,
        sigma2: out.sigma2,
        n_obs,
        n_params,
        residuals,
        converged: res.converged,
        iterations: res.iterations,
        hessian_ok,
    })
}

/// Transforms `series` as `order` requires and fits it.
pub fn fit_series<T: Scalar>(
    series: &TimeSeries<T>,
    order: &ModelOrder,
    apply_log: bool,
    opts: &FitOptions<T>,
) -> Result<(DifferencedSeries<T>, FittedModel<T>), EngineError> {
    let spec = TransformSpec::new(apply_log, order.d, order.seasonal_d, order.period);
    let diffed = apply_transform(series, spec)?;
    let model = fit_mle(&diffed, order, opts)?;
    Ok((diffed, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::kalman_loglik;
    use crate::engine::simulate::simulate;
    use crate::stats::normal_cdf;

    fn undifferenced(x: &TimeSeries<f64>) -> DifferencedSeries<f64> {
        apply_transform(x, TransformSpec::new(false, 0, 0, 12)).unwrap()
    }

    #[test]
    fn white_noise_variance_is_mean_square() {
        let order = ModelOrder::arima(0, 0, 0);
        let x = simulate(&order, &CoefficientSet::zeros(&order), 300, 4).unwrap();
        let m = fit_mle(&undifferenced(&x), &order, &FitOptions::default()).unwrap();
        let ms = x.values().iter().map(|v| v * v).sum::<f64>() / 300.0;
        assert!((m.sigma2 - ms).abs() < 1e-8);
        assert!(m.terms.is_empty());
        assert_eq!(m.n_params, 1);
        assert!((m.aic - (2.0 - 2.0 * m.loglik)).abs() < 1e-12);
    }

    #[test]
    fn start_points_are_deduplicated() {
        assert_eq!(start_points::<f64>(&ModelOrder::arima(1, 0, 0)).len(), 2);
        assert_eq!(start_points::<f64>(&ModelOrder::arima(1, 0, 1)).len(), 4);
        assert_eq!(start_points::<f64>(&ModelOrder::arima(2, 0, 1)).len(), 5);
        assert_eq!(start_points::<f64>(&ModelOrder::arima(0, 0, 0)).len(), 1);
    }

    #[test]
    fn recovers_seasonal_ar_and_reports_consistent_table() {
        let order = ModelOrder::new((1, 0, 0), (1, 0, 0), 12);
        let truth = CoefficientSet::from_vector(&order, &[0.5, 0.3], 1.0).unwrap();
        let x = simulate(&order, &truth, 600, 17).unwrap();
        let m = fit_mle(&undifferenced(&x), &order, &FitOptions::default()).unwrap();
        assert!(m.converged && m.hessian_ok);
        for (term, want) in m.terms.iter().zip([0.5, 0.3]) {
            let se = term.std_error.unwrap();
            assert!((term.value - want).abs() < 3.0 * se, "{term:?}");
            let t = term.t_stat.unwrap();
            assert!((t - term.value / se).abs() < 1e-12);
            let p = 2.0 * (1.0 - normal_cdf(t.abs()));
            assert!((term.p_value.unwrap() - p).abs() < 1e-12);
        }
        assert_eq!(m.n_params, 3);
        assert!((m.aic - (6.0 - 2.0 * m.loglik)).abs() < 1e-12);
        assert_eq!(m.residuals.len(), 600);
        let direct = kalman_loglik(x.values(), &order, &m.coefficients).unwrap();
        assert!((direct - m.loglik).abs() < 1e-10);
    }

    #[test]
    fn likelihood_surface_is_smooth_at_the_optimum() {
        let order = ModelOrder::arima(1, 0, 1);
        let truth = CoefficientSet::from_vector(&order, &[0.6, 0.3], 1.0).unwrap();
        let x = simulate(&order, &truth, 400, 8).unwrap();
        let m = fit_mle(&undifferenced(&x), &order, &FitOptions::default()).unwrap();
        let f = |v: &[f64]| {
            let c = CoefficientSet::from_vector(&order, v, 1.0).unwrap();
            kalman_loglik(x.values(), &order, &c).unwrap()
        };
        let x0 = m.coefficients.to_vector();
        for i in 0..x0.len() {
            // second differences from two step sizes must agree
            let curv = |h: f64| {
                let mut p = x0.clone();
                let mut q = x0.clone();
                p[i] += h;
                q[i] -= h;
                (f(&p) - 2.0 * f(&x0) + f(&q)) / (h * h)
            };
            let (a, b) = (curv(1e-3), curv(2e-3));
            assert!(((a - b) / b).abs() < 1e-4, "{a} vs {b}");
            // central slope agrees with the secant through the same points
            let h = 1e-4;
            let mut p = x0.clone();
            let mut q = x0.clone();
            p[i] += h;
            q[i] -= h;
            let central = (f(&p) - f(&q)) / (2.0 * h);
            let mut r = x0.clone();
            r[i] += 2.0 * h;
            let secant = (f(&r) - f(&x0)) / (2.0 * h);
            assert!((central - secant).abs() < 1e-4 * (1.0 + a.abs()), "{central} vs {secant}");
        }
    }

    #[test]
    fn constant_only_when_undifferenced() {
        let order = ModelOrder::arima(0, 1, 0);
        let x = simulate(&order, &CoefficientSet::<f64>::zeros(&order), 100, 1).unwrap();
        let opts = FitOptions {
            include_mean: true,
            ..FitOptions::default()
        };
        assert!(matches!(
            fit_series(&x, &order, false, &opts),
            Err(EngineError::ConstantNotAllowed)
        ));
    }

    #[test]
    fn fitted_mean_is_reported_as_term() {
        let order = ModelOrder::arima(1, 0, 0);
        let mut truth = CoefficientSet::from_vector(&order, &[0.4f64], 1.0).unwrap();
        truth.mean = Some(5.0);
        let x = simulate(&order, &truth, 300, 21).unwrap();
        let opts = FitOptions {
            include_mean: true,
            ..FitOptions::default()
        };
        let (_, m) = fit_series(&x, &order, false, &opts).unwrap();
        let mean = m.terms.last().unwrap();
        assert_eq!(mean.name, "mean");
        assert!((mean.value - 5.0).abs() < 3.0 * mean.std_error.unwrap());
        assert_eq!(m.n_params, 3);
    }

    #[test]
    fn order_and_differencing_must_agree() {
        let order = ModelOrder::arima(0, 1, 0);
        let x = simulate(&order, &CoefficientSet::zeros(&order), 100, 1).unwrap();
        let err = fit_mle(&undifferenced(&x), &order, &FitOptions::default());
        assert!(matches!(err, Err(EngineError::ShapeMismatch(_))));
    }

    #[test]
    fn too_short_series() {
        let order = ModelOrder::arima(2, 0, 0);
        let x = simulate(&order, &CoefficientSet::zeros(&order), 11, 1).unwrap();
        assert!(matches!(
            fit_mle(&undifferenced(&x), &order, &FitOptions::default()),
            Err(EngineError::InsufficientData { .. })
        ));
    }
}
