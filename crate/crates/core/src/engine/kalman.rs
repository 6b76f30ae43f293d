//! Kalman filter for the Harvey form with the innovation variance
//! concentrated out.
//!
//! The filter runs in units of σ² = 1. Because the observation equation has
//! no noise, the first state element is known exactly after each update, so
//! the covariance step reduces to
//! `P⁺[i][j] = P[i+1][j+1] − P[i+1][0]·P[0][j+1] / F + R_i R_j`.

use crate::scalar::{precision_floor, Scalar};

use super::order::{expand_polynomials, CoefficientSet, ModelOrder};
use super::statespace::StateSpaceForm;
use super::EngineError;

/// Everything a filter pass produces.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput<T> {
    /// One-step prediction errors `v_t` of the (mean-corrected) data.
    pub innovations: Vec<T>,
    /// Prediction variances `F_t` in units of σ².
    pub variances: Vec<T>,
    /// Concentrated estimate `σ̂² = mean(v² / F)`.
    pub sigma2: T,
    pub loglik: T,
    /// GLS mean and its standard error when requested.
    pub mean: Option<(T, T)>,
    /// Predicted state and covariance for the period after the sample.
    pub next_state: Vec<T>,
    pub next_cov: Vec<T>,
    /// First step at which the covariance had converged, if it did.
    pub steady_from: Option<usize>,
}

impl<T: Scalar> FilterOutput<T> {
    /// Innovations scaled to a common variance: `v_t / √F_t`.
    pub fn standardized(&self) -> Vec<T> {
        self.innovations
            .iter()
            .zip(&self.variances)
            .map(|(&v, &f)| v / f.sqrt())
            .collect()
    }
}

struct Pass<T> {
    v: Vec<T>,
    f: Vec<T>,
    /// Innovations of the constant regressor; empty unless a mean is profiled.
    v1: Vec<T>,
    state: Vec<T>,
    state1: Vec<T>,
    cov: Vec<T>,
    steady_from: Option<usize>,
}

fn advance_state<T: Scalar>(ss: &StateSpaceForm<T>, state: &mut [T], cov: &[T], y: T, gain_v: T) {
    let r = ss.dim();
    for i in 0..r {
        let carry = if i + 1 < r {
            state[i + 1] + cov[(i + 1) * r] * gain_v
        } else {
            T::zero()
        };
        state[i] = ss.ar[i] * y + carry;
    }
}

fn run_pass<T: Scalar>(
    data: &[T],
    ss: &StateSpaceForm<T>,
    with_constant: bool,
) -> Result<Pass<T>, EngineError> {
    let r = ss.dim();
    let n = data.len();
    let mut cov = ss.stationary_covariance()?;
    let mut next = vec![T::zero(); r * r];
    let mut state = vec![T::zero(); r];
    let mut state1 = vec![T::zero(); if with_constant { r } else { 0 }];
    let mut v = Vec::with_capacity(n);
    let mut f = Vec::with_capacity(n);
    let mut v1 = Vec::with_capacity(if with_constant { n } else { 0 });
    let tol = precision_floor(T::of(1e-14));
    let mut steady_from = None;

    for (t, &y) in data.iter().enumerate() {
        let ft = cov[0];
        if !(ft > T::zero()) || !ft.is_finite() {
            return Err(EngineError::NumericalFailure(format!(
                "prediction variance {ft} at step {t}"
            )));
        }
        let vt = y - state[0];
        v.push(vt);
        f.push(ft);
        advance_state(ss, &mut state, &cov, y, vt / ft);
        if with_constant {
            let vt1 = T::one() - state1[0];
            v1.push(vt1);
            advance_state(ss, &mut state1, &cov, T::one(), vt1 / ft);
        }

        if steady_from.is_some() {
            continue;
        }
        let mut delta = T::zero();
        for i in 0..r {
            for j in i..r {
                let mut val = ss.loading[i] * ss.loading[j];
                if i + 1 < r && j + 1 < r {
                    val += cov[(i + 1) * r + j + 1] - cov[(i + 1) * r] * cov[j + 1] / ft;
                }
                delta = delta.max((val - cov[i * r + j]).abs());
                next[i * r + j] = val;
                next[j * r + i] = val;
            }
        }
        std::mem::swap(&mut cov, &mut next);
        if delta <= tol * cov[0] {
            steady_from = Some(t + 1);
        }
    }
    Ok(Pass {
        v,
        f,
        v1,
        state,
        state1,
        cov,
        steady_from,
    })
}

/// Filters `data` through the zero-mean ARMA model described by `ss`.
///
/// With `profile_mean` the process mean is estimated by generalized least
/// squares alongside the filter and removed from the innovations.
pub fn kalman_filter<T: Scalar>(
    data: &[T],
    ss: &StateSpaceForm<T>,
    profile_mean: bool,
) -> Result<FilterOutput<T>, EngineError> {
    if data.is_empty() {
        return Err(EngineError::InsufficientData { n: 0, needed: 1 });
    }
    let pass = run_pass(data, ss, profile_mean)?;
    let n = T::of_usize(data.len());
    let mut mean = None;
    let mut innovations = pass.v;
    let mut state = pass.state;
    if profile_mean {
        let (mut sxy, mut sxx) = (T::zero(), T::zero());
        for ((&vy, &vx), &f) in innovations.iter().zip(&pass.v1).zip(&pass.f) {
            sxy += vx * vy / f;
            sxx += vx * vx / f;
        }
        if !(sxx > T::zero()) {
            return Err(EngineError::NumericalFailure("constant not identified".into()));
        }
        let mu = sxy / sxx;
        for (v, &vx) in innovations.iter_mut().zip(&pass.v1) {
            *v -= mu * vx;
        }
        for (s, &s1) in state.iter_mut().zip(&pass.state1) {
            *s -= mu * s1;
        }
        mean = Some((mu, sxx));
    }
    let ssq: T = innovations
        .iter()
        .zip(&pass.f)
        .map(|(&v, &f)| v * v / f)
        .sum();
    let sigma2 = ssq / n;
    if !(sigma2 > T::zero()) || !sigma2.is_finite() {
        return Err(EngineError::NumericalFailure(format!(
            "innovation variance {sigma2}"
        )));
    }
    let sum_log_f: T = pass.f.iter().map(|f| f.ln()).sum();
    let two_pi = T::PI() + T::PI();
    let half = T::of(0.5);
    let loglik = -half * n * (two_pi.ln() + sigma2.ln() + T::one()) - half * sum_log_f;
    let mean = mean.map(|(mu, sxx)| (mu, (sigma2 / sxx).sqrt()));
    Ok(FilterOutput {
        innovations,
        variances: pass.f,
        sigma2,
        loglik,
        mean,
        next_state: state,
        next_cov: pass.cov,
        steady_from: pass.steady_from,
    })
}

/// Exact concentrated Gaussian log-likelihood of already differenced data.
///
/// The order's differencing fields are ignored here. A mean stored in
/// `coeffs` is subtracted before filtering.
pub fn kalman_loglik<T: Scalar>(
    data: &[T],
    order: &ModelOrder,
    coeffs: &CoefficientSet<T>,
) -> Result<T, EngineError> {
    let (ar, ma) = expand_polynomials(order, coeffs)?;
    let ss = StateSpaceForm::from_polynomials(&ar, &ma);
    let out = match coeffs.mean {
        Some(mu) => {
            let centered: Vec<T> = data.iter().map(|&y| y - mu).collect();
            kalman_filter(&centered, &ss, false)?
        }
        None => kalman_filter(data, &ss, false)?,
    };
    Ok(out.loglik)
}

#[cfg(test)]
mod tests {
    use super::*;

    // 50 fixed values; drawn once from a standard normal and rounded.
    const DATA: [f64; 50] = [
        0.362, -1.207, 0.715, 1.441, -0.318, 0.094, -2.012, 0.871, 1.133, -0.459, 0.288, 0.947,
        -0.673, -1.525, 0.406, 1.812, -0.087, 0.559, -0.931, 0.221, 1.047, -0.394, -1.168, 0.683,
        0.015, 1.374, -0.812, 0.526, -0.249, -1.703, 0.932, 0.171, -0.565, 1.259, 0.337, -0.101,
        -0.784, 2.105, -1.392, 0.648, 0.463, -0.217, -1.036, 0.789, 1.561, -0.642, 0.054, -0.458,
        0.997, -0.305,
    ];

    fn coeffs(order: &ModelOrder, x: &[f64]) -> CoefficientSet<f64> {
        CoefficientSet::from_vector(order, x, 1.0).unwrap()
    }

    fn concentrated(n: f64, ssq: f64, sum_log_f: f64) -> f64 {
        let s2 = ssq / n;
        -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + s2.ln() + 1.0) - 0.5 * sum_log_f
    }

    #[test]
    fn white_noise_matches_iid_likelihood() {
        let order = ModelOrder::arima(0, 0, 0);
        let got = kalman_loglik(&DATA, &order, &coeffs(&order, &[])).unwrap();
        let n = DATA.len() as f64;
        let s2 = DATA.iter().map(|x| x * x).sum::<f64>() / n;
        let iid: f64 = DATA
            .iter()
            .map(|x| -0.5 * (2.0 * std::f64::consts::PI * s2).ln() - x * x / (2.0 * s2))
            .sum();
        assert!((got - iid).abs() < 1e-10, "{got} vs {iid}");
    }

    #[test]
    fn ar1_matches_exact_closed_form() {
        let phi = 0.5;
        let order = ModelOrder::arima(1, 0, 0);
        let got = kalman_loglik(&DATA, &order, &coeffs(&order, &[phi])).unwrap();
        // y1 ~ N(0, σ²/(1-φ²)), y_t | y_{t-1} ~ N(φ y_{t-1}, σ²)
        let mut ssq = DATA[0] * DATA[0] * (1.0 - phi * phi);
        for t in 1..DATA.len() {
            let e = DATA[t] - phi * DATA[t - 1];
            ssq += e * e;
        }
        let oracle = concentrated(50.0, ssq, -(1.0 - phi * phi).ln());
        assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");
    }

    #[test]
    fn ma1_matches_innovations_algorithm() {
        let theta = 0.4;
        let order = ModelOrder::arima(0, 0, 1);
        let got = kalman_loglik(&DATA, &order, &coeffs(&order, &[theta])).unwrap();
        // Brockwell-Davis innovations algorithm for an MA(1)
        let g0 = 1.0 + theta * theta;
        let g1 = theta;
        let mut v = g0;
        let mut ssq = DATA[0] * DATA[0] / v;
        let mut sum_log = v.ln();
        let mut prev_err = DATA[0];
        for &y in &DATA[1..] {
            let coef = g1 / v;
            let pred = coef * prev_err;
            v = g0 - coef * coef * v;
            let e = y - pred;
            ssq += e * e / v;
            sum_log += v.ln();
            prev_err = e;
        }
        let oracle = concentrated(50.0, ssq, sum_log);
        assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");
    }

    #[test]
    fn sigma2_is_mean_of_standardized_squares() {
        let order = ModelOrder::new((1, 0, 1), (1, 0, 0), 4);
        let c = coeffs(&order, &[0.3, -0.2, 0.4]);
        let (ar, ma) = expand_polynomials(&order, &c).unwrap();
        let out = kalman_filter(&DATA, &StateSpaceForm::from_polynomials(&ar, &ma), false).unwrap();
        let z = out.standardized();
        let ms = z.iter().map(|x| x * x).sum::<f64>() / z.len() as f64;
        assert!((ms - out.sigma2).abs() < 1e-10);
    }

    #[test]
    fn profiled_mean_matches_direct_minimisation() {
        let order = ModelOrder::arima(1, 0, 0);
        let c = coeffs(&order, &[0.4]);
        let (ar, ma) = expand_polynomials(&order, &c).unwrap();
        let ss = StateSpaceForm::from_polynomials(&ar, &ma);
        let shifted: Vec<f64> = DATA.iter().map(|x| x + 3.0).collect();
        let out = kalman_filter(&shifted, &ss, true).unwrap();
        let (mu, se) = out.mean.unwrap();
        // the profiled likelihood is the maximum over μ
        let at = |m: f64| {
            let mut c = c.clone();
            c.mean = Some(m);
            kalman_loglik(&shifted, &order, &c).unwrap()
        };
        assert!((at(mu) - out.loglik).abs() < 1e-9);
        assert!(at(mu + 1e-3) < out.loglik && at(mu - 1e-3) < out.loglik);
        assert!(se > 0.0 && (mu - 3.0).abs() < 3.0 * se);
    }

    #[test]
    fn covariance_reaches_steady_state() {
        let order = ModelOrder::arima(0, 0, 1);
        let c = coeffs(&order, &[0.3]);
        let (ar, ma) = expand_polynomials(&order, &c).unwrap();
        let out = kalman_filter(&DATA, &StateSpaceForm::from_polynomials(&ar, &ma), false).unwrap();
        assert!(out.steady_from.is_some());
        assert!((out.variances[49] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_stationary_ar_is_signalled() {
        let order = ModelOrder::arima(1, 0, 0);
        assert!(matches!(
            kalman_loglik(&DATA, &order, &coeffs(&order, &[1.05])),
            Err(EngineError::NonStationaryRegion)
        ));
    }
}
