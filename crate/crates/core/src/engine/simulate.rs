use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::Scalar;
use crate::series::{integrate_transform, DiffStage, DifferencedSeries, MonthStamp, TimeSeries, TransformSpec};

use super::order::{expand_polynomials, roots_outside_unit_circle, CoefficientSet, ModelOrder};
use super::EngineError;

/// Discarded warm-up draws: `10 · (p + sP + q + sQ + 1)`.
pub fn default_burn_in(order: &ModelOrder) -> usize {
    10 * (order.ar_degree() + order.ma_degree() + 1)
}

/// Simulates `n` observations starting in January 2000.
pub fn simulate<T: Scalar>(
    order: &ModelOrder,
    coeffs: &CoefficientSet<T>,
    n: usize,
    seed: u64,
) -> Result<TimeSeries<T>, EngineError> {
    let start = MonthStamp::new(2000, 1).expect("valid month");
    simulate_from(order, coeffs, n, seed, start)
}

/// Gaussian SARIMA simulation.
///
/// The stationary ARMA part is generated after a burn-in, shifted by
/// `coeffs.mean` if set, and then integrated `d`/`D` times from zero
/// starting values. The result has exactly `n` values.
pub fn simulate_from<T: Scalar>(
    order: &ModelOrder,
    coeffs: &CoefficientSet<T>,
    n: usize,
    seed: u64,
    start: MonthStamp,
) -> Result<TimeSeries<T>, EngineError> {
    let (ar, ma) = expand_polynomials(order, coeffs)?;
    if !(coeffs.sigma2 > T::zero())
        || !roots_outside_unit_circle(&ar)
        || !roots_outside_unit_circle(&ma)
    {
        return Err(EngineError::NonStationaryCoefficients);
    }
    let lost = order.lost();
    if n <= lost {
        return Err(EngineError::InsufficientData {
            n,
            needed: lost + 1,
        });
    }
    let burn = default_burn_in(order);
    let total = n - lost + burn;
    let sd = coeffs.sigma2.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps: Vec<T> = (0..total)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            T::of(z) * sd
        })
        .collect();
    let mut y = vec![T::zero(); total];
    for t in 0..total {
        let mut v = eps[t];
        for (j, &c) in ma.iter().enumerate().skip(1) {
            if j <= t {
                v += c * eps[t - j];
            }
        }
        for (i, &c) in ar.iter().enumerate().skip(1) {
            if i <= t {
                v -= c * y[t - i];
            }
        }
        y[t] = v;
    }
    let mu = coeffs.mean.unwrap_or_else(T::zero);
    let core: Vec<T> = y[burn..].iter().map(|&v| v + mu).collect();
    if lost == 0 {
        return Ok(TimeSeries::new(start, core)?);
    }

    let spec = TransformSpec::new(false, order.d, order.seasonal_d, order.period);
    let initials = spec
        .stage_lags()
        .into_iter()
        .map(|lag| DiffStage {
            lag,
            head: vec![T::zero(); lag],
        })
        .collect();
    let diffed = DifferencedSeries {
        core: TimeSeries::new(start.advance(lost as i64), core)?,
        spec,
        initials,
    };
    let values = integrate_transform(&diffed, &[])?;
    Ok(TimeSeries::new(start, values)?)
}
