//! Calendar-anchored monthly series, the log transform and differencing.
//!
//! The transform pipeline is always applied in the same order:
//! natural log (optional), then `D` seasonal differences at lag `s`, then
//! `d` ordinary differences at lag 1. [`integrate_transform`] walks the
//! stages backwards, seeding each cumulative sum with the leading values the
//! forward pass consumed.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("value at index {0} is not strictly positive")]
    NonPositiveValue(usize),
    #[error("value at index {0} is not finite")]
    NonFiniteValue(usize),
    #[error("series of length {len} is too short (needs more than {needed})")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("series must contain at least one observation")]
    Empty,
    #[error("month {0} is outside 1..=12")]
    InvalidMonth(u32),
    #[error("seasonal period must be at least 1")]
    InvalidPeriod,
    #[error("stored initial values do not match the transform ({0})")]
    InconsistentInitials(String),
}

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonthStamp {
    year: i32,
    month: u32,
}

impl MonthStamp {
    pub fn new(year: i32, month: u32) -> Result<Self, SeriesError> {
        if !(1..=12).contains(&month) {
            return Err(SeriesError::InvalidMonth(month));
        }
        Ok(Self { year, month })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u32 {
        self.month
    }

    /// Months since year 0, January.
    pub fn index(&self) -> i64 {
        12 * i64::from(self.year) + i64::from(self.month) - 1
    }

    pub fn from_index(index: i64) -> Self {
        let year = index.div_euclid(12) as i32;
        let month = index.rem_euclid(12) as u32 + 1;
        Self { year, month }
    }

    pub fn advance(&self, months: i64) -> Self {
        Self::from_index(self.index() + months)
    }

    /// Signed number of months from `self` to `later`.
    pub fn months_until(&self, later: &MonthStamp) -> i64 {
        later.index() - self.index()
    }
}

impl Ord for MonthStamp {
    fn cmp(&self, other: &Self) -> Ordering {
        self.index().cmp(&other.index())
    }
}

impl PartialOrd for MonthStamp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MonthStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl std::str::FromStr for MonthStamp {
    type Err = SeriesError;

    /// Parses `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (y, m) = s
            .trim()
            .split_once('-')
            .ok_or(SeriesError::InvalidMonth(0))?;
        let year = y.parse().map_err(|_| SeriesError::InvalidMonth(0))?;
        let month = m.parse().map_err(|_| SeriesError::InvalidMonth(0))?;
        Self::new(year, month)
    }
}

/// Contiguous monthly observations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries<T> {
    start: MonthStamp,
    values: Vec<T>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(start: MonthStamp, values: Vec<T>) -> Result<Self, SeriesError> {
        if values.is_empty() {
            return Err(SeriesError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFiniteValue(i));
        }
        Ok(Self { start, values })
    }

    pub fn start(&self) -> MonthStamp {
        self.start
    }

    /// Month of the last observation.
    pub fn end(&self) -> MonthStamp {
        self.start.advance(self.values.len() as i64 - 1)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn month_at(&self, i: usize) -> MonthStamp {
        self.start.advance(i as i64)
    }

    /// Re-anchors the same values at a different start month.
    pub fn with_start(mut self, start: MonthStamp) -> Self {
        self.start = start;
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (MonthStamp, T)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.month_at(i), v))
    }
}

/// Log and differencing settings applied before model fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub apply_log: bool,
    /// Ordinary differencing order.
    pub d: usize,
    /// Seasonal differencing order.
    pub seasonal_d: usize,
    pub period: usize,
}

impl TransformSpec {
    pub fn new(apply_log: bool, d: usize, seasonal_d: usize, period: usize) -> Self {
        Self {
            apply_log,
            d,
            seasonal_d,
            period,
        }
    }

    /// Number of observations consumed by differencing.
    pub fn lost(&self) -> usize {
        self.d + self.seasonal_d * self.period
    }

    /// Lags of the differencing passes in application order.
    pub fn stage_lags(&self) -> Vec<usize> {
        std::iter::repeat(self.period)
            .take(self.seasonal_d)
            .chain(std::iter::repeat(1).take(self.d))
            .collect()
    }
}

impl Default for TransformSpec {
    fn default() -> Self {
        Self::new(true, 0, 0, 12)
    }
}

/// Leading values consumed by one differencing pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffStage<T> {
    pub lag: usize,
    pub head: Vec<T>,
}

/// A transformed series together with what is needed to undo the transform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferencedSeries<T> {
    pub core: TimeSeries<T>,
    pub spec: TransformSpec,
    /// One entry per differencing pass, in application order.
    pub initials: Vec<DiffStage<T>>,
}

impl<T: Scalar> DifferencedSeries<T> {
    /// Start month of the untransformed series.
    pub fn original_start(&self) -> MonthStamp {
        self.core.start().advance(-(self.spec.lost() as i64))
    }

    pub fn original_len(&self) -> usize {
        self.core.len() + self.spec.lost()
    }

    fn check_initials(&self) -> Result<(), SeriesError> {
        let lags = self.spec.stage_lags();
        if lags.len() != self.initials.len() {
            return Err(SeriesError::InconsistentInitials(format!(
                "{} stages stored, {} expected",
                self.initials.len(),
                lags.len()
            )));
        }
        for (stage, lag) in self.initials.iter().zip(lags) {
            if stage.lag != lag || stage.head.len() != lag {
                return Err(SeriesError::InconsistentInitials(format!(
                    "stage with lag {} holds {} values, expected lag {lag}",
                    stage.lag,
                    stage.head.len()
                )));
            }
        }
        Ok(())
    }
}

pub fn log_transform<T: Scalar>(series: &TimeSeries<T>) -> Result<TimeSeries<T>, SeriesError> {
    let values = series
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v > T::zero() {
                Ok(v.ln())
            } else {
                Err(SeriesError::NonPositiveValue(i))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    TimeSeries::new(series.start(), values)
}

fn difference_once<T: Scalar>(values: &[T], lag: usize) -> (Vec<T>, Vec<T>) {
    let head = values[..lag].to_vec();
    let out = values
        .iter()
        .skip(lag)
        .zip(values.iter())
        .map(|(&a, &b)| a - b)
        .collect();
    (out, head)
}

fn integrate_once<T: Scalar>(diffs: &[T], head: &[T]) -> Vec<T> {
    let lag = head.len();
    let mut out = Vec::with_capacity(diffs.len() + lag);
    out.extend_from_slice(head);
    for (i, &dv) in diffs.iter().enumerate() {
        let prev = out[i];
        out.push(prev + dv);
    }
    out
}

/// Applies `times` passes of `y[t] = x[t] - x[t - lag]`.
pub fn difference<T: Scalar>(
    series: &TimeSeries<T>,
    lag: usize,
    times: usize,
) -> Result<DifferencedSeries<T>, SeriesError> {
    if lag == 0 {
        return Err(SeriesError::InvalidPeriod);
    }
    let spec = TransformSpec::new(false, 0, times, lag);
    difference_stages(series, spec)
}

fn difference_stages<T: Scalar>(
    series: &TimeSeries<T>,
    spec: TransformSpec,
) -> Result<DifferencedSeries<T>, SeriesError> {
    let lost = spec.lost();
    if series.len() <= lost {
        return Err(SeriesError::SeriesTooShort {
            len: series.len(),
            needed: lost,
        });
    }
    let mut values = series.values().to_vec();
    let mut initials = Vec::new();
    for lag in spec.stage_lags() {
        let (next, head) = difference_once(&values, lag);
        initials.push(DiffStage { lag, head });
        values = next;
    }
    Ok(DifferencedSeries {
        core: TimeSeries::new(series.start().advance(lost as i64), values)?,
        spec,
        initials,
    })
}

/// Log (if requested), then seasonal differences, then ordinary differences.
pub fn apply_transform<T: Scalar>(
    series: &TimeSeries<T>,
    spec: TransformSpec,
) -> Result<DifferencedSeries<T>, SeriesError> {
    if spec.period == 0 {
        return Err(SeriesError::InvalidPeriod);
    }
    if series.len() <= spec.lost() {
        return Err(SeriesError::SeriesTooShort {
            len: series.len(),
            needed: spec.lost(),
        });
    }
    let base = if spec.apply_log {
        log_transform(series)?
    } else {
        series.clone()
    };
    difference_stages(&base, spec)
}

/// Inverts [`apply_transform`].
///
/// Returns the reconstructed original values followed by the inversion of
/// `future`, which is read as a continuation of the differenced core. With
/// an empty `future` this is the plain inverse.
pub fn integrate_transform<T: Scalar>(
    diffed: &DifferencedSeries<T>,
    future: &[T],
) -> Result<Vec<T>, SeriesError> {
    diffed.check_initials()?;
    let mut values: Vec<T> = diffed
        .core
        .values()
        .iter()
        .chain(future.iter())
        .copied()
        .collect();
    for stage in diffed.initials.iter().rev() {
        values = integrate_once(&values, &stage.head);
    }
    if diffed.spec.apply_log {
        for v in values.iter_mut() {
            *v = v.exp();
        }
    }
    Ok(values)
}

/// Inverse transform of a differenced-scale continuation only.
pub fn integrate_future<T: Scalar>(
    diffed: &DifferencedSeries<T>,
    future: &[T],
) -> Result<Vec<T>, SeriesError> {
    let mut all = integrate_transform(diffed, future)?;
    Ok(all.split_off(diffed.original_len()))
}

/// Splits off the last `holdout` observations.
pub fn train_test_split<T: Scalar>(
    series: &TimeSeries<T>,
    holdout: usize,
) -> Result<(TimeSeries<T>, TimeSeries<T>), SeriesError> {
    if holdout == 0 || holdout >= series.len() {
        return Err(SeriesError::SeriesTooShort {
            len: series.len(),
            needed: holdout,
        });
    }
    let cut = series.len() - holdout;
    let train = TimeSeries::new(series.start(), series.values()[..cut].to_vec())?;
    let test = TimeSeries::new(series.month_at(cut), series.values()[cut..].to_vec())?;
    Ok((train, test))
}
