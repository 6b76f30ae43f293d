//! Seasonal ARIMA modelling for monthly count series.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`.

pub mod engine;
pub mod forecast;
pub mod scalar;
pub mod select;
pub mod series;
pub mod stats;

pub use scalar::Scalar;

pub use engine::{CoefficientSet, EngineError, FitOptions, FittedModel, ModelOrder, RootReport};
pub use forecast::{EvaluationReport, ForecastError, ForecastResult, RollingConfig};
pub use select::{CandidateRanking, SearchBounds, SelectError, Selection, SelectionRule};
pub use series::{DifferencedSeries, MonthStamp, SeriesError, TimeSeries, TransformSpec};
pub use stats::{AcfResult, DiagnosticsReport, StatsError, TestName, TestOutcome};

pub type Series = TimeSeries<f64>;
pub type Differenced = DifferencedSeries<f64>;
pub type Coefficients = CoefficientSet<f64>;
pub type Model = FittedModel<f64>;
pub type Ranking = CandidateRanking<f64>;
pub type Forecast = ForecastResult<f64>;
pub type Evaluation = EvaluationReport<f64>;
pub type Outcome = TestOutcome<f64>;
pub type Diagnostics = DiagnosticsReport<f64>;
