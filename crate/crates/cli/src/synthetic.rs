//! Synthetic datasets in the input schema, for testing the pipeline.

use std::fmt::Write as _;

use sarima_core::engine::{simulate_from, CoefficientSet, ModelOrder};
use sarima_core::MonthStamp;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SyntheticModel {
    /// Log counts follow a stationary seasonal AR around a fixed level.
    Seasonal,
    /// Log counts are iid Gaussian around a fixed level.
    WhiteNoise,
    /// Log counts follow the airline model (0,1,1)(0,1,1)_12.
    Airline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub model: SyntheticModel,
    pub from: MonthStamp,
    pub months: usize,
    /// Each category's monthly count is split across this many jurisdictions.
    pub jurisdictions: usize,
    pub seed: u64,
}

/// Long labels as they appear in the public dataset, with log-scale levels.
const CATEGORIES: [(&str, f64); 4] = [
    ("Firearm", 6.9),
    ("Knife or cutting instrument", 6.6),
    ("Other weapon", 7.4),
    ("Hands, fist, feet", 7.0),
];

fn model_for(model: SyntheticModel) -> (ModelOrder, CoefficientSet<f64>) {
    match model {
        SyntheticModel::Seasonal => (
            ModelOrder::new((1, 0, 0), (1, 0, 0), 12),
            CoefficientSet {
                phi: vec![0.5],
                theta: vec![],
                sphi: vec![0.6],
                stheta: vec![],
                sigma2: 0.0025,
                mean: None,
            },
        ),
        SyntheticModel::WhiteNoise => (
            ModelOrder::arima(0, 0, 0),
            CoefficientSet {
                sigma2: 0.0025,
                ..CoefficientSet::zeros(&ModelOrder::arima(0, 0, 0))
            },
        ),
        SyntheticModel::Airline => (
            ModelOrder::new((0, 1, 1), (0, 1, 1), 12),
            CoefficientSet {
                phi: vec![],
                theta: vec![-0.4],
                sphi: vec![],
                stheta: vec![-0.6],
                sigma2: 0.0016,
                mean: None,
            },
        ),
    }
}

/// CSV text with columns `Year,Month,County,Category,Count`.
pub fn synthetic_csv(spec: &SyntheticSpec) -> Result<String, CliError> {
    if spec.months == 0 || spec.jurisdictions == 0 {
        return Err(CliError::Config("months and jurisdictions must be positive".into()));
    }
    let (order, coeffs) = model_for(spec.model);
    let mut out = String::from("Year,Month,County,Category,Count\n");
    let mut rows: Vec<(MonthStamp, usize, usize, u64)> = Vec::new();
    for (ci, &(_, level)) in CATEGORIES.iter().enumerate() {
        let seed = spec.seed.wrapping_mul(31).wrapping_add(ci as u64);
        let sim = simulate_from(&order, &coeffs, spec.months, seed, spec.from)
            .map_err(|e| CliError::Data(e.to_string()))?;
        for (i, v) in sim.values().iter().enumerate() {
            let total = (level + v).exp().round().max(1.0) as u64;
            // unequal fixed shares, remainder to the last jurisdiction
            let weights: u64 = (1..=spec.jurisdictions as u64).sum();
            let mut left = total;
            for j in 0..spec.jurisdictions {
                let part = if j + 1 == spec.jurisdictions {
                    left
                } else {
                    total * (j as u64 + 1) / weights
                };
                left -= part;
                rows.push((sim.month_at(i), j, ci, part));
            }
        }
    }
    rows.sort_by_key(|&(m, j, c, _)| (m, j, c));
    for (m, j, c, count) in rows {
        let label = CATEGORIES[c].0;
        writeln!(
            out,
            "{},{},County {},\"{}\",{}",
            m.year(),
            m.month(),
            j + 1,
            label,
            count
        )
        .expect("write to string");
    }
    Ok(out)
}
