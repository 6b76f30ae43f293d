//! Pipeline configuration: TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use sarima_core::engine::FitOptions;
use sarima_core::select::{SearchBounds, SelectionRule};
use sarima_core::MonthStamp;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::ingest::{Category, IngestOptions, Schema};

mod stamp {
    use sarima_core::MonthStamp;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &MonthStamp, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(m)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<MonthStamp, D::Error> {
        let s = String::deserialize(d)?;
        s.parse()
            .map_err(|_| serde::de::Error::custom(format!("expected YYYY-MM, got '{s}'")))
    }
}

/// Whether a mean term is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ConstantMode {
    /// Mean only when the chosen differencing is d = D = 0.
    Auto,
    /// Always; fails for differenced models.
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub schema: Schema,
    /// Empty selects every category in the file.
    pub categories: Vec<Category>,
    #[serde(with = "stamp")]
    pub from: MonthStamp,
    #[serde(with = "stamp")]
    pub to: MonthStamp,
    pub holdout: usize,
    pub level: f64,
    pub max_p: usize,
    pub max_q: usize,
    #[serde(rename = "max_P")]
    pub max_seasonal_p: usize,
    #[serde(rename = "max_Q")]
    pub max_seasonal_q: usize,
    pub log: bool,
    pub constant: ConstantMode,
    /// Back-transform with the lognormal mean instead of the median.
    pub mean_corrected: bool,
    pub significance: f64,
    pub seed: u64,
    /// Left out of run summaries so outputs do not depend on their location.
    #[serde(skip_serializing)]
    pub out: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let bounds = SearchBounds::default();
        Self {
            input: None,
            schema: Schema::default(),
            categories: Vec::new(),
            from: MonthStamp::new(2005, 1).expect("valid"),
            to: MonthStamp::new(2019, 12).expect("valid"),
            holdout: 6,
            level: 0.9,
            max_p: bounds.max_p,
            max_q: bounds.max_q,
            max_seasonal_p: bounds.max_seasonal_p,
            max_seasonal_q: bounds.max_seasonal_q,
            log: true,
            constant: ConstantMode::Auto,
            mean_corrected: false,
            significance: 0.10,
            seed: 1,
            out: PathBuf::from("out"),
        }
    }
}

/// Flags shared by the pipeline subcommands. Each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with the same keys as the flags (snake_case, `max_P`, `max_Q`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Delimited input file with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Column mapping such as `year=YEAR,month=MONTH,category=Weapon,count=N`.
    #[arg(long)]
    pub schema: Option<Schema>,
    /// Comma-separated category names.
    #[arg(long, value_delimiter = ',')]
    pub categories: Option<Vec<String>>,
    /// First month, YYYY-MM.
    #[arg(long)]
    pub from: Option<MonthStamp>,
    /// Last month, YYYY-MM.
    #[arg(long)]
    pub to: Option<MonthStamp>,
    /// Months held out at the end for evaluation.
    #[arg(long)]
    pub holdout: Option<usize>,
    /// Prediction-interval level in (0, 1).
    #[arg(long)]
    pub level: Option<f64>,
    /// Largest non-seasonal AR order in the grid.
    #[arg(long = "max-p")]
    pub max_p: Option<usize>,
    /// Largest non-seasonal MA order in the grid.
    #[arg(long = "max-q")]
    pub max_q: Option<usize>,
    /// Largest seasonal AR order in the grid.
    #[arg(long = "max-P")]
    pub max_seasonal_p: Option<usize>,
    /// Largest seasonal MA order in the grid.
    #[arg(long = "max-Q")]
    pub max_seasonal_q: Option<usize>,
    /// Model the counts directly instead of their logarithm.
    #[arg(long)]
    pub no_log: bool,
    /// Mean term: auto (only when undifferenced), on, off.
    #[arg(long, num_args = 0..=1, default_missing_value = "on")]
    pub constant: Option<ConstantMode>,
    /// Point forecasts as the lognormal mean instead of the median.
    #[arg(long)]
    pub mean_corrected: bool,
    /// Recorded in the summary for reproducibility.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Config file (if any) with the flags applied on top, validated.
    pub fn resolve(args: &ConfigArgs) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        cfg.apply(args);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, args: &ConfigArgs) {
        if let Some(v) = &args.input {
            self.input = Some(v.clone());
        }
        if let Some(v) = &args.schema {
            self.schema = v.clone();
        }
        if let Some(v) = &args.categories {
            self.categories = v.iter().map(|c| Category::parse(c)).collect();
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = args.$field.clone() {
                    self.$field = v;
                }
            )*};
        }
        set!(from, to, holdout, level, max_p, max_q, max_seasonal_p, max_seasonal_q, constant, seed, out);
        if args.no_log {
            self.log = false;
        }
        if args.mean_corrected {
            self.mean_corrected = true;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.from >= self.to {
            return Err(CliError::Config(format!(
                "period start {} must precede end {}",
                self.from, self.to
            )));
        }
        if self.holdout < 1 {
            return Err(CliError::Config("holdout must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(CliError::Config(format!("level {} is outside (0, 1)", self.level)));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(CliError::Config(format!(
                "significance {} is outside (0, 1)",
                self.significance
            )));
        }
        Ok(())
    }

    pub fn input_path(&self) -> Result<&Path, CliError> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Config("no input file given (--input)".into()))
    }

    pub fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            schema: self.schema.clone(),
            from: self.from,
            to: self.to,
            categories: (!self.categories.is_empty()).then(|| self.categories.clone()),
        }
    }

    pub fn bounds(&self) -> SearchBounds {
        SearchBounds {
            max_p: self.max_p,
            max_q: self.max_q,
            max_seasonal_p: self.max_seasonal_p,
            max_seasonal_q: self.max_seasonal_q,
            ..SearchBounds::default()
        }
    }

    pub fn rule(&self) -> SelectionRule<f64> {
        SelectionRule {
            significance_level: self.significance,
            ..SelectionRule::default()
        }
    }

    pub fn fit_options(&self, include_mean: bool) -> FitOptions<f64> {
        FitOptions {
            include_mean,
            ..FitOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let c = PipelineConfig::default();
        assert_eq!(c.from.to_string(), "2005-01");
        assert_eq!(c.to.to_string(), "2019-12");
        assert_eq!(c.holdout, 6);
        assert_eq!(c.level, 0.9);
        assert_eq!((c.max_p, c.max_q, c.max_seasonal_p, c.max_seasonal_q), (3, 3, 2, 2));
        assert!(c.log);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn toml_round_trip_and_flags_win() {
        let text = r#"
            input = "data.csv"
            categories = ["Firearm", "Knife or cutting instrument"]
            from = "2006-01"
            holdout = 12
            max_P = 1
            log = false
            constant = "off"
            [schema]
            category = "Weapon"
        "#;
        let mut c = PipelineConfig::from_toml(text).unwrap();
        assert_eq!(c.categories, vec![Category::Firearm, Category::Knife]);
        assert_eq!(c.schema.category, "Weapon");
        assert_eq!(c.schema.year, "Year");
        assert_eq!(c.max_seasonal_p, 1);
        assert_eq!(c.holdout, 12);
        assert!(!c.log);
        let back = PipelineConfig::from_toml(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);

        let args = ConfigArgs {
            holdout: Some(3),
            max_seasonal_p: Some(2),
            constant: Some(ConstantMode::On),
            ..ConfigArgs::default()
        };
        c.apply(&args);
        assert_eq!(c.holdout, 3);
        assert_eq!(c.max_seasonal_p, 2);
        assert_eq!(c.constant, ConstantMode::On);
        assert_eq!(c.from.to_string(), "2006-01");
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(PipelineConfig::from_toml("unknown_key = 1").is_err());
        assert!(PipelineConfig::from_toml("from = \"2005-13\"").is_err());
        let mut c = PipelineConfig::default();
        c.level = 1.0;
        assert!(c.validate().is_err());
        c = PipelineConfig::default();
        c.holdout = 0;
        assert!(c.validate().is_err());
        c = PipelineConfig::default();
        c.to = c.from;
        assert!(c.validate().is_err());
    }
}
