//! Reading delimited monthly count records and aggregating them statewide.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use sarima_core::{MonthStamp, Series, TimeSeries};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::CliError;

/// Weapon category. Unrecognized labels pass through unchanged.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Firearm,
    Knife,
    OtherWeapon,
    Hands,
    Other(String),
}

impl Category {
    pub const STANDARD: [Category; 4] = [
        Category::Firearm,
        Category::Knife,
        Category::OtherWeapon,
        Category::Hands,
    ];

    /// Accepts the canonical names and the long labels used by the public
    /// dataset ("Knife or cutting instrument", "Hands, fist, feet", ...).
    pub fn parse(label: &str) -> Self {
        let key: String = label
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        match key.as_str() {
            "firearm" | "firearms" | "gun" | "guns" => Category::Firearm,
            k if k.starts_with("knife") => Category::Knife,
            "other" | "otherweapon" | "otherweapons" | "otherdangerousweapon" => Category::OtherWeapon,
            k if k.starts_with("hands") || k == "personalweapons" => Category::Hands,
            _ => Category::Other(label.trim().to_string()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Category::Firearm => "Firearm",
            Category::Knife => "Knife",
            Category::OtherWeapon => "OtherWeapon",
            Category::Hands => "Hands",
            Category::Other(s) => s,
        }
    }

    /// File-name friendly form of the name.
    pub fn slug(&self) -> String {
        self.name()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
            .collect()
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Category::parse(&s))
    }
}

/// Column names of the input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schema {
    pub year: String,
    pub month: String,
    pub category: String,
    pub count: String,
    /// Jurisdiction column; summed over and otherwise ignored.
    pub county: String,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            year: "Year".into(),
            month: "Month".into(),
            category: "Category".into(),
            count: "Count".into(),
            county: "County".into(),
        }
    }
}

impl FromStr for Schema {
    type Err = CliError;

    /// Parses `key=Column` pairs separated by commas, e.g.
    /// `year=YEAR,category=Weapon`. Unmentioned keys keep their defaults.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut schema = Schema::default();
        for pair in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, column) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Schema(format!("expected key=column, got '{pair}'")))?;
            let column = column.trim().to_string();
            match key.trim().to_lowercase().as_str() {
                "year" => schema.year = column,
                "month" => schema.month = column,
                "category" => schema.category = column,
                "count" => schema.count = column,
                "county" => schema.county = column,
                other => return Err(CliError::Schema(format!("unknown schema key '{other}'"))),
            }
        }
        Ok(schema)
    }
}

struct Columns {
    year: usize,
    month: usize,
    category: usize,
    count: usize,
}

impl Schema {
    fn resolve(&self, headers: &csv::StringRecord) -> Result<Columns, CliError> {
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(name))
                .ok_or_else(|| CliError::Schema(format!("column '{name}' not found in header")))
        };
        Ok(Columns {
            year: find(&self.year)?,
            month: find(&self.month)?,
            category: find(&self.category)?,
            count: find(&self.count)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    pub schema: Schema,
    pub from: MonthStamp,
    pub to: MonthStamp,
    /// `None` keeps every category present in the file.
    pub categories: Option<Vec<Category>>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            schema: Schema::default(),
            from: MonthStamp::new(2005, 1).expect("valid"),
            to: MonthStamp::new(2019, 12).expect("valid"),
            categories: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub series: BTreeMap<Category, Series>,
    pub records_read: usize,
    /// Records inside the period, over all categories.
    pub records_used: usize,
    /// Calendar-year totals inside the period, over all categories.
    pub annual_totals: BTreeMap<i32, u64>,
}

fn parse_month(s: &str) -> Option<u32> {
    let s = s.trim();
    if let Ok(m) = s.parse::<u32>() {
        return Some(m);
    }
    const NAMES: [&str; 12] = [
        "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
    ];
    let lower = s.to_lowercase();
    NAMES
        .iter()
        .position(|n| lower.len() >= 3 && lower.starts_with(n))
        .map(|i| i as u32 + 1)
}

pub fn ingest(path: &Path, opts: &IngestOptions) -> Result<Dataset, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    ingest_reader(file, opts)
}

pub fn ingest_reader<R: Read>(reader: R, opts: &IngestOptions) -> Result<Dataset, CliError> {
    if opts.from >= opts.to {
        return Err(CliError::Config(format!(
            "period start {} is not before end {}",
            opts.from, opts.to
        )));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let cols = opts.schema.resolve(&headers)?;

    let wanted: Option<BTreeSet<&Category>> = opts.categories.as_ref().map(|c| c.iter().collect());
    let mut sums: BTreeMap<Category, BTreeMap<MonthStamp, u64>> = BTreeMap::new();
    let mut annual_totals = BTreeMap::new();
    let mut records_read = 0;
    let mut records_used = 0;

    for row in rdr.records() {
        let record = row.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        records_read += 1;
        let field = |i: usize| record.get(i).unwrap_or("");
        let parse_err = |what: &str, value: &str| CliError::Parse {
            line,
            message: format!("invalid {what} '{value}'"),
        };
        let year: i32 = field(cols.year)
            .parse()
            .map_err(|_| parse_err("year", field(cols.year)))?;
        let month = parse_month(field(cols.month)).ok_or_else(|| parse_err("month", field(cols.month)))?;
        let stamp = MonthStamp::new(year, month).map_err(|_| parse_err("month", field(cols.month)))?;
        let raw_count = field(cols.count).replace(['_', ' '], "");
        let count: i64 = raw_count
            .parse()
            .map_err(|_| parse_err("count", field(cols.count)))?;
        if count < 0 {
            return Err(CliError::NegativeCount { line, count });
        }
        let label = field(cols.category);
        if label.is_empty() {
            return Err(parse_err("category", label));
        }
        if stamp < opts.from || stamp > opts.to {
            continue;
        }
        records_used += 1;
        *annual_totals.entry(year).or_insert(0) += count as u64;
        let category = Category::parse(label);
        if wanted.as_ref().is_some_and(|w| !w.contains(&category)) {
            continue;
        }
        *sums.entry(category).or_default().entry(stamp).or_insert(0) += count as u64;
    }

    let categories: Vec<Category> = match &opts.categories {
        Some(c) => c.clone(),
        None => sums.keys().cloned().collect(),
    };
    if categories.is_empty() {
        return Err(CliError::Data("no records inside the configured period".into()));
    }
    let months = opts.from.months_until(&opts.to) + 1;
    let mut series = BTreeMap::new();
    for category in categories {
        let by_month = sums.get(&category);
        let mut values = Vec::with_capacity(months as usize);
        for i in 0..months {
            let month = opts.from.advance(i);
            match by_month.and_then(|m| m.get(&month)) {
                Some(&v) => values.push(v as f64),
                None => {
                    return Err(CliError::MissingMonth {
                        category: category.name().to_string(),
                        month,
                    })
                }
            }
        }
        let ts = TimeSeries::new(opts.from, values).map_err(|e| CliError::Data(e.to_string()))?;
        series.insert(category, ts);
    }
    Ok(Dataset {
        series,
        records_read,
        records_used,
        annual_totals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(from: (i32, u32), to: (i32, u32)) -> IngestOptions {
        IngestOptions {
            from: MonthStamp::new(from.0, from.1).unwrap(),
            to: MonthStamp::new(to.0, to.1).unwrap(),
            ..IngestOptions::default()
        }
    }

    #[test]
    fn category_labels() {
        assert_eq!(Category::parse("Knife or cutting instrument"), Category::Knife);
        assert_eq!(Category::parse("Hands, fist, feet"), Category::Hands);
        assert_eq!(Category::parse("Other weapon"), Category::OtherWeapon);
        assert_eq!(Category::parse(" FIREARM "), Category::Firearm);
        assert_eq!(Category::parse("Poison"), Category::Other("Poison".into()));
        assert_eq!(Category::parse("Other weapon").slug(), "otherweapon");
    }

    #[test]
    fn jurisdictions_are_summed() {
        let csv = "Year,Month,County,Category,Count\n\
                   2010,1,A,Firearm,3\n2010,1,B,Firearm,4\n\
                   2010,2,A,Firearm,1\n2010,2,B,Firearm,0\n";
        let d = ingest_reader(csv.as_bytes(), &opts((2010, 1), (2010, 2))).unwrap();
        assert_eq!(d.series[&Category::Firearm].values(), &[7.0, 1.0]);
        assert_eq!(d.records_used, 4);
        assert_eq!(d.annual_totals[&2010], 8);
    }

    #[test]
    fn gap_month_is_named() {
        let csv = "Year,Month,Category,Count\n2010,1,Knife,3\n2010,3,Knife,4\n";
        let err = ingest_reader(csv.as_bytes(), &opts((2010, 1), (2010, 3))).unwrap_err();
        match err {
            CliError::MissingMonth { category, month } => {
                assert_eq!(category, "Knife");
                assert_eq!(month.to_string(), "2010-02");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = "Year,Month,Category,Count\n2010,1,Knife,3\n2010,x,Knife,4\n";
        let err = ingest_reader(csv.as_bytes(), &opts((2010, 1), (2010, 2))).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 3, .. }), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn negative_count_is_rejected() {
        let csv = "Year,Month,Category,Count\n2010,1,Knife,-3\n";
        let err = ingest_reader(csv.as_bytes(), &opts((2010, 1), (2010, 2))).unwrap_err();
        assert!(matches!(err, CliError::NegativeCount { line: 2, count: -3 }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn period_and_category_filters() {
        let csv = "Year,Month,Category,Count\n\
                   2009,12,Knife,100\n2010,1,Knife,1\n2010,Feb,Knife,2\n2010,1,Hands,5\n2010,2,Hands,6\n";
        let mut o = opts((2010, 1), (2010, 2));
        o.categories = Some(vec![Category::Knife]);
        let d = ingest_reader(csv.as_bytes(), &o).unwrap();
        assert_eq!(d.series.len(), 1);
        assert_eq!(d.series[&Category::Knife].values(), &[1.0, 2.0]);
        assert_eq!(d.records_read, 5);
        assert_eq!(d.annual_totals[&2010], 14);
        assert!(!d.annual_totals.contains_key(&2009));
    }

    #[test]
    fn schema_mapping() {
        let schema: Schema = "year=YR, month=MO, category=Weapon, count=N".parse().unwrap();
        let csv = "YR,MO,Weapon,N\n2010,1,Knife,3\n2010,2,Knife,4\n";
        let o = IngestOptions {
            schema,
            ..opts((2010, 1), (2010, 2))
        };
        let d = ingest_reader(csv.as_bytes(), &o).unwrap();
        assert_eq!(d.series[&Category::Knife].values(), &[3.0, 4.0]);
        let err = ingest_reader(csv.as_bytes(), &opts((2010, 1), (2010, 2))).unwrap_err();
        assert!(matches!(err, CliError::Schema(_)));
        assert!("bogus=X".parse::<Schema>().is_err());
    }
}
