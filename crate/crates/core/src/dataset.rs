//! Monthly hydrologic records: CSV ingestion and export, summary statistics,
//! min-max standardization, synthetic series and the reference-year lake
//! level pattern.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

pub const MONTH_NAMES: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

/// Minimum record count for model training (two seasonal cycles).
pub const MIN_TRAINING_RECORDS: usize = 24;

/// Envelope expected for the lake-level constraint pattern of the measured record.
pub const HCON_ENVELOPE: (f64, f64) = (1270.3, 1270.8);

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("schema error: missing column \"{0}\"")]
    MissingColumn(String),
    #[error("parse error in row {row}, column \"{column}\": cannot read {value:?} as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("integrity error in row {row}: {reason}")]
    Integrity { row: usize, reason: String },
    #[error("integrity error in row {row}: duplicate record for {year}-{month:02}")]
    Duplicate { row: usize, year: i32, month: u32 },
    #[error("dataset is empty")]
    Empty,
    #[error("variable {0} has a degenerate range (max == min); cannot standardize")]
    DegenerateRange(Variable),
    #[error("variable {0} is not part of the scaler")]
    UnknownVariable(String),
    #[error("reference year {year} is incomplete: missing {}", .missing.join(", "))]
    Coverage { year: i32, missing: Vec<String> },
    #[error("size error: {0}")]
    Size(String),
}

/// The governing variables of the lake system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variable {
    /// Precipitation on the lake, mm.
    P,
    /// Total surface runoff into the lake, m³/s.
    R,
    /// Groundwater level of the adjacent aquifers, m a.m.s.l.
    G,
    /// Lake evaporation, mm.
    E,
    /// Agricultural use of river water, mm.
    Ur,
    /// Agricultural use of groundwater, mm.
    Ug,
    /// Lake water level, m a.m.s.l.
    H,
    /// Lake-level constraint pattern, m a.m.s.l.
    Hcon,
}

impl Variable {
    /// The eight columns of a record, in file order.
    pub const ALL: [Variable; 8] = [
        Variable::P,
        Variable::R,
        Variable::G,
        Variable::E,
        Variable::Ur,
        Variable::Ug,
        Variable::H,
        Variable::Hcon,
    ];
    /// Variables that every record carries.
    pub const OBSERVED: [Variable; 7] = [
        Variable::P,
        Variable::R,
        Variable::G,
        Variable::E,
        Variable::Ur,
        Variable::Ug,
        Variable::H,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::P => "P",
            Variable::R => "R",
            Variable::G => "G",
            Variable::E => "E",
            Variable::Ur => "Ur",
            Variable::Ug => "Ug",
            Variable::H => "H",
            Variable::Hcon => "Hcon",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Variable::P | Variable::E | Variable::Ur | Variable::Ug => "mm",
            Variable::R => "m3/s",
            Variable::G | Variable::H | Variable::Hcon => "m a.m.s.l",
        }
    }

    /// Whether the variable is a non-negative quantity (depths and flows).
    pub fn is_nonnegative(self) -> bool {
        matches!(
            self,
            Variable::P | Variable::R | Variable::E | Variable::Ur | Variable::Ug
        )
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variable {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variable::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| DatasetError::UnknownVariable(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthlyRecord {
    pub year: i32,
    pub month: u32,
    pub p: f64,
    pub r: f64,
    pub g: f64,
    pub e: f64,
    pub ur: f64,
    pub ug: f64,
    pub h: f64,
    pub hcon: Option<f64>,
}

impl MonthlyRecord {
    /// Value of `var`; `None` only for an absent `Hcon`.
    pub fn get(&self, var: Variable) -> Option<f64> {
        match var {
            Variable::P => Some(self.p),
            Variable::R => Some(self.r),
            Variable::G => Some(self.g),
            Variable::E => Some(self.e),
            Variable::Ur => Some(self.ur),
            Variable::Ug => Some(self.ug),
            Variable::H => Some(self.h),
            Variable::Hcon => self.hcon,
        }
    }

    fn set(&mut self, var: Variable, value: f64) {
        match var {
            Variable::P => self.p = value,
            Variable::R => self.r = value,
            Variable::G => self.g = value,
            Variable::E => self.e = value,
            Variable::Ur => self.ur = value,
            Variable::Ug => self.ug = value,
            Variable::H => self.h = value,
            Variable::Hcon => self.hcon = Some(value),
        }
    }

    /// Checks the per-record invariants, returning a human-readable reason on failure.
    pub fn validate(&self) -> Result<(), String> {
        if !(1..=12).contains(&self.month) {
            return Err(format!("month {} outside 1..=12", self.month));
        }
        for var in Variable::ALL {
            let Some(v) = self.get(var) else { continue };
            if !v.is_finite() {
                return Err(format!("{var} is not finite"));
            }
            if var.is_nonnegative() && v < 0.0 {
                return Err(format!("{var} = {v} is negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Measured,
    Synthetic,
}

/// Chronologically ordered monthly records with unique `(year, month)` keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesDataset {
    records: Vec<MonthlyRecord>,
    provenance: Provenance,
}

impl TimeSeriesDataset {
    pub fn new(
        mut records: Vec<MonthlyRecord>,
        provenance: Provenance,
    ) -> Result<Self, DatasetError> {
        for (i, rec) in records.iter().enumerate() {
            rec.validate()
                .map_err(|reason| DatasetError::Integrity { row: i + 1, reason })?;
        }
        records.sort_by_key(|r| (r.year, r.month));
        if let Some(w) = records
            .windows(2)
            .find(|w| (w[0].year, w[0].month) == (w[1].year, w[1].month))
        {
            return Err(DatasetError::Duplicate {
                row: 0,
                year: w[1].year,
                month: w[1].month,
            });
        }
        Ok(Self {
            records,
            provenance,
        })
    }

    pub fn records(&self) -> &[MonthlyRecord] {
        &self.records
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// All values of `var`, skipping records where it is absent.
    pub fn column(&self, var: Variable) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.get(var)).collect()
    }

    /// Records of one calendar month across all years.
    pub fn month(&self, month: u32) -> impl Iterator<Item = &MonthlyRecord> {
        self.records.iter().filter(move |r| r.month == month)
    }
}

/// Maps each logical field onto a CSV header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub year: String,
    pub month: String,
    pub variables: BTreeMap<Variable, String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            year: "year".into(),
            month: "month".into(),
            variables: Variable::ALL
                .iter()
                .map(|v| (*v, v.name().to_string()))
                .collect(),
        }
    }
}

/// Reads a dataset from a CSV file. Lines starting with `#` are comments.
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &CsvSchema,
) -> Result<TimeSeriesDataset, DatasetError> {
    let path = path.as_ref();
    let io_err = |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut text = String::new();
    File::open(path)
        .map_err(io_err)?
        .read_to_string(&mut text)
        .map_err(io_err)?;
    parse_csv(&text, schema)
}

/// Parses CSV text; see [`load_csv`].
pub fn parse_csv(text: &str, schema: &CsvSchema) -> Result<TimeSeriesDataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DatasetError::Csv(e.to_string()))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let year_col =
        find(&schema.year).ok_or_else(|| DatasetError::MissingColumn(schema.year.clone()))?;
    let month_col =
        find(&schema.month).ok_or_else(|| DatasetError::MissingColumn(schema.month.clone()))?;
    let mut var_cols = Vec::new();
    for var in Variable::ALL {
        let name = schema
            .variables
            .get(&var)
            .cloned()
            .unwrap_or_else(|| var.name().to_string());
        match find(&name) {
            Some(idx) => var_cols.push((var, name, idx)),
            None if var == Variable::Hcon => {}
            None => return Err(DatasetError::MissingColumn(name)),
        }
    }

    let mut records: Vec<(usize, MonthlyRecord)> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| DatasetError::Csv(e.to_string()))?;
        let cell = |idx: usize| row.get(idx).unwrap_or("");
        let parse_err = |column: &str, value: &str| DatasetError::Parse {
            row: row_no,
            column: column.to_string(),
            value: value.to_string(),
        };
        let year: i32 = cell(year_col)
            .parse()
            .map_err(|_| parse_err(&schema.year, cell(year_col)))?;
        let month: u32 = cell(month_col)
            .parse()
            .map_err(|_| parse_err(&schema.month, cell(month_col)))?;
        let mut rec = MonthlyRecord {
            year,
            month,
            p: 0.0,
            r: 0.0,
            g: 0.0,
            e: 0.0,
            ur: 0.0,
            ug: 0.0,
            h: 0.0,
            hcon: None,
        };
        for (var, name, idx) in &var_cols {
            let raw = cell(*idx);
            if raw.is_empty() && *var == Variable::Hcon {
                continue;
            }
            let value: f64 = raw.parse().map_err(|_| parse_err(name, raw))?;
            rec.set(*var, value);
        }
        rec.validate().map_err(|reason| DatasetError::Integrity {
            row: row_no,
            reason,
        })?;
        records.push((row_no, rec));
    }

    let mut seen = BTreeMap::new();
    for (row_no, rec) in &records {
        if seen.insert((rec.year, rec.month), *row_no).is_some() {
            return Err(DatasetError::Duplicate {
                row: *row_no,
                year: rec.year,
                month: rec.month,
            });
        }
    }
    TimeSeriesDataset::new(
        records.into_iter().map(|(_, r)| r).collect(),
        Provenance::Measured,
    )
}

/// Canonical decimal rendering used by every CSV this crate writes: six
/// significant digits, positional notation for magnitudes in `[1e-3, 1e7]`,
/// scientific notation otherwise.
pub fn format_value(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs();
    if !(1e-3..=1e7).contains(&mag) {
        return format!("{x:.5e}");
    }
    let exponent = mag.log10().floor() as i32;
    let decimals = (5 - exponent).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding may carry into the next decade (9.999996 -> 10.00000).
    let digits = s
        .chars()
        .filter(|c| c.is_ascii_digit())
        .skip_while(|c| *c == '0')
        .count();
    if digits > 6 && decimals > 0 {
        let decimals = decimals - 1;
        format!("{x:.decimals$}")
    } else {
        s
    }
}

/// Rounds `x` to its canonical CSV representation.
pub fn canonicalize(x: f64) -> f64 {
    format_value(x).parse().unwrap_or(x)
}

/// Renders a dataset as CSV, optionally preceded by `#` comment lines.
pub fn to_csv_string(ds: &TimeSeriesDataset, comment: Option<&str>) -> String {
    let with_hcon = ds.records.iter().any(|r| r.hcon.is_some());
    let mut out = String::new();
    if let Some(c) = comment {
        for line in c.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out.push_str("year,month,P,R,G,E,Ur,Ug,H");
    if with_hcon {
        out.push_str(",Hcon");
    }
    out.push('\n');
    for r in &ds.records {
        let vals = [r.p, r.r, r.g, r.e, r.ur, r.ug, r.h].map(format_value);
        out.push_str(&format!("{},{},{}", r.year, r.month, vals.join(",")));
        if with_hcon {
            out.push(',');
            if let Some(h) = r.hcon {
                out.push_str(&format_value(h));
            }
        }
        out.push('\n');
    }
    out
}

pub fn save_csv(ds: &TimeSeriesDataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    write_text(path.as_ref(), &to_csv_string(ds, None))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    File::create(path)
        .map_err(io_err)?
        .write_all(text.as_bytes())
        .map_err(io_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

impl VarStats {
    /// Min, max, mean and sample standard deviation (n − 1 denominator;
    /// zero for a single value).
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = (values.iter().sum::<f64>() / n).clamp(min, max);
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(Self {
            min,
            max,
            mean,
            std,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub count: usize,
    pub variables: BTreeMap<Variable, VarStats>,
}

impl FeatureStats {
    pub fn get(&self, var: Variable) -> Option<&VarStats> {
        self.variables.get(&var)
    }

    /// Summary statistics of the measured 2001–2019 basin record, used as
    /// synthesis bounds when that record is not at hand.
    pub fn reference() -> Self {
        let row = |min, max, mean, std| VarStats {
            min,
            max,
            mean,
            std,
        };
        let variables = BTreeMap::from([
            (Variable::P, row(0.00, 173.00, 25.31, 29.86)),
            (Variable::R, row(0.10, 686.78, 59.72, 98.92)),
            (Variable::G, row(1295.5, 1298.8, 1297.2, 0.848)),
            (Variable::E, row(0.36, 293.23, 95.27, 84.12)),
            (Variable::Ur, row(18.86, 241.64, 103.71, 74.37)),
            (Variable::Ug, row(0.00, 46.52, 17.93, 18.45)),
            (Variable::H, row(1270.0, 1274.6, 1272.0, 1.34)),
            (Variable::Hcon, row(1270.3, 1270.8, 1270.5, 0.205)),
        ]);
        Self {
            count: 228,
            variables,
        }
    }
}

/// Per-variable summary statistics. `Hcon` is summarized only when present.
pub fn compute_stats(ds: &TimeSeriesDataset) -> Result<FeatureStats, DatasetError> {
    if ds.is_empty() {
        return Err(DatasetError::Empty);
    }
    let variables = Variable::ALL
        .iter()
        .filter_map(|v| VarStats::from_values(&ds.column(*v)).map(|s| (*v, s)))
        .collect();
    Ok(FeatureStats {
        count: ds.len(),
        variables,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRange {
    pub variable: Variable,
    pub min: f64,
    pub max: f64,
}

/// Min-max standardization onto `[0, 1]`. Values outside the fitted range
/// map outside `[0, 1]` without error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    ranges: Vec<ScaleRange>,
}

impl Scaler {
    pub fn from_stats(stats: &FeatureStats, variables: &[Variable]) -> Result<Self, DatasetError> {
        let ranges = variables
            .iter()
            .map(|&variable| {
                let s = stats
                    .get(variable)
                    .ok_or_else(|| DatasetError::UnknownVariable(variable.to_string()))?;
                if !(s.max > s.min) {
                    return Err(DatasetError::DegenerateRange(variable));
                }
                Ok(ScaleRange {
                    variable,
                    min: s.min,
                    max: s.max,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { ranges })
    }

    pub fn ranges(&self) -> &[ScaleRange] {
        &self.ranges
    }

    pub fn range(&self, var: Variable) -> Result<&ScaleRange, DatasetError> {
        self.ranges
            .iter()
            .find(|r| r.variable == var)
            .ok_or_else(|| DatasetError::UnknownVariable(var.to_string()))
    }

    pub fn apply(&self, var: Variable, x: f64) -> Result<f64, DatasetError> {
        let r = self.range(var)?;
        Ok((x - r.min) / (r.max - r.min))
    }

    pub fn inverse(&self, var: Variable, z: f64) -> Result<f64, DatasetError> {
        let r = self.range(var)?;
        Ok(r.min + z * (r.max - r.min))
    }

    pub fn apply_vector(&self, vars: &[Variable], xs: &[f64]) -> Result<Vec<f64>, DatasetError> {
        vars.iter()
            .zip(xs)
            .map(|(v, x)| self.apply(*v, *x))
            .collect()
    }

    pub fn inverse_vector(&self, vars: &[Variable], zs: &[f64]) -> Result<Vec<f64>, DatasetError> {
        vars.iter()
            .zip(zs)
            .map(|(v, z)| self.inverse(*v, *z))
            .collect()
    }

    /// Standardized values of `vars` for one record.
    pub fn apply_record(
        &self,
        rec: &MonthlyRecord,
        vars: &[Variable],
    ) -> Result<Vec<f64>, DatasetError> {
        vars.iter()
            .map(|v| {
                let x = rec
                    .get(*v)
                    .ok_or_else(|| DatasetError::UnknownVariable(v.to_string()))?;
                self.apply(*v, x)
            })
            .collect()
    }

    /// Standardized matrix (one row per record) of `vars`.
    pub fn apply_dataset(
        &self,
        ds: &TimeSeriesDataset,
        vars: &[Variable],
    ) -> Result<Vec<Vec<f64>>, DatasetError> {
        ds.records()
            .iter()
            .map(|r| self.apply_record(r, vars))
            .collect()
    }
}

/// Fits a [`Scaler`] on the observed range of each listed variable.
pub fn fit_scaler(ds: &TimeSeriesDataset, variables: &[Variable]) -> Result<Scaler, DatasetError> {
    Scaler::from_stats(&compute_stats(ds)?, variables)
}

/// Seasonal shape of one synthetic driver in standardized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonalShape {
    pub amplitude: f64,
    /// Month (1–12, fractional allowed) of the seasonal maximum.
    pub peak_month: f64,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub start_year: i32,
    /// Weight of the standard-normal noise term in the planted lake level.
    pub level_noise: f64,
    pub p: SeasonalShape,
    pub r: SeasonalShape,
    pub g: SeasonalShape,
    pub e: SeasonalShape,
    pub ur: SeasonalShape,
    pub ug: SeasonalShape,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let shape = |amplitude, peak_month, noise_sd| SeasonalShape {
            amplitude,
            peak_month,
            noise_sd,
        };
        Self {
            start_year: 2001,
            level_noise: 0.05,
            p: shape(0.15, 4.0, 0.15),
            r: shape(0.20, 5.0, 0.15),
            g: shape(0.20, 5.5, 0.12),
            e: shape(0.30, 7.0, 0.15),
            ur: shape(0.30, 7.0, 0.15),
            ug: shape(0.30, 7.5, 0.15),
        }
    }
}

/// The noise-free planted lake level in standardized units. G and R
/// dominate, E acts negatively and P enters only through its interaction
/// with R.
pub fn planted_level(p: f64, r: f64, g: f64, e: f64) -> f64 {
    0.45 * g + 0.35 * r - 0.10 * e + 0.05 * (p * r)
}

/// Synthetic monthly series with the default [`SynthConfig`].
pub fn synthesize_dataset(
    stats: &FeatureStats,
    n_years: usize,
    seed: u64,
) -> Result<TimeSeriesDataset, DatasetError> {
    synthesize_with(stats, n_years, seed, &SynthConfig::default())
}

/// Seeded seasonal sinusoids plus Gaussian noise for the six drivers,
/// clipped to the bounds in `stats`; the lake level follows
/// [`planted_level`]. All values are rounded to their canonical CSV form so
/// that a save/load cycle is lossless.
pub fn synthesize_with(
    stats: &FeatureStats,
    n_years: usize,
    seed: u64,
    cfg: &SynthConfig,
) -> Result<TimeSeriesDataset, DatasetError> {
    if n_years < 2 {
        return Err(DatasetError::Size(format!(
            "synthesis needs at least 2 years, got {n_years}"
        )));
    }
    for var in Variable::OBSERVED {
        stats
            .get(var)
            .ok_or_else(|| DatasetError::UnknownVariable(var.to_string()))?;
    }
    let mut rng = rng::seeded(seed, 0);
    let mut noise = move || -> f64 { rng.sample(StandardNormal) };
    let unscale = |var: Variable, z: f64| {
        let s = stats.get(var).expect("checked above");
        let x = s.min + z.clamp(0.0, 1.0) * (s.max - s.min);
        canonicalize(x.clamp(s.min, s.max)).clamp(s.min, s.max)
    };

    let mut records = Vec::with_capacity(n_years * 12);
    for y in 0..n_years {
        for month in 1..=12u32 {
            let mut driver = |shape: &SeasonalShape| {
                let phase = 2.0 * std::f64::consts::PI * (month as f64 - shape.peak_month) / 12.0;
                (0.5 + shape.amplitude * phase.cos() + shape.noise_sd * noise()).clamp(0.0, 1.0)
            };
            let p = driver(&cfg.p);
            let r = driver(&cfg.r);
            let g = driver(&cfg.g);
            let e = driver(&cfg.e);
            let ur = driver(&cfg.ur);
            let ug = driver(&cfg.ug);
            // always drawn so the drivers do not depend on `level_noise`
            let h = planted_level(p, r, g, e) + cfg.level_noise * noise();
            records.push(MonthlyRecord {
                year: cfg.start_year + y as i32,
                month,
                p: unscale(Variable::P, p),
                r: unscale(Variable::R, r),
                g: unscale(Variable::G, g),
                e: unscale(Variable::E, e),
                ur: unscale(Variable::Ur, ur),
                ug: unscale(Variable::Ug, ug),
                h: unscale(Variable::H, h),
                hcon: None,
            });
        }
    }
    TimeSeriesDataset::new(records, Provenance::Synthetic)
}

/// Lake level of each month of `reference_year`, January first.
pub fn monthly_constraint_pattern(
    ds: &TimeSeriesDataset,
    reference_year: i32,
) -> Result<[f64; 12], DatasetError> {
    let mut levels = [f64::NAN; 12];
    for rec in ds.records().iter().filter(|r| r.year == reference_year) {
        levels[rec.month as usize - 1] = rec.h;
    }
    let missing: Vec<String> = levels
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_nan())
        .map(|(m, _)| MONTH_NAMES[m].to_string())
        .collect();
    if !missing.is_empty() {
        return Err(DatasetError::Coverage {
            year: reference_year,
            missing,
        });
    }
    if ds.provenance() == Provenance::Measured {
        let (lo, hi) = HCON_ENVELOPE;
        let outside: Vec<&str> = levels
            .iter()
            .zip(MONTH_NAMES)
            .filter(|(h, _)| !(lo..=hi).contains(*h))
            .map(|(_, name)| name)
            .collect();
        if !outside.is_empty() {
            log::warn!(
                "{reference_year} levels outside the expected constraint envelope [{lo}, {hi}] in {}",
                outside.join(", ")
            );
        }
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(year: i32, month: u32, p: f64) -> MonthlyRecord {
        MonthlyRecord {
            year,
            month,
            p,
            r: 10.0,
            g: 1297.0,
            e: 50.0,
            ur: 100.0,
            ug: 10.0,
            h: 1272.0,
            hcon: None,
        }
    }

    fn reference_scaler(vars: &[Variable]) -> Scaler {
        Scaler::from_stats(&FeatureStats::reference(), vars).unwrap()
    }

    #[test]
    fn stats_two_records() {
        let ds = TimeSeriesDataset::new(
            vec![record(2001, 1, 0.0), record(2001, 2, 10.0)],
            Provenance::Measured,
        )
        .unwrap();
        let s = compute_stats(&ds).unwrap();
        let p = s.get(Variable::P).unwrap();
        assert_eq!((p.min, p.max, p.mean), (0.0, 10.0, 5.0));
        // sample std of {0, 10}
        assert!((p.std - 50f64.sqrt()).abs() < 1e-12);
        assert!(s.get(Variable::Hcon).is_none());
    }

    #[test]
    fn stats_single_record_is_degenerate() {
        let ds = TimeSeriesDataset::new(vec![record(2001, 3, 7.5)], Provenance::Measured).unwrap();
        let s = compute_stats(&ds).unwrap();
        for var in Variable::OBSERVED {
            let v = s.get(var).unwrap();
            let x = ds.records()[0].get(var).unwrap();
            assert_eq!((v.min, v.max, v.mean, v.std), (x, x, x, 0.0));
        }
    }

    #[test]
    fn stats_empty_errors() {
        let ds = TimeSeriesDataset::new(vec![], Provenance::Measured).unwrap();
        assert!(matches!(compute_stats(&ds), Err(DatasetError::Empty)));
    }

    #[test]
    fn scaler_reference_level_points() {
        let s = reference_scaler(&[Variable::H, Variable::R]);
        assert_eq!(s.apply(Variable::H, 1270.0).unwrap(), 0.0);
        assert_eq!(s.apply(Variable::H, 1274.6).unwrap(), 1.0);
        assert!((s.apply(Variable::H, 1272.0).unwrap() - 0.43478).abs() < 1e-5);
        // (59.72 - 0.10) / 686.68
        assert!((s.apply(Variable::R, 59.72).unwrap() - 0.086_823_5).abs() < 1e-6);
    }

    #[test]
    fn scaler_out_of_range_passes_through() {
        let s = reference_scaler(&[Variable::H]);
        assert!(s.apply(Variable::H, 1269.0).unwrap() < 0.0);
        assert!(s.apply(Variable::H, 1280.0).unwrap() > 1.0);
    }

    #[test]
    fn scaler_unknown_variable() {
        let s = reference_scaler(&[Variable::H]);
        assert!(matches!(
            s.apply(Variable::P, 1.0),
            Err(DatasetError::UnknownVariable(_))
        ));
    }

    #[test]
    fn scaler_constant_column_errors() {
        let ds = TimeSeriesDataset::new(
            vec![record(2001, 1, 1.0), record(2001, 2, 2.0)],
            Provenance::Measured,
        )
        .unwrap();
        match fit_scaler(&ds, &[Variable::P, Variable::R]) {
            Err(DatasetError::DegenerateRange(Variable::R)) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scaler_fitted_data_in_unit_interval() {
        let ds = synthesize_dataset(&FeatureStats::reference(), 5, 3).unwrap();
        let s = fit_scaler(&ds, &Variable::OBSERVED).unwrap();
        for row in s.apply_dataset(&ds, &Variable::OBSERVED).unwrap() {
            assert!(row.iter().all(|z| (0.0..=1.0).contains(z)));
        }
    }

    proptest! {
        #[test]
        fn scaler_round_trip(x in 1270.0f64..1274.6, r in 0.1f64..686.78) {
            let s = reference_scaler(&[Variable::H, Variable::R]);
            let back = s.inverse_vector(&[Variable::H, Variable::R], &s.apply_vector(&[Variable::H, Variable::R], &[x, r]).unwrap()).unwrap();
            prop_assert!((back[0] - x).abs() <= 1e-12 * x.abs().max(1.0));
            prop_assert!((back[1] - r).abs() <= 1e-12 * r.abs().max(1.0));
        }

        #[test]
        fn canonical_values_are_fixed_points(x in -1e8f64..1e8) {
            let c = canonicalize(x);
            prop_assert_eq!(format_value(c), format_value(x));
            prop_assert_eq!(canonicalize(c), c);
        }
    }

    #[test]
    fn format_value_six_significant_digits() {
        assert_eq!(format_value(1272.0), "1272.00");
        assert_eq!(format_value(0.1), "0.100000");
        assert_eq!(format_value(686.78), "686.780");
        assert_eq!(format_value(9.999_999), "10.0000");
        assert_eq!(format_value(-0.001), "-0.00100000");
        assert_eq!(format_value(1.5e-4), "1.50000e-4");
        assert_eq!(format_value(0.0), "0");
    }

    #[test]
    fn csv_month_13_is_rejected_with_row() {
        let mut text = String::from("year,month,P,R,G,E,Ur,Ug,H\n");
        for m in 1..=6 {
            text.push_str(&format!("2001,{m},1,2,1297,50,100,10,1272\n"));
        }
        text.push_str("2001,13,1,2,1297,50,100,10,1272\n");
        match parse_csv(&text, &CsvSchema::default()) {
            Err(DatasetError::Integrity { row: 7, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_missing_column_named() {
        let text = "year,month,P,R,G,Ur,Ug,H\n2001,1,1,2,1297,100,10,1272\n";
        match parse_csv(text, &CsvSchema::default()) {
            Err(DatasetError::MissingColumn(c)) => assert_eq!(c, "E"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_parse_error_has_row_and_column() {
        let text = "year,month,P,R,G,E,Ur,Ug,H\n2001,1,1,2,1297,50,100,10,1272\n2001,2,1,x,1297,50,100,10,1272\n";
        match parse_csv(text, &CsvSchema::default()) {
            Err(DatasetError::Parse { row: 2, column, .. }) => assert_eq!(column, "R"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_duplicate_key() {
        let text = "year,month,P,R,G,E,Ur,Ug,H\n2001,1,1,2,1297,50,100,10,1272\n2001,1,1,2,1297,50,100,10,1272\n";
        assert!(matches!(
            parse_csv(text, &CsvSchema::default()),
            Err(DatasetError::Duplicate {
                row: 2,
                year: 2001,
                month: 1
            })
        ));
    }

    #[test]
    fn csv_renamed_columns_and_optional_hcon() {
        let mut schema = CsvSchema::default();
        schema.variables.insert(Variable::P, "precip".into());
        let text = "year,month,precip,R,G,E,Ur,Ug,H,Hcon\n2001,2,1,2,1297,50,100,10,1272,\n2001,1,3,2,1297,50,100,10,1272,1270.5\n";
        let ds = parse_csv(text, &schema).unwrap();
        assert_eq!(ds.records()[0].month, 1);
        assert_eq!(ds.records()[0].p, 3.0);
        assert_eq!(ds.records()[0].hcon, Some(1270.5));
        assert_eq!(ds.records()[1].hcon, None);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let ds = synthesize_dataset(&FeatureStats::reference(), 3, 11).unwrap();
        let text = to_csv_string(&ds, Some("generated for a test"));
        let back = parse_csv(&text, &CsvSchema::default()).unwrap();
        assert_eq!(back.records(), ds.records());
        assert_eq!(to_csv_string(&back, Some("generated for a test")), text);
    }

    #[test]
    fn synth_is_deterministic_and_bounded() {
        let stats = FeatureStats::reference();
        let a = synthesize_dataset(&stats, 19, 42).unwrap();
        let b = synthesize_dataset(&stats, 19, 42).unwrap();
        let c = synthesize_dataset(&stats, 19, 43).unwrap();
        assert_eq!(a.len(), 228);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let s = compute_stats(&a).unwrap();
        for var in Variable::OBSERVED {
            let (got, want) = (s.get(var).unwrap(), stats.get(var).unwrap());
            assert!(got.min >= want.min && got.max <= want.max, "{var}");
        }
    }

    #[test]
    fn synth_needs_two_years() {
        assert!(matches!(
            synthesize_dataset(&FeatureStats::reference(), 1, 1),
            Err(DatasetError::Size(_))
        ));
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn synth_level_tracks_planted_drivers() {
        let stats = FeatureStats::reference();
        for seed in 1..=20 {
            let ds = synthesize_dataset(&stats, 19, seed).unwrap();
            let h = ds.column(Variable::H);
            let mut corr: Vec<(f64, Variable)> = [
                Variable::P,
                Variable::R,
                Variable::G,
                Variable::E,
                Variable::Ur,
                Variable::Ug,
            ]
            .iter()
            .map(|v| (pearson(&ds.column(*v), &h).abs(), *v))
            .collect();
            corr.sort_by(|a, b| b.0.total_cmp(&a.0));
            let top: std::collections::BTreeSet<_> = corr[..2].iter().map(|c| c.1).collect();
            assert_eq!(
                top,
                [Variable::R, Variable::G].into(),
                "seed {seed}: {corr:?}"
            );
        }
    }

    #[test]
    fn constraint_pattern_from_reference_year() {
        let ds = synthesize_dataset(&FeatureStats::reference(), 19, 42).unwrap();
        let pattern = monthly_constraint_pattern(&ds, 2018).unwrap();
        let year: Vec<f64> = ds
            .records()
            .iter()
            .filter(|r| r.year == 2018)
            .map(|r| r.h)
            .collect();
        assert_eq!(pattern.to_vec(), year);
        let spread = |v: &[f64]| {
            v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - v.iter().copied().fold(f64::INFINITY, f64::min)
        };
        assert!(spread(&pattern) <= spread(&year));
    }

    #[test]
    fn constraint_pattern_missing_june() {
        let recs: Vec<_> = (1..=12)
            .filter(|m| *m != 6)
            .map(|m| record(2018, m, 1.0))
            .collect();
        let ds = TimeSeriesDataset::new(recs, Provenance::Measured).unwrap();
        match monthly_constraint_pattern(&ds, 2018) {
            Err(DatasetError::Coverage { missing, .. }) => {
                assert_eq!(missing, vec!["June".to_string()])
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
