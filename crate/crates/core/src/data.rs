//! CSV ingestion: generic column-mapped loading, plus the weekly
//! cardiovascular mortality series with its standard design matrix.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::TimeSeriesData;

/// Maps CSV columns onto the response and the two design matrices.
/// Intercept columns of ones are prepended when the flags are set.
#[derive(Debug, Clone)]
pub struct ColumnMapping {
    pub y: String,
    pub x: Vec<String>,
    pub w: Vec<String>,
    pub x_intercept: bool,
    pub w_intercept: bool,
}

impl ColumnMapping {
    /// Response column only; both designs are a lone intercept.
    pub fn response_only(y: &str) -> Self {
        ColumnMapping {
            y: y.to_string(),
            x: Vec::new(),
            w: Vec::new(),
            x_intercept: true,
            w_intercept: true,
        }
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Config(format!("column '{name}' not found in CSV header")))
}

fn parse_cell(record: &csv::StringRecord, idx: usize, name: &str, row: usize) -> Result<f64> {
    let raw = record.get(idx).ok_or_else(|| Error::DataRow {
        row,
        message: format!("column '{name}' is missing"),
    })?;
    raw.trim().parse::<f64>().map_err(|_| Error::DataRow {
        row,
        message: format!("column '{name}': cannot parse '{raw}' as a number"),
    })
}

/// Loads a headered CSV into a validated dataset. Row numbers in errors
/// count data rows from 1, excluding the header.
pub fn load_csv(path: &Path, mapping: &ColumnMapping) -> Result<TimeSeriesData> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("cannot read CSV header: {e}")))?
        .clone();
    let y_idx = column_index(&headers, &mapping.y)?;
    let x_idx: Vec<usize> = mapping
        .x
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<_>>()?;
    let w_idx: Vec<usize> = mapping
        .w
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<_>>()?;

    let mut y = Vec::new();
    let mut x_rows: Vec<Vec<f64>> = Vec::new();
    let mut w_rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::DataRow {
            row,
            message: format!("malformed CSV record: {e}"),
        })?;
        y.push(parse_cell(&record, y_idx, &mapping.y, row)?);
        x_rows.push(
            x_idx
                .iter()
                .zip(&mapping.x)
                .map(|(idx, name)| parse_cell(&record, *idx, name, row))
                .collect::<Result<_>>()?,
        );
        w_rows.push(
            w_idx
                .iter()
                .zip(&mapping.w)
                .map(|(idx, name)| parse_cell(&record, *idx, name, row))
                .collect::<Result<_>>()?,
        );
    }

    let n = y.len();
    if n == 0 {
        return Err(Error::Data(format!("{} has no data rows", path.display())));
    }
    let assemble = |rows: &[Vec<f64>], intercept: bool, width: usize| -> DMatrix<f64> {
        let extra = intercept as usize;
        DMatrix::from_fn(n, width + extra, |i, j| {
            if intercept && j == 0 {
                1.0
            } else {
                rows[i][j - extra]
            }
        })
    };
    let x = assemble(&x_rows, mapping.x_intercept, mapping.x.len());
    let w = assemble(&w_rows, mapping.w_intercept, mapping.w.len());
    TimeSeriesData::new(y, x, w)
}

/// Raw columns of the weekly cardiovascular mortality series: deaths,
/// temperature, particulate pollution.
#[derive(Debug, Clone)]
pub struct MortalityRaw {
    pub cmort: Vec<f64>,
    pub tempr: Vec<f64>,
    pub part: Vec<f64>,
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Loads and fingerprints the mortality CSV (columns cmort, tempr, part).
/// The summary statistics of the death counts are checked so a wrong or
/// corrupted file is rejected up front.
pub fn load_mortality_csv(path: &Path) -> Result<MortalityRaw> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("cannot read CSV header: {e}")))?
        .clone();
    let c_idx = column_index(&headers, "cmort")?;
    let t_idx = column_index(&headers, "tempr")?;
    let p_idx = column_index(&headers, "part")?;

    let mut cmort = Vec::new();
    let mut tempr = Vec::new();
    let mut part = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::DataRow {
            row,
            message: format!("malformed CSV record: {e}"),
        })?;
        cmort.push(parse_cell(&record, c_idx, "cmort", row)?);
        tempr.push(parse_cell(&record, t_idx, "tempr", row)?);
        part.push(parse_cell(&record, p_idx, "part", row)?);
    }

    let n = cmort.len();
    if n != 508 {
        return Err(Error::Data(format!(
            "expected 508 weekly observations, found {n}"
        )));
    }
    let mut sorted = cmort.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let min = sorted[0];
    let max = sorted[n - 1];
    let median = median_of_sorted(&sorted);
    let mean = cmort.iter().sum::<f64>() / n as f64;
    let checks = [
        ("minimum", min, 68.11, 0.01),
        ("median", median, 87.33, 0.01),
        ("mean", mean, 88.699, 0.005),
        ("maximum", max, 132.04, 0.01),
    ];
    for (what, got, want, tol) in checks {
        if (got - want).abs() > tol {
            return Err(Error::Data(format!(
                "mortality column fingerprint mismatch: {what} is {got}, expected {want}"
            )));
        }
    }
    Ok(MortalityRaw { cmort, tempr, part })
}

/// Time axis for the trend regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendScale {
    /// 1970 + i/52 with i counting weeks from zero.
    CalendarYears,
    /// Week numbers 1, 2, 3, ...
    WeekIndex,
}

#[derive(Debug, Clone)]
pub struct MortalityDesign {
    pub center_temperature: bool,
    pub trend: TrendScale,
}

impl Default for MortalityDesign {
    fn default() -> Self {
        MortalityDesign {
            center_temperature: true,
            trend: TrendScale::CalendarYears,
        }
    }
}

/// Builds the mortality regression dataset: location design
/// [1, trend, temp, temp^2, part] and intercept-only dispersion design.
/// Temperature is mean-centered by default so its square is close to
/// orthogonal to its level.
pub fn build_mortality_design(
    raw: &MortalityRaw,
    design: &MortalityDesign,
) -> Result<TimeSeriesData> {
    let n = raw.cmort.len();
    if raw.tempr.len() != n || raw.part.len() != n {
        return Err(Error::Dimension(
            "mortality columns have unequal lengths".into(),
        ));
    }
    let t_mean = raw.tempr.iter().sum::<f64>() / n as f64;
    let shift = if design.center_temperature { t_mean } else { 0.0 };
    let x = DMatrix::from_fn(n, 5, |i, j| {
        let temp = raw.tempr[i] - shift;
        match j {
            0 => 1.0,
            1 => match design.trend {
                TrendScale::CalendarYears => 1970.0 + i as f64 / 52.0,
                TrendScale::WeekIndex => (i + 1) as f64,
            },
            2 => temp,
            3 => temp * temp,
            _ => raw.part[i],
        }
    });
    let w = DMatrix::from_element(n, 1, 1.0);
    TimeSeriesData::new(raw.cmort.clone(), x, w)
}
