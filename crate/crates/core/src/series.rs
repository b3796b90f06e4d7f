//! Observation and forecast series, CSV ingestion and pairing.
//!
//! Ingestion keeps one row per valid observation. Forecast cells that are
//! empty, `NaN` or infinite are kept as `NaN` and removed later by [`pair`],
//! so every forecast column is evaluated on its own valid rows.
//!
//! Lags are counted in rows. Timestamps are validated but never used in any
//! computation; irregular sampling is the caller's business.

use std::cmp::Ordering;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};

use crate::error::{Error, Result};

/// Name of the optional timestamp column.
pub const TIME_COLUMN: &str = "time";

/// A row timestamp: either an integer index or an ISO-8601 instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timestamp {
    Index(i64),
    Instant(NaiveDateTime),
}

impl Timestamp {
    pub fn parse(raw: &str) -> Option<Timestamp> {
        let raw = raw.trim();
        if let Ok(i) = raw.parse::<i64>() {
            return Some(Timestamp::Index(i));
        }
        if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
            return Some(Timestamp::Instant(dt.naive_utc()));
        }
        for fmt in [
            "%Y-%m-%dT%H:%M:%S%.f",
            "%Y-%m-%d %H:%M:%S%.f",
            "%Y-%m-%dT%H:%M",
            "%Y-%m-%d %H:%M",
        ] {
            if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
                return Some(Timestamp::Instant(dt));
            }
        }
        NaiveDate::parse_from_str(raw, "%Y-%m-%d")
            .ok()
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .map(Timestamp::Instant)
    }

    fn partial_cmp_same_kind(&self, other: &Timestamp) -> Option<Ordering> {
        match (self, other) {
            (Timestamp::Index(a), Timestamp::Index(b)) => Some(a.cmp(b)),
            (Timestamp::Instant(a), Timestamp::Instant(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }
}

/// Verification ground truth: finite observation values, optionally timestamped.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    values: Vec<f64>,
    timestamps: Option<Vec<Timestamp>>,
}

impl ObservationSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::NoValidRows);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ObservationSeries {
            values,
            timestamps: None,
        })
    }

    pub fn with_timestamps(values: Vec<f64>, timestamps: Vec<Timestamp>) -> Result<Self> {
        let mut series = Self::new(values)?;
        if timestamps.len() != series.values.len() {
            return Err(Error::LengthMismatch {
                left: series.values.len(),
                right: timestamps.len(),
            });
        }
        check_increasing(&timestamps)?;
        series.timestamps = Some(timestamps);
        Ok(series)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn timestamps(&self) -> Option<&[Timestamp]> {
        self.timestamps.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_increasing(timestamps: &[Timestamp]) -> Result<()> {
    for (i, w) in timestamps.windows(2).enumerate() {
        if w[0].partial_cmp_same_kind(&w[1]) != Some(Ordering::Less) {
            return Err(Error::NonMonotonicTime { row: i + 1 });
        }
    }
    Ok(())
}

/// A named forecast column, index-aligned to the observation rows.
///
/// Missing entries are stored as `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSeries {
    pub name: String,
    pub values: Vec<f64>,
}

impl ForecastSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        ForecastSeries {
            name: name.into(),
            values,
        }
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_finite()).count()
    }
}

/// Aligned `(forecast, observation)` pairs. Every value is finite and `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    f: Vec<f64>,
    x: Vec<f64>,
    dropped: usize,
}

impl PairedSeries {
    pub fn new(f: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if f.len() != x.len() {
            return Err(Error::LengthMismatch {
                left: f.len(),
                right: x.len(),
            });
        }
        if f.is_empty() {
            return Err(Error::NoValidRows);
        }
        if f.iter().chain(&x).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(PairedSeries { f, x, dropped: 0 })
    }

    pub fn forecast(&self) -> &[f64] {
        &self.f
    }

    pub fn observed(&self) -> &[f64] {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    /// Rows excluded while pairing.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Splits into a leading training part and a trailing evaluation part.
    ///
    /// Both parts must be non-empty.
    pub fn split(&self, train_fraction: f64) -> Result<(PairedSeries, PairedSeries)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        let cut = (self.n() as f64 * train_fraction).round() as usize;
        if cut == 0 || cut >= self.n() {
            return Err(Error::TooShort {
                len: self.n(),
                needed: 2,
            });
        }
        let head = PairedSeries::new(self.f[..cut].to_vec(), self.x[..cut].to_vec())?;
        let tail = PairedSeries::new(self.f[cut..].to_vec(), self.x[cut..].to_vec())?;
        Ok((head, tail))
    }
}

/// Pairs a forecast column with the observations, dropping invalid forecast rows.
pub fn pair(obs: &ObservationSeries, fcst: &ForecastSeries) -> Result<PairedSeries> {
    if obs.len() != fcst.values.len() {
        return Err(Error::LengthMismatch {
            left: obs.len(),
            right: fcst.values.len(),
        });
    }
    let (f, x): (Vec<f64>, Vec<f64>) = fcst
        .values
        .iter()
        .zip(obs.values())
        .filter(|(f, _)| f.is_finite())
        .map(|(&f, &x)| (f, x))
        .unzip();
    if f.is_empty() {
        return Err(Error::NoValidRows);
    }
    let dropped = obs.len() - f.len();
    Ok(PairedSeries { f, x, dropped })
}

/// Pairs `(x[t-h], x[t])` for `t = h..n`, with the lagged value in the forecast slot.
pub fn lag_pairs(obs: &ObservationSeries, h: usize) -> Result<PairedSeries> {
    if h == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let n = obs.len();
    if n < h + 2 {
        return Err(Error::TooShort {
            len: n,
            needed: h + 2,
        });
    }
    let v = obs.values();
    Ok(PairedSeries {
        f: v[..n - h].to_vec(),
        x: v[h..].to_vec(),
        dropped: 0,
    })
}

/// Row accounting for one ingestion.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_dropped: usize,
    /// Observation column followed by the forecast columns.
    pub columns: Vec<String>,
    pub qc_threshold_applied: Option<f64>,
    /// Invalid cells per forecast column, among the kept rows.
    pub forecast_missing: Vec<usize>,
    /// Zero-based data-row index of every kept row.
    pub kept_rows: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub observations: ObservationSeries,
    pub forecasts: Vec<ForecastSeries>,
    pub report: IngestReport,
}

/// Reads a CSV file. See [`ingest_reader`].
pub fn ingest_csv(
    path: impl AsRef<Path>,
    obs_col: &str,
    fcst_cols: &[String],
    qc_min_obs: Option<f64>,
) -> Result<Ingested> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ingest_reader(file, obs_col, fcst_cols, qc_min_obs)
}

/// Parses a numeric cell. Empty, `NaN` and infinite cells are missing (`None`).
pub fn parse_cell(raw: &str) -> std::result::Result<Option<f64>, ()> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        Ok(_) => Ok(None),
        Err(_) => Err(()),
    }
}

/// Ingests a header-first CSV table.
///
/// An empty `fcst_cols` selects every column other than `obs_col` and `time`.
/// Rows whose observation is missing or below `qc_min_obs` are dropped.
pub fn ingest_reader<R: Read>(
    reader: R,
    obs_col: &str,
    fcst_cols: &[String],
    qc_min_obs: Option<f64>,
) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    for (i, h) in headers.iter().enumerate() {
        if headers[..i].contains(h) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let obs_idx = find(obs_col)?;
    let time_idx = headers.iter().position(|h| h == TIME_COLUMN);
    let fcst_names: Vec<String> = if fcst_cols.is_empty() {
        headers
            .iter()
            .filter(|h| h.as_str() != obs_col && h.as_str() != TIME_COLUMN)
            .cloned()
            .collect()
    } else {
        for (i, c) in fcst_cols.iter().enumerate() {
            if fcst_cols[..i].contains(c) {
                return Err(Error::DuplicateColumn(c.clone()));
            }
        }
        fcst_cols.to_vec()
    };
    let fcst_idx = fcst_names
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;

    let mut rows_read = 0;
    let mut kept_rows = Vec::new();
    let mut obs = Vec::new();
    let mut times = Vec::new();
    let mut all_times: Vec<Timestamp> = Vec::new();
    let mut fcst: Vec<Vec<f64>> = vec![Vec::new(); fcst_idx.len()];

    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        rows_read += 1;
        let cell = |idx: usize| record.get(idx).unwrap_or("");
        let numeric = |idx: usize| {
            parse_cell(cell(idx)).map_err(|_| Error::Parse {
                row: row + 1,
                column: headers[idx].clone(),
                value: cell(idx).to_string(),
            })
        };

        if let Some(t) = time_idx {
            let ts = Timestamp::parse(cell(t)).ok_or_else(|| Error::Parse {
                row: row + 1,
                column: TIME_COLUMN.to_string(),
                value: cell(t).to_string(),
            })?;
            if let Some(prev) = all_times.last() {
                if prev.partial_cmp_same_kind(&ts) != Some(Ordering::Less) {
                    return Err(Error::NonMonotonicTime { row: row + 1 });
                }
            }
            all_times.push(ts);
        }

        let x = numeric(obs_idx)?;
        let values = fcst_idx
            .iter()
            .map(|&i| numeric(i))
            .collect::<Result<Vec<_>>>()?;
        let keep = match (x, qc_min_obs) {
            (None, _) => false,
            (Some(x), Some(floor)) => x >= floor,
            (Some(_), None) => true,
        };
        if !keep {
            continue;
        }
        kept_rows.push(row);
        obs.push(x.unwrap_or(f64::NAN));
        if let Some(ts) = all_times.last() {
            times.push(*ts);
        }
        for (col, v) in fcst.iter_mut().zip(values) {
            col.push(v.unwrap_or(f64::NAN));
        }
    }

    if obs.is_empty() {
        return Err(Error::NoValidRows);
    }
    let observations = if time_idx.is_some() {
        ObservationSeries::with_timestamps(obs, times)?
    } else {
        ObservationSeries::new(obs)?
    };
    let forecasts: Vec<ForecastSeries> = fcst_names
        .iter()
        .zip(fcst)
        .map(|(name, values)| ForecastSeries::new(name.clone(), values))
        .collect();
    let mut columns = vec![obs_col.to_string()];
    columns.extend(fcst_names);
    let report = IngestReport {
        rows_read,
        rows_dropped: rows_read - kept_rows.len(),
        columns,
        qc_threshold_applied: qc_min_obs,
        forecast_missing: forecasts
            .iter()
            .map(|f| f.values.len() - f.valid_count())
            .collect(),
        kept_rows,
    };
    Ok(Ingested {
        observations,
        forecasts,
        report,
    })
}
