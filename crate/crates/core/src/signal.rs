//! Load-history ingestion, turning-point extraction, and level discretization.
//!
//! Every estimator in this crate consumes either a raw [`TimeSeries`] or its
//! alternating-extrema skeleton [`TurningPoints`]. Turning points are a
//! sufficient statistic for rate-independent damage: the cycle content of a
//! load history depends only on the sequence of extrema, never on how fast
//! the signal moves between them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sampled load history: strictly increasing time stamps paired with
/// finite load values (stress, bending moment, force — units are the
/// caller's business).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    t: Vec<f64>,
    v: Vec<f64>,
    label: String,
}

impl TimeSeries {
    /// Validates and wraps a time/value pair.
    ///
    /// Requires at least 2 samples, strictly increasing time, and finite
    /// values on both axes.
    pub fn new(t: Vec<f64>, v: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if t.len() != v.len() {
            return Err(Error::InvalidParameter(format!(
                "time and value lengths differ: {} vs {}",
                t.len(),
                v.len()
            )));
        }
        if t.len() < 2 {
            return Err(Error::TooFewSamples {
                need: 2,
                got: t.len(),
            });
        }
        for (i, (&ti, &vi)) in t.iter().zip(v.iter()).enumerate() {
            if !ti.is_finite() || !vi.is_finite() {
                return Err(Error::NonFiniteValue { row: i });
            }
            if i > 0 && ti <= t[i - 1] {
                return Err(Error::NonMonotoneTime { row: i });
            }
        }
        Ok(Self {
            t,
            v,
            label: label.into(),
        })
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Total spanned time.
    pub fn duration(&self) -> f64 {
        self.t[self.t.len() - 1] - self.t[0]
    }

    /// Sampling interval, if uniform within the given relative tolerance.
    pub fn uniform_dt(&self, rel_tol: f64) -> Result<f64> {
        let dt0 = self.t[1] - self.t[0];
        for w in self.t.windows(2) {
            let dt = w[1] - w[0];
            if (dt - dt0).abs() > rel_tol * dt0.abs() {
                return Err(Error::NonUniformSampling(format!(
                    "step {dt} deviates from {dt0}"
                )));
            }
        }
        Ok(dt0)
    }

    /// Sample mean.
    pub fn mean(&self) -> f64 {
        self.v.iter().sum::<f64>() / self.v.len() as f64
    }

    /// Population variance (divides by n).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / self.v.len() as f64
    }
}

/// Alternating local extrema of a load history, endpoints included.
///
/// Invariants: values strictly alternate in direction, no two consecutive
/// values are equal, and indices into the source series strictly increase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurningPoints {
    idx: Vec<usize>,
    v: Vec<f64>,
    source_len: usize,
}

impl TurningPoints {
    /// Builds directly from pre-extracted extrema, re-validating the
    /// alternation invariants.
    pub fn new(idx: Vec<usize>, v: Vec<f64>, source_len: usize) -> Result<Self> {
        if idx.len() != v.len() {
            return Err(Error::InvalidParameter(
                "index and value lengths differ".into(),
            ));
        }
        for i in 1..idx.len() {
            if idx[i] <= idx[i - 1] {
                return Err(Error::InvalidParameter(format!(
                    "indices not strictly increasing at {i}"
                )));
            }
            if v[i] == v[i - 1] {
                return Err(Error::InvalidParameter(format!(
                    "consecutive equal values at {i}"
                )));
            }
        }
        for i in 2..v.len() {
            let d1 = v[i - 1] - v[i - 2];
            let d2 = v[i] - v[i - 1];
            if d1.signum() == d2.signum() {
                return Err(Error::InvalidParameter(format!(
                    "values do not alternate at {i}"
                )));
            }
        }
        Ok(Self { idx, v, source_len })
    }

    pub fn idx(&self) -> &[usize] {
        &self.idx
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }
}

/// Uniform discretization grid over a closed load interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelGrid {
    n_levels: usize,
    lo: f64,
    hi: f64,
}

impl LevelGrid {
    pub fn new(n_levels: usize, lo: f64, hi: f64) -> Result<Self> {
        if n_levels == 0 {
            return Err(Error::InvalidParameter("n_levels must be positive".into()));
        }
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "grid bounds must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { n_levels, lo, hi })
    }

    /// Grid spanning the value range of a series, padded by nothing.
    pub fn covering(values: &[f64], n_levels: usize) -> Result<Self> {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Empty("cannot build grid over empty values".into()));
        }
        if lo == hi {
            // Constant signal: widen so the single level has a bin.
            return Self::new(n_levels, lo - 0.5, hi + 0.5);
        }
        Self::new(n_levels, lo, hi)
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.n_levels as f64
    }

    /// The `n_levels + 1` uniform bin edges.
    pub fn edges(&self) -> Vec<f64> {
        let w = self.bin_width();
        (0..=self.n_levels).map(|i| self.lo + i as f64 * w).collect()
    }

    /// Center value of bin `i`.
    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.bin_width()
    }

    /// All bin centers in order.
    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_levels).map(|i| self.center(i)).collect()
    }

    /// Bin index containing `v`. The right edge is inclusive in the last
    /// bin; interior edges belong to the bin on their right.
    pub fn bin_of(&self, v: f64, index: usize) -> Result<usize> {
        if v < self.lo || v > self.hi {
            return Err(Error::OutOfGrid {
                index,
                value: v,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let raw = ((v - self.lo) / self.bin_width()).floor() as usize;
        Ok(raw.min(self.n_levels - 1))
    }
}

/// A turning-point sequence reduced to grid-bin indices, alternation intact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTpSeries {
    bins: Vec<usize>,
    n_levels: usize,
}

impl DiscreteTpSeries {
    pub fn new(bins: Vec<usize>, n_levels: usize) -> Result<Self> {
        if let Some(&bad) = bins.iter().find(|&&b| b >= n_levels) {
            return Err(Error::InvalidParameter(format!(
                "bin index {bad} outside 0..{n_levels}"
            )));
        }
        Ok(Self { bins, n_levels })
    }

    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Maps bin indices back to continuous values at the bin centers.
    pub fn to_values(&self, grid: &LevelGrid) -> Vec<f64> {
        self.bins.iter().map(|&b| grid.center(b)).collect()
    }
}

/// Selects a CSV column either by 0-based position or by header name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnSpec {
    Index(usize),
    Name(String),
}

/// CSV parsing options for [`load_series`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvOptions {
    pub time: ColumnSpec,
    pub value: ColumnSpec,
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            time: ColumnSpec::Index(0),
            value: ColumnSpec::Index(1),
            delimiter: b',',
            has_header: true,
        }
    }
}

/// Reads a two-column load history from a CSV file.
///
/// Rows are parsed in order; the first offending row aborts the load with
/// its 1-based line number.
pub fn load_series(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<TimeSeries> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .delimiter(opts.delimiter)
        .flexible(true)
        .from_path(path)?;

    let resolve = |spec: &ColumnSpec, headers: Option<&csv::StringRecord>| -> Result<usize> {
        match spec {
            ColumnSpec::Index(i) => Ok(*i),
            ColumnSpec::Name(name) => {
                let headers = headers.ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "column '{name}' selected by name but the file has no header"
                    ))
                })?;
                headers
                    .iter()
                    .position(|h| h.trim() == name)
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!("column '{name}' not found in header"))
                    })
            }
        }
    };

    let headers = if opts.has_header {
        Some(reader.headers()?.clone())
    } else {
        None
    };
    let t_col = resolve(&opts.time, headers.as_ref())?;
    let v_col = resolve(&opts.value, headers.as_ref())?;

    let mut t = Vec::new();
    let mut v = Vec::new();
    let header_lines = usize::from(opts.has_header);
    for (i, record) in reader.records().enumerate() {
        let line = i + 1 + header_lines;
        let record = record?;
        let parse = |col: usize| -> Result<f64> {
            let field = record.get(col).ok_or_else(|| Error::MalformedRow {
                line,
                detail: format!("missing column {col}"),
            })?;
            field.trim().parse::<f64>().map_err(|e| Error::MalformedRow {
                line,
                detail: format!("cannot parse '{field}': {e}"),
            })
        };
        t.push(parse(t_col)?);
        v.push(parse(v_col)?);
    }

    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".to_string());
    TimeSeries::new(t, v, label)
}

/// Reduces a value sequence (paired with source indices) to alternating
/// extrema: equal neighbors collapse to the first index, interior points of
/// monotone runs drop out, and the first and last samples always survive.
fn alternating_extrema(values: &[f64], indices: &[usize]) -> (Vec<usize>, Vec<f64>) {
    debug_assert_eq!(values.len(), indices.len());
    if values.is_empty() {
        return (Vec::new(), Vec::new());
    }

    let mut out_idx = vec![indices[0]];
    let mut out_v = vec![values[0]];
    // Direction of the last accepted movement: +1 up, -1 down, 0 unknown.
    let mut dir = 0i8;

    for (&vi, &ii) in values.iter().zip(indices.iter()).skip(1) {
        let last = *out_v.last().unwrap();
        let step = (vi - last).signum();
        if step == 0.0 {
            continue; // plateau: keep the first index
        }
        let step = if step > 0.0 { 1i8 } else { -1i8 };
        if step == dir {
            // Monotone run continues: the previous point was not an extremum.
            *out_idx.last_mut().unwrap() = ii;
            *out_v.last_mut().unwrap() = vi;
        } else {
            out_idx.push(ii);
            out_v.push(vi);
            dir = step;
        }
    }
    (out_idx, out_v)
}

/// Deletes adjacent turning-point pairs whose range falls below
/// `min_range`, smallest range first, until every remaining flank is at
/// least `min_range`. Endpoints are never deleted; a sub-threshold flank
/// touching an endpoint drops its interior member only.
fn racetrack_filter(
    mut idx: Vec<usize>,
    mut v: Vec<f64>,
    min_range: f64,
) -> (Vec<usize>, Vec<f64>) {
    if min_range <= 0.0 {
        return (idx, v);
    }
    loop {
        if v.len() < 2 {
            return (idx, v);
        }
        // Smallest adjacent range.
        let (mut best_i, mut best_r) = (0usize, f64::INFINITY);
        for i in 0..v.len() - 1 {
            let r = (v[i + 1] - v[i]).abs();
            if r < best_r {
                best_r = r;
                best_i = i;
            }
        }
        if best_r >= min_range {
            return (idx, v);
        }
        let last = v.len() - 1;
        if best_i == 0 && best_i + 1 == last {
            // Only two points left and their range is sub-threshold; both
            // are endpoints, nothing more to delete.
            return (idx, v);
        }
        if best_i == 0 {
            idx.remove(1);
            v.remove(1);
        } else if best_i + 1 == last {
            idx.remove(best_i);
            v.remove(best_i);
        } else {
            idx.remove(best_i + 1);
            v.remove(best_i + 1);
            idx.remove(best_i);
            v.remove(best_i);
        }
        let (ri, rv) = alternating_extrema(&v, &idx);
        idx = ri;
        v = rv;
    }
}

/// Extracts the alternating turning points of a series.
///
/// `min_range` applies a racetrack-style small-cycle filter: extrema pairs
/// spanning less than `min_range` are removed by repeated pairwise deletion.
/// `min_range = 0` keeps every extremum. A monotone series yields exactly
/// its two endpoints; a constant series collapses to a single point.
pub fn extract_turning_points(s: &TimeSeries, min_range: f64) -> Result<TurningPoints> {
    if min_range < 0.0 {
        return Err(Error::InvalidParameter(
            "min_range must be nonnegative".into(),
        ));
    }
    let indices: Vec<usize> = (0..s.len()).collect();
    let (idx, v) = alternating_extrema(s.values(), &indices);
    let (idx, v) = racetrack_filter(idx, v, min_range);
    TurningPoints::new(idx, v, s.len())
}

/// Re-extracts turning points from an existing skeleton (used by the
/// idempotence property and by pipelines that post-filter).
pub fn refine_turning_points(tp: &TurningPoints, min_range: f64) -> Result<TurningPoints> {
    let (idx, v) = alternating_extrema(tp.values(), tp.idx());
    let (idx, v) = racetrack_filter(idx, v, min_range);
    TurningPoints::new(idx, v, tp.source_len())
}

/// Maps turning points onto grid bins, merging consecutive equal bins and
/// re-enforcing alternation by dropping dominated points.
pub fn discretize(tp: &TurningPoints, grid: &LevelGrid) -> Result<DiscreteTpSeries> {
    let mut bins = Vec::with_capacity(tp.len());
    for (i, &v) in tp.values().iter().enumerate() {
        bins.push(grid.bin_of(v, i)? as f64);
    }
    let indices: Vec<usize> = (0..bins.len()).collect();
    let (_, merged) = alternating_extrema(&bins, &indices);
    DiscreteTpSeries::new(
        merged.into_iter().map(|b| b as usize).collect(),
        grid.n_levels(),
    )
}
