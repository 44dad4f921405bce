//! Material law and damage accumulation: S-N curve, Palmgren-Miner
//! summation, time-indexed damage series, and equivalent damage load.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rainflow::Cycle;
use crate::signal::TimeSeries;

/// Whether the S-N stress variable `s` is a cycle amplitude or a
/// peak-to-peak range.
///
/// Counting methods conventionally feed amplitudes; the narrow-band
/// spectral rate is a range-based expression. Keeping the convention on
/// the curve makes the choice explicit at every damage evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SConvention {
    Amplitude,
    Range,
}

/// Power-law S-N (Wöhler) curve `s^k * N = K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SNCurve {
    k: f64,
    capacity: f64,
    s_convention: SConvention,
}

impl SNCurve {
    pub fn new(k: f64, capacity: f64, s_convention: SConvention) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!("k must be > 0, got {k}")));
        }
        if !(capacity > 0.0) || !capacity.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "K must be > 0, got {capacity}"
            )));
        }
        Ok(Self {
            k,
            capacity,
            s_convention,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// The capacity constant `K`.
    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn s_convention(&self) -> SConvention {
        self.s_convention
    }

    /// Stress value of a cycle under this curve's convention.
    pub fn stress_of(&self, cycle: &Cycle) -> f64 {
        match self.s_convention {
            SConvention::Amplitude => cycle.amplitude,
            SConvention::Range => cycle.range(),
        }
    }
}

/// Cycles to failure at stress level `s`: `N = K / s^k`.
pub fn cycles_to_failure(s: f64, sn: &SNCurve) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("stress must be > 0, got {s}")));
    }
    Ok(sn.capacity() / s.powf(sn.k()))
}

/// Total Palmgren-Miner damage of a cycle set: `D = sum w_i * s_i^k / K`.
///
/// Zero-amplitude cycles contribute nothing. An empty list gives 0.
pub fn miner_damage(cycles: &[Cycle], sn: &SNCurve) -> f64 {
    cycles
        .iter()
        .map(|c| {
            let s = sn.stress_of(c);
            if s > 0.0 {
                c.weight * s.powf(sn.k()) / sn.capacity()
            } else {
                0.0
            }
        })
        .sum()
}

/// Instantaneous and accumulated damage over a shared time axis.
///
/// `accumulated[i]` is the prefix sum of `increment[0..=i]`; increments are
/// nonnegative, so the accumulated curve never decreases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DamageSeries {
    t: Vec<f64>,
    increment: Vec<f64>,
    accumulated: Vec<f64>,
}

impl DamageSeries {
    pub fn new(t: Vec<f64>, increment: Vec<f64>) -> Result<Self> {
        if t.len() != increment.len() {
            return Err(Error::InvalidParameter(
                "time and increment lengths differ".into(),
            ));
        }
        if let Some(i) = increment.iter().position(|&d| !(d >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "negative or non-finite damage increment at {i}"
            )));
        }
        let mut running = 0.0;
        let accumulated = increment
            .iter()
            .map(|&d| {
                running += d;
                running
            })
            .collect();
        Ok(Self {
            t,
            increment,
            accumulated,
        })
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn increments(&self) -> &[f64] {
        &self.increment
    }

    pub fn accumulated(&self) -> &[f64] {
        &self.accumulated
    }

    /// Final accumulated damage (0 for an empty series).
    pub fn final_damage(&self) -> f64 {
        self.accumulated.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Multiplies every increment (and the accumulated curve) by `c`.
    pub fn scaled(&self, c: f64) -> DamageSeries {
        DamageSeries {
            t: self.t.clone(),
            increment: self.increment.iter().map(|d| d * c).collect(),
            accumulated: self.accumulated.iter().map(|d| d * c).collect(),
        }
    }

    /// CSV with columns `t,increment,accumulated`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,increment,accumulated")?;
        for i in 0..self.t.len() {
            writeln!(
                w,
                "{},{},{}",
                self.t[i], self.increment[i], self.accumulated[i]
            )?;
        }
        Ok(())
    }
}

/// Places each cycle's Miner increment at the time of its closing extremum,
/// zero elsewhere on the source time axis.
pub fn damage_series(cycles: &[Cycle], sn: &SNCurve, source: &TimeSeries) -> Result<DamageSeries> {
    let n = source.len();
    let mut increments = vec![0.0; n];
    for c in cycles {
        if c.end_idx >= n {
            return Err(Error::IndexOutOfRange {
                idx: c.end_idx,
                len: n,
            });
        }
        let s = sn.stress_of(c);
        if s > 0.0 {
            increments[c.end_idx] += c.weight * s.powf(sn.k()) / sn.capacity();
        }
    }
    DamageSeries::new(source.t().to_vec(), increments)
}

/// Equivalent damage load: the constant-amplitude stress at reference
/// frequency `f_eq` whose Miner damage over `duration` equals
/// `total_damage`. Returned in the curve's own stress convention.
pub fn edl(total_damage: f64, duration: f64, f_eq: f64, sn: &SNCurve) -> Result<f64> {
    if !(duration > 0.0) {
        return Err(Error::Domain(format!(
            "duration must be > 0, got {duration}"
        )));
    }
    if !(f_eq > 0.0) {
        return Err(Error::Domain(format!(
            "reference frequency must be > 0, got {f_eq}"
        )));
    }
    if !(total_damage >= 0.0) {
        return Err(Error::Domain(format!(
            "total damage must be >= 0, got {total_damage}"
        )));
    }
    if total_damage == 0.0 {
        return Ok(0.0);
    }
    Ok((sn.capacity() * total_damage / (f_eq * duration)).powf(1.0 / sn.k()))
}
