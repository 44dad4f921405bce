//! Rainflow cycle extraction and rainflow-matrix construction.
//!
//! The counter uses the four-point (Madelung) rule: whenever the innermost
//! of three consecutive ranges is no larger than its neighbors, that range
//! closes a full cycle and its two extrema are deleted. Deletion pairs
//! commute under this rule, so the count is the symmetric rainflow count.
//! Whatever survives the scan is the residual, counted as half cycles.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{LevelGrid, TurningPoints};

/// One counted fatigue cycle.
///
/// `weight` is 1.0 for a closed (full) cycle and 0.5 for a half cycle from
/// the residual. `start_idx`/`end_idx` point at the causing extrema in the
/// source series; the closing extremum (`end_idx`) carries the damage
/// timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub amplitude: f64,
    pub mean: f64,
    pub weight: f64,
    pub start_idx: usize,
    pub end_idx: usize,
}

impl Cycle {
    fn from_pair(a: (usize, f64), b: (usize, f64), weight: f64) -> Self {
        let (start, end) = if a.0 < b.0 { (a, b) } else { (b, a) };
        Cycle {
            amplitude: (a.1 - b.1).abs() / 2.0,
            mean: (a.1 + b.1) / 2.0,
            weight,
            start_idx: start.0,
            end_idx: end.0,
        }
    }

    /// Peak-to-peak range (twice the amplitude).
    pub fn range(&self) -> f64 {
        2.0 * self.amplitude
    }

    pub fn min(&self) -> f64 {
        self.mean - self.amplitude
    }

    pub fn max(&self) -> f64 {
        self.mean + self.amplitude
    }
}

/// Extracts rainflow cycles from a turning-point sequence.
///
/// Interior closed loops come out with weight 1.0 in extraction order; the
/// residual follows as weight-0.5 half cycles in time order. Fewer than two
/// turning points yield an empty list.
pub fn count_cycles(tp: &TurningPoints) -> Vec<Cycle> {
    let mut cycles = Vec::new();
    let mut stack: Vec<(usize, f64)> = Vec::with_capacity(tp.len().min(64));

    for (&i, &v) in tp.idx().iter().zip(tp.values().iter()) {
        stack.push((i, v));
        while stack.len() >= 4 {
            let n = stack.len();
            let r_outer = (stack[n - 4].1 - stack[n - 3].1).abs();
            let r_inner = (stack[n - 3].1 - stack[n - 2].1).abs();
            let r_newest = (stack[n - 2].1 - stack[n - 1].1).abs();
            if r_inner <= r_outer && r_inner <= r_newest {
                let b = stack[n - 3];
                let c = stack[n - 2];
                cycles.push(Cycle::from_pair(b, c, 1.0));
                stack.remove(n - 2);
                stack.remove(n - 3);
            } else {
                break;
            }
        }
    }

    for w in stack.windows(2) {
        cycles.push(Cycle::from_pair(w[0], w[1], 0.5));
    }
    cycles
}

/// Binned cycle counts indexed by (min level, max level); strictly upper
/// triangular because every cycle's minimum sits below its maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RainflowMatrix {
    counts: Vec<Vec<f64>>,
    grid: LevelGrid,
}

impl RainflowMatrix {
    /// Zero matrix over the given grid.
    pub fn zeros(grid: LevelGrid) -> Self {
        let n = grid.n_levels();
        RainflowMatrix {
            counts: vec![vec![0.0; n]; n],
            grid,
        }
    }

    pub fn grid(&self) -> &LevelGrid {
        &self.grid
    }

    pub fn n_levels(&self) -> usize {
        self.grid.n_levels()
    }

    /// Count at (min bin, max bin).
    pub fn count(&self, min_bin: usize, max_bin: usize) -> f64 {
        self.counts[min_bin][max_bin]
    }

    pub fn counts(&self) -> &[Vec<f64>] {
        &self.counts
    }

    /// Sum of all binned cycle weights.
    pub fn total(&self) -> f64 {
        self.counts.iter().flatten().sum()
    }

    /// Adds weight at a (min, max) bin pair. Rejects diagonal or lower
    /// triangle placements.
    pub fn add(&mut self, min_bin: usize, max_bin: usize, weight: f64) -> Result<()> {
        if max_bin <= min_bin {
            return Err(Error::InvalidParameter(format!(
                "rainflow matrix entry ({min_bin}, {max_bin}) not strictly upper triangular"
            )));
        }
        let n = self.n_levels();
        if max_bin >= n {
            return Err(Error::IndexOutOfRange { idx: max_bin, len: n });
        }
        self.counts[min_bin][max_bin] += weight;
        Ok(())
    }

    /// True when every entry on or below the diagonal is zero.
    pub fn is_strictly_upper_triangular(&self) -> bool {
        self.counts
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().take(i + 1).all(|&c| c == 0.0))
    }

    /// Writes the dense count matrix as CSV, one row per min bin.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for row in &self.counts {
            let line: Vec<String> = row.iter().map(|c| format!("{c}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// JSON with the grid and dense counts.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: RainflowMatrix = serde_json::from_str(s)?;
        if m.counts.len() != m.grid.n_levels()
            || m.counts.iter().any(|r| r.len() != m.grid.n_levels())
        {
            return Err(Error::InvalidParameter(
                "rainflow matrix shape does not match grid".into(),
            ));
        }
        Ok(m)
    }
}

/// Bins cycles into a rainflow matrix at (bin(min), bin(max)).
///
/// Cycles whose min and max land in the same bin are below the grid
/// resolution and are skipped; everything representable keeps its weight.
pub fn build_rfm(cycles: &[Cycle], grid: &LevelGrid) -> Result<RainflowMatrix> {
    let mut rfm = RainflowMatrix::zeros(grid.clone());
    for (i, c) in cycles.iter().enumerate() {
        let min_bin = grid.bin_of(c.min(), i)?;
        let max_bin = grid.bin_of(c.max(), i)?;
        if min_bin == max_bin {
            continue;
        }
        rfm.add(min_bin, max_bin, c.weight)?;
    }
    debug_assert!(rfm.is_strictly_upper_triangular());
    Ok(rfm)
}

/// Weighted histogram over uniform bins spanning the observed data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<f64>,
}

impl Histogram {
    fn build(values: &[f64], weights: &[f64], n_bins: usize) -> Self {
        if values.is_empty() {
            return Histogram {
                edges: Vec::new(),
                counts: Vec::new(),
            };
        }
        let mut lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            lo -= 0.5;
            hi += 0.5;
        }
        let width = (hi - lo) / n_bins as f64;
        let edges = (0..=n_bins).map(|i| lo + i as f64 * width).collect();
        let mut counts = vec![0.0; n_bins];
        for (&v, &w) in values.iter().zip(weights.iter()) {
            let bin = (((v - lo) / width).floor() as usize).min(n_bins - 1);
            counts[bin] += w;
        }
        Histogram { edges, counts }
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Weighted amplitude and cycle-mean histograms over `n_bins` uniform bins.
pub fn histograms(cycles: &[Cycle], n_bins: usize) -> Result<(Histogram, Histogram)> {
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be >= 1".into()));
    }
    let amplitudes: Vec<f64> = cycles.iter().map(|c| c.amplitude).collect();
    let means: Vec<f64> = cycles.iter().map(|c| c.mean).collect();
    let weights: Vec<f64> = cycles.iter().map(|c| c.weight).collect();
    Ok((
        Histogram::build(&amplitudes, &weights, n_bins),
        Histogram::build(&means, &weights, n_bins),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::TurningPoints;

    fn tp(values: &[f64]) -> TurningPoints {
        TurningPoints::new((0..values.len()).collect(), values.to_vec(), values.len()).unwrap()
    }

    fn sorted_ranges(cycles: &[Cycle], weight: f64) -> Vec<f64> {
        let mut r: Vec<f64> = cycles
            .iter()
            .filter(|c| c.weight == weight)
            .map(|c| c.range())
            .collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        r
    }

    #[test]
    fn canonical_nine_point_sequence() {
        let cycles = count_cycles(&tp(&[-2.0, 1.0, -3.0, 5.0, -1.0, 3.0, -4.0, 4.0, -2.0]));
        let full = sorted_ranges(&cycles, 1.0);
        let half = sorted_ranges(&cycles, 0.5);
        assert_eq!(full, vec![4.0]);
        assert_eq!(half, vec![3.0, 4.0, 6.0, 8.0, 8.0, 9.0]);

        let full_cycle = cycles.iter().find(|c| c.weight == 1.0).unwrap();
        assert_eq!(full_cycle.amplitude, 2.0);
        assert_eq!(full_cycle.mean, 1.0);
        assert_eq!(full_cycle.min(), -1.0);
        assert_eq!(full_cycle.max(), 3.0);
    }

    #[test]
    fn single_excursion_two_halves() {
        let cycles = count_cycles(&tp(&[0.0, 2.0, 0.0]));
        assert_eq!(cycles.len(), 2);
        for c in &cycles {
            assert_eq!(c.weight, 0.5);
            assert_eq!(c.amplitude, 1.0);
            assert_eq!(c.mean, 1.0);
        }
    }

    #[test]
    fn interior_loop_plus_residual() {
        let cycles = count_cycles(&tp(&[0.0, 3.0, 1.0, 2.0, 0.0]));
        let full: Vec<&Cycle> = cycles.iter().filter(|c| c.weight == 1.0).collect();
        assert_eq!(full.len(), 1);
        assert_eq!(full[0].amplitude, 0.5);
        assert_eq!(full[0].mean, 1.5);
        assert_eq!(full[0].start_idx, 2);
        assert_eq!(full[0].end_idx, 3);
        let half = sorted_ranges(&cycles, 0.5);
        assert_eq!(half, vec![3.0, 3.0]);
    }

    #[test]
    fn fewer_than_two_points_empty() {
        let single = TurningPoints::new(vec![0], vec![1.0], 1).unwrap();
        assert!(count_cycles(&single).is_empty());
    }

    #[test]
    fn conservation_of_flanks() {
        let values = [-2.0, 1.0, -3.0, 5.0, -1.0, 3.0, -4.0, 4.0, -2.0];
        let cycles = count_cycles(&tp(&values));
        let total: f64 = cycles.iter().map(|c| c.weight).sum();
        assert_eq!(total, (values.len() as f64 - 1.0) / 2.0);
    }

    #[test]
    fn rfm_basic_binning() {
        let grid = LevelGrid::new(2, 0.0, 1.0).unwrap();
        let cycles = vec![Cycle {
            amplitude: 0.4,
            mean: 0.5,
            weight: 1.0,
            start_idx: 0,
            end_idx: 1,
        }];
        let rfm = build_rfm(&cycles, &grid).unwrap();
        assert_eq!(rfm.count(0, 1), 1.0);
        assert_eq!(rfm.total(), 1.0);
        assert!(rfm.is_strictly_upper_triangular());
    }

    #[test]
    fn rfm_half_cycles_accumulate() {
        let grid = LevelGrid::new(2, 0.0, 1.0).unwrap();
        let half = Cycle {
            amplitude: 0.4,
            mean: 0.5,
            weight: 0.5,
            start_idx: 0,
            end_idx: 1,
        };
        let rfm = build_rfm(&[half.clone(), half], &grid).unwrap();
        assert_eq!(rfm.count(0, 1), 1.0);
    }

    #[test]
    fn rfm_empty_cycles_zero_matrix() {
        let grid = LevelGrid::new(3, 0.0, 1.0).unwrap();
        let rfm = build_rfm(&[], &grid).unwrap();
        assert_eq!(rfm.total(), 0.0);
    }

    #[test]
    fn rfm_out_of_grid() {
        let grid = LevelGrid::new(2, 0.0, 1.0).unwrap();
        let cycles = vec![Cycle {
            amplitude: 2.0,
            mean: 0.5,
            weight: 1.0,
            start_idx: 0,
            end_idx: 1,
        }];
        assert!(matches!(
            build_rfm(&cycles, &grid).unwrap_err(),
            Error::OutOfGrid { .. }
        ));
    }

    #[test]
    fn rfm_json_round_trip() {
        let grid = LevelGrid::new(3, -1.0, 1.0).unwrap();
        let mut rfm = RainflowMatrix::zeros(grid);
        rfm.add(0, 2, 2.5).unwrap();
        let json = rfm.to_json().unwrap();
        let back = RainflowMatrix::from_json(&json).unwrap();
        assert_eq!(back, rfm);
    }

    #[test]
    fn histogram_masses() {
        let one_full = vec![Cycle {
            amplitude: 2.0,
            mean: 1.0,
            weight: 1.0,
            start_idx: 0,
            end_idx: 1,
        }];
        let (amp, mean) = histograms(&one_full, 4).unwrap();
        assert_eq!(amp.total(), 1.0);
        assert_eq!(mean.total(), 1.0);

        let halves = vec![
            Cycle {
                amplitude: 1.5,
                mean: 0.0,
                weight: 0.5,
                start_idx: 0,
                end_idx: 1,
            },
            Cycle {
                amplitude: 1.5,
                mean: 0.0,
                weight: 0.5,
                start_idx: 1,
                end_idx: 2,
            },
        ];
        let (amp, _) = histograms(&halves, 3).unwrap();
        assert_eq!(amp.total(), 1.0);

        let (empty_amp, empty_mean) = histograms(&[], 3).unwrap();
        assert!(empty_amp.counts.is_empty());
        assert!(empty_mean.counts.is_empty());
    }
}
