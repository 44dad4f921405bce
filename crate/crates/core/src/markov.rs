//! Stochastic damage evolution: rainflow matrix to Markov turning-point
//! model, seeded simulation, and Monte-Carlo damage series.
//!
//! The chain has `2n` states over an `n`-level grid: states `0..n` are
//! minima at that level, states `n..2n` maxima. Minima only jump to maxima
//! at a strictly higher level and vice versa, mirroring the strict upper
//! triangle of the rainflow matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::damage::{damage_series, miner_damage, DamageSeries, SNCurve};
use crate::error::{Error, Result};
use crate::rainflow::{count_cycles, RainflowMatrix};
use crate::signal::{DiscreteTpSeries, LevelGrid, TimeSeries, TurningPoints};

/// Row-stochastic turning-point transition model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovModel {
    /// Dense `2n x 2n` transition matrix; rows sum to 1. States without
    /// any observed count are absorbing self-loops.
    p: Vec<Vec<f64>>,
    /// Bin-center load value of each level.
    levels: Vec<f64>,
    grid: LevelGrid,
    /// States with no observed transitions (kept absorbing).
    absorbing: Vec<bool>,
}

/// Continuous-time generator `Q = rate * (P - I)`; rows sum to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityMatrix {
    q: Vec<Vec<f64>>,
    rate: f64,
}

impl IntensityMatrix {
    pub fn q(&self) -> &[Vec<f64>] {
        &self.q
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn n_states(&self) -> usize {
        self.q.len()
    }
}

impl MarkovModel {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn n_states(&self) -> usize {
        2 * self.levels.len()
    }

    pub fn p(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn grid(&self) -> &LevelGrid {
        &self.grid
    }

    /// State index of a minimum at `level`.
    pub fn min_state(&self, level: usize) -> usize {
        level
    }

    /// State index of a maximum at `level`.
    pub fn max_state(&self, level: usize) -> usize {
        self.n_levels() + level
    }

    /// Level index of a state (forgetting whether it is a min or a max).
    pub fn level_of(&self, state: usize) -> usize {
        state % self.n_levels()
    }

    pub fn is_absorbing(&self, state: usize) -> bool {
        self.absorbing[state]
    }

    /// Stationary distribution by power iteration on the row-stochastic
    /// matrix. Starts with half the mass on each parity class (the chain
    /// alternates min/max, so class masses are invariant).
    pub fn stationary(&self, tol: f64, max_iter: usize) -> Vec<f64> {
        let n = self.n_levels();
        let live_min: Vec<usize> = (0..n).filter(|&s| !self.absorbing[s]).collect();
        let live_max: Vec<usize> = (n..2 * n).filter(|&s| !self.absorbing[s]).collect();
        let mut pi = vec![0.0; 2 * n];
        for &s in &live_min {
            pi[s] = 0.5 / live_min.len() as f64;
        }
        for &s in &live_max {
            pi[s] = 0.5 / live_max.len() as f64;
        }
        let mut next = vec![0.0; 2 * n];
        for _ in 0..max_iter {
            next.iter_mut().for_each(|x| *x = 0.0);
            for (s, &mass) in pi.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                for (t, &p) in self.p[s].iter().enumerate() {
                    if p > 0.0 {
                        next[t] += mass * p;
                    }
                }
            }
            let diff: f64 = pi.iter().zip(next.iter()).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut pi, &mut next);
            if diff < tol {
                break;
            }
        }
        pi
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: MarkovModel = serde_json::from_str(s)?;
        let n = m.n_states();
        if m.p.len() != n || m.p.iter().any(|r| r.len() != n) || m.absorbing.len() != n {
            return Err(Error::InvalidParameter("model shape mismatch".into()));
        }
        for (i, row) in m.p.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "row {i} sums to {sum}, not 1"
                )));
            }
        }
        Ok(m)
    }
}

/// Converts a rainflow matrix into an alternating min/max Markov model.
///
/// The (min i -> max j) row is the normalized i-th matrix row; the
/// (max j -> min i) row the normalized j-th column. Using the same counts
/// both ways makes the chain time-reversible with the matrix itself as the
/// stationary joint frequency of (min, max) transitions. States with no
/// counts become absorbing self-loops and are logged.
pub fn rfm_to_markov(rfm: &RainflowMatrix) -> Result<MarkovModel> {
    let n = rfm.n_levels();
    let total = rfm.total();
    if total <= 0.0 {
        return Err(Error::EmptyMatrix);
    }

    let n_states = 2 * n;
    let mut p = vec![vec![0.0; n_states]; n_states];
    let mut absorbing = vec![false; n_states];

    // Min state i: distribute over max states j > i.
    for i in 0..n {
        let row_sum: f64 = (i + 1..n).map(|j| rfm.count(i, j)).sum();
        if row_sum > 0.0 {
            for j in i + 1..n {
                p[i][n + j] = rfm.count(i, j) / row_sum;
            }
        } else {
            p[i][i] = 1.0;
            absorbing[i] = true;
        }
    }
    // Max state j: distribute over min states i < j.
    for j in 0..n {
        let col_sum: f64 = (0..j).map(|i| rfm.count(i, j)).sum();
        if col_sum > 0.0 {
            for i in 0..j {
                p[n + j][i] = rfm.count(i, j) / col_sum;
            }
        } else {
            p[n + j][n + j] = 1.0;
            absorbing[n + j] = true;
        }
    }

    let n_absorbing = absorbing.iter().filter(|&&a| a).count();
    if n_absorbing > 0 {
        log::warn!("{n_absorbing} of {n_states} states have no observed transitions; made absorbing");
    }

    let model = MarkovModel {
        p,
        levels: rfm.grid().centers(),
        grid: rfm.grid().clone(),
        absorbing,
    };
    debug_assert!(model
        .p
        .iter()
        .all(|row| (row.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    Ok(model)
}

/// Continuous-time generator at the given event rate: `Q = rate * (P - I)`.
pub fn intensity(model: &MarkovModel, rate: f64) -> Result<IntensityMatrix> {
    if !(rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rate must be > 0, got {rate}"
        )));
    }
    let n = model.n_states();
    let mut q = vec![vec![0.0; n]; n];
    for (i, row) in model.p.iter().enumerate() {
        for (j, &pij) in row.iter().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            q[i][j] = rate * (pij - delta);
        }
    }
    Ok(IntensityMatrix { q, rate })
}

/// Simulates the embedded discrete chain for `n_steps` turning points.
///
/// The initial state is drawn from the stationary marginal (power
/// iteration, tolerance 1e-10). Output is the alternating sequence of level
/// indices; identical seeds give identical sequences. Hitting an absorbing
/// state truncates the sequence with a warning.
pub fn simulate(model: &MarkovModel, n_steps: usize, seed: u64) -> Result<DiscreteTpSeries> {
    if n_steps < 2 {
        return Err(Error::InvalidParameter(format!(
            "n_steps must be >= 2, got {n_steps}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = model.stationary(1e-10, 100_000);

    let mut state = sample_index(&pi, rng.random::<f64>()).ok_or_else(|| {
        Error::DegenerateSignal("stationary distribution carries no mass".into())
    })?;

    let mut levels = Vec::with_capacity(n_steps);
    levels.push(model.level_of(state));
    while levels.len() < n_steps {
        if model.is_absorbing(state) {
            log::warn!(
                "absorbing state {state} reached after {} steps; truncating",
                levels.len()
            );
            break;
        }
        let u = rng.random::<f64>();
        let next = sample_index(&model.p[state], u)
            .ok_or_else(|| Error::DegenerateSignal(format!("state {state} row has no mass")))?;
        state = next;
        levels.push(model.level_of(state));
    }
    DiscreteTpSeries::new(levels, model.n_levels())
}

/// Inverse-CDF draw from an unnormalized weight vector.
fn sample_index(weights: &[f64], u: f64) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = Some(i);
            if target < acc {
                return Some(i);
            }
        }
    }
    last_positive
}

/// Runs the rainflow + Miner pipeline on a simulated level sequence.
///
/// Level indices map to bin-center load values. The event index doubles as
/// the time axis; pass `duration` to spread events uniformly over it.
pub fn mc_damage(
    sim: &DiscreteTpSeries,
    model: &MarkovModel,
    sn: &SNCurve,
    duration: Option<f64>,
) -> Result<DamageSeries> {
    if sim.n_levels() != model.n_levels() {
        return Err(Error::InvalidParameter(format!(
            "simulation has {} levels, model {}",
            sim.n_levels(),
            model.n_levels()
        )));
    }
    let n = sim.len();
    let t: Vec<f64> = match duration {
        Some(d) if n > 1 => (0..n).map(|i| i as f64 * d / (n - 1) as f64).collect(),
        _ => (0..n).map(|i| i as f64).collect(),
    };

    if n < 2 {
        return DamageSeries::new(t, vec![0.0; n]);
    }

    let values = sim.to_values(model.grid());
    let series = TimeSeries::new(t, values.clone(), "mc_sim")?;
    // The simulated sequence alternates by construction but may repeat a
    // level when it was truncated; re-extract to stay safe.
    let tp = TurningPoints::new((0..n).collect(), values, n)?;
    let cycles = count_cycles(&tp);
    damage_series(&cycles, sn, &series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damage::SConvention;

    fn rfm_with(entries: &[(usize, usize, f64)], n: usize) -> RainflowMatrix {
        let grid = LevelGrid::new(n, 0.0, n as f64).unwrap();
        let mut rfm = RainflowMatrix::zeros(grid);
        for &(i, j, w) in entries {
            rfm.add(i, j, w).unwrap();
        }
        rfm
    }

    #[test]
    fn deterministic_two_level_chain() {
        let rfm = rfm_with(&[(0, 1, 5.0)], 2);
        let model = rfm_to_markov(&rfm).unwrap();
        assert_eq!(model.p()[0][3], 1.0); // min0 -> max1
        assert_eq!(model.p()[3][0], 1.0); // max1 -> min0
        // min1 and max0 are unreachable, absorbing.
        assert!(model.is_absorbing(1));
        assert!(model.is_absorbing(2));

        let sim = simulate(&model, 9, 42).unwrap();
        let expect_a: Vec<usize> = (0..9).map(|i| i % 2).collect();
        let expect_b: Vec<usize> = (0..9).map(|i| (i + 1) % 2).collect();
        assert!(sim.bins() == expect_a.as_slice() || sim.bins() == expect_b.as_slice());
    }

    #[test]
    fn row_normalization() {
        let rfm = rfm_with(&[(0, 1, 1.0), (0, 2, 3.0)], 3);
        let model = rfm_to_markov(&rfm).unwrap();
        assert!((model.p()[0][4] - 0.25).abs() < 1e-15); // min0 -> max1
        assert!((model.p()[0][5] - 0.75).abs() < 1e-15); // min0 -> max2
    }

    #[test]
    fn all_rows_stochastic() {
        let rfm = rfm_with(&[(0, 1, 1.0), (0, 2, 3.0), (1, 2, 2.0)], 3);
        let model = rfm_to_markov(&rfm).unwrap();
        for row in model.p() {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_matrix_rejected() {
        let grid = LevelGrid::new(3, 0.0, 3.0).unwrap();
        let rfm = RainflowMatrix::zeros(grid);
        assert!(matches!(rfm_to_markov(&rfm).unwrap_err(), Error::EmptyMatrix));
    }

    #[test]
    fn intensity_identities() {
        let rfm = rfm_with(&[(0, 1, 5.0)], 2);
        let model = rfm_to_markov(&rfm).unwrap();

        let q = intensity(&model, 2.0).unwrap();
        for row in q.q() {
            let sum: f64 = row.iter().sum();
            assert!(sum.abs() <= 1e-12);
        }
        // min0 row: P(min0 -> max1) = 1, so Q[0][0] = -2, Q[0][3] = 2.
        assert_eq!(q.q()[0][0], -2.0);
        assert_eq!(q.q()[0][3], 2.0);

        assert!(intensity(&model, 0.0).is_err());
    }

    #[test]
    fn same_seed_same_sequence() {
        let rfm = rfm_with(&[(0, 1, 1.0), (0, 2, 3.0), (1, 2, 2.0)], 3);
        let model = rfm_to_markov(&rfm).unwrap();
        let a = simulate(&model, 500, 7).unwrap();
        let b = simulate(&model, 500, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate(&model, 500, 8).unwrap();
        assert_ne!(a.bins(), c.bins());
    }

    #[test]
    fn simulated_alternation_is_valid_turning_points() {
        let rfm = rfm_with(&[(0, 1, 1.0), (0, 2, 3.0), (1, 2, 2.0)], 3);
        let model = rfm_to_markov(&rfm).unwrap();
        let sim = simulate(&model, 200, 3).unwrap();
        let values = sim.to_values(model.grid());
        // Alternation must hold so the rainflow pipeline accepts it.
        TurningPoints::new((0..values.len()).collect(), values, sim.len()).unwrap();
    }

    #[test]
    fn constant_amplitude_mc_damage() {
        let rfm = rfm_with(&[(0, 1, 5.0)], 2);
        let model = rfm_to_markov(&rfm).unwrap();
        let sn = SNCurve::new(4.0, 16.0, SConvention::Amplitude).unwrap();
        let n_cycles = 20usize;
        let sim = simulate(&model, 2 * n_cycles + 1, 1).unwrap();
        let ds = mc_damage(&sim, &model, &sn, None).unwrap();
        let amp = (model.levels()[1] - model.levels()[0]) / 2.0;
        let expected = n_cycles as f64 * amp.powi(4) / 16.0;
        assert!((ds.final_damage() - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn damage_varies_across_seeds() {
        let rfm = rfm_with(&[(0, 1, 1.0), (0, 2, 3.0), (1, 2, 2.0)], 3);
        let model = rfm_to_markov(&rfm).unwrap();
        let sn = SNCurve::new(4.0, 1000.0, SConvention::Amplitude).unwrap();
        let finals: Vec<f64> = (0..10)
            .map(|seed| {
                let sim = simulate(&model, 301, seed).unwrap();
                mc_damage(&sim, &model, &sn, None).unwrap().final_damage()
            })
            .collect();
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        let var = finals.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>();
        assert!(var > 0.0, "expected seed-to-seed variation, got {finals:?}");
    }
}
