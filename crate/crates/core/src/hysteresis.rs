//! Preisach hysteresis damage estimator: weighted relay banks, the
//! variation operator, and streaming accumulation.
//!
//! A relay `R(mu, tau)` is a two-threshold switch with memory; a weighted
//! parallel bank of relays over the triangle `-M <= mu <= tau <= M`
//! approximates the Preisach operator. The total variation of the bank
//! output is the accumulated damage, which makes the estimator strictly
//! online: one pass, no deletion, no revisiting of history.

use serde::{Deserialize, Serialize};

use crate::damage::{DamageSeries, SConvention, SNCurve};
use crate::error::{Error, Result};
use crate::signal::TimeSeries;

/// Two-threshold switch. Output is 1 once the input reaches `tau`, 0 once
/// it falls to `mu`, and holds in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Relay {
    mu: f64,
    tau: f64,
    on: bool,
}

impl Relay {
    pub fn new(mu: f64, tau: f64, on: bool) -> Result<Self> {
        if !(mu <= tau) {
            return Err(Error::InvalidParameter(format!(
                "relay thresholds must satisfy mu <= tau, got ({mu}, {tau})"
            )));
        }
        Ok(Self { mu, tau, on })
    }

    /// The initialization rule: on iff `mu + tau < 0`.
    pub fn with_default_state(mu: f64, tau: f64) -> Result<Self> {
        Self::new(mu, tau, mu + tau < 0.0)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn is_on(&self) -> bool {
        self.on
    }

    pub fn output(&self) -> f64 {
        if self.on {
            1.0
        } else {
            0.0
        }
    }

    /// Advances the relay by one input sample and returns the new state.
    ///
    /// The set branch (`v >= tau`) is checked first, so a degenerate relay
    /// with `mu == tau == c` switches on at `v == c`.
    pub fn step(&mut self, v: f64) -> bool {
        if v >= self.tau {
            self.on = true;
        } else if v <= self.mu {
            self.on = false;
        }
        self.on
    }
}

/// Bound of the Preisach plane for a value sequence: the largest absolute
/// excursion `max(|min|, |max|)`, so the triangle contains every sample.
pub fn preisach_bound(values: &[f64]) -> Result<f64> {
    let (lo, hi) = min_max(values)?;
    Ok(lo.abs().max(hi.abs()))
}

/// The bound read literally as `max(min, max)`, which is just the maximum
/// whenever the signal has any positive value. Exposed for comparison; the
/// absolute-value reading is the default everywhere else.
pub fn preisach_bound_signed(values: &[f64]) -> Result<f64> {
    let (lo, hi) = min_max(values)?;
    Ok(lo.max(hi))
}

fn min_max(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Empty("cannot bound an empty sequence".into()));
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Weighted parallel bank of relays: the discretized Preisach operator
/// with per-relay state, updated one sample at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayBank {
    relays: Vec<Relay>,
    weights: Vec<f64>,
    bound: f64,
    last_output: f64,
}

impl RelayBank {
    pub fn new(relays: Vec<Relay>, weights: Vec<f64>, bound: f64) -> Result<Self> {
        if relays.len() != weights.len() {
            return Err(Error::InvalidParameter(
                "one weight per relay required".into(),
            ));
        }
        if !(bound > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Preisach bound must be > 0, got {bound}"
            )));
        }
        for r in &relays {
            if r.mu() < -bound || r.tau() > bound {
                return Err(Error::InvalidParameter(format!(
                    "relay ({}, {}) outside the Preisach triangle bound {bound}",
                    r.mu(),
                    r.tau()
                )));
            }
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let last_output = relays
            .iter()
            .zip(weights.iter())
            .map(|(r, w)| w * r.output())
            .sum();
        Ok(Self {
            relays,
            weights,
            bound,
            last_output,
        })
    }

    /// The three-relay approximation: thresholds at
    /// `(-0.66M, 0.66M)`, `(0.66M, 0.66M)`, `(-0.66M, -0.66M)` with weights
    /// `alpha, alpha^2, alpha^3` where `alpha` is the real root of
    /// `a + a^2 + a^3 = 1`, and the default initialization (states 0, 0, 1).
    pub fn paper_bank(bound: f64) -> Result<Self> {
        if !(bound > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bound must be > 0, got {bound}"
            )));
        }
        let a = weight_normalization_root();
        let thresholds = [
            (-0.66 * bound, 0.66 * bound),
            (0.66 * bound, 0.66 * bound),
            (-0.66 * bound, -0.66 * bound),
        ];
        let relays = thresholds
            .iter()
            .map(|&(mu, tau)| Relay::with_default_state(mu, tau))
            .collect::<Result<Vec<_>>>()?;
        Self::new(relays, vec![a, a * a, a * a * a], bound)
    }

    /// Discretized Preisach bank calibrated to the S-N curve: one relay per
    /// grid-point pair `(g_i, g_j)`, `i < j`, over a uniform `n_levels`
    /// grid on `[-M, M]`.
    ///
    /// Weights are half the mixed second difference of the per-cycle Miner
    /// damage across the cell, the unique choice under which one closed
    /// grid-aligned cycle in steady state contributes exactly its Miner
    /// damage (the variation counts both the up and the down switch, hence
    /// the half).
    pub fn uniform(n_levels: usize, bound: f64, sn: &SNCurve) -> Result<Self> {
        if n_levels < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 levels, got {n_levels}"
            )));
        }
        if !(bound > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bound must be > 0, got {bound}"
            )));
        }
        let n = n_levels;
        let step = 2.0 * bound / (n - 1) as f64;
        let mut g: Vec<f64> = (0..n).map(|i| -bound + i as f64 * step).collect();
        // Pin the endpoints so rounding never pushes a relay past the bound.
        g[0] = -bound;
        g[n - 1] = bound;

        let cycle_damage = |mu: f64, tau: f64| -> f64 {
            if tau <= mu {
                return 0.0;
            }
            let s = match sn.s_convention() {
                SConvention::Amplitude => (tau - mu) / 2.0,
                SConvention::Range => tau - mu,
            };
            s.powf(sn.k()) / sn.capacity()
        };

        let mut relays = Vec::with_capacity(n * (n - 1) / 2);
        let mut weights = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let dd = cycle_damage(g[i], g[j]) - cycle_damage(g[i + 1], g[j])
                    - cycle_damage(g[i], g[j - 1])
                    + cycle_damage(g[i + 1], g[j - 1]);
                relays.push(Relay::with_default_state(g[i], g[j])?);
                // Convexity of the per-cycle damage makes dd >= 0; clamp
                // away the negative rounding dust.
                weights.push((0.5 * dd).max(0.0));
            }
        }
        Self::new(relays, weights, bound)
    }

    pub fn relays(&self) -> &[Relay] {
        &self.relays
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Current weighted output `sum(nu_j * w_j)`.
    pub fn output(&self) -> f64 {
        self.last_output
    }

    /// Feeds one sample: updates every relay, returns the new output and
    /// the damage increment `|h - h_prev|`.
    ///
    /// Samples beyond the plane bound are clamped to it (logged); the
    /// update is O(#relays) time and O(1) extra memory.
    pub fn stream_update(&mut self, v: f64) -> (f64, f64) {
        let v = if v > self.bound {
            log::warn!("sample {v} above Preisach bound {}; clamped", self.bound);
            self.bound
        } else if v < -self.bound {
            log::warn!("sample {v} below Preisach bound -{}; clamped", self.bound);
            -self.bound
        } else {
            v
        };
        let mut h = 0.0;
        for (relay, w) in self.relays.iter_mut().zip(self.weights.iter()) {
            relay.step(v);
            h += w * relay.output();
        }
        let delta = (h - self.last_output).abs();
        self.last_output = h;
        (h, delta)
    }

    /// Folds [`Self::stream_update`] over a value sequence, timestamping
    /// each increment at its causing sample. Timestamps are labels only:
    /// the damage depends on nothing but the value order.
    pub fn accumulate(&mut self, t: &[f64], values: &[f64]) -> Result<DamageSeries> {
        if t.len() != values.len() {
            return Err(Error::InvalidParameter(
                "time and value lengths differ".into(),
            ));
        }
        let increments: Vec<f64> = values.iter().map(|&v| self.stream_update(v).1).collect();
        DamageSeries::new(t.to_vec(), increments)
    }

    /// Convenience wrapper over a whole series.
    pub fn accumulate_series(&mut self, series: &TimeSeries) -> Result<DamageSeries> {
        self.accumulate(series.t(), series.values())
    }

    /// Multiplies every weight (and the current output) by `c >= 0`.
    pub fn scale_weights(&mut self, c: f64) -> Result<()> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scale must be finite and >= 0, got {c}"
            )));
        }
        for w in self.weights.iter_mut() {
            *w *= c;
        }
        self.last_output *= c;
        Ok(())
    }

    /// Snapshot for checkpoint/restore of long-running streams.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let bank: RelayBank = serde_json::from_str(s)?;
        let rebuilt = RelayBank::new(bank.relays.clone(), bank.weights.clone(), bank.bound)?;
        if (rebuilt.last_output - bank.last_output).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "snapshot output {} inconsistent with relay states ({})",
                bank.last_output, rebuilt.last_output
            )));
        }
        Ok(rebuilt)
    }
}

/// Real root of `a + a^2 + a^3 = 1`, used to normalize the three-relay
/// weights to unit sum. Newton iteration from 0.5 converges to machine
/// precision in a handful of steps.
pub fn weight_normalization_root() -> f64 {
    let mut a = 0.5_f64;
    for _ in 0..64 {
        let f = a * (1.0 + a * (1.0 + a)) - 1.0;
        let fp = 1.0 + a * (2.0 + 3.0 * a);
        let next = a - f / fp;
        if (next - a).abs() <= f64::EPSILON * a.abs() {
            return next;
        }
        a = next;
    }
    a
}

/// Scale factor that maps a hysteresis damage series onto a reference
/// final damage: `c = reference / final`. Applying `c` to the bank weights
/// reproduces the reference exactly.
pub fn calibrate_to_reference(series_damage: &DamageSeries, reference_final: f64) -> Result<f64> {
    let final_damage = series_damage.final_damage();
    if !(final_damage > 0.0) {
        return Err(Error::DegenerateSignal(format!(
            "hysteresis damage {final_damage} is not positive; nothing to calibrate"
        )));
    }
    Ok(reference_final / final_damage)
}
