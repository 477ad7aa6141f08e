//! Ladder-level regeneration cuts and per-cycle increments.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::observables::phi_at_times;
use crate::pathgen::{longitudinal_process, DriftedPath, ResampledPath};
use crate::stats;
use crate::weight::TestWeight;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegenerationParams {
    /// Level spacing `L` of the ladder `kL`.
    pub level_spacing: f64,
    /// Backtrack threshold `delta`.
    pub backtrack: f64,
    /// Candidates before this time are ignored.
    pub burn_in: f64,
    /// Minimal observed time after a cut before it can be accepted.
    pub t_confirm: f64,
}

impl RegenerationParams {
    pub fn new(level_spacing: f64, backtrack: f64, burn_in: f64, t_confirm: f64) -> Result<Self> {
        let p = Self { level_spacing, backtrack, burn_in, t_confirm };
        p.validate()?;
        Ok(p)
    }

    /// `L = 1`, `delta = L/2` in units where the drift speed is 1, and
    /// `T_confirm = 20 L / |mu|`.
    pub fn default_for_speed(speed: f64) -> Self {
        let l = 1.0 / speed;
        Self { level_spacing: l, backtrack: 0.5 * l, burn_in: 0.0, t_confirm: 20.0 * l / speed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.level_spacing > 0.0 && self.level_spacing.is_finite()) {
            return Err(invalid(format!("level spacing must be positive, got {}", self.level_spacing)));
        }
        if !(self.backtrack > 0.0 && self.backtrack.is_finite()) {
            return Err(invalid(format!("backtrack threshold must be positive, got {}", self.backtrack)));
        }
        if !(self.burn_in >= 0.0) || !(self.t_confirm >= 0.0) {
            return Err(invalid("burn-in and confirmation time must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegenerationTimes {
    /// `0 = tau_0 < tau_1 < ...`.
    pub taus: Vec<f64>,
    /// Grid index of each tau in the path.
    pub indices: Vec<usize>,
    /// Ladder level crossed at each tau (0 for `tau_0`).
    pub levels: Vec<f64>,
    /// `complete[n]` for the interval `[tau_n, tau_{n+1})`; the interval after
    /// the last tau runs to the horizon and is never complete.
    pub complete: Vec<bool>,
    /// Candidates that did not backtrack within the observed window but were
    /// observed for less than `t_confirm`.
    pub unconfirmed: Vec<f64>,
    pub horizon: f64,
}

impl RegenerationTimes {
    pub fn complete_cycles(&self) -> usize {
        self.taus.len() - 1
    }
}

/// First-passage indices of `u` over the ladder `kL`, with the highest
/// level reached at each index.
pub(crate) fn ladder_candidates(u: &[f64], l: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut next = 1.0f64;
    for (i, &x) in u.iter().enumerate() {
        if x >= next * l {
            let k = (x / l).floor().max(next);
            out.push((i, k * l));
            next = k + 1.0;
        }
    }
    out
}

pub fn detect_regenerations(path: &DriftedPath, params: &RegenerationParams) -> Result<RegenerationTimes> {
    params.validate()?;
    let horizon = path.horizon();
    if !(horizon > params.burn_in) {
        return Err(invalid(format!("horizon {horizon} does not exceed burn-in {}", params.burn_in)));
    }
    let u = longitudinal_process(path);
    let mut suffix_min = u.clone();
    for i in (0..u.len().saturating_sub(1)).rev() {
        suffix_min[i] = suffix_min[i].min(suffix_min[i + 1]);
    }
    let mut out = RegenerationTimes {
        taus: vec![0.0],
        indices: vec![0],
        levels: vec![0.0],
        complete: Vec::new(),
        unconfirmed: Vec::new(),
        horizon,
    };
    for (i, level) in ladder_candidates(&u, params.level_spacing) {
        let s = path.times[i];
        if s < params.burn_in {
            continue;
        }
        if suffix_min[i] - level <= -params.backtrack {
            continue;
        }
        if horizon - s >= params.t_confirm {
            out.taus.push(s);
            out.indices.push(i);
            out.levels.push(level);
        } else {
            out.unconfirmed.push(s);
        }
    }
    out.complete = vec![true; out.taus.len() - 1];
    out.complete.push(false);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub n: usize,
    pub tau_n: f64,
    pub tau_np1: f64,
    pub eta: f64,
    /// `Phi(tau_{n+1}) - Phi(tau_n)` per weight.
    pub delta: Vec<f64>,
    /// `max |Phi(s) - Phi(tau_n)|` over the oscillation grid, per weight.
    pub m_osc: Vec<f64>,
    /// Centered reward per weight; empty until rewards are assigned.
    pub y: Vec<f64>,
    pub complete: bool,
}

/// Cycles from `Phi` sampled on a per-cycle grid. `grid[n]` holds the
/// values at the grid times of cycle `n`, first and last entries at
/// `tau_n` and `tau_{n+1}`.
pub fn cycles_from_grid(taus: &[f64], grid: &[Vec<Vec<f64>>]) -> Vec<CycleRecord> {
    grid.iter()
        .enumerate()
        .map(|(n, g)| {
            let first = &g[0];
            let last = g.last().unwrap();
            let delta: Vec<f64> = last.iter().zip(first).map(|(b, a)| b - a).collect();
            let m_osc = (0..first.len())
                .map(|w| g.iter().map(|row| (row[w] - first[w]).abs()).fold(0.0, f64::max))
                .collect();
            CycleRecord {
                n,
                tau_n: taus[n],
                tau_np1: taus[n + 1],
                eta: taus[n + 1] - taus[n],
                delta,
                m_osc,
                y: Vec::new(),
                complete: true,
            }
        })
        .collect()
}

/// Cycles from `Phi` at the regeneration times only (`phi[n]` at `taus[n]`).
pub fn cycles_from_values(taus: &[f64], phi: &[Vec<f64>]) -> Vec<CycleRecord> {
    let grid: Vec<Vec<Vec<f64>>> = phi.windows(2).map(|w| w.to_vec()).collect();
    cycles_from_grid(taus, &grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleExtraction {
    pub cycles: Vec<CycleRecord>,
    /// `Phi` at every tau (including `tau_0`), per weight.
    pub phi_at_taus: Vec<Vec<f64>>,
    pub diagnostic: Option<String>,
}

/// Complete cycles of a path with increments of every weight. `osc_grid`
/// equally spaced times per cycle (both ends included) define `M_n`.
pub fn extract_cycles(path: &ResampledPath, taus: &RegenerationTimes, weights: &[TestWeight], osc_grid: usize) -> Result<CycleExtraction> {
    if osc_grid < 2 {
        return Err(invalid("oscillation grid needs at least the two cycle ends"));
    }
    let t = &taus.taus;
    if t.len() < 2 {
        return Ok(CycleExtraction {
            cycles: Vec::new(),
            phi_at_taus: Vec::new(),
            diagnostic: Some(format!("fewer than two regeneration times before horizon {}", taus.horizon)),
        });
    }
    let mut times = Vec::with_capacity((t.len() - 1) * osc_grid);
    for w in t.windows(2) {
        for k in 0..osc_grid {
            times.push(match k {
                0 => w[0],
                _ if k == osc_grid - 1 => w[1],
                _ => w[0] + (w[1] - w[0]) * k as f64 / (osc_grid - 1) as f64,
            });
        }
    }
    let values = phi_at_times(path, weights, &times)?;
    let grid: Vec<Vec<Vec<f64>>> = values.chunks(osc_grid).map(|c| c.to_vec()).collect();
    let mut phi_at_taus: Vec<Vec<f64>> = grid.iter().map(|g| g[0].clone()).collect();
    phi_at_taus.push(grid.last().unwrap().last().unwrap().clone());
    Ok(CycleExtraction { cycles: cycles_from_grid(t, &grid), phi_at_taus, diagnostic: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSeries {
    pub name: String,
    /// Autocorrelation at lags `0..=max_lag`.
    pub acf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagTable {
    pub cycles: usize,
    pub band: f64,
    pub series: Vec<LagSeries>,
}

impl LagTable {
    /// `(series, lag)` combinations with `|acf| > band` for lags in `lags`.
    pub fn outside_band(&self, lags: std::ops::RangeInclusive<usize>) -> Vec<(String, usize, f64)> {
        let mut out = Vec::new();
        for s in &self.series {
            for k in lags.clone() {
                if s.acf[k].abs() > self.band {
                    out.push((s.name.clone(), k, s.acf[k]));
                }
            }
        }
        out
    }
}

/// Autocorrelation of a quantity observed as several independent
/// sequences: pooled mean and variance, lagged products within sequences.
pub fn pooled_autocorrelation(seqs: &[Vec<f64>], max_lag: usize) -> Vec<f64> {
    let all: Vec<f64> = seqs.iter().flatten().copied().collect();
    let m = stats::mean(&all);
    let n = all.len() as f64;
    let c0: f64 = all.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (0..=max_lag)
        .map(|k| {
            if c0 == 0.0 {
                return if k == 0 { 1.0 } else { 0.0 };
            }
            let mut num = 0.0;
            for s in seqs {
                num += s.windows(k + 1).map(|w| (w[0] - m) * (w[k] - m)).sum::<f64>();
            }
            num / n / c0
        })
        .collect()
}

pub const MAX_LAG: usize = 5;

/// Autocorrelations of `eta` and of `delta` for every weight at lags
/// `0..=5`, with `3/sqrt(N)` bands. `per_replica[r]` lists the cycles of
/// replica `r` in order; lags never cross replicas.
pub fn dependence_diagnostics(per_replica: &[Vec<CycleRecord>], weight_names: &[String]) -> Result<LagTable> {
    let total: usize = per_replica.iter().map(Vec::len).sum();
    if total < 200 {
        return Err(invalid(format!("dependence diagnostics need 200 cycles, got {total}")));
    }
    let mut series = Vec::new();
    let eta: Vec<Vec<f64>> = per_replica.iter().map(|c| c.iter().map(|x| x.eta).collect()).collect();
    series.push(LagSeries { name: "eta".into(), acf: pooled_autocorrelation(&eta, MAX_LAG) });
    for (w, name) in weight_names.iter().enumerate() {
        let d: Vec<Vec<f64>> = per_replica.iter().map(|c| c.iter().map(|x| x.delta[w]).collect()).collect();
        series.push(LagSeries { name: format!("delta_{name}"), acf: pooled_autocorrelation(&d, MAX_LAG) });
    }
    Ok(LagTable { cycles: total, band: 3.0 / (total as f64).sqrt(), series })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaTail {
    /// `(x, log P(eta > x))` at the sorted sample values.
    pub log_survival: Vec<(f64, f64)>,
    /// Slope of the log-survival over its upper half.
    pub slope: Option<f64>,
    pub fourth_moment: f64,
}

/// Empirical log-survival of cycle lengths and its fitted tail slope.
/// The fit uses sample points above the median with at least ten
/// observations beyond them.
pub fn eta_tail(etas: &[f64]) -> EtaTail {
    let mut s = etas.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let mut log_survival = Vec::new();
    for i in 0..n {
        if i + 1 < n && s[i + 1] == s[i] {
            continue;
        }
        let beyond = n - i - 1;
        if beyond > 0 {
            log_survival.push((s[i], (beyond as f64 / n as f64).ln()));
        }
    }
    let median = if n > 0 { s[n / 2] } else { 0.0 };
    let fit: Vec<(f64, f64)> = log_survival
        .iter()
        .copied()
        .filter(|&(x, ls)| x >= median && ls >= (10.0 / n as f64).ln())
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = fit.into_iter().unzip();
    let slope = stats::ols(&x, &y).map(|f| f.slope);
    let fourth_moment = if n > 0 { s.iter().map(|e| e.powi(4)).sum::<f64>() / n as f64 } else { f64::NAN };
    EtaTail { log_survival, slope, fourth_moment }
}

/// `|mean(first half) - mean(second half)|` in units of the pooled
/// standard error.
pub fn half_split_z(x: &[f64]) -> f64 {
    let (a, b) = x.split_at(x.len() / 2);
    let se = (stats::variance(a) / a.len() as f64 + stats::variance(b) / b.len() as f64).sqrt();
    let d = (stats::mean(a) - stats::mean(b)).abs();
    if se == 0.0 {
        if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        d / se
    }
}
