//! One independent replica of a regenerative observable, for either the
//! sausage functional or the known-limit surrogate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::Point;
use crate::limit::{renewal_state, RenewalState};
use crate::observables::phi_at_times;
use crate::pathgen::{resample_to_spacing, simulate_stream, DriftVector};
use crate::regeneration::{cycles_from_grid, detect_regenerations, CycleRecord, RegenerationParams};
use crate::rng::StreamId;
use crate::surrogate;
use crate::weight::TestWeight;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    Sausage {
        mu: Point,
        dt: f64,
        max_spacing: f64,
        regeneration: RegenerationParams,
        osc_grid: usize,
    },
    /// Exponential cycle lengths with mean `eta_mean`, increments
    /// `rho eta + N(0, 1)` per nonzero weight, linear within cycles.
    Surrogate { rho: f64, eta_mean: f64 },
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessSpec::Sausage { mu, dt, max_spacing, regeneration, osc_grid } => {
                DriftVector::new(*mu)?;
                if !(*dt > 0.0) || !(*max_spacing > 0.0) {
                    return Err(invalid("dt and max_spacing must be positive"));
                }
                if *osc_grid < 2 {
                    return Err(invalid("osc_grid must be at least 2"));
                }
                regeneration.validate()
            }
            ProcessSpec::Surrogate { rho, eta_mean } => {
                if !rho.is_finite() || !(*eta_mean > 0.0) {
                    return Err(invalid("surrogate needs finite rho and positive mean cycle length"));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSpec {
    pub process: ProcessSpec,
    pub weights: Vec<TestWeight>,
    /// Observation horizon `t`.
    pub horizon: f64,
    /// Extra times in `(0, t]` where the renewal state is recorded.
    pub observe_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaResult {
    pub stream: StreamId,
    /// `Phi(t)` per weight.
    pub phi_t: Vec<f64>,
    /// Regeneration times `<= t`, starting at 0.
    pub taus: Vec<f64>,
    pub phi_at_taus: Vec<Vec<f64>>,
    /// Complete cycles inside `[0, t]`.
    pub cycles: Vec<CycleRecord>,
    /// Renewal state at each observe time, then at `t`.
    pub renewal: Vec<RenewalState>,
    pub unconfirmed: usize,
    pub points: usize,
}

pub fn run_replica(spec: &ReplicaSpec, stream: StreamId) -> Result<ReplicaResult> {
    match &spec.process {
        ProcessSpec::Sausage { mu, dt, max_spacing, regeneration, osc_grid } => {
            let drift = DriftVector::new(*mu)?;
            let t = spec.horizon;
            let path = simulate_stream(drift, t + regeneration.t_confirm, *dt, stream)?;
            let regen = detect_regenerations(&path, regeneration)?;
            let taus: Vec<f64> = regen.taus.iter().copied().filter(|&s| s <= t).collect();
            let resampled = resample_to_spacing(path, *max_spacing)?;

            let mut times = vec![0.0];
            for w in taus.windows(2) {
                for k in 1..*osc_grid {
                    times.push(if k == osc_grid - 1 { w[1] } else { w[0] + (w[1] - w[0]) * k as f64 / (osc_grid - 1) as f64 });
                }
            }
            let grid_len = times.len();
            times.extend_from_slice(&spec.observe_times);
            times.push(t);
            let values = phi_at_times(&resampled, &spec.weights, &times)?;

            let grid: Vec<Vec<Vec<f64>>> = (0..taus.len() - 1)
                .map(|n| values[n * (osc_grid - 1)..=(n + 1) * (osc_grid - 1)].to_vec())
                .collect();
            let phi_at_taus: Vec<Vec<f64>> = (0..taus.len()).map(|n| values[n * (osc_grid - 1)].clone()).collect();
            let cycles = cycles_from_grid(&taus, &grid);
            let renewal = spec
                .observe_times
                .iter()
                .chain([&t])
                .zip(&values[grid_len..])
                .map(|(&s, phi)| renewal_state(&taus, s, phi, &phi_at_taus))
                .collect::<Result<Vec<_>>>()?;
            Ok(ReplicaResult {
                stream,
                phi_t: values.last().unwrap().clone(),
                points: resampled.prefix_len(t),
                unconfirmed: regen.unconfirmed.len(),
                taus,
                phi_at_taus,
                cycles,
                renewal,
            })
        }
        ProcessSpec::Surrogate { rho, eta_mean } => surrogate::run(spec, *rho, *eta_mean, stream),
    }
}

/// Replicas `first..first + count` of `master`, in index order.
pub fn run_replicas(spec: &ReplicaSpec, master: u64, first: u64, count: usize) -> Result<Vec<ReplicaResult>> {
    spec.process.validate()?;
    if !(spec.horizon > 0.0) {
        return Err(invalid("horizon must be positive"));
    }
    if spec.observe_times.iter().any(|&s| !(s > 0.0 && s <= spec.horizon)) {
        return Err(invalid("observe times must lie in (0, t]"));
    }
    (0..count as u64)
        .into_par_iter()
        .map(|k| run_replica(spec, StreamId::new(master, first + k)))
        .collect()
}
