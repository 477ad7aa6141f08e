//! A regenerative process with a known Gaussian limit, used to check the
//! limit pipeline independently of the geometry.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{invalid, Result};
use crate::limit::renewal_state;
use crate::regeneration::cycles_from_values;
use crate::replica::{ReplicaResult, ReplicaSpec};
use crate::rng::StreamId;

/// Limit variance of `(Phi(t) - rho t)/sqrt(t)` for unit-variance
/// increments: `1 / eta_mean`.
pub fn limit_variance(eta_mean: f64) -> f64 {
    1.0 / eta_mean
}

pub(crate) fn run(spec: &ReplicaSpec, rho: f64, eta_mean: f64, stream: StreamId) -> Result<ReplicaResult> {
    let exp = Exp::new(1.0 / eta_mean).map_err(|e| invalid(e.to_string()))?;
    let mut rng = stream.rng();
    let m = spec.weights.len();
    let active: Vec<bool> = spec.weights.iter().map(|w| !w.is_zero()).collect();
    let t = spec.horizon;

    let mut taus = vec![0.0];
    let mut phi = vec![vec![0.0; m]];
    while *taus.last().unwrap() <= t {
        let eta: f64 = loop {
            let e = exp.sample(&mut rng);
            if e > 0.0 {
                break e;
            }
        };
        let prev = phi.last().unwrap();
        let next: Vec<f64> = (0..m)
            .map(|w| {
                let y: f64 = rng.sample(StandardNormal);
                if active[w] { prev[w] + rho * eta + y } else { prev[w] }
            })
            .collect();
        taus.push(taus.last().unwrap() + eta);
        phi.push(next);
    }

    let at = |s: f64| -> Vec<f64> {
        let n = taus.partition_point(|&x| x <= s) - 1;
        let f = (s - taus[n]) / (taus[n + 1] - taus[n]);
        (0..m).map(|w| phi[n][w] + f * (phi[n + 1][w] - phi[n][w])).collect()
    };
    let kept = taus.partition_point(|&x| x <= t);
    let phi_t = at(t);
    let renewal = spec
        .observe_times
        .iter()
        .chain([&t])
        .map(|&s| renewal_state(&taus[..kept], s, &at(s), &phi[..kept]))
        .collect::<Result<Vec<_>>>()?;
    let cycles = cycles_from_values(&taus[..kept], &phi[..kept]);
    phi.truncate(kept);
    taus.truncate(kept);
    Ok(ReplicaResult { stream, phi_t, taus, phi_at_taus: phi, cycles, renewal, unconfirmed: 0, points: 0 })
}

#[cfg(test)]
mod tests {
    use crate::replica::{run_replicas, ProcessSpec, ReplicaSpec};
    use crate::stats;
    use crate::topology::RadiusWindow;
    use crate::weight::TestWeight;

    fn spec(t: f64) -> ReplicaSpec {
        let w = RadiusWindow::new(0.2, 0.5).unwrap();
        ReplicaSpec {
            process: ProcessSpec::Surrogate { rho: 0.5, eta_mean: 1.0 },
            weights: vec![TestWeight::indicator(w), TestWeight::zero(w)],
            horizon: t,
            observe_times: vec![t / 2.0],
        }
    }

    #[test]
    fn linear_interpolation_and_zero_weight() {
        for r in run_replicas(&spec(50.0), 1, 0, 20).unwrap() {
            assert!(r.taus.last().unwrap() <= &50.0);
            assert_eq!(r.phi_t[1], 0.0);
            assert!(r.cycles.iter().all(|c| c.delta[1] == 0.0 && c.m_osc[0] == c.delta[0].abs()));
            let st = r.renewal.last().unwrap();
            assert_eq!(st.n_t, r.taus.len() - 1);
        }
    }

    #[test]
    fn scaled_fluctuation_has_unit_variance() {
        let t = 400.0;
        let z: Vec<f64> = run_replicas(&spec(t), 2, 0, 800).unwrap().iter().map(|r| (r.phi_t[0] - 0.5 * t) / t.sqrt()).collect();
        // Var of a sample variance of 800 normals is about 2/800.
        assert!((stats::variance(&z) - 1.0).abs() < 0.2, "{}", stats::variance(&z));
    }
}
