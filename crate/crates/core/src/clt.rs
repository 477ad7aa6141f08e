//! Calibrated central-limit experiment over independent replicas.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::limit::{center_rewards, covariance_matrix, estimate_rho, functional_marginals, green_kubo_variance, FunctionalMarginals, RewardSequence};
use crate::regeneration::{dependence_diagnostics, eta_tail, half_split_z, CycleRecord, EtaTail, LagTable};
use crate::replica::{run_replicas, ProcessSpec, ReplicaResult, ReplicaSpec};
use crate::rng::StreamId;
use crate::stats::{self, LineFit};

pub const SCHEMA_VERSION: u32 = 1;

/// Replicas `first..first + count` of stream family `master`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet {
    pub master: u64,
    pub first: u64,
    pub count: usize,
}

impl SeedSet {
    pub fn overlaps(&self, other: &SeedSet) -> bool {
        self.master == other.master
            && self.count > 0
            && other.count > 0
            && self.first < other.first + other.count as u64
            && other.first < self.first + self.count as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltConfig {
    pub spec: ReplicaSpec,
    pub calibration: SeedSet,
    pub evaluation: SeedSet,
    /// Initial cycles of each replica left out of every cycle statistic.
    pub drop_initial: usize,
    pub projections: usize,
    pub projection_seed: u64,
    /// Reward count for the functional marginals; skipped when `None`.
    pub functional_n: Option<usize>,
}

impl CltConfig {
    pub fn validate(&self) -> Result<()> {
        if self.calibration.count < 2 || self.evaluation.count < 2 {
            return Err(invalid("calibration and evaluation need at least two replicas each"));
        }
        if self.calibration.overlaps(&self.evaluation) {
            return Err(invalid("calibration and evaluation seed sets overlap"));
        }
        if self.spec.weights.is_empty() {
            return Err(invalid("at least one weight is required"));
        }
        self.spec.process.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfCentered {
    pub rho_hat: f64,
    pub sigma_psi2_hat: f64,
    pub ks_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexClt {
    pub n: usize,
    pub replicas: usize,
    pub variance: f64,
    pub ks_distance: f64,
    pub ks_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    pub name: String,
    pub rho_hat: f64,
    pub var_y: f64,
    pub cov1: f64,
    pub sigma_cyc2_hat: f64,
    pub sigma_psi2_hat: f64,
    pub clamped: bool,
    pub ks_distance: f64,
    pub ks_threshold: f64,
    pub z_samples: usize,
    /// Across-replica variance of the evaluation Z-samples.
    pub direct_variance: f64,
    /// `|sigma_psi2_hat - direct| / direct`; absent when undefined.
    pub relative_difference: Option<f64>,
    pub degenerate: bool,
    pub self_centered: Option<SelfCentered>,
    pub index_clt: Option<IndexClt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub direction: Vec<f64>,
    pub variance: f64,
    pub ks_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multivariate {
    pub sigma_matrix: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub psd: bool,
    pub projections: Vec<Projection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalRow {
    pub t: f64,
    /// Replica mean of `N_t * eta_mean / t`.
    pub n_t_scaled: f64,
    pub mean_age2: f64,
    /// `E[R_t²] / t` per weight.
    pub remainder: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub renewal: Vec<RenewalRow>,
    /// `A_t²` against `t` over all replica observations.
    pub age_fit: Option<LineFit>,
    pub remainder_decreasing: Vec<bool>,
    pub lags: Option<LagTable>,
    pub eta_tail: EtaTail,
    /// Half-split mean differences in pooled standard errors: `eta` first,
    /// then `delta` per weight. Absent for a split with zero spread and
    /// unequal means.
    pub stationarity: Vec<Option<f64>>,
    pub functional: Vec<Option<FunctionalMarginals>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub schema_version: u32,
    pub horizon: f64,
    pub surrogate: bool,
    pub dt: Option<f64>,
    pub max_spacing: Option<f64>,
    pub calibration: SeedSet,
    pub evaluation: SeedSet,
    pub calibration_cycles: usize,
    pub evaluation_cycles: usize,
    pub unconfirmed_cuts: usize,
    pub eta_mean: f64,
    pub weights: Vec<WeightReport>,
    pub multivariate: Multivariate,
    pub diagnostics: Diagnostics,
    pub degenerate: bool,
    pub ks_caveat: String,
}

#[derive(Debug, Clone)]
pub struct CltRun {
    pub report: CltReport,
    /// `z[w][r]` on the evaluation replicas.
    pub z: Vec<Vec<f64>>,
    pub calibration: Vec<ReplicaResult>,
    /// Evaluation replicas with calibrated rewards assigned to their cycles.
    pub evaluation: Vec<ReplicaResult>,
}

fn kept_cycles(replicas: &[ReplicaResult], drop: usize) -> Vec<Vec<CycleRecord>> {
    replicas.iter().map(|r| r.cycles.iter().skip(drop).cloned().collect()).collect()
}

fn rewards_for(per_replica: &[Vec<CycleRecord>]) -> Result<RewardSequence> {
    let rho = estimate_rho(&per_replica.iter().flatten().collect::<Vec<_>>())?;
    center_rewards(per_replica, &rho)
}

fn z_scores(replicas: &[ReplicaResult], rho: &[f64], t: f64) -> Vec<Vec<f64>> {
    (0..rho.len()).map(|w| replicas.iter().map(|r| (r.phi_t[w] - rho[w] * t) / t.sqrt()).collect()).collect()
}

fn unit_vectors(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = StreamId::auxiliary(seed, 0x5052_4f4a);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                break v.iter().map(|x| x / n).collect();
            }
        })
        .collect()
}

/// Runs calibration and evaluation replicas and assembles the report.
pub fn clt_experiment(config: &CltConfig) -> Result<CltRun> {
    config.validate()?;
    let spec = &config.spec;
    let t = spec.horizon;
    let m = spec.weights.len();
    let (cs, es) = (config.calibration, config.evaluation);
    let calibration = run_replicas(spec, cs.master, cs.first, cs.count)?;
    let mut evaluation = run_replicas(spec, es.master, es.first, es.count)?;

    let cal_cycles = kept_cycles(&calibration, config.drop_initial);
    let cal = rewards_for(&cal_cycles)?;
    let gk = (0..m).map(|w| green_kubo_variance(&cal, w)).collect::<Result<Vec<_>>>()?;
    let cov = covariance_matrix(&cal);

    let mut eval_cycles = kept_cycles(&evaluation, config.drop_initial);
    let eval_cal = center_rewards(&eval_cycles, &cal.rho)?;
    crate::limit::assign_rewards(&mut eval_cycles, &eval_cal);
    for (r, cs) in evaluation.iter_mut().zip(&eval_cycles) {
        let skip = r.cycles.len() - cs.len();
        for (c, k) in r.cycles.iter_mut().skip(skip).zip(cs) {
            c.y = k.y.clone();
        }
    }
    let own = rewards_for(&eval_cycles);

    let z = z_scores(&evaluation, &cal.rho, t);
    let threshold = stats::ks_threshold_95(es.count);

    let counts: Vec<usize> = eval_cycles.iter().map(Vec::len).collect();
    let index_n = {
        let mut c = counts.clone();
        c.sort_unstable();
        c[c.len() / 10]
    };

    let mut weights = Vec::with_capacity(m);
    for w in 0..m {
        let g = gk[w];
        let zw = &z[w];
        let direct = stats::variance(zw);
        let self_centered = own.as_ref().ok().and_then(|o| {
            let s2 = green_kubo_variance(o, w).ok()?.sigma_psi2;
            let zs: Vec<f64> = evaluation.iter().map(|r| (r.phi_t[w] - o.rho[w] * t) / t.sqrt()).collect();
            Some(SelfCentered { rho_hat: o.rho[w], sigma_psi2_hat: s2, ks_distance: stats::ks_normal(&zs, 0.0, s2) })
        });
        let index_clt = (index_n > 0).then(|| {
            let sums: Vec<f64> = eval_cal.y[w]
                .iter()
                .filter(|y| y.len() >= index_n)
                .map(|y| y[..index_n].iter().sum::<f64>() / (index_n as f64).sqrt())
                .collect();
            IndexClt {
                n: index_n,
                replicas: sums.len(),
                variance: stats::variance(&sums),
                ks_distance: stats::ks_normal(&sums, 0.0, g.sigma_cyc2),
                ks_threshold: stats::ks_threshold_95(sums.len()),
            }
        }).filter(|c| c.replicas >= 2);
        weights.push(WeightReport {
            name: spec.weights[w].name().to_string(),
            rho_hat: cal.rho[w],
            var_y: g.var_y,
            cov1: g.cov1,
            sigma_cyc2_hat: g.sigma_cyc2,
            sigma_psi2_hat: g.sigma_psi2,
            clamped: g.clamped,
            ks_distance: stats::ks_normal(zw, 0.0, g.sigma_psi2),
            ks_threshold: threshold,
            z_samples: zw.len(),
            direct_variance: direct,
            relative_difference: if direct > 0.0 { Some((g.sigma_psi2 - direct).abs() / direct) } else if g.sigma_psi2 == 0.0 { Some(0.0) } else { None },
            degenerate: g.sigma_psi2 == 0.0 && zw.iter().all(|&x| x == 0.0),
            self_centered,
            index_clt,
        });
    }

    let projections = unit_vectors(config.projections, m, config.projection_seed)
        .into_iter()
        .map(|a| {
            let variance: f64 = (0..m).map(|i| (0..m).map(|j| a[i] * cov.matrix[i][j] * a[j]).sum::<f64>()).sum();
            let za: Vec<f64> = (0..es.count).map(|r| (0..m).map(|w| a[w] * z[w][r]).sum()).collect();
            Projection { ks_distance: stats::ks_normal(&za, 0.0, variance.max(0.0)), direction: a, variance }
        })
        .collect();

    let diagnostics = diagnostics(config, &evaluation, &eval_cycles, &eval_cal, &gk.iter().map(|g| g.sigma_cyc2).collect::<Vec<_>>(), cal.eta_mean);
    let (dt, max_spacing) = match spec.process {
        ProcessSpec::Sausage { dt, max_spacing, .. } => (Some(dt), Some(max_spacing)),
        ProcessSpec::Surrogate { .. } => (None, None),
    };
    let report = CltReport {
        schema_version: SCHEMA_VERSION,
        horizon: t,
        surrogate: matches!(spec.process, ProcessSpec::Surrogate { .. }),
        dt,
        max_spacing,
        calibration: cs,
        evaluation: es,
        calibration_cycles: cal.len(),
        evaluation_cycles: eval_cal.len(),
        unconfirmed_cuts: calibration.iter().chain(&evaluation).map(|r| r.unconfirmed).sum(),
        eta_mean: cal.eta_mean,
        degenerate: weights.iter().any(|w| w.degenerate),
        weights,
        multivariate: Multivariate { sigma_matrix: cov.matrix, eigenvalues: cov.eigenvalues, psd: cov.psd, projections },
        diagnostics,
        ks_caveat: "asymptotic one-sample threshold 1.36/sqrt(n); reference variance estimated on seed-disjoint calibration replicas, no estimated-parameter correction".into(),
    };
    Ok(CltRun { report, z, calibration, evaluation })
}

fn diagnostics(config: &CltConfig, evaluation: &[ReplicaResult], cycles: &[Vec<CycleRecord>], rewards: &RewardSequence, sigma_cyc2: &[f64], eta_mean: f64) -> Diagnostics {
    let spec = &config.spec;
    let m = spec.weights.len();
    let mut notes = Vec::new();
    let times: Vec<f64> = spec.observe_times.iter().copied().chain([spec.horizon]).collect();
    let renewal: Vec<RenewalRow> = times
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let st: Vec<_> = evaluation.iter().map(|r| &r.renewal[k]).collect();
            RenewalRow {
                t: s,
                n_t_scaled: stats::mean(&st.iter().map(|x| x.n_t as f64 * eta_mean / s).collect::<Vec<_>>()),
                mean_age2: stats::mean(&st.iter().map(|x| x.a_t * x.a_t).collect::<Vec<_>>()),
                remainder: (0..m).map(|w| stats::mean(&st.iter().map(|x| x.r_t[w] * x.r_t[w]).collect::<Vec<_>>()) / s).collect(),
            }
        })
        .collect();
    let (ax, ay): (Vec<f64>, Vec<f64>) = evaluation
        .iter()
        .flat_map(|r| r.renewal.iter().map(|x| (x.t, x.a_t * x.a_t)))
        .unzip();
    let age_fit = stats::ols(&ax, &ay);
    let mut sorted = renewal.clone();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    sorted.dedup_by(|a, b| a.t == b.t);
    let remainder_decreasing = (0..m).map(|w| sorted.windows(2).all(|p| p[1].remainder[w] < p[0].remainder[w])).collect();

    let names: Vec<String> = spec.weights.iter().map(|w| w.name().to_string()).collect();
    let lags = match dependence_diagnostics(cycles, &names) {
        Ok(l) => Some(l),
        Err(e) => {
            notes.push(format!("lag table skipped: {e}"));
            None
        }
    };
    let flat: Vec<&CycleRecord> = cycles.iter().flatten().collect();
    let etas: Vec<f64> = flat.iter().map(|c| c.eta).collect();
    let finite = |z: f64| z.is_finite().then_some(z);
    let mut stationarity = vec![finite(half_split_z(&etas))];
    for w in 0..m {
        stationarity.push(finite(half_split_z(&flat.iter().map(|c| c.delta[w]).collect::<Vec<_>>())));
    }
    let functional = (0..m)
        .map(|w| {
            let n = config.functional_n?;
            match functional_marginals(&rewards.y[w], n, &[0.25, 0.5, 1.0], sigma_cyc2[w]) {
                Ok(f) => Some(f),
                Err(e) => {
                    notes.push(format!("functional marginals for {} skipped: {e}", names[w]));
                    None
                }
            }
        })
        .collect();
    Diagnostics { renewal, age_fit, remainder_decreasing, lags, eta_tail: eta_tail(&etas), stationarity, functional, notes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::RadiusWindow;
    use crate::weight::TestWeight;

    fn surrogate_config(count: usize, t: f64) -> CltConfig {
        let w = RadiusWindow::new(0.2, 0.5).unwrap();
        CltConfig {
            spec: ReplicaSpec {
                process: ProcessSpec::Surrogate { rho: 0.5, eta_mean: 1.0 },
                weights: vec![TestWeight::indicator(w), TestWeight::hat(w), TestWeight::zero(w)],
                horizon: t,
                observe_times: vec![t / 8.0, t / 4.0, t / 2.0],
            },
            calibration: SeedSet { master: 1, first: 0, count },
            evaluation: SeedSet { master: 2, first: 0, count },
            drop_initial: 0,
            projections: 5,
            projection_seed: 3,
            functional_n: None,
        }
    }

    #[test]
    fn seed_overlap_and_empty_sets_are_refused() {
        let mut c = surrogate_config(10, 10.0);
        c.evaluation = SeedSet { master: 1, first: 5, count: 10 };
        assert!(clt_experiment(&c).is_err());
        c.evaluation = SeedSet { master: 1, first: 10, count: 10 };
        assert!(c.validate().is_ok());
        c.evaluation.count = 0;
        assert!(clt_experiment(&c).is_err());
    }

    #[test]
    fn surrogate_report() {
        let run = clt_experiment(&surrogate_config(500, 200.0)).unwrap();
        let r = &run.report;
        assert_eq!(r.schema_version, SCHEMA_VERSION);
        assert!((r.weights[0].sigma_psi2_hat - 1.0).abs() < 0.15);
        assert!(r.weights[0].ks_distance < 0.1);
        assert!(r.weights[2].degenerate && r.degenerate);
        assert!(run.z[2].iter().all(|&z| z == 0.0));
        assert_eq!(r.multivariate.projections.len(), 5);
        let s = &r.multivariate.sigma_matrix;
        assert_eq!(s[0][1], s[1][0]);
        assert!(run.evaluation.iter().all(|x| x.cycles.iter().all(|c| c.y.len() == 3)));
        let a = serde_json::to_string(r).unwrap();
        let b = serde_json::to_string(&clt_experiment(&surrogate_config(500, 200.0)).unwrap().report).unwrap();
        assert_eq!(a, b);
    }
}
