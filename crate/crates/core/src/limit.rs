//! Centered cycle rewards, Green-Kubo variance and renewal quantities.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::regeneration::CycleRecord;
use crate::stats;

/// `rho = sum Delta / sum eta` per weight over all given cycles.
pub fn estimate_rho(cycles: &[&CycleRecord]) -> Result<Vec<f64>> {
    if cycles.len() < 30 {
        return Err(invalid(format!("slope estimate needs 30 complete cycles, got {}", cycles.len())));
    }
    let m = cycles[0].delta.len();
    let eta: f64 = cycles.iter().map(|c| c.eta).sum();
    Ok((0..m).map(|w| cycles.iter().map(|c| c.delta[w]).sum::<f64>() / eta).collect())
}

/// Rewards `Y_n = Delta_n - rho eta_n`, kept per replica so that lagged
/// products never straddle two independent sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSequence {
    pub rho: Vec<f64>,
    pub eta_mean: f64,
    /// `y[w][r][n]`: weight `w`, replica `r`, cycle `n`.
    pub y: Vec<Vec<Vec<f64>>>,
}

impl RewardSequence {
    pub fn weights(&self) -> usize {
        self.rho.len()
    }

    pub fn len(&self) -> usize {
        self.y.first().map_or(0, |w| w.iter().map(Vec::len).sum())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All rewards of weight `w`, replicas concatenated.
    pub fn flat(&self, w: usize) -> Vec<f64> {
        self.y[w].iter().flatten().copied().collect()
    }
}

pub fn center_rewards(per_replica: &[Vec<CycleRecord>], rho: &[f64]) -> Result<RewardSequence> {
    if rho.iter().any(|r| !r.is_finite()) {
        return Err(invalid("slope must be finite"));
    }
    let etas: Vec<f64> = per_replica.iter().flatten().map(|c| c.eta).collect();
    let y = (0..rho.len())
        .map(|w| {
            per_replica
                .iter()
                .map(|cs| cs.iter().map(|c| c.delta[w] - rho[w] * c.eta).collect())
                .collect()
        })
        .collect();
    Ok(RewardSequence { rho: rho.to_vec(), eta_mean: stats::mean(&etas), y })
}

/// Writes the rewards back into the cycle records.
pub fn assign_rewards(per_replica: &mut [Vec<CycleRecord>], rewards: &RewardSequence) {
    for (r, cs) in per_replica.iter_mut().enumerate() {
        for (n, c) in cs.iter_mut().enumerate() {
            c.y = (0..rewards.weights()).map(|w| rewards.y[w][r][n]).collect();
        }
    }
}

/// Pooled lag-0 and lag-1 cross-covariances of weights `i` and `j`:
/// `(Cov(Y0^i, Y0^j), Cov(Y0^i, Y1^j))`. Lag-0 uses `N - 1`; lag-1 averages
/// over the within-replica pairs `(n, n + 1)`.
fn cross_cov(rw: &RewardSequence, i: usize, j: usize) -> (f64, f64) {
    let (mi, mj) = (stats::mean(&rw.flat(i)), stats::mean(&rw.flat(j)));
    let n = rw.len();
    let mut c0 = 0.0;
    let mut c1 = 0.0;
    let mut pairs = 0usize;
    for (yi, yj) in rw.y[i].iter().zip(&rw.y[j]) {
        for k in 0..yi.len() {
            c0 += (yi[k] - mi) * (yj[k] - mj);
            if k + 1 < yi.len() {
                c1 += (yi[k] - mi) * (yj[k + 1] - mj);
                pairs += 1;
            }
        }
    }
    let c0 = if n > 1 { c0 / (n - 1) as f64 } else { 0.0 };
    let c1 = if pairs > 0 { c1 / pairs as f64 } else { 0.0 };
    (c0, c1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenKubo {
    pub var_y: f64,
    pub cov1: f64,
    /// `Var Y0 + 2 Cov(Y0, Y1)`, clamped at 0.
    pub sigma_cyc2: f64,
    /// `sigma_cyc2 / mean eta`.
    pub sigma_psi2: f64,
    pub clamped: bool,
}

pub fn green_kubo_variance(rewards: &RewardSequence, w: usize) -> Result<GreenKubo> {
    if rewards.len() < 100 {
        return Err(invalid(format!("variance estimate needs 100 rewards, got {}", rewards.len())));
    }
    let (var_y, cov1) = cross_cov(rewards, w, w);
    let raw = var_y + 2.0 * cov1;
    let clamped = raw < 0.0;
    let sigma_cyc2 = raw.max(0.0);
    Ok(GreenKubo { var_y, cov1, sigma_cyc2, sigma_psi2: sigma_cyc2 / rewards.eta_mean, clamped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub matrix: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// Smallest eigenvalue `>= -1e-10 trace`.
    pub psd: bool,
}

/// `Sigma_ij = [Cov(Y0^i, Y0^j) + Cov(Y0^i, Y1^j) + Cov(Y1^i, Y0^j)] / E eta`,
/// symmetrized.
pub fn covariance_matrix(rewards: &RewardSequence) -> CovarianceEstimate {
    let m = rewards.weights();
    let mut s = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let (c0, c1) = cross_cov(rewards, i, j);
            let (_, c1t) = cross_cov(rewards, j, i);
            s[i][j] = (c0 + c1 + c1t) / rewards.eta_mean;
        }
    }
    for i in 0..m {
        for j in 0..i {
            let a = 0.5 * (s[i][j] + s[j][i]);
            s[i][j] = a;
            s[j][i] = a;
        }
    }
    let eigenvalues = stats::symmetric_eigenvalues(&s);
    let trace: f64 = (0..m).map(|i| s[i][i]).sum();
    let psd = eigenvalues.first().is_none_or(|&e| e >= -1e-10 * trace.abs());
    CovarianceEstimate { matrix: s, eigenvalues, psd }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalState {
    pub t: f64,
    pub n_t: usize,
    pub a_t: f64,
    /// `Phi(t) - Phi(tau_{N_t})` per weight.
    pub r_t: Vec<f64>,
}

/// `phi_at_taus[n]` is `Phi(taus[n])`; `taus[0] = 0 <= t`.
pub fn renewal_state(taus: &[f64], t: f64, phi_at_t: &[f64], phi_at_taus: &[Vec<f64>]) -> Result<RenewalState> {
    if taus.first() != Some(&0.0) || t < 0.0 {
        return Err(invalid("renewal state needs tau_0 = 0 <= t"));
    }
    let n_t = taus.partition_point(|&s| s <= t) - 1;
    let base = &phi_at_taus[n_t];
    Ok(RenewalState { t, n_t, a_t: t - taus[n_t], r_t: phi_at_t.iter().zip(base).map(|(a, b)| a - b).collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalRow {
    pub s: f64,
    pub variance: f64,
    pub expected_variance: f64,
    pub ks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalMarginals {
    pub n: usize,
    pub replicas: usize,
    pub skipped: usize,
    pub rows: Vec<MarginalRow>,
    /// Correlation of `W(1/2)` and `W(1) - W(1/2)` across replicas; absent
    /// when either increment is constant.
    pub increment_correlation: Option<f64>,
    pub band: f64,
}

/// Finite-dimensional marginals of `W_n(s) = S_{floor(ns)} / sqrt(n)` across
/// replicas, each compared with `Normal(0, sigma_cyc2 s)`. Replicas with
/// fewer than `n` rewards are skipped.
pub fn functional_marginals(per_replica: &[Vec<f64>], n: usize, s_grid: &[f64], sigma_cyc2: f64) -> Result<FunctionalMarginals> {
    if n < 1000 {
        return Err(invalid(format!("functional marginals need n >= 1000, got {n}")));
    }
    if s_grid.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
        return Err(invalid("s grid must lie in (0, 1]"));
    }
    let usable: Vec<&Vec<f64>> = per_replica.iter().filter(|y| y.len() >= n).collect();
    if usable.len() < 2 {
        return Err(invalid("fewer than two replicas with enough rewards"));
    }
    let w = |y: &[f64], s: f64| y[..(n as f64 * s).floor() as usize].iter().sum::<f64>() / (n as f64).sqrt();
    let rows = s_grid
        .iter()
        .map(|&s| {
            let v: Vec<f64> = usable.iter().map(|y| w(y, s)).collect();
            MarginalRow { s, variance: stats::variance(&v), expected_variance: sigma_cyc2 * s, ks: stats::ks_normal(&v, 0.0, sigma_cyc2 * s) }
        })
        .collect();
    let a: Vec<f64> = usable.iter().map(|y| w(y, 0.5)).collect();
    let b: Vec<f64> = usable.iter().map(|y| w(y, 1.0) - w(y, 0.5)).collect();
    let corr = stats::covariance(&a, &b) / (stats::variance(&a) * stats::variance(&b)).sqrt();
    let corr = corr.is_finite().then_some(corr);
    Ok(FunctionalMarginals {
        n,
        replicas: usable.len(),
        skipped: per_replica.len() - usable.len(),
        rows,
        increment_correlation: corr,
        band: 3.0 / (usable.len() as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn cyc(delta: &[f64], eta: &[f64]) -> Vec<CycleRecord> {
        delta
            .iter()
            .zip(eta)
            .enumerate()
            .map(|(n, (&d, &e))| CycleRecord { n, tau_n: 0.0, tau_np1: e, eta: e, delta: vec![d], m_osc: vec![d.abs()], y: vec![], complete: true })
            .collect()
    }

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn rewards_from(seqs: Vec<Vec<Vec<f64>>>) -> RewardSequence {
        RewardSequence { rho: vec![0.0; seqs.len()], eta_mean: 1.0, y: seqs }
    }

    #[test]
    fn rho_examples() {
        let c = cyc(&[2.0; 40], &[4.0; 40]);
        let refs: Vec<&CycleRecord> = c.iter().collect();
        assert_eq!(estimate_rho(&refs).unwrap(), vec![0.5]);
        let z = cyc(&[0.0; 40], &[1.0; 40]);
        assert_eq!(estimate_rho(&z.iter().collect::<Vec<_>>()).unwrap(), vec![0.0]);
        assert!(estimate_rho(&refs[..10]).is_err());
    }

    #[test]
    fn rho_converges_on_synthetic_cycles() {
        // eta ~ Exp(1/2) (mean 2), Delta = 1 + N(0,1): E Delta / E eta = 1/2.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let exp = rand_distr::Exp::new(0.5).unwrap();
        let n = 10_000;
        let eta: Vec<f64> = (0..n).map(|_| exp.sample(&mut rng)).collect();
        let delta: Vec<f64> = normals(2, n).iter().map(|g| 1.0 + g).collect();
        let c = cyc(&delta, &eta);
        let rho = estimate_rho(&c.iter().collect::<Vec<_>>()).unwrap()[0];
        // Delta method: sd(rho) ~ sqrt(Var(Delta - rho eta)) / (sqrt(n) E eta).
        let se = (1.0 + 0.25 * 4.0f64).sqrt() / ((n as f64).sqrt() * 2.0);
        assert!((rho - 0.5).abs() < 3.0 * se, "rho {rho}");
    }

    #[test]
    fn centering_examples_and_identity() {
        let c = vec![cyc(&[3.0, 2.0], &[2.0, 2.0])];
        let r = center_rewards(&c, &[1.25]).unwrap();
        assert_eq!(r.y[0][0], vec![0.5, -0.5]);
        assert_eq!(center_rewards(&c, &[0.0]).unwrap().y[0][0], vec![3.0, 2.0]);
        assert!(center_rewards(&c, &[f64::NAN]).is_err());

        let delta = normals(3, 500);
        let eta: Vec<f64> = normals(4, 500).iter().map(|g| 1.5 + 0.3 * g.abs()).collect();
        let c = vec![cyc(&delta, &eta)];
        let rho = estimate_rho(&c[0].iter().collect::<Vec<_>>()).unwrap();
        let r = center_rewards(&c, &rho).unwrap();
        let scale: f64 = delta.iter().map(|d| d.abs()).sum();
        assert!(r.flat(0).iter().sum::<f64>().abs() <= 1e-9 * scale);
    }

    #[test]
    fn green_kubo_iid_and_ma1() {
        let n = 40_000;
        let e = normals(5, n + 1);
        let iid = green_kubo_variance(&rewards_from(vec![vec![e[..n].to_vec()]]), 0).unwrap();
        // sd of the estimate: Var(y^2) = 2 plus 4 Var(y_n y_{n+1}) = 4, so ~sqrt(6/n).
        assert!((iid.sigma_cyc2 - 1.0).abs() < 3.0 * (6.0 / n as f64).sqrt());
        let ma: Vec<f64> = e.windows(2).map(|w| w[0] + w[1]).collect();
        let g = green_kubo_variance(&rewards_from(vec![vec![ma]]), 0).unwrap();
        assert!((g.var_y - 2.0).abs() < 0.1 && (g.cov1 - 1.0).abs() < 0.1, "{g:?}");
        assert!((g.sigma_cyc2 - 4.0).abs() < 0.2);
        let zero = green_kubo_variance(&rewards_from(vec![vec![vec![0.0; 200]]]), 0).unwrap();
        assert_eq!((zero.sigma_cyc2, zero.sigma_psi2), (0.0, 0.0));
        assert!(green_kubo_variance(&rewards_from(vec![vec![vec![0.0; 50]]]), 0).is_err());
    }

    #[test]
    fn negative_estimate_is_clamped() {
        // Alternating signs: Var 1, lag-1 covariance -1.
        let y: Vec<f64> = (0..200).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let g = green_kubo_variance(&rewards_from(vec![vec![y]]), 0).unwrap();
        assert!(g.clamped && g.sigma_cyc2 == 0.0);
    }

    #[test]
    fn lagged_products_stay_within_replicas() {
        // Two replicas [1, 1] and [-1, -1]: within-replica lag-1 products are
        // all +1, a concatenated series would include one -1.
        let r = rewards_from(vec![vec![vec![1.0; 60], vec![-1.0; 60]]]);
        let g = green_kubo_variance(&r, 0).unwrap();
        assert_abs_diff_eq!(g.cov1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn covariance_matrix_properties() {
        let a = normals(6, 5000);
        let b = normals(7, 5000);
        let one = rewards_from(vec![vec![a.clone()]]);
        let s = covariance_matrix(&one);
        assert_abs_diff_eq!(s.matrix[0][0], green_kubo_variance(&one, 0).unwrap().sigma_psi2, epsilon = 1e-12);
        let dup = covariance_matrix(&rewards_from(vec![vec![a.clone()], vec![a.clone()]]));
        let m = &dup.matrix;
        assert!((m[0][0] - m[0][1]).abs() < 1e-12 && (m[1][1] - m[1][0]).abs() < 1e-12);
        assert!(dup.eigenvalues[0].abs() < 1e-10 && dup.psd);
        let ind = covariance_matrix(&rewards_from(vec![vec![a], vec![b]]));
        // sd of the off-diagonal ~ sqrt(3/n).
        assert!(ind.matrix[0][1].abs() < 3.0 * (3.0 / 5000.0f64).sqrt());
        assert_eq!(ind.matrix[0][1], ind.matrix[1][0]);
    }

    #[test]
    fn renewal_examples() {
        let taus = [0.0, 1.0, 2.0, 3.0];
        let phis = vec![vec![0.0], vec![1.0], vec![4.0], vec![5.0]];
        let s = renewal_state(&taus, 2.5, &[4.5], &phis).unwrap();
        assert_eq!((s.n_t, s.a_t, s.r_t.clone()), (2, 0.5, vec![0.5]));
        let s = renewal_state(&taus, 3.0, &[5.0], &phis).unwrap();
        assert_eq!((s.n_t, s.a_t, s.r_t[0]), (3, 0.0, 0.0));
        assert!(renewal_state(&[1.0], 2.0, &[0.0], &phis).is_err());
    }

    #[test]
    fn functional_marginals_iid() {
        let reps: Vec<Vec<f64>> = (0..1500).map(|r| normals(100 + r, 1000)).collect();
        let f = functional_marginals(&reps, 1000, &[0.25, 0.5, 1.0], 1.0).unwrap();
        for row in &f.rows {
            assert!(row.ks < crate::stats::ks_threshold_95(1500), "{row:?}");
        }
        assert!(f.increment_correlation.unwrap().abs() < f.band);
        assert!(functional_marginals(&reps, 999, &[1.0], 1.0).is_err());
        assert!(functional_marginals(&reps, 1000, &[0.0], 1.0).is_err());
    }
}
