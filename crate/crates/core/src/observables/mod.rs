//! Weighted Betti integrals, sausage area and the deterministic bounds.

pub mod prefix;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::pathgen::ResampledPath;
use crate::stats;
use crate::topology::{build_alpha_complex, persistence_deg1, sausage_area, AreaEstimate, PersistencePairs, RadiusWindow};
use crate::weight::TestWeight;

pub use prefix::{phi_at_times, phi_euler, PhiEngine};

/// `sum over pairs of int_{max(b, r0)}^{min(d, r1)} psi`.
pub fn phi_psi(pairs: &PersistencePairs, psi: &TestWeight) -> f64 {
    pairs.pairs.iter().map(|&(b, d)| psi.integral(b, d)).sum()
}

/// `int_{r0}^{r1} beta1(r) dr`.
pub fn h_t(pairs: &PersistencePairs, window: RadiusWindow) -> f64 {
    pairs.pairs.iter().map(|&(b, d)| (d.min(window.r1) - b.max(window.r0)).max(0.0)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSample {
    pub t: f64,
    /// One value per weight, in the order the weights were given.
    pub phi: Vec<f64>,
    pub h: f64,
    pub area_r1: f64,
    pub area_error: f64,
    pub seed: u64,
    pub dt: f64,
    pub max_spacing: f64,
}

/// Observables of the path prefix up to time `t`, computed from scratch
/// through persistence pairs. `cell` is the raster size for the area at
/// `r1`.
pub fn observe_prefix(path: &ResampledPath, weights: &[TestWeight], window: RadiusWindow, t: f64, cell: f64) -> Result<(ObservableSample, PersistencePairs)> {
    let n = path.prefix_len(t);
    if n == 0 {
        return Err(invalid(format!("no samples at or before t = {t}")));
    }
    let pts = &path.points[..n];
    let pairs = persistence_deg1(&build_alpha_complex(pts)?);
    let area = sausage_area(pts, window.r1, cell)?;
    let sample = ObservableSample {
        t,
        phi: weights.iter().map(|w| phi_psi(&pairs, w)).collect(),
        h: h_t(&pairs, window),
        area_r1: area.area,
        area_error: area.error_bound,
        seed: path.base.seed.tag(),
        dt: path.base.dt_nominal,
        max_spacing: path.max_spacing,
    };
    Ok((sample, pairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaBoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// `H(K) <= |K^{r1}| / (2 pi r0)`, with the area taken at its upper
/// raster bound.
pub fn check_area_bound(pairs: &PersistencePairs, window: RadiusWindow, area_r1: &AreaEstimate) -> AreaBoundCheck {
    let lhs = h_t(pairs, window);
    let rhs = area_r1.upper() / (2.0 * std::f64::consts::PI * window.r0);
    AreaBoundCheck { lhs, rhs, ok: lhs <= rhs }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub t: f64,
    pub replicas: usize,
    pub mean_h2: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentScaling {
    pub rows: Vec<MomentRow>,
    /// Slope of `log mean_h2` against `log t`; absent when some mean is 0.
    pub slope: Option<f64>,
}

/// Groups samples by `t` and tabulates `E[H_t²]` and `E[H_t²]/(1 + t³)`.
pub fn moment_scaling_diagnostic(samples: &[ObservableSample]) -> Result<MomentScaling> {
    let mut ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    if ts.len() < 2 {
        return Err(invalid("moment diagnostic needs at least two distinct times"));
    }
    let mut rows = Vec::with_capacity(ts.len());
    for &t in &ts {
        let h2: Vec<f64> = samples.iter().filter(|s| s.t == t).map(|s| s.h * s.h).collect();
        if h2.len() < 100 {
            return Err(invalid(format!("moment diagnostic needs 100 replicas per time, t = {t} has {}", h2.len())));
        }
        let mean_h2 = stats::mean(&h2);
        rows.push(MomentRow { t, replicas: h2.len(), mean_h2, ratio: mean_h2 / (1.0 + t * t * t) });
    }
    let slope = if rows.iter().all(|r| r.mean_h2 > 0.0) {
        let x: Vec<f64> = rows.iter().map(|r| r.t.ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.mean_h2.ln()).collect();
        stats::ols(&x, &y).map(|f| f.slope)
    } else {
        None
    };
    Ok(MomentScaling { rows, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use approx::assert_abs_diff_eq;

    fn triangle_pairs() -> PersistencePairs {
        let tri = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 0.5 * 3f64.sqrt())];
        persistence_deg1(&build_alpha_complex(&tri).unwrap())
    }

    #[test]
    fn triangle_fixture() {
        let w = RadiusWindow::new(0.4, 0.7).unwrap();
        let expected = 1.0 / 3f64.sqrt() - 0.5;
        assert_abs_diff_eq!(phi_psi(&triangle_pairs(), &TestWeight::indicator(w)), expected, epsilon = 1e-9);
        assert_abs_diff_eq!(h_t(&triangle_pairs(), w), expected, epsilon = 1e-9);
        assert_eq!(h_t(&PersistencePairs::default(), w), 0.0);
        let full = PersistencePairs::from_pairs(vec![(0.4, 0.7)]);
        assert_abs_diff_eq!(phi_psi(&full, &TestWeight::indicator(w)), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn area_bound_fixture() {
        let w = RadiusWindow::new(0.4, 0.7).unwrap();
        let tri = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 0.5 * 3f64.sqrt())];
        let area = sausage_area(&tri, 0.7, 0.7 / 64.0).unwrap();
        let c = check_area_bound(&triangle_pairs(), w, &area);
        assert!(c.ok && c.lhs > 0.07 && c.rhs > 1.0);
        assert!(check_area_bound(&PersistencePairs::default(), w, &area).ok);
    }

    fn sample(t: f64, h: f64) -> ObservableSample {
        ObservableSample { t, phi: vec![], h, area_r1: 0.0, area_error: 0.0, seed: 0, dt: 0.0, max_spacing: 0.0 }
    }

    #[test]
    fn moment_table() {
        let mut s: Vec<ObservableSample> = (0..100).map(|_| sample(10.0, 0.0)).collect();
        assert!(moment_scaling_diagnostic(&s).is_err());
        s.extend((0..100).map(|_| sample(20.0, 0.0)));
        let m = moment_scaling_diagnostic(&s).unwrap();
        assert!(m.rows.iter().all(|r| r.ratio == 0.0));
        assert!(m.slope.is_none());
        let s: Vec<ObservableSample> = [1.0, 2.0, 4.0].iter().flat_map(|&t| (0..100).map(move |_| sample(t, t))).collect();
        assert_abs_diff_eq!(moment_scaling_diagnostic(&s).unwrap().slope.unwrap(), 2.0, epsilon = 1e-12);
        assert!(moment_scaling_diagnostic(&s[..150]).is_err());
    }
}
