//! Discretized drifted planar Brownian paths `X_t = B_t + mu t`.
//!
//! Increments are sampled exactly (`mu h + sqrt(h) G`), so the only
//! approximation is the time grid itself. [`resample_to_spacing`] then
//! inserts points along the polygonal trace so that consecutive samples are
//! close enough for the offset topology at the radii of interest.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::Point;
use crate::rng::StreamId;

/// Drift vector together with its orthonormal frame `(e, e_perp)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftVector {
    pub mu: Point,
    pub e: Point,
    pub e_perp: Point,
}

impl DriftVector {
    pub fn new(mu: Point) -> Result<Self> {
        let n = mu.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(invalid(format!("drift must be nonzero and finite, got ({}, {})", mu.x, mu.y)));
        }
        let e = Point::new(mu.x / n, mu.y / n);
        Ok(Self { mu, e, e_perp: Point::new(-e.y, e.x) })
    }

    pub fn speed(&self) -> f64 {
        self.mu.norm()
    }
}

/// One realization of the drifted path on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftedPath {
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    pub drift: DriftVector,
    pub seed: StreamId,
    pub dt_nominal: f64,
}

impl DriftedPath {
    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("paths are never empty")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Time step for which a single Gaussian step exceeds `r0 / 4` with
/// probability below `1e-6` (drift contribution neglected).
pub fn default_dt(r0: f64) -> f64 {
    (r0 / 4.0).powi(2) / 36.0
}

/// Simulates a path from replica stream `(seed, 0)`.
pub fn simulate_path(drift: DriftVector, horizon: f64, dt: f64, seed: u64) -> Result<DriftedPath> {
    simulate_stream(drift, horizon, dt, StreamId::new(seed, 0))
}

pub fn simulate_stream(drift: DriftVector, horizon: f64, dt: f64, stream: StreamId) -> Result<DriftedPath> {
    simulate_with_diffusion(drift, horizon, dt, stream, 1.0)
}

/// Number of grid steps covering `[0, horizon]` with nominal step `dt`.
pub fn step_count(horizon: f64, dt: f64) -> usize {
    let n = (horizon / dt - 1e-9).ceil();
    n.max(1.0) as usize
}

/// Simulates `X_t = diffusion * B_t + mu t`. `diffusion = 1` is the model;
/// `diffusion = 0` gives the deterministic drift-only path used as a test hook.
pub fn simulate_with_diffusion(
    drift: DriftVector,
    horizon: f64,
    dt: f64,
    stream: StreamId,
    diffusion: f64,
) -> Result<DriftedPath> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    if !(diffusion >= 0.0) {
        return Err(invalid("diffusion coefficient must be nonnegative"));
    }
    let n = step_count(horizon, dt);
    let mut rng = stream.rng();
    let mut times = Vec::with_capacity(n + 1);
    let mut points = Vec::with_capacity(n + 1);
    times.push(0.0);
    points.push(Point::ORIGIN);
    let mut cur = Point::ORIGIN;
    for k in 1..=n {
        let t = if k == n { horizon } else { k as f64 * dt };
        let h = t - times[k - 1];
        let gx: f64 = rng.sample(StandardNormal);
        let gy: f64 = rng.sample(StandardNormal);
        let s = h.sqrt() * diffusion;
        cur = Point::new(cur.x + drift.mu.x * h + s * gx, cur.y + drift.mu.y * h + s * gy);
        times.push(t);
        points.push(cur);
    }
    Ok(DriftedPath { times, points, drift, seed: stream, dt_nominal: dt })
}

/// `U_k = <X_k, e>` along the path.
pub fn longitudinal_process(path: &DriftedPath) -> Vec<f64> {
    path.points.iter().map(|p| p.dot(path.drift.e)).collect()
}

/// `<X_k, e_perp>` along the path.
pub fn transverse_process(path: &DriftedPath) -> Vec<f64> {
    path.points.iter().map(|p| p.dot(path.drift.e_perp)).collect()
}

/// The path with linearly interpolated samples inserted so that consecutive
/// points are at most `max_spacing` apart.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampledPath {
    pub base: DriftedPath,
    pub max_spacing: f64,
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    /// Position of each original sample inside `points`.
    pub original_index: Vec<usize>,
}

impl ResampledPath {
    /// Number of resampled points with time `<= t`.
    pub fn prefix_len(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }
}

pub fn resample_to_spacing(path: DriftedPath, max_spacing: f64) -> Result<ResampledPath> {
    if !(max_spacing > 0.0) || !max_spacing.is_finite() {
        return Err(invalid(format!("max_spacing must be positive, got {max_spacing}")));
    }
    let mut times = Vec::with_capacity(path.len());
    let mut points = Vec::with_capacity(path.len());
    let mut original_index = Vec::with_capacity(path.len());
    let mut seg = Vec::new();
    for k in 0..path.len() {
        let q = path.points[k];
        if k > 0 {
            let p = path.points[k - 1];
            let d = p.dist(q);
            if d > max_spacing {
                let (t0, t1) = (path.times[k - 1], path.times[k]);
                let mut pieces = (d / max_spacing).ceil() as usize;
                // Rounding in the interpolation can overshoot by an ulp.
                loop {
                    seg.clear();
                    seg.extend((1..pieces).map(|j| {
                        let f = j as f64 / pieces as f64;
                        (t0 + (t1 - t0) * f, Point::new(p.x + (q.x - p.x) * f, p.y + (q.y - p.y) * f))
                    }));
                    let mut prev = p;
                    let ok = seg.iter().map(|s| s.1).chain([q]).all(|x| {
                        let fits = prev.dist(x) <= max_spacing;
                        prev = x;
                        fits
                    });
                    if ok {
                        break;
                    }
                    pieces += 1;
                }
                for &(t, x) in &seg {
                    times.push(t);
                    points.push(x);
                }
            }
        }
        original_index.push(points.len());
        points.push(q);
        times.push(path.times[k]);
    }
    Ok(ResampledPath { base: path, max_spacing, times, points, original_index })
}
