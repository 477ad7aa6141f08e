//! Weighted Betti integrals along a growing path.
//!
//! On a window `[r0, r1]` with `beta0 = 1` throughout,
//! `beta1(r) = 1 - V + E(r) - F(r)`, so
//!
//! ```text
//! Phi = (1 - V) T + sum_edges T(alpha_e) - sum_triangles T(alpha_f)
//! ```
//!
//! with `T(a) = int_{max(a, r0)}^{r1} psi`. Every term is local to the
//! Delaunay triangulation, so inserting a point only touches the cavity.
//! Terms are accumulated in 64.64 fixed point so that removing a simplex
//! cancels its earlier contribution exactly and the running value does not
//! depend on insertion history.

use crate::error::{invalid, Result};
use crate::geom::Point;
use crate::pathgen::ResampledPath;
use crate::topology::alpha::{edge_alpha, triangle_alpha, AlphaComplex};
use crate::topology::delaunay::{InsertHook, Triangulation, GHOST};
use crate::topology::RadiusWindow;
use crate::weight::TestWeight;

const SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64

#[inline]
fn quantize(v: f64) -> i128 {
    (v * SCALE).round() as i128
}

#[inline]
fn dequantize(q: i128) -> f64 {
    q as f64 / SCALE
}

/// Quantized tail integrals `T(a)` for a set of weights on one window.
#[derive(Debug, Clone)]
struct Tails {
    weights: Vec<TestWeight>,
    window: RadiusWindow,
    full: Vec<i128>,
}

impl Tails {
    fn new(weights: &[TestWeight]) -> Result<Self> {
        let window = weights.first().ok_or_else(|| invalid("at least one weight is required"))?.window();
        if weights.iter().any(|w| w.window() != window) {
            return Err(invalid("all weights must share one radius window"));
        }
        let full = weights.iter().map(|w| quantize(w.total())).collect();
        Ok(Self { weights: weights.to_vec(), window, full })
    }

    #[inline]
    fn add(&self, acc: &mut [i128], alpha: f64, sign: i128) {
        if alpha >= self.window.r1 {
            return;
        }
        if alpha <= self.window.r0 {
            for (a, f) in acc.iter_mut().zip(&self.full) {
                *a += sign * f;
            }
        } else {
            for (a, w) in acc.iter_mut().zip(&self.weights) {
                *a += sign * quantize(w.tail(alpha));
            }
        }
    }

    fn finish(&self, acc: &[i128], vertices: usize) -> Vec<f64> {
        acc.iter().zip(&self.full).map(|(a, f)| dequantize(a + (1 - vertices as i128) * f)).collect()
    }
}

struct Accumulate<'a> {
    tails: &'a Tails,
    acc: &'a mut [i128],
    edges: Vec<(u32, u32, u32, u32)>,
}

impl Accumulate<'_> {
    fn apply(&mut self, tri: &Triangulation, set: &[u32], sign: i128) {
        self.edges.clear();
        for &t in set {
            let tr = *tri.tri(t);
            if !tr.is_ghost() {
                let [a, b, c] = tr.v.map(|v| tri.point(v));
                self.tails.add(self.acc, triangle_alpha(a, b, c), -sign);
            }
            for i in 0..3 {
                let (a, b) = (tr.v[(i + 1) % 3], tr.v[(i + 2) % 3]);
                if a == GHOST || b == GHOST {
                    continue;
                }
                let key = (a.min(b), a.max(b));
                if self.edges.iter().any(|e| (e.0, e.1) == key) {
                    continue;
                }
                self.edges.push((key.0, key.1, tr.v[i], tri.opposite_across(t, i)));
            }
        }
        let pt = |v: u32| (v != GHOST).then(|| tri.point(v));
        for &(a, b, l, r) in &self.edges {
            let alpha = edge_alpha(tri.point(a), tri.point(b), pt(l), pt(r));
            self.tails.add(self.acc, alpha, sign);
        }
    }
}

impl InsertHook for Accumulate<'_> {
    fn removing(&mut self, tri: &Triangulation, cavity: &[u32]) {
        self.apply(tri, cavity, -1);
    }

    fn created(&mut self, tri: &Triangulation, new: &[u32]) {
        self.apply(tri, new, 1);
    }
}

/// Running `Phi_psi` of a growing point sequence for several weights.
///
/// Consecutive points must lie within `2 r0` of each other so that the
/// union of disks stays connected on the window.
#[derive(Debug, Clone)]
pub struct PhiEngine {
    tri: Triangulation,
    tails: Tails,
    acc: Vec<i128>,
    last: Option<Point>,
    scratch: Vec<(u32, u32, u32, u32)>,
}

impl PhiEngine {
    pub fn new(weights: &[TestWeight]) -> Result<Self> {
        let tails = Tails::new(weights)?;
        let acc = vec![0; weights.len()];
        Ok(Self { tri: Triangulation::new(), tails, acc, last: None, scratch: Vec::new() })
    }

    pub fn window(&self) -> RadiusWindow {
        self.tails.window
    }

    pub fn num_vertices(&self) -> usize {
        self.tri.num_vertices()
    }

    pub fn insert(&mut self, p: Point) -> Result<()> {
        if !p.is_finite() {
            return Err(invalid("non-finite point"));
        }
        if let Some(q) = self.last {
            let d = p.dist(q);
            if d > 2.0 * self.tails.window.r0 {
                return Err(invalid(format!(
                    "consecutive points {d} apart exceed 2 r0 = {}; resample the path more finely",
                    2.0 * self.tails.window.r0
                )));
            }
        }
        self.last = Some(p);
        let edges = std::mem::take(&mut self.scratch);
        let mut hook = Accumulate { tails: &self.tails, acc: &mut self.acc, edges };
        self.tri.insert(p, &mut hook);
        self.scratch = hook.edges;
        Ok(())
    }

    /// Current value for every weight.
    pub fn phi(&self) -> Vec<f64> {
        if !self.tri.has_triangles() {
            return vec![0.0; self.acc.len()];
        }
        self.tails.finish(&self.acc, self.tri.num_vertices())
    }
}

/// `Phi_psi` at each requested time for every weight (`result[time][weight]`),
/// evaluated on the prefix of resampled points with time `<= t`.
pub fn phi_at_times(path: &ResampledPath, weights: &[TestWeight], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut engine = PhiEngine::new(weights)?;
    let mut out = vec![Vec::new(); times.len()];
    let mut k = 0;
    for &i in &order {
        let end = path.prefix_len(times[i]);
        while k < end {
            engine.insert(path.points[k])?;
            k += 1;
        }
        out[i] = engine.phi();
    }
    Ok(out)
}

/// The same sum on a finished complex, with `beta0` handled through the
/// merge radii so that no connectivity assumption is needed. Uses the
/// identical quantization as [`PhiEngine`].
pub fn phi_euler(complex: &AlphaComplex, weights: &[TestWeight]) -> Result<Vec<f64>> {
    let tails = Tails::new(weights)?;
    let mut acc = vec![0i128; weights.len()];
    for e in &complex.edges {
        tails.add(&mut acc, e.alpha, 1);
    }
    for f in &complex.triangles {
        tails.add(&mut acc, f.alpha, -1);
    }
    let merges = complex.merge_radii();
    // (1 - V) full terms cancel the V - 1 merges below r0; add back the rest.
    for &m in &merges {
        if m > tails.window.r0 {
            tails.add(&mut acc, m, -1);
            for (a, f) in acc.iter_mut().zip(&tails.full) {
                *a += f;
            }
        }
    }
    let components = complex.num_vertices() - merges.len();
    // beta0 never drops below the number of components of the full complex.
    for (a, f) in acc.iter_mut().zip(&tails.full) {
        *a += (components as i128 - 1) * f;
    }
    Ok(tails.finish(&acc, complex.num_vertices()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::phi_psi;
    use crate::pathgen::{resample_to_spacing, simulate_path, DriftVector};
    use crate::topology::alpha::{build_alpha_complex, from_triangulation};
    use crate::topology::persistence_deg1;

    fn weights(w: RadiusWindow) -> Vec<TestWeight> {
        vec![TestWeight::indicator(w), TestWeight::hat(w), TestWeight::ramp(w)]
    }

    #[test]
    fn prefix_values_match_recomputation() {
        let window = RadiusWindow::new(0.2, 0.5).unwrap();
        let ws = weights(window);
        let drift = DriftVector::new(Point::new(1.0, 0.0)).unwrap();
        for seed in 0..4 {
            let path = resample_to_spacing(simulate_path(drift, 6.0, 2e-3, seed).unwrap(), 0.05).unwrap();
            let times = [0.5, 1.0, 2.5, 4.0, 6.0];
            let incremental = phi_at_times(&path, &ws, &times).unwrap();
            for (t, inc) in times.iter().zip(&incremental) {
                let n = path.prefix_len(*t);
                let pts = &path.points[..n];
                let (tri, _) = Triangulation::from_points(pts);
                let direct = phi_euler(&from_triangulation(&tri, tri.duplicates()), &ws).unwrap();
                assert_eq!(inc, &direct, "seed {seed}, t {t}");
                let pairs = persistence_deg1(&build_alpha_complex(pts).unwrap());
                for (w, v) in ws.iter().zip(inc) {
                    let p = phi_psi(&pairs, w);
                    assert!((p - v).abs() < 1e-9, "pairs route {p} vs {v}");
                }
            }
        }
    }

    #[test]
    fn euler_route_handles_disconnected_clouds() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let window = RadiusWindow::new(0.02, 0.09).unwrap();
        let ws = weights(window);
        for _ in 0..20 {
            let pts: Vec<Point> = (0..120).map(|_| Point::new(rng.random(), rng.random())).collect();
            let c = build_alpha_complex(&pts).unwrap();
            let pairs = persistence_deg1(&c);
            let e = phi_euler(&c, &ws).unwrap();
            for (w, v) in ws.iter().zip(&e) {
                assert!((phi_psi(&pairs, w) - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spacing_precondition_enforced() {
        let window = RadiusWindow::new(0.2, 0.5).unwrap();
        let mut e = PhiEngine::new(&weights(window)).unwrap();
        e.insert(Point::ORIGIN).unwrap();
        assert!(e.insert(Point::new(0.5, 0.0)).is_err());
        assert!(PhiEngine::new(&[]).is_err());
        let other = TestWeight::indicator(RadiusWindow::new(0.1, 0.5).unwrap());
        assert!(PhiEngine::new(&[TestWeight::indicator(window), other]).is_err());
    }

    #[test]
    fn triangle_fixture_through_engine() {
        let window = RadiusWindow::new(0.5, 0.7).unwrap();
        let mut e = PhiEngine::new(&[TestWeight::indicator(window)]).unwrap();
        for p in [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 0.5 * 3f64.sqrt())] {
            e.insert(p).unwrap();
        }
        assert!((e.phi()[0] - (1.0 / 3f64.sqrt() - 0.5)).abs() < 1e-12);
    }
}
