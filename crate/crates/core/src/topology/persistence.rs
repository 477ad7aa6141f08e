//! Degree-one persistence of the alpha filtration and its Betti curve.

use serde::{Deserialize, Serialize};

use super::alpha::AlphaComplex;
use crate::error::{invalid, Result};

/// Compact radius window `[r0, r1]` with `0 < r0 < r1 < inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusWindow {
    pub r0: f64,
    pub r1: f64,
}

impl RadiusWindow {
    pub fn new(r0: f64, r1: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0 < r1 && r1.is_finite()) {
            return Err(invalid(format!("radius window needs 0 < r0 < r1 < inf, got [{r0}, {r1}]")));
        }
        Ok(Self { r0, r1 })
    }

    pub fn width(&self) -> f64 {
        self.r1 - self.r0
    }

    pub fn contains(&self, r: f64) -> bool {
        self.r0 <= r && r <= self.r1
    }
}

/// Finite degree-one persistence pairs `(birth, death)` with `birth < death`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PersistencePairs {
    pub pairs: Vec<(f64, f64)>,
    /// Classes that never die; zero for any finite planar cloud.
    pub essential: usize,
    /// Edge/triangle pairs entering at the same radius (not reported).
    pub zero_persistence: usize,
}

impl PersistencePairs {
    pub fn from_pairs(pairs: Vec<(f64, f64)>) -> Self {
        Self { pairs, essential: 0, zero_persistence: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    /// `#{(b, d) : b <= r < d}`.
    pub fn betti_at(&self, r: f64) -> usize {
        self.pairs.iter().filter(|&&(b, d)| b <= r && r < d).count()
    }
}

/// Column reduction over Z/2 of the triangle-to-edge boundary matrix, with
/// simplices ordered by `(alpha, dimension, canonical index)`.
///
/// Only the degree-one part is needed: every triangle column of a planar
/// complex reduces to a nonzero column whose pivot edge is the birth of the
/// class that the triangle kills.
pub fn persistence_deg1(complex: &AlphaComplex) -> PersistencePairs {
    let ne = complex.edges.len();
    // Edges in filtration order; `rank[i]` is the position of edge `i`.
    let mut edge_order: Vec<u32> = (0..ne as u32).collect();
    edge_order.sort_by(|&a, &b| {
        let (ea, eb) = (&complex.edges[a as usize], &complex.edges[b as usize]);
        ea.alpha.total_cmp(&eb.alpha).then(ea.v.cmp(&eb.v))
    });
    let mut rank = vec![0u32; ne];
    for (pos, &e) in edge_order.iter().enumerate() {
        rank[e as usize] = pos as u32;
    }
    let edge_index = |a: u32, b: u32| -> usize {
        let key = [a.min(b), a.max(b)];
        complex.edges.binary_search_by(|e| e.v.cmp(&key)).expect("triangle edge is in the complex")
    };

    let mut tri_order: Vec<u32> = (0..complex.triangles.len() as u32).collect();
    tri_order.sort_by(|&a, &b| {
        let (ta, tb) = (&complex.triangles[a as usize], &complex.triangles[b as usize]);
        ta.alpha.total_cmp(&tb.alpha).then(ta.v.cmp(&tb.v))
    });

    // pivot_owner[edge position] = reduced column with that pivot.
    let mut pivot_owner: Vec<u32> = vec![u32::MAX; ne];
    let mut reduced: Vec<Vec<u32>> = Vec::with_capacity(tri_order.len());
    let mut scratch = Vec::new();
    let mut out = PersistencePairs::default();
    for &t in &tri_order {
        let tri = &complex.triangles[t as usize];
        let [a, b, c] = tri.v;
        let mut col: Vec<u32> = [edge_index(a, b), edge_index(b, c), edge_index(a, c)]
            .iter()
            .map(|&e| rank[e])
            .collect();
        col.sort_unstable();
        while let Some(&low) = col.last() {
            let owner = pivot_owner[low as usize];
            if owner == u32::MAX {
                break;
            }
            symmetric_difference(&col, &reduced[owner as usize], &mut scratch);
            std::mem::swap(&mut col, &mut scratch);
        }
        let low = *col.last().expect("planar triangle columns never reduce to zero");
        pivot_owner[low as usize] = reduced.len() as u32;
        reduced.push(col);
        let birth = complex.edges[edge_order[low as usize] as usize].alpha;
        if birth < tri.alpha {
            out.pairs.push((birth, tri.alpha));
        } else {
            out.zero_persistence += 1;
        }
    }
    // beta1 of the full complex = #positive edges - #killing triangles.
    let merges = complex.merge_radii().len();
    let positive = ne - merges;
    out.essential = positive - tri_order.len();
    out
}

fn symmetric_difference(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Right-continuous step function `beta1(r)` on a radius window.
///
/// `values[i]` holds on `[breakpoints[i], breakpoints[i + 1])`, the last
/// value up to `window.r1`. `breakpoints[0] == window.r0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BettiCurve {
    pub window: RadiusWindow,
    pub breakpoints: Vec<f64>,
    pub values: Vec<u32>,
}

impl BettiCurve {
    pub fn value_at(&self, r: f64) -> u32 {
        if !self.window.contains(r) {
            return 0;
        }
        let k = self.breakpoints.partition_point(|&b| b <= r);
        self.values[k.saturating_sub(1)]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    /// `(r, beta1)` rows where the value changes, starting at `r0` when the
    /// curve is nonzero there. Empty for the zero curve.
    pub fn change_points(&self) -> Vec<(f64, u32)> {
        let mut out = Vec::new();
        let mut prev = 0;
        for (&r, &v) in self.breakpoints.iter().zip(&self.values) {
            if v != prev {
                out.push((r, v));
                prev = v;
            }
        }
        out
    }

    /// `int_{r0}^{r1} beta1(r) dr`.
    pub fn integral(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.values.len() {
            let hi = self.breakpoints.get(i + 1).copied().unwrap_or(self.window.r1);
            s += self.values[i] as f64 * (hi - self.breakpoints[i]);
        }
        s
    }
}

pub fn betti_curve(pairs: &PersistencePairs, window: RadiusWindow) -> BettiCurve {
    let mut breakpoints = vec![window.r0];
    for &(b, d) in &pairs.pairs {
        for x in [b, d] {
            if x > window.r0 && x < window.r1 {
                breakpoints.push(x);
            }
        }
    }
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();
    // Sweep births (+1) and deaths (-1).
    let mut events: Vec<(f64, i32)> = pairs.pairs.iter().flat_map(|&(b, d)| [(b, 1), (d, -1)]).collect();
    events.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut values = Vec::with_capacity(breakpoints.len());
    let mut k = 0;
    let mut level: i64 = 0;
    for &r in &breakpoints {
        while k < events.len() && events[k].0 <= r {
            level += events[k].1 as i64;
            k += 1;
        }
        values.push(level as u32);
    }
    BettiCurve { window, breakpoints, values }
}

/// `beta1` of the union of radius-`r` disks around `points`.
pub fn betti1_at_radius(points: &[crate::geom::Point], r: f64) -> Result<usize> {
    if !(r > 0.0) {
        return Err(invalid(format!("radius must be positive, got {r}")));
    }
    let c = super::alpha::build_alpha_complex(points)?;
    Ok(c.betti_at(r).1)
}
