//! Alpha filtration of the Delaunay triangulation for equal-radius disks.

use serde::{Deserialize, Serialize};

use super::delaunay::{Triangulation, GHOST};
use crate::error::{invalid, Result};
use crate::geom::{circumradius, encroaches, Point};

/// Filtration value of a triangle: its circumradius, never below half of
/// its longest edge (keeps the face relation monotone under rounding).
///
/// Symmetric in its arguments: the vertices are put in canonical order first.
pub fn triangle_alpha(a: Point, b: Point, c: Point) -> f64 {
    let mut v = [a, b, c];
    v.sort_by(|p, q| p.lex_cmp(q));
    let r = circumradius(v[0], v[1], v[2]);
    let half = 0.5 * v[0].dist(v[1]).max(v[1].dist(v[2])).max(v[0].dist(v[2]));
    r.max(half)
}

/// Half the length of `ab`, symmetric in its arguments.
#[inline]
pub fn half_length(a: Point, b: Point) -> f64 {
    if a.lex_cmp(&b).is_le() {
        0.5 * a.dist(b)
    } else {
        0.5 * b.dist(a)
    }
}

/// Filtration value of the Delaunay edge `ab` with opposite vertices
/// `left`/`right` (absent on the hull). A Gabriel edge enters at half its
/// length; otherwise it enters with the smaller adjacent triangle whose
/// apex encroaches on its diametral disk.
pub fn edge_alpha(a: Point, b: Point, left: Option<Point>, right: Option<Point>) -> f64 {
    let mut alpha = f64::INFINITY;
    for o in [left, right].into_iter().flatten() {
        if encroaches(a, b, o) {
            alpha = alpha.min(triangle_alpha(a, b, o));
        }
    }
    if alpha.is_finite() {
        alpha
    } else {
        half_length(a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaEdge {
    pub v: [u32; 2],
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaTriangle {
    pub v: [u32; 3],
    pub alpha: f64,
}

/// The Delaunay triangulation of a point set with alpha values on every
/// simplex. Vertex indices refer to `points`, which is the input in
/// canonical (lexicographic) order with duplicates removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaComplex {
    pub points: Vec<Point>,
    pub edges: Vec<AlphaEdge>,
    pub triangles: Vec<AlphaTriangle>,
    /// Number of input points dropped as exact duplicates.
    pub duplicates: usize,
}

pub fn build_alpha_complex(points: &[Point]) -> Result<AlphaComplex> {
    if points.is_empty() {
        return Err(invalid("alpha complex needs at least one point"));
    }
    if let Some(p) = points.iter().find(|p| !p.is_finite()) {
        return Err(invalid(format!("non-finite point ({}, {})", p.x, p.y)));
    }
    let mut canon = points.to_vec();
    canon.sort_by(|p, q| p.lex_cmp(q));
    canon.dedup();
    let duplicates = points.len() - canon.len();
    let (tri, _) = Triangulation::from_points(&canon);
    Ok(from_triangulation(&tri, duplicates))
}

/// Reads off the alpha complex of a triangulation, with vertex ids as in
/// `tri`.
pub fn from_triangulation(tri: &Triangulation, duplicates: usize) -> AlphaComplex {
    let pt = |v: u32| (v != GHOST).then(|| tri.point(v));
    let mut edges: Vec<AlphaEdge> = tri
        .edges()
        .into_iter()
        .map(|[a, b, l, r]| {
            let alpha = edge_alpha(tri.point(a), tri.point(b), pt(l), pt(r));
            AlphaEdge { v: [a.min(b), a.max(b)], alpha }
        })
        .collect();
    edges.sort_by(|x, y| x.v.cmp(&y.v));
    let mut triangles: Vec<AlphaTriangle> = tri
        .finite_triangles()
        .map(|t| {
            let v = tri.tri(t).v;
            let alpha = triangle_alpha(tri.point(v[0]), tri.point(v[1]), tri.point(v[2]));
            let mut s = v;
            s.sort_unstable();
            AlphaTriangle { v: s, alpha }
        })
        .collect();
    triangles.sort_by(|x, y| x.v.cmp(&y.v));
    AlphaComplex { points: tri.points().to_vec(), edges, triangles, duplicates }
}

impl AlphaComplex {
    pub fn num_vertices(&self) -> usize {
        self.points.len()
    }

    /// Largest filtration value in the complex (0 for a single point).
    pub fn max_alpha(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.alpha)
            .chain(self.triangles.iter().map(|t| t.alpha))
            .fold(0.0, f64::max)
    }

    /// `(beta0, beta1)` of the subcomplex of simplices with alpha `<= r`,
    /// via union-find for `beta0` and the Euler characteristic for `beta1`
    /// (planar complexes have no 2-cycles).
    pub fn betti_at(&self, r: f64) -> (usize, usize) {
        let mut uf = UnionFind::new(self.points.len());
        let mut e = 0usize;
        for edge in self.edges.iter().filter(|x| x.alpha <= r) {
            uf.union(edge.v[0] as usize, edge.v[1] as usize);
            e += 1;
        }
        let f = self.triangles.iter().filter(|t| t.alpha <= r).count();
        let v = self.points.len();
        let b0 = uf.components();
        let chi = v as i64 - e as i64 + f as i64;
        let b1 = b0 as i64 - chi;
        debug_assert!(b1 >= 0);
        (b0, b1.max(0) as usize)
    }

    /// Radii at which `beta0` changes (merge radii of the minimum spanning
    /// forest), ascending.
    pub fn merge_radii(&self) -> Vec<f64> {
        let mut order: Vec<&AlphaEdge> = self.edges.iter().collect();
        order.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.v.cmp(&b.v)));
        let mut uf = UnionFind::new(self.points.len());
        order
            .into_iter()
            .filter(|e| uf.union(e.v[0] as usize, e.v[1] as usize))
            .map(|e| e.alpha)
            .collect()
    }
}

pub(crate) struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
    comps: usize,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), rank: vec![0; n], comps: n }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = p;
        }
        x
    }

    /// Returns `true` when two components were merged.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb as u32,
            std::cmp::Ordering::Greater => self.parent[rb] = ra as u32,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra as u32;
                self.rank[ra] += 1;
            }
        }
        self.comps -= 1;
        true
    }

    pub(crate) fn components(&self) -> usize {
        self.comps
    }
}
