//! Incremental planar Delaunay triangulation.
//!
//! Bowyer–Watson insertion over a triangle/neighbor structure closed by
//! "ghost" triangles that share a single vertex at infinity ([`GHOST`]).
//! Orientation and in-circle signs are exact (adaptive arithmetic). Points
//! on a common circle are never treated as in conflict, so the result for
//! degenerate input is a valid Delaunay triangulation that depends only on
//! the insertion order.
//!
//! Until the first non-collinear point arrives the triangulation keeps a
//! sorted list of collinear vertices and no triangles.
//!
//! Every insertion reports the destroyed and created triangles through an
//! [`InsertHook`], which is what lets callers maintain sums over the
//! complex without rescanning it.

use crate::geom::{incircle, orient, Point};

/// Index of the vertex at infinity.
pub const GHOST: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tri {
    /// Vertices in counterclockwise order; ghosts keep [`GHOST`] at index 2.
    pub v: [u32; 3],
    /// `n[i]` is the neighbor across the edge opposite `v[i]`.
    pub n: [u32; 3],
}

impl Tri {
    #[inline]
    pub fn is_ghost(&self) -> bool {
        self.v[2] == GHOST
    }

    #[inline]
    fn side_of(&self, nb: u32) -> usize {
        self.n.iter().position(|&x| x == nb).expect("neighbor link is symmetric")
    }

    fn rotate_left(&mut self, k: usize) {
        self.v.rotate_left(k);
        self.n.rotate_left(k);
    }
}

/// Observer of the triangle sets touched by an insertion.
///
/// `removing` is called while the cavity is still linked into the
/// triangulation; `created` once the new triangles are linked. In both
/// calls [`Triangulation::in_marked_set`] answers membership for the slice.
pub trait InsertHook {
    fn removing(&mut self, _tri: &Triangulation, _cavity: &[u32]) {}
    fn created(&mut self, _tri: &Triangulation, _new: &[u32]) {}
}

/// Hook that ignores every event.
pub struct NoHook;
impl InsertHook for NoHook {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inserted {
    New(u32),
    Duplicate(u32),
}

enum Located {
    Tri(u32),
    Duplicate(u32),
}

#[derive(Debug, Clone, Default)]
pub struct Triangulation {
    pts: Vec<Point>,
    tris: Vec<Tri>,
    alive: Vec<bool>,
    free: Vec<u32>,
    mark: Vec<u32>,
    epoch: u32,
    /// Collinear vertices in lexicographic order; only used while no
    /// triangle exists.
    collinear: Vec<u32>,
    last: u32,
    duplicates: usize,
    scratch_cavity: Vec<u32>,
    scratch_new: Vec<u32>,
    scratch_boundary: Vec<(u32, u32, u32, usize)>,
}

/// `m` lies strictly between `a` and `b` (all three assumed collinear).
#[inline]
fn strictly_between(a: Point, m: Point, b: Point) -> bool {
    use std::cmp::Ordering::*;
    matches!((a.lex_cmp(&m), m.lex_cmp(&b)), (Less, Less) | (Greater, Greater))
}

impl Triangulation {
    pub fn new() -> Self {
        Self { last: GHOST, ..Default::default() }
    }

    /// Triangulates `points` in the given order. Returns the triangulation
    /// and, for each input point, its vertex id (duplicates map to the
    /// earlier copy).
    pub fn from_points(points: &[Point]) -> (Self, Vec<u32>) {
        let mut t = Self::new();
        let ids = points
            .iter()
            .map(|&p| match t.insert(p, &mut NoHook) {
                Inserted::New(v) | Inserted::Duplicate(v) => v,
            })
            .collect();
        (t, ids)
    }

    #[inline]
    pub fn point(&self, v: u32) -> Point {
        self.pts[v as usize]
    }

    pub fn points(&self) -> &[Point] {
        &self.pts
    }

    pub fn num_vertices(&self) -> usize {
        self.pts.len()
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    #[inline]
    pub fn tri(&self, t: u32) -> &Tri {
        &self.tris[t as usize]
    }

    pub fn has_triangles(&self) -> bool {
        !self.tris.is_empty()
    }

    /// Sorted collinear vertices (empty once a triangle exists).
    pub fn collinear_chain(&self) -> &[u32] {
        &self.collinear
    }

    #[inline]
    pub fn in_marked_set(&self, t: u32) -> bool {
        t != GHOST && self.mark[t as usize] == self.epoch
    }

    /// Vertex of the neighbor across side `i` of `t` that is not on the
    /// shared edge.
    #[inline]
    pub fn opposite_across(&self, t: u32, i: usize) -> u32 {
        let nb = self.tris[t as usize].n[i];
        let other = &self.tris[nb as usize];
        other.v[other.side_of(t)]
    }

    /// Ids of live finite triangles.
    pub fn finite_triangles(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.tris.len() as u32).filter(move |&t| self.alive[t as usize] && !self.tris[t as usize].is_ghost())
    }

    /// Every finite edge once, as `(a, b, opposite_left, opposite_right)`
    /// where absent sides use [`GHOST`].
    pub fn edges(&self) -> Vec<[u32; 4]> {
        let mut out = Vec::new();
        if self.tris.is_empty() {
            for w in self.collinear.windows(2) {
                out.push([w[0], w[1], GHOST, GHOST]);
            }
            return out;
        }
        for t in self.finite_triangles() {
            let tri = self.tris[t as usize];
            for i in 0..3 {
                let nb = tri.n[i];
                if self.tris[nb as usize].is_ghost() || t < nb {
                    let (a, b) = (tri.v[(i + 1) % 3], tri.v[(i + 2) % 3]);
                    out.push([a, b, tri.v[i], self.opposite_across(t, i)]);
                }
            }
        }
        out
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.mark.iter_mut().for_each(|m| *m = u32::MAX);
            self.epoch = 1;
        }
    }

    fn alloc(&mut self, tri: Tri) -> u32 {
        if let Some(t) = self.free.pop() {
            self.tris[t as usize] = tri;
            self.alive[t as usize] = true;
            t
        } else {
            self.tris.push(tri);
            self.alive.push(true);
            self.mark.push(0);
            (self.tris.len() - 1) as u32
        }
    }

    pub fn insert<H: InsertHook>(&mut self, p: Point, hook: &mut H) -> Inserted {
        assert!(p.is_finite(), "non-finite coordinates");
        if self.tris.is_empty() {
            return self.insert_collinear_phase(p, hook);
        }
        let start = match self.locate(p) {
            Located::Duplicate(v) => {
                self.duplicates += 1;
                return Inserted::Duplicate(v);
            }
            Located::Tri(t) => t,
        };
        let v = self.pts.len() as u32;
        self.pts.push(p);
        self.carve(v, start, hook);
        Inserted::New(v)
    }

    fn insert_collinear_phase<H: InsertHook>(&mut self, p: Point, hook: &mut H) -> Inserted {
        let pos = self.collinear.binary_search_by(|&c| self.pts[c as usize].lex_cmp(&p));
        if let Ok(i) = pos {
            self.duplicates += 1;
            return Inserted::Duplicate(self.collinear[i]);
        }
        let v = self.pts.len() as u32;
        self.pts.push(p);
        let still_collinear = self.collinear.len() < 2 || {
            let a = self.pts[self.collinear[0] as usize];
            let b = self.pts[*self.collinear.last().unwrap() as usize];
            orient(a, b, p) == 0.0
        };
        if still_collinear {
            let i = pos.unwrap_err();
            self.collinear.insert(i, v);
            return Inserted::New(v);
        }
        let chain = std::mem::take(&mut self.collinear);
        self.seed_triangle(chain[0], chain[1], v, hook);
        for &c in &chain[2..] {
            let start = match self.locate(self.pts[c as usize]) {
                Located::Tri(t) => t,
                Located::Duplicate(_) => unreachable!("collinear chain has no duplicates"),
            };
            self.carve(c, start, hook);
        }
        Inserted::New(v)
    }

    fn seed_triangle<H: InsertHook>(&mut self, a: u32, b: u32, c: u32, hook: &mut H) {
        let (a, b) = if orient(self.pts[a as usize], self.pts[b as usize], self.pts[c as usize]) > 0.0 {
            (a, b)
        } else {
            (b, a)
        };
        // Finite triangle 0, ghosts across (b,c), (c,a), (a,b).
        let t0 = self.alloc(Tri { v: [a, b, c], n: [1, 2, 3] });
        let g_bc = self.alloc(Tri { v: [c, b, GHOST], n: [GHOST; 3] });
        let g_ca = self.alloc(Tri { v: [a, c, GHOST], n: [GHOST; 3] });
        let g_ab = self.alloc(Tri { v: [b, a, GHOST], n: [GHOST; 3] });
        // Ghost (p,q,G): n[0] is the ghost starting at q, n[1] the ghost ending at p.
        self.tris[g_bc as usize].n = [g_ab, g_ca, t0];
        self.tris[g_ca as usize].n = [g_bc, g_ab, t0];
        self.tris[g_ab as usize].n = [g_ca, g_bc, t0];
        self.last = t0;
        self.next_epoch();
        let all = [t0, g_bc, g_ca, g_ab];
        for &t in &all {
            self.mark[t as usize] = self.epoch;
        }
        hook.created(self, &all);
    }

    fn conflicts(&self, t: u32, p: Point) -> bool {
        let tri = &self.tris[t as usize];
        if tri.is_ghost() {
            let (a, b) = (self.pts[tri.v[0] as usize], self.pts[tri.v[1] as usize]);
            let o = orient(a, b, p);
            o > 0.0 || (o == 0.0 && strictly_between(a, p, b))
        } else {
            let [a, b, c] = tri.v.map(|v| self.pts[v as usize]);
            incircle(a, b, c, p) > 0.0
        }
    }

    fn locate(&self, p: Point) -> Located {
        let mut t = if self.last != GHOST && self.alive[self.last as usize] {
            self.last
        } else {
            (0..self.tris.len() as u32).find(|&t| self.alive[t as usize]).expect("live triangle")
        };
        loop {
            let tri = &self.tris[t as usize];
            if tri.is_ghost() {
                let (a, b) = (self.pts[tri.v[0] as usize], self.pts[tri.v[1] as usize]);
                let o = orient(a, b, p);
                if o > 0.0 {
                    return Located::Tri(t);
                }
                if o < 0.0 {
                    t = tri.n[2];
                    continue;
                }
                if p == a {
                    return Located::Duplicate(tri.v[0]);
                }
                if p == b {
                    return Located::Duplicate(tri.v[1]);
                }
                if strictly_between(a, p, b) {
                    return Located::Tri(t);
                }
                // On the hull line but outside this edge: slide along the hull.
                t = if strictly_between(a, b, p) { tri.n[0] } else { tri.n[1] };
                continue;
            }
            let mut next = None;
            for i in 0..3 {
                let a = self.pts[tri.v[(i + 1) % 3] as usize];
                let b = self.pts[tri.v[(i + 2) % 3] as usize];
                if orient(a, b, p) < 0.0 {
                    next = Some(tri.n[i]);
                    break;
                }
            }
            match next {
                Some(n) => t = n,
                None => {
                    for &v in &tri.v {
                        if self.pts[v as usize] == p {
                            return Located::Duplicate(v);
                        }
                    }
                    return Located::Tri(t);
                }
            }
        }
    }

    fn carve<H: InsertHook>(&mut self, v: u32, start: u32, hook: &mut H) {
        let p = self.pts[v as usize];
        let mut cavity = std::mem::take(&mut self.scratch_cavity);
        let mut boundary = std::mem::take(&mut self.scratch_boundary);
        let mut created = std::mem::take(&mut self.scratch_new);
        cavity.clear();
        boundary.clear();
        created.clear();

        self.next_epoch();
        self.mark[start as usize] = self.epoch;
        cavity.push(start);
        let mut k = 0;
        while k < cavity.len() {
            let t = cavity[k];
            k += 1;
            for i in 0..3 {
                let nb = self.tris[t as usize].n[i];
                if self.mark[nb as usize] != self.epoch && self.conflicts(nb, p) {
                    self.mark[nb as usize] = self.epoch;
                    cavity.push(nb);
                }
            }
        }
        for &t in &cavity {
            let tri = self.tris[t as usize];
            for i in 0..3 {
                let nb = tri.n[i];
                if self.mark[nb as usize] != self.epoch {
                    let side = self.tris[nb as usize].side_of(t);
                    boundary.push((tri.v[(i + 1) % 3], tri.v[(i + 2) % 3], nb, side));
                }
            }
        }

        hook.removing(self, &cavity);

        for &t in &cavity {
            self.alive[t as usize] = false;
            self.free.push(t);
        }
        for &(a, b, nb, side) in &boundary {
            let t = self.alloc(Tri { v: [a, b, v], n: [GHOST, GHOST, nb] });
            self.tris[nb as usize].n[side] = t;
            created.push(t);
        }
        // Link the fan around `v`: the edge (b, v) of (a, b, v) is shared
        // with the new triangle whose boundary edge starts at b.
        let starts: Vec<(u32, u32)> = created.iter().map(|&t| (self.tris[t as usize].v[0], t)).collect();
        let find = |s: u32| starts.iter().find(|&&(a, _)| a == s).map(|&(_, t)| t).expect("closed cavity");
        for &t in &created {
            let b = self.tris[t as usize].v[1];
            let next = find(b);
            self.tris[t as usize].n[0] = next;
            self.tris[next as usize].n[1] = t;
        }
        self.next_epoch();
        let mut last = GHOST;
        for &t in &created {
            let tri = &mut self.tris[t as usize];
            if tri.v[0] == GHOST {
                tri.rotate_left(1);
            } else if tri.v[1] == GHOST {
                tri.rotate_left(2);
            } else {
                last = t;
            }
            self.mark[t as usize] = self.epoch;
        }
        if last != GHOST {
            self.last = last;
        }
        hook.created(self, &created);

        self.scratch_cavity = cavity;
        self.scratch_boundary = boundary;
        self.scratch_new = created;
    }

    /// Checks structural consistency and the empty-circumcircle property
    /// (brute force, for tests).
    #[doc(hidden)]
    pub fn validate(&self) -> Result<(), String> {
        for t in 0..self.tris.len() as u32 {
            if !self.alive[t as usize] {
                continue;
            }
            let tri = self.tris[t as usize];
            for i in 0..3 {
                let nb = tri.n[i];
                if !self.alive[nb as usize] {
                    return Err(format!("triangle {t} links to dead {nb}"));
                }
                let other = self.tris[nb as usize];
                let j = other.n.iter().position(|&x| x == t).ok_or(format!("asymmetric link {t}-{nb}"))?;
                let e1 = [tri.v[(i + 1) % 3], tri.v[(i + 2) % 3]];
                let e2 = [other.v[(j + 2) % 3], other.v[(j + 1) % 3]];
                if e1 != e2 {
                    return Err(format!("edge mismatch {t}-{nb}: {e1:?} vs {e2:?}"));
                }
            }
            if !tri.is_ghost() {
                let [a, b, c] = tri.v.map(|v| self.pts[v as usize]);
                if orient(a, b, c) <= 0.0 {
                    return Err(format!("triangle {t} not counterclockwise"));
                }
                for (k, &q) in self.pts.iter().enumerate() {
                    if incircle(a, b, c, q) > 0.0 {
                        return Err(format!("point {k} inside circumcircle of {t}"));
                    }
                }
            } else if tri.v[0] == GHOST || tri.v[1] == GHOST {
                return Err(format!("ghost {t} not normalized"));
            }
        }
        Ok(())
    }
}
