//! Piecewise-polynomial test weights with exact integrals.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::topology::RadiusWindow;

/// One polynomial piece on `[lo, hi)`, in the local variable `x = r - lo`:
/// `c[0] + c[1] x + c[2] x² + c[3] x³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub c: [f64; 4],
}

impl Piece {
    #[inline]
    fn eval(&self, r: f64) -> f64 {
        let x = r - self.lo;
        ((self.c[3] * x + self.c[2]) * x + self.c[1]) * x + self.c[0]
    }

    /// `int_lo^r` of the piece.
    #[inline]
    fn integral_to(&self, r: f64) -> f64 {
        let x = r - self.lo;
        (((self.c[3] / 4.0 * x + self.c[2] / 3.0) * x + self.c[1] / 2.0) * x + self.c[0]) * x
    }

    /// Coefficients re-expanded around `lo + s`.
    fn shifted(&self, s: f64) -> [f64; 4] {
        let c = self.c;
        [
            c[0] + c[1] * s + c[2] * s * s + c[3] * s * s * s,
            c[1] + 2.0 * c[2] * s + 3.0 * c[3] * s * s,
            c[2] + 3.0 * c[3] * s,
            c[3],
        ]
    }

    fn sup_abs(&self) -> f64 {
        let mut best = self.eval(self.lo).abs().max(self.eval(self.hi).abs());
        // Critical points of the cubic: c1 + 2 c2 x + 3 c3 x² = 0.
        let (a, b, c) = (3.0 * self.c[3], 2.0 * self.c[2], self.c[1]);
        let mut roots = Vec::with_capacity(2);
        if a != 0.0 {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                roots.push((-b + disc.sqrt()) / (2.0 * a));
                roots.push((-b - disc.sqrt()) / (2.0 * a));
            }
        } else if b != 0.0 {
            roots.push(-c / b);
        }
        for x in roots {
            if x > 0.0 && x < self.hi - self.lo {
                best = best.max(self.eval(self.lo + x).abs());
            }
        }
        best
    }
}

/// A bounded weight `psi` on a radius window, piecewise polynomial of
/// degree at most three.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeight", into = "RawWeight")]
pub struct TestWeight {
    name: String,
    window: RadiusWindow,
    pieces: Vec<Piece>,
    sup_norm: f64,
    /// `int_{r0}^{pieces[k].lo} psi`.
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawWeight {
    name: String,
    window: RadiusWindow,
    pieces: Vec<Piece>,
}

impl TryFrom<RawWeight> for TestWeight {
    type Error = crate::Error;
    fn try_from(raw: RawWeight) -> Result<Self> {
        TestWeight::new(raw.name, raw.window, raw.pieces)
    }
}

impl From<TestWeight> for RawWeight {
    fn from(w: TestWeight) -> Self {
        RawWeight { name: w.name, window: w.window, pieces: w.pieces }
    }
}

impl TestWeight {
    /// Pieces must be contiguous, cover the window exactly and have finite
    /// coefficients.
    pub fn new(name: impl Into<String>, window: RadiusWindow, pieces: Vec<Piece>) -> Result<Self> {
        let name = name.into();
        if pieces.is_empty() {
            return Err(invalid(format!("weight `{name}` has no pieces")));
        }
        if pieces[0].lo != window.r0 || pieces.last().unwrap().hi != window.r1 {
            return Err(invalid(format!("weight `{name}` pieces do not span [{}, {}]", window.r0, window.r1)));
        }
        for (k, p) in pieces.iter().enumerate() {
            if !(p.lo < p.hi) || p.c.iter().any(|c| !c.is_finite()) {
                return Err(invalid(format!("weight `{name}` piece {k} is empty or non-finite")));
            }
            if k > 0 && pieces[k - 1].hi != p.lo {
                return Err(invalid(format!("weight `{name}` pieces {} and {k} are not contiguous", k - 1)));
            }
        }
        let mut cumulative = Vec::with_capacity(pieces.len());
        let mut acc = 0.0;
        for p in &pieces {
            cumulative.push(acc);
            acc += p.integral_to(p.hi);
        }
        let sup_norm = pieces.iter().map(Piece::sup_abs).fold(0.0, f64::max);
        Ok(Self { name, window, pieces, sup_norm, cumulative })
    }

    /// Piecewise constant with `values[k]` on `[breaks[k], breaks[k+1])`;
    /// `breaks` runs from `r0` to `r1`.
    pub fn piecewise_constant(name: impl Into<String>, window: RadiusWindow, breaks: &[f64], values: &[f64]) -> Result<Self> {
        if breaks.len() != values.len() + 1 {
            return Err(invalid("piecewise constant weight needs one more break than values"));
        }
        let pieces = breaks
            .windows(2)
            .zip(values)
            .map(|(b, &v)| Piece { lo: b[0], hi: b[1], c: [v, 0.0, 0.0, 0.0] })
            .collect();
        Self::new(name, window, pieces)
    }

    pub fn constant(name: impl Into<String>, window: RadiusWindow, value: f64) -> Self {
        Self::piecewise_constant(name, window, &[window.r0, window.r1], &[value]).expect("valid window")
    }

    /// `psi = 1` on the window.
    pub fn indicator(window: RadiusWindow) -> Self {
        Self::constant("indicator", window, 1.0)
    }

    pub fn zero(window: RadiusWindow) -> Self {
        Self::constant("zero", window, 0.0)
    }

    /// Tent with peak 1 at the window midpoint, 0 at both ends.
    pub fn hat(window: RadiusWindow) -> Self {
        let m = 0.5 * (window.r0 + window.r1);
        let s = 1.0 / (m - window.r0);
        let pieces = vec![
            Piece { lo: window.r0, hi: m, c: [0.0, s, 0.0, 0.0] },
            Piece { lo: m, hi: window.r1, c: [1.0, -s, 0.0, 0.0] },
        ];
        Self::new("hat", window, pieces).expect("valid window")
    }

    /// Linear from 0 at `r0` to 1 at `r1`.
    pub fn ramp(window: RadiusWindow) -> Self {
        let pieces = vec![Piece { lo: window.r0, hi: window.r1, c: [0.0, 1.0 / window.width(), 0.0, 0.0] }];
        Self::new("ramp", window, pieces).expect("valid window")
    }

    pub fn lower_half(window: RadiusWindow) -> Self {
        let m = 0.5 * (window.r0 + window.r1);
        Self::piecewise_constant("lower_half", window, &[window.r0, m, window.r1], &[1.0, 0.0]).expect("valid window")
    }

    pub fn upper_half(window: RadiusWindow) -> Self {
        let m = 0.5 * (window.r0 + window.r1);
        Self::piecewise_constant("upper_half", window, &[window.r0, m, window.r1], &[0.0, 1.0]).expect("valid window")
    }

    /// Built-in weight by name.
    pub fn builtin(name: &str, window: RadiusWindow) -> Result<Self> {
        Ok(match name {
            "indicator" => Self::indicator(window),
            "hat" => Self::hat(window),
            "ramp" => Self::ramp(window),
            "lower_half" => Self::lower_half(window),
            "upper_half" => Self::upper_half(window),
            "zero" => Self::zero(window),
            other => return Err(invalid(format!("unknown built-in weight `{other}`"))),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn window(&self) -> RadiusWindow {
        self.window
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.c == [0.0; 4])
    }

    fn piece_index(&self, r: f64) -> usize {
        self.pieces.partition_point(|p| p.hi <= r).min(self.pieces.len() - 1)
    }

    /// `psi(r)`, zero outside the window.
    pub fn eval(&self, r: f64) -> f64 {
        if !self.window.contains(r) {
            return 0.0;
        }
        self.pieces[self.piece_index(r)].eval(r)
    }

    /// `int_{r0}^{x} psi` with `x` clamped to the window.
    pub fn integral_from_r0(&self, x: f64) -> f64 {
        if x <= self.window.r0 {
            return 0.0;
        }
        let x = x.min(self.window.r1);
        let k = self.piece_index(x);
        self.cumulative[k] + self.pieces[k].integral_to(x)
    }

    pub fn total(&self) -> f64 {
        self.integral_from_r0(self.window.r1)
    }

    /// `int_a^b psi` over `[a, b] ∩ window`, zero if empty.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let lo = a.max(self.window.r0);
        let hi = b.min(self.window.r1);
        if hi <= lo {
            return 0.0;
        }
        self.integral_from_r0(hi) - self.integral_from_r0(lo)
    }

    /// `int_{max(a, r0)}^{r1} psi`: the weight a simplex entering at `a`
    /// carries through the rest of the window.
    #[inline]
    pub fn tail(&self, a: f64) -> f64 {
        if a >= self.window.r1 {
            0.0
        } else if a <= self.window.r0 {
            self.total()
        } else {
            self.total() - self.integral_from_r0(a)
        }
    }

    /// Pointwise sum of two weights on the same window.
    pub fn sum(&self, other: &TestWeight) -> Result<Self> {
        if self.window != other.window {
            return Err(invalid("weights on different windows cannot be added"));
        }
        let mut breaks: Vec<f64> = self.pieces.iter().chain(&other.pieces).flat_map(|p| [p.lo, p.hi]).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let pieces = breaks
            .windows(2)
            .map(|b| {
                let (lo, hi) = (b[0], b[1]);
                let pa = &self.pieces[self.piece_index(lo)];
                let pb = &other.pieces[other.piece_index(lo)];
                let (ca, cb) = (pa.shifted(lo - pa.lo), pb.shifted(lo - pb.lo));
                Piece { lo, hi, c: std::array::from_fn(|i| ca[i] + cb[i]) }
            })
            .collect();
        Self::new(format!("{}+{}", self.name, other.name), self.window, pieces)
    }
}
