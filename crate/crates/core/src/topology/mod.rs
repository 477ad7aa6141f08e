//! Offset filtrations of planar point clouds.

pub mod alpha;
pub mod delaunay;
pub mod persistence;
pub mod raster;

pub use alpha::{build_alpha_complex, AlphaComplex, AlphaEdge, AlphaTriangle};
pub use persistence::{betti1_at_radius, betti_curve, persistence_deg1, BettiCurve, PersistencePairs, RadiusWindow};
pub use raster::{rasterization_betti_oracle, sausage_area, AreaEstimate};
