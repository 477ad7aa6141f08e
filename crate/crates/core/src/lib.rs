pub mod clt;
pub mod error;
pub mod geom;
pub mod io;
pub mod limit;
pub mod observables;
pub mod pathgen;
pub mod regeneration;
pub mod replica;
pub mod rng;
pub mod stats;
pub mod surrogate;
pub mod topology;
pub mod weight;

pub use error::{Error, Result};
pub use geom::Point;
