//! Exact enumeration and simulation engines for the uniform infinite planar
//! triangulation, built around its layer decomposition and the time-reversed
//! critical branching process that describes hull boundaries.

pub mod branching;
pub mod contour;
pub mod gf;
pub mod layer;
pub mod limits;
pub mod numeric;
pub mod series;
pub mod stats;
