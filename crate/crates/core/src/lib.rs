//! Exact combinatorics of the hypercube {0,1}^n: neighbourhoods and
//! isoperimetry, the four classical orders on fixed-weight layers with exact
//! rank/unrank, shadows with certified lower bounds, and the constructive
//! stability pipeline with its deletion algorithm and center recovery.
//!
//! Everything the library certifies is computed in exact integer or rational
//! arithmetic; floating point appears only in one advisory flag. The heavy
//! scans go data-parallel when the `parallel` feature (default on) is
//! enabled, and every parallel reduction is canonical, so results are
//! byte-identical across thread counts and modes.

pub mod counting;
pub mod cube;
pub mod error;
pub mod exec;
pub mod io;
pub mod order;
pub mod shadow;
pub mod stability;
pub mod sweeps;

pub use cube::{layer, Vertex, VertexSet, SetFamily, MAX_DIMENSION};
pub use error::{Error, Result};
pub use exec::ExecMode;
