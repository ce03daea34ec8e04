//! Inhomogeneous attractors of iterated function systems and Kleinian groups.
//!
//! An IFS `{S_i}` with condensation set `C` has the inhomogeneous attractor
//! `F_C`, the closure of `C ∪ ⋃_w S_w(C)`. The crate builds finite
//! approximations of these sets, counts δ-mesh covers, fits box dimensions,
//! and provides the worked examples together with their known dimensions.

pub mod boxdim;
pub mod constructions;
pub mod error;
pub mod hyperbolic;
pub mod ifs;
pub mod io;
pub mod orbital;

pub use boxdim::{fit_dimension, mesh_count, solve_moran, CoverCount, DimensionFit};
pub use constructions::Construction;
pub use error::{Error, Result};
pub use hyperbolic::{DiskPoint, GroupPresentation, MoebiusMap, OrbitPointSet};
pub use ifs::{CondensationSet, ContractionMap, Ifs, Primitive, Word};
pub use orbital::{orbital_to_depth, stopping_set, OrbitalApprox, StoppingSet};
