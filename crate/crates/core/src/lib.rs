//! Computational toolkit for global hyperbolicity in flat space of signature `(p, q)`.
//!
//! Points of `R^{p,q}` are stored as flat `[f64]` slices of length `p + q`: the first
//! `p` entries are the spatial block (positive directions), the last `q` the temporal
//! block (negative directions).
//!
//! * [`pqform`] classifies vectors, segments and subspaces and compares metric cones.
//! * [`lipgraph`] represents inextendible causal maps as graphs of Lipschitz maps and
//!   evaluates them through Kirszbraun extension.
//! * [`cauchy`] intersects causal graphs with spacelike Cauchy surfaces.
//! * [`diamond`] implements flat causal diamonds and their conformal models.
//! * [`plateau`] maximizes the area functional over discretized causal sections.
//! * [`split`] builds the splitting map of synthetic product foliations.

pub mod cauchy;
pub mod diamond;
mod error;
pub mod lipgraph;
pub mod linalg;
pub mod plateau;
pub mod pqform;
pub mod split;

pub use error::{Error, Result};
