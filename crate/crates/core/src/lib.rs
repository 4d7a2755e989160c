//! Mortar staggered discontinuous Galerkin (SDG) solver for the second order
//! elliptic problem −∇·(ρ∇u) = f on a union of axis-aligned rectangular
//! subdomains with non-matching triangulations.
//!
//! Each subdomain carries its own triangulation; every triangle is split into
//! three staggered subtriangles through its centroid. Continuity of the scalar
//! field across initial edges, normal continuity of the flux across the
//! subdivision edges, and weak continuity across subdomain interfaces (via
//! Lagrange multipliers on the non-mortar trace mesh) are imposed as explicit
//! constraint rows of a saddle-point system.
//!
//! On top of the solver sit two residual a posteriori error estimators (one
//! targeting the potential L2 error, one the energy error), Dörfler bulk
//! marking, and red–green refinement of the per-subdomain meshes, plus a
//! problem library with three benchmark configurations.

pub mod adaptive;
pub mod assembly;
pub mod basis;
pub mod error;
pub mod estimator;
pub mod geo;
pub mod io;
pub mod mesh;
pub mod mortar;
pub mod partition;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod staggered;

pub use error::{Error, Result};
