//! Implicit multi-sided surface patches blended from corner interpolants.
//!
//! The library covers the full pipeline: scalar fields ([`field`]), corner
//! and side-based patches with their differential properties ([`patch`]),
//! closed-form and least-squares weight selection ([`solver`]), cube-grid
//! patchworks with cross-cell continuity checks ([`cell`]), isosurface
//! meshing and OBJ export ([`mesh`]), JSON scenes ([`scene`]) and the
//! `ipatch` command line ([`cli`]).

pub mod cell;
pub mod cli;
pub mod field;
pub mod geom;
pub mod mesh;
pub mod patch;
pub mod scene;
pub mod solver;

pub use field::{fd_gradient, Field, FieldRef, Monomial, Plane, PolyField};
pub use geom::{Aabb, Axis, Point3, Vec3};
pub use patch::{CornerPatch, SideIPatch};
