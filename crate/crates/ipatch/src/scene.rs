//! JSON scene descriptors.
//!
//! Two scene shapes exist: a patch list and a grid scene. Grid scenes name
//! a source field and a cube grid; running the grid pipeline turns them
//! into a patch list whose entries carry their cell box and cell index, so
//! the result is self-describing and re-loadable without the source.
//!
//! Emission is deterministic: keys are sorted and floats use the shortest
//! round-trip decimal form.

use crate::cell::{CellPatch, GridSpec};
use crate::field::{FieldRef, Monomial, Plane, PolyField};
use crate::geom::{Aabb, Point3, Vec3};
use crate::patch::CornerPatch;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("scene must be a JSON object with a \"patches\" or \"grid\" key")]
    UnrecognizedShape,
    #[error("patch {index}: {reason}")]
    BadPatch { index: usize, reason: String },
    #[error("field descriptor: {0}")]
    BadField(String),
    #[error("patch index {0} out of range ({1} patches)")]
    PatchOutOfRange(usize, usize),
}

/// One field: a plane (unit normal) or a trivariate polynomial.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum FieldDesc {
    #[serde(rename = "plane")]
    Plane(PlaneDesc),
    #[serde(rename = "poly")]
    Poly(Vec<MonomialDesc>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PlaneDesc {
    pub normal: [f64; 3],
    pub offset: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MonomialDesc {
    pub coef: f64,
    pub powers: [u32; 3],
}

impl FieldDesc {
    pub fn build(&self) -> Result<FieldRef, SceneError> {
        match self {
            FieldDesc::Plane(p) => {
                let plane = Plane::new(Vec3::from(p.normal), p.offset)
                    .map_err(|e| SceneError::BadField(e.to_string()))?;
                Ok(Arc::new(plane))
            }
            FieldDesc::Poly(terms) => {
                let poly = PolyField::new(
                    terms
                        .iter()
                        .map(|t| Monomial::new(t.coef, t.powers))
                        .collect(),
                )
                .map_err(|e| SceneError::BadField(e.to_string()))?;
                Ok(Arc::new(poly))
            }
        }
    }

    pub fn from_plane(plane: &Plane) -> Self {
        FieldDesc::Plane(PlaneDesc {
            normal: plane.normal().into(),
            offset: plane.offset(),
        })
    }

    /// Total polynomial degree of the described field.
    pub fn degree(&self) -> u32 {
        match self {
            FieldDesc::Plane(_) => 1,
            FieldDesc::Poly(terms) => terms
                .iter()
                .map(|t| t.powers.iter().sum::<u32>())
                .max()
                .unwrap_or(0),
        }
    }

    /// Coefficients (a, b) with field = a . p + b, when the field is affine.
    pub fn affine(&self) -> Option<(Vec3, f64)> {
        match self {
            FieldDesc::Plane(p) => Some((Vec3::from(p.normal), p.offset)),
            FieldDesc::Poly(terms) => {
                let mut a = Vec3::ZERO;
                let mut b = 0.0;
                for t in terms {
                    match t.powers {
                        [0, 0, 0] => b += t.coef,
                        [1, 0, 0] => a.x += t.coef,
                        [0, 1, 0] => a.y += t.coef,
                        [0, 0, 1] => a.z += t.coef,
                        _ => return None,
                    }
                }
                Some((a, b))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoxDesc {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoxDesc {
    pub fn to_aabb(&self) -> Aabb {
        Aabb::new(Point3::from(self.min), Point3::from(self.max))
    }

    pub fn from_aabb(b: &Aabb) -> Self {
        Self {
            min: b.min.into(),
            max: b.max.into(),
        }
    }
}

/// One corner patch: n bounding fields, n corner interpolants, n side
/// weights and an interior weight, plus an optional cell box and grid
/// index for grid-built patches.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PatchDesc {
    pub n: usize,
    pub bounds: Vec<FieldDesc>,
    pub corners: Vec<FieldDesc>,
    pub side_weights: Vec<f64>,
    pub interior_weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<BoxDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_index: Option<[usize; 3]>,
}

impl PatchDesc {
    /// Builds the patch; validation samples inside the cell box when one is
    /// present, the unit cube otherwise.
    pub fn build(&self, index: usize) -> Result<(CornerPatch, Aabb), SceneError> {
        let bad = |reason: String| SceneError::BadPatch { index, reason };
        if self.bounds.len() != self.n
            || self.corners.len() != self.n
            || self.side_weights.len() != self.n
        {
            return Err(bad(format!(
                "n = {} but {} bounds, {} corners, {} side weights",
                self.n,
                self.bounds.len(),
                self.corners.len(),
                self.side_weights.len()
            )));
        }
        let cell = self.cell.map(|b| b.to_aabb()).unwrap_or(Aabb::UNIT);
        let bounds = self
            .bounds
            .iter()
            .map(FieldDesc::build)
            .collect::<Result<Vec<_>, _>>()?;
        let corners = self
            .corners
            .iter()
            .map(FieldDesc::build)
            .collect::<Result<Vec<_>, _>>()?;
        let patch = CornerPatch::new_in(
            bounds,
            corners,
            self.side_weights.clone(),
            self.interior_weight,
            &cell,
        )
        .map_err(|e| bad(e.to_string()))?;
        Ok((patch, cell))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct PatchScene {
    pub patches: Vec<PatchDesc>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridScene {
    pub grid: GridSpec,
    pub source: FieldDesc,
}

/// Either scene shape.
#[derive(Debug, Clone, PartialEq)]
pub enum Scene {
    Patches(PatchScene),
    Grid(GridScene),
}

/// Parses a scene, deciding the shape by its top-level key. Unknown keys
/// anywhere are rejected.
pub fn parse_scene(text: &str) -> Result<Scene, SceneError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let obj = value.as_object().ok_or(SceneError::UnrecognizedShape)?;
    if obj.contains_key("patches") {
        Ok(Scene::Patches(serde_json::from_value(value)?))
    } else if obj.contains_key("grid") {
        Ok(Scene::Grid(serde_json::from_value(value)?))
    } else {
        Err(SceneError::UnrecognizedShape)
    }
}

/// Deterministic emission: sorted keys, shortest round-trip floats, two
/// space indent, trailing newline.
pub fn to_json_string(scene: &impl Serialize) -> String {
    let value = serde_json::to_value(scene).expect("scene types serialize");
    let mut s = serde_json::to_string_pretty(&value).expect("value prints");
    s.push('\n');
    s
}

/// Patch descriptors of a grid-built cell, one per boundary loop.
pub fn cell_patch_descs(cell: &CellPatch) -> Vec<PatchDesc> {
    cell.loops
        .iter()
        .map(|lp| PatchDesc {
            n: lp.patch.n(),
            bounds: lp.bound_planes.iter().map(FieldDesc::from_plane).collect(),
            corners: lp.corner_planes.iter().map(FieldDesc::from_plane).collect(),
            side_weights: lp.patch.side_weights().to_vec(),
            interior_weight: lp.patch.interior_weight(),
            cell: Some(BoxDesc::from_aabb(&cell.bbox)),
            cell_index: Some(cell.index),
        })
        .collect()
}
