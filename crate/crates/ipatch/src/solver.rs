//! Weight selection for corner patches.
//!
//! The patch value is linear in the n side weights and the interior weight,
//! which gives two solvers:
//!
//! * closed-form interpolation of one point per boundary plus one interior
//!   point, each weight solved independently (a side weight only shapes its
//!   own boundary, so solve order does not matter);
//! * linear least squares over a sample cloud, minimizing the algebraic
//!   distance (the raw patch value) through an orthogonal factorization.
//!
//! Solvers never mutate the input patch; they return new weight sets.

use crate::field::Field;
use crate::geom::Point3;
use crate::patch::{CornerPatch, PatchError};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How far off its bounding surface a boundary target may start; closer
/// points are snapped onto the surface before solving.
const SNAP_TOL: f64 = 1e-6;
/// Residual required of a snapped target.
const ON_SURFACE_TOL: f64 = 1e-9;
/// Minimum distance of an interior target from every bounding surface.
const INTERIOR_CLEARANCE: f64 = 1e-6;
/// Smallest usable denominator in the side-weight formula.
const DENOM_FLOOR: f64 = 1e-18;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolveError {
    #[error("target for side {side} is {dist:.3e} off its bounding surface (limit 1e-6)")]
    TargetOffBoundary { side: usize, dist: f64 },
    #[error("degenerate target for side {side}: adjacent bound product {denom:.3e} below 1e-18")]
    DegenerateTarget { side: usize, denom: f64 },
    #[error("interior target lies on or within 1e-6 of bounding surface {0}")]
    TargetOnBound(usize),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error(transparent)]
    Patch(#[from] PatchError),
}

/// One boundary interpolation target: a point on bounding surface `side`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryTarget {
    pub side: usize,
    pub point: Point3,
}

/// Points a patch should interpolate: at most one per boundary plus an
/// optional interior point.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpolationSpec {
    #[serde(default)]
    pub boundary_targets: Vec<BoundaryTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_target: Option<Point3>,
}

/// Weights produced by [`solve_targets`], with per-target residuals of the
/// final patch for reporting.
#[derive(Debug, Clone)]
pub struct SolvedWeights {
    pub side_weights: Vec<f64>,
    pub interior_weight: f64,
    /// (label, residual) rows, one per target, in solve order.
    pub residuals: Vec<(String, f64)>,
}

/// Least-squares fit result.
#[derive(Debug, Clone)]
pub struct LsqFit {
    pub side_weights: Vec<f64>,
    pub interior_weight: f64,
    pub rms_residual: f64,
}

fn snap_to_bound(patch: &CornerPatch, i0: usize, p: Point3, side: usize) -> Result<Point3, SolveError> {
    let bound = &patch.bounds()[i0];
    let first = bound.value(p);
    if first.abs() > SNAP_TOL {
        return Err(SolveError::TargetOffBoundary {
            side,
            dist: first.abs(),
        });
    }
    let mut q = p;
    for _ in 0..4 {
        let v = bound.value(q);
        if v.abs() <= ON_SURFACE_TOL {
            return Ok(q);
        }
        let g = bound.gradient(q);
        let g2 = g.norm_sq();
        if g2 < 1e-18 {
            break;
        }
        q = q - g * (v / g2);
    }
    let v = bound.value(q);
    if v.abs() <= ON_SURFACE_TOL {
        Ok(q)
    } else {
        Err(SolveError::TargetOffBoundary { side, dist: v.abs() })
    }
}

/// Side weight that makes the boundary side surface of `side` pass through
/// `p`:
///
/// ```text
/// w(i) = -(S(i-1,i) B(i+1)^2 + S(i,i+1) B(i-1)^2) / (B(i-1)^2 B(i+1)^2)
/// ```
///
/// `p` must lie on bound `side` (within 1e-6, snapped to 1e-9) and clear of
/// the two adjacent bounds.
pub fn solve_side_weight(patch: &CornerPatch, side: usize, p: Point3) -> Result<f64, SolveError> {
    let n = patch.n();
    if side == 0 || side > n {
        return Err(PatchError::SideOutOfRange(side, n).into());
    }
    let i0 = side - 1;
    let p = snap_to_bound(patch, i0, p, side)?;
    let prev = (i0 + n - 1) % n;
    let next = (i0 + 1) % n;
    let s_prev = patch.corners()[prev].value(p);
    let s_this = patch.corners()[i0].value(p);
    let b_prev = patch.bounds()[prev].value(p);
    let b_next = patch.bounds()[next].value(p);
    let q_prev = b_prev * b_prev;
    let q_next = b_next * b_next;
    let denom = q_prev * q_next;
    if denom < DENOM_FLOOR {
        return Err(SolveError::DegenerateTarget { side, denom });
    }
    Ok(-(s_prev * q_next + s_this * q_prev) / denom)
}

/// Interior weight that makes the patch (with its current side weights)
/// vanish at `q`: `w = -f0(q) / prod_j B(j)^2` where f0 is the patch value
/// with zero interior weight.
pub fn solve_interior_weight(patch: &CornerPatch, q: Point3) -> Result<f64, SolveError> {
    solve_interior_with(patch, patch.side_weights(), q)
}

fn solve_interior_with(
    patch: &CornerPatch,
    side_weights: &[f64],
    q: Point3,
) -> Result<f64, SolveError> {
    let mut denom = 1.0;
    for (j, bound) in patch.bounds().iter().enumerate() {
        let b = bound.value(q);
        if b.abs() < INTERIOR_CLEARANCE {
            return Err(SolveError::TargetOnBound(j + 1));
        }
        denom *= b * b;
    }
    let base = patch.value_with(side_weights, 0.0, q);
    Ok(-base / denom)
}

/// Applies every boundary target, then the interior target, and reports the
/// residuals of the finished patch at each target point.
pub fn solve_targets(
    patch: &CornerPatch,
    spec: &InterpolationSpec,
) -> Result<SolvedWeights, SolveError> {
    let mut side_weights = patch.side_weights().to_vec();
    for t in &spec.boundary_targets {
        side_weights[checked_side(patch, t.side)?] = solve_side_weight(patch, t.side, t.point)?;
    }
    let interior_weight = match spec.interior_target {
        Some(q) => solve_interior_with(patch, &side_weights, q)?,
        None => patch.interior_weight(),
    };
    let solved = patch.with_weights(side_weights.clone(), interior_weight);
    let mut residuals = Vec::new();
    for t in &spec.boundary_targets {
        let p = snap_to_bound(&solved, t.side - 1, t.point, t.side)?;
        residuals.push((format!("side {}", t.side), solved.value(p)));
    }
    if let Some(q) = spec.interior_target {
        residuals.push(("interior".to_string(), solved.value(q)));
    }
    Ok(SolvedWeights {
        side_weights,
        interior_weight,
        residuals,
    })
}

fn checked_side(patch: &CornerPatch, side: usize) -> Result<usize, SolveError> {
    if side == 0 || side > patch.n() {
        Err(PatchError::SideOutOfRange(side, patch.n()).into())
    } else {
        Ok(side - 1)
    }
}

/// Least-squares fit of all n + 1 weights, minimizing the sum of squared
/// patch values over the samples. Solved by SVD, never through the normal
/// equations, and never worse than the all-zero weight vector.
pub fn fit_weights_lsq(patch: &CornerPatch, samples: &[Point3]) -> Result<LsqFit, SolveError> {
    let n = patch.n();
    let cols = n + 1;
    let m = samples.len();
    if m < cols {
        return Err(SolveError::TooFewSamples { need: cols, got: m });
    }

    let mut a = DMatrix::<f64>::zeros(m, cols);
    let mut rhs = DVector::<f64>::zeros(m);
    for (r, &p) in samples.iter().enumerate() {
        let b: Vec<f64> = patch.bounds().iter().map(|f| f.value(p)).collect();
        let q: Vec<f64> = b.iter().map(|v| v * v).collect();
        for c in 0..n {
            let mut prod = 1.0;
            for (t, &qt) in q.iter().enumerate() {
                if t != c {
                    prod *= qt;
                }
            }
            a[(r, c)] = prod;
        }
        a[(r, n)] = q.iter().product();
        // Weight-free part of the patch value.
        rhs[r] = -patch.value_with(&vec![0.0; n], 0.0, p);
    }

    for c in 0..cols {
        if a.column(c).norm() < 1e-12 {
            return Err(SolveError::RankDeficient);
        }
    }

    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let sigma_min = svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |m, &s| m.min(s));
    if !sigma_max.is_finite() || sigma_max <= 0.0 || sigma_min < 1e-10 * sigma_max {
        return Err(SolveError::RankDeficient);
    }
    let x = svd
        .solve(&rhs, 1e-14 * sigma_max)
        .map_err(|_| SolveError::RankDeficient)?;

    let rms = ((&a * &x) - &rhs).norm() / (m as f64).sqrt();
    let rms_zero = rhs.norm() / (m as f64).sqrt();
    if rms > rms_zero {
        // The minimizer can never beat this bound only through conditioning
        // trouble; fall back to the untouched weights.
        return Ok(LsqFit {
            side_weights: vec![0.0; n],
            interior_weight: 0.0,
            rms_residual: rms_zero,
        });
    }

    Ok(LsqFit {
        side_weights: x.as_slice()[..n].to_vec(),
        interior_weight: x[n],
        rms_residual: rms,
    })
}
