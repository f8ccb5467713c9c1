//! Multi-sided implicit patches.
//!
//! Two families live here:
//!
//! * [`CornerPatch`] blends n corner interpolants S(i,i+1) over n bounding
//!   surfaces B(1)..B(n):
//!
//!   ```text
//!   sum_i S(i,i+1) prod_{j != i, i+1} B(j)^2
//!     + sum_i w(i) prod_{j != i} B(j)^2
//!     + w prod_j B(j)^2
//!   ```
//!
//!   The patch meets each corner interpolant with matching gradient
//!   direction at the corner (where B(i), B(i+1) and S(i,i+1) vanish), and
//!   along the i-th boundary its shape depends only on w(i), not on w or
//!   the other side weights. Any scale factor on a corner interpolant is
//!   considered pre-merged into the interpolant field itself.
//!
//! * [`SideIPatch`] blends n ribbons R(i) over n bounding surfaces with an
//!   integer exponent k >= 2:
//!
//!   ```text
//!   sum_i w(i) R(i) prod_{j != i} B(j)^k + w0 prod_j B(j)^k
//!   ```
//!
//! Indexing is cyclic and 1-based in all public APIs (side n + 1 wraps to
//! side 1, side 0 wraps to side n); storage is 0-based internally.
//!
//! Products of squared bounds are accumulated factor by factor and their
//! gradients use prefix/suffix leave-one-out products, so values and
//! gradients stay exact where bounding fields vanish. This matters: the
//! corner interpolation property is checked at points where two bounds are
//! exactly zero, and any division-based product rule would produce NaN
//! there.

use crate::field::{Field, FieldRef};
use crate::geom::{Aabb, Point3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;
use std::sync::Arc;
use thiserror::Error;

type Scalars = SmallVec<[f64; 8]>;
type Vectors = SmallVec<[Vec3; 8]>;

const COINCIDENCE_SAMPLES: usize = 10;
const COINCIDENCE_TOL: f64 = 1e-9;
const CORNER_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PatchError {
    #[error("a corner patch needs at least 3 sides, got {0}")]
    TooFewSides(usize),
    #[error("a side patch needs at least 2 sides, got {0}")]
    TooFewRibbons(usize),
    #[error("bounds, corners and side weights must have equal length")]
    LengthMismatch,
    #[error("bounding fields {0} and {1} coincide (proportional at sample points)")]
    CoincidentBounds(usize, usize),
    #[error("corner field {0} coincides with its adjacent bound {1}")]
    CornerOnBound(usize, usize),
    #[error("side index {0} out of range 1..={1}")]
    SideOutOfRange(usize, usize),
    #[error("point is not on corner {0}: |B(i)|, |B(i+1)|, |S| must all be <= 1e-9")]
    NotACornerPoint(usize),
    #[error("corner interpolant gradient magnitude below 1e-9")]
    VanishingCornerGradient,
    #[error("side patch exponent must be at least 2, got {0}")]
    ExponentTooSmall(u32),
    #[error("side patch weight {0} must be nonzero")]
    ZeroSideWeight(usize),
}

/// Product of `q[j]` over all j for which `keep(j)` holds.
fn prod_where(q: &[f64], keep: impl Fn(usize) -> bool) -> f64 {
    let mut acc = 1.0;
    for (j, &v) in q.iter().enumerate() {
        if keep(j) {
            acc *= v;
        }
    }
    acc
}

/// Gradient of the product of `q[j]` over kept indices, given each factor's
/// gradient `gq[j]`. Uses prefix/suffix products over the kept factors, so a
/// single zero factor contributes its exact cofactor instead of 0/0.
fn grad_prod_where(q: &[f64], gq: &[Vec3], keep: impl Fn(usize) -> bool) -> Vec3 {
    let idx: SmallVec<[usize; 8]> = (0..q.len()).filter(|&j| keep(j)).collect();
    let m = idx.len();
    if m == 0 {
        return Vec3::ZERO;
    }
    let mut prefix: Scalars = SmallVec::with_capacity(m + 1);
    prefix.push(1.0);
    for t in 0..m {
        let last = prefix[t];
        prefix.push(last * q[idx[t]]);
    }
    let mut suffix: Scalars = SmallVec::from_elem(1.0, m + 1);
    for t in (0..m).rev() {
        suffix[t] = suffix[t + 1] * q[idx[t]];
    }
    let mut g = Vec3::ZERO;
    for t in 0..m {
        g += gq[idx[t]] * (prefix[t] * suffix[t + 1]);
    }
    g
}

fn eval_all(fields: &[FieldRef], p: Point3) -> Scalars {
    fields.iter().map(|f| f.value(p)).collect()
}

fn grad_all(fields: &[FieldRef], p: Point3) -> Vectors {
    fields.iter().map(|f| f.gradient(p)).collect()
}

/// Sampled proportionality test: are `a` and `b` scalar multiples of each
/// other as far as the sample points can tell?
fn fields_coincide(a: &dyn Field, b: &dyn Field, pts: &[Point3], tol: f64) -> bool {
    let av: Vec<f64> = pts.iter().map(|&p| a.value(p)).collect();
    let bv: Vec<f64> = pts.iter().map(|&p| b.value(p)).collect();
    let amax = av.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bmax = bv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if amax <= tol && bmax <= tol {
        return true; // both indistinguishable from the zero field
    }
    let scale = (amax * bmax).max(f64::MIN_POSITIVE);
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if (av[i] * bv[j] - av[j] * bv[i]).abs() > tol * scale {
                return false;
            }
        }
    }
    true
}

fn sample_points(cell: &Aabb, count: usize) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1AB7C4);
    (0..count)
        .map(|_| cell.at(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()))
        .collect()
}

// ---------------------------------------------------------------------------
// Corner patch
// ---------------------------------------------------------------------------

/// Diagnostics from comparing the patch gradient against a corner
/// interpolant gradient at a corner point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerGradientRatio {
    /// Scale factor lambda with grad(patch) ~ lambda * grad(S).
    pub lambda: f64,
    /// Residual angle between the two gradients, radians.
    pub angle: f64,
    /// True when another bound also vanishes at the point, which forces
    /// lambda to zero and makes the angle meaningless.
    pub degenerate: bool,
}

/// An n-sided implicit patch defined by bounding surfaces, corner
/// interpolants, per-side weights and one interior weight.
#[derive(Clone)]
pub struct CornerPatch {
    bounds: Vec<FieldRef>,
    corners: Vec<FieldRef>,
    side_weights: Vec<f64>,
    interior_weight: f64,
}

impl CornerPatch {
    /// Builds and validates a patch; non-coincidence of constituents is
    /// checked by sampling inside the unit cube.
    pub fn new(
        bounds: Vec<FieldRef>,
        corners: Vec<FieldRef>,
        side_weights: Vec<f64>,
        interior_weight: f64,
    ) -> Result<Self, PatchError> {
        Self::new_in(bounds, corners, side_weights, interior_weight, &Aabb::UNIT)
    }

    /// Like [`CornerPatch::new`] but samples the coincidence checks inside
    /// the given cell box.
    pub fn new_in(
        bounds: Vec<FieldRef>,
        corners: Vec<FieldRef>,
        side_weights: Vec<f64>,
        interior_weight: f64,
        cell: &Aabb,
    ) -> Result<Self, PatchError> {
        let n = bounds.len();
        if n < 3 {
            return Err(PatchError::TooFewSides(n));
        }
        if corners.len() != n || side_weights.len() != n {
            return Err(PatchError::LengthMismatch);
        }
        let pts = sample_points(cell, COINCIDENCE_SAMPLES);
        for i in 0..n {
            for j in (i + 1)..n {
                if fields_coincide(&*bounds[i], &*bounds[j], &pts, COINCIDENCE_TOL) {
                    return Err(PatchError::CoincidentBounds(i + 1, j + 1));
                }
            }
        }
        for i in 0..n {
            // Corner i sits between bounds i and i+1 (1-based, cyclic).
            for &b in &[i, (i + 1) % n] {
                if fields_coincide(&*corners[i], &*bounds[b], &pts, COINCIDENCE_TOL) {
                    return Err(PatchError::CornerOnBound(i + 1, b + 1));
                }
            }
        }
        Ok(Self {
            bounds,
            corners,
            side_weights,
            interior_weight,
        })
    }

    pub fn n(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[FieldRef] {
        &self.bounds
    }

    pub fn corners(&self) -> &[FieldRef] {
        &self.corners
    }

    pub fn side_weights(&self) -> &[f64] {
        &self.side_weights
    }

    pub fn interior_weight(&self) -> f64 {
        self.interior_weight
    }

    /// Same geometry with different weights. Weights do not affect validity,
    /// so no re-validation happens.
    pub fn with_weights(&self, side_weights: Vec<f64>, interior_weight: f64) -> Self {
        assert_eq!(side_weights.len(), self.n());
        Self {
            bounds: self.bounds.clone(),
            corners: self.corners.clone(),
            side_weights,
            interior_weight,
        }
    }

    fn check_side(&self, side: usize) -> Result<usize, PatchError> {
        if side == 0 || side > self.n() {
            Err(PatchError::SideOutOfRange(side, self.n()))
        } else {
            Ok(side - 1)
        }
    }

    /// Patch value with explicit weights; the stored weights are ignored.
    pub(crate) fn value_with(&self, side_weights: &[f64], interior_weight: f64, p: Point3) -> f64 {
        let n = self.n();
        let b = eval_all(&self.bounds, p);
        let q: Scalars = b.iter().map(|v| v * v).collect();
        let s = eval_all(&self.corners, p);
        let mut acc = 0.0;
        for i in 0..n {
            let j = (i + 1) % n;
            acc += s[i] * prod_where(&q, |t| t != i && t != j);
        }
        for i in 0..n {
            acc += side_weights[i] * prod_where(&q, |t| t != i);
        }
        acc + interior_weight * prod_where(&q, |_| true)
    }

    /// The 2-sided side patch the corner patch degenerates to along bound
    /// `side`: S(i-1,i) B(i+1)^2 + S(i,i+1) B(i-1)^2 + w(i) B(i-1)^2 B(i+1)^2.
    pub fn boundary_side_field(&self, side: usize) -> Result<SideIPatch, PatchError> {
        let i = self.check_side(side)?;
        let n = self.n();
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        SideIPatch::new(
            vec![self.corners[prev].clone(), self.corners[i].clone()],
            vec![self.bounds[prev].clone(), self.bounds[next].clone()],
            vec![1.0, 1.0],
            self.side_weights[i],
            2,
        )
    }

    /// The side-based I-patch whose ribbons are this patch's boundary side
    /// surfaces, with k = 2 and unit ribbon weights. Its gradient vanishes
    /// at every corner point, unlike the corner patch's, and its polynomial
    /// degree is 2n + 2 instead of 2n for planar constituents.
    pub fn ribbon_ipatch(&self) -> SideIPatch {
        let n = self.n();
        let ribbons: Vec<FieldRef> = (1..=n)
            .map(|side| {
                Arc::new(self.boundary_side_field(side).expect("side in range")) as FieldRef
            })
            .collect();
        SideIPatch::new(
            ribbons,
            self.bounds.clone(),
            vec![1.0; n],
            self.interior_weight,
            2,
        )
        .expect("construction from a valid corner patch")
    }

    /// At a corner point of corner `corner` (where B(i), B(i+1) and
    /// S(i,i+1) all vanish within 1e-9), reports the factor lambda with
    /// grad(patch) ~ lambda * grad(S(i,i+1)) and the residual angle.
    pub fn corner_gradient_ratio(
        &self,
        corner: usize,
        p: Point3,
    ) -> Result<CornerGradientRatio, PatchError> {
        let i = self.check_side(corner)?;
        let n = self.n();
        let j = (i + 1) % n;
        let bi = self.bounds[i].value(p);
        let bj = self.bounds[j].value(p);
        let si = self.corners[i].value(p);
        if bi.abs() > CORNER_EPS || bj.abs() > CORNER_EPS || si.abs() > CORNER_EPS {
            return Err(PatchError::NotACornerPoint(corner));
        }
        let gs = self.corners[i].gradient(p);
        let gs_norm = gs.norm();
        if gs_norm < 1e-9 {
            return Err(PatchError::VanishingCornerGradient);
        }
        let degenerate = (0..n)
            .filter(|&t| t != i && t != j)
            .any(|t| self.bounds[t].value(p).abs() <= CORNER_EPS);
        if degenerate {
            return Ok(CornerGradientRatio {
                lambda: 0.0,
                angle: 0.0,
                degenerate: true,
            });
        }
        let g = self.gradient(p);
        Ok(CornerGradientRatio {
            lambda: g.dot(gs) / (gs_norm * gs_norm),
            angle: g.angle_to(gs),
            degenerate: false,
        })
    }
}

impl Field for CornerPatch {
    fn value(&self, p: Point3) -> f64 {
        self.value_with(&self.side_weights, self.interior_weight, p)
    }

    fn gradient(&self, p: Point3) -> Vec3 {
        let n = self.n();
        let b = eval_all(&self.bounds, p);
        let gb = grad_all(&self.bounds, p);
        let q: Scalars = b.iter().map(|v| v * v).collect();
        let gq: Vectors = (0..n).map(|t| gb[t] * (2.0 * b[t])).collect();
        let s = eval_all(&self.corners, p);
        let gs = grad_all(&self.corners, p);

        let mut g = Vec3::ZERO;
        for i in 0..n {
            let j = (i + 1) % n;
            let keep = |t: usize| t != i && t != j;
            g += gs[i] * prod_where(&q, keep);
            g += grad_prod_where(&q, &gq, keep) * s[i];
        }
        for i in 0..n {
            g += grad_prod_where(&q, &gq, |t| t != i) * self.side_weights[i];
        }
        g + grad_prod_where(&q, &gq, |_| true) * self.interior_weight
    }
}

// ---------------------------------------------------------------------------
// Side-based I-patch
// ---------------------------------------------------------------------------

/// An n-sided implicit patch blending ribbons over bounding surfaces with
/// exponent k.
#[derive(Clone)]
pub struct SideIPatch {
    ribbons: Vec<FieldRef>,
    bounds: Vec<FieldRef>,
    weights: Vec<f64>,
    w0: f64,
    k: u32,
}

impl SideIPatch {
    pub fn new(
        ribbons: Vec<FieldRef>,
        bounds: Vec<FieldRef>,
        weights: Vec<f64>,
        w0: f64,
        k: u32,
    ) -> Result<Self, PatchError> {
        let n = ribbons.len();
        if n < 2 {
            return Err(PatchError::TooFewRibbons(n));
        }
        if bounds.len() != n || weights.len() != n {
            return Err(PatchError::LengthMismatch);
        }
        if k < 2 {
            return Err(PatchError::ExponentTooSmall(k));
        }
        if let Some(i) = weights.iter().position(|&w| w == 0.0) {
            return Err(PatchError::ZeroSideWeight(i + 1));
        }
        Ok(Self {
            ribbons,
            bounds,
            weights,
            w0,
            k,
        })
    }

    pub fn n(&self) -> usize {
        self.ribbons.len()
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn ribbons(&self) -> &[FieldRef] {
        &self.ribbons
    }

    pub fn bounds(&self) -> &[FieldRef] {
        &self.bounds
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    // b^k by running product, one multiplication per factor.
    fn powers(&self, b: &[f64]) -> Scalars {
        b.iter()
            .map(|&v| {
                let mut acc = 1.0;
                for _ in 0..self.k {
                    acc *= v;
                }
                acc
            })
            .collect()
    }

    // d(b^k)/dp = k b^(k-1) grad(b), with b^(k-1) again a running product.
    fn power_grads(&self, b: &[f64], gb: &[Vec3]) -> Vectors {
        b.iter()
            .zip(gb)
            .map(|(&v, &g)| {
                let mut acc = 1.0;
                for _ in 0..self.k - 1 {
                    acc *= v;
                }
                g * (self.k as f64 * acc)
            })
            .collect()
    }
}

impl Field for SideIPatch {
    fn value(&self, p: Point3) -> f64 {
        let n = self.n();
        let b = eval_all(&self.bounds, p);
        let q = self.powers(&b);
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.weights[i] * self.ribbons[i].value(p) * prod_where(&q, |t| t != i);
        }
        acc + self.w0 * prod_where(&q, |_| true)
    }

    fn gradient(&self, p: Point3) -> Vec3 {
        let n = self.n();
        let b = eval_all(&self.bounds, p);
        let gb = grad_all(&self.bounds, p);
        let q = self.powers(&b);
        let gq = self.power_grads(&b, &gb);
        let mut g = Vec3::ZERO;
        for i in 0..n {
            let r = self.ribbons[i].value(p);
            let gr = self.ribbons[i].gradient(p);
            g += gr * (self.weights[i] * prod_where(&q, |t| t != i));
            g += grad_prod_where(&q, &gq, |t| t != i) * (self.weights[i] * r);
        }
        g + grad_prod_where(&q, &gq, |_| true) * self.w0
    }
}
