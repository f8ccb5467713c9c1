//! Scalar fields on 3D space.
//!
//! A [`Field`] is an evaluable real function of space together with its
//! analytic gradient. Fields are immutable after construction and every
//! evaluation is a pure function, so they can be shared and evaluated
//! concurrently without restriction. The zero set of a field is the
//! implicit surface it describes.

use crate::geom::{Point3, Vec3};
use std::sync::Arc;
use thiserror::Error;

/// A real-valued function of space with an analytic gradient.
pub trait Field: Send + Sync {
    fn value(&self, p: Point3) -> f64;
    fn gradient(&self, p: Point3) -> Vec3;
}

/// Shared handle to a type-erased field.
pub type FieldRef = Arc<dyn Field>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FieldError {
    #[error("plane normal is too short (|n| = {0:.3e})")]
    DegenerateNormal(f64),
    #[error("duplicate monomial exponents {0:?}")]
    DuplicateTerm([u32; 3]),
}

/// An oriented plane. The field value is the signed distance
/// `normal . p + offset`, with `normal` kept at unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    normal: Vec3,
    offset: f64,
}

impl Plane {
    /// Builds a plane, scaling `normal` and `offset` together so the stored
    /// normal is unit length. Rejects normals shorter than 1e-12.
    pub fn new(normal: Vec3, offset: f64) -> Result<Self, FieldError> {
        let len = normal.norm();
        if len < 1e-12 {
            return Err(FieldError::DegenerateNormal(len));
        }
        Ok(Self {
            normal: normal / len,
            offset: offset / len,
        })
    }

    /// Plane through `p` with the given normal direction.
    pub fn from_point_normal(p: Point3, normal: Vec3) -> Result<Self, FieldError> {
        let len = normal.norm();
        if len < 1e-12 {
            return Err(FieldError::DegenerateNormal(len));
        }
        let n = normal / len;
        Ok(Self {
            normal: n,
            offset: -n.dot(p.to_vec()),
        })
    }

    /// Plane `p[axis] = coord`, increasing along the axis. Exact: the field
    /// evaluates to bitwise 0.0 wherever the axis coordinate equals `coord`.
    pub fn axis_plane(axis: crate::geom::Axis, coord: f64) -> Self {
        Self {
            normal: axis.unit(),
            offset: -coord,
        }
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

impl Field for Plane {
    fn value(&self, p: Point3) -> f64 {
        self.normal.dot(p.to_vec()) + self.offset
    }

    fn gradient(&self, _p: Point3) -> Vec3 {
        self.normal
    }
}

/// One monomial term `coef * x^i * y^j * z^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub powers: [u32; 3],
}

impl Monomial {
    pub fn new(coef: f64, powers: [u32; 3]) -> Self {
        Self { coef, powers }
    }

    pub fn total_degree(&self) -> u32 {
        self.powers.iter().sum()
    }
}

/// A trivariate polynomial in monomial form.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolyField {
    terms: Vec<Monomial>,
}

impl PolyField {
    /// Builds a polynomial from monomial terms. Exponent triples must be
    /// unique; term order is preserved for deterministic evaluation.
    pub fn new(terms: Vec<Monomial>) -> Result<Self, FieldError> {
        let mut seen = std::collections::BTreeSet::new();
        for t in &terms {
            if !seen.insert(t.powers) {
                return Err(FieldError::DuplicateTerm(t.powers));
            }
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    /// Maximum total degree over all terms; 0 for the empty polynomial.
    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(Monomial::total_degree).max().unwrap_or(0)
    }

    /// The affine polynomial `a.p + b`, kept exact (no normalization).
    pub fn linear(a: Vec3, b: f64) -> Self {
        let mut terms = Vec::new();
        if a.x != 0.0 {
            terms.push(Monomial::new(a.x, [1, 0, 0]));
        }
        if a.y != 0.0 {
            terms.push(Monomial::new(a.y, [0, 1, 0]));
        }
        if a.z != 0.0 {
            terms.push(Monomial::new(a.z, [0, 0, 1]));
        }
        if b != 0.0 {
            terms.push(Monomial::new(b, [0, 0, 0]));
        }
        Self { terms }
    }
}

impl Field for PolyField {
    fn value(&self, p: Point3) -> f64 {
        let mut acc = 0.0;
        for t in &self.terms {
            acc += t.coef
                * p.x.powi(t.powers[0] as i32)
                * p.y.powi(t.powers[1] as i32)
                * p.z.powi(t.powers[2] as i32);
        }
        acc
    }

    fn gradient(&self, p: Point3) -> Vec3 {
        let mut g = Vec3::ZERO;
        for t in &self.terms {
            let [i, j, k] = t.powers;
            if i > 0 {
                g.x += t.coef
                    * i as f64
                    * p.x.powi(i as i32 - 1)
                    * p.y.powi(j as i32)
                    * p.z.powi(k as i32);
            }
            if j > 0 {
                g.y += t.coef
                    * j as f64
                    * p.x.powi(i as i32)
                    * p.y.powi(j as i32 - 1)
                    * p.z.powi(k as i32);
            }
            if k > 0 {
                g.z += t.coef
                    * k as f64
                    * p.x.powi(i as i32)
                    * p.y.powi(j as i32)
                    * p.z.powi(k as i32 - 1);
            }
        }
        g
    }
}

/// Normalized forward-difference residual of `field` restricted to a line:
/// samples `order + 1` equally spaced points from `origin` over `span`
/// along `dir`, applies the order-`order` forward difference and divides by
/// the largest sample magnitude. A polynomial restriction of degree below
/// `order` leaves only rounding noise (about 2^order * machine epsilon);
/// higher degrees leave a visible residual.
pub fn forward_diff_residual(
    field: &dyn Field,
    origin: Point3,
    dir: Vec3,
    order: usize,
    span: f64,
) -> f64 {
    let h = span / order as f64;
    let mut vals: Vec<f64> = (0..=order)
        .map(|k| field.value(origin + dir * (h * k as f64)))
        .collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for step in 0..order {
        for i in 0..order - step {
            vals[i] = vals[i + 1] - vals[i];
        }
    }
    vals[0].abs() / scale.max(f64::MIN_POSITIVE)
}

/// Central-difference gradient, the oracle against which analytic
/// gradients are tested: componentwise `(f(p + h e) - f(p - h e)) / 2h`.
pub fn fd_gradient(field: &dyn Field, p: Point3, h: f64) -> Vec3 {
    debug_assert!(h > 0.0);
    let mut g = Vec3::ZERO;
    for axis in crate::geom::Axis::ALL {
        let e = axis.unit();
        let fp = field.value(p + e * h);
        let fm = field.value(p - e * h);
        match axis {
            crate::geom::Axis::X => g.x = (fp - fm) / (2.0 * h),
            crate::geom::Axis::Y => g.y = (fp - fm) / (2.0 * h),
            crate::geom::Axis::Z => g.z = (fp - fm) / (2.0 * h),
        }
    }
    g
}
