//! Shared test helpers: an independent trivariate polynomial oracle, a
//! sphere signed distance field, and a randomized well-conditioned patch
//! generator.
//!
//! The oracle expands patch formulas symbolically into monomials and
//! evaluates the expansion. It shares no code path with the library
//! evaluators, which accumulate running products.

#![allow(dead_code)]

use ipatch::field::{Field, FieldRef, Plane, PolyField};
use ipatch::geom::{Point3, Vec3};
use ipatch::patch::CornerPatch;
use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

// ---------------------------------------------------------------------------
// Symbolic trivariate polynomials
// ---------------------------------------------------------------------------

/// Sparse trivariate polynomial keyed by exponent triple.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly3 {
    pub terms: BTreeMap<[u32; 3], f64>,
}

impl Poly3 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::default();
        if c != 0.0 {
            p.terms.insert([0, 0, 0], c);
        }
        p
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn linear(a: Vec3, b: f64) -> Self {
        let mut p = Self::default();
        for (coef, pow) in [
            (a.x, [1, 0, 0]),
            (a.y, [0, 1, 0]),
            (a.z, [0, 0, 1]),
            (b, [0, 0, 0]),
        ] {
            if coef != 0.0 {
                p.terms.insert(pow, coef);
            }
        }
        p
    }

    pub fn from_plane(plane: &Plane) -> Self {
        Self::linear(plane.normal(), plane.offset())
    }

    pub fn from_poly_field(f: &PolyField) -> Self {
        let mut p = Self::default();
        for t in f.terms() {
            *p.terms.entry(t.powers).or_insert(0.0) += t.coef;
        }
        p
    }

    pub fn add(&self, other: &Poly3) -> Poly3 {
        let mut out = self.clone();
        for (&pow, &c) in &other.terms {
            *out.terms.entry(pow).or_insert(0.0) += c;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly3 {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out
    }

    pub fn mul(&self, other: &Poly3) -> Poly3 {
        let mut out = Poly3::default();
        for (&pa, &ca) in &self.terms {
            for (&pb, &cb) in &other.terms {
                let key = [pa[0] + pb[0], pa[1] + pb[1], pa[2] + pb[2]];
                *out.terms.entry(key).or_insert(0.0) += ca * cb;
            }
        }
        out
    }

    pub fn sq(&self) -> Poly3 {
        self.mul(self)
    }

    pub fn pow(&self, k: u32) -> Poly3 {
        let mut out = Poly3::one();
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|p| p.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, p: Point3) -> f64 {
        self.terms
            .iter()
            .map(|(&pow, &c)| {
                c * p.x.powi(pow[0] as i32) * p.y.powi(pow[1] as i32) * p.z.powi(pow[2] as i32)
            })
            .sum()
    }
}

/// Symbolic expansion of the corner patch formula.
pub fn oracle_corner_patch(
    bounds: &[Poly3],
    corners: &[Poly3],
    side_weights: &[f64],
    interior_weight: f64,
) -> Poly3 {
    let n = bounds.len();
    let q: Vec<Poly3> = bounds.iter().map(Poly3::sq).collect();
    let prod_except = |skip: &dyn Fn(usize) -> bool| -> Poly3 {
        let mut acc = Poly3::one();
        for (t, qt) in q.iter().enumerate() {
            if !skip(t) {
                acc = acc.mul(qt);
            }
        }
        acc
    };
    let mut out = Poly3::zero();
    for i in 0..n {
        let j = (i + 1) % n;
        out = out.add(&corners[i].mul(&prod_except(&|t| t == i || t == j)));
    }
    for i in 0..n {
        out = out.add(&prod_except(&|t| t == i).scale(side_weights[i]));
    }
    out.add(&prod_except(&|_| false).scale(interior_weight))
}

/// Symbolic expansion of the side-based patch formula.
pub fn oracle_side_ipatch(
    ribbons: &[Poly3],
    bounds: &[Poly3],
    weights: &[f64],
    w0: f64,
    k: u32,
) -> Poly3 {
    let n = ribbons.len();
    let q: Vec<Poly3> = bounds.iter().map(|b| b.pow(k)).collect();
    let mut out = Poly3::zero();
    for i in 0..n {
        let mut acc = ribbons[i].scale(weights[i]);
        for (t, qt) in q.iter().enumerate() {
            if t != i {
                acc = acc.mul(qt);
            }
        }
        out = out.add(&acc);
    }
    let mut acc = Poly3::constant(w0);
    for qt in &q {
        acc = acc.mul(qt);
    }
    out.add(&acc)
}

/// Symbolic boundary side surface of side `i` (0-based).
pub fn oracle_boundary_side(
    bounds: &[Poly3],
    corners: &[Poly3],
    side_weights: &[f64],
    i: usize,
) -> Poly3 {
    let n = bounds.len();
    let prev = (i + n - 1) % n;
    let next = (i + 1) % n;
    corners[prev]
        .mul(&bounds[next].sq())
        .add(&corners[i].mul(&bounds[prev].sq()))
        .add(&bounds[prev].sq().mul(&bounds[next].sq()).scale(side_weights[i]))
}

/// Symbolic ribbon expansion: the side patch built by substituting every
/// boundary side surface as a ribbon, with k = 2 and unit weights.
pub fn oracle_ribbon_expansion(
    bounds: &[Poly3],
    corners: &[Poly3],
    side_weights: &[f64],
    interior_weight: f64,
) -> Poly3 {
    let n = bounds.len();
    let ribbons: Vec<Poly3> = (0..n)
        .map(|i| oracle_boundary_side(bounds, corners, side_weights, i))
        .collect();
    oracle_side_ipatch(&ribbons, bounds, &vec![1.0; n], interior_weight, 2)
}

// ---------------------------------------------------------------------------
// Sphere signed distance field (test-local field kind)
// ---------------------------------------------------------------------------

pub struct SphereSdf {
    pub center: Point3,
    pub radius: f64,
}

impl SphereSdf {
    pub fn new(center: Point3, radius: f64) -> Self {
        Self { center, radius }
    }
}

impl Field for SphereSdf {
    fn value(&self, p: Point3) -> f64 {
        (p - self.center).norm() - self.radius
    }
    fn gradient(&self, p: Point3) -> Vec3 {
        (p - self.center).normalized().unwrap_or(Vec3::ZERO)
    }
}

// ---------------------------------------------------------------------------
// Randomized well-conditioned corner patches
// ---------------------------------------------------------------------------

/// A random patch with plane constituents, its planes, and the exact
/// corner points (triple plane intersections, iteratively refined).
pub struct RandomPatch {
    pub patch: CornerPatch,
    pub bound_planes: Vec<Plane>,
    pub corner_planes: Vec<Plane>,
    pub corner_points: Vec<Point3>,
}

fn solve_three_planes(a: &Plane, b: &Plane, c: &Plane) -> Option<Point3> {
    let m = Matrix3::new(
        a.normal().x, a.normal().y, a.normal().z,
        b.normal().x, b.normal().y, b.normal().z,
        c.normal().x, c.normal().y, c.normal().z,
    );
    let rhs = Vector3::new(-a.offset(), -b.offset(), -c.offset());
    let lu = m.lu();
    let x = lu.solve(&rhs)?;
    let mut p = Point3::new(x[0], x[1], x[2]);
    for _ in 0..2 {
        let r = Vector3::new(a.value(p), b.value(p), c.value(p));
        let d = lu.solve(&(-r))?;
        p = Point3::new(p.x + d[0], p.y + d[1], p.z + d[2]);
    }
    Some(p)
}

fn try_random_patch(rng: &mut ChaCha8Rng, n: usize) -> Option<RandomPatch> {
    let jitter = |rng: &mut ChaCha8Rng, s: f64| (rng.gen::<f64>() - 0.5) * 2.0 * s;
    let center = Point3::new(
        0.5 + jitter(rng, 0.05),
        0.5 + jitter(rng, 0.05),
        0.5 + jitter(rng, 0.05),
    );
    let radius = 0.3 + rng.gen::<f64>() * 0.08;
    let phase = rng.gen::<f64>() * std::f64::consts::TAU;

    let mut bound_planes = Vec::with_capacity(n);
    let mut thetas = Vec::with_capacity(n);
    for i in 0..n {
        let theta = phase + std::f64::consts::TAU * (i as f64 + jitter(rng, 0.12)) / n as f64;
        thetas.push(theta);
        let radial = Vec3::new(theta.cos(), theta.sin(), 0.0);
        let normal = Vec3::new(
            radial.x + jitter(rng, 0.08),
            radial.y + jitter(rng, 0.08),
            jitter(rng, 0.15),
        );
        let point = center + radial * radius;
        bound_planes.push(Plane::from_point_normal(point, normal).ok()?);
    }

    let mut corner_planes = Vec::with_capacity(n);
    let mut corner_points = Vec::with_capacity(n);
    for i in 0..n {
        let j = (i + 1) % n;
        // A point on the edge line of bounds i and j, pinned by a z plane.
        let z_pin = Plane::axis_plane(ipatch::geom::Axis::Z, center.z + jitter(rng, 0.2));
        let edge_point = solve_three_planes(&bound_planes[i], &bound_planes[j], &z_pin)?;
        if edge_point.distance(center) > 3.0 {
            return None;
        }
        let mid_theta = 0.5 * (thetas[i] + thetas[j])
            + if i == n - 1 { std::f64::consts::PI } else { 0.0 };
        let normal = Vec3::new(
            mid_theta.cos() + jitter(rng, 0.1),
            mid_theta.sin() + jitter(rng, 0.1),
            0.35 + jitter(rng, 0.2),
        );
        let corner = Plane::from_point_normal(edge_point, normal).ok()?;
        let refined = solve_three_planes(&bound_planes[i], &bound_planes[j], &corner)?;
        corner_planes.push(corner);
        corner_points.push(refined);
    }

    // Conditioning gates: exact corners, and every other bound well away
    // from each corner so corner gradients stay visibly nonzero.
    for (i, &p) in corner_points.iter().enumerate() {
        let j = (i + 1) % n;
        if bound_planes[i].value(p).abs() > 5e-14
            || bound_planes[j].value(p).abs() > 5e-14
            || corner_planes[i].value(p).abs() > 5e-14
        {
            return None;
        }
        for (t, b) in bound_planes.iter().enumerate() {
            if t != i && t != j && b.value(p).abs() < 0.15 {
                return None;
            }
        }
    }

    let side_weights: Vec<f64> = (0..n).map(|_| jitter(rng, 1.5)).collect();
    let interior_weight = jitter(rng, 1.5);
    let patch = CornerPatch::new(
        bound_planes.iter().map(|&p| Arc::new(p) as FieldRef).collect(),
        corner_planes.iter().map(|&p| Arc::new(p) as FieldRef).collect(),
        side_weights,
        interior_weight,
    )
    .ok()?;

    Some(RandomPatch {
        patch,
        bound_planes,
        corner_planes,
        corner_points,
    })
}

/// Random n-sided patch with plane constituents; retries until the
/// conditioning gates pass.
pub fn random_patch(rng: &mut ChaCha8Rng, n: usize) -> RandomPatch {
    for _ in 0..500 {
        if let Some(p) = try_random_patch(rng, n) {
            return p;
        }
    }
    panic!("no well-conditioned random {n}-sided patch after 500 attempts");
}

/// The oracle polynomials of a random patch's constituents.
pub fn patch_polys(rp: &RandomPatch) -> (Vec<Poly3>, Vec<Poly3>) {
    (
        rp.bound_planes.iter().map(Poly3::from_plane).collect(),
        rp.corner_planes.iter().map(Poly3::from_plane).collect(),
    )
}

pub fn random_point_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Point3 {
    Point3::new(
        lo + rng.gen::<f64>() * (hi - lo),
        lo + rng.gen::<f64>() * (hi - lo),
        lo + rng.gen::<f64>() * (hi - lo),
    )
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
        );
        let norm = v.norm();
        if norm > 0.1 && norm <= 1.0 {
            return v / norm;
        }
    }
}

/// |a - b| relative to max(1, |a|, |b|).
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

// ---------------------------------------------------------------------------
// Reference marching-cubes crossing-edge table
// ---------------------------------------------------------------------------

/// Classic marching-cubes crossing-edge table. Vertex order v0(0,0,0)
/// v1(1,0,0) v2(1,1,0) v3(0,1,0) v4(0,0,1) v5(1,0,1) v6(1,1,1) v7(0,1,1);
/// edge bits 0:(0,1) 1:(1,2) 2:(2,3) 3:(3,0) 4:(4,5) 5:(5,6) 6:(6,7)
/// 7:(7,4) 8:(0,4) 9:(1,5) 10:(2,6) 11:(3,7). Bit i of the index marks
/// vertex i negative.
pub const MC_EDGE_TABLE: [u16; 256] = [
    0x000, 0x109, 0x203, 0x30a, 0x406, 0x50f, 0x605, 0x70c,
    0x80c, 0x905, 0xa0f, 0xb06, 0xc0a, 0xd03, 0xe09, 0xf00,
    0x190, 0x099, 0x393, 0x29a, 0x596, 0x49f, 0x795, 0x69c,
    0x99c, 0x895, 0xb9f, 0xa96, 0xd9a, 0xc93, 0xf99, 0xe90,
    0x230, 0x339, 0x033, 0x13a, 0x636, 0x73f, 0x435, 0x53c,
    0xa3c, 0xb35, 0x83f, 0x936, 0xe3a, 0xf33, 0xc39, 0xd30,
    0x3a0, 0x2a9, 0x1a3, 0x0aa, 0x7a6, 0x6af, 0x5a5, 0x4ac,
    0xbac, 0xaa5, 0x9af, 0x8a6, 0xfaa, 0xea3, 0xda9, 0xca0,
    0x460, 0x569, 0x663, 0x76a, 0x066, 0x16f, 0x265, 0x36c,
    0xc6c, 0xd65, 0xe6f, 0xf66, 0x86a, 0x963, 0xa69, 0xb60,
    0x5f0, 0x4f9, 0x7f3, 0x6fa, 0x1f6, 0x0ff, 0x3f5, 0x2fc,
    0xdfc, 0xcf5, 0xfff, 0xef6, 0x9fa, 0x8f3, 0xbf9, 0xaf0,
    0x650, 0x759, 0x453, 0x55a, 0x256, 0x35f, 0x055, 0x15c,
    0xe5c, 0xf55, 0xc5f, 0xd56, 0xa5a, 0xb53, 0x859, 0x950,
    0x7c0, 0x6c9, 0x5c3, 0x4ca, 0x3c6, 0x2cf, 0x1c5, 0x0cc,
    0xfcc, 0xec5, 0xdcf, 0xcc6, 0xbca, 0xac3, 0x9c9, 0x8c0,
    0x8c0, 0x9c9, 0xac3, 0xbca, 0xcc6, 0xdcf, 0xec5, 0xfcc,
    0x0cc, 0x1c5, 0x2cf, 0x3c6, 0x4ca, 0x5c3, 0x6c9, 0x7c0,
    0x950, 0x859, 0xb53, 0xa5a, 0xd56, 0xc5f, 0xf55, 0xe5c,
    0x15c, 0x055, 0x35f, 0x256, 0x55a, 0x453, 0x759, 0x650,
    0xaf0, 0xbf9, 0x8f3, 0x9fa, 0xef6, 0xfff, 0xcf5, 0xdfc,
    0x2fc, 0x3f5, 0x0ff, 0x1f6, 0x6fa, 0x7f3, 0x4f9, 0x5f0,
    0xb60, 0xa69, 0x963, 0x86a, 0xf66, 0xe6f, 0xd65, 0xc6c,
    0x36c, 0x265, 0x16f, 0x066, 0x76a, 0x663, 0x569, 0x460,
    0xca0, 0xda9, 0xea3, 0xfaa, 0x8a6, 0x9af, 0xaa5, 0xbac,
    0x4ac, 0x5a5, 0x6af, 0x7a6, 0x0aa, 0x1a3, 0x2a9, 0x3a0,
    0xd30, 0xc39, 0xf33, 0xe3a, 0x936, 0x83f, 0xb35, 0xa3c,
    0x53c, 0x435, 0x73f, 0x636, 0x13a, 0x033, 0x339, 0x230,
    0xe90, 0xf99, 0xc93, 0xd9a, 0xa96, 0xb9f, 0x895, 0x99c,
    0x69c, 0x795, 0x49f, 0x596, 0x29a, 0x393, 0x099, 0x190,
    0xf00, 0xe09, 0xd03, 0xc0a, 0xb06, 0xa0f, 0x905, 0x80c,
    0x70c, 0x605, 0x50f, 0x406, 0x30a, 0x203, 0x109, 0x000,
];

/// Reference vertex order as local corner indices (bit0 x, bit1 y, bit2 z).
pub const MC_VERTEX_TO_CORNER: [usize; 8] = [0, 1, 3, 2, 4, 5, 7, 6];

/// Reference edges as vertex pairs.
pub const MC_EDGES: [(usize, usize); 12] = [
    (0, 1), (1, 2), (2, 3), (3, 0),
    (4, 5), (5, 6), (6, 7), (7, 4),
    (0, 4), (1, 5), (2, 6), (3, 7),
];

/// Local edge id of a reference edge.
pub fn mc_edge_to_local(e: usize) -> usize {
    use ipatch::cell::{edge_corners, LOCAL_EDGES};
    let (va, vb) = MC_EDGES[e];
    let (ca, cb) = (MC_VERTEX_TO_CORNER[va], MC_VERTEX_TO_CORNER[vb]);
    LOCAL_EDGES
        .iter()
        .enumerate()
        .position(|(id, _)| {
            let (lo, hi) = edge_corners(id);
            (lo == ca && hi == cb) || (lo == cb && hi == ca)
        })
        .expect("reference edge maps to a local edge")
}

/// Negativity flags of a reference table index.
pub fn mc_index_to_signs(ci: usize) -> [bool; 8] {
    let mut negative = [false; 8];
    for v in 0..8 {
        if (ci >> v) & 1 == 1 {
            negative[MC_VERTEX_TO_CORNER[v]] = true;
        }
    }
    negative
}

// ---------------------------------------------------------------------------
// Watertightness helpers
// ---------------------------------------------------------------------------

/// Boundary edges of a mesh whose endpoints both lie on the given plane
/// coordinate.
pub fn boundary_edges_on_plane(
    mesh: &ipatch::mesh::Mesh,
    axis: ipatch::Axis,
    coord: f64,
) -> Vec<(Point3, Point3)> {
    mesh.boundary_edges()
        .iter()
        .filter_map(|&[a, b]| {
            let pa = mesh.vertices[a as usize];
            let pb = mesh.vertices[b as usize];
            if (pa.axis(axis) - coord).abs() <= 1e-9 && (pb.axis(axis) - coord).abs() <= 1e-9 {
                Some((pa, pb))
            } else {
                None
            }
        })
        .collect()
}

pub fn edges_match(a: (Point3, Point3), b: (Point3, Point3), tol: f64) -> bool {
    (a.0.distance(b.0) <= tol && a.1.distance(b.1) <= tol)
        || (a.0.distance(b.1) <= tol && a.1.distance(b.0) <= tol)
}
