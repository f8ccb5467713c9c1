//! Cube-grid patchworks.
//!
//! A source field is sampled on a regular grid of cubes. Each cell with a
//! sign change hosts one corner patch per boundary loop of its sign
//! configuration:
//!
//! 1. [`sample_grid`] stores vertex values and, for every sign-changing
//!    grid edge, a Hermite sample (bisected crossing point plus unit source
//!    normal). Sampling once per global edge is what lets every cell around
//!    an edge agree on the corner data.
//! 2. [`classify_cell`] turns the 8 vertex signs into closed boundary
//!    loops, each loop a cyclic list of (face, crossing edge) pairs. The
//!    topology matches the classic 256-case cube table; the ambiguous face
//!    cases are resolved by the fixed rule "separate negative vertices",
//!    applied identically on both sides of any face.
//! 3. [`build_cell_patch`] makes one corner patch per loop: bounds are the
//!    cell's face planes, corners are tangent planes through the Hermite
//!    samples, side weights are solved so the patch interpolates the chord
//!    midpoint of each side's two crossings, and the interior weight stays
//!    zero.
//! 4. [`check_continuity`] samples zero crossings of one cell's patch on a
//!    shared face and measures the neighbor patch value and gradient angle
//!    there.
//!
//! Neighboring cells see bitwise-identical plane parameters on shared
//! faces because face planes are derived from global grid coordinates with
//! one canonical orientation (normal along the positive axis) and corner
//! planes are derived from the shared per-edge Hermite store. Patch values
//! only ever use squared bound values, so the canonical orientation does
//! not change any patch.
//!
//! The Hermite store is built first and is immutable afterwards; cell
//! construction and continuity checks read only immutable data and may run
//! concurrently.

use crate::field::{Field, FieldRef, Plane};
use crate::geom::{Aabb, Axis, Point3, Vec3};
use crate::patch::{CornerPatch, PatchError};
use crate::solver::{solve_side_weight, SolveError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

pub const POSITIONAL_TOL: f64 = 1e-8;
pub const ANGULAR_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Error)]
pub enum CellError {
    #[error("grid spacing must be positive, got {0}")]
    BadSpacing(f64),
    #[error("grid dims must be at least 1 per axis, got {0:?}")]
    BadDims([usize; 3]),
    #[error("source gradient vanishes at crossing of edge {0:?}")]
    DegenerateGradient(EdgeKey),
    #[error("crossing normal is tangential to edge {0:?}; corner plane sign undecidable")]
    TangentialCrossing(EdgeKey),
    #[error("crossing normal of edge {0:?} is parallel to an adjacent face; corner plane would coincide with a bound")]
    CornerPlaneOnBound(EdgeKey),
    #[error("no hermite sample for crossing edge {0:?}")]
    MissingHermite(EdgeKey),
    #[error("default side target failed: {0}")]
    WeightSolve(#[from] SolveError),
    #[error(transparent)]
    Patch(#[from] PatchError),
}

/// A regular grid of cube cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub origin: Point3,
    pub spacing: f64,
    pub dims: [usize; 3],
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), CellError> {
        if !self.spacing.is_finite() || self.spacing <= 0.0 {
            return Err(CellError::BadSpacing(self.spacing));
        }
        if self.dims.contains(&0) {
            return Err(CellError::BadDims(self.dims));
        }
        Ok(())
    }

    /// Grid vertices per axis (cells + 1).
    pub fn vertex_dims(&self) -> [usize; 3] {
        [self.dims[0] + 1, self.dims[1] + 1, self.dims[2] + 1]
    }

    pub fn vertex_pos(&self, ix: usize, iy: usize, iz: usize) -> Point3 {
        Point3::new(
            self.origin.x + ix as f64 * self.spacing,
            self.origin.y + iy as f64 * self.spacing,
            self.origin.z + iz as f64 * self.spacing,
        )
    }

    pub fn cell_box(&self, cell: [usize; 3]) -> Aabb {
        Aabb::new(
            self.vertex_pos(cell[0], cell[1], cell[2]),
            self.vertex_pos(cell[0] + 1, cell[1] + 1, cell[2] + 1),
        )
    }

    /// Plane coordinate of a cell face, computed from global grid indices
    /// so that adjacent cells agree bitwise.
    pub fn face_coord(&self, cell: [usize; 3], axis: Axis, side: usize) -> f64 {
        let a = axis.index();
        self.origin.axis(axis) + (cell[a] + side) as f64 * self.spacing
    }
}

/// Global identifier of a grid edge: lowest endpoint plus direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub base: [usize; 3],
    pub axis: Axis,
}

impl EdgeKey {
    pub fn endpoints(&self) -> ([usize; 3], [usize; 3]) {
        let mut other = self.base;
        other[self.axis.index()] += 1;
        (self.base, other)
    }
}

/// A surface crossing on a grid edge: position on the edge plus the unit
/// source normal there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteSample {
    pub edge: EdgeKey,
    /// Fraction along the edge from the base endpoint, in [0, 1].
    pub t: f64,
    pub position: Point3,
    pub normal: Vec3,
}

/// Vertex values (sign-perturbed) and per-edge Hermite samples of a source
/// field over a grid.
pub struct GridSamples {
    pub grid: GridSpec,
    values: Vec<f64>,
    pub hermite: BTreeMap<EdgeKey, HermiteSample>,
}

impl GridSamples {
    fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        let [sx, sy, _] = self.grid.vertex_dims();
        ix + sx * (iy + sy * iz)
    }

    /// Stored vertex value; exact zeros were perturbed to +1e-10 * spacing.
    pub fn value(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.values[self.index(ix, iy, iz)]
    }

    pub fn negative(&self, ix: usize, iy: usize, iz: usize) -> bool {
        self.value(ix, iy, iz) < 0.0
    }

    /// The 8 negativity flags of a cell, in local corner order.
    pub fn cell_signs(&self, cell: [usize; 3]) -> [bool; 8] {
        let mut out = [false; 8];
        for (c, flag) in out.iter_mut().enumerate() {
            let [dx, dy, dz] = corner_offset(c);
            *flag = self.negative(cell[0] + dx, cell[1] + dy, cell[2] + dz);
        }
        out
    }
}

/// Bisection root of `field` on the segment from `p0` to `p1`, where the
/// value at `p0` has the negativity given by `neg_at_start` and the other
/// end has the opposite sign. Zero values count as positive. Runs until the
/// parameter interval stops shrinking, well past 1e-10 of the segment.
pub fn bisect_on_segment(
    field: &dyn Field,
    p0: Point3,
    p1: Point3,
    neg_at_start: bool,
) -> (f64, Point3) {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..90 {
        let m = 0.5 * (lo + hi);
        if m == lo || m == hi {
            break;
        }
        let v = field.value(p0.lerp(p1, m));
        if (v < 0.0) == neg_at_start {
            lo = m;
        } else {
            hi = m;
        }
    }
    let t = 0.5 * (lo + hi);
    (t, p0.lerp(p1, t))
}

/// Samples vertex values and Hermite data for every sign-changing edge.
/// Vertex values that are exactly zero are perturbed to +1e-10 * spacing so
/// the 256-case classification stays total.
pub fn sample_grid(source: &dyn Field, grid: &GridSpec) -> Result<GridSamples, CellError> {
    grid.validate()?;
    let [sx, sy, sz] = grid.vertex_dims();
    let mut values = vec![0.0f64; sx * sy * sz];
    for iz in 0..sz {
        for iy in 0..sy {
            for ix in 0..sx {
                let v = source.value(grid.vertex_pos(ix, iy, iz));
                values[ix + sx * (iy + sy * iz)] = if v == 0.0 { 1e-10 * grid.spacing } else { v };
            }
        }
    }
    let mut samples = GridSamples {
        grid: *grid,
        values,
        hermite: BTreeMap::new(),
    };
    for iz in 0..sz {
        for iy in 0..sy {
            for ix in 0..sx {
                for axis in Axis::ALL {
                    let [ex, ey, ez] = {
                        let mut e = [ix, iy, iz];
                        e[axis.index()] += 1;
                        e
                    };
                    if ex >= sx || ey >= sy || ez >= sz {
                        continue;
                    }
                    let v0 = samples.value(ix, iy, iz);
                    let v1 = samples.value(ex, ey, ez);
                    if (v0 < 0.0) == (v1 < 0.0) {
                        continue;
                    }
                    let key = EdgeKey { base: [ix, iy, iz], axis };
                    let p0 = grid.vertex_pos(ix, iy, iz);
                    let p1 = grid.vertex_pos(ex, ey, ez);
                    let (t, position) = bisect_on_segment(source, p0, p1, v0 < 0.0);
                    let g = source.gradient(position);
                    let normal = g
                        .normalized()
                        .ok_or(CellError::DegenerateGradient(key))?;
                    samples.hermite.insert(
                        key,
                        HermiteSample { edge: key, t, position, normal },
                    );
                }
            }
        }
    }
    Ok(samples)
}

// ---------------------------------------------------------------------------
// Local cube tables
// ---------------------------------------------------------------------------

/// Local corner c in 0..8 has offsets (bit 0, bit 1, bit 2).
pub fn corner_offset(c: usize) -> [usize; 3] {
    [c & 1, (c >> 1) & 1, (c >> 2) & 1]
}

/// The 12 local edges as (low corner, axis); ids 0..4 run along x,
/// 4..8 along y, 8..12 along z.
pub const LOCAL_EDGES: [(usize, Axis); 12] = [
    (0, Axis::X),
    (2, Axis::X),
    (4, Axis::X),
    (6, Axis::X),
    (0, Axis::Y),
    (1, Axis::Y),
    (4, Axis::Y),
    (5, Axis::Y),
    (0, Axis::Z),
    (1, Axis::Z),
    (2, Axis::Z),
    (3, Axis::Z),
];

/// Endpoint corners of a local edge.
pub fn edge_corners(edge: usize) -> (usize, usize) {
    let (low, axis) = LOCAL_EDGES[edge];
    (low, low | (1 << axis.index()))
}

fn edge_from_corners(a: usize, b: usize) -> usize {
    let diff = a ^ b;
    debug_assert!(diff.count_ones() == 1);
    let axis = diff.trailing_zeros() as usize;
    let low = a & !diff;
    LOCAL_EDGES
        .iter()
        .position(|&(l, ax)| l == low && ax.index() == axis)
        .expect("corner pair forms a cube edge")
}

/// Local face id: axis * 2 + side.
pub fn face_axis_side(face: usize) -> (Axis, usize) {
    (Axis::from_index(face / 2), face % 2)
}

/// The face's 4 corners in cyclic order, and the edge between each
/// consecutive corner pair.
fn face_cycle(face: usize) -> ([usize; 4], [usize; 4]) {
    let (axis, side) = face_axis_side(face);
    let (ua, va) = axis.others();
    let mut corners = [0usize; 4];
    for (t, &(u, v)) in [(0, 0), (1, 0), (1, 1), (0, 1)].iter().enumerate() {
        corners[t] = (side << axis.index()) | (u << ua.index()) | (v << va.index());
    }
    let mut edges = [0usize; 4];
    for t in 0..4 {
        edges[t] = edge_from_corners(corners[t], corners[(t + 1) % 4]);
    }
    (corners, edges)
}

/// 2D position of a corner in the face frame used for orientation. The
/// frame is right-handed with respect to the cell's inward normal, so
/// "negative region on the left" means the same thing on every face.
fn face_coords_2d(face: usize, corner: usize) -> (f64, f64) {
    let (axis, side) = face_axis_side(face);
    let (ua, va) = axis.others();
    let u = ((corner >> ua.index()) & 1) as f64;
    let v = ((corner >> va.index()) & 1) as f64;
    if side == 0 {
        (u, v)
    } else {
        (v, u)
    }
}

fn edge_mid_2d(face: usize, edge: usize) -> (f64, f64) {
    let (a, b) = edge_corners(edge);
    let (au, av) = face_coords_2d(face, a);
    let (bu, bv) = face_coords_2d(face, b);
    (0.5 * (au + bu), 0.5 * (av + bv))
}

/// One step of a boundary loop: the surface runs across `face` and leaves
/// it through crossing edge `edge` (shared with the next step's face).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopStep {
    pub face: usize,
    pub edge: usize,
}

/// Sign configuration of one cell: the 8 negativity flags and the derived
/// boundary loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellConfig {
    pub negative: [bool; 8],
    pub loops: Vec<Vec<LoopStep>>,
}

impl CellConfig {
    /// All crossing edges, ascending; each appears in exactly one loop.
    pub fn crossing_edges(&self) -> Vec<usize> {
        let mut edges: Vec<usize> = self
            .loops
            .iter()
            .flat_map(|l| l.iter().map(|s| s.edge))
            .collect();
        edges.sort_unstable();
        edges
    }

    /// Faces crossed by at least one loop, ascending and deduplicated.
    pub fn active_faces(&self) -> Vec<usize> {
        let mut faces: Vec<usize> = self
            .loops
            .iter()
            .flat_map(|l| l.iter().map(|s| s.face))
            .collect();
        faces.sort_unstable();
        faces.dedup();
        faces
    }
}

/// Directed crossing segment on one face, from crossing edge `enter` to
/// crossing edge `exit`, with the face's negative corners on the left.
struct Segment {
    face: usize,
    enter: usize,
    exit: usize,
}

fn face_segments(face: usize, negative: &[bool; 8], out: &mut Vec<Segment>) {
    let (corners, edges) = face_cycle(face);
    let crossing: Vec<usize> = edges
        .iter()
        .copied()
        .filter(|&e| {
            let (a, b) = edge_corners(e);
            negative[a] != negative[b]
        })
        .collect();
    let oriented = |e1: usize, e2: usize, rep_corner: usize| -> Segment {
        let m1 = edge_mid_2d(face, e1);
        let m2 = edge_mid_2d(face, e2);
        let c = face_coords_2d(face, rep_corner);
        let d = (m2.0 - m1.0, m2.1 - m1.1);
        let r = (c.0 - m1.0, c.1 - m1.1);
        let cross = d.0 * r.1 - d.1 * r.0;
        if cross >= 0.0 {
            Segment { face, enter: e1, exit: e2 }
        } else {
            Segment { face, enter: e2, exit: e1 }
        }
    };
    match crossing.len() {
        0 => {}
        2 => {
            let rep = corners
                .iter()
                .copied()
                .find(|&c| negative[c])
                .expect("a crossing face has a negative corner");
            out.push(oriented(crossing[0], crossing[1], rep));
        }
        4 => {
            // Ambiguous face: corners alternate in sign around the cycle.
            // Separate the negative vertices: each negative corner gets the
            // segment joining its two incident face edges.
            for &c in corners.iter().filter(|&&c| negative[c]) {
                let adj: Vec<usize> = (0..4)
                    .filter(|&t| corners[t] == c)
                    .flat_map(|t| [edges[t], edges[(t + 3) % 4]])
                    .collect();
                debug_assert_eq!(adj.len(), 2);
                out.push(oriented(adj[0], adj[1], c));
            }
        }
        _ => unreachable!("a face has 0, 2 or 4 crossing edges"),
    }
}

/// Derives the boundary loops of a sign configuration. Total over all 256
/// patterns; an all-equal pattern yields no loops.
pub fn classify_cell(negative: [bool; 8]) -> CellConfig {
    let mut segments = Vec::new();
    for face in 0..6 {
        face_segments(face, &negative, &mut segments);
    }
    // Coherent orientation makes each crossing edge enter exactly one
    // segment and exit exactly one other.
    let mut by_enter: [Option<usize>; 12] = [None; 12];
    for (i, seg) in segments.iter().enumerate() {
        debug_assert!(by_enter[seg.enter].is_none());
        by_enter[seg.enter] = Some(i);
    }
    let mut visited = [false; 12];
    let mut loops = Vec::new();
    for start in 0..12 {
        if visited[start] || by_enter[start].is_none() {
            continue;
        }
        let mut steps = Vec::new();
        let mut edge = start;
        loop {
            visited[edge] = true;
            let seg = &segments[by_enter[edge].expect("crossing edge has a segment")];
            steps.push(LoopStep { face: seg.face, edge: seg.exit });
            edge = seg.exit;
            if edge == start {
                break;
            }
        }
        // Canonical rotation: smallest crossing edge first.
        let min_pos = steps
            .iter()
            .enumerate()
            .min_by_key(|(_, s)| s.edge)
            .map(|(i, _)| i)
            .unwrap();
        steps.rotate_left(min_pos);
        loops.push(steps);
    }
    loops.sort_by_key(|l| l[0].edge);
    CellConfig { negative, loops }
}

// ---------------------------------------------------------------------------
// Cell patches
// ---------------------------------------------------------------------------

/// One boundary loop's corner patch, with its constituent planes kept
/// alongside for serialization and face bookkeeping.
#[derive(Clone)]
pub struct LoopPatch {
    pub bound_planes: Vec<Plane>,
    pub corner_planes: Vec<Plane>,
    /// Crossing points, one per loop step, in loop order.
    pub crossings: Vec<Point3>,
    pub patch: CornerPatch,
}

/// All patches hosted by one grid cell.
#[derive(Clone)]
pub struct CellPatch {
    pub index: [usize; 3],
    pub bbox: Aabb,
    pub config: CellConfig,
    pub loops: Vec<LoopPatch>,
}

fn hermite_plane(
    samples: &GridSamples,
    key: EdgeKey,
) -> Result<(Plane, Point3), CellError> {
    let sample = samples
        .hermite
        .get(&key)
        .ok_or(CellError::MissingHermite(key))?;
    let (lo, hi) = key.endpoints();
    let v_lo = samples.value(lo[0], lo[1], lo[2]);
    let neg_end = if v_lo < 0.0 { lo } else { hi };
    let neg_pos = samples.grid.vertex_pos(neg_end[0], neg_end[1], neg_end[2]);
    // The corner plane must coincide with neither adjacent face plane.
    let (a1, a2) = key.axis.others();
    for face_axis in [a1, a2] {
        if sample.normal.cross(face_axis.unit()).norm() <= 1e-6 {
            return Err(CellError::CornerPlaneOnBound(key));
        }
    }
    let v_end = sample.normal.dot(neg_pos - sample.position);
    if v_end.abs() <= 1e-12 {
        return Err(CellError::TangentialCrossing(key));
    }
    let normal = if v_end > 0.0 { -sample.normal } else { sample.normal };
    let plane = Plane::from_point_normal(sample.position, normal)
        .expect("unit normal cannot degenerate");
    Ok((plane, sample.position))
}

/// Builds the corner patches of one cell from its sign configuration and
/// the shared Hermite store.
pub fn build_cell_patch(
    grid: &GridSpec,
    index: [usize; 3],
    config: CellConfig,
    samples: &GridSamples,
) -> Result<CellPatch, CellError> {
    let bbox = grid.cell_box(index);
    let mut loops = Vec::with_capacity(config.loops.len());
    for steps in &config.loops {
        let m = steps.len();
        let mut bound_planes = Vec::with_capacity(m);
        let mut corner_planes = Vec::with_capacity(m);
        let mut crossings = Vec::with_capacity(m);
        for step in steps {
            let (axis, side) = face_axis_side(step.face);
            bound_planes.push(Plane::axis_plane(axis, grid.face_coord(index, axis, side)));

            let (low, edge_axis) = LOCAL_EDGES[step.edge];
            let off = corner_offset(low);
            let key = EdgeKey {
                base: [index[0] + off[0], index[1] + off[1], index[2] + off[2]],
                axis: edge_axis,
            };
            let (plane, position) = hermite_plane(samples, key)?;
            corner_planes.push(plane);
            crossings.push(position);
        }

        let patch = CornerPatch::new_in(
            bound_planes
                .iter()
                .map(|&p| Arc::new(p) as FieldRef)
                .collect(),
            corner_planes
                .iter()
                .map(|&p| Arc::new(p) as FieldRef)
                .collect(),
            vec![0.0; m],
            0.0,
            &bbox,
        )?;

        // Default side targets: the chord midpoint of each side's two
        // crossings, which lies on the side's face plane. Both crossings
        // are shared with the facing cell, so the facing side solves the
        // same target and lands on bitwise the same weight.
        let mut side_weights = vec![0.0; m];
        for t in 0..m {
            let prev = crossings[(t + m - 1) % m];
            let here = crossings[t];
            let mut target = Point3::new(
                0.5 * (prev.x + here.x),
                0.5 * (prev.y + here.y),
                0.5 * (prev.z + here.z),
            );
            let (axis, side) = face_axis_side(steps[t].face);
            target.set_axis(axis, grid.face_coord(index, axis, side));
            side_weights[t] = solve_side_weight(&patch, t + 1, target)?;
        }
        let patch = patch.with_weights(side_weights, 0.0);

        loops.push(LoopPatch {
            bound_planes,
            corner_planes,
            crossings,
            patch,
        });
    }
    Ok(CellPatch {
        index,
        bbox,
        config,
        loops,
    })
}

/// A grid plus the patches of every cell its surface crosses.
pub struct CellComplex {
    pub grid: GridSpec,
    pub cells: Vec<CellPatch>,
}

/// Samples the source once, classifies every cell and builds patches for
/// every cell with at least one loop. Cells are visited in scan order
/// (x fastest).
pub fn build_complex(source: &dyn Field, grid: &GridSpec) -> Result<CellComplex, CellError> {
    let samples = sample_grid(source, grid)?;
    let mut cells = Vec::new();
    for cz in 0..grid.dims[2] {
        for cy in 0..grid.dims[1] {
            for cx in 0..grid.dims[0] {
                let index = [cx, cy, cz];
                let config = classify_cell(samples.cell_signs(index));
                if config.loops.is_empty() {
                    continue;
                }
                cells.push(build_cell_patch(grid, index, config, &samples)?);
            }
        }
    }
    Ok(CellComplex { grid: *grid, cells })
}

impl CellComplex {
    /// Index pairs of face-adjacent nonempty cells, with their shared face.
    pub fn adjacent_pairs(&self) -> Vec<(usize, usize, SharedFace)> {
        let mut by_index: BTreeMap<[usize; 3], usize> = BTreeMap::new();
        for (i, c) in self.cells.iter().enumerate() {
            by_index.insert(c.index, i);
        }
        let mut out = Vec::new();
        for (i, c) in self.cells.iter().enumerate() {
            for axis in Axis::ALL {
                let mut n = c.index;
                n[axis.index()] += 1;
                if let Some(&j) = by_index.get(&n) {
                    if let Some(face) = shared_face(c, &self.cells[j]) {
                        out.push((i, j, face));
                    }
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Continuity
// ---------------------------------------------------------------------------

/// The rectangle two adjacent cells share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharedFace {
    pub axis: Axis,
    pub coord: f64,
    pub u_axis: Axis,
    pub v_axis: Axis,
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
}

/// Shared face of two face-adjacent cells, if any.
pub fn shared_face(a: &CellPatch, b: &CellPatch) -> Option<SharedFace> {
    let mut diff_axis = None;
    for axis in Axis::ALL {
        let ai = a.index[axis.index()] as isize;
        let bi = b.index[axis.index()] as isize;
        if ai == bi {
            continue;
        }
        if (ai - bi).abs() == 1 && diff_axis.is_none() {
            diff_axis = Some(axis);
        } else {
            return None;
        }
    }
    let axis = diff_axis?;
    let low_cell = if a.index[axis.index()] < b.index[axis.index()] { a } else { b };
    let (u_axis, v_axis) = axis.others();
    Some(SharedFace {
        axis,
        coord: low_cell.bbox.max.axis(axis),
        u_axis,
        v_axis,
        u_range: (low_cell.bbox.min.axis(u_axis), low_cell.bbox.max.axis(u_axis)),
        v_range: (low_cell.bbox.min.axis(v_axis), low_cell.bbox.max.axis(v_axis)),
    })
}

/// Outcome of a one-directional continuity check: zero crossings of cell
/// `a`'s patches on the shared face, measured against cell `b`'s patches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityReport {
    pub points: usize,
    pub max_positional: f64,
    pub max_angle: f64,
    /// No crossings found on the shared face; the check is vacuous.
    pub vacuous: bool,
}

impl ContinuityReport {
    pub fn pass(&self) -> bool {
        self.vacuous || (self.max_positional <= POSITIONAL_TOL && self.max_angle <= ANGULAR_TOL)
    }
}

fn loops_with_face<'a>(loops: &'a [LoopPatch], face: &SharedFace) -> Vec<&'a LoopPatch> {
    loops
        .iter()
        .filter(|lp| {
            lp.bound_planes.iter().any(|pl| {
                pl.normal() == face.axis.unit() && (pl.offset() + face.coord).abs() <= 1e-12
            })
        })
        .collect()
}

/// Samples zero crossings of `a`'s patches restricted to the shared face
/// and reports the largest |value| and gradient angle of `b`'s patches
/// there.
pub fn check_continuity(a: &CellPatch, b: &CellPatch, face: &SharedFace) -> ContinuityReport {
    check_continuity_loops(&a.loops, &b.loops, face)
}

/// [`check_continuity`] on bare loop patch lists. Scan lines stay slightly
/// inside the face rectangle, away from the cell edge lines on which every
/// patch degenerates.
pub fn check_continuity_loops(
    a: &[LoopPatch],
    b: &[LoopPatch],
    face: &SharedFace,
) -> ContinuityReport {
    const LINES: usize = 24;
    const SAMPLES: usize = 96;
    const INSET: f64 = 5e-3;

    let pa_list = loops_with_face(a, face);
    let pb_list = loops_with_face(b, face);
    let mut report = ContinuityReport {
        points: 0,
        max_positional: 0.0,
        max_angle: 0.0,
        vacuous: true,
    };
    if pa_list.is_empty() || pb_list.is_empty() {
        return report;
    }

    let collect_dir = |scan_axis: Axis, line_axis: Axis, pa: &LoopPatch, roots: &mut Vec<Point3>| {
        let (s0, s1) = if scan_axis == face.u_axis { face.u_range } else { face.v_range };
        let (l0, l1) = if line_axis == face.u_axis { face.u_range } else { face.v_range };
        let s_lo = s0 + INSET * (s1 - s0);
        let s_hi = s1 - INSET * (s1 - s0);
        for li in 0..LINES {
            let frac = (li as f64 + 0.5) / LINES as f64;
            let lv = l0 + (INSET + (1.0 - 2.0 * INSET) * frac) * (l1 - l0);
            let mut prev: Option<(Point3, f64)> = None;
            for si in 0..=SAMPLES {
                let sv = s_lo + (s_hi - s_lo) * si as f64 / SAMPLES as f64;
                let mut p = Point3::ORIGIN;
                p.set_axis(face.axis, face.coord);
                p.set_axis(scan_axis, sv);
                p.set_axis(line_axis, lv);
                let v = pa.patch.value(p);
                if let Some((pp, pv)) = prev {
                    if (pv < 0.0) != (v < 0.0) {
                        let (_, root) = bisect_on_segment(&pa.patch, pp, p, pv < 0.0);
                        roots.push(root);
                    }
                }
                prev = Some((p, v));
            }
        }
    };

    for pa in &pa_list {
        let mut roots = Vec::new();
        collect_dir(face.u_axis, face.v_axis, pa, &mut roots);
        collect_dir(face.v_axis, face.u_axis, pa, &mut roots);
        for &r in &roots {
            let (best, pos) = pb_list
                .iter()
                .map(|pb| (pb, pb.patch.value(r).abs()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("pb_list nonempty");
            let angle = pa.patch.gradient(r).angle_to(best.patch.gradient(r));
            report.max_positional = report.max_positional.max(pos);
            report.max_angle = report.max_angle.max(angle);
        }
        report.points += roots.len();
    }
    report.vacuous = report.points == 0;
    report
}
