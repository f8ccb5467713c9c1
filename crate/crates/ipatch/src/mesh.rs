//! Triangle mesh extraction from field zero sets, Newton projection of
//! vertices, and Wavefront OBJ export.
//!
//! [`polygonize`] walks the classic cube subdivision of a box: vertices sit
//! on sign-changing lattice edges, refined by bisection, and each cell's
//! boundary loops are fan-triangulated. Bisection (rather than linear
//! interpolation) matters for grid scenes: two cells restricted to a shared
//! face see fields that differ only by a positive factor, so their sign
//! patterns agree and bisection lands both on bitwise the same boundary
//! vertices.
//!
//! Isolated singular points of a patch (zero-measure zero-set components)
//! show up as vanishingly small triangle clusters; [`polygonize`] drops
//! connected components with diameter below two lattice cells.
//!
//! Subcells are processed independently in scan order, so the assembled
//! mesh is deterministic.

use crate::cell::{bisect_on_segment, classify_cell, corner_offset, LOCAL_EDGES};
use crate::field::Field;
use crate::geom::{Aabb, Axis, Point3};
use std::collections::HashMap;
use std::io::{self, BufRead, Write};

const MIN_TRIANGLE_AREA: f64 = 1e-14;

/// Indexed triangle mesh.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[u32; 3]>,
}

impl Mesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Checks index ranges and the no-degenerate-triangle invariant.
    pub fn validate(&self) -> Result<(), String> {
        let nv = self.vertices.len() as u32;
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(format!("triangle {i} references a missing vertex"));
            }
            let area = triangle_area(
                self.vertices[t[0] as usize],
                self.vertices[t[1] as usize],
                self.vertices[t[2] as usize],
            );
            if area < MIN_TRIANGLE_AREA {
                return Err(format!("triangle {i} is degenerate (area {area:.3e})"));
            }
        }
        Ok(())
    }

    /// Edges used by exactly one triangle, as vertex index pairs.
    pub fn boundary_edges(&self) -> Vec<[u32; 2]> {
        let mut count: HashMap<(u32, u32), usize> = HashMap::new();
        for t in &self.triangles {
            for e in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let key = (e.0.min(e.1), e.0.max(e.1));
                *count.entry(key).or_insert(0) += 1;
            }
        }
        let mut out: Vec<[u32; 2]> = count
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .map(|((a, b), _)| [a, b])
            .collect();
        out.sort_unstable();
        out
    }
}

pub fn triangle_area(a: Point3, b: Point3, c: Point3) -> f64 {
    0.5 * (b - a).cross(c - a).norm()
}

/// Extracts the zero set of `field` inside `bbox` on a `resolution`^3
/// lattice. Every output vertex is a bisected root along a lattice edge.
pub fn polygonize(field: &dyn Field, bbox: &Aabb, resolution: usize) -> Mesh {
    let res = resolution.max(2);
    let n = res + 1;

    // Lattice coordinates per axis, exact at both box faces.
    let coords: [Vec<f64>; 3] = [
        axis_coords(bbox.min.x, bbox.max.x, res),
        axis_coords(bbox.min.y, bbox.max.y, res),
        axis_coords(bbox.min.z, bbox.max.z, res),
    ];
    let lattice = |i: usize, j: usize, k: usize| Point3::new(coords[0][i], coords[1][j], coords[2][k]);

    let perturb = 1e-10 * bbox.max_extent() / res as f64;
    let mut values = vec![0.0f64; n * n * n];
    let vindex = |i: usize, j: usize, k: usize| i + n * (j + n * k);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let v = field.value(lattice(i, j, k));
                values[vindex(i, j, k)] = if v == 0.0 { perturb } else { v };
            }
        }
    }

    let mut mesh = Mesh::default();
    // None marks a singular root: the zero set of the field has measure
    // zero there (|gradient| < 1e-9), so any loop through it is an
    // artifact, not surface.
    let mut edge_vertex: HashMap<(usize, usize, usize, usize), Option<u32>> = HashMap::new();
    let mut vertex_for_edge = |base: [usize; 3], axis: Axis, mesh: &mut Mesh| -> Option<u32> {
        let key = (base[0], base[1], base[2], axis.index());
        if let Some(&v) = edge_vertex.get(&key) {
            return v;
        }
        let mut other = base;
        other[axis.index()] += 1;
        let p0 = lattice(base[0], base[1], base[2]);
        let p1 = lattice(other[0], other[1], other[2]);
        let neg0 = values[vindex(base[0], base[1], base[2])] < 0.0;
        let (_, root) = bisect_on_segment(field, p0, p1, neg0);
        let id = if field.gradient(root).norm_sq() < 1e-18 {
            None
        } else {
            let id = mesh.vertices.len() as u32;
            mesh.vertices.push(root);
            Some(id)
        };
        edge_vertex.insert(key, id);
        id
    };

    for ck in 0..res {
        for cj in 0..res {
            for ci in 0..res {
                let mut negative = [false; 8];
                for (c, flag) in negative.iter_mut().enumerate() {
                    let [dx, dy, dz] = corner_offset(c);
                    *flag = values[vindex(ci + dx, cj + dy, ck + dz)] < 0.0;
                }
                let config = classify_cell(negative);
                for steps in &config.loops {
                    let ring: Option<Vec<u32>> = steps
                        .iter()
                        .map(|s| {
                            let (low, axis) = LOCAL_EDGES[s.edge];
                            let off = corner_offset(low);
                            vertex_for_edge([ci + off[0], cj + off[1], ck + off[2]], axis, &mut mesh)
                        })
                        .collect();
                    let Some(ring) = ring else { continue };
                    for t in 1..ring.len() - 1 {
                        let tri = [ring[0], ring[t], ring[t + 1]];
                        let area = triangle_area(
                            mesh.vertices[tri[0] as usize],
                            mesh.vertices[tri[1] as usize],
                            mesh.vertices[tri[2] as usize],
                        );
                        if area >= MIN_TRIANGLE_AREA {
                            mesh.triangles.push(tri);
                        }
                    }
                }
            }
        }
    }

    let mesh = drop_unused_vertices(&mesh);
    drop_small_components(&mesh, 2.0 * bbox.max_extent() / res as f64)
}

fn axis_coords(min: f64, max: f64, res: usize) -> Vec<f64> {
    (0..=res)
        .map(|i| {
            if i == 0 {
                min
            } else if i == res {
                max
            } else {
                min + (i as f64 / res as f64) * (max - min)
            }
        })
        .collect()
}

fn drop_unused_vertices(mesh: &Mesh) -> Mesh {
    let mut used = vec![false; mesh.vertices.len()];
    for t in &mesh.triangles {
        for &v in t {
            used[v as usize] = true;
        }
    }
    let mut remap = vec![0u32; mesh.vertices.len()];
    let mut out = Mesh::default();
    for (i, v) in mesh.vertices.iter().enumerate() {
        if used[i] {
            remap[i] = out.vertices.len() as u32;
            out.vertices.push(*v);
        }
    }
    out.triangles = mesh
        .triangles
        .iter()
        .map(|t| [remap[t[0] as usize], remap[t[1] as usize], remap[t[2] as usize]])
        .collect();
    out
}

/// Splits a mesh into connected components (vertices shared by triangles),
/// ordered by smallest contained vertex index.
pub fn split_components(mesh: &Mesh) -> Vec<Mesh> {
    let nv = mesh.vertices.len();
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for t in &mesh.triangles {
        let a = find(&mut parent, t[0] as usize);
        let b = find(&mut parent, t[1] as usize);
        let c = find(&mut parent, t[2] as usize);
        parent[b] = a;
        parent[c] = a;
    }
    let mut groups: HashMap<usize, usize> = HashMap::new();
    let mut order: Vec<usize> = Vec::new();
    for v in 0..nv {
        let root = find(&mut parent, v);
        groups.entry(root).or_insert_with(|| {
            order.push(root);
            order.len() - 1
        });
    }
    let mut out: Vec<Mesh> = vec![Mesh::default(); order.len()];
    let mut remap: Vec<Option<u32>> = vec![None; nv];
    for v in 0..nv {
        let g = groups[&find(&mut parent, v)];
        let local = out[g].vertices.len() as u32;
        out[g].vertices.push(mesh.vertices[v]);
        remap[v] = Some(local);
    }
    for t in &mesh.triangles {
        let g = groups[&find(&mut parent, t[0] as usize)];
        out[g].triangles.push([
            remap[t[0] as usize].unwrap(),
            remap[t[1] as usize].unwrap(),
            remap[t[2] as usize].unwrap(),
        ]);
    }
    out.retain(|m| !m.triangles.is_empty());
    out
}

/// Concatenates meshes, offsetting indices.
pub fn merge_meshes(parts: &[Mesh]) -> Mesh {
    let mut out = Mesh::default();
    for part in parts {
        let offset = out.vertices.len() as u32;
        out.vertices.extend_from_slice(&part.vertices);
        out.triangles
            .extend(part.triangles.iter().map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]));
    }
    out
}

fn component_diameter(mesh: &Mesh) -> f64 {
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in &mesh.vertices {
        lo = Point3::new(lo.x.min(v.x), lo.y.min(v.y), lo.z.min(v.z));
        hi = Point3::new(hi.x.max(v.x), hi.y.max(v.y), hi.z.max(v.z));
    }
    if mesh.vertices.is_empty() {
        0.0
    } else {
        (hi - lo).norm()
    }
}

fn drop_small_components(mesh: &Mesh, min_diameter: f64) -> Mesh {
    let parts = split_components(mesh);
    let kept: Vec<Mesh> = parts
        .into_iter()
        .filter(|m| component_diameter(m) >= min_diameter)
        .collect();
    merge_meshes(&kept)
}

/// Keeps the components for which `keep` returns true.
pub fn filter_components(mesh: &Mesh, mut keep: impl FnMut(&Mesh) -> bool) -> Mesh {
    let parts = split_components(mesh);
    let kept: Vec<Mesh> = parts.into_iter().filter(|m| keep(m)).collect();
    merge_meshes(&kept)
}

/// Newton projection outcome.
#[derive(Debug, Clone)]
pub struct Projection {
    pub mesh: Mesh,
    /// Vertices that did not reach |field| <= 1e-9, typically because the
    /// gradient fell below 1e-9.
    pub unconverged: Vec<u32>,
}

/// Moves every vertex toward the zero set with damped Newton steps
/// `v <- v - field(v) grad(v) / |grad(v)|^2`. A vertex whose gradient drops
/// below 1e-9 in magnitude is flagged and left where it is.
pub fn project_to_surface(mesh: &Mesh, field: &dyn Field, iterations: usize) -> Projection {
    let mut out = mesh.clone();
    let mut unconverged = Vec::new();
    for (vi, v) in out.vertices.iter_mut().enumerate() {
        let mut p = *v;
        let mut flagged = false;
        for _ in 0..iterations {
            let f = field.value(p);
            let g = field.gradient(p);
            let g2 = g.norm_sq();
            if g2 < 1e-18 {
                flagged = true;
                break;
            }
            if f.abs() <= 1e-9 {
                break;
            }
            let full = g * (f / g2);
            let mut scale = 1.0;
            let mut next = p - full;
            for _ in 0..4 {
                if field.value(next).abs() <= f.abs() {
                    break;
                }
                scale *= 0.5;
                next = p - full * scale;
            }
            p = next;
        }
        if !flagged && field.value(p).abs() > 1e-9 {
            flagged = true;
        }
        if flagged {
            unconverged.push(vi as u32);
        } else {
            *v = p;
        }
    }
    Projection { mesh: out, unconverged }
}

/// Writes Wavefront OBJ: one comment header, "v x y z" lines with 17
/// significant digits, then 1-based "f i j k" lines.
pub fn export_obj(mesh: &Mesh, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "# {} vertices, {} triangles", mesh.vertices.len(), mesh.triangles.len())?;
    for v in &mesh.vertices {
        writeln!(w, "v {:.16e} {:.16e} {:.16e}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

pub fn write_obj_file(mesh: &Mesh, path: &std::path::Path) -> io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = io::BufWriter::new(file);
    export_obj(mesh, &mut w)
}

/// Parses the OBJ subset written by [`export_obj`]; comments and unknown
/// line types are ignored.
pub fn import_obj(r: impl BufRead) -> io::Result<Mesh> {
    let mut mesh = Mesh::default();
    for line in r.lines() {
        let line = line?;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut c = [0.0f64; 3];
                for slot in &mut c {
                    *slot = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "bad vertex line"))?;
                }
                mesh.vertices.push(Point3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut t = [0u32; 3];
                for slot in &mut t {
                    let idx: u32 = parts
                        .next()
                        .and_then(|s| s.split('/').next())
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "bad face line"))?;
                    *slot = idx - 1;
                }
                mesh.triangles.push(t);
            }
            _ => {}
        }
    }
    Ok(mesh)
}
