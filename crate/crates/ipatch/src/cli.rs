//! Command-line front end: scenes in, solved scenes, meshes and
//! verification reports out.
//!
//! Exit codes: 0 success or all checks PASS, 1 any check FAIL, 2 malformed
//! scene or unreadable input, 3 bad argument syntax, 4 solver degeneracy,
//! 5 grid degeneracy. Every command is deterministic: identical inputs
//! produce byte-identical outputs.

use crate::cell::{
    build_complex, check_continuity_loops, CellError, ContinuityReport, LoopPatch, SharedFace,
};
use crate::field::{forward_diff_residual, Field, Plane};
use crate::geom::{Aabb, Axis, Point3, Vec3};
use crate::mesh::{
    filter_components, merge_meshes, polygonize, project_to_surface, write_obj_file, Mesh,
};
use crate::scene::{
    cell_patch_descs, parse_scene, to_json_string, FieldDesc, MonomialDesc, PatchDesc, PatchScene,
    Scene, SceneError,
};
use crate::solver::{fit_weights_lsq, solve_targets, InterpolationSpec, SolveError};
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Scene(String),
    #[error("{0}")]
    Args(String),
    #[error("{0}")]
    Solve(#[from] SolveError),
    #[error("{0}")]
    Grid(#[from] CellError),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Scene(_) => 2,
            CliError::Args(_) => 3,
            CliError::Solve(_) => 4,
            CliError::Grid(_) => 5,
        }
    }
}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        CliError::Scene(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "ipatch", about = "Implicit corner-patch toolkit", version)]
pub struct Cli {
    /// Scene file (patch list or grid scene)
    #[arg(long, global = true)]
    pub scene: Option<PathBuf>,

    /// Output path; standard output when omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Evaluate one patch of the scene at a point
    Eval {
        /// Patch index within the scene
        #[arg(long, default_value_t = 0)]
        patch: usize,
        /// Point as "x,y,z"
        #[arg(long)]
        point: String,
        /// Also print the gradient
        #[arg(long)]
        gradient: bool,
    },
    /// Solve side and interior weights from interpolation targets
    Solve {
        #[arg(long, default_value_t = 0)]
        patch: usize,
        /// Targets JSON: {"boundary_targets": [{"side": 1, "point": [x,y,z]}], "interior_target": [x,y,z]}
        #[arg(long)]
        targets: PathBuf,
    },
    /// Fit all weights to a point cloud by linear least squares
    Fit {
        #[arg(long, default_value_t = 0)]
        patch: usize,
        /// Whitespace-separated x y z samples, one point per line
        #[arg(long)]
        samples: PathBuf,
    },
    /// Build cell patches from a grid scene
    Grid,
    /// Extract a triangle mesh of the scene's patches as OBJ
    Mesh {
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long = "project-iters", default_value_t = 8)]
        project_iters: usize,
    },
    /// Verify corner interpolation, cross-cell continuity and degree bounds
    Check {
        /// Corner interpolation checks
        #[arg(long)]
        corners: bool,
        /// Cross-cell continuity checks
        #[arg(long)]
        continuity: bool,
        /// Polynomial degree bound checks
        #[arg(long)]
        degree: bool,
    },
    /// Emit a built-in demo scene
    Demo {
        #[arg(value_enum)]
        name: DemoName,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DemoName {
    /// 3-sided patch near a cube corner
    Fig1a,
    /// 6-sided patch crossing all six cube faces
    Fig1b,
    /// two disjoint components in one cell
    Fig1c,
    /// three patches sharing corners, different coefficients
    Fig2,
}

/// Runs a parsed command line; `Ok` carries the exit code (0 or 1).
pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Eval { patch, ref point, gradient } => {
            cmd_eval(require_scene(&cli)?, patch, point, gradient)
        }
        Cmd::Solve { patch, ref targets } => {
            cmd_solve(require_scene(&cli)?, patch, targets, &cli.out)
        }
        Cmd::Fit { patch, ref samples } => cmd_fit(require_scene(&cli)?, patch, samples, &cli.out),
        Cmd::Grid => cmd_grid(require_scene(&cli)?, &cli.out),
        Cmd::Mesh { resolution, project_iters } => {
            cmd_mesh(require_scene(&cli)?, resolution, project_iters, &cli.out)
        }
        Cmd::Check { corners, continuity, degree } => {
            cmd_check(require_scene(&cli)?, corners, continuity, degree)
        }
        Cmd::Demo { name } => cmd_demo(name, &cli.out),
    }
}

fn require_scene(cli: &Cli) -> Result<&Path, CliError> {
    cli.scene
        .as_deref()
        .ok_or_else(|| CliError::Args("--scene is required for this command".into()))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Scene(format!("cannot read {}: {e}", path.display())))
}

fn load_scene(path: &Path) -> Result<Scene, CliError> {
    Ok(parse_scene(&read_file(path)?)?)
}

/// Any scene as a patch list; grid scenes run the grid pipeline first.
fn scene_as_patches(scene: Scene) -> Result<PatchScene, CliError> {
    match scene {
        Scene::Patches(p) => Ok(p),
        Scene::Grid(g) => {
            let source = g.source.build()?;
            let complex = build_complex(&*source, &g.grid)?;
            let patches = complex
                .cells
                .iter()
                .flat_map(cell_patch_descs)
                .collect();
            Ok(PatchScene { patches })
        }
    }
}

fn select_patch(scene: &PatchScene, index: usize) -> Result<&PatchDesc, CliError> {
    scene
        .patches
        .get(index)
        .ok_or_else(|| CliError::Scene(
            SceneError::PatchOutOfRange(index, scene.patches.len()).to_string(),
        ))
}

fn parse_point(text: &str) -> Result<Point3, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Args(format!(
            "point must be \"x,y,z\", got {text:?}"
        )));
    }
    let mut c = [0.0f64; 3];
    for (slot, part) in c.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| CliError::Args(format!("bad coordinate {part:?} in point {text:?}")))?;
    }
    Ok(Point3::new(c[0], c[1], c[2]))
}

fn write_text(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Scene(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

fn cmd_eval(scene_path: &Path, index: usize, point: &str, gradient: bool) -> Result<i32, CliError> {
    let scene = scene_as_patches(load_scene(scene_path)?)?;
    let desc = select_patch(&scene, index)?;
    let (patch, _) = desc.build(index)?;
    let p = parse_point(point)?;
    println!("{}", patch.value(p));
    if gradient {
        let g = patch.gradient(p);
        println!("{} {} {}", g.x, g.y, g.z);
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// solve / fit
// ---------------------------------------------------------------------------

fn cmd_solve(
    scene_path: &Path,
    index: usize,
    targets_path: &Path,
    out: &Option<PathBuf>,
) -> Result<i32, CliError> {
    let mut scene = match load_scene(scene_path)? {
        Scene::Patches(p) => p,
        Scene::Grid(_) => {
            return Err(CliError::Scene(
                "solve needs a patch scene, not a grid scene".into(),
            ))
        }
    };
    let spec: InterpolationSpec = serde_json::from_str(&read_file(targets_path)?)
        .map_err(|e| CliError::Scene(format!("targets JSON: {e}")))?;
    let desc = select_patch(&scene, index)?;
    let (patch, _) = desc.build(index)?;
    let solved = solve_targets(&patch, &spec)?;
    for (label, residual) in &solved.residuals {
        let w = match label.strip_prefix("side ") {
            Some(s) => solved.side_weights[s.parse::<usize>().unwrap() - 1],
            None => solved.interior_weight,
        };
        eprintln!("{label}: w = {w} residual = {residual:.3e}");
    }
    let desc = &mut scene.patches[index];
    desc.side_weights = solved.side_weights;
    desc.interior_weight = solved.interior_weight;
    write_text(out, &to_json_string(&scene))?;
    Ok(0)
}

fn parse_samples(text: &str) -> Result<Vec<Point3>, CliError> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Args(format!("bad sample on line {}", ln + 1)))?;
        if nums.len() != 3 {
            return Err(CliError::Args(format!(
                "sample on line {} has {} numbers, expected 3",
                ln + 1,
                nums.len()
            )));
        }
        out.push(Point3::new(nums[0], nums[1], nums[2]));
    }
    Ok(out)
}

fn cmd_fit(
    scene_path: &Path,
    index: usize,
    samples_path: &Path,
    out: &Option<PathBuf>,
) -> Result<i32, CliError> {
    let mut scene = match load_scene(scene_path)? {
        Scene::Patches(p) => p,
        Scene::Grid(_) => {
            return Err(CliError::Scene(
                "fit needs a patch scene, not a grid scene".into(),
            ))
        }
    };
    let samples = parse_samples(&read_file(samples_path)?)?;
    let desc = select_patch(&scene, index)?;
    let (patch, _) = desc.build(index)?;
    let fit = fit_weights_lsq(&patch, &samples)?;
    eprintln!(
        "fit: {} samples, rms residual = {:.6e}",
        samples.len(),
        fit.rms_residual
    );
    let desc = &mut scene.patches[index];
    desc.side_weights = fit.side_weights;
    desc.interior_weight = fit.interior_weight;
    write_text(out, &to_json_string(&scene))?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// grid
// ---------------------------------------------------------------------------

fn cmd_grid(scene_path: &Path, out: &Option<PathBuf>) -> Result<i32, CliError> {
    let scene = load_scene(scene_path)?;
    let Scene::Grid(_) = &scene else {
        return Err(CliError::Scene("grid needs a grid scene".into()));
    };
    let patches = scene_as_patches(scene)?;
    write_text(out, &to_json_string(&patches))?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// mesh
// ---------------------------------------------------------------------------

/// Corner points of a patch with affine constituents: intersection of
/// B(i), B(i+1) and S(i,i+1) for each i, refined once.
fn affine_corner_points(desc: &PatchDesc) -> Vec<Point3> {
    let mut out = Vec::new();
    let n = desc.n;
    for i in 0..n {
        let j = (i + 1) % n;
        let (Some(bi), Some(bj), Some(si)) = (
            desc.bounds[i].affine(),
            desc.bounds[j].affine(),
            desc.corners[i].affine(),
        ) else {
            continue;
        };
        let m = Matrix3::new(
            bi.0.x, bi.0.y, bi.0.z,
            bj.0.x, bj.0.y, bj.0.z,
            si.0.x, si.0.y, si.0.z,
        );
        let rhs = Vector3::new(-bi.1, -bj.1, -si.1);
        let Some(lu) = m.lu().solve(&rhs) else { continue };
        let mut p = Point3::new(lu[0], lu[1], lu[2]);
        // One refinement pass keeps the residual at rounding level.
        let r = Vector3::new(
            bi.0.x * p.x + bi.0.y * p.y + bi.0.z * p.z + bi.1,
            bj.0.x * p.x + bj.0.y * p.y + bj.0.z * p.z + bj.1,
            si.0.x * p.x + si.0.y * p.y + si.0.z * p.z + si.1,
        );
        if let Some(d) = m.lu().solve(&(-r)) {
            p = Point3::new(p.x + d[0], p.y + d[1], p.z + d[2]);
        }
        out.push(p);
    }
    out
}

fn cmd_mesh(
    scene_path: &Path,
    resolution: usize,
    project_iters: usize,
    out: &Option<PathBuf>,
) -> Result<i32, CliError> {
    if resolution < 2 {
        return Err(CliError::Args("--resolution must be at least 2".into()));
    }
    let scene = scene_as_patches(load_scene(scene_path)?)?;

    // Cells hosting several patches need per-loop component filtering so
    // one loop's mesh does not pick up another loop's sheet.
    let mut cell_count: std::collections::BTreeMap<[usize; 3], usize> =
        std::collections::BTreeMap::new();
    for desc in &scene.patches {
        if let Some(ci) = desc.cell_index {
            *cell_count.entry(ci).or_insert(0) += 1;
        }
    }

    let mut parts: Vec<Mesh> = Vec::new();
    let mut max_abs = 0.0f64;
    let mut unconverged = 0usize;
    for (i, desc) in scene.patches.iter().enumerate() {
        let (patch, bbox) = desc.build(i)?;
        let mut mesh = polygonize(&patch, &bbox, resolution);
        let multi = desc
            .cell_index
            .map(|ci| cell_count[&ci] > 1)
            .unwrap_or(false);
        if multi {
            let anchors = affine_corner_points(desc);
            let near = 2.0 * bbox.max_extent() / resolution as f64;
            mesh = filter_components(&mesh, |part| {
                part.vertices.iter().any(|v| {
                    anchors.iter().any(|a| v.distance(*a) <= near)
                })
            });
        }
        let proj = project_to_surface(&mesh, &patch, project_iters);
        unconverged += proj.unconverged.len();
        let flagged: std::collections::HashSet<u32> = proj.unconverged.iter().copied().collect();
        for (vi, v) in proj.mesh.vertices.iter().enumerate() {
            if !flagged.contains(&(vi as u32)) {
                max_abs = max_abs.max(patch.value(*v).abs());
            }
        }
        parts.push(proj.mesh);
    }
    let mesh = merge_meshes(&parts);

    let summary = format!(
        "{} triangles, {} vertices, max |field| = {:.3e}, {} unconverged",
        mesh.triangles.len(),
        mesh.vertices.len(),
        max_abs,
        unconverged
    );
    match out {
        Some(path) => {
            write_obj_file(&mesh, path)
                .map_err(|e| CliError::Scene(format!("cannot write {}: {e}", path.display())))?;
            println!("{summary}");
        }
        None => {
            let mut buf = Vec::new();
            crate::mesh::export_obj(&mesh, &mut buf)
                .map_err(|e| CliError::Scene(e.to_string()))?;
            print!("{}", String::from_utf8_lossy(&buf));
            eprintln!("{summary}");
        }
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

struct CheckOutput {
    lines: Vec<String>,
    all_pass: bool,
}

impl CheckOutput {
    fn new() -> Self {
        Self { lines: Vec::new(), all_pass: true }
    }

    fn record(&mut self, line: String, pass: bool) {
        self.lines.push(line);
        self.all_pass &= pass;
    }

    fn note(&mut self, line: String) {
        self.lines.push(line);
    }
}

fn check_corners(scene: &PatchScene, out: &mut CheckOutput) -> Result<(), CliError> {
    for (i, desc) in scene.patches.iter().enumerate() {
        let (patch, bbox) = desc.build(i)?;
        let corners = affine_corner_points(desc);
        if corners.len() != desc.n {
            out.note(format!(
                "corners patch {i}: skipped ({} of {} corner points solvable)",
                corners.len(),
                desc.n
            ));
            continue;
        }
        let mut max_value = 0.0f64;
        let mut max_angle = 0.0f64;
        let mut checked = 0usize;
        let mut skipped = 0usize;
        for (ci, &p) in corners.iter().enumerate() {
            if !bbox.contains(p, bbox.max_extent()) {
                skipped += 1;
                continue;
            }
            match patch.corner_gradient_ratio(ci + 1, p) {
                Ok(r) if !r.degenerate => {
                    max_value = max_value.max(patch.value(p).abs());
                    max_angle = max_angle.max(r.angle);
                    checked += 1;
                }
                _ => skipped += 1,
            }
        }
        if checked == 0 {
            out.note(format!("corners patch {i}: skipped (no usable corner points)"));
            continue;
        }
        let pass = max_value <= 1e-12 && max_angle <= 1e-6;
        out.record(
            format!(
                "corners patch {i}: {} ({checked} corners, {skipped} skipped, max |value| = {max_value:.3e}, max angle = {max_angle:.3e} rad)",
                if pass { "PASS" } else { "FAIL" }
            ),
            pass,
        );
    }
    Ok(())
}

type RebuiltCell = ([usize; 3], Aabb, Vec<LoopPatch>);

/// Patch descriptors of grid-built scenes regrouped into per-cell loop
/// patches for the continuity checker.
fn rebuild_cells(scene: &PatchScene) -> Result<Vec<RebuiltCell>, CliError> {
    let mut cells: std::collections::BTreeMap<[usize; 3], (Aabb, Vec<LoopPatch>)> =
        std::collections::BTreeMap::new();
    for (i, desc) in scene.patches.iter().enumerate() {
        let (Some(ci), Some(cb)) = (desc.cell_index, desc.cell) else {
            continue;
        };
        let (patch, bbox) = desc.build(i)?;
        let as_planes = |fields: &[FieldDesc]| -> Option<Vec<Plane>> {
            fields
                .iter()
                .map(|f| match f {
                    FieldDesc::Plane(p) => Plane::new(Vec3::from(p.normal), p.offset).ok(),
                    FieldDesc::Poly(_) => None,
                })
                .collect()
        };
        let (Some(bound_planes), Some(corner_planes)) =
            (as_planes(&desc.bounds), as_planes(&desc.corners))
        else {
            continue;
        };
        let entry = cells.entry(ci).or_insert_with(|| (cb.to_aabb(), Vec::new()));
        entry.0 = bbox;
        entry.1.push(LoopPatch {
            bound_planes,
            corner_planes,
            crossings: Vec::new(),
            patch,
        });
    }
    Ok(cells.into_iter().map(|(i, (b, l))| (i, b, l)).collect())
}

fn check_continuity_cmd(scene: &PatchScene, out: &mut CheckOutput) -> Result<(), CliError> {
    let cells = rebuild_cells(scene)?;
    if cells.is_empty() {
        out.note("continuity: skipped (no grid-built cells in scene)".into());
        return Ok(());
    }
    let by_index: std::collections::BTreeMap<[usize; 3], usize> = cells
        .iter()
        .enumerate()
        .map(|(i, (ci, _, _))| (*ci, i))
        .collect();
    let mut pairs = 0usize;
    for (ci, bbox, loops) in &cells {
        for axis in Axis::ALL {
            let mut nb = *ci;
            nb[axis.index()] += 1;
            let Some(&j) = by_index.get(&nb) else { continue };
            let (nci, nbbox, nloops) = &cells[j];
            let (u_axis, v_axis) = axis.others();
            let face = SharedFace {
                axis,
                coord: bbox.max.axis(axis),
                u_axis,
                v_axis,
                u_range: (bbox.min.axis(u_axis), bbox.max.axis(u_axis)),
                v_range: (bbox.min.axis(v_axis), bbox.max.axis(v_axis)),
            };
            debug_assert_eq!(nbbox.min.axis(axis), face.coord);
            pairs += 1;
            for (label, r) in [
                (format!("{ci:?}->{nci:?}"), check_continuity_loops(loops, nloops, &face)),
                (format!("{nci:?}->{ci:?}"), check_continuity_loops(nloops, loops, &face)),
            ] {
                let pass = r.pass();
                let ContinuityReport { points, max_positional, max_angle, vacuous } = r;
                let status = if vacuous {
                    "PASS (vacuous: no crossings on shared face)".to_string()
                } else if pass {
                    format!("PASS ({points} points, max |value| = {max_positional:.3e}, max angle = {max_angle:.3e} rad)")
                } else {
                    format!("FAIL ({points} points, max |value| = {max_positional:.3e}, max angle = {max_angle:.3e} rad)")
                };
                out.record(format!("continuity {label}: {status}"), pass);
            }
        }
    }
    if pairs == 0 {
        out.note("continuity: no adjacent cell pairs (vacuous pass)".into());
    }
    Ok(())
}

/// Structural degree bound of the patch from its constituents' degrees.
fn degree_bound(desc: &PatchDesc) -> u32 {
    let n = desc.n;
    let bd: Vec<u32> = desc.bounds.iter().map(FieldDesc::degree).collect();
    let sd: Vec<u32> = desc.corners.iter().map(FieldDesc::degree).collect();
    let mut best = 0u32;
    for i in 0..n {
        let j = (i + 1) % n;
        let mut d = sd[i];
        for (t, &b) in bd.iter().enumerate() {
            if t != i && t != j {
                d += 2 * b;
            }
        }
        best = best.max(d);
        let mut d = 0;
        for (t, &b) in bd.iter().enumerate() {
            if t != i {
                d += 2 * b;
            }
        }
        best = best.max(d);
    }
    best.max(bd.iter().map(|&b| 2 * b).sum())
}

fn check_degree(scene: &PatchScene, out: &mut CheckOutput) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD161);
    for (i, desc) in scene.patches.iter().enumerate() {
        let (patch, bbox) = desc.build(i)?;
        let bound = degree_bound(desc);
        let mut max_residual = 0.0f64;
        for _ in 0..100 {
            let origin = bbox.at(rng.gen(), rng.gen(), rng.gen());
            let dir = random_unit(&mut rng);
            let r = forward_diff_residual(
                &patch,
                origin,
                dir,
                bound as usize + 1,
                bbox.max_extent(),
            );
            max_residual = max_residual.max(r);
        }
        let pass = max_residual <= 1e-6;
        out.record(
            format!(
                "degree patch {i}: {} (degree <= {bound}, max residual = {max_residual:.3e} over 100 lines)",
                if pass { "PASS" } else { "FAIL" }
            ),
            pass,
        );
    }
    Ok(())
}

pub(crate) fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn cmd_check(
    scene_path: &Path,
    corners: bool,
    continuity: bool,
    degree: bool,
) -> Result<i32, CliError> {
    let scene = scene_as_patches(load_scene(scene_path)?)?;
    let all = !(corners || continuity || degree);
    let mut out = CheckOutput::new();
    if corners || all {
        check_corners(&scene, &mut out)?;
    }
    if continuity || all {
        check_continuity_cmd(&scene, &mut out)?;
    }
    if degree || all {
        check_degree(&scene, &mut out)?;
    }
    let mut text = String::new();
    for line in &out.lines {
        writeln!(text, "{line}").unwrap();
    }
    writeln!(text, "RESULT: {}", if out.all_pass { "PASS" } else { "FAIL" }).unwrap();
    print!("{text}");
    Ok(if out.all_pass { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// demo
// ---------------------------------------------------------------------------

fn poly_desc(terms: &[(f64, [u32; 3])]) -> FieldDesc {
    FieldDesc::Poly(
        terms
            .iter()
            .map(|&(coef, powers)| MonomialDesc { coef, powers })
            .collect(),
    )
}

/// Quadric |p - c|^2 - r^2 as monomials.
fn sphere_quadric(c: Point3, r: f64) -> Vec<(f64, [u32; 3])> {
    vec![
        (1.0, [2, 0, 0]),
        (1.0, [0, 2, 0]),
        (1.0, [0, 0, 2]),
        (-2.0 * c.x, [1, 0, 0]),
        (-2.0 * c.y, [0, 1, 0]),
        (-2.0 * c.z, [0, 0, 1]),
        (c.x * c.x + c.y * c.y + c.z * c.z - r * r, [0, 0, 0]),
    ]
}

/// Product of two monomial lists, coefficients merged per exponent triple.
fn poly_mul(a: &[(f64, [u32; 3])], b: &[(f64, [u32; 3])]) -> Vec<(f64, [u32; 3])> {
    let mut acc: std::collections::BTreeMap<[u32; 3], f64> = std::collections::BTreeMap::new();
    for &(ca, pa) in a {
        for &(cb, pb) in b {
            let key = [pa[0] + pb[0], pa[1] + pb[1], pa[2] + pb[2]];
            *acc.entry(key).or_insert(0.0) += ca * cb;
        }
    }
    acc.into_iter()
        .filter(|&(_, c)| c != 0.0)
        .map(|(p, c)| (c, p))
        .collect()
}

fn unit_grid_scene(source: FieldDesc) -> crate::scene::GridScene {
    crate::scene::GridScene {
        grid: crate::cell::GridSpec {
            origin: Point3::ORIGIN,
            spacing: 1.0,
            dims: [1, 1, 1],
        },
        source,
    }
}

fn build_demo_patches(source: FieldDesc) -> Result<PatchScene, CliError> {
    scene_as_patches(Scene::Grid(unit_grid_scene(source)))
}

fn cmd_demo(name: DemoName, out: &Option<PathBuf>) -> Result<i32, CliError> {
    let scene = match name {
        DemoName::Fig1a => {
            // Sphere around one cube corner: a 3-sided patch.
            build_demo_patches(poly_desc(&sphere_quadric(Point3::ORIGIN, 0.75)))?
        }
        DemoName::Fig1b => {
            // Diagonal plane through the cube: a 6-sided patch crossing
            // every face.
            build_demo_patches(poly_desc(&[
                (1.0, [1, 0, 0]),
                (1.0, [0, 1, 0]),
                (1.0, [0, 0, 1]),
                (-1.5, [0, 0, 0]),
            ]))?
        }
        DemoName::Fig1c => {
            // Product of two corner quadrics: negative near two opposite
            // corners, two disjoint 3-sided patches in one cell.
            let a = sphere_quadric(Point3::ORIGIN, 0.75);
            let b = sphere_quadric(Point3::new(1.0, 1.0, 1.0), 0.75);
            build_demo_patches(poly_desc(&poly_mul(&a, &b)))?
        }
        DemoName::Fig2 => {
            // One 6-sided patch, emitted three times with the same corners:
            // as built, with shifted boundaries, with a pulled interior.
            let base = build_demo_patches(poly_desc(&[
                (1.0, [1, 0, 0]),
                (1.0, [0, 1, 0]),
                (1.0, [0, 0, 1]),
                (-1.5, [0, 0, 0]),
            ]))?;
            let mut patches = Vec::new();
            let original = base.patches[0].clone();
            patches.push(original.clone());
            let mut boundaries = original.clone();
            for w in &mut boundaries.side_weights {
                *w += 0.75;
            }
            patches.push(boundaries);
            let mut interior = original;
            interior.interior_weight = -40.0;
            patches.push(interior);
            PatchScene { patches }
        }
    };
    write_text(out, &to_json_string(&scene))?;
    Ok(0)
}
