//! Patch evaluators checked against an independent symbolic-expansion
//! oracle, plus the differential and degree properties of both patch
//! families.

mod common;

use common::*;
use ipatch::field::{forward_diff_residual, Field, FieldRef, Monomial, PolyField};
use ipatch::geom::{Point3, Vec3};
use ipatch::patch::{CornerPatch, SideIPatch};
use ipatch::Plane;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn reference_patch() -> (CornerPatch, Vec<Poly3>, Vec<Poly3>) {
    let s_field: FieldRef = Arc::new(
        PolyField::new(vec![
            Monomial::new(1.0, [1, 0, 0]),
            Monomial::new(1.0, [0, 1, 0]),
            Monomial::new(1.0, [0, 0, 1]),
            Monomial::new(-0.5, [0, 0, 0]),
        ])
        .unwrap(),
    );
    let bounds: Vec<FieldRef> = vec![
        Arc::new(Plane::axis_plane(ipatch::Axis::X, 0.0)),
        Arc::new(Plane::axis_plane(ipatch::Axis::Y, 0.0)),
        Arc::new(Plane::axis_plane(ipatch::Axis::Z, 0.0)),
    ];
    let patch = CornerPatch::new(
        bounds,
        vec![s_field.clone(), s_field.clone(), s_field],
        vec![0.0; 3],
        0.0,
    )
    .unwrap();
    let bound_polys = vec![
        Poly3::linear(Vec3::new(1.0, 0.0, 0.0), 0.0),
        Poly3::linear(Vec3::new(0.0, 1.0, 0.0), 0.0),
        Poly3::linear(Vec3::new(0.0, 0.0, 1.0), 0.0),
    ];
    let s = Poly3::linear(Vec3::new(1.0, 1.0, 1.0), -0.5);
    (patch, bound_polys, vec![s.clone(), s.clone(), s])
}

#[test]
fn oracle_confirms_reference_values() {
    let (_, bounds, corners) = reference_patch();
    let expanded = oracle_corner_patch(&bounds, &corners, &[0.0; 3], 0.0);
    // The expansion collapses to (x + y + z - 0.5)(x^2 + y^2 + z^2).
    let p = Point3::new(0.5, 0.25, 0.25);
    assert_eq!(expanded.eval(p), 0.1875);
    assert_eq!(expanded.eval(Point3::new(0.0, 0.0, 0.5)), 0.0);
    let with_interior = oracle_corner_patch(&bounds, &corners, &[0.0; 3], 1.0);
    assert_eq!(with_interior.eval(p), 0.1884765625);
}

#[test]
fn corner_patch_matches_oracle_on_random_patches() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for n in 3..=6 {
        let rp = random_patch(&mut rng, n);
        let (bounds, corners) = patch_polys(&rp);
        let expanded = oracle_corner_patch(
            &bounds,
            &corners,
            rp.patch.side_weights(),
            rp.patch.interior_weight(),
        );
        for _ in 0..100 {
            let p = random_point_in(&mut rng, 0.0, 1.0);
            let got = rp.patch.value(p);
            let want = expanded.eval(p);
            assert!(
                rel_err(got, want) <= 1e-9,
                "n={n} at {p:?}: impl {got} vs oracle {want}"
            );
        }
    }
}

#[test]
fn side_ipatch_matches_oracle_including_cubic_exponent() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let rp = random_patch(&mut rng, 4);
    let (bounds, _) = patch_polys(&rp);
    let ribbon_fields: Vec<FieldRef> = rp
        .corner_planes
        .iter()
        .map(|&p| Arc::new(p) as FieldRef)
        .collect();
    let ribbon_polys: Vec<Poly3> = rp.corner_planes.iter().map(Poly3::from_plane).collect();
    for k in [2u32, 3] {
        let weights = vec![1.0, -0.5, 2.0, 0.25];
        let side = SideIPatch::new(
            ribbon_fields.clone(),
            rp.bound_planes.iter().map(|&p| Arc::new(p) as FieldRef).collect(),
            weights.clone(),
            0.7,
            k,
        )
        .unwrap();
        let expanded = oracle_side_ipatch(&ribbon_polys, &bounds, &weights, 0.7, k);
        for _ in 0..60 {
            let p = random_point_in(&mut rng, 0.0, 1.0);
            assert!(
                rel_err(side.value(p), expanded.eval(p)) <= 1e-9,
                "k={k} at {p:?}"
            );
        }
    }
}

#[test]
fn boundary_side_field_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    for n in 3..=5 {
        let rp = random_patch(&mut rng, n);
        let (bounds, corners) = patch_polys(&rp);
        for i in 0..n {
            let side = rp.patch.boundary_side_field(i + 1).unwrap();
            let expanded = oracle_boundary_side(&bounds, &corners, rp.patch.side_weights(), i);
            for _ in 0..40 {
                let p = random_point_in(&mut rng, 0.0, 1.0);
                assert!(rel_err(side.value(p), expanded.eval(p)) <= 1e-9);
            }
        }
    }
}

#[test]
fn ribbon_expansion_matches_substitution_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    for n in 3..=6 {
        let rp = random_patch(&mut rng, n);
        let (bounds, corners) = patch_polys(&rp);
        let expansion = rp.patch.ribbon_ipatch();
        let expanded = oracle_ribbon_expansion(
            &bounds,
            &corners,
            rp.patch.side_weights(),
            rp.patch.interior_weight(),
        );
        for _ in 0..100 {
            let p = random_point_in(&mut rng, 0.0, 1.0);
            assert!(
                rel_err(expansion.value(p), expanded.eval(p)) <= 1e-9,
                "n={n} at {p:?}"
            );
        }
    }
}

/// On a bound's zero set the patch factors into the boundary side surface
/// times the squared product of the remaining bounds.
#[test]
fn boundary_factorization_on_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(113);
    for n in 3..=6 {
        let rp = random_patch(&mut rng, n);
        for i in 0..n {
            let side = rp.patch.boundary_side_field(i + 1).unwrap();
            let mut checked = 0;
            while checked < 100 {
                // Project a random point onto bound i.
                let q = random_point_in(&mut rng, 0.0, 1.0);
                let b = &rp.bound_planes[i];
                let p = q - b.gradient(q) * b.value(q);
                let mut cofactor = 1.0;
                for (t, bp) in rp.bound_planes.iter().enumerate() {
                    if t != i && t != (i + 1) % n && t != (i + n - 1) % n {
                        let v = bp.value(p);
                        cofactor *= v * v;
                    }
                }
                if cofactor.abs() < 1e-6 {
                    continue;
                }
                checked += 1;
                let lhs = rp.patch.value(p);
                let rhs = cofactor * side.value(p);
                assert!(
                    rel_err(lhs, rhs) <= 1e-9,
                    "n={n} side {i}: {lhs} vs {rhs}"
                );
            }
        }
    }
}

/// Corner interpolation: the patch vanishes at corner points and its
/// gradient is parallel to the corner interpolant gradient.
#[test]
fn corner_interpolation_on_random_patches() {
    let mut rng = ChaCha8Rng::seed_from_u64(127);
    for n in 3..=6 {
        let rp = random_patch(&mut rng, n);
        for (i, &p) in rp.corner_points.iter().enumerate() {
            assert!(
                rp.patch.value(p).abs() <= 1e-12,
                "n={n} corner {i}: value {}",
                rp.patch.value(p)
            );
            let r = rp.patch.corner_gradient_ratio(i + 1, p).unwrap();
            assert!(!r.degenerate);
            assert!(r.angle <= 1e-6, "n={n} corner {i}: angle {}", r.angle);
        }
    }
}

/// The ribbon expansion's gradient collapses at corners; the corner
/// patch's does not.
#[test]
fn gradient_contrast_at_corners() {
    let mut rng = ChaCha8Rng::seed_from_u64(131);
    for n in 3..=6 {
        let rp = random_patch(&mut rng, n);
        let expansion = rp.patch.ribbon_ipatch();
        for (i, &p) in rp.corner_points.iter().enumerate() {
            let j = (i + 1) % n;
            let mut cofactor = 1.0;
            for (t, bp) in rp.bound_planes.iter().enumerate() {
                if t != i && t != j {
                    let v = bp.value(p);
                    cofactor *= v * v;
                }
            }
            let gs = rp.corner_planes[i].gradient(p).norm();
            let expansion_grad = expansion.gradient(p).norm();
            let patch_grad = rp.patch.gradient(p).norm();
            assert!(
                expansion_grad <= 1e-9,
                "n={n} corner {i}: expansion gradient {expansion_grad}"
            );
            assert!(
                patch_grad >= 1e-6 * cofactor * gs,
                "n={n} corner {i}: patch gradient {patch_grad} vs floor {}",
                1e-6 * cofactor * gs
            );
        }
    }
}

/// With plane constituents the corner patch restricted to any line is
/// annihilated by a forward difference of order 2n + 1; the ribbon
/// expansion needs order 2n + 3 and survives order 2n + 1.
#[test]
fn degree_bounds_by_divided_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(137);
    for n in 3..=6 {
        let rp = random_patch(&mut rng, n);
        let expansion = rp.patch.ribbon_ipatch();
        let mut expansion_detected = false;
        for _ in 0..100 {
            let origin = random_point_in(&mut rng, 0.0, 1.0);
            let dir = random_unit(&mut rng);
            let r_patch = forward_diff_residual(&rp.patch, origin, dir, 2 * n + 1, 1.0);
            assert!(r_patch <= 1e-6, "n={n}: corner patch order {} residual {r_patch}", 2 * n + 1);
            let r_exp = forward_diff_residual(&expansion, origin, dir, 2 * n + 3, 1.0);
            assert!(r_exp <= 1e-6, "n={n}: expansion order {} residual {r_exp}", 2 * n + 3);
            // Wider span makes the two extra degrees visible.
            let r_exp_low = forward_diff_residual(&expansion, origin, dir, 2 * n + 1, 4.0);
            expansion_detected |= r_exp_low > 1e-6;
        }
        assert!(
            expansion_detected,
            "n={n}: expansion should not be annihilated at order {}",
            2 * n + 1
        );
    }
}

/// Oracle degrees confirm the same bounds symbolically.
#[test]
fn oracle_degrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(139);
    for n in 3..=6 {
        let rp = random_patch(&mut rng, n);
        let (bounds, corners) = patch_polys(&rp);
        let patch_poly = oracle_corner_patch(
            &bounds,
            &corners,
            rp.patch.side_weights(),
            rp.patch.interior_weight(),
        );
        let expansion_poly = oracle_ribbon_expansion(
            &bounds,
            &corners,
            rp.patch.side_weights(),
            rp.patch.interior_weight(),
        );
        assert_eq!(patch_poly.degree(), 2 * n as u32);
        assert_eq!(expansion_poly.degree(), 2 * n as u32 + 2);
    }
}

/// Gradients of both patch families agree with central differences away
/// from constituent zeros.
#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(149);
    for n in [3usize, 5] {
        let rp = random_patch(&mut rng, n);
        let expansion = rp.patch.ribbon_ipatch();
        for _ in 0..100 {
            let p = random_point_in(&mut rng, 0.0, 1.0);
            for field in [&rp.patch as &dyn Field, &expansion as &dyn Field] {
                let g = field.gradient(p);
                let fd = ipatch::fd_gradient(field, p, 1e-5);
                let scale = g.norm().max(1.0);
                assert!(
                    (g - fd).norm() <= 1e-6 * scale,
                    "n={n} at {p:?}: {g:?} vs {fd:?}"
                );
            }
        }
    }
}
