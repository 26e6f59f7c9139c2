mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use robin_spectra::eig::solve_lowest;
use robin_spectra::fem::{assemble, Order};
use robin_spectra::geometry::SectorGeometry;
use robin_spectra::mesh::{mesh_sector_with, restrict, BoundaryTag, SizeField};
use robin_spectra::sector::*;
use robin_spectra::Error;

fn coarse() -> SectorOptions {
    SectorOptions { levels: 0, ..SectorOptions::default() }
}

#[test]
fn right_angle_ground_state() {
    let s = sector_spectrum(PI / 4.0, 1e-6).unwrap();
    assert_eq!(s.count, 1);
    let e = s.eigenvalues[0];
    assert!((e + 2.0).abs() <= 0.01 * 2.0, "{e}");
    // truncation and discretization both raise the eigenvalue
    assert!(e >= -2.0 - 1e-9);
    assert!(s.truncation_error_estimate[0].abs() < 1e-5);
    assert!(s.eigenvalues.iter().all(|&e| e < ESSENTIAL_THRESHOLD));
}

#[test]
fn one_bound_state_from_sixty_degrees() {
    let s = sector_spectrum_with(PI / 3.0, 1e-6, &coarse()).unwrap();
    assert_eq!(s.count, 1);
    assert!((s.eigenvalues[0] + 4.0 / 3.0).abs() < 0.01 * 4.0 / 3.0);
}

#[test]
fn narrow_sector_has_several_bound_states() {
    let s = sector_spectrum_with(PI / 20.0, 1e-6, &coarse()).unwrap();
    assert!(s.count >= 2, "count {}", s.count);
    assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    assert!(s.eigenvalues[0] >= ground_state(PI / 20.0) - 1e-9);
}

#[test]
fn counts_do_not_grow_with_the_angle() {
    let grid = [PI / 20.0, PI / 12.0, PI / 6.0, PI / 4.0, PI / 3.0, 5.0 * PI / 12.0];
    let counts: Vec<usize> = grid.iter().map(|&a| sector_spectrum_with(a, 1e-6, &coarse()).unwrap().count).collect();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]), "{counts:?}");
    assert_eq!(counts[2..], [1, 1, 1, 1]);
}

#[test]
fn obtuse_sectors_have_no_bound_states() {
    for a in [PI / 2.0, 3.0 * PI / 4.0] {
        let s = sector_spectrum(a, 1e-6).unwrap();
        assert_eq!(s.count, 0);
        assert!(s.eigenvalues.is_empty());
        assert!(s.field().is_err());
    }
    assert!(matches!(sector_spectrum(0.0, 1e-6), Err(Error::InvalidArgument(_))));
    assert!(matches!(sector_spectrum(-0.3, 1e-6), Err(Error::InvalidArgument(_))));
}

#[test]
fn exact_discrete_scaling() {
    let r = scaling_check(PI / 4.0, 7.0).unwrap();
    assert!((r.scaled[0] + 98.0).abs() < 0.01 * 98.0);
    assert!(r.max_relative_deviation <= 1e-12, "{}", r.max_relative_deviation);
    let r = scaling_check(PI / 4.0, 0.5).unwrap();
    assert!((r.scaled[0] - 0.25 * r.unit[0]).abs() <= 1e-12 * r.unit[0].abs());
    let r = scaling_check(PI / 3.0, 1.0).unwrap();
    assert!(r.max_relative_deviation <= 1e-13);
    assert!(scaling_check(PI / 4.0, 0.0).is_err());
}

#[test]
fn square_model_sum() {
    let m = build_model_sum(&common::unit_square(), 1e-6).unwrap();
    assert_eq!(m.n_total, 4);
    assert_eq!(m.clusters.len(), 1);
    assert_eq!(m.clusters[0].multiplicity, 4);
    assert!((m.clusters[0].lambda + 2.0).abs() < 0.01 * 2.0);
    assert_eq!(m.e_max, Some(m.clusters[0].lambda));
    let total: usize = m.clusters.iter().map(|c| c.multiplicity).sum();
    assert_eq!(total, m.n_total);
}

#[test]
fn hexagon_model_sum() {
    let m = build_model_sum(&common::regular(6), 1e-6).unwrap();
    assert_eq!(m.n_total, 6);
    assert_eq!(m.clusters.len(), 1);
    assert_eq!(m.clusters[0].multiplicity, 6);
    assert!((m.clusters[0].lambda + 4.0 / 3.0).abs() < 0.01 * 4.0 / 3.0);
}

#[test]
fn reentrant_corner_contributes_nothing() {
    let poly = common::l_shape();
    let m = build_model_sum(&poly, 1e-6).unwrap();
    assert_eq!(m.n_total, 5);
    assert_eq!(m.per_vertex.len(), 5);
    let reentrant = poly.vertices().iter().position(|v| !v.is_convex).unwrap();
    assert!(!m.per_vertex.contains_key(&reentrant));
    assert!(m.e_max.unwrap() < -1.0);
}

#[test]
fn clustering_is_uncertainty_aware() {
    let entry = |value, vertex| ModelEntry { value, n: 1, vertex, uncertainty: 1e-4 };
    let (c, tol) = form_clusters(&[entry(-2.0, 0), entry(-2.00005, 1), entry(-1.5, 2)]).unwrap();
    assert_eq!(tol, 1e-3);
    assert_eq!(c.len(), 2);
    assert_eq!(c[0].members, vec![(1, 1), (1, 0)]);
    assert_eq!(c[1].multiplicity, 1);
    assert!(c[0].lambda < c[1].lambda);
    let r = form_clusters(&[entry(-2.0, 0), entry(-2.0005, 1)]);
    assert!(matches!(r, Err(Error::AmbiguousClusters(_))));
    assert!(form_clusters(&[]).unwrap().0.is_empty());
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = SectorCache::new(dir.path()).unwrap();
    let a = cache.get_or_compute(PI / 4.0, 1e-6, &coarse()).unwrap();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    let b = cache.get_or_compute(PI / 4.0, 1e-6, &coarse()).unwrap();
    assert_eq!(a.eigenvalues, b.eigenvalues);
    // the field of a loaded spectrum is rebuilt from the options
    let (fa, fb) = (a.field().unwrap(), b.field().unwrap());
    assert_eq!(fa.mesh.num_nodes(), fb.mesh.num_nodes());
    assert_eq!(fa.vectors, fb.vectors);
}

/// Eigenvalues on nested truncations of one mesh, so that the discrete
/// spaces are nested as well.
fn nested_truncations(alpha: f64, radii: &[f64]) -> Vec<f64> {
    let outer = *radii.last().unwrap();
    let sec = SectorGeometry::new(alpha, outer).unwrap();
    let mesh = mesh_sector_with(&sec, &SizeField::uniform(0.25), 200_000).unwrap();
    radii
        .iter()
        .map(|&r| {
            let inside = |t: usize| mesh.triangle_points(t).iter().all(|p| p.norm() <= r + 1e-9);
            let sub = restrict(&mesh, inside, BoundaryTag::Dirichlet).unwrap();
            let p = assemble::<f64>(&sub, Order::P2).unwrap();
            solve_lowest(&p, 1.0, 1, 1e-12).unwrap().eigenvalues[0]
        })
        .collect()
}

#[test]
fn truncation_gap_shrinks_geometrically() {
    let e = nested_truncations(PI / 4.0, &[1.5, 3.0, 6.0]);
    assert!(e[0] >= e[1] && e[1] >= e[2], "{e:?}");
    let (g1, g2) = (e[0] - e[1], e[1] - e[2]);
    assert!(g2 < 0.2 * g1, "gaps {g1} {g2}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn truncation_is_monotone(alpha in 0.35f64..1.3, r0 in 1.0f64..2.5) {
        let e = nested_truncations(alpha, &[r0, 2.0 * r0, 4.0 * r0]);
        prop_assert!(e[0] >= e[1] - 1e-10 && e[1] >= e[2] - 1e-10, "{:?}", e);
    }

    #[test]
    fn ground_state_is_an_upper_bound(alpha in 0.3f64..1.4, radius in 2.0f64..8.0) {
        let sec = SectorGeometry::new(alpha, radius).unwrap();
        let mesh = mesh_sector_with(&sec, &SizeField::uniform(0.4), 200_000).unwrap();
        let p = assemble::<f64>(&mesh, Order::P1).unwrap();
        let e = solve_lowest(&p, 1.0, 1, 1e-12).unwrap().eigenvalues[0];
        prop_assert!(e >= ground_state(alpha) - 1e-9);
    }
}
