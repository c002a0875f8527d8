use proptest::prelude::*;

use spt_geometry::ed::{self, EdOptions, SegmentExtent};
use spt_geometry::hull::{convexity_check, hull2, hull3, polygon_area, upper_hull_values, Point3};
use spt_geometry::models::{build_cluster, Boundary, ModelParams};
use spt_geometry::pauli::{realize, DenseMatrix, Format, OperatorSum, Pauli, PauliString, Realized};
use spt_geometry::scan::{read_csv, solve_point, write_csv, BoundarySample, CoordinateMode, Engine};
use spt_geometry::tebd::TebdSchedule;

const N: usize = 4;

fn pauli() -> impl Strategy<Value = Option<Pauli>> {
    prop_oneof![Just(None), Just(Some(Pauli::X)), Just(Some(Pauli::Y)), Just(Some(Pauli::Z))]
}

fn string() -> impl Strategy<Value = PauliString> {
    prop::collection::vec(pauli(), N).prop_map(|ps| {
        let factors: Vec<(usize, Pauli)> = ps.into_iter().enumerate().filter_map(|(i, p)| p.map(|p| (i, p))).collect();
        PauliString::real(N, factors, 1.0).unwrap()
    })
}

fn dense(p: &PauliString) -> DenseMatrix {
    match realize(&OperatorSum::from(p.clone()), Format::Dense).unwrap() {
        Realized::Dense(m) => m,
        Realized::Sparse(_) => unreachable!(),
    }
}

fn sign() -> impl Strategy<Value = f64> {
    prop_oneof![Just(-1.0), Just(1.0)]
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn string_product_matches_matrix_product(a in string(), b in string()) {
        let ab = dense(&a.multiply(&b).unwrap());
        prop_assert!(ab.max_abs_diff(&dense(&a).matmul(&dense(&b))) < 1e-14);
    }

    #[test]
    fn string_product_is_associative(a in string(), b in string(), c in string()) {
        let l = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let r = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert_eq!(l.key(), r.key());
        prop_assert!((l.coeff() - r.coeff()).norm() < 1e-15);
    }

    #[test]
    fn strings_square_to_identity(a in string()) {
        let sq = a.multiply(&a).unwrap();
        prop_assert!(sq.is_identity());
        prop_assert!((sq.coeff().re - 1.0).abs() < 1e-15 && sq.coeff().im.abs() < 1e-15);
    }

    #[test]
    fn commutation_matches_product_order(a in string(), b in string()) {
        let ab = a.multiply(&b).unwrap();
        let ba = b.multiply(&a).unwrap();
        let same = (ab.coeff() - ba.coeff()).norm() < 1e-15;
        prop_assert_eq!(a.commutes(&b).unwrap(), same);
    }

    #[test]
    fn extent_is_basis_independent(angles in prop::collection::vec(-3.2f64..3.2, 6)) {
        let b = build_cluster(&ModelParams::new(6, -1.0, 1.0, 1.0, 0.0)).unwrap();
        let gs = ed::ground_space(&b.hamiltonian, 6, 1e-10).unwrap();
        let basis = gs.ground_vectors().to_vec();
        prop_assert_eq!(basis.len(), 4);
        let x = b.h3.scaled(0.5);
        let rotated = rotate(&basis, &angles);
        let e0 = ed::extent_over(&basis, &x, "x3").unwrap();
        let e1 = ed::extent_over(&rotated, &x, "x3").unwrap();
        prop_assert!((e0.min_val - e1.min_val).abs() < 1e-10);
        prop_assert!((e0.max_val - e1.max_val).abs() < 1e-10);
        // Any state of the multiplet lies inside the extent.
        for v in &rotated {
            let m = ed::expectation(v, &x).unwrap();
            prop_assert!(m >= e0.min_val - 1e-10 && m <= e0.max_val + 1e-10);
        }
    }

    #[test]
    fn hull_contains_every_point(pts in prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 8..40)) {
        let h = hull3(&pts).unwrap();
        for q in &pts {
            prop_assert!(h.depth(&pts, q) >= -1e-12);
        }
        for v in h.vertices() {
            prop_assert!(h.depth(&pts, &pts[v]).abs() < 1e-12);
        }
        let bbox = 8.0;
        let vol = h.volume(&pts);
        prop_assert!(vol > 0.0 && vol <= bbox);
    }

    #[test]
    fn sphere_points_are_in_convex_position(
        dirs in prop::collection::vec((0.0f64..std::f64::consts::TAU, -0.99f64..0.99), 6..30),
    ) {
        let pts: Vec<Point3> = dirs
            .iter()
            .map(|&(phi, z)| {
                let r = (1.0 - z * z).sqrt();
                [r * phi.cos(), r * phi.sin(), z]
            })
            .collect();
        let r = convexity_check(&pts, 1e-9);
        prop_assert!(r.is_convex_position(), "{:?}", r);
        let h = hull3(&pts).unwrap();
        prop_assume!(h.volume(&pts) > 1e-3);
        let mut centroid = [0.0; 3];
        for p in &pts {
            for k in 0..3 {
                centroid[k] += p[k] / pts.len() as f64;
            }
        }
        let mut with_center = pts.clone();
        with_center.push(centroid);
        let r = convexity_check(&with_center, 1e-9);
        prop_assert!(r.interior.contains(&pts.len()));
    }

    #[test]
    fn polygon_hull_area_bounds(pts in prop::collection::vec(prop::array::uniform2(0.0f64..1.0), 3..30)) {
        let ring = hull2(&pts);
        let area = polygon_area(&pts, &ring);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&area));
    }

    #[test]
    fn upper_hull_dominates(ys in prop::collection::vec(0.0f64..1.0, 2..20)) {
        let xy: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect();
        let u = upper_hull_values(&xy);
        let top = ys.iter().cloned().fold(0.0, f64::max);
        for (i, (&y, &h)) in ys.iter().zip(&u).enumerate() {
            prop_assert!(h >= y - 1e-12 && h <= top + 1e-12, "index {}", i);
        }
        // Concave: second differences are non-positive.
        for w in u.windows(3) {
            prop_assert!(w[0] + w[2] - 2.0 * w[1] <= 1e-12);
        }
    }

    #[test]
    fn samples_lie_on_their_supporting_plane(
        j1 in sign(), j2 in sign(), alpha in -1.0f64..1.0, bx in 0.0f64..2.0,
        j1b in sign(), j2b in sign(), alpha_b in -1.0f64..1.0, bx_b in 0.0f64..2.0,
    ) {
        let opts = EdOptions { k: 2, ..EdOptions::default() };
        let sched = TebdSchedule::default();
        let p = ModelParams::new(8, j1, j2, alpha, bx);
        let q = ModelParams::new(8, j1b, j2b, alpha_b, bx_b);
        let sp = solve_point(&p, CoordinateMode::BoundaryField, Engine::Ed, &opts, &sched, 0).unwrap();
        let sq = solve_point(&q, CoordinateMode::BoundaryField, Engine::Ed, &opts, &sched, 0).unwrap();
        let bp = build_cluster(&p).unwrap();
        prop_assert!((bp.plane_energy(sp.point) - sp.e0).abs() < 1e-9);
        // Every other boundary point lies on or above the plane.
        prop_assert!(bp.plane_energy(sq.point) >= sp.e0 - 1e-9);
    }

    #[test]
    fn j1_sign_reflects_x1(alpha in -0.95f64..0.95, bx in 0.05f64..2.0, j2 in sign()) {
        let opts = EdOptions { k: 2, ..EdOptions::default() };
        let sched = TebdSchedule::default();
        let solve = |j1: f64| {
            let p = ModelParams::new(8, j1, j2, alpha, bx);
            solve_point(&p, CoordinateMode::BoundaryField, Engine::Ed, &opts, &sched, 0).unwrap()
        };
        let (a, b) = (solve(1.0), solve(-1.0));
        prop_assume!(a.degeneracy == Some(1));
        prop_assert!((a.e0 - b.e0).abs() < 1e-9);
        prop_assert!((a.point[0] + b.point[0]).abs() < 1e-8);
        prop_assert!((a.point[1] - b.point[1]).abs() < 1e-8);
        prop_assert!((a.point[2] - b.point[2]).abs() < 1e-8);
    }

    #[test]
    fn csv_round_trips(
        rows in prop::collection::vec(
            (sign(), sign(), -1.0f64..1.0, prop_oneof![0.0f64..5.0, Just(f64::INFINITY)],
             prop::array::uniform3(-1.0f64..1.0), -50.0f64..0.0, prop::option::of(1usize..5),
             prop::option::of(1usize..100), any::<bool>()),
            1..12,
        ),
    ) {
        let samples: Vec<BoundarySample> = rows
            .iter()
            .map(|&(j1, j2, alpha, bx, point, e0, deg, d, pbc)| {
                let boundary = if pbc { Boundary::Pbc } else { Boundary::Obc };
                let engine = d.map_or(Engine::Ed, |d| Engine::Tebd { bond_dim: d });
                let ed_like = engine == Engine::Ed;
                BoundarySample {
                    params: ModelParams::new(8, j1, j2, alpha, bx).with_boundary(boundary),
                    mode: CoordinateMode::BoundaryField,
                    engine,
                    point,
                    e0,
                    gap: ed_like.then_some(0.25),
                    degeneracy: if ed_like { deg } else { None },
                    extent: (ed_like && deg.is_some()).then(|| SegmentExtent {
                        min_val: -point[2].abs(),
                        max_val: point[2].abs(),
                        operator_label: "x3".into(),
                    }),
                    trunc_weight: (!ed_like).then_some(1e-9),
                    error: None,
                }
            })
            .collect();
        let mut buf = Vec::new();
        write_csv(&samples, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), samples.len());
        for (r, s) in back.iter().zip(&samples) {
            prop_assert_eq!(r.j1, s.params.j1);
            prop_assert_eq!(r.j2, s.params.j2);
            prop_assert_eq!(r.alpha, s.params.alpha);
            prop_assert_eq!(r.bx, s.params.bx);
            prop_assert_eq!(r.boundary, s.params.boundary);
            prop_assert_eq!(r.mode, s.mode);
            prop_assert_eq!(&r.engine, s.engine.label());
            prop_assert_eq!(r.d, s.engine.bond_dim());
            prop_assert_eq!(r.e0, s.e0);
            prop_assert_eq!(r.gap, s.gap);
            prop_assert_eq!(r.degeneracy, s.degeneracy);
            prop_assert_eq!([r.x1, r.x2, r.x3], s.point);
            prop_assert_eq!(r.trunc_weight, s.trunc_weight);
            if let Some(e) = &s.extent {
                prop_assert_eq!((r.seg_lo, r.seg_hi), (Some(e.min_val), Some(e.max_val)));
            }
        }
    }
}

/// Applies Givens rotations over every pair of the four basis vectors.
fn rotate(basis: &[Vec<f64>], angles: &[f64]) -> Vec<Vec<f64>> {
    let mut out = basis.to_vec();
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    for (&(i, j), &t) in pairs.iter().zip(angles) {
        let (c, s) = (t.cos(), t.sin());
        let (a, b) = (out[i].clone(), out[j].clone());
        out[i] = a.iter().zip(&b).map(|(x, y)| c * x - s * y).collect();
        out[j] = a.iter().zip(&b).map(|(x, y)| s * x + c * y).collect();
    }
    out
}
