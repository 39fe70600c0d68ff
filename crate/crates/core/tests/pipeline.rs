use std::sync::Arc;

use augmix_core::adapt::{AdaptConfig, StopReason, adapt_loop};
use augmix_core::assembly::{Method, MethodConfig, solve_problem};
use augmix_core::estimate::{SingularPolicy, error_parts, NormSet};
use augmix_core::femspace::{Family, SpacePair};
use augmix_core::mesh::{Mesh, initial_square_mesh};
use augmix_core::problems::{BoundaryKind, Problem};
use proptest::prelude::*;

fn refine_randomly(mut mesh: Mesh, rounds: &[Vec<bool>]) -> Mesh {
    for picks in rounds {
        let marked: Vec<usize> = (0..mesh.n_triangles()).filter(|&t| picks[t % picks.len()]).collect();
        mesh = mesh.bisect(&marked);
    }
    mesh
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bisection_keeps_meshes_conforming(rounds in prop::collection::vec(prop::collection::vec(any::<bool>(), 1..17), 1..6)) {
        let coarse = initial_square_mesh(1);
        let angle = coarse.min_angle();
        let area: f64 = (0..coarse.n_triangles()).map(|t| coarse.area(t)).sum();
        let mesh = refine_randomly(coarse, &rounds);
        prop_assert!(mesh.audit().is_empty(), "{:?}", mesh.audit());
        let total: f64 = (0..mesh.n_triangles()).map(|t| mesh.area(t)).sum();
        prop_assert!((total - area).abs() < 1e-12);
        // newest-vertex bisection produces finitely many similarity classes
        prop_assert!(mesh.min_angle() >= angle / 2.0 - 1e-12);
    }

    #[test]
    fn interfaces_stay_resolved(rounds in prop::collection::vec(prop::collection::vec(any::<bool>(), 1..9), 1..5)) {
        let mesh = refine_randomly(initial_square_mesh(1), &rounds);
        for t in 0..mesh.n_triangles() {
            let c = mesh.corners(t);
            let sub = mesh.subdomain(t);
            let sx = if sub == 1 || sub == 4 { 1.0 } else { -1.0 };
            let sy = if sub <= 2 { 1.0 } else { -1.0 };
            for p in c {
                prop_assert!(p[0] * sx >= 0.0 && p[1] * sy >= 0.0, "element {} in quadrant {} has vertex {:?}", t, sub, p);
            }
        }
    }
}

#[test]
fn patch_test_on_graded_mesh() {
    let policy = SingularPolicy::default();
    for bc in [BoundaryKind::Dirichlet, BoundaryKind::Mixed] {
        let problem = Problem::linear(bc);
        let mut mesh = problem.initial_mesh(1);
        for _ in 0..12 {
            // grade towards the origin corner of one element
            let t = (0..mesh.n_triangles())
                .min_by(|&a, &b| {
                    let (ca, cb) = (mesh.centroid(a), mesh.centroid(b));
                    ca[0].hypot(ca[1]).total_cmp(&cb[0].hypot(cb[1]))
                })
                .unwrap();
            mesh = mesh.bisect(&[t]);
        }
        let mesh = Arc::new(mesh);
        for (method, family) in [
            (Method::Aug1, Family::Rt0P1),
            (Method::Aug2, Family::Rt0P1),
            (Method::Ls, Family::Rt0P1),
            (Method::Hls, Family::Rt0P1),
            (Method::Aug2, Family::Bdm1P2),
            (Method::Aug1, Family::Bdm1P2),
        ] {
            let space = Arc::new(SpacePair::new(Arc::clone(&mesh), family));
            let (sol, res) = solve_problem(&space, &problem.data, &MethodConfig::new(method)).unwrap();
            assert!(res <= 1e-10, "{method:?} {family:?}: residual {res:e}");
            let parts = error_parts(&mesh, &problem.data.coefficient, Some(&sol), &*problem.exact, &policy);
            let err = NormSet::from_parts(&mesh, &parts).theta1;
            assert!(err <= 1e-10, "{method:?} {family:?} {bc:?}: error {err:e}");
        }
    }
}

#[test]
fn smooth_problem_converges_at_optimal_rate() {
    let problem = Problem::sine(BoundaryKind::Dirichlet);
    let mut cfg = AdaptConfig::new(MethodConfig::new(Method::Aug1), Family::Rt0P1);
    cfg.initial_n = 2;
    cfg.tolerance = 0.02;
    let result = adapt_loop(&problem, &cfg, |_| {}).unwrap();
    assert_eq!(result.history.stop, Some(StopReason::Converged));
    let slope = result.history.loglog_slope(5, |r| r.eta).unwrap();
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
    let eff = result.history.last().unwrap().eff_index.unwrap();
    assert!((0.9..1.1).contains(&eff), "eff {eff}");
}

#[test]
fn adaptive_history_is_well_formed() {
    let problem = Problem::kellogg(1, BoundaryKind::Mixed).unwrap();
    let mut cfg = AdaptConfig::new(MethodConfig::new(Method::Aug2), Family::Bdm1P2);
    cfg.max_iterations = 8;
    let result = adapt_loop(&problem, &cfg, |_| {}).unwrap();
    let recs = &result.history.records;
    assert_eq!(result.history.stop, Some(StopReason::Budget));
    assert_eq!(recs.len(), 9);
    for (i, w) in recs.windows(2).enumerate() {
        assert_eq!(w[1].k, i + 1);
        assert!(w[1].n > w[0].n);
    }
    assert!(recs.iter().all(|r| r.galerkin_residual <= 1e-10));
    assert_eq!(result.mesh.n_triangles(), recs.last().unwrap().n);
    assert_eq!(result.report.indicators.len(), result.mesh.n_triangles());
}
