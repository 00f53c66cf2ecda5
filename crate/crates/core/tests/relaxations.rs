use bilinhull::envelopes::{cav_exact, lb_relax, ub_relax, vex_exact};
use bilinhull::graph::{pairs, WeightedGraph};
use bilinhull::inequalities::{build_relaxation, mccormick_system, ClassKind, RelaxClass};
use bilinhull::lp::{self, verify_optimality, Direction, LpProblem, LpStatus, Sense};
use bilinhull::lpfile::{parse_lp, system_to_lp, write_lp};
use bilinhull::qp::{
    build_qp_linearization, build_qp_linearization_with, qp_convexification, qp_triangles,
    triangle_sampling_curve, QpInstance,
};
use bilinhull::scalar::{binomial, int, rat};
use bilinhull::{Graph, Rational, System};
use proptest::prelude::*;

fn weight() -> impl Strategy<Value = Rational> {
    (1i64..=4, 1i64..=3, any::<bool>()).prop_map(|(p, q, neg)| rat(if neg { -p } else { p }, q))
}

fn point(n: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((1i64..=8).prop_flat_map(|q| (0..=q, Just(q))), n)
        .prop_map(|v| v.into_iter().map(|(p, q)| rat(p, q)).collect())
}

/// A random graph on 4..=6 vertices with at least one edge, and a point.
fn graph_and_point() -> impl Strategy<Value = (Graph, Vec<Rational>)> {
    (4usize..=6).prop_flat_map(|n| {
        let m = n * (n - 1) / 2;
        (
            prop::collection::vec(prop::option::weighted(0.7, weight()), m),
            point(n),
        )
            .prop_filter_map("needs an edge", move |(ws, x)| {
                let edges: Vec<_> = pairs(n)
                    .zip(ws)
                    .filter_map(|((i, j), w)| w.map(|w| (i, j, w)))
                    .collect();
                if edges.is_empty() {
                    return None;
                }
                Some((WeightedGraph::from_edge_list(n, edges).unwrap(), x))
            })
    })
}

fn quad_instance(n: usize, simplex: bool) -> impl Strategy<Value = QpInstance> {
    let m = n * (n + 1) / 2;
    (
        prop::collection::vec(prop::option::weighted(0.6, weight()), m),
        prop::collection::vec(prop::option::weighted(0.4, weight()), n),
    )
        .prop_map(move |(q, c)| {
            let mut inst = QpInstance::new(n, simplex);
            let entries = (1..=n).flat_map(|i| (i..=n).map(move |j| (i, j)));
            for ((i, j), v) in entries.zip(q) {
                if let Some(v) = v {
                    inst.set_q(0, i, j, v);
                }
            }
            for (i, v) in c.into_iter().enumerate() {
                if let Some(v) = v {
                    inst.set_c(0, i + 1, v);
                }
            }
            inst
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_class_sits_between_mccormick_and_the_hull((g, x) in graph_and_point()) {
        let m: System = mccormick_system(&g);
        let (lb_m, ub_m) = (lb_relax(&m, &g, &x).unwrap(), ub_relax(&m, &g, &x).unwrap());
        let vex = vex_exact(&g, &x).unwrap().value;
        let cav = cav_exact(&g, &x).unwrap().value;
        prop_assert!(vex <= cav);
        for kind in [ClassKind::MT, ClassKind::MQ, ClassKind::MC, ClassKind::MG, ClassKind::MO] {
            let sys: System = build_relaxation(&g, RelaxClass::new(kind)).unwrap().system;
            let lb = lb_relax(&sys, &g, &x).unwrap();
            let ub = ub_relax(&sys, &g, &x).unwrap();
            prop_assert!(lb_m <= lb && lb <= vex, "{:?}: {} {} {}", kind, lb_m, lb, vex);
            prop_assert!(cav <= ub && ub <= ub_m, "{:?}: {} {} {}", kind, cav, ub, ub_m);
        }
    }

    #[test]
    fn relaxation_files_round_trip((g, _) in graph_and_point(), k in 0usize..5) {
        let kind = [ClassKind::M, ClassKind::MT, ClassKind::MQ, ClassKind::MC, ClassKind::MO][k];
        let sys: System = build_relaxation(&g, RelaxClass::new(kind)).unwrap().system;
        let obj: Vec<Rational> = (0..sys.universe().len()).map(|e| rat(e as i64 % 5 - 2, 3)).collect();
        let p = system_to_lp(&sys, Some((Direction::Minimize, &obj)));
        let back = parse_lp(&write_lp(&p)).unwrap();
        prop_assert_eq!(&back.vars, &p.vars);
        prop_assert_eq!(&back.objective, &p.objective);
        prop_assert_eq!(back.rows.len(), p.rows.len());
        for (a, b) in back.rows.iter().zip(&p.rows) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert_eq!(&a.coeffs, &b.coeffs);
            prop_assert_eq!(&a.rhs, &b.rhs);
        }
    }

    #[test]
    fn warm_and_cold_solves_agree(
        rows in prop::collection::vec((prop::collection::vec(-3i64..=3, 4), 0i64..=6), 1..6),
        obj in prop::collection::vec(-4i64..=4, 4),
    ) {
        let mut p: LpProblem<Rational> = LpProblem::new("random");
        for k in 0..4 {
            p.add_var(format!("v{k}"), Some(int(0)), Some(int(3)));
        }
        for (r, (a, b)) in rows.iter().enumerate() {
            let coeffs = a.iter().enumerate().map(|(j, &c)| (j, int(c))).collect();
            p.add_row(format!("r{r}"), coeffs, Sense::Le, int(*b));
        }
        p.set_objective(Direction::Maximize, obj.iter().enumerate().map(|(j, &c)| (j, int(c))).collect());
        let warm = lp::solve(&p).unwrap();
        let cold = lp::solve_cold(&p).unwrap();
        // the origin is feasible and the box is bounded
        prop_assert_eq!(warm.status, LpStatus::Optimal);
        prop_assert_eq!(&warm.value, &cold.value);
        prop_assert!(verify_optimality(&p, &warm).is_ok());
        prop_assert!(verify_optimality(&p, &cold).is_ok());
    }

    #[test]
    fn linearization_bounds_the_quadratic(inst in quad_instance(4, false), x in point(4)) {
        let sol = lp::solve(&build_qp_linearization(&inst).unwrap()).unwrap();
        prop_assert!(sol.value.unwrap() <= inst.value(0, &x));
        prop_assert_eq!(QpInstance::parse(&inst.to_text()).unwrap(), inst);
    }

    #[test]
    fn triangle_subsets_only_raise_the_bound(inst in quad_instance(5, true), seed in 0u64..100) {
        let curve = triangle_sampling_curve(&inst, &[0.0, 0.25, 0.5, 0.75, 1.0], seed).unwrap();
        for w in curve.windows(2) {
            prop_assert!(w[0].bound <= w[1].bound);
        }
        let all = qp_triangles(&inst);
        let full = lp::solve(&build_qp_linearization(&inst).unwrap()).unwrap();
        prop_assert_eq!(curve[4].triangles, all.len());
        prop_assert_eq!(Some(&curve[4].bound), full.value.as_ref());
        let none = lp::solve(&build_qp_linearization_with(&inst, &[]).unwrap()).unwrap();
        prop_assert_eq!(Some(&curve[0].bound), none.value.as_ref());
    }

    #[test]
    fn nonpositive_diagonals_leave_nothing_quadratic(inst in quad_instance(4, false)) {
        let mut inst = inst;
        for i in 1..=4 {
            if inst.q[0].get(&(i, i)).is_some_and(|v| *v > int(0)) {
                inst.set_q(0, i, i, -inst.q[0][&(i, i)].clone());
            }
        }
        let convex = qp_convexification(&inst).unwrap();
        let linear = build_qp_linearization(&inst).unwrap();
        prop_assert!(!convex.is_quadratic());
        prop_assert_eq!(convex.rows, linear.rows);
        prop_assert_eq!(convex.objective, linear.objective);
    }
}

#[test]
fn four_clique_count_on_complete_graphs() {
    for n in 4..=7 {
        let g = WeightedGraph::complete(n, int(1));
        let r = build_relaxation::<Rational, _>(&g, RelaxClass::sized(ClassKind::MQ, 4)).unwrap();
        assert_eq!(int(r.sources as i64), binomial(n as i64, 4));
    }
}
