use kirchhoff_obstacle::adapt::dorfler_mark;
use kirchhoff_obstacle::assembly::{
    assemble_load, assemble_penalty, assemble_stiffness, impose_boundary, BoundaryCondition, SymSparseMatrix,
};
use kirchhoff_obstacle::estimator::{estimate, BoundaryData, Entity};
use kirchhoff_obstacle::linsolve::solve_spd;
use kirchhoff_obstacle::mesh::{Domain, Mesh};
use kirchhoff_obstacle::space::{evaluate_in, reference_basis, DofMap, RefDerivs};
use kirchhoff_obstacle::vi_solver::{pdas, PdasOptions};
use proptest::prelude::*;

mod common;
use common::Qp;

fn domain() -> impl Strategy<Value = Domain> {
    prop_oneof![Just(Domain::Square), Just(Domain::LShape)]
}

fn initial_min_angle(m: &Mesh) -> f64 {
    (0..m.num_triangles()).map(|t| m.min_angle(t)).fold(f64::INFINITY, f64::min)
}

/// Same triangulation with triangles listed in a different order.
fn permuted(m: &Mesh, perm: &[usize]) -> Mesh {
    let tris: Vec<[usize; 3]> = perm.iter().map(|&t| m.triangles()[t].vertices).collect();
    Mesh::from_triangles(m.domain(), m.vertices().to_vec(), &tris).unwrap()
}

fn quadratic_form(a: &SymSparseMatrix, v: &[f64]) -> f64 {
    a.matvec(v).iter().zip(v).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_keeps_conformity_angles_and_vertices(
        dom in domain(),
        marks in prop::collection::vec(prop::collection::vec(any::<prop::sample::Index>(), 1..6), 10),
    ) {
        let mut m = Mesh::build_initial(dom);
        let floor = 0.5 * initial_min_angle(&m);
        for round in marks {
            let tris: Vec<usize> = round.iter().map(|i| i.index(m.num_triangles())).collect();
            let next = m.refine(&tris, &[]).unwrap();
            prop_assert!(next.check_invariants().is_ok());
            prop_assert!(initial_min_angle(&next) >= floor - 1e-12);
            prop_assert_eq!(&next.vertices()[..m.num_vertices()], m.vertices());
            prop_assert!(next.num_triangles() > m.num_triangles());
            m = next;
        }
    }

    #[test]
    fn basis_gradients_sum_to_zero(k in 2usize..=3, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let (x, y) = if x + y > 1.0 { (1.0 - x, 1.0 - y) } else { (x, y) };
        let basis = reference_basis(k).unwrap();
        let mut r = RefDerivs::default();
        basis.eval([x, y], 3, &mut r);
        let n = basis.len();
        let value: f64 = (0..n).map(|i| r.val[i]).sum();
        prop_assert!((value - 1.0).abs() < 1e-13);
        for d in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]] {
            prop_assert!((0..n).map(|i| r.dir1(i, d)).sum::<f64>().abs() < 1e-12);
            prop_assert!((0..n).map(|i| r.dir2(i, d)).sum::<f64>().abs() < 1e-11);
            let third: Vec<f64> = (0..n).map(|i| r.dir3(i, d)).collect();
            if k == 2 {
                prop_assert!(third.iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn cubic_third_derivatives_are_elementwise_constant(t in 0usize..12, a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let m = Mesh::build_initial(Domain::Square);
        let d = DofMap::new(&m, 3).unwrap();
        let u = d.interpolate(|p| (2.0 * p[0]).sin() * (p[1] + 1.0).exp());
        let t = t % m.num_triangles();
        let p0 = evaluate_in(&m, &d, &u, t, [a, b], 3).unwrap();
        let p1 = evaluate_in(&m, &d, &u, t, [1.0 / 3.0, 1.0 / 3.0], 3).unwrap();
        for i in 0..4 {
            prop_assert!((p0.third[i] - p1.third[i]).abs() <= 1e-9 * (1.0 + p1.third[i].abs()));
        }
    }

    #[test]
    fn interpolation_is_a_projection(dom in domain(), k in 2usize..=3, seed in prop::collection::vec(-1.0f64..1.0, 200)) {
        let m = Mesh::build_initial(dom);
        let d = DofMap::new(&m, k).unwrap();
        let v: Vec<f64> = (0..d.num_dofs()).map(|i| seed[i % seed.len()] * (1.0 + i as f64).sqrt()).collect();
        // Evaluate on the owning triangle of each node and re-interpolate.
        let mut w = vec![0.0; d.num_dofs()];
        for t in 0..m.num_triangles() {
            let map = kirchhoff_obstacle::space::ElementMap::new(&m, t);
            for &dof in d.cell_dofs(t) {
                let xi = map.to_reference(d.node(dof));
                w[dof] = evaluate_in(&m, &d, &v, t, xi, 0).unwrap().value;
            }
        }
        for i in 0..v.len() {
            prop_assert!((v[i] - w[i]).abs() <= 1e-13 * (1.0 + v[i].abs()));
        }
    }

    #[test]
    fn stiffness_is_linear_in_penalty(dom in domain(), k in 2usize..=3, s0 in 1.0f64..40.0, s1 in 1.0f64..40.0) {
        let m = Mesh::build_initial(dom);
        let d = DofMap::new(&m, k).unwrap();
        let a0 = assemble_stiffness(&m, &d, s0);
        let a1 = assemble_stiffness(&m, &d, s1);
        let p = assemble_penalty(&m, &d);
        let diff = a0.add_scaled(&a1, -1.0).unwrap().add_scaled(&p, s1 - s0).unwrap();
        prop_assert!(diff.max_abs() <= 1e-12 * a0.max_abs());
        let ones = vec![1.0; d.num_dofs()];
        prop_assert!(a0.matvec(&ones).iter().all(|x| x.abs() <= 1e-11 * a0.max_abs()));
    }

    #[test]
    fn bilinear_form_is_orientation_invariant(
        dom in domain(),
        k in 2usize..=3,
        perm in Just((0..24).collect::<Vec<usize>>()).prop_shuffle(),
        c in -2.0f64..2.0,
    ) {
        let m = Mesh::build_initial(dom).uniform_refine();
        let order: Vec<usize> = perm.iter().copied().filter(|&t| t < m.num_triangles()).chain(24..m.num_triangles()).collect();
        let mp = permuted(&m, &order);
        let g = |p: [f64; 2]| (c * p[0]).sin() * (p[1] * p[1] + p[0]);
        let sigma = if k == 2 { 6.0 } else { 18.0 };
        let mut energies = Vec::new();
        let mut etas = Vec::new();
        for mesh in [&m, &mp] {
            let d = DofMap::new(mesh, k).unwrap();
            let u = d.interpolate(g);
            energies.push(quadratic_form(&assemble_stiffness(mesh, &d, sigma), &u));
            let rep = estimate(mesh, &d, &u, &|p| p[0] + 1.0, sigma, BoundaryData::Homogeneous).unwrap();
            let mut per_edge: Vec<f64> = (0..mesh.num_edges())
                .map(|e| rep.eta_e1[e] + 2.0 * rep.eta_e2[e] + 3.0 * rep.eta_e3[e])
                .collect();
            per_edge.sort_by(f64::total_cmp);
            etas.push((rep.total, per_edge, rep.reassembled_total()));
        }
        prop_assert!((energies[0] - energies[1]).abs() <= 1e-12 * energies[0].abs().max(1.0));
        prop_assert!((etas[0].0 - etas[1].0).abs() <= 1e-12 * etas[0].0);
        for (x, y) in etas[0].1.iter().zip(&etas[1].1) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        for (total, _, again) in &etas {
            prop_assert!((total - again).abs() <= 1e-13 * total);
        }
    }

    #[test]
    fn solver_is_bitwise_repeatable(dom in domain(), k in 2usize..=3, f0 in -3.0f64..3.0) {
        let m = Mesh::build_initial(dom);
        let d = DofMap::new(&m, k).unwrap();
        let a = assemble_stiffness(&m, &d, if k == 2 { 6.0 } else { 18.0 });
        let b = assemble_load(&m, &d, &|p| f0 + p[1]);
        let red = impose_boundary(&a, &b, &d, BoundaryCondition::Homogeneous);
        let x = solve_spd(&red.matrix, &red.rhs, 1e-10).unwrap();
        let y = solve_spd(&red.matrix, &red.rhs, 1e-10).unwrap();
        prop_assert_eq!(x.solution, y.solution);
        prop_assert!(x.relative_residual <= 1e-10);
    }

    #[test]
    fn dorfler_set_is_minimal(values in prop::collection::vec(0.0f64..10.0, 1..60), theta in 0.05f64..0.95) {
        let items: Vec<(Entity, f64)> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (if i % 2 == 0 { Entity::Triangle(i) } else { Entity::Edge(i) }, v))
            .collect();
        let marked = dorfler_mark(&items, theta).unwrap();
        let total: f64 = values.iter().sum();
        let value_of = |e: &Entity| items.iter().find(|(x, _)| x == e).unwrap().1;
        let sum: f64 = marked.iter().map(value_of).sum();
        if total > 0.0 {
            prop_assert!(sum >= theta * total * (1.0 - 1e-12));
            let last = value_of(marked.last().unwrap());
            prop_assert!(sum - last < theta * total);
        } else {
            prop_assert!(marked.is_empty());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn pdas_matches_exhaustive_active_set_search(
        dom in domain(),
        k in 2usize..=3,
        load in -400.0f64..-50.0,
        top in -0.02f64..0.0,
        curv in 0.0f64..0.2,
    ) {
        let (qp, a, b) = Qp::build(dom, k, load, top, curv);
        prop_assume!(qp.constrained.len() <= 12);
        let sol = pdas(&a, &b, &qp.psi, &qp.constrained, None, &PdasOptions::default()).unwrap();
        let found = qp.brute_force();
        prop_assert!(!found.is_empty());
        let scale = found[0].1.amax().max(1e-3);
        for (_, x) in &found {
            for i in 0..x.len() {
                prop_assert!((sol.x[i] - x[i]).abs() <= 1e-8 * scale);
            }
        }
        if found.len() == 1 {
            prop_assert_eq!(&sol.active, &found[0].0);
        }
    }

    #[test]
    fn pdas_is_scale_equivariant(dom in domain(), s in 0.01f64..100.0, load in -400.0f64..-50.0) {
        let (qp, a, b) = Qp::build(dom, 2, load, -0.005, 0.1);
        let base = pdas(&a, &b, &qp.psi, &qp.constrained, None, &PdasOptions::default()).unwrap();
        let mut sa = a.clone();
        sa.values_mut().iter_mut().for_each(|v| *v *= s);
        let sb: Vec<f64> = b.iter().map(|v| v * s).collect();
        let scaled = pdas(&sa, &sb, &qp.psi, &qp.constrained, None, &PdasOptions::default()).unwrap();
        prop_assert_eq!(&base.active, &scaled.active);
        let xs = base.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in base.x.iter().zip(&scaled.x) {
            prop_assert!((x - y).abs() <= 1e-10 * xs);
        }
        let ls = base.lambda.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for (l, m) in base.lambda.iter().zip(&scaled.lambda) {
            prop_assert!((s * l - m).abs() <= 1e-8 * s * ls);
        }
    }
}

#[test]
fn inactive_obstacle_reproduces_plain_solve() {
    let (qp, a, b) = Qp::build(Domain::Square, 3, -100.0, -10.0, 0.0);
    let sol = pdas(&a, &b, &qp.psi, &qp.constrained, None, &PdasOptions::default()).unwrap();
    let plain = solve_spd(&a, &b, 1e-10).unwrap();
    assert_eq!(sol.iterations, 1);
    assert_eq!(sol.x, plain.solution);
    assert!(sol.lambda.iter().all(|&l| l == 0.0));
}

#[test]
fn feasible_unconstrained_minimiser_is_returned() {
    // Upward load: the free minimiser already sits above psi = 0.
    let (qp, a, b) = Qp::build(Domain::LShape, 2, 100.0, 0.0, 0.0);
    let plain = solve_spd(&a, &b, 1e-10).unwrap();
    assert!(qp.constrained.iter().zip(&qp.psi).all(|(&p, &g)| plain.solution[p] >= g));
    let sol = pdas(&a, &b, &qp.psi, &qp.constrained, None, &PdasOptions::default()).unwrap();
    assert_eq!(sol.x, plain.solution);
    assert_eq!(sol.num_active(), 0);
}
