mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;

use common::*;
use sweepdd::discretization::{ImpedanceSpec, ProblemSpec};
use sweepdd::driver::{reconstruct_solution, solve_problem};
use sweepdd::indexing::{DirectedPair, Partition, WindowKind};
use sweepdd::interface::InterfaceVector;
use sweepdd::krylov::{arnoldi_basis, dot, gmres, DenseOperator, GmresOptions, LinearOperator};
use sweepdd::preconditioner::{
    bj_half_apply, forward_sweep, Direction, PreconditionerKind, SeamMode, SweepConfig, Sweeper,
};

proptest! {
    #[test]
    fn m_index_is_a_bijection(n1 in 1usize..8, n2 in 1usize..8) {
        let p = Partition::new(n1, n2).unwrap();
        let edges = n1 * (n2 - 1) + n2 * (n1 - 1);
        let expected = 2 * edges;
        prop_assert_eq!(p.pairs().len(), expected);
        prop_assert_eq!(p.n_interfaces(), edges);
        for (k, &pair) in p.pairs().iter().enumerate() {
            prop_assert_eq!(p.m_index(pair).unwrap(), k + 1);
            prop_assert_eq!(p.m_invert(k + 1).unwrap(), pair);
            prop_assert_eq!(p.block(pair.owner, pair.neighbor), k);
        }
        prop_assert!(p.m_invert(0).is_err());
        prop_assert!(p.m_invert(expected + 1).is_err());
    }

    #[test]
    fn groups_own_contiguous_blocks(n1 in 1usize..8, n2 in 1usize..8) {
        let p = Partition::new(n1, n2).unwrap();
        prop_assert_eq!(p.n_groups(), n1 + n2 - 1);
        let mut next = 0;
        let mut subdomains = 0;
        for g in p.group_labels() {
            let range = p.group_blocks(g);
            prop_assert_eq!(range.start, next);
            next = range.end;
            for pair in &p.pairs()[range] {
                prop_assert_eq!(pair.owner.l1(), g);
            }
            subdomains += p.group(g).len();
            prop_assert!(p.group(g).windows(2).all(|w| w[0] < w[1]));
        }
        prop_assert_eq!(next, p.pairs().len());
        prop_assert_eq!(subdomains, n1 * n2);
    }

    #[test]
    fn neighbours_are_adjacent_and_symmetric(n1 in 1usize..8, n2 in 1usize..8) {
        let p = Partition::new(n1, n2).unwrap();
        for &i in p.subdomains() {
            for &j in p.neighbors(i) {
                prop_assert_eq!(i.i1.abs_diff(j.i1) + i.i2.abs_diff(j.i2), 1);
                prop_assert!(p.neighbors(j).contains(&i));
                let pair = DirectedPair { owner: i, neighbor: j };
                prop_assert!(p.m_index(pair).is_ok());
            }
        }
    }

    #[test]
    fn windows_cover_overlap_and_mirror(n1 in 1usize..8, n2 in 1usize..8) {
        let p = Partition::new(n1, n2).unwrap();
        let top = p.n_groups() + 1;
        let lower = p.windows(WindowKind::Lower);
        let upper = p.windows(WindowKind::Upper);
        prop_assert_eq!(lower.len(), (p.n_groups() - 1).div_ceil(n1));
        prop_assert_eq!(lower.len(), upper.len());
        for ws in [&lower, &upper] {
            for g in 2..=top {
                if top > 2 {
                    prop_assert!(ws.iter().any(|w| w.contains(g)));
                }
            }
            for pair in ws.windows(2) {
                let shared = pair[0].groups().filter(|&g| pair[1].contains(g)).count();
                prop_assert_eq!(shared, 1);
            }
            for w in ws.iter() {
                prop_assert!(w.len() <= n1 + 1);
            }
        }
        for (l, u) in lower.iter().zip(&upper) {
            prop_assert_eq!(u.first, top + 2 - l.last);
            prop_assert_eq!(u.last, top + 2 - l.first);
        }
    }
}

fn combine(a: C, x: &InterfaceVector, y: &InterfaceVector) -> Vec<C> {
    x.as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(u, v)| a * u + v)
        .collect()
}

#[test]
fn preconditioners_are_linear() {
    let sys = system(3, 3, 6);
    let x = random_vector(&sys, 1);
    let y = random_vector(&sys, 2);
    let a = C::new(0.3, -1.7);
    let xy = InterfaceVector::from_vec(combine(a, &x, &y), sys.block_len());
    for seam in [SeamMode::Dedup, SeamMode::Literal] {
        for kind in [PreconditionerKind::Sp, PreconditionerKind::Bsp] {
            let config = SweepConfig {
                bsp_seam: seam,
                ..SweepConfig::of(kind)
            };
            let m = Sweeper::new(&sys, config);
            let lhs = m.apply(&xy).unwrap();
            let rhs = combine(a, &m.apply(&x).unwrap(), &m.apply(&y).unwrap());
            assert!(rel_err(lhs.as_slice(), &rhs) < 1e-12, "{kind:?} {seam:?}");
        }
    }
}

#[test]
fn single_window_half_is_a_full_sweep() {
    // N1 >= N_g - 1 gives one window spanning every group.
    for (n1, n2) in [(3, 2), (4, 2), (2, 1)] {
        let sys = system(n1, n2, 6);
        assert_eq!(sys.partition().windows(WindowKind::Lower).len(), 1);
        let r = random_vector(&sys, 3);
        let full = forward_sweep(&sys, &r).unwrap();
        for seam in [SeamMode::Dedup, SeamMode::Literal] {
            let half = bj_half_apply(&sys, &r, Direction::Forward, seam).unwrap();
            assert!(rel_err(half.as_slice(), full.as_slice()) < 1e-14);
        }
    }
}

#[test]
fn forward_sweep_inverts_s_l() {
    let sys = system(3, 3, 6);
    let parts = dense_parts(&sys);
    let r = random_vector(&sys, 5);
    let lr = InterfaceVector::from_vec(mul(&parts.s_l, r.as_slice()), sys.block_len());
    let back = forward_sweep(&sys, &lr).unwrap();
    assert!(rel_err(back.as_slice(), r.as_slice()) < 1e-11);
}

#[test]
fn seam_modes_differ_by_the_seam_input() {
    let sys = system(2, 5, 6);
    let p = sys.partition();
    let r = random_vector(&sys, 4);
    let groups = unknown_groups(p, sys.block_len());
    for (direction, kind) in [
        (Direction::Forward, WindowKind::Lower),
        (Direction::Backward, WindowKind::Upper),
    ] {
        let windows = p.windows(kind);
        assert!(windows.len() > 1);
        let dedup = bj_half_apply(&sys, &r, direction, SeamMode::Dedup).unwrap();
        let literal = bj_half_apply(&sys, &r, direction, SeamMode::Literal).unwrap();
        for (k, &g) in groups.iter().enumerate() {
            let cover = windows.iter().filter(|w| w.contains(g)).count() as f64;
            let want = r[k] * (1.0 - cover);
            assert!(
                (dedup[k] - literal[k] - want).norm() < 1e-12,
                "unknown {k} group {g}"
            );
        }
    }
}

fn dense_test_matrix(n: usize, seed: u64) -> DMatrix<C> {
    let mut rng = Lcg::new(seed);
    DMatrix::from_fn(n, n, |i, j| {
        let v = rng.complex() / (n as f64).sqrt();
        if i == j {
            v + C::new(2.0, 0.5)
        } else {
            v
        }
    })
}

#[test]
fn gmres_matches_dense_lu() {
    let a = dense_test_matrix(50, 9);
    let mut rng = Lcg::new(10);
    let b: Vec<C> = (0..50).map(|_| rng.complex()).collect();
    let opts = GmresOptions {
        tol: 1e-13,
        maxit: 50,
        record_history: true,
    };
    let r = gmres(&DenseOperator(&a), None, &b, &opts).unwrap();
    assert!(r.converged);
    assert!(rel_err(&r.solution, &dense_solve(&a, &b)) < 1e-8);
    let truth = r.true_history.unwrap();
    assert_eq!(truth.len(), r.history.len());
    assert!((truth.last().unwrap() - r.history.last().unwrap()).abs() < 1e-10);
}

#[test]
fn exact_inverse_preconditioner_converges_at_once() {
    let a = dense_test_matrix(30, 12);
    let inv = dense_inverse(&a);
    let mut rng = Lcg::new(13);
    let b: Vec<C> = (0..30).map(|_| rng.complex()).collect();
    let m = DenseOperator(&inv);
    let r = gmres(
        &DenseOperator(&a),
        Some(&m as &dyn LinearOperator),
        &b,
        &GmresOptions::default(),
    )
    .unwrap();
    assert_eq!(r.iterations, 1);
    assert!(rel_err(&r.solution, &dense_solve(&a, &b)) < 1e-10);
}

#[test]
fn arnoldi_basis_is_orthonormal() {
    let a = dense_test_matrix(40, 14);
    let mut rng = Lcg::new(15);
    let b: Vec<C> = (0..40).map(|_| rng.complex()).collect();
    let basis = arnoldi_basis(&DenseOperator(&a), None, &b, 20).unwrap();
    assert_eq!(basis.len(), 21);
    for (i, u) in basis.iter().enumerate() {
        for (j, v) in basis.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot(u, v) - want).norm() < 1e-10, "({i},{j})");
        }
    }
}

#[test]
fn reconstruction_is_affine_in_g() {
    let sys = system(2, 3, 6);
    let liftings = sys.liftings().unwrap();
    let x = random_vector(&sys, 16);
    let y = random_vector(&sys, 17);
    let a = C::new(-0.4, 2.0);
    let xy = InterfaceVector::from_vec(combine(a, &x, &y), sys.block_len());
    let zero = sys.zeros();
    let (_, w) = reconstruct_solution(&sys, &zero, &liftings).unwrap();
    let (_, ux) = reconstruct_solution(&sys, &x, &liftings).unwrap();
    let (_, uy) = reconstruct_solution(&sys, &y, &liftings).unwrap();
    let (_, uxy) = reconstruct_solution(&sys, &xy, &liftings).unwrap();
    let want: Vec<C> = (0..w.values.len())
        .map(|k| a * (ux.values[k] - w.values[k]) + (uy.values[k] - w.values[k]) + w.values[k])
        .collect();
    assert!(rel_err(&uxy.values, &want) < 1e-12);
}

#[test]
fn bsp_solution_matches_single_domain() {
    let spec = ProblemSpec::scattering(2.0 * std::f64::consts::PI, 12);
    let imp = ImpedanceSpec::for_wavenumber(spec.kappa);
    let p = Partition::new(3, 2).unwrap();
    let opts = GmresOptions {
        tol: 1e-11,
        maxit: 300,
        record_history: false,
    };
    for seam in [SeamMode::Dedup, SeamMode::Literal] {
        let config = SweepConfig {
            bsp_seam: seam,
            ..SweepConfig::of(PreconditionerKind::Bsp)
        };
        let rep = solve_problem(&spec, &imp, &p, &config, &opts, true).unwrap();
        assert!(rep.converged);
        assert!(rep.interface_residual < 1e-9);
        assert!(rep.error_vs_mono.unwrap().max_rel < 1e-8, "{seam:?}");
    }
}
