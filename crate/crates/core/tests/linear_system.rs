mod common;

use common::*;
use dsproj_core::linear::structural_product;
use dsproj_core::{
    assemble_reduced_matrix, build_reduced_problem, dense_inverse_apply, BackendKind, CholeskyFactor, KktSystem,
    LinearBackend, Ordering, ProblemSpec, ReducedProblem,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(rng: &mut ChaCha8Rng, max_n: usize) -> ReducedProblem {
    let n = rng.gen_range(2..=max_n);
    let density = rng.gen_range(0.05..1.0);
    let adj = random_pattern(rng, n, density);
    let c = fill_pattern(rng, n, &adj);
    build_reduced_problem(&ProblemSpec::new(c)).unwrap()
}

fn explicit_reduced(rp: &ReducedProblem, rho: f64, sigma: f64) -> DMatrix<f64> {
    let a = dense_a(rp);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        rp.m(),
        rp.p().iter().map(|p| 1.0 / (p * p + sigma)),
    ));
    &a * d * a.transpose() * rho + DMatrix::identity(rp.n(), rp.n())
}

fn to_na(n: usize, v: Vec<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, &v)
}

#[test]
fn structural_identity_against_explicit_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let rp = random_problem(&mut rng, 30);
        let d: Vec<f64> = (0..rp.m()).map(|_| rng.gen_range(0.01..5.0)).collect();
        let a = dense_a(&rp);
        let explicit = &a * DMatrix::from_diagonal(&DVector::from_vec(d.clone())) * a.transpose();
        let assembled = to_na(rp.n(), structural_product(rp.n(), rp.rows(), rp.cols(), &d).to_dense());
        assert!((explicit - assembled).amax() <= 1e-13);
    }
}

#[test]
fn assembled_matrix_matches_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let rp = random_problem(&mut rng, 30);
        let rho = rng.gen_range(0.01..10.0);
        let sigma = rng.gen_range(0.0..10.0);
        let m = assemble_reduced_matrix(&rp, rho, sigma);
        let explicit = explicit_reduced(&rp, rho, sigma);
        assert!((explicit - to_na(rp.n(), m.matrix.to_dense())).amax() <= 1e-13 * rho.max(1.0));

        // pattern(S + I)
        let pattern = rp.pattern();
        for j in 0..rp.n() {
            for k in m.matrix.col_ptr[j]..m.matrix.col_ptr[j + 1] {
                let i = m.matrix.row_idx[k];
                assert!(i == j || pattern.contains(i, j));
            }
        }
        assert_eq!(m.matrix.nnz(), (pattern.nnz() - pattern.diagonal_count()) / 2 + rp.n());
    }
}

#[test]
fn smallest_eigenvalue_at_least_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let rp = random_problem(&mut rng, 20);
        let m = assemble_reduced_matrix(&rp, rng.gen_range(0.01..10.0), rng.gen_range(0.0..5.0));
        let eig = to_na(rp.n(), m.matrix.to_dense()).symmetric_eigenvalues();
        assert!(eig.min() >= 1.0 - 1e-12);
    }
}

#[test]
fn cholesky_matches_dense_solve_and_ordering() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let rp = random_problem(&mut rng, 50);
        let n = rp.n();
        let m = assemble_reduced_matrix(&rp, rng.gen_range(0.1..10.0), rng.gen_range(0.0..2.0));
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dense = to_na(n, m.matrix.to_dense());
        let reference = dense.lu().solve(&DVector::from_vec(b.clone())).unwrap();
        let amd = CholeskyFactor::new(&m.matrix, Ordering::Amd).unwrap().solve(&b);
        let natural = CholeskyFactor::new(&m.matrix, Ordering::Natural).unwrap().solve(&b);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.reverse();
        let reversed = CholeskyFactor::with_permutation(&m.matrix, perm).unwrap().solve(&b);
        for i in 0..n {
            assert!((amd[i] - reference[i]).abs() <= 1e-12);
            assert!((natural[i] - amd[i]).abs() <= 1e-12);
            assert!((reversed[i] - amd[i]).abs() <= 1e-12);
        }
    }
}

#[test]
fn kkt_solution_satisfies_the_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in [BackendKind::Cholesky, BackendKind::ConjugateGradient] {
        for _ in 0..30 {
            let rp = random_problem(&mut rng, 30);
            let rho = rng.gen_range(0.1..10.0);
            let sigma = rng.gen_range(0.1..10.0);
            let r: Vec<f64> = (0..rp.m()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // the default inner CG tolerance (1e-10 relative) is looser than this check
            let backend = LinearBackend {
                cg_tolerance: 1e-14,
                ..LinearBackend::with_kind(kind)
            };
            let mut kkt = KktSystem::new(&rp, rho, sigma, &backend).unwrap();
            let (x, z) = kkt.solve(&rp, &r).unwrap();

            // both block rows of the KKT system, with z = z_tilde
            let a = dense_a(&rp);
            let ax = &a * DVector::from_vec(x.clone());
            for i in 0..rp.n() {
                assert!((rho * ax[i] - rho * z[i]).abs() <= 1e-10);
            }
            let atz = a.transpose() * DVector::from_vec(z.clone());
            let worst = (0..rp.m())
                .map(|k| {
                    let p2 = rp.p()[k] * rp.p()[k];
                    ((p2 + sigma) * x[k] + rho * atz[k] - r[k]).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst <= 1e-10, "{kind:?}: {worst:e}");
        }
    }
}

#[test]
fn zero_rhs_gives_zero_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rp = random_problem(&mut rng, 10);
    for kind in [BackendKind::Cholesky, BackendKind::ConjugateGradient] {
        let mut kkt = KktSystem::new(&rp, 1.0, 1.0, &LinearBackend::with_kind(kind)).unwrap();
        let (x, z) = kkt.solve(&rp, &vec![0.0; rp.m()]).unwrap();
        assert!(x.iter().chain(&z).all(|&v| v == 0.0));
    }
}

#[test]
fn cholesky_and_cg_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let rp = random_problem(&mut rng, 200);
        let r: Vec<f64> = (0..rp.m()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut chol = KktSystem::new(&rp, 1.0, 1.0, &LinearBackend::with_kind(BackendKind::Cholesky)).unwrap();
        let mut cg = KktSystem::new(&rp, 1.0, 1.0, &LinearBackend::with_kind(BackendKind::ConjugateGradient)).unwrap();
        let (x1, z1) = chol.solve(&rp, &r).unwrap();
        let (x2, z2) = cg.solve(&rp, &r).unwrap();
        assert!(x1.iter().zip(&x2).chain(z1.iter().zip(&z2)).all(|(a, b)| (a - b).abs() <= 1e-8));
    }
}

#[test]
fn sherman_morrison_on_dense_patterns() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let n = rng.gen_range(2..=200);
        let adj = vec![true; n * n];
        let c = fill_pattern(&mut rng, n, &adj);
        let rp = build_reduced_problem(&ProblemSpec::new(c)).unwrap();
        let (rho, sigma) = (rng.gen_range(0.1..10.0), rng.gen_range(0.0..10.0));

        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = assemble_reduced_matrix(&rp, rho, sigma);
        let chol = CholeskyFactor::new(&m.matrix, Ordering::Amd).unwrap().solve(&rhs);
        let sm = dense_inverse_apply(n, rho, sigma, &rhs);
        assert!(chol.iter().zip(&sm).all(|(a, b)| (a - b).abs() <= 1e-10));

        let r: Vec<f64> = (0..rp.m()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let backend = |kind| LinearBackend::with_kind(kind);
        let (x1, z1) = KktSystem::new(&rp, rho, sigma.max(1e-3), &backend(BackendKind::Cholesky))
            .unwrap()
            .solve(&rp, &r)
            .unwrap();
        let (x2, z2) = KktSystem::new(&rp, rho, sigma.max(1e-3), &backend(BackendKind::ShermanMorrison))
            .unwrap()
            .solve(&rp, &r)
            .unwrap();
        assert!(x1.iter().zip(&x2).chain(z1.iter().zip(&z2)).all(|(a, b)| (a - b).abs() <= 1e-10));
    }
}
