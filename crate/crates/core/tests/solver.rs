mod common;

use common::*;
use dsproj_core::{
    admm_step, build_reduced_problem, compute_residuals, embed_nonsymmetric, extract_embedded_block, pattern_of, solve,
    CooMatrix, KktSystem, ProblemSpec, SolverConfig, SolverState, Status, SymmetricSparseMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tight() -> SolverConfig {
    SolverConfig {
        eps_abs: 1e-9,
        ..SolverConfig::default()
    }
}

fn counterexample() -> SymmetricSparseMatrix {
    let v: Vec<f64> = [1.0, 9.0, 9.0, 9.0, 1.0, 0.0, 9.0, 0.0, 9.0].iter().map(|x| x / 10.0).collect();
    SymmetricSparseMatrix::from_dense(3, &v).unwrap()
}

#[test]
fn counterexample_matches_oracle() {
    let c = counterexample();
    let sol = solve(&ProblemSpec::new(c.clone()), &tight()).unwrap();
    assert_eq!(sol.status, Status::Solved);
    let oracle = symmetric_oracle(&c, &[1.0; 3], None);
    assert!(induced_inf_norm(&sol.x.to_dense(), &oracle.x, 3) <= 1e-4);
}

#[test]
fn optimum_is_a_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.gen_range(3..12);
        let c = random_feasible(&mut rng, n, 0.6);
        let spec = ProblemSpec::new(c.clone());
        let rp = build_reduced_problem(&spec).unwrap();
        let oracle = symmetric_oracle(&c, &vec![1.0; n], None);
        let (x, y, w) = reduced_multipliers(&rp, &oracle);

        let mut state = SolverState::zeros(rp.m(), n);
        state.x = x;
        state.y = y;
        state.w = w;
        state.z = vec![1.0; n];

        let res = compute_residuals(&state, &rp);
        assert!(res.r_prim <= 1e-8 && res.r_dual <= 1e-8, "{res:?}");

        let cfg = SolverConfig::default();
        let mut kkt = KktSystem::new(&rp, cfg.rho, cfg.sigma, &cfg.backend).unwrap();
        let before = state.clone();
        admm_step(&mut state, &rp, &cfg, &mut kkt).unwrap();
        for (a, b) in before.x.iter().zip(&state.x) {
            assert!((a - b).abs() <= 1e-10);
        }
        for (a, b) in before.w.iter().zip(&state.w) {
            assert!((a - b).abs() <= 1e-10);
        }
        for (a, b) in before.y.iter().zip(&state.y) {
            assert!((a - b).abs() <= 1e-10);
        }
        assert_eq!(state.z, before.z);
    }
}

#[test]
fn infeasible_input_residual_is_direct() {
    let c = counterexample();
    let rp = build_reduced_problem(&ProblemSpec::new(c.clone())).unwrap();
    let mut state = SolverState::zeros(rp.m(), 3);
    state.x = rp.c().to_vec();
    let res = compute_residuals(&state, &rp);
    let expected = c.row_sums().iter().fold(0.0f64, |a, s| a.max((s - 1.0).abs()));
    assert!((res.r_prim - expected).abs() < 1e-15);
    assert_eq!(res.r_dual, 0.0);
}

#[test]
fn symmetric_solve_matches_unsymmetric_oracle() {
    // the oracle does not impose symmetry; its optimum is symmetric anyway
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..30 {
        let n = rng.gen_range(3..15);
        let density = rng.gen_range(0.3..1.0);
        let c = random_feasible(&mut rng, n, density);
        let oracle = symmetric_oracle(&c, &vec![1.0; n], None);
        for i in 0..n {
            for j in 0..i {
                assert!((oracle.x[i * n + j] - oracle.x[j * n + i]).abs() <= 1e-9);
            }
        }
        let sol = solve(&ProblemSpec::new(c), &tight()).unwrap();
        assert!(induced_inf_norm(&sol.x.to_dense(), &oracle.x, n) <= 1e-6);
    }
}

#[test]
fn weighted_problems_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let n = rng.gen_range(3..12);
        let c = random_feasible(&mut rng, n, 0.6);
        let w = random_weights(&mut rng, &c);
        let spec = ProblemSpec::new(c.clone()).with_weights(w.clone()).unwrap();
        let sol = solve(&spec, &tight()).unwrap();
        assert_eq!(sol.status, Status::Solved);
        let oracle = symmetric_oracle(&c, &vec![1.0; n], Some(&w));
        assert!(induced_inf_norm(&sol.x.to_dense(), &oracle.x, n) <= 1e-6);
    }
}

#[test]
fn vector_targets_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let mut checked = 0;
    while checked < 15 {
        let n = rng.gen_range(3..10);
        let c = random_feasible(&mut rng, n, 0.8);
        // a feasible target: row sums of some symmetric nonnegative matrix on the pattern
        let target = fill_pattern(&mut rng, n, &{
            let mut adj = vec![false; n * n];
            for (i, j, _) in c.iter() {
                adj[i * n + j] = true;
                adj[j * n + i] = true;
            }
            adj
        })
        .row_sums();
        let spec = ProblemSpec::new(c.clone()).with_target(target.clone()).unwrap();
        let sol = solve(&spec, &tight()).unwrap();
        assert_eq!(sol.status, Status::Solved);
        let oracle = symmetric_oracle(&c, &target, None);
        assert!(induced_inf_norm(&sol.x.to_dense(), &oracle.x, n) <= 1e-6);
        let sums = sol.x.row_sums();
        for (s, t) in sums.iter().zip(&target) {
            assert!((s - t).abs() <= 1e-9);
        }
        checked += 1;
    }
}

#[test]
fn scaling_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..10 {
        let n = rng.gen_range(3..12);
        let c = random_feasible(&mut rng, n, 0.5);
        let tau = rng.gen_range(0.5..20.0);
        let base = solve(&ProblemSpec::new(c.clone()), &tight()).unwrap();
        let spec = ProblemSpec::new(c.scaled(tau)).with_uniform_target(tau).unwrap();
        let scaled = solve(
            &spec,
            &SolverConfig {
                eps_abs: 1e-9 * tau,
                ..tight()
            },
        )
        .unwrap();
        let a: Vec<f64> = base.x.to_dense().iter().map(|v| v * tau).collect();
        assert!(induced_inf_norm(&a, &scaled.x.to_dense(), n) <= 1e-8 * tau * n as f64);
        assert!((scaled.objective - tau * tau * base.objective).abs() <= 1e-8 * tau * tau);
    }
}

#[test]
fn nonsymmetric_input_through_embedding() {
    let mut rng = ChaCha8Rng::seed_from_u64(89);
    for _ in 0..10 {
        let n = rng.gen_range(3..8);
        let mut entries = Vec::new();
        for i in 0..n {
            // keep a permutation so the instance is feasible
            entries.push((i, (i + 1) % n, rng.gen_range(0.1..1.0)));
            for j in 0..n {
                if j != (i + 1) % n && rng.gen_bool(0.5) {
                    entries.push((i, j, rng.gen_range(0.0..1.0)));
                }
            }
        }
        let coo = CooMatrix {
            nrows: n,
            ncols: n,
            entries: entries.clone(),
        };
        let embedded = embed_nonsymmetric(&coo).unwrap();
        let sol = solve(&ProblemSpec::new(embedded), &tight()).unwrap();
        assert_eq!(sol.status, Status::Solved);
        let block = extract_embedded_block(&sol.x, n, n).to_dense();

        let oracle_entries: Vec<OracleEntry> = entries
            .iter()
            .map(|&(row, col, c)| OracleEntry { row, col, c, q: 1.0 })
            .collect();
        let oracle = qp_oracle(n, n, &oracle_entries, &vec![1.0; n], &vec![1.0; n]);
        assert!(induced_inf_norm(&block, &oracle.x, n) <= 1e-6);
    }
}

#[test]
fn solution_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(144);
    for _ in 0..40 {
        let n = rng.gen_range(3..20);
        let density = rng.gen_range(0.3..1.0);
        let c = random_feasible(&mut rng, n, density);
        let cfg = SolverConfig::with_tolerance(1e-6);
        let sol = solve(&ProblemSpec::new(c.clone()), &cfg).unwrap();
        assert_eq!(sol.status, Status::Solved);
        assert!(sol.x.values().iter().all(|&v| v >= 0.0));
        let pattern = pattern_of(&c);
        assert!(sol.x.iter().all(|(i, j, _)| pattern.contains(i, j)));
        for s in sol.x.row_sums() {
            assert!((s - 1.0).abs() <= cfg.eps_abs);
        }
    }
}
