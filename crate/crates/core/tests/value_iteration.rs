use cmdp_core::generate::{random_kernel, random_simplex_point, random_table};
use cmdp_core::mdp::evaluate_table;
use cmdp_core::solver::{bellman_backup, DEFAULT_TOL};
use cmdp_core::{value_iteration, TabularPolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_enumeration_of_deterministic_policies() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..30 {
        let kernel = random_kernel(&mut rng, 4, 3);
        let f = random_table(&mut rng, 4, 3);
        let rho = random_simplex_point(&mut rng, 4);
        let gamma = 0.9;
        let res = value_iteration(&kernel, &f, gamma, DEFAULT_TOL).unwrap();

        let mut best_state = [f64::NEG_INFINITY; 4];
        let mut best_rho = f64::NEG_INFINITY;
        for code in 0..81usize {
            let actions: Vec<usize> = (0..4).map(|s| (code / 3usize.pow(s as u32)) % 3).collect();
            let pi = TabularPolicy::deterministic(&actions, 3).unwrap();
            let rep = evaluate_table(&kernel, gamma, &rho, &f, &pi).unwrap();
            for s in 0..4 {
                best_state[s] = best_state[s].max(rep.v[s]);
            }
            best_rho = best_rho.max(rep.scalar_v);
        }
        for s in 0..4 {
            assert!((res.v_star[s] - best_state[s]).abs() <= 1e-6);
        }
        let at_rho: f64 = rho.iter().zip(&res.v_star).map(|(p, v)| p * v).sum();
        assert!((at_rho - best_rho).abs() <= 1e-6);

        // the greedy policy is optimal
        let greedy = evaluate_table(&kernel, gamma, &rho, &f, &res.policy).unwrap();
        for s in 0..4 {
            assert!((greedy.v[s] - res.v_star[s]).abs() <= 1e-6);
        }
        // final Bellman residual
        let (next, _) = bellman_backup(&kernel, &f, gamma, &res.v_star);
        let residual = next.iter().zip(&res.v_star).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(residual <= 1e-9, "{residual}");
        assert!(res.residual <= DEFAULT_TOL);
    }
}

#[test]
fn iterates_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for gamma in [0.3, 0.8, 0.95] {
        let kernel = random_kernel(&mut rng, 5, 3);
        let f = random_table(&mut rng, 5, 3);
        let mut v = vec![0.0; 5];
        let mut prev_gap = f64::INFINITY;
        for _ in 0..200 {
            let (next, _) = bellman_backup(&kernel, &f, gamma, &v);
            let gap = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(gap <= gamma * prev_gap + 1e-12);
            prev_gap = gap;
            v = next;
        }
    }
}

#[test]
fn warm_start_reaches_the_same_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let kernel = random_kernel(&mut rng, 6, 3);
    let f = random_table(&mut rng, 6, 3);
    let cold = value_iteration(&kernel, &f, 0.9, DEFAULT_TOL).unwrap();
    let init = vec![3.0; 6];
    let warm = cmdp_core::solver::value_iteration_from(&kernel, &f, 0.9, DEFAULT_TOL, Some(&init)).unwrap();
    assert_eq!(cold.actions, warm.actions);
    for (a, b) in cold.v_star.iter().zip(&warm.v_star) {
        assert!((a - b).abs() < 1e-8);
    }
}
