use cmdp_core::generate::{random_feasible_spec, random_spec};
use cmdp_core::simplex::{simplex_solve, LinearProgram, Relation};
use cmdp_core::{brute_force_small, policy_evaluation, solve_cmdp_lp, Objective, OccupancyMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn lp_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut feasible = 0;
    for k in 0..50 {
        let ns = rng.gen_range(1..=2);
        let na = rng.gen_range(1..=2);
        let d = rng.gen_range(1..=2);
        // alternate between guaranteed-feasible and arbitrary thresholds
        let spec = if k % 2 == 0 {
            random_feasible_spec(&mut rng, ns, na, d, 0.7, 0.05)
        } else {
            random_spec(&mut rng, ns, na, d, 0.7)
        };
        let lp = solve_cmdp_lp(&spec).unwrap();
        let bf = brute_force_small(&spec).unwrap();
        assert_eq!(lp.feasible, bf.feasible, "instance {k}");
        if let (Some(a), Some(b)) = (lp.v_star(), bf.v_star()) {
            feasible += 1;
            assert!((a - b).abs() <= 1e-6, "instance {k}: {a} vs {b}");
        }
        if let Some(o) = &lp.optimum {
            assert!((o.primal_objective - o.dual_objective).abs() <= 1e-8);
        }
    }
    assert!(feasible >= 25);
}

#[test]
fn occupancy_properties_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..40 {
        let gamma = rng.gen_range(0.1..0.95);
        let spec = random_feasible_spec(&mut rng, 4, 3, 2, gamma, 0.2);
        let res = solve_cmdp_lp(&spec).unwrap();
        let o = res.optimum.as_ref().expect("feasible by construction");

        assert!(o.occupancy.flow_residuals(&spec).iter().all(|r| r.abs() <= 1e-7));
        assert!((o.occupancy.total_mass() - 1.0 / (1.0 - gamma)).abs() <= 1e-7);
        assert!(o.occupancy.mu.as_slice().iter().all(|&m| m >= -1e-12));

        let vr = policy_evaluation(&spec, Objective::Reward, &o.policy).unwrap().scalar_v;
        assert!((vr - o.occupancy.value(&spec.reward)).abs() <= 1e-6);
        assert!((vr - o.v_star).abs() <= 1e-6);
        for i in 0..2 {
            let vc = policy_evaluation(&spec, Objective::Cost(i), &o.policy).unwrap().scalar_v;
            assert!((vc - o.occupancy.value(&spec.costs[i])).abs() <= 1e-6);
            assert!(vc >= spec.thresholds[i] - 1e-6);
            assert!(o.lambda_star[i] >= 0.0);
            assert!((o.lambda_star[i] * (vc - spec.thresholds[i])).abs() <= 1e-6);
        }
        assert!((o.primal_objective - o.dual_objective).abs() <= 1e-8);

        // the occupancy of the recovered policy is the LP's occupancy
        let back = OccupancyMeasure::of_policy(&spec, &o.policy).unwrap();
        for (a, b) in back.mu.as_slice().iter().zip(o.occupancy.mu.as_slice()) {
            assert!((a - b).abs() <= 1e-6);
        }
        assert!(res.zeta_star() >= 0.2 - 1e-7);
    }
}

#[test]
fn random_lps_satisfy_strong_duality() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let (m, n) = (rng.gen_range(1..6), rng.gen_range(1..6));
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut lp = LinearProgram::minimize(c.clone());
        let mut rows = Vec::new();
        for _ in 0..m {
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let b = rng.gen_range(0.5..2.0);
            lp.add_constraint(a.clone(), Relation::Le, b).unwrap();
            rows.push((a, b));
        }
        // keep the feasible region bounded
        lp.add_constraint(vec![1.0; n], Relation::Le, 5.0).unwrap();
        rows.push((vec![1.0; n], 5.0));

        let sol = simplex_solve(&lp).unwrap();
        assert!((sol.objective - sol.dual_objective).abs() <= 1e-8);
        let by: f64 = rows.iter().zip(&sol.duals).map(|((_, b), y)| b * y).sum();
        assert!((by - sol.objective).abs() <= 1e-8);
        for j in 0..n {
            let reduced = c[j] - rows.iter().zip(&sol.duals).map(|((a, _), y)| a[j] * y).sum::<f64>();
            assert!(reduced >= -1e-9);
        }
        assert!(sol.duals.iter().all(|&y| y <= 1e-12));
        for (a, b) in &rows {
            assert!(a.iter().zip(&sol.x).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-9);
        }
    }
}
