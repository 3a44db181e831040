use cmdp_core::generate::random_feasible_spec;
use cmdp_core::lp_oracle::solve_optimum;
use cmdp_core::{
    instantiate_theorem1, perturb_rewards, run_primal_dual, CmdpSpec, Kernel, PdConfig, Table, TraceLevel,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn single_state(b: f64) -> CmdpSpec {
    CmdpSpec::new(
        0.5,
        Kernel::new(1, 2, vec![1.0, 1.0]).unwrap(),
        Table::new(1, 2, vec![1.0, 0.0]).unwrap(),
        vec![Table::new(1, 2, vec![0.0, 1.0]).unwrap()],
        vec![b],
        vec![1.0],
    )
    .unwrap()
}

fn on_net(x: f64, eps1: f64, upper: f64) -> bool {
    if x == upper {
        return true;
    }
    let k = (x / eps1).round();
    (x - k * eps1).abs() <= 1e-12 && x >= 0.0 && x <= upper
}

#[test]
fn certified_single_state_run() {
    let base = single_state(0.8);
    let rp = perturb_rewards(&base.reward, 0.01, 3).unwrap();
    let emp = base.with_model(base.kernel.clone(), rp.r_p, base.thresholds.clone()).unwrap();
    let opt = solve_optimum(&emp).unwrap().unwrap();
    let norm = opt.lambda_star_norm();
    let cfg = PdConfig::raw(norm + 1.0, norm, 0.1, emp.gamma, emp.thresholds.clone(), 0.01).unwrap();
    let trace = run_primal_dual(&emp, &cfg, TraceLevel::Full).unwrap();

    assert_eq!(trace.records.len() as u64, cfg.t);
    assert_eq!(trace.mixture.len(), cfg.t);
    assert!(trace.mean_reward >= opt.v_star - 0.1);
    assert!(trace.mean_costs[0] >= emp.thresholds[0] - 0.1);
    for r in &trace.records {
        assert!(on_net(r.lambda[0], cfg.eps1, cfg.upper), "{}", r.lambda[0]);
    }
    // best Lagrangian approaches the LP optimum
    assert!(trace.best_lagrangian >= opt.v_star - 1e-9);
    assert!(trace.best_lagrangian - opt.v_star <= cfg.eps_opt);
}

#[test]
fn random_instances_stay_on_the_net_with_no_duality_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..4u64 {
        let base = random_feasible_spec(&mut rng, 3, 2, 2, 0.6, 0.1);
        let rp = perturb_rewards(&base.reward, 0.01, k).unwrap();
        let emp = base.with_model(base.kernel.clone(), rp.r_p, base.thresholds.clone()).unwrap();
        let opt = solve_optimum(&emp).unwrap().unwrap();
        let norm = opt.lambda_star_norm();
        let cfg = PdConfig::raw(norm + 1.0, norm, 0.2, emp.gamma, emp.thresholds.clone(), 0.01).unwrap();
        let trace = run_primal_dual(&emp, &cfg, TraceLevel::Full).unwrap();
        for r in &trace.records {
            for &l in &r.lambda {
                assert!(on_net(l, cfg.eps1, cfg.upper));
                assert!((0.0..=cfg.upper).contains(&l));
            }
        }
        assert!(trace.max_lambda.iter().all(|&l| l <= cfg.upper));
        assert!((trace.best_lagrangian - opt.v_star).abs() <= cfg.eps_opt, "instance {k}");
        assert!(trace.mean_reward >= opt.v_star - cfg.eps_opt);
        for i in 0..2 {
            assert!(trace.mean_costs[i] >= emp.thresholds[i] - cfg.eps_opt);
        }
    }
}

#[test]
fn slack_constraint_keeps_multiplier_at_zero() {
    let spec = single_state(0.0);
    let cfg = PdConfig::raw(1.0, 0.0, 0.5, 0.5, vec![0.0], 0.01).unwrap();
    let trace = run_primal_dual(&spec, &cfg, TraceLevel::Full).unwrap();
    assert!(trace.records.iter().all(|r| r.lambda == vec![0.0]));
    assert!((trace.mean_reward - 2.0).abs() < 1e-9);
}

#[test]
fn single_iteration_is_the_unconstrained_solution() {
    let spec = single_state(0.8);
    let mut cfg = PdConfig::raw(2.0, 1.0, 0.5, 0.5, vec![0.8], 0.01).unwrap();
    cfg.t = 1;
    let trace = run_primal_dual(&spec, &cfg, TraceLevel::Full).unwrap();
    assert_eq!(trace.mixture.len(), 1);
    assert_eq!(trace.mixture.distinct()[0].0.as_deterministic(), Some(vec![0]));
    assert!((trace.mean_reward - 2.0).abs() < 1e-9);
}

#[test]
fn iteration_count_scales_with_constraints_squared() {
    let one = instantiate_theorem1(2.0, 1.0, 0.5, 0.5, 1).unwrap();
    let two = instantiate_theorem1(2.0, 1.0, 0.5, 0.5, 2).unwrap();
    assert!((two.t_exact / one.t_exact - 4.0).abs() < 1e-12);
    let near = instantiate_theorem1(2.0, 1.999, 0.5, 0.5, 1).unwrap();
    assert!(near.t_exact > 1e6 && near.eps1 < 1e-5);
    assert!(instantiate_theorem1(1.0, 1.0, 0.5, 0.5, 1).is_err());
}
