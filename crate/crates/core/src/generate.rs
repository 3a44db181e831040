//! Random instance generation for experiments and tests.

use rand::Rng;

use crate::mdp::{policy_evaluation, CmdpSpec, Kernel, Objective, TabularPolicy, Table};

/// A point drawn uniformly from the probability simplex of dimension `n`.
pub fn random_simplex_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

pub fn random_table<R: Rng + ?Sized>(rng: &mut R, num_states: usize, num_actions: usize) -> Table {
    let values = (0..num_states * num_actions).map(|_| rng.gen::<f64>()).collect();
    Table::new(num_states, num_actions, values).expect("shape")
}

pub fn random_kernel<R: Rng + ?Sized>(rng: &mut R, num_states: usize, num_actions: usize) -> Kernel {
    let mut probs = Vec::with_capacity(num_states * num_actions * num_states);
    for _ in 0..num_states * num_actions {
        probs.extend(random_simplex_point(rng, num_states));
    }
    Kernel::new(num_states, num_actions, probs).expect("shape")
}

pub fn random_policy<R: Rng + ?Sized>(rng: &mut R, num_states: usize, num_actions: usize) -> TabularPolicy {
    let probs = (0..num_states)
        .flat_map(|_| random_simplex_point(rng, num_actions))
        .collect();
    TabularPolicy::new(num_states, num_actions, probs).expect("normalized rows")
}

/// Random CMDP whose thresholds sit `slack` below the constraint values of a
/// random stochastic policy, so the instance is strictly feasible whenever
/// `slack > 0`.
pub fn random_feasible_spec<R: Rng + ?Sized>(
    rng: &mut R,
    num_states: usize,
    num_actions: usize,
    d: usize,
    gamma: f64,
    slack: f64,
) -> CmdpSpec {
    let kernel = random_kernel(rng, num_states, num_actions);
    let reward = random_table(rng, num_states, num_actions);
    let costs: Vec<Table> = (0..d).map(|_| random_table(rng, num_states, num_actions)).collect();
    let rho = random_simplex_point(rng, num_states);
    let mut spec = CmdpSpec::new(gamma, kernel, reward, costs, vec![0.0; d], rho).expect("shapes agree");
    let reference = random_policy(rng, num_states, num_actions);
    spec.thresholds = (0..d)
        .map(|i| {
            let v = policy_evaluation(&spec, Objective::Cost(i), &reference)
                .expect("valid policy")
                .scalar_v;
            (v - slack).max(0.0)
        })
        .collect();
    spec
}

/// Random CMDP with thresholds drawn uniformly from `[0, 1/(1-γ)]`; may be
/// infeasible.
pub fn random_spec<R: Rng + ?Sized>(
    rng: &mut R,
    num_states: usize,
    num_actions: usize,
    d: usize,
    gamma: f64,
) -> CmdpSpec {
    let mut spec = random_feasible_spec(rng, num_states, num_actions, d, gamma, 0.0);
    spec.thresholds = (0..d).map(|_| rng.gen::<f64>() / (1.0 - gamma)).collect();
    spec
}
