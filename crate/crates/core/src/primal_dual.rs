//! Model-based primal-dual solver for the empirical CMDP.
//!
//! Each iteration solves the unconstrained MDP with objective
//! `r_p + λᵀc` (primal step), then takes a projected, net-rounded gradient
//! step on the multipliers (dual step). The output is the uniform mixture over
//! all primal iterates.
//!
//! Multipliers are stored as indices into the net `{0, ε₁, 2ε₁, …, U}` so that
//! they stay exactly on the net over arbitrarily long runs.

use std::collections::HashMap;

use crate::error::{CmdpError, Result};
use crate::mdp::{combined_objective, evaluate_table, CmdpSpec, MixturePolicy, TabularPolicy};
use crate::solver::{iota_gap, value_iteration_from, SolveResult, DEFAULT_TOL};

/// The grid `{0, ε₁, 2ε₁, …, U}`; `U` is appended as the top element when it
/// is not itself a multiple of `ε₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualNet {
    eps1: f64,
    upper: f64,
    /// Largest `k` with `k ε₁ <= U`.
    last_multiple: u64,
    /// Index of `U` itself.
    top: u64,
}

impl DualNet {
    pub fn new(eps1: f64, upper: f64) -> Result<Self> {
        if !(eps1 > 0.0) || !eps1.is_finite() {
            return Err(CmdpError::param("eps1", eps1, "net resolution must be positive"));
        }
        if !(upper >= eps1) || !upper.is_finite() {
            return Err(CmdpError::param("upper", upper, "U must be at least eps1"));
        }
        let ratio = upper / eps1;
        if ratio >= 2f64.powi(62) {
            return Err(CmdpError::param("eps1", eps1, "net too fine for U"));
        }
        let mut last_multiple = ratio.floor() as u64;
        if (last_multiple + 1) as f64 * eps1 <= upper {
            last_multiple += 1;
        }
        while last_multiple as f64 * eps1 > upper {
            last_multiple -= 1;
        }
        let top = if last_multiple as f64 * eps1 == upper {
            last_multiple
        } else {
            last_multiple + 1
        };
        Ok(DualNet {
            eps1,
            upper,
            last_multiple,
            top,
        })
    }

    pub fn eps1(&self) -> f64 {
        self.eps1
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Number of net elements.
    pub fn len(&self) -> u64 {
        self.top + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn value(&self, index: u64) -> f64 {
        if index >= self.top {
            self.upper
        } else {
            index as f64 * self.eps1
        }
    }

    /// Index of the net element nearest to `x` (already in `[0, U]`), ties
    /// going to the smaller element.
    pub fn nearest_index(&self, x: f64) -> u64 {
        if !(x > 0.0) {
            return 0;
        }
        if x >= self.upper {
            return self.top;
        }
        let mut lo = ((x / self.eps1).floor() as u64).min(self.top);
        while lo > 0 && self.value(lo) > x {
            lo -= 1;
        }
        let hi = (lo + 1).min(self.top);
        let (vl, vh) = (self.value(lo), self.value(hi));
        if vh - x < x - vl {
            hi
        } else {
            lo
        }
    }
}

/// Rounds `x` to the closest element of `{0, ε₁, 2ε₁, …, U}`.
pub fn round_to_net(x: f64, eps1: f64, upper: f64) -> Result<f64> {
    let net = DualNet::new(eps1, upper)?;
    Ok(net.value(net.nearest_index(x)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    net: DualNet,
    eta: f64,
    indices: Vec<u64>,
}

impl DualState {
    /// `λ = 0` on a fresh net.
    pub fn zero(d: usize, eta: f64, eps1: f64, upper: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(CmdpError::param("eta", eta, "step size must be positive"));
        }
        Ok(DualState {
            net: DualNet::new(eps1, upper)?,
            eta,
            indices: vec![0; d],
        })
    }

    /// Projects and rounds arbitrary multipliers onto the net.
    pub fn from_lambda(lambda: &[f64], eta: f64, eps1: f64, upper: f64) -> Result<Self> {
        let mut state = DualState::zero(lambda.len(), eta, eps1, upper)?;
        for (idx, &l) in state.indices.iter_mut().zip(lambda) {
            *idx = state.net.nearest_index(l.clamp(0.0, upper));
        }
        Ok(state)
    }

    pub fn lambda(&self) -> Vec<f64> {
        self.indices.iter().map(|&k| self.net.value(k)).collect()
    }

    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn net(&self) -> &DualNet {
        &self.net
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn upper(&self) -> f64 {
        self.net.upper
    }

    pub fn net_resolution(&self) -> f64 {
        self.net.eps1
    }

    fn step_in_place(&mut self, v_hat_c: &[f64], b_prime: &[f64]) {
        for ((idx, &v), &b) in self.indices.iter_mut().zip(v_hat_c).zip(b_prime) {
            let stepped = self.net.value(*idx) - self.eta * (v - b);
            *idx = self.net.nearest_index(stepped.clamp(0.0, self.net.upper));
        }
    }
}

/// `λ ← R_Λ[Proj_[0,U][λ - η (V̂_c - b′)]]`, componentwise.
pub fn dual_update(state: &DualState, v_hat_c: &[f64], b_prime: &[f64]) -> Result<DualState> {
    let d = state.indices.len();
    if v_hat_c.len() != d {
        return Err(CmdpError::mismatch("constraint values", d, v_hat_c.len()));
    }
    if b_prime.len() != d {
        return Err(CmdpError::mismatch("adjusted thresholds", d, b_prime.len()));
    }
    let mut next = state.clone();
    next.step_in_place(v_hat_c, b_prime);
    Ok(next)
}

/// Greedy policy of the empirical MDP with objective `r_p + λᵀc`. The reward
/// of `empirical` must already be the perturbed reward.
pub fn primal_update(empirical: &CmdpSpec, lambda: &[f64]) -> Result<(TabularPolicy, SolveResult)> {
    let f = combined_objective(&empirical.reward, &empirical.costs, lambda)?;
    let solve = value_iteration_from(&empirical.kernel, &f, empirical.gamma, DEFAULT_TOL, None)?;
    Ok((solve.policy.clone(), solve))
}

/// Iteration count, step size and net resolution that certify an
/// `ε_opt`-accurate mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdSchedule {
    /// Unrounded iteration count (may be astronomically large).
    pub t_exact: f64,
    /// `ceil(t_exact)`, saturating at `u64::MAX`.
    pub t: u64,
    pub eta: f64,
    pub eps1: f64,
}

/// `T = 4U²d² / (ε_opt²(1-γ)²) · [1 + 1/(U - ‖λ*‖∞)²]`,
/// `η = U(1-γ)/√T`, `ε₁ = ε_opt²(1-γ)²(U - ‖λ*‖∞) / (6dU)`.
pub fn instantiate_theorem1(
    upper: f64,
    lambda_star_norm: f64,
    eps_opt: f64,
    gamma: f64,
    d: usize,
) -> Result<PdSchedule> {
    if !(upper > lambda_star_norm) {
        return Err(CmdpError::param("upper", upper, "U must exceed the largest optimal multiplier"));
    }
    if !(eps_opt > 0.0) {
        return Err(CmdpError::param("eps_opt", eps_opt, "target error must be positive"));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(CmdpError::param("gamma", gamma, "discount must lie in [0,1)"));
    }
    if d == 0 {
        return Err(CmdpError::param("d", 0.0, "need at least one constraint"));
    }
    let d = d as f64;
    let horizon = 1.0 - gamma;
    let slack = upper - lambda_star_norm;
    let t_exact = 4.0 * upper * upper * d * d / (eps_opt * eps_opt * horizon * horizon)
        * (1.0 + 1.0 / (slack * slack));
    // guard against representation noise pushing an integral T one step up
    let rounded = (t_exact * (1.0 - 4.0 * f64::EPSILON)).ceil();
    let t = if rounded >= u64::MAX as f64 {
        u64::MAX
    } else {
        (rounded as u64).max(1)
    };
    Ok(PdSchedule {
        t_exact,
        t,
        eta: upper * horizon / (t as f64).sqrt(),
        eps1: eps_opt * eps_opt * horizon * horizon * slack / (6.0 * d * upper),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    /// Direct run with user-supplied `U` and `ε_opt`.
    Raw,
    /// Constraints may be violated by at most `ε`.
    Relaxed,
    /// Constraints must hold exactly.
    Strict,
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Setting::Raw => "raw",
            Setting::Relaxed => "relaxed",
            Setting::Strict => "strict",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdConfig {
    pub setting: Setting,
    pub gamma: f64,
    /// Iterations actually run.
    pub t: u64,
    /// Iteration count prescribed by the step-size analysis.
    pub t_theoretical: f64,
    pub eps_opt: f64,
    pub eta: f64,
    pub eps1: f64,
    pub upper: f64,
    /// Bound on `‖λ*‖∞` used to size `T` and `ε₁`.
    pub lambda_star_bound: f64,
    pub b_prime: Vec<f64>,
    pub omega: f64,
    /// Threshold tightening `Δ` (strict setting only).
    pub delta_shift: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
}

impl PdConfig {
    /// Configuration from an explicit `U`, `‖λ*‖∞` and `ε_opt`.
    pub fn raw(
        upper: f64,
        lambda_star_norm: f64,
        eps_opt: f64,
        gamma: f64,
        b_prime: Vec<f64>,
        omega: f64,
    ) -> Result<Self> {
        let p = instantiate_theorem1(upper, lambda_star_norm, eps_opt, gamma, b_prime.len())?;
        Ok(PdConfig {
            setting: Setting::Raw,
            gamma,
            t: p.t,
            t_theoretical: p.t_exact,
            eps_opt,
            eta: p.eta,
            eps1: p.eps1,
            upper,
            lambda_star_bound: lambda_star_norm,
            b_prime,
            omega,
            delta_shift: None,
            epsilon: None,
            delta: None,
        })
    }

    pub fn d(&self) -> usize {
        self.b_prime.len()
    }

    pub fn is_truncated(&self) -> bool {
        (self.t as f64) < self.t_theoretical.ceil()
    }

    /// Caps the iteration count. When the cap binds, the step size is
    /// re-derived for the shorter horizon as `η = U(1-γ)/√T_run`; `ε₁`, `U`
    /// and `b′` are unchanged.
    pub fn with_t_cap(mut self, cap: Option<u64>) -> Self {
        if let Some(cap) = cap {
            let cap = cap.max(1);
            if cap < self.t {
                self.t = cap;
                self.eta = self.upper * (1.0 - self.gamma) / (cap as f64).sqrt();
            }
        }
        self
    }
}

fn check_epsilon_delta(epsilon: f64, delta: f64, gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(CmdpError::param("gamma", gamma, "discount must lie in [0,1)"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0 / (1.0 - gamma)) {
        return Err(CmdpError::param("epsilon", epsilon, "must lie in (0, 1/(1-gamma)]"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CmdpError::param("delta", delta, "must lie in (0,1)"));
    }
    Ok(())
}

/// Relaxed-feasibility parameters: `b′ = b - 3ε/8`, `ω = ε(1-γ)/8`,
/// `ε_opt = ε/4`, `U = 16/(ε(1-γ))` with `‖λ*‖∞ <= U/2`.
pub fn instantiate_relaxed(epsilon: f64, delta: f64, gamma: f64, b: &[f64]) -> Result<PdConfig> {
    check_epsilon_delta(epsilon, delta, gamma)?;
    let horizon = 1.0 - gamma;
    let upper = 16.0 / (epsilon * horizon);
    let eps_opt = epsilon / 4.0;
    let omega = epsilon * horizon / 8.0;
    let b_prime = b.iter().map(|bi| bi - 3.0 * epsilon / 8.0).collect();
    let mut cfg = PdConfig::raw(upper, upper / 2.0, eps_opt, gamma, b_prime, omega)?;
    cfg.setting = Setting::Relaxed;
    cfg.epsilon = Some(epsilon);
    cfg.delta = Some(delta);
    Ok(cfg)
}

/// Strict-feasibility parameters: `b′ = b + ε(1-γ)ζ*/20`, `ω = ε(1-γ)/10`,
/// `U = 4(1+ω)/(ζ*(1-γ))` with `‖λ*‖∞ <= U/2`, `Δ = ε(1-γ)ζ*/(40d)`,
/// `ε_opt = Δ/5`.
pub fn instantiate_strict(epsilon: f64, delta: f64, gamma: f64, b: &[f64], zeta_star: f64) -> Result<PdConfig> {
    check_epsilon_delta(epsilon, delta, gamma)?;
    if !(zeta_star > 0.0) {
        return Err(CmdpError::param(
            "zeta_star",
            zeta_star,
            "no strictly feasible policy (Slater constant must be positive)",
        ));
    }
    if b.is_empty() {
        return Err(CmdpError::param("d", 0.0, "need at least one constraint"));
    }
    let horizon = 1.0 - gamma;
    let d = b.len() as f64;
    let omega = epsilon * horizon / 10.0;
    let upper = 4.0 * (1.0 + omega) / (zeta_star * horizon);
    let shift = epsilon * horizon * zeta_star / 20.0;
    let delta_shift = epsilon * horizon * zeta_star / (40.0 * d);
    let eps_opt = delta_shift / 5.0;
    let b_prime = b.iter().map(|bi| bi + shift).collect();
    let mut cfg = PdConfig::raw(upper, upper / 2.0, eps_opt, gamma, b_prime, omega)?;
    cfg.setting = Setting::Strict;
    cfg.delta_shift = Some(delta_shift);
    cfg.epsilon = Some(epsilon);
    cfg.delta = Some(delta);
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub lambda: Vec<f64>,
    pub v_reward: f64,
    pub v_costs: Vec<f64>,
    pub iota_hat: f64,
    /// `V̂_{r_p} + λᵀ(V̂_c - b′)` at this iterate.
    pub lagrangian: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceLevel {
    /// Keep one record per iteration.
    #[default]
    Full,
    /// Keep only aggregates; for long runs.
    Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdTrace {
    pub records: Vec<IterationRecord>,
    pub iterations: u64,
    pub mixture: MixturePolicy,
    /// `V̄_{r_p}`: mean over iterates of the empirical reward value.
    pub mean_reward: f64,
    /// `V̄_{c_i}` on the empirical model.
    pub mean_costs: Vec<f64>,
    /// Smallest Lagrangian value seen, an upper bound on the empirical
    /// optimum that closes in on it as the run converges.
    pub best_lagrangian: f64,
    pub min_iota_hat: f64,
    pub final_lambda: Vec<f64>,
    pub max_lambda: Vec<f64>,
}

/// Runs `config.t` alternating primal and dual steps from `λ₀ = 0` on the
/// empirical CMDP (whose reward is the perturbed reward `r_p`).
pub fn run_primal_dual(empirical: &CmdpSpec, config: &PdConfig, level: TraceLevel) -> Result<PdTrace> {
    let d = empirical.num_constraints();
    if config.d() != d {
        return Err(CmdpError::mismatch("adjusted thresholds", d, config.d()));
    }
    if config.gamma != empirical.gamma {
        return Err(CmdpError::param("gamma", config.gamma, "config discount differs from the model"));
    }
    if config.t == 0 {
        return Err(CmdpError::param("t", 0.0, "need at least one iteration"));
    }
    let mut state = DualState::zero(d, config.eta, config.eps1, config.upper)?;

    // Iterates are deterministic, so their empirical values are cached per
    // action vector and each distinct policy is evaluated once.
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut distinct: Vec<(TabularPolicy, Vec<f64>, u64)> = Vec::new();

    let mut records = Vec::new();
    if level == TraceLevel::Full {
        records.reserve(config.t.min(1 << 20) as usize);
    }
    let mut best_lagrangian = f64::INFINITY;
    let mut min_iota = f64::INFINITY;
    let mut max_lambda = vec![0.0f64; d];
    let mut previous: Option<TabularPolicy> = None;

    for _ in 0..config.t {
        let lambda = state.lambda();
        let f = combined_objective(&empirical.reward, &empirical.costs, &lambda)?;
        // Starting from the previous iterate's exact value under the new
        // objective, value iteration stops after one sweep whenever that
        // iterate is still greedy.
        let warm = match &previous {
            Some(p) => Some(evaluate_table(&empirical.kernel, empirical.gamma, &empirical.rho, &f, p)?.v),
            None => None,
        };
        let solve = value_iteration_from(&empirical.kernel, &f, empirical.gamma, DEFAULT_TOL, warm.as_deref())?;
        let gap = iota_gap(&solve).iota_hat;

        let slot = match seen.get(&solve.actions) {
            Some(&k) => k,
            None => {
                let mut values = Vec::with_capacity(d + 1);
                values.push(evaluate_table(&empirical.kernel, empirical.gamma, &empirical.rho, &empirical.reward, &solve.policy)?.scalar_v);
                for c in &empirical.costs {
                    values.push(evaluate_table(&empirical.kernel, empirical.gamma, &empirical.rho, c, &solve.policy)?.scalar_v);
                }
                distinct.push((solve.policy.clone(), values, 0));
                seen.insert(solve.actions.clone(), distinct.len() - 1);
                distinct.len() - 1
            }
        };
        distinct[slot].2 += 1;
        let values = &distinct[slot].1;
        let v_costs = &values[1..];

        let lagrangian = values[0]
            + lambda
                .iter()
                .zip(v_costs)
                .zip(&config.b_prime)
                .map(|((l, v), b)| l * (v - b))
                .sum::<f64>();
        best_lagrangian = best_lagrangian.min(lagrangian);
        min_iota = min_iota.min(gap);
        for (m, l) in max_lambda.iter_mut().zip(&lambda) {
            *m = m.max(*l);
        }
        if level == TraceLevel::Full {
            records.push(IterationRecord {
                lambda,
                v_reward: values[0],
                v_costs: v_costs.to_vec(),
                iota_hat: gap,
                lagrangian,
            });
        }

        state.step_in_place(v_costs, &config.b_prime);
        previous = Some(solve.policy);
    }

    let t = config.t as f64;
    let mut mixture = MixturePolicy::new();
    let mut sums = vec![0.0; d + 1];
    for (policy, values, count) in distinct {
        for (acc, v) in sums.iter_mut().zip(&values) {
            *acc += count as f64 * v;
        }
        mixture.push_n(policy, count);
    }
    Ok(PdTrace {
        records,
        iterations: config.t,
        mixture,
        mean_reward: sums[0] / t,
        mean_costs: sums[1..].iter().map(|s| s / t).collect(),
        best_lagrangian,
        min_iota_hat: min_iota,
        final_lambda: state.lambda(),
        max_lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{Kernel, Table};

    fn rel_close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1e-300)
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(round_to_net(0.6, 0.5, 1.0).unwrap(), 0.5);
        assert_eq!(round_to_net(0.25, 0.5, 1.0).unwrap(), 0.0);
        assert_eq!(round_to_net(1.0, 0.5, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn net_with_non_multiple_top() {
        let net = DualNet::new(0.3, 1.0).unwrap();
        // {0, 0.3, 0.6, 0.9, 1.0}
        assert_eq!(net.len(), 5);
        assert_eq!(net.value(net.nearest_index(0.96)), 1.0);
        assert!((net.value(net.nearest_index(0.94)) - 0.9).abs() < 1e-15);
        assert_eq!(net.nearest_index(0.94), 3);
        assert!(DualNet::new(0.0, 1.0).is_err());
        assert!(DualNet::new(2.0, 1.0).is_err());
    }

    #[test]
    fn dual_update_examples() {
        let s = DualState::from_lambda(&[0.4], 0.1, 0.05, 1.0).unwrap();
        let next = dual_update(&s, &[0.2], &[0.5]).unwrap();
        assert!((next.lambda()[0] - 0.45).abs() < 1e-12);

        let same = dual_update(&next, &[0.7], &[0.7]).unwrap();
        assert_eq!(same.lambda(), next.lambda());

        let z = DualState::zero(1, 1.0, 0.05, 1.0).unwrap();
        assert_eq!(dual_update(&z, &[1.0], &[0.0]).unwrap().lambda(), vec![0.0]);

        assert!(dual_update(&z, &[1.0, 2.0], &[0.0]).is_err());
    }

    #[test]
    fn schedule_example() {
        let p = instantiate_theorem1(2.0, 1.0, 0.5, 0.5, 1).unwrap();
        assert_eq!(p.t, 512);
        assert!(rel_close(p.eta, 1.0 / 512f64.sqrt()));
        assert!(rel_close(p.eps1, 0.0625 / 12.0));

        let p2 = instantiate_theorem1(2.0, 1.0, 0.5, 0.5, 2).unwrap();
        assert!(rel_close(p2.t_exact, 4.0 * p.t_exact));

        let near = instantiate_theorem1(1.0 + 1e-6, 1.0, 0.5, 0.5, 1).unwrap();
        assert!(near.t_exact > 1e12 && near.eps1 < 1e-7);

        assert!(instantiate_theorem1(1.0, 1.0, 0.5, 0.5, 1).is_err());
    }

    #[test]
    fn relaxed_example() {
        let cfg = instantiate_relaxed(0.4, 0.1, 0.5, &[0.8]).unwrap();
        assert!(rel_close(cfg.b_prime[0], 0.65));
        assert!(rel_close(cfg.omega, 0.025));
        assert!(rel_close(cfg.upper, 80.0));
        assert!(rel_close(cfg.eps_opt, 0.1));
        assert_eq!(cfg.setting, Setting::Relaxed);

        let at_max = instantiate_relaxed(2.0, 0.1, 0.5, &[0.8]).unwrap();
        assert!(rel_close(at_max.omega, 0.125));
        assert!(instantiate_relaxed(2.1, 0.1, 0.5, &[0.8]).is_err());
        assert!(instantiate_relaxed(0.0, 0.1, 0.5, &[0.8]).is_err());
    }

    #[test]
    fn strict_example() {
        let cfg = instantiate_strict(0.4, 0.1, 0.5, &[0.8], 1.2).unwrap();
        assert!(rel_close(cfg.b_prime[0], 0.812));
        assert!(rel_close(cfg.omega, 0.02));
        assert!(rel_close(cfg.upper, 6.8));
        assert!(rel_close(cfg.delta_shift.unwrap(), 0.006));
        assert!(rel_close(cfg.eps_opt, 0.0012));
        assert!(instantiate_strict(0.4, 0.1, 0.5, &[0.8], 0.0).is_err());
    }

    #[test]
    fn t_cap_rescales_step() {
        let cfg = PdConfig::raw(2.0, 1.0, 0.5, 0.5, vec![0.0], 0.0).unwrap();
        assert!(!cfg.is_truncated());
        let capped = cfg.clone().with_t_cap(Some(32));
        assert_eq!(capped.t, 32);
        assert!(capped.is_truncated());
        assert!(rel_close(capped.eta, 2.0 * 0.5 / 32f64.sqrt()));
        assert_eq!(cfg.clone().with_t_cap(Some(10_000)), cfg);
    }

    fn single_state(b: f64, gamma: f64) -> CmdpSpec {
        CmdpSpec::new(
            gamma,
            Kernel::new(1, 2, vec![1.0, 1.0]).unwrap(),
            Table::from_nested(&[vec![1.0, 0.2]]).unwrap(),
            vec![Table::from_nested(&[vec![0.0, 1.0]]).unwrap()],
            vec![b],
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn primal_update_examples() {
        let spec = single_state(0.0, 0.0);
        let (pi, _) = primal_update(&spec, &[0.0]).unwrap();
        assert_eq!(pi.as_deterministic(), Some(vec![0]));
        let (pi, _) = primal_update(&spec, &[1.0]).unwrap();
        assert_eq!(pi.as_deterministic(), Some(vec![1]));

        let mut zero_cost = spec.clone();
        zero_cost.costs[0] = zero_cost.costs[0].scaled(0.0);
        for l in [0.0, 0.5, 3.0] {
            let (pi, _) = primal_update(&zero_cost, &[l]).unwrap();
            assert_eq!(pi.as_deterministic(), Some(vec![0]));
        }
    }

    #[test]
    fn single_iteration_is_unconstrained_solution() {
        let spec = single_state(0.5, 0.5);
        let cfg = PdConfig::raw(2.0, 1.0, 0.5, 0.5, vec![0.5], 0.0).unwrap().with_t_cap(Some(1));
        let trace = run_primal_dual(&spec, &cfg, TraceLevel::Full).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.mixture.len(), 1);
        let (pi, _) = primal_update(&spec, &[0.0]).unwrap();
        assert_eq!(trace.mixture.distinct()[0].0, pi);
    }

    #[test]
    fn inactive_constraint_keeps_lambda_at_zero() {
        // r = (1, 0), c = (0, 1), b' = 0: the reward-greedy action is feasible
        let spec = CmdpSpec::new(
            0.5,
            Kernel::new(1, 2, vec![1.0, 1.0]).unwrap(),
            Table::from_nested(&[vec![1.0, 0.0]]).unwrap(),
            vec![Table::from_nested(&[vec![0.0, 1.0]]).unwrap()],
            vec![0.0],
            vec![1.0],
        )
        .unwrap();
        let cfg = PdConfig::raw(1.0, 0.0, 0.1, 0.5, vec![0.0], 0.0).unwrap();
        let trace = run_primal_dual(&spec, &cfg, TraceLevel::Full).unwrap();
        assert_eq!(trace.records.len() as u64, cfg.t);
        assert!(trace.records.iter().all(|r| r.lambda == vec![0.0]));
        assert!((trace.mean_reward - 2.0).abs() < 1e-12);
    }
}
