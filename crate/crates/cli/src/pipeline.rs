//! End-to-end runs: sample the true model, build the empirical CMDP, run the
//! primal-dual loop and score the mixture against the exact optimum.

use std::time::Instant;

use cmdp_core::lp_oracle::solve_optimum;
use cmdp_core::{
    compute_bounds, estimate_kernel, evaluate_mixture, instantiate_relaxed, instantiate_strict, perturb_rewards,
    run_primal_dual, solve_cmdp_lp, BoundInputs, CmdpSpec, GenerativeModel, Objective, PdConfig, TraceLevel,
};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Iteration cap applied unless the caller asks otherwise. The prescribed
/// iteration counts for the relaxed and strict settings run to 1e8 and beyond.
pub const DEFAULT_T_CAP: u64 = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Raw,
    Relaxed,
    Strict,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Raw => "raw",
            Mode::Relaxed => "relaxed",
            Mode::Strict => "strict",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub mode: Mode,
    pub epsilon: f64,
    pub delta: f64,
    /// Samples per state-action pair.
    pub samples: u64,
    pub seed: u64,
    pub t_cap: Option<u64>,
    /// Raw mode: dual box `U` (default `‖λ̂*‖∞ + 1`).
    pub upper: Option<f64>,
    /// Raw mode: target accuracy (default `epsilon`).
    pub eps_opt: Option<f64>,
    /// Raw mode: perturbation size (default `ε(1-γ)/8`).
    pub omega: Option<f64>,
    /// Raw mode: `‖λ*‖∞` to size `T` and `ε₁` (default: from the empirical LP).
    pub lambda_star_norm: Option<f64>,
    /// Strict mode: lower bound on the Slater constant used in place of the
    /// exact one.
    pub zeta_bound: Option<f64>,
}

impl PipelineOptions {
    pub fn new(mode: Mode, epsilon: f64, delta: f64, samples: u64, seed: u64) -> Self {
        PipelineOptions {
            mode,
            epsilon,
            delta,
            samples,
            seed,
            t_cap: Some(DEFAULT_T_CAP),
            upper: None,
            eps_opt: None,
            omega: None,
            lambda_star_norm: None,
            zeta_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub num_states: usize,
    pub num_actions: usize,
    pub d: usize,
    pub gamma: f64,
    pub thresholds: Vec<f64>,
}

/// Every resolved parameter of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub mode: Mode,
    pub samples: u64,
    pub seed: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub t: u64,
    pub t_theoretical: f64,
    pub t_truncated: bool,
    pub eta: f64,
    pub eps1: f64,
    pub upper: f64,
    pub lambda_star_bound: f64,
    pub eps_opt: f64,
    pub omega: f64,
    pub b_prime: Vec<f64>,
    pub delta_shift: Option<f64>,
    /// Slater constant fed to the strict instantiation.
    pub zeta_used: Option<f64>,
}

/// Exact quantities of the true model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleBlock {
    pub v_star: f64,
    pub lambda_star: Vec<f64>,
    pub zeta_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBlock {
    /// Mixture values on the true model.
    pub v_reward: f64,
    pub v_costs: Vec<f64>,
    /// Mixture values on the empirical model, perturbed reward.
    pub v_hat_reward: f64,
    pub v_hat_costs: Vec<f64>,
    /// `max(0, b_i - V_{c_i})` on the true model.
    pub violations: Vec<f64>,
    pub max_violation: f64,
    /// `V* - V_r` on the true model.
    pub subopt: f64,
    /// Optimum of the empirical CMDP, `None` when it is infeasible.
    pub v_hat_star: Option<f64>,
    /// Whether `V̂_{c_i} >= b′_i - ε_opt` for every constraint.
    pub empirical_check_passed: bool,
    pub distinct_policies: usize,
    pub min_iota_hat: f64,
    pub final_lambda: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsBlock {
    pub iota: f64,
    pub log_iota: f64,
    pub c_delta: f64,
    pub c_prime_delta: f64,
    pub b_delta_n: f64,
    /// Per-pair sample budget the data-dependent guarantee asks for.
    pub n_required: f64,
    pub n_required_fixed_policy: f64,
    pub samples_sufficient: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Runtime {
    pub wall_clock_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: InstanceSummary,
    pub config: ConfigEcho,
    pub oracle: OracleBlock,
    pub result: ResultBlock,
    pub bounds: Option<BoundsBlock>,
    pub runtime: Runtime,
}

impl RunReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check_options(opts: &PipelineOptions) -> Result<()> {
    if opts.samples == 0 {
        return Err(LabError::Usage("--samples must be at least 1".into()));
    }
    if !(opts.epsilon > 0.0) || !opts.epsilon.is_finite() {
        return Err(LabError::Usage(format!("--epsilon must be positive, got {}", opts.epsilon)));
    }
    if !(opts.delta > 0.0 && opts.delta < 1.0) {
        return Err(LabError::Usage(format!("--delta must lie in (0,1), got {}", opts.delta)));
    }
    Ok(())
}

pub fn bounds_block(spec: &CmdpSpec, cfg: &PdConfig, opts: &PipelineOptions) -> Option<BoundsBlock> {
    let b = compute_bounds(BoundInputs {
        delta: opts.delta,
        omega: cfg.omega,
        d: spec.num_constraints(),
        upper: cfg.upper,
        eps1: cfg.eps1,
        num_states: spec.num_states(),
        num_actions: spec.num_actions(),
        gamma: spec.gamma,
        n: opts.samples,
    })
    .ok()?;
    Some(BoundsBlock {
        iota: b.iota,
        log_iota: b.log_iota,
        c_delta: b.c_delta,
        c_prime_delta: b.c_prime_delta,
        b_delta_n: b.b_delta_n,
        n_required: b.n_required,
        n_required_fixed_policy: b.n_required_fixed_policy,
        samples_sufficient: opts.samples as f64 >= b.n_required,
    })
}

fn raw_omega(spec: &CmdpSpec, opts: &PipelineOptions) -> f64 {
    opts.omega.unwrap_or(opts.epsilon * (1.0 - spec.gamma) / 8.0)
}

/// Resolves the primal-dual parameters for `opts.mode`, with the iteration
/// cap applied. Raw mode needs `lambda_norm` (or `opts.lambda_star_norm`);
/// strict mode uses `opts.zeta_bound` when set and `zeta_star` otherwise.
/// Also returns the Slater constant the strict setting was built from.
pub fn instantiate_mode(
    spec: &CmdpSpec,
    opts: &PipelineOptions,
    zeta_star: f64,
    lambda_norm: Option<f64>,
) -> Result<(PdConfig, Option<f64>)> {
    let b = &spec.thresholds;
    let (cfg, zeta_used) = match opts.mode {
        Mode::Relaxed => (instantiate_relaxed(opts.epsilon, opts.delta, spec.gamma, b)?, None),
        Mode::Strict => {
            let zeta = opts.zeta_bound.unwrap_or(zeta_star);
            if !(zeta > 0.0) {
                return Err(LabError::NotStrictlyFeasible(zeta));
            }
            (instantiate_strict(opts.epsilon, opts.delta, spec.gamma, b, zeta)?, Some(zeta))
        }
        Mode::Raw => {
            let norm = opts
                .lambda_star_norm
                .or(lambda_norm)
                .ok_or_else(|| LabError::Usage("raw mode needs a bound on the optimal dual norm".into()))?;
            let upper = opts.upper.unwrap_or(norm + 1.0);
            let eps_opt = opts.eps_opt.unwrap_or(opts.epsilon);
            let cfg = PdConfig::raw(upper, norm, eps_opt, spec.gamma, b.clone(), raw_omega(spec, opts))?;
            (cfg, None)
        }
    };
    Ok((cfg.with_t_cap(opts.t_cap), zeta_used))
}

pub fn run_pipeline(spec: &CmdpSpec, opts: &PipelineOptions) -> Result<RunReport> {
    let start = Instant::now();
    check_options(opts)?;
    let d = spec.num_constraints();

    let oracle = solve_cmdp_lp(spec)?;
    let optimum = oracle.optimum.as_ref().ok_or(LabError::Infeasible)?;
    let zeta_star = oracle.zeta_star();

    let model = GenerativeModel::new(spec, opts.seed);
    let counts = estimate_kernel(&model, opts.samples)?;

    let (cfg, zeta_used, empirical) = match opts.mode {
        Mode::Relaxed | Mode::Strict => {
            let (cfg, zeta_used) = instantiate_mode(spec, opts, zeta_star, None)?;
            let perturbed = perturb_rewards(&spec.reward, cfg.omega, opts.seed)?;
            let empirical = counts.empirical_cmdp(spec, &perturbed.r_p, cfg.b_prime.clone())?;
            (cfg, zeta_used, empirical)
        }
        Mode::Raw => {
            let perturbed = perturb_rewards(&spec.reward, raw_omega(spec, opts), opts.seed)?;
            let empirical = counts.empirical_cmdp(spec, &perturbed.r_p, spec.thresholds.clone())?;
            let lambda_norm = match opts.lambda_star_norm {
                Some(x) => x,
                None => solve_optimum(&empirical)?
                    .ok_or(LabError::EmpiricalInfeasible)?
                    .lambda_star_norm(),
            };
            let (cfg, _) = instantiate_mode(spec, opts, zeta_star, Some(lambda_norm))?;
            (cfg, None, empirical)
        }
    };

    let trace = run_primal_dual(&empirical, &cfg, TraceLevel::Summary)?;
    let mix = &trace.mixture;

    let v_reward = evaluate_mixture(spec, Objective::Reward, mix)?;
    let v_costs = (0..d)
        .map(|i| evaluate_mixture(spec, Objective::Cost(i), mix))
        .collect::<cmdp_core::Result<Vec<_>>>()?;
    let v_hat_reward = evaluate_mixture(&empirical, Objective::Reward, mix)?;
    let v_hat_costs = (0..d)
        .map(|i| evaluate_mixture(&empirical, Objective::Cost(i), mix))
        .collect::<cmdp_core::Result<Vec<_>>>()?;
    let violations: Vec<f64> = spec
        .thresholds
        .iter()
        .zip(&v_costs)
        .map(|(b, v)| (b - v).max(0.0))
        .collect();
    let max_violation = violations.iter().copied().fold(0.0, f64::max);
    let empirical_check_passed = v_hat_costs
        .iter()
        .zip(&cfg.b_prime)
        .all(|(v, b)| *v >= b - cfg.eps_opt);
    let v_hat_star = solve_optimum(&empirical)?.map(|o| o.v_star);

    let bounds = bounds_block(spec, &cfg, opts);
    let config = ConfigEcho {
        mode: opts.mode,
        samples: opts.samples,
        seed: opts.seed,
        epsilon: opts.epsilon,
        delta: opts.delta,
        t: cfg.t,
        t_theoretical: cfg.t_theoretical,
        t_truncated: cfg.is_truncated(),
        eta: cfg.eta,
        eps1: cfg.eps1,
        upper: cfg.upper,
        lambda_star_bound: cfg.lambda_star_bound,
        eps_opt: cfg.eps_opt,
        omega: cfg.omega,
        b_prime: cfg.b_prime.clone(),
        delta_shift: cfg.delta_shift,
        zeta_used,
    };

    Ok(RunReport {
        instance: InstanceSummary {
            num_states: spec.num_states(),
            num_actions: spec.num_actions(),
            d,
            gamma: spec.gamma,
            thresholds: spec.thresholds.clone(),
        },
        config,
        oracle: OracleBlock {
            v_star: optimum.v_star,
            lambda_star: optimum.lambda_star.clone(),
            zeta_star,
        },
        result: ResultBlock {
            subopt: optimum.v_star - v_reward,
            v_reward,
            v_costs,
            v_hat_reward,
            v_hat_costs,
            violations,
            max_violation,
            v_hat_star,
            empirical_check_passed,
            distinct_policies: mix.distinct().len(),
            min_iota_hat: trace.min_iota_hat,
            final_lambda: trace.final_lambda.clone(),
        },
        bounds,
        runtime: Runtime {
            wall_clock_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}
