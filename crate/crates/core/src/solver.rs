//! Value iteration for unconstrained tabular MDPs and the action-gap
//! diagnostic of the resulting empirical MDP.

use crate::error::{CmdpError, Result};
use crate::mdp::{Kernel, TabularPolicy, Table};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub v_star: Vec<f64>,
    pub q_star: Table,
    /// Greedy action per state (lowest index among ties).
    pub actions: Vec<usize>,
    pub policy: TabularPolicy,
    pub iterations: usize,
    /// `||V_{k+1} - V_k||_inf` at the last sweep.
    pub residual: f64,
}

/// One Bellman optimality sweep: returns `(T V, Q)` where
/// `Q(s,a) = f(s,a) + gamma * sum_s' P(s'|s,a) V(s')`.
pub fn bellman_backup(kernel: &Kernel, f: &Table, gamma: f64, v: &[f64]) -> (Vec<f64>, Table) {
    let (ns, na) = (kernel.num_states(), kernel.num_actions());
    let mut q = Table::filled(ns, na, 0.0);
    let mut next = vec![f64::NEG_INFINITY; ns];
    for s in 0..ns {
        for a in 0..na {
            let qa = f.get(s, a) + gamma * kernel.expect(s, a, v);
            q.set(s, a, qa);
            if qa > next[s] {
                next[s] = qa;
            }
        }
    }
    (next, q)
}

fn greedy_actions(q: &Table) -> Vec<usize> {
    (0..q.num_states())
        .map(|s| {
            let row = q.row(s);
            let mut best = 0;
            for (a, &x) in row.iter().enumerate().skip(1) {
                if x > row[best] {
                    best = a;
                }
            }
            best
        })
        .collect()
}

/// Sweep-to-sweep change at which iteration stops for a target accuracy
/// `tol`; never looser than `tol` itself.
fn stop_threshold(tol: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        tol
    } else {
        tol.min(tol * (1.0 - gamma) / (2.0 * gamma))
    }
}

pub fn value_iteration(kernel: &Kernel, f: &Table, gamma: f64, tol: f64) -> Result<SolveResult> {
    value_iteration_from(kernel, f, gamma, tol, None)
}

/// Value iteration started from `init` (zero when `None`).
pub fn value_iteration_from(
    kernel: &Kernel,
    f: &Table,
    gamma: f64,
    tol: f64,
    init: Option<&[f64]>,
) -> Result<SolveResult> {
    let (ns, na) = (kernel.num_states(), kernel.num_actions());
    if !(tol > 0.0) {
        return Err(CmdpError::param("tol", tol, "tolerance must be positive"));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(CmdpError::param("gamma", gamma, "discount must lie in [0,1)"));
    }
    if f.num_states() != ns || f.num_actions() != na {
        return Err(CmdpError::mismatch("objective entries", ns * na, f.as_slice().len()));
    }
    if f.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(CmdpError::NonFinite("objective"));
    }

    let threshold = stop_threshold(tol, gamma);
    let mut v = match init {
        Some(init) if init.len() == ns && init.iter().all(|x| x.is_finite()) => init.to_vec(),
        Some(init) => return Err(CmdpError::mismatch("warm start", ns, init.len())),
        None => vec![0.0; ns],
    };

    for k in 1..=MAX_ITERATIONS {
        let (next, q) = bellman_backup(kernel, f, gamma, &v);
        let residual = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual <= threshold {
            let actions = greedy_actions(&q);
            let policy = TabularPolicy::deterministic(&actions, na)?;
            return Ok(SolveResult {
                v_star: next,
                q_star: q,
                actions,
                policy,
                iterations: k,
                residual,
            });
        }
        v = next;
    }
    Err(CmdpError::NotConverged {
        iterations: MAX_ITERATIONS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// `min_s [V*(s) - max_{a != greedy(s)} Q*(s,a)]`; `+inf` with one action.
    pub iota_hat: f64,
    pub argmin_state: Option<usize>,
}

pub fn iota_gap(solve: &SolveResult) -> GapReport {
    let q = &solve.q_star;
    if q.num_actions() < 2 {
        return GapReport {
            iota_hat: f64::INFINITY,
            argmin_state: None,
        };
    }
    let mut best = GapReport {
        iota_hat: f64::INFINITY,
        argmin_state: None,
    };
    for s in 0..q.num_states() {
        let chosen = solve.actions[s];
        let runner_up = q
            .row(s)
            .iter()
            .enumerate()
            .filter(|&(a, _)| a != chosen)
            .map(|(_, &x)| x)
            .fold(f64::NEG_INFINITY, f64::max);
        let gap = solve.v_star[s] - runner_up;
        if gap < best.iota_hat {
            best = GapReport {
                iota_hat: gap,
                argmin_state: Some(s),
            };
        }
    }
    best
}
