//! Tabular CMDP data model and exact evaluation of stationary policies.
//!
//! All tables are stored row-major in flat vectors: a state-action table is
//! indexed `[s * |A| + a]` and a transition kernel `[(s * |A| + a) * |S| + s']`.

use std::fmt;

use crate::error::{CmdpError, Result};
use crate::linalg::solve_dense;

/// Tolerance on probability sums accepted at ingestion.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// Transition kernel `P(s' | s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl Kernel {
    pub fn new(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(CmdpError::mismatch("kernel shape", 1, 0));
        }
        let expected = num_states * num_actions * num_states;
        if probs.len() != expected {
            return Err(CmdpError::mismatch("kernel entries", expected, probs.len()));
        }
        Ok(Kernel {
            num_states,
            num_actions,
            probs,
        })
    }

    /// Builds a kernel from nested `[s][a][s']` rows.
    pub fn from_nested(rows: &[Vec<Vec<f64>>]) -> Result<Self> {
        let num_states = rows.len();
        let num_actions = rows.first().map_or(0, Vec::len);
        let mut probs = Vec::with_capacity(num_states * num_actions * num_states);
        for (s, per_state) in rows.iter().enumerate() {
            if per_state.len() != num_actions {
                return Err(CmdpError::mismatch(
                    format!("kernel[{s}] action count"),
                    num_actions,
                    per_state.len(),
                ));
            }
            for (a, row) in per_state.iter().enumerate() {
                if row.len() != num_states {
                    return Err(CmdpError::mismatch(
                        format!("kernel[{s}][{a}] length"),
                        num_states,
                        row.len(),
                    ));
                }
                probs.extend_from_slice(row);
            }
        }
        Kernel::new(num_states, num_actions, probs)
    }

    /// Kernel where `(s, a)` moves to `next[s][a]` with probability one.
    pub fn deterministic(num_states: usize, next: &[Vec<usize>]) -> Result<Self> {
        let num_actions = next.first().map_or(0, Vec::len);
        let mut probs = vec![0.0; num_states * num_actions * num_states];
        for (s, per_state) in next.iter().enumerate() {
            for (a, &target) in per_state.iter().enumerate() {
                if target >= num_states {
                    return Err(CmdpError::IndexOutOfRange {
                        what: "next state",
                        index: target,
                        size: num_states,
                    });
                }
                probs[(s * num_actions + a) * num_states + target] = 1.0;
            }
        }
        Kernel::new(num_states, num_actions, probs)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.probs[start..start + self.num_states]
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.probs[(s * self.num_actions + a) * self.num_states + next]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Expected value of `v` under `P(· | s, a)`.
    #[inline]
    pub fn expect(&self, s: usize, a: usize, v: &[f64]) -> f64 {
        self.row(s, a).iter().zip(v).map(|(p, x)| p * x).sum()
    }
}

/// A state-action table `l[s][a]` (reward, cost or combined objective).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl Table {
    pub fn new(num_states: usize, num_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_states * num_actions {
            return Err(CmdpError::mismatch(
                "table entries",
                num_states * num_actions,
                values.len(),
            ));
        }
        Ok(Table {
            num_states,
            num_actions,
            values,
        })
    }

    pub fn filled(num_states: usize, num_actions: usize, value: f64) -> Self {
        Table {
            num_states,
            num_actions,
            values: vec![value; num_states * num_actions],
        }
    }

    pub fn from_nested(rows: &[Vec<f64>]) -> Result<Self> {
        let num_states = rows.len();
        let num_actions = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(num_states * num_actions);
        for (s, row) in rows.iter().enumerate() {
            if row.len() != num_actions {
                return Err(CmdpError::mismatch(
                    format!("table row {s}"),
                    num_actions,
                    row.len(),
                ));
            }
            values.extend_from_slice(row);
        }
        Table::new(num_states, num_actions, values)
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.num_actions)
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, value: f64) {
        self.values[s * self.num_actions + a] = value;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn max_entry(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Table {
        Table {
            num_states: self.num_states,
            num_actions: self.num_actions,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Which objective of a CMDP a value function refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    Reward,
    Cost(usize),
    /// An ad-hoc table passed directly to [`evaluate_table`].
    Custom,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Reward => write!(f, "reward"),
            Objective::Cost(i) => write!(f, "cost[{i}]"),
            Objective::Custom => write!(f, "custom"),
        }
    }
}

/// The CMDP tuple `<S, A, P, r, {c_i}, {b_i}, rho, gamma>`.
///
/// Constraints read `V_{c_i}(rho) >= b_i`: costs act as constraint rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct CmdpSpec {
    pub gamma: f64,
    pub kernel: Kernel,
    pub reward: Table,
    pub costs: Vec<Table>,
    pub thresholds: Vec<f64>,
    pub rho: Vec<f64>,
}

impl CmdpSpec {
    /// Assembles a spec, checking only that shapes agree. Value-level checks
    /// live in [`validate_spec`].
    pub fn new(
        gamma: f64,
        kernel: Kernel,
        reward: Table,
        costs: Vec<Table>,
        thresholds: Vec<f64>,
        rho: Vec<f64>,
    ) -> Result<Self> {
        let (ns, na) = (kernel.num_states(), kernel.num_actions());
        let check_table = |t: &Table, what: &str| -> Result<()> {
            if t.num_states() != ns {
                return Err(CmdpError::mismatch(format!("{what} states"), ns, t.num_states()));
            }
            if t.num_actions() != na {
                return Err(CmdpError::mismatch(format!("{what} actions"), na, t.num_actions()));
            }
            Ok(())
        };
        check_table(&reward, "reward")?;
        for (i, c) in costs.iter().enumerate() {
            check_table(c, &format!("costs[{i}]"))?;
        }
        if costs.len() != thresholds.len() {
            return Err(CmdpError::mismatch(
                "d mismatch (thresholds vs costs)",
                costs.len(),
                thresholds.len(),
            ));
        }
        if rho.len() != ns {
            return Err(CmdpError::mismatch("rho length", ns, rho.len()));
        }
        Ok(CmdpSpec {
            gamma,
            kernel,
            reward,
            costs,
            thresholds,
            rho,
        })
    }

    pub fn num_states(&self) -> usize {
        self.kernel.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.kernel.num_actions()
    }

    pub fn num_constraints(&self) -> usize {
        self.costs.len()
    }

    pub fn objective_table(&self, objective: Objective) -> Result<&Table> {
        match objective {
            Objective::Reward => Ok(&self.reward),
            Objective::Cost(i) => self.costs.get(i).ok_or(CmdpError::IndexOutOfRange {
                what: "cost",
                index: i,
                size: self.costs.len(),
            }),
            Objective::Custom => Err(CmdpError::InvalidPolicy(
                "custom objectives must be evaluated with evaluate_table".into(),
            )),
        }
    }

    /// Same CMDP with a different kernel, reward and thresholds; used to form
    /// the empirical CMDP.
    pub fn with_model(&self, kernel: Kernel, reward: Table, thresholds: Vec<f64>) -> Result<Self> {
        CmdpSpec::new(
            self.gamma,
            kernel,
            reward,
            self.costs.clone(),
            thresholds,
            self.rho.clone(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    /// Out-of-range thresholds: the instance is legal but may be vacuous or
    /// infeasible, which the LP oracle reports properly.
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub severity: Severity,
    pub field: &'static str,
    pub index: Vec<usize>,
    pub observed: f64,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationResult {
    pub violations: Vec<Violation>,
}

impl ValidationResult {
    pub fn is_ok(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations
            .iter()
            .filter(|v| v.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Violation> {
        self.violations
            .iter()
            .filter(|v| v.severity == Severity::Warning)
    }
}

/// Checks every value-level invariant of a spec and lists each violation.
pub fn validate_spec(spec: &CmdpSpec) -> ValidationResult {
    let mut out = Vec::new();
    let mut push = |severity, field, index: Vec<usize>, observed: f64, message: String| {
        out.push(Violation {
            severity,
            field,
            index,
            observed,
            message,
        })
    };

    if !(0.0..1.0).contains(&spec.gamma) {
        push(
            Severity::Error,
            "gamma",
            vec![],
            spec.gamma,
            format!("gamma {} outside [0,1)", spec.gamma),
        );
    }

    let (ns, na) = (spec.num_states(), spec.num_actions());
    for s in 0..ns {
        for a in 0..na {
            let row = spec.kernel.row(s, a);
            for (next, &p) in row.iter().enumerate() {
                if !(p >= 0.0) || !p.is_finite() {
                    push(
                        Severity::Error,
                        "kernel",
                        vec![s, a, next],
                        p,
                        format!("kernel entry (s={s},a={a},s'={next}) = {p} is negative or non-finite"),
                    );
                }
            }
            let sum: f64 = row.iter().sum();
            if !((sum - 1.0).abs() <= PROB_SUM_TOL) {
                push(
                    Severity::Error,
                    "kernel",
                    vec![s, a],
                    sum,
                    format!("kernel row (s={s},a={a}) sums to {sum}"),
                );
            }
        }
    }

    for (s, &p) in spec.rho.iter().enumerate() {
        if !(p >= 0.0) || !p.is_finite() {
            push(
                Severity::Error,
                "rho",
                vec![s],
                p,
                format!("rho[{s}] = {p} is negative or non-finite"),
            );
        }
    }
    let rho_sum: f64 = spec.rho.iter().sum();
    if !((rho_sum - 1.0).abs() <= PROB_SUM_TOL) {
        push(
            Severity::Error,
            "rho",
            vec![],
            rho_sum,
            format!("rho sums to {rho_sum}"),
        );
    }

    let mut check_table = |table: &Table, field: &'static str, label: String, extra: Option<usize>| {
        for s in 0..ns {
            for a in 0..na {
                let v = table.get(s, a);
                if !(0.0..=1.0).contains(&v) {
                    let mut index = extra.into_iter().collect::<Vec<_>>();
                    index.extend([s, a]);
                    push(
                        Severity::Error,
                        field,
                        index,
                        v,
                        format!("{label} out of [0,1] at (s={s},a={a}): {v}"),
                    );
                }
            }
        }
    };
    check_table(&spec.reward, "reward", "reward".into(), None);
    for (i, c) in spec.costs.iter().enumerate() {
        check_table(c, "costs", format!("cost[{i}]"), Some(i));
    }

    if spec.gamma < 1.0 {
        let horizon = 1.0 / (1.0 - spec.gamma);
        for (i, &b) in spec.thresholds.iter().enumerate() {
            if !(0.0..=horizon).contains(&b) {
                out.push(Violation {
                    severity: Severity::Warning,
                    field: "thresholds",
                    index: vec![i],
                    observed: b,
                    message: format!("threshold[{i}] = {b} outside [0, 1/(1-gamma)] = [0, {horizon}]"),
                });
            }
        }
    }

    ValidationResult { violations: out }
}

/// Stationary stochastic policy `pi(a | s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl TabularPolicy {
    pub fn new(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != num_states * num_actions {
            return Err(CmdpError::mismatch(
                "policy entries",
                num_states * num_actions,
                probs.len(),
            ));
        }
        for s in 0..num_states {
            let row = &probs[s * num_actions..(s + 1) * num_actions];
            if row.iter().any(|p| !(*p >= 0.0)) {
                return Err(CmdpError::InvalidPolicy(format!("row {s} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_SUM_TOL {
                return Err(CmdpError::InvalidPolicy(format!("row {s} sums to {sum}")));
            }
        }
        Ok(TabularPolicy {
            num_states,
            num_actions,
            probs,
        })
    }

    pub fn from_nested(rows: &[Vec<f64>]) -> Result<Self> {
        let t = Table::from_nested(rows)?;
        TabularPolicy::new(t.num_states, t.num_actions, t.values)
    }

    pub fn deterministic(actions: &[usize], num_actions: usize) -> Result<Self> {
        let mut probs = vec![0.0; actions.len() * num_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= num_actions {
                return Err(CmdpError::IndexOutOfRange {
                    what: "action",
                    index: a,
                    size: num_actions,
                });
            }
            probs[s * num_actions + a] = 1.0;
        }
        Ok(TabularPolicy {
            num_states: actions.len(),
            num_actions,
            probs,
        })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        TabularPolicy {
            num_states,
            num_actions,
            probs: vec![1.0 / num_actions as f64; num_states * num_actions],
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.num_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        self.probs
            .chunks(self.num_actions)
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// The action chosen in every state if the policy is deterministic.
    pub fn as_deterministic(&self) -> Option<Vec<usize>> {
        (0..self.num_states)
            .map(|s| self.row(s).iter().position(|&p| p == 1.0))
            .collect()
    }

    fn check_dims(&self, num_states: usize, num_actions: usize) -> Result<()> {
        if self.num_states != num_states {
            return Err(CmdpError::mismatch("policy states", num_states, self.num_states));
        }
        if self.num_actions != num_actions {
            return Err(CmdpError::mismatch("policy actions", num_actions, self.num_actions));
        }
        Ok(())
    }
}

/// Uniform mixture over the `T` iterates of a primal-dual run.
///
/// Repeated iterates are stored once with a multiplicity, so a mixture over
/// millions of (mostly repeated) deterministic policies stays small. Every
/// iterate carries weight `1/T`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MixturePolicy {
    components: Vec<(TabularPolicy, u64)>,
    total: u64,
}

impl MixturePolicy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn uniform(components: Vec<TabularPolicy>) -> Result<Self> {
        if components.is_empty() {
            return Err(CmdpError::EmptyMixture);
        }
        let mut mix = MixturePolicy::new();
        for p in components {
            mix.push(p);
        }
        Ok(mix)
    }

    pub fn push(&mut self, policy: TabularPolicy) {
        self.push_n(policy, 1);
    }

    pub fn push_n(&mut self, policy: TabularPolicy, count: u64) {
        if count == 0 {
            return;
        }
        self.total += count;
        match self.components.iter_mut().find(|(p, _)| *p == policy) {
            Some((_, n)) => *n += count,
            None => self.components.push((policy, count)),
        }
    }

    /// Number of iterates `T` (counting repeats).
    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Distinct component policies with their multiplicities.
    pub fn distinct(&self) -> &[(TabularPolicy, u64)] {
        &self.components
    }

    /// Distinct components with their mixture weights (multiplicity / T).
    pub fn weighted(&self) -> impl Iterator<Item = (&TabularPolicy, f64)> {
        let t = self.total as f64;
        self.components.iter().map(move |(p, n)| (p, *n as f64 / t))
    }
}

/// Exact value functions of one objective under one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueReport {
    pub v: Vec<f64>,
    pub q: Table,
    pub scalar_v: f64,
    pub objective: Objective,
}

/// Exact `V^pi` and `Q^pi` of an arbitrary table under the instance's dynamics.
///
/// Solves `(I - gamma P_pi) V = l_pi` directly.
pub fn evaluate_table(
    kernel: &Kernel,
    gamma: f64,
    rho: &[f64],
    table: &Table,
    policy: &TabularPolicy,
) -> Result<ValueReport> {
    let (ns, na) = (kernel.num_states(), kernel.num_actions());
    policy.check_dims(ns, na)?;
    if table.num_states() != ns || table.num_actions() != na {
        return Err(CmdpError::mismatch(
            "objective table entries",
            ns * na,
            table.num_states() * table.num_actions(),
        ));
    }
    if rho.len() != ns {
        return Err(CmdpError::mismatch("rho length", ns, rho.len()));
    }

    let mut system = vec![0.0; ns * ns];
    let mut rhs = vec![0.0; ns];
    for s in 0..ns {
        system[s * ns + s] = 1.0;
        for a in 0..na {
            let pa = policy.prob(s, a);
            if pa == 0.0 {
                continue;
            }
            rhs[s] += pa * table.get(s, a);
            for (next, &p) in kernel.row(s, a).iter().enumerate() {
                system[s * ns + next] -= gamma * pa * p;
            }
        }
    }
    solve_dense(&mut system, &mut rhs, ns)?;
    let v = rhs;

    let mut q = Table::filled(ns, na, 0.0);
    for s in 0..ns {
        for a in 0..na {
            q.set(s, a, table.get(s, a) + gamma * kernel.expect(s, a, &v));
        }
    }
    let scalar_v = rho.iter().zip(&v).map(|(p, x)| p * x).sum();
    Ok(ValueReport {
        v,
        q,
        scalar_v,
        objective: Objective::Custom,
    })
}

/// `V_l^pi` and `Q_l^pi` for the instance's reward or one of its costs.
pub fn policy_evaluation(
    spec: &CmdpSpec,
    objective: Objective,
    policy: &TabularPolicy,
) -> Result<ValueReport> {
    let table = spec.objective_table(objective)?;
    let mut report = evaluate_table(&spec.kernel, spec.gamma, &spec.rho, table, policy)?;
    report.objective = objective;
    Ok(report)
}

/// Value of a mixture: the average of its components' values at rho.
pub fn evaluate_mixture(spec: &CmdpSpec, objective: Objective, mix: &MixturePolicy) -> Result<f64> {
    if mix.is_empty() {
        return Err(CmdpError::EmptyMixture);
    }
    let mut acc = 0.0;
    for (policy, count) in mix.distinct() {
        acc += *count as f64 * policy_evaluation(spec, objective, policy)?.scalar_v;
    }
    Ok(acc / mix.len() as f64)
}

/// `f = r_p + sum_i lambda_i c_i`, the per-iteration objective of the primal
/// step.
pub fn combined_objective(reward: &Table, costs: &[Table], lambda: &[f64]) -> Result<Table> {
    if lambda.len() != costs.len() {
        return Err(CmdpError::mismatch("lambda length", costs.len(), lambda.len()));
    }
    if let Some(&bad) = lambda.iter().find(|l| !(**l >= 0.0)) {
        return Err(CmdpError::param("lambda", bad, "multipliers must be non-negative"));
    }
    let mut out = reward.clone();
    for (c, &l) in costs.iter().zip(lambda) {
        if l == 0.0 {
            continue;
        }
        for (o, v) in out.values.iter_mut().zip(&c.values) {
            *o += l * v;
        }
    }
    Ok(out)
}
