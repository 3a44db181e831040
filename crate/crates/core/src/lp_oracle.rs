//! Exact CMDP ground truth via the occupancy-measure linear program.
//!
//! Variables are `mu(s,a) >= 0` (column `s * |A| + a`). Rows:
//! flow conservation `sum_a mu(s,a) - gamma sum_{s',a'} P(s|s',a') mu(s',a') = rho(s)`
//! for every state, then one `sum mu c_i >= b_i` row per constraint. Values
//! are unnormalized: `V_l^pi(rho) = sum mu l`, total mass `1/(1-gamma)`.

use crate::error::{CmdpError, Result};
use crate::linalg::solve_dense;
use crate::mdp::{policy_evaluation, CmdpSpec, Objective, TabularPolicy, Table};
use crate::simplex::{simplex_solve, LinearProgram, LpSolution, Relation};

/// Largest `|S| * |A|` accepted by [`brute_force_small`].
pub const BRUTE_FORCE_MAX_PAIRS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMeasure {
    pub mu: Table,
}

impl OccupancyMeasure {
    pub fn total_mass(&self) -> f64 {
        self.mu.as_slice().iter().sum()
    }

    /// `sum mu l`.
    pub fn value(&self, table: &Table) -> f64 {
        self.mu
            .as_slice()
            .iter()
            .zip(table.as_slice())
            .map(|(m, l)| m * l)
            .sum()
    }

    /// `pi(a|s) = mu(s,a) / sum_a mu(s,a)`, uniform where the state carries no
    /// mass.
    pub fn policy(&self) -> TabularPolicy {
        let (ns, na) = (self.mu.num_states(), self.mu.num_actions());
        let mut probs = vec![0.0; ns * na];
        for s in 0..ns {
            let row = self.mu.row(s);
            let mass: f64 = row.iter().map(|m| m.max(0.0)).sum();
            for a in 0..na {
                probs[s * na + a] = if mass > 1e-12 {
                    row[a].max(0.0) / mass
                } else {
                    1.0 / na as f64
                };
            }
        }
        TabularPolicy::new(ns, na, probs).expect("normalized rows")
    }

    /// Per-state flow-conservation residuals.
    pub fn flow_residuals(&self, spec: &CmdpSpec) -> Vec<f64> {
        let (ns, na) = (spec.num_states(), spec.num_actions());
        let mut inflow = spec.rho.clone();
        for s in 0..ns {
            for a in 0..na {
                let m = self.mu.get(s, a);
                for (next, p) in spec.kernel.row(s, a).iter().enumerate() {
                    inflow[next] += spec.gamma * p * m;
                }
            }
        }
        (0..ns)
            .map(|s| (self.mu.row(s).iter().sum::<f64>() - inflow[s]).abs())
            .collect()
    }

    /// Discounted occupancy of a stationary policy:
    /// `d = (I - gamma P_piᵀ)⁻¹ rho`, `mu(s,a) = d(s) pi(a|s)`.
    pub fn of_policy(spec: &CmdpSpec, policy: &TabularPolicy) -> Result<Self> {
        let (ns, na) = (spec.num_states(), spec.num_actions());
        if policy.num_states() != ns || policy.num_actions() != na {
            return Err(CmdpError::mismatch("policy entries", ns * na, policy.num_states() * policy.num_actions()));
        }
        // row `next`, column `s`: delta - gamma P_pi(next | s)
        let mut system = vec![0.0; ns * ns];
        for s in 0..ns {
            system[s * ns + s] += 1.0;
            for a in 0..na {
                let pa = policy.prob(s, a);
                if pa == 0.0 {
                    continue;
                }
                for (next, p) in spec.kernel.row(s, a).iter().enumerate() {
                    system[next * ns + s] -= spec.gamma * pa * p;
                }
            }
        }
        let mut d = spec.rho.clone();
        solve_dense(&mut system, &mut d, ns)?;
        let mut mu = Table::filled(ns, na, 0.0);
        for s in 0..ns {
            for a in 0..na {
                mu.set(s, a, d[s] * policy.prob(s, a));
            }
        }
        Ok(OccupancyMeasure { mu })
    }
}

/// Optimal solution of a feasible CMDP.
#[derive(Debug, Clone, PartialEq)]
pub struct CmdpOptimum {
    pub v_star: f64,
    pub policy: TabularPolicy,
    pub occupancy: OccupancyMeasure,
    /// Multipliers of the cost rows; non-unique when the optimal basis is
    /// degenerate, in which case this is the terminating basis' choice.
    pub lambda_star: Vec<f64>,
    /// `sum mu c_i` at the optimum.
    pub constraint_values: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

impl CmdpOptimum {
    pub fn lambda_star_norm(&self) -> f64 {
        self.lambda_star.iter().fold(0.0, |m, l| m.max(l.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlaterResult {
    /// `max_pi min_i (V_{c_i}^pi(rho) - b_i)`; `<= 0` means no strictly
    /// feasible policy exists.
    pub zeta_star: f64,
    pub policy: TabularPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub feasible: bool,
    pub optimum: Option<CmdpOptimum>,
    pub slater: SlaterResult,
}

impl OracleResult {
    pub fn v_star(&self) -> Option<f64> {
        self.optimum.as_ref().map(|o| o.v_star)
    }

    pub fn zeta_star(&self) -> f64 {
        self.slater.zeta_star
    }
}

fn flow_program(spec: &CmdpSpec, objective: Vec<f64>) -> Result<LinearProgram> {
    let (ns, na) = (spec.num_states(), spec.num_actions());
    let nvars = objective.len();
    let mut lp = LinearProgram::minimize(objective);
    for s in 0..ns {
        let mut row = vec![0.0; nvars];
        for a in 0..na {
            row[s * na + a] += 1.0;
        }
        for sp in 0..ns {
            for a in 0..na {
                row[sp * na + a] -= spec.gamma * spec.kernel.prob(sp, a, s);
            }
        }
        lp.add_constraint(row, Relation::Eq, spec.rho[s])?;
    }
    Ok(lp)
}

fn occupancy_from(spec: &CmdpSpec, x: &[f64]) -> OccupancyMeasure {
    let n = spec.num_states() * spec.num_actions();
    let mu = Table::new(spec.num_states(), spec.num_actions(), x[..n].to_vec()).expect("shape");
    OccupancyMeasure { mu }
}

/// Maximizes `sum mu r` over the occupancy polytope subject to the cost rows.
/// Returns `Ok(None)` when no policy satisfies the constraints.
pub fn solve_optimum(spec: &CmdpSpec) -> Result<Option<CmdpOptimum>> {
    let n = spec.num_states() * spec.num_actions();
    let objective = spec.reward.as_slice().iter().map(|r| -r).collect();
    let mut lp = flow_program(spec, objective)?;
    let mut cost_rows = Vec::with_capacity(spec.num_constraints());
    for (c, &b) in spec.costs.iter().zip(&spec.thresholds) {
        cost_rows.push(lp.add_constraint(c.as_slice().to_vec(), Relation::Ge, b)?);
    }
    let sol: LpSolution = match simplex_solve(&lp) {
        Ok(sol) => sol,
        Err(CmdpError::Infeasible) => return Ok(None),
        Err(e) => return Err(e),
    };
    debug_assert_eq!(sol.x.len(), n);
    let occupancy = occupancy_from(spec, &sol.x);
    let lambda_star = cost_rows.iter().map(|&r| sol.duals[r].max(0.0)).collect();
    let constraint_values = spec.costs.iter().map(|c| occupancy.value(c)).collect();
    Ok(Some(CmdpOptimum {
        v_star: -sol.objective,
        policy: occupancy.policy(),
        occupancy,
        lambda_star,
        constraint_values,
        primal_objective: -sol.objective,
        dual_objective: -sol.dual_objective,
    }))
}

/// Largest worst-case constraint margin over all policies.
pub fn slater_constant(spec: &CmdpSpec) -> Result<SlaterResult> {
    let n = spec.num_states() * spec.num_actions();
    // variables: mu, zeta+, zeta-
    let mut objective = vec![0.0; n + 2];
    objective[n] = -1.0;
    objective[n + 1] = 1.0;
    let mut lp = flow_program(spec, objective)?;
    if spec.num_constraints() == 0 {
        // no constraints: every policy has an unbounded margin
        return Ok(SlaterResult {
            zeta_star: f64::INFINITY,
            policy: TabularPolicy::uniform(spec.num_states(), spec.num_actions()),
        });
    }
    for (c, &b) in spec.costs.iter().zip(&spec.thresholds) {
        let mut row = c.as_slice().to_vec();
        row.extend([-1.0, 1.0]);
        lp.add_constraint(row, Relation::Ge, b)?;
    }
    let sol = simplex_solve(&lp)?;
    Ok(SlaterResult {
        zeta_star: sol.x[n] - sol.x[n + 1],
        policy: occupancy_from(spec, &sol.x).policy(),
    })
}

pub fn solve_cmdp_lp(spec: &CmdpSpec) -> Result<OracleResult> {
    let optimum = solve_optimum(spec)?;
    let slater = slater_constant(spec)?;
    Ok(OracleResult {
        feasible: optimum.is_some(),
        optimum,
        slater,
    })
}

/// Independent oracle for tiny instances: enumerates deterministic policies
/// and optimizes over mixtures of their value vectors.
pub fn brute_force_small(spec: &CmdpSpec) -> Result<OracleResult> {
    let (ns, na) = (spec.num_states(), spec.num_actions());
    if ns * na > BRUTE_FORCE_MAX_PAIRS {
        return Err(CmdpError::TooLarge(format!(
            "|S||A| = {} exceeds {}",
            ns * na,
            BRUTE_FORCE_MAX_PAIRS
        )));
    }
    let d = spec.num_constraints();

    let mut vertices = Vec::new();
    let mut actions = vec![0usize; ns];
    loop {
        let policy = TabularPolicy::deterministic(&actions, na)?;
        let v_r = policy_evaluation(spec, Objective::Reward, &policy)?.scalar_v;
        let v_c = (0..d)
            .map(|i| policy_evaluation(spec, Objective::Cost(i), &policy).map(|r| r.scalar_v))
            .collect::<Result<Vec<_>>>()?;
        let occupancy = OccupancyMeasure::of_policy(spec, &policy)?;
        vertices.push((v_r, v_c, occupancy));

        // odometer over |A|^|S|
        let mut s = 0;
        while s < ns {
            actions[s] += 1;
            if actions[s] < na {
                break;
            }
            actions[s] = 0;
            s += 1;
        }
        if s == ns {
            break;
        }
    }
    let k = vertices.len();

    let mix = |weights: &[f64]| -> OccupancyMeasure {
        let mut mu = Table::filled(ns, na, 0.0);
        for (w, (_, _, occ)) in weights.iter().zip(&vertices) {
            for s in 0..ns {
                for a in 0..na {
                    mu.set(s, a, mu.get(s, a) + w * occ.mu.get(s, a));
                }
            }
        }
        OccupancyMeasure { mu }
    };

    let simplex_row = vec![1.0; k];

    let mut lp = LinearProgram::minimize(vertices.iter().map(|(r, _, _)| -r).collect());
    lp.add_constraint(simplex_row.clone(), Relation::Eq, 1.0)?;
    let mut cost_rows = Vec::with_capacity(d);
    for i in 0..d {
        let row = vertices.iter().map(|(_, c, _)| c[i]).collect();
        cost_rows.push(lp.add_constraint(row, Relation::Ge, spec.thresholds[i])?);
    }
    let optimum = match simplex_solve(&lp) {
        Ok(sol) => {
            let occupancy = mix(&sol.x);
            let constraint_values = spec.costs.iter().map(|c| occupancy.value(c)).collect();
            Some(CmdpOptimum {
                v_star: -sol.objective,
                policy: occupancy.policy(),
                occupancy,
                lambda_star: cost_rows.iter().map(|&r| sol.duals[r].max(0.0)).collect(),
                constraint_values,
                primal_objective: -sol.objective,
                dual_objective: -sol.dual_objective,
            })
        }
        Err(CmdpError::Infeasible) => None,
        Err(e) => return Err(e),
    };

    let slater = if d == 0 {
        SlaterResult {
            zeta_star: f64::INFINITY,
            policy: TabularPolicy::uniform(ns, na),
        }
    } else {
        let mut objective = vec![0.0; k + 2];
        objective[k] = -1.0;
        objective[k + 1] = 1.0;
        let mut lp = LinearProgram::minimize(objective);
        let mut row = simplex_row;
        row.extend([0.0, 0.0]);
        lp.add_constraint(row, Relation::Eq, 1.0)?;
        for i in 0..d {
            let mut row: Vec<f64> = vertices.iter().map(|(_, c, _)| c[i]).collect();
            row.extend([-1.0, 1.0]);
            lp.add_constraint(row, Relation::Ge, spec.thresholds[i])?;
        }
        let sol = simplex_solve(&lp)?;
        SlaterResult {
            zeta_star: sol.x[k] - sol.x[k + 1],
            policy: mix(&sol.x[..k]).policy(),
        }
    };

    Ok(OracleResult {
        feasible: optimum.is_some(),
        optimum,
        slater,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Kernel;

    /// One state, two actions, gamma 0.5, r = (1, 0), c = (0, 1).
    fn single_state(b: f64) -> CmdpSpec {
        CmdpSpec::new(
            0.5,
            Kernel::new(1, 2, vec![1.0, 1.0]).unwrap(),
            Table::from_nested(&[vec![1.0, 0.0]]).unwrap(),
            vec![Table::from_nested(&[vec![0.0, 1.0]]).unwrap()],
            vec![b],
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn single_state_optimum() {
        let res = solve_cmdp_lp(&single_state(0.8)).unwrap();
        let opt = res.optimum.unwrap();
        assert!((opt.occupancy.total_mass() - 2.0).abs() < 1e-12);
        assert!((opt.occupancy.mu.get(0, 0) - 1.2).abs() < 1e-12);
        assert!((opt.occupancy.mu.get(0, 1) - 0.8).abs() < 1e-12);
        assert!((opt.v_star - 1.2).abs() < 1e-12);
        assert!((opt.policy.prob(0, 0) - 0.6).abs() < 1e-12);
        // each unit of constraint slack costs one unit of reward
        assert!((opt.lambda_star[0] - 1.0).abs() < 1e-12);
        assert!((opt.primal_objective - opt.dual_objective).abs() < 1e-12);
    }

    #[test]
    fn single_state_infeasible() {
        let res = solve_cmdp_lp(&single_state(3.0)).unwrap();
        assert!(!res.feasible);
        assert!(res.optimum.is_none());
        assert!(res.zeta_star() < 0.0);
        assert!(!brute_force_small(&single_state(3.0)).unwrap().feasible);
    }

    #[test]
    fn vacuous_constraint_matches_unconstrained() {
        let res = solve_cmdp_lp(&single_state(0.0)).unwrap();
        assert!((res.v_star().unwrap() - 2.0).abs() < 1e-12);
        // degenerate at b = 0: any multiplier in [0, 1] is optimal
        let l = res.optimum.unwrap().lambda_star[0];
        assert!((0.0..=1.0 + 1e-12).contains(&l));
    }

    #[test]
    fn slater_examples() {
        let s = slater_constant(&single_state(0.8)).unwrap();
        assert!((s.zeta_star - 1.2).abs() < 1e-12);
        assert!((s.policy.prob(0, 1) - 1.0).abs() < 1e-12);
        assert!(slater_constant(&single_state(2.0)).unwrap().zeta_star.abs() < 1e-12);
    }

    #[test]
    fn conflicting_constraints_have_negative_margin() {
        let gamma = 0.5;
        let c1 = Table::from_nested(&[vec![0.0, 1.0]]).unwrap();
        let c2 = Table::from_nested(&[vec![1.0, 0.0]]).unwrap();
        let b = 0.6 / (1.0 - gamma);
        let spec = CmdpSpec::new(
            gamma,
            Kernel::new(1, 2, vec![1.0, 1.0]).unwrap(),
            Table::from_nested(&[vec![1.0, 0.0]]).unwrap(),
            vec![c1, c2],
            vec![b, b],
            vec![1.0],
        )
        .unwrap();
        let z = slater_constant(&spec).unwrap().zeta_star;
        assert!(z < 0.0);
        assert!((z + 0.2).abs() < 1e-12);
    }

    #[test]
    fn brute_force_single_state() {
        let res = brute_force_small(&single_state(0.8)).unwrap();
        let opt = res.optimum.unwrap();
        assert!((opt.v_star - 1.2).abs() < 1e-12);
        assert!((opt.policy.prob(0, 0) - 0.6).abs() < 1e-12);
        assert!((res.slater.zeta_star - 1.2).abs() < 1e-12);
    }

    #[test]
    fn brute_force_rejects_large_instances() {
        let spec = CmdpSpec::new(
            0.5,
            Kernel::new(3, 3, vec![1.0 / 3.0; 27]).unwrap(),
            Table::filled(3, 3, 0.5),
            vec![],
            vec![],
            vec![1.0, 0.0, 0.0],
        )
        .unwrap();
        assert!(matches!(brute_force_small(&spec), Err(CmdpError::TooLarge(_))));
    }

    #[test]
    fn policy_occupancy_has_full_mass() {
        let spec = single_state(0.8);
        let occ = OccupancyMeasure::of_policy(&spec, &TabularPolicy::uniform(1, 2)).unwrap();
        assert!((occ.total_mass() - 2.0).abs() < 1e-12);
        assert!(occ.flow_residuals(&spec)[0] < 1e-12);
    }
}
