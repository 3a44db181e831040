//! Dense two-phase simplex with Bland's rule.
//!
//! Problems are stated as `minimize cᵀx` subject to rows `aᵢᵀx (<=|>=|=) bᵢ`
//! and `x >= 0`. The solver returns the optimal vertex together with the dual
//! vector `y`, with the sign convention that `bᵀy` equals the optimal value:
//! `yᵢ <= 0` on `<=` rows, `yᵢ >= 0` on `>=` rows, free on `=` rows.

use crate::error::{CmdpError, Result};
use crate::linalg::{solve_dense, solve_transposed};

pub const PIVOT_TOL: f64 = 1e-10;
const FEASIBILITY_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
struct Row {
    coeffs: Vec<f64>,
    relation: Relation,
    rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<Row>,
}

impl LinearProgram {
    pub fn minimize(objective: Vec<f64>) -> Self {
        LinearProgram {
            objective,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds a row and returns its index (used to look up its dual value).
    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Result<usize> {
        if coeffs.len() != self.objective.len() {
            return Err(CmdpError::mismatch(
                "constraint coefficients",
                self.objective.len(),
                coeffs.len(),
            ));
        }
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
        Ok(self.rows.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One dual value per constraint row, in insertion order.
    pub duals: Vec<f64>,
    pub dual_objective: f64,
    pub pivots: usize,
}

struct Tableau {
    /// `m + 1` rows of `width` entries; the last row is the reduced-cost row
    /// and the last column the right-hand side.
    cells: Vec<f64>,
    width: usize,
    m: usize,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let p = self.at(row, col);
        for k in 0..w {
            self.cells[row * w + k] /= p;
        }
        self.cells[row * w + col] = 1.0;
        for r in 0..=self.m {
            if r == row {
                continue;
            }
            let factor = self.at(r, col);
            if factor == 0.0 {
                continue;
            }
            for k in 0..w {
                let v = self.cells[row * w + k];
                if v != 0.0 {
                    self.cells[r * w + k] -= factor * v;
                }
            }
            self.cells[r * w + col] = 0.0;
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Loads the reduced-cost row for `costs` given the current basis.
    fn price(&mut self, costs: &[f64]) {
        let w = self.width;
        let m = self.m;
        for k in 0..w {
            self.cells[m * w + k] = if k < costs.len() { costs[k] } else { 0.0 };
        }
        for r in 0..m {
            let cb = costs[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for k in 0..w {
                self.cells[m * w + k] -= cb * self.cells[r * w + k];
            }
        }
    }

    /// Bland's rule iterations over columns `< allowed`.
    fn optimize(&mut self, allowed: usize) -> Result<()> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(CmdpError::NotConverged {
                    iterations: self.pivots,
                });
            }
            let Some(col) = (0..allowed).find(|&j| self.at(self.m, j) < -PIVOT_TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = self.at(r, col);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((best, best_ratio)) => {
                        let tie = (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio.abs());
                        if (!tie && ratio < best_ratio) || (tie && self.basis[r] < self.basis[best]) {
                            Some((r, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return Err(CmdpError::Unbounded);
            };
            self.pivot(row, col);
        }
    }
}

pub fn simplex_solve(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.num_vars();
    let m = lp.num_rows();
    if lp
        .objective
        .iter()
        .chain(lp.rows.iter().flat_map(|r| r.coeffs.iter().chain(std::iter::once(&r.rhs))))
        .any(|x| !x.is_finite())
    {
        return Err(CmdpError::NonFinite("linear program"));
    }

    // Normalize to non-negative right-hand sides.
    let mut sign = vec![1.0; m];
    let mut rows = lp.rows.clone();
    for (i, row) in rows.iter_mut().enumerate() {
        if row.rhs < 0.0 {
            sign[i] = -1.0;
            row.rhs = -row.rhs;
            row.coeffs.iter_mut().for_each(|c| *c = -*c);
            row.relation = match row.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let num_slack = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let num_art = rows.iter().filter(|r| r.relation != Relation::Le).count();
    let art_start = n + num_slack;
    let total = art_start + num_art;
    let width = total + 1;

    // Standard-form matrix (without the cost row), kept for the final
    // basis solves.
    let mut a_std = vec![0.0; m * total];
    let mut b_std = vec![0.0; m];
    let mut basis = vec![0; m];
    let (mut next_slack, mut next_art) = (n, art_start);
    for (i, row) in rows.iter().enumerate() {
        a_std[i * total..i * total + n].copy_from_slice(&row.coeffs);
        b_std[i] = row.rhs;
        match row.relation {
            Relation::Le => {
                a_std[i * total + next_slack] = 1.0;
                basis[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                a_std[i * total + next_slack] = -1.0;
                next_slack += 1;
                a_std[i * total + next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                a_std[i * total + next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
        }
    }

    let mut cells = vec![0.0; (m + 1) * width];
    for i in 0..m {
        cells[i * width..i * width + total].copy_from_slice(&a_std[i * total..(i + 1) * total]);
        cells[i * width + total] = b_std[i];
    }
    let mut tab = Tableau {
        cells,
        width,
        m,
        basis,
        pivots: 0,
    };

    if num_art > 0 {
        let mut phase_one = vec![0.0; total];
        phase_one[art_start..].iter_mut().for_each(|c| *c = 1.0);
        tab.price(&phase_one);
        tab.optimize(total)?;
        let infeasibility: f64 = (0..m)
            .filter(|&r| tab.basis[r] >= art_start)
            .map(|r| tab.rhs(r))
            .sum();
        let scale = 1.0 + b_std.iter().fold(0.0f64, |acc, b| acc.max(b.abs()));
        if infeasibility > FEASIBILITY_TOL * scale {
            return Err(CmdpError::Infeasible);
        }
        // Pivot zero-level artificials out where possible; the ones left sit
        // on redundant rows and stay at zero through phase two.
        for r in 0..m {
            if tab.basis[r] < art_start {
                continue;
            }
            if let Some(col) = (0..art_start).find(|&j| tab.at(r, j).abs() > PIVOT_TOL) {
                tab.pivot(r, col);
            }
        }
    }

    let mut costs = vec![0.0; total];
    costs[..n].copy_from_slice(&lp.objective);
    tab.price(&costs);
    tab.optimize(art_start)?;

    // Recompute the vertex and the duals from the original data.
    let mut basis_matrix = vec![0.0; m * m];
    for r in 0..m {
        for (k, &col) in tab.basis.iter().enumerate() {
            basis_matrix[r * m + k] = a_std[r * total + col];
        }
    }
    let cb: Vec<f64> = tab.basis.iter().map(|&j| costs[j]).collect();
    let (x_basic, y) = if m == 0 {
        (Vec::new(), Vec::new())
    } else {
        let mut xb = b_std.clone();
        let mut bm = basis_matrix.clone();
        solve_dense(&mut bm, &mut xb, m)?;
        let y = solve_transposed(&basis_matrix, &cb, m)?;
        (xb, y)
    };

    let mut x = vec![0.0; n];
    for (k, &col) in tab.basis.iter().enumerate() {
        if col < n {
            let v = x_basic[k];
            x[col] = if v < 0.0 && v > -FEASIBILITY_TOL { 0.0 } else { v };
        }
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let duals: Vec<f64> = y.iter().zip(&sign).map(|(y, s)| y * s).collect();
    let dual_objective = lp.rows.iter().zip(&duals).map(|(r, y)| r.rhs * y).sum();

    Ok(LpSolution {
        x,
        objective,
        duals,
        dual_objective,
        pivots: tab.pivots,
    })
}
