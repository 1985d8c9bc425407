//! Dense two-phase primal simplex on a full tableau.
//!
//! Solves `max cᵀx  s.t.  A_eq x = b_eq,  A_le x ≤ b_le,  x ≥ 0` and reads
//! the optimal dual multipliers off the artificial columns, which hold
//! `B⁻¹` throughout. Dantzig pricing, switching to Bland's rule after a run
//! of degenerate pivots.

use crate::error::{Error, Result};

/// Problem in the form accepted by every backend.
#[derive(Clone, Debug, Default)]
pub struct StandardLp {
    pub objective: Vec<f64>,
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub le_rows: Vec<Vec<f64>>,
    pub le_rhs: Vec<f64>,
}

impl StandardLp {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Largest violation of any constraint (including `x ≥ 0`) at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
        let eq = self.eq_rows.iter().zip(&self.eq_rhs).map(|(r, b)| (dot(r) - b).abs());
        let le = self.le_rows.iter().zip(&self.le_rhs).map(|(r, b)| (dot(r) - b).max(0.0));
        let pos = x.iter().map(|&v| (-v).max(0.0));
        eq.chain(le).chain(pos).fold(0.0, f64::max)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl SimplexStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SimplexStatus::Optimal => "optimal",
            SimplexStatus::Infeasible => "infeasible",
            SimplexStatus::Unbounded => "unbounded",
            SimplexStatus::IterationLimit => "iteration limit",
        }
    }
}

/// Primal optimum with the duals of the original rows.
#[derive(Clone, Debug)]
pub struct SimplexSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One free multiplier per equality row.
    pub eq_duals: Vec<f64>,
    /// One nonnegative multiplier per `≤` row.
    pub le_duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub degenerate_run: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { tol: 1e-10, max_iterations: 50_000, degenerate_run: 50 }
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    // rows × (cols + 1); last column is the right-hand side
    t: Vec<f64>,
    basis: Vec<usize>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
    barred: Vec<bool>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn recompute_reduced(&mut self) {
        let w = self.width();
        for j in 0..=self.cols {
            let mut d = if j < self.cols { -self.cost[j] } else { 0.0 };
            for r in 0..self.rows {
                let cb = self.cost[self.basis[r]];
                if cb != 0.0 {
                    d += cb * self.t[r * w + j];
                }
            }
            self.reduced[j] = d;
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let piv = self.t[pr * w + pc];
        for v in &mut self.t[pr * w..(pr + 1) * w] {
            *v /= piv;
        }
        let pivot_row: Vec<f64> = self.t[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.t[r * w + pc];
            if f != 0.0 {
                for (v, p) in self.t[r * w..(r + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                self.t[r * w + pc] = 0.0;
            }
        }
        let f = self.reduced[pc];
        if f != 0.0 {
            for (v, p) in self.reduced.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.reduced[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    fn run(&mut self, opts: &SimplexOptions, iterations: &mut usize) -> SimplexStatus {
        let mut degenerate = 0usize;
        loop {
            if *iterations >= opts.max_iterations {
                return SimplexStatus::IterationLimit;
            }
            let bland = degenerate >= opts.degenerate_run;
            let mut enter = None;
            let mut best = -opts.tol;
            for j in 0..self.cols {
                if self.barred[j] {
                    continue;
                }
                let d = self.reduced[j];
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = enter else {
                return SimplexStatus::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > opts.tol {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - opts.tol
                                || (ratio <= lratio + opts.tol && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, ratio)) = leave else {
                return SimplexStatus::Unbounded;
            };
            if ratio.abs() <= opts.tol {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc);
            *iterations += 1;
        }
    }
}

/// Solves the problem; non-optimal outcomes are reported as [`Error::Solver`].
pub fn solve(lp: &StandardLp, opts: &SimplexOptions) -> Result<SimplexSolution> {
    let n = lp.num_vars();
    let m_eq = lp.eq_rows.len();
    let m_le = lp.le_rows.len();
    let rows = m_eq + m_le;
    if lp.eq_rhs.len() != m_eq || lp.le_rhs.len() != m_le {
        return Err(Error::param("lp", "row and right-hand-side counts differ"));
    }
    if lp.eq_rows.iter().chain(&lp.le_rows).any(|r| r.len() != n) {
        return Err(Error::param("lp", "constraint row length differs from variable count"));
    }
    // columns: structural | slacks | artificials
    let slack0 = n;
    let art0 = n + m_le;
    let cols = art0 + rows;
    let w = cols + 1;
    let mut t = vec![0.0; rows * w];
    let mut sign = vec![1.0; rows];
    for r in 0..rows {
        let (row, rhs) =
            if r < m_eq { (&lp.eq_rows[r], lp.eq_rhs[r]) } else { (&lp.le_rows[r - m_eq], lp.le_rhs[r - m_eq]) };
        let s = if rhs < 0.0 { -1.0 } else { 1.0 };
        sign[r] = s;
        for (j, &a) in row.iter().enumerate() {
            t[r * w + j] = s * a;
        }
        if r >= m_eq {
            t[r * w + slack0 + (r - m_eq)] = s;
        }
        t[r * w + art0 + r] = 1.0;
        t[r * w + cols] = s * rhs;
    }
    let mut cost = vec![0.0; cols];
    cost[art0..].iter_mut().for_each(|c| *c = -1.0);
    let mut tab = Tableau {
        rows,
        cols,
        t,
        basis: (art0..cols).collect(),
        cost,
        reduced: vec![0.0; w],
        barred: vec![false; cols],
    };
    tab.recompute_reduced();
    let mut iterations = 0;
    let status = tab.run(opts, &mut iterations);
    if status != SimplexStatus::Optimal {
        return Err(Error::Solver { status: status.as_str(), detail: "phase one".into() });
    }
    let infeasibility: f64 = (0..rows).filter(|&r| tab.basis[r] >= art0).map(|r| tab.rhs(r)).sum();
    if infeasibility > 1e-7 {
        return Err(Error::Solver {
            status: SimplexStatus::Infeasible.as_str(),
            detail: format!("phase one residual {infeasibility:e}"),
        });
    }
    // drive remaining artificials out where a structural or slack column allows it
    for r in 0..rows {
        if tab.basis[r] >= art0 {
            if let Some(j) = (0..art0).find(|&j| tab.at(r, j).abs() > 1e-8) {
                tab.pivot(r, j);
            }
        }
    }
    for j in art0..cols {
        tab.barred[j] = true;
    }
    tab.cost = vec![0.0; cols];
    tab.cost[..n].copy_from_slice(&lp.objective);
    tab.recompute_reduced();
    let status = tab.run(opts, &mut iterations);
    if status != SimplexStatus::Optimal {
        return Err(Error::Solver { status: status.as_str(), detail: "phase two".into() });
    }
    let mut x = vec![0.0; n];
    for r in 0..rows {
        let b = tab.basis[r];
        if b < n {
            x[b] = tab.rhs(r);
        }
    }
    // y_r = c_B B⁻¹ e_r, and B⁻¹ lives in the artificial columns
    let duals: Vec<f64> = (0..rows).map(|r| sign[r] * tab.reduced[art0 + r]).collect();
    Ok(SimplexSolution {
        objective: lp.objective_value(&x),
        x,
        eq_duals: duals[..m_eq].to_vec(),
        le_duals: duals[m_eq..].to_vec(),
        iterations,
    })
}
