//! Linear program bounding how predictable `maj(x1, x2, x3)` is at a fixed
//! setting, for any no-signaling box whose Bell value is at most `δ`, and
//! its dual certificate.

pub mod simplex;

use serde::Serialize;

use crate::bell::{
    standard_bell_value, BellFunctional, NsBox, Outcome, Setting, DEFAULT_TOL, OUTCOMES, PARTIES, SETTINGS, TABLE_LEN,
};
use crate::error::{Error, Result};
use simplex::{SimplexOptions, StandardLp};

/// Feasibility/optimality tolerance every backend must meet.
pub const LP_TOL: f64 = 1e-8;

/// Upper bound `(11 + 7δ)/32` on the optimum, capped at 1/2.
pub fn predictability_bound(delta: f64) -> f64 {
    ((11.0 + 7.0 * delta) / 32.0).min(0.5)
}

/// One instance: maximize `½ Σ_x M(x,u*) P(x|u*)` over no-signaling boxes with
/// `B·P ≤ δ`, where `M = +1` on outcomes whose majority equals `guess`, `−1` otherwise.
#[derive(Clone, Debug)]
pub struct LpInstance {
    pub u_star: Setting,
    pub guess: u8,
    pub delta: f64,
    pub objective: [f64; TABLE_LEN],
    pub bell_row: [f64; TABLE_LEN],
    /// Normalization and per-party marginal equalities, pruned to a linearly independent set.
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    /// Equality rows generated before pruning.
    pub generated_eq_rows: usize,
}

impl LpInstance {
    pub fn to_standard(&self) -> StandardLp {
        StandardLp {
            objective: self.objective.to_vec(),
            eq_rows: self.eq_rows.clone(),
            eq_rhs: self.eq_rhs.clone(),
            le_rows: vec![self.bell_row.to_vec()],
            le_rhs: vec![self.delta],
        }
    }
}

/// Normalization (16) and no-signaling rows (4 parties × 8 contexts × 8 outcome triples).
fn equality_rows() -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for u in 0..SETTINGS {
        let mut r = vec![0.0; TABLE_LEN];
        for x in 0..OUTCOMES {
            r[x * SETTINGS + u] = 1.0;
        }
        rows.push(r);
        rhs.push(1.0);
    }
    for party in 0..PARTIES {
        let bit = 1 << party;
        for u in (0..SETTINGS).filter(|u| u & bit == 0) {
            for x in (0..OUTCOMES).filter(|x| x & bit == 0) {
                let mut r = vec![0.0; TABLE_LEN];
                for xi in [x, x | bit] {
                    r[xi * SETTINGS + u] += 1.0;
                    r[xi * SETTINGS + (u | bit)] -= 1.0;
                }
                rows.push(r);
                rhs.push(0.0);
            }
        }
    }
    (rows, rhs)
}

/// Indices of a maximal linearly independent subset of `rows`, scanned in order.
fn independent_rows(rows: &[Vec<f64>]) -> Vec<usize> {
    let mut echelon: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut keep = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let mut r = row.clone();
        for (pivot, e) in &echelon {
            let f = r[*pivot];
            if f != 0.0 {
                r.iter_mut().zip(e).for_each(|(a, b)| *a -= f * b);
            }
        }
        let (pivot, &val) = r.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).expect("nonempty row");
        if val.abs() > 1e-9 {
            r.iter_mut().for_each(|a| *a /= val);
            echelon.push((pivot, r));
            keep.push(i);
        }
    }
    keep
}

pub fn build_instance(u_star: Setting, delta: f64, guess: u8) -> Result<LpInstance> {
    if !u_star.in_inequality() {
        return Err(Error::SettingOutsideInequality(u_star.raw()));
    }
    if !(0.0..=8.0).contains(&delta) {
        return Err(Error::param("delta", format!("{delta} outside [0, 8]")));
    }
    if guess > 1 {
        return Err(Error::param("guess", "must be 0 or 1"));
    }
    let mut objective = [0.0; TABLE_LEN];
    for x in Outcome::all() {
        let m = if x.majority_bit() == guess { 1.0 } else { -1.0 };
        objective[x.index() * SETTINGS + u_star.index()] = 0.5 * m;
    }
    let (rows, rhs) = equality_rows();
    let generated = rows.len();
    let keep = independent_rows(&rows);
    Ok(LpInstance {
        u_star,
        guess,
        delta,
        objective,
        bell_row: BellFunctional::standard().as_f64(),
        eq_rows: keep.iter().map(|&i| rows[i].clone()).collect(),
        eq_rhs: keep.iter().map(|&i| rhs[i]).collect(),
        generated_eq_rows: generated,
    })
}

/// Optimal dual multipliers in the form `A_eqᵀ y + w·B − s = objective`,
/// with `w ≥ 0` on the Bell row and `s ≥ 0` on positivity.
#[derive(Clone, Debug, Serialize)]
pub struct DualCertificate {
    pub eq_multipliers: Vec<f64>,
    pub bell_multiplier: f64,
    pub positivity_multipliers: Vec<f64>,
    /// `b_eqᵀ y + δ w`, an upper bound on the (halved) objective.
    pub value: f64,
}

/// Result of checking a certificate against an instance without trusting the solver.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CertificateCheck {
    /// `max |Aᵀλ − objective|`.
    pub residual: f64,
    /// Smallest sign-constrained multiplier (must be ≥ 0).
    pub min_multiplier: f64,
    pub value: f64,
}

impl DualCertificate {
    /// The nonnegative vector `λ` over rows `[A_eq; −A_eq; B; −I]` with right-hand
    /// side `c = [b_eq; −b_eq; δ; 0]`, so that `Aᵀλ = M` and `cᵀλ` bounds `M·P`
    /// (the unhalved objective).
    pub fn lambda(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.eq_multipliers.len() + 1 + self.positivity_multipliers.len());
        out.extend(self.eq_multipliers.iter().map(|&y| 2.0 * y.max(0.0)));
        out.extend(self.eq_multipliers.iter().map(|&y| 2.0 * (-y).max(0.0)));
        out.push(2.0 * self.bell_multiplier);
        out.extend(self.positivity_multipliers.iter().map(|&s| 2.0 * s));
        out
    }

    /// `cᵀλ` for the unhalved objective.
    pub fn certificate_value(&self) -> f64 {
        2.0 * self.value
    }

    pub fn check(&self, instance: &LpInstance) -> CertificateCheck {
        let mut lhs = [0.0; TABLE_LEN];
        for (y, row) in self.eq_multipliers.iter().zip(&instance.eq_rows) {
            for (acc, a) in lhs.iter_mut().zip(row) {
                *acc += y * a;
            }
        }
        for (i, acc) in lhs.iter_mut().enumerate() {
            *acc += self.bell_multiplier * instance.bell_row[i] - self.positivity_multipliers[i];
        }
        let residual = lhs.iter().zip(&instance.objective).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let min_multiplier = self.positivity_multipliers.iter().copied().fold(self.bell_multiplier, f64::min);
        let value = self.eq_multipliers.iter().zip(&instance.eq_rhs).map(|(y, b)| y * b).sum::<f64>()
            + self.bell_multiplier * instance.delta;
        CertificateCheck { residual, min_multiplier, value }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub nsbox: NsBox,
    pub dual_certificate: Option<DualCertificate>,
}

/// Interchangeable LP back-end.
pub trait LpBackend: Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, instance: &LpInstance) -> Result<LpSolution>;
}

/// The in-crate dense simplex; also produces a dual certificate.
#[derive(Clone, Copy, Debug, Default)]
pub struct DenseSimplex {
    pub options: SimplexOptions,
}

impl LpBackend for DenseSimplex {
    fn name(&self) -> &'static str {
        "dense-simplex"
    }

    fn solve(&self, instance: &LpInstance) -> Result<LpSolution> {
        let lp = instance.to_standard();
        let sol = simplex::solve(&lp, &self.options)?;
        let nsbox = box_from_solution(&lp, &sol.x)?;
        let positivity: Vec<f64> = (0..TABLE_LEN)
            .map(|j| {
                let ay: f64 = sol.eq_duals.iter().zip(&instance.eq_rows).map(|(y, r)| y * r[j]).sum();
                ay + sol.le_duals[0] * instance.bell_row[j] - instance.objective[j]
            })
            .collect();
        let value = sol.eq_duals.iter().zip(&instance.eq_rhs).map(|(y, b)| y * b).sum::<f64>()
            + sol.le_duals[0] * instance.delta;
        Ok(LpSolution {
            status: LpStatus::Optimal,
            value: sol.objective,
            nsbox,
            dual_certificate: Some(DualCertificate {
                eq_multipliers: sol.eq_duals,
                bell_multiplier: sol.le_duals[0],
                positivity_multipliers: positivity,
                value,
            }),
        })
    }
}

/// Cross-check back-end built on the `microlp` revised simplex.
#[derive(Clone, Copy, Debug, Default)]
pub struct MicroLp;

impl LpBackend for MicroLp {
    fn name(&self) -> &'static str {
        "microlp"
    }

    fn solve(&self, instance: &LpInstance) -> Result<LpSolution> {
        use microlp::{ComparisonOp, OptimizationDirection, Problem};
        let lp = instance.to_standard();
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = lp.objective.iter().map(|&c| problem.add_var(c, (0.0, f64::INFINITY))).collect();
        let add = |problem: &mut Problem, row: &[f64], op: ComparisonOp, rhs: f64| {
            let terms: Vec<_> = row.iter().zip(&vars).filter(|(a, _)| **a != 0.0).map(|(&a, &v)| (v, a)).collect();
            problem.add_constraint(terms.as_slice(), op, rhs);
        };
        for (row, &b) in lp.eq_rows.iter().zip(&lp.eq_rhs) {
            add(&mut problem, row, ComparisonOp::Eq, b);
        }
        for (row, &b) in lp.le_rows.iter().zip(&lp.le_rhs) {
            add(&mut problem, row, ComparisonOp::Le, b);
        }
        let outcome = problem.solve().map_err(|e| match e {
            microlp::Error::Infeasible => Error::Solver { status: "infeasible", detail: "microlp".into() },
            other => Error::Solver { status: "failed", detail: other.to_string() },
        })?;
        let solution =
            outcome.into_solution().map_err(|_| Error::Solver { status: "interrupted", detail: "microlp".into() })?;
        let x: Vec<f64> = vars.iter().map(|&v| solution.var_value(v)).collect();
        let nsbox = box_from_solution(&lp, &x)?;
        Ok(LpSolution { status: LpStatus::Optimal, value: lp.objective_value(&x), nsbox, dual_certificate: None })
    }
}

fn box_from_solution(lp: &StandardLp, x: &[f64]) -> Result<NsBox> {
    let violation = lp.max_violation(x);
    if violation > LP_TOL {
        return Err(Error::Solver { status: "infeasible point", detail: format!("max violation {violation:e}") });
    }
    let p: [f64; TABLE_LEN] = std::array::from_fn(|i| x[i].max(0.0));
    NsBox::with_tol(p, LP_TOL.max(DEFAULT_TOL))
}

/// Solves with the in-crate simplex.
pub fn solve(instance: &LpInstance) -> Result<LpSolution> {
    DenseSimplex::default().solve(instance)
}

/// Optimum of one instance as reported by two independent back-ends.
#[derive(Clone, Debug, Serialize)]
pub struct InstanceReport {
    pub setting: String,
    pub guess: u8,
    pub value: f64,
    pub dual_value: f64,
    pub cross_check_value: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificationReport {
    pub delta: f64,
    pub bound: f64,
    pub max_optimum: f64,
    /// Largest disagreement between the two back-ends, when cross-checked.
    pub max_backend_gap: Option<f64>,
    pub instances: Vec<InstanceReport>,
    pub pass: bool,
}

/// Solves all 8 settings × 2 guesses at `delta`; `cross_check` adds the second back-end.
pub fn certification_report(delta: f64, cross_check: Option<&dyn LpBackend>) -> Result<CertificationReport> {
    use rayon::prelude::*;
    let bound = predictability_bound(delta);
    let pairs: Vec<(Setting, u8)> =
        Setting::inequality_settings().into_iter().flat_map(|u| [(u, 0u8), (u, 1u8)]).collect();
    let instances = pairs
        .par_iter()
        .map(|&(u, guess)| {
            let inst = build_instance(u, delta, guess)?;
            let sol = solve(&inst)?;
            let cert = sol.dual_certificate.as_ref().expect("dense simplex returns duals");
            let cross_check_value = match cross_check {
                Some(b) => Some(b.solve(&inst)?.value),
                None => None,
            };
            Ok(InstanceReport {
                setting: u.to_string(),
                guess,
                value: sol.value,
                dual_value: cert.value,
                cross_check_value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_optimum = instances.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
    let max_backend_gap = cross_check
        .map(|_| instances.iter().filter_map(|r| r.cross_check_value.map(|c| (c - r.value).abs())).fold(0.0, f64::max));
    let pass = instances.iter().all(|r| r.value <= bound + LP_TOL);
    Ok(CertificationReport { delta, bound, max_optimum, max_backend_gap, instances, pass })
}

/// Like [`certification_report`] without cross-check, failing on the first violating instance.
pub fn certify_bound(delta: f64) -> Result<CertificationReport> {
    let report = certification_report(delta, None)?;
    if let Some(bad) = report.instances.iter().find(|r| r.value > report.bound + LP_TOL) {
        let setting =
            Setting::inequality_settings().into_iter().find(|u| u.to_string() == bad.setting).map_or(0, |u| u.raw());
        return Err(Error::Certification { delta, setting, guess: bad.guess, value: bad.value, bound: report.bound });
    }
    Ok(report)
}

/// Primal optimizer: a box with Bell value ≤ δ that makes `maj` at `u_star` as
/// predictable as possible in the direction of `guess`.
pub fn adversarial_box(delta: f64, u_star: Setting, guess: u8) -> Result<NsBox> {
    let sol = solve(&build_instance(u_star, delta, guess)?)?;
    debug_assert!(standard_bell_value(&sol.nsbox) <= delta + LP_TOL);
    Ok(sol.nsbox)
}
