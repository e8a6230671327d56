use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::barrier::{constraint_row, BarrierSpec};
use crate::error::{Error, Result};
use crate::vec2::Vec2;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_SWEEPS: usize = 100_000;

/// `a . (u_i - u_j) >= b` for the pair `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub i: usize,
    pub j: usize,
    pub a: Vec2,
    pub b: f64,
}

impl ConstraintRow {
    pub fn slack(&self, u: &[Vec2]) -> f64 {
        self.a.dot(u[self.i] - u[self.j]) - self.b
    }
}

/// Minimum-deviation program with identity Hessian over the stacked
/// velocities. The objective `sum |u_i - nominal_i|^2` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpProblem {
    pub nominal: Vec<Vec2>,
    pub constraints: Vec<ConstraintRow>,
}

impl QpProblem {
    pub fn n(&self) -> usize {
        self.nominal.len()
    }

    pub fn objective(&self, u: &[Vec2]) -> f64 {
        u.iter()
            .zip(&self.nominal)
            .map(|(&ui, &ni)| (ui - ni).norm_squared())
            .sum()
    }

    /// Whether `u` satisfies every row (slack >= 0, no tolerance).
    pub fn is_feasible(&self, u: &[Vec2]) -> bool {
        self.constraints.iter().all(|row| row.slack(u) >= 0.0)
    }

    pub fn max_violation(&self, u: &[Vec2]) -> f64 {
        self.constraints
            .iter()
            .map(|row| (-row.slack(u)).max(0.0))
            .fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        for row in &self.constraints {
            if row.i >= n || row.j >= n || row.i == row.j {
                return Err(Error::invalid(
                    "constraints",
                    format!("row ({}, {}) does not name two agents of {n}", row.i, row.j),
                ));
            }
            if !row.a.is_finite() || !row.b.is_finite() {
                return Err(Error::invalid("constraints", "non-finite row"));
            }
        }
        if self.nominal.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("nominal", "non-finite velocity"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    pub velocities: Vec<Vec2>,
    pub objective_value: f64,
    pub max_violation: f64,
    /// Largest KKT residual: complementarity on rows with positive
    /// multiplier, plus the gradient mismatch `u - nominal - G^T lambda`.
    pub stationarity: f64,
    pub active_count: usize,
    pub iterations: usize,
    pub status: QpStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

impl QpOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }
}

/// One row per unordered pair, in ascending `(i, j)` order.
pub fn assemble_qp(positions: &[Vec2], nominal: &[Vec2], spec: &BarrierSpec) -> Result<QpProblem> {
    if positions.len() != nominal.len() {
        return Err(Error::invalid(
            "nominal",
            format!("{} velocities for {} positions", nominal.len(), positions.len()),
        ));
    }
    let n = positions.len();
    let mut constraints = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) =
                constraint_row(positions[i], positions[j], spec).map_err(|_| Error::DegeneratePair { i, j })?;
            constraints.push(ConstraintRow { i, j, a, b });
        }
    }
    Ok(QpProblem {
        nominal: nominal.to_vec(),
        constraints,
    })
}

struct DualState<'p> {
    problem: &'p QpProblem,
    u: Vec<Vec2>,
    lambda: Vec<f64>,
    /// `1 / |g_k|^2` with `|g_k|^2 = 2 |a_k|^2`; zero for vacuous rows.
    inv_norm: Vec<f64>,
}

impl<'p> DualState<'p> {
    fn new(problem: &'p QpProblem) -> Self {
        let inv_norm = problem
            .constraints
            .iter()
            .map(|row| {
                let g2 = 2.0 * row.a.norm_squared();
                if g2 > 0.0 {
                    1.0 / g2
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            problem,
            u: problem.nominal.clone(),
            lambda: vec![0.0; problem.constraints.len()],
            inv_norm,
        }
    }

    /// Exact coordinate maximization of the dual along row `k`.
    fn relax(&mut self, k: usize) {
        let row = &self.problem.constraints[k];
        let slack = row.slack(&self.u);
        let next = (self.lambda[k] - slack * self.inv_norm[k]).max(0.0);
        let delta = next - self.lambda[k];
        if delta != 0.0 {
            self.lambda[k] = next;
            self.u[row.i] += row.a * delta;
            self.u[row.j] -= row.a * delta;
        }
    }

    fn row_residual(&self, k: usize) -> f64 {
        let slack = self.problem.constraints[k].slack(&self.u);
        if self.lambda[k] > 0.0 {
            slack.abs()
        } else {
            (-slack).max(0.0)
        }
    }

    fn gradient_mismatch(&self, u: &[Vec2], lambda: &[f64]) -> f64 {
        let mut recon = self.problem.nominal.clone();
        for (row, &l) in self.problem.constraints.iter().zip(lambda) {
            if l != 0.0 {
                recon[row.i] += row.a * l;
                recon[row.j] -= row.a * l;
            }
        }
        u.iter()
            .zip(&recon)
            .map(|(&a, &b)| {
                let d = a - b;
                d.x.abs().max(d.y.abs())
            })
            .fold(0.0, f64::max)
    }

    fn residuals(&self, u: &[Vec2], lambda: &[f64]) -> (f64, f64) {
        let mut violation: f64 = 0.0;
        let mut complementarity: f64 = 0.0;
        for (row, &l) in self.problem.constraints.iter().zip(lambda) {
            let slack = row.slack(u);
            violation = violation.max(-slack);
            if l > 0.0 {
                complementarity = complementarity.max(slack.abs());
            }
        }
        let stationarity = complementarity.max(self.gradient_mismatch(u, lambda));
        (violation.max(0.0), stationarity)
    }

    /// Re-solves the equality system on the rows with positive multipliers.
    /// Returns `None` when the active rows are dependent or the result is not
    /// a KKT point within `tol`.
    fn polish(&self, tol: f64) -> Option<(Vec<Vec2>, Vec<f64>)> {
        let active: Vec<usize> = (0..self.lambda.len()).filter(|&k| self.lambda[k] > 0.0).collect();
        if active.is_empty() {
            return None;
        }
        let rows = &self.problem.constraints;
        let m = active.len();
        let mut gram = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DVector::<f64>::zeros(m);
        for (p, &k) in active.iter().enumerate() {
            let rk = &rows[k];
            rhs[p] = -rk.slack(&self.problem.nominal);
            for (q, &l) in active.iter().enumerate().skip(p) {
                let rl = &rows[l];
                let mut v = 0.0;
                if rk.i == rl.i {
                    v += rk.a.dot(rl.a);
                }
                if rk.i == rl.j {
                    v -= rk.a.dot(rl.a);
                }
                if rk.j == rl.i {
                    v -= rk.a.dot(rl.a);
                }
                if rk.j == rl.j {
                    v += rk.a.dot(rl.a);
                }
                gram[(p, q)] = v;
                gram[(q, p)] = v;
            }
        }
        let chol = gram.cholesky()?;
        let mult = chol.solve(&rhs);
        if mult.iter().any(|&l| !l.is_finite() || l < -tol) {
            return None;
        }
        let mut lambda = vec![0.0; rows.len()];
        let mut u = self.problem.nominal.clone();
        for (p, &k) in active.iter().enumerate() {
            let l = mult[p].max(0.0);
            lambda[k] = l;
            u[rows[k].i] += rows[k].a * l;
            u[rows[k].j] -= rows[k].a * l;
        }
        let (violation, stationarity) = self.residuals(&u, &lambda);
        (violation <= tol && stationarity <= tol).then_some((u, lambda))
    }
}

/// Solves the minimum-deviation QP by dual coordinate ascent (Hildreth's
/// method) over the pairwise rows.
///
/// The dual iterate stays feasible (`lambda >= 0`) and the primal is kept at
/// `u = nominal + G^T lambda`. Sweeps alternate between the working set
/// (rows with positive multiplier or violated) and full passes until both
/// the violation and the KKT residual are within `options.tolerance`.
pub fn solve_qp(problem: &QpProblem, options: QpOptions) -> Result<QpSolution> {
    problem.validate()?;
    let tol = options.tolerance;
    let mut state = DualState::new(problem);
    let n_rows = problem.constraints.len();
    let all: Vec<usize> = (0..n_rows).collect();
    let mut sweeps = 0;

    let converged = loop {
        if sweeps >= options.max_sweeps {
            break false;
        }
        for &k in &all {
            state.relax(k);
        }
        sweeps += 1;
        if all.iter().all(|&k| state.row_residual(k) <= tol) {
            break true;
        }

        let working: Vec<usize> = all
            .iter()
            .copied()
            .filter(|&k| state.lambda[k] > 0.0 || state.row_residual(k) > tol)
            .collect();
        while sweeps < options.max_sweeps {
            for &k in &working {
                state.relax(k);
            }
            sweeps += 1;
            if working.iter().all(|&k| state.row_residual(k) <= tol) {
                break;
            }
        }
    };

    let (mut u, mut lambda) = (state.u.clone(), state.lambda.clone());
    let (mut violation, mut stationarity) = state.residuals(&u, &lambda);
    if converged {
        if let Some((pu, pl)) = state.polish(tol) {
            let (pv, ps) = state.residuals(&pu, &pl);
            u = pu;
            lambda = pl;
            violation = pv;
            stationarity = ps;
        }
    }

    if !converged || violation > tol || stationarity > tol {
        return Err(Error::QpFailure {
            iterations: sweeps,
            max_violation: violation,
            stationarity,
            best: u,
        });
    }

    Ok(QpSolution {
        objective_value: problem.objective(&u),
        max_violation: violation,
        stationarity,
        active_count: lambda.iter().filter(|&&l| l > 0.0).count(),
        iterations: sweeps,
        velocities: u,
        status: QpStatus::Optimal,
    })
}

/// Per-pair projection of violated rows, ascending pair order, three sweeps.
fn fallback_projection(problem: &QpProblem) -> QpSolution {
    let mut u = problem.nominal.clone();
    let mut touched = vec![false; problem.constraints.len()];
    for _ in 0..3 {
        for (k, row) in problem.constraints.iter().enumerate() {
            let slack = row.slack(&u);
            let g2 = 2.0 * row.a.norm_squared();
            if slack < 0.0 && g2 > 0.0 {
                let step = -slack / g2;
                u[row.i] += row.a * step;
                u[row.j] -= row.a * step;
                touched[k] = true;
            }
        }
    }
    QpSolution {
        objective_value: problem.objective(&u),
        max_violation: problem.max_violation(&u),
        stationarity: f64::NAN,
        active_count: touched.iter().filter(|&&t| t).count(),
        iterations: 3,
        velocities: u,
        status: QpStatus::Fallback,
    }
}

/// Filtered velocities for one step. If the solver hits its sweep cap, the
/// nominal velocities are repaired by sequential projection instead and the
/// result is marked [`QpStatus::Fallback`].
pub fn safe_velocities(
    positions: &[Vec2],
    nominal: &[Vec2],
    spec: &BarrierSpec,
    options: QpOptions,
) -> Result<QpSolution> {
    let problem = assemble_qp(positions, nominal, spec)?;
    solve_or_fallback(&problem, options)
}

/// [`solve_qp`], replacing a sweep-cap failure with the projection fallback.
pub fn solve_or_fallback(problem: &QpProblem, options: QpOptions) -> Result<QpSolution> {
    match solve_qp(problem, options) {
        Ok(sol) => Ok(sol),
        Err(Error::QpFailure { .. }) => Ok(fallback_projection(problem)),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    fn spec(d: f64, gamma: f64) -> BarrierSpec {
        BarrierSpec::new(d, gamma).unwrap()
    }

    #[test]
    fn row_counts() {
        let s = spec(0.5, 1.0);
        let one = assemble_qp(&[Vec2::ZERO], &[Vec2::ZERO], &s).unwrap();
        assert!(one.constraints.is_empty());
        let pos: Vec<Vec2> = (0..3).map(|k| Vec2::new(k as f64, 0.0)).collect();
        assert_eq!(assemble_qp(&pos, &pos, &s).unwrap().constraints.len(), 3);
        let pos: Vec<Vec2> = (0..20).map(|k| Vec2::new(k as f64, 0.5 * k as f64)).collect();
        let qp = assemble_qp(&pos, &vec![Vec2::ZERO; 20], &s).unwrap();
        assert_eq!(qp.constraints.len(), 190);
        assert!(qp.constraints.windows(2).all(|w| (w[0].i, w[0].j) < (w[1].i, w[1].j)));
    }

    #[test]
    fn coincident_pair_is_reported() {
        let pos = [Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::ZERO];
        let err = assemble_qp(&pos, &[Vec2::ZERO; 3], &spec(0.5, 1.0)).unwrap_err();
        assert_eq!(err, Error::DegeneratePair { i: 0, j: 2 });
        assert!(assemble_qp(&pos, &[Vec2::ZERO; 2], &spec(0.5, 1.0)).is_err());
    }

    #[test]
    fn single_agent_passthrough() {
        let nominal = [Vec2::new(0.3, -0.7)];
        let qp = assemble_qp(&[Vec2::new(1.0, 1.0)], &nominal, &spec(1.0, 1.0)).unwrap();
        let sol = solve_qp(&qp, QpOptions::default()).unwrap();
        assert_eq!(sol.velocities, nominal);
        assert_eq!(sol.objective_value, 0.0);
        assert_eq!(sol.active_count, 0);
    }

    #[test]
    fn distant_pair_passthrough() {
        let pos = [Vec2::ZERO, Vec2::new(5.0, 0.0)];
        let nominal = [Vec2::new(0.1, 0.0), Vec2::new(-0.1, 0.0)];
        let sol = safe_velocities(&pos, &nominal, &spec(1.0, 1.0), QpOptions::default()).unwrap();
        assert_eq!(sol.velocities, nominal);
        assert_eq!(sol.status, QpStatus::Optimal);
    }

    #[test]
    fn head_on_pair_meets_in_the_middle() {
        let pos = [Vec2::ZERO, Vec2::new(1.0, 0.0)];
        let nominal = [Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0)];
        let qp = assemble_qp(&pos, &nominal, &spec(1.0, 1.0)).unwrap();
        let sol = solve_qp(&qp, QpOptions::default()).unwrap();
        for v in &sol.velocities {
            assert_abs_diff_eq!(v.x, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(v.y, 0.0, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(sol.objective_value, 2.0, epsilon = 1e-9);
        assert_eq!(sol.active_count, 1);
    }

    #[test]
    fn blocked_agents_stay_put_when_nominal_is_zero() {
        let pos: Vec<Vec2> = (0..20)
            .map(|k| Vec2::new((k % 5) as f64 * 1.5, (k / 5) as f64 * 1.5))
            .collect();
        let zero = vec![Vec2::ZERO; 20];
        let sol = safe_velocities(&pos, &zero, &spec(1.0, 1.0), QpOptions::default()).unwrap();
        assert_eq!(sol.velocities, zero);
    }

    #[test]
    fn sweep_cap_yields_failure_and_fallback() {
        // Three mutually close agents pushed together need several sweeps.
        let pos = [Vec2::ZERO, Vec2::new(0.3, 0.0), Vec2::new(0.15, 0.2)];
        let nominal = [Vec2::new(1.0, 0.2), Vec2::new(-1.0, 0.1), Vec2::new(0.0, -1.0)];
        let s = spec(1.0, 1.0);
        let qp = assemble_qp(&pos, &nominal, &s).unwrap();
        let tight = QpOptions {
            tolerance: 1e-12,
            max_sweeps: 1,
        };
        match solve_qp(&qp, tight) {
            Err(Error::QpFailure { iterations, best, .. }) => {
                assert_eq!(iterations, 1);
                assert_eq!(best.len(), 3);
            }
            other => panic!("expected failure, got {other:?}"),
        }
        let sol = safe_velocities(&pos, &nominal, &s, tight).unwrap();
        assert_eq!(sol.status, QpStatus::Fallback);
        assert!(sol.max_violation.is_finite());

        let ok = solve_qp(&qp, QpOptions::default()).unwrap();
        assert!(ok.max_violation <= 1e-6);
    }
}
