//! Independent reference solvers for small safety-filter instances.
#![allow(dead_code, clippy::needless_range_loop)]

use swarmsir_core::safety::QpProblem;
use swarmsir_core::Vec2;

/// Dense Gaussian elimination with partial pivoting; `None` if singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Stacked gradient of row `k` over the `2n` velocity components.
fn row_gradient(problem: &QpProblem, k: usize) -> Vec<f64> {
    let row = &problem.constraints[k];
    let mut g = vec![0.0; 2 * problem.nominal.len()];
    g[2 * row.i] = row.a.x;
    g[2 * row.i + 1] = row.a.y;
    g[2 * row.j] = -row.a.x;
    g[2 * row.j + 1] = -row.a.y;
    g
}

/// Enumerates every active set, keeps the KKT points (multipliers >= 0,
/// all rows feasible), and returns the one with the lowest objective.
pub fn kkt_enumeration(problem: &QpProblem) -> Vec<Vec2> {
    let m = problem.constraints.len();
    assert!(m <= 10, "enumeration oracle is exponential");
    let nominal: Vec<f64> = problem.nominal.iter().flat_map(|v| [v.x, v.y]).collect();
    let grads: Vec<Vec<f64>> = (0..m).map(|k| row_gradient(problem, k)).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << m) {
        let active: Vec<usize> = (0..m).filter(|k| mask & (1 << k) != 0).collect();
        let gram: Vec<Vec<f64>> = active
            .iter()
            .map(|&p| active.iter().map(|&q| dot(&grads[p], &grads[q])).collect())
            .collect();
        let rhs: Vec<f64> = active
            .iter()
            .map(|&p| problem.constraints[p].b - dot(&grads[p], &nominal))
            .collect();
        let Some(lambda) = solve_dense(gram, rhs) else { continue };
        if lambda.iter().any(|&l| l < -1e-12) {
            continue;
        }
        let mut u = nominal.clone();
        for (&p, &l) in active.iter().zip(&lambda) {
            for (ui, gi) in u.iter_mut().zip(&grads[p]) {
                *ui += l * gi;
            }
        }
        let feasible = (0..m).all(|k| dot(&grads[k], &u) - problem.constraints[k].b >= -1e-9);
        if !feasible {
            continue;
        }
        let obj: f64 = u.iter().zip(&nominal).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().is_none_or(|(o, _)| obj < *o) {
            best = Some((obj, u));
        }
    }
    let (_, u) = best.expect("the pairwise program is always feasible");
    u.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect()
}
