//! Brute-force check for the majorant: solve the minimum-norm majorant
//! problem as a generic convex QP over the cell slopes with a primal
//! active-set method. Shares no code with the hull construction.
//!
//!   minimize   Σ_j s_j² Δ_j
//!   subject to Σ_{j<k} s_j Δ_j ≥ f(t_k)   for every knot k ≥ 1
//!              s_j ≥ s_{j+1}
//!              s_{m-1} ≥ 0

use nalgebra::{DMatrix, DVector};

use super::ConeError;
use crate::pl_fn::ScalarPlf;
use crate::real::Real;

pub const QP_MAX_KNOTS: usize = 64;

const MAX_ITERATIONS: usize = 10_000;

struct Problem {
    hess: DVector<f64>,
    rows: Vec<DVector<f64>>,
    rhs: Vec<f64>,
}

impl Problem {
    fn build(knots: &[f64], values: &[f64]) -> Self {
        let m = knots.len() - 1;
        let widths: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (k, v) in values.iter().enumerate().skip(1) {
            let mut a = DVector::zeros(m);
            a.rows_mut(0, k).copy_from_slice(&widths[..k]);
            rows.push(a);
            rhs.push(*v);
        }
        for j in 0..m.saturating_sub(1) {
            let mut a = DVector::zeros(m);
            a[j] = 1.0;
            a[j + 1] = -1.0;
            rows.push(a);
            rhs.push(0.0);
        }
        let mut a = DVector::zeros(m);
        a[m - 1] = 1.0;
        rows.push(a);
        rhs.push(0.0);
        Problem {
            hess: DVector::from_vec(widths),
            rows,
            rhs,
        }
    }

    /// Solves the equality-constrained step problem for working set `work`.
    fn step(&self, s: &DVector<f64>, work: &[usize]) -> Result<(DVector<f64>, DVector<f64>), ConeError> {
        let m = s.len();
        let w = work.len();
        let mut kkt = DMatrix::zeros(m + w, m + w);
        let mut rhs = DVector::zeros(m + w);
        for j in 0..m {
            kkt[(j, j)] = self.hess[j];
            rhs[j] = -self.hess[j] * s[j];
        }
        for (r, &c) in work.iter().enumerate() {
            for j in 0..m {
                kkt[(j, m + r)] = -self.rows[c][j];
                kkt[(m + r, j)] = self.rows[c][j];
            }
        }
        let sol = kkt.lu().solve(&rhs).ok_or(ConeError::SingularSystem)?;
        let p = sol.rows(0, m).into_owned();
        let lambda = sol.rows(m, w).into_owned();
        Ok((p, lambda))
    }
}

/// Minimum-norm majorant of `f` in `V₁`, computed by a dense active-set QP.
pub fn qp_oracle_projection<T: Real>(f: &ScalarPlf<T>, tolerance: T) -> Result<ScalarPlf<T>, ConeError> {
    let n = f.knots().len();
    if n > QP_MAX_KNOTS {
        return Err(ConeError::TooManyKnots {
            got: n,
            max: QP_MAX_KNOTS,
        });
    }
    let knots: Vec<f64> = f.knots().iter().map(|t| t.to_f64_lossy()).collect();
    let values: Vec<f64> = f.values().iter().map(|v| v.to_f64_lossy()).collect();
    let tol = tolerance.to_f64_lossy().max(f64::EPSILON);
    let problem = Problem::build(&knots, &values);
    let m = n - 1;

    // Strictly feasible for every majorant constraint, active on the monotone ones.
    let lift = knots
        .iter()
        .zip(&values)
        .skip(1)
        .map(|(t, v)| v / t)
        .fold(0.0f64, f64::max)
        + 1.0;
    let mut s = DVector::from_element(m, lift);
    let mut work: Vec<usize> = Vec::new();

    for _ in 0..MAX_ITERATIONS {
        let (p, lambda) = problem.step(&s, &work)?;
        let scale = s.amax().max(1.0);
        if p.amax() <= 1e-14 * scale {
            let worst = lambda
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1));
            match worst {
                Some((r, l)) if *l < -1e-12 * scale => {
                    work.remove(r);
                    continue;
                }
                _ => {
                    let violation = problem
                        .rows
                        .iter()
                        .zip(&problem.rhs)
                        .map(|(row, b)| b - row.dot(&s))
                        .fold(0.0f64, f64::max);
                    if violation > tol {
                        return Err(ConeError::NotConverged(MAX_ITERATIONS));
                    }
                    return finish(f, &knots, &s);
                }
            }
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for (c, row) in problem.rows.iter().enumerate() {
            if work.contains(&c) {
                continue;
            }
            let ap = row.dot(&p);
            if ap < 0.0 {
                let slack = (row.dot(&s) - problem.rhs[c]).max(0.0);
                let a = slack / -ap;
                if a < alpha {
                    alpha = a;
                    blocking = Some(c);
                }
            }
        }
        s += &p * alpha;
        if let Some(c) = blocking {
            work.push(c);
        }
    }
    Err(ConeError::NotConverged(MAX_ITERATIONS))
}

fn finish<T: Real>(f: &ScalarPlf<T>, knots: &[f64], s: &DVector<f64>) -> Result<ScalarPlf<T>, ConeError> {
    let mut values = Vec::with_capacity(knots.len());
    let mut acc = 0.0;
    values.push(T::zero());
    for (j, w) in knots.windows(2).enumerate() {
        acc += s[j] * (w[1] - w[0]);
        values.push(T::lit(acc));
    }
    Ok(ScalarPlf::on_grid(f.grid().clone(), values)?)
}
