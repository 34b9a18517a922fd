//! Preconditioned conjugate gradients for the per-step SPD systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{dot, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    #[default]
    Jacobi,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tolerance: f64,
    /// `None` means ten times the number of unknowns.
    pub max_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-10,
            max_iterations: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::Config(format!(
                "solver tolerance must lie in (0, 1), got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::Config("solver max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    fn iteration_cap(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(10 * n.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖b − A x‖ / ‖b‖`, or `‖b − A x‖` when `b = 0`.
    pub relative_residual: f64,
}

/// Solves `A x = b` from a zero initial guess.
pub fn solve_spd(a: &SparseMatrix, b: &[f64], config: &SolverConfig) -> Result<Vec<f64>> {
    solve_spd_from(a, b, None, config).map(|o| o.x)
}

/// Solves `A x = b` starting from `x0`.
pub fn solve_spd_from(
    a: &SparseMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    config: &SolverConfig,
) -> Result<SolveOutcome> {
    solve_spd_monitored(a, b, x0, config, |_, _| {})
}

/// As [`solve_spd_from`], calling `monitor(k, x_k)` after every iteration.
pub fn solve_spd_monitored(
    a: &SparseMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    config: &SolverConfig,
    mut monitor: impl FnMut(usize, &[f64]),
) -> Result<SolveOutcome> {
    config.validate()?;
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: n,
        });
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    let inv_diag: Vec<f64> = match config.preconditioner {
        Preconditioner::Jacobi => a
            .diagonal()
            .into_iter()
            .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect(),
        Preconditioner::None => vec![1.0; n],
    };

    let mut x = match x0 {
        Some(g) if g.len() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: g.len(),
            })
        }
        Some(g) if g.iter().all(|v| v.is_finite()) => g.to_vec(),
        _ => vec![0.0; n],
    };
    let b_norm = dot(b, b).sqrt();
    let scale = if b_norm > 0.0 { b_norm } else { 1.0 };
    let mut r = a.spmv(&x)?;
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut res = dot(&r, &r).sqrt() / scale;
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    if res <= config.tolerance {
        return Ok(SolveOutcome {
            x,
            iterations: 0,
            relative_residual: res,
        });
    }

    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let cap = config.iteration_cap(n);
    for k in 1..=cap {
        a.spmv_into(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !pap.is_finite() || !rz.is_finite() {
            return Err(Error::NonFinite("conjugate gradient iterate"));
        }
        if pap <= 0.0 {
            return Err(Error::invalid("matrix is not positive definite"));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        monitor(k, &x);
        res = dot(&r, &r).sqrt() / scale;
        if !res.is_finite() {
            return Err(Error::NonFinite("conjugate gradient residual"));
        }
        if res <= config.tolerance {
            return Ok(SolveOutcome {
                x,
                iterations: k,
                relative_residual: res,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations: cap,
        residual: res,
    })
}

/// Solves `M x = b` for a diagonal `M` by division.
pub fn lumped_inverse_apply(m: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if m.nrows() != b.len() || m.ncols() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: b.len(),
        });
    }
    if !m.is_diagonal() {
        return Err(Error::invalid("lumped inverse needs a diagonal matrix"));
    }
    m.diagonal()
        .iter()
        .zip(b)
        .map(|(&d, &bi)| {
            if d == 0.0 {
                Err(Error::invalid("zero diagonal entry in lumped inverse"))
            } else {
                Ok(bi / d)
            }
        })
        .collect()
}
