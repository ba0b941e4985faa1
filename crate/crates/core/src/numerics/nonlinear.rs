//! Fixed-point and Newton solvers for the implicit relation `z = map(z)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    FixedPoint,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearSolveConfig {
    /// Max-norm tolerance on `map(z) - z`.
    pub abs_tol: f64,
    pub max_iter: usize,
    pub mode: SolveMode,
}

impl Default for NonlinearSolveConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            max_iter: 500,
            mode: SolveMode::FixedPoint,
        }
    }
}

impl NonlinearSolveConfig {
    pub fn newton() -> Self {
        Self {
            mode: SolveMode::Newton,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(Error::Config(format!("abs_tol must be positive, got {}", self.abs_tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Picard iteration `z_{k+1} = map(z_k)` from `guess`.
///
/// Stops once two consecutive iterates agree to `abs_tol` in the max norm and
/// returns the newest iterate with the number of map evaluations.
pub fn fixed_point_solve<V, F>(mut map: F, guess: V, cfg: &NonlinearSolveConfig) -> Result<(V, usize)>
where
    V: AsRef<[f64]>,
    F: FnMut(&V) -> V,
{
    let mut z = guess;
    let mut residual = f64::INFINITY;
    for iter in 1..=cfg.max_iter {
        let next = map(&z);
        residual = max_abs_diff(next.as_ref(), z.as_ref());
        if !residual.is_finite() {
            return Err(Error::NonConvergence {
                iterations: iter,
                residual,
                last_iterate: next.as_ref().to_vec(),
            });
        }
        z = next;
        if residual <= cfg.abs_tol {
            return Ok((z, iter));
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual,
        last_iterate: z.as_ref().to_vec(),
    })
}

/// Newton iteration on `F(z) = z - map(z)` with a forward-difference Jacobian.
///
/// Stops when `|map(z) - z|_inf <= abs_tol` at the current iterate, so the
/// returned point always satisfies the residual bound.
pub fn newton_solve<V, F>(mut map: F, guess: V, cfg: &NonlinearSolveConfig) -> Result<(V, usize)>
where
    V: AsRef<[f64]> + AsMut<[f64]> + Clone,
    F: FnMut(&V) -> V,
{
    let n = guess.as_ref().len();
    let mut z = guess;
    let mut residual = f64::INFINITY;
    for iter in 0..=cfg.max_iter {
        let mz = map(&z);
        let f: Vec<f64> = z.as_ref().iter().zip(mz.as_ref()).map(|(a, b)| a - b).collect();
        residual = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !residual.is_finite() {
            break;
        }
        if residual <= cfg.abs_tol {
            return Ok((z, iter));
        }
        if iter == cfg.max_iter {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let zj = z.as_ref()[j];
            let h = f64::EPSILON.sqrt() * zj.abs().max(1.0);
            let mut zp = z.clone();
            zp.as_mut()[j] = zj + h;
            let mzp = map(&zp);
            for i in 0..n {
                let fp = zp.as_ref()[i] - mzp.as_ref()[i];
                jac[(i, j)] = (fp - f[i]) / h;
            }
        }
        let rhs = DVector::from_vec(f);
        let Some(delta) = jac.lu().solve(&rhs) else {
            return Err(Error::SingularMatrix { row: 0 });
        };
        for (zi, di) in z.as_mut().iter_mut().zip(delta.iter()) {
            *zi -= di;
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual,
        last_iterate: z.as_ref().to_vec(),
    })
}

/// Dispatches on [`NonlinearSolveConfig::mode`].
pub fn solve_nonlinear<V, F>(map: F, guess: V, cfg: &NonlinearSolveConfig) -> Result<(V, usize)>
where
    V: AsRef<[f64]> + AsMut<[f64]> + Clone,
    F: FnMut(&V) -> V,
{
    match cfg.mode {
        SolveMode::FixedPoint => fixed_point_solve(map, guess, cfg),
        SolveMode::Newton => newton_solve(map, guess, cfg),
    }
}
