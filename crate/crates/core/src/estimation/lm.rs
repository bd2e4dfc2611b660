//! Levenberg–Marquardt least squares with central-difference Jacobians.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative cost change that counts as converged.
    pub cost_tolerance: f64,
    /// Gradient ∞-norm that counts as converged.
    pub gradient_tolerance: f64,
    /// Relative parameter step that counts as converged.
    pub step_tolerance: f64,
    /// Relative finite-difference step.
    pub jacobian_step: f64,
    /// Singular values below this fraction of the largest mark a rank deficiency.
    pub rank_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            cost_tolerance: 1e-10,
            gradient_tolerance: 1e-8,
            step_tolerance: 1e-12,
            jacobian_step: 1e-6,
            rank_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmFit {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    /// s²(JᵀJ)⁻¹ with s² = cost/(m − n); absent when JᵀJ is singular.
    pub covariance: Option<Vec<Vec<f64>>>,
    pub stderr: Vec<f64>,
    /// Parameter dominating the Jacobian's null space, if any.
    pub rank_deficient: Option<usize>,
}

impl LmFit {
    pub fn residual_norm(&self) -> f64 {
        self.cost.sqrt()
    }

    /// cost/(m − n), or the cost itself when there are no degrees of freedom.
    pub fn reduced_chi2(&self) -> f64 {
        let dof = self.residuals.len().saturating_sub(self.params.len());
        if dof == 0 {
            self.cost
        } else {
            self.cost / dof as f64
        }
    }
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn jacobian<F>(f: &F, x: &[f64], m: usize, rel: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut j = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for k in 0..n {
        let h = rel * x[k].abs().max(1.0);
        xp[k] = x[k] + h;
        let fp = f(&xp)?;
        xp[k] = x[k] - h;
        let fm = f(&xp)?;
        xp[k] = x[k];
        for i in 0..m {
            j[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(j)
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Minimise Σ rᵢ(x)² from `x0`.
pub fn levenberg_marquardt<F>(f: F, x0: &[f64], opts: &LmOptions) -> Result<LmFit>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = f(&x)?;
    let m = r.len();
    if n == 0 || m < n {
        return Err(Error::Domain(format!(
            "need at least as many residuals ({m}) as parameters ({n} > 0)"
        )));
    }
    if !finite(&r) {
        return Err(Error::Domain("residuals not finite at the initial point".into()));
    }
    let mut cost = cost_of(&r);
    let mut lambda = 1e-3;
    let mut converged = cost == 0.0;
    let mut iterations = 0;

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let j = jacobian(&f, &x, m, opts.jacobian_step)?;
        let rv = DVector::from_column_slice(&r);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &rv;
        if g.amax() < opts.gradient_tolerance {
            converged = true;
            break;
        }
        loop {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let step = match a.clone().cholesky() {
                Some(c) => c.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        break;
                    }
                    continue;
                }
            };
            let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rn = f(&xn)?;
            let cn = if finite(&rn) { cost_of(&rn) } else { f64::INFINITY };
            if cn < cost {
                let rel_cost = (cost - cn) / cost.max(f64::MIN_POSITIVE);
                let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let rel_step = step.norm() / xnorm.max(f64::MIN_POSITIVE);
                x = xn;
                r = rn;
                cost = cn;
                lambda = (lambda / 10.0).max(1e-12);
                if rel_cost < opts.cost_tolerance || rel_step < opts.step_tolerance || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                break;
            }
        }
        if lambda > 1e16 {
            // no descent direction left at machine precision
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "least squares did not converge in {} iterations (cost {cost:.3e})",
            opts.max_iterations
        )));
    }

    let j = jacobian(&f, &x, m, opts.jacobian_step)?;
    let svd = j.clone().svd(false, true);
    let smax = svd.singular_values.max();
    let mut rank_deficient = None;
    if let Some(vt) = &svd.v_t {
        for (k, s) in svd.singular_values.iter().enumerate() {
            if *s <= opts.rank_tolerance * smax || smax == 0.0 {
                let row = vt.row(k);
                let worst = (0..n)
                    .max_by(|a, b| row[*a].abs().total_cmp(&row[*b].abs()))
                    .unwrap_or(0);
                rank_deficient = Some(worst);
                break;
            }
        }
    }
    let dof = m.saturating_sub(n).max(1) as f64;
    let s2 = cost / dof;
    let covariance = if rank_deficient.is_none() {
        (j.transpose() * &j).try_inverse().map(|inv| {
            (0..n)
                .map(|a| (0..n).map(|b| s2 * inv[(a, b)]).collect())
                .collect::<Vec<Vec<f64>>>()
        })
    } else {
        None
    };
    let stderr = match &covariance {
        Some(c) => (0..n).map(|k| c[k][k].max(0.0).sqrt()).collect(),
        None => vec![f64::INFINITY; n],
    };
    Ok(LmFit {
        params: x,
        residuals: r,
        cost,
        iterations,
        covariance,
        stderr,
        rank_deficient,
    })
}
