//! Dense least squares, Cholesky, and small-VAR helpers.
//!
//! Everything here is small: designs have at most a few dozen columns and a
//! few thousand rows, VARs have at most a handful of variables. Plain
//! Householder QR and textbook Cholesky are accurate and more than fast
//! enough, and hand-rolling them lets errors point at the exact column or
//! pivot that failed.

use crate::mat::DataMatrix;
use crate::{Error, Result};

/// Ordinary least squares output.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Residual variance, sum of squared residuals over `n - p`.
    pub sigma2: f64,
    /// Classical coefficient standard errors (no serial-correlation
    /// correction; the crate's interval statements come from posteriors or
    /// Monte Carlo, not from these).
    pub std_errors: Vec<f64>,
}

/// Least squares of `y` on the columns of `x` via Householder QR.
///
/// Rank deficiency is reported as [`Error::SingularDesign`] naming the first
/// column that is linearly dependent on its predecessors.
pub fn ols(x: &DataMatrix, y: &[f64]) -> Result<OlsFit> {
    let n = x.rows();
    let p = x.cols();
    if y.len() != n {
        return Err(Error::Dimension(format!(
            "response has {} rows, design has {n}",
            y.len()
        )));
    }
    if n <= p {
        return Err(Error::Dimension(format!(
            "need more rows than columns: {n} rows, {p} columns"
        )));
    }

    // Column-major working copy of X and a copy of y; both are overwritten
    // by the factorization (X becomes R in its upper triangle, y becomes
    // Q'y).
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| x.column(j)).collect();
    let mut qty = y.to_vec();

    // One tolerance for the whole factorization, scaled to the largest
    // column of X.
    let xscale = a
        .iter()
        .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    let tol = f64::EPSILON * (n.max(p) as f64) * xscale.max(1.0);

    // Householder QR with column-by-column reflection.
    for j in 0..p {
        // Norm of the trailing part of column j. If projecting out the
        // previous columns left (numerically) nothing, column j is in
        // their span.
        let norm = a[j][j..n].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= tol {
            return Err(Error::SingularDesign {
                column: x.labels()[j].clone(),
            });
        }
        let alpha = if a[j][j] >= 0.0 { -norm } else { norm };
        // Householder vector v = x - alpha e1; its tail below the diagonal
        // stays in column j (nothing reads the lower triangle afterwards),
        // so only the reflected columns to the right and Q'y are updated.
        let v0 = a[j][j] - alpha;
        let beta = -1.0 / (alpha * v0); // 2 / v'v, using v'v = -2 alpha v0
        for k in j + 1..p {
            // w = beta * v' a_k
            let mut w = v0 * a[k][j];
            for i in j + 1..n {
                w += a[j][i] * a[k][i];
            }
            w *= beta;
            a[k][j] -= w * v0;
            for i in j + 1..n {
                a[k][i] -= w * a[j][i];
            }
        }
        {
            let mut w = v0 * qty[j];
            for i in j + 1..n {
                w += a[j][i] * qty[i];
            }
            w *= beta;
            qty[j] -= w * v0;
            for i in j + 1..n {
                qty[i] -= w * a[j][i];
            }
        }
        a[j][j] = alpha;
    }

    // Back substitution: R beta = Q'y (first p entries).
    let mut coefficients = vec![0.0; p];
    for j in (0..p).rev() {
        let mut s = qty[j];
        for k in j + 1..p {
            s -= a[k][j] * coefficients[k];
        }
        coefficients[j] = s / a[j][j];
    }

    let mut residuals = Vec::with_capacity(n);
    let mut rss = 0.0;
    for i in 0..n {
        let mut fit = 0.0;
        for (j, b) in coefficients.iter().enumerate() {
            fit += x.get(i, j) * b;
        }
        let r = y[i] - fit;
        rss += r * r;
        residuals.push(r);
    }
    let sigma2 = rss / (n - p) as f64;

    // (X'X)^{-1} = R^{-1} R^{-T}; diagonal entry i is the squared norm of
    // row i of R^{-1}. Solve R u = e_j for each j to get its columns.
    let mut rinv = vec![vec![0.0; p]; p]; // rinv[j] = column j of R^{-1}
    for j in 0..p {
        let mut u = vec![0.0; p];
        u[j] = 1.0;
        for i in (0..=j).rev() {
            let mut s = u[i];
            for k in i + 1..=j {
                s -= a[k][i] * u[k];
            }
            u[i] = s / a[i][i];
        }
        rinv[j] = u;
    }
    let std_errors = (0..p)
        .map(|i| {
            let mut s = 0.0;
            for col in rinv.iter().skip(i) {
                s += col[i] * col[i];
            }
            (sigma2 * s).sqrt()
        })
        .collect();

    Ok(OlsFit {
        coefficients,
        residuals,
        sigma2,
        std_errors,
    })
}

/// Lower Cholesky factor of a symmetric positive definite matrix given in
/// row-major order. Fails with the pivot index where positivity breaks.
pub fn cholesky_lower(a: &[f64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n, "matrix buffer has wrong length");
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let dj = d.sqrt();
        l[j * n + j] = dj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / dj;
        }
    }
    Ok(l)
}

/// A fitted vector autoregression.
#[derive(Debug, Clone)]
pub struct VarModel {
    pub var_names: Vec<String>,
    pub lags: usize,
    pub intercept: Vec<f64>,
    /// `coefficients[l][i][j]`: effect of variable `j` at lag `l+1` on
    /// variable `i`.
    pub coefficients: Vec<Vec<Vec<f64>>>,
    /// Residual covariance, row-major `k x k`, divisor `n - p`.
    pub residual_cov: Vec<f64>,
    /// Per-equation residuals, one row per usable period `t = lags..T`.
    pub residuals: Vec<Vec<f64>>,
}

/// Equation-by-equation least squares VAR fit with intercepts.
pub fn var_fit(data: &DataMatrix, lags: usize) -> Result<VarModel> {
    let t = data.rows();
    let k = data.cols();
    if lags == 0 {
        return Err(Error::InvalidParameter {
            name: "lags",
            reason: "must be at least 1".into(),
        });
    }
    let p = 1 + k * lags;
    if t <= lags + p {
        return Err(Error::SampleTooShort {
            horizon: 0,
            lags,
            rows: t.saturating_sub(lags),
            need: p + 1,
        });
    }

    let rows = t - lags;
    let mut columns: Vec<(String, Vec<f64>)> = vec![("const".into(), vec![1.0; rows])];
    for l in 1..=lags {
        for j in 0..k {
            let name = format!("{}.l{l}", data.labels()[j]);
            let col = (lags..t).map(|i| data.get(i - l, j)).collect();
            columns.push((name, col));
        }
    }
    let design = DataMatrix::from_columns(columns)?;

    let mut intercept = vec![0.0; k];
    let mut coefficients = vec![vec![vec![0.0; k]; k]; lags];
    let mut residuals: Vec<Vec<f64>> = vec![vec![0.0; k]; rows];
    for i in 0..k {
        let y: Vec<f64> = (lags..t).map(|r| data.get(r, i)).collect();
        let fit = ols(&design, &y)?;
        intercept[i] = fit.coefficients[0];
        for l in 0..lags {
            for j in 0..k {
                coefficients[l][i][j] = fit.coefficients[1 + l * k + j];
            }
        }
        for (r, e) in fit.residuals.iter().enumerate() {
            residuals[r][i] = *e;
        }
    }

    let dof = (rows - p) as f64;
    let mut residual_cov = vec![0.0; k * k];
    for r in &residuals {
        for i in 0..k {
            for j in 0..k {
                residual_cov[i * k + j] += r[i] * r[j] / dof;
            }
        }
    }

    Ok(VarModel {
        var_names: data.labels().to_vec(),
        lags,
        intercept,
        coefficients,
        residual_cov,
        residuals,
    })
}

/// Impact vector of a recursively identified shock: column `shock_index` of
/// the lower Cholesky factor of the residual covariance, scaled by `size`.
pub fn var_impulse_vector(model: &VarModel, shock_index: usize, size: f64) -> Result<Vec<f64>> {
    let k = model.var_names.len();
    if shock_index >= k {
        return Err(Error::InvalidParameter {
            name: "shock_index",
            reason: format!("index {shock_index} out of range for {k} variables"),
        });
    }
    let l = cholesky_lower(&model.residual_cov, k)?;
    Ok((0..k).map(|i| l[i * k + shock_index] * size).collect())
}

/// Linear impulse responses to an impact vector, horizons `0..=horizon`,
/// via one pass of the companion-form recursion.
pub fn var_linear_irf(model: &VarModel, impact: &[f64], horizon: usize) -> Vec<Vec<f64>> {
    let k = model.var_names.len();
    assert_eq!(impact.len(), k, "impact vector length must match variables");
    let dim = k * model.lags;
    // Companion state holds (y_t, y_{t-1}, ..., y_{t-L+1}) deviations.
    let mut state = vec![0.0; dim];
    state[..k].copy_from_slice(impact);
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(impact.to_vec());
    for _ in 1..=horizon {
        let mut next = vec![0.0; dim];
        for i in 0..k {
            let mut s = 0.0;
            for (l, block) in model.coefficients.iter().enumerate() {
                for j in 0..k {
                    s += block[i][j] * state[l * k + j];
                }
            }
            next[i] = s;
        }
        for l in 1..model.lags {
            for j in 0..k {
                next[l * k + j] = state[(l - 1) * k + j];
            }
        }
        out.push(next[..k].to_vec());
        state = next;
    }
    out
}
