//! Two-limit Tobit maximum likelihood.
//!
//! The latent regression `y* = Zβ + ε`, `ε ~ N(0, σ²)` is observed censored
//! at 0 from below and 1 from above. Quasi-Newton on `(β, ln σ)` with the
//! analytic score; interior observations contribute the Gaussian density,
//! censored ones the tail probabilities, evaluated in log space.

use crate::num::{c, mills, norm_ln_cdf, Real};
use crate::optim::{hessian_from_grad, minimize, BfgsOptions};
use crate::second_stage::CovariateMatrix;
use crate::{linalg, Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Clone, Debug)]
pub struct TobitOptions<T> {
    pub grad_tol: T,
    pub max_iterations: usize,
    /// Cluster labels (one per observation) for sandwich standard errors
    /// robust to within-cluster dependence, e.g. the DMU index on pooled
    /// panel scores. `None` keeps plain observed-information errors.
    pub cluster: Option<Vec<usize>>,
}

impl<T: Real> Default for TobitOptions<T> {
    fn default() -> Self {
        Self {
            grad_tol: c::<T>(1e-6),
            max_iterations: 500,
            cluster: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TobitFit<T> {
    pub names: Vec<String>,
    pub coefficients: Vec<T>,
    pub sigma: T,
    /// Standard errors for the coefficients: observed information, or the
    /// cluster-robust sandwich when clustering was requested.
    pub std_errors: Vec<T>,
    pub sigma_std_error: T,
    pub log_likelihood: T,
    pub n_left: usize,
    pub n_interior: usize,
    pub n_right: usize,
}

enum Regime {
    Left,
    Interior,
    Right,
}

fn classify<T: Real>(y: T) -> Regime {
    if y <= T::zero() {
        Regime::Left
    } else if y >= T::one() {
        Regime::Right
    } else {
        Regime::Interior
    }
}

/// Log-likelihood and score contribution of one observation on (β, ln σ).
fn obs_loglik_score<T: Real>(y: T, row: &[T], beta: &[T], sigma: T) -> (T, Vec<T>) {
    let p = beta.len();
    let half = c::<T>(0.5);
    let m: T = row.iter().zip(beta).map(|(&a, &b)| a * b).sum();
    let mut score = vec![T::zero(); p + 1];
    let ll = match classify(y) {
        Regime::Interior => {
            let u = (y - m) / sigma;
            for (g, &zj) in score.iter_mut().zip(row) {
                *g = zj * u / sigma;
            }
            score[p] = u * u - T::one();
            -half * u * u - sigma.ln() - half * c::<T>(LN_2PI)
        }
        Regime::Left => {
            let zl = -m / sigma;
            let lam = mills(zl);
            for (g, &zj) in score.iter_mut().zip(row) {
                *g = -lam * zj / sigma;
            }
            score[p] = lam * m / sigma;
            norm_ln_cdf(zl)
        }
        Regime::Right => {
            let zr = (m - T::one()) / sigma;
            let lam = mills(zr);
            for (g, &zj) in score.iter_mut().zip(row) {
                *g = lam * zj / sigma;
            }
            score[p] = -lam * (m - T::one()) / sigma;
            norm_ln_cdf(zr)
        }
    };
    (ll, score)
}

fn loglik_grad<T: Real>(scores: &[T], z: &CovariateMatrix<T>, v: &[T]) -> Option<(T, Vec<T>)> {
    let p = z.n_cols();
    let sigma = v[p].exp();
    if !sigma.is_finite() || sigma <= T::zero() {
        return None;
    }
    let beta = &v[..p];
    let mut ll = T::zero();
    let mut grad = vec![T::zero(); p + 1];
    for (i, &y) in scores.iter().enumerate() {
        let (ll_i, score_i) = obs_loglik_score(y, z.z.row(i), beta, sigma);
        ll += ll_i;
        for (g, s) in grad.iter_mut().zip(score_i) {
            *g += s;
        }
    }
    if ll.is_finite() {
        Some((ll, grad))
    } else {
        None
    }
}

/// Liang–Zeger sandwich covariance on (β, ln σ):
/// `H⁻¹ (Σ_g S_g S_g') H⁻¹ · G/(G−1)` with per-cluster score sums S_g.
fn cluster_sandwich<T: Real>(
    scores: &[T],
    z: &CovariateMatrix<T>,
    v: &[T],
    info: &linalg::Mat<T>,
    cluster: &[usize],
) -> Option<linalg::Mat<T>> {
    let p = z.n_cols();
    let sigma = v[p].exp();
    let beta = &v[..p];
    let mut sums: std::collections::BTreeMap<usize, Vec<T>> = std::collections::BTreeMap::new();
    for (i, &y) in scores.iter().enumerate() {
        let (_, score_i) = obs_loglik_score(y, z.z.row(i), beta, sigma);
        let entry = sums
            .entry(cluster[i])
            .or_insert_with(|| vec![T::zero(); p + 1]);
        for (e, s) in entry.iter_mut().zip(score_i) {
            *e += s;
        }
    }
    let n_clusters = sums.len();
    if n_clusters < 2 {
        return None;
    }
    let mut meat = linalg::Mat::zeros(p + 1, p + 1);
    for s in sums.values() {
        for a in 0..p + 1 {
            for b in 0..p + 1 {
                meat[(a, b)] += s[a] * s[b];
            }
        }
    }
    let correction = c::<T>(n_clusters as f64 / (n_clusters as f64 - 1.0));
    let bread = info.inverse()?;
    let mut cov = bread.matmul(&meat).matmul(&bread);
    for a in 0..p + 1 {
        for b in 0..p + 1 {
            cov[(a, b)] *= correction;
        }
    }
    Some(cov)
}

/// Fit the two-limit Tobit of `scores` on the covariates.
pub fn tobit_fit<T: Real>(
    scores: &[T],
    z: &CovariateMatrix<T>,
    options: &TobitOptions<T>,
) -> Result<TobitFit<T>> {
    if scores.len() != z.n_rows() {
        return Err(Error::InvalidConfig(format!(
            "{} scores vs {} covariate rows",
            scores.len(),
            z.n_rows()
        )));
    }
    let (mut n_left, mut n_interior, mut n_right) = (0usize, 0usize, 0usize);
    for &y in scores {
        match classify(y) {
            Regime::Left => n_left += 1,
            Regime::Interior => n_interior += 1,
            Regime::Right => n_right += 1,
        }
    }
    let n = scores.len();
    if n_left == n || n_right == n {
        return Err(Error::DegenerateCensoring);
    }

    let p = z.n_cols();
    let beta0 = linalg::ols(&z.z, scores).ok_or(Error::DegenerateDesign {
        rank: z.z.xtx().rank(),
        cols: p,
    })?;
    let fitted = z.z.mul_vec(&beta0);
    let rss: T = scores
        .iter()
        .zip(&fitted)
        .map(|(&y, &f)| (y - f) * (y - f))
        .sum();
    let sigma0 = (rss / c::<T>(n as f64)).sqrt().max(c::<T>(1e-4));
    let mut x0 = beta0;
    x0.push(sigma0.ln());

    let objective = |v: &[T]| {
        loglik_grad(scores, z, v).map(|(ll, g)| (-ll, g.into_iter().map(|x| -x).collect()))
    };
    let bfgs = BfgsOptions {
        grad_tol: options.grad_tol,
        max_iterations: options.max_iterations,
        ..Default::default()
    };
    let out = minimize(objective, &x0, &bfgs).ok_or(Error::NonFinite)?;
    if !out.converged {
        return Err(Error::NonConvergence(format!(
            "tobit gradient norm {} after {} iterations",
            out.grad_norm, out.iterations
        )));
    }

    let info = hessian_from_grad(
        |v| loglik_grad(scores, z, v).map(|(_, g)| g.into_iter().map(|x| -x).collect()),
        &out.x,
        c::<T>(1e-4),
    );
    let cov = match (&options.cluster, &info) {
        (Some(cluster), Some(info)) => {
            if cluster.len() != scores.len() {
                return Err(Error::InvalidConfig(format!(
                    "{} cluster labels vs {} observations",
                    cluster.len(),
                    scores.len()
                )));
            }
            cluster_sandwich(scores, z, &out.x, info, cluster)
        }
        (None, Some(info)) => info.inverse(),
        _ => None,
    };
    let sigma = out.x[p].exp();
    let se = |j: usize| {
        cov.as_ref()
            .map_or(T::nan(), |m| m[(j, j)].max(T::zero()).sqrt())
    };
    let std_errors: Vec<T> = (0..p).map(se).collect();
    let sigma_std_error = se(p) * sigma;

    Ok(TobitFit {
        names: z.names.clone(),
        coefficients: out.x[..p].to_vec(),
        sigma,
        std_errors,
        sigma_std_error,
        log_likelihood: -out.f,
        n_left,
        n_interior,
        n_right,
    })
}
