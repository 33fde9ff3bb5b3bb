//! Stochastic frontier estimation: translog design construction, maximum
//! likelihood under the Battese–Coelli (1992) time-decay specification, and
//! per-observation technical-efficiency prediction.

pub mod design;
pub mod likelihood;

use rayon::prelude::*;

pub use design::{
    build_design, n_translog_coefficients, translog_names, translog_row, TranslogDesign,
};
pub use likelihood::{grad_loglik, grad_loglik_transformed, loglik, predict_te, SfaParams};

use crate::linalg::{ols, Mat};
use crate::num::{c, Real};
use crate::optim::{hessian_from_grad, minimize, BfgsOptions};
use crate::rng::SplitMix64;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct SfaOptions<T> {
    /// Number of optimizer starts: the OLS-based start plus random
    /// perturbations of it. A restricted (μ = 0) warm start is always
    /// prepended unless μ is already pinned.
    pub starts: usize,
    pub grad_tol: T,
    pub f_tol: T,
    pub max_iterations: usize,
    /// Restrict μ = 0 (half-normal inefficiency).
    pub half_normal: bool,
    /// Seed for the start-perturbation stream.
    pub seed: u64,
}

impl<T: Real> Default for SfaOptions<T> {
    fn default() -> Self {
        Self {
            starts: 5,
            grad_tol: c::<T>(1e-6),
            f_tol: c::<T>(1e-9),
            max_iterations: 500,
            half_normal: false,
            seed: 0xEFFB,
        }
    }
}

/// Optimizer diagnostics for the winning start.
#[derive(Clone, Debug)]
pub struct Convergence<T> {
    pub iterations: usize,
    pub grad_norm: T,
    pub restarts: usize,
    pub converged: bool,
    /// How many of the multi-starts converged.
    pub starts_converged: usize,
}

/// Fitted stochastic frontier.
#[derive(Clone, Debug)]
pub struct SfaFit<T> {
    pub params: SfaParams<T>,
    /// Standard errors on the natural scale, aligned with
    /// [`SfaFit::parameter_names`]: frontier coefficients, then σ², γ, μ, η.
    pub std_errors: Vec<T>,
    pub log_likelihood: T,
    /// Technical efficiency per observation, design row order.
    pub te: Vec<T>,
    pub convergence: Convergence<T>,
    /// Frontier coefficient names from the design.
    pub coefficient_names: Vec<String>,
    pub dmus: Vec<String>,
    pub periods: Vec<i32>,
}

impl<T: Real> SfaFit<T> {
    /// Names for the full parameter vector (coefficients then variance
    /// parameters), aligned with `std_errors`.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = self.coefficient_names.clone();
        names.extend(["sigma_sq", "gamma", "mu", "eta"].map(String::from));
        names
    }

    /// Natural-scale estimates aligned with [`SfaFit::parameter_names`].
    pub fn parameter_values(&self) -> Vec<T> {
        let mut v = self.params.beta.clone();
        v.extend([
            self.params.sigma_sq,
            self.params.gamma,
            self.params.mu,
            self.params.eta,
        ]);
        v
    }

    pub fn te_at(&self, dmu_idx: usize, period_idx: usize) -> T {
        self.te[dmu_idx * self.periods.len() + period_idx]
    }

    /// Per-DMU mean TE across periods.
    pub fn dmu_mean(&self, dmu_idx: usize) -> T {
        let t = self.periods.len();
        (0..t).map(|p| self.te_at(dmu_idx, p)).sum::<T>() / c::<T>(t as f64)
    }

    /// Per-DMU percent variation `(last − first)/first × 100`.
    pub fn dmu_pct_var(&self, dmu_idx: usize) -> T {
        let t = self.periods.len();
        let first = self.te_at(dmu_idx, 0);
        let last = self.te_at(dmu_idx, t - 1);
        (last - first) / first * c::<T>(100.0)
    }
}

/// Centering/scaling of the non-constant design columns. Translog columns
/// span several orders of magnitude, which wrecks quasi-Newton conditioning;
/// the optimizer therefore works on standardized columns and the fit maps
/// coefficients (and their covariance) back to the raw scale.
struct Standardizer<T> {
    means: Vec<T>,
    sds: Vec<T>,
}

impl<T: Real> Standardizer<T> {
    fn fit(matrix: &Mat<T>) -> Self {
        let n = matrix.nrows();
        let p = matrix.ncols();
        let nf = c::<T>(n as f64);
        let mut means = vec![T::zero(); p];
        let mut sds = vec![T::one(); p];
        for j in 1..p {
            let mut m = T::zero();
            for i in 0..n {
                m += matrix[(i, j)];
            }
            m /= nf;
            let mut ss = T::zero();
            for i in 0..n {
                let d = matrix[(i, j)] - m;
                ss += d * d;
            }
            let sd = (ss / nf).sqrt();
            means[j] = m;
            sds[j] = if sd > c::<T>(1e-12) { sd } else { T::one() };
        }
        Self { means, sds }
    }

    fn apply(&self, matrix: &Mat<T>) -> Mat<T> {
        let mut out = matrix.clone();
        for i in 0..out.nrows() {
            for j in 1..out.ncols() {
                out[(i, j)] = (out[(i, j)] - self.means[j]) / self.sds[j];
            }
        }
        out
    }

    /// Raw-scale coefficients from standardized ones.
    fn beta_to_raw(&self, std_beta: &[T]) -> Vec<T> {
        let p = std_beta.len();
        let mut raw = vec![T::zero(); p];
        let mut intercept = std_beta[0];
        for j in 1..p {
            raw[j] = std_beta[j] / self.sds[j];
            intercept -= std_beta[j] * self.means[j] / self.sds[j];
        }
        raw[0] = intercept;
        raw
    }

    /// Jacobian of the raw β block with respect to the standardized one.
    fn beta_jacobian(&self, p: usize) -> Mat<T> {
        let mut j = Mat::zeros(p, p);
        j[(0, 0)] = T::one();
        for k in 1..p {
            j[(0, k)] = -self.means[k] / self.sds[k];
            j[(k, k)] = T::one() / self.sds[k];
        }
        j
    }
}

/// Maximize the panel likelihood by multi-start BFGS on the transformed
/// parameters. The first start combines OLS frontier coefficients with
/// (σ² = 2·RSS/n, γ = ½, μ = 0, η = 0); the remaining starts jitter it.
pub fn fit_sfa<T: Real>(design: &TranslogDesign<T>, options: &SfaOptions<T>) -> Result<SfaFit<T>> {
    let p = design.n_coefficients();
    if design.matrix.xtx().rank() < p {
        return Err(Error::DegenerateDesign {
            rank: design.matrix.xtx().rank(),
            cols: p,
        });
    }
    let scaler = Standardizer::fit(&design.matrix);
    let std_design = TranslogDesign {
        response: design.response.clone(),
        matrix: scaler.apply(&design.matrix),
        names: design.names.clone(),
        dmus: design.dmus.clone(),
        periods: design.periods.clone(),
    };

    let beta0 = ols(&std_design.matrix, &std_design.response)
        .ok_or(Error::DegenerateDesign { rank: 0, cols: p })?;
    let fitted = std_design.matrix.mul_vec(&beta0);
    let rss: T = std_design
        .response
        .iter()
        .zip(&fitted)
        .map(|(&y, &f)| (y - f) * (y - f))
        .sum();
    let n_obs = c::<T>(design.n_obs() as f64);
    let base = SfaParams {
        beta: beta0,
        sigma_sq: c::<T>(2.0) * rss / n_obs,
        gamma: c::<T>(0.5),
        mu: T::zero(),
        eta: T::zero(),
    };
    let base_v = base.to_transformed(options.half_normal);

    let bfgs = BfgsOptions {
        grad_tol: options.grad_tol,
        f_tol: options.f_tol,
        max_iterations: options.max_iterations,
    };
    let half_normal = options.half_normal;
    let make_objective = |restricted: bool| {
        let std_design = &std_design;
        move |v: &[T]| {
            if v.iter().any(|x| x.abs() > c::<T>(60.0)) {
                return None;
            }
            let params = SfaParams::from_transformed(v, p, restricted);
            let f = loglik(&params, std_design).ok()?;
            let g = grad_loglik_transformed(&params, std_design, restricted).ok()?;
            Some((-f, g.into_iter().map(|x| -x).collect()))
        }
    };

    let mut starts: Vec<Vec<T>> = Vec::with_capacity(options.starts.max(1) + 1);
    // The pre-truncation mean μ is only weakly separated from the intercept
    // once μ/σ_u grows, and the unrestricted surface has a soft ridge in
    // that direction. Warm-starting from the μ = 0 (half-normal) optimum
    // puts the lead start inside the identified basin.
    if !half_normal {
        let restricted_base = base.to_transformed(true);
        if let Some(restricted) =
            minimize(make_objective(true), &restricted_base, &bfgs).filter(|o| o.converged)
        {
            let mut warm = restricted.x.clone();
            warm.insert(p + 2, T::zero());
            starts.push(warm);
        }
    }
    starts.push(base_v.clone());
    for k in 1..options.starts.max(1) {
        let mut rng = SplitMix64::stream(options.seed, 0x5FA0, k as u64);
        let mut v = base_v.clone();
        for (j, vj) in v.iter_mut().enumerate() {
            let spread = if j < p {
                c::<T>(0.1) * (T::one() + vj.abs())
            } else {
                c::<T>(0.4)
            };
            *vj += rng.normal(T::zero(), spread);
        }
        starts.push(v);
    }

    let objective = make_objective(half_normal);
    let outcomes: Vec<_> = starts
        .par_iter()
        .map(|x0| minimize(objective, x0, &bfgs))
        .collect();

    let starts_converged = outcomes.iter().flatten().filter(|o| o.converged).count();
    let best = outcomes
        .iter()
        .flatten()
        .filter(|o| o.converged)
        .min_by(|a, b| a.f.partial_cmp(&b.f).expect("finite objective"));
    let Some(best) = best else {
        let diag = outcomes
            .iter()
            .flatten()
            .map(|o| format!("grad_norm {} after {} iters", o.grad_norm, o.iterations))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::NonConvergence(format!(
            "no start reached tolerance ({diag})"
        )));
    };

    let std_params = SfaParams::from_transformed(&best.x, p, half_normal);
    let params = SfaParams {
        beta: scaler.beta_to_raw(&std_params.beta),
        ..std_params.clone()
    };
    let log_likelihood = -best.f;
    let te = predict_te(&params, design)?;
    // Report the gradient on the raw transformed scale as well.
    let raw_grad_norm = grad_loglik_transformed(&params, design, half_normal)
        .map(|g| g.iter().map(|&x| x * x).sum::<T>().sqrt())
        .unwrap_or(best.grad_norm);

    // Observed information on the standardized transformed scale, mapped to
    // the natural scale through the combined Jacobian.
    let info = hessian_from_grad(
        |v| {
            let pp = SfaParams::from_transformed(v, p, half_normal);
            grad_loglik_transformed(&pp, &std_design, half_normal)
                .ok()
                .map(|g| g.into_iter().map(|x| -x).collect())
        },
        &best.x,
        c::<T>(1e-4),
    );
    let cov = info.and_then(|h| h.inverse());
    let std_errors = natural_std_errors(&params, &scaler, cov.as_ref(), p, half_normal);

    debug_assert!(
        te_ranks_period_invariant(&te, design.n_dmus(), design.n_periods()),
        "u_it = scalar(t)·u_i makes per-period TE rankings identical"
    );

    Ok(SfaFit {
        std_errors,
        log_likelihood,
        te,
        convergence: Convergence {
            iterations: best.iterations,
            grad_norm: raw_grad_norm,
            restarts: best.restarts,
            converged: best.converged,
            starts_converged,
        },
        coefficient_names: design.names.clone(),
        dmus: design.dmus.clone(),
        periods: design.periods.clone(),
        params,
    })
}

/// Pairwise TE orderings must agree across periods.
fn te_ranks_period_invariant<T: Real>(te: &[T], n: usize, t_len: usize) -> bool {
    for a in 0..n {
        for b in a + 1..n {
            let base = te[a * t_len].partial_cmp(&te[b * t_len]);
            for tt in 1..t_len {
                if te[a * t_len + tt].partial_cmp(&te[b * t_len + tt]) != base {
                    return false;
                }
            }
        }
    }
    true
}

/// Delta-method standard errors on the natural scale, aligned
/// `[β…, σ², γ, μ, η]`. The covariance arrives on the standardized
/// transformed scale; the natural-scale Jacobian is block diagonal — the
/// de-standardization map for β, `σ²` and `γ(1−γ)` for their transforms,
/// identity for μ and η. Unavailable entries (singular information, or μ
/// under the half-normal restriction) come back as NaN / 0.
fn natural_std_errors<T: Real>(
    params: &SfaParams<T>,
    scaler: &Standardizer<T>,
    cov: Option<&Mat<T>>,
    p: usize,
    half_normal: bool,
) -> Vec<T> {
    let dim = p + if half_normal { 3 } else { 4 };
    let Some(cov) = cov else {
        let mut out = vec![T::nan(); p + 4];
        if half_normal {
            out[p + 2] = T::zero();
        }
        return out;
    };
    let mut jac = Mat::zeros(p + 4, dim);
    let beta_jac = scaler.beta_jacobian(p);
    for i in 0..p {
        for j in 0..p {
            jac[(i, j)] = beta_jac[(i, j)];
        }
    }
    jac[(p, p)] = params.sigma_sq;
    jac[(p + 1, p + 1)] = params.gamma * (T::one() - params.gamma);
    if half_normal {
        // μ row stays zero; η maps from the last transformed slot.
        jac[(p + 3, p + 2)] = T::one();
    } else {
        jac[(p + 2, p + 2)] = T::one();
        jac[(p + 3, p + 3)] = T::one();
    }
    let natural_cov = jac.matmul(cov).matmul(&jac.transpose());
    (0..p + 4)
        .map(|i| natural_cov[(i, i)].max(T::zero()).sqrt())
        .collect()
}
