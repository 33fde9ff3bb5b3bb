//! Battese–Coelli (1992) panel likelihood, analytic gradient, and the
//! conditional technical-efficiency predictor.
//!
//! Model for the translog response `R_it = −ln y_Mit`:
//!
//! ```text
//! R_it = x_it'β + η_t u_i + v_it,   η_t = exp(−η (t − T)),
//! v_it ~ N(0, σ_v²),   u_i ~ N(μ, σ_u²) truncated at zero.
//! ```
//!
//! Inefficiency enters the negative log output with a positive sign, so
//! u_i > 0 lowers y_M and `TE_it = E[exp(−η_t u_i) | e_i] ∈ (0, 1)`.
//! Integrating u_i out analytically gives, per DMU, with
//! `a = σ_v² = (1−γ)σ²`, `b = σ_u² = γσ²`, `q = Σ_t η_t²`, `r_i = Σ_t η_t e_it`,
//! `S_i = Σ_t e_it²`, `D = a + bq`, `G_i = μa + b r_i`:
//!
//! ```text
//! ln f_i = −T/2 ln 2π − (T−1)/2 ln a − ½ ln D − ln Φ(μ/√b) + ln Φ(G_i/√(abD))
//!          − S_i/(2a) − μ²/(2b) + G_i²/(2abD)
//! ```
//!
//! The conditional distribution of u_i given the residual vector is
//! N(μ*_i, σ*²) truncated at zero with `μ*_i = G_i/D` and `σ*² = ab/D`,
//! which yields the closed-form TE predictor below. The σ-parameterization
//! is `(σ², γ = σ_u²/σ²)` with log/logit transforms for unconstrained
//! optimization.

use crate::num::{c, mills, norm_ln_cdf, Real};
use crate::sfa::design::TranslogDesign;
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Natural-scale parameters of the stochastic frontier.
#[derive(Clone, Debug)]
pub struct SfaParams<T> {
    /// Frontier coefficients aligned with the design columns.
    pub beta: Vec<T>,
    /// Total error variance σ² = σ_v² + σ_u².
    pub sigma_sq: T,
    /// Variance share γ = σ_u²/σ² ∈ (0, 1).
    pub gamma: T,
    /// Mean of the pre-truncation inefficiency distribution.
    pub mu: T,
    /// Time-decay rate of inefficiency.
    pub eta: T,
}

impl<T: Real> SfaParams<T> {
    pub fn sigma_v_sq(&self) -> T {
        (T::one() - self.gamma) * self.sigma_sq
    }

    pub fn sigma_u_sq(&self) -> T {
        self.gamma * self.sigma_sq
    }

    fn valid(&self) -> bool {
        self.sigma_sq > T::zero()
            && self.gamma > T::zero()
            && self.gamma < T::one()
            && self.sigma_sq.is_finite()
            && self.mu.is_finite()
            && self.eta.is_finite()
            && self.beta.iter().all(|b| b.is_finite())
    }

    /// Pack into the unconstrained optimizer vector
    /// `[β…, ln σ², logit γ, (μ,) η]`; μ is dropped under the half-normal
    /// restriction.
    pub fn to_transformed(&self, half_normal: bool) -> Vec<T> {
        let mut v = self.beta.clone();
        v.push(self.sigma_sq.ln());
        v.push((self.gamma / (T::one() - self.gamma)).ln());
        if !half_normal {
            v.push(self.mu);
        }
        v.push(self.eta);
        v
    }

    /// Inverse of [`SfaParams::to_transformed`].
    pub fn from_transformed(v: &[T], n_beta: usize, half_normal: bool) -> Self {
        let beta = v[..n_beta].to_vec();
        let sigma_sq = v[n_beta].exp();
        let g = v[n_beta + 1];
        let gamma = if g >= T::zero() {
            T::one() / (T::one() + (-g).exp())
        } else {
            let e = g.exp();
            e / (T::one() + e)
        };
        let (mu, eta) = if half_normal {
            (T::zero(), v[n_beta + 2])
        } else {
            (v[n_beta + 2], v[n_beta + 3])
        };
        Self {
            beta,
            sigma_sq,
            gamma,
            mu,
            eta,
        }
    }
}

/// Time-decay weights η_t = exp(−η (t − T)) for t = 1..T; the last period
/// always has weight 1.
fn decay_weights<T: Real>(eta: T, n_periods: usize) -> Vec<T> {
    (1..=n_periods)
        .map(|t| (-eta * c::<T>(t as f64 - n_periods as f64)).exp())
        .collect()
}

struct DmuTerms<T> {
    r: T, // Σ η_t e_t
    s: T, // Σ e_t²
    m: T, // Σ (t−T) η_t e_t
    resid: Vec<T>,
}

fn dmu_terms<T: Real>(
    design: &TranslogDesign<T>,
    beta: &[T],
    weights: &[T],
    dmu_idx: usize,
) -> DmuTerms<T> {
    let t_len = design.n_periods();
    let mut r = T::zero();
    let mut s = T::zero();
    let mut m = T::zero();
    let mut resid = Vec::with_capacity(t_len);
    #[allow(clippy::needless_range_loop)]
    for t in 0..t_len {
        let row = design.row_index(dmu_idx, t);
        let fitted: T = design
            .matrix
            .row(row)
            .iter()
            .zip(beta)
            .map(|(&x, &b)| x * b)
            .sum();
        let e = design.response[row] - fitted;
        r += weights[t] * e;
        s += e * e;
        m += c::<T>((t + 1) as f64 - t_len as f64) * weights[t] * e;
        resid.push(e);
    }
    DmuTerms { r, s, m, resid }
}

/// Log-likelihood of the panel at `params`.
pub fn loglik<T: Real>(params: &SfaParams<T>, design: &TranslogDesign<T>) -> Result<T> {
    if !params.valid() {
        return Err(Error::NonFinite);
    }
    let n = design.n_dmus();
    let t_len = design.n_periods();
    let a = params.sigma_v_sq();
    let b = params.sigma_u_sq();
    let weights = decay_weights(params.eta, t_len);
    let q: T = weights.iter().map(|&w| w * w).sum();
    let d = a + b * q;
    let sqrt_abd = (a * b * d).sqrt();
    let z0 = params.mu / b.sqrt();
    let half = c::<T>(0.5);
    let tf = c::<T>(t_len as f64);

    let mut total = T::zero();
    for i in 0..n {
        let terms = dmu_terms(design, &params.beta, &weights, i);
        let g = params.mu * a + b * terms.r;
        let z = g / sqrt_abd;
        let lnf = -tf * half * c::<T>(LN_2PI)
            - (tf - T::one()) * half * a.ln()
            - half * d.ln()
            - norm_ln_cdf(z0)
            + norm_ln_cdf(z)
            - terms.s / (c::<T>(2.0) * a)
            - params.mu * params.mu / (c::<T>(2.0) * b)
            + g * g / (c::<T>(2.0) * a * b * d);
        total += lnf;
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::NonFinite)
    }
}

/// Analytic gradient of [`loglik`] on the natural scale, ordered
/// `[∂β…, ∂σ², ∂γ, ∂μ, ∂η]`.
pub fn grad_loglik<T: Real>(params: &SfaParams<T>, design: &TranslogDesign<T>) -> Result<Vec<T>> {
    if !params.valid() {
        return Err(Error::NonFinite);
    }
    let n = design.n_dmus();
    let t_len = design.n_periods();
    let p = params.beta.len();
    let a = params.sigma_v_sq();
    let b = params.sigma_u_sq();
    let mu = params.mu;
    let weights = decay_weights(params.eta, t_len);
    let q: T = weights.iter().map(|&w| w * w).sum();
    // w_sum = Σ (t−T) η_t², the η-derivative kernel of q (∂q/∂η = −2 w_sum).
    let w_sum: T = weights
        .iter()
        .enumerate()
        .map(|(t, &wt)| c::<T>((t + 1) as f64 - t_len as f64) * wt * wt)
        .sum();
    let d = a + b * q;
    let sqrt_abd = (a * b * d).sqrt();
    let z0 = mu / b.sqrt();
    let lam0 = mills(z0);
    let two = c::<T>(2.0);

    let mut d_beta = vec![T::zero(); p];
    let mut d_a = T::zero();
    let mut d_b = T::zero();
    let mut d_mu = T::zero();
    let mut d_eta = T::zero();

    for i in 0..n {
        let terms = dmu_terms(design, &params.beta, &weights, i);
        let g = mu * a + b * terms.r;
        let z = g / sqrt_abd;
        let lam = mills(z);

        // β: h_j = Σ_t η_t x_tj and Σ_t e_t x_tj feed the three β-terms.
        #[allow(clippy::needless_range_loop)]
        for t in 0..t_len {
            let row = design.matrix.row(design.row_index(i, t));
            let e = terms.resid[t];
            let coeff_e = e / a;
            let coeff_h = -(lam * b / sqrt_abd + g / (a * d)) * weights[t];
            for j in 0..p {
                d_beta[j] += coeff_e * row[j] + coeff_h * row[j];
            }
        }

        d_mu += -lam0 / b.sqrt() + lam * a / sqrt_abd - mu / b + g / (b * d);

        let dz_da = (mu - g * (d + a) / (two * a * d)) / sqrt_abd;
        d_a += -(c::<T>(t_len as f64) - T::one()) / (two * a) - (two * d).recip()
            + lam * dz_da
            + terms.s / (two * a * a)
            + g * mu / (a * b * d)
            - g * g * (d + a) / (two * a * a * b * d * d);

        let dz_db = (terms.r - g * (d + b * q) / (two * b * d)) / sqrt_abd;
        d_b += -q / (two * d)
            + lam0 * mu / (two * b * b.sqrt())
            + lam * dz_db
            + mu * mu / (two * b * b)
            + g * terms.r / (a * b * d)
            - g * g * (d + b * q) / (two * a * b * b * d * d);

        let dz_deta = (-b * terms.m + g * b * w_sum / d) / sqrt_abd;
        d_eta +=
            b * w_sum / d + lam * dz_deta - g * terms.m / (a * d) + g * g * w_sum / (a * d * d);
    }

    // Chain rule from (σ_v², σ_u²) to (σ², γ).
    let gamma = params.gamma;
    let d_sigma_sq = (T::one() - gamma) * d_a + gamma * d_b;
    let d_gamma = params.sigma_sq * (d_b - d_a);

    let mut out = d_beta;
    out.push(d_sigma_sq);
    out.push(d_gamma);
    out.push(d_mu);
    out.push(d_eta);
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::NonFinite)
    }
}

/// Gradient on the transformed scale `[β…, ln σ², logit γ, (μ,) η]`.
pub fn grad_loglik_transformed<T: Real>(
    params: &SfaParams<T>,
    design: &TranslogDesign<T>,
    half_normal: bool,
) -> Result<Vec<T>> {
    let natural = grad_loglik(params, design)?;
    let p = params.beta.len();
    let mut out = natural[..p].to_vec();
    out.push(natural[p] * params.sigma_sq);
    out.push(natural[p + 1] * params.gamma * (T::one() - params.gamma));
    if !half_normal {
        out.push(natural[p + 2]);
    }
    out.push(natural[p + 3]);
    Ok(out)
}

/// Conditional technical efficiency `TE_it = E[exp(−η_t u_i) | e_i]`,
/// returned in design row order. For each DMU, u_i | e_i is N(μ*_i, σ*²)
/// truncated at zero, so
///
/// ```text
/// TE_it = exp(−η_t μ*_i + η_t² σ*²/2) · Φ(z_i − η_t σ*) / Φ(z_i),
/// ```
///
/// with `z_i = μ*_i/σ*`. The score is a strictly decreasing function of
/// μ*_i shared by all periods, so per-period rankings coincide.
pub fn predict_te<T: Real>(params: &SfaParams<T>, design: &TranslogDesign<T>) -> Result<Vec<T>> {
    if !params.valid() {
        return Err(Error::NonFinite);
    }
    let n = design.n_dmus();
    let t_len = design.n_periods();
    let a = params.sigma_v_sq();
    let b = params.sigma_u_sq();
    let weights = decay_weights(params.eta, t_len);
    let q: T = weights.iter().map(|&w| w * w).sum();
    let d = a + b * q;
    let sigma_star = (a * b / d).sqrt();
    let half = c::<T>(0.5);

    let mut te = Vec::with_capacity(n * t_len);
    for i in 0..n {
        let terms = dmu_terms(design, &params.beta, &weights, i);
        let mu_star = (params.mu * a + b * terms.r) / d;
        let z = mu_star / sigma_star;
        for &wt in &weights {
            let ln_te = -wt * mu_star
                + wt * wt * sigma_star * sigma_star * half
                + norm_ln_cdf(z - wt * sigma_star)
                - norm_ln_cdf(z);
            // The expectation is strictly inside (0,1); keep rounding from
            // touching the bounds.
            let v = ln_te
                .exp()
                .max(T::min_positive_value())
                .min(T::one() - T::epsilon());
            te.push(v);
        }
    }
    Ok(te)
}
