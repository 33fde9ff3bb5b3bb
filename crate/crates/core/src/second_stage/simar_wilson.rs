//! Simar–Wilson (2007) bootstrap truncated regression of DEA scores on
//! determinants.
//!
//! Algorithm 1 fits the truncated regression on the interior scores and
//! wraps it in a parametric bootstrap: each replicate redraws the scores
//! from the fitted truncated normal and refits, giving percentile
//! confidence intervals. Algorithm 2 adds an inner loop that bias-corrects
//! every DEA score first: pseudo-outputs `y*_i = y_i · θ*_i/θ̂_i` place unit
//! i at drawn efficiency θ*_i relative to the estimated frontier, the
//! original units are re-scored against the pseudo reference set, and the
//! bias estimate `mean_b θ̂*_ib − θ̂_i` is subtracted before the outer loop
//! runs on the corrected scores.
//!
//! Every replicate draws from its own counter-derived stream, so the
//! procedure is bit-reproducible for a fixed seed regardless of thread
//! scheduling.

use rayon::prelude::*;

use crate::dea::{self, DeaProblem};
use crate::num::{c, Real};
use crate::panel::PanelDataset;
use crate::rng::SplitMix64;
use crate::second_stage::truncreg::{truncreg_fit, TruncRegFit};
use crate::second_stage::CovariateMatrix;
use crate::{Error, FrontierSpec, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SwAlgorithm {
    /// Single bootstrap: truncated regression plus outer replicates.
    Alg1,
    /// Double bootstrap: inner DEA bias correction, then the outer loop.
    Alg2,
}

#[derive(Clone, Copy, Debug)]
pub struct SwOptions {
    pub algorithm: SwAlgorithm,
    /// Inner (bias-correction) replicates, Algorithm 2 only.
    pub l1: usize,
    /// Outer (confidence-interval) replicates.
    pub l2: usize,
    /// Two-sided confidence level for the percentile intervals.
    pub level: f64,
    pub seed: u64,
}

impl Default for SwOptions {
    fn default() -> Self {
        Self {
            algorithm: SwAlgorithm::Alg2,
            l1: 100,
            l2: 1000,
            level: 0.95,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimarWilsonFit<T> {
    pub names: Vec<String>,
    pub coefficients: Vec<T>,
    pub sigma: T,
    /// Percentile confidence intervals per coefficient; `None` when L2 = 0.
    pub ci: Option<Vec<(T, T)>>,
    pub level: f64,
    pub algorithm: SwAlgorithm,
    pub l1: usize,
    pub l2: usize,
    pub seed: u64,
    /// Bias-corrected scores in panel row order (Algorithm 2 only).
    pub bias_corrected: Option<Vec<T>>,
    /// Interior rows used for the regression.
    pub n_interior: usize,
    /// Outer bootstrap draws per coefficient (sorted), kept for reporting.
    pub bootstrap_draws: Option<Vec<Vec<T>>>,
}

impl<T: Real> SimarWilsonFit<T> {
    /// Standard deviation of the outer bootstrap draws for coefficient `j`.
    pub fn bootstrap_std_error(&self, j: usize) -> Option<T> {
        let draws = self.bootstrap_draws.as_ref()?.get(j)?;
        if draws.len() < 2 {
            return None;
        }
        let n = c::<T>(draws.len() as f64);
        let mean = draws.iter().copied().sum::<T>() / n;
        let ss = draws.iter().map(|&d| (d - mean) * (d - mean)).sum::<T>();
        Some((ss / (n - T::one())).sqrt())
    }
}

/// Draw a full score vector from the fitted truncated-normal DGP.
fn draw_scores<T: Real>(
    z: &CovariateMatrix<T>,
    fit: &TruncRegFit<T>,
    rng: &mut SplitMix64,
) -> Result<Vec<T>> {
    (0..z.n_rows())
        .map(|i| {
            let m: T =
                z.z.row(i)
                    .iter()
                    .zip(&fit.coefficients)
                    .map(|(&a, &b)| a * b)
                    .sum();
            rng.normal_trunc_above(m, fit.sigma, T::one())
        })
        .collect()
}

/// Outer parametric bootstrap: refit the truncated regression on redrawn
/// scores, one independent stream per replicate index.
fn outer_bootstrap<T: Real>(
    z_interior: &CovariateMatrix<T>,
    point: &TruncRegFit<T>,
    opts: &SwOptions,
) -> Result<Vec<Vec<T>>> {
    let draws: Vec<Option<Vec<T>>> = (0..opts.l2)
        .into_par_iter()
        .map(|b| {
            let mut rng = SplitMix64::stream(opts.seed, 0x5B00_7001, b as u64);
            let scores = draw_scores(z_interior, point, &mut rng).ok()?;
            let refit = truncreg_fit(&scores, z_interior).ok()?;
            Some(refit.coefficients)
        })
        .collect();
    let total = opts.l2;
    let ok: Vec<Vec<T>> = draws.into_iter().flatten().collect();
    let failed = total - ok.len();
    if failed * 2 > total {
        return Err(Error::BootstrapDegenerate { failed, total });
    }
    Ok(ok)
}

/// Point fit, per-coefficient percentile intervals, and sorted draws from
/// the outer bootstrap.
pub type BootstrapTruncReg<T> = (TruncRegFit<T>, Option<Vec<(T, T)>>, Option<Vec<Vec<T>>>);

/// Parametric-bootstrap confidence intervals around a truncated-regression
/// fit on given interior scores (Algorithm 1 without the DEA stage). Returns
/// the point fit, per-coefficient percentile intervals, and the sorted
/// draws. This is also the outer loop both full algorithms share.
pub fn bootstrap_truncreg<T: Real>(
    scores: &[T],
    z: &CovariateMatrix<T>,
    opts: &SwOptions,
) -> Result<BootstrapTruncReg<T>> {
    let point = truncreg_fit(scores, z)?;
    if opts.l2 == 0 {
        return Ok((point, None, None));
    }
    let draws = outer_bootstrap(z, &point, opts)?;
    let p = z.n_cols();
    let mut per_coef: Vec<Vec<T>> = vec![Vec::with_capacity(draws.len()); p];
    for d in &draws {
        for (j, &v) in d.iter().enumerate() {
            per_coef[j].push(v);
        }
    }
    for col in &mut per_coef {
        col.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
    }
    let ci = per_coef
        .iter()
        .map(|col| percentile_interval(col, opts.level))
        .collect();
    Ok((point, Some(ci), Some(per_coef)))
}

/// Percentile interval by linear interpolation on the sorted draws.
fn percentile_interval<T: Real>(sorted: &[T], level: f64) -> (T, T) {
    let quantile = |p: f64| -> T {
        let n = sorted.len();
        let h = p * (n - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        let w = c::<T>(h - lo as f64);
        sorted[lo] + (sorted[hi.min(n - 1)] - sorted[lo]) * w
    };
    let alpha = (1.0 - level) / 2.0;
    (quantile(alpha), quantile(1.0 - alpha))
}

/// Bias-correct every DEA score by the inner pseudo-data loop.
fn bias_correct<T: Real>(
    panel: &PanelDataset<T>,
    spec: &FrontierSpec,
    scores: &[T],
    point: &TruncRegFit<T>,
    z: &CovariateMatrix<T>,
    opts: &SwOptions,
) -> Result<Vec<T>> {
    let n = panel.dmus().len();
    let t = panel.periods().len();
    let replicate_means: Vec<Vec<T>> = (0..opts.l1)
        .into_par_iter()
        .map(|b| -> Result<Vec<T>> {
            let mut rng = SplitMix64::stream(opts.seed, 0x5B00_7002, b as u64);
            // θ* for every cell, then per-period pseudo reference sets.
            let theta_star: Vec<T> = (0..n * t)
                .map(|row| {
                    let m: T =
                        z.z.row(row)
                            .iter()
                            .zip(&point.coefficients)
                            .map(|(&a, &b)| a * b)
                            .sum();
                    rng.normal_trunc_above(m, point.sigma, T::one())
                })
                .collect::<Result<_>>()?;
            let mut rep = vec![T::zero(); n * t];
            for p in 0..t {
                let outputs = panel.cross_section(p, &spec.outputs)?;
                let inputs = panel.cross_section(p, &spec.inputs)?;
                let pseudo_outputs: Vec<Vec<T>> = outputs
                    .iter()
                    .enumerate()
                    .map(|(d, row)| {
                        let cell = d * t + p;
                        let ratio = theta_star[cell] / scores[cell];
                        row.iter().map(|&y| y * ratio).collect()
                    })
                    .collect();
                for d in 0..n {
                    let problem = DeaProblem {
                        ref_outputs: pseudo_outputs.clone(),
                        ref_inputs: inputs.clone(),
                        target_outputs: outputs[d].clone(),
                        target_inputs: inputs[d].clone(),
                        returns_to_scale: spec.returns_to_scale,
                    };
                    let r = dea::solve_problem(&problem, &panel.dmus()[d], panel.periods()[p])?;
                    rep[d * t + p] = r.score;
                }
            }
            Ok(rep)
        })
        .collect::<Result<_>>()?;

    let l1 = c::<T>(opts.l1 as f64);
    let two = c::<T>(2.0);
    Ok((0..n * t)
        .map(|cell| {
            let mean_star: T = replicate_means.iter().map(|rep| rep[cell]).sum::<T>() / l1;
            two * scores[cell] - mean_star
        })
        .collect())
}

/// Run the Simar–Wilson second stage. `z` rows must align with the panel
/// cells (DMU-major).
pub fn simar_wilson<T: Real>(
    panel: &PanelDataset<T>,
    spec: &FrontierSpec,
    z: &CovariateMatrix<T>,
    opts: &SwOptions,
) -> Result<SimarWilsonFit<T>> {
    if z.n_rows() != panel.n_cells() {
        return Err(Error::InvalidConfig(format!(
            "{} covariate rows vs {} panel cells",
            z.n_rows(),
            panel.n_cells()
        )));
    }
    if opts.algorithm == SwAlgorithm::Alg2 && opts.l1 == 0 {
        return Err(Error::InvalidConfig("Algorithm 2 needs L1 > 0".into()));
    }

    let dea_scores = dea::dea_all(panel, spec)?;
    let theta = dea_scores.pooled();
    let interior: Vec<usize> = dea_scores
        .results
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.is_efficient)
        .map(|(i, _)| i)
        .collect();
    let p = z.n_cols();
    if interior.len() < p + 2 {
        return Err(Error::InsufficientInteriorScores {
            have: interior.len(),
            need: p + 2,
        });
    }
    let z_interior = z.subset(&interior);
    let theta_interior: Vec<T> = interior.iter().map(|&i| theta[i]).collect();

    let (scores_used, z_used, bias_corrected) = match opts.algorithm {
        SwAlgorithm::Alg1 => (theta_interior, z_interior, None),
        SwAlgorithm::Alg2 => {
            let first_pass = truncreg_fit(&theta_interior, &z_interior)?;
            let corrected = bias_correct(panel, spec, &theta, &first_pass, z, opts)?;
            let usable: Vec<usize> = (0..corrected.len())
                .filter(|&i| corrected[i] < T::one())
                .collect();
            if usable.len() < p + 2 {
                return Err(Error::InsufficientInteriorScores {
                    have: usable.len(),
                    need: p + 2,
                });
            }
            let z_bc = z.subset(&usable);
            let scores_bc: Vec<T> = usable.iter().map(|&i| corrected[i]).collect();
            (scores_bc, z_bc, Some(corrected))
        }
    };

    let n_interior = z_used.n_rows();
    let (point, ci, bootstrap_draws) = bootstrap_truncreg(&scores_used, &z_used, opts)?;

    Ok(SimarWilsonFit {
        names: point.names.clone(),
        coefficients: point.coefficients.clone(),
        sigma: point.sigma,
        ci,
        level: opts.level,
        algorithm: opts.algorithm,
        l1: if opts.algorithm == SwAlgorithm::Alg1 {
            0
        } else {
            opts.l1
        },
        l2: opts.l2,
        seed: opts.seed,
        bias_corrected,
        n_interior,
        bootstrap_draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::VarRole;
    use crate::ReturnsToScale;
    use std::collections::BTreeMap;

    /// Panel with a known efficient/inefficient mix plus covariates tied to
    /// the inefficiency.
    fn setup(n: usize, seed: u64) -> (PanelDataset<f64>, FrontierSpec, CovariateMatrix<f64>) {
        let mut rng = SplitMix64::new(seed);
        let vars = vec![
            ("y".to_string(), VarRole::Output),
            ("x".to_string(), VarRole::Input),
        ];
        let mut cells = BTreeMap::new();
        let mut zcol = Vec::with_capacity(n * 2);
        for i in 0..n {
            let dmu = format!("D{i:02}");
            for year in [2011, 2012] {
                let x: f64 = rng.uniform(1.0, 10.0);
                // Concave frontier y = 3 √x, shortfall tied to the covariate.
                let zv: f64 = rng.uniform(0.0, 1.0);
                let theta = (0.95 - 0.4 * zv + rng.normal(0.0, 0.05)).clamp(0.3, 1.0);
                cells.insert((dmu.clone(), year), vec![3.0 * x.sqrt() * theta, x]);
                zcol.push(zv);
            }
        }
        let panel = PanelDataset::from_cells(vars, cells).unwrap();
        let spec = FrontierSpec {
            outputs: vec!["y".into()],
            inputs: vec!["x".into()],
            normalizing_output: "y".into(),
            returns_to_scale: ReturnsToScale::Vrs,
            orientation: Default::default(),
        };
        let z = CovariateMatrix::with_intercept(vec!["z".into()], vec![zcol]).unwrap();
        (panel, spec, z)
    }

    #[test]
    fn l2_zero_reduces_to_plain_truncreg() {
        let (panel, spec, z) = setup(20, 3);
        let opts = SwOptions {
            algorithm: SwAlgorithm::Alg1,
            l1: 0,
            l2: 0,
            level: 0.95,
            seed: 9,
        };
        let fit = simar_wilson(&panel, &spec, &z, &opts).unwrap();
        assert!(fit.ci.is_none());

        let dea_scores = dea::dea_all(&panel, &spec).unwrap();
        let interior: Vec<usize> = dea_scores
            .results
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.is_efficient)
            .map(|(i, _)| i)
            .collect();
        let theta: Vec<f64> = interior.iter().map(|&i| dea_scores.pooled()[i]).collect();
        let plain = truncreg_fit(&theta, &z.subset(&interior)).unwrap();
        for j in 0..fit.coefficients.len() {
            assert_eq!(fit.coefficients[j], plain.coefficients[j]);
        }
        assert_eq!(fit.sigma, plain.sigma);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let (panel, spec, z) = setup(16, 5);
        let opts = SwOptions {
            algorithm: SwAlgorithm::Alg1,
            l1: 0,
            l2: 60,
            level: 0.95,
            seed: 77,
        };
        let a = simar_wilson(&panel, &spec, &z, &opts).unwrap();
        let b = simar_wilson(&panel, &spec, &z, &opts).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
        assert_eq!(a.ci, b.ci);
        let diff_seed = SwOptions { seed: 78, ..opts };
        let c = simar_wilson(&panel, &spec, &z, &diff_seed).unwrap();
        assert_ne!(a.ci, c.ci);
    }

    #[test]
    fn cis_bracket_point_estimates() {
        let (panel, spec, z) = setup(24, 11);
        let opts = SwOptions {
            algorithm: SwAlgorithm::Alg1,
            l1: 0,
            l2: 200,
            level: 0.95,
            seed: 13,
        };
        let fit = simar_wilson(&panel, &spec, &z, &opts).unwrap();
        let ci = fit.ci.unwrap();
        for (j, &(lo, hi)) in ci.iter().enumerate() {
            assert!(
                lo <= fit.coefficients[j] && fit.coefficients[j] <= hi,
                "coef {j}: {} outside [{lo}, {hi}]",
                fit.coefficients[j]
            );
        }
    }

    #[test]
    fn alg2_bias_correction_lowers_scores() {
        let (panel, spec, z) = setup(14, 23);
        let opts = SwOptions {
            algorithm: SwAlgorithm::Alg2,
            l1: 30,
            l2: 0,
            level: 0.95,
            seed: 3,
        };
        let fit = simar_wilson(&panel, &spec, &z, &opts).unwrap();
        let corrected = fit.bias_corrected.unwrap();
        let original = dea::dea_all(&panel, &spec).unwrap().pooled();
        let tol = 1e-9;
        for (c, o) in corrected.iter().zip(&original) {
            assert!(c <= &(o + tol), "bias-corrected {c} above original {o}");
        }
    }

    #[test]
    fn covariate_row_mismatch_is_rejected() {
        let (panel, spec, z) = setup(10, 31);
        let short = z.subset(&(0..5).collect::<Vec<_>>());
        assert!(matches!(
            simar_wilson(&panel, &spec, &short, &SwOptions::default()),
            Err(Error::InvalidConfig(_))
        ));
    }
}
