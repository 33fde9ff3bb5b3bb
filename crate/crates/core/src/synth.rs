//! Synthetic panels with known frontier, inefficiency and determinant
//! structure — the independent oracle behind every estimator test.
//!
//! [`gen_sfa_panel`] inverts the stochastic-frontier data-generating
//! process exactly: inputs and output ratios are drawn log-uniform, the
//! inefficiency `u_i` is a zero-truncated normal with time decay, and the
//! normalizing output is set so the translog identity holds to the last
//! bit. [`gen_dea_panel`] places units on (or radially below) an explicit
//! concave polyline frontier, so the envelopment score of every unit is
//! known by construction. [`aena_like`] bundles a 38 × 4 sample whose
//! column means are rescaled onto published airport descriptive statistics,
//! with determinant covariates wired into the inefficiency means.

use std::collections::BTreeMap;
use std::path::Path;

use crate::num::{c, Real};
use crate::panel::{PanelDataset, PriceIndex, VarRole};
use crate::rng::SplitMix64;
use crate::second_stage::{CovariateMatrix, CovariateRole, CovariateSpec};
use crate::sfa::{translog_row, SfaParams};
use crate::{Error, Result};

/// Everything the generators need to know.
#[derive(Clone, Debug)]
pub struct SynthSpec<T> {
    pub n_dmus: usize,
    pub n_periods: usize,
    pub n_outputs: usize,
    pub n_inputs: usize,
    /// True translog coefficients, design column order.
    pub frontier: Vec<T>,
    pub sigma_v: T,
    pub sigma_u: T,
    pub mu: T,
    pub eta: T,
    /// True determinants of Eq-style score regressions (intercept first).
    pub delta: Vec<T>,
    pub seed: u64,
    /// Log-uniform bounds for input draws.
    pub input_bounds: (T, T),
    /// Log-uniform bounds for output-ratio draws.
    pub ratio_bounds: (T, T),
    pub first_period: i32,
}

impl<T: Real> SynthSpec<T> {
    /// Spec with smooth, well-conditioned defaults for the given sizes.
    pub fn new(
        n_dmus: usize,
        n_periods: usize,
        n_outputs: usize,
        n_inputs: usize,
        seed: u64,
    ) -> Self {
        Self {
            n_dmus,
            n_periods,
            n_outputs,
            n_inputs,
            frontier: default_frontier(n_outputs, n_inputs),
            sigma_v: c::<T>(0.05),
            sigma_u: c::<T>(0.2),
            mu: c::<T>(0.25),
            eta: c::<T>(0.05),
            delta: vec![c::<T>(0.7), c::<T>(-0.2)],
            seed,
            input_bounds: (c::<T>(1.0), c::<T>(100.0)),
            ratio_bounds: (c::<T>(0.2), c::<T>(5.0)),
            first_period: 2011,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.n_dmus > 0
            && self.n_periods > 0
            && self.n_outputs >= 1
            && self.n_inputs >= 1
            && self.sigma_v > T::zero()
            && self.sigma_u > T::zero()
            && self.input_bounds.0 < self.input_bounds.1
            && self.input_bounds.0 > T::zero()
            && self.ratio_bounds.0 < self.ratio_bounds.1
            && self.ratio_bounds.0 > T::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "synthetic spec fails its dimension/positivity checks".into(),
            ))
        }
    }

    pub fn true_params(&self) -> SfaParams<T> {
        let sigma_sq = self.sigma_v * self.sigma_v + self.sigma_u * self.sigma_u;
        SfaParams {
            beta: self.frontier.clone(),
            sigma_sq,
            gamma: self.sigma_u * self.sigma_u / sigma_sq,
            mu: self.mu,
            eta: self.eta,
        }
    }

    pub fn output_names(&self) -> Vec<String> {
        (1..=self.n_outputs).map(|m| format!("y{m}")).collect()
    }

    pub fn input_names(&self) -> Vec<String> {
        (1..=self.n_inputs).map(|k| format!("x{k}")).collect()
    }
}

/// Mild, monotone true translog coefficients: outputs rise with inputs and
/// fall with inefficiency everywhere in the default draw box.
pub fn default_frontier<T: Real>(n_outputs: usize, n_inputs: usize) -> Vec<T> {
    let m1 = n_outputs - 1;
    let k = n_inputs;
    let mut beta = vec![c::<T>(0.5)];
    beta.extend(std::iter::repeat_n(c::<T>(0.3), m1));
    beta.extend(std::iter::repeat_n(c::<T>(-0.9 / k as f64), k));
    beta.extend(std::iter::repeat_n(c::<T>(-0.04), m1)); // ratio squares
    beta.extend(std::iter::repeat_n(
        c::<T>(0.02),
        m1 * m1.saturating_sub(1) / 2,
    ));
    beta.extend(std::iter::repeat_n(c::<T>(-0.03), k)); // input squares
    beta.extend(std::iter::repeat_n(c::<T>(0.015), k * (k - 1) / 2));
    beta.extend(std::iter::repeat_n(c::<T>(0.01), k * m1)); // cross terms
    beta
}

/// Panel plus ground truth from the stochastic-frontier generator.
#[derive(Clone, Debug)]
pub struct SfaTruth<T> {
    pub panel: PanelDataset<T>,
    /// True `TE_it = exp(−η_t u_i)`, DMU-major.
    pub true_te: Vec<T>,
    pub params: SfaParams<T>,
}

/// Generate a balanced panel that satisfies the frontier identity exactly.
pub fn gen_sfa_panel<T: Real>(spec: &SynthSpec<T>) -> Result<SfaTruth<T>> {
    spec.validate()?;
    if spec.n_outputs < 2 {
        return Err(Error::InvalidConfig(
            "the frontier generator needs at least 2 outputs".into(),
        ));
    }
    let t_len = spec.n_periods;
    let (in_lo, in_hi) = (spec.input_bounds.0.ln(), spec.input_bounds.1.ln());
    let (r_lo, r_hi) = (spec.ratio_bounds.0.ln(), spec.ratio_bounds.1.ln());

    let mut vars: Vec<(String, VarRole)> = spec
        .output_names()
        .into_iter()
        .map(|n| (n, VarRole::Output))
        .collect();
    vars.extend(spec.input_names().into_iter().map(|n| (n, VarRole::Input)));

    let mut cells = BTreeMap::new();
    let mut true_te = Vec::with_capacity(spec.n_dmus * t_len);
    for i in 0..spec.n_dmus {
        let mut dmu_rng = SplitMix64::stream(spec.seed, 0x57_0001, i as u64);
        let u = dmu_rng.normal_trunc_below(spec.mu, spec.sigma_u, T::zero())?;
        for t in 0..t_len {
            let mut rng = SplitMix64::stream(spec.seed, 0x57_0002, (i * t_len + t) as u64);
            let ln_ratios: Vec<T> = (0..spec.n_outputs - 1)
                .map(|_| rng.uniform(r_lo, r_hi))
                .collect();
            let ln_inputs: Vec<T> = (0..spec.n_inputs)
                .map(|_| rng.uniform(in_lo, in_hi))
                .collect();
            let v = rng.normal(T::zero(), spec.sigma_v);
            let decay = (-spec.eta * c::<T>((t + 1) as f64 - t_len as f64)).exp();
            let row = translog_row(&ln_ratios, &ln_inputs);
            let response: T = row
                .iter()
                .zip(&spec.frontier)
                .map(|(&x, &b)| x * b)
                .sum::<T>()
                + decay * u
                + v;
            let y_norm = (-response).exp();
            // The normalizing output is the LAST declared output, so the
            // ratio outputs y1..y_{M−1} line up with the design columns.
            let mut ordered = Vec::with_capacity(spec.n_outputs + spec.n_inputs);
            ordered.extend(ln_ratios.iter().map(|&r| r.exp() * y_norm));
            ordered.push(y_norm);
            ordered.extend(ln_inputs.iter().map(|&x| x.exp()));
            cells.insert((format!("D{i:03}"), spec.first_period + t as i32), ordered);
            true_te.push((-decay * u).exp());
        }
    }
    let panel = PanelDataset::from_cells(vars, cells)?;
    Ok(SfaTruth {
        panel,
        true_te,
        params: spec.true_params(),
    })
}

/// Panel plus per-cell true efficiency from an explicit VRS frontier.
#[derive(Clone, Debug)]
pub struct DeaTruth<T> {
    pub panel: PanelDataset<T>,
    /// True output-oriented efficiency per cell, DMU-major.
    pub true_theta: Vec<T>,
}

/// One-input one-output panel built around a concave polyline frontier.
/// Roughly a third of the units sit exactly on the frontier (θ = 1); the
/// rest are radially contracted in output by a known factor, which VRS DEA
/// must recover.
pub fn gen_dea_panel<T: Real>(spec: &SynthSpec<T>) -> Result<DeaTruth<T>> {
    spec.validate()?;
    if spec.n_outputs != 1 || spec.n_inputs != 1 {
        return Err(Error::InvalidConfig(
            "the polyline frontier generator is single-output single-input".into(),
        ));
    }
    let n = spec.n_dmus;
    let t_len = spec.n_periods;
    let n_frontier = (n / 3).max(2).min(n);
    let (lo, hi) = spec.input_bounds;

    let vars = vec![
        ("y1".to_string(), VarRole::Output),
        ("x1".to_string(), VarRole::Input),
    ];
    let mut cells = BTreeMap::new();
    let mut true_theta = vec![T::zero(); n * t_len];
    for t in 0..t_len {
        let mut rng = SplitMix64::stream(spec.seed, 0xDEA_0001, t as u64);
        // Frontier anchors: sorted abscissae on a strictly concave curve.
        let mut xs: Vec<T> = (0..n_frontier).map(|_| rng.uniform(lo, hi)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Enforce distinct anchors.
        for i in 1..xs.len() {
            if xs[i] <= xs[i - 1] {
                xs[i] = xs[i - 1] * c::<T>(1.05);
            }
        }
        let curve = |x: T| c::<T>(3.0) * x.powf(c::<T>(0.6));
        let anchors: Vec<(T, T)> = xs.iter().map(|&x| (x, curve(x))).collect();
        // The envelopment surface through concave anchors is the polyline.
        let hull_value = |x: T| -> T {
            if x <= anchors[0].0 {
                return anchors[0].1;
            }
            for w in anchors.windows(2) {
                let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                if x <= x1 {
                    return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
                }
            }
            anchors[anchors.len() - 1].1
        };

        for i in 0..n {
            let (x, y, theta) = if i < n_frontier {
                let (x, y) = anchors[i];
                (x, y, T::one())
            } else {
                let x = rng.uniform(anchors[0].0, anchors[n_frontier - 1].0);
                let theta = rng.uniform(c::<T>(0.4), c::<T>(0.95));
                (x, hull_value(x) * theta, theta)
            };
            true_theta[i * t_len + t] = theta;
            cells.insert(
                (format!("D{i:03}"), spec.first_period + t as i32),
                vec![y, x],
            );
        }
    }
    let panel = PanelDataset::from_cells(vars, cells)?;
    Ok(DeaTruth { panel, true_theta })
}

/// Draw scores `θ_i = Z_i δ + ε_i` with ε from the zero-mean normal
/// truncated so every score stays at or below 1.
pub fn gen_truncated_scores<T: Real>(
    z: &CovariateMatrix<T>,
    delta: &[T],
    sigma: T,
    seed: u64,
) -> Result<Vec<T>> {
    (0..z.n_rows())
        .map(|i| {
            let m: T = z.z.row(i).iter().zip(delta).map(|(&a, &b)| a * b).sum();
            let mut rng = SplitMix64::stream(seed, 0x7125_0001, i as u64);
            rng.normal_trunc_above(m, sigma, T::one())
        })
        .collect()
}

/// Bundled 38-airport × 4-year sample: panel variables rescaled onto the
/// published descriptive means, plus the second-stage covariates.
#[derive(Clone, Debug)]
pub struct AenaSample {
    pub panel: PanelDataset<f64>,
    /// Covariate columns per (dmu, period) cell, DMU-major, without the
    /// intercept or time dummies.
    pub covariate_names: Vec<String>,
    pub covariate_columns: Vec<Vec<f64>>,
    pub covariate_specs: Vec<CovariateSpec>,
    pub true_te: Vec<f64>,
    /// Determinant offsets used in the inefficiency means, for the truth
    /// sidecar.
    pub true_delta: Vec<(String, f64)>,
}

impl AenaSample {
    /// Covariate matrix aligned with the panel (intercept + time dummies).
    pub fn covariate_matrix(&self) -> Result<CovariateMatrix<f64>> {
        let periods = self.panel.periods();
        let n_dummies = periods.len() - 1;
        let mut names = self.covariate_names.clone();
        let mut columns = self.covariate_columns.clone();
        let cells = self.panel.n_cells();
        for d in 0..n_dummies {
            names.push(format!("T{:02}", periods[d].rem_euclid(100)));
            columns.push(
                (0..cells)
                    .map(|row| if row % periods.len() == d { 1.0 } else { 0.0 })
                    .collect(),
            );
        }
        CovariateMatrix::with_intercept(names, columns)
    }
}

/// Published pooled means the bundled sample is rescaled onto.
const AENA_MEANS: [(&str, f64); 6] = [
    ("ATM", 47_669.78),
    ("SIZE", 73.664_09),
    ("NAR", 17.920_23),
    ("EMP", 9.548_649),
    ("RUNW", 3_534.414),
    ("TERM", 90_938.5),
];

// Tuning of the bundled sample: noise small relative to the inefficiency
// spread (so the deterministic and stochastic frontiers see the same
// ordering), input/ratio boxes tight enough that units are comparable and
// the six-dimensional envelope does not declare most of them efficient.
const AENA_SIGMA_V: f64 = 0.025;
const AENA_SIGMA_U: f64 = 0.24;
const AENA_ETA: f64 = -0.008;
const AENA_INPUT_RANGE: (f64, f64) = (5.0, 28.0);
const AENA_RATIO_RANGE: (f64, f64) = (0.6, 1.7);

/// Generate the bundled airport-like sample.
pub fn aena_like(seed: u64) -> Result<AenaSample> {
    let n = 38;
    let t_len = 4;
    let frontier: Vec<f64> = default_frontier(3, 3);
    let (sigma_v, sigma_u) = (AENA_SIGMA_V, AENA_SIGMA_U);
    let eta = AENA_ETA;

    let var_names = ["ATM", "SIZE", "NAR", "EMP", "RUNW", "TERM"];
    let mut vars: Vec<(String, VarRole)> = var_names[..3]
        .iter()
        .map(|n| (n.to_string(), VarRole::Output))
        .collect();
    vars.extend(
        var_names[3..]
            .iter()
            .map(|n| (n.to_string(), VarRole::Input)),
    );

    // Per-DMU covariates first: they shift the inefficiency mean.
    let mut rng = SplitMix64::stream(seed, 0xAE1A_0001, 0);
    let mut hub_flags = vec![0.0; n];
    hub_flags[rng.next_u64() as usize % n] = 1.0;
    loop {
        let j = rng.next_u64() as usize % n;
        if hub_flags[j] == 0.0 {
            hub_flags[j] = 1.0;
            break;
        }
    }
    struct DmuProfile {
        isle: f64,
        hub: f64,
        tour: f64,
        cong: f64,
        lcc: f64,
        hsr: f64,
    }
    let profiles: Vec<DmuProfile> = (0..n)
        .map(|i| {
            let isle = if rng.next_unit::<f64>() < 0.29 {
                1.0
            } else {
                0.0
            };
            let hub = hub_flags[i];
            let tour = if hub == 0.0 && rng.next_unit::<f64>() < 0.39 {
                1.0
            } else {
                0.0
            };
            let cong = (rng.uniform(0.0_f64, 1.0) * 3.5 + rng.uniform(0.0, 1.0) * 2.5)
                .floor()
                .min(5.0);
            let lcc = if rng.next_unit::<f64>() < 0.59 {
                1.0
            } else {
                0.0
            };
            let hsr = if rng.next_unit::<f64>() < 0.20 {
                1.0
            } else {
                0.0
            };
            DmuProfile {
                isle,
                hub,
                tour,
                cong,
                lcc,
                hsr,
            }
        })
        .collect();

    // Inefficiency means tied to the geography covariates.
    let true_delta = vec![
        ("Constant".to_string(), 0.16),
        ("ISLE".to_string(), 0.10),
        ("HUB".to_string(), -0.05),
        ("TOUR".to_string(), -0.08),
        ("CONG".to_string(), 0.04),
    ];

    let mut cells = BTreeMap::new();
    let mut true_te = Vec::with_capacity(n * t_len);
    let mut cov_cols: Vec<Vec<f64>> = (0..9).map(|_| Vec::with_capacity(n * t_len)).collect();
    for (i, profile) in profiles.iter().enumerate() {
        let mu_i = 0.16 + 0.10 * profile.isle - 0.05 * profile.hub - 0.08 * profile.tour
            + 0.04 * profile.cong;
        let mut dmu_rng = SplitMix64::stream(seed, 0xAE1A_0002, i as u64);
        let u = dmu_rng.normal_trunc_below(mu_i, sigma_u, 0.0)?;
        for t in 0..t_len {
            let mut obs = SplitMix64::stream(seed, 0xAE1A_0003, (i * t_len + t) as u64);
            let (r_lo, r_hi) = (AENA_RATIO_RANGE.0.ln(), AENA_RATIO_RANGE.1.ln());
            let (in_lo, in_hi) = (AENA_INPUT_RANGE.0.ln(), AENA_INPUT_RANGE.1.ln());
            let ln_ratios = vec![obs.uniform(r_lo, r_hi), obs.uniform(r_lo, r_hi)];
            let ln_inputs: Vec<f64> = (0..3).map(|_| obs.uniform(in_lo, in_hi)).collect();
            let v = obs.normal(0.0, sigma_v);
            let decay = (-eta * ((t + 1) as f64 - t_len as f64)).exp();
            let row = translog_row(&ln_ratios, &ln_inputs);
            let response: f64 =
                row.iter().zip(&frontier).map(|(&x, &b)| x * b).sum::<f64>() + decay * u + v;
            let y_norm = (-response).exp();
            let values = vec![
                y_norm,                      // ATM (normalizing output)
                ln_ratios[0].exp() * y_norm, // SIZE
                ln_ratios[1].exp() * y_norm, // NAR
                ln_inputs[0].exp(),          // EMP
                ln_inputs[1].exp(),          // RUNW
                ln_inputs[2].exp(),          // TERM
            ];
            cells.insert((format!("AP{i:02}"), 2011 + t as i32), values);
            true_te.push((-decay * u).exp());

            // Time-varying covariates.
            let sub = obs.normal(1.0, 1.2);
            let ebitda = if profile.hub == 1.0 {
                obs.normal(400.0, 90.0)
            } else if profile.tour == 1.0 {
                obs.normal(60.0, 25.0)
            } else {
                obs.normal(-1.0, 3.0)
            };
            let hh_z = obs.next_unit::<f64>();
            let hh = 483.772 + 9_217.0 * hh_z * hh_z;
            for (col, v) in cov_cols.iter_mut().zip([
                profile.isle,
                profile.hub,
                profile.tour,
                profile.cong,
                profile.lcc,
                sub,
                ebitda,
                profile.hsr,
                hh,
            ]) {
                col.push(v);
            }
        }
    }
    let mut panel: PanelDataset<f64> = PanelDataset::from_cells(vars, cells)?;

    // Rescale every frontier variable onto the published pooled mean; both
    // engines are invariant to per-column positive scaling.
    for (name, target) in AENA_MEANS {
        let col = panel.column(name)?;
        let mean: f64 = col.iter().sum::<f64>() / col.len() as f64;
        panel = panel.scaled_variable(name, target / mean)?;
    }

    Ok(AenaSample {
        panel,
        covariate_names: [
            "ISLE", "HUB", "TOUR", "CONG", "LCC", "SUB", "EBITDA", "HSR", "HH",
        ]
        .map(String::from)
        .to_vec(),
        covariate_columns: cov_cols,
        covariate_specs: vec![
            CovariateSpec {
                name: "ISLE".into(),
                role: CovariateRole::Dummy,
                range: None,
            },
            CovariateSpec {
                name: "HUB".into(),
                role: CovariateRole::Dummy,
                range: None,
            },
            CovariateSpec {
                name: "TOUR".into(),
                role: CovariateRole::Dummy,
                range: None,
            },
            CovariateSpec {
                name: "CONG".into(),
                role: CovariateRole::Count,
                range: None,
            },
            CovariateSpec {
                name: "LCC".into(),
                role: CovariateRole::Dummy,
                range: None,
            },
            CovariateSpec {
                name: "SUB".into(),
                role: CovariateRole::Continuous,
                range: None,
            },
            CovariateSpec {
                name: "EBITDA".into(),
                role: CovariateRole::Continuous,
                range: None,
            },
            CovariateSpec {
                name: "HSR".into(),
                role: CovariateRole::Dummy,
                range: None,
            },
            CovariateSpec {
                name: "HH".into(),
                role: CovariateRole::Continuous,
                range: Some((0.0, 10_000.0)),
            },
        ],
        true_te,
        true_delta,
    })
}

/// Write the panel to the loader's CSV schema. When `nominal` carries a
/// price index, deflatable money columns are re-inflated so the file holds
/// nominal values the pipeline will deflate back; when `volume_from_size`
/// is set, the size column is replaced by `volume = size × movements` so
/// the loader exercises its derivation path.
pub struct PanelCsvOptions<'a> {
    pub nominal: Option<(&'a PriceIndex<f64>, i32, &'a [String])>,
    pub volume_from_size: Option<(&'a str, &'a str, &'a str)>,
}

pub fn write_panel_csv(
    panel: &PanelDataset<f64>,
    path: &Path,
    opts: &PanelCsvOptions<'_>,
) -> Result<()> {
    let mut header = vec!["dmu".to_string(), "year".to_string()];
    for v in panel.variables() {
        match opts.volume_from_size {
            Some((size, volume, _)) if v == size => header.push(volume.to_string()),
            _ => header.push(v.clone()),
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    for (d, dmu) in panel.dmus().iter().enumerate() {
        for (p, &year) in panel.periods().iter().enumerate() {
            let mut record = vec![dmu.clone(), year.to_string()];
            for v in panel.variables() {
                let mut value = panel.value(d, p, v)?;
                if let Some((size, _, movements)) = opts.volume_from_size {
                    if v == size {
                        value *= panel.value(d, p, movements)?;
                    }
                }
                if let Some((index, base, deflated)) = opts.nominal {
                    if deflated.iter().any(|n| n == v) {
                        value = value * index.level(year)? / index.level(base)?;
                    }
                }
                record.push(format!("{value:.6}"));
            }
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_covariates_csv(sample: &AenaSample, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["dmu".to_string(), "year".to_string()];
    header.extend(sample.covariate_names.clone());
    w.write_record(&header)?;
    let t_len = sample.panel.periods().len();
    for (d, dmu) in sample.panel.dmus().iter().enumerate() {
        for (p, &year) in sample.panel.periods().iter().enumerate() {
            let row = d * t_len + p;
            let mut record = vec![dmu.clone(), year.to_string()];
            for col in &sample.covariate_columns {
                record.push(format!("{:.6}", col[row]));
            }
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Generating-parameter sidecar: one (name, value) row per parameter.
pub fn write_params_csv(params: &[(String, f64)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["parameter", "value"])?;
    for (name, value) in params {
        w.write_record([name.clone(), format!("{value:.12}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Named generating parameters of a frontier spec, design column order.
pub fn frontier_param_rows<T: Real>(spec: &SynthSpec<T>) -> Vec<(String, f64)> {
    let ratio_names: Vec<String> = spec
        .output_names()
        .into_iter()
        .take(spec.n_outputs - 1)
        .collect();
    let mut rows: Vec<(String, f64)> =
        crate::sfa::translog_names(&ratio_names, &spec.input_names())
            .into_iter()
            .zip(spec.frontier.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)))
            .collect();
    for (name, value) in [
        ("sigma_v", spec.sigma_v),
        ("sigma_u", spec.sigma_u),
        ("mu", spec.mu),
        ("eta", spec.eta),
    ] {
        rows.push((name.to_string(), value.to_f64().unwrap_or(f64::NAN)));
    }
    rows
}

/// Truth sidecar: one row per cell with the generated efficiency.
pub fn write_truth_csv(
    dmus: &[String],
    periods: &[i32],
    truth: &[f64],
    column: &str,
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["dmu", "year", column])?;
    for (d, dmu) in dmus.iter().enumerate() {
        for (p, &year) in periods.iter().enumerate() {
            w.write_record([
                dmu.clone(),
                year.to_string(),
                format!("{:.12}", truth[d * periods.len() + p]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{norm_cdf, norm_pdf};

    #[test]
    fn sfa_panel_validates_and_reproduces() {
        let spec: SynthSpec<f64> = SynthSpec::new(10, 3, 3, 2, 99);
        let a = gen_sfa_panel(&spec).unwrap();
        let b = gen_sfa_panel(&spec).unwrap();
        assert_eq!(a.panel.n_cells(), 30);
        for d in 0..10 {
            for p in 0..3 {
                for v in a.panel.variables() {
                    assert_eq!(
                        a.panel.value(d, p, v).unwrap(),
                        b.panel.value(d, p, v).unwrap(),
                        "fixed seed must reproduce bit-identically"
                    );
                }
            }
        }
        assert!(a.true_te.iter().all(|&te| te > 0.0 && te <= 1.0));
    }

    #[test]
    fn sfa_truth_follows_eta() {
        let mut spec: SynthSpec<f64> = SynthSpec::new(6, 4, 2, 1, 3);
        spec.eta = 0.0;
        let truth = gen_sfa_panel(&spec).unwrap();
        for i in 0..6 {
            for t in 1..4 {
                assert_eq!(truth.true_te[i * 4 + t], truth.true_te[i * 4]);
            }
        }
        spec.sigma_u = 1e-9;
        spec.mu = 0.0;
        let none = gen_sfa_panel(&spec).unwrap();
        assert!(none.true_te.iter().all(|&te| te > 0.999_999));
    }

    #[test]
    fn sfa_identity_holds_exactly() {
        // Rebuilding the design on the generated panel and evaluating the
        // true coefficients must give back response − decay·u − v ≡ 0
        // residual structure; spot-check via the likelihood being finite and
        // the panel passing validation (already enforced by from_cells).
        let spec: SynthSpec<f64> = SynthSpec::new(8, 3, 3, 3, 17);
        let truth = gen_sfa_panel(&spec).unwrap();
        let fspec = crate::FrontierSpec {
            outputs: spec.output_names(),
            inputs: spec.input_names(),
            normalizing_output: "y3".into(),
            returns_to_scale: crate::ReturnsToScale::Vrs,
            orientation: Default::default(),
        };
        let design = crate::sfa::build_design(&truth.panel, &fspec).unwrap();
        assert_eq!(design.n_coefficients(), spec.frontier.len());
        let ll = crate::sfa::loglik(&truth.params, &design).unwrap();
        assert!(ll.is_finite());
    }

    #[test]
    fn dea_panel_truth_is_recovered_by_the_engine() {
        let spec: SynthSpec<f64> = SynthSpec::new(12, 2, 1, 1, 5);
        let truth = gen_dea_panel(&spec).unwrap();
        let fspec = crate::FrontierSpec {
            outputs: vec!["y1".into()],
            inputs: vec!["x1".into()],
            normalizing_output: "y1".into(),
            returns_to_scale: crate::ReturnsToScale::Vrs,
            orientation: Default::default(),
        };
        let scores = crate::dea::dea_all(&truth.panel, &fspec).unwrap();
        for (cell, r) in scores.results.iter().enumerate() {
            assert!(
                (r.score - truth.true_theta[cell]).abs() < 1e-6,
                "cell {cell}: DEA {} vs constructed {}",
                r.score,
                truth.true_theta[cell]
            );
        }
    }

    #[test]
    fn two_unit_dea_panel_is_fully_efficient() {
        let spec: SynthSpec<f64> = SynthSpec::new(2, 1, 1, 1, 8);
        let truth = gen_dea_panel(&spec).unwrap();
        assert!(truth.true_theta.iter().all(|&t| t == 1.0));
    }

    #[test]
    fn truncated_scores_match_analytic_mean() {
        let zeros = vec![0.0_f64; 100_000];
        let z = CovariateMatrix::with_intercept(vec!["z".into()], vec![zeros]).unwrap();
        let (d0, sigma) = (0.8, 0.25);
        let scores = gen_truncated_scores(&z, &[d0, 0.0], sigma, 42).unwrap();
        assert!(scores.iter().all(|&s| s <= 1.0));
        let emp_mean: f64 = scores.iter().sum::<f64>() / scores.len() as f64;
        // E[X | X ≤ 1] = μ − σ φ(α)/Φ(α), α = (1 − μ)/σ.
        let alpha = (1.0 - d0) / sigma;
        let analytic = d0 - sigma * norm_pdf(alpha) / norm_cdf(alpha);
        let sd_of_mean = sigma / (scores.len() as f64).sqrt();
        assert!(
            (emp_mean - analytic).abs() < 3.0 * sd_of_mean + 1e-4,
            "empirical {emp_mean} vs analytic {analytic}"
        );
    }

    #[test]
    fn aena_sample_hits_published_means() {
        let sample = aena_like(2024).unwrap();
        assert_eq!(sample.panel.dmus().len(), 38);
        assert_eq!(sample.panel.periods(), &[2011, 2012, 2013, 2014]);
        for (name, target) in AENA_MEANS {
            let col = sample.panel.column(name).unwrap();
            let mean: f64 = col.iter().sum::<f64>() / col.len() as f64;
            assert!(
                ((mean - target) / target).abs() < 1e-9,
                "{name}: mean {mean} vs target {target}"
            );
        }
        let z = sample.covariate_matrix().unwrap();
        assert_eq!(z.n_rows(), 152);
        assert_eq!(z.names.first().map(String::as_str), Some("Constant"));
        assert!(z.names.iter().any(|n| n == "T11"));
        assert!(!z.names.iter().any(|n| n == "T14"));
    }
}
