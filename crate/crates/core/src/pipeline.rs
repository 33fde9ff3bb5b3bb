//! Config-driven pipeline: load → validate → first-stage frontiers →
//! second-stage determinants → artifact bundle.
//!
//! Each enabled method is computed fully in memory before anything is
//! written, so a failure never leaves a partial bundle on disk for that
//! method. Given identical config and seed the bundle is byte-identical.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::panel::{self, DeriveSize, PanelDataset, PanelSchema, PriceIndex, VarRole};
use crate::report::{self, ScoreTable};
use crate::second_stage::{
    determinants_report, simar_wilson, tobit_fit, CovariateMatrix, CovariateSpec, DeterminantsRow,
    SimarWilsonFit, SwAlgorithm, SwOptions, TobitFit, TobitOptions,
};
use crate::sfa::{self, SfaFit, SfaOptions};
use crate::{dea, Error, FrontierSpec, Result, ReturnsToScale};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub panel: PathBuf,
    #[serde(default)]
    pub covariates: Option<PathBuf>,
    #[serde(default)]
    pub price_index: Option<PathBuf>,
    #[serde(default)]
    pub decimal_comma: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaConfig {
    #[serde(default = "default_dmu_col")]
    pub dmu: String,
    #[serde(default = "default_year_col")]
    pub year: String,
    pub outputs: Vec<String>,
    pub inputs: Vec<String>,
    #[serde(default)]
    pub covariate_columns: Vec<String>,
    #[serde(default)]
    pub deflate: Vec<String>,
    #[serde(default)]
    pub base_year: Option<i32>,
    #[serde(default)]
    pub derive_size: Option<DeriveSize>,
}

fn default_dmu_col() -> String {
    "dmu".into()
}

fn default_year_col() -> String {
    "year".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontierConfig {
    pub normalizing_output: String,
    #[serde(default = "default_rts")]
    pub returns_to_scale: ReturnsToScale,
}

fn default_rts() -> ReturnsToScale {
    ReturnsToScale::Vrs
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodsConfig {
    #[serde(default)]
    pub sfa: bool,
    #[serde(default)]
    pub dea: bool,
    #[serde(default)]
    pub tobit: bool,
    #[serde(default)]
    pub simar_wilson: bool,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SfaConfig {
    pub starts: usize,
    pub half_normal: bool,
}

impl Default for SfaConfig {
    fn default() -> Self {
        Self {
            starts: 5,
            half_normal: false,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecondStageConfig {
    pub covariates: Vec<CovariateSpec>,
    pub time_dummies: Option<bool>,
    /// DMU-clustered sandwich standard errors for the pooled Tobit.
    pub cluster_by_dmu: bool,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub algorithm: u8,
    pub l1: usize,
    pub l2: usize,
    pub level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            algorithm: 2,
            l1: 100,
            l2: 1000,
            level: 0.95,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Full pipeline configuration, deserialized from TOML.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputConfig,
    pub schema: SchemaConfig,
    pub frontier: FrontierConfig,
    pub methods: MethodsConfig,
    #[serde(default)]
    pub sfa: SfaConfig,
    #[serde(default)]
    pub second_stage: SecondStageConfig,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    #[serde(default)]
    pub run: RunSettings,
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        // Relative data paths resolve against the config file's directory.
        if let Some(dir) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = dir.join(&p);
                }
            };
            fix(&mut config.input.panel);
            if let Some(p) = config.input.covariates.as_mut() {
                fix(p);
            }
            if let Some(p) = config.input.price_index.as_mut() {
                fix(p);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.methods;
        if !(m.sfa || m.dea || m.tobit || m.simar_wilson) {
            return Err(Error::InvalidConfig("no method enabled".into()));
        }
        if m.tobit && !m.sfa {
            return Err(Error::InvalidConfig(
                "tobit needs the sfa scores (enable methods.sfa)".into(),
            ));
        }
        if (m.tobit || m.simar_wilson) && self.input.covariates.is_none() {
            return Err(Error::InvalidConfig(
                "second stage needs input.covariates".into(),
            ));
        }
        if m.simar_wilson && self.run.seed.is_none() {
            return Err(Error::InvalidConfig("bootstrap needs run.seed".into()));
        }
        if !(self.bootstrap.level > 0.0 && self.bootstrap.level < 1.0) {
            return Err(Error::InvalidConfig(
                "bootstrap.level must be in (0,1)".into(),
            ));
        }
        if !matches!(self.bootstrap.algorithm, 1 | 2) {
            return Err(Error::InvalidConfig(
                "bootstrap.algorithm must be 1 or 2".into(),
            ));
        }
        Ok(())
    }

    pub fn frontier_spec(&self) -> FrontierSpec {
        FrontierSpec {
            outputs: self.schema.outputs.clone(),
            inputs: self.schema.inputs.clone(),
            normalizing_output: self.frontier.normalizing_output.clone(),
            returns_to_scale: self.frontier.returns_to_scale,
            orientation: Default::default(),
        }
    }

    pub fn panel_schema(&self) -> PanelSchema {
        let mut roles: Vec<(String, VarRole)> = Vec::new();
        for o in &self.schema.outputs {
            roles.push((o.clone(), VarRole::Output));
        }
        for i in &self.schema.inputs {
            roles.push((i.clone(), VarRole::Input));
        }
        for z in &self.schema.covariate_columns {
            roles.push((z.clone(), VarRole::Covariate));
        }
        PanelSchema {
            dmu_col: self.schema.dmu.clone(),
            year_col: self.schema.year.clone(),
            roles,
            decimal_comma: self.input.decimal_comma,
            derive_size: self.schema.derive_size.clone(),
            deflate: self.schema.deflate.clone(),
        }
    }
}

/// Load the panel named by the config, deflating money columns when a
/// price index is supplied (otherwise values count as already real).
pub fn load_inputs(config: &RunConfig) -> Result<PanelDataset<f64>> {
    let schema = config.panel_schema();
    let mut panel: PanelDataset<f64> = panel::load_panel(&config.input.panel, &schema)?;
    if let Some(price_path) = &config.input.price_index {
        if !schema.deflate.is_empty() {
            let index = PriceIndex::from_csv(price_path, config.input.decimal_comma)?;
            let base = config
                .schema
                .base_year
                .unwrap_or_else(|| panel.periods()[0]);
            panel.deflate_variables(&schema.deflate, &index, base)?;
        }
    }
    Ok(panel)
}

fn load_covariates(config: &RunConfig, panel: &PanelDataset<f64>) -> Result<CovariateMatrix<f64>> {
    let path = config
        .input
        .covariates
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("second stage needs input.covariates".into()))?;
    CovariateMatrix::from_csv(
        path,
        panel,
        &config.second_stage.covariates,
        config.input.decimal_comma,
        config.second_stage.time_dummies.unwrap_or(true),
    )
}

/// Everything the pipeline produced, ready to be written.
pub struct Bundle {
    pub panel_summary: Vec<panel::DescriptiveStats<f64>>,
    pub pearson: panel::CorrelationMatrix<f64>,
    pub dmus: Vec<String>,
    pub periods: Vec<i32>,
    pub sfa: Option<(SfaFit<f64>, ScoreTable)>,
    pub dea: Option<(dea::DeaScores<f64>, ScoreTable)>,
    pub tobit: Option<TobitFit<f64>>,
    pub simar_wilson: Option<SimarWilsonFit<f64>>,
    pub determinants: Option<Vec<DeterminantsRow>>,
    /// Pearson correlation between the SFA and DEA pooled scores.
    pub method_correlation: Option<f64>,
    pub seed: Option<u64>,
}

/// Run every enabled method.
pub fn run_pipeline(config: &RunConfig) -> Result<Bundle> {
    config.validate()?;
    let panel = load_inputs(config)?;
    let spec = config.frontier_spec();

    let mut frontier_vars = config.schema.outputs.clone();
    frontier_vars.extend(config.schema.inputs.clone());
    let panel_summary = panel.describe(&frontier_vars)?;
    let pearson = panel.pearson(&frontier_vars)?;

    let sfa_result = if config.methods.sfa {
        let design = sfa::build_design(&panel, &spec)?;
        let options = SfaOptions {
            starts: config.sfa.starts,
            half_normal: config.sfa.half_normal,
            seed: config.run.seed.unwrap_or(0xEFFB),
            ..Default::default()
        };
        let fit = sfa::fit_sfa(&design, &options)?;
        let table = ScoreTable::new(panel.dmus(), panel.periods(), &fit.te);
        Some((fit, table))
    } else {
        None
    };

    let dea_result = if config.methods.dea {
        let scores = dea::dea_all(&panel, &spec)?;
        let table = ScoreTable::new(panel.dmus(), panel.periods(), &scores.pooled());
        Some((scores, table))
    } else {
        None
    };

    let method_correlation = match (&sfa_result, &dea_result) {
        (Some((fit, _)), Some((scores, _))) => panel::pearson(&fit.te, &scores.pooled()),
        _ => None,
    };

    let covariates = if config.methods.tobit || config.methods.simar_wilson {
        Some(load_covariates(config, &panel)?)
    } else {
        None
    };

    let tobit = if config.methods.tobit {
        let (fit, _) = sfa_result.as_ref().expect("validated: tobit implies sfa");
        let mut options = TobitOptions::default();
        if config.second_stage.cluster_by_dmu {
            let t = panel.periods().len();
            options.cluster = Some((0..panel.n_cells()).map(|row| row / t).collect());
        }
        Some(tobit_fit(&fit.te, covariates.as_ref().unwrap(), &options)?)
    } else {
        None
    };

    let sw = if config.methods.simar_wilson {
        let opts = SwOptions {
            algorithm: if config.bootstrap.algorithm == 1 {
                SwAlgorithm::Alg1
            } else {
                SwAlgorithm::Alg2
            },
            l1: config.bootstrap.l1,
            l2: config.bootstrap.l2,
            level: config.bootstrap.level,
            seed: config.run.seed.expect("validated: bootstrap needs seed"),
        };
        Some(simar_wilson(
            &panel,
            &spec,
            covariates.as_ref().unwrap(),
            &opts,
        )?)
    } else {
        None
    };

    let determinants = match (&tobit, &sw) {
        (Some(t), Some(s)) => Some(determinants_report(t, s)?),
        _ => None,
    };

    Ok(Bundle {
        panel_summary,
        pearson,
        dmus: panel.dmus().to_vec(),
        periods: panel.periods().to_vec(),
        sfa: sfa_result,
        dea: dea_result,
        tobit,
        simar_wilson: sw,
        determinants,
        method_correlation,
        seed: config.run.seed,
    })
}

#[derive(Serialize)]
struct SummaryJson {
    seed: Option<u64>,
    n_dmus: usize,
    n_periods: usize,
    sfa_mean_te: Option<f64>,
    sfa_log_likelihood: Option<f64>,
    dea_mean_score: Option<f64>,
    method_correlation: Option<f64>,
}

#[derive(Serialize)]
struct SfaFitJson {
    log_likelihood: f64,
    parameters: BTreeMap<String, f64>,
    std_errors: BTreeMap<String, f64>,
    converged: bool,
    iterations: usize,
    grad_norm: f64,
    restarts: usize,
}

#[derive(Serialize)]
struct DeaCellJson {
    dmu: String,
    period: i32,
    score: f64,
    phi: f64,
    is_efficient: bool,
    peers: String,
}

#[derive(Serialize)]
struct SecondStageJson {
    rows: Vec<DeterminantsRow>,
    tobit_sigma: f64,
    tobit_log_likelihood: f64,
    tobit_censoring: (usize, usize, usize),
    sw_sigma: f64,
    sw_algorithm: String,
    sw_l1: usize,
    sw_l2: usize,
    sw_level: f64,
    sw_seed: u64,
    sw_n_interior: usize,
}

impl Bundle {
    fn dea_details_csv(&self, scores: &dea::DeaScores<f64>) -> String {
        let mut out = String::from("dmu,period,score,phi,is_efficient,peers\n");
        for r in &scores.results {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.dmu,
                r.period,
                r.score,
                r.phi,
                r.is_efficient,
                peers_field(r, &scores.dmus)
            ));
        }
        out
    }

    /// Write every produced artifact under `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut emit = |name: &str, content: String| -> Result<()> {
            let path = dir.join(name);
            report::write_text(&path, &content)?;
            written.push(path);
            Ok(())
        };

        emit("descriptive_stats.csv", describe_csv(&self.panel_summary))?;
        emit("pearson_correlation.csv", pearson_csv(&self.pearson))?;

        let last_idx = self.periods.len() - 1;
        let last_year = self.periods[last_idx];

        if let Some((fit, table)) = &self.sfa {
            let rows = report::coefficient_rows(
                &fit.parameter_names(),
                &fit.parameter_values(),
                &fit.std_errors,
            );
            emit(
                "sfa_coefficients.csv",
                report::coefficient_table_csv(&rows, fit.log_likelihood, fit.te.len()),
            )?;
            emit("sfa_te.csv", table.to_wide_csv())?;
            emit("sfa_te_long.csv", sfa_long_csv(fit))?;
            let fit_json = SfaFitJson {
                log_likelihood: fit.log_likelihood,
                parameters: fit
                    .parameter_names()
                    .into_iter()
                    .zip(fit.parameter_values().iter().copied())
                    .collect(),
                std_errors: fit
                    .parameter_names()
                    .into_iter()
                    .zip(fit.std_errors.iter().copied())
                    .collect(),
                converged: fit.convergence.converged,
                iterations: fit.convergence.iterations,
                grad_norm: fit.convergence.grad_norm,
                restarts: fit.convergence.restarts,
            };
            emit("sfa_fit.json", to_json(&fit_json)?)?;

            let rank = table.ranking(Some(last_idx));
            emit(
                &format!("ranking_sfa_{last_year}.csv"),
                report::ranking_csv(&rank),
            )?;
            emit(
                &format!("ranking_sfa_{last_year}.txt"),
                report::ranking_bars(
                    &format!("Technical efficiency ranking (SFA, {last_year})"),
                    &rank,
                ),
            )?;
            emit(
                &format!("ranking_sfa_{last_year}.dat"),
                ranking_plot_data(&rank),
            )?;
        }

        if let Some((scores, table)) = &self.dea {
            emit("dea_scores.csv", table.to_wide_csv())?;
            emit("dea_scores_long.csv", dea_long_csv(scores))?;
            emit("dea_details.csv", self.dea_details_csv(scores))?;
            let cells: Vec<DeaCellJson> = scores
                .results
                .iter()
                .map(|r| DeaCellJson {
                    dmu: r.dmu.clone(),
                    period: r.period,
                    score: r.score,
                    phi: r.phi,
                    is_efficient: r.is_efficient,
                    peers: peers_field(r, &scores.dmus),
                })
                .collect();
            emit("dea_scores.json", to_json(&cells)?)?;

            let rank = table.ranking(None);
            emit("ranking_dea_mean.csv", report::ranking_csv(&rank))?;
            emit(
                "ranking_dea_mean.txt",
                report::ranking_bars("Mean DEA efficiency ranking", &rank),
            )?;
            emit("ranking_dea_mean.dat", ranking_plot_data(&rank))?;
        }

        if let Some(rows) = &self.determinants {
            emit("second_stage.csv", report::determinants_csv(rows))?;
            let sw = self
                .simar_wilson
                .as_ref()
                .expect("determinants imply both fits");
            let tobit = self.tobit.as_ref().expect("determinants imply both fits");
            emit("simar_wilson_ci.csv", report::ci_csv(rows, sw.level))?;
            let json = SecondStageJson {
                rows: rows.clone(),
                tobit_sigma: tobit.sigma,
                tobit_log_likelihood: tobit.log_likelihood,
                tobit_censoring: (tobit.n_left, tobit.n_interior, tobit.n_right),
                sw_sigma: sw.sigma,
                sw_algorithm: format!("{:?}", sw.algorithm),
                sw_l1: sw.l1,
                sw_l2: sw.l2,
                sw_level: sw.level,
                sw_seed: sw.seed,
                sw_n_interior: sw.n_interior,
            };
            emit("second_stage.json", to_json(&json)?)?;
        } else if let Some(tobit) = &self.tobit {
            let rows =
                report::coefficient_rows(&tobit.names, &tobit.coefficients, &tobit.std_errors);
            emit(
                "tobit_coefficients.csv",
                report::coefficient_table_csv(
                    &rows,
                    tobit.log_likelihood,
                    tobit.n_left + tobit.n_interior + tobit.n_right,
                ),
            )?;
        }

        if let Some(corr) = self.method_correlation {
            emit(
                "method_correlation.csv",
                format!("sfa_vs_dea_pearson\n{corr}\n"),
            )?;
        }

        let summary = SummaryJson {
            seed: self.seed,
            n_dmus: self.dmus.len(),
            n_periods: self.periods.len(),
            sfa_mean_te: self.sfa.as_ref().map(|(_, t)| t.pooled_mean()),
            sfa_log_likelihood: self.sfa.as_ref().map(|(f, _)| f.log_likelihood),
            dea_mean_score: self.dea.as_ref().map(|(_, t)| t.pooled_mean()),
            method_correlation: self.method_correlation,
        };
        emit("summary.json", to_json(&summary)?)?;
        Ok(written)
    }
}

/// Long machine table for the DEA scores. Score (output role) and expansion
/// factor (input role) are both strictly positive, so the file reloads
/// under the panel CSV reader.
pub fn dea_long_csv(scores: &dea::DeaScores<f64>) -> String {
    let mut out = String::from("dmu,year,score,phi\n");
    for r in &scores.results {
        out.push_str(&format!("{},{},{},{}\n", r.dmu, r.period, r.score, r.phi));
    }
    out
}

/// Long machine table for the SFA efficiencies with the implied
/// inefficiency `u = −ln TE`; both columns are strictly positive and reload
/// under the panel CSV reader.
pub fn sfa_long_csv(fit: &SfaFit<f64>) -> String {
    let mut out = String::from("dmu,year,te,u_hat\n");
    let t = fit.periods.len();
    for (d, dmu) in fit.dmus.iter().enumerate() {
        for (p, year) in fit.periods.iter().enumerate() {
            let te = fit.te[d * t + p];
            out.push_str(&format!("{dmu},{year},{te},{}\n", -te.ln()));
        }
    }
    out
}

fn peers_field(r: &dea::DeaResult<f64>, dmus: &[String]) -> String {
    r.peers()
        .into_iter()
        .map(|(i, l)| format!("{}:{:.6}", dmus[i], l))
        .collect::<Vec<_>>()
        .join(";")
}

fn ranking_plot_data(rank: &[(String, f64)]) -> String {
    let mut out = String::from("# rank score dmu\n");
    for (i, (dmu, score)) in rank.iter().enumerate() {
        out.push_str(&format!("{} {} \"{}\"\n", i + 1, score, dmu));
    }
    out
}

fn describe_csv(stats: &[panel::DescriptiveStats<f64>]) -> String {
    let mut out = String::from("variable,mean,std_dev,min,max,n\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.name, s.mean, s.std_dev, s.min, s.max, s.n
        ));
    }
    out
}

fn pearson_csv(m: &panel::CorrelationMatrix<f64>) -> String {
    let mut out = String::from("variable");
    for n in &m.names {
        out.push_str(&format!(",{n}"));
    }
    out.push('\n');
    for (i, n) in m.names.iter().enumerate() {
        out.push_str(n);
        for v in &m.values[i] {
            out.push_str(&format!(",{v:.4}"));
        }
        out.push('\n');
    }
    out
}

fn to_json<S: Serialize>(value: &S) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::InvalidConfig(format!("JSON serialization failed: {e}")))
}
