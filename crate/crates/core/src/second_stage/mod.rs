//! Second-stage regressions of first-stage efficiency scores on determinant
//! covariates: a two-limit Tobit for the stochastic-frontier scores and the
//! Simar–Wilson (2007) bootstrap truncated regression for the DEA scores.

pub mod simar_wilson;
pub mod tobit;
pub mod truncreg;

pub use simar_wilson::{bootstrap_truncreg, simar_wilson, SimarWilsonFit, SwAlgorithm, SwOptions};
pub use tobit::{tobit_fit, TobitFit, TobitOptions};
pub use truncreg::{truncreg_fit, TruncRegFit};

use std::collections::BTreeMap;
use std::path::Path;

use crate::linalg::Mat;
use crate::num::Real;
use crate::panel::PanelDataset;
use crate::{Error, Result};

/// How a determinant column is validated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovariateRole {
    /// Binary indicator in {0, 1}.
    Dummy,
    /// Non-negative integer count.
    Count,
    /// Any finite value; an optional inclusive range may be declared.
    Continuous,
}

/// Declared covariate column.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct CovariateSpec {
    pub name: String,
    pub role: CovariateRole,
    #[serde(default)]
    pub range: Option<(f64, f64)>,
}

/// Determinant matrix aligned row-for-row with the panel cells (DMU-major).
/// The first column is always the intercept.
#[derive(Clone, Debug)]
pub struct CovariateMatrix<T> {
    pub names: Vec<String>,
    pub z: Mat<T>,
}

impl<T: Real> CovariateMatrix<T> {
    /// Wrap an in-memory matrix, prepending the intercept column.
    pub fn with_intercept(names: Vec<String>, columns: Vec<Vec<T>>) -> Result<Self> {
        if names.iter().any(|n| n == "Constant") {
            return Err(Error::InvalidConfig(
                "`Constant` is reserved for the intercept".into(),
            ));
        }
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidConfig(
                "covariate columns have unequal lengths".into(),
            ));
        }
        let mut full_names = vec!["Constant".to_string()];
        full_names.extend(names);
        let rows: Vec<Vec<T>> = (0..n)
            .map(|i| {
                let mut row = Vec::with_capacity(columns.len() + 1);
                row.push(T::one());
                row.extend(columns.iter().map(|c| c[i]));
                row
            })
            .collect();
        Ok(Self {
            names: full_names,
            z: Mat::from_rows(rows),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.z.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.z.ncols()
    }

    /// Copy of the rows selected by `keep`.
    pub fn subset(&self, keep: &[usize]) -> Self {
        let rows = keep.iter().map(|&i| self.z.row(i).to_vec()).collect();
        Self {
            names: self.names.clone(),
            z: Mat::from_rows(rows),
        }
    }

    /// Load covariates from a CSV keyed on (dmu, year), validate them per
    /// role, and append one time dummy per period except the last (the
    /// control period). Rows must cover every panel cell exactly once.
    pub fn from_csv(
        path: &Path,
        panel: &PanelDataset<T>,
        specs: &[CovariateSpec],
        decimal_comma: bool,
        time_dummies: bool,
    ) -> Result<Self> {
        let mut reader = crate::panel::open_csv(path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::SchemaMismatch(format!("missing column `{name}`")))
        };
        let dmu_idx = col("dmu")?;
        let year_idx = col("year")?;
        let var_idx: Vec<usize> = specs.iter().map(|s| col(&s.name)).collect::<Result<_>>()?;

        let mut cells: BTreeMap<(String, i32), Vec<T>> = BTreeMap::new();
        for record in reader.records() {
            let record = record?;
            let dmu = record[dmu_idx].to_string();
            let year: i32 = record[year_idx]
                .parse()
                .map_err(|_| Error::SchemaMismatch(format!("bad year `{}`", &record[year_idx])))?;
            let mut row = Vec::with_capacity(specs.len());
            for (spec, &i) in specs.iter().zip(&var_idx) {
                let raw = record.get(i).unwrap_or_default();
                let cleaned;
                let s = if decimal_comma {
                    cleaned = raw.replace(',', ".");
                    cleaned.as_str()
                } else {
                    raw
                };
                let v: f64 = s.parse().map_err(|_| {
                    Error::SchemaMismatch(format!("bad numeric field `{raw}` in `{}`", spec.name))
                })?;
                validate_covariate(spec, v, &dmu, year)?;
                row.push(T::from(v).expect("covariate representable"));
            }
            if cells.insert((dmu.clone(), year), row).is_some() {
                return Err(Error::DuplicateRow { dmu, period: year });
            }
        }

        let periods = panel.periods();
        let n_dummies = if time_dummies {
            periods.len().saturating_sub(1)
        } else {
            0
        };
        let mut columns: Vec<Vec<T>> = vec![Vec::new(); specs.len() + n_dummies];
        for dmu in panel.dmus() {
            for (p, &year) in periods.iter().enumerate() {
                let row =
                    cells
                        .get(&(dmu.clone(), year))
                        .ok_or_else(|| Error::UnbalancedPanel {
                            dmu: dmu.clone(),
                            period: year,
                        })?;
                for (j, &v) in row.iter().enumerate() {
                    columns[j].push(v);
                }
                for d in 0..n_dummies {
                    columns[specs.len() + d].push(if p == d { T::one() } else { T::zero() });
                }
            }
        }
        let mut names: Vec<String> = specs.iter().map(|s| s.name.clone()).collect();
        for year in &periods[..n_dummies] {
            names.push(format!("T{:02}", year.rem_euclid(100)));
        }
        Self::with_intercept(names, columns)
    }
}

fn validate_covariate(spec: &CovariateSpec, v: f64, dmu: &str, year: i32) -> Result<()> {
    let fail = |what: &str| {
        Err(Error::SchemaMismatch(format!(
            "covariate `{}` {what} (DMU `{dmu}`, year {year}: {v})",
            spec.name
        )))
    };
    if !v.is_finite() {
        return fail("is not finite");
    }
    match spec.role {
        CovariateRole::Dummy => {
            if v != 0.0 && v != 1.0 {
                return fail("must be 0 or 1");
            }
        }
        CovariateRole::Count => {
            if v < 0.0 || v.fract() != 0.0 {
                return fail("must be a non-negative integer");
            }
        }
        CovariateRole::Continuous => {}
    }
    if let Some((lo, hi)) = spec.range {
        if v < lo || v > hi {
            return fail(&format!("must lie in [{lo}, {hi}]"));
        }
    }
    Ok(())
}

/// Thresholds of |z| for two-sided significance at 10%, 5% and 1%.
const Z_10: f64 = 1.644_853_626_951_472_2;
const Z_05: f64 = 1.959_963_984_540_054;
const Z_01: f64 = 2.575_829_303_548_901;

/// Significance stars for an estimate/standard-error pair.
pub fn significance_stars(estimate: f64, std_error: f64) -> &'static str {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN carries no stars either
    if !(std_error > 0.0) {
        return "";
    }
    let z = (estimate / std_error).abs();
    if z >= Z_01 {
        "***"
    } else if z >= Z_05 {
        "**"
    } else if z >= Z_10 {
        "*"
    } else {
        ""
    }
}

/// One row of the side-by-side determinants table.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DeterminantsRow {
    pub name: String,
    pub tobit_estimate: f64,
    pub tobit_std_error: f64,
    pub tobit_stars: String,
    pub sw_estimate: f64,
    pub sw_ci_lower: Option<f64>,
    pub sw_ci_upper: Option<f64>,
    pub sw_stars: String,
}

/// Side-by-side comparison of the two second-stage models over a shared
/// covariate list. Stars for the Simar–Wilson column use the bootstrap
/// standard deviation when replicates exist.
pub fn determinants_report<T: Real>(
    tobit: &TobitFit<T>,
    sw: &SimarWilsonFit<T>,
) -> Result<Vec<DeterminantsRow>> {
    if tobit.names != sw.names {
        return Err(Error::CovariateMismatch(format!(
            "tobit has [{}], simar-wilson has [{}]",
            tobit.names.join(", "),
            sw.names.join(", ")
        )));
    }
    Ok(tobit
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let tob_est = tobit.coefficients[j].to_f64().unwrap_or(f64::NAN);
            let tob_se = tobit.std_errors[j].to_f64().unwrap_or(f64::NAN);
            let sw_est = sw.coefficients[j].to_f64().unwrap_or(f64::NAN);
            let sw_se = sw
                .bootstrap_std_error(j)
                .map_or(f64::NAN, |s| s.to_f64().unwrap_or(f64::NAN));
            DeterminantsRow {
                name: name.clone(),
                tobit_estimate: tob_est,
                tobit_std_error: tob_se,
                tobit_stars: significance_stars(tob_est, tob_se).to_string(),
                sw_estimate: sw_est,
                sw_ci_lower: sw
                    .ci
                    .as_ref()
                    .map(|ci| ci[j].0.to_f64().unwrap_or(f64::NAN)),
                sw_ci_upper: sw
                    .ci
                    .as_ref()
                    .map(|ci| ci[j].1.to_f64().unwrap_or(f64::NAN)),
                sw_stars: significance_stars(sw_est, sw_se).to_string(),
            }
        })
        .collect())
}
