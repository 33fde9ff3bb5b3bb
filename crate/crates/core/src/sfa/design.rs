//! Translog output-distance design matrix.
//!
//! Linear homogeneity of degree +1 in outputs is imposed by normalization
//! (Coelli & Perelman 2000): every output is divided by the designated
//! normalizing output `y_M`, the response becomes `−ln y_M`, and the
//! regressors are built from `ln y*_m = ln(y_m/y_M)` and `ln x_k`. Symmetry
//! is structural — one column per unordered index pair, quadratic columns
//! carrying the conventional ½ factor.

use crate::linalg::Mat;
use crate::num::{c, Real};
use crate::panel::PanelDataset;
use crate::{Error, FrontierSpec, Result};

/// Design matrix for the stochastic translog distance frontier.
#[derive(Clone, Debug)]
pub struct TranslogDesign<T> {
    /// Response `−ln y_M`, one per observation, DMU-major row order.
    pub response: Vec<T>,
    /// Regressors including the constant column.
    pub matrix: Mat<T>,
    /// Coefficient names aligned with the columns.
    pub names: Vec<String>,
    pub dmus: Vec<String>,
    pub periods: Vec<i32>,
}

impl<T: Real> TranslogDesign<T> {
    pub fn n_obs(&self) -> usize {
        self.response.len()
    }

    pub fn n_coefficients(&self) -> usize {
        self.names.len()
    }

    pub fn n_dmus(&self) -> usize {
        self.dmus.len()
    }

    pub fn n_periods(&self) -> usize {
        self.periods.len()
    }

    /// Row index of (dmu, period) in the DMU-major layout.
    pub fn row_index(&self, dmu_idx: usize, period_idx: usize) -> usize {
        dmu_idx * self.periods.len() + period_idx
    }
}

/// Number of translog coefficients for M outputs and K inputs:
/// `1 + (M−1) + (M−1)M/2 + K + K(K+1)/2 + K(M−1)`.
pub fn n_translog_coefficients(n_outputs: usize, n_inputs: usize) -> usize {
    let m1 = n_outputs - 1;
    let k = n_inputs;
    1 + m1 + m1 * (m1 + 1) / 2 + k + k * (k + 1) / 2 + k * m1
}

/// Coefficient names in column order. `ratio_names` are the non-normalizing
/// outputs; the trailing apostrophe marks normalization.
pub fn translog_names(ratio_names: &[String], input_names: &[String]) -> Vec<String> {
    let mut names = vec!["Constant".to_string()];
    for r in ratio_names {
        names.push(format!("{r}'"));
    }
    for x in input_names {
        names.push(x.clone());
    }
    for r in ratio_names {
        names.push(format!("{r}'2"));
    }
    for (i, a) in ratio_names.iter().enumerate() {
        for b in &ratio_names[i + 1..] {
            names.push(format!("{a}' x {b}'"));
        }
    }
    for x in input_names {
        names.push(format!("{x}2"));
    }
    for (i, a) in input_names.iter().enumerate() {
        for b in &input_names[i + 1..] {
            names.push(format!("{a} x {b}"));
        }
    }
    for x in input_names {
        for r in ratio_names {
            names.push(format!("{x} x {r}'"));
        }
    }
    names
}

/// One design row from the log output ratios and log inputs, in the same
/// column order as [`translog_names`]. Shared by the design builder and the
/// synthetic generator so both sides agree on the coefficient layout.
pub fn translog_row<T: Real>(ln_ratios: &[T], ln_inputs: &[T]) -> Vec<T> {
    let half = c::<T>(0.5);
    let mut row = Vec::with_capacity(n_translog_coefficients(
        ln_ratios.len() + 1,
        ln_inputs.len(),
    ));
    row.push(T::one());
    row.extend_from_slice(ln_ratios);
    row.extend_from_slice(ln_inputs);
    for &r in ln_ratios {
        row.push(half * r * r);
    }
    for (i, &a) in ln_ratios.iter().enumerate() {
        for &b in &ln_ratios[i + 1..] {
            row.push(half * a * b);
        }
    }
    for &x in ln_inputs {
        row.push(half * x * x);
    }
    for (i, &a) in ln_inputs.iter().enumerate() {
        for &b in &ln_inputs[i + 1..] {
            row.push(half * a * b);
        }
    }
    for &x in ln_inputs {
        for &r in ln_ratios {
            row.push(x * r);
        }
    }
    row
}

/// Build the translog design from a panel and a frontier specification.
///
/// Requires at least two outputs (one is consumed by normalization) and one
/// input, all strictly positive.
pub fn build_design<T: Real>(
    panel: &PanelDataset<T>,
    spec: &FrontierSpec,
) -> Result<TranslogDesign<T>> {
    spec.validate()?;
    if spec.outputs.len() < 2 {
        return Err(Error::InvalidConfig(
            "translog design needs at least two outputs (one normalizes the rest)".into(),
        ));
    }
    let ratio_vars: Vec<String> = spec
        .outputs
        .iter()
        .filter(|o| **o != spec.normalizing_output)
        .cloned()
        .collect();

    let norm_col = panel.column(&spec.normalizing_output)?;
    let ratio_cols: Vec<Vec<T>> = ratio_vars
        .iter()
        .map(|v| panel.column(v))
        .collect::<Result<_>>()?;
    let input_cols: Vec<Vec<T>> = spec
        .inputs
        .iter()
        .map(|v| panel.column(v))
        .collect::<Result<_>>()?;

    let n_obs = norm_col.len();
    let mut response = Vec::with_capacity(n_obs);
    let mut rows = Vec::with_capacity(n_obs);
    for obs in 0..n_obs {
        let y_m = norm_col[obs];
        check_positive(y_m, &spec.normalizing_output, panel, obs)?;
        let mut ln_ratios = Vec::with_capacity(ratio_cols.len());
        for (col, name) in ratio_cols.iter().zip(&ratio_vars) {
            check_positive(col[obs], name, panel, obs)?;
            ln_ratios.push((col[obs] / y_m).ln());
        }
        let mut ln_inputs = Vec::with_capacity(input_cols.len());
        for (col, name) in input_cols.iter().zip(&spec.inputs) {
            check_positive(col[obs], name, panel, obs)?;
            ln_inputs.push(col[obs].ln());
        }
        response.push(-y_m.ln());
        rows.push(translog_row(&ln_ratios, &ln_inputs));
    }

    let matrix = Mat::from_rows(rows);
    let rank = matrix.xtx().rank();
    if rank < matrix.ncols() {
        return Err(Error::DegenerateDesign {
            rank,
            cols: matrix.ncols(),
        });
    }

    Ok(TranslogDesign {
        response,
        matrix,
        names: translog_names(&ratio_vars, &spec.inputs),
        dmus: panel.dmus().to_vec(),
        periods: panel.periods().to_vec(),
    })
}

fn check_positive<T: Real>(v: T, name: &str, panel: &PanelDataset<T>, obs: usize) -> Result<()> {
    if v > T::zero() {
        return Ok(());
    }
    let t = panel.periods().len();
    Err(Error::NonPositiveQuantity {
        var: name.into(),
        dmu: panel.dmus()[obs / t].clone(),
        period: panel.periods()[obs % t],
        value: v.to_f64().unwrap_or(f64::NAN),
    })
}
