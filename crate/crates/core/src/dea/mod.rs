//! Output-oriented DEA: per-period envelopment linear programs, efficiency
//! scores, peer weights.
//!
//! For a target unit j with outputs `y_j` and inputs `x_j`, the program
//! maximizes the radial output expansion φ subject to a convex combination
//! of the reference units producing at least `φ·y_j` of every output from
//! at most `x_j` of every input:
//!
//! ```text
//! max φ   s.t.  Σ_i λ_i y_im ≥ φ y_jm  ∀m
//!               Σ_i λ_i x_ik ≤ x_jk    ∀k
//!               Σ_i λ_i = 1            (VRS only)
//!               λ ≥ 0
//! ```
//!
//! The reported technical-efficiency score is θ = 1/φ ∈ (0, 1], so the
//! parametric and non-parametric tables share an orientation. Returns to
//! scale follow Banker, Charnes & Cooper (1984) under VRS and Charnes,
//! Cooper & Rhodes (1978) under CRS.

pub mod lp;

use rayon::prelude::*;

pub use lp::{Constraint, LinearProgram, LpOptions, LpSolution, LpStatus, Relation};

use crate::num::{c, Real};
use crate::panel::PanelDataset;
use crate::{Error, FrontierSpec, Result, ReturnsToScale};

/// Expansion factors within this distance of 1 are classified efficient.
pub const EFFICIENCY_TOL: f64 = 1e-6;

/// One envelopment problem: a reference cross-section plus a target unit.
///
/// The target does not have to be a member of the reference set (the
/// Simar–Wilson inner bootstrap scores original units against pseudo-data),
/// in which case φ may legitimately fall below 1.
#[derive(Clone, Debug)]
pub struct DeaProblem<T> {
    /// Reference outputs, one row per unit (N × M), strictly positive.
    pub ref_outputs: Vec<Vec<T>>,
    /// Reference inputs, one row per unit (N × K), strictly positive.
    pub ref_inputs: Vec<Vec<T>>,
    pub target_outputs: Vec<T>,
    pub target_inputs: Vec<T>,
    pub returns_to_scale: ReturnsToScale,
}

impl<T: Real> DeaProblem<T> {
    /// Problem whose target is reference unit `j`.
    pub fn for_member(
        ref_outputs: Vec<Vec<T>>,
        ref_inputs: Vec<Vec<T>>,
        j: usize,
        returns_to_scale: ReturnsToScale,
    ) -> Self {
        let target_outputs = ref_outputs[j].clone();
        let target_inputs = ref_inputs[j].clone();
        Self {
            ref_outputs,
            ref_inputs,
            target_outputs,
            target_inputs,
            returns_to_scale,
        }
    }

    pub fn n_units(&self) -> usize {
        self.ref_outputs.len()
    }
}

/// Build the envelopment LP. Variables are `(φ, λ_1..λ_N)`.
pub fn build_lp<T: Real>(problem: &DeaProblem<T>) -> LinearProgram<T> {
    let n = problem.n_units();
    let n_out = problem.target_outputs.len();
    let n_in = problem.target_inputs.len();
    let mut objective = vec![T::zero(); n + 1];
    objective[0] = T::one();

    let mut constraints = Vec::with_capacity(n_out + n_in + 1);
    for m in 0..n_out {
        // φ y_jm − Σ λ_i y_im ≤ 0
        let mut coeffs = vec![T::zero(); n + 1];
        coeffs[0] = problem.target_outputs[m];
        for i in 0..n {
            coeffs[i + 1] = -problem.ref_outputs[i][m];
        }
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Le,
            rhs: T::zero(),
        });
    }
    for k in 0..n_in {
        let mut coeffs = vec![T::zero(); n + 1];
        for i in 0..n {
            coeffs[i + 1] = problem.ref_inputs[i][k];
        }
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Le,
            rhs: problem.target_inputs[k],
        });
    }
    if problem.returns_to_scale == ReturnsToScale::Vrs {
        let mut coeffs = vec![T::one(); n + 1];
        coeffs[0] = T::zero();
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Eq,
            rhs: T::one(),
        });
    }
    LinearProgram {
        objective,
        constraints,
    }
}

/// Efficiency result for one (DMU, period) cell.
#[derive(Clone, Debug)]
pub struct DeaResult<T> {
    pub dmu: String,
    pub period: i32,
    /// Radial output expansion factor.
    pub phi: T,
    /// Technical efficiency θ = 1/φ.
    pub score: T,
    /// Intensity weights over the reference units (reference order).
    pub lambda: Vec<T>,
    pub is_efficient: bool,
}

impl<T: Real> DeaResult<T> {
    /// Peers with non-negligible weight, as (reference index, λ) pairs.
    pub fn peers(&self) -> Vec<(usize, T)> {
        self.lambda
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > c::<T>(1e-9))
            .map(|(i, &l)| (i, l))
            .collect()
    }

    /// Largest violation of the envelopment constraints at (φ, λ).
    pub fn constraint_violation(&self, problem: &DeaProblem<T>) -> T {
        let lp = build_lp(problem);
        let mut point = Vec::with_capacity(self.lambda.len() + 1);
        point.push(self.phi);
        point.extend_from_slice(&self.lambda);
        lp.violation(&point)
    }
}

/// Solve one envelopment problem.
pub fn solve_problem<T: Real>(
    problem: &DeaProblem<T>,
    dmu: &str,
    period: i32,
) -> Result<DeaResult<T>> {
    let lp = build_lp(problem);
    let sol = lp::solve(&lp, &LpOptions::default());
    if sol.status != LpStatus::Optimal {
        return Err(Error::SolverFailure {
            dmu: dmu.into(),
            period,
            status: sol.status,
        });
    }
    let phi = sol.primal[0];
    let lambda = sol.primal[1..].to_vec();
    Ok(DeaResult {
        dmu: dmu.into(),
        period,
        phi,
        score: phi.recip(),
        lambda,
        is_efficient: (phi - T::one()).abs() <= c::<T>(EFFICIENCY_TOL),
    })
}

fn cross_section_problem<T: Real>(
    panel: &PanelDataset<T>,
    spec: &FrontierSpec,
    period_idx: usize,
    dmu_idx: usize,
) -> Result<DeaProblem<T>> {
    let outputs = panel.cross_section(period_idx, &spec.outputs)?;
    let inputs = panel.cross_section(period_idx, &spec.inputs)?;
    Ok(DeaProblem::for_member(
        outputs,
        inputs,
        dmu_idx,
        spec.returns_to_scale,
    ))
}

/// Score one DMU in one period against that period's cross-section.
pub fn dea_score<T: Real>(
    panel: &PanelDataset<T>,
    spec: &FrontierSpec,
    dmu: &str,
    period: i32,
) -> Result<DeaResult<T>> {
    spec.validate()?;
    let dmu_idx = panel
        .dmus()
        .iter()
        .position(|d| d == dmu)
        .ok_or_else(|| Error::UnknownVariable(format!("DMU `{dmu}`")))?;
    let period_idx = panel
        .periods()
        .iter()
        .position(|&p| p == period)
        .ok_or_else(|| Error::UnknownVariable(format!("period {period}")))?;
    let problem = cross_section_problem(panel, spec, period_idx, dmu_idx)?;
    solve_problem(&problem, dmu, period)
}

/// Full score table: every (DMU, period) cell, reference set scoped to the
/// cell's own period. Cells are independent LPs and solve in parallel;
/// results come back in deterministic panel order.
#[derive(Clone, Debug)]
pub struct DeaScores<T> {
    pub dmus: Vec<String>,
    pub periods: Vec<i32>,
    /// DMU-major: `results[dmu_idx * n_periods + period_idx]`.
    pub results: Vec<DeaResult<T>>,
}

impl<T: Real> DeaScores<T> {
    pub fn score(&self, dmu_idx: usize, period_idx: usize) -> T {
        self.results[dmu_idx * self.periods.len() + period_idx].score
    }

    /// Pooled scores in panel row order.
    pub fn pooled(&self) -> Vec<T> {
        self.results.iter().map(|r| r.score).collect()
    }

    /// Per-DMU mean score across periods.
    pub fn dmu_mean(&self, dmu_idx: usize) -> T {
        let t = self.periods.len();
        let sum: T = (0..t).map(|p| self.score(dmu_idx, p)).sum();
        sum / c::<T>(t as f64)
    }

    /// Per-DMU percent variation `(last − first)/first × 100`.
    pub fn dmu_pct_var(&self, dmu_idx: usize) -> T {
        let t = self.periods.len();
        let first = self.score(dmu_idx, 0);
        let last = self.score(dmu_idx, t - 1);
        (last - first) / first * c::<T>(100.0)
    }
}

/// Score every cell of the panel.
pub fn dea_all<T: Real>(panel: &PanelDataset<T>, spec: &FrontierSpec) -> Result<DeaScores<T>> {
    spec.validate()?;
    let n = panel.dmus().len();
    let t = panel.periods().len();
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|d| (0..t).map(move |p| (d, p))).collect();
    let results: Vec<Result<DeaResult<T>>> = cells
        .par_iter()
        .map(|&(d, p)| {
            let problem = cross_section_problem(panel, spec, p, d)?;
            solve_problem(&problem, &panel.dmus()[d], panel.periods()[p])
        })
        .collect();
    let results: Vec<DeaResult<T>> = results.into_iter().collect::<Result<_>>()?;
    Ok(DeaScores {
        dmus: panel.dmus().to_vec(),
        periods: panel.periods().to_vec(),
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::VarRole;
    use std::collections::BTreeMap;

    /// Single-output single-input reference set as a DeaProblem.
    fn problem_1x1(data: &[(f64, f64)], j: usize, rts: ReturnsToScale) -> DeaProblem<f64> {
        DeaProblem::for_member(
            data.iter().map(|&(_, y)| vec![y]).collect(),
            data.iter().map(|&(x, _)| vec![x]).collect(),
            j,
            rts,
        )
    }

    #[test]
    fn singleton_is_efficient() {
        let p = problem_1x1(&[(1.0, 1.0)], 0, ReturnsToScale::Vrs);
        let r = solve_problem(&p, "only", 1).unwrap();
        assert!((r.phi - 1.0).abs() < 1e-9);
        assert!(r.is_efficient);
    }

    #[test]
    fn lp_dimensions() {
        let p = problem_1x1(
            &[(1.0, 1.0), (2.0, 4.0), (3.0, 3.0)],
            2,
            ReturnsToScale::Vrs,
        );
        let lp = build_lp(&p);
        assert_eq!(lp.n_vars(), 4); // φ plus three λ
        assert_eq!(lp.constraints.len(), 3); // 1 output + 1 input + convexity
        let crs = problem_1x1(
            &[(1.0, 1.0), (2.0, 4.0), (3.0, 3.0)],
            2,
            ReturnsToScale::Crs,
        );
        assert_eq!(build_lp(&crs).constraints.len(), 2);
    }

    #[test]
    fn hand_case_dominated_unit() {
        // A(x=1,y=1), B(2,4), C(3,3): C expands to the frontier at B.
        let data = [(1.0, 1.0), (2.0, 4.0), (3.0, 3.0)];
        let r = solve_problem(&problem_1x1(&data, 2, ReturnsToScale::Vrs), "C", 1).unwrap();
        assert!((r.phi - 4.0 / 3.0).abs() < 1e-9, "phi = {}", r.phi);
        assert!((r.score - 0.75).abs() < 1e-9);
        let peers = r.peers();
        assert_eq!(peers.len(), 1);
        assert_eq!(peers[0].0, 1);
        assert!((peers[0].1 - 1.0).abs() < 1e-9);

        let a = solve_problem(&problem_1x1(&data, 0, ReturnsToScale::Vrs), "A", 1).unwrap();
        assert!((a.score - 1.0).abs() < 1e-9);
        let b = solve_problem(&problem_1x1(&data, 1, ReturnsToScale::Vrs), "B", 1).unwrap();
        assert!((b.score - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vrs_convexity_holds_at_solution() {
        let data = [(1.0, 1.0), (2.0, 4.0), (3.0, 3.0)];
        let p = problem_1x1(&data, 2, ReturnsToScale::Vrs);
        let r = solve_problem(&p, "C", 1).unwrap();
        let lambda_sum: f64 = r.lambda.iter().sum();
        assert!((lambda_sum - 1.0).abs() < 1e-9);
        assert!(r.constraint_violation(&p) < 1e-9);
    }

    fn toy_panel() -> PanelDataset<f64> {
        let vars = vec![
            ("y".to_string(), VarRole::Output),
            ("x".to_string(), VarRole::Input),
        ];
        let mut cells = BTreeMap::new();
        for (dmu, x, y) in [("A", 1.0, 1.0), ("B", 2.0, 4.0), ("C", 3.0, 3.0)] {
            cells.insert((dmu.to_string(), 2011), vec![y, x]);
            cells.insert((dmu.to_string(), 2012), vec![y * 2.0, x]);
        }
        PanelDataset::from_cells(vars, cells).unwrap()
    }

    fn toy_spec() -> FrontierSpec {
        FrontierSpec {
            outputs: vec!["y".into()],
            inputs: vec!["x".into()],
            normalizing_output: "y".into(),
            returns_to_scale: ReturnsToScale::Vrs,
            orientation: Default::default(),
        }
    }

    #[test]
    fn dea_all_covers_every_cell() {
        let panel = toy_panel();
        let scores = dea_all(&panel, &toy_spec()).unwrap();
        assert_eq!(scores.results.len(), 6);
        // Doubling every output leaves scores unchanged, so the table is
        // constant per DMU and %Var is zero.
        for d in 0..3 {
            assert!((scores.score(d, 0) - scores.score(d, 1)).abs() < 1e-9);
            assert!(scores.dmu_pct_var(d).abs() < 1e-9);
        }
        assert!((scores.score(2, 0) - 0.75).abs() < 1e-9);
    }

    #[test]
    fn dea_score_matches_dea_all() {
        let panel = toy_panel();
        let spec = toy_spec();
        let single = dea_score(&panel, &spec, "C", 2011).unwrap();
        let all = dea_all(&panel, &spec).unwrap();
        assert!((single.score - all.score(2, 0)).abs() < 1e-12);
    }

    #[test]
    fn vrs_not_below_crs() {
        let data = [(1.0, 1.0), (2.0, 4.0), (3.0, 3.0), (1.5, 2.5)];
        for j in 0..data.len() {
            let vrs = solve_problem(&problem_1x1(&data, j, ReturnsToScale::Vrs), "u", 1).unwrap();
            let crs = solve_problem(&problem_1x1(&data, j, ReturnsToScale::Crs), "u", 1).unwrap();
            assert!(
                vrs.score >= crs.score - 1e-9,
                "unit {j}: vrs {} crs {}",
                vrs.score,
                crs.score
            );
        }
    }
}
