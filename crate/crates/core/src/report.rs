//! Table and ranking emission.
//!
//! Human tables round to 3 decimals; machine files keep full precision and
//! re-parse under the panel CSV loader (long format keyed on dmu, year).

use std::fmt::Write as _;
use std::path::Path;

use crate::num::Real;
use crate::second_stage::{significance_stars, DeterminantsRow};
use crate::{Error, Result};

/// Per-DMU score table with per-period columns, mean and percent variation.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ScoreTable {
    pub dmus: Vec<String>,
    pub periods: Vec<i32>,
    /// `scores[dmu][period]`.
    pub scores: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn new<T: Real>(dmus: &[String], periods: &[i32], pooled: &[T]) -> Self {
        let t = periods.len();
        let scores = (0..dmus.len())
            .map(|d| {
                (0..t)
                    .map(|p| pooled[d * t + p].to_f64().unwrap_or(f64::NAN))
                    .collect()
            })
            .collect();
        Self {
            dmus: dmus.to_vec(),
            periods: periods.to_vec(),
            scores,
        }
    }

    pub fn dmu_mean(&self, d: usize) -> f64 {
        self.scores[d].iter().sum::<f64>() / self.periods.len() as f64
    }

    pub fn dmu_pct_var(&self, d: usize) -> f64 {
        let first = self.scores[d][0];
        let last = self.scores[d][self.periods.len() - 1];
        (last - first) / first * 100.0
    }

    /// Column average over DMUs for one period.
    pub fn period_average(&self, p: usize) -> f64 {
        self.scores.iter().map(|row| row[p]).sum::<f64>() / self.dmus.len() as f64
    }

    pub fn pooled_mean(&self) -> f64 {
        let n = (self.dmus.len() * self.periods.len()) as f64;
        self.scores.iter().flatten().sum::<f64>() / n
    }

    /// Wide human table: one row per DMU, per-year columns, Mean and %Var,
    /// plus an Average footer row. 3 decimals.
    pub fn to_wide_csv(&self) -> String {
        let mut out = String::from("dmu");
        for p in &self.periods {
            let _ = write!(out, ",{p}");
        }
        out.push_str(",Mean,%Var\n");
        for (d, dmu) in self.dmus.iter().enumerate() {
            let _ = write!(out, "{dmu}");
            for p in 0..self.periods.len() {
                let _ = write!(out, ",{:.3}", self.scores[d][p]);
            }
            let _ = writeln!(out, ",{:.3},{:.2}", self.dmu_mean(d), self.dmu_pct_var(d));
        }
        let _ = write!(out, "Average");
        for p in 0..self.periods.len() {
            let _ = write!(out, ",{:.3}", self.period_average(p));
        }
        let avg_var = (0..self.dmus.len())
            .map(|d| self.dmu_pct_var(d))
            .sum::<f64>()
            / self.dmus.len() as f64;
        let _ = writeln!(out, ",{:.3},{:.2}", self.pooled_mean(), avg_var);
        out
    }

    /// Long machine table (full precision) that the panel loader can read
    /// back with `score` as a variable column.
    pub fn to_long_csv(&self, value_name: &str) -> String {
        let mut out = format!("dmu,year,{value_name}\n");
        for (d, dmu) in self.dmus.iter().enumerate() {
            for (p, year) in self.periods.iter().enumerate() {
                let _ = writeln!(out, "{dmu},{year},{}", self.scores[d][p]);
            }
        }
        out
    }

    /// Stable descending ranking for one period column (or the mean when
    /// `period` is `None`); ties break lexicographically on the DMU name.
    pub fn ranking(&self, period: Option<usize>) -> Vec<(String, f64)> {
        let mut rows: Vec<(String, f64)> = self
            .dmus
            .iter()
            .enumerate()
            .map(|(d, dmu)| {
                let v = match period {
                    Some(p) => self.scores[d][p],
                    None => self.dmu_mean(d),
                };
                (dmu.clone(), v)
            })
            .collect();
        rows.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        rows
    }
}

/// Ranking as CSV (rank, dmu, score).
pub fn ranking_csv(ranking: &[(String, f64)]) -> String {
    let mut out = String::from("rank,dmu,score\n");
    for (i, (dmu, score)) in ranking.iter().enumerate() {
        let _ = writeln!(out, "{},{dmu},{score}", i + 1);
    }
    out
}

/// Plain-text horizontal bar chart of a ranking, widest bar = best score.
pub fn ranking_bars(title: &str, ranking: &[(String, f64)]) -> String {
    let mut out = format!("{title}\n");
    let width = 50usize;
    let max = ranking.first().map_or(1.0, |r| r.1.max(1e-12));
    for (dmu, score) in ranking {
        let filled = ((score / max) * width as f64).round().max(0.0) as usize;
        let _ = writeln!(
            out,
            "{dmu:<24} {:<width$} {score:.3}",
            "#".repeat(filled.min(width))
        );
    }
    out
}

/// Coefficient table row.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub stars: String,
}

/// Coefficient table in the "Estimate, Est. Error" layout with significance
/// stars at 10/5/1% and a log-likelihood / N footer.
pub fn coefficient_table_csv(rows: &[CoefficientRow], log_likelihood: f64, n_obs: usize) -> String {
    let mut out = String::from("parameter,estimate,est_error,stars\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.3},{:.3},{}",
            r.name, r.estimate, r.std_error, r.stars
        );
    }
    let _ = writeln!(out, "Log-likelihood,{log_likelihood:.3},,");
    let _ = writeln!(out, "N obs,{n_obs},,");
    out
}

pub fn coefficient_rows<T: Real>(
    names: &[String],
    estimates: &[T],
    std_errors: &[T],
) -> Vec<CoefficientRow> {
    names
        .iter()
        .zip(estimates.iter().zip(std_errors))
        .map(|(name, (&est, &se))| {
            let estimate = est.to_f64().unwrap_or(f64::NAN);
            let std_error = se.to_f64().unwrap_or(f64::NAN);
            CoefficientRow {
                name: name.clone(),
                estimate,
                std_error,
                stars: significance_stars(estimate, std_error).to_string(),
            }
        })
        .collect()
}

/// Side-by-side second-stage table in the two-column comparison layout.
pub fn determinants_csv(rows: &[DeterminantsRow]) -> String {
    let mut out = String::from("parameter,tobit_sfa,tobit_stars,simar_wilson_dea,sw_stars\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.3},{},{:.3},{}",
            r.name, r.tobit_estimate, r.tobit_stars, r.sw_estimate, r.sw_stars
        );
    }
    out
}

/// Machine-readable confidence intervals for the Simar–Wilson fit.
pub fn ci_csv(rows: &[DeterminantsRow], level: f64) -> String {
    let mut out = String::from("parameter,estimate,ci_lower,ci_upper,level\n");
    for r in rows {
        let (lo, hi) = (
            r.sw_ci_lower.map_or(String::new(), |v| v.to_string()),
            r.sw_ci_upper.map_or(String::new(), |v| v.to_string()),
        );
        let _ = writeln!(out, "{},{},{lo},{hi},{level}", r.name, r.sw_estimate);
    }
    out
}

/// Write a string to a file, creating parent directories.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content).map_err(Error::Io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ScoreTable {
        ScoreTable::new(
            &["A".to_string(), "B".to_string()],
            &[2011, 2012],
            &[0.9_f64, 0.95, 0.8, 0.7],
        )
    }

    #[test]
    fn wide_csv_has_mean_and_pct_var() {
        let t = table();
        let csv = t.to_wide_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "dmu,2011,2012,Mean,%Var");
        assert!(lines[1].starts_with("A,0.900,0.950,0.925,5.56"));
        assert!(lines[3].starts_with("Average,0.850,0.825"));
    }

    #[test]
    fn pct_var_matches_definition() {
        let t = table();
        assert!((t.dmu_pct_var(0) - (0.95 - 0.9) / 0.9 * 100.0).abs() < 1e-9);
        assert!((t.dmu_pct_var(1) - (0.7 - 0.8) / 0.8 * 100.0).abs() < 1e-9);
    }

    #[test]
    fn ranking_sorts_descending_with_lexicographic_ties() {
        let t = ScoreTable::new(
            &["B".to_string(), "A".to_string(), "C".to_string()],
            &[2011],
            &[0.9_f64, 0.9, 0.95],
        );
        let r = t.ranking(Some(0));
        assert_eq!(r[0].0, "C");
        assert_eq!(r[1].0, "A"); // tie with B broken lexicographically
        assert_eq!(r[2].0, "B");

        let equal = ScoreTable::new(
            &["B".to_string(), "A".to_string()],
            &[2011],
            &[0.5_f64, 0.5],
        );
        let r = equal.ranking(Some(0));
        assert_eq!(
            r.iter().map(|x| x.0.as_str()).collect::<Vec<_>>(),
            vec!["A", "B"]
        );
    }

    #[test]
    fn simple_two_dmu_ranking() {
        let t = ScoreTable::new(
            &["A".to_string(), "B".to_string()],
            &[2014],
            &[0.9_f64, 0.95],
        );
        let r = t.ranking(Some(0));
        assert_eq!(r[0].0, "B");
        assert_eq!(r[1].0, "A");
    }

    #[test]
    fn coefficient_table_footer() {
        let rows = coefficient_rows(
            &["Constant".to_string(), "x".to_string()],
            &[1.5_f64, 0.0],
            &[0.5_f64, 1.0],
        );
        let csv = coefficient_table_csv(&rows, 135.461, 152);
        assert!(csv.contains("Constant,1.500,0.500,***"));
        assert!(csv.contains("x,0.000,1.000,")); // zero estimate carries no stars
        assert!(csv.contains("Log-likelihood,135.461"));
        assert!(csv.contains("N obs,152"));
    }
}
