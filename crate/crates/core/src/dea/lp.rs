//! Dense two-phase revised simplex for small linear programs.
//!
//! Maximizes `c'x` subject to `Ax {<=,=,>=} b`, `x >= 0`. The basis inverse
//! is kept explicitly and updated by elementary row operations; pivoting
//! follows Bland's rule throughout (entering: lowest-index improving column;
//! leaving: lowest basic-variable index among minimum-ratio ties), which
//! guarantees termination on degenerate problems. Problems here have a
//! handful of rows and at most a few dozen columns, so no factorization
//! machinery is warranted.

use crate::linalg::Mat;
use crate::num::{c, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One constraint row: `coeffs · x  rel  rhs`.
#[derive(Clone, Debug)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

/// Maximization problem over non-negative variables.
#[derive(Clone, Debug)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
}

impl<T: Real> LinearProgram<T> {
    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    /// Largest violation of the original constraints at `x` (0 = feasible).
    pub fn violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for con in &self.constraints {
            let lhs: T = con.coeffs.iter().zip(x).map(|(&a, &b)| a * b).sum();
            let v = match con.relation {
                Relation::Le => lhs - con.rhs,
                Relation::Ge => con.rhs - lhs,
                Relation::Eq => (lhs - con.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for &xi in x {
            worst = worst.max(-xi);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub objective: T,
    /// Values of the original variables (slack values dropped).
    pub primal: Vec<T>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct LpOptions<T> {
    pub pivot_tol: T,
    pub max_iterations: usize,
}

impl<T: Real> Default for LpOptions<T> {
    fn default() -> Self {
        Self {
            pivot_tol: c::<T>(1e-9),
            max_iterations: 10_000,
        }
    }
}

struct Tableau<T> {
    a: Mat<T>,    // m × n_total standard-form coefficients
    b: Vec<T>,    // m, non-negative
    binv: Mat<T>, // m × m explicit basis inverse
    basis: Vec<usize>,
    n_real: usize, // original variables
    first_artificial: usize,
    iterations: usize,
}

impl<T: Real> Tableau<T> {
    fn column(&self, j: usize) -> Vec<T> {
        (0..self.a.nrows()).map(|i| self.a[(i, j)]).collect()
    }

    fn basic_values(&self) -> Vec<T> {
        self.binv.mul_vec(&self.b)
    }

    /// One simplex phase with the given standard-form costs. Entering
    /// columns are restricted to `j < allow_below` (which excludes the
    /// artificials in phase 2).
    fn phase(&mut self, costs: &[T], allow_below: usize, opts: &LpOptions<T>) -> LpStatus {
        loop {
            if self.iterations >= opts.max_iterations {
                return LpStatus::IterationLimit;
            }
            let m = self.basis.len();
            // Simplex multipliers y = c_B' B^{-1}.
            let mut y = vec![T::zero(); m];
            for (row, &bi) in self.basis.iter().enumerate() {
                let cb = costs[bi];
                if cb != T::zero() {
                    for (k, yk) in y.iter_mut().enumerate() {
                        *yk += cb * self.binv[(row, k)];
                    }
                }
            }
            // Bland: lowest-index column with positive reduced cost.
            let entering = (0..allow_below).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let col = self.column(j);
                let d = costs[j] - y.iter().zip(&col).map(|(&a, &b)| a * b).sum::<T>();
                d > opts.pivot_tol
            });
            let Some(entering) = entering else {
                return LpStatus::Optimal;
            };

            let w = self.binv.mul_vec(&self.column(entering));
            let xb = self.basic_values();
            // Ratio test with Bland tie-break on basic-variable index.
            let mut leave: Option<(usize, T)> = None;
            for i in 0..m {
                if w[i] > opts.pivot_tol {
                    let ratio = xb[i].max(T::zero()) / w[i];
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((best, best_ratio)) => {
                            if ratio < best_ratio - opts.pivot_tol
                                || ((ratio - best_ratio).abs() <= opts.pivot_tol
                                    && self.basis[i] < self.basis[best])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((leave_row, _)) = leave else {
                return LpStatus::Unbounded;
            };

            self.pivot(leave_row, entering, &w);
            self.iterations += 1;
        }
    }

    /// Replace basis row `row` with column `entering`; `w = B^{-1} A_j`.
    fn pivot(&mut self, row: usize, entering: usize, w: &[T]) {
        let m = self.basis.len();
        let piv = w[row];
        for k in 0..m {
            self.binv[(row, k)] /= piv;
        }
        for (i, &wi) in w.iter().enumerate() {
            if i != row && wi != T::zero() {
                for k in 0..m {
                    let v = self.binv[(row, k)];
                    self.binv[(i, k)] -= wi * v;
                }
            }
        }
        self.basis[row] = entering;
    }
}

/// Solve the LP. Deterministic for a given input.
pub fn solve<T: Real>(lp: &LinearProgram<T>, opts: &LpOptions<T>) -> LpSolution<T> {
    let m = lp.constraints.len();
    let n = lp.n_vars();

    // Standard form: flip rows to make rhs non-negative, then append one
    // slack/surplus column per inequality and one artificial per row that
    // lacks an identity column.
    let mut rows: Vec<(Vec<T>, Relation, T)> = lp
        .constraints
        .iter()
        .map(|con| {
            assert_eq!(con.coeffs.len(), n, "constraint width mismatch");
            if con.rhs < T::zero() {
                let flipped = match con.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (con.coeffs.iter().map(|&v| -v).collect(), flipped, -con.rhs)
            } else {
                (con.coeffs.clone(), con.relation, con.rhs)
            }
        })
        .collect();

    let n_slack = rows.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
    let needs_artificial: Vec<bool> = rows.iter().map(|(_, r, _)| *r != Relation::Le).collect();
    let n_art = needs_artificial.iter().filter(|&&x| x).count();
    let n_total = n + n_slack + n_art;
    let first_artificial = n + n_slack;

    let mut a = Mat::zeros(m, n_total);
    let mut b = vec![T::zero(); m];
    let mut basis = vec![0usize; m];
    let mut slack_at = n;
    let mut art_at = first_artificial;
    for (i, (coeffs, rel, rhs)) in rows.drain(..).enumerate() {
        for (j, v) in coeffs.into_iter().enumerate() {
            a[(i, j)] = v;
        }
        b[i] = rhs;
        match rel {
            Relation::Le => {
                a[(i, slack_at)] = T::one();
                basis[i] = slack_at;
                slack_at += 1;
            }
            Relation::Ge => {
                a[(i, slack_at)] = -T::one();
                slack_at += 1;
                a[(i, art_at)] = T::one();
                basis[i] = art_at;
                art_at += 1;
            }
            Relation::Eq => {
                a[(i, art_at)] = T::one();
                basis[i] = art_at;
                art_at += 1;
            }
        }
    }

    let mut tab = Tableau {
        a,
        b,
        binv: Mat::identity(m),
        basis,
        n_real: n,
        first_artificial,
        iterations: 0,
    };

    // Phase 1: drive the artificials to zero.
    if n_art > 0 {
        let mut phase1_costs = vec![T::zero(); n_total];
        for cost in phase1_costs.iter_mut().skip(first_artificial) {
            *cost = -T::one();
        }
        match tab.phase(&phase1_costs, n_total, opts) {
            LpStatus::Optimal => {}
            status @ LpStatus::IterationLimit => {
                return LpSolution {
                    status,
                    objective: T::nan(),
                    primal: vec![T::nan(); n],
                    iterations: tab.iterations,
                }
            }
            // Phase 1 is bounded below by zero, so Unbounded cannot occur.
            _ => unreachable!("phase 1 is bounded"),
        }
        let art_sum: T = tab
            .basic_values()
            .iter()
            .zip(&tab.basis)
            .filter(|(_, &bi)| bi >= first_artificial)
            .map(|(&v, _)| v)
            .sum();
        if art_sum > c::<T>(1e-7) {
            return LpSolution {
                status: LpStatus::Infeasible,
                objective: T::nan(),
                primal: vec![T::nan(); n],
                iterations: tab.iterations,
            };
        }
        // Pivot basic artificials (at zero) out where a real column can take
        // their place; rows where none can are redundant and the artificial
        // stays pinned at zero.
        for row in 0..m {
            if tab.basis[row] >= first_artificial {
                let replacement = (0..first_artificial).find(|&j| {
                    if tab.basis.contains(&j) {
                        return false;
                    }
                    let w = tab.binv.mul_vec(&tab.column(j));
                    w[row].abs() > opts.pivot_tol
                });
                if let Some(j) = replacement {
                    let w = tab.binv.mul_vec(&tab.column(j));
                    tab.pivot(row, j, &w);
                }
            }
        }
    }

    // Phase 2 over the real objective; artificial columns may not re-enter.
    let mut costs = vec![T::zero(); n_total];
    costs[..n].copy_from_slice(&lp.objective);
    let status = tab.phase(&costs, tab.first_artificial, opts);

    let xb = tab.basic_values();
    let mut primal = vec![T::zero(); n];
    for (row, &bi) in tab.basis.iter().enumerate() {
        if bi < tab.n_real {
            primal[bi] = xb[row].max(T::zero());
        }
    }
    let objective = lp.objective.iter().zip(&primal).map(|(&a, &b)| a * b).sum();
    LpSolution {
        status,
        objective,
        primal,
        iterations: tab.iterations,
    }
}
