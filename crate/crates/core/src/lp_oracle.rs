//! Brute-force revenue oracle: the exact linear program over all menus,
//! solved with a small dense two-phase simplex.
//!
//! Variables are `pi(q,t)` for every state/type pair followed by `p(t)` for
//! every type. Rows are participation (one per type, with right-hand side
//! `max(0, v(t))`), pairwise incentive compatibility (one per ordered type
//! pair), and the upper bounds `pi <= 1`. Obedience rows are omitted:
//! participation together with `p >= 0` implies obedience, and the
//! feasibility checker re-verifies it on the returned solution.

use crate::feasibility;
use crate::model::{Instance, Mechanism};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("instance too large for the dense oracle ({0} > {1})")]
    TooLarge(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
    IterationLimit,
}

/// A dense LP `max c.x  s.t.  A x <= b, x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub num_states: usize,
    pub num_types: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    /// Human-readable row labels, same order as `rows`.
    pub labels: Vec<String>,
}

const SIZE_GUARD: usize = 2000;
const ROW_GUARD: usize = 20_000;
const PIVOT_TOL: f64 = 1e-9;
const MAX_ITERS: usize = 200_000;

/// Index of `pi(q,t)` in the variable vector.
fn pi_var(q: usize, t: usize, n: usize) -> usize {
    q * n + t
}

pub fn build_lp(inst: &Instance) -> Result<LinearProgram, LpError> {
    let n = inst.num_types();
    let m = inst.num_states();
    if n * m > SIZE_GUARD {
        return Err(LpError::TooLarge(n * m, SIZE_GUARD));
    }
    let num_rows = n + n * (n - 1) + n * m;
    if num_rows > ROW_GUARD {
        return Err(LpError::TooLarge(num_rows, ROW_GUARD));
    }
    let nvars = m * n + n;
    let mut objective = vec![0.0; nvars];
    for t in 0..n {
        objective[m * n + t] = inst.types().f(t);
    }
    let mut rows = Vec::with_capacity(num_rows);
    let mut rhs = Vec::with_capacity(num_rows);
    let mut labels = Vec::with_capacity(num_rows);

    // Participation: -sum_q g v(q,t) pi(q,t) + p(t) <= -max(0, v(t)).
    for t in 0..n {
        let mut row = vec![0.0; nvars];
        for q in 0..m {
            row[pi_var(q, t, n)] = -inst.states().state(q).g * inst.value(q, t);
        }
        row[m * n + t] = 1.0;
        rows.push(row);
        rhs.push(-inst.prior_value(t).max(0.0));
        labels.push(format!("ir[{t}]"));
    }

    // IC for (t, from): u(t) >= sum_q g v(q,t) pi(q,from) - p(from).
    for t in 0..n {
        for from in 0..n {
            if from == t {
                continue;
            }
            let mut row = vec![0.0; nvars];
            for q in 0..m {
                let gv = inst.states().state(q).g * inst.value(q, t);
                row[pi_var(q, t, n)] -= gv;
                row[pi_var(q, from, n)] += gv;
            }
            row[m * n + t] += 1.0;
            row[m * n + from] -= 1.0;
            rows.push(row);
            rhs.push(0.0);
            labels.push(format!("ic[{t},{from}]"));
        }
    }

    // Box upper bounds pi(q,t) <= 1.
    for q in 0..m {
        for t in 0..n {
            let mut row = vec![0.0; nvars];
            row[pi_var(q, t, n)] = 1.0;
            rows.push(row);
            rhs.push(1.0);
            labels.push(format!("cap[{q},{t}]"));
        }
    }

    Ok(LinearProgram {
        num_states: m,
        num_types: n,
        objective,
        rows,
        rhs,
        labels,
    })
}

/// Line-oriented export for cross-checking with external tools: one
/// objective line, then `label: c_0 c_1 ... <= rhs` per row.
pub fn export_lp(lp: &LinearProgram) -> String {
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.12e}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = format!("maximize: {}\n", fmt(&lp.objective));
    for ((row, rhs), label) in lp.rows.iter().zip(&lp.rhs).zip(&lp.labels) {
        out.push_str(&format!("{label}: {} <= {rhs:.12e}\n", fmt(row)));
    }
    out
}

struct Tableau {
    /// `rows[i]` holds the constraint coefficients followed by the rhs.
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row for the current objective (maximization), with the
    /// negated objective value in the last slot.
    obj: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c];
        for x in self.rows[r].iter_mut() {
            *x /= piv;
        }
        for i in 0..self.rows.len() {
            if i != r {
                let factor = self.rows[i][c];
                if factor != 0.0 {
                    for j in 0..=self.ncols {
                        self.rows[i][j] -= factor * self.rows[r][j];
                    }
                }
            }
        }
        let factor = self.obj[c];
        if factor != 0.0 {
            for j in 0..=self.ncols {
                self.obj[j] -= factor * self.rows[r][j];
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule: entering column is the lowest-index eligible one,
    /// leaving row breaks ratio ties by lowest basic variable index.
    fn run(&mut self, allowed: &[bool]) -> LpStatus {
        for _ in 0..MAX_ITERS {
            let entering = (0..self.ncols)
                .find(|&j| allowed[j] && self.obj[j] > PIVOT_TOL);
            let Some(c) = entering else {
                return LpStatus::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_TOL {
                    let ratio = self.rows[i][self.ncols] / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - 1e-12
                                || (ratio < lr + 1e-12 && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return LpStatus::Unbounded,
            }
        }
        LpStatus::IterationLimit
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub revenue: f64,
    pub mechanism: Mechanism,
    pub status: LpStatus,
}

pub fn solve_lp(lp: &LinearProgram) -> LpSolution {
    let m = lp.rows.len();
    let nvars = lp.objective.len();
    // Columns: structural, slack per row, artificial per negative-rhs row.
    let neg: Vec<usize> = (0..m).filter(|&i| lp.rhs[i] < 0.0).collect();
    let ncols = nvars + m + neg.len();
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art_of_row = vec![usize::MAX; m];
    for (k, &i) in neg.iter().enumerate() {
        art_of_row[i] = nvars + m + k;
    }
    for i in 0..m {
        let mut row = vec![0.0; ncols + 1];
        let flip = if lp.rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..nvars {
            row[j] = flip * lp.rows[i][j];
        }
        row[nvars + i] = flip;
        row[ncols] = flip * lp.rhs[i];
        if flip < 0.0 {
            row[art_of_row[i]] = 1.0;
            basis.push(art_of_row[i]);
        } else {
            basis.push(nvars + i);
        }
        rows.push(row);
    }

    // Phase 1: maximize -sum(artificials), reduced against the start basis.
    let mut obj = vec![0.0; ncols + 1];
    for k in 0..neg.len() {
        obj[nvars + m + k] = -1.0;
    }
    for (i, &b) in basis.iter().enumerate() {
        if b >= nvars + m {
            for j in 0..=ncols {
                obj[j] += rows[i][j];
            }
        }
    }
    let mut tab = Tableau {
        rows,
        obj,
        basis,
        ncols,
    };
    if !neg.is_empty() {
        let allowed = vec![true; ncols];
        let status = tab.run(&allowed);
        let infeas = -tab.obj[ncols];
        if status != LpStatus::Optimal || infeas.abs() > 1e-7 {
            return LpSolution {
                revenue: 0.0,
                mechanism: Mechanism::zero(lp.num_states, lp.num_types),
                status: if status == LpStatus::Optimal {
                    LpStatus::Infeasible
                } else {
                    status
                },
            };
        }
        // Pivot any basic artificial (at value 0) out on a real column.
        for r in 0..m {
            if tab.basis[r] >= nvars + m {
                if let Some(c) = (0..nvars + m).find(|&j| tab.rows[r][j].abs() > PIVOT_TOL) {
                    tab.pivot(r, c);
                }
            }
        }
    }

    // Phase 2: the real objective, artificial columns barred.
    let mut obj = vec![0.0; ncols + 1];
    obj[..nvars].copy_from_slice(&lp.objective);
    for (i, &b) in tab.basis.iter().enumerate() {
        let factor = obj[b];
        if factor != 0.0 {
            for j in 0..=ncols {
                obj[j] -= factor * tab.rows[i][j];
            }
        }
    }
    tab.obj = obj;
    let mut allowed = vec![true; ncols];
    for j in nvars + m..ncols {
        allowed[j] = false;
    }
    let status = tab.run(&allowed);

    let mut x = vec![0.0; nvars];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < nvars {
            x[b] = tab.rows[i][ncols];
        }
    }
    let n = lp.num_types;
    let mechanism = Mechanism {
        pi: (0..lp.num_states)
            .map(|q| (0..n).map(|t| x[pi_var(q, t, n)].clamp(0.0, 1.0)).collect())
            .collect(),
        pay: (0..n).map(|t| x[lp.num_states * n + t].max(0.0)).collect(),
    };
    let revenue = lp
        .objective
        .iter()
        .zip(&x)
        .map(|(c, v)| c * v)
        .sum();
    LpSolution {
        revenue,
        mechanism,
        status,
    }
}

/// Convenience: build and solve the oracle LP for an instance.
pub fn oracle(inst: &Instance) -> Result<LpSolution, LpError> {
    Ok(solve_lp(&build_lp(inst)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub closed_revenue: f64,
    pub oracle_revenue: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub oracle_feasible: bool,
}

/// Compares a closed-form mechanism against the oracle solution.
pub fn compare(inst: &Instance, closed: &Mechanism, oracle: &LpSolution) -> OracleReport {
    let closed_revenue = feasibility::revenue(inst, closed);
    let abs_gap = (closed_revenue - oracle.revenue).abs();
    let scale = oracle.revenue.abs().max(1.0);
    let report = feasibility::check_feasible_with(inst, &oracle.mechanism, 1e-7);
    OracleReport {
        closed_revenue,
        oracle_revenue: oracle.revenue,
        abs_gap,
        rel_gap: abs_gap / scale,
        oracle_feasible: report.all_ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{three_type_example, Instance, State, StateSpace, TypeGrid, TypePoint};

    #[test]
    fn lp_dimensions_for_discrete_example() {
        let inst = three_type_example();
        let lp = build_lp(&inst).unwrap();
        assert_eq!(lp.objective.len(), 12);
        assert_eq!(lp.rows.len(), 3 + 6 + 9);
        assert!((lp.rhs[2] + 4.0).abs() < 1e-12, "IR rhs for t3 is -max(0,4)");
    }

    #[test]
    fn single_type_lp_has_no_ic_rows() {
        let inst = Instance::new(
            TypeGrid::new(vec![TypePoint { t: 2.0, f: 1.0 }]).unwrap(),
            StateSpace::new(vec![
                State {
                    label: "a".into(),
                    g: 0.5,
                    v1: 1.0,
                    v0: 1.0,
                },
                State {
                    label: "b".into(),
                    g: 0.5,
                    v1: 1.0,
                    v0: -4.0,
                },
            ])
            .unwrap(),
        );
        let lp = build_lp(&inst).unwrap();
        assert_eq!(lp.rows.len(), 1 + 0 + 2);
        // v(t) = 0.5*3 + 0.5*(-2) = 0.5 > 0; optimum sells full information:
        // e(t) = 0.5*3 - 0.5 = 1.
        let sol = solve_lp(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.revenue - 1.0).abs() < 1e-7, "revenue {}", sol.revenue);
    }

    #[test]
    fn discrete_example_oracle_revenue() {
        let inst = three_type_example();
        let sol = oracle(&inst).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.revenue - 4.0 / 9.0).abs() < 1e-7, "revenue {}", sol.revenue);
        let report = feasibility::check_feasible_with(&inst, &sol.mechanism, 1e-7);
        assert!(report.all_ok(), "{}", report.table());
    }

    #[test]
    fn zero_value_instance_earns_nothing() {
        let inst = Instance::new(
            TypeGrid::new(vec![TypePoint { t: 1.0, f: 0.5 }, TypePoint { t: 2.0, f: 0.5 }])
                .unwrap(),
            StateSpace::new(vec![State {
                label: "q".into(),
                g: 1.0,
                v1: 0.0,
                v0: 0.0,
            }])
            .unwrap(),
        );
        let sol = oracle(&inst).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.revenue.abs() < 1e-9);
    }

    #[test]
    fn size_guard_rejects_large_instances() {
        let inst = crate::model::uniform_product(0.0, 1.0, 0.0, 1.0, 0.0, 100, 100).unwrap();
        assert!(matches!(build_lp(&inst), Err(LpError::TooLarge(_, _))));
    }

    #[test]
    fn export_is_line_oriented() {
        let inst = three_type_example();
        let lp = build_lp(&inst).unwrap();
        let text = export_lp(&lp);
        assert!(text.starts_with("maximize:"));
        assert_eq!(text.lines().count(), 1 + lp.rows.len());
    }
}
