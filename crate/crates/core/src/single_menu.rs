//! The single-menu benchmark: sell the fully revealing experiment at a
//! posted price and compare against the optimal menu.
//!
//! `e(t)` is the value of full information to type `t`, the buyer's gain
//! from observing the state before acting. The best single-experiment
//! mechanism posts the Myerson reserve price for the induced distribution
//! of `e(t)`; when that distribution has a monotone hazard rate the posted
//! price captures at least a `1/e` fraction of the optimal menu revenue.

use crate::model::Instance;
use crate::optimal_mechanism::{self, SolveError};
use serde::Serialize;

/// `e(t) = sum_q g max(v(q,t), 0) - max(v(t), 0)`.
pub fn full_info_value(inst: &Instance, t: usize) -> f64 {
    let informed: f64 = inst
        .states()
        .states()
        .iter()
        .enumerate()
        .map(|(q, s)| s.g * inst.value(q, t).max(0.0))
        .sum();
    informed - inst.prior_value(t).max(0.0)
}

/// Best posted price for the fully revealing experiment. Candidates are the
/// realized values `e(t_i)`; returns `(reserve, revenue)`.
pub fn myerson_reserve(inst: &Instance) -> (f64, f64) {
    let n = inst.num_types();
    let e: Vec<f64> = (0..n).map(|t| full_info_value(inst, t)).collect();
    let mut best = (0.0, 0.0);
    for &r in &e {
        if r <= 0.0 {
            continue;
        }
        let mass: f64 = (0..n)
            .filter(|&t| e[t] >= r - 1e-12 * r.abs().max(1.0))
            .map(|t| inst.types().f(t))
            .sum();
        let rev = r * mass;
        if rev > best.1 + 1e-15 || (rev > best.1 - 1e-15 && (best.0 == 0.0 || r < best.0)) {
            best = (r, rev);
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleMenuReport {
    pub e_values: Vec<f64>,
    pub reserve: f64,
    pub rev_single: f64,
    pub rev_optimal: f64,
    /// Information surplus `sum f(t) e(t)`, an upper bound on any revenue.
    pub welfare: f64,
    pub ratio: f64,
    /// Whether the empirical hazard rate of the e-distribution is
    /// non-decreasing.
    pub mhr_flag: bool,
}

/// Non-decreasing empirical hazard over the merged order statistics of `e`.
fn empirical_mhr(e: &[f64], f: &[f64]) -> bool {
    let mut pairs: Vec<(f64, f64)> = e.iter().copied().zip(f.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Merge ties before computing hazards.
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (v, m) in pairs {
        match merged.last_mut() {
            Some(last) if (v - last.0).abs() <= 1e-12 * v.abs().max(1.0) => last.1 += m,
            _ => merged.push((v, m)),
        }
    }
    let mut survival = 1.0;
    let mut prev = f64::NEG_INFINITY;
    for (_, m) in &merged {
        let h = m / survival;
        if h < prev - 1e-9 {
            return false;
        }
        prev = h;
        survival -= m;
    }
    true
}

/// Assembles the full comparison; solves the instance for the optimal
/// revenue.
pub fn ratio_report(inst: &Instance) -> Result<SingleMenuReport, SolveError> {
    let n = inst.num_types();
    let e_values: Vec<f64> = (0..n).map(|t| full_info_value(inst, t)).collect();
    let (reserve, rev_single) = myerson_reserve(inst);
    let rev_optimal = optimal_mechanism::solve(inst)?.revenue;
    let welfare: f64 = (0..n).map(|t| inst.types().f(t) * e_values[t]).sum();
    let masses: Vec<f64> = (0..n).map(|t| inst.types().f(t)).collect();
    let ratio = if rev_optimal.abs() < 1e-15 {
        1.0
    } else {
        rev_single / rev_optimal
    };
    Ok(SingleMenuReport {
        mhr_flag: empirical_mhr(&e_values, &masses),
        e_values,
        reserve,
        rev_single,
        rev_optimal,
        welfare,
        ratio,
    })
}
