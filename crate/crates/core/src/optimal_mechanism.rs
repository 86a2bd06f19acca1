//! Construction of the revenue-optimal menu.
//!
//! The instance is classified by comparing the top type's prior value
//! `v(t_N)` against two bounds `V_L <= V_H` built from the ironed lower and
//! upper boundary virtual values. Each case yields a threshold policy on
//! `rho(q) = v0/v1`:
//!
//! * `v(t_N) <= V_L` (low tail): threshold `-lower_ironed(t)`, buyer utility
//!   anchored at `u(t_1) = 0`.
//! * `v(t_N) >= V_H` (high tail): threshold `-upper_ironed(t)`, anchored at
//!   `u(t_N) = v(t_N)`.
//! * otherwise (mixed): threshold from an intermediate virtual value curve
//!   whose mixing constant `c` is found by binary search so that the
//!   utility budget `u(t_N) - u(t_1) = v(t_N)` is exactly reachable;
//!   states sitting exactly on the threshold receive the active
//!   recommendation with a fractional probability `D` chosen to make the
//!   budget bind.
//!
//! Payments always follow from the pointwise-smallest utility profile that
//! is consistent with the experiment: `u(t_k) = max(A_k, B - C_k)` where
//! `A_k` accumulates forward increments `(t_i - t_{i-1}) P(t_{i-1})`, `C_k`
//! accumulates backward increments `(t_i - t_{i-1}) P(t_i)`, and
//! `B = v(t_N)`. This reproduces the closed-form payment identities of all
//! three cases (forward sums below the crossing quantile, backward sums
//! above it).

use crate::model::{Instance, Mechanism, TypeGrid};
use crate::virtual_value::VirtualCurve;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("instance is not in the mixed case")]
    NotMixedCase,
    #[error("threshold boundary carries no mass but the budget misses by {0}; grid too coarse")]
    EmptyBoundary(f64),
    #[error("internal consistency failure: negative payment {0}")]
    NegativePayment(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    LowTail,
    HighTail,
    Mixed,
}

/// Classification result: case tag, the two bounds, and for the mixed case
/// the mixing constant and boundary fraction.
#[derive(Debug, Clone, Serialize)]
pub struct CaseLabel {
    pub tag: CaseTag,
    pub v_low: f64,
    pub v_high: f64,
    pub c: Option<f64>,
    pub boundary_fraction: Option<f64>,
}

/// Per-type thresholds on `rho(q)` plus the boundary randomization.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdPolicy {
    pub theta: Vec<f64>,
    pub boundary_fraction: f64,
    /// `(state, type)` pairs that receive the fractional recommendation.
    pub boundary_set: Vec<(usize, usize)>,
}

/// Solver output bundle.
#[derive(Debug, Clone)]
pub struct Solution {
    pub mechanism: Mechanism,
    pub label: CaseLabel,
    pub policy: ThresholdPolicy,
    pub revenue: f64,
}

/// Relative tolerance for threshold comparisons `rho >= theta`.
fn cmp_eps(theta: f64) -> f64 {
    1e-9 * theta.abs().max(1.0)
}

/// States with positive `v1`, sorted by `rho`, with suffix sums of the
/// knapsack weight `g * v1` for O(log M) threshold queries.
struct SortedStates {
    rho: Vec<f64>,
    state_idx: Vec<usize>,
    /// `suffix[i]` = total weight of entries `i..`.
    suffix: Vec<f64>,
}

impl SortedStates {
    fn new(inst: &Instance) -> Self {
        let mut entries: Vec<(f64, usize, f64)> = inst
            .states()
            .states()
            .iter()
            .enumerate()
            .filter_map(|(j, s)| s.rho().map(|r| (r, j, s.g * s.v1)))
            .collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut suffix = vec![0.0; entries.len() + 1];
        for i in (0..entries.len()).rev() {
            suffix[i] = suffix[i + 1] + entries[i].2;
        }
        SortedStates {
            rho: entries.iter().map(|e| e.0).collect(),
            state_idx: entries.iter().map(|e| e.1).collect(),
            suffix,
        }
    }

    /// Total weight of states with `rho >= theta` (tolerant inclusion).
    fn weight_incl(&self, theta: f64) -> f64 {
        let cut = theta - cmp_eps(theta);
        let i = self.rho.partition_point(|&r| r < cut);
        self.suffix[i]
    }

    /// Total weight of states with `rho > theta` (tolerant exclusion).
    fn weight_strict(&self, theta: f64) -> f64 {
        let cut = theta + cmp_eps(theta);
        let i = self.rho.partition_point(|&r| r <= cut);
        self.suffix[i]
    }

    /// State indices with `rho` equal to `theta` within tolerance.
    fn boundary_states(&self, theta: f64) -> impl Iterator<Item = usize> + '_ {
        let lo = self.rho.partition_point(|&r| r < theta - cmp_eps(theta));
        let hi = self.rho.partition_point(|&r| r <= theta + cmp_eps(theta));
        self.state_idx[lo..hi].iter().copied()
    }
}

/// Raw intermediate virtual value for the mixed case, with the discrete gap
/// factors: `t_k - (t_{k+1}-t_k)(c-F(t_k))_+/f(t_k) + (t_k-t_{k-1})
/// (F(t_{k-1})-c)_+/f(t_k)`. Coincides with the lower curve at `c = 1`, the
/// upper curve at `c = 0`, and with `t - (c - F(t))/f(t)` in the continuum.
fn mixed_raw(grid: &TypeGrid, c: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|k| {
            let below = (c - grid.cdf(k)).max(0.0);
            let above = (grid.cdf_prev(k) - c).max(0.0);
            grid.t(k) - grid.gap_after(k) * below / grid.f(k)
                + grid.gap_before(k) * above / grid.f(k)
        })
        .collect()
}

fn thresholds_from_curve(ironed: &[f64]) -> Vec<f64> {
    ironed.iter().map(|v| -v).collect()
}

/// Forward budget `sum_i (t_i - t_{i-1}) P(t_{i-1})` for a threshold vector,
/// i.e. the utility reached at `t_N` when every increment takes its left
/// endpoint.
fn budget_forward(grid: &TypeGrid, sorted: &SortedStates, theta: &[f64], strict: bool) -> f64 {
    (0..grid.len())
        .map(|k| {
            let p = if strict {
                sorted.weight_strict(theta[k])
            } else {
                sorted.weight_incl(theta[k])
            };
            grid.gap_after(k) * p
        })
        .sum()
}

/// Backward budget `sum_i (t_i - t_{i-1}) P(t_i)`: the largest utility span
/// reachable from the experiment.
fn budget_backward(grid: &TypeGrid, sorted: &SortedStates, theta: &[f64], strict: bool) -> f64 {
    (0..grid.len())
        .map(|k| {
            let p = if strict {
                sorted.weight_strict(theta[k])
            } else {
                sorted.weight_incl(theta[k])
            };
            grid.gap_before(k) * p
        })
        .sum()
}

/// `(V_L, V_H)`: the case bounds built from ironed lower and upper virtual
/// value thresholds.
pub fn case_bounds(inst: &Instance) -> (f64, f64) {
    let sorted = SortedStates::new(inst);
    let grid = inst.types();
    let base = inst.prior_value(0).max(0.0);
    let low = thresholds_from_curve(&VirtualCurve::lower(grid).ironed);
    let high = thresholds_from_curve(&VirtualCurve::upper(grid).ironed);
    let v_low = base + budget_forward(grid, &sorted, &low, false);
    let v_high = base + budget_backward(grid, &sorted, &high, false);
    (v_low, v_high)
}

/// Classifies the instance and, in the mixed case, attaches `(c, D)`.
pub fn classify(inst: &Instance) -> Result<CaseLabel, SolveError> {
    let (v_low, v_high) = case_bounds(inst);
    let b = inst.prior_value(inst.num_types() - 1);
    let tag = if b <= v_low {
        CaseTag::LowTail
    } else if b >= v_high {
        CaseTag::HighTail
    } else {
        CaseTag::Mixed
    };
    let (c, boundary_fraction) = if tag == CaseTag::Mixed {
        let (c, d) = find_mixing_constant(inst)?;
        (Some(c), Some(d))
    } else {
        (None, None)
    };
    Ok(CaseLabel {
        tag,
        v_low,
        v_high,
        c,
        boundary_fraction,
    })
}

const BISECT_ITERS: usize = 200;
const BRACKET_TOL: f64 = 1e-14;
/// Quantile tolerance for treating `F(t_{i-1})` as equal to `c`.
const BP_TOL: f64 = 1e-9;

/// Thresholds and per-type weighted probabilities (with threshold states
/// excluded / included) for the mixed curve at weight `c`.
struct MixedEval {
    p_strict: Vec<f64>,
    p_incl: Vec<f64>,
}

fn eval_mixed(grid: &TypeGrid, sorted: &SortedStates, c: f64) -> MixedEval {
    let curve = VirtualCurve::from_raw(&mixed_raw(grid, c), grid);
    let theta = thresholds_from_curve(&curve.ironed);
    let p_strict = theta.iter().map(|&th| sorted.weight_strict(th)).collect();
    let p_incl = theta.iter().map(|&th| sorted.weight_incl(th)).collect();
    MixedEval { p_strict, p_incl }
}

impl MixedEval {
    /// The utility span `sum_i Delta_i` reachable at weight `c` while every
    /// increment sits at its revenue-optimal endpoint: left endpoint
    /// `gap * P(t_{i-1})` where `F(t_{i-1}) < c`, right endpoint
    /// `gap * P(t_i)` above, either at ties. Threshold states count with
    /// fraction `d`; `tie_right` picks the endpoint used at quantile ties.
    fn budget(&self, grid: &TypeGrid, c: f64, d: f64, tie_right: bool) -> f64 {
        let p = |k: usize| self.p_strict[k] + d * (self.p_incl[k] - self.p_strict[k]);
        let mut total = 0.0;
        for i in 1..grid.len() {
            let fprev = grid.cdf(i - 1);
            let k = if fprev < c - BP_TOL {
                i - 1
            } else if fprev > c + BP_TOL {
                i
            } else if tie_right {
                i
            } else {
                i - 1
            };
            total += grid.gap_before(i) * p(k);
        }
        total
    }
}

/// Finds the mixing constant `c` and boundary fraction `D` for the mixed
/// case: `c` is the largest weight at which the maximal optimality-
/// preserving utility span still reaches `v(t_N)`, and `D` shrinks the
/// threshold states' recommendation so the span hits `v(t_N)` exactly.
pub fn find_mixing_constant(inst: &Instance) -> Result<(f64, f64), SolveError> {
    let (v_low, v_high) = case_bounds(inst);
    let full = inst.prior_value(inst.num_types() - 1);
    if full <= v_low || full >= v_high {
        return Err(SolveError::NotMixedCase);
    }
    // The lowest type keeps `max(0, v(t_1))`; increments must span the rest.
    let b = full - inst.prior_value(0).max(0.0);
    let grid = inst.types();
    let sorted = SortedStates::new(inst);
    let reach = |c: f64| eval_mixed(grid, &sorted, c).budget(grid, c, 1.0, true);

    let mut c = if reach(1.0) >= b {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..BISECT_ITERS {
            if hi - lo < BRACKET_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if reach(mid) >= b {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    // Snap to an exact quantile breakpoint; the bisection converges onto
    // one whenever the binding change is an endpoint swap there.
    for i in 0..grid.len() {
        if (grid.cdf(i) - c).abs() <= BP_TOL {
            c = grid.cdf(i);
        }
    }

    let ev = eval_mixed(grid, &sorted, c);
    let hi_at = |d: f64| ev.budget(grid, c, d, true);
    let d = if hi_at(0.0) >= b {
        0.0
    } else {
        let span = hi_at(1.0) - hi_at(0.0);
        if span > 1e-15 {
            ((b - hi_at(0.0)) / span).clamp(0.0, 1.0)
        } else {
            return Err(SolveError::EmptyBoundary(b - hi_at(0.0)));
        }
    };
    // The minimal optimality-preserving span must not exceed the target.
    let lo_at_d = ev.budget(grid, c, d, false);
    if lo_at_d > b + 1e-7 * b.abs().max(1.0) {
        return Err(SolveError::EmptyBoundary(lo_at_d - b));
    }
    Ok((c, d))
}

/// Builds the per-type threshold vector and boundary set for a classified
/// instance.
pub fn build_threshold_policy(inst: &Instance, label: &CaseLabel) -> ThresholdPolicy {
    let grid = inst.types();
    let curve = match label.tag {
        CaseTag::LowTail => VirtualCurve::lower(grid),
        CaseTag::HighTail => VirtualCurve::upper(grid),
        CaseTag::Mixed => {
            VirtualCurve::from_raw(&mixed_raw(grid, label.c.expect("mixed label has c")), grid)
        }
    };
    let theta = thresholds_from_curve(&curve.ironed);
    let boundary_fraction = label.boundary_fraction.unwrap_or(1.0);
    let mut boundary_set = Vec::new();
    if label.tag == CaseTag::Mixed && boundary_fraction < 1.0 {
        let sorted = SortedStates::new(inst);
        for (k, &th) in theta.iter().enumerate() {
            for q in sorted.boundary_states(th) {
                boundary_set.push((q, k));
            }
        }
    }
    ThresholdPolicy {
        theta,
        boundary_fraction,
        boundary_set,
    }
}

impl ThresholdPolicy {
    /// Materializes the experiment matrix. States with `v1 = 0` carry no
    /// threshold coordinate and are recommended active iff `v0 >= 0`.
    pub fn experiment(&self, inst: &Instance) -> Vec<Vec<f64>> {
        let mut pi = vec![vec![0.0; inst.num_types()]; inst.num_states()];
        for (q, state) in inst.states().states().iter().enumerate() {
            match state.rho() {
                None => {
                    let rec = if state.v0 >= 0.0 { 1.0 } else { 0.0 };
                    pi[q].iter_mut().for_each(|x| *x = rec);
                }
                Some(rho) => {
                    for (k, &th) in self.theta.iter().enumerate() {
                        if rho >= th - cmp_eps(th) {
                            pi[q][k] = if self.boundary_set.contains(&(q, k)) {
                                self.boundary_fraction
                            } else {
                                1.0
                            };
                        }
                    }
                }
            }
        }
        pi
    }
}

/// Derives payments from a policy via the pointwise-minimal feasible buyer
/// utility profile.
pub fn payments(
    inst: &Instance,
    policy: &ThresholdPolicy,
    _label: &CaseLabel,
) -> Result<Mechanism, SolveError> {
    let pi = policy.experiment(inst);
    let grid = inst.types();
    let n = grid.len();
    let weighted_prob: Vec<f64> = (0..n)
        .map(|k| {
            inst.states()
                .states()
                .iter()
                .enumerate()
                .map(|(q, s)| pi[q][k] * s.g * s.v1)
                .sum()
        })
        .collect();

    // Forward chain starts from the lowest type's participation level.
    let mut forward = vec![0.0; n];
    forward[0] = inst.prior_value(0).max(0.0);
    for k in 1..n {
        forward[k] = forward[k - 1] + grid.gap_before(k) * weighted_prob[k - 1];
    }
    let mut backward = vec![0.0; n];
    for k in (0..n - 1).rev() {
        backward[k] = backward[k + 1] + grid.gap_after(k) * weighted_prob[k + 1];
    }
    let budget = inst.prior_value(n - 1);

    let mut pay = vec![0.0; n];
    for k in 0..n {
        let utility = forward[k].max(budget - backward[k]);
        let gross: f64 = inst
            .states()
            .states()
            .iter()
            .enumerate()
            .map(|(q, s)| s.g * pi[q][k] * inst.value(q, k))
            .sum();
        pay[k] = gross - utility;
        if pay[k] < -1e-9 {
            return Err(SolveError::NegativePayment(pay[k]));
        }
    }
    Ok(Mechanism { pi, pay })
}

/// Full pipeline: classify, build the policy, derive payments.
pub fn solve(inst: &Instance) -> Result<Solution, SolveError> {
    let label = classify(inst)?;
    let policy = build_threshold_policy(inst, &label);
    let mechanism = payments(inst, &policy, &label)?;
    let revenue = crate::feasibility::revenue(inst, &mechanism);
    Ok(Solution {
        mechanism,
        label,
        policy,
        revenue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::check_feasible;
    use crate::lp_oracle;
    use crate::model::{three_type_example, uniform_product};

    #[test]
    fn discrete_example_bounds_and_case() {
        let inst = three_type_example();
        let (v_low, v_high) = case_bounds(&inst);
        assert!((v_low - 5.0 / 3.0).abs() < 1e-12, "V_L = {v_low}");
        assert!((v_high - 11.0 / 3.0).abs() < 1e-12, "V_H = {v_high}");
        let label = classify(&inst).unwrap();
        assert_eq!(label.tag, CaseTag::HighTail);
    }

    #[test]
    fn discrete_example_full_solution() {
        let inst = three_type_example();
        let sol = solve(&inst).unwrap();
        let want_pi = [[0.0, 0.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]];
        for q in 0..3 {
            for t in 0..3 {
                assert!(
                    (sol.mechanism.pi[q][t] - want_pi[q][t]).abs() < 1e-9,
                    "pi[{q}][{t}] = {}",
                    sol.mechanism.pi[q][t]
                );
            }
        }
        let want_pay = [2.0 / 3.0, 2.0 / 3.0, 0.0];
        for t in 0..3 {
            assert!((sol.mechanism.pay[t] - want_pay[t]).abs() < 1e-9);
        }
        assert!((sol.revenue - 4.0 / 9.0).abs() < 1e-9);
        assert!(check_feasible(&inst, &sol.mechanism).all_ok());
    }

    #[test]
    fn low_tail_family_classification_and_revenue() {
        // v(t) = t/2 - 2 is negative on [2,3]; the low-tail construction
        // applies and the fine-grid revenue approaches ln(1.5) - 3/8.
        let inst = uniform_product(2.0, 3.0, 0.0, 1.0, -2.0, 400, 400).unwrap();
        let label = classify(&inst).unwrap();
        assert_eq!(label.tag, CaseTag::LowTail);
        let sol = solve(&inst).unwrap();
        let target = 1.5f64.ln() - 0.375;
        assert!(
            (sol.revenue - target).abs() < 5e-3,
            "revenue {} vs {target}",
            sol.revenue
        );
        assert!(check_feasible(&inst, &sol.mechanism).all_ok());
    }

    #[test]
    fn high_tail_family_classification() {
        let inst = uniform_product(3.0, 6.0, 1.0, 4.0, -6.0, 300, 300).unwrap();
        let label = classify(&inst).unwrap();
        assert_eq!(label.tag, CaseTag::HighTail);
        let sol = solve(&inst).unwrap();
        assert!(check_feasible(&inst, &sol.mechanism).all_ok());
    }

    #[test]
    fn mixed_family_classification() {
        let inst = uniform_product(0.0, 10.0, 0.0, 10.0, -30.0, 200, 200).unwrap();
        let label = classify(&inst).unwrap();
        assert_eq!(label.tag, CaseTag::Mixed);
        let c = label.c.unwrap();
        assert!((0.0..=1.0).contains(&c), "c = {c}");
        let sol = solve(&inst).unwrap();
        let report = crate::feasibility::check_feasible_with(&inst, &sol.mechanism, 1e-6);
        assert!(report.all_ok(), "{}", report.table());
    }

    #[test]
    fn find_mixing_constant_rejects_tail_cases() {
        let inst = three_type_example();
        assert_eq!(
            find_mixing_constant(&inst).unwrap_err(),
            SolveError::NotMixedCase
        );
    }

    #[test]
    fn matches_lp_oracle_on_random_instances() {
        for seed in 0..40 {
            let inst = crate::corpus::random_instance(seed);
            let sol = solve(&inst).unwrap();
            let report = check_feasible(&inst, &sol.mechanism);
            assert!(report.all_ok(), "seed {seed}:\n{}", report.table());
            let oracle = lp_oracle::oracle(&inst).unwrap();
            assert_eq!(oracle.status, lp_oracle::LpStatus::Optimal, "seed {seed}");
            let cmp = lp_oracle::compare(&inst, &sol.mechanism, &oracle);
            assert!(
                cmp.rel_gap <= 1e-5,
                "seed {seed}: closed {} vs oracle {}",
                cmp.closed_revenue,
                cmp.oracle_revenue
            );
        }
    }
}
