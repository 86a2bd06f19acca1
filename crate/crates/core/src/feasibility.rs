//! Verification of arbitrary menus against the feasibility characterization:
//! monotone weighted recommendation probability, the discrete utility
//! identity, endpoint participation, nonnegative payments, pairwise
//! incentive compatibility, and obedience.

use crate::model::{Instance, Mechanism};
use serde::Serialize;

/// `P(t) = sum_q pi(q,t) g(q) v1(q)`: the weighted probability of an active
/// recommendation, which is the local slope of the buyer's utility.
pub fn weighted_prob(inst: &Instance, mech: &Mechanism, t: usize) -> f64 {
    inst.states()
        .states()
        .iter()
        .enumerate()
        .map(|(q, s)| mech.pi[q][t] * s.g * s.v1)
        .sum()
}

/// Buyer utility under truth-telling and obedience:
/// `u(t) = sum_q g pi v(q,t) - p(t)`.
pub fn utility(inst: &Instance, mech: &Mechanism, t: usize) -> f64 {
    let gross: f64 = inst
        .states()
        .states()
        .iter()
        .enumerate()
        .map(|(q, s)| s.g * mech.pi[q][t] * inst.value(q, t))
        .sum();
    gross - mech.pay[t]
}

/// Surplus over the outside option: `s(t) = u(t) - max(0, v(t))`.
pub fn surplus(inst: &Instance, mech: &Mechanism, t: usize) -> f64 {
    utility(inst, mech, t) - inst.prior_value(t).max(0.0)
}

/// Seller revenue `sum_t f(t) p(t)`.
pub fn revenue(inst: &Instance, mech: &Mechanism) -> f64 {
    (0..inst.num_types())
        .map(|t| inst.types().f(t) * mech.pay[t])
        .sum()
}

/// Value type `t` gets from reporting `t_from` and then obeying.
fn deviation_value(inst: &Instance, mech: &Mechanism, t: usize, from: usize) -> f64 {
    let gross: f64 = inst
        .states()
        .states()
        .iter()
        .enumerate()
        .map(|(q, s)| s.g * mech.pi[q][from] * inst.value(q, t))
        .sum();
    gross - mech.pay[from]
}

/// Value type `t` gets from reporting `t_from` and best-responding to each
/// signal separately (the original max-form deviation payoff).
pub fn max_form_deviation_value(inst: &Instance, mech: &Mechanism, t: usize, from: usize) -> f64 {
    let mut active = 0.0;
    let mut passive = 0.0;
    for (q, s) in inst.states().states().iter().enumerate() {
        let v = s.g * inst.value(q, t);
        active += mech.pi[q][from] * v;
        passive += (1.0 - mech.pi[q][from]) * v;
    }
    active.max(0.0) + passive.max(0.0) - mech.pay[from]
}

/// Constraint-by-constraint verdicts with worst violations. All "worst"
/// fields are signed slacks: nonnegative means the constraint holds.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub tol: f64,
    /// `P` non-decreasing in `t`.
    pub p_monotone_signal: bool,
    /// Largest drop `P(t_{k-1}) - P(t_k)` (positive = violation).
    pub monotone_violation: f64,
    /// Largest distance of a utility increment `u(t_k) - u(t_{k-1})` from
    /// the admissible interval `[gap * P(t_{k-1}), gap * P(t_k)]`.
    pub utility_identity_gap: f64,
    /// `u(t_1)`; participation of the lowest type requires this `>= 0`.
    pub ir_low: f64,
    /// `u(t_N) - v(t_N)`; the top type must be served at its prior value.
    pub ir_high: f64,
    /// Smallest `u(t) - max(0, v(t))` over all types.
    pub ir_worst: f64,
    pub min_payment: f64,
    /// Smallest slack of the conditional obedience constraints
    /// `sum_q pi g v >= 0` and `sum_q (1 - pi) g v <= 0` over all types.
    pub obedience_worst: f64,
    /// `(t, t', gain)` for the most profitable misreport; `gain <= 0` means
    /// incentive compatible.
    pub ic_worst: (usize, usize, f64),
    /// Surplus non-decreasing up to the first type with `v >= 0`, then
    /// non-increasing.
    pub surplus_shape_ok: bool,
}

impl FeasibilityReport {
    pub fn all_ok(&self) -> bool {
        self.p_monotone_signal
            && self.utility_identity_gap <= self.tol
            && self.ir_low >= -self.tol
            && self.ir_high >= -self.tol
            && self.ir_worst >= -self.tol
            && self.min_payment >= -self.tol
            && self.obedience_worst >= -self.tol
            && self.ic_worst.2 <= self.tol
            && self.surplus_shape_ok
    }

    /// One line per check, `PASS`/`FAIL` with the measured slack.
    pub fn table(&self) -> String {
        let row = |name: &str, ok: bool, val: f64| {
            format!("{:28} {}  ({:+.3e})\n", name, if ok { "PASS" } else { "FAIL" }, val)
        };
        let mut s = String::new();
        s.push_str(&row(
            "P monotone",
            self.p_monotone_signal,
            -self.monotone_violation,
        ));
        s.push_str(&row(
            "utility identity",
            self.utility_identity_gap <= self.tol,
            -self.utility_identity_gap,
        ));
        s.push_str(&row("IR at t_1", self.ir_low >= -self.tol, self.ir_low));
        s.push_str(&row("IR at t_N", self.ir_high >= -self.tol, self.ir_high));
        s.push_str(&row("IR all types", self.ir_worst >= -self.tol, self.ir_worst));
        s.push_str(&row(
            "payments >= 0",
            self.min_payment >= -self.tol,
            self.min_payment,
        ));
        s.push_str(&row(
            "obedience",
            self.obedience_worst >= -self.tol,
            self.obedience_worst,
        ));
        s.push_str(&row(
            "incentive compatibility",
            self.ic_worst.2 <= self.tol,
            -self.ic_worst.2,
        ));
        s.push_str(&row(
            "surplus shape",
            self.surplus_shape_ok,
            if self.surplus_shape_ok { 0.0 } else { -1.0 },
        ));
        s
    }
}

pub fn check_feasible(inst: &Instance, mech: &Mechanism) -> FeasibilityReport {
    check_feasible_with(inst, mech, 1e-9)
}

pub fn check_feasible_with(inst: &Instance, mech: &Mechanism, tol: f64) -> FeasibilityReport {
    let n = inst.num_types();
    let grid = inst.types();
    let p: Vec<f64> = (0..n).map(|t| weighted_prob(inst, mech, t)).collect();
    let u: Vec<f64> = (0..n).map(|t| utility(inst, mech, t)).collect();

    let mut monotone_violation = 0.0f64;
    let mut utility_identity_gap = 0.0f64;
    for k in 1..n {
        monotone_violation = monotone_violation.max(p[k - 1] - p[k]);
        let inc = u[k] - u[k - 1];
        let gap = grid.gap_before(k);
        let lo = gap * p[k - 1];
        let hi = gap * p[k];
        utility_identity_gap = utility_identity_gap.max((lo - inc).max(inc - hi.max(lo)));
    }

    let ir_low = u[0];
    let ir_high = u[n - 1] - inst.prior_value(n - 1);
    let ir_worst = (0..n)
        .map(|t| u[t] - inst.prior_value(t).max(0.0))
        .fold(f64::INFINITY, f64::min);
    let min_payment = mech.pay.iter().copied().fold(f64::INFINITY, f64::min);

    let mut obedience_worst = f64::INFINITY;
    for t in 0..n {
        let mut active = 0.0;
        let mut passive = 0.0;
        for (q, s) in inst.states().states().iter().enumerate() {
            let v = s.g * inst.value(q, t);
            active += mech.pi[q][t] * v;
            passive += (1.0 - mech.pi[q][t]) * v;
        }
        obedience_worst = obedience_worst.min(active).min(-passive);
    }

    let mut ic_worst = (0, 0, f64::NEG_INFINITY);
    for t in 0..n {
        for from in 0..n {
            if from == t {
                continue;
            }
            let gain = deviation_value(inst, mech, t, from) - u[t];
            if gain > ic_worst.2 {
                ic_worst = (t, from, gain);
            }
        }
    }
    if n == 1 {
        ic_worst = (0, 0, 0.0);
    }

    // Surplus rises while the prior value stays negative and falls once it
    // is nonnegative. The one increment bridging the sign change is
    // unconstrained: its bound mixes both regimes.
    let s: Vec<f64> = (0..n).map(|t| u[t] - inst.prior_value(t).max(0.0)).collect();
    let split = (0..n)
        .find(|&t| inst.prior_value(t) >= 0.0)
        .unwrap_or(n);
    let mut surplus_shape_ok = true;
    for k in 1..n {
        if k < split && s[k] < s[k - 1] - tol.max(1e-9) {
            surplus_shape_ok = false;
        }
        if k > split && s[k] > s[k - 1] + tol.max(1e-9) {
            surplus_shape_ok = false;
        }
    }

    FeasibilityReport {
        tol,
        p_monotone_signal: monotone_violation <= tol,
        monotone_violation,
        utility_identity_gap,
        ir_low,
        ir_high,
        ir_worst,
        min_payment,
        obedience_worst,
        ic_worst,
        surplus_shape_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::three_type_example;

    fn three_type_solution() -> Mechanism {
        Mechanism {
            pi: vec![
                vec![0.0, 0.0, 1.0],
                vec![1.0, 1.0, 1.0],
                vec![1.0, 1.0, 1.0],
            ],
            pay: vec![2.0 / 3.0, 2.0 / 3.0, 0.0],
        }
    }

    #[test]
    fn weighted_prob_values() {
        let inst = three_type_example();
        let mech = three_type_solution();
        assert!((weighted_prob(&inst, &mech, 0) - 5.0 / 3.0).abs() < 1e-12);
        assert!((weighted_prob(&inst, &mech, 2) - 2.0).abs() < 1e-12);
        let zero = Mechanism::zero(3, 3);
        assert_eq!(weighted_prob(&inst, &zero, 1), 0.0);
    }

    #[test]
    fn utility_values() {
        let inst = three_type_example();
        let mech = three_type_solution();
        assert!((utility(&inst, &mech, 0) - 1.0 / 3.0).abs() < 1e-12);
        assert!((utility(&inst, &mech, 2) - 4.0).abs() < 1e-12);
        let zero = Mechanism::zero(3, 3);
        assert_eq!(utility(&inst, &zero, 0), 0.0);
    }

    #[test]
    fn surplus_values() {
        let inst = three_type_example();
        let mech = three_type_solution();
        assert!(surplus(&inst, &mech, 2).abs() < 1e-12);
        assert!((surplus(&inst, &mech, 0) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn revenue_of_three_type_solution() {
        let inst = three_type_example();
        let mech = three_type_solution();
        assert!((revenue(&inst, &mech) - 4.0 / 9.0).abs() < 1e-12);
        assert_eq!(revenue(&inst, &Mechanism::zero(3, 3)), 0.0);
    }

    #[test]
    fn three_type_solution_is_feasible() {
        let inst = three_type_example();
        let report = check_feasible(&inst, &three_type_solution());
        assert!(report.all_ok(), "{}", report.table());
    }

    #[test]
    fn raised_payment_breaks_ic() {
        let inst = three_type_example();
        let mut mech = three_type_solution();
        mech.pay[0] += 1.0;
        let report = check_feasible(&inst, &mech);
        assert!(report.ic_worst.2 > 1e-6);
        assert!(!report.all_ok());
    }

    #[test]
    fn full_revelation_is_feasible() {
        let inst = three_type_example();
        let mech = Mechanism::full_revelation(&inst);
        let report = check_feasible(&inst, &mech);
        assert!(report.all_ok(), "{}", report.table());
    }

    #[test]
    fn non_monotone_p_is_flagged() {
        let inst = three_type_example();
        let mut mech = Mechanism::full_revelation(&inst);
        mech.pi[2][2] = 0.0;
        let report = check_feasible(&inst, &mech);
        assert!(!report.p_monotone_signal);
    }

    #[test]
    fn reduced_ic_implies_max_form_on_three_type_solution() {
        let inst = three_type_example();
        let mech = three_type_solution();
        for t in 0..3 {
            let u = utility(&inst, &mech, t);
            for from in 0..3 {
                let dev = max_form_deviation_value(&inst, &mech, t, from);
                assert!(u >= dev - 1e-9, "type {t} gains from max-form deviation to {from}");
            }
        }
    }
}
