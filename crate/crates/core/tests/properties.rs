//! Property-based invariants over randomly generated grids and instances.

use infosell::feasibility::{check_feasible, revenue, surplus, utility, weighted_prob};
use infosell::model::{Instance, State, StateSpace, TypeGrid, TypePoint};
use infosell::optimal_mechanism::{case_bounds, solve};
use infosell::virtual_value::{iron, lower_virtual, mixed_virtual, upper_virtual};
use proptest::prelude::*;

fn grid_strategy(max_n: usize) -> impl Strategy<Value = TypeGrid> {
    (2..=max_n)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0.01f64..10.0, n),
                prop::collection::vec(0.05f64..1.0, n),
            )
        })
        .prop_map(|(steps, masses)| {
            let total: f64 = masses.iter().sum();
            let mut t = 0.0;
            let points = steps
                .iter()
                .zip(&masses)
                .map(|(&dt, &m)| {
                    t += dt;
                    TypePoint {
                        t,
                        f: m / total,
                    }
                })
                .collect();
            TypeGrid::new(points).unwrap()
        })
}

fn instance_strategy() -> impl Strategy<Value = Instance> {
    (grid_strategy(6), 2usize..=6)
        .prop_flat_map(|(grid, m)| {
            (
                Just(grid),
                prop::collection::vec((0.05f64..1.0, 0.0f64..2.0, -10.0f64..2.0), m),
            )
        })
        .prop_map(|(grid, raw)| {
            let total: f64 = raw.iter().map(|r| r.0).sum();
            let states = raw
                .iter()
                .enumerate()
                .map(|(j, &(g, v1, v0))| State {
                    label: format!("q{j}"),
                    g: g / total,
                    v1,
                    v0,
                })
                .collect();
            Instance::new(grid, StateSpace::new(states).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ironed_curves_are_monotone_and_mass_preserving(
        grid in grid_strategy(20),
        seedvals in prop::collection::vec(-20.0f64..20.0, 20),
    ) {
        let n = grid.len();
        let raw = &seedvals[..n];
        let curve = iron(raw, &grid).unwrap();
        for w in curve.ironed.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        let rm: f64 = (0..n).map(|i| grid.f(i) * raw[i]).sum();
        let im: f64 = (0..n).map(|i| grid.f(i) * curve.ironed[i]).sum();
        prop_assert!((rm - im).abs() <= 1e-9);
    }

    #[test]
    fn boundary_curves_bracket_the_mixture(grid in grid_strategy(15), c in 0.0f64..=1.0) {
        let lo = lower_virtual(&grid);
        let hi = upper_virtual(&grid);
        let mid = mixed_virtual(&grid, c).unwrap();
        for i in 0..grid.len() {
            prop_assert!(lo[i] <= grid.t(i) + 1e-12);
            prop_assert!(hi[i] >= grid.t(i) - 1e-12);
            prop_assert!(mid[i] >= lo[i] - 1e-12 && mid[i] <= hi[i] + 1e-12);
        }
    }

    #[test]
    fn solver_output_is_always_feasible(inst in instance_strategy()) {
        let sol = solve(&inst).unwrap();
        let report = check_feasible(&inst, &sol.mechanism);
        prop_assert!(report.all_ok(), "{}", report.table());
        let (v_low, v_high) = case_bounds(&inst);
        prop_assert!(v_low <= v_high + 1e-9);
        prop_assert!(sol.revenue >= -1e-12);
    }

    #[test]
    fn buyer_quantities_are_consistent(inst in instance_strategy()) {
        let sol = solve(&inst).unwrap();
        let n = inst.num_types();
        prop_assert!((revenue(&inst, &sol.mechanism) - sol.revenue).abs() <= 1e-12);
        for t in 0..n {
            let u = utility(&inst, &sol.mechanism, t);
            let s = surplus(&inst, &sol.mechanism, t);
            prop_assert!((s - (u - inst.prior_value(t).max(0.0))).abs() <= 1e-12);
            let p = weighted_prob(&inst, &sol.mechanism, t);
            prop_assert!(p >= -1e-12);
        }
    }
}
