use infosell::corpus::random_instance;
use infosell::feasibility::{check_feasible, revenue, utility, weighted_prob};
use infosell::lp_oracle;
use infosell::optimal_mechanism::{case_bounds, classify, solve};

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let inst = random_instance(seed);
    println!("types:");
    for i in 0..inst.num_types() {
        println!("  t={:.6} f={:.6} F={:.6}", inst.types().t(i), inst.types().f(i), inst.types().cdf(i));
    }
    println!("states:");
    for s in inst.states().states() {
        println!("  g={:.6} v1={:.6} v0={:.6} rho={:?}", s.g, s.v1, s.v0, s.rho());
    }
    let (vl, vh) = case_bounds(&inst);
    let b = inst.prior_value(inst.num_types() - 1);
    println!("V_L={vl:.6} V_H={vh:.6} b={b:.6}");
    let label = classify(&inst).unwrap();
    println!("label: {label:?}");
    let sol = solve(&inst).unwrap();
    println!("theta: {:?}", sol.policy.theta);
    println!("boundary: {:?} D={}", sol.policy.boundary_set, sol.policy.boundary_fraction);
    println!("pi: {:?}", sol.mechanism.pi);
    println!("pay: {:?}", sol.mechanism.pay);
    println!("closed revenue: {:.9}", sol.revenue);
    for t in 0..inst.num_types() {
        println!(
            "  t{} P={:.6} u={:.6} v={:.6}",
            t,
            weighted_prob(&inst, &sol.mechanism, t),
            utility(&inst, &sol.mechanism, t),
            inst.prior_value(t)
        );
    }
    let report = check_feasible(&inst, &sol.mechanism);
    println!("feasible: {}\n{}", report.all_ok(), report.table());
    let oracle = lp_oracle::oracle(&inst).unwrap();
    println!("oracle status {:?} revenue {:.9}", oracle.status, oracle.revenue);
    println!("oracle pi: {:?}", oracle.mechanism.pi);
    println!("oracle pay: {:?}", oracle.mechanism.pay);
    println!("oracle revenue recomputed: {:.9}", revenue(&inst, &oracle.mechanism));
    for t in 0..inst.num_types() {
        println!(
            "  oracle t{} P={:.6} u={:.6}",
            t,
            weighted_prob(&inst, &oracle.mechanism, t),
            utility(&inst, &oracle.mechanism, t)
        );
    }
    let orep = check_feasible(&inst, &oracle.mechanism);
    println!("oracle feasible: {}\n{}", orep.all_ok(), orep.table());
}
