//! Seeded random instance generation for cross-checking the closed-form
//! solver against the LP oracle.

use crate::model::{Instance, State, StateSpace, TypeGrid, TypePoint};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Draws a small random instance: 2..=6 types and states, type locations
/// sorted in (0, 10) with a minimum separation, masses positive and
/// normalized, `v1` in [0, 2) and `v0` in [-10, 2).
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instance_with(&mut rng)
}

pub fn random_instance_with(rng: &mut impl Rng) -> Instance {
    let n = rng.gen_range(2..=6);
    let m = rng.gen_range(2..=6);

    let mut ts: Vec<f64>;
    loop {
        ts = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        ts.sort_by(f64::total_cmp);
        if ts.windows(2).all(|w| w[1] - w[0] > 1e-3) {
            break;
        }
    }
    let fs = random_masses(rng, n);
    let types = TypeGrid::new(
        ts.iter()
            .zip(&fs)
            .map(|(&t, &f)| TypePoint { t, f })
            .collect(),
    )
    .unwrap();

    let gs = random_masses(rng, m);
    let states = StateSpace::new(
        (0..m)
            .map(|j| State {
                label: format!("q{}", j + 1),
                g: gs[j],
                v1: rng.gen_range(0.0..2.0),
                v0: rng.gen_range(-10.0..2.0),
            })
            .collect(),
    )
    .unwrap();
    Instance::new(types, states)
}

fn random_masses(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = random_instance(7);
        let b = random_instance(7);
        assert_eq!(a.num_types(), b.num_types());
        for i in 0..a.num_types() {
            assert_eq!(a.types().t(i), b.types().t(i));
        }
    }

    #[test]
    fn instances_are_valid_and_small() {
        for seed in 0..50 {
            let inst = random_instance(seed);
            assert!((2..=6).contains(&inst.num_types()));
            assert!((2..=6).contains(&inst.num_states()));
            let tf: f64 = inst.types().points().iter().map(|p| p.f).sum();
            assert!((tf - 1.0).abs() < 1e-9);
        }
    }
}
