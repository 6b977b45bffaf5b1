use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sbnn::gradcheck::{max_relative_error, BaselineInstance, BilevelInstance, MARGIN};
use sbnn::splitboost::{train_for_epochs, w1_gradient_direct};
use sbnn::{bilevel_cost, finite_diff_gradient, w1_gradient, Samples, TrainConfig};

fn instances(seed: u64, count: usize) -> Vec<BilevelInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| BilevelInstance::generate(&mut rng, 8, 3, 4, MARGIN))
        .collect()
}

#[test]
fn hypergradient_matches_finite_differences() {
    for inst in instances(21, 10) {
        assert!(inst.hypergradient_error().unwrap() < 1e-4);
        assert!(inst.jacobian_error().unwrap() < 1e-5);
    }
}

#[test]
fn implicit_terms_matter() {
    // dropping the inner-solution sensitivity gives a visibly wrong gradient
    let worst = instances(22, 10)
        .iter()
        .map(|inst| {
            let direct = w1_gradient_direct(&inst.w1, &inst.a, &inst.b).unwrap();
            let oracle = finite_diff_gradient(|w| bilevel_cost(w, &inst.a, &inst.b).unwrap(), &inst.w1, 1e-5).unwrap();
            max_relative_error(&direct, &oracle)
        })
        .fold(0.0, f64::max);
    assert!(worst > 1e-2, "{worst}");
}

#[test]
fn small_step_descends() {
    for inst in instances(23, 10) {
        let g = w1_gradient(&inst.w1, &inst.a, &inst.b).unwrap();
        let before = bilevel_cost(&inst.w1, &inst.a, &inst.b).unwrap();
        let moved = inst.w1.axpy(-1e-6, &g).unwrap();
        let after = bilevel_cost(&moved, &inst.a, &inst.b).unwrap();
        assert!(after < before, "{after} >= {before}");
    }
}

#[test]
fn partitions_are_interchangeable() {
    for inst in instances(24, 5) {
        let ab = bilevel_cost(&inst.w1, &inst.a, &inst.b).unwrap();
        let ba = bilevel_cost(&inst.w1, &inst.b, &inst.a).unwrap();
        assert!((ab - ba).abs() <= 1e-12 * ab.abs().max(1.0));
        let gab = w1_gradient(&inst.w1, &inst.a, &inst.b).unwrap();
        let gba = w1_gradient(&inst.w1, &inst.b, &inst.a).unwrap();
        assert!(gab.sub(&gba).unwrap().max_abs() <= 1e-12 * gab.max_abs().max(1.0));
    }
}

#[test]
fn training_is_bit_reproducible() {
    let inst = &instances(25, 1)[0];
    let monitor = Samples {
        x: inst.b.x.clone(),
        y: inst.b.y.clone(),
    };
    let cfg = TrainConfig {
        max_epochs: 30,
        ..TrainConfig::default()
    };
    let first = train_for_epochs(&cfg, &inst.a, &inst.b, Some(&monitor), 30).unwrap();
    let second = train_for_epochs(&cfg, &inst.a, &inst.b, Some(&monitor), 30).unwrap();
    assert_eq!(first.params, second.params);
    for (x, y) in first.history.iter().zip(&second.history) {
        assert_eq!(x.j_train.to_bits(), y.j_train.to_bits());
        assert_eq!(x.j_val.map(f64::to_bits), y.j_val.map(f64::to_bits));
    }
}

#[test]
fn baseline_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for lambda in [0.0, 0.01, 1.0] {
        for _ in 0..10 {
            let inst = BaselineInstance::generate(&mut rng, 8, 3, 4, lambda);
            assert!(inst.gradient_error().unwrap() < 1e-6);
        }
    }
}
