mod common;

use common::brute_pareto;
use moc_core::env::{fishwood_pareto_front, Fishwood, FishwoodConfig, FruitTree, FruitTreeConfig, MultiObjectiveEnv, SimRng};
use proptest::prelude::*;
use rand::SeedableRng;

fn fishwood_return(env: &mut Fishwood, actions: &[usize], seed: u64) -> Vec<f64> {
    let mut rng = SimRng::seed_from_u64(seed);
    env.reset();
    let mut total = vec![0.0; 2];
    for &a in actions {
        let obs = env.step(a, &mut rng).unwrap();
        total[0] += obs.reward[0];
        total[1] += obs.reward[1];
    }
    total
}

#[test]
fn fishwood_front_is_nondominated_and_linear() {
    let cfg = FishwoodConfig::default();
    let front = fishwood_pareto_front(&cfg);
    assert_eq!(front.len(), cfg.horizon + 1);
    let pts: Vec<Vec<f64>> = front.iter().map(|p| p.to_vec()).collect();
    assert_eq!(brute_pareto(&pts).len(), pts.len());
    for p in &front {
        assert!((p[0] / cfg.woodprob + p[1] / cfg.fishprob - cfg.horizon as f64).abs() < 1e-9);
    }
}

#[test]
fn fishwood_mean_return_matches_expected_front_point() {
    let cfg = FishwoodConfig::default();
    let mut env = Fishwood::new(cfg).unwrap();
    // 60 steps in the woods, then the river.
    let actions: Vec<usize> = (0..cfg.horizon).map(|t| usize::from(t >= 60)).collect();
    let episodes = 2000;
    let mut mean = [0.0; 2];
    for e in 0..episodes {
        let r = fishwood_return(&mut env, &actions, e);
        mean[0] += r[0] / episodes as f64;
        mean[1] += r[1] / episodes as f64;
    }
    let expected = fishwood_pareto_front(&cfg)[60];
    // Binomial std of a mean over 2000 episodes is about 0.11 and 0.09.
    assert!((mean[0] - expected[0]).abs() < 0.5, "{mean:?}");
    assert!((mean[1] - expected[1]).abs() < 0.5, "{mean:?}");
}

#[test]
fn fruit_tree_reaches_every_leaf_once() {
    let cfg = FruitTreeConfig::bundled();
    let depth = cfg.depth;
    let mut env = FruitTree::new(cfg.clone()).unwrap();
    let mut rng = SimRng::seed_from_u64(0);
    let mut seen = Vec::new();
    for leaf in 0..(1usize << depth) {
        env.reset();
        let mut last = None;
        for level in 0..depth {
            let bit = (leaf >> (depth - 1 - level)) & 1;
            last = Some(env.step(bit, &mut rng).unwrap());
        }
        let obs = last.unwrap();
        assert!(obs.done);
        assert_eq!(obs.reward, cfg.leaf_rewards[leaf].to_vec());
        seen.push(obs.reward);
    }
    assert_eq!(seen.len(), 1 << depth);
}

proptest! {
    #[test]
    fn fishwood_rewards_are_single_unit_per_step(
        actions in prop::collection::vec(0usize..2, 200),
        seed in any::<u64>(),
    ) {
        let mut env = Fishwood::new(FishwoodConfig::default()).unwrap();
        let woods = actions.iter().filter(|&&a| a == 0).count() as f64;
        let r = fishwood_return(&mut env, &actions, seed);
        prop_assert!(r[0] <= woods);
        prop_assert!(r[1] <= 200.0 - woods);
        prop_assert!(r[0] + r[1] <= 200.0);
    }

    #[test]
    fn fishwood_episode_is_reproducible(actions in prop::collection::vec(0usize..2, 200), seed in any::<u64>()) {
        let mut env = Fishwood::new(FishwoodConfig::default()).unwrap();
        prop_assert_eq!(fishwood_return(&mut env, &actions, seed), fishwood_return(&mut env, &actions, seed));
    }

    #[test]
    fn random_fruit_tree_round_trips_through_text(depth in 1usize..7, seed in any::<u64>()) {
        let cfg = FruitTreeConfig::random(depth, seed).unwrap();
        let back = FruitTreeConfig::parse(&cfg.to_text()).unwrap();
        prop_assert_eq!(back, cfg.clone());
        let env = FruitTree::new(cfg).unwrap();
        prop_assert_eq!(env.horizon(), depth);
        prop_assert_eq!(env.state_dim(), depth + 1);
    }
}
