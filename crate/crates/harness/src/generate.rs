//! Seeded random instances.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use minegame_core::equilibria::enumerate_stable;
use minegame_core::{Configuration, Game, Rational};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::{Mode, RunOptions, Scenario, SchedulerKind, SchedulerSpec};

/// Shape of a random game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSpec {
    pub miners: usize,
    pub coins: usize,
    pub powers: RangeInclusive<u64>,
    pub rewards: RangeInclusive<u64>,
    pub distinct_rewards: bool,
    /// Every coin pays the same reward.
    pub symmetric: bool,
}

impl InstanceSpec {
    /// Distinct powers in `[1, 10^6]`, distinct rewards in `[10^6, 10^9]`.
    pub fn new(miners: usize, coins: usize) -> Self {
        InstanceSpec {
            miners,
            coins,
            powers: 1..=1_000_000,
            rewards: 1_000_000..=1_000_000_000,
            distinct_rewards: true,
            symmetric: false,
        }
    }

    /// Powers within a factor of two of each other and rewards within 10%,
    /// so that lone miners are easy to join.
    pub fn near_equal(miners: usize, coins: usize) -> Self {
        InstanceSpec {
            powers: 1_000_000..=2_000_000,
            rewards: 1_000_000_000..=1_100_000_000,
            ..InstanceSpec::new(miners, coins)
        }
    }

    pub fn symmetric(miners: usize, coins: usize) -> Self {
        InstanceSpec {
            symmetric: true,
            ..InstanceSpec::new(miners, coins)
        }
    }
}

fn distinct(rng: &mut ChaCha8Rng, count: usize, range: &RangeInclusive<u64>) -> Vec<u64> {
    let width = range.end() - range.start() + 1;
    assert!(count as u64 <= width, "range too narrow for {} distinct values", count);
    let mut set = BTreeSet::new();
    while set.len() < count {
        set.insert(rng.random_range(range.clone()));
    }
    set.into_iter().collect()
}

/// Game with pairwise-distinct integer powers declared in strictly
/// decreasing order.
pub fn generate_game(spec: &InstanceSpec, rng: &mut ChaCha8Rng) -> Game {
    assert!(spec.miners >= 1 && spec.coins >= 1);
    let powers: Vec<Rational> = distinct(rng, spec.miners, &spec.powers)
        .into_iter()
        .rev()
        .map(|p| Rational::from_integer(p.into()))
        .collect();
    let mut rewards: Vec<u64> = if spec.symmetric {
        vec![rng.random_range(spec.rewards.clone()); spec.coins]
    } else if spec.distinct_rewards {
        distinct(rng, spec.coins, &spec.rewards)
    } else {
        (0..spec.coins).map(|_| rng.random_range(spec.rewards.clone())).collect()
    };
    rewards.shuffle(rng);
    let rewards: Vec<Rational> = rewards.into_iter().map(|r| Rational::from_integer(r.into())).collect();
    Game::from_values(&powers, &rewards).expect("generated quantities are positive")
}

/// Learning scenario on a fresh game from a uniformly random start.
pub fn generate_from_spec(spec: &InstanceSpec, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let game = generate_game(spec, &mut rng);
    let initial = Configuration::from_vec((0..spec.miners).map(|_| rng.random_range(0..spec.coins)).collect());
    Scenario {
        game,
        initial: Some(initial),
        target: None,
        scheduler: SchedulerSpec {
            kind: SchedulerKind::FirstIndex,
            seed,
        },
        mode: Mode::Learn,
        options: RunOptions::default(),
    }
}

/// `n` miners with distinct integer powers, `k` coins with distinct integer
/// rewards, a random start; deterministic in `seed`.
pub fn generate_instance(n: usize, k: usize, seed: u64) -> Scenario {
    generate_from_spec(&InstanceSpec::new(n, k), seed)
}

/// Design scenario whose endpoints are two equilibria of the generated game,
/// distinct whenever the game has more than one. `None` if enumeration would
/// exceed `budget`.
pub fn generate_design(n: usize, k: usize, seed: u64, budget: u128) -> Option<Scenario> {
    let mut scenario = generate_instance(n, k, seed);
    let stable = enumerate_stable(&scenario.game, budget).ok()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_de51);
    let count = stable.len();
    let from = rng.random_range(0..count);
    let to = if count > 1 {
        (from + rng.random_range(1..count)) % count
    } else {
        from
    };
    scenario.initial = Some(stable.configurations[from].clone());
    scenario.target = Some(stable.configurations[to].clone());
    scenario.mode = Mode::Design;
    Some(scenario)
}
