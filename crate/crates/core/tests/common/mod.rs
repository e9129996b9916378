#![allow(dead_code)]

use minegame_core::rational::int;
use minegame_core::{Configuration, Game, Rational};
use num_traits::Zero;
use proptest::prelude::*;

/// Games with up to `max_miners` miners and `max_coins` coins, small integer
/// powers and rewards (ties allowed).
pub fn game(max_miners: usize, max_coins: usize) -> impl Strategy<Value = Game> {
    (1..=max_miners, 1..=max_coins).prop_flat_map(|(n, k)| {
        (
            prop::collection::vec(1i64..=40, n),
            prop::collection::vec(1i64..=40, k),
        )
            .prop_map(|(powers, rewards)| {
                let powers: Vec<Rational> = powers.into_iter().map(int).collect();
                let rewards: Vec<Rational> = rewards.into_iter().map(int).collect();
                Game::from_values(&powers, &rewards).unwrap()
            })
    })
}

pub fn game_and_configuration(
    max_miners: usize,
    max_coins: usize,
) -> impl Strategy<Value = (Game, Configuration)> {
    game(max_miners, max_coins).prop_flat_map(|g| {
        let k = g.coin_count();
        prop::collection::vec(0..k, g.miner_count())
            .prop_map(move |a| (g.clone(), Configuration::from_vec(a)))
    })
}

/// Games with pairwise-distinct powers.
pub fn strict_game(max_miners: usize, max_coins: usize) -> impl Strategy<Value = Game> {
    (1..=max_miners, 1..=max_coins).prop_flat_map(|(n, k)| {
        (
            prop::collection::btree_set(1i64..=60, n),
            prop::collection::vec(1i64..=40, k),
        )
            .prop_map(|(powers, rewards)| {
                let powers: Vec<Rational> = powers.into_iter().rev().map(int).collect();
                let rewards: Vec<Rational> = rewards.into_iter().map(int).collect();
                Game::from_values(&powers, &rewards).unwrap()
            })
    })
}

// Oracles below recompute everything from the raw powers and rewards.

pub fn mass(game: &Game, s: &Configuration, coin: usize) -> Rational {
    let mut total = Rational::zero();
    for p in 0..game.miner_count() {
        if s.coin_of(p) == coin {
            total += game.power(p);
        }
    }
    total
}

pub fn payoff(game: &Game, s: &Configuration, miner: usize) -> Rational {
    let c = s.coin_of(miner);
    game.power(miner) * game.reward(c) / mass(game, s, c)
}

pub fn deviations(game: &Game, s: &Configuration) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for p in 0..game.miner_count() {
        let now = payoff(game, s, p);
        for c in 0..game.coin_count() {
            if c == s.coin_of(p) {
                continue;
            }
            let mut moved = s.as_slice().to_vec();
            moved[p] = c;
            if payoff(game, &Configuration::from_vec(moved), p) > now {
                out.push((p, c));
            }
        }
    }
    out
}

pub fn stable(game: &Game, s: &Configuration) -> bool {
    deviations(game, s).is_empty()
}

/// Every configuration, by counting in base `k`.
pub fn all_configurations(game: &Game) -> Vec<Configuration> {
    let (n, k) = (game.miner_count(), game.coin_count());
    let total = k.pow(n as u32);
    (0..total)
        .map(|mut x| {
            let mut a = vec![0; n];
            for slot in a.iter_mut().rev() {
                *slot = x % k;
                x /= k;
            }
            Configuration::from_vec(a)
        })
        .collect()
}
