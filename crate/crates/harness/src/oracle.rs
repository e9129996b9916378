//! Brute-force reference computations, written directly from the payoff
//! definition and sharing no code with the core's fast paths.

use minegame_core::{Configuration, Game, Rational};
use num_traits::Zero;

fn mass(game: &Game, s: &Configuration, coin: usize) -> Rational {
    (0..game.miner_count())
        .filter(|&p| s.coin_of(p) == coin)
        .fold(Rational::zero(), |acc, p| acc + game.power(p))
}

/// `m_p · F(s.p) / M_{s.p}(s)`.
pub fn payoff(game: &Game, s: &Configuration, miner: usize) -> Rational {
    let c = s.coin_of(miner);
    game.power(miner) * game.reward(c) / mass(game, s, c)
}

/// Every `(miner, coin)` unilateral switch that strictly raises the miner's
/// payoff, found by rebuilding each deviated configuration.
pub fn improving_deviations(game: &Game, s: &Configuration) -> Vec<(usize, usize)> {
    let mut found = Vec::new();
    for p in 0..game.miner_count() {
        let now = payoff(game, s, p);
        for c in (0..game.coin_count()).filter(|&c| c != s.coin_of(p)) {
            let mut assignment = s.as_slice().to_vec();
            assignment[p] = c;
            if payoff(game, &Configuration::from_vec(assignment), p) > now {
                found.push((p, c));
            }
        }
    }
    found
}

pub fn is_stable(game: &Game, s: &Configuration) -> bool {
    improving_deviations(game, s).is_empty()
}

/// `Σ_p u_p(s)`.
pub fn total_payoff(game: &Game, s: &Configuration) -> Rational {
    (0..game.miner_count()).fold(Rational::zero(), |acc, p| acc + payoff(game, s, p))
}

/// `(empty coins, Σ 1/M_c over occupied coins)`.
pub fn inverse_mass_sum(game: &Game, s: &Configuration) -> (usize, Rational) {
    let mut empty = 0;
    let mut sum = Rational::zero();
    for c in 0..game.coin_count() {
        let m = mass(game, s, c);
        if m.is_zero() {
            empty += 1;
        } else {
            sum += m.recip();
        }
    }
    (empty, sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use minegame_core::rational::{int, ratio};

    #[test]
    fn two_by_two_payoffs() {
        let g = Game::from_values(&[int(2), int(1)], &[int(1), int(1)]).unwrap();
        let stacked = Configuration::from_vec(vec![0, 0]);
        assert_eq!(payoff(&g, &stacked, 0), ratio(2, 3));
        assert_eq!(payoff(&g, &stacked, 1), ratio(1, 3));
        assert_eq!(improving_deviations(&g, &stacked), vec![(0, 1), (1, 1)]);
        assert!(is_stable(&g, &Configuration::from_vec(vec![0, 1])));
        assert_eq!(inverse_mass_sum(&g, &stacked), (1, ratio(1, 3)));
    }
}
