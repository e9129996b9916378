mod common;

use std::cmp::Ordering;

use minegame_core::dynamics::symmetric_potential;
use minegame_core::equilibria::{check_never_alone, enumerate_stable, lonely_coin};
use minegame_core::rational::int;
use minegame_core::{
    compare_potential, construct_equilibrium, converge, potential_list, Configuration, ExtendedRational,
    Game, Rational, Scheduler, SchedulerPolicy,
};
use num_traits::Zero;
use proptest::prelude::*;

use common::*;

fn rpu_oracle(game: &Game, s: &Configuration, coin: usize) -> ExtendedRational {
    let m = mass(game, s, coin);
    if m.is_zero() {
        ExtendedRational::Infinite
    } else {
        ExtendedRational::Finite(game.reward(coin) / m)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn masses_match_oracle_and_conserve_power((g, s) in game_and_configuration(7, 4)) {
        let masses = g.coin_powers(&s);
        let mut total = Rational::zero();
        for (c, m) in masses.iter().enumerate() {
            prop_assert_eq!(m, &mass(&g, &s, c));
            prop_assert_eq!(m, &g.coin_power(&s, c));
            total += m;
        }
        prop_assert_eq!(total, g.total_power());
    }

    #[test]
    fn payoffs_and_rpu_match_oracle((g, s) in game_and_configuration(7, 4)) {
        for p in 0..g.miner_count() {
            prop_assert_eq!(g.payoff(&s, p), payoff(&g, &s, p));
        }
        for c in 0..g.coin_count() {
            prop_assert_eq!(g.rpu(&s, c), rpu_oracle(&g, &s, c));
        }
    }

    #[test]
    fn better_responses_match_deviation_scan((g, s) in game_and_configuration(7, 4)) {
        prop_assert_eq!(g.better_responses(&s), deviations(&g, &s));
        prop_assert_eq!(g.is_stable(&s), stable(&g, &s));
    }

    #[test]
    fn potential_list_is_a_sorted_permutation((g, s) in game_and_configuration(7, 4), rotate in 0usize..4) {
        let mut pairs: Vec<(ExtendedRational, usize)> =
            (0..g.coin_count()).map(|c| (rpu_oracle(&g, &s, c), c)).collect();
        let len = pairs.len();
        pairs.rotate_left(rotate % len);
        pairs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        let list = potential_list(&g, &s);
        prop_assert_eq!(list.entries(), &pairs[..]);
    }

    /// Every better response moves to a coin later in the potential list,
    /// raises the RPU of both coins it touches and raises the potential.
    #[test]
    fn every_better_response_raises_the_potential((g, s) in game_and_configuration(7, 4)) {
        let before = potential_list(&g, &s);
        for (p, to) in deviations(&g, &s) {
            let from = s.coin_of(p);
            let next = s.with_move(p, to);
            prop_assert!(before.position_of(to).unwrap() > before.position_of(from).unwrap());
            let old = rpu_oracle(&g, &s, from);
            prop_assert!(old < rpu_oracle(&g, &next, from));
            prop_assert!(old < rpu_oracle(&g, &next, to));
            let after = potential_list(&g, &next);
            prop_assert_eq!(compare_potential(&before, &after).unwrap(), Ordering::Less);
            prop_assert!(before < after);
        }
    }

    #[test]
    fn learning_converges_to_oracle_stable((g, s) in game_and_configuration(6, 4), seed in any::<u64>()) {
        let cap = (g.coin_count() as u64).pow(g.miner_count() as u32);
        for policy in SchedulerPolicy::all(seed) {
            let mut scheduler = Scheduler::new(policy);
            let trace = converge(&g, &s, &mut scheduler, cap);
            prop_assert!(trace.converged());
            prop_assert!(stable(&g, &trace.final_configuration));
            prop_assert!(trace.steps.len() as u64 <= cap);
            let configurations = trace.configurations();
            for (i, record) in trace.steps.iter().enumerate() {
                let (a, b) = (&configurations[i], &configurations[i + 1]);
                prop_assert_eq!(a.coin_of(record.miner), record.from);
                prop_assert_eq!(b, &a.with_move(record.miner, record.to));
                prop_assert_eq!(&record.payoff_before, &payoff(&g, a, record.miner));
                prop_assert_eq!(&record.payoff_after, &payoff(&g, b, record.miner));
                prop_assert!(record.payoff_after > record.payoff_before);
                prop_assert!(record.potential_before < record.potential_after);
            }
        }
    }

    #[test]
    fn random_scheduler_replays(
        (g, s) in game_and_configuration(6, 4),
        seed in any::<u64>(),
    ) {
        let policy = SchedulerPolicy::Random { seed };
        let a = converge(&g, &s, &mut Scheduler::new(policy), 10_000);
        let b = converge(&g, &s, &mut Scheduler::new(policy), 10_000);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn enumeration_matches_oracle_and_contains_construction(g in game(5, 3)) {
        let set = enumerate_stable(&g, 1_000_000).unwrap();
        let oracle: Vec<Configuration> =
            all_configurations(&g).into_iter().filter(|s| stable(&g, s)).collect();
        prop_assert_eq!(&set.configurations, &oracle);
        let built = construct_equilibrium(&g);
        prop_assert!(stable(&g, &built));
        prop_assert!(set.contains(&built));
    }

    #[test]
    fn symmetric_potential_falls_on_every_step(
        (g, s) in game_and_configuration(7, 4),
        reward in 1i64..20,
    ) {
        let g = g.with_rewards(minegame_core::RewardFunction::new(vec![int(reward); g.coin_count()]).unwrap()).unwrap();
        let h = symmetric_potential(&g, &s).unwrap();
        let mut oracle = Rational::zero();
        let mut empty = 0;
        for c in 0..g.coin_count() {
            let m = mass(&g, &s, c);
            if m.is_zero() {
                empty += 1;
            } else {
                oracle += Rational::from_integer(1.into()) / m;
            }
        }
        prop_assert_eq!(h.empty_coins, empty);
        prop_assert_eq!(&h.occupied_sum, &oracle);
        for (p, c) in deviations(&g, &s) {
            prop_assert!(symmetric_potential(&g, &s.with_move(p, c)).unwrap() < h);
        }
    }

    #[test]
    fn never_alone_matches_oracle((g, s) in game_and_configuration(7, 3)) {
        let movers = deviations(&g, &s);
        let expected = (0..g.coin_count()).find(|&c| {
            s.as_slice().iter().filter(|&&x| x == c).count() <= 1
                && !movers.iter().any(|&(_, to)| to == c)
        });
        prop_assert_eq!(lonely_coin(&g, &s), expected);
        prop_assert_eq!(check_never_alone(&g, &s), expected.is_none());
    }

    /// At a stable configuration with no lonely coin every coin is mined, so
    /// the miners collect every reward.
    #[test]
    fn stable_never_alone_pays_out_everything(g in game(6, 3)) {
        let set = enumerate_stable(&g, 1_000_000).unwrap();
        for s in &set.configurations {
            if check_never_alone(&g, s) {
                let paid = (0..g.miner_count()).fold(Rational::zero(), |acc, p| acc + payoff(&g, s, p));
                prop_assert_eq!(paid, g.rewards().total());
            }
        }
    }
}
