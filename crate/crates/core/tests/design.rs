mod common;

use minegame_core::equilibria::enumerate_stable;
use minegame_core::{DesignError, DesignOptions, DesignProblem, Rational, SchedulerPolicy};
use num_traits::Zero;
use proptest::prelude::*;

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// End to end: every scheduler reaches the target, every stage audit is
    /// clean, and the target is stable under the original rewards.
    #[test]
    fn design_reaches_any_target(
        g in strict_game(6, 3),
        picks in (any::<prop::sample::Index>(), any::<prop::sample::Index>()),
        seed in any::<u64>(),
    ) {
        let set = enumerate_stable(&g, 1_000_000).unwrap();
        let s0 = picks.0.get(&set.configurations).clone();
        let sf = picks.1.get(&set.configurations).clone();
        for policy in SchedulerPolicy::all(seed) {
            let problem = DesignProblem::new(g.clone(), s0.clone(), sf.clone(), policy, DesignOptions::default()).unwrap();
            let outcome = match problem.run() {
                Ok(outcome) => outcome,
                Err(DesignError::Invariant(report)) => {
                    return Err(TestCaseError::fail(format!("{:?}", report)));
                }
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            prop_assert_eq!(&outcome.final_configuration, &sf);
            prop_assert!(stable(&g, &sf));
            let n = g.miner_count();
            let mut total = Rational::zero();
            for (i, stage) in outcome.stages.iter().enumerate() {
                let stage_no = i + 1;
                prop_assert_eq!(stage.stage, stage_no);
                prop_assert!(stage.report.clean());
                prop_assert_eq!(&stage.exit, &problem.stage_target(stage_no).unwrap());
                if stage_no >= 2 {
                    prop_assert!((stage.iterations.len() as u128) <= 1u128 << (n - stage_no + 1));
                }
                for it in &stage.iterations {
                    prop_assert_eq!(&it.trace.initial, &it.start);
                    prop_assert!(it.trace.converged());
                    if stage_no >= 2 {
                        prop_assert!(it.progress_after > it.progress_before);
                        let first = &it.trace.steps[0];
                        prop_assert_eq!(first.miner, problem.miner_at_rank(it.design.mover.unwrap()));
                        prop_assert_eq!(first.to, problem.final_coin(stage_no));
                    }
                }
                total += &stage.cost;
            }
            prop_assert_eq!(total, outcome.ledger.total.clone());
            prop_assert!(outcome.ledger.total >= Rational::zero());
        }
    }

    /// Designed rewards leave every coin but the stage target at RPU `R(s)`
    /// and give the mover, and nobody else, a better response.
    #[test]
    fn designed_rewards_isolate_the_mover(
        g in strict_game(6, 3),
        picks in (any::<prop::sample::Index>(), any::<prop::sample::Index>()),
    ) {
        let set = enumerate_stable(&g, 1_000_000).unwrap();
        let s0 = picks.0.get(&set.configurations).clone();
        let sf = picks.1.get(&set.configurations).clone();
        let problem = DesignProblem::new(g.clone(), s0, sf, SchedulerPolicy::FirstIndex, DesignOptions::default()).unwrap();
        for stage in 2..=g.miner_count() {
            let entry = problem.stage_target(stage - 1).unwrap();
            if entry == problem.stage_target(stage).unwrap() {
                continue;
            }
            let design = problem.design_rewards(stage, &entry).unwrap();
            let h = g.with_rewards(design.rewards.clone()).unwrap();
            let level = design.level.clone().unwrap();
            let target = problem.final_coin(stage);
            for c in 0..g.coin_count() {
                let m = mass(&h, &entry, c);
                if c != target && !m.is_zero() {
                    prop_assert_eq!(h.reward(c) / m, level.clone());
                }
            }
            let mover = problem.miner_at_rank(design.mover.unwrap());
            prop_assert_eq!(deviations(&h, &entry), vec![(mover, target)]);
            for &c in &design.below_base {
                prop_assert!(h.reward(c) < g.reward(c));
            }
        }
    }
}
