//! Dynamic reward design: moving learning miners from one stable
//! configuration to another by temporarily raising coin rewards.
//!
//! Miners are ranked by strictly decreasing power; rank `1` is the largest.
//! The run has one stage per rank. Stage `i` ends at the stage target `s_i`,
//! where ranks `1..=i` sit on their final coins and everyone smaller sits on
//! the final coin of rank `i`; `s_n` is the desired configuration.
//!
//! Stage 1 inflates the reward of rank 1's final coin until every miner wants
//! to be there. In a later stage `i`, each iteration picks a *mover* (the next
//! miner that must switch from rank `i - 1`'s final coin to rank `i`'s) and
//! an *anchor* (the rank just above it). All coins except the stage's target
//! coin are given the same RPU `R(s)`, and the target coin gets exactly enough
//! extra reward that the mover, but not the anchor, gains by joining it. Any
//! better-response learning then settles inside the stage's safe set with
//! the mover placed, and the binary progress vector of the stage strictly
//! increases.
//!
//! Every step of every learning phase is audited against the invariants that
//! make this work; a violation aborts the run with full context.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use num_traits::Zero;

use crate::dynamics::{converge_with, default_max_steps, Scheduler, SchedulerPolicy, Trace, TraceStatus};
use crate::game::{Configuration, Game, GameError, RewardFunction};
use crate::rational::{int, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Initial,
    Target,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DesignError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("{which:?} configuration {configuration} is not stable under the base rewards")]
    NotStable {
        which: Endpoint,
        configuration: Configuration,
    },
    #[error("miners {0} and {1} have equal power; reward design needs distinct powers")]
    PowerTie(usize, usize),
    #[error("stage {stage} is out of range 1..={miners}")]
    StageOutOfRange { stage: usize, miners: usize },
    #[error("configuration {configuration} is not in the safe set of stage {stage}")]
    OutsideStageSet {
        stage: usize,
        configuration: Configuration,
    },
    #[error("configuration already equals the target of stage {0}; there is no mover")]
    AtStageTarget(usize),
    #[error("stage {stage} iteration {iteration}: designed reward is below the base reward on coins {coins:?}")]
    Protocol {
        stage: usize,
        iteration: usize,
        coins: Vec<usize>,
    },
    #[error("invariant violation in stage {}", .0.stage)]
    Invariant(Box<InvariantReport>),
    #[error("final configuration {0} is not stable under the base rewards")]
    FinalUnstable(Configuration),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DesignOptions {
    /// Abort when a designed reward falls below the base reward of a coin.
    pub strict_protocol: bool,
    /// Step cap for each learning phase; defaults to `|C|^n` capped at 10^6.
    pub max_steps: Option<u64>,
}

/// A request to move the system from `initial` to `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignProblem {
    game: Game,
    initial: Configuration,
    target: Configuration,
    policy: SchedulerPolicy,
    options: DesignOptions,
    /// `ranked[k - 1]` is the miner index of rank `k`.
    ranked: Vec<usize>,
}

/// Rewards designed for one learning phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignedRewards {
    pub stage: usize,
    pub configuration: Configuration,
    pub rewards: RewardFunction,
    /// Rank of the miner the phase is meant to move (stages >= 2).
    pub mover: Option<usize>,
    /// Rank of the anchor, `mover - 1` (stages >= 2).
    pub anchor: Option<usize>,
    /// `R(s)`, the largest base RPU among occupied coins (stages >= 2).
    pub level: Option<Rational>,
    /// Coins whose designed reward is below their base reward.
    pub below_base: Vec<usize>,
}

impl DesignedRewards {
    /// `Σ_c max(0, H(c) - F(c))`.
    pub fn extra_cost(&self, base: &RewardFunction) -> Rational {
        self.rewards
            .as_slice()
            .iter()
            .zip(base.as_slice())
            .filter(|(h, f)| h > f)
            .fold(Rational::zero(), |acc, (h, f)| acc + h - f)
    }
}

/// Entry `j` is true iff rank `i + j` sits on rank `i`'s final coin.
/// Compared lexicographically with `false < true`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProgressVector(pub Vec<bool>);

impl ProgressVector {
    /// Rank of the vector among all binary vectors of its length, 1-based.
    pub fn rank(&self) -> u128 {
        self.0
            .iter()
            .fold(0u128, |acc, &bit| (acc << 1) | bit as u128)
            + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    /// The designed rewards did not leave exactly one better response, the
    /// mover joining the target coin.
    FirstStep {
        expected: (usize, usize),
        found: Vec<(usize, usize)>,
    },
    /// A miner larger than the mover left its coin.
    LargerMinerMoved { rank: usize },
    /// The mover is not on the target coin.
    MoverDisplaced,
    /// A miner smaller than the mover left the two stage coins.
    SmallerMinerEscaped { rank: usize },
    /// Mass of the source coin left `[M(s^0), M(s)]`.
    SourceMassOutOfBracket,
    /// Mass of the target coin left `[M(s), M(s^0)]`.
    TargetMassOutOfBracket,
    OutsideStageSet,
    /// An iteration ended where the progress vector did not strictly grow.
    ProgressNotIncreasing {
        before: ProgressVector,
        after: ProgressVector,
    },
    /// More iterations than progress vectors of the stage.
    IterationBound { bound: u128 },
    /// Learning under stage-1 rewards stopped short of the stage target.
    StageOneMissed,
    /// A learning phase hit its step cap.
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub stage: usize,
    pub iteration: usize,
    /// Step within the iteration's learning phase, if step-level.
    pub step: Option<usize>,
    pub configuration: Configuration,
    pub kind: ViolationKind,
}

/// Audit trail of one stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantReport {
    pub stage: usize,
    pub iterations: usize,
    /// Learning steps checked against the per-step invariants.
    pub checked_steps: usize,
    pub violations: Vec<Violation>,
}

impl InvariantReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseCost {
    pub stage: usize,
    pub iteration: usize,
    pub extra: Rational,
}

/// Extra reward paid per learning phase, above the base rewards.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CostLedger {
    pub phases: Vec<PhaseCost>,
    pub total: Rational,
}

impl CostLedger {
    pub fn new() -> Self {
        CostLedger {
            phases: Vec::new(),
            total: Rational::zero(),
        }
    }

    pub fn record(&mut self, stage: usize, iteration: usize, extra: Rational) {
        self.total += &extra;
        self.phases.push(PhaseCost {
            stage,
            iteration,
            extra,
        });
    }

    pub fn phase_count(&self) -> usize {
        self.phases.len()
    }
}

/// One learning phase inside a stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iteration {
    pub index: usize,
    pub start: Configuration,
    pub design: DesignedRewards,
    pub trace: Trace,
    pub progress_before: Option<ProgressVector>,
    pub progress_after: Option<ProgressVector>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageOutcome {
    pub stage: usize,
    pub entry: Configuration,
    pub exit: Configuration,
    pub iterations: Vec<Iteration>,
    pub report: InvariantReport,
    /// Extra reward paid during this stage.
    pub cost: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignOutcome {
    pub stages: Vec<StageOutcome>,
    pub final_configuration: Configuration,
    pub ledger: CostLedger,
}

impl DesignProblem {
    /// Validates the endpoints (both stable under the base rewards) and the
    /// power profile (pairwise distinct), and ranks miners by power.
    pub fn new(
        game: Game,
        initial: Configuration,
        target: Configuration,
        policy: SchedulerPolicy,
        options: DesignOptions,
    ) -> Result<Self, DesignError> {
        game.check_configuration(&initial)?;
        game.check_configuration(&target)?;
        let mut ranked: Vec<usize> = (0..game.miner_count()).collect();
        ranked.sort_by(|&a, &b| game.power(b).cmp(game.power(a)).then(a.cmp(&b)));
        if let Some(w) = ranked
            .windows(2)
            .find(|w| game.power(w[0]) == game.power(w[1]))
        {
            let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(DesignError::PowerTie(a, b));
        }
        for (which, s) in [(Endpoint::Initial, &initial), (Endpoint::Target, &target)] {
            if !game.is_stable(s) {
                return Err(DesignError::NotStable {
                    which,
                    configuration: s.clone(),
                });
            }
        }
        Ok(DesignProblem {
            game,
            initial,
            target,
            policy,
            options,
            ranked,
        })
    }

    pub fn game(&self) -> &Game {
        &self.game
    }

    pub fn initial(&self) -> &Configuration {
        &self.initial
    }

    pub fn target(&self) -> &Configuration {
        &self.target
    }

    pub fn policy(&self) -> SchedulerPolicy {
        self.policy
    }

    pub fn options(&self) -> DesignOptions {
        self.options
    }

    pub fn miner_count(&self) -> usize {
        self.ranked.len()
    }

    /// Miner index of rank `rank` (1-based).
    pub fn miner_at_rank(&self, rank: usize) -> usize {
        self.ranked[rank - 1]
    }

    /// Final coin of rank `rank`.
    pub fn final_coin(&self, rank: usize) -> usize {
        self.target.coin_of(self.miner_at_rank(rank))
    }

    fn coin_at_rank(&self, s: &Configuration, rank: usize) -> usize {
        s.coin_of(self.miner_at_rank(rank))
    }

    fn check_stage(&self, stage: usize) -> Result<(), DesignError> {
        if stage == 0 || stage > self.miner_count() {
            return Err(DesignError::StageOutOfRange {
                stage,
                miners: self.miner_count(),
            });
        }
        Ok(())
    }

    /// `s_i`: ranks `1..=i` on their final coins, all smaller ranks on the
    /// final coin of rank `i`.
    pub fn stage_target(&self, stage: usize) -> Result<Configuration, DesignError> {
        self.check_stage(stage)?;
        let mut assignment = alloc::vec![0; self.miner_count()];
        for rank in 1..=self.miner_count() {
            assignment[self.miner_at_rank(rank)] = self.final_coin(rank.min(stage));
        }
        Ok(Configuration::from_vec(assignment))
    }

    /// Membership in the safe set `T_i` (`i >= 2`): ranks below `i` on their
    /// final coins, the rest on the final coin of rank `i` or of rank `i - 1`.
    pub fn in_stage_set(&self, stage: usize, s: &Configuration) -> bool {
        if stage < 2 || stage > self.miner_count() || s.len() != self.miner_count() {
            return false;
        }
        let allowed = [self.final_coin(stage), self.final_coin(stage - 1)];
        (1..stage).all(|k| self.coin_at_rank(s, k) == self.final_coin(k))
            && (stage..=self.miner_count()).all(|k| allowed.contains(&self.coin_at_rank(s, k)))
    }

    /// Rank of the mover in `s`: the smallest `j` such that every rank below
    /// `j` already sits on the stage's target coin.
    pub fn mover(&self, stage: usize, s: &Configuration) -> Result<usize, DesignError> {
        self.check_stage(stage)?;
        if !self.in_stage_set(stage, s) {
            return Err(DesignError::OutsideStageSet {
                stage,
                configuration: s.clone(),
            });
        }
        let target = self.final_coin(stage);
        let mut rank = self.miner_count();
        while rank >= stage && self.coin_at_rank(s, rank) == target {
            rank -= 1;
        }
        if rank < stage {
            return Err(DesignError::AtStageTarget(stage));
        }
        Ok(rank)
    }

    /// Binary progress vector of `s` in stage `i`.
    pub fn progress_vector(&self, stage: usize, s: &Configuration) -> ProgressVector {
        let target = self.final_coin(stage);
        ProgressVector(
            (stage..=self.miner_count())
                .map(|k| self.coin_at_rank(s, k) == target)
                .collect(),
        )
    }

    /// `R(s)`: the largest base-reward RPU over occupied coins.
    pub fn level(&self, s: &Configuration) -> Rational {
        self.game
            .coin_powers(s)
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_zero())
            .map(|(c, m)| self.game.reward(c) / m)
            .max()
            .expect("at least one coin is occupied")
    }

    /// Reward function for a learning phase of `stage` starting at `s`.
    pub fn design_rewards(&self, stage: usize, s: &Configuration) -> Result<DesignedRewards, DesignError> {
        self.check_stage(stage)?;
        self.game.check_configuration(s)?;
        let base = self.game.rewards();
        let (rewards, mover, anchor, level) = if stage == 1 {
            // Large enough that the target coin beats any alternative for
            // every miner, whatever the power scale.
            let smallest = self.game.power(self.miner_at_rank(self.miner_count()));
            let boosted = base.max() * (self.game.total_power() / smallest) * int(2);
            let target = self.final_coin(1);
            let rewards: Vec<Rational> = (0..self.game.coin_count())
                .map(|c| if c == target { boosted.clone() } else { base.reward(c).clone() })
                .collect();
            (rewards, None, None, None)
        } else {
            let mover = self.mover(stage, s)?;
            let anchor = mover - 1;
            let level = self.level(s);
            let target = self.final_coin(stage);
            let anchor_power = self.game.power(self.miner_at_rank(anchor));
            let rewards: Vec<Rational> = self
                .game
                .coin_powers(s)
                .into_iter()
                .enumerate()
                .map(|(c, mass)| {
                    if c == target {
                        &level * (mass + anchor_power)
                    } else {
                        &level * mass
                    }
                })
                .collect();
            (rewards, Some(mover), Some(anchor), Some(level))
        };
        let below_base = (0..rewards.len())
            .filter(|&c| &rewards[c] < base.reward(c))
            .collect();
        Ok(DesignedRewards {
            stage,
            configuration: s.clone(),
            rewards: RewardFunction::new(rewards)?,
            mover,
            anchor,
            level,
            below_base,
        })
    }

    fn max_steps(&self) -> u64 {
        self.options
            .max_steps
            .unwrap_or_else(|| default_max_steps(&self.game))
    }

    /// Runs stage `stage` from `entry` until its target is reached, auditing
    /// every step. Costs are appended to `ledger`.
    pub fn run_stage(
        &self,
        stage: usize,
        entry: &Configuration,
        scheduler: &mut Scheduler,
        ledger: &mut CostLedger,
    ) -> Result<StageOutcome, DesignError> {
        let stage_target = self.stage_target(stage)?;
        if stage >= 2 && !self.in_stage_set(stage, entry) {
            return Err(DesignError::OutsideStageSet {
                stage,
                configuration: entry.clone(),
            });
        }
        let mut report = InvariantReport {
            stage,
            iterations: 0,
            checked_steps: 0,
            violations: Vec::new(),
        };
        let bound = 1u128 << (self.miner_count() - stage + 1).min(127);
        let cost_before = ledger.total.clone();
        let mut iterations = Vec::new();
        let mut s = entry.clone();

        while s != stage_target {
            let index = iterations.len() + 1;
            report.iterations = index;
            let fail = |report: &mut InvariantReport, step, configuration: &Configuration, kind| {
                report.violations.push(Violation {
                    stage,
                    iteration: index,
                    step,
                    configuration: configuration.clone(),
                    kind,
                });
                DesignError::Invariant(Box::new(report.clone()))
            };
            if stage >= 2 && index as u128 > bound {
                return Err(fail(&mut report, None, &s, ViolationKind::IterationBound { bound }));
            }

            let design = self.design_rewards(stage, &s)?;
            if self.options.strict_protocol && !design.below_base.is_empty() {
                return Err(DesignError::Protocol {
                    stage,
                    iteration: index,
                    coins: design.below_base.clone(),
                });
            }
            let phase_game = self.game.with_rewards(design.rewards.clone())?;

            let progress_before = (stage >= 2).then(|| self.progress_vector(stage, &s));
            let trace = if stage == 1 {
                converge_with(&phase_game, &s, scheduler, self.max_steps(), |_, _, _| {
                    ControlFlow::Continue(())
                })
            } else {
                let mover = design.mover.expect("stage >= 2 has a mover");
                let target_coin = self.final_coin(stage);
                let expected = (self.miner_at_rank(mover), target_coin);
                let found = phase_game.better_responses(&s);
                if found != [expected] {
                    return Err(fail(
                        &mut report,
                        None,
                        &s,
                        ViolationKind::FirstStep { expected, found },
                    ));
                }
                let audit = StepAudit::new(self, stage, &s, mover);
                let mut violation = None;
                let trace = converge_with(&phase_game, &s, scheduler, self.max_steps(), |_, record, after| {
                    report.checked_steps += 1;
                    match audit.check(after) {
                        Some(kind) => {
                            violation = Some((record.step, after.clone(), kind));
                            ControlFlow::Break(())
                        }
                        None => ControlFlow::Continue(()),
                    }
                });
                if let Some((step, configuration, kind)) = violation {
                    return Err(fail(&mut report, Some(step), &configuration, kind));
                }
                trace
            };
            if trace.status == TraceStatus::StepLimit {
                return Err(fail(&mut report, None, &trace.final_configuration, ViolationKind::StepLimit));
            }
            let end = trace.final_configuration.clone();
            ledger.record(stage, index, design.extra_cost(self.game.rewards()));

            let progress_after = (stage >= 2).then(|| self.progress_vector(stage, &end));
            if stage == 1 {
                if end != stage_target {
                    return Err(fail(&mut report, None, &end, ViolationKind::StageOneMissed));
                }
            } else {
                if !self.in_stage_set(stage, &end) {
                    return Err(fail(&mut report, None, &end, ViolationKind::OutsideStageSet));
                }
                let (before, after) = (progress_before.clone().unwrap(), progress_after.clone().unwrap());
                if after <= before {
                    return Err(fail(
                        &mut report,
                        None,
                        &end,
                        ViolationKind::ProgressNotIncreasing { before, after },
                    ));
                }
            }
            iterations.push(Iteration {
                index,
                start: s,
                design,
                trace,
                progress_before,
                progress_after,
            });
            s = end;
        }

        Ok(StageOutcome {
            stage,
            entry: entry.clone(),
            exit: s,
            iterations,
            report,
            cost: &ledger.total - cost_before,
        })
    }

    /// Runs every stage from the initial configuration and confirms the end
    /// state is the target and stable under the base rewards.
    pub fn run(&self) -> Result<DesignOutcome, DesignError> {
        let mut scheduler = Scheduler::new(self.policy);
        let mut ledger = CostLedger::new();
        let mut stages = Vec::with_capacity(self.miner_count());
        let mut s = self.initial.clone();
        for stage in 1..=self.miner_count() {
            let outcome = self.run_stage(stage, &s, &mut scheduler, &mut ledger)?;
            s = outcome.exit.clone();
            stages.push(outcome);
        }
        if s != self.target || !self.game.is_stable(&s) {
            return Err(DesignError::FinalUnstable(s));
        }
        Ok(DesignOutcome {
            stages,
            final_configuration: s,
            ledger,
        })
    }
}

/// Per-step invariants of a stage iteration starting at `start` with the
/// given mover.
struct StepAudit<'a> {
    problem: &'a DesignProblem,
    stage: usize,
    start: &'a Configuration,
    mover: usize,
    source: usize,
    target: usize,
    source_bracket: (Rational, Rational),
    target_bracket: (Rational, Rational),
}

impl<'a> StepAudit<'a> {
    fn new(problem: &'a DesignProblem, stage: usize, start: &'a Configuration, mover: usize) -> Self {
        let game = problem.game();
        let source = problem.final_coin(stage - 1);
        let target = problem.final_coin(stage);
        let after_move = start.with_move(problem.miner_at_rank(mover), target);
        StepAudit {
            problem,
            stage,
            start,
            mover,
            source,
            target,
            source_bracket: (game.coin_power(&after_move, source), game.coin_power(start, source)),
            target_bracket: (game.coin_power(start, target), game.coin_power(&after_move, target)),
        }
    }

    fn check(&self, s: &Configuration) -> Option<ViolationKind> {
        let p = self.problem;
        let at = |rank| p.coin_at_rank(s, rank);
        if let Some(rank) = (1..self.mover).find(|&k| at(k) != p.coin_at_rank(self.start, k)) {
            return Some(ViolationKind::LargerMinerMoved { rank });
        }
        if at(self.mover) != self.target {
            return Some(ViolationKind::MoverDisplaced);
        }
        if let Some(rank) = (self.mover + 1..=p.miner_count())
            .find(|&k| at(k) != self.source && at(k) != self.target)
        {
            return Some(ViolationKind::SmallerMinerEscaped { rank });
        }
        let within = |value: &Rational, (lo, hi): &(Rational, Rational)| lo <= value && value <= hi;
        if !within(&p.game.coin_power(s, self.source), &self.source_bracket) {
            return Some(ViolationKind::SourceMassOutOfBracket);
        }
        if !within(&p.game.coin_power(s, self.target), &self.target_bracket) {
            return Some(ViolationKind::TargetMassOutOfBracket);
        }
        if !p.in_stage_set(self.stage, s) {
            return Some(ViolationKind::OutsideStageSet);
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{enumerate_stable, DEFAULT_ENUMERATION_BUDGET};
    use crate::rational::ratio;
    use alloc::vec;

    /// Three miners (5 > 3 > 2) on two coins with rewards 7 and 6.
    fn small_game() -> Game {
        Game::from_values(&[int(5), int(3), int(2)], &[int(7), int(6)]).unwrap()
    }

    fn problem(game: Game, from: usize, to: usize, policy: SchedulerPolicy) -> DesignProblem {
        let stable = enumerate_stable(&game, DEFAULT_ENUMERATION_BUDGET).unwrap();
        DesignProblem::new(
            game,
            stable.configurations[from].clone(),
            stable.configurations[to].clone(),
            policy,
            DesignOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn small_game_has_several_equilibria() {
        let stable = enumerate_stable(&small_game(), 100).unwrap();
        assert!(stable.len() >= 2, "{:?}", stable.configurations);
    }

    #[test]
    fn rejects_ties_and_unstable_endpoints() {
        let tied = Game::from_values(&[int(2), int(2)], &[int(1), int(1)]).unwrap();
        let s = Configuration::from_vec(vec![0, 1]);
        assert_eq!(
            DesignProblem::new(tied, s.clone(), s, SchedulerPolicy::FirstIndex, DesignOptions::default()),
            Err(DesignError::PowerTie(0, 1))
        );
        let g = Game::from_values(&[int(2), int(1)], &[int(1), int(1)]).unwrap();
        let stacked = Configuration::from_vec(vec![0, 0]);
        let split = Configuration::from_vec(vec![0, 1]);
        assert!(matches!(
            DesignProblem::new(g, stacked, split, SchedulerPolicy::FirstIndex, DesignOptions::default()),
            Err(DesignError::NotStable { which: Endpoint::Initial, .. })
        ));
    }

    #[test]
    fn stage_targets() {
        let p = problem(small_game(), 0, 1, SchedulerPolicy::FirstIndex);
        assert_eq!(&p.stage_target(3).unwrap(), p.target());
        let first = p.stage_target(1).unwrap();
        let c = p.final_coin(1);
        assert!(first.as_slice().iter().all(|&x| x == c));
        assert!(p.stage_target(0).is_err());
        assert!(p.stage_target(4).is_err());
    }

    #[test]
    fn ranks_follow_power_not_declaration() {
        let g = Game::from_values(&[int(2), int(5), int(3)], &[int(7), int(6)]).unwrap();
        let stable = enumerate_stable(&g, 100).unwrap();
        let s = stable.configurations[0].clone();
        let p = DesignProblem::new(g, s.clone(), s, SchedulerPolicy::FirstIndex, DesignOptions::default()).unwrap();
        assert_eq!(
            (p.miner_at_rank(1), p.miner_at_rank(2), p.miner_at_rank(3)),
            (1, 2, 0)
        );
    }

    #[test]
    fn stage_set_and_mover() {
        let p = problem(small_game(), 0, 1, SchedulerPolicy::FirstIndex);
        for stage in 2..=3 {
            let prev = p.stage_target(stage - 1).unwrap();
            let cur = p.stage_target(stage).unwrap();
            assert!(p.in_stage_set(stage, &prev));
            assert!(p.in_stage_set(stage, &cur));
            if prev != cur {
                assert_eq!(p.mover(stage, &prev), Ok(3));
            }
            assert_eq!(p.mover(stage, &cur), Err(DesignError::AtStageTarget(stage)));
            // Moving the largest miner off its final coin leaves the set.
            let off = p.final_coin(1) ^ 1;
            let moved = prev.with_move(p.miner_at_rank(1), off);
            assert!(!p.in_stage_set(stage, &moved));
        }
        assert!(!p.in_stage_set(1, &p.stage_target(1).unwrap()));
    }

    #[test]
    fn stage_one_boost_attracts_everyone() {
        let g = Game::from_values(&[ratio(1, 2), ratio(1, 3)], &[int(4), int(9)]).unwrap();
        let stable = enumerate_stable(&g, 100).unwrap();
        let s0 = stable.configurations[0].clone();
        let p = DesignProblem::new(g, s0.clone(), s0.clone(), SchedulerPolicy::FirstIndex, DesignOptions::default()).unwrap();
        let d = p.design_rewards(1, &s0).unwrap();
        // maxF * (Σm / m_min) * 2 = 9 * (5/6 / 1/3) * 2 = 45
        assert_eq!(d.rewards.reward(p.final_coin(1)), &int(45));
        assert!(d.below_base.is_empty());
    }

    #[test]
    fn stage_rewards_equalize_other_coins() {
        let p = problem(small_game(), 0, 1, SchedulerPolicy::FirstIndex);
        for stage in 2..=3 {
            let s = p.stage_target(stage - 1).unwrap();
            if s == p.stage_target(stage).unwrap() {
                continue;
            }
            let d = p.design_rewards(stage, &s).unwrap();
            let h = p.game().with_rewards(d.rewards.clone()).unwrap();
            let level = d.level.clone().unwrap();
            for c in 0..h.coin_count() {
                if c != p.final_coin(stage) && !h.coin_power(&s, c).is_zero() {
                    assert_eq!(h.rpu(&s, c).finite(), Some(&level));
                }
            }
            let mover = p.miner_at_rank(d.mover.unwrap());
            assert_eq!(h.better_responses(&s), vec![(mover, p.final_coin(stage))]);
        }
    }

    #[test]
    fn stage_at_target_needs_no_iterations() {
        let p = problem(small_game(), 0, 1, SchedulerPolicy::FirstIndex);
        let mut ledger = CostLedger::new();
        let mut sched = Scheduler::new(SchedulerPolicy::FirstIndex);
        for stage in 1..=3 {
            let target = p.stage_target(stage).unwrap();
            let out = p.run_stage(stage, &target, &mut sched, &mut ledger).unwrap();
            assert!(out.iterations.is_empty());
            assert_eq!(out.exit, target);
        }
        assert_eq!(ledger.phase_count(), 0);
    }

    #[test]
    fn end_to_end_small_instance() {
        let stable = enumerate_stable(&small_game(), 100).unwrap();
        for (a, b) in [(0, 1), (1, 0)] {
            for policy in SchedulerPolicy::all(3) {
                let p = problem(small_game(), a, b, policy);
                let out = p.run().unwrap();
                assert_eq!(&out.final_configuration, &stable.configurations[b]);
                assert!(p.game().is_stable(&out.final_configuration));
                for stage in &out.stages[1..] {
                    assert!(stage.report.clean());
                    for it in &stage.iterations {
                        assert!(it.progress_after > it.progress_before);
                    }
                }
                let phases: Rational = out
                    .ledger
                    .phases
                    .iter()
                    .fold(Rational::zero(), |acc, ph| acc + &ph.extra);
                assert_eq!(phases, out.ledger.total);
            }
        }
    }

    #[test]
    fn strict_protocol_flags_zero_rewards() {
        // Stage 2 starts with everyone on one coin, so the empty coins are
        // priced from the anchor alone and fall below their base reward.
        let g = small_game();
        let stable = enumerate_stable(&g, 100).unwrap();
        let (s0, sf) = (stable.configurations[0].clone(), stable.configurations[1].clone());
        let lax = DesignProblem::new(g.clone(), s0.clone(), sf.clone(), SchedulerPolicy::FirstIndex, DesignOptions::default()).unwrap();
        let s1 = lax.stage_target(1).unwrap();
        if s1 != lax.stage_target(2).unwrap() {
            let d = lax.design_rewards(2, &s1).unwrap();
            assert!(!d.below_base.is_empty());
            for &c in &d.below_base {
                assert!(d.rewards.reward(c) < g.reward(c));
            }
            let strict = DesignProblem::new(
                g,
                s0,
                sf,
                SchedulerPolicy::FirstIndex,
                DesignOptions { strict_protocol: true, max_steps: None },
            )
            .unwrap();
            assert!(matches!(strict.run(), Err(DesignError::Protocol { stage: 2, .. })));
        }
    }

    #[test]
    fn progress_vector_rank() {
        assert_eq!(ProgressVector(vec![false, false]).rank(), 1);
        assert_eq!(ProgressVector(vec![true, false]).rank(), 3);
        assert_eq!(ProgressVector(vec![true, true, true]).rank(), 8);
        assert!(ProgressVector(vec![false, true]) < ProgressVector(vec![true, false]));
    }
}
