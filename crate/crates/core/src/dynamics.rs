//! Better-response learning.
//!
//! A learning run repeatedly lets some unstable miner take an improving step.
//! Which step is taken is up to a [`Scheduler`]; convergence does not depend on
//! that choice because the sorted `(RPU, coin)` list is an ordinal potential:
//! it strictly increases, lexicographically, with every better-response step.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::ControlFlow;

use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::game::{rpu_of, Configuration, Game};
use crate::rational::{int, ExtendedRational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DynamicsError {
    #[error("potential lists have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("the symmetric potential needs equal rewards on every coin")]
    NotSymmetric,
    #[error("configurations {0} and {1} of the cycle are not one unilateral move apart")]
    NotAMove(usize, usize),
}

/// The coins' `(RPU, coin)` pairs in ascending lexicographic order.
///
/// Unoccupied coins carry an infinite RPU. Lists of the same game compare
/// lexicographically via `Ord`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PotentialList(Vec<(ExtendedRational, usize)>);

impl PotentialList {
    pub fn entries(&self) -> &[(ExtendedRational, usize)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `v_i(s)` with a 0-based position.
    pub fn coin_at(&self, position: usize) -> usize {
        self.0[position].1
    }

    /// Position of `coin` in the list.
    pub fn position_of(&self, coin: usize) -> Option<usize> {
        self.0.iter().position(|(_, c)| *c == coin)
    }
}

pub fn potential_list(game: &Game, s: &Configuration) -> PotentialList {
    let masses = game.coin_powers(s);
    list_from_masses(game, &masses)
}

fn list_from_masses(game: &Game, masses: &[Rational]) -> PotentialList {
    let mut pairs: Vec<(ExtendedRational, usize)> = masses
        .iter()
        .enumerate()
        .map(|(c, mass)| (rpu_of(game.reward(c), mass), c))
        .collect();
    pairs.sort();
    PotentialList(pairs)
}

/// Lexicographic comparison of two potential lists of equal length.
pub fn compare_potential(
    a: &PotentialList,
    b: &PotentialList,
) -> Result<Ordering, DynamicsError> {
    if a.len() != b.len() {
        return Err(DynamicsError::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.cmp(b))
}

/// How a scheduler picks among the available better-response steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchedulerPolicy {
    /// Lowest miner index, then lowest target coin.
    FirstIndex,
    /// Uniform over all `(miner, coin)` steps, from a seeded stream.
    Random { seed: u64 },
    /// Largest payoff gain; ties go to the lowest indices.
    BestImprovement,
    /// Smallest resulting potential list, i.e. the least lexicographic
    /// progress; ties go to the lowest indices.
    Adversarial,
}

impl SchedulerPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            SchedulerPolicy::FirstIndex => "first-index",
            SchedulerPolicy::Random { .. } => "random",
            SchedulerPolicy::BestImprovement => "best-improvement",
            SchedulerPolicy::Adversarial => "adversarial",
        }
    }

    /// The four policies, with `seed` for the random one.
    pub fn all(seed: u64) -> [SchedulerPolicy; 4] {
        [
            SchedulerPolicy::FirstIndex,
            SchedulerPolicy::Random { seed },
            SchedulerPolicy::BestImprovement,
            SchedulerPolicy::Adversarial,
        ]
    }
}

/// A policy plus whatever state it carries between selections.
#[derive(Debug, Clone)]
pub struct Scheduler {
    policy: SchedulerPolicy,
    rng: Option<ChaCha8Rng>,
}

impl Scheduler {
    pub fn new(policy: SchedulerPolicy) -> Self {
        let rng = match policy {
            SchedulerPolicy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Scheduler { policy, rng }
    }

    pub fn policy(&self) -> SchedulerPolicy {
        self.policy
    }

    /// Picks one of `steps`, which must be the better responses available in
    /// `s`, ordered by miner then coin.
    pub fn select(
        &mut self,
        game: &Game,
        s: &Configuration,
        steps: &[(usize, usize)],
    ) -> Option<(usize, usize)> {
        if steps.is_empty() {
            return None;
        }
        let chosen = match self.policy {
            SchedulerPolicy::FirstIndex => steps[0],
            SchedulerPolicy::Random { .. } => {
                let rng = self.rng.as_mut().expect("random scheduler has a stream");
                steps[rng.random_range(0..steps.len())]
            }
            SchedulerPolicy::BestImprovement => {
                let payoffs = game.payoffs(s);
                let mut best = steps[0];
                let mut best_gain = None;
                for &(p, c) in steps {
                    let gain = game.payoff_after_move(s, p, c) - &payoffs[p];
                    if best_gain.as_ref().map_or(true, |g| &gain > g) {
                        best = (p, c);
                        best_gain = Some(gain);
                    }
                }
                best
            }
            SchedulerPolicy::Adversarial => {
                let masses = game.coin_powers(s);
                let mut best = steps[0];
                let mut best_list: Option<PotentialList> = None;
                for &(p, c) in steps {
                    let mut after = masses.clone();
                    after[s.coin_of(p)] -= game.power(p);
                    after[c] += game.power(p);
                    let list = list_from_masses(game, &after);
                    if best_list.as_ref().map_or(true, |l| &list < l) {
                        best = (p, c);
                        best_list = Some(list);
                    }
                }
                best
            }
        };
        Some(chosen)
    }
}

/// One better-response step of a learning run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    /// 1-based position in the run.
    pub step: usize,
    pub miner: usize,
    pub from: usize,
    pub to: usize,
    pub payoff_before: Rational,
    pub payoff_after: Rational,
    pub potential_before: PotentialList,
    pub potential_after: PotentialList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    /// Ended in a stable configuration.
    Converged,
    /// Hit the step cap first.
    StepLimit,
    /// Stopped by an observer.
    Interrupted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub initial: Configuration,
    pub steps: Vec<StepRecord>,
    pub final_configuration: Configuration,
    pub status: TraceStatus,
}

impl Trace {
    pub fn converged(&self) -> bool {
        self.status == TraceStatus::Converged
    }

    /// Every configuration on the path, initial and final included.
    pub fn configurations(&self) -> Vec<Configuration> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut s = self.initial.clone();
        out.push(s.clone());
        for record in &self.steps {
            s.set(record.miner, record.to);
            out.push(s.clone());
        }
        out
    }
}

/// Takes one scheduler-selected better-response step, or `None` if `s` is
/// stable.
pub fn step(
    game: &Game,
    s: &Configuration,
    scheduler: &mut Scheduler,
) -> Option<(Configuration, StepRecord)> {
    let steps = game.better_responses(s);
    let (miner, to) = scheduler.select(game, s, &steps)?;
    let from = s.coin_of(miner);
    let next = s.with_move(miner, to);
    let record = StepRecord {
        step: 1,
        miner,
        from,
        to,
        payoff_before: game.payoff(s, miner),
        payoff_after: game.payoff(&next, miner),
        potential_before: potential_list(game, s),
        potential_after: potential_list(game, &next),
    };
    debug_assert!(record.payoff_after > record.payoff_before);
    Some((next, record))
}

/// `|C|^n` capped at one million.
pub fn default_max_steps(game: &Game) -> u64 {
    const CAP: u64 = 1_000_000;
    game.configuration_count()
        .map_or(CAP, |count| count.min(CAP as u128) as u64)
}

/// Runs better-response learning from `initial` until a stable configuration
/// or `max_steps` steps.
pub fn converge(
    game: &Game,
    initial: &Configuration,
    scheduler: &mut Scheduler,
    max_steps: u64,
) -> Trace {
    converge_with(game, initial, scheduler, max_steps, |_, _, _| {
        ControlFlow::Continue(())
    })
}

/// Like [`converge`], calling `observe(before, record, after)` after every
/// step. Returning `Break` stops the run with [`TraceStatus::Interrupted`].
pub fn converge_with<F>(
    game: &Game,
    initial: &Configuration,
    scheduler: &mut Scheduler,
    max_steps: u64,
    mut observe: F,
) -> Trace
where
    F: FnMut(&Configuration, &StepRecord, &Configuration) -> ControlFlow<()>,
{
    let mut s = initial.clone();
    let mut steps = Vec::new();
    let status = loop {
        if steps.len() as u64 >= max_steps {
            break if game.is_stable(&s) {
                TraceStatus::Converged
            } else {
                TraceStatus::StepLimit
            };
        }
        let Some((next, mut record)) = step(game, &s, scheduler) else {
            break TraceStatus::Converged;
        };
        record.step = steps.len() + 1;
        let flow = observe(&s, &record, &next);
        steps.push(record);
        s = next;
        if flow.is_break() {
            break TraceStatus::Interrupted;
        }
    };
    Trace {
        initial: initial.clone(),
        steps,
        final_configuration: s,
        status,
    }
}

/// `Σ_c 1 / M_c(s)` with `1 / 0 = +∞`.
///
/// Each empty coin contributes an infinite term, so the value is kept as the
/// number of empty coins plus the finite sum over occupied coins, compared in
/// that order. A better-response step never empties its source coin, so
/// moving onto an empty coin lowers the first component and any other step
/// lowers the second.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymmetricPotential {
    pub empty_coins: usize,
    pub occupied_sum: Rational,
}

impl fmt::Display for SymmetricPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.empty_coins {
            0 => write!(f, "{}", self.occupied_sum),
            k => write!(f, "{}*inf + {}", k, self.occupied_sum),
        }
    }
}

/// Only accepted when every coin has the same reward; it then strictly
/// decreases along better-response steps.
pub fn symmetric_potential(game: &Game, s: &Configuration) -> Result<SymmetricPotential, DynamicsError> {
    if !game.is_symmetric() {
        return Err(DynamicsError::NotSymmetric);
    }
    let masses = game.coin_powers(s);
    Ok(SymmetricPotential {
        empty_coins: masses.iter().filter(|m| m.is_zero()).count(),
        occupied_sum: masses
            .iter()
            .filter(|m| !m.is_zero())
            .fold(Rational::zero(), |acc, m| acc + m.recip()),
    })
}

/// Result of walking a closed cycle of unilateral moves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleReport {
    pub game: Game,
    /// The cycle, without repeating the first configuration at the end.
    pub configurations: Vec<Configuration>,
    /// Payoff vector at each configuration.
    pub payoffs: Vec<Vec<Rational>>,
    /// Miner moving out of configuration `i` into `i + 1` (cyclically).
    pub movers: Vec<usize>,
    /// Mover's payoff change for each move.
    pub deltas: Vec<Rational>,
    /// Sum of `deltas`; zero for every game with an exact potential.
    pub cycle_sum: Rational,
}

/// Walks `cycle` (closing it back to the start) and sums the movers' payoff
/// changes.
pub fn cycle_payoff_sum(game: &Game, cycle: &[Configuration]) -> Result<CycleReport, DynamicsError> {
    let len = cycle.len();
    let mut movers = Vec::with_capacity(len);
    let mut deltas = Vec::with_capacity(len);
    for i in 0..len {
        let j = (i + 1) % len;
        let (a, b) = (&cycle[i], &cycle[j]);
        let changed: Vec<usize> = (0..a.len()).filter(|&p| a.coin_of(p) != b.coin_of(p)).collect();
        let [mover] = changed[..] else {
            return Err(DynamicsError::NotAMove(i, j));
        };
        movers.push(mover);
        deltas.push(game.payoff(b, mover) - game.payoff(a, mover));
    }
    let cycle_sum = deltas.iter().fold(Rational::zero(), |acc, d| acc + d);
    Ok(CycleReport {
        game: game.clone(),
        configurations: cycle.to_vec(),
        payoffs: cycle.iter().map(|s| game.payoffs(s)).collect(),
        movers,
        deltas,
        cycle_sum,
    })
}

/// The two-miner, two-coin game (powers 2 and 1, unit rewards) together with
/// its four-configuration cycle `<c1,c1> -> <c1,c2> -> <c2,c2> -> <c2,c1>`.
/// The movers' payoff changes sum to `2/3`, so no exact potential exists.
pub fn exact_potential_counterexample() -> CycleReport {
    let game = Game::from_values(&[int(2), int(1)], &[Rational::one(), Rational::one()])
        .expect("fixed instance is valid");
    let cycle = vec![
        Configuration::from_vec(vec![0, 0]),
        Configuration::from_vec(vec![0, 1]),
        Configuration::from_vec(vec![1, 1]),
        Configuration::from_vec(vec![1, 0]),
    ];
    cycle_payoff_sum(&game, &cycle).expect("fixed cycle is made of unilateral moves")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn worked_example() -> Game {
        Game::from_values(&[int(2), int(1)], &[int(1), int(1)]).unwrap()
    }

    #[test]
    fn potential_list_of_stacked_configuration() {
        let g = worked_example();
        let s = Configuration::from_vec(vec![0, 0]);
        let list = potential_list(&g, &s);
        assert_eq!(
            list.entries(),
            &[
                (ExtendedRational::Finite(ratio(1, 3)), 0),
                (ExtendedRational::Infinite, 1)
            ]
        );
    }

    #[test]
    fn ties_break_by_coin_index() {
        let g = Game::from_values(&[int(1), int(1), int(1)], &[int(5), int(5), int(5)]).unwrap();
        let s = Configuration::from_vec(vec![2, 0, 1]);
        let list = potential_list(&g, &s);
        let coins: Vec<usize> = list.entries().iter().map(|e| e.1).collect();
        assert_eq!(coins, vec![0, 1, 2]);
        let empty = Configuration::from_vec(vec![1, 1, 1]);
        let coins: Vec<usize> = potential_list(&g, &empty).entries().iter().map(|e| e.1).collect();
        assert_eq!(coins, vec![1, 0, 2]);
    }

    #[test]
    fn compare_lists() {
        let g = worked_example();
        let a = potential_list(&g, &Configuration::from_vec(vec![0, 0]));
        let b = potential_list(&g, &Configuration::from_vec(vec![0, 1]));
        assert_eq!(compare_potential(&a, &a), Ok(Ordering::Equal));
        assert_eq!(compare_potential(&a, &b), Ok(Ordering::Less));
        let short = potential_list(
            &Game::from_values(&[int(1)], &[int(1)]).unwrap(),
            &Configuration::from_vec(vec![0]),
        );
        assert_eq!(compare_potential(&a, &short), Err(DynamicsError::LengthMismatch(2, 1)));
    }

    #[test]
    fn first_index_step_moves_lowest_improver() {
        let g = worked_example();
        let s = Configuration::from_vec(vec![0, 0]);
        let mut sched = Scheduler::new(SchedulerPolicy::FirstIndex);
        let (next, record) = step(&g, &s, &mut sched).unwrap();
        assert_eq!((record.miner, record.from, record.to), (0, 0, 1));
        assert_eq!(record.payoff_before, ratio(2, 3));
        assert_eq!(record.payoff_after, int(1));
        assert_eq!(next.as_slice(), &[1, 0]);
        assert!(step(&g, &next, &mut sched).is_none());
    }

    #[test]
    fn every_policy_converges_in_one_step_on_worked_example() {
        let g = worked_example();
        let s = Configuration::from_vec(vec![0, 0]);
        for policy in SchedulerPolicy::all(42) {
            let trace = converge(&g, &s, &mut Scheduler::new(policy), 10);
            assert!(trace.converged());
            assert_eq!(trace.steps.len(), 1);
            let end = trace.final_configuration.as_slice();
            assert!(end == [0, 1] || end == [1, 0]);
        }
    }

    #[test]
    fn stable_start_takes_no_steps() {
        let g = worked_example();
        let s = Configuration::from_vec(vec![0, 1]);
        let trace = converge(&g, &s, &mut Scheduler::new(SchedulerPolicy::Adversarial), 5);
        assert!(trace.converged());
        assert!(trace.steps.is_empty());
        assert_eq!(trace.final_configuration, s);
    }

    #[test]
    fn step_limit_is_reported() {
        let g = Game::from_values(&[int(3), int(2), int(1)], &[int(1), int(1)]).unwrap();
        let s = Configuration::uniform(3, 0);
        let trace = converge(&g, &s, &mut Scheduler::new(SchedulerPolicy::Adversarial), 1);
        if !g.is_stable(&trace.final_configuration) {
            assert_eq!(trace.status, TraceStatus::StepLimit);
        }
        assert_eq!(trace.steps.len(), 1);
    }

    #[test]
    fn observer_can_interrupt() {
        let g = Game::from_values(&[int(3), int(2), int(1)], &[int(1), int(1), int(1)]).unwrap();
        let s = Configuration::uniform(3, 0);
        let trace = converge_with(&g, &s, &mut Scheduler::new(SchedulerPolicy::FirstIndex), 100, |_, _, _| {
            ControlFlow::Break(())
        });
        assert_eq!(trace.status, TraceStatus::Interrupted);
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.configurations().len(), 2);
    }

    #[test]
    fn random_policy_replays() {
        let g = Game::from_values(
            &[int(11), int(7), int(5), int(3), int(2)],
            &[int(13), int(17), int(19)],
        )
        .unwrap();
        let s = Configuration::uniform(5, 0);
        let run = |seed| converge(&g, &s, &mut Scheduler::new(SchedulerPolicy::Random { seed }), 1000);
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn symmetric_potential_values() {
        let one_coin = Game::from_values(&[int(2), int(1)], &[int(1)]).unwrap();
        let value = symmetric_potential(&one_coin, &Configuration::from_vec(vec![0, 0])).unwrap();
        assert_eq!((value.empty_coins, value.occupied_sum), (0, ratio(1, 3)));

        let two_coins = Game::from_values(&[int(2), int(1)], &[int(1), int(1)]).unwrap();
        let stacked = symmetric_potential(&two_coins, &Configuration::from_vec(vec![0, 0])).unwrap();
        let split = symmetric_potential(&two_coins, &Configuration::from_vec(vec![0, 1])).unwrap();
        assert_eq!(stacked.to_string(), "1*inf + 1/3");
        assert_eq!(split.to_string(), "3/2");
        assert!(split < stacked);
        let asym = Game::from_values(&[int(1)], &[int(1), int(2)]).unwrap();
        assert_eq!(
            symmetric_potential(&asym, &Configuration::from_vec(vec![0])),
            Err(DynamicsError::NotSymmetric)
        );
    }

    #[test]
    fn counterexample_cycle() {
        let report = exact_potential_counterexample();
        assert_eq!(
            report.payoffs,
            vec![
                vec![ratio(2, 3), ratio(1, 3)],
                vec![int(1), int(1)],
                vec![ratio(2, 3), ratio(1, 3)],
                vec![int(1), int(1)],
            ]
        );
        assert_eq!(report.movers, vec![1, 0, 1, 0]);
        assert_eq!(
            report.deltas,
            vec![ratio(2, 3), ratio(-1, 3), ratio(2, 3), ratio(-1, 3)]
        );
        assert_eq!(report.cycle_sum, ratio(2, 3));
    }

    #[test]
    fn cycle_requires_unilateral_moves() {
        let g = worked_example();
        let cycle = [
            Configuration::from_vec(vec![0, 0]),
            Configuration::from_vec(vec![1, 1]),
        ];
        assert_eq!(cycle_payoff_sum(&g, &cycle), Err(DynamicsError::NotAMove(0, 1)));
    }
}
