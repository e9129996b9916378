//! Pure equilibria: greedy construction, exhaustive enumeration, the
//! "never alone" and genericity assumption checks, and the two-equilibria
//! construction used to show that some miner always prefers another
//! equilibrium.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::game::{improves, Configuration, Game};
use crate::rational::Rational;

/// Largest configuration space scanned by default.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 10_000_000;

/// Largest roster the exhaustive genericity check accepts.
pub const MAX_EXHAUSTIVE_GENERIC_MINERS: usize = 12;

/// Default number of subset pairs drawn by the sampled genericity check.
pub const DEFAULT_GENERIC_SAMPLES: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EquilibriumError {
    #[error("exhaustive scan needs {required} configurations but the budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("exhaustive genericity check supports at most {MAX_EXHAUSTIVE_GENERIC_MINERS} miners, game has {0}")]
    TooManyMiners(usize),
    #[error("configuration {0} is not stable")]
    NotStable(Configuration),
    #[error("assumption check failed")]
    AssumptionFailed(AssumptionReport),
    #[error("the game has a single stable configuration")]
    NotApplicable,
    #[error("no other stable configuration gives any miner a higher payoff than {0}")]
    NoBetterEquilibrium(Configuration),
    #[error("construction needs at least two miners and two coins")]
    TooSmall,
    #[error("placing miner {added} made previously stable miner {miner} unstable")]
    ExtensionAudit { added: usize, miner: usize },
    #[error("constructed configuration {0} is not stable")]
    ConstructionUnstable(Configuration),
}

/// All stable configurations of a game, in enumeration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StableSet {
    pub game: Game,
    pub configurations: Vec<Configuration>,
}

impl StableSet {
    pub fn len(&self) -> usize {
        self.configurations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configurations.is_empty()
    }

    pub fn contains(&self, s: &Configuration) -> bool {
        self.configurations.binary_search(s).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenericMode {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

impl Default for GenericMode {
    fn default() -> Self {
        GenericMode::Sampled {
            samples: DEFAULT_GENERIC_SAMPLES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMethod {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<W> {
    Holds,
    Fails(W),
}

impl<W> Verdict<W> {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

/// A configuration with a coin mined by at most one miner that nobody wants
/// to join.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LonelyCoin {
    pub configuration: Configuration,
    pub coin: usize,
}

/// `F(coin_a) / Σ miners_a = F(coin_b) / Σ miners_b` with `coin_a != coin_b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioCollision {
    pub coin_a: usize,
    pub miners_a: Vec<usize>,
    pub coin_b: usize,
    pub miners_b: Vec<usize>,
}

/// Outcome of the assumption checks; each field is `None` when that check
/// was not run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssumptionReport {
    pub never_alone: Option<Verdict<LonelyCoin>>,
    pub generic: Option<Verdict<RatioCollision>>,
    pub method: CheckMethod,
}

impl AssumptionReport {
    /// True when every check that ran holds.
    pub fn holds(&self) -> bool {
        self.never_alone.as_ref().map_or(true, Verdict::holds)
            && self.generic.as_ref().map_or(true, Verdict::holds)
    }
}

fn miners_by_power(game: &Game) -> Vec<usize> {
    let mut order: Vec<usize> = (0..game.miner_count()).collect();
    order.sort_by_key(|&p| Reverse(game.power(p).clone()));
    order
}

/// Coin maximizing `F(c) / (M_c + power)`; lowest index wins ties.
fn best_coin(game: &Game, masses: &[Rational], power: &Rational) -> usize {
    let mut best = 0;
    let mut best_mass = &masses[0] + power;
    for c in 1..game.coin_count() {
        let mass = &masses[c] + power;
        if improves(game.reward(best), &best_mass, game.reward(c), &mass) {
            best = c;
            best_mass = mass;
        }
    }
    best
}

/// Greedy equilibrium: miners in non-increasing power order (declaration
/// order among equals), each placed on the coin that pays it most given the
/// miners already placed.
pub fn construct_equilibrium(game: &Game) -> Configuration {
    let mut masses = vec![Rational::zero(); game.coin_count()];
    let mut assignment = vec![0; game.miner_count()];
    for p in miners_by_power(game) {
        let c = best_coin(game, &masses, game.power(p));
        masses[c] += game.power(p);
        assignment[p] = c;
    }
    Configuration::from_vec(assignment)
}

fn check_budget(game: &Game, budget: u128) -> Result<(), EquilibriumError> {
    let required = game.configuration_count().unwrap_or(u128::MAX);
    if required > budget {
        return Err(EquilibriumError::BudgetExceeded { required, budget });
    }
    Ok(())
}

/// Every stable configuration, by exhaustive scan of `C^n`.
pub fn enumerate_stable(game: &Game, budget: u128) -> Result<StableSet, EquilibriumError> {
    check_budget(game, budget)?;
    let configurations = game.configurations().filter(|s| game.is_stable(s)).collect();
    Ok(StableSet {
        game: game.clone(),
        configurations,
    })
}

/// First coin of `s` mined by at most one miner that no other miner can
/// profitably join.
pub fn lonely_coin(game: &Game, s: &Configuration) -> Option<usize> {
    let masses = game.coin_powers(s);
    let mut counts = vec![0usize; game.coin_count()];
    for &c in s.as_slice() {
        counts[c] += 1;
    }
    (0..game.coin_count()).find(|&c| {
        counts[c] <= 1
            && !(0..game.miner_count()).any(|p| {
                let from = s.coin_of(p);
                from != c
                    && improves(
                        game.reward(from),
                        &masses[from],
                        game.reward(c),
                        &(&masses[c] + game.power(p)),
                    )
            })
    })
}

/// "Never alone" at a single configuration: every coin with at most one
/// miner attracts some better response.
pub fn check_never_alone(game: &Game, s: &Configuration) -> bool {
    lonely_coin(game, s).is_none()
}

/// "Never alone" over every configuration of the game.
pub fn check_never_alone_all(game: &Game, budget: u128) -> Result<AssumptionReport, EquilibriumError> {
    check_budget(game, budget)?;
    let witness = game.configurations().find_map(|s| {
        lonely_coin(game, &s).map(|coin| LonelyCoin {
            configuration: s,
            coin,
        })
    });
    Ok(AssumptionReport {
        never_alone: Some(witness.map_or(Verdict::Holds, Verdict::Fails)),
        generic: None,
        method: CheckMethod::Exhaustive,
    })
}

fn mask_members(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&p| mask >> p & 1 == 1).collect()
}

/// Genericity: no two distinct coins share a reward-to-power ratio over any
/// pair of non-empty miner subsets.
pub fn check_generic(game: &Game, mode: GenericMode) -> Result<AssumptionReport, EquilibriumError> {
    let (verdict, method) = match mode {
        GenericMode::Exhaustive => (generic_exhaustive(game)?, CheckMethod::Exhaustive),
        GenericMode::Sampled { samples, seed } => (
            generic_sampled(game, samples, seed),
            CheckMethod::Sampled { samples, seed },
        ),
    };
    Ok(AssumptionReport {
        never_alone: None,
        generic: Some(verdict),
        method,
    })
}

fn generic_exhaustive(game: &Game) -> Result<Verdict<RatioCollision>, EquilibriumError> {
    let n = game.miner_count();
    if n > MAX_EXHAUSTIVE_GENERIC_MINERS {
        return Err(EquilibriumError::TooManyMiners(n));
    }
    let subsets = 1u64 << n;
    let mut sums = vec![Rational::zero(); subsets as usize];
    for mask in 1..subsets {
        let low = mask.trailing_zeros() as usize;
        sums[mask as usize] = &sums[(mask & (mask - 1)) as usize] + game.power(low);
    }
    // First (coin, subset) seen for each ratio.
    let mut seen: BTreeMap<Rational, (usize, u64)> = BTreeMap::new();
    for mask in 1..subsets {
        for c in 0..game.coin_count() {
            let ratio = game.reward(c) / &sums[mask as usize];
            match seen.get(&ratio) {
                Some(&(other, other_mask)) if other != c => {
                    return Ok(Verdict::Fails(RatioCollision {
                        coin_a: other,
                        miners_a: mask_members(other_mask, n),
                        coin_b: c,
                        miners_b: mask_members(mask, n),
                    }));
                }
                Some(_) => {}
                None => {
                    seen.insert(ratio, (c, mask));
                }
            }
        }
    }
    Ok(Verdict::Holds)
}

/// Rescales `values` by the lcm of their denominators. Scaling all powers
/// (or all rewards) by one factor leaves every cross-coin ratio comparison
/// unchanged.
fn integral(values: impl Iterator<Item = Rational> + Clone) -> Vec<BigInt> {
    let lcm = values.clone().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    values.map(|v| (v * &lcm).to_integer()).collect()
}

/// Largest roster for which sampled genericity tabulates all subset sums.
const SUBSET_TABLE_MINERS: usize = 16;

fn generic_sampled(game: &Game, samples: u64, seed: u64) -> Verdict<RatioCollision> {
    let k = game.coin_count();
    if k < 2 {
        return Verdict::Holds;
    }
    let n = game.miner_count();
    let powers = integral(game.miners().iter().map(|m| m.power.clone()));
    let rewards = integral(game.rewards().as_slice().iter().cloned());
    let table: Option<Vec<BigInt>> = (n <= SUBSET_TABLE_MINERS).then(|| {
        let mut sums = vec![BigInt::zero(); 1 << n];
        for mask in 1..sums.len() {
            let low = mask.trailing_zeros() as usize;
            sums[mask] = &sums[mask & (mask - 1)] + &powers[low];
        }
        sums
    });
    let sum = |members: &[usize]| -> BigInt {
        match &table {
            Some(t) => t[members.iter().fold(0usize, |m, &p| m | 1 << p)].clone(),
            None => members.iter().fold(BigInt::zero(), |acc, &p| acc + &powers[p]),
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let coin_a = rng.random_range(0..k);
        let mut coin_b = rng.random_range(0..k - 1);
        if coin_b >= coin_a {
            coin_b += 1;
        }
        let miners_a = random_subset(&mut rng, n);
        let miners_b = random_subset(&mut rng, n);
        if &rewards[coin_a] * sum(&miners_b) == &rewards[coin_b] * sum(&miners_a) {
            return Verdict::Fails(RatioCollision {
                coin_a,
                miners_a,
                coin_b,
                miners_b,
            });
        }
    }
    Verdict::Holds
}

/// Uniform non-empty subset of `0..n`.
fn random_subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    if n < 64 {
        let mask: u64 = rng.random_range(1..=u64::MAX >> (64 - n));
        return mask_members(mask, n);
    }
    loop {
        let members: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if !members.is_empty() {
            return members;
        }
    }
}

/// A miner and a stable configuration it strictly prefers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BetterEquilibrium {
    pub miner: usize,
    pub configuration: Configuration,
    pub payoff_before: Rational,
    pub payoff_after: Rational,
}

/// Stable set and payoff vectors of a game that passed the genericity check,
/// shared by repeated [`BetterSearch::find`] calls.
#[derive(Debug, Clone)]
pub struct BetterSearch<'a> {
    game: &'a Game,
    stable: StableSet,
    payoffs: Vec<Vec<Rational>>,
}

impl<'a> BetterSearch<'a> {
    /// Checks genericity, then enumerates the stable configurations.
    pub fn prepare(game: &'a Game, mode: GenericMode, budget: u128) -> Result<Self, EquilibriumError> {
        let report = check_generic(game, mode)?;
        if !report.holds() {
            return Err(EquilibriumError::AssumptionFailed(report));
        }
        let stable = enumerate_stable(game, budget)?;
        let payoffs = stable.configurations.iter().map(|s| game.payoffs(s)).collect();
        Ok(BetterSearch { game, stable, payoffs })
    }

    pub fn stable(&self) -> &StableSet {
        &self.stable
    }

    /// For a stable `s`, finds a miner and another stable configuration in
    /// which that miner earns strictly more. Candidates are scanned in
    /// enumeration order, miners by index.
    pub fn find(&self, s: &Configuration) -> Result<BetterEquilibrium, EquilibriumError> {
        if !self.game.is_stable(s) {
            return Err(EquilibriumError::NotStable(s.clone()));
        }
        if self.stable.len() < 2 {
            return Err(EquilibriumError::NotApplicable);
        }
        let before = self.game.payoffs(s);
        let candidates = self.stable.configurations.iter().zip(&self.payoffs);
        for (other, after) in candidates.filter(|(o, _)| *o != s) {
            if let Some(miner) = (0..self.game.miner_count()).find(|&p| after[p] > before[p]) {
                return Ok(BetterEquilibrium {
                    miner,
                    configuration: other.clone(),
                    payoff_before: before[miner].clone(),
                    payoff_after: after[miner].clone(),
                });
            }
        }
        Err(EquilibriumError::NoBetterEquilibrium(s.clone()))
    }
}

/// One-shot [`BetterSearch`]: stability of `s` is checked first, then
/// genericity, then the stable set is enumerated.
pub fn find_better_equilibrium(
    game: &Game,
    s: &Configuration,
    mode: GenericMode,
    budget: u128,
) -> Result<BetterEquilibrium, EquilibriumError> {
    if !game.is_stable(s) {
        return Err(EquilibriumError::NotStable(s.clone()));
    }
    BetterSearch::prepare(game, mode, budget)?.find(s)
}

/// Miners placed so far on top of a partial assignment.
struct Placement<'a> {
    game: &'a Game,
    masses: Vec<Rational>,
    coin: Vec<Option<usize>>,
}

impl<'a> Placement<'a> {
    fn new(game: &'a Game) -> Self {
        Placement {
            game,
            masses: vec![Rational::zero(); game.coin_count()],
            coin: vec![None; game.miner_count()],
        }
    }

    fn place(&mut self, miner: usize, coin: usize) {
        self.masses[coin] += self.game.power(miner);
        self.coin[miner] = Some(coin);
    }

    fn placed(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.coin.len()).filter(|&p| self.coin[p].is_some())
    }

    /// Stability of a placed miner within the system of placed miners.
    fn stable(&self, miner: usize) -> bool {
        let from = self.coin[miner].expect("miner is placed");
        let power = self.game.power(miner);
        (0..self.game.coin_count()).all(|c| {
            c == from
                || !improves(
                    self.game.reward(from),
                    &self.masses[from],
                    self.game.reward(c),
                    &(&self.masses[c] + power),
                )
        })
    }

    /// Places `miner` on its best coin and checks that every miner that was
    /// stable before still is, and that `miner` itself is.
    fn extend_audited(&mut self, miner: usize) -> Result<(), EquilibriumError> {
        let stable_before: Vec<usize> = self.placed().filter(|&p| self.stable(p)).collect();
        let c = best_coin(self.game, &self.masses, self.game.power(miner));
        self.place(miner, c);
        for p in stable_before.into_iter().chain(core::iter::once(miner)) {
            if !self.stable(p) {
                return Err(EquilibriumError::ExtensionAudit { added: miner, miner: p });
            }
        }
        Ok(())
    }

    fn into_configuration(self) -> Configuration {
        Configuration::from_vec(self.coin.into_iter().map(|c| c.expect("all placed")).collect())
    }
}

/// Two distinct stable configurations, built from the two largest miners
/// split across the two richest coins in both orders and then extended one
/// miner at a time (largest first) onto each miner's best coin.
///
/// Requires "never alone" (checked over every configuration) and genericity.
pub fn two_equilibria(
    game: &Game,
    mode: GenericMode,
    budget: u128,
) -> Result<(Configuration, Configuration), EquilibriumError> {
    if game.miner_count() < 2 || game.coin_count() < 2 {
        return Err(EquilibriumError::TooSmall);
    }
    let mut report = check_never_alone_all(game, budget)?;
    report.generic = check_generic(game, mode)?.generic;
    if let GenericMode::Sampled { samples, seed } = mode {
        report.method = CheckMethod::Sampled { samples, seed };
    }
    if !report.holds() {
        return Err(EquilibriumError::AssumptionFailed(report));
    }

    let miners = miners_by_power(game);
    let mut coins: Vec<usize> = (0..game.coin_count()).collect();
    coins.sort_by_key(|&c| Reverse(game.reward(c).clone()));
    let (big, second) = (miners[0], miners[1]);
    let (rich, runner_up) = (coins[0], coins[1]);

    let mut result = Vec::with_capacity(2);
    for (big_coin, second_coin) in [(rich, runner_up), (runner_up, rich)] {
        let mut placement = Placement::new(game);
        placement.place(big, big_coin);
        placement.place(second, second_coin);
        for &p in &miners[2..] {
            placement.extend_audited(p)?;
        }
        let s = placement.into_configuration();
        if !game.is_stable(&s) {
            return Err(EquilibriumError::ConstructionUnstable(s));
        }
        result.push(s);
    }
    let second_eq = result.pop().expect("two configurations");
    let first_eq = result.pop().expect("two configurations");
    Ok((first_eq, second_eq))
}
