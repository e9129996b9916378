//! Systems, games, configurations and the payoff/stability predicates.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Zero;

use crate::rational::{is_positive, ExtendedRational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("a game needs at least one miner")]
    NoMiners,
    #[error("a game needs at least one coin")]
    NoCoins,
    #[error("duplicate miner id `{0}`")]
    DuplicateMiner(String),
    #[error("duplicate coin id `{0}`")]
    DuplicateCoin(String),
    #[error("miner `{0}` must have strictly positive power")]
    NonPositivePower(String),
    #[error("coin `{0}` must have strictly positive reward")]
    NonPositiveReward(String),
    #[error("reward for coin index {0} is negative")]
    NegativeReward(usize),
    #[error("reward function covers {got} coins, game has {expected}")]
    RewardArity { expected: usize, got: usize },
    #[error("configuration assigns {got} miners, game has {expected}")]
    ConfigurationLength { expected: usize, got: usize },
    #[error("miner index {miner} assigned to unknown coin index {coin}")]
    UnknownCoin { miner: usize, coin: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Miner {
    pub id: String,
    pub index: usize,
    pub power: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coin {
    pub id: String,
    pub index: usize,
}

/// Reward per coin, indexed by coin index.
///
/// Base games require strictly positive rewards. Designed reward functions may
/// carry zeros for unoccupied coins, so the type itself only rejects negatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewardFunction(Vec<Rational>);

impl RewardFunction {
    pub fn new(rewards: Vec<Rational>) -> Result<Self, GameError> {
        if let Some(coin) = rewards.iter().position(|r| r < &Rational::zero()) {
            return Err(GameError::NegativeReward(coin));
        }
        Ok(RewardFunction(rewards))
    }

    pub fn reward(&self, coin: usize) -> &Rational {
        &self.0[coin]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    pub fn max(&self) -> Rational {
        self.0.iter().max().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total(&self) -> Rational {
        self.0.iter().fold(Rational::zero(), |acc, r| acc + r)
    }
}

/// Total mapping miner index -> coin index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration(Vec<usize>);

impl Configuration {
    /// Wraps an assignment without checking it against a game; use
    /// [`Game::configuration`] for validated construction.
    pub fn from_vec(assignment: Vec<usize>) -> Self {
        Configuration(assignment)
    }

    /// Every one of `miners` on `coin`.
    pub fn uniform(miners: usize, coin: usize) -> Self {
        Configuration(vec![coin; miners])
    }

    pub fn coin_of(&self, miner: usize) -> usize {
        self.0[miner]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// `(s_{-p}, c)`: a copy with `miner` moved to `coin`.
    pub fn with_move(&self, miner: usize, coin: usize) -> Configuration {
        let mut next = self.0.clone();
        next[miner] = coin;
        Configuration(next)
    }

    pub(crate) fn set(&mut self, miner: usize, coin: usize) {
        self.0[miner] = coin;
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (i, coin) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", coin)?;
        }
        f.write_str(">")
    }
}

/// `G_{Π,C,F}`: miners with powers, coins, and a reward function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    miners: Vec<Miner>,
    coins: Vec<Coin>,
    rewards: RewardFunction,
}

impl Game {
    /// Builds a base game from `(id, power)` and `(id, reward)` lists, in
    /// declaration order. Powers and rewards must be strictly positive.
    pub fn new<M, C>(miners: M, coins: C) -> Result<Self, GameError>
    where
        M: IntoIterator<Item = (String, Rational)>,
        C: IntoIterator<Item = (String, Rational)>,
    {
        let miners: Vec<Miner> = miners
            .into_iter()
            .enumerate()
            .map(|(index, (id, power))| Miner { id, index, power })
            .collect();
        let (coins, rewards): (Vec<Coin>, Vec<Rational>) = coins
            .into_iter()
            .enumerate()
            .map(|(index, (id, reward))| (Coin { id, index }, reward))
            .unzip();
        if miners.is_empty() {
            return Err(GameError::NoMiners);
        }
        if coins.is_empty() {
            return Err(GameError::NoCoins);
        }
        for (i, miner) in miners.iter().enumerate() {
            if miners[..i].iter().any(|other| other.id == miner.id) {
                return Err(GameError::DuplicateMiner(miner.id.clone()));
            }
            if !is_positive(&miner.power) {
                return Err(GameError::NonPositivePower(miner.id.clone()));
            }
        }
        for (i, coin) in coins.iter().enumerate() {
            if coins[..i].iter().any(|other| other.id == coin.id) {
                return Err(GameError::DuplicateCoin(coin.id.clone()));
            }
            if !is_positive(&rewards[i]) {
                return Err(GameError::NonPositiveReward(coin.id.clone()));
            }
        }
        Ok(Game {
            miners,
            coins,
            rewards: RewardFunction(rewards),
        })
    }

    /// Convenience constructor with generated ids `p1..pn`, `c1..ck`.
    pub fn from_values(powers: &[Rational], rewards: &[Rational]) -> Result<Self, GameError> {
        Game::new(
            powers
                .iter()
                .enumerate()
                .map(|(i, m)| (alloc::format!("p{}", i + 1), m.clone())),
            rewards
                .iter()
                .enumerate()
                .map(|(i, r)| (alloc::format!("c{}", i + 1), r.clone())),
        )
    }

    /// Same system, different reward function. Zero rewards are allowed here.
    pub fn with_rewards(&self, rewards: RewardFunction) -> Result<Game, GameError> {
        if rewards.len() != self.coins.len() {
            return Err(GameError::RewardArity {
                expected: self.coins.len(),
                got: rewards.len(),
            });
        }
        Ok(Game {
            miners: self.miners.clone(),
            coins: self.coins.clone(),
            rewards,
        })
    }

    pub fn miners(&self) -> &[Miner] {
        &self.miners
    }

    pub fn coins(&self) -> &[Coin] {
        &self.coins
    }

    pub fn rewards(&self) -> &RewardFunction {
        &self.rewards
    }

    pub fn miner_count(&self) -> usize {
        self.miners.len()
    }

    pub fn coin_count(&self) -> usize {
        self.coins.len()
    }

    pub fn power(&self, miner: usize) -> &Rational {
        &self.miners[miner].power
    }

    pub fn reward(&self, coin: usize) -> &Rational {
        self.rewards.reward(coin)
    }

    pub fn total_power(&self) -> Rational {
        self.miners
            .iter()
            .fold(Rational::zero(), |acc, m| acc + &m.power)
    }

    /// All rewards equal.
    pub fn is_symmetric(&self) -> bool {
        let first = self.rewards.reward(0);
        self.rewards.as_slice().iter().all(|r| r == first)
    }

    pub fn miner_index(&self, id: &str) -> Option<usize> {
        self.miners.iter().position(|m| m.id == id)
    }

    pub fn coin_index(&self, id: &str) -> Option<usize> {
        self.coins.iter().position(|c| c.id == id)
    }

    /// Validated configuration constructor.
    pub fn configuration(&self, assignment: Vec<usize>) -> Result<Configuration, GameError> {
        let s = Configuration(assignment);
        self.check_configuration(&s)?;
        Ok(s)
    }

    pub fn check_configuration(&self, s: &Configuration) -> Result<(), GameError> {
        if s.len() != self.miners.len() {
            return Err(GameError::ConfigurationLength {
                expected: self.miners.len(),
                got: s.len(),
            });
        }
        if let Some((miner, &coin)) = s.0.iter().enumerate().find(|(_, &c)| c >= self.coins.len()) {
            return Err(GameError::UnknownCoin { miner, coin });
        }
        Ok(())
    }

    /// Renders a configuration with coin ids, e.g. `<c1,c2>`.
    pub fn display_configuration(&self, s: &Configuration) -> String {
        let mut out = String::from("<");
        for (i, &coin) in s.as_slice().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&self.coins[coin].id);
        }
        out.push('>');
        out
    }

    /// `M_c(s)` for every coin at once.
    pub fn coin_powers(&self, s: &Configuration) -> Vec<Rational> {
        let mut masses = vec![Rational::zero(); self.coins.len()];
        for (miner, &coin) in s.as_slice().iter().enumerate() {
            masses[coin] += &self.miners[miner].power;
        }
        masses
    }

    /// `M_c(s)`.
    pub fn coin_power(&self, s: &Configuration, coin: usize) -> Rational {
        s.as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == coin)
            .fold(Rational::zero(), |acc, (p, _)| acc + &self.miners[p].power)
    }

    /// `P_c(s)`, ascending miner index.
    pub fn miner_set(&self, s: &Configuration, coin: usize) -> Vec<usize> {
        s.as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == coin)
            .map(|(p, _)| p)
            .collect()
    }

    /// `RPU_c(s) = F(c) / M_c(s)`, or `+inf` when nobody mines `c`.
    pub fn rpu(&self, s: &Configuration, coin: usize) -> ExtendedRational {
        rpu_of(self.reward(coin), &self.coin_power(s, coin))
    }

    /// `u_p(s) = m_p * RPU_{s.p}(s)`.
    pub fn payoff(&self, s: &Configuration, miner: usize) -> Rational {
        let coin = s.coin_of(miner);
        let mass = self.coin_power(s, coin);
        self.power(miner) * self.reward(coin) / mass
    }

    /// Payoff of every miner.
    pub fn payoffs(&self, s: &Configuration) -> Vec<Rational> {
        let masses = self.coin_powers(s);
        (0..self.miners.len())
            .map(|p| {
                let coin = s.coin_of(p);
                self.power(p) * self.reward(coin) / &masses[coin]
            })
            .collect()
    }

    /// Payoff `miner` would get after moving to `coin` (its current payoff if
    /// `coin` is where it already is).
    pub fn payoff_after_move(&self, s: &Configuration, miner: usize, coin: usize) -> Rational {
        if s.coin_of(miner) == coin {
            return self.payoff(s, miner);
        }
        let mass = self.coin_power(s, coin) + self.power(miner);
        self.power(miner) * self.reward(coin) / mass
    }

    /// `u_p(s) < u_p((s_{-p}, c))`, exactly.
    pub fn is_better_response(&self, s: &Configuration, miner: usize, coin: usize) -> bool {
        let from = s.coin_of(miner);
        if from == coin {
            return false;
        }
        let power = self.power(miner);
        let current = self.coin_power(s, from);
        let target = self.coin_power(s, coin) + power;
        improves(self.reward(from), &current, self.reward(coin), &target)
    }

    /// Coins `miner` could improve by moving to, ascending.
    pub fn better_response_targets(&self, s: &Configuration, miner: usize) -> Vec<usize> {
        let masses = self.coin_powers(s);
        self.targets_with(&masses, s, miner)
    }

    /// Every better-response step `(miner, coin)` in `s`, ordered by miner
    /// then coin.
    pub fn better_responses(&self, s: &Configuration) -> Vec<(usize, usize)> {
        let masses = self.coin_powers(s);
        (0..self.miners.len())
            .flat_map(|p| {
                self.targets_with(&masses, s, p)
                    .into_iter()
                    .map(move |c| (p, c))
            })
            .collect()
    }

    pub fn is_stable_miner(&self, s: &Configuration, miner: usize) -> bool {
        let masses = self.coin_powers(s);
        self.miner_stable_with(&masses, s, miner)
    }

    pub fn is_stable(&self, s: &Configuration) -> bool {
        let masses = self.coin_powers(s);
        (0..self.miners.len()).all(|p| self.miner_stable_with(&masses, s, p))
    }

    /// Iterator over all `|C|^n` configurations, lexicographic with miner 0
    /// most significant.
    pub fn configurations(&self) -> ConfigurationSpace {
        ConfigurationSpace::new(self.miners.len(), self.coins.len())
    }

    /// `|C|^n`, or `None` if it does not fit in a `u128`.
    pub fn configuration_count(&self) -> Option<u128> {
        let k = self.coins.len() as u128;
        (0..self.miners.len()).try_fold(1u128, |acc, _| acc.checked_mul(k))
    }

    fn targets_with(&self, masses: &[Rational], s: &Configuration, miner: usize) -> Vec<usize> {
        let from = s.coin_of(miner);
        let power = self.power(miner);
        (0..self.coins.len())
            .filter(|&c| {
                c != from
                    && improves(
                        self.reward(from),
                        &masses[from],
                        self.reward(c),
                        &(&masses[c] + power),
                    )
            })
            .collect()
    }

    pub(crate) fn miner_stable_with(
        &self,
        masses: &[Rational],
        s: &Configuration,
        miner: usize,
    ) -> bool {
        let from = s.coin_of(miner);
        let power = self.power(miner);
        (0..self.coins.len()).all(|c| {
            c == from
                || !improves(
                    self.reward(from),
                    &masses[from],
                    self.reward(c),
                    &(&masses[c] + power),
                )
        })
    }
}

pub(crate) fn rpu_of(reward: &Rational, mass: &Rational) -> ExtendedRational {
    if mass.is_zero() {
        ExtendedRational::Infinite
    } else {
        ExtendedRational::Finite(reward / mass)
    }
}

/// `reward_from / mass_from < reward_to / mass_to` with both masses positive,
/// by cross multiplication. The mover's power cancels from both payoffs.
pub(crate) fn improves(
    reward_from: &Rational,
    mass_from: &Rational,
    reward_to: &Rational,
    mass_to: &Rational,
) -> bool {
    reward_from * mass_to < reward_to * mass_from
}

/// Odometer over `C^n`.
#[derive(Debug, Clone)]
pub struct ConfigurationSpace {
    next: Option<Vec<usize>>,
    coins: usize,
}

impl ConfigurationSpace {
    pub fn new(miners: usize, coins: usize) -> Self {
        let next = if coins == 0 { None } else { Some(vec![0; miners]) };
        ConfigurationSpace { next, coins }
    }
}

impl Iterator for ConfigurationSpace {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut carried = true;
        for slot in succ.iter_mut().rev() {
            *slot += 1;
            if *slot < self.coins {
                carried = false;
                break;
            }
            *slot = 0;
        }
        if !carried {
            self.next = Some(succ);
        }
        Some(Configuration(current))
    }
}
