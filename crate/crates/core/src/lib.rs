//! Multi-coin mining game with exact arithmetic.
//!
//! Miners with fixed hash power each pick one coin; a coin splits its reward
//! among its miners in proportion to power. The crate covers:
//!
//! - [`game`]: configurations, payoffs, better responses, stability;
//! - [`dynamics`]: better-response learning under pluggable schedulers and the
//!   lexicographic `(RPU, coin)` ordinal potential;
//! - [`equilibria`]: constructive and exhaustive equilibrium computation and
//!   the "never alone" / genericity assumption checkers;
//! - [`design`]: staged reward design that steers learning miners from one
//!   stable configuration to another.
//!
//! The crate is `no_std` and needs only `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod design;
pub mod dynamics;
pub mod equilibria;
pub mod game;
pub mod rational;

pub use dynamics::{
    compare_potential, converge, converge_with, potential_list, step, symmetric_potential, PotentialList, Scheduler,
    SchedulerPolicy, StepRecord, SymmetricPotential, Trace, TraceStatus,
};
pub use game::{Coin, Configuration, Game, GameError, Miner, RewardFunction};
pub use rational::{ExtendedRational, Rational};
pub use design::{CostLedger, DesignError, DesignOptions, DesignOutcome, DesignProblem, DesignedRewards};
pub use equilibria::{construct_equilibrium, enumerate_stable, find_better_equilibrium, two_equilibria, BetterSearch, StableSet};
