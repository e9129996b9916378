//! Property campaigns over generated instances.
//!
//! Each campaign is deterministic in its seed and returns the number of
//! cases and checks it ran together with every failure it saw. Failures are
//! findings; nothing here panics on a violated property.

use std::cmp::Ordering;
use std::ops::ControlFlow;

use minegame_core::dynamics::symmetric_potential;
use minegame_core::equilibria::{
    check_never_alone, check_never_alone_all, construct_equilibrium, enumerate_stable,
    two_equilibria, BetterSearch, EquilibriumError, GenericMode,
};
use minegame_core::{
    compare_potential, converge_with, DesignError, DesignOptions, DesignProblem, Scheduler, SchedulerPolicy, TraceStatus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::generate::{generate_design, generate_from_spec, generate_game, InstanceSpec};
use crate::oracle;
use crate::run::run;
use crate::scenario::{Mode, Scenario};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CampaignResult {
    pub cases: u64,
    pub checks: u64,
    pub failures: Vec<String>,
}

impl CampaignResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn fail(&mut self, message: String) {
        // Keep reports readable when something goes badly wrong.
        if self.failures.len() < 20 {
            self.failures.push(message);
        } else if self.failures.len() == 20 {
            self.failures.push("further failures omitted".into());
        }
    }
}

fn case_seed(seed: u64, case: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(case)
}

/// Learning on `games` random games (`n ≤ max_miners`, `|C| ≤ max_coins`)
/// under all four schedulers. Checks that every step strictly raises the
/// potential list, that each run converges within `|C|^n` steps, and that the
/// end state survives the brute-force deviation scan.
pub fn potential_campaign(games: u64, max_miners: usize, max_coins: usize, seed: u64) -> CampaignResult {
    let mut result = CampaignResult::default();
    for case in 0..games {
        let case_seed = case_seed(seed, case);
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
        let n = rng.random_range(1..=max_miners);
        let k = rng.random_range(1..=max_coins);
        let scenario = generate_from_spec(&InstanceSpec::new(n, k), case_seed);
        let game = &scenario.game;
        let start = scenario.initial.as_ref().expect("generated with a start");
        let cap = (k as u64).pow(n as u32);
        for policy in SchedulerPolicy::all(case_seed) {
            result.cases += 1;
            let mut violations = 0u64;
            let trace = converge_with(game, start, &mut Scheduler::new(policy), cap, |_, record, _| {
                if compare_potential(&record.potential_before, &record.potential_after) != Ok(Ordering::Less) {
                    violations += 1;
                }
                ControlFlow::Continue(())
            });
            result.checks += trace.steps.len() as u64 + 1;
            let label = format!("game {} ({}x{}) {}", case, n, k, policy.name());
            if violations > 0 {
                result.fail(format!("{}: {} step(s) without potential increase", label, violations));
            }
            if trace.status != TraceStatus::Converged {
                result.fail(format!("{}: no convergence within {} steps", label, cap));
            } else if !oracle::is_stable(game, &trace.final_configuration) {
                result.fail(format!("{}: end state {} is not stable", label, trace.final_configuration));
            }
        }
    }
    result
}

/// Greedy construction checked against exhaustive enumeration.
pub fn construction_campaign(games: u64, max_miners: usize, max_coins: usize, seed: u64) -> CampaignResult {
    let mut result = CampaignResult::default();
    for case in 0..games {
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, case));
        let n = rng.random_range(1..=max_miners);
        let k = rng.random_range(1..=max_coins);
        let game = generate_game(&InstanceSpec::new(n, k), &mut rng);
        result.cases += 1;
        let built = construct_equilibrium(&game);
        match enumerate_stable(&game, u128::MAX) {
            Ok(set) => {
                result.checks += 1;
                if !set.contains(&built) || !oracle::is_stable(&game, &built) {
                    result.fail(format!("game {}: construction {} is not an enumerated equilibrium", case, built));
                }
            }
            Err(e) => result.fail(format!("game {}: {}", case, e)),
        }
    }
    result
}

/// Equal-reward games: `Σ 1/M_c` (with empty coins counted as `+∞`)
/// strictly falls on every learning step.
pub fn symmetric_campaign(games: u64, max_miners: usize, max_coins: usize, seed: u64) -> CampaignResult {
    let mut result = CampaignResult::default();
    for case in 0..games {
        let case_seed = case_seed(seed, case);
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
        let n = rng.random_range(1..=max_miners);
        let k = rng.random_range(1..=max_coins);
        let scenario = generate_from_spec(&InstanceSpec::symmetric(n, k), case_seed);
        let game = &scenario.game;
        let start = scenario.initial.as_ref().expect("generated with a start");
        for policy in SchedulerPolicy::all(case_seed) {
            result.cases += 1;
            let mut bad = 0u64;
            let mut steps = 0u64;
            let trace = converge_with(game, start, &mut Scheduler::new(policy), 1_000_000, |before, _, after| {
                steps += 1;
                let (a, b) = (oracle::inverse_mass_sum(game, before), oracle::inverse_mass_sum(game, after));
                let core_drop = match (symmetric_potential(game, before), symmetric_potential(game, after)) {
                    (Ok(x), Ok(y)) => y < x,
                    _ => false,
                };
                if !(b < a) || !core_drop {
                    bad += 1;
                }
                ControlFlow::Continue(())
            });
            result.checks += steps;
            if bad > 0 {
                result.fail(format!("game {} {}: {} non-decreasing step(s)", case, policy.name(), bad));
            }
            if !trace.converged() {
                result.fail(format!("game {} {}: did not converge", case, policy.name()));
            }
        }
    }
    result
}

/// At every enumerated equilibrium where no coin is left alone, the miners'
/// payoffs add up to the total reward. `checks` counts the configurations
/// that qualified.
pub fn payout_campaign(games: u64, seed: u64) -> CampaignResult {
    let mut result = CampaignResult::default();
    for case in 0..games {
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, case));
        let k = rng.random_range(1..=3);
        let n = rng.random_range(1..=(2 * k + 2).min(7));
        let spec = if case % 2 == 0 {
            InstanceSpec::new(n, k)
        } else {
            InstanceSpec::near_equal(n, k)
        };
        let game = generate_game(&spec, &mut rng);
        result.cases += 1;
        let set = match enumerate_stable(&game, u128::MAX) {
            Ok(set) => set,
            Err(e) => {
                result.fail(format!("game {}: {}", case, e));
                continue;
            }
        };
        for s in set.configurations.iter().filter(|s| check_never_alone(&game, s)) {
            result.checks += 1;
            let paid = oracle::total_payoff(&game, s);
            if paid != game.rewards().total() {
                result.fail(format!("game {}: {} pays {} of {}", case, s, paid, game.rewards().total()));
            }
        }
    }
    result
}

/// Outcome of [`better_equilibrium_campaign`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BetterEquilibriumResult {
    pub result: CampaignResult,
    /// Games that passed sampled genericity and had two or more equilibria.
    pub qualifying_games: u64,
    /// Games on which both assumption checks of the two-equilibria
    /// construction passed.
    pub construction_games: u64,
}

/// Generates games with `n ≥ 2|C|` until `wanted` qualify (sampled genericity
/// holds and there are at least two equilibria) or `max_attempts` run out.
/// On each qualifying game every equilibrium must have a better one for some
/// miner; whenever the construction's assumption checks pass, it must return
/// two distinct certified equilibria.
pub fn better_equilibrium_campaign(wanted: u64, max_attempts: u64, seed: u64) -> BetterEquilibriumResult {
    let mut out = BetterEquilibriumResult::default();
    let samples = 100_000;
    for case in 0..max_attempts {
        if out.qualifying_games >= wanted {
            break;
        }
        let case_seed = case_seed(seed, case);
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
        let k = rng.random_range(2..=3);
        let n = rng.random_range(2 * k..=(2 * k + 2).min(8));
        let spec = if case % 3 == 2 {
            InstanceSpec::new(n, k)
        } else {
            InstanceSpec::near_equal(n, k)
        };
        let game = generate_game(&spec, &mut rng);
        let mode = GenericMode::Sampled {
            samples,
            seed: case_seed,
        };
        let search = match BetterSearch::prepare(&game, mode, u128::MAX) {
            Ok(search) => search,
            Err(EquilibriumError::AssumptionFailed(_)) => continue,
            Err(e) => {
                out.result.fail(format!("game {}: {}", case, e));
                continue;
            }
        };
        let set = search.stable();
        if set.len() < 2 {
            continue;
        }
        out.qualifying_games += 1;
        out.result.cases += 1;
        for s in &set.configurations {
            out.result.checks += 1;
            match search.find(s) {
                Ok(b) => {
                    let gains = oracle::payoff(&game, &b.configuration, b.miner) > oracle::payoff(&game, s, b.miner);
                    if &b.configuration == s || !set.contains(&b.configuration) || !gains {
                        out.result.fail(format!("game {}: bad witness for {}", case, s));
                    }
                }
                Err(e) => out.result.fail(format!("game {} at {}: {}", case, s, e)),
            }
        }
        let never_alone = check_never_alone_all(&game, u128::MAX).map(|r| r.holds()).unwrap_or(false);
        match two_equilibria(&game, mode, u128::MAX) {
            Ok((a, b)) => {
                out.construction_games += 1;
                out.result.checks += 1;
                if a == b || !oracle::is_stable(&game, &a) || !oracle::is_stable(&game, &b) {
                    out.result.fail(format!("game {}: construction gave {} and {}", case, a, b));
                }
            }
            Err(EquilibriumError::AssumptionFailed(_)) if !never_alone => {}
            Err(e) => out.result.fail(format!("game {}: two equilibria failed: {}", case, e)),
        }
    }
    out
}

/// Outcome of [`design_campaign`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DesignCampaignResult {
    pub result: CampaignResult,
    pub problems: u64,
    /// Problems whose endpoints differ.
    pub distinct_endpoints: u64,
    pub learning_steps: u64,
    pub phases: u64,
}

/// End-to-end reward design on generated problems (`2 ≤ n ≤ max_miners`,
/// `2 ≤ |C| ≤ max_coins`, endpoints drawn from the enumerated equilibria)
/// under all four schedulers.
pub fn design_campaign(problems: u64, max_miners: usize, max_coins: usize, seed: u64) -> DesignCampaignResult {
    let mut out = DesignCampaignResult::default();
    for case in 0..problems {
        let case_seed = case_seed(seed, case);
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
        let n = rng.random_range(2..=max_miners);
        let k = rng.random_range(2..=max_coins);
        let Some(scenario) = generate_design(n, k, case_seed, u128::MAX) else {
            out.result.fail(format!("problem {}: could not enumerate equilibria", case));
            continue;
        };
        out.problems += 1;
        let (s0, sf) = (
            scenario.initial.clone().expect("design start"),
            scenario.target.clone().expect("design target"),
        );
        if s0 != sf {
            out.distinct_endpoints += 1;
        }
        for policy in SchedulerPolicy::all(case_seed) {
            out.result.cases += 1;
            let label = format!("problem {} ({}x{}) {}", case, n, k, policy.name());
            let problem = match DesignProblem::new(scenario.game.clone(), s0.clone(), sf.clone(), policy, DesignOptions::default()) {
                Ok(p) => p,
                Err(e) => {
                    out.result.fail(format!("{}: {}", label, e));
                    continue;
                }
            };
            match problem.run() {
                Ok(outcome) => {
                    out.phases += outcome.ledger.phase_count() as u64;
                    for stage in &outcome.stages {
                        out.result.checks += stage.report.checked_steps as u64 + stage.iterations.len() as u64;
                        out.learning_steps += stage.iterations.iter().map(|it| it.trace.steps.len() as u64).sum::<u64>();
                        if stage.stage >= 2 && stage.iterations.len() as u128 > 1u128 << (n - stage.stage + 1) {
                            out.result.fail(format!("{}: stage {} exceeded its iteration bound", label, stage.stage));
                        }
                        for it in &stage.iterations {
                            if stage.stage >= 2 && it.progress_after <= it.progress_before {
                                out.result.fail(format!("{}: progress did not grow in stage {}", label, stage.stage));
                            }
                        }
                    }
                    if outcome.final_configuration != sf || !oracle::is_stable(&scenario.game, &sf) {
                        out.result.fail(format!("{}: ended at {}", label, outcome.final_configuration));
                    }
                }
                Err(DesignError::Invariant(report)) => {
                    out.result.fail(format!("{}: invariant finding {:?}", label, report.violations));
                }
                Err(e) => out.result.fail(format!("{}: {}", label, e)),
            }
        }
    }
    out
}

/// Runs each scenario twice and compares the serialized report and trace
/// byte for byte.
pub fn determinism_campaign(scenarios: &[Scenario]) -> CampaignResult {
    let mut result = CampaignResult::default();
    for (i, scenario) in scenarios.iter().enumerate() {
        result.cases += 1;
        let render = |s: &Scenario| {
            let out = run(s);
            let mut trace = Vec::new();
            crate::report::write_trace(&out.trace, &mut trace).expect("in-memory trace");
            (out.report.to_json().into_bytes(), trace)
        };
        let first = render(scenario);
        let second = render(scenario);
        result.checks += 1;
        if first != second {
            result.fail(format!("scenario {} ({}): output differs between runs", i, scenario.mode));
        }
    }
    result
}

/// A mix of scenarios covering every mode, for [`determinism_campaign`].
pub fn determinism_scenarios(seed: u64) -> Vec<Scenario> {
    let mut scenarios = Vec::new();
    for (i, mode) in [Mode::Learn, Mode::Enumerate, Mode::Construct, Mode::Check].into_iter().enumerate() {
        for kind in crate::scenario::SchedulerKind::ALL {
            let mut s = crate::generate::generate_instance(5, 3, case_seed(seed, i as u64));
            s.mode = mode;
            s.scheduler.kind = kind;
            scenarios.push(s);
        }
    }
    for case in 0..8 {
        if let Some(mut s) = generate_design(4 + case as usize % 3, 2 + case as usize % 2, case_seed(seed, 100 + case), 1_000_000) {
            s.scheduler.kind = crate::scenario::SchedulerKind::ALL[case as usize % 4];
            scenarios.push(s);
        }
    }
    scenarios.push(crate::run::counterexample_scenario());
    scenarios
}
