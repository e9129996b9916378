//! Mode dispatch: one scenario in, one report (and trace) out.

use std::cmp::Ordering;
use std::ops::ControlFlow;

use minegame_core::design::{CostLedger, DesignError, InvariantReport, ProgressVector, StageOutcome, ViolationKind};
use minegame_core::dynamics::{default_max_steps, exact_potential_counterexample};
use minegame_core::equilibria::{
    check_generic, check_never_alone, check_never_alone_all, construct_equilibrium, enumerate_stable,
    find_better_equilibrium, two_equilibria, AssumptionReport, CheckMethod, EquilibriumError, Verdict,
};
use minegame_core::{
    compare_potential, converge_with, potential_list, Configuration, DesignOptions, DesignProblem, Game,
    Rational, Scheduler, StepRecord, TraceStatus,
};
use num_traits::Zero;

use crate::report::*;
use crate::scenario::{Mode, RunOptions, Scenario, SchedulerSpec};

/// Report plus the trace events of every learning step taken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub report: RunReport,
    pub trace: Vec<TraceEvent>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code()
    }
}

/// The fixed two-miner game behind the exact-potential counterexample, as a
/// scenario.
pub fn counterexample_scenario() -> Scenario {
    Scenario {
        game: exact_potential_counterexample().game,
        initial: None,
        target: None,
        scheduler: SchedulerSpec::default(),
        mode: Mode::Counterexample,
        options: RunOptions::default(),
    }
}

struct Context<'a> {
    scenario: &'a Scenario,
    report: RunReport,
    trace: Vec<TraceEvent>,
}

impl<'a> Context<'a> {
    fn game(&self) -> &'a Game {
        &self.scenario.game
    }

    fn assignment(&self, s: &Configuration) -> Assignment {
        Assignment::new(self.game(), s)
    }

    fn fail(&mut self, status: Status, error: impl Into<String>) {
        self.report.status = status;
        self.report.success = false;
        self.report.error = Some(error.into());
    }

    fn budget(&self) -> u128 {
        self.scenario.options.enumeration_budget as u128
    }

    fn max_steps(&self) -> u64 {
        self.scenario
            .options
            .max_steps
            .unwrap_or_else(|| default_max_steps(self.game()))
    }

    fn push_event(&mut self, record: &StepRecord, stage: Option<usize>, iteration: Option<usize>) {
        let game = self.game();
        self.trace.push(TraceEvent {
            step: self.trace.len() as u64 + 1,
            miner: game.miners()[record.miner].id.clone(),
            from: game.coins()[record.from].id.clone(),
            to: game.coins()[record.to].id.clone(),
            payoff_before: record.payoff_before.clone(),
            payoff_after: record.payoff_after.clone(),
            stage,
            iteration,
        });
    }
}

/// Runs `scenario` in its own mode.
pub fn run(scenario: &Scenario) -> RunOutput {
    let mut ctx = Context {
        scenario,
        report: RunReport {
            mode: scenario.mode,
            status: Status::Ok,
            success: true,
            error: None,
            scenario_digest: scenario.digest(),
            seed: scenario.seed(),
            scheduler: scenario.scheduler.kind,
            steps: 0,
            final_configuration: None,
            learn: None,
            design: None,
            enumerate: None,
            construct: None,
            check: None,
            counterexample: None,
        },
        trace: Vec::new(),
    };
    match scenario.mode {
        Mode::Learn => learn(&mut ctx),
        Mode::Design => design(&mut ctx),
        Mode::Enumerate => enumerate(&mut ctx),
        Mode::Construct => construct(&mut ctx),
        Mode::Check => check(&mut ctx),
        Mode::Counterexample => counterexample(&mut ctx),
    }
    ctx.report.steps = ctx.trace.len() as u64;
    RunOutput {
        report: ctx.report,
        trace: ctx.trace,
    }
}

fn learn(ctx: &mut Context) {
    let game = ctx.game();
    let initial = ctx
        .scenario
        .initial
        .clone()
        .unwrap_or_else(|| Configuration::uniform(game.miner_count(), 0));
    let cap = ctx.max_steps();
    let mut scheduler = Scheduler::new(ctx.scenario.scheduler.policy());
    let mut monotone = true;
    let trace = converge_with(game, &initial, &mut scheduler, cap, |_, record, _| {
        if compare_potential(&record.potential_before, &record.potential_after) != Ok(Ordering::Less) {
            monotone = false;
        }
        ControlFlow::Continue(())
    });
    for record in &trace.steps {
        ctx.push_event(record, None, None);
    }
    let end = &trace.final_configuration;
    let final_stable = game.is_stable(end);
    let final_potential = potential_list(game, end)
        .entries()
        .iter()
        .map(|(rpu, coin)| PotentialEntry {
            coin: game.coins()[*coin].id.clone(),
            rpu: rpu.to_string(),
        })
        .collect();
    ctx.report.final_configuration = Some(ctx.assignment(end));
    ctx.report.learn = Some(LearnSection {
        initial: ctx.assignment(&initial),
        converged: trace.converged(),
        step_limit: cap,
        final_stable,
        potential_monotone: monotone,
        final_potential,
    });
    if !monotone {
        ctx.fail(Status::Finding, "a better-response step did not raise the potential list");
    } else if trace.status == TraceStatus::StepLimit {
        ctx.fail(Status::BudgetExhausted, format!("step cap of {} reached before convergence", cap));
    } else if trace.converged() && !final_stable {
        ctx.fail(Status::Finding, "learning stopped at an unstable configuration");
    }
}

fn progress_bits(p: &ProgressVector) -> String {
    p.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn stage_section(ctx: &Context, problem: &DesignProblem, outcome: &StageOutcome) -> StageSection {
    let n = problem.miner_count();
    let stage = outcome.stage;
    let mut progress = Vec::new();
    if stage >= 2 {
        progress.push(progress_bits(&problem.progress_vector(stage, &outcome.entry)));
        progress.extend(
            outcome
                .iterations
                .iter()
                .filter_map(|it| it.progress_after.as_ref().map(progress_bits)),
        );
    }
    StageSection {
        stage,
        miner: ctx.game().miners()[problem.miner_at_rank(stage)].id.clone(),
        target: ctx.assignment(&problem.stage_target(stage).expect("stage in range")),
        iterations: outcome.iterations.len(),
        iteration_bound: (stage >= 2).then(|| (1u128 << (n - stage + 1).min(127)).to_string()),
        progress,
        movers: outcome
            .iterations
            .iter()
            .filter_map(|it| it.design.mover)
            .map(|rank| ctx.game().miners()[problem.miner_at_rank(rank)].id.clone())
            .collect(),
        steps: outcome.iterations.iter().map(|it| it.trace.steps.len() as u64).sum(),
        checked_steps: outcome.report.checked_steps,
        cost: outcome.cost.clone(),
        below_base_phases: outcome
            .iterations
            .iter()
            .filter(|it| !it.design.below_base.is_empty())
            .count(),
    }
}

fn finding_from_report(ctx: &Context, report: &InvariantReport) -> (Status, FindingSection) {
    let violation = report.violations.last();
    let status = match violation.map(|v| &v.kind) {
        Some(ViolationKind::StepLimit) => Status::BudgetExhausted,
        _ => Status::Finding,
    };
    let section = FindingSection {
        stage: report.stage,
        iteration: violation.map(|v| v.iteration),
        step: violation.and_then(|v| v.step),
        configuration: violation.map(|v| ctx.assignment(&v.configuration)),
        kind: violation.map_or_else(|| "unknown".to_string(), |v| format!("{:?}", v.kind)),
    };
    (status, section)
}

fn design(ctx: &mut Context) {
    let scenario = ctx.scenario;
    let game = ctx.game();
    let initial = scenario
        .initial
        .clone()
        .unwrap_or_else(|| construct_equilibrium(game));
    let target = scenario.target.clone().expect("validated: design has a target");
    let options = DesignOptions {
        strict_protocol: scenario.options.strict_protocol,
        max_steps: scenario.options.max_steps,
    };
    let problem = match DesignProblem::new(game.clone(), initial.clone(), target.clone(), scenario.scheduler.policy(), options) {
        Ok(p) => p,
        Err(e) => return ctx.fail(Status::PreconditionFailed, e.to_string()),
    };

    let mut scheduler = Scheduler::new(scenario.scheduler.policy());
    let mut ledger = CostLedger::new();
    let mut stages = Vec::new();
    let mut finding = None;
    let mut failure = None;
    let mut s = initial.clone();
    for stage in 1..=problem.miner_count() {
        match problem.run_stage(stage, &s, &mut scheduler, &mut ledger) {
            Ok(outcome) => {
                for it in &outcome.iterations {
                    for record in &it.trace.steps {
                        ctx.push_event(record, Some(stage), Some(it.index));
                    }
                }
                stages.push(stage_section(ctx, &problem, &outcome));
                s = outcome.exit;
            }
            Err(DesignError::Invariant(report)) => {
                let (status, section) = finding_from_report(ctx, &report);
                failure = Some((status, format!("stage {}: {}", report.stage, section.kind)));
                finding = Some(section);
                break;
            }
            Err(e @ DesignError::Protocol { .. }) => {
                failure = Some((Status::Finding, e.to_string()));
                finding = Some(FindingSection {
                    stage,
                    iteration: match &e {
                        DesignError::Protocol { iteration, .. } => Some(*iteration),
                        _ => None,
                    },
                    step: None,
                    configuration: Some(ctx.assignment(&s)),
                    kind: e.to_string(),
                });
                break;
            }
            Err(e) => {
                failure = Some((Status::PreconditionFailed, e.to_string()));
                break;
            }
        }
    }
    let reached = failure.is_none() && s == target;
    let final_stable = game.is_stable(&s);
    if failure.is_none() && !(reached && final_stable) {
        failure = Some((Status::Finding, format!("design ended at unstable or wrong configuration {}", s)));
    }
    ctx.report.final_configuration = Some(ctx.assignment(&s));
    ctx.report.design = Some(DesignSection {
        initial: ctx.assignment(&initial),
        target: ctx.assignment(&target),
        strict_protocol: options.strict_protocol,
        stages,
        phases: ledger.phase_count(),
        total_cost: ledger.total.clone(),
        reached_target: reached,
        final_stable,
        finding,
    });
    if let Some((status, message)) = failure {
        ctx.fail(status, message);
    }
}

fn budget_or(ctx: &mut Context, e: EquilibriumError) {
    match e {
        EquilibriumError::BudgetExceeded { .. } => ctx.fail(Status::BudgetExhausted, e.to_string()),
        EquilibriumError::AssumptionFailed(_) => ctx.fail(Status::AssumptionFailed, e.to_string()),
        EquilibriumError::ExtensionAudit { .. } | EquilibriumError::ConstructionUnstable(_) => {
            ctx.fail(Status::Finding, e.to_string())
        }
        _ => ctx.fail(Status::PreconditionFailed, e.to_string()),
    }
}

fn enumerate(ctx: &mut Context) {
    let game = ctx.game();
    let set = match enumerate_stable(game, ctx.budget()) {
        Ok(set) => set,
        Err(e) => return budget_or(ctx, e),
    };
    let constructed = construct_equilibrium(game);
    let member = set.contains(&constructed);
    ctx.report.enumerate = Some(EnumerateSection {
        count: set.len(),
        stable: set.configurations.iter().map(|s| ctx.assignment(s)).collect(),
        constructed: ctx.assignment(&constructed),
        constructed_is_member: member,
    });
    if !member {
        ctx.fail(Status::Finding, "constructed equilibrium is missing from the enumeration");
    }
}

fn construct(ctx: &mut Context) {
    let game = ctx.game();
    let s = construct_equilibrium(game);
    let stable = game.is_stable(&s);
    let in_enumeration = enumerate_stable(game, ctx.budget()).ok().map(|set| set.contains(&s));
    ctx.report.final_configuration = Some(ctx.assignment(&s));
    ctx.report.construct = Some(ConstructSection {
        configuration: ctx.assignment(&s),
        stable,
        in_enumeration,
    });
    if !stable || in_enumeration == Some(false) {
        ctx.fail(Status::Finding, "constructed configuration is not stable");
    }
}

fn method_name(method: CheckMethod) -> String {
    match method {
        CheckMethod::Exhaustive => "exhaustive".into(),
        CheckMethod::Sampled { samples, seed } => format!("sampled ({} pairs, seed {})", samples, seed),
    }
}

fn generic_section(game: &Game, report: &AssumptionReport) -> VerdictSection {
    match &report.generic {
        Some(Verdict::Fails(w)) => {
            let names = |ms: &[usize]| {
                let ids: Vec<&str> = ms.iter().map(|&p| game.miners()[p].id.as_str()).collect();
                format!("{{{}}}", ids.join(","))
            };
            VerdictSection {
                holds: false,
                witness: Some(format!(
                    "{} / {} = {} / {}",
                    game.coins()[w.coin_a].id,
                    names(&w.miners_a),
                    game.coins()[w.coin_b].id,
                    names(&w.miners_b)
                )),
            }
        }
        _ => VerdictSection {
            holds: true,
            witness: None,
        },
    }
}

fn check(ctx: &mut Context) {
    let game = ctx.game();
    let mode = ctx.scenario.generic_mode();
    let generic = match check_generic(game, mode) {
        Ok(r) => r,
        Err(e) => return budget_or(ctx, e),
    };
    let mut notes = Vec::new();
    let never_alone = match check_never_alone_all(game, ctx.budget()) {
        Ok(r) => match r.never_alone {
            Some(Verdict::Fails(w)) => Some(VerdictSection {
                holds: false,
                witness: Some(format!(
                    "coin {} alone in {}",
                    game.coins()[w.coin].id,
                    game.display_configuration(&w.configuration)
                )),
            }),
            _ => Some(VerdictSection {
                holds: true,
                witness: None,
            }),
        },
        Err(e) => {
            notes.push(format!("never-alone not checked: {}", e));
            None
        }
    };
    let generic_holds = generic.holds();
    let both_hold = generic_holds && never_alone.as_ref().is_some_and(|v| v.holds);

    let mut status = None;
    let mut two = None;
    if both_hold && game.miner_count() >= 2 && game.coin_count() >= 2 {
        match two_equilibria(game, mode, ctx.budget()) {
            Ok((a, b)) => two = Some(vec![ctx.assignment(&a), ctx.assignment(&b)]),
            Err(e) => {
                notes.push(format!("two equilibria: {}", e));
                if matches!(e, EquilibriumError::ExtensionAudit { .. } | EquilibriumError::ConstructionUnstable(_)) {
                    status = Some((Status::Finding, e.to_string()));
                }
            }
        }
    }

    let mut initial_stable = None;
    let mut initial_never_alone = None;
    let mut better = None;
    if let Some(s) = &ctx.scenario.initial {
        initial_stable = Some(game.is_stable(s));
        initial_never_alone = Some(check_never_alone(game, s));
        if game.is_stable(s) && generic_holds {
            match find_better_equilibrium(game, s, mode, ctx.budget()) {
                Ok(b) => {
                    better = Some(BetterSection {
                        miner: game.miners()[b.miner].id.clone(),
                        configuration: ctx.assignment(&b.configuration),
                        payoff_before: b.payoff_before,
                        payoff_after: b.payoff_after,
                    })
                }
                Err(e) => {
                    notes.push(format!("better equilibrium: {}", e));
                    if both_hold && matches!(e, EquilibriumError::NoBetterEquilibrium(_)) {
                        status = Some((Status::Finding, e.to_string()));
                    }
                }
            }
        }
    }

    ctx.report.check = Some(CheckSection {
        never_alone,
        generic: generic_section(game, &generic),
        generic_method: method_name(generic.method),
        two_equilibria: two,
        initial_stable,
        initial_never_alone,
        better_equilibrium: better,
        notes,
    });
    if let Some((status, message)) = status {
        ctx.fail(status, message);
    }
}

fn counterexample(ctx: &mut Context) {
    let report = exact_potential_counterexample();
    let game = &report.game;
    let expected = Rational::new(2.into(), 3.into());
    ctx.report.counterexample = Some(CounterexampleSection {
        configurations: report.configurations.iter().map(|s| Assignment::new(game, s)).collect(),
        payoffs: report
            .payoffs
            .iter()
            .map(|row| row.iter().map(|v| v.to_string()).collect())
            .collect(),
        movers: report.movers.iter().map(|&p| game.miners()[p].id.clone()).collect(),
        deltas: report.deltas.clone(),
        cycle_sum: report.cycle_sum.clone(),
    });
    if report.cycle_sum.is_zero() || report.cycle_sum != expected {
        ctx.fail(Status::Finding, format!("cycle sum is {}, expected 2/3", report.cycle_sum));
    }
}
