//! Run reports and trace events.
//!
//! Reports serialize to a single JSON object with a fixed field order and no
//! timing data, so the same scenario and seed always produce the same bytes.
//! Rationals are written as `"n"` or `"n/d"` strings.

use std::fmt::Write as _;
use std::io::{self, Write};

use minegame_core::{Configuration, Game, Rational};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::scenario::{Mode, SchedulerKind};

/// How a run ended. Each status maps to one process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    PreconditionFailed,
    AssumptionFailed,
    Finding,
    BudgetExhausted,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::PreconditionFailed | Status::AssumptionFailed => 2,
            Status::Finding => 3,
            Status::BudgetExhausted => 4,
        }
    }
}

/// Miner id to coin id, in miner declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment(pub Vec<(String, String)>);

impl Assignment {
    pub fn new(game: &Game, s: &Configuration) -> Self {
        Assignment(
            game.miners()
                .iter()
                .map(|m| (m.id.clone(), game.coins()[s.coin_of(m.index)].id.clone()))
                .collect(),
        )
    }
}

impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (miner, coin) in &self.0 {
            map.serialize_entry(miner, coin)?;
        }
        map.end()
    }
}

pub(crate) fn rational_str<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.collect_str(value)
}

fn rational_vec<S: Serializer>(values: &[Rational], serializer: S) -> Result<S::Ok, S::Error> {
    serializer.collect_seq(values.iter().map(|v| v.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PotentialEntry {
    pub coin: String,
    /// `"inf"` for an empty coin.
    pub rpu: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LearnSection {
    pub initial: Assignment,
    pub converged: bool,
    pub step_limit: u64,
    /// Deviation scan of the final configuration.
    pub final_stable: bool,
    /// Every step strictly raised the potential list.
    pub potential_monotone: bool,
    pub final_potential: Vec<PotentialEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageSection {
    pub stage: usize,
    pub miner: String,
    pub target: Assignment,
    pub iterations: usize,
    /// `2^(n - i + 1)` for stages after the first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iteration_bound: Option<String>,
    /// Progress vector at the start and after each iteration, as bit strings.
    pub progress: Vec<String>,
    pub movers: Vec<String>,
    pub steps: u64,
    pub checked_steps: usize,
    #[serde(serialize_with = "rational_str")]
    pub cost: Rational,
    /// Iterations whose designed rewards were below the base rewards on some
    /// coin.
    pub below_base_phases: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FindingSection {
    pub stage: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iteration: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub configuration: Option<Assignment>,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DesignSection {
    pub initial: Assignment,
    pub target: Assignment,
    pub strict_protocol: bool,
    pub stages: Vec<StageSection>,
    pub phases: usize,
    #[serde(serialize_with = "rational_str")]
    pub total_cost: Rational,
    pub reached_target: bool,
    /// Target re-checked under the original rewards.
    pub final_stable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finding: Option<FindingSection>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnumerateSection {
    pub count: usize,
    pub stable: Vec<Assignment>,
    pub constructed: Assignment,
    pub constructed_is_member: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstructSection {
    pub configuration: Assignment,
    pub stable: bool,
    /// Membership in the enumerated stable set; absent when enumeration
    /// exceeds the budget.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub in_enumeration: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerdictSection {
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BetterSection {
    pub miner: String,
    pub configuration: Assignment,
    #[serde(serialize_with = "rational_str")]
    pub payoff_before: Rational,
    #[serde(serialize_with = "rational_str")]
    pub payoff_after: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckSection {
    /// Absent when the exhaustive scan exceeds the budget.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub never_alone: Option<VerdictSection>,
    pub generic: VerdictSection,
    pub generic_method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_equilibria: Option<Vec<Assignment>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_stable: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_never_alone: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub better_equilibrium: Option<BetterSection>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CounterexampleSection {
    pub configurations: Vec<Assignment>,
    pub payoffs: Vec<Vec<String>>,
    pub movers: Vec<String>,
    #[serde(serialize_with = "rational_vec")]
    pub deltas: Vec<Rational>,
    #[serde(serialize_with = "rational_str")]
    pub cycle_sum: Rational,
}

/// Machine-readable outcome of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub mode: Mode,
    pub status: Status,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub scenario_digest: String,
    pub seed: u64,
    pub scheduler: SchedulerKind,
    pub steps: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_configuration: Option<Assignment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learn: Option<LearnSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enumerate: Option<EnumerateSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub construct: Option<ConstructSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleSection>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Short human-readable summary.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let assignment = |a: &Assignment| {
            let parts: Vec<String> = a.0.iter().map(|(m, c)| format!("{}:{}", m, c)).collect();
            format!("<{}>", parts.join(", "))
        };
        let _ = writeln!(out, "mode      {}", self.mode);
        let _ = writeln!(out, "status    {:?} (exit {})", self.status, self.exit_code());
        if let Some(error) = &self.error {
            let _ = writeln!(out, "error     {}", error);
        }
        let _ = writeln!(out, "scenario  {}", &self.scenario_digest[..16]);
        let _ = writeln!(out, "seed      {}", self.seed);
        let _ = writeln!(out, "steps     {}", self.steps);
        if let Some(f) = &self.final_configuration {
            let _ = writeln!(out, "final     {}", assignment(f));
        }
        if let Some(l) = &self.learn {
            let _ = writeln!(
                out,
                "learn     converged={} stable={} potential-monotone={}",
                l.converged, l.final_stable, l.potential_monotone
            );
        }
        if let Some(d) = &self.design {
            for st in &d.stages {
                let _ = writeln!(
                    out,
                    "stage {:>2}  miner {} iterations={} steps={} cost={} progress={}",
                    st.stage,
                    st.miner,
                    st.iterations,
                    st.steps,
                    st.cost,
                    st.progress.join(" ")
                );
            }
            let _ = writeln!(
                out,
                "design    reached={} stable={} phases={} total-cost={}",
                d.reached_target, d.final_stable, d.phases, d.total_cost
            );
            if let Some(f) = &d.finding {
                let _ = writeln!(out, "finding   stage {} {}", f.stage, f.kind);
            }
        }
        if let Some(e) = &self.enumerate {
            let _ = writeln!(out, "stable    {} configuration(s)", e.count);
            for s in &e.stable {
                let _ = writeln!(out, "          {}", assignment(s));
            }
        }
        if let Some(c) = &self.construct {
            let _ = writeln!(out, "construct {} stable={}", assignment(&c.configuration), c.stable);
        }
        if let Some(c) = &self.check {
            if let Some(v) = &c.never_alone {
                let _ = writeln!(out, "never-alone holds={}", v.holds);
            }
            let _ = writeln!(out, "generic   holds={} ({})", c.generic.holds, c.generic_method);
            for note in &c.notes {
                let _ = writeln!(out, "note      {}", note);
            }
        }
        if let Some(c) = &self.counterexample {
            let _ = writeln!(out, "cycle sum {}", c.cycle_sum);
        }
        out
    }
}

/// One better-response step, as written to the trace stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub step: u64,
    pub miner: String,
    pub from: String,
    pub to: String,
    #[serde(serialize_with = "rational_str")]
    pub payoff_before: Rational,
    #[serde(serialize_with = "rational_str")]
    pub payoff_after: Rational,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iteration: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace event {step} does not improve the mover's payoff ({before} -> {after})")]
    NotImproving {
        step: u64,
        before: Rational,
        after: Rational,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writes one JSON object per line, refusing any event whose payoff delta is
/// not strictly positive.
pub fn write_trace<W: Write>(events: &[TraceEvent], mut out: W) -> Result<(), TraceError> {
    for event in events {
        if event.payoff_after <= event.payoff_before {
            return Err(TraceError::NotImproving {
                step: event.step,
                before: event.payoff_before.clone(),
                after: event.payoff_after.clone(),
            });
        }
        serde_json::to_writer(&mut out, event).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use minegame_core::rational::{int, ratio};

    fn event(before: Rational, after: Rational) -> TraceEvent {
        TraceEvent {
            step: 1,
            miner: "p1".into(),
            from: "c1".into(),
            to: "c2".into(),
            payoff_before: before,
            payoff_after: after,
            stage: None,
            iteration: None,
        }
    }

    #[test]
    fn trace_lines() {
        let mut buf = Vec::new();
        write_trace(&[event(ratio(2, 3), int(1))], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"step\":1,\"miner\":\"p1\",\"from\":\"c1\",\"to\":\"c2\",\"payoff_before\":\"2/3\",\"payoff_after\":\"1\"}\n"
        );
    }

    #[test]
    fn trace_rejects_non_improving_events() {
        let err = write_trace(&[event(int(1), int(1))], Vec::new()).unwrap_err();
        assert!(matches!(err, TraceError::NotImproving { step: 1, .. }));
    }

    #[test]
    fn assignment_keeps_declaration_order() {
        let a = Assignment(vec![("p2".into(), "c1".into()), ("p10".into(), "c2".into())]);
        assert_eq!(serde_json::to_string(&a).unwrap(), r#"{"p2":"c1","p10":"c2"}"#);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Status::Ok.exit_code(), 0);
        assert_eq!(Status::AssumptionFailed.exit_code(), 2);
        assert_eq!(Status::Finding.exit_code(), 3);
        assert_eq!(Status::BudgetExhausted.exit_code(), 4);
    }
}
