use minegame::generate::{generate_from_spec, InstanceSpec};
use minegame::report::TraceError;
use minegame::scenario::{Mode, SchedulerKind};
use minegame::{parse_scenario, run, write_trace};
use proptest::prelude::*;

fn kind(index: usize) -> SchedulerKind {
    SchedulerKind::ALL[index % SchedulerKind::ALL.len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_scenarios_round_trip(n in 1usize..7, k in 1usize..5, seed in any::<u64>(), sched in 0usize..4) {
        let mut scenario = generate_from_spec(&InstanceSpec::new(n, k), seed);
        scenario.scheduler.kind = kind(sched);
        let text = scenario.to_json();
        let parsed = parse_scenario(text.as_bytes()).unwrap();
        prop_assert_eq!(&parsed, &scenario);
        prop_assert_eq!(parsed.digest(), scenario.digest());
        prop_assert_eq!(parsed.to_json(), text);
    }

    #[test]
    fn learning_traces_only_improve(n in 1usize..6, k in 1usize..4, seed in any::<u64>(), sched in 0usize..4) {
        let mut scenario = generate_from_spec(&InstanceSpec::new(n, k), seed);
        scenario.scheduler.kind = kind(sched);
        scenario.mode = Mode::Learn;
        let output = run(&scenario);
        prop_assert_eq!(output.exit_code(), 0);
        prop_assert_eq!(output.trace.len() as u64, output.report.steps);
        let mut buffer = Vec::new();
        write_trace(&output.trace, &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        prop_assert_eq!(text.lines().count(), output.trace.len());
    }
}

#[test]
fn trace_writer_rejects_non_improving_events() {
    let scenario = generate_from_spec(&InstanceSpec::new(3, 2), 5);
    let mut output = run(&scenario);
    if output.trace.is_empty() {
        return;
    }
    let event = &mut output.trace[0];
    event.payoff_after = event.payoff_before.clone();
    let result = write_trace(&output.trace, Vec::new());
    assert!(matches!(result, Err(TraceError::NotImproving { step: 1, .. })));
}

#[test]
fn digest_ignores_formatting() {
    let compact = br#"{"miners":[{"id":"a","power":1}],"coins":[{"id":"x","reward":2}],"mode":"construct"}"#;
    let spaced = b"{ \"mode\": \"construct\",\n \"coins\": [ {\"id\": \"x\", \"reward\": \"2\"} ],\n \"miners\": [ {\"id\": \"a\", \"power\": 1} ] }";
    let a = parse_scenario(compact).unwrap();
    let b = parse_scenario(spaced).unwrap();
    assert_eq!(a.digest(), b.digest());
}
