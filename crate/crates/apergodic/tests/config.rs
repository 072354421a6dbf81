use apergodic::config::{
    Experiment, ExperimentConfig, FullTimeFunction, InitialSpec, OuModel, SurvivalParams, TimeFunctionSpec,
};
use apergodic::{execute, RunError, RunOptions};
use proptest::prelude::*;

fn parse(text: &str) -> Result<ExperimentConfig, RunError> {
    ExperimentConfig::from_json(text)
}

fn validation_field(e: RunError) -> String {
    match e {
        RunError::Validation { field, .. } => field,
        other => panic!("expected a validation error, got {other}"),
    }
}

const ERGODIC: &str = r#"{
  "seed": 11,
  "output": "runs/ergodic",
  "experiment": {
    "kind": "ergodic",
    "model": {
      "lambda": {"expr": "(1 + 0.5*sin(2*pi*t)) * (1 + 0.3*exp(-0.7*t))", "lower": 0.5, "upper": 1.95},
      "g": "1 + 0.5*sin(2*pi*t)",
      "gamma": 1.0
    },
    "observable": "x^2",
    "initial": {"normal": {"mean": 0.0, "sd": 1.0}},
    "t_values": [1, 10],
    "replicas": 8,
    "mode": "pathwise"
  }
}"#;

#[test]
fn every_kind_round_trips() {
    let texts = [
        ERGODIC,
        r#"{"seed": 1, "experiment": {"kind": "drift", "t1": 1, "theta": 0.5, "c": 0.94, "k_edge": 1.6}}"#,
        r#"{"seed": 1, "experiment": {"kind": "minorization",
            "class": {"type": "gaussian-class", "a": 0.5, "b_minus": 0.5, "b_plus": 1.0}}}"#,
        r#"{"seed": 1, "experiment": {"kind": "minorization",
            "class": {"type": "ou", "s_values": [0, 0.5], "t1": 1, "k_edge": 1.6}}}"#,
        r#"{"seed": 1, "experiment": {"kind": "qsd", "particles": 10, "duration": 1,
            "q_process": {"t": 0.5, "horizons": [1, 2]}}}"#,
        r#"{"seed": 1, "experiment": {"kind": "survival", "t": 1, "k_list": [0, 1], "paths": 10,
            "pair": {"h": "1", "g": "1", "gamma": 1}}}"#,
        r#"{"seed": 1, "experiment": {"kind": "asymptotic-periodicity", "k_values": [0, 2]}}"#,
    ];
    for text in texts {
        let cfg = parse(text).unwrap();
        let again = parse(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again, "{text}");
    }
}

#[test]
fn defaults_are_filled_in() {
    let cfg =
        parse(r#"{"seed": 2, "experiment": {"kind": "ergodic", "observable": "1", "t_values": [1], "replicas": 1}}"#)
            .unwrap();
    let Experiment::Ergodic(p) = cfg.experiment else { panic!("wrong kind") };
    assert_eq!(p.dt, 1e-2);
    assert_eq!(p.initial, InitialSpec::Point(0.0));
    assert!(p.model.is_none());
}

#[test]
fn unknown_keys_are_rejected_at_every_level() {
    for text in [
        r#"{"seed": 1, "extra": 0, "experiment": {"kind": "asymptotic-periodicity", "k_values": [0]}}"#,
        r#"{"seed": 1, "experiment": {"kind": "asymptotic-periodicity", "k_values": [0], "extra": 0}}"#,
        r#"{"seed": 1, "experiment": {"kind": "asymptotic-periodicity", "k_values": [0],
            "model": {"lambda": "1", "g": "1", "gamma": 1, "extra": 0}}}"#,
        r#"{"seed": 1, "experiment": {"kind": "asymptotic-periodicity", "k_values": [0],
            "model": {"lambda": {"expr": "1", "extra": 0}, "g": "1", "gamma": 1}}}"#,
        r#"{"seed": 1, "experiment": {"kind": "nonsense"}}"#,
    ] {
        let err = parse(text).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{text}");
    }
}

fn run_err(text: &str) -> RunError {
    execute(&parse(text).unwrap(), &RunOptions::default()).unwrap_err()
}

#[test]
fn validation_errors_name_the_field() {
    let cases = [
        (
            r#"{"seed": 1, "experiment": {"kind": "ergodic", "observable": "1", "t_values": [1], "replicas": 1, "dt": -0.01}}"#,
            "experiment.dt",
        ),
        (
            r#"{"seed": 1, "experiment": {"kind": "ergodic", "observable": "1", "t_values": [2, 1], "replicas": 1}}"#,
            "experiment.t_values",
        ),
        (
            r#"{"seed": 1, "experiment": {"kind": "ergodic", "observable": "1", "t_values": [1], "replicas": 0}}"#,
            "experiment.replicas",
        ),
        (
            r#"{"seed": 1, "experiment": {"kind": "ergodic", "observable": "x^", "t_values": [1], "replicas": 1}}"#,
            "experiment.observable",
        ),
        (
            r#"{"seed": 1, "experiment": {"kind": "ergodic", "observable": "1", "t_values": [1], "replicas": 1,
            "model": {"lambda": "1 + ", "g": "1", "gamma": 1}}}"#,
            "experiment.model.lambda",
        ),
        (
            r#"{"seed": 1, "experiment": {"kind": "ergodic", "observable": "1", "t_values": [1], "replicas": 1,
            "model": {"lambda": "1", "g": "1 + sin(t)", "gamma": 1}}}"#,
            "experiment.model.g",
        ),
        (
            r#"{"seed": 1, "experiment": {"kind": "ergodic", "observable": "1", "t_values": [1], "replicas": 1,
            "model": {"lambda": {"expr": "2", "lower": 0, "upper": 1}, "g": "1", "gamma": 1}}}"#,
            "experiment.model.lambda",
        ),
        (
            r#"{"seed": 1, "experiment": {"kind": "drift", "t1": 1, "theta": 1.5, "c": 0.94, "k_edge": 1.6}}"#,
            "experiment.theta",
        ),
        (r#"{"seed": 1, "experiment": {"kind": "qsd", "particles": 1, "duration": 1}}"#, "experiment.particles"),
        (
            r#"{"seed": 1, "experiment": {"kind": "qsd", "particles": 10, "duration": 1, "burn_in": 2}}"#,
            "experiment.burn_in",
        ),
        (r#"{"seed": 1, "experiment": {"kind": "survival", "t": 1, "k_list": [], "paths": 10}}"#, "experiment.k_list"),
        (
            r#"{"seed": 1, "experiment": {"kind": "survival", "t": 1, "k_list": [0], "paths": 10,
            "pair": {"h": "2", "g": "1", "gamma": 1}}}"#,
            "experiment.pair",
        ),
        (r#"{"seed": 1, "experiment": {"kind": "asymptotic-periodicity", "k_values": [0], "s": 1.5}}"#, "experiment.s"),
        (
            r#"{"seed": 1, "experiment": {"kind": "minorization",
            "class": {"type": "gaussian-class", "a": 0, "b_minus": 2, "b_plus": 1}}}"#,
            "experiment.class.b_minus",
        ),
    ];
    for (text, field) in cases {
        let e = run_err(text);
        assert_eq!(e.exit_code(), 2);
        assert_eq!(validation_field(e), field, "{text}");
    }
}

#[test]
fn seed_override_changes_only_the_seed() {
    let cfg = parse(ERGODIC).unwrap();
    let a = execute(&cfg, &RunOptions { seed: Some(5), ..Default::default() }).unwrap();
    let mut manual = cfg.clone();
    manual.seed = 5;
    let b = execute(&manual, &RunOptions::default()).unwrap();
    assert_eq!(a.get("report.csv"), b.get("report.csv"));
    let c = execute(&cfg, &RunOptions::default()).unwrap();
    assert_ne!(a.get("report.csv"), c.get("report.csv"));
}

fn tf_strategy() -> impl Strategy<Value = TimeFunctionSpec> {
    let expr =
        (0.1f64..3.0, 0.0f64..0.9, 0.0f64..2.0).prop_map(|(a, b, c)| format!("{a} * (1 + {b}*sin(2*pi*t)) + {c}"));
    prop_oneof![
        expr.clone().prop_map(TimeFunctionSpec::Text),
        (expr, proptest::option::of(0.0f64..1.0), proptest::option::of(1.0f64..2.0)).prop_map(|(e, p, lo)| {
            TimeFunctionSpec::Full(FullTimeFunction {
                expr: e,
                lower: lo.map(|l| -l),
                upper: lo.map(|l| 10.0 + l),
                period: p,
            })
        }),
    ]
}

proptest! {
    #[test]
    fn survival_configs_round_trip(
        seed in any::<u64>(),
        s in 0.0f64..5.0,
        extra in 0.0f64..5.0,
        ks in proptest::collection::vec(0u32..50, 1..6),
        paths in 1u64..1_000_000,
        dt in 1e-5f64..1e-1,
        h in tf_strategy(),
        g in tf_strategy(),
    ) {
        let cfg = ExperimentConfig {
            seed,
            output: None,
            experiment: Experiment::Survival(SurvivalParams {
                pair: Some(apergodic::config::PairModel { h, g, gamma: 1.0, n0: 1 }),
                s,
                t: s + extra,
                x: 0.0,
                k_list: ks,
                paths,
                dt,
            }),
        };
        let back = parse(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn ou_models_round_trip(lambda in tf_strategy(), g in tf_strategy(), gamma in 0.1f64..5.0) {
        let model = OuModel { lambda, g, gamma };
        let text = serde_json::to_string(&model).unwrap();
        let back: OuModel = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, model);
    }
}
