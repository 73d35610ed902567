use andersonlab::config::{find_preset, resolve, Command, RunConfig, PRESETS, SCHEMA_VERSION};
use andersonlab::propagator::GeneratorKind;
use andersonlab::strichartz::{Interval, PassRule};
use serde_json::json;

#[test]
fn defaults_round_trip_and_validate() {
    let c = resolve(Command::Verify, None, None, &json!({})).unwrap();
    assert_eq!(c, RunConfig::default());
    assert_eq!(c.schema, SCHEMA_VERSION);
    let v = serde_json::to_value(&c).unwrap();
    assert_eq!(v["M"], 64);
    assert!(v.get("N_list").is_some() && v.get("K").is_some());
    let back: RunConfig = serde_json::from_value(v).unwrap();
    assert_eq!(back, c);
}

#[test]
fn later_layers_win() {
    let file = json!({"M": 128, "seed": 11, "eps": 0.125});
    let c = resolve(Command::Verify, Some(&file), Some("unitarity-2d"), &json!({"seed": 12})).unwrap();
    assert_eq!(c.m, 128);
    assert_eq!(c.eps, 0.125);
    assert_eq!(c.k_radius, Some(24.0));
    assert_eq!(c.seed, 12);
    assert_eq!(c.checks, vec!["unitarity".to_string()]);
    assert_eq!(c.preset.as_deref(), Some("unitarity-2d"));
    let only_file = resolve(Command::Verify, Some(&file), None, &json!({})).unwrap();
    assert_eq!(only_file.seed, 11);
    assert_eq!(only_file.preset, None);
}

#[test]
fn preset_can_come_from_the_file() {
    let file = json!({"preset": "nls-gwp"});
    let c = resolve(Command::Verify, Some(&file), None, &json!({})).unwrap();
    assert_eq!(c.t_final, 5.0);
    let c = resolve(Command::Verify, Some(&file), Some("nls-picard"), &json!({})).unwrap();
    assert_eq!(c.t_final, 0.05);
    assert_eq!(c.preset.as_deref(), Some("nls-picard"));
}

#[test]
fn bad_inputs_are_rejected() {
    let none = json!({});
    assert!(resolve(Command::Verify, None, None, &json!({"bogus": 1})).is_err());
    assert!(resolve(Command::Verify, Some(&json!([1, 2])), None, &none).is_err());
    assert!(resolve(Command::Verify, None, Some("no-such-preset"), &none).is_err());
    // A Strichartz preset under verify.
    assert!(resolve(Command::Verify, None, Some("thm2.4-d2-p4"), &none).is_err());
    assert!(resolve(Command::Verify, None, None, &json!({"schema": 2})).is_err());
    assert!(resolve(Command::Verify, None, None, &json!({"M": 48})).is_err());
    assert!(resolve(Command::Verify, None, None, &json!({"dim": 4})).is_err());
    assert!(resolve(Command::Verify, None, None, &json!({"M": 64, "eps": 1.0 / 32.0})).is_err());
    assert!(resolve(Command::Verify, None, None, &json!({"K": 32.0})).is_err());
    assert!(resolve(Command::Verify, None, None, &json!({"samples": 1})).is_err());
    assert!(resolve(Command::Verify, None, None, &json!({"M": "64"})).is_err());
    let e = find_preset("nope").err().unwrap().to_string();
    assert!(e.contains("reconstruction-2d"), "{e}");
}

#[test]
fn every_preset_resolves() {
    let mut names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
    for p in PRESETS {
        let c = resolve(p.command, None, Some(p.name), &json!({})).unwrap_or_else(|e| panic!("{}: {e}", p.name));
        if p.command == Command::Strichartz {
            c.scaling_config().unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
    }
    names.sort();
    names.dedup();
    assert_eq!(names.len(), PRESETS.len());
}

#[test]
fn scaling_config_from_run_config() {
    let c = resolve(Command::Strichartz, None, Some("prop2.5-d2-p4"), &json!({"tolerance": 0.1, "n_t": 64})).unwrap();
    let sc = c.scaling_config().unwrap();
    assert_eq!(sc.interval, Interval::Short);
    assert_eq!(sc.rule, PassRule::Within(0.1));
    assert_eq!(sc.n_t, 64);
    assert_eq!(sc.seeds.len(), 20);
    let c = resolve(Command::Strichartz, None, Some("thm2.4-d2-p8"), &json!({"tolerance": 0.1})).unwrap();
    assert_eq!(c.scaling_config().unwrap().rule, PassRule::AtMost(0.6));
    let c = resolve(Command::Strichartz, None, Some("thm4.2-r4"), &json!({})).unwrap();
    assert_eq!(c.scaling_config().unwrap().generator, GeneratorKind::Anderson2d);
    // Mismatched dimension and an Anderson short interval.
    let bad = RunConfig { generator: GeneratorKind::Anderson3d, dim: 2, exponent: 4.0, ..Default::default() };
    assert!(bad.scaling_config().is_err());
    let bad = RunConfig { generator: GeneratorKind::Anderson2d, interval: Interval::Short, ..Default::default() };
    assert!(bad.scaling_config().is_err());
    let bad = RunConfig { exponent: 3.0, ..Default::default() };
    assert!(bad.scaling_config().is_err());
}
