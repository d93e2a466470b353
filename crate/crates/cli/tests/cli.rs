use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use otdr_cli::config::{emit_config, parse_config, AttackGrid, MonteCarlo, Numerics, ScenarioConfig};
use otdr_cli::{execute, Command as Sub};
use otdr_core::{AttackSpec, FiberSpec};
use proptest::prelude::*;

fn otdr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otdr")).current_dir(dir).args(args).output().expect("run otdr")
}

const NULL_CONFIG: &str = r#"
[fiber]
L = 4
tau = [0.9, 0.95, 0.8, 0.99]
theta = 0.3
energy = 2.5

[[attacks]]
position = 2
tau = 0.95
theta = 0.3

[mc]
samples = 20000
n_list = [3, 6]
calibration_scenarios = 20
"#;

#[test]
fn verify_on_null_attack_config_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("null.toml"), NULL_CONFIG).unwrap();
    let out = otdr(dir.path(), &["verify", "--config", "null.toml", "--out", "res"]);
    let csv = fs::read_to_string(dir.path().join("res/verify.csv")).unwrap();
    assert_eq!(out.status.code(), Some(0), "{csv}");
    assert!(!csv.contains(",fail,"));
    assert!(csv.contains("null_attack_neutral,0,0,<=,pass"));
}

#[test]
fn zero_samples_exits_one_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = NULL_CONFIG.replace("samples = 20000", "samples = 0");
    fs::write(dir.path().join("bad.toml"), text).unwrap();
    let out = otdr(dir.path(), &["mc", "--config", "bad.toml", "--out", "res"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("mc.samples"), "{stderr}");
    assert!(out.stdout.is_empty());
    assert!(!dir.path().join("res").exists());
}

#[test]
fn constraint_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = NULL_CONFIG.replace("tau = 0.95\n", "tau = 0.999\n");
    fs::write(dir.path().join("bad.toml"), text).unwrap();
    let out = otdr(dir.path(), &["region", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("attacks[0].tau"));
}

#[test]
fn missing_config_and_zero_workers_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(otdr(dir.path(), &["coeffs", "--config", "nope.toml"]).status.code(), Some(1));
    let out = otdr(dir.path(), &["coeffs", "--workers", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--workers"));
}

#[test]
fn failing_invariant_exits_two() {
    // descending sizes make the Szegő gap grow along n_list
    let dir = tempfile::tempdir().unwrap();
    let text = NULL_CONFIG
        .replace("position = 2\ntau = 0.95", "position = 2\ntau = 0.5")
        .replace("[mc]", "[numerics]\nn_list = [400, 50]\n\n[mc]");
    fs::write(dir.path().join("c.toml"), text).unwrap();
    let out = otdr(dir.path(), &["verify", "--config", "c.toml", "--out", "res"]);
    assert_eq!(out.status.code(), Some(2));
    let csv = fs::read_to_string(dir.path().join("res/verify.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("szego_monotone_steps_up,") && l.contains(",fail,")), "{csv}");
}

#[test]
fn default_run_writes_into_configured_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = otdr(dir.path(), &["coeffs"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out/coeffs.csv")).unwrap();
    // header, then 201 delays for the single attack
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "attack_index,index,a_baseline,a_attacked,c,g");
    assert_eq!(data.len(), 1 + 201);
    assert!(String::from_utf8_lossy(&out.stderr).contains("wrote"));
    let quiet = otdr(dir.path(), &["coeffs", "--quiet"]);
    assert!(quiet.stderr.is_empty());
}

#[test]
fn seed_override_changes_sampling_only() {
    let mut config = parse_config(NULL_CONFIG).unwrap();
    let region_a = execute(Sub::Region, &config).unwrap();
    let mc_a = execute(Sub::Mc, &config).unwrap();
    config.mc.seed = 99;
    assert_eq!(execute(Sub::Region, &config).unwrap().artifacts, region_a.artifacts);
    assert_ne!(execute(Sub::Mc, &config).unwrap().artifacts, mc_a.artifacts);
}

#[test]
fn spectrum_and_coeffs_cover_grids() {
    let text = format!("{NULL_CONFIG}\n[[attack_grids]]\nposition = 3\ntau = [0.2, 0.4]\ntheta = [0.1]\n");
    let config = parse_config(&text).unwrap();
    let out = execute(Sub::Coeffs, &config).unwrap();
    let rows = out.artifacts[0].text().lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 3 * 9);
    let spectrum = execute(Sub::Spectrum, &config).unwrap();
    let names: Vec<&str> = spectrum.artifacts.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(names, ["spectrum.csv", "spectrum_summary.csv"]);
}

fn fiber() -> impl Strategy<Value = FiberSpec> {
    (1usize..6).prop_flat_map(|l| {
        let uniform = (0.01f64..=1.0, 0.0f64..=1.0).prop_map(move |(t, h)| (vec![t; l], vec![h; l]));
        let listed = (prop::collection::vec(0.01f64..=1.0, l), prop::collection::vec(0.0f64..=1.0, l));
        (prop_oneof![uniform, listed], 0.0f64..1e8)
            .prop_map(|((tau, theta), energy)| FiberSpec::new(tau, theta, energy).unwrap())
    })
}

fn scenario() -> impl Strategy<Value = ScenarioConfig> {
    fiber().prop_flat_map(|f| {
        let l = f.blocks();
        let pick = (1..=l, 0.0f64..=1.0, 0.0f64..=1.0);
        let attacks = prop::collection::vec(pick.clone(), 1..4);
        let grids = prop::collection::vec(
            (1..=l, prop::collection::vec(0.0f64..=1.0, 1..3), prop::collection::vec(0.0f64..=1.0, 1..3)),
            0..2,
        );
        let mc = (2u64..10_000_000, 0u64..=i64::MAX as u64, 1usize..16, 1usize..200, 0usize..40);
        (Just(f), attacks, grids, mc, 100usize..5000, "[a-z]{1,8}(/[a-z0-9_]{1,8})?").prop_map(
            |(f, attacks, grids, (samples, seed, workers, pulses, scenarios), limit, dir)| {
                let scale = |p: usize, s: f64| f.tau()[p - 1] * s;
                ScenarioConfig {
                    attacks: attacks.iter().map(|&(p, s, h)| AttackSpec::new(p, scale(p, s), h)).collect(),
                    attack_grids: grids
                        .iter()
                        .map(|(p, taus, thetas)| AttackGrid {
                            position: *p,
                            tau: taus.iter().map(|&s| scale(*p, s)).collect(),
                            theta: thetas.clone(),
                        })
                        .collect(),
                    numerics: Numerics {
                        dense_n_limit: limit,
                        n_list: vec![limit.min(37), limit],
                        exponent_n: limit,
                        ..Numerics::default()
                    },
                    mc: MonteCarlo {
                        samples,
                        seed,
                        workers,
                        n_list: vec![1, limit / 2],
                        homodyne_pulses: pulses,
                        calibration_scenarios: scenarios,
                    },
                    output_directory: dir.into(),
                    fiber: f,
                }
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn emit_then_parse_is_identity(config in scenario()) {
        let text = emit_config(&config).unwrap();
        prop_assert_eq!(parse_config(&text).unwrap(), config);
    }
}
