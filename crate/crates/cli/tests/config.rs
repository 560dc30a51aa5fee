use fracns_cli::config::{config_hash, TimeStep};
use fracns_cli::{ExperimentKind, HarnessError, LoadedConfig};
use std::path::Path;

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut kinds = Vec::new();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let l = LoadedConfig::from_path(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            kinds.push(l.config.kind);
        }
    }
    for k in [
        ExperimentKind::EnergyIdentity,
        ExperimentKind::OperatorChecks,
        ExperimentKind::Invariance,
        ExperimentKind::TrivialityScan,
        ExperimentKind::VarthetaLimit,
        ExperimentKind::NoiseEquivalence,
        ExperimentKind::DiffusivityScan,
        ExperimentKind::WeakCoupling2d,
    ] {
        assert!(kinds.contains(&k), "no config for {}", k.name());
    }
}

#[test]
fn partial_sections_take_defaults() {
    let l = LoadedConfig::from_text("kind = \"invariance\"\n[dynamics]\ncutoff = 6.0\n").unwrap();
    let c = &l.config;
    assert_eq!(c.dynamics.cutoff, 6.0);
    assert_eq!(c.dynamics.d, 3);
    assert_eq!(c.dynamics.dt, TimeStep::Auto(fracns_cli::config::AutoTag::Auto));
    assert_eq!(c.ensemble, 16);
    assert_eq!(c.invariance.z_max, 3.0);
}

#[test]
fn fixed_dt_parses_as_number() {
    let l = LoadedConfig::from_text("kind = \"invariance\"\n[dynamics]\ndt = 1e-4\n").unwrap();
    assert_eq!(l.config.dynamics.dt, TimeStep::Fixed(1e-4));
}

#[test]
fn hash_ignores_formatting_but_not_values() {
    let a = LoadedConfig::from_text("kind = \"invariance\"\nseed = 3\n").unwrap();
    let b = LoadedConfig::from_text("# comment\nseed=3\n\nkind=\"invariance\"\n").unwrap();
    let c = LoadedConfig::from_text("kind = \"invariance\"\nseed = 4\n").unwrap();
    assert_eq!(a.hash, b.hash);
    assert_ne!(a.hash, c.hash);
    assert_eq!(a.hash, config_hash(&a.config));
    assert_eq!(a.hash.len(), 64);
}

fn config_err(text: &str) -> String {
    match LoadedConfig::from_text(text) {
        Err(HarnessError::Config(m)) => m,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn rejects_bad_configs() {
    config_err("kind = \"invariance\"\nbogus = 1\n");
    config_err("kind = \"nope\"\n");
    config_err("kind = \"invariance\"\n[dynamics]\nd = 4\n");
    config_err("kind = \"invariance\"\n[dynamics]\ndt = -1.0\n");
    config_err("kind = \"invariance\"\n[dynamics]\ndt = \"sometimes\"\n");
    config_err("kind = \"invariance\"\nensemble = 1\n");
    config_err("kind = \"triviality-scan\"\n");
    let m = config_err("kind = \"weak-coupling-2d\"\n[dynamics]\nd = 3\n");
    assert!(m.contains("d = 2"), "{m}");
    config_err(
        "kind = \"weak-coupling-2d\"\n[dynamics]\nd = 2\n[diffusivity]\nn_values = [16.0]\ndts = [1e-5, 1e-5]\n",
    );
}

#[test]
fn exit_codes() {
    assert_eq!(HarnessError::Config("x".into()).exit_code(), 2);
    assert_eq!(HarnessError::Abort { reason: "x".into(), checkpoint: None }.exit_code(), 3);
    assert_eq!(HarnessError::Io(std::io::Error::other("x")).exit_code(), 1);
    let e: HarnessError = fracns::Error::InvalidParameter("x".into()).into();
    assert_eq!(e.exit_code(), 2);
}
