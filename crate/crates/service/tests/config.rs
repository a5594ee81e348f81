use std::collections::HashMap;
use std::path::PathBuf;

use clay_core::backends::BackendKind;
use clay_service::config::ClockKind;
use clay_service::{CliError, Overrides, ServiceConfig};

fn env(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
    let map: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    move |k| map.get(k).cloned()
}

#[test]
fn cli_beats_env_beats_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("clay.toml");
    std::fs::write(
        &file,
        r#"
bind = "127.0.0.1:1000"
data_dir = "from-file"
concurrency = 2

[workflow.composition]
tile_count = 8
"#,
    )
    .unwrap();

    let cfg = ServiceConfig::resolve(Some(&file), env(&[]), &Overrides::default()).unwrap();
    assert_eq!((cfg.bind.as_str(), cfg.concurrency), ("127.0.0.1:1000", 2));
    assert_eq!(cfg.workflow.composition.tile_count, 8);
    assert_eq!(cfg.workflow.composition.variant_count, 4);

    let e = env(&[("CLAY_BIND", "127.0.0.1:2000"), ("CLAY_DATA_DIR", "from-env"), ("CLAY_CLOCK", "logical")]);
    let cfg = ServiceConfig::resolve(Some(&file), &e, &Overrides::default()).unwrap();
    assert_eq!((cfg.bind.as_str(), cfg.data_dir.clone()), ("127.0.0.1:2000", PathBuf::from("from-env")));
    assert_eq!(cfg.clock, ClockKind::Logical);

    let flags = Overrides { bind: Some("127.0.0.1:3000".into()), ..Overrides::default() };
    let cfg = ServiceConfig::resolve(Some(&file), &e, &flags).unwrap();
    assert_eq!(cfg.bind, "127.0.0.1:3000");
    assert_eq!(cfg.data_dir, PathBuf::from("from-env"));
}

#[test]
fn defaults_are_offline() {
    let cfg = ServiceConfig::resolve(None, env(&[]), &Overrides::default()).unwrap();
    assert_eq!((cfg.chat.kind, cfg.image.kind), (BackendKind::Mock, BackendKind::Mock));
    let dir = tempfile::tempdir().unwrap();
    let store = std::sync::Arc::new(clay_service::FsStore::open(dir.path()).unwrap());
    assert!(cfg.build_engine(store).is_ok());
}

#[test]
fn remote_without_credential_fails_at_startup() {
    let e = env(&[
        ("CLAY_BACKEND", "remote"),
        ("CLAY_CHAT_URL", "http://127.0.0.1:9/v1"),
        ("CLAY_IMAGE_URL", "http://127.0.0.1:9/v1"),
        ("CLAY_CREDENTIAL_ENV", "CLAY_TEST_CREDENTIAL_THAT_IS_NOT_SET"),
    ]);
    let cfg = ServiceConfig::resolve(None, e, &Overrides::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let store = std::sync::Arc::new(clay_service::FsStore::open(dir.path()).unwrap());
    match cfg.build_engine(store) {
        Err(CliError::Config(m)) => assert!(m.contains("CLAY_TEST_CREDENTIAL_THAT_IS_NOT_SET"), "{m}"),
        Err(other) => panic!("unexpected {other}"),
        Ok(_) => panic!("engine built without a credential"),
    }
}

#[test]
fn bad_values_are_configuration_errors() {
    assert!(matches!(ServiceConfig::from_toml("bind = 3"), Err(CliError::Config(_))));
    let bad_backend = Overrides { backend: Some("carrier-pigeon".into()), ..Overrides::default() };
    assert!(matches!(ServiceConfig::resolve(None, env(&[]), &bad_backend), Err(CliError::Config(_))));
    assert!(matches!(
        ServiceConfig::resolve(None, env(&[("CLAY_BACKEND", "remote")]), &Overrides::default()),
        Err(CliError::Config(_))
    ));
    assert!(matches!(Overrides::from_env(env(&[("CLAY_CLOCK", "sundial")])), Err(CliError::Config(_))));
    let dir = tempfile::tempdir().unwrap();
    let tax = dir.path().join("t.json");
    std::fs::write(&tax, "{\"version\": \"1\", \"styles\": []}").unwrap();
    let cfg = ServiceConfig { taxonomy: Some(tax), ..ServiceConfig::default() };
    assert!(matches!(cfg.load_taxonomy(), Err(CliError::Config(_))));
}
