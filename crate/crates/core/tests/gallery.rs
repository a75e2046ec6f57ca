use std::path::Path;

use anosov_lab::config::ExperimentConfig;
use anosov_lab::group::ping_pong_certificate;

fn configs() -> Vec<(String, ExperimentConfig)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("gallery");
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), ExperimentConfig::load(&p).unwrap()))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[test]
fn gallery_configs_validate_and_round_trip() {
    let all = configs();
    assert!(all.len() >= 5);
    for (name, cfg) in all {
        cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, cfg, "{name}");
    }
}

#[test]
fn configured_ping_pong_domains_certify() {
    for (name, cfg) in configs() {
        if let Some(domains) = cfg.pingpong().unwrap() {
            let report = ping_pong_certificate(&cfg.presentation().unwrap(), &domains).unwrap();
            assert!(report.certified, "{name}: {report:?}");
        }
    }
}
