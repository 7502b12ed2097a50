use dispersive_lab::config::{ConfigError, Equation, ExperimentConfig};

fn field_of(text: &str) -> &'static str {
    match ExperimentConfig::from_toml(text) {
        Err(ConfigError::Field { field, .. }) => field,
        other => panic!("expected a field error, got {other:?}"),
    }
}

#[test]
fn minimal_config_takes_defaults() {
    let cfg = ExperimentConfig::from_toml("scenario = \"apriori\"").unwrap();
    assert_eq!(cfg, ExperimentConfig::for_scenario("apriori"));
    assert_eq!(cfg.equation, Equation::Mbo);
}

#[test]
fn nested_sections_parse() {
    let cfg = ExperimentConfig::from_toml(
        r#"
        scenario = "estimates"
        equation = "dnls"
        lambdas = [1.0, 2.0]
        [ensemble]
        seed = 3
        count = 5
        law = "gaussian"
        [estimates]
        list = ["bilinear"]
        ns = [3, 4, 5]
        "#,
    )
    .unwrap();
    assert_eq!(cfg.equation, Equation::Dnls);
    assert_eq!(cfg.ensemble.count, 5);
    assert_eq!(cfg.estimates.ns, vec![3, 4, 5]);
}

#[test]
fn errors_name_the_offending_field() {
    assert_eq!(field_of("scenario = \"nope\""), "scenario");
    assert_eq!(field_of("scenario = \"energy\"\ns = 0.25"), "s");
    assert_eq!(field_of("scenario = \"apriori\"\ngrid = 100"), "grid");
    assert_eq!(field_of("scenario = \"apriori\"\nsigma = 0.5"), "sigma");
    assert_eq!(field_of("scenario = \"apriori\"\nlambdas = []"), "lambdas");
    assert_eq!(field_of("scenario = \"apriori\"\nmax_mode = 64"), "max_mode");
    assert_eq!(field_of("scenario = \"estimates\"\n[estimates]\nlist = [\"l5\"]"), "estimates.list");
    assert_eq!(field_of("scenario = \"trilinear\"\n[trilinear]\nclasses = [\"vii\"]"), "trilinear.classes");
    assert_eq!(field_of("scenario = \"apriori\"\n[ensemble]\ncount = 0"), "ensemble.count");
}

#[test]
fn unknown_keys_and_bad_types_are_parse_errors() {
    for text in ["scenario = \"apriori\"\ngird = 64", "scenario = \"apriori\"\ngrid = \"big\"", "scenario = "] {
        let err = ExperimentConfig::from_toml(text).unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)), "{text:?} gave {err:?}");
    }
    let msg = ExperimentConfig::from_toml("scenario = \"apriori\"\ngird = 64").unwrap_err().to_string();
    assert!(msg.contains("gird"), "{msg}");
}

#[test]
fn every_criterion_is_a_scenario() {
    for n in 1..=10 {
        ExperimentConfig::for_scenario(&format!("criterion-{n}")).validate().unwrap();
    }
}

#[test]
fn shipped_configs_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
