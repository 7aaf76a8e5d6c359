use modint_cli::{parse_config, CliError, Scenario};

const VALIDATION: &str = r#"
[grid]
length = 400.0
nx = 400

[material]
rho = 1200.0
c = 2800.0
x0 = 200.0

[interface]
stiffness = 2.45e9

[modulation]
kind = "sinusoidal"
f_m = 100.0
eps_c = 0.75

[source]
f_c = 45.0
front = 172.0
"#;

#[test]
fn validation_setup_time_step() {
    let cfg = parse_config(VALIDATION).unwrap();
    assert!((cfg.dt() - 3.3929e-4).abs() < 1e-8, "{}", cfg.dt());
    assert!((cfg.setup.law.base.compliance - 1.0 / 2.45e9).abs() < 1e-24);
    assert_eq!(cfg.setup.law.depth.compliance, 0.75);
    assert_eq!(cfg.setup.law.depth.inertia, 0.0);
}

#[test]
fn courant_number_above_one_names_its_line() {
    let text = VALIDATION.replace("nx = 400", "nx = 400\nzeta = 1.2");
    match parse_config(&text) {
        Err(CliError::ConfigAt { line, message }) => {
            assert_eq!(line, 5, "{message}");
            assert!(message.contains("zeta"), "{message}");
        }
        other => panic!("expected a located error, got {other:?}"),
    }
}

#[test]
fn unknown_keys_and_bad_types_are_located() {
    let text = VALIDATION.replace("f_c = 45.0", "f_c = 45.0\ncolour = \"red\"");
    assert!(matches!(parse_config(&text), Err(CliError::ConfigAt { line: 21, .. })));
    let text = VALIDATION.replace("nx = 400", "nx = \"many\"");
    assert!(matches!(parse_config(&text), Err(CliError::ConfigAt { line: 4, .. })));
}

#[test]
fn source_position_is_exclusive() {
    let text = VALIDATION.replace("front = 172.0", "front = 172.0\nx_s = 100.0");
    assert!(parse_config(&text).is_err());
    let text = VALIDATION.replace("front = 172.0", "");
    assert!(parse_config(&text).is_err());
}

#[test]
fn every_preset_passes_its_own_checks() {
    for s in Scenario::ALL {
        s.preset_config().check().unwrap();
    }
}
