use std::process::Command;

use taupsd::harness::corpus::{parse, Space};
use taupsd::harness::{
    convergence_study, corpus, corpus_manifest, run, Experiment, ExperimentConfig, GridSpec, Status, TauSpec,
};
use taupsd::Error;

fn hs_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Experiment::HsIdentity);
    cfg.grid = Some(GridSpec::new(1, 64, 10.0));
    cfg.symbols = vec!["gauss(sigma=1)".into()];
    cfg
}

#[test]
fn hs_identity_gaussian_ratio() {
    let report = run(&hs_config()).unwrap();
    assert!(report.passed());
    let target = (2.0 * std::f64::consts::PI).powf(-0.5);
    for tau in ["kn", "weyl", "adjoint"] {
        let row = report
            .row(&format!("hs-identity/n=1/gauss(sigma=1)/tau={tau}"))
            .unwrap();
        assert_eq!(row.status, Status::Pass);
        assert!((row.measured - 0.399).abs() < 1e-3, "{}", row.measured);
        assert!((row.measured - target).abs() < 1e-6 * target, "{}", row.measured);
    }
}

#[test]
fn factorize_weyl_residual() {
    let mut cfg = ExperimentConfig::new(Experiment::Factorize);
    cfg.tau = vec![TauSpec::Preset("weyl".into())];
    cfg.symbols = vec!["gauss(sigma=1)".into(), "bracket(m=-3)".into()];
    let report = run(&cfg).unwrap();
    assert!(report.passed());
    let rows: Vec<_> = report.rows_with_prefix("factorize/").collect();
    // both factorizations hold at tau = 1/2
    assert_eq!(rows.len(), 2 * 2 * 2);
    for r in rows {
        assert!(r.check.ends_with("/tau=weyl"));
        assert!(r.measured < 1e-8, "{}: {}", r.check, r.measured);
    }
}

#[test]
fn schatten_requires_p_list() {
    let cfg = ExperimentConfig::new(Experiment::Schatten);
    match run(&cfg) {
        Err(Error::Config { path, .. }) => assert_eq!(path, "p_list"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn config_errors_carry_field_paths() {
    let err = ExperimentConfig::from_json_str(r#"{"experiment":"cordes","symbols":["gauss(sigma=1)","nope(x=1)"]}"#)
        .unwrap_err();
    assert!(
        matches!(&err, Error::Config { path, .. } if path == "symbols[1]"),
        "{err}"
    );
    let err = ExperimentConfig::from_json_str(r#"{"experiment":"cordes","grid":{"dim":1,"N":"x","L":1}}"#).unwrap_err();
    assert!(matches!(&err, Error::Config { path, .. } if path == "grid.N"), "{err}");
    let err = ExperimentConfig::from_json_str(r#"{"experiment":"warp"}"#).unwrap_err();
    assert!(
        matches!(&err, Error::Config { path, .. } if path == "experiment"),
        "{err}"
    );
}

#[test]
fn tau_presets_expand_to_scalars() {
    let mut cfg = ExperimentConfig::new(Experiment::Kernel);
    cfg.tau = vec![
        TauSpec::Preset("kn".into()),
        TauSpec::Preset("weyl".into()),
        TauSpec::Preset("adjoint".into()),
    ];
    let taus = cfg.taus(2, false).unwrap();
    let expected = [0.0, 0.5, 1.0];
    for ((_, t), want) in taus.iter().zip(expected) {
        assert_eq!(t.apply(&[1.0, -2.0]), vec![want, -2.0 * want]);
    }
}

#[test]
fn corpus_lookup() {
    let g = parse("gauss(sigma=1)").unwrap();
    assert_eq!(g.spaces(), vec![Space::X, Space::XStar, Space::Phase]);
    assert!(matches!(parse("nosuch(a=1)"), Err(Error::Lookup(_))));
    assert!(matches!(parse("gauss(width=1)"), Err(Error::Lookup(_))));
    // the typographic minus is accepted
    assert_eq!(parse("bracket(m=\u{2212}3)").unwrap(), parse("bracket(m=-3)").unwrap());
}

#[test]
fn bracket_certified_degree() {
    let b = parse("bracket(m=-3)").unwrap();
    assert_eq!(b.degree(), Some(-3.0));
    let certs = b.certify().unwrap();
    assert!(!certs.is_empty());
    assert!(certs.iter().all(|c| c.certified && c.degree == -3.0), "{certs:?}");
}

#[test]
fn corpus_covers_required_families() {
    let refs: Vec<String> = corpus().iter().map(|e| e.to_string()).collect();
    for m in [-5, -4, -3, -2, -1, 0, 1, 2] {
        assert!(refs.contains(&format!("bracket(m={m})")), "bracket {m} missing");
    }
    for r in ["gauss(sigma=1)", "window(c=1,R=2)", "borderline", "cordes(t=2,s=2)"] {
        assert!(refs.iter().any(|x| x == r), "{r} missing");
    }
    assert!(refs.iter().filter(|r| r.starts_with("modgauss(")).count() >= 4);
    let manifest = corpus_manifest().unwrap();
    assert_eq!(manifest.len(), refs.len());
    for m in &manifest {
        assert!(
            m.certification.iter().all(|c| c.certified),
            "{}: {:?}",
            m.reference,
            m.certification
        );
    }
}

#[test]
fn convergence_single_level_has_no_drift() {
    let report = convergence_study(&hs_config(), &[32]).unwrap();
    assert!(report.rows.iter().all(|r| r.check.starts_with("N=32/")));
    assert_eq!(report.provenance.levels, Some(vec![32]));
}

#[test]
fn convergence_hs_error_decreases() {
    let mut cfg = hs_config();
    cfg.tau = vec![TauSpec::Preset("weyl".into())];
    let report = convergence_study(&cfg, &[32, 64, 128]).unwrap();
    let errors: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|n| {
            let ratio = report
                .row(&format!("N={n}/hs-identity/n=1/gauss(sigma=1)/tau=weyl"))
                .unwrap()
                .measured;
            (ratio / (2.0 * std::f64::consts::PI).powf(-0.5) - 1.0).abs()
        })
        .collect();
    assert!(errors[1] < errors[0] || errors[1] < 1e-12, "{errors:?}");
    assert!(errors[2] < errors[1] || errors[2] < 1e-12, "{errors:?}");
    assert!(report.rows.iter().any(|r| r.check.starts_with("drift/")));
}

#[test]
fn convergence_trace_norm_drift() {
    let mut cfg = ExperimentConfig::new(Experiment::Cordes);
    cfg.tau = vec![TauSpec::Preset("kn".into())];
    cfg.params.insert("levels".into(), serde_json::json!([]));
    let report = convergence_study(&cfg, &[64, 128]).unwrap();
    let drift = report
        .rows
        .iter()
        .find(|r| r.check.starts_with("drift/") && r.check.contains("/trace-norm/"))
        .unwrap_or_else(|| {
            panic!(
                "no trace drift row in {:?}",
                report.rows.iter().map(|r| &r.check).collect::<Vec<_>>()
            )
        });
    assert!(drift.measured < 0.05, "{}: {}", drift.check, drift.measured);
}

#[test]
fn convergence_guards() {
    let cfg = ExperimentConfig::new(Experiment::Kernel);
    assert!(matches!(convergence_study(&cfg, &[8192]), Err(Error::Resource(_))));
    assert!(matches!(convergence_study(&cfg, &[64, 32]), Err(Error::Config { .. })));
    assert!(matches!(convergence_study(&cfg, &[]), Err(Error::Config { .. })));
}

#[test]
fn csv_is_deterministic() {
    let mut cfg = ExperimentConfig::new(Experiment::Schatten);
    cfg.p_list = serde_json::from_str(r#"[1, 2, "inf"]"#).unwrap();
    cfg.seed = 11;
    let a = run(&cfg).unwrap().csv_bytes().unwrap();
    let b = run(&cfg).unwrap().csv_bytes().unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("check,measured,target,tolerance,status\n"));
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = hs_config();
    cfg.output = Some(dir.path().join("out"));
    let report = run(&cfg).unwrap();
    let csv = std::fs::read(dir.path().join("out/rows.csv")).unwrap();
    assert_eq!(csv, report.csv_bytes().unwrap());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["experiment"], "hs-identity");
    assert_eq!(json["provenance"]["package"], "taupsd");
    assert_eq!(json["rows"].as_array().unwrap().len(), report.rows.len());
}

#[test]
fn failing_assertion_sets_exit_code() {
    let mut cfg = hs_config();
    cfg.tolerances.insert("hs_rel".into(), 0.0);
    cfg.symbols = vec!["bracket(m=-1)".into()];
    let report = run(&cfg).unwrap();
    assert!(!report.passed());
    assert_eq!(report.exit_code(), 1);
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_taupsd"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(
        &good,
        r#"{"experiment":"hs-identity","grid":{"dim":1,"N":32,"L":8},"symbol":"gauss(sigma=1)"}"#,
    )
    .unwrap();
    let out = cli()
        .args(["hs-identity", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("o/report.json").exists());

    let out = cli().args(["schatten"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p_list"));

    let out = cli().args(["cordes", "--config"]).arg(&good).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = cli().args(["kernel", "--levels", "8192"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));

    let out = cli().args(["corpus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let manifest: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(manifest.as_array().unwrap().len() >= 15);
}

#[test]
fn schema_matches_config_types() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/docs/config.schema.json")).unwrap();
    let schema: serde_json::Value = serde_json::from_str(&text).unwrap();
    let names: Vec<&str> = schema["properties"]["experiment"]["enum"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    let expected: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
    assert_eq!(names, expected);

    for (e, rule) in Experiment::ALL.iter().zip(schema["allOf"].as_array().unwrap()) {
        assert_eq!(rule["if"]["properties"]["experiment"]["const"], e.name());
        let mut keys: Vec<&str> = rule["then"]["properties"]["params"]["properties"]
            .as_object()
            .unwrap()
            .keys()
            .map(String::as_str)
            .collect();
        let mut want = e.param_keys().to_vec();
        keys.sort_unstable();
        want.sort_unstable();
        assert_eq!(keys, want, "{e}");
    }

    let mut tols: Vec<&str> = schema["properties"]["tolerances"]["properties"]
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    let mut want: Vec<&str> = taupsd::tolerances::ALL.iter().map(|t| t.0).collect();
    tols.sort_unstable();
    want.sort_unstable();
    assert_eq!(tols, want);
}

#[test]
fn shipped_configs_load() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/acceptance");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert_eq!(count, 10);
}
