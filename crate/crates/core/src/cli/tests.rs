use super::*;

const TONKS: &str = r#"
[potential]
kind = "hard_rod"
d = 1.0

[thermo]
drive = { density = 0.2 }

[tabulate]
x_min = 0.5
x_max = 3.0
points = 5

[residuals]
suites = ["tonks"]
n = [1, 2, 3]
configs = 3
"#;

const SOFT: &str = r#"
[potential]
kind = "soft_core"
d = 1.0
epsilon = 0.2

[thermo]
beta = 1.0
nu = 1
drive = { activity = 0.05 }

[mayer]
p_max = 2

[tabulate]
x_min = 0.0
x_max = 2.0
points = 4

[hclimit]
epsilons = [0.2]
x_min = 1.5
x_max = 1.5
points = 1
"#;

fn cfg(text: &str) -> RunConfig {
    RunConfig::parse(text).unwrap()
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn tonks_preset_tabulates_every_grid_point() {
    let c = cfg(TONKS);
    let out = cmd_tabulate(&c).unwrap();
    assert_eq!(out.code, EXIT_PASS);
    let rows = data_rows(&out.stdout);
    assert_eq!(rows.len(), 5);
    assert!(out.stdout.lines().any(|l| l == "x,rho2,uncertainty,flagged"));
    assert!(out.stdout.starts_with("# reduced units, d = 1\n"));
    // inside the core the pair function vanishes
    assert!(rows[0].starts_with("5.0000000000000000e-1,0.0000000000000000e0,"));
    assert_eq!(out, cmd_tabulate(&c).unwrap());
}

#[test]
fn series_outside_the_radius_is_flagged() {
    let c = cfg(&SOFT.replace("activity = 0.05", "activity = 0.5"));
    let out = cmd_tabulate(&c).unwrap();
    assert_eq!(out.code, EXIT_FLAGGED);
    assert!(data_rows(&out.stdout).iter().all(|r| r.ends_with(",true")));
    let ok = cmd_tabulate(&cfg(SOFT)).unwrap();
    assert_eq!(ok.code, EXIT_PASS);
    assert_eq!(data_rows(&ok.stdout).len(), 4);
}

#[test]
fn tonks_suite_certifies() {
    let out = cmd_certify(&cfg(TONKS)).unwrap();
    assert_eq!(out.code, EXIT_PASS, "{}", out.stdout);
    let doc: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(doc["summary"]["total"], 27);
    assert_eq!(doc["summary"]["failed"], 0);
    let eqs: Vec<&str> = doc["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["equation"].as_str().unwrap())
        .collect();
    assert!(eqs.contains(&"hardrod_hierarchy") && eqs.contains(&"extracted_constant") && eqs.contains(&"hardcore_KS"));
}

#[test]
fn corrupted_activity_fails_the_ks_check() {
    let z = 1.5 * 0.25 * 0.25f64.exp();
    let text = TONKS.replace("configs = 3", &format!("configs = 3\nactivity = {z}"));
    let out = cmd_certify(&cfg(&text)).unwrap();
    assert_eq!(out.code, EXIT_FAIL);
    let doc: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    for r in doc["reports"].as_array().unwrap() {
        let ks = r["equation"] == "hardcore_KS";
        assert_eq!(r["pass"].as_bool().unwrap(), !ks, "{r}");
    }
}

#[test]
fn empty_suite_is_a_config_error() {
    let text = TONKS.replace(r#"suites = ["tonks"]"#, "suites = []");
    assert!(matches!(cmd_certify(&cfg(&text)), Err(Error::Config(_))));
    let soft = cfg(SOFT);
    assert!(matches!(cmd_certify(&soft), Err(Error::Config(_))));
}

#[test]
fn soft_core_suites_certify() {
    let text = format!("{SOFT}\n[residuals]\nsuites = [\"ks\", \"bbgky\", \"coefficients\"]\nconfigs = 1\n");
    let out = cmd_certify(&cfg(&text)).unwrap();
    assert_eq!(out.code, EXIT_PASS, "{}", out.stdout);
}

#[test]
fn config_validation() {
    let bad = |t: &str| matches!(RunConfig::parse(t), Err(Error::Config(_)));
    assert!(bad(&TONKS.replace("[tabulate]", "[tabulate]\ncolour = 1")));
    assert!(bad(&TONKS.replace("d = 1.0", "d = -1.0")));
    assert!(bad(&TONKS.replace("density = 0.2", "density = 0.0")));
    assert!(bad(&SOFT.replace("beta = 1.0", "beta = 0.0")));
    assert!(bad(&SOFT.replace("epsilons = [0.2]", "epsilons = [0.1, 0.2]")));
    assert!(bad("not toml ["));
}

#[test]
fn hclimit_single_softness_gives_one_row() {
    let out = cmd_hclimit(&cfg(SOFT)).unwrap();
    assert_eq!(out.code, EXIT_PASS);
    assert_eq!(data_rows(&out.stdout).len(), 1);
    assert!(out.stdout.lines().last().unwrap().starts_with("# summary {"));
    let dens = cfg(&SOFT.replace("points = 1\n", "points = 1\ndrive = { density = 0.05 }\n"));
    let out = cmd_hclimit(&dens).unwrap();
    assert!(out
        .stdout
        .lines()
        .any(|l| l == "epsilon,z,x,rho2_eps,rho2_hard,abs_error,budget"));
}

#[test]
fn json_commands() {
    let h: serde_json::Value = serde_json::from_str(&cmd_hardrod(&cfg(TONKS)).unwrap().stdout).unwrap();
    assert!((h["R"].as_f64().unwrap() - 0.25).abs() < 1e-14);
    assert!((h["z"].as_f64().unwrap() - 0.25 * 0.25f64.exp()).abs() < 1e-14);
    assert!(cmd_hardrod(&cfg(SOFT)).is_err());

    let b = cmd_bounds(&cfg(SOFT)).unwrap();
    assert_eq!(b.code, EXIT_PASS);
    let b: serde_json::Value = serde_json::from_str(&b.stdout).unwrap();
    assert_eq!(b["tails"].as_array().unwrap().len(), 3);

    let inv = cmd_invert(&cfg(&SOFT.replace("activity = 0.05", "density = 0.04"))).unwrap();
    let inv: serde_json::Value = serde_json::from_str(&inv.stdout).unwrap();
    let z = inv["z"].as_f64().unwrap();
    assert!(z > 0.04 && z < 0.05, "{z}");
}

#[test]
fn thread_count_parsing() {
    assert!(pool_from(None).is_ok());
    assert_eq!(pool_from(Some("2".into())).unwrap().current_num_threads(), 2);
    assert!(pool_from(Some("0".into())).is_err());
    assert!(pool_from(Some("many".into())).is_err());
}

#[test]
fn run_reports_exit_codes() {
    let dir = std::env::temp_dir().join(format!("ksbbgky-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("tonks.toml");
    std::fs::write(&good, TONKS).unwrap();
    let (out, err, code) = run(["ksbbgky", "tabulate", good.to_str().unwrap()]);
    assert_eq!(code, EXIT_PASS, "{err}");
    assert_eq!(data_rows(&out).len(), 5);

    let empty = dir.join("empty.toml");
    std::fs::write(&empty, TONKS.replace(r#"suites = ["tonks"]"#, "suites = []")).unwrap();
    let (_, err, code) = run(["ksbbgky", "certify", empty.to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.starts_with("error: config error"), "{err}");

    assert_eq!(
        run(["ksbbgky", "bounds", dir.join("missing.toml").to_str().unwrap()]).2,
        EXIT_CONFIG
    );
    assert_eq!(run(["ksbbgky", "frobnicate"]).2, EXIT_CONFIG);
    assert_eq!(run(["ksbbgky", "tabulate", "a.toml", "extra"]).2, EXIT_CONFIG);
    assert_eq!(run(["ksbbgky", "--help"]).2, EXIT_PASS);
    std::fs::remove_dir_all(&dir).unwrap();
}
