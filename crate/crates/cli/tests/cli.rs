use std::path::Path;
use std::process::{Command, Output};

fn netrel(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netrel"))
        .arg("--config")
        .arg(dir.join("run.toml"))
        .args(args)
        .output()
        .unwrap()
}

fn setup(extra: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let net = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/grid16/network.toml");
    std::fs::copy(net, dir.path().join("network.toml")).unwrap();
    let cfg = format!(
        "network = \"network.toml\"\nobservations = [\"out/observations.csv\"]\nschedule = \"out/schedule.toml\"\n\
         out_dir = \"out\"\nseed = 5\n[mc]\nn_samples = 1000\n[simulate]\nlink_days = 40\nroute_days = 24\n{extra}"
    );
    std::fs::write(dir.path().join("run.toml"), cfg).unwrap();
    dir
}

fn ok(o: &Output) {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn reliability_without_fit_fails_cleanly() {
    let dir = setup("");
    ok(&netrel(dir.path(), &["simulate"]));
    let o = netrel(dir.path(), &["reliability", "--route", "1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("fit-inline"));
    assert!(!dir.path().join("out/reliability.txt").exists());
    assert!(!dir.path().join("out/pmf_route_1.csv").exists());
}

#[test]
fn invalid_route_leaves_no_partial_output() {
    let dir = setup("");
    ok(&netrel(dir.path(), &["simulate"]));
    ok(&netrel(dir.path(), &["estimate"]));
    let o = netrel(dir.path(), &["reliability", "--route", "1", "--route", "A,P"]);
    assert!(!o.status.success());
    let leftovers: Vec<_> = std::fs::read_dir(dir.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("pmf_") || n.starts_with("reliability") || n.starts_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn ad_hoc_route_and_zero_sigma() {
    let dir = setup("");
    ok(&netrel(dir.path(), &["simulate"]));
    ok(&netrel(dir.path(), &["reliability", "--fit-inline", "--route", "M,I,J,F,G", "--zero-sigma"]));
    let table = std::fs::read_to_string(dir.path().join("out/reliability.txt")).unwrap();
    assert!(table.contains("route_M-I-J-F-G"));
    assert!(table.contains("Planning time index"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/reliability.json")).unwrap()).unwrap();
    let unc = &json["route_M-I-J-F-G"]["uncertainty"];
    let (h1, h2) = (unc["h1_hat"].as_f64().unwrap(), unc["h2_hat"].as_f64().unwrap());
    let p95 = json["route_M-I-J-F-G"]["measures"]["pct95_s"].as_f64().unwrap();
    let closed = (h1 + 1.6449 * h2.sqrt()).exp();
    assert!((p95 - closed).abs() / closed < 0.01, "{p95} vs {closed}");
}

#[test]
fn estimate_link_only_matches_sample_means() {
    let dir = setup("");
    ok(&netrel(dir.path(), &["simulate"]));
    let csv = std::fs::read_to_string(dir.path().join("out/observations.csv")).unwrap();
    let links_only: String = csv.lines().filter(|l| !l.starts_with("route,")).map(|l| format!("{l}\n")).collect();
    std::fs::write(dir.path().join("out/observations.csv"), links_only).unwrap();
    ok(&netrel(dir.path(), &["estimate"]));
    let table = std::fs::read_to_string(dir.path().join("out/estimates.txt")).unwrap();
    assert!(table.starts_with("Link No. | Sample Mean |    MLE | Relative Difference"));
    for row in table.lines().skip(2).take(46) {
        let cols: Vec<&str> = row.split('|').map(str::trim).collect();
        assert_eq!(cols[1], cols[2], "{row}");
    }
}

#[test]
fn validate_and_independence_reports() {
    let dir = setup("[validate]\nroute = 2\n");
    ok(&netrel(dir.path(), &["simulate"]));
    ok(&netrel(dir.path(), &["validate"]));
    let v = std::fs::read_to_string(dir.path().join("out/validation.txt")).unwrap();
    for row in ["Our method (MLE)", "Training data", "Testing data"] {
        assert!(v.contains(row));
    }
    ok(&netrel(dir.path(), &["test-independence"]));
    let summary = std::fs::read_to_string(dir.path().join("out/independence.txt")).unwrap();
    assert!(summary.contains("pairs tested"));
    let csv = std::fs::read_to_string(dir.path().join("out/independence.csv")).unwrap();
    assert!(csv.starts_with("link_i,link_j,shared_days,p_value"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = setup("[solver]\nbogus = 1\n");
    let o = netrel(dir.path(), &["simulate"]);
    assert!(!o.status.success());
}
