use std::path::PathBuf;
use std::process::{Command, Output};

fn network(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "networks", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn crnmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crnmix"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn certify_exit_codes() {
    let ok = crnmix(&["certify", &network("network5.crn")]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("Thm3.1-conservative"));

    let json = crnmix(&["certify", &network("network5.crn"), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["class_label"], "Thm3.1-conservative");

    let no = crnmix(&["certify", &network("threeA.crn")]);
    assert_eq!(no.status.code(), Some(4));
    let text = stdout(&no) + &String::from_utf8_lossy(&no.stderr);
    assert!(text.contains("not binary"), "{text}");
}

#[test]
fn tiers_table() {
    let o = crnmix(&["tiers", &network("ex45.crn"), "--profile", "A:n, B:0"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let l2a = s.find("2A").unwrap();
    let l0 = s.rfind('0').unwrap();
    assert!(l2a < l0, "{s}");
}

#[test]
fn usage_and_input_errors() {
    assert_eq!(crnmix(&["certify"]).status.code(), Some(1));
    assert_eq!(crnmix(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        crnmix(&["simulate", &network("network5.crn"), "--x0", "1,1,1", "--t", "1", "--replicates", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(crnmix(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.crn");
    std::fs::write(&bad, "A + -> B\n").unwrap();
    let o = crnmix(&["certify", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let missing = dir.path().join("missing.crn");
    assert_eq!(crnmix(&["certify", missing.to_str().unwrap()]).status.code(), Some(2));

    let o = crnmix(&["simulate", &network("network5.crn"), "--x0", "1,1", "--t", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oversized_drift_box_is_a_resource_error() {
    let o = crnmix(&["drift", &network("network5.crn"), "--box", "100000"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn simulation_output_is_independent_of_threads() {
    let base = [
        "simulate",
        &network("network5.crn"),
        "--x0",
        "3,0,2",
        "--t",
        "1.5",
        "--replicates",
        "3000",
        "--seed",
        "11",
    ];
    let one = crnmix(&[&base[..], &["--threads", "1"]].concat());
    let two = crnmix(&[&base[..], &["--threads", "2"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert!(stdout(&one).starts_with("A,B,C,count,frequency"));
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn mixing_writes_files_with_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let args = |threads: &'static str, out: &str| {
        crnmix(&[
            "mixing",
            &network("network5.crn"),
            "--m-list",
            "1,3",
            "--t-grid",
            "0:3:0.5",
            "--replicates",
            "2000",
            "--box",
            "60",
            "--eps",
            "0.2",
            "--threads",
            threads,
            "--out",
            out,
        ])
    };
    let o = args("1", out.to_str().unwrap());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
    let curve = std::fs::read_to_string(out.join("mixing_curve.csv")).unwrap();
    let summary = std::fs::read_to_string(out.join("mixing_summary.csv")).unwrap();
    assert!(curve.starts_with("t,tv,tv_conservative,m,replicates"));
    assert_eq!(summary.lines().count(), 3);

    let out2 = dir.path().join("run2");
    args("2", out2.to_str().unwrap());
    assert_eq!(curve, std::fs::read_to_string(out2.join("mixing_curve.csv")).unwrap());
}

#[test]
fn stationary_and_drift_json() {
    let o = crnmix(&["stationary", &network("network5.crn"), "--guess", "3,0.5,2", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pi_kind"], "product-poisson");

    let o = crnmix(&["drift", &network("network6.crn"), "--box", "12", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["b"].as_f64().unwrap().is_finite());
}

#[test]
fn selftest_passes() {
    let o = crnmix(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
