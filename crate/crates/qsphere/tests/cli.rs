use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use qsphere::codec;
use qsphere_core::uq_actions::Actions;
use qsphere_core::{Exact, SuQ2};

fn qsphere(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsphere"))
        .args(args)
        .env_remove("QSPHERE_CACHE")
        .output()
        .expect("binary runs")
}

fn qsphere_cached(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsphere"))
        .args(args)
        .env("QSPHERE_CACHE", dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", stderr(o));
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn expand_normal_orders() {
    let v = json(&qsphere(&["expand", "--q", "1/2", "--expr", "b*a"]));
    assert_eq!(v["schema"], "qsphere/1");
    assert_eq!(v["command"], "expand");
    let t = &v["result"]["element"][0];
    assert_eq!((t["aExp"].as_i64(), t["bExp"].as_i64(), t["bStarExp"].as_i64()), (Some(1), Some(1), Some(0)));
    assert_eq!((t["coeffNum"].as_i64(), t["coeffDen"].as_i64()), (Some(1), Some(2)));
    assert_eq!(v["result"]["text"], "1/2*a*b");
}

#[test]
fn haar_of_b_bstar() {
    let v = json(&qsphere(&["haar", "--q", "1/2", "--expr", "b*bs"]));
    assert_eq!(v["result"]["value"]["text"], "4/5");
    let o = qsphere(&["haar", "--q", "1/2", "--expr", "b*bs", "--format", "csv"]);
    assert_eq!(stdout(&o), "value\n4/5\n");
}

#[test]
fn float_mode_reports_decimals() {
    let v = json(&qsphere(&["haar", "--q", "1/2", "--expr", "b*bs", "--scalar-mode", "float", "--precision", "20"]));
    let re = v["result"]["value"]["coeffRe"].as_str().unwrap();
    assert!(re.starts_with("0.8"), "{re}");
}

#[test]
fn parse_error_exits_one_with_position() {
    let o = qsphere(&["expand", "--q", "1/2", "--expr", "a +* b"]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.starts_with("error: expression: line 1, column"), "{e}");
    assert!(o.stdout.is_empty());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(qsphere(&["expand", "--q", "3/2", "--expr", "a"]).status.code(), Some(1));
    assert_eq!(qsphere(&["haar", "--q", "1/2"]).status.code(), Some(1));
    assert_eq!(qsphere(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(qsphere(&["verify", "--suite", "nope"]).status.code(), Some(1));
    assert_eq!(qsphere(&["--help"]).status.code(), Some(0));
}

#[test]
fn passing_suite_exits_zero() {
    let o = qsphere(&["verify", "--suite", "hopf", "--degree", "2", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("check,status,residual,count\n"));
}

#[test]
fn failing_suite_exits_two() {
    // a two-row truncation with no doublings never converges, which the slice suite rejects
    let o = qsphere(&["verify", "--suite", "slice", "--q", "1/2", "--count", "2", "--trunc", "2", "--doublings", "0"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert_eq!(stderr(&o), "error: verification failed\n");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["lipnorm", "--q", "1/2", "--expr", "A + B + Bs", "--trunc", "40"];
    let a = qsphere(&args);
    let b = qsphere(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let args = ["verify", "--suite", "berezin", "--count", "5", "--degree", "2"];
    assert_eq!(qsphere(&args).stdout, qsphere(&args).stdout);
}

#[test]
fn print_config_round_trips_through_config() {
    let v = json(&qsphere(&["--print-config", "expand", "--q", "1/3", "--trunc", "77"]));
    let cfg = &v["config"];
    assert_eq!(cfg["q"], "1/3");
    assert_eq!(cfg["trunc"], 77);
    assert_eq!(cfg["thetaGrid"], 16);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cfg.json");
    std::fs::write(&p, serde_json::to_string(&v).unwrap()).unwrap();
    let w = json(&qsphere(&["--print-config", "expand", "--config", p.to_str().unwrap(), "--theta-grid", "8"]));
    assert_eq!(w["config"]["q"], "1/3");
    assert_eq!(w["config"]["trunc"], 77);
    assert_eq!(w["config"]["thetaGrid"], 8);
}

#[test]
fn reports_echo_the_configuration() {
    let v = json(&qsphere(&["spectrum", "--q", "1/2", "--N", "2"]));
    assert_eq!(v["config"]["q"], "1/2");
    let sp = v["result"]["spectrum"].as_array().unwrap();
    assert_eq!(sp.len(), 5);
    assert_eq!(sp[0]["c"]["text"], "1");
    assert_eq!(sp[3]["c"]["text"], "0");
    assert_eq!(v["result"]["extrapolated"], false);
    let z = json(&qsphere(&["spectrum", "--q", "1/2", "--N", "0"]));
    assert_eq!(z["result"]["extrapolated"], true);
}

#[test]
fn basis_cache_is_written_and_reused() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("basis.json");
    let ps = p.to_str().unwrap();
    let a = qsphere(&["spectrum", "--q", "1/2", "--N", "2", "--basis-cache", ps]);
    assert!(a.status.success());
    let cached: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(cached["level"], 4);
    assert_eq!(cached["ordering"], "ascending");
    let b = qsphere(&["spectrum", "--q", "1/2", "--N", "2", "--basis-cache", ps]);
    assert_eq!(a.stdout, b.stdout);
    // a cache for another q is ignored rather than misused
    let c = qsphere(&["spectrum", "--q", "1/3", "--N", "2", "--basis-cache", ps]);
    assert!(c.status.success());
    assert_ne!(b.stdout, c.stdout);
    // the cache directory variable gives a default location
    let d = qsphere_cached(dir.path(), &["spectrum", "--q", "1/2", "--N", "1"]);
    assert!(d.status.success());
    assert!(dir.path().join("basis-q1_2-exact.json").exists());
}

#[test]
fn pairing_table_file_is_validated() {
    let alg = SuQ2::new(Exact::from_ratio(1, 2));
    let mut table = codec::table_to_json(alg.field(), Actions::new(alg.clone()).table());
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(&good, table.to_string()).unwrap();
    let args = ["act", "--q", "1/2", "--op", "e", "--expr", "a*b + bs"];
    let reference = json(&qsphere(&args));
    let loaded = json(&qsphere(&[&args[..], &["--pairing-table", good.to_str().unwrap()]].concat()));
    assert_eq!(reference["result"], loaded["result"]);

    table["e"][1][0] = serde_json::json!(7);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, table.to_string()).unwrap();
    let o = qsphere(&[&args[..], &["--pairing-table", bad.to_str().unwrap()]].concat());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("pairing table rejected"), "{}", stderr(&o));
}

#[test]
fn berezin_routes_agree_and_csv_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("spec.csv");
    let v = json(&qsphere(&["berezin", "--q", "1/2", "--N", "2", "--expr", "A", "--csv-out", p.to_str().unwrap()]));
    assert_eq!(v["result"]["routesAgree"], true);
    let csv = std::fs::read_to_string(&p).unwrap();
    assert!(csv.starts_with("n,c\n0,1\n"), "{csv}");
}

#[test]
fn sweep_flags_q_one_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--q-list", "1/2,1", "--N-range", "1..2", "--M-range", "3", "--format", "csv"];
    let a = qsphere_cached(dir.path(), &args);
    assert!(a.status.success(), "{}", stderr(&a));
    let text = stdout(&a);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "q,N,M,status,dist_lb,degraded,max_probe_ratio,mean_lipSlack,c_0,c_1,c_2,c_3");
    assert_eq!(lines.len(), 5);
    for l in &lines[1..] {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!(cols.len(), 12);
        assert_eq!(cols[8].parse::<f64>().unwrap(), 1.0);
        let n: usize = cols[1].parse().unwrap();
        for c in &cols[9 + n..] {
            assert_eq!(c.parse::<f64>().unwrap(), 0.0);
        }
        if cols[0] == "1" {
            assert!(cols[3].starts_with("error"), "{l}");
            assert!(cols[4].is_empty());
        } else {
            assert_eq!(cols[3], "ok");
        }
    }
    assert!(dir.path().join("sweep-rows.jsonl").exists());
    let b = qsphere_cached(dir.path(), &args);
    assert_eq!(a.stdout, b.stdout);
}
