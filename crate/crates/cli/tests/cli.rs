use std::path::Path;
use std::process::{Command, Output};

use lvswitch::curves::CriticalCurve;
use lvswitch::{catalog, EnvPair, ErgodicStats, RegimeMap, Trajectory};

fn lvswitch(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lvswitch"))
        .args(args)
        .current_dir(dir)
        .env("LVSWITCH_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn classify_single_environment() {
    let dir = scratch();
    assert_eq!(stdout(&lvswitch(&["classify", "--env", "6,1,4,2,1,5"], dir.path())), "Type3\n");
    let out = stdout(&lvswitch(&["classify", "--env0", "1,5,2,8,3,3", "--env1", "2,11,1,9,2,1.8"], dir.path()));
    assert_eq!(out, "env0: Type1\nenv1: Type2\n");
}

#[test]
fn curve_matches_golden_file() {
    let dir = scratch();
    let out = stdout(&lvswitch(
        &["curve", "--pair", "paper-1-2.json", "--species", "y", "--n", "400", "--format", "csv"],
        dir.path(),
    ));
    let golden = include_str!("golden/curve-1-2-y-400.csv");
    assert_eq!(out, golden);
    let kinds: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(kinds.first(), Some(&"inf"));
    assert_eq!(kinds.last(), Some(&"zero"));
}

#[test]
fn pair_file_and_inline_environments_agree() {
    let dir = scratch();
    stdout(&lvswitch(&["catalog", "--dir", "pairs"], dir.path()));
    let from_file = stdout(&lvswitch(&["curve", "--pair", "pairs/paper-3-4.json", "--n", "20"], dir.path()));
    let inline = stdout(&lvswitch(
        &["curve", "--env0", "6,1,4,8,1,5", "--env1", "3,10,4,7,5,1", "--n", "20"],
        dir.path(),
    ));
    assert_eq!(from_file, inline);
}

#[test]
fn vy_column_does_not_depend_on_rho() {
    let dir = scratch();
    let run = |rho: &str| stdout(&lvswitch(&["figure", "1", "--rho", rho, "--format", "csv"], dir.path()));
    let (a, b) = (run("9"), run("10"));
    let column = |csv: &str, cols: std::ops::Range<usize>| -> Vec<String> {
        csv.lines()
            .map(|l| l.split(',').collect::<Vec<_>>()[cols.clone()].join(","))
            .collect()
    };
    assert_eq!(column(&a, 0..3), column(&b, 0..3));
    assert_ne!(column(&a, 3..5), column(&b, 3..5));
}

#[test]
fn figures_are_svg() {
    let dir = scratch();
    for id in ["1", "2", "3a", "3b", "3c", "3d"] {
        let out = stdout(&lvswitch(&["figure", id, "--n", "100"], dir.path()));
        assert!(out.starts_with("<svg"));
        assert!(out.trim_end().ends_with("</svg>"));
        assert!(out.matches("<polyline").count() >= 2, "figure {id}");
    }
}

#[test]
fn exit_codes() {
    let dir = scratch();
    let degenerate = lvswitch(&["curve", "--env0", "1,1,2,2,1,1", "--env1", "1,2,1,1,1,4"], dir.path());
    assert_eq!(degenerate.status.code(), Some(1));
    let err = String::from_utf8_lossy(&degenerate.stderr);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[degenerate-logistic]"), "{err}");

    let no_pair = lvswitch(&["curve"], dir.path());
    assert_eq!(no_pair.status.code(), Some(2));
    let bad_point = lvswitch(&["rates", "--pair", "paper-1-2.json", "--u", "1.5", "--v", "1"], dir.path());
    assert_eq!(bad_point.status.code(), Some(2));
    let bad_env = lvswitch(&["classify", "--env", "1,2,x,4,5,6"], dir.path());
    assert_eq!(bad_env.status.code(), Some(2));
    let bad_figure = lvswitch(&["figure", "4"], dir.path());
    assert_eq!(bad_figure.status.code(), Some(2));
    let bad_format = lvswitch(&["catalog", "--format", "svg"], dir.path());
    assert_eq!(bad_format.status.code(), Some(2));
}

#[test]
fn degenerate_map_needs_mc_flag() {
    let dir = scratch();
    let args = ["map", "--env0", "1,5,2,8,3,3", "--env1", "1,5,2,8,3,3", "--n", "2", "--v-min", "1", "--v-max", "5"];
    assert_eq!(lvswitch(&args, dir.path()).status.code(), Some(1));
    let mut with_mc = args.to_vec();
    with_mc.extend(["--mc", "--t-max", "500"]);
    let csv = stdout(&lvswitch(&with_mc, dir.path()));
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",extinction_y")));
}

#[test]
fn simulation_is_deterministic() {
    let dir = scratch();
    let args = |seed: &'static str| {
        vec!["simulate", "--pair", "paper-1-2.json", "--lambda0", "1", "--lambda1", "2", "--t-max", "20", "--seed", seed, "--stride", "50"]
    };
    let a = stdout(&lvswitch(&args("4"), dir.path()));
    let b = stdout(&lvswitch(&args("4"), dir.path()));
    let c = stdout(&lvswitch(&args("5"), dir.path()));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().next(), Some("t,x,y,i"));
}

#[test]
fn json_outputs_round_trip() {
    let dir = scratch();
    let stats = stdout(&lvswitch(
        &["estimate", "--pair", "paper-1-2.json", "--u", "0.5", "--v", "5", "--t-max", "2000"],
        dir.path(),
    ));
    let parsed: ErgodicStats = serde_json::from_str(&stats).unwrap();
    assert_eq!(parsed.batches, 50);
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", stats);

    let map = stdout(&lvswitch(&["map", "--pair", "paper-1-2.json", "--n", "8", "--format", "json"], dir.path()));
    let parsed: RegimeMap = serde_json::from_str(&map).unwrap();
    assert_eq!(parsed.labels.len(), 8);

    let curve = stdout(&lvswitch(&["curve", "--pair", "paper-1-2.json", "--n", "8", "--format", "json"], dir.path()));
    let parsed: CriticalCurve = serde_json::from_str(&curve).unwrap();
    assert_eq!(parsed.values.len(), 8);

    let traj = stdout(&lvswitch(
        &["simulate", "--pair", "paper-1-2.json", "--lambda0", "1", "--lambda1", "1", "--t-max", "5", "--format", "json"],
        dir.path(),
    ));
    let parsed: Trajectory = serde_json::from_str(&traj).unwrap();
    assert_eq!(parsed.segments.last().unwrap().end, 5.0);

    stdout(&lvswitch(&["catalog", "--dir", "pairs"], dir.path()));
    for entry in catalog() {
        let text = std::fs::read_to_string(dir.path().join(format!("pairs/{}.json", entry.file_stem()))).unwrap();
        let pair: EnvPair = serde_json::from_str(&text).unwrap();
        assert_eq!(pair, entry.pair);
    }
}

#[test]
fn out_file_is_written_whole() {
    let dir = scratch();
    stdout(&lvswitch(&["figure", "2", "--format", "csv", "--n", "50", "--out", "fig2.csv"], dir.path()));
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("fig2.csv")]);
    let text = std::fs::read_to_string(dir.path().join("fig2.csv")).unwrap();
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn verify_reports_witnesses() {
    let dir = scratch();
    let out = stdout(&lvswitch(&["verify", "--pair", "paper-1-2.json", "--n", "40"], dir.path()));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["success"], true);
    let ws = v["witnesses"].as_array().unwrap();
    assert_eq!(ws.len(), 4);
    for w in ws {
        assert!(w["lambda0"].as_f64().unwrap() > 0.0 && w["u"].as_f64().unwrap() > 0.0);
    }
    let out = stdout(&lvswitch(
        &["verify", "--pair", "paper-1-2.json", "--n", "10", "--replicas", "20", "--t-max", "200"],
        dir.path(),
    ));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["witnesses"][0]["votes"]["replicas"].as_u64() == Some(20));
}
