use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use adaptive_signal::metrics::{read_comparison_csv, read_reports};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adaptive-signal")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn calibrate_perfect_line() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("s.csv");
    let params = dir.path().join("params.txt");
    let rows: String = (0..=8).map(|i| {
        let k = i as f64 * 14.0;
        format!("{k},{}\n", 60.0 * (1.0 - k / 112.0))
    }).collect();
    fs::write(&samples, format!("density_vpkm,speed_kph\n{rows}")).unwrap();
    let o = bin(&["calibrate", p(&samples), "--out", p(&params)]);
    assert_eq!(o.status.code(), Some(0));
    let max_flow: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("max_flow_vph = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((max_flow - 1680.0).abs() < 1e-6);
    assert_eq!(fs::read_to_string(&params).unwrap(), stdout(&o));
}

#[test]
fn calibrate_empty_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("s.csv");
    fs::write(&samples, "").unwrap();
    let o = bin(&["calibrate", p(&samples)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
}

#[test]
fn simulate_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.txt");
    fs::write(&scenario, "label = short\nleft_vehicles = 20\nright_vehicles = 20\nduration_s = 120\n").unwrap();
    let run = |seed: &str, out: &str| {
        let o = bin(&["simulate", "--scenario", p(&scenario), "--seed", seed, "--mode", "adaptive", "--out", out]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    run("7", p(&a));
    run("7", p(&b));
    run("8", p(&c));
    for f in ["scenario.txt", "trace.csv", "schedule.csv", "windows.csv", "report.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_ne!(fs::read(a.join("trace.csv")).unwrap(), fs::read(c.join("trace.csv")).unwrap());
    let trace = fs::read_to_string(a.join("trace.csv")).unwrap();
    assert!(trace.starts_with("time_s,vehicle_id,speed_mps\n"));
}

#[test]
fn simulate_reports_the_configured_span() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.txt");
    fs::write(&scenario, "label = flow 0.150\nleft_vehicles = 35\nright_vehicles = 37\nduration_s = 912\nmode = fixed\n").unwrap();
    let out = dir.path().join("out");
    let o = bin(&["simulate", "--scenario", p(&scenario), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let reports = read_reports(fs::File::open(out.join("report.json")).unwrap()).unwrap();
    assert!((reports[0].simulation_time - 15.2).abs() < 1e-9);
}

#[test]
fn simulate_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "bogus = 1\n").unwrap();
    assert_eq!(bin(&["simulate", "--scenario", p(&bad), "--out", p(dir.path())]).status.code(), Some(2));
    fs::write(&bad, "left_vehicles = 1000\n").unwrap();
    let o = bin(&["simulate", "--scenario", p(&bad), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("do not fit"));
    assert_eq!(bin(&["simulate", "--mode", "sometimes", "--out", "x"]).status.code(), Some(2));
}

fn count(body: &str) -> String {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("t.csv");
    fs::write(&f, format!("frame_index,track_id,lane_id,position_m\n{body}")).unwrap();
    let o = bin(&["count", p(&f)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

#[test]
fn count_single_crossing() {
    let out = count("0,5,0,-25\n1,5,0,-20\n2,5,0,-14\n3,5,0,-8\n");
    assert!(out.contains("total count 1"), "{out}");
    assert!(out.contains("flow 1.6666"), "{out}");
}

#[test]
fn count_recrossing_once() {
    let out = count("0,5,0,-20\n1,5,0,-10\n2,5,0,-20\n3,5,0,-10\n");
    assert!(out.contains("total count 1"), "{out}");
}

#[test]
fn count_survives_short_dropout() {
    // last sector-one sighting at frame 10, next sighting 0.8 s later
    let out = count("9,5,0,-17\n10,5,0,-16\n14,5,0,-12\n");
    assert!(out.contains("total count 1"), "{out}");
    let out = count("9,5,0,-17\n10,5,0,-16\n16,5,0,-12\n");
    assert!(out.contains("total count 0"), "{out}");
}

#[test]
fn count_reports_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("t.csv");
    fs::write(&f, "0,1,0,-20\n1,x,0,-10\n").unwrap();
    let o = bin(&["count", p(&f)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

fn report_json(label: &str, mode: &str, lost: f64) -> String {
    format!(
        r#"{{"label":"{label}","mode":"{mode}","average_speed":0,"simulation_time":0,"total_time_lost":0,"average_pass":0,"average_time_lost":{lost}}}"#
    )
}

#[test]
fn compare_reference_rows() {
    let dir = tempfile::tempdir().unwrap();
    let fixed = dir.path().join("f.json");
    let adaptive = dir.path().join("a.json");
    let table = dir.path().join("cmp.csv");
    fs::write(&fixed, format!("[{},{}]", report_json("0.175", "fixed", 41.742), report_json("80/20", "fixed", 83.716))).unwrap();
    fs::write(
        &adaptive,
        format!("[{},{}]", report_json("0.175", "adaptive", 30.517), report_json("80/20", "adaptive", 44.982)),
    )
    .unwrap();
    let o = bin(&["compare", p(&fixed), p(&adaptive), "--out", p(&table)]);
    assert_eq!(o.status.code(), Some(0));
    let rows = read_comparison_csv(fs::read(&table).unwrap().as_slice()).unwrap();
    assert!((rows[0].saved - 26.9).abs() < 0.05);
    assert!((rows[1].saved - 46.3).abs() < 0.05);

    let o = bin(&["compare", p(&fixed), p(&fixed)]);
    let rows = read_comparison_csv(o.stdout.as_slice()).unwrap();
    assert!(rows.iter().all(|r| r.saved == 0.0));

    fs::write(&adaptive, format!("[{},{}]", report_json("0.150", "adaptive", 1.0), report_json("80/20", "adaptive", 1.0))).unwrap();
    assert_eq!(bin(&["compare", p(&fixed), p(&adaptive)]).status.code(), Some(2));
}

#[test]
fn sweep_writes_both_comparison_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["sweep", "--out", p(dir.path()), "--duration", "60"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for table in ["equal_flow.csv", "flow_ratio.csv"] {
        let rows = read_comparison_csv(fs::read(dir.path().join(table)).unwrap().as_slice()).unwrap();
        assert_eq!(rows.len(), 4);
    }
    assert!(dir.path().join("ratio-80-20-adaptive/trace.csv").exists());
    assert_eq!(read_reports(fs::File::open(dir.path().join("reports_fixed.json")).unwrap()).unwrap().len(), 8);
}
