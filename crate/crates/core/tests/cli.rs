use std::process::{Command, Output};

use fanpart::measure::PointCloud;
use fanpart::report::body_of;

fn fanpart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fanpart"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(report: &'a str, key: &str) -> &'a str {
    let prefix = format!("{key}: ");
    report
        .lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{key}` in report:\n{report}"))
}

fn reals(s: &str) -> Vec<f64> {
    s.split(", ").map(|x| x.parse().unwrap()).collect()
}

#[test]
fn identity_masses_on_the_ball_are_near_one_sixth() {
    let o = fanpart(&["masses", "--identity", "--n", "120000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout(&o);
    let m = reals(field(&r, "masses"));
    let se = reals(field(&r, "std_errors"));
    assert_eq!(m.len(), 6);
    for (m, se) in m.iter().zip(se) {
        assert!((m - 1.0 / 6.0).abs() <= 4.0 * se, "{m}");
    }
    assert!(r.contains("config.motion.identity: true"));
}

#[test]
fn non_orthogonal_rotation_is_an_input_error() {
    let o = fanpart(&["masses", "--rotation", "1,0.01,0,0,1,0,0,0,1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("orthogonal"));
    // a tiny defect within 1e-8 is accepted and projected
    let o = fanpart(&["masses", "--rotation", "1,1e-10,0,0,1,0,0,0,1", "--n", "1000"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn masses_reports_are_reproducible() {
    let args = [
        "masses",
        "--rotation",
        "0,-1,0,1,0,0,0,0,1",
        "--translation",
        "0.1,0,0",
        "--n",
        "50000",
        "--seed",
        "9",
    ];
    let a = stdout(&fanpart(&args));
    let b = stdout(&fanpart(&args));
    assert_eq!(body_of(&a), body_of(&b));
}

#[test]
fn collapsed_orbit_is_rejected() {
    let o = fanpart(&["validate-fan", "--p", "3", "--k", "1", "--fan-v", "1,1,1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate fan"));
}

#[test]
fn valid_fan_passes() {
    let o = fanpart(&[
        "validate-fan",
        "--p",
        "5",
        "--k",
        "1",
        "--fan-v",
        "1,0.2,0,0,-0.1",
        "--n",
        "20000",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let f = reals(field(&stdout(&o), "fractions"));
    assert_eq!(f.len(), 10);
    assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(fanpart(&["equipartition", "--bogus"]).status.code(), Some(1));
    assert_eq!(fanpart(&["masses", "--identity", "--p", "4"]).status.code(), Some(1));
    assert_eq!(
        fanpart(&["masses", "--identity", "--measure", "ball:0,0:1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(fanpart(&["masses"]).status.code(), Some(1));
    assert_eq!(fanpart(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# ball fixture\n[group]\np = 3\nk = 1\n[sample]\nn = 20000\nseed = 4\nmotion.identity = true\n",
    )
    .unwrap();
    let o = fanpart(&["masses", "--config", cfg.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout(&o);
    assert_eq!(field(&r, "config.sample.n"), "20000");
    assert_eq!(field(&r, "config.sample.seed"), "5");

    std::fs::write(&cfg, "[group]\np = 3\nnot a pair\n").unwrap();
    let o = fanpart(&["masses", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn sample_writes_a_loadable_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cloud.csv");
    let mixture = "mixture:0.5@1,0,0@0.36;0.5@0,-1,0@0.81";
    let o = fanpart(&[
        "sample",
        "--measure",
        mixture,
        "--n",
        "500",
        "--seed",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let cloud = PointCloud::from_csv(&path, 3).unwrap();
    assert_eq!(cloud.len(), 500);
    let o = fanpart(&["masses", "--identity", "--measure", &format!("csv:{}", path.display())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(field(&stdout(&o), "cloud.points"), "500");
}

#[test]
fn inscribe_ellipsoid_lists_unit_gauges() {
    let o = fanpart(&[
        "inscribe",
        "--p",
        "3",
        "--k",
        "1",
        "--body",
        "ellipsoid:0,0,0:1,1.3,0.7",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let r = stdout(&o);
    for g in reals(field(&r, "gauges")) {
        assert!((g - 1.0).abs() <= 1e-6);
    }
    assert_eq!(field(&r, "verified"), "true");
    let again = stdout(&fanpart(&[
        "inscribe",
        "--p",
        "3",
        "--k",
        "1",
        "--body",
        "ellipsoid:0,0,0:1,1.3,0.7",
    ]));
    assert_eq!(body_of(&r), body_of(&again));
}

#[test]
fn equipartition_of_the_ball_certifies_and_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.txt");
    let args = [
        "equipartition",
        "--p",
        "3",
        "--k",
        "1",
        "--fan-v",
        "1,0,0",
        "--measure",
        "ball:0,0,0:1",
        "--n",
        "100000",
        "--seed",
        "7",
        "--threads",
        "1",
    ];
    let mut with_out: Vec<&str> = args.to_vec();
    with_out.extend(["--out", out.to_str().unwrap()]);
    let o = fanpart(&with_out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}{}",
        stdout(&o),
        String::from_utf8_lossy(&o.stderr)
    );
    let r = std::fs::read_to_string(&out).unwrap();
    let m = reals(field(&r, "oracle.masses"));
    assert!(m.iter().all(|m| (m - 1.0 / 6.0).abs() < 0.005));
    assert_eq!(field(&r, "certified"), "true");

    let again = stdout(&fanpart(&args));
    // only the output path differs between the two runs
    let strip = |s: &str| {
        body_of(s)
            .lines()
            .filter(|l| !l.starts_with("config.run.out"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&r), strip(&again));
}

#[test]
fn unconverged_solve_without_oracle_exits_with_two() {
    // 601 points cannot be split evenly into six cones
    let o = fanpart(&[
        "equipartition",
        "--n",
        "601",
        "--seed",
        "1",
        "--multistarts",
        "1",
        "--polish-evaluations",
        "200",
        "--oracle-n",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    let r = stdout(&o);
    assert_eq!(field(&r, "converged"), "false");
    assert_eq!(field(&r, "certified"), "skipped");
}
