use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use werner_tomo::experiment::{SUMMARY_HEADER, SWEEP_HEADER};
use werner_tomo::simulate::CountsFile;

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_werner-tomo"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cli(&["frobnicate"], dir.path())), 1);
    assert_eq!(code(&cli(&["sweep", "--trials", "many"], dir.path())), 1);
    assert_eq!(code(&cli(&["simulate"], dir.path())), 1);
    assert_eq!(code(&cli(&["simulate", "--eta", "1.5"], dir.path())), 1);
    assert_eq!(code(&cli(&["sweep", "--eta-step", "0"], dir.path())), 1);
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let help = cli(&["--help"], dir.path());
    assert_eq!(code(&help), 0);
    let text = String::from_utf8(help.stdout).unwrap();
    for sub in ["sweep", "correlate", "simulate", "reconstruct"] {
        assert!(text.contains(sub), "{text}");
    }
    assert_eq!(code(&cli(&["--version"], dir.path())), 0);
}

#[test]
fn io_and_parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&cli(
            &["reconstruct", "--counts", "missing.csv"],
            dir.path()
        )),
        2
    );

    fs::write(
        dir.path().join("short.csv"),
        "alpha,i,j,count\n0,1,1,3\n# mean_pairs=10\n",
    )
    .unwrap();
    let out = cli(&["reconstruct", "--counts", "short.csv"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    assert_eq!(
        code(&cli(
            &["simulate", "--eta", "0.5", "--out", "no/such/dir/c.csv"],
            dir.path()
        )),
        2
    );
}

#[test]
fn missing_mean_pairs_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["simulate", "--eta", "0.5", "--seed", "1"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    let stripped: String = text
        .lines()
        .filter(|l| !l.starts_with("# mean_pairs"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(dir.path().join("c.csv"), stripped).unwrap();
    let out = cli(&["reconstruct", "--counts", "c.csv"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("mean_pairs"));
}

#[test]
fn simulate_then_reconstruct() {
    let dir = tempfile::tempdir().unwrap();
    let sim = cli(
        &[
            "simulate", "--eta", "0.8", "--pairs", "1000", "--seed", "4", "--out", "c.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&sim), 0);
    let file = CountsFile::parse(&fs::read_to_string(dir.path().join("c.csv")).unwrap()).unwrap();
    assert_eq!(file.seed, Some(4));
    assert_eq!(file.eta, Some(0.8));
    assert_eq!(file.counts.mean_pairs(), 1000.0);

    let rec = cli(
        &[
            "reconstruct",
            "--counts",
            "c.csv",
            "--reference-eta",
            "0.8",
            "--out",
            "s.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&rec), 0);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    let matrix = json["matrix"].as_array().unwrap();
    assert_eq!(matrix.len(), 4);
    assert!(matrix.iter().all(|row| row.as_array().unwrap().len() == 4));
    let trace: f64 = (0..4).map(|k| matrix[k][k][0].as_f64().unwrap()).sum();
    assert!((trace - 1.0).abs() < 1e-9);
    assert!(json["converged"].as_bool().unwrap());
    assert!(json["metrics"]["fidelity"].as_f64().unwrap() > 0.98);
}

#[test]
fn non_convergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    cli(&["simulate", "--eta", "0.5", "--out", "c.csv"], dir.path());
    let out = cli(
        &[
            "reconstruct",
            "--counts",
            "c.csv",
            "--max-evals",
            "20",
            "--restarts",
            "1",
            "--out",
            "s.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 3);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(json["converged"], serde_json::Value::Bool(false));
}

#[test]
fn sweep_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(
        &[
            "sweep",
            "--eta-start",
            "0.2",
            "--eta-end",
            "0.6",
            "--eta-step",
            "0.2",
            "--pairs",
            "10,100",
            "--trials",
            "3",
            "--out",
            "s.csv",
            "--summary",
            "m.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let sweep = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines[0], SWEEP_HEADER);
    assert_eq!(lines.len(), 1 + 3 * 2 * 3);
    assert!(lines[1].starts_with("0.2,10,0,"));
    assert!(lines[18].starts_with("0.6,100,2,"));
    assert!(!sweep.contains('\r'));

    let summary = fs::read_to_string(dir.path().join("m.csv")).unwrap();
    assert_eq!(summary.lines().next().unwrap(), SUMMARY_HEADER);
    assert_eq!(summary.lines().count(), 1 + 3 * 2);
}

#[test]
fn paper_mode_runs_one_trial() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(
        &[
            "sweep",
            "--eta-step",
            "0.5",
            "--pairs",
            "100",
            "--trials",
            "7",
            "--paper-mode",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().lines().count(),
        1 + 3
    );
}

#[test]
fn correlate_defaults_emit_both_curves() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cli(&["correlate", "--out", "scans"], dir.path())), 0);
    let scans = dir.path().join("scans");
    for name in ["correlation_eta0.5_n1000.csv", "correlation_eta1_n1000.csv"] {
        let text = fs::read_to_string(scans.join(name)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "angle_deg,expected,noisy");
        assert_eq!(lines.len(), 1 + 73);
        assert!(lines[1].starts_with("0,"));
        assert!(lines[73].starts_with("360,"));
    }
    let peak = fs::read_to_string(scans.join("correlation_eta1_n1000.csv")).unwrap();
    let expected: f64 = peak
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((expected - 500.0).abs() < 1e-9);
}
