use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use swarm_core::dynamics::read_qdyn;
use swarm_core::gridsearch::{load_dataset, save_dataset};
use swarm_core::policy::EpisodeLog;
use tempfile::TempDir;

fn swarmctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swarmctl")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Dataset, fitted matrix and a successful circle run for the default config,
/// built once through the binary.
struct Fixture {
    _dir: TempDir,
    out: PathBuf,
    fit_stdout: String,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let o = swarmctl(&["collect", "--out", s(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        let o = swarmctl(&["fit", "--out", s(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        let fit_stdout = stdout(&o);
        let o = swarmctl(&[
            "run",
            "--out",
            s(&out),
            "--path",
            "circle",
            "--laps",
            "3",
            "--beta",
            "0.5",
            "--alpha",
            "0.05",
            "--delta",
            "5",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
        Fixture { _dir: dir, out, fit_stdout }
    })
}

#[test]
fn dry_run_lists_combos_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = swarmctl(&["collect", "--dry-run", "--out", s(&out)]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("combo ")).count(), 984);
    assert!(text.contains("984 combos"));
    assert!(!out.exists());
}

#[test]
fn default_collect_has_97416_records() {
    let f = fixture();
    assert_eq!(load_dataset(&f.out.join("dataset.csv")).unwrap().len(), 97_416);
}

#[test]
fn unwritable_output_is_exit_2_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("plain_file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = swarmctl(&["collect", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(s(&out)), "{}", stderr(&o));
}

#[test]
fn fit_reports_planted_resonances() {
    let text = &fixture().fit_stdout;
    for (k, want) in (1..=4).zip([2.0, 2.0, 2.225, 2.0]) {
        let prefix = format!("k={k}: f0 = ");
        let line = text.lines().find(|l| l.starts_with(&prefix)).expect("resonance line");
        let got: f64 = line[prefix.len()..].trim_end_matches(" MHz").parse().unwrap();
        assert!((got - want).abs() <= 0.025 + 1e-9, "{line}");
    }
}

#[test]
fn fitted_matrix_round_trips_with_full_shape() {
    let q = read_qdyn(&fixture().out.join("q_global.qdyn")).unwrap();
    assert_eq!(q.shape(), [300, 300, 2, 4]);
}

#[test]
fn dataset_missing_transducer_4_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let records: Vec<_> =
        load_dataset(&fixture().out.join("dataset.csv")).unwrap().into_iter().filter(|r| r.k != 4).collect();
    let ds = dir.path().join("no_k4.csv");
    save_dataset(&records, &ds).unwrap();
    let o = swarmctl(&["fit", "--dataset", s(&ds), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k=4"), "{}", stderr(&o));
}

#[test]
fn malformed_dataset_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("bad.csv");
    fs::write(&ds, "not,a,dataset\n1,2,3\n").unwrap();
    let o = swarmctl(&["fit", "--dataset", s(&ds), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn circle_run_emits_log_and_svg() {
    let out = &fixture().out;
    let log = EpisodeLog::load(&out.join("episode.csv")).unwrap();
    assert!(!log.rows.is_empty());
    assert_eq!(log.rows.last().unwrap().cursor, 108);
    let svg = fs::read_to_string(out.join("trajectory.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("success"));
}

#[test]
fn eth_run_emits_trajectory_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eth");
    let q = fixture().out.join("q_global.qdyn");
    let o = swarmctl(&["run", "--out", s(&out), "--q", s(&q), "--path", "letters:ETH"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let svg = fs::read_to_string(out.join("trajectory.svg")).unwrap();
    assert!(svg.contains("letters:ETH") && svg.contains("<polyline"));
}

#[test]
fn global_only_under_disturbance_gets_stuck_in_most_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let q = fixture().out.join("q_global.qdyn");
    let mut stuck = 0;
    for seed in 1..=5 {
        let out = dir.path().join(format!("d{seed}"));
        let seed = seed.to_string();
        let o = swarmctl(&["run", "--out", s(&out), "--q", s(&q), "--seed", &seed, "--beta", "1", "--disturb"]);
        if o.status.code() == Some(3) {
            stuck += 1;
        }
    }
    assert!(stuck >= 3, "stuck in {stuck}/5");
}

#[test]
fn corrupt_q_file_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("bad.qdyn");
    fs::write(&q, b"garbage").unwrap();
    let o = swarmctl(&["run", "--out", s(dir.path()), "--q", s(&q)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.qdyn"), "{}", stderr(&o));
}

#[test]
fn replay_local_error_trends_down_and_is_deterministic() {
    let f = fixture();
    let log_path = f.out.join("episode.csv");
    let log = EpisodeLog::load(&log_path).unwrap();
    let third = log.rows.len() / 3;
    let mean = |rows: &[swarm_core::policy::LogRow]| rows.iter().map(|r| r.err_local).sum::<f64>() / rows.len() as f64;
    assert!(mean(&log.rows[log.rows.len() - third..]) < mean(&log.rows[..third]));

    let dir = tempfile::tempdir().unwrap();
    let mut svgs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = swarmctl(&["replay", "--log", s(&log_path), "--out", s(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        svgs.push((
            fs::read(out.join("replay_trajectory.svg")).unwrap(),
            fs::read(out.join("replay_errors.svg")).unwrap(),
        ));
    }
    assert_eq!(svgs[0], svgs[1]);
    let errors = String::from_utf8(svgs[0].1.clone()).unwrap();
    assert!(errors.contains("local") && errors.contains("global"));
}

#[test]
fn empty_log_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("empty.csv");
    EpisodeLog::default().save(&log).unwrap();
    let o = swarmctl(&["replay", "--log", s(&log), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn help_states_precedence_and_exit_codes() {
    let o = swarmctl(&["run", "--help"]);
    let text = stdout(&o);
    assert!(text.contains("command-line flags > --config file > built-in defaults"));
    assert!(text.contains('3') && text.contains("stuck"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "seed = 9\n").unwrap();
    let out = dir.path().join("o");
    let o = swarmctl(&["vision", "--config", s(&cfg), "--seed", "3", "--out", s(&out), "--frames", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "no_such_key = 1\n").unwrap();
    let o = swarmctl(&["vision", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}
