use std::path::Path;
use std::process::{Command, Output};

fn bestarm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bestarm"))
        .args(args)
        .env_remove("BESTARM_WORKERS")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_csv(path: &Path, rows: &[Vec<f64>]) {
    let n = rows[0].len();
    let mut text = String::from("method");
    for j in 0..n {
        text.push_str(&format!(",ex{j}"));
    }
    text.push('\n');
    for (i, row) in rows.iter().enumerate() {
        text.push_str(&format!("m{i}"));
        for v in row {
            text.push_str(&format!(",{v}"));
        }
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    write_csv(&csv, &vec![vec![0.5; 20]; 5]);
    let m = path_str(&csv);

    assert_eq!(bestarm(&["run", "--matrix", m]).status.code(), Some(2));
    assert_eq!(bestarm(&["run", "--matrix", m, "--algo", "nope"]).status.code(), Some(2));
    assert_eq!(bestarm(&["run", "--matrix", m, "--algo", "ucb-e", "--budget-frac", "1.5"]).status.code(), Some(2));
    let warmup = bestarm(&[
        "run", "--matrix", m, "--algo", "ucb-e-lrf", "--budget-frac", "0.04", "--warmup-frac", "0.05",
    ]);
    assert_eq!(warmup.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&warmup.stderr).contains("warm-up"));
    assert_eq!(bestarm(&["synth", "--out", path_str(&dir.path().join("x.txt")), "--means", "0.2,0.4"]).status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    assert_eq!(bestarm(&["run", "--matrix", path_str(&missing), "--algo", "ucb-e"]).status.code(), Some(1));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "method,a,b\nm0,0.5,1.5\n").unwrap();
    assert_eq!(bestarm(&["inspect", "--matrix", path_str(&bad)]).status.code(), Some(1));
}

#[test]
fn full_budget_run_finds_the_exact_best() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    let rows: Vec<Vec<f64>> = (0..6)
        .map(|i| (0..25).map(|j| ((i * 7 + j * 3) % 11) as f64 / 10.0).collect())
        .collect();
    write_csv(&csv, &rows);
    let means: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / 25.0).collect();
    let best = (0..6).max_by(|&a, &b| means[a].total_cmp(&means[b])).unwrap();
    for algo in ["ucb-e", "ucb-e-lrf", "ucb-e-lrf-score-only", "lrf", "row-mean", "filled-subset"] {
        let out = bestarm(&["run", "--matrix", path_str(&csv), "--algo", algo, "--ensemble", "4"]);
        assert_eq!(out.status.code(), Some(0), "{algo}: {}", String::from_utf8_lossy(&out.stderr));
        let text = stdout(&out);
        assert!(text.contains(&format!("best: m{best} (index {best})")), "{algo}: {text}");
        assert!(text.contains("evaluations: 150 of 150"));
    }
}

#[test]
fn synth_sidecar_reports_the_hardness() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let run = bestarm(&[
        "synth", "--out", path_str(&out), "--linspace", "0.3,0.7,40", "--noise", "none", "--examples", "50",
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.csv.truth.json")).unwrap()).unwrap();
    let want: f64 = (0..39)
        .map(|k| {
            let gap = 0.4 * (39 - k) as f64 / 39.0;
            1.0 / (gap * gap)
        })
        .sum();
    let got = sidecar["hardness"].as_f64().unwrap();
    assert!((got - want).abs() < 1e-6 * want, "{got} vs {want}");
    assert_eq!(sidecar["best_index"].as_u64(), Some(39));

    let inspect = stdout(&bestarm(&["inspect", "--matrix", path_str(&out)]));
    assert!(inspect.contains("methods: 40"));
    assert!(inspect.contains("(index 39)"), "{inspect}");
}

#[test]
fn inspect_sees_a_rank_one_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r1.csv");
    let rows: Vec<Vec<f64>> = (0..8)
        .map(|i| (0..12).map(|j| (0.3 + 0.05 * i as f64) * (0.5 + 0.04 * j as f64)).collect())
        .collect();
    write_csv(&csv, &rows);
    let text = stdout(&bestarm(&["inspect", "--matrix", path_str(&csv)]));
    let ratio: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("sigma2/sigma1: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(ratio < 1e-6, "{text}");
}

#[test]
fn metrics_scores_a_correct_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("mu.csv");
    write_csv(&csv, &[vec![0.9], vec![0.8], vec![0.5]]);
    let out = bestarm(&["metrics", "--matrix", path_str(&csv), "--predicted", "0", "--ranking", "2,0,1", "--k", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("H1: 106.250000"), "{text}");
    assert!(text.contains("precision gap eps=0.01: 1"));
    assert!(text.contains("precision gap eps=0.001: 1"));
    assert!(text.contains("ndcg@2: 0.760"));
    let wrong = stdout(&bestarm(&["metrics", "--matrix", path_str(&csv), "--predicted", "m1"]));
    assert!(wrong.contains("precision gap eps=0.01: 0"));
}

#[test]
fn experiment_covers_every_algorithm_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("e.csv");
    let synth = bestarm(&["synth", "--out", path_str(&matrix), "--linspace", "0.3,0.7,5", "--examples", "24", "--seed", "3"]);
    assert_eq!(synth.status.code(), Some(0));
    let mut outputs = Vec::new();
    let csv = dir.path().join("out.csv");
    let json = dir.path().join("out.json");
    for _ in 0..2 {
        let out = bestarm(&[
            "experiment", "--matrix", path_str(&matrix), "--trials", "3", "--seed", "9",
            "--checkpoints", "0.5,1.0", "--out-csv", path_str(&csv), "--out-json", path_str(&json),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((std::fs::read(&csv).unwrap(), std::fs::read(&json).unwrap(), stdout(&out)));
    }
    assert!(outputs[0] == outputs[1], "reports differ between identical runs");
    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    let groups: std::collections::BTreeSet<&str> =
        text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(groups.len(), 6, "{groups:?}");
}

#[test]
fn help_lists_the_defaults() {
    let help = stdout(&bestarm(&["run", "--help"]));
    for flag in ["--a <A>", "--rank", "--ensemble", "--warmup-frac", "--eta", "--batch", "--dropout"] {
        assert!(help.contains(flag), "{flag} missing from\n{help}");
    }
    assert!(help.contains("[default: "));
    assert_eq!(bestarm(&["--help"]).status.code(), Some(0));
}
