use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bipspec_cli::{EXIT_INFEASIBLE, EXIT_OK, EXIT_THRESHOLD, EXIT_USAGE};

fn bipspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bipspec"))
        .args(args)
        .env_remove("BIPSPEC_THREADS")
        .output()
        .expect("spawn bipspec")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn mp_eval_semicircle_table() {
    let o = bipspec(&["mp-eval", "--alpha", "1", "--from", "-2", "--to", "2", "--points", "5"]);
    assert_eq!(code(&o), EXIT_OK);
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(text.lines().next(), Some("x,density"));
    assert_eq!(rows.len(), 5);
    for k in 0..5 {
        assert_eq!(rows[k][1], rows[4 - k][1]);
    }
    let expected = 3f64.sqrt() / (2.0 * std::f64::consts::PI);
    assert!((rows[3][1] - expected).abs() < 1e-15);
}

#[test]
fn mp_eval_rejects_small_alpha() {
    let o = bipspec(&[
        "mp-eval", "--alpha", "0.5", "--from", "-2", "--to", "2", "--points", "5",
    ]);
    assert_eq!(code(&o), EXIT_USAGE);
    assert!(stderr(&o).contains("aspect ratio"));
    let o = bipspec(&["mp-eval", "--alpha", "1", "--from", "1", "--to", "0", "--points", "5"]);
    assert_eq!(code(&o), EXIT_USAGE);
    let o = bipspec(&["mp-eval", "--alpha", "1", "--bogus"]);
    assert_eq!(code(&o), EXIT_USAGE);
}

#[test]
fn sample_examples() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    let o = bipspec(&[
        "sample",
        "--model",
        "er",
        "--m",
        "5",
        "--n",
        "3",
        "--p",
        "0",
        "--seed",
        "1",
        "--out",
        p(&a),
    ]);
    assert_eq!(code(&o), EXIT_OK);
    assert_eq!(stdout(&o), "er 5 3 0 1\n");
    for seed in ["1", "2", "3"] {
        let o = bipspec(&[
            "sample",
            "--model",
            "regular",
            "--m",
            "4",
            "--n",
            "4",
            "--dl",
            "2",
            "--seed",
            seed,
            "--out",
            p(&a),
        ]);
        assert_eq!(code(&o), EXIT_OK);
        assert_eq!(stdout(&o), format!("regular 4 4 8 {seed}\n"));
    }
    bipspec(&[
        "sample",
        "--model",
        "regular",
        "--m",
        "4",
        "--n",
        "4",
        "--dl",
        "2",
        "--seed",
        "9",
        "--out",
        p(&b),
    ]);
    bipspec(&[
        "sample",
        "--model",
        "regular",
        "--m",
        "4",
        "--n",
        "4",
        "--dl",
        "2",
        "--seed",
        "9",
        "--out",
        p(&a),
    ]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let o = bipspec(&[
        "sample",
        "--model",
        "regular",
        "--m",
        "4",
        "--n",
        "3",
        "--dl",
        "2",
        "--seed",
        "1",
        "--out",
        p(&a),
    ]);
    assert_eq!(code(&o), EXIT_INFEASIBLE);
    let o = bipspec(&[
        "sample",
        "--model",
        "regular",
        "--m",
        "4",
        "--n",
        "4",
        "--p",
        "0.5",
        "--seed",
        "1",
        "--out",
        p(&a),
    ]);
    assert_eq!(code(&o), EXIT_USAGE);
    let o = bipspec(&[
        "sample",
        "--model",
        "er",
        "--m",
        "4",
        "--n",
        "4",
        "--p",
        "0.5",
        "--out",
        p(&a),
    ]);
    assert_eq!(code(&o), EXIT_USAGE, "seed is mandatory");
}

#[test]
fn spectrum_examples() {
    let dir = tempfile::tempdir().unwrap();
    let k23 = dir.path().join("k23.txt");
    fs::write(&k23, "3 2\n0 0\n0 1\n1 0\n1 1\n2 0\n2 1\n").unwrap();
    let out = dir.path().join("s.csv");
    let o = bipspec(&[
        "spectrum",
        "--in",
        p(&k23),
        "--normalize",
        "none",
        "--out",
        p(&out),
        "--hist",
        "4",
    ]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let values = bipspec::spectra::parse_spectrum_csv(&fs::read_to_string(&out).unwrap()).unwrap();
    let r6 = 6f64.sqrt();
    assert!((values[0] + r6).abs() < 1e-14 && (values[4] - r6).abs() < 1e-14);
    assert_eq!(&values[1..4], &[0.0, 0.0, 0.0]);
    let hist = fs::read_to_string(bipspec_cli::histogram_path(&out)).unwrap();
    let total: usize = hist
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 5);

    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "3 4\n").unwrap();
    let o = bipspec(&["spectrum", "--in", p(&empty), "--normalize", "none", "--out", p(&out)]);
    assert_eq!(code(&o), EXIT_OK);
    assert!(bipspec::spectra::parse_spectrum_csv(&fs::read_to_string(&out).unwrap())
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));

    let o = bipspec(&[
        "spectrum",
        "--in",
        p(&k23),
        "--normalize",
        "regular",
        "--dl",
        "1",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), EXIT_INFEASIBLE);
    let o = bipspec(&[
        "spectrum",
        "--in",
        p(&empty),
        "--normalize",
        "regular",
        "--dl",
        "2",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), EXIT_INFEASIBLE, "empty graph is not (2, 3)-regular");
    let o = bipspec(&[
        "spectrum",
        "--in",
        p(&k23),
        "--normalize",
        "er",
        "--p",
        "0.5",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), EXIT_OK);

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "2 2\n0 5\n").unwrap();
    let o = bipspec(&["spectrum", "--in", p(&bad), "--normalize", "none", "--out", p(&out)]);
    assert_eq!(code(&o), EXIT_USAGE);
    assert!(stderr(&o).contains("line 2"));
}

#[test]
fn local_law_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let base = [
        "local-law",
        "--model",
        "regular",
        "--m",
        "60",
        "--n",
        "40",
        "--dl",
        "8",
        "--trials",
        "4",
        "--seed",
        "5",
    ];
    let mut args: Vec<&str> = base.to_vec();
    args.extend(["--delta", "1e6", "--out", p(&out)]);
    let o = bipspec(&args);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], 1);
    let csv = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(csv.starts_with("trial,interval_lo,interval_hi,N_I,predicted,rel_dev,pass\n"));
    assert_eq!(csv.lines().count(), 1 + 4 * 8);

    let mut strict: Vec<&str> = base.to_vec();
    strict.extend(["--delta", "1e-9", "--out", p(&out)]);
    assert_eq!(code(&bipspec(&strict)), EXIT_THRESHOLD);

    let mut through_zero: Vec<&str> = base.to_vec();
    through_zero.extend(["--delta", "0.2", "--out", p(&out), "--interval", "-0.1,0.1"]);
    let o = bipspec(&through_zero);
    assert_eq!(code(&o), EXIT_USAGE);
    assert!(stderr(&o).contains("must avoid the origin"));
}

#[test]
fn local_law_is_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(threads);
        let o = bipspec(&[
            "--threads",
            threads,
            "local-law",
            "--model",
            "er",
            "--m",
            "40",
            "--n",
            "40",
            "--p",
            "0.3",
            "--delta",
            "0.3",
            "--trials",
            "6",
            "--seed",
            "17",
            "--out",
            p(&out),
        ]);
        assert!(matches!(code(&o), EXIT_OK | EXIT_THRESHOLD));
        reports.push(fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn threads_fall_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_bipspec"))
        .args([
            "regularity-prob",
            "--m",
            "2",
            "--n",
            "2",
            "--p",
            "0.5",
            "--trials",
            "100",
            "--seed",
            "1",
        ])
        .env("BIPSPEC_THREADS", "2")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), EXIT_OK);
    let o = Command::new(env!("CARGO_BIN_EXE_bipspec"))
        .args([
            "regularity-prob",
            "--m",
            "2",
            "--n",
            "2",
            "--p",
            "0.5",
            "--trials",
            "100",
            "--seed",
            "1",
        ])
        .env("BIPSPEC_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), EXIT_USAGE);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"alpha": 4.0, "from": 0.0, "to": 2.0, "points": 3, "cdf": true}"#,
    )
    .unwrap();
    let o = bipspec(&["mp-eval", "--config", p(&cfg)]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 4);
    assert!(stdout(&o).starts_with("x,density,cdf\n"));
    let o = bipspec(&["mp-eval", "--config", p(&cfg), "--points", "7"]);
    assert_eq!(stdout(&o).lines().count(), 8);

    fs::write(&cfg, r#"{"alpha": 1.0, "unknown-key": 1}"#).unwrap();
    let o = bipspec(&["mp-eval", "--config", p(&cfg)]);
    assert_eq!(code(&o), EXIT_USAGE);
    let o = bipspec(&["mp-eval", "--config", p(&dir.path().join("missing.json"))]);
    assert_eq!(code(&o), EXIT_USAGE);
}

#[test]
fn factor_check_examples() {
    let dir = tempfile::tempdir().unwrap();
    let k22 = dir.path().join("k22.txt");
    fs::write(&k22, "2 2\n0 0\n0 1\n1 0\n1 1\n").unwrap();
    let o = bipspec(&["factor-check", "--in", p(&k22), "--fa", "2", "--fb", "2,2"]);
    assert_eq!(code(&o), EXIT_OK);
    assert_eq!(stdout(&o), "factor exists\n");

    let k13 = dir.path().join("k13.txt");
    fs::write(&k13, "1 3\n0 0\n0 1\n0 2\n").unwrap();
    let o = bipspec(&["factor-check", "--in", p(&k13), "--fa", "1", "--fb", "1"]);
    assert_eq!(code(&o), EXIT_INFEASIBLE);
    assert!(stderr(&o).contains("unbalanced"));

    let path = dir.path().join("p.txt");
    fs::write(&path, "2 2\n0 0\n1 0\n").unwrap();
    let o = bipspec(&["factor-check", "--in", p(&path), "--fa", "1", "--fb", "1,1", "--json"]);
    assert_eq!(code(&o), EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["exists"], false);
    assert_eq!(v["ore_ryser"], false);

    let o = bipspec(&["factor-check", "--in", p(&k22), "--fa", "1,1,1", "--fb", "1"]);
    assert_eq!(code(&o), EXIT_USAGE);
}

#[test]
fn experiment_subcommands_run() {
    let o = bipspec(&[
        "regularity-prob",
        "--m",
        "3",
        "--n",
        "3",
        "--p",
        "0.5",
        "--trials",
        "10",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&o), EXIT_INFEASIBLE, "3·0.5 is not an integer");
    let o = bipspec(&[
        "regularity-prob",
        "--m",
        "2",
        "--n",
        "2",
        "--p",
        "0.5",
        "--trials",
        "2000",
        "--seed",
        "1",
        "--json",
    ]);
    assert_eq!(code(&o), EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["trials"], 2000);

    let o = bipspec(&[
        "factor-freq",
        "--m",
        "6",
        "--n",
        "4",
        "--p",
        "1",
        "--delta",
        "0.5",
        "--trials",
        "5",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&o), EXIT_OK);
    assert!(stdout(&o).contains("\n2,3,5,5,"));

    let o = bipspec(&[
        "concentration",
        "--m",
        "20",
        "--n",
        "20",
        "--p",
        "0.5",
        "--t",
        "0.5,1,2",
        "--trials",
        "8",
        "--seed",
        "3",
        "--function",
        "f1",
        "--interval",
        "0.5,1.0",
        "--c",
        "4",
    ]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 4);
    let o = bipspec(&[
        "concentration",
        "--m",
        "20",
        "--n",
        "20",
        "--p",
        "0.5",
        "--t",
        "1",
        "--trials",
        "8",
        "--seed",
        "3",
        "--function",
        "constant",
    ]);
    assert_eq!(code(&o), EXIT_USAGE, "a constant has Lipschitz constant 0");

    let o = bipspec(&[
        "rate-sweep",
        "--ns",
        "10,20,40",
        "--alpha",
        "1",
        "--p",
        "0.5",
        "--interval",
        "-3,3",
        "--trials",
        "4",
        "--seed",
        "2",
    ]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let o = bipspec(&[
        "rate-sweep",
        "--ns",
        "10,20",
        "--alpha",
        "1",
        "--p",
        "0.5",
        "--interval",
        "0.5,1",
        "--trials",
        "4",
        "--seed",
        "2",
    ]);
    assert_eq!(code(&o), EXIT_USAGE);
}

#[test]
fn in_process_runner_matches_binary() {
    let args = [
        "bipspec", "mp-eval", "--alpha", "2", "--from", "-1", "--to", "1", "--points", "3", "--cdf",
    ];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(bipspec_cli::run_from(args, &mut out, &mut err), EXIT_OK);
    assert_eq!(out, bipspec(&args[1..]).stdout);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(
        bipspec_cli::run_from(["bipspec", "--help"], &mut out, &mut err),
        EXIT_OK
    );
    assert!(String::from_utf8(out).unwrap().contains("local-law"));
}

#[test]
fn cli_config_fuzz_seeds_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/cli_config");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        let args = bipspec_cli::merge_config(&bipspec_cli::LocalLawArgs::default(), Some(&text)).unwrap();
        bipspec_cli::local_law_config(&args).unwrap();
        seen += 1;
    }
    assert!(seen >= 2);
}
