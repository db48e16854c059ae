use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_funcspace-lab"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("FUNCSPACE_LAB_THREADS", t),
        None => cmd.env_remove("FUNCSPACE_LAB_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn same_seed_gives_byte_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"J": 8, "seed": 5, "params": {"corpus_size": 12, "p_list": "2..16"}}"#,
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let first = lab(
        &["verify-cww", "--config", &cfg, "--out", a.to_str().unwrap()],
        None,
    );
    let second = lab(
        &["verify-cww", "--config", &cfg, "--out", b.to_str().unwrap()],
        Some("1"),
    );
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert_eq!(second.status.code(), Some(0), "{}", stderr(&second));
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    assert!(!fa.is_empty());
    assert_eq!(fa, fb);
    assert_eq!(
        fs::read(a.join("report.json")).unwrap(),
        fs::read(b.join("report.json")).unwrap()
    );
    assert!(a.join("cww_max_ratio.gp").exists());
}

#[test]
fn seed_override_changes_the_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"J": 8, "params": {"corpus_size": 6, "p_list": [2, 4]}}"#,
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    lab(
        &[
            "verify-cww",
            "--config",
            &cfg,
            "--out",
            a.to_str().unwrap(),
            "--seed",
            "1",
        ],
        None,
    );
    lab(
        &[
            "verify-cww",
            "--config",
            &cfg,
            "--out",
            b.to_str().unwrap(),
            "--seed",
            "2",
        ],
        None,
    );
    let summary = |d: &Path| fs::read_to_string(d.join("cww_summary.csv")).unwrap();
    assert_ne!(summary(&a), summary(&b));
}

#[test]
fn csv_headers_follow_the_export_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"J": 9, "params": {"corpus_size": 4, "budget": 16, "n_list": [1, 2, 4, 8, 16, 32]}}"#,
    );
    let out = tmp.path().join("out");
    let o = lab(
        &["packing", "--config", &cfg, "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first_line = |name: &str| {
        fs::read_to_string(out.join(name))
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(first_line("packing_g1_nu2.csv"), "n,upper,lower,reference");
    assert_eq!(first_line("profile_g1_nu2.csv"), "n,delta");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "packing");
    assert_eq!(report["passed"], true);
}

#[test]
fn invalid_config_exits_2_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"params": {"q": 3}}"#, "verify-prop-dy", "params.q"),
        (
            r#"{"params": {"k_range": "1..20"}}"#,
            "verify-lemma3",
            "params.k_range",
        ),
        (r#"{"J": 30}"#, "verify-cww", "`J`"),
        (
            r#"{"params": {"gamma": 0.2, "nu": 2}}"#,
            "appr-decay",
            "params.gamma",
        ),
        (r#"{"experiment": "envelope"}"#, "packing", "experiment"),
        (r#"{"bogus": 1}"#, "packing", "bogus"),
        (r#"{}"#, "not-an-experiment", "experiment"),
    ];
    for (text, experiment, field) in cases {
        let cfg = write_config(tmp.path(), text);
        let o = lab(
            &[
                experiment,
                "--config",
                &cfg,
                "--out",
                tmp.path().join("o").to_str().unwrap(),
            ],
            None,
        );
        assert_eq!(o.status.code(), Some(2), "{text}: {}", stderr(&o));
        assert!(stderr(&o).contains(field), "{text}: {}", stderr(&o));
    }
    let o = lab(
        &["packing", "--config", &write_config(tmp.path(), "{}")],
        Some("0"),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("FUNCSPACE_LAB_THREADS"));
    let o = lab(
        &[
            "packing",
            "--config",
            tmp.path().join("missing.json").to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config"));
}

#[test]
fn threshold_failure_exits_1_naming_the_criterion() {
    let tmp = tempfile::tempdir().unwrap();
    // a single lambda leaves no points right of the peak to fit
    let cfg = write_config(
        tmp.path(),
        r#"{"J": 8, "params": {"k_range": "1..3", "lambda_range": [32]}}"#,
    );
    let o = lab(
        &[
            "verify-lemma3",
            "--config",
            &cfg,
            "--out",
            tmp.path().join("o").to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("lemma3.slope_right"));
    assert!(tmp.path().join("o/lemma3_difference.csv").exists());
}
