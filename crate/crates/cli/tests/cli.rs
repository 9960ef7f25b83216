use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn sample(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data/sample")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kanbun"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Exit code and the parsed single-line JSON error.
fn failure(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    (
        out.status.code().unwrap(),
        serde_json::from_str(&stderr).unwrap(),
    )
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, content).unwrap();
    p
}

#[test]
fn help_and_version_exit_zero() {
    for sub in [
        "extract",
        "render-kaeriten",
        "parse-kaeriten",
        "train",
        "reorder",
        "eval-order",
        "eval-mt",
        "split",
        "stats",
        "correlate",
        "translate",
    ] {
        let help = stdout_of(&[sub, "--help"]);
        for flag in ["--jobs", "--seed", "--char-table"] {
            assert!(help.contains(flag), "{sub} help lacks {flag}");
        }
    }
    assert!(stdout_of(&["--version"]).starts_with("kanbun "));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["frobnicate"],
        vec!["stats"],
        vec!["stats", "--input", "x", "--bogus"],
        vec![
            "split",
            "--input",
            "x",
            "--output-dir",
            "y",
            "--ratios",
            "0.5,0.6,0.1",
        ],
        vec![
            "eval-mt",
            "--candidates",
            "a",
            "--references",
            "b",
            "--smoothing",
            "add-one",
        ],
        vec![
            "eval-mt",
            "--candidates",
            "a",
            "--references",
            "b",
            "--max-n",
            "0",
        ],
    ] {
        let (code, err) = failure(&args);
        assert_eq!(code, 2, "{args:?}");
        assert_eq!(err["error"], "usage");
    }
}

#[test]
fn data_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.tsv", "# header\na\tp\t春眠\t12x\t-\tnn\n");
    let (code, err) = failure(&["stats", "--input", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(err["error"], "data");
    assert_eq!(err["file"], bad.to_str().unwrap());
    assert_eq!(err["line"], 2);

    let (code, err) = failure(&[
        "stats",
        "--input",
        dir.path().join("missing.tsv").to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert_eq!(err["line"], Value::Null);

    let marked = write(dir.path(), "m.tsv", "a\t春眠不[レ]覚[レ]暁\nb\t甲[二]乙\n");
    let (code, err) = failure(&["parse-kaeriten", "--input", marked.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(err["line"], 2);
}

#[test]
fn spring_dawn_line_renders_two_re_marks() {
    let out = stdout_of(&["render-kaeriten", "--input", &sample("corpus.tsv")]);
    assert!(
        out.lines().any(|l| l == "shungyo-1\t春眠不[レ]覚[レ]暁"),
        "{out}"
    );
}

#[test]
fn marks_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let marked = dir.path().join("marked.tsv");
    stdout_of(&[
        "render-kaeriten",
        "--input",
        &sample("corpus.tsv"),
        "--output",
        marked.to_str().unwrap(),
    ]);
    let orders = write(
        dir.path(),
        "orders.tsv",
        &stdout_of(&["parse-kaeriten", "--input", marked.to_str().unwrap()]),
    );
    let report = stdout_of(&[
        "eval-order",
        "--gold",
        &sample("corpus.tsv"),
        "--predicted",
        orders.to_str().unwrap(),
    ]);
    assert!(
        report.contains("tau_mean\t1.000000\n") && report.contains("pmr\t1.000000\n"),
        "{report}"
    );
}

#[test]
fn identical_gold_and_prediction_score_one() {
    let report = stdout_of(&[
        "eval-order",
        "--gold",
        &sample("corpus.tsv"),
        "--predicted",
        &sample("corpus.tsv"),
    ]);
    assert!(
        report.contains("tau_mean\t1.000000\n") && report.contains("pmr\t1.000000\n"),
        "{report}"
    );
}

#[test]
fn missing_prediction_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let pred = write(dir.path(), "p.tsv", "shungyo-1\t12345\tnnnnn\n");
    let (code, err) = failure(&[
        "eval-order",
        "--gold",
        &sample("corpus.tsv"),
        "--predicted",
        pred.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(err["message"].as_str().unwrap().contains("shungyo-2"));
}

#[test]
fn reorder_accepts_plain_sources_and_is_job_independent() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.txt");
    stdout_of(&[
        "train",
        "--input",
        &sample("corpus.tsv"),
        "--output",
        model.to_str().unwrap(),
    ]);
    // 覺 is normalized before prediction.
    let src = write(dir.path(), "src.tsv", "x\t春眠不覺暁\ny\t夜来風雨声\n");
    let one = stdout_of(&[
        "reorder",
        "--jobs",
        "1",
        "--input",
        src.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
    ]);
    let four = stdout_of(&[
        "reorder",
        "--jobs",
        "4",
        "--input",
        src.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
    ]);
    assert_eq!(one, four);
    let lines: Vec<&str> = one.lines().collect();
    assert_eq!(lines[0], "# id\torder\tflags");
    assert!(lines[1].starts_with("x\t") && lines[2].starts_with("y\t"));
    let identity = stdout_of(&["reorder", "--input", src.to_str().unwrap()]);
    assert!(identity.contains("x\t12345\tnnnnn\n"));
}

#[test]
fn eval_mt_reports_translation_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cand = write(dir.path(), "c.txt", "春眠暁を覚えず\n処処啼鳥聞く\n");
    let refs = write(dir.path(), "r.txt", "春眠暁を覚えず\n処処啼鳥を聞く\n");
    let report = stdout_of(&[
        "eval-mt",
        "--candidates",
        cand.to_str().unwrap(),
        "--references",
        refs.to_str().unwrap(),
    ]);
    assert!(report.starts_with("# kanbun metric report v1\n# bleu\t4\texponential\n"));
    assert!(
        report.contains("\n1\t-\t-\t-\t7,6,5,4\t7,6,5,4\t7\t7\t1.000000\t1.000000\n"),
        "{report}"
    );
    assert!(!report.contains("bleu\t-"));

    let short = write(dir.path(), "s.txt", "春眠暁を覚えず\n");
    let (code, _) = failure(&[
        "eval-mt",
        "--candidates",
        short.to_str().unwrap(),
        "--references",
        refs.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
}

#[test]
fn split_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("split");
    stdout_of(&[
        "split",
        "--input",
        &sample("corpus.tsv"),
        "--seed",
        "3",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    let mut sentences = 0;
    for name in ["train.tsv", "validation.tsv", "test.tsv"] {
        let stats = stdout_of(&["stats", "--input", out.join(name).to_str().unwrap()]);
        sentences += stats
            .lines()
            .nth(1)
            .unwrap()
            .split('\t')
            .nth(1)
            .unwrap()
            .parse::<usize>()
            .unwrap();
    }
    assert_eq!(sentences, 20);
    assert_eq!(
        stdout_of(&["stats", "--input", &sample("corpus.tsv")]),
        "poems\t5\nsentences\t20\ncharacters\t100\n"
    );
}

#[test]
fn correlate_wide_table_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let auto = write(
        dir.path(),
        "auto.tsv",
        "id\tbleu\tribes\na\t0.1\t0.4\nb\t0.5\t0.3\nc\t0.9\t0.2\n",
    );
    let human = write(
        dir.path(),
        "human.tsv",
        "a\tfluency\tr1\t1\na\tfluency\tr2\t1\nb\tfluency\tr1\t2\nb\tfluency\tr2\t3\nc\tfluency\tr1\t3\nc\tfluency\tr2\t3\n",
    );
    let out = stdout_of(&[
        "correlate",
        "--auto",
        auto.to_str().unwrap(),
        "--human",
        human.to_str().unwrap(),
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "# metric\tcriterion\tn\tpearson\tspearman");
    assert!(lines[1].starts_with("bleu\tfluency\t3\t0.960"), "{out}");
    assert_eq!(lines[2].split('\t').nth(4), Some("-1.000000"));
    assert_eq!(lines[3], "## agreement");
    // Items (1,1), (2,3), (3,3) over categories 1, 2, 3: P̄ = 2/3 and
    // P̄e = 7/18, so κ = 5/11.
    assert_eq!(lines[5], "fluency\t3\t2\t0.454545");

    let cand = write(dir.path(), "c.txt", "a\t春眠暁\nb\t春眠\nc\t暁\n");
    let refs = write(dir.path(), "r.txt", "a\t春眠暁\nb\t春眠暁\nc\t春眠暁\n");
    let report = write(
        dir.path(),
        "report.txt",
        &stdout_of(&[
            "eval-mt",
            "--candidates",
            cand.to_str().unwrap(),
            "--references",
            refs.to_str().unwrap(),
        ]),
    );
    let out = stdout_of(&[
        "correlate",
        "--auto",
        report.to_str().unwrap(),
        "--human",
        human.to_str().unwrap(),
    ]);
    let metrics: Vec<&str> = out
        .lines()
        .skip(1)
        .take(3)
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(metrics, ["bleu", "ribes", "rouge_l"]);
}

#[cfg(unix)]
#[test]
fn translate_through_external_command() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "src.tsv", "x\t春眠不覚暁\ny\t夜来風雨声\n");
    let model = dir.path().join("model.txt");
    stdout_of(&[
        "train",
        "--input",
        &sample("corpus.tsv"),
        "--output",
        model.to_str().unwrap(),
    ]);
    let echoed = stdout_of(&[
        "translate",
        "--input",
        src.to_str().unwrap(),
        "--backend",
        "cat",
    ]);
    assert_eq!(echoed, "# id\ttext\nx\t春眠不覚暁\ny\t夜来風雨声\n");
    let reordered = stdout_of(&[
        "translate",
        "--input",
        src.to_str().unwrap(),
        "--backend",
        "cat",
        "--reorder-model",
        model.to_str().unwrap(),
    ]);
    assert!(reordered.contains("y\t夜来風雨声\n"), "{reordered}");

    let (code, err) = failure(&[
        "translate",
        "--input",
        src.to_str().unwrap(),
        "--backend",
        "head",
        "--backend-arg",
        "-n1",
    ]);
    assert_eq!(code, 1);
    assert!(
        err["message"].as_str().unwrap().contains("1 lines for 2"),
        "{err}"
    );
}

#[test]
fn custom_char_table_replaces_the_shipped_one() {
    let dir = tempfile::tempdir().unwrap();
    let table = write(dir.path(), "forms.tsv", "覺\t覚\n");
    let raw = write(dir.path(), "raw.tsv", "a\tp\t春眠不覺曉\t春眠曉を覺えず\n");
    let notes = write(dir.path(), "notes.tsv", "a\tyomigana\t3\tず\n");
    let out = stdout_of(&[
        "extract",
        "--char-table",
        table.to_str().unwrap(),
        "--input",
        raw.to_str().unwrap(),
        "--annotations",
        notes.to_str().unwrap(),
    ]);
    // 曉 is not in the custom table, so it stays as written.
    assert!(
        out.contains("a\tp\t春眠不覚曉\t12543\t春眠曉を覚えず\tnnnnn\n"),
        "{out}"
    );

    let broken = write(dir.path(), "broken.tsv", "覺\t覚\n覺\t角\n");
    let (code, err) = failure(&[
        "extract",
        "--char-table",
        broken.to_str().unwrap(),
        "--input",
        raw.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert_eq!(err["line"], 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "extract".to_string(),
            "--input".into(),
            sample("raw.tsv"),
            "--annotations".into(),
            sample("annotations.tsv"),
            "--output".into(),
            dir.path().join(out).to_str().unwrap().to_string(),
        ]
    };
    for out in ["a.tsv", "b.tsv"] {
        let a = args(out);
        stdout_of(&a.iter().map(String::as_str).collect::<Vec<_>>());
    }
    let a = std::fs::read(dir.path().join("a.tsv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.tsv")).unwrap());
    assert_eq!(a, std::fs::read(sample("corpus.tsv")).unwrap());
}
