use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const REPORTS: [&str; 20] = [
    "features.csv",
    "features.csv.schema",
    "cohort.csv",
    "cohort_report.txt",
    "generate_report.txt",
    "split.csv",
    "model.bin",
    "importance.csv",
    "train_report.txt",
    "calibrator.csv",
    "scores.csv",
    "threshold_table.csv",
    "threshold_table.txt",
    "stratified.csv",
    "stratified.txt",
    "metrics.txt",
    "economics.csv",
    "economics.txt",
    "capacity_sweep.csv",
    "zip_scatter.csv",
];

fn small_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/small.toml")
}

fn hicc(args: &[&str], dir: &Path) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_hicc"))
        .args(args)
        .arg(format!("paths.data_dir={}", dir.join("data").display()))
        .arg(format!("paths.out_dir={}", dir.join("out").display()))
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs");
    out
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = hicc(args, dir);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join("out").join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn pipeline_matches_individual_steps_and_is_reproducible() {
    let cfg = small_config();
    let cfg = cfg.to_str().unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());

    let stdout = ok(&["--config", cfg, "pipeline"], a.path());
    assert!(stdout.contains("roc_auc"), "{stdout}");
    for name in REPORTS.iter().chain(&["audit.txt", "capacity_sweep.txt"]) {
        assert!(a.path().join("out").join(name).exists(), "missing {name}");
    }

    for step in [
        "generate",
        "featurize",
        "train",
        "calibrate",
        "score",
        "evaluate",
        "economics",
        "audit",
    ] {
        ok(&["--config", cfg, "--workers", "1", step], b.path());
    }
    for name in REPORTS.iter().chain(&["audit.txt"]) {
        assert!(read(a.path(), name) == read(b.path(), name), "{name} differs");
    }
    for f in [
        "claims.csv",
        "members.csv",
        "enrollment.csv",
        "sdoh.csv",
        "gen_manifest.txt",
    ] {
        assert_eq!(
            fs::read(a.path().join("data").join(f)).unwrap(),
            fs::read(b.path().join("data").join(f)).unwrap(),
            "{f}"
        );
    }

    // scoring again over the same inputs rewrites the same bytes
    let before = read(b.path(), "scores.csv");
    ok(&["--config", cfg, "score"], b.path());
    assert!(before == read(b.path(), "scores.csv"));

    // a model fit on a different feature set refuses this matrix
    let other = b.path().join("out").join("other.csv");
    let text = String::from_utf8(read(b.path(), "features.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let renamed = text.replacen(header[1], "SOMETHING_ELSE", 1);
    fs::write(&other, renamed).unwrap();
    fs::copy(
        b.path().join("out/features.csv.schema"),
        b.path().join("out/other.csv.schema"),
    )
    .unwrap();
    let out = hicc(
        &["--config", cfg, "score", "--features", other.to_str().unwrap()],
        b.path(),
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("schema"), "{err}");
}

#[test]
fn missing_seed_is_a_named_one_line_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = hicc(&["generate", "generate.n_members=100"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim().lines().count(), 1, "{err}");
    assert!(err.contains("missing config key `seed`"), "{err}");

    let out = hicc(&["generate", "generate.n_memberz=100"], dir.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_memberz"));
}

/// Positives and negatives per score bin whose cumulative counts reproduce the
/// published holdout table. Negatives below 0.5 are cut to 10,000 rows to
/// keep the fixture small, so TN (and with it TNR and NPV) is not reproduced.
const BINS: [(f64, usize, usize); 7] = [
    (0.95, 3258, 4049),
    (0.85, 1348, 5356),
    (0.78, 361, 2227),
    (0.73, 469, 3413),
    (0.65, 589, 5885),
    (0.55, 528, 7172),
    (0.25, 8498, 10_000),
];

#[test]
fn evaluate_reproduces_holdout_table_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    fs::create_dir_all(&out_dir).unwrap();
    let mut scores = String::from("member_id,score\n");
    let mut cohort =
        String::from("member_id,label,recurrent,predict_total,age_band,gender,pharmacy_benefit,full_year,zip\n");
    let mut id = 0;
    for (score, pos, neg) in BINS {
        for k in 0..pos + neg {
            let label = k < pos;
            scores.push_str(&format!("M{id:08},{score}\n"));
            cohort.push_str(&format!(
                "M{id:08},{},0,{},18-64,{},1,1,10001\n",
                u8::from(label),
                if label { "300000.00" } else { "1000.00" },
                if id % 2 == 0 { "F" } else { "M" }
            ));
            id += 1;
        }
    }
    fs::write(out_dir.join("scores.csv"), scores).unwrap();
    fs::write(out_dir.join("cohort.csv"), cohort).unwrap();
    ok(&["evaluate"], dir.path());

    let table = String::from_utf8(read(dir.path(), "threshold_table.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "Threshold,TP,FP,FN,TN,Recall,TNR,Precision,NPV");
    // threshold, TP, FP, FN, recall, precision as printed
    let expected = [
        ("0.5", 6553, 28102, 8498, "43.54%", "18.91%"),
        ("0.6", 6025, 20930, 9026, "40.03%", "22.35%"),
        ("0.7", 5436, 15045, 9615, "36.12%", "26.54%"),
        ("0.76", 4967, 11632, 10084, "33.00%", "29.92%"),
        ("0.8", 4606, 9405, 10445, "30.60%", "32.87%"),
        ("0.9", 3258, 4049, 11793, "21.65%", "44.59%"),
        ("1", 0, 0, 15051, "0.00%", "N.A."),
    ];
    assert_eq!(lines.len(), 1 + expected.len());
    for (line, (t, tp, fp, fn_, recall, precision)) in lines[1..].iter().zip(expected) {
        let c: Vec<&str> = line.split(',').collect();
        assert_eq!(c[0], t, "{line}");
        assert_eq!(
            (c[1], c[2], c[3]),
            (&*tp.to_string(), &*fp.to_string(), &*fn_.to_string()),
            "{line}"
        );
        assert_eq!((c[5], c[7]), (recall, precision), "{line}");
    }
    let text = String::from_utf8(read(dir.path(), "threshold_table.txt")).unwrap();
    assert!(text.contains("N.A."));
}
