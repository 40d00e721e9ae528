use std::fs;
use std::process::{Command, Output};

const EXAMPLE5: &str = "0 1\n1 2\n1 3\n1 4\n2 3\n3 4\n";

fn mixmoran(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixmoran"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn example_file(dir: &tempfile::TempDir) -> String {
    let path = dir.path().join("example5.txt");
    fs::write(&path, EXAMPLE5).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn exact_on_example_graph() {
    let dir = tempfile::tempdir().unwrap();
    let g = example_file(&dir);
    let out = mixmoran(&["exact", "--graph", &g, "--lambda", "0.5", "--r", "1", "--init", "vertex:2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,r,initial_set,fp,abs_time"));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&fields[..3], &["0.5", "1.0", "{2}"]);
    assert!((fields[3].parse::<f64>().unwrap() - 0.2).abs() < 1e-9);

    let exact = mixmoran(&["exact", "--graph", &g, "--lambda", "1", "--r", "1", "--init", "vertex:2", "--rational"]);
    assert!(stdout(&exact).lines().nth(1).unwrap().starts_with("1.0,1.0,{2},6/31,"));
}

#[test]
fn exact_star_center() {
    let out = mixmoran(&["exact", "--family", "star:3", "--lambda", "0", "--r", "1", "--init", "vertex:0", "--rational"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("0.0,1.0,{0},1/2,"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["exact", "--family", "star:3", "--lambda", "", "--r", "1"],
        vec!["exact", "--family", "star:3", "--lambda", "0.5"],
        vec!["exact", "--family", "wheel:3", "--lambda", "0.5", "--r", "1"],
        vec!["exact", "--family", "star:3", "--gnp", "5,0.5,1", "--lambda", "0.5", "--r", "1"],
        vec!["exact", "--family", "star:3", "--lambda", "0.5", "--r", "1", "--init", "vertex:9"],
        vec!["estimate", "--family", "cycle:5", "--lambda", "0.5", "--r", "2", "--auto", "--replicates", "10"],
        vec!["frobnicate"],
    ] {
        assert_eq!(mixmoran(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn domain_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let disconnected = dir.path().join("two.txt");
    fs::write(&disconnected, "0 1\n2 3\n").unwrap();
    let d = disconnected.to_string_lossy().into_owned();
    for args in [
        vec!["exact", "--graph", &d, "--lambda", "0.5", "--r", "1"],
        vec!["exact", "--family", "cycle:17", "--lambda", "0.5", "--r", "1"],
        vec!["exact", "--family", "cycle:9", "--lambda", "0.5", "--r", "1", "--rational"],
        vec!["estimate", "--family", "star:4", "--lambda", "0.2", "--r", "2", "--auto"],
        vec!["closed-form", "--family", "path:5", "--lambda", "0.5", "--r", "2"],
    ] {
        assert_eq!(mixmoran(&args).status.code(), Some(3), "{args:?}");
    }
}

#[test]
fn strict_cutoff_exits_four() {
    let out = mixmoran(&[
        "estimate", "--family", "cycle:8", "--lambda", "0.5", "--r", "1", "--replicates", "50", "--max-steps", "2",
        "--strict-cutoff",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cutoff"));
}

#[test]
fn closed_form_dispatch() {
    let dir = tempfile::tempdir().unwrap();
    let g = example_file(&dir);
    let out = mixmoran(&["closed-form", "--graph", &g, "--lambda", "0.5", "--r", "1", "--init", "vertex:2"]);
    assert_eq!(stdout(&out).lines().nth(1), Some("0.5,1.0,{2},0.2,neutral-half-lambda"));

    let refused = mixmoran(&["closed-form", "--graph", &g, "--lambda", "0.3", "--r", "1", "--init", "vertex:2"]);
    assert_eq!(refused.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("neither regular nor bidegreed"));

    let star = mixmoran(&["closed-form", "--family", "star:3", "--lambda", "1", "--r", "1", "--init", "vertex:0", "--rational"]);
    assert_eq!(stdout(&star).lines().nth(1), Some("1.0,1.0,{0},1/10,bidegreed"));

    let cycle = mixmoran(&["closed-form", "--family", "cycle:100", "--lambda", "0.5", "--r", "2"]);
    let row = stdout(&cycle).lines().nth(1).unwrap().to_string();
    assert!(row.ends_with(",cycle"));
    let fp: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    let want = mixmoran::closed_forms::cycle_fp(100, &mixmoran::ProcessParams::new(0.5, 2.0).unwrap()).unwrap();
    assert_eq!(fp, want);
}

#[test]
fn estimate_reruns_are_byte_identical() {
    let args = [
        "estimate", "--family", "star:4", "--lambda", "0,0.5,1", "--r", "0.5:2:0.5", "--init", "vertex:0", "--init",
        "vertex:1", "--replicates", "300", "--seed", "17",
    ];
    let (a, b) = (mixmoran(&args), mixmoran(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 1 + 3 * 4 * 2);
    let other = mixmoran(&[&args[..args.len() - 1], &["18"]].concat());
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn json_mirrors_csv_and_out_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("rows.csv");
    let json_path = dir.path().join("rows.json");
    let base = ["exact", "--family", "cycle:5", "--lambda", "0,1", "--r", "2", "--init", "all-singletons"];
    let c = mixmoran(&[&base[..], &["--out", csv_path.to_str().unwrap()]].concat());
    let j = mixmoran(&[&base[..], &["--format", "json", "--out", json_path.to_str().unwrap()]].concat());
    assert_eq!((c.status.code(), j.status.code()), (Some(0), Some(0)));
    assert!(c.stdout.is_empty());

    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let headers: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    let rows = json.as_array().unwrap();
    assert_eq!(rows.len(), records.len());
    assert_eq!(rows.len(), 10);
    for (rec, obj) in records.iter().zip(rows) {
        let obj = obj.as_object().unwrap();
        assert_eq!(obj.keys().collect::<std::collections::BTreeSet<_>>(), headers.iter().collect());
        for (h, v) in headers.iter().zip(rec.iter()) {
            match &obj[h] {
                serde_json::Value::String(s) => assert_eq!(s, v),
                other => assert_eq!(other.as_f64().unwrap(), v.parse::<f64>().unwrap()),
            }
        }
    }
}

#[test]
fn certify_reports_profile() {
    let dir = tempfile::tempdir().unwrap();
    let g = example_file(&dir);
    let out = mixmoran(&["certify", "--graph", &g, "--alpha", "4", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["d_min"], 1);
    assert_eq!(v[0]["d_max"], 4);
    assert_eq!(v[0]["alpha"], "4");
    assert_eq!(v[0]["distinct_degrees"], "1 2 3 4");
    assert_eq!(v[0]["regular"], false);
    assert_eq!(v[0]["bidegreed"], false);
    assert_eq!(v[0]["connected"], true);
    assert_eq!(v[0]["almost_regular"], true);
}

#[test]
fn generate_round_trips_through_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    let p = path.to_str().unwrap();
    assert_eq!(mixmoran(&["generate", "--gnp", "8,0.6,3", "--out", p]).status.code(), Some(0));
    let a = mixmoran(&["exact", "--graph", p, "--lambda", "0.3", "--r", "2", "--init", "all-singletons"]);
    let b = mixmoran(&["exact", "--gnp", "8,0.6,3", "--lambda", "0.3", "--r", "2", "--init", "all-singletons"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
