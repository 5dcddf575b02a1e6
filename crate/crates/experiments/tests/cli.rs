use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfm")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn quake_dry_run_succeeds_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = pfm(&["quake", "--replicates", "0", "--out", out.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let datasets = fs::read_to_string(out.join("quake_datasets.csv")).unwrap();
    assert_eq!(datasets, "variant,events,distinct_events\nfull,21,21\nsub,19,19\ncont,23,19\n");
}

#[test]
fn overrides_reach_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = pfm(&["bench", "--seed", "99", "--replicates", "0", "--out", out.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("bench_report.json")).unwrap()).unwrap();
    assert_eq!(v["seed"], 99);
    assert_eq!(v["dry_run"], true);
}

#[test]
fn config_problems_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = write(dir.path(), "a.toml", "scenario = \"bench\"\nseed = 1\nreplicates = 1\ncolour = \"red\"\n");
    let wrong_kind = write(dir.path(), "b.toml", "scenario = \"bench\"\nseed = 1\nreplicates = 1\n");
    for args in [
        vec!["bench", "--config", bad_key.as_str()],
        vec!["shape-sim", "--config", wrong_kind.as_str()],
        vec!["bench", "--config", "/nonexistent.toml"],
        vec!["bench", "--format", "pdf"],
        vec!["bench", "--replicates", "many"],
    ] {
        let o = pfm(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn malformed_catalogue_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cat.csv", "event_id,m11,m22,m33,m12,m13,m23,region\ne1,1,0,-1,zero,0,0,2\n");
    let cfg = write(
        dir.path(),
        "q.toml",
        "scenario = \"earthquake\"\nseed = 1\nreplicates = 5\n[earthquake]\ninput = \"cat.csv\"\nregion = \"2\"\n",
    );
    let o = pfm(&["quake", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2, column 5"), "{err}");
}

#[test]
fn unusable_region_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cat.csv", "event_id,m11,m22,m33,m12,m13,m23,region\ne1,1,0,-1,0,0,0,2\ne2,0,0,0,0,0,0,2\n");
    let cfg = write(
        dir.path(),
        "q.toml",
        "scenario = \"earthquake\"\nseed = 1\nreplicates = 5\n[earthquake]\ninput = \"cat.csv\"\nregion = \"2\"\n",
    );
    let o = pfm(&["quake", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn help_documents_exit_codes_and_csv_format() {
    let o = pfm(&["--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("EXIT CODES"));
    assert!(text.contains("event_id,m11,m22,m33,m12,m13,m23,region"));
}
