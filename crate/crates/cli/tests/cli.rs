use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn annealab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_annealab"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = walk(dir);
    v.sort();
    v
}

fn walk(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p.display().to_string());
        }
    }
    out
}

#[test]
fn generate_writes_ids_with_seed_and_index() {
    let dir = tempfile::tempdir().unwrap();
    let o = annealab(dir.path(), &["generate", "--dims", "4", "4", "4", "--boundary", "periodic", "--count", "10", "--seed", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let files = files_in(&dir.path().join("instances"));
    assert_eq!(files.len(), 10);
    for k in 0..10 {
        let name = format!("sg_4x4x4_periodic_s7_i{k}.txt");
        let path = dir.path().join("instances").join(&name);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains(&format!("# id sg_4x4x4_periodic_s7_i{k}")), "{name}");
    }
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = annealab(dir.path(), &["generate", "--dims", "3", "3", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error[config]") && stderr(&o).contains("generate.seed"));
    assert!(files_in(dir.path()).is_empty());
}

#[test]
fn every_config_problem_is_listed() {
    let dir = tempfile::tempdir().unwrap();
    let o = annealab(dir.path(), &["anneal", "--method", "annealer", "--instance", "nope.txt"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    for needle in ["anneal.method", "anneal.seed", "anneal.schedule", "nope.txt"] {
        assert!(e.contains(needle), "{needle} missing from: {e}");
    }
}

#[test]
fn bad_flag_value_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = annealab(dir.path(), &["anneal", "--beta", "hot"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[config]"));
}

fn prepare(dir: &Path) {
    let o = annealab(dir, &["generate", "--dims", "2", "2", "2", "--boundary", "open", "--count", "3", "--seed", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = annealab(dir, &["groundstate", "--instance-dir", "instances"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = annealab(dir, &["schedule", "--shape", "linear", "--kind", "quantum", "--start", "3", "--end", "0", "--sweeps", "50", "--out", "q.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn anneal_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path());
    let args = [
        "anneal", "--method", "sqa", "--schedule", "q.csv", "--instance", "instances/sg_2x2x2_open_s1_i0.txt",
        "--seed", "3", "--beta", "8", "--slices", "8", "--ground-states", "ground_states.txt",
    ];
    let a = annealab(dir.path(), &args);
    let b = annealab(dir.path(), &args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["N"], 8);
    assert!(report["residual"].as_f64().unwrap() >= -1e-9);
}

#[test]
fn unknown_instance_in_registry_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path());
    fs::write(dir.path().join("empty.txt"), "").unwrap();
    let o = annealab(
        dir.path(),
        &[
            "anneal", "--method", "sqa", "--schedule", "q.csv", "--instance", "instances/sg_2x2x2_open_s1_i0.txt",
            "--seed", "3", "--beta", "8", "--slices", "8", "--ground-states", "empty.txt",
        ],
    );
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("error[missing_ground_truth]"));
}

const CAMPAIGN: &str = r#"
seed = 5

[campaign]
instance_dir = "instances"
ground_states = "ground_states.txt"
sweeps = [10, 40, 160]
repetitions = 3
out = "results"

[[campaign.variants]]
label = "CA-linear"
method = "ca"
start = 0.1
end = 5.0

[[campaign.variants]]
label = "SQA-linear"
method = "sqa"
start = 3.0
end = 0.0
beta = 8.0
slices = 8
"#;

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path());
    fs::write(dir.path().join("c.toml"), CAMPAIGN).unwrap();
    let before = files_in(dir.path());
    let o = annealab(dir.path(), &["campaign", "--config", "c.toml", "--dry-run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("= 54"), "{stdout}");
    assert_eq!(files_in(dir.path()), before);
}

#[test]
fn campaign_is_byte_identical_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path());
    fs::write(dir.path().join("c.toml"), CAMPAIGN).unwrap();
    let a = annealab(dir.path(), &["campaign", "--config", "c.toml", "--workers", "1", "--out", "a"]);
    assert!(a.status.success(), "{}", stderr(&a));
    let b = annealab(dir.path(), &["campaign", "--config", "c.toml", "--workers", "3", "--out", "b"]);
    assert!(b.status.success(), "{}", stderr(&b));
    for f in ["records.jsonl", "curves.csv", "tts.csv", "efforts.csv", "fits.csv"] {
        let x = fs::read(dir.path().join("a").join(f)).unwrap();
        let y = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let records = fs::read_to_string(dir.path().join("a/records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 54);
    let curves = fs::read_to_string(dir.path().join("a/curves.csv")).unwrap();
    assert_eq!(curves.lines().next(), Some("method,N,t_a,median_Eres_per_spin,q25,q75"));
}

#[test]
fn campaign_reports_missing_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path());
    let reg = fs::read_to_string(dir.path().join("ground_states.txt")).unwrap();
    let kept: String = reg.lines().filter(|l| !l.contains("_i2")).map(|l| format!("{l}\n")).collect();
    fs::write(dir.path().join("ground_states.txt"), kept).unwrap();
    fs::write(dir.path().join("c.toml"), CAMPAIGN).unwrap();
    let o = annealab(dir.path(), &["campaign", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("sg_2x2x2_open_s1_i2"));
    let records = fs::read_to_string(dir.path().join("results/records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 36);
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path());
    fs::write(dir.path().join("c.toml"), CAMPAIGN).unwrap();
    let o = annealab(dir.path(), &["campaign", "--config", "c.toml", "--dry-run", "--repetitions", "1"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("= 18"));
}

#[test]
fn help_lists_flags() {
    let dir = tempfile::tempdir().unwrap();
    let o = annealab(dir.path(), &["campaign", "--help"]);
    assert!(o.status.success());
    let h = String::from_utf8_lossy(&o.stdout);
    for flag in ["--dry-run", "--sweeps", "--repetitions", "--ground-states", "--config", "--workers"] {
        assert!(h.contains(flag), "{flag}");
    }
}
