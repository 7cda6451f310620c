use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn dmmgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmmgen")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Writes a workload file and synthesizes its trace; returns the trace path.
fn synth(dir: &TempDir, workload: &str) -> PathBuf {
    let cfg = dir.path().join("workload.toml");
    std::fs::write(&cfg, workload).unwrap();
    let trace = dir.path().join("trace.txt");
    let o = dmmgen(&["synth", "--config", path(&cfg), "--out", path(&trace)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    trace
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    csv::Reader::from_reader(body.as_bytes()).records().map(Result::unwrap).collect()
}

#[test]
fn synth_and_stats() {
    let dir = TempDir::new().unwrap();
    let trace = synth(&dir, "sizes = [40, 1024]\nevents = 200\nlive_cap = 10\nseed = 3\n");
    let o = dmmgen(&["stats", "--trace", path(&trace)]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("events: 200"), "{out}");
    assert!(out.contains("distinct_sizes: 40,1024"), "{out}");
}

#[test]
fn optimize_then_compare_saves_memory_on_fixed_size_trace() {
    let dir = TempDir::new().unwrap();
    let trace = synth(&dir, "sizes = [40]\nevents = 2000\nlive_cap = 100\nseed = 1\n");
    let log = dir.path().join("log.csv");
    let best = dir.path().join("best.dmm");
    let o = dmmgen(&[
        "optimize", "--trace", path(&trace), "--generations", "30", "--seed", "1", "--workers", "2",
        "--out", path(&log), "--best-out", path(&best),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&std::fs::read_to_string(&log).unwrap());
    assert_eq!(rows.len(), 31);

    let o = dmmgen(&["compare", "--trace", path(&trace), "--dmm", path(&best)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# "));
    let rows = csv_rows(&text);
    let names: Vec<&str> = rows.iter().map(|r| &r[0]).collect();
    assert_eq!(names, ["kingsley", "lea", "evolved"]);
    let mem_saving: f64 = rows[2][8].parse().unwrap();
    assert!(mem_saving >= 30.0, "saving {mem_saving}");
}

#[test]
fn simulate_prints_one_line() {
    let dir = TempDir::new().unwrap();
    let trace = synth(&dir, "sizes = [24, 100]\nevents = 100\nlive_cap = 5\n");
    let dmm = dir.path().join("k.dmm");
    std::fs::write(&dmm, "# two lists\nAtomicDMM(FirstFitSLL(SizeHeader), SizeSelector(32), SizeSelector(32),\n  AtomicDMM(FirstFitSLL(SizeHeader), SizeSelector(128), SizeSelector(128), OperatingSystem))\n").unwrap();
    let o = dmmgen(&["simulate", "--dmm", path(&dmm), "--trace", path(&trace)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let fields: Vec<&str> = out.trim().split(',').collect();
    assert_eq!(fields.len(), 5, "{out}");
    assert!(fields[4].parse::<f64>().unwrap().is_finite());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.txt");
    assert_eq!(dmmgen(&["stats", "--trace", path(&missing)]).status.code(), Some(1));

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1 A 10 0\n1 A 10 16\n").unwrap();
    assert_eq!(dmmgen(&["stats", "--trace", path(&bad)]).status.code(), Some(1));

    let trace = synth(&dir, "sizes = [4096]\nevents = 200\nlive_cap = 50\n");
    let dmm = dir.path().join("os.dmm");
    std::fs::write(&dmm, "OperatingSystem(1024)\n").unwrap();
    let o = dmmgen(&["simulate", "--dmm", path(&dmm), "--trace", path(&trace)]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    assert_ne!(dmmgen(&["optimize", "--trace", path(&trace), "--pop", "7"]).status.code(), Some(0));
}

#[test]
fn topology_file_runs_like_workers_flag() {
    let dir = TempDir::new().unwrap();
    let trace = synth(&dir, "sizes = [24, 40, 300]\nevents = 400\nlive_cap = 20\n");
    let topo = dir.path().join("topo.toml");
    let o = dmmgen(&["gen-topology", "--workers", "3", "--out", path(&topo)]);
    assert!(o.status.success());
    let common = ["optimize", "--trace", path(&trace), "--generations", "5", "--seed", "9"];
    let a = dmmgen(&[&common[..], &["--topology", path(&topo)]].concat());
    let b = dmmgen(&[&common[..], &["--workers", "3"]].concat());
    assert!(a.status.success() && b.status.success());
    let body = |o: &Output| stdout(o).lines().skip(1).map(str::to_owned).collect::<Vec<_>>();
    assert_eq!(body(&a), body(&b));
}
