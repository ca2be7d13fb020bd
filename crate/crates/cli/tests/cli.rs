use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphreduce"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn edge_count(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.trim().is_empty()).count()
}

#[test]
fn gen_then_reduce_writes_graph_map_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let out = dir.path().join("r.txt");
    let map = dir.path().join("map.txt");
    let trace = dir.path().join("trace.jsonl");
    assert!(run(&["gen", "er:n=40,p=0.2", "--seed", "3", "--out", p(&g)]).status.success());
    let before = edge_count(&g);

    let o = run(&[
        "reduce", "-i", p(&g), "--stop", "nodes=20", "--priority", "nodes", "--seed", "1",
        "--out", p(&out), "--map", p(&map), "--trace", p(&trace),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(edge_count(&out) < before);
    assert_eq!(fs::read_to_string(&map).unwrap().lines().count(), 40);
    let first = fs::read_to_string(&trace).unwrap();
    assert!(first.lines().next().unwrap().starts_with('{'));

    let o = run(&["metrics", "-i", p(&g), "--reduced", p(&out), "--map", p(&map)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"frobenius_true\""));
}

#[test]
fn same_seed_same_output() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    assert!(run(&["gen", "lattice:rows=6,cols=6", "--out", p(&g)]).status.success());
    let a = run(&["sparsify", "-i", p(&g), "--method", "ours", "--edges", "60", "--seed", "9"]);
    let b = run(&["sparsify", "-i", p(&g), "--method", "ours", "--edges", "60", "--seed", "9"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn baselines_run() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let c = dir.path().join("c.txt");
    assert!(run(&["gen", "lattice:rows=5,cols=5", "--out", p(&g)]).status.success());
    let o = run(&["sparsify", "-i", p(&g), "--method", "ss", "--edges", "40"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 40);
    let o = run(&["coarsen", "-i", p(&g), "--method", "heavy", "--nodes", "10", "--out", p(&c)]);
    assert!(o.status.success());
    let o = run(&["coarsen", "-i", p(&g), "--method", "random", "--levels", "1"]);
    assert!(o.status.success());
}

#[test]
fn compare_writes_long_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let csv = dir.path().join("out.csv");
    fs::write(
        &spec,
        r#"{"dataset":{"generator":"lattice:rows=5,cols=5"},"algorithms":["ours","random_matching"],
            "levels":[{"nodes":0.8},{"nodes":0.5}],"repeats":2,"seed":4}"#,
    )
    .unwrap();
    let o = run(&["compare", p(&spec), "--csv", p(&csv)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("level,algorithm,metric,vector_id,mean,std,count\n"));
    assert!(text.contains("nodes=0.5,random_matching,d_x,fiedler,"));
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "0 1\n2 3\n").unwrap();
    let o = run(&["reduce", "-i", p(&bad), "--stop", "edges=1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    assert!(!run(&["gen", "nonsense:n=3"]).status.success());
    assert!(!run(&["reduce", "-i", "/nonexistent/file", "--stop", "edges=1"]).status.success());
    fs::write(&bad, "0 1\n1 2\n").unwrap();
    assert!(!run(&["reduce", "-i", p(&bad), "--stop", "nodes=0"]).status.success());
    assert!(!run(&["reduce", "-i", p(&bad), "--stop", "edges=1", "--mode", "sketchy"]).status.success());
}
