use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn sa_graph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sa-graph"))
        .args(args)
        .env("SA_GRAPH_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TRIANGLE: &str = r#"{"format":"sa-graph/1",
  "vertices":[{"id":"A","m":1},{"id":"B","m":1},{"id":"C","m":1}],
  "edges":[{"u":"A","v":"B","b":1},{"u":"B","v":"C","b":1},{"u":"A","v":"C","b":1}]}"#;

const TRIANGLE_WEIGHTS: &str =
    r#"{"weights":[{"u":"A","v":"B","p":1},{"u":"B","v":"C","p":1},{"u":"A","v":"C","p":3}]}"#;

fn outcome<'a>(report: &'a Value, criterion: &str) -> &'a Value {
    report["report"]["outcomes"]
        .as_array()
        .unwrap()
        .iter()
        .find(|o| o["criterion"] == criterion)
        .unwrap_or_else(|| panic!("no {criterion} outcome"))
}

#[test]
fn analyze_single_edge_is_certified() {
    let dir = tempfile::tempdir().unwrap();
    let k2 = write(
        dir.path(),
        "k2.json",
        r#"{"format":"sa-graph/1","vertices":[{"id":0,"m":1},{"id":1,"m":1}],"edges":[{"u":0,"v":1,"b":1}]}"#,
    );
    let report = json(&sa_graph(&["analyze", s(&k2)]));
    assert_eq!(outcome(&report, "gaffney")["status"], "certified");
    assert_eq!(report["report"]["verdict"], "certified_self_adjoint");
    assert_eq!(report["format"], "sa-graph-report/1");
    assert_eq!(report["input_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn analyze_example_family_text() {
    let out = sa_graph(&[
        "analyze",
        "--family",
        "example67",
        "--c1",
        "2",
        "--c2",
        "1",
        "--depth",
        "2000",
        "--format",
        "text",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("verdict       evidence: not essentially self-adjoint"),
        "{text}"
    );
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"format\": ");
    assert_eq!(sa_graph(&["analyze", s(&bad)]).status.code(), Some(2));
    let unknown = write(
        dir.path(),
        "u.json",
        r#"{"format":"sa-graph/1","vertices":[{"id":0,"m":1,"x":1}]}"#,
    );
    assert_eq!(sa_graph(&["analyze", s(&unknown)]).status.code(), Some(2));
    assert_eq!(sa_graph(&["analyze"]).status.code(), Some(2));
    assert_eq!(
        sa_graph(&["analyze", "--family", "example67", "--c1", "2"])
            .status
            .code(),
        Some(2)
    );
    let config = write(dir.path(), "c.json", r#"{"lanczos_tolerance": 1e-9, "nope": 1}"#);
    let out = sa_graph(&[
        "analyze",
        "--family",
        "path",
        "--exponent",
        "1",
        "--config",
        s(&config),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.json", r#"{"seed": 7, "jacobi_sizes": [10, 20]}"#);
    let args = [
        "analyze",
        "--family",
        "path",
        "--exponent",
        "1",
        "--config",
        s(&config),
    ];
    let report = json(&sa_graph(&args));
    assert_eq!(report["options"]["seed"], 7);
    assert_eq!(report["options"]["jacobi_sizes"], serde_json::json!([10, 20]));
    let mut with_flag = args.to_vec();
    with_flag.extend(["--seed", "9", "--depth", "50"]);
    let report = json(&sa_graph(&with_flag));
    assert_eq!(report["options"]["seed"], 9);
    assert_eq!(report["options"]["jacobi_sizes"], serde_json::json!([10, 50]));
}

#[test]
fn convert_single_edge() {
    let dir = tempfile::tempdir().unwrap();
    let edge = write(
        dir.path(),
        "edge.json",
        r#"{"format":"sa-graph/1","vertices":[{"id":0},{"id":1}],"edges":[{"u":0,"v":1,"length":2,"mu":3,"nu":6}]}"#,
    );
    let doc = json(&sa_graph(&[
        "convert",
        s(&edge),
        "--direction",
        "metric-to-discrete",
        "--verify",
    ]));
    assert_eq!(doc["vertices"][0]["m"], 6.0);
    assert_eq!(doc["vertices"][1]["m"], 6.0);
    assert_eq!(doc["edges"][0]["b"], 3.0);
}

fn random_document(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..30);
    let vertices: Vec<Value> = (0..n).map(|i| serde_json::json!({"id": i, "m": 1.0})).collect();
    let mut edges = Vec::new();
    for v in 1..n {
        let b = rng.gen_range(-4.0f64..4.0).exp();
        edges.push(serde_json::json!({"u": rng.gen_range(0..v), "v": v, "b": b}));
    }
    serde_json::json!({"format": "sa-graph/1", "vertices": vertices, "edges": edges}).to_string()
}

#[test]
fn convert_verify_on_random_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..12 {
        let input = write(dir.path(), &format!("g{k}.json"), &random_document(&mut rng));
        let metric = dir.path().join(format!("m{k}.json.gz"));
        for weight in ["capped-wouk", "wouk", "degree"] {
            let out = sa_graph(&[
                "convert",
                s(&input),
                "--direction",
                "discrete-to-metric",
                "--weight",
                weight,
                "--verify",
                "--out",
                s(&metric),
            ]);
            assert!(
                out.status.success(),
                "{k} {weight}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            assert!(String::from_utf8_lossy(&out.stderr).contains("verify: pass"));
        }
        let back = json(&sa_graph(&[
            "convert",
            s(&metric),
            "--direction",
            "metric-to-discrete",
            "--verify",
        ]));
        let original: Value = serde_json::from_str(&fs::read_to_string(&input).unwrap()).unwrap();
        assert_eq!(
            back["edges"].as_array().unwrap().len(),
            original["edges"].as_array().unwrap().len()
        );
    }
}

#[test]
fn convert_rejects_non_intrinsic_weight() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "t.json", TRIANGLE);
    let w = write(dir.path(), "w.json", TRIANGLE_WEIGHTS);
    let out = sa_graph(&[
        "convert",
        s(&g),
        "--direction",
        "discrete-to-metric",
        "--weight",
        s(&w),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not intrinsic"));
    let out = sa_graph(&["convert", s(&g), "--direction", "discrete-to-metric"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn metric_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "t.json", TRIANGLE);
    let w = write(dir.path(), "w.json", TRIANGLE_WEIGHTS);
    let r = json(&sa_graph(&[
        "metric",
        s(&g),
        "--weight",
        s(&w),
        "--source",
        "A",
        "--jump-size",
    ]));
    let c = r["distances"]
        .as_array()
        .unwrap()
        .iter()
        .find(|d| d["vertex"] == "C")
        .unwrap();
    assert_eq!(c["distance"], 2.0);
    assert_eq!(r["jump_size"], 3.0);
}

#[test]
fn metric_intrinsic_and_capped_jumps() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "t.json", TRIANGLE);
    let out = sa_graph(&["metric", s(&g), "--check-intrinsic", "--format", "text"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("intrinsic\tPASS"), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with(['A', 'B', 'C'])).count(), 3);
    let w = write(dir.path(), "w.json", TRIANGLE_WEIGHTS);
    let r = json(&sa_graph(&[
        "metric",
        s(&g),
        "--weight",
        s(&w),
        "--cap",
        "--jump-size",
    ]));
    assert!(r["jump_size"].as_f64().unwrap() <= 1.0);
    let r = json(&sa_graph(&[
        "metric",
        "--family",
        "example67",
        "--c1",
        "2",
        "--c2",
        "1",
        "--cap",
        "--jump-size",
    ]));
    assert!(r["jump_size"].as_f64().unwrap() <= 1.0);
}

#[test]
fn spectrum_free_path_matches_closed_form() {
    let r = json(&sa_graph(&[
        "spectrum",
        "--family",
        "path",
        "--diagonal",
        "2",
        "--off-diagonal",
        "1",
        "--depths",
        "10,100,1000",
    ]));
    for row in r["rows"].as_array().unwrap() {
        let n = row["depth"].as_f64().unwrap();
        let expected = 2.0 - 2.0 * (std::f64::consts::PI / (n + 1.0)).cos();
        let found = row["lambda_min"].as_f64().unwrap();
        assert!(
            (found - expected).abs() <= 1e-12 * expected.max(1e-3),
            "{n}: {found} vs {expected}"
        );
    }
}

#[test]
fn spectrum_example_family() {
    let r = json(&sa_graph(&[
        "spectrum",
        "--family",
        "example67",
        "--c1",
        "2",
        "--c2",
        "1",
        "--depths",
        "10,100,1000,2000",
    ]));
    let values: Vec<f64> = r["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["lambda_min"].as_f64().unwrap())
        .collect();
    assert!(values.iter().all(|&x| x >= -1e-8));
    assert!(values.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(r["deficiency"]["class"], "limit_circle_evidence");
}

#[test]
fn spectrum_rejects_unsorted_depths() {
    let out = sa_graph(&[
        "spectrum",
        "--family",
        "path",
        "--exponent",
        "1",
        "--depths",
        "100,10",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gzip_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "t.json", TRIANGLE);
    let gz = dir.path().join("r.json.gz");
    assert!(sa_graph(&["analyze", s(&g), "--out", s(&gz)]).status.success());
    let plain = json(&sa_graph(&["analyze", s(&g)]));
    let mut text = String::new();
    use std::io::Read;
    flate2::read::GzDecoder::new(fs::File::open(&gz).unwrap())
        .read_to_string(&mut text)
        .unwrap();
    assert_eq!(serde_json::from_str::<Value>(&text).unwrap(), plain);
    assert_eq!(plain["symbols"]["0"], "A");
}
