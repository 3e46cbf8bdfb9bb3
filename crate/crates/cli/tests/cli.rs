use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn levelci(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levelci")).args(args).env_remove("LEVELCI_SEED").output().unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = levelci(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_two_blobs(path: &Path) {
    let mut text = String::from("x,y\n");
    // two dense lattices, far apart
    for (cx, cy) in [(0.0, 0.0), (6.0, 0.0)] {
        for i in 0..10 {
            for j in 0..10 {
                text.push_str(&format!("{},{}\n", cx + 0.1 * i as f64, cy + 0.1 * j as f64));
            }
        }
    }
    fs::write(path, text).unwrap();
}

#[test]
fn exit_codes() {
    assert_eq!(levelci(&["levelset", "--scenario", "three-gmm", "--lambda", "qmax:2.0"]).status.code(), Some(2));
    assert_eq!(levelci(&["levelset", "--input", "/no/such/file.csv", "--lambda", "0.1"]).status.code(), Some(4));
    assert_eq!(levelci(&["levelset", "--scenario", "three-gmm"]).status.code(), Some(3));
    assert_eq!(levelci(&["levelset", "--wat"]).status.code(), Some(3));
    assert_eq!(levelci(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_csv_is_an_io_class_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    fs::write(&p, "1,2\n3,oops\n").unwrap();
    let out = levelci(&["levelset", "--input", p.to_str().unwrap(), "--lambda", "0.1"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row"));
}

#[test]
fn two_separated_blobs_give_two_components() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("blobs.csv");
    write_two_blobs(&p);
    let v = ok_json(&["levelset", "--input", p.to_str().unwrap(), "--h", "0.3", "--lambda", "qmax:0.5"]);
    assert_eq!(v["result"]["components"], 2);
    assert_eq!(v["result"]["upper_components"], 2);
    assert_eq!(v["config"]["input"], p.to_str().unwrap());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let json = dir.path().join(format!("{tag}.json"));
        let svg = dir.path().join(format!("{tag}.svg"));
        let out = levelci(&[
            "visualize",
            "--scenario",
            "three-gmm",
            "--n",
            "300",
            "--levels",
            "qmax:0.2,qmax:0.6",
            "--seed",
            "11",
            "--out-json",
            json.to_str().unwrap(),
            "--out-svg",
            svg.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        (fs::read(json).unwrap(), fs::read(svg).unwrap())
    };
    let a = run("a");
    let b = run("b");
    // the output paths differ, so compare the results only
    let ja: Value = serde_json::from_slice(&a.0).unwrap();
    let jb: Value = serde_json::from_slice(&b.0).unwrap();
    assert_eq!(ja["result"], jb["result"]);
    assert_eq!(a.1, b.1);
}

#[test]
fn confidence_overlay_has_one_ring_per_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("overlay.svg");
    let v = ok_json(&[
        "visualize",
        "--scenario",
        "four-mixture",
        "--h",
        "0.2",
        "--lambda",
        "qmax:0.3",
        "--alphas",
        "0.5,0.2,0.1,0.05",
        "--B",
        "100",
        "--out-svg",
        svg.to_str().unwrap(),
    ]);
    let levels = v["result"]["graph"]["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 4);
    let alphas: Vec<f64> = levels.iter().map(|l| l["alpha"].as_f64().unwrap()).collect();
    assert_eq!(alphas, vec![0.05, 0.1, 0.2, 0.5]);
    let lambdas: Vec<f64> = levels.iter().map(|l| l["lambda"].as_f64().unwrap()).collect();
    assert!(lambdas.windows(2).all(|w| w[0] <= w[1]));
    let text = fs::read_to_string(svg).unwrap();
    for a in ["alpha = 0.5 ", "alpha = 0.2 ", "alpha = 0.1 ", "alpha = 0.05 "] {
        assert!(text.contains(a), "legend lacks {a}");
    }
}

#[test]
fn standardized_faithful_like_data_splits_in_two() {
    let v = ok_json(&[
        "levelset",
        "--scenario",
        "old-faithful",
        "--scale",
        "standardize",
        "--h",
        "0.3",
        "--lambda",
        "qmax:0.4",
    ]);
    assert!(v["result"]["levelset"]["polylines"].as_array().unwrap().len() >= 2);
    assert_eq!(v["result"]["components"], 2);
}

fn band_area(n: &str) -> f64 {
    let v = ok_json(&[
        "confset",
        "--scenario",
        "three-gmm",
        "--n",
        n,
        "--h",
        "0.2",
        "--lambda",
        "0.3",
        "--method",
        "sup",
        "--B",
        "200",
        "--seed",
        "4",
    ]);
    let sets = v["result"]["sets"].as_array().unwrap();
    assert!(sets[0]["half_width"].as_f64().unwrap() >= 0.0);
    let r = &v["result"]["regions"];
    r["band"].as_f64().unwrap() * r["cell_area"].as_f64().unwrap()
}

#[test]
fn band_area_shrinks_with_sample_size() {
    let small = band_area("500");
    let large = band_area("2500");
    assert!(large < small, "{large} vs {small}");
}

#[test]
fn noisy_tube_keeps_several_modes_and_a_bridge() {
    let v = ok_json(&["visualize", "--scenario", "tube-6d", "--levels", "qmax:0.05,qmax:0.3"]);
    assert!(v["result"]["n_modes"].as_u64().unwrap() >= 2);
    let edges: usize =
        v["result"]["graph"]["levels"].as_array().unwrap().iter().map(|l| l["edges"].as_array().unwrap().len()).sum();
    assert!(edges >= 1);
    assert_eq!(v["result"]["dim"], 6);
}

#[test]
fn config_file_and_environment_supply_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small run\nscenario = three-gmm\nn = 200\nlambda = 0.2\nh = 0.25\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_levelci"))
        .args(["levelset", "--config", cfg.to_str().unwrap()])
        .env("LEVELCI_SEED", "9")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 9);
    assert_eq!(v["config"]["n"], 200);
    assert_eq!(v["config"]["h"], 0.25);
    assert_eq!(v["result"]["n"], 200);
}

#[test]
fn confset_writes_a_region_map() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("c.svg");
    let v = ok_json(&[
        "confset",
        "--scenario",
        "three-gmm",
        "--n",
        "300",
        "--lambda",
        "0.3",
        "--h",
        "0.2",
        "--B",
        "50",
        "--method",
        "sup,hausdorff",
        "--out-svg",
        svg.to_str().unwrap(),
    ]);
    let r = &v["result"]["regions"];
    let cells: u64 = ["inside-high", "inside-low", "band"].iter().map(|k| r[k].as_u64().unwrap()).sum();
    assert_eq!(cells, 128 * 128);
    assert_eq!(v["result"]["sets"].as_array().unwrap().len(), 2);
    let text = fs::read_to_string(svg).unwrap();
    assert!(text.starts_with("<svg") || text.starts_with("<?xml"));
}

#[test]
fn coverage_prints_a_table() {
    let out = levelci(&["coverage", "--scenario", "three-gmm", "--n", "200", "--trials", "2", "--B", "20"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[2].starts_with("hausdorff"));
    assert_eq!(levelci(&["coverage", "--scenario", "three-gmm", "--lambda", "0.3"]).status.code(), Some(3));
}
