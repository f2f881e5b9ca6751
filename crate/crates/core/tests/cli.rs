use std::path::PathBuf;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn system(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("systems").join(name)
}

fn gifs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gifs")).args(args).env_remove("GIFS_WORKERS").output().expect("run gifs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn dimension_and_lattice() {
    let o = gifs(&["dimension", path_str(&system("cantor.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let s: f64 = stdout(&o).trim().trim_start_matches("s = ").parse().unwrap();
    assert!((s - 2f64.ln() / 3f64.ln()).abs() < 1e-12);

    let o = gifs(&["lattice", path_str(&system("nonlattice.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("NonLattice"));
}

#[test]
fn beta_csv_has_header_and_nine_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("beta.csv");
    let sys = system("cantor.json");
    let o = gifs(&["beta", path_str(&sys), "--q", "0:4:0.5", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let digest = hex::encode(Sha256::digest(std::fs::read(&sys).unwrap()));
    assert_eq!(lines[0], format!("# gifs-multifractal v{} system={digest}", env!("CARGO_PKG_VERSION")));
    assert_eq!(lines[1], "q,beta,gamma");
    assert_eq!(lines.len(), 2 + 9);
    for (k, row) in lines[2..].iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        let q: f64 = cols[0].parse().unwrap();
        let beta: f64 = cols[1].parse().unwrap();
        assert_eq!(q, 0.5 * k as f64);
        assert!((beta - (1.0 - q) * 2f64.ln() / 3f64.ln()).abs() < 1e-12);
        let gamma: f64 = cols[2].parse().unwrap();
        assert!(gamma < beta);
        // 17 significant digits in scientific notation.
        let mantissa = cols[1].split('e').next().unwrap().trim_start_matches('-').replace('.', "");
        assert_eq!(mantissa.len(), 17, "{}", cols[1]);
    }
    // No temporary files are left next to the output.
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(system("cantor.json")).unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, text.replacen("\"1/3\"", "\"4/3\"", 1)).unwrap();
    let o = gifs(&["validate", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ratio outside (0,1)"), "{}", stderr(&o));

    // Drop the edge from v back to u: v can no longer reach u.
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(system("two_vertex.json")).unwrap()).unwrap();
    v["edges"].as_array_mut().unwrap().retain(|e| e["id"] != "e3");
    let split = dir.path().join("split.json");
    std::fs::write(&split, v.to_string()).unwrap();
    let o = gifs(&["validate", path_str(&split)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("v cannot reach u"), "{}", stderr(&o));

    let o = gifs(&["validate", path_str(&dir.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(1));
    let o = gifs(&["beta", path_str(&system("cantor.json")), "--q", "2:1:0.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn undecided_verdict_exits_three() {
    let o = gifs(&["separation", path_str(&system("rotated_pair.json"))]);
    let text = stdout(&o);
    assert!(text.contains("SSC: holds"), "{text}");
    assert_eq!(o.status.code(), Some(if text.contains("undecided") { 3 } else { 0 }));
    let o = gifs(&["separation", path_str(&system("cantor.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("1/6"));
}

#[test]
fn constants_require_open_set_condition() {
    let o = gifs(&["constants", path_str(&system("halves.json"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("1/128"));
    let o = gifs(&["verify-t2", path_str(&system("nonlattice.json")), "--q", "0"]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1));
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let sys = system("nonlattice.json");
    let mut bodies = Vec::new();
    for w in ["1", "3", "8"] {
        let out = dir.path().join(format!("pack{w}.csv"));
        let o = gifs(&["--workers", w, "pack", path_str(&sys), "--q", "0:2:1", "--r", "1/1000:1/10:6", "--out", path_str(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        bodies.push(std::fs::read(&out).unwrap());
        let out = dir.path().join(format!("cloud{w}.csv"));
        let o = gifs(&["--workers", w, "--seed", "7", "attractor", path_str(&sys), "--chaos", "500", "--out", path_str(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        bodies.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(bodies[0], bodies[2]);
    assert_eq!(bodies[0], bodies[4]);
    assert_eq!(bodies[1], bodies[3]);
    assert_eq!(bodies[1], bodies[5]);
    let pack = String::from_utf8(bodies[0].clone()).unwrap();
    assert!(pack.lines().nth(1).unwrap() == "q,r,value_lo,value_hi,centers,kind");
    assert_eq!(pack.lines().count(), 2 + 18);

    // The environment variable is honoured when the flag is absent.
    let out = dir.path().join("env.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_gifs"))
        .args(["pack", path_str(&sys), "--q", "0:2:1", "--r", "1/1000:1/10:6", "--out", path_str(&out)])
        .env("GIFS_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&out).unwrap(), bodies[0]);
}

#[test]
fn attractor_cloud_schema() {
    let o = gifs(&["attractor", path_str(&system("gasket.json")), "--depth", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# gifs-multifractal v"));
    assert_eq!(lines[1], "x,y,depth,path");
    assert_eq!(lines.len(), 2 + 27);
    assert!(lines[2].ends_with(",3,e1-e1-e1"));
}

#[test]
fn overlap_and_small_scale_bound() {
    let sys = system("halves.json");
    let o = gifs(&["overlap", path_str(&sys), "--e", "e1", "--f", "e2", "--q", "0", "--r", "1/10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let row = stdout(&o).lines().nth(2).unwrap().to_string();
    let cols: Vec<&str> = row.split(',').collect();
    assert!(cols[2].parse::<f64>().unwrap() >= 1.0);

    let o = gifs(&["verify-t2", path_str(&sys), "--q", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().nth(1).unwrap(), "r,q_est_lo,q_est_hi,scaled,pass");
    assert_eq!(text.lines().count(), 2 + 20);
}

#[test]
fn verify_t1_fit_schema() {
    let o = gifs(&["verify-t1", path_str(&system("cantor.json")), "--q", "0", "--r", "1/10000:1/10:16"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().nth(1).unwrap(), "q,slope,stderr,beta_ref,pass");
    let cols: Vec<String> = text.lines().nth(2).unwrap().split(',').map(String::from).collect();
    let slope: f64 = cols[1].parse().unwrap();
    assert!((slope - 2f64.ln() / 3f64.ln()).abs() < 0.05);
}

#[test]
fn report_writes_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    let o = gifs(&["--out", path_str(&out), "report", path_str(&system("two_vertex.json")), "--q", "0:1:1"]);
    assert!(matches!(o.status.code(), Some(0) | Some(3)), "{}", stderr(&o));
    let names: Vec<String> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.iter().any(|n| n == "spectrum.csv"), "{names:?}");
    for n in names.iter().filter(|n| n.ends_with(".csv")) {
        let text = std::fs::read_to_string(out.join(n)).unwrap();
        assert!(text.starts_with("# gifs-multifractal v"), "{n}");
    }
}
