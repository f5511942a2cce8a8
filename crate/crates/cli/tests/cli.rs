use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn with_config(dir: &Path, text: &str) -> String {
    let count = fs::read_dir(dir).unwrap().count();
    let path = dir.join(format!("run{count}.cfg"));
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn default_run_writes_all_snapshots() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = qflow(&["run", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_dir(out.join("snapshots")).unwrap().count(), 65);
    let energy = fs::read_to_string(out.join("energy.csv")).unwrap();
    assert!(energy.starts_with(
        "k,tau,energy_before,energy_after,penalty,estimate_margin,eta_residual,max_norm,outer_iterations\n"
    ));
    assert_eq!(energy.lines().count(), 65);
    let run: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["passed"], true);
    assert_eq!(run["checks"].as_array().unwrap().len(), 9);
    let domain: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("domain.json")).unwrap()).unwrap();
    assert_eq!(domain["node_count"], 201);
}

#[test]
fn constant_preset_has_zero_energy() {
    let tmp = TempDir::new().unwrap();
    let cfg = with_config(tmp.path(), "preset = constant\nparams = 0.5,2\nsteps = 5\nmode = geometric\n");
    let out = tmp.path().join("out");
    let o = qflow(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(out.join("energy.csv")).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert_eq!(rec[2].parse::<f64>().unwrap(), 0.0);
        assert_eq!(rec[3].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let tmp = TempDir::new().unwrap();
    for (text, key) in [
        ("resolution = 4\n", "resolution"),
        ("speed = 3\n", "speed"),
        ("preset = branches\nparams = 1,2,3\n", "params"),
    ] {
        let cfg = with_config(tmp.path(), text);
        let o = qflow(&["run", "--config", &cfg, "--out", tmp.path().join("x").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(stderr(&o).contains(&format!("`{key}`")), "{}", stderr(&o));
    }
    let o = qflow(&["run", "--check", "nonsense", "--out", tmp.path().join("y").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_default_passes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("v");
    let o = qflow(&["verify", "--out", out.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for name in ["energy_expansion", "brute_force_equivalence", "holder", "eta_residual", "max_principle"] {
        assert!(names.contains(&name), "{name}");
    }
}

#[test]
fn negative_control_fails_monotonicity() {
    let tmp = TempDir::new().unwrap();
    let cfg = with_config(tmp.path(), "negative_control = energy_increase\nresolution = 51\nsteps = 8\n");
    let o = qflow(&["verify", "--config", &cfg, "--out", tmp.path().join("n").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("energy_monotonicity failed"), "{}", stderr(&o));
}

#[test]
fn scalar_verify_passes() {
    let tmp = TempDir::new().unwrap();
    let cfg = with_config(
        tmp.path(),
        "q = 1\npreset = branches\nparams = 0.2,1,-0.5\nresolution = 101\nsteps = 32\n",
    );
    let o = qflow(&[
        "verify",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("q1").to_str().unwrap(),
        "--check",
        "eta_residual",
        "--check",
        "scalar_chain_equivalence",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(tmp.path().join("q1/verify.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["checks"].as_array().unwrap().len(), 2);
}

/// run.json records the output directory, which differs between the two runs.
fn without_out_path(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v["config"].as_object_mut().unwrap().remove("out");
    v
}

#[test]
fn outputs_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = with_config(tmp.path(), "mode = geometric\nresolution = 41\nsteps = 10\nseed = 9\n");
    let read = |dir: &str| {
        let out = tmp.path().join(dir);
        let o = qflow(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        (
            fs::read(out.join("energy.csv")).unwrap(),
            fs::read(out.join("snapshots/10.csv")).unwrap(),
            without_out_path(&out.join("run.json")),
        )
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn sweep_and_oracle_tables() {
    let tmp = TempDir::new().unwrap();
    let cfg = with_config(tmp.path(), "sweep_h = 0.0625,0.03125\nsweep_resolutions = 21,41\n");
    let out = tmp.path().join("s");
    let o = qflow(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "resolution,tau,N,l2_error_vs_exact,linf_error_vs_exact,observed_order");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("21,") && lines[1].ends_with(','));
    assert!(out.join("cells/r41_n8/cell.json").exists());

    let single = with_config(tmp.path(), "sweep_h = 0.0625\nsweep_resolutions = 21\n");
    let one = tmp.path().join("one");
    assert_eq!(qflow(&["sweep", "--config", &single, "--out", one.to_str().unwrap(), "--jobs", "1"]).status.code(), Some(0));
    let again = fs::read_to_string(one.join("sweep.csv")).unwrap();
    assert_eq!(again.lines().nth(1), lines.get(1).copied());

    let orc = tmp.path().join("o");
    assert_eq!(qflow(&["oracle", "--config", &cfg, "--out", orc.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(fs::read_to_string(orc.join("oracle.csv")).unwrap().lines().count(), 5);
}
