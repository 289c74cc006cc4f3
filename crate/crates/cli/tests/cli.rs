use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
[model]
steps = [{ k = 1.0, omega = 1.0 }]

[freeze]
t_freeze = 0.2

[grid]
y_max = 40.0
h = 2e-3

[propagator]
x_max = 20.0
h = 1e-2
dt = 5e-4
t_end = 0.3
leak_policy = "truncate"
leak_threshold = 1.0
output_every = 20

[output]
x_max = 20.0
x_step = 0.05
times = [0.0, 0.1, 0.2, 0.3]

[[states]]
kind = "bic"
step = 0

[[states]]
kind = "scattering"
energy = 2.0
"#;

fn scenario_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("scenario.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bicfreeze"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn read(path: &Path) -> Self {
        let mut r = csv::Reader::from_path(path).unwrap();
        let header = r.headers().unwrap().iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.unwrap().iter().map(String::from).collect())
            .collect();
        Self { header, rows }
    }

    fn index(&self, name: &str) -> usize {
        self.header
            .iter()
            .position(|h| h == name)
            .unwrap_or_else(|| panic!("no column {name} in {:?}", self.header))
    }

    fn raw(&self, name: &str) -> Vec<&str> {
        let j = self.index(name);
        self.rows.iter().map(|r| r[j].as_str()).collect()
    }

    fn column(&self, name: &str) -> Vec<f64> {
        self.raw(name).iter().map(|v| v.parse().unwrap()).collect()
    }

    fn x(&self) -> Vec<f64> {
        self.column("x")
    }
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn exports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(run(&["potential"], &cfg, out).status.success());
        assert!(run(&["states"], &cfg, out).status.success());
    }
    for file in ["potential.csv", "potential.json", "states.csv", "states.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn sidecar_describes_the_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, SMALL);
    let out = dir.path().join("out");
    assert!(run(&["potential"], &cfg, &out).status.success());
    let table = Csv::read(&out.join("potential.csv"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("potential.json")).unwrap()).unwrap();
    assert_eq!(meta["data_file"], "potential.csv");
    assert_eq!(meta["rows"], table.rows.len());
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(meta["columns"].as_array().unwrap().len(), table.header.len() - 1);
    assert_eq!(meta["config"]["freeze"]["t_freeze"], 0.2);
    // every value carries 17 significant digits
    assert!(table.rows[1].iter().all(|v| v.split('e').next().unwrap().trim_start_matches('-').len() == 18));
}

#[test]
fn potential_is_frozen_after_the_freeze() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, SMALL);
    let out = dir.path().join("out");
    let o = run(&["potential", "--times", "0.2,0.3,1.7"], &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = Csv::read(&out.join("potential.csv"));
    let frozen = table.raw("V(t=0.2)");
    assert_eq!(frozen, table.raw("V(t=0.3)"));
    assert_eq!(frozen, table.raw("V(t=1.7)"));
}

#[test]
fn frozen_density_is_constant() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, SMALL);
    let out = dir.path().join("out");
    let o = run(&["states", "--energies", "1", "--times", "0.2,0.3,0.9"], &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = Csv::read(&out.join("states.csv"));
    let at = table.column("density(bic0,E=1,t=0.2)");
    for t in ["0.3", "0.9"] {
        let later = table.column(&format!("density(bic0,E=1,t={t})"));
        for (a, b) in at.iter().zip(&later) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1e-300), "{a} vs {b}");
        }
    }
}

#[test]
fn bound_state_density_spreads_before_the_freeze() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, SMALL);
    let out = dir.path().join("out");
    assert!(run(&["states", "--energies", "1"], &cfg, &out).status.success());
    let table = Csv::read(&out.join("states.csv"));
    let peak = |t: &str| max(&table.column(&format!("density(bic0,E=1,t={t})")));
    assert!(peak("0") > peak("0.1"));
    assert!(peak("0.1") > peak("0.2"));
    assert_eq!(peak("0.2"), peak("0.3"));
}

#[test]
fn scattering_state_does_not_decay() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, SMALL);
    let out = dir.path().join("out");
    assert!(run(&["states", "--times", "0"], &cfg, &out).status.success());
    let table = Csv::read(&out.join("states.csv"));
    let x = table.x();
    let tail_mean = |name: &str| {
        let col = table.column(name);
        let tail: Vec<f64> = x.iter().zip(&col).filter(|(x, _)| **x >= 15.0).map(|(_, v)| *v).collect();
        tail.iter().sum::<f64>() / tail.len() as f64
    };
    let scattering = tail_mean("density(scattering,E=2,t=0)");
    let bic = tail_mean("density(bic0,E=1,t=0)");
    assert!(scattering > 0.1, "{scattering}");
    assert!(bic < 0.1 * scattering, "{bic} vs {scattering}");
}

#[test]
fn reversed_scenario_starts_from_the_frozen_slice() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, SMALL);
    let out = dir.path().join("out");
    assert!(run(&["potential", "--times", "0,0.2"], &cfg, &out).status.success());
    let o = run(&["potential", "--reversed", "--times", "0,0.2"], &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let forward = Csv::read(&out.join("potential.csv"));
    let reversed = Csv::read(&out.join("potential_reversed.csv"));
    assert_eq!(reversed.raw("V(s=0)"), forward.raw("V(t=0.2)"));
    assert_eq!(reversed.raw("V(s=0.2)"), forward.raw("V(t=0)"));

    let o = run(&["states", "--reversed", "--energies", "1", "--times", "0.1"], &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("states_reversed.csv").exists());
}

#[test]
fn singular_time_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, SMALL);
    let o = run(&["potential", "--times", "-0.25"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("singular time"), "{}", stderr(&o));
}

#[test]
fn negative_omega_is_rejected_for_regularity() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &SMALL.replace("omega = 1.0", "omega = -1.0"));
    let o = run(&["potential"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("model.steps[0].omega") && err.contains("regularity"), "{err}");
}

#[test]
fn scattering_at_a_bound_state_energy_is_degenerate() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &SMALL.replace("energy = 2.0", "energy = 1.0"));
    let o = run(&["states"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("states[1].energy") && err.contains("degenerate energy"), "{err}");
}

#[test]
fn unknown_keys_and_missing_files_are_reported() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &format!("{SMALL}\n[extra]\nvalue = 1\n"));
    assert_eq!(run(&["potential"], &cfg, dir.path()).status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    assert_eq!(run(&["potential"], &missing, dir.path()).status.code(), Some(3));
}

#[test]
fn window_beyond_the_chain_grid_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &SMALL.replace("y_max = 40.0", "y_max = 10.0"));
    let o = run(&["potential", "--times", "0"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid.y_max"), "{}", stderr(&o));
}

#[test]
fn evolve_reports_conserved_norm() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, SMALL);
    let out = dir.path().join("out");
    let o = run(&["evolve"], &cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("evolve.json")).unwrap()).unwrap();
    assert!(meta["extra"]["norm_drift"].as_f64().unwrap() < 1e-8);
    assert!(meta["extra"]["frozen_density_drift"].as_f64().is_some());
    let table = Csv::read(&out.join("evolve.csv"));
    assert_eq!(table.header[1], "density(t=0)");
    assert!(table.header.iter().any(|h| h == "density(t=0.2)"));
    assert!(table.header.iter().any(|h| h == "density(t=0.3)"));
}

#[test]
fn two_bound_state_scenario_runs() {
    let dir = TempDir::new().unwrap();
    let o = run(&["states", "--times", "0,0.3"], &scenario_file("two_bic.toml"), dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = Csv::read(&dir.path().join("states.csv"));
    assert_eq!(table.header.len(), 1 + 3 * 2);
    assert!(table.header.iter().any(|h| h.starts_with("density(bic1,")));
}

#[test]
fn default_scenario_verifies() {
    let dir = TempDir::new().unwrap();
    let o = run(&["verify"], &scenario_file("single_bic.toml"), dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["checks"].as_array().unwrap().len() >= 10);
}

#[test]
fn failing_check_exits_with_one() {
    // a coarse propagation grid cannot hold the frozen density steady
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &SMALL.replace("h = 1e-2", "h = 1e-1"));
    let o = run(&["verify"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stdout));
}
