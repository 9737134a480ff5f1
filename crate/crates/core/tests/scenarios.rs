use branchflow::io::{parse_scenario, parse_scenario_with_overrides, read_grid, run_scenario, ExperimentKind, GridData};
use std::path::{Path, PathBuf};
use std::process::Command;

fn shipped() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    v.sort();
    v
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

#[test]
fn every_shipped_scenario_validates() {
    let files = shipped();
    assert!(files.len() >= 13);
    let mut kinds = std::collections::BTreeSet::new();
    for f in &files {
        let s = parse_scenario(&std::fs::read_to_string(f).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        kinds.insert(s.kind.name());
        // The canonical form parses back to the same scenario.
        assert_eq!(parse_scenario(&s.to_toml()).unwrap(), s, "{}", f.display());
    }
    assert_eq!(kinds.len(), ExperimentKind::ALL.len());
}

#[test]
fn small_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("fig4_standard_map.toml", vec![]),
        ("fig3a_cosine_classical.toml", vec!["numerics.steps=500".to_string(), "source.count=400".to_string()]),
        ("fig3c_cosine_quantum.toml", vec!["numerics.steps=40".to_string()]),
        ("fig5_retention.toml", vec!["scan.resolution=[3, 3]".to_string(), "scan.trajectories=20".to_string()]),
    ];
    for (file, overrides) in cases {
        let text = std::fs::read_to_string(scenario(file)).unwrap();
        let s = parse_scenario_with_overrides(&text, &overrides).unwrap();
        let a = run_scenario(&s, &dir.path().join("a").join(file)).unwrap();
        let b = run_scenario(&s, &dir.path().join("b").join(file)).unwrap();
        assert!(a.passed, "{file}: {:?}", a.failures);
        assert!(!a.artifacts.is_empty());
        // Metrics can be NaN (an empty average), so compare them bitwise.
        let bits = |m: &branchflow::io::Manifest| m.metrics.iter().map(|(k, v)| (k.clone(), v.to_bits())).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b), "{file}");
        assert_eq!(a.artifacts, b.artifacts, "{file}");
        for name in a.artifacts.keys() {
            let x = std::fs::read(dir.path().join("a").join(file).join(name)).unwrap();
            let y = std::fs::read(dir.path().join("b").join(file).join(name)).unwrap();
            assert!(x == y, "{file}/{name} differs");
        }
    }
}

#[test]
fn quantum_run_writes_readable_grids() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("fig3c_cosine_quantum.toml")).unwrap();
    let s = parse_scenario_with_overrides(&text, &["numerics.steps=20".into()]).unwrap();
    let m = run_scenario(&s, dir.path()).unwrap();
    let (h, data) = read_grid(&dir.path().join("psi_final.bflow")).unwrap();
    assert_eq!((h.nx, h.ny), (256, 256));
    let GridData::C128(z) = data else { panic!("wave grids are complex") };
    let norm: f64 = z.iter().map(|z| z.norm_sqr()).sum::<f64>() * (2.0 * 8.0 * std::f64::consts::PI / 256.0).powi(2);
    assert!((norm - 1.0).abs() < 1e-9, "{norm}");
    assert!(m.metrics.contains_key("initial_energy"));
    assert!(dir.path().join("manifest.json").exists());
}

fn bflow(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bflow")).args(args).output().unwrap()
}

#[test]
fn cli_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let map = scenario("fig4_standard_map.toml");
    let ok = bflow(&["validate", map.to_str().unwrap()]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\nkind = \"manifold-mapp\"\n[numerics]\ndt = -1.0\n").unwrap();
    let out = bflow(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifold-map"));

    let run_dir = dir.path().join("map");
    let out = bflow(&["run", map.to_str().unwrap(), "--out", run_dir.to_str().unwrap(), "--override", "map.steps=3", "--override", "map.snapshots=[0, 3]"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(run_dir.join("manifest.json").exists());

    let stab = scenario("fig5_stability.toml");
    let scan_dir = dir.path().join("scan");
    let out = bflow(&["scan", stab.to_str().unwrap(), "--grid", "0:2:5,0:1:4", "--out", scan_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let grid = std::fs::read_dir(&scan_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "bflow"))
        .expect("scan writes a grid");
    let (h, _) = read_grid(&grid).unwrap();
    assert_eq!((h.nx, h.ny), (5, 4));
    let png = dir.path().join("render.ppm");
    let out = bflow(&["render", grid.to_str().unwrap(), "--style", "signed-redblue", "--out", png.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read(&png).unwrap().starts_with(b"P6"));

    let out = bflow(&["scan", map.to_str().unwrap(), "--grid", "0:2:5,0:1:4"]);
    assert_eq!(out.status.code(), Some(2));
}
