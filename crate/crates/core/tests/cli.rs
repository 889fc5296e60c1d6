use std::fs;
use std::path::Path;
use std::process::Command;

fn nldstab(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nldstab"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn profile_writes_files_and_repeats_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["profile", "--model", "gn", "--k", "1", "--omega", "0.5", "--grid-m", "257"];
    let first = nldstab(tmp.path(), &args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let csv = tmp.path().join("profile_w+0.500000.csv");
    let json = tmp.path().join("functionals_w+0.500000.json");
    assert!(tmp.path().join("profile_w+0.500000.prof").exists());
    let (a, b) = (fs::read(&csv).unwrap(), fs::read(&json).unwrap());
    assert!(String::from_utf8_lossy(&a).starts_with("# nldstab "));

    let doc: serde_json::Value = serde_json::from_slice(&b).unwrap();
    let r = &doc["data"];
    let k = r["K"].as_f64().unwrap().abs().max(1.0);
    assert!(r["defect_virial1"].as_f64().unwrap() <= 1e-6 * k);
    assert_eq!(doc["meta"]["config"]["model"]["family"], "gn");

    let second = nldstab(tmp.path(), &args);
    assert!(second.status.success());
    assert_eq!(fs::read(&csv).unwrap(), a);
    assert_eq!(fs::read(&json).unwrap(), b);
}

#[test]
fn outside_gap_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nldstab(tmp.path(), &["profile", "--omega", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "outside_gap");
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn numerical_failure_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nldstab(tmp.path(), &["profile", "--model", "gn", "--omega", "-0.4"]);
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "no_solitary_wave");
}

#[test]
fn empty_jordan_list_gives_an_empty_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nldstab(tmp.path(), &["jordan", "--model", "gn"]);
    assert!(out.status.success());
    let text = fs::read_to_string(tmp.path().join("jordan.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("omega,residual_kernel_U1"));
}

#[test]
fn jordan_reports_c11_equal_to_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nldstab(tmp.path(), &["jordan", "--model", "gn", "--k", "1", "--omega", "0.5", "--grid-m", "257"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("jordan_w+0.500000.json")).unwrap()).unwrap();
    let (c11, e) = (doc["data"]["c11"].as_f64().unwrap(), doc["data"]["energy"].as_f64().unwrap());
    assert!((c11 - e).abs() <= 1e-5 * e.abs().max(1.0));
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[model]\nfamily = \"gn\"\nk = 1.0\n[numerics]\ngrid_m = 129\n").unwrap();
    let out = nldstab(tmp.path(), &["profile", "--config", cfg.to_str().unwrap(), "--k", "2", "--omega", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("functionals_w+0.500000.json")).unwrap()).unwrap();
    assert_eq!(doc["meta"]["config"]["model"]["k"], 2.0);
    assert_eq!(doc["meta"]["config"]["numerics"]["grid_m"], 129);

    fs::write(&cfg, "[model]\nfamilly = \"gn\"\n").unwrap();
    let bad = nldstab(tmp.path(), &["profile", "--config", cfg.to_str().unwrap(), "--omega", "0.5"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn small_sweep_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nldstab(
        tmp.path(),
        &["sweep", "--model", "gn", "--k", "1", "--omega-range", "0.2,0.8", "--points", "3", "--grid-m", "129"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["functionals.csv", "trajectories.json", "events.json", "plot/top.csv", "plot/bottom.csv", "plot/band.csv", "plot/figure.gp"] {
        assert!(tmp.path().join(f).exists(), "{f} missing");
    }
    let spectra = fs::read_dir(tmp.path().join("spectra")).unwrap().count();
    assert_eq!(spectra, 3);
    let table = fs::read_to_string(tmp.path().join("functionals.csv")).unwrap();
    let header = table.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "omega,Q,K,M,V,E,L,dQ_domega,defect_virial1,defect_virial2,defect_KL,error");
}

#[test]
fn gn_cubic_has_no_critical_frequencies() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nldstab(tmp.path(), &["critical", "--model", "gn", "--k", "1", "--omega-range", "0,1", "--grid-m", "257"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("critical.json")).unwrap()).unwrap();
    assert!(doc["data"]["omega_e"]["omega"].is_null());
    assert!(doc["data"]["omega_vk"]["omega"].is_null());
}
