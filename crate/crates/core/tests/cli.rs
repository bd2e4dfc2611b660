use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn nvdress(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvdress"))
        .args(args)
        .env("NVDRESS_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".params.ini");
    PathBuf::from(s)
}

#[test]
fn simulate_ple_writes_output_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ple.csv");
    let cfg = data("sideband_comb.ini");
    let o = nvdress(&["simulate-ple", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    assert!(text.starts_with("# command=simulate-ple\n# kind=ple\n"));
    assert!(text.lines().any(|l| l == "frequency_mhz,intensity"));
    let side = read(&sidecar(&out));
    assert!(side.contains("[drive]") && side.contains("k_stark_y_mhz = 19.4"));
}

#[test]
fn existing_output_needs_overwrite_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("odmr.csv");
    let cfg = data("odmr.ini");
    let args = ["simulate-odmr", "--config", path(&cfg), "--out", path(&out)];
    assert_eq!(nvdress(&args).status.code(), Some(0));
    let first = std::fs::read(&out).unwrap();
    let o = nvdress(&args);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exists"));
    let mut again = args.to_vec();
    again.push("--overwrite");
    assert_eq!(nvdress(&again).status.code(), Some(0));
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn sidecar_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let cfg = data("mw_sweep.ini");
    assert_eq!(
        nvdress(&["sweep-mw", "--config", path(&cfg), "--out", path(&out)])
            .status
            .code(),
        Some(0)
    );
    let copy = dir.path().join("rerun.ini");
    std::fs::copy(sidecar(&out), &copy).unwrap();
    let out2 = dir.path().join("sweep2.csv");
    let o = nvdress(&["sweep-mw", "--config", path(&copy), "--out", path(&out2)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&out), read(&out2));
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ini");
    std::fs::write(&bad, "[model]\nomega_x = 2900\nomega_y_mhz = 0\n").unwrap();
    let out = dir.path().join("x.csv");
    let o = nvdress(&["simulate-ple", "--config", path(&bad), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("omega_x"));
    assert!(!out.exists());

    let o = nvdress(&[
        "fit-peaks",
        "--config",
        path(&data("resonant_drive.ini")),
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unconverged_oracle_exits_with_three_and_keeps_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("oracle.ini");
    std::fs::write(
        &cfg,
        "[model]\nomega_x_mhz = 2900\nomega_y_mhz = 0\n\n[laser]\nrabi_x_mhz = 0\nrabi_y_mhz = 10\n\n\
         [lineshape]\ngamma_star_mhz = 15\n\n[scan]\nmin_mhz = -10\nmax_mhz = 10\nstep_mhz = 10\n\n\
         [oracle]\ntolerance = 1e-15\nmax_time_us = 0.2\n",
    )
    .unwrap();
    let out = dir.path().join("oracle.csv");
    let o = nvdress(&["oracle-validate", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(&out).contains("# unconverged_points=3"));
}

#[test]
fn fits_from_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("slope.csv");
    let o = nvdress(&[
        "fit-power-series",
        "--input",
        path(&data("power_series.csv")),
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let slope: f64 = read(&out)
        .lines()
        .find_map(|l| l.strip_prefix("# slope_mhz_per_sqrt_mw="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((slope - 15.8).abs() < 0.1, "{slope}");

    let out = dir.path().join("sidebands.csv");
    let o = nvdress(&[
        "fit-sidebands",
        "--config",
        path(&data("sideband_comb.ini")),
        "--input",
        path(&data("sideband_amplitudes.csv")),
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let k: f64 = read(&out)
        .lines()
        .find_map(|l| l.strip_prefix("k_stark_y,"))
        .and_then(|r| r.split(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((k - 19.4).abs() < 1e-3, "{k}");
}

#[test]
fn dipole_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("geometry.csv");
    let o = nvdress(&[
        "dipole-geometry",
        "--input",
        path(&data("dipoles.csv")),
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&out).lines().filter(|l| l.contains("pair_angle_x_y")).count(), 3);

    let out = dir.path().join("dipole.csv");
    let o = nvdress(&[
        "estimate-dipole",
        "--config",
        path(&data("dipole.ini")),
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    assert!(text.contains("transition_dipole,3.688"));
    assert!(text.contains("# seed=2024"));
}
