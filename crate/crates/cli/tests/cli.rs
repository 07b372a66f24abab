use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn mcflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcflab"))
        .args(args)
        .env_remove("RUST_BACKTRACE")
        .output()
        .expect("spawn mcflab")
}

fn out_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn meta_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| panic!("missing {key}"))
}

#[test]
fn shoot_torus_writes_profile() {
    let dir = out_dir("shoot");
    let o = mcflab(&["shoot-torus", "--step", "1e-3", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = fs::read_to_string(dir.join("profile.meta")).unwrap();
    assert!((meta_value(&meta, "ell") - 0.4371).abs() < 1e-3);
    assert!((meta_value(&meta, "r_out") - 3.3147).abs() < 1e-3);
    let csv = fs::read_to_string(dir.join("profile.csv")).unwrap();
    assert!(csv.starts_with("s,r,z,theta\n"));
    assert!(csv.lines().count() > 100);
}

#[test]
fn validate_passes() {
    let dir = out_dir("validate");
    let o = mcflab(&["validate", "--out", dir.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert_eq!(stdout.matches("[PASS]").count(), 5);
    assert!(dir.join("summary.txt").exists());
}

#[test]
fn run_then_restart_from_snapshot() {
    let dir = out_dir("run");
    let d = dir.to_str().unwrap();
    let o = mcflab(&["run", "--set", "t_end=0.02", "--set", "record_every=0.01", "--out", d]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let series = fs::read_to_string(dir.join("series.csv")).unwrap();
    assert!(series.starts_with("t,sup,inf,mean,probe0"));
    assert_eq!(series.lines().count(), 4);
    let snap = dir.join("snapshot_t0.0200.txt");
    assert!(snap.exists());

    let dir2 = out_dir("restart");
    let o = mcflab(&[
        "run",
        "--set",
        "builder=snapshot",
        "--set",
        &format!("snapshot={}", snap.display()),
        "--set",
        "t_end=0.04",
        "--out",
        dir2.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let series = fs::read_to_string(dir2.join("series.csv")).unwrap();
    let first_t: f64 = series.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((first_t - 0.02).abs() < 1e-12);
}

#[test]
fn config_file_and_flags() {
    let dir = out_dir("cfg");
    fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.config");
    fs::write(&cfg, "# mcf on a line\nflow=mcf\nt_end=0.01\ncount=64\n").unwrap();
    let o = mcflab(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "count=32",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let resolved = fs::read_to_string(dir.join("resolved.config")).unwrap();
    assert!(resolved.contains("flow=mcf"));
    assert!(resolved.contains("count=32"));
}

#[test]
fn unknown_key_is_an_error() {
    let dir = out_dir("bad");
    let o = mcflab(&["theorem1", "--set", "grid_size=3", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid_size"));
}

#[test]
fn short_theorem1_run() {
    let dir = out_dir("t1");
    let o = mcflab(&[
        "theorem1",
        "--set",
        "grid_n=128",
        "--set",
        "t_end=0.05",
        "--set",
        "shoot_step=1e-3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{stdout}");
    for name in ["4(a)", "4(b)", "4(c)", "4(d)"] {
        assert!(stdout.contains(name), "{stdout}");
    }
    assert!(stdout.contains("[PASS] 4(a)"), "{stdout}");
    for f in ["summary.txt", "series_mcf.csv", "series_heat.csv", "resolved.config"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    assert!(dir.join("mcf_snapshot_t0.0000.txt").exists());
    assert!(dir.join("mcf_snapshot_t0.0118.txt").exists());
}

#[test]
fn short_theorem2_run() {
    let dir = out_dir("t2");
    let o = mcflab(&[
        "theorem2",
        "--set",
        "m_max=2",
        "--set",
        "torus_outer=0.4",
        "--set",
        "x1_half=8",
        "--set",
        "fine_per_unit=130",
        "--set",
        "coarse_ratio=5",
        "--set",
        "t_end=0.1",
        "--set",
        "ball_centres=3",
        "--set",
        "ball_radii=1,2",
        "--set",
        "shoot_step=1e-3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{stdout}");
    assert!(stdout.contains("[PASS] 5(b)"), "{stdout}");
    let balls = fs::read_to_string(dir.join("ball_averages.csv")).unwrap();
    assert_eq!(balls.lines().count(), 1 + 3 * 2);
    let phase2 = fs::read_to_string(dir.join("series_phase2.csv")).unwrap();
    assert!(phase2.starts_with("t,sup,inf,mean,probe0,psi_gap,phi_gap"));
}
