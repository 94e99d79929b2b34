use graphpde::fem::read_trajectory;
use graphpde::graphnet::load_checkpoint;
use graphpde::render::decode_ppm;
use std::path::Path;
use std::process::{Command, Output};

fn graphpde(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphpde"))
        .current_dir(dir)
        .env_remove("GRAPHPDE_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = graphpde(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn config_hash(stdout: &str) -> String {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix("config-hash="))
        .expect("hash line")
        .to_string()
}

const EXAMPLE: [&str; 15] = [
    "simulate",
    "--pde",
    "heat",
    "--bc",
    "top=200,left=0,right=0,bottom=0",
    "--nodes",
    "256",
    "--t-end",
    "0.064",
    "--dt",
    "8e-4",
    "--record-every",
    "20",
    "--seed",
    "1",
];

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["--help"][..], &["train", "--help"], &["rollout", "--help"]] {
        let out = graphpde(dir.path(), args);
        assert!(out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"));
    }
}

#[test]
fn heat_example_stays_within_boundary_values() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = EXAMPLE.to_vec();
    args.extend(["-o", "traj.ptr"]);
    ok(dir.path(), &args);
    let t = read_trajectory(&dir.path().join("traj.ptr")).unwrap();
    assert_eq!(t.num_frames(), 5);
    assert!((t.num_nodes as i64 - 256).abs() <= 8, "{} nodes", t.num_nodes);
    assert!(t.frames.iter().all(|v| (-1e-9..=200.0 + 1e-9).contains(v)));
    assert!(dir.path().join("traj.pgn").exists());
}

#[test]
fn errors_are_single_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 4] = [
        (&["simulate", "--pde", "wave"], "usage"),
        (&["simulate", "--no-such-flag"], "usage"),
        (
            &["rollout", "--checkpoint", "absent.pmp", "--traj", "absent.ptr"],
            "missing_file",
        ),
        (&["simulate", "--bc", "ceiling=1"], "invalid_argument"),
    ];
    for (args, kind) in cases {
        let out = graphpde(dir.path(), args);
        assert!(!out.status.success(), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with(&format!("error: kind={kind} msg=")), "{err}");
    }
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "# heat run\nnodes = 60\nt_end = 0.008\ndt = 8e-4\nrecord-every = 5\noutput = a.ptr\n",
    )
    .unwrap();
    ok(dir.path(), &["simulate", "--config", "run.cfg", "--record-every", "2"]);
    let t = read_trajectory(&dir.path().join("a.ptr")).unwrap();
    assert_eq!(t.num_frames(), 6);
    assert!((t.dt_record - 1.6e-3).abs() < 1e-15);

    std::fs::write(dir.path().join("bad.cfg"), "epochz = 3\n").unwrap();
    let out = graphpde(dir.path(), &["simulate", "--config", "bad.cfg"]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: kind=config"));
}

#[test]
fn resolved_config_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = EXAMPLE.to_vec();
    args.extend(["-o", "traj.ptr", "--out-dir", "first"]);
    let hash = config_hash(&ok(dir.path(), &args));
    let cfg = dir
        .path()
        .join("first/resolved")
        .join(format!("simulate-{}.cfg", &hash[..12]));
    assert!(cfg.exists());
    let cfg = cfg.to_str().unwrap().to_string();

    let again = config_hash(&ok(dir.path(), &["simulate", "--config", &cfg]));
    assert_eq!(again, hash);
    ok(dir.path(), &["simulate", "--config", &cfg, "--out-dir", "second"]);
    for f in ["traj.ptr", "traj.pgn"] {
        let a = std::fs::read(dir.path().join("first").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("second").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn dataset_train_eval_rollout_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let small = [
        "--epochs",
        "2",
        "--hidden",
        "8",
        "--message",
        "8",
        "--latent",
        "4",
        "--batch-size",
        "4",
    ];
    ok(
        d,
        &[
            "dataset",
            "--points",
            "30",
            "--frames",
            "30",
            "--n",
            "3",
            "--gap",
            "2",
            "--train",
            "2",
            "--val",
            "1",
            "--test",
            "1",
            "--max-windows",
            "4",
            "-o",
            "data",
        ],
    );
    let mut train = vec!["train", "--data", "data", "-o", "run"];
    train.extend(small);
    ok(d, &train);
    for f in ["run/best.pmp", "run/last.pmp", "run/loss.csv"] {
        assert!(d.join(f).exists(), "{f}");
    }
    assert_eq!(load_checkpoint(&d.join("run/last.pmp")).unwrap().history.len(), 2);
    let loss = std::fs::read_to_string(d.join("run/loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), 3);

    ok(
        d,
        &[
            "eval",
            "--checkpoint",
            "run/best.pmp",
            "--data",
            "data",
            "-o",
            "eval.csv",
        ],
    );
    let eval = std::fs::read_to_string(d.join("eval.csv")).unwrap();
    assert_eq!(eval.lines().count(), 1 + 4);

    ok(
        d,
        &[
            "rollout",
            "--steps",
            "8",
            "--checkpoint",
            "run/best.pmp",
            "--traj",
            "data/sim00003.ptr",
            "-o",
            "roll.csv",
        ],
    );
    let roll = std::fs::read_to_string(d.join("roll.csv")).unwrap();
    let rows: Vec<&str> = roll.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    for (k, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[0], (k + 1).to_string());
        assert_eq!(cols[1], (2 * (3 + k)).to_string());
        assert!(cols[2].parse::<f64>().unwrap().is_finite());
    }

    ok(
        d,
        &[
            "plot",
            "--traj",
            "data/sim00003.ptr",
            "--frame",
            "10",
            "--checkpoint",
            "run/best.pmp",
            "--width",
            "20",
            "--height",
            "10",
            "-o",
            "tri.ppm",
        ],
    );
    let (w, h, _) = decode_ppm(&std::fs::read(d.join("tri.ppm")).unwrap()).unwrap();
    assert_eq!((w, h), (3 * 20 + 8, 10));
    assert!(std::fs::read_to_string(d.join("tri.csv"))
        .unwrap()
        .starts_with("x,y,prediction,truth,error"));
    ok(d, &["plot", "--traj", "data/sim00003.ptr", "-o", "last.ppm"]);

    let mut transfer = vec![
        "transfer",
        "--checkpoint",
        "run/best.pmp",
        "--sims",
        "1",
        "--points",
        "30",
    ];
    transfer.extend(["--frames", "30", "--max-windows", "2", "-o", "transfer.csv"]);
    ok(d, &transfer);
    assert_eq!(
        std::fs::read_to_string(d.join("transfer.csv")).unwrap().lines().count(),
        3
    );

    let out = ok(
        d,
        &[
            "validate",
            "run/best.pmp",
            "data/manifest.txt",
            "data/sim00000.pgn",
            "data/sim00000.ptr",
        ],
    );
    assert_eq!(out.lines().filter(|l| l.ends_with("OK")).count(), 4, "{out}");

    let mut bytes = std::fs::read(d.join("run/best.pmp")).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 1;
    std::fs::write(d.join("broken.pmp"), bytes).unwrap();
    let bad = graphpde(d, &["validate", "broken.pmp"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stdout).contains("checksum"));
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error: kind=validation"));
}

#[test]
fn mesh_writes_requested_domain() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &["mesh", "--domain", "distorted", "--nodes", "120", "-o", "m.pgn"],
    );
    assert!(out.contains("nodes="));
    let g = graphpde::mesh::read_graph(&dir.path().join("m.pgn")).unwrap();
    assert!((g.num_nodes() as i64 - 120).abs() <= 6, "{}", g.num_nodes());
}
