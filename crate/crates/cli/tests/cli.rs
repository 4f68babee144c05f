use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aniso-lobe"))
        .args(args)
        .env_remove("ANISO_LOBE_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const QUICK_FIT: [&str; 8] = [
    "--set",
    "grid_theta=16",
    "--set",
    "grid_phi=32",
    "--set",
    "max_iters=40",
    "--set",
    "lobe_map_width=32",
];

fn quick_fit(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["fit", "--out", s(out), "--side", "2", "--set", "lobe_map_height=16"];
    args.extend(QUICK_FIT);
    args.extend(extra);
    run(&args)
}

#[test]
fn fit_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit");
    let o = quick_fit(&out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for name in [
        "fit_params.txt",
        "fit_trace.csv",
        "resolved_config.txt",
        "target_lobe.ppm",
        "target_lobe.pfm",
        "fit_lobe.ppm",
        "fit_lobe.pfm",
    ] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let trace = fs::read_to_string(out.join("fit_trace.csv")).unwrap();
    assert!(trace.starts_with("iter,loss\n"));
    assert!(!trace.contains('\r'));
    let resolved = fs::read_to_string(out.join("resolved_config.txt")).unwrap();
    assert!(resolved.contains("side = 2"), "{resolved}");
    assert!(resolved.contains("grid_theta = 16"), "{resolved}");
    let params = fs::read_to_string(out.join("fit_params.txt")).unwrap();
    assert!(params.contains("lobes = 5"));
}

#[test]
fn fit_is_deterministic_and_accepts_pure_kl() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&quick_fit(&a, &["--seed", "7"])), 0);
    assert_eq!(code(&quick_fit(&b, &["--seed", "7"])), 0);
    for name in ["fit_trace.csv", "fit_params.txt", "fit_lobe.pfm"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let kl = dir.path().join("kl");
    assert_eq!(code(&quick_fit(&kl, &["--beta-js", "0"])), 0);
    assert!(fs::read_to_string(kl.join("fit_params.txt")).unwrap().contains("beta_js = 0\n"));
}

#[test]
fn config_files_resolve_relative_output_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# quick fit\nseed = 3\noutput_dir = results\ngrid_theta = 16\ngrid_phi = 32\n\n[fit]\nlambda = 66\nmu = 0.01\nside = 1\nmax_iters = 20\nlobe_maps = false\n",
    )
    .unwrap();
    let o = run(&["fit", "--config", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let resolved = fs::read_to_string(dir.path().join("results/resolved_config.txt")).unwrap();
    assert!(resolved.contains("lambda = 66"));
    assert!(resolved.contains("seed = 3"));
    assert!(!dir.path().join("results/fit_lobe.ppm").exists());
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(code(&run(&["fit", "--out", s(&out), "--set", "no_such_key=1"])), 2);
    assert_eq!(code(&run(&["fit", "--out", s(&out), "--set", "missing_equals"])), 2);
    assert_eq!(code(&run(&["sweep-n", "--out", s(&out), "--set", "n_list="])), 2);
    assert_eq!(code(&run(&["sweep-n", "--out", s(&out), "--set", "n_list=1,4"])), 2);
    assert_eq!(code(&run(&["gradcheck", "--out", s(&out), "--flip-sign", "nope"])), 2);
    assert_eq!(code(&run(&["ide-check", "--out", s(&out), "--set", "attenuation=fast"])), 2);
    assert_eq!(code(&run(&["eval-amortizer", "--out", s(&out)])), 2);
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "[fitt]\nlambda = 1\n").unwrap();
    assert_eq!(code(&run(&["fit", "--config", s(&cfg)])), 2);
    let threads = Command::new(env!("CARGO_BIN_EXE_aniso-lobe"))
        .args(["fit", "--out", s(&out)])
        .env("ANISO_LOBE_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&threads), 2);
    // rejected runs leave nothing behind
    assert!(!out.exists());
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let missing = dir.path().join("missing.scene");
    assert_eq!(code(&run(&["render", "--out", s(&out), "--scene", s(&missing)])), 3);
    assert_eq!(code(&run(&["fit", "--config", s(&dir.path().join("missing.cfg"))])), 3);

    let weights = dir.path().join("broken.bin");
    fs::write(&weights, b"ASG2VMF\0garbage").unwrap();
    let o = run(&["eval-amortizer", "--out", s(&out), "--weights", s(&weights)]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.bin"));
}

#[test]
fn gradcheck_passes_and_detects_a_flipped_gradient() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["gradcheck", "--out", s(&dir.path().join("ok"))]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let table = fs::read_to_string(dir.path().join("ok/gradcheck.csv")).unwrap();
    assert!(table.starts_with("name,family,coords_checked,max_rel_err,worst_coord,passed\n"));
    let bad = run(&["gradcheck", "--out", s(&dir.path().join("bad")), "--flip-sign", "loss_orient"]);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("loss_orient"));
}

#[test]
fn sweep_tables_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| -> Vec<String> {
        [
            "sweep-n", "--out", s(out), "--set", "grid_theta=12", "--set", "grid_phi=24", "--set", "n_list=1,3",
            "--set", "pairs=270:0.01", "--set", "seeds=2", "--set", "max_iters=30", "--set", "record_wall_time=false",
        ]
        .iter()
        .map(|x| x.to_string())
        .collect()
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let argv = args(out);
        let o = run(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let table = fs::read_to_string(a.join("sweep_n.csv")).unwrap();
    assert!(table.starts_with("N,lambda,mu,seed,final_loss,wall_time_ms\n"));
    assert_eq!(table.lines().count(), 1 + 2 * 2);
    for name in ["sweep_n.csv", "sweep_summary.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
    }
}

#[test]
fn amortizer_train_and_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train");
    let o = run(&[
        "train-amortizer", "--out", s(&train), "--steps", "3", "--set", "batch_size=2", "--set", "train_grid_theta=8",
        "--set", "train_grid_phi=16", "--set", "side=2", "--set", "log_every=0",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let curve = fs::read_to_string(train.join("loss_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 4);

    let eval = dir.path().join("eval");
    let o = run(&[
        "eval-amortizer", "--out", s(&eval), "--weights", s(&train.join("amortizer.bin")), "--set", "num_pairs=2",
        "--set", "isotropic_pairs=1", "--set", "max_iters=5", "--set", "grid_theta=8", "--set", "grid_phi=16",
    ]);
    // an untrained network may or may not meet the ratio gate
    assert!(matches!(code(&o), 0 | 1), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(eval.join("eval_summary.txt")).unwrap();
    assert!(summary.contains("pairs = 2\n"));
    assert_eq!(fs::read_to_string(eval.join("eval.csv")).unwrap().lines().count(), 3);
}

#[test]
fn render_writes_images_and_highlight_table() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("tiny.scene");
    fs::write(
        &scene,
        "[camera]\nposition = 0, 4, 0\nvfov = 20\nwidth = 16\nheight = 16\n[material]\nkappa = 50\n[light]\nposition = 0, 4, 0.1\n",
    )
    .unwrap();
    let out = dir.path().join("r");
    let o = run(&["render", "--scene", s(&scene), "--out", s(&out), "--e", "0.8", "--phi", "-0.5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("highlights.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    let pfms = fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "pfm"));
    assert_eq!(pfms.count(), 2);
}

#[test]
fn ide_check_reports_every_component() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ide");
    let o = run(&["ide-check", "--out", s(&out), "--samples", "2000", "--set", "kappas=5"]);
    assert!(matches!(code(&o), 0 | 1), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(out.join("ide_check.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 72);
    let summary = fs::read_to_string(out.join("ide_check_summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("sharp_limit,") && l.ends_with(",true")));
}

#[test]
fn flags_override_the_same_key_from_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ide.cfg");
    fs::write(&cfg, "[ide-check]\nsamples = 1000000\nkappas = 3\nmixture_check = false\n").unwrap();
    let out = dir.path().join("ide");
    let o = run(&["ide-check", "--config", s(&cfg), "--samples", "500", "--out", s(&out)]);
    assert!(matches!(code(&o), 0 | 1), "{}", String::from_utf8_lossy(&o.stderr));
    let resolved = fs::read_to_string(out.join("resolved_config.txt")).unwrap();
    assert!(resolved.contains("samples = 500"), "{resolved}");
}
