use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvrecon"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails_with(args: &[&str], needle: &str) {
    let out = run(args);
    assert!(!out.status.success(), "{args:?} should fail");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(needle), "{args:?}: `{err}` lacks `{needle}`");
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn gen_writes_requested_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "circle.txt");
    ok(&[
        "gen",
        "--shape",
        "circle",
        "--scale",
        "20",
        "--samples",
        "512",
        "--out",
        &out,
    ]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 512);
    assert!(dir.path().join("circle.txt.manifest").exists());

    let sphere = path(dir.path(), "sphere.txt");
    ok(&[
        "gen",
        "--shape",
        "sphere",
        "--samples",
        "4000",
        "--out",
        &sphere,
    ]);
    let text = fs::read_to_string(&sphere).unwrap();
    assert_eq!(text.lines().count(), 4000);
    assert!(text.lines().all(|l| l.split(',').count() == 3));
}

#[test]
fn gen_subset_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path(dir.path(), "a.txt"), path(dir.path(), "b.txt"));
    for out in [&a, &b] {
        ok(&[
            "gen",
            "--shape",
            "square_indent",
            "--keep",
            "0.05",
            "--seed",
            "7",
            "--out",
            out,
        ]);
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    assert_eq!(String::from_utf8(ta).unwrap().lines().count(), 25);
}

#[test]
fn gen_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "x.txt");
    fails_with(
        &["gen", "--shape", "hexagon", "--out", &out],
        "unknown shape",
    );
    fails_with(
        &["gen", "--shape", "circle", "--scale", "60", "--out", &out],
        "margin",
    );
}

#[test]
fn reconstruct_rejects_conflicting_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = path(dir.path(), "c.txt");
    ok(&[
        "gen",
        "--shape",
        "circle",
        "--scale",
        "10",
        "--samples",
        "100",
        "--grid",
        "50x50",
        "--out",
        &cloud,
    ]);
    let outdir = path(dir.path(), "out");
    fails_with(
        &[
            "reconstruct",
            "--solver",
            "alm",
            "--grid",
            "50x50x50",
            "--in",
            &cloud,
            "--outdir",
            &outdir,
        ],
        "ALM supports 2D only",
    );
    fails_with(
        &[
            "reconstruct",
            "--solver",
            "alm",
            "--s",
            "2",
            "--in",
            &cloud,
            "--outdir",
            &outdir,
        ],
        "s=1",
    );
    fails_with(
        &[
            "reconstruct",
            "--solver",
            "osm",
            "--r1",
            "15",
            "--in",
            &cloud,
            "--outdir",
            &outdir,
        ],
        "--r1",
    );
    fails_with(
        &[
            "reconstruct",
            "--solver",
            "alm",
            "--dt",
            "5",
            "--in",
            &cloud,
            "--outdir",
            &outdir,
        ],
        "--dt",
    );
    fails_with(
        &[
            "reconstruct",
            "--solver",
            "lbfgs",
            "--in",
            &cloud,
            "--outdir",
            &outdir,
        ],
        "unknown solver",
    );
}

#[test]
fn osm_pipeline_is_deterministic_and_config_driven() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = path(dir.path(), "c.txt");
    ok(&[
        "gen",
        "--shape",
        "circle",
        "--scale",
        "10",
        "--samples",
        "200",
        "--grid",
        "48x48",
        "--out",
        &cloud,
    ]);

    let config = path(dir.path(), "run.cfg");
    fs::write(
        &config,
        "solver=osm\ns=2\neta=5\ngrid=48x48\nmax_iters=40\n",
    )
    .unwrap();
    let (a, b) = (path(dir.path(), "a"), path(dir.path(), "b"));
    let summary = ok(&[
        "reconstruct",
        "--config",
        &config,
        "--eta",
        "2",
        "--in",
        &cloud,
        "--outdir",
        &a,
    ]);
    assert!(summary.contains("\"iters\":"));
    let manifest = fs::read_to_string(dir.path().join("a/manifest.txt")).unwrap();
    assert!(
        manifest.lines().any(|l| l == "eta=2"),
        "flags override the config file"
    );
    assert!(manifest.lines().any(|l| l == "max-iters=40"));

    // re-running the manifest reproduces the outputs
    let manifest_path = path(dir.path(), "a/manifest.txt");
    ok(&["reconstruct", "--config", &manifest_path, "--outdir", &b]);
    for f in ["phi.txt", "energy.csv"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    assert!(!dir.path().join("a/residuals.csv").exists());

    let contour = path(dir.path(), "contour.csv");
    let stdout = ok(&[
        "extract",
        "--in",
        &path(dir.path(), "a/phi.txt"),
        "--out",
        &contour,
        "--reference",
        &cloud,
    ]);
    let line = stdout
        .lines()
        .find(|l| l.starts_with("hausdorff="))
        .unwrap();
    let h: f64 = line["hausdorff=".len()..].parse().unwrap();
    assert!(h.is_finite() && h >= 0.0);
    assert!(fs::read_to_string(&contour).unwrap().lines().count() > 1);
    fails_with(
        &[
            "extract",
            "--in",
            &path(dir.path(), "a/phi.txt"),
            "--out",
            &path(dir.path(), "m.obj"),
        ],
        ".csv",
    );
}

#[test]
fn alm_writes_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = path(dir.path(), "c.txt");
    ok(&[
        "gen",
        "--shape",
        "circle",
        "--scale",
        "10",
        "--samples",
        "200",
        "--grid",
        "48x48",
        "--out",
        &cloud,
    ]);
    let outdir = path(dir.path(), "alm");
    let args = [
        "reconstruct",
        "--solver",
        "alm",
        "--eta",
        "1",
        "--r1",
        "15",
        "--r2",
        "10",
        "--r3",
        "3",
        "--grid",
        "48x48",
        "--max-iters",
        "20",
        "--in",
        &cloud,
        "--outdir",
        &outdir,
    ];
    ok(&args);
    let res = fs::read_to_string(dir.path().join("alm/residuals.csv")).unwrap();
    assert_eq!(res.lines().next().unwrap(), "iter,res_p,res_q,res_n");
    assert_eq!(res.lines().count(), 21);
    assert!(dir.path().join("alm/phi.txt").exists());
    assert!(dir.path().join("alm/energy.csv").exists());
}

#[test]
fn extract_3d_field_to_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = path(dir.path(), "s.txt");
    ok(&[
        "gen",
        "--shape",
        "sphere",
        "--scale",
        "8",
        "--samples",
        "500",
        "--grid",
        "34x34x34",
        "--out",
        &cloud,
    ]);
    let outdir = path(dir.path(), "run");
    ok(&[
        "reconstruct",
        "--grid",
        "34x34x34",
        "--max-iters",
        "5",
        "--in",
        &cloud,
        "--outdir",
        &outdir,
    ]);
    let phi = path(dir.path(), "run/phi.txt");
    let mesh = path(dir.path(), "mesh.obj");
    ok(&["extract", "--in", &phi, "--out", &mesh]);
    let text = fs::read_to_string(&mesh).unwrap();
    assert!(text.lines().any(|l| l.starts_with("v ")));
    assert!(text.lines().any(|l| l.starts_with("f ")));
    fails_with(
        &["extract", "--in", &phi, "--out", &path(dir.path(), "c.csv")],
        ".obj",
    );
}
