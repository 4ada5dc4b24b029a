mod settings;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use curvrecon::alm::{self, AlmConfig};
use curvrecon::distance::PointCloud;
use curvrecon::extract::{hausdorff_to_reference, marching_cubes, marching_squares};
use curvrecon::grid::{GridShape, ScalarField};
use curvrecon::osm::{self, OsmConfig};
use curvrecon::report::RunReport;
use curvrecon::shapes::{generate, perturb, ShapeKind, ShapeSpec};

use settings::{format_grid, parse_grid, parse_list, Manifest, Settings};

#[derive(Parser)]
#[command(
    name = "curvrecon",
    version,
    about = "Surface reconstruction from point clouds with curvature-regularized level sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic point cloud.
    Gen(GenArgs),
    /// Reconstruct a level set function from a point cloud.
    Reconstruct(ReconstructArgs),
    /// Extract the zero level set of a stored field.
    Extract(ExtractArgs),
}

#[derive(Args)]
struct GenArgs {
    /// key=value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    scale: Option<f64>,
    /// Comma-separated centre coordinates.
    #[arg(long)]
    center: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Fraction of points kept after noise.
    #[arg(long)]
    keep: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Domain used for centring and the margin check, MxN or MxNxP.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// osm or alm.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    s: Option<u32>,
    #[arg(long)]
    eta: Option<f64>,
    /// MxN or MxNxP; defaults to 100x100 or 50x50x50 by cloud dimension.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    r1: Option<f64>,
    #[arg(long)]
    r2: Option<f64>,
    #[arg(long)]
    r3: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    reinit_steps: Option<usize>,
    /// Recorded in the manifest; the solvers are deterministic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    outdir: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// `.csv` for 2D fields, `.obj` for 3D fields.
    #[arg(long)]
    out: PathBuf,
    /// Point cloud to measure the Hausdorff distance against.
    #[arg(long)]
    reference: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Extract(a) => cmd_extract(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn argv() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn load_settings(path: &Option<PathBuf>) -> Result<Settings> {
    path.as_deref()
        .map_or_else(|| Ok(Settings::default()), Settings::load)
}

fn default_grid(ndim: usize) -> Vec<usize> {
    if ndim == 3 {
        vec![50, 50, 50]
    } else {
        vec![100, 100]
    }
}

const GEN_KEYS: [&str; 9] = [
    "shape",
    "scale",
    "center",
    "samples",
    "noise-sigma",
    "keep",
    "seed",
    "grid",
    "out",
];

fn cmd_gen(a: GenArgs) -> Result<()> {
    let start = Instant::now();
    let mut cfg = load_settings(&a.config)?;
    cfg.overlay("shape", &a.shape);
    cfg.overlay("scale", &a.scale);
    cfg.overlay("center", &a.center);
    cfg.overlay("samples", &a.samples);
    cfg.overlay("noise-sigma", &a.noise_sigma);
    cfg.overlay("keep", &a.keep);
    cfg.overlay("seed", &a.seed);
    cfg.overlay("grid", &a.grid);
    cfg.overlay("out", &a.out.as_ref().map(|p| p.display()));
    cfg.check_known(&GEN_KEYS, "gen")?;

    let kind: ShapeKind = cfg.raw("shape").context("--shape is required")?.parse()?;
    let dims = match cfg.raw("grid") {
        Some(g) => parse_grid(g)?,
        None => default_grid(kind.ndim()),
    };
    let domain = GridShape::new(&dims)?;
    let seed = cfg.get_or("seed", 0u64)?;
    let samples = cfg.get_or("samples", if kind.ndim() == 3 { 4000 } else { 512 })?;
    let mut spec = ShapeSpec::centered(kind, domain, samples, seed);
    if let Some(c) = cfg.raw("center") {
        spec.center = parse_list(c)?;
    }
    spec.scale = cfg.get_or("scale", spec.scale)?;
    let sigma = cfg.get_or("noise-sigma", 0.0)?;
    let keep = cfg.get_or("keep", 1.0)?;
    let out = PathBuf::from(cfg.raw("out").context("--out is required")?);

    let mut cloud = generate(&spec)?;
    if sigma > 0.0 || keep < 1.0 {
        let (perturbed, clamped) = perturb(&cloud, sigma, keep, seed, Some(domain))?;
        if clamped > 0 {
            eprintln!("note: {clamped} noisy points were clamped back inside the margin");
        }
        cloud = perturbed;
    }
    write_with(&out, |w| Ok(cloud.write_text(w)?))?;

    let mut m = Manifest::default();
    m.push("command", "gen");
    m.push("argv", argv());
    m.push("shape", kind);
    m.push("scale", spec.scale);
    m.push(
        "center",
        spec.center
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    m.push("samples", samples);
    m.push("noise-sigma", sigma);
    m.push("keep", keep);
    m.push("seed", seed);
    m.push("grid", format_grid(&dims));
    m.push("out", out.display());
    m.push("duration_s", start.elapsed().as_secs_f64());
    m.write(&manifest_path(&out))?;
    println!("wrote {} points to {}", cloud.len(), out.display());
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    out.with_file_name(name)
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

const COMMON_KEYS: [&str; 11] = [
    "solver",
    "s",
    "eta",
    "grid",
    "epsilon",
    "max-iters",
    "tol",
    "reinit-steps",
    "seed",
    "in",
    "outdir",
];
const OSM_KEYS: [&str; 3] = ["dt", "gamma", "alpha"];
const ALM_KEYS: [&str; 5] = ["r1", "r2", "r3", "beta", "beta2"];

enum Solver {
    Osm(OsmConfig),
    Alm(AlmConfig),
}

fn cmd_reconstruct(a: ReconstructArgs) -> Result<()> {
    let start = Instant::now();
    let mut cfg = load_settings(&a.config)?;
    cfg.overlay("solver", &a.solver);
    cfg.overlay("s", &a.s);
    cfg.overlay("eta", &a.eta);
    cfg.overlay("grid", &a.grid);
    cfg.overlay("dt", &a.dt);
    cfg.overlay("gamma", &a.gamma);
    cfg.overlay("alpha", &a.alpha);
    cfg.overlay("r1", &a.r1);
    cfg.overlay("r2", &a.r2);
    cfg.overlay("r3", &a.r3);
    cfg.overlay("beta", &a.beta);
    cfg.overlay("beta2", &a.beta2);
    cfg.overlay("epsilon", &a.epsilon);
    cfg.overlay("max-iters", &a.max_iters);
    cfg.overlay("tol", &a.tol);
    cfg.overlay("reinit-steps", &a.reinit_steps);
    cfg.overlay("seed", &a.seed);
    cfg.overlay("in", &a.input.as_ref().map(|p| p.display()));
    cfg.overlay("outdir", &a.outdir.as_ref().map(|p| p.display()));
    let all: Vec<&str> = COMMON_KEYS
        .iter()
        .chain(&OSM_KEYS)
        .chain(&ALM_KEYS)
        .copied()
        .collect();
    cfg.check_known(&all, "reconstruct")?;

    let input = PathBuf::from(cfg.raw("in").context("--in is required")?);
    let outdir = PathBuf::from(cfg.raw("outdir").unwrap_or("."));
    let cloud = read_cloud(&input)?;
    let dims = match cfg.raw("grid") {
        Some(g) => parse_grid(g)?,
        None => default_grid(cloud.ndim()),
    };
    let shape = GridShape::new(&dims)?;
    let solver_name = cfg.raw("solver").unwrap_or("osm").to_string();
    let seed = cfg.get_or("seed", 0u64)?;

    let solver = match solver_name.as_str() {
        "osm" => {
            let conflicts: Vec<&str> = ALM_KEYS.iter().copied().filter(|k| cfg.has(k)).collect();
            if !conflicts.is_empty() {
                bail!(
                    "the osm solver does not take {}; they apply to alm only",
                    flag_list(&conflicts)
                );
            }
            let base = if shape.ndim() == 3 {
                OsmConfig::default_3d()
            } else {
                OsmConfig::default()
            };
            let c = OsmConfig {
                s: cfg.get_or("s", base.s)?,
                eta: cfg.get_or("eta", base.eta)?,
                dt: cfg.get_or("dt", base.dt)?,
                gamma: cfg.get_or("gamma", base.gamma)?,
                alpha: cfg.get_or("alpha", base.alpha)?,
                epsilon: cfg.get_or("epsilon", base.epsilon)?,
                max_iters: cfg.get_or("max-iters", base.max_iters)?,
                tol: cfg.get_or("tol", base.tol)?,
                reinit_steps: cfg.get_or("reinit-steps", base.reinit_steps)?,
                ..base
            };
            c.validate()?;
            Solver::Osm(c)
        }
        "alm" => {
            if shape.ndim() != 2 {
                bail!("ALM supports 2D only (grid {})", format_grid(&dims));
            }
            if let Some(s) = cfg.get::<u32>("s")? {
                if s != 1 {
                    bail!("ALM solves the s=1 model only; got --s {s}");
                }
            }
            let conflicts: Vec<&str> = OSM_KEYS.iter().copied().filter(|k| cfg.has(k)).collect();
            if !conflicts.is_empty() {
                bail!(
                    "the alm solver does not take {}; they apply to osm only",
                    flag_list(&conflicts)
                );
            }
            let base = AlmConfig::default();
            let c = AlmConfig {
                eta: cfg.get_or("eta", base.eta)?,
                r1: cfg.get_or("r1", base.r1)?,
                r2: cfg.get_or("r2", base.r2)?,
                r3: cfg.get_or("r3", base.r3)?,
                beta: cfg.get_or("beta", base.beta)?,
                beta2: cfg.get_or("beta2", base.beta2)?,
                epsilon: cfg.get_or("epsilon", base.epsilon)?,
                max_iters: cfg.get_or("max-iters", base.max_iters)?,
                tol: cfg.get_or("tol", base.tol)?,
                reinit_steps: cfg.get_or("reinit-steps", base.reinit_steps)?,
                ..base
            };
            c.validate()?;
            Solver::Alm(c)
        }
        other => bail!("unknown solver `{other}` (expected osm or alm)"),
    };
    if cloud.ndim() != shape.ndim() {
        bail!(
            "the cloud is {}D but the grid {} is {}D",
            cloud.ndim(),
            format_grid(&dims),
            shape.ndim()
        );
    }

    let report = match &solver {
        Solver::Osm(c) => osm::osm_run(&cloud, c, shape)?,
        Solver::Alm(c) => alm::alm_run(&cloud, c, shape)?,
    };

    fs::create_dir_all(&outdir).with_context(|| format!("creating {}", outdir.display()))?;
    write_with(&outdir.join("phi.txt"), |w| Ok(report.phi.write_text(w)?))?;
    write_with(&outdir.join("energy.csv"), |w| {
        Ok(report.write_energy_csv(w)?)
    })?;
    if matches!(solver, Solver::Alm(_)) {
        write_with(&outdir.join("residuals.csv"), |w| {
            Ok(report.write_residual_csv(w)?)
        })?;
    }

    let mut m = Manifest::default();
    m.push("command", "reconstruct");
    m.push("argv", argv());
    m.push("solver", &solver_name);
    match &solver {
        Solver::Osm(c) => {
            m.push("s", c.s);
            m.push("eta", c.eta);
            m.push("dt", c.dt);
            m.push("gamma", c.gamma);
            m.push("alpha", c.alpha);
            m.push("epsilon", c.epsilon);
            m.push("max-iters", c.max_iters);
            m.push("tol", c.tol);
            m.push("reinit-steps", c.reinit_steps);
        }
        Solver::Alm(c) => {
            m.push("eta", c.eta);
            m.push("r1", c.r1);
            m.push("r2", c.r2);
            m.push("r3", c.r3);
            m.push("beta", c.beta);
            m.push("beta2", c.beta2);
            m.push("epsilon", c.epsilon);
            m.push("max-iters", c.max_iters);
            m.push("tol", c.tol);
            m.push("reinit-steps", c.reinit_steps);
        }
    }
    m.push("grid", format_grid(&dims));
    m.push("seed", seed);
    m.push("in", input.display());
    m.push("outdir", outdir.display());
    push_outcome(&mut m, &report);
    m.push("duration_s", start.elapsed().as_secs_f64());
    m.write(&outdir.join("manifest.txt"))?;
    println!("{}", report.summary_line());
    Ok(())
}

fn push_outcome(m: &mut Manifest, report: &RunReport) {
    m.push("iterations", report.iterations);
    m.push("stop", report.stop);
    m.push("final_energy", format!("{:e}", report.final_energy()));
}

fn flag_list(keys: &[&str]) -> String {
    keys.iter()
        .map(|k| format!("--{k}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn read_cloud(path: &Path) -> Result<PointCloud> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    PointCloud::read_text(BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))
}

fn cmd_extract(a: ExtractArgs) -> Result<()> {
    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let phi = ScalarField::read_text(BufReader::new(file))
        .with_context(|| format!("reading {}", a.input.display()))?;
    let ext = a
        .out
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let nd = phi.shape().ndim();
    let hausdorff = |g: &dyn Fn(&PointCloud) -> f64| -> Result<Option<f64>> {
        a.reference
            .as_deref()
            .map(read_cloud)
            .transpose()
            .map(|r| r.map(|c| g(&c)))
    };
    let h = match (nd, ext.as_str()) {
        (2, "csv") => {
            let contour = marching_squares(&phi);
            write_with(&a.out, |w| Ok(contour.write_csv(w)?))?;
            hausdorff(&|c| hausdorff_to_reference(&contour, c))?
        }
        (3, "obj") => {
            let mesh = marching_cubes(&phi);
            write_with(&a.out, |w| Ok(mesh.write_obj(w)?))?;
            hausdorff(&|c| hausdorff_to_reference(&mesh, c))?
        }
        (2, _) => bail!(
            "a 2D field extracts to a .csv contour, not `{}`",
            a.out.display()
        ),
        _ => bail!(
            "a 3D field extracts to an .obj mesh, not `{}`",
            a.out.display()
        ),
    };
    if let Some(h) = h {
        println!("hausdorff={h}");
    }
    Ok(())
}
