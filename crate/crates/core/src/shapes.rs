//! Synthetic test geometries sampled as point clouds.
//!
//! Curves are sampled uniformly in arclength and surfaces uniformly in area.
//! Every generator is deterministic for a given seed.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::distance::PointCloud;
use crate::error::{Error, Result};
use crate::grid::GridShape;

/// Generated points keep at least this many cells from every domain face.
pub const MARGIN: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeKind {
    Circle,
    Square,
    SquareIndent,
    Boomerang,
    Triangle,
    Star,
    /// Square given by two points next to each corner.
    SparseSquare,
    Sphere,
    Pyramid,
    Yoyo,
    Icecream,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 11] = [
        ShapeKind::Circle,
        ShapeKind::Square,
        ShapeKind::SquareIndent,
        ShapeKind::Boomerang,
        ShapeKind::Triangle,
        ShapeKind::Star,
        ShapeKind::SparseSquare,
        ShapeKind::Sphere,
        ShapeKind::Pyramid,
        ShapeKind::Yoyo,
        ShapeKind::Icecream,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Circle => "circle",
            ShapeKind::Square => "square",
            ShapeKind::SquareIndent => "square_indent",
            ShapeKind::Boomerang => "boomerang",
            ShapeKind::Triangle => "triangle",
            ShapeKind::Star => "star",
            ShapeKind::SparseSquare => "sparse_square",
            ShapeKind::Sphere => "sphere",
            ShapeKind::Pyramid => "pyramid",
            ShapeKind::Yoyo => "yoyo",
            ShapeKind::Icecream => "icecream",
        }
    }

    pub fn ndim(self) -> usize {
        match self {
            ShapeKind::Sphere | ShapeKind::Pyramid | ShapeKind::Yoyo | ShapeKind::Icecream => 3,
            _ => 2,
        }
    }

    /// Size used when none is given, sized for the default 100² and 50³
    /// domains.
    pub fn default_scale(self) -> f64 {
        match self {
            ShapeKind::Circle => 20.0,
            ShapeKind::Square | ShapeKind::SquareIndent | ShapeKind::SparseSquare => 25.0,
            ShapeKind::Boomerang | ShapeKind::Triangle | ShapeKind::Star => 25.0,
            ShapeKind::Sphere => 15.0,
            ShapeKind::Pyramid => 14.0,
            ShapeKind::Yoyo => 8.0,
            ShapeKind::Icecream => 12.0,
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidParameter(format!(
                    "unknown shape `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub center: Vec<f64>,
    pub scale: f64,
    pub samples: usize,
    pub seed: u64,
    pub domain: GridShape,
}

impl ShapeSpec {
    /// Default scale, centred in `domain`.
    pub fn centered(kind: ShapeKind, domain: GridShape, samples: usize, seed: u64) -> Self {
        Self {
            kind,
            center: domain
                .dims()
                .iter()
                .map(|&d| (d - 1) as f64 / 2.0)
                .collect(),
            scale: kind.default_scale(),
            samples,
            seed,
            domain,
        }
    }
}

/// Samples the boundary described by `spec`.
pub fn generate(spec: &ShapeSpec) -> Result<PointCloud> {
    let nd = spec.kind.ndim();
    if spec.domain.ndim() != nd || spec.center.len() != nd {
        return Err(Error::InvalidParameter(format!(
            "shape `{}` is {nd}D but the domain is {}D and the centre has {} coordinates",
            spec.kind,
            spec.domain.ndim(),
            spec.center.len()
        )));
    }
    if !(spec.scale.is_finite() && spec.scale > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "scale must be > 0, got {}",
            spec.scale
        )));
    }
    if spec.samples == 0 {
        return Err(Error::InvalidParameter("samples must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let c = &spec.center;
    let r = spec.scale;
    let n = spec.samples;
    let pts: Vec<Vec<f64>> = match spec.kind {
        ShapeKind::Circle => (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                vec![c[0] + r * t.cos(), c[1] + r * t.sin()]
            })
            .collect(),
        ShapeKind::Square => sample_polygon(&square_vertices(c, r), n),
        ShapeKind::SquareIndent => sample_polygon(&square_indent_vertices(c, r), n),
        ShapeKind::Triangle => sample_polygon(&regular_polygon(c, r, 3, PI / 2.0), n),
        ShapeKind::Star => sample_polygon(&star_vertices(c, r), n),
        ShapeKind::Boomerang => boomerang(c, r, n),
        ShapeKind::SparseSquare => sparse_square(c, r),
        ShapeKind::Sphere => (0..n)
            .map(|_| {
                let u = unit_vector(&mut rng);
                vec![c[0] + r * u[0], c[1] + r * u[1], c[2] + r * u[2]]
            })
            .collect(),
        ShapeKind::Pyramid => pyramid(c, r, n, &mut rng),
        ShapeKind::Yoyo => yoyo(c, r, n, &mut rng),
        ShapeKind::Icecream => icecream(c, r, n, &mut rng),
    };
    let cloud = PointCloud::new(pts)?;
    check_margin(&cloud, spec.domain, spec.kind.name())?;
    Ok(cloud)
}

fn check_margin(cloud: &PointCloud, domain: GridShape, kind: &str) -> Result<()> {
    let ok = cloud.points().iter().all(|p| {
        (0..cloud.ndim()).all(|a| p[a] >= MARGIN && p[a] <= (domain.dim(a) - 1) as f64 - MARGIN)
    });
    if ok {
        Ok(())
    } else {
        Err(Error::MarginViolation {
            kind: kind.to_string(),
            margin: MARGIN,
        })
    }
}

/// Adds Gaussian noise of standard deviation `sigma` to every coordinate,
/// then keeps a random `floor(keep · n)` of the points (at least one) in
/// their original order.
///
/// With a domain, points pushed past the margin are clamped back; the
/// number of clamped points is returned alongside the cloud.
pub fn perturb(
    cloud: &PointCloud,
    sigma: f64,
    keep: f64,
    seed: u64,
    domain: Option<GridShape>,
) -> Result<(PointCloud, usize)> {
    if !(keep > 0.0 && keep <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "keep must lie in (0, 1], got {keep}"
        )));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be >= 0, got {sigma}"
        )));
    }
    let nd = cloud.ndim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Vec<f64>> = cloud.points().iter().map(|p| p[..nd].to_vec()).collect();
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        for p in &mut pts {
            for v in p.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
    let mut clamped = 0;
    if let Some(dom) = domain {
        for p in &mut pts {
            let mut moved = false;
            for (a, v) in p.iter_mut().enumerate() {
                let hi = (dom.dim(a) - 1) as f64 - MARGIN;
                let w = v.clamp(MARGIN, hi);
                moved |= w != *v;
                *v = w;
            }
            clamped += moved as usize;
        }
    }
    let count = ((keep * pts.len() as f64).floor() as usize).max(1);
    if count < pts.len() {
        let mut idx = sample(&mut rng, pts.len(), count).into_vec();
        idx.sort_unstable();
        pts = idx.into_iter().map(|i| pts[i].clone()).collect();
    }
    Ok((PointCloud::new(pts)?, clamped))
}

fn square_vertices(c: &[f64], h: f64) -> Vec<[f64; 2]> {
    vec![
        [c[0] - h, c[1] - h],
        [c[0] + h, c[1] - h],
        [c[0] + h, c[1] + h],
        [c[0] - h, c[1] + h],
    ]
}

/// Relative half-width of the indent at the bottom edge.
pub const INDENT_HALF_WIDTH: f64 = 0.4;
/// Relative depth of the indent tip above the bottom edge.
pub const INDENT_DEPTH: f64 = 0.6;

/// Square of half-width `h` whose bottom edge (smallest second coordinate)
/// has a triangular notch pointing inward.
pub fn square_indent_vertices(c: &[f64], h: f64) -> Vec<[f64; 2]> {
    let w = INDENT_HALF_WIDTH * h;
    vec![
        [c[0] - h, c[1] - h],
        [c[0] - w, c[1] - h],
        [c[0], c[1] - h + INDENT_DEPTH * h],
        [c[0] + w, c[1] - h],
        [c[0] + h, c[1] - h],
        [c[0] + h, c[1] + h],
        [c[0] - h, c[1] + h],
    ]
}

fn regular_polygon(c: &[f64], r: f64, sides: usize, phase: f64) -> Vec<[f64; 2]> {
    (0..sides)
        .map(|k| {
            let t = phase + TAU * k as f64 / sides as f64;
            [c[0] + r * t.cos(), c[1] + r * t.sin()]
        })
        .collect()
}

fn star_vertices(c: &[f64], r: f64) -> Vec<[f64; 2]> {
    (0..10)
        .map(|k| {
            let t = PI / 2.0 + PI * k as f64 / 5.0;
            let rad = if k % 2 == 0 { r } else { 0.45 * r };
            [c[0] + rad * t.cos(), c[1] + rad * t.sin()]
        })
        .collect()
}

/// Closed polygon sampled at equal arclength steps. Every edge starts with
/// its first vertex, so corners are always present.
fn sample_polygon(verts: &[[f64; 2]], n: usize) -> Vec<Vec<f64>> {
    let m = verts.len();
    let lens: Vec<f64> = (0..m)
        .map(|i| {
            let (a, b) = (verts[i], verts[(i + 1) % m]);
            (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .collect();
    let total: f64 = lens.iter().sum();
    // largest-remainder split of n samples over the edges
    let mut counts: Vec<usize> = lens
        .iter()
        .map(|l| ((n as f64 * l / total).floor() as usize).max(1))
        .collect();
    let mut assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        let ra = n as f64 * lens[a] / total - counts[a] as f64;
        let rb = n as f64 * lens[b] / total - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut k = 0;
    while assigned < n {
        counts[order[k % m]] += 1;
        assigned += 1;
        k += 1;
    }
    let mut out = Vec::with_capacity(assigned);
    for i in 0..m {
        let (a, b) = (verts[i], verts[(i + 1) % m]);
        for j in 0..counts[i] {
            let t = j as f64 / counts[i] as f64;
            out.push(vec![a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Offset of the inner arc centre, relative to the radius.
const BOOMERANG_OFFSET: f64 = 0.55;

/// Crescent: the disk of radius `r` minus an equal disk shifted along the
/// first axis. The two arcs meet at sharp tips.
fn boomerang(c: &[f64], r: f64, n: usize) -> Vec<Vec<f64>> {
    let o = BOOMERANG_OFFSET * r;
    let t0 = (o / (2.0 * r)).acos();
    let outer = TAU - 2.0 * t0;
    let inner = 2.0 * t0;
    let n_outer = ((n as f64 * outer / (outer + inner)).round() as usize).clamp(1, n - 1);
    let mut out = Vec::with_capacity(n);
    for k in 0..n_outer {
        let t = t0 + outer * k as f64 / n_outer as f64;
        out.push(vec![c[0] + r * t.cos(), c[1] + r * t.sin()]);
    }
    let n_inner = n - n_outer;
    for k in 0..n_inner {
        // runs from the lower tip back to the upper tip
        let t = PI + t0 - inner * k as f64 / n_inner as f64;
        out.push(vec![c[0] + o + r * t.cos(), c[1] + r * t.sin()]);
    }
    out
}

fn sparse_square(c: &[f64], h: f64) -> Vec<Vec<f64>> {
    let e = 0.15 * h;
    let mut out = Vec::with_capacity(8);
    for [x, y] in square_vertices(c, h) {
        let sx = (c[0] - x).signum();
        let sy = (c[1] - y).signum();
        out.push(vec![x + sx * e, y]);
        out.push(vec![x, y + sy * e]);
    }
    out
}

fn unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let t: f64 = rng.random_range(0.0..TAU);
    let s = (1.0 - z * z).max(0.0).sqrt();
    [s * t.cos(), s * t.sin(), z]
}

/// Uniform point on triangle `abc`.
fn triangle_point(rng: &mut ChaCha8Rng, a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> Vec<f64> {
    let (u, v): (f64, f64) = (rng.random(), rng.random());
    let su = u.sqrt();
    let (wa, wb, wc) = (1.0 - su, su * (1.0 - v), su * v);
    (0..3).map(|i| wa * a[i] + wb * b[i] + wc * c[i]).collect()
}

fn tri_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let x = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Square pyramid: base of half-width `r` at height `-r`, apex at `+r`.
fn pyramid(c: &[f64], r: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let p = |x: f64, y: f64, z: f64| [c[0] + x, c[1] + y, c[2] + z];
    let base = [p(-r, -r, -r), p(r, -r, -r), p(r, r, -r), p(-r, r, -r)];
    let apex = p(0.0, 0.0, r);
    let mut tris = vec![(base[0], base[1], base[2]), (base[0], base[2], base[3])];
    for i in 0..4 {
        tris.push((base[i], base[(i + 1) % 4], apex));
    }
    let areas: Vec<f64> = tris.iter().map(|&(a, b, c)| tri_area(a, b, c)).collect();
    let total: f64 = areas.iter().sum();
    (0..n)
        .map(|_| {
            let mut x = rng.random::<f64>() * total;
            let mut k = 0;
            while k + 1 < tris.len() && x >= areas[k] {
                x -= areas[k];
                k += 1;
            }
            let (a, b, c) = tris[k];
            triangle_point(rng, a, b, c)
        })
        .collect()
}

/// Neck radius and sphere-centre offset of the yoyo, relative to `r`.
const YOYO_NECK: f64 = 0.35;
const YOYO_OFFSET: f64 = 1.2;

/// Two spheres of radius `r` on the third axis joined by a cylindrical neck.
/// Candidates are drawn from each piece in proportion to its full area and
/// dropped when they fall inside another piece.
fn yoyo(c: &[f64], r: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let a = YOYO_NECK * r;
    let h = YOYO_OFFSET * r;
    let sphere_area = 4.0 * PI * r * r;
    let cyl_area = TAU * a * 2.0 * h;
    let inside_sphere =
        |x: f64, y: f64, z: f64, zc: f64| x * x + y * y + (z - zc).powi(2) < r * r - 1e-9;
    let inside_cyl = |x: f64, y: f64, z: f64| x * x + y * y < a * a - 1e-9 && z.abs() < h;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let pick = rng.random::<f64>() * (2.0 * sphere_area + cyl_area);
        let (x, y, z, keep) = if pick < 2.0 * sphere_area {
            let zc = if pick < sphere_area { -h } else { h };
            let u = unit_vector(rng);
            let (x, y, z) = (r * u[0], r * u[1], zc + r * u[2]);
            (
                x,
                y,
                z,
                !inside_cyl(x, y, z) && !inside_sphere(x, y, z, -zc),
            )
        } else {
            let t: f64 = rng.random_range(0.0..TAU);
            let z: f64 = rng.random_range(-h..h);
            let (x, y) = (a * t.cos(), a * t.sin());
            (
                x,
                y,
                z,
                !inside_sphere(x, y, z, h) && !inside_sphere(x, y, z, -h),
            )
        };
        if keep {
            out.push(vec![c[0] + x, c[1] + y, c[2] + z]);
        }
    }
    out
}

/// Radius and depth of the dimple in the ice-cream cap, relative to `r`.
const DIMPLE_RADIUS: f64 = 0.6;
const DIMPLE_DEPTH: f64 = 0.5;
/// Cone height relative to `r`.
const CONE_HEIGHT: f64 = 1.6;

/// Cone with its apex down, topped by a hemispherical scoop whose crown is
/// pressed in.
fn icecream(c: &[f64], r: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let hc = CONE_HEIGHT * r;
    let cone_area = PI * r * (r * r + hc * hc).sqrt();
    let rd = DIMPLE_RADIUS * r;
    let cap_height = |rho: f64| {
        let dome = (r * r - rho * rho).max(0.0).sqrt();
        let dimple = if rho < rd {
            DIMPLE_DEPTH * r * (1.0 - (rho / rd).powi(2)).powi(2)
        } else {
            0.0
        };
        dome - dimple
    };
    // area element of the cap as a graph over the disk, by finite differences
    let cap_density = |rho: f64| {
        let e = 1e-4 * r;
        let slope = (cap_height((rho + e).min(r)) - cap_height((rho - e).max(0.0))) / (2.0 * e);
        rho * (1.0 + slope * slope).sqrt()
    };
    // the density blows up at the rim; cap it and sample a thin rim band from
    // the sphere directly
    let rim = 0.98 * r;
    let bins = 2000;
    let cdf: Vec<f64> = (0..=bins)
        .scan(0.0, |acc, i| {
            let rho = rim * i as f64 / bins as f64;
            if i > 0 {
                *acc += cap_density(rho - 0.5 * rim / bins as f64) * rim / bins as f64;
            }
            Some(*acc)
        })
        .collect();
    let cap_inner_area = TAU * cdf[bins];
    let band_area = TAU * r * r * (1.0 - (1.0 - (rim / r).powi(2)).sqrt());
    let total = cone_area + cap_inner_area + band_area;
    (0..n)
        .map(|_| {
            let pick = rng.random::<f64>() * total;
            let t: f64 = rng.random_range(0.0..TAU);
            let (rho, z) = if pick < cone_area {
                let s = rng.random::<f64>().sqrt();
                (s * r, -hc * (1.0 - s))
            } else if pick < cone_area + cap_inner_area {
                let target = rng.random::<f64>() * cdf[bins];
                let i = cdf.partition_point(|&v| v < target).clamp(1, bins);
                let frac = (target - cdf[i - 1]) / (cdf[i] - cdf[i - 1]).max(f64::MIN_POSITIVE);
                let rho = rim * (i as f64 - 1.0 + frac) / bins as f64;
                (rho, cap_height(rho))
            } else {
                let zmax = (r * r - rim * rim).sqrt();
                let z = rng.random_range(0.0..zmax);
                ((r * r - z * z).sqrt(), z)
            };
            vec![c[0] + rho * t.cos(), c[1] + rho * t.sin(), c[2] + z]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom2() -> GridShape {
        GridShape::new_2d(100, 100).unwrap()
    }

    fn dom3() -> GridShape {
        GridShape::new_3d(50, 50, 50).unwrap()
    }

    fn spec(kind: ShapeKind, samples: usize) -> ShapeSpec {
        let d = if kind.ndim() == 2 { dom2() } else { dom3() };
        ShapeSpec::centered(kind, d, samples, 7)
    }

    #[test]
    fn names_round_trip() {
        for k in ShapeKind::ALL {
            assert_eq!(k.name().parse::<ShapeKind>().unwrap(), k);
        }
        assert!("blob".parse::<ShapeKind>().is_err());
    }

    #[test]
    fn every_shape_fits_default_domain() {
        for k in ShapeKind::ALL {
            let c = generate(&spec(k, 600)).unwrap();
            assert_eq!(c.ndim(), k.ndim());
            if k != ShapeKind::SparseSquare {
                assert_eq!(c.len(), 600, "{k}");
            }
        }
    }

    #[test]
    fn circle_radius_exact() {
        let mut s = spec(ShapeKind::Circle, 512);
        s.center = vec![50.3, 49.7];
        let c = generate(&s).unwrap();
        assert_eq!(c.len(), 512);
        for p in c.points() {
            assert!(((p[0] - 50.3).hypot(p[1] - 49.7) - 20.0).abs() < 1e-9);
        }
    }

    #[test]
    fn square_indent_contains_vertices() {
        let s = spec(ShapeKind::SquareIndent, 400);
        let c = generate(&s).unwrap();
        for v in square_indent_vertices(&s.center, s.scale) {
            assert!(c
                .points()
                .iter()
                .any(|p| (p[0] - v[0]).abs() < 1e-12 && (p[1] - v[1]).abs() < 1e-12));
        }
    }

    #[test]
    fn sphere_mean_radius() {
        let c = generate(&spec(ShapeKind::Sphere, 4000)).unwrap();
        let mean = c
            .points()
            .iter()
            .map(|p| ((p[0] - 24.5).powi(2) + (p[1] - 24.5).powi(2) + (p[2] - 24.5).powi(2)).sqrt())
            .sum::<f64>()
            / 4000.0;
        assert!((mean - 15.0).abs() < 0.01);
    }

    #[test]
    fn margin_violation_rejected() {
        let mut s = spec(ShapeKind::Circle, 64);
        s.scale = 48.0;
        assert!(matches!(generate(&s), Err(Error::MarginViolation { .. })));
        let mut s = spec(ShapeKind::Sphere, 64);
        s.domain = dom2();
        assert!(generate(&s).is_err());
    }

    #[test]
    fn sparse_square_has_two_points_per_corner() {
        let c = generate(&spec(ShapeKind::SparseSquare, 1)).unwrap();
        assert_eq!(c.len(), 8);
    }

    #[test]
    fn perturb_identity_and_rounding() {
        let c = generate(&spec(ShapeKind::Circle, 1000)).unwrap();
        let (same, clamped) = perturb(&c, 0.0, 1.0, 3, None).unwrap();
        assert_eq!(same, c);
        assert_eq!(clamped, 0);
        let (sub, _) = perturb(&c, 0.0, 0.1, 3, None).unwrap();
        assert_eq!(sub.len(), 100);
        assert!(perturb(&c, 0.0, 0.0, 3, None).is_err());
        assert!(perturb(&c, 0.0, 1.5, 3, None).is_err());
    }

    #[test]
    fn perturb_noise_std() {
        let base = PointCloud::new(vec![vec![50.0, 50.0]; 10000]).unwrap();
        let (noisy, _) = perturb(&base, 2.0, 1.0, 11, None).unwrap();
        for a in 0..2 {
            let vals: Vec<f64> = noisy.points().iter().map(|p| p[a]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var =
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
            assert!((var.sqrt() - 2.0).abs() < 0.05);
        }
    }

    #[test]
    fn perturb_clamps_to_margin() {
        let base = PointCloud::new(vec![vec![5.5, 50.0]; 200]).unwrap();
        let (noisy, clamped) = perturb(&base, 2.0, 1.0, 1, Some(dom2())).unwrap();
        assert!(clamped > 0);
        assert!(noisy.points().iter().all(|p| p[0] >= MARGIN));
    }
}
