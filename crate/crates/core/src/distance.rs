//! Unsigned distance from grid nodes to a point cloud.
//!
//! [`distance_field`] snaps the cloud to the grid, gives the snapped nodes
//! their exact distance to the raw points and fills in the rest with
//! Lax-Friedrichs fast sweeping on `|∇d| = 1`. Unlike the other grid
//! operators, the sweep does not wrap around the domain.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridShape, ScalarField};

/// Cycle cap used by [`distance_field`].
pub const DEFAULT_MAX_CYCLES: usize = 50;
/// Stop once a whole cycle changes no node by more than this.
pub const DEFAULT_SWEEP_TOL: f64 = 1e-6;
/// Radius (in cells) of the ball around each seed that is initialized
/// directly instead of by sweeping. The first-order sweep is least accurate
/// next to point sources.
pub const LOCAL_INIT_RADIUS: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    ndim: usize,
    points: Vec<[f64; 3]>,
}

impl PointCloud {
    /// Builds a cloud from coordinate rows of equal length 2 or 3.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let ndim = points.first().map(Vec::len).ok_or(Error::EmptyCloud)?;
        if ndim != 2 && ndim != 3 {
            return Err(Error::InvalidParameter(format!(
                "points must have 2 or 3 coordinates, got {ndim}"
            )));
        }
        let mut out = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if p.len() != ndim {
                return Err(Error::InvalidParameter(format!(
                    "point {i} has {} coordinates, expected {ndim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("point cloud"));
            }
            let mut q = [0.0; 3];
            q[..ndim].copy_from_slice(p);
            out.push(q);
        }
        Ok(Self { ndim, points: out })
    }

    pub fn from_2d(points: &[[f64; 2]]) -> Result<Self> {
        Self::new(points.iter().map(|p| p.to_vec()).collect())
    }

    pub fn from_3d(points: &[[f64; 3]]) -> Result<Self> {
        Self::new(points.iter().map(|p| p.to_vec()).collect())
    }

    #[inline]
    pub fn ndim(&self) -> usize {
        self.ndim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points padded to three coordinates; unused trailing entries are zero.
    #[inline]
    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn centroid(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for p in &self.points {
            for a in 0..3 {
                c[a] += p[a];
            }
        }
        c.map(|v| v / self.points.len() as f64)
    }

    /// Checks that every point lies in the box spanned by the grid nodes.
    pub fn check_inside(&self, shape: GridShape) -> Result<()> {
        if self.ndim != shape.ndim() {
            return Err(Error::InvalidParameter(format!(
                "{}D cloud on a {}D grid",
                self.ndim,
                shape.ndim()
            )));
        }
        for (index, p) in self.points.iter().enumerate() {
            let outside = (0..self.ndim).any(|a| p[a] < 0.0 || p[a] > (shape.dim(a) - 1) as f64);
            if outside {
                return Err(Error::PointOutsideDomain {
                    index,
                    point: p[..self.ndim].to_vec(),
                    dims: shape.dims().to_vec(),
                });
            }
        }
        Ok(())
    }

    /// Distance from `x` to the nearest point.
    pub fn nearest_distance(&self, x: [f64; 3]) -> f64 {
        self.points
            .iter()
            .map(|p| dist2(p, &x))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// Writes one comma-separated point per line.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        for p in &self.points {
            let row: Vec<String> = p[..self.ndim].iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parses the comma-separated format; blank lines and `#` comments are
    /// skipped.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let row = body
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: n + 1,
                    msg: e.to_string(),
                })?;
            rows.push(row);
        }
        Self::new(rows)
    }
}

#[inline]
fn dist2(p: &[f64; 3], x: &[f64; 3]) -> f64 {
    (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2) + (p[2] - x[2]).powi(2)
}

/// Snaps every point to its nearest node (halves round up) and returns the
/// sorted, de-duplicated node indices.
pub fn rasterize(cloud: &PointCloud, shape: GridShape) -> Result<Vec<usize>> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    cloud.check_inside(shape)?;
    let nodes: BTreeSet<usize> = cloud
        .points()
        .iter()
        .map(|p| {
            let mut c = [0usize; 3];
            for a in 0..shape.ndim() {
                c[a] = ((p[a] + 0.5).floor() as usize).min(shape.dim(a) - 1);
            }
            shape.index(c)
        })
        .collect();
    Ok(nodes.into_iter().collect())
}

/// Fast sweeping with every seed fixed at zero.
///
/// `sweeps` caps the number of full cycles (4 orderings in 2D, 8 in 3D).
pub fn eikonal_fast_sweep(seeds: &[usize], shape: GridShape, sweeps: usize) -> Result<ScalarField> {
    let seeded: Vec<(usize, f64)> = seeds.iter().map(|&i| (i, 0.0)).collect();
    Ok(eikonal_fast_sweep_seeded(&seeded, shape, sweeps, DEFAULT_SWEEP_TOL)?.0)
}

/// Fast sweeping from seeds with prescribed values. Returns the field and
/// the number of cycles performed.
pub fn eikonal_fast_sweep_seeded(
    seeds: &[(usize, f64)],
    shape: GridShape,
    max_cycles: usize,
    tol: f64,
) -> Result<(ScalarField, usize)> {
    eikonal_fast_sweep_mirrored(seeds, shape, max_cycles, tol, [false; 3])
}

/// [`eikonal_fast_sweep_seeded`] with the sweep direction along each flagged
/// axis reversed. Sweeping a mirrored seed set with the matching flags
/// reproduces the mirrored field.
pub fn eikonal_fast_sweep_mirrored(
    seeds: &[(usize, f64)],
    shape: GridShape,
    max_cycles: usize,
    tol: f64,
    mirror: [bool; 3],
) -> Result<(ScalarField, usize)> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("no seed nodes".into()));
    }
    if max_cycles == 0 {
        return Err(Error::InvalidParameter(
            "at least one sweep cycle is required".into(),
        ));
    }
    let n = shape.len();
    if let Some(&(i, _)) = seeds.iter().find(|(i, _)| *i >= n) {
        return Err(Error::InvalidParameter(format!(
            "seed node {i} outside the grid"
        )));
    }
    let diag = shape
        .dims()
        .iter()
        .map(|&d| ((d - 1) * (d - 1)) as f64)
        .sum::<f64>()
        .sqrt();
    let mut d = vec![diag + 1.0; n];
    let mut fixed = vec![false; n];
    for &(i, v) in seeds {
        d[i] = d[i].min(v);
        fixed[i] = true;
    }
    init_near_seeds(&mut d, seeds, shape);

    let nd = shape.ndim();
    let dims = [shape.dim(0), shape.dim(1), shape.dim(2)];
    let faces: Vec<usize> = (0..n).filter(|&i| on_face(shape, i)).collect();
    let mut face_new = Vec::with_capacity(faces.len());
    let mut cycles = 0;
    while cycles < max_cycles {
        cycles += 1;
        let mut max_change = 0.0f64;
        for order in 0..(1usize << nd) {
            let rev = |axis: usize| (order >> axis & 1 == 1) != mirror[axis];
            let range = |axis: usize, t: usize| if rev(axis) { dims[axis] - 1 - t } else { t };
            for ti in 0..dims[0] {
                let i = range(0, ti);
                for tj in 0..dims[1] {
                    let j = range(1, tj);
                    for tk in 0..dims[2] {
                        let k = if nd == 3 { range(2, tk) } else { 0 };
                        let idx = shape.index([i, j, k]);
                        if fixed[idx] || on_face(shape, idx) {
                            continue;
                        }
                        let new = lax_friedrichs(&d, shape, idx);
                        if new < d[idx] {
                            max_change = max_change.max(d[idx] - new);
                            d[idx] = new;
                        }
                    }
                }
            }
            face_new.clear();
            face_new.extend(faces.iter().map(|&idx| upwind_face(&d, shape, idx)));
            for (&idx, &new) in faces.iter().zip(&face_new) {
                if !fixed[idx] && new < d[idx] {
                    max_change = max_change.max(d[idx] - new);
                    d[idx] = new;
                }
            }
        }
        if max_change < tol {
            break;
        }
    }
    Ok((ScalarField::from_vec(shape, d)?, cycles))
}

fn init_near_seeds(d: &mut [f64], seeds: &[(usize, f64)], shape: GridShape) {
    let r = LOCAL_INIT_RADIUS.floor() as isize;
    let nd = shape.ndim();
    let span = |a: usize| if a < nd { -r..=r } else { 0..=0 };
    for &(s, v) in seeds {
        let c = shape.coords(s);
        for di in span(0) {
            for dj in span(1) {
                for dk in span(2) {
                    let off = [di, dj, dk];
                    let mut t = [0usize; 3];
                    let mut inside = true;
                    for a in 0..3 {
                        let x = c[a] as isize + off[a];
                        inside &= x >= 0 && x < shape.dim(a) as isize;
                        t[a] = x.max(0) as usize;
                    }
                    let len = ((di * di + dj * dj + dk * dk) as f64).sqrt();
                    if !inside || len > LOCAL_INIT_RADIUS {
                        continue;
                    }
                    let idx = shape.index(t);
                    d[idx] = d[idx].min(v + len);
                }
            }
        }
    }
}

fn on_face(shape: GridShape, idx: usize) -> bool {
    let c = shape.coords(idx);
    (0..shape.ndim()).any(|a| c[a] == 0 || c[a] + 1 == shape.dim(a))
}

/// Lax-Friedrichs update at an interior node, unit viscosity per axis.
#[inline]
fn lax_friedrichs(d: &[f64], shape: GridShape, idx: usize) -> f64 {
    let nd = shape.ndim();
    let mut grad2 = 0.0;
    let mut avg = 0.0;
    for a in 0..nd {
        let up = d[shape.neighbor(idx, a, 1)];
        let dn = d[shape.neighbor(idx, a, -1)];
        grad2 += 0.25 * (up - dn) * (up - dn);
        avg += 0.5 * (up + dn);
    }
    (1.0 - grad2.sqrt() + avg) / nd as f64
}

/// Godunov upwind update at a face node, using only in-domain neighbours.
/// Monotone in every neighbour value.
fn upwind_face(d: &[f64], shape: GridShape, idx: usize) -> f64 {
    let c = shape.coords(idx);
    let mut mins = [f64::INFINITY; 3];
    let nd = shape.ndim();
    for (a, m) in mins.iter_mut().enumerate().take(nd) {
        if c[a] > 0 {
            *m = m.min(d[shape.neighbor(idx, a, -1)]);
        }
        if c[a] + 1 < shape.dim(a) {
            *m = m.min(d[shape.neighbor(idx, a, 1)]);
        }
    }
    let vals = &mut mins[..nd];
    vals.sort_by(f64::total_cmp);
    let mut u = vals[0] + 1.0;
    for k in 1..nd {
        if u <= vals[k] {
            break;
        }
        let used = &vals[..=k];
        let n = used.len() as f64;
        let sum: f64 = used.iter().sum();
        let sq: f64 = used.iter().map(|v| v * v).sum();
        u = (sum + (sum * sum - n * (sq - 1.0)).max(0.0).sqrt()) / n;
    }
    u
}

/// Exact nearest-point distance at every node.
pub fn brute_force_distance(cloud: &PointCloud, shape: GridShape) -> Result<ScalarField> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let values = (0..shape.len())
        .into_par_iter()
        .map(|i| cloud.nearest_distance(shape.position(i)))
        .collect();
    ScalarField::from_vec(shape, values)
}

/// Distance field used by the solvers. Nodes within [`LOCAL_INIT_RADIUS`]
/// of a rasterized point are fixed at their exact distance to the raw
/// cloud; fast sweeping fills in the rest.
pub fn distance_field(cloud: &PointCloud, shape: GridShape) -> Result<ScalarField> {
    let nodes = rasterize(cloud, shape)?;
    let mut band = vec![false; shape.len()];
    let r = LOCAL_INIT_RADIUS.floor() as isize;
    let nd = shape.ndim();
    for &s in &nodes {
        let c = shape.coords(s);
        let span = |a: usize| if a < nd { -r..=r } else { 0..=0 };
        for di in span(0) {
            for dj in span(1) {
                for dk in span(2) {
                    let len2 = (di * di + dj * dj + dk * dk) as f64;
                    if len2 > LOCAL_INIT_RADIUS * LOCAL_INIT_RADIUS {
                        continue;
                    }
                    let t = [c[0] as isize + di, c[1] as isize + dj, c[2] as isize + dk];
                    if (0..3).all(|a| t[a] >= 0 && t[a] < shape.dim(a) as isize) {
                        band[shape.index(t.map(|x| x as usize))] = true;
                    }
                }
            }
        }
    }
    let band: Vec<usize> = (0..shape.len()).filter(|&i| band[i]).collect();
    let seeds: Vec<(usize, f64)> = band
        .par_iter()
        .map(|&i| (i, cloud.nearest_distance(shape.position(i))))
        .collect();
    Ok(eikonal_fast_sweep_seeded(&seeds, shape, DEFAULT_MAX_CYCLES, DEFAULT_SWEEP_TOL)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridShape {
        GridShape::new_2d(n, n).unwrap()
    }

    #[test]
    fn parse_and_write() {
        let text = "# header\n1.5, 2\n\n3,4 # trailing\n";
        let c = PointCloud::read_text(text.as_bytes()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.ndim(), 2);
        assert_eq!(c.points()[0], [1.5, 2.0, 0.0]);
        let back = PointCloud::read_text(c.to_text().as_bytes()).unwrap();
        assert_eq!(back, c);
        assert!(PointCloud::read_text("1,2\n1,2,3\n".as_bytes()).is_err());
        assert!(PointCloud::read_text("# nothing\n".as_bytes()).is_err());
        assert!(PointCloud::read_text("1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn rasterize_rounding() {
        let s = grid(100);
        let node = |x: f64, y: f64| {
            let c = PointCloud::from_2d(&[[x, y]]).unwrap();
            s.coords(rasterize(&c, s).unwrap()[0])
        };
        assert_eq!(node(50.0, 50.0), [50, 50, 0]);
        assert_eq!(node(49.6, 50.4), [50, 50, 0]);
        assert_eq!(node(49.5, 20.5), [50, 21, 0]);
        let dup = PointCloud::from_2d(&[[3.0, 3.0], [3.2, 2.9]]).unwrap();
        assert_eq!(rasterize(&dup, s).unwrap().len(), 1);
    }

    #[test]
    fn rasterize_rejects_outside_point() {
        let c = PointCloud::from_2d(&[[5.0, 5.0], [-1.0, 3.0]]).unwrap();
        match rasterize(&c, grid(20)) {
            Err(Error::PointOutsideDomain { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn all_seeds_give_zero() {
        let s = grid(12);
        let seeds: Vec<usize> = (0..s.len()).collect();
        let d = eikonal_fast_sweep(&seeds, s, 5).unwrap();
        assert_eq!(d.max_abs(), 0.0);
        assert!(eikonal_fast_sweep(&[], s, 5).is_err());
    }

    #[test]
    fn single_seed_three_four_five() {
        let s = grid(100);
        let d = eikonal_fast_sweep(&[s.index([50, 50, 0])], s, 50).unwrap();
        assert!((d.get([53, 54, 0]) - 5.0).abs() <= 2.0);
        assert!(d.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn two_seeds_bounded_by_exact() {
        let s = grid(60);
        let a = [12usize, 40usize];
        let b = [45usize, 18usize];
        let d = eikonal_fast_sweep(&[s.index([a[0], a[1], 0]), s.index([b[0], b[1], 0])], s, 50)
            .unwrap();
        for idx in 0..s.len() {
            let p = s.position(idx);
            let da = ((p[0] - a[0] as f64).powi(2) + (p[1] - a[1] as f64).powi(2)).sqrt();
            let db = ((p[0] - b[0] as f64).powi(2) + (p[1] - b[1] as f64).powi(2)).sqrt();
            assert!(d.values()[idx] <= da.min(db) + 2.0);
        }
    }

    #[test]
    fn brute_force_examples() {
        let s = grid(20);
        let c = PointCloud::from_2d(&[[10.0, 10.0]]).unwrap();
        let d = brute_force_distance(&c, s).unwrap();
        assert_eq!(d.get([10, 10, 0]), 0.0);
        assert_eq!(d.get([13, 14, 0]), 5.0);
    }

    #[test]
    fn sweep_close_to_exact_3d() {
        let s = GridShape::new_3d(24, 24, 24).unwrap();
        let c =
            PointCloud::from_3d(&[[6.3, 7.1, 12.0], [17.5, 15.2, 9.9], [12.0, 20.0, 4.4]]).unwrap();
        let swept = distance_field(&c, s).unwrap();
        let exact = brute_force_distance(&c, s).unwrap();
        assert!(swept.max_abs_diff(&exact) <= 2.0);
    }
}
