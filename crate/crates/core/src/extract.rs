//! Zero level set extraction and the geometric metrics built on it.
//!
//! 2D uses marching squares with linear interpolation along cell edges;
//! saddle cells are split according to the sign of the cell-centre average.
//! 3D splits every cube into the six tetrahedra around its main diagonal
//! and runs marching tetrahedra. Neighbouring cubes cut their shared faces
//! along the same diagonal, and vertices are keyed by grid edge, so the
//! mesh is closed whenever the surface stays off the domain faces.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::distance::PointCloud;
use crate::error::Result;
use crate::grid::{GridShape, ScalarField};

/// Unstitched segment soup.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Contour2D {
    pub segments: Vec<[[f64; 2]; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh3D {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

#[inline]
fn crossing(pa: f64, pb: f64) -> f64 {
    pa / (pa - pb)
}

/// Marching squares over every cell of a 2D field.
pub fn marching_squares(phi: &ScalarField) -> Contour2D {
    let shape = phi.shape();
    assert_eq!(shape.ndim(), 2, "marching squares needs a 2D field");
    let (m, n) = (shape.dim(0), shape.dim(1));
    let segments = (0..m - 1)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut out = Vec::new();
            for j in 0..n - 1 {
                cell_segments(phi, i, j, &mut out);
            }
            out
        })
        .collect();
    Contour2D { segments }
}

fn cell_segments(phi: &ScalarField, i: usize, j: usize, out: &mut Vec<[[f64; 2]; 2]>) {
    // corners counter-clockwise; edge k joins corner k and corner k + 1
    let corners = [[i, j], [i + 1, j], [i + 1, j + 1], [i, j + 1]];
    let v = corners.map(|c| phi.get([c[0], c[1], 0]));
    let inside = v.map(|x| x < 0.0);
    let case = inside
        .iter()
        .enumerate()
        .fold(0u8, |acc, (k, &b)| acc | ((b as u8) << k));
    if case == 0 || case == 15 {
        return;
    }
    let point = |e: usize| {
        let (a, b) = (e, (e + 1) % 4);
        let t = crossing(v[a], v[b]);
        let (ca, cb) = (corners[a], corners[b]);
        [
            ca[0] as f64 + t * (cb[0] as f64 - ca[0] as f64),
            ca[1] as f64 + t * (cb[1] as f64 - ca[1] as f64),
        ]
    };
    // the corner k sits between edges k - 1 and k
    let cut = |k: usize, out: &mut Vec<[[f64; 2]; 2]>| out.push([point((k + 3) % 4), point(k)]);
    match case {
        0b0101 | 0b1010 => {
            let centre_inside = v.iter().sum::<f64>() / 4.0 < 0.0;
            // corners sharing the centre's sign stay connected, the other
            // two are cut off
            let first = if inside[0] == centre_inside { 1 } else { 0 };
            cut(first, out);
            cut(first + 2, out);
        }
        _ => {
            let edges: Vec<usize> = (0..4)
                .filter(|&e| inside[e] != inside[(e + 1) % 4])
                .collect();
            out.push([point(edges[0]), point(edges[1])]);
        }
    }
}

impl Contour2D {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.segments
            .iter()
            .map(|[a, b]| (b[0] - a[0]).hypot(b[1] - a[1]))
            .sum()
    }

    /// Points along every segment, at most `spacing` apart.
    pub fn sample_points(&self, spacing: f64) -> Vec<[f64; 3]> {
        let mut out = Vec::new();
        for [a, b] in &self.segments {
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let k = (len / spacing).ceil().max(1.0) as usize;
            for s in 0..=k {
                let t = s as f64 / k as f64;
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), 0.0]);
            }
        }
        out
    }

    /// Second coordinates where the contour crosses the line
    /// `first coordinate = x`.
    pub fn crossings_at(&self, x: f64) -> Vec<f64> {
        let mut ys = Vec::new();
        for [a, b] in &self.segments {
            let (lo, hi) = if a[0] <= b[0] { (a, b) } else { (b, a) };
            if lo[0] <= x && x < hi[0] {
                let t = (x - lo[0]) / (hi[0] - lo[0]);
                ys.push(lo[1] + t * (hi[1] - lo[1]));
            } else if a[0] == x && b[0] == x {
                ys.push(a[1]);
                ys.push(b[1]);
            }
        }
        ys
    }

    /// Writes `x1,y1,x2,y2` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for [a, b] in &self.segments {
            writeln!(w, "{},{},{},{}", a[0], a[1], b[0], b[1])?;
        }
        Ok(())
    }
}

/// The six tetrahedra of the unit cube around the diagonal `000 → 111`,
/// as corner offsets.
const TETS: [[[usize; 3]; 4]; 6] = {
    const fn tet(a: usize, b: usize) -> [[usize; 3]; 4] {
        let mut p1 = [0; 3];
        p1[a] = 1;
        let mut p2 = p1;
        p2[b] = 1;
        [[0, 0, 0], p1, p2, [1, 1, 1]]
    }
    [
        tet(0, 1),
        tet(0, 2),
        tet(1, 0),
        tet(1, 2),
        tet(2, 0),
        tet(2, 1),
    ]
};

/// Where a mesh vertex sits: on a grid node or inside a grid edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum VertexKey {
    Node(usize),
    Edge(usize, usize),
}

/// Interpolation parameters this close to an end snap onto the node.
const SNAP: f64 = 1e-9;

/// Marching tetrahedra over every cube of a 3D field.
pub fn marching_cubes(phi: &ScalarField) -> Mesh3D {
    let shape = phi.shape();
    assert_eq!(shape.ndim(), 3, "surface extraction needs a 3D field");
    let (m, n, p) = (shape.dim(0), shape.dim(1), shape.dim(2));
    let cell_tris: Vec<[(VertexKey, [f64; 3]); 3]> = (0..m - 1)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut out = Vec::new();
            for j in 0..n - 1 {
                for k in 0..p - 1 {
                    for tet in &TETS {
                        let nodes = tet.map(|o| shape.index([i + o[0], j + o[1], k + o[2]]));
                        tet_triangles(phi, shape, nodes, &mut out);
                    }
                }
            }
            out
        })
        .collect();

    let mut mesh = Mesh3D::default();
    let mut ids: HashMap<VertexKey, usize> = HashMap::new();
    for tri in cell_tris {
        let idx = tri.map(|(key, pos)| {
            *ids.entry(key).or_insert_with(|| {
                mesh.vertices.push(pos);
                mesh.vertices.len() - 1
            })
        });
        if idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
            continue;
        }
        if triangle_area(&mesh.vertices, idx) <= 1e-12 {
            continue;
        }
        mesh.triangles.push(idx);
    }
    mesh
}

fn tet_triangles(
    phi: &ScalarField,
    shape: GridShape,
    nodes: [usize; 4],
    out: &mut Vec<[(VertexKey, [f64; 3]); 3]>,
) {
    let v = nodes.map(|i| phi.values()[i]);
    let inside: Vec<usize> = (0..4).filter(|&a| v[a] < 0.0).collect();
    let outside: Vec<usize> = (0..4).filter(|&a| v[a] >= 0.0).collect();
    if inside.is_empty() || outside.is_empty() {
        return;
    }
    let vert = |a: usize, b: usize| -> (VertexKey, [f64; 3]) {
        let (na, nb) = (nodes[a], nodes[b]);
        let t = crossing(v[a], v[b]);
        let (pa, pb) = (shape.position(na), shape.position(nb));
        let key = if t <= SNAP {
            VertexKey::Node(na)
        } else if t >= 1.0 - SNAP {
            VertexKey::Node(nb)
        } else {
            VertexKey::Edge(na.min(nb), na.max(nb))
        };
        let pos = [0, 1, 2].map(|c| pa[c] + t * (pb[c] - pa[c]));
        (key, pos)
    };
    let positions = nodes.map(|i| shape.position(i));
    let centroid = |set: &[usize]| {
        let mut c = [0.0; 3];
        for &a in set {
            for x in 0..3 {
                c[x] += positions[a][x] / set.len() as f64;
            }
        }
        c
    };
    let (ci, co) = (centroid(&inside), centroid(&outside));
    let outward = [co[0] - ci[0], co[1] - ci[1], co[2] - ci[2]];
    let mut emit = |mut tri: [(VertexKey, [f64; 3]); 3]| {
        let nrm = cross(sub(tri[1].1, tri[0].1), sub(tri[2].1, tri[0].1));
        if dot(nrm, outward) < 0.0 {
            tri.swap(1, 2);
        }
        out.push(tri);
    };
    match (inside.len(), outside.len()) {
        (1, 3) => {
            let a = inside[0];
            emit([
                vert(a, outside[0]),
                vert(a, outside[1]),
                vert(a, outside[2]),
            ]);
        }
        (3, 1) => {
            let b = outside[0];
            emit([vert(inside[0], b), vert(inside[1], b), vert(inside[2], b)]);
        }
        _ => {
            let (a0, a1) = (inside[0], inside[1]);
            let (b0, b1) = (outside[0], outside[1]);
            // quad a0b0 → a0b1 → a1b1 → a1b0, split along a0b0–a1b1
            let q = [vert(a0, b0), vert(a0, b1), vert(a1, b1), vert(a1, b0)];
            emit([q[0], q[1], q[2]]);
            emit([q[0], q[2], q[3]]);
        }
    }
}

#[inline]
fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn triangle_area(vs: &[[f64; 3]], t: [usize; 3]) -> f64 {
    let c = cross(sub(vs[t[1]], vs[t[0]]), sub(vs[t[2]], vs[t[0]]));
    0.5 * dot(c, c).sqrt()
}

impl Mesh3D {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&t| triangle_area(&self.vertices, t))
            .sum()
    }

    /// True when every edge belongs to exactly two triangles.
    pub fn is_closed(&self) -> bool {
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        !count.is_empty() && count.values().all(|&c| c == 2)
    }

    /// Vertices plus triangle centroids.
    pub fn sample_points(&self) -> Vec<[f64; 3]> {
        let mut out = self.vertices.clone();
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.vertices[i]);
            out.push([0, 1, 2].map(|x| (a[x] + b[x] + c[x]) / 3.0));
        }
        out
    }

    /// `v x y z` lines then `f i j k` lines with 1-based indices.
    pub fn write_obj<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
        }
        for t in &self.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }
}

/// Something that can be sampled for distance comparisons.
pub trait Geometry {
    fn points(&self) -> Vec<[f64; 3]>;
}

impl Geometry for Contour2D {
    fn points(&self) -> Vec<[f64; 3]> {
        self.sample_points(0.25)
    }
}

impl Geometry for Mesh3D {
    fn points(&self) -> Vec<[f64; 3]> {
        self.sample_points()
    }
}

fn nearest(from: &[f64; 3], to: &[[f64; 3]]) -> f64 {
    to.iter()
        .map(|p| (p[0] - from[0]).powi(2) + (p[1] - from[1]).powi(2) + (p[2] - from[2]).powi(2))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Symmetric Hausdorff distance between sample points of the geometry and
/// the reference cloud; infinite when the geometry is empty.
pub fn hausdorff_to_reference<G: Geometry + ?Sized>(geometry: &G, reference: &PointCloud) -> f64 {
    let ours = geometry.points();
    if ours.is_empty() || reference.is_empty() {
        return f64::INFINITY;
    }
    let theirs = reference.points();
    let a = ours
        .par_iter()
        .map(|p| nearest(p, theirs))
        .reduce(|| 0.0, f64::max);
    let b = theirs
        .par_iter()
        .map(|p| nearest(p, &ours))
        .reduce(|| 0.0, f64::max);
    a.max(b)
}

/// Bilinear (trilinear) interpolation of a field at an arbitrary position,
/// clamped to the grid.
pub fn interpolate(field: &ScalarField, x: [f64; 3]) -> f64 {
    let shape = field.shape();
    let nd = shape.ndim();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..nd {
        let hi = (shape.dim(a) - 1) as f64;
        let xa = x[a].clamp(0.0, hi);
        let b = xa.floor().min(hi - 1.0);
        base[a] = b as usize;
        frac[a] = xa - b;
    }
    let mut sum = 0.0;
    for corner in 0..(1usize << nd) {
        let mut c = base;
        let mut w = 1.0;
        for a in 0..nd {
            let bit = corner >> a & 1;
            c[a] += bit;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        sum += w * field.get(c);
    }
    sum
}

/// `Σ |κ(midpoint)| · length` over the segments, with `κ` interpolated from
/// a node field.
pub fn total_absolute_curvature(contour: &Contour2D, kappa: &ScalarField) -> f64 {
    contour
        .segments
        .iter()
        .map(|[a, b]| {
            let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, 0.0];
            interpolate(kappa, mid).abs() * (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .sum()
}

/// Mean distance of the geometry's sample points from `centre`.
pub fn mean_radius<G: Geometry + ?Sized>(geometry: &G, centre: [f64; 3]) -> f64 {
    let pts = geometry.points();
    pts.iter()
        .map(|p| {
            ((p[0] - centre[0]).powi(2) + (p[1] - centre[1]).powi(2) + (p[2] - centre[2]).powi(2))
                .sqrt()
        })
        .sum::<f64>()
        / pts.len() as f64
}
