//! Uniform periodic Cartesian grids and their finite-difference operators.
//!
//! Nodes sit at integer coordinates `0..dim` along each axis with unit
//! spacing. Storage is row-major: the last axis is contiguous. Every
//! difference operator wraps around the domain, so the node after the last
//! one along an axis is the first one.
//!
//! The central gradient and divergence average the one-sided differences,
//! while the Laplacian is the compact 5-point (7-point in 3D) stencil
//! `forward - backward`. Note that `divergence(gradient(u))` is the wide
//! stencil and differs from `laplacian(u)` on high frequencies.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Smallest number of nodes allowed along any axis.
pub const MIN_DIM: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridShape {
    dims: [usize; 3],
    ndim: usize,
}

impl GridShape {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.len() != 2 && dims.len() != 3 {
            return Err(Error::InvalidShape(format!(
                "expected 2 or 3 dimensions, got {}",
                dims.len()
            )));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < MIN_DIM) {
            return Err(Error::InvalidShape(format!(
                "every dimension must be at least {MIN_DIM}, got {d}"
            )));
        }
        let mut all = [1; 3];
        all[..dims.len()].copy_from_slice(dims);
        Ok(Self {
            dims: all,
            ndim: dims.len(),
        })
    }

    pub fn new_2d(m: usize, n: usize) -> Result<Self> {
        Self::new(&[m, n])
    }

    pub fn new_3d(m: usize, n: usize, p: usize) -> Result<Self> {
        Self::new(&[m, n, p])
    }

    #[inline]
    pub fn ndim(&self) -> usize {
        self.ndim
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.ndim]
    }

    #[inline]
    pub fn dim(&self, axis: usize) -> usize {
        self.dims[axis]
    }

    /// Number of nodes.
    #[inline]
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Distance in the flat buffer between neighbors along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.dims[axis + 1..].iter().product()
    }

    #[inline]
    pub fn index(&self, coords: [usize; 3]) -> usize {
        (coords[0] * self.dims[1] + coords[1]) * self.dims[2] + coords[2]
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.dims[2];
        let rest = idx / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], k]
    }

    /// Position of a node in domain coordinates; unused axes are zero.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        [c[0] as f64, c[1] as f64, c[2] as f64]
    }

    /// Periodic neighbor of `idx` one step forward (`step = 1`) or backward
    /// (`step = -1`) along `axis`.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, step: isize) -> usize {
        let stride = self.stride(axis);
        let dim = self.dims[axis];
        let c = (idx / stride) % dim;
        if step > 0 {
            if c + 1 == dim {
                idx + stride - dim * stride
            } else {
                idx + stride
            }
        } else if c == 0 {
            idx + (dim - 1) * stride
        } else {
            idx - stride
        }
    }

    /// Neighbor along `axis`, clamped at the domain faces instead of wrapping.
    #[inline]
    pub fn neighbor_clamped(&self, idx: usize, axis: usize, step: isize) -> usize {
        let stride = self.stride(axis);
        let c = (idx / stride) % self.dims[axis];
        if step > 0 {
            if c + 1 == self.dims[axis] {
                idx
            } else {
                idx + stride
            }
        } else if c == 0 {
            idx
        } else {
            idx - stride
        }
    }
}

/// Real samples on every node of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    shape: GridShape,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(shape: GridShape) -> Self {
        Self::constant(shape, 0.0)
    }

    pub fn constant(shape: GridShape, value: f64) -> Self {
        Self {
            shape,
            values: vec![value; shape.len()],
        }
    }

    pub fn from_vec(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::InvalidShape(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                shape.len()
            )));
        }
        Ok(Self { shape, values })
    }

    /// Builds a field by evaluating `f` at every node position.
    pub fn from_fn(shape: GridShape, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        let values = (0..shape.len()).map(|i| f(shape.position(i))).collect();
        Self { shape, values }
    }

    #[inline]
    pub fn shape(&self) -> GridShape {
        self.shape
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, coords: [usize; 3]) -> f64 {
        self.values[self.shape.index(coords)]
    }

    #[inline]
    pub fn set(&mut self, coords: [usize; 3], value: f64) {
        let i = self.shape.index(coords);
        self.values[i] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.shape, other.shape, "field shapes differ");
        Self {
            shape: self.shape,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape, other.shape, "field shapes differ");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Cyclic shift by `offset` nodes per axis: `out[x + offset] = self[x]`.
    pub fn shifted(&self, offset: [isize; 3]) -> Self {
        let shape = self.shape;
        let mut out = Self::zeros(shape);
        for idx in 0..shape.len() {
            let c = shape.coords(idx);
            let mut t = [0usize; 3];
            for a in 0..3 {
                let d = shape.dims[a] as isize;
                t[a] = (c[a] as isize + offset[a]).rem_euclid(d) as usize;
            }
            out.values[shape.index(t)] = self.values[idx];
        }
        out
    }

    /// Writes the `dims:` header followed by one line per grid line along
    /// the last axis.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        let dims: Vec<String> = self.shape.dims().iter().map(|d| d.to_string()).collect();
        writeln!(w, "dims: {}", dims.join(" "))?;
        let row = self.shape.dims()[self.shape.ndim() - 1];
        let mut line = String::new();
        for chunk in self.values.chunks(row) {
            line.clear();
            for (i, v) in chunk.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                // shortest representation that round-trips exactly
                write!(line, "{v:e}").expect("writing to a String");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let shape = loop {
            let Some((n, line)) = lines.next() else {
                return Err(Error::Parse {
                    line: 1,
                    msg: "missing `dims:` header".into(),
                });
            };
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let rest = t.strip_prefix("dims:").ok_or_else(|| Error::Parse {
                line: n + 1,
                msg: "expected `dims: M N [P]`".into(),
            })?;
            let dims = rest
                .split_whitespace()
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: n + 1,
                    msg: e.to_string(),
                })?;
            break GridShape::new(&dims)?;
        };
        let mut values = Vec::with_capacity(shape.len());
        for (n, line) in lines {
            let line = line?;
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: n + 1,
                    msg: format!("bad number `{tok}`"),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite("scalar field file"));
                }
                values.push(v);
            }
        }
        if values.len() != shape.len() {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {} values, found {}", shape.len(), values.len()),
            });
        }
        Ok(Self { shape, values })
    }
}

/// One vector per node, stored as `ndim` component fields.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    shape: GridShape,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(shape: GridShape) -> Self {
        Self {
            shape,
            comps: vec![vec![0.0; shape.len()]; shape.ndim()],
        }
    }

    pub fn constant(shape: GridShape, value: &[f64]) -> Self {
        assert_eq!(
            value.len(),
            shape.ndim(),
            "vector length must match dimensionality"
        );
        Self {
            shape,
            comps: value.iter().map(|&c| vec![c; shape.len()]).collect(),
        }
    }

    pub fn from_components(comps: Vec<ScalarField>) -> Result<Self> {
        let Some(first) = comps.first() else {
            return Err(Error::InvalidShape("no components".into()));
        };
        let shape = first.shape();
        if comps.len() != shape.ndim() {
            return Err(Error::InvalidShape(format!(
                "{} components for a {}D grid",
                comps.len(),
                shape.ndim()
            )));
        }
        if let Some(c) = comps.iter().find(|c| c.shape() != shape) {
            return Err(Error::ShapeMismatch {
                expected: shape.dims().to_vec(),
                found: c.shape().dims().to_vec(),
            });
        }
        Ok(Self {
            shape,
            comps: comps.into_iter().map(ScalarField::into_values).collect(),
        })
    }

    pub fn from_fn(shape: GridShape, mut f: impl FnMut([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(shape);
        for i in 0..shape.len() {
            let v = f(shape.position(i));
            for (a, comp) in out.comps.iter_mut().enumerate() {
                comp[i] = v[a];
            }
        }
        out
    }

    #[inline]
    pub fn shape(&self) -> GridShape {
        self.shape
    }

    #[inline]
    pub fn component(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }

    #[inline]
    pub fn component_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.comps[axis]
    }

    pub fn component_field(&self, axis: usize) -> ScalarField {
        ScalarField {
            shape: self.shape,
            values: self.comps[axis].clone(),
        }
    }

    /// Vector at node `idx`; unused entries are zero.
    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        let mut v = [0.0; 3];
        for (a, c) in self.comps.iter().enumerate() {
            v[a] = c[idx];
        }
        v
    }

    #[inline]
    pub fn set_at(&mut self, idx: usize, v: [f64; 3]) {
        for (a, c) in self.comps.iter_mut().enumerate() {
            c[idx] = v[a];
        }
    }

    /// Node-wise Euclidean norm.
    pub fn norm(&self) -> ScalarField {
        let values = (0..self.shape.len())
            .map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect();
        ScalarField {
            shape: self.shape,
            values,
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape, other.shape, "field shapes differ");
        self.comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .all(|v| v.is_finite())
    }

    /// Multiplies every vector by the matching node value of `s`.
    pub fn scaled_by(&self, s: &ScalarField) -> Self {
        assert_eq!(self.shape, s.shape(), "field shapes differ");
        Self {
            shape: self.shape,
            comps: self
                .comps
                .iter()
                .map(|c| c.iter().zip(s.values()).map(|(a, b)| a * b).collect())
                .collect(),
        }
    }

    /// `self + k * other`.
    pub fn add_scaled(&self, k: f64, other: &Self) -> Self {
        assert_eq!(self.shape, other.shape, "field shapes differ");
        Self {
            shape: self.shape,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + k * y).collect())
                .collect(),
        }
    }
}

fn one_sided(u: &ScalarField, axis: usize, forward: bool) -> ScalarField {
    let shape = u.shape();
    assert!(
        axis < shape.ndim(),
        "axis {axis} out of range for a {}D grid",
        shape.ndim()
    );
    let v = u.values();
    let values = (0..shape.len())
        .map(|i| {
            if forward {
                v[shape.neighbor(i, axis, 1)] - v[i]
            } else {
                v[i] - v[shape.neighbor(i, axis, -1)]
            }
        })
        .collect();
    ScalarField { shape, values }
}

/// `u(next) - u(here)` along `axis`, wrapping at the last node.
///
/// Panics if `axis` is not below the dimensionality.
pub fn diff_forward(u: &ScalarField, axis: usize) -> ScalarField {
    one_sided(u, axis, true)
}

/// `u(here) - u(previous)` along `axis`, wrapping at the first node.
pub fn diff_backward(u: &ScalarField, axis: usize) -> ScalarField {
    one_sided(u, axis, false)
}

/// Central gradient: the average of the forward and backward differences.
pub fn gradient(u: &ScalarField) -> VectorField {
    let shape = u.shape();
    let v = u.values();
    let comps = (0..shape.ndim())
        .map(|a| {
            (0..shape.len())
                .map(|i| 0.5 * (v[shape.neighbor(i, a, 1)] - v[shape.neighbor(i, a, -1)]))
                .collect()
        })
        .collect();
    VectorField { shape, comps }
}

/// Central divergence, the negative adjoint of [`gradient`].
pub fn divergence(v: &VectorField) -> ScalarField {
    let shape = v.shape();
    let mut values = vec![0.0; shape.len()];
    for (a, c) in v.comps.iter().enumerate() {
        for (i, out) in values.iter_mut().enumerate() {
            *out += 0.5 * (c[shape.neighbor(i, a, 1)] - c[shape.neighbor(i, a, -1)]);
        }
    }
    ScalarField { shape, values }
}

/// Compact periodic Laplacian, `sum_axis (forward - backward)`.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    let shape = u.shape();
    let v = u.values();
    let nd = shape.ndim() as f64;
    let values = (0..shape.len())
        .map(|i| {
            let mut s = -2.0 * nd * v[i];
            for a in 0..shape.ndim() {
                s += v[shape.neighbor(i, a, 1)] + v[shape.neighbor(i, a, -1)];
            }
            s
        })
        .collect();
    ScalarField { shape, values }
}

/// Gradient built from forward differences only.
pub fn forward_gradient(u: &ScalarField) -> VectorField {
    let shape = u.shape();
    let comps = (0..shape.ndim())
        .map(|a| diff_forward(u, a).into_values())
        .collect();
    VectorField { shape, comps }
}

/// Divergence built from backward differences only; the negative adjoint of
/// [`forward_gradient`].
pub fn backward_divergence(v: &VectorField) -> ScalarField {
    let shape = v.shape();
    let mut values = vec![0.0; shape.len()];
    for (a, c) in v.comps.iter().enumerate() {
        for (i, out) in values.iter_mut().enumerate() {
            *out += c[i] - c[shape.neighbor(i, a, -1)];
        }
    }
    ScalarField { shape, values }
}

/// `forward_gradient(backward_divergence(v))`, the discrete grad-div used by
/// the vector Helmholtz system.
pub fn grad_div(v: &VectorField) -> VectorField {
    forward_gradient(&backward_divergence(v))
}
