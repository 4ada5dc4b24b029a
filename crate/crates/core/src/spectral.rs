//! FFT solvers for the periodic Helmholtz systems
//! `-a Δu + b u = c` and `-a ∇(∇·v) + b v = c`.
//!
//! Symbols are taken from the stencils in [`crate::grid`], so the residual
//! of a solve against those stencils is at round-off level.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridShape, ScalarField, VectorField};

#[derive(Clone, Debug)]
pub struct HelmholtzProblem {
    pub a: f64,
    pub b: f64,
    pub rhs: ScalarField,
}

#[derive(Clone, Debug)]
pub struct VectorHelmholtzProblem {
    pub a: f64,
    pub b: f64,
    pub rhs: VectorField,
}

fn check_coefficients(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "a must be finite and >= 0, got {a}"
        )));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "b must be finite and > 0, got {b}"
        )));
    }
    Ok(())
}

/// Cached transform plans for one grid shape.
///
/// Plans are immutable and scratch space is allocated per call, so a solver
/// can be shared between threads.
#[derive(Clone)]
pub struct SpectralSolver {
    shape: GridShape,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// Per axis: `e^{iθ} - 1`, the symbol of the forward difference.
    fwd_symbol: Vec<Vec<Complex64>>,
}

impl std::fmt::Debug for SpectralSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralSolver")
            .field("shape", &self.shape)
            .finish()
    }
}

impl SpectralSolver {
    pub fn new(shape: GridShape) -> Self {
        let mut planner = FftPlanner::new();
        let dims = shape.dims();
        let forward = dims.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let fwd_symbol = dims
            .iter()
            .map(|&n| {
                (0..n)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / n as f64;
                        Complex64::new(t.cos() - 1.0, t.sin())
                    })
                    .collect()
            })
            .collect();
        Self {
            shape,
            forward,
            inverse,
            fwd_symbol,
        }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        let shape = self.shape;
        let mut line = Vec::new();
        let mut scratch = Vec::new();
        for (axis, plan) in plans.iter().enumerate() {
            let n = shape.dim(axis);
            let stride = shape.stride(axis);
            scratch.resize(plan.get_inplace_scratch_len(), Complex64::default());
            if stride == 1 {
                for row in data.chunks_exact_mut(n) {
                    plan.process_with_scratch(row, &mut scratch);
                }
                continue;
            }
            line.resize(n, Complex64::default());
            let block = n * stride;
            for base in (0..data.len()).step_by(block) {
                for off in 0..stride {
                    let start = base + off;
                    for (t, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + t * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (t, v) in line.iter().enumerate() {
                        data[start + t * stride] = *v;
                    }
                }
            }
        }
    }

    fn to_spectrum(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    fn back_to_real(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        data.iter().map(|c| c.re * scale).collect()
    }

    /// Eigenvalue of the discrete Laplacian at flat mode index `idx`.
    fn laplacian_symbol(&self, idx: usize) -> f64 {
        let c = self.shape.coords(idx);
        (0..self.shape.ndim())
            .map(|a| 2.0 * self.fwd_symbol[a][c[a]].re)
            .sum()
    }

    /// Solves `-a Δu + b u = rhs` with `a >= 0`, `b > 0`.
    pub fn helmholtz(&self, a: f64, b: f64, rhs: &ScalarField) -> Result<ScalarField> {
        check_coefficients(a, b)?;
        if rhs.shape() != self.shape {
            return Err(shape_mismatch(self.shape, rhs.shape()));
        }
        if !rhs.is_finite() {
            return Err(Error::NonFinite("helmholtz right-hand side"));
        }
        let mut spec = self.to_spectrum(rhs.values());
        for (idx, c) in spec.iter_mut().enumerate() {
            *c /= b - a * self.laplacian_symbol(idx);
        }
        ScalarField::from_vec(self.shape, self.back_to_real(spec))
    }

    /// Solves `-a G⁺(D⁻v) + b v = rhs` on a 2D grid, where `G⁺` is the
    /// forward-difference gradient and `D⁻` the backward-difference
    /// divergence. Each Fourier mode gives a 2×2 system solved by Cramer's
    /// rule.
    pub fn vector_helmholtz(&self, a: f64, b: f64, rhs: &VectorField) -> Result<VectorField> {
        check_coefficients(a, b)?;
        if self.shape.ndim() != 2 {
            return Err(Error::Unsupported(
                "vector Helmholtz solve is 2D only".into(),
            ));
        }
        if rhs.shape() != self.shape {
            return Err(shape_mismatch(self.shape, rhs.shape()));
        }
        if !rhs.is_finite() {
            return Err(Error::NonFinite("vector helmholtz right-hand side"));
        }
        let mut c1 = self.to_spectrum(rhs.component(0));
        let mut c2 = self.to_spectrum(rhs.component(1));
        let n = self.shape.dim(1);
        for idx in 0..c1.len() {
            let (k, l) = (idx / n, idx % n);
            let f = [self.fwd_symbol[0][k], self.fwd_symbol[1][l]];
            // backward difference symbol 1 - e^{-iθ} = -conj(e^{iθ} - 1)
            let g = [-f[0].conj(), -f[1].conj()];
            let m11 = b - a * f[0] * g[0];
            let m12 = -a * f[0] * g[1];
            let m21 = -a * f[1] * g[0];
            let m22 = b - a * f[1] * g[1];
            let det = m11 * m22 - m12 * m21;
            assert!(det.norm() > 0.0, "singular mode matrix at ({k}, {l})");
            let (r1, r2) = (c1[idx], c2[idx]);
            c1[idx] = (r1 * m22 - m12 * r2) / det;
            c2[idx] = (m11 * r2 - m21 * r1) / det;
        }
        let v1 = ScalarField::from_vec(self.shape, self.back_to_real(c1))?;
        let v2 = ScalarField::from_vec(self.shape, self.back_to_real(c2))?;
        VectorField::from_components(vec![v1, v2])
    }
}

fn shape_mismatch(expected: GridShape, found: GridShape) -> Error {
    Error::ShapeMismatch {
        expected: expected.dims().to_vec(),
        found: found.dims().to_vec(),
    }
}

/// One-shot scalar solve; use [`SpectralSolver`] when solving repeatedly on
/// the same grid.
pub fn solve_helmholtz(prob: &HelmholtzProblem) -> Result<ScalarField> {
    SpectralSolver::new(prob.rhs.shape()).helmholtz(prob.a, prob.b, &prob.rhs)
}

pub fn solve_vector_helmholtz(prob: &VectorHelmholtzProblem) -> Result<VectorField> {
    SpectralSolver::new(prob.rhs.shape()).vector_helmholtz(prob.a, prob.b, &prob.rhs)
}

/// Forward operator of [`solve_helmholtz`].
pub fn apply_helmholtz(a: f64, b: f64, u: &ScalarField) -> ScalarField {
    let lap = crate::grid::laplacian(u);
    u.zip_map(&lap, |x, l| b * x - a * l)
}

/// Forward operator of [`solve_vector_helmholtz`].
pub fn apply_vector_helmholtz(a: f64, b: f64, v: &VectorField) -> VectorField {
    let gd = crate::grid::grad_div(v);
    let mut out = VectorField::zeros(v.shape());
    for axis in 0..v.shape().ndim() {
        let dst = out.component_mut(axis);
        for (i, d) in dst.iter_mut().enumerate() {
            *d = b * v.component(axis)[i] - a * gd.component(axis)[i];
        }
    }
    out
}
