//! Augmented Lagrangian solver for `s = 1` in 2D.
//!
//! The constraints `p = ∇φ`, `n = p/|p|` and `q = ∇·n` carry multipliers
//! `λ₁, λ₂, λ₃` and penalties `r₁, r₂, r₃`. One iteration updates `φ`, `q`,
//! `p` and `n` in that order, each from the freshest values of the others,
//! reinitializes `φ`, and takes one ascent step on the multipliers.
//!
//! `∇·n` uses backward differences and the gradient of `r₂q + λ₂` forward
//! differences, so that the `n` update is the exact minimizer of its
//! discrete subproblem. `∇φ` and `∇·(r₁p + λ₁)` use central differences.

pub mod pointwise;

use rayon::prelude::*;

use crate::distance::{distance_field, PointCloud};
use crate::error::{Error, Result};
use crate::grid::{self, GridShape, ScalarField, VectorField};
use crate::levelset::{self, LevelSetState};
use crate::report::{Residuals, RunReport, StopReason};
use crate::spectral::SpectralSolver;

pub use pointwise::{
    brute_force_p, minimize_p, shrink, solve_theta, solve_theta_with, theta_residual, PointwiseP,
    DEFAULT_NEWTON_MAX, DEFAULT_NEWTON_TOL,
};

/// Any field beyond this magnitude aborts the run.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

#[derive(Clone, Debug, PartialEq)]
pub struct AlmConfig {
    pub eta: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    /// Frozen coefficient of the `φ` update.
    pub beta: f64,
    /// Shift in `D = max(r₃|p|² + β₂)` for the `n` update.
    pub beta2: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub newton_tol: f64,
    pub newton_max: usize,
    /// Reinitialization steps applied every `reinit_every` iterations.
    pub reinit_steps: usize,
    pub reinit_every: usize,
    pub reinit_dtau: f64,
    pub grad_floor: f64,
    pub init_margin: f64,
}

impl Default for AlmConfig {
    fn default() -> Self {
        Self {
            eta: 0.0,
            r1: 15.0,
            r2: 10.0,
            r3: 3.0,
            beta: 0.1,
            beta2: 1e-2,
            epsilon: levelset::DEFAULT_EPSILON,
            max_iters: 5000,
            tol: 1e-3,
            newton_tol: pointwise::DEFAULT_NEWTON_TOL,
            newton_max: pointwise::DEFAULT_NEWTON_MAX,
            reinit_steps: 1,
            reinit_every: 1,
            reinit_dtau: levelset::DEFAULT_REINIT_DTAU,
            grad_floor: levelset::GRAD_FLOOR,
            init_margin: 5.0,
        }
    }
}

impl AlmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let positive = [
            ("r1", self.r1),
            ("r2", self.r2),
            ("r3", self.r3),
            ("beta", self.beta),
            ("beta2", self.beta2),
            ("epsilon", self.epsilon),
            ("tol", self.tol),
            ("newton_tol", self.newton_tol),
            ("grad_floor", self.grad_floor),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return bad(format!("eta must be >= 0, got {}", self.eta));
        }
        if !(self.init_margin.is_finite() && self.init_margin >= 0.0) {
            return bad(format!(
                "init_margin must be >= 0, got {}",
                self.init_margin
            ));
        }
        if self.max_iters == 0 || self.newton_max == 0 || self.reinit_every == 0 {
            return bad("max_iters, newton_max and reinit_every must be positive".into());
        }
        if !(self.reinit_dtau > 0.0 && self.reinit_dtau <= 0.5) {
            return bad(format!(
                "reinit_dtau must lie in (0, 0.5], got {}",
                self.reinit_dtau
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlmState {
    pub phi: ScalarField,
    pub q: ScalarField,
    pub p: VectorField,
    pub n: VectorField,
    pub lambda1: VectorField,
    pub lambda2: ScalarField,
    pub lambda3: VectorField,
}

impl AlmState {
    /// `p = ∇φ`, `n = p/|p|`, `q` the curvature of `φ`, zero multipliers.
    pub fn new(phi: ScalarField, grad_floor: f64) -> Result<Self> {
        let shape = phi.shape();
        require_2d(shape)?;
        let p = grid::gradient(&phi);
        let (n, _) = levelset::normals(&phi, grad_floor);
        let q = levelset::curvature_of(&phi, grad_floor);
        Ok(Self {
            phi,
            q,
            p,
            n,
            lambda1: VectorField::zeros(shape),
            lambda2: ScalarField::zeros(shape),
            lambda3: VectorField::zeros(shape),
        })
    }

    pub fn shape(&self) -> GridShape {
        self.phi.shape()
    }

    fn check_shapes(&self) -> Result<()> {
        let shape = self.shape();
        require_2d(shape)?;
        let shapes = [
            self.q.shape(),
            self.p.shape(),
            self.n.shape(),
            self.lambda1.shape(),
            self.lambda2.shape(),
            self.lambda3.shape(),
        ];
        match shapes.iter().find(|s| **s != shape) {
            Some(s) => Err(Error::ShapeMismatch {
                expected: shape.dims().to_vec(),
                found: s.dims().to_vec(),
            }),
            None => Ok(()),
        }
    }

    fn is_finite(&self) -> bool {
        self.phi.is_finite()
            && self.q.is_finite()
            && self.p.is_finite()
            && self.n.is_finite()
            && self.lambda1.is_finite()
            && self.lambda2.is_finite()
            && self.lambda3.is_finite()
    }

    fn max_abs(&self) -> f64 {
        [
            self.phi.max_abs(),
            self.q.max_abs(),
            self.p.max_abs(),
            self.n.max_abs(),
            self.lambda1.max_abs(),
            self.lambda2.max_abs(),
            self.lambda3.max_abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// `(p − ∇φ, q − ∇·n, |p|n − p)`.
    pub fn constraint_violations(&self) -> (VectorField, ScalarField, VectorField) {
        let rp = self.p.add_scaled(-1.0, &grid::gradient(&self.phi));
        let rq = self
            .q
            .zip_map(&grid::backward_divergence(&self.n), |q, d| q - d);
        let rn = self.n.scaled_by(&self.p.norm()).add_scaled(-1.0, &self.p);
        (rp, rq, rn)
    }

    /// Euclidean norms of the constraint violations over the grid.
    pub fn residuals(&self) -> Residuals {
        let (rp, rq, rn) = self.constraint_violations();
        Residuals {
            p: rp.l2_norm(),
            q: rq.l2_norm(),
            n: rn.l2_norm(),
        }
    }
}

fn require_2d(shape: GridShape) -> Result<()> {
    if shape.ndim() == 2 {
        Ok(())
    } else {
        Err(Error::Unsupported("ALM supports 2D only".into()))
    }
}

fn check_distance(state: &AlmState, d: &ScalarField) -> Result<()> {
    if d.shape() == state.shape() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            expected: state.shape().dims().to_vec(),
            found: d.shape().dims().to_vec(),
        })
    }
}

/// `ε/(π(ε² + φ²))`
fn dirac(phi: f64, eps: f64) -> f64 {
    eps / (std::f64::consts::PI * (eps * eps + phi * phi))
}

/// Solves `−r₁Δφ' + βφ' = βφ + (d + η|q|)·2ε|p|φ/(π(ε² + φ²)²) − ∇·(r₁p + λ₁)`.
pub fn alm_phi_subproblem(
    state: &AlmState,
    d: &ScalarField,
    cfg: &AlmConfig,
) -> Result<ScalarField> {
    phi_update(&SpectralSolver::new(state.shape()), state, d, cfg)
}

fn phi_update(
    solver: &SpectralSolver,
    state: &AlmState,
    d: &ScalarField,
    cfg: &AlmConfig,
) -> Result<ScalarField> {
    state.check_shapes()?;
    check_distance(state, d)?;
    let eps = cfg.epsilon;
    let pmag = state.p.norm();
    let flux = grid::divergence(&state.lambda1.add_scaled(cfg.r1, &state.p));
    let mut rhs = ScalarField::zeros(state.shape());
    for (i, r) in rhs.values_mut().iter_mut().enumerate() {
        let phi = state.phi.values()[i];
        let weight = d.values()[i] + cfg.eta * state.q.values()[i].abs();
        let den = eps * eps + phi * phi;
        let source =
            weight * 2.0 * eps * pmag.values()[i] * phi / (std::f64::consts::PI * den * den);
        *r = cfg.beta * phi + source - flux.values()[i];
    }
    solver.helmholtz(cfg.r1, cfg.beta, &rhs)
}

/// Node-wise shrinkage of `q* = ∇·n − λ₂/r₂` with threshold
/// `ηε|p|/(r₂π(ε² + φ²))`.
pub fn alm_q_subproblem(state: &AlmState, cfg: &AlmConfig) -> Result<ScalarField> {
    state.check_shapes()?;
    let div_n = grid::backward_divergence(&state.n);
    let pmag = state.p.norm();
    let values = (0..state.shape().len())
        .map(|i| {
            let q_star = div_n.values()[i] - state.lambda2.values()[i] / cfg.r2;
            let t = cfg.eta * pmag.values()[i] * dirac(state.phi.values()[i], cfg.epsilon) / cfg.r2;
            shrink(q_star, t)
        })
        .collect();
    ScalarField::from_vec(state.shape(), values)
}

/// Coefficients of the node-wise `p` objective at node `i`.
pub fn pointwise_problem(
    state: &AlmState,
    d: &ScalarField,
    grad_phi: &VectorField,
    cfg: &AlmConfig,
    i: usize,
) -> PointwiseP {
    let n = state.n.at(i);
    let l1 = state.lambda1.at(i);
    let l3 = state.lambda3.at(i);
    let g = grad_phi.at(i);
    let nn = n[0] * n[0] + n[1] * n[1];
    let mu = cfg.r1 + cfg.r3 * (1.0 + nn);
    let weight = d.values()[i] + cfg.eta * state.q.values()[i].abs();
    PointwiseP {
        omega: weight * dirac(state.phi.values()[i], cfg.epsilon) + l3[0] * n[0] + l3[1] * n[1],
        mu,
        a: [
            (l3[0] + cfg.r1 * g[0] - l1[0]) / mu,
            (l3[1] + cfg.r1 * g[1] - l1[1]) / mu,
        ],
        nu: [cfg.r3 * n[0], cfg.r3 * n[1]],
    }
}

/// Node-wise minimizer of `ω|p| + (μ/2)|p − a|² − ν·p|p|`.
pub fn alm_p_subproblem(state: &AlmState, d: &ScalarField, cfg: &AlmConfig) -> Result<VectorField> {
    state.check_shapes()?;
    check_distance(state, d)?;
    let shape = state.shape();
    let grad_phi = grid::gradient(&state.phi);
    let solved: Vec<[f64; 2]> = (0..shape.len())
        .into_par_iter()
        .map(|i| {
            let pw = pointwise_problem(state, d, &grad_phi, cfg, i);
            minimize_p(&pw, cfg.newton_tol, cfg.newton_max)
        })
        .collect::<Result<_>>()?;
    let mut p = VectorField::zeros(shape);
    for (i, v) in solved.into_iter().enumerate() {
        p.set_at(i, [v[0], v[1], 0.0]);
    }
    Ok(p)
}

/// Solves `−r₂∇(∇·n') + Dn' = (D − r₃|p|²)n − ∇(r₂q + λ₂) − (λ₃ − r₃p)|p|`
/// with `D = max(r₃|p|² + β₂)`.
pub fn alm_n_subproblem(state: &AlmState, cfg: &AlmConfig) -> Result<VectorField> {
    n_update(&SpectralSolver::new(state.shape()), state, cfg)
}

fn n_update(solver: &SpectralSolver, state: &AlmState, cfg: &AlmConfig) -> Result<VectorField> {
    state.check_shapes()?;
    let shape = state.shape();
    let pmag = state.p.norm();
    let big_d = pmag
        .values()
        .iter()
        .map(|m| cfg.r3 * m * m + cfg.beta2)
        .fold(f64::NEG_INFINITY, f64::max);
    let grad_q = grid::forward_gradient(&state.q.zip_map(&state.lambda2, |q, l| cfg.r2 * q + l));
    let mut rhs = VectorField::zeros(shape);
    for a in 0..2 {
        let out = rhs.component_mut(a);
        for (i, r) in out.iter_mut().enumerate() {
            let m = pmag.values()[i];
            *r = (big_d - cfg.r3 * m * m) * state.n.component(a)[i]
                - grad_q.component(a)[i]
                - (state.lambda3.component(a)[i] - cfg.r3 * state.p.component(a)[i]) * m;
        }
    }
    solver.vector_helmholtz(cfg.r2, big_d, &rhs)
}

/// `λ₁ += r₁(p − ∇φ)`, `λ₂ += r₂(q − ∇·n)`, `λ₃ += r₃(|p|n − p)`, with the
/// norms of the three violations.
pub fn alm_multiplier_update(state: &AlmState, cfg: &AlmConfig) -> Result<(AlmState, Residuals)> {
    state.check_shapes()?;
    let (rp, rq, rn) = state.constraint_violations();
    let residuals = Residuals {
        p: rp.l2_norm(),
        q: rq.l2_norm(),
        n: rn.l2_norm(),
    };
    let next = AlmState {
        lambda1: state.lambda1.add_scaled(cfg.r1, &rp),
        lambda2: state.lambda2.zip_map(&rq, |l, r| l + cfg.r2 * r),
        lambda3: state.lambda3.add_scaled(cfg.r3, &rn),
        ..state.clone()
    };
    Ok((next, residuals))
}

/// One full iteration; `k` counts from 1 and drives the reinitialization
/// schedule.
pub fn alm_iteration(
    solver: &SpectralSolver,
    state: &AlmState,
    d: &ScalarField,
    cfg: &AlmConfig,
    k: usize,
) -> Result<(AlmState, Residuals)> {
    let mut st = state.clone();
    st.phi = phi_update(solver, &st, d, cfg)?;
    st.q = alm_q_subproblem(&st, cfg)?;
    st.p = alm_p_subproblem(&st, d, cfg)?;
    st.n = n_update(solver, &st, cfg)?;
    if cfg.reinit_steps > 0 && k.is_multiple_of(cfg.reinit_every) {
        let ls = LevelSetState {
            phi: st.phi,
            epsilon: cfg.epsilon,
            grad_floor: cfg.grad_floor,
        };
        st.phi = levelset::reinitialize(&ls, cfg.reinit_steps, cfg.reinit_dtau)?;
    }
    alm_multiplier_update(&st, cfg)
}

/// Full reconstruction: distance field, enclosing circle, iterations.
pub fn alm_run(cloud: &PointCloud, cfg: &AlmConfig, shape: GridShape) -> Result<RunReport> {
    cfg.validate()?;
    require_2d(shape)?;
    let d = distance_field(cloud, shape)?;
    let phi0 = levelset::initialize_phi(cloud, shape, cfg.init_margin)?;
    alm_run_from(AlmState::new(phi0, cfg.grad_floor)?, &d, cfg)
}

/// Iterates from a given state until `max |Δφ| < tol` or `max_iters`.
pub fn alm_run_from(mut state: AlmState, d: &ScalarField, cfg: &AlmConfig) -> Result<RunReport> {
    cfg.validate()?;
    state.check_shapes()?;
    check_distance(&state, d)?;
    let solver = SpectralSolver::new(state.shape());
    let mut energy = Vec::new();
    let mut changes = Vec::new();
    let mut residuals = Vec::new();
    let mut stop = StopReason::MaxIters;
    for k in 1..=cfg.max_iters {
        let (next, res) = alm_iteration(&solver, &state, d, cfg, k)?;
        if !next.is_finite() {
            return Err(Error::NonFiniteIterate { iteration: k });
        }
        if next.max_abs() > DIVERGENCE_LIMIT {
            return Err(Error::Divergent { iteration: k });
        }
        let change = next.phi.max_abs_diff(&state.phi);
        state = next;
        let ls = LevelSetState {
            phi: state.phi.clone(),
            epsilon: cfg.epsilon,
            grad_floor: cfg.grad_floor,
        };
        energy.push(levelset::energy(&ls, d, &state.q, 1, cfg.eta)?);
        changes.push(change);
        residuals.push(res);
        if change < cfg.tol {
            stop = StopReason::Tol;
            break;
        }
    }
    Ok(RunReport {
        iterations: changes.len(),
        phi: state.phi,
        energy,
        changes,
        residuals,
        stop,
    })
}
