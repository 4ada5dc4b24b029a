//! Operator-splitting semi-implicit solver.
//!
//! Each iteration first moves `φ` by a stabilized semi-implicit step
//!
//! ```text
//! (φᵏ⁺¹ − φᵏ)/Δt − αΔφᵏ⁺¹ = −αΔφᵏ + F(φᵏ, qᵏ)
//! ```
//!
//! solved with one FFT Helmholtz solve. Then it relaxes the auxiliary
//! curvature `q` toward `∇·(∇φᵏ⁺¹/|∇φᵏ⁺¹|)` with the exact solution of
//! `q_t + γ(q − κ) = 0` over `Δt`, and finally reinitializes `φ`.
//!
//! For `s = 2` the forcing is
//! `F = f(d)·δ·∇·(d² n) + η f(q)·δ·∇·(q² n)` with global weights
//! `f(g) = ½ (Σ g² δ |∇φ|)^{-1/2}`. For `s = 1` it is
//! `F = δ·∇·(d n) + η δ·∇·(|q| n)`.

use crate::distance::{distance_field, PointCloud};
use crate::error::{Error, Result};
use crate::grid::{self, GridShape, ScalarField};
use crate::levelset::{self, LevelSetState};
use crate::report::{RunReport, StopReason};
use crate::spectral::SpectralSolver;

#[derive(Clone, Debug, PartialEq)]
pub struct OsmConfig {
    pub s: u32,
    pub eta: f64,
    pub dt: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub max_iters: usize,
    /// Stop once no node of `φ` moves by more than this in one iteration.
    pub tol: f64,
    pub reinit_steps: usize,
    pub reinit_dtau: f64,
    /// Lower bound on the integrals inside the `s = 2` weights.
    pub integral_floor: f64,
    pub epsilon: f64,
    pub grad_floor: f64,
    /// Gap between the farthest data point and the initial circle/sphere.
    pub init_margin: f64,
}

impl Default for OsmConfig {
    fn default() -> Self {
        Self {
            s: 2,
            eta: 0.0,
            dt: 50.0,
            gamma: 10.0,
            alpha: 1.0,
            max_iters: 5000,
            tol: 1e-3,
            reinit_steps: levelset::DEFAULT_REINIT_STEPS,
            reinit_dtau: levelset::DEFAULT_REINIT_DTAU,
            integral_floor: 1e-8,
            epsilon: levelset::DEFAULT_EPSILON,
            grad_floor: levelset::GRAD_FLOOR,
            init_margin: 5.0,
        }
    }
}

impl OsmConfig {
    /// Defaults for 3D grids, which take a larger time step.
    pub fn default_3d() -> Self {
        Self {
            dt: 100.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.s != 1 && self.s != 2 {
            return bad(format!("s must be 1 or 2, got {}", self.s));
        }
        let positive = [
            ("dt", self.dt),
            ("alpha", self.alpha),
            ("tol", self.tol),
            ("integral_floor", self.integral_floor),
            ("epsilon", self.epsilon),
            ("grad_floor", self.grad_floor),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        for (name, v) in [("eta", self.eta), ("gamma", self.gamma)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be >= 0, got {v}"));
            }
        }
        if !(self.init_margin.is_finite() && self.init_margin >= 0.0) {
            return bad(format!(
                "init_margin must be >= 0, got {}",
                self.init_margin
            ));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
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
pub struct OsmState {
    pub phi: ScalarField,
    /// Auxiliary curvature variable.
    pub q: ScalarField,
}

impl OsmState {
    /// `q` starts as the curvature of `φ`.
    pub fn new(phi: ScalarField, grad_floor: f64) -> Self {
        let q = levelset::curvature_of(&phi, grad_floor);
        Self { phi, q }
    }
}

/// `½ · max(Σ g² δ_ε(φ) |∇φ|, floor)^{-1/2}`; the node-wise `δ_ε(φ)` factor
/// is applied by the caller.
pub fn weight_f(g: &ScalarField, phi: &ScalarField, epsilon: f64, floor: f64) -> f64 {
    let mag = grid::gradient(phi).norm();
    let integral: f64 = (0..phi.values().len())
        .map(|i| {
            let gi = g.values()[i];
            gi * gi * levelset::dirac_unchecked(phi.values()[i], epsilon) * mag.values()[i]
        })
        .sum();
    0.5 / integral.max(floor).sqrt()
}

/// One `s = 2` iteration; see the module documentation.
pub fn osm_step_s2(state: &OsmState, d: &ScalarField, cfg: &OsmConfig) -> Result<OsmState> {
    if cfg.s != 2 {
        return Err(Error::InvalidParameter("osm_step_s2 requires s = 2".into()));
    }
    step(&SpectralSolver::new(d.shape()), state, d, cfg)
}

/// One `s = 1` iteration; see the module documentation.
pub fn osm_step_s1(state: &OsmState, d: &ScalarField, cfg: &OsmConfig) -> Result<OsmState> {
    if cfg.s != 1 {
        return Err(Error::InvalidParameter("osm_step_s1 requires s = 1".into()));
    }
    step(&SpectralSolver::new(d.shape()), state, d, cfg)
}

/// One iteration with a caller-owned spectral solver.
pub fn step(
    solver: &SpectralSolver,
    state: &OsmState,
    d: &ScalarField,
    cfg: &OsmConfig,
) -> Result<OsmState> {
    let shape = state.phi.shape();
    if d.shape() != shape || state.q.shape() != shape {
        return Err(Error::ShapeMismatch {
            expected: shape.dims().to_vec(),
            found: d.shape().dims().to_vec(),
        });
    }
    let phi = &state.phi;
    let (n, _) = levelset::normals(phi, cfg.grad_floor);
    let delta = phi.map(|p| levelset::dirac_unchecked(p, cfg.epsilon));

    let (wd, wq, gd, gq) = if cfg.s == 2 {
        (
            weight_f(d, phi, cfg.epsilon, cfg.integral_floor),
            weight_f(&state.q, phi, cfg.epsilon, cfg.integral_floor),
            d.map(|v| v * v),
            state.q.map(|v| v * v),
        )
    } else {
        (1.0, 1.0, d.clone(), state.q.map(f64::abs))
    };
    let div_d = grid::divergence(&n.scaled_by(&gd));
    let div_q = if cfg.eta > 0.0 {
        grid::divergence(&n.scaled_by(&gq))
    } else {
        ScalarField::zeros(shape)
    };
    let lap = grid::laplacian(phi);
    let mut rhs = ScalarField::zeros(shape);
    for (i, r) in rhs.values_mut().iter_mut().enumerate() {
        let forcing =
            delta.values()[i] * (wd * div_d.values()[i] + cfg.eta * wq * div_q.values()[i]);
        *r = -cfg.alpha * lap.values()[i] + forcing + phi.values()[i] / cfg.dt;
    }
    let phi_new = solver.helmholtz(cfg.alpha, 1.0 / cfg.dt, &rhs)?;

    let decay = (-cfg.gamma * cfg.dt).exp();
    let kappa = levelset::curvature_of(&phi_new, cfg.grad_floor);
    let q_new = state
        .q
        .zip_map(&kappa, |q, k| decay * q + (1.0 - decay) * k);

    let phi_new = if cfg.reinit_steps > 0 {
        let st = LevelSetState {
            phi: phi_new,
            epsilon: cfg.epsilon,
            grad_floor: cfg.grad_floor,
        };
        levelset::reinitialize(&st, cfg.reinit_steps, cfg.reinit_dtau)?
    } else {
        phi_new
    };
    Ok(OsmState {
        phi: phi_new,
        q: q_new,
    })
}

/// Full reconstruction from a point cloud: distance field, enclosing
/// initial circle or sphere, then iterations until convergence.
pub fn osm_run(cloud: &PointCloud, cfg: &OsmConfig, shape: GridShape) -> Result<RunReport> {
    cfg.validate()?;
    let d = distance_field(cloud, shape)?;
    let phi0 = levelset::initialize_phi(cloud, shape, cfg.init_margin)?;
    osm_run_from(OsmState::new(phi0, cfg.grad_floor), &d, cfg)
}

/// Iterates from a given state and distance field.
pub fn osm_run_from(mut state: OsmState, d: &ScalarField, cfg: &OsmConfig) -> Result<RunReport> {
    cfg.validate()?;
    let solver = SpectralSolver::new(d.shape());
    let mut energy = Vec::new();
    let mut changes = Vec::new();
    let mut stop = StopReason::MaxIters;
    for k in 1..=cfg.max_iters {
        let next = step(&solver, &state, d, cfg)?;
        if !next.phi.is_finite() || !next.q.is_finite() {
            return Err(Error::NonFiniteIterate { iteration: k });
        }
        let change = next.phi.max_abs_diff(&state.phi);
        state = next;
        let ls = LevelSetState {
            phi: state.phi.clone(),
            epsilon: cfg.epsilon,
            grad_floor: cfg.grad_floor,
        };
        energy.push(levelset::energy(&ls, d, &state.q, cfg.s, cfg.eta)?);
        changes.push(change);
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
        residuals: Vec::new(),
        stop,
    })
}
