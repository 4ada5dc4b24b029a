//! Results of a reconstruction run.

use std::fmt;
use std::io::Write;

use crate::error::Result;
use crate::grid::ScalarField;
use crate::levelset::{write_energy_csv, EnergyBreakdown};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// The largest node-wise change of `φ` fell below the tolerance.
    Tol,
    MaxIters,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Tol => "tol",
            StopReason::MaxIters => "max_iters",
        })
    }
}

/// Constraint residual norms of one augmented Lagrangian iteration:
/// `‖p − ∇φ‖`, `‖q − ∇·n‖`, `‖|p|n − p‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residuals {
    pub p: f64,
    pub q: f64,
    pub n: f64,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub phi: ScalarField,
    /// One entry per iteration.
    pub energy: Vec<EnergyBreakdown>,
    /// Largest node-wise `|φᵏ⁺¹ − φᵏ|` per iteration.
    pub changes: Vec<f64>,
    /// Empty for the operator-splitting solver.
    pub residuals: Vec<Residuals>,
    pub iterations: usize,
    pub stop: StopReason,
}

impl RunReport {
    pub fn final_energy(&self) -> f64 {
        self.energy.last().map_or(f64::NAN, |e| e.total)
    }

    /// `{"iters":…,"stop":"tol|max_iters","final_energy":…}`
    pub fn summary_line(&self) -> String {
        format!(
            "{{\"iters\":{},\"stop\":\"{}\",\"final_energy\":{:e}}}",
            self.iterations,
            self.stop,
            self.final_energy()
        )
    }

    pub fn write_energy_csv<W: Write>(&self, w: W) -> Result<()> {
        write_energy_csv(w, &self.energy)
    }

    /// Writes `iter,res_p,res_q,res_n` rows.
    pub fn write_residual_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,res_p,res_q,res_n")?;
        for (k, r) in self.residuals.iter().enumerate() {
            writeln!(w, "{},{:e},{:e},{:e}", k + 1, r.p, r.q, r.n)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridShape;

    #[test]
    fn summary_format() {
        let e = EnergyBreakdown {
            distance_term: 1.0,
            curvature_term: 0.0,
            total: 1.25,
            s: 2,
            eta: 0.0,
        };
        let r = RunReport {
            phi: ScalarField::zeros(GridShape::new_2d(4, 4).unwrap()),
            energy: vec![e],
            changes: vec![0.5],
            residuals: vec![Residuals {
                p: 1.0,
                q: 2.0,
                n: 3.0,
            }],
            iterations: 1,
            stop: StopReason::Tol,
        };
        assert_eq!(
            r.summary_line(),
            "{\"iters\":1,\"stop\":\"tol\",\"final_energy\":1.25e0}"
        );
        let mut buf = Vec::new();
        r.write_residual_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iter,res_p,res_q,res_n\n1,1e0,2e0,3e0\n"
        );
    }
}
