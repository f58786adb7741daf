//! Precession dynamics `H = Omega * Jx` and the three-moment time grid.
//!
//! Time only ever enters through the dimensionless products `Omega * dt`, so
//! the model carries no absolute clock. The measurement grid fixes
//! `Omega * (t1 - t0) = pi` and equal spacing `tau` between the remaining
//! moments.

use crate::error::{Error, Result};
use crate::linalg::{eigh, jx, AngularMomentumOp, ComplexMatrix, HermitianEigen};

/// A spin precessing at angular frequency `omega` (hbar = 1).
#[derive(Debug, Clone)]
pub struct PrecessionModel {
    omega: f64,
    dim: usize,
    jx: AngularMomentumOp,
    // cached eigendecomposition of Jx; evolution operators are built from it
    eigen: HermitianEigen,
}

impl PrecessionModel {
    pub fn new(omega: f64, dim: usize) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega must be positive and finite, got {omega}"
            )));
        }
        let jx = jx(dim)?;
        let eigen = eigh(&jx.matrix)?;
        Ok(Self {
            omega,
            dim,
            jx,
            eigen,
        })
    }

    /// Three-level model, the case exercised by the experiment.
    pub fn qutrit(omega: f64) -> Result<Self> {
        Self::new(omega, 3)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jx(&self) -> &AngularMomentumOp {
        &self.jx
    }

    /// `exp(-i * omega * dt * Jx)`, unitary up to the eigensolve tolerance.
    pub fn evolution_operator(&self, dt: f64) -> ComplexMatrix {
        assert!(dt.is_finite(), "evolution time must be finite");
        self.eigen.unitary_exp(self.omega * dt)
    }
}

/// The measurement moments t1 < t2 < t3: the first interval satisfies
/// `Omega * (t1 - t0) = pi` by construction, and `t2 - t1 = t3 - t2 = tau`.
#[derive(Debug, Clone, Copy)]
pub struct TimeGrid {
    tau: f64,
}

impl TimeGrid {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau must be nonnegative and finite, got {tau}"
            )));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// t1 - t0 for the given precession frequency.
    pub fn first_interval(&self, omega: f64) -> f64 {
        std::f64::consts::PI / omega
    }
}

/// Evolution operators between consecutive measurement moments.
#[derive(Debug, Clone)]
pub struct GridOperators {
    pub u10: ComplexMatrix,
    pub u21: ComplexMatrix,
    pub u32: ComplexMatrix,
}

impl GridOperators {
    /// Combined evolution from t1 to t3.
    pub fn u31(&self) -> ComplexMatrix {
        self.u32.mul(&self.u21).expect("same dims")
    }
}

/// Builds (U10, U21, U32) for the grid: U10 spans the pi interval, and the
/// two later intervals both span `tau`.
pub fn grid_operators(model: &PrecessionModel, grid: &TimeGrid) -> GridOperators {
    let u10 = model.evolution_operator(grid.first_interval(model.omega()));
    let u21 = model.evolution_operator(grid.tau());
    let u32 = u21.clone();
    GridOperators { u10, u21, u32 }
}
