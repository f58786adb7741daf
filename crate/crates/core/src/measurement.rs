//! Dichotomous observable, state-update rules, and exact K3 correlators.
//!
//! The observable assigns +-1 to each computational basis level; the ground
//! level carries -1 and the two metastable levels carry +1 by default. Two
//! projective update rules are supported: the Lueders rule projects onto the
//! eigenspace of the obtained outcome and keeps coherence inside degenerate
//! subspaces, the von Neumann rule projects onto individual basis levels and
//! destroys it. The difference is what pushes the three-time correlator K3
//! past the Lueders bound of 1.5.

use num_complex::Complex64 as C64;

use crate::dynamics::{grid_operators, PrecessionModel, TimeGrid};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityOperator};
use crate::tol;

/// How a projective measurement updates the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateRule {
    /// Eigenspace projectors: rho -> P rho P for the outcome's eigenspace.
    Luders,
    /// Rank-1 basis projectors: rho -> sum_k P_k rho P_k over the outcome's
    /// degenerate levels.
    VonNeumann,
}

impl UpdateRule {
    pub fn name(&self) -> &'static str {
        match self {
            UpdateRule::Luders => "luders",
            UpdateRule::VonNeumann => "vonneumann",
        }
    }
}

/// Two-valued observable over the computational basis with derived
/// eigenspace and rank-1 projectors.
#[derive(Debug, Clone)]
pub struct DichotomousObservable {
    dim: usize,
    q: Vec<i8>,
    pi_plus: ComplexMatrix,
    pi_minus: ComplexMatrix,
}

impl DichotomousObservable {
    /// `q` assigns +-1 to each basis index; both outcomes must appear.
    pub fn new(dim: usize, q: Vec<i8>) -> Result<Self> {
        if q.len() != dim {
            return Err(Error::DimensionMismatch(q.len(), dim));
        }
        if q.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidParameter(
                "q assignment entries must be +1 or -1".into(),
            ));
        }
        if !q.contains(&1) || !q.contains(&-1) {
            return Err(Error::InvalidParameter(
                "q assignment must contain both +1 and -1".into(),
            ));
        }
        let mut pi_plus = ComplexMatrix::zeros(dim)?;
        let mut pi_minus = ComplexMatrix::zeros(dim)?;
        for (k, &v) in q.iter().enumerate() {
            if v == 1 {
                pi_plus.set(k, k, C64::new(1.0, 0.0));
            } else {
                pi_minus.set(k, k, C64::new(1.0, 0.0));
            }
        }
        Ok(Self {
            dim,
            q,
            pi_plus,
            pi_minus,
        })
    }

    /// The experiment's assignment: ground level -1, both metastable
    /// levels +1.
    pub fn qutrit_default() -> Self {
        Self::new(3, vec![-1, 1, 1]).expect("valid fixed assignment")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q_values(&self) -> &[i8] {
        &self.q
    }

    pub fn eigenspace_projector(&self, outcome: i8) -> Result<&ComplexMatrix> {
        match outcome {
            1 => Ok(&self.pi_plus),
            -1 => Ok(&self.pi_minus),
            other => Err(Error::UnknownOutcome(other)),
        }
    }

    /// Basis indices belonging to the outcome's eigenspace.
    pub fn outcome_indices(&self, outcome: i8) -> Result<Vec<usize>> {
        if outcome != 1 && outcome != -1 {
            return Err(Error::UnknownOutcome(outcome));
        }
        Ok(self
            .q
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == outcome)
            .map(|(k, _)| k)
            .collect())
    }

    /// Rank-1 projector |k><k|.
    pub fn rank1_projector(&self, index: usize) -> Result<ComplexMatrix> {
        if index >= self.dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for dim {}",
                self.dim
            )));
        }
        let mut p = ComplexMatrix::zeros(self.dim)?;
        p.set(index, index, C64::new(1.0, 0.0));
        Ok(p)
    }

    /// The projectors a measurement sums over under the given rule, each
    /// paired with its outcome value.
    pub fn update_projectors(&self, rule: UpdateRule) -> Vec<(ComplexMatrix, f64)> {
        match rule {
            UpdateRule::Luders => vec![
                (self.pi_minus.clone(), -1.0),
                (self.pi_plus.clone(), 1.0),
            ],
            UpdateRule::VonNeumann => self
                .q
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    let p = self.rank1_projector(k).expect("index in range");
                    (p, f64::from(v))
                })
                .collect(),
        }
    }
}

/// Applies one projective measurement for the given outcome and returns the
/// outcome probability together with the unnormalized branch (its trace is
/// the probability, so zero-probability branches stay well defined).
pub fn measure_branch(
    rho: &DensityOperator,
    obs: &DichotomousObservable,
    outcome: i8,
    rule: UpdateRule,
) -> Result<(f64, DensityOperator)> {
    if rho.is_branch() {
        return Err(Error::NotNormalized(rho.trace_real()));
    }
    if rho.dim() != obs.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), obs.dim()));
    }
    let branch = match rule {
        UpdateRule::Luders => {
            let p = obs.eigenspace_projector(outcome)?;
            p.mul(rho.matrix())?.mul(p)?
        }
        UpdateRule::VonNeumann => {
            let mut acc = ComplexMatrix::zeros(rho.dim())?;
            for k in obs.outcome_indices(outcome)? {
                let p = obs.rank1_projector(k)?;
                acc = acc.add(&p.mul(rho.matrix())?.mul(&p)?)?;
            }
            acc
        }
    };
    let prob = branch.trace().re;
    Ok((prob, DensityOperator::new_branch(branch)?))
}

/// Two-time correlator of the observable measured after `u_first` and again
/// after `u_second`, evaluated as the projector double sum
/// `sum_{l,m} q_l q_m Tr{ P_m U2 P_l U1 rho U1^dag P_l U2^dag }` with the
/// projector set chosen by the update rule.
pub fn correlator(
    rho0: &DensityOperator,
    u_first: &ComplexMatrix,
    u_second: &ComplexMatrix,
    obs: &DichotomousObservable,
    rule: UpdateRule,
) -> Result<f64> {
    if rho0.is_branch() {
        return Err(Error::NotNormalized(rho0.trace_real()));
    }
    let rho1 = rho0.matrix().conjugate_by(u_first)?;
    let projectors = obs.update_projectors(rule);
    let mut acc = C64::new(0.0, 0.0);
    for (p_first, q_first) in &projectors {
        let branch = p_first.mul(&rho1)?.mul(p_first)?;
        let rho2 = branch.conjugate_by(u_second)?;
        for (p_second, q_second) in &projectors {
            let t = p_second.mul(&rho2)?.trace();
            acc += t * (q_first * q_second);
        }
    }
    if acc.im.abs() > tol::IMAG_RESIDUE {
        return Err(Error::ImaginaryResidue(acc.im.abs()));
    }
    let c = acc.re;
    // clip roundoff excursions just past the physical range
    if c > 1.0 && c <= 1.0 + 1e-9 {
        return Ok(1.0);
    }
    if (-1.0 - 1e-9..-1.0).contains(&c) {
        return Ok(-1.0);
    }
    Ok(c)
}

/// The three correlators of one K3 run and their combination.
#[derive(Debug, Clone, Copy)]
pub struct CorrelatorResult {
    pub c21: f64,
    pub c32: f64,
    pub c31: f64,
    pub k3: f64,
}

impl CorrelatorResult {
    pub fn new(c21: f64, c32: f64, c31: f64) -> Self {
        Self {
            c21,
            c32,
            c31,
            k3: c21 + c32 - c31,
        }
    }
}

/// Exact density-matrix K3 at inter-measurement angle `Omega * tau`: the
/// system starts in the lowest level, C21 measures at (t1, t2), C32 at
/// (t2, t3) with no measurement at t1, and C31 at (t1, t3).
pub fn k3_exact(model: &PrecessionModel, tau: f64, rule: UpdateRule) -> Result<CorrelatorResult> {
    if model.dim() != 3 {
        return Err(Error::InvalidParameter(format!(
            "K3 protocol is defined for dim 3, got {}",
            model.dim()
        )));
    }
    let obs = DichotomousObservable::qutrit_default();
    let rho0 = DensityOperator::pure(3, 0)?;
    let ops = grid_operators(model, &TimeGrid::new(tau)?);

    let c21 = correlator(&rho0, &ops.u10, &ops.u21, &obs, rule)?;
    let u20 = ops.u21.mul(&ops.u10)?;
    let c32 = correlator(&rho0, &u20, &ops.u32, &obs, rule)?;
    let c31 = correlator(&rho0, &ops.u10, &ops.u31(), &obs, rule)?;
    Ok(CorrelatorResult::new(c21, c32, c31))
}

/// Closed-form K3 as a function of the angle `x = Omega * tau`.
pub fn k3_analytic(tau_angle: f64, rule: UpdateRule) -> f64 {
    let x = tau_angle;
    match rule {
        UpdateRule::Luders => {
            -1.0 / 8.0 + 2.0 * x.cos() - (2.0 * x).cos() + (4.0 * x).cos() / 8.0
        }
        UpdateRule::VonNeumann => {
            1.0 / 16.0 + 2.0 * x.cos() - 1.25 * (2.0 * x).cos() + 0.1875 * (4.0 * x).cos()
        }
    }
}
