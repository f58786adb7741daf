//! Compilation of 3x3 evolution unitaries into two-level laser rotations.
//!
//! The hardware drives only the four S <-> D transitions of the (qutrit +
//! auxiliary) four-level system, and every drive implements the rotation
//!
//! ```text
//! R(theta, phi) = [ cos(theta/2)              -i sin(theta/2) e^{-i phi} ]
//!                 [ -i sin(theta/2) e^{i phi}  cos(theta/2)              ]
//! ```
//!
//! on its level pair. Compilation proceeds in two stages: a column-sweep
//! two-level decomposition of the 3x3 target, then a legalization pass that
//! rewrites every factor into R-form pulses on drivable pairs. Factors whose
//! 2x2 block is a reflection (equal-magnitude real diagonal of opposite
//! sign) split into a diagonal sign flip plus a rotation; single-level sign
//! flips borrow the auxiliary level and cancel pairwise. The one factor
//! living on the undrivable D <-> D pair is conjugated through permutation
//! pulses R(pi, +-pi/2) on a drivable pair.
//!
//! # Pulse file format
//!
//! One header line
//!
//! ```text
//! # rabi_rad_per_s=<value> target_sha256=<hex>
//! ```
//!
//! followed by one line per pulse with space-separated fields
//! `pair_lo pair_hi theta_rad phi_rad duration_s`, all floats printed with 17
//! significant digits. Lines are in matrix-product order: the product of the
//! embedded rotations read top to bottom equals the embedded target, so the
//! bottom line is the first pulse applied to the ion. The checksum is the
//! SHA-256 of the target's entries in row-major order, real then imaginary
//! part, each formatted `{:.15e}` and joined by single spaces.

use num_complex::Complex64 as C64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::tol;

/// Default Rabi frequency: 2 pi x 8 kHz, in rad/s.
pub const DEFAULT_RABI_RAD_PER_S: f64 = 2.0 * std::f64::consts::PI * 8000.0;

const FOUR_LEVELS: usize = 4;
// 2x2 blocks this far from the R family are rejected
const R_FORM_TOL: f64 = 1e-10;
// factors this close to the identity produce no pulse
const SKIP_IDENTITY_TOL: f64 = 1e-14;
// requests this close to the half-period flip take its fixed 3-pulse form
const FLIP_BRANCH_COS_TOL: f64 = 1e-6;

/// Names of the four levels, indexed as in every matrix here.
#[derive(Debug, Clone, Copy, Default)]
pub struct LevelMap;

impl LevelMap {
    pub const LABELS: [&'static str; 4] = [
        "S1/2(m=-1/2)",
        "D5/2(m=-1/2)",
        "D5/2(m=+1/2)",
        "S1/2(m=+1/2) [aux]",
    ];

    pub fn label(index: usize) -> Option<&'static str> {
        Self::LABELS.get(index).copied()
    }
}

/// Level pairs the laser can drive: S <-> D transitions only. The D <-> D
/// pair (1,2) and the S <-> S pair (0,3) are never emitted.
#[derive(Debug, Clone)]
pub struct CouplingGraph {
    allowed: Vec<(usize, usize)>,
}

impl Default for CouplingGraph {
    fn default() -> Self {
        Self {
            allowed: vec![(0, 1), (0, 2), (1, 3), (2, 3)],
        }
    }
}

impl CouplingGraph {
    pub fn allowed_pairs(&self) -> &[(usize, usize)] {
        &self.allowed
    }

    pub fn is_allowed(&self, pair: (usize, usize)) -> bool {
        let norm = if pair.0 <= pair.1 {
            pair
        } else {
            (pair.1, pair.0)
        };
        self.allowed.contains(&norm)
    }
}

/// 2x2 rotation block R(theta, phi).
pub fn rotation_block(theta: f64, phi: f64) -> ComplexMatrix {
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    let off_upper = C64::new(0.0, -s) * C64::from_polar(1.0, -phi);
    let off_lower = C64::new(0.0, -s) * C64::from_polar(1.0, phi);
    ComplexMatrix::from_rows(&[
        vec![C64::new(c, 0.0), off_upper],
        vec![off_lower, C64::new(c, 0.0)],
    ])
    .expect("2x2 is a valid dimension")
}

/// One laser pulse: a rotation on an allowed level pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationPulse {
    pub pair: (usize, usize),
    pub theta: f64,
    pub phi: f64,
    pub duration: f64,
}

impl RotationPulse {
    /// `duration` follows from `theta / rabi`.
    pub fn new(pair: (usize, usize), theta: f64, phi: f64, rabi: f64) -> Result<Self> {
        if pair.0 >= pair.1 || pair.1 >= FOUR_LEVELS {
            return Err(Error::InvalidParameter(format!(
                "pulse pair ({}, {}) must be ordered and within the four levels",
                pair.0, pair.1
            )));
        }
        if !(0.0..4.0 * std::f64::consts::PI).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "theta {theta} outside [0, 4pi)"
            )));
        }
        if !(-std::f64::consts::PI < phi && phi <= std::f64::consts::PI) {
            return Err(Error::InvalidParameter(format!(
                "phi {phi} outside (-pi, pi]"
            )));
        }
        if !(rabi.is_finite() && rabi > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rabi frequency must be positive, got {rabi}"
            )));
        }
        Ok(Self {
            pair,
            theta,
            phi,
            duration: theta / rabi,
        })
    }

    /// The pulse as a 4x4 unitary: its R block on `pair`, identity elsewhere.
    pub fn embedded(&self) -> ComplexMatrix {
        embed_block(self.pair, &rotation_block(self.theta, self.phi), FOUR_LEVELS)
    }
}

fn embed_block(pair: (usize, usize), block: &ComplexMatrix, dim: usize) -> ComplexMatrix {
    let (lo, hi) = pair;
    let mut m = ComplexMatrix::identity(dim).expect("dim >= 2");
    m.set(lo, lo, block.get(0, 0));
    m.set(lo, hi, block.get(0, 1));
    m.set(hi, lo, block.get(1, 0));
    m.set(hi, hi, block.get(1, 1));
    m
}

/// A unitary differing from the identity only on one 2x2 block.
#[derive(Debug, Clone)]
pub struct TwoLevelFactor {
    pub pair: (usize, usize),
    pub block: ComplexMatrix,
}

impl TwoLevelFactor {
    pub fn embedded(&self, dim: usize) -> ComplexMatrix {
        embed_block(self.pair, &self.block, dim)
    }
}

/// An ordered pulse program compiling a 3x3 target. Pulses multiply in list
/// order (index 0 is the leftmost matrix factor, so the last pulse acts
/// first), and their product equals `embed4(target)` within 1e-10 with no
/// global-phase freedom.
#[derive(Debug, Clone)]
pub struct PulseSequence {
    pulses: Vec<RotationPulse>,
    rabi_frequency: f64,
    target: ComplexMatrix,
}

impl PulseSequence {
    /// Builds a sequence, enforcing the reconstruction invariant.
    pub fn new(
        pulses: Vec<RotationPulse>,
        rabi_frequency: f64,
        target: ComplexMatrix,
    ) -> Result<Self> {
        let seq = Self {
            pulses,
            rabi_frequency,
            target,
        };
        let residual = product_of_pulses(&seq.pulses).max_abs_diff(&embed4(&seq.target)?)?;
        if residual > tol::COMPOSED {
            return Err(Error::ReconstructionFailure(residual));
        }
        Ok(seq)
    }

    pub fn pulses(&self) -> &[RotationPulse] {
        &self.pulses
    }

    pub fn rabi_frequency(&self) -> f64 {
        self.rabi_frequency
    }

    pub fn target(&self) -> &ComplexMatrix {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// Sum of theta_i / rabi over all pulses.
    pub fn total_duration(&self) -> f64 {
        self.pulses.iter().map(|p| p.duration).sum()
    }
}

/// Extends a 3x3 unitary to four levels, acting trivially on the auxiliary.
pub fn embed4(u3: &ComplexMatrix) -> Result<ComplexMatrix> {
    if u3.dim() != 3 {
        return Err(Error::DimensionMismatch(u3.dim(), 3));
    }
    let dev = u3.unitarity_deviation();
    if dev > tol::STRUCTURAL {
        return Err(Error::NotUnitary(dev));
    }
    let mut m = ComplexMatrix::identity(FOUR_LEVELS)?;
    for r in 0..3 {
        for c in 0..3 {
            m.set(r, c, u3.get(r, c));
        }
    }
    Ok(m)
}

/// Ordered product of the embedded pulses; the empty product is the
/// four-level identity.
pub fn product_of_pulses(pulses: &[RotationPulse]) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(FOUR_LEVELS).expect("4 >= 2");
    for p in pulses {
        m = m.mul(&p.embedded()).expect("same dims");
    }
    m
}

/// Ordered product of a sequence's embedded pulses.
pub fn reconstruct(seq: &PulseSequence) -> ComplexMatrix {
    product_of_pulses(seq.pulses())
}

/// Column-sweep two-level decomposition: returns ordered factors whose
/// product (in list order) equals `u`. For an n x n unitary at most
/// n(n-1)/2 factors are produced; factors within 1e-14 of the identity are
/// dropped.
pub fn two_level_decompose(u: &ComplexMatrix) -> Result<Vec<TwoLevelFactor>> {
    let dev = u.unitarity_deviation();
    if dev > tol::STRUCTURAL {
        return Err(Error::NotUnitary(dev));
    }
    let n = u.dim();
    let mut work = u.clone();
    let mut factors: Vec<TwoLevelFactor> = Vec::new();

    // eliminate below-diagonal entries of columns 0 .. n-3; each elimination
    // left-multiplies `work` and records the inverse factor
    for col in 0..n.saturating_sub(2) {
        for row in (col + 1)..n {
            let b = work.get(row, col);
            if b.norm() <= SKIP_IDENTITY_TOL {
                continue;
            }
            let a = work.get(col, col);
            let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let elim = ComplexMatrix::from_rows(&[
                vec![a.conj() / norm, b.conj() / norm],
                vec![b / norm, -a / norm],
            ])?;
            work = embed_block((col, row), &elim, n).mul(&work)?;
            factors.push(TwoLevelFactor {
                pair: (col, row),
                block: elim.dagger(),
            });
        }
    }

    // what is left is unitary on the trailing 2x2 block
    let (p, q) = (n - 2, n - 1);
    let block = ComplexMatrix::from_rows(&[
        vec![work.get(p, p), work.get(p, q)],
        vec![work.get(q, p), work.get(q, q)],
    ])?;
    let id2 = ComplexMatrix::identity(2)?;
    if block.max_abs_diff(&id2)? > SKIP_IDENTITY_TOL {
        factors.push(TwoLevelFactor {
            pair: (p, q),
            block,
        });
    }
    Ok(factors)
}

/// Solves theta and phi for a block of the R(theta, phi) family and wraps it
/// as a pulse; blocks outside the family within 1e-10 are rejected.
pub fn pulse_from_block(
    block: &ComplexMatrix,
    pair: (usize, usize),
    rabi: f64,
) -> Result<RotationPulse> {
    if block.dim() != 2 {
        return Err(Error::DimensionMismatch(block.dim(), 2));
    }
    let c = block.get(0, 0).re;
    let s = block.get(0, 1).norm();
    let (theta, phi) = if s < 1e-12 {
        if c >= 0.0 {
            (0.0, 0.0)
        } else {
            (2.0 * std::f64::consts::PI, 0.0)
        }
    } else {
        let theta = 2.0 * s.atan2(c);
        // R_10 = -i sin(theta/2) e^{i phi}
        let mut phi = (C64::new(0.0, 1.0) * block.get(1, 0)).arg();
        if phi <= -std::f64::consts::PI + 1e-15 {
            phi = std::f64::consts::PI;
        }
        (theta, phi)
    };
    let residual = rotation_block(theta, phi).max_abs_diff(block)?;
    if residual > R_FORM_TOL {
        return Err(Error::NotRepresentable(residual));
    }
    RotationPulse::new(pair, theta, phi, rabi)
}

fn is_r_form(block: &ComplexMatrix) -> bool {
    block.get(0, 0).im.abs() <= R_FORM_TOL
        && (block.get(0, 0) - block.get(1, 1)).norm() <= R_FORM_TOL
        && (block.get(1, 0) + block.get(0, 1).conj()).norm() <= R_FORM_TOL
}

fn is_reflection(block: &ComplexMatrix) -> bool {
    block.get(0, 0).im.abs() <= R_FORM_TOL
        && (block.get(0, 0) + block.get(1, 1)).norm() <= R_FORM_TOL
        && (block.get(1, 0) - block.get(0, 1).conj()).norm() <= R_FORM_TOL
}

// fixed order in which pairs are tried when covering a sign pattern
const SIGN_PAIR_ORDER: [(usize, usize); 4] = [(0, 1), (0, 2), (1, 3), (2, 3)];

/// Emits theta = 2pi pulses (each -I on its pair) realizing the diagonal
/// sign matrix that flips exactly the indices in `pattern`. Odd patterns
/// borrow the auxiliary level: the returned flag says a flip on level 3 is
/// still pending to the right of the emitted pulses.
fn emit_sign_pattern(
    mut pattern: [bool; 4],
    rabi: f64,
    graph: &CouplingGraph,
) -> Result<(Vec<RotationPulse>, bool)> {
    let parity_odd = pattern.iter().filter(|&&b| b).count() % 2 == 1;
    if parity_odd {
        pattern[3] = !pattern[3];
    }
    let mut pulses = Vec::new();
    for _guard in 0..8 {
        if pattern.iter().all(|&b| !b) {
            break;
        }
        // prefer a pair covering two pending flips at once
        let covering = SIGN_PAIR_ORDER
            .iter()
            .find(|&&(a, b)| pattern[a] && pattern[b]);
        let pair = match covering {
            Some(&p) => p,
            None => {
                let lowest = (0..4).find(|&i| pattern[i]).expect("pattern nonempty");
                *SIGN_PAIR_ORDER
                    .iter()
                    .find(|&&(a, b)| a == lowest || b == lowest)
                    .expect("every level is in some pair")
            }
        };
        if !graph.is_allowed(pair) {
            return Err(Error::LegalizationFailure {
                pair_lo: pair.0,
                pair_hi: pair.1,
                reason: "sign-fix pulse falls on a forbidden coupling".into(),
            });
        }
        pulses.push(RotationPulse::new(
            pair,
            2.0 * std::f64::consts::PI,
            0.0,
            rabi,
        )?);
        pattern[pair.0] = !pattern[pair.0];
        pattern[pair.1] = !pattern[pair.1];
    }
    if pattern.iter().any(|&b| b) {
        return Err(Error::LegalizationFailure {
            pair_lo: 0,
            pair_hi: 0,
            reason: "sign pattern not coverable by allowed pairs".into(),
        });
    }
    Ok((pulses, parity_odd))
}

/// Rewrites two-level factors over the qutrit into R-form pulses on allowed
/// couplings, preserving the exact product. The D <-> D factor is conjugated
/// through R(pi, +-pi/2) permutations on (0,1); reflections split into a
/// sign flip (borrowing the auxiliary level) and a rotation.
pub fn legalize(
    factors: &[TwoLevelFactor],
    graph: &CouplingGraph,
    target: &ComplexMatrix,
    rabi: f64,
) -> Result<PulseSequence> {
    // route the undrivable pair through a permutation on (0,1)
    let mut routed: Vec<TwoLevelFactor> = Vec::with_capacity(factors.len() + 2);
    for f in factors {
        if f.pair.0 >= 3 || f.pair.1 >= 3 || f.pair.0 >= f.pair.1 {
            return Err(Error::LegalizationFailure {
                pair_lo: f.pair.0,
                pair_hi: f.pair.1,
                reason: "input factors must live on ordered qutrit pairs".into(),
            });
        }
        if f.pair == (1, 2) {
            routed.push(TwoLevelFactor {
                pair: (0, 1),
                block: rotation_block(std::f64::consts::PI, std::f64::consts::PI / 2.0),
            });
            routed.push(TwoLevelFactor {
                pair: (0, 2),
                block: f.block.clone(),
            });
            routed.push(TwoLevelFactor {
                pair: (0, 1),
                block: rotation_block(std::f64::consts::PI, -std::f64::consts::PI / 2.0),
            });
        } else {
            routed.push(f.clone());
        }
    }

    let mut pulses: Vec<RotationPulse> = Vec::new();
    // diagonal +-1 matrix pending to the right of everything emitted so far
    let mut carry = [false; 4];
    let id2 = ComplexMatrix::identity(2)?;

    for f in &routed {
        let (p, q) = f.pair;
        // absorb the carry's flips on this pair into the block
        let mut block = f.block.clone();
        if carry[p] {
            block.set(0, 0, -block.get(0, 0));
            block.set(0, 1, -block.get(0, 1));
        }
        if carry[q] {
            block.set(1, 0, -block.get(1, 0));
            block.set(1, 1, -block.get(1, 1));
        }
        let mut rest = carry;
        rest[p] = false;
        rest[q] = false;

        if block.max_abs_diff(&id2)? <= SKIP_IDENTITY_TOL {
            carry = rest;
        } else if is_r_form(&block) {
            if !graph.is_allowed(f.pair) {
                return Err(Error::LegalizationFailure {
                    pair_lo: p,
                    pair_hi: q,
                    reason: "rotation falls on a forbidden coupling".into(),
                });
            }
            let pulse = pulse_from_block(&block, f.pair, rabi)?;
            if pulse.theta > 0.0 {
                pulses.push(pulse);
            }
            carry = rest;
        } else if is_reflection(&block) {
            // block = diag(1,-1) * rotation; the single flip on q merges with
            // the pending carry (which commutes leftward past the rotation)
            let mut rotation = block.clone();
            rotation.set(1, 0, -rotation.get(1, 0));
            rotation.set(1, 1, -rotation.get(1, 1));
            let mut pattern = rest;
            pattern[q] = !pattern[q];
            let (sign_pulses, flip3_pending) = emit_sign_pattern(pattern, rabi, graph)?;
            pulses.extend(sign_pulses);
            if !graph.is_allowed(f.pair) {
                return Err(Error::LegalizationFailure {
                    pair_lo: p,
                    pair_hi: q,
                    reason: "rotation falls on a forbidden coupling".into(),
                });
            }
            let pulse = pulse_from_block(&rotation, f.pair, rabi)?;
            if pulse.theta > 0.0 {
                pulses.push(pulse);
            }
            carry = [false; 4];
            carry[3] = flip3_pending;
        } else {
            return Err(Error::LegalizationFailure {
                pair_lo: p,
                pair_hi: q,
                reason: format!(
                    "block is neither a rotation nor a real reflection: \
                     [[{}, {}], [{}, {}]]",
                    block.get(0, 0),
                    block.get(0, 1),
                    block.get(1, 0),
                    block.get(1, 1)
                ),
            });
        }
    }

    if carry.iter().filter(|&&b| b).count() % 2 == 1 {
        return Err(Error::LegalizationFailure {
            pair_lo: 0,
            pair_hi: 0,
            reason: "residual sign pattern has odd parity (target determinant is not +1)".into(),
        });
    }
    let (tail, pending) = emit_sign_pattern(carry, rabi, graph)?;
    debug_assert!(!pending);
    pulses.extend(tail);

    PulseSequence::new(pulses, rabi, target.clone())
}

/// The evolution unitary at half the precession period, and its fixed
/// three-pulse program (two sign flips around a permutation on (0,2)).
fn half_period_flip() -> ComplexMatrix {
    let c = |re: f64| C64::new(re, 0.0);
    ComplexMatrix::from_rows(&[
        vec![c(0.0), c(0.0), c(-1.0)],
        vec![c(0.0), c(-1.0), c(0.0)],
        vec![c(-1.0), c(0.0), c(0.0)],
    ])
    .expect("3x3 is valid")
}

fn half_period_sequence(rabi: f64) -> Result<PulseSequence> {
    let full_turn = 2.0 * std::f64::consts::PI;
    let pulses = vec![
        RotationPulse::new((2, 3), full_turn, 0.0, rabi)?,
        RotationPulse::new(
            (0, 2),
            std::f64::consts::PI,
            std::f64::consts::PI / 2.0,
            rabi,
        )?,
        RotationPulse::new((1, 3), full_turn, 0.0, rabi)?,
    ];
    PulseSequence::new(pulses, rabi, half_period_flip())
}

/// The precession unitary `exp(-i epsilon Jx)` for the three-level system,
/// evaluated from its half-angle closed form. Unlike the generic matrix
/// exponential this loses no relative precision near epsilon = pi, which the
/// compiler's elimination steps are sensitive to.
pub fn precession_unitary(epsilon: f64) -> ComplexMatrix {
    let ch = (epsilon / 2.0).cos();
    let sh = (epsilon / 2.0).sin();
    let c2 = C64::new(ch * ch, 0.0); // (1 + cos eps) / 2
    let s2 = C64::new(sh * sh, 0.0); // (1 - cos eps) / 2
    let center = C64::new(ch * ch - sh * sh, 0.0); // cos eps
    let off = C64::new(0.0, -2.0 * sh * ch / 2f64.sqrt()); // -i sin(eps)/sqrt(2)
    ComplexMatrix::from_rows(&[
        vec![c2, off, -s2],
        vec![off, center, off],
        vec![-s2, off, c2],
    ])
    .expect("3x3 is valid")
}

/// Compiles a 3x3 unitary into a legal pulse sequence. The identity yields
/// an empty program; the half-period flip yields its fixed three-pulse
/// program; everything else goes through decomposition + legalization and
/// reconstructs exactly (within 1e-10).
pub fn compile(target: &ComplexMatrix, rabi: f64) -> Result<PulseSequence> {
    if target.dim() != 3 {
        return Err(Error::DimensionMismatch(target.dim(), 3));
    }
    let dev = target.unitarity_deviation();
    if dev > tol::STRUCTURAL {
        return Err(Error::NotUnitary(dev));
    }
    let id = ComplexMatrix::identity(3)?;
    if target.max_abs_diff(&id)? <= tol::STRUCTURAL {
        return PulseSequence::new(Vec::new(), rabi, target.clone());
    }
    if target.max_abs_diff(&half_period_flip())? <= tol::COMPOSED {
        let seq = half_period_sequence(rabi)?;
        return PulseSequence::new(seq.pulses().to_vec(), rabi, target.clone());
    }
    let factors = two_level_decompose(target)?;
    legalize(&factors, &CouplingGraph::default(), target, rabi)
}

/// Compiles the precession unitary at angle `epsilon`. Angles within the
/// removable-singularity window |cos(eps/2)| < 1e-6 snap to the half-period
/// flip and its exact three-pulse program.
pub fn compile_epsilon(epsilon: f64, rabi: f64) -> Result<PulseSequence> {
    if !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be finite, got {epsilon}"
        )));
    }
    if (epsilon / 2.0).cos().abs() < FLIP_BRANCH_COS_TOL {
        return half_period_sequence(rabi);
    }
    compile(&precession_unitary(epsilon), rabi)
}

/// SHA-256 over the canonical row-major entry dump of a target matrix.
pub fn target_checksum(u3: &ComplexMatrix) -> String {
    let mut parts: Vec<String> = Vec::with_capacity(2 * u3.dim() * u3.dim());
    for r in 0..u3.dim() {
        for c in 0..u3.dim() {
            let z = u3.get(r, c);
            parts.push(format!("{:.15e}", z.re));
            parts.push(format!("{:.15e}", z.im));
        }
    }
    let digest = Sha256::digest(parts.join(" ").as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Renders the line-oriented pulse file for a sequence.
pub fn write_pulse_file(seq: &PulseSequence) -> String {
    let mut out = format!(
        "# rabi_rad_per_s={:.16e} target_sha256={}\n",
        seq.rabi_frequency(),
        target_checksum(seq.target())
    );
    for p in seq.pulses() {
        out.push_str(&format!(
            "{} {} {:.16e} {:.16e} {:.16e}\n",
            p.pair.0, p.pair.1, p.theta, p.phi, p.duration
        ));
    }
    out
}

/// A parsed pulse file: the header fields plus the pulse list.
#[derive(Debug, Clone)]
pub struct PulseFile {
    pub rabi_rad_per_s: f64,
    pub target_sha256: String,
    pub pulses: Vec<RotationPulse>,
}

impl PulseFile {
    /// Ordered product of the embedded pulses.
    pub fn product(&self) -> ComplexMatrix {
        product_of_pulses(&self.pulses)
    }
}

/// Parses the text produced by [`write_pulse_file`].
pub fn parse_pulse_file(text: &str) -> Result<PulseFile> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty pulse file".into()))?;
    let header = header
        .strip_prefix("# ")
        .ok_or_else(|| Error::Parse("missing '# ' header line".into()))?;
    let mut rabi = None;
    let mut checksum = None;
    for field in header.split_whitespace() {
        if let Some(v) = field.strip_prefix("rabi_rad_per_s=") {
            rabi = Some(
                v.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad rabi value: {e}")))?,
            );
        } else if let Some(v) = field.strip_prefix("target_sha256=") {
            checksum = Some(v.to_string());
        }
    }
    let rabi = rabi.ok_or_else(|| Error::Parse("header missing rabi_rad_per_s".into()))?;
    let checksum = checksum.ok_or_else(|| Error::Parse("header missing target_sha256".into()))?;

    let mut pulses = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!(
                "pulse line {} has {} fields, expected 5",
                idx + 2,
                fields.len()
            )));
        }
        let lo: usize = fields[0]
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", idx + 2)))?;
        let hi: usize = fields[1]
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", idx + 2)))?;
        let theta: f64 = fields[2]
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", idx + 2)))?;
        let phi: f64 = fields[3]
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", idx + 2)))?;
        let duration: f64 = fields[4]
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", idx + 2)))?;
        let pulse = RotationPulse::new((lo, hi), theta, phi, rabi)?;
        if (pulse.duration - duration).abs() > 1e-9 * duration.abs().max(1e-9) {
            return Err(Error::Parse(format!(
                "line {}: duration {} inconsistent with theta/rabi = {}",
                idx + 2,
                duration,
                pulse.duration
            )));
        }
        pulses.push(pulse);
    }
    Ok(PulseFile {
        rabi_rad_per_s: rabi,
        target_sha256: checksum,
        pulses,
    })
}
