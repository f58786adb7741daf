//! Monte Carlo emulation of the experiment, shot by shot.
//!
//! Each shot prepares the (possibly imperfect) initial state, evolves it
//! through the pi interval and the tau intervals of the chosen measurement
//! pair, samples the two projective measurements under the configured update
//! rule, and tallies the recorded (Q_i, Q_j) outcome. Noise enters three
//! ways: imperfect preparation mixes population into the metastable levels,
//! every evolution block is followed by a qutrit depolarizing channel of
//! strength `1 - op_fidelity`, and each binary shelving readout flips with
//! probability `readout_flip`.
//!
//! The stochastic part of a run is driven by a counter-based generator keyed
//! by (seed, tau index, pair index, shot index), so tallies are bit-for-bit
//! reproducible no matter how the shot loop is parallelized. The state
//! algebra that does not depend on the drawn outcomes (everything up to the
//! first measurement, and the per-branch evolution to the second) is hoisted
//! out of the shot loop; shots then only sample outcomes and readout flips.
//! Noiseless runs propagate pure states, noisy runs propagate density
//! matrices.
//!
//! Draw order within one shot: first-measurement branch, its readout flips
//! (one event under the eigenspace rule, two shelving events under the
//! rank-1 rule), second-measurement branch, its readout flips. Flip draws
//! are skipped entirely when `readout_flip` is zero.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::PrecessionModel;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::measurement::{k3_exact, UpdateRule};

/// Default number of shots per correlator pair.
pub const DEFAULT_SHOTS: u64 = 10_000;

/// Parametric error budget of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Probability that preparation leaves the ion in the ground level; the
    /// remainder is split evenly over the two metastable levels.
    pub init_fidelity: f64,
    /// Fidelity of one evolution block; each block is followed by a qutrit
    /// depolarizing channel of strength `1 - op_fidelity`.
    pub op_fidelity: f64,
    /// Per-shelving-event probability of recording the wrong binary outcome.
    pub readout_flip: f64,
}

impl NoiseModel {
    pub fn new(init_fidelity: f64, op_fidelity: f64, readout_flip: f64) -> Result<Self> {
        if !(init_fidelity > 0.0 && init_fidelity <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "init_fidelity must be in (0, 1], got {init_fidelity}"
            )));
        }
        if !(op_fidelity > 0.0 && op_fidelity <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "op_fidelity must be in (0, 1], got {op_fidelity}"
            )));
        }
        if !(0.0..0.5).contains(&readout_flip) {
            return Err(Error::InvalidParameter(format!(
                "readout_flip must be in [0, 0.5), got {readout_flip}"
            )));
        }
        Ok(Self {
            init_fidelity,
            op_fidelity,
            readout_flip,
        })
    }

    /// No noise at all.
    pub fn noiseless() -> Self {
        Self {
            init_fidelity: 1.0,
            op_fidelity: 1.0,
            readout_flip: 0.0,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.init_fidelity == 1.0 && self.op_fidelity == 1.0 && self.readout_flip == 0.0
    }

    // pure-state trajectories are valid as long as the state stays rank 1
    fn keeps_states_pure(&self) -> bool {
        self.init_fidelity == 1.0 && self.op_fidelity == 1.0
    }
}

impl Default for NoiseModel {
    /// The measured error budget: 99.4% preparation, 98% per evolution
    /// block, ideal readout.
    fn default() -> Self {
        Self {
            init_fidelity: 0.994,
            op_fidelity: 0.98,
            readout_flip: 0.0,
        }
    }
}

/// Which two of the three moments a run measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasurementPair {
    T1T2,
    T2T3,
    T1T3,
}

impl MeasurementPair {
    pub const ALL: [MeasurementPair; 3] =
        [MeasurementPair::T1T2, MeasurementPair::T2T3, MeasurementPair::T1T3];

    /// Position in the RNG key stream.
    pub fn index(&self) -> u64 {
        match self {
            MeasurementPair::T1T2 => 0,
            MeasurementPair::T2T3 => 1,
            MeasurementPair::T1T3 => 2,
        }
    }
}

/// Full description of a Monte Carlo run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub rule: UpdateRule,
    /// Inter-measurement angles Omega * tau, one sweep point each.
    pub tau_angles: Vec<f64>,
    /// Shots per correlator pair.
    pub shots: u64,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(
        rule: UpdateRule,
        tau_angles: Vec<f64>,
        shots: u64,
        noise: NoiseModel,
        seed: u64,
    ) -> Result<Self> {
        if tau_angles.is_empty() {
            return Err(Error::InvalidParameter("tau_angles must be nonempty".into()));
        }
        if tau_angles.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("tau_angles must be finite".into()));
        }
        if shots == 0 {
            return Err(Error::InvalidParameter("shots must be at least 1".into()));
        }
        Ok(Self {
            rule,
            tau_angles,
            shots,
            noise,
            seed,
        })
    }
}

/// Shot counts over the four joint outcomes (Q_i, Q_j).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JointTally {
    // counts[i][j]: i, j = 0 for Q = -1, 1 for Q = +1
    counts: [[u64; 2]; 2],
    shots: u64,
}

fn q_index(q: i8) -> usize {
    usize::from(q > 0)
}

impl JointTally {
    pub fn record(&mut self, q_i: i8, q_j: i8) {
        self.counts[q_index(q_i)][q_index(q_j)] += 1;
        self.shots += 1;
    }

    pub fn count(&self, q_i: i8, q_j: i8) -> u64 {
        self.counts[q_index(q_i)][q_index(q_j)]
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn merge(mut self, other: JointTally) -> JointTally {
        for i in 0..2 {
            for j in 0..2 {
                self.counts[i][j] += other.counts[i][j];
            }
        }
        self.shots += other.shots;
        self
    }
}

// ---------------------------------------------------------------------------
// fixed-size kernels for the shot loop

type V3 = [C64; 3];
type M3 = [[C64; 3]; 3];

fn mat3_from(m: &ComplexMatrix) -> M3 {
    let mut out = [[C64::new(0.0, 0.0); 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = m.get(r, c);
        }
    }
    out
}

fn matvec(m: &M3, v: &V3) -> V3 {
    let mut out = [C64::new(0.0, 0.0); 3];
    for r in 0..3 {
        out[r] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2];
    }
    out
}

/// U rho U^dagger.
fn conj_apply(u: &M3, rho: &M3) -> M3 {
    let mut tmp = [[C64::new(0.0, 0.0); 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..3 {
                acc += u[r][k] * rho[k][c];
            }
            tmp[r][c] = acc;
        }
    }
    let mut out = [[C64::new(0.0, 0.0); 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..3 {
                acc += tmp[r][k] * u[c][k].conj();
            }
            out[r][c] = acc;
        }
    }
    out
}

/// (1 - p) rho + p tr(rho) I/3.
fn depolarize(rho: &M3, p: f64) -> M3 {
    if p == 0.0 {
        return *rho;
    }
    let tr = (rho[0][0] + rho[1][1] + rho[2][2]).re;
    let mix = p * tr / 3.0;
    let mut out = [[C64::new(0.0, 0.0); 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            out[r][c] = rho[r][c] * (1.0 - p);
        }
        out[r][r] += C64::new(mix, 0.0);
    }
    out
}

// ---------------------------------------------------------------------------
// per-run preparation: everything that does not depend on sampled outcomes

// shelving bits of a first-measurement branch: (fluoresced at step I,
// fluoresced at step III after the exchange pulse)
fn branch_bits(rule: UpdateRule, label: usize) -> (bool, bool) {
    match rule {
        UpdateRule::Luders => (label == 0, false),
        UpdateRule::VonNeumann => match label {
            0 => (true, false),
            1 => (false, true),
            _ => (false, false),
        },
    }
}

struct PreparedBranch {
    prob: f64,
    bits: (bool, bool),
    /// Diagonal populations at the second measurement moment.
    p2: [f64; 3],
}

struct PreparedRun {
    rule: UpdateRule,
    flip: f64,
    branches: Vec<PreparedBranch>,
}

fn blocks_for(pair: MeasurementPair, u10: &M3, ut: &M3) -> (Vec<M3>, Vec<M3>) {
    match pair {
        MeasurementPair::T1T2 => (vec![*u10], vec![*ut]),
        MeasurementPair::T2T3 => (vec![*u10, *ut], vec![*ut]),
        MeasurementPair::T1T3 => (vec![*u10], vec![*ut, *ut]),
    }
}

fn prepare_run(config: &ExperimentConfig, pair: MeasurementPair, tau_angle: f64) -> PreparedRun {
    let model = PrecessionModel::qutrit(1.0).expect("fixed valid model");
    let u10 = mat3_from(&model.evolution_operator(std::f64::consts::PI));
    let ut = mat3_from(&model.evolution_operator(tau_angle));
    let (pre, post) = blocks_for(pair, &u10, &ut);
    let noise = &config.noise;

    let branches = if noise.keeps_states_pure() {
        // pure-state trajectories
        let mut psi: V3 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        for b in &pre {
            psi = matvec(b, &psi);
        }
        let collapsed: Vec<(f64, usize, V3)> = match config.rule {
            UpdateRule::Luders => {
                let p_minus = psi[0].norm_sqr();
                let p_plus = psi[1].norm_sqr() + psi[2].norm_sqr();
                let zero = C64::new(0.0, 0.0);
                let minus_state = if p_minus > 0.0 {
                    [psi[0] / p_minus.sqrt(), zero, zero]
                } else {
                    [C64::new(1.0, 0.0), zero, zero]
                };
                let plus_state = if p_plus > 0.0 {
                    [zero, psi[1] / p_plus.sqrt(), psi[2] / p_plus.sqrt()]
                } else {
                    [zero, C64::new(1.0, 0.0), zero]
                };
                vec![(p_minus, 0, minus_state), (p_plus, 1, plus_state)]
            }
            UpdateRule::VonNeumann => (0..3)
                .map(|k| {
                    let mut state = [C64::new(0.0, 0.0); 3];
                    state[k] = C64::new(1.0, 0.0);
                    (psi[k].norm_sqr(), k, state)
                })
                .collect(),
        };
        collapsed
            .into_iter()
            .map(|(prob, label, mut state)| {
                for b in &post {
                    state = matvec(b, &state);
                }
                PreparedRun::pure_branch(config.rule, prob, label, &state)
            })
            .collect()
    } else {
        // density-matrix propagation with the depolarizing channel per block
        let p_dep = 1.0 - noise.op_fidelity;
        let f = noise.init_fidelity;
        let mut rho: M3 = [[C64::new(0.0, 0.0); 3]; 3];
        rho[0][0] = C64::new(f, 0.0);
        rho[1][1] = C64::new((1.0 - f) / 2.0, 0.0);
        rho[2][2] = C64::new((1.0 - f) / 2.0, 0.0);
        for b in &pre {
            rho = depolarize(&conj_apply(b, &rho), p_dep);
        }
        let collapsed: Vec<(f64, usize, M3)> = match config.rule {
            UpdateRule::Luders => {
                let p_minus = rho[0][0].re.max(0.0);
                let p_plus = (rho[1][1].re + rho[2][2].re).max(0.0);
                let mut minus = [[C64::new(0.0, 0.0); 3]; 3];
                minus[0][0] = C64::new(1.0, 0.0);
                // eigenspace projection keeps the 2x2 metastable block
                let mut plus = [[C64::new(0.0, 0.0); 3]; 3];
                if p_plus > 0.0 {
                    for r in 1..3 {
                        for c in 1..3 {
                            plus[r][c] = rho[r][c] / p_plus;
                        }
                    }
                } else {
                    plus[1][1] = C64::new(1.0, 0.0);
                }
                vec![(p_minus, 0, minus), (p_plus, 1, plus)]
            }
            UpdateRule::VonNeumann => (0..3)
                .map(|k| {
                    let mut state = [[C64::new(0.0, 0.0); 3]; 3];
                    state[k][k] = C64::new(1.0, 0.0);
                    // the restoring exchange pulse costs one more noisy block
                    (rho[k][k].re.max(0.0), k, depolarize(&state, p_dep))
                })
                .collect(),
        };
        collapsed
            .into_iter()
            .map(|(prob, label, mut state)| {
                for b in &post {
                    state = depolarize(&conj_apply(b, &state), p_dep);
                }
                let p2 = [
                    state[0][0].re.max(0.0),
                    state[1][1].re.max(0.0),
                    state[2][2].re.max(0.0),
                ];
                PreparedBranch {
                    prob,
                    bits: branch_bits(config.rule, label),
                    p2,
                }
            })
            .collect()
    };

    PreparedRun {
        rule: config.rule,
        flip: noise.readout_flip,
        branches,
    }
}

impl PreparedRun {
    fn pure_branch(rule: UpdateRule, prob: f64, label: usize, state: &V3) -> PreparedBranch {
        PreparedBranch {
            prob,
            bits: branch_bits(rule, label),
            p2: [
                state[0].norm_sqr(),
                state[1].norm_sqr(),
                state[2].norm_sqr(),
            ],
        }
    }

    /// Exact joint distribution over the recorded (Q_i, Q_j), flips included.
    #[cfg(test)]
    fn joint_probabilities(&self) -> [[f64; 2]; 2] {
        let f = self.flip;
        let mut out = [[0.0f64; 2]; 2];
        for b in &self.branches {
            let p1_minus_rec = if b.bits.0 { 1.0 - f } else { f };
            let p2_sum: f64 = b.p2.iter().sum();
            let p2_minus_true = match self.rule {
                UpdateRule::Luders | UpdateRule::VonNeumann => b.p2[0],
            };
            let p2_minus_rec = if p2_sum > 0.0 {
                (p2_minus_true * (1.0 - f) + (p2_sum - p2_minus_true) * f) / p2_sum
            } else {
                0.0
            };
            for (qi, wi) in [(0, p1_minus_rec), (1, 1.0 - p1_minus_rec)] {
                for (qj, wj) in [(0, p2_minus_rec), (1, 1.0 - p2_minus_rec)] {
                    out[qi][qj] += b.prob * wi * wj;
                }
            }
        }
        out
    }
}

/// The counter-based per-shot generator: ChaCha8 keyed directly by the four
/// stream coordinates.
fn shot_rng(seed: u64, tau_index: u64, pair_index: u64, shot_index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tau_index.to_le_bytes());
    key[16..24].copy_from_slice(&pair_index.to_le_bytes());
    key[24..32].copy_from_slice(&shot_index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn recorded_q(rule: UpdateRule, bits: (bool, bool), flip: f64, rng: &mut ChaCha8Rng) -> i8 {
    let mut shelved = bits.0;
    match rule {
        UpdateRule::Luders => {
            if flip > 0.0 && rng.gen::<f64>() < flip {
                shelved = !shelved;
            }
        }
        UpdateRule::VonNeumann => {
            if flip > 0.0 {
                if rng.gen::<f64>() < flip {
                    shelved = !shelved;
                }
                // second shelving event: only refines which metastable level
                // was hit, so its flip never changes the recorded Q
                let _level_bit = bits.1 ^ (rng.gen::<f64>() < flip);
            }
        }
    }
    if shelved {
        -1
    } else {
        1
    }
}

fn sample_shot(prep: &PreparedRun, rng: &mut ChaCha8Rng) -> (i8, i8) {
    let u1: f64 = rng.gen();
    let mut acc = 0.0;
    let mut chosen = prep.branches.len() - 1;
    for (i, b) in prep.branches.iter().enumerate() {
        acc += b.prob;
        if u1 < acc {
            chosen = i;
            break;
        }
    }
    let branch = &prep.branches[chosen];
    let q1 = recorded_q(prep.rule, branch.bits, prep.flip, rng);

    let u2: f64 = rng.gen();
    let total: f64 = branch.p2.iter().sum();
    let q2 = match prep.rule {
        UpdateRule::Luders => {
            let shelved = u2 * total < branch.p2[0];
            recorded_q(prep.rule, (shelved, false), prep.flip, rng)
        }
        UpdateRule::VonNeumann => {
            let draw = u2 * total;
            let level = if draw < branch.p2[0] {
                0
            } else if draw < branch.p2[0] + branch.p2[1] {
                1
            } else {
                2
            };
            recorded_q(prep.rule, branch_bits(prep.rule, level), prep.flip, rng)
        }
    };
    (q1, q2)
}

/// Runs `config.shots` shots of one measurement pair at the sweep point
/// `tau_index` and tallies the recorded joint outcomes. Shots are chunked
/// across threads; the keyed generator makes the result independent of the
/// chunking.
pub fn run_pair(
    config: &ExperimentConfig,
    pair: MeasurementPair,
    tau_index: usize,
) -> Result<JointTally> {
    let tau_angle = *config
        .tau_angles
        .get(tau_index)
        .ok_or_else(|| Error::InvalidParameter(format!("tau index {tau_index} out of range")))?;
    let prep = prepare_run(config, pair, tau_angle);
    let seed = config.seed;
    let tau_idx = tau_index as u64;
    let pair_idx = pair.index();

    const CHUNK: u64 = 16_384;
    let n_chunks = config.shots.div_ceil(CHUNK);
    let tally = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * CHUNK;
            let hi = (lo + CHUNK).min(config.shots);
            let mut local = JointTally::default();
            for shot in lo..hi {
                let mut rng = shot_rng(seed, tau_idx, pair_idx, shot);
                let (q1, q2) = sample_shot(&prep, &mut rng);
                local.record(q1, q2);
            }
            local
        })
        .reduce(JointTally::default, JointTally::merge);
    Ok(tally)
}

/// Correlator estimate `sum q_i q_j N(q_i, q_j) / N` and its multinomial
/// standard error `sqrt((1 - c^2) / N)`.
pub fn estimate(tally: &JointTally) -> Result<(f64, f64)> {
    let n = tally.shots();
    if n < 2 {
        return Err(Error::TooFewShots(n));
    }
    let agree = tally.count(1, 1) + tally.count(-1, -1);
    let disagree = tally.count(1, -1) + tally.count(-1, 1);
    let c = (agree as f64 - disagree as f64) / n as f64;
    let stderr = ((1.0 - c * c).max(0.0) / n as f64).sqrt();
    Ok((c, stderr))
}

/// K3 and its standard error from three independent pair tallies.
pub fn estimate_k3(
    t21: &JointTally,
    t32: &JointTally,
    t31: &JointTally,
) -> Result<(f64, f64)> {
    let (c21, s21) = estimate(t21)?;
    let (c32, s32) = estimate(t32)?;
    let (c31, s31) = estimate(t31)?;
    let k3 = c21 + c32 - c31;
    let stderr = (s21 * s21 + s32 * s32 + s31 * s31).sqrt();
    Ok((k3, stderr))
}

/// Number of standard deviations by which `k3` exceeds `bound`.
pub fn sigma_violation(k3: f64, stderr: f64, bound: f64) -> Result<f64> {
    if !(stderr.is_finite() && stderr > 0.0) {
        return Err(Error::NonPositiveStderr(stderr));
    }
    Ok((k3 - bound) / stderr)
}

/// One sweep point: the three correlators, their errors, and K3.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tau_angle: f64,
    pub c21: f64,
    pub c32: f64,
    pub c31: f64,
    pub c21_stderr: f64,
    pub c32_stderr: f64,
    pub c31_stderr: f64,
    pub k3: f64,
    pub k3_stderr: f64,
    /// Shots per pair; 0 marks an exact (non-sampled) sweep.
    pub shots: u64,
}

/// A full sweep over inter-measurement angles under one update rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub rule: UpdateRule,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// CSV rendering: `tau_angle,c21,c32,c31,k3,stderr,shots,rule`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau_angle,c21,c32,c31,k3,stderr,shots,rule\n");
        for p in &self.points {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
                p.tau_angle,
                p.c21,
                p.c32,
                p.c31,
                p.k3,
                p.k3_stderr,
                p.shots,
                self.rule.name()
            ));
        }
        out
    }

    /// Pretty-printed JSON document mirroring the full result.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Monte Carlo sweep: runs the three pairs at every angle and assembles the
/// estimates. Sweep points are dispatched in parallel; output order follows
/// the angle list.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    let points: Result<Vec<SweepPoint>> = (0..config.tau_angles.len())
        .into_par_iter()
        .map(|ti| {
            let t21 = run_pair(config, MeasurementPair::T1T2, ti)?;
            let t32 = run_pair(config, MeasurementPair::T2T3, ti)?;
            let t31 = run_pair(config, MeasurementPair::T1T3, ti)?;
            let (c21, s21) = estimate(&t21)?;
            let (c32, s32) = estimate(&t32)?;
            let (c31, s31) = estimate(&t31)?;
            let (k3, k3_stderr) = estimate_k3(&t21, &t32, &t31)?;
            Ok(SweepPoint {
                tau_angle: config.tau_angles[ti],
                c21,
                c32,
                c31,
                c21_stderr: s21,
                c32_stderr: s32,
                c31_stderr: s31,
                k3,
                k3_stderr,
                shots: config.shots,
            })
        })
        .collect();
    Ok(SweepResult {
        rule: config.rule,
        points: points?,
    })
}

/// Exact density-matrix sweep (no sampling): stderr and shots are zero.
pub fn exact_sweep(rule: UpdateRule, tau_angles: &[f64]) -> Result<SweepResult> {
    if tau_angles.is_empty() {
        return Err(Error::InvalidParameter("tau_angles must be nonempty".into()));
    }
    let model = PrecessionModel::qutrit(1.0)?;
    let points: Result<Vec<SweepPoint>> = tau_angles
        .par_iter()
        .map(|&tau| {
            let r = k3_exact(&model, tau, rule)?;
            Ok(SweepPoint {
                tau_angle: tau,
                c21: r.c21,
                c32: r.c32,
                c31: r.c31,
                c21_stderr: 0.0,
                c32_stderr: 0.0,
                c31_stderr: 0.0,
                k3: r.k3,
                k3_stderr: 0.0,
                shots: 0,
            })
        })
        .collect();
    Ok(SweepResult {
        rule,
        points: points?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn config(rule: UpdateRule, tau: f64, shots: u64, noise: NoiseModel) -> ExperimentConfig {
        ExperimentConfig::new(rule, vec![tau], shots, noise, 42).unwrap()
    }

    #[test]
    fn noise_model_validation() {
        assert!(NoiseModel::new(0.994, 0.98, 0.0).is_ok());
        assert!(NoiseModel::new(0.0, 0.98, 0.0).is_err());
        assert!(NoiseModel::new(1.0, 1.1, 0.0).is_err());
        assert!(NoiseModel::new(1.0, 1.0, 0.5).is_err());
        assert!(NoiseModel::new(1.0, 1.0, -0.1).is_err());
        assert!(NoiseModel::noiseless().is_noiseless());
        assert!(!NoiseModel::default().is_noiseless());
    }

    #[test]
    fn config_validation() {
        let noise = NoiseModel::noiseless();
        assert!(ExperimentConfig::new(UpdateRule::Luders, vec![], 10, noise, 0).is_err());
        assert!(ExperimentConfig::new(UpdateRule::Luders, vec![0.1], 0, noise, 0).is_err());
        assert!(
            ExperimentConfig::new(UpdateRule::Luders, vec![f64::NAN], 10, noise, 0).is_err()
        );
    }

    #[test]
    fn zero_tau_concentrates_on_plus_plus() {
        // U10 sends the ground level to the uppermost level, so both
        // measurements read +1 with certainty at tau = 0
        for rule in [UpdateRule::Luders, UpdateRule::VonNeumann] {
            let cfg = config(rule, 0.0, 500, NoiseModel::noiseless());
            let tally = run_pair(&cfg, MeasurementPair::T1T2, 0).unwrap();
            assert_eq!(tally.count(1, 1), 500);
            assert_eq!(tally.shots(), 500);
        }
    }

    #[test]
    fn tallies_conserve_shots() {
        let cfg = config(UpdateRule::VonNeumann, 1.3, 2_000, NoiseModel::default());
        for pair in MeasurementPair::ALL {
            let tally = run_pair(&cfg, pair, 0).unwrap();
            let total: u64 = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
                .iter()
                .map(|&(a, b)| tally.count(a, b))
                .sum();
            assert_eq!(total, 2_000);
            assert_eq!(tally.shots(), 2_000);
        }
    }

    #[test]
    fn identical_seeds_reproduce_identical_tallies() {
        let cfg = config(UpdateRule::VonNeumann, 1.6 * PI, 5_000, NoiseModel::default());
        let a = run_pair(&cfg, MeasurementPair::T1T3, 0).unwrap();
        let b = run_pair(&cfg, MeasurementPair::T1T3, 0).unwrap();
        assert_eq!(a, b);

        let mut other = cfg.clone();
        other.seed = 43;
        let c = run_pair(&other, MeasurementPair::T1T3, 0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pure_and_density_paths_agree_when_noise_vanishes() {
        // flip > 0 forces nothing; init/op = 1 selects the pure path, so
        // compare against a density-path run at fidelity 1 via joint tables
        for rule in [UpdateRule::Luders, UpdateRule::VonNeumann] {
            for &tau in &[0.4, PI / 2.0, 1.6 * PI] {
                for pair in MeasurementPair::ALL {
                    let pure_cfg = config(rule, tau, 10, NoiseModel::noiseless());
                    let pure = prepare_run(&pure_cfg, pair, tau).joint_probabilities();
                    let mut forced = pure_cfg.clone();
                    // within f64, 1 - 1e-18 rounds to 1, so raw struct init
                    // is the only way to force the density branch at p = 0
                    forced.noise = NoiseModel {
                        init_fidelity: 1.0,
                        op_fidelity: 1.0 - f64::EPSILON,
                        readout_flip: 0.0,
                    };
                    let dense = prepare_run(&forced, pair, tau).joint_probabilities();
                    for i in 0..2 {
                        for j in 0..2 {
                            assert!(
                                (pure[i][j] - dense[i][j]).abs() <= 1e-10,
                                "rule {rule:?} tau {tau} pair {pair:?}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn estimate_edge_cases() {
        let mut sure = JointTally::default();
        for _ in 0..100 {
            sure.record(1, 1);
        }
        let (c, s) = estimate(&sure).unwrap();
        assert_eq!(c, 1.0);
        assert_eq!(s, 0.0);

        let mut uniform = JointTally::default();
        for _ in 0..2_500 {
            uniform.record(1, 1);
            uniform.record(1, -1);
            uniform.record(-1, 1);
            uniform.record(-1, -1);
        }
        let (c, s) = estimate(&uniform).unwrap();
        assert_eq!(c, 0.0);
        assert!((s - 0.01).abs() <= 1e-12); // N = 10^4, c = 0

        let mut tiny = JointTally::default();
        tiny.record(1, 1);
        assert!(matches!(estimate(&tiny), Err(Error::TooFewShots(1))));
    }

    #[test]
    fn estimate_k3_combines_independent_errors() {
        let mut t = JointTally::default();
        for _ in 0..100 {
            t.record(1, 1);
        }
        let (k3, s) = estimate_k3(&t, &t, &t).unwrap();
        assert_eq!(k3, 1.0);
        assert_eq!(s, 0.0);
    }

    #[test]
    fn sigma_violation_values() {
        let s = sigma_violation(1.739, 0.014, 1.5).unwrap();
        assert!((s - 17.0714285714).abs() <= 1e-6);
        assert_eq!(sigma_violation(1.5, 0.014, 1.5).unwrap(), 0.0);
        assert_eq!(sigma_violation(1.0, 0.01, 1.0).unwrap(), 0.0);
        assert!(matches!(
            sigma_violation(1.7, 0.0, 1.5),
            Err(Error::NonPositiveStderr(_))
        ));
    }

    #[test]
    fn readout_flip_shifts_certain_outcomes() {
        // at tau = 0 all true outcomes are (+1, +1); a 10% flip moves each
        // recorded bit independently
        let noise = NoiseModel::new(1.0, 1.0, 0.10).unwrap();
        let cfg = config(UpdateRule::Luders, 0.0, 40_000, noise);
        let tally = run_pair(&cfg, MeasurementPair::T1T2, 0).unwrap();
        let frac_pp = tally.count(1, 1) as f64 / tally.shots() as f64;
        assert!((frac_pp - 0.81).abs() < 0.01);
        let frac_mm = tally.count(-1, -1) as f64 / tally.shots() as f64;
        assert!((frac_mm - 0.01).abs() < 0.005);
    }

    #[test]
    fn exact_sweep_reproduces_known_points() {
        let r = exact_sweep(UpdateRule::VonNeumann, &[0.0, PI / 2.0, PI]).unwrap();
        assert_eq!(r.points.len(), 3);
        assert!((r.points[0].k3 - 1.0).abs() <= 1e-10);
        assert!((r.points[1].k3 - 1.5).abs() <= 1e-10);
        assert!((r.points[2].k3 + 3.0).abs() <= 1e-10);
        assert_eq!(r.points[0].shots, 0);
        assert_eq!(r.points[0].k3_stderr, 0.0);
    }

    #[test]
    fn csv_and_json_round_trip() {
        let r = exact_sweep(UpdateRule::Luders, &[0.0, 1.0]).unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("tau_angle,c21,c32,c31,k3,stderr,shots,rule\n"));
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.contains(",luders"));

        let parsed = SweepResult::from_json(&r.to_json()).unwrap();
        assert_eq!(parsed.points.len(), 2);
        assert_eq!(parsed.rule, UpdateRule::Luders);
        assert_eq!(parsed.points[1].k3, r.points[1].k3);
    }

    #[test]
    fn sweep_points_satisfy_k3_identity() {
        let cfg = ExperimentConfig::new(
            UpdateRule::VonNeumann,
            vec![0.3, 1.1, 1.6 * PI],
            2_000,
            NoiseModel::default(),
            7,
        )
        .unwrap();
        let sweep = run_sweep(&cfg).unwrap();
        for p in &sweep.points {
            assert!((p.k3 - (p.c21 + p.c32 - p.c31)).abs() <= 1e-12);
            assert!(p.k3_stderr >= 0.0);
        }
    }
}
