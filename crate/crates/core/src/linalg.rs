//! Dense complex linear algebra for small fixed dimensions.
//!
//! Everything here targets the 2x2 .. 4x4 matrices that appear in the
//! three-level precession problem: row-major storage, a cyclic Jacobi
//! eigensolver for Hermitian matrices, and an exact matrix exponential
//! `exp(-i s H)` built from the eigendecomposition. No attempt is made to
//! scale past a handful of dimensions.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tol;

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Zero matrix of dimension `dim` (must be >= 2).
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for k in 0..dim {
            m.data[k * dim + k] = C64::new(1.0, 0.0);
        }
        Ok(m)
    }

    /// Build from nested rows; all rows must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch(row.len(), dim));
            }
            data.extend_from_slice(row);
        }
        let m = Self { dim, data };
        if !m.is_finite() {
            return Err(Error::NonFiniteEntries);
        }
        Ok(m)
    }

    /// Build entry-by-entry from a closure over (row, col).
    pub fn from_fn<F: FnMut(usize, usize) -> C64>(dim: usize, mut f: F) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for r in 0..dim {
            for c in 0..dim {
                m.data[r * dim + c] = f(r, c);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let n = self.dim;
        let mut out = Self::zeros(n)?;
        for r in 0..n {
            for c in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.data[r * n + k] * other.data[k * n + c];
                }
                out.data[r * n + c] = acc;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        Ok(out)
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut out = self.clone();
        for z in &mut out.data {
            *z *= factor;
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut out = self.clone();
        for r in 0..n {
            for c in 0..n {
                out.data[r * n + c] = self.data[c * n + r].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|k| self.data[k * self.dim + k]).sum()
    }

    /// Largest entrywise |a - b|.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Frobenius norm of a - b.
    pub fn frobenius_distance(&self, other: &Self) -> Result<f64> {
        self.check_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Largest entrywise |M - M^dagger|; zero for Hermitian matrices.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                let d = (self.data[r * n + c] - self.data[c * n + r].conj()).norm();
                dev = dev.max(d);
            }
        }
        dev
    }

    /// Largest entrywise |U^dagger U - I|; zero for unitary matrices.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim;
        let gram = self.dagger().mul(self).expect("same dims");
        let mut dev: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let expect = if r == c { 1.0 } else { 0.0 };
                dev = dev.max((gram.data[r * n + c] - C64::new(expect, 0.0)).norm());
            }
        }
        dev
    }

    /// Applies the matrix to a column vector.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, v.len()));
        }
        let n = self.dim;
        let out = (0..n)
            .map(|r| {
                v.iter()
                    .enumerate()
                    .map(|(c, x)| self.data[r * n + c] * x)
                    .sum()
            })
            .collect();
        Ok(out)
    }

    /// U * self * U^dagger.
    pub fn conjugate_by(&self, u: &Self) -> Result<Self> {
        u.mul(self)?.mul(&u.dagger())
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues ascend; `vectors` holds the matching eigenvectors as columns,
/// each phase-fixed so its first component of modulus > 1e-8 is real positive.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// Rebuilds `exp(-i * scale * H)` from this decomposition of H.
    pub fn unitary_exp(&self, scale: f64) -> ComplexMatrix {
        let n = self.values.len();
        let phases: Vec<C64> = self
            .values
            .iter()
            .map(|&lambda| C64::from_polar(1.0, -scale * lambda))
            .collect();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, |r, c| {
            (0..n)
                .map(|k| v.get(r, k) * phases[k] * v.get(c, k).conj())
                .sum()
        })
        .expect("dimension already validated")
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation phase-aligns the pivot entry and then applies the classic
/// symmetric Jacobi rotation, which is unconditionally stable at these sizes.
pub fn eigh(matrix: &ComplexMatrix) -> Result<HermitianEigen> {
    let dev = matrix.hermiticity_deviation();
    if dev > tol::STRUCTURAL {
        return Err(Error::NotHermitian(dev));
    }
    let n = matrix.dim;
    let mut a = matrix.clone();
    // symmetrize away the sub-tolerance residue so the iteration sees an
    // exactly Hermitian matrix
    for r in 0..n {
        a.data[r * n + r] = C64::new(a.data[r * n + r].re, 0.0);
        for c in (r + 1)..n {
            let m = (a.data[r * n + c] + a.data[c * n + r].conj()) * 0.5;
            a.data[r * n + c] = m;
            a.data[c * n + r] = m.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n)?;
    let scale: f64 = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);

    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|r| ((r + 1)..n).map(move |c| (r, c)))
            .map(|(r, c)| a.data[r * n + c].norm_sqr())
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.data[p * n + q];
                let r = apq.norm();
                if r <= 1e-18 * scale {
                    continue;
                }
                let phase = apq / r; // e^{i arg(apq)}
                let app = a.data[p * n + p].re;
                let aqq = a.data[q * n + q].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // two-level unitary Q with Q[p][p]=c, Q[p][q]=s,
                // Q[q][p]=-s*conj(phase), Q[q][q]=c*conj(phase)
                let qpp = C64::new(c, 0.0);
                let qpq = C64::new(s, 0.0);
                let qqp = -s * phase.conj();
                let qqq = c * phase.conj();
                // columns: A <- A Q, V <- V Q
                for k in 0..n {
                    let akp = a.data[k * n + p];
                    let akq = a.data[k * n + q];
                    a.data[k * n + p] = akp * qpp + akq * qqp;
                    a.data[k * n + q] = akp * qpq + akq * qqq;
                    let vkp = v.data[k * n + p];
                    let vkq = v.data[k * n + q];
                    v.data[k * n + p] = vkp * qpp + vkq * qqp;
                    v.data[k * n + q] = vkp * qpq + vkq * qqq;
                }
                // rows: A <- Q^dagger A
                for k in 0..n {
                    let apk = a.data[p * n + k];
                    let aqk = a.data[q * n + k];
                    a.data[p * n + k] = qpp.conj() * apk + qqp.conj() * aqk;
                    a.data[q * n + k] = qpq.conj() * apk + qqq.conj() * aqk;
                }
                a.data[p * n + q] = C64::new(0.0, 0.0);
                a.data[q * n + p] = C64::new(0.0, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|k| a.data[k * n + k].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).expect("finite eigenvalues"));

    let values: Vec<f64> = order.iter().map(|&k| diag[k]).collect();
    let mut vectors = ComplexMatrix::zeros(n)?;
    for (col, &src) in order.iter().enumerate() {
        // phase convention: first component of modulus > 1e-8 made real positive
        let pivot = (0..n)
            .map(|r| v.data[r * n + src])
            .find(|z| z.norm() > 1e-8)
            .expect("unit eigenvector has a component above 1e-8");
        let rot = pivot.conj() / pivot.norm();
        for r in 0..n {
            vectors.data[r * n + col] = v.data[r * n + src] * rot;
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// `exp(-i * scale * h)` for Hermitian `h`, exact up to the eigensolve.
pub fn expm_hermitian(h: &ComplexMatrix, scale: f64) -> Result<ComplexMatrix> {
    Ok(eigh(h)?.unitary_exp(scale))
}

/// Spin x-component operator for a (2j+1)-level system.
#[derive(Debug, Clone)]
pub struct AngularMomentumOp {
    pub dim: usize,
    pub matrix: ComplexMatrix,
}

/// Standard spin-j Jx from ladder operators: real symmetric, zero diagonal,
/// with eigenvalues {-j, -j+1, ..., +j} (hbar = 1).
pub fn jx(dim: usize) -> Result<AngularMomentumOp> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut matrix = ComplexMatrix::zeros(dim)?;
    for k in 0..dim - 1 {
        // <k|Jx|k+1> = sqrt((k+1)(dim-1-k)) / 2
        let value = (((k + 1) * (dim - 1 - k)) as f64).sqrt() / 2.0;
        matrix.set(k, k + 1, C64::new(value, 0.0));
        matrix.set(k + 1, k, C64::new(value, 0.0));
    }
    Ok(AngularMomentumOp { dim, matrix })
}

/// Density operator: Hermitian, positive semidefinite, unit trace when
/// normalized. Unnormalized post-measurement branches carry their outcome
/// probability as the trace and are flagged with `branch`.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    branch: bool,
}

impl DensityOperator {
    /// Normalized state: validates hermiticity, unit trace, and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::validate(&matrix)?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol::STRUCTURAL || tr.im.abs() > tol::STRUCTURAL {
            return Err(Error::NotNormalized(tr.re));
        }
        Ok(Self {
            matrix,
            branch: false,
        })
    }

    /// Unnormalized measurement branch; trace equals the branch probability.
    pub fn new_branch(matrix: ComplexMatrix) -> Result<Self> {
        Self::validate(&matrix)?;
        let tr = matrix.trace().re;
        if !(-tol::STRUCTURAL..=1.0 + tol::STRUCTURAL).contains(&tr) {
            return Err(Error::InvalidDensityOperator(format!(
                "branch trace {tr} outside [0, 1]"
            )));
        }
        Ok(Self {
            matrix,
            branch: true,
        })
    }

    fn validate(matrix: &ComplexMatrix) -> Result<()> {
        if !matrix.is_finite() {
            return Err(Error::NonFiniteEntries);
        }
        let dev = matrix.hermiticity_deviation();
        if dev > tol::STRUCTURAL {
            return Err(Error::NotHermitian(dev));
        }
        let eig = eigh(matrix)?;
        if let Some(&lambda) = eig.values.first() {
            if lambda < -tol::STRUCTURAL {
                return Err(Error::InvalidDensityOperator(format!(
                    "negative eigenvalue {lambda:e}"
                )));
            }
        }
        Ok(())
    }

    /// Pure computational-basis state |index><index|.
    pub fn pure(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for dim {dim}"
            )));
        }
        let mut matrix = ComplexMatrix::zeros(dim)?;
        matrix.set(index, index, C64::new(1.0, 0.0));
        Self::new(matrix)
    }

    /// |psi><psi| for a normalized state vector.
    pub fn from_state_vector(psi: &[C64]) -> Result<Self> {
        let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(norm_sqr));
        }
        let dim = psi.len();
        let matrix = ComplexMatrix::from_fn(dim, |r, c| psi[r] * psi[c].conj())?;
        Self::new(matrix)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn is_branch(&self) -> bool {
        self.branch
    }

    pub fn trace_real(&self) -> f64 {
        self.matrix.trace().re
    }

    /// U rho U^dagger, keeping the branch flag.
    pub fn evolved(&self, u: &ComplexMatrix) -> Result<Self> {
        let matrix = self.matrix.conjugate_by(u)?;
        Ok(Self {
            matrix,
            branch: self.branch,
        })
    }
}
