//! Dense complex matrices and density matrices over qubit registers.
//!
//! Basis ordering: the global index of an `m`-qubit basis state is
//! `sum(bit_q << (m - 1 - q))`, so qubit 0 is the most significant bit and
//! selects the leading block of the matrix.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Hermiticity and trace tolerance for density matrices.
pub const STATE_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted for a density matrix.
pub const PSD_TOL: f64 = 1e-9;
/// Hermiticity tolerance accepted by the eigensolver.
pub const HERMITIAN_TOL: f64 = 1e-8;

const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;
/// Entries below this (relative to the largest entry) do not couple blocks.
const BLOCK_DROP_TOL: f64 = 1e-14;
/// Diagonal shift used when probing positive semidefiniteness by Cholesky.
const CHOLESKY_SHIFT: f64 = 1e-13;

static VALIDATION: AtomicBool = AtomicBool::new(false);

/// Enables expensive checks (unitarity of applied operators, positivity of
/// constructed states, eigen-decomposition residuals).
pub fn set_validation(enabled: bool) {
    VALIDATION.store(enabled, Ordering::Relaxed);
}

pub fn validation_enabled() -> bool {
    VALIDATION.load(Ordering::Relaxed)
}

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| format!("{:+.4}{:+.4}i", z.re, z.im))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite matrix entry".into()));
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix with real row-major entries.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::from_vec(
            dim,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// Projector `|psi><psi|` (no normalization applied).
    pub fn outer(psi: &[Complex64]) -> Self {
        let dim = psi.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.data[i * n + k];
                if aik == ZERO {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                let orow = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += aik * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            dim: self.dim,
            data,
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |M - M†|` entrywise.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim;
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                err = err.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        err
    }

    /// `max |U U† - I|` entrywise.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim;
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = ZERO;
                for k in 0..n {
                    s += self.data[i * n + k] * self.data[j * n + k].conj();
                }
                let target = if i == j { ONE } else { ZERO };
                err = err.max((s - target).norm());
            }
        }
        err
    }

    /// Replaces the matrix by `(M + M†) / 2`.
    pub(crate) fn hermitize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            let d = self.data[i * n + i];
            self.data[i * n + i] = Complex64::new(d.re, 0.0);
            for j in i + 1..n {
                let avg = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Standard single-qubit gates.
pub mod gates {
    use super::{ComplexMatrix, ONE, ZERO};
    use num_complex::Complex64;
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn hadamard() -> ComplexMatrix {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        ComplexMatrix::from_vec(2, vec![h, h, h, -h]).expect("2x2")
    }

    pub fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_vec(2, vec![ZERO, ONE, ONE, ZERO]).expect("2x2")
    }

    pub fn pauli_y() -> ComplexMatrix {
        let i = Complex64::i();
        ComplexMatrix::from_vec(2, vec![ZERO, -i, i, ZERO]).expect("2x2")
    }

    pub fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_vec(2, vec![ONE, ZERO, ZERO, -ONE]).expect("2x2")
    }

    /// `diag(1, exp(-2 pi i theta))`.
    pub fn phase(theta: f64) -> ComplexMatrix {
        let phi = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * theta);
        ComplexMatrix::diagonal(&[ONE, phi])
    }

    pub fn projector(bit: u8) -> ComplexMatrix {
        if bit == 0 {
            ComplexMatrix::diagonal(&[ONE, ZERO])
        } else {
            ComplexMatrix::diagonal(&[ZERO, ONE])
        }
    }
}

/// Kronecker product: entry `(i*dB + k, j*dB + l) = A(i,j) * B(k,l)`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim, b.dim);
    let n = da * db;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..da {
        for j in 0..da {
            let aij = a.data[i * da + j];
            if aij == ZERO {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    out.data[(i * db + k) * n + j * db + l] = aij * b.data[k * db + l];
                }
            }
        }
    }
    out
}

/// Global offsets of every local index over `positions` (first position is
/// the most significant local bit).
fn scatter_offsets(qubits: usize, positions: &[usize]) -> Vec<usize> {
    let k = positions.len();
    (0..1usize << k)
        .map(|g| {
            positions.iter().enumerate().fold(0, |acc, (i, &q)| {
                if (g >> (k - 1 - i)) & 1 == 1 {
                    acc | (1 << (qubits - 1 - q))
                } else {
                    acc
                }
            })
        })
        .collect()
}

fn check_targets(qubits: usize, targets: &[usize]) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        if t >= qubits {
            return Err(Error::QubitOutOfRange { index: t, qubits });
        }
        if targets[..i].contains(&t) {
            return Err(Error::DuplicateQubit(t));
        }
    }
    Ok(())
}

/// Bitmask (in global index space) covering the given qubits.
pub fn qubit_mask(qubits: usize, list: &[usize]) -> usize {
    list.iter().fold(0, |acc, &q| acc | (1 << (qubits - 1 - q)))
}

/// Density matrix over an ordered list of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and (in validation mode) positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let dim = matrix.dim();
        if !dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(dim));
        }
        let state = Self {
            qubits: dim.trailing_zeros() as usize,
            matrix,
        };
        state.check_basic()?;
        if validation_enabled() {
            state.check_positive()?;
        }
        Ok(state)
    }

    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        let qubits = matrix.dim().trailing_zeros() as usize;
        Self { qubits, matrix }
    }

    /// Normalized `|psi><psi|`.
    pub fn from_pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let scaled: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&scaled))
    }

    pub fn basis_state(qubits: usize, index: usize) -> Self {
        let mut m = ComplexMatrix::zeros(1 << qubits);
        m[(index, index)] = ONE;
        Self { qubits, matrix: m }
    }

    pub fn maximally_mixed(qubits: usize) -> Self {
        let dim = 1 << qubits;
        Self {
            qubits,
            matrix: ComplexMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0)),
        }
    }

    /// Diagonal state with the given probabilities.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        let diag: Vec<Complex64> = probs.iter().map(|&p| Complex64::new(p, 0.0)).collect();
        Self::new(ComplexMatrix::diagonal(&diag))
    }

    #[inline]
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut ComplexMatrix {
        &mut self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            qubits: self.qubits + other.qubits,
            matrix: kron(&self.matrix, &other.matrix),
        }
    }

    fn check_basic(&self) -> Result<()> {
        let herm = self.matrix.hermiticity_error();
        if herm.is_nan() || herm >= STATE_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = self.matrix.trace();
        if !((tr.re - 1.0).abs() < STATE_TOL && tr.im.abs() < STATE_TOL) {
            return Err(Error::InvalidState(format!("trace {} != 1", tr.re)));
        }
        Ok(())
    }

    fn check_positive(&self) -> Result<()> {
        let spectrum = hermitian_eigenvalues(&self.matrix)?;
        let min = spectrum.min();
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    /// Full check: Hermitian, unit trace and positive semidefinite.
    pub fn validate(&self) -> Result<()> {
        self.check_basic()?;
        self.check_positive()
    }

    pub(crate) fn hermitize(&mut self) {
        self.matrix.hermitize();
    }

    /// Divides every entry by the trace.
    pub(crate) fn renormalize(&mut self) {
        let tr = self.trace();
        let inv = Complex64::new(1.0 / tr, 0.0);
        for z in self.matrix.data_mut() {
            *z *= inv;
        }
    }
}

/// `U rho U†` for an operator acting on the whole register.
pub fn apply_unitary(rho: &DensityMatrix, u: &ComplexMatrix) -> Result<DensityMatrix> {
    check_dim(rho.dim(), u.dim())?;
    if validation_enabled() {
        let err = u.unitarity_error();
        if err > STATE_TOL {
            return Err(Error::NotUnitary(err));
        }
    }
    let mut out = u.matmul(&rho.matrix)?.matmul(&u.adjoint())?;
    out.hermitize();
    Ok(DensityMatrix {
        qubits: rho.qubits,
        matrix: out,
    })
}

/// Applies `G` to the listed qubits by block traversal, without assembling
/// the full operator. `targets[0]` is the most significant bit of `G`.
pub fn apply_local_gate(
    rho: &DensityMatrix,
    gate: &ComplexMatrix,
    targets: &[usize],
) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    apply_local_gate_in_place(&mut out, gate, targets)?;
    Ok(out)
}

pub(crate) fn apply_local_gate_in_place(
    rho: &mut DensityMatrix,
    gate: &ComplexMatrix,
    targets: &[usize],
) -> Result<()> {
    let m = rho.qubits;
    check_targets(m, targets)?;
    check_dim(1 << targets.len(), gate.dim())?;
    if validation_enabled() {
        let err = gate.unitarity_error();
        if err > STATE_TOL {
            return Err(Error::NotUnitary(err));
        }
    }
    let local = scatter_offsets(m, targets);
    let rest_qubits: Vec<usize> = (0..m).filter(|q| !targets.contains(q)).collect();
    let rest = scatter_offsets(m, &rest_qubits);
    let d = rho.dim();
    let k = local.len();
    let g = gate.data();
    let data = rho.matrix.data_mut();
    let mut buf = vec![ZERO; k];

    // rows: rho <- G rho
    for col in 0..d {
        for &base in &rest {
            for (b, &off) in buf.iter_mut().zip(&local) {
                *b = data[(base + off) * d + col];
            }
            for (r, &off) in local.iter().enumerate() {
                let grow = &g[r * k..(r + 1) * k];
                data[(base + off) * d + col] = grow.iter().zip(&buf).map(|(x, y)| x * y).sum();
            }
        }
    }
    // columns: rho <- rho G†
    for row in 0..d {
        let line = &mut data[row * d..(row + 1) * d];
        for &base in &rest {
            for (b, &off) in buf.iter_mut().zip(&local) {
                *b = line[base + off];
            }
            for (c, &off) in local.iter().enumerate() {
                let grow = &g[c * k..(c + 1) * k];
                line[base + off] = grow.iter().zip(&buf).map(|(x, y)| x.conj() * y).sum();
            }
        }
    }
    rho.hermitize();
    Ok(())
}

/// Relabels basis states: entry `(i, j)` moves to `(perm[i], perm[j])`.
pub fn permute_basis(rho: &DensityMatrix, perm: &[usize]) -> Result<DensityMatrix> {
    let d = rho.dim();
    check_dim(d, perm.len())?;
    let mut seen = vec![false; d];
    for &p in perm {
        if p >= d || seen[p] {
            return Err(Error::InvalidState("not a permutation".into()));
        }
        seen[p] = true;
    }
    Ok(permute_basis_unchecked(rho, perm))
}

pub(crate) fn permute_basis_unchecked(rho: &DensityMatrix, perm: &[usize]) -> DensityMatrix {
    let d = rho.dim();
    let src = rho.matrix.data();
    let mut out = ComplexMatrix::zeros(d);
    let dst = out.data_mut();
    for i in 0..d {
        let pi = perm[i] * d;
        for j in 0..d {
            dst[pi + perm[j]] = src[i * d + j];
        }
    }
    DensityMatrix {
        qubits: rho.qubits,
        matrix: out,
    }
}

/// Traces out the listed qubits; the remaining qubits keep their order.
pub fn partial_trace(rho: &DensityMatrix, traced: &[usize]) -> Result<DensityMatrix> {
    let m = rho.qubits;
    check_targets(m, traced)?;
    if traced.is_empty() || traced.len() >= m {
        return Err(Error::ImproperSubset);
    }
    let kept: Vec<usize> = (0..m).filter(|q| !traced.contains(q)).collect();
    let kept_off = scatter_offsets(m, &kept);
    let traced_off = scatter_offsets(m, traced);
    let d = rho.dim();
    let dk = kept_off.len();
    let src = rho.matrix.data();
    let mut out = ComplexMatrix::zeros(dk);
    for (i, &ki) in kept_off.iter().enumerate() {
        for (j, &kj) in kept_off.iter().enumerate() {
            out.data[i * dk + j] = traced_off.iter().map(|&t| src[(ki + t) * d + kj + t]).sum();
        }
    }
    out.hermitize();
    Ok(DensityMatrix {
        qubits: kept.len(),
        matrix: out,
    })
}

/// Partial transpose over the listed qubits (their row and column bits swap).
pub fn partial_transpose(rho: &DensityMatrix, subset: &[usize]) -> Result<ComplexMatrix> {
    let m = rho.qubits;
    check_targets(m, subset)?;
    if subset.is_empty() || subset.len() >= m {
        return Err(Error::ImproperSubset);
    }
    Ok(partial_transpose_mask(&rho.matrix, qubit_mask(m, subset)))
}

pub(crate) fn partial_transpose_mask(matrix: &ComplexMatrix, mask: usize) -> ComplexMatrix {
    let d = matrix.dim;
    let src = matrix.data();
    let mut out = ComplexMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let si = (i & !mask) | (j & mask);
            let sj = (j & !mask) | (i & mask);
            out.data[i * d + j] = src[si * d + sj];
        }
    }
    out
}

/// Real eigenvalues of a Hermitian matrix, in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSpectrum {
    eigenvalues: Vec<f64>,
}

impl HermitianSpectrum {
    fn from_unsorted(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Self { eigenvalues }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn abs_sum(&self) -> f64 {
        self.eigenvalues.iter().map(|x| x.abs()).sum()
    }
}

/// Cyclic complex Jacobi on a dense Hermitian matrix, optionally
/// accumulating eigenvectors (as columns). Returns the diagonal.
fn jacobi(a: &mut [Complex64], n: usize, mut vecs: Option<&mut [Complex64]>) -> Vec<f64> {
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let converged = JACOBI_OFF_TOL * scale;
    let skip = 1e-3 * converged;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(a[p * n + q].norm());
            }
        }
        if off <= converged {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let mag = apq.norm();
                if mag <= skip {
                    continue;
                }
                let phase = apq / mag;
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a[p * n + p] = Complex64::new(app - t * mag, 0.0);
                a[q * n + q] = Complex64::new(aqq + t * mag, 0.0);
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                let pc = phase.conj();
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let x = a[r * n + p];
                    let y = a[r * n + q] * pc;
                    let rp = x * c - y * s;
                    let rq = x * s + y * c;
                    a[r * n + p] = rp;
                    a[p * n + r] = rp.conj();
                    a[r * n + q] = rq;
                    a[q * n + r] = rq.conj();
                }
                if let Some(v) = vecs.as_deref_mut() {
                    for r in 0..n {
                        let x = v[r * n + p];
                        let y = v[r * n + q] * pc;
                        v[r * n + p] = x * c - y * s;
                        v[r * n + q] = x * s + y * c;
                    }
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i].re).collect()
}

/// Connected components of the coupling graph of a Hermitian matrix.
fn coupling_blocks(m: &ComplexMatrix) -> Vec<Vec<usize>> {
    let n = m.dim;
    let drop = BLOCK_DROP_TOL * m.max_abs().max(f64::MIN_POSITIVE);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if m.data[i * n + j].norm() > drop {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

fn extract_block(m: &ComplexMatrix, idx: &[usize]) -> Vec<Complex64> {
    let n = m.dim;
    let mut out = Vec::with_capacity(idx.len() * idx.len());
    for &i in idx {
        for &j in idx {
            out.push(m.data[i * n + j]);
        }
    }
    out
}

/// True when `A + shift*I` admits a Cholesky factorization.
fn cholesky_succeeds(a: &[Complex64], n: usize, shift: f64) -> bool {
    let mut l = vec![ZERO; n * n];
    for j in 0..n {
        let mut d = a[j * n + j].re + shift;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if d <= 0.0 {
            return false;
        }
        let ljj = d.sqrt();
        l[j * n + j] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / ljj;
        }
    }
    true
}

fn require_hermitian(m: &ComplexMatrix) -> Result<()> {
    let err = m.hermiticity_error();
    if err.is_nan() || err > HERMITIAN_TOL {
        return Err(Error::NotHermitian(err));
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix (cyclic Jacobi on each decoupled block).
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<HermitianSpectrum> {
    require_hermitian(m)?;
    let mut values = Vec::with_capacity(m.dim);
    for block in coupling_blocks(m) {
        if block.len() == 1 {
            values.push(m[(block[0], block[0])].re);
            continue;
        }
        let mut a = extract_block(m, &block);
        values.extend(jacobi(&mut a, block.len(), None));
    }
    Ok(HermitianSpectrum::from_unsorted(values))
}

/// Eigenvalues and orthonormal eigenvectors (columns, matching the
/// descending eigenvalue order).
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<(HermitianSpectrum, ComplexMatrix)> {
    require_hermitian(m)?;
    let n = m.dim;
    let mut a = m.data.clone();
    let mut v = ComplexMatrix::identity(n);
    let diag = jacobi(&mut a, n, Some(v.data_mut()));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let mut sorted = ComplexMatrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            sorted[(r, new_col)] = v[(r, old_col)];
        }
    }
    let spectrum = HermitianSpectrum {
        eigenvalues: order.iter().map(|&i| diag[i]).collect(),
    };
    if validation_enabled() {
        let lambda: Vec<Complex64> = spectrum
            .eigenvalues
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        let rebuilt = sorted
            .matmul(&ComplexMatrix::diagonal(&lambda))?
            .matmul(&sorted.adjoint())?;
        let residual = rebuilt.max_abs_diff(m);
        if residual > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "eigen-decomposition residual {residual:.3e}"
            )));
        }
    }
    Ok((spectrum, sorted))
}

/// Trace norm `sum |lambda_i|` of a Hermitian matrix.
///
/// Decoupled blocks are handled separately; a block that passes a shifted
/// Cholesky probe is positive semidefinite (up to `n * 1e-13`) and
/// contributes its trace without diagonalization.
pub fn trace_norm_hermitian(m: &ComplexMatrix) -> Result<f64> {
    require_hermitian(m)?;
    let mut total = 0.0;
    for block in coupling_blocks(m) {
        let k = block.len();
        if k == 1 {
            total += m[(block[0], block[0])].re.abs();
            continue;
        }
        let mut a = extract_block(m, &block);
        if cholesky_succeeds(&a, k, CHOLESKY_SHIFT) {
            total += (0..k).map(|i| a[i * k + i].re).sum::<f64>();
        } else {
            total += jacobi(&mut a, k, None).iter().map(|x| x.abs()).sum::<f64>();
        }
    }
    Ok(total)
}

/// Von Neumann entropy in bits; eigenvalues slightly below zero count as 0.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let spectrum = hermitian_eigenvalues(&rho.matrix).expect("density matrix is Hermitian");
    let s: f64 = spectrum
        .eigenvalues
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum();
    s.clamp(0.0, rho.qubits as f64)
}
