//! Dense complex operator algebra over qubit registers.
//!
//! Basis indices follow the left-to-right ket convention: qubit 0 is the most
//! significant bit of a computational basis index, so `|q0 q1 ... q_{n-1}>`
//! has index `q0 * 2^{n-1} + ... + q_{n-1}`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest register handled with dense density matrices.
pub const MAX_DENSE_QUBITS: usize = 12;
/// Largest register handled as a state vector.
pub const MAX_KET_QUBITS: usize = 20;
/// Relative eigenvalue cutoff (against the largest eigenvalue) for support and rank decisions.
pub const SUPPORT_CUTOFF: f64 = 1e-12;

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const EIG_HERMITIAN_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Bit position of `qubit` inside a basis index of an `n`-qubit register.
#[inline]
pub(crate) fn bit_shift(n: usize, qubit: usize) -> usize {
    n - 1 - qubit
}

/// Square complex matrix acting on a register of `n_qubits` qubits.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    n_qubits: usize,
    data: DMatrix<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix({} qubits){}", self.n_qubits, self.data)
    }
}

impl ComplexMatrix {
    pub fn new(data: DMatrix<C64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::NotSquare {
                rows: data.nrows(),
                cols: data.ncols(),
            });
        }
        let n_qubits = qubits_for_dim(data.nrows())?;
        if n_qubits > MAX_DENSE_QUBITS {
            return Err(Error::TooManyQubits {
                qubits: n_qubits,
                max: MAX_DENSE_QUBITS,
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { n_qubits, data })
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_slice(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        let entries: Vec<C64> = entries.iter().map(|&x| r(x)).collect();
        Self::from_row_slice(dim, &entries)
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_dense(n_qubits)?;
        let d = 1 << n_qubits;
        Ok(Self {
            n_qubits,
            data: DMatrix::identity(d, d),
        })
    }

    pub fn zeros(n_qubits: usize) -> Result<Self> {
        check_dense(n_qubits)?;
        let d = 1 << n_qubits;
        Ok(Self {
            n_qubits,
            data: DMatrix::zeros(d, d),
        })
    }

    /// Wraps a matrix whose shape is already known to be valid.
    pub(crate) fn from_trusted(data: DMatrix<C64>) -> Self {
        debug_assert_eq!(data.nrows(), data.ncols());
        let n_qubits = data.nrows().trailing_zeros() as usize;
        Self { n_qubits, data }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_trusted(self.data.adjoint())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_trusted(self.data.map(|z| z * factor))
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    /// `Tr[self * other]`, computed without forming the product.
    pub fn trace_product(&self, other: &ComplexMatrix) -> C64 {
        let d = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for k in 0..d {
                acc += self.data[(i, k)] * other.data[(k, i)];
            }
        }
        acc
    }

    /// Largest entrywise deviation `max |M - M^dagger|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let dev = (self.data[(i, j)] - self.data[(j, i)].conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }

    /// Largest entrywise deviation `max |M^dagger M - I|`.
    pub fn unitary_deviation(&self) -> f64 {
        let prod = self.data.adjoint() * &self.data;
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - r(target)).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_distance(&self, other: &ComplexMatrix) -> f64 {
        (&self.data - &other.data).norm()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    /// `(M + M^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_trusted((&self.data + self.data.adjoint()).map(|z| z * 0.5))
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &ComplexMatrix) -> Self {
        Self::from_trusted(&self.data * &other.data - &other.data * &self.data)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in product");
        ComplexMatrix::from_trusted(&self.data * &rhs.data)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in sum");
        ComplexMatrix::from_trusted(&self.data + &rhs.data)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in difference");
        ComplexMatrix::from_trusted(&self.data - &rhs.data)
    }
}

fn check_dense(n_qubits: usize) -> Result<()> {
    if n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits {
            qubits: n_qubits,
            max: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

pub(crate) fn check_ket_size(n_qubits: usize) -> Result<()> {
    if n_qubits > MAX_KET_QUBITS {
        return Err(Error::TooManyQubits {
            qubits: n_qubits,
            max: MAX_KET_QUBITS,
        });
    }
    Ok(())
}

/// Single- and two-qubit gates used throughout.
pub mod gates {
    use super::{c, r, ComplexMatrix};
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(2, &[1.0, 0.0, 0.0, 1.0]).unwrap()
    }

    pub fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn pauli_y() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, &[r(0.0), c(0.0, -1.0), c(0.0, 1.0), r(0.0)]).unwrap()
    }

    pub fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }

    pub fn hadamard() -> ComplexMatrix {
        let h = FRAC_1_SQRT_2;
        ComplexMatrix::from_real_rows(2, &[h, h, h, -h]).unwrap()
    }

    /// Controlled-phase `diag(1, 1, 1, -1)`.
    pub fn cz() -> ComplexMatrix {
        let mut e = [0.0; 16];
        e[0] = 1.0;
        e[5] = 1.0;
        e[10] = 1.0;
        e[15] = -1.0;
        ComplexMatrix::from_real_rows(4, &e).unwrap()
    }
}

/// Tensor product `a ⊗ b`, with `a` on the more significant qubits.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.n_qubits + b.n_qubits;
    check_dense(n)?;
    Ok(ComplexMatrix {
        n_qubits: n,
        data: a.data.kronecker(&b.data),
    })
}

/// Pure state over `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    n_qubits: usize,
    amps: DVector<C64>,
}

impl Ket {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        check_ket_size(n_qubits)?;
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        let norm_sqr: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm_sqr));
        }
        Ok(Self {
            n_qubits,
            amps: DVector::from_vec(amplitudes),
        })
    }

    /// Normalizes `amplitudes` before validation.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm * norm));
        }
        Self::new(amplitudes.into_iter().map(|z| z / norm).collect())
    }

    pub(crate) fn from_trusted(amps: DVector<C64>) -> Self {
        let n_qubits = amps.len().trailing_zeros() as usize;
        Self { n_qubits, amps }
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_ket_size(n_qubits)?;
        let d = 1usize << n_qubits;
        if index >= d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: index,
            });
        }
        let mut amps = DVector::zeros(d);
        amps[index] = r(1.0);
        Ok(Self { n_qubits, amps })
    }

    /// `|+>^{⊗n}`.
    pub fn plus(n_qubits: usize) -> Result<Self> {
        check_ket_size(n_qubits)?;
        let d = 1usize << n_qubits;
        let a = r((d as f64).sqrt().recip());
        Ok(Self {
            n_qubits,
            amps: DVector::from_element(d, a),
        })
    }

    /// Product of normalized single-qubit vectors, first factor most significant.
    pub fn product(factors: &[[C64; 2]]) -> Result<Self> {
        check_ket_size(factors.len())?;
        let mut amps = vec![r(1.0)];
        for f in factors {
            let mut next = Vec::with_capacity(amps.len() * 2);
            for a in &amps {
                next.push(a * f[0]);
                next.push(a * f[1]);
            }
            amps = next;
        }
        Self::normalized(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn projector(&self) -> Result<DensityOp> {
        check_dense(self.n_qubits)?;
        let m = &self.amps * self.amps.adjoint();
        Ok(DensityOp::from_trusted(ComplexMatrix::from_trusted(m)))
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOp {
    matrix: ComplexMatrix,
}

impl DensityOp {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let dev = matrix.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::BadTrace(tr.re));
        }
        let eig = hermitian_eig(&matrix)?;
        let min = eig.values[0];
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { matrix })
    }

    /// Wraps an operator known to be a valid state by construction.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.hermitian_deviation() < 1e-9);
        debug_assert!((matrix.trace().re - 1.0).abs() < 1e-9);
        Self { matrix }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        let id = ComplexMatrix::identity(n_qubits)?;
        Ok(Self::from_trusted(
            id.scale(1.0 / (1u64 << n_qubits) as f64),
        ))
    }

    /// `(1 - weight) * self + weight * other`.
    pub fn mix(&self, other: &DensityOp, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::OutOfRange {
                name: "mixing weight",
                value: weight,
                range: "[0, 1]",
            });
        }
        if self.n_qubits() != other.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let m = &self.matrix.scale(1.0 - weight) + &other.matrix.scale(weight);
        Ok(Self::from_trusted(m))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn n_qubits(&self) -> usize {
        self.matrix.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    /// `Tr[self * other]` (real for Hermitian operands).
    pub fn overlap(&self, other: &DensityOp) -> f64 {
        self.matrix.trace_product(&other.matrix).re
    }

    /// `<psi| self |psi>`.
    pub fn expectation(&self, psi: &Ket) -> f64 {
        let v = psi.as_vector();
        v.dotc(&(self.matrix.as_matrix() * v)).re
    }

    /// Number of eigenvalues above the relative support cutoff.
    pub fn rank(&self) -> Result<usize> {
        Ok(hermitian_eig(&self.matrix)?.support_indices().len())
    }
}

/// Eigen-decomposition of a Hermitian matrix with ascending real eigenvalues.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered like `values`.
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    /// Indices of eigenvalues above `SUPPORT_CUTOFF` times the largest magnitude.
    pub fn support_indices(&self) -> Vec<usize> {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cut = SUPPORT_CUTOFF * scale;
        (0..self.values.len())
            .filter(|&i| self.values[i] > cut)
            .collect()
    }

    /// `V diag(f(λ)) V^dagger`.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
        let d = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..d {
            let w = f(self.values[j]);
            scaled.column_mut(j).scale_mut(w);
        }
        scaled * self.vectors.adjoint()
    }
}

/// Hermitian eigen-solve. The input is symmetrized before the solve.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let dev = m.hermitian_deviation();
    if dev > EIG_HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let sym = m.hermitian_part().into_matrix();
    let eig = SymmetricEigen::new(sym);
    let d = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEigen { values, vectors })
}

/// Base-2 logarithm of a state restricted to its support.
#[derive(Clone, Debug)]
pub struct SupportLog {
    /// `Σ_{λ_i > ε} log2(λ_i) |v_i><v_i|`.
    pub log2: ComplexMatrix,
    /// Projector onto the support.
    pub support: ComplexMatrix,
    pub rank: usize,
}

pub fn matrix_log2_on_support(rho: &DensityOp) -> Result<SupportLog> {
    let eig = hermitian_eig(rho.matrix())?;
    let support = eig.support_indices();
    let d = rho.dim();
    let mut log = DMatrix::zeros(d, d);
    let mut proj = DMatrix::zeros(d, d);
    for &i in &support {
        let v = eig.vectors.column(i);
        let outer = v * v.adjoint();
        log += &outer * r(eig.values[i].log2());
        proj += outer;
    }
    Ok(SupportLog {
        log2: ComplexMatrix::from_trusted(log),
        support: ComplexMatrix::from_trusted(proj),
        rank: support.len(),
    })
}

fn check_sites(n: usize, sites: &[usize]) -> Result<()> {
    for (k, &q) in sites.iter().enumerate() {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, n });
        }
        if sites[..k].contains(&q) {
            return Err(Error::RepeatedSite(q));
        }
    }
    Ok(())
}

/// Partial transpose over the qubits in `subset`.
pub fn partial_transpose(m: &ComplexMatrix, subset: &[usize]) -> Result<ComplexMatrix> {
    let n = m.n_qubits();
    for &q in subset {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, n });
        }
    }
    let mask = subset
        .iter()
        .fold(0usize, |acc, &q| acc | (1 << bit_shift(n, q)));
    let d = m.dim();
    let src = m.as_matrix();
    let out = DMatrix::from_fn(d, d, |row, col| {
        let r0 = (row & !mask) | (col & mask);
        let c0 = (col & !mask) | (row & mask);
        src[(r0, c0)]
    });
    Ok(ComplexMatrix::from_trusted(out))
}

/// Applies `gate` to `sites` of a state vector slice in place.
/// `sites[0]` is the most significant qubit of the gate's own index.
pub(crate) fn apply_local(amps: &mut [C64], n: usize, gate: &DMatrix<C64>, sites: &[usize]) {
    let k = sites.len();
    let gd = 1usize << k;
    let offsets: Vec<usize> = (0..gd)
        .map(|l| {
            (0..k)
                .filter(|&t| (l >> (k - 1 - t)) & 1 == 1)
                .map(|t| 1usize << bit_shift(n, sites[t]))
                .sum()
        })
        .collect();
    let mask = offsets[gd - 1];
    let mut buf = vec![C64::new(0.0, 0.0); gd];
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        for l in 0..gd {
            buf[l] = amps[base + offsets[l]];
        }
        for row in 0..gd {
            let mut acc = C64::new(0.0, 0.0);
            for col in 0..gd {
                acc += gate[(row, col)] * buf[col];
            }
            amps[base + offsets[row]] = acc;
        }
    }
}

fn validate_gate(n: usize, gate: &ComplexMatrix, sites: &[usize]) -> Result<()> {
    check_sites(n, sites)?;
    if gate.dim() != 1 << sites.len() {
        return Err(Error::DimensionMismatch {
            expected: 1 << sites.len(),
            found: gate.dim(),
        });
    }
    let dev = gate.unitary_deviation();
    if dev > UNITARY_TOL {
        return Err(Error::NotUnitary(dev));
    }
    Ok(())
}

pub fn apply_gate(state: &Ket, gate: &ComplexMatrix, sites: &[usize]) -> Result<Ket> {
    validate_gate(state.n_qubits(), gate, sites)?;
    let mut amps = state.amps.clone();
    apply_local(
        amps.as_mut_slice(),
        state.n_qubits(),
        gate.as_matrix(),
        sites,
    );
    Ok(Ket::from_trusted(amps))
}

fn left_apply(m: &mut DMatrix<C64>, n: usize, gate: &DMatrix<C64>, sites: &[usize]) {
    for mut col in m.column_iter_mut() {
        apply_local(col.as_mut_slice(), n, gate, sites);
    }
}

/// `U M U^dagger` with `U` acting on `sites`.
pub fn conjugate_by_gate(
    m: &ComplexMatrix,
    gate: &ComplexMatrix,
    sites: &[usize],
) -> Result<ComplexMatrix> {
    let n = m.n_qubits();
    validate_gate(n, gate, sites)?;
    let mut data = m.as_matrix().clone();
    left_apply(&mut data, n, gate.as_matrix(), sites);
    let mut data = data.adjoint();
    left_apply(&mut data, n, gate.as_matrix(), sites);
    Ok(ComplexMatrix::from_trusted(data.adjoint()))
}

/// Applies `U ρ U^dagger`; the result is a valid state whenever `U` is unitary.
pub fn conjugate_state(
    rho: &DensityOp,
    gate: &ComplexMatrix,
    sites: &[usize],
) -> Result<DensityOp> {
    let m = conjugate_by_gate(rho.matrix(), gate, sites)?;
    Ok(DensityOp::from_trusted(m.hermitian_part()))
}
