//! Closest separable states to cluster states and the product-state
//! machinery used to certify them.
//!
//! The "mixed" basis applies a Hadamard to every qubit of the graph's `B`
//! class. In that basis a cluster state is an equal superposition of
//! `2^{|A|}` product basis states, and dephasing it yields a separable state
//! of rank `2^{|A|}`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::graph::{cluster_state, QubitGraph};
use crate::rng::stream_rng;
use crate::tensor::{
    bit_shift, conjugate_by_gate, conjugate_state, gates, hermitian_eig, kron, r, ComplexMatrix,
    DensityOp, Ket, C64, MAX_DENSE_QUBITS,
};

/// Default number of random restarts for product-state searches.
pub const DEFAULT_RESTARTS: usize = 64;

const SWEEP_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 10_000;

/// Pure product state `⊗_i (cos(θ_i/2)|0> + e^{iφ_i} sin(θ_i/2)|1>)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochProduct {
    angles: Vec<(f64, f64)>,
}

impl BlochProduct {
    pub fn new(angles: Vec<(f64, f64)>) -> Result<Self> {
        for &(theta, phi) in &angles {
            if !(0.0..=PI).contains(&theta) {
                return Err(Error::OutOfRange {
                    name: "theta",
                    value: theta,
                    range: "[0, pi]",
                });
            }
            if !(0.0..TAU).contains(&phi) {
                return Err(Error::OutOfRange {
                    name: "phi",
                    value: phi,
                    range: "[0, 2pi)",
                });
            }
        }
        Ok(Self { angles })
    }

    /// Angles of arbitrary (nonzero) single-qubit vectors, up to global phase.
    pub fn from_factors(factors: &[[C64; 2]]) -> Self {
        let angles = factors
            .iter()
            .map(|f| {
                let theta = 2.0 * f[1].norm().atan2(f[0].norm());
                let phi = if f[0].norm() == 0.0 || f[1].norm() == 0.0 {
                    0.0
                } else {
                    (f[1].arg() - f[0].arg()).rem_euclid(TAU)
                };
                // rem_euclid can round up to exactly 2π
                (theta.clamp(0.0, PI), if phi >= TAU { 0.0 } else { phi })
            })
            .collect();
        Self { angles }
    }

    /// Haar-random single-qubit states: `cos θ` and `φ` uniform.
    pub fn sample(n: usize, rng: &mut impl Rng) -> Self {
        let angles = (0..n)
            .map(|_| {
                let cos_theta: f64 = rng.random_range(-1.0..=1.0);
                let phi: f64 = rng.random_range(0.0..TAU);
                (cos_theta.acos(), phi)
            })
            .collect();
        Self { angles }
    }

    pub fn n(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[(f64, f64)] {
        &self.angles
    }

    pub fn factors(&self) -> Vec<[C64; 2]> {
        self.angles
            .iter()
            .map(|&(theta, phi)| {
                [
                    r((theta / 2.0).cos()),
                    C64::from_polar((theta / 2.0).sin(), phi),
                ]
            })
            .collect()
    }

    pub fn ket(&self) -> Result<Ket> {
        Ket::product(&self.factors())
    }

    pub fn density(&self) -> Result<DensityOp> {
        self.ket()?.projector()
    }

    /// Concatenation `self ⊗ other`.
    pub fn join(&self, other: &BlochProduct) -> BlochProduct {
        let mut angles = self.angles.clone();
        angles.extend_from_slice(&other.angles);
        BlochProduct { angles }
    }

    pub fn split_at(&self, k: usize) -> (BlochProduct, BlochProduct) {
        let (a, b) = self.angles.split_at(k);
        (
            BlochProduct { angles: a.to_vec() },
            BlochProduct { angles: b.to_vec() },
        )
    }
}

/// Local basis with Hadamards on the graph's `B` class.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedBasisFrame {
    n: usize,
    hadamard_sites: Vec<usize>,
}

impl MixedBasisFrame {
    pub fn new(g: &QubitGraph) -> Self {
        Self {
            n: g.n(),
            hadamard_sites: g.class_b(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn hadamard_sites(&self) -> &[usize] {
        &self.hadamard_sites
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: n,
            });
        }
        Ok(())
    }
}

/// Objects that can be rewritten in (and back out of) the mixed basis.
/// The map is its own inverse.
pub trait ToMixedBasis: Sized {
    fn to_mixed_basis(&self, frame: &MixedBasisFrame) -> Result<Self>;
}

impl ToMixedBasis for Ket {
    fn to_mixed_basis(&self, frame: &MixedBasisFrame) -> Result<Self> {
        frame.check(self.n_qubits())?;
        let h = gates::hadamard();
        let mut amps = self.as_vector().clone();
        for &q in &frame.hadamard_sites {
            crate::tensor::apply_local(amps.as_mut_slice(), self.n_qubits(), h.as_matrix(), &[q]);
        }
        Ket::normalized(amps.as_slice().to_vec())
    }
}

impl ToMixedBasis for ComplexMatrix {
    fn to_mixed_basis(&self, frame: &MixedBasisFrame) -> Result<Self> {
        frame.check(self.n_qubits())?;
        let h = gates::hadamard();
        let mut m = self.clone();
        for &q in &frame.hadamard_sites {
            m = conjugate_by_gate(&m, &h, &[q])?;
        }
        Ok(m)
    }
}

impl ToMixedBasis for DensityOp {
    fn to_mixed_basis(&self, frame: &MixedBasisFrame) -> Result<Self> {
        frame.check(self.n_qubits())?;
        let h = gates::hadamard();
        let mut m = self.clone();
        for &q in &frame.hadamard_sites {
            m = conjugate_state(&m, &h, &[q])?;
        }
        Ok(m)
    }
}

pub fn to_mixed_basis<T: ToMixedBasis>(x: &T, frame: &MixedBasisFrame) -> Result<T> {
    x.to_mixed_basis(frame)
}

/// Zeroes every off-diagonal entry of `rho` in the frame's basis and returns
/// the result in the computational basis.
pub fn dephase_in_frame(rho: &DensityOp, frame: &MixedBasisFrame) -> Result<DensityOp> {
    let mixed = rho.to_mixed_basis(frame)?;
    let d = mixed.dim();
    let diag = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            mixed.matrix().get(i, i)
        } else {
            r(0.0)
        }
    });
    DensityOp::from_trusted(ComplexMatrix::from_trusted(diag)).to_mixed_basis(frame)
}

fn check_dense(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits {
            qubits: n,
            max: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

/// Dephasing of the pure cluster state in the graph's mixed basis.
pub fn closest_separable_pure(g: &QubitGraph) -> Result<DensityOp> {
    check_dense(g.n())?;
    let sigma = cluster_state(g)?.projector()?;
    dephase_in_frame(&sigma, &MixedBasisFrame::new(g))
}

/// `N/2` copies of the two-qubit closest separable state joined into a chain
/// by CZ gates on qubit pairs (1,2), (3,4), ... (0-indexed).
pub fn operational_construction(n: usize) -> Result<DensityOp> {
    if !n.is_multiple_of(2) || n == 0 {
        return Err(Error::OddQubitCount(n));
    }
    check_dense(n)?;
    let pair = closest_separable_pure(&QubitGraph::chain(2)?)?;
    let mut m = pair.matrix().clone();
    for _ in 1..n / 2 {
        m = kron(&m, pair.matrix())?;
    }
    let cz = gates::cz();
    for left in (1..n - 1).step_by(2) {
        m = conjugate_by_gate(&m, &cz, &[left, left + 1])?;
    }
    Ok(DensityOp::from_trusted(m.hermitian_part()))
}

/// Outcome of [`verify_product_eigenbasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProductBasisReport {
    pub separable: bool,
    /// Distinct nonzero eigenvalues examined.
    pub eigenspaces: usize,
    /// Product vectors extracted (equals the rank when `separable`).
    pub product_vectors: usize,
    /// Smallest `<φ|P|φ>` reached by an extracted product vector `φ`
    /// against the remaining eigenspace projector `P`.
    pub worst_fidelity: f64,
}

const PRODUCT_FIDELITY_TOL: f64 = 1e-9;
const EIGENSPACE_TOL: f64 = 1e-9;

/// Checks whether every eigenspace of `rho` with eigenvalue above the support
/// cutoff has an orthonormal basis of product vectors. A positive answer
/// writes `rho` as a mixture of product projectors, so `rho` is fully
/// separable.
///
/// Degenerate eigenspaces are handled by greedy extraction: find a product
/// vector inside the eigenspace, remove it, repeat.
pub fn verify_product_eigenbasis(rho: &DensityOp) -> Result<ProductBasisReport> {
    let n = rho.n_qubits();
    let eig = hermitian_eig(rho.matrix())?;
    let support = eig.support_indices();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &support {
        match groups.last_mut() {
            Some(gr) if (eig.values[i] - eig.values[gr[0]]).abs() <= EIGENSPACE_TOL => gr.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let mut report = ProductBasisReport {
        separable: true,
        eigenspaces: groups.len(),
        product_vectors: 0,
        worst_fidelity: 1.0,
    };
    for (gi, group) in groups.iter().enumerate() {
        let mut basis = DMatrix::from_fn(rho.dim(), group.len(), |row, col| {
            eig.vectors[(row, group[col])]
        });
        while basis.ncols() > 0 {
            let seed = 0x5eed_0000 + (gi as u64) * 4096 + report.product_vectors as u64;
            let best = best_product(n, &basis, 16, seed);
            report.worst_fidelity = report.worst_fidelity.min(best.value);
            if best.value < 1.0 - PRODUCT_FIDELITY_TOL {
                report.separable = false;
                return Ok(report);
            }
            let phi = product_vector(&best.factors);
            basis = deflate(&basis, &phi);
            report.product_vectors += 1;
        }
    }
    Ok(report)
}

/// Orthonormal basis of `span(basis) ∩ φ^⊥`, assuming `φ` lies in the span.
fn deflate(basis: &DMatrix<C64>, phi: &DVector<C64>) -> DMatrix<C64> {
    let overlaps = phi.adjoint() * basis;
    let projected = basis - phi * overlaps;
    let gram = projected.adjoint() * &projected;
    let eig = SymmetricEigen::new(gram);
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > 0.5)
        .collect();
    let mut out = DMatrix::zeros(basis.nrows(), keep.len());
    for (col, &i) in keep.iter().enumerate() {
        let v = &projected * eig.eigenvectors.column(i) / r(eig.eigenvalues[i].sqrt());
        out.set_column(col, &v);
    }
    out
}

#[derive(Clone, Debug)]
struct ProductOptimum {
    value: f64,
    factors: Vec<[C64; 2]>,
}

fn product_vector(factors: &[[C64; 2]]) -> DVector<C64> {
    let mut v = vec![r(1.0)];
    for f in factors {
        v = v.iter().flat_map(|a| [a * f[0], a * f[1]]).collect();
    }
    DVector::from_vec(v)
}

/// Index of the full register obtained by inserting bit `a` for the qubit at
/// `shift` into a reduced index `j`.
#[inline]
fn insert_bit(j: usize, shift: usize, a: usize) -> usize {
    ((j >> shift) << (shift + 1)) | (a << shift) | (j & ((1 << shift) - 1))
}

/// Coordinate ascent of `||E^† φ||^2` over product vectors `φ`, where the
/// columns of `E` are orthonormal. Each single-site step solves a 2x2
/// Hermitian eigenproblem exactly, so the objective never decreases.
fn ascend(n: usize, basis: &DMatrix<C64>, mut factors: Vec<[C64; 2]>) -> ProductOptimum {
    let m = basis.ncols();
    let mut value = f64::NEG_INFINITY;
    for _ in 0..MAX_SWEEPS {
        let before = value;
        for q in 0..n {
            let shift = bit_shift(n, q);
            let rest = product_vector(
                &factors
                    .iter()
                    .enumerate()
                    .filter(|&(s, _)| s != q)
                    .map(|(_, f)| *f)
                    .collect::<Vec<_>>(),
            );
            // g[a][k] = <e_k | a_q ⊗ rest>
            let mut g = [vec![r(0.0); m], vec![r(0.0); m]];
            for (a, ga) in g.iter_mut().enumerate() {
                for (k, gk) in ga.iter_mut().enumerate() {
                    let col = basis.column(k);
                    let mut acc = r(0.0);
                    for (j, rj) in rest.iter().enumerate() {
                        acc += col[insert_bit(j, shift, a)].conj() * rj;
                    }
                    *gk = acc;
                }
            }
            // local quadratic form M[a][b] = Σ_k conj(g[a][k]) g[b][k]
            let p: f64 = g[0].iter().map(|z| z.norm_sqr()).sum();
            let s: f64 = g[1].iter().map(|z| z.norm_sqr()).sum();
            let w: C64 = g[0].iter().zip(&g[1]).map(|(x, y)| x.conj() * y).sum();
            let half = 0.5 * (p - s);
            let top = 0.5 * (p + s) + (half * half + w.norm_sqr()).sqrt();
            factors[q] = top_eigenvector(p, s, w, top);
            value = top;
        }
        if value - before <= SWEEP_TOL {
            break;
        }
    }
    ProductOptimum { value, factors }
}

/// Unit eigenvector of `[[p, w], [conj(w), s]]` for eigenvalue `top`.
fn top_eigenvector(p: f64, s: f64, w: C64, top: f64) -> [C64; 2] {
    if w.norm() <= 1e-300 {
        return if p >= s {
            [r(1.0), r(0.0)]
        } else {
            [r(0.0), r(1.0)]
        };
    }
    // rows: p x + w y = top x  →  (x, y) ∝ (w, top - p); near-degenerate
    // cases use the second row instead.
    let (x, y) = if (top - p).abs() >= (top - s).abs() {
        (w, r(top - p))
    } else {
        (r(top - s), w.conj())
    };
    let norm = (x.norm_sqr() + y.norm_sqr()).sqrt();
    [x / norm, y / norm]
}

fn random_factors(n: usize, rng: &mut impl Rng) -> Vec<[C64; 2]> {
    BlochProduct::sample(n, rng).factors()
}

/// Best optimum over `restarts` seeded restarts; ties go to the lowest restart index.
fn best_product(n: usize, basis: &DMatrix<C64>, restarts: usize, seed: u64) -> ProductOptimum {
    (0..restarts.max(1))
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            (i, ascend(n, basis, random_factors(n, &mut rng)))
        })
        .reduce_with(|a, b| {
            if b.1.value > a.1.value || (b.1.value == a.1.value && b.0 < a.0) {
                b
            } else {
                a
            }
        })
        .map(|(_, opt)| opt)
        .expect("at least one restart")
}

/// Maximum of `|<ψ|τ>|^2` over pure product states `τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductOverlap {
    pub value: f64,
    pub argmax: BlochProduct,
}

/// Maximizes `<ψ|τ|ψ>` over product states by alternating single-site
/// updates, keeping the best of `restarts` seeded random starts.
pub fn max_product_overlap(state: &Ket, restarts: usize, seed: u64) -> Result<ProductOverlap> {
    if restarts == 0 {
        return Err(Error::OutOfRange {
            name: "restarts",
            value: 0.0,
            range: ">= 1",
        });
    }
    let basis = DMatrix::from_column_slice(state.dim(), 1, state.amplitudes());
    let best = best_product(state.n_qubits(), &basis, restarts, seed);
    Ok(ProductOverlap {
        value: best.value,
        argmax: BlochProduct::from_factors(&best.factors),
    })
}

/// One grid point of the two-qubit overlap surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub a: f64,
    pub b: f64,
    /// `2 Tr[σ₂ τ]` for `τ = |αβ><αβ|`, `α = a|0> + sqrt(1-a²)|1>`.
    pub value: f64,
}

/// `2 Tr[σ₂ τ]` over a `resolution x resolution` grid of real amplitudes in `[0, 1]`.
pub fn overlap_surface(resolution: usize) -> Result<Vec<SurfacePoint>> {
    if resolution < 2 {
        return Err(Error::OutOfRange {
            name: "resolution",
            value: resolution as f64,
            range: ">= 2",
        });
    }
    let psi = cluster_state(&QubitGraph::chain(2)?)?;
    let step = 1.0 / (resolution - 1) as f64;
    let mut out = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        let a = (i as f64 * step).min(1.0);
        for j in 0..resolution {
            let b = (j as f64 * step).min(1.0);
            let tau = Ket::product(&[
                [r(a), r((1.0 - a * a).max(0.0).sqrt())],
                [r(b), r((1.0 - b * b).max(0.0).sqrt())],
            ])?;
            out.push(SurfacePoint {
                a,
                b,
                value: 2.0 * psi.inner(&tau).norm_sqr(),
            });
        }
    }
    Ok(out)
}

/// Writes surface points as `a,b,value` CSV with `\n` line endings and
/// round-trip floats.
pub fn write_surface_csv<W: std::io::Write>(points: &[SurfacePoint], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["a", "b", "value"])?;
    for p in points {
        w.write_record([
            format!("{:?}", p.a),
            format!("{:?}", p.b),
            format!("{:?}", p.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Both sides of the chain-growth factorization for one product state `τ`
/// on `k + 2` qubits: `<ψ_{k+2}|τ|ψ_{k+2}>` and
/// `<ψ_k|τ_k|ψ_k> · <ψ_2|τ_2|ψ_2>`.
pub fn factorization_terms(k: usize, tau: &BlochProduct) -> Result<(f64, f64)> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::OddQubitCount(k));
    }
    if tau.n() != k + 2 {
        return Err(Error::DimensionMismatch {
            expected: k + 2,
            found: tau.n(),
        });
    }
    let full = cluster_state(&QubitGraph::chain(k + 2)?)?;
    let left = cluster_state(&QubitGraph::chain(k)?)?;
    let right = cluster_state(&QubitGraph::chain(2)?)?;
    let (tau_k, tau_2) = tau.split_at(k);
    let lhs = full.inner(&tau.ket()?).norm_sqr();
    let rhs = left.inner(&tau_k.ket()?).norm_sqr() * right.inner(&tau_2.ket()?).norm_sqr();
    Ok((lhs, rhs))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorizationReport {
    pub k: usize,
    pub trials: usize,
    pub max_deviation: f64,
    pub worst_sample: BlochProduct,
    pub worst_lhs: f64,
    pub worst_rhs: f64,
}

/// Largest `|lhs - rhs|` of [`factorization_terms`] over random product pairs.
pub fn factorization_check(k: usize, trials: usize, seed: u64) -> Result<FactorizationReport> {
    if k + 2 > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits {
            qubits: k + 2,
            max: MAX_DENSE_QUBITS,
        });
    }
    if trials == 0 {
        return Err(Error::OutOfRange {
            name: "trials",
            value: 0.0,
            range: ">= 1",
        });
    }
    let rows: Vec<(BlochProduct, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let tau = BlochProduct::sample(k, &mut rng).join(&BlochProduct::sample(2, &mut rng));
            let (lhs, rhs) = factorization_terms(k, &tau)?;
            Ok((tau, lhs, rhs))
        })
        .collect::<Result<_>>()?;
    let (tau, lhs, rhs) = rows
        .into_iter()
        .reduce(|a, b| {
            if (b.1 - b.2).abs() > (a.1 - a.2).abs() {
                b
            } else {
                a
            }
        })
        .expect("trials >= 1");
    Ok(FactorizationReport {
        k,
        trials,
        max_deviation: (lhs - rhs).abs(),
        worst_sample: tau,
        worst_lhs: lhs,
        worst_rhs: rhs,
    })
}
