//! Relative entropy and its directional derivative at a candidate closest
//! separable state.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::graph::{cluster_state, QubitGraph};
use crate::rng::stream_rng;
use crate::separable::{
    closest_separable_pure, max_product_overlap, BlochProduct, DEFAULT_RESTARTS,
};
use crate::tensor::{hermitian_eig, DensityOp, HermitianEigen, Ket, C64, MAX_DENSE_QUBITS};

/// Certificates pass when every sampled gradient is at least this value.
pub const GRADIENT_TOLERANCE: f64 = -1e-8;
pub const DEFAULT_GRADIENT_SAMPLES: usize = 1000;
/// Weight of `σ` outside the support of `ρ` above which `S(σ||ρ)` is infinite.
pub const SUPPORT_LEAK_TOL: f64 = 1e-10;
/// Tolerance on `E = |A|` for pure cluster states.
pub const PREDICTION_TOL: f64 = 1e-9;

fn check_pair(sigma: &DensityOp, rho: &DensityOp) -> Result<()> {
    if sigma.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

/// `<v_i|σ|v_i>` for every eigenvector `v_i` of `ρ`.
fn populations(sigma: &DensityOp, eig: &HermitianEigen) -> Vec<f64> {
    let sv = sigma.matrix().as_matrix() * &eig.vectors;
    (0..eig.values.len())
        .map(|i| eig.vectors.column(i).dotc(&sv.column(i)).re)
        .collect()
}

fn entropy_term(eig: &HermitianEigen) -> f64 {
    eig.support_indices()
        .into_iter()
        .map(|i| {
            let p = eig.values[i];
            p * p.log2()
        })
        .sum()
}

/// `S(σ||ρ) = Tr[σ log2 σ - σ log2 ρ]` in bits, with `0 log 0 = 0`.
///
/// Returns `f64::INFINITY` when more than [`SUPPORT_LEAK_TOL`] of `σ`'s
/// weight lies in the kernel of `ρ`.
pub fn relative_entropy(sigma: &DensityOp, rho: &DensityOp) -> Result<f64> {
    check_pair(sigma, rho)?;
    let sigma_eig = hermitian_eig(sigma.matrix())?;
    let rho_eig = hermitian_eig(rho.matrix())?;
    let support = rho_eig.support_indices();
    let pops = populations(sigma, &rho_eig);
    let inside: f64 = support.iter().map(|&i| pops[i]).sum();
    let leak = sigma.matrix().trace().re - inside;
    if leak > SUPPORT_LEAK_TOL {
        return Ok(f64::INFINITY);
    }
    let cross: f64 = support
        .iter()
        .map(|&i| pops[i] * rho_eig.values[i].log2())
        .sum();
    Ok(entropy_term(&sigma_eig) - cross)
}

/// First divided difference of the natural logarithm.
fn log_divided_difference(a: f64, b: f64) -> f64 {
    let gap = a - b;
    if gap.abs() <= 1e-9 * a.max(b) {
        2.0 / (a + b)
    } else {
        (a.ln() - b.ln()) / gap
    }
}

/// Precomputed state for evaluating `∂/∂x S(σ||(1-x)ρ + xτ)` at `x = 0` for
/// many directions `τ`.
///
/// The derivative is `Tr[σ D log(ρ)[ρ - τ]]` in natural-log units, where the
/// Fréchet derivative of the logarithm acts in `ρ`'s eigenbasis by scaling
/// entry `(i, j)` with the divided difference `(ln λ_i - ln λ_j) / (λ_i - λ_j)`.
/// Only the support of `ρ` contributes because `σ` lives inside it.
#[derive(Clone, Debug)]
pub struct GradientProbe {
    /// Support eigenvectors of `ρ` (columns).
    support: DMatrix<C64>,
    /// `G_ij = conj(σ̃_ij) F_ij` so that the τ term is `Σ_ij G_ij w_i conj(w_j)`.
    kernel: DMatrix<C64>,
    /// `Σ_ij σ̃_ji (Λ)_ij F_ij = Tr σ̃`.
    base: f64,
    n_qubits: usize,
}

impl GradientProbe {
    pub fn new(sigma: &DensityOp, rho: &DensityOp) -> Result<Self> {
        check_pair(sigma, rho)?;
        let eig = hermitian_eig(rho.matrix())?;
        let idx = eig.support_indices();
        let d = rho.dim();
        let rank = idx.len();
        let support = DMatrix::from_fn(d, rank, |row, col| eig.vectors[(row, idx[col])]);
        let sigma_t = support.adjoint() * sigma.matrix().as_matrix() * &support;
        let leak = sigma.matrix().trace().re - sigma_t.trace().re;
        if leak > SUPPORT_LEAK_TOL {
            return Err(Error::SupportViolation(leak));
        }
        let lambdas: Vec<f64> = idx.iter().map(|&i| eig.values[i]).collect();
        // σ̃_ji = conj(σ̃_ij) for Hermitian σ
        let kernel = DMatrix::from_fn(rank, rank, |i, j| {
            sigma_t[(i, j)].conj() * log_divided_difference(lambdas[i], lambdas[j])
        });
        let base = sigma_t.trace().re;
        Ok(Self {
            support,
            kernel,
            base,
            n_qubits: rho.n_qubits(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Directional derivative toward a pure state `τ = |t><t|`, in nats.
    pub fn gradient_pure(&self, t: &Ket) -> f64 {
        let w: DVector<C64> = self.support.adjoint() * t.as_vector();
        // Σ_ij G_ij w_i conj(w_j) = wᵀ (G conj(w))
        let quad: C64 = (&self.kernel * w.map(|z| z.conj()))
            .iter()
            .zip(w.iter())
            .map(|(a, b)| a * b)
            .sum();
        self.base - quad.re
    }

    /// Directional derivative toward an arbitrary state `τ`, in nats.
    pub fn gradient(&self, tau: &DensityOp) -> f64 {
        let tt = self.support.adjoint() * tau.matrix().as_matrix() * &self.support;
        let rank = tt.nrows();
        let mut quad = C64::new(0.0, 0.0);
        for i in 0..rank {
            for j in 0..rank {
                quad += self.kernel[(i, j)] * tt[(i, j)];
            }
        }
        self.base - quad.re
    }
}

/// `∂/∂x S(σ||(1-x)ρ + xτ)` at `x = 0`, in nats (the integral form
/// `Tr[σ ∫ (ρ+t)^{-1}(ρ-τ)(ρ+t)^{-1} dt]`). Divide by `ln 2` for bits.
pub fn directional_gradient(sigma: &DensityOp, rho: &DensityOp, tau: &DensityOp) -> Result<f64> {
    check_pair(sigma, tau)?;
    Ok(GradientProbe::new(sigma, rho)?.gradient(tau))
}

/// Forward difference `(S(σ||(1-x)ρ+xτ) - S(σ||ρ)) / x`, converted to nats.
pub fn finite_difference_gradient(
    sigma: &DensityOp,
    rho: &DensityOp,
    tau: &DensityOp,
    step: f64,
) -> Result<f64> {
    let moved = rho.mix(tau, step)?;
    let s1 = relative_entropy(sigma, &moved)?;
    let s0 = relative_entropy(sigma, rho)?;
    Ok((s1 - s0) / step * LN_2)
}

/// Result of sampling directional gradients over random product directions.
#[derive(Clone, Debug)]
pub struct GradientCertificate {
    pub candidate: DensityOp,
    pub samples: usize,
    /// Smallest sampled gradient (nats).
    pub min_gradient: f64,
    pub worst_sample: BlochProduct,
    /// For pure `σ = |ψ><ψ|` that is an eigenvector of the candidate with
    /// eigenvalue `μ`: `1 - (max product overlap) / μ`.
    pub analytic_min: Option<f64>,
    /// Largest gap between the spectral gradient and `1 - Tr[στ]/μ` over
    /// the samples, when the closed form applies.
    pub closed_form_max_deviation: Option<f64>,
}

impl GradientCertificate {
    pub fn passed(&self) -> bool {
        self.min_gradient >= GRADIENT_TOLERANCE
    }
}

/// `(ψ, μ)` when `σ = |ψ><ψ|` and `ρψ = μψ`.
fn pure_eigenpair(sigma: &DensityOp, rho: &DensityOp) -> Result<Option<(Ket, f64)>> {
    if (sigma.purity() - 1.0).abs() > 1e-10 {
        return Ok(None);
    }
    let eig = hermitian_eig(sigma.matrix())?;
    let top = eig.values.len() - 1;
    let psi = Ket::normalized(eig.vectors.column(top).iter().copied().collect())?;
    let rho_psi = rho.matrix().as_matrix() * psi.as_vector();
    let mu = psi.as_vector().dotc(&rho_psi).re;
    let residual = (rho_psi - psi.as_vector() * C64::new(mu, 0.0)).norm();
    if mu <= 0.0 || residual > 1e-10 {
        return Ok(None);
    }
    Ok(Some((psi, mu)))
}

/// Samples `samples` Haar-random product directions (per-sample seeds derived
/// from `seed`) and records the smallest directional gradient.
pub fn gradient_scan(
    sigma: &DensityOp,
    rho: &DensityOp,
    samples: usize,
    seed: u64,
) -> Result<GradientCertificate> {
    if samples == 0 {
        return Err(Error::OutOfRange {
            name: "samples",
            value: 0.0,
            range: ">= 1",
        });
    }
    let probe = GradientProbe::new(sigma, rho)?;
    let closed = pure_eigenpair(sigma, rho)?;
    let n = rho.n_qubits();
    let rows: Vec<(usize, BlochProduct, f64, Option<f64>)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let tau = BlochProduct::sample(n, &mut rng);
            let t = tau.ket()?;
            let g = probe.gradient_pure(&t);
            let dev = closed
                .as_ref()
                .map(|(psi, mu)| (g - (1.0 - psi.inner(&t).norm_sqr() / mu)).abs());
            Ok((i, tau, g, dev))
        })
        .collect::<Result<_>>()?;
    let closed_form_max_deviation = closed
        .as_ref()
        .map(|_| rows.iter().filter_map(|r| r.3).fold(0.0, f64::max));
    let worst = rows
        .iter()
        .min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)))
        .expect("samples >= 1");
    let analytic_min = match &closed {
        Some((psi, mu)) => Some(1.0 - max_product_overlap(psi, DEFAULT_RESTARTS, seed)?.value / mu),
        None => None,
    };
    Ok(GradientCertificate {
        candidate: rho.clone(),
        samples,
        min_gradient: worst.2,
        worst_sample: worst.1.clone(),
        analytic_min,
        closed_form_max_deviation,
    })
}

/// Relative entropy of entanglement of a pure cluster state together with the
/// gradient certificate for its dephased closest separable state.
#[derive(Clone, Debug)]
pub struct PureClusterRee {
    pub entanglement_bits: f64,
    /// `|A|`, the size of the smaller color class.
    pub predicted_bits: f64,
    pub certificate: GradientCertificate,
}

pub fn ree_pure_cluster(g: &QubitGraph, samples: usize, seed: u64) -> Result<PureClusterRee> {
    if g.n() > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits {
            qubits: g.n(),
            max: MAX_DENSE_QUBITS,
        });
    }
    let sigma = cluster_state(g)?.projector()?;
    let rho = closest_separable_pure(g)?;
    let e = relative_entropy(&sigma, &rho)?;
    let predicted = g.class_a().len() as f64;
    if (e - predicted).abs() > PREDICTION_TOL || e.is_nan() {
        return Err(Error::PredictionMismatch {
            computed: e,
            predicted,
        });
    }
    let certificate = gradient_scan(&sigma, &rho, samples, seed)?;
    Ok(PureClusterRee {
        entanglement_bits: e,
        predicted_bits: predicted,
        certificate,
    })
}
