//! Critical temperature of the two-qubit thermal cluster state, thermal
//! entanglement curves and the mixing parameter that interpolates between the
//! pure and critical closest separable states.

use rayon::prelude::*;

use crate::divergence::relative_entropy;
use crate::error::{Error, Result};
use crate::graph::{temperature_for_omega, thermal_state, QubitGraph};
use crate::separable::closest_separable_pure;
use crate::tensor::{hermitian_eig, partial_transpose, DensityOp};

/// Bisection tolerance for the critical point.
pub const BISECTION_TOL: f64 = 1e-12;
/// Golden-section tolerance for the mixing parameter.
pub const GOLDEN_TOL: f64 = 1e-10;
/// Largest register for which [`ppt_report`] enumerates every cut.
pub const MAX_PPT_QUBITS: usize = 10;
/// Sweeps take the minimum over every cut up to this size and only the
/// color-class cut beyond it.
pub const SWEEP_ALL_CUTS_MAX: usize = 8;

/// `√2 - 1`, the positive root of `ω² + 2ω - 1 = 0`.
pub fn omega_c() -> f64 {
    2f64.sqrt() - 1.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint {
    pub omega_c: f64,
    pub t_c: f64,
    pub coupling: f64,
    pub k_b: f64,
}

impl CriticalPoint {
    /// Pairs `omega_c` with the temperature solving `tanh(J / (k_B T)) = omega_c`.
    pub fn from_omega(omega_c: f64, coupling: f64, k_b: f64) -> Result<Self> {
        check_positive("J", coupling)?;
        check_positive("k_B", k_b)?;
        if !(omega_c > 0.0 && omega_c < 1.0) {
            return Err(Error::OutOfRange {
                name: "omega_c",
                value: omega_c,
                range: "(0, 1)",
            });
        }
        Ok(Self {
            omega_c,
            t_c: temperature_for_omega(omega_c, coupling, k_b),
            coupling,
            k_b,
        })
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            range: "(0, inf)",
        })
    }
}

/// Smallest eigenvalue of the partial transpose over `subset`.
pub fn min_ppt_eigenvalue(rho: &DensityOp, subset: &[usize]) -> Result<f64> {
    let pt = partial_transpose(rho.matrix(), subset)?;
    Ok(hermitian_eig(&pt)?.values[0])
}

/// Critical `ω` of the two-qubit chain, located by bisection on the sign of
/// the smallest partial-transpose eigenvalue and checked against `√2 - 1`.
pub fn critical_omega_2qubit() -> Result<CriticalPoint> {
    let g = QubitGraph::chain(2)?;
    let f = |w: f64| -> Result<f64> { min_ppt_eigenvalue(&thermal_state(&g, w)?, &[0]) };
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    if (root - omega_c()).abs() > 1e-10 {
        return Err(Error::PredictionMismatch {
            computed: root,
            predicted: omega_c(),
        });
    }
    CriticalPoint::from_omega(root, 1.0, 1.0)
}

/// `T_c = -2J / (k_B ln(√2 - 1))`.
pub fn critical_temperature(coupling: f64, k_b: f64) -> Result<CriticalPoint> {
    check_positive("J", coupling)?;
    check_positive("k_B", k_b)?;
    Ok(CriticalPoint {
        omega_c: omega_c(),
        t_c: -2.0 * coupling / (k_b * omega_c().ln()),
        coupling,
        k_b,
    })
}

/// One bipartition and the smallest eigenvalue of the partial transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct PptCut {
    /// The side containing qubit 0.
    pub subset: Vec<usize>,
    pub min_eigenvalue: f64,
}

impl PptCut {
    pub fn is_ppt(&self) -> bool {
        self.min_eigenvalue >= -1e-10
    }
}

fn cut_masks(n: usize) -> impl Iterator<Item = usize> {
    let full = (1usize << n) - 1;
    // qubit 0 sits in the top bit of the mask so each cut appears once
    let top = 1usize << (n - 1);
    (1..full).filter(move |m| m & top != 0)
}

fn mask_to_subset(n: usize, mask: usize) -> Vec<usize> {
    (0..n).filter(|&q| mask >> (n - 1 - q) & 1 == 1).collect()
}

/// Smallest partial-transpose eigenvalue for every bipartition, each cut
/// listed once by the side that contains qubit 0. PPT is necessary for
/// separability across a cut, never sufficient on its own.
pub fn ppt_report(rho: &DensityOp) -> Result<Vec<PptCut>> {
    let n = rho.n_qubits();
    if n > MAX_PPT_QUBITS {
        return Err(Error::TooManyQubits {
            qubits: n,
            max: MAX_PPT_QUBITS,
        });
    }
    if n < 2 {
        return Ok(Vec::new());
    }
    let masks: Vec<usize> = cut_masks(n).collect();
    masks
        .into_par_iter()
        .map(|mask| {
            let subset = mask_to_subset(n, mask);
            let min_eigenvalue = min_ppt_eigenvalue(rho, &subset)?;
            Ok(PptCut {
                subset,
                min_eigenvalue,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub omega: f64,
    pub temperature: f64,
    pub entanglement_bits: f64,
    pub min_ppt_eig: f64,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::OutOfRange {
            name: "omega grid length",
            value: 0.0,
            range: ">= 1",
        });
    }
    for (i, &w) in grid.iter().enumerate() {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::OutOfRange {
                name: "omega",
                value: w,
                range: "[0, 1]",
            });
        }
        if i > 0 && w <= grid[i - 1] {
            return Err(Error::OutOfRange {
                name: "omega grid",
                value: w,
                range: "strictly increasing",
            });
        }
    }
    Ok(())
}

/// `omega_min + i (omega_max - omega_min) / (steps - 1)` for `i < steps`,
/// with the last point pinned to `omega_max`.
pub fn linear_grid(omega_min: f64, omega_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 || omega_max.partial_cmp(&omega_min) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::OutOfRange {
            name: "steps",
            value: steps as f64,
            range: ">= 2 with omega_max > omega_min",
        });
    }
    let h = (omega_max - omega_min) / (steps - 1) as f64;
    let mut grid: Vec<f64> = (0..steps).map(|i| omega_min + i as f64 * h).collect();
    grid[steps - 1] = omega_max;
    Ok(grid)
}

fn sweep_ppt(g: &QubitGraph, rho: &DensityOp) -> Result<f64> {
    if g.n() <= SWEEP_ALL_CUTS_MAX {
        Ok(ppt_report(rho)?
            .iter()
            .map(|c| c.min_eigenvalue)
            .fold(f64::INFINITY, f64::min))
    } else {
        min_ppt_eigenvalue(rho, &g.class_a())
    }
}

/// `S(σ(ω) || σ(ω_c))` across `grid`, with the thermal state at `ω_c = √2 - 1`
/// as the reference.
///
/// For two qubits this is the entanglement of the thermal cluster state. For
/// larger graphs the reference is not known to be separable-optimal, so the
/// values are an upper-bound proxy rather than a certified entanglement.
/// `min_ppt_eig` is the minimum over all cuts for up to
/// [`SWEEP_ALL_CUTS_MAX`] qubits and the color-class cut beyond that.
pub fn thermal_entanglement_curve(
    g: &QubitGraph,
    grid: &[f64],
    coupling: f64,
    k_b: f64,
) -> Result<Vec<SweepRow>> {
    check_grid(grid)?;
    check_positive("J", coupling)?;
    check_positive("k_B", k_b)?;
    let reference = thermal_state(g, omega_c())?;
    grid.par_iter()
        .map(|&omega| {
            let sigma = thermal_state(g, omega)?;
            Ok(SweepRow {
                omega,
                temperature: temperature_for_omega(omega, coupling, k_b),
                entanglement_bits: relative_entropy(&sigma, &reference)?,
                min_ppt_eig: sweep_ppt(g, &sigma)?,
            })
        })
        .collect()
}

pub const SWEEP_HEADER: [&str; 4] = ["omega", "temperature", "entanglement_bits", "min_ppt_eig"];

/// Writes sweep rows as CSV with `\n` line endings and round-trip floats.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        w.write_record([
            format!("{:?}", row.omega),
            format!("{:?}", row.temperature),
            format!("{:?}", row.entanglement_bits),
            format!("{:?}", row.min_ppt_eig),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `(1 - λ) ρ*₂ + λ σ₂(ω_c)`.
pub fn mixture_candidate(lambda: f64) -> Result<DensityOp> {
    let g = QubitGraph::chain(2)?;
    closest_separable_pure(&g)?.mix(&thermal_state(&g, omega_c())?, lambda)
}

/// The printed closed form `2 / ((√2 - 2)(3 + ω))`.
pub fn lambda_formula(omega: f64) -> f64 {
    2.0 / ((2f64.sqrt() - 2.0) * (3.0 + omega))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaResult {
    pub omega: f64,
    pub lambda_star: f64,
    pub objective_at_min: f64,
    /// `|2 / ((√2 - 2)(3 + ω))|`.
    pub formula_value: f64,
    /// The same expression with its sign kept.
    pub formula_signed: f64,
    /// Range of `λ` on which the objective stays within 1e-12 of its
    /// minimum on a 101-point grid, when that range has more than one point.
    pub flat_interval: Option<(f64, f64)>,
}

fn golden_section(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > GOLDEN_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Minimizes `S(σ₂(ω) || (1 - λ) ρ*₂ + λ σ₂(ω_c))` over `λ ∈ [0, 1]`.
///
/// Accepts `ω ∈ [ω_c, 1]`. At `ω = 1` the objective is constant and the
/// whole interval is reported as flat.
pub fn lambda_star(omega: f64) -> Result<LambdaResult> {
    if !(omega >= omega_c() && omega <= 1.0) {
        return Err(Error::OutOfRange {
            name: "omega",
            value: omega,
            range: "[sqrt(2) - 1, 1]",
        });
    }
    let g = QubitGraph::chain(2)?;
    let sigma = thermal_state(&g, omega)?;
    let objective = |lambda: f64| relative_entropy(&sigma, &mixture_candidate(lambda)?);

    let grid: Vec<(f64, f64)> = (0..=100)
        .map(|i| {
            let l = i as f64 / 100.0;
            Ok((l, objective(l)?))
        })
        .collect::<Result<_>>()?;
    let grid_min = grid.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let near: Vec<f64> = grid
        .iter()
        .filter(|p| p.1 - grid_min <= 1e-12)
        .map(|p| p.0)
        .collect();
    let flat_interval = (near.len() > 1).then(|| (near[0], near[near.len() - 1]));

    let mut best = golden_section(objective, 0.0, 1.0)?;
    let mut best_value = objective(best)?;
    // the minimum of a convex function may sit on an endpoint
    for edge in [0.0, 1.0] {
        let v = objective(edge)?;
        if v < best_value {
            best = edge;
            best_value = v;
        }
    }
    let signed = lambda_formula(omega);
    Ok(LambdaResult {
        omega,
        lambda_star: best,
        objective_at_min: best_value,
        formula_value: signed.abs(),
        formula_signed: signed,
        flat_interval,
    })
}
