//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use cluster_ree::divergence::{gradient_scan, relative_entropy, GradientProbe};
use cluster_ree::graph::{
    cluster_state, gibbs_state, spectrum, thermal_state, QubitGraph, ThermalParams,
};
use cluster_ree::rng::stream_rng;
use cluster_ree::separable::{
    closest_separable_pure, max_product_overlap, operational_construction, overlap_surface,
    verify_product_eigenbasis, BlochProduct,
};
use cluster_ree::tensor::hermitian_eig;
use cluster_ree::thermal::{
    critical_omega_2qubit, critical_temperature, lambda_formula, lambda_star, linear_grid,
    mixture_candidate, omega_c, thermal_entanglement_curve, write_sweep_csv, SWEEP_HEADER,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn pure_scaling() -> Outcome {
    let start = Instant::now();
    let mut values = Vec::new();
    for n in [2, 4, 6, 8] {
        let g = QubitGraph::chain(n).map_err(err)?;
        let sigma = cluster_state(&g).and_then(|k| k.projector()).map_err(err)?;
        let rho = closest_separable_pure(&g).map_err(err)?;
        let e = relative_entropy(&sigma, &rho).map_err(err)?;
        let want = n as f64 / 2.0;
        ensure(
            (e - want).abs() <= 1e-9,
            format!("chain:{n} gave E = {e}, expected {want}"),
        )?;
        values.push(format!("{e:.12}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, format!("took {secs:.2} s"))?;
    Ok(format!("E = [{}] in {secs:.2} s", values.join(", ")))
}

fn lattice_scaling() -> Outcome {
    let mut values = Vec::new();
    for (rows, cols, want) in [(2, 2, 2.0), (2, 3, 3.0)] {
        let g = QubitGraph::lattice(rows, cols).map_err(err)?;
        let sigma = cluster_state(&g).and_then(|k| k.projector()).map_err(err)?;
        let rho = closest_separable_pure(&g).map_err(err)?;
        let e = relative_entropy(&sigma, &rho).map_err(err)?;
        ensure(
            (e - want).abs() <= 1e-9,
            format!("lattice:{rows}x{cols} gave E = {e}, expected {want}"),
        )?;
        values.push(format!("{rows}x{cols}: {e:.12}"));
    }
    Ok(values.join(", "))
}

fn trace_bounds() -> Outcome {
    let mut values = Vec::new();
    for n in [2, 4, 6] {
        let psi = cluster_state(&QubitGraph::chain(n).map_err(err)?).map_err(err)?;
        let best = max_product_overlap(&psi, 64, 2024).map_err(err)?;
        let want = (-(n as f64) / 2.0).exp2();
        ensure(
            (best.value - want).abs() <= 1e-6,
            format!("N = {n}: overlap {} vs {want}", best.value),
        )?;
        values.push(format!("N={n}: {:.9}", best.value));
    }
    // independent grid over real amplitudes on two qubits
    let resolution = 201;
    let step = 1.0 / (resolution - 1) as f64;
    let grid_max = overlap_surface(resolution)
        .map_err(err)?
        .iter()
        .map(|p| p.value / 2.0)
        .fold(f64::NEG_INFINITY, f64::max);
    ensure(
        (grid_max - 0.5).abs() <= step * step,
        format!("grid maximum {grid_max} is not 1/2 within {}", step * step),
    )?;
    Ok(format!("{}, grid max {grid_max:.9}", values.join(", ")))
}

fn gradient_certificates() -> Outcome {
    let mut values = Vec::new();
    for n in [2usize, 4, 6] {
        let g = QubitGraph::chain(n).map_err(err)?;
        let psi = cluster_state(&g).map_err(err)?;
        let sigma = psi.projector().map_err(err)?;
        let rho = closest_separable_pure(&g).map_err(err)?;
        let seed = 40 + n as u64;
        let cert = gradient_scan(&sigma, &rho, 1000, seed).map_err(err)?;
        ensure(
            cert.min_gradient >= -1e-8,
            format!("N = {n}: min gradient {}", cert.min_gradient),
        )?;
        // closed form 1 - 2^{N/2} Tr[στ] against the spectral gradient
        let probe = GradientProbe::new(&sigma, &rho).map_err(err)?;
        let scale = (n as f64 / 2.0).exp2();
        let mut worst: f64 = 0.0;
        for i in 0..1000 {
            let t = BlochProduct::sample(n, &mut stream_rng(seed, i))
                .ket()
                .map_err(err)?;
            let closed = 1.0 - scale * psi.inner(&t).norm_sqr();
            worst = worst.max((probe.gradient_pure(&t) - closed).abs());
        }
        ensure(
            worst <= 1e-7,
            format!("N = {n}: closed form off by {worst}"),
        )?;
        values.push(format!(
            "N={n}: min {:.3e}, closed-form gap {worst:.1e}",
            cert.min_gradient
        ));
    }
    Ok(values.join("; "))
}

fn critical_point() -> Outcome {
    let cp = critical_omega_2qubit().map_err(err)?;
    let want = 2f64.sqrt() - 1.0;
    ensure(
        (cp.omega_c - want).abs() <= 1e-10,
        format!("omega_c = {}", cp.omega_c),
    )?;
    let tc = critical_temperature(1.0, 1.0).map_err(err)?.t_c;
    let tc_want = 2.0 / (1.0 + 2f64.sqrt()).ln();
    ensure((tc - tc_want).abs() <= 1e-10, format!("T_c = {tc}"))?;
    Ok(format!("omega_c = {:.12}, T_c = {tc:.12}", cp.omega_c))
}

fn two_qubit_distances() -> Outcome {
    let g = QubitGraph::chain(2).map_err(err)?;
    let sigma = cluster_state(&g).and_then(|k| k.projector()).map_err(err)?;
    let a = relative_entropy(&sigma, &closest_separable_pure(&g).map_err(err)?).map_err(err)?;
    let b = relative_entropy(&sigma, &thermal_state(&g, omega_c()).map_err(err)?).map_err(err)?;
    ensure((a - 1.0).abs() <= 1e-9, format!("S(sigma||rho*) = {a}"))?;
    ensure(
        (b - 1.0).abs() <= 1e-9,
        format!("S(sigma||sigma(omega_c)) = {b}"),
    )?;
    Ok(format!("{a:.12}, {b:.12}"))
}

fn thermal_forms() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_spec: f64 = 0.0;
    for g in [
        QubitGraph::chain(4).map_err(err)?,
        QubitGraph::lattice(2, 2).map_err(err)?,
    ] {
        let n = g.n();
        for beta in [0.3, 0.7, 1.5] {
            let params = ThermalParams::new(1.0, beta);
            let product = thermal_state(&g, params.omega()).map_err(err)?;
            let gibbs = gibbs_state(&g, params).map_err(err)?;
            worst = worst.max(product.matrix().frobenius_distance(gibbs.matrix()));

            let w = params.omega();
            let mut expected = Vec::new();
            for k in 0..=n {
                let v =
                    (1.0 + w).powi((n - k) as i32) * (1.0 - w).powi(k as i32) / (1u64 << n) as f64;
                expected.extend(std::iter::repeat_n(
                    v,
                    binomial(n as u64, k as u64) as usize,
                ));
            }
            expected.sort_by(f64::total_cmp);
            let values = hermitian_eig(product.matrix()).map_err(err)?.values;
            ensure(values.len() == expected.len(), "spectrum length")?;
            for (a, b) in values.iter().zip(&expected) {
                worst_spec = worst_spec.max((a - b).abs());
            }
        }
    }
    ensure(
        worst <= 1e-10,
        format!("product vs Gibbs Frobenius {worst}"),
    )?;
    ensure(
        worst_spec <= 1e-10,
        format!("spectrum deviation {worst_spec}"),
    )?;
    Ok(format!("Frobenius {worst:.1e}, spectrum {worst_spec:.1e}"))
}

fn hamiltonian_spectrum() -> Outcome {
    let n = 6;
    let levels = spectrum(&QubitGraph::chain(n).map_err(err)?, 1.0).map_err(err)?;
    ensure(levels.len() == n + 1, format!("{} levels", levels.len()))?;
    for (k, level) in levels.iter().enumerate() {
        let energy = -(n as f64) + 2.0 * k as f64;
        let deg = binomial(n as u64, k as u64) as usize;
        ensure(
            (level.energy - energy).abs() <= 1e-9 && level.degeneracy == deg,
            format!(
                "level {k}: {} x{} vs {energy} x{deg}",
                level.energy, level.degeneracy
            ),
        )?;
    }
    let summary: Vec<String> = levels
        .iter()
        .map(|l| format!("{}x{}", l.energy.round(), l.degeneracy))
        .collect();
    Ok(summary.join(" "))
}

fn operational() -> Outcome {
    let mut values = Vec::new();
    for n in [2, 4, 6] {
        let joined = operational_construction(n).map_err(err)?;
        let dephased = closest_separable_pure(&QubitGraph::chain(n).map_err(err)?).map_err(err)?;
        let d = joined.matrix().frobenius_distance(dephased.matrix());
        ensure(d <= 1e-12, format!("N = {n}: Frobenius {d}"))?;
        let report = verify_product_eigenbasis(&joined).map_err(err)?;
        ensure(
            report.separable,
            format!("N = {n}: no product eigenbasis found"),
        )?;
        values.push(format!("N={n}: {d:.1e}"));
    }
    Ok(values.join(", "))
}

fn figure_three() -> Outcome {
    let g = QubitGraph::chain(2).map_err(err)?;
    let grid = linear_grid(omega_c(), 1.0, 50).map_err(err)?;
    let rows = thermal_entanglement_curve(&g, &grid, 1.0, 1.0).map_err(err)?;
    ensure(rows.len() == 50, "row count")?;
    let first = rows[0].entanglement_bits;
    let last = rows[49].entanglement_bits;
    ensure(first.abs() <= 1e-9, format!("first row E = {first}"))?;
    ensure((last - 1.0).abs() <= 1e-9, format!("last row E = {last}"))?;
    ensure(
        rows.windows(2)
            .all(|p| p[1].entanglement_bits > p[0].entanglement_bits),
        "curve is not increasing",
    )?;
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance_sweep.csv");
    let file = std::fs::File::create(&path).map_err(err)?;
    write_sweep_csv(&rows, file).map_err(err)?;
    let text = std::fs::read_to_string(&path).map_err(err)?;
    ensure(
        text.lines().next() == Some(SWEEP_HEADER.join(",").as_str()),
        "CSV header",
    )?;
    ensure(text.lines().count() == 51, "CSV row count")?;
    Ok(format!(
        "E from {first:.1e} to {last:.12}, CSV at {}",
        path.display()
    ))
}

fn lambda_behaviour() -> Outcome {
    let near = lambda_star(omega_c() + 1e-3).map_err(err)?;
    ensure(
        near.lambda_star > 0.99,
        format!("lambda* at omega_c + 1e-3 is {}", near.lambda_star),
    )?;
    let formula = lambda_formula(omega_c()).abs();
    ensure(
        (formula - 1.0).abs() <= 1e-12,
        format!("|formula| at omega_c is {formula}"),
    )?;
    let g = QubitGraph::chain(2).map_err(err)?;
    let mut failures = Vec::new();
    let mut values = Vec::new();
    for (i, omega) in [0.6, 0.8, 0.95].into_iter().enumerate() {
        let res = lambda_star(omega).map_err(err)?;
        let sigma = thermal_state(&g, omega).map_err(err)?;
        let candidate = mixture_candidate(res.lambda_star).map_err(err)?;
        let cert = gradient_scan(&sigma, &candidate, 500, 700 + i as u64).map_err(err)?;
        let line = format!(
            "omega {omega}: lambda* {:.9}, min gradient {:.6e}",
            res.lambda_star, cert.min_gradient
        );
        if !cert.passed() {
            failures.push(line.clone());
        }
        values.push(line);
    }
    ensure(
        failures.is_empty(),
        format!(
            "lambda* near omega_c {:.6}; gradient scan negative: {}",
            near.lambda_star,
            failures.join("; ")
        ),
    )?;
    Ok(format!(
        "lambda* near omega_c {:.6}; {}",
        near.lambda_star,
        values.join("; ")
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("pure-state scaling", pure_scaling),
        ("higher dimension", lattice_scaling),
        ("trace bounds", trace_bounds),
        ("gradient certificates", gradient_certificates),
        ("critical point", critical_point),
        ("two-qubit distances", two_qubit_distances),
        ("thermal-form equivalence", thermal_forms),
        ("hamiltonian spectrum", hamiltonian_spectrum),
        ("operational construction", operational),
        ("thermal entanglement curve", figure_three),
        ("mixing parameter", lambda_behaviour),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
