//! Command-line driver for the cluster-ree library.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use cluster_ree::divergence::{
    gradient_scan, ree_pure_cluster, GradientCertificate, DEFAULT_GRADIENT_SAMPLES,
};
use cluster_ree::graph::{
    cluster_state, make_graph, spectrum, thermal_state, GraphSpec, QubitGraph,
};
use cluster_ree::separable::{
    closest_separable_pure, factorization_check, max_product_overlap, overlap_surface,
    write_surface_csv, BlochProduct, DEFAULT_RESTARTS,
};
use cluster_ree::tensor::DensityOp;
use cluster_ree::thermal::{
    critical_temperature, lambda_star, linear_grid, mixture_candidate, omega_c,
    thermal_entanglement_curve, write_sweep_csv,
};

#[derive(Parser, Debug)]
#[command(
    name = "cluster-ree",
    version,
    about = "Relative entropy of entanglement for cluster states"
)]
struct Cli {
    /// Worker threads (defaults to the rayon default).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Entanglement of the pure cluster state and its gradient certificate.
    Ree {
        #[arg(long)]
        graph: GraphSpec,
        #[arg(long, default_value_t = DEFAULT_GRADIENT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Thermal entanglement curve as CSV.
    Sweep {
        #[arg(long)]
        graph: GraphSpec,
        #[arg(long, default_value_t = omega_c())]
        omega_min: f64,
        #[arg(long, default_value_t = 1.0)]
        omega_max: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long = "J", default_value_t = 1.0)]
        coupling: f64,
        #[arg(long = "kB", default_value_t = 1.0)]
        k_b: f64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical ω and temperature.
    Critical {
        #[arg(long = "J", default_value_t = 1.0)]
        coupling: f64,
        #[arg(long = "kB", default_value_t = 1.0)]
        k_b: f64,
    },
    /// Directional-gradient certificate at a candidate separable state.
    Gradient {
        #[arg(long)]
        graph: GraphSpec,
        /// dephase, thermal-critical or mix:<λ> (two qubits only).
        #[arg(long, default_value = "dephase")]
        candidate: Candidate,
        /// Thermal ω of the target state; the pure cluster state when absent.
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_GRADIENT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Largest overlap of the cluster state with a product state.
    Overlap {
        #[arg(long)]
        graph: GraphSpec,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Optimal mixing between the pure and critical separable states.
    LambdaStar {
        #[arg(long)]
        omega: f64,
    },
    /// Two-qubit overlap surface over real amplitudes as CSV.
    Surface {
        #[arg(long, default_value_t = 201)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hamiltonian energy levels and degeneracies.
    Spectrum {
        #[arg(long)]
        graph: GraphSpec,
        #[arg(long = "J", default_value_t = 1.0)]
        coupling: f64,
    },
    /// Largest deviation from the chain-growth factorization.
    Factorize {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Candidate {
    Dephase,
    ThermalCritical,
    Mix(f64),
}

impl FromStr for Candidate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dephase" => Ok(Candidate::Dephase),
            "thermal-critical" => Ok(Candidate::ThermalCritical),
            _ => {
                let lambda = s
                    .strip_prefix("mix:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| {
                        format!("expected dephase, thermal-critical or mix:<lambda>, got {s}")
                    })?;
                if !(0.0..=1.0).contains(&lambda) {
                    return Err(format!("mixing weight {lambda} outside [0, 1]"));
                }
                Ok(Candidate::Mix(lambda))
            }
        }
    }
}

enum Outcome {
    Done,
    CertificateFailed,
}

fn verdict(cert: &GradientCertificate) -> (&'static str, Outcome) {
    if cert.passed() {
        ("PASS", Outcome::Done)
    } else {
        ("FAIL", Outcome::CertificateFailed)
    }
}

fn format_angles(p: &BlochProduct) -> String {
    p.angles()
        .iter()
        .map(|(t, f)| format!("({t:.9}, {f:.9})"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn print_certificate(cert: &GradientCertificate) {
    println!("samples = {}", cert.samples);
    println!("min gradient = {:.9}", cert.min_gradient);
    if let Some(a) = cert.analytic_min {
        println!("analytic min = {a:.9}");
    }
    if let Some(d) = cert.closed_form_max_deviation {
        println!("closed-form max deviation = {d:.3e}");
    }
    println!(
        "worst direction (theta, phi) = {}",
        format_angles(&cert.worst_sample)
    );
}

fn with_output(
    out: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn graph_of(spec: &GraphSpec) -> anyhow::Result<QubitGraph> {
    make_graph(spec).with_context(|| format!("building graph {spec}"))
}

fn run(command: Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Ree {
            graph,
            samples,
            seed,
        } => {
            let g = graph_of(&graph)?;
            let out = ree_pure_cluster(&g, samples, seed)?;
            println!(
                "graph = {graph} (n = {}, |A| = {})",
                g.n(),
                g.class_a().len()
            );
            println!("E = {:.9}", out.entanglement_bits);
            println!("predicted |A| = {:.9}", out.predicted_bits);
            print_certificate(&out.certificate);
            let (label, outcome) = verdict(&out.certificate);
            println!("{label}");
            Ok(outcome)
        }
        Command::Sweep {
            graph,
            omega_min,
            omega_max,
            steps,
            coupling,
            k_b,
            out,
        } => {
            let g = graph_of(&graph)?;
            let grid = linear_grid(omega_min, omega_max, steps)?;
            let rows = thermal_entanglement_curve(&g, &grid, coupling, k_b)?;
            with_output(out.as_deref(), |w| Ok(write_sweep_csv(&rows, w)?))?;
            if let Some(path) = out {
                eprintln!("wrote {} rows to {}", rows.len(), path.display());
            }
            Ok(Outcome::Done)
        }
        Command::Critical { coupling, k_b } => {
            let cp = critical_temperature(coupling, k_b)?;
            println!(
                "omega_c = {:.9}, T_c = {:.9} (J={coupling}, kB={k_b})",
                cp.omega_c, cp.t_c
            );
            Ok(Outcome::Done)
        }
        Command::Gradient {
            graph,
            candidate,
            omega,
            samples,
            seed,
        } => {
            let g = graph_of(&graph)?;
            let sigma: DensityOp = match omega {
                Some(w) => thermal_state(&g, w)?,
                None => cluster_state(&g)?.projector()?,
            };
            let rho = match candidate {
                Candidate::Dephase => closest_separable_pure(&g)?,
                Candidate::ThermalCritical => thermal_state(&g, omega_c())?,
                Candidate::Mix(lambda) => {
                    if g.n() != 2 {
                        bail!("mix:<lambda> candidates are defined for two qubits only");
                    }
                    mixture_candidate(lambda)?
                }
            };
            let cert = gradient_scan(&sigma, &rho, samples, seed)?;
            print_certificate(&cert);
            let (label, outcome) = verdict(&cert);
            println!("{label}");
            Ok(outcome)
        }
        Command::Overlap {
            graph,
            restarts,
            seed,
        } => {
            let g = graph_of(&graph)?;
            let best = max_product_overlap(&cluster_state(&g)?, restarts, seed)?;
            println!("max overlap = {:.9}", best.value);
            println!("-log2 overlap = {:.9}", -best.value.log2());
            println!("argmax (theta, phi) = {}", format_angles(&best.argmax));
            Ok(Outcome::Done)
        }
        Command::LambdaStar { omega } => {
            let res = lambda_star(omega)?;
            println!("omega = {:.9}", res.omega);
            println!("lambda* = {:.9}", res.lambda_star);
            println!("objective at min = {:.9}", res.objective_at_min);
            println!("|formula| = {:.9}", res.formula_value);
            println!("formula (signed) = {:.9}", res.formula_signed);
            match res.flat_interval {
                Some((a, b)) => println!("flat interval = [{a:.9}, {b:.9}]"),
                None => println!("flat interval = none"),
            }
            Ok(Outcome::Done)
        }
        Command::Surface { resolution, out } => {
            let points = overlap_surface(resolution)?;
            with_output(out.as_deref(), |w| Ok(write_surface_csv(&points, w)?))?;
            Ok(Outcome::Done)
        }
        Command::Spectrum { graph, coupling } => {
            let g = graph_of(&graph)?;
            for level in spectrum(&g, coupling)? {
                println!("E = {:.9}  degeneracy = {}", level.energy, level.degeneracy);
            }
            Ok(Outcome::Done)
        }
        Command::Factorize { k, trials, seed } => {
            let rep = factorization_check(k, trials, seed)?;
            println!("k = {}, trials = {}", rep.k, rep.trials);
            println!("max deviation = {:.9e}", rep.max_deviation);
            println!(
                "worst lhs = {:.9}, rhs = {:.9}",
                rep.worst_lhs, rep.worst_rhs
            );
            println!(
                "worst sample (theta, phi) = {}",
                format_angles(&rep.worst_sample)
            );
            Ok(Outcome::Done)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 0 for --help and --version and 2 for usage errors
            e.exit();
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::CertificateFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
