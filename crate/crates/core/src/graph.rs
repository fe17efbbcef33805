//! Qubit graphs, stabilizer generators, the stabilizer Hamiltonian and the
//! pure and thermal cluster states it defines.
//!
//! Qubits are 0-indexed in the API. Graph files and graph spec strings use
//! 1-indexed qubits.

use nalgebra::DMatrix;
use std::collections::VecDeque;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::{
    bit_shift, check_ket_size, hermitian_eig, r, ComplexMatrix, DensityOp, Ket, C64,
    MAX_DENSE_QUBITS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Color {
    A,
    B,
}

/// Undirected bipartite graph over `n` qubits with a proper 2-coloring.
///
/// Within every connected component the `A` class is the smaller one; on a
/// tie it holds the component's lowest-indexed qubit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QubitGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    colors: Vec<Color>,
}

impl QubitGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one qubit".into()));
        }
        check_ket_size(n)?;
        let mut normalized: Vec<(usize, usize)> = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::QubitOutOfRange { index: a.max(b), n });
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on qubit {}", a + 1)));
            }
            let e = (a.min(b), a.max(b));
            if normalized.contains(&e) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    e.0 + 1,
                    e.1 + 1
                )));
            }
            normalized.push(e);
        }
        let colors = two_color(n, &normalized)?;
        Ok(Self {
            n,
            edges: normalized,
            colors,
        })
    }

    /// Open chain `0 - 1 - ... - (n-1)`.
    pub fn chain(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    /// Open `rows x cols` grid with row-major numbering.
    pub fn lattice(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidGraph(
                "lattice dimensions must be >= 1".into(),
            ));
        }
        let idx = |row: usize, col: usize| row * cols + col;
        let mut edges = Vec::new();
        for row in 0..rows {
            for col in 1..cols {
                edges.push((idx(row, col - 1), idx(row, col)));
            }
        }
        for row in 1..rows {
            for col in 0..cols {
                edges.push((idx(row - 1, col), idx(row, col)));
            }
        }
        Self::new(rows * cols, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn color(&self, q: usize) -> Color {
        self.colors[q]
    }

    pub fn class(&self, color: Color) -> Vec<usize> {
        (0..self.n).filter(|&q| self.colors[q] == color).collect()
    }

    pub fn class_a(&self) -> Vec<usize> {
        self.class(Color::A)
    }

    pub fn class_b(&self) -> Vec<usize> {
        self.class(Color::B)
    }

    pub fn neighbors(&self, q: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == q {
                    Some(b)
                } else if b == q {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }
}

fn two_color(n: usize, edges: &[(usize, usize)]) -> Result<Vec<Color>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut side: Vec<Option<bool>> = vec![None; n];
    let mut colors = vec![Color::A; n];
    for start in 0..n {
        if side[start].is_some() {
            continue;
        }
        let mut component = vec![start];
        side[start] = Some(true);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let s = side[v].unwrap();
            for &w in &adj[v] {
                match side[w] {
                    None => {
                        side[w] = Some(!s);
                        component.push(w);
                        queue.push_back(w);
                    }
                    Some(t) if t == s => {
                        return Err(Error::NotBipartite(v.min(w) + 1, v.max(w) + 1));
                    }
                    Some(_) => {}
                }
            }
        }
        let first = component.iter().filter(|&&v| side[v] == Some(true)).count();
        let second = component.len() - first;
        let first_is_a = first <= second;
        for &v in &component {
            colors[v] = if side[v] == Some(first_is_a) {
                Color::A
            } else {
                Color::B
            };
        }
    }
    Ok(colors)
}

/// How to build a [`QubitGraph`]: `chain:N`, `lattice:RxC` or `file:<path>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphSpec {
    Chain(usize),
    Lattice(usize, usize),
    File(PathBuf),
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadGraphSpec(s.to_string());
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "chain" => Ok(GraphSpec::Chain(arg.trim().parse().map_err(|_| bad())?)),
            "lattice" => {
                let (rows, cols) = arg.split_once(['x', 'X']).ok_or_else(bad)?;
                Ok(GraphSpec::Lattice(
                    rows.trim().parse().map_err(|_| bad())?,
                    cols.trim().parse().map_err(|_| bad())?,
                ))
            }
            "file" if !arg.is_empty() => Ok(GraphSpec::File(PathBuf::from(arg))),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Chain(n) => write!(f, "chain:{n}"),
            GraphSpec::Lattice(rows, cols) => write!(f, "lattice:{rows}x{cols}"),
            GraphSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

pub fn make_graph(spec: &GraphSpec) -> Result<QubitGraph> {
    match spec {
        GraphSpec::Chain(n) => QubitGraph::chain(*n),
        GraphSpec::Lattice(rows, cols) => QubitGraph::lattice(*rows, *cols),
        GraphSpec::File(path) => read_graph_file(path),
    }
}

pub fn read_graph_file(path: &Path) -> Result<QubitGraph> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_graph_text(&text)
}

/// Parses `n <count>` followed by 1-indexed `i j` edge lines; `#` starts a comment.
pub fn parse_graph_text(text: &str) -> Result<QubitGraph> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::InvalidGraph(format!("line {}: {msg}", lineno + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        match n {
            None => {
                if fields.len() != 2 || fields[0] != "n" {
                    return Err(bad("expected `n <count>` header"));
                }
                n = Some(fields[1].parse().map_err(|_| bad("bad qubit count"))?);
            }
            Some(count) => {
                if fields.len() != 2 {
                    return Err(bad("expected `i j`"));
                }
                let i: usize = fields[0].parse().map_err(|_| bad("bad vertex index"))?;
                let j: usize = fields[1].parse().map_err(|_| bad("bad vertex index"))?;
                if i == 0 || j == 0 || i > count || j > count {
                    return Err(bad("vertex index outside 1..=n"));
                }
                edges.push((i - 1, j - 1));
            }
        }
    }
    let n = n.ok_or_else(|| Error::InvalidGraph("missing `n <count>` header".into()))?;
    QubitGraph::new(n, edges)
}

/// Single-site factor of a [`PauliString`]. `XZ` is the real product `X·Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliLetter {
    I,
    X,
    Z,
    XZ,
}

/// Signed Pauli operator `sign · X^x Z^z` (Z part applied first).
///
/// Products of such strings only ever pick up a real sign, so the group the
/// stabilizer generators span stays inside this representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PauliString {
    n: usize,
    x_mask: usize,
    z_mask: usize,
    negative: bool,
}

impl PauliString {
    pub fn from_letters(letters: &[PauliLetter], negative: bool) -> Result<Self> {
        let n = letters.len();
        check_ket_size(n)?;
        let mut x_mask = 0;
        let mut z_mask = 0;
        for (q, l) in letters.iter().enumerate() {
            let bit = 1 << bit_shift(n, q);
            match l {
                PauliLetter::I => {}
                PauliLetter::X => x_mask |= bit,
                PauliLetter::Z => z_mask |= bit,
                PauliLetter::XZ => {
                    x_mask |= bit;
                    z_mask |= bit;
                }
            }
        }
        Ok(Self {
            n,
            x_mask,
            z_mask,
            negative,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x_mask: 0,
            z_mask: 0,
            negative: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }

    pub fn letter(&self, q: usize) -> PauliLetter {
        let bit = 1 << bit_shift(self.n, q);
        match (self.x_mask & bit != 0, self.z_mask & bit != 0) {
            (false, false) => PauliLetter::I,
            (true, false) => PauliLetter::X,
            (false, true) => PauliLetter::Z,
            (true, true) => PauliLetter::XZ,
        }
    }

    pub fn letters(&self) -> Vec<PauliLetter> {
        (0..self.n).map(|q| self.letter(q)).collect()
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &PauliString) -> PauliString {
        assert_eq!(self.n, other.n);
        // Z^{z1} X^{x2} = (-1)^{|x2 & z1|} X^{x2} Z^{z1}
        let flip = (other.x_mask & self.z_mask).count_ones() % 2 == 1;
        PauliString {
            n: self.n,
            x_mask: self.x_mask ^ other.x_mask,
            z_mask: self.z_mask ^ other.z_mask,
            negative: self.negative ^ other.negative ^ flip,
        }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x_mask & other.z_mask).count_ones() + (self.z_mask & other.x_mask).count_ones())
            .is_multiple_of(2)
    }

    /// Image of basis state `k`: `P|k> = value · |index>`.
    #[inline]
    fn image(&self, k: usize) -> (usize, f64) {
        let parity = (k & self.z_mask).count_ones() % 2 == 1;
        let s = if parity ^ self.negative { -1.0 } else { 1.0 };
        (k ^ self.x_mask, s)
    }

    pub fn apply(&self, psi: &Ket) -> Result<Ket> {
        if psi.n_qubits() != self.n {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.n,
                found: psi.dim(),
            });
        }
        let src = psi.amplitudes();
        let mut out = vec![C64::new(0.0, 0.0); src.len()];
        for (k, a) in src.iter().enumerate() {
            let (t, s) = self.image(k);
            out[t] = a * s;
        }
        Ket::new(out)
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let mut m = ComplexMatrix::zeros(self.n)?.into_matrix();
        for k in 0..(1usize << self.n) {
            let (t, s) = self.image(k);
            m[(t, k)] = r(s);
        }
        ComplexMatrix::new(m)
    }

    /// `self · m` for a dense matrix over the same register.
    pub(crate) fn left_multiply(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let d = m.nrows();
        let mut out = DMatrix::zeros(d, d);
        for k in 0..d {
            let (t, s) = self.image(k);
            out.row_mut(t).copy_from(&(m.row(k) * r(s)));
        }
        out
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            f.write_str("-")?;
        }
        for l in self.letters() {
            f.write_str(match l {
                PauliLetter::I => "I",
                PauliLetter::X => "X",
                PauliLetter::Z => "Z",
                PauliLetter::XZ => "(XZ)",
            })?;
        }
        Ok(())
    }
}

/// Generators `K_j = X_j ∏_{i ∈ N(j)} Z_i`, one per qubit.
pub fn stabilizers(g: &QubitGraph) -> Vec<PauliString> {
    (0..g.n())
        .map(|j| {
            let mut letters = vec![PauliLetter::I; g.n()];
            letters[j] = PauliLetter::X;
            for i in g.neighbors(j) {
                letters[i] = PauliLetter::Z;
            }
            PauliString::from_letters(&letters, false).expect("size checked by graph")
        })
        .collect()
}

fn check_dense_graph(g: &QubitGraph) -> Result<()> {
    if g.n() > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits {
            qubits: g.n(),
            max: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

/// `H = -J Σ_j K_j`.
pub fn hamiltonian(g: &QubitGraph, coupling: f64) -> Result<ComplexMatrix> {
    check_dense_graph(g)?;
    let d = 1usize << g.n();
    let mut h = DMatrix::zeros(d, d);
    for k in stabilizers(g) {
        for b in 0..d {
            let (t, s) = k.image(b);
            h[(t, b)] += r(-coupling * s);
        }
    }
    ComplexMatrix::new(h)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyLevel {
    pub energy: f64,
    pub degeneracy: usize,
}

/// Distinct Hamiltonian eigenvalues, ascending, with multiplicities.
pub fn spectrum(g: &QubitGraph, coupling: f64) -> Result<Vec<EnergyLevel>> {
    let h = hamiltonian(g, coupling)?;
    let eig = hermitian_eig(&h)?;
    let tol = 1e-8 * (1.0 + coupling.abs() * g.n() as f64);
    let mut levels: Vec<EnergyLevel> = Vec::new();
    let mut sum = 0.0;
    for &e in &eig.values {
        match levels.last_mut() {
            Some(last) if (e - sum / last.degeneracy as f64).abs() <= tol => {
                last.degeneracy += 1;
                sum += e;
                last.energy = sum / last.degeneracy as f64;
            }
            _ => {
                sum = e;
                levels.push(EnergyLevel {
                    energy: e,
                    degeneracy: 1,
                });
            }
        }
    }
    Ok(levels)
}

/// `∏_{(i,j) ∈ E} CZ_ij |+>^{⊗n}`; the CZ layer only flips signs, one per
/// edge whose endpoints are both `1`.
pub fn cluster_state(g: &QubitGraph) -> Result<Ket> {
    check_ket_size(g.n())?;
    let n = g.n();
    let masks: Vec<usize> = g
        .edges()
        .iter()
        .map(|&(a, b)| (1 << bit_shift(n, a)) | (1 << bit_shift(n, b)))
        .collect();
    let d = 1usize << n;
    let amp = (d as f64).sqrt().recip();
    let amps = (0..d)
        .map(|k| {
            let odd = masks.iter().filter(|&&m| k & m == m).count() % 2 == 1;
            r(if odd { -amp } else { amp })
        })
        .collect();
    Ok(Ket::from_trusted(nalgebra::DVector::from_vec(amps)))
}

/// Coupling, inverse temperature and Boltzmann constant of a thermal state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalParams {
    pub coupling: f64,
    pub beta: f64,
    pub k_b: f64,
}

impl ThermalParams {
    pub fn new(coupling: f64, beta: f64) -> Self {
        Self {
            coupling,
            beta,
            k_b: 1.0,
        }
    }

    pub fn from_temperature(coupling: f64, temperature: f64, k_b: f64) -> Self {
        Self {
            coupling,
            beta: 1.0 / (k_b * temperature),
            k_b,
        }
    }

    /// `tanh(βJ)`.
    pub fn omega(&self) -> f64 {
        (self.beta * self.coupling).tanh()
    }

    pub fn temperature(&self) -> f64 {
        1.0 / (self.k_b * self.beta)
    }
}

/// Temperature at which `tanh(J / (k_B T)) = omega`; zero for `omega = 1`.
pub fn temperature_for_omega(omega: f64, coupling: f64, k_b: f64) -> f64 {
    if omega >= 1.0 {
        0.0
    } else {
        coupling / (k_b * omega.atanh())
    }
}

/// `2^{-N} ∏_j (I + ω K_j)`.
pub fn thermal_state(g: &QubitGraph, omega: f64) -> Result<DensityOp> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::OutOfRange {
            name: "omega",
            value: omega,
            range: "[0, 1]",
        });
    }
    check_dense_graph(g)?;
    let d = 1usize << g.n();
    let mut m: DMatrix<C64> = DMatrix::identity(d, d) * r(1.0 / d as f64);
    for k in stabilizers(g) {
        let km = k.left_multiply(&m);
        m += km * r(omega);
    }
    Ok(DensityOp::from_trusted(
        ComplexMatrix::from_trusted(m).hermitian_part(),
    ))
}

/// `exp(-βH) / Tr exp(-βH)` from the eigen-decomposition of `H`.
pub fn gibbs_state(g: &QubitGraph, params: ThermalParams) -> Result<DensityOp> {
    if !params.beta.is_finite() {
        return Err(Error::OutOfRange {
            name: "beta",
            value: params.beta,
            range: "finite values",
        });
    }
    let h = hamiltonian(g, params.coupling)?;
    let eig = hermitian_eig(&h)?;
    let ground = eig.values[0];
    let z: f64 = eig
        .values
        .iter()
        .map(|e| (-params.beta * (e - ground)).exp())
        .sum();
    let m = eig.apply_function(|e| (-params.beta * (e - ground)).exp() / z);
    Ok(DensityOp::from_trusted(
        ComplexMatrix::from_trusted(m).hermitian_part(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::testutil::rng;
    use crate::tensor::{apply_gate, gates};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn chain_two() {
        let g = make_graph(&"chain:2".parse().unwrap()).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert_eq!(g.class_a(), vec![0]);
        assert_eq!(g.class_b(), vec![1]);
    }

    #[test]
    fn lattice_two_by_two() {
        let g = make_graph(&"lattice:2x2".parse().unwrap()).unwrap();
        let mut edges = g.edges().to_vec();
        edges.sort();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
        assert_eq!(g.class_a(), vec![0, 3]);
        assert_eq!(g.class_b(), vec![1, 2]);
    }

    #[test]
    fn triangle_rejected() {
        let err = QubitGraph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap_err();
        assert!(matches!(err, Error::NotBipartite(..)));
        assert!(err.to_string().contains("odd cycle"));
    }

    #[test]
    fn graph_errors() {
        assert!(QubitGraph::chain(0).is_err());
        assert!(QubitGraph::lattice(0, 3).is_err());
        assert!(QubitGraph::new(2, [(0, 0)]).is_err());
        assert!(QubitGraph::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(QubitGraph::new(2, [(0, 2)]).is_err());
    }

    #[test]
    fn color_classes_follow_components() {
        // odd chain: A is the smaller class
        let g = QubitGraph::chain(3).unwrap();
        assert_eq!(g.class_a(), vec![1]);
        // isolated qubit contributes nothing to A
        let g = QubitGraph::new(3, [(1, 2)]).unwrap();
        assert_eq!(g.class_a(), vec![1]);
        assert_eq!(g.class_b(), vec![0, 2]);
        for &(a, b) in QubitGraph::lattice(3, 3).unwrap().edges() {
            let g = QubitGraph::lattice(3, 3).unwrap();
            assert_ne!(g.color(a), g.color(b));
        }
    }

    #[test]
    fn spec_strings() {
        assert_eq!("chain:6".parse::<GraphSpec>().unwrap(), GraphSpec::Chain(6));
        assert_eq!(
            "lattice:2x3".parse::<GraphSpec>().unwrap(),
            GraphSpec::Lattice(2, 3)
        );
        assert_eq!(
            "file:g.txt".parse::<GraphSpec>().unwrap(),
            GraphSpec::File("g.txt".into())
        );
        for bad in ["chain", "ring:4", "lattice:2", "chain:x", "file:"] {
            assert!(bad.parse::<GraphSpec>().is_err(), "{bad}");
        }
        assert_eq!(GraphSpec::Lattice(2, 3).to_string(), "lattice:2x3");
    }

    #[test]
    fn graph_file_format() {
        let g = parse_graph_text("# square\nn 4\n1 2\n2 4 # right edge\n\n4 3\n3 1\n").unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.edges().len(), 4);
        assert_eq!(g.class_a(), vec![0, 3]);
        assert!(parse_graph_text("1 2\n").is_err());
        assert!(parse_graph_text("n 2\n1 3\n").is_err());
        assert!(parse_graph_text("n 3\n1 2\n2 3\n3 1\n").is_err());
        assert!(parse_graph_text("").is_err());
    }

    #[test]
    fn cluster_examples() {
        let psi = cluster_state(&QubitGraph::chain(2).unwrap()).unwrap();
        let expected = [0.5, 0.5, 0.5, -0.5];
        for (a, b) in psi.amplitudes().iter().zip(expected) {
            assert_eq!(*a, r(b));
        }
        let psi = cluster_state(&QubitGraph::chain(1).unwrap()).unwrap();
        for a in psi.amplitudes() {
            assert_abs_diff_eq!(a.re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        }
    }

    #[test]
    fn cluster_matches_cz_circuit() {
        for g in [
            QubitGraph::chain(5).unwrap(),
            QubitGraph::lattice(2, 3).unwrap(),
        ] {
            let mut psi = Ket::plus(g.n()).unwrap();
            for &(a, b) in g.edges() {
                psi = apply_gate(&psi, &gates::cz(), &[a, b]).unwrap();
            }
            let direct = cluster_state(&g).unwrap();
            let amp = (g.n() as f64 * -0.5).exp2();
            for (x, y) in direct.amplitudes().iter().zip(psi.amplitudes()) {
                assert!((x - y).norm() < 1e-14);
                assert_abs_diff_eq!(x.norm(), amp, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn stabilizer_examples() {
        let s: Vec<String> = stabilizers(&QubitGraph::chain(2).unwrap())
            .iter()
            .map(|k| k.to_string())
            .collect();
        assert_eq!(s, vec!["XZ", "ZX"]);
        assert_eq!(
            stabilizers(&QubitGraph::chain(3).unwrap())[1].to_string(),
            "ZXZ"
        );

        let g = QubitGraph::chain(4).unwrap();
        let psi = cluster_state(&g).unwrap();
        for k in stabilizers(&g) {
            let out = k.apply(&psi).unwrap();
            for (a, b) in out.amplitudes().iter().zip(psi.amplitudes()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn stabilizers_commute_and_fix_cluster() {
        let graphs = [
            QubitGraph::chain(8).unwrap(),
            QubitGraph::lattice(2, 4).unwrap(),
            QubitGraph::lattice(2, 3).unwrap(),
        ];
        for g in graphs {
            let ks = stabilizers(&g);
            let mats: Vec<ComplexMatrix> = ks.iter().map(|k| k.to_matrix().unwrap()).collect();
            for i in 0..ks.len() {
                for j in 0..ks.len() {
                    assert!(ks[i].commutes_with(&ks[j]));
                    if j == i + 1 {
                        let comm = mats[i].commutator(&mats[j]);
                        assert_eq!(comm.frobenius_norm(), 0.0);
                    }
                }
            }
            let psi = cluster_state(&g).unwrap();
            for k in &ks {
                let out = k.apply(&psi).unwrap();
                let err = out
                    .amplitudes()
                    .iter()
                    .zip(psi.amplitudes())
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                assert!(err < 1e-12);
            }
        }
    }

    #[test]
    fn generator_products_stay_real() {
        // K1 K2 on chain:2 is -(XZ)⊗(XZ), a real operator proportional to Y⊗Y.
        let g = QubitGraph::chain(2).unwrap();
        let ks = stabilizers(&g);
        let p = ks[0].mul(&ks[1]);
        assert_eq!(p.to_string(), "-(XZ)(XZ)");
        let yy = crate::tensor::kron(&gates::pauli_y(), &gates::pauli_y()).unwrap();
        assert!(p.to_matrix().unwrap().max_abs_diff(&yy) < 1e-15);

        let g = QubitGraph::lattice(2, 3).unwrap();
        let ks = stabilizers(&g);
        let mut gen = rng(17);
        for _ in 0..40 {
            let mut acc = PauliString::identity(g.n());
            let mut dense = ComplexMatrix::identity(g.n()).unwrap();
            for k in &ks {
                if gen.random::<bool>() {
                    acc = acc.mul(k);
                    dense = &dense * &k.to_matrix().unwrap();
                }
            }
            assert!(acc.to_matrix().unwrap().max_abs_diff(&dense) < 1e-12);
            assert!(dense.as_matrix().iter().all(|z| z.im == 0.0));
        }
    }

    #[test]
    fn hamiltonian_chain_two() {
        let levels = spectrum(&QubitGraph::chain(2).unwrap(), 1.0).unwrap();
        let got: Vec<(f64, usize)> = levels.iter().map(|l| (l.energy, l.degeneracy)).collect();
        assert_eq!(got.len(), 3);
        for ((e, d), (ee, dd)) in got.iter().zip([(-2.0, 1), (0.0, 2), (2.0, 1)]) {
            assert_abs_diff_eq!(*e, ee, epsilon = 1e-12);
            assert_eq!(*d, dd);
        }
    }

    #[test]
    fn hamiltonian_ground_state() {
        let g = QubitGraph::chain(4).unwrap();
        let levels = spectrum(&g, 1.0).unwrap();
        assert_abs_diff_eq!(levels[0].energy, -4.0, epsilon = 1e-12);
        assert_eq!(levels[0].degeneracy, 1);
        let h = hamiltonian(&g, 1.0).unwrap();
        let psi = cluster_state(&g).unwrap();
        let e = psi.as_vector().dotc(&(h.as_matrix() * psi.as_vector()));
        assert_abs_diff_eq!(e.re, -4.0, epsilon = 1e-12);
    }

    #[test]
    fn hamiltonian_degeneracies() {
        for (g, coupling) in [
            (QubitGraph::chain(6).unwrap(), 1.0),
            (QubitGraph::lattice(2, 3).unwrap(), 0.5),
        ] {
            let n = g.n();
            let levels = spectrum(&g, coupling).unwrap();
            assert_eq!(levels.len(), n + 1);
            for (k, l) in levels.iter().enumerate() {
                assert_abs_diff_eq!(
                    l.energy,
                    coupling * (2.0 * k as f64 - n as f64),
                    epsilon = 1e-10
                );
                assert_eq!(l.degeneracy, binomial(n, k));
            }
        }
    }

    #[test]
    fn thermal_limits() {
        let g = QubitGraph::chain(3).unwrap();
        let hot = thermal_state(&g, 0.0).unwrap();
        assert!(
            hot.matrix()
                .max_abs_diff(DensityOp::maximally_mixed(3).unwrap().matrix())
                < 1e-15
        );
        let cold = thermal_state(&g, 1.0).unwrap();
        let pure = cluster_state(&g).unwrap().projector().unwrap();
        assert!(cold.matrix().max_abs_diff(pure.matrix()) < 1e-14);
        assert!(thermal_state(&g, 1.5).is_err());
        assert!(thermal_state(&g, -0.1).is_err());
    }

    #[test]
    fn gibbs_matches_product_form() {
        let g = QubitGraph::chain(4).unwrap();
        let params = ThermalParams::new(1.0, 0.7);
        let a = gibbs_state(&g, params).unwrap();
        let b = thermal_state(&g, params.omega()).unwrap();
        assert!(a.matrix().frobenius_distance(b.matrix()) < 1e-10);

        let hot = gibbs_state(&g, ThermalParams::new(1.0, 0.0)).unwrap();
        assert!(
            hot.matrix()
                .max_abs_diff(DensityOp::maximally_mixed(4).unwrap().matrix())
                < 1e-12
        );

        let cold = gibbs_state(&g, ThermalParams::new(1.0, 50.0)).unwrap();
        let pure = cluster_state(&g).unwrap().projector().unwrap();
        assert!(cold.matrix().frobenius_distance(pure.matrix()) < 1e-10);

        assert!(gibbs_state(&g, ThermalParams::new(1.0, f64::INFINITY)).is_err());
    }

    #[test]
    fn gibbs_random_grid() {
        let mut gen = rng(2024);
        for trial in 0..10 {
            let g = match trial % 3 {
                0 => QubitGraph::chain(2 + trial % 7).unwrap(),
                1 => QubitGraph::lattice(2, 2 + trial % 3).unwrap(),
                _ => QubitGraph::chain(8).unwrap(),
            };
            let beta = gen.random_range(0.0..3.0);
            let coupling = gen.random_range(0.1..2.0);
            let params = ThermalParams::new(coupling, beta);
            let a = gibbs_state(&g, params).unwrap();
            let b = thermal_state(&g, params.omega()).unwrap();
            assert!(a.matrix().frobenius_distance(b.matrix()) < 1e-10);
        }
    }

    #[test]
    fn thermal_spectrum_and_purity() {
        for (g, omega) in [
            (QubitGraph::chain(4).unwrap(), 0.3),
            (QubitGraph::lattice(2, 3).unwrap(), 0.77),
            (QubitGraph::chain(5).unwrap(), 0.95),
        ] {
            let n = g.n();
            let rho = thermal_state(&g, omega).unwrap();
            let eig = hermitian_eig(rho.matrix()).unwrap();
            let mut expected = Vec::new();
            for k in 0..=n {
                let v = (1.0 + omega).powi((n - k) as i32) * (1.0 - omega).powi(k as i32)
                    / (1u64 << n) as f64;
                expected.extend(std::iter::repeat_n(v, binomial(n, k)));
            }
            expected.sort_by(f64::total_cmp);
            for (a, b) in eig.values.iter().zip(&expected) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
            }
            assert_abs_diff_eq!(
                rho.purity(),
                ((1.0 + omega * omega) / 2.0).powi(n as i32),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn thermal_params() {
        let p = ThermalParams::from_temperature(2.0, 4.0, 0.5);
        assert_abs_diff_eq!(p.beta, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.temperature(), 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.omega(), 1.0f64.tanh(), epsilon = 1e-15);
        let t = temperature_for_omega(p.omega(), 2.0, 0.5);
        assert_abs_diff_eq!(t, 4.0, epsilon = 1e-12);
        assert_eq!(temperature_for_omega(1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn size_limits() {
        let g = QubitGraph::chain(13).unwrap();
        assert!(matches!(
            hamiltonian(&g, 1.0),
            Err(Error::TooManyQubits { .. })
        ));
        assert!(matches!(
            thermal_state(&g, 0.5),
            Err(Error::TooManyQubits { .. })
        ));
        assert!(cluster_state(&g).is_ok());
        assert!(QubitGraph::chain(21).is_err());
    }
}
